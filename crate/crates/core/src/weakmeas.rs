//! Weak values, pre/post-selected operators, the non-Hermitian variance,
//! and the weak-measurement uncertainty relation with its derivation
//! identities.
//!
//! A pre- and post-selected (PPS) ensemble (|ψ⟩, |φ⟩) with overlap
//! p = |⟨φ|ψ⟩|² turns an observable A into the rank-one non-Hermitian
//! operator A_w = |φ⟩⟨φ|A/p, whose expectation in |ψ⟩ is the weak value
//! ⟨φ|A|ψ⟩/⟨φ|ψ⟩. The variance of such operators obeys a sum uncertainty
//! relation whose right-hand side mirrors the Hermitian case with 1/p
//! amplification.

use rand::Rng;
use serde::Serialize;

use crate::ensembles::haar_state;
use crate::numkernel::{self, adjoint, inner, outer, CMatrix, CVector, C64};
use crate::relations::{BoundSet, RelationId};
use crate::{tol, Error, Result};

/// Default post-selection overlap floor; trials below it are resampled.
pub const DEFAULT_MIN_OVERLAP: f64 = 1e-3;

/// A pre- and post-selected ensemble: |ψ⟩, |φ⟩, and p = |⟨φ|ψ⟩|².
#[derive(Debug, Clone)]
pub struct PpsEnsemble {
    pre: CVector,
    post: CVector,
    overlap_p: f64,
}

impl PpsEnsemble {
    /// Builds the ensemble, validating normalization and a nonzero overlap.
    pub fn new(pre: CVector, post: CVector) -> Result<Self> {
        if pre.len() != post.len() {
            return Err(Error::DimMismatch {
                left: pre.len(),
                right: post.len(),
            });
        }
        numkernel::check_finite_vector(&pre)?;
        numkernel::check_finite_vector(&post)?;
        numkernel::check_normalized(&pre, tol::INPUT)?;
        numkernel::check_normalized(&post, tol::INPUT)?;
        let overlap_p = inner(&post, &pre)?.norm_sqr();
        if overlap_p <= 0.0 {
            return Err(Error::OverlapBelowThreshold {
                p: overlap_p,
                min: f64::MIN_POSITIVE,
            });
        }
        Ok(PpsEnsemble {
            pre,
            post,
            overlap_p,
        })
    }

    /// Samples a Haar-random ensemble, resampling the post-selection until
    /// p ≥ `min_overlap`. Returns the ensemble and the rejection count.
    pub fn sample<R: Rng + ?Sized>(
        dim: usize,
        min_overlap: f64,
        rng: &mut R,
    ) -> Result<(Self, u64)> {
        if !(min_overlap > 0.0 && min_overlap <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "min_overlap must lie in (0, 1] (got {min_overlap})"
            )));
        }
        let pre = haar_state(dim, rng)?;
        let mut rejections = 0u64;
        loop {
            let post = haar_state(dim, rng)?;
            let p = inner(&post, &pre)?.norm_sqr();
            if p >= min_overlap {
                return Ok((
                    PpsEnsemble {
                        pre,
                        post,
                        overlap_p: p,
                    },
                    rejections,
                ));
            }
            rejections += 1;
            if rejections > 1_000_000 {
                return Err(Error::InvalidConfig(format!(
                    "post-selection rejection did not terminate (min_overlap = {min_overlap})"
                )));
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.pre.len()
    }

    /// The pre-selected state |ψ⟩.
    pub fn pre(&self) -> &CVector {
        &self.pre
    }

    /// The post-selected state |φ⟩.
    pub fn post(&self) -> &CVector {
        &self.post
    }

    /// p = |⟨φ|ψ⟩|².
    pub fn overlap_p(&self) -> f64 {
        self.overlap_p
    }

    fn check_overlap(&self, min_overlap: f64) -> Result<()> {
        if self.overlap_p < min_overlap {
            return Err(Error::OverlapBelowThreshold {
                p: self.overlap_p,
                min: min_overlap,
            });
        }
        Ok(())
    }
}

/// The rank-one non-Hermitian operator A_w = |φ⟩⟨φ|A/p for a PPS ensemble.
#[derive(Debug, Clone)]
pub struct WeakOperator {
    /// A_w itself.
    pub matrix: CMatrix,
    /// The observable A it was built from.
    pub source: CMatrix,
    pub ensemble: PpsEnsemble,
}

impl WeakOperator {
    /// ⟨ψ|A_w|ψ⟩ in the ensemble's pre-selected state; equals the weak
    /// value of the source observable.
    pub fn expectation_in_pre(&self) -> C64 {
        numkernel::expectation(&self.matrix, self.ensemble.pre())
            .expect("operator and ensemble share a dimension")
    }

    /// Checks the defining identity p·A_w = |φ⟩⟨φ|A entrywise and the
    /// rank-one structure through 2×2 minors, both at `tol` relative to the
    /// matrix scale.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let p = self.ensemble.overlap_p();
        let scaled = self.matrix.mapv(|c| c * p);
        let direct = outer(
            self.ensemble.post(),
            &self.source.dot(self.ensemble.post()),
        );
        let dev = numkernel::max_abs_diff(&scaled, &direct);
        let scale = self.matrix.iter().map(|c| c.norm()).fold(1.0, f64::max);
        if dev > tol * scale {
            return Err(Error::NotHermitian {
                deviation: dev,
                tol: tol * scale,
            });
        }
        let d = self.matrix.nrows();
        let minor_scale = (scale * scale).max(1.0);
        for i in 0..d {
            for k in (i + 1)..d {
                for j in 0..d {
                    for l in (j + 1)..d {
                        let minor = self.matrix[(i, j)] * self.matrix[(k, l)]
                            - self.matrix[(i, l)] * self.matrix[(k, j)];
                        if minor.norm() > tol * minor_scale {
                            return Err(Error::InvalidConfig(format!(
                                "weak operator is not rank one: minor ({i},{j},{k},{l}) = {:e}",
                                minor.norm()
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Weak values, non-Hermitian variances, and the ⟨CD†⟩ correlation for a
/// pair of observables on one ensemble.
#[derive(Debug, Clone)]
pub struct WeakMoments {
    /// ⟨A_w⟩ and ⟨B_w⟩ in |ψ⟩ (the weak values).
    pub wv_a: C64,
    pub wv_b: C64,
    /// Non-Hermitian variances ΔA_w², ΔB_w².
    pub var_wa: f64,
    pub var_wb: f64,
    /// ⟨CD†⟩ with C = A_w − ⟨A_w⟩, D = B_w − ⟨B_w⟩.
    pub cd_corr: C64,
}

/// The weak value ⟨φ|A|ψ⟩ / ⟨φ|ψ⟩.
pub fn weak_value(a: &CMatrix, ens: &PpsEnsemble, min_overlap: f64) -> Result<C64> {
    numkernel::check_hermitian(a, tol::INPUT)?;
    if a.nrows() != ens.dim() {
        return Err(Error::DimMismatch {
            left: a.nrows(),
            right: ens.dim(),
        });
    }
    ens.check_overlap(min_overlap)?;
    let num = inner(ens.post(), &a.dot(ens.pre()))?;
    let den = inner(ens.post(), ens.pre())?;
    Ok(num / den)
}

/// Builds A_w = |φ⟩⟨φ|A / p.
pub fn weak_operator(a: &CMatrix, ens: &PpsEnsemble, min_overlap: f64) -> Result<WeakOperator> {
    numkernel::check_hermitian(a, tol::INPUT)?;
    if a.nrows() != ens.dim() {
        return Err(Error::DimMismatch {
            left: a.nrows(),
            right: ens.dim(),
        });
    }
    ens.check_overlap(min_overlap)?;
    let p = ens.overlap_p();
    // |φ⟩⟨φ|A = |φ⟩⟨Aφ| for Hermitian A.
    let matrix = outer(ens.post(), &a.dot(ens.post())).mapv(|c| c / p);
    Ok(WeakOperator {
        matrix,
        source: a.clone(),
        ensemble: ens.clone(),
    })
}

/// Variance of a general (not necessarily Hermitian) operator:
/// ΔX² = ⟨(X−⟨X⟩)(X†−⟨X†⟩)⟩ = ⟨XX†⟩ − |⟨X⟩|², clamped at 0 against
/// roundoff. Nonnegative for every operator by Cauchy-Schwarz.
pub fn nonhermitian_variance(x: &CMatrix, psi: &CVector) -> Result<f64> {
    if x.nrows() != psi.len() || x.ncols() != psi.len() {
        return Err(Error::DimMismatch {
            left: x.nrows(),
            right: psi.len(),
        });
    }
    numkernel::check_normalized(psi, tol::INPUT)?;
    let xdag_psi = adjoint(x).dot(psi);
    let second = inner(&xdag_psi, &xdag_psi)?.re; // ⟨XX†⟩
    let mean = inner(psi, &x.dot(psi))?;
    Ok((second - mean.norm_sqr()).max(0.0))
}

struct WeakPair {
    aw: WeakOperator,
    bw: WeakOperator,
    moments: WeakMoments,
}

fn weak_pair(a: &CMatrix, b: &CMatrix, ens: &PpsEnsemble, min_overlap: f64) -> Result<WeakPair> {
    let aw = weak_operator(a, ens, min_overlap)?;
    let bw = weak_operator(b, ens, min_overlap)?;
    let psi = ens.pre();
    let wv_a = aw.expectation_in_pre();
    let wv_b = bw.expectation_in_pre();
    let var_wa = nonhermitian_variance(&aw.matrix, psi)?;
    let var_wb = nonhermitian_variance(&bw.matrix, psi)?;
    // ⟨CD†⟩ = ⟨A_w B_w†⟩ − ⟨A_w⟩⟨B_w⟩* with ⟨A_w B_w†⟩ = ⟨A_w†ψ|B_w†ψ⟩.
    let adag_psi = adjoint(&aw.matrix).dot(psi);
    let bdag_psi = adjoint(&bw.matrix).dot(psi);
    let cd_corr = inner(&adag_psi, &bdag_psi)? - wv_a * wv_b.conj();
    Ok(WeakPair {
        aw,
        bw,
        moments: WeakMoments {
            wv_a,
            wv_b,
            var_wa,
            var_wb,
            cd_corr,
        },
    })
}

/// Weak values, variances, and ⟨CD†⟩ for the pair (A, B) on an ensemble.
pub fn weak_moments(
    a: &CMatrix,
    b: &CMatrix,
    ens: &PpsEnsemble,
    min_overlap: f64,
) -> Result<WeakMoments> {
    Ok(weak_pair(a, b, ens, min_overlap)?.moments)
}

/// The ⟨CD†⟩ decomposition identities and their residuals.
///
/// Both sides are computed through genuinely different routes: the left
/// sides from the weak-operator matrices, the right sides from A and B
/// acting on the post-selection directly.
#[derive(Debug, Clone)]
pub struct CdIdentities {
    pub p: f64,
    pub wv_a: C64,
    pub wv_b: C64,
    /// ⟨CD†⟩ and ⟨DC†⟩.
    pub cd: C64,
    pub dc: C64,
    /// ⟨CD† + DC†⟩ against (1/p)⟨φ|{A,B}|φ⟩ − ⟨A_w⟩⟨B_w⟩* − ⟨A_w⟩*⟨B_w⟩.
    pub sum_lhs: C64,
    pub sum_rhs: C64,
    pub sum_residual: f64,
    /// ⟨CD† − DC†⟩ against (1/p)⟨φ|[A,B]|φ⟩ − ⟨A_w⟩⟨B_w⟩* + ⟨A_w⟩*⟨B_w⟩.
    pub diff_lhs: C64,
    pub diff_rhs: C64,
    pub diff_residual: f64,
    /// 2|⟨CD†⟩| against |(1/p)⟨φ|[A,B]|φ⟩ + (1/p)⟨φ|{A,B}|φ⟩ − 2⟨A_w⟩⟨B_w⟩*|.
    pub modulus_lhs: f64,
    pub modulus_rhs: f64,
    pub modulus_residual: f64,
}

pub fn cd_identities(
    a: &CMatrix,
    b: &CMatrix,
    ens: &PpsEnsemble,
    min_overlap: f64,
) -> Result<CdIdentities> {
    let pair = weak_pair(a, b, ens, min_overlap)?;
    let psi = ens.pre();
    let p = ens.overlap_p();
    let wv_a = pair.moments.wv_a;
    let wv_b = pair.moments.wv_b;

    let cd = pair.moments.cd_corr;
    // ⟨DC†⟩ computed independently rather than as the conjugate of ⟨CD†⟩.
    let adag_psi = adjoint(&pair.aw.matrix).dot(psi);
    let bdag_psi = adjoint(&pair.bw.matrix).dot(psi);
    let dc = inner(&bdag_psi, &adag_psi)? - wv_b * wv_a.conj();

    let a_post = a.dot(ens.post());
    let b_post = b.dot(ens.post());
    let cross = inner(&a_post, &b_post)?; // ⟨φ|AB|φ⟩
    let anti_post = cross + cross.conj(); // ⟨φ|{A,B}|φ⟩
    let comm_post = cross - cross.conj(); // ⟨φ|[A,B]|φ⟩

    let sum_lhs = cd + dc;
    let sum_rhs = anti_post / p - wv_a * wv_b.conj() - wv_a.conj() * wv_b;
    let diff_lhs = cd - dc;
    let diff_rhs = comm_post / p - wv_a * wv_b.conj() + wv_a.conj() * wv_b;
    let modulus_lhs = 2.0 * cd.norm();
    let modulus_rhs = (comm_post / p + anti_post / p - 2.0 * wv_a * wv_b.conj()).norm();

    Ok(CdIdentities {
        p,
        wv_a,
        wv_b,
        cd,
        dc,
        sum_lhs,
        sum_rhs,
        sum_residual: (sum_lhs - sum_rhs).norm(),
        diff_lhs,
        diff_rhs,
        diff_residual: (diff_lhs - diff_rhs).norm(),
        modulus_lhs,
        modulus_rhs,
        modulus_residual: (modulus_lhs - modulus_rhs).abs(),
    })
}

/// Phase aligning ⟨CD†⟩ onto the nonnegative real axis; 0 when degenerate.
fn weak_alpha(cd: C64) -> f64 {
    if cd.norm() < tol::CORR_DEGENERATE {
        0.0
    } else {
        cd.im.atan2(cd.re)
    }
}

/// The weak-measurement uncertainty relation: ΔA_w² + ΔB_w² against
///
/// |(1/p)⟨φ|[A,B]|φ⟩ + (1/p)⟨φ|{A,B}|φ⟩ − 2⟨A_w⟩⟨B_w⟩*|
///   + |⟨ψ|A_w − e^{iα}B_w|ψ⊥⟩|²,
///
/// with α = arg⟨CD†⟩ and |ψ⊥⟩ any unit state orthogonal to the
/// pre-selection. Valid for every such ψ⊥.
pub fn weak_relation_check(
    a: &CMatrix,
    b: &CMatrix,
    ens: &PpsEnsemble,
    psi_perp: &CVector,
    min_overlap: f64,
) -> Result<BoundSet> {
    numkernel::check_normalized(psi_perp, tol::INPUT)?;
    let overlap = inner(ens.pre(), psi_perp)?.norm();
    if overlap > tol::INPUT {
        return Err(Error::NotOrthogonal {
            overlap,
            tol: tol::INPUT,
        });
    }
    let pair = weak_pair(a, b, ens, min_overlap)?;
    let psi = ens.pre();
    let p = ens.overlap_p();
    let wv_a = pair.moments.wv_a;
    let wv_b = pair.moments.wv_b;

    let a_post = a.dot(ens.post());
    let b_post = b.dot(ens.post());
    let cross = inner(&a_post, &b_post)?;
    let anti_post = cross + cross.conj();
    let comm_post = cross - cross.conj();
    let first = (comm_post / p + anti_post / p - 2.0 * wv_a * wv_b.conj()).norm();

    let alpha = weak_alpha(pair.moments.cd_corr);
    // ⟨ψ|A_w − e^{iα}B_w|ψ⊥⟩ = ⟨(A_w† − e^{−iα}B_w†)ψ | ψ⊥⟩.
    let phase = C64::from_polar(1.0, -alpha);
    let adag_psi = adjoint(&pair.aw.matrix).dot(psi);
    let bdag_psi = adjoint(&pair.bw.matrix).dot(psi);
    let w = &adag_psi - &bdag_psi.mapv(|c| phase * c);
    let second = inner(&w, psi_perp)?.norm_sqr();

    let target = pair.moments.var_wa + pair.moments.var_wb;
    let bound = first + second;
    let gap = target - bound;
    Ok(BoundSet {
        relation: RelationId::Weak,
        target,
        bound,
        gap,
        saturated: gap <= tol::SATURATION * target.max(1.0),
        degenerate: false,
    })
}

/// Trace of the norm inequality behind the weak relation at one probe point
/// (k, τ, |ψ̄⟩).
#[derive(Debug, Clone, Serialize)]
pub struct WeakBoundTrace {
    /// ‖C†ψ − e^{iτ}D†ψ + k(ψ − ψ̄)‖².
    pub norm_sq: f64,
    /// λ = 2(1 − Re⟨ψ|ψ̄⟩).
    pub lambda: f64,
    /// β = 2Re⟨ψ|(−C + e^{−iτ}D)|ψ̄⟩.
    pub beta: f64,
    /// 2Re[e^{iτ}⟨ψ|CD†|ψ⟩] (the proof's π, renamed to avoid the projector).
    pub pi_term: f64,
    /// ΔA_w² + ΔB_w².
    pub target: f64,
    /// −λk² − βk + π_term at the probe k.
    pub expansion: f64,
    /// |norm_sq − (target − expansion)|: the square-modulus expansion check.
    pub consistency_residual: f64,
    /// k* = −β/(2λ), absent when λ collapses.
    pub k_star: Option<f64>,
    /// Bound value −λk² − βk + π_term at k*.
    pub k_star_bound: Option<f64>,
    /// Largest bound value found on a deterministic k-grid around k*.
    pub grid_max: Option<f64>,
    /// Whether k* beat the whole grid (up to roundoff).
    pub k_star_optimal: Option<bool>,
}

/// Evaluates both sides of the norm inequality ‖C†ψ − e^{iτ}D†ψ +
/// k(ψ−ψ̄)‖² ≥ 0 and its quadratic expansion in k, and confirms that
/// k* = −β/(2λ) maximizes the resulting lower bound on a sampled k-grid.
pub fn weak_bound_trace(
    a: &CMatrix,
    b: &CMatrix,
    ens: &PpsEnsemble,
    k: f64,
    tau: f64,
    psi_bar: &CVector,
    min_overlap: f64,
) -> Result<WeakBoundTrace> {
    numkernel::check_normalized(psi_bar, tol::INPUT)?;
    if psi_bar.len() != ens.dim() {
        return Err(Error::DimMismatch {
            left: psi_bar.len(),
            right: ens.dim(),
        });
    }
    let pair = weak_pair(a, b, ens, min_overlap)?;
    let psi = ens.pre();
    let wv_a = pair.moments.wv_a;
    let wv_b = pair.moments.wv_b;

    let lambda = 2.0 * (1.0 - inner(psi, psi_bar)?.re);
    if lambda < tol::DENOM_DEGENERATE && k != 0.0 {
        return Err(Error::DegenerateProbe { lambda, k });
    }

    // C†ψ = A_w†ψ − ⟨A_w⟩*ψ and likewise for D†.
    let adag_psi = adjoint(&pair.aw.matrix).dot(psi);
    let bdag_psi = adjoint(&pair.bw.matrix).dot(psi);
    let cdag_psi = &adag_psi - &psi.mapv(|c| wv_a.conj() * c);
    let ddag_psi = &bdag_psi - &psi.mapv(|c| wv_b.conj() * c);

    let e_tau = C64::from_polar(1.0, tau);
    let shift = psi - psi_bar;
    let mut vec = &cdag_psi - &ddag_psi.mapv(|c| e_tau * c);
    vec.zip_mut_with(&shift, |x, y| *x += C64::new(k, 0.0) * y);
    let norm_sq = inner(&vec, &vec)?.re;

    // β couples the probe direction to C and D: Cψ̄ = A_wψ̄ − ⟨A_w⟩ψ̄.
    let c_bar = &pair.aw.matrix.dot(psi_bar) - &psi_bar.mapv(|c| wv_a * c);
    let d_bar = &pair.bw.matrix.dot(psi_bar) - &psi_bar.mapv(|c| wv_b * c);
    let e_mtau = C64::from_polar(1.0, -tau);
    let combo = &d_bar.mapv(|c| e_mtau * c) - &c_bar;
    let beta = 2.0 * inner(psi, &combo)?.re;

    let pi_term = 2.0 * (e_tau * pair.moments.cd_corr).re;
    let target = pair.moments.var_wa + pair.moments.var_wb;
    let expansion = -lambda * k * k - beta * k + pi_term;
    let consistency_residual = (norm_sq - (target - expansion)).abs();

    let (k_star, k_star_bound, grid_max, k_star_optimal) = if lambda >= tol::DENOM_DEGENERATE {
        let ks = -beta / (2.0 * lambda);
        let at = |kk: f64| -lambda * kk * kk - beta * kk + pi_term;
        let best = at(ks);
        let span = 1.0 + ks.abs();
        let mut grid_best = at(k);
        for step in 0..=100 {
            let kk = ks + span * (step as f64 / 50.0 - 1.0);
            grid_best = grid_best.max(at(kk));
        }
        let slack = 1e-12 * best.abs().max(1.0);
        (Some(ks), Some(best), Some(grid_best), Some(best + slack >= grid_best))
    } else {
        (None, None, None, None)
    };

    Ok(WeakBoundTrace {
        norm_sq,
        lambda,
        beta,
        pi_term,
        target,
        expansion,
        consistency_residual,
        k_star,
        k_star_bound,
        grid_max,
        k_star_optimal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{gue_observable, haar_state, pauli_x, pauli_y, pauli_z, trial_rng};
    use crate::numkernel::{basis_vector, complement_basis, identity, normalized};
    use ndarray::array;

    const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn zero() -> CVector {
        basis_vector(2, 0)
    }

    fn one() -> CVector {
        basis_vector(2, 1)
    }

    fn plus() -> CVector {
        array![C64::new(SQRT_HALF, 0.0), C64::new(SQRT_HALF, 0.0)]
    }

    fn worked_ensemble() -> PpsEnsemble {
        PpsEnsemble::new(zero(), plus()).unwrap()
    }

    #[test]
    fn ensemble_overlap_is_stored() {
        let ens = worked_ensemble();
        assert!((ens.overlap_p() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn ensemble_rejects_orthogonal_post_selection() {
        assert!(matches!(
            PpsEnsemble::new(zero(), one()),
            Err(Error::OverlapBelowThreshold { .. })
        ));
    }

    #[test]
    fn weak_value_reduces_to_expectation_when_pre_equals_post() {
        let mut rng = trial_rng(31, 0);
        let a = gue_observable(4, &mut rng).unwrap();
        let psi = haar_state(4, &mut rng).unwrap();
        let ens = PpsEnsemble::new(psi.clone(), psi.clone()).unwrap();
        let wv = weak_value(&a, &ens, DEFAULT_MIN_OVERLAP).unwrap();
        let expect = numkernel::expectation(&a, &psi).unwrap();
        assert!((wv - expect).norm() < 1e-12);
    }

    #[test]
    fn weak_value_worked_cases() {
        // ⟨+|σx|0⟩ / ⟨+|0⟩ = 1.
        let wv = weak_value(&pauli_x(), &worked_ensemble(), DEFAULT_MIN_OVERLAP).unwrap();
        assert!((wv - C64::new(1.0, 0.0)).norm() < 1e-15);

        // ⟨0|σz|+⟩ / ⟨0|+⟩ = 1.
        let ens = PpsEnsemble::new(plus(), zero()).unwrap();
        let wv = weak_value(&pauli_z(), &ens, DEFAULT_MIN_OVERLAP).unwrap();
        assert!((wv - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn weak_value_rejects_small_overlap() {
        let nearly_one = normalized(&array![C64::new(1e-4, 0.0), C64::new(1.0, 0.0)]).unwrap();
        let ens = PpsEnsemble::new(zero(), nearly_one).unwrap();
        assert!(matches!(
            weak_value(&pauli_x(), &ens, 1e-3),
            Err(Error::OverlapBelowThreshold { .. })
        ));
    }

    #[test]
    fn weak_operator_of_identity_is_scaled_projector() {
        let ens = worked_ensemble();
        let aw = weak_operator(&identity(2), &ens, DEFAULT_MIN_OVERLAP).unwrap();
        aw.validate(1e-12).unwrap();
        let wv = aw.expectation_in_pre();
        assert!((wv - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn weak_operator_expectation_matches_weak_value() {
        let ens = worked_ensemble();
        let aw = weak_operator(&pauli_x(), &ens, DEFAULT_MIN_OVERLAP).unwrap();
        assert!((aw.expectation_in_pre() - C64::new(1.0, 0.0)).norm() < 1e-12);

        // Identity oracle over 1000 random ensembles.
        let mut rng = trial_rng(32, 0);
        for _ in 0..1000 {
            let a = gue_observable(4, &mut rng).unwrap();
            let (ens, _) = PpsEnsemble::sample(4, DEFAULT_MIN_OVERLAP, &mut rng).unwrap();
            let aw = weak_operator(&a, &ens, DEFAULT_MIN_OVERLAP).unwrap();
            let wv = weak_value(&a, &ens, DEFAULT_MIN_OVERLAP).unwrap();
            let scale = wv.norm().max(1.0);
            assert!(
                (aw.expectation_in_pre() - wv).norm() < 1e-10 * scale,
                "weak operator expectation deviates from the weak value"
            );
        }
    }

    #[test]
    fn nonhermitian_variance_reduces_to_ordinary_variance() {
        let mut rng = trial_rng(33, 0);
        let a = gue_observable(5, &mut rng).unwrap();
        let psi = haar_state(5, &mut rng).unwrap();
        let m = crate::relations::moments(&a, &a, &psi).unwrap();
        let v = nonhermitian_variance(&a, &psi).unwrap();
        assert!((v - m.var_a).abs() < 1e-10 * m.var_a.max(1.0));
    }

    #[test]
    fn nonhermitian_variance_of_worked_weak_operator() {
        // σx² = I gives ⟨A_wA_w†⟩ = 1/p = 2; minus |⟨A_w⟩|² = 1 leaves 1.
        let ens = worked_ensemble();
        let aw = weak_operator(&pauli_x(), &ens, DEFAULT_MIN_OVERLAP).unwrap();
        let v = nonhermitian_variance(&aw.matrix, ens.pre()).unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonhermitian_variance_of_constant_vanishes() {
        let c = identity(3).mapv(|x| x * C64::new(2.5, -1.0));
        let psi = normalized(&array![
            C64::new(0.2, 0.3),
            C64::new(-0.4, 0.1),
            C64::new(0.5, 0.6)
        ])
        .unwrap();
        let v = nonhermitian_variance(&c, &psi).unwrap();
        assert!(v < 1e-12);
    }

    #[test]
    fn nonhermitian_variance_is_nonnegative_for_random_operators() {
        let mut rng = trial_rng(34, 0);
        for _ in 0..200 {
            let x = ndarray::Array2::from_shape_fn((3, 3), |_| {
                crate::ensembles::complex_gaussian(&mut rng)
            });
            let psi = haar_state(3, &mut rng).unwrap();
            assert!(nonhermitian_variance(&x, &psi).unwrap() >= 0.0);
        }
    }

    #[test]
    fn cd_identities_worked_case() {
        let ens = worked_ensemble();
        let ids = cd_identities(&pauli_x(), &pauli_y(), &ens, DEFAULT_MIN_OVERLAP).unwrap();
        assert!((ids.wv_a - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((ids.wv_b - C64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((ids.cd - C64::new(0.0, 1.0)).norm() < 1e-12);
        assert!((ids.modulus_lhs - 2.0).abs() < 1e-12);
        assert!((ids.modulus_rhs - 2.0).abs() < 1e-12);
        assert!(ids.sum_residual < 1e-12);
        assert!(ids.diff_residual < 1e-12);
        assert!(ids.modulus_residual < 1e-12);
    }

    #[test]
    fn cd_identities_self_pair() {
        // ⟨φ|[A,A]|φ⟩ = 0: the difference identity is pure cross terms.
        let mut rng = trial_rng(35, 0);
        let a = gue_observable(3, &mut rng).unwrap();
        let (ens, _) = PpsEnsemble::sample(3, DEFAULT_MIN_OVERLAP, &mut rng).unwrap();
        let ids = cd_identities(&a, &a, &ens, DEFAULT_MIN_OVERLAP).unwrap();
        let cross = -ids.wv_a * ids.wv_a.conj() + ids.wv_a.conj() * ids.wv_a;
        assert!((ids.diff_rhs - cross).norm() < 1e-9 * ids.wv_a.norm_sqr().max(1.0));
        assert!(ids.diff_residual < 1e-12 * ids.modulus_lhs.max(1.0));
    }

    #[test]
    fn cd_identities_random_ensembles() {
        let mut rng = trial_rng(36, 0);
        for _ in 0..1000 {
            let a = gue_observable(4, &mut rng).unwrap();
            let b = gue_observable(4, &mut rng).unwrap();
            let (ens, _) = PpsEnsemble::sample(4, DEFAULT_MIN_OVERLAP, &mut rng).unwrap();
            let ids = cd_identities(&a, &b, &ens, DEFAULT_MIN_OVERLAP).unwrap();
            let scale = ids.modulus_lhs.max(1.0);
            assert!(ids.sum_residual < 1e-9 * scale);
            assert!(ids.diff_residual < 1e-9 * scale);
            assert!(ids.modulus_residual < 1e-9 * scale);
        }
    }

    #[test]
    fn weak_relation_saturates_on_worked_case() {
        let ens = worked_ensemble();
        let check =
            weak_relation_check(&pauli_x(), &pauli_y(), &ens, &one(), DEFAULT_MIN_OVERLAP)
                .unwrap();
        assert!((check.target - 2.0).abs() < 1e-12);
        assert!((check.bound - 2.0).abs() < 1e-12);
        assert!(check.gap.abs() < 1e-12);
        assert!(check.saturated);
    }

    #[test]
    fn weak_relation_holds_with_degenerate_post_selection() {
        let mut rng = trial_rng(37, 0);
        let a = gue_observable(4, &mut rng).unwrap();
        let b = gue_observable(4, &mut rng).unwrap();
        let psi = haar_state(4, &mut rng).unwrap();
        let ens = PpsEnsemble::new(psi.clone(), psi.clone()).unwrap();
        let basis = complement_basis(&psi).unwrap();
        let check = weak_relation_check(&a, &b, &ens, &basis.vectors()[0], DEFAULT_MIN_OVERLAP)
            .unwrap();
        assert!(check.gap >= -1e-10 * check.target.max(1.0));
    }

    #[test]
    fn weak_relation_rejects_bad_perp() {
        let ens = worked_ensemble();
        assert!(matches!(
            weak_relation_check(&pauli_x(), &pauli_y(), &ens, &zero(), DEFAULT_MIN_OVERLAP),
            Err(Error::NotOrthogonal { .. })
        ));
    }

    #[test]
    fn weak_relation_self_pair_with_degenerate_post_selection_saturates() {
        // B = A and post = pre: ⟨CD†⟩ = ΔA² is real, α = 0, and the
        // orthogonal term vanishes, so the relation saturates.
        let mut rng = trial_rng(38, 0);
        let a = gue_observable(3, &mut rng).unwrap();
        let psi = haar_state(3, &mut rng).unwrap();
        let ens = PpsEnsemble::new(psi.clone(), psi.clone()).unwrap();
        let basis = complement_basis(&psi).unwrap();
        let check =
            weak_relation_check(&a, &a, &ens, &basis.vectors()[0], DEFAULT_MIN_OVERLAP).unwrap();
        assert!(check.gap.abs() < 1e-10 * check.target.max(1.0));
        assert!(check.gap >= -1e-10 * check.target.max(1.0));
    }

    fn probe_state(psi: &CVector, perp: &CVector, theta: f64, phi: f64) -> CVector {
        let c = C64::new(theta.cos(), 0.0);
        let s = C64::from_polar(theta.sin(), phi);
        psi.mapv(|x| c * x) + perp.mapv(|x| s * x)
    }

    #[test]
    fn weak_bound_trace_is_consistent() {
        let mut rng = trial_rng(39, 0);
        let a = gue_observable(4, &mut rng).unwrap();
        let b = gue_observable(4, &mut rng).unwrap();
        let (ens, _) = PpsEnsemble::sample(4, DEFAULT_MIN_OVERLAP, &mut rng).unwrap();
        let basis = complement_basis(ens.pre()).unwrap();
        let perp = basis.vectors()[0].clone();
        let psi_bar = probe_state(ens.pre(), &perp, 0.7, 1.1);

        let trace =
            weak_bound_trace(&a, &b, &ens, 0.4, 2.0, &psi_bar, DEFAULT_MIN_OVERLAP).unwrap();
        assert!(trace.norm_sq >= 0.0);
        let scale = trace.target.abs().max(trace.norm_sq.abs()).max(1.0);
        assert!(trace.consistency_residual < 1e-10 * scale);
        assert!(trace.k_star_optimal.unwrap());
        // The expansion can never exceed the variance sum.
        assert!(trace.expansion <= trace.target + 1e-10 * scale);
    }

    #[test]
    fn weak_bound_trace_k_star_beats_random_probes() {
        let mut rng = trial_rng(40, 0);
        let a = gue_observable(3, &mut rng).unwrap();
        let b = gue_observable(3, &mut rng).unwrap();
        let (ens, _) = PpsEnsemble::sample(3, DEFAULT_MIN_OVERLAP, &mut rng).unwrap();
        let basis = complement_basis(ens.pre()).unwrap();
        let perp = basis.vectors()[0].clone();
        let psi_bar = probe_state(ens.pre(), &perp, 0.4, 0.3);

        let reference =
            weak_bound_trace(&a, &b, &ens, 0.0, 1.3, &psi_bar, DEFAULT_MIN_OVERLAP).unwrap();
        let best = reference.k_star_bound.unwrap();
        for _ in 0..100 {
            let k: f64 = rng.random_range(-10.0..10.0);
            let t = weak_bound_trace(&a, &b, &ens, k, 1.3, &psi_bar, DEFAULT_MIN_OVERLAP)
                .unwrap();
            assert!(t.expansion <= best + 1e-10 * best.abs().max(1.0));
        }
    }

    #[test]
    fn weak_bound_approaches_the_orthogonal_term_monotonically() {
        // β²/4λ grows as the probe angle shrinks toward the pre-selection.
        let mut rng = trial_rng(41, 0);
        let a = gue_observable(3, &mut rng).unwrap();
        let b = gue_observable(3, &mut rng).unwrap();
        let (ens, _) = PpsEnsemble::sample(3, DEFAULT_MIN_OVERLAP, &mut rng).unwrap();
        let basis = complement_basis(ens.pre()).unwrap();
        let perp = basis.vectors()[0].clone();

        let tau = 0.9;
        let phi = 0.2;
        let mut previous = f64::NEG_INFINITY;
        for theta in [1.2, 0.8, 0.4, 0.2, 0.1, 0.05] {
            let psi_bar = probe_state(ens.pre(), &perp, theta, phi);
            let t = weak_bound_trace(&a, &b, &ens, 0.0, tau, &psi_bar, DEFAULT_MIN_OVERLAP)
                .unwrap();
            let value = t.beta * t.beta / (4.0 * t.lambda) + t.pi_term;
            assert!(value >= previous - 1e-10 * value.abs().max(1.0));
            assert!(value <= t.target + 1e-9 * t.target.abs().max(1.0));
            previous = value;
        }
    }

    #[test]
    fn weak_bound_trace_rejects_degenerate_probe_direction() {
        let ens = worked_ensemble();
        let psi_bar = ens.pre().clone();
        assert!(matches!(
            weak_bound_trace(&pauli_x(), &pauli_y(), &ens, 0.5, 0.0, &psi_bar, 1e-3),
            Err(Error::DegenerateProbe { .. })
        ));
        // k = 0 is fine: the probe term drops out entirely.
        assert!(
            weak_bound_trace(&pauli_x(), &pauli_y(), &ens, 0.0, 0.0, &psi_bar, 1e-3).is_ok()
        );
    }
}
