//! Moments, the alignment phase α, the seven variance bounds, the two
//! equality residuals, and the partial-sum bound ladder.
//!
//! All quantities derive from the centered vectors Ā|ψ⟩ = (A − ⟨A⟩)|ψ⟩ and
//! B̄|ψ⟩, so every evaluation is O(d²) and the normalized forms stay
//! conditioned even when a variance is small.

use serde::Serialize;

use crate::numkernel::{self, CMatrix, CVector, ComplementBasis, C64};
use crate::{tol, Error, Result};

/// First and second moments of a pair of observables in a pure state.
#[derive(Debug, Clone)]
pub struct MomentSet {
    /// ⟨A⟩ and ⟨B⟩.
    pub mean_a: f64,
    pub mean_b: f64,
    /// Variances ΔA², ΔB² (clamped at 0 against roundoff on eigenstates).
    pub var_a: f64,
    pub var_b: f64,
    /// ⟨[A,B]⟩; purely imaginary for Hermitian inputs.
    pub comm: C64,
    /// ⟨{A,B}⟩; real for Hermitian inputs.
    pub anticomm: f64,
    /// ⟨ψ|ĀB̄|ψ⟩ = ⟨AB⟩ − ⟨A⟩⟨B⟩, the quantity whose argument is α.
    pub corr: C64,
}

impl MomentSet {
    /// ΔA·ΔB.
    pub fn spread_product(&self) -> f64 {
        (self.var_a * self.var_b).sqrt()
    }

    /// True when ⟨ĀB̄⟩ vanishes and the phase α is a free choice.
    pub fn corr_is_degenerate(&self) -> bool {
        self.corr.norm() < tol::CORR_DEGENERATE
    }

    /// Re-derives ⟨ĀB̄⟩ from the commutator/anticommutator split and returns
    /// the deviation from the stored value; an internal consistency check.
    pub fn consistency_residual(&self) -> f64 {
        let rebuilt = C64::new(0.5 * self.anticomm - self.mean_a * self.mean_b, 0.0)
            + 0.5 * self.comm;
        (rebuilt - self.corr).norm()
    }
}

/// The inequality (or equality-derived bound) being evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RelationId {
    /// ΔA²ΔB² ≥ |½⟨[A,B]⟩|².
    Hr,
    /// ΔA²ΔB² ≥ |½⟨[A,B]⟩|² + |½⟨{A,B}⟩−⟨A⟩⟨B⟩|².
    Schrodinger,
    /// ΔA²+ΔB² ≥ ±i⟨[A,B]⟩ + |⟨ψ|A±iB|ψ⊥⟩|².
    MpSum,
    /// ΔA²+ΔB² ≥ ½|⟨ψ⊥_{A+B}|A+B|ψ⟩|².
    MpSum2,
    /// ΔAΔB ≥ ±i½⟨[A,B]⟩ / (1 − ½|⟨ψ|A/ΔA±iB/ΔB|ψ⊥⟩|²).
    AmendedHr,
    /// ΔA²+ΔB² ≥ |⟨[A,B]⟩+⟨{A,B}⟩−2⟨A⟩⟨B⟩| + |⟨ψ|A−e^{iα}B|ψ⊥⟩|².
    SchlikeSum,
    /// ΔA²ΔB² ≥ (|½⟨[A,B]⟩|²+|½⟨{A,B}⟩−⟨A⟩⟨B⟩|²)/(1−½|⟨ψ|A/ΔA−e^{iα}B/ΔB|ψ⊥⟩|²)².
    SchlikeProd,
    /// ΔA_w²+ΔB_w² against the pre/post-selected bound (weak measurement).
    Weak,
}

impl RelationId {
    pub fn as_str(&self) -> &'static str {
        match self {
            RelationId::Hr => "hr",
            RelationId::Schrodinger => "schrodinger",
            RelationId::MpSum => "mp_sum",
            RelationId::MpSum2 => "mp_sum2",
            RelationId::AmendedHr => "amended_hr",
            RelationId::SchlikeSum => "schlike_sum",
            RelationId::SchlikeProd => "schlike_prod",
            RelationId::Weak => "weak",
        }
    }
}

/// One evaluated inequality: the bounded target, the bound, and their gap.
#[derive(Debug, Clone, Serialize)]
pub struct BoundSet {
    pub relation: RelationId,
    /// The quantity being bounded (ΔA²ΔB², ΔA²+ΔB², or ΔAΔB).
    pub target: f64,
    pub bound: f64,
    /// target − bound; nonnegative up to roundoff for valid inputs.
    pub gap: f64,
    /// gap ≤ 1e−9·max(1, target).
    pub saturated: bool,
    /// Bound reported as 0 because a denominator or variance collapsed.
    pub degenerate: bool,
}

impl BoundSet {
    fn new(relation: RelationId, target: f64, bound: f64) -> Self {
        let gap = target - bound;
        BoundSet {
            relation,
            target,
            bound,
            gap,
            saturated: gap <= tol::SATURATION * target.max(1.0),
            degenerate: false,
        }
    }

    fn degenerate(relation: RelationId, target: f64) -> Self {
        BoundSet {
            relation,
            target,
            bound: 0.0,
            gap: target,
            saturated: false,
            degenerate: true,
        }
    }
}

/// Which equality a residual belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TheoremId {
    SumEquality,
    ProductEquality,
}

/// Two sides of an equality plus the per-basis-vector summands.
#[derive(Debug, Clone, Serialize)]
pub struct EqualityResidual {
    pub theorem: TheoremId,
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// |⟨ψ|·|ψ⊥_n⟩|² summands, n = 1..d−1.
    pub basis_terms: Vec<f64>,
}

impl EqualityResidual {
    /// Residual relative to max(1, lhs); the scale used by all tolerances.
    pub fn relative_residual(&self) -> f64 {
        self.residual / self.lhs.abs().max(1.0)
    }
}

/// The product equality in its literal quotient form, evaluated only when
/// the denominator is well-conditioned.
#[derive(Debug, Clone, Serialize)]
pub struct LiteralProductCheck {
    /// ΔA²ΔB².
    pub lhs: f64,
    pub rhs: f64,
    pub residual: f64,
    /// The quotient denominator 1 − ½Σ before squaring.
    pub denominator: f64,
}

/// Result of [`product_equality_residual`]: the rearranged (always finite)
/// form, plus the literal quotient form when conditioned.
#[derive(Debug, Clone, Serialize)]
pub struct ProductEqualityCheck {
    pub main: EqualityResidual,
    pub literal: Option<LiteralProductCheck>,
}

fn check_pair(a: &CMatrix, b: &CMatrix, psi: &CVector) -> Result<()> {
    if a.nrows() != psi.len() || b.nrows() != psi.len() {
        return Err(Error::DimMismatch {
            left: a.nrows().max(b.nrows()),
            right: psi.len(),
        });
    }
    numkernel::check_hermitian(a, tol::INPUT)?;
    numkernel::check_hermitian(b, tol::INPUT)?;
    numkernel::check_normalized(psi, tol::INPUT)?;
    Ok(())
}

fn check_orthogonal(psi: &CVector, psi_perp: &CVector) -> Result<()> {
    numkernel::check_normalized(psi_perp, tol::INPUT)?;
    let overlap = numkernel::inner(psi, psi_perp)?.norm();
    if overlap > tol::INPUT {
        return Err(Error::NotOrthogonal {
            overlap,
            tol: tol::INPUT,
        });
    }
    Ok(())
}

fn clamp_variance(raw: f64) -> f64 {
    if raw < 0.0 {
        0.0
    } else {
        raw
    }
}

/// All first/second moments of (A, B) in |ψ⟩.
///
/// ⟨BA⟩ is the conjugate of ⟨AB⟩ for Hermitian inputs, so a single
/// cross inner product ⟨Aψ|Bψ⟩ determines the commutator, anticommutator,
/// and correlation.
pub fn moments(a: &CMatrix, b: &CMatrix, psi: &CVector) -> Result<MomentSet> {
    check_pair(a, b, psi)?;
    let av = a.dot(psi);
    let bv = b.dot(psi);
    let mean_a = numkernel::inner(psi, &av)?.re;
    let mean_b = numkernel::inner(psi, &bv)?.re;
    let sq_a = numkernel::inner(&av, &av)?.re;
    let sq_b = numkernel::inner(&bv, &bv)?.re;
    let cross = numkernel::inner(&av, &bv)?; // ⟨AB⟩
    Ok(MomentSet {
        mean_a,
        mean_b,
        var_a: clamp_variance(sq_a - mean_a * mean_a),
        var_b: clamp_variance(sq_b - mean_b * mean_b),
        comm: cross - cross.conj(),
        anticomm: 2.0 * cross.re,
        corr: cross - C64::new(mean_a * mean_b, 0.0),
    })
}

/// The alignment phase α = arg⟨ψ|ĀB̄|ψ⟩.
///
/// e^{−iα}⟨ĀB̄⟩ is then real and nonnegative. This two-argument arctangent
/// agrees (mod 2π) with the piecewise arctan branches, including the +π
/// branch when ⟨{A,B}⟩/2 − ⟨A⟩⟨B⟩ < 0. When ⟨ĀB̄⟩ vanishes every α is
/// valid and 0 is returned; callers can detect the case via
/// [`MomentSet::corr_is_degenerate`].
pub fn alpha_phase(m: &MomentSet) -> f64 {
    if m.corr_is_degenerate() {
        0.0
    } else {
        m.corr.im.atan2(m.corr.re)
    }
}

/// Centered vector Ā|ψ⟩ = A|ψ⟩ − ⟨A⟩|ψ⟩.
fn centered(applied: &CVector, mean: f64, psi: &CVector) -> CVector {
    applied - &psi.mapv(|c| c * mean)
}

/// The modulus |⟨[A,B]⟩ + ⟨{A,B}⟩ − 2⟨A⟩⟨B⟩| (= 2|⟨ĀB̄⟩| analytically).
fn first_term(m: &MomentSet) -> f64 {
    (m.comm + C64::new(m.anticomm - 2.0 * m.mean_a * m.mean_b, 0.0)).norm()
}

/// Sign for the ±i⟨[A,B]⟩ terms: returns (value, plus_branch) with the sign
/// chosen so the value is nonnegative.
fn signed_commutator(m: &MomentSet) -> (f64, bool) {
    let plus = (C64::new(0.0, 1.0) * m.comm).re; // +i⟨[A,B]⟩
    if plus >= 0.0 {
        (plus, true)
    } else {
        (-plus, false)
    }
}

/// The three sum-of-variance bounds against ΔA² + ΔB²:
/// the signed Maccone-Pati bound, the |ψ⊥_{A+B}⟩ bound, and the
/// phase-aligned bound using α.
pub fn bound_sum_relations(
    m: &MomentSet,
    a: &CMatrix,
    b: &CMatrix,
    psi: &CVector,
    psi_perp: &CVector,
) -> Result<[BoundSet; 3]> {
    check_pair(a, b, psi)?;
    check_orthogonal(psi, psi_perp)?;
    let av = a.dot(psi);
    let bv = b.dot(psi);
    let target = m.var_a + m.var_b;

    // ±i⟨[A,B]⟩ + |⟨ψ|A±iB|ψ⊥⟩|², the sign making the first term positive.
    // ⟨ψ|M|ψ⊥⟩ = ⟨M†ψ|ψ⊥⟩ and (A±iB)† = A∓iB.
    let (comm_term, plus_branch) = signed_commutator(m);
    let i = C64::new(0.0, 1.0);
    let w_mp = if plus_branch {
        &av - &bv.mapv(|c| i * c)
    } else {
        &av + &bv.mapv(|c| i * c)
    };
    let mp_term = numkernel::inner(&w_mp, psi_perp)?.norm_sqr();
    let mp_sum = BoundSet::new(RelationId::MpSum, target, comm_term + mp_term);

    // ½|⟨ψ⊥_{A+B}|A+B|ψ⟩|² with |ψ⊥_{A+B}⟩ ∝ (A+B−⟨A+B⟩)|ψ⟩, normalized
    // explicitly; an eigenstate of A+B yields a zero direction and bound 0.
    let sum_v = &av + &bv;
    let w_ab = centered(&sum_v, m.mean_a + m.mean_b, psi);
    let n_ab = numkernel::norm(&w_ab);
    let mp_sum2 = if n_ab < tol::DENOM_DEGENERATE {
        BoundSet::new(RelationId::MpSum2, target, 0.0)
    } else {
        let chi = w_ab.mapv(|c| c / n_ab);
        let amp = numkernel::inner(&chi, &sum_v)?;
        BoundSet::new(RelationId::MpSum2, target, 0.5 * amp.norm_sqr())
    };

    // |⟨[A,B]⟩+⟨{A,B}⟩−2⟨A⟩⟨B⟩| + |⟨ψ|A−e^{iα}B|ψ⊥⟩|².
    let alpha = alpha_phase(m);
    let phase = C64::from_polar(1.0, -alpha); // (A−e^{iα}B)† applied to ψ
    let w_al = &av - &bv.mapv(|c| phase * c);
    let al_term = numkernel::inner(&w_al, psi_perp)?.norm_sqr();
    let schlike_sum = BoundSet::new(RelationId::SchlikeSum, target, first_term(m) + al_term);

    Ok([mp_sum, mp_sum2, schlike_sum])
}

/// The four product-form bounds: Heisenberg-Robertson and Schrödinger
/// against ΔA²ΔB², the amended Heisenberg-Robertson against ΔAΔB, and the
/// phase-aligned quotient bound against ΔA²ΔB².
///
/// The two quotient bounds are reported as degenerate (bound 0) when either
/// variance is below [`tol::VARIANCE_FLOOR`] or the denominator magnitude
/// drops under [`tol::DENOM_DEGENERATE`]; in those limits the numerator
/// vanishes as well.
pub fn bound_product_relations(
    m: &MomentSet,
    a: &CMatrix,
    b: &CMatrix,
    psi: &CVector,
    psi_perp: &CVector,
) -> Result<[BoundSet; 4]> {
    check_pair(a, b, psi)?;
    check_orthogonal(psi, psi_perp)?;
    let av = a.dot(psi);
    let bv = b.dot(psi);

    let target = m.var_a * m.var_b;
    let half_comm_sq = (0.5 * m.comm).norm_sqr();
    let covariance = 0.5 * m.anticomm - m.mean_a * m.mean_b;

    let hr = BoundSet::new(RelationId::Hr, target, half_comm_sq);
    let schrodinger = BoundSet::new(
        RelationId::Schrodinger,
        target,
        half_comm_sq + covariance * covariance,
    );

    let applicable = m.var_a > tol::VARIANCE_FLOOR && m.var_b > tol::VARIANCE_FLOOR;
    let da = m.var_a.sqrt();
    let db = m.var_b.sqrt();

    let (amended_hr, schlike_prod) = if !applicable {
        (
            BoundSet::degenerate(RelationId::AmendedHr, da * db),
            BoundSet::degenerate(RelationId::SchlikeProd, target),
        )
    } else {
        // Centered, variance-normalized vectors keep the quotient terms
        // conditioned when a variance is small.
        let ac = centered(&av, m.mean_a, psi).mapv(|c| c / da);
        let bc = centered(&bv, m.mean_b, psi).mapv(|c| c / db);

        let (comm_term, plus_branch) = signed_commutator(m);
        let i = C64::new(0.0, 1.0);
        let w5 = if plus_branch {
            &ac - &bc.mapv(|c| i * c)
        } else {
            &ac + &bc.mapv(|c| i * c)
        };
        let den5 = 1.0 - 0.5 * numkernel::inner(&w5, psi_perp)?.norm_sqr();
        let amended = if den5.abs() < tol::DENOM_DEGENERATE {
            BoundSet::degenerate(RelationId::AmendedHr, da * db)
        } else {
            BoundSet::new(RelationId::AmendedHr, da * db, 0.5 * comm_term / den5)
        };

        let alpha = alpha_phase(m);
        let phase = C64::from_polar(1.0, -alpha);
        let w7 = &ac - &bc.mapv(|c| phase * c);
        let den7 = 1.0 - 0.5 * numkernel::inner(&w7, psi_perp)?.norm_sqr();
        let schlike = if den7.abs() < tol::DENOM_DEGENERATE {
            BoundSet::degenerate(RelationId::SchlikeProd, target)
        } else {
            BoundSet::new(
                RelationId::SchlikeProd,
                target,
                (half_comm_sq + covariance * covariance) / (den7 * den7),
            )
        };
        (amended, schlike)
    };

    Ok([hr, schrodinger, amended_hr, schlike_prod])
}

fn check_anchor(basis: &ComplementBasis, psi: &CVector) -> Result<()> {
    if !basis.is_anchored_at(psi) {
        return Err(Error::BasisAnchorMismatch);
    }
    Ok(())
}

/// The summands |⟨ψ|A−e^{iα}B|ψ⊥_n⟩|² over a complement basis, computed
/// from the centered vectors (the means drop against ⟨ψ|ψ⊥_n⟩ = 0).
fn aligned_basis_terms(
    m: &MomentSet,
    av: &CVector,
    bv: &CVector,
    psi: &CVector,
    basis: &ComplementBasis,
    normalize_by_spread: bool,
) -> Result<Vec<f64>> {
    let alpha = alpha_phase(m);
    let phase = C64::from_polar(1.0, -alpha);
    let (sa, sb) = if normalize_by_spread {
        (m.var_a.sqrt(), m.var_b.sqrt())
    } else {
        (1.0, 1.0)
    };
    let ac = centered(av, m.mean_a, psi).mapv(|c| c / sa);
    let bc = centered(bv, m.mean_b, psi).mapv(|c| c / sb);
    let w = &ac - &bc.mapv(|c| phase * c);
    basis
        .vectors()
        .iter()
        .map(|x| Ok(numkernel::inner(&w, x)?.norm_sqr()))
        .collect()
}

/// The sum-of-variances equality: ΔA² + ΔB² equals
/// |⟨[A,B]⟩+⟨{A,B}⟩−2⟨A⟩⟨B⟩| + Σ_n |⟨ψ|A−e^{iα}B|ψ⊥_n⟩|² over any
/// orthonormal complement basis.
pub fn sum_equality_residual(
    a: &CMatrix,
    b: &CMatrix,
    psi: &CVector,
    basis: &ComplementBasis,
) -> Result<EqualityResidual> {
    check_anchor(basis, psi)?;
    let m = moments(a, b, psi)?;
    let av = a.dot(psi);
    let bv = b.dot(psi);
    let basis_terms = aligned_basis_terms(&m, &av, &bv, psi, basis, false)?;
    let lhs = m.var_a + m.var_b;
    let rhs = first_term(&m) + basis_terms.iter().sum::<f64>();
    Ok(EqualityResidual {
        theorem: TheoremId::SumEquality,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        basis_terms,
    })
}

/// The product equality, verified in its rearranged form
/// Σ_n |⟨ψ|A/ΔA−e^{iα}B/ΔB|ψ⊥_n⟩|² = 2 − 2|⟨ĀB̄⟩|/(ΔAΔB), which is finite
/// for every non-degenerate pair. The literal quotient form
/// ΔA²ΔB² = (|½⟨[A,B]⟩|²+|½⟨{A,B}⟩−⟨A⟩⟨B⟩|²)/(1−½Σ)² is reconstructed
/// whenever its denominator exceeds 1e−9.
pub fn product_equality_residual(
    a: &CMatrix,
    b: &CMatrix,
    psi: &CVector,
    basis: &ComplementBasis,
) -> Result<ProductEqualityCheck> {
    check_anchor(basis, psi)?;
    let m = moments(a, b, psi)?;
    let spread = m.spread_product();
    if spread <= tol::DENOM_DEGENERATE {
        return Err(Error::DegenerateVariance(spread));
    }
    let av = a.dot(psi);
    let bv = b.dot(psi);
    let basis_terms = aligned_basis_terms(&m, &av, &bv, psi, basis, true)?;
    let lhs = basis_terms.iter().sum::<f64>();
    let rhs = 2.0 - 2.0 * m.corr.norm() / spread;
    let main = EqualityResidual {
        theorem: TheoremId::ProductEquality,
        lhs,
        rhs,
        residual: (lhs - rhs).abs(),
        basis_terms,
    };

    let denominator = 1.0 - 0.5 * lhs;
    let literal = (denominator > 1e-9).then(|| {
        let numerator =
            (0.5 * m.comm).norm_sqr() + (0.5 * m.anticomm - m.mean_a * m.mean_b).powi(2);
        let rhs13 = numerator / (denominator * denominator);
        let lhs13 = m.var_a * m.var_b;
        LiteralProductCheck {
            lhs: lhs13,
            rhs: rhs13,
            residual: (lhs13 - rhs13).abs(),
            denominator,
        }
    });

    Ok(ProductEqualityCheck { main, literal })
}

/// Lower bound on ΔA² + ΔB² retaining only the first `terms` summands of the
/// complement expansion. Monotone non-decreasing in `terms`; at
/// `terms = d−1` it reproduces the equality's right-hand side.
pub fn partial_sum_bound(
    a: &CMatrix,
    b: &CMatrix,
    psi: &CVector,
    basis: &ComplementBasis,
    terms: usize,
) -> Result<f64> {
    check_anchor(basis, psi)?;
    if terms > basis.len() {
        return Err(Error::TermOutOfRange {
            index: terms,
            max: basis.len(),
        });
    }
    let m = moments(a, b, psi)?;
    let av = a.dot(psi);
    let bv = b.dot(psi);
    let basis_terms = aligned_basis_terms(&m, &av, &bv, psi, basis, false)?;
    Ok(first_term(&m) + basis_terms[..terms].iter().sum::<f64>())
}

/// Independent consistency check of the complement expansion: evaluates
/// ⟨φ|Π|φ⟩ with |φ⟩ = (Ā−e^{−iα}B̄)|ψ⟩ through the explicit projector
/// matrix Π = I − |ψ⟩⟨ψ| and returns its deviation from the summed
/// basis expansion. The two routes share no code path beyond the moments.
pub fn proof_oracle_sum(
    a: &CMatrix,
    b: &CMatrix,
    psi: &CVector,
    basis: &ComplementBasis,
) -> Result<f64> {
    check_anchor(basis, psi)?;
    let m = moments(a, b, psi)?;
    let alpha = alpha_phase(&m);
    let av = a.dot(psi);
    let bv = b.dot(psi);
    let phase = C64::from_polar(1.0, -alpha);
    let ac = centered(&av, m.mean_a, psi);
    let bc = centered(&bv, m.mean_b, psi);
    let phi = &ac - &bc.mapv(|c| phase * c);

    let projector = numkernel::projector_complement(psi)?;
    let direct = numkernel::inner(&phi, &projector.dot(&phi))?.re;

    let expanded: f64 = basis
        .vectors()
        .iter()
        .map(|x| numkernel::inner(&phi, x).map(|c| c.norm_sqr()))
        .sum::<Result<f64>>()?;

    Ok((direct - expanded).abs())
}
