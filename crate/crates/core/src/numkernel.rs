//! Dense complex linear algebra for small Hilbert spaces (d up to ~128).
//!
//! Vectors and matrices are plain `ndarray` arrays of `Complex64`; this
//! module adds the inner-product conventions, Hermiticity checks, and the
//! orthonormal completion of a state into a basis of its orthogonal
//! complement. All operations are pure; values are safe to share across
//! threads.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::{tol, Error, Result};

pub type C64 = Complex64;
/// Complex column vector |ψ⟩.
pub type CVector = Array1<C64>;
/// Dense square complex matrix (operator on the same space).
pub type CMatrix = Array2<C64>;

/// Standard basis vector e_k.
pub fn basis_vector(dim: usize, k: usize) -> CVector {
    let mut v = Array1::zeros(dim);
    v[k] = C64::new(1.0, 0.0);
    v
}

/// Identity operator.
pub fn identity(dim: usize) -> CMatrix {
    Array2::eye(dim)
}

/// Hermitian inner product ⟨u|v⟩, conjugate-linear in the first argument.
pub fn inner(u: &CVector, v: &CVector) -> Result<C64> {
    if u.len() != v.len() {
        return Err(Error::DimMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    Ok(u.iter().zip(v.iter()).map(|(x, y)| x.conj() * y).sum())
}

/// Euclidean norm ‖v‖.
pub fn norm(v: &CVector) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugate transpose M†.
pub fn adjoint(m: &CMatrix) -> CMatrix {
    m.t().mapv(|c| c.conj())
}

/// Outer product |u⟩⟨v|.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    let d = u.len();
    Array2::from_shape_fn((d, v.len()), |(i, j)| u[i] * v[j].conj())
}

/// Expectation value ⟨ψ|M|ψ⟩.
pub fn expectation(m: &CMatrix, psi: &CVector) -> Result<C64> {
    if m.nrows() != psi.len() || m.ncols() != psi.len() {
        return Err(Error::DimMismatch {
            left: m.nrows(),
            right: psi.len(),
        });
    }
    inner(psi, &m.dot(psi))
}

/// Largest entrywise deviation max |M − M†|.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

/// True iff max entrywise |M − M†| ≤ tol.
pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    m.nrows() == m.ncols() && hermiticity_deviation(m) <= tol
}

pub fn check_hermitian(m: &CMatrix, tol: f64) -> Result<()> {
    let deviation = hermiticity_deviation(m);
    if m.nrows() != m.ncols() {
        return Err(Error::DimMismatch {
            left: m.nrows(),
            right: m.ncols(),
        });
    }
    if deviation > tol {
        return Err(Error::NotHermitian { deviation, tol });
    }
    Ok(())
}

pub fn check_normalized(v: &CVector, tol: f64) -> Result<()> {
    let norm = norm(v);
    if (norm - 1.0).abs() > tol {
        return Err(Error::NotNormalized { norm, tol });
    }
    Ok(())
}

pub fn check_finite_vector(v: &CVector) -> Result<()> {
    for (i, c) in v.iter().enumerate() {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

pub fn check_finite_matrix(m: &CMatrix) -> Result<()> {
    for (i, c) in m.iter().enumerate() {
        if !c.re.is_finite() || !c.im.is_finite() {
            return Err(Error::NonFinite(i));
        }
    }
    Ok(())
}

/// Largest entrywise |A − B|.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Rescale to unit norm. Errors on (near-)zero input.
pub fn normalized(v: &CVector) -> Result<CVector> {
    let n = norm(v);
    if n < 1e-150 {
        return Err(Error::NotNormalized { norm: n, tol: 0.0 });
    }
    Ok(v.mapv(|c| c / n))
}

/// Projector Π = I − |ψ⟩⟨ψ| onto the orthogonal complement of |ψ⟩.
///
/// Requires ψ normalized within [`tol::INPUT`]; the projector is built from
/// the exactly renormalized state so that Π² = Π and Π|ψ⟩ ≈ 0 hold to
/// [`tol::IDENTITY`].
pub fn projector_complement(psi: &CVector) -> Result<CMatrix> {
    check_finite_vector(psi)?;
    check_normalized(psi, tol::INPUT)?;
    let unit = normalized(psi)?;
    Ok(identity(psi.len()) - outer(&unit, &unit))
}

/// Orthonormal basis {|ψ⊥_n⟩, n = 1..d−1} of the orthogonal complement of
/// an anchor state |ψ⟩.
///
/// Together with the anchor the vectors form a complete orthonormal basis,
/// so Σ_n |ψ⊥_n⟩⟨ψ⊥_n| = I − |ψ⟩⟨ψ|.
#[derive(Debug, Clone)]
pub struct ComplementBasis {
    anchor: CVector,
    vectors: Vec<CVector>,
}

impl ComplementBasis {
    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    /// Number of complement vectors, d − 1.
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The (exactly renormalized) state the basis complements.
    pub fn anchor(&self) -> &CVector {
        &self.anchor
    }

    pub fn vectors(&self) -> &[CVector] {
        &self.vectors
    }

    /// True when the basis was built for `psi` (entrywise within [`tol::ANCHOR`]).
    pub fn is_anchored_at(&self, psi: &CVector) -> bool {
        self.anchor.len() == psi.len()
            && self
                .anchor
                .iter()
                .zip(psi.iter())
                .all(|(a, p)| (a - p).norm() <= tol::ANCHOR)
    }

    /// Checks unit norms, pairwise orthogonality (anchor included) and the
    /// completeness identity Σ|ψ⊥_n⟩⟨ψ⊥_n| = I − |ψ⟩⟨ψ| at tolerance `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let d = self.dim();
        if self.vectors.len() != d - 1 {
            return Err(Error::DimMismatch {
                left: self.vectors.len(),
                right: d - 1,
            });
        }
        for v in &self.vectors {
            check_normalized(v, tol)?;
            let overlap = inner(&self.anchor, v)?.norm();
            if overlap > tol {
                return Err(Error::NotOrthogonal { overlap, tol });
            }
        }
        for i in 0..self.vectors.len() {
            for j in (i + 1)..self.vectors.len() {
                let overlap = inner(&self.vectors[i], &self.vectors[j])?.norm();
                if overlap > tol {
                    return Err(Error::NotOrthogonal { overlap, tol });
                }
            }
        }
        let mut sum = Array2::zeros((d, d));
        for v in &self.vectors {
            sum = sum + outer(v, v);
        }
        let target = identity(d) - outer(&self.anchor, &self.anchor);
        let dev = max_abs_diff(&sum, &target);
        if dev > tol {
            return Err(Error::NotHermitian {
                deviation: dev,
                tol,
            });
        }
        Ok(())
    }

    /// Remix the complement vectors by a (d−1)×(d−1) matrix:
    /// |χ_j⟩ = Σ_k U_kj |ψ⊥_k⟩. A unitary U preserves all basis invariants.
    pub fn remixed(&self, u: &CMatrix) -> Result<ComplementBasis> {
        let n = self.vectors.len();
        if u.nrows() != n || u.ncols() != n {
            return Err(Error::DimMismatch {
                left: u.nrows(),
                right: n,
            });
        }
        let d = self.dim();
        let mut vectors = Vec::with_capacity(n);
        for j in 0..n {
            let mut w: CVector = Array1::zeros(d);
            for k in 0..n {
                let coeff = u[(k, j)];
                w.zip_mut_with(&self.vectors[k], |x, y| *x += coeff * y);
            }
            vectors.push(w);
        }
        Ok(ComplementBasis {
            anchor: self.anchor.clone(),
            vectors,
        })
    }
}

/// Deterministic orthonormal completion of |ψ⟩ via a single Householder
/// reflector.
///
/// With μ the phase of the leading entry of ψ, the reflector
/// H = I − 2|u⟩⟨u| built from w = ψ + μe₀ maps ψ to −μe₀; its columns
/// 1..d−1 therefore span the orthogonal complement of ψ. The sign choice
/// keeps ‖w‖² = 2 + 2|ψ₀| away from cancellation for every input, and the
/// result is a pure function of the bits of ψ.
pub fn complement_basis(psi: &CVector) -> Result<ComplementBasis> {
    let d = psi.len();
    if d < 2 {
        return Err(Error::DimTooSmall(d));
    }
    check_finite_vector(psi)?;
    check_normalized(psi, tol::INPUT)?;
    let anchor = normalized(psi)?;

    let lead = anchor[0];
    let mu = if lead.norm() > 0.0 {
        lead / lead.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    let mut w = anchor.clone();
    w[0] += mu;
    let wn = norm(&w);
    let u = w.mapv(|c| c / wn);

    // Columns 1..d of H = I − 2|u⟩⟨u|; column 0 is −μ̄ψ and is dropped.
    let mut vectors = Vec::with_capacity(d - 1);
    for k in 1..d {
        let coeff = 2.0 * u[k].conj();
        let mut col = u.mapv(|c| -coeff * c);
        col[k] += 1.0;
        vectors.push(col);
    }
    Ok(ComplementBasis { anchor, vectors })
}
