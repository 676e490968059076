//! Seeded, reproducible generation of random states and observables, plus a
//! catalog of named operators for demos and sweeps.
//!
//! Every random quantity is a pure function of `(master seed, trial index)`:
//! each trial owns an independent ChaCha stream, so results do not depend on
//! scheduling or on how many workers consume the trials.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::numkernel::{self, CMatrix, CVector, ComplementBasis, C64};
use crate::{tol, Error, Result};

/// RNG used for all sampling; fixed so streams are stable across platforms.
pub type TrialRng = ChaCha8Rng;

/// Configuration of a batch of randomized trials.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TrialConfig {
    pub dim: usize,
    pub trials: u64,
    pub seed: u64,
    /// Post-selections with overlap p below this are resampled.
    pub min_overlap: f64,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidConfig(format!(
                "dim must be >= 2 (got {})",
                self.dim
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be >= 1".into()));
        }
        if !(self.min_overlap > 0.0 && self.min_overlap <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "min_overlap must lie in (0, 1] (got {})",
                self.min_overlap
            )));
        }
        Ok(())
    }
}

/// Independent RNG stream for one trial, derived from (seed, trial).
///
/// SplitMix64 whitening over the pair fills the ChaCha key, so trials of the
/// same run never share a stream and the mapping is stable across releases.
pub fn trial_rng(seed: u64, trial: u64) -> TrialRng {
    const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
    let mut z = seed ^ trial.wrapping_mul(GAMMA);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        z = z.wrapping_add(GAMMA);
        let mut x = z;
        x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        x ^= x >> 31;
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    TrialRng::from_seed(key)
}

/// One draw from the standard complex normal CN(0, 1).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Haar-uniform pure state: normalized vector of independent complex
/// Gaussians.
pub fn haar_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CVector> {
    if dim < 2 {
        return Err(Error::DimTooSmall(dim));
    }
    loop {
        let v: CVector = Array1::from_iter((0..dim).map(|_| complex_gaussian(rng)));
        let n = numkernel::norm(&v);
        if n > 1e-6 {
            return Ok(v.mapv(|c| c / n));
        }
        // A zero draw has vanishing probability; resample rather than divide.
    }
}

/// GUE-style random observable H = (G + G†)/2 with G of independent complex
/// Gaussians. Hermitian by construction, to the last bit.
pub fn gue_observable<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CMatrix> {
    if dim < 2 {
        return Err(Error::DimTooSmall(dim));
    }
    let g = Array2::from_shape_fn((dim, dim), |_| complex_gaussian(rng));
    Ok(Array2::from_shape_fn((dim, dim), |(i, j)| {
        0.5 * (g[(i, j)] + g[(j, i)].conj())
    }))
}

/// Qubit state cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩; angles are reduced mod 2π.
pub fn bloch_state(theta: f64, phi: f64) -> CVector {
    let theta = theta.rem_euclid(std::f64::consts::TAU);
    let phi = phi.rem_euclid(std::f64::consts::TAU);
    let half = 0.5 * theta;
    Array1::from(vec![
        C64::new(half.cos(), 0.0),
        C64::from_polar(half.sin(), phi),
    ])
}

/// Random unit vector in the span of a complement basis; orthogonal to the
/// anchor by construction.
pub fn random_complement_vector<R: Rng + ?Sized>(
    basis: &ComplementBasis,
    rng: &mut R,
) -> CVector {
    loop {
        let mut v: CVector = Array1::zeros(basis.dim());
        for b in basis.vectors() {
            let coeff = complex_gaussian(rng);
            v.zip_mut_with(b, |x, y| *x += coeff * y);
        }
        let n = numkernel::norm(&v);
        if n > 1e-6 {
            return v.mapv(|c| c / n);
        }
    }
}

/// Haar-ish random unitary via Gram-Schmidt on a complex Gaussian matrix,
/// with one reorthogonalization pass. Used to remix complement bases.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<CMatrix> {
    if dim == 0 {
        return Err(Error::DimTooSmall(0));
    }
    'outer: loop {
        let mut cols: Vec<CVector> = (0..dim)
            .map(|_| Array1::from_iter((0..dim).map(|_| complex_gaussian(rng))))
            .collect();
        for j in 0..dim {
            for _pass in 0..2 {
                for i in 0..j {
                    let proj = numkernel::inner(&cols[i], &cols[j])?;
                    let prev = cols[i].clone();
                    cols[j].zip_mut_with(&prev, |x, y| *x -= proj * y);
                }
            }
            let n = numkernel::norm(&cols[j]);
            if n < 1e-8 {
                continue 'outer;
            }
            cols[j].mapv_inplace(|c| c / n);
        }
        let mut u = Array2::zeros((dim, dim));
        for (j, col) in cols.iter().enumerate() {
            for i in 0..dim {
                u[(i, j)] = col[i];
            }
        }
        return Ok(u);
    }
}

/// A named Hermitian observable from the catalog.
#[derive(Debug, Clone)]
pub struct NamedOperator {
    pub name: String,
    pub matrix: CMatrix,
}

pub fn pauli_x() -> CMatrix {
    Array2::from_shape_vec(
        (2, 2),
        vec![
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    )
    .expect("2x2 shape")
}

pub fn pauli_y() -> CMatrix {
    Array2::from_shape_vec(
        (2, 2),
        vec![
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    )
    .expect("2x2 shape")
}

pub fn pauli_z() -> CMatrix {
    Array2::from_shape_vec(
        (2, 2),
        vec![
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ],
    )
    .expect("2x2 shape")
}

/// Clock unitary U = diag(1, ω, ω², …), ω = e^{2πi/d}.
fn clock_unitary(dim: usize) -> CMatrix {
    Array2::from_shape_fn((dim, dim), |(i, j)| {
        if i == j {
            C64::from_polar(1.0, std::f64::consts::TAU * i as f64 / dim as f64)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Shift unitary V|j⟩ = |j+1 mod d⟩.
fn shift_unitary(dim: usize) -> CMatrix {
    Array2::from_shape_fn((dim, dim), |(i, j)| {
        if i == (j + 1) % dim {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

fn hermitian_part(u: &CMatrix) -> CMatrix {
    let ud = numkernel::adjoint(u);
    Array2::from_shape_fn(u.dim(), |(i, j)| 0.5 * (u[(i, j)] + ud[(i, j)]))
}

fn antihermitian_part(u: &CMatrix) -> CMatrix {
    // (U − U†)/(2i)
    let ud = numkernel::adjoint(u);
    let half_i = C64::new(0.0, -0.5);
    Array2::from_shape_fn(u.dim(), |(i, j)| half_i * (u[(i, j)] - ud[(i, j)]))
}

/// Catalog names accepted by [`named_operator`].
///
/// The clock and shift unitaries are not Hermitian for d > 2, so the catalog
/// stores their Hermitian combinations (U+U†)/2 and (U−U†)/(2i) under the
/// `-re`/`-im` suffixes; pairing a clock observable with a shift observable
/// gives an incompatible pair at any dimension.
pub const OPERATOR_NAMES: &[&str] = &[
    "pauli-x", "pauli-y", "pauli-z", "clock-re", "clock-im", "shift-re", "shift-im",
];

/// Look up a catalog observable at the given dimension.
pub fn named_operator(name: &str, dim: usize) -> Result<NamedOperator> {
    if dim < 2 {
        return Err(Error::DimTooSmall(dim));
    }
    let matrix = match name {
        "pauli-x" | "pauli-y" | "pauli-z" => {
            if dim != 2 {
                return Err(Error::InvalidConfig(format!(
                    "{name} is defined at dimension 2, not {dim}"
                )));
            }
            match name {
                "pauli-x" => pauli_x(),
                "pauli-y" => pauli_y(),
                _ => pauli_z(),
            }
        }
        "clock-re" | "clock" => hermitian_part(&clock_unitary(dim)),
        "clock-im" => antihermitian_part(&clock_unitary(dim)),
        "shift-re" | "shift" => hermitian_part(&shift_unitary(dim)),
        "shift-im" => antihermitian_part(&shift_unitary(dim)),
        other => return Err(Error::UnknownOperator(other.to_string())),
    };
    debug_assert!(numkernel::is_hermitian(&matrix, tol::IDENTITY));
    Ok(NamedOperator {
        name: name.to_string(),
        matrix,
    })
}
