//! Dense complex linear algebra shared by the dynamics modules.
//!
//! All Hamiltonians are expressed as ordinary frequencies in MHz and time in
//! microseconds, so a state evolves as `exp(-2πi H t)`.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;
pub type RMatrix = DMatrix<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(i phi)`.
#[inline]
pub fn cis(phi: f64) -> C64 {
    C64::from_polar(1.0, phi)
}

pub fn basis_vector(dim: usize, k: usize) -> CVector {
    let mut v = CVector::zeros(dim);
    v[k] = C64::new(1.0, 0.0);
    v
}

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Largest singular value.
pub fn operator_norm(m: &CMatrix) -> f64 {
    m.clone()
        .singular_values()
        .iter()
        .cloned()
        .fold(0.0, f64::max)
}

/// `max |U†U - 1|` entrywise.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    let p = u.adjoint() * u;
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((p[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Matrix exponential of a general complex matrix.
pub fn expm(m: &CMatrix) -> CMatrix {
    m.clone().exp()
}

/// Spectral propagator for a time-independent real symmetric Hamiltonian.
///
/// Diagonalizes once and then evolves any state to any time in `O(d^2)`.
#[derive(Debug, Clone)]
pub struct RealSpectralPropagator {
    energies: Vec<f64>,
    vectors: RMatrix,
}

impl RealSpectralPropagator {
    pub fn new(h: RMatrix) -> Self {
        let eig = nalgebra::SymmetricEigen::new(h);
        Self {
            energies: eig.eigenvalues.iter().cloned().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// Overlaps `<E_k | psi0>` for a real initial state.
    pub fn project(&self, psi0: &DVector<f64>) -> Vec<f64> {
        (self.vectors.transpose() * psi0).iter().cloned().collect()
    }

    /// Overlaps for the basis state `k`, i.e. row `k` of the eigenvector matrix.
    pub fn project_basis(&self, k: usize) -> Vec<f64> {
        self.vectors.row(k).iter().cloned().collect()
    }

    /// Amplitudes at time `t` given eigenbasis coefficients.
    pub fn amplitudes_into(&self, coeffs: &[f64], t: f64, out: &mut [C64]) {
        let d = self.dim();
        let phased: Vec<C64> = coeffs
            .iter()
            .zip(&self.energies)
            .map(|(&ck, &e)| cis(-TAU * e * t) * ck)
            .collect();
        for (row, slot) in out.iter_mut().enumerate().take(d) {
            let mut acc = C64::new(0.0, 0.0);
            for (k, p) in phased.iter().enumerate() {
                acc += p * self.vectors[(row, k)];
            }
            *slot = acc;
        }
    }

    pub fn evolve_basis(&self, k: usize, t: f64) -> CVector {
        let coeffs = self.project_basis(k);
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.amplitudes_into(&coeffs, t, &mut out);
        CVector::from_vec(out)
    }
}

/// `exp(-2πi H t)` for a Hermitian `H`.
pub fn unitary_propagator(h: &CMatrix, t: f64) -> CMatrix {
    let eig = nalgebra::SymmetricEigen::new(h.clone());
    let d = h.nrows();
    let mut phases = CMatrix::zeros(d, d);
    for k in 0..d {
        phases[(k, k)] = cis(-TAU * eig.eigenvalues[k] * t);
    }
    &eig.eigenvectors * phases * eig.eigenvectors.adjoint()
}
