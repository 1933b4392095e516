//! Four-level ladder driven by three lasers: optical Bloch equations,
//! excitation spectra, and Doppler averaging.
//!
//! Levels are `|1⟩ … |4⟩` (indices 0–3). The density matrix is vectorized
//! row-major, `vec(ρ)[4i + j] = ρ_ij`, so `vec(AρB) = (A ⊗ Bᵀ) vec(ρ)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exec::{task_rng, Runner};
use crate::linalg::{c, expm, hermiticity_defect, CMatrix, CVector, C64, I};
use crate::model::{dot3, BeamGeometry, LaserField, Vec3};
use crate::ode::{self, Stepping};
use crate::trace::{check_increasing, ScanTrace};

pub const LEVELS: usize = 4;
#[cfg(test)]
const DIM: usize = LEVELS * LEVELS;

/// Boltzmann constant, J/K.
const K_B: f64 = 1.380_649e-23;
/// Atomic mass unit, kg.
const AMU: f64 = 1.660_539_066_60e-27;

/// The driven, dissipative four-level ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelScheme {
    /// Fields driving `|1⟩→|2⟩`, `|2⟩→|3⟩`, `|3⟩→|4⟩`.
    pub steps: [LaserField; 3],
    /// Population decay rates (natural linewidths) `γ₂, γ₃, γ₄` in MHz.
    /// `|2⟩` decays to `|1⟩`, `|3⟩` to `|2⟩`, `|4⟩` to `|3⟩`.
    pub decay_mhz: [f64; 3],
    pub interaction_time_us: f64,
}

impl LevelScheme {
    pub fn validate(&self) -> Result<()> {
        for (i, f) in self.steps.iter().enumerate() {
            f.validate(&format!("steps[{i}]."))?;
        }
        for (i, g) in self.decay_mhz.iter().enumerate() {
            if !(*g >= 0.0) || !g.is_finite() {
                return Err(invalid(format!("decay_mhz[{i}]"), "must be non-negative"));
            }
        }
        if !(self.interaction_time_us >= 0.0) || !self.interaction_time_us.is_finite() {
            return Err(invalid("interaction_time_us", "must be non-negative"));
        }
        Ok(())
    }

    pub fn detunings(&self) -> [f64; 3] {
        self.steps.map(|s| s.detuning_mhz)
    }

    pub fn with_detunings(&self, d: [f64; 3]) -> Self {
        let mut s = self.clone();
        for (f, v) in s.steps.iter_mut().zip(d) {
            f.detuning_mhz = v;
        }
        s
    }

    pub fn with_delta3(&self, d3: f64) -> Self {
        let mut s = self.clone();
        s.steps[2].detuning_mhz = d3;
        s
    }

    /// Rotating-frame Hamiltonian in MHz.
    pub fn hamiltonian(&self) -> CMatrix {
        let [d1, d2, d3] = self.detunings();
        let mut h = CMatrix::zeros(LEVELS, LEVELS);
        h[(1, 1)] = c(-d1, 0.0);
        h[(2, 2)] = c(-(d1 + d2), 0.0);
        h[(3, 3)] = c(-(d1 + d2 + d3), 0.0);
        for (i, f) in self.steps.iter().enumerate() {
            h[(i, i + 1)] = c(f.rabi_mhz / 2.0, 0.0);
            h[(i + 1, i)] = c(f.rabi_mhz / 2.0, 0.0);
        }
        h
    }
}

/// A density matrix on `dim` levels.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(pub CMatrix);

impl DensityMatrix {
    /// Pure state `|k⟩⟨k|`.
    pub fn pure(dim: usize, k: usize) -> Self {
        let mut m = CMatrix::zeros(dim, dim);
        m[(k, k)] = c(1.0, 0.0);
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[(k, k)].re
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        hermiticity_defect(&self.0)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * c(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_vec(&self) -> CVector {
        let d = self.dim();
        CVector::from_iterator(d * d, (0..d * d).map(|k| self.0[(k / d, k % d)]))
    }

    pub fn from_vec(v: &CVector) -> Self {
        let d = (v.len() as f64).sqrt().round() as usize;
        Self(CMatrix::from_fn(d, d, |i, j| v[i * d + j]))
    }
}

/// Linear generator `dvec(ρ)/dt = L vec(ρ)`, rates in 1/μs.
#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    pub matrix: CMatrix,
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Adds `rate · D[L]` to `out`.
fn add_dissipator(out: &mut CMatrix, l: &CMatrix, rate: f64) {
    let id = CMatrix::identity(l.nrows(), l.ncols());
    let ldl = l.adjoint() * l;
    let term = kron(l, &l.conjugate())
        - kron(&ldl, &id) * c(0.5, 0.0)
        - kron(&id, &ldl.transpose()) * c(0.5, 0.0);
    *out += term * c(rate, 0.0);
}

/// Builds the optical Bloch generator.
///
/// * coherent part `−2πi[H, ρ]`;
/// * spontaneous decay `|k⟩ → |k−1⟩` at `2πγ_k`;
/// * laser linewidths as phase diffusion: step `i`'s linewidth `Γ_i` (FWHM)
///   dephases every coherence that straddles that step at `πΓ_i`, so `ρ_{1j}`
///   decays at `π(Γ₁ + … + Γ_{j−1})` on top of any population decay.
pub fn build_liouvillian(scheme: &LevelScheme) -> Liouvillian {
    let h = scheme.hamiltonian();
    let id = CMatrix::identity(LEVELS, LEVELS);
    let mut l = (kron(&h, &id) - kron(&id, &h.transpose())) * (-I * TAU);
    for (k, gamma) in scheme.decay_mhz.iter().enumerate() {
        if *gamma > 0.0 {
            let mut jump = CMatrix::zeros(LEVELS, LEVELS);
            jump[(k, k + 1)] = c(1.0, 0.0);
            add_dissipator(&mut l, &jump, TAU * gamma);
        }
    }
    for (i, f) in scheme.steps.iter().enumerate() {
        if f.linewidth_mhz > 0.0 {
            // Projector on the levels above step i. D[P] damps ρ_jk with
            // j ≤ i < k at half the rate, hence 2πΓ here for πΓ there.
            let p = CMatrix::from_fn(LEVELS, LEVELS, |a, b| {
                if a == b && a > i {
                    c(1.0, 0.0)
                } else {
                    c(0.0, 0.0)
                }
            });
            add_dissipator(&mut l, &p, TAU * f.linewidth_mhz);
        }
    }
    Liouvillian { matrix: l }
}

/// Integrates the master equation to time `t` with the given stepping.
pub fn evolve(
    rho0: &DensityMatrix,
    l: &Liouvillian,
    t: f64,
    stepping: Stepping,
) -> Result<DensityMatrix> {
    if t == 0.0 {
        return Ok(rho0.clone());
    }
    let m = &l.matrix;
    let f = |_t: f64, y: &CVector, dy: &mut CVector| m.mul_to(y, dy);
    let out = ode::integrate(f, 0.0, &rho0.to_vec(), &[t], stepping)?;
    Ok(DensityMatrix::from_vec(&out[0]))
}

/// Exact propagation `exp(L t) vec(ρ₀)` for a constant generator.
pub fn evolve_exact(rho0: &DensityMatrix, l: &Liouvillian, t: f64) -> DensityMatrix {
    if t == 0.0 {
        return rho0.clone();
    }
    let u = expm(&(&l.matrix * c(t, 0.0)));
    DensityMatrix::from_vec(&(u * rho0.to_vec()))
}

/// How scans propagate each point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Propagation {
    /// Matrix exponential of the constant generator.
    #[default]
    Exact,
    /// Time stepping.
    Integrate(Stepping),
}

/// Population of `|4⟩` at the end of the interaction, starting in `|1⟩`.
pub fn rydberg_population(scheme: &LevelScheme, propagation: Propagation) -> Result<f64> {
    let l = build_liouvillian(scheme);
    let rho0 = DensityMatrix::pure(LEVELS, 0);
    let t = scheme.interaction_time_us;
    let rho = match propagation {
        Propagation::Exact => evolve_exact(&rho0, &l, t),
        Propagation::Integrate(s) => evolve(&rho0, &l, t, s)?,
    };
    Ok(rho.population(LEVELS - 1))
}

/// Signal `N₀·ρ₄₄(T)` on a grid of third-step detunings.
pub fn scan_spectrum(
    scheme: &LevelScheme,
    delta3_grid: &[f64],
    n0: f64,
    propagation: Propagation,
    runner: &impl Runner,
) -> Result<ScanTrace> {
    scheme.validate()?;
    check_increasing("delta3_grid", delta3_grid)?;
    let signal = runner.try_map(delta3_grid.len(), |i| {
        rydberg_population(&scheme.with_delta3(delta3_grid[i]), propagation).map(|p| n0 * p)
    })?;
    Ok(ScanTrace::new(
        "delta3_MHz",
        "signal",
        delta3_grid.to_vec(),
        signal,
    ))
}

/// Thermal ensemble parameters for Doppler averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Thermal {
    pub temperature_k: f64,
    pub mass_amu: f64,
    pub n_velocity_samples: usize,
    pub seed: u64,
}

impl Thermal {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature_k >= 0.0) || !self.temperature_k.is_finite() {
            return Err(invalid("temperature_k", "must be non-negative"));
        }
        if !(self.mass_amu > 0.0) {
            return Err(invalid("mass_amu", "must be positive"));
        }
        if self.n_velocity_samples == 0 {
            return Err(invalid("n_velocity_samples", "must be at least 1"));
        }
        Ok(())
    }

    /// One-dimensional velocity spread `sqrt(kT/m)` in m/s.
    pub fn sigma_v(&self) -> f64 {
        (K_B * self.temperature_k / (self.mass_amu * AMU)).sqrt()
    }
}

/// Doppler-shifted detunings `δ_i − k_i·v` (v in m/s, k in 1/nm → MHz).
pub fn doppler_detunings(base: [f64; 3], k: &[Vec3; 3], v: &Vec3) -> [f64; 3] {
    std::array::from_fn(|i| base[i] - dot3(&k[i], v) * 1e3)
}

/// Spectrum averaged over a Maxwell–Boltzmann velocity distribution.
///
/// Each grid point draws its own velocities from a stream keyed by the grid
/// index. Only the velocity component along `K = k₁ + k₂ + k₃` moves the
/// multi-photon resonance, so when `K ≠ 0` that component is drawn from a
/// defensive mixture — half thermal, half a Gaussian centred on the velocity
/// class resonant at this detuning — and reweighted by `p/q ≤ 2`. This keeps
/// the estimator unbiased while resolving lines much narrower than the
/// Doppler profile. With a closed geometry plain thermal sampling is used.
pub fn doppler_averaged_spectrum(
    scheme: &LevelScheme,
    geometry: &BeamGeometry,
    thermal: &Thermal,
    delta3_grid: &[f64],
    propagation: Propagation,
    runner: &impl Runner,
) -> Result<ScanTrace> {
    scheme.validate()?;
    geometry.validate()?;
    thermal.validate()?;
    check_increasing("delta3_grid", delta3_grid)?;
    let sigma = thermal.sigma_v();
    if sigma == 0.0 {
        return scan_spectrum(scheme, delta3_grid, 1.0, propagation, runner);
    }
    let k = geometry.wavevectors();
    let ksum = geometry.wavevector_sum();
    let kmag = crate::model::norm3(&ksum);
    let kmax = geometry
        .wavelengths_nm
        .iter()
        .map(|l| 1.0 / l)
        .fold(0.0, f64::max);
    // Velocity-space width of a single line: Fourier width plus linewidths.
    let t = scheme.interaction_time_us.max(1e-9);
    let line_mhz = 2.0 / t + scheme.steps.iter().map(|s| s.linewidth_mhz).sum::<f64>();
    let guided = kmag > 1e-9 * kmax;
    let axis: Vec3 = if guided {
        ksum.map(|x| x / kmag)
    } else {
        [1.0, 0.0, 0.0]
    };
    let (e1, e2) = orthonormal_complement(&axis);
    let base = scheme.detunings();

    let signal = runner.try_map(delta3_grid.len(), |gi| {
        let d3 = delta3_grid[gi];
        let mut rng = task_rng(thermal.seed, gi as u64);
        let v_res = (base[0] + base[1] + d3) / (kmag * 1e3);
        let w = (line_mhz / (kmag * 1e3)).max(1e-12);
        let mut acc = 0.0;
        for _ in 0..thermal.n_velocity_samples {
            let a: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let b: f64 = rng.sample::<f64, _>(StandardNormal) * sigma;
            let (u, weight) = if guided {
                let from_line = rng.random::<bool>();
                let u = if from_line {
                    Normal::new(v_res, w)
                        .expect("positive width")
                        .sample(&mut rng)
                } else {
                    rng.sample::<f64, _>(StandardNormal) * sigma
                };
                let p = gauss_pdf(u, 0.0, sigma);
                let q = 0.5 * p + 0.5 * gauss_pdf(u, v_res, w);
                (u, if q > 0.0 { p / q } else { 0.0 })
            } else {
                (rng.sample::<f64, _>(StandardNormal) * sigma, 1.0)
            };
            let v: Vec3 = std::array::from_fn(|c| u * axis[c] + a * e1[c] + b * e2[c]);
            let d = doppler_detunings([base[0], base[1], d3], &k, &v);
            acc += weight * rydberg_population(&scheme.with_detunings(d), propagation)?;
        }
        Ok(acc / thermal.n_velocity_samples as f64)
    })?;
    Ok(ScanTrace::new(
        "delta3_MHz",
        "signal",
        delta3_grid.to_vec(),
        signal,
    ))
}

fn gauss_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

fn orthonormal_complement(a: &Vec3) -> (Vec3, Vec3) {
    let trial = if a[0].abs() < 0.9 {
        [1.0, 0.0, 0.0]
    } else {
        [0.0, 1.0, 0.0]
    };
    let d = dot3(&trial, a);
    let mut e1: Vec3 = std::array::from_fn(|i| trial[i] - d * a[i]);
    let n = crate::model::norm3(&e1);
    e1.iter_mut().for_each(|x| *x /= n);
    let e2 = [
        a[1] * e1[2] - a[2] * e1[1],
        a[2] * e1[0] - a[0] * e1[2],
        a[0] * e1[1] - a[1] * e1[0],
    ];
    (e1, e2)
}
