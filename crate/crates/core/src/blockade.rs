//! Mesoscopic ensembles in the dipole-blockade regime: random ensembles,
//! excitation dynamics truncated at two excitations, the Jaynes–Cummings
//! reference, collapse/revival metrics, chirped excitation and STIRAP.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{task_rng, Runner};
use crate::linalg::{basis_vector, c, cis, CMatrix, CVector, RMatrix, RealSpectralPropagator, C64};
use crate::model::{dist3, Vec3};
use crate::ode::{self, Stepping};
use crate::trace::{check_increasing, TimeTrace};

/// Shell population above which the two-excitation truncation is suspect.
pub const P2_WARNING: f64 = 0.2;

/// Spatial density of atoms in the trap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrapProfile {
    /// Uniform inside a sphere of the trap radius.
    UniformSphere,
    /// Isotropic Gaussian with the trap radius as per-axis standard deviation.
    #[default]
    Gaussian,
}

/// One random realization of the trapped ensemble.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSample {
    pub positions: Vec<Vec3>,
}

impl EnsembleSample {
    pub fn atom_count(&self) -> usize {
        self.positions.len()
    }
}

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

/// Draws `N ~ Poisson(N̄)` atoms, placing them by `profile` and re-drawing any
/// atom closer than `r_min` to one already placed.
pub fn sample_ensemble(
    n_bar: f64,
    radius_um: f64,
    profile: TrapProfile,
    r_min_um: f64,
    rng: &mut impl Rng,
) -> Result<EnsembleSample> {
    if !(n_bar > 0.0) || !n_bar.is_finite() {
        return Err(invalid("n_bar", "mean atom number must be positive"));
    }
    if !(radius_um > 0.0) || !radius_um.is_finite() {
        return Err(invalid("radius_um", "trap radius must be positive"));
    }
    let n = Poisson::new(n_bar)
        .map_err(|e| invalid("n_bar", e.to_string()))?
        .sample(rng) as usize;
    let mut positions: Vec<Vec3> = Vec::with_capacity(n);
    let mut attempts = 0;
    while positions.len() < n {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(invalid(
                "r_min_um",
                "exclusion distance too large for the trap",
            ));
        }
        let p: Vec3 = match profile {
            TrapProfile::UniformSphere => loop {
                let p: Vec3 =
                    std::array::from_fn(|_| (2.0 * rng.random::<f64>() - 1.0) * radius_um);
                if crate::model::norm3(&p) <= radius_um {
                    break p;
                }
            },
            TrapProfile::Gaussian => {
                std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal) * radius_um)
            }
        };
        if positions.iter().all(|q| dist3(&p, q) >= r_min_um) {
            positions.push(p);
        }
    }
    Ok(EnsembleSample { positions })
}

/// Ground state, `N` single excitations, and (for `k_max = 2`) `C(N,2)`
/// doubly excited states, in that order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectiveBasis {
    pub atom_count: usize,
    pub k_max: usize,
}

impl CollectiveBasis {
    pub fn new(atom_count: usize, k_max: usize) -> Result<Self> {
        if !(1..=2).contains(&k_max) {
            return Err(invalid("k_max", "must be 1 or 2"));
        }
        Ok(Self { atom_count, k_max })
    }

    pub fn dim(&self) -> usize {
        let n = self.atom_count;
        1 + n
            + if self.k_max == 2 {
                n * n.saturating_sub(1) / 2
            } else {
                0
            }
    }

    /// Excitation number of basis state `k`.
    pub fn shell(&self, k: usize) -> usize {
        if k == 0 {
            0
        } else if k <= self.atom_count {
            1
        } else {
            2
        }
    }
}

/// Collective Hamiltonian (MHz). `c6 = ∞` enforces perfect blockade by
/// dropping the doubly excited shell.
pub fn build_blockade_hamiltonian(
    sample: &EnsembleSample,
    rabi_mhz: f64,
    detuning_mhz: f64,
    c6_mhz_um6: f64,
    k_max: usize,
    r_min_um: f64,
) -> Result<(RMatrix, CollectiveBasis)> {
    let n = sample.atom_count();
    let k_max = if c6_mhz_um6.is_infinite() { 1 } else { k_max };
    let basis = CollectiveBasis::new(n, k_max)?;
    let mut h = RMatrix::zeros(basis.dim(), basis.dim());
    let half = rabi_mhz / 2.0;
    for i in 0..n {
        h[(0, 1 + i)] = half;
        h[(1 + i, 0)] = half;
        h[(1 + i, 1 + i)] = detuning_mhz;
    }
    if k_max == 2 {
        let mut k = 1 + n;
        for i in 0..n {
            for j in i + 1..n {
                let r = dist3(&sample.positions[i], &sample.positions[j]);
                if !(r > 0.0) || r < r_min_um {
                    return Err(Error::MinDistance {
                        i,
                        j,
                        distance: r,
                        r_min: r_min_um,
                    });
                }
                h[(k, k)] = c6_mhz_um6 / r.powi(6) + 2.0 * detuning_mhz;
                for a in [i, j] {
                    h[(1 + a, k)] = half;
                    h[(k, 1 + a)] = half;
                }
                k += 1;
            }
        }
    }
    Ok((h, basis))
}

/// Shell populations versus time, starting from the ground state.
pub fn excitation_dynamics(
    h: &RMatrix,
    basis: &CollectiveBasis,
    t_grid: &[f64],
) -> Result<TimeTrace> {
    if h.nrows() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: h.nrows(),
        });
    }
    let mut tr = TimeTrace::zeros(t_grid);
    let prop = RealSpectralPropagator::new(h.clone());
    let coeffs = prop.project_basis(0);
    let mut amps = vec![c(0.0, 0.0); prop.dim()];
    for (i, &t) in t_grid.iter().enumerate() {
        prop.amplitudes_into(&coeffs, t, &mut amps);
        for (k, a) in amps.iter().enumerate() {
            let p = a.norm_sqr();
            match basis.shell(k) {
                0 => tr.p0[i] += p,
                1 => tr.p1[i] += p,
                _ => tr.p2[i] += p,
            }
        }
    }
    Ok(tr)
}

/// Trap and drive parameters for ensemble averaging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleParams {
    pub n_bar: f64,
    pub radius_um: f64,
    #[serde(default)]
    pub profile: TrapProfile,
    #[serde(default = "default_r_min")]
    pub r_min_um: f64,
    pub rabi_mhz: f64,
    #[serde(default)]
    pub detuning_mhz: f64,
    pub c6_mhz_um6: f64,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
}

fn default_r_min() -> f64 {
    0.5
}

fn default_k_max() -> usize {
    2
}

impl EnsembleParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_bar > 0.0) {
            return Err(invalid("n_bar", "must be positive"));
        }
        if !(self.radius_um > 0.0) {
            return Err(invalid("radius_um", "must be positive"));
        }
        if !(self.r_min_um >= 0.0) {
            return Err(invalid("r_min_um", "must be non-negative"));
        }
        if !(self.rabi_mhz >= 0.0) || !self.rabi_mhz.is_finite() {
            return Err(invalid("rabi_mhz", "must be non-negative"));
        }
        if !(self.c6_mhz_um6 >= 0.0) {
            return Err(invalid("c6_mhz_um6", "must be non-negative"));
        }
        CollectiveBasis::new(0, self.k_max).map(|_| ())
    }
}

/// Shell populations averaged over Poisson atom number and positions.
pub fn ensemble_average(
    params: &EnsembleParams,
    t_grid: &[f64],
    n_samples: usize,
    seed: u64,
    runner: &impl Runner,
) -> Result<TimeTrace> {
    params.validate()?;
    check_increasing("t_grid", t_grid)?;
    if n_samples == 0 {
        return Err(invalid("n_samples", "must be at least 1"));
    }
    let traces = runner.try_map(n_samples, |s| {
        let mut rng = task_rng(seed, s as u64);
        let sample = sample_ensemble(
            params.n_bar,
            params.radius_um,
            params.profile,
            params.r_min_um,
            &mut rng,
        )?;
        if sample.atom_count() == 0 {
            let mut tr = TimeTrace::zeros(t_grid);
            tr.p0.iter_mut().for_each(|p| *p = 1.0);
            return Ok(tr);
        }
        let (h, basis) = build_blockade_hamiltonian(
            &sample,
            params.rabi_mhz,
            params.detuning_mhz,
            params.c6_mhz_um6,
            params.k_max,
            params.r_min_um,
        )?;
        excitation_dynamics(&h, &basis, t_grid)
    })?;
    let mut avg = TimeTrace::zeros(t_grid);
    for tr in &traces {
        avg.accumulate(tr, 1.0);
    }
    avg.scale(1.0 / n_samples as f64);
    let p2 = avg.p2.iter().cloned().fold(0.0, f64::max);
    if p2 > P2_WARNING {
        log::warn!("mean P2 reaches {p2:.3}; the two-excitation truncation is no longer reliable");
    }
    Ok(avg)
}

/// `P₁(t) = Σ_N Poisson(N̄, N) sin²(π Ω₁ √N t)`, truncated once the remaining
/// Poisson tail is below `1e−12`.
pub fn jc_reference(n_bar: f64, rabi1_mhz: f64, t_grid: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; t_grid.len()];
    if !(n_bar > 0.0) {
        return out;
    }
    let mut weight = (-n_bar).exp();
    let mut cumulative = weight;
    let mut n = 0u64;
    while 1.0 - cumulative > 1e-12 || (n as f64) < n_bar {
        n += 1;
        weight *= n_bar / n as f64;
        cumulative += weight;
        let freq = rabi1_mhz * (n as f64).sqrt();
        for (o, t) in out.iter_mut().zip(t_grid) {
            *o += weight * (PI * freq * t).sin().powi(2);
        }
        if n > 100_000 {
            break;
        }
    }
    out
}

/// Full-blockade `P₁(t)` for exactly `n` atoms.
pub fn jc_fixed(n: usize, rabi1_mhz: f64, t_grid: &[f64]) -> Vec<f64> {
    let f = rabi1_mhz * (n as f64).sqrt();
    t_grid.iter().map(|t| (PI * f * t).sin().powi(2)).collect()
}

/// Time windows for the collapse/revival metric, from the Jaynes–Cummings
/// time scales of a Poisson ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RevivalWindows {
    /// Mean collective Rabi period `1/(Ω₁√N̄)`.
    pub period: f64,
    pub initial: (f64, f64),
    pub collapse: (f64, f64),
    pub revival: (f64, f64),
}

impl RevivalWindows {
    pub fn from_jc(n_bar: f64, rabi1_mhz: f64) -> Self {
        let period = 1.0 / (rabi1_mhz * n_bar.sqrt());
        let t_rev = 1.0 / (rabi1_mhz * ((n_bar + 1.0).sqrt() - n_bar.sqrt()));
        Self {
            period,
            initial: (0.0, period),
            collapse: (0.45 * t_rev, 0.6 * t_rev),
            revival: (0.75 * t_rev, 1.25 * t_rev),
        }
    }
}

/// Largest peak-to-peak swing over sliding windows one period long.
fn envelope(t: &[f64], y: &[f64], (a, b): (f64, f64), period: f64) -> f64 {
    let idx: Vec<usize> = (0..t.len())
        .filter(|&i| t[i] >= a - 1e-12 && t[i] <= b + 1e-12)
        .collect();
    let mut best: f64 = 0.0;
    for (pos, &i) in idx.iter().enumerate() {
        let end = t[i] + period;
        if end > b + 1e-12 && pos > 0 {
            break;
        }
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &j in &idx[pos..] {
            if t[j] > end + 1e-12 {
                break;
            }
            lo = lo.min(y[j]);
            hi = hi.max(y[j]);
        }
        best = best.max(hi - lo);
    }
    best
}

/// `(revival envelope − collapse envelope) / initial envelope`, clamped to
/// `[0, 1]`. The envelope of a window is the largest peak-to-peak swing over
/// one mean Rabi period inside it.
pub fn revival_contrast(t: &[f64], p1: &[f64], windows: &RevivalWindows) -> Result<f64> {
    let have = t.last().copied().unwrap_or(0.0);
    if have + 1e-12 < windows.revival.1 {
        return Err(Error::WindowTooShort {
            have,
            need: windows.revival.1,
        });
    }
    let a0 = envelope(t, p1, windows.initial, windows.period);
    if a0 <= 0.0 {
        return Ok(0.0);
    }
    let col = envelope(t, p1, windows.collapse, windows.period);
    let rev = envelope(t, p1, windows.revival, windows.period);
    Ok(((rev - col) / a0).clamp(0.0, 1.0))
}

/// Least-squares fit of `sin²(π f t)` over the samples with `t ≤ t_max`,
/// searching `f` in `[f_lo, f_hi]`.
pub fn fit_rabi_frequency(t: &[f64], p: &[f64], t_max: f64, (f_lo, f_hi): (f64, f64)) -> f64 {
    let cost = |f: f64| -> f64 {
        t.iter()
            .zip(p)
            .filter(|(ti, _)| **ti <= t_max)
            .map(|(ti, pi)| ((PI * f * ti).sin().powi(2) - pi).powi(2))
            .sum()
    };
    // Coarse scan, then golden-section refinement around the best cell.
    let n = 400;
    let step = (f_hi - f_lo) / n as f64;
    let best = (0..=n)
        .map(|k| f_lo + step * k as f64)
        .min_by(|a, b| cost(*a).total_cmp(&cost(*b)))
        .expect("nonempty scan");
    let (mut a, mut b) = ((best - step).max(f_lo), (best + step).min(f_hi));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..100 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if cost(x1) < cost(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    0.5 * (a + b)
}

/// Time dependence of a drive amplitude over a segment of length `T`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Envelope {
    #[default]
    Constant,
    /// `sin²(π t/T)`: smooth switch-on and switch-off.
    SinSquared,
}

impl Envelope {
    pub fn at(self, s: f64) -> f64 {
        match self {
            Envelope::Constant => 1.0,
            Envelope::SinSquared => (PI * s).sin().powi(2),
        }
    }
}

/// Linear frequency sweep with a fixed single-atom Rabi amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChirpPulse {
    pub rabi_mhz: f64,
    pub sweep_start_mhz: f64,
    pub sweep_end_mhz: f64,
    pub duration_us: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

impl ChirpPulse {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_us > 0.0) || !self.duration_us.is_finite() {
            return Err(invalid("duration_us", "must be positive"));
        }
        if !(self.rabi_mhz >= 0.0) || !self.rabi_mhz.is_finite() {
            return Err(invalid("rabi_mhz", "must be non-negative"));
        }
        if !self.sweep_start_mhz.is_finite() || !self.sweep_end_mhz.is_finite() {
            return Err(invalid("sweep", "endpoints must be finite"));
        }
        Ok(())
    }

    /// Sweep rate `α` in MHz/μs.
    pub fn sweep_rate(&self) -> f64 {
        (self.sweep_end_mhz - self.sweep_start_mhz) / self.duration_us
    }

    pub fn detuning_at(&self, t: f64) -> f64 {
        self.sweep_start_mhz + self.sweep_rate() * t
    }

    pub fn crosses_resonance(&self) -> bool {
        self.sweep_start_mhz * self.sweep_end_mhz <= 0.0
    }
}

/// Propagator of the chirped two-level problem `{|g⟩, |e⟩}` with coupling
/// `(scale·Ω(t)/2)·e^{−iφ}` above the diagonal and `−δ(t)` on `|e⟩`.
pub fn chirp_propagator(
    chirp: &ChirpPulse,
    scale: f64,
    phase: f64,
    stepping: Stepping,
) -> Result<CMatrix> {
    chirp.validate()?;
    let t_end = chirp.duration_us;
    let coupling = cis(-phase);
    let rhs = |t: f64, y: &CVector, dy: &mut CVector| {
        let om = 0.5 * scale * chirp.rabi_mhz * chirp.envelope.at(t / t_end);
        let d = chirp.detuning_at(t);
        let h01 = coupling * om;
        dy[0] = (h01 * y[1]) * c(0.0, -TAU);
        dy[1] = (h01.conj() * y[0] - y[1] * d) * c(0.0, -TAU);
    };
    let mut u = CMatrix::zeros(2, 2);
    for k in 0..2 {
        let col = ode::integrate(rhs, 0.0, &basis_vector(2, k), &[t_end], stepping)?.remove(0);
        u.set_column(k, &col);
    }
    Ok(u)
}

/// Final single-excitation probability of `n` perfectly blockaded atoms
/// swept through resonance (collective coupling `Ω₁√N`).
pub fn chirped_excitation(n: usize, chirp: &ChirpPulse) -> Result<f64> {
    if n == 0 {
        return Err(invalid("N", "at least one atom is required"));
    }
    if !chirp.crosses_resonance() {
        return Err(invalid("sweep", "the sweep must cross zero detuning"));
    }
    let u = chirp_propagator(chirp, (n as f64).sqrt(), 0.0, Stepping::adaptive(1e-10))?;
    Ok(u[(1, 0)].norm_sqr())
}

/// Landau–Zener excitation probability `1 − exp(−π² Ω² / α)` for an infinite
/// linear sweep at rate `α` (MHz/μs) with Rabi frequency `Ω` (MHz).
pub fn landau_zener(rabi_mhz: f64, sweep_rate: f64) -> f64 {
    1.0 - (-(PI * PI) * rabi_mhz * rabi_mhz / sweep_rate.abs()).exp()
}

/// A Gaussian Rabi-frequency envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianPulse {
    pub peak_rabi_mhz: f64,
    pub center_us: f64,
    /// Standard deviation of the envelope.
    pub width_us: f64,
}

impl GaussianPulse {
    pub fn at(&self, t: f64) -> f64 {
        let z = (t - self.center_us) / self.width_us;
        self.peak_rabi_mhz * (-0.5 * z * z).exp()
    }
}

/// Pump (`|1⟩↔|2⟩`) and Stokes (`|2⟩↔|3⟩`) pulses for a two-photon-resonant
/// three-level transfer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StirapPulses {
    pub pump: GaussianPulse,
    pub stokes: GaussianPulse,
    #[serde(default)]
    pub intermediate_detuning_mhz: f64,
}

impl StirapPulses {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("pump", &self.pump), ("stokes", &self.stokes)] {
            if !(p.width_us > 0.0) || !p.width_us.is_finite() {
                return Err(invalid(format!("{name}.width_us"), "must be positive"));
            }
            if !(p.peak_rabi_mhz >= 0.0) || !p.center_us.is_finite() {
                return Err(invalid(
                    format!("{name}.peak_rabi_mhz"),
                    "must be non-negative",
                ));
            }
        }
        Ok(())
    }

    /// Counter-intuitive order: Stokes precedes pump.
    pub fn is_counter_intuitive(&self) -> bool {
        self.stokes.center_us < self.pump.center_us
    }

    /// Same pulses with the centres exchanged.
    pub fn swapped(&self) -> Self {
        let mut s = *self;
        std::mem::swap(&mut s.pump.center_us, &mut s.stokes.center_us);
        s
    }

    fn span(&self) -> (f64, f64) {
        let lo = (self.pump.center_us - 6.0 * self.pump.width_us)
            .min(self.stokes.center_us - 6.0 * self.stokes.width_us);
        let hi = (self.pump.center_us + 6.0 * self.pump.width_us)
            .max(self.stokes.center_us + 6.0 * self.stokes.width_us);
        (lo, hi)
    }
}

/// Final population of `|3⟩` starting from `|1⟩`.
pub fn stirap_transfer(pulses: &StirapPulses, stepping: Stepping) -> Result<f64> {
    let (_, t1) = pulses.span();
    let tr = stirap_trajectory(pulses, &[t1], stepping)?;
    Ok(tr.p2[0])
}

/// Populations of `|1⟩, |2⟩, |3⟩` (as `P0, P1, P2`) at the requested times,
/// starting from `|1⟩` well before both pulses. Times before the start of
/// the pulse window report the initial state.
pub fn stirap_trajectory(
    pulses: &StirapPulses,
    t_grid: &[f64],
    stepping: Stepping,
) -> Result<TimeTrace> {
    pulses.validate()?;
    check_increasing("t_grid", t_grid)?;
    let (t0, _) = pulses.span();
    let d = pulses.intermediate_detuning_mhz;
    let rhs = |t: f64, y: &CVector, dy: &mut CVector| {
        let p = 0.5 * pulses.pump.at(t);
        let s = 0.5 * pulses.stokes.at(t);
        let h0: C64 = y[1] * p;
        let h1: C64 = y[0] * p - y[1] * d + y[2] * s;
        let h2: C64 = y[1] * s;
        dy[0] = h0 * c(0.0, -TAU);
        dy[1] = h1 * c(0.0, -TAU);
        dy[2] = h2 * c(0.0, -TAU);
    };
    let mut tr = TimeTrace::zeros(t_grid);
    let split = t_grid.partition_point(|t| *t <= t0);
    tr.p0[..split].iter_mut().for_each(|p| *p = 1.0);
    let states = ode::integrate(rhs, t0, &basis_vector(3, 0), &t_grid[split..], stepping)?;
    for (i, psi) in states.iter().enumerate() {
        tr.p0[split + i] = psi[0].norm_sqr();
        tr.p1[split + i] = psi[1].norm_sqr();
        tr.p2[split + i] = psi[2].norm_sqr();
    }
    Ok(tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Serial;
    use crate::trace::linspace;
    use proptest::prelude::*;

    fn fixed(positions: Vec<Vec3>) -> EnsembleSample {
        EnsembleSample { positions }
    }

    #[test]
    fn sampling_is_reproducible_and_bounded() {
        let a = sample_ensemble(
            7.0,
            2.0,
            TrapProfile::UniformSphere,
            0.5,
            &mut task_rng(3, 0),
        )
        .unwrap();
        let b = sample_ensemble(
            7.0,
            2.0,
            TrapProfile::UniformSphere,
            0.5,
            &mut task_rng(3, 0),
        )
        .unwrap();
        assert_eq!(a, b);
        for s in 0..200 {
            let e = sample_ensemble(
                7.0,
                2.0,
                TrapProfile::UniformSphere,
                0.5,
                &mut task_rng(4, s),
            )
            .unwrap();
            assert!(e.positions.iter().all(|p| crate::model::norm3(p) <= 2.0));
        }
    }

    #[test]
    fn atom_number_is_poisson() {
        let n = 100_000;
        let counts: Vec<f64> = (0..n)
            .map(|s| {
                sample_ensemble(7.0, 50.0, TrapProfile::Gaussian, 0.0, &mut task_rng(5, s))
                    .unwrap()
                    .atom_count() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sigma = (7.0 / n as f64).sqrt();
        assert!((mean - 7.0).abs() < 3.0 * sigma, "mean {mean}");
        assert!((var / mean - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn single_atom_is_rabi_problem() {
        let (h, b) =
            build_blockade_hamiltonian(&fixed(vec![[0.0; 3]]), 2.0, 0.0, 3.2e6, 2, 0.5).unwrap();
        assert_eq!(b.dim(), 2);
        let t = linspace(0.0, 2.0, 41);
        let tr = excitation_dynamics(&h, &b, &t).unwrap();
        for (p, e) in tr.p1.iter().zip(jc_fixed(1, 2.0, &t)) {
            assert!((p - e).abs() < 1e-12);
        }
        assert!((tr.p0[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_atoms_match_hand_diagonalization() {
        // |gg⟩, |rg⟩, |gr⟩, |rr⟩ with V = C6/R⁶; the antisymmetric single
        // state decouples at energy δ, the rest is a 3×3 symmetric problem.
        let (rabi, det, c6, r) = (1.5, 0.3, 100.0, 2.0);
        let (h, _) = build_blockade_hamiltonian(
            &fixed(vec![[0.0; 3], [r, 0.0, 0.0]]),
            rabi,
            det,
            c6,
            2,
            0.5,
        )
        .unwrap();
        let mut eig: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
        eig.sort_by(f64::total_cmp);
        let v = c6 / r.powi(6);
        let s = rabi / 2.0 * 2f64.sqrt();
        let h3 = RMatrix::from_row_slice(3, 3, &[0.0, s, 0.0, s, det, s, 0.0, s, v + 2.0 * det]);
        let mut expect: Vec<f64> = h3.symmetric_eigenvalues().iter().cloned().collect();
        expect.push(det);
        expect.sort_by(f64::total_cmp);
        for (a, b) in eig.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn infinite_c6_blocks_double_excitation() {
        let s = fixed(vec![
            [0.0; 3],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]);
        let (h, b) = build_blockade_hamiltonian(&s, 1.0, 0.0, f64::INFINITY, 2, 0.5).unwrap();
        assert_eq!(b.dim(), 5);
        let t = linspace(0.0, 3.0, 61);
        let tr = excitation_dynamics(&h, &b, &t).unwrap();
        assert!(tr.p2.iter().all(|p| *p == 0.0));
        // Collective enhancement: N = 4 oscillates twice as fast as N = 1.
        for (p, e) in tr.p1.iter().zip(jc_fixed(4, 1.0, &t)) {
            assert!((p - e).abs() < 1e-10);
        }
        // Huge but finite C6 approaches the same limit.
        let (h, b) = build_blockade_hamiltonian(&s, 1.0, 0.0, 1e12, 2, 0.5).unwrap();
        let tr = excitation_dynamics(&h, &b, &t).unwrap();
        assert!(tr.p2.iter().all(|p| *p < 1e-6));
    }

    #[test]
    fn jc_reference_limits() {
        let t = linspace(0.0, 5.0, 51);
        assert_eq!(jc_reference(7.0, 1.2, &[0.0])[0], 0.0);
        // Brute-force Poisson sum with explicit factorials.
        let brute: Vec<f64> = t
            .iter()
            .map(|ti| {
                (1..60)
                    .map(|n| {
                        let lnw = -7.0 + n as f64 * 7f64.ln()
                            - (1..=n).map(|k| (k as f64).ln()).sum::<f64>();
                        lnw.exp() * (PI * 1.2 * (n as f64).sqrt() * ti).sin().powi(2)
                    })
                    .sum()
            })
            .collect();
        for (a, b) in jc_reference(7.0, 1.2, &t).iter().zip(&brute) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ensemble_in_perfect_blockade_matches_jc() {
        let params = EnsembleParams {
            n_bar: 5.0,
            radius_um: 2.0,
            profile: TrapProfile::UniformSphere,
            r_min_um: 0.5,
            rabi_mhz: 1.0,
            detuning_mhz: 0.0,
            c6_mhz_um6: f64::INFINITY,
            k_max: 2,
        };
        let t = linspace(0.0, 4.0, 81);
        let avg = ensemble_average(&params, &t, 50, 1, &Serial).unwrap();
        // Rebuild the exact fixed-N mixture that the seeds produced.
        let mut expect = vec![0.0; t.len()];
        for s in 0..50 {
            let n = sample_ensemble(
                5.0,
                2.0,
                TrapProfile::UniformSphere,
                0.5,
                &mut task_rng(1, s),
            )
            .unwrap()
            .atom_count();
            for (e, v) in expect.iter_mut().zip(jc_fixed(n, 1.0, &t)) {
                *e += if n == 0 { 0.0 } else { v / 50.0 };
            }
        }
        for (a, b) in avg.p1.iter().zip(&expect) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn contrast_edge_cases() {
        let w = RevivalWindows::from_jc(7.0, 1.2);
        let t = linspace(0.0, 10.0, 2001);
        assert_eq!(revival_contrast(&t, &vec![0.3; t.len()], &w).unwrap(), 0.0);
        // A persistent oscillation has no collapse to revive from.
        let pure = jc_fixed(7, 1.2, &t);
        assert!(revival_contrast(&t, &pure, &w).unwrap() < 0.05);
        // Oscillation switched off in the collapse window and back on in the
        // revival window: full contrast.
        let gated: Vec<f64> = t
            .iter()
            .zip(&pure)
            .map(|(ti, p)| {
                if *ti > w.collapse.0 - 0.5 && *ti < w.collapse.1 + 0.3 {
                    0.5
                } else {
                    *p
                }
            })
            .collect();
        assert!(revival_contrast(&t, &gated, &w).unwrap() > 0.95);
        let jc = jc_reference(7.0, 1.2, &t);
        assert!(revival_contrast(&t, &jc, &w).unwrap() > 0.2);
        assert!(matches!(
            revival_contrast(&t[..100], &jc[..100], &w),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn rabi_fit_recovers_frequency() {
        let t = linspace(0.0, 1.0, 201);
        let p = jc_fixed(3, 1.1, &t);
        let f = fit_rabi_frequency(&t, &p, 1.0 / (1.1 * 3f64.sqrt()), (0.5, 4.0));
        assert!((f - 1.1 * 3f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn chirp_limits() {
        let slow = ChirpPulse {
            rabi_mhz: 3.0,
            sweep_start_mhz: -50.0,
            sweep_end_mhz: 50.0,
            duration_us: 10.0,
            envelope: Envelope::Constant,
        };
        assert!(chirped_excitation(1, &slow).unwrap() > 0.98);
        let sudden = ChirpPulse {
            duration_us: 1e-4,
            ..slow
        };
        assert!(chirped_excitation(1, &sudden).unwrap() < 0.01);
        let off = ChirpPulse {
            sweep_start_mhz: 10.0,
            ..slow
        };
        assert!(chirped_excitation(1, &off).is_err());
    }

    #[test]
    fn stirap_cases() {
        let pulses = StirapPulses {
            pump: GaussianPulse {
                peak_rabi_mhz: 20.0,
                center_us: 1.0,
                width_us: 1.0,
            },
            stokes: GaussianPulse {
                peak_rabi_mhz: 20.0,
                center_us: -1.0,
                width_us: 1.0,
            },
            intermediate_detuning_mhz: 0.0,
        };
        let eff = stirap_transfer(&pulses, Stepping::adaptive(1e-9)).unwrap();
        assert!(eff > 0.99, "{eff}");
        let fine = stirap_transfer(&pulses, Stepping::adaptive(1e-11)).unwrap();
        assert!((eff - fine).abs() < 1e-6);
        let intuitive = stirap_transfer(&pulses.swapped(), Stepping::adaptive(1e-9)).unwrap();
        assert!(intuitive < eff);
        let tr = stirap_trajectory(
            &pulses,
            &crate::trace::linspace(-8.0, 8.0, 33),
            Stepping::adaptive(1e-9),
        )
        .unwrap();
        assert!((tr.p2[32] - eff).abs() < 1e-6);
        assert!(
            tr.p1.iter().all(|p| *p < 0.05),
            "intermediate level stays dark"
        );
        let dark = StirapPulses {
            pump: GaussianPulse {
                peak_rabi_mhz: 0.0,
                ..pulses.pump
            },
            ..pulses
        };
        assert!(stirap_transfer(&dark, Stepping::default()).unwrap() < 1e-20);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn shell_populations_sum_to_one(seed in 0u64..1000, r in 1.0..6.0f64) {
            let s = sample_ensemble(5.0, r, TrapProfile::Gaussian, 0.5, &mut task_rng(seed, 0)).unwrap();
            prop_assume!(s.atom_count() > 0);
            let (h, b) = build_blockade_hamiltonian(&s, 1.2, 0.1, 3.2e6, 2, 0.5).unwrap();
            let tr = excitation_dynamics(&h, &b, &linspace(0.0, 10.0, 51)).unwrap();
            for i in 0..tr.t.len() {
                prop_assert!((tr.p0[i] + tr.p1[i] + tr.p2[i] - 1.0).abs() < 1e-8);
            }
        }
    }
}
