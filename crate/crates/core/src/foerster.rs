//! Few-atom Förster-resonance dynamics: Stark-scanned lineshapes, their
//! dependence on interaction time, rf-induced Floquet resonances, and
//! detection-efficiency post-processing.
//!
//! Each atom starts in the `P` state. A flipped pair `(i, j)` has exchanged
//! `PP → SS′`, which costs the field-dependent defect `Δ(E)` and is reached
//! through the symmetrized dipole-dipole coupling `√2·D/R_ij³`.

use std::collections::HashMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::{task_rng, Runner};
use crate::linalg::{c, CVector, RMatrix, RealSpectralPropagator};
use crate::model::{dist3, DetectionModel, FoersterChannel, RfField, Vec3};
use crate::ode::{self, Stepping};
use crate::special::generalized_bessel;
use crate::trace::{check_increasing, lineshape_stats, ResonanceStats, ScanTrace, Table};

pub const MAX_ATOMS: usize = 5;

/// Which collective pair states are kept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairTruncation {
    /// The all-P state plus one state per flipped pair: `1 + N(N−1)/2`.
    SinglePair,
    /// Every set of disjoint flipped pairs (all matchings). Identical to
    /// `SinglePair` for `N ≤ 3`; for larger `N` it lets several pairs flip
    /// at once, which is what allows the signal per atom to grow with `N`.
    #[default]
    AllMatchings,
}

/// Collective basis of flipped-pair configurations; state 0 is all-P.
#[derive(Debug, Clone, PartialEq)]
pub struct PairBasis {
    atom_count: usize,
    truncation: PairTruncation,
    states: Vec<Vec<(usize, usize)>>,
    /// `(a, b, pair)`: state `b` is state `a` with `pair` additionally flipped.
    links: Vec<(usize, usize, (usize, usize))>,
}

impl PairBasis {
    pub fn new(atom_count: usize, truncation: PairTruncation) -> Result<Self> {
        if !(1..=MAX_ATOMS).contains(&atom_count) {
            return Err(invalid("atom_count", format!("must be in 1..={MAX_ATOMS}")));
        }
        let pairs: Vec<(usize, usize)> = (0..atom_count)
            .flat_map(|i| (i + 1..atom_count).map(move |j| (i, j)))
            .collect();
        let mut states = vec![Vec::new()];
        match truncation {
            PairTruncation::SinglePair => states.extend(pairs.iter().map(|p| vec![*p])),
            PairTruncation::AllMatchings => {
                fn extend(
                    pairs: &[(usize, usize)],
                    start: usize,
                    cur: &mut Vec<(usize, usize)>,
                    out: &mut Vec<Vec<(usize, usize)>>,
                ) {
                    for k in start..pairs.len() {
                        let (i, j) = pairs[k];
                        if cur
                            .iter()
                            .any(|&(a, b)| a == i || a == j || b == i || b == j)
                        {
                            continue;
                        }
                        cur.push((i, j));
                        out.push(cur.clone());
                        extend(pairs, k + 1, cur, out);
                        cur.pop();
                    }
                }
                extend(&pairs, 0, &mut Vec::new(), &mut states);
            }
        }
        let index: HashMap<&[(usize, usize)], usize> = states
            .iter()
            .enumerate()
            .map(|(k, s)| (s.as_slice(), k))
            .collect();
        let mut links = Vec::new();
        for (b, s) in states.iter().enumerate() {
            for (pos, p) in s.iter().enumerate() {
                let mut sub = s.clone();
                sub.remove(pos);
                let a = index[sub.as_slice()];
                links.push((a, b, *p));
            }
        }
        Ok(Self {
            atom_count,
            truncation,
            states,
            links,
        })
    }

    pub fn atom_count(&self) -> usize {
        self.atom_count
    }

    pub fn truncation(&self) -> PairTruncation {
        self.truncation
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<(usize, usize)>] {
        &self.states
    }

    /// Number of flipped pairs in state `k`.
    pub fn flips(&self, k: usize) -> usize {
        self.states[k].len()
    }
}

/// Atom positions in μm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AtomConfiguration {
    pub positions: Vec<Vec3>,
}

impl AtomConfiguration {
    /// Fails if any pair is closer than `r_min`.
    pub fn check_min_distance(&self, r_min: f64) -> Result<()> {
        let p = &self.positions;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                let d = dist3(&p[i], &p[j]);
                if !(d > 0.0) || d < r_min {
                    return Err(Error::MinDistance {
                        i,
                        j,
                        distance: d,
                        r_min,
                    });
                }
            }
        }
        Ok(())
    }
}

/// Region atoms are drawn from, uniformly.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Volume {
    Cube { edge_um: f64 },
    Sphere { radius_um: f64 },
}

/// Uniform placement with a hard-core exclusion distance, re-drawing any atom
/// that lands too close to one already placed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSampler {
    pub volume: Volume,
    pub r_min_um: f64,
}

impl Default for AtomSampler {
    fn default() -> Self {
        Self {
            volume: Volume::Cube { edge_um: 25.0 },
            r_min_um: 2.0,
        }
    }
}

const MAX_PLACEMENT_ATTEMPTS: usize = 100_000;

impl AtomSampler {
    pub fn validate(&self) -> Result<()> {
        let size = match self.volume {
            Volume::Cube { edge_um } => edge_um,
            Volume::Sphere { radius_um } => radius_um,
        };
        if !(size > 0.0) || !size.is_finite() {
            return Err(invalid("volume", "size must be positive"));
        }
        if !(self.r_min_um >= 0.0) {
            return Err(invalid("r_min_um", "must be non-negative"));
        }
        Ok(())
    }

    fn draw_point(&self, rng: &mut impl Rng) -> Vec3 {
        match self.volume {
            Volume::Cube { edge_um } => std::array::from_fn(|_| rng.random::<f64>() * edge_um),
            Volume::Sphere { radius_um } => loop {
                let p: Vec3 =
                    std::array::from_fn(|_| (2.0 * rng.random::<f64>() - 1.0) * radius_um);
                if crate::model::norm3(&p) <= radius_um {
                    break p;
                }
            },
        }
    }

    pub fn sample(&self, n: usize, rng: &mut impl Rng) -> Result<AtomConfiguration> {
        let mut positions: Vec<Vec3> = Vec::with_capacity(n);
        let mut attempts = 0;
        while positions.len() < n {
            attempts += 1;
            if attempts > MAX_PLACEMENT_ATTEMPTS {
                return Err(invalid(
                    "r_min_um",
                    "exclusion distance too large to place all atoms",
                ));
            }
            let p = self.draw_point(rng);
            if positions.iter().all(|q| dist3(&p, q) >= self.r_min_um) {
                positions.push(p);
            }
        }
        Ok(AtomConfiguration { positions })
    }
}

/// Stark-switching sequence: atoms are excited at a fixed field far from
/// resonance, then the field steps to the interaction value for a set time.
/// Switching is instantaneous, so only the interaction plateau matters for
/// the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StarkSwitchProfile {
    pub excitation_field_vcm: f64,
    pub interaction_field_vcm: f64,
    pub interaction_time_us: f64,
}

impl StarkSwitchProfile {
    pub fn validate(&self) -> Result<()> {
        if !(self.excitation_field_vcm >= 0.0) || !(self.interaction_field_vcm >= 0.0) {
            return Err(invalid("field", "fields must be non-negative"));
        }
        if !(self.interaction_time_us > 0.0) {
            return Err(invalid("interaction_time_us", "must be positive"));
        }
        Ok(())
    }
}

/// Field-independent part of the pair Hamiltonian for one configuration.
#[derive(Debug, Clone)]
pub struct PairCouplings {
    coupling: RMatrix,
    flips: Vec<f64>,
    atom_count: usize,
}

impl PairCouplings {
    pub fn new(
        channel: &FoersterChannel,
        basis: &PairBasis,
        config: &AtomConfiguration,
        r_min: f64,
    ) -> Result<Self> {
        if config.positions.len() != basis.atom_count() {
            return Err(Error::DimensionMismatch {
                expected: basis.atom_count(),
                found: config.positions.len(),
            });
        }
        config.check_min_distance(r_min)?;
        let d = basis.dim();
        let mut coupling = RMatrix::zeros(d, d);
        for &(a, b, (i, j)) in &basis.links {
            let r = dist3(&config.positions[i], &config.positions[j]);
            let v = std::f64::consts::SQRT_2 * channel.dd_coeff_mhz_um3 / (r * r * r);
            coupling[(a, b)] = v;
            coupling[(b, a)] = v;
        }
        Ok(Self {
            coupling,
            flips: (0..d).map(|k| basis.flips(k) as f64).collect(),
            atom_count: basis.atom_count(),
        })
    }

    /// Hamiltonian (MHz) at defect `Δ`.
    pub fn hamiltonian_at_defect(&self, defect: f64) -> RMatrix {
        let mut h = self.coupling.clone();
        for (k, f) in self.flips.iter().enumerate() {
            h[(k, k)] = f * defect;
        }
        h
    }

    /// `ρ_S` at each time, from one diagonalization at defect `Δ`.
    pub fn rho_s_at_defect(&self, defect: f64, times: &[f64]) -> Vec<f64> {
        if self.atom_count < 2 {
            return vec![0.0; times.len()];
        }
        let prop = RealSpectralPropagator::new(self.hamiltonian_at_defect(defect));
        let coeffs = prop.project_basis(0);
        let mut amps = vec![c(0.0, 0.0); prop.dim()];
        times
            .iter()
            .map(|&t| {
                prop.amplitudes_into(&coeffs, t, &mut amps);
                self.rho_s(&amps)
            })
            .collect()
    }

    fn rho_s(&self, amps: &[crate::linalg::C64]) -> f64 {
        amps.iter()
            .zip(&self.flips)
            .map(|(a, f)| a.norm_sqr() * f)
            .sum::<f64>()
            / self.atom_count as f64
    }
}

/// Pair Hamiltonian at field `E`: `Δ(E)` per flipped pair on the diagonal,
/// `√2·D/R³` between states differing by one pair.
pub fn build_pair_hamiltonian(
    channel: &FoersterChannel,
    basis: &PairBasis,
    config: &AtomConfiguration,
    e_vcm: f64,
    r_min: f64,
) -> Result<RMatrix> {
    Ok(PairCouplings::new(channel, basis, config, r_min)?
        .hamiltonian_at_defect(channel.defect(e_vcm)))
}

/// Fraction of atoms transferred to `S` after time `t`, starting all-P.
pub fn foerster_dynamics(h: &RMatrix, basis: &PairBasis, t: f64) -> Result<f64> {
    if h.nrows() != basis.dim() {
        return Err(Error::DimensionMismatch {
            expected: basis.dim(),
            found: h.nrows(),
        });
    }
    let psi = RealSpectralPropagator::new(h.clone()).evolve_basis(0, t);
    let n = basis.atom_count() as f64;
    Ok((0..basis.dim())
        .map(|k| psi[k].norm_sqr() * basis.flips(k) as f64)
        .sum::<f64>()
        / n)
}

/// Disorder-averaged Stark scan.
#[derive(Debug, Clone, PartialEq)]
pub struct StarkScan {
    pub trace: ScanTrace,
    pub stats: Option<ResonanceStats>,
}

/// Shared inputs of the Monte-Carlo Förster scans.
#[derive(Debug, Clone, PartialEq)]
pub struct FoersterEnsemble {
    pub channel: FoersterChannel,
    pub sampler: AtomSampler,
    pub truncation: PairTruncation,
    pub atom_count: usize,
    pub n_samples: usize,
    pub seed: u64,
}

impl FoersterEnsemble {
    fn validate(&self) -> Result<PairBasis> {
        self.channel.validate()?;
        self.sampler.validate()?;
        if self.n_samples == 0 {
            return Err(invalid("n_samples", "must be at least 1"));
        }
        PairBasis::new(self.atom_count, self.truncation)
    }

    /// `ρ_S[e][t]` summed over samples, in sample order.
    fn accumulate(
        &self,
        e_grid: &[f64],
        t_grid: &[f64],
        runner: &impl Runner,
    ) -> Result<Vec<Vec<f64>>> {
        let basis = self.validate()?;
        let per_sample = runner.try_map(self.n_samples, |s| {
            let mut rng = task_rng(self.seed, s as u64);
            let config = self.sampler.sample(self.atom_count, &mut rng)?;
            let pc = PairCouplings::new(&self.channel, &basis, &config, self.sampler.r_min_um)?;
            Ok(e_grid
                .iter()
                .map(|&e| pc.rho_s_at_defect(self.channel.defect(e), t_grid))
                .collect::<Vec<_>>())
        })?;
        let mut sum = vec![vec![0.0; t_grid.len()]; e_grid.len()];
        for sample in &per_sample {
            for (acc_e, s_e) in sum.iter_mut().zip(sample) {
                for (a, v) in acc_e.iter_mut().zip(s_e) {
                    *a += v;
                }
            }
        }
        let norm = 1.0 / self.n_samples as f64;
        sum.iter_mut().flatten().for_each(|v| *v *= norm);
        Ok(sum)
    }
}

/// `ρ_S(E)` averaged over random configurations at interaction time `t`.
pub fn scan_stark(
    ens: &FoersterEnsemble,
    e_grid: &[f64],
    t: f64,
    runner: &impl Runner,
) -> Result<StarkScan> {
    check_increasing("E_grid", e_grid)?;
    if !(t >= 0.0) {
        return Err(invalid("interaction_time_us", "must be non-negative"));
    }
    let avg = ens.accumulate(e_grid, &[t], runner)?;
    let y: Vec<f64> = avg.iter().map(|r| r[0]).collect();
    let stats = lineshape_stats(e_grid, &y);
    Ok(StarkScan {
        trace: ScanTrace::new("E_Vcm", "rhoS", e_grid.to_vec(), y),
        stats,
    })
}

/// Resonance amplitude and width at one interaction time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    pub t_us: f64,
    pub amplitude: f64,
    pub fwhm: f64,
}

/// Resonance statistics for each interaction time, using the same random
/// configurations for every time.
pub fn time_dependence(
    ens: &FoersterEnsemble,
    e_grid: &[f64],
    t_grid: &[f64],
    runner: &impl Runner,
) -> Result<Vec<TimePoint>> {
    check_increasing("E_grid", e_grid)?;
    check_increasing("T_grid", t_grid)?;
    if t_grid[0] <= 0.0 {
        return Err(invalid("T_grid", "interaction times must be positive"));
    }
    let avg = ens.accumulate(e_grid, t_grid, runner)?;
    Ok(t_grid
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let y: Vec<f64> = avg.iter().map(|r| r[k]).collect();
            let s = lineshape_stats(e_grid, &y);
            TimePoint {
                t_us: t,
                amplitude: s.map_or(0.0, |s| s.amplitude),
                fwhm: s.map_or(0.0, |s| s.fwhm),
            }
        })
        .collect())
}

pub fn time_table(points: &[TimePoint]) -> Table {
    let mut t = Table::new(["T_us", "amplitude", "fwhm"]);
    for p in points {
        t.push_numeric(&[p.t_us, p.amplitude, p.fwhm]);
    }
    t
}

/// `ρ_S(T)` with the defect modulated as `Δ(E_dc) − m·sin(2πft)`.
#[allow(clippy::too_many_arguments)]
pub fn rf_dynamics(
    channel: &FoersterChannel,
    basis: &PairBasis,
    config: &AtomConfiguration,
    r_min: f64,
    e_dc: f64,
    rf: &RfField,
    t: f64,
    stepping: Stepping,
) -> Result<f64> {
    rf.validate()?;
    let pc = PairCouplings::new(channel, basis, config, r_min)?;
    let d0 = channel.defect(e_dc);
    if rf.defect_modulation_mhz == 0.0 {
        return Ok(pc.rho_s_at_defect(d0, &[t])[0]);
    }
    if basis.atom_count() < 2 || t == 0.0 {
        return Ok(0.0);
    }
    let h0 = crate::linalg::to_complex(&pc.coupling);
    let (m, f) = (rf.defect_modulation_mhz, rf.frequency_mhz);
    let flips = &pc.flips;
    let rhs = |time: f64, y: &CVector, dy: &mut CVector| {
        h0.mul_to(y, dy);
        let defect = d0 - m * (TAU * f * time).sin();
        for k in 0..y.len() {
            dy[k] += y[k] * (flips[k] * defect);
            dy[k] *= c(0.0, -TAU);
        }
    };
    let psi0 = crate::linalg::basis_vector(basis.dim(), 0);
    let psi = ode::integrate(rhs, 0.0, &psi0, &[t], stepping)?.remove(0);
    Ok(pc.rho_s(psi.as_slice()))
}

/// `ρ_S` under rf driving for each dc field on a grid.
#[allow(clippy::too_many_arguments)]
pub fn rf_scan(
    channel: &FoersterChannel,
    basis: &PairBasis,
    config: &AtomConfiguration,
    r_min: f64,
    e_grid: &[f64],
    rf: &RfField,
    t: f64,
    stepping: Stepping,
    runner: &impl Runner,
) -> Result<ScanTrace> {
    check_increasing("E_grid", e_grid)?;
    let y = runner.try_map(e_grid.len(), |i| {
        rf_dynamics(channel, basis, config, r_min, e_grid[i], rf, t, stepping)
    })?;
    Ok(ScanTrace::new("E_Vcm", "rhoS", e_grid.to_vec(), y))
}

/// An rf-assisted resonance `Δ(E) = m·f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub m: i64,
    pub e_vcm: f64,
}

/// Non-negative fields in `[e_lo, e_hi]` where `Δ(E) = m·f`, `|m| ≤ m_max`,
/// sorted by field.
pub fn floquet_crossings(
    channel: &FoersterChannel,
    rf: &RfField,
    m_max: u32,
    e_range: (f64, f64),
) -> Result<Vec<Crossing>> {
    rf.validate()?;
    let (lo, hi) = e_range;
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(invalid("E_range", "must be a finite, ordered interval"));
    }
    let s = channel.stark_coeff_mhz_per_v2cm2;
    let mut out = Vec::new();
    if s == 0.0 {
        return Ok(out);
    }
    for m in -(m_max as i64)..=m_max as i64 {
        let e2 = (channel.defect_zero_field_mhz - m as f64 * rf.frequency_mhz) / s;
        if e2 < 0.0 {
            continue;
        }
        let e = e2.sqrt();
        if e >= lo.max(0.0) && e <= hi {
            out.push(Crossing { m, e_vcm: e });
        }
    }
    out.sort_by(|a, b| a.e_vcm.total_cmp(&b.e_vcm));
    Ok(out)
}

pub fn crossings_table(crossings: &[Crossing]) -> Table {
    let mut t = Table::new(["m", "E_Vcm"]);
    for c in crossings {
        t.rows
            .push(vec![c.m.to_string(), crate::trace::format_sig(c.e_vcm)]);
    }
    t
}

/// Sideband amplitude `J_m` for `|m| ≤ m_max`, as `(m, J_m)`.
///
/// With only `defect_modulation_mhz` known the modulation is a single
/// harmonic and `J_m = J_m(m_rf/f)`. If the raw field amplitude is given,
/// the field `E_dc + E_rf cos(2πft)` modulates the quadratic defect at both
/// `f` and `2f`; the phase `x sin θ + y sin 2θ` then has
/// `x = 2 s E_dc E_rf / f`, `y = s E_rf² / (4f)`, and the weights are the
/// generalized Bessel functions `J_m(x, y)`.
pub fn floquet_sideband_weights(
    channel: &FoersterChannel,
    e_dc: f64,
    rf: &RfField,
    m_max: u32,
) -> Result<Vec<(i64, f64)>> {
    rf.validate()?;
    let f = rf.frequency_mhz;
    let (x, y) = match rf.field_amplitude_vcm {
        Some(e_rf) => {
            let s = channel.stark_coeff_mhz_per_v2cm2;
            (2.0 * s * e_dc * e_rf / f, s * e_rf * e_rf / (4.0 * f))
        }
        None => (rf.defect_modulation_mhz / f, 0.0),
    };
    let w = generalized_bessel(m_max as usize, x, y);
    Ok((-(m_max as i64)..=m_max as i64).zip(w).collect())
}

/// Exact detected-count distribution when each of `N` true atoms is seen
/// independently with the model's efficiency. `true_dist[n]` is the
/// probability of `n` atoms.
pub fn detection_distribution(true_dist: &[f64], det: &DetectionModel) -> Result<Vec<f64>> {
    det.validate()?;
    let p = det.efficiency;
    let mut out = vec![0.0; true_dist.len()];
    for (n, pn) in true_dist.iter().enumerate() {
        // Binomial(n, p) by the multiplicative recurrence.
        let mut term = (1.0 - p).powi(n as i32);
        #[allow(clippy::needless_range_loop)]
        for k in 0..=n {
            if k > 0 {
                term = if p == 1.0 {
                    if k == n {
                        1.0
                    } else {
                        0.0
                    }
                } else {
                    term * (n - k + 1) as f64 / k as f64 * p / (1.0 - p)
                };
            }
            out[k] += pn * term;
        }
    }
    Ok(out)
}

/// Binomially thins a histogram of true atom counts (`hist[n]` shots with `n`
/// atoms) into a histogram of detected counts.
pub fn apply_detection(hist: &[u64], det: &DetectionModel, seed: u64) -> Result<Vec<u64>> {
    det.validate()?;
    let mut out = vec![0u64; hist.len()];
    let mut rng = task_rng(seed, 0);
    for (n, &shots) in hist.iter().enumerate() {
        if n == 0 || det.efficiency == 1.0 {
            out[n] += shots;
            continue;
        }
        let bin = Binomial::new(n as u64, det.efficiency)
            .map_err(|e| invalid("efficiency", e.to_string()))?;
        for _ in 0..shots {
            out[bin.sample(&mut rng) as usize] += 1;
        }
    }
    Ok(out)
}
