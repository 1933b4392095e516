//! Dispatch from a resolved configuration to the library, producing CSV
//! tables and a JSON summary.

use rydsim::bloch::{self, Thermal};
use rydsim::blockade::{self, EnsembleParams, RevivalWindows};
use rydsim::exec::Runner;
use rydsim::foerster::{self, AtomConfiguration, FoersterEnsemble, PairBasis, PairTruncation};
use rydsim::gates::{self, MesoscopicRegister, PulseSequence};
use rydsim::model::{beam_angles, BeamGeometry};
use rydsim::ode::Stepping;
use rydsim::trace::{format_sig, Table};
use rydsim::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{DopplerParams, Echo, GeometrySpec, Params, ScenarioConfig};

/// Provenance of a Monte-Carlo run, written next to its trace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleMeta {
    pub master_seed: u64,
    pub samples: usize,
    /// How per-sample streams are derived from the master seed.
    pub seeding: &'static str,
}

/// Everything a scenario produced. `files[0]` is the primary trace.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutput {
    pub files: Vec<(String, String)>,
    pub summary: Value,
    pub ensemble: Option<EnsembleMeta>,
}

impl ScenarioOutput {
    fn new(trace: Table, summary: Value) -> Self {
        Self {
            files: vec![("trace.csv".into(), trace.to_csv())],
            summary,
            ensemble: None,
        }
    }

    fn with_file(mut self, name: &str, table: Table) -> Self {
        self.files.push((name.into(), table.to_csv()));
        self
    }

    fn with_ensemble(mut self, master_seed: u64, samples: usize, seeding: &'static str) -> Self {
        self.ensemble = Some(EnsembleMeta {
            master_seed,
            samples,
            seeding,
        });
        self
    }

    pub fn trace_csv(&self) -> &str {
        &self.files[0].1
    }
}

/// Beam geometry for a Doppler run.
pub fn doppler_geometry(p: &DopplerParams) -> Result<BeamGeometry> {
    let lambdas = p.scheme.steps.map(|s| s.wavelength_nm);
    match p.geometry {
        GeometrySpec::Star => beam_angles(lambdas).map(|(_, g)| g),
        GeometrySpec::Collinear => BeamGeometry::collinear(lambdas),
        GeometrySpec::Explicit { unit_wavevectors } => BeamGeometry::new(lambdas, unit_wavevectors),
    }
}

fn stats_json(s: Option<rydsim::trace::ResonanceStats>) -> Value {
    match s {
        Some(s) => {
            json!({ "amplitude": s.amplitude, "fwhm": s.fwhm, "center": s.center, "truncated": s.truncated })
        }
        None => Value::Null,
    }
}

const TASK_SEEDING: &str = "ChaCha8 keyed by the master seed, stream id = sample index";
const GRID_SEEDING: &str = "ChaCha8 keyed by the master seed, stream id = grid index";

/// Runs the configured scenario.
pub fn run_scenario(cfg: &ScenarioConfig, runner: &impl Runner) -> Result<ScenarioOutput> {
    let seed = cfg.seed;
    match &cfg.params {
        Params::Spectrum(p) => {
            let tr = bloch::scan_spectrum(
                &p.scheme,
                &p.delta3_mhz.values(),
                p.n0,
                p.propagation,
                runner,
            )?;
            let summary = json!({ "peak_delta3_mhz": tr.argmax_x(), "peak_signal": tr.y.iter().cloned().fold(0.0, f64::max) });
            Ok(ScenarioOutput::new(tr.to_table(), summary))
        }
        Params::Doppler(p) => {
            let geometry = doppler_geometry(p)?;
            let thermal = Thermal {
                temperature_k: p.temperature_k,
                mass_amu: p.mass_amu,
                n_velocity_samples: p.n_velocity_samples,
                seed,
            };
            let tr = bloch::doppler_averaged_spectrum(
                &p.scheme,
                &geometry,
                &thermal,
                &p.delta3_mhz.values(),
                p.propagation,
                runner,
            )?;
            let summary = json!({
                "closure_residual_per_nm": geometry.closure_residual(),
                "lineshape": stats_json(tr.stats()),
            });
            Ok(ScenarioOutput::new(tr.to_table(), summary).with_ensemble(
                seed,
                p.n_velocity_samples,
                GRID_SEEDING,
            ))
        }
        Params::FoersterScan(p) => {
            let ens = FoersterEnsemble {
                channel: p.channel.build()?,
                sampler: p.sampler,
                truncation: p.truncation,
                atom_count: p.atom_count,
                n_samples: p.n_samples,
                seed,
            };
            let scan =
                foerster::scan_stark(&ens, &p.field_vcm.values(), p.interaction_time_us, runner)?;
            let summary = json!({ "lineshape": stats_json(scan.stats) });
            Ok(
                ScenarioOutput::new(scan.trace.to_table(), summary).with_ensemble(
                    seed,
                    p.n_samples,
                    TASK_SEEDING,
                ),
            )
        }
        Params::FoersterTime(p) => {
            let ens = FoersterEnsemble {
                channel: p.channel.build()?,
                sampler: p.sampler,
                truncation: p.truncation,
                atom_count: p.atom_count,
                n_samples: p.n_samples,
                seed,
            };
            let points = foerster::time_dependence(
                &ens,
                &p.field_vcm.values(),
                &p.interaction_times_us,
                runner,
            )?;
            let summary = json!({ "points": points.len() });
            Ok(
                ScenarioOutput::new(foerster::time_table(&points), summary).with_ensemble(
                    seed,
                    p.n_samples,
                    TASK_SEEDING,
                ),
            )
        }
        Params::RfFloquet(p) => {
            let channel = p.channel.build()?;
            let [lo, hi] = p.field_range_vcm;
            let crossings = foerster::floquet_crossings(&channel, &p.rf, p.m_max, (lo, hi))?;
            let mut out = ScenarioOutput::new(foerster::crossings_table(&crossings), Value::Null);
            let mut checks = Vec::new();
            if let Some(td) = &p.time_domain {
                let basis = PairBasis::new(2, PairTruncation::SinglePair)?;
                let config = AtomConfiguration {
                    positions: vec![[0.0; 3], [td.pair_distance_um, 0.0, 0.0]],
                };
                let mut scan = Table::new(["E_Vcm", "rhoS"]);
                for c in &crossings {
                    let grid = rydsim::trace::linspace(
                        c.e_vcm - td.window_vcm,
                        c.e_vcm + td.window_vcm,
                        td.points_per_window,
                    );
                    let tr = foerster::rf_scan(
                        &channel,
                        &basis,
                        &config,
                        0.0,
                        &grid,
                        &p.rf,
                        td.interaction_time_us,
                        Stepping::adaptive(td.tolerance),
                        runner,
                    )?;
                    let peak = tr.argmax_x().expect("nonempty window");
                    checks.push(json!({ "m": c.m, "solver_e_vcm": c.e_vcm, "time_domain_e_vcm": peak, "difference_vcm": peak - c.e_vcm }));
                    for (x, y) in tr.x.iter().zip(&tr.y) {
                        scan.push_numeric(&[*x, *y]);
                    }
                }
                out = out.with_file("rf_scan.csv", scan);
            }
            out.summary = json!({ "crossings": crossings.len(), "time_domain": checks });
            Ok(out)
        }
        Params::BlockadeRevivals(p) => {
            let rabi = p.rabi()?;
            let params = EnsembleParams {
                n_bar: p.n_bar,
                radius_um: p.trap_radius_um,
                profile: p.profile,
                r_min_um: p.r_min_um,
                rabi_mhz: rabi,
                detuning_mhz: p.detuning_mhz,
                c6_mhz_um6: p.c6_mhz_um6,
                k_max: p.k_max,
            };
            let t = p.time_us.values();
            let tr = blockade::ensemble_average(&params, &t, p.n_samples, seed, runner)?;
            let jc = blockade::jc_reference(p.n_bar, rabi, &t);
            let rms = (tr
                .p1
                .iter()
                .zip(&jc)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                / t.len() as f64)
                .sqrt();
            let windows = RevivalWindows::from_jc(p.n_bar, rabi);
            let contrast = match blockade::revival_contrast(&t, &tr.p1, &windows) {
                Ok(c) => Value::from(c),
                Err(Error::WindowTooShort { .. }) => Value::Null,
                Err(e) => return Err(e),
            };
            let summary = json!({
                "rabi_mhz": rabi,
                "revival_contrast": contrast,
                "peak_p2": tr.p2.iter().cloned().fold(0.0, f64::max),
                "rms_vs_jaynes_cummings": rms,
                "windows": windows,
            });
            Ok(ScenarioOutput::new(tr.to_table(), summary).with_ensemble(
                seed,
                p.n_samples,
                TASK_SEEDING,
            ))
        }
        Params::Chirp(p) => {
            let probs = runner.try_map(p.atom_counts.len(), |i| {
                blockade::chirped_excitation(p.atom_counts[i], &p.chirp)
            })?;
            let mut table = Table::new(["N", "P1", "landau_zener"]);
            for (n, prob) in p.atom_counts.iter().zip(&probs) {
                let lz = blockade::landau_zener(
                    p.chirp.rabi_mhz * (*n as f64).sqrt(),
                    p.chirp.sweep_rate(),
                );
                table
                    .rows
                    .push(vec![n.to_string(), format_sig(*prob), format_sig(lz)]);
            }
            let (lo, hi) = probs
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
                    (l.min(*p), h.max(*p))
                });
            Ok(ScenarioOutput::new(
                table,
                json!({ "min_p1": lo, "spread": hi - lo }),
            ))
        }
        Params::Stirap(p) => {
            let tr = blockade::stirap_trajectory(
                &p.pulses,
                &p.time_us.values(),
                Stepping::adaptive(p.tolerance),
            )?;
            let transfer = blockade::stirap_transfer(&p.pulses, Stepping::adaptive(p.tolerance))?;
            let summary = json!({
                "transfer": transfer,
                "counter_intuitive": p.pulses.is_counter_intuitive(),
                "peak_intermediate": tr.p1.iter().cloned().fold(0.0, f64::max),
            });
            Ok(ScenarioOutput::new(tr.to_table(), summary))
        }
        Params::GateSim(p) => {
            let seq = PulseSequence::blockade_cz();
            let gates = runner.try_map(p.b_over_rabi.len(), |i| {
                gates::simulate_blockade_cz(p.rabi_mhz, p.b_over_rabi[i] * p.rabi_mhz, &seq)
            })?;
            let mut sweep = Table::new(["B_over_rabi", "fidelity"]);
            for (b, g) in p.b_over_rabi.iter().zip(&gates) {
                sweep.push_numeric(&[*b, g.fidelity]);
            }
            let cnot =
                gates::simulate_blockade_cnot(p.rabi_mhz, p.truth_table_b_over_rabi * p.rabi_mhz)?;
            let mut truth = Table::new(["input", "output00", "output01", "output10", "output11"]);
            for (i, row) in cnot.truth_table.iter().enumerate() {
                let mut cells = vec![format!("{:02b}", i)];
                cells.extend(row.iter().map(|v| format_sig(*v)));
                truth.rows.push(cells);
            }
            let bell = gates::bell_fidelity(&gates::blockade_bell_state(p.rabi_mhz)?)?;
            let summary = json!({
                "fidelities": gates.iter().map(|g| g.fidelity).collect::<Vec<_>>(),
                "leakage": gates.iter().map(|g| g.leakage).collect::<Vec<_>>(),
                "cnot_fidelity": cnot.fidelity,
                "bell_fidelity": bell,
            });
            Ok(ScenarioOutput::new(sweep, summary).with_file("truth_table.csv", truth))
        }
        Params::MesoscopicGate(p) => {
            let base = PulseSequence::rotation_scheme(p.chirp, p.alpha_rad);
            let seq = match p.echo {
                Echo::PhaseCompensated => gates::phase_compensated(&base),
                Echo::TimeReversed => gates::time_reversed(&base),
            };
            let results = runner.try_map(p.atom_counts.len(), |i| {
                gates::mesoscopic_unitary(
                    &seq,
                    &MesoscopicRegister {
                        atom_count: p.atom_counts[i],
                        rabi_mhz: p.chirp.rabi_mhz,
                    },
                )
            })?;
            let reference = &results[0].block;
            let mut table = Table::new(["N", "deviation", "leakage", "phase_rad"]);
            let mut worst: f64 = 0.0;
            for (n, g) in p.atom_counts.iter().zip(&results) {
                let dev = rydsim::linalg::operator_norm(&(&g.block - reference));
                worst = worst.max(dev);
                let phase = (g.block[(0, 0)] / g.block[(1, 1)]).arg();
                table.rows.push(vec![
                    n.to_string(),
                    format_sig(dev),
                    format_sig(g.leakage),
                    format_sig(phase),
                ]);
            }
            let summary = json!({
                "max_deviation": worst,
                "max_leakage": results.iter().map(|g| g.leakage).fold(0.0, f64::max),
                "flagged": results.iter().any(|g| g.flagged),
            });
            Ok(ScenarioOutput::new(table, summary))
        }
    }
}
