//! Physical parameters and closed-form helpers.
//!
//! Units throughout: ordinary frequencies in MHz, time in μs, distance in μm,
//! electric field in V/cm, wavelengths in nm.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Zero-field defect of Rb 37P₃/₂ + 37P₃/₂ → 37S + 38S, from Rb quantum defects.
/// Literature-derived default; override it in configuration.
pub const RB37P_DEFECT_ZERO_FIELD_MHZ: f64 = -103.136;
/// Zero-field defect of Rb 39P + 39P → 39S + 40S, from Rb quantum defects.
pub const RB39P_DEFECT_ZERO_FIELD_MHZ: f64 = 74.31;
/// Orientation-averaged dipole-dipole strength for the 37P channel.
/// Order-of-magnitude literature estimate.
pub const RB37P_DD_COEFF_MHZ_UM3: f64 = 100.0;
/// Resonance field of the 37P Förster channel.
pub const RB37P_RESONANCE_FIELD_VCM: f64 = 1.79;

/// Orbital angular momentum letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orbital {
    S,
    P,
    D,
    F,
}

impl Orbital {
    pub fn l(self) -> u32 {
        match self {
            Orbital::S => 0,
            Orbital::P => 1,
            Orbital::D => 2,
            Orbital::F => 3,
        }
    }
}

/// Spectroscopic label such as `Rb 37P3/2 |mJ|=1/2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RydbergStateLabel {
    pub species: String,
    pub n: u32,
    #[serde(rename = "L")]
    pub l: Orbital,
    #[serde(rename = "J")]
    pub j: f64,
    #[serde(rename = "mJ_abs")]
    pub mj_abs: f64,
}

impl RydbergStateLabel {
    pub fn new(species: &str, n: u32, l: Orbital, j: f64, mj_abs: f64) -> Result<Self> {
        let s = Self {
            species: species.into(),
            n,
            l,
            j,
            mj_abs,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return Err(invalid("n", "principal quantum number must be at least 1"));
        }
        if self.l.l() >= self.n {
            return Err(invalid("L", "orbital angular momentum must be below n"));
        }
        let l = self.l.l() as f64;
        let ok_j = (self.j - (l - 0.5)).abs() < 1e-12 || (self.j - (l + 0.5)).abs() < 1e-12;
        if !ok_j || self.j <= 0.0 {
            return Err(invalid(
                "J",
                format!("J = {} is not L ± 1/2 with J > 0", self.j),
            ));
        }
        let twice = 2.0 * self.mj_abs;
        if (twice - twice.round()).abs() > 1e-12
            || (twice.round() as i64) % 2 == 0
            || self.mj_abs > self.j
        {
            return Err(invalid(
                "mJ_abs",
                "|M_J| must be a half-integer no larger than J",
            ));
        }
        Ok(())
    }
}

impl std::fmt::Display for RydbergStateLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}{:?}{}/2 |mJ|={}/2",
            self.species,
            self.n,
            self.l,
            (2.0 * self.j).round(),
            (2.0 * self.mj_abs).round()
        )
    }
}

/// One excitation step: wavelength, detuning, Rabi frequency and linewidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaserField {
    pub wavelength_nm: f64,
    #[serde(default)]
    pub detuning_mhz: f64,
    #[serde(default)]
    pub rabi_mhz: f64,
    /// Linewidth (FWHM) entering as pure dephasing.
    #[serde(default)]
    pub linewidth_mhz: f64,
}

impl LaserField {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.wavelength_nm > 0.0) || !self.wavelength_nm.is_finite() {
            return Err(invalid(
                format!("{prefix}wavelength_nm"),
                "must be positive",
            ));
        }
        if !(self.rabi_mhz >= 0.0) || !self.rabi_mhz.is_finite() {
            return Err(invalid(format!("{prefix}rabi_mhz"), "must be non-negative"));
        }
        if !(self.linewidth_mhz >= 0.0) || !self.linewidth_mhz.is_finite() {
            return Err(invalid(
                format!("{prefix}linewidth_mhz"),
                "must be non-negative",
            ));
        }
        if !self.detuning_mhz.is_finite() {
            return Err(invalid(format!("{prefix}detuning_mhz"), "must be finite"));
        }
        Ok(())
    }
}

/// Radio-frequency modulation of the Förster defect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RfField {
    pub frequency_mhz: f64,
    /// Peak modulation of the defect produced by the rf field.
    #[serde(default)]
    pub defect_modulation_mhz: f64,
    /// Raw rf field amplitude, if known. When set, sideband weights include
    /// the second harmonic generated by the quadratic Stark effect.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_amplitude_vcm: Option<f64>,
}

impl RfField {
    pub fn new(frequency_mhz: f64, defect_modulation_mhz: f64) -> Result<Self> {
        let rf = Self {
            frequency_mhz,
            defect_modulation_mhz,
            field_amplitude_vcm: None,
        };
        rf.validate()?;
        Ok(rf)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.frequency_mhz > 0.0) || !self.frequency_mhz.is_finite() {
            return Err(invalid("frequency_mhz", "must be positive"));
        }
        if !(self.defect_modulation_mhz >= 0.0) || !self.defect_modulation_mhz.is_finite() {
            return Err(invalid("defect_modulation_mhz", "must be non-negative"));
        }
        if let Some(a) = self.field_amplitude_vcm {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(invalid("field_amplitude_vcm", "must be non-negative"));
            }
        }
        Ok(())
    }
}

/// Quadratic Stark calibration `Δ(E) = Δ₀ − s·E²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkCalibration {
    pub defect_zero_field_mhz: f64,
    pub stark_coeff_mhz_per_v2cm2: f64,
}

/// A pair-state Förster resonance with field-tuned defect and `V(R) = D/R³`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FoersterChannel {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_pair: Option<(RydbergStateLabel, RydbergStateLabel)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_pair: Option<(RydbergStateLabel, RydbergStateLabel)>,
    pub defect_zero_field_mhz: f64,
    pub stark_coeff_mhz_per_v2cm2: f64,
    pub dd_coeff_mhz_um3: f64,
}

impl FoersterChannel {
    pub fn new(cal: StarkCalibration, dd_coeff_mhz_um3: f64) -> Result<Self> {
        let ch = Self {
            initial_pair: None,
            final_pair: None,
            defect_zero_field_mhz: cal.defect_zero_field_mhz,
            stark_coeff_mhz_per_v2cm2: cal.stark_coeff_mhz_per_v2cm2,
            dd_coeff_mhz_um3,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// Rb 37P₃/₂ + 37P₃/₂ → 37S₁/₂ + 38S₁/₂, calibrated to resonate at 1.79 V/cm.
    pub fn rb37p() -> Self {
        let cal = calibrate_channel(RB37P_DEFECT_ZERO_FIELD_MHZ, RB37P_RESONANCE_FIELD_VCM)
            .expect("nonzero resonance field");
        let p = RydbergStateLabel::new("Rb", 37, Orbital::P, 1.5, 0.5).expect("valid label");
        let s = RydbergStateLabel::new("Rb", 37, Orbital::S, 0.5, 0.5).expect("valid label");
        let s1 = RydbergStateLabel::new("Rb", 38, Orbital::S, 0.5, 0.5).expect("valid label");
        Self {
            initial_pair: Some((p.clone(), p)),
            final_pair: Some((s, s1)),
            ..Self::new(cal, RB37P_DD_COEFF_MHZ_UM3).expect("valid channel")
        }
    }

    pub fn calibration(&self) -> StarkCalibration {
        StarkCalibration {
            defect_zero_field_mhz: self.defect_zero_field_mhz,
            stark_coeff_mhz_per_v2cm2: self.stark_coeff_mhz_per_v2cm2,
        }
    }

    /// `Δ(E) = Δ₀ − s·E²`.
    #[inline]
    pub fn defect(&self, e_vcm: f64) -> f64 {
        self.defect_zero_field_mhz - self.stark_coeff_mhz_per_v2cm2 * e_vcm * e_vcm
    }

    pub fn validate(&self) -> Result<()> {
        if !self.defect_zero_field_mhz.is_finite() {
            return Err(invalid("defect_zero_field_mhz", "must be finite"));
        }
        if !self.stark_coeff_mhz_per_v2cm2.is_finite() {
            return Err(invalid("stark_coeff_mhz_per_v2cm2", "must be finite"));
        }
        if !(self.dd_coeff_mhz_um3 > 0.0) || !self.dd_coeff_mhz_um3.is_finite() {
            return Err(invalid("dd_coeff_mhz_um3", "must be positive"));
        }
        for (name, pair) in [
            ("initial_pair", &self.initial_pair),
            ("final_pair", &self.final_pair),
        ] {
            if let Some((a, b)) = pair {
                a.validate()
                    .and(b.validate())
                    .map_err(|e| invalid(name, e.to_string()))?;
            }
        }
        Ok(())
    }
}

/// `Δ(E) = Δ₀ − s·E²` for the channel.
pub fn foerster_defect(channel: &FoersterChannel, e_vcm: f64) -> f64 {
    channel.defect(e_vcm)
}

/// Chooses `s` so that `Δ(E_res) = 0`.
pub fn calibrate_channel(defect_zero_field_mhz: f64, e_res_vcm: f64) -> Result<StarkCalibration> {
    calibrate_to_target(defect_zero_field_mhz, e_res_vcm, 0.0)
}

/// Chooses `s` so that `Δ(E) = target` at the given field; e.g. an rf
/// crossing `Δ = m·f` pinned to an observed field.
pub fn calibrate_to_target(
    defect_zero_field_mhz: f64,
    e_vcm: f64,
    target_mhz: f64,
) -> Result<StarkCalibration> {
    if e_vcm == 0.0 {
        return Err(Error::CalibrationDegenerate);
    }
    if !e_vcm.is_finite() || !defect_zero_field_mhz.is_finite() || !target_mhz.is_finite() {
        return Err(invalid("calibration", "inputs must be finite"));
    }
    Ok(StarkCalibration {
        defect_zero_field_mhz,
        stark_coeff_mhz_per_v2cm2: (defect_zero_field_mhz - target_mhz) / (e_vcm * e_vcm),
    })
}

fn positive_distance(name: &'static str, r: f64) -> Result<()> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain {
            name,
            value: r,
            reason: "distance must be positive and finite",
        });
    }
    Ok(())
}

/// Resonant dipole-dipole coupling `D/R³`.
pub fn dd_coupling(channel: &FoersterChannel, r_um: f64) -> Result<f64> {
    positive_distance("R", r_um)?;
    Ok(channel.dd_coeff_mhz_um3 / (r_um * r_um * r_um))
}

/// Van der Waals shift `C6/R⁶`.
pub fn vdw_shift(c6_mhz_um6: f64, r_um: f64) -> Result<f64> {
    positive_distance("R", r_um)?;
    Ok(c6_mhz_um6 / r_um.powi(6))
}

/// Distance at which `C6/R⁶` equals the collective Rabi frequency `Ω√N`.
pub fn blockade_radius(c6_mhz_um6: f64, rabi_mhz: f64, n: u32) -> Result<f64> {
    if !(rabi_mhz > 0.0) {
        return Err(Error::Domain {
            name: "rabi",
            value: rabi_mhz,
            reason: "Rabi frequency must be positive",
        });
    }
    if n == 0 {
        return Err(invalid("N", "atom number must be at least 1"));
    }
    Ok((c6_mhz_um6 / (rabi_mhz * (n as f64).sqrt())).powf(1.0 / 6.0))
}

/// Single-atom Rabi frequency that makes `radius` the blockade radius of `n`
/// atoms; the inverse of [`blockade_radius`].
pub fn rabi_for_blockade_radius(c6_mhz_um6: f64, radius_um: f64, n: u32) -> Result<f64> {
    positive_distance("radius", radius_um)?;
    if n == 0 {
        return Err(invalid("N", "atom number must be at least 1"));
    }
    Ok(c6_mhz_um6 / (radius_um.powi(6) * (n as f64).sqrt()))
}

pub type Vec3 = [f64; 3];

pub(crate) fn norm3(v: &Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn dist3(a: &Vec3, b: &Vec3) -> f64 {
    norm3(&[a[0] - b[0], a[1] - b[1], a[2] - b[2]])
}

/// Directions and wavelengths of the three excitation beams.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamGeometry {
    pub wavelengths_nm: [f64; 3],
    pub unit_wavevectors: [Vec3; 3],
}

impl BeamGeometry {
    pub fn new(wavelengths_nm: [f64; 3], unit_wavevectors: [Vec3; 3]) -> Result<Self> {
        let g = Self {
            wavelengths_nm,
            unit_wavevectors,
        };
        g.validate()?;
        Ok(g)
    }

    /// All beams co-propagating along +x.
    pub fn collinear(wavelengths_nm: [f64; 3]) -> Result<Self> {
        Self::new(wavelengths_nm, [[1.0, 0.0, 0.0]; 3])
    }

    pub fn validate(&self) -> Result<()> {
        for (i, (lam, u)) in self
            .wavelengths_nm
            .iter()
            .zip(&self.unit_wavevectors)
            .enumerate()
        {
            if !(*lam > 0.0) || !lam.is_finite() {
                return Err(invalid(format!("wavelengths_nm[{i}]"), "must be positive"));
            }
            if (norm3(u) - 1.0).abs() > 1e-12 {
                return Err(invalid(
                    format!("unit_wavevectors[{i}]"),
                    format!("norm is {}, expected 1", norm3(u)),
                ));
            }
        }
        Ok(())
    }

    /// Wave vectors `k_i = û_i/λ_i` in 1/nm (no 2π).
    pub fn wavevectors(&self) -> [Vec3; 3] {
        std::array::from_fn(|i| self.unit_wavevectors[i].map(|c| c / self.wavelengths_nm[i]))
    }

    pub fn wavevector_sum(&self) -> Vec3 {
        let k = self.wavevectors();
        std::array::from_fn(|c| k[0][c] + k[1][c] + k[2][c])
    }

    /// `|k₁ + k₂ + k₃|` in 1/nm.
    pub fn closure_residual(&self) -> f64 {
        norm3(&self.wavevector_sum())
    }

    pub fn is_closed(&self) -> bool {
        let kmax = self
            .wavelengths_nm
            .iter()
            .map(|l| 1.0 / l)
            .fold(0.0, f64::max);
        self.closure_residual() < 1e-12 * kmax
    }
}

/// Inter-beam angles (radians) between `(k₁,k₂)`, `(k₂,k₃)`, `(k₁,k₃)`.
pub type BeamAngles = [f64; 3];

/// Planar star geometry with `k₁ + k₂ + k₃ = 0`.
///
/// `k₁` points along +x, `k₂` lies in the xy plane with positive y, and
/// `k₃ = −(k₁ + k₂)`.
pub fn beam_angles(wavelengths_nm: [f64; 3]) -> Result<(BeamAngles, BeamGeometry)> {
    if wavelengths_nm.iter().any(|l| !(*l > 0.0) || !l.is_finite()) {
        return Err(invalid("wavelengths_nm", "must be positive"));
    }
    let k = wavelengths_nm.map(|l| 1.0 / l);
    let mut sorted = k;
    sorted.sort_by(f64::total_cmp);
    // A degenerate (collinear) triangle is accepted; anything longer is not.
    if sorted[2] > sorted[0] + sorted[1] * (1.0 + 1e-15) {
        return Err(Error::NoClosure { k });
    }
    let cos12 = ((k[2] * k[2] - k[0] * k[0] - k[1] * k[1]) / (2.0 * k[0] * k[1])).clamp(-1.0, 1.0);
    let th12 = cos12.acos();
    let k1 = [k[0], 0.0, 0.0];
    let k2 = [k[1] * th12.cos(), k[1] * th12.sin(), 0.0];
    let k3 = [-(k1[0] + k2[0]), -(k1[1] + k2[1]), 0.0];
    let unit = |v: Vec3| {
        let n = norm3(&v);
        v.map(|c| c / n)
    };
    let geometry = BeamGeometry {
        wavelengths_nm,
        unit_wavevectors: [unit(k1), unit(k2), unit(k3)],
    };
    let u = &geometry.unit_wavevectors;
    let angle = |a: &Vec3, b: &Vec3| dot3(a, b).clamp(-1.0, 1.0).acos();
    let angles = [
        angle(&u[0], &u[1]),
        angle(&u[1], &u[2]),
        angle(&u[0], &u[2]),
    ];
    debug_assert!(geometry.closure_residual() < 1e-12 * sorted[2]);
    Ok((angles, geometry))
}

/// State-selective detection with a fixed per-atom efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionModel {
    pub efficiency: f64,
}

impl DetectionModel {
    pub fn new(efficiency: f64) -> Result<Self> {
        let d = Self { efficiency };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.efficiency) {
            return Err(invalid("efficiency", "must lie in [0, 1]"));
        }
        Ok(())
    }
}
