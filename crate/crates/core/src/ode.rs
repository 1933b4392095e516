//! Explicit Runge–Kutta integration of complex linear and nonlinear ODEs.
//!
//! The adaptive path is the Dormand–Prince 5(4) pair with a PI step-size
//! controller; the fixed path is classical RK4 and exists so tests can check
//! the adaptive results against an integrator with no error control at all.

use crate::error::{Error, Result};
use crate::linalg::{CVector, C64};

/// How to step an ODE.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Stepping {
    /// Embedded 5(4) pair; `rtol` and `atol` bound the local error estimate.
    Adaptive { rtol: f64, atol: f64 },
    /// Classical RK4 with a constant step (shortened to land on output times).
    Fixed { dt: f64 },
}

impl Stepping {
    pub fn adaptive(tol: f64) -> Self {
        Stepping::Adaptive {
            rtol: tol,
            atol: tol * 1e-3,
        }
    }
}

impl Default for Stepping {
    fn default() -> Self {
        Stepping::adaptive(1e-8)
    }
}

/// Counters from the last integration.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

// Dormand–Prince coefficients.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const MIN_STEP_FRACTION: f64 = 1e-14;

/// Integrates `dy/dt = f(t, y)` from `t0` and returns `y` at each of the
/// (non-decreasing, all `>= t0`) times in `t_out`.
pub fn integrate<F>(
    mut f: F,
    t0: f64,
    y0: &CVector,
    t_out: &[f64],
    stepping: Stepping,
) -> Result<Vec<CVector>>
where
    F: FnMut(f64, &CVector, &mut CVector),
{
    integrate_with_stats(&mut f, t0, y0, t_out, stepping).map(|(ys, _)| ys)
}

pub fn integrate_with_stats<F>(
    f: &mut F,
    t0: f64,
    y0: &CVector,
    t_out: &[f64],
    stepping: Stepping,
) -> Result<(Vec<CVector>, StepStats)>
where
    F: FnMut(f64, &CVector, &mut CVector),
{
    let mut out = Vec::with_capacity(t_out.len());
    let mut stats = StepStats::default();
    let mut y = y0.clone();
    let mut t = t0;
    let mut ws = Workspace::new(y0.len());
    let mut h_guess: Option<f64> = None;
    for &target in t_out {
        if target < t - 1e-15 * t.abs().max(1.0) {
            return Err(Error::Domain {
                name: "t_out",
                value: target,
                reason: "output times must be non-decreasing and not before t0",
            });
        }
        match stepping {
            Stepping::Adaptive { rtol, atol } => {
                h_guess = Some(dopri_to(
                    f, &mut t, &mut y, target, rtol, atol, h_guess, &mut ws, &mut stats,
                )?);
            }
            Stepping::Fixed { dt } => rk4_to(f, &mut t, &mut y, target, dt, &mut ws, &mut stats),
        }
        out.push(y.clone());
    }
    Ok((out, stats))
}

struct Workspace {
    k: [CVector; 7],
    tmp: CVector,
    y_new: CVector,
}

impl Workspace {
    fn new(n: usize) -> Self {
        let z = CVector::zeros(n);
        Self {
            k: std::array::from_fn(|_| z.clone()),
            tmp: z.clone(),
            y_new: z,
        }
    }
}

#[inline]
fn axpy_into(out: &mut CVector, y: &CVector, terms: &[(f64, &CVector)], h: f64) {
    for i in 0..y.len() {
        let mut acc = C64::new(0.0, 0.0);
        for (coef, k) in terms {
            acc += k[i] * *coef;
        }
        out[i] = y[i] + acc * h;
    }
}

#[allow(clippy::too_many_arguments)]
fn dopri_to<F>(
    f: &mut F,
    t: &mut f64,
    y: &mut CVector,
    target: f64,
    rtol: f64,
    atol: f64,
    h_guess: Option<f64>,
    ws: &mut Workspace,
    stats: &mut StepStats,
) -> Result<f64>
where
    F: FnMut(f64, &CVector, &mut CVector),
{
    let span = target - *t;
    if span <= 0.0 {
        return Ok(h_guess.unwrap_or(1e-3));
    }
    let mut h = h_guess.unwrap_or_else(|| initial_step(f, *t, y, rtol, atol, ws));
    let mut err_prev: f64 = 1e-4;
    f(*t, y, &mut ws.k[0]);
    loop {
        let remaining = target - *t;
        if remaining <= 1e-15 * target.abs().max(1.0) {
            *t = target;
            return Ok(h);
        }
        let last = h >= remaining;
        let step = if last { remaining } else { h };
        if step < MIN_STEP_FRACTION * target.abs().max(1.0) {
            return Err(Error::StepUnderflow { t: *t, h: step });
        }

        let (k, rest) = ws.k.split_at_mut(1);
        let k1 = &k[0];
        axpy_into(&mut ws.tmp, y, &[(A21, k1)], step);
        f(*t + C2 * step, &ws.tmp, &mut rest[0]);
        axpy_into(&mut ws.tmp, y, &[(A31, k1), (A32, &rest[0])], step);
        f(*t + C3 * step, &ws.tmp, &mut rest[1]);
        axpy_into(
            &mut ws.tmp,
            y,
            &[(A41, k1), (A42, &rest[0]), (A43, &rest[1])],
            step,
        );
        f(*t + C4 * step, &ws.tmp, &mut rest[2]);
        axpy_into(
            &mut ws.tmp,
            y,
            &[(A51, k1), (A52, &rest[0]), (A53, &rest[1]), (A54, &rest[2])],
            step,
        );
        f(*t + C5 * step, &ws.tmp, &mut rest[3]);
        axpy_into(
            &mut ws.tmp,
            y,
            &[
                (A61, k1),
                (A62, &rest[0]),
                (A63, &rest[1]),
                (A64, &rest[2]),
                (A65, &rest[3]),
            ],
            step,
        );
        f(*t + step, &ws.tmp, &mut rest[4]);
        axpy_into(
            &mut ws.y_new,
            y,
            &[
                (B1, k1),
                (B3, &rest[1]),
                (B4, &rest[2]),
                (B5, &rest[3]),
                (B6, &rest[4]),
            ],
            step,
        );
        f(*t + step, &ws.y_new, &mut rest[5]);

        let mut err_sq = 0.0;
        for i in 0..y.len() {
            let e = (k1[i] * E1
                + rest[1][i] * E3
                + rest[2][i] * E4
                + rest[3][i] * E5
                + rest[4][i] * E6
                + rest[5][i] * E7)
                * step;
            let scale = atol + rtol * y[i].norm().max(ws.y_new[i].norm());
            err_sq += (e.norm() / scale).powi(2);
        }
        let err = (err_sq / y.len() as f64).sqrt();

        if err <= 1.0 {
            stats.accepted += 1;
            *t = if last { target } else { *t + step };
            std::mem::swap(y, &mut ws.y_new);
            // FSAL: the last stage is the first stage of the next step.
            let (first, tail) = ws.k.split_at_mut(6);
            std::mem::swap(&mut first[0], &mut tail[0]);
            let err_c = err.max(1e-10);
            let factor = (0.9 * err_c.powf(-0.7 / 5.0) * err_prev.powf(0.4 / 5.0)).clamp(0.2, 5.0);
            err_prev = err_c;
            if !last {
                h = step * factor;
            }
            if last {
                return Ok(h.max(step));
            }
        } else {
            stats.rejected += 1;
            let factor = (0.9 * err.powf(-1.0 / 5.0)).clamp(0.1, 0.9);
            h = step * factor;
        }
    }
}

fn initial_step<F>(f: &mut F, t: f64, y: &CVector, rtol: f64, atol: f64, ws: &mut Workspace) -> f64
where
    F: FnMut(f64, &CVector, &mut CVector),
{
    f(t, y, &mut ws.tmp);
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for i in 0..y.len() {
        let sc = atol + rtol * y[i].norm();
        d0 += (y[i].norm() / sc).powi(2);
        d1 += (ws.tmp[i].norm() / sc).powi(2);
    }
    let n = y.len().max(1) as f64;
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        (0.01 * d0 / d1).min(1.0)
    }
}

fn rk4_to<F>(
    f: &mut F,
    t: &mut f64,
    y: &mut CVector,
    target: f64,
    dt: f64,
    ws: &mut Workspace,
    stats: &mut StepStats,
) where
    F: FnMut(f64, &CVector, &mut CVector),
{
    while target - *t > 1e-15 * target.abs().max(1.0) {
        let h = dt.min(target - *t);
        let (k, rest) = ws.k.split_at_mut(1);
        f(*t, y, &mut k[0]);
        axpy_into(&mut ws.tmp, y, &[(0.5, &k[0])], h);
        f(*t + 0.5 * h, &ws.tmp, &mut rest[0]);
        axpy_into(&mut ws.tmp, y, &[(0.5, &rest[0])], h);
        f(*t + 0.5 * h, &ws.tmp, &mut rest[1]);
        axpy_into(&mut ws.tmp, y, &[(1.0, &rest[1])], h);
        f(*t + h, &ws.tmp, &mut rest[2]);
        axpy_into(
            &mut ws.y_new,
            y,
            &[
                (1.0 / 6.0, &k[0]),
                (1.0 / 3.0, &rest[0]),
                (1.0 / 3.0, &rest[1]),
                (1.0 / 6.0, &rest[2]),
            ],
            h,
        );
        std::mem::swap(y, &mut ws.y_new);
        *t += h;
        stats.accepted += 1;
    }
    *t = target;
}
