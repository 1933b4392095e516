//! Tabular results: parameter scans, time traces, and their text form.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// A header plus rows of already-formatted cells.
///
/// Every trace converts into a `Table`; writers then only deal with strings,
/// so the numeric formatting lives in one place.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_numeric(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|&v| format_sig(v)).collect());
    }

    /// Comma-separated text with a header row and `\n` line endings.
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Formats like C's `%.12g`: twelve significant digits, trailing zeros
/// dropped, exponent form outside `1e-4 ..= 1e12`.
pub fn format_sig(v: f64) -> String {
    const DIGITS: i32 = 12;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    // Round first so the exponent reflects the rounded mantissa (9.99…→10).
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..DIGITS).contains(&exp) {
        let m = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// One dependent variable sampled on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanTrace {
    pub x_name: String,
    pub y_name: String,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl ScanTrace {
    pub fn new(x_name: &str, y_name: &str, x: Vec<f64>, y: Vec<f64>) -> Self {
        debug_assert_eq!(x.len(), y.len());
        Self {
            x_name: x_name.into(),
            y_name: y_name.into(),
            x,
            y,
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Grid value at the maximum of `y` (first one on ties).
    pub fn argmax_x(&self) -> Option<f64> {
        argmax(&self.y).map(|i| self.x[i])
    }

    pub fn stats(&self) -> Option<ResonanceStats> {
        lineshape_stats(&self.x, &self.y)
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new([self.x_name.as_str(), self.y_name.as_str()]);
        for (x, y) in self.x.iter().zip(&self.y) {
            t.push_numeric(&[*x, *y]);
        }
        t
    }
}

/// Shell populations `P0, P1, P2` versus time.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TimeTrace {
    pub t: Vec<f64>,
    pub p0: Vec<f64>,
    pub p1: Vec<f64>,
    pub p2: Vec<f64>,
}

impl TimeTrace {
    pub fn zeros(t: &[f64]) -> Self {
        let n = t.len();
        Self {
            t: t.to_vec(),
            p0: vec![0.0; n],
            p1: vec![0.0; n],
            p2: vec![0.0; n],
        }
    }

    /// `self += w * other`, sample by sample.
    pub fn accumulate(&mut self, other: &TimeTrace, w: f64) {
        for (a, b) in [
            (&mut self.p0, &other.p0),
            (&mut self.p1, &other.p1),
            (&mut self.p2, &other.p2),
        ] {
            for (x, y) in a.iter_mut().zip(b) {
                *x += w * y;
            }
        }
    }

    pub fn scale(&mut self, w: f64) {
        for v in [&mut self.p0, &mut self.p1, &mut self.p2] {
            v.iter_mut().for_each(|x| *x *= w);
        }
    }

    pub fn to_table(&self) -> Table {
        let mut t = Table::new(["t_us", "P0", "P1", "P2"]);
        for i in 0..self.t.len() {
            t.push_numeric(&[self.t[i], self.p0[i], self.p1[i], self.p2[i]]);
        }
        t
    }
}

/// Peak height and full width at half maximum of a resonance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceStats {
    pub amplitude: f64,
    pub fwhm: f64,
    /// Grid value at the maximum.
    pub center: f64,
    /// True if the half-maximum interval runs into the edge of the grid, in
    /// which case `fwhm` is a lower bound.
    pub truncated: bool,
}

pub fn argmax(y: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, v) in y.iter().enumerate() {
        match best {
            Some(b) if y[b] >= *v => {}
            _ if v.is_nan() => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Amplitude is the grid maximum; the width is the contiguous interval
/// around it where `y >= max/2`, with linear interpolation of both
/// half-maximum crossings.
pub fn lineshape_stats(x: &[f64], y: &[f64]) -> Option<ResonanceStats> {
    let i = argmax(y)?;
    let amp = y[i];
    if !(amp > 0.0) {
        return None;
    }
    let half = amp / 2.0;
    let crossing = |a: usize, b: usize| x[a] + (half - y[a]) * (x[b] - x[a]) / (y[b] - y[a]);
    let mut truncated = false;
    let mut l = i;
    while l > 0 && y[l - 1] >= half {
        l -= 1;
    }
    let left = if l == 0 {
        truncated = true;
        x[0]
    } else {
        crossing(l - 1, l)
    };
    let mut r = i;
    while r + 1 < y.len() && y[r + 1] >= half {
        r += 1;
    }
    let right = if r + 1 == y.len() {
        truncated = true;
        x[r]
    } else {
        crossing(r, r + 1)
    };
    Some(ResonanceStats {
        amplitude: amp,
        fwhm: right - left,
        center: x[i],
        truncated,
    })
}

/// Evenly spaced grid from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![start],
        _ => (0..n)
            .map(|k| start + (stop - start) * k as f64 / (n - 1) as f64)
            .collect(),
    }
}

/// Grid from `start` to `stop` (inclusive, within rounding) in steps of `step`.
pub fn arange(start: f64, stop: f64, step: f64) -> Vec<f64> {
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    (0..n).map(|k| start + step * k as f64).collect()
}

pub(crate) fn check_increasing(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid(name, "grid is empty"));
    }
    if grid.iter().any(|v| !v.is_finite()) {
        return Err(invalid(name, "grid contains a non-finite value"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(name, "grid must be strictly increasing"));
    }
    Ok(())
}
