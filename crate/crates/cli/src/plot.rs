//! Minimal SVG line plots of trace CSVs. Purely presentational.

use std::fmt::Write;

/// Headers the plotter accepts (first column is the abscissa).
pub const SCHEMAS: &[&[&str]] = &[
    &["delta3_MHz", "signal"],
    &["E_Vcm", "rhoS"],
    &["T_us", "amplitude", "fwhm"],
    &["m", "E_Vcm"],
    &["t_us", "P0", "P1", "P2"],
    &["B_over_rabi", "fidelity"],
    &["input", "output00", "output01", "output10", "output11"],
    &["N", "P1", "landau_zener"],
    &["N", "deviation", "leakage", "phase_rad"],
];

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SchemaError {
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("unrecognized header {0:?}")]
    Header(Vec<String>),
    #[error("trace has no data rows")]
    Empty,
    #[error("row {row}, column `{column}`: `{value}` is not a number")]
    NotNumeric {
        row: usize,
        column: String,
        value: String,
    },
}

/// A parsed trace: header plus numeric columns.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceData {
    pub header: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl TraceData {
    /// Number of plotted series (every column after the first).
    pub fn series(&self) -> usize {
        self.columns.len() - 1
    }
}

pub fn read_trace(text: &str) -> Result<TraceData, SchemaError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| SchemaError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if !SCHEMAS.iter().any(|s| s.iter().eq(header.iter())) {
        return Err(SchemaError::Header(header));
    }
    let mut columns = vec![Vec::new(); header.len()];
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| SchemaError::Csv(e.to_string()))?;
        for (j, cell) in rec.iter().enumerate() {
            let v = cell
                .trim()
                .parse::<f64>()
                .map_err(|_| SchemaError::NotNumeric {
                    row: row + 1,
                    column: header[j].clone(),
                    value: cell.to_string(),
                })?;
            columns[j].push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(SchemaError::Empty);
    }
    Ok(TraceData { header, columns })
}

const COLORS: [&str; 4] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd"];
const W: f64 = 640.0;
const H: f64 = 400.0;
const L: f64 = 70.0;
const R: f64 = 130.0;
const T: f64 = 30.0;
const B: f64 = 50.0;

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| {
            (l.min(v), h.max(v))
        });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-300 {
        let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Renders all series against the first column.
pub fn render_svg(data: &TraceData, title: &str) -> String {
    let x = &data.columns[0];
    let (x0, x1) = range(x.iter().cloned());
    let (y0, y1) = range(data.columns[1..].iter().flatten().cloned());
    let sx = |v: f64| L + (v - x0) / (x1 - x0) * (W - L - R);
    let sy = |v: f64| H - B - (v - y0) / (y1 - y0) * (H - T - B);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{L}" y="{T}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        W - L - R,
        H - T - B
    );
    for k in 0..=4 {
        let f = k as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(xv),
            H - B + 16.0,
            rydsim::trace::format_sig(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            L - 6.0,
            sy(yv) + 4.0,
            rydsim::trace::format_sig(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        L + (W - L - R) / 2.0,
        H - 12.0,
        escape(&data.header[0])
    );
    for (j, col) in data.columns[1..].iter().enumerate() {
        let color = COLORS[j % COLORS.len()];
        let pts: Vec<String> = x
            .iter()
            .zip(col)
            .filter(|(a, b)| a.is_finite() && b.is_finite())
            .map(|(a, b)| format!("{:.2},{:.2}", sx(*a), sy(*b)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = T + 16.0 + 18.0 * j as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/>"#,
            W - R + 10.0,
            W - R + 30.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}">{}</text>"#,
            W - R + 36.0,
            ly + 4.0,
            escape(&data.header[j + 1])
        );
    }
    s.push_str("</svg>\n");
    s
}
