//! Two-argument (generalized) Bessel functions.
//!
//! `J_m(x, y)` is the Fourier coefficient of
//! `exp(i(x sin θ + y sin 2θ)) = Σ_m J_m(x, y) e^{imθ}`; with `y = 0` it
//! reduces to the ordinary Bessel function `J_m(x)`.

use std::f64::consts::TAU;

/// `J_m(x, y)` for every `m` in `-m_max..=m_max`, index `m + m_max`.
///
/// Computed by the trapezoidal rule on the periodic integrand, which is
/// spectrally accurate once the node count exceeds the bandwidth
/// `|x| + 2|y|` by a comfortable margin.
pub fn generalized_bessel(m_max: usize, x: f64, y: f64) -> Vec<f64> {
    let bandwidth = x.abs() + 2.0 * y.abs();
    let nodes = (2 * m_max + 2 * bandwidth.ceil() as usize + 64).next_power_of_two();
    let mut out = vec![0.0; 2 * m_max + 1];
    let dtheta = TAU / nodes as f64;
    // The imaginary part vanishes by θ → -θ symmetry, so only the cosine
    // projection is accumulated.
    let phases: Vec<f64> = (0..nodes)
        .map(|k| {
            let th = k as f64 * dtheta;
            x * th.sin() + y * (2.0 * th).sin()
        })
        .collect();
    for (slot, m) in out.iter_mut().zip(-(m_max as i64)..=m_max as i64) {
        let mut acc = 0.0;
        for (k, ph) in phases.iter().enumerate() {
            acc += (ph - m as f64 * k as f64 * dtheta).cos();
        }
        *slot = acc / nodes as f64;
    }
    out
}

/// Ordinary Bessel function of the first kind, `J_m(x)`, for integer order.
pub fn bessel_j(m: i64, x: f64) -> f64 {
    let m_max = m.unsigned_abs() as usize;
    generalized_bessel(m_max, x, 0.0)[(m_max as i64 + m) as usize]
}
