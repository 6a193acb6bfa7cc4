use crate::error::{Error, Result};

/// Cumulative integral of uniformly spaced samples along a y-line.
///
/// F[0] = 0 and F[j] approximates the integral from y0 to yj. Interior
/// increments come from the local Simpson parabola (fourth-order cumulative);
/// a leftover final interval is closed with the trapezoid rule.
pub fn cumulative_integral_y(samples: &[f64], hy: f64) -> Result<Vec<f64>> {
    let n = samples.len();
    if n < 2 {
        return Err(Error::TooFewSamples { got: n, need: 2 });
    }
    if !(hy > 0.0) {
        return Err(Error::Invalid("spacing must be > 0".into()));
    }
    let mut out = vec![0.0; n];
    let mut j = 0;
    while j + 2 < n {
        let (f0, f1, f2) = (samples[j], samples[j + 1], samples[j + 2]);
        // integrals of the parabola through (f0, f1, f2) over each half
        let left = hy / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
        let right = hy / 12.0 * (-f0 + 8.0 * f1 + 5.0 * f2);
        out[j + 1] = out[j] + left;
        out[j + 2] = out[j + 1] + right;
        j += 2;
    }
    if j + 1 < n {
        // odd tail
        out[j + 1] = out[j] + hy * 0.5 * (samples[j] + samples[j + 1]);
    }
    Ok(out)
}

/// Nodes/weights of the 16-point Gauss-Legendre rule on [-1, 1].
const GL16_X: [f64; 8] = [
    0.09501250983763744,
    0.28160355077925891,
    0.45801677765722739,
    0.61787624440264375,
    0.75540440835500303,
    0.86563120238783174,
    0.94457502307323258,
    0.98940093499164993,
];
const GL16_W: [f64; 8] = [
    0.18945061045506850,
    0.18260341504492359,
    0.16915651939500254,
    0.14959598881657673,
    0.12462897125553387,
    0.09515851168249278,
    0.06225352393864789,
    0.02715245941175409,
];

/// Fixed-rule composite Gauss-Legendre integral of f over [a, b].
///
/// Panel count grows with interval length only, so the value is a smooth
/// function of the endpoints (no adaptive subdivision jumps).
pub fn gauss_integral(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let len = (b - a).abs();
    let panels = (len / 0.5).ceil().max(1.0) as usize;
    let ph = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * ph;
        let mid = lo + 0.5 * ph;
        let half = 0.5 * ph;
        let mut acc = 0.0;
        for i in 0..8 {
            let dx = half * GL16_X[i];
            acc += GL16_W[i] * (f(mid + dx) + f(mid - dx));
        }
        total += acc * half;
    }
    total
}
