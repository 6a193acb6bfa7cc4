use crate::error::{Error, Result};

/// Adaptive integration settings. Defaults follow the dense-output
/// requirement downstream: g is differentiated again, so tolerances are tight.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            abs_tol: 1e-12,
            rel_tol: 1e-10,
            max_step: 0.05,
            max_steps: 1_000_000,
        }
    }
}

/// One accepted step: time, state, and the right-hand side at that state.
#[derive(Debug, Clone)]
pub struct OdeStep {
    pub t: f64,
    pub y: Vec<f64>,
    pub dy: Vec<f64>,
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrate y' = rhs(t, y) from t0 to t_end (either direction), returning
/// every accepted step including both endpoints.
pub fn integrate(
    rhs: &dyn Fn(f64, &[f64], &mut [f64]),
    t0: f64,
    y0: &[f64],
    t_end: f64,
    opts: &OdeOptions,
) -> Result<Vec<OdeStep>> {
    let n = y0.len();
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let span = (t_end - t0).abs();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut f0 = vec![0.0; n];
    rhs(t, &y, &mut f0);
    if f0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("ode rhs at start"));
    }
    let mut steps = vec![OdeStep {
        t,
        y: y.clone(),
        dy: f0.clone(),
    }];
    if span == 0.0 {
        return Ok(steps);
    }

    let mut h = (span / 100.0).min(opts.max_step) * dir;
    let mut k = vec![vec![0.0; n]; 7];
    let mut ytmp = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut count = 0usize;

    while (t_end - t) * dir > 0.0 {
        if count > opts.max_steps {
            return Err(Error::StepFailure);
        }
        count += 1;
        if (t + h - t_end) * dir > 0.0 {
            h = t_end - t;
        }
        if h.abs() < 1e-14 * span.max(1.0) {
            return Err(Error::StepFailure);
        }
        k[0].copy_from_slice(&f0);
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..s {
                    acc += A[s - 1][j] * k[j][i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let c = match s {
                1 => 0.2,
                2 => 0.3,
                3 => 0.8,
                4 => 8.0 / 9.0,
                _ => 1.0,
            };
            let (kk, rest) = k.split_at_mut(s);
            let _ = kk;
            rhs(t + c * h, &ytmp, &mut rest[0]);
        }
        let mut err: f64 = 0.0;
        let mut finite = true;
        for i in 0..n {
            let mut acc5 = 0.0;
            let mut acc4 = 0.0;
            for s in 0..7 {
                acc5 += B5[s] * k[s][i];
                acc4 += B4[s] * k[s][i];
            }
            y5[i] = y[i] + h * acc5;
            let e = h * (acc5 - acc4);
            let sc = opts.abs_tol + opts.rel_tol * y[i].abs().max(y5[i].abs());
            if !y5[i].is_finite() {
                finite = false;
            }
            err = err.max((e / sc).abs());
        }
        if finite && err <= 1.0 {
            t += h;
            y.copy_from_slice(&y5);
            // FSAL: k7 is the rhs at the accepted point
            f0.copy_from_slice(&k[6]);
            steps.push(OdeStep {
                t,
                y: y.clone(),
                dy: f0.clone(),
            });
        }
        let fac = if finite && err > 0.0 {
            0.9 * err.powf(-0.2)
        } else if finite {
            5.0
        } else {
            0.2
        };
        h *= fac.clamp(0.2, 5.0);
        if h.abs() > opts.max_step {
            h = opts.max_step * dir;
        }
    }
    Ok(steps)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_growth() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0];
        };
        let steps = integrate(&rhs, 0.0, &[1.0], 1.0, &OdeOptions::default()).unwrap();
        let last = steps.last().unwrap();
        assert!((last.y[0] - 1f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn backward_integration() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[0];
        };
        let steps = integrate(&rhs, 0.0, &[1.0], -1.0, &OdeOptions::default()).unwrap();
        let last = steps.last().unwrap();
        assert!((last.y[0] - (-1f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_period() {
        let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
            dy[0] = y[1];
            dy[1] = -y[0];
        };
        let tau = 2.0 * std::f64::consts::PI;
        let steps = integrate(&rhs, 0.0, &[1.0, 0.0], tau, &OdeOptions::default()).unwrap();
        let last = steps.last().unwrap();
        assert!((last.y[0] - 1.0).abs() < 1e-9);
        assert!(last.y[1].abs() < 1e-9);
    }
}
