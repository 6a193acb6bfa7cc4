use crate::error::{Error, Result};

/// Seed for the scalar root solver.
#[derive(Debug, Clone, Copy)]
pub enum Seed {
    /// Requires a sign change; convergence is then guaranteed.
    Bracket(f64, f64),
    /// Plain damped Newton from the guess.
    Guess(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct RootResult {
    pub root: f64,
    pub iterations: usize,
}

const MAX_ITER: usize = 100;

/// Hybrid safeguarded Newton/bisection scalar root solver.
///
/// The derivative is taken by a forward/central secant when not supplied;
/// see `solve_scalar_root_with_derivative` for the analytic-derivative path.
pub fn solve_scalar_root(g: impl Fn(f64) -> f64, seed: Seed, tol: f64) -> Result<RootResult> {
    let dg = |u: f64| {
        let h = 1e-7 * u.abs().max(1.0);
        (g(u + h) - g(u - h)) / (2.0 * h)
    };
    solve_scalar_root_with_derivative(&g, dg, seed, tol)
}

/// As `solve_scalar_root` with a caller-supplied derivative.
pub fn solve_scalar_root_with_derivative(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    seed: Seed,
    tol: f64,
) -> Result<RootResult> {
    match seed {
        Seed::Bracket(lo, hi) => bracketed(g, dg, lo, hi, tol),
        Seed::Guess(u0) => newton_guess(g, dg, u0, tol),
    }
}

fn check_finite(v: f64, what: &'static str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(what))
    }
}

fn bracketed(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<RootResult> {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut fa = check_finite(g(a), "g(lo)")?;
    let fb = check_finite(g(b), "g(hi)")?;
    if fa == 0.0 {
        return Ok(RootResult { root: a, iterations: 0 });
    }
    if fb == 0.0 {
        return Ok(RootResult { root: b, iterations: 0 });
    }
    if fa * fb > 0.0 {
        return Err(Error::NoBracket);
    }
    let mut x = 0.5 * (a + b);
    let mut fx = check_finite(g(x), "g")?;
    for it in 1..=MAX_ITER {
        if fx.abs() <= tol {
            // polish: one extra Newton step when the slope allows, kept inside the bracket
            let d = dg(x);
            if d.is_finite() && d != 0.0 {
                let xn = x - fx / d;
                if xn > a && xn < b {
                    let fxn = g(xn);
                    if fxn.is_finite() && fxn.abs() <= fx.abs() {
                        return Ok(RootResult { root: xn, iterations: it });
                    }
                }
            }
            return Ok(RootResult { root: x, iterations: it });
        }
        // shrink the bracket around the current iterate
        if fa * fx < 0.0 {
            b = x;
        } else {
            a = x;
            fa = fx;
        }
        // try a Newton step; fall back to bisection when it leaves the bracket
        let d = dg(x);
        let mut xn = if d.is_finite() && d != 0.0 { x - fx / d } else { f64::NAN };
        if !(xn > a && xn < b) {
            xn = 0.5 * (a + b);
        }
        x = xn;
        fx = check_finite(g(x), "g")?;
        if (b - a).abs() < f64::EPSILON * (a.abs() + b.abs() + 1.0) {
            if fx.abs() <= tol {
                return Ok(RootResult { root: x, iterations: it });
            }
            return Err(Error::NoConvergence { iterations: it, residual: fx.abs() });
        }
    }
    if fx.abs() <= tol {
        Ok(RootResult { root: x, iterations: MAX_ITER })
    } else {
        Err(Error::NoConvergence { iterations: MAX_ITER, residual: fx.abs() })
    }
}

fn newton_guess(
    g: impl Fn(f64) -> f64,
    dg: impl Fn(f64) -> f64,
    u0: f64,
    tol: f64,
) -> Result<RootResult> {
    if !u0.is_finite() {
        return Err(Error::NonFinite("guess"));
    }
    let mut x = u0;
    let mut fx = check_finite(g(x), "g(guess)")?;
    for it in 1..=MAX_ITER {
        if fx.abs() <= tol {
            let d = dg(x);
            if d.is_finite() && d != 0.0 {
                let xn = x - fx / d;
                let fxn = g(xn);
                if fxn.is_finite() && fxn.abs() <= fx.abs() {
                    return Ok(RootResult { root: xn, iterations: it });
                }
            }
            return Ok(RootResult { root: x, iterations: it });
        }
        let d = dg(x);
        if !d.is_finite() || d.abs() < 1e-300 {
            return Err(Error::NoConvergence { iterations: it, residual: fx.abs() });
        }
        // damped step: halve until |g| decreases
        let full = -fx / d;
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda >= 2f64.powi(-20) {
            let xn = x + lambda * full;
            let fxn = g(xn);
            if fxn.is_finite() && fxn.abs() < fx.abs() {
                x = xn;
                fx = fxn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations: it, residual: fx.abs() });
        }
    }
    if fx.abs() <= tol {
        Ok(RootResult { root: x, iterations: MAX_ITER })
    } else {
        Err(Error::NoConvergence { iterations: MAX_ITER, residual: fx.abs() })
    }
}

/// Jacobian supplier for the n-dimensional Newton solver (n = 2 or 3,
/// row-major J[i][j] = dG_i/dv_j).
pub enum Jacobian<'a> {
    Analytic(&'a dyn Fn(&[f64], &mut [f64])),
    FiniteDifference,
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residual_norm: f64,
}

fn solve_linear(n: usize, a: &mut [f64], b: &mut [f64]) -> Result<()> {
    // Gaussian elimination with partial pivoting; singularity threshold
    // is relative to the row scale.
    let mut scale = 0.0f64;
    for r in 0..n {
        let row_max = (0..n).map(|c| a[r * n + c].abs()).fold(0.0, f64::max);
        scale = scale.max(row_max);
    }
    let thresh = 1e-14 * scale.max(1e-300);
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if a[r * n + col].abs() > a[piv * n + col].abs() {
                piv = r;
            }
        }
        if a[piv * n + col].abs() < thresh {
            let mut det = 1.0;
            for d in 0..n {
                det *= a[d * n + d];
            }
            return Err(Error::SingularJacobian { det });
        }
        if piv != col {
            for c in 0..n {
                a.swap(col * n + c, piv * n + c);
            }
            b.swap(col, piv);
        }
        let d = a[col * n + col];
        for r in col + 1..n {
            let m = a[r * n + col] / d;
            if m == 0.0 {
                continue;
            }
            for c in col..n {
                a[r * n + c] -= m * a[col * n + c];
            }
            b[r] -= m * b[col];
        }
    }
    for r in (0..n).rev() {
        let mut acc = b[r];
        for c in r + 1..n {
            acc -= a[r * n + c] * b[c];
        }
        b[r] = acc / a[r * n + r];
    }
    Ok(())
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Damped Newton for G: R^n -> R^n, n in {2, 3}.
///
/// Steps are halved until the residual infinity norm strictly decreases
/// (floor 2^-20); the hodograph maps have caustics where undamped Newton
/// diverges.
pub fn solve_newton_nd(
    g: &dyn Fn(&[f64], &mut [f64]),
    jac: Jacobian,
    guess: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonResult> {
    let n = guess.len();
    if n != 2 && n != 3 {
        return Err(Error::Invalid(format!("newton dimension must be 2 or 3, got {}", n)));
    }
    if guess.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("newton guess"));
    }
    let mut x = guess.to_vec();
    let mut gx = vec![0.0; n];
    g(&x, &mut gx);
    if gx.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("G(guess)"));
    }
    let mut norm = inf_norm(&gx);
    let mut jbuf = vec![0.0; n * n];
    let mut step = vec![0.0; n];
    let mut probe = vec![0.0; n];
    let mut gprobe = vec![0.0; n];

    for it in 1..=max_iter {
        if norm <= tol {
            // one full polishing step toward machine accuracy
            if fill_jacobian(g, &jac, &x, &gx, &mut jbuf).is_ok() {
                step.copy_from_slice(&gx);
                let mut jcopy = jbuf.clone();
                if solve_linear(n, &mut jcopy, &mut step).is_ok() {
                    for i in 0..n {
                        probe[i] = x[i] - step[i];
                    }
                    g(&probe, &mut gprobe);
                    let pn = inf_norm(&gprobe);
                    if pn.is_finite() && pn <= norm {
                        return Ok(NewtonResult { solution: probe, iterations: it, residual_norm: pn });
                    }
                }
            }
            return Ok(NewtonResult { solution: x, iterations: it, residual_norm: norm });
        }
        fill_jacobian(g, &jac, &x, &gx, &mut jbuf)?;
        step.copy_from_slice(&gx);
        let mut jcopy = jbuf.clone();
        solve_linear(n, &mut jcopy, &mut step)?;
        let mut lambda = 1.0f64;
        let mut accepted = false;
        while lambda >= 2f64.powi(-20) {
            for i in 0..n {
                probe[i] = x[i] - lambda * step[i];
            }
            g(&probe, &mut gprobe);
            let pn = inf_norm(&gprobe);
            if pn.is_finite() && pn < norm {
                x.copy_from_slice(&probe);
                gx.copy_from_slice(&gprobe);
                norm = pn;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence { iterations: it, residual: norm });
        }
    }
    if norm <= tol {
        Ok(NewtonResult { solution: x, iterations: max_iter, residual_norm: norm })
    } else {
        Err(Error::NoConvergence { iterations: max_iter, residual: norm })
    }
}

fn fill_jacobian(
    g: &dyn Fn(&[f64], &mut [f64]),
    jac: &Jacobian,
    x: &[f64],
    gx: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let n = x.len();
    match jac {
        Jacobian::Analytic(j) => {
            j(x, out);
        }
        Jacobian::FiniteDifference => {
            let mut xp = x.to_vec();
            let mut gp = vec![0.0; n];
            for c in 0..n {
                let h = 1e-7 * x[c].abs().max(1.0);
                xp[c] = x[c] + h;
                g(&xp, &mut gp);
                for r in 0..n {
                    out[r * n + c] = (gp[r] - gx[r]) / h;
                }
                xp[c] = x[c];
            }
        }
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("jacobian"));
    }
    Ok(())
}

/// Default tolerances: scalar roots 1e-12, Newton systems 1e-10.
pub const ROOT_TOL: f64 = 1e-12;
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 60;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_linear_root() {
        let r = solve_scalar_root(|u| u - 1.0, Seed::Guess(0.0), 1e-12).unwrap();
        assert!((r.root - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bracketed_quadratic() {
        let r = solve_scalar_root(|u| u * u - 4.0, Seed::Bracket(0.0, 5.0), 1e-12).unwrap();
        assert!((r.root - 2.0).abs() < 1e-10);
    }

    #[test]
    fn no_sign_change_reports_no_bracket() {
        let e = solve_scalar_root(|u| u * u + 1.0, Seed::Bracket(0.0, 5.0), 1e-12).unwrap_err();
        assert_eq!(e, Error::NoBracket);
    }

    #[test]
    fn bracket_mode_stays_inside_bracket() {
        // nasty flat function near the root
        let g = |u: f64| (u - 1.3).powi(3);
        let r = solve_scalar_root(g, Seed::Bracket(-2.0, 4.0), 1e-12).unwrap();
        assert!(r.root >= -2.0 && r.root <= 4.0);
        assert!(g(r.root).abs() <= 1e-12);
    }

    #[test]
    fn newton_nd_trivial_shift() {
        let g = |v: &[f64], out: &mut [f64]| {
            out[0] = v[0] - 1.0;
            out[1] = v[1] - 2.0;
        };
        let r = solve_newton_nd(&g, Jacobian::FiniteDifference, &[0.0, 0.0], 1e-10, 60).unwrap();
        assert!((r.solution[0] - 1.0).abs() < 1e-10);
        assert!((r.solution[1] - 2.0).abs() < 1e-10);
    }

    #[test]
    fn newton_nd_matches_bisection_oracle() {
        // oracle: w = 3 from the second equation, then bisect u^2 - w - 1 = u^2 - 4 -> u = 2
        let g = |v: &[f64], out: &mut [f64]| {
            out[0] = v[0] * v[0] - v[1] - 1.0;
            out[1] = v[1] - 3.0;
        };
        let r = solve_newton_nd(&g, Jacobian::FiniteDifference, &[1.5, 3.0], 1e-10, 60).unwrap();
        assert!((r.solution[0] - 2.0).abs() < 1e-9);
        assert!((r.solution[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_jacobian_row_is_singular() {
        let g = |v: &[f64], out: &mut [f64]| {
            out[0] = v[0] - 1.0;
            out[1] = 5.0; // constant row: zero Jacobian row, unsatisfiable
        };
        let e = solve_newton_nd(&g, Jacobian::FiniteDifference, &[0.0, 0.0], 1e-10, 60).unwrap_err();
        assert!(matches!(e, Error::SingularJacobian { .. }));
    }

    #[test]
    fn newton_3d_cubic_system() {
        let g = |v: &[f64], out: &mut [f64]| {
            out[0] = v[0] + v[1] + v[2] - 6.0;
            out[1] = v[0] * v[1] - 2.0;
            out[2] = v[2] * v[2] - 9.0;
        };
        let r = solve_newton_nd(&g, Jacobian::FiniteDifference, &[0.5, 3.0, 2.0], 1e-12, 60).unwrap();
        assert!(r.residual_norm < 1e-12);
        assert!((r.solution[2] - 3.0).abs() < 1e-9);
    }
}
