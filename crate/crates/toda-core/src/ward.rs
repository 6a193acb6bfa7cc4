//! Generalized Ward family: symmetry ansatz u_z = A u_x + B u_y, hodograph
//! substitution x = theta(u, w), y = sigma(u, w), a separable second-order
//! equation for theta, and reconstruction of u(x, y, z) by the characteristic
//! shift u(x, y, z) = v(x + A z, y + B z).

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::geom::{Axis, Grid3, Point3};
use crate::ode::{integrate, OdeOptions};
use crate::quad::gauss_integral;
use crate::residuals::{report_pointwise, residual_report, ResidualKind, VerifyBundle};
use crate::roots::{solve_newton_nd, Jacobian};
use crate::stencil::{central_diff, StencilConfig};

/// One separable mode theta_mode = amplitude * e^{lambda w} g(u).
#[derive(Debug, Clone, Copy)]
pub struct WardMode {
    pub lambda: f64,
    pub amplitude: f64,
    /// (g(u0), g'(u0)) at the anchor.
    pub g_init: (f64, f64),
}

/// Family parameters: the constraint direction (A, B), the mode list, the
/// anchor (u0, w0), and the u-range of the dense tables.
#[derive(Debug, Clone)]
pub struct WardParams {
    pub a: f64,
    pub b: f64,
    pub modes: Vec<WardMode>,
    pub u0: f64,
    pub w0: f64,
    pub u_range: (f64, f64),
}

impl WardParams {
    pub fn validate(&self) -> Result<()> {
        if self.a == 0.0 {
            return Err(Error::Invalid("A must be nonzero".into()));
        }
        if !(self.u0 > 0.0) {
            return Err(Error::Invalid("anchor u0 must be > 0".into()));
        }
        if self.modes.is_empty() {
            return Err(Error::Invalid("at least one mode required".into()));
        }
        if !(self.u_range.0 < self.u_range.1)
            || !(self.u_range.0 <= self.u0 && self.u0 <= self.u_range.1)
        {
            return Err(Error::Invalid("u_range must contain the anchor".into()));
        }
        Ok(())
    }
}

/// Floor keeping the dense tables away from the singular point u = 0.
pub const U_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, Copy)]
struct GNode {
    u: f64,
    g: f64,
    dg: f64,
    d2g: f64,
}

/// Dense-output solution of u g'' + (lambda/A) g' + (B lambda^2 / A) g = 0.
///
/// Piecewise quintic Hermite in (g, g', g'') per accepted step; the second
/// derivative at nodes comes from the equation itself, so the interpolant is
/// C2 and can be differentiated twice downstream.
#[derive(Debug, Clone)]
pub struct GFunction {
    pub lambda: f64,
    nodes: Vec<GNode>,
}

impl GFunction {
    pub fn range(&self) -> (f64, f64) {
        (self.nodes[0].u, self.nodes[self.nodes.len() - 1].u)
    }

    fn locate(&self, u: f64) -> Option<usize> {
        let (lo, hi) = self.range();
        if !(u >= lo && u <= hi) {
            return None;
        }
        let mut a = 0;
        let mut b = self.nodes.len() - 1;
        while b - a > 1 {
            let m = (a + b) / 2;
            if self.nodes[m].u <= u {
                a = m;
            } else {
                b = m;
            }
        }
        Some(a)
    }

    /// g, g', g'' at u; NaN outside the table (safe under Newton damping).
    pub fn eval_raw(&self, u: f64) -> (f64, f64, f64) {
        match self.locate(u) {
            Some(i) => {
                let n0 = self.nodes[i];
                let n1 = self.nodes[(i + 1).min(self.nodes.len() - 1)];
                if n1.u == n0.u {
                    return (n0.g, n0.dg, n0.d2g);
                }
                quintic_hermite(u, &n0, &n1)
            }
            None => (f64::NAN, f64::NAN, f64::NAN),
        }
    }

    /// g and g' at u, with a range check.
    pub fn eval(&self, u: f64) -> Result<(f64, f64)> {
        let (g, dg, _) = self.eval_raw(u);
        if g.is_finite() {
            Ok((g, dg))
        } else {
            Err(Error::Invalid(format!("u = {} outside the g table {:?}", u, self.range())))
        }
    }

    /// Node table (u, g, g') for CSV export.
    pub fn table(&self) -> Vec<(f64, f64, f64)> {
        self.nodes.iter().map(|n| (n.u, n.g, n.dg)).collect()
    }
}

fn quintic_hermite(u: f64, n0: &GNode, n1: &GNode) -> (f64, f64, f64) {
    let d = n1.u - n0.u;
    let t = (u - n0.u) / d;
    let t2 = t * t;
    let t3 = t2 * t;
    let t4 = t3 * t;
    let t5 = t4 * t;
    // basis matching value / first / second derivative at both ends
    let h0 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
    let h1 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
    let h2 = 0.5 * (t2 - 3.0 * t3 + 3.0 * t4 - t5);
    let h3 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
    let h4 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
    let h5 = 0.5 * (t3 - 2.0 * t4 + t5);
    let dh0 = (-30.0 * t2 + 60.0 * t3 - 30.0 * t4) / d;
    let dh1 = (1.0 - 18.0 * t2 + 32.0 * t3 - 15.0 * t4) / d;
    let dh2 = 0.5 * (2.0 * t - 9.0 * t2 + 12.0 * t3 - 5.0 * t4) / d;
    let dh3 = (30.0 * t2 - 60.0 * t3 + 30.0 * t4) / d;
    let dh4 = (-12.0 * t2 + 28.0 * t3 - 15.0 * t4) / d;
    let dh5 = 0.5 * (3.0 * t2 - 8.0 * t3 + 5.0 * t4) / d;
    let d2 = d * d;
    let ddh0 = (-60.0 * t + 180.0 * t2 - 120.0 * t3) / d2;
    let ddh1 = (-36.0 * t + 96.0 * t2 - 60.0 * t3) / d2;
    let ddh2 = 0.5 * (2.0 - 18.0 * t + 36.0 * t2 - 20.0 * t3) / d2;
    let ddh3 = (60.0 * t - 180.0 * t2 + 120.0 * t3) / d2;
    let ddh4 = (-24.0 * t + 84.0 * t2 - 60.0 * t3) / d2;
    let ddh5 = 0.5 * (6.0 * t - 24.0 * t2 + 20.0 * t3) / d2;
    let c = [
        n0.g,
        n0.dg * d,
        n0.d2g * d * d,
        n1.g,
        n1.dg * d,
        n1.d2g * d * d,
    ];
    let g = c[0] * h0 + c[1] * h1 + c[2] * h2 + c[3] * h3 + c[4] * h4 + c[5] * h5;
    let dg = c[0] * dh0 + c[1] * dh1 + c[2] * dh2 + c[3] * dh3 + c[4] * dh4 + c[5] * dh5;
    let d2g = c[0] * ddh0 + c[1] * ddh1 + c[2] * ddh2 + c[3] * ddh3 + c[4] * ddh4 + c[5] * ddh5;
    (g, dg, d2g)
}

/// Integrate the separable mode ODE over `u_range` from the anchor state.
pub fn ward_ode_g(params: &WardParams, lambda: f64, g_init: (f64, f64)) -> Result<GFunction> {
    params.validate()?;
    let (lo, hi) = params.u_range;
    if lo < U_FLOOR {
        return Err(Error::SingularPoint);
    }
    let a = params.a;
    let b = params.b;
    let rhs = move |u: f64, y: &[f64], dy: &mut [f64]| {
        dy[0] = y[1];
        dy[1] = -((lambda / a) * y[1] + (b * lambda * lambda / a) * y[0]) / u;
    };
    let opts = OdeOptions::default();
    let d2 = |u: f64, g: f64, dg: f64| -((lambda / a) * dg + (b * lambda * lambda / a) * g) / u;

    let mut nodes: Vec<GNode> = Vec::new();
    let y0 = [g_init.0, g_init.1];
    if lo < params.u0 {
        let back = integrate(&rhs, params.u0, &y0, lo, &opts)?;
        for s in back.iter().rev() {
            nodes.push(GNode {
                u: s.t,
                g: s.y[0],
                dg: s.y[1],
                d2g: d2(s.t, s.y[0], s.y[1]),
            });
        }
    } else {
        nodes.push(GNode {
            u: params.u0,
            g: g_init.0,
            dg: g_init.1,
            d2g: d2(params.u0, g_init.0, g_init.1),
        });
    }
    if hi > params.u0 {
        let fwd = integrate(&rhs, params.u0, &y0, hi, &opts)?;
        for s in fwd.iter().skip(1) {
            nodes.push(GNode {
                u: s.t,
                g: s.y[0],
                dg: s.y[1],
                d2g: d2(s.t, s.y[0], s.y[1]),
            });
        }
    }
    if nodes.len() < 2 {
        return Err(Error::StepFailure);
    }
    Ok(GFunction { lambda, nodes })
}

struct Mode {
    lambda: f64,
    amplitude: f64,
    g: GFunction,
}

/// theta(u, w) = sum of amplitude * e^{lambda w} g_lambda(u), with analytic
/// partials to second order.
pub struct Theta {
    pub a: f64,
    pub b: f64,
    modes: Vec<Mode>,
}

/// theta and its partials at (u, w): (value, t_u, t_w, t_uu, t_uw, t_ww).
#[derive(Debug, Clone, Copy, Default)]
pub struct ThetaParts {
    pub val: f64,
    pub du: f64,
    pub dw: f64,
    pub duu: f64,
    pub duw: f64,
    pub dww: f64,
}

impl Theta {
    pub fn parts(&self, u: f64, w: f64) -> ThetaParts {
        let mut p = ThetaParts::default();
        for m in &self.modes {
            let (g, dg, d2g) = m.g.eval_raw(u);
            let e = m.amplitude * (m.lambda * w).exp();
            p.val += e * g;
            p.du += e * dg;
            p.dw += e * m.lambda * g;
            p.duu += e * d2g;
            p.duw += e * m.lambda * dg;
            p.dww += e * m.lambda * m.lambda * g;
        }
        p
    }

    pub fn value(&self, u: f64, w: f64) -> f64 {
        self.parts(u, w).val
    }

    /// Residual of the defining equation u t_uu + (1/A) t_wu + (B/A) t_ww.
    pub fn pde_residual(&self, u: f64, w: f64) -> f64 {
        let p = self.parts(u, w);
        u * p.duu + p.duw / self.a + (self.b / self.a) * p.dww
    }

    pub fn u_range(&self) -> (f64, f64) {
        let mut lo = f64::NEG_INFINITY;
        let mut hi = f64::INFINITY;
        for m in &self.modes {
            let (a, b) = m.g.range();
            lo = lo.max(a);
            hi = hi.min(b);
        }
        (lo, hi)
    }

    /// Dense g tables per mode, for export.
    pub fn g_tables(&self) -> Vec<(f64, Vec<(f64, f64, f64)>)> {
        self.modes.iter().map(|m| (m.lambda, m.g.table())).collect()
    }
}

/// Build theta from the mode list by integrating each separable ODE.
pub fn ward_theta(params: &WardParams) -> Result<Theta> {
    params.validate()?;
    let mut modes = Vec::with_capacity(params.modes.len());
    for m in &params.modes {
        let g = ward_ode_g(params, m.lambda, m.g_init)?;
        modes.push(Mode {
            lambda: m.lambda,
            amplitude: m.amplitude,
            g,
        });
    }
    Ok(Theta {
        a: params.a,
        b: params.b,
        modes,
    })
}

/// sigma(u, w) with sigma(anchor) = 0, reconstructed from the pointwise
/// gradient sigma_w = (t_u + B t_w)/A, sigma_u = (B t_u - sigma_w/u)/A.
///
/// Values are evaluated through the per-mode antiderivative of that gradient
/// (exact when each g solves its ODE); `path_integral` performs the explicit
/// two-leg quadrature from the anchor and agrees to quadrature accuracy.
pub struct Sigma {
    pub a: f64,
    pub b: f64,
    pub anchor: (f64, f64),
}

impl Sigma {
    /// (sigma_u, sigma_w) from the theta partials.
    pub fn grad(&self, theta: &Theta, u: f64, w: f64) -> (f64, f64) {
        let p = theta.parts(u, w);
        let sw = (p.du + self.b * p.dw) / self.a;
        let su = (self.b * p.du - sw / u) / self.a;
        (su, sw)
    }

    /// Mode-wise closed antiderivative, anchored to 0 at (u0, w0).
    pub fn value(&self, theta: &Theta, u: f64, w: f64) -> f64 {
        let (u0, w0) = self.anchor;
        let mut acc = 0.0;
        for m in &theta.modes {
            let (g, dg, _) = m.g.eval_raw(u);
            if m.lambda != 0.0 {
                let (g0, dg0, _) = m.g.eval_raw(u0);
                let s = (dg / m.lambda + self.b * g) / self.a;
                let s0 = (dg0 / m.lambda + self.b * g0) / self.a;
                acc += m.amplitude * (s * (m.lambda * w).exp() - s0 * (m.lambda * w0).exp());
            } else {
                // lambda = 0 forces g'' = 0: g' is constant along u
                let (g0, c, _) = m.g.eval_raw(u0);
                let _ = g0;
                acc += m.amplitude
                    * c
                    * ((w - w0) / self.a + self.b * (u - u0) / self.a
                        - (u / u0).ln() / (self.a * self.a));
            }
        }
        acc
    }

    /// Explicit path integration anchor -> (u, w0) -> (u, w).
    pub fn path_integral(&self, theta: &Theta, u: f64, w: f64) -> f64 {
        let (u0, w0) = self.anchor;
        let leg_u = gauss_integral(|s| self.grad(theta, s, w0).0, u0, u);
        let leg_w = gauss_integral(|t| self.grad(theta, u, t).1, w0, w);
        leg_u + leg_w
    }

    /// Closed-loop integral of the gradient 1-form over a rectangle; nonzero
    /// means theta fails its own second-order equation.
    pub fn loop_integral(&self, theta: &Theta, u_span: (f64, f64), w_span: (f64, f64)) -> f64 {
        let (ua, ub) = u_span;
        let (wa, wb) = w_span;
        let bottom = gauss_integral(|s| self.grad(theta, s, wa).0, ua, ub);
        let right = gauss_integral(|t| self.grad(theta, ub, t).1, wa, wb);
        let top = gauss_integral(|s| self.grad(theta, s, wb).0, ub, ua);
        let left = gauss_integral(|t| self.grad(theta, ua, t).1, wb, wa);
        bottom + right + top + left
    }
}

const LOOP_TOL: f64 = 1e-7;

/// Build sigma and verify path-independence of its gradient on a test
/// rectangle inside the working box.
pub fn ward_sigma(theta: &Theta, params: &WardParams, anchor: (f64, f64)) -> Result<Sigma> {
    let sigma = Sigma {
        a: params.a,
        b: params.b,
        anchor,
    };
    let (lo, hi) = theta.u_range();
    let ua = anchor.0.max(lo);
    let ub = hi.min(ua + 1.0);
    let loop_val = sigma.loop_integral(theta, (ua, ub), (anchor.1, anchor.1 + 1.0));
    if !loop_val.is_finite() || loop_val.abs() > LOOP_TOL {
        return Err(Error::CompatibilityViolation {
            loop_integral: loop_val,
        });
    }
    Ok(sigma)
}

/// The planar hodograph pair (theta, sigma) with its anchor.
pub struct HodographMap2 {
    pub theta: Theta,
    pub sigma: Sigma,
}

impl HodographMap2 {
    /// Jacobian determinant D = t_u s_w - t_w s_u at (u, w).
    pub fn jacobian_det(&self, u: f64, w: f64) -> f64 {
        let p = self.theta.parts(u, w);
        let (su, sw) = self.sigma.grad(&self.theta, u, w);
        p.du * sw - p.dw * su
    }
}

/// Invert (x, y) = (theta, sigma)(u, w) by damped Newton with the analytic
/// Jacobian.
pub fn ward_invert(map: &HodographMap2, x: f64, y: f64, guess: (f64, f64)) -> Result<(f64, f64)> {
    let g = |v: &[f64], out: &mut [f64]| {
        out[0] = map.theta.value(v[0], v[1]) - x;
        out[1] = map.sigma.value(&map.theta, v[0], v[1]) - y;
    };
    let jac = |v: &[f64], out: &mut [f64]| {
        let p = map.theta.parts(v[0], v[1]);
        let (su, sw) = map.sigma.grad(&map.theta, v[0], v[1]);
        out[0] = p.du;
        out[1] = p.dw;
        out[2] = su;
        out[3] = sw;
    };
    let r = solve_newton_nd(&g, Jacobian::Analytic(&jac), &[guess.0, guess.1], 5e-13, 60)?;
    Ok((r.solution[0], r.solution[1]))
}

/// u(x, y, z) = v(x + A z, y + B z) where v is the inverted planar solution.
/// The shift satisfies u_z = A u_x + B u_y identically.
pub struct WardField {
    pub map: HodographMap2,
    pub a: f64,
    pub b: f64,
    seed: (f64, f64),
}

impl WardField {
    /// Planar inversion at the shifted point; returns (u, w).
    pub fn eval_uw(&self, p: Point3) -> Result<(f64, f64)> {
        let xs = p.x + self.a * p.z;
        let ys = p.y + self.b * p.z;
        match ward_invert(&self.map, xs, ys, self.seed) {
            Ok(uw) => Ok(uw),
            Err(e) if e.is_skippable() => {
                // deterministic retry ladder around the anchor
                let (u0, w0) = self.seed;
                for (du, dw) in [(0.2, 0.0), (-0.2, 0.0), (0.0, 0.3), (0.0, -0.3), (0.3, 0.3)] {
                    if let Ok(uw) = ward_invert(&self.map, xs, ys, (u0 + du, w0 + dw)) {
                        return Ok(uw);
                    }
                }
                Err(e)
            }
            Err(e) => Err(e),
        }
    }
}

impl Field3 for WardField {
    fn eval(&self, p: Point3) -> Result<f64> {
        Ok(self.eval_uw(p)?.0)
    }
}

/// The partner field w of the first-order system (3), sharing the inversion.
pub struct WardWField<'a> {
    pub field: &'a WardField,
}

impl Field3 for WardWField<'_> {
    fn eval(&self, p: Point3) -> Result<f64> {
        Ok(self.field.eval_uw(p)?.1)
    }
}

/// Assemble the full construction: g tables, theta, sigma (with the
/// compatibility check), and the shifted field.
pub fn ward_field(params: &WardParams) -> Result<WardField> {
    let theta = ward_theta(params)?;
    let sigma = ward_sigma(&theta, params, (params.u0, params.w0))?;
    Ok(WardField {
        map: HodographMap2 { theta, sigma },
        a: params.a,
        b: params.b,
        seed: (params.u0, params.w0),
    })
}

/// Verification bundle: constraint direction, chain equation, and the
/// first-order system (3) with the partner w-field.
pub fn ward_verify(field: &WardField, grid: &Grid3, cfg: &StencilConfig) -> Result<VerifyBundle> {
    let a = field.a;
    let b = field.b;
    let mut constraint = report_pointwise("ward", "constraint", grid, cfg, |p| {
        let ux = central_diff(field, p, Axis::X, cfg)?;
        let uy = central_diff(field, p, Axis::Y, cfg)?;
        let uz = central_diff(field, p, Axis::Z, cfg)?;
        Ok(uz - a * ux - b * uy)
    })?;
    constraint.family = "ward".into();

    let mut toda = residual_report(field, grid, cfg, &ResidualKind::Toda)?;
    toda.family = "ward".into();

    let w = WardWField { field };
    let mut system3 = residual_report(field, grid, cfg, &ResidualKind::System3 { w: &w })?;
    system3.family = "ward".into();

    Ok(VerifyBundle {
        family: "ward".into(),
        reports: vec![constraint, toda, system3],
    })
}
