use crate::error::{Error, Result};
use crate::field::Field3;
use crate::geom::{Axis, Point3};

/// Finite-difference settings shared by every residual operator.
///
/// `h` is the base step; the effective step along an axis is
/// `h * max(1, |coordinate|)` (relative stepping). `order` selects the 3/5
/// point stencils, `richardson_levels` the number of extrapolation passes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StencilConfig {
    pub h: f64,
    pub order: usize,
    pub richardson_levels: usize,
}

impl StencilConfig {
    pub fn new(h: f64, order: usize, richardson_levels: usize) -> Result<Self> {
        if !(h > 0.0) {
            return Err(Error::Invalid("stencil step h must be > 0".into()));
        }
        if order != 2 && order != 4 {
            return Err(Error::Invalid(format!("stencil order must be 2 or 4, got {}", order)));
        }
        Ok(StencilConfig {
            h,
            order,
            richardson_levels,
        })
    }

    pub fn order2(h: f64) -> Self {
        StencilConfig {
            h,
            order: 2,
            richardson_levels: 0,
        }
    }

    pub fn order4(h: f64) -> Self {
        StencilConfig {
            h,
            order: 4,
            richardson_levels: 0,
        }
    }

    pub fn with_h(&self, h: f64) -> Self {
        StencilConfig { h, ..*self }
    }

    /// Effective step at a coordinate value (relative stepping).
    pub fn step_at(&self, coord: f64) -> f64 {
        self.h * coord.abs().max(1.0)
    }
}

impl Default for StencilConfig {
    fn default() -> Self {
        StencilConfig {
            h: 1e-4,
            order: 2,
            richardson_levels: 0,
        }
    }
}

fn eval(f: &dyn Field3, p: Point3) -> Result<f64> {
    if !f.contains(p) {
        return Err(Error::DomainViolation(p));
    }
    let v = f.eval(p)?;
    if !v.is_finite() {
        return Err(Error::NonFinite("stencil point"));
    }
    Ok(v)
}

fn first_diff_at_step(f: &dyn Field3, p: Point3, axis: Axis, h: f64, order: usize) -> Result<f64> {
    // Re-derive the exactly representable step from the shifted coordinate.
    let c = p.coord(axis);
    let h = (c + h) - c;
    match order {
        2 => {
            let fp = eval(f, p.shifted(axis, h))?;
            let fm = eval(f, p.shifted(axis, -h))?;
            Ok((fp - fm) / (2.0 * h))
        }
        4 => {
            let fp2 = eval(f, p.shifted(axis, 2.0 * h))?;
            let fp1 = eval(f, p.shifted(axis, h))?;
            let fm1 = eval(f, p.shifted(axis, -h))?;
            let fm2 = eval(f, p.shifted(axis, -2.0 * h))?;
            Ok((-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) / (12.0 * h))
        }
        _ => Err(Error::Invalid("order must be 2 or 4".into())),
    }
}

fn second_diff_at_step(f: &dyn Field3, p: Point3, axis: Axis, h: f64, order: usize) -> Result<f64> {
    let c = p.coord(axis);
    let h = (c + h) - c;
    match order {
        2 => {
            let fp = eval(f, p.shifted(axis, h))?;
            let f0 = eval(f, p)?;
            let fm = eval(f, p.shifted(axis, -h))?;
            Ok((fp - 2.0 * f0 + fm) / (h * h))
        }
        4 => {
            let fp2 = eval(f, p.shifted(axis, 2.0 * h))?;
            let fp1 = eval(f, p.shifted(axis, h))?;
            let f0 = eval(f, p)?;
            let fm1 = eval(f, p.shifted(axis, -h))?;
            let fm2 = eval(f, p.shifted(axis, -2.0 * h))?;
            Ok((-fp2 + 16.0 * fp1 - 30.0 * f0 + 16.0 * fm1 - fm2) / (12.0 * h * h))
        }
        _ => Err(Error::Invalid("order must be 2 or 4".into())),
    }
}

fn mixed_diff_at_step(f: &dyn Field3, p: Point3, hx: f64, hy: f64, order: usize) -> Result<f64> {
    let hx = (p.x + hx) - p.x;
    let hy = (p.y + hy) - p.y;
    match order {
        2 => {
            let fpp = eval(f, Point3::new(p.x + hx, p.y + hy, p.z))?;
            let fpm = eval(f, Point3::new(p.x + hx, p.y - hy, p.z))?;
            let fmp = eval(f, Point3::new(p.x - hx, p.y + hy, p.z))?;
            let fmm = eval(f, Point3::new(p.x - hx, p.y - hy, p.z))?;
            Ok((fpp - fpm - fmp + fmm) / (4.0 * hx * hy))
        }
        4 => {
            // Cross of two fourth-order first-derivative stencils.
            const OFF: [f64; 4] = [-2.0, -1.0, 1.0, 2.0];
            const CF: [f64; 4] = [1.0, -8.0, 8.0, -1.0];
            let mut acc = 0.0;
            for (oi, ci) in OFF.iter().zip(CF.iter()) {
                for (oj, cj) in OFF.iter().zip(CF.iter()) {
                    let q = Point3::new(p.x + oi * hx, p.y + oj * hy, p.z);
                    acc += ci * cj * eval(f, q)?;
                }
            }
            Ok(acc / (144.0 * hx * hy))
        }
        _ => Err(Error::Invalid("order must be 2 or 4".into())),
    }
}

/// Richardson table over the even-power error expansion of a symmetric stencil.
///
/// `values[l]` is the stencil applied with step h / 2^l; `base_order` is the
/// leading truncation order.
fn richardson(values: &[f64], base_order: usize) -> f64 {
    let mut col: Vec<f64> = values.to_vec();
    let mut order = base_order as i32;
    while col.len() > 1 {
        let factor = 2f64.powi(order);
        col = col
            .windows(2)
            .map(|w| (factor * w[1] - w[0]) / (factor - 1.0))
            .collect();
        order += 2;
    }
    col[0]
}

fn with_richardson(
    cfg: &StencilConfig,
    base_h: f64,
    apply: impl Fn(f64) -> Result<f64>,
) -> Result<f64> {
    if cfg.richardson_levels == 0 {
        return apply(base_h);
    }
    let mut vals = Vec::with_capacity(cfg.richardson_levels + 1);
    for l in 0..=cfg.richardson_levels {
        vals.push(apply(base_h / 2f64.powi(l as i32))?);
    }
    Ok(richardson(&vals, cfg.order))
}

/// Central-difference approximation of the first derivative along `axis`.
pub fn central_diff(f: &dyn Field3, p: Point3, axis: Axis, cfg: &StencilConfig) -> Result<f64> {
    let h = cfg.step_at(p.coord(axis));
    let v = with_richardson(cfg, h, |h| first_diff_at_step(f, p, axis, h, cfg.order))?;
    if !v.is_finite() {
        return Err(Error::NonFinite("central difference"));
    }
    Ok(v)
}

/// Second derivative along `axis` (3-point or 5-point stencil).
pub fn second_diff(f: &dyn Field3, p: Point3, axis: Axis, cfg: &StencilConfig) -> Result<f64> {
    let h = cfg.step_at(p.coord(axis));
    let v = with_richardson(cfg, h, |h| second_diff_at_step(f, p, axis, h, cfg.order))?;
    if !v.is_finite() {
        return Err(Error::NonFinite("second difference"));
    }
    Ok(v)
}

/// Mixed derivative d2f/dxdy via the four-corner cross stencil.
pub fn mixed_diff_xy(f: &dyn Field3, p: Point3, cfg: &StencilConfig) -> Result<f64> {
    let hx = cfg.step_at(p.x);
    let hy = cfg.step_at(p.y);
    let ratio = hy / hx;
    let v = with_richardson(cfg, hx, |h| mixed_diff_at_step(f, p, h, h * ratio, cfg.order))?;
    if !v.is_finite() {
        return Err(Error::NonFinite("mixed difference"));
    }
    Ok(v)
}

/// First derivative of a field along an axis, packaged as a field itself.
/// Used for symmetry candidates S = du/d(axis).
pub struct DerivField<'a> {
    pub inner: &'a dyn Field3,
    pub axis: Axis,
    pub cfg: StencilConfig,
}

impl<'a> Field3 for DerivField<'a> {
    fn contains(&self, p: Point3) -> bool {
        self.inner.contains(p)
    }

    fn eval(&self, p: Point3) -> Result<f64> {
        central_diff(self.inner, p, self.axis, &self.cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;

    #[test]
    fn constant_field_has_zero_derivative() {
        let f = FnField::new(|_| 7.0);
        let cfg = StencilConfig::order2(0.1);
        let p = Point3::new(0.3, -1.2, 4.0);
        assert_eq!(central_diff(&f, p, Axis::X, &cfg).unwrap(), 0.0);
        assert_eq!(central_diff(&f, p, Axis::Y, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn quadratic_is_exact_for_central_diff() {
        let f = FnField::new(|p: Point3| p.x * p.x);
        let cfg = StencilConfig::order2(0.1);
        let d = central_diff(&f, Point3::new(3.0, 0.0, 0.0), Axis::X, &cfg).unwrap();
        assert_eq!(d, 6.0);
    }

    #[test]
    fn sine_derivative_matches_analytic_oracle() {
        // oracle: d/dx sin x at 0 is cos 0 = 1
        let f = FnField::new(|p: Point3| p.x.sin());
        let cfg = StencilConfig::order2(1e-3);
        let d = central_diff(&f, Point3::new(0.0, 0.0, 0.0), Axis::X, &cfg).unwrap();
        assert!((d - 1.0).abs() < 2e-7, "err = {:e}", (d - 1.0).abs());
    }

    #[test]
    fn mixed_bilinear_exact() {
        let f = FnField::new(|p: Point3| p.x * p.y);
        let cfg = StencilConfig::order2(0.1);
        let d = mixed_diff_xy(&f, Point3::new(0.4, -0.7, 2.0), &cfg).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_of_y_independent_field_is_zero() {
        let f = FnField::new(|p: Point3| p.x.exp() + p.x * p.x);
        let cfg = StencilConfig::order2(0.1);
        let d = mixed_diff_xy(&f, Point3::new(0.5, 0.0, 0.0), &cfg).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn mixed_x2y2_matches_symbolic_oracle() {
        // oracle: d2/dxdy (x^2 y^2) = 4xy = 4 at (1,1,0)
        let f = FnField::new(|p: Point3| p.x * p.x * p.y * p.y);
        let cfg = StencilConfig::order2(1e-3);
        let d = mixed_diff_xy(&f, Point3::new(1.0, 1.0, 0.0), &cfg).unwrap();
        assert!((d - 4.0).abs() < 1e-6);
    }

    #[test]
    fn second_diff_quadratic_exact() {
        let f = FnField::new(|p: Point3| p.z * p.z);
        let cfg = StencilConfig::order2(1e-2);
        let d = second_diff(&f, Point3::new(0.0, 0.0, 0.4), Axis::Z, &cfg).unwrap();
        assert!((d - 2.0).abs() < 1e-10);
    }

    #[test]
    fn second_diff_linear_is_zero() {
        let f = FnField::new(|p: Point3| 3.0 * p.z + 1.0);
        let cfg = StencilConfig::order2(1e-2);
        let d = second_diff(&f, Point3::new(0.0, 0.0, 0.2), Axis::Z, &cfg).unwrap();
        assert!(d.abs() < 1e-11);
    }

    #[test]
    fn second_diff_exponential_oracle() {
        // oracle: d2/dz2 e^z at 0 is 1
        let f = FnField::new(|p: Point3| p.z.exp());
        let cfg = StencilConfig::order2(1e-3);
        let d = second_diff(&f, Point3::new(0.0, 0.0, 0.0), Axis::Z, &cfg).unwrap();
        assert!((d - 1.0).abs() < 1e-6);
    }

    #[test]
    fn order4_beats_order2_on_smooth_field() {
        let f = FnField::new(|p: Point3| (p.x * 1.3).sin() * (p.y * 0.7).cos());
        let p = Point3::new(0.3, 0.4, 0.0);
        let exact = 1.3 * (0.3f64 * 1.3).cos() * (0.4f64 * 0.7).cos();
        let e2 = (central_diff(&f, p, Axis::X, &StencilConfig::order2(1e-2)).unwrap() - exact).abs();
        let e4 = (central_diff(&f, p, Axis::X, &StencilConfig::order4(1e-2)).unwrap() - exact).abs();
        assert!(e4 < e2 / 100.0, "e2 = {:e}, e4 = {:e}", e2, e4);
    }

    #[test]
    fn richardson_extrapolation_does_not_increase_error() {
        let fields: Vec<(Box<dyn Fn(Point3) -> f64 + Sync>, f64)> = vec![
            (Box::new(|p: Point3| p.x.sin()), (0.3f64).cos()),
            (Box::new(|p: Point3| (2.0 * p.x).exp()), 2.0 * (0.6f64).exp()),
            (Box::new(|p: Point3| 1.0 / (1.0 + p.x * p.x)), {
                let x: f64 = 0.3;
                -2.0 * x / (1.0 + x * x).powi(2)
            }),
        ];
        let p = Point3::new(0.3, 0.0, 0.0);
        for (f, exact) in fields {
            let f = FnField::new(move |p| f(p));
            let base = StencilConfig::new(1e-2, 2, 0).unwrap();
            let extr = StencilConfig::new(1e-2, 2, 1).unwrap();
            let e0 = (central_diff(&f, p, Axis::X, &base).unwrap() - exact).abs();
            let e1 = (central_diff(&f, p, Axis::X, &extr).unwrap() - exact).abs();
            assert!(e1 <= e0, "richardson worsened error: {:e} -> {:e}", e0, e1);
        }
    }

    #[test]
    fn domain_violation_propagates_from_stencil_points() {
        let f = FnField::with_domain(|p: Point3| p.x.ln(), |p: Point3| p.x > 0.0);
        let cfg = StencilConfig::order2(1e-2);
        // point itself valid, left stencil arm crosses x = 0
        let r = central_diff(&f, Point3::new(5e-3, 0.0, 0.0), Axis::X, &cfg);
        assert!(matches!(r, Err(Error::DomainViolation(_))));
    }
}
