use crate::error::{Error, Result};
use crate::field::Field3;
use crate::geom::{Axis, Grid3, Point3};
use crate::stencil::{central_diff, mixed_diff_xy, second_diff, StencilConfig};
use rayon::prelude::*;
use std::time::Instant;

/// Floor below which a field value counts as non-positive (rho = ln u needs u > 0).
pub const POSITIVITY_FLOOR: f64 = 1e-300;

/// ln of a positive field; evaluation enforces positivity.
pub struct LnField<'a> {
    pub u: &'a dyn Field3,
}

impl Field3 for LnField<'_> {
    fn contains(&self, p: Point3) -> bool {
        self.u.contains(p)
    }

    fn eval(&self, p: Point3) -> Result<f64> {
        let v = self.u.eval(p)?;
        if v <= POSITIVITY_FLOOR {
            return Err(Error::NonPositiveField { point: p, value: v });
        }
        Ok(v.ln())
    }
}

/// S/u for the symmetry operator.
struct RatioField<'a> {
    s: &'a dyn Field3,
    u: &'a dyn Field3,
}

impl Field3 for RatioField<'_> {
    fn contains(&self, p: Point3) -> bool {
        self.s.contains(p) && self.u.contains(p)
    }

    fn eval(&self, p: Point3) -> Result<f64> {
        let uv = self.u.eval(p)?;
        if uv <= POSITIVITY_FLOOR {
            return Err(Error::NonPositiveField { point: p, value: uv });
        }
        Ok(self.s.eval(p)? / uv)
    }
}

/// Solution / symmetry-candidate pair (S plays the role of du/dtau).
pub struct SymmetryPair<'a> {
    pub u: &'a dyn Field3,
    pub s: &'a dyn Field3,
}

/// Pointwise residual of the chain equation: (ln u)_xy - u_zz.
pub fn toda_residual(u: &dyn Field3, p: Point3, cfg: &StencilConfig) -> Result<f64> {
    let ln_u = LnField { u };
    let lhs = mixed_diff_xy(&ln_u, p, cfg)?;
    let rhs = second_diff(u, p, Axis::Z, cfg)?;
    Ok(lhs - rhs)
}

/// Residual pair of the first-order system (ln u)_y = T_z, u_z = T_x.
pub fn system2_residuals(
    u: &dyn Field3,
    t: &dyn Field3,
    p: Point3,
    cfg: &StencilConfig,
) -> Result<(f64, f64)> {
    let ln_u = LnField { u };
    let r1 = central_diff(&ln_u, p, Axis::Y, cfg)? - central_diff(t, p, Axis::Z, cfg)?;
    let r2 = central_diff(u, p, Axis::Z, cfg)? - central_diff(t, p, Axis::X, cfg)?;
    Ok((r1, r2))
}

/// x <-> y mirror: (ln u)_x = w_z, u_z = w_y.
pub fn system3_residuals(
    u: &dyn Field3,
    w: &dyn Field3,
    p: Point3,
    cfg: &StencilConfig,
) -> Result<(f64, f64)> {
    let ln_u = LnField { u };
    let r1 = central_diff(&ln_u, p, Axis::X, cfg)? - central_diff(w, p, Axis::Z, cfg)?;
    let r2 = central_diff(u, p, Axis::Z, cfg)? - central_diff(w, p, Axis::Y, cfg)?;
    Ok((r1, r2))
}

/// Residual of the linearized (symmetry) equation: (S/u)_xy - S_zz.
pub fn symmetry_residual(pair: &SymmetryPair, p: Point3, cfg: &StencilConfig) -> Result<f64> {
    let ratio = RatioField { s: pair.s, u: pair.u };
    let lhs = mixed_diff_xy(&ratio, p, cfg)?;
    let rhs = second_diff(pair.s, p, Axis::Z, cfg)?;
    Ok(lhs - rhs)
}

/// Residual of the potential form: theta_yx - theta_x * theta_zz.
pub fn theta_residual(theta: &dyn Field3, p: Point3, cfg: &StencilConfig) -> Result<f64> {
    let lhs = mixed_diff_xy(theta, p, cfg)?;
    let tx = central_diff(theta, p, Axis::X, cfg)?;
    let tzz = second_diff(theta, p, Axis::Z, cfg)?;
    Ok(lhs - tx * tzz)
}

/// Residual against the discrete chain with spacing eps in the chain index:
/// rho_xy - eps^-2 [e^{rho(z+eps)} - 2 e^{rho(z)} + e^{rho(z-eps)}].
///
/// Under the rescaling rho_n(x,y) = rho(x,y,eps*n) - 2 ln eps, an exact
/// continuum solution leaves an O(eps^2) defect (leading term
/// eps^2 (e^rho)_zzzz / 12).
pub fn discrete_chain_residual(
    rho: &dyn Field3,
    p: Point3,
    eps: f64,
    cfg: &StencilConfig,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::Invalid("eps must be > 0".into()));
    }
    let lhs = mixed_diff_xy(rho, p, cfg)?;
    let up = p.shifted(Axis::Z, eps);
    let dn = p.shifted(Axis::Z, -eps);
    for q in [up, p, dn] {
        if !rho.contains(q) {
            return Err(Error::DomainViolation(q));
        }
    }
    let ep = rho.eval(up)?.exp();
    let e0 = rho.eval(p)?.exp();
    let em = rho.eval(dn)?.exp();
    Ok(lhs - (ep - 2.0 * e0 + em) / (eps * eps))
}

/// Noise floor below which residuals are reported as exact rather than ordered.
pub const ORDER_NOISE_FLOOR: f64 = 1e-13;

/// log2 convergence-order estimate from residuals at three nested steps
/// (strictly decreasing, ratio 2).
pub fn convergence_order(residual_fn: &dyn Fn(f64) -> Result<f64>, h_sequence: &[f64]) -> Result<f64> {
    if h_sequence.len() < 3 {
        return Err(Error::TooFewSamples { got: h_sequence.len(), need: 3 });
    }
    for w in h_sequence.windows(2) {
        let ratio = w[0] / w[1];
        if !(w[0] > w[1]) || (ratio - 2.0).abs() > 1e-9 {
            return Err(Error::Invalid("h sequence must decrease with ratio 2".into()));
        }
    }
    let vals: Vec<f64> = h_sequence
        .iter()
        .map(|&h| residual_fn(h).map(|r| r.abs()))
        .collect::<Result<_>>()?;
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("residual in order estimate"));
    }
    if vals[0] < ORDER_NOISE_FLOOR && vals[1] < ORDER_NOISE_FLOOR {
        return Err(Error::ZeroResidual);
    }
    let mut acc = 0.0;
    let mut count = 0;
    for w in vals.windows(2) {
        if w[1] <= 0.0 {
            return Err(Error::ZeroResidual);
        }
        acc += (w[0] / w[1]).log2();
        count += 1;
    }
    Ok(acc / count as f64)
}

/// Aggregate residual statistics over a grid.
#[derive(Debug, Clone)]
pub struct ResidualReport {
    pub family: String,
    pub kind: String,
    pub grid: Grid3,
    pub stencil: StencilConfig,
    pub max_abs: f64,
    pub rms: f64,
    pub n_points: usize,
    pub n_skipped: usize,
    pub worst_point: Point3,
    pub wall_ms: u64,
}

impl ResidualReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_abs <= tol
    }
}

/// Reports from one family verification run.
#[derive(Debug, Clone)]
pub struct VerifyBundle {
    pub family: String,
    pub reports: Vec<ResidualReport>,
}

impl VerifyBundle {
    pub fn report(&self, kind: &str) -> Option<&ResidualReport> {
        self.reports.iter().find(|r| r.kind == kind)
    }
}

enum PointOutcome {
    Value(f64),
    Skip,
    Fatal(Error),
}

/// Aggregate a pointwise residual over every grid point.
///
/// Point-local failures (domain violations, caustics, solver breakdowns) are
/// counted as skipped. The parallel sweep writes per-index slots and reduces
/// sequentially, so the report is identical for every thread count.
pub fn report_pointwise(
    family: &str,
    kind: &str,
    grid: &Grid3,
    cfg: &StencilConfig,
    res: impl Fn(Point3) -> Result<f64> + Sync,
) -> Result<ResidualReport> {
    let start = Instant::now();
    let total = grid.total();
    if total == 0 {
        return Err(Error::AllPointsSkipped);
    }
    let outcomes: Vec<PointOutcome> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let p = grid.point_at(idx);
            match res(p) {
                Ok(v) if v.is_finite() => PointOutcome::Value(v),
                Ok(_) => PointOutcome::Skip,
                Err(e) if e.is_skippable() => PointOutcome::Skip,
                Err(e) => PointOutcome::Fatal(e),
            }
        })
        .collect();

    let mut max_abs = -1.0f64;
    let mut worst = grid.point_at(0);
    let mut n_points = 0usize;
    let mut n_skipped = 0usize;
    // Neumaier-compensated sum of squares, fixed index order.
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (idx, out) in outcomes.into_iter().enumerate() {
        match out {
            PointOutcome::Value(v) => {
                n_points += 1;
                let a = v.abs();
                if a > max_abs {
                    max_abs = a;
                    worst = grid.point_at(idx);
                }
                let sq = v * v;
                let t = sum + sq;
                comp += if sum.abs() >= sq.abs() { (sum - t) + sq } else { (sq - t) + sum };
                sum = t;
            }
            PointOutcome::Skip => n_skipped += 1,
            PointOutcome::Fatal(e) => return Err(e),
        }
    }
    if n_points == 0 {
        return Err(Error::AllPointsSkipped);
    }
    let rms = ((sum + comp) / n_points as f64).sqrt();
    Ok(ResidualReport {
        family: family.to_string(),
        kind: kind.to_string(),
        grid: grid.clone(),
        stencil: *cfg,
        max_abs,
        rms,
        n_points,
        n_skipped,
        worst_point: worst,
        wall_ms: start.elapsed().as_millis() as u64,
    })
}

/// Residual selector for `residual_report`.
pub enum ResidualKind<'a> {
    Toda,
    System2 { t: &'a dyn Field3 },
    System3 { w: &'a dyn Field3 },
    Symmetry { s: &'a dyn Field3 },
    Theta,
    DiscreteChain { eps: f64 },
}

impl ResidualKind<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            ResidualKind::Toda => "toda",
            ResidualKind::System2 { .. } => "system2",
            ResidualKind::System3 { .. } => "system3",
            ResidualKind::Symmetry { .. } => "symmetry",
            ResidualKind::Theta => "theta",
            ResidualKind::DiscreteChain { .. } => "discrete_chain",
        }
    }
}

/// Aggregate the selected pointwise residual over a grid. Pair residuals
/// (systems 2/3) aggregate max(|r1|, |r2|).
pub fn residual_report(
    u: &dyn Field3,
    grid: &Grid3,
    cfg: &StencilConfig,
    kind: &ResidualKind,
) -> Result<ResidualReport> {
    let name = kind.name();
    match kind {
        ResidualKind::Toda => report_pointwise("", name, grid, cfg, |p| toda_residual(u, p, cfg)),
        ResidualKind::System2 { t } => report_pointwise("", name, grid, cfg, |p| {
            system2_residuals(u, *t, p, cfg).map(|(a, b)| a.abs().max(b.abs()))
        }),
        ResidualKind::System3 { w } => report_pointwise("", name, grid, cfg, |p| {
            system3_residuals(u, *w, p, cfg).map(|(a, b)| a.abs().max(b.abs()))
        }),
        ResidualKind::Symmetry { s } => report_pointwise("", name, grid, cfg, |p| {
            symmetry_residual(&SymmetryPair { u, s: *s }, p, cfg)
        }),
        ResidualKind::Theta => report_pointwise("", name, grid, cfg, |p| theta_residual(u, p, cfg)),
        ResidualKind::DiscreteChain { eps } => report_pointwise("", name, grid, cfg, |p| {
            let ln_u = LnField { u };
            discrete_chain_residual(&ln_u, p, *eps, cfg)
        }),
    }
}

/// Rough truncation-noise estimate for a pointwise residual: compare the
/// stencil at h and h/2 over a few probe points. Drives the default pass
/// threshold max(1e-7, 10 * estimate).
pub fn estimate_fd_error(
    res: &(dyn Fn(Point3, &StencilConfig) -> Result<f64> + Sync),
    probes: &[Point3],
    cfg: &StencilConfig,
) -> f64 {
    let finer = cfg.with_h(cfg.h * 0.5);
    let mut worst = 0.0f64;
    for &p in probes {
        if let (Ok(a), Ok(b)) = (res(p, cfg), res(p, &finer)) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Default pass threshold separating construction errors from stencil noise.
pub fn default_threshold(fd_error: f64) -> f64 {
    (10.0 * fd_error).max(1e-7)
}
