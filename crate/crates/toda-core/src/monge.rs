//! Zero-order family: transport constraints u_y = u u_z with u_z = u_x
//! (or the x <-> y mirror), realized by the implicit equation
//! x + z + u y = F(u) (variant A) / y + z + u x = F(u) (variant B)
//! with a free profile F.

use crate::error::{Error, Result};
use crate::field::Field3;
use crate::geom::{Axis, Grid3, Point3};
use crate::residuals::{report_pointwise, residual_report, ResidualKind, VerifyBundle};
use crate::roots::{solve_scalar_root_with_derivative, RootResult, Seed, ROOT_TOL};
use crate::stencil::{central_diff, StencilConfig};

/// Free profile F(u) with its analytic derivative.
pub struct MongeProfile {
    f: Box<dyn Fn(f64) -> f64 + Sync + Send>,
    df: Box<dyn Fn(f64) -> f64 + Sync + Send>,
    pub description: String,
}

impl MongeProfile {
    /// Build a profile, spot-checking the supplied derivative against a
    /// finite difference at 10 points of `check_range`.
    pub fn new(
        f: impl Fn(f64) -> f64 + Sync + Send + 'static,
        df: impl Fn(f64) -> f64 + Sync + Send + 'static,
        description: impl Into<String>,
        check_range: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = check_range;
        for i in 0..10 {
            let u = lo + (hi - lo) * (i as f64 + 0.5) / 10.0;
            let h = 1e-6 * u.abs().max(1.0);
            let fd = (f(u + h) - f(u - h)) / (2.0 * h);
            if !fd.is_finite() || !f(u).is_finite() {
                return Err(Error::NonFinite("profile check"));
            }
            if (df(u) - fd).abs() > 1e-6 * df(u).abs().max(1.0) {
                return Err(Error::Invalid(format!(
                    "profile derivative inconsistent at u = {}: F' = {}, FD = {}",
                    u,
                    df(u),
                    fd
                )));
            }
        }
        Ok(MongeProfile {
            f: Box::new(f),
            df: Box::new(df),
            description: description.into(),
        })
    }

    /// F(u) = c0 + c1 u.
    pub fn linear(c0: f64, c1: f64) -> Self {
        MongeProfile {
            f: Box::new(move |u| c0 + c1 * u),
            df: Box::new(move |_| c1),
            description: format!("F(u) = {} + {} u", c0, c1),
        }
    }

    /// F(u) = u^2.
    pub fn quadratic() -> Self {
        MongeProfile {
            f: Box::new(|u| u * u),
            df: Box::new(|u| 2.0 * u),
            description: "F(u) = u^2".into(),
        }
    }

    /// F(u) = e^u.
    pub fn exponential() -> Self {
        MongeProfile {
            f: Box::new(f64::exp),
            df: Box::new(f64::exp),
            description: "F(u) = e^u".into(),
        }
    }

    pub fn f(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn df(&self, u: f64) -> f64 {
        (self.df)(u)
    }
}

/// Which implicit form (and hence which transport pair) the field satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MongeVariant {
    /// x + z + u y = F(u), satisfying u_y = u u_z and u_z = u_x.
    A,
    /// y + z + u x = F(u), the x <-> y mirror.
    B,
}

impl MongeVariant {
    fn lhs(&self, p: Point3, u: f64) -> f64 {
        match self {
            MongeVariant::A => p.x + p.z + u * p.y,
            MongeVariant::B => p.y + p.z + u * p.x,
        }
    }

    /// d(lhs)/du; the implicit derivative is this minus F'(u).
    fn dlhs_du(&self, p: Point3) -> f64 {
        match self {
            MongeVariant::A => p.y,
            MongeVariant::B => p.x,
        }
    }
}

/// Branch selection for the implicit solve.
#[derive(Debug, Clone, Copy)]
pub enum BranchPolicy {
    Bracket(f64, f64),
    Guess(f64),
}

const CAUSTIC_TOL: f64 = 1e-10;

/// Solve the implicit equation lhs(p, u) = F(u) for u at one point.
///
/// The returned root is the one selected by the seed; multi-valuedness is the
/// caller's responsibility.
pub fn monge_solve(
    profile: &MongeProfile,
    variant: MongeVariant,
    p: Point3,
    branch: BranchPolicy,
) -> Result<RootResult> {
    let g = |u: f64| variant.lhs(p, u) - profile.f(u);
    let dg = |u: f64| variant.dlhs_du(p) - profile.df(u);
    let seed = match branch {
        BranchPolicy::Bracket(lo, hi) => Seed::Bracket(lo, hi),
        BranchPolicy::Guess(u0) => Seed::Guess(u0),
    };
    let res = solve_scalar_root_with_derivative(&g, &dg, seed, ROOT_TOL);
    match res {
        Ok(r) => {
            if dg(r.root).abs() < CAUSTIC_TOL {
                return Err(Error::CausticSingular {
                    root: r.root,
                    dgdu: dg(r.root),
                });
            }
            Ok(r)
        }
        Err(e) => {
            // distinguish a caustic (flat implicit derivative) from a plain
            // seeding failure: probe dg over the searched range
            let probes: Vec<f64> = match branch {
                BranchPolicy::Bracket(lo, hi) => {
                    (0..=8).map(|i| lo + (hi - lo) * i as f64 / 8.0).collect()
                }
                BranchPolicy::Guess(u0) => vec![u0, u0 + 0.5, u0 - 0.5],
            };
            if probes.iter().any(|&u| dg(u).abs() < CAUSTIC_TOL) {
                return Err(Error::CausticSingular {
                    root: f64::NAN,
                    dgdu: 0.0,
                });
            }
            Err(e)
        }
    }
}

/// The implicit solution as a field. Evaluation solves the scalar equation
/// pointwise; caustic neighborhoods surface as skippable errors.
pub struct MongeField {
    pub profile: MongeProfile,
    pub variant: MongeVariant,
    pub branch: BranchPolicy,
    /// Optional closed-form caustic guard |y - F'| (variant A) for profiles
    /// with constant F' (linear); other profiles rely on solve-time checks.
    pub caustic_guard: f64,
    linear_slope: Option<f64>,
}

impl MongeField {
    pub fn new(profile: MongeProfile, variant: MongeVariant, branch: BranchPolicy) -> Self {
        // detect a constant-slope profile so contains() can exclude the
        // caustic band without solving
        let s0 = profile.df(0.37);
        let s1 = profile.df(1.73);
        let linear_slope = if (s0 - s1).abs() < 1e-14 { Some(s0) } else { None };
        MongeField {
            profile,
            variant,
            branch,
            caustic_guard: 5e-3,
            linear_slope,
        }
    }

    pub fn with_guard(mut self, guard: f64) -> Self {
        self.caustic_guard = guard;
        self
    }

    pub fn solve(&self, p: Point3) -> Result<RootResult> {
        monge_solve(&self.profile, self.variant, p, self.branch)
    }
}

impl Field3 for MongeField {
    fn contains(&self, p: Point3) -> bool {
        if let Some(slope) = self.linear_slope {
            (self.variant.dlhs_du(p) - slope).abs() > self.caustic_guard
        } else {
            true
        }
    }

    fn eval(&self, p: Point3) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::DomainViolation(p));
        }
        Ok(self.solve(p)?.root)
    }
}

/// monge_field per the construction contract: profile + variant + branch
/// policy assembled into a ScalarField3.
pub fn monge_field(profile: MongeProfile, variant: MongeVariant, branch: BranchPolicy) -> MongeField {
    MongeField::new(profile, variant, branch)
}

/// Single-threaded continuation sweep along a precomputed line of points:
/// each root seeds the next solve. Keeps Newton on one branch across root
/// collisions that a fixed bracket would mix up.
pub fn monge_line_sweep(
    profile: &MongeProfile,
    variant: MongeVariant,
    points: &[Point3],
    first_seed: BranchPolicy,
) -> Vec<Result<f64>> {
    let mut out = Vec::with_capacity(points.len());
    let mut seed = first_seed;
    for &p in points {
        match monge_solve(profile, variant, p, seed) {
            Ok(r) => {
                seed = BranchPolicy::Guess(r.root);
                out.push(Ok(r.root));
            }
            Err(e) => out.push(Err(e)),
        }
    }
    out
}

/// Pointwise transport residuals: (u_y - u u_z, u_z - u_x) for variant A,
/// (u_x - u u_z, u_z - u_y) for variant B.
pub fn transport_residuals(
    u: &dyn Field3,
    variant: MongeVariant,
    p: Point3,
    cfg: &StencilConfig,
) -> Result<(f64, f64)> {
    let ux = central_diff(u, p, Axis::X, cfg)?;
    let uy = central_diff(u, p, Axis::Y, cfg)?;
    let uz = central_diff(u, p, Axis::Z, cfg)?;
    let uv = u.eval(p)?;
    Ok(match variant {
        MongeVariant::A => (uy - uv * uz, uz - ux),
        MongeVariant::B => (ux - uv * uz, uz - uy),
    })
}

/// Verify a field instance: chain-equation residual, the transport pair, and
/// the first-order system with T = u (variant A) / w = u (variant B).
pub fn monge_verify(field: &MongeField, grid: &Grid3, cfg: &StencilConfig) -> Result<VerifyBundle> {
    let mut toda = residual_report(field, grid, cfg, &ResidualKind::Toda)?;
    toda.family = "monge".into();

    let variant = field.variant;
    let mut transport = report_pointwise("monge", "transport", grid, cfg, |p| {
        transport_residuals(field, variant, p, cfg).map(|(a, b)| a.abs().max(b.abs()))
    })?;
    transport.family = "monge".into();

    let kind = match variant {
        MongeVariant::A => ResidualKind::System2 { t: field },
        MongeVariant::B => ResidualKind::System3 { w: field },
    };
    let mut system = residual_report(field, grid, cfg, &kind)?;
    system.family = "monge".into();
    system.kind = match variant {
        MongeVariant::A => "system2_T_u".into(),
        MongeVariant::B => "system3_w_u".into(),
    };

    Ok(VerifyBundle {
        family: "monge".into(),
        reports: vec![toda, transport, system],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::residuals::toda_residual;

    #[test]
    fn identity_profile_trivial_point() {
        // x + z + u y = u at (1,0,0): 1 = u
        let prof = MongeProfile::linear(0.0, 1.0);
        let r = monge_solve(&prof, MongeVariant::A, Point3::new(1.0, 0.0, 0.0), BranchPolicy::Guess(0.0))
            .unwrap();
        assert!((r.root - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_profile_matches_bisection_oracle() {
        // oracle: 3 + 1 = u^2 over [0,10] -> bisection gives u = 2
        let prof = MongeProfile::quadratic();
        let p = Point3::new(3.0, 0.0, 1.0);
        let mut lo = 0.0;
        let mut hi = 10.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if (4.0 - mid * mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        let r = monge_solve(&prof, MongeVariant::A, p, BranchPolicy::Bracket(0.0, 10.0)).unwrap();
        assert!((r.root - oracle).abs() < 1e-9);
        assert!((r.root - 2.0).abs() < 1e-10);
    }

    #[test]
    fn caustic_at_y_equals_profile_slope() {
        // u = (x+z)/(1-y) blows up at y = 1: dg/du = y - 1 = 0
        let prof = MongeProfile::linear(0.0, 1.0);
        let e = monge_solve(&prof, MongeVariant::A, Point3::new(1.0, 1.0, 0.0), BranchPolicy::Guess(0.5))
            .unwrap_err();
        assert!(matches!(e, Error::CausticSingular { .. }));
    }

    #[test]
    fn caustic_raised_exactly_at_tolerance() {
        let prof = MongeProfile::linear(0.0, 1.0);
        // just inside the caustic tolerance
        let e = monge_solve(
            &prof,
            MongeVariant::A,
            Point3::new(1.0, 1.0 + 0.5e-10, 0.0),
            BranchPolicy::Guess(0.5),
        );
        assert!(matches!(e, Err(Error::CausticSingular { .. })));
        // comfortably outside: solves fine
        let r = monge_solve(
            &prof,
            MongeVariant::A,
            Point3::new(1.0, 0.5, 0.0),
            BranchPolicy::Guess(0.5),
        )
        .unwrap();
        assert!(((1.0 - r.root * 0.5) - r.root * 0.0).is_finite());
    }

    #[test]
    fn field_matches_closed_form_variant_a() {
        let field = monge_field(
            MongeProfile::linear(0.0, 1.0),
            MongeVariant::A,
            BranchPolicy::Bracket(1e-3, 50.0),
        );
        for p in [
            Point3::new(1.0, 0.0, 0.5),
            Point3::new(0.4, 0.5, 0.3),
            Point3::new(2.0, 0.89, 0.9),
        ] {
            let u = field.eval(p).unwrap();
            let closed = (p.x + p.z) / (1.0 - p.y);
            assert!((u - closed).abs() < 1e-10, "u={} closed={}", u, closed);
        }
    }

    #[test]
    fn field_matches_closed_form_variant_b() {
        let field = monge_field(
            MongeProfile::linear(0.0, 1.0),
            MongeVariant::B,
            BranchPolicy::Bracket(1e-3, 50.0),
        );
        let p = Point3::new(0.3, 1.0, 0.5);
        let u = field.eval(p).unwrap();
        let closed = (p.y + p.z) / (1.0 - p.x);
        assert!((u - closed).abs() < 1e-10);
    }

    #[test]
    fn verify_identity_profile_all_reports_pass() {
        let field = monge_field(
            MongeProfile::linear(0.0, 1.0),
            MongeVariant::A,
            BranchPolicy::Bracket(1e-3, 50.0),
        );
        let grid = Grid3::from_ranges((0.6, 2.4, 9), (-0.45, 0.45, 9), (0.1, 1.0, 9)).unwrap();
        let cfg = StencilConfig::order4(1e-3);
        let bundle = monge_verify(&field, &grid, &cfg).unwrap();
        for rep in &bundle.reports {
            assert!(
                rep.max_abs < 1e-7,
                "{} max_abs = {:e}",
                rep.kind,
                rep.max_abs
            );
            assert_eq!(rep.n_skipped, 0);
        }
    }

    #[test]
    fn verify_variant_b_mirror_bundle() {
        let field = monge_field(
            MongeProfile::linear(0.0, 1.0),
            MongeVariant::B,
            BranchPolicy::Bracket(1e-3, 50.0),
        );
        let grid = Grid3::from_ranges((-0.45, 0.45, 7), (0.6, 2.4, 7), (0.1, 1.0, 7)).unwrap();
        let cfg = StencilConfig::order4(1e-3);
        let bundle = monge_verify(&field, &grid, &cfg).unwrap();
        for rep in &bundle.reports {
            assert!(rep.max_abs < 1e-7, "{} max_abs = {:e}", rep.kind, rep.max_abs);
        }
        assert!(bundle.report("system3_w_u").is_some());
    }

    #[test]
    fn verify_quadratic_profile_solver_mediated() {
        let field = monge_field(
            MongeProfile::quadratic(),
            MongeVariant::A,
            BranchPolicy::Bracket(0.2, 5.0),
        );
        // caustic where y = 2u; u ~ [0.9, 1.8] on this box, y within +-0.4
        let grid = Grid3::from_ranges((0.6, 1.6, 7), (-0.4, 0.4, 7), (0.4, 1.4, 7)).unwrap();
        let cfg = StencilConfig::order4(5e-3);
        let bundle = monge_verify(&field, &grid, &cfg).unwrap();
        for rep in &bundle.reports {
            assert!(rep.max_abs < 1e-6, "{} max_abs = {:e}", rep.kind, rep.max_abs);
            assert_eq!(rep.n_skipped, 0, "{} skipped points", rep.kind);
        }
    }

    #[test]
    fn perturbed_field_fails_chain_residual() {
        // negative control: u + 0.1 is no longer a solution
        let inner = monge_field(
            MongeProfile::linear(0.0, 1.0),
            MongeVariant::A,
            BranchPolicy::Bracket(1e-3, 50.0),
        );
        let shifted = crate::field::FnField::new(move |p: Point3| inner.eval(p).unwrap() + 0.1);
        let cfg = StencilConfig::order2(1e-3);
        let r = toda_residual(&shifted, Point3::new(1.0, 0.2, 0.5), &cfg).unwrap();
        assert!(r.abs() > 1e-3, "r = {:e}", r);
    }

    #[test]
    fn transport_implies_chain_equation() {
        // the zero-order chain of reasoning, asserted numerically across the
        // profile library and both variants
        let cfg = StencilConfig::order4(5e-3);
        let cases: Vec<(MongeProfile, MongeVariant, BranchPolicy, Grid3)> = vec![
            (
                MongeProfile::linear(0.5, 2.0),
                MongeVariant::A,
                BranchPolicy::Bracket(1e-3, 50.0),
                Grid3::from_ranges((0.8, 1.8, 5), (-0.4, 0.4, 5), (0.3, 1.0, 5)).unwrap(),
            ),
            (
                MongeProfile::quadratic(),
                MongeVariant::B,
                BranchPolicy::Bracket(0.2, 5.0),
                Grid3::from_ranges((-0.4, 0.4, 5), (0.6, 1.6, 5), (0.4, 1.4, 5)).unwrap(),
            ),
            (
                MongeProfile::exponential(),
                MongeVariant::A,
                BranchPolicy::Bracket(0.05, 3.0),
                Grid3::from_ranges((1.4, 2.2, 5), (-0.3, 0.3, 5), (0.6, 1.2, 5)).unwrap(),
            ),
        ];
        for (prof, variant, branch, grid) in cases {
            let field = monge_field(prof, variant, branch);
            let bundle = monge_verify(&field, &grid, &cfg).unwrap();
            let toda = bundle.report("toda").unwrap().max_abs;
            let transport = bundle.report("transport").unwrap().max_abs;
            assert!(
                toda <= 50.0 * (transport + 1e-8),
                "toda {:e} not bounded by transport {:e}",
                toda,
                transport
            );
        }
    }

    #[test]
    fn continuation_sweep_has_bounded_increments() {
        let prof = MongeProfile::quadratic();
        let n = 60;
        let h = 0.01;
        let points: Vec<Point3> = (0..n)
            .map(|i| Point3::new(0.8 + i as f64 * h, 0.2, 0.7))
            .collect();
        let roots = monge_line_sweep(&prof, MongeVariant::A, &points, BranchPolicy::Bracket(0.2, 5.0));
        let vals: Vec<f64> = roots.into_iter().map(|r| r.unwrap()).collect();
        for w in vals.windows(2) {
            // |du/dx| = 1/|2u - y| is bounded by ~1 on this line
            assert!((w[1] - w[0]).abs() <= 2.0 * h, "jump {:e}", (w[1] - w[0]).abs());
        }
    }

    #[test]
    fn profile_derivative_spot_check_rejects_mismatch() {
        let bad = MongeProfile::new(|u| u * u, |_| 1.0, "broken", (0.5, 2.0));
        assert!(bad.is_err());
        let good = MongeProfile::new(|u| u * u, |u| 2.0 * u, "ok", (0.5, 2.0));
        assert!(good.is_ok());
    }
}
