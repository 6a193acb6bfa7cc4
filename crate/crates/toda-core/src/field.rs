use crate::error::{Error, Result};
use crate::geom::{Grid3, Point3};

/// A real-valued function of (x, y, z).
///
/// Evaluation must be pure and safe for concurrent reads; a point outside the
/// domain predicate is an error, never a silent value.
pub trait Field3: Sync {
    fn contains(&self, _p: Point3) -> bool {
        true
    }

    fn eval(&self, p: Point3) -> Result<f64>;
}

impl<T: Field3 + ?Sized> Field3 for &T {
    fn contains(&self, p: Point3) -> bool {
        (**self).contains(p)
    }
    fn eval(&self, p: Point3) -> Result<f64> {
        (**self).eval(p)
    }
}

/// Closure-backed field with an optional domain predicate.
pub struct FnField<F: Fn(Point3) -> f64 + Sync> {
    f: F,
    domain: Option<Box<dyn Fn(Point3) -> bool + Sync>>,
}

impl<F: Fn(Point3) -> f64 + Sync> FnField<F> {
    pub fn new(f: F) -> Self {
        FnField { f, domain: None }
    }

    pub fn with_domain(f: F, domain: impl Fn(Point3) -> bool + Sync + 'static) -> Self {
        FnField {
            f,
            domain: Some(Box::new(domain)),
        }
    }
}

impl<F: Fn(Point3) -> f64 + Sync> Field3 for FnField<F> {
    fn contains(&self, p: Point3) -> bool {
        match &self.domain {
            Some(d) => d(p),
            None => true,
        }
    }

    fn eval(&self, p: Point3) -> Result<f64> {
        if !self.contains(p) {
            return Err(Error::DomainViolation(p));
        }
        let v = (self.f)(p);
        if !v.is_finite() {
            return Err(Error::NonFinite("field evaluation"));
        }
        Ok(v)
    }
}

/// u = (a1 x + a3 z + a0) / (a4 y + a5), the linear-fraction exact solution
/// of the chain equation (log is separable in x+z vs y, and u is z-linear).
pub fn linear_fraction_field(
    a0: f64,
    a1: f64,
    a3: f64,
    a4: f64,
    a5: f64,
) -> FnField<impl Fn(Point3) -> f64 + Sync> {
    FnField::with_domain(
        move |p: Point3| (a1 * p.x + a3 * p.z + a0) / (a4 * p.y + a5),
        move |p: Point3| {
            let num = a1 * p.x + a3 * p.z + a0;
            let den = a4 * p.y + a5;
            den.abs() > 1e-6 && num / den > 1e-12
        },
    )
}

/// u = e^{x+y+z}; not a solution (residual -u), used as a negative control.
pub fn exp_field() -> FnField<impl Fn(Point3) -> f64 + Sync> {
    FnField::new(|p: Point3| (p.x + p.y + p.z).exp())
}

/// Values sampled on a Grid3, stored x-fastest.
#[derive(Debug, Clone)]
pub struct GridScalar {
    pub grid: Grid3,
    pub data: Vec<f64>,
}

impl GridScalar {
    pub fn zeros(grid: Grid3) -> Self {
        let n = grid.total();
        GridScalar {
            grid,
            data: vec![0.0; n],
        }
    }

    pub fn constant(grid: Grid3, c: f64) -> Self {
        let n = grid.total();
        GridScalar {
            grid,
            data: vec![c; n],
        }
    }

    /// Sample a field on every grid node; any evaluation error is fatal here
    /// because downstream stencils need complete lines.
    pub fn sample(field: &dyn Field3, grid: &Grid3) -> Result<Self> {
        let mut data = Vec::with_capacity(grid.total());
        for idx in 0..grid.total() {
            data.push(field.eval(grid.point_at(idx))?);
        }
        Ok(GridScalar {
            grid: grid.clone(),
            data,
        })
    }

    pub fn from_fn(grid: &Grid3, f: impl Fn(Point3) -> f64) -> Self {
        let data = (0..grid.total()).map(|idx| f(grid.point_at(idx))).collect();
        GridScalar {
            grid: grid.clone(),
            data,
        }
    }

    pub fn at(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.grid.ravel(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: f64) {
        let idx = self.grid.ravel(i, j, k);
        self.data[idx] = v;
    }

    /// Pointwise map of two arrays on the same grid.
    pub fn zip_with(&self, other: &GridScalar, f: impl Fn(f64, f64) -> f64) -> GridScalar {
        debug_assert_eq!(self.grid, other.grid);
        GridScalar {
            grid: self.grid.clone(),
            data: self
                .data
                .iter()
                .zip(other.data.iter())
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridScalar {
        GridScalar {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fn_field_domain_is_enforced() {
        let f = FnField::with_domain(|p: Point3| 1.0 / p.x, |p: Point3| p.x.abs() > 0.1);
        assert!(f.eval(Point3::new(1.0, 0.0, 0.0)).is_ok());
        assert!(matches!(
            f.eval(Point3::new(0.0, 0.0, 0.0)),
            Err(Error::DomainViolation(_))
        ));
    }

    #[test]
    fn non_finite_evaluation_is_an_error() {
        let f = FnField::new(|p: Point3| (1.0 / p.x).ln());
        assert!(matches!(
            f.eval(Point3::new(-1.0, 0.0, 0.0)),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn grid_scalar_sampling() {
        let grid = Grid3::from_ranges((0.0, 1.0, 5), (0.0, 1.0, 5), (0.0, 1.0, 5)).unwrap();
        let f = FnField::new(|p: Point3| p.x + 2.0 * p.y + 3.0 * p.z);
        let gs = GridScalar::sample(&f, &grid).unwrap();
        assert_eq!(gs.at(4, 0, 0), 1.0);
        assert!((gs.at(1, 2, 3) - (0.25 + 1.0 + 2.25)).abs() < 1e-15);
    }
}
