use crate::error::{Error, Result};

/// A point of the (x, y, z) coordinate space of the chain equation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn coord(&self, axis: Axis) -> f64 {
        match axis {
            Axis::X => self.x,
            Axis::Y => self.y,
            Axis::Z => self.z,
        }
    }

    pub fn shifted(&self, axis: Axis, delta: f64) -> Point3 {
        let mut p = *self;
        match axis {
            Axis::X => p.x += delta,
            Axis::Y => p.y += delta,
            Axis::Z => p.z += delta,
        }
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// Uniform sampling lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid3 {
    pub origin: Point3,
    pub spacing: (f64, f64, f64),
    pub counts: (usize, usize, usize),
}

impl Grid3 {
    pub fn new(origin: Point3, spacing: (f64, f64, f64), counts: (usize, usize, usize)) -> Result<Self> {
        if !(spacing.0 > 0.0 && spacing.1 > 0.0 && spacing.2 > 0.0) {
            return Err(Error::Invalid("grid spacing must be strictly positive".into()));
        }
        if counts.0 < 1 || counts.1 < 1 || counts.2 < 1 {
            return Err(Error::Invalid("grid counts must be >= 1".into()));
        }
        Ok(Grid3 {
            origin,
            spacing,
            counts,
        })
    }

    /// Grid over [x0,x1] x [y0,y1] x [z0,z1] with the given point counts per axis.
    pub fn from_ranges(
        x: (f64, f64, usize),
        y: (f64, f64, usize),
        z: (f64, f64, usize),
    ) -> Result<Self> {
        fn step(lo: f64, hi: f64, n: usize) -> f64 {
            if n > 1 {
                (hi - lo) / (n - 1) as f64
            } else {
                1.0
            }
        }
        Grid3::new(
            Point3::new(x.0, y.0, z.0),
            (step(x.0, x.1, x.2), step(y.0, y.1, y.2), step(z.0, z.1, z.2)),
            (x.2, y.2, z.2),
        )
    }

    pub fn total(&self) -> usize {
        self.counts.0 * self.counts.1 * self.counts.2
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Point3 {
        Point3::new(
            self.origin.x + i as f64 * self.spacing.0,
            self.origin.y + j as f64 * self.spacing.1,
            self.origin.z + k as f64 * self.spacing.2,
        )
    }

    /// Linear index -> (i, j, k), x fastest.
    pub fn unravel(&self, idx: usize) -> (usize, usize, usize) {
        let (nx, ny, _) = self.counts;
        let i = idx % nx;
        let j = (idx / nx) % ny;
        let k = idx / (nx * ny);
        (i, j, k)
    }

    pub fn ravel(&self, i: usize, j: usize, k: usize) -> usize {
        let (nx, ny, _) = self.counts;
        i + nx * (j + ny * k)
    }

    pub fn point_at(&self, idx: usize) -> Point3 {
        let (i, j, k) = self.unravel(idx);
        self.point(i, j, k)
    }

    pub fn iter_points(&self) -> impl Iterator<Item = Point3> + '_ {
        (0..self.total()).map(move |idx| self.point_at(idx))
    }
}
