//! The two supported surfaces, their chart grids and grid quadrature.
//!
//! Sphere chart: `(z, θ) ∈ [-1, 1] × [0, 2π)` with area form `dz∧dθ`
//! (total area 4π). Torus chart: `(u, v) ∈ [0, 2π)²` with `du∧dv`
//! (total area 4π²). The second coordinate is periodic on both; the first is
//! periodic only on the torus.

use alloc::format;
use alloc::vec::Vec;

use crate::dsl::Field;
use crate::math::{self, TAU};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SurfaceKind {
    Sphere,
    Torus,
}

impl SurfaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Sphere => "sphere",
            SurfaceKind::Torus => "torus",
        }
    }

    pub fn genus(self) -> u32 {
        match self {
            SurfaceKind::Sphere => 0,
            SurfaceKind::Torus => 1,
        }
    }

    pub fn first_periodic(self) -> bool {
        self == SurfaceKind::Torus
    }
}

/// A point in chart coordinates: `(z, θ)` on the sphere, `(u, v)` on the torus.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ChartPoint {
    pub s: f64,
    pub t: f64,
}

impl ChartPoint {
    pub const fn new(s: f64, t: f64) -> Self {
        ChartPoint { s, t }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SurfaceChart {
    pub kind: SurfaceKind,
}

impl SurfaceChart {
    pub const fn sphere() -> Self {
        SurfaceChart {
            kind: SurfaceKind::Sphere,
        }
    }

    pub const fn torus() -> Self {
        SurfaceChart {
            kind: SurfaceKind::Torus,
        }
    }

    pub const fn new(kind: SurfaceKind) -> Self {
        SurfaceChart { kind }
    }

    pub fn genus(&self) -> u32 {
        self.kind.genus()
    }

    /// Range of the first chart coordinate.
    pub fn first_range(&self) -> (f64, f64) {
        match self.kind {
            SurfaceKind::Sphere => (-1.0, 1.0),
            SurfaceKind::Torus => (0.0, TAU),
        }
    }

    pub fn total_area(&self) -> f64 {
        let (lo, hi) = self.first_range();
        (hi - lo) * TAU
    }

    /// Sign relating the chart measure to the surface orientation used for
    /// the regularized volume.
    ///
    /// On the unit sphere the outward-normal orientation is `dθ∧dz`, so the
    /// `(z, θ)` chart measure enters with a minus sign.
    pub fn volume_orientation(&self) -> f64 {
        match self.kind {
            SurfaceKind::Sphere => -1.0,
            SurfaceKind::Torus => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    /// Cells along the first coordinate.
    pub n1: usize,
    /// Cells along the second (periodic) coordinate.
    pub n2: usize,
    /// Partials at the two sphere poles are taken this far inside the chart.
    pub pole_margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n1: 512,
            n2: 512,
            pole_margin: 1e-9,
        }
    }
}

impl GridSpec {
    pub fn new(n1: usize, n2: usize) -> Result<Self, Error> {
        let spec = GridSpec {
            n1,
            n2,
            ..GridSpec::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.n1 < 16 || self.n2 < 16 {
            return Err(Error::InvalidGrid(format!(
                "resolution {}x{} is below the 16x16 minimum",
                self.n1, self.n2
            )));
        }
        if !(self.pole_margin > 0.0 && self.pole_margin < 1e-3) {
            return Err(Error::InvalidGrid(format!(
                "pole margin {} outside (0, 1e-3)",
                self.pole_margin
            )));
        }
        Ok(())
    }
}

/// Field values and chart partials on a uniform tensor grid.
///
/// Node `(i, j)` sits at `first = s0 + i·h1`, `second = j·h2`. The sphere has
/// `n1 + 1` node rows including both poles; the torus has `n1` rows and wraps.
/// Columns always wrap: node `n2` is node `0`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSample {
    pub kind: SurfaceKind,
    pub n1: usize,
    pub n2: usize,
    pub h1: f64,
    pub h2: f64,
    pub s0: f64,
    pub values: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl GridSample {
    pub fn rows(&self) -> usize {
        match self.kind {
            SurfaceKind::Sphere => self.n1 + 1,
            SurfaceKind::Torus => self.n1,
        }
    }

    pub fn cols(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Number of cell rows (cells are indexed by their lower-left node).
    pub fn cell_rows(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        i * self.n2 + j
    }

    /// Row index `i + 1`, wrapping on the torus. `None` past the sphere's north pole.
    #[inline]
    pub fn next_row(&self, i: usize) -> Option<usize> {
        if i + 1 < self.rows() {
            Some(i + 1)
        } else if self.kind.first_periodic() {
            Some(0)
        } else {
            None
        }
    }

    #[inline]
    pub fn next_col(&self, j: usize) -> usize {
        if j + 1 == self.n2 {
            0
        } else {
            j + 1
        }
    }

    pub fn point(&self, i: usize, j: usize) -> crate::ChartPoint {
        crate::ChartPoint::new(self.s0 + i as f64 * self.h1, j as f64 * self.h2)
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[self.index(i, j)]
    }

    /// True for node rows at a sphere pole.
    pub fn is_pole_row(&self, i: usize) -> bool {
        self.kind == SurfaceKind::Sphere && (i == 0 || i == self.n1)
    }

    /// True for cell rows whose cells touch a sphere pole row or its neighbour.
    pub fn is_polar_cell_row(&self, i: usize) -> bool {
        self.kind == SurfaceKind::Sphere && (i < 2 || i + 2 >= self.n1)
    }
}

/// Evaluates `field` and its chart partials at every grid node.
/// Values and the two partials along one grid row.
type RowSamples = (Vec<f64>, Vec<f64>, Vec<f64>);

pub fn sample<F: Field + ?Sized>(
    field: &F,
    chart: &SurfaceChart,
    spec: &GridSpec,
) -> Result<GridSample, Error> {
    if field.surface() != chart.kind {
        return Err(Error::SurfaceMismatch {
            expected: chart.kind,
            found: field.surface(),
        });
    }
    spec.validate()?;
    let (lo, hi) = chart.first_range();
    let h1 = (hi - lo) / spec.n1 as f64;
    let h2 = TAU / spec.n2 as f64;
    let rows = match chart.kind {
        SurfaceKind::Sphere => spec.n1 + 1,
        SurfaceKind::Torus => spec.n1,
    };
    let n2 = spec.n2;

    let row = |i: usize| -> Result<RowSamples, Error> {
        let s = lo + i as f64 * h1;
        // Polar rows: exact values, partials just inside the chart.
        let s_partial = match chart.kind {
            SurfaceKind::Sphere if i == 0 => -1.0 + spec.pole_margin,
            SurfaceKind::Sphere if i == spec.n1 => 1.0 - spec.pole_margin,
            _ => s,
        };
        let mut vals = Vec::with_capacity(n2);
        let mut d1 = Vec::with_capacity(n2);
        let mut d2 = Vec::with_capacity(n2);
        for j in 0..n2 {
            let t = j as f64 * h2;
            vals.push(field.eval(crate::ChartPoint::new(s, t))?);
            let (a, b) = field.partials(crate::ChartPoint::new(s_partial, t))?;
            d1.push(a);
            d2.push(b);
        }
        Ok((vals, d1, d2))
    };

    #[cfg(feature = "parallel")]
    let computed: Vec<_> = {
        use rayon::prelude::*;
        (0..rows).into_par_iter().map(row).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let computed: Vec<_> = (0..rows).map(row).collect();

    let mut values = Vec::with_capacity(rows * n2);
    let mut d1 = Vec::with_capacity(rows * n2);
    let mut d2 = Vec::with_capacity(rows * n2);
    for r in computed {
        let (v, a, b) = r?;
        values.extend(v);
        d1.extend(a);
        d2.extend(b);
    }
    Ok(GridSample {
        kind: chart.kind,
        n1: spec.n1,
        n2,
        h1,
        h2,
        s0: lo,
        values,
        d1,
        d2,
    })
}

/// Composite quadrature of a per-node integrand against the chart measure.
///
/// Trapezoid along the sphere's `z`; rectangle (periodic trapezoid) along
/// every periodic direction.
pub fn integrate(sample: &GridSample, integrand: &[f64]) -> Result<f64, Error> {
    if integrand.len() != sample.len() {
        return Err(Error::ShapeMismatch {
            expected: sample.len(),
            found: integrand.len(),
        });
    }
    let rows = sample.rows();
    let mut total = 0.0;
    for i in 0..rows {
        let w = if sample.kind == SurfaceKind::Sphere && (i == 0 || i == rows - 1) {
            0.5
        } else {
            1.0
        };
        let start = sample.index(i, 0);
        let row_sum: f64 = integrand[start..start + sample.n2].iter().sum();
        total += w * row_sum;
    }
    Ok(total * sample.h1 * sample.h2)
}

/// Chart-Euclidean norm of the gradient at node `k`.
#[inline]
pub(crate) fn grad_norm_at(sample: &GridSample, k: usize) -> f64 {
    math::hypot(sample.d1[k], sample.d2[k])
}
