use crate::error::{Error, Result};
use crate::geom::{fibonacci_directions, Vec3};
use crate::lattice::{CellGrid, CubicStencil};

/// Two concentric Fibonacci spheres sharing the same directions.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorShell {
    pub directions: Vec<Vec3>,
    pub r_inner: f64,
    pub delta_r: f64,
}

impl SensorShell {
    pub fn fibonacci(count: usize, r_inner: f64, delta_r: f64) -> Self {
        assert!(count > 0 && r_inner > 0.0 && delta_r > 0.0);
        SensorShell { directions: fibonacci_directions(count), r_inner, delta_r }
    }

    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    pub fn r_outer(&self) -> f64 {
        self.r_inner + self.delta_r
    }

    pub fn inner_points(&self) -> Vec<Vec3> {
        self.directions.iter().map(|d| d * self.r_inner).collect()
    }

    pub fn outer_points(&self) -> Vec<Vec3> {
        self.directions.iter().map(|d| d * self.r_outer()).collect()
    }
}

/// Tricubic interpolation stencils for every sensor of a shell on a given lattice.
pub struct ShellStencils {
    inner: Vec<CubicStencil>,
    outer: Vec<CubicStencil>,
}

impl ShellStencils {
    pub fn new(shell: &SensorShell, lattice: &CellGrid) -> Result<Self> {
        let build = |pts: Vec<Vec3>, offset: usize| -> Result<Vec<CubicStencil>> {
            pts.iter()
                .enumerate()
                .map(|(i, p)| {
                    CubicStencil::new(lattice, p)
                        .ok_or(Error::SensorOutsideGrid { index: offset + i, radius: p.norm() })
                })
                .collect()
        };
        Ok(ShellStencils { inner: build(shell.inner_points(), 0)?, outer: build(shell.outer_points(), shell.len())? })
    }

    /// Appends one time level of inner and outer samples.
    pub fn sample(&self, data: &[f64], inner: &mut Vec<f64>, outer: &mut Vec<f64>) {
        inner.extend(self.inner.iter().map(|s| s.apply(data)));
        outer.extend(self.outer.iter().map(|s| s.apply(data)));
    }
}
