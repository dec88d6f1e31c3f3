//! Cell-centred cubic lattices on `[-L, L]³`.

use crate::geom::Vec3;
use rayon::prelude::*;

/// Geometry of an `n³` cell-centred lattice covering the box `[-L, L]³`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CellGrid {
    pub n: usize,
    pub half_width: f64,
}

impl CellGrid {
    pub fn new(n: usize, half_width: f64) -> Self {
        assert!(n >= 2 && half_width > 0.0);
        CellGrid { n, half_width }
    }

    /// Lattice with spacing close to `h` covering at least `[-half_width, half_width]³`.
    pub fn covering(half_width: f64, h: f64) -> Self {
        let n = ((2.0 * half_width / h).ceil() as usize).max(2);
        CellGrid { n, half_width: 0.5 * n as f64 * h }
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.n as f64
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(self.coord(i), self.coord(j), self.coord(k))
    }

    /// Continuous lattice coordinate of a position (cell centres at integers).
    #[inline]
    pub fn fractional(&self, x: f64) -> f64 {
        (x + self.half_width) / self.spacing() - 0.5
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(3)
    }
}

/// Scalar field stored on a [`CellGrid`], x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Field3 {
    pub grid: CellGrid,
    pub data: Vec<f64>,
}

impl Field3 {
    pub fn zeros(grid: CellGrid) -> Self {
        Field3 { grid, data: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: CellGrid, value: f64) -> Self {
        Field3 { grid, data: vec![value; grid.len()] }
    }

    /// Samples `f` at every cell centre.
    pub fn from_fn<F>(grid: CellGrid, f: F) -> Self
    where
        F: Fn(&Vec3) -> f64 + Sync,
    {
        let n = grid.n;
        let mut data = vec![0.0; grid.len()];
        data.par_chunks_mut(n * n).enumerate().for_each(|(i, slab)| {
            for j in 0..n {
                for k in 0..n {
                    slab[j * n + k] = f(&grid.center(i, j, k));
                }
            }
        });
        Field3 { grid, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[self.grid.index(i, j, k)]
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn l2_norm(&self) -> f64 {
        (crate::quad::pairwise_sum(&self.data.iter().map(|v| v * v).collect::<Vec<_>>()) * self.grid.cell_volume()).sqrt()
    }

    /// Tricubic (4-point Lagrange per axis) interpolation; `None` if the stencil leaves the lattice.
    pub fn interpolate_cubic(&self, p: &Vec3) -> Option<f64> {
        let st = CubicStencil::new(&self.grid, p)?;
        Some(st.apply(&self.data))
    }

    /// Trilinear interpolation; `None` outside the lattice interior.
    pub fn interpolate_linear(&self, p: &Vec3) -> Option<f64> {
        let st = LinearStencil::new(&self.grid, p)?;
        Some(st.apply(&self.data))
    }
}

/// Precomputed tricubic interpolation weights (64 taps).
#[derive(Debug, Clone)]
pub struct CubicStencil {
    pub indices: [usize; 64],
    pub weights: [f64; 64],
}

fn lagrange4(t: f64) -> [f64; 4] {
    // nodes at -1, 0, 1, 2
    [
        -t * (t - 1.0) * (t - 2.0) / 6.0,
        (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0,
        -(t + 1.0) * t * (t - 2.0) / 2.0,
        (t + 1.0) * t * (t - 1.0) / 6.0,
    ]
}

impl CubicStencil {
    pub fn new(grid: &CellGrid, p: &Vec3) -> Option<Self> {
        let mut base = [0usize; 3];
        let mut w = [[0.0; 4]; 3];
        for a in 0..3 {
            let f = grid.fractional(p[a]);
            let i0 = f.floor();
            if i0 < 1.0 || i0 + 2.0 > (grid.n - 1) as f64 {
                return None;
            }
            base[a] = i0 as usize - 1;
            w[a] = lagrange4(f - i0);
        }
        let mut indices = [0usize; 64];
        let mut weights = [0.0; 64];
        let mut t = 0;
        for (a, wa) in w[0].iter().enumerate() {
            for (b, wb) in w[1].iter().enumerate() {
                for (c, wc) in w[2].iter().enumerate() {
                    indices[t] = grid.index(base[0] + a, base[1] + b, base[2] + c);
                    weights[t] = wa * wb * wc;
                    t += 1;
                }
            }
        }
        Some(CubicStencil { indices, weights })
    }

    #[inline]
    pub fn apply(&self, data: &[f64]) -> f64 {
        self.indices.iter().zip(&self.weights).map(|(i, w)| data[*i] * w).sum()
    }
}

/// Precomputed trilinear interpolation weights (8 taps).
#[derive(Debug, Clone)]
pub struct LinearStencil {
    pub indices: [usize; 8],
    pub weights: [f64; 8],
}

impl LinearStencil {
    pub fn new(grid: &CellGrid, p: &Vec3) -> Option<Self> {
        let mut base = [0usize; 3];
        let mut t = [0.0; 3];
        for a in 0..3 {
            let f = grid.fractional(p[a]);
            let i0 = f.floor();
            if i0 < 0.0 || i0 + 1.0 > (grid.n - 1) as f64 {
                return None;
            }
            base[a] = i0 as usize;
            t[a] = f - i0;
        }
        let mut indices = [0usize; 8];
        let mut weights = [0.0; 8];
        let mut s = 0;
        for a in 0..2 {
            for b in 0..2 {
                for c in 0..2 {
                    indices[s] = grid.index(base[0] + a, base[1] + b, base[2] + c);
                    let wa = if a == 0 { 1.0 - t[0] } else { t[0] };
                    let wb = if b == 0 { 1.0 - t[1] } else { t[1] };
                    let wc = if c == 0 { 1.0 - t[2] } else { t[2] };
                    weights[s] = wa * wb * wc;
                    s += 1;
                }
            }
        }
        Some(LinearStencil { indices, weights })
    }

    #[inline]
    pub fn apply(&self, data: &[f64]) -> f64 {
        self.indices.iter().zip(&self.weights).map(|(i, w)| data[*i] * w).sum()
    }
}
