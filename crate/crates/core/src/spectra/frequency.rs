//! Lattice solver for `−Δû + p²c⁻²û = p c⁻²f`.
//!
//! The finite box is closed with Dirichlet values taken from the exact
//! free-space representation `û = Φ_p * s`, where
//! `s = p c⁻²f − p²(c⁻² − b0⁻²)û` is supported in Ω and
//! `Φ_p(r) = e^{−pr/b0}/(4πr)`. Because s depends on û inside the inclusions,
//! the boundary values and the interior solve are alternated to a fixed point.

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::lattice::{CellGrid, CubicStencil, Field3};
use crate::medium::{SourceSpec, SpeedField};
use crate::quad::pairwise_sum;
use rayon::prelude::*;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FrequencyOptions {
    /// Relative residual target of the conjugate-gradient solve.
    pub tol: f64,
    pub max_iterations: usize,
    /// Maximum boundary/interior alternations.
    pub max_sweeps: usize,
    /// Relative change of the boundary values that ends the alternation.
    pub sweep_tol: f64,
}

impl Default for FrequencyOptions {
    fn default() -> Self {
        FrequencyOptions { tol: 1e-10, max_iterations: 20_000, max_sweeps: 12, sweep_tol: 1e-10 }
    }
}

/// Lattice of spacing equal to `reference`'s whose cell centres coincide with it and
/// that covers `[-half_width, half_width]³`.
pub fn aligned_lattice(reference: &CellGrid, half_width: f64) -> CellGrid {
    let h = reference.spacing();
    let mut n = (2.0 * half_width / h).ceil() as usize;
    if n % 2 != reference.n % 2 {
        n += 1;
    }
    CellGrid::new(n, 0.5 * n as f64 * h)
}

#[derive(Debug, Clone)]
struct SourceCell {
    x: Vec3,
    idx: usize,
    /// `p c⁻² f h³`
    fixed: f64,
    /// `−p² (c⁻² − b0⁻²) h³`, multiplied by û
    contrast: f64,
}

/// Ghost-cell centres just outside each face, with the interior neighbour index.
fn ghost_cells(lat: &CellGrid) -> Vec<(Vec3, usize)> {
    let n = lat.n;
    let h = lat.spacing();
    let lo = lat.coord(0) - h;
    let hi = lat.coord(n - 1) + h;
    let mut out = Vec::with_capacity(6 * n * n);
    for a in 0..n {
        for b in 0..n {
            let (ya, yb) = (lat.coord(a), lat.coord(b));
            out.push((Vec3::new(lo, ya, yb), lat.index(0, a, b)));
            out.push((Vec3::new(hi, ya, yb), lat.index(n - 1, a, b)));
            out.push((Vec3::new(ya, lo, yb), lat.index(a, 0, b)));
            out.push((Vec3::new(ya, hi, yb), lat.index(a, n - 1, b)));
            out.push((Vec3::new(ya, yb, lo), lat.index(a, b, 0)));
            out.push((Vec3::new(ya, yb, hi), lat.index(a, b, n - 1)));
        }
    }
    out
}

fn kernel_sum<'a, I>(x: &Vec3, cells: I, p_over_b0: f64) -> f64
where
    I: Iterator<Item = (&'a Vec3, f64)>,
{
    let mut acc = 0.0;
    for (y, w) in cells {
        let r = (x - y).norm();
        acc += w * (-p_over_b0 * r).exp() / (4.0 * PI * r);
    }
    acc
}

/// Jacobi-preconditioned CG on `A u = b` with `A = −Δ_h + diag(q)` and zero ghosts.
fn solve_cg(lat: &CellGrid, q: &[f64], b: &[f64], x0: Vec<f64>, opts: &FrequencyOptions) -> Result<Vec<f64>> {
    let n = lat.n;
    let inv_h2 = 1.0 / (lat.spacing() * lat.spacing());
    let apply = |u: &[f64], out: &mut [f64]| {
        out.par_chunks_mut(n * n).enumerate().for_each(|(i, slab)| {
            for j in 0..n {
                for k in 0..n {
                    let idx = (i * n + j) * n + k;
                    let c = u[idx];
                    let mut s = 6.0 * c;
                    if i > 0 { s -= u[idx - n * n]; }
                    if i + 1 < n { s -= u[idx + n * n]; }
                    if j > 0 { s -= u[idx - n]; }
                    if j + 1 < n { s -= u[idx + n]; }
                    if k > 0 { s -= u[idx - 1]; }
                    if k + 1 < n { s -= u[idx + 1]; }
                    slab[j * n + k] = s * inv_h2 + q[idx] * c;
                }
            }
        });
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        let parts: Vec<f64> = a.par_chunks(n * n).zip(b.par_chunks(n * n))
            .map(|(x, y)| pairwise_sum(&x.iter().zip(y).map(|(p, q)| p * q).collect::<Vec<_>>()))
            .collect();
        pairwise_sum(&parts)
    };
    let diag: Vec<f64> = q.iter().map(|v| 6.0 * inv_h2 + v).collect();
    let mut x = x0;
    let mut r = vec![0.0; b.len()];
    apply(&x, &mut r);
    r.par_iter_mut().zip(b).for_each(|(r, b)| *r = b - *r);
    let b_norm = dot(b, b).sqrt();
    if b_norm == 0.0 {
        return Ok(vec![0.0; b.len()]);
    }
    let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; b.len()];
    for it in 0..opts.max_iterations {
        let res = dot(&r, &r).sqrt() / b_norm;
        if res < opts.tol {
            return Ok(x);
        }
        apply(&p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        x.par_iter_mut().zip(&p).for_each(|(x, p)| *x += alpha * p);
        r.par_iter_mut().zip(&ap).for_each(|(r, a)| *r -= alpha * a);
        z.par_iter_mut().zip(&r).zip(&diag).for_each(|((z, r), d)| *z = r / d);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        p.par_iter_mut().zip(&z).for_each(|(p, z)| *p = z + beta * *p);
        if it + 1 == opts.max_iterations {
            return Err(Error::NoConvergence { iterations: opts.max_iterations, residual: res });
        }
    }
    Err(Error::NoConvergence { iterations: opts.max_iterations, residual: f64::NAN })
}

/// Lattice solution of the frequency-domain equation for one real p > 0.
pub fn solve_frequency(field: &SpeedField, src: &SourceSpec, p: f64, lat: &CellGrid, opts: &FrequencyOptions) -> Result<Field3> {
    if !(p > 0.0) {
        return Err(Error::Precondition(format!("frequency p = {p} must be positive")));
    }
    let h = lat.spacing();
    let vol = lat.cell_volume();
    let inv_b02 = field.b0.powi(-2);
    let c = Field3::from_fn(*lat, |x| field.eval_speed(x));
    let f = src.sample(lat);
    let q: Vec<f64> = c.data.iter().map(|c| p * p / (c * c)).collect();
    let mut rhs_base: Vec<f64> = f.data.iter().zip(&c.data).map(|(f, c)| p * f / (c * c)).collect();

    let mut cells = Vec::new();
    for i in 0..lat.n {
        for j in 0..lat.n {
            for k in 0..lat.n {
                let idx = lat.index(i, j, k);
                let inv_c2 = c.data[idx].powi(-2);
                let contrast = inv_c2 - inv_b02;
                if f.data[idx] != 0.0 || contrast != 0.0 {
                    cells.push(SourceCell {
                        x: lat.center(i, j, k),
                        idx,
                        fixed: p * inv_c2 * f.data[idx] * vol,
                        contrast: -p * p * contrast * vol,
                    });
                }
            }
        }
    }
    let ghosts = ghost_cells(lat);
    let k = p / field.b0;
    let fixed_part: Vec<f64> = ghosts
        .par_iter()
        .map(|(g, _)| kernel_sum(g, cells.iter().filter(|c| c.fixed != 0.0).map(|c| (&c.x, c.fixed)), k))
        .collect();
    let contrast_cells: Vec<&SourceCell> = cells.iter().filter(|c| c.contrast != 0.0).collect();

    let inv_h2 = 1.0 / (h * h);
    let mut u = vec![0.0; lat.len()];
    let mut boundary = fixed_part.clone();
    for sweep in 0..opts.max_sweeps.max(1) {
        let mut rhs = rhs_base.clone();
        for ((_, idx), g) in ghosts.iter().zip(&boundary) {
            rhs[*idx] += g * inv_h2;
        }
        u = solve_cg(lat, &q, &rhs, u, opts)?;
        if contrast_cells.is_empty() {
            break;
        }
        let next: Vec<f64> = ghosts
            .par_iter()
            .zip(&fixed_part)
            .map(|((g, _), fp)| fp + kernel_sum(g, contrast_cells.iter().map(|c| (&c.x, c.contrast * u[c.idx])), k))
            .collect();
        let change = next.iter().zip(&boundary).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let scale = next.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        boundary = next;
        if change <= opts.sweep_tol * scale || sweep + 1 == opts.max_sweeps {
            if change > 1e3 * opts.sweep_tol * scale {
                return Err(Error::NoConvergence { iterations: sweep + 1, residual: change / scale });
            }
            // one last interior solve with the converged boundary
            let mut rhs = std::mem::take(&mut rhs_base);
            for ((_, idx), g) in ghosts.iter().zip(&boundary) {
                rhs[*idx] += g * inv_h2;
            }
            u = solve_cg(lat, &q, &rhs, u, opts)?;
            break;
        }
    }
    Ok(Field3 { grid: *lat, data: u })
}

/// `û(p, ·)` at the given points (tricubic interpolation of the lattice solution).
pub fn elliptic_frequency_oracle(
    field: &SpeedField,
    src: &SourceSpec,
    p: f64,
    lat: &CellGrid,
    points: &[Vec3],
    opts: &FrequencyOptions,
) -> Result<Vec<f64>> {
    let u = solve_frequency(field, src, p, lat, opts)?;
    points
        .iter()
        .enumerate()
        .map(|(i, x)| {
            CubicStencil::new(lat, x)
                .map(|s| s.apply(&u.data))
                .ok_or(Error::SensorOutsideGrid { index: i, radius: x.norm() })
        })
        .collect()
}

/// Free-space value `p b0⁻² ∫ Φ_p(x − y) f(y) dy` for a homogeneous medium, by
/// midpoint quadrature on a lattice of spacing `h`.
pub fn homogeneous_frequency_value(src: &SourceSpec, b0: f64, p: f64, x: &Vec3, h: f64) -> f64 {
    let extent = src.support_radius();
    let lat = CellGrid::covering(extent, h);
    let vol = lat.cell_volume();
    let n = lat.n;
    let slabs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut terms = Vec::new();
            for j in 0..n {
                for k in 0..n {
                    let y = lat.center(i, j, k);
                    let f = src.eval_source(&y);
                    if f != 0.0 {
                        let r = (x - y).norm();
                        terms.push(f * (-p * r / b0).exp() / (4.0 * PI * r));
                    }
                }
            }
            pairwise_sum(&terms)
        })
        .collect();
    p / (b0 * b0) * pairwise_sum(&slabs) * vol
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::medium::BallInclusion;

    #[test]
    fn zero_source_gives_zero() {
        let field = SpeedField::homogeneous(1.0, 1.0);
        let src = SourceSpec::single(Vec3::zeros(), 0.3, 0.0, 3);
        let lat = CellGrid::new(16, 0.8);
        let u = solve_frequency(&field, &src, 0.3, &lat, &FrequencyOptions::default()).unwrap();
        assert!(u.data.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn homogeneous_solution_matches_kernel_quadrature() {
        let field = SpeedField { b0: 1.0, inclusions: vec![], r0: 0.6, omega_radius: 0.48 };
        let src = SourceSpec::single(Vec3::new(0.03, -0.02, 0.0), 0.4, 1.0, 4);
        let lat = CellGrid::new(48, 0.75);
        let x = Vec3::new(0.5, 0.1, -0.2).normalize() * 0.55;
        let p = 0.5;
        let lattice = elliptic_frequency_oracle(&field, &src, p, &lat, &[x], &FrequencyOptions::default()).unwrap()[0];
        let exact = homogeneous_frequency_value(&src, 1.0, p, &x, 0.01);
        assert!((lattice - exact).abs() < 1e-2 * exact.abs(), "{lattice} vs {exact}");
    }

    #[test]
    fn contrast_alternation_converges() {
        let mut field = SpeedField { b0: 1.0, inclusions: vec![], r0: 0.6, omega_radius: 0.48 };
        field.inclusions.push(BallInclusion::ball(Vec3::new(0.2, 0.0, 0.0), 0.12, 0.8));
        let src = SourceSpec::single(Vec3::zeros(), 0.3, 1.0, 4);
        let lat = CellGrid::new(32, 0.7);
        let u = solve_frequency(&field, &src, 0.8, &lat, &FrequencyOptions::default()).unwrap();
        assert!(u.data.iter().all(|v| v.is_finite()));
        let g = aligned_lattice(&CellGrid::new(128, 2.0), 0.7);
        assert_eq!(g.n % 2, 0);
        assert!((g.spacing() - 2.0 * 2.0 / 128.0).abs() < 1e-15);
    }
}
