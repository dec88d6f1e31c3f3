use crate::error::{Error, Result};
use crate::forward::{cfl_timestep, BoundaryTrace};
use crate::geom::{default_fit_degree, SphericalFit, Vec3};
use crate::lattice::{CellGrid, Field3};
use crate::medium::{SourceSpec, SpeedField};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReversalOptions {
    /// Lattice spacing; `None` uses half the shell separation of the trace.
    pub spacing: Option<f64>,
    pub safety: f64,
    /// Spherical-harmonic degree of the angular boundary fit; `None` picks the
    /// largest degree with twice as many sensors as harmonics.
    pub fit_degree: Option<usize>,
}

impl Default for ReversalOptions {
    fn default() -> Self {
        ReversalOptions { spacing: None, safety: 0.9, fit_degree: None }
    }
}

/// Reconstructed initial pressure on the reversal lattice.
#[derive(Debug, Clone)]
pub struct ReversalResult {
    pub f_hat: Field3,
    pub dt: f64,
    pub steps: usize,
    /// Radius of the Dirichlet sphere.
    pub radius: f64,
}

impl ReversalResult {
    /// Relative L² error against the sampled `f` over cells with `|x| ≤ radius`.
    pub fn relative_error(&self, src: &SourceSpec, radius: f64) -> f64 {
        let grid = self.f_hat.grid;
        let n = grid.n;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let x = grid.center(i, j, k);
                    if x.norm() <= radius {
                        let f = src.eval_source(&x);
                        let d = self.f_hat.data[grid.index(i, j, k)] - f;
                        num += d * d;
                        den += f * f;
                    }
                }
            }
        }
        if den > 0.0 { (num / den).sqrt() } else { num.sqrt() }
    }
}

/// Observability horizon `4 R0 b0 / m` with `m` the smallest speed.
pub fn required_horizon(field: &SpeedField) -> f64 {
    4.0 * field.r0 * field.b0 / field.min_speed()
}

struct Boundary {
    cells: Vec<usize>,
    /// Radial interpolation weight toward the outer shell.
    alpha: Vec<f64>,
    basis: DMatrix<f64>,
}

/// Time-domain harmonic coefficients of one shell: `coeffs[t]`.
fn shell_coefficients(fit: &SphericalFit, trace: &BoundaryTrace, outer: bool) -> Vec<DVector<f64>> {
    let s = trace.sensors();
    (0..trace.times())
        .into_par_iter()
        .map(|t| {
            let data = if outer { &trace.u_outer[t * s..(t + 1) * s] } else { &trace.u_inner[t * s..(t + 1) * s] };
            fit.coefficients(data)
        })
        .collect()
}

/// Four-point Lagrange weights at fractional level `q` (levels `i-1..i+2`), clamped to the record.
fn cubic_levels(q: f64, levels: usize) -> ([usize; 4], [f64; 4]) {
    let i = (q.floor() as isize).clamp(1, levels as isize - 3);
    let s = q - i as f64;
    let w = [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ];
    let idx = [(i - 1) as usize, i as usize, (i + 1) as usize, (i + 2) as usize];
    (idx, w)
}

/// Solves the wave equation backward on the ball of radius `trace.r_inner()` with
/// the recorded trace as Dirichlet data and zero final state, returning `v(0,·)`.
///
/// Boundary cells are lattice cells outside the ball adjacent to an interior
/// cell; their values come from a spherical-harmonic fit of each shell,
/// linear interpolation in radius and cubic interpolation in time.
pub fn time_reversal(trace: &BoundaryTrace, field: &SpeedField, horizon: f64, opts: &ReversalOptions) -> Result<ReversalResult> {
    let required = required_horizon(field);
    if !(horizon > required) {
        return Err(Error::HorizonTooShort { horizon, required });
    }
    if horizon > trace.duration() * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("horizon {horizon} exceeds the recorded duration {}", trace.duration())));
    }
    if trace.times() < 4 {
        return Err(Error::Precondition("time reversal needs at least four recorded levels".into()));
    }
    let radius = trace.r_inner();
    let dr = trace.delta_r();
    let h = opts.spacing.unwrap_or(0.5 * dr);
    let lattice = CellGrid::covering(radius + 2.0 * h, h);
    let h = lattice.spacing();
    let n = lattice.n;
    let interior: Vec<bool> = (0..lattice.len())
        .map(|idx| {
            let (i, j, k) = (idx / (n * n), (idx / n) % n, idx % n);
            lattice.center(i, j, k).norm() < radius
        })
        .collect();
    let mut cells = Vec::new();
    let mut dirs = Vec::new();
    let mut alpha = Vec::new();
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let idx = lattice.index(i, j, k);
                if interior[idx] {
                    continue;
                }
                let neighbour_inside = [(1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)].iter().any(|(a, b, c)| {
                    let (ii, jj, kk) = (i as isize + a, j as isize + b, k as isize + c);
                    let inside = |v: isize| v >= 0 && (v as usize) < n;
                    inside(ii) && inside(jj) && inside(kk) && interior[lattice.index(ii as usize, jj as usize, kk as usize)]
                });
                if neighbour_inside {
                    let x = lattice.center(i, j, k);
                    cells.push(idx);
                    dirs.push(x / x.norm());
                    alpha.push((x.norm() - radius) / dr);
                }
            }
        }
    }
    let sensor_dirs: Vec<Vec3> = trace.inner.iter().map(|x| x / x.norm()).collect();
    let degree = opts.fit_degree.unwrap_or_else(|| default_fit_degree(sensor_dirs.len()));
    let fit = SphericalFit::new(&sensor_dirs, degree);
    let boundary = Boundary { basis: fit.basis_at(&dirs), cells, alpha };
    let c_in = shell_coefficients(&fit, trace, false);
    let c_out = shell_coefficients(&fit, trace, true);

    let boundary_values = |t: f64| -> Vec<f64> {
        let q = t / trace.dt;
        let (idx, w) = cubic_levels(q, trace.times());
        let mut a = DVector::zeros(c_in[0].len());
        let mut b = DVector::zeros(c_in[0].len());
        for (l, wl) in idx.iter().zip(w) {
            a += &c_in[*l] * wl;
            b += &c_out[*l] * wl;
        }
        let vi = &boundary.basis * a;
        let vo = &boundary.basis * b;
        boundary.alpha.iter().enumerate().map(|(m, al)| (1.0 - al) * vi[m] + al * vo[m]).collect()
    };

    let (c, _) = field.sample(&lattice);
    let c2: Vec<f64> = c.data.iter().map(|v| v * v).collect();
    let dt0 = cfl_timestep(h, field.max_speed(), opts.safety)?;
    let steps = (horizon / dt0).ceil() as usize;
    let dt = horizon / steps as f64;
    let scale = (dt / h).powi(2);

    let mut next = vec![0.0; lattice.len()];
    let mut curr = vec![0.0; lattice.len()];
    let set_boundary = |buf: &mut [f64], t: f64| {
        for (m, v) in boundary_values(t).into_iter().enumerate() {
            buf[boundary.cells[m]] = v;
        }
    };
    set_boundary(&mut next, horizon);
    set_boundary(&mut curr, horizon - dt);
    for level in (0..steps - 1).rev() {
        // prev = 2 curr − next + dt² c² Δ curr on interior cells, written into `next`
        next.par_chunks_mut(n * n).enumerate().for_each(|(i, out)| {
            for j in 0..n {
                for k in 0..n {
                    let local = j * n + k;
                    let idx = i * n * n + local;
                    if !interior[idx] {
                        continue;
                    }
                    // interior cells never touch the lattice edge
                    let lap = curr[idx + n * n] + curr[idx - n * n] + curr[idx + n] + curr[idx - n] + curr[idx + 1] + curr[idx - 1]
                        - 6.0 * curr[idx];
                    out[local] = 2.0 * curr[idx] - out[local] + scale * c2[idx] * lap;
                }
            }
        });
        set_boundary(&mut next, level as f64 * dt);
        std::mem::swap(&mut next, &mut curr);
    }
    let f_hat: Vec<f64> = curr.iter().zip(&interior).map(|(v, inside)| if *inside { *v } else { 0.0 }).collect();
    if f_hat.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericBlowup { step: steps, max_abs: f64::NAN });
    }
    Ok(ReversalResult { f_hat: Field3 { grid: lattice, data: f_hat }, dt, steps, radius })
}
