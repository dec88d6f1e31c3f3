use super::grid::Grid;
use super::shell::{SensorShell, ShellStencils};
use super::trace::BoundaryTrace;
use crate::error::{Error, Result, Warning};
use crate::lattice::Field3;
use crate::medium::{SourceSpec, SpeedField};
use crate::quad::pairwise_sum;
use rayon::prelude::*;

/// Leapfrog state: two consecutive time levels plus the squared speed lattice.
#[derive(Debug, Clone)]
pub struct WaveState {
    pub u_prev: Field3,
    pub u_curr: Field3,
    pub c2: Field3,
    pub time_index: usize,
    initial_max: f64,
}

impl WaveState {
    /// State at t = 0 with `u = f`, `u_t = 0`; the first [`step`] is the half-weight start.
    pub fn new(u0: Field3, c2: Field3) -> Self {
        assert_eq!(u0.grid, c2.grid, "lattice shapes differ");
        let initial_max = u0.max_abs();
        WaveState { u_prev: u0.clone(), u_curr: u0, c2, time_index: 0, initial_max }
    }

    pub fn from_medium(field: &SpeedField, src: &SourceSpec, grid: &Grid) -> (Self, Vec<Warning>) {
        let (c, warnings) = field.sample(&grid.lattice);
        let mut c2 = c;
        c2.data.iter_mut().for_each(|v| *v *= *v);
        (WaveState::new(src.sample(&grid.lattice), c2), warnings)
    }

    pub fn time(&self, dt: f64) -> f64 {
        self.time_index as f64 * dt
    }
}

/// Blow-up guard relative to the initial amplitude.
const BLOWUP_FACTOR: f64 = 1e6;

/// Advances one leapfrog step in place.
///
/// Interior update `u⁺ = 2u − u⁻ + dt²c²Δ_h u`; the first call uses
/// `u¹ = u⁰ + ½dt²c²Δ_h u⁰`. In the sponge, `u⁺ − u` is scaled by `exp(−σ dt)`.
pub fn step(state: &mut WaveState, grid: &Grid, damping: &[f64]) -> Result<()> {
    let lat = state.u_curr.grid;
    let n = lat.n;
    let h = lat.spacing();
    let scale = (grid.dt / h).powi(2);
    let (a, b, s) = if state.time_index == 0 { (1.0, 0.0, 0.5) } else { (2.0, 1.0, 1.0) };
    let zero = vec![0.0; n * n];
    let curr = &state.u_curr.data;
    let c2 = &state.c2.data;

    let max_abs = state
        .u_prev
        .data
        .par_chunks_mut(n * n)
        .enumerate()
        .map(|(i, out)| {
            let slab = &curr[i * n * n..(i + 1) * n * n];
            let below = if i > 0 { &curr[(i - 1) * n * n..i * n * n] } else { &zero[..] };
            let above = if i + 1 < n { &curr[(i + 1) * n * n..(i + 2) * n * n] } else { &zero[..] };
            let c2s = &c2[i * n * n..(i + 1) * n * n];
            let di = damping[i];
            let mut local_max = 0.0f64;
            for j in 0..n {
                let row = j * n;
                let left = if j > 0 { &slab[row - n..row] } else { &zero[..n] };
                let right = if j + 1 < n { &slab[row + n..row + 2 * n] } else { &zero[..n] };
                let dij = di * damping[j];
                for k in 0..n {
                    let idx = row + k;
                    let u = slab[idx];
                    let km = if k > 0 { slab[idx - 1] } else { 0.0 };
                    let kp = if k + 1 < n { slab[idx + 1] } else { 0.0 };
                    let lap = below[idx] + above[idx] + left[k] + right[k] + km + kp - 6.0 * u;
                    let mut next = a * u - b * out[idx] + s * scale * c2s[idx] * lap;
                    let d = dij * damping[k];
                    if d < 1.0 {
                        next = u + (next - u) * d;
                    }
                    out[idx] = next;
                    let m = next.abs();
                    // NaN must propagate into the reduction
                    local_max = if m > local_max || m.is_nan() { m } else { local_max };
                }
            }
            local_max
        })
        .reduce(|| 0.0, |x, y| if y > x || y.is_nan() { y } else { x });

    std::mem::swap(&mut state.u_prev, &mut state.u_curr);
    state.time_index += 1;
    if !max_abs.is_finite() || (state.initial_max > 0.0 && max_abs > BLOWUP_FACTOR * state.initial_max) {
        return Err(Error::NumericBlowup { step: state.time_index, max_abs });
    }
    Ok(())
}

/// Discrete energy `Σ [c⁻²((u−u⁻)/dt)² + ∇_h u·∇_h u⁻] h³`.
///
/// The gradient term pairs the two time levels; this equals `|∇_h ū|² − ¼|∇_h(u−u⁻)|²`
/// with `ū` the average and is the quantity the leapfrog scheme conserves exactly.
pub fn energy(state: &WaveState, dt: f64) -> f64 {
    let lat = state.u_curr.grid;
    let n = lat.n;
    let h = lat.spacing();
    let cu = &state.u_curr.data;
    let pu = &state.u_prev.data;
    let c2 = &state.c2.data;
    let slabs: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut terms = Vec::with_capacity(n * n);
            for j in 0..n {
                for k in 0..n {
                    let idx = lat.index(i, j, k);
                    let v = (cu[idx] - pu[idx]) / dt;
                    // forward differences; the wall is a zero ghost layer, and the
                    // low faces are covered by the forward difference from the ghost
                    let face = |next: Option<usize>| {
                        let (a, b) = next.map_or((0.0, 0.0), |m| (cu[m], pu[m]));
                        (a - cu[idx]) * (b - pu[idx])
                    };
                    let mut grad = face((i + 1 < n).then(|| idx + n * n))
                        + face((j + 1 < n).then(|| idx + n))
                        + face((k + 1 < n).then(|| idx + 1));
                    let low = [i, j, k].iter().filter(|&&c| c == 0).count() as f64;
                    grad += low * cu[idx] * pu[idx];
                    terms.push(v * v / c2[idx] + grad / (h * h));
                }
            }
            pairwise_sum(&terms)
        })
        .collect();
    pairwise_sum(&slabs) * h * h * h
}

/// Per-run diagnostics returned alongside a trace.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct SimulationReport {
    pub n: usize,
    pub h: f64,
    pub dt: f64,
    pub steps: usize,
    pub sponge_width: usize,
    pub sponge_strength: f64,
    /// Sponge amplitude reflection measured on a 1D pulse at the source length scale.
    pub sponge_reflection: f64,
    pub warnings: Vec<Warning>,
}

/// Checks that the grid resolves the medium and hosts the shell in its damping-free part.
pub fn check_layout(field: &SpeedField, grid: &Grid, shell: &SensorShell) -> Result<()> {
    if grid.interior_half_width() < field.r0 {
        return Err(Error::GeometryViolation(format!(
            "sponge-free half-width {:.4} is smaller than R0 = {}",
            grid.interior_half_width(),
            field.r0
        )));
    }
    if shell.r_inner <= field.omega_radius || shell.r_outer() >= field.r0 {
        return Err(Error::GeometryViolation(format!(
            "sensor shell [{}, {}] must lie strictly between omega radius {} and R0 = {}",
            shell.r_inner,
            shell.r_outer(),
            field.omega_radius,
            field.r0
        )));
    }
    let dt_max = super::cfl_timestep(grid.h(), field.max_speed(), 1.0)?;
    if grid.dt > dt_max * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("dt = {} violates the CFL bound {dt_max}", grid.dt)));
    }
    Ok(())
}

/// Runs the scheme for `grid.steps` steps and records the shell at every level.
pub fn simulate(
    field: &SpeedField,
    src: &SourceSpec,
    grid: &Grid,
    shell: &SensorShell,
) -> Result<(BoundaryTrace, SimulationReport)> {
    field.validate_geometry()?;
    check_layout(field, grid, shell)?;
    let stencils = ShellStencils::new(shell, &grid.lattice)?;
    let (mut state, warnings) = WaveState::from_medium(field, src, grid);
    let damping = grid.damping_profile();
    let sensors = shell.len();
    let times = grid.steps + 1;
    let mut inner = Vec::with_capacity(times * sensors);
    let mut outer = Vec::with_capacity(times * sensors);
    stencils.sample(&state.u_curr.data, &mut inner, &mut outer);
    for _ in 0..grid.steps {
        step(&mut state, grid, &damping)?;
        stencils.sample(&state.u_curr.data, &mut inner, &mut outer);
    }
    let width = src.bumps.iter().map(|b| b.rho).fold(f64::INFINITY, f64::min).max(grid.h()) / 3.0;
    let report = SimulationReport {
        n: grid.n(),
        h: grid.h(),
        dt: grid.dt,
        steps: grid.steps,
        sponge_width: grid.sponge_width,
        sponge_strength: grid.sponge_strength,
        sponge_reflection: super::grid::sponge_reflection(grid, field.b0, width),
        warnings,
    };
    let trace = BoundaryTrace::new(grid.dt, shell.inner_points(), shell.outer_points(), inner, outer)?;
    Ok((trace, report))
}
