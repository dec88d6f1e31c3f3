use crate::error::{Error, Result};
use crate::lattice::CellGrid;

/// Time-stepping lattice: an `n³` cell grid whose outer `sponge_width` cells
/// form an absorbing layer in front of a zero Dirichlet wall.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Grid {
    pub lattice: CellGrid,
    pub dt: f64,
    pub steps: usize,
    pub sponge_width: usize,
    /// Peak damping rate σ_max (1/time) at the outer wall.
    pub sponge_strength: f64,
}

/// `dt = safety·h/(√3·c_max)`.
pub fn cfl_timestep(h: f64, c_max: f64, safety: f64) -> Result<f64> {
    if !(c_max > 0.0) {
        return Err(Error::Precondition(format!("c_max = {c_max} must be positive")));
    }
    if !(safety > 0.0 && safety <= 1.0) {
        return Err(Error::Precondition(format!("CFL safety {safety} must lie in (0, 1]")));
    }
    Ok(safety * h / (3f64.sqrt() * c_max))
}

/// Minimum layer width accepted by [`Grid::new`].
pub const MIN_SPONGE_WIDTH: usize = 16;

impl Grid {
    /// Builds a grid whose sponge-free interior is `[-interior, interior]³` and
    /// whose step count reaches `duration` exactly (dt rounded down from CFL).
    pub fn new(
        n: usize,
        interior_half_width: f64,
        sponge_width: usize,
        c_max: f64,
        safety: f64,
        duration: f64,
    ) -> Result<Grid> {
        if sponge_width < MIN_SPONGE_WIDTH {
            return Err(Error::Precondition(format!(
                "sponge width {sponge_width} below the minimum of {MIN_SPONGE_WIDTH} cells"
            )));
        }
        if n <= 2 * sponge_width + 4 {
            return Err(Error::Precondition(format!("n = {n} leaves no interior for a {sponge_width}-cell sponge")));
        }
        let h = 2.0 * interior_half_width / (n - 2 * sponge_width) as f64;
        let lattice = CellGrid::new(n, 0.5 * n as f64 * h);
        let dt_max = cfl_timestep(h, c_max, safety)?;
        let steps = ((duration / dt_max).ceil() as usize).max(1);
        let dt = duration / steps as f64;
        Ok(Grid {
            lattice,
            dt,
            steps,
            sponge_width,
            sponge_strength: default_sponge_strength(c_max, sponge_width as f64 * h),
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.lattice.n
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.lattice.spacing()
    }

    pub fn duration(&self) -> f64 {
        self.dt * self.steps as f64
    }

    /// Half-width of the damping-free cube.
    pub fn interior_half_width(&self) -> f64 {
        self.lattice.half_width - self.sponge_width as f64 * self.h()
    }

    /// Per-axis damping factors `exp(-σ₁(i)·dt)` with a quadratic profile.
    ///
    /// The 3D damping rate is the sum of the three axis profiles.
    pub fn damping_profile(&self) -> Vec<f64> {
        let n = self.n();
        let w = self.sponge_width;
        (0..n)
            .map(|i| {
                let depth = if i < w {
                    (w - i) as f64 - 0.5
                } else if i >= n - w {
                    (i - (n - w)) as f64 + 0.5
                } else {
                    return 1.0;
                };
                let x = depth / w as f64;
                (-self.sponge_strength * x * x * self.dt).exp()
            })
            .collect()
    }
}

/// Peak rate giving a high-frequency round-trip amplitude attenuation of about e⁻¹².
pub fn default_sponge_strength(c: f64, layer_thickness: f64) -> f64 {
    // one-way: exp(-∫σ/(2c)) = exp(-σ_max W/(6c))
    36.0 * c / layer_thickness
}

/// Amplitude reflection of the sponge for a 1D Ricker-like pulse of the given width,
/// measured with the same spacing, time step and profile as `grid`.
pub fn sponge_reflection(grid: &Grid, c: f64, pulse_width: f64) -> f64 {
    let h = grid.h();
    let dt = grid.dt;
    let w = grid.sponge_width;
    let pad = ((12.0 * pulse_width / h).ceil() as usize).max(64);
    let len = 3 * pad + w;
    let x0 = pad as f64 * h;
    let probe = 2 * pad;
    let profile: Vec<f64> = (0..len)
        .map(|i| {
            if i >= len - w {
                let x = ((i - (len - w)) as f64 + 0.5) / w as f64;
                (-grid.sponge_strength * x * x * dt).exp()
            } else {
                1.0
            }
        })
        .collect();
    let pulse = |x: f64| {
        let s = (x - x0) / pulse_width;
        (1.0 - 2.0 * s * s) * (-s * s).exp()
    };
    // Right-moving initial data: u(x, -dt) = g(x + c dt).
    let mut prev: Vec<f64> = (0..len).map(|i| pulse(i as f64 * h + c * dt)).collect();
    let mut curr: Vec<f64> = (0..len).map(|i| pulse(i as f64 * h)).collect();
    let r2 = (c * dt / h).powi(2);
    let travel_in = (probe as f64 * h - x0) / c;
    let mut incident = 0.0f64;
    let mut reflected = 0.0f64;
    let total_steps = ((2.0 * (len as f64 * h) + 4.0 * pulse_width) / (c * dt)) as usize;
    for step in 1..=total_steps {
        let mut next = vec![0.0; len];
        for i in 0..len {
            let l = if i > 0 { curr[i - 1] } else { 0.0 };
            let r = if i + 1 < len { curr[i + 1] } else { 0.0 };
            let mut v = 2.0 * curr[i] - prev[i] + r2 * (l - 2.0 * curr[i] + r);
            if profile[i] < 1.0 {
                v = curr[i] + (v - curr[i]) * profile[i];
            }
            next[i] = v;
        }
        prev = curr;
        curr = next;
        let t = step as f64 * dt;
        let a = curr[probe].abs();
        if t < travel_in + 6.0 * pulse_width / c {
            incident = incident.max(a);
        } else {
            reflected = reflected.max(a);
        }
    }
    reflected / incident
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cfl_formula() {
        let dt = cfl_timestep(0.02, 1.0, 0.9).unwrap();
        assert!((dt - 0.010392304845413264).abs() < 1e-15);
        let a = cfl_timestep(0.02, 1.0, 1.0).unwrap();
        let b = cfl_timestep(0.02, 2.0, 1.0).unwrap();
        assert!((a - 2.0 * b).abs() < 1e-18);
        assert!(cfl_timestep(0.02, 0.0, 0.9).is_err());
    }

    #[test]
    fn grid_geometry() {
        let g = Grid::new(96, 1.0, 16, 1.0, 0.9, 1.0).unwrap();
        assert!((g.interior_half_width() - 1.0).abs() < 1e-12);
        assert!((g.duration() - 1.0).abs() < 1e-12);
        assert!(g.dt <= cfl_timestep(g.h(), 1.0, 0.9).unwrap());
        let p = g.damping_profile();
        assert_eq!(p[48], 1.0);
        assert!(p[0] < p[10] && p[10] < 1.0 && p[95] == p[0]);
        assert!(Grid::new(96, 1.0, 8, 1.0, 0.9, 1.0).is_err());
    }

    #[test]
    fn sponge_reflection_grows_with_wavelength() {
        // A damping layer is overdamped for wavelengths beyond its thickness.
        let g = Grid::new(128, 1.0, 16, 1.0, 0.9, 1.0).unwrap();
        let short = sponge_reflection(&g, 1.0, 0.1);
        let long = sponge_reflection(&g, 1.0, 0.4);
        assert!(short < 0.1, "reflection {short}");
        assert!(long > 2.0 * short, "{long} vs {short}");
    }
}
