use super::moments::{MomentSequence, MomentSource};
use crate::elliptic::PointMassSet;
use crate::error::{Error, Result};
use crate::geom::{random_rotation, Rotation, Vec3};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;

/// Minimum ratio between the last kept and first discarded singular value.
pub const MIN_RANK_GAP: f64 = 10.0;

/// Rotation frames tried after the identity frame.
pub const MAX_RETRIES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PronyOptions {
    /// Maximum number of point masses.
    pub n_max: usize,
    /// Singular values below `rank_tol·s₀` are discarded.
    pub rank_tol: f64,
    /// Projected centres closer than this count as a collision.
    pub separation_tol: f64,
    /// Seed for the retry frames.
    pub seed: u64,
}

impl Default for PronyOptions {
    fn default() -> Self {
        PronyOptions { n_max: 4, rank_tol: 1e-8, separation_tol: 0.05, seed: 0x5eed }
    }
}

/// Outcome of the pencil in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSolution {
    /// Masses in the original coordinates.
    pub masses: PointMassSet,
    pub singular_values: Vec<f64>,
    pub rank: usize,
    /// Ratio of the last kept to the first discarded singular value (∞ when nothing is discarded).
    pub gap: f64,
    /// Smallest distance between projected centres.
    pub min_projected_separation: f64,
    pub frame: Option<Rotation>,
}

fn hankel(seq: &MomentSequence, size: usize, shift: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(size, size, |i, j| seq.moments[i + j + shift])
}

/// Real least squares `Σ_k c_k z_k^n ≈ data_n` with rows scaled by `1/noise_n`.
fn vandermonde_real(z: &[Complex64], data: &[Complex64], scale: &[f64]) -> Result<Vec<f64>> {
    let rows = data.len();
    let a = DMatrix::from_fn(2 * rows, z.len(), |r, k| {
        let v = z[k].powu((r / 2) as u32) / scale[r / 2];
        if r % 2 == 0 { v.re } else { v.im }
    });
    let b = DVector::from_fn(2 * rows, |r, _| {
        let v = data[r / 2] / scale[r / 2];
        if r % 2 == 0 { v.re } else { v.im }
    });
    let svd = a.svd(true, true);
    let tol = 1e-14 * svd.singular_values.max();
    let c = svd.solve(&b, tol).map_err(|e| Error::IllConditioned(e.to_string()))?;
    Ok(c.iter().copied().collect())
}

/// Matrix-pencil solution in the frame carried by `seq`.
///
/// The rank threshold is the larger of `rank_tol·s₀` and the Frobenius norm
/// of the modelled noise pattern `noise·R^{i+j}` on the Hankel matrix.
pub fn prony_frame(seq: &MomentSequence, opts: &PronyOptions) -> Result<FrameSolution> {
    let size = opts.n_max + 1;
    if seq.moments.len() < 2 * opts.n_max + 2 || seq.aux.len() != seq.moments.len() {
        return Err(Error::Precondition(format!(
            "{} moments supplied; N_max = {} needs {}",
            seq.moments.len(),
            opts.n_max,
            2 * opts.n_max + 2
        )));
    }
    let h0 = hankel(seq, size, 0);
    let h1 = hankel(seq, size, 1);
    let svd = h0.svd(true, true);
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let noise_frob = (0..size)
        .flat_map(|i| (0..size).map(move |j| (i, j)))
        .map(|(i, j)| seq.noise_at(i + j).powi(2))
        .sum::<f64>()
        .sqrt();
    let s0 = s[0];
    let tau = (opts.rank_tol * s0).max(noise_frob);
    let rank = s.iter().take_while(|v| **v > tau).count();
    let gap = if rank == 0 {
        f64::INFINITY
    } else if rank < size {
        if s[rank] > 0.0 { s[rank - 1] / s[rank] } else { f64::INFINITY }
    } else {
        f64::INFINITY
    };
    if rank == size {
        return Err(Error::RankAmbiguous { gap: 1.0, singular_values: s });
    }
    if gap < MIN_RANK_GAP {
        return Err(Error::RankAmbiguous { gap, singular_values: s });
    }
    let frame = seq.frame;
    if rank == 0 {
        return Ok(FrameSolution {
            masses: PointMassSet::empty(),
            singular_values: s,
            rank,
            gap,
            min_projected_separation: f64::INFINITY,
            frame,
        });
    }
    let u = svd.u.as_ref().expect("U requested").columns(0, rank).into_owned();
    let v_t = svd.v_t.as_ref().expect("Vᵀ requested").rows(0, rank).into_owned();
    let sigma_inv = DMatrix::from_diagonal(&DVector::from_iterator(rank, s[..rank].iter().map(|v| Complex64::new(1.0 / v, 0.0))));
    let t = &sigma_inv * u.adjoint() * &h1 * v_t.adjoint();
    let z: Vec<Complex64> = if rank == 1 {
        vec![t[(0, 0)]]
    } else {
        t.schur()
            .eigenvalues()
            .ok_or_else(|| Error::IllConditioned("pencil eigenvalues did not converge".into()))?
            .iter()
            .copied()
            .collect()
    };
    // rows weighted by the inverse noise model R^{-n}
    let scale: Vec<f64> = (0..seq.moments.len()).map(|n| seq.radius.powi(n as i32)).collect();
    let lambda = vandermonde_real(&z, &seq.moments, &scale)?;
    let weighted = vandermonde_real(&z, &seq.aux, &scale)?;
    let mut min_sep = f64::INFINITY;
    for a in 0..z.len() {
        for b in a + 1..z.len() {
            min_sep = min_sep.min((z[a] - z[b]).norm());
        }
    }
    let mut pairs = Vec::with_capacity(rank);
    for k in 0..rank {
        if lambda[k] == 0.0 {
            return Err(Error::IllConditioned(format!("recovered mass {k} vanished")));
        }
        let local = Vec3::new(z[k].re, z[k].im, weighted[k] / lambda[k]);
        let x = frame.map_or(local, |q| q.inverse() * local);
        pairs.push((x, lambda[k]));
    }
    let masses = if min_sep > 1e-12 {
        PointMassSet::from_pairs(&pairs)?
    } else {
        PointMassSet { locations: pairs.iter().map(|p| p.0).collect(), masses: pairs.iter().map(|p| p.1).collect() }
    };
    Ok(FrameSolution { masses, singular_values: s, rank, gap, min_projected_separation: min_sep, frame })
}

/// Localises signed point masses from harmonic moments.
///
/// A projection collision either merges masses (lowering the rank) or brings
/// eigenvalues together, so the identity frame is always compared against a
/// random one; the accepted frame attains the largest rank seen with
/// projected separation above `separation_tol`.
pub fn prony_localize(source: &dyn MomentSource, opts: &PronyOptions) -> Result<FrameSolution> {
    let n_moments = 2 * opts.n_max + 1;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(opts.seed);
    let first = prony_frame(&source.sequence(n_moments, None)?, opts)?;
    let mut best_rank = first.rank;
    let mut candidates = vec![first];
    for _ in 0..MAX_RETRIES {
        let q = random_rotation(&mut rng);
        let sol = prony_frame(&source.sequence(n_moments, Some(&q))?, opts)?;
        best_rank = best_rank.max(sol.rank);
        candidates.push(sol);
        let good: Vec<&FrameSolution> =
            candidates.iter().filter(|c| c.rank == best_rank && c.min_projected_separation >= opts.separation_tol).collect();
        // the identity frame is preferred whenever it qualifies
        if let Some(sol) = good.first() {
            return Ok((*sol).clone());
        }
    }
    Err(Error::CollisionUnresolved { retries: MAX_RETRIES })
}
