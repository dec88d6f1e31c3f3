use crate::error::{Error, Result};
use crate::forward::BoundaryTrace;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Adds i.i.d. Gaussian noise of standard deviation `eps·rms(trace)` to every
/// stored sample (inner block, then outer block); deterministic per seed.
pub fn add_noise(trace: &BoundaryTrace, eps: f64, seed: u64) -> Result<BoundaryTrace> {
    if !(eps >= 0.0) || !eps.is_finite() {
        return Err(Error::Precondition(format!("noise level must be a non-negative number, got {eps}")));
    }
    if eps == 0.0 {
        return Ok(trace.clone());
    }
    let sigma = eps * trace.rms();
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Precondition(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = trace.clone();
    for v in out.u_inner.iter_mut().chain(out.u_outer.iter_mut()) {
        *v += normal.sample(&mut rng);
    }
    Ok(out)
}
