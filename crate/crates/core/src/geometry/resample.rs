use rand::Rng;

use crate::cloud::OnhPointCloud;
use crate::error::{Error, Result};

/// Points kept per cloud for the network input.
pub const DEFAULT_RESAMPLE_POINTS: usize = 3000;

/// Draws `n` point indices: without replacement when the cloud has at least
/// `n` points, with replacement otherwise.
pub fn resample_indices<R: Rng + ?Sized>(len: usize, n: usize, rng: &mut R) -> Vec<usize> {
    if len >= n {
        rand::seq::index::sample(rng, len, n).into_vec()
    } else {
        (0..n).map(|_| rng.random_range(0..len)).collect()
    }
}

pub fn resample<R: Rng + ?Sized>(cloud: &OnhPointCloud, n: usize, rng: &mut R) -> Result<OnhPointCloud> {
    if n == 0 {
        return Err(Error::invalid("resample size must be >= 1"));
    }
    cloud.select(&resample_indices(cloud.len(), n, rng))
}
