//! Seeded, chunked Monte Carlo plumbing.
//!
//! Work is cut into fixed-size chunks. Chunk `c` of a call with seed `s` draws
//! from a ChaCha8 stream seeded with `s + c`, and partial results are merged in
//! chunk order. Output therefore depends only on the seed, never on how rayon
//! schedules the chunks.

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::{Error, Result};

/// Rows per Monte Carlo chunk.
pub const CHUNK_ROWS: usize = 4096;

pub type McRng = ChaCha8Rng;

/// RNG for chunk `chunk` of a call seeded with `seed`.
pub fn chunk_rng(seed: u64, chunk: usize) -> McRng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(chunk as u64))
}

/// Mixes a base seed with a stream label so that sibling sub-computations
/// (per coordinate pair, per candidate, ...) get unrelated seeds.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 finaliser
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fills an `n × width` matrix row by row. `fill` receives the chunk RNG and
/// one row; rows inside a chunk are filled sequentially.
pub fn try_par_rows<F>(n: usize, width: usize, seed: u64, fill: F) -> Result<Array2<f64>>
where
    F: Fn(&mut McRng, &mut [f64]) -> Result<()> + Sync,
{
    let mut out = Array2::<f64>::zeros((n, width));
    if width == 0 {
        return Ok(out);
    }
    let data = out.as_slice_mut().expect("freshly allocated matrix is contiguous");
    data.par_chunks_mut(CHUNK_ROWS * width)
        .enumerate()
        .map(|(c, block)| {
            let mut rng = chunk_rng(seed, c);
            for row in block.chunks_mut(width) {
                fill(&mut rng, row)?;
            }
            Ok(())
        })
        .collect::<Vec<Result<()>>>()
        .into_iter()
        .collect::<Result<Vec<()>>>()?;
    Ok(out)
}

/// Runs `f` over `n` items split into chunks of `chunk` items and returns the
/// per-chunk results in chunk order.
pub fn par_chunks<T, F>(n: usize, chunk: usize, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut McRng, std::ops::Range<usize>) -> T + Sync,
{
    let chunk = chunk.max(1);
    let n_chunks = n.div_ceil(chunk);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let start = c * chunk;
            f(&mut rng, start..(start + chunk).min(n))
        })
        .collect()
}

/// Mean and standard error of the mean.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub(crate) fn require_samples(n: usize, min: usize) -> Result<()> {
    if n < min {
        Err(Error::EmptySample { min, got: n })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn rows_do_not_depend_on_thread_count() {
        let fill = |rng: &mut McRng, row: &mut [f64]| {
            for v in row.iter_mut() {
                *v = rng.random::<f64>();
            }
            Ok(())
        };
        let a = try_par_rows(10_000, 3, 11, fill).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| try_par_rows(10_000, 3, 11, fill).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_ne!(derive_seed(1, 0), derive_seed(2, 0));
    }

    #[test]
    fn errors_surface_from_rows() {
        let r = try_par_rows(10, 1, 0, |_, _| Err(Error::DegeneratePairs));
        assert!(matches!(r, Err(Error::DegeneratePairs)));
    }
}
