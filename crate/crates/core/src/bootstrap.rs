//! Nonparametric bootstrap over subjects.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, EvalGrid};
use crate::error::{Error, Result};
use crate::par;
use crate::pseudo::{self, PseudoKind};
use crate::simple::{fit_simple_pseudo, FitOptions};

/// Share of failed replicates above which the bootstrap is rejected.
pub const MAX_FAILED_SHARE: f64 = 0.2;
pub const DEFAULT_REPLICATES: usize = 500;

/// `(replicate, n) -> indices` of the resampled subjects.
pub type Resampler = dyn Fn(usize, usize) -> Vec<usize> + Sync;

/// Uniform resampling with replacement; replicate `r` draws from its own stream of `seed`.
pub fn default_resampler(seed: u64) -> Box<Resampler> {
    Box::new(move |r, n| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        (0..n).map(|_| rng.random_range(0..n)).collect()
    })
}

#[derive(Debug, Clone)]
pub struct BootstrapResult {
    pub replicates: usize,
    pub failed: usize,
    pub mean: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

/// Apply `estimate` to each resample and summarise the successful replicates.
pub fn run<F>(dataset: &Dataset, replicates: usize, resampler: &Resampler, estimate: F) -> Result<BootstrapResult>
where
    F: Fn(&Dataset) -> Result<Vec<f64>> + Sync + Send,
{
    let n = dataset.n();
    let results = par::map_indexed(replicates, |r| estimate(&dataset.resample(&resampler(r, n))));
    let ok: Vec<Vec<f64>> = results.into_iter().filter_map(|r| r.ok()).collect();
    let failed = replicates - ok.len();
    if failed as f64 > MAX_FAILED_SHARE * replicates as f64 || ok.len() < 2 {
        return Err(Error::UnstableBootstrap { failed, total: replicates });
    }
    let q = ok[0].len();
    let m = ok.len() as f64;
    let mean: Vec<f64> = (0..q).map(|c| ok.iter().map(|v| v[c]).sum::<f64>() / m).collect();
    let mut covariance = DMatrix::zeros(q, q);
    for v in &ok {
        for a in 0..q {
            for b in 0..q {
                covariance[(a, b)] += (v[a] - mean[a]) * (v[b] - mean[b]);
            }
        }
    }
    covariance /= m - 1.0;
    Ok(BootstrapResult { replicates, failed, mean, covariance })
}

/// Bootstrap of the simple-model parameters `(intercepts, slopes)`.
pub fn bootstrap_simple(
    dataset: &Dataset,
    grid: &EvalGrid,
    options: &FitOptions,
    replicates: usize,
    resampler: &Resampler,
) -> Result<BootstrapResult> {
    run(dataset, replicates, resampler, |d| {
        let pm = pseudo::pseudo(d, grid, PseudoKind::Bivariate, options.jackknife)?;
        Ok(fit_simple_pseudo(d, &pm, &options.solver)?.params())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Subject;

    fn data(n: usize) -> Dataset {
        Dataset::new((0..n).map(|i| Subject::new(1.0 + i as f64, true, 2.0, true, vec![i as f64])).collect()).unwrap()
    }

    #[test]
    fn identical_resamples_give_zero_covariance() {
        let d = data(5);
        let same = |_: usize, n: usize| (0..n).collect::<Vec<_>>();
        let r = run(&d, 2, &same, |d| Ok(vec![d.subjects().iter().map(|s| s.z[0]).sum(), 1.0])).unwrap();
        assert_eq!(r.covariance, DMatrix::zeros(2, 2));
        assert_eq!(r.failed, 0);
    }

    #[test]
    fn too_many_failures_is_an_error() {
        let d = data(5);
        let rs = default_resampler(3);
        let r = run(&d, 10, &*rs, |d| {
            if d.subjects()[0].z[0] < 2.0 {
                Err(Error::Numerical("forced".into()))
            } else {
                Ok(vec![0.0])
            }
        });
        assert!(matches!(r, Err(Error::UnstableBootstrap { total: 10, .. })));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = default_resampler(11);
        let b = default_resampler(11);
        assert_eq!(a(4, 50), b(4, 50));
        assert_ne!(a(4, 50), a(5, 50));
        assert!(a(0, 50).iter().all(|&i| i < 50));
    }
}
