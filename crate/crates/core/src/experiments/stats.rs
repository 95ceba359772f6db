//! Sample statistics used by the Monte Carlo estimators.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

pub const MIN_GAUSSIANITY_SAMPLES: usize = 50;

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance; NaN for fewer than two samples.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

/// Least-squares slope of `y = d·x` through the origin.
pub fn slope_through_origin(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

/// Ordinary least-squares `(intercept, slope)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let mx = mean(x);
    let my = mean(y);
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    (my - slope * mx, slope)
}

/// Pearson correlation of paired samples.
pub fn correlation(a: &[f64], b: &[f64]) -> f64 {
    let ma = mean(a);
    let mb = mean(b);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Empirical quantile with linear interpolation between order statistics.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

/// Distributional summary of standardized increments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianityReport {
    /// Kolmogorov–Smirnov distance to the standard normal CDF.
    pub ks_statistic: f64,
    pub excess_kurtosis: f64,
    pub mean: f64,
    /// Standard error of the mean, `s/√n`.
    pub mean_stderr: f64,
    pub n: usize,
}

/// KS distance, excess kurtosis and mean of samples that are expected to be
/// standard normal already (no re-standardization is applied).
pub fn gaussianity_report(increments: &[f64]) -> Result<GaussianityReport> {
    let n = increments.len();
    if n < MIN_GAUSSIANITY_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{n} samples, need {MIN_GAUSSIANITY_SAMPLES}"
        )));
    }
    if let Some(x) = increments.iter().find(|x| !x.is_finite()) {
        return Err(Error::Degenerate(format!("non-finite sample {x}")));
    }
    let m = mean(increments);
    let (mut m2, mut m4) = (0.0, 0.0);
    for x in increments {
        let d = (x - m) * (x - m);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n as f64;
    m4 /= n as f64;
    // rounding leaves a spread of order 1e-16·|mean| in constant input
    if m2.sqrt() <= 1e-12 * m.abs() || m2 == 0.0 {
        return Err(Error::Degenerate("all samples are equal".into()));
    }
    let normal = Normal::standard();
    let mut sorted = increments.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let nf = n as f64;
    let ks = sorted.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = normal.cdf(x);
        d.max((i + 1) as f64 / nf - f).max(f - i as f64 / nf)
    });
    Ok(GaussianityReport {
        ks_statistic: ks,
        excess_kurtosis: m4 / (m2 * m2) - 3.0,
        mean: m,
        mean_stderr: (m2 * nf / (nf - 1.0)).sqrt() / nf.sqrt(),
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn synthetic_normals_pass() {
        let r = gaussianity_report(&normals(10_000, 1)).unwrap();
        assert!(r.ks_statistic < 0.02, "{}", r.ks_statistic);
        assert!(r.excess_kurtosis.abs() < 0.1, "{}", r.excess_kurtosis);
        assert!(r.mean.abs() < 3.0 * r.mean_stderr);
    }

    #[test]
    fn null_quantiles_at_two_hundred_samples() {
        // at n = 200 the KS threshold sits above the null 95% point; the kurtosis
        // threshold only above its 80% point
        let mut ks = Vec::new();
        let mut kurt = Vec::new();
        for seed in 0..400 {
            let r = gaussianity_report(&normals(200, 1000 + seed)).unwrap();
            ks.push(r.ks_statistic);
            kurt.push(r.excess_kurtosis.abs());
        }
        assert!(quantile(&ks, 0.95) < 0.1, "{}", quantile(&ks, 0.95));
        assert!(quantile(&kurt, 0.8) < 0.5, "{}", quantile(&kurt, 0.8));
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(
            gaussianity_report(&[1.0; 10]),
            Err(Error::InsufficientData(_))
        ));
        assert!(matches!(
            gaussianity_report(&[0.3; 100]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn shifted_sample_is_detected() {
        let xs: Vec<f64> = normals(2000, 5).iter().map(|x| x + 0.5).collect();
        let r = gaussianity_report(&xs).unwrap();
        assert!(r.ks_statistic > 0.15);
    }

    #[test]
    fn fits() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [2.0, 4.0, 6.0, 8.0];
        assert!((slope_through_origin(&x, &y) - 2.0).abs() < 1e-15);
        let (a, b) = linear_fit(&x, &[3.0, 5.0, 7.0, 9.0]);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12);
        assert!((correlation(&x, &y) - 1.0).abs() < 1e-12);
        assert_eq!(quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert!((sample_variance(&x) - 5.0 / 3.0).abs() < 1e-15);
    }
}
