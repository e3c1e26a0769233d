//! Small statistics helpers: sample means, Wilson intervals, least squares.

use crate::error::{Error, Result};

/// Normal quantile for a two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Mean and standard error of the mean (sample standard deviation / √n).
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if successes == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

/// One-sided 95% upper bound for a probability when no event was observed:
/// `1 − 0.95^{1/trials}`.
pub fn zero_count_upper_bound(trials: u64) -> f64 {
    1.0 - 0.95f64.powf(1.0 / trials.max(1) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

/// Ordinary least squares `y = intercept + slope·x`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() {
        return Err(Error::invalid("x and y lengths differ"));
    }
    let n = xs.len();
    if n < 2 {
        return Err(Error::invalid("a line fit needs at least two points"));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all x values coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - sse / syy };
    let (slope_se, intercept_se) = if n > 2 {
        let s2 = sse / (nf - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / nf + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LinearFit { slope, intercept, r_squared, slope_se, intercept_se })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn mean_se_small() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert_relative_eq!(se, (1.666_666_666_666_666_7f64 / 4.0).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn wilson_known_value() {
        // 10 of 100: interval (0.0552, 0.1744)
        let (lo, hi) = wilson_interval(10, 100, Z95);
        assert!((lo - 0.055_2).abs() < 1e-3 && (hi - 0.174_4).abs() < 1e-3);
        let (lo0, hi0) = wilson_interval(0, 50, Z95);
        assert_eq!(lo0, 0.0);
        assert!(hi0 > 0.0);
    }

    #[test]
    fn exact_line() {
        let xs = [0.0, 1.0, 2.0, 5.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 0.5 * x).collect();
        let fit = linear_fit(&xs, &ys).unwrap();
        assert_relative_eq!(fit.slope, -0.5, epsilon = 1e-14);
        assert_relative_eq!(fit.intercept, 2.0, epsilon = 1e-14);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_count_bound() {
        assert_relative_eq!(zero_count_upper_bound(1), 0.05, epsilon = 1e-15);
        assert!(zero_count_upper_bound(10_000) < 1e-5);
    }
}
