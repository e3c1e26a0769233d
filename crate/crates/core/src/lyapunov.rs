//! Lyapunov exponents, deviation probabilities and rate fits.

use rayon::prelude::*;

use crate::cocycle::{g_n, log_norm_product};
use crate::error::{Error, Result};
use crate::measure::ShiftMeasure;
use crate::rng::{replica_seed, rng_from_seed, ChaCha8Rng};
use crate::sampling::{potential, SiteFunction, TorusSystem};
use crate::stats::{linear_fit, mean_and_se, wilson_interval, zero_count_upper_bound, Z95};
use crate::symbolic::SymbolWindow;

/// Grid points whose estimate falls below this are flagged even when the
/// standard error vanishes (deterministic potentials).
pub const FLAG_FLOOR: f64 = 5e-3;

/// A source of potentials `V_ω(0..len)` for typical ω.
pub trait PotentialModel: Send + Sync {
    fn sample_potential(&self, len: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>>;
    fn sup_norm(&self) -> f64;
}

/// `V_ω(n) = f(Tⁿω)` with ω drawn from a shift-invariant Markov measure.
pub struct ShiftModel<F: SiteFunction> {
    pub measure: ShiftMeasure,
    pub f: F,
}

impl<F: SiteFunction> ShiftModel<F> {
    pub fn new(measure: ShiftMeasure, f: F) -> Self {
        ShiftModel { measure, f }
    }

    /// A window on `[−r, len − 1 + r]` carrying everything `len` sites need.
    pub fn sample_window(&self, len: usize, rng: &mut ChaCha8Rng) -> Result<SymbolWindow> {
        let r = self.f.radius() as i64;
        self.measure.sample_window_with(-r, len as i64 - 1 + r, rng)
    }
}

impl<F: SiteFunction> PotentialModel for ShiftModel<F> {
    fn sample_potential(&self, len: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let w = self.sample_window(len.max(1), rng)?;
        potential(&self.f, &w, 0, len)
    }

    fn sup_norm(&self) -> f64 {
        self.f.sup_norm()
    }
}

impl PotentialModel for TorusSystem {
    fn sample_potential(&self, len: usize, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        Ok(TorusSystem::sample_potential(self, len, rng))
    }

    fn sup_norm(&self) -> f64 {
        TorusSystem::sup_norm(self)
    }
}

/// `g_n(ω_i, E_j)` for replicas `i` (outer) and energies `j` (inner). Each
/// replica uses its own derived seed and the same ω is shared by all energies.
pub fn sample_g_n<M: PotentialModel + ?Sized>(
    model: &M,
    energies: &[f64],
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<Vec<Vec<f64>>> {
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_from_seed(replica_seed(seed, i as u64));
            let v = model.sample_potential(n, &mut rng)?;
            Ok(energies.iter().map(|&e| log_norm_product(&v, e) / n as f64).collect())
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovEstimate {
    pub estimate: f64,
    pub std_error: f64,
}

/// Mean of `g_n` over independent replicas, with its standard error.
pub fn estimate_lyapunov<M: PotentialModel + ?Sized>(
    model: &M,
    energy: f64,
    n: usize,
    replicas: usize,
    seed: u64,
) -> Result<LyapunovEstimate> {
    if replicas < 2 {
        return Err(Error::invalid("replicas must be at least 2"));
    }
    let g: Vec<f64> = sample_g_n(model, &[energy], n, replicas, seed)?.into_iter().map(|r| r[0]).collect();
    let (estimate, std_error) = mean_and_se(&g);
    Ok(LyapunovEstimate { estimate, std_error })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCurve {
    pub energies: Vec<f64>,
    pub estimates: Vec<f64>,
    pub std_errors: Vec<f64>,
    /// Candidates for zero or exceptional exponents: `estimate < max(3·se, floor)`.
    pub flagged: Vec<bool>,
    pub n: usize,
    pub replicas: usize,
    pub seed: u64,
}

impl LyapunovCurve {
    pub fn flagged_energies(&self) -> Vec<f64> {
        self.energies.iter().zip(&self.flagged).filter(|(_, &f)| f).map(|(&e, _)| e).collect()
    }

    /// Linear interpolation of the estimate; clamps outside the grid.
    pub fn interpolate(&self, e: f64) -> f64 {
        let es = &self.energies;
        if e <= es[0] {
            return self.estimates[0];
        }
        if e >= es[es.len() - 1] {
            return self.estimates[es.len() - 1];
        }
        let k = es.partition_point(|&x| x <= e);
        let (e0, e1) = (es[k - 1], es[k]);
        let t = (e - e0) / (e1 - e0);
        self.estimates[k - 1] * (1.0 - t) + self.estimates[k] * t
    }
}

pub fn lyapunov_curve<M: PotentialModel + ?Sized>(
    model: &M,
    energies: &[f64],
    n: usize,
    replicas: usize,
    seed: u64,
    flag_floor: f64,
) -> Result<LyapunovCurve> {
    if replicas < 2 {
        return Err(Error::invalid("replicas must be at least 2"));
    }
    if energies.is_empty() {
        return Err(Error::invalid("energy grid is empty"));
    }
    let samples = sample_g_n(model, energies, n, replicas, seed)?;
    let mut estimates = Vec::with_capacity(energies.len());
    let mut std_errors = Vec::with_capacity(energies.len());
    let mut flagged = Vec::with_capacity(energies.len());
    for j in 0..energies.len() {
        let column: Vec<f64> = samples.iter().map(|r| r[j]).collect();
        let (m, se) = mean_and_se(&column);
        flagged.push(m < (3.0 * se).max(flag_floor));
        estimates.push(m);
        std_errors.push(se);
    }
    Ok(LyapunovCurve { energies: energies.to_vec(), estimates, std_errors, flagged, n, replicas, seed })
}

/// Drop grid points within `eta` of any exceptional energy.
pub fn exclude_near(energies: &[f64], exceptional: &[f64], eta: f64) -> Vec<f64> {
    energies.iter().copied().filter(|e| exceptional.iter().all(|x| (e - x).abs() > eta)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationEstimate {
    pub n: usize,
    pub epsilon: f64,
    pub successes: u64,
    pub trials: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Fraction of `g_n` samples with `|g_n − L_ref| > ε`, with a Wilson 95% interval.
pub fn deviation_from_samples(samples: &[f64], n: usize, l_ref: f64, epsilon: f64) -> DeviationEstimate {
    let successes = samples.iter().filter(|&&g| (g - l_ref).abs() > epsilon).count() as u64;
    let trials = samples.len() as u64;
    let (ci_lo, ci_hi) = wilson_interval(successes, trials, Z95);
    let p_hat = if trials == 0 { f64::NAN } else { successes as f64 / trials as f64 };
    DeviationEstimate { n, epsilon, successes, trials, p_hat, ci_lo, ci_hi }
}

pub fn deviation_probability<M: PotentialModel + ?Sized>(
    model: &M,
    energy: f64,
    n: usize,
    epsilon: f64,
    l_ref: f64,
    replicas: usize,
    seed: u64,
) -> Result<DeviationEstimate> {
    if replicas == 0 {
        return Err(Error::invalid("replicas must be positive"));
    }
    let g: Vec<f64> = sample_g_n(model, &[energy], n, replicas, seed)?.into_iter().map(|r| r[0]).collect();
    Ok(deviation_from_samples(&g, n, l_ref, epsilon))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub c: f64,
    pub log_c: f64,
    pub r_squared: f64,
    pub c_se: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    pub energy: f64,
    pub epsilon: f64,
    pub n_values: Vec<usize>,
    pub p_hats: Vec<f64>,
    pub ci_half_widths: Vec<f64>,
    /// `None` when every probability was zero: the rate is below resolution.
    pub fit: Option<RateFit>,
}

/// Least-squares fit of `log p̂ = log C − c·n`. Zero counts enter as the
/// one-sided bound `1 − 0.95^{1/trials}`.
pub fn ldt_rate_fit(energy: f64, epsilon: f64, points: &[DeviationEstimate]) -> Result<DeviationReport> {
    if points.len() < 2 {
        return Err(Error::invalid("a rate fit needs at least two values of n"));
    }
    if points.windows(2).any(|w| w[1].n <= w[0].n) {
        return Err(Error::invalid("n values must be strictly increasing"));
    }
    let n_values: Vec<usize> = points.iter().map(|p| p.n).collect();
    let p_hats: Vec<f64> = points.iter().map(|p| p.p_hat).collect();
    let ci_half_widths = points.iter().map(|p| 0.5 * (p.ci_hi - p.ci_lo)).collect();
    let fit = if p_hats.iter().all(|&p| p == 0.0) {
        None
    } else {
        let xs: Vec<f64> = n_values.iter().map(|&n| n as f64).collect();
        let ys: Vec<f64> = points
            .iter()
            .map(|p| if p.p_hat > 0.0 { p.p_hat.ln() } else { zero_count_upper_bound(p.trials).ln() })
            .collect();
        let lf = linear_fit(&xs, &ys)?;
        Some(RateFit { c: -lf.slope, log_c: lf.intercept, r_squared: lf.r_squared, c_se: lf.slope_se })
    };
    Ok(DeviationReport { energy, epsilon, n_values, p_hats, ci_half_widths, fit })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HolderFit {
    pub c: f64,
    pub beta: f64,
}

/// Fit `|L(E) − L(E')| ≤ C|E − E'|^β` on a uniform grid restricted to `window`.
///
/// For each offset `d` the modulus of continuity `w(δ_d) = max_i |L_{i+d} − L_i|`
/// is computed; `β` is the slope of `log w` against `log δ` over offsets with
/// `δ ≤ scale_fraction · width`, and `C` is the smallest constant making the
/// bound hold on every pair in the window. Small fractions probe the local
/// regularity, `1.0` the behavior across the whole window.
pub fn holder_fit(energies: &[f64], values: &[f64], window: (f64, f64), scale_fraction: f64) -> Result<HolderFit> {
    if energies.len() != values.len() {
        return Err(Error::invalid("energies and values differ in length"));
    }
    if !(scale_fraction > 0.0 && scale_fraction <= 1.0) {
        return Err(Error::invalid("scale_fraction must lie in (0, 1]"));
    }
    let (e, l): (Vec<f64>, Vec<f64>) = energies
        .iter()
        .zip(values)
        .filter(|(&x, _)| x >= window.0 && x <= window.1)
        .map(|(&x, &y)| (x, y))
        .unzip();
    let m = e.len();
    if m < 6 {
        return Err(Error::invalid(format!("window holds {m} grid points, need at least 6")));
    }
    if l.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite values in window"));
    }
    let h = (e[m - 1] - e[0]) / (m - 1) as f64;
    if e.windows(2).any(|w| ((w[1] - w[0]) - h).abs() > 1e-6 * h.abs().max(1e-300)) || h <= 0.0 {
        return Err(Error::invalid("holder_fit needs an increasing uniform grid"));
    }
    let width = e[m - 1] - e[0];
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for d in 1..m {
        let delta = d as f64 * h;
        if d > 2 && delta > scale_fraction * width * (1.0 + 1e-12) {
            break;
        }
        let w = (0..m - d).map(|i| (l[i + d] - l[i]).abs()).fold(0.0, f64::max);
        if w > 0.0 {
            xs.push(delta.ln());
            ys.push(w.ln());
        }
    }
    if xs.len() < 2 {
        return Err(Error::Degenerate("curve is constant on the window".into()));
    }
    let beta = linear_fit(&xs, &ys)?.slope;
    let mut c: f64 = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            c = c.max((l[j] - l[i]).abs() / (e[j] - e[i]).powf(beta));
        }
    }
    Ok(HolderFit { c, beta })
}

/// `|L_ref − (1/r) Σ_{s<r} g_n(T^{ns+s0}ω, E)|`.
pub fn block_average_check<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    energy: f64,
    n: usize,
    r: usize,
    s0: i64,
    l_ref: f64,
) -> Result<f64> {
    if r == 0 {
        return Err(Error::invalid("r must be at least 1"));
    }
    let mut sum = 0.0;
    for s in 0..r {
        sum += g_n(f, &omega.shift((n * s) as i64 + s0), energy, n)?;
    }
    Ok((l_ref - sum / r as f64).abs())
}

/// `exp(−c ε² n / (2a²))`.
pub fn azuma_bound(epsilon: f64, n: usize, a: f64, c: f64) -> Result<f64> {
    if !(a > 0.0) || n == 0 || !(c > 0.0) || !(epsilon >= 0.0) {
        return Err(Error::invalid("azuma_bound needs a > 0, n ≥ 1, c > 0, ε ≥ 0"));
    }
    Ok((-c * epsilon * epsilon * n as f64 / (2.0 * a * a)).exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::LocallyConstantFn;
    use crate::symbolic::SftSpec;
    use approx::assert_relative_eq;

    fn free_model() -> ShiftModel<LocallyConstantFn> {
        let m = ShiftMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let f = LocallyConstantFn::constant(m.spec(), 0.0).unwrap();
        ShiftModel::new(m, f)
    }

    fn exact_free(e: f64) -> f64 {
        (e.abs() / 2.0).acosh()
    }

    #[test]
    fn free_closed_form() {
        let model = free_model();
        let est = estimate_lyapunov(&model, 3.0, 10_000, 4, 1).unwrap();
        assert!((est.estimate - exact_free(3.0)).abs() < 5e-3);
        let ell = estimate_lyapunov(&model, 1.0, 10_000, 4, 1).unwrap();
        assert!(ell.estimate <= 5e-3);
    }

    #[test]
    fn constant_shift_of_energy() {
        let m = ShiftMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let f = LocallyConstantFn::constant(m.spec(), 0.7).unwrap();
        let model = ShiftModel::new(m, f);
        let est = estimate_lyapunov(&model, 3.7, 5000, 2, 9).unwrap();
        assert!((est.estimate - exact_free(3.0)).abs() < 5e-3);
    }

    #[test]
    fn reproducible() {
        let m = ShiftMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let f = LocallyConstantFn::per_symbol(m.spec(), &[-1.0, 1.0]).unwrap();
        let model = ShiftModel::new(m, f);
        let a = estimate_lyapunov(&model, 0.5, 500, 16, 77).unwrap();
        let b = estimate_lyapunov(&model, 0.5, 500, 16, 77).unwrap();
        assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
        assert_eq!(a.std_error.to_bits(), b.std_error.to_bits());
    }

    #[test]
    fn free_curve_flags_band() {
        let model = free_model();
        let grid: Vec<f64> = (0..=16).map(|k| -4.0 + 0.5 * k as f64).collect();
        let curve = lyapunov_curve(&model, &grid, 10_000, 2, 3, FLAG_FLOOR).unwrap();
        for (e, flag) in curve.energies.iter().zip(&curve.flagged) {
            if e.abs() == 2.0 {
                continue;
            }
            assert_eq!(*flag, e.abs() < 2.0, "E = {e}");
        }
    }

    #[test]
    fn deviation_edge_cases() {
        let model = free_model();
        let d = deviation_probability(&model, 3.0, 20_000, 1e-3, exact_free(3.0), 10, 1).unwrap();
        assert_eq!(d.p_hat, 0.0);
        let m = ShiftMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let f = LocallyConstantFn::per_symbol(m.spec(), &[-1.0, 1.0]).unwrap();
        let noisy = ShiftModel::new(m, f);
        let d0 = deviation_probability(&noisy, 0.5, 100, 0.0, 0.3, 200, 5).unwrap();
        assert_eq!(d0.p_hat, 1.0);
    }

    #[test]
    fn synthetic_exponential_rate() {
        let points: Vec<DeviationEstimate> = [50usize, 100, 200, 400]
            .iter()
            .map(|&n| {
                let p = (-0.03 * n as f64).exp();
                DeviationEstimate { n, epsilon: 0.1, successes: 1, trials: 1, p_hat: p, ci_lo: p, ci_hi: p }
            })
            .collect();
        let fit = ldt_rate_fit(0.5, 0.1, &points).unwrap().fit.unwrap();
        assert_relative_eq!(fit.c, 0.03, epsilon = 1e-9);
        assert!(fit.log_c.abs() < 1e-9);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn flat_rate() {
        let points: Vec<DeviationEstimate> = [50usize, 100, 200, 400]
            .iter()
            .map(|&n| DeviationEstimate { n, epsilon: 0.1, successes: 5, trials: 10, p_hat: 0.5, ci_lo: 0.2, ci_hi: 0.8 })
            .collect();
        let fit = ldt_rate_fit(0.5, 0.1, &points).unwrap().fit.unwrap();
        assert!(fit.c.abs() <= 2.0 * fit.c_se.max(1e-15));
    }

    #[test]
    fn all_zero_is_below_resolution() {
        let points: Vec<DeviationEstimate> = [10usize, 20]
            .iter()
            .map(|&n| DeviationEstimate { n, epsilon: 0.1, successes: 0, trials: 100, p_hat: 0.0, ci_lo: 0.0, ci_hi: 0.03 })
            .collect();
        assert!(ldt_rate_fit(0.0, 0.1, &points).unwrap().fit.is_none());
        let bad = [points[1], points[0]];
        assert!(ldt_rate_fit(0.0, 0.1, &bad).is_err());
    }

    #[test]
    fn holder_linear_curve() {
        let e: Vec<f64> = (0..40).map(|k| 0.1 + 0.05 * k as f64).collect();
        let l: Vec<f64> = e.iter().map(|x: &f64| x.abs()).collect();
        let fit = holder_fit(&e, &l, (0.0, 10.0), 1.0).unwrap();
        assert_relative_eq!(fit.beta, 1.0, epsilon = 1e-6);
        assert_relative_eq!(fit.c, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn holder_free_curve() {
        let smooth: Vec<f64> = (0..100).map(|k| 2.1 + 0.9 * k as f64 / 99.0).collect();
        let ls: Vec<f64> = smooth.iter().map(|&e| exact_free(e)).collect();
        let fit = holder_fit(&smooth, &ls, (2.1, 3.0), 0.1).unwrap();
        assert!((fit.beta - 1.0).abs() < 0.1, "beta {}", fit.beta);

        let edge: Vec<f64> = (0..100).map(|k| 2.0005 + 0.0495 * k as f64 / 99.0).collect();
        let le: Vec<f64> = edge.iter().map(|&e| exact_free(e)).collect();
        let fit = holder_fit(&edge, &le, (2.0, 2.06), 1.0).unwrap();
        assert!((fit.beta - 0.5).abs() < 0.15, "beta {}", fit.beta);
    }

    #[test]
    fn holder_rejects_constant() {
        let e: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert!(matches!(holder_fit(&e, &vec![1.0; 10], (0.0, 9.0), 1.0), Err(Error::Degenerate(_))));
        assert!(holder_fit(&e[..5], &[1.0, 2.0, 3.0, 4.0, 5.0], (0.0, 9.0), 1.0).is_err());
    }

    #[test]
    fn block_average_single_block() {
        let spec = SftSpec::full(2).unwrap();
        let f = LocallyConstantFn::per_symbol(&spec, &[-1.0, 1.0]).unwrap();
        let m = ShiftMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        let w = m.sample_window(0, 200, 4).unwrap();
        let d = block_average_check(&f, &w, 0.5, 50, 1, 0, 0.3).unwrap();
        assert_relative_eq!(d, (0.3 - g_n(&f, &w, 0.5, 50).unwrap()).abs(), epsilon = 1e-15);
        assert!(block_average_check(&f, &w, 0.5, 50, 10, 0, 0.3).is_err());
    }

    #[test]
    fn azuma_values() {
        assert_relative_eq!(azuma_bound(0.1, 1000, 1.0, 1.0).unwrap(), (-5f64).exp(), epsilon = 1e-15);
        assert_eq!(azuma_bound(0.0, 10, 1.0, 1.0).unwrap(), 1.0);
        let b = azuma_bound(0.2, 300, 1.5, 1.0).unwrap();
        let b2 = azuma_bound(0.2, 600, 1.5, 1.0).unwrap();
        assert_relative_eq!(b2, b * b, max_relative = 1e-14);
        assert!(azuma_bound(0.1, 0, 1.0, 1.0).is_err());
    }

    #[test]
    fn exclusion() {
        assert_eq!(exclude_near(&[0.0, 0.5, 1.0], &[0.45], 0.1), vec![0.0, 1.0]);
    }
}
