//! Localization diagnostics: eigenfunction decay, double resonances,
//! finite-volume Green decay and a dynamical localization probe.

use rayon::prelude::*;

use crate::cocycle::g_n;
use crate::error::{Error, Result};
use crate::green::{eigensystem, eigenvalues, green_logs, transfer_norm_logs, SpectralData, TridiagonalOperator};
use crate::lyapunov::{PotentialModel, ShiftModel};
use crate::rng::{replica_seed, rng_from_seed};
use crate::sampling::{potential, SiteFunction};
use crate::stats::{linear_fit, median, wilson_interval, Z95};
use crate::symbolic::SymbolWindow;

/// Sites with `|ψ(n)|` at or below this are left out of decay fits.
pub const DECAY_FLOOR: f64 = 1e-14;
/// Sites within this distance of the center are left out of decay fits.
pub const DECAY_CORE: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub energy: f64,
    /// Index of `max |ψ|` within the box.
    pub center: usize,
    /// Fitted exponential decay rate (clamped at 0).
    pub rate: f64,
    /// Root-mean-square residual of the log-linear fit.
    pub fit_residual: f64,
    /// Reference Lyapunov exponent at `energy` (NaN when not supplied).
    pub l_at_e: f64,
}

/// Least-squares slope of `log|ψ(n)|` against `|n − center|`.
pub fn decay_fit(psi: &[f64], energy: f64, l_at_e: f64) -> Result<DecayFit> {
    let norm: f64 = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(Error::invalid("eigenvector has zero or non-finite norm"));
    }
    let center = psi
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .expect("non-empty vector");
    let (xs, ys): (Vec<f64>, Vec<f64>) = psi
        .iter()
        .enumerate()
        .filter(|(i, x)| i.abs_diff(center) > DECAY_CORE && x.abs() / norm > DECAY_FLOOR)
        .map(|(i, x)| (i.abs_diff(center) as f64, (x.abs() / norm).ln()))
        .unzip();
    if xs.len() < 10 {
        return Err(Error::invalid(format!("only {} usable sites for a decay fit, need 10", xs.len())));
    }
    let fit = linear_fit(&xs, &ys)?;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - fit.intercept - fit.slope * x).powi(2)).sum();
    Ok(DecayFit {
        energy,
        center,
        rate: (-fit.slope).max(0.0),
        fit_residual: (sse / xs.len() as f64).sqrt(),
        l_at_e,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileBin {
    pub e_lo: f64,
    pub e_hi: f64,
    pub median_rate: f64,
    /// Median of the reference exponent over the fitted eigenvalues.
    pub l_ref: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationProfile {
    pub fits: Vec<DecayFit>,
    pub bins: Vec<ProfileBin>,
    /// Eigenpairs skipped because a decay fit was impossible.
    pub skipped: usize,
}

/// Decay fits for every eigenpair of `H_{ω,[0,N)}` with eigenvalue in
/// `[lo, hi]` and farther than `eta` from every entry of `excluded`, over
/// `samples` independent ω, summarized in `bins` equal energy bins.
#[allow(clippy::too_many_arguments)]
pub fn localization_profile<M: PotentialModel + ?Sized>(
    model: &M,
    n_sites: usize,
    interval: (f64, f64),
    excluded: &[f64],
    eta: f64,
    samples: usize,
    bins: usize,
    seed: u64,
    l_ref: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<LocalizationProfile> {
    if bins == 0 || samples == 0 || n_sites == 0 {
        return Err(Error::invalid("samples, bins and the box size must be positive"));
    }
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::invalid("empty energy interval"));
    }
    let per_sample: Vec<(Vec<DecayFit>, usize)> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(Vec<DecayFit>, usize)> {
            let mut rng = rng_from_seed(replica_seed(seed, i as u64));
            let v = model.sample_potential(n_sites, &mut rng)?;
            let h = TridiagonalOperator::from_diagonal(v, 0)?;
            let spectral = eigensystem(&h, 1e-9)?;
            let mut fits = Vec::new();
            let mut skipped = 0;
            for (e, psi) in spectral.eigenvalues.iter().zip(&spectral.eigenvectors) {
                if *e < lo || *e > hi || excluded.iter().any(|x| (e - x).abs() <= eta) {
                    continue;
                }
                match decay_fit(psi, *e, f64::NAN) {
                    Ok(fit) => fits.push(fit),
                    Err(_) => skipped += 1,
                }
            }
            Ok((fits, skipped))
        })
        .collect::<Result<_>>()?;
    let mut fits = Vec::new();
    let mut skipped = 0;
    for (f, s) in per_sample {
        fits.extend(f);
        skipped += s;
    }
    for fit in fits.iter_mut() {
        fit.l_at_e = l_ref(fit.energy);
    }
    let width = (hi - lo) / bins as f64;
    let bins = (0..bins)
        .map(|b| {
            let e_lo = lo + b as f64 * width;
            let e_hi = if b + 1 == bins { hi } else { e_lo + width };
            let inside: Vec<&DecayFit> = fits
                .iter()
                .filter(|f| f.energy >= e_lo && (f.energy < e_hi || (b + 1 == bins && f.energy <= e_hi)))
                .collect();
            let rates: Vec<f64> = inside.iter().map(|f| f.rate).collect();
            let ls: Vec<f64> = inside.iter().map(|f| f.l_at_e).collect();
            ProfileBin { e_lo, e_hi, median_rate: median(&rates), l_ref: median(&ls), count: inside.len() }
        })
        .collect();
    Ok(LocalizationProfile { fits, bins, skipped })
}

/// `⌊N^{log N}⌋ = ⌊e^{(log N)²}⌋`.
pub fn nbar(n: u64) -> Result<u128> {
    if n == 0 {
        return Err(Error::invalid("nbar needs N ≥ 1"));
    }
    let x = (n as f64).ln().powi(2);
    if x > 700.0 {
        return Err(Error::invalid(format!("nbar({n}) = e^{x:.1} overflows; treat it symbolically")));
    }
    let v = x.exp().floor();
    if v >= u128::MAX as f64 {
        return Err(Error::invalid(format!("nbar({n}) = e^{x:.1} exceeds the integer range")));
    }
    Ok(v as u128)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceEvent {
    pub s: i64,
    pub k: usize,
    pub n1: usize,
    pub n2: usize,
    pub energy: f64,
    pub r: usize,
    pub m: usize,
    pub green_norm: f64,
    pub g_m_value: f64,
}

/// Upper bounds used to truncate the double-resonance family at desk scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceCaps {
    /// Half-widths `b` of the boxes `[−b, b]` around `s`, kept when `b ≤ min(K⁹, box_cap)`.
    pub half_widths: Vec<usize>,
    pub box_cap: usize,
    /// Number of offsets `r` spread evenly over `[min(K¹⁰, r_floor), r_cap]`.
    pub r_count: usize,
    pub r_floor: usize,
    pub r_cap: usize,
    /// Shifts `s`; those with `log²(|s| + 1) > K` are dropped.
    pub s_values: Vec<i64>,
}

impl Default for ResonanceCaps {
    fn default() -> Self {
        ResonanceCaps {
            half_widths: vec![4, 8, 16, 32],
            box_cap: 512,
            r_count: 8,
            r_floor: 1000,
            r_cap: 5000,
            s_values: vec![0],
        }
    }
}

/// The concrete `(s, N₁, N₂, r)` choices at scale `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonanceSearch {
    pub k: usize,
    pub s_values: Vec<i64>,
    pub boxes: Vec<(usize, usize)>,
    pub r_values: Vec<usize>,
}

impl ResonanceSearch {
    pub fn truncated(k: usize, caps: &ResonanceCaps) -> Result<Self> {
        if k == 0 {
            return Err(Error::invalid("K must be positive"));
        }
        let k9 = (k as f64).powi(9);
        let k10 = (k as f64).powi(10);
        let s_values: Vec<i64> =
            caps.s_values.iter().copied().filter(|s| ((s.unsigned_abs() + 1) as f64).ln().powi(2) <= k as f64).collect();
        let boxes: Vec<(usize, usize)> = caps
            .half_widths
            .iter()
            .copied()
            .filter(|&b| (b as f64) <= k9 && b <= caps.box_cap)
            .map(|b| (b, b))
            .collect();
        let r_lo = (k10.min(caps.r_floor as f64)) as usize;
        let r_hi = caps.r_cap.max(r_lo);
        let r_values: Vec<usize> = if caps.r_count <= 1 {
            vec![r_lo]
        } else {
            (0..caps.r_count).map(|i| r_lo + (r_hi - r_lo) * i / (caps.r_count - 1)).collect()
        };
        if s_values.is_empty() || boxes.is_empty() {
            return Err(Error::invalid(format!("the truncated family at K = {k} is empty")));
        }
        Ok(ResonanceSearch { k, s_values, boxes, r_values })
    }

    /// Coordinates `[lo, hi]` of ω every evaluation touches.
    pub fn coverage(&self, radius: usize) -> (i64, i64) {
        let r = radius as i64;
        let smin = *self.s_values.iter().min().expect("non-empty");
        let smax = *self.s_values.iter().max().expect("non-empty");
        let bmax = self.boxes.iter().map(|&(a, b)| a.max(b)).max().unwrap_or(0) as i64;
        let rmax = *self.r_values.iter().max().unwrap_or(&0) as i64;
        (smin - bmax - r, (smax + bmax).max(smax + rmax + 2 * self.k as i64) + r)
    }
}

/// All `(s, N₁, N₂, E, r, m)` in the truncated family where both
/// `‖G_{T^sω,[−N₁,N₂]}^E‖ ≥ e^{K²}` and `g_m(T^{s+r}ω, E) ≤ L(E) − ε`.
/// Events are returned in `(s, E, r, N₁, N₂, m)` order.
pub fn double_resonance_scan<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    epsilon: f64,
    search: &ResonanceSearch,
    energies: &[f64],
    l_ref: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Vec<ResonanceEvent>> {
    scan(f, omega, epsilon, search, energies, l_ref, false)
}

fn scan<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    epsilon: f64,
    search: &ResonanceSearch,
    energies: &[f64],
    l_ref: &(dyn Fn(f64) -> f64 + Sync),
    first_only: bool,
) -> Result<Vec<ResonanceEvent>> {
    let (lo, hi) = search.coverage(f.radius());
    omega.require(lo, hi)?;
    let k = search.k;
    let threshold = (k * k) as f64;
    let mut events = Vec::new();
    for &s in &search.s_values {
        for &(n1, n2) in &search.boxes {
            let v = potential(f, omega, s - n1 as i64, n1 + n2 + 1)?;
            let eig = eigenvalues(&TridiagonalOperator::from_diagonal(v, s - n1 as i64)?)?;
            for &e in energies {
                let dist = eig.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min);
                // ‖G‖ = 1/dist ≥ e^{K²}
                if !(dist == 0.0 || -dist.ln() >= threshold) {
                    continue;
                }
                let green_norm = if dist == 0.0 { f64::INFINITY } else { 1.0 / dist };
                let bound = l_ref(e) - epsilon;
                if bound < 0.0 {
                    continue;
                }
                for &r in &search.r_values {
                    for m in [k, 2 * k] {
                        let g = g_n(f, &omega.shift(s + r as i64), e, m)?;
                        if g <= bound {
                            events.push(ResonanceEvent { s, k, n1, n2, energy: e, r, m, green_norm, g_m_value: g });
                            if first_only {
                                return Ok(events);
                            }
                        }
                    }
                }
            }
        }
    }
    events.sort_by(|a, b| {
        (a.s, a.energy, a.r, a.n1, a.n2, a.m)
            .partial_cmp(&(b.s, b.energy, b.r, b.n1, b.n2, b.m))
            .expect("finite keys")
    });
    Ok(events)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonanceFrequency {
    pub k: usize,
    pub hits: u64,
    pub samples: u64,
    pub p_hat: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

fn searches_and_coverage(ks: &[usize], caps: &ResonanceCaps, radius: usize) -> Result<(Vec<ResonanceSearch>, i64, i64)> {
    let searches: Vec<ResonanceSearch> = ks.iter().map(|&k| ResonanceSearch::truncated(k, caps)).collect::<Result<_>>()?;
    let lo = searches.iter().map(|s| s.coverage(radius).0).min().unwrap_or(0);
    let hi = searches.iter().map(|s| s.coverage(radius).1).max().unwrap_or(0);
    Ok((searches, lo, hi))
}

/// Sample `i` of a resonance experiment and the seed it was drawn from.
fn resonance_sample<F: SiteFunction>(model: &ShiftModel<F>, seed: u64, i: usize, lo: i64, hi: i64) -> Result<(u64, SymbolWindow)> {
    let s = replica_seed(seed, i as u64);
    let mut rng = rng_from_seed(s);
    Ok((s, model.measure.sample_window_with(lo, hi, &mut rng)?))
}

/// Fraction of sampled ω with at least one event at each scale in `ks`.
/// Every scale sees the same ω for a given sample index.
#[allow(clippy::too_many_arguments)]
pub fn double_resonance_frequency<F: SiteFunction>(
    model: &ShiftModel<F>,
    epsilon: f64,
    ks: &[usize],
    energies: &[f64],
    caps: &ResonanceCaps,
    samples: usize,
    seed: u64,
    l_ref: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Vec<ResonanceFrequency>> {
    let (searches, lo, hi) = searches_and_coverage(ks, caps, model.f.radius())?;
    let hits: Vec<Vec<bool>> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<bool>> {
            let (_, omega) = resonance_sample(model, seed, i, lo, hi)?;
            searches
                .iter()
                .map(|s| Ok(!scan(&model.f, &omega, epsilon, s, energies, l_ref, true)?.is_empty()))
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(ks
        .iter()
        .enumerate()
        .map(|(j, &k)| {
            let h = hits.iter().filter(|row| row[j]).count() as u64;
            let n = samples as u64;
            let (ci_lo, ci_hi) = wilson_interval(h, n, Z95);
            ResonanceFrequency { k, hits: h, samples: n, p_hat: if n == 0 { f64::NAN } else { h as f64 / n as f64 }, ci_lo, ci_hi }
        })
        .collect())
}

/// Full event lists for the first `count` samples of a frequency run, each
/// tagged with the seed of its ω, ordered by sample then scale.
#[allow(clippy::too_many_arguments)]
pub fn double_resonance_events<F: SiteFunction>(
    model: &ShiftModel<F>,
    epsilon: f64,
    ks: &[usize],
    energies: &[f64],
    caps: &ResonanceCaps,
    count: usize,
    seed: u64,
    l_ref: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Vec<(u64, ResonanceEvent)>> {
    let (searches, lo, hi) = searches_and_coverage(ks, caps, model.f.radius())?;
    let per_sample: Vec<Vec<(u64, ResonanceEvent)>> = (0..count)
        .into_par_iter()
        .map(|i| -> Result<Vec<(u64, ResonanceEvent)>> {
            let (s, omega) = resonance_sample(model, seed, i, lo, hi)?;
            let mut out = Vec::new();
            for search in &searches {
                out.extend(double_resonance_scan(&model.f, &omega, epsilon, search, energies, l_ref)?.into_iter().map(|e| (s, e)));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    Ok(per_sample.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenDecayReport {
    /// `min (log rhs − log lhs)` over all pairs; nonnegative iff the bound holds everywhere.
    pub worst_log_margin: f64,
    pub worst_pair: (usize, usize),
    pub holds: bool,
    /// Whether `‖A_j‖·‖A_{n−k}(T^kω)‖ ≤ exp[(n − |j−k|)L + C₀εn]` held for every pair.
    pub transfer_bound_holds: bool,
}

/// Compares `|G_{T^{s₀}ω,n}(j,k)|` with `exp[(n − |j−k|)L + C₀εn] / |det[H − E]|`.
#[allow(clippy::too_many_arguments)]
pub fn finite_green_decay_check<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    energy: f64,
    n: usize,
    s0: i64,
    l_ref: f64,
    epsilon: f64,
    c0: f64,
) -> Result<GreenDecayReport> {
    if n == 0 {
        return Err(Error::invalid("n must be positive"));
    }
    let v = potential(f, omega, s0, n)?;
    let (g, log_det) = green_logs(&v, energy)?;
    let (prefix, suffix) = transfer_norm_logs(&v, energy);
    let mut worst = (f64::INFINITY, (0, 0));
    let mut transfer_ok = true;
    for j in 0..n {
        for k in 0..n {
            let d = j.abs_diff(k) as f64;
            let log_rhs_num = (n as f64 - d) * l_ref + c0 * epsilon * n as f64;
            let margin = log_rhs_num - log_det - g[j][k];
            if margin < worst.0 {
                worst = (margin, (j, k));
            }
            if j <= k && prefix[j] + suffix[k] > log_rhs_num {
                transfer_ok = false;
            }
        }
    }
    Ok(GreenDecayReport { worst_log_margin: worst.0, worst_pair: worst.1, holds: worst.0 >= 0.0, transfer_bound_holds: transfer_ok })
}

/// `sup_t |Σ_{E_k ∈ I} e^{−itE_k} ψ_k(n) ψ_k(m)|` over the supplied times.
pub fn dynamical_probe(spectral: &SpectralData, interval: (f64, f64), m_site: usize, n_site: usize, times: &[f64]) -> f64 {
    let terms: Vec<(f64, f64)> = spectral
        .eigenvalues
        .iter()
        .zip(&spectral.eigenvectors)
        .filter(|(e, _)| **e >= interval.0 && **e <= interval.1)
        .map(|(e, psi)| (*e, psi[n_site] * psi[m_site]))
        .collect();
    times
        .iter()
        .map(|&t| {
            let (re, im) = terms.iter().fold((0.0, 0.0), |(re, im), &(e, w)| (re + w * (e * t).cos(), im - w * (e * t).sin()));
            re.hypot(im)
        })
        .fold(0.0, f64::max)
}

/// Probe values for every target site `n`, then the least-squares slope of
/// `log probe` against `|n − m|` over sites where the probe exceeds `floor`.
/// Returns `(profile, decay rate β)`.
pub fn dynamical_decay(
    spectral: &SpectralData,
    interval: (f64, f64),
    m_site: usize,
    times: &[f64],
    floor: f64,
) -> Result<(Vec<f64>, f64)> {
    let n = spectral.eigenvectors.first().map_or(0, |v| v.len());
    let profile: Vec<f64> = (0..n).map(|s| dynamical_probe(spectral, interval, m_site, s, times)).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = profile
        .iter()
        .enumerate()
        .filter(|(s, p)| **p > floor && s.abs_diff(m_site) > 0)
        .map(|(s, p)| (s.abs_diff(m_site) as f64, p.ln()))
        .unzip();
    let fit = linear_fit(&xs, &ys)?;
    Ok((profile, -fit.slope))
}
