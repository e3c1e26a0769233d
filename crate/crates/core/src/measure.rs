//! Markov (including Bernoulli) measures on subshifts of finite type.

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;
use crate::symbolic::{SftSpec, Symbol, SymbolWindow};

const ROW_SUM_TOL: f64 = 1e-12;

/// A shift-invariant Markov measure: stationary vector `π` and row-stochastic `P`
/// whose support is exactly the transition matrix of `spec`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftMeasure {
    spec: SftSpec,
    /// Row-major ℓ×ℓ.
    p: Vec<f64>,
    /// Cumulative row sums for sampling.
    cumulative: Vec<f64>,
    stationary: Vec<f64>,
    stationary_cumulative: Vec<f64>,
}

impl ShiftMeasure {
    /// Markov measure from a row-stochastic matrix; the subshift is the support pattern of `p`.
    pub fn markov(p: Vec<Vec<f64>>) -> Result<Self> {
        let l = p.len();
        for (i, row) in p.iter().enumerate() {
            if row.len() != l {
                return Err(Error::invalid(format!("row {} of P has wrong length", i + 1)));
            }
            if row.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
                return Err(Error::invalid(format!("row {} of P has a negative or non-finite entry", i + 1)));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!("row {} of P sums to {s}, not 1", i + 1)));
            }
        }
        let support = p.iter().map(|r| r.iter().map(|&x| u8::from(x > 0.0)).collect()).collect();
        let spec = SftSpec::new(support)?;
        let stationary = stationary_distribution(&p, 1e-14)?;
        let flat: Vec<f64> = p.into_iter().flatten().collect();
        Ok(Self::assemble(spec, flat, stationary))
    }

    /// Bernoulli (i.i.d.) measure on the full shift.
    pub fn bernoulli(probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&x| !(x > 0.0)) {
            return Err(Error::invalid("Bernoulli probabilities must all be positive"));
        }
        let s: f64 = probs.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::invalid(format!("Bernoulli probabilities sum to {s}, not 1")));
        }
        let l = probs.len();
        let spec = SftSpec::full(l)?;
        let flat = (0..l).flat_map(|_| probs.iter().copied()).collect();
        Ok(Self::assemble(spec, flat, probs))
    }

    fn assemble(spec: SftSpec, p: Vec<f64>, stationary: Vec<f64>) -> Self {
        let l = spec.alphabet_size();
        let mut cumulative = Vec::with_capacity(l * l);
        for i in 0..l {
            let mut acc = 0.0;
            for j in 0..l {
                acc += p[i * l + j];
                cumulative.push(acc);
            }
        }
        let stationary_cumulative = stationary
            .iter()
            .scan(0.0, |acc, &x| {
                *acc += x;
                Some(*acc)
            })
            .collect();
        ShiftMeasure { spec, p, cumulative, stationary, stationary_cumulative }
    }

    pub fn spec(&self) -> &SftSpec {
        &self.spec
    }

    pub fn alphabet_size(&self) -> usize {
        self.spec.alphabet_size()
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    /// Stationary weight of symbol `j` (1-based).
    pub fn pi(&self, j: Symbol) -> f64 {
        self.stationary[j as usize - 1]
    }

    /// Transition probability `P[i, j]` for 1-based symbols.
    pub fn prob(&self, i: Symbol, j: Symbol) -> f64 {
        let l = self.alphabet_size();
        self.p[(i as usize - 1) * l + (j as usize - 1)]
    }

    pub fn transition_probs(&self) -> Vec<Vec<f64>> {
        self.p.chunks(self.alphabet_size()).map(|r| r.to_vec()).collect()
    }

    /// True when every row of `P` equals `π` (product measure).
    pub fn is_bernoulli(&self) -> bool {
        let l = self.alphabet_size();
        (0..l).all(|i| (0..l).all(|j| (self.p[i * l + j] - self.stationary[j]).abs() < 1e-15))
    }

    /// `π_{j₀} ∏ P[j_i, j_{i+1}]`; zero for inadmissible words. Independent of `position` by shift invariance.
    pub fn cylinder_mass(&self, word: &[Symbol], _position: i64) -> f64 {
        let l = self.alphabet_size() as Symbol;
        if word.is_empty() {
            return 1.0;
        }
        if word.iter().any(|&s| s == 0 || s > l) {
            return 0.0;
        }
        let mut mass = self.pi(word[0]);
        for pair in word.windows(2) {
            mass *= self.prob(pair[0], pair[1]);
        }
        mass
    }

    fn draw_stationary(&self, rng: &mut impl Rng) -> Symbol {
        draw_from_cumulative(&self.stationary_cumulative, rng)
    }

    fn draw_next(&self, from: Symbol, rng: &mut impl Rng) -> Symbol {
        let l = self.alphabet_size();
        let row = &self.cumulative[(from as usize - 1) * l..from as usize * l];
        draw_from_cumulative(row, rng)
    }

    /// Extend `symbols` by `count` Markov steps.
    pub fn extend_path(&self, symbols: &mut Vec<Symbol>, count: usize, rng: &mut impl Rng) {
        let mut cur = *symbols.last().expect("path must be non-empty");
        symbols.reserve(count);
        for _ in 0..count {
            cur = self.draw_next(cur, rng);
            symbols.push(cur);
        }
    }

    /// Window on `lo..=hi` drawn from the measure using a caller-supplied generator.
    pub fn sample_window_with(&self, lo: i64, hi: i64, rng: &mut impl Rng) -> Result<SymbolWindow> {
        if hi < lo {
            return Err(Error::invalid(format!("empty range [{lo}, {hi}]")));
        }
        let mut symbols = vec![self.draw_stationary(rng)];
        self.extend_path(&mut symbols, (hi - lo) as usize, rng);
        Ok(SymbolWindow::new(lo, symbols))
    }

    /// Window on `lo..=hi` distributed as the measure restricted to those coordinates.
    pub fn sample_window(&self, lo: i64, hi: i64, seed: u64) -> Result<SymbolWindow> {
        self.sample_window_with(lo, hi, &mut rng_from_seed(seed))
    }

    /// Extend a past ending at coordinate 0 by `future_len` symbols drawn from
    /// the conditional measure on the local unstable set of that past. For a
    /// Markov measure this is the chain started at `ω₀`.
    pub fn sample_unstable_fiber(&self, past: &SymbolWindow, future_len: usize, seed: u64) -> Result<SymbolWindow> {
        self.sample_unstable_fiber_with(past, future_len, &mut rng_from_seed(seed))
    }

    pub fn sample_unstable_fiber_with(
        &self,
        past: &SymbolWindow,
        future_len: usize,
        rng: &mut impl Rng,
    ) -> Result<SymbolWindow> {
        if past.end() != 0 {
            return Err(Error::invalid(format!("past window must end at coordinate 0, ends at {}", past.end())));
        }
        if !self.spec.is_admissible(past.symbols())? {
            return Err(Error::invalid("past window is not admissible"));
        }
        let mut symbols = past.symbols().to_vec();
        self.extend_path(&mut symbols, future_len, rng);
        Ok(SymbolWindow::new(past.start(), symbols))
    }

    /// `P^g` for `g ≥ 0`, row-major.
    pub fn transition_power(&self, g: usize) -> Vec<f64> {
        let l = self.alphabet_size();
        let mut out: Vec<f64> = (0..l * l).map(|k| if k / l == k % l { 1.0 } else { 0.0 }).collect();
        for _ in 0..g {
            out = matmul(&out, &self.p, l);
        }
        out
    }

    /// Smallest `C ≥ 1` with `C⁻¹ ≤ μ(A ∩ B) / (μ(A) μ(B)) ≤ C` over all cylinder
    /// pairs separated by gaps `1 ≤ g ≤ gap_cap`. For a Markov measure the
    /// ratio equals `(P^g)_{ji} / π_i` with `j` the last symbol of `A` and `i`
    /// the first of `B`.
    pub fn distortion_constant(&self, gap_cap: usize) -> f64 {
        let l = self.alphabet_size();
        let mut c: f64 = 1.0;
        let mut power = self.p.clone();
        for _ in 1..=gap_cap {
            for j in 0..l {
                for i in 0..l {
                    let pg = power[j * l + i];
                    if pg > 0.0 {
                        let ratio = pg / self.stationary[i];
                        c = c.max(ratio).max(1.0 / ratio);
                    }
                }
            }
            power = matmul(&power, &self.p, l);
        }
        c
    }

    /// Density `ψ` of `μ` restricted to `[0; j]` against the product of its
    /// one-sided projections; constant `1/π_j` for Markov measures.
    pub fn local_product_density(&self, j: Symbol) -> Result<f64> {
        self.spec.check_symbol(j)?;
        Ok(1.0 / self.pi(j))
    }
}

fn draw_from_cumulative(cumulative: &[f64], rng: &mut impl Rng) -> Symbol {
    let u: f64 = rng.gen::<f64>() * cumulative[cumulative.len() - 1];
    // Zero-probability entries repeat the previous cumulative value, so `u < c`
    // first holds at a positive-probability index.
    let idx = cumulative.iter().position(|&c| u < c).unwrap_or_else(|| {
        // rounding put u on the top edge: take the last positive-probability entry
        (1..cumulative.len()).rev().find(|&k| cumulative[k] > cumulative[k - 1]).unwrap_or(0)
    });
    (idx + 1) as Symbol
}

fn matmul(x: &[f64], y: &[f64], l: usize) -> Vec<f64> {
    let mut out = vec![0.0; l * l];
    for i in 0..l {
        for k in 0..l {
            let xik = x[i * l + k];
            if xik != 0.0 {
                for j in 0..l {
                    out[i * l + j] += xik * y[k * l + j];
                }
            }
        }
    }
    out
}

/// Stationary vector of an irreducible row-stochastic matrix.
///
/// Power iteration on the lazy chain `(I + P)/2`, which has the same
/// stationary vector and is aperiodic whenever `P` is irreducible.
pub fn stationary_distribution(p: &[Vec<f64>], tol: f64) -> Result<Vec<f64>> {
    const MAX_ITERS: usize = 1_000_000;
    let l = p.len();
    if l == 0 || p.iter().any(|r| r.len() != l) {
        return Err(Error::invalid("P must be square and non-empty"));
    }
    if !is_irreducible(p) {
        return Err(Error::invalid("transition support is reducible"));
    }
    let mut pi = vec![1.0 / l as f64; l];
    for _ in 0..MAX_ITERS {
        let mut next = vec![0.0; l];
        for i in 0..l {
            for j in 0..l {
                next[j] += pi[i] * p[i][j];
            }
        }
        let residual = (0..l).map(|j| (next[j] - pi[j]).abs()).fold(0.0, f64::max);
        let total: f64 = next.iter().sum();
        if residual <= tol {
            return Ok(next.into_iter().map(|x| x / total).collect());
        }
        pi = (0..l).map(|j| 0.5 * (pi[j] + next[j]) / total).collect();
    }
    Err(Error::NotConverged { iterations: MAX_ITERS, residual: f64::NAN })
}

fn is_irreducible(p: &[Vec<f64>]) -> bool {
    let l = p.len();
    let reach = |forward: bool| {
        let mut seen = vec![false; l];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for j in 0..l {
                let edge = if forward { p[i][j] > 0.0 } else { p[j][i] > 0.0 };
                if edge && !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|x| x)
    };
    reach(true) && reach(false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn golden_markov() -> ShiftMeasure {
        ShiftMeasure::markov(vec![vec![0.5, 0.5], vec![1.0, 0.0]]).unwrap()
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary_distribution(&[vec![0.3, 0.7], vec![0.3, 0.7]], 1e-14).unwrap();
        assert_relative_eq!(pi[0], 0.3, epsilon = 1e-12);
        let pi = stationary_distribution(&[vec![0.5, 0.5], vec![1.0, 0.0]], 1e-14).unwrap();
        assert_relative_eq!(pi[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(pi[1], 1.0 / 3.0, epsilon = 1e-12);
        let u = vec![vec![0.25; 4]; 4];
        for x in stationary_distribution(&u, 1e-14).unwrap() {
            assert_relative_eq!(x, 0.25, epsilon = 1e-14);
        }
        // periodic but irreducible chain still converges
        let pi = stationary_distribution(&[vec![0.0, 1.0], vec![1.0, 0.0]], 1e-14).unwrap();
        assert_relative_eq!(pi[0], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn reducible_rejected() {
        let r = stationary_distribution(&[vec![1.0, 0.0], vec![0.5, 0.5]], 1e-12);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn stationary_is_invariant() {
        let m = ShiftMeasure::markov(vec![vec![0.2, 0.5, 0.3], vec![0.6, 0.0, 0.4], vec![0.1, 0.1, 0.8]]).unwrap();
        let pi = m.stationary();
        for j in 0..3 {
            let v: f64 = (0..3).map(|i| pi[i] * m.transition_probs()[i][j]).sum();
            assert!((v - pi[j]).abs() < 1e-10);
        }
    }

    #[test]
    fn cylinder_mass_examples() {
        let b = ShiftMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(b.cylinder_mass(&[1, 2, 1], 0), 0.125, epsilon = 1e-15);
        let m = golden_markov();
        assert_relative_eq!(m.cylinder_mass(&[1, 2, 1], 5), 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(m.cylinder_mass(&[2, 2, 1], 0), 0.0);
        assert_eq!(m.cylinder_mass(&[3], 0), 0.0);
    }

    #[test]
    fn forced_transition_in_fiber() {
        let m = golden_markov();
        let past = SymbolWindow::new(-2, vec![1, 1, 2]);
        for seed in 0..50 {
            let w = m.sample_unstable_fiber(&past, 3, seed).unwrap();
            assert_eq!(w.get(1), Some(1));
            assert_eq!(w.slice(-2, 0).unwrap(), past.symbols());
        }
        let bad = SymbolWindow::new(-1, vec![1, 2, 1]);
        assert!(m.sample_unstable_fiber(&bad, 2, 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let m = golden_markov();
        assert_eq!(m.sample_window(-5, 20, 9).unwrap(), m.sample_window(-5, 20, 9).unwrap());
        let w = m.sample_window(-5, 20, 9).unwrap();
        assert_eq!(w.start(), -5);
        assert_eq!(w.end(), 20);
        assert!(m.spec().is_admissible(w.symbols()).unwrap());
    }

    #[test]
    fn distortion_examples() {
        let b = ShiftMeasure::bernoulli(vec![0.3, 0.7]).unwrap();
        assert_eq!(b.distortion_constant(10), 1.0);
        assert_relative_eq!(golden_markov().distortion_constant(10), 1.5, epsilon = 1e-12);
    }

    #[test]
    fn local_product_density_examples() {
        let b = ShiftMeasure::bernoulli(vec![0.5, 0.5]).unwrap();
        assert_relative_eq!(b.local_product_density(1).unwrap(), 2.0, epsilon = 1e-14);
        assert_relative_eq!(golden_markov().local_product_density(1).unwrap(), 1.5, epsilon = 1e-12);
        let u = ShiftMeasure::bernoulli(vec![0.25; 4]).unwrap();
        assert_relative_eq!(u.local_product_density(3).unwrap(), 4.0, epsilon = 1e-14);
    }
}
