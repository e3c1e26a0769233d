//! Subshifts of finite type and finite windows of their bi-infinite sequences.
//!
//! A point of the subshift is never materialized: every computation works
//! on a [`SymbolWindow`], a finite admissible stretch `s_a..s_b` of some
//! sequence. Operations that would need coordinates outside the window
//! return an error or an indeterminate result instead of extending it.

use crate::error::{Error, Result};

/// Symbols are `1..=ℓ`.
pub type Symbol = u16;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SftSpec {
    alphabet_size: usize,
    /// Row-major ℓ×ℓ 0/1 matrix.
    transition: Vec<bool>,
}

impl SftSpec {
    pub fn new(transition: Vec<Vec<u8>>) -> Result<Self> {
        let l = transition.len();
        if l < 2 {
            return Err(Error::invalid("alphabet must have at least 2 symbols"));
        }
        let mut flat = Vec::with_capacity(l * l);
        for (i, row) in transition.iter().enumerate() {
            if row.len() != l {
                return Err(Error::invalid(format!("transition row {} has length {}, expected {l}", i + 1, row.len())));
            }
            for &x in row {
                match x {
                    0 => flat.push(false),
                    1 => flat.push(true),
                    _ => return Err(Error::invalid("transition entries must be 0 or 1")),
                }
            }
        }
        let spec = SftSpec { alphabet_size: l, transition: flat };
        for j in 1..=l as Symbol {
            if !(1..=l as Symbol).any(|k| spec.allowed(j, k)) {
                return Err(Error::invalid(format!("symbol {j} has no successor")));
            }
            if !(1..=l as Symbol).any(|k| spec.allowed(k, j)) {
                return Err(Error::invalid(format!("symbol {j} has no predecessor")));
            }
        }
        Ok(spec)
    }

    /// Full shift on `l` symbols.
    pub fn full(l: usize) -> Result<Self> {
        SftSpec::new(vec![vec![1; l]; l])
    }

    pub fn alphabet_size(&self) -> usize {
        self.alphabet_size
    }

    pub fn symbols(&self) -> impl Iterator<Item = Symbol> {
        1..=self.alphabet_size as Symbol
    }

    /// Whether `i → j` is an allowed transition. Out-of-range symbols are not allowed.
    pub fn allowed(&self, i: Symbol, j: Symbol) -> bool {
        let l = self.alphabet_size;
        let (i, j) = (i as usize, j as usize);
        if i == 0 || j == 0 || i > l || j > l {
            return false;
        }
        self.transition[(i - 1) * l + (j - 1)]
    }

    pub fn transition_matrix(&self) -> Vec<Vec<u8>> {
        let l = self.alphabet_size;
        (0..l)
            .map(|i| (0..l).map(|j| self.transition[i * l + j] as u8).collect())
            .collect()
    }

    pub fn check_symbol(&self, s: Symbol) -> Result<()> {
        if s == 0 || s as usize > self.alphabet_size {
            return Err(Error::invalid(format!("symbol {s} outside 1..={}", self.alphabet_size)));
        }
        Ok(())
    }

    pub fn is_admissible(&self, word: &[Symbol]) -> Result<bool> {
        for &s in word {
            self.check_symbol(s)?;
        }
        Ok(word.windows(2).all(|p| self.allowed(p[0], p[1])))
    }

    /// Symbols `j` with `j → j` allowed; these are the constant sequences fixed by the shift.
    pub fn fixed_points(&self) -> Vec<Symbol> {
        self.symbols().filter(|&j| self.allowed(j, j)).collect()
    }

    /// Least `p ≤ max_power` with every entry of `transition^p` positive.
    pub fn mixing_constant(&self, max_power: usize) -> Option<usize> {
        let l = self.alphabet_size;
        let base: Vec<bool> = self.transition.clone();
        let mut power = base.clone();
        for p in 1..=max_power {
            if power.iter().all(|&x| x) {
                return Some(p);
            }
            power = bool_matmul(&power, &base, l);
        }
        None
    }

    /// Wielandt bound `ℓ² − 2ℓ + 2`: a primitive 0/1 matrix has a positive power no later than this.
    pub fn wielandt_bound(&self) -> usize {
        let l = self.alphabet_size;
        l * l - 2 * l + 2
    }

    pub fn is_mixing(&self) -> bool {
        self.mixing_constant(self.wielandt_bound()).is_some()
    }

    /// All admissible words of the given length in lexicographic order.
    pub fn admissible_words(&self, len: usize) -> Vec<Vec<Symbol>> {
        if len == 0 {
            return vec![Vec::new()];
        }
        let mut words: Vec<Vec<Symbol>> = self.symbols().map(|s| vec![s]).collect();
        for _ in 1..len {
            let mut next = Vec::with_capacity(words.len() * self.alphabet_size);
            for w in &words {
                let last = *w.last().unwrap();
                for s in self.symbols().filter(|&s| self.allowed(last, s)) {
                    let mut v = w.clone();
                    v.push(s);
                    next.push(v);
                }
            }
            words = next;
        }
        words
    }

    /// Number of admissible words of length `len`, saturating at `u128::MAX`.
    pub fn count_words(&self, len: usize) -> u128 {
        if len == 0 {
            return 1;
        }
        let l = self.alphabet_size;
        let mut counts = vec![1u128; l];
        for _ in 1..len {
            let mut next = vec![0u128; l];
            for i in 0..l {
                for j in 0..l {
                    if self.transition[i * l + j] {
                        next[j] = next[j].saturating_add(counts[i]);
                    }
                }
            }
            counts = next;
        }
        counts.iter().fold(0u128, |a, &b| a.saturating_add(b))
    }

    /// Lexicographically minimal admissible window on `[-depth, depth]` with
    /// symbol `j` at coordinate 0: greedily the smallest allowed successor
    /// going right and the smallest allowed predecessor going left.
    pub fn minimal_extension(&self, j: Symbol, depth: usize) -> Result<SymbolWindow> {
        self.check_symbol(j)?;
        let mut future = vec![j];
        for _ in 0..depth {
            let last = *future.last().unwrap();
            let next = self.symbols().find(|&s| self.allowed(last, s)).unwrap();
            future.push(next);
        }
        let mut past = Vec::with_capacity(depth);
        let mut first = j;
        for _ in 0..depth {
            let prev = self.symbols().find(|&s| self.allowed(s, first)).unwrap();
            past.push(prev);
            first = prev;
        }
        past.reverse();
        past.extend(future);
        Ok(SymbolWindow::new(-(depth as i64), past))
    }
}

fn bool_matmul(x: &[bool], y: &[bool], l: usize) -> Vec<bool> {
    let mut out = vec![false; l * l];
    for i in 0..l {
        for k in 0..l {
            if x[i * l + k] {
                for j in 0..l {
                    out[i * l + j] |= y[k * l + j];
                }
            }
        }
    }
    out
}

/// The symbols `s_a..s_b` of a bi-infinite sequence at coordinates `a..=b`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SymbolWindow {
    start: i64,
    symbols: Vec<Symbol>,
}

impl SymbolWindow {
    /// # Panics
    /// If `symbols` is empty.
    pub fn new(start: i64, symbols: Vec<Symbol>) -> Self {
        assert!(!symbols.is_empty(), "a window holds at least one symbol");
        SymbolWindow { start, symbols }
    }

    /// Like [`SymbolWindow::new`] but also checks admissibility under `spec`.
    pub fn admissible(spec: &SftSpec, start: i64, symbols: Vec<Symbol>) -> Result<Self> {
        if symbols.is_empty() {
            return Err(Error::invalid("empty window"));
        }
        if !spec.is_admissible(&symbols)? {
            return Err(Error::invalid("window is not admissible"));
        }
        Ok(SymbolWindow { start, symbols })
    }

    pub fn start(&self) -> i64 {
        self.start
    }

    /// Last covered coordinate (inclusive).
    pub fn end(&self) -> i64 {
        self.start + self.symbols.len() as i64 - 1
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, n: i64) -> Option<Symbol> {
        if n < self.start || n > self.end() {
            return None;
        }
        Some(self.symbols[(n - self.start) as usize])
    }

    pub fn covers(&self, lo: i64, hi: i64) -> bool {
        lo >= self.start && hi <= self.end()
    }

    pub fn require(&self, lo: i64, hi: i64) -> Result<()> {
        if self.covers(lo, hi) {
            Ok(())
        } else {
            Err(Error::WindowTooShort {
                need_lo: lo,
                need_hi: hi,
                have_lo: self.start,
                have_hi: self.end(),
            })
        }
    }

    /// Symbols at coordinates `lo..=hi`; the range must be covered.
    pub fn slice(&self, lo: i64, hi: i64) -> Result<&[Symbol]> {
        self.require(lo, hi)?;
        let i = (lo - self.start) as usize;
        let j = (hi - self.start) as usize;
        Ok(&self.symbols[i..=j])
    }

    /// The window of `T^k ω`: coordinate `n` of the result is coordinate `n + k` of `self`.
    pub fn shift(&self, k: i64) -> SymbolWindow {
        SymbolWindow { start: self.start - k, symbols: self.symbols.clone() }
    }

    /// Sub-window over `lo..=hi`.
    pub fn restrict(&self, lo: i64, hi: i64) -> Result<SymbolWindow> {
        Ok(SymbolWindow { start: lo, symbols: self.slice(lo, hi)?.to_vec() })
    }

    /// Copy with the symbol at coordinate `n` replaced.
    pub fn with_symbol(&self, n: i64, s: Symbol) -> Result<SymbolWindow> {
        self.require(n, n)?;
        let mut w = self.clone();
        w.symbols[(n - self.start) as usize] = s;
        Ok(w)
    }
}

/// Outcome of comparing two windows under the metric `d(x, y) = e^{-N}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distance {
    /// Windows agree for `|n| < agree_radius` and differ at `|n| = agree_radius`.
    Determinate { agree_radius: usize, value: f64 },
    /// Windows agree on their entire common symmetric range `|n| < agree_at_least`.
    Indeterminate { agree_at_least: usize },
}

impl Distance {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Distance::Determinate { value, .. } => Some(value),
            Distance::Indeterminate { .. } => None,
        }
    }
}

/// `e^{-N}` with `N` the largest radius such that the windows agree on `|n| < N`.
pub fn metric_distance(w1: &SymbolWindow, w2: &SymbolWindow) -> Result<Distance> {
    // common symmetric range |n| < m
    let m = [-w1.start(), w1.end(), -w2.start(), w2.end()]
        .into_iter()
        .map(|x| x + 1)
        .min()
        .unwrap();
    if m < 1 {
        return Err(Error::invalid("windows do not both cover coordinate 0"));
    }
    for r in 0..m {
        let differs = w1.get(r) != w2.get(r) || w1.get(-r) != w2.get(-r);
        if differs {
            return Ok(Distance::Determinate { agree_radius: r as usize, value: (-(r as f64)).exp() });
        }
    }
    Ok(Distance::Indeterminate { agree_at_least: m as usize })
}

/// `w1 ∧ w2`: the point whose past (`n ≤ 0`) is that of `w1` and whose future (`n ≥ 0`) is that of `w2`.
pub fn wedge(w1: &SymbolWindow, w2: &SymbolWindow) -> Result<SymbolWindow> {
    let (s1, s2) = match (w1.get(0), w2.get(0)) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::invalid("both windows must cover coordinate 0")),
    };
    if s1 != s2 {
        return Err(Error::invalid(format!("symbols at 0 differ ({s1} vs {s2})")));
    }
    let mut symbols = w1.slice(w1.start(), 0)?.to_vec();
    if w2.end() >= 1 {
        symbols.extend_from_slice(w2.slice(1, w2.end())?);
    }
    Ok(SymbolWindow::new(w1.start(), symbols))
}
