//! Sampling functions `f` and the potentials `V_ω(n) = f(Tⁿω)` they generate.

use std::fmt::Write as _;

use rand::Rng;

use crate::error::{Error, Result};
use crate::symbolic::{SftSpec, Symbol, SymbolWindow};

/// Table entries allowed in a locally constant function.
const MAX_TABLE: usize = 10_000_000;

/// A real function on the subshift that depends on finitely many coordinates
/// around the origin.
pub trait SiteFunction: Send + Sync {
    /// `f(ω)` depends only on `ω_{-r..=r}`.
    fn radius(&self) -> usize;

    /// `f(Tⁿω)`; the window must cover `n − r..=n + r`.
    fn value_at(&self, w: &SymbolWindow, n: i64) -> Result<f64>;

    /// Upper bound on `‖f‖∞` (exact for locally constant functions).
    fn sup_norm(&self) -> f64;

    /// Bounds `(min, max)` on the values of `f`.
    fn value_range(&self) -> (f64, f64);
}

impl<T: SiteFunction + ?Sized> SiteFunction for Box<T> {
    fn radius(&self) -> usize {
        (**self).radius()
    }

    fn value_at(&self, w: &SymbolWindow, n: i64) -> Result<f64> {
        (**self).value_at(w, n)
    }

    fn sup_norm(&self) -> f64 {
        (**self).sup_norm()
    }

    fn value_range(&self) -> (f64, f64) {
        (**self).value_range()
    }
}

/// `V(n) = f(Tⁿω)` for `n` in `start..start + len`.
pub fn potential<F: SiteFunction + ?Sized>(f: &F, omega: &SymbolWindow, start: i64, len: usize) -> Result<Vec<f64>> {
    let r = f.radius() as i64;
    if len == 0 {
        return Ok(Vec::new());
    }
    omega.require(start - r, start + len as i64 - 1 + r)?;
    (start..start + len as i64).map(|n| f.value_at(omega, n)).collect()
}

#[derive(Debug, Clone)]
pub struct LocallyConstantFn {
    spec: SftSpec,
    radius: usize,
    /// Indexed by the base-ℓ code of the word `ω_{-r..=r}`; NaN marks inadmissible words.
    table: Vec<f64>,
    min: f64,
    max: f64,
}

impl PartialEq for LocallyConstantFn {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec
            && self.radius == other.radius
            && self.table.len() == other.table.len()
            && self.table.iter().zip(&other.table).all(|(a, b)| a.to_bits() == b.to_bits() || a == b)
    }
}

impl LocallyConstantFn {
    /// Build from `(word, value)` pairs. Every admissible word of length
    /// `2·radius + 1` must appear exactly once and no inadmissible word may appear.
    pub fn new(spec: &SftSpec, radius: usize, entries: impl IntoIterator<Item = (Vec<Symbol>, f64)>) -> Result<Self> {
        let len = 2 * radius + 1;
        let size = table_size(spec.alphabet_size(), len)?;
        let mut table = vec![f64::NAN; size];
        let mut seen = vec![false; size];
        for (word, value) in entries {
            if word.len() != len {
                return Err(Error::invalid(format!("word of length {} in a radius-{radius} table", word.len())));
            }
            if !spec.is_admissible(&word)? {
                return Err(Error::invalid(format!("inadmissible word {}", format_word(&word))));
            }
            if !value.is_finite() {
                return Err(Error::invalid(format!("non-finite value for word {}", format_word(&word))));
            }
            let code = word_code(&word, spec.alphabet_size());
            if seen[code] {
                return Err(Error::invalid(format!("word {} listed twice", format_word(&word))));
            }
            seen[code] = true;
            table[code] = value;
        }
        let expected = spec.count_words(len);
        let got = seen.iter().filter(|&&x| x).count() as u128;
        if got != expected {
            return Err(Error::invalid(format!("table lists {got} of the {expected} admissible words")));
        }
        Ok(Self::from_table(spec.clone(), radius, table))
    }

    /// Tabulate `g` over all admissible words of length `2·radius + 1`.
    pub fn from_fn(spec: &SftSpec, radius: usize, g: impl Fn(&[Symbol]) -> f64) -> Result<Self> {
        let len = 2 * radius + 1;
        let size = table_size(spec.alphabet_size(), len)?;
        let mut table = vec![f64::NAN; size];
        for word in spec.admissible_words(len) {
            table[word_code(&word, spec.alphabet_size())] = g(&word);
        }
        Ok(Self::from_table(spec.clone(), radius, table))
    }

    /// `f(ω) = values[ω₀ − 1]`: the radius-0 function given per symbol.
    pub fn per_symbol(spec: &SftSpec, values: &[f64]) -> Result<Self> {
        if values.len() != spec.alphabet_size() {
            return Err(Error::invalid("one value per symbol required"));
        }
        Self::from_fn(spec, 0, |w| values[w[0] as usize - 1])
    }

    pub fn constant(spec: &SftSpec, c: f64) -> Result<Self> {
        Self::from_fn(spec, 0, |_| c)
    }

    fn from_table(spec: SftSpec, radius: usize, table: Vec<f64>) -> Self {
        let (min, max) = table
            .iter()
            .filter(|x| !x.is_nan())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        LocallyConstantFn { spec, radius, table, min, max }
    }

    pub fn spec(&self) -> &SftSpec {
        &self.spec
    }

    /// Value on the cylinder given by the centered word `ω_{-r..=r}`.
    pub fn value_of_word(&self, word: &[Symbol]) -> Result<f64> {
        if word.len() != 2 * self.radius + 1 {
            return Err(Error::invalid("word length does not match radius"));
        }
        if word.iter().any(|&s| s == 0 || s as usize > self.spec.alphabet_size()) {
            return Err(Error::invalid("symbol out of range"));
        }
        let v = self.table[word_code(word, self.spec.alphabet_size())];
        if v.is_nan() {
            return Err(Error::invalid(format!("inadmissible word {}", format_word(word))));
        }
        Ok(v)
    }

    pub fn is_constant(&self) -> bool {
        self.min == self.max
    }

    /// Admissible words with their values, in lexicographic order.
    pub fn entries(&self) -> Vec<(Vec<Symbol>, f64)> {
        self.spec
            .admissible_words(2 * self.radius + 1)
            .into_iter()
            .map(|w| {
                let v = self.table[word_code(&w, self.spec.alphabet_size())];
                (w, v)
            })
            .collect()
    }

    /// Parse the plain-text table format: one `word value` pair per line,
    /// `word` being comma-separated symbols. Blank lines and `#` comments are skipped.
    pub fn parse_table(spec: &SftSpec, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        let mut radius = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let parse_err = |msg: String| Error::Parse { line: i + 1, msg };
            let mut parts = line.split_whitespace();
            let (word, value) = match (parts.next(), parts.next(), parts.next()) {
                (Some(w), Some(v), None) => (w, v),
                _ => return Err(parse_err("expected `word value`".into())),
            };
            let word: Vec<Symbol> = word
                .split(',')
                .map(|s| s.parse::<Symbol>().map_err(|e| parse_err(format!("bad symbol {s:?}: {e}"))))
                .collect::<Result<_>>()?;
            let value: f64 = value.parse().map_err(|e| parse_err(format!("bad value {value:?}: {e}")))?;
            if word.len() % 2 == 0 {
                return Err(parse_err(format!("word length {} is even", word.len())));
            }
            let r = word.len() / 2;
            match radius {
                None => radius = Some(r),
                Some(r0) if r0 != r => return Err(parse_err("words of different lengths".into())),
                _ => {}
            }
            entries.push((word, value));
        }
        let radius = radius.ok_or_else(|| Error::invalid("empty table"))?;
        Self::new(spec, radius, entries)
    }

    pub fn to_table_string(&self) -> String {
        let mut out = String::new();
        for (w, v) in self.entries() {
            let _ = writeln!(out, "{} {}", format_word(&w), v);
        }
        out
    }
}

impl SiteFunction for LocallyConstantFn {
    fn radius(&self) -> usize {
        self.radius
    }

    fn value_at(&self, w: &SymbolWindow, n: i64) -> Result<f64> {
        let r = self.radius as i64;
        let word = w.slice(n - r, n + r)?;
        let v = self.table[word_code(word, self.spec.alphabet_size())];
        if v.is_nan() {
            return Err(Error::invalid(format!("inadmissible word {} in window", format_word(word))));
        }
        Ok(v)
    }

    fn sup_norm(&self) -> f64 {
        self.min.abs().max(self.max.abs())
    }

    fn value_range(&self) -> (f64, f64) {
        (self.min, self.max)
    }
}

fn table_size(l: usize, len: usize) -> Result<usize> {
    let size = (l as u128).checked_pow(len as u32).unwrap_or(u128::MAX);
    if size > MAX_TABLE as u128 {
        return Err(Error::TooManyWords { count: size, cap: MAX_TABLE as u128 });
    }
    Ok(size as usize)
}

fn word_code(word: &[Symbol], l: usize) -> usize {
    word.iter().fold(0usize, |acc, &s| acc * l + (s as usize - 1))
}

pub fn format_word(word: &[Symbol]) -> String {
    word.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",")
}

/// An α-Hölder function written as a finite sum of locally constant layers,
/// layer `k` having radius `k` and `‖f_k‖∞ ≤ tail_bound · e^{-αk}`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoelderFn {
    alpha: f64,
    layers: Vec<LocallyConstantFn>,
    tail_bound: f64,
}

impl HoelderFn {
    pub fn new(alpha: f64, layers: Vec<LocallyConstantFn>, tail_bound: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if layers.is_empty() {
            return Err(Error::invalid("at least one layer required"));
        }
        for (k, layer) in layers.iter().enumerate() {
            if layer.radius != k {
                return Err(Error::invalid(format!("layer {k} has radius {}", layer.radius)));
            }
            if layer.spec != layers[0].spec {
                return Err(Error::invalid("layers live on different subshifts"));
            }
            let cap = tail_bound * (-alpha * k as f64).exp();
            if layer.sup_norm() > cap * (1.0 + 1e-12) {
                return Err(Error::invalid(format!(
                    "layer {k} has sup norm {} above tail_bound·e^(-αk) = {cap}",
                    layer.sup_norm()
                )));
            }
        }
        Ok(HoelderFn { alpha, layers, tail_bound })
    }

    /// View a locally constant function of radius `r` as a single top layer.
    pub fn from_locally_constant(f: &LocallyConstantFn, alpha: f64) -> Result<Self> {
        check_alpha(alpha)?;
        let mut layers = Vec::with_capacity(f.radius + 1);
        for k in 0..f.radius {
            layers.push(LocallyConstantFn::from_fn(&f.spec, k, |_| 0.0)?);
        }
        layers.push(f.clone());
        let tail_bound = f.sup_norm() * (alpha * f.radius as f64).exp();
        HoelderFn::new(alpha, layers, tail_bound)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn layers(&self) -> &[LocallyConstantFn] {
        &self.layers
    }

    /// `Σ_{k ≤ truncation} f_k(Tⁿω)` and a bound on the omitted layers.
    pub fn evaluate_truncated(&self, w: &SymbolWindow, n: i64, truncation: usize) -> Result<(f64, f64)> {
        let top = truncation.min(self.layers.len() - 1);
        let mut sum = 0.0;
        for layer in &self.layers[..=top] {
            sum += layer.value_at(w, n)?;
        }
        let tail = if truncation + 1 >= self.layers.len() {
            0.0
        } else {
            self.tail_bound * (-self.alpha * truncation as f64).exp() / (1.0 - (-self.alpha).exp())
        };
        Ok((sum, tail))
    }

    /// Hölder constant for `d(ω, ω') = e^{-N}`: windows agreeing on `|n| < N`
    /// share layers `k < N`, so `|f(ω) − f(ω')| ≤ 2 Σ_{k≥N} ‖f_k‖∞`.
    pub fn holder_constant(&self) -> f64 {
        2.0 * self.tail_bound / (1.0 - (-self.alpha).exp())
    }
}

impl SiteFunction for HoelderFn {
    fn radius(&self) -> usize {
        self.layers.len() - 1
    }

    fn value_at(&self, w: &SymbolWindow, n: i64) -> Result<f64> {
        self.layers.iter().map(|l| l.value_at(w, n)).sum()
    }

    fn sup_norm(&self) -> f64 {
        self.layers.iter().map(|l| l.sup_norm()).sum()
    }

    fn value_range(&self) -> (f64, f64) {
        self.layers.iter().fold((0.0, 0.0), |(lo, hi), l| {
            let (a, b) = l.value_range();
            (lo + a, hi + b)
        })
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("Hölder exponent {alpha} outside (0, 1]")));
    }
    Ok(())
}

/// How the base dynamics is coded; selects the metric entering `λ₀`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coding {
    /// The subshift metric `e^{-N}`.
    Natural,
    /// Binary coding of the doubling map (metric `2^{-N}`).
    Doubling,
}

/// Global fiber-bunching threshold: `(e^{α/2} − 1)² / 9`, or `(2^{α/2} − 1)² / 9` for the doubling map.
pub fn lambda0(alpha: f64, coding: Coding) -> Result<f64> {
    check_alpha(alpha)?;
    let base: f64 = match coding {
        Coding::Natural => std::f64::consts::E,
        Coding::Doubling => 2.0,
    };
    Ok((base.powf(alpha / 2.0) - 1.0).powi(2) / 9.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BunchingCheck {
    pub bunched: bool,
    /// `λ₀ − ‖f‖∞`.
    pub margin: f64,
}

/// `‖f‖∞ < λ₀(α)` for the natural coding.
pub fn is_globally_fiber_bunched(f: &HoelderFn) -> BunchingCheck {
    let l0 = lambda0(f.alpha, Coding::Natural).expect("alpha validated at construction");
    let margin = l0 - f.sup_norm();
    BunchingCheck { bunched: margin > 0.0, margin }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TorusMap {
    /// `x ↦ 2x mod 1` on ℝ/ℤ.
    Doubling,
    /// `(x, y) ↦ (2x + y, x + y) mod 1` on (ℝ/ℤ)².
    Cat,
}

/// Lipschitz observables on the torus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TorusObservable {
    /// `cos(2πx)`.
    Cos,
    /// `cos(2πx) + cos(2πy)`; reduces to `cos(2πx) + 1` on the circle.
    CosSum,
    /// `x(1 − x)`, continuous on the circle.
    Tent,
}

impl TorusObservable {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        use std::f64::consts::TAU;
        match self {
            TorusObservable::Cos => (TAU * p[0]).cos(),
            TorusObservable::CosSum => (TAU * p[0]).cos() + (TAU * p[1]).cos(),
            TorusObservable::Tent => p[0] * (1.0 - p[0]),
        }
    }

    pub fn sup_norm(&self) -> f64 {
        match self {
            TorusObservable::Cos => 1.0,
            TorusObservable::CosSum => 2.0,
            TorusObservable::Tent => 0.25,
        }
    }
}

/// Orbits longer than this on the cat map are pseudo-orbits in double precision
/// (errors grow by the expanding eigenvalue ≈ 2.618 per step).
pub const CAT_ORBIT_CAP: usize = 1000;

/// A hyperbolic toral map with the potential `V(n) = amplitude · g(Tⁿx)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TorusSystem {
    pub map: TorusMap,
    pub observable: TorusObservable,
    pub amplitude: f64,
}

impl TorusSystem {
    pub fn step(&self, p: [f64; 2]) -> [f64; 2] {
        match self.map {
            TorusMap::Doubling => [(2.0 * p[0]).rem_euclid(1.0), 0.0],
            TorusMap::Cat => [(2.0 * p[0] + p[1]).rem_euclid(1.0), (p[0] + p[1]).rem_euclid(1.0)],
        }
    }

    pub fn observe(&self, p: [f64; 2]) -> f64 {
        self.amplitude * self.observable.eval(p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.amplitude.abs() * self.observable.sup_norm()
    }

    /// Potential along a Lebesgue-typical orbit of length `len`.
    ///
    /// The doubling map is run on a random binary expansion so that every
    /// point carries 53 fresh bits; plain floating-point doubling would reach
    /// the fixed point 0 after about 53 steps. The cat map is iterated in
    /// double precision.
    pub fn sample_potential(&self, len: usize, rng: &mut impl Rng) -> Vec<f64> {
        match self.map {
            TorusMap::Doubling => {
                let mut bits: u64 = rng.gen();
                let mut out = Vec::with_capacity(len);
                let mut pool: u64 = 0;
                let mut left = 0u32;
                for _ in 0..len {
                    let x = (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
                    out.push(self.observe([x, 0.0]));
                    if left == 0 {
                        pool = rng.gen();
                        left = 64;
                    }
                    bits = (bits << 1) | (pool >> 63);
                    pool <<= 1;
                    left -= 1;
                }
                out
            }
            TorusMap::Cat => {
                let p0 = [rng.gen::<f64>(), rng.gen::<f64>()];
                torus_orbit(self, p0, len)
            }
        }
    }
}

/// `V(n) = amplitude · g(Tⁿx₀)` for `0 ≤ n < len`, iterating in double precision.
pub fn torus_orbit(sys: &TorusSystem, x0: [f64; 2], len: usize) -> Vec<f64> {
    let mut p = [x0[0].rem_euclid(1.0), x0[1].rem_euclid(1.0)];
    if sys.map == TorusMap::Doubling {
        p[1] = 0.0;
    }
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        out.push(sys.observe(p));
        p = sys.step(p);
    }
    out
}

/// A rational torus point `(num[0]/den, num[1]/den)`, iterated exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalPoint {
    pub num: [u64; 2],
    pub den: u64,
}

impl RationalPoint {
    pub fn new(num: [u64; 2], den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("zero denominator"));
        }
        Ok(RationalPoint { num: [num[0] % den, num[1] % den], den })
    }

    pub fn step(&self, map: TorusMap) -> Self {
        let q = self.den as u128;
        let (x, y) = (self.num[0] as u128, self.num[1] as u128);
        let num = match map {
            TorusMap::Doubling => [(2 * x) % q, 0],
            TorusMap::Cat => [(2 * x + y) % q, (x + y) % q],
        };
        RationalPoint { num: [num[0] as u64, num[1] as u64], den: self.den }
    }

    pub fn to_f64(&self) -> [f64; 2] {
        [self.num[0] as f64 / self.den as f64, self.num[1] as f64 / self.den as f64]
    }
}

/// Exact orbit `x₀, Tx₀, …` of length `len`.
pub fn rational_orbit(map: TorusMap, x0: RationalPoint, len: usize) -> Vec<RationalPoint> {
    std::iter::successors(Some(x0), |p| Some(p.step(map))).take(len).collect()
}

/// Parse a comma-separated symbol word such as `1,2,1`.
pub fn parse_word(s: &str) -> std::result::Result<Vec<Symbol>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<Symbol>().map_err(|e| format!("bad symbol {t:?}: {e}")))
        .collect()
}
