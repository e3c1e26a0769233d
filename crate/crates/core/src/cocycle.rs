//! Schrödinger cocycles `A^E(ω) = [[E − f(ω), −1], [1, 0]]`, their products,
//! canonical holonomies and the reduction to past-dependent cocycles.

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::sampling::{potential, SiteFunction};
use crate::symbolic::{wedge, SymbolWindow};

/// One transfer step `[[E − v, −1], [1, 0]]`; its determinant is exactly 1.
pub fn schrodinger_step(energy: f64, v: f64) -> Mat2 {
    Mat2::new(energy - v, -1.0, 1.0, 0.0)
}

/// Norm of `[[x, −1], [1, 0]]`: `(|x| + sqrt(x² + 4)) / 2`.
pub fn step_norm(x: f64) -> f64 {
    (x.abs() + (x * x + 4.0).sqrt()) / 2.0
}

/// A matrix `e^σ · U` with `‖U‖ = 1`, for products whose norm would overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMatrix {
    pub unit: Mat2,
    pub log_scale: f64,
}

impl ScaledMatrix {
    pub fn identity() -> Self {
        ScaledMatrix { unit: Mat2::IDENTITY, log_scale: 0.0 }
    }

    pub fn from_matrix(m: Mat2) -> Self {
        let s = m.norm();
        ScaledMatrix { unit: m.scale(1.0 / s), log_scale: s.ln() }
    }

    /// `e^σ · U` as a plain matrix (overflows for large σ).
    pub fn matrix(&self) -> Mat2 {
        self.unit.scale(self.log_scale.exp())
    }

    /// `log ‖e^σ U‖ = σ`.
    pub fn log_norm(&self) -> f64 {
        self.log_scale
    }

    /// `det(e^σ U) = e^{2σ} det U`. Only informative while `e^{-2σ}` is well
    /// above machine precision relative to the entries of `U`.
    pub fn det(&self) -> f64 {
        self.unit.det() * (2.0 * self.log_scale).exp()
    }

    /// `m · self`, renormalized.
    pub fn left_mul(&mut self, m: &Mat2) {
        let p = *m * self.unit;
        let s = p.norm();
        self.unit = p.scale(1.0 / s);
        self.log_scale += s.ln();
    }

    pub fn compose(&self, right: &ScaledMatrix) -> ScaledMatrix {
        let p = self.unit * right.unit;
        let s = p.norm();
        ScaledMatrix { unit: p.scale(1.0 / s), log_scale: self.log_scale + right.log_scale + s.ln() }
    }

    /// Inverse of a unimodular product: `(e^σ U)^{-1} = e^σ adj(U)` because `det U = e^{-2σ}`.
    pub fn inverse_unimodular(&self) -> ScaledMatrix {
        ScaledMatrix { unit: self.unit.adjugate(), log_scale: self.log_scale }
    }

    /// Entry `(i, j)` (0-based) as `(sign, log|value|)`; sign 0 for an exact zero.
    pub fn entry_log(&self, i: usize, j: usize) -> (f64, f64) {
        let x = match (i, j) {
            (0, 0) => self.unit.a,
            (0, 1) => self.unit.b,
            (1, 0) => self.unit.c,
            _ => self.unit.d,
        };
        if x == 0.0 {
            (0.0, f64::NEG_INFINITY)
        } else {
            (x.signum(), x.abs().ln() + self.log_scale)
        }
    }
}

/// `A(V[n−1]) ⋯ A(V[0])` renormalized at every step.
pub fn transfer_product(potential: &[f64], energy: f64) -> ScaledMatrix {
    let mut acc = ScaledMatrix::identity();
    for &v in potential {
        acc.left_mul(&schrodinger_step(energy, v));
    }
    acc
}

/// `log ‖A(V[n−1]) ⋯ A(V[0])‖` without materializing the unit factor.
pub fn log_norm_product(potential: &[f64], energy: f64) -> f64 {
    transfer_product(potential, energy).log_scale
}

/// `A_n(ω)`: the forward product for `n ≥ 1`, the identity for `n = 0`, and
/// `[A_{−n}(Tⁿω)]^{-1}` for `n ≤ −1`.
pub fn cocycle_product<F: SiteFunction + ?Sized>(f: &F, omega: &SymbolWindow, energy: f64, n: i64) -> Result<ScaledMatrix> {
    match n {
        0 => Ok(ScaledMatrix::identity()),
        n if n > 0 => Ok(transfer_product(&potential(f, omega, 0, n as usize)?, energy)),
        n => {
            let v = potential(f, omega, n, (-n) as usize)?;
            Ok(transfer_product(&v, energy).inverse_unimodular())
        }
    }
}

/// `g_n(ω, E) = (1/n) log ‖A_n^E(ω)‖`.
pub fn g_n<F: SiteFunction + ?Sized>(f: &F, omega: &SymbolWindow, energy: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("g_n needs n ≥ 1"));
    }
    Ok(cocycle_product(f, omega, energy, n as i64)?.log_scale / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyInterval {
    pub lo: f64,
    pub hi: f64,
}

impl EnergyInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::invalid(format!("energy interval needs lo < hi, got [{lo}, {hi}]")));
        }
        Ok(EnergyInterval { lo, hi })
    }

    /// `[−3 − ‖f‖∞, 3 + ‖f‖∞]`, which contains the almost-sure spectrum `[−2 − ‖f‖∞, 2 + ‖f‖∞]`.
    pub fn default_for(sup_norm: f64) -> Self {
        EnergyInterval { lo: -3.0 - sup_norm, hi: 3.0 + sup_norm }
    }

    pub fn contains(&self, e: f64) -> bool {
        self.lo <= e && e <= self.hi
    }

    /// `count ≥ 2` equally spaced points including both endpoints.
    pub fn grid(&self, count: usize) -> Vec<f64> {
        if count < 2 {
            return vec![self.lo];
        }
        let h = (self.hi - self.lo) / (count - 1) as f64;
        (0..count).map(|i| if i + 1 == count { self.hi } else { self.lo + h * i as f64 }).collect()
    }
}

/// `Γ = sup ‖A^E(ω)‖` over `E ∈ I` and all values of `f`: the step norm is
/// increasing in `|E − v|`, so the sup sits at an interval endpoint and a value extreme.
pub fn gamma_sup<F: SiteFunction + ?Sized>(f: &F, interval: &EnergyInterval) -> f64 {
    let (vmin, vmax) = f.value_range();
    let x = (interval.hi - vmin).abs().max((interval.lo - vmax).abs());
    step_norm(x)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BunchingCertificate {
    /// Least `N` with `max_ω ‖A_N(ω)‖² < e^{αN}` at every tested energy.
    pub n: usize,
    /// `e^{αN} − max ‖A_N‖²` (minimum over energies).
    pub margin: f64,
}

/// Nodes the word enumeration may visit before giving up.
pub const WORD_CAP: u128 = 10_000_000;

/// Search `N = 1..=n_max` for `‖A_N(ω)‖² < e^{αN}` uniformly over all
/// admissible words and all `energies`.
///
/// `A_N` depends on the word `ω_{-r..=N−1+r}`, so the sup over ω is a max over
/// finitely many words, enumerated depth-first. Children producing the same
/// potential value are merged when the radius is 0.
pub fn fiber_bunching_certificate(
    f: &crate::sampling::LocallyConstantFn,
    alpha: f64,
    energies: &[f64],
    n_max: usize,
) -> Result<Option<BunchingCertificate>> {
    if energies.is_empty() {
        return Err(Error::invalid("no energies to certify"));
    }
    let mut budget = WORD_CAP;
    let mut worst = vec![0.0f64; n_max + 1];
    for &e in energies {
        let per_depth = max_norm_sq_by_depth(f, e, n_max, &mut budget)?;
        for (w, p) in worst.iter_mut().zip(per_depth) {
            *w = w.max(p);
        }
    }
    for n in 1..=n_max {
        let bound = (alpha * n as f64).exp();
        if worst[n] < bound {
            return Ok(Some(BunchingCertificate { n, margin: bound - worst[n] }));
        }
    }
    Ok(None)
}

/// `max_ω ‖A_N^E(ω)‖²` for every `N ≤ n_max` (index 0 unused).
fn max_norm_sq_by_depth(
    f: &crate::sampling::LocallyConstantFn,
    energy: f64,
    n_max: usize,
    budget: &mut u128,
) -> Result<Vec<f64>> {
    use crate::symbolic::Symbol;
    let spec = f.spec().clone();
    let r = f.radius();
    let mut out = vec![0.0f64; n_max + 1];

    // Prefixes of length 2r (the context before the first site).
    let prefixes = spec.admissible_words(2 * r);
    struct Ctx<'a> {
        f: &'a crate::sampling::LocallyConstantFn,
        spec: &'a crate::symbolic::SftSpec,
        energy: f64,
        n_max: usize,
        r: usize,
    }
    fn dfs(ctx: &Ctx, word: &mut Vec<Symbol>, product: Mat2, depth: usize, out: &mut [f64], budget: &mut u128) -> Result<()> {
        if depth == ctx.n_max {
            return Ok(());
        }
        let last = word.last().copied();
        let mut seen_values: Vec<f64> = Vec::new();
        for s in ctx.spec.symbols() {
            if let Some(l) = last {
                if !ctx.spec.allowed(l, s) {
                    continue;
                }
            }
            word.push(s);
            let v = ctx.f.value_of_word(&word[word.len() - (2 * ctx.r + 1)..])?;
            if ctx.r == 0 {
                if seen_values.contains(&v) {
                    word.pop();
                    continue;
                }
                seen_values.push(v);
            }
            if *budget == 0 {
                return Err(Error::TooManyWords { count: WORD_CAP + 1, cap: WORD_CAP });
            }
            *budget -= 1;
            let p = schrodinger_step(ctx.energy, v) * product;
            let nsq = p.norm().powi(2);
            out[depth + 1] = out[depth + 1].max(nsq);
            dfs(ctx, word, p, depth + 1, out, budget)?;
            word.pop();
        }
        Ok(())
    }
    let ctx = Ctx { f, spec: &spec, energy, n_max, r };
    for prefix in prefixes {
        let mut word = prefix;
        dfs(&ctx, &mut word, Mat2::IDENTITY, 0, &mut out, budget)?;
    }
    Ok(out)
}

/// A canonical holonomy and how it was reached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Holonomy {
    pub matrix: Mat2,
    /// Smallest `n` from which the iterates `h_n` were bit-for-bit constant.
    pub stabilized_at: usize,
    /// Last Cauchy increment `‖h_{n+1} − h_n‖`.
    pub achieved: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Direction {
    Stable,
    Unstable,
}

/// `H^s_{ω,ω'} = lim A_n(ω')^{-1} A_n(ω)` for `ω'` in the local stable set of `ω`
/// (equal coordinates `n ≥ 0`).
pub fn stable_holonomy<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    omega_prime: &SymbolWindow,
    energy: f64,
    tol: f64,
    n_cap: usize,
) -> Result<Holonomy> {
    holonomy(f, omega, omega_prime, energy, tol, n_cap, Direction::Stable)
}

/// `H^u_{ω,ω'} = lim A_{−n}(ω')^{-1} A_{−n}(ω)` for `ω'` in the local unstable set
/// of `ω` (equal coordinates `n ≤ 0`).
pub fn unstable_holonomy<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    omega_prime: &SymbolWindow,
    energy: f64,
    tol: f64,
    n_cap: usize,
) -> Result<Holonomy> {
    holonomy(f, omega, omega_prime, energy, tol, n_cap, Direction::Unstable)
}

fn holonomy<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    omega_prime: &SymbolWindow,
    energy: f64,
    tol: f64,
    n_cap: usize,
    dir: Direction,
) -> Result<Holonomy> {
    let r = f.radius() as i64;
    let lo = omega.start().max(omega_prime.start());
    let hi = omega.end().min(omega_prime.end());
    // coordinates where the two points must agree, and the visible differences
    let (shared, differing): (Vec<i64>, Vec<i64>) = match dir {
        Direction::Stable => ((0..=hi).collect(), (lo..0).filter(|&c| omega.get(c) != omega_prime.get(c)).collect()),
        Direction::Unstable => ((lo..=0).collect(), (1..=hi).filter(|&c| omega.get(c) != omega_prime.get(c)).collect()),
    };
    if lo > 0 || hi < 0 {
        return Err(Error::invalid("both windows must cover coordinate 0"));
    }
    if shared.iter().any(|&c| omega.get(c) != omega_prime.get(c)) {
        let which = if dir == Direction::Stable { "stable" } else { "unstable" };
        return Err(Error::invalid(format!("points are not in the same local {which} set")));
    }
    // Factor k (A(T^kω) forward, A(T^{-k}ω) backward) sees coordinate c iff
    // |c − (±k)| ≤ r; past the last such k the factors coincide.
    let must_reach = match dir {
        Direction::Stable => differing.iter().map(|&c| c + r + 1).max().unwrap_or(0),
        Direction::Unstable => differing.iter().map(|&c| r - c).max().unwrap_or(0),
    }
    .max(0) as usize;

    let factor = |w: &SymbolWindow, k: usize| -> Result<Mat2> {
        let site = match dir {
            Direction::Stable => k as i64,
            Direction::Unstable => -(k as i64) - 1,
        };
        Ok(schrodinger_step(energy, f.value_at(w, site)?))
    };

    // h_n = left_n · right_n
    let mut left = Mat2::IDENTITY;
    let mut right = Mat2::IDENTITY;
    let mut h = Mat2::IDENTITY;
    let mut stabilized_at = 0usize;
    let mut prev_increment = f64::INFINITY;
    let mut increment = f64::INFINITY;
    for n in 0..n_cap {
        let fw = factor(omega, n)?;
        let fp = factor(omega_prime, n)?;
        let (next_left, middle, next_right) = match dir {
            Direction::Stable => (left * fp.adjugate(), fp.adjugate() * fw, fw * right),
            Direction::Unstable => (left * fp, fp * fw.adjugate(), fw.adjugate() * right),
        };
        let next_h = if middle == Mat2::IDENTITY { h } else { left * middle * right };
        increment = next_h.sub(&h).norm();
        if next_h != h {
            stabilized_at = n + 1;
        }
        h = next_h;
        left = next_left;
        right = next_right;
        if n + 1 > must_reach && increment < tol {
            return Ok(Holonomy { matrix: h, stabilized_at, achieved: increment });
        }
        if n > must_reach && increment > prev_increment && n + 1 == n_cap {
            break;
        }
        prev_increment = increment;
    }
    if increment <= prev_increment && increment.is_finite() {
        Ok(Holonomy { matrix: h, stabilized_at, achieved: increment })
    } else {
        Err(Error::NotConverged { iterations: n_cap, residual: increment })
    }
}

/// The cocycle conjugated by unstable holonomies so that it depends only on the past.
///
/// With `φ(ω) = ω ∧ ω^{(ω₀)}` (past of ω, future of a fixed reference point)
/// the reduced step arriving at `ω` is
/// `R(ω) = A(T^{-1}φ(ω)) · H^u_{φ(T^{-1}ω), T^{-1}φ(ω)}`,
/// a function of `ω_{≤0}` only, and `Ã_n(ω) = R(Tⁿω) ⋯ R(Tω)`.
pub struct ReducedCocycle<'a, F: SiteFunction + ?Sized> {
    f: &'a F,
    energy: f64,
    references: Vec<SymbolWindow>,
    tol: f64,
    n_cap: usize,
}

impl<'a, F: SiteFunction + ?Sized> ReducedCocycle<'a, F> {
    /// `references[j − 1]` is the reference point for symbol `j`; it must
    /// carry `j` at coordinate 0 and cover `[−depth, depth]` for a depth of
    /// at least `2r + 2`.
    pub fn new(f: &'a F, energy: f64, references: Vec<SymbolWindow>) -> Result<Self> {
        let need = 2 * f.radius() as i64 + 2;
        for (i, w) in references.iter().enumerate() {
            if w.get(0) != Some((i + 1) as crate::symbolic::Symbol) {
                return Err(Error::invalid(format!("reference {} does not carry symbol {} at 0", i + 1, i + 1)));
            }
            w.require(-need, need)?;
        }
        Ok(ReducedCocycle { f, energy, references, tol: 1e-10, n_cap: 1000 })
    }

    /// Lexicographically minimal references from the subshift.
    pub fn with_minimal_references(f: &'a F, spec: &crate::symbolic::SftSpec, energy: f64) -> Result<Self> {
        let depth = 2 * f.radius() + 2;
        let refs = spec.symbols().map(|j| spec.minimal_extension(j, depth)).collect::<Result<_>>()?;
        Self::new(f, energy, refs)
    }

    fn reference(&self, omega: &SymbolWindow) -> Result<&SymbolWindow> {
        let s = omega.get(0).ok_or_else(|| Error::invalid("window must cover coordinate 0"))?;
        Ok(&self.references[s as usize - 1])
    }

    /// `φ(ω) = ω ∧ ω^{(ω₀)}`.
    pub fn phi(&self, omega: &SymbolWindow) -> Result<SymbolWindow> {
        wedge(omega, self.reference(omega)?)
    }

    /// Conjugacy `B(ω) = H^u_{ω, φ(ω)}`.
    pub fn conjugacy(&self, omega: &SymbolWindow) -> Result<Mat2> {
        let p = self.phi(omega)?;
        Ok(unstable_holonomy(self.f, omega, &p, self.energy, self.tol, self.n_cap)?.matrix)
    }

    /// `R(ω)`, the reduced step from `T^{-1}ω` to `ω`; depends only on `ω_{≤0}`.
    pub fn step_into(&self, omega: &SymbolWindow) -> Result<Mat2> {
        let phi = self.phi(omega)?;
        let back_phi = phi.shift(-1);
        let back = omega.shift(-1);
        let phi_back = self.phi(&back)?;
        let h = unstable_holonomy(self.f, &phi_back, &back_phi, self.energy, self.tol, self.n_cap)?;
        let a = schrodinger_step(self.energy, self.f.value_at(&phi, -1)?);
        Ok(a * h.matrix)
    }

    /// `Ã_n(ω) = R(Tⁿω) ⋯ R(Tω)`.
    pub fn product(&self, omega: &SymbolWindow, n: usize) -> Result<ScaledMatrix> {
        let mut acc = ScaledMatrix::identity();
        for k in 1..=n as i64 {
            acc.left_mul(&self.step_into(&omega.shift(k))?);
        }
        Ok(acc)
    }

    pub fn g_n(&self, omega: &SymbolWindow, n: usize) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("g_n needs n ≥ 1"));
        }
        Ok(self.product(omega, n)?.log_scale / n as f64)
    }
}

/// `h_n(ω) = Σ_{k=0}^{K} [g_n(T^kω) − g_n(T^kφ(ω))]` with `φ(ω) = ω^{(ω₀)} ∧ ω`
/// (reference past, future of ω), together with a bound on the omitted terms.
///
/// For a function of radius `r` the terms vanish identically for `k ≥ r`, so
/// the tail bound is zero once `K ≥ r − 1`; otherwise each omitted term is
/// bounded by `log Γ`.
pub fn h_n_reduction<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    energy: f64,
    n: usize,
    terms: usize,
    references: &[SymbolWindow],
) -> Result<(f64, f64)> {
    let s0 = omega.get(0).ok_or_else(|| Error::invalid("window must cover coordinate 0"))?;
    let reference = references
        .get(s0 as usize - 1)
        .ok_or_else(|| Error::invalid(format!("no reference for symbol {s0}")))?;
    let phi = wedge(reference, omega)?;
    let mut sum = 0.0;
    for k in 0..=terms as i64 {
        sum += g_n(f, &omega.shift(k), energy, n)? - g_n(f, &phi.shift(k), energy, n)?;
    }
    let r = f.radius();
    let omitted = r.saturating_sub(terms + 1);
    let tail = if omitted == 0 {
        0.0
    } else {
        let (vmin, vmax) = f.value_range();
        let gamma = step_norm((energy - vmin).abs().max((energy - vmax).abs()));
        omitted as f64 * gamma.ln()
    };
    Ok((sum, tail))
}

/// `g_n⁺(ω) = g_n(ω) + h_n(Tω) − h_n(ω)`, constant on local stable sets.
pub fn g_n_plus<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    energy: f64,
    n: usize,
    terms: usize,
    references: &[SymbolWindow],
) -> Result<(f64, f64)> {
    let (h0, t0) = h_n_reduction(f, omega, energy, n, terms, references)?;
    let (h1, t1) = h_n_reduction(f, &omega.shift(1), energy, n, terms, references)?;
    Ok((g_n(f, omega, energy, n)? + h1 - h0, t0 + t1))
}
