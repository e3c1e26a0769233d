//! Projective dynamics on `Ω × ℝP¹`: Cesàro averages, a discretized
//! u-state and the Furstenberg integral for `L(E)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;

use crate::cocycle::{schrodinger_step, ScaledMatrix};
use crate::error::{Error, Result};
use crate::linalg::{normalize_angle, Mat2};
use crate::measure::ShiftMeasure;
use crate::rng::{replica_seed, rng_from_seed};
use crate::sampling::{format_word, SiteFunction};
use crate::symbolic::{Symbol, SymbolWindow};

/// A direction in `ℝP¹`, stored as an angle in `[0, π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectivePoint {
    theta: f64,
}

impl ProjectivePoint {
    pub fn new(theta: f64) -> Self {
        ProjectivePoint { theta: normalize_angle(theta) }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn vector(&self) -> [f64; 2] {
        [self.theta.cos(), self.theta.sin()]
    }

    /// Distance in `ℝP¹` (angles mod π).
    pub fn distance(&self, other: &ProjectivePoint) -> f64 {
        let d = (self.theta - other.theta).abs();
        d.min(PI - d)
    }
}

/// Direction of `M (cos θ, sin θ)`.
pub fn projective_action(m: &Mat2, p: ProjectivePoint) -> ProjectivePoint {
    let v = m.apply(p.vector());
    ProjectivePoint::new(v[1].atan2(v[0]))
}

/// A locally constant `SL(2,ℝ)` cocycle.
pub trait MatrixCocycle: Send + Sync {
    /// `A(Tⁿω)` depends on `ω_{n−r..=n+r}`.
    fn radius(&self) -> usize;
    fn matrix_at(&self, w: &SymbolWindow, n: i64) -> Result<Mat2>;
}

/// `A^E(ω) = [[E − f(ω), −1], [1, 0]]`.
pub struct SchrodingerCocycle<'a, F: SiteFunction + ?Sized> {
    pub f: &'a F,
    pub energy: f64,
}

impl<'a, F: SiteFunction + ?Sized> SchrodingerCocycle<'a, F> {
    pub fn new(f: &'a F, energy: f64) -> Self {
        SchrodingerCocycle { f, energy }
    }
}

impl<F: SiteFunction + ?Sized> MatrixCocycle for SchrodingerCocycle<'_, F> {
    fn radius(&self) -> usize {
        self.f.radius()
    }

    fn matrix_at(&self, w: &SymbolWindow, n: i64) -> Result<Mat2> {
        Ok(schrodinger_step(self.energy, self.f.value_at(w, n)?))
    }
}

/// The same matrix over every point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantCocycle(pub Mat2);

impl MatrixCocycle for ConstantCocycle {
    fn radius(&self) -> usize {
        0
    }

    fn matrix_at(&self, _w: &SymbolWindow, _n: i64) -> Result<Mat2> {
        Ok(self.0)
    }
}

/// Binned fiber measures `m_c` on `ℝP¹`, one per past class `c`: an
/// admissible word of length `depth` occupying coordinates `1 − depth..=0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMeasure {
    grid: usize,
    depth: usize,
    classes: Vec<Vec<Symbol>>,
    weights: Vec<Vec<f64>>,
}

impl ProjectiveMeasure {
    pub fn new(grid: usize, depth: usize, classes: Vec<Vec<Symbol>>, weights: Vec<Vec<f64>>) -> Result<Self> {
        if grid == 0 || depth == 0 {
            return Err(Error::invalid("grid and depth must be positive"));
        }
        if classes.len() != weights.len() {
            return Err(Error::invalid("one weight vector per class is required"));
        }
        for (c, w) in classes.iter().zip(&weights) {
            if c.len() != depth || w.len() != grid {
                return Err(Error::invalid(format!("class {} has the wrong shape", format_word(c))));
            }
            let s: f64 = w.iter().sum();
            if w.iter().any(|&x| !(x >= 0.0)) || (s - 1.0).abs() > 1e-10 {
                return Err(Error::invalid(format!("weights of class {} do not form a distribution", format_word(c))));
            }
        }
        Ok(ProjectiveMeasure { grid, depth, classes, weights })
    }

    /// Every class uniform.
    pub fn uniform(grid: usize, depth: usize, classes: Vec<Vec<Symbol>>) -> Result<Self> {
        let w = vec![vec![1.0 / grid as f64; grid]; classes.len()];
        Self::new(grid, depth, classes, w)
    }

    pub fn grid(&self) -> usize {
        self.grid
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn classes(&self) -> &[Vec<Symbol>] {
        &self.classes
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn class_index(&self, word: &[Symbol]) -> Option<usize> {
        self.classes.iter().position(|c| c == word)
    }

    pub fn bin_of(&self, p: ProjectivePoint) -> usize {
        bin_of(self.grid, p.theta())
    }

    pub fn bin_center(&self, b: usize) -> ProjectivePoint {
        ProjectivePoint::new(bin_center(self.grid, b))
    }

    /// `max_c ½ Σ_b |m_c(b) − m'_c(b)|`.
    pub fn total_variation(&self, other: &ProjectiveMeasure) -> Result<f64> {
        if self.grid != other.grid || self.classes != other.classes {
            return Err(Error::invalid("measures live on different grids or classes"));
        }
        Ok(max_tv(&self.weights, &other.weights))
    }

    /// `Σ_c μ(c) m_c`, the projection to `ℝP¹`.
    pub fn marginal(&self, measure: &ShiftMeasure) -> Vec<f64> {
        let mut out = vec![0.0; self.grid];
        for (c, w) in self.classes.iter().zip(&self.weights) {
            let mass = measure.cylinder_mass(c, 1 - self.depth as i64);
            for (o, x) in out.iter_mut().zip(w) {
                *o += mass * x;
            }
        }
        out
    }

    /// CSV with header `class_word,bin_index,weight`; zero weights are kept.
    /// Words longer than one symbol contain commas and are quoted.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("class_word,bin_index,weight\n");
        for (c, w) in self.classes.iter().zip(&self.weights) {
            let word = if c.len() > 1 { format!("\"{}\"", format_word(c)) } else { format_word(c) };
            for (b, x) in w.iter().enumerate() {
                let _ = writeln!(s, "{word},{b},{x}");
            }
        }
        s
    }
}

fn bin_of(grid: usize, theta: f64) -> usize {
    ((normalize_angle(theta) / PI * grid as f64) as usize).min(grid - 1)
}

fn bin_center(grid: usize, b: usize) -> f64 {
    (b as f64 + 0.5) * PI / grid as f64
}

fn max_tv(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| 0.5 * x.iter().zip(y).map(|(p, q)| (p - q).abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Cylinder frequency of a word along sampled orbits against its measure.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderFrequency {
    pub word: Vec<Symbol>,
    pub frequency: f64,
    pub expected: f64,
    /// Standard error across independent samples.
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CesaroReport {
    pub measure: ProjectiveMeasure,
    /// Visits per class (classes never visited keep a uniform vector).
    pub visits: Vec<u64>,
    pub cylinders: Vec<CylinderFrequency>,
}

/// Monte Carlo estimate of `(1/n) Σ_{k<n} (F^E)^k_* m` where `m` is the
/// conditional measure on the local unstable set of `past` lifted by the
/// Dirac mass at `v`. Angles are binned by the class (last `depth` symbols)
/// of the base point; base cylinders of length `1..=3` are tallied for
/// comparison with the measure.
#[allow(clippy::too_many_arguments)]
pub fn cesaro_orbit_average<C: MatrixCocycle + ?Sized>(
    measure: &ShiftMeasure,
    cocycle: &C,
    past: &SymbolWindow,
    v: ProjectivePoint,
    n: usize,
    samples: usize,
    depth: usize,
    grid: usize,
    seed: u64,
) -> Result<CesaroReport> {
    let spec = measure.spec();
    let r = cocycle.radius() as i64;
    if n == 0 || samples == 0 || depth == 0 || grid == 0 {
        return Err(Error::invalid("n, samples, depth and grid must be positive"));
    }
    past.require(-(depth as i64 - 1).max(r), 0)?;
    let classes = spec.admissible_words(depth);
    let l = spec.alphabet_size();
    let index = class_lookup(&classes, l);
    let words: Vec<Vec<Symbol>> = (1..=3).flat_map(|k| spec.admissible_words(k)).collect();

    struct Tally {
        bins: Vec<Vec<f64>>,
        visits: Vec<u64>,
        cyl: Vec<f64>,
    }
    let tallies: Vec<Tally> = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Tally> {
            let mut rng = rng_from_seed(replica_seed(seed, i as u64));
            let omega = measure.sample_unstable_fiber_with(past, n + r as usize + 3, &mut rng)?;
            let mut t = Tally { bins: vec![vec![0.0; grid]; classes.len()], visits: vec![0; classes.len()], cyl: vec![0.0; words.len()] };
            let mut p = v;
            for k in 0..n as i64 {
                let cw = omega.slice(k + 1 - depth as i64, k)?;
                let ci = index[word_code(cw, l)].ok_or_else(|| Error::invalid("orbit left the subshift"))?;
                t.bins[ci][bin_of(grid, p.theta())] += 1.0;
                t.visits[ci] += 1;
                for (wi, w) in words.iter().enumerate() {
                    if omega.slice(k, k + w.len() as i64 - 1)? == w.as_slice() {
                        t.cyl[wi] += 1.0;
                    }
                }
                p = projective_action(&cocycle.matrix_at(&omega, k)?, p);
            }
            for x in t.cyl.iter_mut() {
                *x /= n as f64;
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;

    let mut bins = vec![vec![0.0; grid]; classes.len()];
    let mut visits = vec![0u64; classes.len()];
    for t in &tallies {
        for (acc, b) in bins.iter_mut().zip(&t.bins) {
            for (x, y) in acc.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in visits.iter_mut().zip(&t.visits) {
            *a += b;
        }
    }
    for (w, &count) in bins.iter_mut().zip(&visits) {
        if count == 0 {
            w.iter_mut().for_each(|x| *x = 1.0 / grid as f64);
        } else {
            w.iter_mut().for_each(|x| *x /= count as f64);
        }
    }
    let cylinders = words
        .iter()
        .enumerate()
        .map(|(wi, w)| {
            let per_sample: Vec<f64> = tallies.iter().map(|t| t.cyl[wi]).collect();
            let (frequency, std_error) = crate::stats::mean_and_se(&per_sample);
            CylinderFrequency { word: w.clone(), frequency, expected: measure.cylinder_mass(w, 0), std_error }
        })
        .collect();
    Ok(CesaroReport { measure: ProjectiveMeasure::new(grid, depth, classes, bins)?, visits, cylinders })
}

fn word_code(word: &[Symbol], l: usize) -> usize {
    word.iter().fold(0usize, |acc, &s| acc * l + (s as usize - 1))
}

fn class_lookup(classes: &[Vec<Symbol>], l: usize) -> Vec<Option<usize>> {
    let size = classes.first().map_or(1, |c| l.pow(c.len() as u32));
    let mut index = vec![None; size];
    for (i, c) in classes.iter().enumerate() {
        index[word_code(c, l)] = Some(i);
    }
    index
}

/// Largest table of past classes the u-state solver accepts.
pub const MAX_CLASSES: usize = 1 << 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UStateOptions {
    pub depth: usize,
    pub grid: usize,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for UStateOptions {
    fn default() -> Self {
        UStateOptions { depth: 6, grid: 720, max_iters: 20_000, tol: 1e-10 }
    }
}

/// One predecessor of a class: the step from `ω` (class `pred`) to `Tω`.
struct Edge {
    pred: usize,
    weight: f64,
    matrix: Mat2,
    targets: Vec<u32>,
}

/// The averaged transfer operator on binned class-conditional measures.
///
/// For `Tω` of class `c' = (b₁…b_D)`, the predecessors are the classes
/// `(a, b₁…b_{D−1})` weighted by the reversed chain `π_a P[a,b₁] / π_{b₁}`.
/// The step matrix is `A(T^{−s}ω)` with `s = max(r − 1, 0)`: this shifted
/// cocycle has the same exponents and depends only on `ω_{≤1}`, i.e. on the
/// class of `Tω`.
struct TransferOperator {
    grid: usize,
    depth: usize,
    classes: Vec<Vec<Symbol>>,
    masses: Vec<f64>,
    edges: Vec<Vec<Edge>>,
}

impl TransferOperator {
    fn build<C: MatrixCocycle + ?Sized>(measure: &ShiftMeasure, cocycle: &C, depth: usize, grid: usize) -> Result<Self> {
        let spec = measure.spec();
        let l = spec.alphabet_size();
        let r = cocycle.radius();
        let need = (2 * r + 1).max(2);
        if depth < need {
            return Err(Error::invalid(format!("depth {depth} is below {need}, the minimum for radius {r}")));
        }
        if grid < 2 {
            return Err(Error::invalid("grid needs at least two bins"));
        }
        if spec.count_words(depth) > MAX_CLASSES as u128 {
            return Err(Error::TooManyWords { count: spec.count_words(depth), cap: MAX_CLASSES as u128 });
        }
        let classes = spec.admissible_words(depth);
        let index = class_lookup(&classes, l);
        let masses: Vec<f64> = classes.iter().map(|c| measure.cylinder_mass(c, 1 - depth as i64)).collect();
        let shift = r.saturating_sub(1) as i64;
        let edges = classes
            .par_iter()
            .map(|c| -> Result<Vec<Edge>> {
                let b1 = c[0];
                let mut out = Vec::new();
                for a in spec.symbols() {
                    if !spec.allowed(a, b1) || measure.prob(a, b1) == 0.0 {
                        continue;
                    }
                    let mut pred = vec![a];
                    pred.extend_from_slice(&c[..depth - 1]);
                    let pi = index[word_code(&pred, l)].expect("predecessor of an admissible class is admissible");
                    let weight = measure.pi(a) * measure.prob(a, b1) / measure.pi(b1);
                    let mut full = pred.clone();
                    full.push(c[depth - 1]);
                    let w = SymbolWindow::new(1 - depth as i64, full);
                    let matrix = cocycle.matrix_at(&w, -shift)?;
                    let targets = (0..grid)
                        .map(|b| {
                            let p = projective_action(&matrix, ProjectivePoint::new(bin_center(grid, b)));
                            bin_of(grid, p.theta()) as u32
                        })
                        .collect();
                    out.push(Edge { pred: pi, weight, matrix, targets });
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        Ok(TransferOperator { grid, depth, classes, masses, edges })
    }

    fn apply(&self, m: &[Vec<f64>]) -> Vec<Vec<f64>> {
        self.edges
            .par_iter()
            .map(|edges| {
                let mut out = vec![0.0; self.grid];
                for e in edges {
                    for (b, &x) in m[e.pred].iter().enumerate() {
                        if x != 0.0 {
                            out[e.targets[b] as usize] += e.weight * x;
                        }
                    }
                }
                out
            })
            .collect()
    }

    fn integral(&self, m: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for (c, edges) in self.edges.iter().enumerate() {
            let mut sc = 0.0;
            for e in edges {
                let mut se = 0.0;
                for (b, &x) in m[e.pred].iter().enumerate() {
                    if x != 0.0 {
                        let t = bin_center(self.grid, b);
                        let v = e.matrix.apply([t.cos(), t.sin()]);
                        se += x * v[0].hypot(v[1]).ln();
                    }
                }
                sc += e.weight * se;
            }
            total += self.masses[c] * sc;
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UState {
    pub measure: ProjectiveMeasure,
    /// `max_c` TV distance between the output and its image under the operator.
    pub residual: f64,
    pub iterations: usize,
}

/// Fixed point of the binned averaged transfer operator, found by lazy
/// iteration `m ← (m + 𝒯m)/2` from the uniform measure until
/// `TV(𝒯m, m) < tol`.
pub fn approximate_u_state<C: MatrixCocycle + ?Sized>(
    measure: &ShiftMeasure,
    cocycle: &C,
    opts: &UStateOptions,
) -> Result<UState> {
    let op = TransferOperator::build(measure, cocycle, opts.depth, opts.grid)?;
    let mut m = vec![vec![1.0 / opts.grid as f64; opts.grid]; op.classes.len()];
    let mut residual = f64::INFINITY;
    for it in 0..opts.max_iters {
        let tm = op.apply(&m);
        residual = max_tv(&tm, &m);
        if residual < opts.tol {
            let pm = ProjectiveMeasure::new(op.grid, op.depth, op.classes.clone(), normalized(m))?;
            return Ok(UState { measure: pm, residual, iterations: it });
        }
        for (x, y) in m.iter_mut().zip(&tm) {
            for (a, b) in x.iter_mut().zip(y) {
                *a = 0.5 * (*a + b);
            }
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iters, residual })
}

fn normalized(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for w in m.iter_mut() {
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
    }
    m
}

/// One application of the averaged transfer operator to a binned measure.
pub fn transfer_step<C: MatrixCocycle + ?Sized>(
    state: &ProjectiveMeasure,
    measure: &ShiftMeasure,
    cocycle: &C,
) -> Result<ProjectiveMeasure> {
    let op = TransferOperator::build(measure, cocycle, state.depth, state.grid)?;
    if op.classes != state.classes {
        return Err(Error::invalid("state classes do not match the subshift"));
    }
    ProjectiveMeasure::new(state.grid, state.depth, state.classes.clone(), normalized(op.apply(&state.weights)))
}

/// `∫ log‖A(ω) v̂‖ dm(ω, v)` over the binned measure, each bin represented by its center.
pub fn furstenberg_integral<C: MatrixCocycle + ?Sized>(
    state: &ProjectiveMeasure,
    measure: &ShiftMeasure,
    cocycle: &C,
) -> Result<f64> {
    let op = TransferOperator::build(measure, cocycle, state.depth, state.grid)?;
    if op.classes != state.classes {
        return Err(Error::invalid("state classes do not match the subshift"));
    }
    Ok(op.integral(&state.weights))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OseledetsDirections {
    pub stable: ProjectivePoint,
    pub unstable: ProjectivePoint,
    /// Change of each direction between depths `n − 1` and `n`.
    pub stable_increment: f64,
    pub unstable_increment: f64,
}

/// Most contracted input direction of `A_n(ω)` and most expanded output
/// direction of `A_n(T^{−n}ω)` (the product arriving at ω).
pub fn oseledets_directions<C: MatrixCocycle + ?Sized>(cocycle: &C, omega: &SymbolWindow, n: usize) -> Result<OseledetsDirections> {
    if n < 2 {
        return Err(Error::invalid("oseledets_directions needs n ≥ 2"));
    }
    let forward = |len: usize| -> Result<ScaledMatrix> {
        let mut acc = ScaledMatrix::identity();
        for k in 0..len as i64 {
            acc.left_mul(&cocycle.matrix_at(omega, k)?);
        }
        Ok(acc)
    };
    let backward = |len: usize| -> Result<ScaledMatrix> {
        let mut acc = ScaledMatrix::identity();
        for k in (1..=len as i64).rev() {
            acc.left_mul(&cocycle.matrix_at(omega, -k)?);
        }
        Ok(acc)
    };
    let stable_of = |m: &ScaledMatrix| ProjectivePoint::new(m.unit.top_right_singular_angle() + PI / 2.0);
    let unstable_of = |m: &ScaledMatrix| ProjectivePoint::new(m.unit.top_left_singular_angle());
    let (f_n, f_prev) = (forward(n)?, forward(n - 1)?);
    let (b_n, b_prev) = (backward(n)?, backward(n - 1)?);
    for m in [&f_n, &b_n] {
        let (s_max, s_min) = m.unit.singular_values();
        if s_max - s_min < 1e-6 * s_max {
            return Err(Error::Degenerate(format!(
                "singular values of the depth-{n} product agree to 1e-6; no dominated splitting"
            )));
        }
    }
    let stable = stable_of(&f_n);
    let unstable = unstable_of(&b_n);
    Ok(OseledetsDirections {
        stable,
        unstable,
        stable_increment: stable.distance(&stable_of(&f_prev)),
        unstable_increment: unstable.distance(&unstable_of(&b_prev)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::LocallyConstantFn;
    use approx::assert_relative_eq;

    fn cat() -> Mat2 {
        Mat2::new(2.0, 1.0, 1.0, 1.0)
    }

    fn golden_angle() -> f64 {
        ((5f64.sqrt() - 1.0) / 2.0).atan()
    }

    fn coin() -> ShiftMeasure {
        ShiftMeasure::bernoulli(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn action_examples() {
        let p = ProjectivePoint::new(0.3);
        assert_eq!(projective_action(&Mat2::IDENTITY, p).theta(), 0.3);
        assert_eq!(projective_action(&Mat2::diag(2.0, 0.5), ProjectivePoint::new(0.0)).theta(), 0.0);
        let r = Mat2::rotation(PI / 4.0);
        let q = projective_action(&r, projective_action(&r, ProjectivePoint::new(0.0)));
        assert!((q.theta() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn constant_hyperbolic_u_state() {
        let m = coin();
        let opts = UStateOptions { depth: 2, grid: 720, ..Default::default() };
        let u = approximate_u_state(&m, &ConstantCocycle(cat()), &opts).unwrap();
        let target = bin_of(720, golden_angle());
        for w in u.measure.weights() {
            assert!(w[target] > 0.99, "mass at the eigendirection {}", w[target]);
        }
        let l = furstenberg_integral(&u.measure, &m, &ConstantCocycle(cat())).unwrap();
        assert!((l - ((3.0 + 5f64.sqrt()) / 2.0).ln()).abs() < 1e-4);
    }

    #[test]
    fn rotation_integral_vanishes() {
        let m = coin();
        let f = LocallyConstantFn::constant(m.spec(), 0.0).unwrap();
        let c = SchrodingerCocycle::new(&f, 0.0);
        let u = approximate_u_state(&m, &c, &UStateOptions { depth: 2, grid: 360, ..Default::default() }).unwrap();
        assert!(furstenberg_integral(&u.measure, &m, &c).unwrap().abs() <= 0.05);
    }

    #[test]
    fn free_integral_matches_closed_form() {
        let m = coin();
        let f = LocallyConstantFn::constant(m.spec(), 0.0).unwrap();
        let c = SchrodingerCocycle::new(&f, 3.0);
        let u = approximate_u_state(&m, &c, &UStateOptions { depth: 2, ..Default::default() }).unwrap();
        let l = furstenberg_integral(&u.measure, &m, &c).unwrap();
        assert!((l - 1.5f64.acosh()).abs() < 1e-2);
    }

    #[test]
    fn large_energy_cone() {
        let m = coin();
        let f = LocallyConstantFn::per_symbol(m.spec(), &[-1.0, 1.0]).unwrap();
        let e = 20.0;
        let c = SchrodingerCocycle::new(&f, e);
        let u = approximate_u_state(&m, &c, &UStateOptions { depth: 3, grid: 720, ..Default::default() }).unwrap();
        let cone = 2.0 / (e - 2.0);
        for w in u.measure.weights() {
            let inside: f64 = w
                .iter()
                .enumerate()
                .filter(|(b, _)| {
                    // bins meeting the cone |tan θ| ≤ 2/(|E| − 2)
                    let lo = *b as f64 * PI / 720.0;
                    let hi = (*b + 1) as f64 * PI / 720.0;
                    lo <= cone.atan() || hi >= PI - cone.atan()
                })
                .map(|(_, x)| x)
                .sum();
            assert!(inside > 1.0 - 1e-9, "mass inside cone {inside}");
        }
    }

    #[test]
    fn output_is_invariant() {
        let m = coin();
        let f = LocallyConstantFn::per_symbol(m.spec(), &[-1.0, 1.0]).unwrap();
        let c = SchrodingerCocycle::new(&f, 1.5);
        let opts = UStateOptions { depth: 4, grid: 360, tol: 1e-9, ..Default::default() };
        let u = approximate_u_state(&m, &c, &opts).unwrap();
        assert!(u.residual < opts.tol);
        let next = transfer_step(&u.measure, &m, &c).unwrap();
        assert!(next.total_variation(&u.measure).unwrap() <= 2.0 * opts.tol);
    }

    #[test]
    fn depth_must_cover_radius() {
        let m = coin();
        let f = LocallyConstantFn::from_fn(m.spec(), 2, |w| w[0] as f64).unwrap();
        let c = SchrodingerCocycle::new(&f, 1.0);
        assert!(approximate_u_state(&m, &c, &UStateOptions { depth: 4, ..Default::default() }).is_err());
    }

    #[test]
    fn csv_shape() {
        let pm = ProjectiveMeasure::uniform(4, 1, vec![vec![1], vec![2]]).unwrap();
        let csv = pm.to_csv();
        assert!(csv.starts_with("class_word,bin_index,weight\n"));
        assert_eq!(csv.lines().count(), 1 + 8);
        let deep = ProjectiveMeasure::uniform(2, 2, vec![vec![1, 2]]).unwrap().to_csv();
        assert!(deep.contains("\n\"1,2\",0,0.5\n"));
        assert!(ProjectiveMeasure::new(2, 1, vec![vec![1]], vec![vec![0.7, 0.7]]).is_err());
    }

    #[test]
    fn cesaro_concentrates_on_expanding_direction() {
        let m = coin();
        let past = SymbolWindow::new(-1, vec![1, 1]);
        let rep = cesaro_orbit_average(&m, &ConstantCocycle(cat()), &past, ProjectivePoint::new(2.0), 1000, 20, 2, 720, 3)
            .unwrap();
        let target = bin_of(720, golden_angle());
        let mass: f64 = rep.measure.marginal(&m)[target];
        assert!(mass >= 0.99, "mass {mass}");
    }

    #[test]
    fn oseledets_examples() {
        let w = SymbolWindow::new(-30, vec![1; 61]);
        let d = oseledets_directions(&ConstantCocycle(Mat2::diag(2.0, 0.5)), &w, 20).unwrap();
        assert!((d.stable.theta() - PI / 2.0).abs() < 1e-12);
        assert!(d.unstable.theta().abs() < 1e-12);
        let d = oseledets_directions(&ConstantCocycle(cat()), &w, 20).unwrap();
        assert_relative_eq!(d.unstable.theta(), golden_angle(), epsilon = 1e-12);
        let spec = coin();
        let f = LocallyConstantFn::constant(spec.spec(), 0.0).unwrap();
        let rot = SchrodingerCocycle::new(&f, 0.0);
        assert!(matches!(oseledets_directions(&rot, &w, 20), Err(Error::Degenerate(_))));
    }
}
