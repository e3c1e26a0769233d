//! Finite-volume operators `H_{ω,Λ}`, their spectra, characteristic
//! determinants and Green functions.

use crate::cocycle::{schrodinger_step, ScaledMatrix};
use crate::error::{Error, Result};
use crate::sampling::{potential, SiteFunction};
use crate::symbolic::SymbolWindow;

/// `(H u)(n) = u(n+1) + u(n−1) + V(n) u(n)` restricted to a box with
/// Dirichlet boundary: diagonal `V`, unit off-diagonals.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    diagonal: Vec<f64>,
    origin: i64,
}

impl TridiagonalOperator {
    pub fn from_diagonal(diagonal: Vec<f64>, origin: i64) -> Result<Self> {
        if diagonal.is_empty() {
            return Err(Error::invalid("an operator needs at least one site"));
        }
        Ok(TridiagonalOperator { diagonal, origin })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Site of index 0 in ω-coordinates.
    pub fn origin(&self) -> i64 {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.diagonal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diagonal.is_empty()
    }

    /// Infinity norm, an upper bound on the operator norm.
    pub fn norm_bound(&self) -> f64 {
        let n = self.len();
        (0..n)
            .map(|i| self.diagonal[i].abs() + if i > 0 { 1.0 } else { 0.0 } + if i + 1 < n { 1.0 } else { 0.0 })
            .fold(0.0, f64::max)
    }

    /// `H ψ`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut y = self.diagonal[i] * x[i];
                if i > 0 {
                    y += x[i - 1];
                }
                if i + 1 < n {
                    y += x[i + 1];
                }
                y
            })
            .collect()
    }

    pub fn dense(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = self.diagonal[i];
            if i + 1 < n {
                m[i][i + 1] = 1.0;
                m[i + 1][i] = 1.0;
            }
        }
        m
    }

    /// Number of eigenvalues strictly below `x` (Sturm sequence).
    pub fn count_below(&self, x: f64) -> usize {
        let mut count = 0;
        let mut q = 1.0f64;
        for (i, &v) in self.diagonal.iter().enumerate() {
            q = if i == 0 { v - x } else { v - x - 1.0 / q };
            if q == 0.0 {
                q = -f64::EPSILON * (v.abs() + 2.0 + x.abs());
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// Eigenvalues in `[lo, hi)` by bisection on Sturm counts, ascending.
    pub fn eigenvalues_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        if !(lo < hi) {
            return out;
        }
        let c_lo = self.count_below(lo);
        let c_hi = self.count_below(hi);
        for k in c_lo..c_hi {
            // the eigenvalue of index k (0-based)
            let (mut a, mut b) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + b);
                if mid <= a || mid >= b {
                    break;
                }
                if self.count_below(mid) > k {
                    b = mid;
                } else {
                    a = mid;
                }
            }
            out.push(0.5 * (a + b));
        }
        out
    }

    /// Whether some eigenvalue lies in `(e − δ, e + δ)`.
    pub fn has_eigenvalue_near(&self, e: f64, delta: f64) -> bool {
        self.count_below(e + delta) > self.count_below(e - delta)
    }
}

/// `H_{ω,[a,b]}`: diagonal `V_ω(a..=b)`.
pub fn build_operator<F: SiteFunction + ?Sized>(f: &F, omega: &SymbolWindow, a: i64, b: i64) -> Result<TridiagonalOperator> {
    if b < a {
        return Err(Error::invalid(format!("empty box [{a}, {b}]")));
    }
    TridiagonalOperator::from_diagonal(potential(f, omega, a, (b - a + 1) as usize)?, a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// `eigenvectors[k]` is the normalized eigenvector of `eigenvalues[k]`.
    pub eigenvectors: Vec<Vec<f64>>,
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// `e[i]` couples `i` and `i + 1`; `z`, if given, is an `n × n` row-major
/// matrix whose rows are rotated alongside (rows end up as eigenvectors).
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut [f64]>) -> Result<()> {
    let n = d.len();
    if n < 2 {
        return Ok(());
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return Err(Error::NotConverged { iterations: iter, residual: e[l].abs() });
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + if g >= 0.0 { r } else { -r });
            let (mut s, mut c, mut p) = (1.0f64, 1.0f64, 0.0f64);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (head, tail) = z.split_at_mut((i + 1) * n);
                    let zi = &mut head[i * n..];
                    let zi1 = &mut tail[..n];
                    for k in 0..n {
                        let t = zi1[k];
                        zi1[k] = s * zi[k] + c * t;
                        zi[k] = c * zi[k] - s * t;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Eigenvalues only, ascending.
pub fn eigenvalues(h: &TridiagonalOperator) -> Result<Vec<f64>> {
    let n = h.len();
    let mut d = h.diagonal.clone();
    let mut e = vec![1.0; n];
    e[n - 1] = 0.0;
    tql(&mut d, &mut e, None)?;
    d.sort_by(|a, b| a.total_cmp(b));
    Ok(d)
}

/// All eigenpairs. Fails with [`Error::Numerical`] if a residual exceeds
/// `tol·(‖H‖ + 1)` or two eigenvectors overlap by more than `tol`.
pub fn eigensystem(h: &TridiagonalOperator, tol: f64) -> Result<SpectralData> {
    let n = h.len();
    let mut d = h.diagonal.clone();
    let mut e = vec![1.0; n];
    e[n - 1] = 0.0;
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }
    tql(&mut d, &mut e, Some(&mut z))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let eigenvectors: Vec<Vec<f64>> = order.iter().map(|&k| z[k * n..(k + 1) * n].to_vec()).collect();
    let data = SpectralData { eigenvalues, eigenvectors };
    let (res, orth) = data.verify(h);
    let scale = h.norm_bound() + 1.0;
    if res > tol * scale {
        return Err(Error::Numerical { what: "eigenpair residual".into(), achieved: res / scale });
    }
    if orth > tol {
        return Err(Error::Numerical { what: "eigenvector orthogonality".into(), achieved: orth });
    }
    Ok(data)
}

impl SpectralData {
    /// `(max_k ‖Hψ_k − E_kψ_k‖∞, max_{k≠l} |⟨ψ_k, ψ_l⟩| together with max_k |‖ψ_k‖² − 1|)`.
    pub fn verify(&self, h: &TridiagonalOperator) -> (f64, f64) {
        let mut res: f64 = 0.0;
        for (lam, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let hv = h.apply(v);
            for (a, b) in hv.iter().zip(v) {
                res = res.max((a - lam * b).abs());
            }
        }
        let mut orth: f64 = 0.0;
        let n = self.eigenvectors.len();
        for k in 0..n {
            for l in k..n {
                let dot: f64 = self.eigenvectors[k].iter().zip(&self.eigenvectors[l]).map(|(a, b)| a * b).sum();
                orth = orth.max(if k == l { (dot - 1.0).abs() } else { dot.abs() });
            }
        }
        (res, orth)
    }
}

/// `1/dist(E, σ(H))`; `+∞` when `E` is an eigenvalue to machine precision.
pub fn resolvent_norm(h: &TridiagonalOperator, e: f64) -> Result<f64> {
    let eig = eigenvalues(h)?;
    Ok(resolvent_from_eigenvalues(&eig, e))
}

pub fn resolvent_from_eigenvalues(eig: &[f64], e: f64) -> f64 {
    let dist = eig.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min);
    if dist <= 4.0 * f64::EPSILON * e.abs().max(1.0) {
        f64::INFINITY
    } else {
        1.0 / dist
    }
}

/// A real number stored as `sign · e^{log_abs}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledValue {
    /// −1, 0 or 1.
    pub sign: f64,
    pub log_abs: f64,
}

impl ScaledValue {
    pub const ONE: ScaledValue = ScaledValue { sign: 1.0, log_abs: 0.0 };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            ScaledValue { sign: 0.0, log_abs: f64::NEG_INFINITY }
        } else {
            ScaledValue { sign: x.signum(), log_abs: x.abs().ln() }
        }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }

    pub fn mul(&self, o: &ScaledValue) -> ScaledValue {
        ScaledValue { sign: self.sign * o.sign, log_abs: self.log_abs + o.log_abs }
    }

    pub fn div(&self, o: &ScaledValue) -> ScaledValue {
        ScaledValue { sign: self.sign * o.sign, log_abs: self.log_abs - o.log_abs }
    }

    pub fn negate_if(&self, flip: bool) -> ScaledValue {
        if flip {
            ScaledValue { sign: -self.sign, log_abs: self.log_abs }
        } else {
            *self
        }
    }
}

/// `D_k = det(E − H_k)` for `k = 0..=len` over the diagonal `v`, by
/// `D_k = (E − v_{k−1}) D_{k−1} − D_{k−2}` with `D_0 = 1`, `D_{−1} = 0`, carried
/// with a running scale. The last entry also reports the cancellation ratio
/// `|D_len| / (|(E − v) D_{len−1}| + |D_{len−2}|)`.
fn prefix_dets(v: &[f64], e: f64) -> (Vec<ScaledValue>, f64) {
    let mut out = Vec::with_capacity(v.len() + 1);
    out.push(ScaledValue::ONE);
    let (mut x, mut y, mut sigma) = (1.0f64, 0.0f64, 0.0f64);
    let mut ratio = 1.0;
    for &vi in v {
        let t = (e - vi) * x;
        let next = t - y;
        let denom = t.abs() + y.abs();
        ratio = if denom > 0.0 { next.abs() / denom } else { 1.0 };
        y = x;
        x = next;
        let m = x.abs().max(y.abs());
        if m > 0.0 && !(1e-100..=1e100).contains(&m) {
            x /= m;
            y /= m;
            sigma += m.ln();
        }
        let mut sv = ScaledValue::from_f64(x);
        sv.log_abs += sigma;
        out.push(sv);
    }
    (out, ratio)
}

/// `det(E − H_{ω,N})` for the box `0..N` in scaled form; `N = 0` gives 1.
pub fn char_det<F: SiteFunction + ?Sized>(f: &F, omega: &SymbolWindow, e: f64, n: usize) -> Result<ScaledValue> {
    let v = potential(f, omega, 0, n)?;
    Ok(char_det_diagonal(&v, e))
}

pub fn char_det_diagonal(v: &[f64], e: f64) -> ScaledValue {
    *prefix_dets(v, e).0.last().expect("prefix dets are non-empty")
}

/// Leading and trailing block determinants of `H − E`, enough for every Green entry.
struct Minors {
    /// `det(H_{[0,j)} − E)`, `j = 0..=N`.
    leading: Vec<ScaledValue>,
    /// `det(H_{[k,N)} − E)`, `k = 0..=N`.
    trailing: Vec<ScaledValue>,
}

fn minors(v: &[f64], e: f64) -> Result<Minors> {
    let n = v.len();
    let (lead_e, ratio) = prefix_dets(v, e);
    let rev: Vec<f64> = v.iter().rev().copied().collect();
    let (trail_rev, _) = prefix_dets(&rev, e);
    let to_h = |k: usize, d: ScaledValue| d.negate_if(k % 2 == 1);
    let leading: Vec<ScaledValue> = lead_e.into_iter().enumerate().map(|(k, d)| to_h(k, d)).collect();
    let trailing: Vec<ScaledValue> = (0..=n).map(|k| to_h(n - k, trail_rev[n - k])).collect();
    if leading[n].sign == 0.0 || ratio < 1e-300 {
        return Err(Error::AtEigenvalue { energy: e });
    }
    Ok(Minors { leading, trailing })
}

impl Minors {
    fn entry(&self, j: usize, k: usize) -> ScaledValue {
        let (j, k) = if j <= k { (j, k) } else { (k, j) };
        let n = self.leading.len() - 1;
        self.leading[j].mul(&self.trailing[k + 1]).div(&self.leading[n]).negate_if((j + k) % 2 == 1)
    }
}

/// `G(j,k) = (H_{ω,N} − E)^{-1}(j,k)` through Cramer's rule:
/// `(−1)^{j+k} det[H_j − E] · det[H_{T^{k+1}ω, N−k−1} − E] / det[H_N − E]` for `j ≤ k`.
pub fn green_entry_cramer<F: SiteFunction + ?Sized>(
    f: &F,
    omega: &SymbolWindow,
    e: f64,
    n: usize,
    j: usize,
    k: usize,
) -> Result<ScaledValue> {
    if j >= n || k >= n {
        return Err(Error::invalid(format!("entry ({j}, {k}) outside a box of {n} sites")));
    }
    let v = potential(f, omega, 0, n)?;
    Ok(minors(&v, e)?.entry(j, k))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreenTable {
    pub energy: f64,
    pub size: usize,
    /// Row-major `size × size`.
    pub entries: Vec<ScaledValue>,
    /// `dist(E, σ(H))`.
    pub distance_to_spectrum: f64,
}

impl GreenTable {
    pub fn get(&self, j: usize, k: usize) -> ScaledValue {
        self.entries[j * self.size + k]
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|x| x.value().abs()).fold(0.0, f64::max)
    }
}

pub fn green_table_diagonal(v: &[f64], e: f64) -> Result<GreenTable> {
    let n = v.len();
    if n == 0 {
        return Err(Error::invalid("empty box"));
    }
    let m = minors(v, e)?;
    let mut entries = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            entries.push(m.entry(j, k));
        }
    }
    let h = TridiagonalOperator::from_diagonal(v.to_vec(), 0)?;
    let eig = eigenvalues(&h)?;
    let dist = eig.iter().map(|l| (l - e).abs()).fold(f64::INFINITY, f64::min);
    Ok(GreenTable { energy: e, size: n, entries, distance_to_spectrum: dist })
}

pub fn green_table<F: SiteFunction + ?Sized>(f: &F, omega: &SymbolWindow, e: f64, n: usize) -> Result<GreenTable> {
    green_table_diagonal(&potential(f, omega, 0, n)?, e)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenBoundReport {
    /// `min (bound − |G|)/bound` over `j ≤ k`.
    pub worst_relative_slack: f64,
    pub worst_pair: (usize, usize),
}

/// `log‖A_j(ω)‖` for `j = 0..=N` and `log‖A_{N−k}(T^kω)‖` for `k = 0..=N`.
fn product_norm_logs(v: &[f64], e: f64) -> (Vec<f64>, Vec<f64>) {
    let n = v.len();
    let mut prefix = Vec::with_capacity(n + 1);
    let mut acc = ScaledMatrix::identity();
    prefix.push(0.0);
    for &x in v {
        acc.left_mul(&schrodinger_step(e, x));
        prefix.push(acc.log_scale);
    }
    let mut suffix = vec![0.0; n + 1];
    let mut acc = ScaledMatrix::identity();
    for k in (0..n).rev() {
        acc = acc.compose(&ScaledMatrix::from_matrix(schrodinger_step(e, v[k])));
        suffix[k] = acc.log_scale;
    }
    (prefix, suffix)
}

/// Checks `|G(j,k)| ≤ ‖A_j(ω)‖·‖A_{N−k}(T^kω)‖ / |det[H_{ω,N} − E]|` for all `j ≤ k`.
pub fn green_bound_check_diagonal(v: &[f64], e: f64) -> Result<GreenBoundReport> {
    let n = v.len();
    let m = minors(v, e)?;
    let (prefix, suffix) = product_norm_logs(v, e);
    let log_det = m.leading[n].log_abs;
    let mut worst = (f64::INFINITY, (0, 0));
    for j in 0..n {
        for k in j..n {
            let log_bound = prefix[j] + suffix[k] - log_det;
            let g = m.entry(j, k);
            let slack = if g.sign == 0.0 { 1.0 } else { 1.0 - (g.log_abs - log_bound).exp() };
            if slack < worst.0 {
                worst = (slack, (j, k));
            }
        }
    }
    Ok(GreenBoundReport { worst_relative_slack: worst.0, worst_pair: worst.1 })
}

pub fn green_bound_check<F: SiteFunction + ?Sized>(f: &F, omega: &SymbolWindow, e: f64, n: usize) -> Result<GreenBoundReport> {
    green_bound_check_diagonal(&potential(f, omega, 0, n)?, e)
}

/// `log‖A_j(ω)‖` for `j = 0..=N` and `log‖A_{N−k}(T^kω)‖` for `k = 0..=N`, public
/// for the finite-volume decay check.
pub fn transfer_norm_logs(v: &[f64], e: f64) -> (Vec<f64>, Vec<f64>) {
    product_norm_logs(v, e)
}

/// All Green entries `|G(j,k)|` in log form together with `log|det[H − E]|`.
pub(crate) fn green_logs(v: &[f64], e: f64) -> Result<(Vec<Vec<f64>>, f64)> {
    let n = v.len();
    let m = minors(v, e)?;
    let table = (0..n).map(|j| (0..n).map(|k| m.entry(j, k).log_abs).collect()).collect();
    Ok((table, m.leading[n].log_abs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn free_three_site() {
        let h = TridiagonalOperator::from_diagonal(vec![0.0; 3], 0).unwrap();
        let ev = eigensystem(&h, 1e-9).unwrap().eigenvalues;
        let s = 2f64.sqrt();
        for (a, b) in ev.iter().zip([-s, 0.0, s]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn free_chain_closed_form() {
        let n = 50;
        let h = TridiagonalOperator::from_diagonal(vec![0.0; n], 0).unwrap();
        let ev = eigensystem(&h, 1e-9).unwrap().eigenvalues;
        let mut exact: Vec<f64> =
            (1..=n).map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (n + 1) as f64).cos()).collect();
        exact.sort_by(|a, b| a.total_cmp(b));
        for (a, b) in ev.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-9);
        }
        let bis = h.eigenvalues_in(-3.0, 3.0);
        for (a, b) in bis.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn one_site() {
        let h = TridiagonalOperator::from_diagonal(vec![0.3], 4).unwrap();
        assert_eq!(eigenvalues(&h).unwrap(), vec![0.3]);
        assert_eq!(h.dense(), vec![vec![0.3]]);
        let h0 = TridiagonalOperator::from_diagonal(vec![0.0], 0).unwrap();
        assert_relative_eq!(resolvent_norm(&h0, 0.5).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(resolvent_norm(&h0, 0.0).unwrap(), f64::INFINITY);
    }

    #[test]
    fn determinant_base_cases() {
        assert_eq!(char_det_diagonal(&[], 0.7).value(), 1.0);
        assert_relative_eq!(char_det_diagonal(&[0.2], 0.7).value(), 0.5, epsilon = 1e-15);
        // det(E − [[0,1],[1,0]]) = E² − 1
        assert_relative_eq!(char_det_diagonal(&[0.0, 0.0], 3.0).value(), 8.0, epsilon = 1e-14);
    }

    #[test]
    fn determinant_survives_long_boxes() {
        let v = vec![0.0; 5000];
        let d = char_det_diagonal(&v, 3.0);
        // free chain: D_N = sinh((N+1)t)/sinh(t) with cosh t = 3/2
        let t = 1.5f64.acosh();
        let expected = 5001.0 * t - t.sinh().ln() - 2f64.ln();
        assert_relative_eq!(d.log_abs, expected, max_relative = 1e-12);
        assert_eq!(d.sign, 1.0);
    }

    #[test]
    fn green_small_examples() {
        let t = green_table_diagonal(&[0.0], 0.5).unwrap();
        assert_relative_eq!(t.get(0, 0).value(), -2.0, epsilon = 1e-15);
        let t2 = green_table_diagonal(&[0.0, 0.0], 0.0).unwrap();
        assert_relative_eq!(t2.get(0, 1).value(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(t2.get(1, 0).value(), 1.0, epsilon = 1e-15);
        assert!(t2.get(0, 0).value().abs() < 1e-15);
        assert!(matches!(green_table_diagonal(&[0.0, 0.0], 1.0), Err(Error::AtEigenvalue { .. })));
    }

    #[test]
    fn bound_one_site() {
        let r = green_bound_check_diagonal(&[0.4], -0.3).unwrap();
        assert!(r.worst_relative_slack >= 0.0);
    }

    #[test]
    fn bound_near_tight_for_large_energy() {
        let v = vec![0.0; 10];
        let (prefix, suffix) = product_norm_logs(&v, 10.0);
        let (g, log_det) = green_logs(&v, 10.0).unwrap();
        let bound = prefix[0] + suffix[9] - log_det;
        // |G(0, N−1)| = 1/|det|, so the bound overshoots by exactly one step norm
        let ratio = (bound - g[0][9]).exp();
        assert_relative_eq!(ratio, schrodinger_step(10.0, 0.0).norm(), max_relative = 1e-12);
    }

    #[test]
    fn sturm_counts() {
        let h = TridiagonalOperator::from_diagonal(vec![1.0, -2.0, 0.5, 3.0], 0).unwrap();
        let ev = eigenvalues(&h).unwrap();
        for (i, &l) in ev.iter().enumerate() {
            assert_eq!(h.count_below(l - 1e-9), i);
            assert!(h.has_eigenvalue_near(l, 1e-6));
        }
    }
}
