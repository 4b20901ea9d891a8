//! Small numerical helpers shared across modules.

use roots::{find_root_brent, SimpleConvergency};

use crate::error::{Error, Result};

/// `log(exp(a) + exp(b))` without overflow.
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Log-sum-exp of a slice. Empty input gives `-inf`.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    if max == f64::INFINITY {
        return max;
    }
    let s: f64 = xs.iter().map(|&x| (x - max).exp()).sum();
    max + s.ln()
}

/// `log cosh t`, stable for large `|t|`.
pub fn log_cosh(t: f64) -> f64 {
    let a = t.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// Brent root on a sign-changing bracket, to absolute tolerance `eps`.
pub fn brent<F: FnMut(f64) -> f64>(a: f64, b: f64, f: F, eps: f64) -> Result<f64> {
    let mut conv = SimpleConvergency { eps, max_iter: 200 };
    find_root_brent(a, b, f, &mut conv).map_err(|e| Error::RootFinding(e.to_string()))
}

/// Bisection on a predicate that is `false` at `lo` and `true` at `hi`.
pub fn bisect_predicate<F: FnMut(f64) -> bool>(mut lo: f64, mut hi: f64, mut pred: F, tol: f64) -> f64 {
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// All roots of `f` on `[lo, hi]` found by sign changes on a uniform grid of
/// `n` intervals, each polished with Brent. Exact zeros on grid nodes count.
pub fn scan_roots<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize, eps: f64) -> Vec<f64> {
    let mut roots = Vec::new();
    let step = (hi - lo) / n as f64;
    let mut x0 = lo;
    let mut f0 = f(x0);
    if f0 == 0.0 {
        roots.push(x0);
    }
    for i in 1..=n {
        let x1 = if i == n { hi } else { lo + step * i as f64 };
        let f1 = f(x1);
        if f1 == 0.0 {
            roots.push(x1);
        } else if f0 != 0.0 && f0.signum() != f1.signum() {
            if let Ok(r) = brent(x0, x1, &f, eps) {
                roots.push(r);
            }
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

/// `ln k!` for `k = 0..=n`, by cumulative sums.
pub fn log_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).ln();
        out.push(acc);
    }
    out
}

/// Elementary symmetric polynomials `e_0..=e_n` of `xs`.
pub fn elementary_symmetric(xs: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; xs.len() + 1];
    e[0] = 1.0;
    for (i, &x) in xs.iter().enumerate() {
        for k in (1..=i + 1).rev() {
            e[k] += x * e[k - 1];
        }
    }
    e
}

pub fn inf_norm(xs: &[f64]) -> f64 {
    xs.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn dist_inf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_large_values() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + std::f64::consts::LN_2)).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn log_cosh_matches_direct() {
        for t in [-3.0, -0.5, 0.0, 0.1, 2.0] {
            assert!((log_cosh(t) - f64::cosh(t).ln()).abs() < 1e-14);
        }
        assert!((log_cosh(800.0) - (800.0 - std::f64::consts::LN_2)).abs() < 1e-12);
    }

    #[test]
    fn elementary_symmetric_of_three() {
        let e = elementary_symmetric(&[1.0, 2.0, 3.0]);
        assert_eq!(e, vec![1.0, 6.0, 11.0, 6.0]);
    }

    #[test]
    fn scan_finds_cubic_roots() {
        let r = scan_roots(|x| x * x * x - x, -2.0, 2.0, 101, 1e-14);
        assert_eq!(r.len(), 3);
        assert!((r[0] + 1.0).abs() < 1e-12 && r[1].abs() < 1e-12 && (r[2] - 1.0).abs() < 1e-12);
    }
}
