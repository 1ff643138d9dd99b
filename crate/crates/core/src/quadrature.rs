//! Small numerical utilities: Gauss–Legendre rules, bisection on monotone
//! functions, and least-squares slopes.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        if n == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
            break;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre integral of `f` over `[a, b]`.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize, order: usize) -> f64 {
    let (x, w) = gauss_legendre(order);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let lo = a + p as f64 * width;
        let mid = lo + 0.5 * width;
        let mut s = 0.0;
        for (xi, wi) in x.iter().zip(&w) {
            s += wi * f(mid + 0.5 * width * xi);
        }
        total += 0.5 * width * s;
    }
    total
}

/// Outcome of a bisection on a nonincreasing function.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bisection {
    pub root: f64,
    pub value_at_root: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// Finds `λ` with `g(λ) = target` for `g` nonincreasing on `(0, ∞)`.
///
/// The bracket is widened geometrically if it does not straddle the target.
/// Iteration is in `log λ` and stops once `hi/lo - 1 <= rtol` or after
/// `max_iter` halvings. The returned root is the upper end of the final
/// bracket, so `g(root) <= target` whenever `g` is continuous from the right.
pub fn bisect_decreasing(
    g: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    mut hi: f64,
    rtol: f64,
    max_iter: usize,
) -> Bisection {
    assert!(lo > 0.0 && hi >= lo);
    let mut guard = 0;
    while g(lo) < target && guard < 4000 {
        lo *= 0.5;
        guard += 1;
    }
    while g(hi) > target && guard < 8000 {
        hi *= 2.0;
        guard += 1;
    }
    let initial = (lo, hi);
    let mut iterations = 0;
    while hi / lo - 1.0 > rtol && iterations < max_iter {
        let mid = (lo * hi).sqrt();
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
    }
    Bisection {
        root: hi,
        value_at_root: g(hi),
        iterations,
        bracket: initial,
    }
}

/// Ordinary least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg + 1) as f64 };
                assert!((q - exact).abs() < 1e-12, "n={n} deg={deg}");
            }
        }
    }

    #[test]
    fn bisection_finds_power_root() {
        let b = bisect_decreasing(|l| 8.0 / (l * l * l), 1.0, 0.1, 0.5, 1e-12, 200);
        assert!((b.root - 2.0).abs() < 1e-10);
    }

    #[test]
    fn composite_rule_integrates_smooth_function() {
        let v = integrate(|x| x.exp(), 0.0, 1.0, 4, 8);
        assert!((v - (1f64.exp() - 1.0)).abs() < 1e-14);
    }
}
