//! Small numerical helpers shared by the solvers.

use std::f64::consts::PI;

/// Pairwise (cascade) summation; fixed evaluation order for a given length.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 32;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `|x|^p`, with exact fast paths for small integer exponents.
#[inline]
pub fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if p == 2.0 {
        a * a
    } else if p == 4.0 {
        let s = a * a;
        s * s
    } else if p.fract() == 0.0 && p > 0.0 && p <= 16.0 {
        a.powi(p as i32)
    } else {
        a.powf(p)
    }
}

/// `|x|^(p-2) x`, the derivative of `|x|^p / p`.
#[inline]
pub fn signed_pow(x: f64, p: f64) -> f64 {
    if p == 2.0 {
        x
    } else if p == 4.0 {
        x * x * x
    } else if x == 0.0 {
        0.0
    } else {
        abs_pow(x, p - 1.0).copysign(x)
    }
}

/// `s^(q/2)` for a squared magnitude `s >= 0`.
#[inline]
pub fn pow_half(s: f64, q: f64) -> f64 {
    if q == 2.0 {
        s
    } else if q == 4.0 {
        s * s
    } else if q == 0.0 {
        1.0
    } else if q.fract() == 0.0 && (q as i64) % 2 == 0 && q > 0.0 && q <= 16.0 {
        s.powi((q / 2.0) as i32)
    } else {
        s.powf(0.5 * q)
    }
}

/// Gauss–Legendre rule on `[0, 1]`: `(nodes, weights)`, weights summing to 1.
pub fn gauss_legendre_unit(order: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let nodes = x.iter().map(|t| 0.5 * (t + 1.0)).collect();
    let weights = w.iter().map(|t| 0.5 * t).collect();
    (nodes, weights)
}

/// Gauss–Legendre rule on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(order >= 1, "quadrature order must be positive");
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Element `index` of the van der Corput sequence in `base`.
pub fn van_der_corput(mut index: u64, base: u64) -> f64 {
    let mut result = 0.0;
    let mut f = 1.0 / base as f64;
    while index > 0 {
        result += f * (index % base) as f64;
        index /= base;
        f /= base as f64;
    }
    result
}

/// 2D Halton point (bases 2, 3) in `[0,1)^2`; prefixes are nested.
pub fn halton2(index: u64) -> (f64, f64) {
    (van_der_corput(index + 1, 2), van_der_corput(index + 1, 3))
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}
