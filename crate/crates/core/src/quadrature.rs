//! Gauss rules built with the Golub–Welsch eigenvalue method, and the composite
//! rule used to discretise Gamma-weighted integrals when a single Gauss rule is
//! not accurate enough for oscillatory integrands.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use statrs::function::gamma::{gamma_ur, ln_gamma};

/// Largest per-rule order accepted anywhere in the crate.
pub const MAX_ORDER: usize = 128;

/// Nodes and weights of the symmetric tridiagonal (Jacobi) matrix with the
/// given diagonal and off-diagonal. Weights are normalised to sum to one.
fn golub_welsch(diag: &[f64], off: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = diag.len();
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        jac[(i, i)] = diag[i];
        if i + 1 < m {
            jac[(i, i + 1)] = off[i];
            jac[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = pairs.iter().map(|p| p.1).sum();
    pairs.into_iter().map(|(x, w)| (x, w / total)).unzip()
}

/// Gauss rule for the weight `x^alpha e^{-x}` on (0, ∞), weights summing to one.
pub fn gauss_laguerre(order: usize, alpha: f64) -> (Vec<f64>, Vec<f64>) {
    let diag: Vec<f64> = (0..order).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..order).map(|k| (k as f64 * (k as f64 + alpha)).sqrt()).collect();
    golub_welsch(&diag, &off)
}

/// Gauss rule for the weight `(1-x)^alpha (1+x)^beta` on [-1, 1], weights summing to one.
pub fn gauss_jacobi(order: usize, alpha: f64, beta: f64) -> (Vec<f64>, Vec<f64>) {
    let ab = alpha + beta;
    let diag: Vec<f64> = (0..order)
        .map(|k| {
            let k = k as f64;
            if k == 0.0 {
                (beta - alpha) / (ab + 2.0)
            } else {
                let s = 2.0 * k + ab;
                (beta * beta - alpha * alpha) / (s * (s + 2.0))
            }
        })
        .collect();
    let off: Vec<f64> = (1..order)
        .map(|k| {
            let k = k as f64;
            let s = 2.0 * k + ab;
            (4.0 * k * (k + alpha) * (k + beta) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0))).sqrt()
        })
        .collect();
    golub_welsch(&diag, &off)
}

pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    gauss_jacobi(order, 0.0, 0.0)
}

/// Composite rule for the Gamma(shape, scale) probability density on (0, L].
///
/// The first panel `[0, c]` absorbs the `s^{shape-1}` endpoint behaviour with a
/// Gauss–Jacobi rule; the remainder is covered by adaptively bisected
/// Gauss–Legendre panels until the mass and the transform at `omega` are
/// resolved to `tol`. `L` is chosen so the neglected tail mass is below 1e-16.
pub fn composite_gamma(shape: f64, scale: f64, order: usize, omega: f64, tol: f64) -> (Vec<f64>, Vec<f64>) {
    let log_norm = -ln_gamma(shape) - shape * scale.ln();
    let density = |s: f64| (log_norm + (shape - 1.0) * s.ln() - s / scale).exp();

    let mut upper = scale * shape.max(1.0);
    while gamma_ur(shape, upper / scale) > 1e-16 {
        upper *= 1.25;
    }
    let first = scale.min(std::f64::consts::PI / omega.max(1e-3)).min(upper);

    let mut nodes = Vec::new();
    let mut weights = Vec::new();

    let (xj, wj) = gauss_jacobi(order, 0.0, shape - 1.0);
    // ∫_0^c f(s) s^{n-1} ds = (c/2)^n ∫ f (1+x)^{n-1} dx and the Jacobi mass is 2^n / n.
    let log_scale = shape * (first / 2.0).ln() + (2f64.ln() * shape - shape.ln());
    for (x, w) in xj.iter().zip(&wj) {
        let s = first * (1.0 + x) / 2.0;
        nodes.push(s);
        weights.push(w * (log_scale + log_norm - s / scale).exp());
    }

    // Normalised Legendre weights sum to one, so a panel of width b - a scales them by b - a.
    let (xg, wg) = gauss_legendre(order);
    let panel = |a: f64, b: f64| -> (Complex64, Complex64) {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut mass = Complex64::new(0.0, 0.0);
        let mut wave = Complex64::new(0.0, 0.0);
        for (x, w) in xg.iter().zip(&wg) {
            let s = mid + half * x;
            let v = w * (b - a) * density(s);
            mass += v;
            wave += v * Complex64::from_polar(1.0, -omega * s);
        }
        (mass, wave)
    };

    let span = upper - first;
    let mut accepted = Vec::new();
    let mut stack = vec![(first, upper)];
    while let Some((a, b)) = stack.pop() {
        let m = 0.5 * (a + b);
        let (m1, w1) = panel(a, b);
        let (ml, wl) = panel(a, m);
        let (mr, wr) = panel(m, b);
        let err = ((m1 - ml - mr).norm()).max((w1 - wl - wr).norm());
        if err <= tol * (b - a) / span || b - a < 1e-9 * span {
            accepted.push((a, b));
        } else {
            stack.push((m, b));
            stack.push((a, m));
        }
    }
    accepted.sort_by(|p, q| p.0.total_cmp(&q.0));
    for (a, b) in accepted {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        for (x, w) in xg.iter().zip(&wg) {
            let s = mid + half * x;
            nodes.push(s);
            weights.push(w * (b - a) * density(s));
        }
    }
    (nodes, weights)
}
