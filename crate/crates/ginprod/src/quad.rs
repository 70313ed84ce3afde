//! Internal quadrature machinery: Gauss-Legendre rules, a log-space
//! half-line integrator for Mellin-Barnes contours, and a panel-doubling
//! integrator for finite intervals.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::meijer::QuadratureSpec;
use crate::specfun::LogScaled;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
pub(crate) struct GlRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Rules are cached per order; orders in use are few (32, 64, ...).
pub(crate) fn gauss_legendre(n: usize) -> Arc<GlRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GlRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard.entry(n).or_insert_with(|| Arc::new(compute_gl(n))).clone()
}

fn compute_gl(n: usize) -> GlRule {
    assert!(n >= 2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Newton iteration on P_n from the Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * x * p2 - jf * p3) / (jf + 1.0);
            }
            dp = nf * (x * p1 - p2) / (x * x - 1.0);
            let dx = -p1 / dp;
            x += dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    GlRule { nodes, weights }
}

/// Computes `(1/π) * Re ∫_0^∞ exp(g(t)) dt` where `g` is the log of a
/// complex integrand whose modulus peaks near the origin and eventually
/// decays.
///
/// The cutoff is found by a doubling search from `scale_hint` until the
/// log-modulus falls `drop_threshold` below the running peak. Panels start
/// at `scale_hint` width near the origin and grow geometrically toward the
/// cutoff; every refinement pass halves all panels until the result moves
/// by less than `rel_tol`. All node values are pivoted on the global
/// log-modulus maximum, so nothing overflows.
pub(crate) fn halfline_log_re<G>(g: G, scale_hint: f64, spec: &QuadratureSpec) -> Result<LogScaled>
where
    G: Fn(f64) -> Complex64 + Sync,
{
    spec.validate()?;
    let scale = if scale_hint.is_finite() && scale_hint > 0.0 {
        scale_hint
    } else {
        1.0
    };

    // Cutoff search.
    let mut peak = g(0.0).re;
    let mut cutoff = None;
    let mut t = scale;
    for _ in 0..80 {
        let re = g(t).re;
        peak = peak.max(re);
        if re < peak - spec.drop_threshold {
            cutoff = Some(t);
            break;
        }
        t *= 2.0;
    }
    let cutoff = cutoff.ok_or_else(|| Error::Quadrature {
        message: "integrand did not decay within the cutoff search range".into(),
        estimate: f64::NAN,
        bound: f64::INFINITY,
    })?;

    // Base panels: uniform width `scale` near the origin, then geometric.
    let mut bounds = vec![0.0];
    let mut hi = 0.0;
    let mut width = scale.min(cutoff);
    while hi < cutoff {
        hi = (hi + width).min(cutoff);
        bounds.push(hi);
        if hi > 4.0 * scale {
            width *= 1.5;
        }
    }

    let rule = gauss_legendre(spec.nodes_per_panel);
    let mut prev: Option<LogScaled> = None;
    let mut subdiv = 1usize;
    loop {
        if (bounds.len() - 1) * subdiv > spec.max_panels {
            let est = prev.map(|v| v.to_real()).unwrap_or(f64::NAN);
            return Err(Error::Quadrature {
                message: "panel budget exhausted before reaching rel_tol".into(),
                estimate: est,
                bound: f64::NAN,
            });
        }
        // Evaluate all nodes first to find the pivot, then accumulate.
        let mut evals: Vec<(f64, f64, f64)> = Vec::new();
        let mut pivot = f64::NEG_INFINITY;
        for w in bounds.windows(2) {
            let step = (w[1] - w[0]) / subdiv as f64;
            for s in 0..subdiv {
                let (a, b) = (w[0] + step * s as f64, w[0] + step * (s + 1) as f64);
                let half = 0.5 * (b - a);
                let mid = 0.5 * (a + b);
                for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
                    let v = g(mid + half * x);
                    pivot = pivot.max(v.re);
                    evals.push((v.re, v.im, wt * half));
                }
            }
        }
        let mut sum = 0.0;
        for (re, im, wt) in evals {
            sum += wt * (re - pivot).exp() * im.cos();
        }
        let value = LogScaled::from_real(sum)
            * LogScaled::from_ln(pivot - std::f64::consts::PI.ln());
        if let Some(p) = prev {
            if value.rel_diff(p) <= spec.rel_tol || (value.is_zero() && p.is_zero()) {
                return Ok(value);
            }
        }
        prev = Some(value);
        subdiv *= 2;
    }
}

/// Composite Gauss-Legendre on [a, b] with panel doubling until the result
/// moves by less than `rel_tol` (relatively) or `abs_tol` (absolutely).
pub(crate) fn integrate_doubling<F>(
    f: F,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let rule = gauss_legendre(16);
    let mut panels = 4usize;
    let mut prev: Option<f64> = None;
    while panels <= max_panels {
        let step = (b - a) / panels as f64;
        let mut sum = 0.0;
        for p in 0..panels {
            let lo = a + step * p as f64;
            let half = 0.5 * step;
            let mid = lo + half;
            for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
                sum += wt * half * f(mid + half * x);
            }
        }
        if let Some(p) = prev {
            if (sum - p).abs() <= rel_tol * sum.abs() + abs_tol {
                return Ok(sum);
            }
        }
        prev = Some(sum);
        panels *= 2;
    }
    Err(Error::Quadrature {
        message: "finite-interval quadrature did not converge".into(),
        estimate: prev.unwrap_or(f64::NAN),
        bound: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl_rule_integrates_polynomials_exactly() {
        let rule = gauss_legendre(8);
        // Degree-15 polynomial x^14 on [-1,1]: 2/15.
        let s: f64 = rule
            .nodes
            .iter()
            .zip(&rule.weights)
            .map(|(&x, &w)| w * x.powi(14))
            .sum();
        assert!((s - 2.0 / 15.0).abs() < 1e-14);
        let total: f64 = rule.weights.iter().sum();
        assert!((total - 2.0).abs() < 1e-14);
    }

    #[test]
    fn halfline_gaussian() {
        // (1/π) ∫_0^∞ e^{-t²/2} dt = 1/√(2π)
        let spec = QuadratureSpec::default();
        let v = halfline_log_re(
            |t| Complex64::new(-0.5 * t * t, 0.0),
            1.0,
            &spec,
        )
        .unwrap();
        let expect = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
        assert!((v.to_real() - expect).abs() < 1e-12);
    }

    #[test]
    fn halfline_oscillatory() {
        // (1/π) Re ∫_0^∞ e^{-t + 5it} dt = (1/π) · 1/26
        let spec = QuadratureSpec::default();
        let v = halfline_log_re(|t| Complex64::new(-t, 5.0 * t), 0.5, &spec).unwrap();
        let expect = (1.0 / 26.0) / std::f64::consts::PI;
        assert!((v.to_real() - expect).abs() < 1e-12 * expect.abs().max(1.0));
    }

    #[test]
    fn doubling_integrates_smooth_function() {
        let v = integrate_doubling(|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 0.0, 1 << 16)
            .unwrap();
        assert!((v - 2.0).abs() < 1e-11);
    }
}
