//! Meijer G-type quantities behind the product-ensemble statistics: the
//! coefficients `a_{j,k}` (vertical-contour route plus an independent
//! m-fold-integral oracle route) and the weight function `w_m`.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quad::{gauss_legendre, halfline_log_re};
use crate::specfun::{digamma, log_gamma_complex, trigamma, LogScaled};

/// Tolerances and budgets for the contour and chain quadratures.
#[derive(Clone, Debug, Serialize)]
pub struct QuadratureSpec {
    /// Target relative error of returned values.
    pub rel_tol: f64,
    /// Gauss-Legendre nodes per panel.
    pub nodes_per_panel: usize,
    /// Natural-log drop below the integrand peak at which contours are cut.
    pub drop_threshold: f64,
    /// Total panel budget per integral.
    pub max_panels: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            rel_tol: 1e-10,
            nodes_per_panel: 32,
            drop_threshold: 40.0,
            max_panels: 1 << 14,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain("rel_tol must be positive".into()));
        }
        if self.nodes_per_panel < 8 {
            return Err(Error::Domain("nodes_per_panel must be at least 8".into()));
        }
        if !(self.drop_threshold >= 30.0) {
            return Err(Error::Domain(
                "drop_threshold must be at least 30 natural-log units".into(),
            ));
        }
        if self.max_panels < 16 {
            return Err(Error::Domain("max_panels must be at least 16".into()));
        }
        Ok(())
    }
}

/// One coefficient `a_{j,k}` for a given number of factors `m`.
#[derive(Clone, Copy, Debug)]
pub struct MeijerCoefficient {
    pub m: u32,
    pub j: u32,
    pub k: u32,
    pub value: LogScaled,
}

fn check_indices(m: u32, j: u32, k: u32) -> Result<()> {
    if m < 1 || j < 1 || k < 1 {
        return Err(Error::Domain(format!(
            "coefficient indices must satisfy m,j,k >= 1 (got m={m}, j={j}, k={k})"
        )));
    }
    Ok(())
}

/// `a_{j,k}` by the vertical-line contour
/// `(1/2πi) ∫ Γ(k-s)^m Γ(j-1/2+s)^m / (-s) ds` on `Re s = -1/4`.
///
/// Conjugate symmetry folds the line onto `η ∈ [0, ∞)`; the integrand is
/// finite at `η = 0` since `-s = 1/4` there. All evaluation happens in
/// log-space with a single pivot per call.
pub fn coeff_a(m: u32, j: u32, k: u32, spec: &QuadratureSpec) -> Result<MeijerCoefficient> {
    check_indices(m, j, k)?;
    spec.validate()?;
    let mf = f64::from(m);
    let aj = f64::from(j) - 0.75; // Re of Γ(j - 1/2 + s) on the contour
    let ak = f64::from(k) + 0.25; // Re of Γ(k - s) on the contour

    let g = move |eta: f64| -> Complex64 {
        let s = Complex64::new(-0.25, eta);
        let lg1 = log_gamma_complex(Complex64::new(ak, 0.0) - Complex64::new(0.0, eta))
            .expect("contour stays off the gamma poles");
        let lg2 = log_gamma_complex(Complex64::new(aj, 0.0) + Complex64::new(0.0, eta))
            .expect("contour stays off the gamma poles");
        mf * (lg1 + lg2) - (-s).ln()
    };

    // Curvature of the log-modulus at η = 0 sets the panel scale; the
    // phase drift bounds it from above so each panel sees few oscillations.
    let curvature = mf * (trigamma(ak) + trigamma(aj)) + 16.0;
    let sigma = curvature.recip().sqrt();
    let phase_rate = (mf * (digamma(aj) - digamma(ak)) + 4.0).abs();
    let scale = (2.0 * sigma).min(0.5 * spec.nodes_per_panel as f64 / phase_rate.max(1e-9));

    let value = halfline_log_re(g, scale, spec)?;
    if value.sign() != 1 {
        return Err(Error::NumericalConsistency(format!(
            "a_{{{j},{k}}}(m={m}) came out non-positive"
        )));
    }
    Ok(MeijerCoefficient { m, j, k, value })
}

/// `I_{j,k}(m) = a_{j,k} Γ(j+k-1/2)^{-m}`, log-scaled.
pub fn coeff_i(m: u32, j: u32, k: u32, spec: &QuadratureSpec) -> Result<LogScaled> {
    let a = coeff_a(m, j, k, spec)?;
    coeff_i_from_a(a.value, m, j, k)
}

pub(crate) fn coeff_i_from_a(a: LogScaled, m: u32, j: u32, k: u32) -> Result<LogScaled> {
    let lg = log_gamma_complex(Complex64::new(f64::from(j) + f64::from(k) - 0.5, 0.0))?.re;
    a.div(LogScaled::from_ln(f64::from(m) * lg))
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Independent oracle route for `a_{j,k}`: the m-fold nested integral over
/// the chain variables `x_m ∈ (1,∞)`, `x_{m-1},…,x_1 ∈ (0,∞)`, evaluated
/// level by level on logarithmic grids (trapezoid in `t = ln x`), times
/// `Γ(j+k-1/2)^m`.
///
/// Guarded to `m <= 3`, `j,k <= 12`; the chain cost grows quickly beyond.
pub fn coeff_a_oracle(m: u32, j: u32, k: u32, spec: &QuadratureSpec) -> Result<LogScaled> {
    check_indices(m, j, k)?;
    spec.validate()?;
    if m > 3 || j > 12 || k > 12 {
        return Err(Error::UnsupportedRange(format!(
            "coeff_a_oracle supports m <= 3 and j,k <= 12 (got m={m}, j={j}, k={k})"
        )));
    }
    let mf = f64::from(m);
    let jf = f64::from(j);
    let kf = f64::from(k);
    let jm = jf - 0.5;
    let e = jf + kf - 0.5;

    // Final factor E(t) = exp(k t - e softplus(t)) and chain kernel
    // K(d) = exp(jm d - e softplus(d)); supports where the log stays within
    // `reach` of the respective peak.
    let reach = spec.drop_threshold + 12.0;
    let log_e = move |t: f64| kf * t - e * softplus(t);
    let log_k = move |d: f64| jm * d - e * softplus(d);
    let e_peak = (kf / jm).ln();
    let (e_lo, e_hi) = (e_peak - reach / kf - 3.0, e_peak + reach / jm + 3.0);
    let k_peak = (jm / kf).ln();
    let (k_lo, k_hi) = (k_peak - reach / jm - 3.0, k_peak + reach / kf + 3.0);

    let base_h = 0.5 / (1.0 + (jf + kf) / 8.0).sqrt();
    let lggamma = log_gamma_complex(Complex64::new(e, 0.0))?.re;

    let mut prev: Option<LogScaled> = None;
    let mut h = base_h;
    for _ in 0..6 {
        let value = chain_integral(m, h, (e_lo, e_hi), (k_lo, k_hi), &log_e, &log_k, spec);
        let value = value * LogScaled::from_ln(mf * lggamma);
        if let Some(p) = prev {
            if value.rel_diff(p) <= spec.rel_tol.max(1e-12) {
                return Ok(value);
            }
        }
        prev = Some(value);
        h *= 0.5;
    }
    Err(Error::Quadrature {
        message: format!("coeff_a_oracle chain did not converge for m={m}, j={j}, k={k}"),
        estimate: prev.map(|v| v.to_real()).unwrap_or(f64::NAN),
        bound: f64::NAN,
    })
}

/// Chain evaluation: the convolution levels run on uniform log grids over
/// the whole line (trapezoid, spectrally accurate for these decaying
/// analytic integrands), while the outermost level integrates over
/// `t_m >= 0` with composite Gauss-Legendre panels since the integrand
/// does not vanish at the hard boundary `x_m = 1`.
#[allow(clippy::too_many_arguments)]
fn chain_integral(
    m: u32,
    h: f64,
    (e_lo, e_hi): (f64, f64),
    (k_lo, k_hi): (f64, f64),
    log_e: &dyn Fn(f64) -> f64,
    log_k: &dyn Fn(f64) -> f64,
    spec: &QuadratureSpec,
) -> LogScaled {
    let grid = |lo: f64, hi: f64| -> Vec<f64> {
        let n = ((hi - lo) / h).ceil() as usize + 1;
        (0..n).map(|i| lo + h * i as f64).collect()
    };

    // Level 0: log E sampled on its own support.
    let mut support = (e_lo, e_hi);
    let mut ts = grid(support.0, support.1);
    let mut logf: Vec<f64> = ts.iter().map(|&t| log_e(t)).collect();

    for _ in 2..m {
        // Inner convolution levels; the next support collects t_next with
        // t - t_next inside the kernel support for some t in the current
        // support.
        let next = (support.0 - k_hi, support.1 - k_lo);
        let nts = grid(next.0, next.1);
        let nlogf: Vec<f64> = nts
            .iter()
            .map(|&tn| log_conv_at(tn, &ts, &logf, log_k, h))
            .collect();
        support = next;
        ts = nts;
        logf = nlogf;
    }

    // Outer level. For m == 1 the integrand is E itself; otherwise it is
    // one more convolution against the current level, evaluated at
    // arbitrary outer nodes.
    let outer_hi = if m == 1 {
        e_hi.max(1.0)
    } else {
        (support.1 - k_lo).max(1.0)
    };
    let outer_log = |t: f64| -> f64 {
        if m == 1 {
            log_e(t)
        } else {
            log_conv_at(t, &ts, &logf, log_k, h)
        }
    };

    let rule = gauss_legendre(spec.nodes_per_panel);
    let width = (16.0 * h).min(2.0);
    let panels = (outer_hi / width).ceil() as usize;
    let mut evals: Vec<(f64, f64)> = Vec::with_capacity(panels * rule.nodes.len());
    let mut pivot = f64::NEG_INFINITY;
    for p in 0..panels {
        let lo = outer_hi * p as f64 / panels as f64;
        let hi = outer_hi * (p + 1) as f64 / panels as f64;
        let half = 0.5 * (hi - lo);
        let mid = 0.5 * (lo + hi);
        for (&x, &wt) in rule.nodes.iter().zip(&rule.weights) {
            let v = outer_log(mid + half * x);
            pivot = pivot.max(v);
            evals.push((v, wt * half));
        }
    }
    if pivot == f64::NEG_INFINITY {
        return LogScaled::ZERO;
    }
    let s: f64 = evals.iter().map(|&(v, wt)| wt * (v - pivot).exp()).sum();
    LogScaled::from_real(s) * LogScaled::from_ln(pivot)
}

/// log of `h * Σ_i K(t_i - t) F(t_i)` with pivoting.
fn log_conv_at(t: f64, ts: &[f64], logf: &[f64], log_k: &dyn Fn(f64) -> f64, h: f64) -> f64 {
    let mut pivot = f64::NEG_INFINITY;
    let mut vals = Vec::with_capacity(ts.len());
    for (&ti, &lf) in ts.iter().zip(logf) {
        let v = log_k(ti - t) + lf;
        pivot = pivot.max(v);
        vals.push(v);
    }
    if pivot == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = vals.iter().map(|&v| (v - pivot).exp()).sum();
    pivot + (s * h).ln()
}

/// The weight function `w_m(x)`: the Mellin-Barnes inversion
/// `(1/2πi) ∫ Γ(t)^m z^{-t} dt` at `z = x²/2^m`, evaluated on the vertical
/// line through the saddle of the log-integrand.
///
/// Even in `x` by construction (evaluated at `|x|`). `x = 0` is only
/// defined for `m = 1` (`w_1(0) = 1`); the function diverges
/// logarithmically at the origin for `m >= 2`.
pub fn weight_w(m: u32, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    Ok(weight_w_log(m, x, spec)?.to_real())
}

/// Log-scaled variant of [`weight_w`]; the weight underflows doubles far
/// out in the tail while moment integrands against it stay finite.
pub(crate) fn weight_w_log(m: u32, x: f64, spec: &QuadratureSpec) -> Result<LogScaled> {
    if m < 1 {
        return Err(Error::Domain("weight_w requires m >= 1".into()));
    }
    spec.validate()?;
    let x = x.abs();
    if x == 0.0 {
        if m == 1 {
            return Ok(LogScaled::ONE);
        }
        return Err(Error::Domain(
            "weight_w diverges at x = 0 for m >= 2".into(),
        ));
    }
    let mf = f64::from(m);
    let ln_z = 2.0 * x.ln() - mf * std::f64::consts::LN_2;

    // Contour abscissa: the saddle of m logΓ(c) - c ln z, i.e. the root of
    // ψ(c) = ln(z)/m. Placing the line there keeps the integrand peak on
    // the same scale as the result for both tiny and huge arguments.
    let c = saddle_abscissa(ln_z / mf);
    let sigma = (mf * trigamma(c)).recip().sqrt();

    let g = move |tau: f64| -> Complex64 {
        let t = Complex64::new(c, tau);
        mf * log_gamma_complex(t).expect("contour stays right of the origin") - t * ln_z
    };
    let value = halfline_log_re(g, sigma, spec)?;
    if value.sign() != 1 {
        return Err(Error::NumericalConsistency(format!(
            "w_{m}({x}) came out non-positive"
        )));
    }
    Ok(value)
}

/// Root of ψ(c) = target by bisection; ψ is monotone on (0, ∞).
fn saddle_abscissa(target: f64) -> f64 {
    let mut lo = 1e-9;
    let mut hi = (target.exp() + 5.0).max(3.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if digamma(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

pub const CACHE_HEADER: &str = "ginprod-cache v1";

/// Thread-safe memo table for `a_{j,k}` log-magnitudes, keyed by
/// `(m, j, k)`. Values are deterministic, so concurrent recomputation of
/// the same key is benign (last writer wins).
#[derive(Default)]
pub struct CoeffCache {
    map: Mutex<HashMap<(u32, u32, u32), f64>>,
}

impl CoeffCache {
    pub fn new() -> CoeffCache {
        CoeffCache::default()
    }

    /// Memoized [`coeff_a`], returned as a positive log-scaled value.
    pub fn coeff_a(&self, m: u32, j: u32, k: u32, spec: &QuadratureSpec) -> Result<LogScaled> {
        if let Some(&log_a) = self.map.lock().unwrap().get(&(m, j, k)) {
            return Ok(LogScaled::from_ln(log_a));
        }
        let a = coeff_a(m, j, k, spec)?;
        self.map
            .lock()
            .unwrap()
            .insert((m, j, k), a.value.ln_abs());
        Ok(a.value)
    }

    /// Memoized `I_{j,k}(m)`.
    pub fn coeff_i(&self, m: u32, j: u32, k: u32, spec: &QuadratureSpec) -> Result<LogScaled> {
        let a = self.coeff_a(m, j, k, spec)?;
        coeff_i_from_a(a, m, j, k)
    }

    pub fn len(&self) -> usize {
        self.map.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Parses the versioned plain-text format: header line, then one
    /// `m j k log_a` record per line.
    pub fn load(path: &Path) -> Result<CoeffCache> {
        let file = std::fs::File::open(path)?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Format("empty cache file".into()))??;
        if header.trim() != CACHE_HEADER {
            return Err(Error::Format(format!(
                "bad cache header {header:?}, expected {CACHE_HEADER:?}"
            )));
        }
        let mut map = HashMap::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let parsed = (|| -> Option<((u32, u32, u32), f64)> {
                if fields.len() != 4 {
                    return None;
                }
                let m = fields[0].parse().ok()?;
                let j = fields[1].parse().ok()?;
                let k = fields[2].parse().ok()?;
                let log_a = fields[3].parse().ok()?;
                Some(((m, j, k), log_a))
            })()
            .ok_or_else(|| {
                Error::Format(format!("bad cache record on line {}", lineno + 2))
            })?;
            map.insert(parsed.0, parsed.1);
        }
        Ok(CoeffCache {
            map: Mutex::new(map),
        })
    }

    /// Writes records sorted by key, so the file is deterministic.
    pub fn save(&self, path: &Path) -> Result<()> {
        let map = self.map.lock().unwrap();
        let mut entries: Vec<_> = map.iter().collect();
        entries.sort_by_key(|(k, _)| **k);
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{CACHE_HEADER}")?;
        for (&(m, j, k), &log_a) in entries {
            writeln!(out, "{m} {j} {k} {log_a:.17e}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQRT_PI_OVER_2: f64 = 1.253_314_137_315_500_3; // √(π/2)

    fn spec() -> QuadratureSpec {
        QuadratureSpec::default()
    }

    #[test]
    fn coeff_a_closed_form_anchors() {
        // m = 1 antiderivative: I_{1,1} = ∫_1^∞ (1+x)^{-3/2} dx = √2, so
        // a_{1,1} = Γ(3/2)√2 = √(π/2); I_{1,2} = (5/6)√2 gives
        // a_{1,2} = Γ(5/2)(5/6)√2 = 5√(2π)/8.
        let a11 = coeff_a(1, 1, 1, &spec()).unwrap().value.to_real();
        assert!((a11 - SQRT_PI_OVER_2).abs() < 1e-10, "a_11 = {a11}");
        let a12 = coeff_a(1, 1, 2, &spec()).unwrap().value.to_real();
        let expect = 5.0 * (2.0 * std::f64::consts::PI).sqrt() / 8.0;
        assert!((a12 - expect).abs() < 1e-10, "a_12 = {a12}");
    }

    #[test]
    fn coeff_i_small_cases_match_one_dim_quadrature() {
        // I_{j,k}(1) = ∫_1^∞ x^{k-1}(1+x)^{-(j+k-1/2)} dx, checked by a
        // plain panel-doubling quadrature after x = 1/y², which maps the
        // tail to [0,1] with a smooth integrand 2 y^{2j-2} (1+y²)^{-e}.
        for (j, k) in [(1u32, 1u32), (1, 2), (2, 1), (3, 2), (4, 4)] {
            let e = f64::from(j) + f64::from(k) - 0.5;
            let jf = f64::from(j);
            let oracle = crate::quad::integrate_doubling(
                |y: f64| 2.0 * y.powf(2.0 * jf - 2.0) / (1.0 + y * y).powf(e),
                0.0,
                1.0,
                1e-13,
                0.0,
                1 << 14,
            )
            .unwrap();
            let got = coeff_i(1, j, k, &spec()).unwrap().to_real();
            assert!(
                (got - oracle).abs() <= 1e-10 * oracle,
                "I_{{{j},{k}}}(1): got {got}, oracle {oracle}"
            );
        }
    }

    #[test]
    fn oracle_matches_closed_forms_at_m1() {
        let v = coeff_a_oracle(1, 1, 1, &spec()).unwrap().to_real();
        assert!((v - SQRT_PI_OVER_2).abs() < 1e-9, "oracle a_11 = {v}");
        // a_{3,1} = Γ(7/2) ∫_1^∞ (1+x)^{-7/2} dx = Γ(7/2) (2/5) 2^{-5/2}.
        let gamma_7_2 = 15.0 / 8.0 * std::f64::consts::PI.sqrt();
        let expect = gamma_7_2 * 0.4 * 2f64.powf(-2.5);
        let v31 = coeff_a_oracle(1, 3, 1, &spec()).unwrap().to_real();
        assert!((v31 - expect).abs() < 1e-9 * expect, "oracle a_31 = {v31}");
    }

    #[test]
    fn contour_and_oracle_routes_agree() {
        for (m, j, k) in [(2u32, 2u32, 2u32), (2, 1, 3), (3, 2, 1), (3, 4, 4)] {
            let a = coeff_a(m, j, k, &spec()).unwrap().value;
            let o = coeff_a_oracle(m, j, k, &spec()).unwrap();
            let rel = a.rel_diff(o);
            assert!(rel <= 1e-8, "routes differ by {rel} at (m,j,k)=({m},{j},{k})");
        }
    }

    #[test]
    fn oracle_guard_rejects_large_indices() {
        assert!(matches!(
            coeff_a_oracle(4, 1, 1, &spec()),
            Err(Error::UnsupportedRange(_))
        ));
        assert!(matches!(
            coeff_a_oracle(2, 13, 1, &spec()),
            Err(Error::UnsupportedRange(_))
        ));
    }

    #[test]
    fn invalid_indices_are_domain_errors() {
        assert!(matches!(coeff_a(0, 1, 1, &spec()), Err(Error::Domain(_))));
        assert!(matches!(coeff_a(1, 0, 1, &spec()), Err(Error::Domain(_))));
    }

    #[test]
    fn resolution_stability() {
        // Doubling nodes_per_panel moves the value by at most rel_tol.
        let coarse = coeff_a(2, 3, 4, &spec()).unwrap().value;
        let fine_spec = QuadratureSpec {
            nodes_per_panel: 64,
            ..spec()
        };
        let fine = coeff_a(2, 3, 4, &fine_spec).unwrap().value;
        assert!(coarse.rel_diff(fine) <= 2.0 * spec().rel_tol);
    }

    #[test]
    fn coeff_a_large_indices_stay_positive_and_finite() {
        let v = coeff_a(3, 120, 121, &spec()).unwrap().value;
        assert_eq!(v.sign(), 1);
        assert!(v.ln_abs().is_finite());
    }

    #[test]
    fn weight_m1_is_gaussian() {
        for &x in &[0.0, 0.5, 1.0, 2.0] {
            let w = weight_w(1, x, &spec()).unwrap();
            let expect = (-0.5 * x * x).exp();
            assert!((w - expect).abs() < 1e-10, "w_1({x}) = {w}");
        }
    }

    #[test]
    fn weight_m2_matches_scalar_product_reduction() {
        // Reduce the defining m = 2 convolution to one dimension:
        // w_2(x) = 2 ∫_0^∞ e^{-t²/2 - x²/(2t²)} dt/t, evaluated on a log
        // grid (t = e^u) by trapezoid.
        let reduction = |x: f64| {
            let f = |u: f64| {
                let t2 = (2.0 * u).exp();
                2.0 * (-0.5 * t2 - 0.5 * x * x / t2).exp()
            };
            let (lo, hi, n) = (-22.0, 4.0, 8000);
            let h = (hi - lo) / n as f64;
            let mut s = 0.5 * (f(lo) + f(hi));
            for i in 1..n {
                s += f(lo + h * i as f64);
            }
            s * h
        };
        for &x in &[0.5, 1.0, 2.0] {
            let w = weight_w(2, x, &spec()).unwrap();
            let oracle = reduction(x);
            assert!(
                (w - oracle).abs() < 1e-8 * oracle.max(1.0),
                "w_2({x}) = {w} vs {oracle}"
            );
        }
    }

    #[test]
    fn weight_is_even_and_positive() {
        for m in 1..=3u32 {
            for &x in &[0.3, 1.0, 2.5, 7.0] {
                let wp = weight_w(m, x, &spec()).unwrap();
                let wn = weight_w(m, -x, &spec()).unwrap();
                assert!(wp > 0.0);
                assert_eq!(wp, wn);
            }
        }
    }

    #[test]
    fn weight_origin_domain() {
        assert!((weight_w(1, 0.0, &spec()).unwrap() - 1.0).abs() < 1e-15);
        assert!(matches!(weight_w(2, 0.0, &spec()), Err(Error::Domain(_))));
    }

    #[test]
    fn weight_deep_tail_stays_accurate() {
        // w_1 far out in the tail exercises the large-z saddle contour.
        let x = 12.0;
        let w = weight_w_log(1, x, &spec()).unwrap();
        let expect = -0.5 * x * x;
        assert!((w.ln_abs() - expect).abs() < 1e-9 * expect.abs());
    }

    #[test]
    fn cache_memoizes_and_round_trips() {
        let cache = CoeffCache::new();
        let s = spec();
        let v1 = cache.coeff_a(2, 3, 4, &s).unwrap();
        let v2 = cache.coeff_a(2, 3, 4, &s).unwrap();
        assert_eq!(v1.ln_abs(), v2.ln_abs());
        assert_eq!(cache.len(), 1);

        let dir = std::env::temp_dir().join("ginprod-cache-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("coeffs.txt");
        cache.save(&path).unwrap();
        let loaded = CoeffCache::load(&path).unwrap();
        let v3 = loaded.coeff_a(2, 3, 4, &s).unwrap();
        assert_eq!(v1.ln_abs(), v3.ln_abs());

        std::fs::write(&path, "not-a-cache v9\n").unwrap();
        assert!(matches!(CoeffCache::load(&path), Err(Error::Format(_))));
        let _ = std::fs::remove_dir_all(&dir);
    }
}
