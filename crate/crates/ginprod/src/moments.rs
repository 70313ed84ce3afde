//! Exact finite-size statistics: the moments `M_{k,N}(m)` of the real
//! spectrum, the expected number of real eigenvalues, and the one-point
//! density in unscaled, scaled, and normalized forms.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::meijer::{weight_w_log, CoeffCache, QuadratureSpec};
use crate::quad::gauss_legendre;
use crate::specfun::{log_factorial, LogScaled};

const LN_SQRT_PI: f64 = 0.572_364_942_924_700_1;
const LN_2_SQRT_2PI: f64 = 1.612_085_713_764_618; // ln(2 √(2π))

/// The pair (N, m) identifying the product ensemble: N must be even (the
/// kernel formulas require it) and at least 2, m at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EnsembleParams {
    n: u32,
    m: u32,
}

impl EnsembleParams {
    pub fn new(n: u32, m: u32) -> Result<EnsembleParams> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::Usage(format!(
                "N must be even and at least 2 (got {n}); odd N is not supported"
            )));
        }
        if m < 1 {
            return Err(Error::Usage(format!("m must be at least 1 (got {m})")));
        }
        Ok(EnsembleParams { n, m })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// The eigenvalue scale N^{m/2}.
    pub fn scale(&self) -> f64 {
        (self.n as f64).powf(0.5 * self.m as f64)
    }

    /// Double precision carries the moment sums comfortably only in this
    /// range; the N = 2 case has no cancellation (the second sum is
    /// empty), so larger m is allowed there.
    fn guard_moment(&self, k: u32) -> Result<()> {
        if k > 8 {
            return Err(Error::UnsupportedRange(format!(
                "moment order k = {k} exceeds the supported k <= 8"
            )));
        }
        if self.n > 400 {
            return Err(Error::UnsupportedRange(format!(
                "N = {} exceeds the supported N <= 400",
                self.n
            )));
        }
        let m_cap = if self.n == 2 { 16 } else { 4 };
        if self.m > m_cap {
            return Err(Error::UnsupportedRange(format!(
                "m = {} exceeds the supported m <= {m_cap} at N = {}",
                self.m, self.n
            )));
        }
        Ok(())
    }

    fn guard_density(&self) -> Result<()> {
        if self.n > 400 || self.m > 4 {
            return Err(Error::UnsupportedRange(format!(
                "density evaluation supports N <= 400 and m <= 4 (got N={}, m={})",
                self.n, self.m
            )));
        }
        Ok(())
    }
}

/// Exact moment `M_{k,N}(m)` of the scaled real-eigenvalue density.
///
/// Odd orders vanish identically (the density is even) and are returned
/// without computation. Even orders are assembled term by term in
/// log-space from the coefficient sums and returned as the difference of
/// the two partial sums.
pub fn moment_exact(
    params: EnsembleParams,
    k: u32,
    spec: &QuadratureSpec,
    cache: &CoeffCache,
) -> Result<f64> {
    if k % 2 == 1 {
        return Ok(0.0);
    }
    params.guard_moment(k)?;
    let (m1, m2) = moment_parts(params, k / 2, spec, cache)?;
    Ok(m1 - m2)
}

/// The two positive sums whose difference is `M_{2κ,N}(m)`. Exposed for
/// the sign-structure checks; the cancellation between them is only of
/// order √(m/N).
pub(crate) fn moment_parts(
    params: EnsembleParams,
    kappa: u32,
    spec: &QuadratureSpec,
    cache: &CoeffCache,
) -> Result<(f64, f64)> {
    let m = params.m;
    let mf = m as f64;
    let kf = kappa as f64;
    let ln_n = (params.n as f64).ln();
    let half = params.n / 2;

    let term1 = |j: u32| -> Result<f64> {
        let a = cache.coeff_a(m, j + 1, j + kappa + 1, spec)?
            + cache.coeff_a(m, j + kappa + 1, j + 1, spec)?;
        let ln_t = mf * f64::from(2 * j + kappa) * std::f64::consts::LN_2
            - mf * (LN_SQRT_PI + log_factorial(u64::from(2 * j)))
            - mf * kf * ln_n
            + a.ln_abs();
        Ok(ln_t.exp())
    };
    let term2 = |j: u32| -> Result<f64> {
        let a = cache.coeff_a(m, j + kappa + 2, j + 1, spec)?
            + cache.coeff_a(m, j + 2, j + kappa + 1, spec)?;
        let ln_t = mf * f64::from(2 * j + 1 + kappa) * std::f64::consts::LN_2
            - mf * (LN_SQRT_PI + log_factorial(u64::from(2 * j + 1)))
            - mf * kf * ln_n
            + a.ln_abs();
        Ok(ln_t.exp())
    };

    let t1: Result<Vec<f64>> = (0..half).into_par_iter().map(term1).collect();
    let m1: f64 = t1?.iter().sum();
    // Empty for N = 2.
    let t2: Result<Vec<f64>> = (0..half.saturating_sub(1)).into_par_iter().map(term2).collect();
    let m2: f64 = t2?.iter().sum();
    Ok((m1, m2))
}

/// `E(N_R) = M_{0,N}(m)`.
pub fn expected_real_count(
    params: EnsembleParams,
    spec: &QuadratureSpec,
    cache: &CoeffCache,
) -> Result<f64> {
    moment_exact(params, 0, spec, cache)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct MomentRow {
    pub k: u32,
    pub exact: f64,
    pub asymptotic: f64,
    pub limit: f64,
}

/// Exact, leading-order asymptotic, and limiting values for orders
/// `0..=k_max`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentTable {
    pub params: EnsembleParams,
    pub rows: Vec<MomentRow>,
}

pub fn moment_table(
    params: EnsembleParams,
    k_max: u32,
    spec: &QuadratureSpec,
    cache: &CoeffCache,
) -> Result<MomentTable> {
    let mut rows = Vec::with_capacity(k_max as usize + 1);
    for k in 0..=k_max {
        rows.push(MomentRow {
            k,
            exact: moment_exact(params, k, spec, cache)?,
            asymptotic: crate::asymptotics::moment_asymptotic(params, k),
            limit: crate::asymptotics::limit_moment(params.m, k),
        });
    }
    Ok(MomentTable { params, rows })
}

/// Coordinate convention of a density curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DensityScaling {
    /// ρ_1 in raw eigenvalue coordinates.
    #[serde(rename = "unscaled")]
    Unscaled,
    /// ρ of eigenvalues scaled by N^{-m/2}; integrates to E(N_R).
    #[serde(rename = "scaled_N_minus_m_over_2")]
    Scaled,
    /// h_{N,m}: the scaled density divided by E(N_R); unit mass.
    #[serde(rename = "normalized")]
    Normalized,
}

/// A sampled density: ordered abscissae with non-negative values and an
/// explicit scaling tag.
#[derive(Clone, Debug, Serialize)]
pub struct DensityCurve {
    pub scaling: DensityScaling,
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
}

impl DensityCurve {
    pub fn new(scaling: DensityScaling, grid: Vec<f64>, values: Vec<f64>) -> Result<DensityCurve> {
        if grid.len() != values.len() {
            return Err(Error::Domain(
                "density grid and values must have equal length".into(),
            ));
        }
        if grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain(
                "density grid must be strictly increasing".into(),
            ));
        }
        if values.iter().any(|&v| !(v >= 0.0)) {
            return Err(Error::Domain("density values must be non-negative".into()));
        }
        Ok(DensityCurve {
            scaling,
            grid,
            values,
        })
    }

    /// Trapezoid mass of the sampled curve.
    pub fn mass(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(x, v)| 0.5 * (x[1] - x[0]) * (v[0] + v[1]))
            .sum()
    }
}

/// Precomputed `w_m` values and prefix integrals `∫_0^b v^j w_m(v) dv` on
/// an adaptive panel layout: geometric panels against the logarithmic
/// origin singularity (m >= 2), then linear panels out to where the
/// largest needed power-weighted integrand has dropped below the peak by
/// the quadrature's drop threshold.
pub(crate) struct WeightTable {
    m: u32,
    bounds: Vec<f64>,
    ln_nodes: Vec<Vec<f64>>,
    wts: Vec<Vec<f64>>,
    logw: Vec<Vec<f64>>,
    /// cum[j][p]: ∫ v^j w over panels 0..=p.
    cum: Vec<Vec<LogScaled>>,
    /// full[j] = ∫_0^∞ v^j w (to table truncation).
    full: Vec<LogScaled>,
    v_max: f64,
}

/// Per-point evaluation state shared across all powers `j` at one `x`.
pub(crate) struct PointData {
    x: f64,
    /// ln w_m(x).
    ln_w_x: f64,
    /// Index of the panel containing x; bounds.len()-1 when x is beyond
    /// the table.
    panel: usize,
    /// Fresh nodes on [panel.lo, x]: (ln v, weight, ln w(v)).
    part: Vec<(f64, f64, f64)>,
}

const V_FLOOR_EXP: i32 = -48;

impl WeightTable {
    /// `j_max` is the largest power integrated against the weight;
    /// `reach` extends coverage to at least that abscissa.
    pub(crate) fn build(
        m: u32,
        j_max: u32,
        reach: f64,
        spec: &QuadratureSpec,
    ) -> Result<WeightTable> {
        if m < 1 {
            return Err(Error::Domain("weight table requires m >= 1".into()));
        }
        spec.validate()?;
        let mf = f64::from(m);
        let p = f64::from(j_max) + 1.0;

        // Peak of v^{j_max+1} w_m(v) sits near (j_max+1)^{m/2}; extend the
        // table until the log-integrand has dropped well below it.
        let v_star = p.powf(0.5 * mf).max(1.0);
        let ln_peak = p * v_star.ln() + weight_w_log(m, v_star, spec)?.ln_abs();
        let mut v_max = v_star.max(reach).max(4.0);
        for _ in 0..400 {
            let ln_f = p * v_max.ln() + weight_w_log(m, v_max, spec)?.ln_abs();
            if ln_f < ln_peak - spec.drop_threshold - 10.0 {
                break;
            }
            v_max *= 1.25;
        }

        let mut bounds: Vec<f64> = (V_FLOOR_EXP..=0).map(|e| 2f64.powi(e)).collect();
        let width = if m == 1 { 1.0 } else { 2.0 };
        let mut hi = 1.0;
        while hi < v_max {
            hi += width;
            bounds.push(hi.min(v_max));
        }

        let rule = gauss_legendre(spec.nodes_per_panel);
        let panels = bounds.len() - 1;
        let node_v: Vec<Vec<f64>> = (0..panels)
            .map(|pidx| {
                let (lo, hi) = (bounds[pidx], bounds[pidx + 1]);
                let half = 0.5 * (hi - lo);
                let mid = 0.5 * (lo + hi);
                rule.nodes.iter().map(|&u| mid + half * u).collect()
            })
            .collect();
        let wts: Vec<Vec<f64>> = (0..panels)
            .map(|pidx| {
                let half = 0.5 * (bounds[pidx + 1] - bounds[pidx]);
                rule.weights.iter().map(|&w| w * half).collect()
            })
            .collect();
        let logw: Result<Vec<Vec<f64>>> = node_v
            .par_iter()
            .map(|vs| {
                vs.iter()
                    .map(|&v| Ok(weight_w_log(m, v, spec)?.ln_abs()))
                    .collect()
            })
            .collect();
        let logw = logw?;
        let ln_nodes: Vec<Vec<f64>> = node_v
            .iter()
            .map(|vs| vs.iter().map(|&v| v.ln()).collect())
            .collect();

        // Prefix integrals for every needed power.
        let cum: Vec<Vec<LogScaled>> = (0..=j_max)
            .into_par_iter()
            .map(|j| {
                let jf = f64::from(j);
                let mut acc = LogScaled::ZERO;
                let mut prefix = Vec::with_capacity(panels);
                for pidx in 0..panels {
                    acc = acc + panel_moment(jf, &ln_nodes[pidx], &wts[pidx], &logw[pidx]);
                    prefix.push(acc);
                }
                prefix
            })
            .collect();
        let full: Vec<LogScaled> = cum.iter().map(|c| *c.last().unwrap()).collect();

        Ok(WeightTable {
            m,
            bounds,
            ln_nodes,
            wts,
            logw,
            cum,
            full,
            v_max,
        })
    }

    pub(crate) fn v_max(&self) -> f64 {
        self.v_max
    }

    /// Shared state for evaluations at one abscissa `x >= 0`.
    pub(crate) fn point_data(&self, x: f64, spec: &QuadratureSpec) -> Result<PointData> {
        let ln_w_x = if x == 0.0 && self.m == 1 {
            0.0
        } else {
            weight_w_log(self.m, x, spec)?.ln_abs()
        };
        if x >= self.v_max {
            return Ok(PointData {
                x,
                ln_w_x,
                panel: self.bounds.len() - 1,
                part: Vec::new(),
            });
        }
        let panel = match self.bounds.binary_search_by(|b| b.partial_cmp(&x).unwrap()) {
            Ok(i) => i,
            Err(i) => i.saturating_sub(1),
        };
        let lo = self.bounds[panel.min(self.bounds.len() - 2)];
        let mut part = Vec::new();
        if x > lo {
            let rule = gauss_legendre(spec.nodes_per_panel);
            let half = 0.5 * (x - lo);
            let mid = 0.5 * (x + lo);
            for (&u, &w) in rule.nodes.iter().zip(&rule.weights) {
                let v = mid + half * u;
                part.push((v.ln(), w * half, weight_w_log(self.m, v, spec)?.ln_abs()));
            }
        }
        Ok(PointData {
            x,
            ln_w_x,
            panel,
            part,
        })
    }

    /// ∫_0^x v^j w dv.
    pub(crate) fn integral_below(&self, j: u32, pd: &PointData) -> LogScaled {
        let jf = f64::from(j);
        let whole = if pd.panel == 0 {
            LogScaled::ZERO
        } else {
            self.cum[j as usize][pd.panel - 1]
        };
        if pd.part.is_empty() {
            if pd.x >= self.v_max {
                return self.full[j as usize];
            }
            return whole;
        }
        let mut pivot = f64::NEG_INFINITY;
        let vals: Vec<(f64, f64)> = pd
            .part
            .iter()
            .map(|&(lnv, wt, lw)| {
                let v = jf * lnv + lw;
                pivot = pivot.max(v);
                (v, wt)
            })
            .collect();
        let s: f64 = vals.iter().map(|&(v, wt)| wt * (v - pivot).exp()).sum();
        whole + LogScaled::from_real(s) * LogScaled::from_ln(pivot)
    }

    /// ∫_0^∞ v^j w dv (up to table truncation).
    pub(crate) fn full_moment(&self, j: u32) -> LogScaled {
        self.full[j as usize]
    }

    /// ∫_0^∞ v^p w dv for arbitrary real p >= 0; single pass, uncached.
    pub(crate) fn moment_f(&self, p: f64) -> LogScaled {
        let mut pivot = f64::NEG_INFINITY;
        let mut terms: Vec<(f64, f64)> = Vec::new();
        for ((lns, ws), lws) in self.ln_nodes.iter().zip(&self.wts).zip(&self.logw) {
            for ((&lnv, &wt), &lw) in lns.iter().zip(ws).zip(lws) {
                let v = p * lnv + lw;
                pivot = pivot.max(v);
                terms.push((v, wt));
            }
        }
        let s: f64 = terms.iter().map(|&(v, wt)| wt * (v - pivot).exp()).sum();
        LogScaled::from_real(s) * LogScaled::from_ln(pivot)
    }

    /// The partial signed moment A_j(x) = ∫ w(v) sgn(x-v) v^j dv as a
    /// signed log-scaled value. Splits by the parity of j: for even j the
    /// integral reduces to 2 sgn(x) ∫_0^|x|, for odd j to -2 ∫_{|x|}^∞.
    pub(crate) fn a_signed(&self, j: u32, x: f64, pd: &PointData) -> LogScaled {
        let two = LogScaled::from_real(2.0);
        if j % 2 == 0 {
            if x == 0.0 {
                return LogScaled::ZERO;
            }
            let sgn = LogScaled::from_real(x.signum());
            sgn * two * self.integral_below(j, pd)
        } else {
            let tail = self.full_moment(j) - self.integral_below(j, pd);
            -(two * tail)
        }
    }
}

fn panel_moment(jf: f64, ln_nodes: &[f64], wts: &[f64], logw: &[f64]) -> LogScaled {
    let mut pivot = f64::NEG_INFINITY;
    let mut vals = Vec::with_capacity(ln_nodes.len());
    for (&lnv, &lw) in ln_nodes.iter().zip(logw) {
        let v = jf * lnv + lw;
        pivot = pivot.max(v);
        vals.push(v);
    }
    if pivot == f64::NEG_INFINITY {
        return LogScaled::ZERO;
    }
    let s: f64 = vals
        .iter()
        .zip(wts)
        .map(|(&v, &wt)| wt * (v - pivot).exp())
        .sum();
    LogScaled::from_real(s) * LogScaled::from_ln(pivot)
}

/// A_j(x) = ∫ w_m(v) sgn(x-v) v^j dv.
///
/// Builds a fresh weight table per call; use [`DensityEvaluator`] when
/// many values are needed.
pub fn partial_signed_moment(m: u32, j: u32, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    let table = WeightTable::build(m, j, x.abs() + 1.0, spec)?;
    let pd = table.point_data(x.abs(), spec)?;
    Ok(table.a_signed(j, x, &pd).to_real())
}

/// One-point density machinery for a fixed ensemble: owns the weight
/// table sized for all powers up to N-1.
pub struct DensityEvaluator {
    params: EnsembleParams,
    spec: QuadratureSpec,
    table: WeightTable,
    norm: OnceLock<f64>,
}

impl DensityEvaluator {
    pub fn new(params: EnsembleParams, spec: &QuadratureSpec) -> Result<DensityEvaluator> {
        params.guard_density()?;
        let table = WeightTable::build(params.m, params.n - 1, 1.3 * params.scale(), spec)?;
        Ok(DensityEvaluator {
            params,
            spec: spec.clone(),
            table,
            norm: OnceLock::new(),
        })
    }

    pub fn params(&self) -> EnsembleParams {
        self.params
    }

    /// The bracket x A_j(x) - A_{j+1}(x) at x > 0, in the same-sign split
    /// form: +2(x I_j^< + T_{j+1}) for even j, -2(x T_j + I_{j+1}^<) for
    /// odd j, where I^< integrates below x and T above. No cancellation
    /// occurs inside the bracket.
    fn bracket(&self, j: u32, x: f64, pd: &PointData) -> LogScaled {
        let two = LogScaled::from_real(2.0);
        let xs = LogScaled::from_real(x);
        if j % 2 == 0 {
            let below = self.table.integral_below(j, pd);
            let tail = self.table.full_moment(j + 1) - self.table.integral_below(j + 1, pd);
            two * (xs * below + tail)
        } else {
            let tail = self.table.full_moment(j) - self.table.integral_below(j, pd);
            let below = self.table.integral_below(j + 1, pd);
            -(two * (xs * tail + below))
        }
    }

    /// ρ_1(x): the unscaled one-point density of real eigenvalues,
    /// evaluated at |x| (the density is even).
    pub fn density_unscaled(&self, x: f64) -> Result<f64> {
        let y = x.abs();
        if y == 0.0 && self.params.m >= 2 {
            return Err(Error::Domain(
                "density diverges at x = 0 for m >= 2".into(),
            ));
        }
        let pd = self.table.point_data(y, &self.spec)?;
        let mf = f64::from(self.params.m);
        let mut sum = LogScaled::ZERO;
        let mut max_ln = f64::NEG_INFINITY;
        for j in 0..=self.params.n - 2 {
            let pow = if j == 0 { 0.0 } else { f64::from(j) * y.ln() };
            let ln_pref =
                pd.ln_w_x + pow - mf * (LN_2_SQRT_2PI + log_factorial(u64::from(j)));
            let term = LogScaled::from_ln(ln_pref) * self.bracket(j, y, &pd);
            max_ln = max_ln.max(term.ln_abs());
            sum = sum + term;
        }
        if sum.sign() >= 0 {
            return Ok(sum.to_real());
        }
        // Round-off can push an analytically non-negative value slightly
        // below zero near the support edge.
        if sum.ln_abs() - max_ln <= (1e-13f64).ln() {
            Ok(0.0)
        } else {
            Err(Error::NumericalConsistency(format!(
                "density at x = {x} came out negative beyond round-off ({})",
                sum.to_real()
            )))
        }
    }

    /// ρ^R_{N,m}(x) = N^{m/2} ρ_1(N^{m/2} x); integrates to E(N_R).
    pub fn density_scaled(&self, x: f64) -> Result<f64> {
        let s = self.params.scale();
        Ok(s * self.density_unscaled(s * x)?)
    }

    /// h_{N,m}(x) = ρ^R_{N,m}(x)/E(N_R); unit mass.
    pub fn density_normalized(&self, x: f64, cache: &CoeffCache) -> Result<f64> {
        let norm = self.normalizer(cache)?;
        Ok(self.density_scaled(x)? / norm)
    }

    /// E(N_R), memoized.
    pub fn normalizer(&self, cache: &CoeffCache) -> Result<f64> {
        if let Some(&v) = self.norm.get() {
            return Ok(v);
        }
        let v = expected_real_count(self.params, &self.spec, cache)?;
        let _ = self.norm.set(v);
        Ok(v)
    }

    /// A_j against this evaluator's table.
    pub fn partial_signed_moment(&self, j: u32, x: f64) -> Result<f64> {
        if j > self.params.n - 1 {
            return Err(Error::UnsupportedRange(format!(
                "evaluator table covers j <= {} (got {j})",
                self.params.n - 1
            )));
        }
        let pd = self.table.point_data(x.abs(), &self.spec)?;
        Ok(self.table.a_signed(j, x, &pd).to_real())
    }

    /// The defining sum at signed x with plain-double A_j values, without
    /// the evenness reduction; used to check the symmetry of the formula
    /// itself. Only safe at small N where A_j magnitudes fit in doubles.
    #[cfg(test)]
    pub(crate) fn density_unscaled_formula(&self, x: f64) -> Result<f64> {
        let pd = self.table.point_data(x.abs(), &self.spec)?;
        let mf = f64::from(self.params.m);
        let w = pd.ln_w_x.exp();
        let mut sum = 0.0;
        for j in 0..=self.params.n - 2 {
            let a_j = self.table.a_signed(j, x, &pd).to_real();
            let a_j1 = self.table.a_signed(j + 1, x, &pd).to_real();
            let denom = (mf * (LN_2_SQRT_2PI + log_factorial(u64::from(j)))).exp();
            sum += w * x.powi(j as i32) / denom * (x * a_j - a_j1);
        }
        Ok(sum)
    }
}

/// Convenience wrappers that build a throwaway evaluator; prefer
/// [`DensityEvaluator`] for grids.
pub fn density_unscaled(params: EnsembleParams, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    DensityEvaluator::new(params, spec)?.density_unscaled(x)
}

pub fn density_scaled(params: EnsembleParams, x: f64, spec: &QuadratureSpec) -> Result<f64> {
    DensityEvaluator::new(params, spec)?.density_scaled(x)
}

pub fn density_normalized(
    params: EnsembleParams,
    x: f64,
    spec: &QuadratureSpec,
    cache: &CoeffCache,
) -> Result<f64> {
    DensityEvaluator::new(params, spec)?.density_normalized(x, cache)
}
