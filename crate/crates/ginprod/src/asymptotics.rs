//! Closed-form asymptotic laws: the √(2Nm/π) count estimate, the limiting
//! moments and density, the two-term saddle-point expansion of the
//! rescaled coefficients, and the tridiagonal Hessian facts behind it.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::moments::EnsembleParams;

const LN_4: f64 = 2.0 * std::f64::consts::LN_2;

/// Leading-order expected number of real eigenvalues: √(2Nm/π).
pub fn expected_count_asymptotic(params: EnsembleParams) -> f64 {
    (2.0 * params.n() as f64 * params.m() as f64 / std::f64::consts::PI).sqrt()
}

/// Leading-order moment of order `k`: √(2Nm/π)/(mk+1) for even `k`,
/// zero for odd `k`.
pub fn moment_asymptotic(params: EnsembleParams, k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    expected_count_asymptotic(params) / (params.m() as f64 * k as f64 + 1.0)
}

/// The limiting density of a uniformly chosen scaled real eigenvalue:
/// |x|^{1/m-1}/(2m) on [-1, 1], zero outside.
pub fn limit_density(m: u32, x: f64) -> Result<f64> {
    if m < 1 {
        return Err(Error::Domain("limit_density requires m >= 1".into()));
    }
    let ax = x.abs();
    if ax > 1.0 {
        return Ok(0.0);
    }
    let mf = f64::from(m);
    if ax == 0.0 {
        if m == 1 {
            return Ok(0.5);
        }
        return Err(Error::Domain(
            "limit_density diverges at x = 0 for m >= 2".into(),
        ));
    }
    Ok(ax.powf(1.0 / mf - 1.0) / (2.0 * mf))
}

/// CDF of [`limit_density`]: (1 + sgn(x)|x|^{1/m})/2 clamped to [0, 1].
pub fn limit_cdf(m: u32, x: f64) -> f64 {
    let mf = f64::from(m);
    if x <= -1.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        0.5 * (1.0 + x.signum() * x.abs().powf(1.0 / mf))
    }
}

/// Moments of the limiting density: 1/(mk+1) for even `k`, 0 for odd `k`.
pub fn limit_moment(m: u32, k: u32) -> f64 {
    if k % 2 == 1 {
        0.0
    } else {
        1.0 / (f64::from(m) * f64::from(k) + 1.0)
    }
}

/// Two-term expansion data for the rescaled coefficients
/// `I_{j+l1,j+l2}(m)`.
#[derive(Clone, Copy, Debug)]
pub struct SaddleExpansion {
    pub m: u32,
    pub l1: u32,
    pub l2: u32,
    /// Leading coefficient π^{m/2} 2^{-m/2-1} m^{-1/2}.
    pub a0: f64,
    /// Subleading coefficient π^{(m-1)/2} 2^{-m/2-1} (1/2 - l1 + l2) √m.
    pub a1: f64,
}

pub fn saddle_expansion(m: u32, l1: u32, l2: u32) -> SaddleExpansion {
    let mf = f64::from(m);
    let pi = std::f64::consts::PI;
    let common = 2f64.powf(-0.5 * mf - 1.0);
    SaddleExpansion {
        m,
        l1,
        l2,
        a0: pi.powf(0.5 * mf) * common / mf.sqrt(),
        a1: pi.powf(0.5 * (mf - 1.0))
            * common
            * (0.5 - f64::from(l1) + f64::from(l2))
            * mf.sqrt(),
    }
}

/// The bracket `a0 + a1 j^{-1/2}` of the two-term expansion. The huge
/// exponential prefactor is kept separate in [`coeff_i_prefactor_ln`].
pub fn coeff_i_asymptotic(m: u32, j: u32, l1: u32, l2: u32) -> f64 {
    let e = saddle_expansion(m, l1, l2);
    e.a0 + e.a1 / (j as f64).sqrt()
}

/// ln of the prefactor `j^{-m/2} 4^{-mj} 2^{-m(l1+l2-2)}`, which underflows
/// doubles once `mj` exceeds a few hundred.
pub fn coeff_i_prefactor_ln(m: u32, j: u32, l1: u32, l2: u32) -> f64 {
    let mf = f64::from(m);
    let jf = j as f64;
    -0.5 * mf * jf.ln() - mf * jf * LN_4
        - mf * (f64::from(l1) + f64::from(l2) - 2.0) * std::f64::consts::LN_2
}

/// Value of the exponent function at its maximizer: Φ(1,…,1) = -m log 4,
/// so e^{jΦ} supplies the 4^{-mj} in the prefactor.
pub fn phi_at_saddle(m: u32) -> f64 {
    -f64::from(m) * LN_4
}

/// The exponent function Φ of the m-fold integral, for cross-checking
/// [`phi_at_saddle`] and the saddle location.
pub fn phi(x: &[f64]) -> f64 {
    let m = x.len();
    assert!(m >= 1);
    let mut v = 2.0 * x[0].ln() - 2.0 * (1.0 + x[0]).ln() - x[m - 1].ln();
    for l in 0..m - 1 {
        v -= 2.0 * (1.0 + x[l] / x[l + 1]).ln();
    }
    v
}

/// The m×m Hessian of Φ at the saddle (1,…,1): tridiagonal with diagonal
/// -1 except for the final entry -1/2, off-diagonals 1/2. Negative
/// definite, so the saddle is the unique maximum.
pub fn hessian(m: u32) -> DMatrix<f64> {
    let n = m as usize;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            if i == n - 1 { -0.5 } else { -1.0 }
        } else if i.abs_diff(j) == 1 {
            0.5
        } else {
            0.0
        }
    })
}

/// The unmodified tridiagonal of the same family (diagonal -1 throughout,
/// off-diagonals 1/2). This is the matrix whose determinant and inverse
/// have the closed forms below; it drives the Gaussian reduction of the
/// saddle-point integral, where it appears as the top-left block of
/// [`hessian`] one size up.
pub fn hessian_tridiagonal(m: u32) -> DMatrix<f64> {
    let n = m as usize;
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            -1.0
        } else if i.abs_diff(j) == 1 {
            0.5
        } else {
            0.0
        }
    })
}

/// det(-T_m) for the unmodified tridiagonal, by the three-term minor
/// recurrence. All quantities are dyadic rationals, so doubles carry the
/// recurrence exactly; the result equals (m+1)/2^m.
pub fn hessian_det(m: u32) -> f64 {
    // Minors of -T: diag 1, off-diagonals -1/2.
    let mut dm2 = 1.0; // D_0
    let mut dm1 = 1.0; // D_1
    if m == 0 {
        return 1.0;
    }
    for _ in 2..=m {
        let d = dm1 - 0.25 * dm2;
        dm2 = dm1;
        dm1 = d;
    }
    dm1
}

/// Closed-form inverse entry of the unmodified tridiagonal:
/// (T_m^{-1})_{i,j} = 2i(j-m-1)/(m+1) for 1 <= i <= j <= m.
pub fn hessian_inverse_entry(m: u32, i: u32, j: u32) -> Result<f64> {
    if !(1 <= i && i <= j && j <= m) {
        return Err(Error::Domain(format!(
            "inverse entry indices must satisfy 1 <= i <= j <= m (got i={i}, j={j}, m={m})"
        )));
    }
    let mf = f64::from(m);
    Ok(2.0 * f64::from(i) * (f64::from(j) - mf - 1.0) / (mf + 1.0))
}
