//! Projection density estimation on [0,1], non-private and privatised.
//!
//! Works with an orthonormal system whose squared partial sums are uniformly
//! bounded: `||sum_{j<=d} phi_j^2||_inf <= d * phi0`. That constant controls
//! the sensitivity of the released statistic `g_d(x) = sum_j phi_j(x) phi_j(t)`
//! and hence the Laplace noise scale `2 phi0 d / alpha`.

use rand::Rng;

use crate::densities::TestDensity;
use crate::error::{Error, Result};
use crate::privacy::{perturb, ChannelSpec, PrivacyBudget, PrivateRelease};

/// Orthonormal systems in L2([0,1]).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// `phi_1 = 1`, `phi_{2k} = sqrt(2) cos(2 pi k x)`,
    /// `phi_{2k+1} = sqrt(2) sin(2 pi k x)`. Bounded, so `phi0 = 2` works
    /// for every dimension.
    Trigonometric,
    /// `phi_j = sqrt(bins) * 1_{[(j-1)/bins, j/bins)}` for j <= bins. The
    /// squared sum is identically `bins` wherever an active bin is hit, so
    /// the certified constant is per-dimension: `phi0(d) = bins / d`.
    Histogram { bins: usize },
}

impl Basis {
    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::PointOutsideUnitInterval(x));
        }
        debug_assert!(j >= 1);
        Ok(match self {
            Basis::Trigonometric => {
                if j == 1 {
                    1.0
                } else {
                    let k = (j / 2) as f64;
                    let arg = 2.0 * std::f64::consts::PI * k * x;
                    if j % 2 == 0 {
                        std::f64::consts::SQRT_2 * arg.cos()
                    } else {
                        std::f64::consts::SQRT_2 * arg.sin()
                    }
                }
            }
            Basis::Histogram { bins } => {
                let m = *bins;
                debug_assert!(j <= m);
                let lo = (j - 1) as f64 / m as f64;
                let hi = j as f64 / m as f64;
                // the last bin is closed on the right so x = 1 is covered
                let inside = if j == m { x >= lo && x <= hi } else { x >= lo && x < hi };
                if inside {
                    (m as f64).sqrt()
                } else {
                    0.0
                }
            }
        })
    }

    /// Constant with `||sum_{j<=d} phi_j^2||_inf <= d * phi0(d)`.
    pub fn phi0(&self, d: usize) -> f64 {
        match self {
            Basis::Trigonometric => 2.0,
            Basis::Histogram { bins } => *bins as f64 / d as f64,
        }
    }

    /// Largest usable dimension, if the system is finite.
    pub fn max_dim(&self) -> Option<usize> {
        match self {
            Basis::Trigonometric => None,
            Basis::Histogram { bins } => Some(*bins),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Basis::Trigonometric => "trigonometric".into(),
            Basis::Histogram { bins } => format!("histogram{bins}"),
        }
    }
}

/// Grid-certify the constant: returns `max_x sum_{j<=d} phi_j^2(x) / d`,
/// erroring if it exceeds `phi0(d)`.
pub fn verify_phi0(basis: &Basis, d: usize) -> Result<f64> {
    let grid = 10_000;
    let mut worst: f64 = 0.0;
    for i in 0..=grid {
        let x = i as f64 / grid as f64;
        let mut s = 0.0;
        for j in 1..=d {
            let v = basis.eval(j, x)?;
            s += v * v;
        }
        worst = worst.max(s / d as f64);
    }
    if worst > basis.phi0(d) * (1.0 + 1e-9) {
        return Err(Error::BasisCertification {
            d,
            observed: worst * d as f64,
            allowed: basis.phi0(d) * d as f64,
        });
    }
    Ok(worst)
}

/// `g_d(x) = sum_{j<=d} phi_j(x) phi_j(t)`
pub fn g_d_eval(basis: &Basis, d: usize, t: f64, x: f64) -> Result<f64> {
    let mut s = 0.0;
    for j in 1..=d {
        s += basis.eval(j, x)? * basis.eval(j, t)?;
    }
    Ok(s)
}

/// Per-release noise scale `2 phi0 d / alpha'`.
pub fn pde_noise_scale(basis: &Basis, d: usize, budget: &PrivacyBudget) -> f64 {
    2.0 * basis.phi0(d) * d as f64 / budget.per_release_alpha()
}

/// The Laplace channel releasing `g_d(X)` at the per-release budget.
pub fn pde_channel(basis: Basis, d: usize, t: f64, budget: &PrivacyBudget) -> ChannelSpec {
    ChannelSpec::laplace(
        move |x| g_d_eval(&basis, d, t, x).unwrap_or(0.0),
        2.0 * basis.phi0(d) * d as f64,
        budget.per_release_alpha(),
    )
}

/// One sanitized release `Z_{i,d}` for the datum `x_i`.
pub fn pde_release<R: Rng + ?Sized>(
    x_i: f64,
    basis: &Basis,
    d: usize,
    t: f64,
    budget: &PrivacyBudget,
    rng: &mut R,
) -> Result<PrivateRelease> {
    let g = g_d_eval(basis, d, t, x_i)?;
    perturb(g, &pde_channel(*basis, d, t, budget), budget, rng)
}

/// Non-private estimator in coefficient form
/// `sum_j a_j phi_j(t)` with `a_j = (1/n) sum_i phi_j(X_i)`.
///
/// Algebraically identical to the mean of `g_d(X_i)`; both are computed and
/// cross-checked in tests.
pub fn pde_nonprivate(xs: &[f64], basis: &Basis, d: usize, t: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let n = xs.len() as f64;
    let mut est = 0.0;
    for j in 1..=d {
        let a_j = xs.iter().try_fold(0.0, |acc, &x| basis.eval(j, x).map(|v| acc + v))? / n;
        est += a_j * basis.eval(j, t)?;
    }
    Ok(est)
}

/// Non-private estimator in kernel form: mean of `g_d(X_i)`.
pub fn pde_nonprivate_kernel_form(xs: &[f64], basis: &Basis, d: usize, t: f64) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    let s = xs.iter().try_fold(0.0, |acc, &x| g_d_eval(basis, d, t, x).map(|v| acc + v))?;
    Ok(s / xs.len() as f64)
}

/// Private estimator: mean of homogeneous releases.
pub fn pde_private(releases: &[PrivateRelease]) -> Result<f64> {
    crate::kde::mean_of_releases(releases)
}

/// Three-term MSE bound:
/// `|f_d(t) - f(t)|^2 + ||f||_inf phi0 d / n + 8 phi0^2 d^2 / (n alpha^2)`.
pub fn pde_risk_bound(
    f: &TestDensity,
    basis: &Basis,
    d: usize,
    t: f64,
    n: usize,
    budget: &PrivacyBudget,
) -> Result<f64> {
    let bias = f.projected_value(basis, d, t)? - f.eval(t);
    let alpha = budget.per_release_alpha();
    let nf = n as f64;
    let phi0 = basis.phi0(d);
    let df = d as f64;
    Ok(bias * bias
        + f.sup_norm * phi0 * df / nf
        + 8.0 * phi0 * phi0 * df * df / (nf * alpha * alpha))
}

/// Sampling-only bound for the non-private estimator.
pub fn pde_risk_bound_nonprivate(
    f: &TestDensity,
    basis: &Basis,
    d: usize,
    t: f64,
    n: usize,
) -> Result<f64> {
    let bias = f.projected_value(basis, d, t)? - f.eval(t);
    Ok(bias * bias + f.sup_norm * basis.phi0(d) * d as f64 / n as f64)
}

/// Rate-optimal private dimension
/// `round(min(n^{1/(2b+1)}, (alpha^2 n)^{1/(2b+2)}))`, at least 1.
pub fn pde_oracle_dimension(beta: f64, n: usize, alpha: f64) -> usize {
    let nf = n as f64;
    let d1 = nf.powf(1.0 / (2.0 * beta + 1.0));
    let d2 = (alpha * alpha * nf).powf(1.0 / (2.0 * beta + 2.0));
    (d1.min(d2).round() as usize).max(1)
}

/// Classical (non-private) rate-optimal dimension `round(n^{1/(2b+1)})`.
pub fn pde_classical_dimension(beta: f64, n: usize) -> usize {
    ((n as f64).powf(1.0 / (2.0 * beta + 1.0)).round() as usize).max(1)
}
