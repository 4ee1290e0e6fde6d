//! Kernel density estimation at a point, non-private and privatised.
//!
//! The non-private estimator is the mean of `K_h(X_i - t)`; the privatised
//! variant averages Laplace-perturbed releases `Z_{i,h} = g_h(X_i) + b xi`
//! with `b = 2||K||_inf / (alpha h)` per release.

use rand::Rng;

use crate::densities::TestDensity;
use crate::error::{Error, Result};
use crate::privacy::{perturb, ChannelSpec, PrivacyBudget, PrivateRelease};

/// Bounded, square-integrable kernels that integrate to 1, with closed-form
/// norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kernel {
    /// `1` on [-1/2, 1/2].
    Rectangular,
    /// `1 - |u|` on [-1, 1].
    Triangular,
    /// `3/4 (1 - u^2)` on [-1, 1].
    Epanechnikov,
}

impl Kernel {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            Kernel::Rectangular => {
                if (-0.5..0.5).contains(&u) {
                    1.0
                } else {
                    0.0
                }
            }
            Kernel::Triangular => {
                let a = u.abs();
                if a < 1.0 {
                    1.0 - a
                } else {
                    0.0
                }
            }
            Kernel::Epanechnikov => {
                if u.abs() < 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// `||K||_inf`
    pub fn sup_norm(&self) -> f64 {
        match self {
            Kernel::Rectangular => 1.0,
            Kernel::Triangular => 1.0,
            Kernel::Epanechnikov => 0.75,
        }
    }

    /// `||K||_2^2`
    pub fn l2_norm_sq(&self) -> f64 {
        match self {
            Kernel::Rectangular => 1.0,
            Kernel::Triangular => 2.0 / 3.0,
            Kernel::Epanechnikov => 0.6,
        }
    }

    /// Half-width of the kernel support.
    pub fn support_radius(&self) -> f64 {
        match self {
            Kernel::Rectangular => 0.5,
            Kernel::Triangular => 1.0,
            Kernel::Epanechnikov => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Kernel::Rectangular => "rectangular",
            Kernel::Triangular => "triangular",
            Kernel::Epanechnikov => "epanechnikov",
        }
    }
}

/// `K_h(u) = K(u/h) / h`
pub fn kernel_scaled(kernel: Kernel, h: f64, u: f64) -> f64 {
    debug_assert!(h > 0.0);
    kernel.eval(u / h) / h
}

/// Evaluation point, bandwidth, kernel and budget for one KDE mechanism.
#[derive(Debug, Clone, Copy)]
pub struct KdeConfig {
    pub t: f64,
    pub h: f64,
    pub kernel: Kernel,
    pub budget: PrivacyBudget,
}

impl KdeConfig {
    pub fn new(t: f64, h: f64, kernel: Kernel, budget: PrivacyBudget) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::InvalidBandwidth(h));
        }
        Ok(Self { t, h, kernel, budget })
    }

    /// `g_h(x) = K_h(x - t)`
    pub fn g(&self, x: f64) -> f64 {
        kernel_scaled(self.kernel, self.h, x - self.t)
    }

    /// Per-release noise scale `2||K||_inf / (alpha' h)`.
    pub fn noise_scale(&self) -> f64 {
        2.0 * self.kernel.sup_norm() / (self.budget.per_release_alpha() * self.h)
    }

    /// The Laplace channel releasing `g_h(X)` at the per-release budget.
    pub fn channel(&self) -> ChannelSpec {
        let (t, h, kernel) = (self.t, self.h, self.kernel);
        ChannelSpec::laplace(
            move |x| kernel_scaled(kernel, h, x - t),
            2.0 * kernel.sup_norm() / h,
            self.budget.per_release_alpha(),
        )
    }
}

/// Non-private estimator `(1/n) sum K_h(X_i - t)`.
pub fn kde_nonprivate(xs: &[f64], cfg: &KdeConfig) -> Result<f64> {
    if xs.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(xs.iter().map(|&x| cfg.g(x)).sum::<f64>() / xs.len() as f64)
}

/// One sanitized release `Z_{i,h}` for the datum `x_i`.
pub fn kde_release<R: Rng + ?Sized>(
    x_i: f64,
    cfg: &KdeConfig,
    rng: &mut R,
) -> Result<PrivateRelease> {
    perturb(cfg.g(x_i), &cfg.channel(), &cfg.budget, rng)
}

/// Private estimator: mean of homogeneous releases.
pub fn kde_private(releases: &[PrivateRelease]) -> Result<f64> {
    mean_of_releases(releases)
}

pub(crate) fn mean_of_releases(releases: &[PrivateRelease]) -> Result<f64> {
    let first = releases.first().ok_or(Error::EmptySample)?;
    for r in releases {
        if r.noise_scale_b != first.noise_scale_b {
            return Err(Error::HeterogeneousReleases(first.noise_scale_b, r.noise_scale_b));
        }
    }
    Ok(releases.iter().map(|r| r.value).sum::<f64>() / releases.len() as f64)
}

/// Three-term MSE bound:
/// `|f_h(t) - f(t)|^2 + ||f||_inf ||K||_2^2 / (nh) + 8 ||K||_inf^2 / (n alpha^2 h^2)`
/// where alpha is the per-release budget.
pub fn kde_risk_bound(f: &TestDensity, cfg: &KdeConfig, n: usize) -> Result<f64> {
    let bias = f.smoothed_value(cfg.kernel, cfg.h, cfg.t)? - f.eval(cfg.t);
    let alpha = cfg.budget.per_release_alpha();
    let nf = n as f64;
    let sup_k = cfg.kernel.sup_norm();
    Ok(bias * bias
        + f.sup_norm * cfg.kernel.l2_norm_sq() / (nf * cfg.h)
        + 8.0 * sup_k * sup_k / (nf * alpha * alpha * cfg.h * cfg.h))
}

/// Sampling-only bound for the non-private estimator (no noise term).
pub fn kde_risk_bound_nonprivate(
    f: &TestDensity,
    kernel: Kernel,
    h: f64,
    t: f64,
    n: usize,
) -> Result<f64> {
    let bias = f.smoothed_value(kernel, h, t)? - f.eval(t);
    Ok(bias * bias + f.sup_norm * kernel.l2_norm_sq() / (n as f64 * h))
}

/// Rate-optimal private bandwidth `max(n^{-1/(2b+1)}, (alpha^2 n)^{-1/(2b+2)})`,
/// clipped to (0,1).
pub fn kde_oracle_bandwidth(beta: f64, n: usize, alpha: f64) -> f64 {
    let nf = n as f64;
    let h1 = nf.powf(-1.0 / (2.0 * beta + 1.0));
    let h2 = (alpha * alpha * nf).powf(-1.0 / (2.0 * beta + 2.0));
    h1.max(h2).min(1.0 - 1e-12).max(f64::MIN_POSITIVE)
}

/// Classical (non-private) rate-optimal bandwidth `n^{-1/(2b+1)}`.
pub fn kde_classical_bandwidth(beta: f64, n: usize) -> f64 {
    (n as f64).powf(-1.0 / (2.0 * beta + 1.0)).min(1.0 - 1e-12)
}
