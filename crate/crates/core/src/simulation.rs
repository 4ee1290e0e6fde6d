//! Monte Carlo risk estimation, convergence-rate fitting, and empirical
//! audits of the concentration inequalities (Bernstein, Laplace tail,
//! Petrov) plus the two-point KL bound used in the lower-bound argument.
//!
//! All randomness flows from a base seed through `exec::stream_seed`, so a
//! report is byte-identical across reruns and across the parallel and
//! sequential builds.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::adaptive::{
    adaptive_kde, adaptive_pde, oracle_rhs_kde, oracle_rhs_pde, GlConstants, SelectorTrace,
    TuningCollection, DEFAULT_ORACLE_C,
};
use crate::densities::{total_variation, TestDensity};
use crate::error::{Error, Result};
use crate::exec::{map_reps, stream_seed};
use crate::kde::{
    kde_classical_bandwidth, kde_nonprivate, kde_oracle_bandwidth, kde_private, kde_release,
    kde_risk_bound, kde_risk_bound_nonprivate, Kernel, KdeConfig,
};
use crate::pde::{
    pde_classical_dimension, pde_nonprivate, pde_oracle_dimension, pde_private, pde_release,
    pde_risk_bound, pde_risk_bound_nonprivate, Basis,
};
use crate::privacy::{laplace_sample, PrivacyBudget};

// ---------------------------------------------------------------------------
// Experiment grid
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub enum EstimatorKind {
    Kde { kernel: Kernel, private: bool },
    Pde { basis: Basis, private: bool },
}

impl EstimatorKind {
    pub fn is_private(&self) -> bool {
        match self {
            EstimatorKind::Kde { private, .. } | EstimatorKind::Pde { private, .. } => *private,
        }
    }

    pub fn label(&self) -> String {
        match self {
            EstimatorKind::Kde { kernel, private } => {
                format!("kde:{}:{}", kernel.name(), if *private { "private" } else { "clean" })
            }
            EstimatorKind::Pde { basis, private } => {
                format!("pde:{}:{}", basis.name(), if *private { "private" } else { "clean" })
            }
        }
    }
}

#[derive(Debug, Clone)]
pub enum TuningSpec {
    /// One grid cell per value (bandwidth for KDE, dimension for PDE).
    Fixed(Vec<f64>),
    /// Rate-optimal value per (n, alpha), for declared smoothness beta.
    Oracle { beta: f64 },
    /// Goldenshluger-Lepski selection over a collection (`None` = the
    /// default family).
    Adaptive { values: Option<Vec<f64>> },
}

#[derive(Debug, Clone)]
pub struct ExperimentGrid {
    pub density: TestDensity,
    pub density_name: String,
    pub estimator: EstimatorKind,
    pub t: f64,
    pub ns: Vec<usize>,
    pub alphas: Vec<f64>,
    pub tuning: TuningSpec,
    pub replications: usize,
    pub base_seed: u64,
    pub constants: GlConstants,
}

impl ExperimentGrid {
    fn validate(&self) -> Result<()> {
        if self.replications < 2 {
            return Err(Error::Config("need at least 2 replications".into()));
        }
        if self.ns.is_empty() || self.ns.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("n values must be nonempty, strictly increasing".into()));
        }
        if self.alphas.is_empty() {
            return Err(Error::Config("need at least one alpha".into()));
        }
        if self.estimator.is_private() {
            for &a in &self.alphas {
                if !(a > 0.0 && a < 1.0) {
                    return Err(Error::InvalidAlpha(a));
                }
            }
        }
        if let TuningSpec::Adaptive { .. } = self.tuning {
            if !self.estimator.is_private() {
                return Err(Error::Config(
                    "adaptive selection is defined for the private estimators".into(),
                ));
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CellReport {
    pub density: String,
    pub estimator: String,
    pub n: usize,
    pub alpha: f64,
    pub tuning: String,
    pub mse: f64,
    pub se: f64,
    pub bound: f64,
    pub bias2: f64,
    pub var: f64,
}

#[derive(Debug, Clone)]
pub struct RateFit {
    pub series: String,
    pub slope: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub theory_slope: Option<f64>,
}

#[derive(Debug)]
pub struct RiskReport {
    pub cells: Vec<CellReport>,
    pub rates: Vec<RateFit>,
    /// First-replication selector trace per adaptive cell, keyed by the
    /// cell's (n, alpha) label.
    pub traces: Vec<(String, SelectorTrace)>,
}

// ---------------------------------------------------------------------------
// Monte Carlo risk
// ---------------------------------------------------------------------------

enum CellTuning {
    Value(f64),
    Adaptive(TuningCollection),
}

fn resolve_cells(grid: &ExperimentGrid, n: usize, alpha: f64) -> Result<Vec<(String, CellTuning)>> {
    let is_kde = matches!(grid.estimator, EstimatorKind::Kde { .. });
    let private = grid.estimator.is_private();
    match &grid.tuning {
        TuningSpec::Fixed(vals) => vals
            .iter()
            .map(|&v| {
                let label =
                    if is_kde { format!("h={v}") } else { format!("d={}", v as usize) };
                Ok((label, CellTuning::Value(v)))
            })
            .collect(),
        TuningSpec::Oracle { beta } => {
            let v = match (is_kde, private) {
                (true, true) => kde_oracle_bandwidth(*beta, n, alpha),
                (true, false) => kde_classical_bandwidth(*beta, n),
                (false, true) => pde_oracle_dimension(*beta, n, alpha) as f64,
                (false, false) => pde_classical_dimension(*beta, n) as f64,
            };
            let label = if is_kde { format!("h={v}") } else { format!("d={}", v as usize) };
            Ok(vec![(label, CellTuning::Value(v))])
        }
        TuningSpec::Adaptive { values } => {
            let coll = match (is_kde, values) {
                (true, Some(vs)) => TuningCollection::bandwidths(vs, n)?,
                (true, None) => TuningCollection::default_bandwidths(n)?,
                (false, Some(vs)) => {
                    let ds: Vec<usize> = vs.iter().map(|&v| v as usize).collect();
                    TuningCollection::dimensions(&ds, n)?
                }
                (false, None) => TuningCollection::default_dimensions(n)?,
            };
            Ok(vec![("adaptive".into(), CellTuning::Adaptive(coll))])
        }
    }
}

fn replicate(
    grid: &ExperimentGrid,
    n: usize,
    alpha: f64,
    tuning: &CellTuning,
    seed: u64,
    keep_trace: bool,
) -> Result<(f64, Option<SelectorTrace>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = grid.density.sample_with(n, &mut rng)?;
    match (&grid.estimator, tuning) {
        (EstimatorKind::Kde { kernel, private }, CellTuning::Value(h)) => {
            let budget = if *private {
                PrivacyBudget::single(alpha)?
            } else {
                // placeholder; the clean path never draws noise
                PrivacyBudget::single(0.5)?
            };
            let cfg = KdeConfig::new(grid.t, *h, *kernel, budget)?;
            let est = if *private {
                let rel: Vec<_> = xs
                    .iter()
                    .map(|&x| kde_release(x, &cfg, &mut rng))
                    .collect::<Result<_>>()?;
                kde_private(&rel)?
            } else {
                kde_nonprivate(&xs, &cfg)?
            };
            Ok((est, None))
        }
        (EstimatorKind::Pde { basis, private }, CellTuning::Value(dv)) => {
            let d = *dv as usize;
            let est = if *private {
                let budget = PrivacyBudget::single(alpha)?;
                let rel: Vec<_> = xs
                    .iter()
                    .map(|&x| pde_release(x, basis, d, grid.t, &budget, &mut rng))
                    .collect::<Result<_>>()?;
                pde_private(&rel)?
            } else {
                pde_nonprivate(&xs, basis, d, grid.t)?
            };
            Ok((est, None))
        }
        (EstimatorKind::Kde { kernel, .. }, CellTuning::Adaptive(coll)) => {
            let trace =
                adaptive_kde(&xs, coll, grid.t, *kernel, alpha, &grid.constants, &mut rng)?;
            let est = trace.chosen_estimate();
            Ok((est, keep_trace.then_some(trace)))
        }
        (EstimatorKind::Pde { basis, .. }, CellTuning::Adaptive(coll)) => {
            let trace = adaptive_pde(&xs, coll, grid.t, basis, alpha, &grid.constants, &mut rng)?;
            let est = trace.chosen_estimate();
            Ok((est, keep_trace.then_some(trace)))
        }
    }
}

fn cell_bound(
    grid: &ExperimentGrid,
    n: usize,
    alpha: f64,
    tuning: &CellTuning,
) -> Result<f64> {
    match (&grid.estimator, tuning) {
        (EstimatorKind::Kde { kernel, private }, CellTuning::Value(h)) => {
            if *private {
                let cfg = KdeConfig::new(grid.t, *h, *kernel, PrivacyBudget::single(alpha)?)?;
                kde_risk_bound(&grid.density, &cfg, n)
            } else {
                kde_risk_bound_nonprivate(&grid.density, *kernel, *h, grid.t, n)
            }
        }
        (EstimatorKind::Pde { basis, private }, CellTuning::Value(dv)) => {
            let d = *dv as usize;
            if *private {
                pde_risk_bound(&grid.density, basis, d, grid.t, n, &PrivacyBudget::single(alpha)?)
            } else {
                pde_risk_bound_nonprivate(&grid.density, basis, d, grid.t, n)
            }
        }
        (EstimatorKind::Kde { kernel, .. }, CellTuning::Adaptive(coll)) => oracle_rhs_kde(
            &grid.density,
            coll,
            grid.t,
            *kernel,
            n,
            alpha,
            &grid.constants,
            DEFAULT_ORACLE_C,
        ),
        (EstimatorKind::Pde { basis, .. }, CellTuning::Adaptive(coll)) => oracle_rhs_pde(
            &grid.density,
            coll,
            grid.t,
            basis,
            n,
            alpha,
            &grid.constants,
            DEFAULT_ORACLE_C,
        ),
    }
}

/// Run the full grid. Deterministic given `grid.base_seed`.
pub fn mc_risk(grid: &ExperimentGrid) -> Result<RiskReport> {
    grid.validate()?;
    let truth = grid.density.eval(grid.t);
    let mut cells = Vec::new();
    let mut traces = Vec::new();
    let mut cell_idx: u64 = 0;

    for &alpha in &grid.alphas {
        for &n in &grid.ns {
            for (tuning_label, tuning) in resolve_cells(grid, n, alpha)? {
                let keep_trace = matches!(tuning, CellTuning::Adaptive(_));
                let cell = cell_idx;
                cell_idx += 1;
                let results: Vec<Result<(f64, Option<SelectorTrace>)>> =
                    map_reps(grid.replications, |r| {
                        let seed = stream_seed(grid.base_seed, cell, r as u64);
                        replicate(grid, n, alpha, &tuning, seed, keep_trace && r == 0)
                    });
                let mut trace0 = None;
                let mut errs = Vec::with_capacity(grid.replications);
                for res in results {
                    let (est, tr) = res?;
                    if let Some(tr) = tr {
                        trace0 = Some(tr);
                    }
                    errs.push(est - truth);
                }
                let rf = grid.replications as f64;
                let mean_err = errs.iter().sum::<f64>() / rf;
                let sq: Vec<f64> = errs.iter().map(|e| e * e).collect();
                let mse = sq.iter().sum::<f64>() / rf;
                let var_sq = sq.iter().map(|s| (s - mse) * (s - mse)).sum::<f64>() / (rf - 1.0);
                let se = (var_sq / rf).sqrt();
                let bias2 = mean_err * mean_err;
                let var = mse - bias2;
                let bound = cell_bound(grid, n, alpha, &tuning)?;
                if let Some(tr) = trace0 {
                    traces.push((format!("n={n},alpha={alpha}"), tr));
                }
                cells.push(CellReport {
                    density: grid.density_name.clone(),
                    estimator: grid.estimator.label(),
                    n,
                    alpha,
                    tuning: tuning_label,
                    mse,
                    se,
                    bound,
                    bias2,
                    var,
                });
            }
        }
    }

    // one rate series per alpha, when there are enough n points and a single
    // tuning cell per (n, alpha)
    let mut rates = Vec::new();
    if grid.ns.len() >= 4 && cells.len() == grid.alphas.len() * grid.ns.len() {
        let theory = match (&grid.tuning, &grid.estimator) {
            (TuningSpec::Oracle { beta }, est) => Some(if est.is_private() {
                -2.0 * beta / (2.0 * beta + 2.0)
            } else {
                -2.0 * beta / (2.0 * beta + 1.0)
            }),
            _ => None,
        };
        for (ai, &alpha) in grid.alphas.iter().enumerate() {
            let mses: Vec<f64> = (0..grid.ns.len())
                .map(|ni| cells[ai * grid.ns.len() + ni].mse)
                .collect();
            let fit = fit_rate(&grid.ns, &mses)?;
            rates.push(RateFit {
                series: format!("{}:alpha={alpha}", grid.estimator.label()),
                slope: fit.0,
                ci_lo: fit.1,
                ci_hi: fit.2,
                theory_slope: theory,
            });
        }
    }

    Ok(RiskReport { cells, rates, traces })
}

/// OLS slope of `log mse` against `log n` with a naive 95% CI.
pub fn fit_rate(ns: &[usize], mses: &[f64]) -> Result<(f64, f64, f64)> {
    if ns.len() < 4 || ns.len() != mses.len() || mses.iter().any(|&m| !(m > 0.0)) {
        return Err(Error::RateFitInput);
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = mses.iter().map(|&m| m.ln()).collect();
    let k = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / k;
    let ybar = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - xbar) * (y - ybar)).sum();
    let slope = sxy / sxx;
    let intercept = ybar - slope * xbar;
    let ssr: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let se = (ssr / (k - 2.0) / sxx).sqrt();
    Ok((slope, slope - 1.96 * se, slope + 1.96 * se))
}

/// Risk CSV: `density,estimator,n,alpha,tuning,mse,se,bound,bias2,var`.
pub fn write_risk_csv<W: Write>(cells: &[CellReport], w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(
        ["density", "estimator", "n", "alpha", "tuning", "mse", "se", "bound", "bias2", "var"],
    )?;
    for c in cells {
        out.write_record(&[
            c.density.clone(),
            c.estimator.clone(),
            format!("{}", c.n),
            format!("{}", c.alpha),
            c.tuning.clone(),
            format!("{}", c.mse),
            format!("{}", c.se),
            format!("{}", c.bound),
            format!("{}", c.bias2),
            format!("{}", c.var),
        ])?;
    }
    out.flush()
}

/// Rate CSV: `series,slope,ci_lo,ci_hi,theory_slope`.
pub fn write_rate_csv<W: Write>(rates: &[RateFit], w: W) -> std::io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["series", "slope", "ci_lo", "ci_hi", "theory_slope"])?;
    for r in rates {
        out.write_record(&[
            r.series.clone(),
            format!("{}", r.slope),
            format!("{}", r.ci_lo),
            format!("{}", r.ci_hi),
            r.theory_slope.map(|s| format!("{s}")).unwrap_or_default(),
        ])?;
    }
    out.flush()
}

// ---------------------------------------------------------------------------
// Concentration audits
// ---------------------------------------------------------------------------

/// Centered summand distributions for the tail audits.
#[derive(Debug, Clone, Copy)]
pub enum AuditDist {
    /// Uniform on [-1, 1]: bound b = 1, variance 1/3.
    UniformSym,
    /// +-1 with probability 1/2 each: b = 1, variance 1.
    Rademacher,
    /// Point mass at 0.
    Degenerate,
    /// Laplace(0, b); unbounded, for the Laplace-specific tail bound.
    Laplace { b: f64 },
}

impl AuditDist {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            AuditDist::UniformSym => rng.gen::<f64>() * 2.0 - 1.0,
            AuditDist::Rademacher => {
                if rng.gen::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
            AuditDist::Degenerate => 0.0,
            AuditDist::Laplace { b } => laplace_sample(*b, rng),
        }
    }

    /// (bound b, variance v^2) for the Bernstein audit.
    pub fn bernstein_params(&self) -> Option<(f64, f64)> {
        match self {
            AuditDist::UniformSym => Some((1.0, 1.0 / 3.0)),
            AuditDist::Rademacher => Some((1.0, 1.0)),
            AuditDist::Degenerate => Some((1.0, 1e-300)),
            AuditDist::Laplace { .. } => None,
        }
    }

    /// Analytic `E|U|^m` for even m.
    pub fn abs_moment(&self, m: u32) -> f64 {
        match self {
            AuditDist::UniformSym => 1.0 / (m as f64 + 1.0),
            AuditDist::Rademacher => 1.0,
            AuditDist::Degenerate => 0.0,
            AuditDist::Laplace { b } => {
                // E|xi|^m = m! b^m
                (1..=m as u64).product::<u64>() as f64 * b.powi(m as i32)
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct TailAuditRow {
    pub eps: f64,
    pub empirical: f64,
    pub bound: f64,
    pub se: f64,
    pub ok: bool,
}

fn tail_audit<S, B>(
    n: usize,
    eps_grid: &[f64],
    reps: usize,
    seed: u64,
    sampler: S,
    bound: B,
) -> Vec<TailAuditRow>
where
    S: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
    B: Fn(f64) -> f64,
{
    let means: Vec<f64> = map_reps(reps, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, 0, r as u64));
        (0..n).map(|_| sampler(&mut rng)).sum::<f64>() / n as f64
    });
    eps_grid
        .iter()
        .map(|&eps| {
            let hits = means.iter().filter(|&&m| m.abs() >= eps).count();
            let p = hits as f64 / reps as f64;
            let b = bound(eps);
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            TailAuditRow { eps, empirical: p, bound: b, se, ok: p <= b + 3.0 * se }
        })
        .collect()
}

/// Bernstein: `P(|mean| >= eps) <= 2 max{exp(-n eps^2/(4 v^2)), exp(-n eps/(4b))}`.
pub fn audit_bernstein(
    dist: AuditDist,
    n: usize,
    eps_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Result<Vec<TailAuditRow>> {
    let (b, v2) = dist
        .bernstein_params()
        .ok_or_else(|| Error::Config("Bernstein audit needs a bounded distribution".into()))?;
    let nf = n as f64;
    Ok(tail_audit(
        n,
        eps_grid,
        reps,
        seed,
        move |rng| dist.sample(rng),
        move |eps| 2.0 * (-nf * eps * eps / (4.0 * v2)).exp().max((-nf * eps / (4.0 * b)).exp()),
    ))
}

/// Laplace mean tail:
/// `P(|mean| >= eps) <= 2 max{exp(-n eps^2/(16 b^2)), exp(-n eps/(2b))}`.
pub fn audit_laplace_tail(
    b: f64,
    n: usize,
    eps_grid: &[f64],
    reps: usize,
    seed: u64,
) -> Vec<TailAuditRow> {
    let nf = n as f64;
    tail_audit(
        n,
        eps_grid,
        reps,
        seed,
        move |rng| laplace_sample(b, rng),
        move |eps| {
            2.0 * (-nf * eps * eps / (16.0 * b * b))
                .exp()
                .max((-nf * eps / (2.0 * b)).exp())
        },
    )
}

/// The two branch exponents of the Laplace tail bound, for branch-point
/// diagnostics.
pub fn laplace_tail_branches(b: f64, n: usize, eps: f64) -> (f64, f64) {
    let nf = n as f64;
    ((-nf * eps * eps / (16.0 * b * b)).exp(), (-nf * eps / (2.0 * b)).exp())
}

#[derive(Debug, Clone)]
pub struct PetrovRow {
    pub n: usize,
    /// MC estimate of `E|sum U|^m / (n^{m/2-1} sum E|U|^m)`.
    pub ratio: f64,
    pub se: f64,
}

/// Petrov moment-ratio audit with an analytic denominator.
pub fn audit_petrov(
    dist: AuditDist,
    ns: &[usize],
    m: u32,
    reps: usize,
    seed: u64,
) -> Result<Vec<PetrovRow>> {
    if m < 2 || m % 2 != 0 {
        return Err(Error::Config("Petrov audit needs even m >= 2".into()));
    }
    let mu_m = dist.abs_moment(m);
    if !(mu_m > 0.0) {
        return Err(Error::Config("Petrov ratio undefined for a point mass".into()));
    }
    let mut rows = Vec::with_capacity(ns.len());
    for (ci, &n) in ns.iter().enumerate() {
        let denom = (n as f64).powf(m as f64 / 2.0 - 1.0) * n as f64 * mu_m;
        let vals: Vec<f64> = map_reps(reps, |r| {
            let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, ci as u64, r as u64));
            let s: f64 = (0..n).map(|_| dist.sample(&mut rng)).sum();
            s.abs().powi(m as i32)
        });
        let mean = vals.iter().sum::<f64>() / reps as f64;
        let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (reps as f64 - 1.0);
        rows.push(PetrovRow {
            n,
            ratio: mean / denom,
            se: (var / reps as f64).sqrt() / denom,
        });
    }
    Ok(rows)
}

/// Two-point KL bound `4 n (e^alpha - 1)^2 TV^2` from a precomputed TV.
pub fn kl_upper_bound_from_tv(tv: f64, n: usize, alpha: f64) -> f64 {
    let c = (alpha.exp() - 1.0).powi(2);
    4.0 * n as f64 * c * tv * tv
}

/// Two-point KL bound with TV computed by quadrature.
pub fn kl_upper_bound(f0: &TestDensity, f1: &TestDensity, n: usize, alpha: f64) -> Result<f64> {
    Ok(kl_upper_bound_from_tv(total_variation(f0, f1)?, n, alpha))
}
