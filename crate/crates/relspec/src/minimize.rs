//! Sphere-projected multi-start gradient descent for quotient infima.
//!
//! All catalog quotients are 0-homogeneous, so the infimum over the unit L²
//! sphere equals the infimum over all nonzero fields; the sphere merely pins
//! the scale. Each start runs an Armijo-backtracked descent in the L²(h)
//! geometry: project the gradient onto the tangent space, step, renormalize.
//! The accepted step carries over between iterations (grown by 4, shrunk by
//! the backtracking factor) so the search adapts to the local stiffness
//! instead of re-walking from `step_init` every iteration.
//!
//! Starts are independent; with the `parallel` feature they run on the rayon
//! pool. The reduction picks the smallest quotient value with ties broken by
//! start index, so the result is bit-identical however the starts are
//! scheduled. [`minimize_seq`] is the always-sequential reference path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::grid::pairing;
use crate::quotient::QuotientSpec;
use crate::rng::SplitMix64;
use crate::{Error, Field, Grid1D, Result};

/// Knobs for the multi-start descent.
#[derive(Debug, Clone)]
pub struct MinimizeOptions {
    /// Iteration cap per start.
    pub max_iter: usize,
    /// Relative quotient decrease over a 5-iteration window below which the
    /// value is considered settled.
    pub tol_rel: f64,
    /// Tangential gradient norm below which the iterate is stationary.
    pub tol_grad: f64,
    /// Number of independent starts.
    pub starts: usize,
    /// Seed for the start perturbations.
    pub seed: u64,
    /// Initial line-search step.
    pub step_init: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo_c: f64,
    /// Backtracking shrink factor in (0, 1).
    pub backtrack: f64,
    /// ε floor for singular derivative kernels.
    pub eps_reg: f64,
}

impl Default for MinimizeOptions {
    fn default() -> Self {
        Self {
            max_iter: 5000,
            tol_rel: 1e-10,
            tol_grad: 1e-8,
            starts: 8,
            seed: 0,
            step_init: 1.0,
            armijo_c: 1e-4,
            backtrack: 0.5,
            eps_reg: 1e-12,
        }
    }
}

impl MinimizeOptions {
    fn validate(&self) -> Result<()> {
        if !(self.tol_rel > 0.0) || !(self.tol_grad > 0.0) || !(self.eps_reg > 0.0) {
            return Err(Error::InvalidSpec("tolerances must be positive".into()));
        }
        if self.starts < 1 {
            return Err(Error::InvalidSpec("need at least one start".into()));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "backtrack factor must lie in (0, 1), got {}",
                self.backtrack
            )));
        }
        if !(self.step_init > 0.0) || !(self.armijo_c > 0.0) {
            return Err(Error::InvalidSpec(
                "step_init and armijo_c must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Outcome of a multi-start minimization.
#[derive(Debug, Clone)]
pub struct MinimizationResult {
    /// Best quotient value found, the eigenvalue estimate.
    pub lambda_est: f64,
    /// Minimizer on the unit L² sphere with nonnegative mean.
    pub minimizer: Field,
    /// Iterations used by the winning start.
    pub iterations: usize,
    /// Whether the winning start met both convergence tests.
    pub converged: bool,
    /// Final quotient value of every start (∞ for aborted starts).
    pub per_start_lambdas: Vec<f64>,
    /// Tangential gradient norm at the winning iterate.
    pub grad_norm_final: f64,
}

struct StartOutcome {
    lambda: f64,
    minimizer: Option<Field>,
    iterations: usize,
    converged: bool,
    grad_norm: f64,
    error: Option<Error>,
}

/// Minimize a quotient over the unit sphere; parallel starts when the
/// `parallel` feature is enabled.
pub fn minimize(
    q: &QuotientSpec,
    grid: Grid1D,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult> {
    minimize_impl(q, grid, opts, cfg!(feature = "parallel"))
}

/// Sequential reference path; bit-identical to [`minimize`] by construction.
pub fn minimize_seq(
    q: &QuotientSpec,
    grid: Grid1D,
    opts: &MinimizeOptions,
) -> Result<MinimizationResult> {
    minimize_impl(q, grid, opts, false)
}

fn minimize_impl(
    q: &QuotientSpec,
    grid: Grid1D,
    opts: &MinimizeOptions,
    parallel: bool,
) -> Result<MinimizationResult> {
    opts.validate()?;
    let outcomes: Vec<StartOutcome> = if parallel {
        run_starts_parallel(q, grid, opts)
    } else {
        (0..opts.starts)
            .map(|k| run_start(q, grid, opts, k))
            .collect()
    };

    let per_start_lambdas: Vec<f64> = outcomes.iter().map(|o| o.lambda).collect();
    let best = outcomes
        .iter()
        .enumerate()
        .min_by(|(ia, a), (ib, b)| a.lambda.total_cmp(&b.lambda).then(ia.cmp(ib)))
        .expect("at least one start");
    let (_, winner) = best;
    let Some(minimizer) = winner.minimizer.clone() else {
        // every start aborted; surface the first recorded error
        let err = outcomes
            .into_iter()
            .find_map(|o| o.error)
            .unwrap_or(Error::NonFinite("minimization"));
        return Err(err);
    };

    // Sign convention: quotients are even, so flip for a nonnegative mean.
    let mut minimizer = minimizer;
    if minimizer.mean() < 0.0 {
        minimizer.scale(-1.0);
    }

    Ok(MinimizationResult {
        lambda_est: winner.lambda,
        minimizer,
        iterations: winner.iterations,
        converged: winner.converged,
        per_start_lambdas,
        grad_norm_final: winner.grad_norm,
    })
}

#[cfg(feature = "parallel")]
fn run_starts_parallel(
    q: &QuotientSpec,
    grid: Grid1D,
    opts: &MinimizeOptions,
) -> Vec<StartOutcome> {
    (0..opts.starts)
        .into_par_iter()
        .map(|k| run_start(q, grid, opts, k))
        .collect()
}

#[cfg(not(feature = "parallel"))]
fn run_starts_parallel(
    q: &QuotientSpec,
    grid: Grid1D,
    opts: &MinimizeOptions,
) -> Vec<StartOutcome> {
    (0..opts.starts).map(|k| run_start(q, grid, opts, k)).collect()
}

/// Start 0 is the first Dirichlet mode; the rest add a seeded uniform
/// perturbation of relative L² magnitude 0.3.
fn start_field(grid: Grid1D, seed: u64, index: usize) -> Field {
    let mode = Field::first_mode(grid);
    if index == 0 {
        return mode;
    }
    let mut rng = SplitMix64::substream(seed, index as u64);
    let noise = Field::new(grid, (0..grid.n()).map(|_| rng.next_symmetric()).collect())
        .expect("noise is finite");
    let scale = 0.3 * mode.norm_l2() / noise.norm_l2().max(1e-300);
    mode.add_scaled(scale, &noise).expect("same grid")
}

fn run_start(q: &QuotientSpec, grid: Grid1D, opts: &MinimizeOptions, index: usize) -> StartOutcome {
    match descend(q, start_field(grid, opts.seed, index), opts) {
        Ok(o) => o,
        Err(e) => StartOutcome {
            lambda: f64::INFINITY,
            minimizer: None,
            iterations: 0,
            converged: false,
            grad_norm: f64::INFINITY,
            error: Some(e),
        },
    }
}

const WINDOW: usize = 5;

fn descend(q: &QuotientSpec, u0: Field, opts: &MinimizeOptions) -> Result<StartOutcome> {
    let h = u0.grid().spacing();
    let mut u = u0.normalized()?;
    let mut f = q.evaluate(&u)?;
    // ring of the last WINDOW+1 values, preloaded with f0 so the decrease
    // test measures total progress until a full window exists
    let mut history = [f; WINDOW + 1];
    let mut step = opts.step_init;
    let mut converged = false;
    let mut grad_norm = f64::INFINITY;
    let mut iterations = 0usize;

    for iter in 0..opts.max_iter {
        iterations = iter;
        let g = q.gradient_with_eps(&u, opts.eps_reg)?;
        // L²(h)-metric gradient, projected onto the sphere tangent space
        let mut gt = g.clone();
        for v in gt.values_mut() {
            *v /= h;
        }
        let along = pairing(&gt, &u)?;
        let gt = gt.add_scaled(-along, &u)?;
        let gn2 = pairing(&gt, &gt)?;
        grad_norm = gn2.sqrt();

        let settled = {
            let old = history[(iter + 1) % (WINDOW + 1)];
            old - f <= opts.tol_rel * f.abs().max(1e-300)
        };
        if settled && grad_norm <= opts.tol_grad {
            converged = true;
            break;
        }
        if gn2 == 0.0 {
            converged = true;
            break;
        }

        // Armijo backtracking with step memory; the strict decrease guard
        // rejects sideways moves once c·s·‖g‖² rounds below one ulp of f
        step = (step * 4.0).min(1e8);
        let mut accepted = None;
        while step >= 1e-18 {
            if let Ok(cand) = u.add_scaled(-step, &gt).and_then(|c| c.normalized()) {
                if let Ok(fc) = q.evaluate(&cand) {
                    if fc < f && fc <= f - opts.armijo_c * step * gn2 {
                        accepted = Some((cand, fc));
                        break;
                    }
                }
            }
            step *= opts.backtrack;
        }
        let Some((cand, fc)) = accepted else {
            // no productive step exists at representable sizes
            converged = grad_norm <= opts.tol_grad;
            break;
        };
        assert!(fc <= f, "descent must be monotone: {fc} > {f}");
        u = cand;
        f = fc;
        history[(iter + 1) % (WINDOW + 1)] = f;
        step = step.max(1e-18);
    }

    Ok(StartOutcome {
        lambda: f,
        minimizer: Some(u),
        iterations,
        converged,
        grad_norm,
        error: None,
    })
}

/// Run [`minimize`] across a family of grids of strictly increasing
/// resolution; discretization-convergence evidence.
pub fn refine_study(
    q: &QuotientSpec,
    grids: &[Grid1D],
    opts: &MinimizeOptions,
) -> Result<Vec<(usize, f64)>> {
    if grids.len() < 3 {
        return Err(Error::InvalidSpec(
            "refine_study needs at least 3 grids".into(),
        ));
    }
    if grids.windows(2).any(|w| w[1].n() <= w[0].n()) {
        return Err(Error::InvalidSpec(
            "refine_study grids must have strictly increasing n".into(),
        ));
    }
    grids
        .iter()
        .map(|&g| Ok((g.n(), minimize(q, g, opts)?.lambda_est)))
        .collect()
}
