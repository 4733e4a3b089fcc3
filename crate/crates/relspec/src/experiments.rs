//! Reproduction of the verifiable claims: scaling laws, identities,
//! inequalities, solvability below the spectral threshold, and hypothesis
//! probes.
//!
//! Probe fields are partial sums of the first six Dirichlet modes with
//! seeded coefficients; white noise would put kinks everywhere and probe the
//! wrong function class. Per-sample work is independent and runs on the
//! rayon pool when the `parallel` feature is on; every sample derives its
//! own generator from `(seed, index)`, so results do not depend on
//! scheduling.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::grid::{forward_diff, lp_norm, midpoints_raw, pairing, second_diff};
use crate::minimize::{minimize, MinimizeOptions};
use crate::operators::{least_squares_slope, sgn_pow, OperatorKind, OperatorSpec};
use crate::oracles::tridiag_lap_eig;
use crate::quotient::QuotientSpec;
use crate::rng::SplitMix64;
use crate::{Error, Field, Grid1D, Result};

/// Seeded random smooth field: a combination of the first six Dirichlet
/// modes, normalized to the unit L² sphere.
pub fn smooth_field(grid: Grid1D, rng: &mut SplitMix64) -> Field {
    let l = grid.length();
    let coeffs: Vec<f64> = (0..6).map(|_| rng.next_symmetric()).collect();
    let mut vals = vec![0.0; grid.n()];
    for (i, x) in grid.nodes().enumerate() {
        let mut acc = 0.0;
        for (k, c) in coeffs.iter().enumerate() {
            acc += c * ((k + 1) as f64 * std::f64::consts::PI * x / l).sin();
        }
        vals[i] = acc;
    }
    let mut field = Field::new(grid, vals).expect("finite samples");
    if field.norm_l2() < 1e-12 {
        // all coefficients vanished; fall back to the first mode
        field = Field::first_mode(grid);
    }
    field.normalized().expect("nonzero")
}

fn smooth_field_indexed(grid: Grid1D, seed: u64, index: u64) -> Field {
    smooth_field(grid, &mut SplitMix64::substream(seed, index))
}

/// Log-log scaling of the relative quotient along a ray of radii.
#[derive(Debug, Clone)]
pub struct ScalingFit {
    /// Radii scanned.
    pub radii: Vec<f64>,
    /// Quotient value measured at each radius.
    pub lambdas: Vec<f64>,
    /// Exponent `e` of the normalization law `λ(1) = λ(r) · r^e`, estimated
    /// as minus the least-squares slope of `log λ(r)` against `log r`. For
    /// exactly homogeneous operators it equals `d_G − d_F`.
    pub fitted_exponent: f64,
    /// `d_G − d_F` from the catalog degrees.
    pub expected_exponent: f64,
    /// Largest absolute residual of the log-log fit.
    pub max_residual: f64,
}

/// Measure how the quotient `⟨F(rû), rû⟩ / ⟨G(rû), rû⟩` moves with the
/// radius `r` and fit the scaling exponent.
pub fn radius_scaling(
    f_op: &OperatorSpec,
    g_op: &OperatorSpec,
    u0: &Field,
    radii: &[f64],
) -> Result<ScalingFit> {
    if u0.is_zero() {
        return Err(Error::ZeroField);
    }
    if radii.len() < 4 || radii.iter().any(|&r| !(r > 0.0)) {
        return Err(Error::InvalidSpec(
            "radius_scaling needs at least 4 positive radii".into(),
        ));
    }
    let (lo, hi) = radii
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(l, h), &r| (l.min(r), h.max(r)));
    if hi / lo < 10.0 {
        return Err(Error::InvalidSpec(
            "radii must span at least one decade".into(),
        ));
    }
    let unit = u0.normalized()?;
    let mut lambdas = Vec::with_capacity(radii.len());
    for &r in radii {
        let mut x = unit.clone();
        x.scale(r);
        let num = pairing(&f_op.apply(&x)?, &x)?;
        let den = pairing(&g_op.apply(&x)?, &x)?;
        if den.abs() < 1e-300 {
            return Err(Error::DegenerateDenominator(den));
        }
        lambdas.push(num / den);
    }
    let points: Vec<(f64, f64)> = radii
        .iter()
        .zip(&lambdas)
        .map(|(&r, &l)| (r.ln(), l.ln()))
        .collect();
    let slope = least_squares_slope(&points);
    // residuals against the fitted line
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let max_residual = points
        .iter()
        .map(|&(x, y)| (y - (my + slope * (x - mx))).abs())
        .fold(0.0, f64::max);
    Ok(ScalingFit {
        radii: radii.to_vec(),
        lambdas,
        fitted_exponent: -slope,
        expected_exponent: g_op.homogeneity_degree() - f_op.homogeneity_degree(),
        max_residual,
    })
}

/// Two routes to the substituted-diffusion eigenvalue.
#[derive(Debug, Clone)]
pub struct SubstitutionReport {
    pub p: f64,
    /// Direct minimization of the substituted quotient.
    pub lhs: f64,
    /// `((2/p) √λ₁(−Δ))²` from the tridiagonal oracle.
    pub rhs: f64,
    pub rel_err: f64,
}

/// Check the identity `λ₁(p) = ((2/p) λ₁(−Δ))²` relating the weighted
/// diffusion eigenvalue to the Laplacian one.
pub fn verify_substitution_identity(
    p: f64,
    grid: Grid1D,
    opts: &MinimizeOptions,
) -> Result<SubstitutionReport> {
    let q = QuotientSpec::substituted_laplace(p)?;
    let lhs = minimize(&q, grid, opts)?.lambda_est;
    let eig = tridiag_lap_eig(grid)?;
    let rhs = (2.0 / p * eig.value.sqrt()).powi(2);
    Ok(SubstitutionReport {
        p,
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / rhs,
    })
}

/// Comparison of the mixed-quotient spectrum with the p-Laplacian ratio.
#[derive(Debug, Clone)]
pub struct SpectrumComparisonReport {
    pub p0: f64,
    pub p1: f64,
    /// Infimum of the p-th-root mixed quotient.
    pub lambda_p0p1: f64,
    /// Infimum of `‖∇u‖_p / ‖u‖_p`.
    pub lambda_plap: f64,
    /// `lambda_p0p1 − lambda_plap`.
    pub margin: f64,
    /// Hölder-derived form: `lambda_p0p1 − lambda_plap^{p0/p}`, nonnegative
    /// up to solver tolerance.
    pub margin_corrected: f64,
}

/// Minimize both sides of the spectrum comparison and report their margins.
pub fn verify_spectrum_comparison(
    p0: f64,
    p1: f64,
    grid: Grid1D,
    opts: &MinimizeOptions,
) -> Result<SpectrumComparisonReport> {
    let p = p0 + p1;
    let lambda_p0p1 = minimize(&QuotientSpec::grad_pow_mixed_root(p0, p1)?, grid, opts)?.lambda_est;
    let lambda_plap = minimize(&QuotientSpec::plap_ratio(p)?, grid, opts)?.lambda_est;
    Ok(SpectrumComparisonReport {
        p0,
        p1,
        lambda_p0p1,
        lambda_plap,
        margin: lambda_p0p1 - lambda_plap,
        margin_corrected: lambda_p0p1 - lambda_plap.powf(p0 / p),
    })
}

/// Fully nonlinear eigenvalue `(p−1) inf ‖Δu‖_p / ‖∇u‖_p`.
#[derive(Debug, Clone)]
pub struct FullyNonlinearReport {
    pub p: f64,
    pub lambda: f64,
    /// Analytic value `π/L` available at `p = 2`.
    pub reference: Option<f64>,
    pub rel_err: Option<f64>,
}

/// Minimize the fully nonlinear quotient; at `p = 2` compare with `π/L`.
pub fn fully_nonlinear_eig(
    p: f64,
    grid: Grid1D,
    opts: &MinimizeOptions,
) -> Result<FullyNonlinearReport> {
    let q = QuotientSpec::lap_over_grad(p)?;
    let lambda = minimize(&q, grid, opts)?.lambda_est;
    let reference = (p == 2.0).then(|| std::f64::consts::PI / grid.length());
    let rel_err = reference.map(|r| (lambda - r).abs() / r);
    Ok(FullyNonlinearReport {
        p,
        lambda,
        reference,
        rel_err,
    })
}

/// Outcome of a sampled check of one condition.
#[derive(Debug, Clone)]
pub struct ProbeReport {
    /// Which condition was probed.
    pub condition_id: String,
    pub samples_tested: usize,
    pub violations: usize,
    /// Smallest margin observed (negative means a violation).
    pub worst_margin: f64,
    /// Field attaining the worst margin, kept when violations occurred.
    pub witness: Option<Field>,
}

/// Sampled verification of the weighted-norm lower bound: the weighted
/// quotient dominates `(p−1)⁻¹ ‖Δu‖_p^p / (‖u‖_p^{p−2} ‖∇u‖_p²)` by Hölder.
pub fn verify_weighted_norm_bound(
    p: f64,
    grid: Grid1D,
    samples: usize,
    seed: u64,
) -> Result<ProbeReport> {
    let q = QuotientSpec::lap_pow_over_weighted(p)?;
    let h = grid.spacing();
    let margin_of = |u: &Field| -> Result<f64> {
        let lhs = q.evaluate(u)?;
        let lap = lp_norm(&second_diff(u), p, h)?;
        let gn = lp_norm(&forward_diff(u), p, h)?;
        let un = lp_norm(u.values(), p, h)?;
        let rhs = lap.powf(p) / ((p - 1.0) * un.powf(p - 2.0) * gn * gn);
        Ok(lhs - rhs)
    };
    let margins = map_samples(samples, |i| {
        let u = smooth_field_indexed(grid, seed, i as u64);
        margin_of(&u).map(|m| (m, u))
    })?;
    Ok(summarize_probe(
        format!("weighted-norm-bound p={p}"),
        margins,
        -1e-10,
    ))
}

/// Infimum of the composed quotient with its eigenvalue bounds.
#[derive(Debug, Clone)]
pub struct ComposedReport {
    pub p: f64,
    /// Minimized composed quotient.
    pub lambda_f: f64,
    /// `λ₁(−Δ)^{p−1}` from the tridiagonal oracle.
    pub lower_bound: f64,
    /// `lambda_f − lower_bound`.
    pub margin: f64,
    /// `φ(λ₁)·‖f(x₁)‖/‖g(x₁)‖` evaluated at the oracle eigenfunction.
    pub upper_bound: f64,
    /// `upper_bound − lambda_f`.
    pub upper_margin: f64,
}

/// Minimize the composed power quotient and compare with the bounds derived
/// from the first Laplacian eigenpair.
pub fn composed_operator_eig(
    p: f64,
    grid: Grid1D,
    opts: &MinimizeOptions,
) -> Result<ComposedReport> {
    let q = QuotientSpec::composed_power(p)?;
    let lambda_f = minimize(&q, grid, opts)?.lambda_est;
    let eig = tridiag_lap_eig(grid)?;
    let lower_bound = eig.value.powf(p - 1.0);
    // upper bound at the first eigenfunction with f = g = |t|^{p−2} t
    let h = grid.spacing();
    let fx: Vec<f64> = eig.vector.values().iter().map(|&t| sgn_pow(t, p - 1.0)).collect();
    let ratio = lp_norm(&fx, 2.0, h)? / lp_norm(&fx, 2.0, h)?;
    let upper_bound = eig.value.powf(p - 1.0) * ratio;
    Ok(ComposedReport {
        p,
        lambda_f,
        lower_bound,
        margin: lambda_f - lower_bound,
        upper_bound,
        upper_margin: upper_bound - lambda_f,
    })
}

/// Options for the perturbed-equation Newton solver.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// L² residual norm accepted as solved.
    pub residual_tol: f64,
    /// Newton step cap.
    pub max_steps: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            residual_tol: 1e-8,
            max_steps: 100,
        }
    }
}

/// One solve of `F(u) − λ G(u) = rhs`.
#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub lambda: f64,
    /// L² norm of the right-hand side.
    pub rhs_scale: f64,
    pub converged: bool,
    /// Final residual L² norm.
    pub residual: f64,
    /// L² norm of the returned iterate.
    pub solution_norm: f64,
    /// The iterate itself (best found, even when not converged).
    pub solution: Field,
}

/// Damped Newton for the perturbed equation from a zero start. Divergence is
/// reported in the outcome, never raised as an error; only invalid inputs or
/// non-finite operator evaluations error out.
pub fn solve_perturbed(
    f_op: &OperatorSpec,
    g_op: &OperatorSpec,
    lambda: f64,
    rhs: &Field,
    opts: &SolveOptions,
) -> Result<SolveOutcome> {
    let grid = rhs.grid();
    let n = grid.n();
    let h = grid.spacing();
    let residual = |u: &Field| -> Result<Vec<f64>> {
        let fu = f_op.apply(u)?;
        let gu = g_op.apply(u)?;
        Ok((0..n)
            .map(|i| fu.values()[i] - lambda * gu.values()[i] - rhs.values()[i])
            .collect())
    };
    let norm = |r: &[f64]| (h * r.iter().map(|v| v * v).sum::<f64>()).sqrt();

    let mut u = Field::zeros(grid);
    let mut r = residual(&u)?;
    let mut rnorm = norm(&r);
    let mut converged = rnorm <= opts.residual_tol;
    for _ in 0..opts.max_steps {
        if converged {
            break;
        }
        // central-difference Jacobian (the reference solver uses forward
        // differences; keeping the stencils different preserves the
        // dual-route character of the cross-check)
        let mut jac = vec![0.0; n * n];
        let mut probe = u.clone();
        let mut jac_ok = true;
        for j in 0..n {
            let delta = 1e-6 * (1.0 + u.values()[j].abs());
            probe.values_mut()[j] = u.values()[j] + delta;
            let rp = match residual(&probe) {
                Ok(v) => v,
                Err(_) => {
                    jac_ok = false;
                    break;
                }
            };
            probe.values_mut()[j] = u.values()[j] - delta;
            let rm = match residual(&probe) {
                Ok(v) => v,
                Err(_) => {
                    jac_ok = false;
                    break;
                }
            };
            probe.values_mut()[j] = u.values()[j];
            for i in 0..n {
                jac[i * n + j] = (rp[i] - rm[i]) / (2.0 * delta);
            }
        }
        if !jac_ok {
            break;
        }
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let Ok(d) = gauss_solve(jac, n, neg_r) else {
            break;
        };
        let dir = Field::new(grid, d)?;
        // backtrack on the residual norm with a small forced-decrease slope
        let mut t = 1.0;
        let mut accepted = None;
        while t >= 1e-12 {
            if let Ok(cand) = u.add_scaled(t, &dir) {
                if let Ok(rc) = residual(&cand) {
                    let rcn = norm(&rc);
                    if rcn <= (1.0 - 1e-4 * t) * rnorm {
                        accepted = Some((cand, rc, rcn));
                        break;
                    }
                }
            }
            t *= 0.5;
        }
        let Some((cand, rc, rcn)) = accepted else {
            break;
        };
        u = cand;
        r = rc;
        rnorm = rcn;
        converged = rnorm <= opts.residual_tol;
    }
    Ok(SolveOutcome {
        lambda,
        rhs_scale: rhs.norm_l2(),
        converged,
        residual: rnorm,
        solution_norm: u.norm_l2(),
        solution: u,
    })
}

/// Solve the perturbed equation across a λ grid; each outcome carries its
/// own status.
pub fn solvability_scan(
    f_op: &OperatorSpec,
    g_op: &OperatorSpec,
    lambdas: &[f64],
    rhs: &Field,
    opts: &SolveOptions,
) -> Result<Vec<SolveOutcome>> {
    if lambdas.len() < 5 {
        return Err(Error::InvalidSpec(
            "solvability_scan needs at least 5 lambda values".into(),
        ));
    }
    map_indexed(lambdas.len(), |i| {
        solve_perturbed(f_op, g_op, lambdas[i], rhs, opts)
    })
}

/// Sampled probes of the solvability-theorem hypotheses: (a) the coercivity
/// margin of the perturbed operator against `(1 − λ/λ_ref)‖∇u‖_p^p`, and
/// (b) monotonicity of `t ↦ |t|^{p−2}t` composed with `L = −Δ`.
pub fn condition_probe(
    f_op: &OperatorSpec,
    g_op: &OperatorSpec,
    grid: Grid1D,
    lambda: f64,
    samples: usize,
    seed: u64,
    opts: &MinimizeOptions,
) -> Result<Vec<ProbeReport>> {
    if samples < 100 {
        return Err(Error::InvalidSpec(
            "condition_probe needs at least 100 samples".into(),
        ));
    }
    let p = primary_exponent(f_op);
    let (p0, p1) = match g_op.kind() {
        OperatorKind::PowerGradWeight { p0, p1 } => (p0, p1),
        OperatorKind::Power { p0 } => (p0, 0.0),
        other => {
            return Err(Error::InvalidSpec(format!(
                "coercivity probe needs a PowerGradWeight or Power right operator, got {other:?}"
            )))
        }
    };

    // (a) coercivity: ⟨f_λ(u), u⟩ − (1 − λ/λ_ref) ‖∇u‖_p^p with λ_ref the
    // minimized mixed-quotient spectrum on this grid
    let lambda_ref = minimize(&QuotientSpec::grad_pow_mixed(p0, p1)?, grid, opts)?.lambda_est;
    let h = grid.spacing();
    let coercivity_margin = |u: &Field| -> Result<f64> {
        let g = forward_diff(u);
        let num: f64 = h * g.iter().map(|t| t.abs().powf(p)).sum::<f64>();
        let den = mixed_integral(u, p0, p1);
        let pairing_flu = num - lambda * den;
        Ok(pairing_flu - (1.0 - lambda / lambda_ref) * num)
    };
    let margins_a = map_samples(samples, |i| {
        let u = smooth_field_indexed(grid, seed, i as u64);
        coercivity_margin(&u).map(|m| (m, u))
    })?;
    let report_a = summarize_probe(
        format!("coercivity p={p} p0={p0} p1={p1} lambda={lambda}"),
        margins_a,
        -1e-9,
    );

    // (b) monotonicity of the composed kernel on sample pairs
    let margins_b = map_samples(samples, |i| {
        let u1 = smooth_field_indexed(grid, seed ^ 0x5151_5151, (2 * i) as u64);
        let u2 = smooth_field_indexed(grid, seed ^ 0x5151_5151, (2 * i + 1) as u64);
        let a: Vec<f64> = second_diff(&u1).iter().map(|d| -d).collect();
        let b: Vec<f64> = second_diff(&u2).iter().map(|d| -d).collect();
        let m = h * a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| (sgn_pow(x, p - 1.0) - sgn_pow(y, p - 1.0)) * (x - y))
            .sum::<f64>();
        Ok((m, u1))
    })?;
    let report_b = summarize_probe(format!("monotonicity p={p}"), margins_b, -1e-12);

    Ok(vec![report_a, report_b])
}

/// `∫ |u|^{p0} |∇u|^{p1}` with the same collocation the quotient catalog
/// uses (midpoints when the integrand mixes, node rule when `p1 = 0`).
fn mixed_integral(u: &Field, p0: f64, p1: f64) -> f64 {
    let h = u.grid().spacing();
    if p1 == 0.0 {
        return h * u.values().iter().map(|t| t.abs().powf(p0)).sum::<f64>();
    }
    let g = forward_diff(u);
    let um = midpoints_raw(u.values());
    h * g
        .iter()
        .zip(&um)
        .map(|(&gc, &mc)| mc.abs().powf(p0) * gc.abs().powf(p1))
        .sum::<f64>()
}

fn primary_exponent(op: &OperatorSpec) -> f64 {
    match op.kind() {
        OperatorKind::PLaplacian { p }
        | OperatorKind::WeightedDiffusion { p }
        | OperatorKind::BiPower { p } => p,
        OperatorKind::PowerGradWeight { p0, p1 } => p0 + p1,
        OperatorKind::Power { p0 } => p0,
        OperatorKind::GradPower { mu } => mu,
    }
}

fn summarize_probe(
    condition_id: String,
    margins: Vec<(f64, Field)>,
    floor: f64,
) -> ProbeReport {
    let samples_tested = margins.len();
    let mut violations = 0usize;
    let mut worst_margin = f64::INFINITY;
    let mut witness: Option<Field> = None;
    for (m, u) in margins {
        if m < floor {
            violations += 1;
        }
        if m < worst_margin {
            worst_margin = m;
            witness = Some(u);
        }
    }
    ProbeReport {
        condition_id,
        samples_tested,
        violations,
        worst_margin,
        witness: if violations > 0 { witness } else { None },
    }
}

fn map_samples<F>(samples: usize, f: F) -> Result<Vec<(f64, Field)>>
where
    F: Fn(usize) -> Result<(f64, Field)> + Sync + Send,
{
    map_indexed(samples, f)
}

#[cfg(feature = "parallel")]
fn map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..count).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_indexed<T, F>(count: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    (0..count).map(f).collect()
}

/// Scaled-partial-pivot Gaussian elimination, independent of the LU routine
/// used by the reference solver.
fn gauss_solve(mut a: Vec<f64>, n: usize, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let mut scale = vec![0.0; n];
    for i in 0..n {
        let row_max = (0..n).map(|j| a[i * n + j].abs()).fold(0.0, f64::max);
        if row_max == 0.0 {
            return Err(Error::SingularSystem(0.0));
        }
        scale[i] = 1.0 / row_max;
    }
    let mut order: Vec<usize> = (0..n).collect();
    for col in 0..n {
        let (best, best_val) = (col..n)
            .map(|r| (r, a[order[r] * n + col].abs() * scale[order[r]]))
            .fold((col, -1.0), |acc, (r, v)| if v > acc.1 { (r, v) } else { acc });
        if best_val < 1e-300 {
            return Err(Error::SingularSystem(best_val));
        }
        order.swap(col, best);
        let prow = order[col];
        let pinv = 1.0 / a[prow * n + col];
        for &row in order.iter().skip(col + 1) {
            let factor = a[row * n + col] * pinv;
            if factor == 0.0 {
                continue;
            }
            a[row * n + col] = 0.0;
            for k in col + 1..n {
                a[row * n + k] -= factor * a[prow * n + k];
            }
            b[row] -= factor * b[prow];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let row = order[col];
        let mut acc = b[row];
        for k in col + 1..n {
            acc -= a[row * n + k] * x[k];
        }
        x[col] = acc / a[row * n + col];
    }
    Ok(x)
}

pub use crate::minimize::refine_study;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{dense_newton, NewtonOptions};
    use std::f64::consts::PI;

    fn fast_opts(seed: u64) -> MinimizeOptions {
        MinimizeOptions {
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn scaling_mismatched_pairs() {
        let grid = Grid1D::new(1.0, 49).unwrap();
        let mut rng = SplitMix64::new(1);
        let u0 = smooth_field(grid, &mut rng);
        let radii = [0.1, 0.5, 1.0, 2.0, 5.0];
        let cases = [
            // (F, G, expected dG − dF)
            (
                OperatorSpec::p_laplacian(4.0).unwrap(),
                OperatorSpec::power(2.0).unwrap(),
                -2.0,
            ),
            (
                OperatorSpec::p_laplacian(2.0).unwrap(),
                OperatorSpec::power(3.0).unwrap(),
                1.0,
            ),
            (
                OperatorSpec::bi_power(3.0).unwrap(),
                OperatorSpec::power(2.0).unwrap(),
                -1.0,
            ),
        ];
        for (f, g, want) in cases {
            let fit = radius_scaling(&f, &g, &u0, &radii).unwrap();
            assert_eq!(fit.expected_exponent, want);
            assert!(
                (fit.fitted_exponent - want).abs() <= 1e-6,
                "{:?}/{:?}: fitted {}",
                f.kind(),
                g.kind(),
                fit.fitted_exponent
            );
        }
    }

    #[test]
    fn scaling_matched_pairs_are_flat() {
        let grid = Grid1D::new(1.0, 49).unwrap();
        let mut rng = SplitMix64::new(2);
        let u0 = smooth_field(grid, &mut rng);
        let radii = [0.2, 0.7, 2.1, 6.3];
        let cases = [
            (
                OperatorSpec::p_laplacian(3.0).unwrap(),
                OperatorSpec::power_grad_weight(2.0, 1.0).unwrap(),
            ),
            (
                OperatorSpec::p_laplacian(2.0).unwrap(),
                OperatorSpec::grad_power(2.0).unwrap(),
            ),
        ];
        for (f, g) in cases {
            let fit = radius_scaling(&f, &g, &u0, &radii).unwrap();
            assert_eq!(fit.expected_exponent, 0.0);
            assert!(fit.fitted_exponent.abs() <= 1e-9, "{}", fit.fitted_exponent);
        }
    }

    #[test]
    fn scaling_validates_input() {
        let grid = Grid1D::new(1.0, 19).unwrap();
        let f = OperatorSpec::p_laplacian(2.0).unwrap();
        let g = OperatorSpec::power(2.0).unwrap();
        let u = Field::first_mode(grid);
        assert!(radius_scaling(&f, &g, &Field::zeros(grid), &[0.1, 1.0, 2.0, 10.0]).is_err());
        assert!(radius_scaling(&f, &g, &u, &[0.5, 1.0, 2.0]).is_err());
        assert!(radius_scaling(&f, &g, &u, &[0.5, 1.0, 2.0, 4.0]).is_err());
    }

    #[test]
    fn substitution_identity_reduction_case() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        let report = verify_substitution_identity(2.0, grid, &fast_opts(3)).unwrap();
        assert!((report.rhs - PI * PI).abs() / (PI * PI) < 1e-3);
        assert!(report.rel_err <= 2e-2, "rel_err {}", report.rel_err);
    }

    #[test]
    fn spectrum_comparison_reduction_case() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        let r = verify_spectrum_comparison(2.0, 0.0, grid, &fast_opts(4)).unwrap();
        assert!((r.lambda_plap - PI).abs() / PI < 1e-2);
        assert!(r.margin >= -1e-6, "margin {}", r.margin);
        assert!(r.margin_corrected >= -1e-6);
    }

    #[test]
    fn spectrum_comparison_mixed_pair_reports_both_margins() {
        // The mixed pair's raw margin is genuinely negative (the tent
        // function pushes the mixed infimum to 2 < π); the Hölder-corrected
        // margin stays nonnegative.
        let grid = Grid1D::new(1.0, 99).unwrap();
        let r = verify_spectrum_comparison(1.0, 1.0, grid, &fast_opts(5)).unwrap();
        assert!(r.margin < -0.5, "raw margin unexpectedly {}", r.margin);
        assert!(r.margin_corrected >= -1e-6, "{}", r.margin_corrected);
    }

    #[test]
    fn fully_nonlinear_matches_pi_at_p2() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        let r = fully_nonlinear_eig(2.0, grid, &fast_opts(6)).unwrap();
        assert!(r.rel_err.unwrap() < 2e-2, "{:?}", r);
        let grid2 = Grid1D::new(2.0, 99).unwrap();
        let r2 = fully_nonlinear_eig(2.0, grid2, &fast_opts(6)).unwrap();
        assert!((r2.lambda - PI / 2.0).abs() / (PI / 2.0) < 2e-2);
    }

    #[test]
    fn weighted_norm_bound_has_no_violations() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        for p in [2.0, 3.0] {
            let r = verify_weighted_norm_bound(p, grid, 300, 11).unwrap();
            assert_eq!(r.violations, 0, "p={p}: worst {}", r.worst_margin);
            assert!(r.witness.is_none());
            assert_eq!(r.samples_tested, 300);
        }
    }

    #[test]
    fn composed_eig_reduction_case() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        let r = composed_operator_eig(2.0, grid, &fast_opts(7)).unwrap();
        // linear case: equality with the Laplacian eigenvalue
        assert!((r.lambda_f - r.lower_bound).abs() / r.lower_bound < 2e-2);
        assert!(r.upper_margin >= -1e-9 * r.upper_bound);
    }

    #[test]
    fn solve_below_threshold_converges() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        let f = OperatorSpec::p_laplacian(2.0).unwrap();
        let g = OperatorSpec::power_grad_weight(2.0, 0.0).unwrap();
        let mut rhs = Field::first_mode(grid);
        rhs.scale(0.1);
        let out = solve_perturbed(&f, &g, 0.5 * PI * PI, &rhs, &SolveOptions::default()).unwrap();
        assert!(out.converged, "residual {}", out.residual);
        assert!(out.residual <= 1e-8);
        // cross-check against the independent reference solver
        let reference = dense_newton(&f, &g, 0.5 * PI * PI, &rhs, &NewtonOptions::default()).unwrap();
        assert!(out.solution.max_diff(&reference) <= 1e-6);
    }

    #[test]
    fn solve_zero_rhs_gives_zero() {
        let grid = Grid1D::new(1.0, 49).unwrap();
        let f = OperatorSpec::p_laplacian(2.0).unwrap();
        let g = OperatorSpec::power_grad_weight(2.0, 0.0).unwrap();
        let out =
            solve_perturbed(&f, &g, 4.0, &Field::zeros(grid), &SolveOptions::default()).unwrap();
        assert!(out.converged);
        assert!(out.solution_norm <= 1e-12);
    }

    #[test]
    fn super_threshold_behavior_is_reported_not_asserted() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        let f = OperatorSpec::p_laplacian(2.0).unwrap();
        let g = OperatorSpec::power_grad_weight(2.0, 0.0).unwrap();
        let mut rhs = Field::first_mode(grid);
        rhs.scale(0.1);
        let out = solve_perturbed(&f, &g, 1.5 * PI * PI, &rhs, &SolveOptions::default()).unwrap();
        // documented descriptively: whatever happened, the outcome carries
        // its own status and norms
        assert!(out.residual.is_finite());
        assert!(out.solution_norm.is_finite());
    }

    #[test]
    fn scan_below_threshold_all_converge() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        let f = OperatorSpec::p_laplacian(2.0).unwrap();
        let g = OperatorSpec::power_grad_weight(2.0, 0.0).unwrap();
        let mut rhs = Field::first_mode(grid);
        rhs.scale(0.1);
        let pi2 = PI * PI;
        let lambdas: Vec<f64> = [0.0, 0.25, 0.5, 0.75, 0.9].iter().map(|c| c * pi2).collect();
        let outcomes = solvability_scan(&f, &g, &lambdas, &rhs, &SolveOptions::default()).unwrap();
        assert!(outcomes.iter().all(|o| o.converged));
    }

    #[test]
    fn scan_at_resonance_reports_blowup_or_failure() {
        let grid = Grid1D::new(1.0, 99).unwrap();
        let f = OperatorSpec::p_laplacian(2.0).unwrap();
        let g = OperatorSpec::power_grad_weight(2.0, 0.0).unwrap();
        let eig = tridiag_lap_eig(grid).unwrap();
        let mut rhs = Field::first_mode(grid);
        rhs.scale(0.1);
        let sub = solve_perturbed(&f, &g, 0.5 * eig.value, &rhs, &SolveOptions::default()).unwrap();
        let res = solve_perturbed(&f, &g, eig.value, &rhs, &SolveOptions::default()).unwrap();
        assert!(
            !res.converged || res.solution_norm > 10.0 * sub.solution_norm,
            "resonance went unnoticed: {res:?}"
        );
    }

    #[test]
    fn degenerate_scan_all_zero() {
        let grid = Grid1D::new(1.0, 49).unwrap();
        let f = OperatorSpec::p_laplacian(2.0).unwrap();
        let g = OperatorSpec::power_grad_weight(2.0, 0.0).unwrap();
        let mut rhs = Field::first_mode(grid);
        rhs.scale(0.05);
        let outcomes =
            solvability_scan(&f, &g, &[0.0; 5], &rhs, &SolveOptions::default()).unwrap();
        assert!(outcomes.iter().all(|o| o.converged));
        let first = &outcomes[0];
        for o in &outcomes[1..] {
            assert!(o.solution.max_diff(&first.solution) <= 1e-12);
        }
        assert!(solvability_scan(&f, &g, &[0.0; 4], &rhs, &SolveOptions::default()).is_err());
    }

    #[test]
    fn condition_probes_pass() {
        let grid = Grid1D::new(1.0, 49).unwrap();
        let f = OperatorSpec::p_laplacian(2.0).unwrap();
        let g = OperatorSpec::power_grad_weight(2.0, 0.0).unwrap();
        let reports =
            condition_probe(&f, &g, grid, 0.5 * PI * PI, 200, 13, &fast_opts(13)).unwrap();
        assert_eq!(reports.len(), 2);
        for r in &reports {
            assert_eq!(r.violations, 0, "{}: worst {}", r.condition_id, r.worst_margin);
        }
        // monotonicity with the quartic kernel
        let f4 = OperatorSpec::bi_power(4.0).unwrap();
        let g4 = OperatorSpec::power(4.0).unwrap();
        let reports4 = condition_probe(&f4, &g4, grid, 0.0, 200, 14, &fast_opts(14)).unwrap();
        assert_eq!(reports4[1].violations, 0);
        assert!(condition_probe(&f, &g, grid, 0.0, 50, 0, &fast_opts(0)).is_err());
    }

    #[test]
    fn smooth_fields_are_deterministic_and_unit() {
        let grid = Grid1D::new(1.0, 63).unwrap();
        let a = smooth_field_indexed(grid, 9, 4);
        let b = smooth_field_indexed(grid, 9, 4);
        assert_eq!(a, b);
        assert!((a.norm_l2() - 1.0).abs() < 1e-12);
        let c = smooth_field_indexed(grid, 9, 5);
        assert!(a.max_diff(&c) > 1e-6);
    }
}
