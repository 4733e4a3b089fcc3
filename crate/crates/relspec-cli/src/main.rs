//! Batch command-line front end: structured configs in, deterministic
//! CSV/JSON reports out.
//!
//! Exit codes: 0 all checks passed, 1 invocation or config error, 2 a
//! mathematical assertion failed (an inequality was violated or an identity
//! missed its tolerance) so CI can tell a refuted claim from a bad run.

mod config;
mod report;

use std::process::ExitCode;

use relspec::experiments::{
    composed_operator_eig, condition_probe, fully_nonlinear_eig, radius_scaling, refine_study,
    solvability_scan, verify_spectrum_comparison, verify_substitution_identity,
    verify_weighted_norm_bound, SolveOptions,
};
use relspec::oracles::{eigen_residual, tridiag_lap_eig};
use relspec::{minimize, Field, Grid1D};

use config::{parse_config, Command, Format, RunConfig, SweepKind, VerifyTarget};
use report::{to_csv, to_json, ReportRow, Status};

/// Tolerances for the verify command's pass/fail gates.
const IDENTITY_TOL: f64 = 3e-2;
const MARGIN_TOL: f64 = -1e-6;
const EQ44_TOL: f64 = 2e-2;

struct Cli {
    config_path: String,
    out: Option<String>,
    format: Option<Format>,
    seed: Option<u64>,
    quiet: bool,
}

fn parse_args(args: &[String]) -> Result<Cli, String> {
    let mut config_path = None;
    let mut out = None;
    let mut format = None;
    let mut seed = None;
    let mut quiet = false;
    let mut it = args.iter();
    while let Some(arg) = it.next() {
        match arg.as_str() {
            "--config" => {
                config_path = Some(
                    it.next()
                        .ok_or("--config requires a path")?
                        .clone(),
                )
            }
            "--out" => out = Some(it.next().ok_or("--out requires a path")?.clone()),
            "--format" => {
                format = Some(match it.next().ok_or("--format requires csv|json")?.as_str() {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => return Err(format!("--format: expected csv or json, got `{other}`")),
                })
            }
            "--seed" => {
                seed = Some(
                    it.next()
                        .ok_or("--seed requires an unsigned integer")?
                        .parse::<u64>()
                        .map_err(|_| "--seed requires an unsigned integer".to_string())?,
                )
            }
            "--quiet" => quiet = true,
            other => return Err(format!("unknown argument `{other}`")),
        }
    }
    Ok(Cli {
        config_path: config_path.ok_or("missing required --config <path>")?,
        out,
        format,
        seed,
        quiet,
    })
}

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let cli = match parse_args(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            eprintln!("usage: relspec --config <path> [--out <path>] [--format csv|json] [--seed <u64>] [--quiet]");
            return ExitCode::from(1);
        }
    };

    let text = match std::fs::read_to_string(&cli.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read config `{}`: {e}", cli.config_path);
            return ExitCode::from(1);
        }
    };
    let mut cfg = match parse_config(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    if let Some(seed) = cli.seed {
        cfg.minimize.seed = seed;
        for (k, v) in &mut cfg.echo {
            if k == "seed" {
                *v = format!("{seed}");
            }
        }
    }
    if let Some(fmt) = cli.format {
        cfg.format = fmt;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }

    let (rows, assertion_failed) = match run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };

    let rendered = match cfg.format {
        Format::Csv => to_csv(&rows),
        Format::Json => to_json(&rows),
    };
    match &cfg.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &rendered) {
                eprintln!("error: cannot write `{path}`: {e}");
                return ExitCode::from(1);
            }
            if !cli.quiet {
                println!(
                    "{} row(s) written to {path}{}",
                    rows.len(),
                    if assertion_failed {
                        " (assertion failures present)"
                    } else {
                        ""
                    }
                );
            }
        }
        None => {
            if !cli.quiet {
                print!("{rendered}");
            }
        }
    }

    if assertion_failed {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}

/// Dispatch one config; returns the rows and whether any assertion-class
/// check failed.
fn run(cfg: &RunConfig) -> Result<(Vec<ReportRow>, bool), Box<dyn std::error::Error>> {
    let grid = Grid1D::new(cfg.length, cfg.n)?;
    let mut rows = Vec::new();
    let mut failed = false;
    let mut row_index = 0usize;
    let mut push = |rows: &mut Vec<ReportRow>,
                    command: &str,
                    status: Status,
                    extra_params: Vec<(String, String)>,
                    metrics: Vec<(String, f64)>| {
        let mut params = cfg.echo.clone();
        params.extend(extra_params);
        rows.push(ReportRow {
            run_id: format!("{command}-{row_index:04}"),
            command: command.to_string(),
            status,
            params,
            metrics,
        });
        row_index += 1;
    };

    match cfg.command {
        Command::Baseline => {
            let pair = tridiag_lap_eig(grid)?;
            let h = grid.spacing();
            let closed = (2.0 / (h * h)) * (1.0 - (std::f64::consts::PI * h / cfg.length).cos());
            push(
                &mut rows,
                cfg.command.name(),
                Status::Ok,
                vec![],
                vec![
                    ("lambda".into(), pair.value),
                    ("closed_form".into(), closed),
                    ("residual".into(), eigen_residual(&pair)),
                ],
            );
        }
        Command::Eig => {
            let q = cfg.quotient.as_ref().expect("validated");
            match minimize(q, grid, &cfg.minimize) {
                Ok(r) => {
                    let status = if r.converged { Status::Ok } else { Status::NoConverge };
                    push(
                        &mut rows,
                        cfg.command.name(),
                        status,
                        vec![],
                        vec![
                            ("lambda_est".into(), r.lambda_est),
                            ("grad_norm_final".into(), r.grad_norm_final),
                            ("iterations".into(), r.iterations as f64),
                            ("converged".into(), if r.converged { 1.0 } else { 0.0 }),
                        ],
                    );
                }
                // a degenerate quotient evaluation is a reported outcome,
                // not an invocation error
                Err(e @ (relspec::Error::DegenerateDenominator(_) | relspec::Error::ZeroField)) => {
                    eprintln!("degenerate input: {e}");
                    push(&mut rows, cfg.command.name(), Status::Degenerate, vec![], vec![]);
                }
                Err(e) => return Err(e.into()),
            }
        }
        Command::Verify => match cfg.target.expect("validated") {
            VerifyTarget::SubstitutionIdentity => {
                let r = verify_substitution_identity(cfg.p, grid, &cfg.minimize)?;
                let ok = r.rel_err <= IDENTITY_TOL;
                failed |= !ok;
                push(
                    &mut rows,
                    cfg.command.name(),
                    Status::Ok,
                    vec![],
                    vec![
                        ("lhs".into(), r.lhs),
                        ("rhs".into(), r.rhs),
                        ("rel_err".into(), r.rel_err),
                        ("tolerance".into(), IDENTITY_TOL),
                    ],
                );
            }
            VerifyTarget::SpectrumComparison => {
                let (p0, p1) = (cfg.p0.expect("validated"), cfg.p1.expect("validated"));
                let r = verify_spectrum_comparison(p0, p1, grid, &cfg.minimize)?;
                let ok = r.margin >= MARGIN_TOL;
                failed |= !ok;
                push(
                    &mut rows,
                    cfg.command.name(),
                    Status::Ok,
                    vec![],
                    vec![
                        ("lambda_p0p1".into(), r.lambda_p0p1),
                        ("lambda_plap".into(), r.lambda_plap),
                        ("margin".into(), r.margin),
                        ("margin_corrected".into(), r.margin_corrected),
                    ],
                );
            }
            VerifyTarget::WeightedNormBound => {
                let r = verify_weighted_norm_bound(cfg.p, grid, cfg.samples, cfg.minimize.seed)?;
                let ok = r.violations == 0;
                failed |= !ok;
                push(
                    &mut rows,
                    cfg.command.name(),
                    Status::Ok,
                    vec![("condition".into(), r.condition_id.clone())],
                    vec![
                        ("samples_tested".into(), r.samples_tested as f64),
                        ("violations".into(), r.violations as f64),
                        ("worst_margin".into(), r.worst_margin),
                    ],
                );
            }
            VerifyTarget::ComposedBounds => {
                let r = composed_operator_eig(cfg.p, grid, &cfg.minimize)?;
                let ok = r.margin >= MARGIN_TOL * r.lower_bound
                    && r.upper_margin >= -1e-9 * r.upper_bound;
                failed |= !ok;
                push(
                    &mut rows,
                    cfg.command.name(),
                    Status::Ok,
                    vec![],
                    vec![
                        ("lambda_f".into(), r.lambda_f),
                        ("lower_bound".into(), r.lower_bound),
                        ("margin".into(), r.margin),
                        ("upper_bound".into(), r.upper_bound),
                        ("upper_margin".into(), r.upper_margin),
                    ],
                );
            }
            VerifyTarget::FullyNonlinear => {
                let r = fully_nonlinear_eig(cfg.p, grid, &cfg.minimize)?;
                let ok = r.rel_err.is_none_or(|e| e <= EQ44_TOL);
                failed |= !ok;
                let mut metrics = vec![("lambda".into(), r.lambda)];
                if let Some(reference) = r.reference {
                    metrics.push(("reference".into(), reference));
                }
                if let Some(rel) = r.rel_err {
                    metrics.push(("rel_err".into(), rel));
                }
                push(&mut rows, cfg.command.name(), Status::Ok, vec![], metrics);
            }
        },
        Command::Sweep => match cfg.sweep_kind.expect("validated") {
            SweepKind::Refine => {
                let q = cfg.quotient.as_ref().expect("validated");
                let grids: Vec<Grid1D> = cfg
                    .ns
                    .iter()
                    .map(|&n| Grid1D::new(cfg.length, n))
                    .collect::<Result<_, _>>()?;
                let table = refine_study(q, &grids, &cfg.minimize)?;
                for (n, lambda) in table {
                    push(
                        &mut rows,
                        cfg.command.name(),
                        Status::Ok,
                        vec![("row_n".into(), format!("{n}"))],
                        vec![("lambda_est".into(), lambda)],
                    );
                }
            }
            SweepKind::Radius => {
                let f = cfg.f_op.expect("validated");
                let g = cfg.g_op.expect("validated");
                let u0 = Field::first_mode(grid);
                let fit = radius_scaling(&f, &g, &u0, &cfg.radii)?;
                let ok = (fit.fitted_exponent - fit.expected_exponent).abs() <= 1e-6;
                failed |= !ok;
                for (r, l) in fit.radii.iter().zip(&fit.lambdas) {
                    push(
                        &mut rows,
                        cfg.command.name(),
                        Status::Ok,
                        vec![("row_radius".into(), format!("{r}"))],
                        vec![("lambda".into(), *l)],
                    );
                }
                push(
                    &mut rows,
                    cfg.command.name(),
                    Status::Ok,
                    vec![("row_radius".into(), "fit".into())],
                    vec![
                        ("fitted_exponent".into(), fit.fitted_exponent),
                        ("expected_exponent".into(), fit.expected_exponent),
                        ("max_residual".into(), fit.max_residual),
                    ],
                );
            }
        },
        Command::Solve => {
            let f = cfg.f_op.expect("validated");
            let g = cfg.g_op.expect("validated");
            let mut rhs = Field::first_mode(grid);
            rhs.scale(cfg.rhs_scale);
            let opts = SolveOptions::default();
            let outcomes = if cfg.lambdas.len() >= 5 {
                solvability_scan(&f, &g, &cfg.lambdas, &rhs, &opts)?
            } else {
                cfg.lambdas
                    .iter()
                    .map(|&l| relspec::experiments::solve_perturbed(&f, &g, l, &rhs, &opts))
                    .collect::<Result<Vec<_>, _>>()?
            };
            for o in outcomes {
                push(
                    &mut rows,
                    cfg.command.name(),
                    if o.converged { Status::Ok } else { Status::NoConverge },
                    vec![("row_lambda".into(), format!("{}", o.lambda))],
                    vec![
                        ("lambda".into(), o.lambda),
                        ("rhs_scale".into(), o.rhs_scale),
                        ("converged".into(), if o.converged { 1.0 } else { 0.0 }),
                        ("residual".into(), o.residual),
                        ("solution_norm".into(), o.solution_norm),
                    ],
                );
            }
        }
        Command::Probe => {
            let f = cfg.f_op.expect("validated");
            let g = cfg.g_op.expect("validated");
            let reports = condition_probe(
                &f,
                &g,
                grid,
                cfg.lambdas[0],
                cfg.samples,
                cfg.minimize.seed,
                &cfg.minimize,
            )?;
            for r in reports {
                let ok = r.violations == 0;
                failed |= !ok;
                push(
                    &mut rows,
                    cfg.command.name(),
                    Status::Ok,
                    vec![("condition".into(), r.condition_id.clone())],
                    vec![
                        ("samples_tested".into(), r.samples_tested as f64),
                        ("violations".into(), r.violations as f64),
                        ("worst_margin".into(), r.worst_margin),
                    ],
                );
            }
        }
    }

    Ok((rows, failed))
}

