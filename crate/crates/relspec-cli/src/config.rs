//! Strict key-value config parsing.
//!
//! The format is one `key = value` pair per line, `#` comments. Parsing is
//! strict on purpose: unknown keys are fatal, exponent constraints are
//! validated before any computation, and every applied default is echoed
//! back into the report so a row can be rerun bit-identically.

use std::collections::BTreeMap;

use relspec::{MinimizeOptions, OperatorSpec, QuotientSpec};

/// A config error carries a one-line diagnostic naming the offending key.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type CResult<T> = Result<T, ConfigError>;

/// Which experiment a run dispatches to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Baseline,
    Eig,
    Verify,
    Sweep,
    Solve,
    Probe,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Baseline => "baseline",
            Command::Eig => "eig",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
            Command::Solve => "solve",
            Command::Probe => "probe",
        }
    }
}

/// Verification targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyTarget {
    /// Substituted-diffusion identity against the Laplacian oracle.
    SubstitutionIdentity,
    /// Mixed-spectrum comparison margins.
    SpectrumComparison,
    /// Weighted-norm lower bound sampling.
    WeightedNormBound,
    /// Composed-operator eigenvalue bounds.
    ComposedBounds,
    /// Fully nonlinear quotient against π/L.
    FullyNonlinear,
}

/// Sweep flavors.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Refine,
    Radius,
}

/// Output format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

/// Fully validated run configuration with defaults applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub length: f64,
    pub n: usize,
    pub quotient: Option<QuotientSpec>,
    /// Effective `p` (defaults to 2 where needed).
    pub p: f64,
    pub p0: Option<f64>,
    pub p1: Option<f64>,
    pub f_op: Option<OperatorSpec>,
    pub g_op: Option<OperatorSpec>,
    pub target: Option<VerifyTarget>,
    pub sweep_kind: Option<SweepKind>,
    pub ns: Vec<usize>,
    pub radii: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub rhs_scale: f64,
    pub samples: usize,
    pub minimize: MinimizeOptions,
    pub out: Option<String>,
    pub format: Format,
    /// Every key-value pair that defines the run, defaults included, in a
    /// fixed order; echoed verbatim into the report.
    pub echo: Vec<(String, String)>,
}

fn err(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// Raw `key = value` pairs with duplicate detection.
fn parse_pairs(text: &str) -> CResult<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(err(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let key = key.trim().to_ascii_lowercase();
        let value = value.trim().to_string();
        if key.is_empty() || value.is_empty() {
            return Err(err(format!("line {}: empty key or value", lineno + 1)));
        }
        if map.insert(key.clone(), value).is_some() {
            return Err(err(format!("duplicate key `{key}`")));
        }
    }
    Ok(map)
}

struct Keys {
    map: BTreeMap<String, String>,
    used: Vec<String>,
}

impl Keys {
    fn take(&mut self, key: &str) -> Option<String> {
        let v = self.map.remove(key);
        if v.is_some() {
            self.used.push(key.to_string());
        }
        v
    }

    fn f64_opt(&mut self, key: &str) -> CResult<Option<f64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| err(format!("key `{key}`: expected a number, got `{v}`"))),
        }
    }

    fn usize_opt(&mut self, key: &str) -> CResult<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| err(format!("key `{key}`: expected a nonnegative integer, got `{v}`"))),
        }
    }

    fn u64_opt(&mut self, key: &str) -> CResult<Option<u64>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<u64>()
                .map(Some)
                .map_err(|_| err(format!("key `{key}`: expected an unsigned integer, got `{v}`"))),
        }
    }

    fn list_f64(&mut self, key: &str) -> CResult<Vec<f64>> {
        match self.take(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split([',', ';'])
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| err(format!("key `{key}`: bad number `{}`", s.trim())))
                })
                .collect(),
        }
    }

    fn list_usize(&mut self, key: &str) -> CResult<Vec<usize>> {
        match self.take(key) {
            None => Ok(Vec::new()),
            Some(v) => v
                .split([',', ';'])
                .map(|s| {
                    s.trim()
                        .parse::<usize>()
                        .map_err(|_| err(format!("key `{key}`: bad integer `{}`", s.trim())))
                })
                .collect(),
        }
    }
}

fn operator_from(keys: &mut Keys, prefix: &str) -> CResult<Option<OperatorSpec>> {
    let Some(kind) = keys.take(prefix) else {
        return Ok(None);
    };
    let k = |suffix: &str| format!("{prefix}_{suffix}");
    let take_required = |keys: &mut Keys, name: String| -> CResult<f64> {
        keys.f64_opt(&name)?
            .ok_or_else(|| err(format!("operator `{kind}` requires key `{name}`")))
    };
    let spec = match kind.to_ascii_lowercase().as_str() {
        "plap" => OperatorSpec::p_laplacian(take_required(keys, k("p"))?),
        "wdiff" => OperatorSpec::weighted_diffusion(take_required(keys, k("p"))?),
        "pgw" => {
            let p0 = take_required(keys, k("p0"))?;
            let p1 = take_required(keys, k("p1"))?;
            OperatorSpec::power_grad_weight(p0, p1)
        }
        "power" => OperatorSpec::power(take_required(keys, k("p0"))?),
        "gradpower" => OperatorSpec::grad_power(take_required(keys, k("mu"))?),
        "bipower" => OperatorSpec::bi_power(take_required(keys, k("p"))?),
        other => {
            return Err(err(format!(
                "key `{prefix}`: unknown operator `{other}` (expected plap, wdiff, pgw, power, gradpower, bipower)"
            )))
        }
    };
    spec.map(Some)
        .map_err(|e| err(format!("key `{prefix}`: {e}")))
}

fn quotient_from(
    keys: &mut Keys,
    p: Option<f64>,
    p0: Option<f64>,
    p1: Option<f64>,
    f_op: Option<OperatorSpec>,
    g_op: Option<OperatorSpec>,
) -> CResult<Option<(QuotientSpec, String)>> {
    let Some(name) = keys.take("quotient") else {
        return Ok(None);
    };
    let name = name.to_ascii_lowercase();
    // `p` defaults to 2 (the linear reduction) where a tag needs it
    let need_p = || -> CResult<f64> { Ok(p.unwrap_or(2.0)) };
    let need_pair = || -> CResult<(f64, f64)> {
        match (p0, p1) {
            (Some(a), Some(b)) => Ok((a, b)),
            _ => Err(err(format!("quotient `{name}` requires keys `p0` and `p1`"))),
        }
    };
    let spec = match name.as_str() {
        "qpl" => QuotientSpec::plap_ratio(need_p()?),
        "q33a" => {
            let (a, b) = need_pair()?;
            QuotientSpec::grad_pow_mixed(a, b)
        }
        "q34" => {
            let (a, b) = need_pair()?;
            QuotientSpec::grad_pow_mixed_root(a, b)
        }
        "q32" => QuotientSpec::substituted_laplace(need_p()?),
        "q44" => QuotientSpec::lap_over_grad(need_p()?),
        "q45" => QuotientSpec::lap_pow_over_weighted(need_p()?),
        "qr3" => QuotientSpec::shifted_lap_ratio(need_p()?),
        "q4ex1" => QuotientSpec::composed_power(need_p()?),
        "q25" => {
            let (Some(f), Some(g)) = (f_op, g_op) else {
                return Err(err("quotient `q25` requires the operator keys `f` and `g`"));
            };
            QuotientSpec::relative(f, g)
        }
        other => {
            return Err(err(format!(
                "key `quotient`: unknown tag `{other}` (expected q25, q33a, q34, qpl, q32, q44, q45, qr3, q4ex1)"
            )))
        }
    };
    spec.map(|s| Some((s, name)))
        .map_err(|e| err(format!("key `quotient`: {e}")))
}

/// Parse and validate a config document.
pub fn parse_config(text: &str) -> CResult<RunConfig> {
    let map = parse_pairs(text)?;
    let mut keys = Keys {
        map,
        used: Vec::new(),
    };

    let command = match keys
        .take("command")
        .ok_or_else(|| err("missing required key `command`"))?
        .to_ascii_lowercase()
        .as_str()
    {
        "baseline" => Command::Baseline,
        "eig" => Command::Eig,
        "verify" => Command::Verify,
        "sweep" => Command::Sweep,
        "solve" => Command::Solve,
        "probe" => Command::Probe,
        other => {
            return Err(err(format!(
                "key `command`: unknown command `{other}` (expected baseline, eig, verify, sweep, solve, probe)"
            )))
        }
    };

    let length = keys.f64_opt("length")?.unwrap_or(1.0);
    let n = keys.usize_opt("n")?.unwrap_or(199);

    let p_raw = keys.f64_opt("p")?;
    let p0 = keys.f64_opt("p0")?;
    let p1 = keys.f64_opt("p1")?;
    // `p` is redundant when (p0, p1) are given, but must then be consistent
    if let (Some(p), Some(a), Some(b)) = (p_raw, p0, p1) {
        if (a + b - p).abs() > 1e-12 {
            return Err(err(format!(
                "constraint violation `p0+p1=p`: {a} + {b} != {p}"
            )));
        }
    }
    let p = p_raw.or_else(|| p0.zip(p1).map(|(a, b)| a + b)).unwrap_or(2.0);

    let f_op = operator_from(&mut keys, "f")?;
    let g_op = operator_from(&mut keys, "g")?;
    let quotient = quotient_from(&mut keys, Some(p), p0, p1, f_op, g_op)?;
    let (quotient, quotient_name): (Option<QuotientSpec>, Option<String>) = match quotient {
        Some((q, name)) => (Some(q), Some(name)),
        None => (None, None),
    };

    let target = match keys.take("target") {
        None => None,
        Some(t) => Some(match t.to_ascii_lowercase().as_str() {
            "prop31" => VerifyTarget::SubstitutionIdentity,
            "ineq33" => VerifyTarget::SpectrumComparison,
            "ineq46" => VerifyTarget::WeightedNormBound,
            "ex1" => VerifyTarget::ComposedBounds,
            "eq44" => VerifyTarget::FullyNonlinear,
            other => {
                return Err(err(format!(
                    "key `target`: unknown target `{other}` (expected prop31, ineq33, ineq46, ex1, eq44)"
                )))
            }
        }),
    };

    let sweep_kind = match keys.take("kind") {
        None => None,
        Some(k) => Some(match k.to_ascii_lowercase().as_str() {
            "refine" => SweepKind::Refine,
            "radius" => SweepKind::Radius,
            other => {
                return Err(err(format!(
                    "key `kind`: unknown sweep kind `{other}` (expected refine, radius)"
                )))
            }
        }),
    };

    let ns = keys.list_usize("ns")?;
    let radii = keys.list_f64("radii")?;
    let mut lambdas = keys.list_f64("lambdas")?;
    if let Some(single) = keys.f64_opt("lambda")? {
        if !lambdas.is_empty() {
            return Err(err("give either `lambda` or `lambdas`, not both"));
        }
        lambdas.push(single);
    }
    let rhs_scale = keys.f64_opt("rhs_scale")?.unwrap_or(0.1);
    let samples = keys.usize_opt("samples")?.unwrap_or(1000);

    let defaults = MinimizeOptions::default();
    let minimize = MinimizeOptions {
        max_iter: keys.usize_opt("max_iter")?.unwrap_or(defaults.max_iter),
        tol_rel: keys.f64_opt("tol_rel")?.unwrap_or(defaults.tol_rel),
        tol_grad: keys.f64_opt("tol_grad")?.unwrap_or(defaults.tol_grad),
        starts: keys.usize_opt("starts")?.unwrap_or(defaults.starts),
        seed: keys.u64_opt("seed")?.unwrap_or(defaults.seed),
        step_init: keys.f64_opt("step_init")?.unwrap_or(defaults.step_init),
        armijo_c: keys.f64_opt("armijo_c")?.unwrap_or(defaults.armijo_c),
        backtrack: keys.f64_opt("backtrack")?.unwrap_or(defaults.backtrack),
        eps_reg: keys.f64_opt("eps_reg")?.unwrap_or(defaults.eps_reg),
    };

    let out = keys.take("out");
    let format = match keys.take("format") {
        None => Format::Csv,
        Some(f) => match f.to_ascii_lowercase().as_str() {
            "csv" => Format::Csv,
            "json" => Format::Json,
            other => {
                return Err(err(format!(
                    "key `format`: expected csv or json, got `{other}`"
                )))
            }
        },
    };

    if let Some(unknown) = keys.map.keys().next() {
        return Err(err(format!("unknown key `{unknown}`")));
    }

    // per-command requirements
    match command {
        Command::Baseline => {}
        Command::Eig => {
            if quotient.is_none() {
                return Err(err("command `eig` requires a `quotient`"));
            }
        }
        Command::Verify => match target {
            None => return Err(err("command `verify` requires a `target`")),
            Some(VerifyTarget::SpectrumComparison) => {
                if p0.is_none() || p1.is_none() {
                    return Err(err("target `ineq33` requires keys `p0` and `p1`"));
                }
            }
            Some(_) => {}
        },
        Command::Sweep => match sweep_kind {
            None => return Err(err("command `sweep` requires `kind = refine|radius`")),
            Some(SweepKind::Refine) => {
                if quotient.is_none() {
                    return Err(err("sweep kind `refine` requires a `quotient`"));
                }
                if ns.len() < 3 {
                    return Err(err("sweep kind `refine` requires `ns` with at least 3 entries"));
                }
            }
            Some(SweepKind::Radius) => {
                if f_op.is_none() || g_op.is_none() {
                    return Err(err("sweep kind `radius` requires operators `f` and `g`"));
                }
                if radii.len() < 4 {
                    return Err(err("sweep kind `radius` requires `radii` with at least 4 entries"));
                }
            }
        },
        Command::Solve => {
            if f_op.is_none() || g_op.is_none() {
                return Err(err("command `solve` requires operators `f` and `g`"));
            }
            if lambdas.is_empty() {
                return Err(err("command `solve` requires `lambda` or `lambdas`"));
            }
        }
        Command::Probe => {
            if f_op.is_none() || g_op.is_none() {
                return Err(err("command `probe` requires operators `f` and `g`"));
            }
            if lambdas.len() != 1 {
                return Err(err("command `probe` requires a single `lambda`"));
            }
        }
    }

    // echo the full effective parameter set in a fixed order (`command` is
    // already a fixed report column)
    let mut echo: Vec<(String, String)> = Vec::new();
    let mut push = |k: &str, v: String| echo.push((k.to_string(), v));
    push("length", format!("{length}"));
    push("n", format!("{n}"));
    if let Some(name) = &quotient_name {
        push("quotient", name.clone());
        if let Some(q) = &quotient {
            for (k, v) in quotient_echo(q) {
                push(k, v);
            }
        }
    } else if command == Command::Verify {
        push("p", format!("{p}"));
        if let Some(a) = p0 {
            push("p0", format!("{a}"));
        }
        if let Some(b) = p1 {
            push("p1", format!("{b}"));
        }
    }
    if let Some(op) = &f_op {
        for (k, v) in operator_echo("f", op) {
            push(&k, v);
        }
    }
    if let Some(op) = &g_op {
        for (k, v) in operator_echo("g", op) {
            push(&k, v);
        }
    }
    if let Some(t) = target {
        push(
            "target",
            match t {
                VerifyTarget::SubstitutionIdentity => "prop31",
                VerifyTarget::SpectrumComparison => "ineq33",
                VerifyTarget::WeightedNormBound => "ineq46",
                VerifyTarget::ComposedBounds => "ex1",
                VerifyTarget::FullyNonlinear => "eq44",
            }
            .to_string(),
        );
    }
    if let Some(k) = sweep_kind {
        push(
            "kind",
            match k {
                SweepKind::Refine => "refine",
                SweepKind::Radius => "radius",
            }
            .to_string(),
        );
    }
    if !ns.is_empty() {
        push(
            "ns",
            ns.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
        );
    }
    if !radii.is_empty() {
        push(
            "radii",
            radii.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
        );
    }
    if !lambdas.is_empty() {
        push(
            "lambdas",
            lambdas.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
        );
    }
    if command == Command::Solve || command == Command::Probe {
        push("rhs_scale", format!("{rhs_scale}"));
    }
    if command == Command::Probe || target == Some(VerifyTarget::WeightedNormBound) {
        push("samples", format!("{samples}"));
    }
    push("max_iter", format!("{}", minimize.max_iter));
    push("tol_rel", format!("{}", minimize.tol_rel));
    push("tol_grad", format!("{}", minimize.tol_grad));
    push("starts", format!("{}", minimize.starts));
    push("seed", format!("{}", minimize.seed));
    push("step_init", format!("{}", minimize.step_init));
    push("armijo_c", format!("{}", minimize.armijo_c));
    push("backtrack", format!("{}", minimize.backtrack));
    push("eps_reg", format!("{}", minimize.eps_reg));

    Ok(RunConfig {
        command,
        length,
        n,
        quotient,
        p,
        p0,
        p1,
        f_op,
        g_op,
        target,
        sweep_kind,
        ns,
        radii,
        lambdas,
        rhs_scale,
        samples,
        minimize,
        out,
        format,
        echo,
    })
}

fn quotient_echo(q: &QuotientSpec) -> Vec<(&'static str, String)> {
    use relspec::quotient::QuotientTag as T;
    match q.tag() {
        T::GradPowMixed { p0, p1 } | T::GradPowMixedRoot { p0, p1 } => vec![
            ("p0", format!("{p0}")),
            ("p1", format!("{p1}")),
        ],
        T::PLapRatio { p }
        | T::SubstitutedLaplace { p }
        | T::LapOverGrad { p }
        | T::LapPowOverWeighted { p }
        | T::ShiftedLapRatio { p }
        | T::ComposedPower { p } => vec![("p", format!("{p}"))],
        T::Relative { .. } => vec![],
    }
}

fn operator_echo(prefix: &str, op: &OperatorSpec) -> Vec<(String, String)> {
    use relspec::operators::OperatorKind as K;
    let k = |s: &str| format!("{prefix}_{s}");
    match op.kind() {
        K::PLaplacian { p } => vec![(prefix.into(), "plap".into()), (k("p"), format!("{p}"))],
        K::WeightedDiffusion { p } => {
            vec![(prefix.into(), "wdiff".into()), (k("p"), format!("{p}"))]
        }
        K::PowerGradWeight { p0, p1 } => vec![
            (prefix.into(), "pgw".into()),
            (k("p0"), format!("{p0}")),
            (k("p1"), format!("{p1}")),
        ],
        K::Power { p0 } => vec![(prefix.into(), "power".into()), (k("p0"), format!("{p0}"))],
        K::GradPower { mu } => vec![
            (prefix.into(), "gradpower".into()),
            (k("mu"), format!("{mu}")),
        ],
        K::BiPower { p } => vec![(prefix.into(), "bipower".into()), (k("p"), format!("{p}"))],
    }
}
