//! Generalized Rayleigh quotients with values and analytic gradients.
//!
//! Every catalog entry is the ratio of two functionals that are positively
//! homogeneous of the same degree in `u`, so the quotient itself is
//! 0-homogeneous: its value depends only on the direction of `u`, never the
//! norm, and the infimum over any sphere equals the infimum over all nonzero
//! fields. Gradients are the exact derivatives of the discrete functionals
//! (quotient rule), with an ε floor applied only inside derivative kernels
//! whose exponents drop below one.

use crate::grid::{diff_raw, midpoints_raw, second_diff_raw};
use crate::operators::{abs_pow_reg, sgn_pow, OperatorKind, OperatorSpec};
use crate::{Error, Field, Result};

/// Default ε for singular derivative kernels.
pub const DEFAULT_EPS_REG: f64 = 1e-12;

/// Floor below which a quotient denominator is treated as degenerate.
const DEN_FLOOR: f64 = 1e-300;

/// Result of comparing the analytic gradient against central differences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    /// Maximum relative error over coordinates with non-negligible analytic
    /// component.
    pub max_rel_err: f64,
    /// Coordinate where the maximum was attained.
    pub worst_index: usize,
}

/// The quotient catalog.
#[derive(Debug, Clone, PartialEq)]
pub enum QuotientTag {
    /// `⟨F(u), u⟩ / ⟨G(u), u⟩` for two catalog operators of equal degree.
    Relative { f: OperatorSpec, g: OperatorSpec },
    /// `‖∇u‖_p^p / ∫ |u|^{p₀} |∇u|^{p₁}` with `p = p₀ + p₁`.
    GradPowMixed { p0: f64, p1: f64 },
    /// `‖∇u‖_p · [∫ |u|^{p₀} |∇u|^{p₁}]^{−1/p}`, the p-th root of the above.
    GradPowMixedRoot { p0: f64, p1: f64 },
    /// `‖∇u‖_p / ‖u‖_p`, the p-Laplacian ratio.
    PLapRatio { p: f64 },
    /// `(4/p²) ‖∇v‖₂² / ‖v‖₂²` with the substitution `v = |u|^{(p−2)/2} u`.
    SubstitutedLaplace { p: f64 },
    /// `(p−1) ‖Δu‖_p / ‖∇u‖_p`.
    LapOverGrad { p: f64 },
    /// `(p−1)⁻¹ ‖Δu‖_p^p / ∫ |u|^{p−2} |∇u|²`.
    LapPowOverWeighted { p: f64 },
    /// `‖Δu‖_{p−1} / ‖u‖_{p−1}`.
    ShiftedLapRatio { p: f64 },
    /// `⟨f(Lu), Lu⟩ / ⟨g(u), Lu⟩` with `L = −Δ`, `f(t) = g(t) = |t|^{p−2} t`.
    ComposedPower { p: f64 },
}

/// A validated quotient: tag plus the canonical prefactor.
#[derive(Debug, Clone, PartialEq)]
pub struct QuotientSpec {
    tag: QuotientTag,
    prefactor: f64,
}

impl QuotientSpec {
    /// Generic relative quotient `⟨F(u), u⟩ / ⟨G(u), u⟩`; the two operators
    /// must share the homogeneity degree so the quotient is 0-homogeneous.
    pub fn relative(f: OperatorSpec, g: OperatorSpec) -> Result<Self> {
        let (df, dg) = (f.homogeneity_degree(), g.homogeneity_degree());
        if (df - dg).abs() > 1e-12 {
            return Err(Error::InvalidSpec(format!(
                "relative quotient needs matched homogeneity degrees, got {df} vs {dg}"
            )));
        }
        Ok(Self {
            tag: QuotientTag::Relative { f, g },
            prefactor: 1.0,
        })
    }

    /// `‖∇u‖_p^p / ∫ |u|^{p₀} |∇u|^{p₁}`.
    pub fn grad_pow_mixed(p0: f64, p1: f64) -> Result<Self> {
        check_mixed_exponents(p0, p1)?;
        Ok(Self {
            tag: QuotientTag::GradPowMixed { p0, p1 },
            prefactor: 1.0,
        })
    }

    /// `‖∇u‖_p · [∫ |u|^{p₀} |∇u|^{p₁}]^{−1/p}`.
    pub fn grad_pow_mixed_root(p0: f64, p1: f64) -> Result<Self> {
        check_mixed_exponents(p0, p1)?;
        Ok(Self {
            tag: QuotientTag::GradPowMixedRoot { p0, p1 },
            prefactor: 1.0,
        })
    }

    /// `‖∇u‖_p / ‖u‖_p`.
    pub fn plap_ratio(p: f64) -> Result<Self> {
        if !(p >= 1.0) {
            return Err(Error::NormExponent(p));
        }
        Ok(Self {
            tag: QuotientTag::PLapRatio { p },
            prefactor: 1.0,
        })
    }

    /// `(4/p²) ‖∇v‖₂² / ‖v‖₂²`, `v = |u|^{(p−2)/2} u`, `p ≥ 2`.
    pub fn substituted_laplace(p: f64) -> Result<Self> {
        check_p_at_least_two(p)?;
        Ok(Self {
            tag: QuotientTag::SubstitutedLaplace { p },
            prefactor: 4.0 / (p * p),
        })
    }

    /// `(p−1) ‖Δu‖_p / ‖∇u‖_p`, `p ≥ 2`.
    pub fn lap_over_grad(p: f64) -> Result<Self> {
        check_p_at_least_two(p)?;
        Ok(Self {
            tag: QuotientTag::LapOverGrad { p },
            prefactor: p - 1.0,
        })
    }

    /// `(p−1)⁻¹ ‖Δu‖_p^p / ∫ |u|^{p−2} |∇u|²`, `p ≥ 2`.
    pub fn lap_pow_over_weighted(p: f64) -> Result<Self> {
        check_p_at_least_two(p)?;
        Ok(Self {
            tag: QuotientTag::LapPowOverWeighted { p },
            prefactor: 1.0 / (p - 1.0),
        })
    }

    /// `‖Δu‖_{p−1} / ‖u‖_{p−1}`, `p ≥ 2`.
    pub fn shifted_lap_ratio(p: f64) -> Result<Self> {
        check_p_at_least_two(p)?;
        Ok(Self {
            tag: QuotientTag::ShiftedLapRatio { p },
            prefactor: 1.0,
        })
    }

    /// `⟨f(Lu), Lu⟩ / ⟨g(u), Lu⟩` with `L = −Δ` and `f = g = |t|^{p−2} t`,
    /// `p ≥ 2`.
    pub fn composed_power(p: f64) -> Result<Self> {
        check_p_at_least_two(p)?;
        Ok(Self {
            tag: QuotientTag::ComposedPower { p },
            prefactor: 1.0,
        })
    }

    /// The tag.
    pub fn tag(&self) -> &QuotientTag {
        &self.tag
    }

    /// The canonical prefactor multiplying the raw ratio.
    pub fn prefactor(&self) -> f64 {
        self.prefactor
    }

    /// Quotient value at `u`.
    pub fn evaluate(&self, u: &Field) -> Result<f64> {
        Ok(self.eval_impl(u, DEFAULT_EPS_REG, false)?.0)
    }

    /// Analytic gradient (per-coordinate partial derivatives of
    /// [`Self::evaluate`]) with the default ε floor.
    pub fn gradient(&self, u: &Field) -> Result<Field> {
        self.gradient_with_eps(u, DEFAULT_EPS_REG)
    }

    /// Analytic gradient with a caller-provided ε floor for singular
    /// derivative kernels.
    pub fn gradient_with_eps(&self, u: &Field, eps: f64) -> Result<Field> {
        let (_, grad) = self.eval_impl(u, eps, true)?;
        Field::new(u.grid(), grad.expect("gradient requested"))
    }

    /// Compare the analytic gradient against central finite differences with
    /// step `1e-6 · (1 + |u_i|)` per coordinate. Coordinates whose analytic
    /// component is below `1e-10` in magnitude are skipped.
    pub fn fd_check(&self, u: &Field) -> Result<GradCheckReport> {
        let analytic = self.gradient(u)?;
        let mut max_rel_err = 0.0;
        let mut worst_index = 0;
        let mut probe = u.clone();
        for i in 0..u.grid().n() {
            let a = analytic.values()[i];
            if a.abs() <= 1e-10 {
                continue;
            }
            let step = 1e-6 * (1.0 + u.values()[i].abs());
            let orig = u.values()[i];
            probe.values_mut()[i] = orig + step;
            let fp = self.evaluate(&probe)?;
            probe.values_mut()[i] = orig - step;
            let fm = self.evaluate(&probe)?;
            probe.values_mut()[i] = orig;
            let numeric = (fp - fm) / (2.0 * step);
            let rel = (numeric - a).abs() / a.abs();
            if rel > max_rel_err {
                max_rel_err = rel;
                worst_index = i;
            }
        }
        Ok(GradCheckReport {
            max_rel_err,
            worst_index,
        })
    }

    /// Shared value/gradient path. Returns the full quotient (prefactor
    /// included) and, when requested, its euclidean gradient.
    fn eval_impl(&self, u: &Field, eps: f64, want_grad: bool) -> Result<(f64, Option<Vec<f64>>)> {
        if u.is_zero() {
            return Err(Error::ZeroField);
        }
        match &self.tag {
            QuotientTag::GradPowMixedRoot { p0, p1 } => {
                let p = p0 + p1;
                let inner = QuotientSpec {
                    tag: QuotientTag::GradPowMixed { p0: *p0, p1: *p1 },
                    prefactor: 1.0,
                };
                let (v33, g33) = inner.eval_impl(u, eps, want_grad)?;
                let value = v33.powf(1.0 / p);
                if !value.is_finite() {
                    return Err(Error::NonFinite("quotient value"));
                }
                let grad = g33.map(|g| {
                    let scale = value / (p * v33);
                    g.into_iter().map(|x| scale * x).collect()
                });
                Ok((value, grad))
            }
            QuotientTag::SubstitutedLaplace { p } => {
                let h = u.grid().spacing();
                let half_p = 0.5 * p;
                let v: Vec<f64> = u.values().iter().map(|&t| sgn_pow(t, half_p)).collect();
                let (num, gnum) = grad_norm_pow_parts(&v, h, 2.0, eps, want_grad);
                let (den, gden) = node_pow_parts(&v, h, 2.0, eps, want_grad);
                let (value, grad_v) =
                    finish_ratio(self.prefactor, num, den, gnum, gden)?;
                let grad = grad_v.map(|gv| {
                    gv.into_iter()
                        .zip(u.values())
                        .map(|(g, &t)| g * half_p * t.abs().powf(half_p - 1.0))
                        .collect()
                });
                Ok((value, grad))
            }
            _ => {
                let (num, den, gnum, gden) = self.parts(u, eps, want_grad)?;
                finish_ratio(self.prefactor, num, den, gnum, gden)
            }
        }
    }

    /// Raw numerator/denominator (no prefactor) for the plain-ratio tags.
    #[allow(clippy::type_complexity)]
    fn parts(
        &self,
        u: &Field,
        eps: f64,
        want_grad: bool,
    ) -> Result<(f64, f64, Option<Vec<f64>>, Option<Vec<f64>>)> {
        let h = u.grid().spacing();
        let vals = u.values();
        let (num, den, gnum, gden) = match &self.tag {
            QuotientTag::Relative { f, g } => {
                let (n, gn) = operator_pairing_parts(f, vals, h, eps, want_grad);
                let (d, gd) = operator_pairing_parts(g, vals, h, eps, want_grad);
                (n, d, gn, gd)
            }
            QuotientTag::GradPowMixed { p0, p1 } => {
                let p = p0 + p1;
                let (n, gn) = grad_norm_pow_parts(vals, h, p, eps, want_grad);
                let (d, gd) = mixed_integral_parts(vals, h, *p0, *p1, eps, want_grad);
                (n, d, gn, gd)
            }
            QuotientTag::PLapRatio { p } => {
                let (n, gn) = grad_norm_parts(vals, h, *p, eps, want_grad);
                let (d, gd) = node_norm_parts(vals, h, *p, eps, want_grad);
                (n, d, gn, gd)
            }
            QuotientTag::LapOverGrad { p } => {
                let (n, gn) = lap_norm_parts(vals, h, *p, eps, want_grad);
                let (d, gd) = grad_norm_parts(vals, h, *p, eps, want_grad);
                (n, d, gn, gd)
            }
            QuotientTag::LapPowOverWeighted { p } => {
                let (n, gn) = lap_pow_parts(vals, h, *p, eps, want_grad);
                let (d, gd) = mixed_integral_parts(vals, h, p - 2.0, 2.0, eps, want_grad);
                (n, d, gn, gd)
            }
            QuotientTag::ShiftedLapRatio { p } => {
                let q = p - 1.0;
                let (n, gn) = lap_norm_parts(vals, h, q, eps, want_grad);
                let (d, gd) = node_norm_parts(vals, h, q, eps, want_grad);
                (n, d, gn, gd)
            }
            QuotientTag::ComposedPower { p } => {
                let (n, gn) = lap_pow_parts(vals, h, *p, eps, want_grad);
                let (d, gd) = composed_pairing_parts(vals, h, *p, eps, want_grad);
                (n, d, gn, gd)
            }
            QuotientTag::GradPowMixedRoot { .. } | QuotientTag::SubstitutedLaplace { .. } => {
                unreachable!("handled in eval_impl")
            }
        };
        Ok((num, den, gnum, gden))
    }
}

fn check_mixed_exponents(p0: f64, p1: f64) -> Result<()> {
    if !(p0 >= 1.0) || !(p1 >= 0.0) || !(p0 + p1 >= 2.0) {
        return Err(Error::InvalidSpec(format!(
            "mixed quotient requires p0 >= 1, p1 >= 0, p0 + p1 >= 2; got ({p0}, {p1})"
        )));
    }
    Ok(())
}

fn check_p_at_least_two(p: f64) -> Result<()> {
    if !(p >= 2.0) {
        return Err(Error::InvalidSpec(format!("quotient requires p >= 2, got {p}")));
    }
    Ok(())
}

/// Assemble `pre · num / den` and its gradient from the parts.
fn finish_ratio(
    pre: f64,
    num: f64,
    den: f64,
    gnum: Option<Vec<f64>>,
    gden: Option<Vec<f64>>,
) -> Result<(f64, Option<Vec<f64>>)> {
    if den.abs() < DEN_FLOOR {
        return Err(Error::DegenerateDenominator(den));
    }
    let ratio = num / den;
    let value = pre * ratio;
    if !value.is_finite() {
        return Err(Error::NonFinite("quotient value"));
    }
    let grad = match (gnum, gden) {
        (Some(gn), Some(gd)) => {
            let g: Vec<f64> = gn
                .into_iter()
                .zip(gd)
                .map(|(a, b)| pre * (a - ratio * b) / den)
                .collect();
            if g.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite("quotient gradient"));
            }
            Some(g)
        }
        _ => None,
    };
    Ok((value, grad))
}

/// Derivative of `|t|^a` with respect to `t`; exponents below one are
/// ε-regularized (`|t|` near zero is the singular case).
fn dabs_pow(t: f64, a: f64, eps: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if a >= 1.0 {
        a * sgn_pow(t, a - 1.0)
    } else {
        a * t * (t * t + eps * eps).powf(0.5 * a - 1.0)
    }
}

/// Derivative of `sign(t)|t|^a` with respect to `t` (an even function of t).
fn dsgn_pow(t: f64, a: f64, eps: f64) -> f64 {
    if a == 1.0 {
        1.0
    } else if a >= 1.0 {
        a * t.abs().powf(a - 1.0)
    } else {
        a * (t * t + eps * eps).powf(0.5 * (a - 1.0))
    }
}

/// `h Σ_c |g_c|^p` over the cells, with gradient.
fn grad_norm_pow_parts(
    vals: &[f64],
    h: f64,
    p: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let g = diff_raw(vals, h);
    let value = h * g.iter().map(|t| t.abs().powf(p)).sum::<f64>();
    let grad = want_grad.then(|| {
        let kernel: Vec<f64> = g.iter().map(|&t| dabs_pow(t, p, eps)).collect();
        (0..vals.len()).map(|i| kernel[i] - kernel[i + 1]).collect()
    });
    (value, grad)
}

/// `(h Σ_c |g_c|^p)^{1/p}`, with gradient.
fn grad_norm_parts(
    vals: &[f64],
    h: f64,
    p: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let (pow, gpow) = grad_norm_pow_parts(vals, h, p, eps, want_grad);
    chain_root(pow, gpow, p)
}

/// `h Σ_i |u_i|^p` at the nodes, with gradient.
fn node_pow_parts(
    vals: &[f64],
    h: f64,
    p: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let value = h * vals.iter().map(|t| t.abs().powf(p)).sum::<f64>();
    let grad = want_grad.then(|| vals.iter().map(|&t| h * dabs_pow(t, p, eps)).collect());
    (value, grad)
}

/// `(h Σ_i |u_i|^p)^{1/p}`, with gradient.
fn node_norm_parts(
    vals: &[f64],
    h: f64,
    p: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let (pow, gpow) = node_pow_parts(vals, h, p, eps, want_grad);
    chain_root(pow, gpow, p)
}

/// `h Σ_j |(Δu)_j|^p` at the nodes, with gradient (the discrete Laplacian is
/// symmetric, so the chain rule is another second difference).
fn lap_pow_parts(
    vals: &[f64],
    h: f64,
    p: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let m = second_diff_raw(vals, h);
    let value = h * m.iter().map(|t| t.abs().powf(p)).sum::<f64>();
    let grad = want_grad.then(|| {
        let kernel: Vec<f64> = m.iter().map(|&t| dabs_pow(t, p, eps)).collect();
        second_diff_raw(&kernel, h).iter().map(|d| h * d).collect()
    });
    (value, grad)
}

/// `(h Σ_j |(Δu)_j|^p)^{1/p}`, with gradient.
fn lap_norm_parts(
    vals: &[f64],
    h: f64,
    p: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let (pow, gpow) = lap_pow_parts(vals, h, p, eps, want_grad);
    chain_root(pow, gpow, p)
}

fn chain_root(pow: f64, gpow: Option<Vec<f64>>, p: f64) -> (f64, Option<Vec<f64>>) {
    let value = pow.powf(1.0 / p);
    let grad = gpow.map(|g| {
        if pow == 0.0 {
            vec![0.0; g.len()]
        } else {
            let scale = value / (p * pow);
            g.into_iter().map(|x| scale * x).collect()
        }
    });
    (value, grad)
}

/// `∫ |u|^a |∇u|^b` with the mixed-collocation rule: for `b > 0` and `a > 0`
/// both factors live on the cells (`u` at midpoints); `b = 0` degenerates to
/// the node rectangle rule, `a = 0` to the pure cell rule.
fn mixed_integral_parts(
    vals: &[f64],
    h: f64,
    a: f64,
    b: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    if b == 0.0 {
        return node_pow_parts(vals, h, a, eps, want_grad);
    }
    if a == 0.0 {
        let g = diff_raw(vals, h);
        let value = h * g.iter().map(|t| t.abs().powf(b)).sum::<f64>();
        let grad = want_grad.then(|| {
            let kernel: Vec<f64> = g.iter().map(|&t| dabs_pow(t, b, eps)).collect();
            (0..vals.len()).map(|i| kernel[i] - kernel[i + 1]).collect()
        });
        return (value, grad);
    }
    let n = vals.len();
    let g = diff_raw(vals, h);
    let um = midpoints_raw(vals);
    let av: Vec<f64> = um.iter().map(|t| t.abs().powf(a)).collect();
    let bv: Vec<f64> = g.iter().map(|t| t.abs().powf(b)).collect();
    let value = h * av.iter().zip(&bv).map(|(x, y)| x * y).sum::<f64>();
    let grad = want_grad.then(|| {
        let da: Vec<f64> = um.iter().map(|&t| dabs_pow(t, a, eps)).collect();
        let db: Vec<f64> = g.iter().map(|&t| dabs_pow(t, b, eps)).collect();
        (0..n)
            .map(|i| {
                0.5 * h * (da[i] * bv[i] + da[i + 1] * bv[i + 1])
                    + (av[i] * db[i] - av[i + 1] * db[i + 1])
            })
            .collect()
    });
    (value, grad)
}

/// `⟨f(Lu), u⟩`-style pairing `h Σ sign(u)|u|^{p−1} (−Δu)` for the composed
/// quotient denominator, with gradient.
fn composed_pairing_parts(
    vals: &[f64],
    h: f64,
    p: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let m = second_diff_raw(vals, h);
    let s: Vec<f64> = vals.iter().map(|&t| sgn_pow(t, p - 1.0)).collect();
    let value = -h * s.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>();
    let grad = want_grad.then(|| {
        let dds = second_diff_raw(&s, h);
        (0..vals.len())
            .map(|i| -h * (dsgn_pow(vals[i], p - 1.0, eps) * m[i] + dds[i]))
            .collect()
    });
    (value, grad)
}

/// `⟨K(u), u⟩` for a catalog operator, written directly as a functional of
/// `u` (divergence-form kinds reduce exactly by summation by parts).
fn operator_pairing_parts(
    op: &OperatorSpec,
    vals: &[f64],
    h: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    match op.kind() {
        OperatorKind::PLaplacian { p } => grad_norm_pow_parts(vals, h, p, eps, want_grad),
        OperatorKind::WeightedDiffusion { p } => {
            mixed_integral_parts(vals, h, p - 2.0, 2.0, eps, want_grad)
        }
        OperatorKind::Power { p0 } => node_pow_parts(vals, h, p0, eps, want_grad),
        OperatorKind::PowerGradWeight { p0, p1 } => {
            node_weighted_parts(vals, h, p0, p1, eps, want_grad)
        }
        OperatorKind::GradPower { mu } => {
            node_weighted_parts(vals, h, 2.0, mu - 2.0, eps, want_grad)
        }
        OperatorKind::BiPower { p } => {
            // ⟨−|Δu|^{p−2}Δu, u⟩
            let m = second_diff_raw(vals, h);
            let f: Vec<f64> = m.iter().map(|&t| sgn_pow(t, p - 1.0)).collect();
            let value = -h * f.iter().zip(vals).map(|(a, b)| a * b).sum::<f64>();
            let grad = want_grad.then(|| {
                let z: Vec<f64> = m
                    .iter()
                    .zip(vals)
                    .map(|(&mi, &ui)| dsgn_pow(mi, p - 1.0, eps) * ui)
                    .collect();
                let ddz = second_diff_raw(&z, h);
                (0..vals.len()).map(|i| -h * (f[i] + ddz[i])).collect()
            });
            (value, grad)
        }
    }
}

/// `h Σ_i |u_i|^a ḡ_i^b` with the node-averaged gradient magnitude
/// `ḡ_i = (|g_i| + |g_{i+1}|)/2`: the pairing of the pointwise operator
/// kinds with `u` itself (`a = p₀, b = p₁` for the power-gradient weight,
/// `a = 2, b = μ − 2` for the gradient power; a negative `b` is
/// regularized).
fn node_weighted_parts(
    vals: &[f64],
    h: f64,
    a: f64,
    b: f64,
    eps: f64,
    want_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let n = vals.len();
    let g = diff_raw(vals, h);
    let gbar: Vec<f64> = (0..n).map(|i| 0.5 * (g[i].abs() + g[i + 1].abs())).collect();
    let wb: Vec<f64> = gbar.iter().map(|&t| abs_pow_reg(t, b, eps)).collect();
    let au: Vec<f64> = vals.iter().map(|t| t.abs().powf(a)).collect();
    let value = h * au.iter().zip(&wb).map(|(x, y)| x * y).sum::<f64>();
    let grad = want_grad.then(|| {
        let mut out: Vec<f64> = (0..n)
            .map(|i| h * dabs_pow(vals[i], a, eps) * wb[i])
            .collect();
        if b != 0.0 {
            // spread the ḡ dependence: ∂ḡ_i/∂u_k touches k ∈ {i−1, i, i+1}
            for i in 0..n {
                // d(ḡ^b)/dḡ, with the negative-exponent case regularized
                let dw = if b >= 1.0 {
                    b * gbar[i].powf(b - 1.0)
                } else {
                    b * gbar[i] * (gbar[i] * gbar[i] + eps * eps).powf(0.5 * b - 1.0)
                };
                let t = h * au[i] * dw;
                let sl = reg_sign(g[i], eps);
                let sr = reg_sign(g[i + 1], eps);
                if i > 0 {
                    out[i - 1] += t * 0.5 * sl * (-1.0 / h);
                }
                out[i] += t * 0.5 * (sl / h - sr / h);
                if i + 1 < n {
                    out[i + 1] += t * 0.5 * sr * (1.0 / h);
                }
            }
        }
        out
    });
    (value, grad)
}

/// Smoothed sign, the regularized derivative of `|t|`.
fn reg_sign(t: f64, eps: f64) -> f64 {
    t / (t * t + eps * eps).sqrt()
}
