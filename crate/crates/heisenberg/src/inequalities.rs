//! Numerical checks of the functional inequalities on ℍⁿ.
//!
//! Every check evaluates both sides of one inequality on grid data and
//! returns an [`InequalityReport`]. Linear inequalities `L ≤ R` report
//! `ratio = L / R`. Logarithmic ones, `A ≤ k log B`, report `lhs = A`,
//! `rhs = k log B` and the multiplicative defect `ratio = e^{A/k} / B`,
//! which is at most 1 exactly when the inequality holds and stays meaningful
//! when `k log B` is negative.
//!
//! Quadratic forms come from a [`Subject`], which caches the stencil
//! Dirichlet form and, for ξ-radial functions, the Laguerre–Fourier
//! coefficients. Forms of order 1 always use the stencil, so the horizontal,
//! modified and fractional variants coincide exactly at `s = 1`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};
use statrs::function::gamma::ln_gamma;

use crate::calculus::{
    entropy_with_weights, power_integral, quadrature_weights, weighted_sum, Boundary, GridFunction, GridSpec, Measure,
    Stencil,
};
use crate::constants::{
    critical_exponent, gn_constants, gn_sharp_constant, hardy_constant, homogeneous_dimension, ln_gross_gamma,
    lw_constant_with, sobolev_constant, sobolev_constant_int, us_bound, us_norm_enumerated,
};
use crate::error::{param, Error, Result};
use crate::group::{kaplan_norm_parts, symplectic, Convention, GroupPoint};
use crate::spectral::{analyze, apply_multiplier, synthesize, AnalysisConfig, Multiplier, SpectralCoefficients};

/// Default verdict tolerance on the ratio.
pub const DEFAULT_TOL: f64 = 1e-3;

/// Outcome of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Holds,
    Fails,
    /// The right side is degenerate (nonpositive log argument or form).
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Holds => "holds",
            Verdict::Fails => "fails",
            Verdict::Inconclusive => "inconclusive",
        }
    }
}

/// Parameters echoed in a report. Unused entries are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    pub n: usize,
    pub s: Option<f64>,
    pub beta: Option<f64>,
    pub q: Option<f64>,
    pub sigma: Option<f64>,
    pub a: Option<f64>,
    pub p: Option<f64>,
}

impl Params {
    pub(crate) fn new(n: usize) -> Self {
        Self { n, ..Default::default() }
    }
    fn s(mut self, v: f64) -> Self {
        self.s = Some(v);
        self
    }
    fn beta(mut self, v: f64) -> Self {
        self.beta = Some(v);
        self
    }
    fn q(mut self, v: f64) -> Self {
        self.q = Some(v);
        self
    }
    fn sigma(mut self, v: f64) -> Self {
        self.sigma = Some(v);
        self
    }
    fn a(mut self, v: f64) -> Self {
        self.a = Some(v);
        self
    }
    fn p(mut self, v: f64) -> Self {
        self.p = Some(v);
        self
    }
}

/// Both sides of one inequality on one function.
#[derive(Debug, Clone, PartialEq)]
pub struct InequalityReport {
    pub name: String,
    /// Label of the test function.
    pub subject: String,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
    pub verdict: Verdict,
    pub tol: f64,
    pub params: Params,
    pub notes: Vec<String>,
}

impl InequalityReport {
    pub(crate) fn linear(name: &str, lhs: f64, rhs: f64, params: Params, tol: f64) -> Self {
        let (ratio, verdict) = if rhs > 0.0 && rhs.is_finite() && lhs.is_finite() {
            let r = lhs / rhs;
            (r, if r <= 1.0 + tol { Verdict::Holds } else { Verdict::Fails })
        } else if rhs == 0.0 && lhs <= 0.0 {
            (0.0, Verdict::Holds)
        } else {
            (f64::NAN, Verdict::Inconclusive)
        };
        Self::assemble(name, lhs, rhs, ratio, verdict, params, tol)
    }

    /// `A ≤ k log B` with `k > 0`.
    fn logarithmic(name: &str, a: f64, k: f64, b: f64, params: Params, tol: f64) -> Self {
        if !(b > 0.0 && b.is_finite() && a.is_finite()) {
            let mut r = Self::assemble(name, a, f64::NAN, f64::NAN, Verdict::Inconclusive, params, tol);
            r.notes.push(format!("log argument {b:.3e} is not a positive finite number"));
            return r;
        }
        let ratio = (a / k - b.ln()).exp();
        let verdict = if ratio <= 1.0 + tol { Verdict::Holds } else { Verdict::Fails };
        Self::assemble(name, a, k * b.ln(), ratio, verdict, params, tol)
    }

    fn assemble(name: &str, lhs: f64, rhs: f64, ratio: f64, verdict: Verdict, params: Params, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            subject: String::new(),
            lhs,
            rhs,
            ratio,
            holds: verdict == Verdict::Holds,
            verdict,
            tol,
            params,
            notes: Vec::new(),
        }
    }

    fn on(mut self, subject: &str) -> Self {
        self.subject = subject.to_string();
        self
    }

    fn note(mut self, msg: impl Into<String>) -> Self {
        self.notes.push(msg.into());
        self
    }

    /// Column names matching [`InequalityReport::csv_row`].
    pub fn csv_header() -> Vec<&'static str> {
        vec![
            "name", "subject", "lhs", "rhs", "ratio", "verdict", "tol", "n", "s", "beta", "q", "sigma", "a", "p", "notes",
        ]
    }

    /// One CSV record; floats use [`crate::cli::fmt_f64`].
    pub fn csv_row(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(crate::cli::fmt_f64).unwrap_or_default();
        let p = &self.params;
        vec![
            self.name.clone(),
            self.subject.clone(),
            crate::cli::fmt_f64(self.lhs),
            crate::cli::fmt_f64(self.rhs),
            crate::cli::fmt_f64(self.ratio),
            self.verdict.as_str().to_string(),
            crate::cli::fmt_f64(self.tol),
            p.n.to_string(),
            opt(p.s),
            opt(p.beta),
            opt(p.q),
            opt(p.sigma),
            opt(p.a),
            opt(p.p),
            self.notes.join("; "),
        ]
    }

    /// JSON object with the same fields as the CSV row; non-finite numbers
    /// become `null`.
    pub fn to_json(&self) -> Value {
        let num = |v: f64| if v.is_finite() { json!(v) } else { Value::Null };
        let opt = |v: Option<f64>| v.map(num).unwrap_or(Value::Null);
        let p = &self.params;
        json!({
            "name": self.name,
            "subject": self.subject,
            "lhs": num(self.lhs),
            "rhs": num(self.rhs),
            "ratio": num(self.ratio),
            "verdict": self.verdict.as_str(),
            "tol": self.tol,
            "n": p.n,
            "s": opt(p.s),
            "beta": opt(p.beta),
            "q": opt(p.q),
            "sigma": opt(p.sigma),
            "a": opt(p.a),
            "p": opt(p.p),
            "notes": self.notes,
        })
    }
}

/// Source of the value used for `‖U_s‖_op`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UNorm {
    /// The closed-form bound `((n+1−s)/n)^s`.
    Bound,
    /// Supremum of the spectral terms up to the given Laguerre index.
    Enumerated { k_max: u64 },
}

/// Options shared by every check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckOptions {
    pub tol: f64,
    pub u_norm: UNorm,
}

impl Default for CheckOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, u_norm: UNorm::Bound }
    }
}

impl CheckOptions {
    fn u(&self, n: usize, s: f64) -> Result<f64> {
        if s == 0.0 || s == 1.0 {
            return Ok(1.0);
        }
        match self.u_norm {
            UNorm::Bound => us_bound(n as u32, s),
            UNorm::Enumerated { k_max } => us_norm_enumerated(n as u32, s, k_max),
        }
    }
}

/// Which quadratic form an inequality uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// `⟨ℒ_s u, u⟩` with constant `C_{B,s}`.
    Modified,
    /// `⟨ℒ^s u, u⟩` with constant `C_{B,s} ‖U_s‖`.
    FracPower,
    /// `‖∇_ℍ u‖²` with constant `C_{B,1}`; only `s = 1`.
    Horizontal,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Modified => "modified",
            Variant::FracPower => "fracpower",
            Variant::Horizontal => "horizontal",
        }
    }
}

/// A test function with its cached forms.
#[derive(Debug, Clone)]
pub struct Subject {
    pub label: String,
    pub f: GridFunction,
    haar: Vec<f64>,
    dirichlet: f64,
    spectrum: Option<SpectralCoefficients>,
    asymmetry: f64,
}

impl Subject {
    /// Prepare `f`, running the spectral analysis when `f` is ξ-radial.
    pub fn new(label: impl Into<String>, f: GridFunction) -> Result<Self> {
        let (spectrum, asymmetry) = match analyze(&f, &AnalysisConfig::default()) {
            Ok(c) => (Some(c), 0.0),
            Err(Error::NonRadial(a)) => (None, a),
            Err(e) => return Err(e),
        };
        Self::assemble(label.into(), f, spectrum, asymmetry)
    }

    /// Prepare `f` for order-1 checks only.
    pub fn without_spectrum(label: impl Into<String>, f: GridFunction) -> Result<Self> {
        Self::assemble(label.into(), f, None, f64::NAN)
    }

    fn assemble(label: String, f: GridFunction, spectrum: Option<SpectralCoefficients>, asymmetry: f64) -> Result<Self> {
        let haar = quadrature_weights(&f.spec, &Measure::Haar)?;
        let dirichlet = Stencil::new(&f.spec, Convention::Std, Boundary::Free).dirichlet_form(&f.values);
        Ok(Self { label, f, haar, dirichlet, spectrum, asymmetry })
    }

    /// `c · f` with every cached quantity rescaled.
    pub fn scaled(&self, c: f64) -> Self {
        let spectrum = self.spectrum.as_ref().map(|sp| SpectralCoefficients {
            coeffs: sp.coeffs.iter().map(|row| row.iter().map(|v| v * c).collect()).collect(),
            ..sp.clone()
        });
        Self {
            label: self.label.clone(),
            f: self.f.scaled(c),
            haar: self.haar.clone(),
            dirichlet: self.dirichlet * c * c,
            spectrum,
            asymmetry: self.asymmetry,
        }
    }

    pub fn n(&self) -> usize {
        self.f.spec.n
    }

    /// Whether fractional forms are available.
    pub fn is_radial(&self) -> bool {
        self.spectrum.is_some()
    }

    pub fn spectrum(&self) -> Option<&SpectralCoefficients> {
        self.spectrum.as_ref()
    }

    /// `‖f‖_p^p` against Haar measure.
    pub fn power(&self, p: f64) -> f64 {
        power_integral(&self.haar, &self.f.values, p)
    }

    pub fn norm(&self, p: f64) -> f64 {
        self.power(p).powf(1.0 / p)
    }

    pub fn dirichlet(&self) -> f64 {
        self.dirichlet
    }

    /// Quadratic form of the requested variant and order.
    pub fn form(&self, variant: Variant, s: f64) -> Result<f64> {
        if variant == Variant::Horizontal {
            if s != 1.0 {
                return param(format!("the horizontal form has order 1, got s={s}"));
            }
            return Ok(self.dirichlet);
        }
        if !(0.0..=1.0).contains(&s) {
            return param(format!("order s must lie in [0, 1], got {s}"));
        }
        if s == 1.0 {
            return Ok(self.dirichlet);
        }
        if s == 0.0 {
            return Ok(self.power(2.0));
        }
        let c = self.spectrum.as_ref().ok_or(Error::NonRadial(self.asymmetry))?;
        let m = match variant {
            Variant::Modified => Multiplier::Modified(s),
            _ => Multiplier::FracPower(s),
        };
        Ok(c.energy(&m))
    }
}

fn check_order(s: f64) -> Result<()> {
    if !(s > 0.0 && s <= 1.0) {
        return param(format!("order s must lie in (0, 1], got {s}"));
    }
    Ok(())
}

/// Sobolev-type constant of a variant: `C_{B,1}`, `C_{B,s}` or `C_{B,s}‖U_s‖`.
pub fn variant_constant(n: usize, s: f64, variant: Variant, opts: &CheckOptions) -> Result<f64> {
    check_order(s)?;
    match variant {
        Variant::Horizontal => {
            if s != 1.0 {
                return param(format!("the horizontal form has order 1, got s={s}"));
            }
            sobolev_constant_int(n as u32)
        }
        Variant::Modified => sobolev_constant(n as u32, s),
        Variant::FracPower => Ok(sobolev_constant(n as u32, s)? * opts.u(n, s)?),
    }
}

fn variant_name(base: &str, variant: Variant) -> String {
    format!("{base}/{}", variant.as_str())
}

fn normalized_power(w: &[f64], u: &[Complex64], p: f64) -> Result<f64> {
    let np = power_integral(w, u, p);
    if !(np > 0.0) {
        return Err(Error::ZeroFunction);
    }
    Ok(np)
}

/// Logarithmic Hölder inequality
/// `∫ (|u|^p/‖u‖_p^p) log(|u|^p/‖u‖_p^p) ≤ (q/(q−p)) log(‖u‖_q^p/‖u‖_p^p)`
/// against the measure `m`.
pub fn check_log_holder(u: &GridFunction, p: f64, q: f64, m: &Measure, opts: &CheckOptions) -> Result<InequalityReport> {
    if !(1.0 < p && p < q && q.is_finite()) {
        return param(format!("need 1 < p < q < ∞, got p={p}, q={q}"));
    }
    let w = quadrature_weights(&u.spec, m)?;
    let np = normalized_power(&w, &u.values, p)?;
    let nq = power_integral(&w, &u.values, q);
    let parts: Vec<f64> = w
        .par_chunks(8192)
        .zip(u.values.par_chunks(8192))
        .map(|(wc, uc)| {
            wc.iter()
                .zip(uc)
                .map(|(wi, v)| {
                    let r = v.norm().powf(p) / np;
                    if r > 0.0 {
                        wi * r * r.ln()
                    } else {
                        0.0
                    }
                })
                .sum::<f64>()
        })
        .collect();
    let lhs: f64 = parts.iter().sum();
    let b = nq.powf(p / q) / np;
    Ok(InequalityReport::logarithmic("log_holder", lhs, q / (q - p), b, Params::new(u.spec.n).p(p).q(q), opts.tol))
}

/// Fractional Sobolev inequality `‖f‖²_{2Q/(Q−2s)} ≤ C · form`.
pub fn check_sobolev(subj: &Subject, s: f64, variant: Variant, opts: &CheckOptions) -> Result<InequalityReport> {
    let n = subj.n();
    let c = variant_constant(n, s, variant, opts)?;
    let qd = homogeneous_dimension(n as u32);
    let crit = 2.0 * qd / (qd - 2.0 * s);
    let lhs = subj.power(crit).powf(2.0 / crit);
    let rhs = c * subj.form(variant, s)?;
    Ok(InequalityReport::linear(&variant_name("sobolev", variant), lhs, rhs, Params::new(n).s(s).q(crit), opts.tol)
        .on(&subj.label))
}

/// Logarithmic Sobolev inequality
/// `∫ (|f|²/‖f‖²) log(|f|²/‖f‖²) ≤ (Q/2s) log(C · form / ‖f‖²)`.
pub fn check_log_sobolev(subj: &Subject, s: f64, variant: Variant, opts: &CheckOptions) -> Result<InequalityReport> {
    let n = subj.n();
    let c = variant_constant(n, s, variant, opts)?;
    let qd = homogeneous_dimension(n as u32);
    let l2 = normalized_power(&subj.haar, &subj.f.values, 2.0)?;
    let a = entropy_with_weights(&subj.haar, &subj.f.values)?;
    let b = c * subj.form(variant, s)? / l2;
    Ok(InequalityReport::logarithmic(&variant_name("log_sobolev", variant), a, qd / (2.0 * s), b, Params::new(n).s(s), opts.tol)
        .on(&subj.label))
}

/// Unit-norm horizontal form `∫ |u|² log|u| ≤ (Q/4) log(C_{B,1} ‖∇_ℍ u‖²)`
/// after rescaling to `‖u‖₂ = 1`.
pub fn check_log_sobolev_unit(subj: &Subject, opts: &CheckOptions) -> Result<InequalityReport> {
    let n = subj.n();
    let l2 = normalized_power(&subj.haar, &subj.f.values, 2.0)?;
    let c = 1.0 / l2.sqrt();
    let u = subj.f.scaled(c);
    let a = 0.5 * entropy_with_weights(&subj.haar, &u.values)?;
    let qd = homogeneous_dimension(n as u32);
    let b = sobolev_constant_int(n as u32)? * subj.dirichlet * c * c;
    Ok(InequalityReport::logarithmic("log_sobolev_unit", a, qd / 4.0, b, Params::new(n).s(1.0), opts.tol)
        .on(&subj.label)
        .note(format!("rescaled by {c:.6e} to unit L2 norm")))
}

/// Interpolation exponent of the Gagliardo–Nirenberg inequality from
/// `1/q = a(1/2 − s/Q) + (1−a)/σ`.
pub fn gn_exponent(n: usize, s: f64, q: f64, sigma: f64) -> Result<f64> {
    check_order(s)?;
    let qd = homogeneous_dimension(n as u32);
    let crit = 2.0 * qd / (qd - 2.0 * s);
    let slack = 1e-12 * sigma.abs().max(1.0);
    if !(q >= crit - slack && sigma >= q - slack && sigma.is_finite()) {
        return param(format!("need σ >= q >= {crit}, got q={q}, σ={sigma}"));
    }
    let inv_crit = 0.5 - s / qd;
    if (inv_crit - 1.0 / sigma).abs() < 1e-15 {
        return Ok(1.0);
    }
    let a = (1.0 / q - 1.0 / sigma) / (inv_crit - 1.0 / sigma);
    if !(a > 0.0 && a <= 1.0 + 1e-12) {
        return param(format!("interpolation exponent a={a} outside (0, 1]"));
    }
    Ok(a.min(1.0))
}

fn gn_like_variant(variant: Variant) -> Result<()> {
    if variant == Variant::Horizontal {
        return param("Gagliardo-Nirenberg checks take the modified or fractional-power form");
    }
    Ok(())
}

/// Gagliardo–Nirenberg inequality
/// `∫|u|^q ≤ C^{aq/2} form^{aq/2} ‖u‖_σ^{(1−a)q}`.
pub fn check_gagliardo_nirenberg(
    subj: &Subject,
    s: f64,
    q: f64,
    sigma: f64,
    variant: Variant,
    opts: &CheckOptions,
) -> Result<InequalityReport> {
    gn_like_variant(variant)?;
    let n = subj.n();
    let a = gn_exponent(n, s, q, sigma)?;
    let c = variant_constant(n, s, variant, opts)?;
    let lhs = subj.power(q);
    let e = a * q / 2.0;
    let rhs = (c * subj.form(variant, s)?).powf(e) * subj.norm(sigma).powf((1.0 - a) * q);
    let params = Params::new(n).s(s).q(q).sigma(sigma).a(a);
    Ok(InequalityReport::linear(&variant_name("gagliardo_nirenberg", variant), lhs, rhs, params, opts.tol).on(&subj.label))
}

/// Constant used in the two-order Gagliardo–Nirenberg check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GnConstant {
    /// `C_{B,s1}^{qa/2} C_{B,s2}^{q(1−a)/2}`.
    Chain,
    /// The closed form attached to `s1 = 1, s2 = 0`.
    Sharp,
}

/// Two-order Gagliardo–Nirenberg inequality
/// `∫|u|^q ≤ C form_{s1}^{qa/2} form_{s2}^{q(1−a)/2}`, with the `‖U‖` factors
/// in the fractional-power variant. `s2 = 0` is the `L²` norm.
pub fn check_gn_two(
    subj: &Subject,
    s1: f64,
    s2: f64,
    q: f64,
    variant: Variant,
    constant: GnConstant,
    opts: &CheckOptions,
) -> Result<InequalityReport> {
    gn_like_variant(variant)?;
    let n = subj.n();
    let (a, chain) = gn_constants(n as u32, s1, s2, q)?;
    let mut c = match constant {
        GnConstant::Chain => chain,
        GnConstant::Sharp => {
            if s1 != 1.0 || s2 != 0.0 {
                return param("the closed-form sharp constant needs s1 = 1 and s2 = 0");
            }
            gn_sharp_constant(n as u32, q)?
        }
    };
    let (e1, e2) = (q * a / 2.0, q * (1.0 - a) / 2.0);
    if variant == Variant::FracPower {
        c *= opts.u(n, s1)?.powf(e1) * opts.u(n, s2)?.powf(e2);
    }
    let lhs = subj.power(q);
    let f1 = subj.form(variant, s1)?;
    let f2 = subj.form(variant, s2)?;
    let rhs = c * f1.powf(e1) * f2.powf(e2);
    let name = match constant {
        GnConstant::Chain => variant_name("gn_two", variant),
        GnConstant::Sharp => variant_name("gn_two_sharp", variant),
    };
    let mut params = Params::new(n).s(s1).q(q).a(a);
    params.sigma = Some(s2);
    Ok(InequalityReport::linear(&name, lhs, rhs, params, opts.tol)
        .on(&subj.label)
        .note(format!("s2={s2}")))
}

/// Logarithmic Gagliardo–Nirenberg inequality
/// `entropy ≤ (q/(q−2)) log(C^a form^a ‖u‖_σ^{2(1−a)} / ‖u‖²)`.
pub fn check_log_gn(
    subj: &Subject,
    s: f64,
    q: f64,
    sigma: f64,
    variant: Variant,
    opts: &CheckOptions,
) -> Result<InequalityReport> {
    gn_like_variant(variant)?;
    let n = subj.n();
    let a = gn_exponent(n, s, q, sigma)?;
    let c = variant_constant(n, s, variant, opts)?;
    let l2 = normalized_power(&subj.haar, &subj.f.values, 2.0)?;
    let lhs = entropy_with_weights(&subj.haar, &subj.f.values)?;
    let b = (c * subj.form(variant, s)?).powf(a) * subj.norm(sigma).powf(2.0 * (1.0 - a)) / l2;
    let params = Params::new(n).s(s).q(q).sigma(sigma).a(a);
    Ok(InequalityReport::logarithmic(&variant_name("log_gn", variant), lhs, q / (q - 2.0), b, params, opts.tol)
        .on(&subj.label))
}

fn kaplan(alpha: f64) -> Measure {
    if alpha == 0.0 {
        Measure::Haar
    } else {
        Measure::KaplanWeight { alpha, convention: Convention::Std }
    }
}

fn kaplan_log(alpha: f64) -> Measure {
    Measure::KaplanLogWeight { alpha, convention: Convention::Std }
}

fn hs_window(s: f64, beta: f64, closed: bool) -> Result<()> {
    check_order(s)?;
    let ok = beta >= 0.0 && if closed { beta <= 2.0 * s } else { beta < 2.0 * s };
    if !ok {
        let rel = if closed { "<=" } else { "<" };
        return param(format!("need 0 <= β {rel} 2s, got β={beta}, s={s}"));
    }
    Ok(())
}

/// Fractional Hardy inequality `∫ |u|²/|x|^{2s} ≤ C_{BH,s} ⟨ℒ^s u, u⟩`,
/// `s ∈ (0, 1)`.
pub fn check_hardy(subj: &Subject, s: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    let n = subj.n();
    let c = hardy_constant(n as u32, s)?;
    let w = quadrature_weights(&subj.f.spec, &kaplan(2.0 * s))?;
    let lhs = power_integral(&w, &subj.f.values, 2.0);
    let rhs = c * subj.form(Variant::FracPower, s)?;
    Ok(InequalityReport::linear("hardy", lhs, rhs, Params::new(n).s(s).beta(2.0 * s), opts.tol).on(&subj.label))
}

fn lw_constant_opts(n: usize, s: f64, beta: f64, opts: &CheckOptions) -> Result<f64> {
    lw_constant_with(n as u32, s, beta, opts.u(n, s)?)
}

/// Fractional Hardy–Sobolev inequality
/// `(∫ |u|^{2*_β}/|x|^β)^{2/2*_β} ≤ C_{Lw,s} ⟨ℒ^s u, u⟩`, `0 ≤ β ≤ 2s`.
pub fn check_hardy_sobolev(subj: &Subject, s: f64, beta: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    hs_window(s, beta, true)?;
    let n = subj.n();
    let crit = critical_exponent(n as u32, s, beta);
    let c = lw_constant_opts(n, s, beta, opts)?;
    let w = quadrature_weights(&subj.f.spec, &kaplan(beta))?;
    let lhs = power_integral(&w, &subj.f.values, crit).powf(2.0 / crit);
    let rhs = c * subj.form(Variant::FracPower, s)?;
    Ok(InequalityReport::linear("hardy_sobolev", lhs, rhs, Params::new(n).s(s).beta(beta).q(crit), opts.tol)
        .on(&subj.label))
}

/// `(∫ w_α |u|² , ∫ w_α |u|² log|u|², ∫ w_α log|x| |u|²)` for the weight
/// `|x|^{−α}`.
fn weighted_log_parts(f: &GridFunction, alpha: f64) -> Result<(f64, f64, f64)> {
    let w = quadrature_weights(&f.spec, &kaplan(alpha))?;
    let mass = power_integral(&w, &f.values, 2.0);
    let ulog = weighted_sum(
        &w,
        f.values.iter().map(|v| {
            let a = v.norm_sqr();
            if a > 0.0 {
                a * a.ln()
            } else {
                0.0
            }
        }),
    );
    let xlog = if alpha == 0.0 {
        // log|x| against Lebesgue measure still has an integrable singularity.
        let wl = quadrature_weights(&f.spec, &kaplan_log(0.0))?;
        power_integral(&wl, &f.values, 2.0)
    } else {
        let wl = quadrature_weights(&f.spec, &kaplan_log(alpha))?;
        power_integral(&wl, &f.values, 2.0)
    };
    Ok((mass, ulog, xlog))
}

/// Weighted logarithmic Sobolev inequality with weight `|x|^{−2β/2*_β}`,
/// `0 ≤ β < 2s`.
pub fn check_weighted_log_sobolev(subj: &Subject, s: f64, beta: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    hs_window(s, beta, false)?;
    let n = subj.n();
    let qd = homogeneous_dimension(n as u32);
    let crit = critical_exponent(n as u32, s, beta);
    let alpha = 2.0 * beta / crit;
    let (mass, ulog, xlog) = weighted_log_parts(&subj.f, alpha)?;
    if !(mass > 0.0) {
        return Err(Error::ZeroFunction);
    }
    let lhs = (ulog - alpha * xlog) / mass - mass.ln();
    let c = lw_constant_opts(n, s, beta, opts)?;
    let b = c * subj.form(Variant::FracPower, s)? / mass;
    let k = (qd - beta) / (2.0 * s - beta);
    Ok(InequalityReport::logarithmic("weighted_log_sobolev", lhs, k, b, Params::new(n).s(s).beta(beta).q(crit), opts.tol)
        .on(&subj.label))
}

/// Logarithmic Hardy inequality in its normalized form
/// `∫ |u|²/|x|^{2s−β} log(|x|^{(Q−2s)(1−β/(2s−β))} |u|²) ≤ ((Q−β)/(2s−β)) log(C_{Lw,s} ⟨ℒ^s u, u⟩)`
/// with `∫ |u|²/|x|^{2s−β} = 1` imposed by rescaling, `0 ≤ β < 2s`.
pub fn check_log_hardy(subj: &Subject, s: f64, beta: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    hs_window(s, beta, false)?;
    let n = subj.n();
    let qd = homogeneous_dimension(n as u32);
    let alpha = 2.0 * s - beta;
    let e = (qd - 2.0 * s) * (1.0 - beta / (2.0 * s - beta));
    let (mass, ulog, xlog) = weighted_log_parts(&subj.f, alpha)?;
    if !(mass > 0.0) {
        return Err(Error::ZeroFunction);
    }
    // After u -> u/√mass: ∫w|u|²log|u|² picks up −log(mass).
    let lhs = (ulog + e * xlog) / mass - mass.ln();
    let c = lw_constant_opts(n, s, beta, opts)?;
    let b = c * subj.form(Variant::FracPower, s)? / mass;
    let k = (qd - beta) / (2.0 * s - beta);
    Ok(InequalityReport::logarithmic("log_hardy", lhs, k, b, Params::new(n).s(s).beta(beta), opts.tol)
        .on(&subj.label)
        .note(format!("rescaled by {:.6e} to unit weighted norm", 1.0 / mass.sqrt())))
}

/// The `β = s` case of the log-Hardy inequality,
/// `∫ |u|²/|x|^s log|u| ≤ ((Q−s)/(2s)) log(C_{Lw,s} ⟨ℒ^s u, u⟩)`
/// with `∫ |u|²/|x|^s = 1` imposed by rescaling.
pub fn check_log_hardy_radial(subj: &Subject, s: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    hs_window(s, s, false)?;
    let n = subj.n();
    let qd = homogeneous_dimension(n as u32);
    let (mass, ulog, _) = weighted_log_parts(&subj.f, s)?;
    if !(mass > 0.0) {
        return Err(Error::ZeroFunction);
    }
    let lhs = 0.5 * (ulog / mass - mass.ln());
    let c = lw_constant_opts(n, s, s, opts)?;
    let b = c * subj.form(Variant::FracPower, s)? / mass;
    Ok(InequalityReport::logarithmic("log_hardy_radial", lhs, (qd - s) / (2.0 * s), b, Params::new(n).s(s).beta(s), opts.tol)
        .on(&subj.label)
        .note(format!("rescaled by {:.6e} to unit weighted norm", 1.0 / mass.sqrt())))
}

/// Nash inequality `‖u‖₂^{2+4s/Q} ≤ C ‖u‖₁^{4s/Q} form`.
pub fn check_nash(subj: &Subject, s: f64, variant: Variant, opts: &CheckOptions) -> Result<InequalityReport> {
    let n = subj.n();
    let c = variant_constant(n, s, variant, opts)?;
    let qd = homogeneous_dimension(n as u32);
    let e = 4.0 * s / qd;
    let lhs = subj.norm(2.0).powf(2.0 + e);
    let rhs = c * subj.norm(1.0).powf(e) * subj.form(variant, s)?;
    Ok(InequalityReport::linear(&variant_name("nash", variant), lhs, rhs, Params::new(n).s(s), opts.tol).on(&subj.label))
}

/// Semi-Gaussian measure `γ e^{−|ξ|²/2} dξ dτ` of ℍⁿ.
pub fn semi_gaussian(n: usize) -> Result<Measure> {
    Ok(Measure::SemiGaussian { gamma: ln_gross_gamma(n as u32)?.exp() })
}

fn gross_factor(f: &GridFunction, sign: f64) -> Result<GridFunction> {
    let lg = ln_gross_gamma(f.spec.n as u32)?;
    let spec = &f.spec;
    let nt = spec.points_tau;
    let mut values = f.values.clone();
    values.par_chunks_mut(nt).enumerate().for_each(|(node, line)| {
        let mut xi = vec![0.0; spec.dims_xi()];
        spec.xi_coords(node, &mut xi);
        let xi_sq: f64 = xi.iter().map(|v| v * v).sum();
        let factor = (sign * (-0.5 * lg + 0.25 * xi_sq)).exp();
        line.iter_mut().for_each(|v| *v *= factor);
    });
    Ok(GridFunction { spec: spec.clone(), values })
}

/// `g = γ^{−1/2} e^{|ξ|²/4} f`, which maps `L²(ℍⁿ)` isometrically onto
/// `L²(ℍⁿ, μ)`.
pub fn gross_transform(f: &GridFunction) -> Result<GridFunction> {
    gross_factor(f, 1.0)
}

/// Inverse of [`gross_transform`]: `f = γ^{1/2} e^{−|ξ|²/4} g`.
pub fn gross_transform_inv(g: &GridFunction) -> Result<GridFunction> {
    gross_factor(g, -1.0)
}

/// `∫ |∇_ℍ g|² dμ` with the density evaluated at stencil edge midpoints.
pub fn gaussian_dirichlet_form(g: &GridFunction) -> Result<f64> {
    let lg = ln_gross_gamma(g.spec.n as u32)?;
    let stencil = Stencil::new(&g.spec, Convention::Std, Boundary::Free);
    Ok(stencil.weighted_form(&g.values, |xi, _| {
        let xi_sq: f64 = xi.iter().map(|v| v * v).sum();
        (lg - 0.5 * xi_sq).exp()
    }))
}

/// Entropy functional `Ent(h) = ∫ h log h dm − (∫ h dm) log ∫ h dm` of a
/// nonnegative function given by its node values.
pub fn entropy_functional(w: &[f64], h: &[f64]) -> f64 {
    let mass = weighted_sum(w, h.iter().copied());
    let hlogh = weighted_sum(w, h.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }));
    hlogh - mass * mass.ln()
}

/// Semi-Gaussian logarithmic Sobolev inequality
/// `∫ |g|² log|g| dμ ≤ ∫ |∇_ℍ g|² dμ` after rescaling to `‖g‖_{L²(μ)} = 1`.
pub fn check_gross(g: &GridFunction, opts: &CheckOptions) -> Result<InequalityReport> {
    let n = g.spec.n;
    let w = quadrature_weights(&g.spec, &semi_gaussian(n)?)?;
    let norm_sq = normalized_power(&w, &g.values, 2.0)?;
    let c = 1.0 / norm_sq.sqrt();
    let u = g.scaled(c);
    let lhs = 0.5 * entropy_with_weights(&w, &u.values)?;
    let rhs = gaussian_dirichlet_form(&u)?;
    Ok(InequalityReport::linear("gross", lhs, rhs, Params::new(n), opts.tol)
        .note(format!("rescaled by {c:.6e} to unit L2(mu) norm")))
}

/// Both statements of the Gross/log-Sobolev equivalence on one function.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    /// Semi-Gaussian inequality on `g = gross_transform(f)`.
    pub gaussian: InequalityReport,
    /// Horizontal log-Sobolev inequality on `f` with `‖f‖₂ = 1`.
    pub horizontal: InequalityReport,
    /// `|‖g‖²_{L²(μ)} − ‖f‖²₂| / ‖f‖²₂`.
    pub norm_residual: f64,
}

/// Run both directions of the equivalence on the same data.
pub fn check_equivalence(subj: &Subject, opts: &CheckOptions) -> Result<EquivalenceReport> {
    let n = subj.n();
    let l2 = normalized_power(&subj.haar, &subj.f.values, 2.0)?;
    let f = subj.f.scaled(1.0 / l2.sqrt());
    let g = gross_transform(&f)?;
    let wmu = quadrature_weights(&g.spec, &semi_gaussian(n)?)?;
    let gmu = power_integral(&wmu, &g.values, 2.0);
    let norm_residual = (gmu - 1.0).abs();
    let gaussian = check_gross(&g, opts)?.on(&subj.label);
    let a = 0.5 * entropy_with_weights(&subj.haar, &f.values)?;
    let qd = homogeneous_dimension(n as u32);
    let b = sobolev_constant_int(n as u32)? * subj.dirichlet / l2;
    let horizontal =
        InequalityReport::logarithmic("equivalence_horizontal", a, qd / 4.0, b, Params::new(n).s(1.0), opts.tol).on(&subj.label);
    Ok(EquivalenceReport { gaussian: InequalityReport { name: "equivalence_gaussian".into(), ..gaussian }, horizontal, norm_residual })
}

/// `∫ |g|² dm − (∫ |g|^{2/q} dm)^q`.
fn poincare_gap(w: &[f64], g: &[Complex64], q: f64) -> f64 {
    power_integral(w, g, 2.0) - power_integral(w, g, 2.0 / q).powf(q)
}

/// Generalized Poincaré inequality for the semi-Gaussian measure
/// `∫|g|² dμ − (∫|g|^p dμ)^{2/p} ≤ (2(2−p)/p) ∫|∇_ℍ g|² dμ`, `1 ≤ p ≤ 2`.
pub fn check_poincare_mu(g: &GridFunction, p: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    if !(1.0..=2.0).contains(&p) {
        return param(format!("tested range is 1 <= p <= 2, got p={p}"));
    }
    let n = g.spec.n;
    let w = quadrature_weights(&g.spec, &semi_gaussian(n)?)?;
    let lhs = poincare_gap(&w, &g.values, 2.0 / p);
    let rhs = 2.0 * (2.0 - p) / p * gaussian_dirichlet_form(g)?;
    Ok(InequalityReport::linear("poincare_mu", lhs, rhs, Params::new(n).p(p), opts.tol))
}

/// Forms of the Haar-measure Poincaré inequality.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoincareForm {
    /// Logarithmic, horizontal gradient.
    LogA,
    /// Logarithmic, modified operator.
    LogB,
    /// Logarithmic, fractional power.
    LogC,
    /// Linear, horizontal gradient.
    LinearA3,
    /// Linear, modified operator.
    LinearB3,
    /// Linear, fractional power.
    LinearC3,
}

impl PoincareForm {
    pub const ALL: [PoincareForm; 6] = [
        PoincareForm::LogA,
        PoincareForm::LogB,
        PoincareForm::LogC,
        PoincareForm::LinearA3,
        PoincareForm::LinearB3,
        PoincareForm::LinearC3,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PoincareForm::LogA => "log_a",
            PoincareForm::LogB => "log_b",
            PoincareForm::LogC => "log_c",
            PoincareForm::LinearA3 => "linear_a3",
            PoincareForm::LinearB3 => "linear_b3",
            PoincareForm::LinearC3 => "linear_c3",
        }
    }

    fn variant(self) -> Variant {
        match self {
            PoincareForm::LogA | PoincareForm::LinearA3 => Variant::Horizontal,
            PoincareForm::LogB | PoincareForm::LinearB3 => Variant::Modified,
            PoincareForm::LogC | PoincareForm::LinearC3 => Variant::FracPower,
        }
    }

    fn is_log(self) -> bool {
        matches!(self, PoincareForm::LogA | PoincareForm::LogB | PoincareForm::LogC)
    }
}

/// Poincaré-type inequalities against Haar measure. The horizontal forms
/// ignore `s` and use order 1.
pub fn check_poincare_haar(subj: &Subject, q: f64, form: PoincareForm, s: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    let variant = form.variant();
    let s = if variant == Variant::Horizontal { 1.0 } else { s };
    let strict = form.is_log() || variant == Variant::Horizontal;
    if !(q.is_finite() && if strict { q > 1.0 } else { q >= 1.0 }) {
        return param(format!("q={q} outside the admissible range for {}", form.as_str()));
    }
    let n = subj.n();
    let qd = homogeneous_dimension(n as u32);
    let c = variant_constant(n, s, variant, opts)?;
    let k = qd * (q - 1.0) / (2.0 * s);
    let gap = poincare_gap(&subj.haar, &subj.f.values, q);
    let name = format!("poincare_haar/{}", form.as_str());
    let params = Params::new(n).s(s).q(q);
    let form_value = subj.form(variant, s)?;
    let report = if form.is_log() {
        let l2 = normalized_power(&subj.haar, &subj.f.values, 2.0)?;
        InequalityReport::logarithmic(&name, gap / l2, k, c * form_value / l2, params, opts.tol)
    } else {
        InequalityReport::linear(&name, gap, c * k * form_value, params, opts.tol)
    };
    Ok(report.on(&subj.label))
}

/// Kaplan-norm ball `{x : |y^{-1} x| < r}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: GroupPoint,
    pub radius: f64,
    pub convention: Convention,
}

impl Ball {
    pub fn new(center: GroupPoint, radius: f64, convention: Convention) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Ball(format!("radius must be positive, got {radius}")));
        }
        Ok(Self { center, radius, convention })
    }

    /// Whether `(ξ, τ)` lies in the open ball.
    pub fn contains(&self, xi: &[f64], tau: f64) -> bool {
        let c = &self.center;
        // y^{-1} x = (ξ − ξ_y, τ − τ_y + κ ω(−ξ_y, ξ)).
        let neg: Vec<f64> = c.xi.iter().map(|v| -v).collect();
        let t = tau - c.tau + self.convention.kappa() * symplectic(&neg, xi);
        let d_sq: f64 = xi.iter().zip(&c.xi).map(|(a, b)| (a - b) * (a - b)).sum();
        kaplan_norm_parts(d_sq, t, self.convention) < self.radius
    }

    /// Exact volume `r^Q π^n B(n/2, 3/2) / (√c Γ(n))`.
    pub fn volume(&self) -> f64 {
        let n = self.center.n as f64;
        let qd = 2.0 * n + 2.0;
        let ln_beta = ln_gamma(n / 2.0) + ln_gamma(1.5) - ln_gamma(n / 2.0 + 1.5);
        (qd * self.radius.ln() + n * PI.ln() + ln_beta - ln_gamma(n)).exp() / self.convention.tau_weight().sqrt()
    }
}

/// Haar quadrature weights restricted to a ball with a sharp indicator.
/// Cells whose corners disagree on membership are subsampled on a 3-point
/// rule per axis. Returns the weights and the effective volume.
pub fn ball_weights(spec: &GridSpec, ball: &Ball) -> Result<(Vec<f64>, f64)> {
    if ball.center.n != spec.n {
        return Err(Error::Dimension(format!("ball in H^{} on a grid of H^{}", ball.center.n, spec.n)));
    }
    let d = spec.dims_xi();
    let reach = ball.radius + ball.center.xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if reach >= spec.half_width_xi {
        return Err(Error::Ball("ball reaches the ξ faces of the grid box".into()));
    }
    let (hx, ht) = (spec.h_xi(), spec.h_tau());
    let base = quadrature_weights(spec, &Measure::Haar)?;
    let nt = spec.points_tau;
    let mut w = vec![0.0; spec.len()];
    let touches_tau_face = std::sync::atomic::AtomicBool::new(false);
    w.par_chunks_mut(nt).enumerate().for_each(|(node, line)| {
        let mut xi = vec![0.0; d];
        spec.xi_coords(node, &mut xi);
        let mut probe = vec![0.0; d];
        for (k, out) in line.iter_mut().enumerate() {
            let tau = spec.tau_coord(k);
            let inside = ball.contains(&xi, tau);
            let mut mixed = false;
            for corner in 0..(1usize << (d + 1)) {
                for a in 0..d {
                    probe[a] = xi[a] + if corner >> a & 1 == 1 { 0.5 * hx } else { -0.5 * hx };
                }
                let t = tau + if corner >> d & 1 == 1 { 0.5 * ht } else { -0.5 * ht };
                if ball.contains(&probe, t) != inside {
                    mixed = true;
                    break;
                }
            }
            let frac = if mixed {
                let total = 3usize.pow(d as u32 + 1);
                let mut hits = 0usize;
                for sub in 0..total {
                    let mut rest = sub;
                    for a in 0..d {
                        probe[a] = xi[a] + ((rest % 3) as f64 - 1.0) * hx / 3.0;
                        rest /= 3;
                    }
                    let t = tau + ((rest % 3) as f64 - 1.0) * ht / 3.0;
                    if ball.contains(&probe, t) {
                        hits += 1;
                    }
                }
                hits as f64 / total as f64
            } else if inside {
                1.0
            } else {
                0.0
            };
            if frac > 0.0 && (k == 0 || k + 1 == nt) {
                touches_tau_face.store(true, std::sync::atomic::Ordering::Relaxed);
            }
            *out = base[node * nt + k] * frac;
        }
    });
    if touches_tau_face.into_inner() {
        return Err(Error::Ball("ball reaches the τ faces of the grid box".into()));
    }
    let vol: f64 = w.iter().sum();
    if !(vol > 0.0) {
        return Err(Error::Ball("ball contains no grid cell".into()));
    }
    Ok((w, vol))
}

/// `(∫_B |g − g_B|², ∫_B |g|² − |∫_B g|²/Vol(B))` with the discrete volume.
pub fn ball_mean_deviation(g: &GridFunction, w: &[f64]) -> (f64, f64) {
    let vol: f64 = w.iter().sum();
    let mean_re = weighted_sum(w, g.values.iter().map(|v| v.re));
    let mean_im = weighted_sum(w, g.values.iter().map(|v| v.im));
    let mean = Complex64::new(mean_re, mean_im) / vol;
    let dev = weighted_sum(w, g.values.iter().map(|v| (v - mean).norm_sqr()));
    let expanded = power_integral(w, &g.values, 2.0) - (mean_re * mean_re + mean_im * mean_im) / vol;
    (dev, expanded)
}

/// Localized form on a ball: `∫_B |∇_ℍ g|²` at order 1 and
/// `Re ∫_B ḡ · m(ℒ) g` below it.
pub fn ball_form(g: &GridFunction, ball: &Ball, w: &[f64], variant: Variant, s: f64) -> Result<f64> {
    if s == 1.0 || variant == Variant::Horizontal {
        let stencil = Stencil::new(&g.spec, Convention::Std, Boundary::Free);
        return Ok(stencil.weighted_form(&g.values, |xi, t| if ball.contains(xi, t) { 1.0 } else { 0.0 }));
    }
    check_order(s)?;
    let m = match variant {
        Variant::Modified => Multiplier::Modified(s),
        _ => Multiplier::FracPower(s),
    };
    let c = analyze(g, &AnalysisConfig::default())?;
    let lg = synthesize(&apply_multiplier(&c, &m)?, &g.spec)?;
    Ok(weighted_sum(w, g.values.iter().zip(&lg.values).map(|(a, b)| (a.conj() * b).re)))
}

/// Ball forms of the Poincaré inequality,
/// `∫_B |g|² − (∫_B |g|^{2/q})^q ≤ C (Q(q−1)/(2s)) form_B`.
pub fn check_ball_form(g: &GridFunction, ball: &Ball, q: f64, variant: Variant, s: f64, opts: &CheckOptions) -> Result<InequalityReport> {
    let s = if variant == Variant::Horizontal { 1.0 } else { s };
    if !(q > 1.0 || (q == 1.0 && variant != Variant::Horizontal)) {
        return param(format!("q={q} outside the admissible range"));
    }
    let n = g.spec.n;
    let (w, vol) = ball_weights(&g.spec, ball)?;
    let qd = homogeneous_dimension(n as u32);
    let c = variant_constant(n, s, variant, opts)?;
    let lhs = poincare_gap(&w, &g.values, q);
    let rhs = c * qd * (q - 1.0) / (2.0 * s) * ball_form(g, ball, &w, variant, s)?;
    Ok(InequalityReport::linear(&variant_name("ball_poincare", variant), lhs, rhs, Params::new(n).s(s).q(q), opts.tol)
        .note(format!("effective volume {vol:.6e}")))
}

/// Mean-deviation bound on a ball,
/// `∫_B |g − g_B|² ≤ min_{s ∈ orders} C_{B,s} (Q/2s) ⟨ℒ_s g, g⟩_{L²(B)}`.
pub fn check_ball_poincare(g: &GridFunction, ball: &Ball, orders: &[f64], opts: &CheckOptions) -> Result<InequalityReport> {
    if orders.is_empty() {
        return param("need at least one order s");
    }
    let n = g.spec.n;
    let (w, vol) = ball_weights(&g.spec, ball)?;
    let qd = homogeneous_dimension(n as u32);
    let (lhs, _) = ball_mean_deviation(g, &w);
    let mut best = f64::INFINITY;
    let mut best_s = f64::NAN;
    let mut notes = Vec::new();
    for &s in orders {
        let c = sobolev_constant(n as u32, s)?;
        let form = ball_form(g, ball, &w, Variant::Modified, s)?;
        if !(form > 0.0) {
            notes.push(format!("skipped s={s}: localized form {form:.3e} is not positive"));
            continue;
        }
        let v = c * qd / (2.0 * s) * form;
        if v < best {
            best = v;
            best_s = s;
        }
    }
    let mut r = InequalityReport::linear("ball_mean_deviation", lhs, best, Params::new(n).s(best_s), opts.tol);
    r.notes = notes;
    r.notes.push(format!("effective volume {vol:.6e}, exact volume {:.6e}", ball.volume()));
    if ball.volume() > 1.0 {
        r.notes.push("ball volume exceeds 1; the bound is not covered by the hypothesis".into());
    }
    Ok(r)
}

/// Families of checks run by [`run_suite`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    All,
    Sobolev,
    LogSobolev,
    Gn,
    Hardy,
    Nash,
    Gross,
    Poincare,
}

impl Suite {
    fn includes(self, other: Suite) -> bool {
        self == Suite::All || self == other
    }
}

/// Order-and-variant grid used by the Sobolev, log-Sobolev and Nash suites.
fn order_variants(subj: &Subject, orders: &[f64]) -> Vec<(f64, Variant)> {
    let mut out = vec![(1.0, Variant::Horizontal)];
    for &s in orders {
        if s < 1.0 && !subj.is_radial() {
            continue;
        }
        out.push((s, Variant::Modified));
        out.push((s, Variant::FracPower));
    }
    out
}

/// Run every check of `suite` on whole-space subjects and ball subjects.
///
/// Checks that need fractional forms are skipped for non-radial subjects.
/// Reports come back in a deterministic order.
pub fn run_suite(suite: Suite, subjects: &[Subject], ball_subjects: &[(GridFunction, Ball)], opts: &CheckOptions) -> Result<Vec<InequalityReport>> {
    let per_subject: Vec<Result<Vec<InequalityReport>>> =
        subjects.par_iter().map(|subj| subject_checks(suite, subj, opts)).collect();
    let mut out = Vec::new();
    for r in per_subject {
        out.extend(r?);
    }
    if suite.includes(Suite::Poincare) {
        for (i, (g, ball)) in ball_subjects.iter().enumerate() {
            let label = format!("ball#{i}");
            let radial = analyze(g, &AnalysisConfig::default()).is_ok();
            let orders: &[f64] = if radial { &[0.5, 0.75, 1.0] } else { &[1.0] };
            for q in [1.5, 2.0] {
                out.push(check_ball_form(g, ball, q, Variant::Horizontal, 1.0, opts)?.on(&label));
                if radial {
                    out.push(check_ball_form(g, ball, q, Variant::Modified, 0.5, opts)?.on(&label));
                    out.push(check_ball_form(g, ball, q, Variant::FracPower, 0.5, opts)?.on(&label));
                }
            }
            out.push(check_ball_poincare(g, ball, orders, opts)?.on(&label));
        }
    }
    Ok(out)
}

fn subject_checks(suite: Suite, subj: &Subject, opts: &CheckOptions) -> Result<Vec<InequalityReport>> {
    let mut out = Vec::new();
    let radial = subj.is_radial();
    let all_orders = [0.25, 0.5, 0.75, 1.0];
    if suite.includes(Suite::Sobolev) {
        for (s, v) in order_variants(subj, &all_orders) {
            out.push(check_sobolev(subj, s, v, opts)?);
        }
    }
    if suite.includes(Suite::LogSobolev) {
        for (s, v) in order_variants(subj, &all_orders) {
            out.push(check_log_sobolev(subj, s, v, opts)?);
        }
        out.push(check_log_sobolev_unit(subj, opts)?);
        for (p, q) in [(2.0, 4.0), (1.5, 3.0)] {
            out.push(check_log_holder(&subj.f, p, q, &Measure::Haar, opts)?.on(&subj.label));
        }
    }
    if suite.includes(Suite::Gn) {
        let gn_sets: &[(f64, f64, f64)] = if radial { &[(0.5, 3.0, 4.0), (1.0, 5.0, 6.0)] } else { &[(1.0, 5.0, 6.0)] };
        for &(s, q, sigma) in gn_sets {
            for v in [Variant::Modified, Variant::FracPower] {
                out.push(check_gagliardo_nirenberg(subj, s, q, sigma, v, opts)?);
                out.push(check_log_gn(subj, s, q, sigma, v, opts)?);
            }
        }
        let two_sets: &[(f64, f64, f64)] =
            if radial { &[(1.0, 0.0, 3.0), (0.75, 0.25, 2.8), (0.5, 0.0, 2.4)] } else { &[(1.0, 0.0, 3.0)] };
        for &(s1, s2, q) in two_sets {
            for v in [Variant::Modified, Variant::FracPower] {
                out.push(check_gn_two(subj, s1, s2, q, v, GnConstant::Chain, opts)?);
            }
        }
        out.push(check_gn_two(subj, 1.0, 0.0, 3.0, Variant::Modified, GnConstant::Sharp, opts)?);
    }
    if suite.includes(Suite::Hardy) && radial {
        for s in [0.25, 0.5, 0.75] {
            out.push(check_hardy(subj, s, opts)?);
        }
        for beta in [0.0, 0.3, 0.5, 1.0] {
            out.push(check_hardy_sobolev(subj, 0.5, beta, opts)?);
        }
        for beta in [0.0, 0.3, 0.5] {
            out.push(check_weighted_log_sobolev(subj, 0.5, beta, opts)?);
        }
        for beta in [0.0, 0.25] {
            out.push(check_log_hardy(subj, 0.5, beta, opts)?);
        }
        out.push(check_log_hardy_radial(subj, 0.5, opts)?);
    }
    if suite.includes(Suite::Nash) {
        for (s, v) in order_variants(subj, &[0.5, 1.0]) {
            out.push(check_nash(subj, s, v, opts)?);
        }
    }
    if suite.includes(Suite::Gross) {
        let eq = check_equivalence(subj, opts)?;
        let residual = eq.norm_residual;
        out.push(eq.gaussian.note(format!("norm identity residual {residual:.3e}")));
        out.push(eq.horizontal);
    }
    if suite.includes(Suite::Poincare) {
        let g = gross_transform(&subj.f)?;
        for p in [1.0, 1.5] {
            out.push(check_poincare_mu(&g, p, opts)?.on(&subj.label));
        }
        for q in [1.5, 2.0] {
            for form in PoincareForm::ALL {
                if form.variant() != Variant::Horizontal && !radial {
                    continue;
                }
                out.push(check_poincare_haar(subj, q, form, 0.5, opts)?);
            }
        }
    }
    Ok(out)
}

/// Closed-form profiles of the standard battery on ℍ¹, as
/// `(label, f(ξ, τ))`.
pub type Profile = (&'static str, fn(&[f64], f64) -> f64);

fn r2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

fn gauss(x: &[f64], t: f64, a: f64, b: f64) -> f64 {
    (-0.5 * a * r2(x) - 0.5 * b * t * t).exp()
}

/// `((ε² + |ξ|²)² + 16τ²)^{−1/2}`, the first-order trial profile on ℍ¹,
/// with a smooth taper `e^{−|x|⁴/R⁴}` at `R = 4`.
pub fn tapered_trial(x: &[f64], t: f64, eps: f64) -> f64 {
    let rr = r2(x);
    let k4 = (eps * eps + rr).powi(2) + 16.0 * t * t;
    let taper = (-(rr * rr + 16.0 * t * t) / 256.0).exp();
    k4.powf(-0.25 * (homogeneous_dimension(1) - 2.0)) * taper
}

fn bump(rho_sq: f64) -> f64 {
    if rho_sq < 1.0 {
        (1.0 - 1.0 / (1.0 - rho_sq)).exp()
    } else {
        0.0
    }
}

/// The standard whole-space battery: 16 ξ-radial and 5 non-radial profiles.
pub fn standard_profiles() -> Vec<Profile> {
    vec![
        ("gauss_1_1", |x, t| gauss(x, t, 1.0, 1.0)),
        ("gauss_2_2", |x, t| gauss(x, t, 2.0, 2.0)),
        ("gauss_0.5_0.5", |x, t| gauss(x, t, 0.5, 0.5)),
        ("gauss_1_4", |x, t| gauss(x, t, 1.0, 4.0)),
        ("gauss_4_1", |x, t| gauss(x, t, 4.0, 1.0)),
        ("gauss_0.5_2", |x, t| gauss(x, t, 0.5, 2.0)),
        ("gauss_2_0.5", |x, t| gauss(x, t, 2.0, 0.5)),
        ("ring", |x, t| r2(x) * gauss(x, t, 1.0, 1.0)),
        ("tau_shift", |x, t| gauss(x, t - 1.0, 1.0, 1.0)),
        ("cos_tau", |x, t| t.cos() * gauss(x, t, 1.0, 1.0)),
        ("hermite_radial", |x, t| (1.0 - 0.5 * r2(x)) * gauss(x, t, 1.0, 1.0)),
        ("cos_radius", |x, t| (1.5 * r2(x).sqrt()).cos() * gauss(x, t, 1.0, 1.0)),
        ("trial_eps_1", |x, t| tapered_trial(x, t, 1.0)),
        ("trial_eps_2", |x, t| tapered_trial(x, t, 2.0)),
        ("bump_center", |x, t| bump((r2(x) * r2(x) + 16.0 * t * t) / 81.0)),
        ("bump_tau_shift", |x, t| bump((r2(x) * r2(x) + 16.0 * (t - 1.5) * (t - 1.5)) / 81.0)),
        ("gauss_xi_shift", |x, t| {
            let d = [x[0] - 1.0, x[1]];
            gauss(&d, t, 1.0, 1.0)
        }),
        ("gauss_xi_aniso", |x, t| (-0.5 * x[0] * x[0] - x[1] * x[1] - 0.5 * t * t).exp()),
        ("gauss_tilt", |x, t| (1.0 + 0.5 * x[0]) * gauss(x, t, 1.0, 1.0) + 0.0 * t),
        ("bump_xi_shift", |x, t| {
            let d = [x[0] - 1.5, x[1] + 0.5];
            bump((r2(&d) * r2(&d) + 16.0 * t * t) / 81.0)
        }),
        ("gauss_twist", |x, t| (-0.5 * r2(x) - 0.5 * (t - 0.5 * x[0] * x[1]).powi(2)).exp()),
    ]
}

/// Sample the standard battery on `spec` (which must be a grid of ℍ¹).
pub fn standard_battery(spec: &GridSpec) -> Result<Vec<Subject>> {
    if spec.n != 1 {
        return param("the standard battery is defined on H^1");
    }
    standard_profiles()
        .into_iter()
        .map(|(label, f)| Subject::new(label, GridFunction::from_real_fn(spec, f)))
        .collect()
}

/// Grid of the ball battery: `[−1.4, 1.4]² × [−0.5, 0.5]` with 64 points per
/// axis.
pub fn ball_grid() -> Result<GridSpec> {
    GridSpec::new(1, 1.4, 0.5, 64, 64)
}

/// Ball functions on [`ball_grid`]: bumps supported inside the Kaplan ball
/// of radius 0.9 at the origin, whose volume `0.9⁴ π²/8` is below 1.
pub fn ball_battery(spec: &GridSpec) -> Result<Vec<(GridFunction, Ball)>> {
    let ball = Ball::new(GroupPoint::identity(1), 0.9, Convention::Std)?;
    let r4 = 0.85f64.powi(4);
    let kap4 = |x: &[f64], t: f64| (r2(x) * r2(x) + 16.0 * t * t) / r4;
    let shifted = |x: &[f64], t: f64| {
        let d = [x[0] - 0.2, x[1]];
        let tt = t + 0.5 * 0.2 * x[1];
        (r2(&d) * r2(&d) + 16.0 * tt * tt) / (0.6f64.powi(4))
    };
    Ok(vec![
        (GridFunction::from_real_fn(spec, |x, t| bump(kap4(x, t))), ball.clone()),
        (GridFunction::from_real_fn(spec, |x, t| (1.0 + r2(x)) * bump(kap4(x, t))), ball.clone()),
        (GridFunction::from_real_fn(spec, |x, t| bump(kap4(x, t)).powi(2)), ball.clone()),
        (GridFunction::from_real_fn(spec, |x, t| bump(shifted(x, t))), ball),
    ])
}
