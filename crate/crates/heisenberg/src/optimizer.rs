//! Best-constant estimation by minimizing Rayleigh-type quotients.
//!
//! The Sobolev quotient `J(f) = form(f) / ‖f‖²_{2Q/(Q−2s)}` and the Nash
//! quotient `‖f‖₁^{4/Q} ‖∇_ℍ f‖² / ‖f‖₂^{2+4/Q}` are minimized over real grid
//! functions on ℍ¹ by projected gradient descent with Barzilai–Borwein steps
//! and Armijo backtracking. Iterates vanish on the `τ` faces and the stencil
//! uses zero ghost nodes past the `ξ` faces, so every iterate is a compactly
//! supported function and the quotient cannot collapse onto box constants.
//!
//! Fractional orders work on ξ-radial iterates: after every step the iterate
//! is averaged over the shells of equal `|ξ|` and resynthesized from its
//! coefficients on the Laguerre–Fourier lattice fixed by the starting
//! function, where the spectral form is evaluated.
//!
//! Starting points come from the heuristic trial family
//! `K_ε(x) = ((ε² + |ξ|²)² + 16τ²)^{−(Q−2s)/4}`, multiplied by a smooth
//! cutoff that vanishes before the box faces, plus random smooth seeds.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::calculus::{quadrature_weights, Boundary, GridFunction, GridSpec, Measure, Stencil};
use crate::constants::{homogeneous_dimension, sobolev_constant, sobolev_constant_int, us_bound};
use crate::error::{param, Error, Result};
use crate::group::{symplectic, Convention, GroupPoint};
use crate::inequalities::Variant;
use crate::spectral::{
    analysis_adjoint, analyze, analyze_on, plancherel_weight, radial_profile, AnalysisConfig, Multiplier,
    RadialShells, SpectralCoefficients,
    synthesize,
};

/// Settings of one optimization run.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    /// Order of the form; the Nash quotient ignores it and uses 1.
    pub s: f64,
    pub variant: Variant,
    /// Grid of ℍ¹ the iterates live on.
    pub grid: GridSpec,
    pub max_iters: usize,
    /// Length of the first step relative to `‖f‖_∞ / ‖∇J‖_∞`.
    pub step_size: f64,
    /// Backtracking halvings allowed per step.
    pub max_halvings: usize,
    /// Random smooth seeds on top of the trial-family start.
    pub restart_count: usize,
    pub seed: u64,
    /// Scales `ε` scanned in the trial family.
    pub trial_scales: Vec<f64>,
    /// Centers of the trial family, as left translations.
    pub trial_centers: Vec<GroupPoint>,
    /// Stop when the relative decrease of `J` stays below this for three
    /// consecutive steps.
    pub tolerance: f64,
    /// Coordinates used by the finite-difference gradient check.
    pub fd_coordinates: usize,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            s: 1.0,
            variant: Variant::Horizontal,
            grid: GridSpec::new(1, 8.0, 8.0, 48, 48).expect("static grid"),
            max_iters: 60,
            step_size: 0.1,
            max_halvings: 30,
            restart_count: 2,
            seed: 0,
            trial_scales: vec![0.25, 0.5, 0.75, 1.0, 1.5, 2.0],
            trial_centers: vec![GroupPoint::identity(1)],
            tolerance: 1e-6,
            fd_coordinates: 10,
        }
    }
}

impl OptimizerConfig {
    fn validate(&self) -> Result<()> {
        if self.grid.n != 1 {
            return param("the optimizer works on grids of H^1");
        }
        if !(self.step_size > 0.0 && self.tolerance > 0.0) {
            return param("step size and tolerance must be positive");
        }
        if !(self.s > 0.0 && self.s <= 1.0) {
            return param(format!("order s must lie in (0, 1], got {}", self.s));
        }
        if self.variant == Variant::Horizontal && self.s != 1.0 {
            return param("the horizontal form has order 1");
        }
        if self.trial_scales.iter().any(|e| !(*e > 0.0)) {
            return param("trial scales must be positive");
        }
        if self.trial_centers.iter().any(|c| c.n != 1) {
            return Err(Error::Dimension("trial centers must be points of H^1".into()));
        }
        Ok(())
    }
}

/// Outcome of a multi-start minimization.
#[derive(Debug, Clone)]
pub struct OptimizationResult {
    /// Smallest quotient found.
    pub best_quotient: f64,
    /// `1 / best_quotient`, comparable to the constant of the inequality.
    pub implied_constant: f64,
    /// The closed-form constant the inequality is stated with.
    pub reference_constant: f64,
    /// Iterations of the winning run.
    pub iterations: usize,
    pub converged: bool,
    /// Largest relative analytic-vs-finite-difference gradient error seen
    /// over all runs.
    pub gradient_check: f64,
    /// Accepted quotients of the winning run, starting value first.
    pub trace: Vec<f64>,
    /// Label of the winning start.
    pub start: String,
    /// Minimizer snapshot, normalized.
    pub argmin: GridFunction,
    /// Trial-family rows `(ε, center index, quotient)` from the scan.
    pub trial_scan: Vec<TrialRow>,
}

/// One evaluation of the trial family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialRow {
    pub eps: f64,
    pub center: usize,
    pub quotient: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Target {
    Sobolev,
    Nash,
}

/// Discretized quotient together with everything needed for its gradient.
struct Problem {
    spec: GridSpec,
    target: Target,
    stencil: Stencil,
    weights: Vec<f64>,
    cell: f64,
    /// Exponent of the norm in the denominator.
    p: f64,
    /// Spectral form for fractional orders.
    spectral: Option<(SpectralCoefficients, Multiplier)>,
    shells: Option<RadialShells>,
}

impl Problem {
    fn new(cfg: &OptimizerConfig, target: Target, seed: Option<&[f64]>) -> Result<Self> {
        let spec = cfg.grid.clone();
        let qd = homogeneous_dimension(1);
        let s = if target == Target::Nash { 1.0 } else { cfg.s };
        let weights = quadrature_weights(&spec, &Measure::Haar)?;
        let stencil = Stencil::new(&spec, Convention::Std, Boundary::Dirichlet);
        let cell = spec.h_xi().powi(spec.dims_xi() as i32) * spec.h_tau();
        let fractional = target == Target::Sobolev && s < 1.0;
        let shells = fractional.then(|| RadialShells::new(&spec));
        let spectral = match (fractional, seed) {
            (true, Some(seed)) => {
                let m = match cfg.variant {
                    Variant::Modified => Multiplier::Modified(s),
                    _ => Multiplier::FracPower(s),
                };
                let lattice = analyze(&to_grid(&spec, seed), &AnalysisConfig::default())?;
                Some((lattice, m))
            }
            (true, None) => return param("fractional problems need a seed to fix the spectral lattice"),
            _ => None,
        };
        Ok(Self { spec, target, stencil, weights, cell, p: 2.0 * qd / (qd - 2.0 * s), spectral, shells })
    }

    /// Form and its gradient with respect to the grid values.
    fn form(&self, f: &[f64]) -> Result<(f64, Vec<f64>)> {
        if let Some((lattice, m)) = &self.spectral {
            let c = analyze_on(&to_grid(&self.spec, f), lattice)?;
            let value = c.energy(m);
            let mut y = c;
            for (j, row) in y.coeffs.iter_mut().enumerate() {
                let lam = y.lambda_grid[j];
                let w = y.lambda_weights[j] * plancherel_weight(y.n, lam);
                for (k, v) in row.iter_mut().enumerate() {
                    *v *= w * m.eval(y.n, k, lam);
                }
            }
            let back = analysis_adjoint(&y, &self.spec)?;
            Ok((value, back.values.iter().map(|v| 2.0 * v.re).collect()))
        } else {
            let values: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let lf = self.stencil.sublaplacian(&values);
            let value = self.cell * f.iter().zip(&lf).map(|(a, b)| a * b.re).sum::<f64>();
            Ok((value, lf.iter().map(|v| 2.0 * self.cell * v.re).collect()))
        }
    }

    fn power(&self, f: &[f64], p: f64) -> (f64, Vec<f64>) {
        let value: f64 = self.weights.iter().zip(f).map(|(w, v)| w * v.abs().powf(p)).sum();
        let grad = self.weights.iter().zip(f).map(|(w, v)| p * w * v.abs().powf(p - 1.0) * v.signum()).collect();
        (value, grad)
    }

    /// Quotient value and gradient.
    fn eval(&self, f: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (d, gd) = self.form(f)?;
        match self.target {
            Target::Sobolev => {
                let (pw, gp) = self.power(f, self.p);
                if !(pw > 0.0) {
                    return Err(Error::ZeroFunction);
                }
                let norm = pw.powf(2.0 / self.p);
                let j = d / norm;
                // ∂N = (2/p) P^{2/p − 1} ∂P.
                let dn = 2.0 / self.p * pw.powf(2.0 / self.p - 1.0);
                let g = gd.iter().zip(&gp).map(|(a, b)| (a - j * dn * b) / norm).collect();
                Ok((j, g))
            }
            Target::Nash => {
                let e = 4.0 / homogeneous_dimension(1);
                let (a, ga) = self.power(f, 1.0);
                let (b, gb) = self.power(f, 2.0);
                if !(a > 0.0 && b > 0.0) {
                    return Err(Error::ZeroFunction);
                }
                let j = a.powf(e) * d / b.powf(1.0 + e / 2.0);
                let g = (0..f.len())
                    .map(|i| j * (e * ga[i] / a + gd[i] / d - (1.0 + e / 2.0) * gb[i] / b))
                    .collect();
                Ok((j, g))
            }
        }
    }

    fn value(&self, f: &[f64]) -> Result<f64> {
        Ok(self.eval(f)?.0)
    }

    /// For fractional orders, average over shells and resynthesize from the
    /// fixed lattice, so no part of the iterate is invisible to the spectral
    /// form. Then zero the `τ` faces.
    fn project(&self, v: &mut [f64]) {
        let nt = self.spec.points_tau;
        if let (Some(shells), Some((lattice, _))) = (&self.shells, &self.spectral) {
            let (_, profile) = radial_profile(&to_grid(&self.spec, v), shells);
            for (node, line) in v.chunks_mut(nt).enumerate() {
                let s = shells.shell_of[node];
                for (k, x) in line.iter_mut().enumerate() {
                    *x = profile[s * nt + k].re;
                }
            }
            if let Ok(back) = analyze_on(&to_grid(&self.spec, v), lattice).and_then(|c| synthesize(&c, &self.spec)) {
                v.iter_mut().zip(&back.values).for_each(|(x, b)| *x = b.re);
            }
        }
        for line in v.chunks_mut(nt) {
            line[0] = 0.0;
            line[nt - 1] = 0.0;
        }
    }

    /// [`Problem::project`] plus, for the Nash quotient, the constraint
    /// `f ≥ 0`. Replacing `f` by `|f|` never raises the Nash quotient, and on
    /// the nonnegative cone `‖f‖₁` is linear, so its gradient `w` is exact
    /// there.
    fn constrain(&self, v: &mut [f64]) {
        self.project(v);
        if self.target == Target::Nash {
            v.iter_mut().for_each(|x| *x = x.max(0.0));
        }
    }

    /// Rescale so the quotient's normalizing norm is 1.
    fn normalize(&self, f: &mut [f64]) -> Result<()> {
        let p = match self.target {
            Target::Sobolev => self.p,
            Target::Nash => 2.0,
        };
        let (pw, _) = self.power(f, p);
        if !(pw > 0.0) {
            return Err(Error::ZeroFunction);
        }
        let c = pw.powf(-1.0 / p);
        f.iter_mut().for_each(|v| *v *= c);
        Ok(())
    }

    fn reference_constant(&self, cfg: &OptimizerConfig) -> Result<f64> {
        match (self.target, cfg.variant) {
            (Target::Nash, _) | (_, Variant::Horizontal) => sobolev_constant_int(1),
            (_, _) if cfg.s == 1.0 => sobolev_constant_int(1),
            (_, Variant::Modified) => sobolev_constant(1, cfg.s),
            (_, Variant::FracPower) => Ok(sobolev_constant(1, cfg.s)? * us_bound(1, cfg.s)?),
        }
    }

    /// Largest relative error between analytic and central-difference
    /// directional derivatives along `count` random coordinates. Fractional
    /// problems use shell-by-τ-index coordinates so perturbations stay radial.
    fn gradient_check(&self, f: &[f64], count: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
        let (_, g) = self.eval(f)?;
        let nt = self.spec.points_tau;
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let directions: Vec<Vec<usize>> = match &self.shells {
            Some(shells) => {
                let mut members: Vec<Vec<usize>> = vec![Vec::new(); shells.len()];
                for (node, &s) in shells.shell_of.iter().enumerate() {
                    members[s].push(node);
                }
                let mut out = Vec::new();
                let mut attempts = 0;
                while out.len() < count && attempts < 100 * count {
                    attempts += 1;
                    let s = rng.random_range(0..shells.len());
                    let k = rng.random_range(1..nt - 1);
                    let idx: Vec<usize> = members[s].iter().map(|node| node * nt + k).collect();
                    let dd: f64 = idx.iter().map(|&i| g[i]).sum();
                    if dd.abs() > 1e-3 * gmax * idx.len() as f64 && f[idx[0]].abs() > 1e-3 * fmax {
                        out.push(idx);
                    }
                }
                out
            }
            None => {
                let mut out = Vec::new();
                let mut attempts = 0;
                while out.len() < count && attempts < 100 * count {
                    attempts += 1;
                    let i = rng.random_range(0..f.len());
                    if i % nt == 0 || i % nt == nt - 1 {
                        continue;
                    }
                    if g[i].abs() > 1e-3 * gmax && f[i].abs() > 1e-3 * fmax {
                        out.push(vec![i]);
                    }
                }
                out
            }
        };
        let delta = 1e-4 * fmax;
        let mut worst = 0.0f64;
        let mut work = f.to_vec();
        for idx in directions {
            let analytic: f64 = idx.iter().map(|&i| g[i]).sum();
            idx.iter().for_each(|&i| work[i] = f[i] + delta);
            let up = self.value(&work)?;
            idx.iter().for_each(|&i| work[i] = f[i] - delta);
            let down = self.value(&work)?;
            idx.iter().for_each(|&i| work[i] = f[i]);
            let fd = (up - down) / (2.0 * delta);
            worst = worst.max((fd - analytic).abs() / analytic.abs());
        }
        Ok(worst)
    }
}

fn to_grid(spec: &GridSpec, f: &[f64]) -> GridFunction {
    GridFunction { spec: spec.clone(), values: f.iter().map(|&v| Complex64::new(v, 0.0)).collect() }
}

/// Smooth cutoff equal to 1 on the inner half of the largest Kaplan ball
/// inside the box and 0 outside it.
fn box_cutoff(spec: &GridSpec, xi_sq: f64, tau: f64) -> f64 {
    let outer = 0.95 * spec.half_width_xi.min(2.0 * spec.half_width_tau.sqrt());
    let k = (xi_sq * xi_sq + 16.0 * tau * tau).sqrt().sqrt() / outer;
    if k < 0.5 {
        1.0
    } else if k < 1.0 {
        (std::f64::consts::PI * (k - 0.5)).cos().powi(2)
    } else {
        0.0
    }
}

/// Trial profile `K_ε(y⁻¹x)` times the box cutoff, for order `s`.
pub fn trial_function(spec: &GridSpec, s: f64, eps: f64, center: &GroupPoint) -> GridFunction {
    let qd = homogeneous_dimension(spec.n as u32);
    let expo = -(qd - 2.0 * s) / 4.0;
    let kappa = Convention::Std.kappa();
    let neg: Vec<f64> = center.xi.iter().map(|v| -v).collect();
    GridFunction::from_real_fn(spec, |x, t| {
        let d_sq: f64 = x.iter().zip(&center.xi).map(|(a, b)| (a - b) * (a - b)).sum();
        let tt = t - center.tau + kappa * symplectic(&neg, x);
        let k4 = (eps * eps + d_sq).powi(2) + 16.0 * tt * tt;
        k4.powf(expo) * box_cutoff(spec, x.iter().map(|v| v * v).sum(), t)
    })
}

fn random_seed(spec: &GridSpec, radial: bool, rng: &mut ChaCha8Rng) -> GridFunction {
    let bumps: Vec<[f64; 6]> = (0..3)
        .map(|_| {
            let (cx, cy) = if radial { (0.0, 0.0) } else { (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) };
            [
                rng.random_range(0.5..1.0),
                rng.random_range(0.05..0.5),
                rng.random_range(0.05..0.5),
                rng.random_range(-1.0..1.0),
                cx,
                cy,
            ]
        })
        .collect();
    GridFunction::from_real_fn(spec, |x, t| {
        let v: f64 = bumps
            .iter()
            .map(|b| {
                let r2 = (x[0] - b[4]).powi(2) + (x[1] - b[5]).powi(2);
                b[0] * (-b[1] * r2 - b[2] * (t - b[3]).powi(2)).exp()
            })
            .sum();
        v * box_cutoff(spec, x[0] * x[0] + x[1] * x[1], t)
    })
}

fn real_values(f: &GridFunction) -> Vec<f64> {
    f.values.iter().map(|v| v.re).collect()
}

struct Run {
    quotient: f64,
    iterations: usize,
    converged: bool,
    trace: Vec<f64>,
    argmin: Vec<f64>,
}

/// Projected Barzilai–Borwein descent with Armijo backtracking.
fn descend(problem: &Problem, start: &[f64], cfg: &OptimizerConfig) -> Result<Run> {
    let mut f = start.to_vec();
    problem.constrain(&mut f);
    problem.normalize(&mut f)?;
    let (mut j, mut g) = problem.eval(&f)?;
    problem.project(&mut g);
    let mut trace = vec![j];
    let fmax = f.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut alpha = if gmax > 0.0 { cfg.step_size * fmax / gmax } else { 0.0 };
    let mut quiet = 0;
    let mut converged = false;
    let mut iterations = 0;
    let mut trial = vec![0.0; f.len()];
    while iterations < cfg.max_iters && alpha > 0.0 {
        iterations += 1;
        let mut step = alpha;
        let mut accepted = None;
        for _ in 0..=cfg.max_halvings {
            for ((t, a), b) in trial.iter_mut().zip(&f).zip(&g) {
                *t = a - step * b;
            }
            problem.constrain(&mut trial);
            // Armijo condition along the projected path.
            let decrease: f64 = g.iter().zip(&f).zip(&trial).map(|((gi, a), b)| gi * (a - b)).sum();
            if let Ok(jt) = problem.value(&trial) {
                if decrease > 0.0 && jt <= j - 1e-4 * decrease {
                    accepted = Some(jt);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(_) = accepted else {
            converged = true;
            break;
        };
        problem.normalize(&mut trial)?;
        let (jn, mut gn) = problem.eval(&trial)?;
        problem.project(&mut gn);
        // BB1 step from the accepted displacement.
        let mut sy = 0.0;
        let mut ss = 0.0;
        for i in 0..f.len() {
            let si = trial[i] - f[i];
            sy += si * (gn[i] - g[i]);
            ss += si * si;
        }
        alpha = if sy > 0.0 { ss / sy } else { 2.0 * step };
        let rel = (j - jn) / j;
        std::mem::swap(&mut f, &mut trial);
        g = gn;
        j = jn;
        trace.push(j);
        quiet = if rel < cfg.tolerance { quiet + 1 } else { 0 };
        if quiet >= 3 {
            converged = true;
            break;
        }
    }
    Ok(Run { quotient: j, iterations, converged, trace, argmin: f })
}

/// Quotient of every trial-family member on the configured grid.
pub fn scan_trial_family(cfg: &OptimizerConfig) -> Result<Vec<TrialRow>> {
    cfg.validate()?;
    let radial = cfg.s < 1.0;
    let mut rows = Vec::new();
    for (ci, center) in cfg.trial_centers.iter().enumerate() {
        if radial && center.xi.iter().any(|v| *v != 0.0) {
            continue;
        }
        for &eps in &cfg.trial_scales {
            let f = real_values(&trial_function(&cfg.grid, cfg.s, eps, center));
            let problem = Problem::new(cfg, Target::Sobolev, Some(&f))?;
            let mut f = f;
            problem.project(&mut f);
            rows.push(TrialRow { eps, center: ci, quotient: problem.value(&f)? });
        }
    }
    if rows.is_empty() {
        return param("no admissible trial center");
    }
    Ok(rows)
}

fn minimize(cfg: &OptimizerConfig, target: Target) -> Result<OptimizationResult> {
    cfg.validate()?;
    let radial = target == Target::Sobolev && cfg.s < 1.0;
    let scan = scan_trial_family(cfg)?;
    let best = scan.iter().min_by(|a, b| a.quotient.total_cmp(&b.quotient)).copied().expect("nonempty scan");
    let mut starts: Vec<(String, Vec<f64>)> = vec![(
        format!("trial eps={} center={}", best.eps, best.center),
        real_values(&trial_function(&cfg.grid, cfg.s, best.eps, &cfg.trial_centers[best.center])),
    )];
    for r in 0..cfg.restart_count {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(r as u64));
        starts.push((format!("random seed={}", cfg.seed.wrapping_add(r as u64)), real_values(&random_seed(&cfg.grid, radial, &mut rng))));
    }
    let runs: Vec<Result<(String, Run, f64, f64)>> = starts
        .into_par_iter()
        .enumerate()
        .map(|(i, (label, f0))| {
            let problem = Problem::new(cfg, target, Some(&f0))?;
            let reference = problem.reference_constant(cfg)?;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ (0x5eed_0000 + i as u64));
            let mut f = f0;
            problem.constrain(&mut f);
            problem.normalize(&mut f)?;
            let check = if cfg.fd_coordinates > 0 { problem.gradient_check(&f, cfg.fd_coordinates, &mut rng)? } else { 0.0 };
            let run = descend(&problem, &f, cfg)?;
            Ok((label, run, check, reference))
        })
        .collect();
    let mut best_run: Option<(String, Run)> = None;
    let mut gradient_check = 0.0f64;
    let mut reference = f64::NAN;
    for r in runs {
        let (label, run, check, refc) = r?;
        gradient_check = gradient_check.max(check);
        reference = refc;
        if best_run.as_ref().is_none_or(|(_, b)| run.quotient < b.quotient) {
            best_run = Some((label, run));
        }
    }
    let (start, run) = best_run.expect("at least one start");
    Ok(OptimizationResult {
        best_quotient: run.quotient,
        implied_constant: 1.0 / run.quotient,
        reference_constant: reference,
        iterations: run.iterations,
        converged: run.converged,
        gradient_check,
        trace: run.trace,
        start,
        argmin: to_grid(&cfg.grid, &run.argmin),
        trial_scan: scan,
    })
}

/// Minimize `form(f) / ‖f‖²_{2Q/(Q−2s)}` for the configured variant.
/// Order 1 uses the stencil form for every variant.
pub fn minimize_sobolev_quotient(cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    minimize(cfg, Target::Sobolev)
}

/// Minimize the Nash quotient `‖f‖₁^{4/Q} ‖∇_ℍ f‖² / ‖f‖₂^{2+4/Q}`.
pub fn minimize_nash_quotient(cfg: &OptimizerConfig) -> Result<OptimizationResult> {
    let cfg = OptimizerConfig { s: 1.0, variant: Variant::Horizontal, ..cfg.clone() };
    minimize(&cfg, Target::Nash)
}

/// Sobolev quotient of one function with the optimizer's discretization.
pub fn sobolev_quotient(cfg: &OptimizerConfig, f: &GridFunction) -> Result<f64> {
    cfg.validate()?;
    let v = real_values(f);
    Problem::new(cfg, Target::Sobolev, Some(&v))?.value(&v)
}

/// Nash quotient of one function with the optimizer's discretization.
pub fn nash_quotient(cfg: &OptimizerConfig, f: &GridFunction) -> Result<f64> {
    let v = real_values(f);
    Problem::new(cfg, Target::Nash, None)?.value(&v)
}
