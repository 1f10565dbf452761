//! The sub-Laplacian heat equation `∂_t f + ℒf = 0` and its Nash decay bound.
//!
//! Two solvers are provided. `SpectralExp` damps the Laguerre–Fourier
//! coefficients of a ξ-radial initial datum by `e^{−(2k+n)|λ|t}` and is exact
//! up to the analysis resolution. `ExplicitEuler` steps `f ← f − dt ℒ_h f`
//! with the flow-difference stencil, zero ghost nodes past the `ξ` faces,
//! and a step of 0.9 times the stability limit `2/λ_max(ℒ_h)` measured by
//! power iteration.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::calculus::{quadrature_weights, Boundary, GridFunction, GridSpec, Measure, Stencil};
use crate::constants::{homogeneous_dimension, sobolev_constant_int};
use crate::error::{param, Error, Result};
use crate::group::Convention;
use crate::inequalities::{InequalityReport, Params, DEFAULT_TOL};
use crate::spectral::{analyze, propagate, synthesize, AnalysisConfig, SpectralCoefficients};

/// Time integrator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatMethod {
    SpectralExp,
    ExplicitEuler,
}

impl HeatMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            HeatMethod::SpectralExp => "spectral",
            HeatMethod::ExplicitEuler => "euler",
        }
    }
}

/// Norms of a solution sampled at uniformly spaced output times.
#[derive(Debug, Clone)]
pub struct HeatTrajectory {
    pub method: HeatMethod,
    pub times: Vec<f64>,
    pub l2_norms: Vec<f64>,
    /// Signed integrals `∫ f(t)`.
    pub l1_masses: Vec<f64>,
    /// Right side of the decay estimate at each time.
    pub bound_values: Vec<f64>,
    /// Share of `Σ|f|²` on the box faces, a proxy for boundary leakage.
    pub boundary_fractions: Vec<f64>,
    /// Smallest value of `f(t)` relative to `max f₀`.
    pub min_values: Vec<f64>,
    /// Internal step of the Euler scheme.
    pub dt: Option<f64>,
    /// Stability limit `2/λ_max` of the Euler scheme.
    pub dt_limit: Option<f64>,
    pub final_state: GridFunction,
    /// Coefficients of the final state for the spectral method.
    pub final_coefficients: Option<SpectralCoefficients>,
}

impl HeatTrajectory {
    /// Column names of [`HeatTrajectory::rows`].
    pub fn header() -> [&'static str; 6] {
        ["t", "l2_norm", "l1_mass", "bound", "boundary_fraction", "min_value"]
    }

    /// One row of numbers per output time.
    pub fn rows(&self) -> Vec<[f64; 6]> {
        (0..self.times.len())
            .map(|i| {
                [
                    self.times[i],
                    self.l2_norms[i],
                    self.l1_masses[i],
                    self.bound_values[i],
                    self.boundary_fractions[i],
                    self.min_values[i],
                ]
            })
            .collect()
    }

    /// Largest relative deviation of the mass from its initial value.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.l1_masses[0];
        self.l1_masses.iter().map(|m| (m - m0).abs() / m0.abs()).fold(0.0, f64::max)
    }

    /// Whether some sample fell below `−tol · max f₀`.
    pub fn negativity(&self, tol: f64) -> bool {
        self.min_values.iter().any(|&m| m < -tol)
    }
}

/// `(‖f₀‖₂^{−4/Q} + (4/(Q C_{B,1})) ‖f₀‖₁^{−4/Q} t)^{−Q/4}`.
pub fn decay_bound(n: usize, l1: f64, l2: f64, t: f64) -> Result<f64> {
    let qd = homogeneous_dimension(n as u32);
    let c = sobolev_constant_int(n as u32)?;
    let e = -4.0 / qd;
    Ok((l2.powf(e) + 4.0 / (qd * c) * l1.powf(e) * t).powf(-qd / 4.0))
}

/// Grid of ℍ¹ wide enough that a unit Gaussian spreads for two time units
/// without visible mass loss: `[−11, 11]² × [−20, 20]`, 96 × 96 × 192 nodes.
pub fn heat_grid() -> Result<GridSpec> {
    GridSpec::new(1, 11.0, 20.0, 96, 192)
}

/// `(∫|f|, ‖f‖₂)` against Haar measure.
pub fn initial_norms(f: &GridFunction) -> Result<(f64, f64)> {
    let w = quadrature_weights(&f.spec, &Measure::Haar)?;
    let l1: f64 = w.iter().zip(&f.values).map(|(w, v)| w * v.norm()).sum();
    let l2: f64 = w.iter().zip(&f.values).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt();
    Ok((l1, l2))
}

struct Recorder {
    weights: Vec<f64>,
    n: usize,
    l1_0: f64,
    l2_0: f64,
    peak: f64,
    traj: HeatTrajectory,
}

impl Recorder {
    fn new(f0: &GridFunction, method: HeatMethod) -> Result<Self> {
        let weights = quadrature_weights(&f0.spec, &Measure::Haar)?;
        let (l1_0, l2_0) = initial_norms(f0)?;
        let traj = HeatTrajectory {
            method,
            times: Vec::new(),
            l2_norms: Vec::new(),
            l1_masses: Vec::new(),
            bound_values: Vec::new(),
            boundary_fractions: Vec::new(),
            min_values: Vec::new(),
            dt: None,
            dt_limit: None,
            final_state: f0.clone(),
            final_coefficients: None,
        };
        Ok(Self { weights, n: f0.spec.n, l1_0, l2_0, peak: f0.max_abs(), traj })
    }

    fn record(&mut self, t: f64, f: &GridFunction) -> Result<()> {
        let tr = &mut self.traj;
        tr.times.push(t);
        tr.l2_norms.push(self.weights.iter().zip(&f.values).map(|(w, v)| w * v.norm_sqr()).sum::<f64>().sqrt());
        tr.l1_masses.push(self.weights.iter().zip(&f.values).map(|(w, v)| w * v.re).sum());
        tr.bound_values.push(if t == 0.0 { self.l2_0 } else { decay_bound(self.n, self.l1_0, self.l2_0, t)? });
        tr.boundary_fractions.push(f.boundary_fraction());
        tr.min_values.push(f.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min) / self.peak);
        Ok(())
    }
}

fn check_inputs(f0: &GridFunction, t_final: f64, steps: usize) -> Result<()> {
    if !(t_final > 0.0 && t_final.is_finite()) {
        return param(format!("final time must be positive, got {t_final}"));
    }
    if steps == 0 {
        return param("need at least one output step");
    }
    let peak = f0.max_abs();
    if !(peak > 0.0) {
        return Err(Error::ZeroFunction);
    }
    let low = f0.values.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    let imag = f0.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
    if low < -1e-12 * peak || imag > 1e-12 * peak {
        return param("the initial datum must be real and nonnegative");
    }
    Ok(())
}

/// Largest eigenvalue of the Dirichlet stencil `ℒ_h` by power iteration.
pub fn stencil_spectral_radius(spec: &GridSpec, iterations: usize) -> f64 {
    let stencil = Stencil::new(spec, Convention::Std, Boundary::Dirichlet);
    let mut rng = ChaCha8Rng::seed_from_u64(0x4ea7);
    let mut v: Vec<Complex64> = (0..spec.len()).map(|_| Complex64::new(rng.random_range(-1.0..1.0), 0.0)).collect();
    let mut estimate = 0.0;
    for _ in 0..iterations {
        let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|x| *x /= norm);
        let lv = stencil.sublaplacian(&v);
        estimate = v.iter().zip(&lv).map(|(a, b)| (a.conj() * b).re).sum::<f64>();
        v = lv;
    }
    estimate
}

/// Solve the heat equation up to `t_final` and record `steps + 1` equally
/// spaced samples, starting at `t = 0`.
pub fn heat_solve(f0: &GridFunction, t_final: f64, steps: usize, method: HeatMethod) -> Result<HeatTrajectory> {
    heat_solve_with(f0, t_final, steps, method, None)
}

/// [`heat_solve`] with an optional explicit Euler step, which must not exceed
/// the stability limit.
pub fn heat_solve_with(
    f0: &GridFunction,
    t_final: f64,
    steps: usize,
    method: HeatMethod,
    dt: Option<f64>,
) -> Result<HeatTrajectory> {
    check_inputs(f0, t_final, steps)?;
    let mut rec = Recorder::new(f0, method)?;
    rec.record(0.0, f0)?;
    let interval = t_final / steps as f64;
    match method {
        HeatMethod::SpectralExp => {
            let c0 = analyze(f0, &AnalysisConfig::default())?;
            let mut last = None;
            for i in 1..=steps {
                let t = interval * i as f64;
                let c = propagate(&c0, t);
                let f = synthesize(&c, &f0.spec)?;
                rec.record(t, &f)?;
                rec.traj.final_state = f;
                last = Some(c);
            }
            rec.traj.final_coefficients = last;
        }
        HeatMethod::ExplicitEuler => {
            let limit = 2.0 / stencil_spectral_radius(&f0.spec, 30);
            let h = match dt {
                Some(d) if d > limit => return Err(Error::Cfl { dt: d, limit }),
                Some(d) if d > 0.0 => d,
                Some(d) => return param(format!("time step must be positive, got {d}")),
                None => 0.9 * limit,
            };
            let sub = (interval / h).ceil() as usize;
            let h = interval / sub as f64;
            rec.traj.dt = Some(h);
            rec.traj.dt_limit = Some(limit);
            let stencil = Stencil::new(&f0.spec, Convention::Std, Boundary::Dirichlet);
            let mut v = f0.values.clone();
            for i in 1..=steps {
                for _ in 0..sub {
                    let lv = stencil.sublaplacian(&v);
                    for (x, l) in v.iter_mut().zip(&lv) {
                        *x -= h * l.re;
                    }
                }
                let f = GridFunction { spec: f0.spec.clone(), values: v.clone() };
                rec.record(interval * i as f64, &f)?;
                rec.traj.final_state = f;
            }
        }
    }
    Ok(rec.traj)
}

/// Check `‖f(t)‖₂ ≤ bound(t)` at every recorded time. The report carries the
/// sample with the largest ratio.
pub fn check_decay_bound(traj: &HeatTrajectory, f0_norms: (f64, f64)) -> Result<InequalityReport> {
    let (l1, l2) = f0_norms;
    let n = traj.final_state.spec.n;
    let mut worst = (0usize, f64::NEG_INFINITY);
    for (i, (&t, &norm)) in traj.times.iter().zip(&traj.l2_norms).enumerate() {
        let b = if t == 0.0 { l2 } else { decay_bound(n, l1, l2, t)? };
        let r = norm / b;
        if r > worst.1 {
            worst = (i, r);
        }
    }
    let i = worst.0;
    let t = traj.times[i];
    let rhs = if t == 0.0 { l2 } else { decay_bound(n, l1, l2, t)? };
    let mut report = InequalityReport::linear("heat_decay", traj.l2_norms[i], rhs, Params::new(n), DEFAULT_TOL);
    report.subject = traj.method.as_str().to_string();
    report.notes.push(format!("worst sample t={t:.6e}"));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(spec: &GridSpec) -> GridFunction {
        GridFunction::from_real_fn(spec, |x, t| (-0.5 * (x[0] * x[0] + x[1] * x[1]) - 0.5 * t * t).exp())
    }

    fn small() -> GridSpec {
        GridSpec::new(1, 7.0, 7.0, 32, 32).unwrap()
    }

    #[test]
    fn bound_at_zero_is_initial_norm_and_decreasing() {
        let b0 = decay_bound(1, 2.0, 0.7, 0.0).unwrap();
        assert!((b0 - 0.7).abs() < 1e-15);
        let mut prev = b0;
        for i in 1..20 {
            let b = decay_bound(1, 2.0, 0.7, 0.1 * i as f64).unwrap();
            assert!(b < prev);
            prev = b;
        }
    }

    #[test]
    fn bound_matches_hand_evaluation() {
        // Q = 4: (l2^{-1} + t / (π^{-1} l1))^{-1}.
        let (l1, l2, t) = (3.0, 0.5, 0.25);
        let expect = 1.0 / (1.0 / l2 + std::f64::consts::PI * t / l1);
        assert!((decay_bound(1, l1, l2, t).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn trajectory_starts_at_initial_norm() {
        let f0 = gaussian(&small());
        let tr = heat_solve(&f0, 0.2, 2, HeatMethod::ExplicitEuler).unwrap();
        let (_, l2) = initial_norms(&f0).unwrap();
        assert_eq!(tr.times[0], 0.0);
        assert_eq!(tr.l2_norms[0], l2);
        assert_eq!(tr.bound_values[0], l2);
        assert!(tr.l2_norms.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn euler_step_above_limit_is_rejected() {
        let f0 = gaussian(&small());
        let limit = 2.0 / stencil_spectral_radius(&f0.spec, 30);
        let err = heat_solve_with(&f0, 0.1, 1, HeatMethod::ExplicitEuler, Some(1.5 * limit)).unwrap_err();
        assert!(matches!(err, Error::Cfl { .. }));
    }

    #[test]
    fn spectral_radius_is_below_gershgorin() {
        let spec = small();
        let rho = stencil_spectral_radius(&spec, 30);
        let h = spec.h_xi();
        assert!(rho > 0.0 && rho <= 4.0 * spec.dims_xi() as f64 / (h * h) * (1.0 + 1e-12));
    }

    #[test]
    fn spectral_semigroup() {
        let f0 = gaussian(&small());
        let full = heat_solve(&f0, 0.4, 1, HeatMethod::SpectralExp).unwrap();
        let half = heat_solve(&f0, 0.2, 1, HeatMethod::SpectralExp).unwrap();
        let again = propagate(half.final_coefficients.as_ref().unwrap(), 0.2);
        let a = full.final_coefficients.unwrap();
        let num: f64 = a.coeffs.iter().flatten().zip(again.coeffs.iter().flatten()).map(|(x, y)| (x - y).norm_sqr()).sum();
        let den: f64 = a.coeffs.iter().flatten().map(|x| x.norm_sqr()).sum();
        assert!((num / den).sqrt() < 1e-8);
    }

    #[test]
    fn rejects_signed_data() {
        let spec = small();
        let f0 = GridFunction::from_real_fn(&spec, |x, _| x[0] * (-x[0] * x[0]).exp());
        assert!(heat_solve(&f0, 0.1, 1, HeatMethod::SpectralExp).is_err());
        assert!(heat_solve(&gaussian(&spec), 0.0, 1, HeatMethod::SpectralExp).is_err());
    }
}
