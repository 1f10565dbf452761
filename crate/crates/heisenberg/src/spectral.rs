//! Spectral calculus for functions radial in ξ.
//!
//! A function `f(|ξ|, τ)` is transformed in `τ`,
//! `f^λ(ξ) = ∫ f(ξ, τ) e^{iλτ} dτ`, and each slice is expanded in the scaled
//! Laguerre functions `φ_k^λ(ρ) = L_k^{n−1}(|λ|ρ²/2) e^{−|λ|ρ²/4}`, which are
//! eigenfunctions of the twisted sub-Laplacian with eigenvalue `(2k+n)|λ|`.
//! Coefficients are normalized as
//!
//! `c_k(λ) = ⟨f^λ, φ_k^λ⟩ / (2^n √binom(k+n−1, k))`,
//!
//! which makes `Σ_k ∫ |c_k(λ)|² (2^{n−1}/π^{n+1}) |λ|^n dλ = ‖f‖²` exactly in
//! the continuum, because `‖φ_k^λ‖² = (2π/|λ|)^n binom(k+n−1, k)`.
//!
//! The number of Laguerre terms is chosen per `λ`: expansion stops when the
//! trailing coefficients carry negligible energy, or when the eigenvalue
//! passes the grid resolution `(π/h_ξ)²`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::io::{Read, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use statrs::function::gamma::ln_gamma;

use crate::calculus::{gauss_legendre, read_f64, read_u64, GridFunction, GridSpec};
use crate::constants::modified_gamma_ratio;
use crate::error::{Error, Result};

/// Relative within-shell deviation above which a function counts as
/// non-radial.
pub const RADIAL_TOL: f64 = 1e-8;

/// Spectral multiplier `m(k, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    Identity,
    /// `(2k+n)|λ|`.
    SubLaplacian,
    /// `((2k+n)|λ|)^s`.
    FracPower(f64),
    /// `(2|λ|)^s Γ((2k+n)/2 + (1+s)/2) / Γ((2k+n)/2 + (1−s)/2)`.
    Modified(f64),
}

impl Multiplier {
    /// Check the order lies in `[0, 1]`.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Multiplier::FracPower(s) | Multiplier::Modified(s) if !(0.0..=1.0).contains(&s) => {
                Err(Error::Parameter(format!("multiplier order must lie in [0, 1], got {s}")))
            }
            _ => Ok(()),
        }
    }

    /// `m(k, λ)` on ℍⁿ.
    pub fn eval(&self, n: usize, k: usize, lambda: f64) -> f64 {
        let e = (2 * k + n) as f64;
        let l = lambda.abs();
        match *self {
            Multiplier::Identity => 1.0,
            Multiplier::SubLaplacian => e * l,
            Multiplier::FracPower(s) => {
                if s == 0.0 {
                    1.0
                } else {
                    (e * l).powf(s)
                }
            }
            Multiplier::Modified(s) => {
                if s == 0.0 {
                    1.0
                } else if s == 1.0 {
                    e * l
                } else {
                    (2.0 * l).powf(s) * modified_gamma_ratio(0.5 * e, s)
                }
            }
        }
    }
}

/// Plancherel density `(2^{n−1}/π^{n+1}) |λ|^n`.
pub fn plancherel_weight(n: usize, lambda: f64) -> f64 {
    2f64.powi(n as i32 - 1) / PI.powi(n as i32 + 1) * lambda.abs().powi(n as i32)
}

/// Laguerre–Fourier coefficients on a symmetric `λ` lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoefficients {
    pub n: usize,
    /// Nonzero `λ` nodes, negative ones first.
    pub lambda_grid: Vec<f64>,
    /// Quadrature weights for `dλ` at each node.
    pub lambda_weights: Vec<f64>,
    /// Largest Laguerre index kept at any `λ`.
    pub k_max: usize,
    /// `coeffs[j][k] = c_k(λ_j)`; the row length may vary with `j`.
    pub coeffs: Vec<Vec<Complex64>>,
    /// Largest relative energy in the trailing coefficients of a row that
    /// hit the resolution cap (zero when every row converged).
    pub tail_fraction: f64,
}

impl SpectralCoefficients {
    /// Same lattice with all coefficients zero.
    pub fn zeros_like(&self) -> Self {
        let coeffs = self.coeffs.iter().map(|r| vec![Complex64::new(0.0, 0.0); r.len()]).collect();
        Self { coeffs, tail_fraction: 0.0, ..self.clone() }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        let same = self.n == other.n
            && self.lambda_grid == other.lambda_grid
            && self.coeffs.iter().zip(&other.coeffs).all(|(a, b)| a.len() == b.len());
        if !same {
            return Err(Error::Dimension("coefficient sets live on different lattices".into()));
        }
        Ok(())
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: Complex64, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + c * y).collect())
            .collect();
        Ok(Self { coeffs, ..self.clone() })
    }

    /// `Σ_k ∫ m(k, λ) |c_k(λ)|² dP(λ)`.
    pub fn energy(&self, m: &Multiplier) -> f64 {
        let parts: Vec<f64> = self
            .coeffs
            .par_iter()
            .enumerate()
            .map(|(j, row)| {
                let lam = self.lambda_grid[j];
                let w = self.lambda_weights[j] * plancherel_weight(self.n, lam);
                row.iter().enumerate().map(|(k, c)| m.eval(self.n, k, lam) * c.norm_sqr()).sum::<f64>() * w
            })
            .collect();
        parts.iter().sum()
    }

    /// Serialize as `HEISSPC1`, `n`, the number of `λ` nodes, then per node
    /// `λ`, its weight, the row length and the interleaved coefficients.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(SPECTRAL_MAGIC)?;
        w.write_all(&(self.n as u64).to_le_bytes())?;
        w.write_all(&(self.lambda_grid.len() as u64).to_le_bytes())?;
        for ((lam, wt), row) in self.lambda_grid.iter().zip(&self.lambda_weights).zip(&self.coeffs) {
            w.write_all(&lam.to_le_bytes())?;
            w.write_all(&wt.to_le_bytes())?;
            w.write_all(&(row.len() as u64).to_le_bytes())?;
            for c in row {
                w.write_all(&c.re.to_le_bytes())?;
                w.write_all(&c.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Inverse of [`SpectralCoefficients::write_binary`].
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != SPECTRAL_MAGIC {
            return Err(Error::Format("not a spectral-coefficient file".into()));
        }
        let n = read_u64(&mut r)? as usize;
        let count = read_u64(&mut r)? as usize;
        if n == 0 || count > 1 << 24 {
            return Err(Error::Format("implausible spectral header".into()));
        }
        let mut out = Self { n, lambda_grid: vec![], lambda_weights: vec![], k_max: 0, coeffs: vec![], tail_fraction: 0.0 };
        for _ in 0..count {
            let lam = read_f64(&mut r)?;
            if lam == 0.0 || !lam.is_finite() {
                return Err(Error::Format("λ nodes must be finite and nonzero".into()));
            }
            out.lambda_grid.push(lam);
            out.lambda_weights.push(read_f64(&mut r)?);
            let len = read_u64(&mut r)? as usize;
            if len > 1 << 24 {
                return Err(Error::Format("implausible row length".into()));
            }
            let mut row = Vec::with_capacity(len);
            for _ in 0..len {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                row.push(Complex64::new(re, im));
            }
            out.k_max = out.k_max.max(len.saturating_sub(1));
            out.coeffs.push(row);
        }
        Ok(out)
    }
}

const SPECTRAL_MAGIC: &[u8; 8] = b"HEISSPC1";

/// Options for [`analyze`].
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisConfig {
    /// Hard cap on the Laguerre index.
    pub k_max: usize,
    /// Explicit `λ` cutoff; chosen from the `τ`-spectrum when `None`.
    pub lambda_max: Option<f64>,
    /// Number of positive `λ` nodes; chosen from the cutoff when `None`.
    pub lambda_nodes: Option<usize>,
    /// Relative energy below which `τ`-modes and trailing Laguerre terms are
    /// dropped.
    pub tail_tol: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self { k_max: 50_000, lambda_max: None, lambda_nodes: None, tail_tol: 1e-14 }
    }
}

/// Shells of ξ-nodes with equal `|ξ|`.
#[derive(Debug, Clone)]
pub struct RadialShells {
    /// Shell index of every ξ-node.
    pub shell_of: Vec<usize>,
    /// `|ξ|` of each shell.
    pub radius: Vec<f64>,
    /// Sum of trapezoid weights of the member nodes.
    pub weight: Vec<f64>,
    /// Number of member nodes.
    pub count: Vec<usize>,
}

impl RadialShells {
    /// Group the ξ-nodes of `spec` by the exact integer key `Σ (2j − N + 1)²`.
    pub fn new(spec: &GridSpec) -> Self {
        let nodes = spec.xi_nodes();
        let np = spec.points_xi as i64;
        let mut key_to_shell: HashMap<i64, usize> = HashMap::new();
        let mut keys: Vec<i64> = Vec::new();
        let mut idx = vec![0usize; spec.dims_xi()];
        let mut node_keys = Vec::with_capacity(nodes);
        for node in 0..nodes {
            spec.xi_indices(node, &mut idx);
            let key: i64 = idx.iter().map(|&j| (2 * j as i64 - np + 1).pow(2)).sum();
            node_keys.push(key);
            if let std::collections::hash_map::Entry::Vacant(e) = key_to_shell.entry(key) {
                e.insert(0);
                keys.push(key);
            }
        }
        keys.sort_unstable();
        for (i, k) in keys.iter().enumerate() {
            key_to_shell.insert(*k, i);
        }
        let half_h = 0.5 * spec.h_xi();
        let radius = keys.iter().map(|&k| half_h * (k as f64).sqrt()).collect();
        let mut weight = vec![0.0; keys.len()];
        let mut count = vec![0usize; keys.len()];
        let shell_of: Vec<usize> = node_keys.iter().map(|k| key_to_shell[k]).collect();
        for (node, &s) in shell_of.iter().enumerate() {
            weight[s] += spec.xi_weight(node);
            count[s] += 1;
        }
        Self { shell_of, radius, weight, count }
    }

    pub fn len(&self) -> usize {
        self.radius.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radius.is_empty()
    }
}

/// Relative within-shell deviation of `f`, and the shell means
/// (`profile[shell * N_τ + k]`).
pub fn radial_profile(f: &GridFunction, shells: &RadialShells) -> (f64, Vec<Complex64>) {
    let nt = f.spec.points_tau;
    let mut sum = vec![Complex64::new(0.0, 0.0); shells.len() * nt];
    for (node, line) in f.values.chunks(nt).enumerate() {
        let s = shells.shell_of[node];
        for (acc, v) in sum[s * nt..(s + 1) * nt].iter_mut().zip(line) {
            *acc += v;
        }
    }
    for (s, chunk) in sum.chunks_mut(nt).enumerate() {
        let c = shells.count[s] as f64;
        chunk.iter_mut().for_each(|v| *v /= c);
    }
    let mut dev: f64 = 0.0;
    for (node, line) in f.values.chunks(nt).enumerate() {
        let s = shells.shell_of[node];
        for (v, m) in line.iter().zip(&sum[s * nt..(s + 1) * nt]) {
            dev = dev.max((v - m).norm());
        }
    }
    let max = f.max_abs();
    (if max > 0.0 { dev / max } else { 0.0 }, sum)
}

/// Rows of `φ_k^λ / √binom(k+n−1, k)` at a set of arguments
/// `x = |λ|ρ²/2`, produced one `k` at a time.
///
/// The three-term recurrence runs on rescaled values with a per-point
/// logarithmic offset so that neither `L_k(x)` nor `e^{−x/2}` overflows.
struct LaguerreRows {
    alpha: f64,
    x: Vec<f64>,
    prev: Vec<f64>,
    cur: Vec<f64>,
    log_offset: Vec<f64>,
    factor: Vec<f64>,
    k: usize,
}

const RESCALE: f64 = 1e150;

impl LaguerreRows {
    fn new(n: usize, x: Vec<f64>) -> Self {
        let log_offset: Vec<f64> = x.iter().map(|v| -0.5 * v).collect();
        let factor = log_offset.iter().map(|v| v.exp()).collect();
        let m = x.len();
        Self { alpha: n as f64 - 1.0, x, prev: vec![0.0; m], cur: vec![1.0; m], log_offset, factor, k: 0 }
    }

    /// Values at the current index `k`.
    fn values(&self, out: &mut [f64]) {
        for ((o, c), f) in out.iter_mut().zip(&self.cur).zip(&self.factor) {
            *o = c * f;
        }
    }

    fn advance(&mut self) {
        let k = self.k as f64;
        let a = self.alpha;
        // Normalization ratio √(binom(k+n−1,k)/binom(k+n,k+1)) = √((k+1)/(k+1+α)).
        let norm = ((k + 1.0) / (k + 1.0 + a)).sqrt();
        for i in 0..self.x.len() {
            let next = if self.k == 0 {
                1.0 + a - self.x[i]
            } else {
                ((2.0 * k + 1.0 + a - self.x[i]) * self.cur[i] - (k + a) * self.prev[i]) / (k + 1.0)
            };
            self.prev[i] = self.cur[i];
            self.cur[i] = next;
            self.factor[i] *= norm;
            if next.abs() > RESCALE {
                self.prev[i] /= RESCALE;
                self.cur[i] /= RESCALE;
                self.log_offset[i] += RESCALE.ln();
                self.factor[i] = (self.log_offset[i] - self.log_norm()).exp();
            }
        }
        self.k += 1;
    }

    fn log_norm(&self) -> f64 {
        let k = self.k as f64 + 1.0;
        0.5 * (ln_gamma(k + self.alpha + 1.0) - ln_gamma(k + 1.0) - ln_gamma(self.alpha + 1.0))
    }
}

/// `λ` lattice: Gauss–Legendre nodes on `(0, Λ)` mirrored to negative values.
pub fn lambda_lattice(lambda_max: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(nodes);
    let pos: Vec<(f64, f64)> = x.iter().zip(&w).map(|(xi, wi)| (0.5 * lambda_max * (xi + 1.0), 0.5 * lambda_max * wi)).collect();
    let mut lam = Vec::with_capacity(2 * nodes);
    let mut wts = Vec::with_capacity(2 * nodes);
    for &(l, w) in pos.iter().rev() {
        lam.push(-l);
        wts.push(w);
    }
    for &(l, w) in &pos {
        lam.push(l);
        wts.push(w);
    }
    (lam, wts)
}

/// Cutoff `Λ` beyond which the `τ`-spectrum of the shell profile carries
/// less than `tol` of the energy, capped at the grid Nyquist frequency.
fn spectral_cutoff(spec: &GridSpec, shells: &RadialShells, profile: &[Complex64], tol: f64) -> f64 {
    let nt = spec.points_tau;
    let fft = FftPlanner::new().plan_fft_forward(nt);
    let mut energy = vec![0.0; nt / 2 + 1];
    for (s, line) in profile.chunks(nt).enumerate() {
        let mut buf = line.to_vec();
        fft.process(&mut buf);
        for (q, v) in buf.iter().enumerate() {
            let m = if q <= nt / 2 { q } else { nt - q };
            energy[m] += shells.weight[s] * v.norm_sqr();
        }
    }
    let total: f64 = energy.iter().sum();
    let dw = 2.0 * PI / (nt as f64 * spec.h_tau());
    let nyquist = PI / spec.h_tau();
    if total == 0.0 {
        return nyquist;
    }
    let mut tail = 0.0;
    let mut cut = energy.len() - 1;
    for m in (0..energy.len()).rev() {
        tail += energy[m];
        if tail > tol * total {
            cut = m;
            break;
        }
    }
    ((cut as f64 + 2.0) * dw).min(nyquist)
}

fn default_nodes(lambda_max: f64, spec: &GridSpec) -> usize {
    (1.5 * lambda_max * spec.half_width_tau).ceil() as usize + 32
}

/// Largest useful Laguerre index at `λ` for the grid resolution.
fn resolution_cap(spec: &GridSpec, lambda: f64, hard: usize) -> usize {
    let e_cap = (PI / spec.h_xi()).powi(2);
    let k = ((e_cap / lambda.abs() - spec.n as f64) / 2.0).floor();
    if k < 0.0 {
        0
    } else {
        (k as usize).min(hard)
    }
}

/// Laguerre–Fourier analysis of a ξ-radial grid function.
pub fn analyze(f: &GridFunction, cfg: &AnalysisConfig) -> Result<SpectralCoefficients> {
    let spec = &f.spec;
    let shells = RadialShells::new(spec);
    let (asym, profile) = radial_profile(f, &shells);
    if asym > RADIAL_TOL {
        return Err(Error::NonRadial(asym));
    }
    let lambda_max = match cfg.lambda_max {
        Some(l) if l > 0.0 => l,
        Some(l) => return Err(Error::Parameter(format!("λ cutoff must be positive, got {l}"))),
        None => spectral_cutoff(spec, &shells, &profile, cfg.tail_tol),
    };
    let nodes = cfg.lambda_nodes.unwrap_or_else(|| default_nodes(lambda_max, spec).max(128));
    let (lambda_grid, lambda_weights) = lambda_lattice(lambda_max, nodes);
    let layout: Vec<Option<usize>> = vec![None; lambda_grid.len()];
    let (coeffs, tail) = project(spec, &shells, &profile, &lambda_grid, &layout, cfg);
    let k_max = coeffs.iter().map(|r| r.len().saturating_sub(1)).max().unwrap_or(0);
    Ok(SpectralCoefficients { n: spec.n, lambda_grid, lambda_weights, k_max, coeffs, tail_fraction: tail })
}

/// Analysis onto an existing lattice, keeping its row lengths. Linear in `f`.
pub fn analyze_on(f: &GridFunction, like: &SpectralCoefficients) -> Result<SpectralCoefficients> {
    let spec = &f.spec;
    let shells = RadialShells::new(spec);
    let (asym, profile) = radial_profile(f, &shells);
    if asym > RADIAL_TOL {
        return Err(Error::NonRadial(asym));
    }
    let layout: Vec<Option<usize>> = like.coeffs.iter().map(|r| Some(r.len())).collect();
    let (coeffs, _) = project(spec, &shells, &profile, &like.lambda_grid, &layout, &AnalysisConfig::default());
    Ok(SpectralCoefficients { coeffs, tail_fraction: 0.0, ..like.clone() })
}

/// `f^λ` on every shell: trapezoid sum in `τ`.
fn tau_transform(spec: &GridSpec, profile: &[Complex64], lambda: f64) -> Vec<Complex64> {
    let nt = spec.points_tau;
    let kernel: Vec<Complex64> =
        (0..nt).map(|k| Complex64::from_polar(spec.tau_weight(k), lambda * spec.tau_coord(k))).collect();
    profile.chunks(nt).map(|line| line.iter().zip(&kernel).map(|(v, e)| v * e).sum()).collect()
}

fn project(
    spec: &GridSpec,
    shells: &RadialShells,
    profile: &[Complex64],
    lambdas: &[f64],
    layout: &[Option<usize>],
    cfg: &AnalysisConfig,
) -> (Vec<Vec<Complex64>>, f64) {
    let n = spec.n;
    let scale = 1.0 / 2f64.powi(n as i32);
    let rows: Vec<(Vec<Complex64>, f64)> = lambdas
        .par_iter()
        .zip(layout)
        .map(|(&lam, fixed)| {
            let fl = tau_transform(spec, profile, lam);
            let weighted: Vec<Complex64> = fl.iter().zip(&shells.weight).map(|(v, w)| v * *w).collect();
            let x: Vec<f64> = shells.radius.iter().map(|r| 0.5 * lam.abs() * r * r).collect();
            let mut rows = LaguerreRows::new(n, x);
            let mut phi = vec![0.0; shells.len()];
            let cap = resolution_cap(spec, lam, cfg.k_max);
            let limit = fixed.map_or(cap + 1, |len| len);
            let mut out = Vec::new();
            let mut total = 0.0;
            let mut tail = 0.0;
            for k in 0..limit {
                if k > 0 {
                    rows.advance();
                }
                rows.values(&mut phi);
                let c: Complex64 = weighted.iter().zip(&phi).map(|(v, p)| v * *p).sum::<Complex64>() * scale;
                out.push(c);
                total += c.norm_sqr();
                if fixed.is_none() && k >= 16 {
                    let last: f64 = out[k - 7..=k].iter().map(|c| c.norm_sqr()).sum();
                    if (2 * k + n) as f64 * lam.abs() >= 10.0 && last <= cfg.tail_tol * total {
                        return (out, 0.0);
                    }
                }
            }
            if fixed.is_none() && total > 0.0 {
                let m = out.len();
                let last: f64 = out[m.saturating_sub(8)..].iter().map(|c| c.norm_sqr()).sum();
                tail = last / total;
            }
            (out, tail)
        })
        .collect();
    let tail = rows.iter().map(|r| r.1).fold(0.0, f64::max);
    (rows.into_iter().map(|r| r.0).collect(), tail)
}

/// Resynthesize a grid function from its coefficients.
pub fn synthesize(c: &SpectralCoefficients, spec: &GridSpec) -> Result<GridFunction> {
    if spec.n != c.n {
        return Err(Error::Dimension(format!("coefficients for ℍ^{} on a grid for ℍ^{}", c.n, spec.n)));
    }
    let shells = RadialShells::new(spec);
    let profile = synthesize_profile(c, spec, &shells, |_, _, v| v);
    Ok(expand_profile(spec, &shells, &profile))
}

/// Shell profile `Σ_j w_j/(2π) e^{−iλ_j τ} Σ_k a_k(λ_j) φ_k(ρ)` after a
/// per-coefficient transform `g(j, k, a_k)`.
fn synthesize_profile<G>(c: &SpectralCoefficients, spec: &GridSpec, shells: &RadialShells, g: G) -> Vec<Complex64>
where
    G: Fn(usize, usize, Complex64) -> Complex64 + Sync,
{
    let n = spec.n;
    let nt = spec.points_tau;
    let ns = shells.len();
    let slices: Vec<Vec<Complex64>> = c
        .coeffs
        .par_iter()
        .enumerate()
        .map(|(j, row)| {
            let lam = c.lambda_grid[j];
            let amp = lam.abs().powi(n as i32) / PI.powi(n as i32);
            let x: Vec<f64> = shells.radius.iter().map(|r| 0.5 * lam.abs() * r * r).collect();
            let mut rows = LaguerreRows::new(n, x);
            let mut phi = vec![0.0; ns];
            let mut acc = vec![Complex64::new(0.0, 0.0); ns];
            for (k, &ck) in row.iter().enumerate() {
                if k > 0 {
                    rows.advance();
                }
                let a = g(j, k, ck) * amp;
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                rows.values(&mut phi);
                for (s, p) in acc.iter_mut().zip(&phi) {
                    *s += a * *p;
                }
            }
            acc
        })
        .collect();
    let mut profile = vec![Complex64::new(0.0, 0.0); ns * nt];
    profile.par_chunks_mut(nt).enumerate().for_each(|(s, line)| {
        for (k, out) in line.iter_mut().enumerate() {
            let t = spec.tau_coord(k);
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, slice) in slices.iter().enumerate() {
                let lam = c.lambda_grid[j];
                sum += slice[s] * Complex64::from_polar(c.lambda_weights[j], -lam * t);
            }
            *out = sum / (2.0 * PI);
        }
    });
    profile
}

fn expand_profile(spec: &GridSpec, shells: &RadialShells, profile: &[Complex64]) -> GridFunction {
    let nt = spec.points_tau;
    let mut values = vec![Complex64::new(0.0, 0.0); spec.len()];
    values.par_chunks_mut(nt).enumerate().for_each(|(node, line)| {
        let s = shells.shell_of[node];
        line.copy_from_slice(&profile[s * nt..(s + 1) * nt]);
    });
    GridFunction { spec: spec.clone(), values }
}

/// Adjoint of [`analyze_on`] with respect to the plain sum over grid values:
/// returns `A* y` where `(A f)_{jk} = c_k(λ_j)`.
pub fn analysis_adjoint(y: &SpectralCoefficients, spec: &GridSpec) -> Result<GridFunction> {
    if spec.n != y.n {
        return Err(Error::Dimension("dimension mismatch in analysis adjoint".into()));
    }
    let n = spec.n;
    let nt = spec.points_tau;
    let shells = RadialShells::new(spec);
    let ns = shells.len();
    let scale = 1.0 / 2f64.powi(n as i32);
    let slices: Vec<Vec<Complex64>> = y
        .coeffs
        .par_iter()
        .enumerate()
        .map(|(j, row)| {
            let lam = y.lambda_grid[j];
            let x: Vec<f64> = shells.radius.iter().map(|r| 0.5 * lam.abs() * r * r).collect();
            let mut rows = LaguerreRows::new(n, x);
            let mut phi = vec![0.0; ns];
            let mut acc = vec![Complex64::new(0.0, 0.0); ns];
            for (k, &ck) in row.iter().enumerate() {
                if k > 0 {
                    rows.advance();
                }
                rows.values(&mut phi);
                for (s, p) in acc.iter_mut().zip(&phi) {
                    *s += ck * *p * scale;
                }
            }
            acc
        })
        .collect();
    // A f = Σ_node (W_node / count) ... averaged over shells, so the adjoint
    // spreads each shell value back with weight W_shell / count_shell.
    let mut profile = vec![Complex64::new(0.0, 0.0); ns * nt];
    profile.par_chunks_mut(nt).enumerate().for_each(|(s, line)| {
        let ws = shells.weight[s] / shells.count[s] as f64;
        for (k, out) in line.iter_mut().enumerate() {
            let t = spec.tau_coord(k);
            let mut sum = Complex64::new(0.0, 0.0);
            for (j, slice) in slices.iter().enumerate() {
                sum += slice[s] * Complex64::from_polar(1.0, -y.lambda_grid[j] * t);
            }
            *out = sum * ws * spec.tau_weight(k);
        }
    });
    Ok(expand_profile(spec, &shells, &profile))
}

/// Multiply every coefficient by `m(k, λ)`.
pub fn apply_multiplier(c: &SpectralCoefficients, m: &Multiplier) -> Result<SpectralCoefficients> {
    m.validate()?;
    let coeffs = c
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, row)| row.iter().enumerate().map(|(k, v)| v * m.eval(c.n, k, c.lambda_grid[j])).collect())
        .collect();
    Ok(SpectralCoefficients { coeffs, ..c.clone() })
}

/// `⟨m(ℒ) f, f⟩ = Σ_k ∫ m(k, λ)|c_k(λ)|² dP(λ)` with default analysis
/// options.
pub fn quadratic_form(f: &GridFunction, m: &Multiplier) -> Result<f64> {
    m.validate()?;
    Ok(analyze(f, &AnalysisConfig::default())?.energy(m))
}

/// Heat propagator `c_k(λ) ↦ e^{−(2k+n)|λ|t} c_k(λ)`.
pub fn propagate(c: &SpectralCoefficients, t: f64) -> SpectralCoefficients {
    let coeffs = c
        .coeffs
        .iter()
        .enumerate()
        .map(|(j, row)| {
            let lam = c.lambda_grid[j].abs();
            row.iter().enumerate().map(|(k, v)| v * (-((2 * k + c.n) as f64) * lam * t).exp()).collect()
        })
        .collect();
    SpectralCoefficients { coeffs, ..c.clone() }
}
