//! Box grids over ℝ^{2n+1}, trapezoidal quadrature against the measures used
//! by the inequalities, and discrete horizontal calculus.
//!
//! Values are stored row-major with axes `x_1..x_n, y_1..y_n, τ`, so `τ` is
//! the fastest index and each ξ-node owns one contiguous `τ`-line.
//!
//! Horizontal derivatives are differences along the group flow: the
//! discrete field `X_h f(ξ, τ) = (f(ξ + h e_x, τ + κ y h) − f(ξ, τ)) / h`
//! follows the exact left-invariant curve, with the `τ`-shift applied by
//! Fourier interpolation. The discrete Dirichlet form is the squared norm of
//! these edge differences and the discrete sub-Laplacian is `Σ X_h* X_h`, so
//! `⟨ℒ_h f, f⟩` equals the form exactly.

use std::io::{Read, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::group::{kaplan_norm_parts, Convention};

/// Largest supported grid, in nodes (1 GiB of complex values).
pub const MAX_POINTS: usize = 1 << 26;

/// Magnitudes below this contribute nothing to `u² log u` terms.
pub const ENTROPY_CLAMP: f64 = 1e-300;

/// Uniform box grid `[−R_ξ, R_ξ]^{2n} × [−R_τ, R_τ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub half_width_xi: f64,
    pub half_width_tau: f64,
    pub points_xi: usize,
    pub points_tau: usize,
}

impl GridSpec {
    pub fn new(n: usize, half_width_xi: f64, half_width_tau: f64, points_xi: usize, points_tau: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Parameter("group index n must be at least 1".into()));
        }
        if !(half_width_xi > 0.0 && half_width_tau > 0.0 && half_width_xi.is_finite() && half_width_tau.is_finite()) {
            return Err(Error::Parameter("grid half-widths must be positive".into()));
        }
        if points_xi < 8 || points_tau < 8 {
            return Err(Error::Parameter("grids need at least 8 points per axis".into()));
        }
        let spec = Self { n, half_width_xi, half_width_tau, points_xi, points_tau };
        match spec.checked_len() {
            Some(len) if len <= MAX_POINTS => Ok(spec),
            _ => Err(Error::Parameter(format!("grid exceeds the {MAX_POINTS}-point limit"))),
        }
    }

    /// Desk-scale default: `R = 8` and 96 points per axis at `n = 1`,
    /// fewer points for larger `n` so the grid stays within memory.
    pub fn desk(n: usize) -> Result<Self> {
        let pts = match n {
            1 => 96,
            2 => 24,
            _ => 12,
        };
        Self::new(n, 8.0, 8.0, pts, pts)
    }

    fn checked_len(&self) -> Option<usize> {
        let mut len = self.points_tau;
        for _ in 0..2 * self.n {
            len = len.checked_mul(self.points_xi)?;
        }
        Some(len)
    }

    /// Number of horizontal axes, `2n`.
    pub fn dims_xi(&self) -> usize {
        2 * self.n
    }

    /// Number of ξ-nodes, `N_ξ^{2n}`.
    pub fn xi_nodes(&self) -> usize {
        self.points_xi.pow(self.dims_xi() as u32)
    }

    /// Total number of nodes.
    pub fn len(&self) -> usize {
        self.xi_nodes() * self.points_tau
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h_xi(&self) -> f64 {
        2.0 * self.half_width_xi / (self.points_xi - 1) as f64
    }

    pub fn h_tau(&self) -> f64 {
        2.0 * self.half_width_tau / (self.points_tau - 1) as f64
    }

    pub fn xi_coord(&self, j: usize) -> f64 {
        -self.half_width_xi + j as f64 * self.h_xi()
    }

    pub fn tau_coord(&self, k: usize) -> f64 {
        -self.half_width_tau + k as f64 * self.h_tau()
    }

    /// Horizontal axis indices of ξ-node `node`.
    pub fn xi_indices(&self, mut node: usize, out: &mut [usize]) {
        for a in (0..self.dims_xi()).rev() {
            out[a] = node % self.points_xi;
            node /= self.points_xi;
        }
    }

    /// Horizontal coordinates of ξ-node `node`.
    pub fn xi_coords(&self, node: usize, out: &mut [f64]) {
        let mut idx = vec![0usize; self.dims_xi()];
        self.xi_indices(node, &mut idx);
        for (o, j) in out.iter_mut().zip(idx) {
            *o = self.xi_coord(j);
        }
    }

    /// Stride of horizontal axis `a` in the flat value array.
    pub fn stride(&self, a: usize) -> usize {
        self.points_xi.pow((self.dims_xi() - 1 - a) as u32) * self.points_tau
    }

    fn trap(j: usize, len: usize, h: f64) -> f64 {
        if j == 0 || j + 1 == len {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoid weight of ξ-node `node`.
    pub fn xi_weight(&self, node: usize) -> f64 {
        let mut idx = vec![0usize; self.dims_xi()];
        self.xi_indices(node, &mut idx);
        let h = self.h_xi();
        idx.iter().map(|&j| Self::trap(j, self.points_xi, h)).product()
    }

    /// Trapezoid weight of `τ`-index `k`.
    pub fn tau_weight(&self, k: usize) -> f64 {
        Self::trap(k, self.points_tau, self.h_tau())
    }

    /// Box volume `(2R_ξ)^{2n} · 2R_τ`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.half_width_xi).powi(self.dims_xi() as i32) * 2.0 * self.half_width_tau
    }
}

/// Complex samples of a function on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub spec: GridSpec,
    pub values: Vec<Complex64>,
}

impl GridFunction {
    /// Wrap existing samples, checking count and finiteness.
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(Error::Dimension(format!("{} values for a grid of {} nodes", values.len(), spec.len())));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::Parameter("grid values must be finite".into()));
        }
        Ok(Self { spec, values })
    }

    pub fn zeros(spec: &GridSpec) -> Self {
        Self { spec: spec.clone(), values: vec![Complex64::new(0.0, 0.0); spec.len()] }
    }

    /// Sample `f(ξ, τ)` at every node.
    pub fn from_fn<F>(spec: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> Complex64 + Sync,
    {
        let nt = spec.points_tau;
        let taus: Vec<f64> = (0..nt).map(|k| spec.tau_coord(k)).collect();
        let mut values = vec![Complex64::new(0.0, 0.0); spec.len()];
        values.par_chunks_mut(nt).enumerate().for_each(|(node, line)| {
            let mut xi = vec![0.0; spec.dims_xi()];
            spec.xi_coords(node, &mut xi);
            for (v, &t) in line.iter_mut().zip(&taus) {
                *v = f(&xi, t);
            }
        });
        Self { spec: spec.clone(), values }
    }

    /// Sample a real function.
    pub fn from_real_fn<F>(spec: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64], f64) -> f64 + Sync,
    {
        Self::from_fn(spec, |xi, t| Complex64::new(f(xi, t), 0.0))
    }

    /// Pointwise map.
    pub fn map<F: Fn(Complex64) -> Complex64 + Sync>(&self, f: F) -> Self {
        Self { spec: self.spec.clone(), values: self.values.par_iter().map(|&v| f(v)).collect() }
    }

    /// `c · f` for real `c`.
    pub fn scaled(&self, c: f64) -> Self {
        self.map(|v| v * c)
    }

    /// Largest modulus.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Fraction of `Σ|f|²` carried by nodes on the box boundary.
    pub fn boundary_fraction(&self) -> f64 {
        let spec = &self.spec;
        let nt = spec.points_tau;
        let mut idx = vec![0usize; spec.dims_xi()];
        let (mut edge, mut total) = (0.0, 0.0);
        for (node, line) in self.values.chunks(nt).enumerate() {
            spec.xi_indices(node, &mut idx);
            let on_xi = idx.iter().any(|&j| j == 0 || j + 1 == spec.points_xi);
            for (k, v) in line.iter().enumerate() {
                let e = v.norm_sqr();
                total += e;
                if on_xi || k == 0 || k + 1 == nt {
                    edge += e;
                }
            }
        }
        if total > 0.0 {
            edge / total
        } else {
            0.0
        }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.spec != other.spec {
            return Err(Error::Dimension("grid functions live on different grids".into()));
        }
        Ok(())
    }

    /// `self + c · other`.
    pub fn axpy(&self, c: f64, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        let values = self.values.par_iter().zip(&other.values).map(|(a, b)| a + b * c).collect();
        Ok(Self { spec: self.spec.clone(), values })
    }

    /// Serialize as `HEISGRD1`, `n`, `N_ξ`, `N_τ`, `R_ξ`, `R_τ`, then
    /// interleaved real/imaginary parts, all little-endian 64-bit.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(GRID_MAGIC)?;
        for v in [self.spec.n as u64, self.spec.points_xi as u64, self.spec.points_tau as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in [self.spec.half_width_xi, self.spec.half_width_tau] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.re.to_le_bytes())?;
            w.write_all(&v.im.to_le_bytes())?;
        }
        Ok(())
    }

    /// Inverse of [`GridFunction::write_binary`].
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != GRID_MAGIC {
            return Err(Error::Format("not a grid-function file".into()));
        }
        let n = read_u64(&mut r)? as usize;
        let nx = read_u64(&mut r)? as usize;
        let nt = read_u64(&mut r)? as usize;
        let rx = read_f64(&mut r)?;
        let rt = read_f64(&mut r)?;
        let spec = GridSpec::new(n, rx, rt, nx, nt).map_err(|e| Error::Format(e.to_string()))?;
        let mut values = Vec::with_capacity(spec.len());
        for _ in 0..spec.len() {
            let re = read_f64(&mut r)?;
            let im = read_f64(&mut r)?;
            values.push(Complex64::new(re, im));
        }
        Self::new(spec, values).map_err(|e| Error::Format(e.to_string()))
    }

    /// Write a 1-D or 2-D slice through the central node as CSV with the
    /// free-axis coordinates followed by `re` and `im`.
    ///
    /// Axes are numbered `0..2n` for ξ and `2n` for `τ`.
    pub fn write_slice_csv<W: Write>(&self, axes: &[usize], w: W) -> Result<()> {
        let spec = &self.spec;
        let d = spec.dims_xi();
        if axes.is_empty() || axes.len() > 2 || axes.iter().any(|&a| a > d) || (axes.len() == 2 && axes[0] == axes[1]) {
            return Err(Error::Parameter("slices need one or two distinct axes".into()));
        }
        let count = |a: usize| if a == d { spec.points_tau } else { spec.points_xi };
        let coord = |a: usize, j: usize| if a == d { spec.tau_coord(j) } else { spec.xi_coord(j) };
        let mut idx: Vec<usize> = (0..=d).map(|a| count(a) / 2).collect();
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = axes.iter().map(|&a| axis_name(a, spec.n)).collect();
        header.push("re".into());
        header.push("im".into());
        out.write_record(&header).map_err(csv_err)?;
        let second = if axes.len() == 2 { count(axes[1]) } else { 1 };
        for i in 0..count(axes[0]) {
            for j in 0..second {
                idx[axes[0]] = i;
                if axes.len() == 2 {
                    idx[axes[1]] = j;
                }
                let mut flat = 0;
                for &j in &idx[..d] {
                    flat = flat * spec.points_xi + j;
                }
                let v = self.values[flat * spec.points_tau + idx[d]];
                let mut rec: Vec<String> = axes.iter().map(|&a| crate::cli::fmt_f64(coord(a, idx[a]))).collect();
                rec.push(crate::cli::fmt_f64(v.re));
                rec.push(crate::cli::fmt_f64(v.im));
                out.write_record(&rec).map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

fn axis_name(a: usize, n: usize) -> String {
    if a < n {
        format!("x{}", a + 1)
    } else if a < 2 * n {
        format!("y{}", a - n + 1)
    } else {
        "tau".into()
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

const GRID_MAGIC: &[u8; 8] = b"HEISGRD1";

pub(crate) fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(|e| Error::Format(e.to_string()))?;
    Ok(u64::from_le_bytes(b))
}

pub(crate) fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    Ok(f64::from_bits(read_u64(r)?))
}

/// Integration measure on the grid box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Measure {
    /// Lebesgue measure `dξ dτ`.
    Haar,
    /// `γ e^{−|ξ|²/2} dξ ⊗ dτ`.
    SemiGaussian { gamma: f64 },
    /// `|x|^{−α} dξ dτ` with the Kaplan norm of the given convention.
    KaplanWeight { alpha: f64, convention: Convention },
    /// `|x|^{−α} log|x| dξ dτ`.
    KaplanLogWeight { alpha: f64, convention: Convention },
}

impl Measure {
    fn validate(&self, n: usize) -> Result<()> {
        let q = 2.0 * n as f64 + 2.0;
        match *self {
            Measure::Haar => Ok(()),
            Measure::SemiGaussian { gamma } if gamma > 0.0 => Ok(()),
            Measure::SemiGaussian { gamma } => Err(Error::Parameter(format!("γ must be positive, got {gamma}"))),
            Measure::KaplanWeight { alpha, .. } | Measure::KaplanLogWeight { alpha, .. } => {
                if !(alpha >= 0.0) {
                    Err(Error::Parameter(format!("weight exponent must be nonnegative, got {alpha}")))
                } else if alpha >= q {
                    Err(Error::NonIntegrable(format!("|x|^-{alpha} with Q = {q}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn density(&self, xi_sq: f64, tau: f64) -> f64 {
        match *self {
            Measure::Haar => 1.0,
            Measure::SemiGaussian { gamma } => gamma * (-0.5 * xi_sq).exp(),
            Measure::KaplanWeight { alpha, convention } => kaplan_norm_parts(xi_sq, tau, convention).powf(-alpha),
            Measure::KaplanLogWeight { alpha, convention } => {
                let r = kaplan_norm_parts(xi_sq, tau, convention);
                if r > 0.0 {
                    r.powf(-alpha) * r.ln()
                } else {
                    0.0
                }
            }
        }
    }

    fn is_singular(&self) -> bool {
        matches!(self, Measure::KaplanWeight { alpha, .. } if *alpha > 0.0)
            || matches!(self, Measure::KaplanLogWeight { .. })
    }
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, by Newton iteration on
/// the Legendre recurrence.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; m];
    let mut w = vec![0.0; m];
    for i in 0..m.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if m == 1 {
                p0 = 1.0;
                p1 = z;
            }
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, z);
        for k in 2..=m {
            let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
            p0 = p1;
            p1 = p2;
        }
        if m > 1 {
            dp = m as f64 * (z * p1 - p0) / (z * z - 1.0);
        }
        x[i] = -z;
        x[m - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[m - 1 - i] = wi;
    }
    (x, w)
}

/// Average of the measure density over an axis-aligned cell, refining
/// towards the origin where the Kaplan weights are singular.
fn cell_average(m: &Measure, n: usize, lo: &[f64], hi: &[f64], depth: usize, gl: &(Vec<f64>, Vec<f64>)) -> f64 {
    let d = lo.len();
    let dist_sq: f64 = lo.iter().zip(hi).map(|(&a, &b)| if a > 0.0 { a * a } else if b < 0.0 { b * b } else { 0.0 }).sum();
    let diam_sq: f64 = lo.iter().zip(hi).map(|(a, b)| (b - a) * (b - a)).sum();
    if depth > 0 && dist_sq < diam_sq {
        let mut total = 0.0;
        let mut sub_lo = vec![0.0; d];
        let mut sub_hi = vec![0.0; d];
        for corner in 0..(1usize << d) {
            for a in 0..d {
                let mid = 0.5 * (lo[a] + hi[a]);
                if corner >> a & 1 == 0 {
                    sub_lo[a] = lo[a];
                    sub_hi[a] = mid;
                } else {
                    sub_lo[a] = mid;
                    sub_hi[a] = hi[a];
                }
            }
            total += cell_average(m, n, &sub_lo, &sub_hi, depth - 1, gl);
        }
        return total / (1usize << d) as f64;
    }
    let (gx, gw) = gl;
    let g = gx.len();
    let mut acc = 0.0;
    let mut point = vec![0.0; d];
    for flat in 0..g.pow(d as u32) {
        let mut rest = flat;
        let mut w = 1.0;
        for a in 0..d {
            let q = rest % g;
            rest /= g;
            point[a] = 0.5 * (lo[a] + hi[a]) + 0.5 * (hi[a] - lo[a]) * gx[q];
            w *= 0.5 * gw[q];
        }
        let xi_sq: f64 = point[..2 * n].iter().map(|v| v * v).sum();
        acc += w * m.density(xi_sq, point[2 * n]);
    }
    acc
}

/// Per-node quadrature weights (trapezoid times measure density), laid out
/// like [`GridFunction::values`].
///
/// Singular Kaplan weights use cell averages at nodes within about three
/// cells of the origin.
pub fn quadrature_weights(spec: &GridSpec, m: &Measure) -> Result<Vec<f64>> {
    m.validate(spec.n)?;
    let nt = spec.points_tau;
    let (hx, ht) = (spec.h_xi(), spec.h_tau());
    let tw: Vec<f64> = (0..nt).map(|k| spec.tau_weight(k)).collect();
    let taus: Vec<f64> = (0..nt).map(|k| spec.tau_coord(k)).collect();
    let d = spec.dims_xi() + 1;
    let (order, depth) = match d {
        3 => (5, 12),
        5 => (3, 6),
        _ => (2, 4),
    };
    let gl = gauss_legendre(order);
    let singular = m.is_singular();
    let mut w = vec![0.0; spec.len()];
    w.par_chunks_mut(nt).enumerate().for_each(|(node, line)| {
        let mut xi = vec![0.0; spec.dims_xi()];
        spec.xi_coords(node, &mut xi);
        let xw = spec.xi_weight(node);
        let xi_sq: f64 = xi.iter().map(|v| v * v).sum();
        let near_xi = xi.iter().all(|v| v.abs() < 2.6 * hx);
        let mut lo = vec![0.0; d];
        let mut hi = vec![0.0; d];
        for k in 0..nt {
            let dens = if singular && near_xi && taus[k].abs() < 2.6 * ht {
                for a in 0..d - 1 {
                    lo[a] = xi[a] - 0.5 * hx;
                    hi[a] = xi[a] + 0.5 * hx;
                }
                lo[d - 1] = taus[k] - 0.5 * ht;
                hi[d - 1] = taus[k] + 0.5 * ht;
                cell_average(m, spec.n, &lo, &hi, depth, &gl)
            } else {
                m.density(xi_sq, taus[k])
            };
            line[k] = xw * tw[k] * dens;
        }
    });
    Ok(w)
}

/// `∫ Re f dm` by the trapezoidal rule.
pub fn integrate(f: &GridFunction, m: &Measure) -> Result<f64> {
    let w = quadrature_weights(&f.spec, m)?;
    Ok(weighted_sum(&w, f.values.iter().map(|v| v.re)))
}

/// Deterministic sum of `w_i · v_i`, chunked for cache locality.
pub(crate) fn weighted_sum(w: &[f64], v: impl Iterator<Item = f64>) -> f64 {
    let mut total = 0.0;
    let mut partial = 0.0;
    for (i, (wi, vi)) in w.iter().zip(v).enumerate() {
        partial += wi * vi;
        if i % 4096 == 4095 {
            total += partial;
            partial = 0.0;
        }
    }
    total + partial
}

/// `∫ |f|^p dm` using precomputed weights.
pub(crate) fn power_integral(w: &[f64], f: &[Complex64], p: f64) -> f64 {
    let parts: Vec<f64> = w
        .par_chunks(8192)
        .zip(f.par_chunks(8192))
        .map(|(wc, fc)| {
            wc.iter()
                .zip(fc)
                .map(|(wi, v)| {
                    let a = v.norm();
                    if a == 0.0 {
                        0.0
                    } else if p == 2.0 {
                        wi * a * a
                    } else {
                        wi * a.powf(p)
                    }
                })
                .sum::<f64>()
        })
        .collect();
    parts.iter().sum()
}

/// `(∫ |f|^p dm)^{1/p}`.
pub fn lp_norm(f: &GridFunction, p: f64, m: &Measure) -> Result<f64> {
    if !(p > 0.0) {
        return Err(Error::Parameter(format!("exponent must be positive, got {p}")));
    }
    let w = quadrature_weights(&f.spec, m)?;
    Ok(power_integral(&w, &f.values, p).powf(1.0 / p))
}

/// `∫ (|u|²/‖u‖²) log(|u|²/‖u‖²) dm` with `‖u‖² = ∫|u|² dm`.
pub fn entropy_term(u: &GridFunction, m: &Measure) -> Result<f64> {
    let w = quadrature_weights(&u.spec, m)?;
    entropy_with_weights(&w, &u.values)
}

pub(crate) fn entropy_with_weights(w: &[f64], u: &[Complex64]) -> Result<f64> {
    let norm_sq = power_integral(w, u, 2.0);
    if !(norm_sq > 0.0) {
        return Err(Error::ZeroFunction);
    }
    let parts: Vec<f64> = w
        .par_chunks(8192)
        .zip(u.par_chunks(8192))
        .map(|(wc, uc)| {
            wc.iter()
                .zip(uc)
                .map(|(wi, v)| {
                    let r = v.norm_sqr() / norm_sq;
                    if v.norm() < ENTROPY_CLAMP || r <= 0.0 {
                        0.0
                    } else {
                        wi * r * r.ln()
                    }
                })
                .sum::<f64>()
        })
        .collect();
    Ok(parts.iter().sum())
}

/// Treatment of edges leaving the box in the discrete horizontal calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Only edges between grid nodes; constants have zero form.
    #[default]
    Free,
    /// Zero ghost nodes outside the box.
    Dirichlet,
}

/// Flow-difference stencil for one grid, convention and boundary rule.
///
/// Holds the FFT plans and the per-mode phase factors `e^{iω_m κ h c_j}`.
pub struct Stencil {
    spec: GridSpec,
    conv: Convention,
    boundary: Boundary,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// `phase[j * N_τ + m]` shifts mode `m` by `κ h_ξ c_j`.
    phase: Vec<Complex64>,
}

impl std::fmt::Debug for Stencil {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Stencil").field("spec", &self.spec).field("conv", &self.conv).field("boundary", &self.boundary).finish()
    }
}

impl Stencil {
    pub fn new(spec: &GridSpec, conv: Convention, boundary: Boundary) -> Self {
        let nt = spec.points_tau;
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(nt);
        let inv = planner.plan_fft_inverse(nt);
        let period = nt as f64 * spec.h_tau();
        let kh = conv.kappa() * spec.h_xi();
        let mut phase = Vec::with_capacity(spec.points_xi * nt);
        for j in 0..spec.points_xi {
            let delta = kh * spec.xi_coord(j);
            for q in 0..nt {
                let (m, nyquist) = mode_number(q, nt);
                let arg = 2.0 * std::f64::consts::PI * m as f64 / period * delta;
                phase.push(if nyquist { Complex64::new(arg.cos(), 0.0) } else { Complex64::from_polar(1.0, arg) });
            }
        }
        Self { spec: spec.clone(), conv, boundary, fwd, inv, phase }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn convention(&self) -> Convention {
        self.conv
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Unnormalized forward FFT along every `τ`-line.
    pub fn to_modes(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = values.to_vec();
        self.transform(&mut buf, &self.fwd);
        buf
    }

    /// Inverse of [`Stencil::to_modes`], including the `1/N_τ` factor.
    pub fn from_modes(&self, modes: &[Complex64]) -> Vec<Complex64> {
        let mut buf = modes.to_vec();
        self.transform(&mut buf, &self.inv);
        let s = 1.0 / self.spec.points_tau as f64;
        buf.par_iter_mut().for_each(|v| *v *= s);
        buf
    }

    fn transform(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let nt = self.spec.points_tau;
        buf.par_chunks_mut(nt * 64).for_each(|chunk| {
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
            plan.process_with_scratch(chunk, &mut scratch);
        });
    }

    /// Phase factor for edges along axis `a` in the line through ξ-node
    /// `node`, at mode `q`.
    #[inline]
    fn edge_phase(&self, a: usize, idx: &[usize], q: usize) -> Complex64 {
        let n = self.spec.n;
        let nt = self.spec.points_tau;
        if a < n {
            self.phase[idx[n + a] * nt + q]
        } else {
            self.phase[idx[a - n] * nt + q].conj()
        }
    }

    fn line_geometry(&self, a: usize) -> (usize, usize, usize) {
        let stride = self.spec.stride(a);
        let np = self.spec.points_xi;
        (stride, np, np * stride)
    }

    /// `Σ_edges |X_h f|²` in mode space, scaled to the Dirichlet form.
    pub fn form_modes(&self, modes: &[Complex64]) -> f64 {
        let spec = &self.spec;
        let nt = spec.points_tau;
        let scale = spec.h_xi().powi(spec.dims_xi() as i32) * spec.h_tau() / (nt as f64 * spec.h_xi() * spec.h_xi());
        let mut total = 0.0;
        for a in 0..spec.dims_xi() {
            let (stride, np, block) = self.line_geometry(a);
            let parts: Vec<f64> = modes
                .par_chunks(block)
                .enumerate()
                .map(|(b, chunk)| {
                    let mut idx = vec![0usize; spec.dims_xi()];
                    let mut acc = 0.0;
                    for inner in (0..stride).step_by(nt) {
                        spec.xi_indices((b * block + inner) / nt, &mut idx);
                        for q in 0..nt {
                            let s = self.edge_phase(a, &idx, q);
                            let at = |j: usize| chunk[j * stride + inner + q];
                            for j in 0..np - 1 {
                                acc += (s * at(j + 1) - at(j)).norm_sqr();
                            }
                            if self.boundary == Boundary::Dirichlet {
                                acc += (s * at(0)).norm_sqr() + at(np - 1).norm_sqr();
                            }
                        }
                    }
                    acc
                })
                .collect();
            total += parts.iter().sum::<f64>();
        }
        total * scale
    }

    /// `ℒ_h = Σ X_h* X_h` applied in mode space.
    pub fn apply_modes(&self, modes: &[Complex64]) -> Vec<Complex64> {
        let spec = &self.spec;
        let nt = spec.points_tau;
        let inv_h2 = 1.0 / (spec.h_xi() * spec.h_xi());
        let dirichlet = self.boundary == Boundary::Dirichlet;
        let mut out = vec![Complex64::new(0.0, 0.0); modes.len()];
        for a in 0..spec.dims_xi() {
            let (stride, np, block) = self.line_geometry(a);
            out.par_chunks_mut(block).zip(modes.par_chunks(block)).enumerate().for_each(|(b, (oc, ic))| {
                let mut idx = vec![0usize; spec.dims_xi()];
                for inner in (0..stride).step_by(nt) {
                    spec.xi_indices((b * block + inner) / nt, &mut idx);
                    for q in 0..nt {
                        let s = self.edge_phase(a, &idx, q);
                        let sc = s.conj();
                        for j in 0..np {
                            let pos = j * stride + inner + q;
                            let f = ic[pos];
                            let mut acc = Complex64::new(0.0, 0.0);
                            if j > 0 || dirichlet {
                                let left = if j > 0 { ic[pos - stride] } else { Complex64::new(0.0, 0.0) };
                                acc += sc * (s * f - left);
                            }
                            if j + 1 < np || dirichlet {
                                let right = if j + 1 < np { ic[pos + stride] } else { Complex64::new(0.0, 0.0) };
                                acc -= s * right - f;
                            }
                            oc[pos] += acc * inv_h2;
                        }
                    }
                }
            });
        }
        out
    }

    /// Discrete Dirichlet form `Σ_i ‖X_i f‖² + ‖Y_i f‖²`.
    pub fn dirichlet_form(&self, values: &[Complex64]) -> f64 {
        self.form_modes(&self.to_modes(values))
    }

    /// Discrete sub-Laplacian `ℒ_h f`.
    pub fn sublaplacian(&self, values: &[Complex64]) -> Vec<Complex64> {
        self.from_modes(&self.apply_modes(&self.to_modes(values)))
    }

    /// Edge differences along axis `a` in `τ`-space together with their
    /// midpoints. Returns `(values, midpoint ξ-index offsets)` where edge
    /// `e` of a line sits between nodes `e−1` and `e` for Dirichlet (ghosts
    /// at `−1` and `N`) and between `e` and `e+1` for Free.
    fn edge_values(&self, modes: &[Complex64], a: usize) -> (Vec<Complex64>, usize) {
        let spec = &self.spec;
        let nt = spec.points_tau;
        let np = spec.points_xi;
        let ne = match self.boundary {
            Boundary::Free => np - 1,
            Boundary::Dirichlet => np + 1,
        };
        let stride = spec.stride(a);
        let outer = spec.len() / (np * stride);
        let mut out = vec![Complex64::new(0.0, 0.0); outer * ne * stride];
        out.par_chunks_mut(ne * stride).enumerate().for_each(|(b, oc)| {
            let ic = &modes[b * np * stride..(b + 1) * np * stride];
            let mut idx = vec![0usize; spec.dims_xi()];
            for inner in (0..stride).step_by(nt) {
                spec.xi_indices((b * np * stride + inner) / nt, &mut idx);
                for q in 0..nt {
                    let s = self.edge_phase(a, &idx, q);
                    for e in 0..ne {
                        let (l, r) = match self.boundary {
                            Boundary::Free => (Some(e), Some(e + 1)),
                            Boundary::Dirichlet => (e.checked_sub(1), if e < np { Some(e) } else { None }),
                        };
                        let get = |j: Option<usize>| j.map_or(Complex64::new(0.0, 0.0), |j| ic[j * stride + inner + q]);
                        oc[e * stride + inner + q] = s * get(r) - get(l);
                    }
                }
            }
        });
        self.transform(&mut out, &self.inv);
        let sc = 1.0 / (nt as f64 * spec.h_xi());
        out.par_iter_mut().for_each(|v| *v *= sc);
        (out, ne)
    }

    /// Dirichlet form with each edge term multiplied by `weight` evaluated
    /// at the edge midpoint `(ξ + ½h e_a, τ ± ½κ h c)`.
    pub fn weighted_form<W>(&self, values: &[Complex64], weight: W) -> f64
    where
        W: Fn(&[f64], f64) -> f64 + Sync,
    {
        let spec = &self.spec;
        let nt = spec.points_tau;
        let np = spec.points_xi;
        let d = spec.dims_xi();
        let n = spec.n;
        let hx = spec.h_xi();
        let modes = self.to_modes(values);
        let cell = hx.powi(d as i32) * spec.h_tau();
        let taus: Vec<f64> = (0..nt).map(|k| spec.tau_coord(k)).collect();
        let mut total = 0.0;
        for a in 0..d {
            let (edges, ne) = self.edge_values(&modes, a);
            let stride = spec.stride(a);
            let offset = match self.boundary {
                Boundary::Free => 0.5,
                Boundary::Dirichlet => -0.5,
            };
            let parts: Vec<f64> = edges
                .par_chunks(ne * stride)
                .enumerate()
                .map(|(b, chunk)| {
                    let mut idx = vec![0usize; d];
                    let mut xi = vec![0.0; d];
                    let mut acc = 0.0;
                    for inner in (0..stride).step_by(nt) {
                        spec.xi_indices((b * np * stride + inner) / nt, &mut idx);
                        for (c, &j) in xi.iter_mut().zip(&idx) {
                            *c = spec.xi_coord(j);
                        }
                        let other = if a < n { xi[n + a] } else { -xi[a - n] };
                        let shift = 0.5 * self.conv.kappa() * hx * other;
                        for e in 0..ne {
                            xi[a] = spec.xi_coord(0) + (e as f64 + offset) * hx;
                            for q in 0..nt {
                                let v = chunk[e * stride + inner + q];
                                acc += weight(&xi, taus[q] + shift) * v.norm_sqr();
                            }
                        }
                    }
                    acc
                })
                .collect();
            total += parts.iter().sum::<f64>();
        }
        total * cell
    }

    /// Centered flow differences at the nodes, one-sided on the box faces.
    pub fn gradient(&self, values: &[Complex64]) -> Vec<Vec<Complex64>> {
        let spec = &self.spec;
        let nt = spec.points_tau;
        let np = spec.points_xi;
        let h = spec.h_xi();
        let modes = self.to_modes(values);
        (0..spec.dims_xi())
            .map(|a| {
                let stride = spec.stride(a);
                let block = np * stride;
                let mut out = vec![Complex64::new(0.0, 0.0); modes.len()];
                out.par_chunks_mut(block).zip(modes.par_chunks(block)).enumerate().for_each(|(b, (oc, ic))| {
                    let mut idx = vec![0usize; spec.dims_xi()];
                    for inner in (0..stride).step_by(nt) {
                        spec.xi_indices((b * block + inner) / nt, &mut idx);
                        for q in 0..nt {
                            let s = self.edge_phase(a, &idx, q);
                            for j in 0..np {
                                let pos = j * stride + inner + q;
                                oc[pos] = if j == 0 {
                                    (s * ic[pos + stride] - ic[pos]) / h
                                } else if j + 1 == np {
                                    (ic[pos] - s.conj() * ic[pos - stride]) / h
                                } else {
                                    (s * ic[pos + stride] - s.conj() * ic[pos - stride]) / (2.0 * h)
                                };
                            }
                        }
                    }
                });
                self.from_modes(&out)
            })
            .collect()
    }
}

/// Signed mode number of FFT bin `q`, and whether it is the Nyquist bin.
fn mode_number(q: usize, nt: usize) -> (i64, bool) {
    if nt.is_multiple_of(2) && q == nt / 2 {
        (q as i64, true)
    } else if q <= (nt - 1) / 2 {
        (q as i64, false)
    } else {
        (q as i64 - nt as i64, false)
    }
}

/// Horizontal gradient `(X_1 f, …, X_n f, Y_1 f, …, Y_n f)`.
pub fn horizontal_gradient(f: &GridFunction, c: Convention) -> Vec<GridFunction> {
    Stencil::new(&f.spec, c, Boundary::Free)
        .gradient(&f.values)
        .into_iter()
        .map(|values| GridFunction { spec: f.spec.clone(), values })
        .collect()
}

/// `Σ_i ∫ |X_i f|² + |Y_i f|²` with free boundary edges.
pub fn dirichlet_form(f: &GridFunction, c: Convention) -> f64 {
    Stencil::new(&f.spec, c, Boundary::Free).dirichlet_form(&f.values)
}

/// `⟨ℒ f, f⟩` for the sub-Laplacian of the convention: `−Σ (X_i² + Y_i²)`
/// for `Std` and `−¼ Σ (X̃_i² + Ỹ_i²)` for `FL`. With these normalizations
/// `u(ξ, τ) = v(2ξ, τ)` gives `⟨ℒ̃u, u⟩ = 2^{−2n} ⟨ℒv, v⟩`.
pub fn sublaplacian_form(f: &GridFunction, c: Convention) -> f64 {
    let scale = match c {
        Convention::Std => 1.0,
        Convention::FL => 0.25,
    };
    scale * dirichlet_form(f, c)
}

/// `ℒ f = −Σ (X_i² + Y_i²) f` with free boundary edges.
pub fn sublaplacian(f: &GridFunction, c: Convention) -> GridFunction {
    let values = Stencil::new(&f.spec, c, Boundary::Free).sublaplacian(&f.values);
    GridFunction { spec: f.spec.clone(), values }
}

/// `⟨f, g⟩ = ∫ f ḡ` against Haar measure with uniform cell weights, the
/// inner product for which `ℒ_h` is the adjoint pairing of the form.
pub fn cell_inner(f: &GridFunction, g: &GridFunction) -> Complex64 {
    let cell = f.spec.h_xi().powi(f.spec.dims_xi() as i32) * f.spec.h_tau();
    let parts: Vec<Complex64> = f
        .values
        .par_chunks(8192)
        .zip(g.values.par_chunks(8192))
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y.conj()).sum())
        .collect();
    parts.iter().sum::<Complex64>() * cell
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::gross_gamma;
    use crate::group::{apply_field, Field, GroupPoint};
    use std::f64::consts::PI;

    fn small(n_pts: usize) -> GridSpec {
        GridSpec::new(1, 8.0, 8.0, n_pts, n_pts).unwrap()
    }

    fn gaussian(spec: &GridSpec) -> GridFunction {
        GridFunction::from_real_fn(spec, |xi, t| (-(xi[0] * xi[0] + xi[1] * xi[1] + t * t) / 2.0).exp())
    }

    #[test]
    fn spec_validation() {
        assert!(GridSpec::new(1, 8.0, 8.0, 7, 96).is_err());
        assert!(GridSpec::new(0, 8.0, 8.0, 16, 16).is_err());
        assert!(GridSpec::new(3, 8.0, 8.0, 96, 96).is_err());
        assert_eq!(GridSpec::desk(1).unwrap().len(), 96 * 96 * 96);
    }

    #[test]
    fn gauss_legendre_exactness() {
        for m in [1, 2, 5, 12, 40] {
            let (x, w) = gauss_legendre(m);
            for p in 0..2 * m {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(p as i32)).sum();
                let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "m={m} p={p}");
            }
        }
    }

    #[test]
    fn box_volume_and_gaussian_mass() {
        let spec = small(48);
        let one = GridFunction::from_real_fn(&spec, |_, _| 1.0);
        let v = integrate(&one, &Measure::Haar).unwrap();
        assert!((v - spec.volume()).abs() < 1e-10 * spec.volume());
        let spec = small(96);
        let g = integrate(&gaussian(&spec), &Measure::Haar).unwrap();
        assert!((g / (2.0 * PI).powf(1.5) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn semi_gaussian_constant() {
        let spec = GridSpec::new(1, 8.0, 3.0, 64, 16).unwrap();
        let gamma = gross_gamma(1).unwrap();
        let one = GridFunction::from_real_fn(&spec, |_, _| 1.0);
        let v = integrate(&one, &Measure::SemiGaussian { gamma }).unwrap();
        // Separable oracle: 1-D trapezoid sum of e^{-x²/2}, squared.
        let h = spec.h_xi();
        let line: f64 = (0..64).map(|j| {
            let x = spec.xi_coord(j);
            let w = if j == 0 || j == 63 { 0.5 * h } else { h };
            w * (-0.5 * x * x).exp()
        }).sum();
        assert!((v - gamma * line * line * 6.0).abs() < 1e-12 * v);
        assert!((v - gamma * 2.0 * PI * 6.0).abs() < 1e-8 * v);
    }

    #[test]
    fn norms_and_entropy() {
        let spec = small(64);
        let g = gaussian(&spec);
        let l2 = lp_norm(&g, 2.0, &Measure::Haar).unwrap();
        let sq = integrate(&g.map(|v| v * v.conj()), &Measure::Haar).unwrap();
        assert!((l2 * l2 - sq).abs() < 1e-12 * sq);
        // |u|²/‖u‖² is the N(0, ½ I₃) density, whose differential entropy is
        // (3/2) log(π e); the functional is minus that.
        let ent = entropy_term(&g, &Measure::Haar).unwrap();
        let exact = -1.5 * (PI * std::f64::consts::E).ln();
        assert!((ent - exact).abs() < 1e-8, "{ent} vs {exact}");
        assert!(matches!(entropy_term(&GridFunction::zeros(&spec), &Measure::Haar), Err(Error::ZeroFunction)));
    }

    #[test]
    fn entropy_of_constant_on_probability_measure() {
        // Normalize the Haar measure of the box to one with γ-free scaling.
        let spec = GridSpec::new(1, 0.5, 0.5, 16, 16).unwrap();
        let one = GridFunction::from_real_fn(&spec, |_, _| 3.0);
        let e = entropy_term(&one, &Measure::Haar).unwrap();
        assert!(e.abs() < 1e-12, "{e}");
    }

    #[test]
    fn kaplan_weight_integral() {
        // By homogeneity ∫ |x|^{-α} e^{-|x|⁴} = Q·Vol(B₁)·Γ((Q-α)/4)/4, and
        // the FL unit ball {r⁴ + τ² < 1} in ℍ¹ has volume π²/2.
        let spec = GridSpec::new(1, 3.0, 3.0, 96, 96).unwrap();
        let alpha = 2.0;
        let f = GridFunction::from_real_fn(&spec, |xi, t| {
            let r2 = xi[0] * xi[0] + xi[1] * xi[1];
            (-(r2 * r2 + t * t)).exp()
        });
        let m = Measure::KaplanWeight { alpha, convention: Convention::FL };
        let v = integrate(&f, &m).unwrap();
        let exact = PI * PI / 2.0 * statrs::function::gamma::gamma((4.0 - alpha) / 4.0);
        assert!((v / exact - 1.0).abs() < 2e-3, "{v} vs {exact}");
        let bad = Measure::KaplanWeight { alpha: 4.0, convention: Convention::FL };
        assert!(matches!(integrate(&f, &bad), Err(Error::NonIntegrable(_))));
    }

    #[test]
    fn constant_has_zero_form() {
        let spec = small(24);
        let one = GridFunction::from_real_fn(&spec, |_, _| 2.5);
        for c in [Convention::Std, Convention::FL] {
            assert!(dirichlet_form(&one, c).abs() < 1e-20);
            let grad = horizontal_gradient(&one, c);
            assert!(grad.iter().all(|g| g.max_abs() < 1e-12));
        }
    }

    #[test]
    fn form_equals_pairing_exactly() {
        let spec = GridSpec::new(1, 6.0, 6.0, 24, 20).unwrap();
        let f = GridFunction::from_fn(&spec, |xi, t| {
            Complex64::new((-(xi[0] * xi[0] + 2.0 * xi[1] * xi[1] + t * t) / 3.0).exp(), 0.2 * (xi[0] * t).sin())
        });
        for boundary in [Boundary::Free, Boundary::Dirichlet] {
            let st = Stencil::new(&spec, Convention::Std, boundary);
            let lf = GridFunction { spec: spec.clone(), values: st.sublaplacian(&f.values) };
            let pair = cell_inner(&lf, &f);
            let form = st.dirichlet_form(&f.values);
            assert!((pair.re - form).abs() < 1e-11 * form, "{boundary:?}: {pair} vs {form}");
            assert!(pair.im.abs() < 1e-11 * form);
            let weighted = st.weighted_form(&f.values, |_, _| 1.0);
            assert!((weighted - form).abs() < 1e-11 * form);
        }
    }

    #[test]
    fn gaussian_form_and_refinement() {
        // For u = e^{-(r²+τ²)/2}: ‖X u‖² + ‖Y u‖² = (9/8) π^{3/2}.
        let exact = 9.0 / 8.0 * PI.powf(1.5);
        let errs: Vec<f64> = [24usize, 48, 96]
            .iter()
            .map(|&m| {
                let spec = small(m);
                (dirichlet_form(&gaussian(&spec), Convention::Std) - exact).abs()
            })
            .collect();
        assert!(errs[2] < 5e-3 * exact, "{errs:?}");
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    #[test]
    fn pairing_against_trapezoid_on_desk_grid() {
        let spec = GridSpec::desk(1).unwrap();
        let g = gaussian(&spec);
        let lg = sublaplacian(&g, Convention::Std);
        let prod = GridFunction { spec: spec.clone(), values: lg.values.iter().zip(&g.values).map(|(a, b)| a * b.conj()).collect() };
        let pair = integrate(&prod, &Measure::Haar).unwrap();
        let form = dirichlet_form(&g, Convention::Std);
        assert!((pair - form).abs() < 5e-3 * form);
    }

    #[test]
    fn gradient_matches_apply_field() {
        let spec = GridSpec::new(1, 4.0, 4.0, 64, 64).unwrap();
        let f = |xi: &[f64], t: f64| (-(xi[0] * xi[0] + xi[1] * xi[1]) / 2.0 - t * t / 2.0).exp() * (1.0 + 0.3 * xi[0]);
        let g = GridFunction::from_real_fn(&spec, f);
        for c in [Convention::Std, Convention::FL] {
            let grad = horizontal_gradient(&g, c);
            for &(j0, j1, k) in &[(30usize, 33usize, 31usize), (25, 40, 36), (35, 28, 20)] {
                let z = GroupPoint::new(1, vec![spec.xi_coord(j0), spec.xi_coord(j1)], spec.tau_coord(k)).unwrap();
                let pos = (j0 * 64 + j1) * 64 + k;
                let fx = apply_field(f, &z, Field::X(0), c, 1e-5).unwrap();
                let fy = apply_field(f, &z, Field::Y(0), c, 1e-5).unwrap();
                let h2 = spec.h_xi() * spec.h_xi();
                assert!((grad[0].values[pos].re - fx).abs() < 2.0 * h2, "{c:?} X: {} vs {fx}", grad[0].values[pos].re);
                assert!((grad[1].values[pos].re - fy).abs() < 2.0 * h2, "{c:?} Y");
            }
        }
    }

    #[test]
    fn convention_bridge_is_exact_on_matched_grids() {
        // u(ξ, τ) = v(2ξ, τ) sampled on a grid half as wide in ξ carries the
        // same node values, and the FL flow step κh equals the Std one.
        let v_spec = GridSpec::new(1, 6.0, 6.0, 32, 32).unwrap();
        let u_spec = GridSpec::new(1, 3.0, 6.0, 32, 32).unwrap();
        let v = |x: &[f64], t: f64| (-(x[0] * x[0] + 0.5 * x[1] * x[1]) / 2.0 - t * t / 2.0).exp() * (1.0 + 0.2 * x[1] * t);
        let fv = GridFunction::from_real_fn(&v_spec, v);
        let fu = GridFunction::from_real_fn(&u_spec, |x, t| v(&[2.0 * x[0], 2.0 * x[1]], t));
        let lhs = sublaplacian_form(&fu, Convention::FL);
        let rhs = 0.25 * sublaplacian_form(&fv, Convention::Std);
        assert!((lhs - rhs).abs() < 1e-10 * rhs, "{lhs} vs {rhs}");
    }

    #[test]
    fn binary_round_trip() {
        let spec = GridSpec::new(1, 2.0, 3.0, 8, 10).unwrap();
        let f = GridFunction::from_fn(&spec, |xi, t| Complex64::new(xi[0] + t, xi[1] * 1e-300));
        let mut buf = Vec::new();
        f.write_binary(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 40 + 16 * spec.len());
        assert_eq!(GridFunction::read_binary(&buf[..]).unwrap(), f);
        buf[0] = b'X';
        assert!(matches!(GridFunction::read_binary(&buf[..]), Err(Error::Format(_))));
    }

    #[test]
    fn slice_csv_shape() {
        let spec = GridSpec::new(1, 2.0, 2.0, 8, 9).unwrap();
        let f = GridFunction::from_real_fn(&spec, |xi, t| xi[0] + t);
        let mut out = Vec::new();
        f.write_slice_csv(&[0, 2], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + 8 * 9);
        assert!(text.starts_with("x1,tau,re,im"));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]

            #[test]
            fn form_nonnegative_and_pairing(a in 0.2..2.0f64, b in 0.2..2.0f64, x0 in -1.0..1.0f64, k in -2.0..2.0f64) {
                let spec = GridSpec::new(1, 5.0, 5.0, 16, 16).unwrap();
                let f = GridFunction::from_fn(&spec, |xi, t| {
                    let r = (-(a * (xi[0] - x0).powi(2) + b * xi[1] * xi[1] + t * t)).exp();
                    Complex64::from_polar(r, k * t)
                });
                let st = Stencil::new(&spec, Convention::Std, Boundary::Free);
                let form = st.dirichlet_form(&f.values);
                prop_assert!(form >= 0.0);
                let lf = GridFunction { spec: spec.clone(), values: st.sublaplacian(&f.values) };
                let pair = cell_inner(&lf, &f);
                prop_assert!(pair.re >= -1e-12 * form.max(1e-300));
                prop_assert!((pair.re - form).abs() <= 1e-10 * form.max(1e-300));
            }

            #[test]
            fn quadrature_exact_on_axis_constants(c in -3.0..3.0f64, r in 0.5..4.0f64) {
                let spec = GridSpec::new(1, r, 2.0 * r, 9, 12).unwrap();
                let f = GridFunction::from_real_fn(&spec, |_, _| c);
                let v = integrate(&f, &Measure::Haar).unwrap();
                prop_assert!((v - c * spec.volume()).abs() <= 1e-12 * spec.volume() * c.abs().max(1.0));
            }
        }
    }
}
