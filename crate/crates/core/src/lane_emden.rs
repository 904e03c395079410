//! Lane-Emden ground state `-Δu₀ = u₀^p` in `B₁`, `u₀ = 0` on `∂B₁`.
//!
//! Built by scaling rather than shooting: integrate the normalized problem
//! `w'' + (N-1)/r w' = -w^p`, `w(0) = 1`, `w'(0) = 0` up to its first zero
//! `r₀`, then `u₀(r) = r₀^{2/(p-1)} w(r₀ r)`. Near the origin the even power
//! series of `w` is used directly.

mod cache;
mod ode;

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::radial_core::{make_grid, unit_ball_volume, RadialGrid};

pub use cache::{build_lane_emden_cached, cache_dir, load_table, save_table};

/// Series is trusted for `r₀ r` up to this value.
const SERIES_CUTOFF: f64 = 0.2;
const SERIES_TERMS: usize = 48;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaneEmdenOptions {
    /// Relative and absolute tolerance of the adaptive integrator.
    pub tol: f64,
    /// Give up if `w` has no zero before this radius.
    pub radius_cap: f64,
    /// Starting radius of the integrator, seeded by the series.
    pub r_eps: f64,
}

impl Default for LaneEmdenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-13,
            radius_cap: 1e3,
            r_eps: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaneEmdenTable {
    pub dim: usize,
    pub exponent: f64,
    pub grid: RadialGrid,
    pub u0: Vec<f64>,
    pub du0: Vec<f64>,
    /// `I_p(r) = ∫_{B_r} u₀^p`, evaluated through `I_p(r) = -Nω_N r^{N-1} u₀'(r)`.
    pub ip_cum: Vec<f64>,
    pub u0_at_0: f64,
    pub du0_at_1: f64,
    pub ip_total: f64,
    /// First zero of the normalized profile.
    pub r0: f64,
    pub tol: f64,
    #[serde(skip)]
    series: Vec<f64>,
}

/// Admissible exponents: `1 < p < (N+2)/(N-2)`, any `p > 1` for `N = 2`.
pub fn check_exponent(dim: usize, p: f64) -> Result<()> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
    }
    let upper = if dim == 2 {
        f64::INFINITY
    } else {
        (dim as f64 + 2.0) / (dim as f64 - 2.0)
    };
    if !(p.is_finite() && p > 1.0 && p < upper) {
        return Err(Error::InvalidInput(format!(
            "Lane-Emden exponent p = {p} outside (1, {upper}) for N = {dim}"
        )));
    }
    Ok(())
}

pub fn build_lane_emden(dim: usize, p: f64, n: usize) -> Result<LaneEmdenTable> {
    build_lane_emden_with(dim, p, n, LaneEmdenOptions::default())
}

pub fn build_lane_emden_with(
    dim: usize,
    p: f64,
    n: usize,
    opts: LaneEmdenOptions,
) -> Result<LaneEmdenTable> {
    check_exponent(dim, p)?;
    let grid = make_grid(dim, 1.0, n)?;
    let series = series_coefficients(dim, p, SERIES_TERMS);
    let rhs = ode::LaneEmdenRhs { dim, p };

    let seed = |x: f64| (series_value(&series, x), series_slope(&series, x));
    let (w0, dw0) = seed(opts.r_eps);
    let r0 = ode::first_zero(&rhs, opts.r_eps, [w0, dw0], opts.tol, opts.radius_cap)?;

    // second pass lands exactly on the rescaled nodes
    let targets: Vec<f64> = grid.nodes.iter().map(|r| r * r0).collect();
    let samples = ode::sample_at(&rhs, opts.r_eps, [w0, dw0], &targets, opts.tol)?;

    let scale = r0.powf(2.0 / (p - 1.0));
    let mut u0 = Vec::with_capacity(n);
    let mut du0 = Vec::with_capacity(n);
    for (i, &x) in targets.iter().enumerate() {
        let (w, dw) = if x <= SERIES_CUTOFF {
            seed(x)
        } else {
            (samples[i][0], samples[i][1])
        };
        u0.push(scale * w);
        du0.push(scale * r0 * dw);
    }
    u0[n - 1] = 0.0;
    du0[0] = 0.0;

    let surface = dim as f64 * unit_ball_volume(dim);
    let ip_cum: Vec<f64> = grid
        .nodes
        .iter()
        .zip(&du0)
        .map(|(&r, &d)| -surface * r.powi(dim as i32 - 1) * d)
        .collect();
    let du0_at_1 = du0[n - 1];
    let ip_total = ip_cum[n - 1];
    Ok(LaneEmdenTable {
        dim,
        exponent: p,
        u0_at_0: u0[0],
        du0_at_1,
        ip_total,
        r0,
        tol: opts.tol,
        grid,
        u0,
        du0,
        ip_cum,
        series,
    })
}

impl LaneEmdenTable {
    fn scale(&self) -> f64 {
        self.r0.powf(2.0 / (self.exponent - 1.0))
    }

    fn check_r(&self, r: f64) -> Result<f64> {
        if !(-1e-14..=1.0 + 1e-14).contains(&r) || r.is_nan() {
            return Err(Error::InvalidInput(format!("radius {r} outside [0, 1]")));
        }
        Ok(r.clamp(0.0, 1.0))
    }

    fn locate(&self, r: f64) -> (usize, f64) {
        let n = self.grid.n();
        let h = self.grid.h;
        let i = ((r / h).floor() as usize).min(n - 2);
        (i, (r - self.grid.nodes[i]) / h)
    }

    /// `(u₀(r), u₀'(r))`.
    pub fn eval_u0(&self, r: f64) -> Result<(f64, f64)> {
        let r = self.check_r(r)?;
        let x = r * self.r0;
        if x <= SERIES_CUTOFF {
            let s = self.scale();
            return Ok((
                s * series_value(&self.series, x),
                s * self.r0 * series_slope(&self.series, x),
            ));
        }
        let (i, t) = self.locate(r);
        let h = self.grid.h;
        Ok(hermite(
            self.u0[i],
            self.du0[i],
            self.u0[i + 1],
            self.du0[i + 1],
            h,
            t,
        ))
    }

    /// `I_p(r) = ∫_{B_r} u₀^p`.
    pub fn ip_of(&self, r: f64) -> Result<f64> {
        let r = self.check_r(r)?;
        if r == 1.0 {
            return Ok(self.ip_total);
        }
        let x = r * self.r0;
        let surface = self.dim as f64 * unit_ball_volume(self.dim);
        if x <= SERIES_CUTOFF {
            let slope = self.scale() * self.r0 * series_slope(&self.series, x);
            return Ok(-surface * r.powi(self.dim as i32 - 1) * slope);
        }
        let (i, t) = self.locate(r);
        if i == self.grid.n() - 2 {
            return Ok(self.ip_total - self.tail_integral(r)?);
        }
        let dens = |j: usize| {
            surface
                * self.grid.nodes[j].powi(self.dim as i32 - 1)
                * self.u0[j].max(0.0).powf(self.exponent)
        };
        let (v, _) = hermite(
            self.ip_cum[i],
            dens(i),
            self.ip_cum[i + 1],
            dens(i + 1),
            self.grid.h,
            t,
        );
        Ok(v)
    }

    /// `∫_{r<|x|<1} u₀^p` for `r` in the last cell. A cubic in `r` cannot follow
    /// the `(1 - r)^{p+1}` tail, so integrate `u₀^p` from the interpolant
    /// under `s = 1 - (1 - r)z²`.
    fn tail_integral(&self, r: f64) -> Result<f64> {
        let surface = self.dim as f64 * unit_ball_volume(self.dim);
        let w = 1.0 - r;
        let (nodes, weights) = gauss_legendre_unit();
        let mut acc = 0.0;
        for (z, wt) in nodes.iter().zip(weights) {
            let s = 1.0 - w * z * z;
            let u = self.eval_u0(s)?.0.max(0.0);
            acc += wt * 2.0 * z * s.powi(self.dim as i32 - 1) * u.powf(self.exponent);
        }
        Ok(surface * w * acc)
    }

    /// `u₀(a) - u₀(b)` without cancellation when both points sit near the origin.
    pub fn u0_drop(&self, a: f64, b: f64) -> Result<f64> {
        let a = self.check_r(a)?;
        let b = self.check_r(b)?;
        let (xa, xb) = (a * self.r0, b * self.r0);
        if xa.max(xb) <= SERIES_CUTOFF {
            let (ta, tb) = (xa * xa, xb * xb);
            let mut pb = 1.0;
            let mut diff = 0.0;
            let mut sum = 0.0;
            for &c in &self.series[1..] {
                // diff = ta^k - tb^k, pb = tb^{k-1} on entry
                diff = ta * diff + pb * (ta - tb);
                pb *= tb;
                sum += c * diff;
            }
            return Ok(self.scale() * sum);
        }
        Ok(self.eval_u0(a)?.0 - self.eval_u0(b)?.0)
    }

    /// Max-norm residual of `u₀'' + (N-1)/r u₀' + u₀^p` at interior nodes, with
    /// `u₀''` from fourth-order centered differences of the stored slope
    /// (odd reflection at the origin, one-sided at the last interior node).
    pub fn equation_residual(&self) -> f64 {
        self.equation_residual_within(1.0)
    }

    /// [`Self::equation_residual`] restricted to nodes with `r ≤ r_max`.
    pub fn equation_residual_within(&self, r_max: f64) -> f64 {
        let n = self.grid.n();
        let h = self.grid.h;
        let nd = self.dim as f64;
        let d = |j: isize| {
            if j < 0 {
                -self.du0[(-j) as usize]
            } else {
                self.du0[j as usize]
            }
        };
        (1..n - 1)
            .filter(|&i| self.grid.nodes[i] <= r_max)
            .map(|i| {
                let r = self.grid.nodes[i];
                let k = i as isize;
                let d2 = if i + 2 < n {
                    (-d(k + 2) + 8.0 * d(k + 1) - 8.0 * d(k - 1) + d(k - 2)) / (12.0 * h)
                } else {
                    (-d(k - 3) + 6.0 * d(k - 2) - 18.0 * d(k - 1) + 10.0 * d(k) + 3.0 * d(k + 1))
                        / (12.0 * h)
                };
                (d2 + (nd - 1.0) / r * self.du0[i] + self.u0[i].max(0.0).powf(self.exponent)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Same residual but on the stored values through the 3-point stencil.
    pub fn value_residual(&self) -> f64 {
        let n = self.grid.n();
        let h = self.grid.h;
        let nd = self.dim as f64;
        (1..n - 1)
            .map(|i| {
                let r = self.grid.nodes[i];
                let u = &self.u0;
                let d2 = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
                let d1 = (u[i + 1] - u[i - 1]) / (2.0 * h);
                (d2 + (nd - 1.0) / r * d1 + u[i].max(0.0).powf(self.exponent)).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Scales the stored profile values; only used to exercise failure paths.
    #[doc(hidden)]
    pub fn with_corrupted_profile(&self, factor: f64) -> Self {
        let mut t = self.clone();
        for v in &mut t.u0 {
            *v *= factor;
        }
        t
    }
}

/// 16-point Gauss-Legendre rule on `[0, 1]`.
fn gauss_legendre_unit() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = 16;
        let (mut xs, mut ws) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for k in 0..n {
            let mut x = (PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 1.0;
            for _ in 0..100 {
                // P_n(x) and P_n'(x) by the three-term recurrence
                let (mut p0, mut p1) = (1.0, x);
                for j in 2..=n {
                    let jf = j as f64;
                    let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let dx = p1 / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            xs.push(0.5 * (1.0 - x));
            ws.push(1.0 / ((1.0 - x * x) * dp * dp));
        }
        (xs, ws)
    })
}

/// Cubic Hermite value and slope at fraction `t` of an interval of width `h`.
fn hermite(y0: f64, d0: f64, y1: f64, d1: f64, h: f64, t: f64) -> (f64, f64) {
    let t2 = t * t;
    let t3 = t2 * t;
    let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
    let h10 = t3 - 2.0 * t2 + t;
    let h01 = -2.0 * t3 + 3.0 * t2;
    let h11 = t3 - t2;
    let value = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let g00 = 6.0 * t2 - 6.0 * t;
    let g10 = 3.0 * t2 - 4.0 * t + 1.0;
    let g01 = -6.0 * t2 + 6.0 * t;
    let g11 = 3.0 * t2 - 2.0 * t;
    let slope = (g00 * y0 + g01 * y1) / h + g10 * d0 + g11 * d1;
    (value, slope)
}

/// Coefficients `a_k` of `w(x) = Σ a_k x^{2k}` for the normalized problem.
pub fn series_coefficients(dim: usize, p: f64, terms: usize) -> Vec<f64> {
    let nd = dim as f64;
    let mut a = vec![1.0];
    // f = w^p in powers of t = x²
    let mut f = vec![1.0];
    for k in 1..terms {
        let kf = k as f64;
        a.push(-f[k - 1] / (2.0 * kf * (2.0 * kf + nd - 2.0)));
        let mut s = 0.0;
        for j in 1..=k {
            s += ((p + 1.0) * j as f64 - kf) * a[j] * f[k - j];
        }
        f.push(s / kf);
    }
    a
}

fn series_value(a: &[f64], x: f64) -> f64 {
    let t = x * x;
    a.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn series_slope(a: &[f64], x: f64) -> f64 {
    let t = x * x;
    let mut acc = 0.0;
    for (k, c) in a.iter().enumerate().skip(1).rev() {
        acc = acc * t + 2.0 * k as f64 * c;
    }
    acc * x
}
