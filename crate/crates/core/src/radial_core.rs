//! Radial grids, ball quadrature, tridiagonal solves and bracketed roots.
//!
//! Also hosts the conservative finite-volume form of the radial Laplacian
//! shared by the Newton solver and the eigensolver: node `i` owns the shell
//! `[r_i - h/2, r_i + h/2] ∩ [0, R]` and neighbouring nodes exchange flux
//! through the sphere at the midpoint radius.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform grid on `[0, outer_radius]` for a radial function in dimension `dim`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialGrid {
    pub dim: usize,
    pub outer_radius: f64,
    pub nodes: Vec<f64>,
    pub h: f64,
}

impl RadialGrid {
    pub fn n(&self) -> usize {
        self.nodes.len()
    }
}

/// Unit-volume ball `B_{R_N}` in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BallGeometry {
    pub dim: usize,
    /// Volume of the unit ball.
    pub omega: f64,
    /// Radius of the ball with volume one.
    pub radius: f64,
}

impl BallGeometry {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
        }
        let omega = unit_ball_volume(dim);
        let radius = if dim == 2 {
            1.0 / PI.sqrt()
        } else {
            omega.powf(-1.0 / dim as f64)
        };
        Ok(Self { dim, omega, radius })
    }

    /// Surface area of the unit sphere, `N ω_N`.
    pub fn surface(&self) -> f64 {
        self.dim as f64 * self.omega
    }

    /// `N ω_N r^{N-1}`.
    pub fn shell_density(&self, r: f64) -> f64 {
        self.surface() * r.powi(self.dim as i32 - 1)
    }

    /// Volume of the ball of radius `r`.
    pub fn ball_volume(&self, r: f64) -> f64 {
        self.omega * r.powi(self.dim as i32)
    }
}

/// `π^{N/2}/Γ(N/2 + 1)` via `ω_N = 2π/N · ω_{N-2}`.
pub fn unit_ball_volume(dim: usize) -> f64 {
    let (mut k, mut w) = if dim % 2 == 0 { (0, 1.0) } else { (1, 2.0) };
    while k < dim {
        k += 2;
        w *= 2.0 * PI / k as f64;
    }
    w
}

/// Radial samples on a grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadialField {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

impl RadialField {
    pub fn new(grid: RadialGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                got: values.len(),
            });
        }
        Ok(Self { grid, values })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }
}

pub fn make_grid(dim: usize, outer_radius: f64, n: usize) -> Result<RadialGrid> {
    if dim < 2 {
        return Err(Error::InvalidInput(format!("dimension {dim} < 2")));
    }
    if !(outer_radius.is_finite() && outer_radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "outer radius {outer_radius} must be positive"
        )));
    }
    if n < 64 || n % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "grid size {n} must be odd and at least 64"
        )));
    }
    let h = outer_radius / (n - 1) as f64;
    let mut nodes: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    nodes[n - 1] = outer_radius;
    Ok(RadialGrid {
        dim,
        outer_radius,
        nodes,
        h,
    })
}

/// Composite Simpson weights for `∫₀^R f(r) N ω_N r^{N-1} dr`.
pub fn simpson_weights(grid: &RadialGrid) -> Vec<f64> {
    let surface = grid.dim as f64 * unit_ball_volume(grid.dim);
    let n = grid.n();
    grid.nodes
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let c = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * grid.h / 3.0 * surface * r.powi(grid.dim as i32 - 1)
        })
        .collect()
}

/// Simpson value of `∫_{B_R} f` for radial `f` sampled on `grid`.
pub fn ball_integral(grid: &RadialGrid, values: &[f64]) -> Result<f64> {
    if values.len() != grid.n() {
        return Err(Error::LengthMismatch {
            expected: grid.n(),
            got: values.len(),
        });
    }
    Ok(simpson_weights(grid)
        .iter()
        .zip(values)
        .map(|(w, f)| w * f)
        .sum())
}

/// Thomas algorithm. `lower[i]` couples row `i+1` to column `i`, `upper[i]`
/// couples row `i` to column `i+1`.
pub fn solve_tridiagonal(
    lower: &[f64],
    diag: &[f64],
    upper: &[f64],
    rhs: &[f64],
) -> Result<Vec<f64>> {
    let n = diag.len();
    if rhs.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rhs.len(),
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    for side in [lower, upper] {
        if side.len() != n - 1 {
            return Err(Error::LengthMismatch {
                expected: n - 1,
                got: side.len(),
            });
        }
    }
    let row_scale = |i: usize| {
        let mut s = diag[i].abs();
        if i > 0 {
            s = s.max(lower[i - 1].abs());
        }
        if i + 1 < n {
            s = s.max(upper[i].abs());
        }
        s
    };
    let mut c = vec![0.0; n];
    let mut x = vec![0.0; n];
    let mut pivot = diag[0];
    if pivot.abs() < 1e-14 * row_scale(0) || pivot == 0.0 {
        return Err(Error::SingularPivot { row: 0, pivot });
    }
    x[0] = rhs[0] / pivot;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / pivot;
        pivot = diag[i] - lower[i - 1] * c[i - 1];
        if pivot.abs() < 1e-14 * row_scale(i) || pivot == 0.0 {
            return Err(Error::SingularPivot { row: i, pivot });
        }
        x[i] = (rhs[i] - lower[i - 1] * x[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Ok(x)
}

/// Bisection with an optional safeguarded Newton step when `df` is supplied.
/// Returns once the bracket is narrower than `tol` or `f` vanishes exactly.
pub fn find_root_bracketed<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    find_root_with(f, None::<fn(f64) -> f64>, lo, hi, tol)
}

pub fn find_root_newton<F, D>(f: F, df: D, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    find_root_with(f, Some(df), lo, hi, tol)
}

fn find_root_with<F, D>(f: F, df: Option<D>, lo: f64, hi: f64, tol: f64) -> Result<f64>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let eval = |x: f64| {
        let y = f(x);
        if y.is_finite() {
            Ok(y)
        } else {
            Err(Error::NonFinite(x))
        }
    };
    let mut fa = eval(a)?;
    let fb = eval(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoBracket { lo: a, hi: b });
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..400 {
        if b - a <= tol {
            break;
        }
        let fx = eval(x)?;
        if fx == 0.0 {
            return Ok(x);
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let mid = 0.5 * (a + b);
        x = match df.as_ref().map(|d| d(x)) {
            Some(dx) if dx != 0.0 && dx.is_finite() => {
                let xn = x - fx / dx;
                if xn > a && xn < b {
                    // A Newton step that lands in the bracket may still stall;
                    // probe a tolerance-width bracket around it to close out.
                    let probe = 0.5 * tol;
                    if (xn - a) > probe && (b - xn) > probe {
                        let (lo_p, hi_p) = (xn - probe, xn + probe);
                        let (fl, fh) = (eval(lo_p)?, eval(hi_p)?);
                        if fl.signum() != fh.signum() {
                            return Ok(xn);
                        }
                    }
                    xn
                } else {
                    mid
                }
            }
            _ => mid,
        };
        if x <= a || x >= b {
            x = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Finite-volume radial Laplacian on a grid over `[0, R]` with `ψ(R) = 0`.
///
/// `(Aφ)_i = k_{i-1/2}(φ_i - φ_{i-1}) + k_{i+1/2}(φ_i - φ_{i+1})` with
/// `k_{i+1/2} = N ω_N r_{i+1/2}^{N-1}/h`, and `volumes[i]` the shell measure
/// owned by node `i`. Both the unit mass constraint and all weighted means
/// use `volumes` as quadrature, which makes discrete Green identities exact.
#[derive(Debug, Clone)]
pub struct RadialOperator {
    pub grid: RadialGrid,
    pub volumes: Vec<f64>,
    /// Flux coefficient between node `i` and `i + 1`.
    pub face: Vec<f64>,
}

impl RadialOperator {
    pub fn new(grid: &RadialGrid) -> Self {
        let n = grid.n();
        let omega = unit_ball_volume(grid.dim);
        let surface = grid.dim as f64 * omega;
        let h = grid.h;
        let vol = |r: f64| omega * r.powi(grid.dim as i32);
        let volumes = (0..n)
            .map(|i| {
                let lo = if i == 0 { 0.0 } else { grid.nodes[i] - 0.5 * h };
                let hi = if i == n - 1 {
                    grid.outer_radius
                } else {
                    grid.nodes[i] + 0.5 * h
                };
                vol(hi) - vol(lo)
            })
            .collect();
        let face = (0..n - 1)
            .map(|i| surface * ((i as f64 + 0.5) * h).powi(grid.dim as i32 - 1) / h)
            .collect();
        Self {
            grid: grid.clone(),
            volumes,
            face,
        }
    }

    pub fn n(&self) -> usize {
        self.volumes.len()
    }

    /// `Aφ` over the interior unknowns `0..n-1`, with `φ_{n-1} = 0` implied.
    pub fn apply(&self, phi: &[f64]) -> Vec<f64> {
        let m = self.n() - 1;
        (0..m)
            .map(|i| {
                let left = if i > 0 {
                    self.face[i - 1] * (phi[i] - phi[i - 1])
                } else {
                    0.0
                };
                let right_val = if i + 1 < m { phi[i + 1] } else { 0.0 };
                left + self.face[i] * (phi[i] - right_val)
            })
            .collect()
    }

    /// Tridiagonal bands `(lower, diag, upper)` of `A` on the interior unknowns.
    pub fn bands(&self) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let m = self.n() - 1;
        let diag = (0..m)
            .map(|i| self.face[i] + if i > 0 { self.face[i - 1] } else { 0.0 })
            .collect();
        let off: Vec<f64> = (0..m - 1).map(|i| -self.face[i]).collect();
        (off.clone(), diag, off)
    }

    /// `Σ c_i f_i` over all nodes.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.volumes.iter().zip(values).map(|(c, f)| c * f).sum()
    }

    /// `½ Σ k_{i+1/2}(φ_{i+1} - φ_i)²`, the discrete Dirichlet energy.
    pub fn dirichlet_energy(&self, phi: &[f64]) -> f64 {
        0.5 * self
            .face
            .iter()
            .enumerate()
            .map(|(i, k)| k * (phi[i + 1] - phi[i]).powi(2))
            .sum::<f64>()
    }

    /// Discrete bilinear form `φᵀAχ` over full-length fields.
    pub fn stiffness_product(&self, phi: &[f64], chi: &[f64]) -> f64 {
        self.face
            .iter()
            .enumerate()
            .map(|(i, k)| k * (phi[i + 1] - phi[i]) * (chi[i + 1] - chi[i]))
            .sum()
    }
}

/// Max-norm residual of `-Δf - g` at interior nodes by fourth-order centered
/// differences. `f` is reflected evenly through the origin, where the limit
/// form `-N f''(0)` is used; the last interior node falls back to the
/// three-point stencil.
pub fn laplacian_residual(grid: &RadialGrid, f: &[f64], g: &[f64]) -> f64 {
    laplacian_residual_where(grid, f, g, |_| true)
}

/// [`laplacian_residual`] restricted to nodes whose radius passes `keep`.
pub fn laplacian_residual_where(
    grid: &RadialGrid,
    f: &[f64],
    g: &[f64],
    keep: impl Fn(f64) -> bool,
) -> f64 {
    let n = grid.n();
    let h = grid.h;
    let nd = grid.dim as f64;
    let at = |j: isize| f[j.unsigned_abs()];
    let mut worst = 0.0_f64;
    for i in 0..n - 1 {
        if !keep(grid.nodes[i]) {
            continue;
        }
        let k = i as isize;
        let lap = if i + 2 < n {
            let d2 = (-at(k + 2) + 16.0 * at(k + 1) - 30.0 * at(k) + 16.0 * at(k - 1) - at(k - 2))
                / (12.0 * h * h);
            if i == 0 {
                nd * d2
            } else {
                let d1 = (-at(k + 2) + 8.0 * at(k + 1) - 8.0 * at(k - 1) + at(k - 2)) / (12.0 * h);
                d2 + (nd - 1.0) / grid.nodes[i] * d1
            }
        } else {
            (f[i + 1] - 2.0 * f[i] + f[i - 1]) / (h * h)
                + (nd - 1.0) / grid.nodes[i] * (f[i + 1] - f[i - 1]) / (2.0 * h)
        };
        worst = worst.max((-lap - g[i]).abs());
    }
    worst
}
