//! Bordered Newton solver for the constrained plasma problem on the ball,
//! independent of the closed-form branch, plus the derivative fields
//! `η = dψ/dλ`, `w = d(λψ)/dλ`.
//!
//! Discrete problem on the finite-volume grid (`c` shell volumes, `A` the
//! stiffness matrix, `ψ_{n-1} = 0`):
//!
//! ```text
//! Aψ = C[α + λψ]₊^p  (interior),     Σ_i c_i [α + λψ_i]₊^p = 1  (all nodes)
//! ```
//!
//! Eliminating the `α`-border turns every Newton step into a solve with the
//! projected operator `L = A - τ(CW - (cW)(cW)ᵀ/m)`, `W = [α + λψ]₊^{p-1}`,
//! `m = Σ cW`, `τ = λp`. The same `L` drives both derivative fields.

use serde::Serialize;

use crate::check_branch_exponent;
use crate::error::{Error, Result};
use crate::radial_core::{
    solve_tridiagonal, BallGeometry, RadialField, RadialGrid, RadialOperator,
};

pub const MAX_NEWTON_ITERS: usize = 50;
const RESIDUAL_TOL: f64 = 1e-10;
const CONSTRAINT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct SolverSolution {
    pub lambda: f64,
    pub p: f64,
    pub alpha: f64,
    pub psi: RadialField,
    /// `max_i |(Aψ)_i/c_i - ρ_i|` over interior nodes.
    pub residual_pde: f64,
    /// `|Σ cρ - 1|`.
    pub constraint_defect: f64,
    pub newton_iters: usize,
    /// `½ Σ c ρ ψ`, equal to `½ ψᵀAψ` at convergence.
    pub energy: f64,
}

impl SolverSolution {
    /// `α + λψ` at every node.
    pub fn plasma(&self) -> Vec<f64> {
        self.psi
            .values
            .iter()
            .map(|s| self.alpha + self.lambda * s)
            .collect()
    }

    /// `ρ = [α + λψ]₊^p`.
    pub fn rho(&self) -> Vec<f64> {
        self.plasma()
            .iter()
            .map(|v| v.max(0.0).powf(self.p))
            .collect()
    }

    /// `ρ^{1/q} = [α + λψ]₊^{p-1}`.
    pub fn weight(&self) -> Vec<f64> {
        self.plasma()
            .iter()
            .map(|v| v.max(0.0).powf(self.p - 1.0))
            .collect()
    }

    /// Radius of the first node where `α + λψ ≤ 0`.
    pub fn free_radius(&self) -> Option<f64> {
        self.plasma()
            .iter()
            .position(|v| *v <= 0.0)
            .map(|i| self.psi.grid.nodes[i])
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DerivativeFields {
    pub eta: RadialField,
    pub w: RadialField,
    pub dalpha: f64,
    pub d_energy: f64,
    pub m_lambda: f64,
    pub mean_w: f64,
    /// `Σ c ρ η`, the second form of `d_energy`.
    pub rho_eta: f64,
}

/// `L = A - τ CW + (τ/m)(cW)(cW)ᵀ` on the interior unknowns.
pub(crate) struct ProjectedOperator {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    /// `c_i W_i` on interior nodes.
    cw: Vec<f64>,
    tau: f64,
    m: f64,
}

impl ProjectedOperator {
    pub(crate) fn new(op: &RadialOperator, weight: &[f64], tau: f64) -> Result<Self> {
        let (lower, mut diag, upper) = op.bands();
        let k = diag.len();
        let cw: Vec<f64> = (0..k).map(|i| op.volumes[i] * weight[i]).collect();
        let m = op.integrate(weight);
        if !(m > 0.0) {
            return Err(Error::DegenerateBorder(m));
        }
        for i in 0..k {
            diag[i] -= tau * cw[i];
        }
        Ok(Self {
            lower,
            diag,
            upper,
            cw,
            tau,
            m,
        })
    }

    pub(crate) fn mass(&self) -> f64 {
        self.m
    }

    pub(crate) fn apply(&self, x: &[f64]) -> Vec<f64> {
        let k = self.diag.len();
        let s = self.tau / self.m * dot(&self.cw, x);
        (0..k)
            .map(|i| {
                let mut v = self.diag[i] * x[i] + s * self.cw[i];
                if i > 0 {
                    v += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < k {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    /// Sherman-Morrison on `T + εC` followed by iterative refinement
    /// against the exact `L`.
    fn precond(&self, shift: f64) -> Result<impl Fn(&[f64]) -> Result<Vec<f64>> + '_> {
        let diag: Vec<f64> = self
            .diag
            .iter()
            .zip(&self.cw)
            .map(|(d, c)| d + shift * c)
            .collect();
        let z = solve_tridiagonal(&self.lower, &diag, &self.upper, &self.cw)?;
        let s = self.tau / self.m;
        let denom = 1.0 + s * dot(&self.cw, &z);
        if denom.abs() < 1e-13 {
            return Err(Error::DegenerateBorder(denom));
        }
        Ok(move |r: &[f64]| {
            let mut x = solve_tridiagonal(&self.lower, &diag, &self.upper, r)?;
            let f = s * dot(&self.cw, &x) / denom;
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi -= f * zi;
            }
            Ok(x)
        })
    }

    pub(crate) fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let scale = rhs.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return Ok(vec![0.0; rhs.len()]);
        }
        let wmax = self.cw.iter().fold(0.0_f64, |a, v| a.max(*v));
        let attempts = [
            (0.0, 4),
            (
                1e-7 * self.tau.max(1.0) * self.diag[0].abs() / wmax.max(1e-300),
                200,
            ),
        ];
        let mut last = Error::DegenerateBorder(0.0);
        for (shift, sweeps) in attempts {
            let m = match self.precond(shift) {
                Ok(m) => m,
                Err(e) => {
                    last = e;
                    continue;
                }
            };
            let mut x = m(rhs)?;
            let mut prev = f64::INFINITY;
            for _ in 0..sweeps {
                let lx = self.apply(&x);
                let r: Vec<f64> = rhs.iter().zip(&lx).map(|(a, b)| a - b).collect();
                let rn = r.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                if rn <= 1e-15 * scale || rn >= prev {
                    break;
                }
                prev = rn;
                let dx = m(&r)?;
                for (xi, d) in x.iter_mut().zip(&dx) {
                    *xi += d;
                }
            }
            // backward-error test: the attainable residual scales with ‖L‖‖x‖
            let lx = self.apply(&x);
            let rn = rhs
                .iter()
                .zip(&lx)
                .fold(0.0_f64, |a, (u, v)| a.max((u - v).abs()));
            let norm_l = self.diag.iter().fold(0.0_f64, |a, d| a.max(d.abs())) * 2.0;
            let bound = 1e-11 * (norm_l * max_abs(&x) + scale);
            if rn.is_finite() && rn <= bound {
                return Ok(x);
            }
            last = Error::DegenerateBorder(rn / bound);
        }
        Err(last)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

struct Residual {
    /// `(Aψ)_i - c_i ρ_i` on interior nodes.
    f: Vec<f64>,
    g: f64,
    pde: f64,
}

fn residual(op: &RadialOperator, p: f64, lambda: f64, alpha: f64, psi: &[f64]) -> Residual {
    let rho: Vec<f64> = psi
        .iter()
        .map(|s| (alpha + lambda * s).max(0.0).powf(p))
        .collect();
    let mut f = op.apply(psi);
    let mut pde = 0.0_f64;
    for (i, fi) in f.iter_mut().enumerate() {
        *fi -= op.volumes[i] * rho[i];
        pde = pde.max(fi.abs() / op.volumes[i]);
    }
    Residual {
        f,
        g: op.integrate(&rho) - 1.0,
        pde,
    }
}

fn check_setup(geom: &BallGeometry, p: f64, lambda: f64, grid: &RadialGrid) -> Result<()> {
    check_branch_exponent(geom.dim, p)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "lambda {lambda} must be nonnegative"
        )));
    }
    if grid.dim != geom.dim || (grid.outer_radius - geom.radius).abs() > 1e-14 * geom.radius {
        return Err(Error::InvalidInput(
            "grid must span [0, R_N] in the ball dimension".into(),
        ));
    }
    Ok(())
}

/// Round-off floor of the pointwise residual: a second difference of values
/// of size `psi_max` loses about `ε·ψ/h²` per term.
pub fn residual_floor(grid: &RadialGrid, psi_max: f64) -> f64 {
    16.0 * f64::EPSILON * grid.dim as f64 * psi_max / (grid.h * grid.h)
}

/// Torsion start `(1, (R_N² - r²)/(2N))`.
pub fn torsion_start(grid: &RadialGrid) -> (f64, Vec<f64>) {
    let r2 = grid.outer_radius * grid.outer_radius;
    let nd = grid.dim as f64;
    (
        1.0,
        grid.nodes
            .iter()
            .map(|s| (r2 - s * s) / (2.0 * nd))
            .collect(),
    )
}

/// Solves the discrete problem at `lambda` by damped bordered Newton,
/// starting from `init` or the torsion pair.
pub fn solve_plasma(
    geom: &BallGeometry,
    p: f64,
    lambda: f64,
    grid: &RadialGrid,
    init: Option<(f64, &[f64])>,
) -> Result<SolverSolution> {
    check_setup(geom, p, lambda, grid)?;
    let op = RadialOperator::new(grid);
    let n = grid.n();
    let (mut alpha, mut psi) = match init {
        Some((a, s)) => {
            if s.len() != n {
                return Err(Error::LengthMismatch {
                    expected: n,
                    got: s.len(),
                });
            }
            (a, s.to_vec())
        }
        None => torsion_start(grid),
    };
    psi[n - 1] = 0.0;
    let merit = |r: &Residual, psi: &[f64]| (r.pde / (1.0 + max_abs(psi))).max(r.g.abs());
    let mut res = residual(&op, p, lambda, alpha, &psi);
    let mut iters = 0;
    loop {
        // below this the residual only measures round-off
        let floor = (RESIDUAL_TOL * (1.0 + max_abs(&psi))).max(residual_floor(grid, max_abs(&psi)));
        let near = res.pde <= floor && res.g.abs() <= CONSTRAINT_TOL;
        if iters == MAX_NEWTON_ITERS {
            if near {
                break;
            }
            return Err(Error::NoConvergence {
                lambda,
                iters,
                residual: merit(&res, &psi),
            });
        }
        iters += 1;
        let plasma: Vec<f64> = psi.iter().map(|s| alpha + lambda * s).collect();
        let weight: Vec<f64> = plasma.iter().map(|v| v.max(0.0).powf(p - 1.0)).collect();
        let lop = ProjectedOperator::new(&op, &weight, lambda * p)?;
        let m = lop.mass();
        // L δψ = -F - cW G/m,   δα = -(G + τ (cW)ᵀδψ)/(p m)
        let rhs: Vec<f64> = (0..n - 1)
            .map(|i| -res.f[i] - lop.cw[i] * res.g / m)
            .collect();
        let dpsi = lop.solve(&rhs)?;
        let dalpha = -(res.g + lambda * p * dot(&lop.cw, &dpsi)) / (p * m);

        // inside the tolerance one full step polishes (α, ψ) to round-off
        if near {
            let a_new = alpha + dalpha;
            let mut s_new = psi.clone();
            for i in 0..n - 1 {
                s_new[i] += dpsi[i];
            }
            let r_new = residual(&op, p, lambda, a_new, &s_new);
            let scale = 1.0 + max_abs(&s_new);
            if r_new.pde <= floor.max(1e-9 * scale) && r_new.g.abs() <= CONSTRAINT_TOL {
                alpha = a_new;
                psi = s_new;
                res = r_new;
            }
            break;
        }

        let m0 = merit(&res, &psi);
        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let a_try = alpha + t * dalpha;
            let mut s_try = psi.clone();
            for i in 0..n - 1 {
                s_try[i] += t * dpsi[i];
            }
            let r_try = residual(&op, p, lambda, a_try, &s_try);
            let m1 = merit(&r_try, &s_try);
            if m1.is_finite() && m1 < m0 {
                accepted = Some((a_try, s_try, r_try));
                break;
            }
            t *= 0.5;
        }
        match accepted {
            Some((a, s, r)) => {
                alpha = a;
                psi = s;
                res = r;
            }
            None => {
                // the merit is at round-off; a full step that keeps the
                // residual at its floor still makes progress on the constraint
                let a_full = alpha + dalpha;
                let mut s_full = psi.clone();
                for i in 0..n - 1 {
                    s_full[i] += dpsi[i];
                }
                let r_full = residual(&op, p, lambda, a_full, &s_full);
                if r_full.pde <= floor.max(1e-9 * (1.0 + max_abs(&s_full)))
                    && r_full.g.abs() < res.g.abs()
                {
                    alpha = a_full;
                    psi = s_full;
                    res = r_full;
                    continue;
                }
                let scale = 1.0 + max_abs(&psi);
                if res.pde <= (1e-9 * scale).max(residual_floor(grid, max_abs(&psi)))
                    && res.g.abs() <= 1e-10
                {
                    break;
                }
                return Err(Error::NoConvergence {
                    lambda,
                    iters,
                    residual: m0,
                });
            }
        }
    }
    let rho: Vec<f64> = psi
        .iter()
        .map(|s| (alpha + lambda * s).max(0.0).powf(p))
        .collect();
    let energy = 0.5 * op.integrate(&rho.iter().zip(&psi).map(|(r, s)| r * s).collect::<Vec<_>>());
    Ok(SolverSolution {
        lambda,
        p,
        alpha,
        psi: RadialField::new(grid.clone(), psi)?,
        residual_pde: res.pde,
        constraint_defect: res.g.abs(),
        newton_iters: iters,
        energy,
    })
}

/// Natural-parameter sweep `λ_k = k·lambda_max/steps`, `k = 0..=steps`.
pub fn continue_branch(
    geom: &BallGeometry,
    p: f64,
    lambda_max: f64,
    steps: usize,
    grid: &RadialGrid,
) -> Result<Vec<SolverSolution>> {
    if steps == 0 || !(lambda_max.is_finite() && lambda_max >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "need steps > 0 and lambda_max >= 0 (got {steps}, {lambda_max})"
        )));
    }
    let lambdas: Vec<f64> = (0..=steps)
        .map(|k| lambda_max * k as f64 / steps as f64)
        .collect();
    solve_along(geom, p, &lambdas, grid)
}

/// Solutions at increasing `lambdas`, continued from the torsion pair at
/// `λ = 0` and warm-started slice to slice. A failing step is retried as
/// successively halved sub-steps.
pub fn solve_along(
    geom: &BallGeometry,
    p: f64,
    lambdas: &[f64],
    grid: &RadialGrid,
) -> Result<Vec<SolverSolution>> {
    if lambdas.windows(2).any(|w| !(w[1] >= w[0])) || lambdas.first().is_some_and(|l| !(*l >= 0.0))
    {
        return Err(Error::InvalidInput(
            "lambdas must be nonnegative and nondecreasing".into(),
        ));
    }
    let top = lambdas.last().copied().unwrap_or(0.0).max(1e-300);
    let mut out = Vec::with_capacity(lambdas.len());
    let mut cur = solve_plasma(geom, p, 0.0, grid, None)?;
    for &target in lambdas {
        let mut h = target - cur.lambda;
        while cur.lambda < target {
            let next = if target - cur.lambda <= h {
                target
            } else {
                cur.lambda + h
            };
            match solve_plasma(geom, p, next, grid, Some((cur.alpha, &cur.psi.values))) {
                Ok(s) => cur = s,
                Err(e) => {
                    h *= 0.5;
                    if h < 1e-8 * top {
                        return Err(match e {
                            Error::NoConvergence {
                                iters, residual, ..
                            } => Error::NoConvergence {
                                lambda: next,
                                iters,
                                residual,
                            },
                            other => other,
                        });
                    }
                }
            }
        }
        out.push(cur.clone());
    }
    Ok(out)
}

/// Solves `Lw = Cρ` and `Lη = p(CWψ - cW⟨ψ⟩)` at a converged positive-regime slice.
pub fn derivative_fields(sol: &SolverSolution) -> Result<DerivativeFields> {
    if !(sol.alpha > 0.0) {
        return Err(Error::Regime(format!(
            "derivative fields need alpha > 0 (alpha = {})",
            sol.alpha
        )));
    }
    let grid = &sol.psi.grid;
    let op = RadialOperator::new(grid);
    let n = grid.n();
    let weight = sol.weight();
    let rho = sol.rho();
    let psi = &sol.psi.values;
    let lop = ProjectedOperator::new(&op, &weight, sol.lambda * sol.p)?;
    let m = lop.mass();
    let mean = |f: &[f64]| {
        op.integrate(
            &f.iter()
                .zip(&weight)
                .map(|(a, b)| a * b)
                .collect::<Vec<_>>(),
        ) / m
    };
    let psi_mean = mean(psi);

    let rhs_w: Vec<f64> = (0..n - 1).map(|i| op.volumes[i] * rho[i]).collect();
    let rhs_eta: Vec<f64> = (0..n - 1)
        .map(|i| sol.p * lop.cw[i] * (psi[i] - psi_mean))
        .collect();
    let mut w = lop.solve(&rhs_w)?;
    let mut eta = lop.solve(&rhs_eta)?;
    w.push(0.0);
    eta.push(0.0);

    let mean_w = mean(&w);
    let dalpha = -(psi_mean + sol.lambda * mean(&eta));
    let d_energy = op.stiffness_product(psi, &eta);
    let rho_eta = op.integrate(&rho.iter().zip(&eta).map(|(a, b)| a * b).collect::<Vec<_>>());
    Ok(DerivativeFields {
        eta: RadialField::new(grid.clone(), eta)?,
        w: RadialField::new(grid.clone(), w)?,
        dalpha,
        d_energy,
        m_lambda: m,
        mean_w,
        rho_eta,
    })
}

/// `|dα/dλ + 2E + (1 - 1/p) λ dE/dλ|`.
pub fn entropy_identity_defect(sol: &SolverSolution, fields: &DerivativeFields) -> Result<f64> {
    if !(sol.lambda > 0.0) {
        return Err(Error::InvalidInput(
            "entropy identity is stated for lambda > 0".into(),
        ));
    }
    let lhs = fields.dalpha + 2.0 * sol.energy;
    let rhs = -(1.0 - 1.0 / sol.p) * sol.lambda * fields.d_energy;
    Ok((lhs - rhs).abs())
}
