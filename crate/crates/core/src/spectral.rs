//! Weighted nonlocal eigenproblems of the linearized plasma operator on the
//! ball, Sobolev constants `Λ(B, t)` and the thresholds `λ₀`, `λ₁`.
//!
//! For angular mode `ℓ = 0` the pencil is `Aφ = θ Bφ` with the projected
//! weight `B = CW - (cW)(cW)ᵀ/m`; for `ℓ ≥ 1` the projection drops, `B = CW`,
//! and `A` gains the centrifugal term `ℓ(ℓ+N-2) c_i/r_i²`. Then `σ = θ - τ`
//! and `μ = τ/θ` is the matching eigenvalue of `T_λ`.
//!
//! Pencils are solved by subspace iteration on `R⁻¹BR⁻ᵀ`, `A = RRᵀ` the
//! bidiagonal Cholesky factor, with Rayleigh-Ritz on the small block, and
//! each wanted pair is then polished by shifted inverse iteration.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use crate::ball_branch::BallBranch;
use crate::error::{Error, Result};
use crate::lane_emden::{build_lane_emden_cached, check_exponent};
use crate::radial_core::{
    ball_integral, make_grid, solve_tridiagonal, BallGeometry, RadialField, RadialGrid,
    RadialOperator,
};
use crate::solver::{continue_branch, DerivativeFields, SolverSolution};
use crate::{check_branch_exponent, DEFAULT_GRID_N};

/// Leading `ℓ = 0` eigenpairs kept in a report.
pub const RADIAL_MODES: usize = 4;
const GUARD: usize = 4;

#[derive(Debug, Clone, Serialize)]
pub struct ModeSpectrum {
    pub ell: usize,
    /// Leading `σ` in increasing order.
    pub sigma: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub lambda: f64,
    pub tau: f64,
    pub sigma: Vec<ModeSpectrum>,
    pub sigma1: f64,
    /// Angular mode where `σ₁` is attained.
    pub sigma1_mode: usize,
    pub nu1: f64,
    pub mu1: f64,
    /// `θ_j = τ + σ_j` for the `ℓ = 0` modes.
    pub theta: Vec<f64>,
    /// `μ_j = τ/θ_j` for the `ℓ = 0` modes.
    pub mu: Vec<f64>,
    /// `ℓ = 0` eigenfunctions, normalized by `φᵀAφ = 1`.
    pub eigenfunctions: Vec<RadialField>,
    /// `max_j ‖(Aφ_j - θ_j Bφ_j)/c‖_∞ / ‖φ_j‖_∞` over the `ℓ = 0` modes.
    pub residual: f64,
    /// Same residual for the `ℓ ≥ 1` modes.
    pub angular_residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SobolevConstants {
    pub lambda_2p: f64,
    /// `Λ(B, p+1)`, planar case only.
    pub lambda_p1: Option<f64>,
    pub lambda0: f64,
    pub lambda1: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityCertificate {
    pub dim: usize,
    pub p: f64,
    pub lambda_plus: f64,
    pub lambdas: Vec<f64>,
    pub sigma1: Vec<f64>,
    pub min_sigma1: f64,
    pub argmin_lambda: f64,
}

/// Symmetric tridiagonal matrix factored as `RRᵀ`, `R` lower bidiagonal.
struct BandCholesky {
    d: Vec<f64>,
    l: Vec<f64>,
}

impl BandCholesky {
    fn new(diag: &[f64], off: &[f64]) -> Result<Self> {
        let k = diag.len();
        let mut d = vec![0.0; k];
        let mut l = vec![0.0; k.saturating_sub(1)];
        for i in 0..k {
            let v = diag[i] - if i > 0 { l[i - 1] * l[i - 1] } else { 0.0 };
            if !(v > 0.0) {
                return Err(Error::Eigen(format!(
                    "stiffness matrix not positive at row {i}"
                )));
            }
            d[i] = v.sqrt();
            if i + 1 < k {
                l[i] = off[i] / d[i];
            }
        }
        Ok(Self { d, l })
    }

    /// `R⁻¹x`.
    fn forward(&self, x: &mut [f64]) {
        for i in 0..x.len() {
            if i > 0 {
                x[i] -= self.l[i - 1] * x[i - 1];
            }
            x[i] /= self.d[i];
        }
    }

    /// `R⁻ᵀx`.
    fn backward(&self, x: &mut [f64]) {
        for i in (0..x.len()).rev() {
            if i + 1 < x.len() {
                x[i] -= self.l[i] * x[i + 1];
            }
            x[i] /= self.d[i];
        }
    }
}

/// Weighted mass on a set of unknowns: `diag(cw)` minus an optional
/// rank-one projection `(cw)(cw)ᵀ/m`.
struct WeightedMass {
    cw: Vec<f64>,
    project: Option<f64>,
}

impl WeightedMass {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out: Vec<f64> = self.cw.iter().zip(x).map(|(c, v)| c * v).collect();
        if let Some(m) = self.project {
            let s = self.cw.iter().zip(x).map(|(c, v)| c * v).sum::<f64>() / m;
            for (o, c) in out.iter_mut().zip(&self.cw) {
                *o -= s * c;
            }
        }
        out
    }
}

struct Pencil {
    lower: Vec<f64>,
    diag: Vec<f64>,
    mass: WeightedMass,
}

/// Smallest `want` eigenpairs `(θ, φ)` of `Aφ = θBφ`, `φᵀAφ = 1`.
fn smallest_pairs(pencil: &Pencil, want: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let k = pencil.diag.len();
    let chol = BandCholesky::new(&pencil.diag, &pencil.lower)?;
    let block = (want + GUARD).min(k);
    let apply_k = |y: &[f64]| {
        let mut x = y.to_vec();
        chol.backward(&mut x);
        let mut b = pencil.mass.apply(&x);
        chol.forward(&mut b);
        b
    };
    // deterministic start: low sine modes plus a small shifted harmonic
    let mut y = DMatrix::from_fn(k, block, |i, j| {
        let x = (i as f64 + 0.5) / k as f64;
        ((j as f64 + 0.5) * std::f64::consts::PI * x).cos()
            + 1e-3 * ((j + 2) as f64 * 7.0 * x).sin()
    });
    let mut values = vec![0.0; block];
    let mut converged = false;
    for _ in 0..2000 {
        let q = y.clone().qr().q();
        let cols: Vec<Vec<f64>> = (0..block)
            .into_par_iter()
            .map(|j| apply_k(q.column(j).as_slice()))
            .collect();
        let w = DMatrix::from_fn(k, block, |i, j| cols[j][i]);
        let h = q.transpose() * &w;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut order: Vec<usize> = (0..block).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let v = DMatrix::from_fn(block, block, |i, j| eig.eigenvectors[(i, order[j])]);
        values = order.iter().map(|&j| eig.eigenvalues[j]).collect();
        let top = values[0].abs();
        // residual of the wanted Ritz pairs
        let wv = &w * &v;
        let qv = &q * &v;
        let res = (0..want.min(block))
            .map(|j| (wv.column(j) - qv.column(j) * values[j]).amax())
            .fold(0.0_f64, f64::max);
        y = wv;
        if res <= 1e-14 * top {
            y = qv;
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Eigen("subspace iteration did not converge".into()));
    }
    let mut thetas = Vec::with_capacity(want);
    let mut phis = Vec::with_capacity(want);
    for j in 0..want.min(block) {
        if !(values[j] > 0.0) {
            return Err(Error::Eigen(format!(
                "non-positive pencil eigenvalue {}",
                values[j]
            )));
        }
        let mut phi: Vec<f64> = y.column(j).iter().copied().collect();
        let norm = phi.iter().map(|v| v * v).sum::<f64>().sqrt();
        phi.iter_mut().for_each(|v| *v /= norm);
        chol.backward(&mut phi);
        // sign: positive at the largest-magnitude node
        let (imax, _) = phi.iter().enumerate().fold((0, 0.0_f64), |acc, (i, v)| {
            if v.abs() > acc.1 {
                (i, v.abs())
            } else {
                acc
            }
        });
        if phi[imax] < 0.0 {
            phi.iter_mut().for_each(|v| *v = -*v);
        }
        let (theta, phi) = polish(pencil, 1.0 / values[j], phi)?;
        thetas.push(theta);
        phis.push(phi);
    }
    Ok((thetas, phis))
}

fn apply_a(pencil: &Pencil, x: &[f64]) -> Vec<f64> {
    let k = x.len();
    (0..k)
        .map(|i| {
            let mut v = pencil.diag[i] * x[i];
            if i > 0 {
                v += pencil.lower[i - 1] * x[i - 1];
            }
            if i + 1 < k {
                v += pencil.lower[i] * x[i + 1];
            }
            v
        })
        .collect()
}

/// Two steps of inverse iteration with a shift just above the Ritz value;
/// `(A - sB)` is tridiagonal plus the rank-one projection, solved by
/// Sherman-Morrison.
fn polish(pencil: &Pencil, theta: f64, mut phi: Vec<f64>) -> Result<(f64, Vec<f64>)> {
    let shift = theta * (1.0 + 1e-10);
    let cw = &pencil.mass.cw;
    let diag: Vec<f64> = pencil
        .diag
        .iter()
        .zip(cw)
        .map(|(d, c)| d - shift * c)
        .collect();
    let solve = |r: &[f64]| solve_tridiagonal(&pencil.lower, &diag, &pencil.lower, r);
    let rank_one = match pencil.mass.project {
        Some(m) => {
            let z = solve(cw)?;
            let s = shift / m;
            Some((
                z.clone(),
                s,
                1.0 + s * cw.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>(),
            ))
        }
        None => None,
    };
    let mut theta = theta;
    for _ in 0..2 {
        let mut x = solve(&pencil.mass.apply(&phi))?;
        if let Some((z, s, denom)) = &rank_one {
            let f = s * cw.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>() / denom;
            x.iter_mut().zip(z).for_each(|(xi, zi)| *xi -= f * zi);
        }
        let a_norm = apply_a(pencil, &x)
            .iter()
            .zip(&x)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            .sqrt();
        x.iter_mut().for_each(|v| *v /= a_norm);
        let dir = x.iter().zip(&phi).map(|(a, b)| a * b).sum::<f64>();
        if dir < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
        phi = x;
        theta = 1.0
            / pencil
                .mass
                .apply(&phi)
                .iter()
                .zip(&phi)
                .map(|(a, b)| a * b)
                .sum::<f64>();
    }
    Ok((theta, phi))
}

fn radial_pencil(op: &RadialOperator, weight: &[f64], project: bool) -> Pencil {
    let (lower, diag, _) = op.bands();
    let m = op.integrate(weight);
    let cw = (0..diag.len()).map(|i| op.volumes[i] * weight[i]).collect();
    Pencil {
        lower,
        diag,
        mass: WeightedMass {
            cw,
            project: project.then_some(m),
        },
    }
}

/// Mode `ℓ ≥ 1`: unknowns `1..n-1`, centrifugal term added to `A`.
fn angular_pencil(op: &RadialOperator, weight: &[f64], ell: usize) -> Pencil {
    let (lower, diag, _) = op.bands();
    let nd = op.grid.dim as f64;
    let l = ell as f64;
    let cent = l * (l + nd - 2.0);
    let k = diag.len();
    let diag = (1..k)
        .map(|i| diag[i] + cent * op.volumes[i] / (op.grid.nodes[i] * op.grid.nodes[i]))
        .collect();
    let cw = (1..k).map(|i| op.volumes[i] * weight[i]).collect();
    Pencil {
        lower: lower[1..].to_vec(),
        diag,
        mass: WeightedMass { cw, project: None },
    }
}

fn pencil_residual(
    op: &RadialOperator,
    pencil: &Pencil,
    theta: f64,
    phi: &[f64],
    offset: usize,
) -> f64 {
    let a = apply_a(pencil, phi);
    let b = pencil.mass.apply(phi);
    let worst = (0..phi.len())
        .map(|i| (a[i] - theta * b[i]).abs() / op.volumes[i + offset])
        .fold(0.0_f64, f64::max);
    worst / phi.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

/// Spectrum of the linearized operator at a positive-regime slice, over
/// angular modes `0..=modes`.
pub fn eigen_l(geom: &BallGeometry, sol: &SolverSolution, modes: usize) -> Result<SpectralReport> {
    check_branch_exponent(geom.dim, sol.p)?;
    if !(sol.alpha > 0.0) {
        return Err(Error::Regime(format!(
            "spectral computations need alpha > 0 (alpha = {})",
            sol.alpha
        )));
    }
    let grid = &sol.psi.grid;
    let op = RadialOperator::new(grid);
    let weight = sol.weight();
    let tau = sol.lambda * sol.p;

    let radial = radial_pencil(&op, &weight, true);
    let (theta, phis) = smallest_pairs(&radial, RADIAL_MODES)?;
    let residual = theta
        .iter()
        .zip(&phis)
        .map(|(t, f)| pencil_residual(&op, &radial, *t, f, 0))
        .fold(0.0_f64, f64::max);
    let (nu_theta, _) = smallest_pairs(&radial_pencil(&op, &weight, false), 1)?;

    let angular: Vec<(Vec<f64>, f64)> = (1..=modes)
        .into_par_iter()
        .map(|ell| {
            let pencil = angular_pencil(&op, &weight, ell);
            let (t, f) = smallest_pairs(&pencil, 2)?;
            let res = t
                .iter()
                .zip(&f)
                .map(|(t, f)| pencil_residual(&op, &pencil, *t, f, 1))
                .fold(0.0_f64, f64::max);
            Ok((t, res))
        })
        .collect::<Result<_>>()?;
    let angular_residual = angular.iter().map(|a| a.1).fold(0.0_f64, f64::max);

    let mut sigma = vec![ModeSpectrum {
        ell: 0,
        sigma: theta.iter().map(|t| t - tau).collect(),
    }];
    for (i, (t, _)) in angular.iter().enumerate() {
        sigma.push(ModeSpectrum {
            ell: i + 1,
            sigma: t.iter().map(|t| t - tau).collect(),
        });
    }
    let (sigma1_mode, theta_min) = sigma
        .iter()
        .map(|m| (m.ell, m.sigma[0] + tau))
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    let eigenfunctions = phis
        .into_iter()
        .map(|mut f| {
            f.push(0.0);
            RadialField::new(grid.clone(), f)
        })
        .collect::<Result<_>>()?;
    Ok(SpectralReport {
        lambda: sol.lambda,
        tau,
        sigma1: theta_min - tau,
        sigma1_mode,
        nu1: nu_theta[0] - tau,
        mu1: tau / theta_min,
        mu: theta.iter().map(|t| tau / t).collect(),
        theta,
        sigma,
        eigenfunctions,
        residual,
        angular_residual,
    })
}

/// `(φ, χ)_B = Σ cW φχ - m⟨φ⟩⟨χ⟩`, the weighted product of mean-projected fields.
fn projected_product(sol: &SolverSolution, op: &RadialOperator, a: &[f64], b: &[f64]) -> f64 {
    let w = sol.weight();
    let m = op.integrate(&w);
    let wa: Vec<f64> = w.iter().zip(a).map(|(x, y)| x * y).collect();
    let wb: Vec<f64> = w.iter().zip(b).map(|(x, y)| x * y).collect();
    let ab: Vec<f64> = wa.iter().zip(b).map(|(x, y)| x * y).collect();
    op.integrate(&ab) - op.integrate(&wa) * op.integrate(&wb) / m
}

/// Weighted Fourier coefficients `(β_j, γ_j)` of `ψ` and `η` against the
/// `j`-th (1-based) radial eigenfunction.
pub fn fourier_coefficients(
    report: &SpectralReport,
    sol: &SolverSolution,
    fields: &DerivativeFields,
    j: usize,
) -> Result<(f64, f64)> {
    if j == 0 || j > report.eigenfunctions.len() {
        return Err(Error::InvalidInput(format!(
            "mode index {j} outside 1..={}",
            report.eigenfunctions.len()
        )));
    }
    let op = RadialOperator::new(&sol.psi.grid);
    let phi = &report.eigenfunctions[j - 1].values;
    let th = report.theta[j - 1];
    Ok((
        th * projected_product(sol, &op, phi, &sol.psi.values),
        th * projected_product(sol, &op, phi, &fields.eta.values),
    ))
}

/// `|σ_j γ_j - p β_j|`.
pub fn fourier_relation_defect(
    report: &SpectralReport,
    sol: &SolverSolution,
    fields: &DerivativeFields,
    j: usize,
) -> Result<f64> {
    let (beta, gamma) = fourier_coefficients(report, sol, fields, j)?;
    Ok((report.sigma[0].sigma[j - 1] * gamma - sol.p * beta).abs())
}

/// `∫W[η][ψ] - σ₁(m/p)⟨[η]²⟩`, nonnegative on stable positive-regime slices.
pub fn energy_inequality_slack(
    report: &SpectralReport,
    sol: &SolverSolution,
    fields: &DerivativeFields,
) -> f64 {
    let op = RadialOperator::new(&sol.psi.grid);
    let eta = &fields.eta.values;
    projected_product(sol, &op, eta, &sol.psi.values)
        - report.sigma1 * projected_product(sol, &op, eta, eta) / sol.p
}

fn check_sobolev_exponent(dim: usize, t: f64) -> Result<()> {
    let upper = if dim == 2 {
        f64::INFINITY
    } else {
        2.0 * dim as f64 / (dim as f64 - 2.0)
    };
    if !(t.is_finite() && t >= 2.0 && t < upper) {
        return Err(Error::InvalidInput(format!(
            "t = {t} outside [2, {upper}) for N = {dim}"
        )));
    }
    Ok(())
}

/// First Dirichlet eigenvalue of the ball, on a grid over `[0, R_N]`.
pub fn dirichlet_eigenvalue(grid: &RadialGrid) -> Result<f64> {
    let op = RadialOperator::new(grid);
    let ones = vec![1.0; grid.n()];
    Ok(smallest_pairs(&radial_pencil(&op, &ones, false), 1)?.0[0])
}

/// `Λ(B, t) = inf ∫|∇w|² / (∫|w|^t)^{2/t}` over the unit-volume ball.
///
/// `t = 2` is the first Dirichlet eigenvalue; `t > 2` uses the Lane-Emden
/// extremal `u₀` with exponent `t - 1`: `Λ = (R_N^{N - 2t/(t-2)} ∫_{B_1} u₀^t)^{(t-2)/t}`.
pub fn sobolev_lambda(geom: &BallGeometry, t: f64) -> Result<f64> {
    sobolev_lambda_with(geom, t, DEFAULT_GRID_N)
}

pub fn sobolev_lambda_with(geom: &BallGeometry, t: f64, n: usize) -> Result<f64> {
    check_sobolev_exponent(geom.dim, t)?;
    if t == 2.0 {
        return dirichlet_eigenvalue(&make_grid(geom.dim, geom.radius, n)?);
    }
    check_exponent(geom.dim, t - 1.0)?;
    let table = build_lane_emden_cached(geom.dim, t - 1.0, n)?;
    let ut: Vec<f64> = table.u0.iter().map(|u| u.max(0.0).powf(t)).collect();
    let integral = ball_integral(&table.grid, &ut)?;
    let nd = geom.dim as f64;
    Ok((geom.radius.powf(nd - 2.0 * t / (t - 2.0)) * integral).powf((t - 2.0) / t))
}

/// Independent estimate of `Λ(B, t)`, `t > 2`: projected gradient in the
/// `H¹₀` metric with unit step, `w ← A⁻¹(C w^{t-1})` renormalized to
/// `∫w^t = 1`, on the finite-volume grid.
pub fn sobolev_lambda_oracle(geom: &BallGeometry, t: f64, n: usize) -> Result<f64> {
    check_sobolev_exponent(geom.dim, t)?;
    if t == 2.0 {
        return dirichlet_eigenvalue(&make_grid(geom.dim, geom.radius, n)?);
    }
    let grid = make_grid(geom.dim, geom.radius, n)?;
    let op = RadialOperator::new(&grid);
    let (lower, diag, upper) = op.bands();
    let m = n - 1;
    let quotient = |w: &[f64]| {
        let num = op.stiffness_product(w, w);
        let den: f64 = (0..m).map(|i| op.volumes[i] * w[i].abs().powf(t)).sum();
        num / den.powf(2.0 / t)
    };
    let normalize = |w: &mut Vec<f64>| {
        let s: f64 = (0..m).map(|i| op.volumes[i] * w[i].abs().powf(t)).sum();
        let f = s.powf(-1.0 / t);
        w.iter_mut().for_each(|v| *v *= f);
    };
    let r2 = geom.radius * geom.radius;
    let mut w: Vec<f64> = grid.nodes.iter().map(|s| r2 - s * s).collect();
    normalize(&mut w);
    let mut q = quotient(&w);
    for _ in 0..100_000 {
        let rhs: Vec<f64> = (0..m)
            .map(|i| op.volumes[i] * w[i].max(0.0).powf(t - 1.0))
            .collect();
        let mut next = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
        next.push(0.0);
        normalize(&mut next);
        let qn = quotient(&next);
        w = next;
        if (q - qn).abs() <= 1e-15 * qn {
            return Ok(qn);
        }
        q = qn;
    }
    Err(Error::Eigen(
        "Rayleigh minimization did not converge".into(),
    ))
}

/// `λ₀ = Λ(B, 2p)/p` and, for `N = 2`, `λ₁ = (8π/(p+1))^{(p-1)/(2p)} Λ(B, p+1)^{(p+1)/(2p)}`.
pub fn thresholds(geom: &BallGeometry, p: f64) -> Result<SobolevConstants> {
    check_branch_exponent(geom.dim, p)?;
    let lambda_2p = sobolev_lambda(geom, 2.0 * p)?;
    let (lambda_p1, lambda1) = if geom.dim == 2 {
        let l = sobolev_lambda(geom, p + 1.0)?;
        let l1 = (8.0 * std::f64::consts::PI / (p + 1.0)).powf((p - 1.0) / (2.0 * p))
            * l.powf((p + 1.0) / (2.0 * p));
        (Some(l), Some(l1))
    } else {
        (None, None)
    };
    Ok(SobolevConstants {
        lambda_2p,
        lambda_p1,
        lambda0: lambda_2p / p,
        lambda1,
    })
}

/// Sweeps `[0, 0.995 λ₊]` with the Newton solver and checks `σ₁ > 0` on
/// every sample.
pub fn stability_certificate(
    geom: &BallGeometry,
    p: f64,
    samples: usize,
) -> Result<StabilityCertificate> {
    stability_certificate_with(geom, p, samples, DEFAULT_GRID_N, 2)
}

pub fn stability_certificate_with(
    geom: &BallGeometry,
    p: f64,
    samples: usize,
    n: usize,
    modes: usize,
) -> Result<StabilityCertificate> {
    check_branch_exponent(geom.dim, p)?;
    if samples < 2 {
        return Err(Error::InvalidInput("need at least two samples".into()));
    }
    let branch = BallBranch::build(geom.dim, p, n)?;
    let lambda_plus = branch.lambda_plus();
    let grid = make_grid(geom.dim, geom.radius, n)?;
    let per = 100usize.div_ceil(samples - 1).max(1);
    let sweep = continue_branch(geom, p, 0.995 * lambda_plus, (samples - 1) * per, &grid)?;
    let slices: Vec<&SolverSolution> = sweep.iter().step_by(per).collect();
    let sigma1: Vec<f64> = slices
        .par_iter()
        .map(|s| eigen_l(geom, s, modes).map(|r| r.sigma1))
        .collect::<Result<_>>()?;
    let lambdas: Vec<f64> = slices.iter().map(|s| s.lambda).collect();
    let (k, min_sigma1) = sigma1
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
    if let Some(i) = sigma1.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::Eigen(format!(
            "sigma1 = {} <= 0 at lambda = {}",
            sigma1[i], lambdas[i]
        )));
    }
    Ok(StabilityCertificate {
        dim: geom.dim,
        p,
        lambda_plus,
        argmin_lambda: lambdas[k],
        lambdas,
        sigma1,
        min_sigma1,
    })
}
