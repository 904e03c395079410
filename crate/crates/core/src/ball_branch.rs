//! Closed-form branch of the plasma problem on the unit-volume ball.
//!
//! With `v = λ^{1/(p-1)}(α + λψ)` the problem becomes `-Δv = [v]₊^p`,
//! `v = γ` on `∂B_{R_N}`, `∫[v]₊^p = λ^{p/(p-1)}`. Its radial solution is a
//! rescaled Lane-Emden profile `v = R^{-2/(p-1)} u₀(x/R)`, where `R = R(λ)`
//! inverts the constraint map
//!
//! ```text
//! 𝓘(R) = R^{-κ} I_p             R < R_N
//! 𝓘(R) = R^{-κ} I_p(R_N/R)      R ≥ R_N,     κ = 2/(p-1) - N + 2.
//! ```
//!
//! `R > R_N` gives a positive plasma filling the ball. `R < R_N` gives a
//! plasma supported in `B_R` with a harmonic vacuum shell outside.
//!
//! `𝓘(R_2)` equals `π^{1/(p-1)} I_p`; the exponent follows from `R_2 = π^{-1/2}`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lane_emden::{build_lane_emden_cached, LaneEmdenTable};
use crate::radial_core::{
    ball_integral, find_root_newton, make_grid, BallGeometry, RadialField, RadialGrid,
};
use crate::{check_branch_exponent, critical_exponent};

/// Relative band around `λ₊` treated as the threshold.
const THRESHOLD_BAND: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Positive,
    Threshold,
    FreeBoundary,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Positive => "positive",
            Regime::Threshold => "threshold",
            Regime::FreeBoundary => "free_boundary",
        }
    }
}

/// One `λ`-slice of the branch.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BranchPoint {
    pub lambda: f64,
    /// Scaling radius `R(λ)`; infinite at `λ = 0`.
    pub r_of_lambda: f64,
    /// `R_N/R(λ)`, capped to 1 in the free-boundary regime.
    pub r_lambda: f64,
    pub gamma: f64,
    pub alpha: f64,
    /// `λ α^{p-1}`, absent when `α < 0`.
    pub mu: Option<f64>,
    pub energy: f64,
    pub regime: Regime,
}

/// Sampled `ψ_λ` with its slope and density `ρ_λ = [α + λψ]₊^p`.
#[derive(Debug, Clone)]
pub struct Profile {
    pub lambda: f64,
    pub alpha: f64,
    pub psi: RadialField,
    pub dpsi: Vec<f64>,
    pub rho: Vec<f64>,
    /// Plasma radius when the free boundary sits inside the ball.
    pub free_radius: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BallBranch {
    pub table: LaneEmdenTable,
    pub geom: BallGeometry,
    p: f64,
    kappa: f64,
}

impl BallBranch {
    pub fn new(table: LaneEmdenTable) -> Result<Self> {
        check_branch_exponent(table.dim, table.exponent)?;
        let geom = BallGeometry::new(table.dim)?;
        let p = table.exponent;
        let kappa = 2.0 / (p - 1.0) - table.dim as f64 + 2.0;
        // u₀ scales like r₀^{2/(p-1)}, which overflows as p → 1
        if !(table.u0_at_0.is_finite() && table.ip_total.is_finite() && table.ip_total > 0.0) {
            return Err(Error::NonFinite(table.u0_at_0));
        }
        let b = Self {
            table,
            geom,
            p,
            kappa,
        };
        if !b.lambda_plus().is_finite() {
            return Err(Error::NonFinite(b.lambda_plus()));
        }
        Ok(b)
    }

    /// Builds (or loads from the cache directory) the Lane-Emden table and wraps it.
    pub fn build(dim: usize, p: f64, n: usize) -> Result<Self> {
        check_branch_exponent(dim, p)?;
        Self::new(build_lane_emden_cached(dim, p, n)?)
    }

    pub fn dim(&self) -> usize {
        self.geom.dim
    }

    pub fn exponent(&self) -> f64 {
        self.p
    }

    /// `κ = 2/(p-1) - N + 2 = (N-2)(p_N - p)/(p-1)`.
    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    fn check_radius(r: f64) -> Result<()> {
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::InvalidInput(format!("radius {r} must be positive")));
        }
        Ok(())
    }

    fn check_lambda(lambda: f64) -> Result<()> {
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda {lambda} must be positive"
            )));
        }
        Ok(())
    }

    /// The constraint map `𝓘(R)`.
    pub fn script_i(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        let rn = self.geom.radius;
        let ip = if r < rn {
            self.table.ip_total
        } else {
            self.table.ip_of(rn / r)?
        };
        Ok(r.powf(-self.kappa) * ip)
    }

    /// `d𝓘/dR`.
    pub fn script_i_prime(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        let rn = self.geom.radius;
        let k = self.kappa;
        if r < rn {
            return Ok(-k * r.powf(-k - 1.0) * self.table.ip_total);
        }
        let t = rn / r;
        let u = self.table.eval_u0(t)?.0.max(0.0);
        Ok(-k * r.powf(-k - 1.0) * self.table.ip_of(t)?
            - self.geom.surface()
                * rn.powi(self.dim() as i32)
                * r.powf(-2.0 / (self.p - 1.0) - 3.0)
                * u.powf(self.p))
    }

    /// `d²𝓘/dR²`.
    pub fn script_i_second(&self, r: f64) -> Result<f64> {
        Self::check_radius(r)?;
        let rn = self.geom.radius;
        let k = self.kappa;
        if r < rn {
            return Ok(k * (k + 1.0) * r.powf(-k - 2.0) * self.table.ip_total);
        }
        let t = rn / r;
        let nd = self.dim() as i32;
        let (u, du) = self.table.eval_u0(t)?;
        let u = u.max(0.0);
        let s = self.geom.surface();
        // J = I_p(t): J' = Nω t^{N-1} u^p, J'' = Nω ((N-1) t^{N-2} u^p + p t^{N-1} u^{p-1} u')
        let j1 = s * t.powi(nd - 1) * u.powf(self.p);
        let j2 = s
            * ((nd - 1) as f64 * t.powi(nd - 2) * u.powf(self.p)
                + self.p * t.powi(nd - 1) * u.powf(self.p - 1.0) * du);
        Ok(k * (k + 1.0) * r.powf(-k - 2.0) * self.table.ip_of(t)?
            + (2.0 * k + 2.0) * rn * r.powf(-k - 3.0) * j1
            + rn * rn * r.powf(-k - 4.0) * j2)
    }

    /// `λ₊ = I_p^{1-1/p} R_N^{-(N/p)(1 - p/p_N)}`.
    pub fn lambda_plus(&self) -> f64 {
        let nd = self.dim() as f64;
        let ratio = if self.dim() == 2 {
            0.0
        } else {
            self.p / critical_exponent(self.dim())
        };
        self.table.ip_total.powf(1.0 - 1.0 / self.p)
            * self.geom.radius.powf(-(nd / self.p) * (1.0 - ratio))
    }

    /// Planar specialization `π^{1/p} I_p^{(p-1)/p}`.
    pub fn lambda_plus_planar(&self) -> Option<f64> {
        (self.dim() == 2)
            .then(|| PI.powf(1.0 / self.p) * self.table.ip_total.powf((self.p - 1.0) / self.p))
    }

    pub fn regime(&self, lambda: f64) -> Regime {
        let lp = self.lambda_plus();
        if (lambda - lp).abs() <= THRESHOLD_BAND * lp {
            Regime::Threshold
        } else if lambda < lp {
            Regime::Positive
        } else {
            Regime::FreeBoundary
        }
    }

    /// `R(λ) = 𝓘⁻¹(λ^{p/(p-1)})`, solved in `log R` with a Newton-polished bisection.
    pub fn r_of_lambda(&self, lambda: f64) -> Result<f64> {
        Self::check_lambda(lambda)?;
        let rn = self.geom.radius;
        if self.regime(lambda) == Regime::Threshold {
            return Ok(rn);
        }
        let log_target = self.p / (self.p - 1.0) * lambda.ln();
        let f = |s: f64| {
            self.script_i(s.exp())
                .map(|v| v.ln() - log_target)
                .unwrap_or(f64::NAN)
        };
        let df = |s: f64| {
            let r = s.exp();
            match (self.script_i(r), self.script_i_prime(r)) {
                (Ok(v), Ok(d)) => r * d / v,
                _ => f64::NAN,
            }
        };
        let s_n = rn.ln();
        let step = if f(s_n) > 0.0 { 1.0 } else { -1.0 };
        let mut far = s_n + step;
        let mut guard = 0;
        while f(far) * step > 0.0 {
            far += step;
            guard += 1;
            if guard > 2000 {
                return Err(Error::NoBracket { lo: s_n, hi: far });
            }
        }
        let s = find_root_newton(f, df, s_n.min(far), s_n.max(far), 1e-15)?;
        Ok(s.exp())
    }

    /// Inverse parametrization by `r = R_N/R ∈ (0, 1]`: `λ = ((r/R_N)^κ I_p(r))^{(p-1)/p}`.
    pub fn lambda_of_r(&self, r: f64) -> Result<f64> {
        if !(r > 0.0 && r <= 1.0) {
            return Err(Error::InvalidInput(format!("r = {r} outside (0, 1]")));
        }
        let v = (r / self.geom.radius).powf(self.kappa) * self.table.ip_of(r)?;
        Ok(v.powf((self.p - 1.0) / self.p))
    }

    /// Harmonic vacuum field vanishing on `∂B_{R_N}`, normalized so that
    /// `-Δ` of it is the unit point mass: `log(R_N/s)/(2π)` or
    /// `(s^{2-N} - R_N^{2-N})/(N(N-2)ω_N)`.
    fn vacuum(&self, s: f64) -> f64 {
        let rn = self.geom.radius;
        let nd = self.dim() as f64;
        if self.dim() == 2 {
            (rn / s).ln() / (2.0 * PI)
        } else {
            (s.powf(2.0 - nd) - rn.powf(2.0 - nd)) / (nd * (nd - 2.0) * self.geom.omega)
        }
    }

    /// `(γ_λ, α_λ, μ_λ)`; `μ` is absent once `α < 0`.
    pub fn gamma_alpha_mu(&self, lambda: f64) -> Result<(f64, f64, Option<f64>)> {
        Self::check_lambda(lambda)?;
        let q = 1.0 / (self.p - 1.0);
        match self.regime(lambda) {
            Regime::Threshold => Ok((0.0, 0.0, Some(0.0))),
            Regime::Positive => {
                let r = self.r_of_lambda(lambda)?;
                let u = self.table.eval_u0(self.geom.radius / r)?.0;
                let gamma = r.powf(-2.0 * q) * u;
                let alpha = gamma / lambda.powf(q);
                Ok((gamma, alpha, Some(gamma.powf(self.p - 1.0))))
            }
            Regime::FreeBoundary => {
                // α + λψ vanishes on the free boundary |x| = R
                let r = self.r_of_lambda(lambda)?;
                let alpha = -lambda * self.vacuum(r);
                Ok((alpha * lambda.powf(q), alpha, None))
            }
        }
    }

    /// Free-boundary `α_λ` transcribed from its explicit formula:
    /// `N = 2`: `(p-1)/2 · u₀'(1) · (λ/I_p) · log(R_2^{2/(p-1)} λ^{p/(p-1)}/I_p)`;
    /// `N ≥ 3`: `-u₀'(1)/(N-2) · (λ/I_p) · (R_N^{2-N} - (λ^p/I_p^{p-1})^{1/(p_N-p)})`.
    pub fn alpha_free_closed_form(&self, lambda: f64) -> Result<f64> {
        Self::check_lambda(lambda)?;
        let p = self.p;
        let ip = self.table.ip_total;
        let du1 = self.table.du0_at_1;
        let rn = self.geom.radius;
        if self.dim() == 2 {
            let arg = rn.powf(2.0 / (p - 1.0)) * lambda.powf(p / (p - 1.0)) / ip;
            Ok((p - 1.0) / 2.0 * du1 * (lambda / ip) * arg.ln())
        } else {
            let nd = self.dim() as f64;
            let pn = critical_exponent(self.dim());
            let x = (lambda.powf(p) / ip.powf(p - 1.0)).powf(1.0 / (pn - p));
            Ok(-du1 / (nd - 2.0) * (lambda / ip) * (rn.powf(2.0 - nd) - x))
        }
    }

    /// Free-boundary radius in closed form, `R = (I_p λ^{-p/(p-1)})^{1/κ}`.
    pub fn r_free_closed_form(&self, lambda: f64) -> Result<f64> {
        Self::check_lambda(lambda)?;
        Ok((self.table.ip_total * lambda.powf(-self.p / (self.p - 1.0))).powf(1.0 / self.kappa))
    }

    /// Default grid over `[0, R_N]` matching the table resolution.
    pub fn ball_grid(&self) -> Result<RadialGrid> {
        make_grid(self.dim(), self.geom.radius, self.table.grid.n())
    }

    fn check_grid(&self, grid: &RadialGrid) -> Result<()> {
        if grid.dim != self.dim()
            || (grid.outer_radius - self.geom.radius).abs() > 1e-14 * self.geom.radius
        {
            return Err(Error::InvalidInput(
                "grid must span [0, R_N] in the branch dimension".into(),
            ));
        }
        Ok(())
    }

    /// `ψ_λ`, `ψ_λ'` and `ρ_λ` on `grid`, from the rescaled Lane-Emden profile.
    pub fn profile(&self, lambda: f64, grid: &RadialGrid) -> Result<Profile> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "lambda {lambda} must be nonnegative"
            )));
        }
        self.check_grid(grid)?;
        let nd = self.dim() as f64;
        let p = self.p;
        let rn = self.geom.radius;
        let n = grid.n();
        let (mut psi, mut dpsi, mut rho) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        let mut free_radius = None;
        let alpha;
        if lambda == 0.0 {
            alpha = 1.0;
            for (i, &s) in grid.nodes.iter().enumerate() {
                psi[i] = (rn * rn - s * s) / (2.0 * nd);
                dpsi[i] = -s / nd;
                rho[i] = 1.0;
            }
        } else if self.regime(lambda) != Regime::FreeBoundary {
            alpha = self.gamma_alpha_mu(lambda)?.1;
            let r = self.r_of_lambda(lambda)?;
            let rs = if self.regime(lambda) == Regime::Threshold {
                1.0
            } else {
                rn / r
            };
            let ip_r = self.table.ip_of(rs)?;
            let a = r.powf(2.0 - nd) / ip_r;
            let b = r.powf(1.0 - nd) / ip_r;
            let c = r.powf(-nd) / ip_r;
            for (i, &s) in grid.nodes.iter().enumerate() {
                let t = if i == n - 1 { rs } else { (s / r).min(rs) };
                let (u, du) = self.table.eval_u0(t)?;
                psi[i] = a * self.table.u0_drop(t, rs)?;
                dpsi[i] = b * du;
                rho[i] = c * u.max(0.0).powf(p);
            }
        } else {
            alpha = self.gamma_alpha_mu(lambda)?.1;
            let r = self.r_of_lambda(lambda)?;
            free_radius = Some(r);
            let ip = self.table.ip_total;
            let phi_r = self.vacuum(r);
            for (i, &s) in grid.nodes.iter().enumerate() {
                if s < r {
                    let (u, du) = self.table.eval_u0(s / r)?;
                    psi[i] = r.powf(2.0 - nd) * u / ip + phi_r;
                    dpsi[i] = r.powf(1.0 - nd) * du / ip;
                    rho[i] = r.powf(-nd) * u.max(0.0).powf(p) / ip;
                } else {
                    psi[i] = self.vacuum(s);
                    dpsi[i] = -1.0 / (self.geom.surface() * s.powf(nd - 1.0));
                }
            }
            psi[n - 1] = 0.0;
        }
        Ok(Profile {
            lambda,
            alpha,
            psi: RadialField::new(grid.clone(), psi)?,
            dpsi,
            rho,
            free_radius,
        })
    }

    /// `(α_λ, ψ_λ)` on `grid`.
    pub fn reconstruct_psi(&self, lambda: f64, grid: &RadialGrid) -> Result<(f64, RadialField)> {
        let prof = self.profile(lambda, grid)?;
        Ok((prof.alpha, prof.psi))
    }

    /// `(½∫|∇ψ|², ½∫ρψ)` by Simpson on the default ball grid.
    pub fn energy_forms(&self, lambda: f64) -> Result<(f64, f64)> {
        let grid = self.ball_grid()?;
        let prof = self.profile(lambda, &grid)?;
        let g2: Vec<f64> = prof.dpsi.iter().map(|d| d * d).collect();
        let rp: Vec<f64> = prof
            .rho
            .iter()
            .zip(&prof.psi.values)
            .map(|(r, s)| r * s)
            .collect();
        Ok((
            0.5 * ball_integral(&grid, &g2)?,
            0.5 * ball_integral(&grid, &rp)?,
        ))
    }

    /// `E_λ = ½∫ρ_λ ψ_λ`.
    pub fn energy_of(&self, lambda: f64) -> Result<f64> {
        Ok(self.energy_forms(lambda)?.1)
    }

    /// Torsion energy `E₀ = R_N²/(2N(N+2))` in closed form.
    pub fn e0_closed_form(&self) -> f64 {
        let nd = self.dim() as f64;
        self.geom.radius.powi(2) / (2.0 * nd * (nd + 2.0))
    }

    /// `g(λ) = 2/(p-1) u₀(r_λ) + r_λ u₀'(r_λ)` on `(0, λ₊]`.
    pub fn bending_g(&self, lambda: f64) -> Result<f64> {
        Self::check_lambda(lambda)?;
        if self.regime(lambda) == Regime::FreeBoundary {
            return Err(Error::InvalidInput(format!(
                "lambda {lambda} beyond lambda_plus"
            )));
        }
        let r = if self.regime(lambda) == Regime::Threshold {
            1.0
        } else {
            self.geom.radius / self.r_of_lambda(lambda)?
        };
        self.bending_in_r(r)
    }

    fn bending_in_r(&self, r: f64) -> Result<f64> {
        let (u, du) = self.table.eval_u0(r)?;
        Ok(2.0 / (self.p - 1.0) * u + r * du)
    }

    /// Turning point `λᵗ` of `μ_λ`: the zero of `g`, located in `r_λ` and
    /// mapped back through the constraint identity.
    pub fn lambda_turn(&self) -> Result<f64> {
        let p = self.p;
        let nd = self.dim() as f64;
        let g = |r: f64| self.bending_in_r(r).unwrap_or(f64::NAN);
        let dg = |r: f64| match self.table.eval_u0(r) {
            Ok((u, du)) => {
                let d2 = -u.max(0.0).powf(p) - (nd - 1.0) / r * du;
                (2.0 / (p - 1.0) + 1.0) * du + r * d2
            }
            Err(_) => f64::NAN,
        };
        let lo = 1e-6;
        if !(g(lo) > 0.0 && g(1.0) < 0.0) {
            return Err(Error::NoBracket { lo, hi: 1.0 });
        }
        let rt = find_root_newton(g, dg, lo, 1.0, 1e-15)?;
        self.lambda_of_r(rt)
    }

    pub fn point(&self, lambda: f64) -> Result<BranchPoint> {
        if lambda == 0.0 {
            return Ok(BranchPoint {
                lambda,
                r_of_lambda: f64::INFINITY,
                r_lambda: 0.0,
                gamma: 0.0,
                alpha: 1.0,
                mu: Some(0.0),
                energy: self.energy_of(0.0)?,
                regime: Regime::Positive,
            });
        }
        let (gamma, alpha, mu) = self.gamma_alpha_mu(lambda)?;
        let r = self.r_of_lambda(lambda)?;
        Ok(BranchPoint {
            lambda,
            r_of_lambda: r,
            r_lambda: (self.geom.radius / r).min(1.0),
            gamma,
            alpha,
            mu,
            energy: self.energy_of(lambda)?,
            regime: self.regime(lambda),
        })
    }

    /// Branch points at every `λ`, evaluated in parallel.
    pub fn points(&self, lambdas: &[f64]) -> Result<Vec<BranchPoint>> {
        lambdas.par_iter().map(|&l| self.point(l)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial_core::laplacian_residual;
    use std::sync::OnceLock;

    fn branch(dim: usize, p: f64) -> BallBranch {
        static CACHE: OnceLock<std::sync::Mutex<Vec<((usize, u64), BallBranch)>>> = OnceLock::new();
        let m = CACHE.get_or_init(Default::default);
        let mut v = m.lock().unwrap();
        if let Some((_, b)) = v.iter().find(|(k, _)| *k == (dim, p.to_bits())) {
            return b.clone();
        }
        let b = BallBranch::build(dim, p, 2049).unwrap();
        v.push(((dim, p.to_bits()), b.clone()));
        b
    }

    #[test]
    fn script_i_limits_and_value_at_rn() {
        let b = branch(2, 2.0);
        let rn = b.geom.radius;
        let at = b.script_i(rn).unwrap();
        assert!((at - PI.powf(1.0) * b.table.ip_total).abs() < 1e-12 * at);
        let b3 = branch(2, 3.0);
        let at3 = b3.script_i(rn).unwrap();
        assert!((at3 - PI.powf(0.5) * b3.table.ip_total).abs() < 1e-12 * at3);
        let mut prev = f64::INFINITY;
        for k in -20..40 {
            let r = rn * 1.5f64.powi(k);
            let v = b.script_i(r).unwrap();
            assert!(v < prev && v > 0.0);
            assert!(b.script_i_prime(r).unwrap() < 0.0);
            prev = v;
        }
        assert!(b.script_i(rn * 1e-6).unwrap() > 1e6);
        assert!(b.script_i(rn * 1e6).unwrap() < 1e-6);
        assert!(b.script_i(0.0).is_err());
        assert!(b.script_i_prime(-1.0).is_err());
    }

    #[test]
    fn derivative_matches_centered_differences() {
        for (dim, p) in [(2usize, 2.0), (3, 1.5), (4, 1.5)] {
            let b = branch(dim, p);
            let rn = b.geom.radius;
            let h = 1e-5;
            for f in [0.3, 0.9, 1.1, 2.0, 10.0] {
                let r = rn * f;
                let fd = (b.script_i(r + h * r).unwrap() - b.script_i(r - h * r).unwrap())
                    / (2.0 * h * r);
                let an = b.script_i_prime(r).unwrap();
                assert!(
                    (fd - an).abs() < 1e-6 * an.abs(),
                    "{dim} {p} {f}: {fd} vs {an}"
                );
                let fd2 = (b.script_i_prime(r + h * r).unwrap()
                    - b.script_i_prime(r - h * r).unwrap())
                    / (2.0 * h * r);
                let an2 = b.script_i_second(r).unwrap();
                assert!(
                    (fd2 - an2).abs() < 1e-5 * an2.abs(),
                    "{dim} {p} {f}: {fd2} vs {an2}"
                );
            }
            // C¹ and C² matching at R_N
            let l = b.script_i_prime(rn * (1.0 - 1e-12)).unwrap();
            let r = b.script_i_prime(rn).unwrap();
            assert!((l - r).abs() < 1e-9 * l.abs());
            let l2 = b.script_i_second(rn * (1.0 - 1e-12)).unwrap();
            let r2 = b.script_i_second(rn).unwrap();
            assert!((l2 - r2).abs() < 1e-9 * l2.abs());
        }
    }

    #[test]
    fn lambda_plus_forms_agree() {
        for p in [1.5, 2.0, 3.0] {
            let b = branch(2, p);
            let lp = b.lambda_plus();
            let planar = b.lambda_plus_planar().unwrap();
            assert!((lp - planar).abs() <= 1e-12 * lp);
        }
        assert!(branch(3, 2.0).lambda_plus_planar().is_none());
    }

    #[test]
    fn r_of_lambda_regimes() {
        for (dim, p) in [(2usize, 2.0), (3, 2.0), (3, 1.5), (4, 1.5)] {
            let b = branch(dim, p);
            let lp = b.lambda_plus();
            let rn = b.geom.radius;
            assert!((b.r_of_lambda(lp).unwrap() - rn).abs() < 1e-10);
            assert!((b.r_of_lambda(lp * (1.0 + 1e-9)).unwrap() - rn).abs() < 1e-7);
            for f in [1e-6, 0.01, 0.3, 0.9, 0.999] {
                let l = f * lp;
                let r = b.r_of_lambda(l).unwrap();
                assert!(r > rn);
                let target = l.powf(p / (p - 1.0));
                assert!((b.script_i(r).unwrap() - target).abs() <= 1e-12 * target);
                // constraint identity R_N^κ λ^{p/(p-1)} = r_λ^κ I_p(r_λ)
                let rl = rn / r;
                let lhs = rn.powf(b.kappa()) * target;
                let rhs = rl.powf(b.kappa()) * b.table.ip_of(rl).unwrap();
                assert!((lhs - rhs).abs() <= 1e-10 * lhs);
                assert!((b.lambda_of_r(rl).unwrap() - l).abs() <= 1e-11 * l);
            }
            for f in [1.01, 1.5, 3.0] {
                let l = f * lp;
                let r = b.r_of_lambda(l).unwrap();
                assert!(r < rn);
                if dim >= 3 {
                    assert!((r - b.r_free_closed_form(l).unwrap()).abs() < 1e-10);
                }
            }
            assert!(b.r_of_lambda(0.0).is_err());
        }
    }

    #[test]
    fn alpha_endpoints_and_free_regime() {
        for (dim, p) in [(2usize, 2.0), (3, 2.0), (4, 1.5), (2, 1.5)] {
            let b = branch(dim, p);
            let lp = b.lambda_plus();
            let (g, a, m) = b.gamma_alpha_mu(lp).unwrap();
            assert_eq!((g, a, m), (0.0, 0.0, Some(0.0)));
            // just below λ₊ the positive formula gives α ≈ 0 as well
            let (_, a_near, _) = b.gamma_alpha_mu(lp * (1.0 - 1e-11)).unwrap();
            assert!(a_near.abs() < 1e-9);
            let (_, a_small, _) = b.gamma_alpha_mu(1e-8 * lp).unwrap();
            assert!((a_small - 1.0).abs() < 1e-6);
            for f in [1.2, 2.0, 3.0] {
                let (_, a, m) = b.gamma_alpha_mu(f * lp).unwrap();
                assert!(a < 0.0 && m.is_none());
                let cf = b.alpha_free_closed_form(f * lp).unwrap();
                assert!(
                    (a - cf).abs() < 1e-10 * cf.abs(),
                    "{dim} {p} {f}: {a} vs {cf}"
                );
            }
        }
    }

    #[test]
    fn reconstructed_profiles_solve_the_problem() {
        for (dim, p) in [(2usize, 2.0), (3, 2.0), (2, 1.5)] {
            let b = branch(dim, p);
            let lp = b.lambda_plus();
            let grid = b.ball_grid().unwrap();
            for f in [1e-3, 0.5, 0.99, 1.0, 1.5] {
                let prof = b.profile(f * lp, &grid).unwrap();
                let psi = &prof.psi.values;
                assert!(psi[grid.n() - 1].abs() < 1e-9);
                let mass = ball_integral(&grid, &prof.rho).unwrap();
                assert!((mass - 1.0).abs() < 1e-8, "{dim} {p} {f}: mass {mass}");
                let res = laplacian_residual(&grid, psi, &prof.rho);
                if f < 1.0 {
                    assert!(res < 1e-6, "{dim} {p} {f}: residual {res}");
                } else {
                    // u₀^p loses smoothness at r = 1 (p < 2) or across the free boundary
                    assert!(
                        res < 1e-6 * (1.0 + prof.rho[0]),
                        "{dim} {p} {f}: residual {res}"
                    );
                }
                let plasma: Vec<f64> = psi.iter().map(|s| prof.alpha + f * lp * s).collect();
                if f < 1.0 {
                    assert!(plasma.iter().all(|v| *v > 0.0));
                } else if f > 1.0 {
                    let r = prof.free_radius.unwrap();
                    for (v, s) in plasma.iter().zip(&grid.nodes) {
                        assert_eq!(*v > 0.0, *s < r, "sign at {s} vs R {r}");
                    }
                }
            }
        }
    }

    #[test]
    fn small_lambda_profile_is_torsion() {
        let b = branch(3, 1.5);
        let grid = b.ball_grid().unwrap();
        let rn = b.geom.radius;
        let mut prev = f64::INFINITY;
        for l in [1e-2, 1e-3, 1e-4] {
            let (a, psi) = b.reconstruct_psi(l * b.lambda_plus(), &grid).unwrap();
            assert!(a < 1.0);
            let dev = psi
                .values
                .iter()
                .zip(&grid.nodes)
                .map(|(v, s)| (v - (rn * rn - s * s) / 6.0).abs())
                .fold(0.0, f64::max);
            assert!(dev < prev);
            prev = dev;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn energies() {
        let b = branch(2, 2.0);
        let e0 = b.energy_of(0.0).unwrap();
        assert!((e0 - 1.0 / (16.0 * PI)).abs() < 1e-8);
        assert!((b.e0_closed_form() - 1.0 / (16.0 * PI)).abs() < 1e-15);
        let e_inf = b.energy_of(b.lambda_plus()).unwrap();
        assert!((e_inf - 3.0 / (16.0 * PI)).abs() < 1e-6, "{e_inf}");
        let lp = b.lambda_plus();
        let mut prev = 0.0;
        for k in 0..60 {
            let l = lp * k as f64 / 60.0;
            let (g, r) = b.energy_forms(l).unwrap();
            assert!((g - r).abs() < 1e-7 * r);
            assert!(r > prev);
            prev = r;
        }
    }

    #[test]
    fn bending_and_turn() {
        for (dim, p) in [(2usize, 2.0), (3, 2.0), (2, 1.5)] {
            let b = branch(dim, p);
            let lp = b.lambda_plus();
            let g0 = b.bending_g(1e-9 * lp).unwrap();
            assert!((g0 - 2.0 / (p - 1.0) * b.table.u0_at_0).abs() < 1e-4 * g0);
            assert!((b.bending_g(lp).unwrap() - b.table.du0_at_1).abs() < 1e-12);
            assert!(b.bending_g(1.1 * lp).is_err());
            let mut prev = f64::INFINITY;
            for k in 1..=200 {
                let g = b.bending_g(lp * k as f64 / 200.0).unwrap();
                assert!(g < prev);
                prev = g;
            }
            let lt = b.lambda_turn().unwrap();
            assert!(lt > 0.0 && lt < lp);
            assert!(b.bending_g(lt).unwrap().abs() < 1e-8);
            // μ maximum over a 1000-point grid sits next to λᵗ
            let mut best = (0.0, 0.0);
            for k in 1..1000 {
                let l = lp * k as f64 / 1000.0;
                let mu = b.gamma_alpha_mu(l).unwrap().2.unwrap();
                if mu > best.1 {
                    best = (l, mu);
                }
            }
            assert!((best.0 - lt).abs() <= lp / 1000.0);
            let mu_t = b.gamma_alpha_mu(lt).unwrap().2.unwrap();
            assert!(mu_t >= best.1);
        }
    }

    #[test]
    fn rejects_supercritical_branch() {
        assert!(BallBranch::build(3, 3.0, 129).is_err());
        assert!(BallBranch::build(2, 1.0, 129).is_err());
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]

        #[test]
        fn alpha_strictly_decreasing(a in 0.0f64..3.0, b in 0.0f64..3.0) {
            let br = branch(3, 1.5);
            let lp = br.lambda_plus();
            let (lo, hi) = (a.min(b) * lp, a.max(b) * lp);
            proptest::prop_assume!(hi - lo > 1e-6 * lp);
            let (plo, phi) = (br.point(lo).unwrap(), br.point(hi).unwrap());
            proptest::prop_assert!(phi.alpha < plo.alpha);
            if hi < lp {
                proptest::prop_assert!(phi.energy > plo.energy);
            }
        }

        #[test]
        fn energy_forms_agree(f in 0.0f64..1.0) {
            let br = branch(2, 2.0);
            let (g, r) = br.energy_forms(f * br.lambda_plus()).unwrap();
            proptest::prop_assert!((g - r).abs() <= 1e-7 * r);
        }
    }
}
