//! Named numerical checks at one `(N, p)`, as run by `plasma-branch verify`.
//!
//! Every check is a measured value compared against a bound, either from
//! above (errors, defects) or from below (margins). Bounds can be overridden
//! by name.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::Serialize;

use crate::ball_branch::BallBranch;
use crate::error::{Error, Result};
use crate::gelfand::{bell_curve, to_gelfand};
use crate::lane_emden::{build_lane_emden_cached, LaneEmdenTable};
use crate::radial_core::{ball_integral, make_grid, RadialOperator};
use crate::solver::{
    continue_branch, derivative_fields, entropy_identity_defect, residual_floor, solve_plasma,
};
use crate::spectral::{
    dirichlet_eigenvalue, eigen_l, energy_inequality_slack, fourier_coefficients,
    fourier_relation_defect, sobolev_lambda_oracle, sobolev_lambda_with, thresholds,
};
use crate::DEFAULT_GRID_N;

#[derive(Debug, Clone, Serialize)]
pub struct VerifyConfig {
    pub dim: usize,
    pub p: f64,
    pub grid_n: usize,
    pub samples: usize,
    pub modes: usize,
    pub tolerances: BTreeMap<String, f64>,
    /// Multiplies the stored Lane-Emden values before any check runs.
    #[serde(skip)]
    pub corrupt_profile: Option<f64>,
}

impl VerifyConfig {
    pub fn new(dim: usize, p: f64) -> Self {
        Self {
            dim,
            p,
            grid_n: DEFAULT_GRID_N,
            samples: 200,
            modes: 2,
            tolerances: BTreeMap::new(),
            corrupt_profile: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    /// Passes when `value < bound`.
    Below,
    /// Passes when `value > bound`.
    Above,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub bound: f64,
    pub kind: Bound,
    pub detail: String,
}

struct Suite<'a> {
    checks: Vec<Check>,
    overrides: &'a BTreeMap<String, f64>,
}

impl Suite<'_> {
    fn push(&mut self, name: &str, value: f64, default: f64, kind: Bound, detail: String) {
        let bound = self.overrides.get(name).copied().unwrap_or(default);
        let passed = match kind {
            Bound::Below => value < bound,
            Bound::Above => value > bound,
        };
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            value,
            bound,
            kind,
            detail,
        });
    }

    fn below(&mut self, name: &str, value: f64, default: f64) {
        self.push(name, value, default, Bound::Below, String::new());
    }

    fn above(&mut self, name: &str, value: f64, default: f64) {
        self.push(name, value, default, Bound::Above, String::new());
    }

    fn group(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        if let Err(e) = f(self) {
            self.push(name, f64::NAN, 0.0, Bound::Below, e.to_string());
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Names accepted by tolerance overrides.
pub const CHECK_NAMES: &[&str] = &[
    "lane_emden.boundary",
    "lane_emden.center_slope",
    "lane_emden.monotone",
    "lane_emden.residual",
    "lane_emden.pohozaev",
    "lane_emden.flux_vs_quadrature",
    "branch.lambda_plus_planar",
    "branch.alpha_at_lambda_plus",
    "branch.e0",
    "branch.e_inf",
    "branch.energy_forms",
    "branch.alpha_monotone",
    "branch.energy_monotone",
    "branch.script_i_c2",
    "branch.script_i_derivative",
    "branch.alpha_free_closed_form",
    "bell.single_bend",
    "bell.turning_cell",
    "gelfand.residual",
    "gelfand.energy",
    "solver.oracle_alpha",
    "solver.oracle_energy",
    "solver.order",
    "solver.residual",
    "solver.constraint",
    "solver.free_radius",
    "solver.dalpha_mean_w",
    "solver.energy_derivative",
    "solver.entropy",
    "solver.fd_alpha",
    "solver.fd_energy",
    "spectral.sigma1_positive",
    "spectral.sigma_above_nu",
    "spectral.nu_sobolev",
    "spectral.sigma_mu_relation",
    "spectral.fourier",
    "spectral.energy_inequality",
    "spectral.eigen_residual",
    "spectral.h1_normalization",
    "spectral.weighted_normalization",
    "spectral.mode_monotone",
    "sobolev.dirichlet",
    "sobolev.oracle",
    "sobolev.lambda1_equals_lambda_plus",
    "sobolev.lambda0_below_lambda_plus",
];

pub fn run_suite(cfg: &VerifyConfig) -> Result<Vec<Check>> {
    for k in cfg.tolerances.keys() {
        if !CHECK_NAMES.contains(&k.as_str()) {
            return Err(Error::InvalidInput(format!("unknown check name {k}")));
        }
    }
    let mut table = build_lane_emden_cached(cfg.dim, cfg.p, cfg.grid_n)?;
    if let Some(f) = cfg.corrupt_profile {
        table = table.with_corrupted_profile(f);
    }
    let branch = BallBranch::new(table.clone())?;
    let mut s = Suite {
        checks: Vec::new(),
        overrides: &cfg.tolerances,
    };
    s.group("lane_emden", |s| lane_emden_checks(s, &table));
    s.group("branch", |s| branch_checks(s, &branch, cfg));
    s.group("bell", |s| bell_checks(s, &branch, cfg));
    s.group("gelfand", |s| gelfand_checks(s, &branch));
    s.group("solver", |s| solver_checks(s, &branch, cfg));
    s.group("spectral", |s| spectral_checks(s, &branch, cfg));
    s.group("sobolev", |s| sobolev_checks(s, &branch, cfg));
    Ok(s.checks)
}

fn lane_emden_checks(s: &mut Suite, t: &LaneEmdenTable) -> Result<()> {
    let n = t.grid.n();
    s.below("lane_emden.boundary", t.u0[n - 1].abs(), 1e-10);
    s.below("lane_emden.center_slope", t.du0[0].abs(), 1e-10);
    let bad = t.u0.windows(2).filter(|w| !(w[1] < w[0])).count()
        + t.du0[1..].iter().filter(|d| !(**d < 0.0)).count();
    s.below("lane_emden.monotone", bad as f64, 0.5);
    // u₀^p is only C^{p-1} at r = 1 when p < 2: the stencil is checked inside
    let res = if t.exponent >= 2.0 {
        t.equation_residual()
    } else {
        t.equation_residual_within(0.9)
    };
    // u₀ scales like r₀^{2/(p-1)}, so measure against the size of the source
    s.below(
        "lane_emden.residual",
        res / t.u0_at_0.powf(t.exponent).max(1.0),
        1e-7,
    );
    let grad: Vec<f64> = t.du0.iter().map(|d| d * d).collect();
    let pow: Vec<f64> =
        t.u0.iter()
            .map(|u| u.max(0.0).powf(t.exponent + 1.0))
            .collect();
    let g = ball_integral(&t.grid, &grad)?;
    s.below(
        "lane_emden.pohozaev",
        rel(g, ball_integral(&t.grid, &pow)?),
        1e-7,
    );
    let up: Vec<f64> = t.u0.iter().map(|u| u.max(0.0).powf(t.exponent)).collect();
    // Simpson on u₀^p ~ (1 - r)^p converges like h^{p+1} for p < 2
    s.below(
        "lane_emden.flux_vs_quadrature",
        rel(ball_integral(&t.grid, &up)?, t.ip_total),
        1e-8,
    );
    Ok(())
}

fn branch_checks(s: &mut Suite, b: &BallBranch, cfg: &VerifyConfig) -> Result<()> {
    let lp = b.lambda_plus();
    let p = b.exponent();
    if let Some(planar) = b.lambda_plus_planar() {
        s.below("branch.lambda_plus_planar", rel(lp, planar), 1e-12);
    }
    let a = b.gamma_alpha_mu(lp * (1.0 - 1e-11))?.1;
    s.below("branch.alpha_at_lambda_plus", a.abs(), 1e-9);
    s.below(
        "branch.e0",
        rel(b.energy_of(0.0)?, b.e0_closed_form()),
        1e-8,
    );
    if b.dim() == 2 {
        s.below(
            "branch.e_inf",
            (b.energy_of(lp)? - (p + 1.0) / (16.0 * PI)).abs(),
            1e-6,
        );
    }
    let k = cfg.samples.max(10);
    let lam: Vec<f64> = (0..=k).map(|i| 3.0 * lp * i as f64 / k as f64).collect();
    let pts = b.points(&lam)?;
    let alpha_bad = pts
        .windows(2)
        .filter(|w| !(w[1].alpha < w[0].alpha))
        .count();
    s.below("branch.alpha_monotone", alpha_bad as f64, 0.5);
    let energy_bad = pts
        .windows(2)
        .filter(|w| w[1].lambda <= lp && !(w[1].energy > w[0].energy))
        .count();
    s.below("branch.energy_monotone", energy_bad as f64, 0.5);
    let mut forms = 0.0_f64;
    for f in [0.0, 0.25, 0.5, 0.75, 0.99, 1.0] {
        let (g, r) = b.energy_forms(f * lp)?;
        forms = forms.max(rel(g, r));
    }
    s.below("branch.energy_forms", forms, 1e-7);

    let rn = b.geom.radius;
    let c1 = rel(b.script_i_prime(rn * (1.0 - 1e-12))?, b.script_i_prime(rn)?);
    let c2 = rel(
        b.script_i_second(rn * (1.0 - 1e-12))?,
        b.script_i_second(rn)?,
    );
    s.below("branch.script_i_c2", c1.max(c2), 1e-6);
    let mut dmax = 0.0_f64;
    for k in -12..=12 {
        let r = rn * 1.5f64.powi(k);
        let h = 1e-5 * r;
        let fd = (b.script_i(r + h)? - b.script_i(r - h)?) / (2.0 * h);
        dmax = dmax.max(rel(fd, b.script_i_prime(r)?));
    }
    s.below("branch.script_i_derivative", dmax, 1e-6);
    let mut cf = 0.0_f64;
    for f in [1.5, 2.0, 3.0] {
        cf = cf.max(rel(
            b.alpha_free_closed_form(f * lp)?,
            b.gamma_alpha_mu(f * lp)?.1,
        ));
    }
    s.below("branch.alpha_free_closed_form", cf, 1e-6);
    Ok(())
}

fn bell_checks(s: &mut Suite, b: &BallBranch, cfg: &VerifyConfig) -> Result<()> {
    let curve = match bell_curve(b, cfg.samples.max(100)) {
        Ok(c) => c,
        Err(Error::Monotonicity(m)) => {
            s.push("bell.single_bend", 1.0, 0.5, Bound::Below, m);
            return Ok(());
        }
        Err(e) => return Err(e),
    };
    s.below("bell.single_bend", 0.0, 0.5);
    let rows = &curve.rows;
    let imax = (0..rows.len()).fold(0, |a, i| if rows[i].mu > rows[a].mu { i } else { a });
    let lo = rows[imax.saturating_sub(1)].lambda;
    let hi = rows[(imax + 1).min(rows.len() - 1)].lambda;
    let lt = curve.turning.lambda_t;
    s.below(
        "bell.turning_cell",
        if lo <= lt && lt <= hi { 0.0 } else { 1.0 },
        0.5,
    );
    Ok(())
}

fn gelfand_checks(s: &mut Suite, b: &BallBranch) -> Result<()> {
    let lp = b.lambda_plus();
    let (mut res, mut en) = (0.0_f64, 0.0_f64);
    for k in 1..=11 {
        let g = to_gelfand(b, lp * k as f64 / 12.0)?;
        res = res.max(g.residual / (1.0 + g.v_max).powf(b.exponent()));
        en = en.max(rel(g.energy_gelfand, g.energy));
    }
    s.below("gelfand.residual", res, 1e-6);
    s.below("gelfand.energy", en, 1e-7);
    Ok(())
}

/// Max relative mismatch of `(α, E)` between a 21-slice solver sweep over
/// `[0, 0.99 λ₊]` on `n` nodes and the closed forms.
fn oracle_mismatch(b: &BallBranch, n: usize) -> Result<(f64, f64, f64)> {
    let lp = b.lambda_plus();
    let grid = make_grid(b.dim(), b.geom.radius, n)?;
    let sweep = continue_branch(&b.geom, b.exponent(), 0.99 * lp, 100, &grid)?;
    let (mut ea, mut ee, mut res) = (0.0_f64, 0.0_f64, 0.0_f64);
    for sol in sweep.iter().step_by(5) {
        let pt = b.point(sol.lambda)?;
        ea = ea.max(rel(sol.alpha, pt.alpha));
        ee = ee.max(rel(sol.energy, pt.energy));
        let psi_max = sol.psi.max_abs();
        let bound = 1e-9_f64.max(residual_floor(&grid, psi_max) / (1.0 + psi_max));
        res = res.max(sol.residual_pde / (1.0 + psi_max) / bound);
    }
    Ok((ea, ee, res))
}

fn solver_checks(s: &mut Suite, b: &BallBranch, cfg: &VerifyConfig) -> Result<()> {
    let n = cfg.grid_n;
    let (ea1, ee1, res) = oracle_mismatch(b, n)?;
    let (ea2, ee2, _) = oracle_mismatch(b, 2 * n - 1)?;
    let (ea4, ee4, _) = oracle_mismatch(b, 4 * n - 3)?;
    s.below("solver.oracle_alpha", ea4, 5e-6);
    s.below("solver.oracle_energy", ee4, 5e-6);
    s.below(
        "solver.order",
        ((ea1 / ea2 - 4.0).abs()).max((ee1 / ee2 - 4.0).abs()),
        0.5,
    );
    s.below("solver.residual", res, 1.0);

    let lp = b.lambda_plus();
    let p = b.exponent();
    let grid = make_grid(b.dim(), b.geom.radius, n)?;
    let sweep = continue_branch(&b.geom, p, 0.99 * lp, 110, &grid)?;
    let (mut dalpha_err, mut de, mut ent, mut fda, mut fde, mut cons) =
        (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for sol in sweep.iter().skip(10).step_by(10) {
        cons = cons.max(sol.constraint_defect);
        let f = derivative_fields(sol)?;
        dalpha_err = dalpha_err.max((f.dalpha + f.mean_w).abs());
        de = de.max(rel(f.d_energy, f.rho_eta));
        ent = ent.max(entropy_identity_defect(sol, &f)? / (1.0 + 2.0 * sol.energy));
        let d = 1e-4;
        let init = Some((sol.alpha, sol.psi.values.as_slice()));
        let lo = solve_plasma(&b.geom, p, sol.lambda - d, &grid, init)?;
        let hi = solve_plasma(&b.geom, p, sol.lambda + d, &grid, init)?;
        fda = fda.max(rel((hi.alpha - lo.alpha) / (2.0 * d), f.dalpha));
        fde = fde.max(rel((hi.energy - lo.energy) / (2.0 * d), f.d_energy));
    }
    s.below("solver.constraint", cons, 1e-10);
    s.below("solver.dalpha_mean_w", dalpha_err, 1e-8);
    s.below("solver.energy_derivative", de, 1e-7);
    s.below("solver.entropy", ent, 1e-6);
    s.below("solver.fd_alpha", fda, 1e-6);
    s.below("solver.fd_energy", fde, 1e-6);

    let lam = 1.5 * lp;
    let far = continue_branch(&b.geom, p, lam, 150, &grid)?;
    let sol = far.last().expect("nonempty sweep");
    let r = b.r_of_lambda(lam)?;
    let cells = sol
        .free_radius()
        .map_or(f64::INFINITY, |fr| (fr - r).abs() / grid.h);
    s.below("solver.free_radius", cells, 2.0 + 1e-9);
    Ok(())
}

fn spectral_checks(s: &mut Suite, b: &BallBranch, cfg: &VerifyConfig) -> Result<()> {
    let lp = b.lambda_plus();
    let p = b.exponent();
    let grid = make_grid(b.dim(), b.geom.radius, cfg.grid_n)?;
    let op = RadialOperator::new(&grid);
    let lambda_2p = sobolev_lambda_with(&b.geom, 2.0 * p, cfg.grid_n)?;
    let sweep = continue_branch(&b.geom, p, 0.995 * lp, 110, &grid)?;
    let mut m = [
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
        0.0,
        0.0,
        f64::INFINITY,
        0.0,
        0.0,
        0.0,
        0.0,
    ];
    for sol in sweep.iter().step_by(11) {
        let r = eigen_l(&b.geom, sol, cfg.modes)?;
        m[0] = m[0].min(r.sigma1);
        m[1] = m[1].min(r.sigma1 - r.nu1);
        m[2] = m[2].min(r.nu1 - (lambda_2p - sol.lambda * p));
        if sol.lambda > 0.0 {
            m[3] = f64::max(m[3], rel(r.tau * (1.0 / r.mu1 - 1.0), r.sigma1));
            let f = derivative_fields(sol)?;
            for j in 1..=2 {
                let (beta, gamma) = fourier_coefficients(&r, sol, &f, j)?;
                let sj = r.sigma[0].sigma[j - 1];
                let d = fourier_relation_defect(&r, sol, &f, j)?;
                m[4] = f64::max(m[4], d / ((sj * gamma).abs() + (p * beta).abs() + 1.0));
            }
            m[5] = m[5].min(energy_inequality_slack(&r, sol, &f));
        }
        m[6] = f64::max(m[6], r.residual.max(r.angular_residual));
        for (j, phi) in r.eigenfunctions.iter().enumerate() {
            let h1 = op.stiffness_product(&phi.values, &phi.values);
            m[7] = f64::max(m[7], (h1 - 1.0).abs());
            let w = sol.weight();
            let mass = op.integrate(&w);
            let wphi: Vec<f64> = w.iter().zip(&phi.values).map(|(a, b)| a * b).collect();
            let sq: Vec<f64> = wphi.iter().zip(&phi.values).map(|(a, b)| a * b).collect();
            let proj = op.integrate(&sq) - op.integrate(&wphi).powi(2) / mass;
            m[8] = f64::max(m[8], (r.theta[j] * proj - 1.0).abs());
        }
        let firsts: Vec<f64> = r.sigma.iter().skip(1).map(|ms| ms.sigma[0]).collect();
        m[9] += firsts.windows(2).filter(|w| w[1] < w[0]).count() as f64;
    }
    s.above("spectral.sigma1_positive", m[0], 0.0);
    s.above("spectral.sigma_above_nu", m[1], 1e-10);
    s.above("spectral.nu_sobolev", m[2], 0.0);
    s.below("spectral.sigma_mu_relation", m[3], 1e-8);
    s.below("spectral.fourier", m[4], 1e-6);
    s.above("spectral.energy_inequality", m[5], -1e-8);
    s.below("spectral.eigen_residual", m[6], 1e-6);
    s.below("spectral.h1_normalization", m[7], 1e-8);
    s.below("spectral.weighted_normalization", m[8], 1e-7);
    s.below("spectral.mode_monotone", m[9], 0.5);
    Ok(())
}

fn sobolev_checks(s: &mut Suite, b: &BallBranch, cfg: &VerifyConfig) -> Result<()> {
    let p = b.exponent();
    let lp = b.lambda_plus();
    if b.dim() == 2 {
        let j01: f64 = 2.404_825_557_695_773;
        let d = dirichlet_eigenvalue(&make_grid(2, b.geom.radius, cfg.grid_n)?)?;
        s.below("sobolev.dirichlet", rel(d, j01 * j01 * PI), 1e-6);
    }
    let l2p = sobolev_lambda_with(&b.geom, 2.0 * p, cfg.grid_n)?;
    let oracle = sobolev_lambda_oracle(&b.geom, 2.0 * p, cfg.grid_n)?;
    s.below("sobolev.oracle", rel(oracle, l2p), 1e-5);
    let th = thresholds(&b.geom, p)?;
    if let Some(l1) = th.lambda1 {
        s.below("sobolev.lambda1_equals_lambda_plus", rel(l1, lp), 1e-5);
    }
    s.above("sobolev.lambda0_below_lambda_plus", lp - th.lambda0, 0.0);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_passes_on_the_disk() {
        let mut cfg = VerifyConfig::new(2, 2.0);
        cfg.grid_n = 1025;
        cfg.samples = 100;
        let checks = run_suite(&cfg).unwrap();
        let failed: Vec<_> = checks.iter().filter(|c| !c.passed).collect();
        assert!(failed.is_empty(), "{failed:#?}");
        assert!(checks.len() >= 40);
    }

    #[test]
    fn corrupted_table_fails_named_checks() {
        let mut cfg = VerifyConfig::new(2, 2.0);
        cfg.grid_n = 513;
        cfg.samples = 100;
        cfg.corrupt_profile = Some(1.0 + 1e-3);
        let checks = run_suite(&cfg).unwrap();
        let failed: Vec<&str> = checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect();
        assert!(failed.contains(&"lane_emden.pohozaev"), "{failed:?}");
    }

    #[test]
    fn overrides_are_validated_and_applied() {
        let mut cfg = VerifyConfig::new(2, 2.0);
        cfg.tolerances.insert("no.such.check".into(), 1.0);
        assert!(run_suite(&cfg).is_err());
        let mut s = Suite {
            checks: vec![],
            overrides: &BTreeMap::from([("branch.e0".to_string(), 1e-20)]),
        };
        s.below("branch.e0", 1e-12, 1e-8);
        assert!(!s.checks[0].passed);
        assert_eq!(s.checks[0].bound, 1e-20);
    }
}
