//! Map from the plasma branch to the Gelfand problem `-Δv = μ(1 + v)^p`:
//! `v = (λ/α)ψ`, `μ = λα^{p-1}`, and the bell curve `λ ↦ (μ_λ, E_λ)`.

use serde::Serialize;

use crate::ball_branch::{BallBranch, Regime};
use crate::error::{Error, Result};
use crate::radial_core::{ball_integral, laplacian_residual, RadialField};

#[derive(Debug, Clone, Serialize)]
pub struct GelfandPoint {
    pub lambda: f64,
    pub mu: f64,
    pub v: RadialField,
    pub energy: f64,
    /// `½(α/λ)² μ ∫(1 + v)^p v`.
    pub energy_gelfand: f64,
    pub v_max: f64,
    /// Fourth-order residual of `-Δv - μ(1 + v)^p` at interior nodes.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BellRow {
    pub lambda: f64,
    pub mu: f64,
    #[serde(rename = "E")]
    pub energy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TurningRecord {
    pub lambda_t: f64,
    pub mu_t: f64,
    #[serde(rename = "E_at_lambda_t")]
    pub energy_t: f64,
    #[serde(rename = "E0")]
    pub e0: f64,
    #[serde(rename = "E_inf")]
    pub e_inf: f64,
    pub lambda_plus: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BellCurve {
    pub rows: Vec<BellRow>,
    pub turning: TurningRecord,
    /// `‖v‖_∞` at the two largest sampled `λ < λ₊`.
    pub v_max_tail: [(f64, f64); 2],
}

/// Gelfand solution at `0 < λ < λ₊`.
pub fn to_gelfand(branch: &BallBranch, lambda: f64) -> Result<GelfandPoint> {
    let lp = branch.lambda_plus();
    if !(lambda > 0.0 && lambda < lp) || branch.regime(lambda) != Regime::Positive {
        return Err(Error::InvalidInput(format!(
            "lambda {lambda} outside (0, {lp})"
        )));
    }
    let grid = branch.ball_grid()?;
    let prof = branch.profile(lambda, &grid)?;
    let alpha = prof.alpha;
    if !(alpha > 0.0) {
        return Err(Error::Regime(format!("alpha = {alpha} is not positive")));
    }
    let p = branch.exponent();
    let mu = lambda * alpha.powf(p - 1.0);
    let v: Vec<f64> = prof.psi.values.iter().map(|s| lambda / alpha * s).collect();
    let source: Vec<f64> = v.iter().map(|x| mu * (1.0 + x).powf(p)).collect();
    let residual = laplacian_residual(&grid, &v, &source);
    let integrand: Vec<f64> = v.iter().map(|x| (1.0 + x).powf(p) * x).collect();
    let energy_gelfand = 0.5 * (alpha / lambda).powi(2) * mu * ball_integral(&grid, &integrand)?;
    let rp: Vec<f64> = prof
        .rho
        .iter()
        .zip(&prof.psi.values)
        .map(|(r, s)| r * s)
        .collect();
    let energy = 0.5 * ball_integral(&grid, &rp)?;
    let v = RadialField::new(grid, v)?;
    Ok(GelfandPoint {
        lambda,
        mu,
        v_max: v.max_abs(),
        v,
        energy,
        energy_gelfand,
        residual,
    })
}

/// `samples` values of `λ` on `[0, factor·λ₊]`: uniform, with ten extra
/// points `λ₊(1 - 0.02·2^{-k})` once `samples ≥ 20`.
pub fn lambda_grid(lambda_plus: f64, factor: f64, samples: usize) -> Result<Vec<f64>> {
    if samples < 2 || !(factor > 0.0 && factor.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "need samples >= 2 and a positive factor (got {samples}, {factor})"
        )));
    }
    let refine = if samples >= 20 { 10 } else { 0 };
    let top = factor * lambda_plus;
    let extra: Vec<f64> = (0..refine)
        .map(|k| lambda_plus * (1.0 - 0.02 * 0.5f64.powi(k)))
        .filter(|l| *l < top)
        .collect();
    let uniform = samples - extra.len();
    let mut out: Vec<f64> = (0..uniform)
        .map(|i| top * i as f64 / (uniform - 1) as f64)
        .chain(extra)
        .collect();
    out.sort_by(f64::total_cmp);
    out.dedup();
    Ok(out)
}

/// The curve `(μ_λ, E_λ)` on `[0, λ₊]` with its turning data.
///
/// Fails if `μ` does not rise then fall with a single sign change of its
/// consecutive differences, or if `E` is not strictly increasing.
pub fn bell_curve(branch: &BallBranch, samples: usize) -> Result<BellCurve> {
    if samples < 100 {
        return Err(Error::InvalidInput(format!(
            "bell curve needs >= 100 samples, got {samples}"
        )));
    }
    let lp = branch.lambda_plus();
    let mut lambdas = lambda_grid(lp, 1.0, samples)?;
    if let Some(last) = lambdas.last_mut() {
        *last = lp;
    }
    let points = branch.points(&lambdas)?;
    let rows: Vec<BellRow> = points
        .iter()
        .map(|pt| BellRow {
            lambda: pt.lambda,
            mu: pt.mu.unwrap_or(0.0),
            energy: pt.energy,
        })
        .collect();
    check_single_bend(&rows)?;

    let lambda_t = branch.lambda_turn()?;
    let tp = branch.point(lambda_t)?;
    let turning = TurningRecord {
        lambda_t,
        mu_t: tp.mu.unwrap_or(0.0),
        energy_t: tp.energy,
        e0: rows[0].energy,
        e_inf: rows[rows.len() - 1].energy,
        lambda_plus: lp,
    };
    let k = rows.len();
    let tail = |i: usize| to_gelfand(branch, rows[i].lambda).map(|g| (g.lambda, g.v_max));
    Ok(BellCurve {
        v_max_tail: [tail(k - 3)?, tail(k - 2)?],
        rows,
        turning,
    })
}

/// Exactly one sign change (`+` to `-`) in `Δμ`, and `ΔE > 0` throughout.
pub fn check_single_bend(rows: &[BellRow]) -> Result<()> {
    let dmu: Vec<f64> = rows.windows(2).map(|w| w[1].mu - w[0].mu).collect();
    if let Some(i) = rows.windows(2).position(|w| !(w[1].energy > w[0].energy)) {
        return Err(Error::Monotonicity(format!(
            "E not increasing between lambda = {} and {}",
            rows[i].lambda,
            rows[i + 1].lambda
        )));
    }
    if dmu.iter().any(|d| *d == 0.0) {
        return Err(Error::Monotonicity("mu stalls between samples".into()));
    }
    let changes = dmu
        .windows(2)
        .filter(|w| (w[0] > 0.0) != (w[1] > 0.0))
        .count();
    if changes != 1 || dmu[0] < 0.0 {
        return Err(Error::Monotonicity(format!(
            "mu differences change sign {changes} times (expected one rise-then-fall)"
        )));
    }
    Ok(())
}
