//! The ten acceptance criteria. Each test writes one `PASS`/`FAIL` line to
//! stderr (bypassing the test harness capture) and then asserts.

use std::f64::consts::PI;
use std::io::Write;
use std::time::{Duration, Instant};

use plasma_branch::ball_branch::BallBranch;
use plasma_branch::gelfand::{bell_curve, to_gelfand};
use plasma_branch::radial_core::{make_grid, RadialGrid};
use plasma_branch::solver::{
    continue_branch, derivative_fields, entropy_identity_defect, solve_plasma, SolverSolution,
};
use plasma_branch::spectral::{
    eigen_l, energy_inequality_slack, fourier_relation_defect, sobolev_lambda_with, thresholds,
};
use plasma_branch::{critical_exponent, DEFAULT_GRID_N};

const PAIRS: [(usize, f64); 6] = [(2, 1.5), (2, 2.0), (2, 3.0), (3, 1.5), (3, 2.0), (4, 1.5)];

fn report(id: u32, title: &str, ok: bool, detail: &str, elapsed: Duration, budget: Duration) {
    let timed = elapsed <= budget;
    let verdict = if ok && timed { "PASS" } else { "FAIL" };
    let line = format!(
        "{verdict} criterion {id:2} {title}: {detail} [{:.1}s of {:.0}s]\n",
        elapsed.as_secs_f64(),
        budget.as_secs_f64()
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    assert!(ok, "criterion {id} failed: {detail}");
    assert!(timed, "criterion {id} over its time budget");
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn branch(dim: usize, p: f64) -> BallBranch {
    BallBranch::build(dim, p, DEFAULT_GRID_N).unwrap()
}

fn grid(b: &BallBranch, n: usize) -> RadialGrid {
    make_grid(b.dim(), b.geom.radius, n).unwrap()
}

/// 11 positive-regime slices of a sweep to `0.99 λ₊`.
fn positive_slices(b: &BallBranch, g: &RadialGrid) -> Vec<SolverSolution> {
    let sweep = continue_branch(&b.geom, b.exponent(), 0.99 * b.lambda_plus(), 110, g).unwrap();
    sweep.into_iter().skip(10).step_by(10).collect()
}

#[test]
fn criterion_01_endpoint_energies() {
    let t = Instant::now();
    let (mut e0, mut einf) = (0.0_f64, 0.0_f64);
    let mut slowest = Duration::ZERO;
    for p in [1.5, 2.0, 3.0] {
        let tp = Instant::now();
        let b = branch(2, p);
        e0 = e0.max((b.energy_of(0.0).unwrap() - 1.0 / (16.0 * PI)).abs());
        einf = einf.max((b.energy_of(b.lambda_plus()).unwrap() - (p + 1.0) / (16.0 * PI)).abs());
        slowest = slowest.max(tp.elapsed());
    }
    let ok = e0 <= 1e-8 && einf <= 1e-6 && slowest <= Duration::from_secs(10);
    let detail = format!(
        "|E0 - 1/16pi| = {e0:.2e}, |E_inf - (p+1)/16pi| = {einf:.2e}, slowest p {slowest:.1?}"
    );
    report(
        1,
        "endpoint energies",
        ok,
        &detail,
        t.elapsed(),
        Duration::from_secs(30),
    );
}

#[test]
fn criterion_02_lambda_plus() {
    let t = Instant::now();
    let (mut planar, mut alpha) = (0.0_f64, 0.0_f64);
    for dim in [2, 3, 4] {
        for p in [1.5, 2.0] {
            if p >= critical_exponent(dim) {
                continue;
            }
            let b = branch(dim, p);
            let lp = b.lambda_plus();
            if let Some(pl) = b.lambda_plus_planar() {
                planar = planar.max(rel(lp, pl));
            }
            alpha = alpha.max(b.gamma_alpha_mu(lp).unwrap().1.abs());
        }
    }
    let ok = planar <= 1e-12 && alpha <= 1e-9;
    let detail = format!("planar rel {planar:.2e}, max |alpha(lambda_+)| {alpha:.2e}");
    report(
        2,
        "lambda_+ consistency",
        ok,
        &detail,
        t.elapsed(),
        Duration::from_secs(30),
    );
}

/// Max relative `(α, E)` mismatch of 21 solver slices against the closed forms.
fn oracle(b: &BallBranch, n: usize) -> (f64, f64) {
    let sweep = continue_branch(
        &b.geom,
        b.exponent(),
        0.99 * b.lambda_plus(),
        100,
        &grid(b, n),
    )
    .unwrap();
    sweep
        .iter()
        .step_by(5)
        .fold((0.0_f64, 0.0_f64), |(ea, ee), s| {
            let pt = b.point(s.lambda).unwrap();
            (
                ea.max(rel(s.alpha, pt.alpha)),
                ee.max(rel(s.energy, pt.energy)),
            )
        })
}

#[test]
fn criterion_03_oracle_equivalence() {
    let t = Instant::now();
    let n = DEFAULT_GRID_N;
    let (mut worst, mut ratio_lo, mut ratio_hi) = (0.0_f64, f64::INFINITY, 0.0_f64);
    for (dim, p) in PAIRS {
        let b = branch(dim, p);
        let (a1, e1) = oracle(&b, n);
        let (a2, e2) = oracle(&b, 2 * n - 1);
        // the tolerance is met on the fourfold solver grid
        let (a4, e4) = oracle(&b, 4 * n - 3);
        worst = worst.max(a4).max(e4);
        for r in [a1 / a2, e1 / e2] {
            ratio_lo = ratio_lo.min(r);
            ratio_hi = ratio_hi.max(r);
        }
    }
    let ok = worst <= 5e-6 && ratio_lo >= 3.5 && ratio_hi <= 4.5;
    let detail = format!(
        "max rel mismatch {worst:.2e} on {} nodes, doubling ratios in [{ratio_lo:.3}, {ratio_hi:.3}]",
        4 * n - 3
    );
    report(
        3,
        "oracle equivalence",
        ok,
        &detail,
        t.elapsed(),
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_04_monotonicity() {
    let t = Instant::now();
    let mut faults = Vec::new();
    for (dim, p) in PAIRS {
        let b = branch(dim, p);
        let lp = b.lambda_plus();
        let below: Vec<f64> = (0..400).map(|i| lp * i as f64 / 400.0).collect();
        let above: Vec<f64> = (1..=400)
            .map(|i| lp * (1.0 + 2.0 * i as f64 / 400.0))
            .collect();
        let pb = b.points(&below).unwrap();
        let pa = b.points(&above).unwrap();
        if !pb
            .windows(2)
            .all(|w| w[1].alpha < w[0].alpha && w[1].energy > w[0].energy)
        {
            faults.push(format!("({dim},{p}) below lambda_+"));
        }
        if !pa.windows(2).all(|w| w[1].alpha < w[0].alpha) {
            faults.push(format!("({dim},{p}) above lambda_+"));
        }
        match bell_curve(&b, 200) {
            Ok(c) => {
                let dmu: Vec<f64> = c.rows.windows(2).map(|w| w[1].mu - w[0].mu).collect();
                let k = dmu
                    .windows(2)
                    .position(|w| w[0] > 0.0 && w[1] < 0.0)
                    .unwrap();
                let (lo, hi) = (c.rows[k].lambda, c.rows[k + 2].lambda);
                let lt = c.turning.lambda_t;
                if !(lo <= lt && lt <= hi) {
                    faults.push(format!("({dim},{p}) lambda_t {lt} outside [{lo}, {hi}]"));
                }
            }
            Err(e) => faults.push(format!("({dim},{p}) {e}")),
        }
    }
    let detail = if faults.is_empty() {
        "alpha down, E up, one bend at lambda_t for all six (N, p)".to_string()
    } else {
        faults.join("; ")
    };
    report(
        4,
        "monotonicity",
        faults.is_empty(),
        &detail,
        t.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_05_derivative_identities() {
    let t = Instant::now();
    let (mut dalpha_err, mut de, mut ent, mut fd) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);
    for (dim, p) in PAIRS {
        let b = branch(dim, p);
        let g = grid(&b, DEFAULT_GRID_N);
        for s in positive_slices(&b, &g) {
            let f = derivative_fields(&s).unwrap();
            dalpha_err = dalpha_err.max((f.dalpha + f.mean_w).abs());
            de = de.max(rel(f.d_energy, f.rho_eta));
            ent = ent.max(entropy_identity_defect(&s, &f).unwrap());
            let d = 1e-4;
            let init = Some((s.alpha, s.psi.values.as_slice()));
            let lo = solve_plasma(&b.geom, p, s.lambda - d, &g, init).unwrap();
            let hi = solve_plasma(&b.geom, p, s.lambda + d, &g, init).unwrap();
            fd = fd
                .max(rel((hi.alpha - lo.alpha) / (2.0 * d), f.dalpha))
                .max(rel((hi.energy - lo.energy) / (2.0 * d), f.d_energy));
        }
    }
    let ok = dalpha_err <= 1e-8 && de <= 1e-7 && ent <= 1e-6 && fd <= 1e-6;
    let detail = format!("dalpha_err {dalpha_err:.2e}, dE rel {de:.2e}, entropy {ent:.2e}, finite differences rel {fd:.2e}");
    report(
        5,
        "derivative identities",
        ok,
        &detail,
        t.elapsed(),
        Duration::from_secs(120),
    );
}

#[test]
fn criterion_06_spectral_suite() {
    let t = Instant::now();
    let mut m = [
        f64::INFINITY,
        f64::INFINITY,
        f64::INFINITY,
        0.0,
        0.0,
        f64::INFINITY,
    ];
    for (dim, p) in [(2usize, 2.0), (3, 2.0)] {
        let b = branch(dim, p);
        let g = grid(&b, DEFAULT_GRID_N);
        let l2p = sobolev_lambda_with(&b.geom, 2.0 * p, DEFAULT_GRID_N).unwrap();
        let sweep = continue_branch(&b.geom, p, 0.995 * b.lambda_plus(), 110, &g).unwrap();
        for s in sweep.iter().step_by(11) {
            let r = eigen_l(&b.geom, s, 2).unwrap();
            m[0] = m[0].min(r.sigma1);
            m[1] = m[1].min(r.sigma1 - r.nu1);
            m[2] = m[2].min(r.nu1 - (l2p - s.lambda * p));
            if s.lambda > 0.0 {
                m[3] = f64::max(m[3], rel(r.tau * (1.0 / r.mu1 - 1.0), r.sigma1));
                let f = derivative_fields(s).unwrap();
                for j in 1..=2 {
                    m[4] = f64::max(m[4], fourier_relation_defect(&r, s, &f, j).unwrap());
                }
                m[5] = m[5].min(energy_inequality_slack(&r, s, &f));
            }
        }
    }
    let ok =
        m[0] > 0.0 && m[1] > 0.0 && m[2] > 0.0 && m[3] <= 1e-8 && m[4] <= 1e-6 && m[5] >= -1e-8;
    let detail = format!(
        "min sigma1 {:.3}, min sigma1-nu1 {:.3}, min nu1-(Lambda(2p)-lambda p) {:.3}, sigma-mu relation {:.1e}, fourier {:.1e}, slack {:.1e}",
        m[0], m[1], m[2], m[3], m[4], m[5]
    );
    report(
        6,
        "spectral suite",
        ok,
        &detail,
        t.elapsed(),
        Duration::from_secs(300),
    );
}

#[test]
fn criterion_07_lambda1_equals_lambda_plus() {
    let t = Instant::now();
    let mut worst = 0.0_f64;
    for p in [1.5, 2.0, 3.0] {
        let b = branch(2, p);
        let l1 = thresholds(&b.geom, p).unwrap().lambda1.unwrap();
        worst = worst.max(rel(l1, b.lambda_plus()));
    }
    report(
        7,
        "lambda1 equals lambda_plus on the disk",
        worst <= 1e-5,
        &format!("max rel |lambda1 - lambda_+| {worst:.2e}"),
        t.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_08_script_i_regularity() {
    let t = Instant::now();
    let (mut worst_fd, mut o1, mut o2) = (0.0_f64, f64::INFINITY, f64::INFINITY);
    let mut ok = true;
    for (dim, p) in PAIRS {
        let b = branch(dim, p);
        let r = b.geom.radius;
        let i = |x: f64| b.script_i(x).unwrap();
        let mismatch = |h: f64| {
            let d1 = (i(r + h) - i(r)) / h - (i(r) - i(r - h)) / h;
            let d2 = (i(r + 2.0 * h) - 2.0 * i(r + h) + i(r)) / (h * h)
                - (i(r) - 2.0 * i(r - h) + i(r - 2.0 * h)) / (h * h);
            (d1.abs(), d2.abs())
        };
        let m: Vec<(f64, f64)> = [1e-3, 1e-4, 1e-5].into_iter().map(mismatch).collect();
        // 𝓘'' is only Hölder of order p - 1 from outside when p < 2
        let expect2 = 0.9 * (p - 1.0).min(1.0);
        for w in m.windows(2) {
            let (a, b2) = ((w[0].0 / w[1].0).log10(), (w[0].1 / w[1].1).log10());
            ok &= a >= 0.9 && b2 >= expect2;
            o1 = o1.min(a);
            o2 = o2.min(b2 / (p - 1.0).min(1.0));
        }
        for k in -12..=12 {
            let x = r * 1.5f64.powi(k);
            let h = 1e-5 * x;
            let fd = (i(x + h) - i(x - h)) / (2.0 * h);
            worst_fd = worst_fd.max(rel(fd, b.script_i_prime(x).unwrap()));
        }
    }
    ok &= worst_fd <= 1e-6;
    let detail = format!(
        "one-sided mismatch orders over h in {{1e-3,1e-4,1e-5}}: first >= {o1:.2}, second >= {o2:.2} x min(1, p-1); centered I' rel {worst_fd:.2e}"
    );
    report(
        8,
        "I-map regularity",
        ok,
        &detail,
        t.elapsed(),
        Duration::from_secs(10),
    );
}

#[test]
fn criterion_09_free_boundary() {
    let t = Instant::now();
    let (mut cells, mut closed) = (0.0_f64, 0.0_f64);
    for (dim, p) in PAIRS {
        let b = branch(dim, p);
        let lam = 1.5 * b.lambda_plus();
        let g = grid(&b, DEFAULT_GRID_N);
        let sweep = continue_branch(&b.geom, p, lam, 150, &g).unwrap();
        let s = sweep.last().unwrap();
        let r = b.r_of_lambda(lam).unwrap();
        cells = cells.max(
            s.free_radius()
                .map_or(f64::INFINITY, |fr| (fr - r).abs() / g.h),
        );
        for f in [1.5, 2.0, 3.0] {
            let l = f * b.lambda_plus();
            closed = closed.max(rel(
                b.alpha_free_closed_form(l).unwrap(),
                b.gamma_alpha_mu(l).unwrap().1,
            ));
        }
    }
    let ok = cells <= 2.0 && closed <= 1e-6;
    let detail = format!("free radius off by {cells:.2} cells, closed-form alpha rel {closed:.2e}");
    report(
        9,
        "free-boundary regime",
        ok,
        &detail,
        t.elapsed(),
        Duration::from_secs(60),
    );
}

#[test]
fn criterion_10_gelfand_residuals() {
    let t = Instant::now();
    let (mut res, mut en) = (0.0_f64, 0.0_f64);
    for (dim, p) in PAIRS {
        let b = branch(dim, p);
        for k in 1..=11 {
            let g = to_gelfand(&b, b.lambda_plus() * k as f64 / 12.0).unwrap();
            res = res.max(g.residual / (1.0 + g.v_max).powf(p));
            en = en.max(rel(g.energy_gelfand, g.energy));
        }
    }
    let ok = res <= 1e-6 && en <= 1e-7;
    let detail = format!("scaled residual {res:.2e}, energy rel {en:.2e}");
    report(
        10,
        "Gelfand residuals",
        ok,
        &detail,
        t.elapsed(),
        Duration::from_secs(60),
    );
}
