//! Dormand-Prince 5(4) for the normalized Lane-Emden system.

use crate::error::{Error, Result};
use crate::radial_core::find_root_newton;

pub(crate) struct LaneEmdenRhs {
    pub dim: usize,
    pub p: f64,
}

impl LaneEmdenRhs {
    fn eval(&self, x: f64, y: [f64; 2]) -> [f64; 2] {
        let [w, dw] = y;
        [
            dw,
            -w.max(0.0).powf(self.p) - (self.dim as f64 - 1.0) / x * dw,
        ]
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One step; returns the fifth-order state and the embedded error estimate.
fn step(rhs: &LaneEmdenRhs, x: f64, y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    let mut k = [[0.0; 2]; 7];
    k[0] = rhs.eval(x, y);
    for s in 1..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = rhs.eval(x + C[s] * h, ys);
    }
    let mut y5 = y;
    let mut err = [0.0; 2];
    for s in 0..7 {
        let b = if s < 6 { A[6][s] } else { 0.0 };
        y5[0] += h * b * k[s][0];
        y5[1] += h * b * k[s][1];
        err[0] += h * E[s] * k[s][0];
        err[1] += h * E[s] * k[s][1];
    }
    (y5, err)
}

fn error_norm(y: [f64; 2], y5: [f64; 2], err: [f64; 2], tol: f64) -> f64 {
    (0..2)
        .map(|i| err[i].abs() / (tol + tol * y[i].abs().max(y5[i].abs())))
        .fold(0.0, f64::max)
}

/// Adaptive stepping from `x` towards `target`. The callback sees each
/// accepted step `(x_old, y_old, h, y_new)` and may stop the march by
/// returning `true`.
fn march<F>(
    rhs: &LaneEmdenRhs,
    mut x: f64,
    mut y: [f64; 2],
    target: f64,
    h0: f64,
    tol: f64,
    mut on_step: F,
) -> Result<([f64; 2], f64, f64)>
where
    F: FnMut(f64, [f64; 2], f64, [f64; 2]) -> bool,
{
    let mut h = h0.min(target - x);
    let mut guard = 0usize;
    while x < target {
        guard += 1;
        if guard > 10_000_000 {
            return Err(Error::InvalidInput(
                "integrator step budget exhausted".into(),
            ));
        }
        let last = h >= target - x;
        let hs = if last { target - x } else { h };
        let (y5, err) = step(rhs, x, y, hs);
        let e = error_norm(y, y5, err, tol);
        if !e.is_finite() {
            h *= 0.2;
            continue;
        }
        if e <= 1.0 {
            let x_new = if last { target } else { x + hs };
            if on_step(x, y, hs, y5) {
                return Ok((y5, x_new, h));
            }
            x = x_new;
            y = y5;
        }
        let fac = if e == 0.0 {
            5.0
        } else {
            (0.9 * e.powf(-0.2)).clamp(0.2, 5.0)
        };
        if !last || e > 1.0 {
            h = hs * fac;
        }
        if h < 1e-15 * x.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "step size underflow at x = {x}"
            )));
        }
    }
    Ok((y, x, h))
}

/// First zero of `w` starting from the seed `(w, w')` at `x0`.
pub(crate) fn first_zero(
    rhs: &LaneEmdenRhs,
    x0: f64,
    y0: [f64; 2],
    tol: f64,
    cap: f64,
) -> Result<f64> {
    let mut crossing = None;
    march(rhs, x0, y0, cap, 1e-3, tol, |xa, ya, h, yb| {
        if yb[0] <= 0.0 {
            crossing = Some((xa, ya, h));
            true
        } else {
            false
        }
    })?;
    let (xa, ya, h) = crossing.ok_or(Error::NoFirstZero(cap))?;
    // re-step from the last positive state with a variable step length
    let w_at = |s: f64| step(rhs, xa, ya, s).0[0];
    let dw_at = |s: f64| step(rhs, xa, ya, s).0[1];
    let s = find_root_newton(w_at, dw_at, 0.0, h, 1e-16 * (xa + h))?;
    Ok(xa + s)
}

/// States at each of the increasing `targets`; entries at or below `x0`
/// are left as zeros for the caller to fill.
pub(crate) fn sample_at(
    rhs: &LaneEmdenRhs,
    x0: f64,
    y0: [f64; 2],
    targets: &[f64],
    tol: f64,
) -> Result<Vec<[f64; 2]>> {
    let mut out = vec![[0.0; 2]; targets.len()];
    let (mut x, mut y, mut h) = (x0, y0, 1e-3);
    for (i, &t) in targets.iter().enumerate() {
        if t <= x {
            continue;
        }
        let (yn, xn, hn) = march(rhs, x, y, t, h, tol, |_, _, _, _| false)?;
        out[i] = yn;
        x = xn;
        y = yn;
        h = hn;
    }
    Ok(out)
}
