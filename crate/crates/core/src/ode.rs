//! Deterministic explicit Runge-Kutta integrators over complex ndarray
//! states: classical fixed-step RK4 and an adaptive Dormand-Prince 5(4)
//! embedded pair.
//!
//! Both integrators are plain f64 arithmetic in a fixed evaluation order, so
//! identical inputs produce bit-identical results.

use ndarray::{Array, Dimension};
use thiserror::Error;

use crate::linalg::C64;

#[derive(Debug, Error, PartialEq)]
pub enum OdeError {
    #[error(
        "step size underflow at t = {t}: the problem appears stiffer than the tolerance allows"
    )]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted after {0} steps")]
    TooManySteps(usize),
}

/// Statistics of one integration segment.
#[derive(Clone, Copy, Debug, Default)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Classical RK4 with `steps` equal steps from `t0` to `t1`.
pub fn rk4_fixed<D, F>(
    mut rhs: F,
    y0: &Array<C64, D>,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Array<C64, D>
where
    D: Dimension,
    F: FnMut(f64, &Array<C64, D>) -> Array<C64, D>,
{
    let steps = steps.max(1);
    let dt = (t1 - t0) / steps as f64;
    let half = C64::new(dt / 2.0, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let two = C64::new(2.0, 0.0);
    let mut y = y0.clone();
    for k in 0..steps {
        let t = t0 + k as f64 * dt;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + dt / 2.0, &(&y + &k1.mapv(|z| z * half)));
        let k3 = rhs(t + dt / 2.0, &(&y + &k2.mapv(|z| z * half)));
        let k4 = rhs(t + dt, &(&y + &k3.mapv(|z| z * full)));
        let incr = (k1 + k2.mapv(|z| z * two) + k3.mapv(|z| z * two) + k4).mapv(|z| z * sixth);
        y = y + incr;
    }
    y
}

// Dormand-Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
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
// 5th-order solution weights (row 7 of A) and the 5th-minus-4th error weights.
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const MAX_STEPS: usize = 50_000_000;

/// Adaptive Dormand-Prince 5(4) from `t0` to `t1` with scalar tolerance
/// `tol` (used as both absolute and relative). Returns the final state, the
/// suggested next step size, and stats.
pub fn dp54_adaptive<D, F>(
    rhs: &mut F,
    y0: &Array<C64, D>,
    t0: f64,
    t1: f64,
    tol: f64,
    dt_init: f64,
) -> Result<(Array<C64, D>, f64, StepStats), OdeError>
where
    D: Dimension,
    F: FnMut(f64, &Array<C64, D>) -> Array<C64, D>,
{
    let span = t1 - t0;
    let mut y = y0.clone();
    let mut t = t0;
    let mut dt = dt_init.min(span).max(span * 1e-12);
    let mut stats = StepStats::default();
    let dt_floor = span * 1e-14;

    while t < t1 {
        if stats.accepted + stats.rejected > MAX_STEPS {
            return Err(OdeError::TooManySteps(MAX_STEPS));
        }
        if dt > t1 - t {
            dt = t1 - t;
        }
        let mut k: Vec<Array<C64, D>> = Vec::with_capacity(7);
        k.push(rhs(t, &y));
        for stage in 1..7 {
            let mut arg = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let c = DP_A[stage][j];
                if c != 0.0 {
                    let w = C64::new(dt * c, 0.0);
                    arg.zip_mut_with(kj, |a, b| *a += w * b);
                }
            }
            k.push(rhs(t + DP_C[stage] * dt, &arg));
        }

        let mut y_new = y.clone();
        for (j, kj) in k.iter().enumerate() {
            if DP_B5[j] != 0.0 {
                let w = C64::new(dt * DP_B5[j], 0.0);
                y_new.zip_mut_with(kj, |a, b| *a += w * b);
            }
        }

        // max-norm of the embedded error estimate, scaled by tol*(1 + |y|)
        let mut err: f64 = 0.0;
        {
            let mut e = Array::<C64, D>::zeros(y.raw_dim());
            for (j, kj) in k.iter().enumerate() {
                if DP_E[j] != 0.0 {
                    let w = C64::new(dt * DP_E[j], 0.0);
                    e.zip_mut_with(kj, |a, b| *a += w * b);
                }
            }
            for ((ei, yi), yni) in e.iter().zip(y.iter()).zip(y_new.iter()) {
                let scale = tol * (1.0 + yi.norm().max(yni.norm()));
                err = err.max(ei.norm() / scale);
            }
        }

        if err <= 1.0 {
            t += dt;
            y = y_new;
            stats.accepted += 1;
        } else {
            stats.rejected += 1;
        }
        let factor = if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        dt *= factor;
        if dt < dt_floor && t < t1 {
            return Err(OdeError::StepUnderflow { t });
        }
    }
    Ok((y, dt, stats))
}
