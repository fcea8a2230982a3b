//! Dormand–Prince 5(4) with the standard fourth-order continuous extension.
//!
//! The integrator is generic over a fixed-size state. It stops early, with a
//! flagged partial solution, on blow-up, on approaching a forbidden time, or
//! when the step size underflows.

use crate::error::Result;

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];

const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];

/// Difference between the fifth- and fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

pub const DEFAULT_RTOL: f64 = 1e-10;
pub const DEFAULT_ATOL: f64 = 1e-12;
pub const BLOWUP: f64 = 1e8;
pub const SINGULAR_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: Option<f64>,
    pub max_steps: usize,
    /// Any state component above this magnitude stops the run.
    pub blowup: f64,
    /// Times the solution must not approach closer than `margin`.
    pub forbidden: Vec<f64>,
    pub margin: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: DEFAULT_RTOL,
            atol: DEFAULT_ATOL,
            h_init: None,
            h_max: None,
            max_steps: 1_000_000,
            blowup: BLOWUP,
            forbidden: Vec::new(),
            margin: SINGULAR_MARGIN,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Termination {
    Completed,
    BlowUp { t: f64 },
    SingularTime { t: f64, singular: f64 },
    StepUnderflow { t: f64, h: f64 },
    MaxSteps { t: f64 },
}

impl Termination {
    pub fn is_complete(&self) -> bool {
        matches!(self, Termination::Completed)
    }
}

/// One accepted step together with its interpolation coefficients.
#[derive(Clone, Debug)]
pub struct DenseStep<const N: usize> {
    pub t0: f64,
    pub h: f64,
    cont: [[f64; N]; 5],
}

impl<const N: usize> DenseStep<N> {
    pub fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// State at `t0 + theta h`, `theta` in [0, 1].
    pub fn at_theta(&self, theta: f64) -> [f64; N] {
        let s1 = 1.0 - theta;
        let c = &self.cont;
        std::array::from_fn(|i| c[0][i] + theta * (c[1][i] + s1 * (c[2][i] + theta * (c[3][i] + s1 * c[4][i]))))
    }

    /// Time derivative of the interpolant at `t0 + theta h`.
    pub fn derivative_at_theta(&self, theta: f64) -> [f64; N] {
        let s = theta;
        let c = &self.cont;
        std::array::from_fn(|i| {
            // d/ds of c0 + s(c1 + (1-s)(c2 + s(c3 + (1-s)c4)))
            let inner = c[3][i] + (1.0 - s) * c[4][i];
            let d_inner = -c[4][i];
            let mid = c[2][i] + s * inner;
            let d_mid = inner + s * d_inner;
            let outer = c[1][i] + (1.0 - s) * mid;
            let d_outer = -mid + (1.0 - s) * d_mid;
            (outer + s * d_outer) / self.h
        })
    }
}

#[derive(Clone, Debug)]
pub struct Solution<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub steps: Vec<DenseStep<N>>,
    pub termination: Termination,
    pub evaluations: usize,
    pub rejected: usize,
}

impl<const N: usize> Solution<N> {
    pub fn t_last(&self) -> f64 {
        *self.t.last().expect("solution holds the initial point")
    }

    pub fn y_last(&self) -> [f64; N] {
        *self.y.last().expect("solution holds the initial point")
    }

    fn step_containing(&self, t: f64) -> Option<&DenseStep<N>> {
        let (lo, hi) = (self.t[0].min(self.t_last()), self.t[0].max(self.t_last()));
        if !(lo..=hi).contains(&t) || self.steps.is_empty() {
            return None;
        }
        let forward = self.t_last() >= self.t[0];
        let idx = self.steps.partition_point(|s| if forward { s.t1() < t } else { s.t1() > t });
        self.steps.get(idx.min(self.steps.len() - 1))
    }

    /// Dense-output state at `t`, `None` outside the covered interval.
    pub fn eval(&self, t: f64) -> Option<[f64; N]> {
        self.step_containing(t).map(|s| s.at_theta((t - s.t0) / s.h))
    }

    pub fn eval_derivative(&self, t: f64) -> Option<[f64; N]> {
        self.step_containing(t).map(|s| s.derivative_at_theta((t - s.t0) / s.h))
    }
}

fn add_scaled<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(c, k)| c * k[i]).sum::<f64>())
}

fn error_norm<const N: usize>(err: &[f64; N], y0: &[f64; N], y1: &[f64; N], opts: &OdeOptions) -> f64 {
    let sum: f64 = (0..N)
        .map(|i| {
            let sc = opts.atol + opts.rtol * y0[i].abs().max(y1[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / N as f64).sqrt()
}

/// Hairer's starting-step heuristic.
fn initial_step<const N: usize, F>(f: &mut F, t0: f64, y0: &[f64; N], f0: &[f64; N], dir: f64, opts: &OdeOptions) -> Result<f64>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let sc: [f64; N] = std::array::from_fn(|i| opts.atol + opts.rtol * y0[i].abs());
    let rms = |v: &[f64; N]| ((0..N).map(|i| (v[i] / sc[i]).powi(2)).sum::<f64>() / N as f64).sqrt();
    let (d0, d1) = (rms(y0), rms(f0));
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1 = add_scaled(y0, dir * h0, &[(1.0, f0)]);
    let f1 = f(t0 + dir * h0, &y1)?;
    let diff: [f64; N] = std::array::from_fn(|i| f1[i] - f0[i]);
    let d2 = rms(&diff) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    Ok((100.0 * h0).min(h1))
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end` (either direction).
///
/// Errors from `f` abort the run; every other early stop is reported through
/// [`Solution::termination`].
pub fn dopri5<const N: usize, F>(mut f: F, t0: f64, y0: [f64; N], t_end: f64, opts: &OdeOptions) -> Result<Solution<N>>
where
    F: FnMut(f64, &[f64; N]) -> Result<[f64; N]>,
{
    let dir = if t_end >= t0 { 1.0 } else { -1.0 };
    let mut sol = Solution {
        t: vec![t0],
        y: vec![y0],
        steps: Vec::new(),
        termination: Termination::Completed,
        evaluations: 0,
        rejected: 0,
    };

    // Stop short of the first forbidden time on the way.
    let mut target = t_end;
    let mut blocked: Option<f64> = None;
    for &s in &opts.forbidden {
        if (t0 - s).abs() < opts.margin {
            sol.termination = Termination::SingularTime { t: t0, singular: s };
            return Ok(sol);
        }
        let stop = s - dir * opts.margin;
        if dir * (s - t0) > 0.0 && dir * (stop - target) < 0.0 {
            target = stop;
            blocked = Some(s);
        }
    }
    if y0.iter().any(|v| !v.is_finite() || v.abs() > opts.blowup) {
        sol.termination = Termination::BlowUp { t: t0 };
        return Ok(sol);
    }

    let span = (target - t0).abs();
    let h_max = opts.h_max.unwrap_or(span).max(f64::MIN_POSITIVE);
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y)?;
    sol.evaluations += 1;
    let mut h = match opts.h_init {
        Some(h) => h.abs(),
        None => {
            sol.evaluations += 1;
            initial_step(&mut f, t, &y, &k1, dir, opts)?
        }
    }
    .min(h_max);
    let mut facold: f64 = 1e-4;
    let mut last_rejected = false;

    while dir * (target - t) > 0.0 {
        if sol.steps.len() >= opts.max_steps {
            sol.termination = Termination::MaxSteps { t };
            return Ok(sol);
        }
        let remaining = (target - t).abs();
        let mut last = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            sol.termination = Termination::StepUnderflow { t, h };
            return Ok(sol);
        }
        let hs = dir * h;
        let k2 = f(t + C[1] * hs, &add_scaled(&y, hs, &[(A[1][0], &k1)]))?;
        let k3 = f(t + C[2] * hs, &add_scaled(&y, hs, &[(A[2][0], &k1), (A[2][1], &k2)]))?;
        let k4 = f(
            t + C[3] * hs,
            &add_scaled(&y, hs, &[(A[3][0], &k1), (A[3][1], &k2), (A[3][2], &k3)]),
        )?;
        let k5 = f(
            t + C[4] * hs,
            &add_scaled(&y, hs, &[(A[4][0], &k1), (A[4][1], &k2), (A[4][2], &k3), (A[4][3], &k4)]),
        )?;
        let k6 = f(
            t + C[5] * hs,
            &add_scaled(
                &y,
                hs,
                &[(A[5][0], &k1), (A[5][1], &k2), (A[5][2], &k3), (A[5][3], &k4), (A[5][4], &k5)],
            ),
        )?;
        let y_new = add_scaled(
            &y,
            hs,
            &[(A[6][0], &k1), (A[6][2], &k3), (A[6][3], &k4), (A[6][4], &k5), (A[6][5], &k6)],
        );
        let t_new = if last { target } else { t + hs };
        let k7 = f(t_new, &y_new)?;
        sol.evaluations += 6;

        let ks = [&k1, &k2, &k3, &k4, &k5, &k6, &k7];
        let err_vec: [f64; N] = std::array::from_fn(|i| hs * (0..7).map(|s| E[s] * ks[s][i]).sum::<f64>());
        let err = error_norm(&err_vec, &y, &y_new, opts);
        let finite = err.is_finite() && y_new.iter().all(|v| v.is_finite());

        if finite && err <= 1.0 {
            let dy: [f64; N] = std::array::from_fn(|i| y_new[i] - y[i]);
            let c2: [f64; N] = std::array::from_fn(|i| hs * k1[i] - dy[i]);
            let c3: [f64; N] = std::array::from_fn(|i| dy[i] - hs * k7[i] - c2[i]);
            let c4: [f64; N] = std::array::from_fn(|i| hs * (0..7).map(|s| D[s] * ks[s][i]).sum::<f64>());
            sol.steps.push(DenseStep {
                t0: t,
                h: hs,
                cont: [y, dy, c2, c3, c4],
            });
            t = t_new;
            y = y_new;
            k1 = k7;
            sol.t.push(t);
            sol.y.push(y);
            if y.iter().any(|v| v.abs() > opts.blowup) {
                sol.termination = Termination::BlowUp { t };
                return Ok(sol);
            }
            // Lund-stabilized controller.
            let fac = (err.max(1e-10).powf(0.17) / facold.powf(0.04) / 0.9).clamp(0.1, 5.0);
            facold = err.max(1e-4);
            let mut h_next = h / fac;
            if last_rejected {
                h_next = h_next.min(h);
            }
            h = h_next.min(h_max);
            last_rejected = false;
        } else {
            sol.rejected += 1;
            let fac = if finite { (err.powf(0.2) / 0.9).min(5.0) } else { 5.0 };
            h /= fac;
            last_rejected = true;
        }
    }

    if let Some(s) = blocked {
        sol.termination = Termination::SingularTime { t, singular: s };
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_dense_output() {
        let sol = dopri5(|_, y: &[f64; 1]| Ok([y[0]]), 0.0, [1.0], 2.0, &OdeOptions::default()).unwrap();
        assert!(sol.termination.is_complete());
        assert!((sol.y_last()[0] - 2f64.exp()).abs() < 1e-9 * 2f64.exp());
        for &t in &[0.1, 0.77, 1.3, 1.999] {
            let v = sol.eval(t).unwrap()[0];
            assert!((v - t.exp()).abs() < 1e-8, "dense at {t}: {v}");
            let d = sol.eval_derivative(t).unwrap()[0];
            assert!((d - t.exp()).abs() < 1e-6, "derivative at {t}: {d}");
        }
    }

    #[test]
    fn harmonic_oscillator_backwards() {
        let f = |_: f64, y: &[f64; 2]| Ok([y[1], -y[0]]);
        let sol = dopri5(f, 3.0, [3f64.sin(), 3f64.cos()], 0.0, &OdeOptions::default()).unwrap();
        let y = sol.y_last();
        assert!(y[0].abs() < 1e-9 && (y[1] - 1.0).abs() < 1e-9);
        assert!((sol.eval(1.5).unwrap()[0] - 1.5f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn blowup_and_forbidden_times() {
        // y' = y^2, y(0) = 1 blows up at t = 1.
        let sol = dopri5(|_, y: &[f64; 1]| Ok([y[0] * y[0]]), 0.0, [1.0], 2.0, &OdeOptions::default()).unwrap();
        assert!(matches!(sol.termination, Termination::BlowUp { .. } | Termination::StepUnderflow { .. }));
        assert!(sol.t_last() < 1.0);

        let opts = OdeOptions {
            forbidden: vec![1.0],
            ..OdeOptions::default()
        };
        let sol = dopri5(|_, _: &[f64; 1]| Ok([1.0]), 0.0, [0.0], 2.0, &opts).unwrap();
        assert!(matches!(sol.termination, Termination::SingularTime { singular, .. } if singular == 1.0));
        assert!((sol.t_last() - (1.0 - SINGULAR_MARGIN)).abs() < 1e-15);
        let sol = dopri5(|_, _: &[f64; 1]| Ok([1.0]), 1.0 + 1e-7, [0.0], 2.0, &opts).unwrap();
        assert_eq!(sol.t.len(), 1);
    }
}
