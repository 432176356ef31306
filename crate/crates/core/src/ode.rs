//! Adaptive Dormand–Prince 5(4) integrator with continuous output and
//! bisection-located terminal events.

use nalgebra::DVector;

use crate::error::{Error, Result};

pub type State = DVector<f64>;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

// continuous extension (Shampine)
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Event times are located to this absolute precision.
    pub event_tol: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-10,
            atol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 10_000_000,
            event_tol: 1e-12,
        }
    }
}

/// One accepted step with its interpolation coefficients.
#[derive(Clone, Debug)]
struct DenseStep {
    t0: f64,
    h: f64,
    r: [State; 5],
}

impl DenseStep {
    fn eval(&self, t: f64) -> State {
        let s = ((t - self.t0) / self.h).clamp(0.0, 1.0);
        let s1 = 1.0 - s;
        let [r1, r2, r3, r4, r5] = &self.r;
        r1 + (r2 + (r3 + (r4 + r5 * s1) * s) * s1) * s
    }

    fn t1(&self) -> f64 {
        self.t0 + self.h
    }
}

/// Continuous solution on `[t_start, t_end]`.
#[derive(Clone, Debug)]
pub struct DenseSolution {
    steps: Vec<DenseStep>,
    t_start: f64,
    t_end: f64,
    y_end: State,
}

impl DenseSolution {
    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn final_state(&self) -> &State {
        &self.y_end
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Interpolated state; `t` is clamped to the covered interval.
    pub fn eval(&self, t: f64) -> State {
        if t >= self.t_end {
            return self.y_end.clone();
        }
        let t = t.max(self.t_start);
        let idx = self.steps.partition_point(|s| s.t1() < t);
        let idx = idx.min(self.steps.len() - 1);
        self.steps[idx].eval(t)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    /// Integration reached the requested final time.
    Reached,
    /// The event function became non-negative at this time.
    Event(f64),
}

fn scaled_rms(err: &State, y0: &State, y1: &State, opts: &OdeOptions) -> f64 {
    let n = err.len() as f64;
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1.iter()))
        .map(|(e, (a, b))| {
            let sc = opts.atol + opts.rtol * a.abs().max(b.abs());
            (e / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

fn initial_step<F>(rhs: &mut F, t0: f64, y0: &State, f0: &State, opts: &OdeOptions) -> Result<f64>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    let zero = State::zeros(y0.len());
    let d0 = scaled_rms(y0, y0, &zero, opts);
    let d1 = scaled_rms(f0, y0, &zero, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let y1 = y0 + f0 * h0;
    let f1 = rhs(t0 + h0, &y1)?;
    let d2 = scaled_rms(&(f1 - f0), y0, &zero, opts) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / dm).powf(0.2)
    };
    Ok((100.0 * h0).min(h1).min(opts.max_step))
}

type Stages = (State, State, State, State, State, State);

fn attempt_step<F>(rhs: &mut F, t: f64, y: &State, k1: &State, h: f64, t_new: f64) -> Result<Stages>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    let k2 = rhs(t + C2 * h, &(y + k1 * (A21 * h)))?;
    let k3 = rhs(t + C3 * h, &(y + (k1 * A31 + &k2 * A32) * h))?;
    let k4 = rhs(t + C4 * h, &(y + (k1 * A41 + &k2 * A42 + &k3 * A43) * h))?;
    let k5 = rhs(
        t + C5 * h,
        &(y + (k1 * A51 + &k2 * A52 + &k3 * A53 + &k4 * A54) * h),
    )?;
    let k6 = rhs(
        t + h,
        &(y + (k1 * A61 + &k2 * A62 + &k3 * A63 + &k4 * A64 + &k5 * A65) * h),
    )?;
    let y_new = y + (k1 * A71 + &k3 * A73 + &k4 * A74 + &k5 * A75 + &k6 * A76) * h;
    let k7 = rhs(t_new, &y_new)?;
    Ok((k3, k4, k5, k6, y_new, k7))
}

/// Integrates `y' = rhs(t, y)` from `t0` to `t_max`.
///
/// With an event function, integration stops at the first time where
/// `event(t, y) ≥ 0`; that time is located by bisection on the continuous
/// extension and the returned solution ends there.
///
/// A right-hand side returning [`Error::Singularity`] rejects the current
/// step, which is retried with a quarter of the size.
pub fn integrate<F, G>(
    mut rhs: F,
    t0: f64,
    y0: State,
    t_max: f64,
    opts: &OdeOptions,
    event: Option<G>,
) -> Result<(DenseSolution, Termination)>
where
    F: FnMut(f64, &State) -> Result<State>,
    G: Fn(f64, &State) -> f64,
{
    if !(t_max > t0) {
        return Err(Error::domain(format!("empty interval [{t0}, {t_max}]")));
    }
    let mut t = t0;
    let mut y = y0;
    let mut k1 = rhs(t, &y)?;
    let mut h = initial_step(&mut rhs, t, &y, &k1, opts)?;
    let mut steps = Vec::new();
    let mut rejected_last = false;

    for _ in 0..opts.max_steps {
        let remaining = t_max - t;
        let floor = 1e-14 * t.abs().max(1.0);
        let last = h + floor >= remaining;
        if last {
            h = remaining;
        }
        if h < floor && !last {
            return Err(Error::Integration {
                t,
                reason: format!("step size underflow (h = {h:e})"),
            });
        }

        let stages = attempt_step(&mut rhs, t, &y, &k1, h, if last { t_max } else { t + h });
        let (k3, k4, k5, k6, y_new, k7) = match stages {
            Ok(s) => s,
            Err(Error::Singularity { .. }) => {
                h *= 0.25;
                rejected_last = true;
                continue;
            }
            Err(e) => return Err(e),
        };
        let t_new = if last { t_max } else { t + h };
        let err_vec = (&k1 * E1 + &k3 * E3 + &k4 * E4 + &k5 * E5 + &k6 * E6 + &k7 * E7) * h;
        let err = scaled_rms(&err_vec, &y, &y_new, opts);
        if !err.is_finite() {
            return Err(Error::Integration {
                t,
                reason: "non-finite error estimate".into(),
            });
        }

        if err > 1.0 {
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h *= fac;
            rejected_last = true;
            continue;
        }

        let r2 = &y_new - &y;
        let r3 = &k1 * h - &r2;
        let r4 = &r2 - &k7 * h - &r3;
        let r5 = (&k1 * D1 + &k3 * D3 + &k4 * D4 + &k5 * D5 + &k6 * D6 + &k7 * D7) * h;
        let step = DenseStep {
            t0: t,
            h: t_new - t,
            r: [y.clone(), r2, r3, r4, r5],
        };

        if let Some(g) = &event {
            if g(t_new, &y_new) >= 0.0 {
                let (mut lo, mut hi) = (t, t_new);
                while hi - lo > opts.event_tol {
                    let mid = 0.5 * (lo + hi);
                    if g(mid, &step.eval(mid)) >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let y_event = step.eval(hi);
                steps.push(step);
                let sol = DenseSolution {
                    steps,
                    t_start: t0,
                    t_end: hi,
                    y_end: y_event,
                };
                return Ok((sol, Termination::Event(hi)));
            }
        }

        steps.push(step);
        t = t_new;
        y = y_new;
        k1 = k7;

        if last {
            let sol = DenseSolution {
                steps,
                t_start: t0,
                t_end: t,
                y_end: y,
            };
            return Ok((sol, Termination::Reached));
        }

        let mut fac = 0.9 * err.max(1e-10).powf(-0.2);
        fac = fac.clamp(0.2, 10.0);
        if rejected_last {
            fac = fac.min(1.0);
        }
        rejected_last = false;
        h = (h * fac).min(opts.max_step);
    }

    Err(Error::Integration {
        t,
        reason: format!("exceeded {} steps", opts.max_steps),
    })
}

/// Integration without an event function.
pub fn integrate_plain<F>(
    rhs: F,
    t0: f64,
    y0: State,
    t_max: f64,
    opts: &OdeOptions,
) -> Result<DenseSolution>
where
    F: FnMut(f64, &State) -> Result<State>,
{
    integrate(rhs, t0, y0, t_max, opts, None::<fn(f64, &State) -> f64>).map(|(s, _)| s)
}
