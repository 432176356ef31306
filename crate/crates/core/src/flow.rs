//! Integration of `Ȧ = A·X^G(t, λ)` on SO(3).
//!
//! The primary path integrates exponential coordinates `Z` with
//! `Ż = dexpinv(Z)·X^G`, restarting from `Z = 0` whenever `|Z|` reaches
//! `π − δ` and chaining the segment end values with BCH. Two alternative
//! formulations (co-integrated skew product, Euler angles) exist for
//! cross-validation.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::sync::Arc;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bch::bch;
use crate::error::{Error, Result};
use crate::ode::{self, DenseSolution, OdeOptions, State, Termination};
use crate::so3::{
    dexpinv_apply, exp_rot, log_rot, q_map, AxisVector, BallClass, Rotation, DEXPINV_MARGIN,
};

/// Segments are rejected as stalled below this length.
const MIN_SEGMENT: f64 = 1e-12;
/// `|sin θ|` below this is treated as gimbal lock.
pub const GIMBAL_TOL: f64 = 1e-6;
/// Tolerance on evaluation times outside the integrated interval.
const TIME_SLACK: f64 = 1e-12;

type EvalFn = dyn Fn(f64, f64) -> AxisVector + Send + Sync;
type PeriodFn = dyn Fn(f64) -> f64 + Send + Sync;
type GroupFieldFn = dyn Fn(&State, f64) -> AxisVector + Send + Sync;
type NormalFieldFn = dyn Fn(&State, f64) -> State + Send + Sync;

/// Time-dependent generator `X^G(t, λ)` with its period `T(λ)`.
#[derive(Clone)]
pub struct ForcingSignal {
    eval: Arc<EvalFn>,
    period: Arc<PeriodFn>,
    reference: AxisVector,
}

impl ForcingSignal {
    /// `reference` is the unit direction `X₀¹` used to pick representatives.
    pub fn new<F, P>(eval: F, period: P, reference: AxisVector) -> Result<Self>
    where
        F: Fn(f64, f64) -> AxisVector + Send + Sync + 'static,
        P: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if (reference.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::domain(format!(
                "reference direction must be a unit vector, got norm {}",
                reference.norm()
            )));
        }
        Ok(ForcingSignal {
            eval: Arc::new(eval),
            period: Arc::new(period),
            reference,
        })
    }

    /// `X^G ≡ x0`, with period `2π/|x0|` (1 when `x0 = 0`).
    pub fn constant(x0: AxisVector) -> Self {
        let n = x0.norm();
        let (period, reference) = if n > 0.0 {
            (TAU / n, x0 / n)
        } else {
            (1.0, AxisVector::z())
        };
        ForcingSignal {
            eval: Arc::new(move |_, _| x0),
            period: Arc::new(move |_| period),
            reference,
        }
    }

    pub fn eval(&self, t: f64, lambda: f64) -> AxisVector {
        (self.eval)(t, lambda)
    }

    pub fn period(&self, lambda: f64) -> f64 {
        (self.period)(lambda)
    }

    pub fn reference(&self) -> AxisVector {
        self.reference
    }

    fn checked_eval(&self, t: f64, lambda: f64) -> Result<AxisVector> {
        let x = self.eval(t, lambda);
        if x.iter().all(|c| c.is_finite()) {
            Ok(x)
        } else {
            Err(Error::domain(format!("forcing is not finite at t = {t}")))
        }
    }
}

impl fmt::Debug for ForcingSignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ForcingSignal")
            .field("reference", &self.reference)
            .finish_non_exhaustive()
    }
}

/// Reduced system `Ȧ = A·X_G(q, λ)`, `q̇ = X_N(q, λ)`.
#[derive(Clone)]
pub struct SkewProductSystem {
    x_g: Arc<GroupFieldFn>,
    x_n: Arc<NormalFieldFn>,
    dim_q: usize,
    reference: AxisVector,
}

impl SkewProductSystem {
    pub fn new<G, N>(x_g: G, x_n: N, dim_q: usize, reference: AxisVector) -> Result<Self>
    where
        G: Fn(&State, f64) -> AxisVector + Send + Sync + 'static,
        N: Fn(&State, f64) -> State + Send + Sync + 'static,
    {
        if dim_q == 0 {
            return Err(Error::domain("normal coordinates need dim_q ≥ 1"));
        }
        if (reference.norm() - 1.0).abs() > 1e-10 {
            return Err(Error::domain("reference direction must be a unit vector"));
        }
        Ok(SkewProductSystem {
            x_g: Arc::new(x_g),
            x_n: Arc::new(x_n),
            dim_q,
            reference,
        })
    }

    /// Supercritical Hopf normal form `q̇ = (λ + iω)q − |q|²q` on `q ∈ ℂ ≅ ℝ²`
    /// coupled to a user group field.
    pub fn stuart_landau<G>(omega_bif: f64, x_g: G, reference: AxisVector) -> Result<Self>
    where
        G: Fn(&State, f64) -> AxisVector + Send + Sync + 'static,
    {
        let x_n = move |q: &State, lambda: f64| {
            let (a, b) = (q[0], q[1]);
            let r2 = a * a + b * b;
            State::from_column_slice(&[
                lambda * a - omega_bif * b - r2 * a,
                omega_bif * a + lambda * b - r2 * b,
            ])
        };
        Self::new(x_g, x_n, 2, reference)
    }

    pub fn dim_q(&self) -> usize {
        self.dim_q
    }

    pub fn x_g(&self, q: &State, lambda: f64) -> AxisVector {
        (self.x_g)(q, lambda)
    }

    pub fn x_n(&self, q: &State, lambda: f64) -> State {
        (self.x_n)(q, lambda)
    }
}

impl fmt::Debug for SkewProductSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SkewProductSystem")
            .field("dim_q", &self.dim_q)
            .field("reference", &self.reference)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorConfig {
    pub rtol: f64,
    pub atol: f64,
    /// Segments restart once `|Z|` reaches `π − restart_margin`.
    pub restart_margin: f64,
    /// `None` leaves the step size unbounded.
    pub max_step: Option<f64>,
    pub method_order: u32,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rtol: 1e-10,
            atol: 1e-12,
            restart_margin: 0.1,
            max_step: None,
            method_order: 5,
        }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !positive(self.rtol) || !positive(self.atol) {
            return Err(Error::Config(format!(
                "rtol and atol must be positive (got {}, {})",
                self.rtol, self.atol
            )));
        }
        if !(self.restart_margin > 0.0 && self.restart_margin < PI / 2.0) {
            return Err(Error::Config(format!(
                "restart_margin must lie in (0, π/2), got {}",
                self.restart_margin
            )));
        }
        if let Some(h) = self.max_step {
            if !positive(h) {
                return Err(Error::Config(format!("max_step must be positive, got {h}")));
            }
        }
        if !(4..=5).contains(&self.method_order) {
            return Err(Error::Config(format!(
                "method_order {} unsupported: the embedded pair is 5(4)",
                self.method_order
            )));
        }
        Ok(())
    }

    fn ode_options(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_step: self.max_step.unwrap_or(f64::INFINITY),
            ..OdeOptions::default()
        }
    }
}

/// One restart segment: `Z` (and any co-integrated state) from `Z(t_start) = 0`.
#[derive(Clone, Debug)]
pub struct ZSegment {
    sol: DenseSolution,
}

impl ZSegment {
    pub fn t_start(&self) -> f64 {
        self.sol.t_start()
    }

    pub fn t_end(&self) -> f64 {
        self.sol.t_end()
    }

    /// Local exponential coordinates at `t` (clamped to the segment).
    pub fn z(&self, t: f64) -> AxisVector {
        let y = self.sol.eval(t);
        AxisVector::new(y[0], y[1], y[2])
    }

    pub fn z_end(&self) -> AxisVector {
        let y = self.sol.final_state();
        AxisVector::new(y[0], y[1], y[2])
    }

    fn aux(&self, t: f64) -> State {
        let y = self.sol.eval(t);
        y.rows(3, y.len() - 3).into_owned()
    }

    fn aux_end(&self) -> State {
        let y = self.sol.final_state();
        y.rows(3, y.len() - 3).into_owned()
    }
}

#[derive(Clone, Debug)]
enum Chart {
    Chained {
        segments: Arc<Vec<ZSegment>>,
        prefix: Vec<BallClass>,
        prefix_rot: Vec<Rotation>,
    },
    Euler {
        sol: Arc<DenseSolution>,
        a0_inv: Rotation,
    },
}

/// Solution `A(t)` on `[0, t_end]` with `A(0) = I`.
#[derive(Clone, Debug)]
pub struct GroupTrajectory {
    chart: Chart,
    reference: AxisVector,
    t_end: f64,
}

impl GroupTrajectory {
    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn reference(&self) -> AxisVector {
        self.reference
    }

    /// Number of restart segments (1 for the Euler chart).
    pub fn segment_count(&self) -> usize {
        match &self.chart {
            Chart::Chained { segments, .. } => segments.len(),
            Chart::Euler { .. } => 1,
        }
    }

    /// Segment restart segments, empty for the Euler chart.
    pub fn segments(&self) -> &[ZSegment] {
        match &self.chart {
            Chart::Chained { segments, .. } => segments,
            Chart::Euler { .. } => &[],
        }
    }

    /// BCH accumulator: class of `A(t_start)` for each segment.
    pub fn chained_prefix(&self) -> &[BallClass] {
        match &self.chart {
            Chart::Chained { prefix, .. } => prefix,
            Chart::Euler { .. } => &[],
        }
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        if !(t >= -TIME_SLACK && t <= self.t_end + TIME_SLACK) {
            return Err(Error::domain(format!(
                "t = {t} outside the integrated interval [0, {}]",
                self.t_end
            )));
        }
        Ok(t.clamp(0.0, self.t_end))
    }

    fn segment_index(segments: &[ZSegment], t: f64) -> usize {
        segments
            .partition_point(|s| s.t_end() < t)
            .min(segments.len() - 1)
    }

    /// Ball-model class of `A(t)`, `BCH(prefix, Z_seg(t))` on the chained chart.
    pub fn eval_class(&self, t: f64) -> Result<BallClass> {
        let t = self.check_time(t)?;
        match &self.chart {
            Chart::Chained {
                segments, prefix, ..
            } => {
                let i = Self::segment_index(segments, t);
                Ok(bch(&prefix[i].vector(), &segments[i].z(t)))
            }
            Chart::Euler { .. } => Ok(log_rot(&self.eval_a(t)?)),
        }
    }

    /// Global exponential coordinates `q(BCH(prefix, Z_seg(t)))`.
    pub fn eval_z(&self, t: f64) -> Result<AxisVector> {
        q_map(&self.eval_class(t)?, &self.reference)
    }

    pub fn eval_a(&self, t: f64) -> Result<Rotation> {
        let t = self.check_time(t)?;
        match &self.chart {
            Chart::Chained {
                segments,
                prefix_rot,
                ..
            } => {
                let i = Self::segment_index(segments, t);
                Ok(prefix_rot[i] * exp_rot(&segments[i].z(t)))
            }
            Chart::Euler { sol, a0_inv } => {
                let y = sol.eval(t);
                Ok(*a0_inv * euler_rotation(y[0], y[1], y[2]))
            }
        }
    }

    fn eval_aux(&self, t: f64) -> Result<State> {
        let t = self.check_time(t)?;
        match &self.chart {
            Chart::Chained { segments, .. } => {
                let i = Self::segment_index(segments, t);
                Ok(segments[i].aux(t))
            }
            Chart::Euler { .. } => Ok(State::zeros(0)),
        }
    }
}

/// Normal-coordinate trajectory of a skew-product run.
#[derive(Clone, Debug)]
pub struct QTrajectory {
    group: GroupTrajectory,
}

impl QTrajectory {
    pub fn eval(&self, t: f64) -> Result<State> {
        self.group.eval_aux(t)
    }

    pub fn t_end(&self) -> f64 {
        self.group.t_end
    }
}

/// `R_z(ψ)·R_x(θ)·R_z(φ)`.
pub fn euler_rotation(phi: f64, theta: f64, psi: f64) -> Rotation {
    Rotation::about_z(psi) * Rotation::about_x(theta) * Rotation::about_z(phi)
}

fn zeta_rate(z: &AxisVector, x: &AxisVector) -> Result<AxisVector> {
    let n = z.norm();
    if !(n < TAU - DEXPINV_MARGIN) {
        return Err(Error::Singularity { norm: n });
    }
    Ok(dexpinv_apply(z, x))
}

/// Runs one segment of the Z-equation with co-integrated auxiliary state.
fn run_segment<X>(
    group_rate: &X,
    aux0: State,
    t0: f64,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<(ZSegment, f64)>
where
    X: Fn(f64, &State) -> Result<(AxisVector, State)>,
{
    let mut y0 = State::zeros(3 + aux0.len());
    y0.rows_mut(3, aux0.len()).copy_from(&aux0);
    let threshold = PI - cfg.restart_margin;
    let rhs = |t: f64, y: &State| -> Result<State> {
        let z = AxisVector::new(y[0], y[1], y[2]);
        let aux = y.rows(3, y.len() - 3).into_owned();
        let (x, aux_rate) = group_rate(t, &aux)?;
        let zr = zeta_rate(&z, &x)?;
        let mut out = State::zeros(y.len());
        out[0] = zr.x;
        out[1] = zr.y;
        out[2] = zr.z;
        out.rows_mut(3, aux_rate.len()).copy_from(&aux_rate);
        Ok(out)
    };
    let event = |_: f64, y: &State| (y[0] * y[0] + y[1] * y[1] + y[2] * y[2]).sqrt() - threshold;
    let (sol, term) = ode::integrate(rhs, t0, y0, t_max, &cfg.ode_options(), Some(event))?;
    let t_exit = match term {
        Termination::Reached => t_max,
        Termination::Event(te) => te,
    };
    Ok((ZSegment { sol }, t_exit))
}

/// One Z-segment from `Z(t0) = 0`, stopping at `|Z| = π − δ` or `t_max`.
pub fn integrate_z_segment(
    f: &ForcingSignal,
    lambda: f64,
    t0: f64,
    t_max: f64,
    cfg: &IntegratorConfig,
) -> Result<(ZSegment, f64)> {
    check_lambda(lambda)?;
    cfg.validate()?;
    if !(t0 < t_max) {
        return Err(Error::domain(format!(
            "segment needs t0 < t_max (got {t0}, {t_max})"
        )));
    }
    let rate = |t: f64, _: &State| Ok((f.checked_eval(t, lambda)?, State::zeros(0)));
    run_segment(&rate, State::zeros(0), t0, t_max, cfg)
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "λ must be finite and ≥ 0, got {lambda}"
        )));
    }
    Ok(())
}

fn chain<X>(
    group_rate: X,
    aux0: State,
    t_end: f64,
    cfg: &IntegratorConfig,
    reference: AxisVector,
) -> Result<GroupTrajectory>
where
    X: Fn(f64, &State) -> Result<(AxisVector, State)>,
{
    cfg.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::domain(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let mut segments = Vec::new();
    let mut prefix = vec![BallClass::zero()];
    let mut prefix_rot = vec![Rotation::identity()];
    let mut t = 0.0;
    let mut aux = aux0;
    loop {
        let (seg, t_exit) = run_segment(&group_rate, aux, t, t_end, cfg)?;
        if t_exit >= t_end {
            segments.push(seg);
            break;
        }
        if t_exit - t < MIN_SEGMENT {
            return Err(Error::Integration {
                t,
                reason: "restart segment made no progress".into(),
            });
        }
        let z_end = seg.z_end();
        let last = prefix.len() - 1;
        prefix.push(bch(&prefix[last].vector(), &z_end));
        prefix_rot.push(prefix_rot[last] * exp_rot(&z_end));
        aux = seg.aux_end();
        segments.push(seg);
        t = t_exit;
    }
    Ok(GroupTrajectory {
        chart: Chart::Chained {
            segments: Arc::new(segments),
            prefix,
            prefix_rot,
        },
        reference,
        t_end,
    })
}

/// Integrates the group equation on `[0, t_end]` by chained Z-segments.
pub fn integrate_group(
    f: &ForcingSignal,
    lambda: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<GroupTrajectory> {
    check_lambda(lambda)?;
    let rate = |t: f64, _: &State| Ok((f.checked_eval(t, lambda)?, State::zeros(0)));
    chain(rate, State::zeros(0), t_end, cfg, f.reference())
}

/// Co-integrates `q̇ = X_N(q, λ)` with the Z-equation driven by `X_G(q(t), λ)`.
pub fn integrate_skew_product(
    sys: &SkewProductSystem,
    q0: &State,
    lambda: f64,
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<(GroupTrajectory, QTrajectory)> {
    check_lambda(lambda)?;
    if q0.len() != sys.dim_q {
        return Err(Error::domain(format!(
            "q0 has dimension {}, system expects {}",
            q0.len(),
            sys.dim_q
        )));
    }
    let rate = |t: f64, q: &State| {
        let x = sys.x_g(q, lambda);
        if !x.iter().all(|c| c.is_finite()) {
            return Err(Error::domain(format!("X_G is not finite at t = {t}")));
        }
        Ok((x, sys.x_n(q, lambda)))
    };
    let group = chain(rate, q0.clone(), t_end, cfg, sys.reference)?;
    let q = QTrajectory {
        group: group.clone(),
    };
    Ok((group, q))
}

/// Euler-angle formulation `A = R_z(ψ)R_x(θ)R_z(φ)` with `φ(0) = ψ(0) = 0`,
/// `θ(0) = θ0`; the result is left-normalized so that `A(0) = I`.
pub fn integrate_euler(
    f: &ForcingSignal,
    lambda: f64,
    t_end: f64,
    theta0: f64,
    cfg: &IntegratorConfig,
) -> Result<GroupTrajectory> {
    check_lambda(lambda)?;
    cfg.validate()?;
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::domain(format!(
            "t_end must be positive, got {t_end}"
        )));
    }
    let rhs = |t: f64, y: &State| -> Result<State> {
        let (phi, theta) = (y[0], y[1]);
        let s = theta.sin();
        if s.abs() < GIMBAL_TOL {
            return Err(Error::GimbalLock { t, theta });
        }
        let x = f.checked_eval(t, lambda)?;
        let (sp, cp) = phi.sin_cos();
        let lateral = x.y * cp + x.x * sp;
        Ok(State::from_column_slice(&[
            x.z - theta.cos() / s * lateral,
            x.x * cp - x.y * sp,
            lateral / s,
        ]))
    };
    let y0 = DVector::from_column_slice(&[0.0, theta0, 0.0]);
    let sol = ode::integrate_plain(rhs, 0.0, y0, t_end, &cfg.ode_options())?;
    Ok(GroupTrajectory {
        chart: Chart::Euler {
            sol: Arc::new(sol),
            a0_inv: Rotation::about_x(theta0).inverse(),
        },
        reference: f.reference(),
        t_end,
    })
}
