//! Quantities extracted from a computed trajectory after a Hopf bifurcation
//! of a rotating wave: primary frequency vector, lifted branch, periodic
//! parts, resonance and motion classification, and the orthogonal
//! resonant-drift branch.

use std::f64::consts::TAU;
use std::fmt;

use serde::Serialize;

use crate::bch::bch;
use crate::error::{Error, Result};
use crate::flow::{integrate_group, ForcingSignal, GroupTrajectory, IntegratorConfig};
use crate::so3::{exp_rot, q_map, AxisVector, BallClass, Rotation};

/// Relative tolerance of `|X₀|/ω_bif` against the nearest integer.
pub const RES_TOL: f64 = 1e-9;
/// `|⟨X̂, X̂₀⟩|` below this labels a resonant run as orthogonal drift.
pub const ORTHO_TOL: f64 = 1e-6;
/// Absolute tolerance for `|X|·T ∈ 2πℤ`.
pub const PERIODIC_TOL: f64 = 1e-9;
/// Required `|g(μ*)|` for the orthogonal-branch finder.
pub const ROOT_TOL: f64 = 1e-10;
/// Classes of `A(T)` closer than this to the identity are taken as zero.
pub const ZERO_CLASS_TOL: f64 = 1e-10;

const ROOT_TARGET: f64 = 1e-12;
const ROOT_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ResonanceKind {
    NonResonant,
    Resonant(i64),
    /// `|X₀| = 0`: the relative equilibrium is an equilibrium.
    Degenerate,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonanceClass {
    pub kind: ResonanceKind,
    pub omega_bif: f64,
    pub x0_norm: f64,
}

impl ResonanceClass {
    pub fn new(x0_norm: f64, omega_bif: f64, res_tol: f64) -> Result<Self> {
        if omega_bif == 0.0 || !omega_bif.is_finite() {
            return Err(Error::domain(format!(
                "omega_bif must be nonzero, got {omega_bif}"
            )));
        }
        let w = omega_bif.abs();
        let kind = if x0_norm == 0.0 {
            ResonanceKind::Degenerate
        } else {
            let k = (x0_norm / w).round();
            if k != 0.0 && (x0_norm - k * w).abs() < res_tol * w {
                ResonanceKind::Resonant(k as i64)
            } else {
                ResonanceKind::NonResonant
            }
        };
        Ok(ResonanceClass {
            kind,
            omega_bif,
            x0_norm,
        })
    }

    pub fn is_resonant(&self) -> bool {
        matches!(self.kind, ResonanceKind::Resonant(_))
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ResonanceKind::NonResonant => "NonResonant",
            ResonanceKind::Resonant(_) => "Resonant",
            ResonanceKind::Degenerate => "Degenerate",
        }
    }

    pub fn k(&self) -> Option<i64> {
        match self.kind {
            ResonanceKind::Resonant(k) => Some(k),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Motion {
    RigidRotation,
    MeanderO1,
    SlowMeanderAboutX0,
    OrthogonalDrift,
    PeriodicSolution,
}

impl fmt::Display for Motion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Motion::RigidRotation => "RigidRotation",
            Motion::MeanderO1 => "MeanderO1",
            Motion::SlowMeanderAboutX0 => "SlowMeanderAboutX0",
            Motion::OrthogonalDrift => "OrthogonalDrift",
            Motion::PeriodicSolution => "PeriodicSolution",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrequencyReport {
    pub lambda: f64,
    pub period: f64,
    /// Primary frequency vector, `q`-normalized.
    pub x: AxisVector,
    /// Lifted branch with `X^f(0) = X₀`.
    pub xf: AxisVector,
    pub resonance: ResonanceClass,
    /// `k` with `|X₀|·T(0) = α₀ + 2kπ`.
    pub k_winding: i64,
    /// `⟨X̂, X̂₀⟩`; `None` when either vector vanishes.
    pub ortho_defect: Option<f64>,
    pub motion: Motion,
}

/// Class of `A(T)` in the ball model, snapped to zero near the identity.
pub fn frequency_class(traj: &GroupTrajectory, period: f64) -> Result<BallClass> {
    if !(period > 0.0) {
        return Err(Error::domain(format!(
            "period must be positive, got {period}"
        )));
    }
    if period > traj.t_end() * (1.0 + 1e-14) {
        return Err(Error::domain(format!(
            "trajectory ends at {} before the period {period}",
            traj.t_end()
        )));
    }
    let class = traj.eval_class(period.min(traj.t_end()))?;
    if class.angle() < ZERO_CLASS_TOL {
        Ok(BallClass::zero())
    } else {
        Ok(class)
    }
}

/// `X = q(Z(T))/T`, so that `exp(X·T) = A(T)`.
pub fn primary_frequency(
    traj: &GroupTrajectory,
    period: f64,
    ref_dir: &AxisVector,
) -> Result<AxisVector> {
    let class = frequency_class(traj, period)?;
    Ok(q_map(&class, ref_dir)? / period)
}

/// `k = ⌊|x₀|·T₀/(2π) + ½·res_tol⌋`.
pub fn winding_number(x0_norm: f64, t0: f64) -> i64 {
    (x0_norm * t0 / TAU + 0.5 * RES_TOL).floor() as i64
}

/// Lifted branch `X^f = ((|X| + k|ω_λ|)/|X|)·X`; in the resonant class with
/// `X = 0` the direction is taken as `X₀¹`.
pub fn lifted_frequency(
    x: &AxisVector,
    t0: f64,
    x0: &AxisVector,
    omega_lambda: f64,
    res: &ResonanceClass,
) -> Result<AxisVector> {
    let n = x.norm();
    if n == 0.0 && res.kind == ResonanceKind::NonResonant {
        return Err(Error::InternalInconsistency(
            "primary frequency vanished in the nonresonant class".into(),
        ));
    }
    let k = winding_number(x0.norm(), t0);
    if k == 0 {
        return Ok(*x);
    }
    let shift = k as f64 * omega_lambda.abs();
    if n > 0.0 {
        Ok(x * ((n + shift) / n))
    } else {
        let x0n = x0.norm();
        if x0n == 0.0 {
            return Ok(*x);
        }
        Ok(x0 / x0n * shift)
    }
}

/// Periodic factors `B(t) = e^{−Xt}A(t)` and `B^f(t) = e^{−X^f t}A(t)`.
#[derive(Clone, Debug)]
pub struct PeriodicPart {
    traj: GroupTrajectory,
    x: AxisVector,
    xf: AxisVector,
    period: f64,
}

impl PeriodicPart {
    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn eval_b(&self, t: f64) -> Result<Rotation> {
        Ok(exp_rot(&(-self.x * t)) * self.traj.eval_a(t)?)
    }

    pub fn eval_bf(&self, t: f64) -> Result<Rotation> {
        Ok(exp_rot(&self.log_bf(t)?))
    }

    /// Ball-model representative of `BCH(−X^f t, Z(t))`.
    pub fn log_bf(&self, t: f64) -> Result<AxisVector> {
        let z = self.traj.eval_z(t)?;
        Ok(bch(&(-self.xf * t), &z).vector())
    }

    /// `max ‖log B^f(t)‖` over `n + 1` equispaced samples of `[0, T]`.
    pub fn max_log_bf(&self, n: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for i in 0..=n {
            let t = self.period * i as f64 / n as f64;
            worst = worst.max(self.log_bf(t)?.norm());
        }
        Ok(worst)
    }
}

/// Builds the periodic parts after checking `exp(X·T) = exp(X^f·T) = A(T)`.
pub fn periodic_part(
    traj: &GroupTrajectory,
    x: &AxisVector,
    xf: &AxisVector,
    period: f64,
) -> Result<PeriodicPart> {
    let a_t = traj.eval_a(period)?;
    for (name, v) in [("X", x), ("X^f", xf)] {
        let d = exp_rot(&(v * period)).distance(&a_t);
        if d > 1e-7 {
            return Err(Error::InternalInconsistency(format!(
                "exp({name}·T) differs from A(T) by {d:e}"
            )));
        }
    }
    Ok(PeriodicPart {
        traj: traj.clone(),
        x: *x,
        xf: *xf,
        period,
    })
}

fn is_periodic(x: &AxisVector, period: f64) -> bool {
    let a = x.norm() * period / TAU;
    (a - a.round()).abs() * TAU < PERIODIC_TOL
}

/// Fills the resonance class, lifted branch and motion type.
pub fn classify(
    lambda: f64,
    x0: &AxisVector,
    omega_bif: f64,
    x: &AxisVector,
    period: f64,
    res_tol: f64,
) -> Result<FrequencyReport> {
    let resonance = ResonanceClass::new(x0.norm(), omega_bif, res_tol)?;
    let t0 = TAU / omega_bif.abs();
    let omega_lambda = TAU / period;
    let xf = lifted_frequency(x, t0, x0, omega_lambda, &resonance)?;
    let ortho_defect = if x.norm() > 0.0 && x0.norm() > 0.0 {
        Some(x.normalize().dot(&x0.normalize()))
    } else {
        None
    };
    let motion = if lambda == 0.0 {
        Motion::RigidRotation
    } else if is_periodic(x, period) {
        Motion::PeriodicSolution
    } else {
        match resonance.kind {
            ResonanceKind::NonResonant | ResonanceKind::Degenerate => Motion::MeanderO1,
            ResonanceKind::Resonant(_) => match ortho_defect {
                Some(d) if d.abs() >= ORTHO_TOL => Motion::SlowMeanderAboutX0,
                _ => Motion::OrthogonalDrift,
            },
        }
    };
    Ok(FrequencyReport {
        lambda,
        period,
        x: *x,
        xf,
        resonance,
        k_winding: winding_number(x0.norm(), t0),
        ortho_defect,
        motion,
    })
}

/// Result of the orthogonal-branch search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrthogonalRoot {
    pub mu: f64,
    /// `g(μ*) = ⟨X(λ, μ*), X̂₀⟩`.
    pub g: f64,
    /// `⟨X̂(λ, μ*), X̂₀⟩`, zero when `X` vanishes.
    pub ortho_defect: f64,
    pub evaluations: usize,
}

/// Finds `μ*` in `bracket` with `⟨X(λ, μ*), X̂₀⟩ = 0`.
///
/// `X` is the ball-model representative of `log A(T)/T`, which keeps the
/// sign of its component along `X₀`. At `λ = 0` the root is `μ* = 0`.
pub fn find_orthogonal_branch<F>(
    family: F,
    lambda: f64,
    bracket: (f64, f64),
    x0_dir: &AxisVector,
    cfg: &IntegratorConfig,
) -> Result<OrthogonalRoot>
where
    F: Fn(f64, f64) -> Result<ForcingSignal>,
{
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::domain(format!(
            "λ must be finite and ≥ 0, got {lambda}"
        )));
    }
    let n0 = x0_dir.norm();
    if n0 == 0.0 {
        return Err(Error::domain("X₀ must be nonzero"));
    }
    let x0_hat = x0_dir / n0;
    if lambda == 0.0 {
        return Ok(OrthogonalRoot {
            mu: 0.0,
            g: 0.0,
            ortho_defect: 0.0,
            evaluations: 0,
        });
    }
    let (lo, hi) = bracket;
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::domain(format!("invalid bracket [{lo}, {hi}]")));
    }

    let mut evaluations = 0;
    let mut eval = |mu: f64| -> Result<(f64, f64)> {
        evaluations += 1;
        let f = family(lambda, mu)?;
        let period = f.period(lambda);
        let traj = integrate_group(&f, lambda, period, cfg)?;
        let x = frequency_class(&traj, period)?.vector() / period;
        let g = x.dot(&x0_hat);
        let n = x.norm();
        Ok((g, if n > 0.0 { g / n } else { 0.0 }))
    };

    let (mut a, mut b) = (lo, hi);
    let (mut ga, da) = eval(a)?;
    let (mut gb, db) = eval(b)?;
    if ga.abs() < ROOT_TARGET {
        return Ok(OrthogonalRoot {
            mu: a,
            g: ga,
            ortho_defect: da,
            evaluations,
        });
    }
    if gb.abs() < ROOT_TARGET {
        return Ok(OrthogonalRoot {
            mu: b,
            g: gb,
            ortho_defect: db,
            evaluations,
        });
    }
    if ga.signum() == gb.signum() {
        return Err(Error::Bracket {
            lo,
            hi,
            g_lo: ga,
            g_hi: gb,
        });
    }

    // Illinois variant of regula falsi; `a` is the retained endpoint
    let mut best = (b, gb, db);
    for _ in 0..ROOT_MAX_ITER {
        let mut c = (a * gb - b * ga) / (gb - ga);
        if !(c > a.min(b) && c < a.max(b)) {
            c = 0.5 * (a + b);
        }
        let (gc, dc) = eval(c)?;
        if gc.abs() < best.1.abs() {
            best = (c, gc, dc);
        }
        if gc.abs() < ROOT_TARGET || (b - a).abs() < 4.0 * f64::EPSILON * c.abs().max(1.0) {
            break;
        }
        if gc.signum() != gb.signum() {
            a = b;
            ga = gb;
        } else {
            ga *= 0.5;
        }
        b = c;
        gb = gc;
    }
    let (mu, g, ortho_defect) = best;
    if g.abs() >= ROOT_TOL {
        return Err(Error::InternalInconsistency(format!(
            "orthogonal branch search stalled at μ = {mu} with |g| = {:e}",
            g.abs()
        )));
    }
    Ok(OrthogonalRoot {
        mu,
        g,
        ortho_defect,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::integrate_group;
    use crate::scenarios::{build, ScenarioOverrides};

    fn v(x: f64, y: f64, z: f64) -> AxisVector {
        AxisVector::new(x, y, z)
    }

    #[test]
    fn resonance_classes() {
        let r = ResonanceClass::new(2.0, 20.0, RES_TOL).unwrap();
        assert_eq!(r.kind, ResonanceKind::NonResonant);
        let r = ResonanceClass::new(20.0, 20.0, RES_TOL).unwrap();
        assert_eq!(r.kind, ResonanceKind::Resonant(1));
        let r = ResonanceClass::new(40.0 + 1e-12, 20.0, RES_TOL).unwrap();
        assert_eq!(r.kind, ResonanceKind::Resonant(2));
        let r = ResonanceClass::new(0.0, 20.0, RES_TOL).unwrap();
        assert_eq!(r.kind, ResonanceKind::Degenerate);
        assert!(ResonanceClass::new(1.0, 0.0, RES_TOL).is_err());
    }

    #[test]
    fn constant_forcing_frequency_is_exact() {
        let x0 = v(0.2, -0.1, 1.0);
        let f = ForcingSignal::constant(x0);
        let traj = integrate_group(&f, 0.0, 2.0, &Default::default()).unwrap();
        let x = primary_frequency(&traj, 2.0, &f.reference()).unwrap();
        assert!((x - x0).norm() < 1e-12);
        let pp = periodic_part(&traj, &x, &x, 2.0).unwrap();
        for i in 0..=10 {
            let b = pp.eval_b(0.2 * i as f64).unwrap();
            assert!(b.distance(&Rotation::identity()) < 1e-10);
        }
    }

    #[test]
    fn trajectory_shorter_than_period() {
        let f = ForcingSignal::constant(v(0.0, 0.0, 1.0));
        let traj = integrate_group(&f, 0.0, 1.0, &Default::default()).unwrap();
        let r = primary_frequency(&traj, 2.0, &v(0.0, 0.0, 1.0));
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn lifted_branches() {
        let res = ResonanceClass::new(2.0, 20.0, RES_TOL).unwrap();
        let t0 = TAU / 20.0;
        let x = v(0.1, 0.0, 2.0);
        assert_eq!(
            lifted_frequency(&x, t0, &v(0.0, 0.0, 2.0), 20.01, &res).unwrap(),
            x
        );

        let res = ResonanceClass::new(20.0, 20.0, RES_TOL).unwrap();
        let eps = 0.05f64.sqrt();
        let x = v(eps, 0.0, 0.0);
        let xf = lifted_frequency(&x, t0, &v(0.0, 0.0, 20.0), 20.05, &res).unwrap();
        assert!((xf.norm() - (eps + 20.05)).abs() < 1e-12);
        assert!((xf.normalize() - x.normalize()).norm() < 1e-15);

        let xf =
            lifted_frequency(&AxisVector::zeros(), t0, &v(0.0, 0.0, 20.0), 20.05, &res).unwrap();
        assert!((xf - v(0.0, 0.0, 20.05)).norm() < 1e-12);

        let res = ResonanceClass::new(2.0, 20.0, RES_TOL).unwrap();
        let r = lifted_frequency(&AxisVector::zeros(), t0, &v(0.0, 0.0, 2.0), 20.0, &res);
        assert!(matches!(r, Err(Error::InternalInconsistency(_))));
    }

    #[test]
    fn lifted_frequency_has_same_exponential() {
        let res = ResonanceClass::new(40.0, 20.0, RES_TOL).unwrap();
        let t = TAU / 20.3;
        let x = v(0.3, -0.2, 0.5);
        let xf = lifted_frequency(&x, TAU / 20.0, &v(0.0, 0.0, 40.0), 20.3, &res).unwrap();
        assert!(exp_rot(&(xf * t)).distance(&exp_rot(&(x * t))) < 1e-9);
    }

    #[test]
    fn motion_labels() {
        let x0 = v(0.0, 0.0, 20.0);
        let t = TAU / 20.05;
        let rep = classify(0.05, &x0, 20.0, &v(0.2, 0.0, 1e-9), t, RES_TOL).unwrap();
        assert_eq!(rep.motion, Motion::OrthogonalDrift);
        let rep = classify(0.05, &x0, 20.0, &v(0.2, 0.0, 4.0), t, RES_TOL).unwrap();
        assert_eq!(rep.motion, Motion::SlowMeanderAboutX0);
        let rep = classify(0.0, &x0, 20.0, &AxisVector::zeros(), TAU / 20.0, RES_TOL).unwrap();
        assert_eq!(rep.motion, Motion::RigidRotation);
        assert!((rep.xf - x0).norm() < 1e-12);
        let rep = classify(0.05, &x0, 20.0, &v(0.0, 0.0, 20.05), t, RES_TOL).unwrap();
        assert_eq!(rep.motion, Motion::PeriodicSolution);
        let rep = classify(0.01, &v(0.0, 0.0, 2.0), 20.0, &v(0.1, 0.0, 2.0), t, RES_TOL).unwrap();
        assert_eq!(rep.motion, Motion::MeanderO1);
        assert_eq!(rep.k_winding, 0);
    }

    #[test]
    fn example1_periodic_part_matches_closed_form() {
        let s = build("example1", &ScenarioOverrides::default()).unwrap();
        let lambda: f64 = 0.01;
        let eps = lambda.sqrt();
        let f = s.forcing(0.0);
        let period = f.period(lambda);
        let traj = integrate_group(&f, lambda, period, &Default::default()).unwrap();
        let x = primary_frequency(&traj, period, &f.reference()).unwrap();
        let rep = classify(lambda, &s.x0(), 20.0, &x, period, RES_TOL).unwrap();
        let pp = periodic_part(&traj, &rep.x, &rep.xf, period).unwrap();
        let p = v(1.0, 1.0, 1.0) * (2.0 * eps);
        for i in 0..=40 {
            let t = period * i as f64 / 40.0;
            let g = ((20.0 + lambda) * t).sin();
            let d = pp.eval_bf(t).unwrap().distance(&exp_rot(&(p * g)));
            assert!(d < 1e-8, "t = {t}: {d:e}");
        }
        assert!(pp.eval_b(0.0).unwrap().distance(&Rotation::identity()) < 1e-8);
        assert!(pp.eval_b(period).unwrap().distance(&Rotation::identity()) < 1e-8);
    }

    #[test]
    fn orthogonal_branch_at_hopf_point() {
        let s = build("example4", &ScenarioOverrides::default()).unwrap();
        let root = find_orthogonal_branch(
            |_, mu| Ok(s.forcing(mu)),
            0.0,
            (0.0, 0.3),
            &s.x0(),
            &Default::default(),
        )
        .unwrap();
        assert_eq!(root.mu, 0.0);
    }

    #[test]
    fn orthogonal_branch_example4() {
        let s = build("example4", &ScenarioOverrides::default()).unwrap();
        let root = find_orthogonal_branch(
            |_, mu| Ok(s.forcing(mu)),
            0.01,
            (0.0, 0.3),
            &s.x0(),
            &Default::default(),
        )
        .unwrap();
        assert!((root.mu - 0.1).abs() < 1e-6, "{root:?}");
        assert!(root.g.abs() < ROOT_TOL);
    }

    #[test]
    fn degenerate_family_has_no_bracket() {
        let s = build("example3", &ScenarioOverrides::default()).unwrap();
        let r = find_orthogonal_branch(
            |_, _| Ok(s.forcing(0.0)),
            0.01,
            (0.0, 0.3),
            &s.x0(),
            &Default::default(),
        );
        assert!(matches!(r, Err(Error::Bracket { .. })), "{r:?}");
    }
}
