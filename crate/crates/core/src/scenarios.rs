//! Built-in forcing families with closed-form group solutions.
//!
//! Every family is written in a right-handed orthonormal frame
//! `(X₀¹, X₁, X₂)` with `X₀ = |X₀|·X₀¹`, `ε = √λ`, `ω_λ = ω_bif + λ` and a
//! periodic modulation `g(t, λ)` with `g(0, λ) = 0`.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::{integrate_group, ForcingSignal, IntegratorConfig};
use crate::so3::{exp_rot, AxisVector, Rotation};

pub const SCENARIO_NAMES: [&str; 8] = [
    "example1", "example2", "example3", "example4", "example5", "case1", "case2", "case3",
];

const FRAME_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    /// Nonresonant Hopf bifurcation to a modulated rotating wave.
    Example1,
    /// Resonant drift with `X(λ) = εX₁ ⟂ X₀`.
    Example2,
    /// Resonant, `X(λ) = ε(X₀ + X₁)` not orthogonal to `X₀`.
    Example3,
    /// Two-parameter resonant family, orthogonal at `μ = ε`.
    Example4,
    /// Non-uniform rigid rotation about `X₀ + εX₁`.
    Example5,
}

/// Right-handed orthonormal frame with `X₀¹ × X₁ = X₂`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub x0_dir: AxisVector,
    pub x1: AxisVector,
    pub x2: AxisVector,
}

impl Frame {
    /// `X₀¹ = e_z`, `X₁ = e_x`, `X₂ = e_y`.
    pub fn standard() -> Self {
        Frame {
            x0_dir: AxisVector::z(),
            x1: AxisVector::x(),
            x2: AxisVector::y(),
        }
    }

    /// Rows are `X₀¹`, `X₁`, `X₂`.
    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        let [a, b, c] = rows.map(AxisVector::from);
        let frame = Frame {
            x0_dir: a,
            x1: b,
            x2: c,
        };
        let unit = [a, b, c].iter().all(|v| (v.norm() - 1.0).abs() < FRAME_TOL);
        let orthogonal = a.dot(&b).abs() < FRAME_TOL
            && b.dot(&c).abs() < FRAME_TOL
            && c.dot(&a).abs() < FRAME_TOL;
        let right_handed = (a.cross(&b) - c).norm() < FRAME_TOL;
        if unit && orthogonal && right_handed {
            Ok(frame)
        } else {
            Err(Error::Config(
                "basis must be orthonormal and right-handed with X0¹ × X1 = X2".into(),
            ))
        }
    }

    fn rows(&self) -> [[f64; 3]; 3] {
        [self.x0_dir, self.x1, self.x2].map(|v| [v.x, v.y, v.z])
    }
}

/// `g(t, λ) = amplitude·sin(harmonic·(ω_bif + λ)·t)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GSpec {
    pub amplitude: f64,
    pub harmonic: u32,
}

impl Default for GSpec {
    fn default() -> Self {
        GSpec {
            amplitude: 1.0,
            harmonic: 1,
        }
    }
}

impl GSpec {
    fn value(&self, t: f64, omega_lambda: f64) -> (f64, f64) {
        let w = self.harmonic as f64 * omega_lambda;
        let (s, c) = (w * t).sin_cos();
        (self.amplitude * s, self.amplitude * w * c)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioOverrides {
    pub omega_bif: Option<f64>,
    pub x0_norm: Option<f64>,
    pub r: Option<f64>,
    pub theta0: Option<f64>,
    pub tip_x0: Option<[f64; 3]>,
    pub g: Option<GSpec>,
    /// Rows `X₀¹`, `X₁`, `X₂`.
    pub basis: Option<[[f64; 3]; 3]>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScenarioParams {
    pub omega_bif: f64,
    pub x0_norm: f64,
    /// Sphere radius for tip motion.
    pub r: f64,
    /// Initial polar angle of the Euler-angle chart.
    pub theta0: f64,
    /// Tip reference point, on the sphere of radius `r`.
    pub tip_x0: AxisVector,
    pub g: GSpec,
}

#[derive(Clone)]
pub struct Scenario {
    name: String,
    family: Family,
    frame: Frame,
    params: ScenarioParams,
}

impl fmt::Debug for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Scenario")
            .field("name", &self.name)
            .field("family", &self.family)
            .field("frame", &self.frame.rows())
            .field("params", &self.params)
            .finish()
    }
}

/// Per-(λ, μ) constants shared by a forcing and its closed form.
#[derive(Clone, Copy)]
struct Coefficients {
    family: Family,
    frame: Frame,
    x0: AxisVector,
    eps: f64,
    lambda: f64,
    omega_lambda: f64,
    g: GSpec,
    mu: f64,
    k: i32,
}

impl Coefficients {
    fn g(&self, t: f64) -> (f64, f64) {
        self.g.value(t, self.omega_lambda)
    }

    /// Example 1 exponent direction `2ε(X₁ + X₂ + X₀¹)`.
    fn p1(&self) -> AxisVector {
        (self.frame.x1 + self.frame.x2 + self.frame.x0_dir) * (2.0 * self.eps)
    }

    /// Rotating factor `M` and its rate `c` for Examples 2–4.
    fn rotating_factor(&self) -> (AxisVector, f64) {
        let m = match self.family {
            Family::Example4 => self.x0 + self.frame.x1 * self.mu,
            _ => self.x0 + self.frame.x2 * self.eps,
        };
        let k = if self.family == Family::Example4 {
            self.k as f64
        } else {
            1.0
        };
        (m, k * self.omega_lambda.abs() / m.norm())
    }

    /// Drift generator `W` of the first closed-form factor, Examples 2–4.
    fn drift(&self) -> AxisVector {
        let f = &self.frame;
        match self.family {
            Family::Example2 => f.x1 * self.eps,
            Family::Example3 => (self.x0 + f.x1) * self.eps,
            Family::Example4 => {
                (self.x0 * (self.eps - self.mu) + f.x1 + f.x2) * self.eps.powi(self.k)
            }
            _ => unreachable!("drift is only defined for examples 2–4"),
        }
    }

    fn forcing(&self, t: f64) -> AxisVector {
        let (g, gdot) = self.g(t);
        match self.family {
            Family::Example1 => {
                let p = self.p1();
                let v = self.x0 + self.frame.x1 * self.eps;
                p * gdot + exp_rot(&(p * g)).transpose().apply(&v)
            }
            Family::Example2 | Family::Example3 | Family::Example4 => {
                let (m, c) = self.rotating_factor();
                let h = c * t + self.lambda * g;
                m * (c + self.lambda * gdot) + exp_rot(&(m * h)).transpose().apply(&self.drift())
            }
            Family::Example5 => (self.x0 + self.frame.x1 * self.eps) * (1.0 + self.eps * gdot),
        }
    }

    fn closed_form(&self, t: f64) -> Rotation {
        let (g, _) = self.g(t);
        match self.family {
            Family::Example1 => {
                let v = self.x0 + self.frame.x1 * self.eps;
                exp_rot(&(v * t)) * exp_rot(&(self.p1() * g))
            }
            Family::Example2 | Family::Example3 | Family::Example4 => {
                let (m, c) = self.rotating_factor();
                let h = c * t + self.lambda * g;
                exp_rot(&(self.drift() * t)) * exp_rot(&(m * h))
            }
            Family::Example5 => {
                let v = self.x0 + self.frame.x1 * self.eps;
                exp_rot(&(v * (t + self.eps * g)))
            }
        }
    }
}

impl Scenario {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn params(&self) -> &ScenarioParams {
        &self.params
    }

    /// `X₀ = |X₀|·X₀¹`.
    pub fn x0(&self) -> AxisVector {
        self.frame.x0_dir * self.params.x0_norm
    }

    /// `T(λ) = 2π/|ω_bif + λ|`.
    pub fn period(&self, lambda: f64) -> f64 {
        TAU / (self.params.omega_bif + lambda).abs()
    }

    /// `k = round(|X₀|/ω_bif)`, the exponent of `ε` in Example 4.
    pub fn resonance_order(&self) -> i32 {
        (self.params.x0_norm / self.params.omega_bif).round() as i32
    }

    fn coefficients(&self, lambda: f64, mu: f64) -> Coefficients {
        Coefficients {
            family: self.family,
            frame: self.frame,
            x0: self.x0(),
            eps: lambda.sqrt(),
            lambda,
            omega_lambda: self.params.omega_bif + lambda,
            g: self.params.g,
            mu,
            k: self.resonance_order().max(1),
        }
    }

    /// `X^G(·, λ)` as a forcing signal; `mu` only affects Example 4.
    pub fn forcing(&self, mu: f64) -> ForcingSignal {
        let this = self.clone();
        let omega = self.params.omega_bif;
        ForcingSignal::new(
            move |t, lambda| this.coefficients(lambda, mu).forcing(t),
            move |lambda| TAU / (omega + lambda).abs(),
            self.frame.x0_dir,
        )
        .expect("frame directions are unit vectors")
    }

    /// Closed-form solution `A(t, λ[, μ])` with `A(0) = I`.
    pub fn closed_form(&self, t: f64, lambda: f64, mu: f64) -> Rotation {
        self.coefficients(lambda, mu).closed_form(t)
    }

    /// Closed-form primary frequency vector `X(λ)`, defined where the second
    /// closed-form factor returns to the identity at `T(λ)`.
    pub fn closed_form_frequency(&self, lambda: f64, mu: f64) -> Option<AxisVector> {
        let c = self.coefficients(lambda, mu);
        match self.family {
            Family::Example1 => Some(c.x0 + c.frame.x1 * c.eps),
            Family::Example2 | Family::Example3 | Family::Example4 => Some(c.drift()),
            Family::Example5 => None,
        }
    }
}

fn default_params(family: Family, case: Option<u8>) -> ScenarioParams {
    let (omega_bif, x0_norm) = match family {
        Family::Example1 => (20.0, 2.0),
        _ => (20.0, 20.0),
    };
    let (theta0, tip) = match case {
        Some(1) => (0.01, [0.0, 0.92, 2.85]),
        Some(2) => (0.02, [0.0, 0.92, 2.85]),
        Some(3) => (0.5, [0.44, 0.14, 2.96]),
        _ => (0.5, [0.0, 0.92, 2.85]),
    };
    ScenarioParams {
        omega_bif,
        x0_norm,
        r: 3.0,
        theta0,
        tip_x0: AxisVector::from(tip),
        g: GSpec::default(),
    }
}

/// Builds a named scenario with defaults, then applies `overrides`.
///
/// The tip reference point is projected radially onto the sphere of radius
/// `r`.
pub fn build(name: &str, overrides: &ScenarioOverrides) -> Result<Scenario> {
    let (family, case) = match name {
        "example1" => (Family::Example1, None),
        "example2" => (Family::Example2, None),
        "example3" => (Family::Example3, None),
        "example4" => (Family::Example4, None),
        "example5" => (Family::Example5, None),
        "case1" => (Family::Example1, Some(1)),
        "case2" => (Family::Example2, Some(2)),
        "case3" => (Family::Example3, Some(3)),
        _ => {
            return Err(Error::Config(format!(
                "unknown scenario `{name}`; valid names: {}",
                SCENARIO_NAMES.join(", ")
            )))
        }
    };
    let mut p = default_params(family, case);
    let o = overrides;
    if let Some(v) = o.omega_bif {
        p.omega_bif = v;
    }
    if let Some(v) = o.x0_norm {
        p.x0_norm = v;
    }
    if let Some(v) = o.r {
        p.r = v;
    }
    if let Some(v) = o.theta0 {
        p.theta0 = v;
    }
    if let Some(v) = o.tip_x0 {
        p.tip_x0 = AxisVector::from(v);
    }
    if let Some(v) = o.g {
        p.g = v;
    }
    let frame = match o.basis {
        Some(rows) => Frame::from_rows(rows)?,
        None => Frame::standard(),
    };

    let finite = |x: f64| x.is_finite();
    if !finite(p.omega_bif) || p.omega_bif <= 0.0 {
        return Err(Error::Config(format!(
            "omega_bif must be positive, got {}",
            p.omega_bif
        )));
    }
    if !finite(p.x0_norm) || p.x0_norm < 0.0 {
        return Err(Error::Config(format!(
            "x0_norm must be ≥ 0, got {}",
            p.x0_norm
        )));
    }
    if !finite(p.r) || p.r <= 0.0 {
        return Err(Error::Config(format!("r must be positive, got {}", p.r)));
    }
    if !finite(p.theta0) {
        return Err(Error::Config("theta0 must be finite".into()));
    }
    if !finite(p.g.amplitude) || p.g.harmonic == 0 {
        return Err(Error::Config(
            "g needs a finite amplitude and harmonic ≥ 1".into(),
        ));
    }
    let tip_norm = p.tip_x0.norm();
    if !(tip_norm > 0.0 && tip_norm.is_finite()) {
        return Err(Error::Config(
            "tip_x0 must be a nonzero finite point".into(),
        ));
    }
    p.tip_x0 *= p.r / tip_norm;

    Ok(Scenario {
        name: name.to_string(),
        family,
        frame,
        params: p,
    })
}

/// `max_t ‖A_integrated(t) − A_closed(t)‖_F` over `t_grid`.
pub fn verify_against_closed_form(
    s: &Scenario,
    lambda: f64,
    mu: f64,
    t_grid: &[f64],
    cfg: &IntegratorConfig,
) -> Result<f64> {
    let t_end = t_grid.iter().copied().fold(f64::NAN, f64::max);
    if !(t_end > 0.0) {
        return Err(Error::domain("time grid needs a positive time"));
    }
    let traj = integrate_group(&s.forcing(mu), lambda, t_end, cfg)?;
    let mut worst: f64 = 0.0;
    for &t in t_grid {
        let d = traj.eval_a(t)?.distance(&s.closed_form(t, lambda, mu));
        worst = worst.max(d);
    }
    Ok(worst)
}
