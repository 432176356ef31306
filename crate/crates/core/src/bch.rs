//! Closed-form Baker–Campbell–Hausdorff composition in so(3).
//!
//! `bch(X, Y)` is the ball-model class `d*(e^X e^Y)`, written as
//! `α·X + β·Y + γ·(X × Y)`. The coefficients come from the half-angle
//! (unit quaternion) product of the two exponentials:
//!
//! ```text
//! e  = cos(|X|/2)cos(|Y|/2) − sin(|X|/2)sin(|Y|/2)cos∠(X,Y)
//! a₁ = sin(|X|/2)cos(|Y|/2)    b₁ = sin(|Y|/2)cos(|X|/2)    c₁ = sin(|X|/2)sin(|Y|/2)
//! d₁ = |a₁X̂ + b₁Ŷ + c₁X̂×Ŷ|     d = 2·d₁·|e| = sin θ     s = sgn(e)
//! ```
//!
//! where `θ` is the rotation angle of the product. The scale `k` is
//! `s·arcsin(d)/d₁` while the product's trace is positive (θ < π/2) and
//! `s·(π − arcsin(d))/d₁` otherwise.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};
use crate::so3::{exp_rot, log_rot, AxisVector, BallClass};

/// Branch tolerance on the product rotation.
pub const BCH_TOL: f64 = 1e-10;
/// Below this `d₁` the generic formula is replaced by the matrix logarithm.
const D1_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BchBranch {
    /// `cos θ > tol`: the product has eigenvalues with positive real parts.
    GenericPositive,
    /// `cos θ ≤ tol` and `θ < π − tol`.
    GenericNonPositive,
    /// `θ ≥ π − tol`, product ≠ I.
    HalfTurnProduct,
    /// `e^X e^Y = I` within tolerance.
    IdentityProduct,
}

impl BchBranch {
    pub fn name(&self) -> &'static str {
        match self {
            BchBranch::GenericPositive => "GenericPositive",
            BchBranch::GenericNonPositive => "GenericNonPositive",
            BchBranch::HalfTurnProduct => "HalfTurnProduct",
            BchBranch::IdentityProduct => "IdentityProduct",
        }
    }
}

/// All intermediates of one closed-form evaluation.
#[derive(Clone, Copy, Debug)]
pub struct BchBreakdown {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub branch: BchBranch,
    pub e: f64,
    pub a1: f64,
    pub b1: f64,
    pub c1: f64,
    pub d1: f64,
    pub d: f64,
    pub s: f64,
    pub k: f64,
    /// Rotation angle of the product, in `[0, π]`.
    pub product_angle: f64,
    /// Set when a generic branch met `d₁ < 1e-12` and fell back to the
    /// matrix logarithm.
    pub fallback: bool,
    pub result: BallClass,
}

impl BchBreakdown {
    /// `α·X + β·Y + γ·(X × Y)`.
    pub fn combination(&self, x: &AxisVector, y: &AxisVector) -> AxisVector {
        x * self.alpha + y * self.beta + x.cross(y) * self.gamma
    }
}

fn unit_or_zero(v: &AxisVector) -> (f64, AxisVector) {
    let n = v.norm();
    if n > 0.0 {
        (n, v / n)
    } else {
        (0.0, AxisVector::zeros())
    }
}

pub fn bch_breakdown(x: &AxisVector, y: &AxisVector) -> BchBreakdown {
    let (nx, xh) = unit_or_zero(x);
    let (ny, yh) = unit_or_zero(y);
    let (sx, cx) = (0.5 * nx).sin_cos();
    let (sy, cy) = (0.5 * ny).sin_cos();
    let cos_angle = xh.dot(&yh);

    let e = cx * cy - sx * sy * cos_angle;
    let a1 = sx * cy;
    let b1 = sy * cx;
    let c1 = sx * sy;
    // d₁² = a₁² + b₁² + 2a₁b₁cos∠ + c₁²sin²∠, taken as a vector norm to
    // avoid cancellation when the product is close to the identity
    let d1 = (xh * a1 + yh * b1 + xh.cross(&yh) * c1).norm();
    let s = if e >= 0.0 { 1.0 } else { -1.0 };
    let d = (2.0 * d1 * e.abs()).min(1.0);
    // cos θ = e² − d₁², |cos θ| = sqrt(1 − d²)
    let cos_prod = e * e - d1 * d1;
    let product_angle = 2.0 * d1.atan2(e.abs());

    let h_alpha = if nx > 0.0 { a1 / nx } else { cy };
    let h_beta = if ny > 0.0 { b1 / ny } else { cx };
    let h_gamma = match (nx > 0.0, ny > 0.0) {
        (true, true) => c1 / (nx * ny),
        (false, true) => sy / ny,
        (true, false) => sx / nx,
        (false, false) => 1.0,
    };

    let product_log = || log_rot(&(exp_rot(x) * exp_rot(y)));

    let (branch, k, result, fallback) = if 2.0 * SQRT_2 * d1 < BCH_TOL {
        // ‖e^X e^Y − I‖_F = 2√2·d₁
        (BchBranch::IdentityProduct, s, BallClass::zero(), false)
    } else if product_angle >= PI - BCH_TOL {
        (BchBranch::HalfTurnProduct, PI, product_log(), false)
    } else {
        // arcsin(d) evaluated as atan2(d, |cos θ|), exact near d = 1
        let asin_d = d.atan2(cos_prod.abs());
        let (branch, k) = if cos_prod > BCH_TOL {
            (BchBranch::GenericPositive, s * asin_d / d1)
        } else {
            (BchBranch::GenericNonPositive, s * (PI - asin_d) / d1)
        };
        if d1 < D1_FLOOR {
            (branch, k, product_log(), true)
        } else {
            let v = x * (k * h_alpha) + y * (k * h_beta) + x.cross(y) * (k * h_gamma);
            (branch, k, BallClass::reduce(&v), false)
        }
    };

    BchBreakdown {
        alpha: k * h_alpha,
        beta: k * h_beta,
        gamma: k * h_gamma,
        branch,
        e,
        a1,
        b1,
        c1,
        d1,
        d,
        s,
        k,
        product_angle,
        fallback,
        result,
    }
}

/// `d*(e^X e^Y)` in the ball model.
pub fn bch(x: &AxisVector, y: &AxisVector) -> BallClass {
    bch_breakdown(x, y).result
}

/// Left fold of [`bch`]: the class of `e^{P₁} e^{P₂} ⋯ e^{Pₙ}`.
pub fn bch_fold(parts: &[AxisVector]) -> Result<BallClass> {
    let (first, rest) = parts
        .split_first()
        .ok_or_else(|| Error::domain("bch_fold needs at least one element"))?;
    Ok(rest
        .iter()
        .fold(BallClass::reduce(first), |acc, p| bch(&acc.vector(), p)))
}
