//! Exact-formula primitives on so(3) and SO(3).
//!
//! Axis vectors and skew matrices are related by `hat(e_z) = L_z`, so
//! `exp_rot(θ·n)` is the right-handed rotation by `θ` about the unit axis `n`.
//! Logarithms land in the ball model `D`: the closed ball of radius `π` with
//! antipodal boundary points identified (see [`BallClass`]).
//!
//! Every trigonometric coefficient with a removable singularity at zero is
//! evaluated by a truncated Taylor series close to the origin. Coefficients
//! whose closed form suffers cancellation switch over at a larger radius.

use std::f64::consts::{PI, TAU};
use std::fmt;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// Element of so(3) in vector form (angular velocity or rotation increment).
pub type AxisVector = Vector3<f64>;

/// Below this norm, non-cancelling coefficients use their series.
pub const SERIES_RADIUS: f64 = 1e-4;
/// Below this norm, coefficients with catastrophic cancellation use their series.
pub const CANCELLATION_SERIES_RADIUS: f64 = 0.05;

/// Orthogonality / determinant tolerance for a valid [`Rotation`].
pub const ROTATION_TOL: f64 = 1e-12;
const SKEW_TOL: f64 = 1e-10;
const UNIT_TOL: f64 = 1e-10;
/// Norm slack above `π` that is still accepted (and snapped) by [`BallClass`].
pub const BALL_SLACK: f64 = 1e-12;
/// Angles this close to `π` are treated with the symmetric-part logarithm.
const NEAR_PI: f64 = 1e-6;
/// `|cos|` of the angle to the reference direction below which a direction is
/// considered to lie on the equator of the reference hemisphere.
pub const EQUATOR_TOL: f64 = 1e-6;
/// dexpinv is rejected within this distance of `2π`.
pub const DEXPINV_MARGIN: f64 = 1e-6;

#[rustfmt::skip]
pub fn hat(v: &AxisVector) -> Matrix3<f64> {
    Matrix3::new(
         0.0, -v.z,  v.y,
         v.z,  0.0, -v.x,
        -v.y,  v.x,  0.0,
    )
}

/// Inverse of [`hat`]. Fails if `m` is not skew-symmetric within `1e-10`.
pub fn vee(m: &Matrix3<f64>) -> Result<AxisVector> {
    let defect = (m + m.transpose()).norm();
    if !defect.is_finite() || defect > SKEW_TOL * (1.0 + m.norm()) {
        return Err(Error::domain(format!(
            "vee of a non-skew matrix (‖m + mᵀ‖ = {defect:e})"
        )));
    }
    Ok(vee_unchecked(m))
}

/// Axis vector of the skew part of `m`, without validation.
pub(crate) fn vee_unchecked(m: &Matrix3<f64>) -> AxisVector {
    Vector3::new(
        0.5 * (m[(2, 1)] - m[(1, 2)]),
        0.5 * (m[(0, 2)] - m[(2, 0)]),
        0.5 * (m[(1, 0)] - m[(0, 1)]),
    )
}

/// The infinitesimal generators `L_x`, `L_y`, `L_z`.
pub fn generators() -> [Matrix3<f64>; 3] {
    [hat(&Vector3::x()), hat(&Vector3::y()), hat(&Vector3::z())]
}

/// Proper orthogonal 3×3 matrix.
#[derive(Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Validates `m` as a rotation. Drift in orthogonality above
    /// [`ROTATION_TOL`] (but below `1e-6`) is repaired by projecting onto the
    /// nearest rotation; anything worse is rejected.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::domain("rotation matrix has non-finite entries"));
        }
        let defect = orthogonality_defect(&m);
        let det = m.determinant();
        if defect <= ROTATION_TOL && (det - 1.0).abs() <= ROTATION_TOL {
            return Ok(Rotation(m));
        }
        if defect > 1e-6 || det <= 0.0 {
            return Err(Error::domain(format!(
                "matrix is not a rotation (‖mᵀm − I‖ = {defect:e}, det = {det})"
            )));
        }
        Ok(Rotation(nearest_rotation(&m)))
    }

    /// Elementary rotation about the x axis, `e^{L_x θ}`.
    pub fn about_x(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        #[rustfmt::skip]
        let m = Matrix3::new(
            1.0, 0.0, 0.0,
            0.0,   c,  -s,
            0.0,   s,   c,
        );
        Rotation(m)
    }

    /// Elementary rotation about the z axis, `e^{L_z θ}`.
    pub fn about_z(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        #[rustfmt::skip]
        let m = Matrix3::new(
              c,  -s, 0.0,
              s,   c, 0.0,
            0.0, 0.0, 1.0,
        );
        Rotation(m)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn into_inner(self) -> Matrix3<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    pub fn inverse(&self) -> Self {
        self.transpose()
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    /// `‖mᵀm − I‖_F`.
    pub fn orthogonality_defect(&self) -> f64 {
        orthogonality_defect(&self.0)
    }

    /// Frobenius distance to another rotation.
    pub fn distance(&self, other: &Rotation) -> f64 {
        (self.0 - other.0).norm()
    }

    /// Conjugates an axis vector: the vector of `R·hat(v)·Rᵀ`.
    pub fn conjugate(&self, v: &AxisVector) -> AxisVector {
        self.0 * v
    }
}

impl std::ops::Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl std::ops::Mul<&Rotation> for &Rotation {
    type Output = Rotation;

    fn mul(self, rhs: &Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl fmt::Debug for Rotation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Rotation{:?}", self.0.as_slice())
    }
}

fn orthogonality_defect(m: &Matrix3<f64>) -> f64 {
    (m.transpose() * m - Matrix3::identity()).norm()
}

fn nearest_rotation(m: &Matrix3<f64>) -> Matrix3<f64> {
    let svd = m.svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    let mut r = u * v_t;
    if r.determinant() < 0.0 {
        let mut u = u;
        u.column_mut(2).neg_mut();
        r = u * v_t;
    }
    r
}

/// `sin θ / θ`.
fn sinc(theta: f64) -> f64 {
    if theta < SERIES_RADIUS {
        let t2 = theta * theta;
        1.0 - t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    } else {
        theta.sin() / theta
    }
}

/// `2 sin²(θ/2) / θ² = (1 − cos θ) / θ²`.
fn versine_coeff(theta: f64) -> f64 {
    if theta < SERIES_RADIUS {
        let t2 = theta * theta;
        0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0
    } else {
        let s = (0.5 * theta).sin();
        2.0 * s * s / (theta * theta)
    }
}

/// `(θ − sin θ) / θ³`.
fn third_coeff(theta: f64) -> f64 {
    if theta < CANCELLATION_SERIES_RADIUS {
        let t2 = theta * theta;
        1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0 - t2 * t2 * t2 / 362_880.0
    } else {
        (theta - theta.sin()) / (theta * theta * theta)
    }
}

/// Quadratic coefficient of dexpinv:
/// `1/θ² − cos(θ/2) / (2 sin(θ/2) θ)`, tending to `1/12` at zero.
pub fn dexpinv_quadratic_coeff(theta: f64) -> f64 {
    if theta < CANCELLATION_SERIES_RADIUS {
        let t2 = theta * theta;
        1.0 / 12.0 + t2 / 720.0 + t2 * t2 / 30240.0 + t2 * t2 * t2 / 1_209_600.0
    } else {
        let half = 0.5 * theta;
        1.0 / (theta * theta) - half.cos() / (2.0 * half.sin() * theta)
    }
}

/// Rodrigues' formula.
pub fn exp_rot(v: &AxisVector) -> Rotation {
    let theta = v.norm();
    let k = hat(v);
    Rotation(Matrix3::identity() + k * sinc(theta) + k * k * versine_coeff(theta))
}

/// Rotation angle in `[0, π]` and the skew part `sin θ · n` of `r`.
fn angle_and_skew(r: &Matrix3<f64>) -> (f64, AxisVector) {
    let w = vee_unchecked(r);
    let cos = ((r.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
    (w.norm().atan2(cos), w)
}

/// Logarithm of a rotation into the ball model.
pub fn log_rot(r: &Rotation) -> BallClass {
    let m = &r.0;
    let (theta, w) = angle_and_skew(m);
    if theta < PI - NEAR_PI {
        // w = sin θ · n
        let scale = if theta < SERIES_RADIUS {
            let t2 = theta * theta;
            1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0
        } else {
            theta / w.norm()
        };
        return BallClass::from_vector_clamped(w * scale);
    }

    // (R + Rᵀ)/4 + I/2 = cos²(θ/2)·I + sin²(θ/2)·n nᵀ
    let cos = theta.cos();
    let iso = 0.5 * (1.0 + cos);
    let aniso = 0.5 * (1.0 - cos);
    let b = (m + m.transpose()) * 0.25 + Matrix3::identity() * 0.5;
    let i = (0..3)
        .max_by(|&a, &c| b[(a, a)].total_cmp(&b[(c, c)]))
        .unwrap();
    let ni = ((b[(i, i)] - iso) / aniso).max(0.0).sqrt();
    let mut n = Vector3::zeros();
    for j in 0..3 {
        n[j] = if j == i { ni } else { b[(i, j)] / (aniso * ni) };
    }
    n.normalize_mut();
    let dot = n.dot(&w);
    if dot.abs() > 1e-14 {
        if dot < 0.0 {
            n = -n;
        }
    } else {
        n = canonical_sign(n);
    }
    BallClass::from_vector_clamped(n * theta)
}

/// Flips `v` so that its first nonzero component is positive.
fn canonical_sign(v: AxisVector) -> AxisVector {
    match v.iter().find(|x| x.abs() > 1e-15) {
        Some(&x) if x < 0.0 => -v,
        _ => v,
    }
}

/// Equivalence class in the ball model `D`: `|v| ≤ π`, antipodal boundary
/// points identified. Boundary representatives are stored with their first
/// nonzero component positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BallClass(AxisVector);

impl BallClass {
    pub fn zero() -> Self {
        BallClass(Vector3::zeros())
    }

    /// Wraps a vector that already lies in the closed ball (up to
    /// [`BALL_SLACK`], which is snapped back to `π`).
    pub fn new(v: AxisVector) -> Result<Self> {
        let n = v.norm();
        if !n.is_finite() {
            return Err(Error::domain("ball class from a non-finite vector"));
        }
        if n > PI + BALL_SLACK {
            return Err(Error::domain(format!(
                "|v| = {n} exceeds π; use BallClass::reduce"
            )));
        }
        Ok(Self::from_vector_clamped(v))
    }

    fn from_vector_clamped(v: AxisVector) -> Self {
        let n = v.norm();
        if n >= PI {
            BallClass(canonical_sign(v * (PI / n)))
        } else {
            BallClass(v)
        }
    }

    /// Class of `exp_rot(v)` for an arbitrary vector, by reducing the angle
    /// modulo `2π` along the axis.
    pub fn reduce(v: &AxisVector) -> Self {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Self::zero();
        }
        let r = n.rem_euclid(TAU);
        let signed = if r > PI { r - TAU } else { r };
        Self::from_vector_clamped(v * (signed / n))
    }

    pub fn vector(&self) -> AxisVector {
        self.0
    }

    /// Rotation angle `|v|` in `[0, π]`.
    pub fn angle(&self) -> f64 {
        self.0.norm()
    }

    pub fn rotation(&self) -> Rotation {
        exp_rot(&self.0)
    }

    pub fn angle_axis(&self) -> AngleAxis {
        let angle = self.angle();
        if angle == 0.0 {
            AngleAxis {
                angle,
                axis: Vector3::z(),
            }
        } else {
            AngleAxis {
                angle,
                axis: self.0 / angle,
            }
        }
    }

    /// Distance in the quotient: the shorter of the direct path and the path
    /// through the identified boundary.
    pub fn distance(&self, other: &BallClass) -> f64 {
        let (u, w) = (self.0, other.0);
        let direct = (u - w).norm();
        let through = (u + w).norm() + (PI - u.norm()).max(0.0) + (PI - w.norm()).max(0.0);
        direct.min(through)
    }

    pub fn approx_eq(&self, other: &BallClass, tol: f64) -> bool {
        self.distance(other) <= tol
    }
}

/// Rotation angle in `[0, π]` with a unit axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AngleAxis {
    pub angle: f64,
    pub axis: AxisVector,
}

impl AngleAxis {
    pub fn new(angle: f64, axis: AxisVector) -> Result<Self> {
        if !(0.0..=PI + BALL_SLACK).contains(&angle) {
            return Err(Error::domain(format!("angle {angle} outside [0, π]")));
        }
        if angle > 0.0 && (axis.norm() - 1.0).abs() >= 1e-12 {
            return Err(Error::domain("axis is not a unit vector"));
        }
        Ok(AngleAxis { angle, axis })
    }

    pub fn to_class(&self) -> BallClass {
        BallClass::from_vector_clamped(self.axis * self.angle)
    }
}

fn check_unit(dir: &AxisVector, what: &str) -> Result<()> {
    if (dir.norm() - 1.0).abs() > UNIT_TOL {
        return Err(Error::domain(format!(
            "{what} must be a unit vector (|v| = {})",
            dir.norm()
        )));
    }
    Ok(())
}

/// Rotation taking `pole` to `e_z` about `pole × e_z`. For `pole = −e_z`
/// the half turn about `e_x` is used.
fn rotation_to_north(pole: &AxisVector) -> Matrix3<f64> {
    let z = Vector3::z();
    let axis = pole.cross(&z);
    let s = axis.norm();
    let c = pole.dot(&z);
    if s < 1e-15 {
        return if c > 0.0 {
            Matrix3::identity()
        } else {
            exp_rot(&(Vector3::x() * PI)).0
        };
    }
    exp_rot(&(axis * (s.atan2(c) / s))).0
}

/// Membership of the unit direction `p` in the north hemisphere
/// `N = {z > 0} ∪ {z = 0, x ∈ [−1, 1), y ∈ [0, 1]}`, measured in the frame
/// obtained by rotating `pole` to `e_z`.
pub fn in_north_hemisphere(p: &AxisVector, pole: &AxisVector) -> bool {
    let q = rotation_to_north(pole) * p;
    const TOL: f64 = 1e-12;
    if q.z.abs() > TOL {
        return q.z > 0.0;
    }
    if q.y.abs() > TOL {
        return q.y > 0.0;
    }
    q.x < 0.0
}

/// Selects the so(3) representative of `c` whose direction lies in the closed
/// hemisphere around `ref_dir`. Representatives in the opposite open
/// hemisphere are replaced by `(1 − 2π/|Y|)·Y`, which has the same
/// exponential.
pub fn q_map(c: &BallClass, ref_dir: &AxisVector) -> Result<AxisVector> {
    check_unit(ref_dir, "reference direction")?;
    let y = c.vector();
    let n = y.norm();
    if n == 0.0 {
        return Ok(y);
    }
    if y.dot(ref_dir) / n >= -EQUATOR_TOL {
        Ok(y)
    } else {
        Ok(y * (1.0 - TAU / n))
    }
}

/// `dexp` operator in matrix form:
/// `I + ((cos|Z| − 1)/|Z|²)·hat(Z) + ((|Z| − sin|Z|)/|Z|³)·hat(Z)²`.
pub fn dexp_op(z: &AxisVector) -> Matrix3<f64> {
    let theta = z.norm();
    let k = hat(z);
    Matrix3::identity() - k * versine_coeff(theta) + k * k * third_coeff(theta)
}

/// Inverse of [`dexp_op`]: `I + ½·hat(Z) + c₂(|Z|)·hat(Z)²`.
pub fn dexpinv_op(z: &AxisVector) -> Result<Matrix3<f64>> {
    let theta = z.norm();
    if !theta.is_finite() || theta >= TAU - DEXPINV_MARGIN {
        return Err(Error::Singularity { norm: theta });
    }
    let k = hat(z);
    Ok(Matrix3::identity() + k * 0.5 + k * k * dexpinv_quadratic_coeff(theta))
}

/// `dexpinv_op(z) · x` without forming the matrix; the caller keeps `|z| < 2π`.
pub(crate) fn dexpinv_apply(z: &AxisVector, x: &AxisVector) -> AxisVector {
    let zx = z.cross(x);
    x + zx * 0.5 + z.cross(&zx) * dexpinv_quadratic_coeff(z.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ortho_ok(r: &Rotation) -> bool {
        r.orthogonality_defect() < 1e-12 && (r.matrix().determinant() - 1.0).abs() < 1e-12
    }

    #[test]
    fn hat_of_ez_is_lz() {
        #[rustfmt::skip]
        let lz = Matrix3::new(
            0.0, -1.0, 0.0,
            1.0,  0.0, 0.0,
            0.0,  0.0, 0.0,
        );
        assert_eq!(hat(&Vector3::z()), lz);
    }

    #[test]
    fn vee_round_trip_and_bracket() {
        let v = Vector3::new(1.0, 2.0, 3.0);
        assert_eq!(vee(&hat(&v)).unwrap(), v);
        let (a, b) = (hat(&Vector3::x()), hat(&Vector3::y()));
        assert_eq!(vee(&(a * b - b * a)).unwrap(), Vector3::z());
    }

    #[test]
    fn vee_rejects_non_skew() {
        let m = Matrix3::identity();
        assert!(matches!(vee(&m), Err(Error::Domain(_))));
    }

    #[test]
    fn exp_examples() {
        assert_eq!(exp_rot(&Vector3::zeros()).into_inner(), Matrix3::identity());
        let q = exp_rot(&Vector3::new(0.0, 0.0, PI / 2.0));
        #[rustfmt::skip]
        let expected = Matrix3::new(
            0.0, -1.0, 0.0,
            1.0,  0.0, 0.0,
            0.0,  0.0, 1.0,
        );
        assert_relative_eq!(q.into_inner(), expected, epsilon = 1e-15);

        let n = Vector3::new(1.0, 1.0, 1.0).normalize();
        let half = exp_rot(&(n * PI));
        let expected = n * n.transpose() * 2.0 - Matrix3::identity();
        assert_relative_eq!(half.into_inner(), expected, epsilon = 1e-15);
    }

    #[test]
    fn series_and_closed_forms_agree_at_switch_radius() {
        let x = SERIES_RADIUS * (1.0 - 1e-12);
        assert_relative_eq!(sinc(x), x.sin() / x, epsilon = 1e-15);
        let s = (0.5 * x).sin();
        assert_relative_eq!(versine_coeff(x), 2.0 * s * s / (x * x), epsilon = 1e-12);
        let r = CANCELLATION_SERIES_RADIUS * (1.0 - 1e-12);
        let half = 0.5 * r;
        assert_relative_eq!(
            dexpinv_quadratic_coeff(r),
            1.0 / (r * r) - half.cos() / (2.0 * half.sin() * r),
            epsilon = 1e-12
        );
        assert_relative_eq!(third_coeff(r), (r - r.sin()) / (r * r * r), epsilon = 1e-12);
    }

    #[test]
    fn log_examples() {
        assert_eq!(log_rot(&Rotation::identity()).vector(), Vector3::zeros());
        let c = log_rot(&Rotation::about_z(PI / 2.0));
        assert_relative_eq!(
            c.vector(),
            Vector3::new(0.0, 0.0, PI / 2.0),
            epsilon = 1e-15
        );

        let flip =
            Rotation::from_matrix(Matrix3::from_diagonal(&Vector3::new(1.0, -1.0, -1.0))).unwrap();
        let c = log_rot(&flip);
        assert_relative_eq!(c.vector(), Vector3::new(PI, 0.0, 0.0), epsilon = 1e-15);
        let antipode = BallClass::new(Vector3::new(-PI, 0.0, 0.0)).unwrap();
        assert!(c.approx_eq(&antipode, 1e-15));
    }

    #[test]
    fn log_near_half_turn() {
        let n = Vector3::new(0.3, -0.5, 0.8).normalize();
        for eps in [0.0, 1e-12, 1e-9, 1e-7, 1e-6, 2e-6, 1e-4] {
            let v = n * (PI - eps);
            let c = log_rot(&exp_rot(&v));
            assert!(
                c.approx_eq(&BallClass::new(v).unwrap(), 1e-9),
                "eps {eps}: {:?} vs {:?}",
                c.vector(),
                v
            );
        }
    }

    #[test]
    fn exp_identity_iff_multiple_of_tau() {
        let n = Vector3::new(1.0, -2.0, 0.5).normalize();
        for k in [0.0, TAU, 2.0 * TAU] {
            assert!(exp_rot(&(n * k)).distance(&Rotation::identity()) < 1e-12);
        }
        for a in [PI, 1.0, 5.0] {
            assert!(exp_rot(&(n * a)).distance(&Rotation::identity()) > 1e-3);
        }
    }

    #[test]
    fn ball_class_reduce_and_bounds() {
        let v = Vector3::new(0.0, 0.0, 1.5 * PI);
        let c = BallClass::reduce(&v);
        assert_relative_eq!(
            c.vector(),
            Vector3::new(0.0, 0.0, -0.5 * PI),
            epsilon = 1e-14
        );
        assert!(BallClass::new(Vector3::new(4.0, 0.0, 0.0)).is_err());
        let snapped = BallClass::new(Vector3::new(PI + 5e-13, 0.0, 0.0)).unwrap();
        assert_eq!(snapped.angle(), PI);
    }

    #[test]
    fn q_map_examples() {
        let ez = Vector3::z();
        let c = BallClass::new(Vector3::new(0.0, 0.0, 0.5)).unwrap();
        assert_eq!(q_map(&c, &ez).unwrap(), Vector3::new(0.0, 0.0, 0.5));
        let c = BallClass::new(Vector3::new(0.0, 0.0, -PI / 2.0)).unwrap();
        assert_relative_eq!(
            q_map(&c, &ez).unwrap(),
            Vector3::new(0.0, 0.0, 1.5 * PI),
            epsilon = 1e-14
        );
        assert_eq!(
            q_map(&BallClass::zero(), &Vector3::x()).unwrap(),
            Vector3::zeros()
        );
        assert!(q_map(&c, &Vector3::new(0.0, 0.0, 2.0)).is_err());
    }

    #[test]
    fn north_hemisphere_boundary() {
        let ez = Vector3::z();
        assert!(in_north_hemisphere(
            &Vector3::new(0.0, 0.1, 0.9).normalize(),
            &ez
        ));
        assert!(!in_north_hemisphere(
            &Vector3::new(0.0, 0.1, -0.9).normalize(),
            &ez
        ));
        // equator: y ≥ 0 and x ≠ 1
        assert!(in_north_hemisphere(&Vector3::new(-1.0, 0.0, 0.0), &ez));
        assert!(!in_north_hemisphere(&Vector3::new(1.0, 0.0, 0.0), &ez));
        assert!(in_north_hemisphere(&Vector3::new(0.0, 1.0, 0.0), &ez));
        assert!(!in_north_hemisphere(&Vector3::new(0.0, -1.0, 0.0), &ez));
        // pole rotated: −e_z as pole swaps the caps
        assert!(in_north_hemisphere(
            &Vector3::new(0.1, 0.0, -0.9).normalize(),
            &-ez
        ));
    }

    #[test]
    fn dexp_limits() {
        let z = Vector3::zeros();
        assert_eq!(dexp_op(&z), Matrix3::identity());
        assert_eq!(dexpinv_op(&z).unwrap(), Matrix3::identity());
    }

    #[test]
    fn dexpinv_quadratic_coeff_limit() {
        // six-term Taylor expansion of 1/θ² − (θ/2)cot(θ/2)/θ²
        let taylor = |t: f64| {
            let t2 = t * t;
            1.0 / 12.0
                + t2 / 720.0
                + t2 * t2 / 30240.0
                + t2.powi(3) / 1_209_600.0
                + t2.powi(4) / 47_900_160.0
                + t2.powi(5) * 691.0 / 1_307_674_368_000.0
        };
        assert!((dexpinv_quadratic_coeff(1e-6) - 1.0 / 12.0).abs() < 1e-9);
        assert!((dexpinv_quadratic_coeff(1e-6) - taylor(1e-6)).abs() < 1e-15);
        assert!((dexpinv_quadratic_coeff(0.5) - taylor(0.5)).abs() < 1e-12);
    }

    #[test]
    fn dexpinv_singular_near_tau() {
        let z = Vector3::new(0.0, TAU - 1e-7, 0.0);
        assert!(matches!(dexpinv_op(&z), Err(Error::Singularity { .. })));
        assert!(dexpinv_op(&Vector3::new(0.0, TAU - 1e-3, 0.0)).is_ok());
    }

    #[test]
    fn dexpinv_apply_matches_matrix() {
        let z = Vector3::new(0.4, -1.1, 2.0);
        let x = Vector3::new(1.0, 2.0, -0.5);
        assert_relative_eq!(
            dexpinv_apply(&z, &x),
            dexpinv_op(&z).unwrap() * x,
            epsilon = 1e-14
        );
    }

    #[test]
    fn rotation_repairs_small_drift() {
        let mut m = exp_rot(&Vector3::new(0.2, 0.3, -0.1)).into_inner();
        m[(0, 0)] += 1e-9;
        let r = Rotation::from_matrix(m).unwrap();
        assert!(ortho_ok(&r));
        m[(0, 0)] += 0.1;
        assert!(Rotation::from_matrix(m).is_err());
    }

    fn vec3(max: f64) -> impl Strategy<Value = AxisVector> {
        (-max..max, -max..max, -max..max).prop_map(|(x, y, z)| Vector3::new(x, y, z))
    }

    proptest! {
        #[test]
        fn exp_is_rotation(v in vec3(10.0)) {
            prop_assert!(ortho_ok(&exp_rot(&v)));
        }

        #[test]
        fn log_inverts_exp(v in vec3(2.0)) {
            prop_assume!(v.norm() <= PI - 1e-3);
            let c = log_rot(&exp_rot(&v));
            prop_assert!((c.vector() - v).norm() < 1e-10);
        }

        #[test]
        fn exp_inverts_log(v in vec3(12.0)) {
            let r = exp_rot(&v);
            prop_assert!(log_rot(&r).rotation().distance(&r) < 1e-10);
        }

        #[test]
        fn hat_power_identities(v in vec3(5.0)) {
            let k = hat(&v);
            let n2 = v.norm_squared();
            let k2 = k * k;
            prop_assert!((k2 * k + k * n2).norm() < 1e-12 * (1.0 + n2 * v.norm()));
            prop_assert!((k2 * k2 + k2 * n2).norm() < 1e-12 * (1.0 + n2 * n2));
        }

        #[test]
        fn conjugation_by_rotation(v in vec3(3.0), a in vec3(3.0)) {
            let r = exp_rot(&a);
            let conj = r.matrix() * hat(&v) * r.matrix().transpose();
            let w = vee(&conj).unwrap();
            prop_assert!((w - r.apply(&v)).norm() < 1e-12 * (1.0 + v.norm()));
            prop_assert!((conj.norm() - hat(&v).norm()).abs() < 1e-12 * (1.0 + v.norm()));
        }

        #[test]
        fn dexpinv_inverts_dexp(v in vec3(3.5)) {
            prop_assume!(v.norm() < TAU - 0.1);
            let p = dexpinv_op(&v).unwrap() * dexp_op(&v);
            prop_assert!((p - Matrix3::identity()).norm() < 1e-10);
        }

        #[test]
        fn q_map_preserves_exponential(v in vec3(2.0), r in vec3(1.0)) {
            prop_assume!(r.norm() > 1e-3 && v.norm() <= PI);
            let c = BallClass::new(v).unwrap();
            let y = q_map(&c, &r.normalize()).unwrap();
            prop_assert!(exp_rot(&y).distance(&c.rotation()) < 1e-12);
        }
    }
}
