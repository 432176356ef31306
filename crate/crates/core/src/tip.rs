//! Tip motion `x_tip(t) = A(0)⁻¹A(t)·x₀` on the sphere `rS²` and circle
//! fitting of sampled tip positions.

use nalgebra::{Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::flow::GroupTrajectory;
use crate::so3::{in_north_hemisphere, AxisVector};

const SPHERE_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct TipTrack {
    pub r: f64,
    pub x0: AxisVector,
    pub samples: Vec<(f64, AxisVector)>,
    /// Tip positions at `t = i·T`, `i = 0, 1, …` while `i·T ≤ t_end`.
    pub period_samples: Vec<AxisVector>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CircleFit {
    pub axis: AxisVector,
    /// Signed distance of the circle plane from the origin along `axis`.
    pub height: f64,
    pub radius: f64,
    pub rms_residual: f64,
}

pub fn tip_trajectory(
    traj: &GroupTrajectory,
    x0: &AxisVector,
    r: f64,
    sample_times: &[f64],
    period: Option<f64>,
) -> Result<TipTrack> {
    if !(r > 0.0) {
        return Err(Error::domain(format!(
            "sphere radius must be positive, got {r}"
        )));
    }
    if (x0.norm() - r).abs() > SPHERE_TOL * r {
        return Err(Error::domain(format!(
            "x0 has norm {} but the sphere radius is {r}",
            x0.norm()
        )));
    }
    let a0_inv = traj.eval_a(0.0)?.inverse();
    let tip = |t: f64| -> Result<AxisVector> { Ok((a0_inv * traj.eval_a(t)?).apply(x0)) };
    let samples = sample_times
        .iter()
        .map(|&t| Ok((t, tip(t)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut period_samples = Vec::new();
    if let Some(p) = period {
        if !(p > 0.0) {
            return Err(Error::domain(format!("period must be positive, got {p}")));
        }
        let n = (traj.t_end() / p * (1.0 + 1e-12)).floor() as usize;
        for i in 0..=n {
            period_samples.push(tip((i as f64 * p).min(traj.t_end()))?);
        }
    }
    Ok(TipTrack {
        r,
        x0: *x0,
        samples,
        period_samples,
    })
}

/// Plane fit through the centroid with normal along the smallest-variance
/// direction. The axis is oriented into the north hemisphere of `reference`
/// (`e_z` when absent).
pub fn fit_circle(points: &[AxisVector], reference: Option<&AxisVector>) -> Result<CircleFit> {
    if points.len() < 3 {
        return Err(Error::Fit(format!(
            "need at least 3 points, got {}",
            points.len()
        )));
    }
    let n = points.len() as f64;
    let centroid = points.iter().sum::<AxisVector>() / n;
    let mut cov = Matrix3::zeros();
    let mut scale = 0.0;
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
        scale += p.norm_squared();
    }
    cov /= n;
    scale /= n;

    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let (l_mid, l_max) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if l_max <= 1e-24 * scale.max(f64::MIN_POSITIVE) || l_mid <= 1e-12 * l_max {
        return Err(Error::Fit(
            "points are coincident or collinear; the plane is undetermined".into(),
        ));
    }
    let mut axis: AxisVector = eig.eigenvectors.column(order[0]).into_owned().normalize();
    let pole = reference.copied().unwrap_or_else(AxisVector::z);
    let pole_norm = pole.norm();
    if !(pole_norm > 0.0) {
        return Err(Error::Fit("reference direction must be nonzero".into()));
    }
    if !in_north_hemisphere(&axis, &(pole / pole_norm)) {
        axis = -axis;
    }

    let height = centroid.dot(&axis);
    let mut sq = 0.0;
    let mut radius = 0.0;
    for p in points {
        let h = p.dot(&axis);
        sq += (h - height).powi(2);
        radius += (p - axis * h).norm();
    }
    Ok(CircleFit {
        axis,
        height,
        radius: radius / n,
        rms_residual: (sq / n).sqrt(),
    })
}
