//! Subcommand bodies. Each returns its report so tests can inspect it; file
//! output goes under `RunConfig::out`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rotwave::bch::{bch, bch_breakdown};
use rotwave::flow::{integrate_group, GroupTrajectory};
use rotwave::hopf::{self, classify, find_orthogonal_branch, primary_frequency, FrequencyReport};
use rotwave::scenarios::{verify_against_closed_form, Scenario};
use rotwave::so3::{exp_rot, AxisVector};
use rotwave::tip::{fit_circle, tip_trajectory};
use rotwave::{Error, Result};
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::config::RunConfig;
use crate::trajectory_csv::{format_real, write_rows, TrajectoryRow};

/// Closed-form agreement required by `verify`.
pub const VERIFY_TOL: f64 = 1e-7;
/// BCH homomorphism defect allowed by `verify`.
pub const BCH_CHECK_TOL: f64 = 1e-10;
const VERIFY_POINTS: usize = 200;
const VERIFY_BCH_PAIRS: usize = 1000;
/// Tip samples `t = iT`, `i = 0..=CIRCLE_PERIODS`, feed the circle fit.
const CIRCLE_PERIODS: usize = 5;

/// JSON numbers carry the same 17 significant digits as the CSV files;
/// non-finite values become `null`.
fn real<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if x.is_finite() {
        RawValue::from_string(format_real(*x))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    } else {
        s.serialize_none()
    }
}

fn real_opt<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match x {
        Some(v) => real(v, s),
        None => s.serialize_none(),
    }
}

fn real3<S: Serializer>(v: &[f64; 3], s: S) -> std::result::Result<S::Ok, S::Error> {
    #[derive(Serialize)]
    struct R(#[serde(serialize_with = "real")] f64);
    [R(v[0]), R(v[1]), R(v[2])].serialize(s)
}

fn arr(v: &AxisVector) -> [f64; 3] {
    [v.x, v.y, v.z]
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResonanceEntry {
    pub kind: &'static str,
    pub k: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CircleEntry {
    #[serde(serialize_with = "real3")]
    pub axis: [f64; 3],
    #[serde(serialize_with = "real")]
    pub radius: f64,
    #[serde(serialize_with = "real")]
    pub rms: f64,
}

/// One element of the frequency report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrequencyEntry {
    #[serde(serialize_with = "real")]
    pub lambda: f64,
    #[serde(rename = "X", serialize_with = "real3")]
    pub x: [f64; 3],
    #[serde(rename = "Xf", serialize_with = "real3")]
    pub xf: [f64; 3],
    #[serde(rename = "norm_X", serialize_with = "real")]
    pub norm_x: f64,
    #[serde(rename = "norm_Xf", serialize_with = "real")]
    pub norm_xf: f64,
    pub resonance: ResonanceEntry,
    #[serde(serialize_with = "real_opt")]
    pub ortho_defect: Option<f64>,
    pub motion: String,
    /// `null` when the tip samples do not determine a plane.
    pub circle_fit: Option<CircleEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftEntry {
    #[serde(serialize_with = "real")]
    pub lambda: f64,
    #[serde(serialize_with = "real")]
    pub mu_star: f64,
    #[serde(serialize_with = "real")]
    pub ortho_defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormCheck {
    #[serde(serialize_with = "real")]
    pub lambda: f64,
    #[serde(serialize_with = "real")]
    pub mu: f64,
    #[serde(serialize_with = "real")]
    pub max_deviation: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BchCheck {
    pub pairs: usize,
    pub seed: u64,
    #[serde(serialize_with = "real")]
    pub max_error: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub scenario: String,
    pub closed_form: Vec<ClosedFormCheck>,
    pub bch: BchCheck,
    pub pass: bool,
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(bytes)?;
    w.flush()?;
    Ok(())
}

fn out_dir(cfg: &RunConfig) -> Result<&Path> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

/// `<out>/<scenario>_lambda_<λ>.csv`.
pub fn trajectory_path(cfg: &RunConfig, lambda: f64) -> PathBuf {
    cfg.out
        .join(format!("{}_lambda_{}.csv", cfg.scenario, lambda))
}

pub fn frequency_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join(format!("{}_frequency.json", cfg.scenario))
}

pub fn drift_path(cfg: &RunConfig) -> PathBuf {
    cfg.out.join(format!("{}_drift.json", cfg.scenario))
}

fn integrate(s: &Scenario, cfg: &RunConfig, lambda: f64, t_end: f64) -> Result<GroupTrajectory> {
    integrate_group(&s.forcing(cfg.mu), lambda, t_end, &cfg.integrator)
}

/// Rows at `t = i·T/samples_per_period` up to `horizon·T`, tip `A(t)·x₀`.
pub fn simulate_rows(cfg: &RunConfig, s: &Scenario, lambda: f64) -> Result<Vec<TrajectoryRow>> {
    let period = s.period(lambda);
    let t_end = cfg.horizon * period;
    let n = (cfg.horizon * cfg.samples_per_period as f64 * (1.0 + 1e-12)).floor() as usize;
    let times: Vec<f64> = (0..=n)
        .map(|i| (i as f64 * period / cfg.samples_per_period as f64).min(t_end))
        .collect();
    let traj = integrate(s, cfg, lambda, t_end)?;
    let p = s.params();
    let track = tip_trajectory(&traj, &p.tip_x0, p.r, &times, None)?;
    times
        .iter()
        .zip(&track.samples)
        .map(|(&t, (_, tip))| {
            let m = *traj.eval_a(t)?.matrix();
            Ok(TrajectoryRow {
                t,
                a: [
                    [m[(0, 0)], m[(0, 1)], m[(0, 2)]],
                    [m[(1, 0)], m[(1, 1)], m[(1, 2)]],
                    [m[(2, 0)], m[(2, 1)], m[(2, 2)]],
                ],
                tip: arr(tip),
            })
        })
        .collect()
}

/// Writes one trajectory CSV per λ and returns the paths in grid order.
pub fn simulate(cfg: &RunConfig) -> Result<Vec<PathBuf>> {
    let s = cfg.scenario()?;
    out_dir(cfg)?;
    let mut paths = Vec::with_capacity(cfg.lambda_grid.len());
    for &lambda in &cfg.lambda_grid {
        let rows = simulate_rows(cfg, &s, lambda)?;
        let mut buf = Vec::new();
        write_rows(&mut buf, &rows)?;
        let path = trajectory_path(cfg, lambda);
        write_file(&path, &buf)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Primary frequency, classification and tip circle for one λ.
pub fn frequency_entry(cfg: &RunConfig, s: &Scenario, lambda: f64) -> Result<FrequencyEntry> {
    let period = s.period(lambda);
    let t_end = cfg.horizon.max(CIRCLE_PERIODS as f64) * period;
    let traj = integrate(s, cfg, lambda, t_end)?;
    let x0_dir = s.frame().x0_dir;
    let x = primary_frequency(&traj, period, &x0_dir)?;
    let p = s.params();
    let report: FrequencyReport =
        classify(lambda, &s.x0(), p.omega_bif, &x, period, hopf::RES_TOL)?;

    let track = tip_trajectory(&traj, &p.tip_x0, p.r, &[], Some(period))?;
    let pts = &track.period_samples[..track.period_samples.len().min(CIRCLE_PERIODS + 1)];
    let pole = if x.norm() > 0.0 {
        x.normalize()
    } else {
        x0_dir
    };
    let circle_fit = match fit_circle(pts, Some(&pole)) {
        Ok(fit) => Some(CircleEntry {
            axis: arr(&fit.axis),
            radius: fit.radius,
            rms: fit.rms_residual,
        }),
        Err(Error::Fit(_)) => None,
        Err(e) => return Err(e),
    };
    Ok(FrequencyEntry {
        lambda,
        x: arr(&report.x),
        xf: arr(&report.xf),
        norm_x: report.x.norm(),
        norm_xf: report.xf.norm(),
        resonance: ResonanceEntry {
            kind: report.resonance.name(),
            k: report.resonance.k(),
        },
        ortho_defect: report.ortho_defect,
        motion: report.motion.to_string(),
        circle_fit,
    })
}

/// Writes `<out>/<scenario>_frequency.json` and returns the report.
pub fn frequency(cfg: &RunConfig) -> Result<(PathBuf, Vec<FrequencyEntry>)> {
    let s = cfg.scenario()?;
    let entries = cfg
        .lambda_grid
        .iter()
        .map(|&l| frequency_entry(cfg, &s, l))
        .collect::<Result<Vec<_>>>()?;
    out_dir(cfg)?;
    let path = frequency_path(cfg);
    write_file(&path, to_json(&entries).as_bytes())?;
    Ok((path, entries))
}

/// Orthogonal drift branch `μ*(λ)` over the grid, searched in `mu_bracket`.
pub fn drift(cfg: &RunConfig) -> Result<(PathBuf, Vec<DriftEntry>)> {
    let s = cfg.scenario()?;
    let family = |_lambda: f64, mu: f64| Ok(s.forcing(mu));
    let bracket = (cfg.mu_bracket[0], cfg.mu_bracket[1]);
    let entries = cfg
        .lambda_grid
        .iter()
        .map(|&lambda| {
            let root = find_orthogonal_branch(
                family,
                lambda,
                bracket,
                &s.frame().x0_dir,
                &cfg.integrator,
            )?;
            Ok(DriftEntry {
                lambda,
                mu_star: root.mu,
                ortho_defect: root.ortho_defect,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    out_dir(cfg)?;
    let path = drift_path(cfg);
    write_file(&path, to_json(&entries).as_bytes())?;
    Ok((path, entries))
}

/// Closed-form checks over `[0, 2T]` for every λ plus a seeded BCH
/// homomorphism sample. Failures are reported, not raised.
pub fn verify(cfg: &RunConfig) -> Result<VerifyReport> {
    let s = cfg.scenario()?;
    let mut closed_form = Vec::with_capacity(cfg.lambda_grid.len());
    for &lambda in &cfg.lambda_grid {
        let t_end = 2.0 * s.period(lambda);
        let grid: Vec<f64> = (0..VERIFY_POINTS)
            .map(|i| t_end * i as f64 / (VERIFY_POINTS - 1) as f64)
            .collect();
        let dev = verify_against_closed_form(&s, lambda, cfg.mu, &grid, &cfg.integrator)?;
        closed_form.push(ClosedFormCheck {
            lambda,
            mu: cfg.mu,
            max_deviation: dev,
            pass: dev < VERIFY_TOL,
        });
    }
    let bch = bch_sample(cfg.seed, VERIFY_BCH_PAIRS);
    let pass = bch.pass && closed_form.iter().all(|c| c.pass);
    Ok(VerifyReport {
        scenario: cfg.scenario.clone(),
        closed_form,
        bch,
        pass,
    })
}

fn random_vector(rng: &mut StdRng, max_norm: f64) -> AxisVector {
    loop {
        let v = AxisVector::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 1e-3 && n <= 1.0 {
            return v / n * rng.random_range(0.0..max_norm);
        }
    }
}

/// `max ‖exp(bch(X, Y)) − exp(X)exp(Y)‖_F` over seeded pairs with norms in
/// `[0, 3π]`.
pub fn bch_sample(seed: u64, pairs: usize) -> BchCheck {
    let mut rng = StdRng::seed_from_u64(seed);
    let max_norm = 3.0 * std::f64::consts::PI;
    let mut worst: f64 = 0.0;
    for _ in 0..pairs {
        let x = random_vector(&mut rng, max_norm);
        let y = random_vector(&mut rng, max_norm);
        let err = bch(&x, &y)
            .rotation()
            .distance(&(exp_rot(&x) * exp_rot(&y)));
        worst = worst.max(err);
    }
    BchCheck {
        pairs,
        seed,
        max_error: worst,
        pass: worst < BCH_CHECK_TOL,
    }
}

/// Text report of one closed-form BCH evaluation, one `name = value` per line.
pub fn bch_report(x: &AxisVector, y: &AxisVector, check: bool) -> String {
    let b = bch_breakdown(x, y);
    let v = b.result.vector();
    let angle = v.norm();
    let axis = if angle > 0.0 {
        v / angle
    } else {
        AxisVector::zeros()
    };
    let vec3 = |v: &AxisVector| {
        format!(
            "{},{},{}",
            format_real(v.x),
            format_real(v.y),
            format_real(v.z)
        )
    };
    let mut lines = vec![
        format!("result = {}", vec3(&v)),
        format!("angle = {}", format_real(angle)),
        format!("axis = {}", vec3(&axis)),
        format!("branch = {}", b.branch.name()),
    ];
    for (name, value) in [
        ("e", b.e),
        ("a1", b.a1),
        ("b1", b.b1),
        ("c1", b.c1),
        ("d1", b.d1),
        ("d", b.d),
        ("s", b.s),
    ] {
        lines.push(format!("{name} = {}", format_real(value)));
    }
    if check {
        let err = b.result.rotation().distance(&(exp_rot(x) * exp_rot(y)));
        lines.push(format!("check = {}", format_real(err)));
    }
    let mut out = lines.join("\n");
    out.push('\n');
    out
}
