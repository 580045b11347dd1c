use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use wavekit::asymptotics::{
    asymptote_rows, continuity_residual, dispersion_times_table, reference_entries, Quantities,
};
use wavekit::io::{read_table_file, write_asymptote_rows, write_dispersion_curve, write_dispersion_times, write_field_dump};
use wavekit::observables::{sample_grid, FieldOptions, FieldSample};
use wavekit::{
    dispersion_curve, model_from_table, moments, trajectory, Error, Kinematics, Method, ModelKind, MomentsReport,
    PacketModel, Result, SpacetimePoint, Vec3,
};

use crate::config::{Format, RunConfig};

#[derive(Serialize)]
pub struct Report<'a, T: Serialize> {
    pub config: &'a RunConfig,
    pub results: Option<T>,
    pub errors: Vec<ErrorEntry>,
}

#[derive(Serialize)]
pub struct ErrorEntry {
    pub code: &'static str,
    pub message: String,
}

impl From<&Error> for ErrorEntry {
    fn from(e: &Error) -> Self {
        ErrorEntry { code: e.code(), message: e.to_string() }
    }
}

pub fn json<T: Serialize>(cfg: &RunConfig, results: Option<T>, errors: Vec<ErrorEntry>) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(&Report { config: cfg, results, errors })
        .map_err(|e| Error::InvalidInput(format!("cannot encode report: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

pub fn build_model(cfg: &RunConfig) -> Result<PacketModel> {
    let kin = cfg.kinematics()?;
    match (cfg.model, &cfg.table) {
        (ModelKind::TabulatedIsotropic, Some(path)) => model_from_table(&read_table_file(path)?, kin),
        (ModelKind::TabulatedIsotropic, None) => Err(Error::InvalidInput("tabulated-isotropic needs an envelope table".into())),
        (kind, _) => PacketModel::gaussian(kind, kin),
    }
}

/// Runs the configured subcommand and returns the bytes to write.
pub fn run(cfg: &RunConfig) -> Result<Vec<u8>> {
    match cfg.command.as_str() {
        "moments" => run_moments(cfg),
        "evolve" => run_evolve(cfg),
        "dispersion" => run_dispersion(cfg),
        "flux-asymptote" => run_asymptote(cfg, Quantities::Flux),
        "prob-asymptote" => run_asymptote(cfg, Quantities::Probability),
        "table1" => run_table(cfg),
        "continuity" => run_continuity(cfg),
        other => Err(Error::InvalidInput(format!("unknown command '{other}'"))),
    }
}

#[derive(Serialize)]
struct MomentsOut {
    kinematics: Kinematics,
    moments: MomentsReport,
}

fn run_moments(cfg: &RunConfig) -> Result<Vec<u8>> {
    let model = build_model(cfg)?;
    let out = MomentsOut { kinematics: model.kin().clone(), moments: moments(&model)? };
    json(cfg, Some(out), vec![])
}

#[derive(Serialize)]
struct SampleOut {
    t: f64,
    x: [f64; 3],
    rho: f64,
    j: [f64; 3],
    psi: [f64; 2],
}

impl From<&FieldSample> for SampleOut {
    fn from(s: &FieldSample) -> Self {
        SampleOut { t: s.t, x: s.x.into(), rho: s.rho, j: s.j.into(), psi: [s.psi.re, s.psi.im] }
    }
}

fn run_evolve(cfg: &RunConfig) -> Result<Vec<u8>> {
    let model = build_model(cfg)?;
    let report = moments(&model)?;
    let spec = cfg.grid_spec();
    let mut samples = Vec::new();
    for t in cfg.t.expect("validated").times() {
        samples.extend(sample_grid(&model, &report, t, &spec)?);
    }
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_field_dump(&mut buf, &samples)?;
            Ok(buf)
        }
        Format::Json => json(cfg, Some(samples.iter().map(SampleOut::from).collect::<Vec<_>>()), vec![]),
    }
}

fn run_dispersion(cfg: &RunConfig) -> Result<Vec<u8>> {
    let model = build_model(cfg)?;
    let spec = cfg.grid_spec();
    let curve = dispersion_curve(&model, cfg.times.as_deref().expect("validated"), cfg.measure.then_some(&spec))?;
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_dispersion_curve(&mut buf, &curve)?;
            Ok(buf)
        }
        Format::Json => json(cfg, Some(curve), vec![]),
    }
}

fn run_asymptote(cfg: &RunConfig, which: Quantities) -> Result<Vec<u8>> {
    let model = build_model(cfg)?;
    let sx = model.kin().sigma_x();
    let radii = cfg.radii.clone().unwrap_or_else(|| vec![10.0 * sx, 20.0 * sx, 40.0 * sx]);
    let rows = asymptote_rows(&model, &radii, &cfg.method.list(), which)?;
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_asymptote_rows(&mut buf, &rows)?;
            Ok(buf)
        }
        Format::Json => json(cfg, Some(rows), vec![]),
    }
}

fn run_table(cfg: &RunConfig) -> Result<Vec<u8>> {
    let rows = dispersion_times_table(&reference_entries())?;
    match cfg.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_dispersion_times(&mut buf, &rows)?;
            Ok(buf)
        }
        Format::Json => json(cfg, Some(rows), vec![]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub max: f64,
    pub mean: f64,
    pub median: f64,
}

impl Stats {
    fn of(values: &[f64]) -> Stats {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) };
        Stats { max: v[n - 1], mean: v.iter().sum::<f64>() / n as f64, median }
    }
}

#[derive(Serialize)]
struct ContinuityPoint {
    t: f64,
    x: [f64; 3],
    step: f64,
    quadrature: f64,
    closed_form: Option<f64>,
}

#[derive(Serialize)]
struct ContinuityOut {
    samples: usize,
    quadrature: Stats,
    closed_form: Option<Stats>,
    points: Vec<ContinuityPoint>,
}

/// Lab events within three packet widths of the trajectory, `0 ≤ t ≤ 2γτ`.
fn continuity_events(model: &PacketModel, report: &MomentsReport, n: usize, seed: u64) -> Result<Vec<(f64, Vec3, f64)>> {
    let kin = model.kin();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rng.random_range(0.0..=2.0 * kin.tau_t);
        let w = ((report.sigma_x2 + report.sigma_v2 * t * t) / 3.0).sqrt();
        let dir = Vec3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let x = trajectory(model, t)? + dir.try_normalize(0.0).unwrap_or(Vec3::z()) * rng.random_range(0.0..3.0 * w);
        out.push((t, x, w));
    }
    Ok(out)
}

fn run_continuity(cfg: &RunConfig) -> Result<Vec<u8>> {
    let model = build_model(cfg)?;
    let report = moments(&model)?;
    let events = continuity_events(&model, &report, cfg.samples, cfg.seed)?;
    let opts = cfg.field_options();
    let closed = model.kind().is_gaussian() && model.kin().check_narrow(model.settings().narrow_limit).is_ok();
    let points = events
        .par_iter()
        .map(|&(t, x, w)| {
            let pt = SpacetimePoint::lab(t, x);
            let h = cfg.step * w;
            let quadrature = continuity_residual(&model, &pt, h, Method::Quadrature, &opts)?;
            let closed_form = if closed {
                Some(continuity_residual(&model, &pt, h, Method::ClosedForm, &FieldOptions::default())?)
            } else {
                None
            };
            Ok(ContinuityPoint { t, x: x.into(), step: h, quadrature, closed_form })
        })
        .collect::<Vec<Result<_>>>()
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let quad: Vec<f64> = points.iter().map(|p| p.quadrature).collect();
    let cf: Option<Vec<f64>> = points.iter().map(|p| p.closed_form).collect();
    let out = ContinuityOut {
        samples: points.len(),
        quadrature: Stats::of(&quad),
        closed_form: cf.as_deref().map(Stats::of),
        points,
    };
    json(cfg, Some(out), vec![])
}
