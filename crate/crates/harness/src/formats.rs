//! On-disk artifact formats.
//!
//! - `TOLMAP v1 <rows> <cols> <w>` header, then one line per raster row with
//!   values at 6 decimals.
//! - `NET v1 <sizes…>` header line, then the flat parameter vector as
//!   little-endian f64.
//! - CSV for trajectories, learning curves, embeddings, evaluation reports
//!   and the defect study.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use tgi_core::eval::{EpisodeStats, EvalReport, MeanStderr};
use tgi_core::geometry::{PinShape, ToleranceMap, WorkpieceSpec};
use tgi_core::inference::AttemptOutcome;
use tgi_core::learning::CurveRow;
use tgi_core::nn::{NetSpec, PolicyParams, EMBED_DIM};
use tgi_core::sim::Trajectory;

use crate::error::{Error, Result};

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(Error::io(path))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(Error::io(path))
}

pub fn format_tolmap(map: &ToleranceMap) -> String {
    let mut out = format!("TOLMAP v1 {} {} {}\n", map.rows, map.cols, map.window_half_width);
    for r in 0..map.rows {
        let row: Vec<String> = (0..map.cols).map(|c| format!("{:.6}", map.get(r, c))).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_tolmap(text: &str) -> std::result::Result<ToleranceMap, String> {
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().ok_or("empty file")?.split_whitespace().collect();
    let [magic, version, rows, cols, w] = header[..] else {
        return Err("header must be `TOLMAP v1 <rows> <cols> <w>`".into());
    };
    if magic != "TOLMAP" || version != "v1" {
        return Err(format!("unsupported header `{magic} {version}`"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|e| format!("bad size `{s}`: {e}"));
    let (rows, cols) = (num(rows)?, num(cols)?);
    let w: f64 = w.parse().map_err(|e| format!("bad window `{w}`: {e}"))?;
    let mut values = Vec::with_capacity(rows * cols);
    for (i, line) in lines.filter(|l| !l.trim().is_empty()).enumerate() {
        let row: Vec<f64> = line.split_whitespace().map(str::parse).collect::<std::result::Result<_, _>>().map_err(|e| format!("row {i}: {e}"))?;
        if row.len() != cols {
            return Err(format!("row {i} has {} values, expected {cols}", row.len()));
        }
        values.extend(row);
    }
    if values.len() != rows * cols {
        return Err(format!("{} rows, expected {rows}", values.len() / cols.max(1)));
    }
    Ok(ToleranceMap { rows, cols, window_half_width: w, values, spec_id: None })
}

pub fn write_tolmap(path: &Path, map: &ToleranceMap) -> Result<()> {
    write_text(path, &format_tolmap(map))
}

pub fn read_tolmap(path: &Path) -> Result<ToleranceMap> {
    parse_tolmap(&read_text(path)?).map_err(|m| Error::format(path, m))
}

pub fn encode_net(sizes: &[usize], params: &[f64]) -> Vec<u8> {
    let sizes: Vec<String> = sizes.iter().map(|s| s.to_string()).collect();
    let mut out = format!("NET v1 {}\n", sizes.join(" ")).into_bytes();
    for p in params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

pub fn decode_net(bytes: &[u8]) -> std::result::Result<(Vec<usize>, Vec<f64>), String> {
    let nl = bytes.iter().position(|b| *b == b'\n').ok_or("missing header line")?;
    let header = std::str::from_utf8(&bytes[..nl]).map_err(|_| "header is not UTF-8")?;
    let mut words = header.split_whitespace();
    if (words.next(), words.next()) != (Some("NET"), Some("v1")) {
        return Err("header must start with `NET v1`".into());
    }
    let sizes = words.map(|w| w.parse::<usize>().map_err(|e| format!("bad layer size `{w}`: {e}"))).collect::<std::result::Result<Vec<_>, _>>()?;
    let body = &bytes[nl + 1..];
    if !body.len().is_multiple_of(8) {
        return Err(format!("payload of {} bytes is not a whole number of f64", body.len()));
    }
    let params = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((sizes, params))
}

pub fn write_net(path: &Path, sizes: &[usize], params: &[f64]) -> Result<()> {
    fs::write(path, encode_net(sizes, params)).map_err(Error::io(path))
}

/// Reads a network and checks it has the expected layer sizes and parameter count.
pub fn read_net(path: &Path, sizes: &[usize], param_count: usize) -> Result<Vec<f64>> {
    let bytes = fs::read(path).map_err(Error::io(path))?;
    let (s, p) = decode_net(&bytes).map_err(|m| Error::format(path, m))?;
    if s != sizes {
        return Err(Error::format(path, format!("layer sizes {s:?}, expected {sizes:?}")));
    }
    if p.len() != param_count {
        return Err(Error::format(path, format!("{} parameters, expected {param_count}", p.len())));
    }
    Ok(p)
}

pub fn read_dense(path: &Path, spec: &NetSpec) -> Result<Vec<f64>> {
    read_net(path, &spec.sizes, spec.param_count())
}

/// Writes `phi1.net` and `phi2.net` into `dir`.
pub fn write_policy(dir: &Path, params: &PolicyParams) -> Result<()> {
    write_net(&dir.join("phi1.net"), &tgi_core::nn::nominal_spec().sizes, &params.phi1)?;
    write_net(&dir.join("phi2.net"), &tgi_core::nn::adaptation_spec().sizes, &params.phi2)
}

pub fn read_policy(dir: &Path) -> Result<PolicyParams> {
    Ok(PolicyParams {
        phi1: read_dense(&dir.join("phi1.net"), &tgi_core::nn::nominal_spec())?,
        phi2: read_dense(&dir.join("phi2.net"), &tgi_core::nn::adaptation_spec())?,
    })
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| Error::format(path, e))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |e| Error::format(path, e)
}

pub const TRAJECTORY_HEADER: [&str; 15] =
    ["step", "x", "y", "theta", "z", "Fx", "Fy", "qtheta", "Fz", "ux", "uy", "utheta", "uz", "reward", "collided"];

/// Row 0 is the initial state with a zero command; row `k` holds the command
/// of step `k`, the state it produced and its reward.
pub fn format_trajectory(t: &Trajectory) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TRAJECTORY_HEADER).unwrap();
    let row = |k: usize, s: &tgi_core::sim::EnvState, a: [f64; 4], reward: f64, collided: bool| {
        let mut r = vec![k.to_string()];
        r.extend(s.to_array().iter().map(|v| v.to_string()));
        r.extend(a.iter().map(|v| v.to_string()));
        r.push(reward.to_string());
        r.push((collided as u8).to_string());
        r
    };
    w.write_record(row(0, &t.initial, [0.0; 4], 0.0, t.initial.in_contact())).unwrap();
    for (k, s) in t.steps.iter().enumerate() {
        w.write_record(row(k + 1, &s.state, s.action.to_array(), s.reward, s.collided)).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn write_trajectory(path: &Path, t: &Trajectory) -> Result<()> {
    write_text(path, &format_trajectory(t))
}

/// `(x, y, z)` of every row of a trajectory CSV.
pub fn read_trajectory_positions(path: &Path) -> Result<Vec<[f64; 3]>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = r.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(TRAJECTORY_HEADER) {
        return Err(Error::format(path, "not a trajectory CSV"));
    }
    r.records()
        .map(|rec| {
            let rec = rec.map_err(csv_err(path))?;
            let f = |i: usize| rec[i].parse::<f64>().map_err(|e| Error::format(path, e));
            Ok([f(1)?, f(2)?, f(4)?])
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveCsvRow {
    pub iteration: usize,
    pub mean_reward: f64,
    pub reward_std: f64,
    #[serde(rename = "mean_D_student")]
    pub mean_d_student: f64,
    #[serde(rename = "mean_D_expert")]
    pub mean_d_expert: f64,
    pub best_fitness: f64,
}

impl From<&CurveRow> for CurveCsvRow {
    fn from(c: &CurveRow) -> Self {
        CurveCsvRow {
            iteration: c.iteration,
            mean_reward: c.mean_reward,
            reward_std: c.reward_std,
            mean_d_student: c.mean_d_student,
            mean_d_expert: c.mean_d_expert,
            best_fitness: c.best_fitness,
        }
    }
}

pub fn write_curve(path: &Path, curve: &[CurveRow]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for c in curve {
        w.serialize(CurveCsvRow::from(c)).map_err(csv_err(path))?;
    }
    if curve.is_empty() {
        w.write_record(["iteration", "mean_reward", "reward_std", "mean_D_student", "mean_D_expert", "best_fitness"]).map_err(csv_err(path))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn read_curve(path: &Path) -> Result<Vec<CurveCsvRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

/// Design parameters of a spec as embedding-CSV columns.
pub const SPEC_COLUMNS: [&str; 8] = ["family", "sides", "rows", "cols", "pin", "hole", "row_interval", "col_interval"];

pub fn spec_fields(s: &WorkpieceSpec) -> [String; 8] {
    let (family, sides, pin, hole) = match s.shape {
        PinShape::Circle { pin_radius, hole_radius } => ("circle", 0, pin_radius, hole_radius),
        PinShape::Polygon { sides, pin_circumradius, hole_circumradius } => ("polygon", sides, pin_circumradius, hole_circumradius),
    };
    [
        family.into(),
        sides.to_string(),
        s.rows.to_string(),
        s.cols.to_string(),
        pin.to_string(),
        hole.to_string(),
        s.row_interval.to_string(),
        s.col_interval.to_string(),
    ]
}

pub fn write_embeddings(path: &Path, rows: &[(WorkpieceSpec, [f64; EMBED_DIM])]) -> Result<()> {
    let mut w = csv_writer(path)?;
    let mut header: Vec<String> = SPEC_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend((0..EMBED_DIM).map(|k| format!("psi{k}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for (spec, psi) in rows {
        let mut rec: Vec<String> = spec_fields(spec).into();
        rec.extend(psi.iter().map(|v| v.to_string()));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(Error::io(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub policy: String,
    pub train_env: String,
    pub eval_env: String,
    pub n_episodes: usize,
    pub reward_mean: f64,
    pub reward_stderr: f64,
    pub success_mean: f64,
    pub success_stderr: f64,
    pub steps_mean: f64,
    pub steps_stderr: f64,
    pub collisions_mean: f64,
    pub collisions_stderr: f64,
}

impl From<&EvalReport> for ReportRow {
    fn from(r: &EvalReport) -> Self {
        ReportRow {
            policy: r.policy_tag.clone(),
            train_env: r.train_env.clone(),
            eval_env: r.eval_env.clone(),
            n_episodes: r.n_episodes,
            reward_mean: r.reward.mean,
            reward_stderr: r.reward.stderr,
            success_mean: r.success_rate.mean,
            success_stderr: r.success_rate.stderr,
            steps_mean: r.steps.mean,
            steps_stderr: r.steps.stderr,
            collisions_mean: r.collisions.mean,
            collisions_stderr: r.collisions.stderr,
        }
    }
}

impl From<&ReportRow> for EvalReport {
    fn from(r: &ReportRow) -> Self {
        let ms = |mean, stderr| MeanStderr { mean, stderr };
        EvalReport {
            reward: ms(r.reward_mean, r.reward_stderr),
            success_rate: ms(r.success_mean, r.success_stderr),
            steps: ms(r.steps_mean, r.steps_stderr),
            collisions: ms(r.collisions_mean, r.collisions_stderr),
            n_episodes: r.n_episodes,
            policy_tag: r.policy.clone(),
            train_env: r.train_env.clone(),
            eval_env: r.eval_env.clone(),
        }
    }
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.serialize(ReportRow::from(report)).map_err(csv_err(path))?;
    w.flush().map_err(Error::io(path))
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let row: Option<std::result::Result<ReportRow, _>> = r.deserialize().next();
    let row = row.ok_or_else(|| Error::format(path, "empty report"))?.map_err(csv_err(path))?;
    Ok(EvalReport::from(&row))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    pub reward: f64,
    pub success: u8,
    pub steps: usize,
    pub collisions: usize,
}

pub fn write_episodes(path: &Path, episodes: &[EpisodeStats]) -> Result<()> {
    let mut w = csv_writer(path)?;
    for (i, e) in episodes.iter().enumerate() {
        w.serialize(EpisodeRow { episode: i, reward: e.reward, success: e.success as u8, steps: e.steps, collisions: e.collisions })
            .map_err(csv_err(path))?;
    }
    w.flush().map_err(Error::io(path))
}

pub fn read_episodes(path: &Path) -> Result<Vec<EpisodeStats>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize::<EpisodeRow>()
        .map(|row| {
            let e = row.map_err(csv_err(path))?;
            Ok(EpisodeStats { reward: e.reward, success: e.success != 0, steps: e.steps, collisions: e.collisions })
        })
        .collect()
}

/// One row per sample: defect offsets, attempts, outcome, final goal and g*.
pub fn write_study(path: &Path, rows: &[(tgi_core::geometry::DefectParams, AttemptOutcome)]) -> Result<()> {
    let pins = rows.first().map_or(0, |(d, _)| d.offsets.len());
    let mut w = csv_writer(path)?;
    let mut header = vec!["sample_id".to_string()];
    for i in 0..pins {
        header.push(format!("dx{i}"));
        header.push(format!("dy{i}"));
    }
    header.extend(["attempts", "success", "discarded", "goal_x", "goal_y", "goal_theta", "g_star"].map(String::from));
    w.write_record(&header).map_err(csv_err(path))?;
    for (i, (d, o)) in rows.iter().enumerate() {
        let mut rec = vec![i.to_string()];
        rec.extend(d.offsets.iter().flat_map(|o| [o[0].to_string(), o[1].to_string()]));
        rec.extend([
            o.attempts.to_string(),
            (o.success as u8).to_string(),
            (o.discarded as u8).to_string(),
            o.final_goal.x.to_string(),
            o.final_goal.y.to_string(),
            o.final_goal.theta.to_string(),
            o.g_star.to_string(),
        ]);
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Headered single-table CSV from string cells.
pub fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in rows {
        w.write_record(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(Error::io(path))
}

/// Rows of a headered CSV keyed by column name.
pub fn read_table(path: &Path) -> Result<Vec<std::collections::BTreeMap<String, String>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

/// Appends a line to a file, creating it if needed.
pub fn append_line(path: &Path, line: &str) -> Result<()> {
    let mut f = fs::OpenOptions::new().create(true).append(true).open(path).map_err(Error::io(path))?;
    writeln!(f, "{line}").map_err(Error::io(path))
}
