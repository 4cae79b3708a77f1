use std::fs;
use std::path::{Path, PathBuf};

use super::svg::{Band, Plot, Series};
use super::{make_track, ExperimentConfig, RunLog, StepRecord, StepStatus};
use crate::error::{Error, Result};

/// Column order of `run.csv`.
pub const CSV_COLUMNS: [&str; 29] = [
    "step",
    "time",
    "px",
    "py",
    "v",
    "psi",
    "w",
    "est_px",
    "est_py",
    "est_v",
    "est_psi",
    "est_w",
    "two_sigma_px",
    "two_sigma_py",
    "two_sigma_v",
    "two_sigma_psi",
    "two_sigma_w",
    "y_px",
    "y_py",
    "y_v",
    "y_psi",
    "u_a",
    "u_delta",
    "iterations",
    "cost",
    "status",
    "plan_violation",
    "corridor_violation",
    "velocity_overshoot",
];

#[derive(Debug, Clone, Default)]
pub struct EmitReport {
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn record_fields(r: &StepRecord) -> Vec<String> {
    let mut f = vec![r.step.to_string(), r.time.to_string()];
    f.extend(r.truth.iter().map(|v| v.to_string()));
    f.push(r.true_w.to_string());
    f.extend(r.estimate.iter().map(|v| v.to_string()));
    f.push(r.est_w.to_string());
    f.extend(r.two_sigma.iter().map(|v| v.to_string()));
    f.push(r.est_w_two_sigma.to_string());
    f.extend(r.measurement.iter().map(|v| v.to_string()));
    f.extend(r.input.iter().map(|v| v.to_string()));
    f.push(r.iterations.to_string());
    f.push(r.cost.to_string());
    f.push(r.status.as_str().to_string());
    f.push(r.plan_violation.to_string());
    f.push(r.corridor_violation.to_string());
    f.push(r.velocity_overshoot.to_string());
    f
}

fn write_csv(log: &RunLog, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    w.write_record(CSV_COLUMNS).map_err(csv_err(path))?;
    for r in &log.rows {
        w.write_record(record_fields(r)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Parses a `run.csv` written by [`emit_outputs`].
pub fn read_csv(path: &Path) -> Result<Vec<StepRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let headers = reader.headers().map_err(csv_err(path))?.clone();
    if headers.iter().ne(CSV_COLUMNS.iter().copied()) {
        return Err(Error::Config(format!("{} does not have the run.csv columns", path.display())));
    }
    let bad = |what: &str| Error::Config(format!("{}: malformed {what}", path.display()));
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(csv_err(path))?;
        let num = |i: usize| -> Result<f64> { rec[i].parse::<f64>().map_err(|_| bad(CSV_COLUMNS[i])) };
        let arr4 = |s: usize| -> Result<[f64; 4]> { Ok([num(s)?, num(s + 1)?, num(s + 2)?, num(s + 3)?]) };
        rows.push(StepRecord {
            step: rec[0].parse().map_err(|_| bad("step"))?,
            time: num(1)?,
            truth: arr4(2)?,
            true_w: num(6)?,
            estimate: arr4(7)?,
            est_w: num(11)?,
            two_sigma: arr4(12)?,
            est_w_two_sigma: num(16)?,
            measurement: arr4(17)?,
            input: [num(21)?, num(22)?],
            iterations: rec[23].parse().map_err(|_| bad("iterations"))?,
            cost: num(24)?,
            status: StepStatus::parse(&rec[25]).ok_or_else(|| bad("status"))?,
            plan_violation: num(26)?,
            corridor_violation: num(27)?,
            velocity_overshoot: num(28)?,
        });
    }
    Ok(rows)
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Writes `run.csv`, `timings.csv`, `config-echo.json` and the four plots.
///
/// An empty log yields a header-only CSV, no plots, and a warning.
pub fn emit_outputs(log: &RunLog, config: &ExperimentConfig, out_dir: &Path) -> Result<EmitReport> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut report = EmitReport::default();

    let csv_path = out_dir.join("run.csv");
    write_csv(log, &csv_path)?;
    report.files.push(csv_path);

    let timing_path = out_dir.join("timings.csv");
    let mut timings = String::from("step,solve_ms\n");
    for (r, t) in log.rows.iter().zip(&log.solve_times) {
        timings.push_str(&format!("{},{}\n", r.step, t.as_secs_f64() * 1e3));
    }
    write_file(&timing_path, &timings)?;
    report.files.push(timing_path);

    let echo_path = out_dir.join("config-echo.json");
    let echo = serde_json::json!({
        "config": config,
        "outcome": log.outcome,
    });
    write_file(&echo_path, &serde_json::to_string_pretty(&echo)?)?;
    report.files.push(echo_path);

    if log.rows.is_empty() {
        report.warnings.push("run log is empty; no plots written".into());
        return Ok(report);
    }
    for (name, plot) in plots(log, config) {
        let path = out_dir.join(name);
        write_file(&path, &plot.render())?;
        report.files.push(path);
    }
    Ok(report)
}

fn series(label: &str, points: Vec<(f64, f64)>, color: &'static str, dashed: bool) -> Series {
    Series {
        label: label.into(),
        points,
        color,
        dashed,
    }
}

fn plots(log: &RunLog, config: &ExperimentConfig) -> Vec<(&'static str, Plot)> {
    let rows = &log.rows;
    let t: Vec<f64> = rows.iter().map(|r| r.time).collect();
    let track = &config.track;

    let n = 200;
    let xs: Vec<f64> = (0..=n)
        .map(|i| track.x_min + (track.x_max - track.x_min) * i as f64 / n as f64)
        .collect();
    let lower: Vec<(f64, f64)> = xs.iter().map(|&x| (x, make_track(track, x).0)).collect();
    let upper: Vec<(f64, f64)> = xs.iter().map(|&x| (x, make_track(track, x).1)).collect();
    let trajectory = Plot {
        title: "Vehicle trajectory".into(),
        x_label: "x (m)".into(),
        y_label: "y (m)".into(),
        series: vec![
            series("road lower", lower, "black", true),
            series("road upper", upper, "black", true),
            series("true", rows.iter().map(|r| (r.truth[0], r.truth[1])).collect(), "green", true),
            series("estimate", rows.iter().map(|r| (r.estimate[0], r.estimate[1])).collect(), "red", false),
        ],
        bands: Vec::new(),
    };

    let latent = Plot {
        title: "Latent disturbance".into(),
        x_label: "time (s)".into(),
        y_label: "w (m/s²)".into(),
        series: vec![
            series("true w", rows.iter().map(|r| (r.time, r.true_w)).collect(), "blue", true),
            series("estimated w", rows.iter().map(|r| (r.time, r.est_w)).collect(), "blue", false),
        ],
        bands: vec![Band {
            x: t.clone(),
            lower: rows.iter().map(|r| r.est_w - r.est_w_two_sigma).collect(),
            upper: rows.iter().map(|r| r.est_w + r.est_w_two_sigma).collect(),
            color: "blue",
        }],
    };

    let acceleration = Plot {
        title: "Acceleration input".into(),
        x_label: "time (s)".into(),
        y_label: "a (m/s²)".into(),
        series: vec![
            series("applied a", rows.iter().map(|r| (r.time, r.input[0])).collect(), "purple", false),
            series("estimated w", rows.iter().map(|r| (r.time, r.est_w)).collect(), "blue", true),
        ],
        bands: Vec::new(),
    };

    let mut velocity_series = vec![
        series("true v", rows.iter().map(|r| (r.time, r.truth[2])).collect(), "orange", true),
        series("estimated v", rows.iter().map(|r| (r.time, r.estimate[2])).collect(), "blue", false),
    ];
    let (t0, t1) = (t[0], t[t.len() - 1]);
    for b in config.mpc.state_bounds.iter().filter(|b| b.state == 2) {
        velocity_series.push(series("v bound", vec![(t0, b.upper), (t1, b.upper)], "black", true));
        velocity_series.push(series("v bound", vec![(t0, b.lower), (t1, b.lower)], "black", true));
    }
    let velocity = Plot {
        title: "Velocity".into(),
        x_label: "time (s)".into(),
        y_label: "v (m/s)".into(),
        series: velocity_series,
        bands: vec![Band {
            x: t,
            lower: rows.iter().map(|r| r.estimate[2] - r.two_sigma[2]).collect(),
            upper: rows.iter().map(|r| r.estimate[2] + r.two_sigma[2]).collect(),
            color: "blue",
        }],
    };

    vec![
        ("trajectory.svg", trajectory),
        ("latent.svg", latent),
        ("acceleration.svg", acceleration),
        ("velocity.svg", velocity),
    ]
}
