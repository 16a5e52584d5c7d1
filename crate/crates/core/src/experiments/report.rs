//! CSV and JSON files written by batch runs and read back for Pareto plots.
//!
//! Per-game records use the header
//! `game_index,solver,U1,U2,SW,CVaR_U1,CVaR_U2,CVaR_SW,iterations,converged`.

use std::io::{Read, Write};

use serde::Serialize;

use super::batch::{BatchReport, GameRecord, MetricRow};
use super::pareto::{pareto_front, ParetoPoint};
use crate::error::{Error, Result};

pub const RECORD_COLUMNS: [&str; 10] = [
    "game_index",
    "solver",
    "U1",
    "U2",
    "SW",
    "CVaR_U1",
    "CVaR_U2",
    "CVaR_SW",
    "iterations",
    "converged",
];

pub fn write_records<W: Write>(out: W, records: &[GameRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    if records.is_empty() {
        w.write_record(RECORD_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(input: R) -> Result<Vec<GameRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    for col in RECORD_COLUMNS {
        if !headers.iter().any(|h| h == col) {
            return Err(Error::MissingColumn(col.to_string()));
        }
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

#[derive(Serialize)]
struct SocialRow<'a> {
    solver: &'a str,
    sw_mean: f64,
    sw_std: f64,
    cvar_sw_mean: f64,
    cvar_sw_std: f64,
    games: usize,
    failures: usize,
}

#[derive(Serialize)]
struct GeneralRow<'a> {
    solver: &'a str,
    u1_mean: f64,
    u1_std: f64,
    u2_mean: f64,
    u2_std: f64,
    cvar_u1_mean: f64,
    cvar_u1_std: f64,
    cvar_u2_mean: f64,
    cvar_u2_std: f64,
    games: usize,
    failures: usize,
}

/// Social-welfare table: mean ± σ of `SW` and `CVaR_SW` per algorithm.
pub fn write_social_table<W: Write>(out: W, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(SocialRow {
            solver: &r.algorithm,
            sw_mean: r.social_welfare.mean,
            sw_std: r.social_welfare.std,
            cvar_sw_mean: r.cvar_social_welfare.mean,
            cvar_sw_std: r.cvar_social_welfare.std,
            games: r.games,
            failures: r.failures,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// General table: mean ± σ of individual utilities and their CVaRs.
pub fn write_general_table<W: Write>(out: W, rows: &[MetricRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(GeneralRow {
            solver: &r.algorithm,
            u1_mean: r.u1.mean,
            u1_std: r.u1.std,
            u2_mean: r.u2.mean,
            u2_std: r.u2.std,
            cvar_u1_mean: r.cvar_u1.mean,
            cvar_u1_std: r.cvar_u1.std,
            cvar_u2_mean: r.cvar_u2.mean,
            cvar_u2_std: r.cvar_u2.std,
            games: r.games,
            failures: r.failures,
        })?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct MetricsDocument<'a> {
    rows: &'a [MetricRow],
    failures: &'a [super::batch::Failure],
}

pub fn metrics_json(report: &BatchReport) -> String {
    serde_json::to_string_pretty(&MetricsDocument {
        rows: &report.rows,
        failures: &report.failures,
    })
    .expect("metrics serialize")
}

/// Per-solver mean of columns `x` and `y`, in order of first appearance.
pub fn mean_objectives(records: &[GameRecord], x: &str, y: &str) -> Result<Vec<ParetoPoint>> {
    for col in [x, y] {
        if records.first().is_some_and(|r| r.metric(col).is_none()) {
            return Err(Error::MissingColumn(col.to_string()));
        }
    }
    let mut solvers: Vec<&str> = Vec::new();
    for r in records {
        if !solvers.contains(&r.solver.as_str()) {
            solvers.push(&r.solver);
        }
    }
    let space = format!("{x}/{y}");
    solvers
        .into_iter()
        .map(|name| {
            let mine: Vec<&GameRecord> = records.iter().filter(|r| r.solver == name).collect();
            let mean = |col: &str| -> Result<f64> {
                let total = mine
                    .iter()
                    .map(|r| r.metric(col).ok_or_else(|| Error::MissingColumn(col.to_string())))
                    .sum::<Result<f64>>()?;
                Ok(total / mine.len() as f64)
            };
            Ok(ParetoPoint::new(name, space.clone(), mean(x)?, mean(y)?))
        })
        .collect()
}

#[derive(Serialize)]
struct ParetoRow<'a> {
    solver: &'a str,
    x: f64,
    y: f64,
    on_front: bool,
}

/// Writes `solver,x,y,on_front` and returns the membership flags.
pub fn write_pareto<W: Write>(out: W, points: &[ParetoPoint]) -> Result<Vec<bool>> {
    let front = pareto_front(points)?;
    let mut w = csv::Writer::from_writer(out);
    for (p, &on) in points.iter().zip(&front) {
        w.serialize(ParetoRow {
            solver: &p.label,
            x: p.x,
            y: p.y,
            on_front: on,
        })?;
    }
    w.flush()?;
    Ok(front)
}
