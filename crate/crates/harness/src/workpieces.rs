//! Named workpieces and the `--spec` argument syntax.
//!
//! - `2*N` or `2xN`: IC-socket grid with N columns.
//! - `square`, `pentagon`, `hexagon`: the polygon pins of the experiments.
//! - `study`: the two-pin part of the defect study.
//! - `circle:ROWS,COLS,PIN,HOLE,ROW_INTERVAL,COL_INTERVAL`
//! - `polygon:SIDES,PIN,HOLE` (circumradii)

use tgi_core::geometry::WorkpieceSpec;

use crate::error::{Error, Result};

pub fn square() -> WorkpieceSpec {
    WorkpieceSpec::polygon(4, 1.5, 1.65)
}

pub fn pentagon() -> WorkpieceSpec {
    WorkpieceSpec::polygon(5, 1.5, 1.65)
}

pub fn hexagon() -> WorkpieceSpec {
    WorkpieceSpec::polygon(6, 1.2, 1.26)
}

fn numbers(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Config(format!("{what}: {e}")))?;
    if v.len() != n {
        return Err(Error::Config(format!("{what}: expected {n} comma-separated numbers, got {}", v.len())));
    }
    Ok(v)
}

fn count(v: f64, what: &str) -> Result<usize> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e6 {
        Ok(v as usize)
    } else {
        Err(Error::Config(format!("{what} must be a positive integer, got {v}")))
    }
}

pub fn parse(s: &str) -> Result<WorkpieceSpec> {
    let s = s.trim();
    let spec = match s {
        "square" => square(),
        "pentagon" => pentagon(),
        "hexagon" => hexagon(),
        "study" => WorkpieceSpec::defect_study_2x1(),
        _ => {
            if let Some(n) = s.strip_prefix("2*").or_else(|| s.strip_prefix("2x")) {
                let cols = n.parse::<usize>().map_err(|e| Error::Config(format!("workpiece `{s}`: {e}")))?;
                WorkpieceSpec::socket_2xn(cols)
            } else if let Some(rest) = s.strip_prefix("circle:") {
                let v = numbers(rest, 6, "circle")?;
                WorkpieceSpec::circle_grid(count(v[0], "rows")?, count(v[1], "cols")?, v[2], v[3], v[4], v[5])
            } else if let Some(rest) = s.strip_prefix("polygon:") {
                let v = numbers(rest, 3, "polygon")?;
                WorkpieceSpec::polygon(count(v[0], "sides")? as u32, v[1], v[2])
            } else {
                return Err(Error::Config(format!("unknown workpiece `{s}`")));
            }
        }
    };
    spec.validate().map_err(|e| Error::Config(format!("workpiece `{s}`: {e}")))?;
    Ok(spec)
}
