//! Workpiece geometry and the tolerance set.
//!
//! A workpiece is a rigid carrier holding one or more pins that must drop into
//! matching holes on a board. The tolerance set is every planar pose
//! `(x, y, θ)` of the carrier for which each pin cross-section lies inside its
//! hole. Poses rotate about the carrier origin first and then translate.
//!
//! Pins sit on a rows × cols grid centred on the origin: columns run along
//! `x` (spacing `col_interval`), rows along `y` (spacing `row_interval`).
//! Holes are at the nominal pin positions; defects move pins only.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use thiserror::Error;

use crate::math::{cos, sin, sqrt};
use crate::par;

/// Side length of the rasterised tolerance surface.
pub const MAP_SIZE: usize = 28;

/// Containment is closed; this absorbs rounding on the boundary.
const BOUNDARY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("invalid workpiece: {0}")]
    InvalidSpec(&'static str),
    #[error("defect list has {got} offsets but the workpiece has {expected} pins")]
    DefectLength { expected: usize, got: usize },
    #[error("window half-width must be positive, got {0}")]
    BadWindow(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Family {
    Circle,
    Polygon,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Circle => "circle",
            Family::Polygon => "polygon",
        }
    }

    /// Raster window half-width used for this family's tolerance maps (mm).
    pub fn default_window(self) -> f64 {
        match self {
            Family::Circle => 1.0,
            Family::Polygon => 0.5,
        }
    }
}

/// Cross-section of every pin/hole pair on a workpiece.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PinShape {
    Circle { pin_radius: f64, hole_radius: f64 },
    /// Regular polygons; the hole is axis-aligned with a vertex on the +x
    /// axis and the pin starts aligned with it.
    Polygon { sides: u32, pin_circumradius: f64, hole_circumradius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorkpieceSpec {
    pub shape: PinShape,
    pub rows: usize,
    pub cols: usize,
    pub row_interval: f64,
    pub col_interval: f64,
}

impl WorkpieceSpec {
    pub fn circle_grid(
        rows: usize,
        cols: usize,
        pin_radius: f64,
        hole_radius: f64,
        row_interval: f64,
        col_interval: f64,
    ) -> Self {
        WorkpieceSpec {
            shape: PinShape::Circle { pin_radius, hole_radius },
            rows,
            cols,
            row_interval,
            col_interval,
        }
    }

    pub fn polygon(sides: u32, pin_circumradius: f64, hole_circumradius: f64) -> Self {
        WorkpieceSpec {
            shape: PinShape::Polygon { sides, pin_circumradius, hole_circumradius },
            rows: 1,
            cols: 1,
            row_interval: 1.0,
            col_interval: 1.0,
        }
    }

    /// IC-socket style `2*n` workpiece: 0.3 mm pins in 0.5 mm holes, rows
    /// 7.62 mm apart, columns 2.54 mm apart.
    pub fn socket_2xn(cols: usize) -> Self {
        Self::circle_grid(2, cols, 0.3, 0.5, 7.62, 2.54)
    }

    /// Two pins 5 mm apart (0.3 mm pins, 0.5 mm holes) used for the defect study.
    pub fn defect_study_2x1() -> Self {
        Self::circle_grid(2, 1, 0.3, 0.5, 5.0, 5.0)
    }

    pub fn family(&self) -> Family {
        match self.shape {
            PinShape::Circle { .. } => Family::Circle,
            PinShape::Polygon { .. } => Family::Polygon,
        }
    }

    pub fn pin_count(&self) -> usize {
        self.rows * self.cols
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if self.rows == 0 || self.cols == 0 {
            return Err(GeometryError::InvalidSpec("rows and cols must be at least 1"));
        }
        if !(self.row_interval > 0.0 && self.col_interval > 0.0) {
            return Err(GeometryError::InvalidSpec("intervals must be positive"));
        }
        match self.shape {
            PinShape::Circle { pin_radius, hole_radius } => {
                if !(pin_radius > 0.0 && hole_radius > 0.0) {
                    return Err(GeometryError::InvalidSpec("radii must be positive"));
                }
                if pin_radius >= hole_radius {
                    return Err(GeometryError::InvalidSpec("pin radius must be below hole radius"));
                }
            }
            PinShape::Polygon { sides, pin_circumradius, hole_circumradius } => {
                if !(3..=6).contains(&sides) {
                    return Err(GeometryError::InvalidSpec("polygon sides must be in 3..=6"));
                }
                if !(pin_circumradius > 0.0 && hole_circumradius > 0.0) {
                    return Err(GeometryError::InvalidSpec("circumradii must be positive"));
                }
                if pin_circumradius >= hole_circumradius {
                    return Err(GeometryError::InvalidSpec(
                        "pin circumradius must be below hole circumradius",
                    ));
                }
                if self.rows != 1 || self.cols != 1 {
                    return Err(GeometryError::InvalidSpec("polygon workpieces carry a single pin"));
                }
            }
        }
        Ok(())
    }

    /// Nominal centre of pin `index` (row-major).
    #[inline]
    pub fn nominal_pin(&self, index: usize) -> [f64; 2] {
        let row = index / self.cols;
        let col = index % self.cols;
        let x = (col as f64 - (self.cols as f64 - 1.0) / 2.0) * self.col_interval;
        let y = (row as f64 - (self.rows as f64 - 1.0) / 2.0) * self.row_interval;
        [x, y]
    }

    /// Largest distance from the origin to a nominal pin centre.
    pub fn max_pin_radius(&self) -> f64 {
        (0..self.pin_count())
            .map(|i| {
                let [x, y] = self.nominal_pin(i);
                sqrt(x * x + y * y)
            })
            .fold(0.0, f64::max)
    }

    /// Short human-readable identifier, stable across runs.
    pub fn label(&self) -> String {
        match self.shape {
            PinShape::Circle { pin_radius, hole_radius } => format!(
                "circle-{}x{}-rp{}-rh{}-row{}-col{}",
                self.rows, self.cols, pin_radius, hole_radius, self.row_interval, self.col_interval
            ),
            PinShape::Polygon { sides, pin_circumradius, hole_circumradius } => {
                format!("polygon-{}-rp{}-rh{}", sides, pin_circumradius, hole_circumradius)
            }
        }
    }
}

/// Per-pin horizontal offsets of a realised workpiece from its nominal layout.
#[derive(Debug, Clone, PartialEq)]
pub struct DefectParams {
    pub offsets: Vec<[f64; 2]>,
}

impl DefectParams {
    pub fn nominal(spec: &WorkpieceSpec) -> Self {
        DefectParams { offsets: vec![[0.0, 0.0]; spec.pin_count()] }
    }

    pub fn is_nominal(&self) -> bool {
        self.offsets.iter().all(|o| o[0] == 0.0 && o[1] == 0.0)
    }

    pub fn check(&self, spec: &WorkpieceSpec) -> Result<(), GeometryError> {
        if self.offsets.len() != spec.pin_count() {
            return Err(GeometryError::DefectLength {
                expected: spec.pin_count(),
                got: self.offsets.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PlanarPose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl PlanarPose {
    pub const ORIGIN: PlanarPose = PlanarPose { x: 0.0, y: 0.0, theta: 0.0 };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        PlanarPose { x, y, theta }
    }
}

/// Realised pin centres (nominal layout plus offsets).
pub fn pin_positions(
    spec: &WorkpieceSpec,
    defects: &DefectParams,
) -> Result<Vec<[f64; 2]>, GeometryError> {
    defects.check(spec)?;
    Ok((0..spec.pin_count())
        .map(|i| {
            let [x, y] = spec.nominal_pin(i);
            let [dx, dy] = defects.offsets[i];
            [x + dx, y + dy]
        })
        .collect())
}

/// True when the carrier at `pose` puts every pin inside its hole.
///
/// `defects` must have one offset per pin; missing offsets are treated as zero.
pub fn contains(spec: &WorkpieceSpec, defects: &DefectParams, pose: PlanarPose) -> bool {
    let (s, c) = (sin(pose.theta), cos(pose.theta));
    let n = spec.pin_count();
    match spec.shape {
        PinShape::Circle { pin_radius, hole_radius } => {
            let clearance = hole_radius - pin_radius;
            let limit = clearance * clearance + BOUNDARY_EPS;
            (0..n).all(|i| {
                let [hx, hy] = spec.nominal_pin(i);
                let [dx, dy] = defects.offsets.get(i).copied().unwrap_or([0.0, 0.0]);
                let (px, py) = (hx + dx, hy + dy);
                let qx = c * px - s * py + pose.x - hx;
                let qy = s * px + c * py + pose.y - hy;
                qx * qx + qy * qy <= limit
            })
        }
        PinShape::Polygon { sides, pin_circumradius, hole_circumradius } => {
            let k = sides as usize;
            let apothem = hole_circumradius * cos(PI / sides as f64);
            (0..n).all(|i| {
                let [hx, hy] = spec.nominal_pin(i);
                let [dx, dy] = defects.offsets.get(i).copied().unwrap_or([0.0, 0.0]);
                let (px, py) = (hx + dx, hy + dy);
                let cx = c * px - s * py + pose.x - hx;
                let cy = s * px + c * py + pose.y - hy;
                (0..k).all(|v| {
                    let a = 2.0 * PI * v as f64 / sides as f64 + pose.theta;
                    let vx = cx + pin_circumradius * cos(a);
                    let vy = cy + pin_circumradius * sin(a);
                    (0..k).all(|e| {
                        let phi = (2 * e + 1) as f64 * PI / sides as f64;
                        vx * cos(phi) + vy * sin(phi) <= apothem + BOUNDARY_EPS
                    })
                })
            })
        }
    }
}

/// Settings for the θ scan behind [`theta_sup`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaScan {
    pub max: f64,
    pub points: usize,
    pub tolerance: f64,
}

impl Default for ThetaScan {
    fn default() -> Self {
        ThetaScan { max: 0.6, points: 64, tolerance: 1e-4 }
    }
}

/// Upper edge of the tolerance set above `(x, y)`: the largest θ ≥ 0 reached
/// from θ = 0 without leaving the set, capped at the scan maximum.
pub fn theta_sup(spec: &WorkpieceSpec, defects: &DefectParams, x: f64, y: f64) -> f64 {
    theta_sup_with(spec, defects, x, y, ThetaScan::default())
}

pub fn theta_sup_with(
    spec: &WorkpieceSpec,
    defects: &DefectParams,
    x: f64,
    y: f64,
    scan: ThetaScan,
) -> f64 {
    let inside = |theta: f64| contains(spec, defects, PlanarPose { x, y, theta });
    if !inside(0.0) {
        return 0.0;
    }
    let points = scan.points.max(2);
    let step = scan.max / (points - 1) as f64;
    let mut lo = 0.0;
    let mut hi = None;
    for j in 1..points {
        let t = j as f64 * step;
        if inside(t) {
            lo = t;
        } else {
            hi = Some(t);
            break;
        }
    }
    let Some(mut hi) = hi else {
        return scan.max;
    };
    while hi - lo > scan.tolerance {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Rasterised θ-surface of the tolerance set over `[-w, w]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToleranceMap {
    pub rows: usize,
    pub cols: usize,
    pub window_half_width: f64,
    /// Row-major; row index follows `y`, column index follows `x`.
    pub values: Vec<f64>,
    pub spec_id: Option<String>,
}

impl ToleranceMap {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Centre of cell `(row, col)` as `(x, y)`.
    pub fn cell_center(&self, row: usize, col: usize) -> (f64, f64) {
        cell_center(self.window_half_width, self.rows, self.cols, row, col)
    }

    pub fn cell_size(&self) -> f64 {
        2.0 * self.window_half_width / self.cols as f64
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

fn cell_center(w: f64, rows: usize, cols: usize, row: usize, col: usize) -> (f64, f64) {
    let x = -w + (col as f64 + 0.5) * (2.0 * w / cols as f64);
    let y = -w + (row as f64 + 0.5) * (2.0 * w / rows as f64);
    (x, y)
}

/// 28×28 raster of [`theta_sup`] at cell centres.
pub fn render_tolerance(
    spec: &WorkpieceSpec,
    defects: &DefectParams,
    window_half_width: f64,
) -> Result<ToleranceMap, GeometryError> {
    if !(window_half_width > 0.0) || !window_half_width.is_finite() {
        return Err(GeometryError::BadWindow(window_half_width));
    }
    spec.validate()?;
    defects.check(spec)?;
    let rows: Vec<Vec<f64>> = par::map_indexed(MAP_SIZE, |row| {
        (0..MAP_SIZE)
            .map(|col| {
                let (x, y) = cell_center(window_half_width, MAP_SIZE, MAP_SIZE, row, col);
                theta_sup(spec, defects, x, y)
            })
            .collect()
    });
    Ok(ToleranceMap {
        rows: MAP_SIZE,
        cols: MAP_SIZE,
        window_half_width,
        values: rows.into_iter().flatten().collect(),
        spec_id: Some(spec.label()),
    })
}

/// Independent Monte-Carlo containment check used to validate [`contains`].
///
/// Points are drawn from each transformed pin cross-section (half uniformly
/// over its area, half uniformly along its outline, since the closed outline
/// is where thin violations show) and tested against the hole pointwise.
/// Exactly-on-boundary poses may go either way.
pub mod oracle {
    use super::*;

    fn regular_polygon(center: [f64; 2], circumradius: f64, sides: u32) -> Vec<[f64; 2]> {
        (0..sides)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / sides as f64;
                [center[0] + circumradius * cos(a), center[1] + circumradius * sin(a)]
            })
            .collect()
    }

    /// Point-in-convex-polygon via edge cross products (counter-clockwise vertices).
    fn in_convex(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
        let n = poly.len();
        (0..n).all(|i| {
            let a = poly[i];
            let b = poly[(i + 1) % n];
            let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
            cross >= -1e-12
        })
    }

    fn sample_local<R: rand::Rng + ?Sized>(shape: PinShape, boundary: bool, rng: &mut R) -> [f64; 2] {
        match shape {
            PinShape::Circle { pin_radius, .. } => {
                let a = 2.0 * PI * rng.random::<f64>();
                let r = if boundary { pin_radius } else { pin_radius * sqrt(rng.random::<f64>()) };
                [r * cos(a), r * sin(a)]
            }
            PinShape::Polygon { sides, pin_circumradius, .. } => {
                let poly = regular_polygon([0.0, 0.0], pin_circumradius, sides);
                let k = rng.random_range(0..sides as usize);
                let a = poly[k];
                let b = poly[(k + 1) % sides as usize];
                if boundary {
                    let t = rng.random::<f64>();
                    [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]
                } else {
                    // fan triangles (origin, a, b) all have equal area
                    let (mut u, mut v) = (rng.random::<f64>(), rng.random::<f64>());
                    if u + v > 1.0 {
                        u = 1.0 - u;
                        v = 1.0 - v;
                    }
                    [u * a[0] + v * b[0], u * a[1] + v * b[1]]
                }
            }
        }
    }

    pub fn mc_contains<R: rand::Rng + ?Sized>(
        spec: &WorkpieceSpec,
        defects: &DefectParams,
        pose: PlanarPose,
        n_samples: usize,
        rng: &mut R,
    ) -> bool {
        let n_samples = n_samples.max(1);
        let (s, c) = (sin(pose.theta), cos(pose.theta));
        for i in 0..spec.pin_count() {
            let hole = spec.nominal_pin(i);
            let d = defects.offsets.get(i).copied().unwrap_or([0.0, 0.0]);
            let center = [hole[0] + d[0], hole[1] + d[1]];
            let hole_poly = match spec.shape {
                PinShape::Polygon { sides, hole_circumradius, .. } => {
                    Some(regular_polygon(hole, hole_circumradius, sides))
                }
                PinShape::Circle { .. } => None,
            };
            for k in 0..n_samples {
                let local = sample_local(spec.shape, k % 2 == 1, rng);
                let bx = center[0] + local[0];
                let by = center[1] + local[1];
                let p = [c * bx - s * by + pose.x, s * bx + c * by + pose.y];
                let ok = match (&spec.shape, &hole_poly) {
                    (PinShape::Circle { hole_radius, .. }, _) => {
                        let dx = p[0] - hole[0];
                        let dy = p[1] - hole[1];
                        dx * dx + dy * dy <= hole_radius * hole_radius + 1e-12
                    }
                    (_, Some(poly)) => in_convex(poly, p),
                    _ => unreachable!(),
                };
                if !ok {
                    return false;
                }
            }
        }
        true
    }
}
