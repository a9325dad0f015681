//! Box-counting dimension of planar point sets, plus generators for
//! reference fractals with known dimension.
//!
//! Boxes form an axis-aligned grid of pitch `eps` anchored at the minimum
//! corner of the set's bounding box. Cells are half-open, so a point lying
//! exactly on a cell's upper edge belongs to the next cell. Cell indices are
//! computed as `floor((x - min) / eps + 1e-9)`; the tiny bias keeps points
//! that sit on a grid line analytically from slipping into the lower cell
//! through rounding.

use std::collections::HashSet;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{FractalError, Result};
use crate::estimation::{estimate_dimension, DimensionEstimate, LogLogPoint};

const CELL_EDGE_BIAS: f64 = 1e-9;

/// Deepest Koch construction accepted by [`gen_koch`] (4^10 + 1 points).
pub const MAX_KOCH_LEVEL: u32 = 10;

/// Deepest carpet accepted by [`gen_sierpinski_carpet`] (8^6 points).
pub const MAX_CARPET_LEVEL: u32 = 6;

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Bounds {
    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    /// Larger of width and height.
    pub fn extent(&self) -> f64 {
        self.width().max(self.height())
    }
}

/// Non-empty finite set of planar points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet2D {
    points: Vec<(f64, f64)>,
    bounds: Bounds,
}

impl PointSet2D {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(FractalError::invalid("point set is empty"));
        }
        if let Some(p) = points
            .iter()
            .find(|p| !(p.0.is_finite() && p.1.is_finite()))
        {
            return Err(FractalError::invalid(format!(
                "point ({}, {}) is not finite",
                p.0, p.1
            )));
        }
        let mut bounds = Bounds {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        };
        for &(x, y) in &points {
            bounds.min_x = bounds.min_x.min(x);
            bounds.min_y = bounds.min_y.min(y);
            bounds.max_x = bounds.max_x.max(x);
            bounds.max_y = bounds.max_y.max(y);
        }
        Ok(PointSet2D { points, bounds })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Result<PointSet2D> {
        PointSet2D::new(self.points.iter().map(|&(x, y)| (x + dx, y + dy)).collect())
    }

    /// Plain-text export, one `x,y` pair per line.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.points.len() * 40);
        for &(x, y) in &self.points {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }

    /// Parses the format written by [`to_text`](Self::to_text). Blank lines
    /// and lines starting with `#` are ignored.
    pub fn from_text(text: &str) -> Result<PointSet2D> {
        let mut points = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parsed = line.split_once(',').and_then(|(x, y)| {
                Some((x.trim().parse::<f64>().ok()?, y.trim().parse::<f64>().ok()?))
            });
            match parsed {
                Some(p) => points.push(p),
                None => {
                    return Err(FractalError::invalid(format!(
                        "line {}: expected `x,y`, got {line:?}",
                        lineno + 1
                    )))
                }
            }
        }
        PointSet2D::new(points)
    }
}

/// Number of grid cells of pitch `box_size` that contain at least one point.
pub fn count_boxes(set: &PointSet2D, box_size: f64) -> Result<usize> {
    if !(box_size.is_finite() && box_size > 0.0) {
        return Err(FractalError::invalid(format!(
            "box size must be positive, got {box_size}"
        )));
    }
    let b = set.bounds;
    let cell = |v: f64, origin: f64| ((v - origin) / box_size + CELL_EDGE_BIAS).floor() as i64;
    let occupied: HashSet<(i64, i64)> = set
        .points
        .iter()
        .map(|&(x, y)| (cell(x, b.min_x), cell(y, b.min_y)))
        .collect();
    Ok(occupied.len())
}

/// Fits `ln N(eps)` against `ln eps` and reports `D = -slope`.
///
/// `box_sizes` must be strictly decreasing. If every size yields the same
/// count there is no scaling to measure and the call fails.
pub fn box_dimension(set: &PointSet2D, box_sizes: &[f64]) -> Result<DimensionEstimate> {
    if box_sizes.len() < 2 {
        return Err(FractalError::invalid(format!(
            "need at least 2 box sizes, got {}",
            box_sizes.len()
        )));
    }
    if box_sizes.windows(2).any(|w| w[1] >= w[0]) {
        return Err(FractalError::invalid(format!(
            "box sizes must be strictly decreasing, got {box_sizes:?}"
        )));
    }
    let points = box_sizes
        .iter()
        .map(|&eps| Ok(LogLogPoint::new(eps, count_boxes(set, eps)? as f64)))
        .collect::<Result<Vec<_>>>()?;
    if points.iter().all(|p| p.measure == points[0].measure) {
        return Err(FractalError::Estimation {
            reason: format!(
                "box count is {} at every size; sizes are too large or too few",
                points[0].measure
            ),
            retained: points.len(),
            excluded: 0,
        });
    }
    estimate_dimension(&points)
}

/// `steps` geometric sizes from `extent / coarse` down to `extent / fine`.
pub fn geometric_box_sizes(extent: f64, coarse: f64, fine: f64, steps: usize) -> Vec<f64> {
    if steps < 2 {
        return vec![extent / coarse];
    }
    let ratio = (coarse / fine).powf(1.0 / (steps - 1) as f64);
    (0..steps)
        .map(|i| extent / coarse * ratio.powi(i as i32))
        .collect()
}

/// Twelve geometric sizes from 1/4 to 1/512 of the larger bounding-box side.
pub fn default_box_sizes(set: &PointSet2D) -> Vec<f64> {
    geometric_box_sizes(set.bounds.extent(), 4.0, 512.0, 12)
}

/// Vertices of the level-`level` Koch curve over the segment (0,0)-(1,0),
/// bumps pointing toward positive y. Contains `4^level + 1` points.
pub fn gen_koch(level: u32) -> Result<PointSet2D> {
    if level > MAX_KOCH_LEVEL {
        return Err(FractalError::invalid(format!(
            "Koch level {level} exceeds the cap of {MAX_KOCH_LEVEL}"
        )));
    }
    let (sin60, cos60) = (3f64.sqrt() / 2.0, 0.5);
    let mut vertices = vec![(0.0, 0.0), (1.0, 0.0)];
    for _ in 0..level {
        let mut next = Vec::with_capacity(4 * (vertices.len() - 1) + 1);
        for w in vertices.windows(2) {
            let ((px, py), (qx, qy)) = (w[0], w[1]);
            let (dx, dy) = ((qx - px) / 3.0, (qy - py) / 3.0);
            let a = (px + dx, py + dy);
            let peak = (a.0 + dx * cos60 - dy * sin60, a.1 + dx * sin60 + dy * cos60);
            next.extend_from_slice(&[w[0], a, peak, (px + 2.0 * dx, py + 2.0 * dy)]);
        }
        next.push(*vertices.last().unwrap());
        vertices = next;
    }
    PointSet2D::new(vertices)
}

/// Centers of the `8^level` cells kept by the carpet construction on the unit square.
pub fn gen_sierpinski_carpet(level: u32) -> Result<PointSet2D> {
    if level > MAX_CARPET_LEVEL {
        return Err(FractalError::invalid(format!(
            "carpet level {level} exceeds the cap of {MAX_CARPET_LEVEL}"
        )));
    }
    let side = 3usize.pow(level);
    let removed = |mut i: usize, mut j: usize| {
        while i > 0 || j > 0 {
            if i % 3 == 1 && j % 3 == 1 {
                return true;
            }
            i /= 3;
            j /= 3;
        }
        false
    };
    let pitch = 1.0 / side as f64;
    let points = (0..side)
        .flat_map(|i| (0..side).map(move |j| (i, j)))
        .filter(|&(i, j)| !removed(i, j))
        .map(|(i, j)| ((i as f64 + 0.5) * pitch, (j as f64 + 0.5) * pitch))
        .collect();
    PointSet2D::new(points)
}

/// `n x n` lattice `(i/n, j/n)` filling the unit square.
pub fn gen_filled_square(n: usize) -> Result<PointSet2D> {
    let pitch = 1.0 / n as f64;
    PointSet2D::new(
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i as f64 * pitch, j as f64 * pitch)))
            .collect(),
    )
}

/// `n` points `(i/n, 0)` along the unit segment.
pub fn gen_segment(n: usize) -> Result<PointSet2D> {
    PointSet2D::new((0..n).map(|i| (i as f64 / n as f64, 0.0)).collect())
}

/// Escape-time sampling of `z -> z^2 + c` over `[-2, 2]^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JuliaParams {
    pub c_re: f64,
    pub c_im: f64,
    pub grid_resolution: usize,
    pub max_iter: u32,
    pub escape_radius: f64,
}

/// Parameter of the Douady rabbit.
pub const DOUADY_RABBIT_C: (f64, f64) = (-0.123, 0.745);

impl JuliaParams {
    pub const MIN_RESOLUTION: usize = 64;
    pub const MIN_ITER: u32 = 50;
    pub const DEFAULT_MAX_ITER: u32 = 500;

    pub fn new(c_re: f64, c_im: f64, grid_resolution: usize) -> Self {
        JuliaParams {
            c_re,
            c_im,
            grid_resolution,
            max_iter: Self::DEFAULT_MAX_ITER,
            escape_radius: 2.0,
        }
    }

    pub fn douady_rabbit(grid_resolution: usize) -> Self {
        Self::new(DOUADY_RABBIT_C.0, DOUADY_RABBIT_C.1, grid_resolution)
    }

    /// `c = 0`, whose Julia set is the unit circle.
    pub fn circle(grid_resolution: usize) -> Self {
        Self::new(0.0, 0.0, grid_resolution)
    }

    fn validate(&self) -> Result<()> {
        if !(self.c_re.is_finite() && self.c_im.is_finite()) {
            return Err(FractalError::invalid("c must be finite"));
        }
        if self.grid_resolution < Self::MIN_RESOLUTION {
            return Err(FractalError::invalid(format!(
                "grid resolution {} is below {}",
                self.grid_resolution,
                Self::MIN_RESOLUTION
            )));
        }
        if self.max_iter < Self::MIN_ITER {
            return Err(FractalError::invalid(format!(
                "max_iter {} is below {}",
                self.max_iter,
                Self::MIN_ITER
            )));
        }
        if !(self.escape_radius.is_finite() && self.escape_radius >= 2.0) {
            return Err(FractalError::invalid(format!(
                "escape radius must be at least 2, got {}",
                self.escape_radius
            )));
        }
        Ok(())
    }
}

fn escapes(mut re: f64, mut im: f64, p: &JuliaParams) -> bool {
    let r2 = p.escape_radius * p.escape_radius;
    for _ in 0..p.max_iter {
        let re2 = re * re;
        let im2 = im * im;
        if re2 + im2 > r2 {
            return true;
        }
        im = 2.0 * re * im + p.c_im;
        re = re2 - im2 + p.c_re;
    }
    re * re + im * im > r2
}

/// Centers of grid cells lying on the escape / non-escape interface.
///
/// A cell belongs to the boundary band when its closed 4-neighborhood (the
/// cell and its horizontal and vertical neighbors) holds both escaping and
/// non-escaping cells.
pub fn gen_julia_boundary(params: &JuliaParams) -> Result<PointSet2D> {
    params.validate()?;
    let res = params.grid_resolution;
    let pitch = 4.0 / res as f64;
    let center = |i: usize| -2.0 + (i as f64 + 0.5) * pitch;

    // escaped[row * res + col], row indexes y and col indexes x
    let escaped: Vec<bool> = (0..res)
        .into_par_iter()
        .flat_map_iter(|row| {
            let y = center(row);
            (0..res).map(move |col| escapes(center(col), y, params))
        })
        .collect();

    let points: Vec<(f64, f64)> = (0..res)
        .into_par_iter()
        .flat_map_iter(|row| {
            let escaped = &escaped;
            (0..res).filter_map(move |col| {
                let here = escaped[row * res + col];
                let mut neighbors = [None; 4];
                if row > 0 {
                    neighbors[0] = Some(escaped[(row - 1) * res + col]);
                }
                if row + 1 < res {
                    neighbors[1] = Some(escaped[(row + 1) * res + col]);
                }
                if col > 0 {
                    neighbors[2] = Some(escaped[row * res + col - 1]);
                }
                if col + 1 < res {
                    neighbors[3] = Some(escaped[row * res + col + 1]);
                }
                neighbors
                    .iter()
                    .flatten()
                    .any(|&n| n != here)
                    .then(|| (center(col), center(row)))
            })
        })
        .collect();

    if points.is_empty() {
        return Err(FractalError::invalid(format!(
            "no escape boundary found for c = {} + {}i at resolution {res}",
            params.c_re, params.c_im
        )));
    }
    PointSet2D::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(points: &[(f64, f64)]) -> PointSet2D {
        PointSet2D::new(points.to_vec()).unwrap()
    }

    #[test]
    fn corners_of_unit_square() {
        let s = set(&[(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)]);
        assert_eq!(count_boxes(&s, 0.6).unwrap(), 4);
        assert_eq!(count_boxes(&s, 2.0).unwrap(), 1);
    }

    #[test]
    fn segment_and_square_counts() {
        assert_eq!(count_boxes(&gen_segment(1000).unwrap(), 0.25).unwrap(), 4);
        assert_eq!(
            count_boxes(&gen_filled_square(512).unwrap(), 0.5).unwrap(),
            4
        );
    }

    #[test]
    fn half_open_cells() {
        // x = 0.5 sits on the edge between the first and second cell.
        let s = set(&[(0.0, 0.0), (0.5, 0.0)]);
        assert_eq!(count_boxes(&s, 0.5).unwrap(), 2);
        assert_eq!(count_boxes(&s, 0.500001).unwrap(), 1);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(PointSet2D::new(vec![]).is_err());
        assert!(PointSet2D::new(vec![(f64::NAN, 0.0)]).is_err());
        let s = set(&[(0.0, 0.0)]);
        assert!(count_boxes(&s, 0.0).is_err());
        assert!(box_dimension(&s, &[0.5]).is_err());
        assert!(box_dimension(&s, &[0.25, 0.5]).is_err());
    }

    #[test]
    fn constant_counts_are_an_estimation_error() {
        let s = set(&[(0.0, 0.0)]);
        assert!(matches!(
            box_dimension(&s, &[0.5, 0.25, 0.125]),
            Err(FractalError::Estimation { .. })
        ));
    }

    #[test]
    fn koch_construction() {
        let k0 = gen_koch(0).unwrap();
        assert_eq!(k0.points(), &[(0.0, 0.0), (1.0, 0.0)]);
        let k1 = gen_koch(1).unwrap();
        assert_eq!(k1.len(), 5);
        let (x, y) = k1.points()[2];
        assert!((x - 0.5).abs() < 1e-15);
        assert!((y - 3f64.sqrt() / 6.0).abs() < 1e-15);
        for m in 0..=6 {
            assert_eq!(gen_koch(m).unwrap().len(), 4usize.pow(m) + 1);
        }
        assert!(gen_koch(MAX_KOCH_LEVEL + 1).is_err());
    }

    #[test]
    fn carpet_construction() {
        assert_eq!(gen_sierpinski_carpet(0).unwrap().points(), &[(0.5, 0.5)]);
        let c1 = gen_sierpinski_carpet(1).unwrap();
        assert_eq!(c1.len(), 8);
        assert!(!c1.points().contains(&(0.5, 0.5)));
        assert_eq!(gen_sierpinski_carpet(3).unwrap().len(), 512);
        assert!(gen_sierpinski_carpet(MAX_CARPET_LEVEL + 1).is_err());
    }

    #[test]
    fn carpet_counts_are_powers_of_eight() {
        let c = gen_sierpinski_carpet(4).unwrap();
        for m in 1..=4 {
            assert_eq!(
                count_boxes(&c, 3f64.powi(-m)).unwrap(),
                8usize.pow(m as u32),
                "m = {m}"
            );
        }
    }

    #[test]
    fn default_sizes_span_quarter_to_512th() {
        let s = gen_filled_square(16).unwrap();
        let sizes = default_box_sizes(&s);
        let extent = s.bounds().extent();
        assert_eq!(sizes.len(), 12);
        assert!((sizes[0] - extent / 4.0).abs() < 1e-15);
        assert!((sizes[11] - extent / 512.0).abs() < 1e-15);
    }

    #[test]
    fn julia_params_validation() {
        assert!(gen_julia_boundary(&JuliaParams::circle(32)).is_err());
        let mut p = JuliaParams::circle(64);
        p.max_iter = 10;
        assert!(gen_julia_boundary(&p).is_err());
        let mut p = JuliaParams::circle(64);
        p.escape_radius = 1.5;
        assert!(gen_julia_boundary(&p).is_err());
    }

    #[test]
    fn far_outside_c_has_empty_boundary() {
        // Every grid point escapes on the first step for huge c.
        let p = JuliaParams::new(100.0, 0.0, 64);
        assert!(gen_julia_boundary(&p).is_err());
    }

    #[test]
    fn circle_boundary_hugs_unit_circle() {
        let b = gen_julia_boundary(&JuliaParams::circle(256)).unwrap();
        let pitch = 4.0 / 256.0;
        for &(x, y) in b.points() {
            let r = (x * x + y * y).sqrt();
            assert!((r - 1.0).abs() < 2.0 * pitch, "r = {r}");
        }
    }

    #[test]
    fn point_text_round_trip() {
        let k = gen_koch(2).unwrap();
        assert_eq!(PointSet2D::from_text(&k.to_text()).unwrap(), k);
        assert!(PointSet2D::from_text("1,2\nnonsense\n").is_err());
        assert!(PointSet2D::from_text("# only a comment\n").is_err());
    }
}
