//! Transition-probability landscapes over a plane of error parameters and
//! the size of their high-fidelity regions.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ErrorModel, Errors};
use crate::su2::{probability_at, CompositeSequence};

/// Orders `m` of the reported levels `1 - 10^-m`.
pub const LEVEL_ORDERS: [u32; 3] = [2, 3, 4];

/// Resolution of the width search along an axis.
pub const WIDTH_RESOLUTION: f64 = 1e-5;

pub fn level(m: u32) -> f64 {
    1.0 - 10f64.powi(-(m as i32))
}

/// Scannable parameter. `Rabi` and `Detuning` are in units of the nominal
/// Rabi frequency; `Rabi = 1 + alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    Alpha,
    Epsilon,
    Rabi,
    Detuning,
}

impl Axis {
    fn set(self, errors: &mut Errors, value: f64) {
        match self {
            Axis::Alpha => errors.alpha = value,
            Axis::Rabi => errors.alpha = value - 1.0,
            Axis::Epsilon => errors.epsilon = value,
            Axis::Detuning => errors.delta = value,
        }
    }

    /// Axis coordinate of the zero-error point.
    pub fn nominal(self) -> f64 {
        match self {
            Axis::Rabi => 1.0,
            _ => 0.0,
        }
    }

    fn variable(self) -> usize {
        match self {
            Axis::Alpha | Axis::Rabi => 0,
            Axis::Epsilon => 1,
            Axis::Detuning => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub axis: Axis,
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl AxisSpec {
    pub fn new(axis: Axis, min: f64, max: f64, points: usize) -> Self {
        AxisSpec { axis, min, max, points }
    }

    pub fn value(&self, i: usize) -> f64 {
        if self.points <= 1 {
            self.min
        } else {
            self.min + (self.max - self.min) * i as f64 / (self.points - 1) as f64
        }
    }

    pub fn step(&self) -> f64 {
        if self.points <= 1 {
            0.0
        } else {
            (self.max - self.min) / (self.points - 1) as f64
        }
    }

    fn validate(&self) -> Result<()> {
        if self.points == 0 {
            return Err(Error::InvalidGrid(format!("{:?} axis has no points", self.axis)));
        }
        if !self.min.is_finite() || !self.max.is_finite() || (self.points > 1 && self.max <= self.min) {
            return Err(Error::InvalidGrid(format!(
                "{:?} axis range [{}, {}] is not increasing",
                self.axis, self.min, self.max
            )));
        }
        Ok(())
    }
}

/// Two scanned axes plus the values of the remaining error variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: AxisSpec,
    pub y: AxisSpec,
    pub fixed: Errors,
}

impl GridSpec {
    /// `alpha` in `[-1, 1]` by `epsilon` in `[-0.25, 0.25]`, 201 x 201.
    pub fn double_default() -> Self {
        GridSpec {
            x: AxisSpec::new(Axis::Alpha, -1.0, 1.0, 201),
            y: AxisSpec::new(Axis::Epsilon, -0.25, 0.25, 201),
            fixed: Errors::ZERO,
        }
    }

    /// Rabi frequency in `[0, 2]` by detuning in `[-1, 1]`, 201 x 201, at a
    /// fixed phase error.
    pub fn triple_default(epsilon: f64) -> Self {
        GridSpec {
            x: AxisSpec::new(Axis::Rabi, 0.0, 2.0, 201),
            y: AxisSpec::new(Axis::Detuning, -1.0, 1.0, 201),
            fixed: Errors::triple(0.0, 0.0, epsilon),
        }
    }

    pub fn default_for(model: ErrorModel) -> Self {
        match model {
            ErrorModel::Double => Self::double_default(),
            ErrorModel::Triple => Self::triple_default(0.0),
        }
    }

    /// Same ranges with a different number of points per axis.
    pub fn with_points(mut self, points: usize) -> Self {
        self.x.points = points;
        self.y.points = points;
        self
    }

    pub fn validate(&self, model: ErrorModel) -> Result<()> {
        self.x.validate()?;
        self.y.validate()?;
        if self.x.axis.variable() == self.y.axis.variable() {
            return Err(Error::InvalidGrid(format!(
                "axes {:?} and {:?} scan the same variable",
                self.x.axis, self.y.axis
            )));
        }
        if model == ErrorModel::Double && (self.x.axis == Axis::Detuning || self.y.axis == Axis::Detuning) {
            return Err(Error::InvalidGrid("the double model has no detuning".into()));
        }
        Ok(())
    }

    fn errors_at(&self, x: f64, y: f64) -> Errors {
        let mut e = self.fixed;
        self.x.axis.set(&mut e, x);
        self.y.axis.set(&mut e, y);
        e
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileGrid {
    pub sequence: CompositeSequence,
    pub model: ErrorModel,
    pub spec: GridSpec,
    /// Row-major with `y` as the outer index.
    pub values: Vec<f64>,
}

impl ProfileGrid {
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.spec.x.points + ix]
    }

    /// Fraction of nodes with probability above `level`.
    pub fn fraction_above(&self, level: f64) -> f64 {
        self.values.iter().filter(|&&p| p > level).count() as f64 / self.values.len() as f64
    }

    /// Writes `x,y,p` rows after a `#` comment line carrying `header`.
    pub fn write_csv<W: Write>(&self, mut out: W, header: &str) -> Result<()> {
        writeln!(out, "# {header}")?;
        writeln!(out, "x,y,p")?;
        for iy in 0..self.spec.y.points {
            let y = self.spec.y.value(iy);
            for ix in 0..self.spec.x.points {
                writeln!(out, "{:.16e},{:.16e},{:.16e}", self.spec.x.value(ix), y, self.get(ix, iy))?;
            }
        }
        Ok(())
    }

    /// `{axes, fixed, values}` with one row of `values` per `y` node.
    pub fn to_json(&self) -> GridJson<'_> {
        GridJson {
            sequence: &self.sequence.label,
            model: self.model,
            axes: [self.spec.x, self.spec.y],
            fixed: self.spec.fixed,
            values: self.values.chunks(self.spec.x.points).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct GridJson<'a> {
    pub sequence: &'a str,
    pub model: ErrorModel,
    pub axes: [AxisSpec; 2],
    pub fixed: Errors,
    pub values: Vec<&'a [f64]>,
}

/// Transition probability at every node of `spec`.
pub fn scan(seq: &CompositeSequence, model: ErrorModel, spec: &GridSpec) -> Result<ProfileGrid> {
    spec.validate(model)?;
    let nx = spec.x.points;
    let values: Vec<f64> = (0..spec.y.points)
        .into_par_iter()
        .flat_map_iter(|iy| {
            let y = spec.y.value(iy);
            (0..nx).map(move |ix| probability_at(seq, model, &spec.errors_at(spec.x.value(ix), y)))
        })
        .collect();
    Ok(ProfileGrid {
        sequence: seq.clone(),
        model,
        spec: *spec,
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelMetrics {
    pub m: u32,
    pub level: f64,
    pub cell_fraction: f64,
    /// Width of the above-level interval along `x` through the zero-error point.
    pub x_width: f64,
    /// Width of the above-level interval along `y` through the zero-error point.
    pub y_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegionMetrics {
    pub sequence: String,
    pub x_axis: Axis,
    pub y_axis: Axis,
    pub levels: Vec<LevelMetrics>,
}

impl RegionMetrics {
    pub fn at(&self, m: u32) -> Option<&LevelMetrics> {
        self.levels.iter().find(|l| l.m == m)
    }
}

pub fn region_metrics(grid: &ProfileGrid) -> RegionMetrics {
    let spec = &grid.spec;
    let levels = LEVEL_ORDERS
        .iter()
        .map(|&m| {
            let lv = level(m);
            let along_x = |x: f64| {
                probability_at(&grid.sequence, grid.model, &spec.errors_at(x, spec.y.axis.nominal()))
            };
            let along_y = |y: f64| {
                probability_at(&grid.sequence, grid.model, &spec.errors_at(spec.x.axis.nominal(), y))
            };
            LevelMetrics {
                m,
                level: lv,
                cell_fraction: grid.fraction_above(lv),
                x_width: interval_width(along_x, &spec.x, lv),
                y_width: interval_width(along_y, &spec.y, lv),
            }
        })
        .collect();
    RegionMetrics {
        sequence: grid.sequence.label.clone(),
        x_axis: spec.x.axis,
        y_axis: spec.y.axis,
        levels,
    }
}

/// Length of the connected interval around the axis' nominal point on which
/// `p > level`, clipped to the axis range. The walk proceeds in grid steps
/// and each edge is refined by bisection.
fn interval_width(p: impl Fn(f64) -> f64, axis: &AxisSpec, level: f64) -> f64 {
    let center = axis.axis.nominal();
    if center < axis.min || center > axis.max || p(center) <= level {
        return 0.0;
    }
    let step = if axis.points > 1 { axis.step() } else { (axis.max - axis.min).max(1e-2) };
    let edge = |dir: f64, bound: f64| {
        let mut inside = center;
        loop {
            let next = inside + dir * step;
            if (next - bound) * dir >= 0.0 {
                // reached the end of the range
                if p(bound) > level {
                    return bound;
                }
                return bisect(&p, level, inside, bound);
            }
            if p(next) <= level {
                return bisect(&p, level, inside, next);
            }
            inside = next;
        }
    };
    edge(1.0, axis.max) - edge(-1.0, axis.min)
}

fn bisect(p: &impl Fn(f64) -> f64, level: f64, mut inside: f64, mut outside: f64) -> f64 {
    while (outside - inside).abs() > WIDTH_RESOLUTION {
        let mid = 0.5 * (inside + outside);
        if p(mid) > level {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    inside
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelComparison {
    pub m: u32,
    pub fraction_a: f64,
    pub fraction_b: f64,
    /// `fraction_a - fraction_b`.
    pub difference: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub a: String,
    pub b: String,
    pub levels: Vec<LevelComparison>,
    pub max_abs_diff: f64,
}

impl Comparison {
    pub fn at(&self, m: u32) -> Option<&LevelComparison> {
        self.levels.iter().find(|l| l.m == m)
    }
}

/// Scans both sequences on the same grid and compares their high-fidelity
/// regions node by node.
pub fn compare(
    seq_a: &CompositeSequence,
    seq_b: &CompositeSequence,
    model: ErrorModel,
    spec: &GridSpec,
) -> Result<Comparison> {
    let (ga, gb) = (scan(seq_a, model, spec)?, scan(seq_b, model, spec)?);
    Ok(compare_grids(&ga, &gb))
}

pub fn compare_grids(ga: &ProfileGrid, gb: &ProfileGrid) -> Comparison {
    assert_eq!(ga.spec, gb.spec, "grids must share a spec");
    let levels = LEVEL_ORDERS
        .iter()
        .map(|&m| {
            let (fa, fb) = (ga.fraction_above(level(m)), gb.fraction_above(level(m)));
            LevelComparison {
                m,
                fraction_a: fa,
                fraction_b: fb,
                difference: fa - fb,
            }
        })
        .collect();
    let max_abs_diff = ga
        .values
        .iter()
        .zip(&gb.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Comparison {
        a: ga.sequence.label.clone(),
        b: gb.sequence.label.clone(),
        levels,
        max_abs_diff,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::get_sequence;
    use crate::su2::PulseSpec;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn single_pulse() -> CompositeSequence {
        CompositeSequence::new("single", vec![PulseSpec::pi(0.0)]).unwrap()
    }

    #[test]
    fn single_pulse_ignores_phase_error() {
        let spec = GridSpec::double_default().with_points(41);
        let grid = scan(&single_pulse(), ErrorModel::Double, &spec).unwrap();
        let center = 20;
        for iy in 0..41 {
            assert_abs_diff_eq!(grid.get(center, iy), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn single_pulse_width() {
        let grid = scan(&single_pulse(), ErrorModel::Double, &GridSpec::double_default()).unwrap();
        let metrics = region_metrics(&grid);
        // invert cos^2(pi alpha / 2) = 1 - 1e-4
        let half = 2.0 / PI * (1e-4f64).sqrt().asin();
        assert_abs_diff_eq!(half, 0.006366, epsilon = 1e-6);
        assert_abs_diff_eq!(metrics.at(4).unwrap().x_width, 2.0 * half, epsilon = 1e-4);
        // no dependence on epsilon: the whole epsilon range is inside
        assert_abs_diff_eq!(metrics.at(4).unwrap().y_width, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn fractions_are_monotone() {
        let seq = get_sequence("Phi5").unwrap();
        let grid = scan(&seq, ErrorModel::Double, &GridSpec::double_default().with_points(61)).unwrap();
        assert!(grid.values.iter().all(|&p| (0.0..=1.0).contains(&p)));
        let m = region_metrics(&grid);
        let f: Vec<f64> = m.levels.iter().map(|l| l.cell_fraction).collect();
        assert!(f[0] >= f[1] && f[1] >= f[2], "{f:?}");
        let w: Vec<f64> = m.levels.iter().map(|l| l.x_width).collect();
        assert!(w[0] >= w[1] && w[1] >= w[2], "{w:?}");
    }

    #[test]
    fn grid_validation() {
        let seq = single_pulse();
        let mut spec = GridSpec::double_default();
        spec.x.points = 0;
        assert!(matches!(scan(&seq, ErrorModel::Double, &spec), Err(Error::InvalidGrid(_))));
        let mut spec = GridSpec::double_default();
        spec.y = AxisSpec::new(Axis::Rabi, 0.0, 2.0, 3);
        assert!(scan(&seq, ErrorModel::Double, &spec).is_err());
        assert!(scan(&seq, ErrorModel::Double, &GridSpec::triple_default(0.0)).is_err());
        let mut spec = GridSpec::double_default();
        spec.x.max = spec.x.min;
        assert!(scan(&seq, ErrorModel::Double, &spec).is_err());
    }

    #[test]
    fn nominal_outside_range_has_zero_width() {
        let seq = single_pulse();
        let mut spec = GridSpec::double_default().with_points(11);
        spec.x = AxisSpec::new(Axis::Alpha, 0.5, 1.0, 11);
        let grid = scan(&seq, ErrorModel::Double, &spec).unwrap();
        assert_eq!(region_metrics(&grid).at(2).unwrap().x_width, 0.0);
    }

    #[test]
    fn csv_and_json_layout() {
        let seq = get_sequence("B3").unwrap();
        let spec = GridSpec::double_default().with_points(3);
        let grid = scan(&seq, ErrorModel::Double, &spec).unwrap();
        let mut buf = Vec::new();
        grid.write_csv(&mut buf, "rng_seed=0").unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# rng_seed=0");
        assert_eq!(lines[1], "x,y,p");
        assert_eq!(lines.len(), 2 + 9);
        let first: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
        assert_eq!(first[..2], [-1.0, -0.25]);
        let json = serde_json::to_value(grid.to_json()).unwrap();
        assert_eq!(json["values"].as_array().unwrap().len(), 3);
        assert_eq!(json["axes"][0]["axis"], "alpha");
    }

    #[test]
    fn identical_grids_compare_equal() {
        let b5a = get_sequence("B5a").unwrap();
        let spec = GridSpec::double_default().with_points(21);
        let cmp = compare(&b5a, &b5a, ErrorModel::Double, &spec).unwrap();
        assert_eq!(cmp.max_abs_diff, 0.0);
        assert!(cmp.levels.iter().all(|l| l.difference == 0.0));
    }
}
