//! Parameter sweeps over `(theta, p)` at fixed `p1`, classifying each point
//! by which of the four states violate a witness.

use std::f64::consts::FRAC_PI_4;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{maximize_witness, table1_threshold, OptimizerConfig};
use crate::par;
use crate::states::{self, check_theta, check_weight, Family, Sign, StateParams};
use crate::witnesses::WitnessName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScanMode {
    /// Closed-form thresholds.
    #[default]
    Analytic,
    /// Numerically maximized witness against its bound.
    Numeric,
}

impl FromStr for ScanMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(ScanMode::Analytic),
            "numeric" => Ok(ScanMode::Numeric),
            _ => Err(Error::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub theta: f64,
    pub p: f64,
    pub p1: f64,
    /// Violation flags for rho1..rho4.
    pub violated: [bool; 4],
    pub enhanced: bool,
    /// Witness maxima per state (numeric mode only).
    pub values: Option<[f64; 4]>,
}

impl RegionPoint {
    fn new(theta: f64, p: f64, p1: f64, violated: [bool; 4], values: Option<[f64; 4]>) -> Self {
        let enhanced = !violated[0] && !violated[1] && !violated[2] && violated[3];
        Self {
            theta,
            p,
            p1,
            violated,
            enhanced,
            values,
        }
    }
}

/// Round to 9 significant digits, the precision used in CSV output.
pub fn round_sig9(v: f64) -> f64 {
    if !v.is_finite() || v == 0.0 {
        return v;
    }
    format!("{v:.8e}").parse().expect("formatted float parses")
}

fn fmt_sig9(v: f64) -> String {
    format!("{}", round_sig9(v))
}

pub fn classify_point(
    theta: f64,
    p: f64,
    p1: f64,
    witness: WitnessName,
    mode: ScanMode,
    config: &OptimizerConfig,
) -> Result<RegionPoint> {
    let params = StateParams::new(p, p1, theta)?;
    match mode {
        ScanMode::Analytic => {
            let mut violated = [false; 4];
            for (i, family) in Family::ALL.into_iter().enumerate() {
                let t = table1_threshold(witness, family, theta)?;
                let x = if family == Family::Rho2 { p1 } else { p };
                violated[i] = x > t;
            }
            Ok(RegionPoint::new(theta, p, p1, violated, None))
        }
        ScanMode::Numeric => {
            let spec = witness.spec();
            let mut violated = [false; 4];
            let mut values = [0.0; 4];
            for (i, family) in Family::ALL.into_iter().enumerate() {
                let rho = match family {
                    Family::Rho4 => states::rho4_closed(p, theta, Sign::Plus)?,
                    _ => family.state(&params, Sign::Plus)?,
                };
                let best = maximize_witness(&rho, &spec, config)?;
                values[i] = round_sig9(best.value);
                violated[i] = spec.violates(best.value);
            }
            Ok(RegionPoint::new(theta, p, p1, violated, Some(values)))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl Axis {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::InvalidGrid(format!("count must be at least 2, got {count}")));
        }
        if !(start.is_finite() && stop.is_finite() && start < stop) {
            return Err(Error::InvalidGrid(format!("need start < stop, got {start}:{stop}")));
        }
        Ok(Self { start, stop, count })
    }

    /// Sample `i`, rounded to CSV precision.
    pub fn value(&self, i: usize) -> f64 {
        let t = i as f64 / (self.count - 1) as f64;
        round_sig9(self.start + t * (self.stop - self.start))
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    pub fn step(&self) -> f64 {
        (self.stop - self.start) / (self.count - 1) as f64
    }
}

impl FromStr for Axis {
    type Err = Error;

    /// `START:STOP:COUNT`
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let [a, b, n] = parts.as_slice() else {
            return Err(Error::InvalidGrid(format!("expected START:STOP:COUNT, got {s:?}")));
        };
        let num = |x: &str| {
            x.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidGrid(format!("bad number {x:?} in {s:?}")))
        };
        let count = n
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidGrid(format!("bad count {n:?} in {s:?}")))?;
        Axis::new(num(a)?, num(b)?, count)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub theta: Axis,
    pub p: Axis,
    pub p1: f64,
}

impl GridSpec {
    pub fn new(theta: Axis, p: Axis, p1: f64) -> Result<Self> {
        let grid = Self { theta, p, p1 };
        grid.validate()?;
        Ok(grid)
    }

    /// 200 x 200 over `theta` in `[0.05, pi/4]` and `p` in `[0, 1]`.
    pub fn default_with_p1(p1: f64) -> Result<Self> {
        Self::new(Axis::new(0.05, FRAC_PI_4, 200)?, Axis::new(0.0, 1.0, 200)?, p1)
    }

    pub fn validate(&self) -> Result<()> {
        let wrap = |e: Error| Error::InvalidGrid(e.to_string());
        Axis::new(self.theta.start, self.theta.stop, self.theta.count)?;
        Axis::new(self.p.start, self.p.stop, self.p.count)?;
        check_theta(self.theta.start).map_err(wrap)?;
        check_theta(self.theta.value(self.theta.count - 1)).map_err(wrap)?;
        check_weight("p", self.p.start).map_err(wrap)?;
        check_weight("p", self.p.value(self.p.count - 1)).map_err(wrap)?;
        check_weight("p1", self.p1).map_err(wrap)?;
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.theta.count * self.p.count
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Classify every grid point, `theta` outer and `p` inner.
pub fn sweep(
    grid: &GridSpec,
    witness: WitnessName,
    mode: ScanMode,
    config: &OptimizerConfig,
) -> Result<Vec<RegionPoint>> {
    grid.validate()?;
    let p1 = round_sig9(grid.p1);
    let np = grid.p.count;
    par::map_range(config.exec, grid.len(), |k| {
        classify_point(
            grid.theta.value(k / np),
            grid.p.value(k % np),
            p1,
            witness,
            mode,
            config,
        )
    })
    .into_iter()
    .collect()
}

const BASE_COLUMNS: [&str; 8] = ["theta", "p", "p1", "v_rho1", "v_rho2", "v_rho3", "v_rho4", "enhanced"];
const VALUE_COLUMNS: [&str; 4] = ["val_rho1", "val_rho2", "val_rho3", "val_rho4"];

/// Write points as CSV. Value columns are present when every point carries
/// values.
pub fn write_csv<W: Write>(points: &[RegionPoint], out: W) -> Result<()> {
    let with_values = !points.is_empty() && points.iter().all(|p| p.values.is_some());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = BASE_COLUMNS.to_vec();
    if with_values {
        header.extend(VALUE_COLUMNS);
    }
    w.write_record(&header)?;
    let bit = |b: bool| if b { "1" } else { "0" }.to_string();
    for pt in points {
        let mut row = vec![fmt_sig9(pt.theta), fmt_sig9(pt.p), fmt_sig9(pt.p1)];
        row.extend(pt.violated.iter().map(|&v| bit(v)));
        row.push(bit(pt.enhanced));
        if let (true, Some(vals)) = (with_values, pt.values) {
            row.extend(vals.iter().map(|&v| fmt_sig9(v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<RegionPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    let with_values = match header.len() {
        8 => false,
        12 => true,
        n => return Err(Error::Parse(format!("expected 8 or 12 columns, found {n}"))),
    };
    let expected = BASE_COLUMNS
        .iter()
        .chain(if with_values { &VALUE_COLUMNS[..] } else { &[] });
    if !header.iter().map(String::as_str).eq(expected.copied()) {
        return Err(Error::Parse(format!("unexpected header {header:?}")));
    }
    let mut points = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let real = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::Parse(format!("row {}: bad number {:?}", line + 1, &record[i])))
        };
        let flag = |i: usize| -> Result<bool> {
            match &record[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Parse(format!("row {}: bad flag {other:?}", line + 1))),
            }
        };
        let violated = [flag(3)?, flag(4)?, flag(5)?, flag(6)?];
        let values = if with_values {
            Some([real(8)?, real(9)?, real(10)?, real(11)?])
        } else {
            None
        };
        let pt = RegionPoint {
            theta: real(0)?,
            p: real(1)?,
            p1: real(2)?,
            violated,
            enhanced: flag(7)?,
            values,
        };
        if pt.enhanced != RegionPoint::new(pt.theta, pt.p, pt.p1, violated, None).enhanced {
            return Err(Error::Parse(format!("row {}: enhanced flag inconsistent", line + 1)));
        }
        points.push(pt);
    }
    Ok(points)
}

/// Range of `p` satisfying a predicate in one `theta` column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnSpan {
    pub theta: f64,
    pub lo: f64,
    pub hi: f64,
}

fn columns(points: &[RegionPoint]) -> Vec<&[RegionPoint]> {
    points.chunk_by(|a, b| a.theta == b.theta).collect()
}

/// Per `theta` column, the smallest and largest `p` for which `pred` holds.
pub fn column_spans(points: &[RegionPoint], pred: impl Fn(&RegionPoint) -> bool) -> Vec<ColumnSpan> {
    columns(points)
        .into_iter()
        .filter_map(|col| {
            let hits: Vec<f64> = col.iter().filter(|pt| pred(pt)).map(|pt| pt.p).collect();
            let lo = hits.iter().copied().reduce(f64::min)?;
            let hi = hits.iter().copied().reduce(f64::max)?;
            Some(ColumnSpan {
                theta: col[0].theta,
                lo,
                hi,
            })
        })
        .collect()
}

/// Whether, in every `theta` column, the points satisfying `pred` form an
/// up-set in `p`.
pub fn is_up_set(points: &[RegionPoint], pred: impl Fn(&RegionPoint) -> bool) -> bool {
    columns(points).into_iter().all(|col| {
        let mut sorted: Vec<&RegionPoint> = col.iter().collect();
        sorted.sort_by(|a, b| a.p.total_cmp(&b.p));
        let first = sorted.iter().position(|pt| pred(pt));
        first.is_none_or(|f| sorted[f..].iter().all(|pt| pred(pt)))
    })
}
