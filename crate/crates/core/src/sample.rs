//! Points and sample sets (paired inputs with possibly missing outputs).

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DVector;

use crate::error::{Error, Result};

/// A point in ℝ^d.
pub type Point = DVector<f64>;

/// Paired inputs and outputs; `None` marks a point whose output is unknown
/// (e.g. a population member not yet evaluated).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampleSet {
    dim: usize,
    points: Vec<Point>,
    outputs: Vec<Option<f64>>,
}

impl SampleSet {
    pub fn empty(dim: usize) -> Self {
        SampleSet {
            dim,
            points: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn new(dim: usize, points: Vec<Point>, outputs: Vec<Option<f64>>) -> Result<Self> {
        if points.len() != outputs.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} outputs",
                points.len(),
                outputs.len()
            )));
        }
        let mut set = SampleSet::empty(dim);
        for (p, y) in points.into_iter().zip(outputs) {
            set.push(p, y)?;
        }
        Ok(set)
    }

    /// Sample set where every point has a known output.
    pub fn evaluated(dim: usize, points: Vec<Point>, outputs: Vec<f64>) -> Result<Self> {
        Self::new(dim, points, outputs.into_iter().map(Some).collect())
    }

    /// Sample set of points with missing outputs.
    pub fn unevaluated(dim: usize, points: Vec<Point>) -> Result<Self> {
        let n = points.len();
        Self::new(dim, points, vec![None; n])
    }

    pub fn push(&mut self, point: Point, output: Option<f64>) -> Result<()> {
        Error::check_dim(self.dim, point.len())?;
        if point.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite coordinate".into()));
        }
        if let Some(y) = output {
            if !y.is_finite() {
                return Err(Error::InvalidFitness(y));
            }
        }
        self.points.push(point);
        self.outputs.push(output);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn outputs(&self) -> &[Option<f64>] {
        &self.outputs
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Point, Option<f64>)> {
        self.points.iter().zip(self.outputs.iter().copied())
    }

    pub fn has_missing(&self) -> bool {
        self.outputs.iter().any(Option::is_none)
    }

    /// The subset of pairs whose output is known.
    pub fn known(&self) -> SampleSet {
        let (points, outputs) = self
            .iter()
            .filter(|(_, y)| y.is_some())
            .map(|(p, y)| (p.clone(), y))
            .unzip();
        SampleSet {
            dim: self.dim,
            points,
            outputs,
        }
    }

    /// Known outputs in order.
    pub fn known_outputs(&self) -> Vec<f64> {
        self.outputs.iter().flatten().copied().collect()
    }

    pub fn subset(&self, indices: &[usize]) -> SampleSet {
        SampleSet {
            dim: self.dim,
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            outputs: indices.iter().map(|&i| self.outputs[i]).collect(),
        }
    }

    /// Concatenation `self ∪ other` (no deduplication).
    pub fn union(&self, other: &SampleSet) -> Result<SampleSet> {
        Error::check_dim(self.dim, other.dim)?;
        let mut out = self.clone();
        out.points.extend(other.points.iter().cloned());
        out.outputs.extend(other.outputs.iter().copied());
        Ok(out)
    }

    /// Replaces every point with `f(point)`, keeping outputs.
    pub fn map_points(&self, f: impl Fn(&Point) -> Point) -> SampleSet {
        let points: Vec<Point> = self.points.iter().map(f).collect();
        let dim = points.first().map_or(self.dim, |p| p.len());
        SampleSet {
            dim,
            points,
            outputs: self.outputs.clone(),
        }
    }

    pub(crate) fn map_outputs(&self, f: impl Fn(f64) -> f64) -> SampleSet {
        SampleSet {
            dim: self.dim,
            points: self.points.clone(),
            outputs: self.outputs.iter().map(|y| y.map(&f)).collect(),
        }
    }

    /// Writes CSV with header `x1..xd,y`; missing outputs are empty fields.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim).map(|i| format!("x{i}")).collect();
        header.push("y".into());
        w.write_record(&header)?;
        for (p, y) in self.iter() {
            let mut rec: Vec<String> = p.iter().map(|v| fmt_f64(*v)).collect();
            rec.push(y.map(fmt_f64).unwrap_or_default());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, origin: &Path) -> Result<SampleSet> {
        let mut r = csv::Reader::from_reader(reader);
        let header = r.headers().map_err(|e| Error::csv(origin, e))?.clone();
        if header.is_empty() || &header[header.len() - 1] != "y" {
            return Err(Error::format(origin, "last column must be `y`"));
        }
        let dim = header.len() - 1;
        let mut set = SampleSet::empty(dim);
        for rec in r.records() {
            let rec = rec.map_err(|e| Error::csv(origin, e))?;
            let coords = (0..dim)
                .map(|i| parse_f64(&rec[i], origin))
                .collect::<Result<Vec<_>>>()?;
            let y = match rec[dim].trim() {
                "" => None,
                s => Some(parse_f64(s, origin)?),
            };
            set.push(DVector::from_vec(coords), y)?;
        }
        Ok(set)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).map_err(|e| Error::csv(path, e))?;
        crate::pipeline::store::write_atomic(path, &buf)
    }

    pub fn load(path: &Path) -> Result<SampleSet> {
        let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(f, path)
    }
}

/// Shortest round-trip formatting of a float (`inf`, `-inf`, `NaN` for specials).
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

pub(crate) fn parse_f64(s: &str, origin: &Path) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::format(origin, format!("not a number: `{s}`")))
}
