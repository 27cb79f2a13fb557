//! Observation records, evaluation grids and CSV ingestion.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::SurvivalSurface;

/// One right-censored bivariate observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subject {
    pub y1: f64,
    pub delta1: bool,
    pub y2: f64,
    pub delta2: bool,
    pub z: Vec<f64>,
}

impl Subject {
    pub fn new(y1: f64, delta1: bool, y2: f64, delta2: bool, z: Vec<f64>) -> Self {
        Self { y1, delta1, y2, delta2, z }
    }

    fn validate(&self, row: usize) -> Result<()> {
        for (name, t) in [("y1", self.y1), ("y2", self.y2)] {
            if !t.is_finite() || t < 0.0 {
                return Err(Error::Parse {
                    row,
                    column: name.into(),
                    message: format!("time must be finite and nonnegative, got {t}"),
                });
            }
        }
        if let Some(k) = self.z.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parse {
                row,
                column: format!("z[{k}]"),
                message: "covariate is not finite".into(),
            });
        }
        Ok(())
    }
}

/// A sample of subjects sharing one covariate dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    subjects: Vec<Subject>,
    covariate_names: Vec<String>,
}

impl Dataset {
    /// Build a dataset with default covariate names `z1..zp`.
    pub fn new(subjects: Vec<Subject>) -> Result<Self> {
        let p = subjects.first().map_or(0, |s| s.z.len());
        let names = (1..=p).map(|k| format!("z{k}")).collect();
        Self::with_names(subjects, names)
    }

    pub fn with_names(subjects: Vec<Subject>, covariate_names: Vec<String>) -> Result<Self> {
        if subjects.is_empty() {
            return Err(Error::TooFewSubjects { required: 1, found: 0 });
        }
        let p = covariate_names.len();
        for (i, s) in subjects.iter().enumerate() {
            if s.z.len() != p {
                return Err(Error::Data(format!(
                    "subject {i} has {} covariates, expected {p}",
                    s.z.len()
                )));
            }
            s.validate(i + 1)?;
        }
        Ok(Self { subjects, covariate_names })
    }

    pub fn subjects(&self) -> &[Subject] {
        &self.subjects
    }

    pub fn n(&self) -> usize {
        self.subjects.len()
    }

    /// Covariate dimension.
    pub fn p(&self) -> usize {
        self.covariate_names.len()
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.covariate_names
    }

    pub fn require_min(&self, required: usize) -> Result<()> {
        if self.n() < required {
            return Err(Error::TooFewSubjects { required, found: self.n() });
        }
        Ok(())
    }

    /// New dataset made of the subjects at `indices` (repeats allowed).
    pub fn resample(&self, indices: &[usize]) -> Self {
        Self {
            subjects: indices.iter().map(|&i| self.subjects[i].clone()).collect(),
            covariate_names: self.covariate_names.clone(),
        }
    }

    /// Dataset with subject `i` removed.
    pub fn without(&self, i: usize) -> Self {
        let mut subjects = self.subjects.clone();
        subjects.remove(i);
        Self { subjects, covariate_names: self.covariate_names.clone() }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["y1".to_string(), "d1".into(), "y2".into(), "d2".into()];
        header.extend(self.covariate_names.iter().cloned());
        w.write_record(&header).map_err(csv_err)?;
        for s in &self.subjects {
            let mut rec = vec![
                s.y1.to_string(),
                u8::from(s.delta1).to_string(),
                s.y2.to_string(),
                u8::from(s.delta2).to_string(),
            ];
            rec.extend(s.z.iter().map(|v| v.to_string()));
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Schema(format!("{other:?}")),
    }
}

/// Load a dataset from a CSV file with header `y1,d1,y2,d2[,covariates...]`.
///
/// Covariates default to every extra column in header order; pass
/// `covariate_names` to select (and order) a subset. Rows are numbered from 1,
/// excluding the header.
pub fn load_csv(path: impl AsRef<Path>, covariate_names: Option<&[String]>) -> Result<Dataset> {
    read_csv(std::fs::File::open(path)?, covariate_names)
}

pub fn read_csv<R: Read>(reader: R, covariate_names: Option<&[String]>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let header: Vec<String> = rdr.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let col = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
    };
    let (iy1, id1, iy2, id2) = (col("y1")?, col("d1")?, col("y2")?, col("d2")?);
    let names: Vec<String> = match covariate_names {
        Some(names) => names.to_vec(),
        None => header
            .iter()
            .filter(|h| !matches!(h.as_str(), "y1" | "d1" | "y2" | "d2"))
            .cloned()
            .collect(),
    };
    let zcols = names.iter().map(|n| col(n)).collect::<Result<Vec<_>>>()?;

    let mut subjects = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let row = k + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            column: "*".into(),
            message: e.to_string(),
        })?;
        let num = |idx: usize| -> Result<f64> {
            let cell = rec.get(idx).unwrap_or("");
            cell.parse::<f64>().map_err(|_| Error::Parse {
                row,
                column: header[idx].clone(),
                message: format!("not a number: `{cell}`"),
            })
        };
        let indicator = |idx: usize| -> Result<bool> {
            match num(idx)? {
                v if v == 0.0 => Ok(false),
                v if v == 1.0 => Ok(true),
                v => Err(Error::Parse {
                    row,
                    column: header[idx].clone(),
                    message: format!("event indicator must be 0 or 1, got {v}"),
                }),
            }
        };
        let s = Subject {
            y1: num(iy1)?,
            delta1: indicator(id1)?,
            y2: num(iy2)?,
            delta2: indicator(id2)?,
            z: zcols.iter().map(|&c| num(c)).collect::<Result<_>>()?,
        };
        s.validate(row)?;
        subjects.push(s);
    }
    Dataset::with_names(subjects, names)
}

/// K bivariate time points at which functionals are evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    points: Vec<(f64, f64)>,
}

impl EvalGrid {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Data("evaluation grid needs at least one point".into()));
        }
        for (j, &(t1, t2)) in points.iter().enumerate() {
            if !(t1.is_finite() && t2.is_finite() && t1 > 0.0 && t2 > 0.0) {
                return Err(Error::Data(format!(
                    "grid point {j} ({t1}, {t2}) must have strictly positive finite coordinates"
                )));
            }
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Reject points where the full-sample surface is not strictly positive.
    pub fn check_support(&self, surface: &SurvivalSurface) -> Result<()> {
        for (index, &(t1, t2)) in self.points.iter().enumerate() {
            if surface.eval(t1, t2) <= 0.0 {
                return Err(Error::PointOutsideSupport { index, t1, t2 });
            }
        }
        Ok(())
    }
}

/// Lower empirical quantile: smallest x with F(x) >= q.
fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    let k = ((q * m as f64).ceil() as usize).clamp(1, m);
    sorted[k - 1]
}

/// Matched marginal quantiles of the observed failure times, at levels j/(K+1).
///
/// Points where the full-sample surface vanishes are pulled back towards the
/// origin (halfway to the preceding failure time) until the estimate is positive.
pub fn default_grid(dataset: &Dataset, k: usize) -> Result<EvalGrid> {
    if k == 0 {
        return Err(Error::Data("grid size K must be at least 1".into()));
    }
    let failures = |axis: u8| {
        let mut f: Vec<f64> = dataset
            .subjects()
            .iter()
            .filter(|s| if axis == 1 { s.delta1 } else { s.delta2 })
            .map(|s| if axis == 1 { s.y1 } else { s.y2 })
            .collect();
        f.sort_by(f64::total_cmp);
        f
    };
    let (f1, f2) = (failures(1), failures(2));
    if f1.is_empty() {
        return Err(Error::UnusableAxis { axis: 1 });
    }
    if f2.is_empty() {
        return Err(Error::UnusableAxis { axis: 2 });
    }
    let surface = crate::estimator::dabrowska(dataset);
    let before = |sorted: &[f64], t: f64| {
        let idx = sorted.partition_point(|&x| x < t);
        if idx == 0 { 0.0 } else { sorted[idx - 1] }
    };
    let mut points = Vec::with_capacity(k);
    for j in 1..=k {
        let q = j as f64 / (k + 1) as f64;
        let (mut t1, mut t2) = (lower_quantile(&f1, q), lower_quantile(&f2, q));
        while t1 <= 0.0 || t2 <= 0.0 || surface.eval(t1, t2) <= 0.0 {
            t1 = 0.5 * (before(&f1, t1) + t1);
            t2 = 0.5 * (before(&f2, t2) + t2);
            if t1 < f64::MIN_POSITIVE || t2 < f64::MIN_POSITIVE {
                return Err(Error::Numerical("could not place a grid point inside the support".into()));
            }
        }
        points.push((t1, t2));
    }
    EvalGrid::new(points)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        read_csv(text.as_bytes(), None)
    }

    #[test]
    fn single_row_loads() {
        let d = parse("y1,d1,y2,d2,z\n1.0,1,2.0,1,0.5").unwrap();
        assert_eq!((d.n(), d.p()), (1, 1));
        assert!(d.require_min(2).is_err());
    }

    #[test]
    fn bad_indicator_names_row_and_column() {
        let mut text = String::from("y1,d1,y2,d2\n");
        for _ in 0..6 {
            text.push_str("1,1,1,1\n");
        }
        text.push_str("1,2,1,1\n");
        match parse(&text) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 7);
                assert_eq!(column, "d1");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn covariates_follow_header_order() {
        let d = parse("b,y1,d1,y2,d2,a\n1,1,1,2,0,10\n2,2,0,3,1,20\n3,3,1,1,1,30\n").unwrap();
        assert_eq!((d.n(), d.p()), (3, 2));
        assert_eq!(d.covariate_names(), ["b", "a"]);
        assert_eq!(d.subjects()[1].z, vec![2.0, 20.0]);
    }

    #[test]
    fn selected_covariates_reorder() {
        let names = vec!["a".to_string()];
        let d = read_csv("y1,d1,y2,d2,b,a\n1,1,1,1,5,6\n".as_bytes(), Some(&names)).unwrap();
        assert_eq!(d.subjects()[0].z, vec![6.0]);
    }

    #[test]
    fn schema_and_value_errors() {
        assert!(matches!(parse("y1,d1,y2\n1,1,1"), Err(Error::Schema(_))));
        assert!(matches!(parse("y1,d1,y2,d2\n-1,1,1,1"), Err(Error::Parse { .. })));
        assert!(matches!(parse("y1,d1,y2,d2\nabc,1,1,1"), Err(Error::Parse { .. })));
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let subjects = vec![
            Subject::new(0.1 + 0.2, true, 1.0 / 3.0, false, vec![std::f64::consts::PI]),
            Subject::new(2.5e-7, false, 123456.789, true, vec![-0.0]),
        ];
        let d = Dataset::new(subjects).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let back = read_csv(buf.as_slice(), None).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn median_grid_point() {
        let subjects = [(1.0, 2.0), (2.0, 4.0), (3.0, 6.0)]
            .iter()
            .map(|&(a, b)| Subject::new(a, true, b, true, vec![]))
            .collect();
        let d = Dataset::new(subjects).unwrap();
        let g = default_grid(&d, 1).unwrap();
        assert_eq!(g.points(), &[(2.0, 4.0)]);
    }

    #[test]
    fn two_point_grid_uses_thirds() {
        let subjects = (1..=6)
            .map(|i| Subject::new(i as f64, true, 10.0 * i as f64, true, vec![]))
            .collect();
        let d = Dataset::new(subjects).unwrap();
        let g = default_grid(&d, 2).unwrap();
        // levels 1/3 and 2/3 of six values: 2nd and 4th order statistics
        assert_eq!(g.points(), &[(2.0, 20.0), (4.0, 40.0)]);
    }

    #[test]
    fn degenerate_grid_is_clipped_inside_support() {
        let subjects = (0..4).map(|_| Subject::new(2.0, true, 2.0, true, vec![])).collect();
        let d = Dataset::new(subjects).unwrap();
        let g = default_grid(&d, 1).unwrap();
        let (t1, t2) = g.points()[0];
        assert!(t1 > 0.0 && t1 < 2.0 && t2 > 0.0 && t2 < 2.0);
        g.check_support(&crate::estimator::dabrowska(&d)).unwrap();
    }

    #[test]
    fn no_failures_is_unusable() {
        let subjects = (1..4).map(|i| Subject::new(i as f64, false, 1.0, true, vec![])).collect();
        let d = Dataset::new(subjects).unwrap();
        assert!(matches!(default_grid(&d, 1), Err(Error::UnusableAxis { axis: 1 })));
    }
}
