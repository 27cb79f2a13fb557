//! Pseudo-residuals for graphical goodness of fit.

use std::io::Write;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::general::{predict_general, GeneralizedLehmannFit};
use crate::pseudo::PseudoMatrix;
use crate::simple::{predict_simple, SimpleLehmannFit};

#[derive(Debug, Clone, Copy)]
pub enum FittedModel<'a> {
    Simple(&'a SimpleLehmannFit),
    General(&'a GeneralizedLehmannFit),
}

impl FittedModel<'_> {
    fn k(&self) -> usize {
        match self {
            FittedModel::Simple(f) => f.k(),
            FittedModel::General(f) => f.k(),
        }
    }

    fn predict(&self, z: &[f64], j: usize) -> f64 {
        match self {
            FittedModel::Simple(f) => predict_simple(f, z, j),
            FittedModel::General(f) => predict_general(f, z, j).joint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualRow {
    pub subject: usize,
    pub point: usize,
    pub z: Vec<f64>,
    pub pseudo: f64,
    pub predicted: f64,
    pub raw: f64,
    /// Undefined when the prediction is not strictly inside (0, 1).
    pub pearson: Option<f64>,
    /// `log(-log(pseudo))`, simple model only and only for pseudo values in (0, 1).
    pub cloglog_pseudo: Option<f64>,
    pub flagged: bool,
}

#[derive(Debug, Clone)]
pub struct ResidualTable {
    pub rows: Vec<ResidualRow>,
    pub covariate_names: Vec<String>,
    pub simple: bool,
}

fn pearson(raw: f64, predicted: f64) -> Option<f64> {
    (predicted > 0.0 && predicted < 1.0).then(|| raw / (predicted * (1.0 - predicted)).sqrt())
}

pub fn pseudo_residuals(model: FittedModel, dataset: &Dataset, pm: &PseudoMatrix) -> Result<ResidualTable> {
    let (theta, _) = pm.joint().ok_or_else(|| Error::InvalidModel("residuals need joint-survival pseudo-observations".into()))?;
    if pm.n() != dataset.n() || pm.k() != model.k() {
        return Err(Error::InvalidModel("fit, pseudo matrix and dataset do not match".into()));
    }
    let simple = matches!(model, FittedModel::Simple(_));
    let mut rows = Vec::with_capacity(pm.n() * pm.k());
    for (i, s) in dataset.subjects().iter().enumerate() {
        for j in 0..pm.k() {
            let pseudo = theta[(i, j)];
            let predicted = model.predict(&s.z, j);
            let raw = pseudo - predicted;
            let pearson = pearson(raw, predicted);
            let cloglog_pseudo = (simple && pseudo > 0.0 && pseudo < 1.0).then(|| (-pseudo.ln()).ln());
            rows.push(ResidualRow {
                subject: i,
                point: j,
                z: s.z.clone(),
                pseudo,
                predicted,
                raw,
                pearson,
                cloglog_pseudo,
                flagged: pearson.is_none(),
            });
        }
    }
    Ok(ResidualTable { rows, covariate_names: dataset.covariate_names().to_vec(), simple })
}

impl ResidualTable {
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["subject".to_string(), "point".to_string()];
        header.extend(self.covariate_names.iter().cloned());
        header.extend(["pseudo", "predicted", "raw", "pearson"].map(String::from));
        if self.simple {
            header.push("cloglog_pseudo".into());
        }
        header.push("flag".into());
        w.write_record(&header).map_err(csv_err)?;
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.rows {
            let mut rec = vec![r.subject.to_string(), r.point.to_string()];
            rec.extend(r.z.iter().map(f64::to_string));
            rec.extend([r.pseudo.to_string(), r.predicted.to_string(), r.raw.to_string(), opt(r.pearson)]);
            if self.simple {
                rec.push(opt(r.cloglog_pseudo));
            }
            rec.push(if r.flagged { "pearson_undefined".into() } else { String::new() });
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bin {
    pub z_low: f64,
    pub z_high: f64,
    pub z_mean: f64,
    pub count: usize,
    pub mean_raw: f64,
    pub se_raw: f64,
    pub mean_pearson: f64,
    pub se_pearson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinnedSummary {
    pub covariate: usize,
    pub point: Option<usize>,
    pub bins: Vec<Bin>,
    pub warnings: Vec<String>,
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let m = v.len() as f64;
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = v.iter().sum::<f64>() / m;
    if v.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

/// Equal-count bins over one covariate, keeping tied values in the same bin.
///
/// `point` restricts the summary to one grid point; `None` pools all points.
pub fn binned_summary(table: &ResidualTable, covariate: usize, bins: usize, point: Option<usize>) -> Result<BinnedSummary> {
    if bins < 2 {
        return Err(Error::InvalidModel("at least two bins are required".into()));
    }
    let mut rows: Vec<&ResidualRow> = table.rows.iter().filter(|r| point.is_none_or(|p| r.point == p)).collect();
    if rows.first().is_some_and(|r| covariate >= r.z.len()) {
        return Err(Error::InvalidModel(format!("no covariate {covariate}")));
    }
    if rows.is_empty() {
        return Err(Error::InvalidModel("no residual rows to summarise".into()));
    }
    rows.sort_by(|a, b| a.z[covariate].total_cmp(&b.z[covariate]));
    let zs: Vec<f64> = rows.iter().map(|r| r.z[covariate]).collect();
    let mut warnings = Vec::new();
    let mut distinct = zs.clone();
    distinct.dedup();
    let mut target = bins;
    if distinct.len() < bins {
        warnings.push(format!("only {} distinct covariate values, using {} bins", distinct.len(), distinct.len()));
        target = distinct.len();
    }

    let m = zs.len();
    let mut cuts = vec![0];
    for b in 1..target {
        let mut c = (m * b).div_ceil(target).max(*cuts.last().unwrap());
        while c < m && c > 0 && zs[c] == zs[c - 1] {
            c += 1;
        }
        if c > *cuts.last().unwrap() && c < m {
            cuts.push(c);
        }
    }
    cuts.push(m);
    if cuts.len() - 1 < target {
        warnings.push(format!("ties reduced the bin count to {}", cuts.len() - 1));
    }

    let out = cuts
        .windows(2)
        .map(|w| {
            let slice = &rows[w[0]..w[1]];
            let raw: Vec<f64> = slice.iter().map(|r| r.raw).collect();
            let pearson: Vec<f64> = slice.iter().filter_map(|r| r.pearson).collect();
            let (mean_raw, se_raw) = mean_se(&raw);
            let (mean_pearson, se_pearson) = mean_se(&pearson);
            Bin {
                z_low: zs[w[0]],
                z_high: zs[w[1] - 1],
                z_mean: zs[w[0]..w[1]].iter().sum::<f64>() / (w[1] - w[0]) as f64,
                count: w[1] - w[0],
                mean_raw,
                se_raw,
                mean_pearson,
                se_pearson,
            }
        })
        .collect();
    Ok(BinnedSummary { covariate, point, bins: out, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrendTest {
    pub slope: f64,
    pub se: f64,
    pub z: f64,
    pub p_value: f64,
}

/// Weighted least-squares slope of bin mean raw residuals on bin covariate means, weights `1/SE^2`.
pub fn trend_test(summary: &BinnedSummary) -> Result<TrendTest> {
    let pts: Vec<(f64, f64, f64)> = summary
        .bins
        .iter()
        .filter(|b| b.se_raw.is_finite() && b.se_raw > 0.0)
        .map(|b| (b.z_mean, b.mean_raw, 1.0 / (b.se_raw * b.se_raw)))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Numerical("trend test needs two bins with positive standard errors".into()));
    }
    let sw: f64 = pts.iter().map(|p| p.2).sum();
    let xm = pts.iter().map(|p| p.2 * p.0).sum::<f64>() / sw;
    let ym = pts.iter().map(|p| p.2 * p.1).sum::<f64>() / sw;
    let sxx: f64 = pts.iter().map(|p| p.2 * (p.0 - xm).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::Numerical("trend test needs distinct bin locations".into()));
    }
    let slope = pts.iter().map(|p| p.2 * (p.0 - xm) * (p.1 - ym)).sum::<f64>() / sxx;
    let se = (1.0 / sxx).sqrt();
    let z = slope / se;
    let p_value = 2.0 * Normal::standard().sf(z.abs());
    Ok(TrendTest { slope, se, z, p_value })
}
