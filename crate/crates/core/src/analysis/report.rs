//! Archive-level analysis, the metrics CSV and the fit report.

use std::collections::BTreeMap;

use serde::Serialize;

use super::fit::{fit_sigmoid, gamma_init, wpm_bounds, FitAxis, Onset, ScalingFit, SigmoidFit, Wpm};
use super::{PointMetrics, WallAggregation};
use crate::error::{Error, Result};
use crate::harness::SampleArchive;
use crate::ring::RingSpec;
use crate::schedule::GammaRatio;

pub const METRICS_HEADER: [&str; 7] = ["s", "gamma_over_j", "gamma_ghz", "entropy", "sdwp", "moved_sdwp", "mean_walls"];
pub const ONSET_THRESHOLD: f64 = 0.05;
pub const WPM_LOW: f64 = 0.05;
pub const WPM_HIGH: f64 = 0.95;

/// Metrics rows plus `# key=value` metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    pub meta: BTreeMap<String, String>,
    pub points: Vec<PointMetrics<f64>>,
}

impl MetricsTable {
    pub fn meta_f64(&self, key: &str) -> Option<f64> {
        self.meta.get(key).and_then(|v| v.parse().ok())
    }

    /// Points ordered by ascending Γ/J (infinite last).
    pub fn sorted_by_ratio(&self) -> Vec<PointMetrics<f64>> {
        let mut pts = self.points.clone();
        pts.sort_by(|a, b| {
            a.gamma_over_j
                .to_float()
                .partial_cmp(&b.gamma_over_j.to_float())
                .unwrap()
                .then(b.s_pause.partial_cmp(&a.s_pause).unwrap())
        });
        pts
    }
}

pub fn write_metrics_csv(table: &MetricsTable) -> Result<String> {
    let mut out = String::new();
    for (k, v) in &table.meta {
        if k.contains(['=', '\n']) || v.contains('\n') {
            return Err(Error::InvalidParameter(format!("metadata `{k}` is not representable")));
        }
        out.push_str(&format!("# {k}={v}\n"));
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(METRICS_HEADER)?;
    for p in &table.points {
        w.write_record([
            format!("{:?}", p.s_pause),
            p.gamma_over_j.to_string(),
            format!("{:?}", p.gamma_ghz),
            format!("{:?}", p.entropy_h),
            format!("{:?}", p.sdwp),
            format!("{:?}", p.moved_sdwp),
            format!("{:?}", p.mean_wall_count),
        ])?;
    }
    let body = w.into_inner().map_err(|e| Error::InvalidParameter(e.to_string()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is UTF-8"));
    Ok(out)
}

pub fn read_metrics_csv(text: &str) -> Result<MetricsTable> {
    let mut meta = BTreeMap::new();
    for line in text.lines() {
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            if let Some((k, v)) = rest.split_once('=') {
                meta.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != METRICS_HEADER {
        return Err(Error::InvalidParameter(format!(
            "expected metrics header `{}`",
            METRICS_HEADER.join(",")
        )));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let num = |i: usize| -> Result<f64> {
            record[i]
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("metrics line {line}: malformed `{}`", &record[i])))
        };
        points.push(PointMetrics {
            s_pause: num(0)?,
            gamma_over_j: record[1].parse::<GammaRatio<f64>>()?,
            gamma_ghz: num(2)?,
            entropy_h: num(3)?,
            sdwp: num(4)?,
            moved_sdwp: num(5)?,
            mean_wall_count: num(6)?,
        });
    }
    if points.is_empty() {
        return Err(Error::InvalidParameter("metrics table has no rows".into()));
    }
    Ok(MetricsTable { meta, points })
}

/// Sigmoid fit, onset and WPM of one metrics table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub axis: FitAxis,
    pub sigmoid: Option<SigmoidFit<f64>>,
    /// Why no sigmoid was fitted, if so.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigmoid_error: Option<String>,
    /// Fitted curve at its inflection point (`L/2`).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_at_x0: Option<f64>,
    pub gamma_init: Onset<f64>,
    pub wpm: Wpm<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scaling: Option<ScalingFit<f64>>,
    pub meta: BTreeMap<String, String>,
}

impl FitReport {
    pub fn from_table(table: &MetricsTable, axis: FitAxis) -> Self {
        let sorted = table.sorted_by_ratio();
        let (xs, ys): (Vec<f64>, Vec<f64>) = match axis {
            FitAxis::LogGammaOverJ => sorted
                .iter()
                .filter_map(|p| p.gamma_over_j.finite().filter(|g| *g > 0.0).map(|g| (g.log10(), p.entropy_h)))
                .unzip(),
            FitAxis::S => sorted.iter().map(|p| (p.s_pause, p.entropy_h)).unzip(),
        };
        let (sigmoid, sigmoid_error) = match fit_sigmoid(&xs, &ys, axis) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        FitReport {
            axis,
            h_at_x0: sigmoid.map(|f| f.eval(f.x0)),
            sigmoid,
            sigmoid_error,
            gamma_init: gamma_init(&sorted, ONSET_THRESHOLD),
            wpm: wpm_bounds(&sorted, WPM_LOW, WPM_HIGH),
            scaling: None,
            meta: table.meta.clone(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

/// Metrics of every archive record plus the derived fits.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub table: MetricsTable,
    pub fits: FitReport,
}

pub fn analyze_archive(
    archive: &SampleArchive,
    spec: &RingSpec,
    aggregation: WallAggregation,
    axis: FitAxis,
) -> Result<AnalysisReport> {
    let cfg = &archive.header.config;
    let mut meta = BTreeMap::new();
    meta.insert("n".to_string(), spec.n().to_string());
    meta.insert("j".to_string(), spec.j_programmed().to_string());
    meta.insert("hold_us".to_string(), cfg.hold_us.to_string());
    meta.insert("ramp_us".to_string(), cfg.ramp_us.to_string());
    meta.insert("backend".to_string(), cfg.backend.to_string());
    meta.insert("seed".to_string(), cfg.seed.to_string());
    meta.insert("schedule".to_string(), archive.header.schedule_label());
    if aggregation == WallAggregation::SingleWallOnly {
        meta.insert("aggregation".to_string(), "single_wall_only".to_string());
    }
    let mut records: Vec<_> = archive.records.iter().collect();
    records.sort_by_key(|r| r.index);
    let points = records
        .iter()
        .map(|r| PointMetrics::from_samples(r.s, r.gamma_over_j, r.gamma_ghz, &r.samples, spec, aggregation))
        .collect::<Result<Vec<_>>>()?;
    let table = MetricsTable { meta, points };
    let fits = FitReport::from_table(&table, axis);
    Ok(AnalysisReport { table, fits })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> MetricsTable {
        let mut meta = BTreeMap::new();
        meta.insert("hold_us".to_string(), "2".to_string());
        MetricsTable {
            meta,
            points: vec![
                PointMetrics {
                    s_pause: 0.0,
                    gamma_over_j: GammaRatio::Infinite,
                    gamma_ghz: 3.0,
                    entropy_h: 0.97,
                    sdwp: 0.1,
                    moved_sdwp: 0.09,
                    mean_wall_count: 3.4,
                },
                PointMetrics {
                    s_pause: 0.1 + 0.2,
                    gamma_over_j: GammaRatio::Finite(1.0 / 3.0),
                    gamma_ghz: 1e-300,
                    entropy_h: 0.0,
                    sdwp: 1.0,
                    moved_sdwp: 0.0,
                    mean_wall_count: 1.0,
                },
            ],
        }
    }

    #[test]
    fn metrics_csv_round_trip() {
        let t = table();
        let text = write_metrics_csv(&t).unwrap();
        assert!(text.starts_with("# hold_us=2\ns,gamma_over_j,gamma_ghz,entropy,sdwp,moved_sdwp,mean_walls\n"));
        assert!(text.contains(",inf,"));
        let back = read_metrics_csv(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.meta_f64("hold_us"), Some(2.0));
    }

    #[test]
    fn malformed_metrics_rejected() {
        assert!(read_metrics_csv("a,b\n1,2\n").is_err());
        assert!(read_metrics_csv("s,gamma_over_j,gamma_ghz,entropy,sdwp,moved_sdwp,mean_walls\n").is_err());
        assert!(read_metrics_csv("s,gamma_over_j,gamma_ghz,entropy,sdwp,moved_sdwp,mean_walls\n0,x,1,0,1,0,1\n").is_err());
    }

    #[test]
    fn sorting_puts_infinite_last() {
        let sorted = table().sorted_by_ratio();
        assert_eq!(sorted[1].gamma_over_j, GammaRatio::Infinite);
    }

    #[test]
    fn report_without_enough_points() {
        let r = FitReport::from_table(&table(), FitAxis::LogGammaOverJ);
        assert!(r.sigmoid.is_none() && r.sigmoid_error.is_some());
        assert_eq!(r.gamma_init, Onset::NoOnset);
        assert!(r.to_json().unwrap().contains("\"status\": \"no_onset\""));
    }
}
