use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde_json::json;
use wallmem::analysis::{
    analyze_archive, gamma_init, read_metrics_csv, scaling_fit, spatial_density, write_metrics_csv, AnalysisReport,
    DistanceMode, FitAxis, FitReport, MetricsTable, Onset, WallAggregation, Wpm, ONSET_THRESHOLD,
};
use wallmem::embed::{find_odd_cycle, load_graph, SearchBudget, SearchOptions};
use wallmem::harness::{run_sweep, write_atomic, ExperimentConfig, RunOptions, SampleArchive};

use crate::plot::{Figure, Series, Style};
use crate::{AnalyzeArgs, Axis, Cli, Command, EmbedArgs, Failure, FitArgs, PlotArgs, PlotKind, RunArgs, ScalingArgs};

const DEFAULT_ITERATIONS: u64 = 200_000;

type CliResult<T> = std::result::Result<T, Failure>;

fn config_err(e: impl std::fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> Failure {
    Failure::Runtime(e.to_string())
}

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Run(args) => run(cli, args),
        Command::Analyze(args) => analyze(cli, args),
        Command::Fit(args) => fit(cli, args),
        Command::Scaling(args) => scaling(cli, args),
        Command::Embed(args) => embed(cli, args),
        Command::Plot(args) => plot(cli, args),
    }
}

/// File name without directory and without data suffixes.
fn stem(path: &Path) -> String {
    let mut name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    for suffix in [".gz", ".jsonl", ".json", ".csv", ".metrics", ".density", ".txt"] {
        if let Some(s) = name.strip_suffix(suffix) {
            name = s.to_string();
        }
    }
    if name.is_empty() {
        "out".into()
    } else {
        name
    }
}

fn output_dir(cli: &Cli, beside: &Path) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| {
        beside
            .parent()
            .filter(|p| !p.as_os_str().is_empty())
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."))
    })
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    write_atomic(path, text.as_bytes()).map_err(runtime_err)
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn aggregation(a: crate::Aggregation) -> WallAggregation {
    match a {
        crate::Aggregation::All => WallAggregation::AllWalls,
        crate::Aggregation::SingleWall => WallAggregation::SingleWallOnly,
    }
}

fn fit_axis(a: Axis) -> CliResult<FitAxis> {
    match a {
        Axis::GammaOverJ => Ok(FitAxis::LogGammaOverJ),
        Axis::S => Ok(FitAxis::S),
        Axis::Gamma => Err(Failure::Config("fits support the gamma-over-j and s axes".into())),
    }
}

fn summary_line(report: &FitReport, points: usize) -> String {
    let n = report.meta.get("n").map(String::as_str).unwrap_or("?");
    let wpm = match report.wpm {
        Wpm::Found {
            min_gamma_over_j,
            max_gamma_over_j,
            width_decades,
        } => format!("WPM Γ/J ∈ [{min_gamma_over_j:.3e}, {max_gamma_over_j:.3e}] ({width_decades:.2} decades)"),
        Wpm::NoWpm => "WPM none".into(),
    };
    let onset = match report.gamma_init {
        Onset::Found {
            gamma_ghz,
            gamma_over_j,
        } => format!("Γ_init {gamma_ghz:.4e} GHz (Γ/J {gamma_over_j:.3e})"),
        Onset::NoOnset => "Γ_init none".into(),
    };
    format!("n={n} points={points} {wpm} {onset}")
}

fn density_csv(archive: &SampleArchive, report: &AnalysisReport) -> CliResult<String> {
    let spec = archive.header.ring_spec().map_err(config_err)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["s", "gamma_over_j", "distance", "density"]).map_err(runtime_err)?;
    let mut records: Vec<_> = archive.records.iter().collect();
    records.sort_by_key(|r| r.index);
    for (r, p) in records.iter().zip(&report.table.points) {
        let profile = spatial_density::<f64>(&r.samples, &spec, false, spec.n() / 2, DistanceMode::Folded)
            .map_err(runtime_err)?;
        for (d, v) in profile.distances.iter().zip(&profile.density) {
            w.write_record([format!("{:?}", p.s_pause), p.gamma_over_j.to_string(), d.to_string(), format!("{v:?}")])
                .map_err(runtime_err)?;
        }
    }
    let bytes = w.into_inner().map_err(runtime_err)?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

/// Writes `<stem>.metrics.csv`, `<stem>.fit.json` and `<stem>.density.csv`.
fn write_analysis(
    archive: &SampleArchive,
    dir: &Path,
    name: &str,
    agg: WallAggregation,
    axis: FitAxis,
) -> CliResult<AnalysisReport> {
    let spec = archive.header.ring_spec().map_err(config_err)?;
    let report = analyze_archive(archive, &spec, agg, axis).map_err(runtime_err)?;
    write_file(
        &dir.join(format!("{name}.metrics.csv")),
        &write_metrics_csv(&report.table).map_err(runtime_err)?,
    )?;
    write_file(&dir.join(format!("{name}.fit.json")), &report.fits.to_json().map_err(runtime_err)?)?;
    write_file(&dir.join(format!("{name}.density.csv")), &density_csv(archive, &report)?)?;
    Ok(report)
}

fn run(cli: &Cli, args: &RunArgs) -> CliResult<()> {
    let mut overrides = args.overrides.clone();
    if let Some(seed) = cli.seed {
        overrides.push(format!("seed={seed}"));
    }
    if let Some(w) = cli.workers {
        overrides.push(format!("workers={w}"));
    }
    let axis = fit_axis(args.fit_axis)?;
    let mut config = ExperimentConfig::load(&args.config, &overrides).map_err(config_err)?;
    if let Some(dir) = &cli.out {
        let file = config.output_path.file_name().map(PathBuf::from).unwrap_or_else(|| "archive.jsonl".into());
        config.output_path = dir.join(file);
    }
    let options = RunOptions {
        timestamp: None,
        limit: args.limit,
        verbose: !args.quiet,
    };
    let summary = run_sweep(&config, &options).map_err(runtime_err)?;
    let archive = SampleArchive::read(&summary.path).map_err(runtime_err)?;
    let dir = output_dir(cli, &summary.path);
    let report = write_analysis(&archive, &dir, &stem(&summary.path), aggregation(args.aggregation), axis)?;
    println!("{}", summary_line(&report.fits, archive.records.len()));
    if !summary.failures.is_empty() {
        let lines: Vec<String> = summary.failures.iter().map(|f| format!("  point {}: {}", f.index, f.message)).collect();
        return Err(Failure::Runtime(format!(
            "{} of {} points failed:\n{}",
            summary.failures.len(),
            summary.total,
            lines.join("\n")
        )));
    }
    if !summary.is_complete() && !args.quiet {
        eprintln!(
            "stopped after {} new points; rerun to resume ({} of {} done)",
            summary.completed,
            summary.resumed + summary.completed,
            summary.total
        );
    }
    Ok(())
}

fn analyze(cli: &Cli, args: &AnalyzeArgs) -> CliResult<()> {
    let axis = fit_axis(args.fit_axis)?;
    let archive = SampleArchive::read(&args.archive).map_err(config_err)?;
    let dir = output_dir(cli, &args.archive);
    let report = write_analysis(&archive, &dir, &stem(&args.archive), aggregation(args.aggregation), axis)?;
    println!("{}", summary_line(&report.fits, archive.records.len()));
    Ok(())
}

fn read_table(path: &Path) -> CliResult<MetricsTable> {
    read_metrics_csv(&read_text(path)?).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn fit(cli: &Cli, args: &FitArgs) -> CliResult<()> {
    let axis = fit_axis(args.axis)?;
    let table = read_table(&args.metrics)?;
    let report = FitReport::from_table(&table, axis);
    let dir = output_dir(cli, &args.metrics);
    write_file(&dir.join(format!("{}.fit.json", stem(&args.metrics))), &report.to_json().map_err(runtime_err)?)?;
    println!("{}", summary_line(&report, table.points.len()));
    Ok(())
}

/// File, hold time and onset field.
type Onset3 = (PathBuf, f64, f64);

/// `(hold_us, Γ_init)` per input; inputs without either are skipped with a warning.
fn onset_pairs(paths: &[PathBuf]) -> CliResult<(Vec<Onset3>, Vec<String>)> {
    let mut used = Vec::new();
    let mut warnings = Vec::new();
    for path in paths {
        let table = read_table(path)?;
        let Some(hold) = table.meta_f64("hold_us") else {
            warnings.push(format!("{}: no hold_us metadata, excluded", path.display()));
            continue;
        };
        match gamma_init(&table.sorted_by_ratio(), ONSET_THRESHOLD) {
            Onset::Found { gamma_ghz, .. } => used.push((path.clone(), hold, gamma_ghz)),
            Onset::NoOnset => warnings.push(format!("{}: no onset, excluded", path.display())),
        }
    }
    Ok((used, warnings))
}

fn scaling(cli: &Cli, args: &ScalingArgs) -> CliResult<()> {
    let (used, warnings) = onset_pairs(&args.metrics)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    if used.len() < 2 {
        return Err(Failure::Runtime(format!("scaling needs 2 inputs with an onset, have {}", used.len())));
    }
    let pairs: Vec<(f64, f64)> = used.iter().map(|&(_, t, g)| (t, g)).collect();
    let fit = scaling_fit(&pairs).map_err(runtime_err)?;
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("."));
    let report = json!({
        "slope": fit.slope,
        "intercept": fit.intercept,
        "r_squared": fit.r_squared,
        "hold_unit": "us",
        "inputs": used.iter().map(|(p, t, g)| json!({"file": p.display().to_string(), "hold_us": t, "gamma_init_ghz": g})).collect::<Vec<_>>(),
        "excluded": warnings,
    });
    write_file(&dir.join("scaling.json"), &(serde_json::to_string_pretty(&report).map_err(runtime_err)? + "\n"))?;
    write_file(&dir.join("scaling.svg"), &scaling_figure(&used, Some((fit.slope, fit.intercept))).render())?;
    println!("slope {:.6} intercept {:.6} r² {:.6} over {} inputs", fit.slope, fit.intercept, fit.r_squared, used.len());
    Ok(())
}

fn scaling_figure(used: &[Onset3], line: Option<(f64, f64)>) -> Figure {
    let mut pts: Vec<(f64, f64)> = used.iter().map(|&(_, t, g)| (t, g)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut series = vec![Series {
        name: "Γ_init".into(),
        points: pts.clone(),
        style: Style::Markers,
    }];
    if let (Some((slope, intercept)), Some(first), Some(last)) = (line, pts.first(), pts.last()) {
        // log10(1/Γ) = slope·log10 τ + intercept
        let at = |t: f64| (t, 10f64.powf(-(slope * t.log10() + intercept)));
        series.push(Series {
            name: format!("fit, slope {slope:.3}"),
            points: vec![at(first.0), at(last.0)],
            style: Style::Line,
        });
    }
    Figure {
        title: "Onset field vs hold time".into(),
        x_label: "hold time (µs)".into(),
        y_label: "Γ_init (GHz)".into(),
        x_log: true,
        y_log: true,
        y_range: None,
        series,
    }
}

fn embed(cli: &Cli, args: &EmbedArgs) -> CliResult<()> {
    let text = read_text(&args.graph)?;
    let name = stem(&args.graph);
    let loaded = load_graph(&text, &name).map_err(|e| Failure::Config(format!("{}: {e}", args.graph.display())))?;
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
    let graph = loaded.graph;
    let budget = match (args.iterations, args.time_ms) {
        (_, Some(ms)) => SearchBudget::Millis(ms),
        (Some(it), None) => SearchBudget::Iterations(it),
        (None, None) => SearchBudget::Iterations(DEFAULT_ITERATIONS),
    };
    let options = SearchOptions {
        min_length: args.min_length,
        budget,
        seed: cli.seed.unwrap_or(0),
        workers: cli.workers.unwrap_or(1),
    };
    let text = match find_odd_cycle(&graph, &options) {
        Some(c) => {
            eprintln!(
                "odd cycle of length {} on {} vertices ({:.1}%)",
                c.length,
                graph.vertex_count(),
                100.0 * c.length as f64 / graph.vertex_count() as f64
            );
            c.to_json(&graph).map_err(runtime_err)?
        }
        None => {
            eprintln!("no odd cycle of length ≥ {} found", args.min_length.max(3));
            serde_json::to_string_pretty(&json!({
                "graph": graph.name(),
                "vertices": graph.vertex_count(),
                "length": 0,
                "coverage": 0.0,
                "cycle": null,
            }))
            .map_err(runtime_err)?
                + "\n"
        }
    };
    match &cli.out {
        Some(dir) => write_file(&dir.join(format!("{name}.cycle.json")), &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn x_of(axis: Axis, p: &wallmem::PointMetrics) -> Option<f64> {
    match axis {
        Axis::GammaOverJ => p.gamma_over_j.finite(),
        Axis::Gamma => Some(p.gamma_ghz),
        Axis::S => Some(p.s_pause),
    }
}

fn axis_label(axis: Axis) -> &'static str {
    match axis {
        Axis::GammaOverJ => "Γ/J",
        Axis::Gamma => "Γ (GHz)",
        Axis::S => "s",
    }
}

/// Rows of a density CSV at the pause point nearest `target`.
fn density_series(path: &Path, target: f64) -> CliResult<(f64, Vec<(f64, f64)>)> {
    let text = read_text(path)?;
    let bad = |msg: String| Failure::Config(format!("{}: {msg}", path.display()));
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| rec.get(i).and_then(|v| v.parse::<f64>().ok()).ok_or_else(|| bad(format!("malformed row {rec:?}")));
        rows.push((num(0)?, num(2)?, num(3)?));
    }
    let s = rows
        .iter()
        .map(|r| r.0)
        .min_by(|a, b| (a - target).abs().total_cmp(&(b - target).abs()))
        .ok_or_else(|| bad("no rows".into()))?;
    Ok((s, rows.into_iter().filter(|r| r.0 == s).map(|r| (r.1, r.2)).collect()))
}

fn plot(cli: &Cli, args: &PlotArgs) -> CliResult<()> {
    let figure = match args.kind {
        PlotKind::Entropy | PlotKind::Sdwp => {
            let mut series = Vec::new();
            let mut sizes = BTreeSet::new();
            for path in &args.inputs {
                let table = read_table(path)?;
                sizes.insert(table.meta.get("n").cloned().unwrap_or_default());
                let mut points: Vec<(f64, f64)> = table
                    .points
                    .iter()
                    .filter_map(|p| {
                        let y = if args.kind == PlotKind::Entropy { p.entropy_h } else { p.sdwp };
                        x_of(args.axis, p).map(|x| (x, y))
                    })
                    .collect();
                points.sort_by(|a, b| a.0.total_cmp(&b.0));
                series.push(Series {
                    name: stem(path),
                    points,
                    style: Style::Both,
                });
            }
            if sizes.len() > 1 {
                eprintln!("warning: inputs mix ring sizes {sizes:?}");
            }
            let y_label = if args.kind == PlotKind::Entropy { "entropy h" } else { "SDWP" };
            Figure {
                title: format!("{y_label} vs {}", axis_label(args.axis)),
                x_label: axis_label(args.axis).into(),
                y_label: y_label.into(),
                x_log: args.axis != Axis::S,
                y_log: false,
                y_range: Some((0.0, 1.0)),
                series,
            }
        }
        PlotKind::Density => {
            let target = args.s.unwrap_or(0.5);
            let mut series = Vec::new();
            for path in &args.inputs {
                let (s, points) = density_series(path, target)?;
                series.push(Series {
                    name: format!("{} (s={s})", stem(path)),
                    points,
                    style: Style::Both,
                });
            }
            Figure {
                title: "Wall density vs distance from the initial edge".into(),
                x_label: "distance (edges)".into(),
                y_label: "walls per sample".into(),
                x_log: false,
                y_log: false,
                y_range: None,
                series,
            }
        }
        PlotKind::Scaling => {
            let (used, warnings) = onset_pairs(&args.inputs)?;
            for w in &warnings {
                eprintln!("warning: {w}");
            }
            let pairs: Vec<(f64, f64)> = used.iter().map(|&(_, t, g)| (t, g)).collect();
            let line = scaling_fit(&pairs).ok().map(|f| (f.slope, f.intercept));
            scaling_figure(&used, line)
        }
    };
    let kind = match args.kind {
        PlotKind::Entropy => "entropy",
        PlotKind::Sdwp => "sdwp",
        PlotKind::Density => "density",
        PlotKind::Scaling => "scaling",
    };
    let path = args
        .output
        .clone()
        .unwrap_or_else(|| cli.out.clone().unwrap_or_else(|| PathBuf::from(".")).join(format!("{kind}.svg")));
    write_file(&path, &figure.render())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stems_drop_data_suffixes() {
        assert_eq!(stem(Path::new("/a/b/run1.jsonl.gz")), "run1");
        assert_eq!(stem(Path::new("run1.metrics.csv")), "run1");
        assert_eq!(stem(Path::new("graph.txt")), "graph");
    }
}
