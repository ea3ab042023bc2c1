use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context as _, Result};
use sbsa::io::{self, read_table, write_columns, write_signal, BeatRow, ColumnSpec, RunConfig};
use sbsa::pipeline::synthetic::{synthesize_recording, Lambda1Coupling, RecordingSpec};
use sbsa::pipeline::{analyze_recording, segment_beats, Predictor};
use sbsa::signal::relative_mse;
use sbsa::stats::{linear_regression, significance_stars, summarize, wilcoxon_signed_rank};
use sbsa::transform::centered_norming;
use sbsa::{
    brs_pairs, decompose as decompose_at, invariant_set, reconstruct as reconstruct_from,
    select_chi, soliton_component, split_phases, synthesize_reflectionless, ChiMode, Grid,
    SbsaError, SbsaResult, Signal,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::{ChiArgs, InputArgs, PredictorArg, SolitonArgs, SynthKind};

pub struct Context {
    pub config: RunConfig,
    pub config_path: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Context {
    pub fn new(config: Option<&Path>, out: Option<&Path>) -> Result<Self> {
        let cfg = match config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let out_dir = out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output_dir.clone());
        Ok(Self {
            config: cfg,
            config_path: config.map(Path::to_path_buf),
            out_dir,
        })
    }

    fn out(&self, name: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out_dir)
            .with_context(|| format!("creating {}", self.out_dir.display()))?;
        Ok(self.out_dir.join(name))
    }

    fn plot(&self, name: &str) -> Result<PathBuf> {
        let dir = self.out_dir.join("plots");
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir.join(name))
    }

    /// Writes `<command>.json` with the configuration echo and prints it.
    fn report(&self, command: &str, inputs: Value, result: impl Serialize) -> Result<()> {
        let doc = json!({
            "tool": "sbsa",
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "config_file": self.config_path.as_ref().map(|p| p.display().to_string()),
            "config": self.config,
            "inputs": inputs,
            "result": result,
        });
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        let path = self.out(&format!("{command}.json"))?;
        fs::write(&path, &text).with_context(|| format!("writing {}", path.display()))?;
        print!("{text}");
        Ok(())
    }

    fn with_chi_overrides(&self, args: &ChiArgs) -> RunConfig {
        let mut cfg = self.config.clone();
        if let Some(n) = args.target_n {
            cfg.chi.mode = ChiMode::FixedComponentCount { target_n: n };
        }
        if let Some(t) = args.mse_tol {
            cfg.chi.mode = ChiMode::ErrorTarget { mse_tolerance: t };
        }
        if let Some(n_s) = args.n_s {
            cfg.n_s = n_s;
        }
        cfg
    }
}

fn load(input: &InputArgs) -> Result<Signal> {
    let value_only = input.time_col.is_none() && input.rate.is_some();
    let spec = if value_only {
        ColumnSpec {
            time: None,
            value: input.value_col.unwrap_or(0),
        }
    } else {
        ColumnSpec {
            time: Some(input.time_col.unwrap_or(0)),
            value: input.value_col.unwrap_or(1),
        }
    };
    Ok(io::load_signal(&input.input, spec, input.rate)?)
}

fn inputs(input: &InputArgs, y: &Signal) -> Value {
    json!({
        "path": input.input.display().to_string(),
        "samples": y.len(),
        "dt_s": y.dt(),
        "t0_s": y.t0(),
    })
}

/// Decomposition at `--chi` when given, otherwise at the selected χ̂.
fn analyze(y: &Signal, args: &ChiArgs, cfg: &RunConfig) -> Result<SbsaResult> {
    if let Some(chi) = args.chi {
        let decomposition = decompose_at(y, chi)?;
        let reconstruction = reconstruct_from(&decomposition);
        let mse = relative_mse(y.samples(), reconstruction.samples());
        return Ok(SbsaResult {
            decomposition,
            chi_hat: chi,
            reconstruction,
            relative_mse: mse,
            converged: true,
            iterations: 1,
        });
    }
    Ok(select_chi(y, &cfg.chi)?)
}

fn write_pair(path: &Path, header: [&str; 2], x: &[f64], y: &[f64]) -> Result<()> {
    Ok(write_columns(path, &header, &[x, y])?)
}

#[derive(Serialize)]
struct SpectrumReport {
    chi: f64,
    n: usize,
    kappas: Vec<f64>,
    eigenvalues: Vec<f64>,
    relative_mse: f64,
    converged: bool,
    iterations: usize,
}

fn spectrum_report(r: &SbsaResult) -> SpectrumReport {
    SpectrumReport {
        chi: r.chi_hat,
        n: r.n_chi(),
        kappas: r.decomposition.kappas().to_vec(),
        eigenvalues: r.decomposition.eigenvalues(),
        relative_mse: r.relative_mse,
        converged: r.converged,
        iterations: r.iterations,
    }
}

fn write_overlay(ctx: &Context, y: &Signal, r: &SbsaResult) -> Result<()> {
    let t: Vec<f64> = y.times().collect();
    write_columns(
        &ctx.out("reconstruction.csv")?,
        &["t_s", "measured", "reconstructed"],
        &[&t, y.samples(), r.reconstruction.samples()],
    )?;
    write_pair(&ctx.plot("measured.csv")?, ["t_s", "measured"], &t, y.samples())?;
    write_pair(
        &ctx.plot("reconstructed.csv")?,
        ["t_s", "reconstructed"],
        &t,
        r.reconstruction.samples(),
    )
}

pub fn decompose(ctx: &Context, input: &InputArgs, chi: &ChiArgs) -> Result<()> {
    let cfg = ctx.with_chi_overrides(chi);
    let y = load(input)?;
    let r = analyze(&y, chi, &cfg)?;
    let d = &r.decomposition;

    let index: Vec<f64> = (1..=d.len()).map(|n| n as f64).collect();
    write_columns(
        &ctx.out("spectrum.csv")?,
        &["n", "kappa_per_s", "lambda_per_s2"],
        &[&index, d.kappas(), &d.eigenvalues()],
    )?;
    let t: Vec<f64> = y.times().collect();
    let names: Vec<String> = std::iter::once("t_s".to_string())
        .chain((1..=d.len()).map(|n| format!("psi_{n}")))
        .collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut cols: Vec<&[f64]> = vec![&t];
    cols.extend(d.eigenfunctions().iter().map(Vec::as_slice));
    write_columns(&ctx.out("eigenfunctions.csv")?, &header, &cols)?;
    write_overlay(ctx, &y, &r)?;
    ctx.report("decompose", inputs(input, &y), spectrum_report(&r))
}

pub fn reconstruct(ctx: &Context, input: &InputArgs, chi: &ChiArgs) -> Result<()> {
    let cfg = ctx.with_chi_overrides(chi);
    let y = load(input)?;
    let r = analyze(&y, chi, &cfg)?;
    let d = &r.decomposition;
    let n_s = cfg.n_s.min(d.len());
    let split = split_phases(d, n_s)?;

    let t: Vec<f64> = y.times().collect();
    write_overlay(ctx, &y, &r)?;
    write_columns(
        &ctx.out("phases.csv")?,
        &["t_s", "measured", "reconstructed", "systolic", "diastolic"],
        &[
            &t,
            y.samples(),
            r.reconstruction.samples(),
            split.systolic.samples(),
            split.diastolic.samples(),
        ],
    )?;
    write_pair(&ctx.plot("systolic.csv")?, ["t_s", "systolic"], &t, split.systolic.samples())?;
    write_pair(&ctx.plot("diastolic.csv")?, ["t_s", "diastolic"], &t, split.diastolic.samples())?;

    let components: Vec<Signal> = (1..=d.len())
        .map(|n| soliton_component(d, n))
        .collect::<sbsa::Result<_>>()?;
    let names: Vec<String> = std::iter::once("t_s".to_string())
        .chain((1..=d.len()).map(|n| format!("soliton_{n}")))
        .collect();
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut cols: Vec<&[f64]> = vec![&t];
    cols.extend(components.iter().map(Signal::samples));
    write_columns(&ctx.out("components.csv")?, &header, &cols)?;

    let result = json!({
        "spectrum": spectrum_report(&r),
        "n_s": n_s,
        "integral_measured": y.integral(),
        "integral_reconstructed": r.reconstruction.integral(),
        "integral_systolic": split.systolic.integral(),
        "integral_diastolic": split.diastolic.integral(),
    });
    ctx.report("reconstruct", inputs(input, &y), result)
}

pub fn invariants(ctx: &Context, input: &InputArgs, chi: &ChiArgs) -> Result<()> {
    let cfg = ctx.with_chi_overrides(chi);
    let y = load(input)?;
    let r = analyze(&y, chi, &cfg)?;
    let n_s = cfg.n_s.min(r.n_chi());
    let inv = invariant_set(&r.decomposition, &y, n_s)?;
    let result = json!({
        "chi": r.chi_hat,
        "n": r.n_chi(),
        "relative_mse": r.relative_mse,
        "invariants": inv,
    });
    ctx.report("invariants", inputs(input, &y), result)
}

pub fn pipeline(ctx: &Context, input: &InputArgs, chi: &ChiArgs, annotations: Option<&Path>) -> Result<()> {
    if chi.chi.is_some() {
        bail!(SbsaError::InvalidInput(
            "pipeline selects χ per beat; use --target-n or --mse-tol".into()
        ));
    }
    let mut cfg = ctx.with_chi_overrides(chi);
    if let Some(p) = annotations {
        cfg.annotation_path = Some(p.to_path_buf());
    }
    let y = load(input)?;
    let seg = cfg.resolved_segmentation()?;
    let windows = segment_beats(&y, &seg)?;
    let analyses = analyze_recording(&y, &windows, &cfg.beat_config())?;
    let rows: Vec<BeatRow> = analyses.iter().map(|a| BeatRow::from(&a.record)).collect();
    io::write_beat_table(&ctx.out("beats.csv")?, &rows)?;

    let beat: Vec<f64> = windows.iter().enumerate().map(|(k, _)| (k + 1) as f64).collect();
    let col = |f: fn(&sbsa::pipeline::BeatWindow) -> f64| windows.iter().map(f).collect::<Vec<f64>>();
    write_columns(
        &ctx.out("windows.csv")?,
        &["beat", "start_index", "end_index", "onset_s"],
        &[
            &beat,
            &col(|w| w.start_index as f64),
            &col(|w| w.end_index as f64),
            &col(|w| w.onset_time),
        ],
    )?;

    let onset: Vec<f64> = analyses.iter().map(|a| a.record.onset_time).collect();
    let series: [(&str, fn(&BeatRow) -> f64); 10] = [
        ("pi_ms", |r| r.pi_ms),
        ("sbp", |r| r.sbp),
        ("dbp", |r| r.dbp),
        ("pp", |r| r.pp),
        ("lambda1", |r| r.lambda1),
        ("lambda2", |r| r.lambda2),
        ("inv1s", |r| r.inv1s),
        ("inv1d", |r| r.inv1d),
        ("inv2s", |r| r.inv2s),
        ("inv2d", |r| r.inv2d),
    ];
    let mut summary = BTreeMap::new();
    for (name, f) in series {
        let v: Vec<f64> = rows.iter().map(f).collect();
        write_pair(&ctx.plot(&format!("{name}.csv"))?, ["onset_s", name], &onset, &v)?;
        if let Ok(s) = summarize(&v) {
            summary.insert(name, s);
        }
    }

    let mut n_hist = BTreeMap::new();
    for r in &rows {
        *n_hist.entry(r.n).or_insert(0usize) += 1;
    }
    let flagged = |pred: fn(&sbsa::BeatRecord) -> bool| -> Vec<usize> {
        analyses
            .iter()
            .filter(|a| pred(&a.record))
            .map(|a| a.record.beat_index)
            .collect()
    };
    let result = json!({
        "beats": rows.len(),
        "n_chi_histogram": n_hist,
        "not_converged": flagged(|r| !r.converged),
        "implausible_pi": flagged(|r| !r.pi_plausible),
        "summary": summary,
    });
    let mut ins = inputs(input, &y);
    ins["annotations"] = json!(cfg.annotation_path.as_ref().map(|p| p.display().to_string()));
    ctx.report("pipeline", ins, result)
}

pub fn brs(ctx: &Context, beats: &Path, predictor: Option<PredictorArg>) -> Result<()> {
    let rows = io::read_beat_table(beats)?;
    let predictors: Vec<Predictor> = match predictor {
        Some(PredictorArg::All) => Predictor::ALL.to_vec(),
        Some(PredictorArg::Lambda1) => vec![Predictor::Lambda1],
        Some(PredictorArg::Sbp) => vec![Predictor::Sbp],
        Some(PredictorArg::Pp) => vec![Predictor::Pp],
        None => vec![ctx.config.predictor],
    };
    let mut results = Vec::new();
    for p in predictors {
        let pairs = brs_pairs(&rows, p)?;
        let fit = linear_regression(&pairs)?;
        let (x, y): (Vec<f64>, Vec<f64>) = pairs.iter().map(|q| (q.x, q.y)).unzip();
        let name = p.name();
        write_pair(&ctx.plot(&format!("brs_{name}_scatter.csv"))?, [name, "next_pi_ms"], &x, &y)?;
        let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        write_pair(
            &ctx.plot(&format!("brs_{name}_fit.csv"))?,
            [name, "fitted_pi_ms"],
            &[lo, hi],
            &[fit.slope * lo + fit.intercept, fit.slope * hi + fit.intercept],
        )?;
        results.push(json!({
            "predictor": name,
            "pairs": pairs.len(),
            "regression": fit,
        }));
    }
    let ins = json!({ "path": beats.display().to_string(), "beats": rows.len() });
    ctx.report("brs", ins, results)
}

#[derive(Serialize)]
struct ColumnComparison {
    column: String,
    n: usize,
    before: sbsa::SummaryStat,
    after: sbsa::SummaryStat,
    statistic: Option<f64>,
    p_value: Option<f64>,
    stars: Option<&'static str>,
}

pub fn compare(ctx: &Context, before: &Path, after: &Path) -> Result<()> {
    let a = read_table(before)?;
    let b = read_table(after)?;
    if a.columns != b.columns {
        bail!(SbsaError::InvalidInput(format!(
            "{} and {} have different columns",
            before.display(),
            after.display()
        )));
    }
    if a.rows.len() != b.rows.len() {
        bail!(SbsaError::InvalidInput(format!(
            "paired tables differ in length ({} vs {} rows)",
            a.rows.len(),
            b.rows.len()
        )));
    }
    let mut table = Vec::new();
    for (k, name) in a.columns.iter().enumerate() {
        if name == "beat" {
            continue;
        }
        let (x, y) = (a.column(k), b.column(k));
        let test = match wilcoxon_signed_rank(&x, &y) {
            Ok(t) => Some(t),
            Err(e) if e.kind() == sbsa::ErrorKind::InsufficientData => {
                log::warn!("{name}: {e}");
                None
            }
            Err(e) => return Err(e.into()),
        };
        table.push(ColumnComparison {
            column: name.clone(),
            n: x.len(),
            before: summarize(&x)?,
            after: summarize(&y)?,
            statistic: test.map(|t| t.statistic),
            p_value: test.map(|t| t.p_value),
            stars: test.map(|t| significance_stars(t.p_value)),
        });
    }

    let mut csv = String::from("column,n,before_mean,before_sem,after_mean,after_sem,statistic,p_value,stars\n");
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    for c in &table {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{}",
            c.column,
            c.n,
            c.before.mean,
            c.before.sem,
            c.after.mean,
            c.after.sem,
            opt(c.statistic),
            opt(c.p_value),
            c.stars.unwrap_or("")
        );
    }
    let path = ctx.out("compare.csv")?;
    fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;

    let doc = json!({
        "tool": "sbsa",
        "version": env!("CARGO_PKG_VERSION"),
        "command": "compare",
        "config_file": ctx.config_path.as_ref().map(|p| p.display().to_string()),
        "config": ctx.config,
        "inputs": { "before": before.display().to_string(), "after": after.display().to_string() },
        "result": table,
    });
    let path = ctx.out("compare.json")?;
    fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;

    println!("{:<10} {:>24} {:>24} {:>10} {:>5}", "column", "before", "after", "p", "");
    for c in &table {
        let fmt = |s: &sbsa::SummaryStat| format!("{:.4} ± {:.4}", s.mean, s.sem);
        println!(
            "{:<10} {:>24} {:>24} {:>10} {:>5}",
            c.column,
            fmt(&c.before),
            fmt(&c.after),
            c.p_value.map_or("NA".to_string(), |p| format!("{p:.4}")),
            c.stars.unwrap_or("NA")
        );
    }
    Ok(())
}

pub fn synth(ctx: &Context, kind: SynthKind) -> Result<()> {
    match kind {
        SynthKind::Soliton(SolitonArgs {
            kappas,
            norming,
            t_min,
            t_max,
            dt,
            output,
        }) => {
            if kappas.is_empty() {
                bail!(SbsaError::InvalidInput("--kappas is required".into()));
            }
            let c = if norming.trim().eq_ignore_ascii_case("auto") {
                centered_norming(&kappas)
            } else {
                norming
                    .split(',')
                    .map(|s| s.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|e| SbsaError::InvalidInput(format!("--norming: {e}")))?
            };
            if !(t_max > t_min && dt > 0.0) {
                bail!(SbsaError::InvalidInput("need t_max > t_min and dt > 0".into()));
            }
            let v = synthesize_reflectionless(&kappas, &c, Grid::on_interval(t_min, t_max, dt))?;
            let path = match output {
                Some(p) => p,
                None => ctx.out("synth.csv")?,
            };
            write_signal(&path, &v, ["t_s", "value"])?;
            let result = json!({
                "kind": "soliton",
                "output": path.display().to_string(),
                "kappas": kappas,
                "norming": c,
                "samples": v.len(),
                "dt_s": dt,
            });
            ctx.report("synth", json!({}), result)
        }
        SynthKind::Abp {
            duration,
            rate,
            mean_pi_ms,
            couple_slope,
            noise_ms,
            seed,
            output,
            feet,
        } => {
            let spec = RecordingSpec {
                duration_s: duration,
                sample_rate_hz: rate,
                mean_pi_ms,
                coupling: couple_slope.map(|slope| Lambda1Coupling {
                    slope,
                    intercept: None,
                    noise_ms,
                }),
                seed: seed.unwrap_or(ctx.config.seed),
                ..RecordingSpec::default()
            };
            let rec = synthesize_recording(&spec, &ctx.config.beat_config())?;
            let path = match output {
                Some(p) => p,
                None => ctx.out("synth.csv")?,
            };
            write_signal(&path, &rec.signal, ["t_s", "p_mmHg"])?;
            if let Some(fp) = &feet {
                let idx: Vec<f64> = rec.feet.iter().map(|&f| f as f64).collect();
                write_columns(fp, &["foot_index"], &[&idx])?;
            }
            let result = json!({
                "kind": "abp",
                "output": path.display().to_string(),
                "feet": feet.map(|p| p.display().to_string()),
                "spec": spec,
                "beats": rec.feet.len() - 1,
                "samples": rec.signal.len(),
            });
            ctx.report("synth", json!({}), result)
        }
    }
}
