//! CSV ingestion and emission, and the run configuration file.
//!
//! Numbers are written in Rust's shortest round-trip form, so every value
//! read back is bit-identical to the one written.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SbsaError};
use crate::pipeline::{BeatConfig, BeatRecord, Predictor, PulseIndices, SegmentationConfig};
use crate::signal::Signal;
use crate::transform::ChiSelectionConfig;

fn io_error(path: &Path, message: impl Into<String>) -> SbsaError {
    SbsaError::Io {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Which CSV columns hold time (s) and value. Columns are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    /// `None` for value-only files, which need a declared sample rate.
    pub time: Option<usize>,
    pub value: usize,
}

impl ColumnSpec {
    pub const TIME_VALUE: ColumnSpec = ColumnSpec {
        time: Some(0),
        value: 1,
    };
    pub const VALUE_ONLY: ColumnSpec = ColumnSpec {
        time: None,
        value: 0,
    };
}

/// A numeric CSV table with an optional header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    /// 1-based file line of each row, for error messages.
    pub lines: Vec<usize>,
}

impl Table {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[k]).collect()
    }
}

/// Reads a CSV of numbers. The first record is a header when any of its
/// fields is not a number; otherwise columns are named by position.
/// Lines starting with `#` are ignored.
pub fn read_table(path: &Path) -> Result<Table> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .map_err(|e| io_error(path, e.to_string()))?;

    let mut columns: Option<Vec<String>> = None;
    let mut rows = Vec::new();
    let mut lines = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let record = record.map_err(|e| io_error(path, e.to_string()))?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: Vec<Option<f64>> = record.iter().map(|f| f.parse::<f64>().ok()).collect();
        if columns.is_none() && rows.is_empty() && parsed.iter().any(Option::is_none) {
            columns = Some(record.iter().map(str::to_string).collect());
            continue;
        }
        let width = columns.as_ref().map_or(record.len(), Vec::len);
        if record.len() != width {
            return Err(io_error(
                path,
                format!("row {line}: {} fields, expected {width}", record.len()),
            ));
        }
        let mut row = Vec::with_capacity(width);
        for (field, value) in record.iter().zip(parsed) {
            match value {
                Some(v) if v.is_nan() => {
                    return Err(io_error(path, format!("row {line}: value is NaN")));
                }
                Some(v) => row.push(v),
                None => {
                    return Err(io_error(
                        path,
                        format!("row {line}: {field:?} is not a number"),
                    ));
                }
            }
        }
        if columns.is_none() {
            columns = Some((0..width).map(|i| format!("column{i}")).collect());
        }
        rows.push(row);
        lines.push(line);
    }
    Ok(Table {
        columns: columns.unwrap_or_default(),
        rows,
        lines,
    })
}

/// Loads a uniformly sampled signal from CSV.
///
/// With a time column, the step is taken from the timestamps and irregular
/// timestamps are linearly resampled onto a uniform grid (with a warning).
/// Without one, `sample_rate` (Hz) is required.
pub fn load_signal(path: &Path, columns: ColumnSpec, sample_rate: Option<f64>) -> Result<Signal> {
    let table = read_table(path)?;
    let width = table.columns.len();
    let needed = columns.value.max(columns.time.unwrap_or(0));
    if table.rows.is_empty() {
        return Err(io_error(path, "no data rows"));
    }
    if needed >= width {
        return Err(io_error(
            path,
            format!("column {needed} requested but the file has {width}"),
        ));
    }
    for (row, &line) in table.rows.iter().zip(&table.lines) {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(io_error(path, format!("row {line}: non-finite value")));
        }
    }
    let values = table.column(columns.value);
    if values.len() < 3 {
        return Err(io_error(
            path,
            format!("{} samples, need at least 3", values.len()),
        ));
    }

    let Some(tc) = columns.time else {
        let rate =
            sample_rate.ok_or_else(|| io_error(path, "value-only file needs a sample rate"))?;
        if !(rate > 0.0 && rate.is_finite()) {
            return Err(SbsaError::InvalidInput(format!(
                "sample rate {rate} must be positive"
            )));
        }
        return Signal::new(values, 1.0 / rate, 0.0);
    };
    if sample_rate.is_some() {
        warn!(
            "{}: time column present; ignoring the declared sample rate",
            path.display()
        );
    }

    let times = table.column(tc);
    for (k, w) in times.windows(2).enumerate() {
        if w[1] <= w[0] {
            return Err(io_error(
                path,
                format!(
                    "row {}: time {} does not increase",
                    table.lines[k + 1],
                    w[1]
                ),
            ));
        }
    }
    let n = times.len();
    let t0 = times[0];
    let dt = (times[n - 1] - t0) / (n - 1) as f64;
    let uniform = times
        .iter()
        .enumerate()
        .all(|(i, &t)| (t - (t0 + i as f64 * dt)).abs() <= 1e-6 * dt);
    if uniform {
        return Signal::new(values, dt, t0);
    }

    let mut steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    steps.sort_by(f64::total_cmp);
    let step = steps[steps.len() / 2];
    warn!(
        "{}: irregular timestamps; resampling linearly onto a {step} s grid",
        path.display()
    );
    let len = ((times[n - 1] - t0) / step).floor() as usize + 1;
    let mut j = 0;
    let resampled = (0..len)
        .map(|i| {
            let t = t0 + i as f64 * step;
            while j + 2 < n && times[j + 1] < t {
                j += 1;
            }
            let f = ((t - times[j]) / (times[j + 1] - times[j])).clamp(0.0, 1.0);
            values[j] + f * (values[j + 1] - values[j])
        })
        .collect();
    Signal::new(resampled, step, t0)
}

/// Writes `time,value` rows under the given header.
pub fn write_signal(path: &Path, signal: &Signal, header: [&str; 2]) -> Result<()> {
    let mut out = format!("{},{}\n", header[0], header[1]);
    for (t, v) in signal.times().zip(signal.samples()) {
        let _ = writeln!(out, "{t},{v}");
    }
    fs::write(path, out).map_err(|e| io_error(path, e.to_string()))
}

/// Writes several equally long columns.
pub fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<()> {
    if header.len() != columns.len() || columns.windows(2).any(|w| w[0].len() != w[1].len()) {
        return Err(SbsaError::InvalidInput(
            "columns must match the header and each other in length".into(),
        ));
    }
    let mut out = header.join(",");
    out.push('\n');
    let rows = columns.first().map_or(0, |c| c.len());
    for i in 0..rows {
        for (k, c) in columns.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", c[i]);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_error(path, e.to_string()))
}

/// Header of the per-beat table. Units: `pi_ms` in ms; `sbp`, `dbp`, `mbp`,
/// `pp` in mmHg; `lambda1`, `lambda2` in 1/s²; first invariants in mmHg·s,
/// second in mmHg²·s; `chi` in 1/(mmHg·s²).
pub const BEAT_COLUMNS: [&str; 16] = [
    "beat", "pi_ms", "sbp", "dbp", "mbp", "pp", "lambda1", "lambda2", "inv1g", "inv1s", "inv1d",
    "inv2g", "inv2s", "inv2d", "chi", "n",
];

/// One row of the per-beat table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeatRow {
    pub beat: usize,
    pub pi_ms: f64,
    pub sbp: f64,
    pub dbp: f64,
    pub mbp: f64,
    pub pp: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub inv1g: f64,
    pub inv1s: f64,
    pub inv1d: f64,
    pub inv2g: f64,
    pub inv2s: f64,
    pub inv2d: f64,
    pub chi: f64,
    pub n: usize,
}

impl From<&BeatRecord> for BeatRow {
    fn from(r: &BeatRecord) -> Self {
        let i = &r.invariants;
        Self {
            beat: r.beat_index,
            pi_ms: r.pi_ms,
            sbp: r.sbp,
            dbp: r.dbp,
            mbp: r.mbp,
            pp: r.pp,
            lambda1: r.lambda1_abs,
            lambda2: r.lambda2_abs,
            inv1g: i.inv1_global,
            inv1s: i.inv1_systolic,
            inv1d: i.inv1_diastolic,
            inv2g: i.inv2_global,
            inv2s: i.inv2_systolic,
            inv2d: i.inv2_diastolic,
            chi: r.chi_hat,
            n: r.n_chi,
        }
    }
}

impl BeatRow {
    fn values(&self) -> [f64; 16] {
        [
            self.beat as f64,
            self.pi_ms,
            self.sbp,
            self.dbp,
            self.mbp,
            self.pp,
            self.lambda1,
            self.lambda2,
            self.inv1g,
            self.inv1s,
            self.inv1d,
            self.inv2g,
            self.inv2s,
            self.inv2d,
            self.chi,
            self.n as f64,
        ]
    }
}

impl PulseIndices for BeatRow {
    fn beat_index(&self) -> usize {
        self.beat
    }
    fn pi_ms(&self) -> f64 {
        self.pi_ms
    }
    fn lambda1_abs(&self) -> f64 {
        self.lambda1
    }
    fn sbp(&self) -> f64 {
        self.sbp
    }
    fn pp(&self) -> f64 {
        self.pp
    }
}

/// Comment line written above the per-beat header.
pub const BEAT_UNITS: &str = "# units: pi_ms ms; sbp dbp mbp pp mmHg; lambda1 lambda2 1/s^2; \
inv1* mmHg*s; inv2* mmHg^2*s; chi 1/(mmHg*s^2); n count";

pub fn format_beat_table(rows: &[BeatRow]) -> String {
    let mut out = String::from(BEAT_UNITS);
    out.push('\n');
    out.push_str(&BEAT_COLUMNS.join(","));
    out.push('\n');
    for r in rows {
        let v = r.values();
        let _ = write!(out, "{},", r.beat);
        for x in &v[1..15] {
            let _ = write!(out, "{x},");
        }
        let _ = writeln!(out, "{}", r.n);
    }
    out
}

pub fn write_beat_table(path: &Path, rows: &[BeatRow]) -> Result<()> {
    fs::write(path, format_beat_table(rows)).map_err(|e| io_error(path, e.to_string()))
}

/// Reads a per-beat table; columns may appear in any order but all must be present.
pub fn read_beat_table(path: &Path) -> Result<Vec<BeatRow>> {
    let table = read_table(path)?;
    let idx: Vec<usize> = BEAT_COLUMNS
        .iter()
        .map(|name| {
            table
                .column_index(name)
                .ok_or_else(|| io_error(path, format!("missing column {name:?}")))
        })
        .collect::<Result<_>>()?;
    let count = |v: f64, line: usize, name: &str| -> Result<usize> {
        if v >= 0.0 && v.fract() == 0.0 {
            Ok(v as usize)
        } else {
            Err(io_error(
                path,
                format!("row {line}: {name} = {v} is not a count"),
            ))
        }
    };
    table
        .rows
        .iter()
        .zip(&table.lines)
        .map(|(row, &line)| {
            let g = |k: usize| row[idx[k]];
            Ok(BeatRow {
                beat: count(g(0), line, "beat")?,
                pi_ms: g(1),
                sbp: g(2),
                dbp: g(3),
                mbp: g(4),
                pp: g(5),
                lambda1: g(6),
                lambda2: g(7),
                inv1g: g(8),
                inv1s: g(9),
                inv1d: g(10),
                inv2g: g(11),
                inv2s: g(12),
                inv2d: g(13),
                chi: g(14),
                n: count(g(15), line, "n")?,
            })
        })
        .collect()
}

/// Reads one nonnegative integer per row (first column), e.g. beat feet.
pub fn read_indices(path: &Path) -> Result<Vec<usize>> {
    let table = read_table(path)?;
    table
        .rows
        .iter()
        .zip(&table.lines)
        .map(|(row, &line)| {
            let v = row[0];
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(io_error(
                    path,
                    format!("row {line}: {v} is not a sample index"),
                ))
            }
        })
        .collect()
}

/// Settings for a full run, read from a TOML file. Every field has a default.
///
/// ```toml
/// n_s = 3
/// predictor = "lambda1"
/// output_dir = "out"
/// seed = 1
///
/// [chi]
/// mode = "error_target"      # or "fixed_component_count" with target_n
/// mse_tolerance = 1e-3
/// chi_min = 1e-2
/// chi_max = 1e6
///
/// [segmentation]
/// upstroke_fraction = 0.5
/// refractory_s = 0.25
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub chi: ChiSelectionConfig,
    /// Eigenvalues in the systolic share.
    pub n_s: usize,
    pub segmentation: SegmentationConfig,
    /// File of foot sample indices; replaces detection when set.
    pub annotation_path: Option<PathBuf>,
    pub predictor: Predictor,
    pub output_dir: PathBuf,
    /// Seed for the synthetic generators.
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            chi: ChiSelectionConfig::default(),
            n_s: BeatConfig::default().n_s,
            segmentation: SegmentationConfig::default(),
            annotation_path: None,
            predictor: Predictor::default(),
            output_dir: PathBuf::from("out"),
            seed: 1,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            toml::from_str(text).map_err(|e| SbsaError::InvalidInput(format!("config: {e}")))?;
        cfg.chi.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e.to_string()))?;
        Self::from_toml(&text).map_err(|e| match e {
            SbsaError::InvalidInput(m) => io_error(path, m),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn beat_config(&self) -> BeatConfig {
        BeatConfig {
            chi: self.chi,
            n_s: self.n_s,
        }
    }

    /// Segmentation settings with annotations loaded from `annotation_path`.
    pub fn resolved_segmentation(&self) -> Result<SegmentationConfig> {
        let mut seg = self.segmentation.clone();
        if let Some(p) = &self.annotation_path {
            seg.annotations = Some(read_indices(p)?);
        }
        Ok(seg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn two_column_uniform() {
        let f = file("t,p\n0,1\n0.01,2\n0.02,3\n0.03,4\n");
        let s = load_signal(f.path(), ColumnSpec::TIME_VALUE, None).unwrap();
        assert!((s.dt() - 0.01).abs() < 1e-15);
        assert_eq!(s.samples(), &[1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn value_only_with_rate() {
        let f = file("5\n6\n7\n8\n");
        let s = load_signal(f.path(), ColumnSpec::VALUE_ONLY, Some(200.0)).unwrap();
        assert_eq!(s.dt(), 0.005);
        assert!(load_signal(f.path(), ColumnSpec::VALUE_ONLY, None).is_err());
    }

    #[test]
    fn nan_row_is_named() {
        let f = file("t,p\n0,1\n0.01,NaN\n0.02,3\n");
        let err = load_signal(f.path(), ColumnSpec::TIME_VALUE, None).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
        assert_eq!(err.kind(), crate::ErrorKind::Input);
    }

    #[test]
    fn non_monotone_time_is_rejected() {
        let f = file("0,1\n0.02,2\n0.01,3\n0.03,4\n");
        let err = load_signal(f.path(), ColumnSpec::TIME_VALUE, None).unwrap_err();
        assert!(err.to_string().contains("row 3"), "{err}");
    }

    #[test]
    fn irregular_time_is_resampled() {
        let f = file("0,0\n0.01,1\n0.025,2.5\n0.03,3\n0.04,4\n");
        let s = load_signal(f.path(), ColumnSpec::TIME_VALUE, None).unwrap();
        assert!((s.dt() - 0.01).abs() < 1e-12);
        for (t, v) in s.times().zip(s.samples()) {
            assert!((v - 100.0 * t).abs() < 1e-9);
        }
    }

    #[test]
    fn signal_round_trip_is_exact() {
        let s = Signal::from_fn(50, 0.004, 0.0, |t| (7.0 * t).sin() + 2.0).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        write_signal(&p, &s, ["t_s", "value"]).unwrap();
        let back = load_signal(&p, ColumnSpec::TIME_VALUE, None).unwrap();
        assert_eq!(back.samples(), s.samples());
        assert!((back.dt() - s.dt()).abs() < 1e-15);
    }

    #[test]
    fn beat_table_round_trip() {
        let rows = vec![
            BeatRow {
                beat: 1,
                pi_ms: 851.9999999999999,
                sbp: 55.25,
                dbp: 0.0,
                mbp: 20.1,
                pp: 55.25,
                lambda1: 1934.0987654321,
                lambda2: 1300.7,
                inv1g: 17.1,
                inv1s: 9.0,
                inv1d: 8.1,
                inv2g: 800.0,
                inv2s: 600.0,
                inv2d: 200.0,
                chi: 0.4201171875,
                n: 7,
            };
            2
        ];
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("beats.csv");
        write_beat_table(&p, &rows).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert!(lines.next().unwrap().starts_with("# units:"));
        assert_eq!(
            lines.next().unwrap(),
            "beat,pi_ms,sbp,dbp,mbp,pp,lambda1,lambda2,inv1g,inv1s,inv1d,inv2g,inv2s,inv2d,chi,n"
        );
        assert_eq!(read_beat_table(&p).unwrap(), rows);
    }

    #[test]
    fn run_config_defaults_and_overrides() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.n_s, 3);

        let cfg = RunConfig::from_toml(
            "n_s = 2\npredictor = \"sbp\"\n[chi]\nmode = \"fixed_component_count\"\ntarget_n = 7\n[segmentation]\nrefractory_s = 0.3\n",
        )
        .unwrap();
        assert_eq!(cfg.n_s, 2);
        assert_eq!(cfg.predictor, Predictor::Sbp);
        assert_eq!(
            cfg.chi.mode,
            crate::ChiMode::FixedComponentCount { target_n: 7 }
        );
        assert_eq!(cfg.segmentation.refractory_s, 0.3);
        assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);

        assert!(
            RunConfig::from_toml("[chi]\nmode = \"error_target\"\nmse_tolerance = -1\n").is_err()
        );
    }
}
