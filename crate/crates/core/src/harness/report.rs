use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, OutputSpec, ReportFormat};
use super::HarnessError;
use crate::bits::opt_bit01;

pub const REPORT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestVerdict {
    Pass,
    Fail,
    Aborted,
    /// The protocol has no test phase.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OpenVerdict {
    Accept,
    Reject,
    Aborted,
    /// The run ended before the open phase.
    NotReached,
}

/// One trial. The first five fields are the CSV columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub seed: u64,
    pub test_verdict: TestVerdict,
    #[serde(default, with = "opt_bit01")]
    pub opened_bit: Option<bool>,
    pub open_verdict: OpenVerdict,
    #[serde(default, with = "opt_bit01")]
    pub decoded_bit: Option<bool>,
    /// Bob's best guess of the bit from the pre-open transcript.
    #[serde(default, with = "opt_bit01", skip_serializing_if = "Option::is_none")]
    pub bob_guess: Option<bool>,
    /// Largest trace distance between Bob's conditional photon states under
    /// the two bit hypotheses, given the pre-open transcript.
    #[serde(default)]
    pub concealment: f64,
    /// Inversions of the commitment family attempted before the open phase.
    #[serde(default)]
    pub invert_calls_before_open: usize,
}

impl TrialRow {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            test_verdict: TestVerdict::None,
            opened_bit: None,
            open_verdict: OpenVerdict::NotReached,
            decoded_bit: None,
            bob_guess: None,
            concealment: 0.0,
            invert_calls_before_open: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CsvRow {
    seed: u64,
    test_verdict: TestVerdict,
    #[serde(with = "opt_bit01")]
    opened_bit: Option<bool>,
    open_verdict: OpenVerdict,
    #[serde(with = "opt_bit01")]
    decoded_bit: Option<bool>,
}

impl From<&TrialRow> for CsvRow {
    fn from(r: &TrialRow) -> Self {
        Self {
            seed: r.seed,
            test_verdict: r.test_verdict,
            opened_bit: r.opened_bit,
            open_verdict: r.open_verdict,
            decoded_bit: r.decoded_bit,
        }
    }
}

impl From<CsvRow> for TrialRow {
    fn from(r: CsvRow) -> Self {
        Self {
            seed: r.seed,
            test_verdict: r.test_verdict,
            opened_bit: r.opened_bit,
            open_verdict: r.open_verdict,
            decoded_bit: r.decoded_bit,
            ..TrialRow::new(r.seed)
        }
    }
}

/// Summary statistics; everything except `wall_time_s` is a function of the rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub trials: usize,
    /// Passed tests over trials that ran a test phase; absent without one.
    pub test_pass_rate: Option<f64>,
    pub open_acceptance_rate: f64,
    /// Acceptance among trials that opened 0 (resp. 1); absent if none did.
    pub acceptance_bit0: Option<f64>,
    pub acceptance_bit1: Option<f64>,
    /// Accepted trials whose decoded bit equals the bit Alice opened.
    pub decoded_matches_opened: usize,
    /// How often Bob's pre-open guess equals the bit later opened.
    pub bob_guess_rate: Option<f64>,
    pub mean_concealment: f64,
    pub invert_calls_before_open: usize,
    pub wall_time_s: f64,
}

fn rate(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl Aggregate {
    pub fn from_rows(rows: &[TrialRow], wall_time_s: f64) -> Self {
        let tested = rows.iter().filter(|r| r.test_verdict != TestVerdict::None).count();
        let passed = rows.iter().filter(|r| r.test_verdict == TestVerdict::Pass).count();
        let accepted = rows.iter().filter(|r| r.open_verdict == OpenVerdict::Accept).count();
        let per_bit = |b: bool| {
            let opened = rows.iter().filter(|r| r.opened_bit == Some(b)).count();
            let acc = rows.iter().filter(|r| r.opened_bit == Some(b) && r.open_verdict == OpenVerdict::Accept).count();
            rate(acc, opened)
        };
        let matches = rows
            .iter()
            .filter(|r| r.open_verdict == OpenVerdict::Accept && r.decoded_bit.is_some() && r.decoded_bit == r.opened_bit)
            .count();
        let guessed: Vec<&TrialRow> = rows.iter().filter(|r| r.bob_guess.is_some() && r.opened_bit.is_some()).collect();
        let right = guessed.iter().filter(|r| r.bob_guess == r.opened_bit).count();
        let mean_concealment =
            if rows.is_empty() { 0.0 } else { rows.iter().map(|r| r.concealment).sum::<f64>() / rows.len() as f64 };
        Self {
            trials: rows.len(),
            test_pass_rate: rate(passed, tested),
            open_acceptance_rate: rate(accepted, rows.len()).unwrap_or(0.0),
            acceptance_bit0: per_bit(false),
            acceptance_bit1: per_bit(true),
            decoded_matches_opened: matches,
            bob_guess_rate: rate(right, guessed.len()),
            mean_concealment,
            invert_calls_before_open: rows.iter().map(|r| r.invert_calls_before_open).sum(),
            wall_time_s,
        }
    }

    /// Equal apart from wall time (floats within `1e-12`).
    pub fn agrees_with(&self, other: &Aggregate) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        let close_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => close(a, b),
            (None, None) => true,
            _ => false,
        };
        self.trials == other.trials
            && close_opt(self.test_pass_rate, other.test_pass_rate)
            && close(self.open_acceptance_rate, other.open_acceptance_rate)
            && close_opt(self.acceptance_bit0, other.acceptance_bit0)
            && close_opt(self.acceptance_bit1, other.acceptance_bit1)
            && self.decoded_matches_opened == other.decoded_matches_opened
            && close_opt(self.bob_guess_rate, other.bob_guess_rate)
            && close(self.mean_concealment, other.mean_concealment)
            && self.invert_calls_before_open == other.invert_calls_before_open
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub schema: u32,
    pub config: ExperimentConfig,
    pub rows: Vec<TrialRow>,
    pub aggregate: Aggregate,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut buf = Vec::new();
        let mut w = JsonRowWriter::start(&mut buf, &self.config).expect("in-memory write");
        for r in &self.rows {
            w.row(r).expect("in-memory write");
        }
        w.finish(&self.aggregate).expect("in-memory write");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    /// Parses a JSON report and checks that its aggregate block matches the rows.
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let r: Report = serde_json::from_str(text).map_err(|e| HarnessError::Format(e.to_string()))?;
        if r.schema != REPORT_SCHEMA {
            return Err(HarnessError::Format(format!("unsupported report schema {}", r.schema)));
        }
        let recomputed = Aggregate::from_rows(&r.rows, r.aggregate.wall_time_s);
        if !recomputed.agrees_with(&r.aggregate) {
            return Err(HarnessError::Inconsistent(format!(
                "stored aggregate {:?} differs from the one recomputed from the rows {:?}",
                r.aggregate, recomputed
            )));
        }
        Ok(r)
    }

    pub fn load_json(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
        Self::from_json(&text)
    }
}

/// Rows of a CSV report (the CSV has no aggregate block).
pub fn read_csv_rows<R: std::io::Read>(input: R) -> Result<Vec<TrialRow>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers().map_err(|e| HarnessError::Format(e.to_string()))?.clone();
    if header.iter().collect::<Vec<_>>() != CSV_COLUMNS {
        return Err(HarnessError::Format(format!("unexpected CSV header {header:?}")));
    }
    rdr.deserialize::<CsvRow>()
        .map(|r| r.map(TrialRow::from).map_err(|e| HarnessError::Format(e.to_string())))
        .collect()
}

pub const CSV_COLUMNS: [&str; 5] = ["seed", "test_verdict", "opened_bit", "open_verdict", "decoded_bit"];

struct JsonRowWriter<W: Write> {
    out: W,
    first: bool,
}

impl<W: Write> JsonRowWriter<W> {
    fn start(mut out: W, cfg: &ExperimentConfig) -> std::io::Result<Self> {
        write!(out, "{{\"schema\":{REPORT_SCHEMA},\"config\":")?;
        serde_json::to_writer(&mut out, cfg)?;
        out.write_all(b",\"rows\":[")?;
        Ok(Self { out, first: true })
    }

    fn row(&mut self, r: &TrialRow) -> std::io::Result<()> {
        if !self.first {
            self.out.write_all(b",")?;
        }
        self.first = false;
        self.out.write_all(b"\n")?;
        serde_json::to_writer(&mut self.out, r)?;
        Ok(())
    }

    fn finish(mut self, agg: &Aggregate) -> std::io::Result<W> {
        self.out.write_all(b"\n],\"aggregate\":")?;
        serde_json::to_writer(&mut self.out, agg)?;
        self.out.write_all(b"}\n")?;
        self.out.flush()?;
        Ok(self.out)
    }
}

enum Sink {
    Json(JsonRowWriter<BufWriter<File>>),
    Csv(Box<csv::Writer<File>>),
}

/// Writes rows to the configured output as they are produced.
pub struct ReportWriter {
    path: PathBuf,
    sink: Sink,
}

impl ReportWriter {
    pub fn create(spec: &OutputSpec, cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let io = |e: std::io::Error| HarnessError::Io { path: spec.path.clone(), source: e };
        let file = File::create(&spec.path).map_err(io)?;
        let sink = match spec.format {
            ReportFormat::Json => Sink::Json(JsonRowWriter::start(BufWriter::new(file), cfg).map_err(io)?),
            ReportFormat::Csv => {
                let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
                w.write_record(CSV_COLUMNS).map_err(|e| csv_error(&spec.path, e))?;
                Sink::Csv(Box::new(w))
            }
        };
        Ok(Self { path: spec.path.clone(), sink })
    }

    pub fn row(&mut self, r: &TrialRow) -> Result<(), HarnessError> {
        match &mut self.sink {
            Sink::Json(w) => w.row(r).map_err(|e| HarnessError::Io { path: self.path.clone(), source: e }),
            Sink::Csv(w) => w.serialize(CsvRow::from(r)).map_err(|e| csv_error(&self.path, e)),
        }
    }

    pub fn finish(self, agg: &Aggregate) -> Result<(), HarnessError> {
        match self.sink {
            Sink::Json(w) => w.finish(agg).map(|_| ()).map_err(|e| HarnessError::Io { path: self.path, source: e }),
            Sink::Csv(mut w) => w.flush().map_err(|e| HarnessError::Io { path: self.path, source: e }),
        }
    }
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => HarnessError::Io { path: path.to_path_buf(), source },
        other => HarnessError::Format(format!("{other:?}")),
    }
}

/// Reads a report of either format, picking by file extension (`.csv` or JSON).
pub fn load_rows(path: &Path) -> Result<Vec<TrialRow>, HarnessError> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let f = File::open(path).map_err(|e| HarnessError::Io { path: path.to_path_buf(), source: e })?;
        read_csv_rows(BufReader::new(f))
    } else {
        Ok(Report::load_json(path)?.rows)
    }
}
