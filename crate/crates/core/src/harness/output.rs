use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::stats::mean_stderr;
use crate::Result;

/// Coordinates of one experiment grid point. Unused fields serialize as empty cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Point {
    pub n: Option<usize>,
    pub d: Option<usize>,
    pub rate: Option<f64>,
    pub eps: Option<f64>,
    pub kappa: Option<f64>,
    pub sparsity: Option<f64>,
    pub delta: Option<f64>,
    /// AMP iteration.
    pub step: Option<usize>,
}

impl Point {
    pub fn with_step(&self, step: usize) -> Self {
        Self {
            step: Some(step),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(&self) -> bool {
        *self == Verdict::Pass
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
        })
    }
}

/// Per-trial squared errors of every branch at one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialResult {
    pub point: Point,
    /// `(branch, errors indexed by trial)`.
    pub branches: Vec<(String, Vec<f64>)>,
}

impl TrialResult {
    pub fn branch(&self, name: &str) -> Option<&[f64]> {
        self.branches.iter().find(|(b, _)| b == name).map(|(_, v)| v.as_slice())
    }

    /// `(mean, sample stddev / sqrt(trials))` for `name`.
    pub fn summary(&self, name: &str) -> Option<(f64, f64)> {
        self.branch(name).map(mean_stderr)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub point: Point,
    pub branch: String,
    pub metric: String,
    pub trials: usize,
    pub mean: f64,
    pub stderr: Option<f64>,
    pub analytic_ref: Option<f64>,
    pub verdict: Option<Verdict>,
}

impl SummaryRow {
    pub fn value(point: &Point, branch: &str, metric: &str, value: f64) -> Self {
        Self {
            point: point.clone(),
            branch: branch.to_string(),
            metric: metric.to_string(),
            trials: 0,
            mean: value,
            stderr: None,
            analytic_ref: None,
            verdict: None,
        }
    }

    pub fn sample(point: &Point, branch: &str, metric: &str, values: &[f64]) -> Self {
        let (mean, se) = mean_stderr(values);
        Self {
            trials: values.len(),
            stderr: Some(se),
            ..Self::value(point, branch, metric, mean)
        }
    }

    pub fn reference(mut self, r: f64) -> Self {
        self.analytic_ref = Some(r);
        self
    }

    pub fn verdict(mut self, ok: bool) -> Self {
        self.verdict = Some(Verdict::from_bool(ok));
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentOutput {
    pub experiment: String,
    pub results: Vec<TrialResult>,
    pub summary: Vec<SummaryRow>,
}

impl ExperimentOutput {
    /// Rows carrying a verdict.
    pub fn verdicts(&self) -> impl Iterator<Item = &SummaryRow> {
        self.summary.iter().filter(|r| r.verdict.is_some())
    }

    pub fn all_passed(&self) -> bool {
        self.verdicts().all(|r| r.verdict == Some(Verdict::Pass))
    }

    pub fn find(&self, branch: &str, metric: &str) -> impl Iterator<Item = &SummaryRow> {
        let (b, m) = (branch.to_string(), metric.to_string());
        self.summary.iter().filter(move |r| r.branch == b && r.metric == m)
    }

    pub fn write_trials<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(TRIAL_HEADER)?;
        for res in &self.results {
            for (branch, values) in &res.branches {
                for (trial, v) in values.iter().enumerate() {
                    let mut rec = self.point_cells(&res.point);
                    rec.push(branch.clone());
                    rec.push(opt(res.point.step));
                    rec.push(trial.to_string());
                    rec.push(v.to_string());
                    out.write_record(&rec)?;
                }
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_summary<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(SUMMARY_HEADER)?;
        for row in &self.summary {
            let mut rec = self.point_cells(&row.point);
            rec.push(row.branch.clone());
            rec.push(opt(row.point.step));
            rec.push(row.metric.clone());
            rec.push(row.trials.to_string());
            rec.push(row.mean.to_string());
            rec.push(opt(row.stderr));
            rec.push(opt(row.analytic_ref));
            rec.push(opt(row.verdict));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }

    /// Writes trials to `path` and the summary next to it.
    pub fn write_files(&self, path: &Path) -> Result<PathBuf> {
        self.write_trials(std::io::BufWriter::new(std::fs::File::create(path)?))?;
        let summary = summary_path(path);
        self.write_summary(std::io::BufWriter::new(std::fs::File::create(&summary)?))?;
        Ok(summary)
    }

    fn point_cells(&self, p: &Point) -> Vec<String> {
        vec![
            self.experiment.clone(),
            opt(p.n),
            opt(p.d),
            opt(p.rate),
            opt(p.eps),
            opt(p.kappa),
            opt(p.sparsity),
            opt(p.delta),
        ]
    }
}

pub const TRIAL_HEADER: [&str; 12] = [
    "experiment",
    "n",
    "d",
    "rate",
    "eps",
    "kappa",
    "sparsity",
    "delta",
    "branch",
    "step",
    "trial",
    "sq_error_per_coord",
];

pub const SUMMARY_HEADER: [&str; 16] = [
    "experiment",
    "n",
    "d",
    "rate",
    "eps",
    "kappa",
    "sparsity",
    "delta",
    "branch",
    "step",
    "metric",
    "trials",
    "mean",
    "stderr",
    "analytic_ref",
    "verdict",
];

/// `out.csv` -> `out.summary.csv`.
pub fn summary_path(path: &Path) -> PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    path.with_file_name(format!("{stem}.summary.csv"))
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}
