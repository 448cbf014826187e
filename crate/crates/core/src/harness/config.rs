use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::estimators::ScalarPrior;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    GaussianLocation,
    SparseThreshold,
    Amp,
    IndirectCoding,
    CouplingTails,
    WassersteinBound,
    RdCurves,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::GaussianLocation,
        ExperimentKind::SparseThreshold,
        ExperimentKind::Amp,
        ExperimentKind::IndirectCoding,
        ExperimentKind::CouplingTails,
        ExperimentKind::WassersteinBound,
        ExperimentKind::RdCurves,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::GaussianLocation => "gaussian-location",
            ExperimentKind::SparseThreshold => "sparse-threshold",
            ExperimentKind::Amp => "amp",
            ExperimentKind::IndirectCoding => "indirect-coding",
            ExperimentKind::CouplingTails => "coupling-tails",
            ExperimentKind::WassersteinBound => "wasserstein-bound",
            ExperimentKind::RdCurves => "rd-curves",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PriorSpec {
    Gaussian,
    Rademacher,
    BernoulliGaussian,
}

impl PriorSpec {
    pub fn name(&self) -> &'static str {
        match self {
            PriorSpec::Gaussian => "gaussian",
            PriorSpec::Rademacher => "rademacher",
            PriorSpec::BernoulliGaussian => "bernoulli-gaussian",
        }
    }

    /// Prior with second moment `kappa^2`; the Bernoulli-Gaussian slab has
    /// variance `kappa^2 / sparsity`.
    pub fn build(&self, kappa: f64, sparsity: f64) -> Result<ScalarPrior> {
        match self {
            PriorSpec::Gaussian => ScalarPrior::gaussian(kappa * kappa),
            PriorSpec::Rademacher => ScalarPrior::atoms(vec![-kappa, kappa], vec![0.5, 0.5]),
            PriorSpec::BernoulliGaussian => {
                if !(sparsity > 0.0) {
                    return Err(Error::Config("bernoulli-gaussian prior needs sparsity > 0".into()));
                }
                ScalarPrior::bernoulli_gaussian(sparsity, kappa * kappa / sparsity)
            }
        }
    }
}

impl FromStr for PriorSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" => Ok(PriorSpec::Gaussian),
            "rademacher" => Ok(PriorSpec::Rademacher),
            "bernoulli-gaussian" => Ok(PriorSpec::BernoulliGaussian),
            _ => Err(Error::Config(format!("unknown prior '{s}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub ns: Vec<usize>,
    /// Signal dimension for AMP; defaults to `n / delta`.
    pub d: Option<usize>,
    pub rates: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    pub eps: f64,
    pub kappa: f64,
    pub sparsity: f64,
    pub delta: f64,
    pub prior: PriorSpec,
    pub iterations: usize,
    /// Magnitude offsets: a fraction of `gamma` for coupling-tails, absolute
    /// for wasserstein-bound.
    pub mismatch: Vec<f64>,
    /// Channel noise levels for the fixed-rate sweep of indirect-coding and rd-curves.
    pub eps_grid: Vec<f64>,
    pub explicit_codebook: bool,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Defaults sized to the acceptance runs.
    pub fn defaults(experiment: ExperimentKind) -> Self {
        let base = Self {
            experiment,
            ns: vec![4096],
            d: None,
            rates: vec![1.0],
            trials: 200,
            seed: 20_240_601,
            eps: 0.5,
            kappa: 1.0,
            sparsity: 0.05,
            delta: 0.5,
            prior: PriorSpec::Gaussian,
            iterations: 10,
            mismatch: vec![],
            eps_grid: vec![],
            explicit_codebook: false,
            out: None,
        };
        match experiment {
            ExperimentKind::GaussianLocation => base,
            ExperimentKind::SparseThreshold => Self {
                ns: vec![10_000],
                trials: 20,
                eps: 0.3,
                ..base
            },
            ExperimentKind::Amp => Self {
                ns: vec![2000],
                trials: 20,
                eps: 0.2,
                sparsity: 0.1,
                kappa: 0.1f64.sqrt(),
                prior: PriorSpec::BernoulliGaussian,
                ..base
            },
            ExperimentKind::IndirectCoding => Self {
                ns: vec![8192],
                rates: vec![0.5, 1.0, 1.5, 2.0],
                trials: 100,
                eps: (1.0f64 / 3.0).sqrt(),
                prior: PriorSpec::Rademacher,
                eps_grid: vec![0.25, 0.5, 0.75, 1.0],
                ..base
            },
            ExperimentKind::CouplingTails => Self {
                ns: vec![128, 512, 2048],
                trials: 10_000,
                mismatch: vec![0.5],
                ..base
            },
            ExperimentKind::WassersteinBound => Self {
                ns: vec![256, 512, 1024, 2048],
                trials: 2000,
                mismatch: vec![0.0, 2.0, 4.0, 8.0],
                ..base
            },
            ExperimentKind::RdCurves => Self {
                ns: vec![],
                rates: (1..=10).map(|i| 0.25 * i as f64).collect(),
                trials: 0,
                eps: (1.0f64 / 3.0).sqrt(),
                prior: PriorSpec::Rademacher,
                eps_grid: vec![0.25, 0.5, 0.75, 1.0],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let needs_trials = self.experiment != ExperimentKind::RdCurves;
        if needs_trials {
            if self.ns.is_empty() || self.ns.iter().any(|&n| n < 2) {
                return Err(Error::Config("every n must be at least 2".into()));
            }
            if self.trials == 0 {
                return Err(Error::Config("trials must be positive".into()));
            }
        }
        if self.rates.is_empty() || self.rates.iter().any(|r| !(*r > 0.0) || !r.is_finite()) {
            return Err(Error::Config("rates must be positive".into()));
        }
        if self.rates.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("rate grid must be strictly increasing".into()));
        }
        for (name, v) in [("eps", self.eps), ("kappa", self.kappa)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a finite nonnegative number")));
            }
        }
        if !(0.0..=1.0).contains(&self.sparsity) {
            return Err(Error::Config("sparsity must lie in [0, 1]".into()));
        }
        if !(self.delta > 0.0) || !self.delta.is_finite() {
            return Err(Error::Config("delta must be positive".into()));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.eps_grid.iter().any(|e| !(*e >= 0.0)) {
            return Err(Error::Config("eps grid must be nonnegative".into()));
        }
        if self.mismatch.iter().any(|m| !m.is_finite()) {
            return Err(Error::Config("mismatch values must be finite".into()));
        }
        if self.d == Some(0) {
            return Err(Error::Config("d must be positive".into()));
        }
        if self.experiment == ExperimentKind::GaussianLocation && self.kappa == 0.0 {
            return Err(Error::Config("kappa must be positive".into()));
        }
        Ok(())
    }

    /// AMP signal dimension.
    pub fn signal_dim(&self, n: usize) -> usize {
        self.d.unwrap_or_else(|| (n as f64 / self.delta).round() as usize)
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |what: &str| Error::Config(format!("invalid value '{value}' for {what}"));
        match key {
            "experiment" => self.experiment = value.parse()?,
            "n" => self.ns = parse_list(value).map_err(|_| bad(key))?,
            "d" => self.d = Some(value.parse().map_err(|_| bad(key))?),
            "rates" => self.rates = parse_list(value).map_err(|_| bad(key))?,
            "trials" => self.trials = value.parse().map_err(|_| bad(key))?,
            "seed" => self.seed = value.parse().map_err(|_| bad(key))?,
            "eps" => self.eps = value.parse().map_err(|_| bad(key))?,
            "kappa" => self.kappa = value.parse().map_err(|_| bad(key))?,
            "sparsity" => self.sparsity = value.parse().map_err(|_| bad(key))?,
            "delta" => self.delta = value.parse().map_err(|_| bad(key))?,
            "prior" => self.prior = value.parse()?,
            "iterations" => self.iterations = value.parse().map_err(|_| bad(key))?,
            "mismatch" => self.mismatch = parse_list(value).map_err(|_| bad(key))?,
            "eps-grid" | "eps_grid" => self.eps_grid = parse_list(value).map_err(|_| bad(key))?,
            "explicit-codebook" | "explicit_codebook" => {
                self.explicit_codebook = value.parse().map_err(|_| bad(key))?
            }
            "out" => self.out = Some(PathBuf::from(value)),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Reads a flat `key = value` file. Blank lines and `#` comments are skipped.
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{}:{}: expected key = value", path.display(), lineno + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }
}

fn parse_list<T: FromStr>(s: &str) -> std::result::Result<Vec<T>, T::Err> {
    s.split(',')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(str::parse)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for k in ExperimentKind::ALL {
            assert_eq!(k.name().parse::<ExperimentKind>().unwrap(), k);
            ExperimentConfig::defaults(k).validate().unwrap();
        }
        assert!("nope".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn file_settings() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.cfg");
        std::fs::write(
            &path,
            "# test\nn = 64, 128\nrates=0.5,1\nprior = rademacher\n\ntrials = 7\n",
        )
        .unwrap();
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::GaussianLocation);
        cfg.apply_file(&path).unwrap();
        assert_eq!(cfg.ns, vec![64, 128]);
        assert_eq!(cfg.rates, vec![0.5, 1.0]);
        assert_eq!(cfg.prior, PriorSpec::Rademacher);
        assert_eq!(cfg.trials, 7);
        std::fs::write(&path, "bogus = 1\n").unwrap();
        assert!(cfg.apply_file(&path).is_err());
    }

    #[test]
    fn validation() {
        let mut cfg = ExperimentConfig::defaults(ExperimentKind::GaussianLocation);
        cfg.rates = vec![1.0, 0.5];
        assert!(cfg.validate().is_err());
        cfg.rates = vec![1.0];
        cfg.trials = 0;
        assert!(cfg.validate().is_err());
    }
}
