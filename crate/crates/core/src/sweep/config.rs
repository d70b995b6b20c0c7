//! Sweep configuration: a flat `key = value` text format plus named presets.
//!
//! ```text
//! # comments start with '#'
//! axis = sample_size            # or lambda
//! n_grid = log:100:10000:10     # or an explicit list: 100,300,1000
//! lambda_grid = log:1e-4:1e2:7
//! schedule = standard           # swapped | fixed:V | power:P
//! klr_lambda = 0.01
//! kernels = gaussian,laplace
//! models = krr,klr
//! seeds = 10
//! master_seed = 0
//! data = toy1d                  # toy2d | scores:PATH | miscalibrated:temperature:0.5
//! ```
//!
//! Remaining keys: `score_space`, `test_size`, `bandwidth` (`median` or a
//! value), `exact_threshold`, `rff_features`, `klr_max_iter`, `klr_step`,
//! `klr_tol`, `klr_estimate_err`, `bins`, `workers`.

use std::fmt;
use std::path::{Path, PathBuf};

use crate::data::Distortion;
use crate::error::{Error, Result};
use crate::kernels::KernelFamily;
use crate::metrics::Space;
use crate::models::{KlrOptions, LossFamily};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    SampleSize,
    Lambda,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::SampleSize => "sample_size",
            Axis::Lambda => "lambda",
        })
    }
}

/// How λ follows the sample size on the sample-size axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    Fixed(f64),
    /// `λ = n^(−p)`.
    PowerLaw(f64),
}

impl Schedule {
    pub fn lambda(self, n: usize) -> f64 {
        match self {
            Schedule::Fixed(v) => v,
            Schedule::PowerLaw(p) => (n as f64).powf(-p),
        }
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::Fixed(v) => write!(f, "fixed:{v}"),
            Schedule::PowerLaw(p) => write!(f, "power:{p}"),
        }
    }
}

/// Per-kernel λ schedules for kernel ridge regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrrSchedule {
    pub gaussian: Schedule,
    pub laplace: Schedule,
}

impl KrrSchedule {
    /// `λ = n^(−1/2)` for Gaussian, `n^(−1/3)` for Laplace.
    pub const STANDARD: KrrSchedule = KrrSchedule {
        gaussian: Schedule::PowerLaw(0.5),
        laplace: Schedule::PowerLaw(1.0 / 3.0),
    };
    /// The swapped pairing: `n^(−1/3)` for Gaussian, `n^(−1/2)` for Laplace.
    pub const SWAPPED: KrrSchedule = KrrSchedule {
        gaussian: Schedule::PowerLaw(1.0 / 3.0),
        laplace: Schedule::PowerLaw(0.5),
    };

    pub fn for_family(&self, family: KernelFamily) -> Schedule {
        match family {
            KernelFamily::Gaussian => self.gaussian,
            KernelFamily::Laplace => self.laplace,
        }
    }

    pub fn parse(v: &str) -> Option<KrrSchedule> {
        let both = |s| KrrSchedule {
            gaussian: s,
            laplace: s,
        };
        match v.split_once(':') {
            None if v == "standard" => Some(KrrSchedule::STANDARD),
            None if v == "swapped" => Some(KrrSchedule::SWAPPED),
            Some(("fixed", x)) => x
                .parse()
                .ok()
                .filter(|x: &f64| *x > 0.0)
                .map(|x| both(Schedule::Fixed(x))),
            Some(("power", x)) => x
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .map(|x| both(Schedule::PowerLaw(x))),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Toy1D,
    Toy2D,
    /// A score CSV; `space` overrides the file's own declaration.
    ScoreFile {
        path: PathBuf,
        space: Option<Space>,
    },
    Miscalibrated(Distortion),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandwidthRule {
    /// Median pairwise distance of each cell's training inputs.
    Median,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    pub axis: Axis,
    pub n_grid: Vec<usize>,
    /// Used on the λ axis only.
    pub lambda_grid: Vec<f64>,
    /// KRR schedule on the sample-size axis.
    pub krr_schedule: KrrSchedule,
    /// KLR λ on the sample-size axis.
    pub klr_lambda: f64,
    pub kernels: Vec<KernelFamily>,
    pub models: Vec<LossFamily>,
    pub seeds: usize,
    pub master_seed: u64,
    pub data: DataSource,
    pub test_size: usize,
    pub bandwidth: BandwidthRule,
    /// Largest training size fitted with the exact kernel; random features beyond.
    pub exact_threshold: usize,
    pub rff_features: usize,
    pub klr: KlrOptions,
    pub bins: Option<usize>,
    /// Worker threads for cells; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            axis: Axis::SampleSize,
            n_grid: log_grid(100.0, 10_000.0, 10)
                .into_iter()
                .map(|v| v.round() as usize)
                .collect(),
            lambda_grid: log_grid(1e-4, 1e2, 7),
            krr_schedule: KrrSchedule::STANDARD,
            klr_lambda: 0.01,
            kernels: vec![KernelFamily::Gaussian, KernelFamily::Laplace],
            models: vec![LossFamily::Squared, LossFamily::Logistic],
            seeds: 10,
            master_seed: 0,
            data: DataSource::Toy1D,
            test_size: 2000,
            bandwidth: BandwidthRule::Median,
            exact_threshold: 4000,
            rff_features: 1000,
            klr: KlrOptions::default(),
            bins: None,
            workers: None,
        }
    }
}

/// `k` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, k: usize) -> Vec<f64> {
    if k == 1 {
        return vec![a];
    }
    let (la, lb) = (a.log10(), b.log10());
    (0..k)
        .map(|i| {
            if i == 0 {
                a
            } else if i == k - 1 {
                b
            } else {
                10f64.powf(la + (lb - la) * i as f64 / (k - 1) as f64)
            }
        })
        .collect()
}

fn key_err(key: &str, msg: impl fmt::Display) -> Error {
    Error::input(format!("config key `{key}`: {msg}"))
}

fn parse_reals(key: &str, v: &str) -> Result<Vec<f64>> {
    let out = if let Some(spec) = v.strip_prefix("log:") {
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, k] = parts.as_slice() else {
            return Err(key_err(key, "expected log:START:END:COUNT"));
        };
        let a: f64 = a
            .parse()
            .map_err(|_| key_err(key, format!("bad number `{a}`")))?;
        let b: f64 = b
            .parse()
            .map_err(|_| key_err(key, format!("bad number `{b}`")))?;
        let k: usize = k
            .parse()
            .map_err(|_| key_err(key, format!("bad count `{k}`")))?;
        if !(a > 0.0 && b >= a && k >= 1) {
            return Err(key_err(
                key,
                "log grid needs 0 < START <= END and COUNT >= 1",
            ));
        }
        log_grid(a, b, k)
    } else {
        v.split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|_| key_err(key, format!("bad number `{s}`")))
            })
            .collect::<Result<Vec<f64>>>()?
    };
    if out.is_empty() || out.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
        return Err(key_err(key, "values must be positive"));
    }
    if out.windows(2).any(|w| w[0] >= w[1]) {
        return Err(key_err(key, "grid must be strictly increasing"));
    }
    Ok(out)
}

fn parse_sizes(key: &str, v: &str) -> Result<Vec<usize>> {
    let mut out: Vec<usize> = parse_reals(key, v)?
        .into_iter()
        .map(|x| x.round() as usize)
        .collect();
    out.dedup();
    if out[0] == 0 {
        return Err(key_err(key, "sizes must be at least 1"));
    }
    Ok(out)
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| key_err(key, format!("bad value `{v}`")))
}

fn parse_list<T>(key: &str, v: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr<Err = Error> + PartialEq,
{
    let mut out = Vec::new();
    for item in v.split(',') {
        let t: T = item.parse().map_err(|e: Error| key_err(key, e))?;
        if !out.contains(&t) {
            out.push(t);
        }
    }
    Ok(out)
}

impl SweepConfig {
    /// Parses a config file's text on top of the defaults.
    pub fn parse(text: &str) -> Result<SweepConfig> {
        let mut cfg = SweepConfig::default();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::input(format!("config line `{line}` is not key=value")))?;
            cfg.set(k.trim(), v.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<SweepConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        SweepConfig::parse(&text)
    }

    /// Applies one `key = value` setting; errors name the key.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        match key {
            "axis" => {
                self.axis = match v {
                    "sample_size" | "n" => Axis::SampleSize,
                    "lambda" => Axis::Lambda,
                    _ => return Err(key_err(key, format!("unknown axis `{v}`"))),
                }
            }
            "n_grid" => self.n_grid = parse_sizes(key, v)?,
            "lambda_grid" => self.lambda_grid = parse_reals(key, v)?,
            "schedule" => {
                self.krr_schedule = KrrSchedule::parse(v)
                    .ok_or_else(|| key_err(key, format!("unknown schedule `{v}`")))?
            }
            "klr_lambda" => self.klr_lambda = parse_num(key, v)?,
            "kernels" => self.kernels = parse_list(key, v)?,
            "models" => self.models = parse_list(key, v)?,
            "seeds" => self.seeds = parse_num(key, v)?,
            "master_seed" => self.master_seed = parse_num(key, v)?,
            "data" => {
                self.data = match v.split_once(':') {
                    None if v == "toy1d" => DataSource::Toy1D,
                    None if v == "toy2d" => DataSource::Toy2D,
                    Some(("scores", p)) => DataSource::ScoreFile {
                        path: PathBuf::from(p),
                        space: None,
                    },
                    Some(("miscalibrated", d)) => {
                        DataSource::Miscalibrated(d.parse().map_err(|e: Error| key_err(key, e))?)
                    }
                    _ => return Err(key_err(key, format!("unknown data source `{v}`"))),
                }
            }
            "score_space" => {
                let space: Space = v.parse().map_err(|e: Error| key_err(key, e))?;
                match &mut self.data {
                    DataSource::ScoreFile { space: s, .. } => *s = Some(space),
                    _ => return Err(key_err(key, "only valid after data = scores:PATH")),
                }
            }
            "test_size" => self.test_size = parse_num(key, v)?,
            "bandwidth" => {
                self.bandwidth = if v == "median" {
                    BandwidthRule::Median
                } else {
                    BandwidthRule::Fixed(parse_num(key, v)?)
                }
            }
            "exact_threshold" => self.exact_threshold = parse_num(key, v)?,
            "rff_features" => self.rff_features = parse_num(key, v)?,
            "klr_max_iter" => self.klr.max_iter = parse_num(key, v)?,
            "klr_step" => self.klr.step = parse_num(key, v)?,
            "klr_tol" => self.klr.tolerance = parse_num(key, v)?,
            "klr_estimate_err" => self.klr.estimate_err = parse_num(key, v)?,
            "bins" => self.bins = Some(parse_num(key, v)?),
            "workers" => self.workers = Some(parse_num(key, v)?),
            _ => return Err(key_err(key, "unknown key")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let check =
            |ok: bool, key: &str, msg: &str| if ok { Ok(()) } else { Err(key_err(key, msg)) };
        check(
            !self.n_grid.is_empty() && self.n_grid[0] >= 1,
            "n_grid",
            "must be nonempty",
        )?;
        check(
            self.n_grid.windows(2).all(|w| w[0] < w[1]),
            "n_grid",
            "must be strictly increasing",
        )?;
        check(
            !self.lambda_grid.is_empty(),
            "lambda_grid",
            "must be nonempty",
        )?;
        check(
            self.lambda_grid.windows(2).all(|w| w[0] < w[1])
                && self.lambda_grid.iter().all(|l| *l > 0.0),
            "lambda_grid",
            "must be positive and strictly increasing",
        )?;
        check(
            self.klr_lambda > 0.0 && self.klr_lambda.is_finite(),
            "klr_lambda",
            "must be positive",
        )?;
        check(!self.kernels.is_empty(), "kernels", "must be nonempty")?;
        check(!self.models.is_empty(), "models", "must be nonempty")?;
        check(self.seeds >= 1, "seeds", "must be at least 1")?;
        check(self.test_size >= 1, "test_size", "must be at least 1")?;
        check(self.rff_features >= 1, "rff_features", "must be at least 1")?;
        check(self.klr.max_iter >= 1, "klr_max_iter", "must be at least 1")?;
        check(
            self.klr.step > 0.0 && self.klr.step.is_finite(),
            "klr_step",
            "must be positive",
        )?;
        check(self.klr.tolerance >= 0.0, "klr_tol", "must be nonnegative")?;
        check(self.bins != Some(0), "bins", "must be positive")?;
        if let BandwidthRule::Fixed(s) = self.bandwidth {
            check(s > 0.0 && s.is_finite(), "bandwidth", "must be positive")?;
        }
        for s in [self.krr_schedule.gaussian, self.krr_schedule.laplace] {
            if let Schedule::Fixed(v) = s {
                check(v > 0.0, "schedule", "fixed value must be positive")?;
            }
        }
        Ok(())
    }

    /// λ values for one (n, kernel, model) series.
    pub fn lambdas(&self, n: usize, family: KernelFamily, model: LossFamily) -> Vec<f64> {
        match self.axis {
            Axis::Lambda => self.lambda_grid.clone(),
            Axis::SampleSize => vec![match model {
                LossFamily::Squared => self.krr_schedule.for_family(family).lambda(n),
                LossFamily::Logistic => self.klr_lambda,
            }],
        }
    }

    /// Serializes back to the text format; `parse(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let reals = |v: &[f64]| join(v.iter().map(|x| format!("{x:e}")).collect());
        let mut lines = vec![
            format!("axis = {}", self.axis),
            format!(
                "n_grid = {}",
                join(self.n_grid.iter().map(usize::to_string).collect())
            ),
            format!("lambda_grid = {}", reals(&self.lambda_grid)),
        ];
        let sched = if self.krr_schedule == KrrSchedule::STANDARD {
            "standard".to_string()
        } else if self.krr_schedule == KrrSchedule::SWAPPED {
            "swapped".to_string()
        } else {
            self.krr_schedule.gaussian.to_string()
        };
        lines.push(format!("schedule = {sched}"));
        lines.push(format!("klr_lambda = {:e}", self.klr_lambda));
        lines.push(format!(
            "kernels = {}",
            join(self.kernels.iter().map(|k| k.name().to_string()).collect())
        ));
        lines.push(format!(
            "models = {}",
            join(
                self.models
                    .iter()
                    .map(|m| m.model_name().to_string())
                    .collect()
            )
        ));
        lines.push(format!("seeds = {}", self.seeds));
        lines.push(format!("master_seed = {}", self.master_seed));
        match &self.data {
            DataSource::Toy1D => lines.push("data = toy1d".into()),
            DataSource::Toy2D => lines.push("data = toy2d".into()),
            DataSource::ScoreFile { path, space } => {
                lines.push(format!("data = scores:{}", path.display()));
                if let Some(s) = space {
                    lines.push(format!("score_space = {s}"));
                }
            }
            DataSource::Miscalibrated(d) => lines.push(format!("data = miscalibrated:{d}")),
        }
        lines.push(format!("test_size = {}", self.test_size));
        lines.push(match self.bandwidth {
            BandwidthRule::Median => "bandwidth = median".into(),
            BandwidthRule::Fixed(s) => format!("bandwidth = {s:e}"),
        });
        lines.push(format!("exact_threshold = {}", self.exact_threshold));
        lines.push(format!("rff_features = {}", self.rff_features));
        lines.push(format!("klr_max_iter = {}", self.klr.max_iter));
        lines.push(format!("klr_step = {:e}", self.klr.step));
        lines.push(format!("klr_tol = {:e}", self.klr.tolerance));
        lines.push(format!("klr_estimate_err = {}", self.klr.estimate_err));
        if let Some(b) = self.bins {
            lines.push(format!("bins = {b}"));
        }
        if let Some(w) = self.workers {
            lines.push(format!("workers = {w}"));
        }
        lines.join("\n") + "\n"
    }
}

/// Named protocol bundles. Each preset expands to one or more sweeps.
pub fn preset(name: &str) -> Result<Vec<(String, SweepConfig)>> {
    let base = SweepConfig::default();
    match name {
        "fig1" => Ok(vec![
            ("fig1_n".into(), base.clone()),
            (
                "fig1_lambda".into(),
                SweepConfig {
                    axis: Axis::Lambda,
                    n_grid: vec![10_000],
                    lambda_grid: log_grid(1e-4, 1e2, 7),
                    ..base
                },
            ),
        ]),
        "fig2" => {
            let recal = SweepConfig {
                data: DataSource::Miscalibrated(Distortion::Temperature(0.5)),
                n_grid: vec![250, 500, 1000, 2000, 4000],
                ..base
            };
            Ok(vec![
                ("fig2_n".into(), recal.clone()),
                (
                    "fig2_lambda".into(),
                    SweepConfig {
                        axis: Axis::Lambda,
                        n_grid: vec![1000],
                        ..recal
                    },
                ),
            ])
        }
        _ => Err(Error::input(format!(
            "unknown preset `{name}` (expected fig1 or fig2)"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_protocol() {
        let c = SweepConfig::default();
        assert_eq!(c.n_grid.len(), 10);
        assert_eq!((c.n_grid[0], c.n_grid[9]), (100, 10_000));
        assert_eq!(c.lambda_grid[0], 1e-4);
        assert_eq!(*c.lambda_grid.last().unwrap(), 1e2);
        assert_eq!(c.seeds, 10);
        assert_eq!(
            c.lambdas(100, KernelFamily::Gaussian, LossFamily::Squared),
            vec![0.1]
        );
        assert!(
            (c.lambdas(1000, KernelFamily::Laplace, LossFamily::Squared)[0] - 0.1).abs() < 1e-12
        );
        assert_eq!(
            c.lambdas(1000, KernelFamily::Laplace, LossFamily::Logistic),
            vec![0.01]
        );
    }

    #[test]
    fn parse_and_round_trip() {
        let text = "axis = lambda\nn_grid = 500 # one size\nlambda_grid = log:1e-3:1e1:5\nkernels = laplace\nmodels = krr\nseeds = 2\ndata = miscalibrated:temperature:0.5\n";
        let c = SweepConfig::parse(text).unwrap();
        assert_eq!(c.axis, Axis::Lambda);
        assert_eq!(c.n_grid, vec![500]);
        assert_eq!(c.lambda_grid.len(), 5);
        assert_eq!(c.kernels, vec![KernelFamily::Laplace]);
        assert_eq!(
            c.data,
            DataSource::Miscalibrated(Distortion::Temperature(0.5))
        );
        assert_eq!(SweepConfig::parse(&c.to_text()).unwrap(), c);
        let d = SweepConfig::default();
        assert_eq!(SweepConfig::parse(&d.to_text()).unwrap(), d);
    }

    #[test]
    fn errors_name_the_key() {
        for (text, key) in [
            ("bogus = 1", "bogus"),
            ("seeds = x", "seeds"),
            ("seeds = 0", "seeds"),
            ("n_grid = 300,100", "n_grid"),
            ("kernels = cosine", "kernels"),
            ("schedule = sometimes", "schedule"),
            ("score_space = logit", "score_space"),
        ] {
            let e = SweepConfig::parse(text).unwrap_err().to_string();
            assert!(e.contains(&format!("`{key}`")), "{e}");
        }
        assert!(SweepConfig::parse("no equals sign").is_err());
    }

    #[test]
    fn schedules() {
        assert_eq!(
            KrrSchedule::parse("fixed:0.5").unwrap().laplace,
            Schedule::Fixed(0.5)
        );
        assert_eq!(
            KrrSchedule::SWAPPED.for_family(KernelFamily::Laplace),
            Schedule::PowerLaw(0.5)
        );
        assert!(KrrSchedule::parse("fixed:-1").is_none());
    }

    #[test]
    fn presets_expand() {
        assert_eq!(preset("fig1").unwrap().len(), 2);
        let f2 = preset("fig2").unwrap();
        assert!(matches!(f2[0].1.data, DataSource::Miscalibrated(_)));
        assert!(preset("fig9").is_err());
    }
}
