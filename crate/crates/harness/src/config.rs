//! Flat `key = value` configuration with `[experiment]` sections.
//!
//! Keys outside any section are defaults for every experiment; keys in the
//! section named after the experiment override them.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use ini::Ini;

use crate::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExperimentKind {
    FixedPoint,
    PhaseDiagram,
    Glauber,
    Rgd,
    Prgd,
    Amp,
    Compare,
    Magnetization,
    CurieWeiss,
    OverlapProbe,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 10] = [
        ExperimentKind::FixedPoint,
        ExperimentKind::PhaseDiagram,
        ExperimentKind::Glauber,
        ExperimentKind::Rgd,
        ExperimentKind::Prgd,
        ExperimentKind::Amp,
        ExperimentKind::Compare,
        ExperimentKind::Magnetization,
        ExperimentKind::CurieWeiss,
        ExperimentKind::OverlapProbe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::FixedPoint => "fixed-point",
            ExperimentKind::PhaseDiagram => "phase-diagram",
            ExperimentKind::Glauber => "glauber",
            ExperimentKind::Rgd => "rgd",
            ExperimentKind::Prgd => "prgd",
            ExperimentKind::Amp => "amp",
            ExperimentKind::Compare => "compare",
            ExperimentKind::Magnetization => "magnetization",
            ExperimentKind::CurieWeiss => "curie-weiss",
            ExperimentKind::OverlapProbe => "overlap-probe",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('_', "-");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key)
            .ok_or_else(|| HarnessError::Input(format!("unknown experiment '{s}'")))
    }
}

/// Starting configuration for chain experiments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StartKind {
    /// Uniform random spins.
    Random,
    /// The planted spike.
    Spike,
    /// Spins with prescribed correlation to the spike (see `warm_start`).
    Warm,
}

impl StartKind {
    fn name(self) -> &'static str {
        match self {
            StartKind::Random => "random",
            StartKind::Spike => "spike",
            StartKind::Warm => "warm",
        }
    }
}

impl FromStr for StartKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "random" => Ok(StartKind::Random),
            "spike" => Ok(StartKind::Spike),
            "warm" => Ok(StartKind::Warm),
            other => Err(HarnessError::Input(format!("unknown start '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AmpInitKind {
    Zero,
    /// Second-moment scaling with `amp_sigma0_sq`.
    Spectral,
    /// Scale fixed by the measured eigenvector overlap.
    SpectralMatch,
    /// Noisy copy of the spike with overlap `side_overlap`.
    SideInformation,
}

impl AmpInitKind {
    fn name(self) -> &'static str {
        match self {
            AmpInitKind::Zero => "zero",
            AmpInitKind::Spectral => "spectral",
            AmpInitKind::SpectralMatch => "spectral-match",
            AmpInitKind::SideInformation => "side-information",
        }
    }
}

impl FromStr for AmpInitKind {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "zero" => Ok(AmpInitKind::Zero),
            "spectral" => Ok(AmpInitKind::Spectral),
            "spectral-match" => Ok(AmpInitKind::SpectralMatch),
            "side-information" => Ok(AmpInitKind::SideInformation),
            other => Err(HarnessError::Input(format!("unknown amp_init '{other}'"))),
        }
    }
}

/// A strictly increasing, non-empty list of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid(Vec<f64>);

impl Grid {
    pub fn single(v: f64) -> Self {
        Grid(vec![v])
    }

    pub fn new(values: Vec<f64>) -> Result<Self, HarnessError> {
        if values.is_empty() {
            return Err(HarnessError::Input("grid must not be empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(HarnessError::Input("grid values must be finite".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Input(format!("grid must be strictly increasing: {values:?}")));
        }
        Ok(Grid(values))
    }

    /// `a:b:step` (inclusive of `b` up to rounding), a comma list, or one value.
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        let s = s.trim();
        let bad = |e: &dyn fmt::Display| HarnessError::Input(format!("bad grid '{s}': {e}"));
        if s.contains(':') {
            let parts: Vec<f64> = s
                .split(':')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(&e))?;
            let [a, b, step] = parts[..] else {
                return Err(bad(&"expected start:stop:step"));
            };
            if !(step > 0.0) || b < a {
                return Err(bad(&"need step > 0 and stop >= start"));
            }
            let count = ((b - a) / step + 1e-9).floor() as usize;
            // round to the step's decimal resolution so that 0.1:0.3:0.1 gives 0.1, 0.2, 0.3
            let digits = decimals(step).max(decimals(a));
            let scale = 10f64.powi(digits as i32);
            let values = (0..=count).map(|k| ((a + k as f64 * step) * scale).round() / scale).collect();
            Grid::new(values)
        } else {
            let values = s
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| bad(&e))?;
            Grid::new(values)
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.0[0]
    }

    pub fn is_single(&self) -> bool {
        self.0.len() == 1
    }
}

fn default_trials(kind: ExperimentKind) -> usize {
    match kind {
        ExperimentKind::Glauber | ExperimentKind::Compare => 20,
        ExperimentKind::Rgd | ExperimentKind::Prgd | ExperimentKind::Amp => 10,
        ExperimentKind::OverlapProbe => 8,
        _ => 1,
    }
}

fn decimals(x: f64) -> usize {
    let s = format!("{x}");
    s.split_once('.').map_or(0, |(_, frac)| frac.len()).min(12)
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| format!("{v}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Everything needed to run one experiment.
///
/// Optional fields fall back to experiment-specific defaults at run time and
/// are omitted from the echo when unset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub n: usize,
    pub beta: Grid,
    pub lambda: Grid,
    /// External field values for SK and Curie–Weiss experiments.
    pub field: Grid,
    pub trials: usize,
    pub steps: Option<u64>,
    pub inner_steps: Option<u64>,
    pub master_seed: u64,
    pub record_every: Option<u64>,
    pub output_dir: PathBuf,
    pub tolerance: Option<f64>,
    pub min_pass_fraction: f64,
    pub start: StartKind,
    pub warm_start: Option<f64>,
    pub amp_init: AmpInitKind,
    pub amp_sigma0_sq: f64,
    pub side_overlap: f64,
    pub onsager: bool,
    pub escape_window: u64,
    pub quad_nodes: usize,
    pub scan_points: usize,
    pub workers: Option<usize>,
    pub write_trajectories: bool,
    pub dump_instance: bool,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        let field = match experiment {
            ExperimentKind::Magnetization => Grid::parse("0.05:0.5:0.05").expect("static grid"),
            ExperimentKind::CurieWeiss => Grid::single(0.2),
            ExperimentKind::OverlapProbe => Grid::single(0.3),
            _ => Grid::single(0.0),
        };
        let (n, beta, lambda) = match experiment {
            ExperimentKind::PhaseDiagram => (1000, Grid::parse("0.1:3:0.1").expect("static grid"), 2.0),
            ExperimentKind::Amp => (2000, Grid::single(2.0), 2.0),
            ExperimentKind::Compare => (2000, Grid::single(1.5), 1.5),
            ExperimentKind::Magnetization => (3000, Grid::single(0.5), 0.0),
            ExperimentKind::CurieWeiss => (2000, Grid::single(0.5), 0.0),
            ExperimentKind::OverlapProbe => (2000, Grid::single(0.5), 0.0),
            _ => (1000, Grid::single(0.8), 2.0),
        };
        Self {
            experiment,
            n,
            beta,
            lambda: Grid::single(lambda),
            field,
            trials: default_trials(experiment),
            steps: None,
            inner_steps: None,
            master_seed: 1,
            record_every: None,
            output_dir: PathBuf::from("out"),
            tolerance: None,
            min_pass_fraction: 0.8,
            start: StartKind::Random,
            warm_start: None,
            amp_init: AmpInitKind::SpectralMatch,
            amp_sigma0_sq: swlab_core::amp::DEFAULT_SIGMA0_SQ,
            side_overlap: 0.3,
            onsager: true,
            escape_window: 100,
            quad_nodes: 201,
            scan_points: 2001,
            workers: None,
            write_trajectories: true,
            dump_instance: false,
        }
    }

    /// Loads `experiment` from INI text.
    pub fn from_ini_str(text: &str, experiment: ExperimentKind) -> Result<Self, HarnessError> {
        let ini = Ini::load_from_str(text).map_err(|e| HarnessError::Input(format!("config: {e}")))?;
        let mut cfg = Self::new(experiment);
        for name in ini.sections().flatten() {
            name.parse::<ExperimentKind>()
                .map_err(|_| HarnessError::Input(format!("unknown section [{name}]")))?;
        }
        if let Some(general) = ini.section(None::<String>) {
            for (k, v) in general.iter() {
                cfg.set(k, v)?;
            }
        }
        if let Some(section) = ini.section(Some(experiment.name())) {
            for (k, v) in section.iter() {
                cfg.set(k, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &std::path::Path, experiment: ExperimentKind) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_ini_str(&text, experiment)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        fn num<T: FromStr>(key: &str, v: &str) -> Result<T, HarnessError>
        where
            T::Err: fmt::Display,
        {
            v.trim()
                .parse::<T>()
                .map_err(|e| HarnessError::Input(format!("bad value for {key} = '{v}': {e}")))
        }
        fn flag(key: &str, v: &str) -> Result<bool, HarnessError> {
            match v.trim() {
                "true" | "yes" | "1" | "on" => Ok(true),
                "false" | "no" | "0" | "off" => Ok(false),
                _ => Err(HarnessError::Input(format!("bad flag for {key} = '{v}'"))),
            }
        }
        match key.trim() {
            "experiment" => {
                let kind: ExperimentKind = value.parse()?;
                if kind != self.experiment {
                    return Err(HarnessError::Input(format!(
                        "config names experiment {kind} but {} was requested",
                        self.experiment
                    )));
                }
            }
            "n" => self.n = num(key, value)?,
            "beta" => self.beta = Grid::parse(value)?,
            "lambda" => self.lambda = Grid::parse(value)?,
            "field" | "h" => self.field = Grid::parse(value)?,
            "trials" => self.trials = num(key, value)?,
            "steps" => self.steps = Some(num(key, value)?),
            "inner_steps" => self.inner_steps = Some(num(key, value)?),
            "master_seed" | "seed" => self.master_seed = num(key, value)?,
            "record_every" => self.record_every = Some(num(key, value)?),
            "output_dir" => self.output_dir = PathBuf::from(value.trim()),
            "tolerance" => self.tolerance = Some(num(key, value)?),
            "min_pass_fraction" => self.min_pass_fraction = num(key, value)?,
            "start" => self.start = value.parse()?,
            "warm_start" => self.warm_start = Some(num(key, value)?),
            "amp_init" => self.amp_init = value.parse()?,
            "amp_sigma0_sq" => self.amp_sigma0_sq = num(key, value)?,
            "side_overlap" => self.side_overlap = num(key, value)?,
            "onsager" => self.onsager = flag(key, value)?,
            "escape_window" => self.escape_window = num(key, value)?,
            "quad_nodes" => self.quad_nodes = num(key, value)?,
            "scan_points" => self.scan_points = num(key, value)?,
            "workers" => self.workers = Some(num(key, value)?),
            "write_trajectories" => self.write_trajectories = flag(key, value)?,
            "dump_instance" => self.dump_instance = flag(key, value)?,
            other => return Err(HarnessError::Input(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |m: String| Err(HarnessError::Input(m));
        if self.n == 0 {
            return fail("n must be >= 1".into());
        }
        if self.trials == 0 {
            return fail("trials must be >= 1".into());
        }
        if self.beta.values().iter().any(|&b| b < 0.0) || self.lambda.values().iter().any(|&l| l < 0.0) {
            return fail("beta and lambda must be >= 0".into());
        }
        if self.record_every == Some(0) {
            return fail("record_every must be >= 1".into());
        }
        if self.inner_steps == Some(0) {
            return fail("inner_steps must be >= 1".into());
        }
        if !(0.0..=1.0).contains(&self.min_pass_fraction) {
            return fail("min_pass_fraction must lie in [0, 1]".into());
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0 && t.is_finite()) {
                return fail(format!("tolerance must be positive, got {t}"));
            }
        }
        if let Some(w) = self.warm_start {
            if !(-1.0..=1.0).contains(&w) {
                return fail(format!("warm_start must lie in [-1, 1], got {w}"));
            }
        }
        if self.workers == Some(0) {
            return fail("workers must be >= 1".into());
        }
        Ok(())
    }

    /// The configuration as INI text with one section; parsing it back yields `self`.
    pub fn echo(&self) -> String {
        let mut lines = vec![format!("[{}]", self.experiment)];
        let mut kv = |k: &str, v: String| lines.push(format!("{k} = {v}"));
        kv("n", self.n.to_string());
        kv("beta", self.beta.to_string());
        kv("lambda", self.lambda.to_string());
        kv("field", self.field.to_string());
        kv("trials", self.trials.to_string());
        if let Some(s) = self.steps {
            kv("steps", s.to_string());
        }
        if let Some(s) = self.inner_steps {
            kv("inner_steps", s.to_string());
        }
        kv("master_seed", self.master_seed.to_string());
        if let Some(r) = self.record_every {
            kv("record_every", r.to_string());
        }
        kv("output_dir", self.output_dir.display().to_string());
        if let Some(t) = self.tolerance {
            kv("tolerance", t.to_string());
        }
        kv("min_pass_fraction", self.min_pass_fraction.to_string());
        kv("start", self.start.name().to_string());
        if let Some(w) = self.warm_start {
            kv("warm_start", w.to_string());
        }
        kv("amp_init", self.amp_init.name().to_string());
        kv("amp_sigma0_sq", self.amp_sigma0_sq.to_string());
        kv("side_overlap", self.side_overlap.to_string());
        kv("onsager", self.onsager.to_string());
        kv("escape_window", self.escape_window.to_string());
        kv("quad_nodes", self.quad_nodes.to_string());
        kv("scan_points", self.scan_points.to_string());
        if let Some(w) = self.workers {
            kv("workers", w.to_string());
        }
        kv("write_trajectories", self.write_trajectories.to_string());
        kv("dump_instance", self.dump_instance.to_string());
        lines.join("\n") + "\n"
    }

    pub fn params(&self) -> swlab_core::ModelParams {
        swlab_core::ModelParams {
            quad_nodes: self.quad_nodes,
            scan_points: self.scan_points,
            ..swlab_core::ModelParams::default()
        }
    }

    /// The single `β` of a chain experiment.
    pub fn single_beta(&self) -> Result<f64, HarnessError> {
        single(&self.beta, "beta", self.experiment)
    }

    pub fn single_lambda(&self) -> Result<f64, HarnessError> {
        single(&self.lambda, "lambda", self.experiment)
    }

    pub fn single_field(&self) -> Result<f64, HarnessError> {
        single(&self.field, "field", self.experiment)
    }
}

fn single(g: &Grid, name: &str, kind: ExperimentKind) -> Result<f64, HarnessError> {
    if g.is_single() {
        Ok(g.first())
    } else {
        Err(HarnessError::Input(format!("{kind} takes a single {name}, got a grid of {}", g.len())))
    }
}
