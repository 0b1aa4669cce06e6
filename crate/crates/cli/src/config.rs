//! Experiment configuration: flat `key = value` lines grouped under
//! `[section]` headers. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use accelopt::problems::ReferenceConfig;
use anyhow::{anyhow, bail, Context, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Logistic,
    Qp,
    CsTv,
}

impl FromStr for ExperimentKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(Self::Logistic),
            "qp" => Ok(Self::Qp),
            "cs_tv" | "cs" => Ok(Self::CsTv),
            other => bail!("unknown experiment {other:?} (expected logistic, qp or cs_tv)"),
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Logistic => "logistic",
            Self::Qp => "qp",
            Self::CsTv => "cs_tv",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Profile {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverName {
    Gpgm,
    Apgm,
    Glalm,
    Alalm,
    Gladmm,
    Aladmm,
    Ladmm,
}

impl SolverName {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Gpgm => "gpgm",
            Self::Apgm => "apgm",
            Self::Glalm => "glalm",
            Self::Alalm => "alalm",
            Self::Gladmm => "gladmm",
            Self::Aladmm => "aladmm",
            Self::Ladmm => "ladmm",
        }
    }

    pub fn experiment(&self) -> ExperimentKind {
        match self {
            Self::Gpgm | Self::Apgm => ExperimentKind::Logistic,
            Self::Glalm | Self::Alalm => ExperimentKind::Qp,
            Self::Gladmm | Self::Aladmm | Self::Ladmm => ExperimentKind::CsTv,
        }
    }

    fn allowed_keys(&self) -> &'static [&'static str] {
        match self {
            Self::Gpgm => &["alpha", "gamma"],
            Self::Apgm => &[],
            Self::Glalm => &["alpha", "kappa", "gamma", "eta"],
            Self::Alalm => &["gamma", "eta"],
            Self::Gladmm => &["alpha", "beta", "kappa", "gamma", "xi", "n"],
            Self::Aladmm => &["gamma", "xi", "n"],
            Self::Ladmm => &["gamma", "n"],
        }
    }
}

impl FromStr for SolverName {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "gpgm" => Self::Gpgm,
            "apgm" => Self::Apgm,
            "glalm" => Self::Glalm,
            "alalm" => Self::Alalm,
            "gladmm" => Self::Gladmm,
            "aladmm" => Self::Aladmm,
            "ladmm" => Self::Ladmm,
            other => bail!("unknown solver {other:?}"),
        })
    }
}

/// A solver with its explicit parameter overrides, written
/// `name:key=value:key=value`.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverSpec {
    pub name: SolverName,
    pub params: BTreeMap<String, f64>,
}

fn canonical_key(k: &str) -> String {
    match k {
        "α" => "alpha",
        "β" => "beta",
        "κ" => "kappa",
        "γ" => "gamma",
        "η" => "eta",
        "ξ" => "xi",
        "N" => "n",
        other => other,
    }
    .to_string()
}

impl SolverSpec {
    pub fn get(&self, key: &str) -> Option<f64> {
        self.params.get(key).copied()
    }

    fn validate(&self) -> Result<()> {
        let name = self.name.as_str();
        if let Some(a) = self.get("alpha") {
            if !(a > 0.0 && a <= 1.0) {
                bail!("{name}: alpha must lie in (0, 1], got {a}");
            }
        }
        if let Some(b) = self.get("beta") {
            if !(b > 0.0 && b <= 1.0) {
                bail!("{name}: beta must lie in (0, 1], got {b}");
            }
        }
        for key in ["gamma", "eta"] {
            if let Some(v) = self.get(key) {
                if !(v > 0.0) {
                    bail!("{name}: {key} must be positive, got {v}");
                }
            }
        }
        if let Some(n) = self.get("n") {
            if !(n >= 2.0 && n.fract() == 0.0) {
                bail!("{name}: horizon N must be an integer at least 2, got {n}");
            }
        }
        match self.name {
            SolverName::Glalm => {
                if let Some(k) = self.get("kappa") {
                    if !(1.0..2.0).contains(&k) {
                        bail!("glalm: kappa must lie in [1, 2), got {k}");
                    }
                }
            }
            SolverName::Gladmm => {
                if let Some(k) = self.get("kappa") {
                    if !(k > 1.0) {
                        bail!("gladmm: kappa must exceed 1, got {k}");
                    }
                }
            }
            _ => {}
        }
        if let Some(xi) = self.get("xi") {
            if !(1.5..2.0).contains(&xi) {
                bail!("{name}: xi must lie in [1.5, 2), got {xi}");
            }
        }
        Ok(())
    }
}

impl FromStr for SolverSpec {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = s.split(':').map(str::trim);
        let name: SolverName = parts.next().unwrap_or_default().parse()?;
        let mut params = BTreeMap::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| anyhow!("solver {}: expected key=value, got {p:?}", name.as_str()))?;
            let key = canonical_key(k.trim());
            if !name.allowed_keys().contains(&key.as_str()) {
                bail!("solver {}: unknown parameter {key:?}", name.as_str());
            }
            let value: f64 = v
                .trim()
                .parse()
                .with_context(|| format!("solver {}: parameter {key}", name.as_str()))?;
            params.insert(key, value);
        }
        let spec = Self { name, params };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InstanceParams {
    /// Samples (logistic) or constraints (qp).
    pub m: usize,
    /// Features (logistic) or variables (qp).
    pub n: usize,
    pub s: usize,
    pub size: usize,
    pub ratio: f64,
    /// Non-positive selects the default for the experiment.
    pub lambda: f64,
    pub sigma2: f64,
}

impl InstanceParams {
    pub fn defaults(kind: ExperimentKind, profile: Profile) -> Self {
        let (m, n, s, size) = match (kind, profile) {
            (ExperimentKind::Logistic, Profile::Desk) => (100, 1000, 10, 0),
            (ExperimentKind::Logistic, Profile::Paper) => (300, 3000, 30, 0),
            (ExperimentKind::Qp, Profile::Desk) => (20, 200, 0, 0),
            (ExperimentKind::Qp, Profile::Paper) => (80, 1000, 0, 0),
            (ExperimentKind::CsTv, Profile::Desk) => (0, 0, 0, 16),
            (ExperimentKind::CsTv, Profile::Paper) => (0, 0, 0, 64),
        };
        Self {
            m,
            n,
            s,
            size,
            ratio: 0.3,
            lambda: if kind == ExperimentKind::CsTv { 1e-3 } else { 0.0 },
            sigma2: 1e-3,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundsConfig {
    pub alphas: Vec<f64>,
    pub kappas: Vec<f64>,
    pub iters: usize,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            alphas: vec![0.2, 0.4, 0.6, 0.8, 1.0],
            kappas: vec![1.0, 1.5],
            iters: 200,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub profile: Profile,
    pub seed: u64,
    pub max_iters: usize,
    /// Two-block horizon `N`.
    pub horizon: usize,
    /// Dual-gap tolerance for the logistic runs; `None` runs `max_iters`.
    pub tol: Option<f64>,
    pub instance: InstanceParams,
    pub solvers: Vec<SolverSpec>,
    pub reference: ReferenceConfig,
    pub bounds: BoundsConfig,
    pub out_dir: PathBuf,
    pub timing: bool,
    pub save_instance: bool,
}

/// Raw sections before interpretation.
pub type Sections = BTreeMap<String, BTreeMap<String, String>>;

pub fn parse_sections(text: &str) -> Result<Sections> {
    let mut out = Sections::new();
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            out.entry(current.clone()).or_default();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value or [section]", i + 1))?;
        if current.is_empty() {
            bail!("line {}: key outside any section", i + 1);
        }
        out.entry(current.clone())
            .or_default()
            .insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

const SECTIONS: &[(&str, &[&str])] = &[
    ("experiment", &["kind", "seed", "max_iters", "horizon", "tol", "profile"]),
    (
        "instance",
        &["m", "n", "s", "samples", "features", "constraints", "variables", "size", "ratio", "lambda", "sigma2"],
    ),
    ("solvers", &["list"]),
    ("reference", &["tol", "budget", "penalty"]),
    ("bounds", &["alphas", "kappas", "iters"]),
    ("output", &["dir", "timing", "save_instance"]),
];

fn parse_value<T: FromStr>(section: &str, key: &str, v: &str) -> Result<T>
where
    T::Err: std::error::Error + Send + Sync + 'static,
{
    v.parse::<T>().with_context(|| format!("[{section}] {key} = {v:?}"))
}

fn parse_list(section: &str, key: &str, v: &str) -> Result<Vec<f64>> {
    v.split(',').map(|x| parse_value(section, key, x.trim())).collect()
}

impl ExperimentConfig {
    /// `profile` from the command line takes precedence over the file.
    pub fn parse(text: &str, profile: Option<Profile>) -> Result<Self> {
        let sections = parse_sections(text)?;
        for (name, entries) in &sections {
            let Some((_, keys)) = SECTIONS.iter().find(|(s, _)| s == name) else {
                bail!("unknown section [{name}]");
            };
            for k in entries.keys() {
                if !keys.contains(&k.as_str()) {
                    bail!("unknown key {k:?} in [{name}]");
                }
            }
        }
        let empty = BTreeMap::new();
        let sec = |name: &str| sections.get(name).unwrap_or(&empty);
        let exp = sec("experiment");

        let kind: ExperimentKind = exp
            .get("kind")
            .ok_or_else(|| anyhow!("[experiment] kind is required"))?
            .parse()?;
        let profile = match (profile, exp.get("profile")) {
            (Some(p), _) => p,
            (None, Some(p)) => match p.as_str() {
                "desk" => Profile::Desk,
                "paper" => Profile::Paper,
                other => bail!("unknown profile {other:?}"),
            },
            (None, None) => Profile::Desk,
        };

        let mut instance = InstanceParams::defaults(kind, profile);
        let inst = sec("instance");
        for (k, v) in inst {
            match k.as_str() {
                "m" | "samples" | "constraints" => instance.m = parse_value("instance", k, v)?,
                "n" | "features" | "variables" => instance.n = parse_value("instance", k, v)?,
                "s" => instance.s = parse_value("instance", k, v)?,
                "size" => instance.size = parse_value("instance", k, v)?,
                "ratio" => instance.ratio = parse_value("instance", k, v)?,
                "lambda" => instance.lambda = parse_value("instance", k, v)?,
                "sigma2" => instance.sigma2 = parse_value("instance", k, v)?,
                _ => unreachable!("keys checked above"),
            }
        }

        let solvers: Vec<SolverSpec> = match sec("solvers").get("list") {
            Some(list) => list
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::parse)
                .collect::<Result<_>>()?,
            None => default_solvers(kind),
        };
        for s in &solvers {
            if s.name.experiment() != kind {
                bail!("solver {} does not apply to the {kind} experiment", s.name.as_str());
            }
        }

        let mut reference = ReferenceConfig::default();
        for (k, v) in sec("reference") {
            match k.as_str() {
                "tol" => reference.tol = parse_value("reference", k, v)?,
                "budget" => reference.budget = parse_value("reference", k, v)?,
                "penalty" => reference.penalty = parse_value("reference", k, v)?,
                _ => unreachable!(),
            }
        }

        let mut bounds = BoundsConfig::default();
        for (k, v) in sec("bounds") {
            match k.as_str() {
                "alphas" => bounds.alphas = parse_list("bounds", k, v)?,
                "kappas" => bounds.kappas = parse_list("bounds", k, v)?,
                "iters" => bounds.iters = parse_value("bounds", k, v)?,
                _ => unreachable!(),
            }
        }
        if bounds.alphas.iter().any(|a| !(*a > 0.0 && *a <= 1.0)) {
            bail!("[bounds] alphas must lie in (0, 1]");
        }
        if bounds.kappas.iter().any(|k| !(1.0..2.0).contains(k)) {
            bail!("[bounds] kappas must lie in [1, 2)");
        }

        let out = sec("output");
        let out_dir = PathBuf::from(out.get("dir").map(String::as_str).unwrap_or("out"));
        let timing = match out.get("timing") {
            Some(v) => parse_value("output", "timing", v)?,
            None => false,
        };
        let save_instance = match out.get("save_instance") {
            Some(v) => parse_value("output", "save_instance", v)?,
            None => true,
        };

        let default_iters = match kind {
            ExperimentKind::Logistic => 500,
            ExperimentKind::Qp => 1000,
            ExperimentKind::CsTv => 300,
        };
        let max_iters = match exp.get("max_iters") {
            Some(v) => parse_value("experiment", "max_iters", v)?,
            None => default_iters,
        };
        let horizon = match exp.get("horizon") {
            Some(v) => parse_value("experiment", "horizon", v)?,
            None => 300,
        };
        if horizon < 2 {
            bail!("[experiment] horizon must be at least 2");
        }
        let tol = exp.get("tol").map(|v| parse_value("experiment", "tol", v)).transpose()?;
        let seed = match exp.get("seed") {
            Some(v) => parse_value("experiment", "seed", v)?,
            None => 0,
        };

        Ok(Self {
            kind,
            profile,
            seed,
            max_iters,
            horizon,
            tol,
            instance,
            solvers,
            reference,
            bounds,
            out_dir,
            timing,
            save_instance,
        })
    }

    pub fn load(path: &Path, profile: Option<Profile>) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text, profile).with_context(|| format!("in {}", path.display()))
    }
}

pub fn default_solvers(kind: ExperimentKind) -> Vec<SolverSpec> {
    let names: &[SolverName] = match kind {
        ExperimentKind::Logistic => &[SolverName::Gpgm, SolverName::Apgm],
        ExperimentKind::Qp => &[SolverName::Glalm, SolverName::Alalm],
        ExperimentKind::CsTv => &[SolverName::Ladmm, SolverName::Aladmm, SolverName::Gladmm],
    };
    names
        .iter()
        .map(|&name| SolverSpec {
            name,
            params: BTreeMap::new(),
        })
        .collect()
}
