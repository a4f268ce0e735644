//! Experiment configuration: a TOML file, command-line flags, or both.
//!
//! Every key of [`Settings`] is also a long flag with the same name in
//! kebab case (`eta_points` ↔ `--eta-points`), and flags win over the file.
//! Lists are comma separated on the command line.

use std::collections::BTreeSet;
use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use clap::Args;
use paratransfer_core::fockoracle::NetworkKind;
use paratransfer_core::routing::{BandwidthBudget, Decoherence, FidelityModel, Scheme};
use serde::Deserialize;

use crate::network::{BuiltNetwork, NetworkDocument};
use crate::table::Format;
use crate::Failure;

pub const CONFIG_VERSION: u32 = 1;

/// Ω0/2π for the rate presets, in Hz.
pub const DEFAULT_COUPLING_HZ: f64 = 20.0e6;
/// W/2π for the rate presets, in Hz.
pub const DEFAULT_BANDWIDTH_HZ: f64 = 2.0e9;
pub const DEFAULT_ETA_RANGE: (f64, f64) = (0.01, 1.0);
pub const DEFAULT_ETA_POINTS: usize = 200;
pub const DEFAULT_NODES_MAX: usize = 1024;

macro_rules! settings {
    ($( $(#[$meta:meta])* $name:ident : $ty:ty ),* $(,)?) => {
        #[derive(Debug, Clone, Default, PartialEq, Deserialize, Args)]
        #[serde(deny_unknown_fields)]
        pub struct Settings {
            /// Config format version (file only).
            #[arg(skip)]
            pub version: Option<u32>,
            /// Experiment to run (file only; the subcommand sets it otherwise).
            #[arg(skip)]
            pub experiment: Option<String>,
            /// Inline network document (file only; see `network_file`).
            #[arg(skip)]
            pub network: Option<NetworkDocument>,
            $( $(#[$meta])* #[arg(long)] pub $name: Option<$ty>, )*
        }

        impl Settings {
            /// Fills every key unset in `self` from `fallback`.
            pub fn or(self, fallback: Settings) -> Settings {
                Settings {
                    version: self.version.or(fallback.version),
                    experiment: self.experiment.or(fallback.experiment),
                    network: self.network.or(fallback.network),
                    $( $name: self.$name.or(fallback.$name), )*
                }
            }

            /// Keys that are set.
            pub fn keys(&self) -> BTreeSet<&'static str> {
                let mut out = BTreeSet::new();
                $( if self.$name.is_some() { out.insert(stringify!($name)); } )*
                out
            }
        }
    };
}

settings! {
    /// Hypercube dimension d.
    dimension: u32,
    /// Node count N.
    nodes: usize,
    /// Hypercube dimensions for `figure2`.
    #[arg(value_delimiter = ',')]
    dimensions: Vec<u32>,
    /// Largest N in `figure3`.
    nodes_max: usize,
    /// qc, mp, complete or serial.
    scheme: String,
    /// Number m of channel bits in a subcube split.
    channel_bits: u32,
    /// oscillator or qubit.
    network_kind: String,
    /// Explicit η grid; overrides the eta_min/eta_max/eta_points range.
    #[arg(value_delimiter = ',')]
    eta: Vec<f64>,
    eta_min: f64,
    eta_max: f64,
    eta_points: usize,
    /// log or linear.
    eta_spacing: String,
    /// Coupling Ω0/2π in Hz.
    coupling_hz: f64,
    /// Bandwidth W/2π in Hz.
    bandwidth_hz: f64,
    /// Dissipation time T1 in seconds.
    t1: f64,
    /// Dephasing time T2 in seconds.
    t2: f64,
    /// worst-case, exact-xi, resonance-tuned or ideal.
    fidelity_model: String,
    /// Evolution time in units of the swap time π/(2Ω0).
    time: f64,
    /// Network document for `evolve`.
    network_file: PathBuf,
    /// Output path; standard output when absent.
    output: PathBuf,
    /// csv or json.
    format: String,
    /// Seed for randomized graphs.
    seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Evolve,
    FidelitySweep,
    Figure2,
    Figure3,
    Schedule,
    Rate,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::Evolve,
        ExperimentKind::FidelitySweep,
        ExperimentKind::Figure2,
        ExperimentKind::Figure3,
        ExperimentKind::Schedule,
        ExperimentKind::Rate,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Evolve => "evolve",
            ExperimentKind::FidelitySweep => "fidelity-sweep",
            ExperimentKind::Figure2 => "figure2",
            ExperimentKind::Figure3 => "figure3",
            ExperimentKind::Schedule => "schedule",
            ExperimentKind::Rate => "rate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.as_str() == s)
    }
}

/// Where settings came from, for error messages that point at the
/// offending line or flag.
#[derive(Debug, Clone, Default)]
pub struct Origin {
    file: Option<(PathBuf, String)>,
    flags: BTreeSet<&'static str>,
}

impl Origin {
    pub fn anchor(&self, key: &str) -> String {
        if self.flags.contains(key) {
            return format!("--{}", key.replace('_', "-"));
        }
        if let Some((path, text)) = &self.file {
            if let Some(line) = find_key_line(text, key) {
                return format!("{}:{}", path.display(), line);
            }
            return path.display().to_string();
        }
        format!("--{}", key.replace('_', "-"))
    }

    fn error(&self, key: &str, message: impl std::fmt::Display) -> Failure {
        Failure::config(format!("{}: {message}", self.anchor(key)))
    }
}

/// 1-based line of the first `key = ...` assignment.
fn find_key_line(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| {
        let l = l.trim_start();
        l.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

/// Reads a config file. Parse errors carry the file's line and column.
pub fn load_file(path: &Path) -> Result<(Settings, Origin), Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("{}: cannot read config: {e}", path.display())))?;
    let settings = parse_config(&text).map_err(|e| {
        let (line, col) = e
            .span()
            .map(|s| line_col(&text, s.start))
            .unwrap_or((1, 1));
        Failure::config(format!(
            "{}:{line}:{col}: {}",
            path.display(),
            e.message()
        ))
    })?;
    Ok((
        settings,
        Origin {
            file: Some((path.to_owned(), text)),
            flags: BTreeSet::new(),
        },
    ))
}

pub fn parse_config(text: &str) -> Result<Settings, toml::de::Error> {
    toml::from_str(text)
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let col = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, col)
}

/// Merges command-line flags over file settings.
pub fn merge(flags: Settings, file: Option<(Settings, Origin)>) -> (Settings, Origin) {
    let flag_keys = flags.keys();
    match file {
        Some((settings, mut origin)) => {
            origin.flags = flag_keys;
            (flags.or(settings), origin)
        }
        None => (
            flags,
            Origin {
                file: None,
                flags: flag_keys,
            },
        ),
    }
}

/// A fully validated experiment.
#[derive(Debug, Clone)]
pub struct Job {
    pub experiment: Experiment,
    pub format: Format,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub struct RateParams {
    /// Ω0 in rad/s.
    pub coupling: f64,
    pub budget: BandwidthBudget,
    pub decoherence: Decoherence,
    pub model: FidelityModel,
}

#[derive(Debug, Clone)]
pub enum Experiment {
    Evolve {
        network: Box<BuiltNetwork>,
        /// In units of the swap time.
        time: f64,
    },
    FidelitySweep {
        dimension: u32,
        channel_bits: u32,
        kind: NetworkKind,
        etas: Vec<f64>,
    },
    Figure2 {
        dimensions: Vec<u32>,
        channel_bits: u32,
        etas: Vec<f64>,
    },
    Figure3 {
        nodes_max: usize,
        rate: RateParams,
    },
    Schedule {
        scheme: Scheme,
        nodes: usize,
        rate: RateParams,
    },
    Rate {
        scheme: Scheme,
        nodes: usize,
        rate: RateParams,
    },
}

impl Experiment {
    pub fn kind(&self) -> ExperimentKind {
        match self {
            Experiment::Evolve { .. } => ExperimentKind::Evolve,
            Experiment::FidelitySweep { .. } => ExperimentKind::FidelitySweep,
            Experiment::Figure2 { .. } => ExperimentKind::Figure2,
            Experiment::Figure3 { .. } => ExperimentKind::Figure3,
            Experiment::Schedule { .. } => ExperimentKind::Schedule,
            Experiment::Rate { .. } => ExperimentKind::Rate,
        }
    }
}

fn positive(origin: &Origin, key: &str, v: f64) -> Result<f64, Failure> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(origin.error(key, format!("{key} must be positive and finite, got {v}")))
    }
}

fn eta_grid(s: &Settings, o: &Origin) -> Result<Vec<f64>, Failure> {
    if let Some(grid) = &s.eta {
        if grid.is_empty() {
            return Err(o.error("eta", "eta grid is empty"));
        }
        for &e in grid {
            positive(o, "eta", e)?;
        }
        return Ok(grid.clone());
    }
    let lo = positive(o, "eta_min", s.eta_min.unwrap_or(DEFAULT_ETA_RANGE.0))?;
    let hi = positive(o, "eta_max", s.eta_max.unwrap_or(DEFAULT_ETA_RANGE.1))?;
    let points = s.eta_points.unwrap_or(DEFAULT_ETA_POINTS);
    if points == 0 {
        return Err(o.error("eta_points", "eta grid is empty"));
    }
    if hi < lo {
        return Err(o.error("eta_max", format!("eta_max {hi} is below eta_min {lo}")));
    }
    let log = match s.eta_spacing.as_deref().unwrap_or("log") {
        "log" => true,
        "linear" => false,
        other => return Err(o.error("eta_spacing", format!("unknown spacing {other:?} (log or linear)"))),
    };
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = |i: usize| i as f64 / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else if log {
                lo * (hi / lo).powf(step(i))
            } else {
                lo + (hi - lo) * step(i)
            }
        })
        .collect())
}

fn rate_params(s: &Settings, o: &Origin) -> Result<RateParams, Failure> {
    let coupling = TAU * positive(o, "coupling_hz", s.coupling_hz.unwrap_or(DEFAULT_COUPLING_HZ))?;
    let width = TAU * positive(o, "bandwidth_hz", s.bandwidth_hz.unwrap_or(DEFAULT_BANDWIDTH_HZ))?;
    let t1 = s.t1.map(|t| positive(o, "t1", t)).transpose()?;
    let t2 = s.t2.map(|t| positive(o, "t2", t)).transpose()?;
    let model = match &s.fidelity_model {
        None => FidelityModel::default(),
        Some(name) => FidelityModel::parse(name).ok_or_else(|| {
            o.error(
                "fidelity_model",
                format!("unknown fidelity model {name:?} (worst-case, exact-xi, resonance-tuned, ideal)"),
            )
        })?,
    };
    Ok(RateParams {
        coupling,
        budget: BandwidthBudget::from_width(width)?,
        decoherence: Decoherence::new(t1, t2)?,
        model,
    })
}

fn scheme_and_nodes(s: &Settings, o: &Origin) -> Result<(Scheme, usize), Failure> {
    let name = s
        .scheme
        .as_deref()
        .ok_or_else(|| o.error("scheme", "scheme is required (qc, mp, complete or serial)"))?;
    let scheme = Scheme::parse(name).ok_or_else(|| o.error("scheme", format!("unknown scheme {name:?}")))?;
    let nodes = match (s.dimension, s.nodes) {
        (Some(_), Some(_)) => return Err(o.error("nodes", "give either dimension or nodes, not both")),
        (Some(d), None) => {
            if !(1..=20).contains(&d) {
                return Err(o.error("dimension", format!("dimension must lie in 1..=20, got {d}")));
            }
            1usize << d
        }
        (None, Some(n)) => n,
        (None, None) => return Err(o.error("nodes", "nodes or dimension is required")),
    };
    let hyper = matches!(scheme, Scheme::Qc | Scheme::Mp);
    if hyper && !(nodes >= 2 && nodes.is_power_of_two()) {
        return Err(o.error("nodes", format!("{} needs N = 2^d, got {nodes}", scheme.as_str())));
    }
    if !hyper && (nodes < 2 || nodes % 2 != 0) {
        return Err(o.error("nodes", format!("{} needs an even N, got {nodes}", scheme.as_str())));
    }
    Ok((scheme, nodes))
}

fn channel_bits(s: &Settings, o: &Origin) -> Result<u32, Failure> {
    let m = s.channel_bits.unwrap_or(1);
    if m == 0 {
        return Err(o.error("channel_bits", "channel_bits must be at least 1"));
    }
    Ok(m)
}

/// Validates merged settings for `kind`.
pub fn resolve(kind: ExperimentKind, s: &Settings, o: &Origin) -> Result<Job, Failure> {
    if let Some(v) = s.version {
        if v != CONFIG_VERSION {
            return Err(o.error("version", format!("config version {v} is not supported (expected {CONFIG_VERSION})")));
        }
    }
    if let Some(e) = &s.experiment {
        if ExperimentKind::parse(e) != Some(kind) {
            return Err(o.error(
                "experiment",
                format!("config is for experiment {e:?} but {} was requested", kind.as_str()),
            ));
        }
    }
    let format = match s.format.as_deref() {
        None => Format::Csv,
        Some(f) => Format::parse(f).ok_or_else(|| o.error("format", format!("unknown format {f:?} (csv or json)")))?,
    };
    let seed = s.seed.unwrap_or(0);
    let experiment = match kind {
        ExperimentKind::Evolve => {
            let doc = match (&s.network, &s.network_file, s.dimension) {
                (Some(doc), None, None) => doc.clone(),
                (None, Some(path), None) => {
                    let text = std::fs::read_to_string(path).map_err(|e| {
                        o.error("network_file", format!("cannot read {}: {e}", path.display()))
                    })?;
                    NetworkDocument::parse(&text).map_err(|e| {
                        let (line, col) = e.span().map(|sp| line_col(&text, sp.start)).unwrap_or((1, 1));
                        Failure::config(format!("{}:{line}:{col}: {}", path.display(), e.message()))
                    })?
                }
                (None, None, Some(d)) => NetworkDocument::hypercube(d),
                (None, None, None) => {
                    return Err(o.error(
                        "network_file",
                        "evolve needs a network: a [network] table, network_file, or dimension",
                    ))
                }
                _ => {
                    return Err(o.error(
                        "network_file",
                        "give only one of a [network] table, network_file and dimension",
                    ))
                }
            };
            let time = s.time.unwrap_or(1.0);
            if !(time.is_finite() && time >= 0.0) {
                return Err(o.error("time", format!("time must be non-negative, got {time}")));
            }
            let network = doc.build(seed).map_err(|e| match e {
                Failure::Config(m) => o.error(if s.network_file.is_some() { "network_file" } else { "network" }, m),
                other => other,
            })?;
            Experiment::Evolve {
                network: Box::new(network),
                time,
            }
        }
        ExperimentKind::FidelitySweep => {
            let d = s
                .dimension
                .ok_or_else(|| o.error("dimension", "dimension is required"))?;
            let m = channel_bits(s, o)?;
            if m >= d || d > 12 {
                return Err(o.error(
                    "dimension",
                    format!("need 1 <= channel_bits < dimension <= 12, got m = {m}, d = {d}"),
                ));
            }
            let kind = match s.network_kind.as_deref().unwrap_or("oscillator") {
                "oscillator" => NetworkKind::Oscillator,
                "qubit" => NetworkKind::Qubit,
                other => {
                    return Err(o.error("network_kind", format!("unknown network kind {other:?} (oscillator or qubit)")))
                }
            };
            Experiment::FidelitySweep {
                dimension: d,
                channel_bits: m,
                kind,
                etas: eta_grid(s, o)?,
            }
        }
        ExperimentKind::Figure2 => {
            let dimensions = s.dimensions.clone().unwrap_or_else(|| (2..=6).collect());
            let m = channel_bits(s, o)?;
            if dimensions.is_empty() {
                return Err(o.error("dimensions", "dimensions list is empty"));
            }
            if let Some(&d) = dimensions.iter().find(|&&d| d <= m || d > 12) {
                return Err(o.error(
                    "dimensions",
                    format!("dimension {d} must exceed channel_bits = {m} and be at most 12"),
                ));
            }
            Experiment::Figure2 {
                dimensions,
                channel_bits: m,
                etas: eta_grid(s, o)?,
            }
        }
        ExperimentKind::Figure3 => {
            let nodes_max = s.nodes_max.unwrap_or(DEFAULT_NODES_MAX);
            if !(2..=1 << 20).contains(&nodes_max) {
                return Err(o.error("nodes_max", format!("nodes_max must lie in 2..=2^20, got {nodes_max}")));
            }
            Experiment::Figure3 {
                nodes_max,
                rate: rate_params(s, o)?,
            }
        }
        ExperimentKind::Schedule => {
            let (scheme, nodes) = scheme_and_nodes(s, o)?;
            Experiment::Schedule {
                scheme,
                nodes,
                rate: rate_params(s, o)?,
            }
        }
        ExperimentKind::Rate => {
            let (scheme, nodes) = scheme_and_nodes(s, o)?;
            Experiment::Rate {
                scheme,
                nodes,
                rate: rate_params(s, o)?,
            }
        }
    };
    Ok(Job {
        experiment,
        format,
        output: s.output.clone(),
    })
}
