//! Settings resolution, file formats and the command implementations behind
//! the `deffuant` binary.
//!
//! Every command reads its options from three layers: built-in defaults, an
//! optional `key = value` config file, and explicit flags (highest priority).
//! The `meta.txt` written next to each output is itself a valid config file,
//! so `deffuant <cmd> --config meta.txt` repeats the run.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rand::SeedableRng;
use thiserror::Error;

use crate::dynamics::{self, DynamicsError, InitialDistribution, Scheme, SimConfig};
use crate::measure::{self, bin_centers, PeakParams, PeakSet};
use crate::network::{self, DegreeStats, Graph, NetworkError};
use crate::profile::{MutationProfile, ProfileError, ProfileKind};
use crate::sweep::{self, derive_seed, StreamTag, SweepError, SweepPlan};
use crate::SimRng;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag, config entry or input file; exit code 2.
    #[error("--{flag}: {msg}")]
    Usage { flag: String, msg: String },
    #[error("{path}: line {line}: {msg}")]
    Input {
        path: String,
        line: usize,
        msg: String,
    },
    /// Failure while running; exit code 1.
    #[error("{0}")]
    Runtime(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage { .. } | CliError::Input { .. } => 2,
            CliError::Runtime(_) | CliError::Io { .. } => 1,
        }
    }

    fn usage(flag: &str, msg: impl Into<String>) -> Self {
        CliError::Usage {
            flag: flag.to_string(),
            msg: msg.into(),
        }
    }
}

fn io_err(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Run,
    Sweep,
    GenNet,
    Peaks,
}

impl Command {
    pub fn key(self) -> &'static str {
        match self {
            Command::Run => "run",
            Command::Sweep => "sweep",
            Command::GenNet => "gen-net",
            Command::Peaks => "peaks",
        }
    }
}

/// Every option a config file or flag may set.
pub const KEYS: &[&str] = &[
    "n",
    "degree",
    "d",
    "d-start",
    "d-end",
    "d-step",
    "mu",
    "steps",
    "window",
    "p",
    "alpha",
    "profile",
    "scheme",
    "init",
    "replicates",
    "seed",
    "bins",
    "workers",
    "min-peak-frac",
    "min-peak-sep",
    "out",
    "name",
    "network",
    "save-final",
];

/// Prefix of metadata entries that record facts about a run rather than
/// settings; the config loader skips them.
pub const INFO_PREFIX: &str = "info.";

fn canonical_key(key: &str) -> String {
    key.trim().replace('_', "-")
}

/// Parses `key = value` lines. `#` starts a comment line; blank lines are
/// skipped; `info.*` entries are ignored.
pub fn parse_config(text: &str, path: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut out = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let input_err = |msg: String| CliError::Input {
            path: path.to_string(),
            line: idx + 1,
            msg,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| input_err(format!("expected `key = value`, got `{line}`")))?;
        let key = canonical_key(key);
        if key.starts_with(INFO_PREFIX) {
            continue;
        }
        if !KEYS.contains(&key.as_str()) {
            return Err(input_err(format!("unknown key `{key}`")));
        }
        if out.insert(key.clone(), value.trim().to_string()).is_some() {
            return Err(input_err(format!("key `{key}` set twice")));
        }
    }
    Ok(out)
}

/// Fully resolved options for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub command: Command,
    pub n: usize,
    pub degree: f64,
    pub d: Option<f64>,
    pub d_start: f64,
    pub d_end: f64,
    pub d_step: f64,
    pub mu: f64,
    pub steps: u64,
    pub window: u64,
    pub p: f64,
    pub alpha: f64,
    pub profile: ProfileKind,
    pub scheme: Scheme,
    pub init: InitialDistribution<f64>,
    pub replicates: usize,
    pub seed: u64,
    pub bins: usize,
    pub workers: usize,
    pub min_peak_frac: f64,
    pub min_peak_sep: usize,
    pub out: PathBuf,
    pub name: String,
    pub network: Option<PathBuf>,
    pub save_final: bool,
}

struct Layered {
    explicit: BTreeMap<String, String>,
    file: BTreeMap<String, String>,
}

impl Layered {
    fn raw(&self, key: &str) -> Option<&str> {
        self.explicit
            .get(key)
            .or_else(|| self.file.get(key))
            .map(String::as_str)
    }

    fn get<T: FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|e| CliError::usage(key, format!("cannot parse `{v}`: {e}"))),
        }
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse()
                    .map_err(|e| CliError::usage(key, format!("cannot parse `{v}`: {e}")))
            })
            .transpose()
    }

    /// Integer counts also accept float notation such as `5e7`.
    fn count(&self, key: &str, default: u64) -> Result<u64, CliError> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => parse_count(v).ok_or_else(|| {
                CliError::usage(key, format!("expected a non-negative integer, got `{v}`"))
            }),
        }
    }
}

fn parse_count(v: &str) -> Option<u64> {
    if let Ok(n) = v.parse::<u64>() {
        return Some(n);
    }
    let f = v.parse::<f64>().ok()?;
    (f.is_finite() && f >= 0.0 && f.fract() == 0.0 && f < 1.8e19).then_some(f as u64)
}

impl Settings {
    /// Merges explicit flags over the optional config file over defaults.
    ///
    /// `explicit` holds `(key, value)` pairs for flags the user actually gave.
    pub fn resolve(
        command: Command,
        explicit: Vec<(String, String)>,
        config: Option<&Path>,
    ) -> Result<Settings, CliError> {
        let file = match config {
            None => BTreeMap::new(),
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::usage("config", format!("{}: {e}", path.display())))?;
                parse_config(&text, &path.display().to_string())?
            }
        };
        let mut explicit_map = BTreeMap::new();
        for (k, v) in explicit {
            let k = canonical_key(&k);
            if !KEYS.contains(&k.as_str()) {
                return Err(CliError::usage(&k, "unknown option"));
            }
            explicit_map.insert(k, v);
        }
        let l = Layered {
            explicit: explicit_map,
            file,
        };
        let workers_default = std::thread::available_parallelism().map_or(1, |n| n.get());
        let s = Settings {
            command,
            n: l.count("n", 10_000)? as usize,
            degree: l.get("degree", 10.0)?,
            d: l.opt("d")?,
            d_start: l.get("d-start", 0.1)?,
            d_end: l.get("d-end", 0.75)?,
            d_step: l.get("d-step", 0.005)?,
            mu: l.get("mu", 0.5)?,
            steps: l.count("steps", 50_000_000)?,
            window: l.count("window", 1000)?,
            p: l.get("p", 0.01)?,
            alpha: l.get("alpha", 0.0)?,
            profile: l.get("profile", ProfileKind::Uniform)?,
            scheme: l.get("scheme", Scheme::MutateOrInteract)?,
            init: l.get("init", InitialDistribution::UniformIid)?,
            replicates: l.count("replicates", 10)? as usize,
            seed: l.count("seed", 1)?,
            bins: l.count("bins", 200)? as usize,
            workers: l.count("workers", workers_default as u64)? as usize,
            min_peak_frac: l.get("min-peak-frac", 0.2)?,
            min_peak_sep: l.count("min-peak-sep", 9)? as usize,
            out: l.get("out", PathBuf::from("out"))?,
            name: l.get("name", command.key().to_string())?,
            network: l.opt("network")?,
            save_final: l.get("save-final", false)?,
        };
        s.check()?;
        Ok(s)
    }

    fn check(&self) -> Result<(), CliError> {
        if self.n < 1 {
            return Err(CliError::usage("n", "n must be at least 1"));
        }
        if self.workers == 0 {
            return Err(CliError::usage("workers", "workers must be at least 1"));
        }
        if self.bins == 0 {
            return Err(CliError::usage("bins", "bins must be at least 1"));
        }
        if !(self.min_peak_frac > 0.0 && self.min_peak_frac <= 1.0) {
            return Err(CliError::usage("min-peak-frac", "must be in (0, 1]"));
        }
        if self.min_peak_sep == 0 {
            return Err(CliError::usage("min-peak-sep", "must be at least 1"));
        }
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(CliError::usage("name", "must be a plain directory name"));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<MutationProfile<f64>, CliError> {
        MutationProfile::new(self.profile, self.p, self.alpha).map_err(|e| match e {
            ProfileError::UniformSlope(_) => CliError::usage("alpha", e.to_string()),
            _ => CliError::usage("p", format!("{e} (with --alpha {})", self.alpha)),
        })
    }

    pub fn peak_params(&self) -> PeakParams {
        PeakParams {
            min_height_frac: self.min_peak_frac,
            min_separation: self.min_peak_sep,
        }
    }

    fn sim_config(&self, tolerance: f64, seed: u64) -> SimConfig<f64> {
        SimConfig {
            tolerance,
            mu: self.mu,
            total_steps: self.steps,
            window: self.window,
            scheme: self.scheme,
            init: self.init,
            seed,
            bins: self.bins,
        }
    }

    pub fn sweep_plan(&self) -> Result<SweepPlan<f64>, CliError> {
        let plan = SweepPlan {
            d_start: self.d_start,
            d_end: self.d_end,
            d_step: self.d_step,
            replicates: self.replicates,
            base_config: self.sim_config(self.d_start, 0),
            nodes: self.n,
            avg_degree: self.degree,
            profile: self.profile()?,
            master_seed: self.seed,
        };
        self.sim_config(self.d_start, 0)
            .validate()
            .map_err(|e| dynamics_usage(e, "d-start"))?;
        plan.validate().map_err(|e| match e {
            SweepError::Param(msg) if msg.contains("d-step") => CliError::usage("d-step", msg),
            SweepError::Param(msg) if msg.contains("replicates") => {
                CliError::usage("replicates", msg)
            }
            SweepError::Param(msg) if msg.contains("degree") || msg.contains("nodes") => {
                CliError::usage("degree", msg)
            }
            SweepError::Param(msg) => CliError::usage("d-end", msg),
            other => CliError::Runtime(other.to_string()),
        })?;
        Ok(plan)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.out.join(&self.name)
    }

    /// Settings as `key = value` lines, in [`KEYS`] order, restricted to the
    /// keys that influence this command.
    fn settings_lines(&self) -> Vec<(&'static str, String)> {
        let mut v: Vec<(&'static str, String)> = Vec::new();
        let sim = matches!(self.command, Command::Run | Command::Sweep);
        v.push(("n", self.n.to_string()));
        v.push(("degree", self.degree.to_string()));
        if self.command == Command::Run {
            v.push(("d", self.d.map_or_else(String::new, |d| d.to_string())));
        }
        if self.command == Command::Sweep {
            v.push(("d-start", self.d_start.to_string()));
            v.push(("d-end", self.d_end.to_string()));
            v.push(("d-step", self.d_step.to_string()));
        }
        if sim {
            v.push(("mu", self.mu.to_string()));
            v.push(("steps", self.steps.to_string()));
            v.push(("window", self.window.to_string()));
            v.push(("p", self.p.to_string()));
            v.push(("alpha", self.alpha.to_string()));
            v.push(("profile", self.profile.to_string()));
            v.push(("scheme", self.scheme.to_string()));
            v.push(("init", self.init.to_string()));
        }
        if self.command == Command::Sweep {
            v.push(("replicates", self.replicates.to_string()));
        }
        v.push(("seed", self.seed.to_string()));
        if sim {
            v.push(("bins", self.bins.to_string()));
        }
        if self.command == Command::Sweep {
            v.push(("workers", self.workers.to_string()));
        }
        if sim {
            v.push(("min-peak-frac", self.min_peak_frac.to_string()));
            v.push(("min-peak-sep", self.min_peak_sep.to_string()));
        }
        v.push(("out", self.out.display().to_string()));
        v.push(("name", self.name.clone()));
        if self.command == Command::Run {
            if let Some(path) = &self.network {
                v.push(("network", path.display().to_string()));
            }
            v.push(("save-final", self.save_final.to_string()));
        }
        v
    }
}

fn dynamics_usage(e: DynamicsError, tolerance_flag: &str) -> CliError {
    match e {
        DynamicsError::Param { field, msg } => {
            let flag = if field == "d" { tolerance_flag } else { field };
            CliError::usage(flag, msg)
        }
        other => CliError::Runtime(other.to_string()),
    }
}

fn network_usage(e: NetworkError) -> CliError {
    match e {
        NetworkError::Param(msg) => CliError::usage("degree", msg),
        other => CliError::Runtime(other.to_string()),
    }
}

/// Ordered `key = value` record written as `meta.txt`.
#[derive(Debug, Default, Clone)]
pub struct RunMetadata {
    entries: Vec<(String, String)>,
}

impl RunMetadata {
    pub fn from_settings(s: &Settings) -> Self {
        let mut meta = RunMetadata::default();
        meta.info("command", s.command.key());
        meta.info("version", VERSION);
        for (k, v) in s.settings_lines() {
            meta.push(k, v);
        }
        meta
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn info(&mut self, key: &str, value: impl ToString) {
        self.push(&format!("{INFO_PREFIX}{key}"), value);
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn render(&self) -> String {
        let mut out = String::from("# deffuant run metadata; usable as --config\n");
        for (k, v) in &self.entries {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    fn record_model(&mut self, s: &Settings) {
        self.info("er-model", "gnp (independent edges, p = degree / (n - 1); not conditioned on connectivity)");
        self.info("rng", "xoshiro256++ seeded via splitmix64");
        self.info("mutation-draw", "uniform on [0, 1)");
        self.info("consensus-rule", "strict |delta| < d");
        self.info("window-sampling", "full opinion vector after each of the last `window` steps");
        self.info("scheme-name", match s.scheme {
            Scheme::MutateOrInteract => "mutate-or-interact",
            Scheme::MutateAndInteract => "mutate-and-interact",
        });
    }

    fn record_degrees(&mut self, prefix: &str, g: &Graph) {
        let DegreeStats {
            mean,
            min,
            max,
            isolated,
        } = g.degree_stats();
        self.info(&format!("{prefix}edges"), g.edge_count());
        self.info(&format!("{prefix}degree-mean"), mean);
        self.info(&format!("{prefix}degree-min"), min);
        self.info(&format!("{prefix}degree-max"), max);
        self.info(&format!("{prefix}isolated"), isolated);
    }

    fn record_stats(&mut self, stats: &dynamics::RunStats) {
        self.info("stats.steps", stats.steps);
        self.info("stats.interactions", stats.interactions);
        self.info("stats.consensus-events", stats.consensus_events);
        self.info("stats.mutations", stats.mutations);
        self.info("stats.isolated-skips", stats.isolated_skips);
    }
}

/// Formats with 9 significant digits in plain decimal notation (scientific
/// for very large or small magnitudes).
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 9;
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if !(-5..=15).contains(&exp) {
        return format!("{:.*e}", (DIGITS - 1) as usize, x);
    }
    let decimals = (DIGITS - 1 - exp).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_distribution_csv<W: Write>(mut w: W, density: &[f64]) -> std::io::Result<()> {
    writeln!(w, "bin_center,density")?;
    for (c, v) in bin_centers::<f64>(density.len()).iter().zip(density) {
        writeln!(w, "{},{}", format_sig(*c), format_sig(*v))?;
    }
    w.flush()
}

/// Reads `bin_center,density` rows; returns `(centers, densities)`.
pub fn read_distribution_csv<R: BufRead>(
    r: R,
    path: &str,
) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let input_err = |line: usize, msg: String| CliError::Input {
        path: path.to_string(),
        line,
        msg,
    };
    let mut centers = Vec::new();
    let mut values = Vec::new();
    let mut header_seen = false;
    for (idx, line) in r.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| input_err(line_no, e.to_string()))?;
        let text = line.trim();
        if !header_seen {
            if text != "bin_center,density" {
                return Err(input_err(
                    line_no,
                    format!("expected header `bin_center,density`, got `{text}`"),
                ));
            }
            header_seen = true;
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 2 {
            return Err(input_err(line_no, format!("expected 2 fields, got {}", fields.len())));
        }
        let mut parsed = [0.0f64; 2];
        for (slot, field) in parsed.iter_mut().zip(&fields) {
            *slot = field
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| input_err(line_no, format!("bad number `{field}`")))?;
        }
        if parsed[1] < 0.0 {
            return Err(input_err(line_no, "negative density".into()));
        }
        centers.push(parsed[0]);
        values.push(parsed[1]);
    }
    if !header_seen {
        return Err(input_err(1, "empty file".into()));
    }
    if values.is_empty() {
        return Err(input_err(1, "no data rows".into()));
    }
    Ok((centers, values))
}

pub fn write_bifurcation_csv<W: Write>(mut w: W, map: &sweep::BifurcationMap<f64>) -> std::io::Result<()> {
    let mut header = String::from("bin_center");
    for d in &map.d_values {
        let _ = write!(header, ",d={d:.3}");
    }
    writeln!(w, "{header}")?;
    for (i, c) in bin_centers::<f64>(map.bins()).iter().enumerate() {
        let mut row = format_sig(*c);
        for column in &map.densities {
            row.push(',');
            row.push_str(&format_sig(column[i]));
        }
        writeln!(w, "{row}")?;
    }
    w.flush()
}

fn join_locations(peaks: &PeakSet<f64>) -> String {
    peaks
        .locations()
        .iter()
        .map(|&l| format_sig(l))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn write_peak_table<W: Write>(mut w: W, peaks: &PeakSet<f64>) -> std::io::Result<()> {
    writeln!(w, "location,height")?;
    for p in &peaks.peaks {
        writeln!(w, "{},{}", format_sig(p.location), format_sig(p.height))?;
    }
    w.flush()
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(io_err(format!("creating {}", path.display())))
}

fn prepare_dir(s: &Settings) -> Result<PathBuf, CliError> {
    let dir = s.output_dir();
    fs::create_dir_all(&dir).map_err(io_err(format!("creating {}", dir.display())))?;
    Ok(dir)
}

/// What a command produced, for the caller to report.
#[derive(Debug)]
pub struct CommandReport {
    pub dir: Option<PathBuf>,
    pub summary: String,
}

/// One simulation: `distribution.csv`, `meta.txt`, optionally `final.csv`.
///
/// With `--seed S` the network and dynamics seeds match replicate 0, column 0
/// of a sweep with master seed `S`.
pub fn cmd_run(s: &Settings) -> Result<CommandReport, CliError> {
    let d = s
        .d
        .ok_or_else(|| CliError::usage("d", "run needs a tolerance, e.g. --d 0.1"))?;
    let profile = s.profile()?;
    let dynamics_seed = derive_seed(s.seed, 0, 0, StreamTag::Dynamics);
    let cfg = s.sim_config(d, dynamics_seed);
    cfg.validate().map_err(|e| dynamics_usage(e, "d"))?;

    let mut meta = RunMetadata::from_settings(s);
    meta.record_model(s);
    let graph = match &s.network {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::usage("network", format!("{}: {e}", path.display())))?;
            let g = network::read_edge_list(BufReader::new(file)).map_err(|e| match e {
                NetworkError::Parse { line, msg } => CliError::Input {
                    path: path.display().to_string(),
                    line,
                    msg,
                },
                other => CliError::usage("network", other.to_string()),
            })?;
            meta.info("network-source", "file");
            g
        }
        None => {
            let net_seed = derive_seed(s.seed, 0, 0, StreamTag::Network);
            let g = network::generate_er(s.n, s.degree, &mut SimRng::seed_from_u64(net_seed))
                .map_err(network_usage)?;
            meta.info("network-source", "generated");
            meta.info("network-seed", net_seed);
            g
        }
    };
    meta.info("dynamics-seed", dynamics_seed);
    meta.record_degrees("network.", &graph);
    meta.info("network.giant-component", graph.giant_component().len());

    let out = dynamics::run(&graph, &cfg, &profile).map_err(|e| dynamics_usage(e, "d"))?;
    let density: Vec<f64> = out.histogram.density();
    let peaks = measure::detect_peaks(&density, &s.peak_params());
    meta.record_stats(&out.stats);
    meta.info("histogram-samples", out.histogram.samples());
    meta.info("peaks.count", peaks.count());
    meta.info("peaks.locations", join_locations(&peaks));
    meta.info("wall-time-s", format!("{:.3}", out.wall_time.as_secs_f64()));

    let dir = prepare_dir(s)?;
    let path = dir.join("distribution.csv");
    write_distribution_csv(create(&path)?, &density).map_err(io_err(path.display().to_string()))?;
    if s.save_final {
        let path = dir.join("final.csv");
        let mut w = create(&path)?;
        let write = |w: &mut BufWriter<File>| -> std::io::Result<()> {
            writeln!(w, "node,opinion")?;
            for (i, o) in out.state.opinions.iter().enumerate() {
                writeln!(w, "{i},{}", format_sig(*o))?;
            }
            w.flush()
        };
        write(&mut w).map_err(io_err(path.display().to_string()))?;
    }
    write_meta(&dir, &meta)?;
    Ok(CommandReport {
        summary: format!(
            "run d={d}: {} events, {} mutations, {} peaks at [{}] in {:.2}s -> {}",
            out.stats.steps,
            out.stats.mutations,
            peaks.count(),
            join_locations(&peaks),
            out.wall_time.as_secs_f64(),
            dir.display()
        ),
        dir: Some(dir),
    })
}

fn write_meta(dir: &Path, meta: &RunMetadata) -> Result<(), CliError> {
    let path = dir.join("meta.txt");
    fs::write(&path, meta.render()).map_err(io_err(path.display().to_string()))
}

/// Full sweep: `bifurcation.csv`, `peaks.csv` and `meta.txt`.
pub fn cmd_sweep(s: &Settings) -> Result<CommandReport, CliError> {
    let plan = s.sweep_plan()?;
    let started = Instant::now();
    let output = sweep::execute(&plan, s.workers).map_err(|e| CliError::Runtime(e.to_string()))?;
    let elapsed = started.elapsed();

    let dir = prepare_dir(s)?;
    let path = dir.join("bifurcation.csv");
    write_bifurcation_csv(create(&path)?, &output.map).map_err(io_err(path.display().to_string()))?;

    let params = s.peak_params();
    let path = dir.join("peaks.csv");
    let mut w = create(&path)?;
    let mut counts = Vec::with_capacity(output.map.d_values.len());
    let mut write_peaks = || -> std::io::Result<()> {
        writeln!(w, "d,n_peaks,locations")?;
        for (d, density) in output.map.d_values.iter().zip(&output.map.densities) {
            let peaks = measure::detect_peaks(density, &params);
            counts.push(peaks.count());
            writeln!(w, "{d:.3},{},{}", peaks.count(), join_locations(&peaks))?;
        }
        w.flush()
    };
    write_peaks().map_err(io_err(path.display().to_string()))?;

    let mut meta = RunMetadata::from_settings(s);
    meta.record_model(s);
    meta.info("initialization", "fresh initial opinions for every (replicate, d) task");
    meta.info("network-reuse", "one network per replicate, shared by all d values");
    meta.info("seed-derivation", "splitmix64 absorb(master, tag, replicate, d_index); tag 1 = network, 2 = dynamics");
    meta.info("d-count", output.map.d_values.len());
    meta.info("tasks", output.results.len());
    for (r, g) in output.networks.iter().enumerate() {
        meta.info(&format!("network.{r}.seed"), plan.network_seed(r));
        meta.record_degrees(&format!("network.{r}."), g);
    }
    meta.record_stats(&output.total_stats());
    meta.info("wall-time-s", format!("{:.3}", elapsed.as_secs_f64()));
    write_meta(&dir, &meta)?;

    Ok(CommandReport {
        summary: format!(
            "sweep: {} d values x {} replicates in {:.2}s, peak counts {:?} -> {}",
            output.map.d_values.len(),
            plan.replicates,
            elapsed.as_secs_f64(),
            counts,
            dir.display()
        ),
        dir: Some(dir),
    })
}

/// Writes `network.edges` for `G(n, degree / (n - 1))`.
pub fn cmd_gen_net(s: &Settings) -> Result<CommandReport, CliError> {
    let seed = derive_seed(s.seed, 0, 0, StreamTag::Network);
    let g = network::generate_er(s.n, s.degree, &mut SimRng::seed_from_u64(seed))
        .map_err(network_usage)?;
    let dir = prepare_dir(s)?;
    let path = dir.join("network.edges");
    let mut w = create(&path)?;
    writeln!(
        w,
        "# erdos-renyi gnp n={} degree={} seed={} version={VERSION}",
        s.n, s.degree, s.seed
    )
    .map_err(io_err(path.display().to_string()))?;
    network::write_edge_list(&g, &mut w).map_err(|e| CliError::Runtime(e.to_string()))?;
    let stats = g.degree_stats();
    Ok(CommandReport {
        summary: format!(
            "gen-net: {} nodes, {} edges, mean degree {:.3}, {} isolated -> {}",
            g.node_count(),
            g.edge_count(),
            stats.mean,
            stats.isolated,
            path.display()
        ),
        dir: Some(dir),
    })
}

/// Peak table for an existing distribution CSV. Returns the table text; it
/// is also written to `table_out` when given.
pub fn cmd_peaks(
    input: &Path,
    params: &PeakParams,
    table_out: Option<&Path>,
) -> Result<(PeakSet<f64>, String), CliError> {
    let file = File::open(input)
        .map_err(|e| CliError::usage("input", format!("{}: {e}", input.display())))?;
    let (_, density) = read_distribution_csv(BufReader::new(file), &input.display().to_string())?;
    let peaks = measure::detect_peaks(&density, params);
    let mut table = Vec::new();
    write_peak_table(&mut table, &peaks).expect("in-memory write");
    if let Some(path) = table_out {
        fs::write(path, &table).map_err(io_err(path.display().to_string()))?;
    }
    Ok((peaks, String::from_utf8(table).expect("ascii table")))
}
