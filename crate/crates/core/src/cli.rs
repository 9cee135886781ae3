//! Experiment runner: TOML configs, the `gencase` verbs and exit codes.
//!
//! A config names one candidate function, the inverters to test, a radius
//! range and the measurement parameters:
//!
//! ```toml
//! candidate = "identity"
//! inverters = ["brute_force", "never_halt"]
//! n_min = 2
//! n_max = 8
//! n_step = 1          # optional
//! c = 1.0             # or a list, c = [0.5, 1.0]
//! seed = 42           # required
//! mode = "exact"      # or "sampled"
//! trials = 1000       # tapes per input when sampled
//! inputs = 1000       # inputs per sphere when sampled
//! confidence = 0.95
//! fuel = 1048576      # or fuel = { coeff = 4, degree = 3, offset = 64 }
//! out_dir = "out"
//! set = "first_bit_zero"  # optional reference set for `density`
//!
//! [thresholds]        # optional
//! strong_degree = 2.0
//! weak_degree = 2.0
//!
//! [caps]              # optional
//! sphere = 24
//! tape = 20
//!
//! [classifier]        # optional, any subset of the rule's fields
//! d_max = 8.0
//! ```
//!
//! Everything is resolved and cap-checked before the first measurement,
//! and files are written only after every measurement succeeded.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::candidates;
use crate::error::{Error, Result};
use crate::harness::{self, CandidateFunction, FuelSchedule, InverterProgram, Measurement};
use crate::reductions::{self, Repetitions, Thresholds};
use crate::report::{self, CheckDoc, DeltaRow, Metadata, ProfileDoc, RatioRow, Report};
use crate::strata::{self, ClassifierRule, DensityMode, DensityProfile, DensityValue, InputSetSpec, LimitTarget, Measured, Mode};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_IO: i32 = 4;

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        e if e.is_cap_violation() => EXIT_CAP,
        Error::CoinLengthOverflow { .. } => EXIT_CAP,
        Error::Io(_) => EXIT_IO,
        Error::Config(_)
        | Error::UnknownName { .. }
        | Error::InvalidArgument(_)
        | Error::Precondition(_)
        | Error::Domain { .. }
        | Error::TooFewPoints { .. } => EXIT_CONFIG,
        _ => EXIT_RUNTIME,
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
enum FuelConfig {
    Absolute(u64),
    Poly {
        coeff: u64,
        degree: u32,
        #[serde(default)]
        offset: u64,
    },
}

impl From<&FuelConfig> for FuelSchedule {
    fn from(f: &FuelConfig) -> Self {
        match *f {
            FuelConfig::Absolute(v) => FuelSchedule::Absolute(v),
            FuelConfig::Poly { coeff, degree, offset } => FuelSchedule::Poly { coeff, degree, offset },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Caps {
    pub sphere: usize,
    pub tape: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Self { sphere: strata::DEFAULT_SPHERE_CAP, tape: harness::DEFAULT_TAPE_CAP }
    }
}

fn default_step() -> usize {
    1
}
fn default_c() -> OneOrMany {
    OneOrMany::One(1.0)
}
fn default_mode() -> Mode {
    Mode::Exact
}
fn default_count() -> u64 {
    1000
}
fn default_confidence() -> f64 {
    crate::stats::DEFAULT_CONFIDENCE
}
fn default_fuel() -> FuelConfig {
    FuelConfig::Absolute(1 << 20)
}

/// The parsed config file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub candidate: String,
    #[serde(default)]
    pub inverters: Vec<String>,
    pub n_min: usize,
    pub n_max: usize,
    #[serde(default = "default_step")]
    pub n_step: usize,
    #[serde(default = "default_c")]
    c: OneOrMany,
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_count")]
    pub trials: u64,
    #[serde(default = "default_count")]
    pub inputs: u64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    #[serde(default = "default_fuel")]
    fuel: FuelConfig,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub set: Option<String>,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub caps: Caps,
    #[serde(default)]
    pub classifier: ClassifierRule,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn c_values(&self) -> Vec<f64> {
        self.c.values()
    }

    pub fn fuel(&self) -> FuelSchedule {
        (&self.fuel).into()
    }

    pub fn radii(&self) -> Vec<usize> {
        if self.n_step == 0 || self.n_min > self.n_max {
            return Vec::new();
        }
        (self.n_min..=self.n_max).step_by(self.n_step).collect()
    }

    pub fn measurement(&self) -> Measurement {
        Measurement {
            mode: self.mode,
            fuel: self.fuel(),
            sphere_cap: self.caps.sphere,
            tape_cap: self.caps.tape,
            trials: self.trials,
            seed: self.seed,
            confidence: self.confidence,
            inputs: self.inputs,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verb {
    Density,
    Delta,
    Check,
    Amplify,
    Ratio,
}

impl Verb {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verb::Density => "density",
            Verb::Delta => "delta",
            Verb::Check => "check",
            Verb::Amplify => "amplify",
            Verb::Ratio => "ratio",
        }
    }
}

/// A validated experiment, ready to run.
pub struct Experiment {
    pub verb: Verb,
    pub function: CandidateFunction,
    /// `(c, program)`; `c` is `None` unless the program depends on it.
    pub programs: Vec<(Option<f64>, InverterProgram)>,
    pub inverter_names: Vec<String>,
    pub radii: Vec<usize>,
    pub c: Vec<f64>,
    pub measurement: Measurement,
    pub thresholds: Thresholds,
    pub rule: ClassifierRule,
    pub set: Option<InputSetSpec>,
}

fn config_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Resolves names and checks every parameter and enumeration cap.
pub fn prepare(verb: Verb, cfg: &ExperimentConfig) -> Result<Experiment> {
    let radii = cfg.radii();
    if radii.is_empty() {
        return Err(config_err(format!("empty radius range {}..={} step {}", cfg.n_min, cfg.n_max, cfg.n_step)));
    }
    let c = cfg.c_values();
    if c.is_empty() || c.iter().any(|c| !(*c > 0.0 && c.is_finite())) {
        return Err(config_err("c must be one or more positive reals"));
    }
    if cfg.trials == 0 || cfg.inputs == 0 {
        return Err(config_err("trials and inputs must be positive"));
    }
    crate::stats::check_confidence(cfg.confidence).map_err(|e| config_err(e.to_string()))?;
    if cfg.caps.sphere >= 64 || cfg.caps.tape >= 64 {
        return Err(config_err("caps must be below 64"));
    }
    if !(cfg.thresholds.strong_degree >= 0.0 && cfg.thresholds.weak_degree >= 0.0) {
        return Err(config_err("threshold degrees must be nonnegative"));
    }

    let function = candidates::function(&cfg.candidate)?;
    if let Some(&n) = radii.iter().find(|&&n| !function.accepts(n)) {
        return Err(config_err(format!("radius {n} is outside the domain of `{}`; adjust n_min/n_step", function.name())));
    }
    let set = cfg.set.as_deref().map(InputSetSpec::reference).transpose()?;
    let base: Vec<InverterProgram> = cfg.inverters.iter().map(|name| candidates::inverter_for(name, &function)).collect::<Result<_>>()?;
    if base.is_empty() && !(verb == Verb::Density && set.is_some()) {
        return Err(config_err(format!("`{}` needs at least one inverter", verb.as_str())));
    }

    let mut programs = Vec::new();
    for p in &base {
        match verb {
            Verb::Amplify => {
                for &c in &c {
                    let amp = reductions::amplify(p, &function, Repetitions::Chernoff { c }).map_err(|e| match e {
                        Error::Precondition(msg) => config_err(format!("{msg} (use clip:<c>:{})", p.name())),
                        other => other,
                    })?;
                    programs.push((Some(c), amp));
                }
            }
            _ => programs.push((None, p.clone())),
        }
    }

    let measurement = cfg.measurement();
    if measurement.mode == Mode::Exact {
        for &n in &radii {
            strata::check_sphere_cap(n, measurement.sphere_cap)?;
            for (_, p) in &programs {
                harness::check_tape_cap(p.coin_len(n)?, measurement.tape_cap)?;
            }
        }
    }

    Ok(Experiment {
        verb,
        function,
        programs,
        inverter_names: cfg.inverters.clone(),
        radii,
        c,
        measurement,
        thresholds: cfg.thresholds,
        rule: cfg.classifier,
        set,
    })
}

fn fraction(count: u64, total: u64, exact: bool, confidence: f64) -> Result<Measured> {
    if exact {
        Ok(Measured::Exact(num_rational::BigRational::new(count.into(), total.into())))
    } else {
        Measured::sampled(count, total, confidence)
    }
}

fn classified(profile: &DensityProfile, rule: &ClassifierRule) -> Result<ProfileDoc> {
    let class = match strata::classify_convergence(profile, LimitTarget::Auto, rule) {
        Ok(r) => Some(r),
        Err(Error::TooFewPoints { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(ProfileDoc::new(profile, class.as_ref()))
}

/// Runs a prepared experiment. Nothing is written.
pub fn run(exp: &Experiment) -> Result<Report> {
    let m = &exp.measurement;
    let metadata = Metadata::new(exp.verb.as_str(), exp.function.name(), &exp.inverter_names, &exp.radii, &exp.c, m, exp.thresholds, exp.rule);
    let mut report = Report::new(metadata);
    let f = &exp.function;
    let check = |p: &InverterProgram, c: f64| reductions::definition_check(p, f, &exp.radii, c, exp.thresholds, m, &exp.rule);

    match exp.verb {
        Verb::Density => {
            if let Some(set) = &exp.set {
                let mode = match m.mode {
                    Mode::Exact => DensityMode::Exact { cap: m.sphere_cap },
                    Mode::Sampled => DensityMode::Sampled { samples: m.inputs, seed: m.seed, confidence: m.confidence },
                };
                report.profiles.push(classified(&strata::density_profile(set, &exp.radii, &mode)?, &exp.rule)?);
            }
            for (_, p) in &exp.programs {
                for &c in &exp.c {
                    report.profiles.push(CheckDoc::from(&check(p, c)?).success_profile);
                }
            }
        }
        Verb::Check | Verb::Amplify => {
            for (pc, p) in &exp.programs {
                let cs = pc.map(|c| vec![c]).unwrap_or_else(|| exp.c.clone());
                for c in cs {
                    let doc = CheckDoc::from(&check(p, c)?);
                    report.profiles.push(doc.success_profile.clone());
                    report.checks.push(doc);
                }
            }
        }
        Verb::Delta => {
            for (_, p) in &exp.programs {
                for &n in &exp.radii {
                    let (deltas, _) = reductions::input_deltas(p, f, n, m)?;
                    report.deltas.extend(deltas.iter().map(|d| DeltaRow::new(p.name(), d)));
                }
            }
        }
        Verb::Ratio => {
            for (_, p) in &exp.programs {
                let mut per_c: Vec<Vec<DensityValue>> = vec![Vec::new(); exp.c.len()];
                for &n in &exp.radii {
                    let (deltas, whole) = reductions::input_deltas(p, f, n, m)?;
                    let ratios: Vec<_> = deltas.iter().map(reductions::ratio_from_delta).collect();
                    report.ratios.extend(ratios.iter().map(|r| RatioRow::new(p.name(), r)));
                    for (i, &c) in exp.c.iter().enumerate() {
                        let fast = ratios.iter().filter(|r| r.ratio.at_most_power(n, c)).count() as u64;
                        let value = fraction(fast, ratios.len() as u64, whole && m.mode == Mode::Exact, m.confidence)?;
                        per_c[i].push(DensityValue { n, value });
                    }
                }
                for (i, points) in per_c.into_iter().enumerate() {
                    let label = format!("ratio_at_most_n^c({},{},c={})", p.name(), f.name(), exp.c[i]);
                    report.profiles.push(classified(&DensityProfile::new(label, points)?, &exp.rule)?);
                }
            }
        }
    }
    Ok(report)
}

/// Writes `<stem>.json` and `<stem>.csv` into `dir`. Both documents are
/// rendered before either file is created.
pub fn write_pair(dir: &Path, stem: &str, json: &str, csv: &str) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let paths = vec![dir.join(format!("{stem}.json")), dir.join(format!("{stem}.csv"))];
    for (path, body) in paths.iter().zip([json, csv]) {
        std::fs::write(path, body).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(paths)
}

/// Validates, runs and writes one experiment.
pub fn run_experiment(verb: Verb, cfg: &ExperimentConfig, out: &Path) -> Result<(Report, Vec<PathBuf>)> {
    let exp = prepare(verb, cfg)?;
    let report = run(&exp)?;
    let (json, csv) = (report.to_json()?, report.to_csv()?);
    let paths = write_pair(out, verb.as_str(), &json, &csv)?;
    Ok((report, paths))
}

#[derive(Debug, Parser)]
#[command(name = "gencase", version, about = "Generic-case inversion experiments on one-way-function candidates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Density profiles of success sets (or of a reference set) with classifications.
    Density(RunArgs),
    /// Per-input success probability tables.
    Delta(RunArgs),
    /// Definition checks with verdicts per hardness condition.
    Check(RunArgs),
    /// Definition checks of the repetition-amplified inverters.
    Amplify(RunArgs),
    /// Achievement ratios per input and the density of `{R ≤ n^c}`.
    Ratio(RunArgs),
    /// Aligns the density profiles of two or more reports.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, conflicts_with = "sampled")]
    exact: bool,
    #[arg(long)]
    sampled: bool,
    /// Worker threads (results do not depend on it).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[arg(num_args = 2.., required = true)]
    reports: Vec<PathBuf>,
    /// Write compare.json and compare.csv here instead of printing CSV.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn run_verb(verb: Verb, args: &RunArgs) -> Result<String> {
    let mut cfg = ExperimentConfig::load(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.exact {
        cfg.mode = Mode::Exact;
    }
    if args.sampled {
        cfg.mode = Mode::Sampled;
    }
    let out = args.out.clone().or_else(|| cfg.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    let go = || run_experiment(verb, &cfg, &out);
    let (report, paths) = match args.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(e.to_string()))?
            .install(go)?,
        None => go()?,
    };
    let mut summary = String::new();
    for p in &report.profiles {
        let class = p.classification.as_ref().map(|c| c.class.as_str()).unwrap_or("unclassified");
        summary.push_str(&format!("{}: {class}\n", p.set_label));
    }
    for c in &report.checks {
        let v = &c.verdicts;
        let flag = |v: &reductions::Verdict| if v.is_violated() { "violated" } else { "ok" };
        summary.push_str(&format!(
            "{} c={}: hard_almost_all {} hard_large_set {} partial_strong {} partial_weak {}\n",
            c.inverter,
            c.c,
            flag(&v.hard_almost_all),
            flag(&v.hard_large_set),
            flag(&v.partial_strong),
            flag(&v.partial_weak)
        ));
    }
    for p in paths {
        summary.push_str(&format!("wrote {}\n", p.display()));
    }
    Ok(summary)
}

fn run_compare(args: &CompareArgs) -> Result<String> {
    let mut loaded = Vec::new();
    let mut names = Vec::new();
    for path in &args.reports {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        loaded.push(report::parse_report(&text)?);
        names.push(path.display().to_string());
    }
    let cmp = report::compare_profiles(&names, &loaded)?;
    let csv = cmp.to_csv()?;
    match &args.out {
        Some(dir) => {
            let paths = write_pair(dir, "compare", &cmp.to_json()?, &csv)?;
            Ok(paths.iter().map(|p| format!("wrote {}\n", p.display())).collect())
        }
        None => Ok(csv),
    }
}

/// Entry point behind the `gencase` binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Density(a) => run_verb(Verb::Density, a),
        Command::Delta(a) => run_verb(Verb::Delta, a),
        Command::Check(a) => run_verb(Verb::Check, a),
        Command::Amplify(a) => run_verb(Verb::Amplify, a),
        Command::Ratio(a) => run_verb(Verb::Ratio, a),
        Command::Compare(a) => run_compare(a),
    };
    match result {
        Ok(text) => {
            print!("{text}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("gencase: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
candidate = "identity"
inverters = ["brute_force"]
n_min = 2
n_max = 5
seed = 7
"#;

    #[test]
    fn parses_defaults_and_variants() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.radii(), vec![2, 3, 4, 5]);
        assert_eq!(cfg.c_values(), vec![1.0]);
        assert_eq!(cfg.fuel(), FuelSchedule::Absolute(1 << 20));
        assert_eq!(cfg.mode, Mode::Exact);
        let cfg = ExperimentConfig::from_toml(&format!("{BASE}c = [0.5, 2]\nfuel = {{ coeff = 3, degree = 2 }}\n[classifier]\nd_max = 6.0\n")).unwrap();
        assert_eq!(cfg.c_values(), vec![0.5, 2.0]);
        assert_eq!(cfg.fuel(), FuelSchedule::Poly { coeff: 3, degree: 2, offset: 0 });
        assert_eq!(cfg.classifier.d_max, 6.0);
        assert_eq!(cfg.classifier.strong_ratio, ClassifierRule::default().strong_ratio);
    }

    #[test]
    fn seed_is_mandatory_and_fields_are_checked() {
        let no_seed = BASE.replace("seed = 7\n", "");
        assert!(matches!(ExperimentConfig::from_toml(&no_seed), Err(Error::Config(_))));
        assert!(matches!(ExperimentConfig::from_toml(&format!("{BASE}sede = 1\n")), Err(Error::Config(_))));
    }

    #[test]
    fn prepare_rejects_bad_configs() {
        let cfg = |extra: &str| ExperimentConfig::from_toml(&format!("{BASE}{extra}")).unwrap();
        let unknown = ExperimentConfig::from_toml(&BASE.replace("brute_force", "oracle")).unwrap();
        assert!(matches!(prepare(Verb::Check, &unknown), Err(Error::UnknownName { .. })));
        assert_eq!(exit_code(&prepare(Verb::Check, &unknown).err().unwrap()), EXIT_CONFIG);
        assert!(prepare(Verb::Check, &cfg("c = -1.0\n")).is_err());
        let mult = ExperimentConfig::from_toml(&BASE.replace("identity", "mult")).unwrap();
        assert_eq!(exit_code(&prepare(Verb::Check, &mult).err().unwrap()), EXIT_CONFIG);
        let big = ExperimentConfig::from_toml(&BASE.replace("n_max = 5", "n_max = 30")).unwrap();
        assert_eq!(exit_code(&prepare(Verb::Check, &big).err().unwrap()), EXIT_CAP);
        let partial = ExperimentConfig::from_toml(&BASE.replace("brute_force", "never_halt")).unwrap();
        assert_eq!(exit_code(&prepare(Verb::Amplify, &partial).err().unwrap()), EXIT_CONFIG);
    }

    #[test]
    fn density_report_for_brute_force() {
        let exp = prepare(Verb::Density, &ExperimentConfig::from_toml(BASE).unwrap()).unwrap();
        let r = run(&exp).unwrap();
        assert_eq!(r.profiles.len(), 1);
        assert!(r.profiles[0].points.iter().all(|p| p.value_num.as_deref() == Some("1") && p.value_den.as_deref() == Some("1")));
        assert!(r.metadata.plans.iter().any(|p| p.n == 4 && p.k == 64 && p.epsilon == 0.125));
    }

    #[test]
    fn reference_set_density() {
        let cfg = ExperimentConfig::from_toml(&format!("{}set = \"first_bit_zero\"\n", BASE.replace("inverters = [\"brute_force\"]\n", ""))).unwrap();
        let r = run(&prepare(Verb::Density, &cfg).unwrap()).unwrap();
        assert!(r.profiles[0].points.iter().all(|p| p.value_float == 0.5));
    }
}
