//! Report documents written by the experiment runner.
//!
//! Every document is a plain serde structure with a fixed field order and
//! no maps, timestamps or host data, so the same inputs always serialize
//! to the same bytes. Exact values carry their numerator and denominator as
//! decimal strings next to a float rendering for plotting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{DeltaEstimate, FuelSchedule, Measurement};
use crate::reductions::{AchievementRatio, ChernoffPlan, DefinitionReport, RadiusCheck, Thresholds, Verdict};
use crate::strata::{ClassifierRule, ConvergenceReport, DensityProfile, Measured, Mode};

/// One measured density or probability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointDoc {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_num: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value_den: Option<String>,
    pub value_float: f64,
    pub half_width: f64,
    pub samples: u64,
}

impl PointDoc {
    pub fn new(n: usize, m: &Measured) -> Self {
        let (value_num, value_den) = match m.exact() {
            Some(r) => (Some(r.numer().to_string()), Some(r.denom().to_string())),
            None => (None, None),
        };
        Self { n, value_num, value_den, value_float: m.as_f64(), half_width: m.half_width(), samples: m.samples() }
    }

    pub fn is_exact(&self) -> bool {
        self.value_num.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationDoc {
    pub class: String,
    /// `null` when undefined for the class (for example an inconclusive fit).
    pub rho: Option<f64>,
    pub d: Option<f64>,
    pub residual: Option<f64>,
    pub poly_rss: Option<f64>,
    pub exp_rate: Option<f64>,
    pub exp_rss: Option<f64>,
    pub note: String,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl From<&ConvergenceReport> for ClassificationDoc {
    fn from(r: &ConvergenceReport) -> Self {
        Self {
            class: r.class.as_str().to_string(),
            rho: finite(r.rho),
            d: finite(r.d),
            residual: finite(r.residual),
            poly_rss: finite(r.poly_rss),
            exp_rate: finite(r.exp_rate),
            exp_rss: finite(r.exp_rss),
            note: r.note.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileDoc {
    pub set_label: String,
    pub mode: Mode,
    pub points: Vec<PointDoc>,
    /// Absent when the profile is too short to classify.
    pub classification: Option<ClassificationDoc>,
}

impl ProfileDoc {
    pub fn new(profile: &DensityProfile, classification: Option<&ConvergenceReport>) -> Self {
        let points: Vec<PointDoc> = profile.points().iter().map(|p| PointDoc::new(p.n, &p.value)).collect();
        let mode = if points.iter().all(PointDoc::is_exact) { Mode::Exact } else { Mode::Sampled };
        Self { set_label: profile.label().to_string(), mode, points, classification: classification.map(Into::into) }
    }

    pub fn point(&self, n: usize) -> Option<&PointDoc> {
        self.points.iter().find(|p| p.n == n)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanDoc {
    pub n: usize,
    pub c: f64,
    pub k: u64,
    pub epsilon: f64,
}

impl From<&ChernoffPlan> for PlanDoc {
    fn from(p: &ChernoffPlan) -> Self {
        Self { n: p.n, c: p.c, k: p.k, epsilon: p.epsilon }
    }
}

/// Run parameters recorded in every report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub version: String,
    pub verb: String,
    pub candidate: String,
    pub inverters: Vec<String>,
    pub radii: Vec<usize>,
    pub c: Vec<f64>,
    pub mode: Mode,
    pub seed: u64,
    pub sphere_cap: usize,
    pub tape_cap: usize,
    pub fuel: FuelSchedule,
    pub trials: u64,
    pub inputs: u64,
    pub confidence: f64,
    pub thresholds: Thresholds,
    pub classifier: ClassifierRule,
    pub plans: Vec<PlanDoc>,
}

impl Metadata {
    pub fn new(verb: &str, candidate: &str, inverters: &[String], radii: &[usize], c: &[f64], m: &Measurement, thresholds: Thresholds, rule: ClassifierRule) -> Self {
        let plans = c
            .iter()
            .flat_map(|&c| radii.iter().filter_map(move |&n| crate::reductions::chernoff_plan(n, c).ok()))
            .map(|p| PlanDoc::from(&p))
            .collect();
        Self {
            version: crate::VERSION.to_string(),
            verb: verb.to_string(),
            candidate: candidate.to_string(),
            inverters: inverters.to_vec(),
            radii: radii.to_vec(),
            c: c.to_vec(),
            mode: m.mode,
            seed: m.seed,
            sphere_cap: m.sphere_cap,
            tape_cap: m.tape_cap,
            fuel: m.fuel,
            trials: m.trials,
            inputs: m.inputs,
            confidence: m.confidence,
            thresholds,
            classifier: rule,
            plans,
        }
    }
}

/// A row of a per-input delta table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeltaRow {
    pub inverter: String,
    pub x: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_num: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_den: Option<String>,
    pub delta: f64,
    pub half_width: f64,
    pub trials: u64,
    pub mean_steps: f64,
    pub outcome_histogram: String,
}

impl DeltaRow {
    pub fn new(inverter: &str, d: &DeltaEstimate) -> Self {
        let p = PointDoc::new(d.n(), &d.delta);
        Self {
            inverter: inverter.to_string(),
            x: d.x.to_string(),
            n: d.n(),
            delta_num: p.value_num,
            delta_den: p.value_den,
            delta: p.value_float,
            half_width: p.half_width,
            trials: d.trials,
            mean_steps: d.mean_steps,
            outcome_histogram: d.histogram.to_string(),
        }
    }
}

fn ratio_field(r: &crate::reductions::RatioValue) -> String {
    match r {
        crate::reductions::RatioValue::Infinite => "inf".to_string(),
        crate::reductions::RatioValue::Finite { exact: Some(q), .. } if q.is_integer() => q.numer().to_string(),
        crate::reductions::RatioValue::Finite { value, .. } => format!("{value}"),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioRow {
    pub inverter: String,
    pub x: String,
    pub n: usize,
    pub delta: f64,
    pub t_max: Option<u64>,
    pub mean_halting_steps: Option<f64>,
    /// `T / δ` with `T` the worst halting time; `"inf"` when `δ = 0`.
    pub ratio: String,
    /// Mean halting time over `δ`.
    pub expected_ratio: String,
    pub no_halting_run: bool,
}

impl RatioRow {
    pub fn new(inverter: &str, r: &AchievementRatio) -> Self {
        Self {
            inverter: inverter.to_string(),
            x: r.x.to_string(),
            n: r.x.len(),
            delta: r.delta.as_f64(),
            t_max: r.t_max,
            mean_halting_steps: r.mean_halting_steps,
            ratio: ratio_field(&r.ratio),
            expected_ratio: ratio_field(&r.expected_ratio),
            no_halting_run: r.no_halting_run,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckRowDoc {
    pub n: usize,
    pub success_density: PointDoc,
    pub hard_density: PointDoc,
    pub ratio_density: PointDoc,
    pub ratio_hard_density: PointDoc,
    pub aggregate_success: PointDoc,
    pub plan: Option<PlanDoc>,
    pub inputs_measured: u64,
}

impl From<&RadiusCheck> for CheckRowDoc {
    fn from(r: &RadiusCheck) -> Self {
        Self {
            n: r.n,
            success_density: PointDoc::new(r.n, &r.success_density),
            hard_density: PointDoc::new(r.n, &r.hard_density),
            ratio_density: PointDoc::new(r.n, &r.ratio_density),
            ratio_hard_density: PointDoc::new(r.n, &r.ratio_hard_density),
            aggregate_success: PointDoc::new(r.n, &r.aggregate),
            plan: r.plan.as_ref().map(Into::into),
            inputs_measured: r.inputs_measured,
        }
    }
}

/// Verdict per hardness condition. Keys name the condition the inverter is
/// tested against; a `violated` verdict lists the radii where it fails.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictsDoc {
    /// Classical: averaged success `< n^{-strong}`.
    pub classical: Verdict,
    /// Strongly generic hardness: success set `{δ > n^{-c}}` of density `< n^{-strong}`.
    pub hard_almost_all: Verdict,
    /// Generic hardness: hard set `{δ < n^{-c}}` of density `≥ n^{-weak}`.
    pub hard_large_set: Verdict,
    /// Partial, strong: `{R ≤ n^c}` of density `< n^{-strong}`.
    pub partial_strong: Verdict,
    /// Partial, weak: `{R > n^c}` of density `≥ n^{-weak}`.
    pub partial_weak: Verdict,
    /// Success set classified as strongly negligible.
    pub strongly_negligible: Verdict,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckDoc {
    pub inverter: String,
    pub function: String,
    pub c: f64,
    /// The tested grid: thresholds `n^{-strong_degree}` and `n^{-weak_degree}` at this `c`.
    pub thresholds: Thresholds,
    pub rows: Vec<CheckRowDoc>,
    pub success_profile: ProfileDoc,
    pub ratio_profile: ProfileDoc,
    pub verdicts: VerdictsDoc,
}

impl From<&DefinitionReport> for CheckDoc {
    fn from(r: &DefinitionReport) -> Self {
        Self {
            inverter: r.inverter.clone(),
            function: r.function.clone(),
            c: r.c,
            thresholds: r.thresholds,
            rows: r.rows.iter().map(Into::into).collect(),
            success_profile: ProfileDoc::new(&r.profile_success, r.success_classification.as_ref()),
            ratio_profile: ProfileDoc::new(&r.profile_ratio, r.ratio_classification.as_ref()),
            verdicts: VerdictsDoc {
                classical: r.classical_strong.clone(),
                hard_almost_all: r.generic_strong.clone(),
                hard_large_set: r.generic_weak.clone(),
                partial_strong: r.partial_strong.clone(),
                partial_weak: r.partial_weak.clone(),
                strongly_negligible: r.strongly_negligible_success.clone(),
            },
        }
    }
}

/// Top-level document. Sections a verb does not produce are omitted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub metadata: Metadata,
    pub profiles: Vec<ProfileDoc>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub deltas: Vec<DeltaRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub ratios: Vec<RatioRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckDoc>,
}

impl Report {
    pub fn new(metadata: Metadata) -> Self {
        Self { metadata, profiles: Vec::new(), deltas: Vec::new(), ratios: Vec::new(), checks: Vec::new() }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Row-per-radius plot data for every profile, or the delta/ratio table
    /// when the report has one.
    pub fn to_csv(&self) -> Result<String> {
        if !self.deltas.is_empty() {
            return rows_csv(&self.deltas);
        }
        if !self.ratios.is_empty() {
            return rows_csv(&self.ratios);
        }
        if !self.checks.is_empty() {
            return checks_csv(&self.checks);
        }
        profiles_csv(&self.profiles)
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

fn rows_csv<T: Serialize>(rows: &[T]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    finish(w)
}

fn opt(s: &Option<String>) -> &str {
    s.as_deref().unwrap_or("")
}

pub fn profiles_csv(profiles: &[ProfileDoc]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["set_label", "mode", "n", "value_num", "value_den", "value_float", "half_width", "samples", "class"]).map_err(csv_err)?;
    for p in profiles {
        let class = p.classification.as_ref().map(|c| c.class.as_str()).unwrap_or("");
        for pt in &p.points {
            w.write_record([
                p.set_label.as_str(),
                &p.mode.to_string(),
                &pt.n.to_string(),
                opt(&pt.value_num),
                opt(&pt.value_den),
                &pt.value_float.to_string(),
                &pt.half_width.to_string(),
                &pt.samples.to_string(),
                class,
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

fn verdict_str(v: &Verdict) -> &'static str {
    match v {
        Verdict::Violated { .. } => "violated",
        Verdict::Consistent => "consistent",
        Verdict::Untested { .. } => "untested",
    }
}

fn violated_at(v: &Verdict, n: usize) -> &'static str {
    match v {
        Verdict::Violated { at } if at.contains(&n) => "violated",
        Verdict::Untested { .. } => "untested",
        _ => "ok",
    }
}

pub fn checks_csv(checks: &[CheckDoc]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "inverter", "function", "c", "n", "success_density", "hard_density", "ratio_density", "ratio_hard_density", "aggregate_success",
        "half_width", "k", "epsilon", "classical", "hard_almost_all", "hard_large_set", "partial_strong", "partial_weak", "strongly_negligible",
    ])
    .map_err(csv_err)?;
    for c in checks {
        let v = &c.verdicts;
        for r in &c.rows {
            let (k, eps) = r.plan.as_ref().map(|p| (p.k.to_string(), p.epsilon.to_string())).unwrap_or_default();
            w.write_record([
                c.inverter.as_str(),
                &c.function,
                &c.c.to_string(),
                &r.n.to_string(),
                &r.success_density.value_float.to_string(),
                &r.hard_density.value_float.to_string(),
                &r.ratio_density.value_float.to_string(),
                &r.ratio_hard_density.value_float.to_string(),
                &r.aggregate_success.value_float.to_string(),
                &r.success_density.half_width.to_string(),
                &k,
                &eps,
                violated_at(&v.classical, r.n),
                violated_at(&v.hard_almost_all, r.n),
                violated_at(&v.hard_large_set, r.n),
                violated_at(&v.partial_strong, r.n),
                violated_at(&v.partial_weak, r.n),
                verdict_str(&v.strongly_negligible),
            ])
            .map_err(csv_err)?;
        }
    }
    finish(w)
}

/// Profiles read back from a report file.
#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct LoadedReport {
    pub metadata: Metadata,
    pub profiles: Vec<ProfileDoc>,
}

pub fn parse_report(json: &str) -> Result<LoadedReport> {
    serde_json::from_str(json).map_err(|e| Error::Config(format!("not a report document: {e}")))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub set_label: String,
    pub n: usize,
    /// Per report, in argument order.
    pub values: Vec<f64>,
    pub half_widths: Vec<f64>,
    /// `values[i] - values[0]`.
    pub deltas: Vec<f64>,
    /// `|deltas[i]|` is within the combined half-widths of the two runs.
    pub within_half_widths: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Comparison {
    pub reports: Vec<String>,
    pub radii: Vec<usize>,
    pub classes: Vec<Vec<Option<String>>>,
    pub rows: Vec<ComparisonRow>,
}

impl Comparison {
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["set_label".to_string(), "n".to_string()];
        for i in 0..self.reports.len() {
            header.push(format!("value_{i}"));
            header.push(format!("half_width_{i}"));
            if i > 0 {
                header.push(format!("delta_{i}"));
            }
        }
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.set_label.clone(), r.n.to_string()];
            for i in 0..r.values.len() {
                rec.push(r.values[i].to_string());
                rec.push(r.half_widths[i].to_string());
                if i > 0 {
                    rec.push(r.deltas[i].to_string());
                }
            }
            w.write_record(&rec).map_err(csv_err)?;
        }
        finish(w)
    }

    /// True when every run agrees with the first within half-widths.
    pub fn all_within_half_widths(&self) -> bool {
        self.rows.iter().all(|r| r.within_half_widths.iter().all(|&b| b))
    }
}

/// Aligns the `i`-th profile of every report on the radii they share.
///
/// Profiles are matched by position; the first report is the baseline for
/// the deltas.
pub fn compare_profiles(names: &[String], reports: &[LoadedReport]) -> Result<Comparison> {
    if reports.len() < 2 || names.len() != reports.len() {
        return Err(Error::InvalidArgument("compare needs at least two reports".into()));
    }
    let count = reports.iter().map(|r| r.profiles.len()).min().unwrap_or(0);
    if count == 0 {
        return Err(Error::InvalidArgument("a report has no density profiles".into()));
    }
    let mut radii: Vec<usize> = reports[0].profiles[0].points.iter().map(|p| p.n).collect();
    for r in reports {
        for p in &r.profiles[..count] {
            radii.retain(|&n| p.point(n).is_some());
        }
    }
    if radii.is_empty() {
        return Err(Error::InvalidArgument("reports share no radius".into()));
    }
    let mut rows = Vec::new();
    let mut classes = Vec::new();
    for i in 0..count {
        classes.push(reports.iter().map(|r| r.profiles[i].classification.as_ref().map(|c| c.class.clone())).collect());
        for &n in &radii {
            let pts: Vec<&PointDoc> = reports.iter().map(|r| r.profiles[i].point(n).expect("radius shared")).collect();
            let values: Vec<f64> = pts.iter().map(|p| p.value_float).collect();
            let half_widths: Vec<f64> = pts.iter().map(|p| p.half_width).collect();
            let deltas: Vec<f64> = values.iter().map(|v| v - values[0]).collect();
            let within = deltas.iter().zip(&half_widths).map(|(d, h)| d.abs() <= h + half_widths[0] + 1e-12).collect();
            rows.push(ComparisonRow { set_label: reports[0].profiles[i].set_label.clone(), n, values, half_widths, deltas, within_half_widths: within });
        }
    }
    Ok(Comparison { reports: names.to_vec(), radii, classes, rows })
}
