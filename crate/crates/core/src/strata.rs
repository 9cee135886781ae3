//! Spherical stratification of `{0,1}^*`, uniform spherical measures,
//! density functions and their convergence classification.

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::meter::Meter;
use crate::seed;
use crate::stats::{self, linear_fit};

/// Default largest radius for which exact enumeration is allowed.
pub const DEFAULT_SPHERE_CAP: usize = 24;

/// Default step budget for a single membership query.
pub const DEFAULT_PREDICATE_BUDGET: u64 = 1 << 40;

/// `|I_n| = 2^n`, exactly.
pub fn sphere_size(n: usize) -> BigInt {
    BigInt::one() << n
}

/// `2^n` as an exact rational, the denominator of every exact density on `I_n`.
pub type MembershipFn = dyn Fn(&BitString, &mut Meter) -> Result<bool> + Send + Sync;

#[derive(Clone)]
enum SetKind {
    Explicit(Arc<HashSet<BitString>>),
    Predicate(Arc<MembershipFn>),
    Complement(Arc<InputSetSpec>),
}

/// A set `R ⊆ I`, given either as an explicit finite set or by a decidable,
/// step-bounded membership predicate.
#[derive(Clone)]
pub struct InputSetSpec {
    label: String,
    kind: SetKind,
    budget: u64,
    sampled: bool,
}

impl fmt::Debug for InputSetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            SetKind::Explicit(s) => format!("explicit({} strings)", s.len()),
            SetKind::Predicate(_) => "predicate".to_string(),
            SetKind::Complement(_) => "complement".to_string(),
        };
        f.debug_struct("InputSetSpec").field("label", &self.label).field("kind", &kind).finish()
    }
}

impl InputSetSpec {
    pub fn explicit(label: impl Into<String>, members: impl IntoIterator<Item = BitString>) -> Self {
        Self {
            label: label.into(),
            kind: SetKind::Explicit(Arc::new(members.into_iter().collect())),
            budget: DEFAULT_PREDICATE_BUDGET,
            sampled: false,
        }
    }

    pub fn predicate<F>(label: impl Into<String>, f: F) -> Self
    where
        F: Fn(&BitString, &mut Meter) -> Result<bool> + Send + Sync + 'static,
    {
        Self { label: label.into(), kind: SetKind::Predicate(Arc::new(f)), budget: DEFAULT_PREDICATE_BUDGET, sampled: false }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = budget;
        self
    }

    /// Marks membership as coming from sampled measurements.
    pub fn mark_sampled(mut self) -> Self {
        self.sampled = true;
        self
    }

    pub fn is_sampled(&self) -> bool {
        match &self.kind {
            SetKind::Complement(inner) => self.sampled || inner.is_sampled(),
            _ => self.sampled,
        }
    }

    pub fn complement(&self) -> Self {
        Self {
            label: format!("not({})", self.label),
            kind: SetKind::Complement(Arc::new(self.clone())),
            budget: self.budget,
            sampled: false,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Members of an explicit set (`None` for predicates and complements).
    pub fn explicit_members(&self) -> Option<&HashSet<BitString>> {
        match &self.kind {
            SetKind::Explicit(s) => Some(s),
            _ => None,
        }
    }

    pub fn contains(&self, x: &BitString) -> Result<bool> {
        match &self.kind {
            SetKind::Explicit(s) => Ok(s.contains(x)),
            SetKind::Complement(inner) => inner.contains(x).map(|b| !b),
            SetKind::Predicate(f) => {
                let mut meter = Meter::new(self.budget);
                f(x, &mut meter).map_err(|e| match e {
                    Error::OutOfFuel => Error::PredicateFuel { label: self.label.clone(), budget: self.budget },
                    other => other,
                })
            }
        }
    }

    // Reference sets.

    pub fn all() -> Self {
        Self::predicate("all", |_, _| Ok(true))
    }

    pub fn empty() -> Self {
        Self::predicate("empty", |_, _| Ok(false))
    }

    pub fn first_bit_zero() -> Self {
        Self::predicate("first_bit_zero", |x, m| {
            m.tick()?;
            Ok(!x.is_empty() && !x.get(0))
        })
    }

    pub fn containing(pattern: &BitString) -> Self {
        let p = pattern.clone();
        Self::predicate(format!("contains_{pattern}"), move |x, m| {
            m.tick_n((x.len() * p.len().max(1)) as u64)?;
            Ok(x.contains_pattern(&p))
        })
    }

    /// Everything except the all-zeros string of each length.
    pub fn not_all_zeros() -> Self {
        Self::predicate("not_all_zeros", |x, m| {
            m.tick_n(x.len() as u64)?;
            Ok(x.count_ones() > 0)
        })
    }

    /// Looks up a reference set by name: `all`, `empty`, `first_bit_zero`,
    /// `not_all_zeros`, or `contains_<bits>`.
    pub fn reference(name: &str) -> Result<Self> {
        match name {
            "all" => Ok(Self::all()),
            "empty" => Ok(Self::empty()),
            "first_bit_zero" => Ok(Self::first_bit_zero()),
            "not_all_zeros" => Ok(Self::not_all_zeros()),
            other => match other.strip_prefix("contains_") {
                Some(bits) if !bits.is_empty() => Ok(Self::containing(&bits.parse()?)),
                _ => Err(Error::UnknownName { kind: "reference set", name: other.to_string() }),
            },
        }
    }
}

/// A measured probability: exact rational, or a sampled mean with a
/// Hoeffding interval.
#[derive(Clone, Debug, PartialEq)]
pub enum Measured {
    Exact(BigRational),
    Sampled { value: f64, half_width: f64, confidence: f64, samples: u64 },
}

impl Measured {
    pub fn sampled(hits: u64, samples: u64, confidence: f64) -> Result<Self> {
        let half_width = stats::hoeffding_half_width(samples, confidence)?;
        Ok(Measured::Sampled { value: hits as f64 / samples as f64, half_width, confidence, samples })
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            Measured::Exact(r) => ratio_to_f64(r),
            Measured::Sampled { value, .. } => *value,
        }
    }

    pub fn exact(&self) -> Option<&BigRational> {
        match self {
            Measured::Exact(r) => Some(r),
            _ => None,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Measured::Exact(_))
    }

    pub fn half_width(&self) -> f64 {
        match self {
            Measured::Exact(_) => 0.0,
            Measured::Sampled { half_width, .. } => *half_width,
        }
    }

    pub fn samples(&self) -> u64 {
        match self {
            Measured::Exact(_) => 0,
            Measured::Sampled { samples, .. } => *samples,
        }
    }

    pub fn mode(&self) -> Mode {
        match self {
            Measured::Exact(_) => Mode::Exact,
            Measured::Sampled { .. } => Mode::Sampled,
        }
    }

    /// `|target - value|`, computed exactly before conversion when possible.
    fn distance_to(&self, target: f64) -> f64 {
        match self {
            Measured::Exact(r) => {
                let t = if target == 1.0 { BigRational::one() } else { BigRational::zero() };
                let d = if &t > r { t - r } else { r - t };
                ratio_to_f64(&d)
            }
            Measured::Sampled { value, .. } => (target - value).abs(),
        }
    }
}

/// Exact-to-float conversion that keeps tiny values (no `1 - 2^-60` → 0 underflow
/// on the numerator/denominator split).
pub fn ratio_to_f64(r: &BigRational) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    match (r.numer().to_f64(), r.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => {
            // Scale both down by a common power of two.
            let shift = r.numer().bits().max(r.denom().bits()).saturating_sub(1000);
            let a = (r.numer() >> shift).to_f64().unwrap_or(f64::NAN);
            let b = (r.denom() >> shift).to_f64().unwrap_or(f64::NAN);
            a / b
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Sampled,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Sampled => "sampled",
        })
    }
}

/// `u_n(R ∩ I_n)` at one radius.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityValue {
    pub n: usize,
    pub value: Measured,
}

/// Refuses exact enumeration of `I_n` past the cap.
pub fn check_sphere_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n >= 64 {
        return Err(Error::SphereCapExceeded { n, cap: cap.min(63) });
    }
    Ok(())
}

/// `|R ∩ I_n| / 2^n` by full enumeration of the sphere.
pub fn exact_density(set: &InputSetSpec, n: usize, cap: usize) -> Result<DensityValue> {
    check_sphere_cap(n, cap)?;
    let count = (0..(1u64 << n))
        .into_par_iter()
        .map(|i| set.contains(&BitString::from_u64(i, n)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let value = BigRational::new(BigInt::from(count), sphere_size(n));
    Ok(DensityValue { n, value: Measured::Exact(value) })
}

/// Monte Carlo estimate of `u_n(R)` with a two-sided Hoeffding interval.
/// Sample `i` is drawn from the stream keyed by `(seed, sphere, n, i)`.
pub fn mc_density(set: &InputSetSpec, n: usize, samples: u64, seed: u64, confidence: f64) -> Result<DensityValue> {
    if samples == 0 {
        return Err(Error::InvalidArgument("mc_density needs at least one sample".into()));
    }
    stats::check_confidence(confidence)?;
    let hits = (0..samples)
        .into_par_iter()
        .map(|i| set.contains(&seed::sphere_sample(seed, n, i)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(DensityValue { n, value: Measured::sampled(hits, samples, confidence)? })
}

#[derive(Clone, Debug, PartialEq)]
pub enum DensityMode {
    Exact { cap: usize },
    Sampled { samples: u64, seed: u64, confidence: f64 },
}

impl Default for DensityMode {
    fn default() -> Self {
        DensityMode::Exact { cap: DEFAULT_SPHERE_CAP }
    }
}

/// The density function `δ_R(n)` over a range of radii.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityProfile {
    label: String,
    points: Vec<DensityValue>,
}

impl DensityProfile {
    pub fn new(label: impl Into<String>, points: Vec<DensityValue>) -> Result<Self> {
        if points.windows(2).any(|w| w[0].n >= w[1].n) {
            return Err(Error::InvalidArgument("profile radii must be strictly increasing".into()));
        }
        Ok(Self { label: label.into(), points })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[DensityValue] {
        &self.points
    }

    pub fn radii(&self) -> Vec<usize> {
        self.points.iter().map(|p| p.n).collect()
    }

    pub fn get(&self, n: usize) -> Option<&DensityValue> {
        self.points.iter().find(|p| p.n == n)
    }
}

pub fn density_profile(set: &InputSetSpec, radii: &[usize], mode: &DensityMode) -> Result<DensityProfile> {
    if radii.is_empty() {
        return Err(Error::InvalidArgument("density profile needs at least one radius".into()));
    }
    let points = radii
        .iter()
        .map(|&n| match mode {
            DensityMode::Exact { cap } => exact_density(set, n, *cap),
            DensityMode::Sampled { samples, seed, confidence } => mc_density(set, n, *samples, *seed, *confidence),
        })
        .collect::<Result<Vec<_>>>()?;
    DensityProfile::new(set.label(), points)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceClass {
    StronglyGeneric,
    Generic,
    Negligible,
    StronglyNegligible,
    Inconclusive,
}

impl ConvergenceClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            ConvergenceClass::StronglyGeneric => "strongly_generic",
            ConvergenceClass::Generic => "generic",
            ConvergenceClass::Negligible => "negligible",
            ConvergenceClass::StronglyNegligible => "strongly_negligible",
            ConvergenceClass::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for ConvergenceClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimitTarget {
    Zero,
    One,
    Auto,
}

/// Finite-window proxy for superpolynomial convergence.
///
/// The residual `r(n) = |ρ - δ(n)|` is fitted two ways on a log scale:
/// a polynomial model `log r = a - d log n` with `d` restricted to
/// `[0, d_max]`, and an exponential model `log r = a - b n`. The set is
/// called strongly generic/negligible when the exponential model decays
/// (`b > 0`) and its residual sum of squares is at least `strong_ratio`
/// times smaller than the polynomial one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierRule {
    pub d_max: f64,
    pub strong_ratio: f64,
    /// The last residual must be below this for the limit to count as matched.
    pub tail_tolerance: f64,
    /// Minimum decay exponent of the polynomial fit for "converging".
    pub min_decay: f64,
    /// Minimum R² of the better model; noisier profiles are inconclusive.
    pub min_r_squared: f64,
}

impl Default for ClassifierRule {
    fn default() -> Self {
        Self { d_max: 8.0, strong_ratio: 10.0, tail_tolerance: 0.25, min_decay: 0.1, min_r_squared: 0.7 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    #[serde(rename = "class")]
    pub class: ConvergenceClass,
    /// Limit estimate `ρ`: exactly 0 or 1 unless inconclusive, where it is the last observed value.
    pub rho: f64,
    /// Fitted polynomial decay exponent (clamped to `[0, d_max]`).
    pub d: f64,
    /// Residual sum of squares of the better-fitting model.
    pub residual: f64,
    pub poly_rss: f64,
    pub exp_rate: f64,
    pub exp_rss: f64,
    pub radii: Vec<usize>,
    pub rule: ClassifierRule,
    pub note: String,
}

/// Least squares for `y = a - d x` with `d` constrained to `[0, d_max]`.
fn constrained_poly_fit(xs: &[f64], ys: &[f64], d_max: f64) -> (f64, f64, f64) {
    let free = linear_fit(xs, ys);
    let d = (-free.slope).clamp(0.0, d_max);
    if d == -free.slope {
        return (d, free.rss, free.r_squared);
    }
    let m = xs.len() as f64;
    let a = ys.iter().zip(xs).map(|(y, x)| y + d * x).sum::<f64>() / m;
    let rss: f64 = ys.iter().zip(xs).map(|(y, x)| (y - (a - d * x)).powi(2)).sum();
    let my = ys.iter().sum::<f64>() / m;
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if syy > 0.0 { 1.0 - rss / syy } else { 1.0 };
    (d, rss, r2)
}

pub fn classify_convergence(profile: &DensityProfile, target: LimitTarget, rule: &ClassifierRule) -> Result<ConvergenceReport> {
    const MIN_POINTS: usize = 4;
    let pts = profile.points();
    if pts.len() < MIN_POINTS {
        return Err(Error::TooFewPoints { got: pts.len(), need: MIN_POINTS });
    }
    let last = pts.last().expect("nonempty").value.as_f64();
    let rho = match target {
        LimitTarget::One => 1.0,
        LimitTarget::Zero => 0.0,
        LimitTarget::Auto => {
            if last >= 0.5 {
                1.0
            } else {
                0.0
            }
        }
    };
    let (strong, weak) = if rho == 1.0 {
        (ConvergenceClass::StronglyGeneric, ConvergenceClass::Generic)
    } else {
        (ConvergenceClass::StronglyNegligible, ConvergenceClass::Negligible)
    };
    let radii = profile.radii();
    let residuals: Vec<f64> = pts.iter().map(|p| p.value.distance_to(rho)).collect();
    // Sampled points whose residual is inside their own interval cannot be
    // told apart from the limit.
    let unresolved: Vec<bool> = pts.iter().zip(&residuals).map(|(p, r)| *r <= p.value.half_width()).collect();

    let mut report = ConvergenceReport {
        class: ConvergenceClass::Inconclusive,
        rho: last,
        d: 0.0,
        residual: f64::NAN,
        poly_rss: f64::NAN,
        exp_rate: 0.0,
        exp_rss: f64::NAN,
        radii: radii.clone(),
        rule: *rule,
        note: String::new(),
    };

    let last_residual = *residuals.last().expect("nonempty");
    if last_residual > rule.tail_tolerance {
        report.note = format!("last residual {last_residual:.3e} exceeds tail tolerance");
        return Ok(report);
    }

    let sampled_tail = pts.last().map(|p| !p.value.is_exact()).unwrap_or(false) && *unresolved.last().unwrap();
    if sampled_tail {
        report.class = weak;
        report.rho = rho;
        report.note = "tail is within sampling resolution; rate not resolvable".into();
        return Ok(report);
    }

    if let Some(first_zero) = residuals.iter().position(|r| *r == 0.0) {
        if residuals[first_zero..].iter().all(|r| *r == 0.0) {
            report.class = strong;
            report.rho = rho;
            report.residual = 0.0;
            report.d = rule.d_max;
            report.note = format!("density equals its limit exactly from n = {}", radii[first_zero]);
        } else {
            report.note = "zero residual followed by nonzero residuals".into();
        }
        return Ok(report);
    }

    let ns: Vec<f64> = radii.iter().map(|&n| n as f64).collect();
    if ns.iter().any(|&n| n <= 0.0) {
        return Err(Error::InvalidArgument("convergence fit needs radii >= 1".into()));
    }
    let log_ns: Vec<f64> = ns.iter().map(|n| n.ln()).collect();
    let log_r: Vec<f64> = residuals.iter().map(|r| r.ln()).collect();

    let (d, poly_rss, poly_r2) = constrained_poly_fit(&log_ns, &log_r, rule.d_max);
    let exp = linear_fit(&ns, &log_r);
    let exp_rate = -exp.slope;
    report.d = d;
    report.poly_rss = poly_rss;
    report.exp_rate = exp_rate;
    report.exp_rss = exp.rss;

    let exp_wins = exp_rate > 0.0 && exp.rss * rule.strong_ratio < poly_rss;
    let (best_rss, best_r2) = if exp_wins { (exp.rss, exp.r_squared) } else { (poly_rss, poly_r2) };
    report.residual = best_rss;

    if d < rule.min_decay && !exp_wins {
        report.note = format!("residual does not decay (d = {d:.3})");
        return Ok(report);
    }
    if best_r2 < rule.min_r_squared {
        report.note = format!("fit quality R^2 = {best_r2:.3} below {}", rule.min_r_squared);
        return Ok(report);
    }
    report.rho = rho;
    if exp_wins {
        report.class = strong;
        report.note = format!("exponential decay rate {exp_rate:.4} beats n^-d for d <= {}", rule.d_max);
    } else {
        report.class = weak;
        report.note = format!("polynomial decay n^-{d:.3}");
    }
    Ok(report)
}
