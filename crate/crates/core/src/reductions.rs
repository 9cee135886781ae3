//! Constructive reductions between per-input and averaged notions of
//! inversion success: repetition amplification with its Chernoff plan,
//! the averaging split, step-budget clipping, achievement ratios, the
//! aggregate success probability and definition checks.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{BitString, CoinTape};
use crate::error::{Error, Result};
use crate::harness::{
    self, check_tape_cap, run_inverter, CandidateFunction, DeltaEstimate, Halt, InverterKind, InverterProgram, Measurement,
};
use crate::seed;
use crate::strata::{self, ClassifierRule, ConvergenceClass, ConvergenceReport, DensityProfile, DensityValue, LimitTarget, Measured, Mode};

fn check_exponent(c: f64) -> Result<()> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("c = {c} must be a positive real")));
    }
    Ok(())
}

/// `⌈n^e⌉`, exact when `e` is an integer; `None` on overflow.
pub fn ceil_pow(n: usize, e: f64) -> Option<u64> {
    if e.fract() == 0.0 && e >= 0.0 && e <= u32::MAX as f64 {
        return (n as u64).checked_pow(e as u32);
    }
    let v = (n as f64).powf(e);
    if !v.is_finite() || v >= u64::MAX as f64 {
        return None;
    }
    // Absorb powf rounding noise just above an integer.
    let r = v.round();
    if (v - r).abs() <= 1e-9 * r.max(1.0) {
        return Some(r as u64);
    }
    Some(v.ceil() as u64)
}

/// Repetition count and failure bound of the amplifier at radius `n`:
/// `k = ⌈n^{3c}⌉`, `ε = 2^{-(n+2)/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChernoffPlan {
    pub n: usize,
    pub c: f64,
    pub k: u64,
    pub epsilon: f64,
}

pub fn chernoff_plan(n: usize, c: f64) -> Result<ChernoffPlan> {
    check_exponent(c)?;
    if n < 2 {
        return Err(Error::Precondition(format!("chernoff plan needs n >= 2, got {n}")));
    }
    let k = ceil_pow(n, 3.0 * c).ok_or_else(|| Error::InvalidArgument(format!("n^(3c) overflows at n = {n}, c = {c}")))?;
    let epsilon = (-(n as f64 + 2.0) / 2.0).exp2();
    Ok(ChernoffPlan { n, c, k, epsilon })
}

impl ChernoffPlan {
    /// `1 - (1 - δ)^k`: success probability after `k` independent repetitions.
    pub fn amplified(&self, delta: f64) -> f64 {
        1.0 - (1.0 - delta).powf(self.k as f64)
    }
}

/// How many times the amplifier repeats its inner program.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Repetitions {
    /// `k = ⌈n^{3c}⌉` for `n ≥ 2`, one repetition below that.
    Chernoff { c: f64 },
    Fixed(u64),
}

impl Repetitions {
    pub fn count(&self, n: usize) -> Option<u64> {
        match *self {
            Repetitions::Fixed(k) => Some(k),
            Repetitions::Chernoff { .. } if n < 2 => Some(1),
            Repetitions::Chernoff { c } => ceil_pow(n, 3.0 * c),
        }
    }
}

/// Smallest `k` with `1 - (1 - δ)^k > target`, for `δ` in `(0, 1]` and `target` in `[0, 1)`.
pub fn repetitions_to_clear(delta: f64, target: f64) -> Result<u64> {
    if !(delta > 0.0 && delta <= 1.0) || !(0.0..1.0).contains(&target) {
        return Err(Error::InvalidArgument(format!("cannot amplify delta = {delta} past {target}")));
    }
    let mut k = 1u64;
    while 1.0 - (1.0 - delta).powf(k as f64) <= target {
        k = k.checked_mul(2).ok_or_else(|| Error::InvalidArgument("repetition count overflow".into()))?;
    }
    let (mut lo, mut hi) = (k / 2, k);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if 1.0 - (1.0 - delta).powf(mid as f64) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.max(1))
}

/// Repeat-until-witness: runs `a` up to `k` times on independent tape
/// segments, checks each answer against `f`, returns the first verified
/// preimage (otherwise the last answer).
///
/// The tape is `k` consecutive segments of length `t(n)`; segment `i`
/// drives repetition `i`. Verification steps are charged to the run.
pub fn amplify(a: &InverterProgram, f: &CandidateFunction, reps: Repetitions) -> Result<InverterProgram> {
    match reps {
        Repetitions::Chernoff { c } => check_exponent(c)?,
        Repetitions::Fixed(0) => return Err(Error::InvalidArgument("amplifier needs at least one repetition".into())),
        Repetitions::Fixed(_) => {}
    }
    if a.kind() == InverterKind::PartialWithErrors {
        return Err(Error::Precondition(format!("`{}` is partial; clip it before amplifying", a.name())));
    }
    let label = match reps {
        Repetitions::Chernoff { c } => format!("amplify:{c}:{}", a.name()),
        Repetitions::Fixed(k) => format!("amplify[k={k}]:{}", a.name()),
    };
    let inner = a.clone();
    let coin_inner = a.clone();
    let seg_inner = a.clone();
    let bound_inner = a.clone();
    let verifier = f.clone();
    let kind = if a.kind() == InverterKind::TotalPoly && a.coin_len(4).ok() == Some(0) { InverterKind::TotalPoly } else { InverterKind::RandomizedPoly };
    let program = InverterProgram::new(
        label,
        kind,
        move |n| {
            let t = coin_inner.coin_len(n).ok()?;
            reps.count(n)?.checked_mul(t as u64)?.try_into().ok()
        },
        move |exec, _f, y, n| {
            let t = inner.coin_len(n).map_err(|_| Halt::TapeExhausted)?;
            let k = reps.count(n).ok_or(Halt::TapeExhausted)?;
            let mut last = BitString::zeros(n);
            for i in 0..k as usize {
                if (i + 1) * t > exec.tape().len() {
                    return Err(Halt::TapeExhausted);
                }
                let segment = exec.tape().segment(i * t, t);
                let routine = Arc::clone(inner.routine());
                let candidate = match exec.with_tape(&segment, |sub| routine(sub, &verifier, y, n)) {
                    Ok(c) => c,
                    // A clipped repetition stopped itself: a failed attempt.
                    Err(Halt::BudgetExhausted) => continue,
                    Err(e) => return Err(e),
                };
                exec.tick()?;
                if candidate.len() == n && exec.eval(&verifier, &candidate)?.as_ref() == Some(y) {
                    return Ok(candidate);
                }
                last = candidate;
            }
            Ok(last)
        },
    )
    .with_segments(move |n| seg_inner.coin_len(n).unwrap_or(0));
    Ok(program.with_fuel_bound(move |n, f| {
        let k = reps.count(n).unwrap_or(u64::MAX);
        let per = bound_inner.fuel_bound(n, f).unwrap_or(u64::MAX / 4).saturating_add(f.step_bound(n)).saturating_add(1);
        k.saturating_mul(per)
    }))
}

/// Runs `b` for at most `budget(n)` steps. Runs that would take longer end
/// as `FuelExhausted`; every other outcome is `b`'s own.
pub fn clip_with_budget(b: &InverterProgram, label: String, budget: impl Fn(usize) -> u64 + Send + Sync + 'static) -> InverterProgram {
    let inner = b.clone();
    let coin_inner = b.clone();
    let budget = Arc::new(budget);
    let budget_decl = Arc::clone(&budget);
    InverterProgram::new(
        label,
        InverterKind::TotalPoly,
        move |n| coin_inner.coin_len(n).ok(),
        move |exec, f, y, n| {
            let routine = Arc::clone(inner.routine());
            exec.with_budget(budget(n), |sub| routine(sub, f, y, n))
        },
    )
    .with_fuel_bound(move |n, _| budget_decl(n))
}

/// `b` clipped to `⌈n^c⌉` steps.
pub fn clip(b: &InverterProgram, c: f64) -> Result<InverterProgram> {
    check_exponent(c)?;
    Ok(clip_with_budget(b, format!("clip:{c}:{}", b.name()), move |n| ceil_pow(n, c).unwrap_or(u64::MAX)))
}

/// `R = T / δ`, or infinity when `δ = 0`.
#[derive(Clone, Debug, PartialEq)]
pub enum RatioValue {
    Finite { value: f64, exact: Option<BigRational> },
    Infinite,
}

impl RatioValue {
    pub fn is_infinite(&self) -> bool {
        matches!(self, RatioValue::Infinite)
    }

    pub fn as_f64(&self) -> f64 {
        match self {
            RatioValue::Finite { value, .. } => *value,
            RatioValue::Infinite => f64::INFINITY,
        }
    }

    /// `R ≤ n^c`, exactly when possible.
    pub fn at_most_power(&self, n: usize, c: f64) -> bool {
        match self {
            RatioValue::Infinite => false,
            RatioValue::Finite { exact: Some(r), .. } if c.fract() == 0.0 && c >= 0.0 && c <= u32::MAX as f64 => {
                r <= &BigRational::from_integer(BigInt::from(n).pow(c as u32))
            }
            RatioValue::Finite { value, .. } => *value <= (n as f64).powf(c),
        }
    }
}

impl Serialize for RatioValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            RatioValue::Finite { value, .. } => s.serialize_f64(*value),
            RatioValue::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Achievement ratio of an inverter on one instance.
///
/// `T` is the largest step count among halting runs (worst case over the
/// observed tapes); `expected_ratio` uses the mean halting time instead.
#[derive(Clone, Debug, PartialEq)]
pub struct AchievementRatio {
    pub x: BitString,
    pub t_max: Option<u64>,
    pub mean_halting_steps: Option<f64>,
    pub delta: Measured,
    pub ratio: RatioValue,
    pub expected_ratio: RatioValue,
    /// No run halted inside the fuel window, so `T` is undefined.
    pub no_halting_run: bool,
}

pub fn ratio_from_delta(d: &DeltaEstimate) -> AchievementRatio {
    let zero = harness::is_zero(&d.delta);
    let (ratio, expected_ratio) = if zero {
        (RatioValue::Infinite, RatioValue::Infinite)
    } else {
        let t = d.max_halting_steps.expect("a successful run halted");
        let mean = d.mean_halting_steps.expect("a successful run halted");
        let exact = d.delta.exact().map(|r| BigRational::from_integer(BigInt::from(t)) / r);
        let value = match &exact {
            Some(r) => strata::ratio_to_f64(r),
            None => t as f64 / d.delta.as_f64(),
        };
        (RatioValue::Finite { value, exact }, RatioValue::Finite { value: mean / d.delta.as_f64(), exact: None })
    };
    AchievementRatio {
        x: d.x.clone(),
        t_max: d.max_halting_steps,
        mean_halting_steps: d.mean_halting_steps,
        delta: d.delta.clone(),
        ratio,
        expected_ratio,
        no_halting_run: d.max_halting_steps.is_none(),
    }
}

pub fn achievement_ratio(b: &InverterProgram, f: &CandidateFunction, x: &BitString, m: &Measurement) -> Result<AchievementRatio> {
    Ok(ratio_from_delta(&m.delta(b, f, x)?))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AveragingSplit {
    /// `#{a_i > ρ/2}`.
    pub k: usize,
    pub fraction: f64,
}

/// Counts the entries above `ρ/2` in a vector whose mean is at least `ρ`;
/// the count is always at least `ρ N / 2`. Arithmetic is exact on the
/// binary values of the inputs.
pub fn averaging_split(values: &[f64], rho: f64) -> Result<AveragingSplit> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("averaging split needs a nonempty vector".into()));
    }
    if !(rho >= 0.0 && rho.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho = {rho} must be a finite nonnegative real")));
    }
    let exact = |v: f64| BigRational::from_float(v).expect("finite");
    let mut sum = BigRational::zero();
    for &v in values {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidArgument(format!("value {v} is outside [0, 1]")));
        }
        sum += exact(v);
    }
    let n = BigRational::from_integer(BigInt::from(values.len()));
    let rho_q = exact(rho);
    if sum < &rho_q * &n {
        return Err(Error::Precondition(format!("mean {} is below rho = {rho}", strata::ratio_to_f64(&(sum / n)))));
    }
    let half = &rho_q / BigRational::from_integer(2.into());
    let k = values.iter().filter(|&&v| exact(v) > half).count();
    debug_assert!(BigRational::from_integer(BigInt::from(k)) >= half * n);
    Ok(AveragingSplit { k, fraction: k as f64 / values.len() as f64 })
}

/// `Pr_{(x,σ)}[A(f(x), 1^n) ∈ f^{-1}(f(x))]` over uniform `x ∈ I_n` and uniform tapes.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateSuccess {
    pub n: usize,
    pub value: Measured,
}

/// Exact mode counts successes over the product space `I_n × {0,1}^{t(n)}`
/// directly; sampled mode draws `(x, σ)` pairs jointly, pair `i` from the
/// stream `(seed, joint, n, i)`.
pub fn aggregate_success(a: &InverterProgram, f: &CandidateFunction, n: usize, m: &Measurement) -> Result<AggregateSuccess> {
    if !f.accepts(n) {
        return Err(Error::Domain { name: f.name().to_string(), n });
    }
    let t = a.coin_len(n)?;
    let fuel = m.fuel.at(n);
    let one = |x: &BitString, tape: &CoinTape| -> Result<u64> {
        let y = harness::evaluate(f, x)?.0;
        let out = run_inverter(a, f, &y, n, tape, fuel)?;
        if out.status == harness::RunStatus::TapeExhausted {
            return Err(Error::TapeExhausted { name: a.name().to_string(), len: t });
        }
        Ok(out.status.is_success() as u64)
    };
    let value = match m.mode {
        Mode::Exact => {
            strata::check_sphere_cap(n, m.sphere_cap)?;
            check_tape_cap(t, m.tape_cap)?;
            let bits = n + t;
            if bits >= 64 {
                return Err(Error::TapeCapExceeded { t: bits, cap: 63 });
            }
            let hits = (0..(1u64 << bits))
                .into_par_iter()
                .map(|i| one(&BitString::from_u64(i >> t, n), &CoinTape::new(BitString::from_u64(i & ((1u64 << t) - 1), t))))
                .try_reduce(|| 0, |p, q| Ok(p + q))?;
            Measured::Exact(BigRational::new(BigInt::from(hits), strata::sphere_size(bits)))
        }
        Mode::Sampled => {
            if m.trials == 0 {
                return Err(Error::InvalidArgument("sampled aggregate needs at least one trial".into()));
            }
            let hits = (0..m.trials)
                .into_par_iter()
                .map(|i| {
                    let mut rng = seed::stream(m.seed, seed::DOMAIN_JOINT, n as u64, i);
                    let x = seed::random_bits(&mut rng, n);
                    let tape = CoinTape::new(seed::random_bits(&mut rng, t));
                    one(&x, &tape)
                })
                .try_reduce(|| 0, |p, q| Ok(p + q))?;
            Measured::sampled(hits, m.trials, m.confidence)?
        }
    };
    Ok(AggregateSuccess { n, value })
}

/// Per-input `δ` at radius `n`, and whether the whole sphere was covered.
///
/// Exact mode enumerates `I_n`. Sampled mode enumerates it too when it has
/// at most `m.inputs` elements, and otherwise draws `m.inputs` inputs, input
/// `i` from the stream `(seed, input-pick, n, i)`.
pub fn input_deltas(a: &InverterProgram, f: &CandidateFunction, n: usize, m: &Measurement) -> Result<(Vec<DeltaEstimate>, bool)> {
    let whole = m.mode == Mode::Exact || n <= m.sphere_cap.min(20) && (1u64 << n) <= m.inputs;
    if whole {
        return Ok((harness::sphere_deltas(a, f, n, m)?, true));
    }
    if !f.accepts(n) {
        return Err(Error::Domain { name: f.name().to_string(), n });
    }
    let deltas = (0..m.inputs)
        .into_par_iter()
        .map(|i| {
            let x = seed::random_bits(&mut seed::stream(m.seed, seed::DOMAIN_INPUT_PICK, n as u64, i), n);
            m.delta(a, f, &x)
        })
        .collect::<Result<_>>()?;
    Ok((deltas, false))
}

/// Polynomial thresholds `1/p(n) = n^{-degree}` tested by [`definition_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Strong conditions are violated at `n` when the success measure is at least `n^{-strong_degree}`.
    pub strong_degree: f64,
    /// Weak conditions are violated at `n` when the hard measure is below `n^{-weak_degree}`.
    pub weak_degree: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self { strong_degree: 2.0, weak_degree: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Violated { at: Vec<usize> },
    Consistent,
    Untested { reason: String },
}

impl Verdict {
    fn from_violations(at: Vec<usize>) -> Self {
        if at.is_empty() {
            Verdict::Consistent
        } else {
            Verdict::Violated { at }
        }
    }

    pub fn is_violated(&self) -> bool {
        matches!(self, Verdict::Violated { .. })
    }
}

/// Measurements at one radius.
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusCheck {
    pub n: usize,
    /// `u_n{x : δ(x) > n^{-c}}`.
    pub success_density: Measured,
    /// `u_n{x : δ(x) < n^{-c}}`.
    pub hard_density: Measured,
    /// `u_n{x : R(x) ≤ n^c}`.
    pub ratio_density: Measured,
    /// `u_n{x : R(x) > n^c}`.
    pub ratio_hard_density: Measured,
    /// Averaged success probability over inputs and coins.
    pub aggregate: Measured,
    pub plan: Option<ChernoffPlan>,
    pub inputs_measured: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DefinitionReport {
    pub inverter: String,
    pub function: String,
    pub c: f64,
    pub thresholds: Thresholds,
    pub rows: Vec<RadiusCheck>,
    pub success_classification: Option<ConvergenceReport>,
    pub ratio_classification: Option<ConvergenceReport>,
    /// Averaged success probability ≥ `n^{-strong}`.
    pub classical_strong: Verdict,
    /// Success set density ≥ `n^{-strong}`.
    pub generic_strong: Verdict,
    /// Hard set density < `n^{-weak}`.
    pub generic_weak: Verdict,
    /// `R ≤ n^c` set density ≥ `n^{-strong}`.
    pub partial_strong: Verdict,
    /// `R > n^c` set density < `n^{-weak}`.
    pub partial_weak: Verdict,
    /// Consistent iff the success set classifies as strongly negligible.
    pub strongly_negligible_success: Verdict,
    pub profile_success: DensityProfile,
    pub profile_ratio: DensityProfile,
}

fn fraction(count: u64, total: u64, exact: bool, confidence: f64) -> Result<Measured> {
    if exact {
        Ok(Measured::Exact(BigRational::new(BigInt::from(count), BigInt::from(total))))
    } else {
        Measured::sampled(count, total, confidence)
    }
}

fn at_least_inverse_power(m: &Measured, n: usize, degree: f64) -> bool {
    harness::compare_inverse_power(m, n, degree) != std::cmp::Ordering::Less
}

/// Measures, for each radius, the success, hard and ratio sets of `a` on
/// `f` and renders verdicts for each hardness condition over the tested
/// `(c, degree)` grid.
///
/// Exact mode enumerates each sphere; sampled mode draws `m.inputs` inputs
/// per sphere (input `i` from `(seed, input-pick, n, i)`) and estimates each
/// one's `δ` from `m.trials` tapes.
pub fn definition_check(
    a: &InverterProgram,
    f: &CandidateFunction,
    radii: &[usize],
    c: f64,
    thresholds: Thresholds,
    m: &Measurement,
    rule: &ClassifierRule,
) -> Result<DefinitionReport> {
    check_exponent(c)?;
    if radii.is_empty() {
        return Err(Error::InvalidArgument("definition check needs at least one radius".into()));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &n in radii {
        let (deltas, exact_inputs) = input_deltas(a, f, n, m)?;
        let total = deltas.len() as u64;
        let exact = exact_inputs && m.mode == Mode::Exact;
        let exact_density = exact;
        let ratios: Vec<AchievementRatio> = deltas.iter().map(ratio_from_delta).collect();
        let success = deltas.iter().filter(|d| harness::exceeds_inverse_power(&d.delta, n, c)).count() as u64;
        let hard = deltas.iter().filter(|d| harness::below_inverse_power(&d.delta, n, c)).count() as u64;
        let fast = ratios.iter().filter(|r| r.ratio.at_most_power(n, c)).count() as u64;
        let aggregate = if exact {
            let sum = deltas.iter().fold(BigRational::zero(), |acc, d| acc + d.delta.exact().expect("exact"));
            Measured::Exact(sum / BigRational::from_integer(BigInt::from(total)))
        } else {
            let mean = deltas.iter().map(|d| d.delta.as_f64()).sum::<f64>() / total as f64;
            Measured::Sampled {
                value: mean,
                half_width: crate::stats::hoeffding_half_width(total, m.confidence)?,
                confidence: m.confidence,
                samples: total,
            }
        };
        rows.push(RadiusCheck {
            n,
            success_density: fraction(success, total, exact_density, m.confidence)?,
            hard_density: fraction(hard, total, exact_density, m.confidence)?,
            ratio_density: fraction(fast, total, exact_density, m.confidence)?,
            ratio_hard_density: fraction(total - fast, total, exact_density, m.confidence)?,
            aggregate,
            plan: chernoff_plan(n, c).ok(),
            inputs_measured: total,
        });
    }

    let label = |what: &str| format!("{what}({},{},c={c})", a.name(), f.name());
    let profile = |what: &str, pick: fn(&RadiusCheck) -> &Measured| {
        DensityProfile::new(label(what), rows.iter().map(|r| DensityValue { n: r.n, value: pick(r).clone() }).collect())
    };
    let profile_success = profile("success", |r| &r.success_density)?;
    let profile_ratio = profile("ratio_at_most_n^c", |r| &r.ratio_density)?;
    let classify = |p: &DensityProfile| match strata::classify_convergence(p, LimitTarget::Auto, rule) {
        Ok(r) => Ok(Some(r)),
        Err(Error::TooFewPoints { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let success_classification = classify(&profile_success)?;
    let ratio_classification = classify(&profile_ratio)?;

    let violations = |pred: &dyn Fn(&RadiusCheck) -> bool| rows.iter().filter(|r| pred(r)).map(|r| r.n).collect::<Vec<_>>();
    let (sd, wd) = (thresholds.strong_degree, thresholds.weak_degree);
    let classical_strong = Verdict::from_violations(violations(&|r| at_least_inverse_power(&r.aggregate, r.n, sd)));
    let generic_strong = Verdict::from_violations(violations(&|r| at_least_inverse_power(&r.success_density, r.n, sd)));
    let generic_weak = Verdict::from_violations(violations(&|r| !at_least_inverse_power(&r.hard_density, r.n, wd)));
    let partial_strong = Verdict::from_violations(violations(&|r| at_least_inverse_power(&r.ratio_density, r.n, sd)));
    let partial_weak = Verdict::from_violations(violations(&|r| !at_least_inverse_power(&r.ratio_hard_density, r.n, wd)));
    let strongly_negligible_success = match &success_classification {
        None => Verdict::Untested { reason: "fewer than 4 radii".into() },
        Some(rep) if rep.class == ConvergenceClass::StronglyNegligible => Verdict::Consistent,
        Some(_) => Verdict::Violated { at: radii.to_vec() },
    };

    Ok(DefinitionReport {
        inverter: a.name().to_string(),
        function: f.name().to_string(),
        c,
        thresholds,
        rows,
        success_classification,
        ratio_classification,
        classical_strong,
        generic_strong,
        generic_weak,
        partial_strong,
        partial_weak,
        strongly_negligible_success,
        profile_success,
        profile_ratio,
    })
}

/// Exact `δ` of every input of `I_n`, as rationals. Convenience for identities.
pub fn exact_delta_vector(a: &InverterProgram, f: &CandidateFunction, n: usize, m: &Measurement) -> Result<Vec<BigRational>> {
    let m = Measurement { mode: Mode::Exact, ..m.clone() };
    Ok(harness::sphere_deltas(a, f, n, &m)?.into_iter().map(|d| d.delta.exact().expect("exact").clone()).collect())
}

/// `ε` as an exact power of two when `n` is even; handy in tests.
pub fn epsilon_exact(n: usize) -> Option<BigRational> {
    (n % 2 == 0).then(|| BigRational::new(1.into(), strata::sphere_size((n + 2) / 2)))
}

pub fn plan_to_f64(plan: &ChernoffPlan) -> (f64, f64) {
    (plan.k.to_f64().unwrap_or(f64::INFINITY), plan.epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates::{self, coin_threshold, identity, jittery_echo};
    use crate::harness::{exact_delta, estimate_delta, FuelSchedule, RunStatus};
    use num_traits::One;

    fn q(a: i64, b: i64) -> BigRational {
        BigRational::new(a.into(), b.into())
    }

    #[test]
    fn plan_examples() {
        let p = chernoff_plan(4, 1.0).unwrap();
        assert_eq!((p.k, p.epsilon), (64, 0.125));
        let p = chernoff_plan(2, 1.0).unwrap();
        assert_eq!((p.k, p.epsilon), (8, 0.25));
        let p = chernoff_plan(4, 0.5).unwrap();
        assert_eq!((p.k, p.epsilon), (8, 0.125));
        assert!(matches!(chernoff_plan(1, 1.0), Err(Error::Precondition(_))));
        assert!(chernoff_plan(4, 0.0).is_err());
        assert!(chernoff_plan(4, f64::NAN).is_err());
    }

    #[test]
    fn plan_fractional_exponent_oracle() {
        // Independent evaluation via integer search: smallest k with k >= n^{3c}.
        for (n, c) in [(3usize, 0.5f64), (5, 1.0 / 3.0), (7, 0.25), (10, 0.7)] {
            let target = (n as f64).powf(3.0 * c);
            let k = (1u64..).find(|&k| k as f64 >= target - 1e-9).unwrap();
            assert_eq!(chernoff_plan(n, c).unwrap().k, k, "n = {n}, c = {c}");
        }
    }

    #[test]
    fn closed_form_bound_on_grid() {
        for n in 2..=12usize {
            for c in [0.5, 1.0, 1.5, 2.0] {
                let plan = chernoff_plan(n, c).unwrap();
                let floor = (n as f64).powf(-c);
                for delta in [floor, (2.0 * floor).min(1.0), 0.5f64.max(floor), 1.0] {
                    assert!(plan.amplified(delta) >= 1.0 - plan.epsilon, "n = {n}, c = {c}, delta = {delta}");
                }
            }
        }
    }

    #[test]
    fn closed_form_bound_needs_c_at_least_half() {
        // k = ⌈15^{0.75}⌉ = 8 repetitions leave (1 - δ)^8 above ε = 2^{-8.5}.
        let plan = chernoff_plan(15, 0.25).unwrap();
        assert_eq!(plan.k, 8);
        assert!(plan.amplified(15f64.powf(-0.25)) < 1.0 - plan.epsilon);
        for n in 2..=200usize {
            let plan = chernoff_plan(n, 0.5).unwrap();
            assert!(plan.amplified((n as f64).powf(-0.5)) >= 1.0 - plan.epsilon, "n = {n}");
        }
    }

    #[test]
    fn amplify_reduced_k_matches_enumeration() {
        // δ = 5/16; two repetitions: 1 - (11/16)^2 = 135/256.
        let id = identity();
        let inner = coin_threshold(5, 4);
        let amp = amplify(&inner, &id, Repetitions::Fixed(2)).unwrap();
        let x: BitString = "0110".parse().unwrap();
        let d = exact_delta(&amp, &id, &x, 10_000, 20).unwrap();
        let expected = BigRational::one() - q(11, 16) * q(11, 16);
        assert_eq!(d.delta.exact().unwrap(), &expected);
        assert_eq!(expected, q(135, 256));
    }

    #[test]
    fn amplify_examples() {
        let id = identity();
        let x: BitString = "1010".parse().unwrap();
        let sure = amplify(&candidates::brute_force(), &id, Repetitions::Chernoff { c: 1.0 }).unwrap();
        assert_eq!(exact_delta(&sure, &id, &x, 1 << 20, 20).unwrap().delta.as_f64(), 1.0);

        let quarter = amplify(&coin_threshold(4, 4), &id, Repetitions::Chernoff { c: 1.0 }).unwrap();
        let est = estimate_delta(&quarter, &id, &x, 2000, 1 << 20, 17, 0.95).unwrap();
        let plan = chernoff_plan(4, 1.0).unwrap();
        assert!(est.delta.as_f64() >= 1.0 - plan.epsilon - 3.0 * est.delta.half_width());
        assert!((plan.amplified(0.25) - (1.0 - 0.75f64.powi(64))).abs() < 1e-15);

        let hopeless = amplify(&candidates::zero_guess(), &id, Repetitions::Chernoff { c: 1.0 }).unwrap();
        let d = exact_delta(&hopeless, &id, &x, 1 << 20, 20).unwrap();
        assert_eq!(d.delta.as_f64(), 0.0);
    }

    #[test]
    fn amplify_rejects_partial_and_overflow() {
        let id = identity();
        assert!(matches!(amplify(&jittery_echo(3), &id, Repetitions::Fixed(2)), Err(Error::Precondition(_))));
        assert!(amplify(&candidates::random_guess(), &id, Repetitions::Fixed(0)).is_err());
        let huge = amplify(&candidates::random_guess(), &id, Repetitions::Chernoff { c: 50.0 }).unwrap();
        assert!(matches!(huge.coin_len(1000), Err(Error::CoinLengthOverflow { .. })));
    }

    #[test]
    fn amplify_is_sound_and_uses_first_success() {
        let id = identity();
        let amp = amplify(&candidates::random_guess(), &id, Repetitions::Fixed(4)).unwrap();
        let y: BitString = "01".parse().unwrap();
        // Segments: 11, 01, 01, 00 -> second repetition wins.
        let tape = CoinTape::new("11010100".parse().unwrap());
        let out = run_inverter(&amp, &id, &y, 2, &tape, 1000).unwrap();
        assert_eq!(out.status, RunStatus::Success(y.clone()));
        // Steps: two segments of 2 coins, two ticks, two verifications of 3 steps.
        assert_eq!(out.steps_used, 2 + 1 + 3 + 2 + 1 + 3);
    }

    #[test]
    fn amplify_clipped_partial_program() {
        let id = identity();
        let clipped = clip(&jittery_echo(3), 2.0).unwrap();
        let amp = amplify(&clipped, &id, Repetitions::Fixed(3)).unwrap();
        let x: BitString = "101".parse().unwrap();
        let base = exact_delta(&clipped, &id, &x, 1 << 16, 20).unwrap();
        let boosted = exact_delta(&amp, &id, &x, 1 << 16, 20).unwrap();
        let fail = BigRational::one() - base.delta.exact().unwrap();
        assert_eq!(boosted.delta.exact().unwrap(), &(BigRational::one() - &fail * &fail * &fail));
    }

    #[test]
    fn clip_examples() {
        let id = identity();
        let m = Measurement::exact(FuelSchedule::Absolute(1 << 20));
        // Brute force on identity at n = 3 takes at most 8 * (1 + 4) steps < 3^4.
        let bf = candidates::brute_force();
        let clipped = clip(&bf, 4.0).unwrap();
        for x in BitString::sphere(3) {
            let y = x.clone();
            let a = run_inverter(&bf, &id, &y, 3, &CoinTape::empty(), 1 << 20).unwrap();
            let b = run_inverter(&clipped, &id, &y, 3, &CoinTape::empty(), 1 << 20).unwrap();
            assert_eq!(a, b);
        }
        let never = clip(&candidates::never_halt(), 2.0).unwrap();
        for x in BitString::sphere(4) {
            let d = m.delta(&never, &id, &x).unwrap();
            assert_eq!(d.delta.as_f64(), 0.0);
            assert_eq!(d.histogram.fuel_exhausted, 1);
        }
    }

    #[test]
    fn clip_boundary() {
        // Takes exactly `cost` steps, then answers correctly.
        let exact_cost = |cost: u64| {
            InverterProgram::new(format!("cost{cost}"), InverterKind::PartialWithErrors, |_| Some(0), move |exec, _, y, _| {
                exec.tick_n(cost)?;
                Ok(y.clone())
            })
        };
        let id = identity();
        let y: BitString = "110".parse().unwrap();
        let budget = ceil_pow(3, 2.0).unwrap();
        let at = clip(&exact_cost(budget), 2.0).unwrap();
        let over = clip(&exact_cost(budget + 1), 2.0).unwrap();
        let r = run_inverter(&at, &id, &y, 3, &CoinTape::empty(), 1000).unwrap();
        assert!(r.status.is_success());
        assert_eq!(r.steps_used, budget);
        let r = run_inverter(&over, &id, &y, 3, &CoinTape::empty(), 1000).unwrap();
        assert_eq!(r.status, RunStatus::FuelExhausted);
        assert_eq!(r.steps_used, budget);
    }

    #[test]
    fn clip_is_total_within_its_bound() {
        let id = identity();
        let clipped = clip(&candidates::never_halt(), 1.0).unwrap();
        // Fuel at the declared bound must never be reported as a bound violation.
        let out = run_inverter(&clipped, &id, &"0101".parse().unwrap(), 4, &CoinTape::empty(), 4).unwrap();
        assert_eq!(out.status, RunStatus::FuelExhausted);
        assert_eq!(clipped.fuel_bound(4, &id), Some(4));
    }

    #[test]
    fn achievement_ratio_examples() {
        let id = identity();
        let m = Measurement::exact(FuelSchedule::Absolute(1000));
        let det = InverterProgram::new("sixteen", InverterKind::TotalPoly, |_| Some(0), |exec, _, y, _| {
            exec.tick_n(16)?;
            Ok(y.clone())
        });
        let x: BitString = "0011".parse().unwrap();
        let r = achievement_ratio(&det, &id, &x, &m).unwrap();
        assert_eq!(r.ratio, RatioValue::Finite { value: 16.0, exact: Some(q(16, 1)) });

        let r = achievement_ratio(&candidates::never_halt(), &id, &x, &m).unwrap();
        assert!(r.ratio.is_infinite());
        assert!(r.no_halting_run);
        let r = achievement_ratio(&candidates::zero_guess(), &id, &"1111".parse().unwrap(), &m).unwrap();
        assert!(r.ratio.is_infinite());
        assert!(!r.no_halting_run);

        // random guess: every run reads 4 coins, δ = 1/16, so R = 16 * 4.
        let r = achievement_ratio(&candidates::random_guess(), &id, &x, &m).unwrap();
        assert_eq!(r.t_max, Some(4));
        assert_eq!(r.ratio, RatioValue::Finite { value: 64.0, exact: Some(q(64, 1)) });
        assert!(r.ratio.as_f64() >= r.t_max.unwrap() as f64);
    }

    #[test]
    fn averaging_split_examples() {
        let s = averaging_split(&[1.0, 1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!((s.k, s.fraction), (4, 1.0));
        let s = averaging_split(&[1.0, 0.0, 0.0, 0.0], 0.25).unwrap();
        assert_eq!((s.k, s.fraction), (1, 0.25));
        let s = averaging_split(&[0.6, 0.6, 0.0, 0.0], 0.3).unwrap();
        assert_eq!((s.k, s.fraction), (2, 0.5));
        assert!(matches!(averaging_split(&[0.1, 0.1], 0.5), Err(Error::Precondition(_))));
        assert!(averaging_split(&[1.5], 0.1).is_err());
        assert!(averaging_split(&[], 0.1).is_err());
        assert!(averaging_split(&[0.5], -1.0).is_err());
    }

    #[test]
    fn repetitions_to_clear_values() {
        // 1 - 0.9^k > 0.5 first at k = 7.
        assert_eq!(repetitions_to_clear(0.1, 0.5).unwrap(), 7);
        assert_eq!(repetitions_to_clear(1.0, 0.99).unwrap(), 1);
        assert!(repetitions_to_clear(0.0, 0.5).is_err());
        for (d, t) in [(0.01, 0.9), (0.3, 0.999), (0.05, 0.05)] {
            let k = repetitions_to_clear(d, t).unwrap();
            assert!(1.0 - (1.0 - d).powf(k as f64) > t);
            assert!(k == 1 || 1.0 - (1.0 - d).powf((k - 1) as f64) <= t);
        }
    }

    #[test]
    fn error_reduction_raises_the_success_set() {
        // δ = 1/8 per input sits below n^{-1} = 1/4; amplification clears it.
        let id = identity();
        let n = 4;
        let k = repetitions_to_clear(1.0 / 8.0, 0.25).unwrap();
        assert_eq!(k, 3);
        let amp = amplify(&coin_threshold(1, 3), &id, Repetitions::Fixed(k)).unwrap();
        assert!(amp.coin_len(n).unwrap() <= 20);
        let m = Measurement::exact(FuelSchedule::Absolute(1 << 20));
        let base = harness::success_set(&coin_threshold(1, 3), &id, n, 1.0, &m).unwrap();
        let lifted = harness::success_set(&amp, &id, n, 1.0, &m).unwrap();
        assert_eq!(strata::exact_density(&base, n, 24).unwrap().value.as_f64(), 0.0);
        assert_eq!(strata::exact_density(&lifted, n, 24).unwrap().value.as_f64(), 1.0);
    }

    #[test]
    fn aggregate_examples() {
        let id = identity();
        let m = Measurement::exact(FuelSchedule::Absolute(1 << 16));
        let v = aggregate_success(&candidates::brute_force(), &id, 4, &m).unwrap();
        assert_eq!(v.value.exact().unwrap(), &q(1, 1));
        let v = aggregate_success(&candidates::half_solver(), &id, 4, &m).unwrap();
        assert_eq!(v.value.exact().unwrap(), &q(1, 2));
        let v = aggregate_success(&candidates::random_guess(), &id, 4, &m).unwrap();
        assert_eq!(v.value.exact().unwrap(), &q(1, 16));

        let s = Measurement::sampled(FuelSchedule::Absolute(1 << 16), 20_000, 4);
        let v = aggregate_success(&candidates::half_solver(), &id, 30, &s).unwrap();
        assert!((v.value.as_f64() - 0.5).abs() <= v.value.half_width());
    }

    #[test]
    fn definition_check_examples() {
        let id = identity();
        let m = Measurement::exact(FuelSchedule::Absolute(1 << 20));
        let radii: Vec<usize> = (2..=6).collect();
        let rule = ClassifierRule::default();
        let rep = definition_check(&candidates::brute_force(), &id, &radii, 1.0, Thresholds::default(), &m, &rule).unwrap();
        assert_eq!(rep.generic_strong, Verdict::Violated { at: radii.clone() });
        assert!(rep.rows.iter().all(|r| r.success_density.as_f64() == 1.0));

        let rep = definition_check(&candidates::never_halt(), &id, &radii, 1.0, Thresholds::default(), &m, &rule).unwrap();
        assert_eq!(rep.generic_strong, Verdict::Consistent);
        assert_eq!(rep.generic_weak, Verdict::Consistent);
        assert_eq!(rep.partial_strong, Verdict::Consistent);
        assert_eq!(rep.strongly_negligible_success, Verdict::Consistent);
        assert!(rep.rows.iter().all(|r| r.success_density.as_f64() == 0.0));
    }

    proptest::proptest! {
        #[test]
        fn averaging_split_keeps_half_the_mass(values in proptest::collection::vec(0.0f64..=1.0, 1..60), t in 0.0f64..=1.0) {
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let rho = mean * t * (1.0 - 1e-9);
            let s = averaging_split(&values, rho).unwrap();
            proptest::prop_assert!(s.k <= values.len());
            proptest::prop_assert!(s.k as f64 >= rho * values.len() as f64 / 2.0);
            proptest::prop_assert_eq!(s.k, values.iter().filter(|&&v| v > rho / 2.0).count());
        }

        #[test]
        fn plan_clears_the_threshold_from_half(n in 2usize..24, c in 0.5f64..2.0) {
            let p = chernoff_plan(n, c).unwrap();
            let delta = (n as f64).powf(-c);
            proptest::prop_assert!(p.amplified(delta) >= 1.0 - p.epsilon, "n={} c={} k={}", n, c, p.k);
            proptest::prop_assert!(p.amplified(delta / 2.0) <= p.amplified(delta));
        }
    }
}
