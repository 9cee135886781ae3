//! Metered execution of candidate functions and inverter programs, and
//! measurement of per-input success probabilities `δ_{A,f}(x)`.
//!
//! Non-termination is modelled by fuel: a run that exceeds its fuel is
//! reported as [`RunStatus::FuelExhausted`]. Inverters never decide their
//! own success; [`run_inverter`] re-evaluates `f` on the returned candidate.

use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::{BitString, CoinTape};
use crate::error::{Error, Result};
use crate::meter::{Meter, OutOfFuel};
use crate::seed;
use crate::stats;
use crate::strata::{self, InputSetSpec, Measured, Mode};

/// Default cap on `t(n)` for exhaustive tape enumeration.
pub const DEFAULT_TAPE_CAP: usize = 20;

pub type Evaluator = dyn Fn(&BitString, &mut Meter) -> Result<BitString, OutOfFuel> + Send + Sync;

/// A length-regular, deterministic function with a step-counting evaluator
/// and a declared polynomial step bound.
#[derive(Clone)]
pub struct CandidateFunction {
    name: String,
    domain: Arc<dyn Fn(usize) -> bool + Send + Sync>,
    output_len: Arc<dyn Fn(usize) -> usize + Send + Sync>,
    step_bound: Arc<dyn Fn(usize) -> u64 + Send + Sync>,
    eval: Arc<Evaluator>,
}

impl fmt::Debug for CandidateFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CandidateFunction").field("name", &self.name).finish_non_exhaustive()
    }
}

impl CandidateFunction {
    pub fn new(
        name: impl Into<String>,
        domain: impl Fn(usize) -> bool + Send + Sync + 'static,
        output_len: impl Fn(usize) -> usize + Send + Sync + 'static,
        step_bound: impl Fn(usize) -> u64 + Send + Sync + 'static,
        eval: impl Fn(&BitString, &mut Meter) -> Result<BitString, OutOfFuel> + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            domain: Arc::new(domain),
            output_len: Arc::new(output_len),
            step_bound: Arc::new(step_bound),
            eval: Arc::new(eval),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn accepts(&self, n: usize) -> bool {
        (self.domain)(n)
    }

    pub fn output_len(&self, n: usize) -> usize {
        (self.output_len)(n)
    }

    pub fn step_bound(&self, n: usize) -> u64 {
        (self.step_bound)(n)
    }
}

/// `f(x)` and the number of steps it took.
///
/// Checks the domain, the output length `m(n)` and the declared step bound
/// on every call.
pub fn evaluate(f: &CandidateFunction, x: &BitString) -> Result<(BitString, u64)> {
    let n = x.len();
    if !f.accepts(n) {
        return Err(Error::Domain { name: f.name.clone(), n });
    }
    let bound = f.step_bound(n);
    let mut meter = Meter::new(bound);
    let y = (f.eval)(x, &mut meter).map_err(|_| Error::StepBoundViolated {
        name: f.name.clone(),
        n,
        steps: bound.saturating_add(1),
        bound,
    })?;
    let want = f.output_len(n);
    if y.len() != want {
        return Err(Error::OutputLength { name: f.name.clone(), n, got: y.len(), want });
    }
    Ok((y, meter.used()))
}

/// Why a metered routine stopped without an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    /// The run's own fuel ran out.
    OutOfFuel,
    /// A nested step budget (see [`Exec::with_budget`]) ran out while the
    /// run still had fuel left; the program stopped itself.
    BudgetExhausted,
    TapeExhausted,
}

impl From<OutOfFuel> for Halt {
    fn from(_: OutOfFuel) -> Self {
        Halt::OutOfFuel
    }
}

/// Execution context handed to inverter routines: the step meter and the
/// coin tape reader.
pub struct Exec<'t> {
    meter: Meter,
    tape: &'t CoinTape,
    pos: usize,
}

impl<'t> Exec<'t> {
    pub fn new(tape: &'t CoinTape, fuel: u64) -> Self {
        Self { meter: Meter::new(fuel), tape, pos: 0 }
    }

    pub fn tick(&mut self) -> Result<(), Halt> {
        Ok(self.meter.tick()?)
    }

    pub fn tick_n(&mut self, k: u64) -> Result<(), Halt> {
        Ok(self.meter.tick_n(k)?)
    }

    /// Next coin. Reading a coin costs one step.
    pub fn coin(&mut self) -> Result<bool, Halt> {
        if self.pos >= self.tape.len() {
            return Err(Halt::TapeExhausted);
        }
        self.tick()?;
        let b = self.tape.bits().get(self.pos);
        self.pos += 1;
        Ok(b)
    }

    pub fn coins(&mut self, k: usize) -> Result<BitString, Halt> {
        let mut out = BitString::zeros(k);
        for i in 0..k {
            out.set(i, self.coin()?);
        }
        Ok(out)
    }

    /// Evaluates `f` inside the run, charging its steps to this run's fuel.
    /// Strings outside `f`'s domain evaluate to `None` at a cost of one step.
    pub fn eval(&mut self, f: &CandidateFunction, x: &BitString) -> Result<Option<BitString>, Halt> {
        if !f.accepts(x.len()) {
            self.tick()?;
            return Ok(None);
        }
        let mut child = Meter::new(self.meter.remaining());
        let out = (f.eval)(x, &mut child);
        self.meter.tick_n(child.used())?;
        Ok(Some(out?))
    }

    /// Runs `body` with at most `budget` of the remaining steps, on the same
    /// tape. Exhausting the budget while fuel remains yields
    /// [`Halt::BudgetExhausted`].
    pub fn with_budget<R>(&mut self, budget: u64, body: impl FnOnce(&mut Exec<'t>) -> Result<R, Halt>) -> Result<R, Halt> {
        let binding = budget <= self.meter.remaining();
        let mut child = Exec { meter: Meter::new(budget.min(self.meter.remaining())), tape: self.tape, pos: self.pos };
        let out = body(&mut child);
        self.pos = child.pos;
        self.meter.tick_n(child.meter.used())?;
        match out {
            Err(Halt::OutOfFuel) if binding => Err(Halt::BudgetExhausted),
            other => other,
        }
    }

    /// Runs `body` against a separate tape, sharing this run's fuel.
    pub fn with_tape<R>(&mut self, tape: &CoinTape, body: impl for<'s> FnOnce(&mut Exec<'s>) -> Result<R, Halt>) -> Result<R, Halt> {
        let mut child = Exec { meter: Meter::new(self.meter.remaining()), tape, pos: 0 };
        let out = body(&mut child);
        self.meter.tick_n(child.meter.used())?;
        out
    }

    pub fn used(&self) -> u64 {
        self.meter.used()
    }

    pub fn tape(&self) -> &'t CoinTape {
        self.tape
    }

    pub fn coins_read(&self) -> usize {
        self.pos
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverterKind {
    TotalPoly,
    RandomizedPoly,
    PartialWithErrors,
}

/// `(exec, f, y, n) -> candidate preimage`.
pub type Routine = dyn Fn(&mut Exec<'_>, &CandidateFunction, &BitString, usize) -> Result<BitString, Halt> + Send + Sync;
pub type CoinLenFn = dyn Fn(usize) -> Option<usize> + Send + Sync;
pub type FuelBoundFn = dyn Fn(usize, &CandidateFunction) -> u64 + Send + Sync;

/// A metered, coin-tape-driven inversion algorithm.
#[derive(Clone)]
pub struct InverterProgram {
    name: String,
    kind: InverterKind,
    coin_len: Arc<CoinLenFn>,
    fuel_bound: Option<Arc<FuelBoundFn>>,
    segment_len: Option<Arc<dyn Fn(usize) -> usize + Send + Sync>>,
    routine: Arc<Routine>,
}

impl fmt::Debug for InverterProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InverterProgram").field("name", &self.name).field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl InverterProgram {
    pub fn new(
        name: impl Into<String>,
        kind: InverterKind,
        coin_len: impl Fn(usize) -> Option<usize> + Send + Sync + 'static,
        routine: impl Fn(&mut Exec<'_>, &CandidateFunction, &BitString, usize) -> Result<BitString, Halt> + Send + Sync + 'static,
    ) -> Self {
        Self { name: name.into(), kind, coin_len: Arc::new(coin_len), fuel_bound: None, segment_len: None, routine: Arc::new(routine) }
    }

    /// Declares the fuel within which a total program must always halt.
    pub fn with_fuel_bound(mut self, bound: impl Fn(usize, &CandidateFunction) -> u64 + Send + Sync + 'static) -> Self {
        self.fuel_bound = Some(Arc::new(bound));
        self
    }

    /// Declares that the tape is a concatenation of segments of this length.
    pub fn with_segments(mut self, segment_len: impl Fn(usize) -> usize + Send + Sync + 'static) -> Self {
        self.segment_len = Some(Arc::new(segment_len));
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> InverterKind {
        self.kind
    }

    pub fn coin_len(&self, n: usize) -> Result<usize> {
        (self.coin_len)(n).ok_or_else(|| Error::CoinLengthOverflow { name: self.name.clone(), n })
    }

    pub fn fuel_bound(&self, n: usize, f: &CandidateFunction) -> Option<u64> {
        self.fuel_bound.as_ref().map(|b| b(n, f))
    }

    /// Segment boundaries `[start, end)` of the tape at radius `n`, if declared.
    pub fn tape_segments(&self, n: usize) -> Result<Option<Vec<(usize, usize)>>> {
        let Some(seg) = &self.segment_len else { return Ok(None) };
        let total = self.coin_len(n)?;
        let len = seg(n);
        if len == 0 {
            return Ok(Some(Vec::new()));
        }
        Ok(Some((0..total / len).map(|i| (i * len, (i + 1) * len)).collect()))
    }

    pub(crate) fn routine(&self) -> &Arc<Routine> {
        &self.routine
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "output", rename_all = "snake_case")]
pub enum RunStatus {
    Success(BitString),
    WrongAnswer(BitString),
    FuelExhausted,
    TapeExhausted,
}

impl RunStatus {
    pub fn is_success(&self) -> bool {
        matches!(self, RunStatus::Success(_))
    }

    /// Success or wrong answer: the program stopped by itself.
    pub fn halted(&self) -> bool {
        matches!(self, RunStatus::Success(_) | RunStatus::WrongAnswer(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOutcome {
    #[serde(flatten)]
    pub status: RunStatus,
    pub steps_used: u64,
}

/// Runs `A` on `(y, 1^n)` with the given tape and fuel, then verifies the
/// answer: `Success` requires `|x'| = n` and `f(x') = y`.
pub fn run_inverter(a: &InverterProgram, f: &CandidateFunction, y: &BitString, n: usize, tape: &CoinTape, fuel: u64) -> Result<RunOutcome> {
    if fuel == 0 {
        return Err(Error::InvalidArgument("fuel must be at least 1".into()));
    }
    let t = a.coin_len(n)?;
    if tape.len() != t {
        return Err(Error::TapeLength { name: a.name.clone(), n, got: tape.len(), want: t });
    }
    let mut exec = Exec::new(tape, fuel);
    let result = (a.routine)(&mut exec, f, y, n);
    let steps_used = exec.used();
    let result_kind = result.as_ref().err().copied();
    let status = match result {
        Ok(candidate) => {
            if candidate.len() == n && f.accepts(n) && evaluate(f, &candidate)?.0 == *y {
                RunStatus::Success(candidate)
            } else {
                RunStatus::WrongAnswer(candidate)
            }
        }
        Err(Halt::OutOfFuel) | Err(Halt::BudgetExhausted) => RunStatus::FuelExhausted,
        Err(Halt::TapeExhausted) => RunStatus::TapeExhausted,
    };
    if matches!(result_kind, Some(Halt::OutOfFuel)) && a.kind != InverterKind::PartialWithErrors {
        if let Some(bound) = a.fuel_bound(n, f) {
            if fuel >= bound {
                return Err(Error::FuelBoundViolated { name: a.name.clone(), n, fuel });
            }
        }
    }
    Ok(RunOutcome { status, steps_used })
}

/// A serializable record of one run, enough to replay it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub inverter: String,
    pub function: String,
    pub y: BitString,
    pub n: usize,
    pub tape: CoinTape,
    pub fuel: u64,
    pub tape_segments: Option<Vec<(usize, usize)>>,
    pub outcome: RunOutcome,
}

pub fn record_run(a: &InverterProgram, f: &CandidateFunction, y: &BitString, n: usize, tape: &CoinTape, fuel: u64) -> Result<RunRecord> {
    let outcome = run_inverter(a, f, y, n, tape, fuel)?;
    Ok(RunRecord {
        inverter: a.name.clone(),
        function: f.name.clone(),
        y: y.clone(),
        n,
        tape: tape.clone(),
        fuel,
        tape_segments: a.tape_segments(n)?,
        outcome,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeHistogram {
    pub success: u64,
    pub wrong_answer: u64,
    pub fuel_exhausted: u64,
}

impl OutcomeHistogram {
    pub fn total(&self) -> u64 {
        self.success + self.wrong_answer + self.fuel_exhausted
    }
}

impl fmt::Display for OutcomeHistogram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "success:{};wrong:{};fuel:{}", self.success, self.wrong_answer, self.fuel_exhausted)
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct Tally {
    hist: OutcomeHistogram,
    steps: u128,
    halting_steps: u128,
    max_halting: Option<u64>,
}

impl Tally {
    fn one(outcome: &RunOutcome) -> Self {
        let mut t = Tally { steps: outcome.steps_used as u128, ..Default::default() };
        match outcome.status {
            RunStatus::Success(_) => t.hist.success = 1,
            RunStatus::WrongAnswer(_) => t.hist.wrong_answer = 1,
            _ => t.hist.fuel_exhausted = 1,
        }
        if outcome.status.halted() {
            t.max_halting = Some(outcome.steps_used);
            t.halting_steps = outcome.steps_used as u128;
        }
        t
    }

    fn mean_halting(&self) -> Option<f64> {
        let halted = self.hist.success + self.hist.wrong_answer;
        (halted > 0).then(|| self.halting_steps as f64 / halted as f64)
    }

    fn merge(self, o: Tally) -> Tally {
        Tally {
            hist: OutcomeHistogram {
                success: self.hist.success + o.hist.success,
                wrong_answer: self.hist.wrong_answer + o.hist.wrong_answer,
                fuel_exhausted: self.hist.fuel_exhausted + o.hist.fuel_exhausted,
            },
            steps: self.steps + o.steps,
            halting_steps: self.halting_steps + o.halting_steps,
            max_halting: match (self.max_halting, o.max_halting) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
        }
    }
}

/// `δ_{A,f}(x)` with provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaEstimate {
    pub x: BitString,
    pub delta: Measured,
    pub trials: u64,
    pub mean_steps: f64,
    /// Largest step count among runs that halted (success or wrong answer).
    pub max_halting_steps: Option<u64>,
    /// Mean step count over the runs that halted.
    pub mean_halting_steps: Option<f64>,
    pub histogram: OutcomeHistogram,
}

impl DeltaEstimate {
    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn mode(&self) -> Mode {
        self.delta.mode()
    }
}

fn tally_run(a: &InverterProgram, f: &CandidateFunction, y: &BitString, n: usize, tape: &CoinTape, fuel: u64) -> Result<Tally> {
    let outcome = run_inverter(a, f, y, n, tape, fuel)?;
    if outcome.status == RunStatus::TapeExhausted {
        return Err(Error::TapeExhausted { name: a.name.clone(), len: tape.len() });
    }
    Ok(Tally::one(&outcome))
}

pub fn check_tape_cap(t: usize, cap: usize) -> Result<()> {
    if t > cap || t >= 64 {
        return Err(Error::TapeCapExceeded { t, cap: cap.min(63) });
    }
    Ok(())
}

/// Exact `δ_{A,f}(x)`: the success fraction over all `2^{t(n)}` tapes.
pub fn exact_delta(a: &InverterProgram, f: &CandidateFunction, x: &BitString, fuel: u64, tape_cap: usize) -> Result<DeltaEstimate> {
    let n = x.len();
    let t = a.coin_len(n)?;
    check_tape_cap(t, tape_cap)?;
    let (y, _) = evaluate(f, x)?;
    let tally = (0..(1u64 << t))
        .into_par_iter()
        .map(|i| tally_run(a, f, &y, n, &CoinTape::new(BitString::from_u64(i, t)), fuel))
        .try_reduce(Tally::default, |p, q| Ok(p.merge(q)))?;
    let trials = 1u64 << t;
    Ok(DeltaEstimate {
        x: x.clone(),
        delta: Measured::Exact(BigRational::new(BigInt::from(tally.hist.success), BigInt::from(trials))),
        trials,
        mean_steps: tally.steps as f64 / trials as f64,
        max_halting_steps: tally.max_halting,
        mean_halting_steps: tally.mean_halting(),
        histogram: tally.hist,
    })
}

/// Sampled `δ_{A,f}(x)`; trial `i` uses the tape stream keyed by `(seed, tape, fingerprint(x), i)`.
pub fn estimate_delta(
    a: &InverterProgram,
    f: &CandidateFunction,
    x: &BitString,
    trials: u64,
    fuel: u64,
    seed: u64,
    confidence: f64,
) -> Result<DeltaEstimate> {
    if trials == 0 {
        return Err(Error::InvalidArgument("estimate_delta needs at least one trial".into()));
    }
    stats::check_confidence(confidence)?;
    let n = x.len();
    let t = a.coin_len(n)?;
    let (y, _) = evaluate(f, x)?;
    let tally = (0..trials)
        .into_par_iter()
        .map(|i| tally_run(a, f, &y, n, &seed::tape_sample(seed, x, i, t), fuel))
        .try_reduce(Tally::default, |p, q| Ok(p.merge(q)))?;
    Ok(DeltaEstimate {
        x: x.clone(),
        delta: Measured::sampled(tally.hist.success, trials, confidence)?,
        trials,
        mean_steps: tally.steps as f64 / trials as f64,
        max_halting_steps: tally.max_halting,
        mean_halting_steps: tally.mean_halting(),
        histogram: tally.hist,
    })
}

/// Step budget as a function of the radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FuelSchedule {
    Absolute(u64),
    /// `coeff · max(n, 1)^degree + offset`, saturating.
    Poly { coeff: u64, degree: u32, offset: u64 },
}

impl FuelSchedule {
    pub fn at(&self, n: usize) -> u64 {
        match *self {
            FuelSchedule::Absolute(f) => f,
            FuelSchedule::Poly { coeff, degree, offset } => {
                (n.max(1) as u64).saturating_pow(degree).saturating_mul(coeff).saturating_add(offset).max(1)
            }
        }
    }
}

/// How per-input success probabilities are measured.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub mode: Mode,
    pub fuel: FuelSchedule,
    pub sphere_cap: usize,
    pub tape_cap: usize,
    pub trials: u64,
    pub seed: u64,
    pub confidence: f64,
    /// Inputs drawn per sphere when the sphere itself is sampled.
    pub inputs: u64,
}

impl Default for Measurement {
    fn default() -> Self {
        Self {
            mode: Mode::Exact,
            fuel: FuelSchedule::Absolute(1 << 20),
            sphere_cap: strata::DEFAULT_SPHERE_CAP,
            tape_cap: DEFAULT_TAPE_CAP,
            trials: 1000,
            seed: 0,
            confidence: stats::DEFAULT_CONFIDENCE,
            inputs: 1000,
        }
    }
}

impl Measurement {
    pub fn exact(fuel: FuelSchedule) -> Self {
        Self { fuel, ..Self::default() }
    }

    pub fn sampled(fuel: FuelSchedule, trials: u64, seed: u64) -> Self {
        Self { mode: Mode::Sampled, fuel, trials, seed, ..Self::default() }
    }

    /// `δ` for one input under this measurement.
    pub fn delta(&self, a: &InverterProgram, f: &CandidateFunction, x: &BitString) -> Result<DeltaEstimate> {
        let fuel = self.fuel.at(x.len());
        match self.mode {
            Mode::Exact => exact_delta(a, f, x, fuel, self.tape_cap),
            Mode::Sampled => estimate_delta(a, f, x, self.trials, fuel, self.seed, self.confidence),
        }
    }
}

/// Per-input deltas over the whole sphere `I_n` (exact enumeration of inputs;
/// each delta measured per `m.mode`).
pub fn sphere_deltas(a: &InverterProgram, f: &CandidateFunction, n: usize, m: &Measurement) -> Result<Vec<DeltaEstimate>> {
    strata::check_sphere_cap(n, m.sphere_cap)?;
    if !f.accepts(n) {
        return Err(Error::Domain { name: f.name().to_string(), n });
    }
    if m.mode == Mode::Exact {
        check_tape_cap(a.coin_len(n)?, m.tape_cap)?;
    }
    (0..(1u64 << n)).into_par_iter().map(|i| m.delta(a, f, &BitString::from_u64(i, n))).collect()
}

/// `δ > n^{-c}`, exactly when `δ` is exact and `c` is an integer.
pub fn exceeds_inverse_power(delta: &Measured, n: usize, c: f64) -> bool {
    compare_inverse_power(delta, n, c) == std::cmp::Ordering::Greater
}

/// `δ < n^{-c}`.
pub fn below_inverse_power(delta: &Measured, n: usize, c: f64) -> bool {
    compare_inverse_power(delta, n, c) == std::cmp::Ordering::Less
}

/// Orders `δ` against `n^{-c}`; `0^{-c}` is treated as `+∞`.
pub fn compare_inverse_power(delta: &Measured, n: usize, c: f64) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    if n == 0 {
        return Ordering::Less;
    }
    if let (Measured::Exact(d), true) = (delta, c.fract() == 0.0 && c >= 0.0 && c <= u32::MAX as f64) {
        let scaled = d * BigRational::from_integer(BigInt::from(n).pow(c as u32));
        return scaled.cmp(&BigRational::one());
    }
    delta.as_f64().partial_cmp(&(n as f64).powf(-c)).unwrap_or(Ordering::Less)
}

/// The set `{x ∈ I_n : δ_{A,f}(x) > n^{-c}}`.
///
/// Within the sphere cap the set is explicit and every input is measured.
/// Past it, membership of a queried `x` is decided on demand by sampling
/// its tapes, and the set is flagged as sampled.
pub fn success_set(a: &InverterProgram, f: &CandidateFunction, n: usize, c: f64, m: &Measurement) -> Result<InputSetSpec> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("c = {c} must be a positive real")));
    }
    let label = format!("success({},{},c={c})", a.name(), f.name());
    if n <= m.sphere_cap && n < 64 {
        let deltas = sphere_deltas(a, f, n, m)?;
        let set = InputSetSpec::explicit(label, deltas.into_iter().filter(|d| exceeds_inverse_power(&d.delta, n, c)).map(|d| d.x));
        return Ok(if m.mode == Mode::Sampled { set.mark_sampled() } else { set });
    }
    let (a, f) = (a.clone(), f.clone());
    let sampled = Measurement { mode: Mode::Sampled, ..m.clone() };
    Ok(InputSetSpec::predicate(label, move |x, _| {
        let d = sampled.delta(&a, &f, x)?;
        Ok(exceeds_inverse_power(&d.delta, x.len(), c))
    })
    .mark_sampled())
}

/// Exact `δ` as an `f64`, or the sampled mean.
pub fn delta_value(d: &DeltaEstimate) -> f64 {
    match &d.delta {
        Measured::Exact(r) => r.to_f64().unwrap_or_else(|| strata::ratio_to_f64(r)),
        Measured::Sampled { value, .. } => *value,
    }
}

pub(crate) fn is_zero(m: &Measured) -> bool {
    match m {
        Measured::Exact(r) => r.is_zero(),
        Measured::Sampled { value, .. } => *value == 0.0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::candidates;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn q(a: i64, b: i64) -> Measured {
        Measured::Exact(BigRational::new(a.into(), b.into()))
    }

    #[test]
    fn evaluate_identity_and_const() {
        let id = candidates::identity();
        let (y, steps) = evaluate(&id, &bits("1011")).unwrap();
        assert_eq!(y, bits("1011"));
        assert!(steps <= id.step_bound(4));
        let z = candidates::const_zero();
        assert_eq!(evaluate(&z, &bits("1101")).unwrap().0, bits("0000"));
    }

    #[test]
    fn evaluate_checks_domain() {
        let mult = candidates::mult();
        assert!(matches!(evaluate(&mult, &bits("101")), Err(Error::Domain { .. })));
    }

    #[test]
    fn evaluate_checks_step_bound() {
        let liar = CandidateFunction::new("liar", |_| true, |n| n, |n| n as u64, |x, m| {
            m.tick_n(x.len() as u64 + 1)?;
            Ok(x.clone())
        });
        assert!(matches!(evaluate(&liar, &bits("01")), Err(Error::StepBoundViolated { .. })));
    }

    #[test]
    fn evaluate_checks_output_length() {
        let bad = CandidateFunction::new("short", |_| true, |n| n, |_| 10, |_, _| Ok(BitString::zeros(1)));
        assert!(matches!(evaluate(&bad, &bits("0000")), Err(Error::OutputLength { .. })));
    }

    #[test]
    fn run_examples() {
        let id = candidates::identity();
        let bf = candidates::brute_force();
        let out = run_inverter(&bf, &id, &bits("10"), 2, &CoinTape::empty(), 1000).unwrap();
        assert_eq!(out.status, RunStatus::Success(bits("10")));

        let zero = candidates::zero_guess();
        let out = run_inverter(&zero, &id, &bits("10"), 2, &CoinTape::empty(), 1000).unwrap();
        assert_eq!(out.status, RunStatus::WrongAnswer(bits("00")));

        let never = candidates::never_halt();
        let out = run_inverter(&never, &id, &bits("10"), 2, &CoinTape::empty(), 1000).unwrap();
        assert_eq!(out.status, RunStatus::FuelExhausted);
        assert_eq!(out.steps_used, 1000);
    }

    #[test]
    fn run_preconditions() {
        let id = candidates::identity();
        let guess = candidates::random_guess();
        assert!(matches!(
            run_inverter(&guess, &id, &bits("10"), 2, &CoinTape::empty(), 10),
            Err(Error::TapeLength { .. })
        ));
        assert!(run_inverter(&candidates::brute_force(), &id, &bits("10"), 2, &CoinTape::empty(), 0).is_err());
    }

    #[test]
    fn tape_exhaustion_is_reported() {
        let greedy = InverterProgram::new("greedy", InverterKind::RandomizedPoly, |_| Some(2), |exec, _, y, _| {
            exec.coins(3)?;
            Ok(y.clone())
        });
        let id = candidates::identity();
        let tape = CoinTape::new(bits("01"));
        let out = run_inverter(&greedy, &id, &bits("1"), 1, &tape, 100).unwrap();
        assert_eq!(out.status, RunStatus::TapeExhausted);
        assert!(matches!(exact_delta(&greedy, &id, &bits("1"), 100, 20), Err(Error::TapeExhausted { .. })));
    }

    #[test]
    fn declared_fuel_bound_is_checked() {
        let liar = InverterProgram::new("liar", InverterKind::TotalPoly, |_| Some(0), |exec, _, y, _| {
            exec.tick_n(50)?;
            Ok(y.clone())
        })
        .with_fuel_bound(|_, _| 10);
        let id = candidates::identity();
        assert!(matches!(
            run_inverter(&liar, &id, &bits("1"), 1, &CoinTape::empty(), 20),
            Err(Error::FuelBoundViolated { .. })
        ));
        // Below the declared bound, exhaustion is just an outcome.
        let out = run_inverter(&liar, &id, &bits("1"), 1, &CoinTape::empty(), 5).unwrap();
        assert_eq!(out.status, RunStatus::FuelExhausted);
    }

    #[test]
    fn exact_delta_examples() {
        let id = candidates::identity();
        let d = exact_delta(&candidates::brute_force(), &id, &bits("0110"), 1 << 16, 20).unwrap();
        assert_eq!(d.delta, q(1, 1));

        // Oracle: enumerate the 16 tapes by hand; exactly one equals x.
        let x = bits("1001");
        let hits = (0u64..16).filter(|t| BitString::from_u64(*t, 4) == x).count() as i64;
        let d = exact_delta(&candidates::random_guess(), &id, &x, 1000, 20).unwrap();
        assert_eq!(d.delta, q(hits, 16));
        assert_eq!(d.trials, 16);

        let d = exact_delta(&candidates::never_halt(), &id, &x, 1000, 20).unwrap();
        assert_eq!(d.delta, q(0, 1));
        assert_eq!(d.max_halting_steps, None);
    }

    #[test]
    fn exact_delta_respects_tape_cap() {
        let id = candidates::identity();
        let x = BitString::zeros(12);
        assert!(exact_delta(&candidates::random_guess(), &id, &x, 1000, 10).unwrap_err().is_cap_violation());
    }

    #[test]
    fn estimate_delta_examples() {
        let id = candidates::identity();
        let x = bits("0110");
        let d = estimate_delta(&candidates::brute_force(), &id, &x, 100, 1 << 16, 3, 0.95).unwrap();
        assert_eq!(d.delta.as_f64(), 1.0);
        assert!(d.delta.half_width() > 0.0);

        let d = estimate_delta(&candidates::random_guess(), &id, &x, 10_000, 1000, 3, 0.95).unwrap();
        let exact = exact_delta(&candidates::random_guess(), &id, &x, 1000, 20).unwrap();
        assert!((d.delta.as_f64() - exact.delta.as_f64()).abs() <= d.delta.half_width());

        let d = estimate_delta(&candidates::never_halt(), &id, &x, 50, 100, 3, 0.95).unwrap();
        assert_eq!(d.delta.as_f64(), 0.0);
        assert_eq!(d.histogram.fuel_exhausted, 50);
    }

    #[test]
    fn success_set_examples() {
        let id = candidates::identity();
        let m = Measurement::exact(FuelSchedule::Absolute(1 << 16));
        let full = success_set(&candidates::brute_force(), &id, 4, 1.0, &m).unwrap();
        assert_eq!(strata::exact_density(&full, 4, 24).unwrap().value, q(1, 1));
        let none = success_set(&candidates::never_halt(), &id, 4, 1.0, &m).unwrap();
        assert_eq!(strata::exact_density(&none, 4, 24).unwrap().value, q(0, 1));
        let half = success_set(&candidates::half_solver(), &id, 6, 1.0, &m).unwrap();
        assert_eq!(strata::exact_density(&half, 6, 24).unwrap().value, q(1, 2));
        assert!(success_set(&candidates::brute_force(), &id, 4, 0.0, &m).is_err());
    }

    #[test]
    fn success_set_sampled_variant_past_cap() {
        let id = candidates::identity();
        let m = Measurement { sphere_cap: 8, ..Measurement::sampled(FuelSchedule::Absolute(1000), 20, 5) };
        let s = success_set(&candidates::half_solver(), &id, 40, 1.0, &m).unwrap();
        assert!(s.is_sampled());
        let d = strata::mc_density(&s, 40, 2000, 11, 0.95).unwrap();
        assert!((d.value.as_f64() - 0.5).abs() <= d.value.half_width());
    }

    #[test]
    fn inverse_power_comparisons() {
        assert!(!exceeds_inverse_power(&q(1, 4), 4, 1.0));
        assert!(exceeds_inverse_power(&q(2, 7), 4, 1.0));
        assert!(below_inverse_power(&q(1, 17), 4, 2.0));
        assert!(!below_inverse_power(&q(1, 16), 4, 2.0));
        assert!(exceeds_inverse_power(&q(1, 7), 4, 1.5));
        assert!(!exceeds_inverse_power(&q(1, 1), 0, 1.0));
    }

    #[test]
    fn fuel_schedule() {
        assert_eq!(FuelSchedule::Absolute(7).at(100), 7);
        assert_eq!(FuelSchedule::Poly { coeff: 2, degree: 3, offset: 1 }.at(4), 129);
        assert_eq!(FuelSchedule::Poly { coeff: 2, degree: 60, offset: 1 }.at(1000), u64::MAX);
    }

    #[test]
    fn run_record_carries_segments() {
        let id = candidates::identity();
        let amp = crate::reductions::amplify(&candidates::random_guess(), &id, crate::reductions::Repetitions::Fixed(3)).unwrap();
        let tape = CoinTape::new(BitString::zeros(12));
        let rec = record_run(&amp, &id, &bits("0000"), 4, &tape, 10_000).unwrap();
        assert_eq!(rec.tape_segments, Some(vec![(0, 4), (4, 8), (8, 12)]));
        assert!(rec.outcome.status.is_success());
        let json = serde_json::to_string(&rec).unwrap();
        let back: RunRecord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rec);
    }
}
