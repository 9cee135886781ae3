//! Desk-scale candidate functions and inverter programs.
//!
//! None of these functions is hard to invert; they exist to exhibit the
//! measurable phenomena: trivially invertible, invertible on a generic but
//! not strongly generic set, invertible only by exhaustive search.
//!
//! Registry names (see [`function`] and [`inverter`]):
//!
//! | function        | encoding                                                    | m(n)          |
//! |-----------------|-------------------------------------------------------------|---------------|
//! | `identity`      | `f(x) = x`                                                  | `n`           |
//! | `const0`        | `f(x) = 0^n`                                                | `n`           |
//! | `mult`          | `x = p‖q`, `h = n/2`, `f(x) = (2^h + p)(2^h + q)`           | `n + 2`       |
//! | `subset_sum[:w]`| `x = w_1‖…‖w_w‖s`, `b = n/w - 1`, `f(x) = w_1‖…‖w_w‖Σ s_i w_i` | `w b + b + ⌈log2 w⌉` |
//! | `genease`       | `0‖x` if the first `⌈log2 n⌉` bits are not all zero, else `1‖π(x)` | `n + 1` |
//!
//! In `mult` both factors carry an implicit leading one, so neither can be
//! zero and the product always has `n + 1` or `n + 2` significant bits.
//! In `genease`, `π` is a fixed keyed permutation of `{0,1}^n`.

use crate::bits::BitString;
use crate::error::{Error, Result};
use crate::harness::{CandidateFunction, InverterKind, InverterProgram};
use crate::meter::{Meter, OutOfFuel};
use crate::reductions::{self, Repetitions};

pub const FUNCTIONS: &[&str] = &["identity", "const0", "mult", "subset_sum", "genease"];

pub const INVERTERS: &[&str] = &[
    "brute_force",
    "random_guess",
    "never_halt",
    "zero_guess",
    "half_solver",
    "genease_fast",
    "trial_division",
    "subset_brute",
    "jittery_echo",
];

/// `⌈log2 n⌉`, with `0` for `n ≤ 1`.
pub fn ceil_log2(n: usize) -> usize {
    if n <= 1 {
        0
    } else {
        (usize::BITS - (n - 1).leading_zeros()) as usize
    }
}

pub fn identity() -> CandidateFunction {
    CandidateFunction::new("identity", |_| true, |n| n, |n| n as u64 + 1, |x, m| {
        m.tick_n(x.len() as u64 + 1)?;
        Ok(x.clone())
    })
}

pub fn const_zero() -> CandidateFunction {
    CandidateFunction::new("const0", |_| true, |n| n, |n| n as u64 + 1, |x, m| {
        m.tick_n(x.len() as u64 + 1)?;
        Ok(BitString::zeros(x.len()))
    })
}

const MULT_MAX_N: usize = 124;

fn mult_cost(n: usize) -> u64 {
    let h = (n / 2) as u64 + 1;
    h * h + n as u64 + 2
}

pub fn mult() -> CandidateFunction {
    CandidateFunction::new("mult", |n| n % 2 == 0 && n <= MULT_MAX_N, |n| n + 2, mult_cost, |x, m| {
        let n = x.len();
        let h = n / 2;
        m.tick_n(mult_cost(n))?;
        let p = x.slice(0, h).to_u128().expect("half fits") + (1u128 << h);
        let q = x.slice(h, n).to_u128().expect("half fits") + (1u128 << h);
        Ok(BitString::from_u128(p * q, n + 2))
    })
}

/// Largest weight width for `subset_sum`, so every sum fits in a `u128`.
const SUBSET_MAX_WEIGHT_BITS: usize = 60;

fn subset_layout(n: usize, w: usize) -> Option<(usize, usize)> {
    if w == 0 || n % w != 0 || n / w < 2 {
        return None;
    }
    let b = n / w - 1;
    if b > SUBSET_MAX_WEIGHT_BITS {
        return None;
    }
    Some((b, b + ceil_log2(w)))
}

fn subset_sum_of(weights: &BitString, selector: &BitString, b: usize, meter: &mut Meter) -> Result<u128, OutOfFuel> {
    let mut sum = 0u128;
    for i in 0..selector.len() {
        meter.tick_n(b as u64 + 1)?;
        if selector.get(i) {
            sum += weights.slice(i * b, (i + 1) * b).to_u128().expect("weight fits");
        }
    }
    Ok(sum)
}

/// Subset sum over `w` weights. The weight width `b = n/w - 1` is implied by `n`.
pub fn subset_sum(w: usize) -> CandidateFunction {
    CandidateFunction::new(
        format!("subset_sum:{w}"),
        move |n| subset_layout(n, w).is_some(),
        move |n| subset_layout(n, w).map(|(b, s)| w * b + s).unwrap_or(0),
        move |n| (n as u64 + 1) * 2 + w as u64,
        move |x, m| {
            let (b, s) = subset_layout(x.len(), w).expect("domain checked by caller");
            let weights = x.slice(0, w * b);
            let selector = x.slice(w * b, x.len());
            m.tick_n(w as u64)?;
            let sum = subset_sum_of(&weights, &selector, b, m)?;
            Ok(weights.concat(&BitString::from_u128(sum, s)))
        },
    )
}

const GENEASE_MAX_N: usize = 64;
const GENEASE_ROUNDS: [(u64, u64); 4] = [
    (0x9e37_79b9_7f4a_7c15, 0x2545_f491_4f6c_dd1d),
    (0xbf58_476d_1ce4_e5b9, 0x1405_7b7e_f767_814f),
    (0x94d0_49bb_1331_11eb, 0x5851_f42d_4c95_7f2d),
    (0xd6e8_feb8_6659_fd93, 0x3c6e_f372_fe94_f82b),
];

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

/// The keyed permutation of `{0,1}^n` used by `genease`: rounds of odd
/// multiplication, xor-shift and addition, each a bijection mod `2^n`.
pub fn genease_scramble(v: u64, n: usize) -> u64 {
    let mk = mask(n);
    let shift = n / 2 + 1;
    let mut v = v & mk;
    for (mul, add) in GENEASE_ROUNDS {
        v = v.wrapping_mul(mul | 1) & mk;
        if shift < 64 {
            v ^= v >> shift;
        }
        v = v.wrapping_add(add) & mk;
    }
    v
}

fn genease_cost(n: usize) -> u64 {
    5 * n as u64 + 2
}

pub fn genease() -> CandidateFunction {
    CandidateFunction::new("genease", |n| n <= GENEASE_MAX_N, |n| n + 1, genease_cost, |x, m| {
        let n = x.len();
        let b = ceil_log2(n);
        m.tick_n(b as u64 + 1)?;
        let flag = BitString::zeros(1);
        if !x.prefix_is_zero(b) {
            m.tick_n(n as u64)?;
            return Ok(flag.concat(x));
        }
        m.tick_n(4 * n as u64)?;
        let v = x.to_u64().expect("n <= 64");
        Ok(BitString::ones(1).concat(&BitString::from_u64(genease_scramble(v, n), n)))
    })
}

/// Exact density of genease's easy set at radius `n`: `1 - 2^{-⌈log2 n⌉}`.
pub fn genease_easy_density(n: usize) -> num_rational::BigRational {
    use num_traits::One;
    num_rational::BigRational::one() - num_rational::BigRational::new(1.into(), crate::strata::sphere_size(ceil_log2(n)))
}

fn no_coins(_: usize) -> Option<usize> {
    Some(0)
}

/// Tries every string of length `n` in lexicographic order, returning the
/// first preimage; outputs `0^n` if none exists.
pub fn brute_force() -> InverterProgram {
    InverterProgram::new("brute_force", InverterKind::TotalPoly, no_coins, |exec, f, y, n| {
        let count = 1u128 << n.min(127);
        for i in 0..count {
            exec.tick()?;
            let candidate = BitString::from_u128(i, n);
            if exec.eval(f, &candidate)?.as_ref() == Some(y) {
                return Ok(candidate);
            }
        }
        Ok(BitString::zeros(n))
    })
    .with_fuel_bound(|n, f| {
        let per = f.step_bound(n).saturating_add(1);
        (1u64 << n.min(63)).saturating_mul(per).saturating_add(1)
    })
}

/// Reads `n` coins and outputs them.
pub fn random_guess() -> InverterProgram {
    InverterProgram::new("random_guess", InverterKind::RandomizedPoly, Some, |exec, _, _, n| exec.coins(n))
        .with_fuel_bound(|n, _| n as u64 + 1)
}

/// Never stops.
pub fn never_halt() -> InverterProgram {
    InverterProgram::new("never_halt", InverterKind::PartialWithErrors, no_coins, |exec, _, _, _| loop {
        exec.tick()?;
    })
}

/// Always outputs `0^n`.
pub fn zero_guess() -> InverterProgram {
    InverterProgram::new("zero_guess", InverterKind::TotalPoly, no_coins, |exec, _, _, n| {
        exec.tick()?;
        Ok(BitString::zeros(n))
    })
    .with_fuel_bound(|_, _| 1)
}

/// For `identity`: echoes `y` when its first bit is 0, otherwise answers
/// with the complement (wrong).
pub fn half_solver() -> InverterProgram {
    InverterProgram::new("half_solver", InverterKind::PartialWithErrors, no_coins, |exec, _, y, _| {
        exec.tick_n(y.len() as u64 + 1)?;
        if !y.is_empty() && !y.get(0) {
            Ok(y.clone())
        } else {
            Ok(y.complement())
        }
    })
}

/// For `genease`: strips the flag of `0‖x` outputs, loops on `1‖π(x)`.
pub fn genease_fast() -> InverterProgram {
    InverterProgram::new("genease_fast", InverterKind::PartialWithErrors, no_coins, |exec, _, y, n| {
        exec.tick()?;
        if y.is_empty() || y.get(0) {
            loop {
                exec.tick()?;
            }
        }
        exec.tick_n(n as u64)?;
        Ok(y.slice(1, y.len()))
    })
}

/// For `mult`: tries low parts `p < 2^{⌊n/4⌋}` of the first factor.
pub fn trial_division() -> InverterProgram {
    InverterProgram::new("trial_division", InverterKind::TotalPoly, no_coins, |exec, _, y, n| {
        let h = n / 2;
        let Some(target) = y.to_u128().filter(|_| y.len() == n + 2 && n % 2 == 0 && n <= MULT_MAX_N) else {
            exec.tick()?;
            return Ok(BitString::zeros(n));
        };
        let lo = 1u128 << h;
        for p in 0..(1u128 << (n / 4)) {
            exec.tick_n(h as u64 + 1)?;
            let factor = lo + p;
            if target % factor == 0 {
                let other = target / factor;
                if (lo..2 * lo).contains(&other) {
                    return Ok(BitString::from_u128(p, h).concat(&BitString::from_u128(other - lo, h)));
                }
            }
        }
        Ok(BitString::zeros(n))
    })
    .with_fuel_bound(|n, _| (1u64 << (n / 4).min(62)).saturating_mul(n as u64 / 2 + 1).saturating_add(1))
}

/// For `subset_sum:w`: reads the weights off `y` and tries all `2^w` selectors.
pub fn subset_brute(w: usize) -> InverterProgram {
    InverterProgram::new(format!("subset_brute:{w}"), InverterKind::TotalPoly, no_coins, move |exec, _, y, n| {
        let Some((b, _)) = subset_layout(n, w).filter(|(b, s)| y.len() == w * b + s) else {
            exec.tick()?;
            return Ok(BitString::zeros(n));
        };
        let weights = y.slice(0, w * b);
        let target = y.slice(w * b, y.len()).to_u128().expect("sum fits");
        for sel in 0..(1u64 << w.min(63)) {
            exec.tick_n(w as u64)?;
            let selector = BitString::from_u64(sel, w);
            let mut meter = Meter::unbounded();
            let sum = subset_sum_of(&weights, &selector, b, &mut meter).expect("unbounded");
            exec.tick_n(meter.used())?;
            if sum == target {
                return Ok(weights.concat(&selector));
            }
        }
        Ok(BitString::zeros(n))
    })
    .with_fuel_bound(move |n, _| {
        let b = n / w.max(1);
        (1u64 << w.min(62)).saturating_mul((w * (b + 2)) as u64).saturating_add(2)
    })
}

/// For `identity`: succeeds iff the `t`-bit coin value is below `num`,
/// otherwise answers with the complement. Exact `δ = num / 2^t` on every
/// `x` with `n ≥ 1`.
pub fn coin_threshold(num: u64, t: usize) -> InverterProgram {
    InverterProgram::new(format!("coin_threshold:{num}:{t}"), InverterKind::RandomizedPoly, move |_| Some(t), move |exec, _, y, _| {
        let r = exec.coins(t)?.to_u64().expect("t <= 64");
        exec.tick_n(y.len() as u64)?;
        Ok(if r < num { y.clone() } else { y.complement() })
    })
    .with_fuel_bound(move |n, _| (t + n) as u64 + 1)
}

/// For `identity`: a partial program with errors whose halting time depends
/// on `(x, tape)`. With coin value `r` and `k = (|y|_1 + 2r) mod (n + 3)`,
/// it spends `k + 1` steps after reading its coins, then
/// succeeds when `r mod 4 ∈ {0, 1}`, answers wrongly when `r mod 4 = 2`,
/// and loops forever when `r mod 4 = 3`.
pub fn jittery_echo(t: usize) -> InverterProgram {
    InverterProgram::new(format!("jittery_echo:{t}"), InverterKind::PartialWithErrors, move |_| Some(t), move |exec, _, y, n| {
        let r = exec.coins(t)?.to_u64().expect("t <= 64");
        let k = (y.count_ones() as u64 + 2 * r) % (n as u64 + 3);
        exec.tick_n(k + 1)?;
        match r % 4 {
            0 | 1 => Ok(y.clone()),
            2 => Ok(y.complement()),
            _ => loop {
                exec.tick()?;
            },
        }
    })
}

fn split_param(name: &str) -> (&str, Option<&str>) {
    match name.split_once(':') {
        Some((base, rest)) => (base, Some(rest)),
        None => (name, None),
    }
}

fn parse_usize(kind: &'static str, name: &str, s: Option<&str>, default: usize) -> Result<usize> {
    match s {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| Error::UnknownName { kind, name: name.to_string() }),
    }
}

/// Candidate function by registry name.
pub fn function(name: &str) -> Result<CandidateFunction> {
    let (base, param) = split_param(name);
    match (base, param) {
        ("identity", None) => Ok(identity()),
        ("const0", None) => Ok(const_zero()),
        ("mult", None) => Ok(mult()),
        ("genease", None) => Ok(genease()),
        ("subset_sum", p) => {
            let w = parse_usize("function", name, p, 4)?;
            if w == 0 || w > 16 {
                return Err(Error::UnknownName { kind: "function", name: name.to_string() });
            }
            Ok(subset_sum(w))
        }
        _ => Err(Error::UnknownName { kind: "function", name: name.to_string() }),
    }
}

/// Inverter by registry name, with amplifiers verifying against `identity`.
/// See [`inverter_for`].
pub fn inverter(name: &str) -> Result<InverterProgram> {
    inverter_for(name, &identity())
}

/// Inverter by registry name. Besides the plain names in [`INVERTERS`],
/// `coin_threshold:<num>:<t>` is the synthetic `δ = num/2^t` program,
/// `amplify:<c>:<inner>` wraps `<inner>` in the repetition amplifier
/// (verifying against `f`) and `clip:<c>:<inner>` clips it to `⌈n^c⌉` steps.
pub fn inverter_for(name: &str, f: &CandidateFunction) -> Result<InverterProgram> {
    let unknown = || Error::UnknownName { kind: "inverter", name: name.to_string() };
    for (prefix, wrap) in [("amplify:", true), ("clip:", false)] {
        if let Some(rest) = name.strip_prefix(prefix) {
            let (c, inner) = rest.split_once(':').ok_or_else(unknown)?;
            let c: f64 = c.parse().map_err(|_| unknown())?;
            let inner = inverter_for(inner, f)?;
            return if wrap {
                reductions::amplify(&inner, f, Repetitions::Chernoff { c })
            } else {
                reductions::clip(&inner, c)
            };
        }
    }
    let (base, param) = split_param(name);
    match (base, param) {
        ("brute_force", None) => Ok(brute_force()),
        ("random_guess", None) => Ok(random_guess()),
        ("never_halt", None) => Ok(never_halt()),
        ("zero_guess", None) => Ok(zero_guess()),
        ("half_solver", None) => Ok(half_solver()),
        ("genease_fast", None) => Ok(genease_fast()),
        ("trial_division", None) => Ok(trial_division()),
        ("subset_brute", p) => {
            let w = parse_usize("inverter", name, p, 4)?;
            if w == 0 || w > 16 {
                return Err(unknown());
            }
            Ok(subset_brute(w))
        }
        ("coin_threshold", Some(p)) => {
            let (num, t) = p.split_once(':').ok_or_else(unknown)?;
            let (num, t): (u64, usize) = (num.parse().map_err(|_| unknown())?, t.parse().map_err(|_| unknown())?);
            if t > 20 || num > 1 << t {
                return Err(unknown());
            }
            Ok(coin_threshold(num, t))
        }
        ("jittery_echo", p) => {
            let t = parse_usize("inverter", name, p, 3)?;
            if t > 16 {
                return Err(unknown());
            }
            Ok(jittery_echo(t))
        }
        _ => Err(unknown()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{evaluate, exact_delta, run_inverter, Exec, FuelSchedule, Halt, Measurement};
    use crate::strata::{self, Measured};
    use crate::CoinTape;
    use num_rational::BigRational;
    use num_traits::One;

    fn bits(s: &str) -> BitString {
        s.parse().unwrap()
    }

    #[test]
    fn ceil_log2_values() {
        let expected = [(0, 0), (1, 0), (2, 1), (3, 2), (4, 2), (5, 3), (8, 3), (9, 4), (16, 4), (17, 5)];
        for (n, b) in expected {
            assert_eq!(ceil_log2(n), b, "n = {n}");
            if n >= 1 {
                assert_eq!(b, (n as f64).log2().ceil() as usize);
            }
        }
    }

    #[test]
    fn identity_and_const() {
        assert_eq!(evaluate(&identity(), &bits("0101")).unwrap().0, bits("0101"));
        assert_eq!(evaluate(&identity(), &bits("")).unwrap().0, bits(""));
        assert_eq!(evaluate(&const_zero(), &bits("1101")).unwrap().0, bits("0000"));
    }

    #[test]
    fn const_zero_every_guess_verifies() {
        let d = exact_delta(&random_guess(), &const_zero(), &bits("1101"), 100, 20).unwrap();
        assert_eq!(d.delta, Measured::Exact(BigRational::one()));
        let d = exact_delta(&never_halt(), &const_zero(), &bits("1101"), 100, 20).unwrap();
        assert_eq!(d.delta.as_f64(), 0.0);
    }

    #[test]
    fn mult_matches_integer_oracle() {
        // 1111: p = q = 0b11, with implicit leading one both are 0b111 = 7.
        assert_eq!(evaluate(&mult(), &bits("1111")).unwrap().0, BitString::from_u64(49, 6));
        for v in 0u64..256 {
            let x = BitString::from_u64(v, 8);
            let (p, q) = ((v >> 4) + 16, (v & 15) + 16);
            assert_eq!(evaluate(&mult(), &x).unwrap().0.to_u64(), Some(p * q));
        }
        assert!(evaluate(&mult(), &bits("111")).is_err());
    }

    #[test]
    fn mult_brute_force_is_total_at_desk_scale() {
        let m = Measurement::exact(FuelSchedule::Absolute(u64::MAX / 2));
        for n in [2, 4, 6] {
            let deltas = crate::harness::sphere_deltas(&brute_force(), &mult(), n, &m).unwrap();
            assert!(deltas.iter().all(|d| d.delta.as_f64() == 1.0));
        }
    }

    #[test]
    fn trial_division_success_set_oracle() {
        // Oracle: x = p‖q is solved iff some factorization (P', Q') of
        // (2^h+p)(2^h+q) with both factors in [2^h, 2^{h+1}) has P' - 2^h < 2^{n/4}.
        let n = 8;
        let h = n / 2;
        let lo = 1u64 << h;
        let bound = 1u64 << (n / 4);
        let mut expected = 0u64;
        for v in 0u64..(1 << n) {
            let target = ((v >> h) + lo) * ((v & (lo - 1)) + lo);
            if (0..bound).any(|p| target % (lo + p) == 0 && (lo..2 * lo).contains(&(target / (lo + p)))) {
                expected += 1;
            }
        }
        let m = Measurement::exact(FuelSchedule::Absolute(1 << 20));
        let set = crate::harness::success_set(&trial_division(), &mult(), n, 1.0, &m).unwrap();
        let d = strata::exact_density(&set, n, 24).unwrap();
        assert_eq!(d.value, Measured::Exact(BigRational::new(expected.into(), 256.into())));
    }

    #[test]
    fn subset_sum_encoding() {
        let f = subset_sum(3);
        // b = 2: weights 01, 10, 11; s = 2 + 2 = 4 bits of sum.
        let weights = "011011";
        assert_eq!(evaluate(&f, &bits(&format!("{weights}000"))).unwrap().0, bits(&format!("{weights}0000")));
        assert_eq!(evaluate(&f, &bits(&format!("{weights}010"))).unwrap().0, bits(&format!("{weights}0010")));
        assert_eq!(evaluate(&f, &bits(&format!("{weights}111"))).unwrap().0, bits(&format!("{weights}0110")));
        assert!(evaluate(&f, &bits("0110110")).is_err());
        assert!(evaluate(&f, &bits("011")).is_err());
    }

    #[test]
    fn subset_brute_is_total_and_exhaustive() {
        let w = 3;
        let f = subset_sum(w);
        let inv = subset_brute(w);
        let n = 9;
        let m = Measurement::exact(FuelSchedule::Absolute(1 << 20));
        let deltas = crate::harness::sphere_deltas(&inv, &f, n, &m).unwrap();
        assert!(deltas.iter().all(|d| d.delta.as_f64() == 1.0));
        // Unsatisfiable target: steps cover all 2^w selectors.
        let x = bits("011011111");
        let (y, _) = evaluate(&f, &x).unwrap();
        let out = run_inverter(&inv, &f, &y, n, &CoinTape::empty(), 1 << 20).unwrap();
        assert!(out.status.is_success());
    }

    #[test]
    fn subset_brute_cost_grows_with_w() {
        let mut last = 0;
        for w in [2usize, 4, 6, 8, 10, 12] {
            let f = subset_sum(w);
            let n = 2 * w;
            // weights all 1, selector all 1: the last selector tried in order.
            let x = BitString::ones(n);
            let (y, _) = evaluate(&f, &x).unwrap();
            let out = run_inverter(&subset_brute(w), &f, &y, n, &CoinTape::empty(), u64::MAX / 4).unwrap();
            assert!(out.status.is_success());
            assert!(out.steps_used >= 1 << w);
            assert!(out.steps_used > last);
            last = out.steps_used;
        }
    }

    #[test]
    fn genease_scramble_is_a_permutation() {
        for n in 0..=12 {
            let mut seen = vec![false; 1 << n];
            for v in 0..(1u64 << n) {
                let s = genease_scramble(v, n) as usize;
                assert!(!seen[s]);
                seen[s] = true;
            }
        }
    }

    #[test]
    fn genease_density_oracle() {
        let m = Measurement::exact(FuelSchedule::Absolute(1000));
        for n in [4usize, 8] {
            let set = crate::harness::success_set(&genease_fast(), &genease(), n, 1.0, &m).unwrap();
            let d = strata::exact_density(&set, n, 24).unwrap();
            // Oracle: count strings with a nonzero ⌈log2 n⌉-prefix.
            let b = ceil_log2(n);
            let count = (0u64..(1 << n)).filter(|v| v >> (n - b) != 0).count() as i64;
            assert_eq!(d.value, Measured::Exact(BigRational::new(count.into(), (1i64 << n).into())));
            assert_eq!(d.value.exact().unwrap(), &genease_easy_density(n));
        }
        assert_eq!(genease_easy_density(8), BigRational::new(7.into(), 8.into()));
        assert_eq!(genease_easy_density(16), BigRational::new(15.into(), 16.into()));
    }

    #[test]
    fn genease_fast_loops_on_hard_outputs() {
        let f = genease();
        let x = bits("00010110");
        let (y, _) = evaluate(&f, &x).unwrap();
        assert!(y.get(0));
        let out = run_inverter(&genease_fast(), &f, &y, 8, &CoinTape::empty(), 500).unwrap();
        assert_eq!(out.status, crate::RunStatus::FuelExhausted);
        // Brute force still inverts it.
        let out = run_inverter(&brute_force(), &f, &y, 8, &CoinTape::empty(), u64::MAX / 2).unwrap();
        assert_eq!(out.status, crate::RunStatus::Success(x));
    }

    #[test]
    fn coin_threshold_exact_delta() {
        let d = exact_delta(&coin_threshold(5, 4), &identity(), &bits("0110"), 100, 20).unwrap();
        assert_eq!(d.delta, Measured::Exact(BigRational::new(5.into(), 16.into())));
    }

    #[test]
    fn length_regular_everywhere() {
        let cases: Vec<(CandidateFunction, Vec<usize>)> = vec![
            (identity(), (0..10).collect()),
            (const_zero(), (0..10).collect()),
            (mult(), vec![0, 2, 4, 6, 8, 10]),
            (subset_sum(3), vec![6, 9, 12]),
            (genease(), (0..=12).collect()),
        ];
        for (f, ns) in cases {
            for n in ns {
                for x in BitString::sphere(n) {
                    assert_eq!(evaluate(&f, &x).unwrap().0.len(), f.output_len(n), "{} at n = {n}", f.name());
                }
            }
        }
    }

    #[test]
    fn registry_resolves() {
        for name in FUNCTIONS {
            assert!(function(name).is_ok());
        }
        for name in INVERTERS {
            assert!(inverter(name).is_ok(), "{name}");
        }
        assert_eq!(function("subset_sum:6").unwrap().name(), "subset_sum:6");
        assert!(inverter("amplify:1:random_guess").is_ok());
        assert!(inverter("clip:2:jittery_echo:4").is_ok());
        assert_eq!(inverter("coin_threshold:5:4").unwrap().name(), "coin_threshold:5:4");
        assert!(inverter("coin_threshold:17:4").is_err());
        assert!(matches!(function("sha256"), Err(Error::UnknownName { .. })));
        assert!(matches!(inverter("oracle"), Err(Error::UnknownName { .. })));
        assert!(inverter("amplify:x:random_guess").is_err());
        assert!(inverter("clip:1:nope").is_err());
    }

    #[test]
    fn exec_charges_evaluations() {
        let f = mult();
        let tape = CoinTape::empty();
        let mut exec = Exec::new(&tape, 1000);
        exec.eval(&f, &bits("1111")).unwrap();
        assert_eq!(exec.used(), f.step_bound(4));
        assert_eq!(exec.eval(&f, &bits("111")).unwrap(), None);
        let mut poor = Exec::new(&tape, 3);
        assert_eq!(poor.eval(&f, &bits("1111")), Err(Halt::OutOfFuel));
    }
}
