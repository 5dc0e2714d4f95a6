//! Finite-sample bounds and the model coefficients they depend on.
//!
//! Every evaluator returns a [`BoundReport`] with the raw formula value, the
//! value clamped to `[0, 1]`, and a validity flag. A report is invalid when
//! the formula's regime condition fails or the value is vacuous; its raw
//! value is still reported. Malformed inputs (such as `n = 0` or `|A| < 2`)
//! are errors instead.
//!
//! Logarithms are natural throughout.

use crate::estimators::Schedule;
use crate::model::VlmcModel;
use crate::simulate::{conditional_dist, marginal_prob, stationary_distribution, SimError, StationaryTable, MAX_STATES};
use crate::tree::TruncationLevel;
use crate::word::Word;
use std::f64::consts::E;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
    #[error("word {0} has stationary probability 0")]
    ZeroProbabilityWord(String),
    #[error("depth {d} is below the height {height} of the truncated tree")]
    DepthTooSmall { d: usize, height: usize },
    #[error("A^{0} is too large to enumerate")]
    TooManyWords(usize),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Input columns shared by all reports, in output order.
pub const INPUT_COLUMNS: [&str; 17] = [
    "n", "delta", "f_n", "a_size", "k", "d", "k_n", "alpha0", "beta", "epsilon", "p_min", "p_w", "p_u", "w_len",
    "u_len", "t", "gap",
];

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: &'static str,
    /// `(column, value)` pairs; columns are drawn from [`INPUT_COLUMNS`].
    pub inputs: Vec<(&'static str, f64)>,
    pub raw: f64,
    pub clamped: f64,
    pub valid: bool,
    pub reason: Option<String>,
}

impl BoundReport {
    fn new(name: &'static str, inputs: Vec<(&'static str, f64)>, raw: f64) -> Self {
        Self {
            name,
            inputs,
            raw,
            clamped: if raw.is_nan() { raw } else { raw.clamp(0.0, 1.0) },
            valid: true,
            reason: None,
        }
    }

    fn invalid(mut self, reason: impl Into<String>) -> Self {
        if self.valid {
            self.valid = false;
            self.reason = Some(reason.into());
        }
        self
    }

    /// Lower bound on a probability: vacuous when negative.
    fn lower(self) -> Self {
        if self.raw < 0.0 {
            self.invalid("vacuous")
        } else {
            self
        }
    }

    /// Upper bound on a probability: vacuous when above one.
    fn upper(self) -> Self {
        if self.raw > 1.0 {
            self.invalid("vacuous")
        } else {
            self
        }
    }

    pub fn input(&self, column: &str) -> Option<f64> {
        self.inputs.iter().find(|(c, _)| *c == column).map(|&(_, v)| v)
    }
}

fn check_n(n: u64, min: u64) -> Result<(), BoundError> {
    if n < min {
        return Err(BoundError::InvalidInput(format!("n must be at least {min}, got {n}")));
    }
    Ok(())
}

fn check_positive(name: &str, v: f64) -> Result<(), BoundError> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(BoundError::InvalidInput(format!("{name} must be positive and finite, got {v}")));
    }
    Ok(())
}

fn check_alphabet(a: usize) -> Result<(), BoundError> {
    if a < 2 {
        return Err(BoundError::InvalidInput(format!("alphabet size must be at least 2, got {a}")));
    }
    Ok(())
}

/// `1 − e(δ log n + |A|²) n² exp(−δ/|A|²)`: lower bound on `P(T̂ ⪯ T₀)`.
pub fn over_bound(n: u64, delta: f64, a: usize) -> Result<BoundReport, BoundError> {
    check_n(n, 1)?;
    check_positive("delta", delta)?;
    check_alphabet(a)?;
    let a2 = (a * a) as f64;
    let nf = n as f64;
    let raw = 1.0 - E * (delta * nf.ln() + a2) * nf * nf * (-delta / a2).exp();
    Ok(BoundReport::new("over_bound", vec![("n", nf), ("delta", delta), ("a_size", a as f64)], raw).lower())
}

/// Candidate trees with at most `k_n` nodes:
/// `1 − 2e(δ log n + |A|²) k(n) exp(−δ/|A|²)`.
pub fn over_bound_restricted(n: u64, delta: f64, a: usize, k_n: f64) -> Result<BoundReport, BoundError> {
    check_n(n, 1)?;
    check_positive("delta", delta)?;
    check_positive("k_n", k_n)?;
    check_alphabet(a)?;
    let a2 = (a * a) as f64;
    let nf = n as f64;
    let raw = 1.0 - 2.0 * E * (delta * nf.ln() + a2) * k_n * (-delta / a2).exp();
    Ok(BoundReport::new(
        "over_bound_restricted",
        vec![("n", nf), ("delta", delta), ("a_size", a as f64), ("k_n", k_n)],
        raw,
    )
    .lower())
}

/// Process constants entering the mixing-based bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConstants {
    /// Non-nullness coefficient `α₀`.
    pub alpha0: f64,
    /// Summed continuity rate `β`.
    pub beta: f64,
    /// Separation `ε` of the truncated tree; `+∞` when it has no internal node.
    pub epsilon: f64,
    /// Smallest positive transition probability from a length-`d` past.
    pub p_min: f64,
}

impl ChainConstants {
    fn validate(&self) -> Result<(), BoundError> {
        let ok = (0.0..=1.0).contains(&self.alpha0)
            && self.beta >= 0.0
            && self.beta.is_finite()
            && self.epsilon >= 0.0
            && self.p_min > 0.0
            && self.p_min <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(BoundError::InvalidInput(format!("coefficients out of range: {self:?}")))
        }
    }

    /// `e^{α₀ / (c e² (|A|β + 2α₀))}`.
    fn mixing_factor(&self, c: f64, a: usize) -> f64 {
        (self.alpha0 / (c * E * E * (a as f64 * self.beta + 2.0 * self.alpha0))).exp()
    }

    fn inputs(&self) -> [(&'static str, f64); 2] {
        [("alpha0", self.alpha0), ("beta", self.beta)]
    }
}

/// Lower bound on `P(T₀|_K ⪯ T̂|_K)`:
/// `1 − 3 e^{α₀/(32e²|A|²(|A|β+2α₀))} |A|^{2+K}
/// exp(−n ε² [p_min^d − 8|A|d f(n)/(ε² n)]² / (16(d+1)))`.
///
/// Invalid when the bracket is not positive, which is the explicit form of
/// the "n large enough" condition.
pub fn under_bound(c: &ChainConstants, n: u64, f_n: f64, a: usize, k: usize, d: usize) -> Result<BoundReport, BoundError> {
    check_n(n, 1)?;
    check_alphabet(a)?;
    c.validate()?;
    if !(f_n >= 0.0 && f_n.is_finite()) {
        return Err(BoundError::InvalidInput(format!("f(n) must be nonnegative and finite, got {f_n}")));
    }
    if k == 0 || d == 0 {
        return Err(BoundError::InvalidInput("K and d must be at least 1".into()));
    }
    let (nf, af, df) = (n as f64, a as f64, d as f64);
    let eps2 = c.epsilon * c.epsilon;
    let bracket = c.p_min.powi(d as i32) - 8.0 * af * df * f_n / (eps2 * nf);
    let exponent = -nf * eps2 * bracket * bracket / (16.0 * (df + 1.0));
    // ε = ∞: the truncated tree is a single leaf and cannot be under-estimated
    let tail = if c.epsilon.is_infinite() { 0.0 } else { exponent.exp() };
    let raw = 1.0 - 3.0 * c.mixing_factor(32.0 * af * af, a) * af.powi(2 + k as i32) * tail;
    let mut inputs = vec![("n", nf), ("f_n", f_n), ("a_size", af), ("k", k as f64), ("d", df)];
    inputs.extend(c.inputs());
    inputs.extend([("epsilon", c.epsilon), ("p_min", c.p_min)]);
    let report = BoundReport::new("under_bound", inputs, raw);
    let report = if c.alpha0 == 0.0 {
        report.invalid("alpha0 = 0: non-nullness fails")
    } else if c.epsilon == 0.0 {
        report.invalid("epsilon = 0")
    } else if bracket <= 0.0 {
        report.invalid("n below effective n0")
    } else {
        report
    };
    Ok(report.lower())
}

fn deviation_report(name: &'static str, delta: f64, n: u64, a: usize, raw: f64) -> BoundReport {
    let report = BoundReport::new(name, vec![("n", n as f64), ("delta", delta), ("a_size", a as f64)], raw);
    if delta <= 1.0 {
        let mut r = report.invalid("trivial regime");
        r.clamped = 1.0;
        r
    } else {
        report.upper()
    }
}

fn check_deviation(delta: f64, n: u64) -> Result<(), BoundError> {
    check_positive("delta", delta)?;
    check_n(n, 2)
}

/// `2e ⌈δ log n⌉ e^{−δ}`: tail of `N d(p̂; p)` for one symbol.
pub fn dev_bound_binary(delta: f64, n: u64) -> Result<BoundReport, BoundError> {
    check_deviation(delta, n)?;
    let raw = 2.0 * E * (delta * (n as f64).ln()).ceil() * (-delta).exp();
    Ok(deviation_report("dev_bound_binary", delta, n, 2, raw))
}

/// `2e(δ log n + |A|) e^{−δ/|A|}`: tail of `N D(p̂(·|w); p(·|w))`.
pub fn dev_bound_multi(delta: f64, n: u64, a: usize) -> Result<BoundReport, BoundError> {
    check_deviation(delta, n)?;
    check_alphabet(a)?;
    let af = a as f64;
    let raw = 2.0 * E * (delta * (n as f64).ln() + af) * (-delta / af).exp();
    Ok(deviation_report("dev_bound_multi", delta, n, a, raw))
}

/// Conditional on `N > 0`: `2e(δ log n + |A| − 1) e^{−δ/(|A|−1)}`.
pub fn dev_bound_multi_conditional(delta: f64, n: u64, a: usize) -> Result<BoundReport, BoundError> {
    check_deviation(delta, n)?;
    check_alphabet(a)?;
    let am1 = a as f64 - 1.0;
    let raw = 2.0 * E * (delta * (n as f64).ln() + am1) * (-delta / am1).exp();
    Ok(deviation_report("dev_bound_multi_conditional", delta, n, a, raw))
}

fn check_t(t: f64) -> Result<(), BoundError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(BoundError::PreconditionViolated(format!("t > 0 (t = {t})")));
    }
    Ok(())
}

/// `P(|N(w,a) − n p(wa)| > t) ≤ e^{α₀/(8e²(|A|β+2α₀))} exp(−t²/(|wa| n))`.
pub fn appb_empirical_count_bound(
    c: &ChainConstants,
    a: usize,
    w_len: usize,
    n: u64,
    t: f64,
) -> Result<BoundReport, BoundError> {
    check_n(n, 1)?;
    check_alphabet(a)?;
    c.validate()?;
    check_t(t)?;
    let wa = (w_len + 1) as f64;
    let raw = c.mixing_factor(8.0, a) * (-t * t / (wa * n as f64)).exp();
    let mut inputs = vec![("n", n as f64), ("a_size", a as f64), ("w_len", w_len as f64), ("t", t)];
    inputs.extend(c.inputs());
    Ok(BoundReport::new("appb_empirical_count", inputs, raw).upper())
}

/// `P(N(w) ≤ t) ≤ e^{α₀/(8e²|A|²(|A|β+2α₀))} |A| exp(−n[p(w) − t/n]²/(|w|+1))`
/// for `0 < t < n p(w)`.
pub fn appb_count_lower_tail(
    c: &ChainConstants,
    p_w: f64,
    w_len: usize,
    n: u64,
    t: f64,
    a: usize,
) -> Result<BoundReport, BoundError> {
    check_n(n, 1)?;
    check_alphabet(a)?;
    c.validate()?;
    check_t(t)?;
    let nf = n as f64;
    if t >= nf * p_w {
        return Err(BoundError::PreconditionViolated(format!("t < n p(w) ({t} >= {})", nf * p_w)));
    }
    let af = a as f64;
    let gap = p_w - t / nf;
    let raw = c.mixing_factor(8.0 * af * af, a) * af * (-nf * gap * gap / (w_len as f64 + 1.0)).exp();
    let mut inputs = vec![("n", nf), ("a_size", af), ("p_w", p_w), ("w_len", w_len as f64), ("t", t)];
    inputs.extend(c.inputs());
    Ok(BoundReport::new("appb_count_lower_tail", inputs, raw).upper())
}

/// `P(D(p̂(·|u); p̂(·|w)) ≤ t) ≤ 2 e^{α₀/(32e²|A|²(|A|β+2α₀))} (|A|+1)
/// exp(−n (t/2) min(p(w)²/(|w|+1), p(u)²/(|u|+1)))` for `t < gap²/8`,
/// where `gap = p(b|u) − p(b|w) > 0`.
#[allow(clippy::too_many_arguments)]
pub fn appb_div_separation(
    c: &ChainConstants,
    p_u: f64,
    p_w: f64,
    u_len: usize,
    w_len: usize,
    n: u64,
    t: f64,
    a: usize,
    gap: f64,
) -> Result<BoundReport, BoundError> {
    check_n(n, 1)?;
    check_alphabet(a)?;
    c.validate()?;
    check_t(t)?;
    if gap.is_nan() || gap <= 0.0 {
        return Err(BoundError::PreconditionViolated(format!("p(b|u) - p(b|w) > 0 (gap = {gap})")));
    }
    if t >= gap * gap / 8.0 {
        return Err(BoundError::PreconditionViolated(format!("t < gap^2/8 ({t} >= {})", gap * gap / 8.0)));
    }
    let af = a as f64;
    let m = (p_w * p_w / (w_len as f64 + 1.0)).min(p_u * p_u / (u_len as f64 + 1.0));
    let raw = 2.0 * c.mixing_factor(32.0 * af * af, a) * (af + 1.0) * (-(n as f64) * t / 2.0 * m).exp();
    let mut inputs = vec![
        ("n", n as f64),
        ("a_size", af),
        ("p_w", p_w),
        ("p_u", p_u),
        ("w_len", w_len as f64),
        ("u_len", u_len as f64),
        ("t", t),
        ("gap", gap),
    ];
    inputs.extend(c.inputs());
    Ok(BoundReport::new("appb_div_separation", inputs, raw).upper())
}

/// Numeric diagnostic for the consistency condition
/// `Σ_n exp(−δ_n/|A|² + log(δ_n log n)) < ∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScheduleReport {
    pub n_max: u64,
    /// Partial sum over `2 ≤ n ≤ n_max` with `δ_n > 0`.
    pub partial_sum: f64,
    /// `(n, term)` at powers of ten.
    pub checkpoints: Vec<(u64, f64)>,
    /// Slope of `log term` against `log n` over the last decade.
    pub tail_exponent: f64,
    /// Terms are nonincreasing over `n_max/2 ..= n_max`.
    pub eventually_decreasing: bool,
    /// Indices skipped because `δ_n ≤ 0`.
    pub skipped: u64,
}

impl ScheduleReport {
    /// Eventually decreasing terms with a tail decaying faster than `1/n`.
    pub fn summable_looking(&self) -> bool {
        self.eventually_decreasing && self.tail_exponent < -1.0
    }
}

pub fn consistency_schedule_check(schedule: Schedule, a: usize, n_max: u64) -> Result<ScheduleReport, BoundError> {
    check_alphabet(a)?;
    if n_max < 20 {
        return Err(BoundError::InvalidInput(format!("n_max must be at least 20, got {n_max}")));
    }
    let a2 = (a * a) as f64;
    let term = |n: u64| {
        let delta = schedule.eval(n as usize, a);
        (delta > 0.0).then(|| (-delta / a2 + (delta * (n as f64).ln()).ln()).exp())
    };
    let mut partial_sum = 0.0;
    let mut skipped = 0;
    let mut checkpoints = Vec::new();
    let mut eventually_decreasing = true;
    let mut prev: Option<f64> = None;
    let mut next_checkpoint = 10;
    for n in 2..=n_max {
        let t = term(n);
        match t {
            Some(t) => partial_sum += t,
            None => skipped += 1,
        }
        if n == next_checkpoint {
            checkpoints.push((n, t.unwrap_or(0.0)));
            next_checkpoint *= 10;
        }
        if n >= n_max / 2 {
            if let (Some(p), Some(t)) = (prev, t) {
                if t > p {
                    eventually_decreasing = false;
                }
            }
        }
        prev = t;
    }
    let lo = n_max / 10;
    let tail_exponent = match (term(lo), term(n_max)) {
        (Some(a), Some(b)) => (b.ln() - a.ln()) / ((n_max as f64).ln() - (lo as f64).ln()),
        _ => f64::NAN,
    };
    Ok(ScheduleReport {
        n_max,
        partial_sum,
        checkpoints,
        tail_exponent,
        eventually_decreasing,
        skipped,
    })
}

/// `α₀ = Σ_a min_{w ∈ T₀} p(a|w)`.
pub fn alpha0(model: &VlmcModel) -> f64 {
    (0..model.alphabet_size())
        .map(|a| model.entries().map(|(_, d)| d[a]).fold(f64::INFINITY, f64::min))
        .sum()
}

/// `β(w, r) = max_{u ∈ A^r, p(uw) > 0} max_a |p(a|w) − p(a|uw)|`.
pub fn beta_wr(model: &VlmcModel, table: &StationaryTable, w: &Word, r: usize) -> Result<f64, BoundError> {
    let a = model.alphabet_size();
    let base = conditional_dist(model, table, w).ok_or_else(|| BoundError::ZeroProbabilityWord(w.render(model.alphabet())))?;
    let mut best: f64 = 0.0;
    for u in Word::all_of_length(a, r) {
        let uw = Word::new([u.symbols(), w.symbols()].concat());
        if let Some(ext) = conditional_dist(model, table, &uw) {
            for (p, q) in base.iter().zip(&ext) {
                best = best.max((p - q).abs());
            }
        }
    }
    Ok(best)
}

/// `sup_r β(w, r)`. For a tree of height `h`, `β(w, r)` is constant for
/// `r ≥ h − |w|`, so scanning `r ≤ max(h − |w|, 0) + 2` is exact.
fn beta_sup(model: &VlmcModel, table: &StationaryTable, w: &Word) -> Result<f64, BoundError> {
    let r_max = model.height().saturating_sub(w.len()) + 2;
    let values = (1..=r_max).map(|r| beta_wr(model, table, w, r)).collect::<Result<Vec<_>, _>>()?;
    debug_assert!((values[r_max - 1] - values[r_max - 2]).abs() <= 1e-12, "beta({w:?}, r) not stable: {values:?}");
    Ok(values.into_iter().fold(0.0, f64::max))
}

fn check_enumerable(a: usize, k: usize) -> Result<(), BoundError> {
    match a.checked_pow(k as u32) {
        Some(c) if c <= MAX_STATES => Ok(()),
        _ => Err(BoundError::TooManyWords(k)),
    }
}

/// `β_k = max_{w ∈ A^k, p(w) > 0} sup_r β(w, r)`.
pub fn beta_k(model: &VlmcModel, table: &StationaryTable, k: usize) -> Result<f64, BoundError> {
    check_enumerable(model.alphabet_size(), k)?;
    let mut best: f64 = 0.0;
    for w in Word::all_of_length(model.alphabet_size(), k) {
        if marginal_prob(model, table, &w) > 0.0 {
            best = best.max(beta_sup(model, table, &w)?);
        }
    }
    Ok(best)
}

/// `ε_{K,d} = min_{w internal in T₀|_K} max_{r ≤ d − |w|} β(w, r)`, or `+∞`
/// when `T₀|_K` has no internal node. Internal nodes with `p(w) = 0` are
/// skipped.
pub fn epsilon_kd(model: &VlmcModel, table: &StationaryTable, k: TruncationLevel, d: usize) -> Result<f64, BoundError> {
    let truncated = model.tree().truncate(k);
    if d < truncated.height() {
        return Err(BoundError::DepthTooSmall { d, height: truncated.height() });
    }
    let mut eps = f64::INFINITY;
    for w in truncated.internal_nodes() {
        if marginal_prob(model, table, &w) == 0.0 {
            continue;
        }
        let mut m: f64 = 0.0;
        for r in 1..=d - w.len() {
            m = m.max(beta_wr(model, table, &w, r)?);
        }
        eps = eps.min(m);
    }
    Ok(eps)
}

/// `min { p(a|w) : a ∈ A, w ∈ A^d, p(w) > 0, p(a|w) > 0 }`.
pub fn p_min_d(model: &VlmcModel, table: &StationaryTable, d: usize) -> Result<f64, BoundError> {
    check_enumerable(model.alphabet_size(), d)?;
    let mut best = f64::INFINITY;
    for w in Word::all_of_length(model.alphabet_size(), d) {
        if let Some(dist) = conditional_dist(model, table, &w) {
            best = dist.iter().copied().filter(|&p| p > 0.0).fold(best, f64::min);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelCoefficients {
    pub alpha0: f64,
    /// `β_1, …, β_{h−1}`; `β_k = 0` for `k ≥ h`.
    pub beta_k: Vec<f64>,
    pub beta_sum: f64,
    pub p_min_d: f64,
    pub epsilon_kd: f64,
    pub k: usize,
    pub d: usize,
}

impl ModelCoefficients {
    pub fn compute(model: &VlmcModel, k: TruncationLevel, d: usize) -> Result<Self, BoundError> {
        let table = stationary_distribution(model)?;
        Self::with_table(model, &table, k, d)
    }

    pub fn with_table(model: &VlmcModel, table: &StationaryTable, k: TruncationLevel, d: usize) -> Result<Self, BoundError> {
        let epsilon_kd = epsilon_kd(model, table, k, d)?;
        let beta_k = (1..model.height()).map(|j| beta_k(model, table, j)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            alpha0: alpha0(model),
            beta_sum: beta_k.iter().sum(),
            beta_k,
            p_min_d: p_min_d(model, table, d)?,
            epsilon_kd,
            k: k.get(),
            d,
        })
    }

    pub fn constants(&self) -> ChainConstants {
        ChainConstants {
            alpha0: self.alpha0,
            beta: self.beta_sum,
            epsilon: self.epsilon_kd,
            p_min: self.p_min_d,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::Alphabet;

    fn fixture() -> VlmcModel {
        VlmcModel::from_strs(
            &Alphabet::binary(),
            &[("1", vec![0.7, 0.3]), ("10", vec![0.4, 0.6]), ("00", vec![0.1, 0.9])],
        )
        .unwrap()
    }

    fn w(s: &str) -> Word {
        Word::parse(s, &Alphabet::binary()).unwrap()
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * b.abs().max(1e-300)
    }

    #[test]
    fn over_examples() {
        let r = over_bound(10_000, 150.0, 2).unwrap();
        assert!(close(1.0 - r.raw, 1.949_278_731_039_328_5e-5, 1e-9));
        assert!(r.valid);
        let r = over_bound(10_000, 20.0, 2).unwrap();
        assert!(r.raw < 0.0);
        assert_eq!(r.clamped, 0.0);
        assert_eq!(r.reason.as_deref(), Some("vacuous"));
        assert!(over_bound(0, 1.0, 2).is_err());
        assert!(over_bound(10, 0.0, 2).is_err());
    }

    #[test]
    fn over_monotone_past_turning_point() {
        let values: Vec<f64> = (10..=1000).map(|d| over_bound(1000, d as f64, 2).unwrap().raw).collect();
        let turn = values.iter().enumerate().fold(0, |best, (i, v)| if *v < values[best] { i } else { best });
        assert!(values[turn..].windows(2).all(|p| p[1] >= p[0]));
        assert!(close(values[values.len() - 1], 1.0, 1e-12));
        let r = over_bound_restricted(1000, 100.0, 2, 16.0).unwrap();
        assert!(r.raw > over_bound(1000, 100.0, 2).unwrap().raw);
    }

    #[test]
    fn under_examples() {
        let c = ChainConstants { alpha0: 1.0, beta: 0.0, epsilon: 1.0, p_min: 1.0 };
        let r = under_bound(&c, 1000, 0.0, 2, 1, 1).unwrap();
        assert!(close(1.0 - r.raw, 6.437_811_754_628_273e-13, 1e-3));
        assert!(r.valid);
        let r = under_bound(&c, 10, 5.0, 2, 1, 1).unwrap();
        assert_eq!(r.reason.as_deref(), Some("n below effective n0"));
        let c = ChainConstants { alpha0: 0.4, beta: 0.2, epsilon: 0.2, p_min: 0.1 };
        let values: Vec<f64> = (1..=50)
            .map(|i| under_bound(&c, i * 100_000, 3.0, 2, 2, 2).unwrap())
            .filter(|r| r.valid || r.reason.as_deref() == Some("vacuous"))
            .map(|r| r.raw)
            .collect();
        assert!(values.len() > 10);
        assert!(values.windows(2).all(|p| p[1] >= p[0]));
        let iid = ChainConstants { epsilon: f64::INFINITY, ..c };
        assert_eq!(under_bound(&iid, 100, 1.0, 2, 1, 1).unwrap().raw, 1.0);
    }

    #[test]
    fn deviation_examples() {
        let r = dev_bound_binary(10.0, 100).unwrap();
        assert!(close(r.raw, 0.011_600_521_584_147_878, 1e-12));
        let r = dev_bound_binary(0.5, 100).unwrap();
        assert_eq!((r.clamped, r.valid), (1.0, false));
        assert_eq!(r.reason.as_deref(), Some("trivial regime"));
        assert!(dev_bound_multi(10.0, 100, 1).is_err());
        let m = dev_bound_multi(10.0, 100, 2).unwrap().raw;
        assert!(close(m, 2.0 * E * (10.0 * 100f64.ln() + 2.0) * (-5.0f64).exp(), 1e-14));
        let c = dev_bound_multi_conditional(10.0, 100, 2).unwrap().raw;
        assert!(close(c, 2.0 * E * (10.0 * 100f64.ln() + 1.0) * (-10.0f64).exp(), 1e-14));
        assert!(!dev_bound_binary(3.0, 1000).unwrap().valid);
    }

    #[test]
    fn count_and_separation_examples() {
        let c = ChainConstants { alpha0: 1.0, beta: 0.0, epsilon: 1.0, p_min: 1.0 };
        let r = appb_count_lower_tail(&c, 0.5, 1, 1000, 100.0, 2).unwrap();
        assert!(close(r.raw, 3.617_343_979_246_153_5e-35, 1e-12));
        assert!(matches!(
            appb_count_lower_tail(&c, 0.5, 1, 1000, 500.0, 2),
            Err(BoundError::PreconditionViolated(_))
        ));
        assert!(appb_div_separation(&c, 0.5, 0.5, 1, 1, 1000, 0.05, 2, 0.6).is_err());
        let d1 = appb_div_separation(&c, 0.5, 0.4, 1, 2, 1000, 0.01, 2, 0.6).unwrap().raw;
        let d2 = appb_div_separation(&c, 0.5, 0.4, 1, 2, 2000, 0.01, 2, 0.6).unwrap().raw;
        assert!(d2 <= d1);
        let e1 = appb_empirical_count_bound(&c, 2, 1, 1000, 100.0).unwrap().raw;
        let e2 = appb_empirical_count_bound(&c, 2, 1, 2000, 100.0).unwrap().raw;
        assert!(e2 >= e1);
    }

    #[test]
    fn schedule_diagnostics() {
        let r = consistency_schedule_check(Schedule::CLogN(9.0), 2, 1_000_000).unwrap();
        assert!(r.summable_looking(), "{r:?}");
        let r = consistency_schedule_check(Schedule::CLogLogN(4.0), 2, 1_000_000).unwrap();
        assert!(!r.eventually_decreasing);
        assert!(!r.summable_looking());
        let r = consistency_schedule_check(Schedule::Bic, 2, 1_000_000).unwrap();
        assert!(r.partial_sum > 0.0 && r.tail_exponent.is_finite());
    }

    #[test]
    fn fixture_coefficients() {
        let m = fixture();
        let t = stationary_distribution(&m).unwrap();
        assert!((alpha0(&m) - 0.4).abs() < 1e-15);
        assert_eq!(p_min_d(&m, &t, 2).unwrap(), 0.1);
        assert!((beta_wr(&m, &t, &Word::empty(), 1).unwrap() - 357.0 / 1810.0).abs() < 1e-12);
        assert!((beta_wr(&m, &t, &Word::empty(), 2).unwrap() - 729.0 / 1810.0).abs() < 1e-12);
        assert!((beta_wr(&m, &t, &w("0"), 1).unwrap() - 27.0 / 130.0).abs() < 1e-12);
        assert_eq!(beta_wr(&m, &t, &w("1"), 3).unwrap(), 0.0);
        assert!((beta_k(&m, &t, 1).unwrap() - 27.0 / 130.0).abs() < 1e-12);
        for k in 2..=4 {
            assert_eq!(beta_k(&m, &t, k).unwrap(), 0.0);
        }
        let c = ModelCoefficients::compute(&m, TruncationLevel::new(3).unwrap(), 4).unwrap();
        assert!((c.epsilon_kd - 27.0 / 130.0).abs() < 1e-12);
        assert_eq!(c.beta_k.len(), 1);
        assert!(matches!(
            ModelCoefficients::compute(&m, TruncationLevel::new(3).unwrap(), 1),
            Err(BoundError::DepthTooSmall { d: 1, height: 2 })
        ));
    }

    #[test]
    fn order_one_and_iid_coefficients() {
        let m = VlmcModel::from_strs(&Alphabet::binary(), &[("0", vec![0.9, 0.1]), ("1", vec![0.4, 0.6])]).unwrap();
        let c = ModelCoefficients::compute(&m, TruncationLevel::new(1).unwrap(), 1).unwrap();
        assert!((c.epsilon_kd - 0.4).abs() < 1e-12);
        assert!(c.beta_k.is_empty());
        let iid = VlmcModel::from_strs(&Alphabet::binary(), &[("EPS", vec![0.5, 0.5])]).unwrap();
        let t = stationary_distribution(&iid).unwrap();
        let c = ModelCoefficients::with_table(&iid, &t, TruncationLevel::new(2).unwrap(), 3).unwrap();
        assert_eq!(c.alpha0, 1.0);
        assert!(c.epsilon_kd.is_infinite());
        assert_eq!(beta_k(&iid, &t, 1).unwrap(), 0.0);
        let zero = VlmcModel::from_strs(&Alphabet::binary(), &[("0", vec![0.0, 1.0]), ("1", vec![1.0, 0.0])]).unwrap();
        assert_eq!(alpha0(&zero), 0.0);
    }

    #[test]
    fn zero_probability_word() {
        let m = VlmcModel::from_strs(&Alphabet::binary(), &[("0", vec![0.5, 0.5]), ("1", vec![1.0, 0.0])]).unwrap();
        let t = stationary_distribution(&m).unwrap();
        assert!(matches!(beta_wr(&m, &t, &w("11"), 1), Err(BoundError::ZeroProbabilityWord(_))));
    }
}
