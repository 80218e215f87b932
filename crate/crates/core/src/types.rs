//! Classical method-of-types machinery for binary sequences: typicality
//! windows, type-class sizes, entropies, exact window masses and the
//! large-deviation exponent that controls the outside-layer tail.
//!
//! Window membership is decided in exact integer arithmetic whenever the
//! window parameters admit a small rational representation; boundary counts
//! flip membership, so they must be deterministic. Masses are summed in log
//! space, smallest terms first, which keeps the computation stable up to
//! n of order 10^6.

use serde::Serialize;
use statrs::function::factorial::ln_binomial;

use crate::bloch::ProjectedDistribution;
use crate::error::{Error, Result};

const LN_2: f64 = std::f64::consts::LN_2;

/// Largest denominator tried when recovering exact rational window
/// parameters from floats.
const MAX_RATIONAL_DEN: u64 = 10_000;

/// Incremental log-term walkers re-anchor on a direct evaluation this often,
/// capping accumulated drift.
const REANCHOR_INTERVAL: u32 = 256;

/// Upper limit for [`required_n`] searches.
const MAX_SEARCH_N: u64 = 2_000_000;

/// The triple (n, eps, q) defining the frequency window
/// `{ x^n : |k/n - q| <= eps/2 }` where k counts the symbol 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalSetSpec {
    n: u64,
    eps: f64,
    q: f64,
    #[serde(skip)]
    exact: Option<ExactWindow>,
}

/// Window bounds as integer cross-multiplications: membership of k reduces
/// to `2 * eps_den * |k * q_den - n * q_num| <= eps_num * n * q_den`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct ExactWindow {
    q_num: i128,
    q_den: i128,
    eps_num: i128,
    eps_den: i128,
}

/// Smallest-denominator rational exactly equal to `x`, if one exists with
/// denominator <= MAX_RATIONAL_DEN.
fn small_ratio(x: f64) -> Option<(u64, u64)> {
    if !(0.0..=2.0).contains(&x) {
        return None;
    }
    for den in 1..=MAX_RATIONAL_DEN {
        let num = (x * den as f64).round();
        if num >= 0.0 && num as u64 as f64 == num && num / den as f64 == x {
            return Some((num as u64, den));
        }
    }
    None
}

impl TypicalSetSpec {
    pub fn new(n: u64, eps: f64, q: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if !(eps > 0.0 && eps <= 2.0) {
            return Err(Error::InvalidParameter(format!(
                "eps = {eps} outside (0, 2]"
            )));
        }
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidParameter(format!("q = {q} outside [0, 1]")));
        }
        let exact = match (small_ratio(eps), small_ratio(q)) {
            (Some((en, ed)), Some((qn, qd))) => Some(ExactWindow {
                q_num: qn as i128,
                q_den: qd as i128,
                eps_num: en as i128,
                eps_den: ed as i128,
            }),
            _ => None,
        };
        Ok(Self { n, eps, q, exact })
    }

    /// Window centered on q = 1/2 (the protocol always measures against the
    /// center of the Bloch ball).
    pub fn centered(n: u64, eps: f64) -> Result<Self> {
        Self::new(n, eps, 0.5)
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Whether membership is decided in exact integer arithmetic.
    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// Membership of the count k in the window, `|k/n - q| <= eps/2`.
    pub fn contains(&self, k: u64) -> Result<bool> {
        if k > self.n {
            return Err(Error::CountOutOfRange { k, n: self.n });
        }
        Ok(self.contains_unchecked(k))
    }

    fn contains_unchecked(&self, k: u64) -> bool {
        debug_assert!(k <= self.n);
        if let Some(w) = self.exact {
            let lhs = 2 * w.eps_den * (k as i128 * w.q_den - self.n as i128 * w.q_num).abs();
            lhs <= w.eps_num * self.n as i128 * w.q_den
        } else {
            (k as f64 / self.n as f64 - self.q).abs() <= self.eps / 2.0
        }
    }

    /// Inclusive range of counts inside the window, or None when no
    /// achievable frequency falls in it (possible for n < 1/eps).
    pub fn feasible_range(&self) -> Option<(u64, u64)> {
        let n = self.n;
        if let Some(w) = self.exact {
            // k >= n(2 q_num eps_den - q_den eps_num) / (2 q_den eps_den)
            let den = 2 * w.q_den * w.eps_den;
            let lo_num = n as i128 * (2 * w.q_num * w.eps_den - w.q_den * w.eps_num);
            let hi_num = n as i128 * (2 * w.q_num * w.eps_den + w.q_den * w.eps_num);
            let lo = div_ceil(lo_num, den).max(0);
            let hi = div_floor(hi_num, den).min(n as i128);
            if lo > hi {
                return None;
            }
            return Some((lo as u64, hi as u64));
        }
        // Float fallback: bracket with estimates, then settle boundaries with
        // the canonical membership test.
        let est_lo = ((self.q - self.eps / 2.0) * n as f64).floor() as i64 - 2;
        let est_hi = ((self.q + self.eps / 2.0) * n as f64).ceil() as i64 + 2;
        let mut lo = None;
        let mut k = est_lo.max(0) as u64;
        while k <= est_hi.min(n as i64).max(0) as u64 {
            if self.contains_unchecked(k) {
                lo = Some(k);
                break;
            }
            k += 1;
        }
        let lo = lo?;
        let mut hi = lo;
        let mut k = est_hi.min(n as i64).max(0) as u64;
        loop {
            if self.contains_unchecked(k) {
                hi = k;
                break;
            }
            if k == lo {
                break;
            }
            k -= 1;
        }
        Some((lo, hi))
    }
}

fn div_floor(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    let q = a / b;
    if a % b != 0 && a < 0 {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    debug_assert!(b > 0);
    let q = a / b;
    if a % b != 0 && a > 0 {
        q + 1
    } else {
        q
    }
}

/// Empirical frequency of a length-n binary sequence with k zeros.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EmpiricalType {
    n: u64,
    k: u64,
}

impl EmpiricalType {
    pub fn new(n: u64, k: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("n must be >= 1".into()));
        }
        if k > n {
            return Err(Error::CountOutOfRange { k, n });
        }
        Ok(Self { n, k })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn p0(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn p1(&self) -> f64 {
        1.0 - self.p0()
    }
}

/// log2 of the type-class size |T(P)| = C(n, k). Always <= n H(k/n).
pub fn type_class_log_size(t: &EmpiricalType) -> f64 {
    ln_binomial(t.n, t.k) / LN_2
}

/// Binary Shannon entropy in bits, with the 0 log 0 = 0 convention.
pub fn shannon_entropy(p0: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p0));
    let term = |p: f64| if p > 0.0 { -p * p.log2() } else { 0.0 };
    term(p0) + term(1.0 - p0)
}

/// Binary relative entropy D(P || Q) in bits. Support mismatch (p > 0 with
/// q = 0) yields +infinity, a valid result.
pub fn relative_entropy(p0: f64, q0: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p0) && (0.0..=1.0).contains(&q0));
    let term = |p: f64, q: f64| {
        if p == 0.0 {
            0.0
        } else if q == 0.0 {
            f64::INFINITY
        } else {
            p * (p / q).log2()
        }
    };
    term(p0, q0) + term(1.0 - p0, 1.0 - q0)
}

/// Walks ln[ C(n,k) q0^k q1^(n-k) ] across k with O(1) steps, periodically
/// re-anchored on a direct evaluation.
struct LogTermWalker {
    n: u64,
    k: u64,
    ln_q0: f64,
    ln_q1: f64,
    t: f64,
    since_anchor: u32,
}

impl LogTermWalker {
    fn at(n: u64, k: u64, ln_q0: f64, ln_q1: f64) -> Self {
        let mut w = Self {
            n,
            k,
            ln_q0,
            ln_q1,
            t: 0.0,
            since_anchor: 0,
        };
        w.anchor();
        w
    }

    fn anchor(&mut self) {
        self.t =
            ln_binomial(self.n, self.k) + self.k as f64 * self.ln_q0
                + (self.n - self.k) as f64 * self.ln_q1;
        self.since_anchor = 0;
    }

    fn step_up(&mut self) {
        let k = self.k as f64;
        let n = self.n as f64;
        self.t += (n - k).ln() - (k + 1.0).ln() + self.ln_q0 - self.ln_q1;
        self.k += 1;
        self.since_anchor += 1;
        if self.since_anchor >= REANCHOR_INTERVAL {
            self.anchor();
        }
    }

    fn step_down(&mut self) {
        let k = self.k as f64;
        let n = self.n as f64;
        self.t += k.ln() - (n - k + 1.0).ln() - self.ln_q0 + self.ln_q1;
        self.k -= 1;
        self.since_anchor += 1;
        if self.since_anchor >= REANCHOR_INTERVAL {
            self.anchor();
        }
    }
}

/// Exact probability that an i.i.d. `dist` sequence of length n lands in the
/// window: the binomial mass over the feasible counts.
///
/// Terms are accumulated in log space from both window edges toward the
/// peak, so the smallest contributions are added first.
pub fn typical_mass(spec: &TypicalSetSpec, dist: &ProjectedDistribution) -> f64 {
    let n = spec.n();
    let Some((lo, hi)) = spec.feasible_range() else {
        return 0.0;
    };
    let q0 = dist.q0();
    let q1 = dist.q1();
    if q0 <= 0.0 {
        // All-ones sequences: k = 0 with certainty.
        return if lo == 0 { 1.0 } else { 0.0 };
    }
    if q0 >= 1.0 {
        return if hi == n { 1.0 } else { 0.0 };
    }
    let ln_q0 = q0.ln();
    let ln_q1 = q1.ln();
    // Mode of the binomial, clamped into the window: the largest term.
    let peak = (((n + 1) as f64 * q0).floor() as u64).clamp(lo, hi);
    let t_peak = ln_binomial(n, peak) + peak as f64 * ln_q0 + (n - peak) as f64 * ln_q1;

    let mut left = LogTermWalker::at(n, lo, ln_q0, ln_q1);
    let mut right = LogTermWalker::at(n, hi, ln_q0, ln_q1);
    let mut sum = 0.0f64;
    // left covers [lo, peak], right covers (peak, hi], merged smallest-first.
    loop {
        let left_live = left.k <= peak;
        let right_live = right.k > peak;
        match (left_live, right_live) {
            (false, false) => break,
            (true, false) => {
                sum += (left.t - t_peak).exp();
                if left.k == peak {
                    break;
                }
                left.step_up();
            }
            (false, true) => {
                sum += (right.t - t_peak).exp();
                if right.k == peak + 1 {
                    break;
                }
                right.step_down();
            }
            (true, true) => {
                if left.t <= right.t {
                    sum += (left.t - t_peak).exp();
                    left.step_up();
                } else {
                    sum += (right.t - t_peak).exp();
                    right.step_down();
                }
            }
        }
    }
    (t_peak + sum.ln()).exp().clamp(0.0, 1.0)
}

/// Output of [`lemma1_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lemma1Report {
    /// Exact mass of the window under the shifted distribution.
    pub mass: f64,
    /// Whether mass >= 1 - delta.
    pub satisfied: bool,
    /// Width of the nested window centered on q': eps' = eps - 2|q' - q|.
    /// Every count accepted by (n, eps', q') is accepted by (n, eps, q).
    pub eps_prime: f64,
}

/// High-probability check for a distribution whose center q' sits within
/// eps/2 of the window center q.
pub fn lemma1_check(spec: &TypicalSetSpec, q_prime: f64, delta: f64) -> Result<Lemma1Report> {
    if !(0.0..=1.0).contains(&q_prime) {
        return Err(Error::InvalidParameter(format!(
            "q' = {q_prime} outside [0, 1]"
        )));
    }
    let shift = (q_prime - spec.q()).abs();
    if shift > spec.eps() / 2.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "|q' - q| = {shift} exceeds eps/2 = {}",
            spec.eps() / 2.0
        )));
    }
    let mass = typical_mass(spec, &ProjectedDistribution::new(q_prime)?);
    Ok(Lemma1Report {
        mass,
        satisfied: mass >= 1.0 - delta,
        eps_prime: (spec.eps() - 2.0 * shift).max(0.0),
    })
}

/// Large-deviation data for the window mass under `dist`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorExponent {
    /// min over feasible counts k of D(k/n || q0), in bits.
    pub min_divergence_bits: f64,
    /// The count attaining the minimum (found by enumeration).
    pub argmin_k: u64,
    /// Finite-n tail bound (n+1) 2^(-n min D); an upper bound on the mass.
    pub finite_n_bound: f64,
    /// min over the real window [q - eps/2, q + eps/2] of D(p || q0):
    /// the n -> infinity exponent, for reference.
    pub continuum_divergence_bits: f64,
}

/// Minimizes D(P || dist) over the discrete feasible types of the window by
/// full enumeration, and forms the (n+1) 2^(-n min D) tail bound.
pub fn error_exponent(spec: &TypicalSetSpec, dist: &ProjectedDistribution) -> Result<ErrorExponent> {
    let n = spec.n();
    let (lo, hi) = spec.feasible_range().ok_or(Error::EmptyWindow {
        n,
        eps: spec.eps(),
        q: spec.q(),
    })?;
    let q0 = dist.q0();
    let mut min_d = f64::INFINITY;
    let mut argmin = lo;
    for k in lo..=hi {
        let d = relative_entropy(k as f64 / n as f64, q0);
        if d < min_d {
            min_d = d;
            argmin = k;
        }
    }
    let finite_n_bound = if min_d.is_finite() {
        (((n + 1) as f64).log2() - n as f64 * min_d).exp2()
    } else {
        0.0
    };
    let window_lo = (spec.q() - spec.eps() / 2.0).max(0.0);
    let window_hi = (spec.q() + spec.eps() / 2.0).min(1.0);
    let continuum = relative_entropy(q0.clamp(window_lo, window_hi), q0);
    Ok(ErrorExponent {
        min_divergence_bits: min_d,
        argmin_k: argmin,
        finite_n_bound,
        continuum_divergence_bits: continuum,
    })
}

/// Which machinery [`required_n`] uses to certify each n.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SearchMode {
    /// Exact binomial masses.
    ExactTail,
    /// The (n+1) 2^(-n min D) bound; only meaningful outside the window.
    ExponentBound,
}

/// Smallest n such that the window criterion holds for n and every larger n
/// up to the verification horizon max(4 n, 1000).
///
/// For `dist` inside the window (strictly: the boundary case does not
/// concentrate) the criterion is mass >= 1 - delta; outside it is
/// mass <= delta (or bound <= delta in `ExponentBound` mode). The horizon
/// re-check matters because window edges quantize with n and the masses are
/// not monotone.
pub fn required_n(
    eps: f64,
    delta: f64,
    dist: &ProjectedDistribution,
    mode: SearchMode,
) -> Result<u64> {
    if !(eps > 0.0 && eps <= 2.0) {
        return Err(Error::InvalidParameter(format!(
            "eps = {eps} outside (0, 2]"
        )));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} outside (0, 1]"
        )));
    }
    let dev = (dist.q0() - 0.5).abs();
    let inside = if dev < eps / 2.0 {
        true
    } else if dev > eps / 2.0 {
        false
    } else {
        return Err(Error::InvalidParameter(
            "distribution sits exactly on the window boundary; the mass does not concentrate"
                .into(),
        ));
    };
    if inside && mode == SearchMode::ExponentBound {
        return Err(Error::InvalidParameter(
            "ExponentBound certifies only the outside case".into(),
        ));
    }

    let criterion = |n: u64| -> Result<bool> {
        let spec = TypicalSetSpec::centered(n, eps)?;
        Ok(if inside {
            typical_mass(&spec, dist) >= 1.0 - delta
        } else {
            match mode {
                SearchMode::ExactTail => typical_mass(&spec, dist) <= delta,
                SearchMode::ExponentBound => match error_exponent(&spec, dist) {
                    Ok(e) => e.finite_n_bound <= delta,
                    // Empty window: the tail is exactly zero.
                    Err(Error::EmptyWindow { .. }) => true,
                    Err(e) => return Err(e),
                },
            }
        })
    };

    let mut last_fail = 0u64;
    let mut checked = 0u64;
    loop {
        let candidate = last_fail + 1;
        let horizon = (4 * candidate).max(1000);
        if checked >= horizon {
            return Ok(candidate);
        }
        if horizon > MAX_SEARCH_N {
            return Err(Error::SearchExhausted { limit: MAX_SEARCH_N });
        }
        for n in checked + 1..=horizon {
            if !criterion(n)? {
                last_fail = n;
            }
        }
        checked = horizon;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use num_bigint::BigUint;
    use proptest::prelude::*;

    // -- independent oracles -----------------------------------------------

    /// Exact binomial coefficient.
    fn binom_exact(n: u64, k: u64) -> BigUint {
        let mut acc = BigUint::from(1u32);
        for i in 0..k.min(n - k) {
            acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
        }
        acc
    }

    /// Exact window mass for a rational distribution q0 = num/den, returned
    /// as (numerator, den^n).
    fn mass_exact(spec: &TypicalSetSpec, num: u64, den: u64) -> (BigUint, BigUint) {
        let n = spec.n();
        let mut acc = BigUint::from(0u32);
        if let Some((lo, hi)) = spec.feasible_range() {
            for k in lo..=hi {
                acc += binom_exact(n, k)
                    * BigUint::from(num).pow(k as u32)
                    * BigUint::from(den - num).pow((n - k) as u32);
            }
        }
        (acc, BigUint::from(den).pow(n as u32))
    }

    fn mass_oracle_f64(spec: &TypicalSetSpec, num: u64, den: u64) -> f64 {
        let (a, b) = mass_exact(spec, num, den);
        // Scale to keep the conversion in f64 range.
        let scale = BigUint::from(1u128 << 60);
        let scaled = (a * &scale) / b;
        let mut v = 0.0f64;
        for d in scaled.to_u64_digits().iter().rev() {
            v = v * 1.8446744073709552e19 + *d as f64;
        }
        v / (1u64 << 60) as f64
    }

    /// Direct enumeration over all 2^n bitstrings: the slowest, most
    /// independent route to the window mass and cardinality.
    fn enumerate_mass(spec: &TypicalSetSpec, q0: f64) -> f64 {
        let n = spec.n();
        assert!(n <= 20);
        let mut mass = 0.0;
        for x in 0u64..(1 << n) {
            let k = n - x.count_ones() as u64;
            if spec.contains(k).unwrap() {
                mass += q0.powi(k as i32) * (1.0 - q0).powi((n - k) as i32);
            }
        }
        mass
    }

    fn dist(q0: f64) -> ProjectedDistribution {
        ProjectedDistribution::new(q0).unwrap()
    }

    // -- membership --------------------------------------------------------

    #[test]
    fn membership_examples() {
        let spec = TypicalSetSpec::new(10, 0.2, 0.5).unwrap();
        assert!(spec.is_exact());
        assert!(spec.contains(5).unwrap());
        assert!(!spec.contains(3).unwrap());
        // Boundary |0.4 - 0.5| = 0.1 = eps/2 is inclusive.
        assert!(spec.contains(4).unwrap());
        assert!(spec.contains(6).unwrap());
        assert!(!spec.contains(7).unwrap());
        assert!(spec.contains(11).is_err());
    }

    #[test]
    fn feasible_range_matches_membership() {
        for (n, eps, q) in [
            (10, 0.2, 0.5),
            (7, 0.3, 0.4),
            (1, 2.0, 0.5),
            (3, 0.2, 0.5),  // empty: no k/3 within 0.1 of 0.5
            (100, 0.01, 0.33),
            (17, 1.0, 0.0),
        ] {
            let spec = TypicalSetSpec::new(n, eps, q).unwrap();
            let range = spec.feasible_range();
            let brute: Vec<u64> = (0..=n).filter(|&k| spec.contains(k).unwrap()).collect();
            match range {
                None => assert!(brute.is_empty(), "(n={n}, eps={eps}, q={q})"),
                Some((lo, hi)) => {
                    assert_eq!(lo, brute[0], "(n={n}, eps={eps}, q={q})");
                    assert_eq!(hi, *brute.last().unwrap(), "(n={n}, eps={eps}, q={q})");
                    assert_eq!(brute.len() as u64, hi - lo + 1);
                }
            }
        }
    }

    #[test]
    fn irrational_window_falls_back_to_float() {
        let spec = TypicalSetSpec::new(10, 0.2, std::f64::consts::FRAC_1_SQRT_2 / 2.0).unwrap();
        assert!(!spec.is_exact());
        let brute: Vec<u64> = (0..=10).filter(|&k| spec.contains(k).unwrap()).collect();
        let (lo, hi) = spec.feasible_range().unwrap();
        assert_eq!((lo, hi), (brute[0], *brute.last().unwrap()));
    }

    #[test]
    fn spec_validation() {
        assert!(TypicalSetSpec::new(0, 0.2, 0.5).is_err());
        assert!(TypicalSetSpec::new(5, 0.0, 0.5).is_err());
        assert!(TypicalSetSpec::new(5, 2.1, 0.5).is_err());
        assert!(TypicalSetSpec::new(5, 0.2, 1.1).is_err());
        assert!(TypicalSetSpec::new(5, 2.0, 1.0).is_ok());
    }

    // -- entropies ----------------------------------------------------------

    #[test]
    fn entropy_values() {
        assert_abs_diff_eq!(shannon_entropy(0.5), 1.0, epsilon = 1e-15);
        assert_eq!(shannon_entropy(0.0), 0.0);
        assert_eq!(shannon_entropy(1.0), 0.0);
        assert_abs_diff_eq!(shannon_entropy(0.9), 0.4689955935892812, epsilon = 1e-12);
    }

    #[test]
    fn relative_entropy_values() {
        assert_eq!(relative_entropy(0.5, 0.5), 0.0);
        assert_abs_diff_eq!(relative_entropy(0.6, 0.9), 0.449022499567306, epsilon = 1e-12);
        assert_eq!(relative_entropy(0.5, 0.0), f64::INFINITY);
        assert_eq!(relative_entropy(0.5, 1.0), f64::INFINITY);
        assert_eq!(relative_entropy(0.0, 0.0), 0.0);
        assert_eq!(relative_entropy(1.0, 1.0), 0.0);
    }

    #[test]
    fn type_class_sizes() {
        let t = EmpiricalType::new(4, 2).unwrap();
        assert_abs_diff_eq!(type_class_log_size(&t), 6.0f64.log2(), epsilon = 1e-12);
        let t = EmpiricalType::new(10, 0).unwrap();
        assert_eq!(type_class_log_size(&t), 0.0);
        let t = EmpiricalType::new(10, 5).unwrap();
        assert_abs_diff_eq!(type_class_log_size(&t), 252.0f64.log2(), epsilon = 1e-12);
        assert!(type_class_log_size(&t) <= 10.0 * shannon_entropy(0.5) + 1e-9);
        assert!(EmpiricalType::new(4, 5).is_err());
    }

    #[test]
    fn type_class_size_bounded_by_entropy_up_to_60() {
        for n in 1..=60u64 {
            for k in 0..=n {
                let t = EmpiricalType::new(n, k).unwrap();
                let h = n as f64 * shannon_entropy(k as f64 / n as f64);
                assert!(
                    type_class_log_size(&t) <= h + 1e-9,
                    "n={n} k={k}: {} > {h}",
                    type_class_log_size(&t)
                );
            }
        }
    }

    // -- masses --------------------------------------------------------------

    #[test]
    fn mass_examples_exact() {
        let spec = TypicalSetSpec::new(10, 0.2, 0.5).unwrap();
        // (C(10,4)+C(10,5)+C(10,6)) / 2^10 = 672/1024
        assert_abs_diff_eq!(typical_mass(&spec, &dist(0.5)), 0.65625, epsilon = 1e-12);
        // Sum over k in {4,5,6} of C(10,k) 0.9^k 0.1^(10-k) = 0.0127860768
        assert_abs_diff_eq!(
            typical_mass(&spec, &dist(0.9)),
            0.0127860768,
            epsilon = 1e-12
        );
        let full = TypicalSetSpec::new(1, 2.0, 0.5).unwrap();
        assert_eq!(typical_mass(&full, &dist(0.37)), 1.0);
    }

    #[test]
    fn mass_matches_bigint_oracle() {
        for (n, eps, q, num, den) in [
            (10u64, 0.2, 0.5, 9u64, 10u64),
            (25, 0.3, 0.5, 1, 3),
            (60, 0.1, 0.5, 55, 100),
            (137, 0.2, 0.5, 7, 10),
            (1000, 0.2, 0.5, 55, 100),
        ] {
            let spec = TypicalSetSpec::new(n, eps, q).unwrap();
            let got = typical_mass(&spec, &dist(num as f64 / den as f64));
            let want = mass_oracle_f64(&spec, num, den);
            assert!(
                (got - want).abs() < 1e-11,
                "n={n}: got {got}, oracle {want}"
            );
        }
    }

    #[test]
    fn mass_matches_direct_enumeration() {
        for (n, eps, q0) in [(8u64, 0.25, 0.3), (12, 0.4, 0.62), (16, 0.15, 0.5)] {
            let spec = TypicalSetSpec::new(n, eps, 0.5).unwrap();
            let got = typical_mass(&spec, &dist(q0));
            let want = enumerate_mass(&spec, q0);
            assert!((got - want).abs() < 1e-12, "(n={n}, eps={eps}, q0={q0})");
        }
    }

    #[test]
    fn mass_handles_degenerate_distributions() {
        let spec = TypicalSetSpec::new(10, 0.2, 0.5).unwrap();
        assert_eq!(typical_mass(&spec, &dist(0.0)), 0.0);
        assert_eq!(typical_mass(&spec, &dist(1.0)), 0.0);
        let wide = TypicalSetSpec::new(10, 2.0, 0.5).unwrap();
        assert_eq!(typical_mass(&wide, &dist(0.0)), 1.0);
        assert_eq!(typical_mass(&wide, &dist(1.0)), 1.0);
    }

    #[test]
    fn empty_window_has_zero_mass() {
        let spec = TypicalSetSpec::new(3, 0.2, 0.5).unwrap();
        assert_eq!(spec.feasible_range(), None);
        assert_eq!(typical_mass(&spec, &dist(0.5)), 0.0);
    }

    #[test]
    fn large_n_mass_is_stable() {
        // Window [0.4, 0.6] under its own center: mass -> 1 without under-
        // or overflow at n = 10^6.
        let spec = TypicalSetSpec::new(1_000_000, 0.2, 0.5).unwrap();
        let m = typical_mass(&spec, &dist(0.5));
        assert!(m > 1.0 - 1e-12 && m <= 1.0, "mass = {m}");
        // Far outside: underflows cleanly to 0 rather than NaN.
        let m_out = typical_mass(&spec, &dist(0.9));
        assert!(m_out >= 0.0 && m_out < 1e-300, "mass = {m_out}");
    }

    // -- lemma 1 -------------------------------------------------------------

    #[test]
    fn lemma1_centered_case() {
        let spec = TypicalSetSpec::new(2000, 0.2, 0.5).unwrap();
        let report = lemma1_check(&spec, 0.5, 0.01).unwrap();
        assert!(report.satisfied);
        assert_abs_diff_eq!(report.eps_prime, 0.2, epsilon = 1e-15);
    }

    #[test]
    fn lemma1_boundary_shift_has_zero_nested_window() {
        let spec = TypicalSetSpec::new(50, 0.2, 0.5).unwrap();
        let report = lemma1_check(&spec, 0.6, 0.5).unwrap();
        assert_abs_diff_eq!(report.eps_prime, 0.0, epsilon = 1e-12);
        // Mass is still computed exactly against the oracle.
        let want = mass_oracle_f64(&spec, 6, 10);
        assert_abs_diff_eq!(report.mass, want, epsilon = 1e-11);
    }

    #[test]
    fn lemma1_edge_mean_mass_stays_near_half() {
        // q' = 0.55 sits on the window edge [0.45, 0.55]: the mean lands on
        // the boundary and the mass hovers near 1/2 instead of concentrating.
        let spec = TypicalSetSpec::new(1000, 0.2, 0.5).unwrap();
        let report = lemma1_check(&spec, 0.55, 0.01).unwrap();
        let want = mass_oracle_f64(&spec, 55, 100);
        assert_abs_diff_eq!(report.mass, want, epsilon = 1e-11);
        assert!(report.mass > 0.4 && report.mass < 0.6, "mass = {}", report.mass);
        assert!(!report.satisfied);
    }

    #[test]
    fn lemma1_rejects_shift_beyond_half_eps() {
        let spec = TypicalSetSpec::new(100, 0.2, 0.5).unwrap();
        assert!(lemma1_check(&spec, 0.7, 0.1).is_err());
    }

    #[test]
    fn lemma1_nesting_exhaustive() {
        // Every count accepted by (n, eps', q') is accepted by (n, eps, q).
        for n in 1..=100u64 {
            for &(eps, q_prime) in
                &[(0.2, 0.55), (0.2, 0.6), (0.2, 0.45), (0.3, 0.4), (0.5, 0.7)]
            {
                let outer = TypicalSetSpec::new(n, eps, 0.5).unwrap();
                let eps_prime = eps - 2.0 * (q_prime - 0.5f64).abs();
                if eps_prime <= 0.0 {
                    continue;
                }
                let inner = TypicalSetSpec::new(n, eps_prime, q_prime).unwrap();
                for k in 0..=n {
                    if inner.contains(k).unwrap() {
                        assert!(
                            outer.contains(k).unwrap(),
                            "nesting violated at n={n}, k={k}, eps={eps}, q'={q_prime}"
                        );
                    }
                }
            }
        }
    }

    // -- error exponent -------------------------------------------------------

    #[test]
    fn exponent_examples() {
        // Continuum limit: window [0.4, 0.6], q0 = 0.9 -> min at p = 0.6.
        let spec = TypicalSetSpec::new(10, 0.2, 0.5).unwrap();
        let e = error_exponent(&spec, &dist(0.9)).unwrap();
        assert_abs_diff_eq!(e.continuum_divergence_bits, 0.449022499567306, epsilon = 1e-12);
        // At n = 10 the feasible counts are {4, 5, 6}; the minimum is at 6.
        assert_eq!(e.argmin_k, 6);
        assert_abs_diff_eq!(e.min_divergence_bits, 0.449022499567306, epsilon = 1e-12);
        // Bound (n+1) 2^(-n minD) dominates the exact mass.
        let mass = typical_mass(&spec, &dist(0.9));
        assert!(e.finite_n_bound >= mass);
        assert_abs_diff_eq!(mass, 0.0127860768, epsilon = 1e-12);

        // Inside the window the exponent collapses to zero at a feasible type.
        let e_in = error_exponent(&spec, &dist(0.5)).unwrap();
        assert_eq!(e_in.min_divergence_bits, 0.0);
        assert_eq!(e_in.argmin_k, 5);

        // Empty window errors.
        let empty = TypicalSetSpec::new(3, 0.2, 0.5).unwrap();
        assert!(matches!(
            error_exponent(&empty, &dist(0.9)),
            Err(Error::EmptyWindow { .. })
        ));
    }

    #[test]
    fn exponent_bound_dominates_exact_tail() {
        // Grid over outside distributions and n <= 40.
        for q0 in [0.62, 0.7, 0.8, 0.9, 0.97, 0.3, 0.15] {
            for n in 1..=40u64 {
                let spec = TypicalSetSpec::new(n, 0.2, 0.5).unwrap();
                if spec.feasible_range().is_none() {
                    continue;
                }
                let mass = typical_mass(&spec, &dist(q0));
                let bound = error_exponent(&spec, &dist(q0)).unwrap().finite_n_bound;
                assert!(
                    bound >= mass - 1e-12,
                    "bound {bound} < mass {mass} at n={n}, q0={q0}"
                );
            }
        }
    }

    #[test]
    fn argmin_is_feasible_count_closest_to_q0() {
        // Verified by enumeration for a sweep of window shapes.
        for n in [5u64, 16, 33, 100] {
            for q0 in [0.05, 0.3, 0.71, 0.99] {
                let spec = TypicalSetSpec::new(n, 0.2, 0.5).unwrap();
                let Some((lo, hi)) = spec.feasible_range() else { continue };
                let e = error_exponent(&spec, &dist(q0)).unwrap();
                let closest = (lo..=hi)
                    .min_by(|a, b| {
                        let da = (*a as f64 / n as f64 - q0).abs();
                        let db = (*b as f64 / n as f64 - q0).abs();
                        da.partial_cmp(&db).unwrap()
                    })
                    .unwrap();
                assert_eq!(e.argmin_k, closest, "n={n}, q0={q0}");
            }
        }
    }

    // -- required_n ------------------------------------------------------------

    #[test]
    fn required_n_inside_boundary_behavior() {
        // mass(10) = 0.65625 < 0.66, so n = 10 fails at delta = 0.34.
        let spec10 = TypicalSetSpec::new(10, 0.2, 0.5).unwrap();
        assert!(typical_mass(&spec10, &dist(0.5)) < 0.66);
        let n_star = required_n(0.2, 0.34, &dist(0.5), SearchMode::ExactTail).unwrap();
        assert!(n_star > 10);
        // Certification: every n in [n*, 4 n*] passes, n* - 1 does not.
        let fail_spec = TypicalSetSpec::new(n_star - 1, 0.2, 0.5).unwrap();
        assert!(typical_mass(&fail_spec, &dist(0.5)) < 0.66);
        for n in n_star..=(4 * n_star).max(1000) {
            let spec = TypicalSetSpec::new(n, 0.2, 0.5).unwrap();
            assert!(typical_mass(&spec, &dist(0.5)) >= 0.66, "n = {n}");
        }
    }

    #[test]
    fn required_n_outside_low_teens() {
        let n_star = required_n(0.2, 0.01, &dist(0.9), SearchMode::ExactTail).unwrap();
        // Independent scan with exact rational masses: find the last failing n.
        let mut last_fail = 0;
        for n in 1..=200u64 {
            let spec = TypicalSetSpec::new(n, 0.2, 0.5).unwrap();
            let (num, den) = mass_exact(&spec, 9, 10);
            // mass > delta  <=>  100 * num > den
            if num * 100u32 > den {
                last_fail = n;
            }
        }
        assert_eq!(n_star, last_fail + 1);
        assert!((10..=20).contains(&n_star), "n* = {n_star}");
    }

    #[test]
    fn required_n_vacuous_delta() {
        assert_eq!(
            required_n(0.2, 1.0, &dist(0.9), SearchMode::ExactTail).unwrap(),
            1
        );
        assert_eq!(
            required_n(0.2, 1.0, &dist(0.5), SearchMode::ExactTail).unwrap(),
            1
        );
    }

    #[test]
    fn required_n_exponent_mode() {
        let exact = required_n(0.2, 0.01, &dist(0.9), SearchMode::ExactTail).unwrap();
        let bound = required_n(0.2, 0.01, &dist(0.9), SearchMode::ExponentBound).unwrap();
        // The bound is looser, so its threshold cannot be smaller.
        assert!(bound >= exact);
        // Inside case rejects exponent mode.
        assert!(required_n(0.2, 0.01, &dist(0.5), SearchMode::ExponentBound).is_err());
    }

    #[test]
    fn required_n_rejects_boundary() {
        assert!(required_n(0.2, 0.01, &dist(0.6), SearchMode::ExactTail).is_err());
    }

    // -- properties -------------------------------------------------------------

    proptest! {
        #[test]
        fn pmf_sums_to_one(n in 1u64..200, q0 in 0.0f64..=1.0) {
            let spec = TypicalSetSpec::new(n, 2.0, 0.5).unwrap();
            let mass = typical_mass(&spec, &dist(q0));
            prop_assert!((mass - 1.0).abs() < 1e-12);
        }

        #[test]
        fn mass_in_unit_interval(n in 1u64..300, eps in 0.01f64..2.0, q0 in 0.0f64..=1.0) {
            let spec = TypicalSetSpec::new(n, eps, 0.5).unwrap();
            let mass = typical_mass(&spec, &dist(q0));
            prop_assert!((0.0..=1.0).contains(&mass));
        }

        #[test]
        fn divergence_nonnegative_zero_iff_equal(p0 in 0.0f64..=1.0, q0 in 0.0f64..=1.0) {
            let d = relative_entropy(p0, q0);
            prop_assert!(d >= 0.0);
            if p0 == q0 {
                prop_assert!(d == 0.0);
            } else if d == 0.0 {
                prop_assert!((p0 - q0).abs() < 1e-15);
            }
        }

        #[test]
        fn window_cardinality_decomposes(n in 1u64..=20, eps in 0.01f64..2.0) {
            // Sum of type-class sizes over feasible types equals the window
            // cardinality counted by direct enumeration.
            let spec = TypicalSetSpec::new(n, eps, 0.5).unwrap();
            let from_types: u64 = match spec.feasible_range() {
                None => 0,
                Some((lo, hi)) => (lo..=hi)
                    .map(|k| {
                        let t = EmpiricalType::new(n, k).unwrap();
                        type_class_log_size(&t).exp2().round() as u64
                    })
                    .sum(),
            };
            let brute = (0u64..(1 << n))
                .filter(|x| spec.contains(n - x.count_ones() as u64).unwrap())
                .count() as u64;
            prop_assert_eq!(from_types, brute);
        }
    }
}
