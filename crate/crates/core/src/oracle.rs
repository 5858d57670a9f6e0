//! Exhaustive enumeration over short windows and truncated geometric seeds.
//!
//! Seeds run from `0` to a cap `M`; the mass of the excluded seeds is
//! `rho^{M+1}`, so every enumerated law is exact up to that tail. With a
//! rational `p` the weights are exact rationals and the tail comparison is an
//! exact inequality.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{SuiteOutcome, TestReport};
use crate::transform::{transform_t, SeedPolicy};
use crate::walk::{forward_lindley, ModelParams, Spin, SpinWindow};

pub const MAX_LAW_LEN: usize = 20;
pub const MAX_SEED_CAP: u64 = 64;
pub const MAX_PAST_LEN: usize = 16;
pub const MAX_DUAL_LEN: usize = 12;
pub const MAX_STATIONARY_LEN: usize = 16;

/// Arithmetic used for enumeration weights.
pub trait Weight: Clone + fmt::Debug + Send + Sync {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_count(c: u64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn abs(&self) -> Self;
    fn le(&self, o: &Self) -> bool;
    fn to_f64(&self) -> f64;
    /// Allowance for rounding when comparing against a bound; zero for exact
    /// arithmetic.
    fn slack() -> Self;
    /// `P(spin = +1)` in this arithmetic.
    fn up_probability(params: &ModelParams) -> Result<Self>;
}

impl Weight for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn from_count(c: u64) -> Self {
        BigRational::from_integer(BigInt::from(c))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn abs(&self) -> Self {
        Signed::abs(self)
    }
    fn le(&self, o: &Self) -> bool {
        self <= o
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn slack() -> Self {
        Zero::zero()
    }
    fn up_probability(params: &ModelParams) -> Result<Self> {
        let f = params
            .exact()
            .ok_or_else(|| Error::InvalidParams(format!("p = {} has no exact fraction", params.p())))?;
        Ok(BigRational::new(BigInt::from(f.num), BigInt::from(f.den)))
    }
}

/// Unevaluated sum `hi + lo` with `|lo| <= ulp(hi) / 2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DoubleDouble {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> DoubleDouble {
    let s = a + b;
    DoubleDouble { hi: s, lo: b - (s - a) }
}

impl DoubleDouble {
    pub fn new(x: f64) -> Self {
        DoubleDouble { hi: x, lo: 0.0 }
    }

    fn neg(&self) -> Self {
        DoubleDouble { hi: -self.hi, lo: -self.lo }
    }
}

impl Weight for DoubleDouble {
    fn zero() -> Self {
        DoubleDouble::new(0.0)
    }
    fn one() -> Self {
        DoubleDouble::new(1.0)
    }
    fn from_count(c: u64) -> Self {
        let hi = c as f64;
        DoubleDouble { hi, lo: (c as i128 - hi as i128) as f64 }
    }
    fn add(&self, o: &Self) -> Self {
        let (s, e) = two_sum(self.hi, o.hi);
        quick_two_sum(s, e + self.lo + o.lo)
    }
    fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }
    fn mul(&self, o: &Self) -> Self {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p) + self.hi * o.lo + self.lo * o.hi;
        quick_two_sum(p, e)
    }
    fn div(&self, o: &Self) -> Self {
        let q1 = self.hi / o.hi;
        let r = self.sub(&o.mul(&DoubleDouble::new(q1)));
        quick_two_sum(q1, r.hi / o.hi)
    }
    fn abs(&self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            self.neg()
        } else {
            *self
        }
    }
    fn le(&self, o: &Self) -> bool {
        let d = self.sub(o);
        d.hi < 0.0 || (d.hi == 0.0 && d.lo <= 0.0)
    }
    fn to_f64(&self) -> f64 {
        self.hi + self.lo
    }
    fn slack() -> Self {
        DoubleDouble::new(1e-28)
    }
    fn up_probability(params: &ModelParams) -> Result<Self> {
        Ok(match params.exact() {
            Some(f) => DoubleDouble::from_count(f.num).div(&DoubleDouble::from_count(f.den)),
            None => DoubleDouble::new(params.p()),
        })
    }
}

/// Spin and seed weights for one parameter value.
struct Laws<W> {
    p: W,
    q: W,
    rho: W,
    one_minus_rho: W,
}

impl<W: Weight> Laws<W> {
    fn new(params: &ModelParams) -> Result<Self> {
        let p = W::up_probability(params)?;
        let q = W::one().sub(&p);
        let rho = q.div(&p);
        let one_minus_rho = W::one().sub(&rho);
        Ok(Laws { p, q, rho, one_minus_rho })
    }

    fn rho_pow(&self, k: u64) -> W {
        (0..k).fold(W::one(), |acc, _| acc.mul(&self.rho))
    }

    /// `(1 - rho) rho^x` for `x = 0 ..= top`.
    fn geometric(&self, top: u64) -> Vec<W> {
        let mut out = Vec::with_capacity(top as usize + 1);
        let mut w = self.one_minus_rho.clone();
        for _ in 0..=top {
            out.push(w.clone());
            w = w.mul(&self.rho);
        }
        out
    }

    /// `p^u q^{n-u}` for `u = 0 ..= n`.
    fn bernoulli(&self, n: usize) -> Vec<W> {
        (0..=n)
            .map(|u| {
                let mut w = W::one();
                for _ in 0..u {
                    w = w.mul(&self.p);
                }
                for _ in u..n {
                    w = w.mul(&self.q);
                }
                w
            })
            .collect()
    }
}

fn window_from_mask(origin: i64, n: usize, mask: u32) -> SpinWindow {
    SpinWindow::new(
        origin,
        (0..n).map(|i| if mask >> i & 1 == 1 { Spin::Up } else { Spin::Down }).collect(),
    )
}

fn mask_of(spins: &SpinWindow) -> u32 {
    spins
        .values
        .iter()
        .enumerate()
        .fold(0, |m, (i, s)| m | (u32::from(*s == Spin::Up) << i))
}

fn check_cap(cap: u64) -> Result<()> {
    if cap > MAX_SEED_CAP {
        return Err(Error::ResourceLimit(format!("seed cap {cap} exceeds {MAX_SEED_CAP}")));
    }
    Ok(())
}

/// Result of comparing an enumerated law with its target.
#[derive(Clone, Debug, PartialEq)]
pub struct Deviation<W> {
    pub max_deviation: W,
    pub tail_bound: W,
    pub cells: usize,
}

impl<W: Weight> Deviation<W> {
    pub fn within(&self) -> bool {
        self.max_deviation.le(&self.tail_bound.add(&W::slack()))
    }
}

/// Law of `T omega` on a window of length `n`, enumerated exactly.
#[derive(Clone, Debug)]
pub struct ExactLaw<W> {
    pub len: usize,
    pub seed_cap: u64,
    /// Indexed by output mask; bit `i` set means coordinate `i + 1` is `+1`.
    pub masses: Vec<W>,
    /// Total seed mass enumerated, `1 - rho^{M+1}`.
    pub accounted: W,
    pub tail_bound: W,
}

impl<W: Weight> ExactLaw<W> {
    pub fn total(&self) -> W {
        self.masses.iter().fold(W::zero(), |a, m| a.add(m))
    }

    pub fn prob(&self, sigma: &[i64]) -> Option<W> {
        let w = SpinWindow::from_values(1, sigma).ok()?;
        (w.len() == self.len).then(|| self.masses[mask_of(&w) as usize].clone())
    }

    /// Largest cellwise gap from the Bernoulli product law.
    pub fn deviation_from_product(&self, params: &ModelParams) -> Result<Deviation<W>> {
        let laws = Laws::<W>::new(params)?;
        let bern = laws.bernoulli(self.len);
        let max = self
            .masses
            .iter()
            .enumerate()
            .map(|(m, w)| w.sub(&bern[(m as u32).count_ones() as usize]).abs())
            .fold(W::zero(), |a, d| if a.le(&d) { d } else { a });
        Ok(Deviation {
            max_deviation: max,
            tail_bound: self.tail_bound.clone(),
            cells: self.masses.len(),
        })
    }
}

/// Transform used by the enumeration: window and exact left seed to output.
pub type TransformFn = dyn Fn(&SpinWindow, u64) -> SpinWindow + Sync;

fn local_rule(spins: &SpinWindow, seed: u64) -> SpinWindow {
    transform_t(spins, SeedPolicy::Exact(seed)).output
}

pub fn enumerate_output_law<W: Weight>(n: usize, cap: u64, params: &ModelParams) -> Result<ExactLaw<W>> {
    enumerate_output_law_with(n, cap, params, &local_rule)
}

/// As [`enumerate_output_law`] with a caller-supplied implementation of `T`.
pub fn enumerate_output_law_with<W: Weight>(
    n: usize,
    cap: u64,
    params: &ModelParams,
    transform: &TransformFn,
) -> Result<ExactLaw<W>> {
    if n > MAX_LAW_LEN {
        return Err(Error::ResourceLimit(format!("window {n} exceeds {MAX_LAW_LEN}")));
    }
    check_cap(cap)?;
    let laws = Laws::<W>::new(params)?;
    let geo = laws.geometric(cap);
    let bern = laws.bernoulli(n);
    let cells = 1usize << n;
    let mut masses = vec![W::zero(); cells];
    // seeds outermost: after each seed the partial sums are a valid lower bound
    for (seed, g) in geo.iter().enumerate() {
        let counts = (0..cells as u32)
            .into_par_iter()
            .fold(
                || vec![0u32; cells * (n + 1)],
                |mut acc, mask| {
                    let sigma = transform(&window_from_mask(1, n, mask), seed as u64);
                    acc[mask_of(&sigma) as usize * (n + 1) + mask.count_ones() as usize] += 1;
                    acc
                },
            )
            .reduce(
                || vec![0u32; cells * (n + 1)],
                |mut a, b| {
                    a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                    a
                },
            );
        for (idx, c) in counts.iter().enumerate() {
            if *c > 0 {
                let (sigma, ups) = (idx / (n + 1), idx % (n + 1));
                let w = g.mul(&W::from_count(u64::from(*c))).mul(&bern[ups]);
                masses[sigma] = masses[sigma].add(&w);
            }
        }
    }
    let tail_bound = laws.rho_pow(cap + 1);
    Ok(ExactLaw {
        len: n,
        seed_cap: cap,
        masses,
        accounted: W::one().sub(&tail_bound),
        tail_bound,
    })
}

/// Joint law of `(q_0, sigma_{-m+1..=0})` against geometric times Bernoulli.
pub fn verify_independence<W: Weight>(m: usize, cap: u64, params: &ModelParams) -> Result<Deviation<W>> {
    if m > MAX_PAST_LEN {
        return Err(Error::ResourceLimit(format!("past length {m} exceeds {MAX_PAST_LEN}")));
    }
    check_cap(cap)?;
    let laws = Laws::<W>::new(params)?;
    let top = cap + m as u64;
    let geo = laws.geometric(top + 1);
    let bern = laws.bernoulli(m);
    let origin = -(m as i64) + 1;
    let mut joint: BTreeMap<(u64, u32), W> = BTreeMap::new();
    for seed in 0..=cap {
        let mut counts: HashMap<(u64, u32, u32), u64> = HashMap::new();
        for mask in 0..(1u32 << m) {
            let omega = window_from_mask(origin, m, mask);
            let r = transform_t(&omega, SeedPolicy::Exact(seed));
            let q0 = r.queue.at(0).expect("origin in range");
            *counts.entry((q0, mask_of(&r.output), mask.count_ones())).or_default() += 1;
        }
        let mut keys: Vec<_> = counts.into_iter().collect();
        keys.sort_unstable();
        for ((q0, sigma, ups), c) in keys {
            let w = geo[seed as usize].mul(&W::from_count(c)).mul(&bern[ups as usize]);
            let e = joint.entry((q0, sigma)).or_insert_with(W::zero);
            *e = e.add(&w);
        }
    }
    let zero = W::zero();
    let mut max = W::zero();
    for q0 in 0..=top {
        for sigma in 0..(1u32 << m) {
            let target = geo[q0 as usize].mul(&bern[sigma.count_ones() as usize]);
            let d = joint.get(&(q0, sigma)).unwrap_or(&zero).sub(&target).abs();
            if max.le(&d) {
                max = d;
            }
        }
    }
    // cells beyond the reachable queue values carry only target mass
    let beyond = geo[top as usize + 1].mul(&bern[m]);
    if max.le(&beyond) {
        max = beyond;
    }
    Ok(Deviation {
        max_deviation: max,
        tail_bound: laws.rho_pow(cap + 1),
        cells: (top as usize + 1) << m,
    })
}

/// Violation counts of the two candidate backward recursions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DualRecursionCounts {
    pub checks: u64,
    /// `q_{n-1} = max(q_n + sigma_n, 0)`.
    pub plus_violations: u64,
    /// `q_{n-1} = max(q_n - sigma_n, 0)`.
    pub minus_violations: u64,
}

impl std::ops::AddAssign for DualRecursionCounts {
    fn add_assign(&mut self, o: Self) {
        self.checks += o.checks;
        self.plus_violations += o.plus_violations;
        self.minus_violations += o.minus_violations;
    }
}

/// Checks both sign variants over every window of length `n` and seed up to
/// `cap`. The counts do not depend on `p`.
pub fn verify_dual_recursion(n: usize, cap: u64) -> Result<DualRecursionCounts> {
    if n > MAX_DUAL_LEN {
        return Err(Error::ResourceLimit(format!("window {n} exceeds {MAX_DUAL_LEN}")));
    }
    check_cap(cap)?;
    let mut out = DualRecursionCounts::default();
    for seed in 0..=cap {
        for mask in 0..(1u32 << n) {
            let r = transform_t(&window_from_mask(1, n, mask), SeedPolicy::Exact(seed));
            for j in 1..=n as i64 {
                let (prev, cur) = (r.queue.at(j - 1).unwrap() as i64, r.queue.at(j).unwrap() as i64);
                let s = r.output.get(j).unwrap().value();
                out.checks += 1;
                out.plus_violations += u64::from(prev != (cur + s).max(0));
                out.minus_violations += u64::from(prev != (cur - s).max(0));
            }
        }
    }
    Ok(out)
}

/// Counts for the identity `min_{l >= n} y_l = s_n - 2 s_0`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FutureMinimumCounts {
    /// Positions where the queue returns to zero inside the window.
    pub applicable: u64,
    pub violations: u64,
}

/// Checks the future-minimum identity with `y = 2s - x - 2 s_0` at every
/// position whose window contains a later zero of the queue.
pub fn verify_future_minimum(n: usize, cap: u64) -> Result<FutureMinimumCounts> {
    if n > MAX_DUAL_LEN {
        return Err(Error::ResourceLimit(format!("window {n} exceeds {MAX_DUAL_LEN}")));
    }
    check_cap(cap)?;
    let mut out = FutureMinimumCounts::default();
    for seed in 0..=cap {
        let s0 = seed as i64;
        for mask in 0..(1u32 << n) {
            let omega = window_from_mask(1, n, mask);
            let q = forward_lindley(seed, &omega);
            let (mut x, mut s) = (0i64, s0);
            let mut xs = vec![0i64];
            let mut ss = vec![s0];
            for (_, spin) in omega.iter() {
                x += spin.value();
                s = s.max(x);
                xs.push(x);
                ss.push(s);
            }
            let y: Vec<i64> = (0..=n).map(|l| 2 * ss[l] - xs[l] - 2 * s0).collect();
            for start in 0..=n {
                let has_zero = (start..=n).any(|l| q.at(l as i64) == Some(0));
                if !has_zero {
                    continue;
                }
                out.applicable += 1;
                let min = y[start..].iter().min().copied().unwrap();
                out.violations += u64::from(min != ss[start] - 2 * s0);
            }
        }
    }
    Ok(out)
}

/// Largest gap between the law of each `q_j`, `j = 1..=n`, and the geometric
/// law, with the seed truncated at `cap`.
pub fn stationary_law_check<W: Weight>(n: usize, cap: u64, params: &ModelParams) -> Result<Deviation<W>> {
    if n > MAX_STATIONARY_LEN {
        return Err(Error::ResourceLimit(format!("window {n} exceeds {MAX_STATIONARY_LEN}")));
    }
    check_cap(cap)?;
    let laws = Laws::<W>::new(params)?;
    let top = cap + n as u64 + 1;
    let geo = laws.geometric(top);
    let mut dist: Vec<W> = geo[..=cap as usize].to_vec();
    let mut max = W::zero();
    let mut cells = 0;
    for _ in 0..n {
        let mut next = vec![W::zero(); dist.len() + 1];
        for (x, w) in dist.iter().enumerate() {
            let down = if x == 0 { 0 } else { x - 1 };
            next[down] = next[down].add(&w.mul(&laws.p));
            next[x + 1] = next[x + 1].add(&w.mul(&laws.q));
        }
        dist = next;
        for (x, w) in dist.iter().enumerate() {
            let d = w.sub(&geo[x]).abs();
            if max.le(&d) {
                max = d;
            }
        }
        let beyond = geo[dist.len()].clone();
        if max.le(&beyond) {
            max = beyond;
        }
        cells += dist.len() + 1;
    }
    Ok(Deviation {
        max_deviation: max,
        tail_bound: laws.rho_pow(cap + 1),
        cells,
    })
}

/// Exact-oracle checks at one parameter value.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleConfig {
    pub window: usize,
    pub cap: u64,
    pub past: usize,
    /// Largest window used for the sign and future-minimum checks.
    pub dual_window: usize,
    /// Largest seed used for the sign and future-minimum checks.
    pub dual_cap: u64,
    pub stationary_window: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            window: 10,
            cap: 40,
            past: 8,
            dual_window: 10,
            dual_cap: 20,
            stationary_window: 12,
        }
    }
}

fn deviation_report<W: Weight>(name: &str, d: &Deviation<W>) -> TestReport {
    TestReport::flag(name, d.max_deviation.to_f64(), d.within(), d.cells as u64)
        .with_bound(d.tail_bound.to_f64())
}

fn oracle_suite_in<W: Weight>(params: &ModelParams, cfg: &OracleConfig) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    let law = enumerate_output_law::<W>(cfg.window, cfg.cap, params)?;
    out.tests
        .push(deviation_report("oracle.measure_preservation", &law.deviation_from_product(params)?));
    let total = law.total().sub(&law.accounted).abs();
    out.tests.push(TestReport::flag(
        "oracle.enumerated_mass",
        total.to_f64(),
        total.le(&W::slack()),
        law.masses.len() as u64,
    ));
    out.tests.push(deviation_report(
        "oracle.queue_past_output_independence",
        &verify_independence::<W>(cfg.past, cfg.cap, params)?,
    ));
    let mut dual = DualRecursionCounts::default();
    let mut fmin = FutureMinimumCounts::default();
    for n in 1..=cfg.dual_window {
        dual += verify_dual_recursion(n, cfg.dual_cap)?;
        let f = verify_future_minimum(n, cfg.dual_cap)?;
        fmin.applicable += f.applicable;
        fmin.violations += f.violations;
    }
    out.tests.push(TestReport::within(
        "oracle.dual_recursion_minus_violations",
        dual.minus_violations as f64,
        0.0,
        dual.checks,
    ));
    // the printed plus form is expected to fail; passing means it was refuted
    out.tests.push(TestReport::flag(
        "oracle.dual_recursion_plus_violations",
        dual.plus_violations as f64,
        dual.plus_violations > 0,
        dual.checks,
    ));
    out.tests.push(TestReport::within(
        "oracle.future_minimum_violations",
        fmin.violations as f64,
        0.0,
        fmin.applicable,
    ));
    out.tests.push(deviation_report(
        "oracle.stationary_marginals",
        &stationary_law_check::<W>(cfg.stationary_window, cfg.cap, params)?,
    ));
    Ok(out)
}

/// Runs every oracle check, exactly when `p` is rational.
pub fn oracle_suite(params: &ModelParams, cfg: &OracleConfig) -> Result<SuiteOutcome> {
    if params.exact().is_some() {
        oracle_suite_in::<BigRational>(params, cfg)
    } else {
        oracle_suite_in::<DoubleDouble>(params, cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::transform_t_definitional;

    type Q = BigRational;

    fn q(a: i64, b: i64) -> Q {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    fn two_thirds() -> ModelParams {
        ModelParams::default()
    }

    #[test]
    fn single_coordinate_up_probability() {
        // P(+1) = (1 - p) + p (1 - rho) = p, up to the seeds beyond M
        let law = enumerate_output_law::<Q>(1, 40, &two_thirds()).unwrap();
        let up = law.prob(&[1]).unwrap();
        let gap = Weight::abs(&(q(2, 3) - up));
        assert!(gap <= law.tail_bound);
        assert_eq!(law.tail_bound, q(1, 1) / BigRational::from_integer(BigInt::from(2u64.pow(41))));
        assert_eq!(law.total(), law.accounted);
    }

    #[test]
    fn hand_enumeration_of_the_truncated_law() {
        // seed 0 only: P(sigma = +1) = (1 - rho) * 1 = 1/2, since seed 0 forces +1
        let law = enumerate_output_law::<Q>(1, 0, &two_thirds()).unwrap();
        assert_eq!(law.accounted, q(1, 2));
        assert_eq!(law.prob(&[1]).unwrap(), q(1, 2));
        assert_eq!(law.prob(&[-1]).unwrap(), q(0, 1));
        // seeds 0 and 1: seed 1 flips, giving +1 w.p. 1/3 of its 1/4 mass
        let law = enumerate_output_law::<Q>(1, 1, &two_thirds()).unwrap();
        assert_eq!(law.prob(&[1]).unwrap(), q(1, 2) + q(1, 4) * q(1, 3));
    }

    #[test]
    fn two_coordinates_within_tail() {
        let law = enumerate_output_law::<Q>(2, 40, &two_thirds()).unwrap();
        let gap = Weight::abs(&(law.prob(&[1, 1]).unwrap() - q(4, 9)));
        assert!(gap <= law.tail_bound);
        assert!(law.deviation_from_product(&two_thirds()).unwrap().within());
    }

    #[test]
    fn definitional_transform_gives_the_same_law() {
        let p = two_thirds();
        let a = enumerate_output_law::<Q>(6, 12, &p).unwrap();
        let b = enumerate_output_law_with::<Q>(6, 12, &p, &transform_t_definitional).unwrap();
        assert_eq!(a.masses, b.masses);
    }

    #[test]
    fn masses_sum_exactly_to_accounted_mass() {
        for cap in [0, 3, 17] {
            let law = enumerate_output_law::<Q>(5, cap, &two_thirds()).unwrap();
            assert_eq!(law.total(), law.accounted);
            assert_eq!(law.accounted.clone() + law.tail_bound.clone(), q(1, 1));
            assert!(law.masses.iter().all(|m| *m >= q(0, 1)));
        }
    }

    #[test]
    fn measure_preserved_at_window_ten() {
        let law = enumerate_output_law::<Q>(10, 40, &two_thirds()).unwrap();
        let d = law.deviation_from_product(&two_thirds()).unwrap();
        assert!(d.within(), "{:?}", Weight::to_f64(&d.max_deviation));
    }

    #[test]
    fn independence_examples() {
        let p = two_thirds();
        let d = verify_independence::<Q>(1, 40, &p).unwrap();
        assert!(d.within());
        let d = verify_independence::<Q>(3, 0, &p).unwrap();
        assert!(d.max_deviation <= q(1, 2));
        assert!(d.within());
    }

    #[test]
    fn dual_recursion_examples() {
        let omega = SpinWindow::from_values(1, &[1, -1, 1, 1]).unwrap();
        let r = transform_t(&omega, SeedPolicy::Exact(0));
        let minus = |j: i64| {
            r.queue.at(j - 1).unwrap() as i64
                == (r.queue.at(j).unwrap() as i64 - r.output.get(j).unwrap().value()).max(0)
        };
        let plus = |j: i64| {
            r.queue.at(j - 1).unwrap() as i64
                == (r.queue.at(j).unwrap() as i64 + r.output.get(j).unwrap().value()).max(0)
        };
        assert!((1..=4).all(minus));
        assert!(!plus(3));
        let c = verify_dual_recursion(10, 20).unwrap();
        assert_eq!(c.minus_violations, 0);
        assert!(c.plus_violations > 0);
        assert_eq!(c.checks, 21 * 1024 * 10);
    }

    #[test]
    fn all_plus_window_refutes_plus_form() {
        let r = transform_t(&SpinWindow::from_values(1, &[1; 6]).unwrap(), SeedPolicy::Exact(0));
        for j in 1..=6 {
            let (a, b) = (r.queue.at(j - 1).unwrap() as i64, r.queue.at(j).unwrap() as i64);
            let s = r.output.get(j).unwrap().value();
            assert_eq!(a, (b - s).max(0));
            // q = 0 and sigma = +1 everywhere, so the plus form predicts 1
            assert_ne!(a, (b + s).max(0));
        }
    }

    #[test]
    fn future_minimum_identity() {
        let c = verify_future_minimum(9, 12).unwrap();
        assert!(c.applicable > 0);
        assert_eq!(c.violations, 0);
    }

    #[test]
    fn stationary_examples() {
        let p = two_thirds();
        assert!(stationary_law_check::<Q>(1, 40, &p).unwrap().within());
        let d = stationary_law_check::<Q>(12, 40, &p).unwrap();
        assert!(d.within());
        let d = stationary_law_check::<Q>(4, 0, &p).unwrap();
        assert!(d.max_deviation <= q(1, 2));
    }

    #[test]
    fn guards() {
        let p = two_thirds();
        assert!(matches!(enumerate_output_law::<Q>(21, 4, &p), Err(Error::ResourceLimit(_))));
        assert!(matches!(enumerate_output_law::<Q>(2, 65, &p), Err(Error::ResourceLimit(_))));
        assert!(matches!(verify_independence::<Q>(17, 4, &p), Err(Error::ResourceLimit(_))));
        assert!(matches!(verify_dual_recursion(13, 4), Err(Error::ResourceLimit(_))));
        assert!(matches!(stationary_law_check::<Q>(17, 4, &p), Err(Error::ResourceLimit(_))));
        let irrational = ModelParams::new(0.73).unwrap();
        assert!(enumerate_output_law::<Q>(2, 4, &irrational).is_err());
    }

    #[test]
    fn double_double_matches_rational() {
        let p = two_thirds();
        let a = enumerate_output_law::<Q>(6, 30, &p).unwrap();
        let b = enumerate_output_law::<DoubleDouble>(6, 30, &p).unwrap();
        for (x, y) in a.masses.iter().zip(&b.masses) {
            let d = (Weight::to_f64(x) - y.to_f64()).abs();
            assert!(d < 1e-25, "{d}");
        }
        assert!(b.deviation_from_product(&p).unwrap().within());
    }

    #[test]
    fn double_double_arithmetic() {
        let third = DoubleDouble::one().div(&DoubleDouble::from_count(3));
        let back = third.mul(&DoubleDouble::from_count(3)).sub(&DoubleDouble::one());
        assert!(back.to_f64().abs() < 1e-30);
        let tiny = DoubleDouble::new(1.0).add(&DoubleDouble::new(1e-20));
        assert_eq!(tiny.sub(&DoubleDouble::one()).to_f64(), 1e-20);
    }

    #[test]
    fn fallback_suite_for_decimal_p() {
        let p = ModelParams::new(std::f64::consts::FRAC_1_SQRT_2).unwrap();
        let cfg = OracleConfig {
            window: 6,
            cap: 30,
            past: 4,
            dual_window: 5,
            dual_cap: 6,
            stationary_window: 6,
        };
        let out = oracle_suite(&p, &cfg).unwrap();
        for t in &out.tests {
            assert!(t.pass, "{t:?}");
        }
    }
}
