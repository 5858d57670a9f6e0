//! Finite windows of the bi-infinite spin sequence, the walk they drive, and
//! the forward and backward Lindley recursions.
//!
//! All indices live in the bi-infinite coordinate system: a window with
//! `origin = -3` and four entries covers coordinates `-3..=0`. The forward
//! queue keeps its seed one step left of the window; the dual queue keeps its
//! seed at the right edge and carries one extra value on the left.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::RngStream;

/// Default seed cap used for coupling certification.
pub const DEFAULT_SEED_CAP: u64 = 40;

/// A reduced fraction `num / den`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParams("zero denominator".into()));
        }
        let g = gcd(num, den);
        Ok(Fraction {
            num: num / g,
            den: den / g,
        })
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Law of the spin sequence: i.i.d. spins with `P(+1) = p`, `1/2 < p < 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ModelParams {
    p: f64,
    rho: f64,
    #[serde(skip)]
    exact: Option<Fraction>,
}

impl ModelParams {
    pub fn new(p: f64) -> Result<Self> {
        if !(p > 0.5 && p < 1.0) {
            return Err(Error::InvalidParams(format!(
                "p must satisfy 1/2 < p < 1, got {p}"
            )));
        }
        Ok(ModelParams {
            p,
            rho: (1.0 - p) / p,
            exact: None,
        })
    }

    /// Exact rational parameter; enables exact arithmetic in the enumeration
    /// oracle.
    pub fn from_fraction(num: u64, den: u64) -> Result<Self> {
        let f = Fraction::new(num, den)?;
        if !(2 * f.num > f.den && f.num < f.den) {
            return Err(Error::InvalidParams(format!(
                "p must satisfy 1/2 < p < 1, got {}/{}",
                f.num, f.den
            )));
        }
        let mut params = ModelParams::new(f.to_f64())?;
        params.exact = Some(f);
        Ok(params)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// `rho = (1 - p) / p`.
    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn exact(&self) -> Option<Fraction> {
        self.exact
    }

    /// Stationary queue law `(1 - rho) rho^x`.
    pub fn geometric_pmf(&self, x: u64) -> f64 {
        (1.0 - self.rho) * self.rho.powi(x as i32)
    }

    /// Probability that a stationary seed exceeds `cap`: `rho^(cap + 1)`.
    pub fn tail_beyond(&self, cap: u64) -> f64 {
        self.rho.powi(cap as i32 + 1)
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams::from_fraction(2, 3).expect("2/3 is valid")
    }
}

impl FromStr for ModelParams {
    type Err = Error;

    /// Accepts `a/b` or a plain decimal; both are kept exact.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::InvalidParams(format!("cannot parse probability {s:?}"));
        if let Some((a, b)) = s.split_once('/') {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            return ModelParams::from_fraction(a, b);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if frac.len() > 18 || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let den = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_v: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac_v))
            .ok_or_else(bad)?;
        ModelParams::from_fraction(num, den)
    }
}

impl fmt::Display for ModelParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.exact {
            Some(fr) => write!(f, "{}/{}", fr.num, fr.den),
            None => write!(f, "{}", self.p),
        }
    }
}

/// One increment of the walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Spin {
    Down,
    Up,
}

impl Spin {
    pub fn value(self) -> i64 {
        match self {
            Spin::Up => 1,
            Spin::Down => -1,
        }
    }

    pub fn flip(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub fn from_value(v: i64) -> Result<Spin> {
        match v {
            1 => Ok(Spin::Up),
            -1 => Ok(Spin::Down),
            other => Err(Error::InvalidSpin(other)),
        }
    }

    /// `(-1)^k`.
    pub fn parity(k: u64) -> Spin {
        if k.is_multiple_of(2) {
            Spin::Up
        } else {
            Spin::Down
        }
    }
}

/// Spins at coordinates `origin .. origin + len`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinWindow {
    pub origin: i64,
    pub values: Vec<Spin>,
}

impl SpinWindow {
    pub fn new(origin: i64, values: Vec<Spin>) -> Self {
        SpinWindow { origin, values }
    }

    pub fn empty(origin: i64) -> Self {
        SpinWindow::new(origin, Vec::new())
    }

    pub fn from_values(origin: i64, values: &[i64]) -> Result<Self> {
        let values = values
            .iter()
            .map(|v| Spin::from_value(*v))
            .collect::<Result<Vec<_>>>()?;
        Ok(SpinWindow::new(origin, values))
    }

    /// I.i.d. spins with `P(+1) = p`.
    pub fn sample(params: &ModelParams, origin: i64, len: usize, rng: &mut RngStream) -> Self {
        let values = (0..len)
            .map(|_| {
                if rng.random_bool(params.p()) {
                    Spin::Up
                } else {
                    Spin::Down
                }
            })
            .collect();
        SpinWindow::new(origin, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// One past the last coordinate.
    pub fn end(&self) -> i64 {
        self.origin + self.values.len() as i64
    }

    pub fn last_index(&self) -> i64 {
        self.end() - 1
    }

    pub fn contains(&self, n: i64) -> bool {
        n >= self.origin && n < self.end()
    }

    pub fn get(&self, n: i64) -> Option<Spin> {
        if self.contains(n) {
            Some(self.values[(n - self.origin) as usize])
        } else {
            None
        }
    }

    pub fn as_values(&self) -> Vec<i64> {
        self.values.iter().map(|s| s.value()).collect()
    }

    /// Entries with coordinates in `lo..=hi`, clipped to the window.
    pub fn slice(&self, lo: i64, hi: i64) -> SpinWindow {
        let lo = lo.max(self.origin);
        let hi = hi.min(self.last_index());
        if lo > hi {
            return SpinWindow::empty(lo);
        }
        let a = (lo - self.origin) as usize;
        let b = (hi - self.origin) as usize;
        SpinWindow::new(lo, self.values[a..=b].to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, Spin)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, s)| (self.origin + i as i64, *s))
    }
}

/// Partial sums of a spin window, anchored at zero one step before `origin`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WalkPath {
    pub origin: i64,
    pub values: Vec<i64>,
}

impl WalkPath {
    pub fn get(&self, n: i64) -> Option<i64> {
        if n == self.origin - 1 {
            return Some(0);
        }
        let i = n - self.origin;
        (i >= 0).then(|| self.values.get(i as usize).copied()).flatten()
    }
}

pub fn walk_from_spins(spins: &SpinWindow) -> WalkPath {
    let values = spins
        .values
        .iter()
        .scan(0i64, |x, s| {
            *x += s.value();
            Some(*x)
        })
        .collect();
    WalkPath {
        origin: spins.origin,
        values,
    }
}

/// Forward queue `q_n = max(q_{n-1} - omega_n, 0)` with `q_{origin-1} = seed`.
///
/// When the seed is only known to lie in `seed ..= seed_high`, `values` follow
/// the low seed and `certified_from` is the first coordinate where the low and
/// high paths meet; from there on the values are exact.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueuePath {
    pub seed: u64,
    pub seed_high: u64,
    pub origin: i64,
    pub values: Vec<u64>,
    pub certified_from: Option<i64>,
}

impl QueuePath {
    /// Queue value at `n`, including the seed at `origin - 1`.
    pub fn at(&self, n: i64) -> Option<u64> {
        if n == self.origin - 1 {
            return Some(self.seed);
        }
        let i = n - self.origin;
        (i >= 0).then(|| self.values.get(i as usize).copied()).flatten()
    }

    /// Whether the value at `n` is the same for every seed in range.
    pub fn is_exact_at(&self, n: i64) -> bool {
        if n == self.origin - 1 {
            return self.seed == self.seed_high;
        }
        self.at(n).is_some() && self.certified_from.is_some_and(|c| n >= c)
    }

    pub fn exact_at(&self, n: i64) -> Option<u64> {
        if self.is_exact_at(n) {
            self.at(n)
        } else {
            None
        }
    }

    pub fn last(&self) -> u64 {
        self.values.last().copied().unwrap_or(self.seed)
    }
}

/// Dual queue `r_{n-1} = max(r_n - sigma_n, 0)`.
///
/// `values` covers coordinates `origin - 1 ..= origin + len - 1`; the last
/// entry is the right seed. With an uncertain right seed, `certified_until` is
/// the last coordinate from which the low and high paths agree leftwards.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualQueuePath {
    pub seed_right: u64,
    pub seed_right_high: u64,
    pub origin: i64,
    pub values: Vec<u64>,
    pub certified_until: Option<i64>,
}

impl DualQueuePath {
    pub fn at(&self, n: i64) -> Option<u64> {
        let i = n - (self.origin - 1);
        (i >= 0).then(|| self.values.get(i as usize).copied()).flatten()
    }

    pub fn is_exact_at(&self, n: i64) -> bool {
        self.at(n).is_some() && self.certified_until.is_some_and(|c| n <= c)
    }

    pub fn exact_at(&self, n: i64) -> Option<u64> {
        if self.is_exact_at(n) {
            self.at(n)
        } else {
            None
        }
    }
}

#[inline]
fn lindley_step(q: u64, spin: Spin) -> u64 {
    match spin {
        Spin::Up => q.saturating_sub(1),
        Spin::Down => q + 1,
    }
}

pub fn forward_lindley(seed: u64, spins: &SpinWindow) -> QueuePath {
    coupled_lindley(seed, seed, spins)
}

/// Runs the forward recursion from `seed_low` and `seed_high` and certifies
/// the coordinates after which they agree. By monotonicity the agreement is
/// permanent and covers every seed in between.
pub fn coupled_lindley(seed_low: u64, seed_high: u64, spins: &SpinWindow) -> QueuePath {
    debug_assert!(seed_low <= seed_high);
    let mut values = Vec::with_capacity(spins.len());
    let (mut lo, mut hi) = (seed_low, seed_high);
    let mut certified_from = (lo == hi).then_some(spins.origin);
    for (n, s) in spins.iter() {
        lo = lindley_step(lo, s);
        if certified_from.is_none() {
            hi = lindley_step(hi, s);
            if lo == hi {
                certified_from = Some(n);
            }
        }
        values.push(lo);
    }
    QueuePath {
        seed: seed_low,
        seed_high,
        origin: spins.origin,
        values,
        certified_from,
    }
}

pub fn backward_lindley(seed_right: u64, sigma: &SpinWindow) -> DualQueuePath {
    coupled_backward_lindley(seed_right, seed_right, sigma)
}

/// Backward recursion from two right seeds; mirror of [`coupled_lindley`].
pub fn coupled_backward_lindley(
    seed_low: u64,
    seed_high: u64,
    sigma: &SpinWindow,
) -> DualQueuePath {
    debug_assert!(seed_low <= seed_high);
    let len = sigma.len();
    let mut values = vec![0u64; len + 1];
    values[len] = seed_low;
    let (mut lo, mut hi) = (seed_low, seed_high);
    let mut certified_until = (lo == hi).then_some(sigma.last_index());
    for i in (0..len).rev() {
        let s = sigma.values[i];
        lo = lindley_step(lo, s);
        if certified_until.is_none() {
            hi = lindley_step(hi, s);
            if lo == hi {
                // values[i] sits at coordinate origin + i - 1
                certified_until = Some(sigma.origin + i as i64 - 1);
            }
        }
        values[i] = lo;
    }
    DualQueuePath {
        seed_right: seed_low,
        seed_right_high: seed_high,
        origin: sigma.origin,
        values,
        certified_until,
    }
}

/// Draws from the stationary queue law `(1 - rho) rho^x`.
pub fn sample_stationary_seed(params: &ModelParams, rng: &mut RngStream) -> u64 {
    Geometric::new(1.0 - params.rho())
        .expect("0 < 1 - rho <= 1")
        .sample(rng)
}

/// Queue value at coordinate 0 of a fresh i.i.d. spin sequence, computed from
/// the walk itself: spins are drawn into the past and the coupled recursion
/// from seeds `0` and `cap` is rerun over doubling depths (reusing the same
/// draws) until it certifies coordinate 0. Exact whenever the true seed at the
/// start of the final run is at most `cap`.
///
/// Returns the value and the depth used.
pub fn sample_queue_at_origin(
    params: &ModelParams,
    cap: u64,
    rng: &mut RngStream,
) -> (u64, usize) {
    // past[i] is the spin at coordinate -i
    let mut past: Vec<Spin> = Vec::new();
    let mut depth = 64;
    loop {
        while past.len() < depth {
            past.push(if rng.random_bool(params.p()) {
                Spin::Up
            } else {
                Spin::Down
            });
        }
        let (mut lo, mut hi) = (0u64, cap);
        for s in past[..depth].iter().rev() {
            lo = lindley_step(lo, *s);
            hi = lindley_step(hi, *s);
        }
        if lo == hi {
            return (lo, depth);
        }
        depth *= 2;
    }
}
