//! The discrete Burke transform `T`, its inverse, time reversal, and
//! certified iteration.
//!
//! `T` acts as a one-pass local rule driven by the forward queue: each spin is
//! flipped unless the queue just before it is empty, in which case the output
//! is `+1`. The inverse is the mirror rule driven by the dual queue. The form
//! `y = 2s - x` is kept as [`transform_t_definitional`] and used as a test
//! oracle.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{
    chi_square_gof, derive_stream, independence_test, rng::stream_id, CertificationStat, LawSeries, Pooling,
    SuiteOutcome, TestReport,
};
use crate::walk::{
    coupled_backward_lindley, coupled_lindley, sample_queue_at_origin, sample_stationary_seed,
    walk_from_spins, DualQueuePath, ModelParams, QueuePath, Spin, SpinWindow, DEFAULT_SEED_CAP,
};

/// Largest `|k|` accepted by [`iterate_t`].
pub const MAX_ITERATES: u64 = 1 << 16;

/// How the queue value at the consumed boundary is supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedPolicy {
    /// The boundary queue value is known.
    Exact(u64),
    /// The boundary value is unknown; couple from `0` and `cap`.
    Coupled { cap: u64 },
}

impl SeedPolicy {
    fn bounds(self) -> (u64, u64) {
        match self {
            SeedPolicy::Exact(s) => (s, s),
            SeedPolicy::Coupled { cap } => (0, cap),
        }
    }
}

impl Default for SeedPolicy {
    fn default() -> Self {
        SeedPolicy::Coupled {
            cap: DEFAULT_SEED_CAP,
        }
    }
}

/// Queue that drove a transform. Both variants describe the queue of the
/// pre-image `omega` (for `T^{-1}` the dual queue of the input equals the
/// forward queue of the output).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QueueTrace {
    Forward(QueuePath),
    Backward(DualQueuePath),
}

impl QueueTrace {
    pub fn at(&self, n: i64) -> Option<u64> {
        match self {
            QueueTrace::Forward(q) => q.at(n),
            QueueTrace::Backward(r) => r.at(n),
        }
    }

    pub fn exact_at(&self, n: i64) -> Option<u64> {
        match self {
            QueueTrace::Forward(q) => q.exact_at(n),
            QueueTrace::Backward(r) => r.exact_at(n),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformResult {
    pub output: SpinWindow,
    pub queue: QueueTrace,
    /// Output entries in `certified_from ..= certified_until` are exact; both
    /// are `None` when that span is empty.
    pub certified_from: Option<i64>,
    pub certified_until: Option<i64>,
}

impl TransformResult {
    fn with_span(output: SpinWindow, queue: QueueTrace, lo: i64, hi: i64) -> Self {
        let (certified_from, certified_until) = if lo <= hi {
            (Some(lo), Some(hi))
        } else {
            (None, None)
        };
        TransformResult {
            output,
            queue,
            certified_from,
            certified_until,
        }
    }

    pub fn certified_span(&self) -> Option<(i64, i64)> {
        self.certified_from.zip(self.certified_until)
    }

    pub fn is_certified(&self) -> bool {
        self.certified_span().is_some()
    }

    /// The output restricted to its certified span.
    pub fn certified_output(&self) -> SpinWindow {
        match self.certified_span() {
            Some((lo, hi)) => self.output.slice(lo, hi),
            None => SpinWindow::empty(self.output.origin),
        }
    }
}

/// Applies `T` to a window whose left boundary queue is given by `policy`.
pub fn transform_t(spins: &SpinWindow, policy: SeedPolicy) -> TransformResult {
    let (lo, hi) = policy.bounds();
    let q = coupled_lindley(lo, hi, spins);
    let mut prev = q.seed;
    let values = spins
        .values
        .iter()
        .zip(&q.values)
        .map(|(s, qn)| {
            let out = if prev == 0 { Spin::Up } else { s.flip() };
            prev = *qn;
            out
        })
        .collect();
    let first = if lo == hi {
        spins.origin
    } else {
        // q exact from c on, so the output is exact from c + 1 on
        q.certified_from.map_or(i64::MAX, |c| c + 1)
    };
    let output = SpinWindow::new(spins.origin, values);
    TransformResult::with_span(output, QueueTrace::Forward(q), first, spins.last_index())
}

/// `T` computed literally: first differences of `y = 2s - x`, where `s` is the
/// running supremum of the walk with past supremum `seed`.
pub fn transform_t_definitional(spins: &SpinWindow, seed: u64) -> SpinWindow {
    let x = walk_from_spins(spins);
    let mut sup = seed as i64;
    let mut y_prev = 2 * seed as i64;
    let values = x
        .values
        .iter()
        .map(|xn| {
            sup = sup.max(*xn);
            let y = 2 * sup - xn;
            let d = y - y_prev;
            y_prev = y;
            Spin::from_value(d).expect("increments of y are +-1")
        })
        .collect();
    SpinWindow::new(spins.origin, values)
}

/// Applies `T^{-1}` to `sigma`, with the dual queue at the right edge given by
/// `policy`.
///
/// `omega_n = sigma_n + 2 (r_{n-1} - r_n)`: `+1` when `r_n = 0`, otherwise
/// `-sigma_n`.
pub fn inverse_t(sigma: &SpinWindow, policy: SeedPolicy) -> TransformResult {
    let (lo, hi) = policy.bounds();
    let r = coupled_backward_lindley(lo, hi, sigma);
    let values = sigma
        .values
        .iter()
        .zip(&r.values[1..])
        .map(|(s, rn)| if *rn == 0 { Spin::Up } else { s.flip() })
        .collect();
    let last = r.certified_until.map_or(i64::MIN, |c| c.min(sigma.last_index()));
    let output = SpinWindow::new(sigma.origin, values);
    TransformResult::with_span(output, QueueTrace::Backward(r), sigma.origin, last)
}

/// Time reversal: `(R omega)_n = omega_{-n}`.
pub fn reverse_r(spins: &SpinWindow) -> SpinWindow {
    let mut values = spins.values.clone();
    values.reverse();
    SpinWindow::new(-spins.last_index(), values)
}

/// `T^k` for signed `k`, re-certifying at every step.
///
/// Each application acts on the certified output of the previous one, so the
/// certified span shrinks from the left for `k > 0` and from the right for
/// `k < 0`.
pub fn iterate_t(spins: &SpinWindow, policy: SeedPolicy, k: i64) -> Result<TransformResult> {
    let steps = k.unsigned_abs();
    if steps > MAX_ITERATES {
        return Err(Error::ResourceLimit(format!(
            "|k| = {steps} exceeds {MAX_ITERATES}"
        )));
    }
    if k == 0 {
        let (lo, hi) = policy.bounds();
        let q = coupled_lindley(lo, hi, spins);
        return Ok(TransformResult::with_span(
            spins.clone(),
            QueueTrace::Forward(q),
            spins.origin,
            spins.last_index(),
        ));
    }
    let mut current = spins.clone();
    let mut result = None;
    for applied in 1..=steps {
        let r = if k > 0 {
            transform_t(&current, policy)
        } else {
            inverse_t(&current, policy)
        };
        if !r.is_certified() {
            return Err(Error::CertificationLost {
                applied,
                requested: steps,
            });
        }
        current = r.certified_output();
        result = Some(r);
    }
    Ok(result.expect("at least one step"))
}

/// Margin to allocate on each side of a width-`width` span that must stay
/// certified through `|k|` iterations.
///
/// A fresh coupling from `cap` drains at rate `2p - 1` per step, so each
/// iteration consumes about `cap / (2p - 1)` coordinates.
pub fn window_margin(params: &ModelParams, k: u64, width: usize, cap: u64) -> usize {
    let per_step = ((cap as f64 + 4.0) / (2.0 * params.p() - 1.0) - 1e-9).ceil() as usize;
    k as usize * per_step + width
}

/// Sizes of the Monte Carlo checks of the discrete transform.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteConfig {
    pub window: usize,
    pub trials: usize,
    pub q0_samples: usize,
    pub cap: u64,
}

impl Default for DiscreteConfig {
    fn default() -> Self {
        DiscreteConfig {
            window: 256,
            trials: 10_000,
            q0_samples: 1_000_000,
            cap: DEFAULT_SEED_CAP,
        }
    }
}

const TAG_Q0: u64 = 0x01;
const TAG_TRIALS: u64 = 0x02;
const PATTERN_LEN: usize = 4;

#[derive(Default)]
struct TrialOutcome {
    certified: bool,
    mismatches: u64,
    exact_seed_mismatches: u64,
    pattern: Option<u64>,
    queue_at_end: Option<u64>,
    dual_zero: Option<bool>,
    iterate_checked: bool,
    iterate_mismatches: u64,
}

fn run_trial(params: &ModelParams, cfg: &DiscreteConfig, root_seed: u64, i: u64) -> TrialOutcome {
    let mut rng = derive_stream(root_seed, stream_id(TAG_TRIALS, i));
    let origin = -(cfg.window as i64) / 2;
    let omega = SpinWindow::sample(params, origin, cfg.window, &mut rng);
    let true_seed = sample_stationary_seed(params, &mut rng);
    let policy = SeedPolicy::Coupled { cap: cfg.cap };
    let fwd = transform_t(&omega, policy);
    let mut out = TrialOutcome::default();
    if let Some((lo, hi)) = fwd.certified_span() {
        out.certified = true;
        if true_seed <= cfg.cap {
            let exact = transform_t(&omega, SeedPolicy::Exact(true_seed));
            out.exact_seed_mismatches = (lo..=hi)
                .filter(|n| exact.output.get(*n) != fwd.output.get(*n))
                .count() as u64;
        }
        let r_star = fwd.queue.exact_at(omega.last_index()).expect("certified at the edge");
        let inv = inverse_t(&fwd.output, SeedPolicy::Exact(r_star));
        out.mismatches = (lo..=hi)
            .filter(|n| inv.output.get(*n) != omega.get(*n))
            .count() as u64;
        if (hi - lo + 1) as usize >= PATTERN_LEN {
            let code = (0..PATTERN_LEN as i64).fold(0u64, |acc, j| {
                let s = fwd.output.get(hi - j).expect("in span");
                (acc << 1) | u64::from(s == Spin::Up)
            });
            out.pattern = Some(code);
            out.queue_at_end = fwd.queue.exact_at(hi);
        }
        let mid = lo + (hi - lo) / 2;
        out.dual_zero = inv.queue.at(mid).map(|r| r == 0);
    }
    if i < 1000 {
        // T(T^{-1} omega) on a window wide enough for two couplings
        let wide = SpinWindow::sample(
            params,
            0,
            cfg.window.max(2 * window_margin(params, 1, 0, cfg.cap) + 64),
            &mut rng,
        );
        if let Ok(back) = iterate_t(&wide, policy, -1) {
            if let Ok(there) = iterate_t(&back.certified_output(), policy, 1) {
                if let Some((lo, hi)) = there.certified_span() {
                    out.iterate_checked = true;
                    out.iterate_mismatches = (lo..=hi)
                        .filter(|n| there.output.get(*n) != wide.get(*n))
                        .count() as u64;
                }
            }
        }
    }
    out
}

/// Monte Carlo checks of measure preservation, the stationary queue law,
/// independence of the queue from past outputs, and the involution.
pub fn discrete_monte_carlo(
    params: &ModelParams,
    cfg: &DiscreteConfig,
    root_seed: u64,
) -> Result<SuiteOutcome> {
    let mut outcome = SuiteOutcome::default();
    let rho = params.rho();

    if cfg.q0_samples > 0 {
        let samples: Vec<u64> = (0..cfg.q0_samples as u64)
            .into_par_iter()
            .map(|i| {
                let mut rng = derive_stream(root_seed, stream_id(TAG_Q0, i));
                sample_queue_at_origin(params, cfg.cap, &mut rng).0
            })
            .collect();
        let top = 16usize;
        let mut counts = vec![0u64; top + 1];
        for s in &samples {
            counts[(*s as usize).min(top)] += 1;
        }
        let mut probs: Vec<f64> = (0..top as u64).map(|x| params.geometric_pmf(x)).collect();
        probs.push(rho.powi(top as i32));
        outcome.series.push(LawSeries::from_counts("discrete.q0", &counts, &probs));
        outcome.tests.push(
            chi_square_gof("discrete.q0_geometric", &counts, &probs, Pooling::MinExpected)?
                .param("rho", rho),
        );
        let n = samples.len() as f64;
        let mean = samples.iter().map(|s| *s as f64).sum::<f64>() / n;
        let sd = rho.sqrt() / (1.0 - rho);
        outcome.tests.push(TestReport::within(
            "discrete.q0_mean_zscore",
            (mean - rho / (1.0 - rho)) / (sd / n.sqrt()),
            3.0,
            samples.len() as u64,
        ));
    }

    if cfg.trials == 0 {
        return Ok(outcome);
    }
    let trials: Vec<TrialOutcome> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| run_trial(params, cfg, root_seed, i))
        .collect();
    let total = trials.len() as u64;
    let certified = trials.iter().filter(|t| t.certified).count() as u64;
    outcome.certification.push(CertificationStat::new(
        "discrete.involution_span_nonempty",
        certified,
        total,
    ));
    outcome.tests.push(TestReport::at_least(
        "discrete.involution_certified_rate",
        certified as f64 / total as f64,
        0.95,
        total,
    ));
    outcome.tests.push(TestReport::within(
        "discrete.involution_mismatches",
        trials.iter().map(|t| t.mismatches).sum::<u64>() as f64,
        0.0,
        certified,
    ));
    outcome.tests.push(TestReport::within(
        "discrete.coupled_vs_exact_seed_mismatches",
        trials.iter().map(|t| t.exact_seed_mismatches).sum::<u64>() as f64,
        0.0,
        certified,
    ));
    let it_checked = trials.iter().filter(|t| t.iterate_checked).count() as u64;
    outcome.certification.push(CertificationStat::new(
        "discrete.iterate_roundtrip_certified",
        it_checked,
        trials.len().min(1000) as u64,
    ));
    outcome.tests.push(TestReport::within(
        "discrete.iterate_roundtrip_mismatches",
        trials.iter().map(|t| t.iterate_mismatches).sum::<u64>() as f64,
        0.0,
        it_checked,
    ));

    // Output law on the last PATTERN_LEN certified coordinates.
    let patterns: Vec<u64> = trials.iter().filter_map(|t| t.pattern).collect();
    if !patterns.is_empty() {
        let mut counts = vec![0u64; 1 << PATTERN_LEN];
        for c in &patterns {
            counts[*c as usize] += 1;
        }
        let probs: Vec<f64> = (0..1u64 << PATTERN_LEN)
            .map(|c| {
                let ups = c.count_ones() as i32;
                params.p().powi(ups) * (1.0 - params.p()).powi(PATTERN_LEN as i32 - ups)
            })
            .collect();
        outcome.tests.push(chi_square_gof(
            "discrete.output_pattern_law",
            &counts,
            &probs,
            Pooling::MinExpected,
        )?);
        let pairs: Vec<(u64, u64)> = trials
            .iter()
            .filter_map(|t| t.queue_at_end.zip(t.pattern))
            .collect();
        let ind = independence_test("discrete.queue_vs_past_outputs", &pairs)?;
        outcome.tests.push(ind.g_test);
    }

    let duals: Vec<bool> = trials.iter().filter_map(|t| t.dual_zero).collect();
    if !duals.is_empty() {
        let n = duals.len() as f64;
        let f = duals.iter().filter(|z| **z).count() as f64 / n;
        let target = 1.0 - rho;
        let z = (f - target) / (target * (1.0 - target) / n).sqrt();
        outcome.tests.push(
            TestReport::within("discrete.dual_queue_zero_frequency_zscore", z, 3.0, duals.len() as u64)
                .param("frequency", f),
        );
    }
    Ok(outcome)
}
