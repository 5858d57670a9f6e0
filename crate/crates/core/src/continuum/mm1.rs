//! Event-driven M/M/1 simulation on a finite window started in equilibrium.

use rand::Rng;
use rand_distr::{Distribution, Exp, Geometric};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{
    chi_square_gof, correlation_test, derive_stream, ks_test, mean_var, rng::stream_id, Pooling,
    RngStream, SuiteOutcome, TestReport,
};
use crate::transform::{transform_t, SeedPolicy};
use crate::walk::{ModelParams, Spin, SpinWindow};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mm1Params {
    lambda: f64,
    xi: f64,
}

impl Mm1Params {
    pub fn new(lambda: f64, xi: f64) -> Result<Self> {
        if !(lambda.is_finite() && xi.is_finite() && lambda > 0.0 && lambda < xi) {
            return Err(Error::InvalidParams(format!(
                "need 0 < lambda < xi, got lambda = {lambda}, xi = {xi}"
            )));
        }
        Ok(Mm1Params { lambda, xi })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    /// Traffic intensity `lambda / xi`.
    pub fn load(&self) -> f64 {
        self.lambda / self.xi
    }

    /// Spin law of the embedded walk: `P(+1) = xi / (lambda + xi)`.
    pub fn walk_params(&self) -> Result<ModelParams> {
        ModelParams::new(self.xi / (self.lambda + self.xi))
    }
}

impl Default for Mm1Params {
    fn default() -> Self {
        Mm1Params { lambda: 1.0, xi: 2.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mark {
    Arrival,
    Service,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub mark: Mark,
}

/// Arrival and potential-service epochs in `(t_lo, t_hi]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EventStream {
    pub t_lo: f64,
    pub t_hi: f64,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(t_lo: f64, t_hi: f64, events: Vec<Event>) -> Result<Self> {
        if !(t_lo < t_hi) {
            return Err(Error::DegenerateWindow { lo: t_lo, hi: t_hi });
        }
        let mut prev = t_lo;
        for e in &events {
            if !(e.time > prev && e.time <= t_hi) {
                return Err(Error::InvalidParams(format!(
                    "event time {} out of order or outside ({t_lo}, {t_hi}]",
                    e.time
                )));
            }
            prev = e.time;
        }
        Ok(EventStream { t_lo, t_hi, events })
    }

    pub fn arrivals(&self) -> impl Iterator<Item = f64> + '_ {
        self.events.iter().filter(|e| e.mark == Mark::Arrival).map(|e| e.time)
    }
}

/// Queue length at `t_lo` and after each event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueueTrajectory {
    pub initial: u64,
    pub steps: Vec<u64>,
}

impl QueueTrajectory {
    /// `Q(t)`, right-continuous: events at `t` are included.
    pub fn value_at(&self, events: &EventStream, t: f64) -> u64 {
        let done = events.events.partition_point(|e| e.time <= t);
        if done == 0 {
            self.initial
        } else {
            self.steps[done - 1]
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointProcess {
    pub times: Vec<f64>,
}

impl PointProcess {
    /// Number of points in `(s, t]`.
    pub fn count(&self, s: f64, t: f64) -> u64 {
        if t <= s {
            return 0;
        }
        (self.times.partition_point(|x| *x <= t) - self.times.partition_point(|x| *x <= s)) as u64
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Which output process an event belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// A service that found a customer.
    Departure,
    /// An arrival, or a service that found the queue empty.
    Residual,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mm1Sample {
    pub events: EventStream,
    pub queue: QueueTrajectory,
    pub departures: PointProcess,
    pub residual: PointProcess,
    pub roles: Vec<Role>,
}

impl Mm1Sample {
    /// Checks `D(s,t] = Q(s) + A(s,t] - Q(t)` over all pairs of event
    /// boundaries, or only consecutive ones when `all_pairs` is false.
    pub fn counting_identity_violations(&self, all_pairs: bool) -> u64 {
        let ev = &self.events.events;
        let n = ev.len();
        // prefix counts at boundary i: after the first i events
        let mut d = vec![0i64; n + 1];
        let mut a = vec![0i64; n + 1];
        let mut q = vec![self.queue.initial as i64; n + 1];
        for i in 0..n {
            d[i + 1] = d[i] + i64::from(self.roles[i] == Role::Departure && ev[i].mark == Mark::Service);
            a[i + 1] = a[i] + i64::from(ev[i].mark == Mark::Arrival);
            q[i + 1] = self.queue.steps[i] as i64;
        }
        let ok = |i: usize, j: usize| d[j] - d[i] == q[i] + (a[j] - a[i]) - q[j];
        if all_pairs {
            (0..=n)
                .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
                .filter(|(i, j)| !ok(*i, *j))
                .count() as u64
        } else {
            (0..n).filter(|i| !ok(*i, i + 1)).count() as u64
        }
    }
}

/// Runs the queue through the events from `Q(t_lo) = initial`.
pub fn run_queue(initial: u64, events: &EventStream) -> Mm1Sample {
    let mut q = initial;
    let mut steps = Vec::with_capacity(events.events.len());
    let mut roles = Vec::with_capacity(events.events.len());
    let (mut d, mut r) = (Vec::new(), Vec::new());
    for e in &events.events {
        match e.mark {
            Mark::Arrival => {
                q += 1;
                roles.push(Role::Residual);
                r.push(e.time);
            }
            Mark::Service if q > 0 => {
                q -= 1;
                roles.push(Role::Departure);
                d.push(e.time);
            }
            Mark::Service => {
                roles.push(Role::Residual);
                r.push(e.time);
            }
        }
        steps.push(q);
    }
    Mm1Sample {
        events: events.clone(),
        queue: QueueTrajectory { initial, steps },
        departures: PointProcess { times: d },
        residual: PointProcess { times: r },
        roles,
    }
}

/// Samples an equilibrium path on `(t_lo, t_hi]`.
pub fn simulate_mm1(params: &Mm1Params, t_lo: f64, t_hi: f64, rng: &mut RngStream) -> Result<Mm1Sample> {
    if !(t_lo < t_hi) || !t_lo.is_finite() || !t_hi.is_finite() {
        return Err(Error::DegenerateWindow { lo: t_lo, hi: t_hi });
    }
    let initial = Geometric::new(1.0 - params.load())
        .map_err(|e| Error::InvalidParams(e.to_string()))?
        .sample(rng);
    let arr = Exp::new(params.lambda).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let srv = Exp::new(params.xi).map_err(|e| Error::InvalidParams(e.to_string()))?;
    let mut ta = t_lo + arr.sample(rng);
    let mut ts = t_lo + srv.sample(rng);
    let mut last_s = t_lo;
    let mut events = Vec::new();
    loop {
        while ts == ta {
            ts = last_s + srv.sample(rng);
        }
        let (time, mark) = if ta < ts { (ta, Mark::Arrival) } else { (ts, Mark::Service) };
        if time > t_hi {
            break;
        }
        events.push(Event { time, mark });
        match mark {
            Mark::Arrival => ta += arr.sample(rng),
            Mark::Service => {
                last_s = ts;
                ts += srv.sample(rng);
            }
        }
    }
    Ok(run_queue(initial, &EventStream::new(t_lo, t_hi, events)?))
}

/// `+1` for each service, `-1` for each arrival, in time order.
pub fn extract_embedded_walk(events: &EventStream) -> SpinWindow {
    SpinWindow::new(
        1,
        events
            .events
            .iter()
            .map(|e| if e.mark == Mark::Service { Spin::Up } else { Spin::Down })
            .collect(),
    )
}

/// Mismatches between `T` of the embedded walk and the roles of the events:
/// residual events must map to `+1` and departures to `-1`.
pub fn embedded_role_mismatches(sample: &Mm1Sample) -> u64 {
    let walk = extract_embedded_walk(&sample.events);
    let sigma = transform_t(&walk, SeedPolicy::Exact(sample.queue.initial)).output;
    sigma
        .values
        .iter()
        .zip(&sample.roles)
        .filter(|(s, r)| (**s == Spin::Up) != (**r == Role::Residual))
        .count() as u64
}

const TAG_MM1: u64 = 0x20;
/// Gaps taken from the start of each replica; later gaps would be censored by
/// the window end.
const GAPS_PER_REPLICA: usize = 5;

#[derive(Default)]
struct Mm1Replica {
    gaps: Vec<f64>,
    d_unit: Vec<u64>,
    r_unit: Vec<u64>,
    d_last: u64,
    r_last: u64,
    q_end: u64,
    identity: u64,
    roles: u64,
    ups: u64,
    spins: u64,
}

fn poisson_pmf(mu: f64, k: u64) -> f64 {
    let ln = -mu + k as f64 * mu.ln() - statrs::function::gamma::ln_gamma(k as f64 + 1.0);
    ln.exp()
}

fn poisson_gof(name: &str, counts: &[u64], mu: f64) -> Result<TestReport> {
    let top = counts.iter().copied().max().unwrap_or(0) as usize + 1;
    let mut observed = vec![0u64; top + 1];
    for c in counts {
        observed[*c as usize] += 1;
    }
    let mut probs: Vec<f64> = (0..top as u64).map(|k| poisson_pmf(mu, k)).collect();
    probs.push((1.0 - probs.iter().sum::<f64>()).max(0.0));
    let s: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|p| *p /= s);
    chi_square_gof(name, &observed, &probs, Pooling::MinExpected)
}

/// Burke's theorem and its companions on `replicas` equilibrium paths over
/// `(-horizon, 0]`.
pub fn burke_checks_mm1(
    params: &Mm1Params,
    horizon: f64,
    replicas: usize,
    root_seed: u64,
) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    if !(horizon > 0.0) || replicas == 0 {
        return Ok(out);
    }
    let units = horizon.floor() as usize;
    let reps: Vec<Mm1Replica> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| -> Result<Mm1Replica> {
            let mut rng = derive_stream(root_seed, stream_id(TAG_MM1, i));
            let s = simulate_mm1(params, -horizon, 0.0, &mut rng)?;
            let d = &s.departures.times;
            let mut gaps = Vec::with_capacity(GAPS_PER_REPLICA);
            let mut prev = -horizon;
            for t in d.iter().take(GAPS_PER_REPLICA) {
                gaps.push(t - prev);
                prev = *t;
            }
            let unit = |p: &PointProcess| -> Vec<u64> {
                (0..units).map(|j| p.count(-(j as f64) - 1.0, -(j as f64))).collect()
            };
            Ok(Mm1Replica {
                gaps,
                d_unit: unit(&s.departures),
                r_unit: unit(&s.residual),
                d_last: s.departures.count(-1.0, 0.0),
                r_last: s.residual.count(-1.0, 0.0),
                q_end: s.queue.value_at(&s.events, 0.0),
                identity: s.counting_identity_violations(false),
                roles: embedded_role_mismatches(&s),
                ups: s.events.events.iter().filter(|e| e.mark == Mark::Service).count() as u64,
                spins: s.events.events.len() as u64,
            })
        })
        .collect::<Result<_>>()?;
    let n = reps.len() as u64;
    let lambda = params.lambda;

    let gaps: Vec<f64> = reps.iter().flat_map(|r| r.gaps.iter().copied()).collect();
    out.tests.push(ks_test("mm1.interdeparture_exp", &gaps, |x| 1.0 - (-lambda * x).exp())?);

    if units > 0 {
        let d_counts: Vec<u64> = reps.iter().flat_map(|r| r.d_unit.iter().copied()).collect();
        out.tests.push(poisson_gof("mm1.departure_counts_poisson", &d_counts, lambda)?);
        let r_counts: Vec<u64> = reps.iter().flat_map(|r| r.r_unit.iter().copied()).collect();
        out.tests.push(poisson_gof("mm1.residual_counts_poisson", &r_counts, params.xi)?);
        let as_f: Vec<f64> = d_counts.iter().map(|c| *c as f64).collect();
        let (mean, var) = mean_var(&as_f);
        let ratio = var / mean;
        out.tests.push(
            TestReport::flag(
                "mm1.departure_dispersion",
                ratio,
                (0.9..=1.1).contains(&ratio),
                d_counts.len() as u64,
            )
            .param("lower", 0.9)
            .param("upper", 1.1),
        );
    }

    let d_last: Vec<f64> = reps.iter().map(|r| r.d_last as f64).collect();
    let r_last: Vec<f64> = reps.iter().map(|r| r.r_last as f64).collect();
    let q_end: Vec<f64> = reps.iter().map(|r| r.q_end as f64).collect();
    if n >= 2 {
        out.tests.push(correlation_test("mm1.past_departures_vs_queue", &d_last, &q_end));
        out.tests.push(correlation_test("mm1.departures_vs_residual", &d_last, &r_last));
    }

    let top = 16usize;
    let mut qc = vec![0u64; top + 1];
    for r in &reps {
        qc[(r.q_end as usize).min(top)] += 1;
    }
    let rho = params.load();
    let mut probs: Vec<f64> = (0..top as i32).map(|x| (1.0 - rho) * rho.powi(x)).collect();
    probs.push(rho.powi(top as i32));
    out.tests.push(chi_square_gof("mm1.queue_stationary", &qc, &probs, Pooling::MinExpected)?);

    out.tests.push(TestReport::within(
        "mm1.counting_identity_violations",
        reps.iter().map(|r| r.identity).sum::<u64>() as f64,
        0.0,
        n,
    ));
    out.tests.push(TestReport::within(
        "mm1.embedded_role_mismatches",
        reps.iter().map(|r| r.roles).sum::<u64>() as f64,
        0.0,
        n,
    ));
    let spins: u64 = reps.iter().map(|r| r.spins).sum();
    if spins > 0 {
        let p = params.xi / (params.lambda + params.xi);
        let f = reps.iter().map(|r| r.ups).sum::<u64>() as f64 / spins as f64;
        let z = (f - p) / (p * (1.0 - p) / spins as f64).sqrt();
        out.tests.push(TestReport::within("mm1.embedded_spin_frequency_zscore", z, 3.0, spins).param("frequency", f));
    }
    Ok(out)
}

/// Draws a uniform in `(0, 1]`.
pub(crate) fn open_uniform(rng: &mut RngStream) -> f64 {
    1.0 - rng.random::<f64>()
}
