//! Two-sided Brownian motion with drift on a grid, its running maximum, and
//! the reflected process `Y = 2M - X - 2M(0)`.

use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;

use super::mm1::open_uniform;
use crate::error::{Error, Result};
use crate::stats::{correlation_test, derive_stream, ks_test, rng::stream_id, RngStream, SuiteOutcome, TestReport};

#[derive(Clone, Debug, PartialEq)]
pub struct BrownianConfig {
    pub nu: f64,
    pub h: f64,
    pub t_past: f64,
    pub t_fut: f64,
    /// Sample the maximum between grid points from the bridge law. When false
    /// the running maximum only sees grid values, which biases it downward.
    pub bridge: bool,
}

impl Default for BrownianConfig {
    fn default() -> Self {
        BrownianConfig {
            nu: 0.5,
            h: 0.01,
            t_past: 40.0,
            t_fut: 0.0,
            bridge: true,
        }
    }
}

fn grid_steps(span: f64, h: f64, what: &str) -> Result<usize> {
    let k = span / h;
    let r = k.round();
    if (k - r).abs() > 1e-6 * k.max(1.0) {
        return Err(Error::BadConfig(format!("{what} = {span} is not a multiple of h = {h}")));
    }
    Ok(r as usize)
}

impl BrownianConfig {
    pub fn validate(&self) -> Result<(usize, usize)> {
        let finite = [self.nu, self.h, self.t_past, self.t_fut].iter().all(|v| v.is_finite());
        if !finite || self.nu <= 0.0 || self.h <= 0.0 || self.t_past <= 0.0 || self.t_fut < 0.0 {
            return Err(Error::BadConfig(format!(
                "need nu > 0, h > 0, t_past > 0, t_fut >= 0; got {self:?}"
            )));
        }
        let past = grid_steps(self.t_past, self.h, "t_past")?;
        let fut = grid_steps(self.t_fut, self.h, "t_fut")?;
        if past == 0 {
            return Err(Error::BadConfig("t_past is shorter than one grid step".into()));
        }
        if past + fut > 1 << 28 {
            return Err(Error::ResourceLimit(format!("{} grid points", past + fut + 1)));
        }
        Ok((past, fut))
    }
}

/// Grid values `X(t_i)` and `M(t_i)` at `t_i = -t_past + i h`.
#[derive(Clone, Debug, PartialEq)]
pub struct BrownianGrid {
    pub nu: f64,
    pub h: f64,
    pub t_past: f64,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    /// `sup_{s <= -t_past} X(s) - X(-t_past)`.
    pub past_tail: f64,
    /// Index of `t = 0`.
    pub zero: usize,
}

impl BrownianGrid {
    pub fn time(&self, i: usize) -> f64 {
        -self.t_past + i as f64 * self.h
    }

    pub fn index_of(&self, t: f64) -> Option<usize> {
        let i = ((t + self.t_past) / self.h).round();
        (i >= 0.0 && (i as usize) < self.x.len()).then_some(i as usize)
    }

    pub fn m0(&self) -> f64 {
        self.m[self.zero]
    }
}

/// Maximum of a Brownian bridge from `a` to `b` over time `h`, by inverting
/// `P(max > y) = exp(-2 (y - a)(y - b) / h)`.
pub fn bridge_max(a: f64, b: f64, h: f64, u: f64) -> f64 {
    0.5 * (a + b + ((b - a).powi(2) - 2.0 * h * u.ln()).sqrt())
}

pub fn simulate_two_sided_bm(cfg: &BrownianConfig, rng: &mut RngStream) -> Result<BrownianGrid> {
    let (past, fut) = cfg.validate()?;
    let inc = Normal::new(cfg.nu * cfg.h, cfg.h.sqrt()).map_err(|e| Error::BadConfig(e.to_string()))?;
    let tail = Exp::new(2.0 * cfg.nu).map_err(|e| Error::BadConfig(e.to_string()))?;
    let len = past + fut + 1;
    let mut x = vec![0.0; len];
    for i in 1..len {
        x[i] = x[i - 1] + inc.sample(rng);
    }
    let shift = x[past];
    x.iter_mut().for_each(|v| *v -= shift);
    let past_tail = tail.sample(rng);
    let mut m = vec![0.0; len];
    m[0] = x[0] + past_tail;
    for i in 1..len {
        let cell = if cfg.bridge {
            bridge_max(x[i - 1], x[i], cfg.h, open_uniform(rng))
        } else {
            x[i]
        };
        m[i] = m[i - 1].max(cell);
    }
    Ok(BrownianGrid {
        nu: cfg.nu,
        h: cfg.h,
        t_past: cfg.t_past,
        x,
        m,
        past_tail,
        zero: past,
    })
}

/// `Y(t) = 2M(t) - X(t) - 2M(0)` on the grid.
pub fn brownian_burke_transform(grid: &BrownianGrid) -> Vec<f64> {
    let m0 = grid.m0();
    grid.x.iter().zip(&grid.m).map(|(x, m)| 2.0 * m - x - 2.0 * m0).collect()
}

const TAG_BM: u64 = 0x30;

struct BmReplica {
    m0: f64,
    inc_sum: f64,
    inc_sq: f64,
    incs: u64,
    lag: Option<f64>,
    y0: f64,
    monotone: bool,
}

/// Law of `M(0)`, of the increments of `Y` on `t <= 0`, and the independence
/// of `M(0)` from the past of `Y`.
pub fn brownian_checks(cfg: &BrownianConfig, replicas: usize, root_seed: u64) -> Result<SuiteOutcome> {
    cfg.validate()?;
    let mut out = SuiteOutcome::default();
    if replicas == 0 {
        return Ok(out);
    }
    let reps: Vec<BmReplica> = (0..replicas as u64)
        .into_par_iter()
        .map(|i| -> Result<BmReplica> {
            let mut rng = derive_stream(root_seed, stream_id(TAG_BM, i));
            let g = simulate_two_sided_bm(cfg, &mut rng)?;
            let y = brownian_burke_transform(&g);
            let (mut s, mut sq) = (0.0, 0.0);
            for w in y[..=g.zero].windows(2) {
                let d = w[1] - w[0];
                s += d;
                sq += d * d;
            }
            let lag = match (g.index_of(-1.0), g.index_of(-2.0)) {
                (Some(a), Some(b)) if cfg.t_past >= 2.0 => Some(y[a] - y[b]),
                _ => None,
            };
            Ok(BmReplica {
                m0: g.m0(),
                inc_sum: s,
                inc_sq: sq,
                incs: g.zero as u64,
                lag,
                y0: y[g.zero],
                monotone: g.m.windows(2).all(|w| w[0] <= w[1]) && g.m.iter().zip(&g.x).all(|(m, x)| m >= x),
            })
        })
        .collect::<Result<_>>()?;

    let rate = 2.0 * cfg.nu;
    let m0: Vec<f64> = reps.iter().map(|r| r.m0).collect();
    if m0.len() >= 8 {
        out.tests.push(ks_test("brownian.m0_exponential", &m0, |x| 1.0 - (-rate * x).exp())?);
    }

    let n: u64 = reps.iter().map(|r| r.incs).sum();
    let nf = n as f64;
    let sum: f64 = reps.iter().map(|r| r.inc_sum).sum();
    let sq: f64 = reps.iter().map(|r| r.inc_sq).sum();
    let mean = sum / nf;
    let var = (sq - nf * mean * mean) / (nf - 1.0);
    let target = cfg.nu * cfg.h;
    out.tests.push(
        TestReport::within("brownian.y_increment_mean_zscore", (mean - target) / (cfg.h / nf).sqrt(), 3.0, n)
            .param("mean", mean)
            .param("target", target),
    );
    out.tests.push(
        TestReport::within("brownian.y_increment_variance_rel_error", var / cfg.h - 1.0, 0.05, n)
            .param("variance", var),
    );

    let pairs: Vec<(f64, f64)> = reps.iter().filter_map(|r| r.lag.map(|l| (r.m0, l))).collect();
    if pairs.len() >= 2 {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        out.tests.push(correlation_test("brownian.m0_vs_past_y_increment", &a, &b));
    }
    out.tests.push(TestReport::within(
        "brownian.y_origin_max_abs",
        reps.iter().map(|r| r.y0.abs()).fold(0.0, f64::max),
        1e-9,
        replicas as u64,
    ));
    out.tests.push(TestReport::flag(
        "brownian.running_max_monotone",
        reps.iter().filter(|r| !r.monotone).count() as f64,
        reps.iter().all(|r| r.monotone),
        replicas as u64,
    ));
    Ok(out)
}
