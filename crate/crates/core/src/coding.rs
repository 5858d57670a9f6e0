//! The coding `phi`: queue length at the origin along the orbit of `T`, and
//! the decoder that rebuilds the spins from it.
//!
//! `(phi omega)_k = q_0(T^k omega)`. The decoder never sees the spins; every
//! cell whose zero-scan leaves the finite `(n, k)` grid is reported unknown.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{
    chi_square_gof, derive_stream, independence_test, rng::stream_id, CertificationStat, LawSeries, Pooling,
    SuiteOutcome, TestReport,
};
use crate::transform::{inverse_t, transform_t, window_margin, SeedPolicy, MAX_ITERATES};
use crate::walk::{ModelParams, Spin, SpinWindow, DEFAULT_SEED_CAP};

/// `values[i]` is `(phi omega)_{k_origin + i}`; `None` marks an entry that
/// could not be certified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CodeWindow {
    pub k_origin: i64,
    pub values: Vec<Option<u64>>,
}

impl CodeWindow {
    pub fn new(k_origin: i64, values: Vec<Option<u64>>) -> Self {
        CodeWindow { k_origin, values }
    }

    /// A fully known code.
    pub fn known(k_origin: i64, values: &[u64]) -> Self {
        CodeWindow::new(k_origin, values.iter().map(|v| Some(*v)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn k_end(&self) -> i64 {
        self.k_origin + self.values.len() as i64
    }

    pub fn get(&self, k: i64) -> Option<u64> {
        if k < self.k_origin || k >= self.k_end() {
            return None;
        }
        self.values[(k - self.k_origin) as usize]
    }

    pub fn certified(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    /// The shift `theta`: entry `k` of the result is entry `k + 1` of `self`.
    pub fn shifted(&self) -> CodeWindow {
        CodeWindow::new(self.k_origin - 1, self.values.clone())
    }
}

/// Spins and queues of one iterate over the probed coordinates.
#[derive(Clone, Debug, Default)]
struct ChainRow {
    spins: Vec<Option<Spin>>,
    queues: Vec<Option<u64>>,
}

struct PhiChain {
    code: CodeWindow,
    rows: Vec<ChainRow>,
}

fn check_k_range(k_lo: i64, k_hi: i64) -> Result<()> {
    if k_lo.unsigned_abs() > MAX_ITERATES || k_hi.unsigned_abs() > MAX_ITERATES {
        return Err(Error::ResourceLimit(format!(
            "iterate range {k_lo}..={k_hi} exceeds +-{MAX_ITERATES}"
        )));
    }
    Ok(())
}

fn phi_chain(
    spins: &SpinWindow,
    policy: SeedPolicy,
    k_lo: i64,
    k_hi: i64,
    probe: Option<(i64, i64)>,
) -> Result<PhiChain> {
    check_k_range(k_lo, k_hi)?;
    let len = if k_lo <= k_hi { (k_hi - k_lo + 1) as usize } else { 0 };
    let mut code = CodeWindow::new(k_lo, vec![None; len]);
    let mut rows = vec![ChainRow::default(); if probe.is_some() { len } else { 0 }];
    let slot = |k: i64| -> Option<usize> {
        (k >= k_lo && k <= k_hi).then(|| (k - k_lo) as usize)
    };
    let record = |rows: &mut Vec<ChainRow>, k: i64, row: ChainRow| {
        if let (Some(i), true) = (slot(k), probe.is_some()) {
            rows[i] = row;
        }
    };
    let probe_row = |iterate: &SpinWindow, queue: &dyn Fn(i64) -> Option<u64>| -> ChainRow {
        match probe {
            Some((lo, hi)) => ChainRow {
                spins: (lo..=hi).map(|n| iterate.get(n)).collect(),
                queues: (lo..=hi).map(queue).collect(),
            },
            None => ChainRow::default(),
        }
    };

    if k_hi >= 0 {
        let mut current = spins.clone();
        for k in 0..=k_hi {
            let r = transform_t(&current, policy);
            if let Some(i) = slot(k) {
                code.values[i] = r.queue.exact_at(0);
                let row = probe_row(&current, &|n| r.queue.exact_at(n));
                record(&mut rows, k, row);
            }
            if !r.is_certified() {
                break;
            }
            current = r.certified_output();
        }
    }
    if k_lo < 0 {
        let mut current = spins.clone();
        for k in (k_lo..0).rev() {
            let r = inverse_t(&current, policy);
            if !r.is_certified() {
                break;
            }
            let out = r.certified_output();
            if let Some(i) = slot(k) {
                code.values[i] = r.queue.exact_at(0);
                let row = probe_row(&out, &|n| r.queue.exact_at(n));
                record(&mut rows, k, row);
            }
            current = out;
        }
    }
    Ok(PhiChain { code, rows })
}

/// Encodes `spins` into `(phi omega)_k` for `k` in `k_lo ..= k_hi`.
///
/// Entries whose iterate loses certification are left as `None`.
pub fn encode_phi(spins: &SpinWindow, policy: SeedPolicy, k_lo: i64, k_hi: i64) -> Result<CodeWindow> {
    Ok(phi_chain(spins, policy, k_lo, k_hi, None)?.code)
}

/// Stage-B scan along one column: spin at iterate `k` is `(-1)^{m-k}` with
/// `m` the first zero at or after `k`.
fn scan_to_next_zero(column: &[Option<u64>]) -> Vec<Option<Spin>> {
    let mut out = vec![None; column.len()];
    let mut dist: Option<u64> = None;
    for k in (0..column.len()).rev() {
        dist = match column[k] {
            Some(0) => Some(0),
            Some(_) => dist.map(|d| d + 1),
            None => None,
        };
        out[k] = dist.map(Spin::parity);
    }
    out
}

/// Stage-C scan: spin at iterate `k` is `(-1)^{k-(j+1)}` with `j` the last
/// zero of the previous column strictly before `k`.
fn scan_from_last_zero(prev: &[Option<u64>]) -> Vec<Option<Spin>> {
    let mut out = vec![None; prev.len()];
    let mut since: Option<u64> = None;
    for k in 0..prev.len() {
        out[k] = since.map(Spin::parity);
        since = match prev[k] {
            Some(0) => Some(0),
            Some(_) => since.map(|d| d + 1),
            None => None,
        };
    }
    out
}

fn lindley_step(q: Option<u64>, s: Option<Spin>) -> Option<u64> {
    let (q, s) = (q?, s?);
    Some((q as i64 - s.value()).max(0) as u64)
}

/// Recovers `omega_0` at every iterate of the code window.
pub fn decode_coordinate0(code: &CodeWindow) -> Vec<Option<Spin>> {
    scan_to_next_zero(&code.values)
}

/// Spins `(T^k omega)_n` and queues `q_n(T^k omega)` recovered from a code.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecoveredField {
    pub n_origin: i64,
    pub k_origin: i64,
    /// Indexed `[n - n_origin][k - k_origin]`.
    pub spins: Vec<Vec<Option<Spin>>>,
    pub queues: Vec<Vec<Option<u64>>>,
}

impl RecoveredField {
    pub fn n_end(&self) -> i64 {
        self.n_origin + self.spins.len() as i64
    }

    pub fn k_len(&self) -> usize {
        self.spins.first().map_or(0, |c| c.len())
    }

    fn cell(&self, n: i64, k: i64) -> Option<(usize, usize)> {
        let i = n.checked_sub(self.n_origin)?;
        let j = k.checked_sub(self.k_origin)?;
        (i >= 0 && j >= 0 && (i as usize) < self.spins.len() && (j as usize) < self.k_len())
            .then_some((i as usize, j as usize))
    }

    pub fn spin(&self, n: i64, k: i64) -> Option<Spin> {
        self.cell(n, k).and_then(|(i, j)| self.spins[i][j])
    }

    pub fn queue(&self, n: i64, k: i64) -> Option<u64> {
        self.cell(n, k).and_then(|(i, j)| self.queues[i][j])
    }

    /// The decoded `omega` on the recovered coordinates.
    pub fn omega(&self) -> Vec<(i64, Option<Spin>)> {
        (self.n_origin..self.n_end()).map(|n| (n, self.spin(n, 0))).collect()
    }

    /// Cells where the forward recursion or the zero-forces-up rule fails.
    pub fn consistency_violations(&self) -> u64 {
        let mut bad = 0;
        for n in self.n_origin..self.n_end() {
            for j in 0..self.k_len() as i64 {
                let k = self.k_origin + j;
                let q = self.queue(n, k);
                if q == Some(0) && self.spin(n, k).is_some_and(|s| s != Spin::Up) {
                    bad += 1;
                }
                if let (Some(q), Some(next)) = (q, lindley_step(self.queue(n - 1, k), self.spin(n, k))) {
                    if q != next {
                        bad += 1;
                    }
                }
            }
        }
        bad
    }
}

/// Rebuilds the `(n, k)` field for `n` in `n_lo ..= n_hi` from the code.
pub fn decode_phi(code: &CodeWindow, n_lo: i64, n_hi: i64) -> Result<RecoveredField> {
    if n_lo > n_hi {
        return Err(Error::InvalidParams(format!("empty coordinate range {n_lo}..={n_hi}")));
    }
    if n_lo.unsigned_abs() > MAX_ITERATES || n_hi.unsigned_abs() > MAX_ITERATES {
        return Err(Error::ResourceLimit(format!(
            "coordinate range {n_lo}..={n_hi} exceeds +-{MAX_ITERATES}"
        )));
    }
    let width = (n_hi - n_lo + 1) as usize;
    let kl = code.len();
    let mut spins = vec![vec![None; kl]; width];
    let mut queues = vec![vec![None; kl]; width];
    let mut put = |n: i64, s: Vec<Option<Spin>>, q: Vec<Option<u64>>| {
        if n >= n_lo && n <= n_hi {
            spins[(n - n_lo) as usize] = s;
            queues[(n - n_lo) as usize] = q;
        }
    };

    // Stages A and B: n = 0, -1, -2, ...
    let mut q = code.values.clone();
    let mut n = 0;
    while n >= n_lo {
        let s = scan_to_next_zero(&q);
        let prev: Vec<Option<u64>> = (0..kl)
            .map(|k| lindley_step_back(q[k], s.get(k + 1).copied().flatten()))
            .collect();
        put(n, s, q);
        q = prev;
        n -= 1;
    }

    // Stage C: n = 1, 2, ...
    let mut prev = code.values.clone();
    for n in 1..=n_hi {
        let s = scan_from_last_zero(&prev);
        let cur: Vec<Option<u64>> = (0..kl).map(|k| lindley_step(prev[k], s[k])).collect();
        put(n, s, cur.clone());
        prev = cur;
    }

    Ok(RecoveredField {
        n_origin: n_lo,
        k_origin: code.k_origin,
        spins,
        queues,
    })
}

/// `q_{n-1} = max(q_n - sigma_n, 0)` with `sigma = T^{k+1} omega`.
fn lindley_step_back(q: Option<u64>, sigma: Option<Spin>) -> Option<u64> {
    lindley_step(q, sigma)
}

/// Sizes for the coding suites.
#[derive(Clone, Debug, PartialEq)]
pub struct CodingConfig {
    /// Iterates `-iterates ..= iterates` are encoded.
    pub iterates: u64,
    /// Coordinates `-coords ..= coords` are decoded.
    pub coords: u64,
    pub trials: usize,
    pub cap: u64,
    /// Margin on each side of the coordinate span; derived from the model
    /// when `None`.
    pub margin: Option<usize>,
}

impl Default for CodingConfig {
    fn default() -> Self {
        CodingConfig {
            iterates: 64,
            coords: 8,
            trials: 1000,
            cap: DEFAULT_SEED_CAP,
            margin: None,
        }
    }
}

impl CodingConfig {
    pub fn margin(&self, params: &ModelParams) -> usize {
        self.margin
            .unwrap_or_else(|| window_margin(params, self.iterates, self.coords as usize, self.cap))
    }
}

const TAG_CODING: u64 = 0x10;
const SHIFT_TRIALS: u64 = 100;

#[derive(Default)]
struct CodingTrial {
    code: Vec<Option<u64>>,
    /// Per coordinate at `k = 0`: (decoded, truth known, mismatch).
    coords: Vec<(bool, bool, bool)>,
    cells_checked: u64,
    cell_mismatches: u64,
    queue_mismatches: u64,
    unverifiable: u64,
    consistency: u64,
    shift_checked: u64,
    shift_mismatches: u64,
}

fn coding_trial(
    params: &ModelParams,
    cfg: &CodingConfig,
    root_seed: u64,
    i: u64,
    decode: bool,
) -> Result<CodingTrial> {
    let mut rng = derive_stream(root_seed, stream_id(TAG_CODING, i));
    let margin = cfg.margin(params) as i64;
    let omega = SpinWindow::sample(params, -margin, (2 * margin + 1) as usize, &mut rng);
    let policy = SeedPolicy::Coupled { cap: cfg.cap };
    let k = cfg.iterates as i64;
    let c = cfg.coords as i64;
    let chain = phi_chain(&omega, policy, -k, k, decode.then_some((-c, c)))?;
    let mut out = CodingTrial {
        code: chain.code.values.clone(),
        ..Default::default()
    };

    if decode {
        let field = decode_phi(&chain.code, -c, c)?;
        out.consistency = field.consistency_violations();
        for (j, row) in chain.rows.iter().enumerate() {
            let kk = -k + j as i64;
            for (ni, n) in (-c..=c).enumerate() {
                let truth = row.spins.get(ni).copied().flatten();
                match (field.spin(n, kk), truth) {
                    (Some(d), Some(t)) => {
                        out.cells_checked += 1;
                        out.cell_mismatches += u64::from(d != t);
                    }
                    (Some(_), None) => out.unverifiable += 1,
                    _ => {}
                }
                if let (Some(d), Some(t)) = (field.queue(n, kk), row.queues.get(ni).copied().flatten()) {
                    out.queue_mismatches += u64::from(d != t);
                }
            }
        }
        let row0 = &chain.rows[k as usize];
        for (ni, n) in (-c..=c).enumerate() {
            let d = field.spin(n, 0);
            let t = row0.spins[ni];
            out.coords.push((d.is_some(), t.is_some(), matches!((d, t), (Some(a), Some(b)) if a != b)));
        }
    }

    if i < SHIFT_TRIALS {
        let shifted = transform_t(&omega, policy).certified_output();
        let code_t = encode_phi(&shifted, policy, -k, k - 1)?;
        for kk in -k..k {
            if let (Some(a), Some(b)) = (code_t.get(kk), chain.code.get(kk + 1)) {
                out.shift_checked += 1;
                out.shift_mismatches += u64::from(a != b);
            }
        }
    }
    Ok(out)
}

fn code_law_tests(params: &ModelParams, trials: &[CodingTrial], out: &mut SuiteOutcome) -> Result<()> {
    let entries: Vec<u64> = trials.iter().flat_map(|t| t.code.iter().flatten().copied()).collect();
    let total: u64 = trials.iter().map(|t| t.code.len() as u64).sum();
    out.certification
        .push(CertificationStat::new("coding.phi_entries", entries.len() as u64, total));
    if entries.is_empty() {
        return Ok(());
    }
    let top = *entries.iter().max().expect("nonempty") as usize + 1;
    let mut counts = vec![0u64; top + 1];
    for e in &entries {
        counts[*e as usize] += 1;
    }
    let mut probs: Vec<f64> = (0..top as u64).map(|x| params.geometric_pmf(x)).collect();
    probs.push(params.rho().powi(top as i32));
    out.series.push(LawSeries::from_counts("coding.phi", &counts, &probs));
    out.tests.push(chi_square_gof(
        "coding.phi_geometric",
        &counts,
        &probs,
        Pooling::MinExpected,
    )?);

    let pairs: Vec<(u64, u64)> = trials
        .iter()
        .flat_map(|t| {
            t.code
                .chunks_exact(2)
                .filter_map(|w| w[0].zip(w[1]))
                .collect::<Vec<_>>()
        })
        .collect();
    let ind = independence_test("coding.phi_lag1", &pairs)?;
    out.tests.push(ind.g_test);

    let checked: u64 = trials.iter().map(|t| t.shift_checked).sum();
    out.tests.push(TestReport::within(
        "coding.shift_equivariance_mismatches",
        trials.iter().map(|t| t.shift_mismatches).sum::<u64>() as f64,
        0.0,
        checked,
    ));
    Ok(())
}

fn run_trials(
    params: &ModelParams,
    cfg: &CodingConfig,
    root_seed: u64,
    decode: bool,
) -> Result<Vec<CodingTrial>> {
    (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| coding_trial(params, cfg, root_seed, i, decode))
        .collect()
}

/// Encodes random stationary windows and tests the law of the code.
pub fn encode_suite(params: &ModelParams, cfg: &CodingConfig, root_seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    if cfg.trials == 0 {
        return Ok(out);
    }
    let trials = run_trials(params, cfg, root_seed, false)?;
    code_law_tests(params, &trials, &mut out)?;
    Ok(out)
}

/// Encodes and decodes random stationary windows, checking every recovered
/// cell against the true iterates.
pub fn roundtrip_report(params: &ModelParams, cfg: &CodingConfig, root_seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    if cfg.trials == 0 {
        return Ok(out);
    }
    let trials = run_trials(params, cfg, root_seed, true)?;
    let c = cfg.coords as i64;
    let mut coord_mismatches = 0u64;
    for (ni, n) in (-c..=c).enumerate() {
        let decoded = trials.iter().filter(|t| t.coords[ni].0).count() as u64;
        coord_mismatches += trials.iter().filter(|t| t.coords[ni].2).count() as u64;
        out.certification.push(CertificationStat::new(
            format!("roundtrip.coordinate[{n}]"),
            decoded,
            trials.len() as u64,
        ));
    }
    let decoded: u64 = trials.iter().map(|t| t.coords.iter().filter(|c| c.0).count() as u64).sum();
    out.tests.push(TestReport::within(
        "roundtrip.omega_mismatches",
        coord_mismatches as f64,
        0.0,
        decoded,
    ));
    let cells: u64 = trials.iter().map(|t| t.cells_checked).sum();
    out.tests.push(TestReport::within(
        "roundtrip.cell_mismatches",
        trials.iter().map(|t| t.cell_mismatches).sum::<u64>() as f64,
        0.0,
        cells,
    ));
    out.tests.push(TestReport::within(
        "roundtrip.queue_mismatches",
        trials.iter().map(|t| t.queue_mismatches).sum::<u64>() as f64,
        0.0,
        cells,
    ));
    out.tests.push(TestReport::within(
        "roundtrip.unverifiable_cells",
        trials.iter().map(|t| t.unverifiable).sum::<u64>() as f64,
        0.0,
        cells,
    ));
    out.tests.push(TestReport::within(
        "roundtrip.consistency_violations",
        trials.iter().map(|t| t.consistency).sum::<u64>() as f64,
        0.0,
        cells,
    ));
    code_law_tests(params, &trials, &mut out)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::walk::forward_lindley;
    use proptest::prelude::*;

    fn w(origin: i64, v: &[i64]) -> SpinWindow {
        SpinWindow::from_values(origin, v).unwrap()
    }

    #[test]
    fn decode_coordinate0_examples() {
        let d = decode_coordinate0(&CodeWindow::known(0, &[2, 1, 0]));
        assert_eq!(d, vec![Some(Spin::Up), Some(Spin::Down), Some(Spin::Up)]);
        assert_eq!(decode_coordinate0(&CodeWindow::known(0, &[0, 3]))[0], Some(Spin::Up));
        assert_eq!(decode_coordinate0(&CodeWindow::known(0, &[1, 0]))[0], Some(Spin::Down));
        assert_eq!(decode_coordinate0(&CodeWindow::known(0, &[1, 2])), vec![None, None]);
        let gap = CodeWindow::new(0, vec![Some(1), None, Some(0)]);
        assert_eq!(decode_coordinate0(&gap), vec![None, None, Some(Spin::Up)]);
    }

    #[test]
    fn all_plus_encodes_to_zeros_and_decodes_back() {
        let omega = w(-10, &[1; 21]);
        let code = encode_phi(&omega, SeedPolicy::Exact(0), -5, 5).unwrap();
        assert_eq!(code.values, vec![Some(0); 11]);
        let field = decode_phi(&code, -3, 3).unwrap();
        for n in -3..=3 {
            assert_eq!(field.spin(n, 0), Some(Spin::Up));
            for k in -5..=5 {
                assert!(field.spin(n, k).is_none_or(|s| s == Spin::Up), "n {n} k {k}");
            }
        }
    }

    #[test]
    fn k0_entry_is_forward_queue_at_origin() {
        let omega = w(-3, &[-1, -1, 1, -1, 1]);
        for seed in 0..6 {
            let code = encode_phi(&omega, SeedPolicy::Exact(seed), 0, 0).unwrap();
            assert_eq!(code.get(0), forward_lindley(seed, &omega).at(0));
        }
    }

    #[test]
    fn recovered_queue_at_zero_is_the_code() {
        let code = CodeWindow::known(-2, &[3, 0, 1, 0, 2, 1, 0]);
        let field = decode_phi(&code, -2, 2).unwrap();
        for (j, v) in code.values.iter().enumerate() {
            assert_eq!(field.queue(0, -2 + j as i64), *v);
        }
    }

    #[test]
    fn empty_ranges() {
        let omega = w(0, &[1, -1]);
        assert!(encode_phi(&omega, SeedPolicy::Exact(0), 3, 2).unwrap().is_empty());
        assert!(decode_phi(&CodeWindow::known(0, &[0]), 1, 0).is_err());
        assert!(matches!(
            encode_phi(&omega, SeedPolicy::Exact(0), 0, 1 << 20),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn lost_certification_is_flagged_per_entry() {
        let omega = w(-4, &[-1; 9]);
        let code = encode_phi(&omega, SeedPolicy::Coupled { cap: 50 }, -2, 2).unwrap();
        assert!(code.values.iter().all(|v| v.is_none()));
    }

    #[test]
    fn shift_matches_encoding_of_t() {
        let p = ModelParams::default();
        let mut rng = derive_stream(21, 0);
        let omega = SpinWindow::sample(&p, -3000, 6001, &mut rng);
        let policy = SeedPolicy::default();
        let code = encode_phi(&omega, policy, -10, 10).unwrap();
        let t = transform_t(&omega, policy).certified_output();
        let code_t = encode_phi(&t, policy, -10, 9).unwrap();
        let shifted = code.shifted();
        let mut checked = 0;
        for k in -10..=9 {
            if let (Some(a), Some(b)) = (code_t.get(k), shifted.get(k)) {
                assert_eq!(a, b);
                checked += 1;
            }
        }
        assert!(checked >= 15);
    }

    fn roundtrip_exact(omega: &SpinWindow, seed: u64, k: i64, c: i64) {
        // with an exact seed every iterate is exact on the whole window
        let chain = phi_chain(omega, SeedPolicy::Exact(seed), -k, k, Some((-c, c))).unwrap();
        let field = decode_phi(&chain.code, -c, c).unwrap();
        assert_eq!(field.consistency_violations(), 0);
        for (j, row) in chain.rows.iter().enumerate() {
            for (ni, n) in (-c..=c).enumerate() {
                if let (Some(d), Some(t)) = (field.spin(n, -k + j as i64), row.spins[ni]) {
                    assert_eq!(d, t, "n {n} k {}", -k + j as i64);
                }
                if let (Some(d), Some(t)) = (field.queue(n, -k + j as i64), row.queues[ni]) {
                    assert_eq!(d, t);
                }
            }
        }
    }

    proptest! {
        #[test]
        fn decoder_agrees_with_iterates(
            v in prop::collection::vec(prop::bool::weighted(0.7), 60..120),
            seed in 0u64..6,
        ) {
            let omega = SpinWindow::new(-(v.len() as i64) / 2,
                v.into_iter().map(|b| if b { Spin::Up } else { Spin::Down }).collect());
            roundtrip_exact(&omega, seed, 12, 4);
        }
    }

    #[test]
    fn decoded_spins_are_usually_known_near_origin() {
        let p = ModelParams::default();
        let cfg = CodingConfig {
            iterates: 16,
            coords: 4,
            trials: 40,
            ..Default::default()
        };
        let out = roundtrip_report(&p, &cfg, 5).unwrap();
        for t in &out.tests {
            assert!(t.pass, "{t:?}");
        }
        let c0 = out.certification.iter().find(|c| c.name == "roundtrip.coordinate[0]").unwrap();
        assert!(c0.rate > 0.9, "{c0:?}");
    }

    #[test]
    fn zero_trials_give_empty_reports() {
        let cfg = CodingConfig { trials: 0, ..Default::default() };
        let p = ModelParams::default();
        assert!(roundtrip_report(&p, &cfg, 0).unwrap().tests.is_empty());
        assert!(encode_suite(&p, &cfg, 0).unwrap().tests.is_empty());
    }
}
