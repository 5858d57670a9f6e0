//! Iterated random functions run backward: the stationary chain
//! `z_n = f_{theta_{n+1}}(z_{n+1})`, its reconstruction parameters
//! `eta_n = F(z_{n-1}, z_n)`, and checks that `eta` is again an i.i.d. `kappa`
//! sequence independent of `z_0`.

use std::fmt::Debug;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::stats::{
    chi_square_gof, correlation_test, derive_stream, independence_test, rng::stream_id, Pooling,
    RngStream, SuiteOutcome, TestReport, ALPHA,
};
use crate::walk::Spin;

/// How coalescence is detected for a family.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Coupling<S> {
    /// `apply` is monotone in the state; tracking these two suffices.
    Monotone { bottom: S, top: S },
    /// Track the image of every state.
    Finite(Vec<S>),
}

/// A family `{f_theta}` with parameter law `kappa` and inverse
/// `F(r, f_theta(r)) = theta`.
pub trait IrfFamily: Sync {
    type State: Copy + Eq + Ord + Debug + Send + Sync;
    type Param: Copy + Eq + Debug + Send + Sync;

    fn name(&self) -> &str;
    fn apply(&self, theta: Self::Param, s: Self::State) -> Self::State;
    /// `None` when no parameter maps `r` to `s`.
    fn recover(&self, r: Self::State, s: Self::State) -> Option<Self::Param>;
    /// Parameters with their probabilities, in index order.
    fn kappa(&self) -> &[(Self::Param, f64)];
    fn coupling(&self) -> Coupling<Self::State>;
    fn state_code(&self, s: Self::State) -> u64;

    fn param_index(&self, theta: Self::Param) -> usize {
        self.kappa().iter().position(|(t, _)| *t == theta).expect("parameter in support")
    }

    /// Numeric value used for correlation statistics.
    fn param_value(&self, theta: Self::Param) -> f64 {
        self.param_index(theta) as f64
    }

    fn sample_param(&self, rng: &mut RngStream) -> Self::Param {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (t, w) in self.kappa() {
            acc += w;
            if u < acc {
                return *t;
            }
        }
        self.kappa().last().expect("nonempty kappa").0
    }

    /// All states, for finite families.
    fn states(&self) -> Option<Vec<Self::State>> {
        match self.coupling() {
            Coupling::Finite(s) => Some(s),
            Coupling::Monotone { .. } => None,
        }
    }

    /// Reference stationary law over state codes `0..len`, if known.
    fn stationary_law(&self) -> Option<Vec<f64>> {
        None
    }
}

/// `theta = -omega`: a `-1` spin raises the queue, as does `theta = +1`.
pub fn theta_from_spin(s: Spin) -> i64 {
    -s.value()
}

pub fn spin_from_theta(theta: i64) -> Result<Spin> {
    Spin::from_value(-theta)
}

/// `f_theta(x) = max(x + theta, 0)` with `kappa{+1} = q`.
///
/// The state space is unbounded, so monotone coupling starts from `cap`
/// instead of a true top; the probability that the stationary state exceeds
/// the cap is [`Mm1Map::truncation_tail`].
#[derive(Clone, Debug)]
pub struct Mm1Map {
    q: f64,
    cap: u64,
    kappa: [(i64, f64); 2],
}

impl Mm1Map {
    pub fn new(q: f64, cap: u64) -> Result<Self> {
        if !(q > 0.0 && q < 0.5) {
            return Err(Error::InvalidParams(format!("need 0 < q < 1/2, got {q}")));
        }
        Ok(Mm1Map { q, cap, kappa: [(-1, 1.0 - q), (1, q)] })
    }

    pub fn ratio(&self) -> f64 {
        self.q / (1.0 - self.q)
    }

    pub fn truncation_tail(&self) -> f64 {
        self.ratio().powi(self.cap as i32 + 1)
    }
}

impl IrfFamily for Mm1Map {
    type State = u64;
    type Param = i64;

    fn name(&self) -> &str {
        "mm1_map"
    }
    fn apply(&self, theta: i64, s: u64) -> u64 {
        (s as i64 + theta).max(0) as u64
    }
    fn recover(&self, r: u64, s: u64) -> Option<i64> {
        if s == r + 1 {
            Some(1)
        } else if s + 1 == r || (r == 0 && s == 0) {
            Some(-1)
        } else {
            None
        }
    }
    fn kappa(&self) -> &[(i64, f64)] {
        &self.kappa
    }
    fn coupling(&self) -> Coupling<u64> {
        Coupling::Monotone { bottom: 0, top: self.cap }
    }
    fn state_code(&self, s: u64) -> u64 {
        s
    }
    fn param_value(&self, theta: i64) -> f64 {
        theta as f64
    }
    fn stationary_law(&self) -> Option<Vec<f64>> {
        let r = self.ratio();
        Some((0..=self.cap as i32).map(|x| (1.0 - r) * r.powi(x)).collect())
    }
}

/// `f_theta(x) = clamp(x + theta, 0, top)` with `theta = +-1`.
#[derive(Clone, Debug)]
pub struct BirthDeath {
    top: u64,
    kappa: [(i64, f64); 2],
}

impl BirthDeath {
    pub fn new(top: u64, up: f64) -> Result<Self> {
        if top == 0 || !(up > 0.0 && up < 1.0) {
            return Err(Error::InvalidParams(format!("need top >= 1 and 0 < up < 1, got {top}, {up}")));
        }
        Ok(BirthDeath { top, kappa: [(-1, 1.0 - up), (1, up)] })
    }
}

impl Default for BirthDeath {
    fn default() -> Self {
        BirthDeath::new(5, 0.5).expect("valid")
    }
}

impl IrfFamily for BirthDeath {
    type State = u64;
    type Param = i64;

    fn name(&self) -> &str {
        "birth_death"
    }
    fn apply(&self, theta: i64, s: u64) -> u64 {
        (s as i64 + theta).clamp(0, self.top as i64) as u64
    }
    fn recover(&self, r: u64, s: u64) -> Option<i64> {
        if s == r + 1 || (r == self.top && s == self.top) {
            Some(1)
        } else if s + 1 == r || (r == 0 && s == 0) {
            Some(-1)
        } else {
            None
        }
    }
    fn kappa(&self) -> &[(i64, f64)] {
        &self.kappa
    }
    fn coupling(&self) -> Coupling<u64> {
        Coupling::Monotone { bottom: 0, top: self.top }
    }
    fn state_code(&self, s: u64) -> u64 {
        s
    }
    fn param_value(&self, theta: i64) -> f64 {
        theta as f64
    }
    fn states(&self) -> Option<Vec<u64>> {
        Some((0..=self.top).collect())
    }
    fn stationary_law(&self) -> Option<Vec<f64>> {
        stationary_distribution(self)
    }
}

/// A non-reversible family on three states: each `f_theta` is a table and the
/// inverse is well defined, but the chain cycles.
#[derive(Clone, Debug)]
pub struct LatinCycle {
    table: [[u64; 3]; 3],
    kappa: [(usize, f64); 3],
}

impl Default for LatinCycle {
    fn default() -> Self {
        LatinCycle {
            table: [[1, 2, 0], [0, 0, 1], [2, 1, 2]],
            kappa: [(0, 0.6), (1, 0.2), (2, 0.2)],
        }
    }
}

impl IrfFamily for LatinCycle {
    type State = u64;
    type Param = usize;

    fn name(&self) -> &str {
        "latin_cycle"
    }
    fn apply(&self, theta: usize, s: u64) -> u64 {
        self.table[theta][s as usize]
    }
    fn recover(&self, r: u64, s: u64) -> Option<usize> {
        (0..3).find(|t| self.table[*t][r as usize] == s)
    }
    fn kappa(&self) -> &[(usize, f64)] {
        &self.kappa
    }
    fn coupling(&self) -> Coupling<u64> {
        Coupling::Finite(vec![0, 1, 2])
    }
    fn state_code(&self, s: u64) -> u64 {
        s
    }
    fn stationary_law(&self) -> Option<Vec<f64>> {
        stationary_distribution(self)
    }
}

/// Transition matrix over `family.states()`.
pub fn transition_matrix<F: IrfFamily>(family: &F) -> Option<Vec<Vec<f64>>> {
    let states = family.states()?;
    let idx = |s: F::State| states.iter().position(|x| *x == s).expect("closed state set");
    let mut p = vec![vec![0.0; states.len()]; states.len()];
    for (i, s) in states.iter().enumerate() {
        for (t, w) in family.kappa() {
            p[i][idx(family.apply(*t, *s))] += w;
        }
    }
    Some(p)
}

/// Stationary law of a finite family by iterating the lazy chain.
pub fn stationary_distribution<F: IrfFamily>(family: &F) -> Option<Vec<f64>> {
    let p = transition_matrix(family)?;
    let n = p.len();
    let mut pi = vec![1.0 / n as f64; n];
    for _ in 0..100_000 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            next[i] += 0.5 * pi[i];
            for j in 0..n {
                next[j] += 0.5 * pi[i] * p[i][j];
            }
        }
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-15 {
            break;
        }
    }
    Some(pi)
}

/// `max |pi_x P_xy - pi_y P_yx|`; zero for reversible chains.
pub fn detailed_balance_defect<F: IrfFamily>(family: &F) -> Option<f64> {
    let p = transition_matrix(family)?;
    let pi = stationary_distribution(family)?;
    let n = p.len();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((pi[i] * p[i][j] - pi[j] * p[j][i]).abs());
        }
    }
    Some(worst)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CftpPolicy {
    pub initial_depth: usize,
    pub max_depth: usize,
}

impl Default for CftpPolicy {
    fn default() -> Self {
        CftpPolicy { initial_depth: 16, max_depth: 1 << 20 }
    }
}

/// Coupling from the past: extends the parameter draws into the past,
/// doubling the depth and reusing earlier draws, until all starting states
/// give the same `u_m = f_{theta_1} o ... o f_{theta_m}(s)`.
pub fn backward_sample_z<F: IrfFamily>(
    family: &F,
    rng: &mut RngStream,
    policy: CftpPolicy,
) -> Result<F::State> {
    let starts = match family.coupling() {
        Coupling::Monotone { bottom, top } => vec![bottom, top],
        Coupling::Finite(s) => s,
    };
    let mut thetas: Vec<F::Param> = Vec::new();
    let mut depth = policy.initial_depth.max(1);
    loop {
        while thetas.len() < depth {
            thetas.push(family.sample_param(rng));
        }
        let mut ends = starts.iter().map(|s| thetas.iter().rev().fold(*s, |x, t| family.apply(*t, x)));
        let first = ends.next().expect("at least one start");
        if ends.all(|e| e == first) {
            return Ok(first);
        }
        if depth >= policy.max_depth {
            return Err(Error::NoCoalescence { depth });
        }
        depth = (depth * 2).min(policy.max_depth);
    }
}

/// States `z_0 ..= z_m` driven by `theta_1 ..= theta_m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZPath<S> {
    pub states: Vec<S>,
}

/// Samples `z_m` from the stationary law using fresh draws beyond the window,
/// then fills `z_n = f_{theta_{n+1}}(z_{n+1})` leftward.
pub fn z_path<F: IrfFamily>(
    family: &F,
    thetas: &[F::Param],
    rng: &mut RngStream,
    policy: CftpPolicy,
) -> Result<ZPath<F::State>> {
    let mut states = vec![backward_sample_z(family, rng, policy)?; thetas.len() + 1];
    for n in (0..thetas.len()).rev() {
        states[n] = family.apply(thetas[n], states[n + 1]);
    }
    Ok(ZPath { states })
}

/// `eta_1 ..= eta_m` with `eta_n = F(z_{n-1}, z_n)`.
pub fn eta_sequence<F: IrfFamily>(family: &F, path: &ZPath<F::State>) -> Result<Vec<F::Param>> {
    path.states
        .windows(2)
        .map(|w| {
            let eta = family.recover(w[0], w[1]).ok_or_else(|| Error::UnrealizablePair {
                from: format!("{:?}", w[0]),
                to: format!("{:?}", w[1]),
            })?;
            if family.apply(eta, w[0]) != w[1] {
                return Err(Error::UnrealizablePair {
                    from: format!("{:?}", w[0]),
                    to: format!("{:?}", w[1]),
                });
            }
            Ok(eta)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct IrfCheckConfig {
    pub samples: usize,
    /// Length of the `eta` block tested against `z_0`.
    pub block: usize,
    pub policy: CftpPolicy,
}

impl Default for IrfCheckConfig {
    fn default() -> Self {
        IrfCheckConfig { samples: 1_000_000, block: 8, policy: CftpPolicy::default() }
    }
}

struct Draw {
    z0: u64,
    etas: Vec<usize>,
    eta_sum: f64,
}

/// Tests that `eta` has law `kappa` and that `(eta_1 ..= eta_block)` is
/// independent of `z_0`. Test names are prefixed with the family name.
pub fn reversal_check<F: IrfFamily>(
    family: &F,
    cfg: &IrfCheckConfig,
    root_seed: u64,
    suite_tag: u64,
) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    if cfg.samples == 0 {
        return Ok(out);
    }
    let name = family.name();
    let draws: Vec<Draw> = (0..cfg.samples as u64)
        .into_par_iter()
        .map(|i| -> Result<Draw> {
            let mut rng = derive_stream(root_seed, stream_id(suite_tag, i));
            let thetas: Vec<F::Param> = (0..cfg.block).map(|_| family.sample_param(&mut rng)).collect();
            let path = z_path(family, &thetas, &mut rng, cfg.policy)?;
            let etas = eta_sequence(family, &path)?;
            Ok(Draw {
                z0: family.state_code(path.states[0]),
                eta_sum: etas.iter().map(|e| family.param_value(*e)).sum(),
                etas: etas.iter().map(|e| family.param_index(*e)).collect(),
            })
        })
        .collect::<Result<_>>()?;
    let k = family.kappa().len();
    let probs: Vec<f64> = family.kappa().iter().map(|(_, w)| *w).collect();
    let n = draws.len() as f64;

    if cfg.block > 0 {
        let mut pooled = vec![0u64; k];
        let mut first = vec![0u64; k];
        for d in &draws {
            first[d.etas[0]] += 1;
            for e in &d.etas {
                pooled[*e] += 1;
            }
        }
        out.tests.push(chi_square_gof(format!("{name}.eta_law").as_str(), &pooled, &probs, Pooling::None)?);
        let worst = first
            .iter()
            .zip(&probs)
            .map(|(c, p)| ((*c as f64 - n * p) / (n * p * (1.0 - p)).sqrt()).abs())
            .fold(0.0, f64::max);
        out.tests.push(TestReport::within(format!("{name}.eta1_cells_max_zscore"), worst, 3.0, draws.len() as u64));

        let base = k as u64;
        let pairs: Vec<(u64, u64)> = draws
            .iter()
            .map(|d| (d.z0, d.etas.iter().fold(0u64, |acc, e| acc * base + *e as u64)))
            .collect();
        let ind = independence_test(&format!("{name}.z0_vs_eta_block"), &pairs)?;
        out.tests.push(ind.g_test);
        let z: Vec<f64> = draws.iter().map(|d| d.z0 as f64).collect();
        let s: Vec<f64> = draws.iter().map(|d| d.eta_sum).collect();
        out.tests.push(correlation_test(&format!("{name}.z0_vs_eta_sum"), &z, &s));
    }

    if let Some(law) = family.stationary_law() {
        let top = law.len();
        let mut counts = vec![0u64; top + 1];
        for d in &draws {
            counts[(d.z0 as usize).min(top)] += 1;
        }
        let mut probs = law.clone();
        probs.push((1.0 - law.iter().sum::<f64>()).max(0.0));
        let s: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= s);
        out.tests.push(chi_square_gof(
            format!("{name}.z0_stationary_law").as_str(),
            &counts,
            &probs,
            Pooling::MinExpected,
        )?);
    }
    Ok(out)
}

const TAG_IRF: u64 = 0x40;

/// Both reversible families, plus the non-reversible control whose `eta` law
/// must be rejected.
pub fn irf_suite(q: f64, cap: u64, cfg: &IrfCheckConfig, root_seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::default();
    let mm1 = Mm1Map::new(q, cap)?;
    let mut part = reversal_check(&mm1, cfg, root_seed, TAG_IRF)?;
    if let Some(t) = part.tests.first_mut() {
        *t = t.clone().param("truncation_tail", mm1.truncation_tail());
    }
    out.extend(part);
    out.extend(reversal_check(&BirthDeath::default(), cfg, root_seed, TAG_IRF + 1)?);
    let bd_defect = detailed_balance_defect(&BirthDeath::default()).expect("finite");
    out.tests.push(TestReport::within("birth_death.detailed_balance_defect", bd_defect, 1e-12, 0));

    let control = reversal_check(&LatinCycle::default(), cfg, root_seed, TAG_IRF + 2)?;
    if let Some(t) = control.find("latin_cycle.eta_law") {
        let rejected = t.p_value.is_some_and(|p| p <= ALPHA);
        out.tests.push(
            TestReport::flag("latin_cycle.eta_law_rejected", t.statistic, rejected, t.n)
                .param("p_value", t.p_value.unwrap_or(f64::NAN)),
        );
    }
    let defect = detailed_balance_defect(&LatinCycle::default()).expect("finite");
    out.tests.push(TestReport::flag("latin_cycle.detailed_balance_violated", defect, defect > 1e-6, 0));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Constant;

    impl IrfFamily for Constant {
        type State = u64;
        type Param = i64;
        fn name(&self) -> &str {
            "constant"
        }
        fn apply(&self, _: i64, _: u64) -> u64 {
            3
        }
        fn recover(&self, _: u64, s: u64) -> Option<i64> {
            (s == 3).then_some(0)
        }
        fn kappa(&self) -> &[(i64, f64)] {
            &[(0, 1.0)]
        }
        fn coupling(&self) -> Coupling<u64> {
            Coupling::Finite(vec![0, 1, 2, 3])
        }
        fn state_code(&self, s: u64) -> u64 {
            s
        }
    }

    fn mm1() -> Mm1Map {
        Mm1Map::new(1.0 / 3.0, 40).unwrap()
    }

    #[test]
    fn mm1_recover_examples() {
        let f = mm1();
        assert_eq!(f.recover(0, 1), Some(1));
        assert_eq!(f.recover(0, 0), Some(-1));
        assert_eq!(f.recover(5, 4), Some(-1));
        assert_eq!(f.recover(5, 7), None);
    }

    #[test]
    fn birth_death_boundary() {
        let f = BirthDeath::default();
        assert_eq!(f.apply(1, 5), 5);
        assert_eq!(f.apply(-1, 5), 4);
        assert_eq!(f.recover(5, 5), Some(1));
        assert_eq!(f.recover(0, 0), Some(-1));
    }

    #[test]
    fn recover_inverts_apply() {
        for s in 0..50 {
            for t in [-1, 1] {
                assert_eq!(mm1().recover(s, mm1().apply(t, s)), Some(t));
            }
        }
        let bd = BirthDeath::default();
        for s in 0..=5 {
            for t in [-1, 1] {
                assert_eq!(bd.recover(s, bd.apply(t, s)), Some(t));
            }
        }
        let lc = LatinCycle::default();
        for s in 0..3 {
            for t in 0..3 {
                assert_eq!(lc.recover(s, lc.apply(t, s)), Some(t));
            }
        }
    }

    #[test]
    fn spin_conversion() {
        assert_eq!(theta_from_spin(Spin::Down), 1);
        assert_eq!(theta_from_spin(Spin::Up), -1);
        assert_eq!(spin_from_theta(1).unwrap(), Spin::Down);
        assert!(spin_from_theta(0).is_err());
        // a -1 spin raises the walk queue exactly as theta = +1 raises the map
        let f = mm1();
        for x in 0..5u64 {
            for s in [Spin::Up, Spin::Down] {
                assert_eq!(f.apply(theta_from_spin(s), x), (x as i64 - s.value()).max(0) as u64);
            }
        }
    }

    #[test]
    fn constant_family() {
        let mut rng = derive_stream(0, 0);
        let policy = CftpPolicy { initial_depth: 1, max_depth: 4 };
        assert_eq!(backward_sample_z(&Constant, &mut rng, policy).unwrap(), 3);
        let path = z_path(&Constant, &[0, 0], &mut rng, policy).unwrap();
        assert_eq!(eta_sequence(&Constant, &path).unwrap(), vec![0, 0]);
        let seed_only = z_path(&Constant, &[], &mut rng, policy).unwrap();
        assert_eq!(seed_only.states, vec![3]);
    }

    #[test]
    fn no_coalescence_is_reported() {
        // the identity map never merges distinct states
        struct Identity;
        impl IrfFamily for Identity {
            type State = u64;
            type Param = i64;
            fn name(&self) -> &str {
                "identity"
            }
            fn apply(&self, _: i64, s: u64) -> u64 {
                s
            }
            fn recover(&self, r: u64, s: u64) -> Option<i64> {
                (r == s).then_some(0)
            }
            fn kappa(&self) -> &[(i64, f64)] {
                &[(0, 1.0)]
            }
            fn coupling(&self) -> Coupling<u64> {
                Coupling::Finite(vec![0, 1])
            }
            fn state_code(&self, s: u64) -> u64 {
                s
            }
        }
        let mut rng = derive_stream(0, 0);
        let e = backward_sample_z(&Identity, &mut rng, CftpPolicy { initial_depth: 2, max_depth: 64 });
        assert_eq!(e, Err(Error::NoCoalescence { depth: 64 }));
    }

    #[test]
    fn z_path_recursion_and_eta_reconstruction() {
        let f = mm1();
        let mut rng = derive_stream(1, 0);
        for _ in 0..200 {
            let thetas: Vec<i64> = (0..20).map(|_| f.sample_param(&mut rng)).collect();
            let path = z_path(&f, &thetas, &mut rng, CftpPolicy::default()).unwrap();
            for (n, t) in thetas.iter().enumerate() {
                assert_eq!(path.states[n], f.apply(*t, path.states[n + 1]));
            }
            let etas = eta_sequence(&f, &path).unwrap();
            for n in 1..=20 {
                assert_eq!(f.apply(etas[n - 1], path.states[n - 1]), path.states[n]);
            }
        }
    }

    #[test]
    fn unrealizable_pair_is_an_error() {
        let path = ZPath { states: vec![0u64, 5] };
        assert!(matches!(eta_sequence(&mm1(), &path), Err(Error::UnrealizablePair { .. })));
    }

    #[test]
    fn mm1_stationary_mean() {
        // geometric with ratio 1/2 has mean 1
        let f = mm1();
        let n = 20_000;
        let s: u64 = (0..n)
            .map(|i| backward_sample_z(&f, &mut derive_stream(2, i), CftpPolicy::default()).unwrap())
            .sum();
        let mean = s as f64 / n as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
    }

    #[test]
    fn birth_death_stationary_is_uniform() {
        let pi = stationary_distribution(&BirthDeath::default()).unwrap();
        for v in &pi {
            assert!((v - 1.0 / 6.0).abs() < 1e-10);
        }
        assert!(detailed_balance_defect(&BirthDeath::default()).unwrap() < 1e-12);
    }

    #[test]
    fn latin_cycle_is_not_reversible() {
        let pi = stationary_distribution(&LatinCycle::default()).unwrap();
        for v in &pi {
            assert!((v - 1.0 / 3.0).abs() < 1e-10);
        }
        assert!(detailed_balance_defect(&LatinCycle::default()).unwrap() > 0.05);
    }

    #[test]
    fn eta_block_matches_sign_mapped_spin_law() {
        // eta for the reflected walk is Bernoulli; map to spins via omega = -theta
        let f = mm1();
        let n = 20_000u64;
        let mut counts = vec![0u64; 16];
        for i in 0..n {
            let mut rng = derive_stream(3, i);
            let thetas: Vec<i64> = (0..4).map(|_| f.sample_param(&mut rng)).collect();
            let path = z_path(&f, &thetas, &mut rng, CftpPolicy::default()).unwrap();
            let code = eta_sequence(&f, &path)
                .unwrap()
                .iter()
                .fold(0usize, |a, e| (a << 1) | usize::from(spin_from_theta(*e).unwrap() == Spin::Up));
            counts[code] += 1;
        }
        let p: f64 = 2.0 / 3.0;
        let probs: Vec<f64> = (0..16u32)
            .map(|c| p.powi(c.count_ones() as i32) * (1.0 - p).powi(4 - c.count_ones() as i32))
            .collect();
        let t = chi_square_gof("eta_spins", &counts, &probs, Pooling::None).unwrap();
        assert!(t.pass, "{t:?}");
    }

    #[test]
    fn small_suite() {
        let cfg = IrfCheckConfig { samples: 20_000, ..Default::default() };
        let out = irf_suite(1.0 / 3.0, 40, &cfg, 11).unwrap();
        for t in &out.tests {
            assert!(t.pass, "{t:?}");
        }
        assert!(out.find("latin_cycle.eta_law_rejected").is_some());
    }
}
