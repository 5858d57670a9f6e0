use std::collections::BTreeMap;

use serde::Serialize;

/// Significance level shared by every suite: a test passes when its p-value
/// exceeds this.
pub const ALPHA: f64 = 0.001;

/// Outcome of one statistical or structural check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestReport {
    pub name: String,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub bound: Option<f64>,
    pub pass: bool,
    pub n: u64,
    pub params: BTreeMap<String, f64>,
}

impl TestReport {
    /// A p-value test: passes when `p_value > ALPHA`.
    pub fn with_p_value(name: impl Into<String>, statistic: f64, p_value: f64, n: u64) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            p_value: Some(p_value),
            bound: Some(ALPHA),
            pass: p_value > ALPHA,
            n,
            params: BTreeMap::new(),
        }
    }

    /// Passes when `|statistic| <= bound`.
    pub fn within(name: impl Into<String>, statistic: f64, bound: f64, n: u64) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            p_value: None,
            bound: Some(bound),
            pass: statistic.abs() <= bound,
            n,
            params: BTreeMap::new(),
        }
    }

    /// Passes when `statistic >= threshold`.
    pub fn at_least(name: impl Into<String>, statistic: f64, threshold: f64, n: u64) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            p_value: None,
            bound: Some(threshold),
            pass: statistic >= threshold,
            n,
            params: BTreeMap::new(),
        }
    }

    /// A structural check with an externally decided outcome.
    pub fn flag(name: impl Into<String>, statistic: f64, pass: bool, n: u64) -> Self {
        TestReport {
            name: name.into(),
            statistic,
            p_value: None,
            bound: None,
            pass,
            n,
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: f64) -> Self {
        self.params.insert(key.to_string(), value);
        self
    }

    pub fn with_bound(mut self, bound: f64) -> Self {
        self.bound = Some(bound);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

/// Certification bookkeeping reported next to test results.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificationStat {
    pub name: String,
    pub certified: u64,
    pub total: u64,
    pub rate: f64,
}

impl CertificationStat {
    pub fn new(name: impl Into<String>, certified: u64, total: u64) -> Self {
        let rate = if total == 0 {
            0.0
        } else {
            certified as f64 / total as f64
        };
        CertificationStat {
            name: name.into(),
            certified,
            total,
            rate,
        }
    }
}

/// Empirical against theoretical probabilities, for plotting.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LawSeries {
    pub name: String,
    /// `(x, empirical, theoretical)`.
    pub rows: Vec<(f64, f64, f64)>,
}

impl LawSeries {
    /// Builds a series from cell counts and cell probabilities.
    pub fn from_counts(name: impl Into<String>, counts: &[u64], probs: &[f64]) -> Self {
        let total: u64 = counts.iter().sum();
        let rows = counts
            .iter()
            .zip(probs)
            .enumerate()
            .map(|(x, (c, p))| (x as f64, *c as f64 / total.max(1) as f64, *p))
            .collect();
        LawSeries { name: name.into(), rows }
    }
}

/// Tests plus certification counters produced by one suite.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub tests: Vec<TestReport>,
    pub certification: Vec<CertificationStat>,
    /// Plot data; not part of the report.
    #[serde(skip)]
    pub series: Vec<LawSeries>,
}

impl SuiteOutcome {
    pub fn pass(&self) -> bool {
        self.tests.iter().all(|t| t.pass)
    }

    pub fn extend(&mut self, other: SuiteOutcome) {
        self.tests.extend(other.tests);
        self.certification.extend(other.certification);
        self.series.extend(other.series);
    }

    pub fn find(&self, name: &str) -> Option<&TestReport> {
        self.tests.iter().find(|t| t.name == name)
    }
}
