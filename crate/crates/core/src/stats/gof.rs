//! Goodness-of-fit and independence tests used by the verification suites.

use std::collections::BTreeMap;

use statrs::function::gamma::gamma_ur;

use super::report::{TestReport, ALPHA};
use crate::error::{Error, Result};

/// Smallest expected cell count accepted by the Pearson and G tests.
pub const MIN_EXPECTED: f64 = 5.0;

/// How cells are merged before a chi-square test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Pooling {
    None,
    /// Merge every cell at index `>= k` into one.
    TailFrom(usize),
    /// Merge adjacent cells left to right until each has expected count
    /// `>= MIN_EXPECTED`; a short remainder joins the last full group.
    MinExpected,
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi2_sf(statistic: f64, df: f64) -> f64 {
    if statistic <= 0.0 {
        return 1.0;
    }
    gamma_ur(df / 2.0, statistic / 2.0)
}

/// Pearson chi-square goodness of fit of `observed` against `probs`.
pub fn chi_square_gof(
    name: &str,
    observed: &[u64],
    probs: &[f64],
    pooling: Pooling,
) -> Result<TestReport> {
    if observed.len() != probs.len() {
        return Err(Error::InsufficientData(format!(
            "{} observed cells vs {} probabilities",
            observed.len(),
            probs.len()
        )));
    }
    let total_p: f64 = probs.iter().sum();
    if probs.iter().any(|p| !(*p >= 0.0)) || (total_p - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParams(format!(
            "cell probabilities must be nonnegative and sum to 1 (sum {total_p})"
        )));
    }
    let n: u64 = observed.iter().sum();
    let nf = n as f64;
    let (obs, exp) = pool_cells(observed, probs, nf, pooling);
    if obs.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "{} cell(s) after pooling",
            obs.len()
        )));
    }
    if let Some(e) = exp.iter().find(|e| **e < MIN_EXPECTED) {
        return Err(Error::InsufficientData(format!(
            "expected cell count {e:.3} below {MIN_EXPECTED}"
        )));
    }
    let stat: f64 = obs
        .iter()
        .zip(&exp)
        .map(|(o, e)| (*o as f64 - e).powi(2) / e)
        .sum();
    let df = (obs.len() - 1) as f64;
    Ok(TestReport::with_p_value(name, stat, chi2_sf(stat, df), n).param("df", df))
}

fn pool_cells(observed: &[u64], probs: &[f64], n: f64, pooling: Pooling) -> (Vec<u64>, Vec<f64>) {
    match pooling {
        Pooling::None => (observed.to_vec(), probs.iter().map(|p| p * n).collect()),
        Pooling::TailFrom(k) => {
            let k = k.min(observed.len());
            let mut obs = observed[..k].to_vec();
            let mut exp: Vec<f64> = probs[..k].iter().map(|p| p * n).collect();
            if k < observed.len() {
                obs.push(observed[k..].iter().sum());
                exp.push(probs[k..].iter().sum::<f64>() * n);
            }
            (obs, exp)
        }
        Pooling::MinExpected => {
            let mut obs = Vec::new();
            let mut exp = Vec::new();
            let (mut o_acc, mut e_acc) = (0u64, 0.0f64);
            for (o, p) in observed.iter().zip(probs) {
                o_acc += o;
                e_acc += p * n;
                if e_acc >= MIN_EXPECTED {
                    obs.push(o_acc);
                    exp.push(e_acc);
                    o_acc = 0;
                    e_acc = 0.0;
                }
            }
            if e_acc > 0.0 || o_acc > 0 {
                match (obs.last_mut(), exp.last_mut()) {
                    (Some(o), Some(e)) => {
                        *o += o_acc;
                        *e += e_acc;
                    }
                    _ => {
                        obs.push(o_acc);
                        exp.push(e_acc);
                    }
                }
            }
            (obs, exp)
        }
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi theta form converges fast for small arguments.
        let pi = std::f64::consts::PI;
        let coef = (2.0 * pi).sqrt() / lambda;
        let mut cdf = 0.0;
        for j in 1..=64 {
            let k = (2 * j - 1) as f64;
            let term = (-(k * k) * pi * pi / (8.0 * lambda * lambda)).exp();
            cdf += term;
            if term < 1e-18 {
                break;
            }
        }
        (1.0 - coef * cdf).clamp(0.0, 1.0)
    } else {
        let mut sum = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            sum += if j % 2 == 1 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

/// One-sample Kolmogorov-Smirnov test against a continuous `cdf`.
///
/// The p-value uses the asymptotic Kolmogorov series evaluated at
/// `(sqrt(n) + 0.12 + 0.11 / sqrt(n)) * D`.
pub fn ks_test<F: Fn(f64) -> f64>(name: &str, samples: &[f64], cdf: F) -> Result<TestReport> {
    if samples.len() < 8 {
        return Err(Error::InsufficientData(format!(
            "KS test needs at least 8 samples, got {}",
            samples.len()
        )));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let f = cdf(*x);
        let hi = (i + 1) as f64 / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    let sn = n.sqrt();
    let p = kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
    Ok(TestReport::with_p_value(name, d, p, xs.len() as u64))
}

/// Pearson correlation; zero when either variable is constant.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    if xs.is_empty() {
        return 0.0;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// Correlation check against the `3 / sqrt(N)` band.
pub fn correlation_test(name: &str, xs: &[f64], ys: &[f64]) -> TestReport {
    let n = xs.len();
    let band = if n == 0 { 0.0 } else { 3.0 / (n as f64).sqrt() };
    TestReport::within(name, correlation(xs, ys), band, n as u64)
}

/// Sample mean and unbiased variance.
pub fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = xs.iter().sum::<f64>() / n;
    let v = if xs.len() > 1 {
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (m, v)
}

/// G-test result together with the companion correlation check.
#[derive(Clone, Debug, PartialEq)]
pub struct IndependenceReport {
    pub g_test: TestReport,
    pub correlation: TestReport,
}

/// Contingency-table G-test of independence between the two coordinates of
/// `pairs`, plus the sample correlation with its `3 / sqrt(N)` band.
///
/// Rows and columns (ordered by value) are merged with their smaller neighbour
/// until every expected cell reaches `MIN_EXPECTED`.
pub fn independence_test(name: &str, pairs: &[(u64, u64)]) -> Result<IndependenceReport> {
    let n = pairs.len();
    if n == 0 {
        return Err(Error::InsufficientData("no pairs".into()));
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0 as f64).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1 as f64).collect();
    let correlation = correlation_test(&format!("{name}.correlation"), &xs, &ys);

    let mut row_ix = BTreeMap::new();
    let mut col_ix = BTreeMap::new();
    for (x, y) in pairs {
        let r = row_ix.len();
        row_ix.entry(*x).or_insert(r);
        let c = col_ix.len();
        col_ix.entry(*y).or_insert(c);
    }
    // Re-index by sorted value so merging follows the natural order.
    let rows_sorted: BTreeMap<usize, usize> = row_ix
        .values()
        .enumerate()
        .map(|(pos, &first)| (first, pos))
        .collect();
    let cols_sorted: BTreeMap<usize, usize> = col_ix
        .values()
        .enumerate()
        .map(|(pos, &first)| (first, pos))
        .collect();
    let mut table = vec![vec![0u64; col_ix.len()]; row_ix.len()];
    for (x, y) in pairs {
        let r = rows_sorted[&row_ix[x]];
        let c = cols_sorted[&col_ix[y]];
        table[r][c] += 1;
    }

    let nf = n as f64;
    loop {
        let (nr, nc) = (table.len(), table[0].len());
        if nr < 2 || nc < 2 {
            return Err(Error::InsufficientData(format!(
                "contingency table collapsed to {nr}x{nc}"
            )));
        }
        let row_sums: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..nc).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        let (ri, rmin) = argmin(&row_sums);
        let (cj, cmin) = argmin(&col_sums);
        if (rmin as f64) * (cmin as f64) / nf >= MIN_EXPECTED {
            break;
        }
        if (rmin as f64) * nr as f64 <= (cmin as f64) * nc as f64 {
            let other = merge_partner(&row_sums, ri);
            let (keep, drop) = (ri.min(other), ri.max(other));
            let dropped = table.remove(drop);
            for (a, b) in table[keep].iter_mut().zip(dropped) {
                *a += b;
            }
        } else {
            let other = merge_partner(&col_sums, cj);
            let (keep, drop) = (cj.min(other), cj.max(other));
            for row in table.iter_mut() {
                let v = row.remove(drop);
                row[keep] += v;
            }
        }
    }

    let (nr, nc) = (table.len(), table[0].len());
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..nc)
        .map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64)
        .collect();
    let mut g = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &o) in row.iter().enumerate() {
            if o > 0 {
                let e = row_sums[i] * col_sums[j] / nf;
                g += o as f64 * (o as f64 / e).ln();
            }
        }
    }
    g *= 2.0;
    let df = ((nr - 1) * (nc - 1)) as f64;
    let p = chi2_sf(g, df);
    let g_test = TestReport::with_p_value(format!("{name}.g_test"), g, p, n as u64)
        .param("df", df)
        .param("alpha", ALPHA);
    Ok(IndependenceReport {
        g_test,
        correlation,
    })
}

fn argmin(xs: &[u64]) -> (usize, u64) {
    xs.iter()
        .copied()
        .enumerate()
        .min_by_key(|&(i, v)| (v, std::cmp::Reverse(i)))
        .expect("nonempty")
}

fn merge_partner(sums: &[u64], i: usize) -> usize {
    if i == 0 {
        1
    } else if i + 1 == sums.len() || sums[i - 1] <= sums[i + 1] {
        i - 1
    } else {
        i + 1
    }
}
