//! Acceptance suite: runs the full pipeline at seed 42 and prints one
//! PASS/FAIL line per criterion. Run with `--nocapture` to see the lines.

use std::fs;
use std::time::{Duration, Instant};

use burke_cli::{run_with, EXIT_PASS};
use serde_json::Value;

const TWO_POW_MINUS_41: f64 = 1.0 / (1u64 << 41) as f64;
const ALPHA: f64 = 0.001;
const CORR_BAND: f64 = 0.03; // 3 / sqrt(10^4)

fn run_to_file(args: &[&str], path: &std::path::Path) -> (i32, Duration) {
    let mut full: Vec<String> = vec!["burke".into()];
    full.extend(args.iter().map(|s| s.to_string()));
    full.extend(["--out".into(), path.display().to_string()]);
    let (mut o, mut e) = (Vec::new(), Vec::new());
    let start = Instant::now();
    let code = run_with(full, &mut o, &mut e);
    (code, start.elapsed())
}

struct Report(Value);

impl Report {
    fn test(&self, name: &str) -> &Value {
        self.0["tests"]
            .as_array()
            .unwrap()
            .iter()
            .find(|t| t["name"] == name)
            .unwrap_or_else(|| panic!("missing test {name}"))
    }

    fn stat(&self, name: &str) -> f64 {
        self.test(name)["statistic"].as_f64().unwrap()
    }

    fn p(&self, name: &str) -> f64 {
        self.test(name)["p_value"].as_f64().unwrap()
    }

    fn cert(&self, name: &str) -> f64 {
        self.0["certification"]
            .as_array()
            .unwrap()
            .iter()
            .find(|c| c["name"] == name)
            .unwrap_or_else(|| panic!("missing certification {name}"))["rate"]
            .as_f64()
            .unwrap()
    }
}

struct Tally(Vec<(String, bool)>);

impl Tally {
    fn check(&mut self, id: &str, ok: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if ok { "PASS" } else { "FAIL" });
        self.0.push((id.to_string(), ok));
    }
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let one = dir.path().join("t1.json");
    let eight = dir.path().join("t8.json");
    let oracle = dir.path().join("oracle.json");

    let (code1, t1) = run_to_file(&["all", "--seed", "42", "--threads", "1"], &one);
    let (code8, t8) = run_to_file(&["all", "--seed", "42", "--threads", "8"], &eight);
    let (code_o, to) =
        run_to_file(&["oracle", "--p", "2/3", "--window", "10", "--seed-cap", "40"], &oracle);
    println!("all: {:.1}s on 1 thread, {:.1}s on 8 threads", t1.as_secs_f64(), t8.as_secs_f64());

    let bytes1 = fs::read(&one).unwrap();
    let bytes8 = fs::read(&eight).unwrap();
    let r = Report(serde_json::from_slice(&bytes1).unwrap());
    let o = Report(serde_json::from_slice(&fs::read(&oracle).unwrap()).unwrap());
    let mut tally = Tally(Vec::new());

    let dev = o.stat("oracle.measure_preservation");
    tally.check(
        "1",
        code_o == EXIT_PASS && dev <= TWO_POW_MINUS_41 && to < Duration::from_secs(60),
        format!("max deviation {dev:.3e} <= 2^-41, runtime {:.2}s < 60s", to.as_secs_f64()),
    );

    let dev = o.stat("oracle.queue_past_output_independence");
    let past = o.0["config"]["coords"].as_u64().unwrap();
    tally.check(
        "2",
        dev <= TWO_POW_MINUS_41 && past == 8,
        format!("joint (q0, 8 past outputs) deviation {dev:.3e} <= 2^-41"),
    );

    let minus = r.stat("oracle.dual_recursion_minus_violations");
    let plus = r.stat("oracle.dual_recursion_plus_violations");
    tally.check(
        "3",
        minus == 0.0 && plus > 0.0,
        format!("minus form {minus} violations, plus form {plus} violations"),
    );

    let mism = r.stat("discrete.involution_mismatches");
    let rate = r.stat("discrete.involution_certified_rate");
    let trials = r.test("discrete.involution_certified_rate")["n"].as_u64().unwrap();
    tally.check(
        "4",
        mism == 0.0 && rate >= 0.95 && trials == 10_000,
        format!("{mism} mismatches over {trials} trials, certified span nonempty in {:.2}%", rate * 100.0),
    );

    let p = r.p("discrete.q0_geometric");
    let n = r.test("discrete.q0_geometric")["n"].as_u64().unwrap();
    tally.check("5", p > ALPHA && n == 1_000_000, format!("q0 chi-square p = {p:.4} over {n} samples"));

    let cells = r.stat("roundtrip.cell_mismatches");
    let omega = r.stat("roundtrip.omega_mismatches");
    let worst = (-4..=4)
        .map(|n| r.cert(&format!("roundtrip.coordinate[{n}]")))
        .fold(1.0, f64::min);
    tally.check(
        "6",
        cells == 0.0 && omega == 0.0,
        format!(
            "{cells} cell and {omega} spin mismatches; certification at |n| <= 4 is {:.1}% (report only, target 90%)",
            worst * 100.0
        ),
    );

    let pg = r.p("coding.phi_geometric");
    let pl = r.p("coding.phi_lag1.g_test");
    tally.check("7", pg > ALPHA && pl > ALPHA, format!("phi chi-square p = {pg:.4}, lag-1 G-test p = {pl:.4}"));

    let ks = r.p("mm1.interdeparture_exp");
    let cq = r.stat("mm1.past_departures_vs_queue");
    let cr = r.stat("mm1.departures_vs_residual");
    let disp = r.stat("mm1.departure_dispersion");
    tally.check(
        "8",
        ks > ALPHA && cq.abs() <= CORR_BAND && cr.abs() <= CORR_BAND && (0.9..=1.1).contains(&disp),
        format!("KS p = {ks:.4}, corr(D, Q0) = {cq:.4}, corr(D, R) = {cr:.4}, Var/Mean = {disp:.4}"),
    );

    let ks = r.p("brownian.m0_exponential");
    let z = r.stat("brownian.y_increment_mean_zscore");
    let v = r.stat("brownian.y_increment_variance_rel_error");
    let c = r.stat("brownian.m0_vs_past_y_increment");
    tally.check(
        "9",
        ks > ALPHA && z.abs() <= 3.0 && v.abs() <= 0.05 && c.abs() <= CORR_BAND,
        format!("KS p = {ks:.4}, mean z = {z:.3}, variance error = {v:.4}, corr = {c:.4}"),
    );

    let q = r.0["config"]["irf"]["q"].as_f64().unwrap();
    let mut ok = (q - 1.0 / 3.0).abs() < 1e-12;
    let mut detail = Vec::new();
    for fam in ["mm1_map", "birth_death"] {
        let z = r.stat(&format!("{fam}.eta1_cells_max_zscore"));
        let g = r.p(&format!("{fam}.z0_vs_eta_block.g_test"));
        let n = r.test(&format!("{fam}.eta1_cells_max_zscore"))["n"].as_u64().unwrap();
        ok &= z <= 3.0 && g > ALPHA && n == 1_000_000;
        detail.push(format!("{fam}: max cell z = {z:.3}, G-test p = {g:.4}"));
    }
    let rejected = r.test("latin_cycle.eta_law_rejected")["pass"].as_bool().unwrap();
    ok &= rejected;
    detail.push(format!("latin_cycle eta law rejected: {rejected}"));
    tally.check("10", ok, detail.join("; "));

    tally.check(
        "11",
        code1 == code8 && bytes1 == bytes8,
        format!("reports at 1 and 8 threads are {} bytes each and identical: {}", bytes1.len(), bytes1 == bytes8),
    );

    let failed: Vec<&str> = tally.0.iter().filter(|(_, ok)| !ok).map(|(id, _)| id.as_str()).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
