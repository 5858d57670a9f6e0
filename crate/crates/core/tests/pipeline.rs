use burke_core::coding::{decode_phi, encode_phi, CodingConfig};
use burke_core::stats::derive_stream;
use burke_core::transform::transform_t_definitional;
use burke_core::TransformResult;
use burke_core::{inverse_t, iterate_t, reverse_r, transform_t, ModelParams, SeedPolicy, SpinWindow};

fn certified_at(r: &TransformResult, n: i64) -> bool {
    r.certified_span().is_some_and(|(lo, hi)| (lo..=hi).contains(&n))
}

fn window(params: &ModelParams, half: usize, seed: u64) -> SpinWindow {
    let mut rng = derive_stream(seed, 0);
    SpinWindow::sample(params, -(half as i64), 2 * half + 1, &mut rng)
}

#[test]
fn encode_then_decode_matches_iterates() {
    let params = ModelParams::default();
    let cfg = CodingConfig { iterates: 6, coords: 3, ..Default::default() };
    let k = cfg.iterates as i64;
    let (mut checked, mut cells) = (0, 0);
    for seed in 0..20 {
        let omega = window(&params, cfg.margin(&params), seed);
        let code = encode_phi(&omega, SeedPolicy::default(), -k, k).unwrap();
        let field = decode_phi(&code, -3, 3).unwrap();
        assert_eq!(field.consistency_violations(), 0);
        for j in -k..k {
            let it = iterate_t(&omega, SeedPolicy::default(), j).unwrap();
            for n in -3..=3 {
                cells += 1;
                let (Some(got), true) = (field.spin(n, j), certified_at(&it, n)) else { continue };
                assert_eq!(Some(got), it.output.get(n), "seed {seed} k {j} n {n}");
                checked += 1;
            }
        }
        for (n, s) in field.omega() {
            if let Some(s) = s {
                assert_eq!(Some(s), omega.get(n));
            }
        }
    }
    // rows near the ends of a finite code decode less often
    assert!(checked * 2 >= cells, "only {checked} of {cells} cells checked");
}

#[test]
fn local_rule_agrees_with_running_supremum() {
    let params = ModelParams::new(0.7).unwrap();
    for seed in 0..50 {
        let omega = window(&params, 100, seed);
        let fwd = transform_t(&omega, SeedPolicy::Exact(3));
        assert_eq!(fwd.output, transform_t_definitional(&omega, 3));
    }
}

#[test]
fn inverse_is_conjugate_by_reversal() {
    let params = ModelParams::default();
    for seed in 0..50 {
        let sigma = window(&params, 150, seed);
        let policy = SeedPolicy::Exact(2);
        let inv = inverse_t(&sigma, policy).output;
        let rtr = reverse_r(&transform_t(&reverse_r(&sigma), policy).output);
        assert_eq!(inv, rtr);

        let fwd = transform_t(&sigma, SeedPolicy::default());
        let back = inverse_t(&fwd.certified_output(), SeedPolicy::default());
        for (n, s) in back.certified_output().iter() {
            assert!(certified_at(&fwd, n));
            assert_eq!(Some(s), sigma.get(n), "seed {seed} n {n}");
        }
    }
}
