use oscopula::numerics::normal::normal_cdf;
use oscopula::probit::{
    check_compatibility, check_load_inequalities, probit_value, sample_threshold_chain, ExposureProfile,
    ProbitContext, ProbitLevel,
};
use oscopula::profile::BuildOptions;
use oscopula::stats::ks_one_sample;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn profile_strategy(max_pieces: usize) -> impl Strategy<Value = ExposureProfile> {
    prop::collection::vec((0.01f64..2.0, 0.0f64..5.0), 1..=max_pieces).prop_filter_map("positive load", |pieces| {
        let mut breaks = vec![0.0];
        let mut levels = Vec::new();
        for (d, c) in pieces {
            breaks.push(breaks.last().unwrap() + d);
            levels.push(c);
        }
        ExposureProfile::new(breaks, levels).ok()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn load_inequalities_hold(e in profile_strategy(10), m in 0.1f64..3.0, extra in 0.0f64..3.0) {
        let t = e.breakpoints().last().copied().unwrap();
        let r = check_load_inequalities(&e, m, m + extra, t).unwrap();
        prop_assert!(r.both_hold(), "{r:?}");
    }

    #[test]
    fn compatibility_monotone_in_alpha(a in -5.0f64..5.0, b in -5.0f64..5.0, bump in 0.0f64..3.0, lt in 0.1f64..20.0) {
        let ctx = ProbitContext { t: Some(lt), c_max: Some(lt) };
        for (n1, n2, b1, b2) in [(1.0, 1.0, 1.0, 1.0), (2.0, 1.0, 1.0, 2.0), (1.0, 2.0, 1.5, 1.5)] {
            let cur = ProbitLevel::new("", a, b1, n1).unwrap();
            let up = ProbitLevel::new("", a + bump, b1, n1).unwrap();
            let next = ProbitLevel::new("", b, b2, n2).unwrap();
            let r0 = check_compatibility(&cur, &next, &ctx).unwrap();
            let r1 = check_compatibility(&up, &next, &ctx).unwrap();
            prop_assert!(!r0.compatible || r1.compatible);
        }
    }
}

#[test]
fn constant_profile_gives_equalities() {
    let e = ExposureProfile::constant(3.7, 2.5).unwrap();
    for (m, n) in [(1.0, 2.0), (0.5, 3.0), (2.0, 2.0)] {
        let r = check_load_inequalities(&e, m, n, 2.5).unwrap();
        assert!((r.lhs1 - r.rhs1).abs() < 1e-12, "{r:?}");
        assert!((r.lhs2 - r.rhs2).abs() < 1e-12, "{r:?}");
    }
    let e = ExposureProfile::new(vec![0.0, 1.0, 2.0], vec![1.0, 3.0]).unwrap();
    let r = check_load_inequalities(&e, 1.0, 2.0, 2.0).unwrap();
    assert!(r.rhs1 - r.lhs1 > 1e-3 && r.rhs2 - r.lhs2 > 1e-3);
}

fn random_profile(rng: &mut ChaCha8Rng, t_max: f64, c_max: f64) -> ExposureProfile {
    let k = rng.gen_range(1..=8);
    let mut cuts: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..t_max)).collect();
    cuts.push(0.0);
    cuts.push(rng.gen_range(0.5 * t_max..=t_max));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let levels: Vec<f64> = (1..cuts.len()).map(|_| rng.gen_range(0.05 * c_max..=c_max)).collect();
    ExposureProfile::new(cuts, levels).unwrap()
}

#[test]
fn chain_margins_and_ordering() {
    let levels = [
        ProbitLevel::new("mild", 1.0, 1.0, 1.0).unwrap(),
        ProbitLevel::new("severe", 0.0, 1.0, 1.0).unwrap(),
    ];
    let chain = sample_threshold_chain(&levels, &ProbitContext::default(), 100_000, 3, false, &BuildOptions::default())
        .unwrap();
    assert_eq!(chain.deltas, vec![1.0]);
    for j in 0..2 {
        let col = chain.column(j);
        assert!(ks_one_sample(&col, normal_cdf).unwrap().passes(1e-3), "column {j}");
        let n = col.len() as f64;
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 3.0 / n.sqrt());
        assert!((var - 1.0).abs() < 5.0 / n.sqrt());
    }
    // Reaching the second level requires γ_2 - α_2 >= γ_1 - α_1 here.
    let violations = chain.gammas.iter().filter(|r| r[1] < r[0] - 1.0).count();
    assert_eq!(violations, 0);
}

#[test]
fn chained_levels_are_reached_in_order() {
    // Decreasing then increasing exponents; t and c_max bound the exposures.
    let ctx = ProbitContext {
        t: Some(10.0),
        c_max: Some(4.0),
    };
    let levels = [
        ProbitLevel::new("l1", 5.0, 1.0, 2.0).unwrap(),
        ProbitLevel::new("l2", 1.0, 2.0, 1.0).unwrap(),
        ProbitLevel::new("l3", -3.0, 2.0, 1.5).unwrap(),
    ];
    let chain = sample_threshold_chain(&levels, &ctx, 1000, 17, false, &BuildOptions::default()).unwrap();
    assert!(chain.deltas.iter().all(|&d| d > 0.0), "{:?}", chain.deltas);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    for _ in 0..1000 {
        let e = random_profile(&mut rng, 10.0, 4.0);
        let t = rng.gen_range(0.5..=10.0);
        let Ok(gammas): Result<Vec<f64>, _> = levels.iter().map(|l| probit_value(l, &e, t)).collect() else {
            continue;
        };
        for row in &chain.gammas {
            for i in 0..2 {
                if row[i + 1] <= gammas[i + 1] && row[i] > gammas[i] {
                    violations += 1;
                }
            }
        }
    }
    assert_eq!(violations, 0);
}
