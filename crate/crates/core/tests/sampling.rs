use oscopula::copula::Copula;
use oscopula::numerics::normal::normal_cdf;
use oscopula::prescribed::PrescribedCopula;
use oscopula::profile::BuildOptions;
use oscopula::sampling::{clamp_to_shift, sample_pairs, to_normal_pairs};
use oscopula::separable::SeparableCopula;
use oscopula::stats::{kendall_tau, ks_one_sample, ks_two_sample};
use oscopula::support::SupportFunction;

fn gaussian(delta: f64) -> PrescribedCopula {
    let h = SupportFunction::gaussian_shift(delta).unwrap();
    PrescribedCopula::build_main(&h, &BuildOptions::default()).unwrap()
}

#[test]
fn gaussian_shift_samples_respect_support() {
    let c = gaussian(1.0);
    let batch = sample_pairs(&c, 100_000, 2024).unwrap();
    let violations = batch.pairs.iter().filter(|&&(u, v)| v > c.h(u)).count();
    assert_eq!(violations, 0);
    assert!(ks_one_sample(&batch.us(), |x| x).unwrap().passes(1e-3));
    assert!(ks_one_sample(&batch.vs(), |x| x).unwrap().passes(1e-3));

    let mut xy = to_normal_pairs(&batch.pairs).unwrap();
    let correction = clamp_to_shift(&mut xy, 1.0);
    assert!(correction < 1e-9, "{correction}");
    let xs: Vec<f64> = xy.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = xy.iter().map(|p| p.1).collect();
    assert!(ks_one_sample(&xs, normal_cdf).unwrap().passes(1e-3));
    assert!(ks_one_sample(&ys, normal_cdf).unwrap().passes(1e-3));

    // (X, Y) and (-Y, -X) share a distribution: compare projections.
    let reflected: Vec<(f64, f64)> = xy.iter().map(|&(x, y)| (-y, -x)).collect();
    let (half_a, half_b) = (&xy[..50_000], &reflected[50_000..]);
    for (a, b) in [(1.0, 1.0), (1.0, -1.0), (1.0, 0.3)] {
        let pa: Vec<f64> = half_a.iter().map(|p| a * p.0 + b * p.1).collect();
        let pb: Vec<f64> = half_b.iter().map(|p| a * p.0 + b * p.1).collect();
        let r = ks_two_sample(&pa, &pb).unwrap();
        assert!(r.passes(1e-3), "projection ({a}, {b}): {r:?}");
    }
}

#[test]
fn inversion_is_consistent() {
    for c in [gaussian(1.0), gaussian(0.5), gaussian(3.0)] {
        for i in 1..200 {
            let u = i as f64 / 200.0;
            for j in 1..50 {
                let t = j as f64 / 50.0;
                let v = c.invert_conditional(u, t);
                assert!((c.conditional_cdf(u, v) - t).abs() < 1e-8, "u={u} t={t} v={v}");
            }
        }
    }
}

#[test]
fn conditional_cdf_is_monotone_and_matches_differences() {
    let c = gaussian(1.0);
    for i in 1..100 {
        let u = (i as f64 + 0.37) / 101.0;
        let mut prev = 0.0;
        for j in 0..=1000 {
            let v = j as f64 / 1000.0;
            let d = c.conditional_cdf(u, v);
            assert!(d >= prev - 1e-10, "u={u} v={v}");
            prev = d;
        }
        for &v in &[0.13, 0.41, 0.77] {
            // Skip points on the kinks of C in u.
            if (v - c.h(u)).abs() < 1e-3 || (u + v - 1.0).abs() < 1e-3 || (u - c.u0()).abs() < 1e-3 {
                continue;
            }
            let h = 1e-6;
            let fd = (c.cdf(u + h, v) - c.cdf(u - h, v)) / (2.0 * h);
            assert!((fd - c.conditional_cdf(u, v)).abs() < 1e-4, "u={u} v={v}");
        }
    }
}

#[test]
fn independence_tau_sample() {
    let c = SeparableCopula::independence();
    let batch = sample_pairs(&c, 100_000, 99).unwrap();
    let est = kendall_tau(&batch.pairs).unwrap();
    assert!(est.tau.abs() < 3.0 * est.std_error, "{est:?}");
}
