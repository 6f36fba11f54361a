mod common;

use proptest::prelude::*;
use proptest::sample::select;

use stochsep::bounds::{self, BoundQuery};
use stochsep::experiments::{frequency_interval, ExperimentRecord};
use stochsep::geometry::{norm, radius_inverse_cdf, sample_layer, LayerSpec};
use stochsep::io_cli::{format_real, parse_real, read_records, write_records};
use stochsep::separability::{
    ExactOracle, FisherCheck, LpCheck, ScreenedLinearCheck, SeparabilityTest, DEFAULT_TOL,
};

fn radius() -> impl Strategy<Value = f64> {
    select(vec![0.0, 0.5, 0.9])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fisher_implies_linear(d in 2usize..=12, n in 2usize..=30, r in radius(), seed in any::<u64>()) {
        let cloud = sample_layer(&LayerSpec::new(d, r).unwrap(), n, seed);
        let lp = LpCheck::new(DEFAULT_TOL).unwrap();
        for i in 0..n {
            if FisherCheck.check_point(&cloud, i).unwrap().is_separable() {
                prop_assert!(lp.check_point(&cloud, i).unwrap().is_separable());
            }
        }
    }

    #[test]
    fn lp_matches_exact_oracle(d in 1usize..=3, n in 2usize..=9, r in radius(), seed in any::<u64>()) {
        let cloud = sample_layer(&LayerSpec::new(d, r).unwrap(), n, seed);
        let lp = LpCheck::new(DEFAULT_TOL).unwrap();
        for i in 0..n {
            let a = lp.check_point(&cloud, i).unwrap();
            let b = ExactOracle::default().check_point(&cloud, i).unwrap();
            prop_assert_eq!(a.verdict, b.verdict);
            prop_assert!(a.recheck(&cloud, DEFAULT_TOL));
        }
    }

    #[test]
    fn verdicts_survive_scaling_and_permutation(
        d in 2usize..=6,
        n in 2usize..=15,
        k in -10i32..=10,
        seed in any::<u64>(),
        shuffle in any::<u64>(),
    ) {
        let cloud = sample_layer(&LayerSpec::new(d, 0.0).unwrap(), n, seed);
        let scaled = cloud.scaled(2f64.powi(k));
        let mut perm: Vec<usize> = (0..n).collect();
        let mut state = shuffle;
        for i in (1..n).rev() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            perm.swap(i, (state >> 33) as usize % (i + 1));
        }
        let permuted = cloud.permuted(&perm);
        let check = ScreenedLinearCheck::new(DEFAULT_TOL).unwrap();
        for i in 0..n {
            let v = check.check_point(&cloud, i).unwrap().verdict;
            prop_assert_eq!(check.check_point(&scaled, i).unwrap().verdict, v);
            let at = perm.iter().position(|&p| p == i).unwrap();
            prop_assert_eq!(check.check_point(&permuted, at).unwrap().verdict, v);
            prop_assert_eq!(
                FisherCheck.check_point(&scaled, i).unwrap().verdict,
                FisherCheck.check_point(&cloud, i).unwrap().verdict
            );
        }
    }

    #[test]
    fn inverse_cdf_is_monotone_and_inverts(d in 1usize..=200, r in 0.0f64..0.99, u in 0.0f64..=1.0, v in 0.0f64..=1.0) {
        let layer = LayerSpec::new(d, r).unwrap();
        let (lo, hi) = if u <= v { (u, v) } else { (v, u) };
        let a = radius_inverse_cdf(lo, &layer).unwrap();
        let b = radius_inverse_cdf(hi, &layer).unwrap();
        prop_assert!(a <= b);
        prop_assert!(r <= a && b <= 1.0);
        prop_assert!((layer.radial_cdf(a) - lo).abs() < 1e-9);
    }

    #[test]
    fn samples_stay_in_layer(d in 1usize..=60, r in 0.0f64..0.99, seed in any::<u64>()) {
        let cloud = sample_layer(&LayerSpec::new(d, r).unwrap(), 50, seed);
        for p in cloud.points() {
            let rho = norm(p);
            prop_assert!(rho >= r * (1.0 - 1e-12) && rho <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn probability_bounds_are_clamped_and_ordered(d in 1usize..=300, r in 0.0f64..0.99, n in 0u64..=1_000_000) {
        let q = BoundQuery::probability(d, r, n).unwrap();
        let results = [bounds::p1_linear_lb(&q), bounds::p_linear_lb(&q), bounds::p1_fisher_lb(&q), bounds::p_fisher_lb(&q)];
        for res in &results {
            prop_assert!((0.0..=1.0).contains(&res.value));
            if (0.0..=1.0).contains(&res.raw) {
                prop_assert_eq!(res.raw, res.value);
            }
        }
        prop_assert!(results[0].value >= results[1].value);
        let q2 = BoundQuery::probability(d + 1, r, n).unwrap();
        prop_assert!(bounds::p1_linear_lb(&q2).value >= results[0].value);
        prop_assert!(bounds::p_linear_lb(&q2).value >= results[1].value);
    }

    #[test]
    fn wilson_interval_brackets_frequency(trials in 1u64..=10_000, frac in 0.0f64..=1.0) {
        let successes = (frac * trials as f64).floor() as u64;
        let (lo, hi) = frequency_interval(successes, trials).unwrap();
        let p = successes as f64 / trials as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn reals_round_trip_through_text(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        let back = parse_real(&format_real(x)).unwrap();
        if x.is_nan() {
            prop_assert!(back.is_nan());
        } else {
            prop_assert_eq!(back.to_bits(), x.to_bits());
        }
    }

    #[test]
    fn records_round_trip_through_csv(
        rows in proptest::collection::vec(
            (1usize..100, any::<u64>(), 1usize..10_000, 1u64..100, proptest::array::uniform10(-1e3f64..1e3), any::<u32>(), any::<u32>()),
            0..8,
        )
    ) {
        let records: Vec<ExperimentRecord> = rows
            .iter()
            .enumerate()
            .map(|(k, (d, rbits, n, trials, v, calls, skipped))| ExperimentRecord {
                d: d * 100 + k,
                r: (*rbits as f64) / u64::MAX as f64,
                n: *n,
                trials: *trials,
                freq_linear: v[0],
                ci_linear: (v[1], v[2]),
                freq_fisher: v[3],
                ci_fisher: (v[4], v[5]),
                bound_linear: v[6],
                bound_fisher: v[7],
                wall_time_seconds: v[8].abs() + v[9] * 1e-300,
                lp_calls: *calls as u64,
                lp_skipped_by_fisher: *skipped as u64,
            })
            .collect();
        let mut first = Vec::new();
        write_records(&records, &mut first).unwrap();
        let parsed = read_records(first.as_slice()).unwrap();
        let mut sorted = records.clone();
        sorted.sort_by(|a, b| a.r.total_cmp(&b.r).then(a.d.cmp(&b.d)));
        prop_assert_eq!(&parsed, &sorted);
        let mut second = Vec::new();
        write_records(&parsed, &mut second).unwrap();
        prop_assert_eq!(first, second);
    }
}
