use proptest::prelude::*;

use qchannel::bounds::{lb_measured_qcm, lb_qcm_isometry, lb_random_qcm, resource_table};
use qchannel::channel::{
    ceil_log2, choi_from_kraus, kraus_equivalent, kraus_from_choi, kraus_rank, random_channel, stinespring_isometry,
    RANK_TOLERANCE,
};
use qchannel::circuit::{cnot_count, parse, random_circuit, serialize, zyz_decompose, zyz_reconstruct};
use qchannel::compiler::{compile_measured, plan_measured, predict_upper_bound};
use qchannel::linalg::{frob_distance_up_to_phase, qr_rectangular, CMat, C64};
use qchannel::rewrite::optimize;
use qchannel::sim::{circuit_distance, circuit_to_kraus};
use qchannel::synth::{decompose_isometry, isometry_cnots, BuiltinCost};
use qchannel::templates::{Template, TemplateId};

/// `(m, n, K)` with `K · 2^n ≥ 2^m`.
fn channel_shape(max: usize) -> impl Strategy<Value = (usize, usize, usize)> {
    (1..=max, 1..=max).prop_flat_map(|(m, n)| {
        let lo = (1usize << m).div_ceil(1 << n);
        let hi = (1usize << (m + n)).min(8);
        (Just(m), Just(n), lo..=hi)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn choi_round_trip((m, n, k) in channel_shape(2), seed in any::<u64>()) {
        let ks = random_channel(m, n, k, seed).unwrap();
        prop_assert!(ks.tp_residual() < 1e-10);
        let back = kraus_from_choi(&choi_from_kraus(&ks), RANK_TOLERANCE).unwrap();
        prop_assert!(kraus_equivalent(&ks, &back, 1e-9));
        prop_assert_eq!(kraus_rank(&ks, RANK_TOLERANCE), k);
    }

    #[test]
    fn dilation_is_isometry((m, n, k) in channel_shape(2), seed in any::<u64>()) {
        let d = stinespring_isometry(&random_channel(m, n, k, seed).unwrap()).unwrap();
        prop_assert_eq!(d.k, ceil_log2(k));
        prop_assert!(d.v.isometry_residual() < 1e-10);
    }

    #[test]
    fn qr_factorizes(
        (rows, cols, entries) in (1usize..9, 0usize..4)
            .prop_flat_map(|(rows, extra)| {
                let cols = rows.saturating_sub(extra).max(1);
                (Just(rows), Just(cols), prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), rows * cols))
            })
    ) {
        let b = CMat::from_vec(rows, cols, entries.into_iter().map(|(re, im)| C64::new(re, im)).collect()).unwrap();
        let qr = qr_rectangular(&b).unwrap();
        prop_assert!(qr.q.isometry_residual() < 1e-12);
        prop_assert!((&qr.q.matmul(&qr.r) - &b).frob_norm() < 1e-12 * (1.0 + b.frob_norm()));
    }

    #[test]
    fn zyz_reconstructs(a in -3.0f64..3.0, b in -3.0f64..3.0, c in 0.0f64..3.1, d in -3.0f64..3.0) {
        let u = zyz_reconstruct((a, b, c, d));
        let back = zyz_reconstruct(zyz_decompose(&u).unwrap());
        prop_assert!((&back - &u).frob_norm() < 1e-12);
    }

    #[test]
    fn isometry_synthesis_exact((m, n) in (0usize..3, 1usize..4).prop_filter("tall", |(m, n)| m <= n), seed in any::<u64>()) {
        let v = random_channel(m, n, 1, seed).unwrap().ops()[0].clone();
        let c = decompose_isometry(&v).unwrap();
        let w = qchannel::sim::simulate_unitary(&c).unwrap();
        prop_assert!(frob_distance_up_to_phase(&w, &v).unwrap() < 1e-10);
        prop_assert_eq!(cnot_count(&c).worst_case, isometry_cnots(m, n));
    }

    #[test]
    fn circuit_text_round_trip(p in 1usize..5, gates in 0usize..40, seed in any::<u64>()) {
        let c = random_circuit(p, p.min(2), p.min(2), gates, true, seed);
        let back = parse(&serialize(&c)).unwrap();
        prop_assert_eq!(back, c);
    }

    #[test]
    fn rewrites_preserve_channel(gates in 0usize..40, seed in any::<u64>()) {
        let c = random_circuit(3, 1, 2, gates, true, seed);
        let d = optimize(&c);
        prop_assert!(cnot_count(&d).worst_case <= cnot_count(&c).worst_case);
        prop_assert!(circuit_distance(&d, &circuit_to_kraus(&c).unwrap()).unwrap() < 1e-10);
    }

    #[test]
    fn measured_compile_matches_channel_and_prediction((m, n, k) in channel_shape(2), seed in any::<u64>()) {
        let ks = random_channel(m, n, k, seed).unwrap();
        let plan = plan_measured(&ks).unwrap();
        prop_assert!((&plan.reconstruct() - &plan.dilation.v).frob_norm() < 1e-9);
        let c = compile_measured(&ks).unwrap();
        prop_assert!(circuit_distance(&c, &ks).unwrap() < 1e-8);
        let count = cnot_count(&c);
        prop_assert!(count.per_branch_uniform);
        prop_assert_eq!(count.worst_case, predict_upper_bound(m, n, ceil_log2(k), &BuiltinCost));
        prop_assert_eq!(c.measurement_count(), ceil_log2(k));
    }

    #[test]
    fn templates_keep_their_counts(idx in 0usize..4, seed in any::<u64>()) {
        let t = Template::new(TemplateId::ALL[idx]);
        let params: Vec<f64> = (0..t.param_count).map(|i| ((seed as f64) * 0.001 + i as f64).sin() * 4.0).collect();
        let c = t.instantiate(&params).unwrap();
        prop_assert!(c.validate().is_ok());
        prop_assert_eq!(cnot_count(&c).worst_case, t.cnot_count);
        let ks = circuit_to_kraus(&c).unwrap();
        prop_assert!(ks.tp_residual() < 1e-10);
        prop_assert!(kraus_rank(&ks, RANK_TOLERANCE) <= TemplateId::ALL[idx].max_rank());
    }

    #[test]
    fn bounds_are_consistent(m in 1u32..12, n in 0u32..12) {
        let r = resource_table(m, n);
        prop_assert!(lb_measured_qcm(m, n) <= lb_random_qcm(m, n));
        prop_assert!(lb_qcm_isometry(m, n) <= r.lb_qcm.max(1));
        prop_assert!(r.lb_random <= r.param_count_extreme);
        prop_assert!(r.csv_row().split(',').count() == qchannel::bounds::BoundsReport::CSV_HEADER.split(',').count());
    }
}
