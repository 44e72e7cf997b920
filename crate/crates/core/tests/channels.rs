use proptest::prelude::*;
use qmetric::channels::{
    complete_to_cptp, embed_channel_s1, identity_channel, partial_trace_channel_s2, random_cptni, transpose_map,
};
use qmetric::io::{channel_from_value, channel_value};
use qmetric::linalg::{c, eig_hermitian, identity, kron, max_abs, spectral_norm, trace, CMat};
use qmetric::sampling::{complex_gaussian, random_density, random_unit_trace_psd, rng_for};
use qmetric::{Classification, KrausChannel};

// Choi matrix assembled block by block from the Kraus sum, without going
// through the channel's own apply
fn choi_oracle(ops: &[CMat], n: usize) -> CMat {
    let m = ops[0].nrows();
    let mut out = CMat::zeros(n * m, n * m);
    for i in 0..n {
        for j in 0..n {
            let mut block = CMat::zeros(m, m);
            for a in ops {
                block += a.column(i) * a.column(j).adjoint();
            }
            out.view_mut((i * m, j * m), (m, m)).copy_from(&block);
        }
    }
    out
}

#[test]
fn completion_on_random_channels() {
    for s in 0..100u64 {
        let mut rng = rng_for(s, 7);
        let n = 2 + (s as usize % 4);
        let m = 2 + (s as usize / 4 % 4);
        let t = random_cptni(n, m, 1 + s as usize % 3, 0.8, s);
        let sigma = random_unit_trace_psd(m, &mut rng);
        let done = complete_to_cptp(&t, &sigma).unwrap();
        let effect: CMat = done.left_ops().iter().map(|k| k.adjoint() * k).sum();
        assert!(spectral_norm(&(effect - identity(n))) <= 1e-10);
        assert_eq!(done.classification(), Classification::Cptp);

        let rho = random_density(n, 0.7, &mut rng);
        let t_rho = t.apply(&rho).unwrap();
        let want = &t_rho + &sigma * (trace(&rho) - trace(&t_rho));
        assert!(max_abs(&(done.apply(&rho).unwrap() - want)) <= 1e-10);
    }
}

#[test]
fn embed_then_partial_trace_is_identity() {
    let mut rng = rng_for(3, 0);
    for m in 1..=5 {
        let round = embed_channel_s1(m).then(&partial_trace_channel_s2(m)).unwrap();
        let x = complex_gaussian(2, 2, &mut rng);
        assert!(max_abs(&(round.apply(&x).unwrap() - &x)) <= 1e-12);
    }
}

#[test]
fn choi_positivity_separates_transpose() {
    let tr = transpose_map(3);
    assert_eq!(tr.classification(), Classification::Invalid);
    // the Choi matrix of the transpose is the swap operator, eigenvalue −1
    assert!((tr.choi_min_eigenvalue() + 1.0).abs() < 1e-12);
    assert!(identity_channel(3).choi_min_eigenvalue() >= -1e-12);
}

#[test]
fn half_identity_is_strictly_non_increasing() {
    let ch = KrausChannel::new(2, 2, vec![identity(2) * c(std::f64::consts::FRAC_1_SQRT_2)]).unwrap();
    assert_eq!(ch.classification(), Classification::CptniStrict);
    assert!((ch.defect_min_eigenvalue().unwrap() - 0.5).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_channels_have_psd_choi(seed in any::<u64>(), n in 1usize..=5, m in 1usize..=5, k in 1usize..=3) {
        let ch = random_cptni(n, m, k, 0.5, seed);
        prop_assert!(ch.is_cptni());
        let choi = choi_oracle(ch.left_ops(), n);
        prop_assert!(max_abs(&(&choi - ch.choi_matrix())) <= 1e-12);
        prop_assert!(eig_hermitian(&choi).unwrap().min_eigenvalue() >= -1e-12);
        prop_assert!(ch.choi_min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn adjoint_and_trace(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let ch = random_cptni(n, m, 2, 0.5, seed);
        let mut rng = rng_for(seed, 1);
        let x = complex_gaussian(n, n, &mut rng);
        let y = complex_gaussian(m, m, &mut rng);
        let lhs = trace(&(y.adjoint() * ch.apply(&x).unwrap()));
        let rhs = trace(&(ch.adjoint_apply(&y).unwrap().adjoint() * &x));
        prop_assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm().max(1.0));
        let rho = random_density(n, 1.0, &mut rng);
        prop_assert!(trace(&ch.apply(&rho).unwrap()).re <= 1.0 + 1e-12);
    }

    #[test]
    fn channel_json_round_trip(seed in any::<u64>(), n in 1usize..=4, m in 1usize..=4) {
        let ch = random_cptni(n, m, 2, 0.5, seed);
        let text = serde_json::to_string(&channel_value(&ch)).unwrap();
        let back = channel_from_value(&serde_json::from_str(&text).unwrap()).unwrap();
        prop_assert_eq!(back.left_ops(), ch.left_ops());
        prop_assert_eq!(back.classification(), ch.classification());
    }

    #[test]
    fn tensoring_with_identity_keeps_cp(seed in any::<u64>()) {
        // (T ⊗ id) of a PSD input stays PSD for a CP map
        let ch = random_cptni(2, 3, 2, 0.5, seed);
        let mut rng = rng_for(seed, 2);
        let g = complex_gaussian(4, 4, &mut rng);
        let input = &g * g.adjoint();
        let mut out = CMat::zeros(6, 6);
        for a in ch.left_ops() {
            let big = kron(a, &identity(2));
            out += &big * &input * big.adjoint();
        }
        prop_assert!(eig_hermitian(&out).unwrap().min_eigenvalue() >= -1e-10 * spectral_norm(&out));
    }
}
