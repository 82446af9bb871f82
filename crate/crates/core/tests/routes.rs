//! Cross-module checks where two independent routes must agree.

use lklab_core::besov::{besov_functional, besov_functional_blocks, DirichletNorms};
use lklab_core::bounds::{lemma1_sum, lemma1_sum_enumerated, lemma2_sum};
use lklab_core::norms::{aniso_lk_norm, aniso_lk_norm_rearranged};
use lklab_core::spectral::{analyze, synthesize_on};
use lklab_core::{
    BesovParams, BlockIndex, BlockSpectrum, CrossSpec, LemmaParams, Sampling, SpaceParams, SvFunction, WeightV,
};
use proptest::prelude::*;

fn weight(s: &str) -> WeightV {
    s.parse::<SvFunction>().unwrap().into()
}

#[test]
fn tensor_block_norms_match_full_grid() {
    let params = SpaceParams::from_parts(&[1.5, 3.0], &[2.0, 4.0], &[weight("l1"), weight("l1^-0.5")]).unwrap();
    let sampling = Sampling::staggered(vec![64, 64]).unwrap();
    let mut norms = DirichletNorms::new(params.clone(), sampling.clone()).unwrap();
    for s in [[0, 0], [1, 3], [4, 2], [5, 5]] {
        let s = BlockIndex::new(s.to_vec());
        let tensor = norms.block(&s).unwrap();
        let f = BlockSpectrum::single(s.clone(), 1.0).unwrap().sample(&sampling).unwrap();
        let full = aniso_lk_norm(&f, &params).unwrap();
        assert!((tensor - full).abs() < 1e-10 * full, "{s:?}: {tensor} vs {full}");
    }
}

#[test]
fn half_grid_moduli_match_full_grid() {
    let params = SpaceParams::from_parts(&[2.0, 4.0], &[2.0, 2.0], &[weight("l1"), weight("l1")]).unwrap();
    let mut b = BlockSpectrum::new(2).unwrap();
    b.insert(BlockIndex::new(vec![3, 1]), 0.5).unwrap();
    b.insert(BlockIndex::new(vec![1, 4]), -2.0).unwrap();
    b.insert(BlockIndex::new(vec![0, 0]), 1.0).unwrap();
    let full = b.sample(&Sampling::staggered(vec![64, 64]).unwrap()).unwrap();
    let half = b
        .sample_moduli(&Sampling::staggered_half(vec![32, 32]).unwrap())
        .unwrap()
        .into_iterated_rearrangement();
    let a = aniso_lk_norm(&full, &params).unwrap();
    let h = aniso_lk_norm_rearranged(&half, &params).unwrap();
    assert!((a - h).abs() < 1e-12 * a);
}

#[test]
fn spectral_and_block_functionals_agree() {
    let space = SpaceParams::lorentz(&[2.0, 3.0], &[2.0, 3.0]).unwrap();
    let bp = BesovParams::new(space, vec![1.0, 0.5], vec![2.0, f64::INFINITY]).unwrap();
    let mut b = BlockSpectrum::new(2).unwrap();
    b.insert(BlockIndex::new(vec![2, 1]), 0.25).unwrap();
    b.insert(BlockIndex::new(vec![0, 3]), 1.0).unwrap();
    let sampling = Sampling::regular(vec![32, 32]).unwrap();
    let by_blocks = besov_functional_blocks(&b, &bp, &sampling).unwrap();
    let by_spectrum = besov_functional(&b.to_spectral(), &bp, &[32, 32]).unwrap();
    assert!((by_blocks.norm - by_spectrum.norm).abs() < 1e-9 * by_blocks.norm);
    assert!((by_blocks.seminorm - by_spectrum.seminorm).abs() < 1e-9 * by_blocks.seminorm);
}

#[test]
fn synthesis_then_analysis_recovers_blocks() {
    let mut b = BlockSpectrum::new(2).unwrap();
    b.insert(BlockIndex::new(vec![2, 3]), 1.5).unwrap();
    b.insert(BlockIndex::new(vec![1, 0]), -0.5).unwrap();
    let g = b.to_spectral();
    for sampling in [Sampling::regular(vec![32, 32]).unwrap(), Sampling::staggered(vec![32, 32]).unwrap()] {
        let back = analyze(&synthesize_on(&g, &sampling).unwrap()).unwrap();
        assert!(back.max_abs_diff(&g) < 1e-12);
    }
}

#[test]
fn lemma1_ratio_bounded_from_n_ten() {
    // Existence of n0 ≤ 10: the ratio stays within a factor 10 from n = 10 on.
    for (g, w, theta) in [
        (vec![1.0, 1.0], "l1", 2.0),
        (vec![1.0, 1.5, 1.0], "l2", f64::INFINITY),
        (vec![2.0, 2.0, 2.0], "l1^-1", 1.0),
    ] {
        let m = g.len();
        let lp = LemmaParams::new(1.0, g, vec![1.0; m], vec![theta; m], vec![weight(w); m]).unwrap();
        let ratios: Vec<f64> = (10..=25)
            .map(|n| lemma1_sum(&lp, n, 1e-12).unwrap().value / lklab_core::bounds::lemma1_bound(&lp, n as u32))
            .collect();
        let max = ratios.iter().cloned().fold(0.0, f64::max);
        let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min <= 10.0, "{lp}");
    }
}

#[test]
fn kappa_shell_is_exact_for_rational_gamma() {
    let spec = CrossSpec::new(vec![0.5, 1.5], 6.0).unwrap();
    assert!(spec.is_exact());
    let lp = LemmaParams::for_kappa(1.0, vec![0.5, 1.5], vec![1.0, 1.0], vec![WeightV::unit(); 2]).unwrap();
    // s with s_1/2 + 3 s_2/2 = 6: (12,0), (9,1), (6,2), (3,3), (0,4); each term is 2^{-6}.
    let expected = 5.0 * (-6.0f64).exp2();
    assert!((lemma2_sum(&lp, 6).unwrap() - expected).abs() < 1e-15);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fast_and_enumerated_lemma1_agree(
        alpha in prop_oneof![Just(0.5), Just(1.0), Just(2.0)],
        g2 in prop_oneof![Just(1.0), Just(1.5), Just(2.0)],
        gp2 in prop_oneof![Just(1.0), Just(0.5)],
        t1 in prop_oneof![Just(1.0), Just(2.0), Just(f64::INFINITY)],
        t2 in prop_oneof![Just(1.0), Just(3.0), Just(f64::INFINITY)],
        w in prop_oneof![Just("1"), Just("l1"), Just("l1^-1"), Just("l2")],
        n in 0i32..12,
    ) {
        let lp = LemmaParams::new(alpha, vec![1.0, g2], vec![1.0, gp2 * g2], vec![t1, t2], vec![weight(w), weight(w)]).unwrap();
        let fast = lemma1_sum(&lp, n, 1e-12).unwrap();
        let direct = lemma1_sum_enumerated(&lp, n, &fast.caps).unwrap();
        prop_assert!((fast.value - direct).abs() <= 1e-11 * direct);
    }
}
