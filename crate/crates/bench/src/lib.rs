//! Fixtures shared by the criterion benches.

use lklab_core::{BlockIndex, BlockSpectrum, LemmaParams, SpaceParams, SvFunction, WeightV};

pub fn l1() -> WeightV {
    SvFunction::iterated_log(1).expect("level 1 is valid").into()
}

/// Weighted Lorentz space on `m` axes with `p = 3`, `τ = 2`, `V = l1`.
pub fn weighted_space(m: usize) -> SpaceParams {
    SpaceParams::from_parts(&vec![3.0; m], &vec![2.0; m], &vec![l1(); m]).expect("valid parameters")
}

/// A few blocks of mixed levels.
pub fn mixed_blocks(m: usize, top: usize) -> BlockSpectrum {
    let mut b = BlockSpectrum::new(m).expect("m > 0");
    for s in 0..=top {
        let mut idx = vec![s; m];
        idx[0] = top - s;
        b.insert(BlockIndex::new(idx), 1.0 / (1.0 + s as f64)).expect("dimension matches");
    }
    b
}

pub fn lemma_params(m: usize) -> LemmaParams {
    let mut gamma = vec![1.0; m];
    gamma[m - 1] = 1.5;
    LemmaParams::new(0.5, gamma, vec![1.0; m], vec![2.0; m], vec![l1(); m]).expect("valid parameters")
}
