//! Free-chain module and the order-filtered actions that separate the
//! monotone product from a literal restriction of free left actions.
//!
//! The module carries alternating chains (adjacent indices distinct) up
//! to a depth bound.  The action assigned to index `k` is the free left
//! action cut down by the projection onto the vacuum and the chains
//! leading at or below `k`; on the decreasing chains it restricts to the
//! monotone model action.  The three-letter demonstration applies
//! operators at indices `(i_1, i_2, i_3)` with `i_1 < i_2 > i_3`,
//! `i_2 > i_3 > i_1`, to a two-chain vector and produces a nonzero
//! multiple of a single chain at the lowest index, while the same product
//! with the middle letter replaced by its expectation vanishes: the
//! filtered action remembers chain overlaps that the collapsed product
//! cannot see.

use num_complex::Complex64;

use crate::algebra::Family;
use crate::error::{Error, Result};
use crate::linalg::{cplx, max_abs, CMat, CVec};
use crate::space::{alternating_module, decreasing_module, TupleSpace};
use crate::word::{Letter, Word};

/// Free-chain operator model of a family.
#[derive(Debug, Clone)]
pub struct FreeModel {
    /// The family.
    pub family: Family,
    /// Alternating-chain module (exact up to its depth).
    pub space: TupleSpace,
}

/// Builds the model with the given exact chain depth.
pub fn free_model(family: &Family, depth: usize) -> Result<FreeModel> {
    Ok(FreeModel { family: family.clone(), space: alternating_module(family, depth)? })
}

/// Result of the three-letter separation demonstration.
#[derive(Debug, Clone)]
pub struct SeparationDemo {
    /// Indices `(i_1, i_2, i_3)` of the three letters.
    pub indices: [u32; 3],
    /// Norm of `A_1 A_2 A_3` applied to the prepared two-chain vector.
    pub separated_norm: f64,
    /// Norm of `A_1 psi(a_2) A_3` applied to the same vector.
    pub collapsed_norm: f64,
    /// Largest component of the result outside the single chain at `i_1`.
    pub support_escape: f64,
    /// Coefficient of the result against the centered class of `a_1`.
    pub gamma: Complex64,
    /// Overlap `psi(a_2 a_2*)` of the prepared second-slot vector.
    pub overlap: Complex64,
}

/// Runs the three-letter demonstration on a scalar-based family.
///
/// The letters must sit at indices with `i_1 < i_3 < i_2` and are
/// expected to be centered; the prepared vector is
/// `(overlap * class(a_3*)) (x) class(a_2*)` in the chain `(i_3, i_2)`.
pub fn separation_demo(
    family: &Family,
    indices: [u32; 3],
    letters: [&CMat; 3],
) -> Result<SeparationDemo> {
    if family.b.dim != 1 {
        return Err(Error::ContextMismatch(
            "the separation demonstration needs a scalar base".into(),
        ));
    }
    let [i1, i2, i3] = indices;
    if !(i1 < i3 && i3 < i2) {
        return Err(Error::ContextMismatch(format!(
            "indices must satisfy i1 < i3 < i2, got ({i1}, {i2}, {i3})"
        )));
    }
    let [a1, a2, a3] = letters;
    let model = free_model(family, 5)?;
    let space = &model.space;

    let m2 = family.member(i2)?;
    let f2 = space.slots[&i2].hat_cent(&a2.adjoint())?;
    let overlap = m2.psi.scalar(&(a2 * a2.adjoint()))?;
    let f3 = space.slots[&i3].hat_cent(&(a3.adjoint() * overlap))?;
    let start = space.tensor_chain(&[(i3, f3), (i2, f2)])?;

    let word = Word::from_letters(vec![
        Letter { index: i1, elem: a1.clone() },
        Letter { index: i2, elem: a2.clone() },
        Letter { index: i3, elem: a3.clone() },
    ]);
    let out = space.apply_word(&word, &start)?;
    let separated_norm = out.norm();

    // Collapsed product: the middle letter replaced by its expectation.
    let psi_a2 = m2.psi.scalar(a2)?;
    let mut collapsed = space.apply_letter(i3, a3, &start)?;
    collapsed *= psi_a2;
    collapsed = space.apply_letter(i1, a1, &collapsed)?;
    let collapsed_norm = collapsed.norm();

    // Support: everything should sit in the single chain at i1.
    let target = space
        .block_of(&[i1])
        .ok_or_else(|| Error::ContextMismatch("single chain missing".into()))?;
    let mut support_escape = 0.0f64;
    for (bi, block) in space.blocks.iter().enumerate() {
        if bi == target {
            continue;
        }
        for j in 0..block.dim {
            support_escape = support_escape.max(out[block.offset + j].norm());
        }
    }
    // Coefficient against the centered class of a1.
    let g1 = space.slots[&i1].hat_cent(a1)?;
    let blk = &space.blocks[target];
    let comp = out.rows(blk.offset, blk.dim).into_owned();
    let denom: Complex64 = g1.dotc(&g1);
    let gamma = if denom.norm() > 1.0e-14 {
        g1.dotc(&comp) / denom
    } else {
        cplx(0.0, 0.0)
    };

    Ok(SeparationDemo {
        indices,
        separated_norm,
        collapsed_norm,
        support_escape,
        gamma,
        overlap,
    })
}

/// Maximal deviation between the filtered free action and the monotone
/// model action on the decreasing chains, over the family basis elements.
/// Also returns the largest escape of the free action out of the
/// decreasing chains.
pub fn restriction_deviation(family: &Family, depth: usize) -> Result<(f64, f64)> {
    let free = alternating_module(family, depth)?;
    let mono = decreasing_module(family)?;
    // Decreasing blocks in the alternating space, in the monotone order.
    let mut dev = 0.0f64;
    let mut escape = 0.0f64;
    let dec_mask = free.mask(|t| t.windows(2).all(|w| w[0] > w[1]));
    for m in &family.members {
        for bj in &m.algebra.basis {
            for mono_block in &mono.blocks {
                let free_bi = free
                    .block_of(&mono_block.tuple)
                    .ok_or_else(|| Error::ContextMismatch("missing block".into()))?;
                let free_block = &free.blocks[free_bi];
                if free_block.dim != mono_block.dim {
                    return Err(Error::ContextMismatch(
                        "decreasing block dimensions differ between models".into(),
                    ));
                }
                for col in 0..mono_block.dim {
                    let mut vf = CVec::zeros(free.dim);
                    vf[free_block.offset + col] = cplx(1.0, 0.0);
                    let mut vm = CVec::zeros(mono.dim);
                    vm[mono_block.offset + col] = cplx(1.0, 0.0);
                    let of = free.apply_letter(m.index, bj, &vf)?;
                    let om = mono.apply_letter(m.index, bj, &vm)?;
                    // Compare on decreasing blocks; measure the rest.
                    for fb in &free.blocks {
                        let seg = of.rows(fb.offset, fb.dim).into_owned();
                        if fb.tuple.is_empty() || dec_mask[fb.offset] {
                            let mono_bi = mono
                                .block_of(&fb.tuple)
                                .ok_or_else(|| Error::ContextMismatch("missing".into()))?;
                            let mseg = om
                                .rows(mono.blocks[mono_bi].offset, mono.blocks[mono_bi].dim)
                                .into_owned();
                            dev = dev.max(max_abs(&CMat::from_columns(&[seg - mseg])));
                        } else {
                            escape = escape.max(max_abs(&CMat::from_columns(&[seg])));
                        }
                    }
                }
            }
        }
    }
    Ok((dev, escape))
}
