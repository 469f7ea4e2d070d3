//! Base-valued monotone operator model and its factorization identities.
//!
//! The model represents each family member on the decreasing-chain module
//! of the family; vacuum expectations of products are the monotone
//! moments.  Beyond the moment agreement, the model satisfies operator
//! identities: the expectation of a word whose first (or last) index
//! dominates its neighbor factorizes, an interior peak collapses onto its
//! expectation, and for any pair of indices `k < l` the product of
//! operators at `k` and `l` agrees with the product where the second is
//! replaced by its expectation, on the orthogonal complement of chains
//! leading at `l`.

use crate::algebra::Family;
use crate::error::{Error, Result};
use crate::linalg::{cplx, max_abs, op_norm, CMat};
use crate::space::{decreasing_module, TupleSpace};
use crate::word::{merge_adjacent, Letter, Word};

/// Monotone-product operator model of a family.
#[derive(Debug, Clone)]
pub struct MonotoneModel {
    /// The family.
    pub family: Family,
    /// Decreasing-chain module carrying the model.
    pub space: TupleSpace,
}

/// Builds the model.
pub fn monotone_model(family: &Family) -> Result<MonotoneModel> {
    Ok(MonotoneModel { family: family.clone(), space: decreasing_module(family)? })
}

impl MonotoneModel {
    /// Vacuum expectation of a word, in the base ambient algebra.
    pub fn moment(&self, word: &Word) -> Result<CMat> {
        let w = word.reduced(&self.family)?;
        let v = self.space.apply_word(&w, &self.space.xi)?;
        Ok(self.space.vacuum_expectation(&v))
    }

    /// Deviation between the model moment and the rule evaluator.
    pub fn moment_vs_rules(&self, word: &Word) -> Result<f64> {
        let got = self.moment(word)?;
        let want = crate::engine::eval_monotone(&self.family, word)?;
        Ok(max_abs(&(got - want)))
    }

    /// For a word whose first index strictly dominates the second:
    /// deviation of `E(w)` from `E(a_1) E(rest)`.
    pub fn front_factorization(&self, word: &Word) -> Result<f64> {
        let w = word.reduced(&self.family)?;
        if w.letters.len() < 2 || w.letters[0].index <= w.letters[1].index {
            return Err(Error::ContextMismatch(
                "front factorization needs a dominating first index".into(),
            ));
        }
        let lhs = self.moment(&w)?;
        let head = self.moment(&Word {
            coeff: w.coeff,
            letters: vec![w.letters[0].clone()],
        })?;
        let rest = self.moment(&Word {
            coeff: cplx(1.0, 0.0),
            letters: w.letters[1..].to_vec(),
        })?;
        Ok(max_abs(&(lhs - head * rest)))
    }

    /// For a word whose last index strictly dominates the one before it:
    /// deviation of `E(w)` from `E(init) E(a_n)`.
    pub fn back_factorization(&self, word: &Word) -> Result<f64> {
        let w = word.reduced(&self.family)?;
        let n = w.letters.len();
        if n < 2 || w.letters[n - 1].index <= w.letters[n - 2].index {
            return Err(Error::ContextMismatch(
                "back factorization needs a dominating last index".into(),
            ));
        }
        let lhs = self.moment(&w)?;
        let init = self.moment(&Word {
            coeff: w.coeff,
            letters: w.letters[..n - 1].to_vec(),
        })?;
        let tail = self.moment(&Word {
            coeff: cplx(1.0, 0.0),
            letters: vec![w.letters[n - 1].clone()],
        })?;
        Ok(max_abs(&(lhs - init * tail)))
    }

    /// For an interior peak at position `l`: deviation of `E(w)` from the
    /// collapsed word where the peak letter is replaced by its expectation
    /// absorbed into the left neighbor.
    pub fn peak_collapse(&self, word: &Word, l: usize) -> Result<f64> {
        let w = word.reduced(&self.family)?;
        let n = w.letters.len();
        if l == 0 || l + 1 >= n {
            return Err(Error::ContextMismatch("peak position is not interior".into()));
        }
        let (il, ic, ir) = (
            w.letters[l - 1].index,
            w.letters[l].index,
            w.letters[l + 1].index,
        );
        if ic <= il || ic <= ir {
            return Err(Error::ContextMismatch(
                "letter does not dominate both neighbors".into(),
            ));
        }
        let member = self.family.member(ic)?;
        let ev = member.psi.apply(&w.letters[l].elem)?;
        let left = self.family.member(il)?;
        let emb = left.psi.embed_b(&ev)?;
        let mut collapsed = w.letters.clone();
        collapsed[l - 1].elem = &collapsed[l - 1].elem * emb;
        collapsed.remove(l);
        let cw = Word { coeff: w.coeff, letters: merge_adjacent(collapsed) };
        let lhs = self.moment(&w)?;
        let rhs = self.moment(&cw)?;
        Ok(max_abs(&(lhs - rhs)))
    }

    /// Operator-level expectation insertion for a three-letter product
    /// `A_1 A_2 A_3`: the norm of
    /// `(A_1 A_2 A_3 - A_1 embed(psi(a_2)) A_3)` restricted to the
    /// orthogonal complement of chains leading at the middle index.
    /// Vanishes exactly when the middle index dominates both neighbors.
    pub fn insertion_deviation(&self, letters: &[Letter; 3]) -> Result<f64> {
        let [l1, l2, l3] = letters;
        let m2 = self.family.member(l2.index)?;
        let ev = m2.psi.apply(&l2.elem)?;
        let m1 = self.family.member(l1.index)?;
        let emb = m1.psi.embed_b(&ev)?;

        let lhs = self.space.dense_word(&Word::from_letters(vec![
            l1.clone(),
            l2.clone(),
            l3.clone(),
        ]))?;
        let rhs = self.space.dense_word(&Word::from_letters(vec![
            Letter { index: l1.index, elem: &l1.elem * emb },
            l3.clone(),
        ]))?;
        let mut d = lhs - rhs;
        // Zero the columns inside chains leading at the middle index.
        let mask = self.space.mask(|t| t.first() == Some(&l2.index));
        for (j, &inside) in mask.iter().enumerate() {
            if inside {
                d.column_mut(j).fill(cplx(0.0, 0.0));
            }
        }
        Ok(op_norm(&d))
    }
}
