//! Moment evaluator for product families.
//!
//! One recursion evaluates all the rule systems in this crate.  Given a
//! family of algebras with expectations `psi_i` onto a base `B` and a
//! matching family of linear maps `theta_i` into a common target, the
//! value of a reduced word is computed by repeatedly applying one of the
//! admissible reductions:
//!
//! * front peel, when the first index exceeds the second: the first letter
//!   maps out through `theta` and multiplies the value of the rest;
//! * back peel, when the last index exceeds the one before it: symmetric;
//! * interior peak, when a letter's index exceeds both neighbors: the
//!   letter is replaced by its `psi`-expectation absorbed into the left
//!   neighbor, plus a correction word weighted by `theta_i(a) -
//!   embed(psi_i(a))`.
//!
//! Every reduced word of length at least two admits a move (the leftmost
//! occurrence of the maximal index always works), and the value does not
//! depend on the order in which moves are applied; the verification suites
//! confirm that numerically.
//!
//! Specializations: taking `theta_i = psi_i` with target `B` evaluates
//! monotone moments; taking scalar `B` and `theta_i = phi_i` evaluates the
//! conditionally monotone moments of the pairs `(phi_i, psi_i)`.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, Family};
use crate::error::{Error, Result};
use crate::linalg::{eye, max_abs, CMat};
use crate::word::{key_of, merge_adjacent, Letter, Word};

/// Linear map from the algebra at one index into a common target algebra.
#[derive(Debug, Clone)]
pub struct TransferMap {
    /// Domain index.
    pub index: u32,
    /// Domain algebra.
    pub domain: Algebra,
    /// Image of each domain basis element in the target ambient algebra.
    pub images: Vec<CMat>,
}

impl TransferMap {
    /// Applies the map to a domain element.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        let c = self.domain.coeffs(x)?;
        let d = self.images[0].nrows();
        let mut out = CMat::zeros(d, d);
        for (j, img) in self.images.iter().enumerate() {
            out += img * c[j];
        }
        Ok(out)
    }
}

/// A family of maps `theta_i` into one target algebra containing `B`.
#[derive(Debug, Clone)]
pub struct TransferFamily {
    /// Common target algebra.
    pub target: Algebra,
    /// Image of each `B`-basis element in the target ambient algebra.
    pub embed: Vec<CMat>,
    /// Maps keyed by index.
    pub maps: BTreeMap<u32, TransferMap>,
}

impl TransferFamily {
    /// The identity system `theta_i = psi_i` with target `B`.
    pub fn expectations(family: &Family) -> Self {
        let maps = family
            .members
            .iter()
            .map(|m| {
                (
                    m.index,
                    TransferMap {
                        index: m.index,
                        domain: m.algebra.clone(),
                        images: m.psi.images.clone(),
                    },
                )
            })
            .collect();
        Self {
            target: family.b.clone(),
            embed: family.b.basis.clone(),
            maps,
        }
    }

    /// The system `theta_i = phi_i` with scalar target; requires every
    /// member to carry a scalar-valued `phi` and scalar `B`.
    pub fn primary_states(family: &Family) -> Result<Self> {
        if family.b.dim != 1 {
            return Err(Error::ContextMismatch(
                "state-pair evaluation needs a scalar base".into(),
            ));
        }
        let mut maps = BTreeMap::new();
        for m in &family.members {
            let phi = m.phi.as_ref().ok_or_else(|| {
                Error::CompatibilityFail(format!(
                    "member {} has no primary state",
                    m.index
                ))
            })?;
            maps.insert(
                m.index,
                TransferMap {
                    index: m.index,
                    domain: m.algebra.clone(),
                    images: phi.images.clone(),
                },
            );
        }
        Ok(Self {
            target: Algebra::scalars(),
            embed: vec![eye(1)],
            maps,
        })
    }

    /// Embeds a base element into the target.
    pub fn embed_b(&self, b: &Algebra, y: &CMat) -> Result<CMat> {
        let c = b.coeffs(y)?;
        let d = self.target.dim;
        let mut out = CMat::zeros(d, d);
        for (j, img) in self.embed.iter().enumerate() {
            out += img * c[j];
        }
        Ok(out)
    }

    /// Map at one index.
    pub fn map(&self, index: u32) -> Result<&TransferMap> {
        self.maps.get(&index).ok_or(Error::UnknownIndex(index))
    }
}

/// Reduction-order policy for the evaluator.
#[derive(Debug, Clone, Copy)]
pub enum EvalOrder {
    /// Always reduce at the leftmost occurrence of the maximal index.
    Canonical,
    /// Choose uniformly among admissible moves, seeded.
    Random(u64),
}

/// Whether the minimal-index pair must satisfy `phi = psi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strictness {
    /// Reject families whose minimal-index pair has `phi != psi`.
    Strict,
    /// Evaluate regardless; the rules never consult `psi` at the minimal
    /// index, so the value is still well defined.
    Relaxed,
}

enum Move {
    Front,
    Back,
    Peak(usize),
}

struct Evaluator<'a> {
    family: &'a Family,
    transfers: &'a TransferFamily,
    memo: HashMap<Vec<u8>, CMat>,
    rng: Option<ChaCha8Rng>,
}

impl<'a> Evaluator<'a> {
    fn target_identity(&self) -> CMat {
        eye(self.transfers.target.dim)
    }

    fn choose(&mut self, pattern: &[u32]) -> Move {
        let n = pattern.len();
        match &mut self.rng {
            None => {
                let mx = *pattern.iter().max().expect("nonempty");
                let p = pattern.iter().position(|&i| i == mx).expect("max exists");
                if p == 0 {
                    Move::Front
                } else if p == n - 1 {
                    Move::Back
                } else {
                    Move::Peak(p)
                }
            }
            Some(rng) => {
                let mut moves = Vec::new();
                if pattern[0] > pattern[1] {
                    moves.push(Move::Front);
                }
                if pattern[n - 1] > pattern[n - 2] {
                    moves.push(Move::Back);
                }
                for p in 1..n - 1 {
                    if pattern[p] > pattern[p - 1] && pattern[p] > pattern[p + 1] {
                        moves.push(Move::Peak(p));
                    }
                }
                let k = rng.gen_range(0..moves.len());
                moves.swap_remove(k)
            }
        }
    }

    fn eval(&mut self, letters: &[Letter]) -> Result<CMat> {
        match letters.len() {
            0 => return Ok(self.target_identity()),
            1 => return self.transfers.map(letters[0].index)?.apply(&letters[0].elem),
            _ => {}
        }
        let key = key_of(letters);
        if let Some(v) = self.memo.get(&key) {
            return Ok(v.clone());
        }
        let pattern: Vec<u32> = letters.iter().map(|l| l.index).collect();
        let value = match self.choose(&pattern) {
            Move::Front => {
                let head = self.transfers.map(letters[0].index)?.apply(&letters[0].elem)?;
                let rest = self.eval(&letters[1..])?;
                head * rest
            }
            Move::Back => {
                let n = letters.len();
                let tail = self
                    .transfers
                    .map(letters[n - 1].index)?
                    .apply(&letters[n - 1].elem)?;
                let init = self.eval(&letters[..n - 1])?;
                init * tail
            }
            Move::Peak(p) => {
                let letter = &letters[p];
                let member = self.family.member(letter.index)?;
                let psi_val = member.psi.apply(&letter.elem)?;
                // Collapsed word: expectation absorbed into the left neighbor.
                let left_member = self.family.member(letters[p - 1].index)?;
                let emb = left_member.psi.embed_b(&psi_val)?;
                let mut collapsed = letters.to_vec();
                collapsed[p - 1].elem = &collapsed[p - 1].elem * emb;
                collapsed.remove(p);
                let collapsed = merge_adjacent(collapsed);
                let t1 = self.eval(&collapsed)?;
                // Correction word: prefix * (theta - embed psi) * suffix.
                let corr = self.transfers.map(letter.index)?.apply(&letter.elem)?
                    - self.transfers.embed_b(&self.family.b, &psi_val)?;
                if max_abs(&corr) < 1.0e-15 {
                    t1
                } else {
                    let pre = self.eval(&letters[..p])?;
                    let suf = self.eval(&letters[p + 1..])?;
                    t1 + pre * corr * suf
                }
            }
        };
        self.memo.insert(key, value.clone());
        Ok(value)
    }
}

/// Evaluates the product value of a word under a transfer system.  The
/// word is validated and reduced first; the result lives in the target
/// ambient algebra.
pub fn eval_map_product(
    family: &Family,
    transfers: &TransferFamily,
    word: &Word,
    order: EvalOrder,
) -> Result<CMat> {
    let w = word.reduced(family)?;
    let mut ev = Evaluator {
        family,
        transfers,
        memo: HashMap::new(),
        rng: match order {
            EvalOrder::Canonical => None,
            EvalOrder::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        },
    };
    Ok(ev.eval(&w.letters)? * w.coeff)
}

/// Monotone moment of a word: the value of the expectation system, in the
/// base ambient algebra.
pub fn eval_monotone(family: &Family, word: &Word) -> Result<CMat> {
    let transfers = TransferFamily::expectations(family);
    eval_map_product(family, &transfers, word, EvalOrder::Canonical)
}

/// Conditionally monotone moment of a word for the state pairs
/// `(phi_i, psi_i)`: scalar value of the `phi`-system.
pub fn eval_cmonotone(family: &Family, word: &Word, strictness: Strictness) -> Result<Complex64> {
    if strictness == Strictness::Strict {
        check_min_pair(family)?;
    }
    let transfers = TransferFamily::primary_states(family)?;
    let v = eval_map_product(family, &transfers, word, EvalOrder::Canonical)?;
    Ok(v[(0, 0)])
}

/// Verifies that the minimal-index member has `phi = psi`.
pub fn check_min_pair(family: &Family) -> Result<()> {
    let m = family.member(family.min_index())?;
    let phi = m.phi.as_ref().ok_or_else(|| {
        Error::CompatibilityFail("minimal-index member has no primary state".into())
    })?;
    if !phi.same_map(&m.psi) {
        return Err(Error::CompatibilityFail(
            "minimal-index state pair must coincide".into(),
        ));
    }
    Ok(())
}

/// Evaluates one word under the canonical order and `n_orders` random
/// orders; returns the maximal entrywise deviation from the canonical
/// value.
pub fn order_independence_deviation(
    family: &Family,
    transfers: &TransferFamily,
    word: &Word,
    n_orders: usize,
    seed: u64,
) -> Result<f64> {
    let base = eval_map_product(family, transfers, word, EvalOrder::Canonical)?;
    let mut worst: f64 = 0.0;
    for r in 0..n_orders {
        let v = eval_map_product(
            family,
            transfers,
            word,
            EvalOrder::Random(seed.wrapping_add(r as u64)),
        )?;
        worst = worst.max(max_abs(&(&v - &base)));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{CondExp, FamilyMember};
    use crate::linalg::{cplx, random_density};
    use crate::word::random_word;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_member_family(seed: u64) -> Family {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mems = [1u32, 2]
            .iter()
            .map(|&i| {
                let a = Algebra::full_matrix(2);
                let psi =
                    CondExp::from_density(a.clone(), &random_density(&mut rng, 2, 0.05)).unwrap();
                let phi =
                    CondExp::from_density(a.clone(), &random_density(&mut rng, 2, 0.05)).unwrap();
                FamilyMember { index: i, algebra: a, psi, phi: Some(phi) }
            })
            .collect();
        Family::new(mems).unwrap()
    }

    #[test]
    fn alternating_square_factorizes() {
        let family = two_member_family(21);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let a = crate::word::random_element(&mut rng, &family, 1, false).unwrap();
        let b = crate::word::random_element(&mut rng, &family, 2, false).unwrap();
        let word = Word::from_letters(vec![
            Letter { index: 1, elem: a.clone() },
            Letter { index: 2, elem: b.clone() },
            Letter { index: 1, elem: a.clone() },
            Letter { index: 2, elem: b.clone() },
        ]);
        let got = eval_monotone(&family, &word).unwrap()[(0, 0)];
        let m1 = family.member(1).unwrap();
        let m2 = family.member(2).unwrap();
        let pa2 = m1.psi.scalar(&(&a * &a)).unwrap();
        let pb = m2.psi.scalar(&b).unwrap();
        assert!((got - pa2 * pb * pb).norm() < 1.0e-10);
    }

    #[test]
    fn interior_peak_has_correction() {
        let family = two_member_family(23);
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let a = crate::word::random_element(&mut rng, &family, 1, false).unwrap();
        let b = crate::word::random_element(&mut rng, &family, 2, false).unwrap();
        let word = Word::from_letters(vec![
            Letter { index: 1, elem: a.clone() },
            Letter { index: 2, elem: b.clone() },
            Letter { index: 1, elem: a.clone() },
        ]);
        let m1 = family.member(1).unwrap();
        let m2 = family.member(2).unwrap();
        let phi1 = m1.phi.as_ref().unwrap();
        let phi2 = m2.phi.as_ref().unwrap();
        let got = eval_cmonotone(&family, &word, Strictness::Relaxed).unwrap();
        let want = phi1.scalar(&(&a * &a)).unwrap() * m2.psi.scalar(&b).unwrap()
            + phi1.scalar(&a).unwrap()
                * (phi2.scalar(&b).unwrap() - m2.psi.scalar(&b).unwrap())
                * phi1.scalar(&a).unwrap();
        assert!((got - want).norm() < 1.0e-10);
    }

    #[test]
    fn monotone_value_is_order_independent() {
        let family = two_member_family(25);
        let transfers = TransferFamily::expectations(&family);
        let mut rng = ChaCha8Rng::seed_from_u64(26);
        for len in 2..=6 {
            let pat = crate::word::random_pattern(&mut rng, &[1, 2], len);
            let w = random_word(&mut rng, &family, &pat, false).unwrap();
            let dev = order_independence_deviation(&family, &transfers, &w, 8, 99).unwrap();
            assert!(dev < 1.0e-10, "deviation {dev:.3e} at length {len}");
        }
    }

    #[test]
    fn strict_mode_rejects_distinct_min_pair() {
        let family = two_member_family(27);
        let w = Word::one();
        assert!(matches!(
            eval_cmonotone(&family, &w, Strictness::Strict),
            Err(Error::CompatibilityFail(_))
        ));
        assert!(eval_cmonotone(&family, &w, Strictness::Relaxed).is_ok());
    }

    #[test]
    fn empty_word_evaluates_to_one() {
        let family = two_member_family(28);
        let mut w = Word::one();
        w.coeff = cplx(2.5, -0.5);
        let v = eval_monotone(&family, &w).unwrap();
        assert!((v[(0, 0)] - cplx(2.5, -0.5)).norm() < 1.0e-12);
    }
}
