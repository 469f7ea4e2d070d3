//! Scalar two-state operator model on decreasing chains.
//!
//! For a family of algebras with state pairs `(phi_i, psi_i)` this builds
//! the Hilbert space `C xi (+) sum H°_{i_1} (x) ... (x) H°_{i_n}` over
//! strictly decreasing tuples, where `H_i` carries both states of the
//! pair on one space ([`crate::gns::paired_gns`]): `pi_i` implements
//! `phi_i` at the cyclic vector and `sigma_i` implements `psi_i`.
//!
//! The operator assigned to an element `a` at index `k` acts as the
//! first-state representation `pi_k` on the vacuum and on single chains
//! at `k` (the range of the rank-one-plus-slot projection), and as the
//! second-state representation `sigma_k` everywhere else: on deeper
//! chains leading at `k` it acts on the leading factor, on chains
//! leading below `k` it multiplies by `psi_k(a)` and creates a centered
//! leading factor, and it annihilates chains leading above `k`.  Vacuum
//! expectations of products then realize the conditionally monotone
//! moments of the pairs.

use std::collections::{BTreeMap, HashMap};

use num_complex::Complex64;

use crate::algebra::Family;
use crate::error::{Error, Result};
use crate::gns::{complete_orthobasis, paired_gns};
use crate::linalg::{cplx, eye, max_abs, unvec, CMat, CVec};
use crate::word::Word;

/// Slot data: both representations in coordinates whose first vector is
/// the shared cyclic vector.
#[derive(Debug, Clone)]
pub struct PairSlot {
    /// Slot dimension.
    pub dim: usize,
    /// Centered dimension (`dim - 1`).
    pub cent: usize,
    /// First-state representation, per algebra basis element.
    pub pi: Vec<CMat>,
    /// Second-state representation, per algebra basis element.
    pub sigma: Vec<CMat>,
}

/// The decreasing-chain space of a scalar family with state pairs.
#[derive(Debug, Clone)]
pub struct PairChainSpace {
    /// The family (scalar base, every member carrying `phi`).
    pub family: Family,
    /// Slots keyed by index.
    pub slots: BTreeMap<u32, PairSlot>,
    /// Blocks `(tuple, offset, dim)`; block 0 is the vacuum line.
    pub blocks: Vec<(Vec<u32>, usize, usize)>,
    by_tuple: HashMap<Vec<u32>, usize>,
    /// Total dimension.
    pub dim: usize,
}

/// Builds the two-state chain space of a family.
pub fn pair_chain_space(family: &Family) -> Result<PairChainSpace> {
    if family.b.dim != 1 {
        return Err(Error::ContextMismatch(
            "two-state chain model needs a scalar base".into(),
        ));
    }
    let mut slots = BTreeMap::new();
    for m in &family.members {
        let phi = m.phi.as_ref().ok_or_else(|| {
            Error::CompatibilityFail(format!("member {} has no primary state", m.index))
        })?;
        let pg = paired_gns(phi, &m.psi)?;
        let t = complete_orthobasis(&pg.xi)?;
        let pi = pg.pi.iter().map(|p| t.adjoint() * p * &t).collect::<Vec<_>>();
        let sigma = pg.sigma.iter().map(|s| t.adjoint() * s * &t).collect::<Vec<_>>();
        slots.insert(
            m.index,
            PairSlot { dim: pg.dim, cent: pg.dim - 1, pi, sigma },
        );
    }

    // Decreasing tuples, by length then lexicographically.
    let indices: Vec<u32> = slots.keys().copied().collect();
    let mut blocks = vec![(Vec::new(), 0usize, 1usize)];
    let mut by_tuple = HashMap::new();
    by_tuple.insert(Vec::new(), 0usize);
    let mut dim = 1usize;
    let mut current: Vec<Vec<u32>> = vec![Vec::new()];
    for _len in 1..=indices.len() {
        let mut next = Vec::new();
        for t in &current {
            for &i in &indices {
                if t.first().map_or(true, |&f| i > f) {
                    let mut nt = vec![i];
                    nt.extend_from_slice(t);
                    next.push(nt);
                }
            }
        }
        next.sort();
        for t in &next {
            let rest_dim = blocks[by_tuple[&t[1..].to_vec()]].2;
            let bdim = slots[&t[0]].cent * rest_dim;
            by_tuple.insert(t.clone(), blocks.len());
            blocks.push((t.clone(), dim, bdim));
            dim += bdim;
        }
        current = next;
    }
    Ok(PairChainSpace { family: family.clone(), slots, blocks, by_tuple, dim })
}

impl PairChainSpace {
    /// The vacuum vector.
    pub fn xi(&self) -> CVec {
        let mut v = CVec::zeros(self.dim);
        v[0] = cplx(1.0, 0.0);
        v
    }

    /// Block index of a tuple.
    pub fn block_of(&self, tuple: &[u32]) -> Option<usize> {
        self.by_tuple.get(tuple).copied()
    }

    /// Applies the model operator of `elem` at index `k`.
    pub fn apply_letter(&self, k: u32, elem: &CMat, v: &CVec) -> Result<CVec> {
        let slot = self.slots.get(&k).ok_or(Error::UnknownIndex(k))?;
        let member = self.family.member(k)?;
        let c = member.algebra.coeffs(elem)?;
        let d = slot.dim;
        let mut pia = CMat::zeros(d, d);
        let mut sga = CMat::zeros(d, d);
        for (j, cj) in c.iter().enumerate() {
            pia += &slot.pi[j] * *cj;
            sga += &slot.sigma[j] * *cj;
        }
        let cent = slot.cent;
        // Sub-blocks in aligned coordinates [cyclic | centered].
        let pi_vv = pia[(0, 0)];
        let pi_cv = CVec::from_iterator(cent, (0..cent).map(|j| pia[(1 + j, 0)]));
        let pi_vc = CVec::from_iterator(cent, (0..cent).map(|j| pia[(0, 1 + j)]));
        let pi_cc = pia.view((1, 1), (cent, cent)).into_owned();
        let sg_vv = sga[(0, 0)];
        let sg_cv = CVec::from_iterator(cent, (0..cent).map(|j| sga[(1 + j, 0)]));
        let sg_vc = CVec::from_iterator(cent, (0..cent).map(|j| sga[(0, 1 + j)]));
        let sg_cc = sga.view((1, 1), (cent, cent)).into_owned();

        let mut out = CVec::zeros(self.dim);
        for (tuple, offset, bdim) in &self.blocks {
            let x = v.rows(*offset, *bdim).into_owned();
            if max_abs(&CMat::from_columns(&[x.clone()])) == 0.0 {
                continue;
            }
            match tuple.first().copied() {
                None => {
                    // Vacuum: first-state branch.
                    out[0] += pi_vv * x[0];
                    let ti = self.by_tuple[&vec![k]];
                    let (_, toff, _) = self.blocks[ti];
                    add(&mut out, toff, &(&pi_cv * x[0]));
                }
                Some(f) if f > k => {}
                Some(f) if f == k => {
                    if tuple.len() == 1 {
                        // Single chain at k: first-state branch.
                        out[0] += pi_vc.dot(&x);
                        add(&mut out, *offset, &(&pi_cc * &x));
                    } else {
                        // Deeper chain at k: second-state on the leading slot.
                        let rest_t = tuple[1..].to_vec();
                        let ri = self.by_tuple[&rest_t];
                        let (_, roff, rdim) = self.blocks[ri];
                        let m = unvec(&x, rdim, cent);
                        add(&mut out, roff, &(&m * &sg_vc));
                        let m2 = &m * sg_cc.transpose();
                        add(
                            &mut out,
                            *offset,
                            &CVec::from_iterator(rdim * cent, m2.iter().copied()),
                        );
                    }
                }
                Some(_) => {
                    // Leading index below k: second-state multiply + create.
                    add(&mut out, *offset, &(&x * sg_vv));
                    let mut target = vec![k];
                    target.extend_from_slice(tuple);
                    let ti = self.by_tuple[&target];
                    let (_, toff, _) = self.blocks[ti];
                    let m = &x * sg_cv.transpose();
                    add(
                        &mut out,
                        toff,
                        &CVec::from_iterator(bdim * cent, m.iter().copied()),
                    );
                }
            }
        }
        Ok(out)
    }

    /// Applies a word (letters act right to left).
    pub fn apply_word(&self, word: &Word, v: &CVec) -> Result<CVec> {
        let mut cur = v * word.coeff;
        for l in word.letters.iter().rev() {
            cur = self.apply_letter(l.index, &l.elem, &cur)?;
        }
        Ok(cur)
    }

    /// Vacuum expectation of a word.
    pub fn moment(&self, word: &Word) -> Result<Complex64> {
        Ok(self.apply_word(word, &self.xi())?[0])
    }

    /// Dense matrix of one letter action.
    pub fn dense_letter(&self, k: u32, elem: &CMat) -> Result<CMat> {
        let mut m = CMat::zeros(self.dim, self.dim);
        for j in 0..self.dim {
            let mut e = CVec::zeros(self.dim);
            e[j] = cplx(1.0, 0.0);
            m.set_column(j, &self.apply_letter(k, elem, &e)?);
        }
        Ok(m)
    }

    /// Dense matrix of a word action.
    pub fn dense_word(&self, word: &Word) -> Result<CMat> {
        let mut m = eye(self.dim) * word.coeff;
        for l in word.letters.iter().rev() {
            m = self.dense_letter(l.index, &l.elem)? * m;
        }
        Ok(m)
    }

    /// Coordinate mask over blocks: `pred` receives each tuple.
    pub fn mask(&self, pred: impl Fn(&[u32]) -> bool) -> Vec<bool> {
        let mut m = vec![false; self.dim];
        for (tuple, offset, bdim) in &self.blocks {
            if pred(tuple) {
                for j in 0..*bdim {
                    m[offset + j] = true;
                }
            }
        }
        m
    }

    /// Applies the word to the vacuum and measures how far the residual
    /// (after removing the vacuum component) escapes the chains leading
    /// at or below the word's first index.  Returns (moment, escape).
    pub fn vacuum_residual(&self, word: &Word) -> Result<(Complex64, f64)> {
        let w = word.reduced(&self.family)?;
        let v = self.apply_word(&w, &self.xi())?;
        let phi = v[0];
        if w.letters.is_empty() {
            return Ok((phi, 0.0));
        }
        let lead = w.letters[0].index;
        let mut escape = 0.0f64;
        for (tuple, offset, bdim) in &self.blocks {
            let keep = match tuple.first() {
                None => false,
                Some(&f) => f <= lead,
            };
            if !keep && !tuple.is_empty() {
                for j in 0..*bdim {
                    escape = escape.max(v[offset + j].norm());
                }
            }
        }
        Ok((phi, escape))
    }
}

fn add(out: &mut CVec, offset: usize, v: &CVec) {
    let mut seg = out.rows_mut(offset, v.nrows());
    seg += v;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::{Algebra, CondExp, FamilyMember};
    use crate::engine::{eval_cmonotone, Strictness};
    use crate::linalg::random_density;
    use crate::word::{random_pattern, random_word};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pair_family(seed: u64, n: usize) -> Family {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let members = (1..=n as u32)
            .map(|i| {
                let a = Algebra::full_matrix(2);
                let psi =
                    CondExp::from_density(a.clone(), &random_density(&mut rng, 2, 0.05))
                        .unwrap();
                let phi =
                    CondExp::from_density(a.clone(), &random_density(&mut rng, 2, 0.05))
                        .unwrap();
                FamilyMember { index: i, algebra: a, psi, phi: Some(phi) }
            })
            .collect();
        Family::new(members).unwrap()
    }

    #[test]
    fn dimensions_of_three_site_space() {
        let family = pair_family(51, 3);
        let space = pair_chain_space(&family).unwrap();
        // Paired slots on M2: dimension 8, centered 7.
        assert_eq!(space.dim, 1 + 3 * 7 + 3 * 49 + 343);
    }

    #[test]
    fn single_letters_give_first_state() {
        let family = pair_family(52, 2);
        let space = pair_chain_space(&family).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        for k in [1u32, 2] {
            let a = crate::word::random_element(&mut rng, &family, k, false).unwrap();
            let w = Word::from_letters(vec![crate::word::Letter { index: k, elem: a.clone() }]);
            let got = space.moment(&w).unwrap();
            let want = family.member(k).unwrap().phi.as_ref().unwrap().scalar(&a).unwrap();
            assert!((got - want).norm() < 1.0e-10);
        }
    }

    #[test]
    fn moments_match_rule_evaluator() {
        let family = pair_family(54, 3);
        let space = pair_chain_space(&family).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for len in 1..=5 {
            for _ in 0..6 {
                let pat = random_pattern(&mut rng, &[1, 2, 3], len);
                let w = random_word(&mut rng, &family, &pat, false).unwrap();
                let got = space.moment(&w).unwrap();
                let want = eval_cmonotone(&family, &w, Strictness::Relaxed).unwrap();
                assert!(
                    (got - want).norm() < 1.0e-9,
                    "pattern {pat:?}: model {got} rule {want}"
                );
            }
        }
    }

    #[test]
    fn model_operators_are_star_homomorphisms() {
        let family = pair_family(56, 2);
        let space = pair_chain_space(&family).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        for k in [1u32, 2] {
            let a = crate::word::random_element(&mut rng, &family, k, false).unwrap();
            let b = crate::word::random_element(&mut rng, &family, k, false).unwrap();
            let ja = space.dense_letter(k, &a).unwrap();
            let jb = space.dense_letter(k, &b).unwrap();
            let jab = space.dense_letter(k, &(&a * &b)).unwrap();
            assert!(max_abs(&(&ja * &jb - jab)) < 1.0e-9);
            let jas = space.dense_letter(k, &a.adjoint()).unwrap();
            assert!(max_abs(&(jas - ja.adjoint())) < 1.0e-9);
        }
    }

    #[test]
    fn residual_stays_below_leading_index() {
        let family = pair_family(58, 3);
        let space = pair_chain_space(&family).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        for _ in 0..10 {
            let len = 2 + (rng_usize(&mut rng) % 4);
            let pat = random_pattern(&mut rng, &[1, 2, 3], len);
            let w = random_word(&mut rng, &family, &pat, false).unwrap();
            let (_, escape) = space.vacuum_residual(&w).unwrap();
            assert!(escape < 1.0e-10, "pattern {pat:?} escape {escape:.3e}");
        }
    }

    fn rng_usize(rng: &mut ChaCha8Rng) -> usize {
        use rand::Rng;
        rng.gen_range(0..usize::MAX)
    }
}
