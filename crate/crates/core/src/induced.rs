//! Conditional expectation onto one factor and representations induced
//! from it.
//!
//! A unital representation of the factor at `i0` on a Hilbert space `K`
//! induces a representation of the whole product on a space assembled
//! from `K` and decreasing chains not ending at `i0`, each chain
//! tensored with `K` over the base.  Letters at the factor index act on
//! the `K` block through the given representation and never create a
//! chain there; all other letters act by the usual chain rules, with
//! base elements moving through the chain into `K`.
//!
//! Inducing the factor's own separated completion makes the fiber block
//! a faithful copy of that completion, invariant under factor letters;
//! compressing a product operator to it and pulling the result back
//! through the left regular action defines a conditional expectation
//! from the product algebra onto the factor.  Composing it with the
//! member state recovers the vacuum state exactly when `i0` is the
//! minimal index: above it, letters of the factor multiply across a
//! dead lower valley inside the compression while the vacuum state
//! evaluates them separately.

use std::collections::{BTreeMap, HashMap};

use crate::algebra::{Algebra, Family, TOL_RANK};
use crate::error::{Error, Result};
use crate::gns::{b_ortho, gns_module, BOrtho, GnsModule};
use crate::linalg::{cplx, eye, gram_reduce, kron, lstsq, max_abs, unvec, vec_mat, CMat, CVec};
use crate::space::Slot;
use crate::word::Word;

/// Conditional expectation from the product algebra onto one factor,
/// realized as the fiber-block compression of the representation induced
/// from the factor's separated completion.
///
/// The fiber block is a full copy of that completion (its vacuum line
/// together with the centered complement), so compressing a product
/// operator to it yields the left action of a unique factor element;
/// compressing on the plain decreasing-chain module instead would lose
/// the centered complement for letters below the factor index, whose
/// actions annihilate the chain at the factor index.
#[derive(Debug, Clone)]
pub struct FactorExpectation {
    /// The family.
    pub family: Family,
    /// Target factor index.
    pub i0: u32,
    /// Induced representation with the factor completion as fiber.
    pub rep: InducedRep,
    /// Columns `vec(L_j)` of the fiber actions of the factor basis
    /// elements, for the pullback.
    amat: CMat,
}

/// Builds the conditional expectation onto the factor at `i0`.
pub fn factor_expectation(family: &Family, i0: u32) -> Result<FactorExpectation> {
    let member = family.member(i0)?;
    if !member.psi.gns_faithful()? {
        return Err(Error::CompatibilityFail(format!(
            "the separated completion at index {i0} does not carry the factor faithfully"
        )));
    }
    let (rep, _v0) = gns_induced(family, i0)?;
    let na = member.algebra.nbasis();
    let k = rep.k_dim;
    let mut amat = CMat::zeros(k * k, na);
    for (j, w) in member.algebra.basis.iter().enumerate() {
        amat.set_column(j, &vec_mat(&rep.fiber_of(w)?));
    }
    Ok(FactorExpectation { family: family.clone(), i0, rep, amat })
}

impl FactorExpectation {
    /// Fiber dimension of the compression corner.
    pub fn corner_dim(&self) -> usize {
        self.rep.k_dim
    }

    /// Pulls a fiber-block compression back to a factor element.
    fn pull_back(&self, comp: &CMat) -> Result<CMat> {
        let member = self.family.member(self.i0)?;
        let rhs = CMat::from_columns(&[vec_mat(comp)]);
        let c = lstsq(&self.amat, &rhs)?;
        let scale = 1.0f64.max(max_abs(comp));
        let res = (&self.amat * &c - &rhs).norm() / scale;
        if res > 1.0e-8 {
            return Err(Error::NotInImage(format!(
                "fiber compression is not a factor action, residual {res:.3e}"
            )));
        }
        Ok(member.algebra.element(&c.column(0).into_owned()))
    }

    /// Conditional expectation of a product word, as a factor element.
    pub fn apply_word(&self, word: &Word) -> Result<CMat> {
        let k = self.rep.k_dim;
        let mut comp = CMat::zeros(k, k);
        for c in 0..k {
            let mut e = CVec::zeros(self.rep.dim);
            e[c] = cplx(1.0, 0.0);
            let y = self.rep.apply_word(word, &e)?;
            for r in 0..k {
                comp[(r, c)] = y[r];
            }
        }
        self.pull_back(&comp)
    }

    /// Conditional expectation of an operator on the induced space.
    pub fn apply_dense(&self, op: &CMat) -> Result<CMat> {
        if op.nrows() != self.rep.dim || op.ncols() != self.rep.dim {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, induced dimension is {}",
                op.nrows(),
                op.ncols(),
                self.rep.dim
            )));
        }
        let k = self.rep.k_dim;
        let comp = op.view((0, 0), (k, k)).into_owned();
        self.pull_back(&comp)
    }
}

/// One orthogonal block of an induced-representation space.
#[derive(Debug, Clone)]
pub struct KBlock {
    /// Index tuple; empty for the fiber block.
    pub tuple: Vec<u32>,
    /// Coordinate offset.
    pub offset: usize,
    /// Block dimension.
    pub dim: usize,
    /// Rest-chain block index (self for the fiber block).
    rest: usize,
    /// Block coordinates -> product coordinates; `None` for the fiber.
    split: Option<CMat>,
    /// Product coordinates -> block coordinates; `None` for the fiber.
    proj: Option<CMat>,
    /// Action of each orthonormal base-algebra basis element.
    bact: Vec<CMat>,
}

/// Representation of the product algebra induced from a representation
/// of the factor at `i0`.
#[derive(Debug, Clone)]
pub struct InducedRep {
    /// The family.
    pub family: Family,
    /// Factor index.
    pub i0: u32,
    /// Fiber dimension.
    pub k_dim: usize,
    /// Fiber action of each factor basis element.
    rho: Vec<CMat>,
    slots: BTreeMap<u32, Slot>,
    bo: BOrtho,
    /// Blocks; block 0 is the fiber.
    pub blocks: Vec<KBlock>,
    by_tuple: HashMap<Vec<u32>, usize>,
    /// Total dimension.
    pub dim: usize,
}

/// Builds the representation induced from the factor representation
/// sending the `j`-th basis element of the factor algebra to `rho[j]`
/// on a fiber of dimension `k_dim` (orthonormal coordinates).
pub fn induced_rep(
    family: &Family,
    i0: u32,
    k_dim: usize,
    rho: Vec<CMat>,
) -> Result<InducedRep> {
    let member = family.member(i0)?;
    let na = member.algebra.nbasis();
    if rho.len() != na {
        return Err(Error::ShapeMismatch(format!(
            "{} fiber actions for {} factor basis elements",
            rho.len(),
            na
        )));
    }
    for r in &rho {
        if r.nrows() != k_dim || r.ncols() != k_dim {
            return Err(Error::ShapeMismatch(format!(
                "fiber action is {}x{}, fiber dimension is {k_dim}",
                r.nrows(),
                r.ncols()
            )));
        }
    }
    let rho_of = |x: &CMat| -> Result<CMat> {
        let c = member.algebra.coeffs(x)?;
        let mut m = CMat::zeros(k_dim, k_dim);
        for (j, r) in rho.iter().enumerate() {
            m += r * c[j];
        }
        Ok(m)
    };
    if k_dim > 0 {
        // The fiber action must be a unital *-representation.
        let idm = rho_of(&member.algebra.identity())?;
        if max_abs(&(idm - eye(k_dim))) > 1.0e-8 {
            return Err(Error::ContextMismatch("fiber action is not unital".into()));
        }
        for (j, wj) in member.algebra.basis.iter().enumerate() {
            let adj = rho_of(&wj.adjoint())?;
            if max_abs(&(adj - rho[j].adjoint())) > 1.0e-8 {
                return Err(Error::ContextMismatch(
                    "fiber action does not respect adjoints".into(),
                ));
            }
            for (k, wk) in member.algebra.basis.iter().enumerate() {
                let prod = rho_of(&(wj * wk))?;
                if max_abs(&(prod - &rho[j] * &rho[k])) > 1.0e-8 {
                    return Err(Error::ContextMismatch(
                        "fiber action is not multiplicative".into(),
                    ));
                }
            }
        }
    }

    let bo = b_ortho(&family.b)?;
    let nb = family.b.nbasis();
    let slots = family
        .members
        .iter()
        .map(|m| Ok((m.index, Slot::from_gns(&gns_module(&m.psi)?)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;

    // Fiber block: base acts through the factor's copy of the base.
    let mut bact_k = Vec::with_capacity(nb);
    for w in &bo.w_mats {
        let img = member.psi.embed_b(w)?;
        bact_k.push(rho_of(&img)?);
    }
    let mut blocks = vec![KBlock {
        tuple: Vec::new(),
        offset: 0,
        dim: k_dim,
        rest: 0,
        split: None,
        proj: None,
        bact: bact_k,
    }];
    let mut by_tuple = HashMap::new();
    by_tuple.insert(Vec::new(), 0usize);
    let mut dim = k_dim;

    // Decreasing tuples not ending at the factor index, by length then
    // lexicographically.
    let indices: Vec<u32> = slots.keys().copied().collect();
    let mut current: Vec<Vec<u32>> = vec![Vec::new()];
    for _len in 1..=indices.len() {
        let mut next = Vec::new();
        for t in &current {
            for &i in &indices {
                let grows = t.first().map_or(i != i0, |&f| i > f);
                if grows {
                    let mut nt = vec![i];
                    nt.extend_from_slice(t);
                    next.push(nt);
                }
            }
        }
        next.sort();
        for t in &next {
            let idx = blocks.len();
            let blk = make_kblock(&family.b, &bo, &slots, &blocks, &by_tuple, t, dim)?;
            dim += blk.dim;
            by_tuple.insert(t.clone(), idx);
            blocks.push(blk);
        }
        current = next;
    }

    Ok(InducedRep { family: family.clone(), i0, k_dim, rho, slots, bo, blocks, by_tuple, dim })
}

/// Builds the representation induced from the separated completion of
/// the factor expectation (fiber = that completion, actions = left
/// multiplications).  Returns the representation and the fiber
/// coordinates of the completion's cyclic vector.
pub fn gns_induced(family: &Family, i0: u32) -> Result<(InducedRep, CVec)> {
    let member = family.member(i0)?;
    let g: GnsModule = gns_module(&member.psi)?;
    let rep = induced_rep(family, i0, g.dim, g.left.clone())?;
    Ok((rep, g.xi.clone()))
}

/// Centered block of the action of an orthonormal base basis element on
/// a slot; identity for a scalar base.
fn bcent(slot: &Slot, beta: usize) -> CMat {
    if slot.left_b.is_empty() {
        eye(slot.cent)
    } else {
        slot.left_b[beta]
            .view((slot.vac, slot.vac), (slot.cent, slot.cent))
            .into_owned()
    }
}

/// Base-valued inner product of two centered slot coordinates, as an
/// ambient base matrix.
fn cent_inner(slot: &Slot, a1: usize, a2: usize) -> CMat {
    if slot.inner.is_empty() {
        // Scalar base: centered coordinates are orthonormal.
        let z = if a1 == a2 { cplx(1.0, 0.0) } else { cplx(0.0, 0.0) };
        CMat::from_element(1, 1, z)
    } else {
        slot.inner[(slot.vac + a1) * slot.dim + (slot.vac + a2)].clone()
    }
}

fn make_kblock(
    b: &Algebra,
    bo: &BOrtho,
    slots: &BTreeMap<u32, Slot>,
    blocks: &[KBlock],
    by_tuple: &HashMap<Vec<u32>, usize>,
    tuple: &[u32],
    offset: usize,
) -> Result<KBlock> {
    let first = tuple[0];
    let slot = slots.get(&first).ok_or(Error::UnknownIndex(first))?;
    let rest_idx = *by_tuple
        .get(&tuple[1..].to_vec())
        .ok_or_else(|| Error::ContextMismatch("rest chain missing".into()))?;
    let rest = &blocks[rest_idx];
    let cent = slot.cent;
    let rdim = rest.dim;
    let prod = cent * rdim;
    let nb = b.nbasis();
    if prod == 0 {
        return Ok(KBlock {
            tuple: tuple.to_vec(),
            offset,
            dim: 0,
            rest: rest_idx,
            split: Some(CMat::zeros(0, 0)),
            proj: Some(CMat::zeros(0, 0)),
            bact: vec![CMat::zeros(0, 0); nb],
        });
    }

    // Hilbert-space Gram of product generators (alpha, r) -> alpha*rdim+r:
    // the base-valued overlap of leading factors acts on the rest block.
    let mut g = CMat::zeros(prod, prod);
    for a1 in 0..cent {
        for a2 in 0..cent {
            let ov = cent_inner(slot, a1, a2);
            let c = &bo.to_on * b.coeffs(&ov)?;
            let mut lov = CMat::zeros(rdim, rdim);
            for (gi, act) in rest.bact.iter().enumerate() {
                if c[gi].norm_sqr() > 0.0 {
                    lov += act * c[gi];
                }
            }
            for r1 in 0..rdim {
                for r2 in 0..rdim {
                    g[(a1 * rdim + r1, a2 * rdim + r2)] = lov[(r1, r2)];
                }
            }
        }
    }
    let (w, pm) = gram_reduce(&g, TOL_RANK);
    let bdim = w.ncols();
    let mut bact = Vec::with_capacity(nb);
    for beta in 0..nb {
        let prod_op = kron(&bcent(slot, beta), &eye(rdim));
        bact.push(&pm * prod_op * &w);
    }
    Ok(KBlock {
        tuple: tuple.to_vec(),
        offset,
        dim: bdim,
        rest: rest_idx,
        split: Some(w),
        proj: Some(pm),
        bact,
    })
}

impl InducedRep {
    /// Block index of a tuple.
    pub fn block_of(&self, tuple: &[u32]) -> Option<usize> {
        self.by_tuple.get(tuple).copied()
    }

    /// Fiber action of a factor element.
    pub fn fiber_of(&self, x: &CMat) -> Result<CMat> {
        let member = self.family.member(self.i0)?;
        let c = member.algebra.coeffs(x)?;
        let mut m = CMat::zeros(self.k_dim, self.k_dim);
        for (j, r) in self.rho.iter().enumerate() {
            m += r * c[j];
        }
        Ok(m)
    }

    /// Applies the induced action of `elem` (in the algebra at `k`).
    pub fn apply_letter(&self, k: u32, elem: &CMat, v: &CVec) -> Result<CVec> {
        if self.dim == 0 {
            return Ok(CVec::zeros(0));
        }
        let slot = self.slots.get(&k).ok_or(Error::UnknownIndex(k))?;
        let la = slot.left_of(elem)?;
        let vac = slot.vac;
        let cent = slot.cent;
        let low = la.view((0, vac), (vac, cent)).into_owned();
        let blk = la.view((vac, vac), (cent, cent)).into_owned();
        let hv = &la * &slot.xi;
        let psi_on = hv.rows(0, vac).into_owned();
        let hat0 = hv.rows(vac, cent).into_owned();

        let mut out = CVec::zeros(self.dim);
        for block in self.blocks.iter() {
            if block.dim == 0 {
                continue;
            }
            let x = v.rows(block.offset, block.dim).into_owned();
            if max_abs(&CMat::from_columns(&[x.clone()])) == 0.0 {
                continue;
            }
            let first = block.tuple.first().copied();
            match first {
                None if k == self.i0 => {
                    // Factor letters act on the fiber directly and do not
                    // create a chain there.
                    let y = self.fiber_of(elem)? * &x;
                    add_seg(&mut out, 0, &y);
                }
                Some(f) if f > k => {}
                Some(f) if f == k => {
                    let rest = &self.blocks[block.rest];
                    let p = match &block.split {
                        Some(w) => w * &x,
                        None => x.clone(),
                    };
                    let m = unvec(&p, rest.dim, cent);
                    // Lowering: the base-valued overlap acts on the rest.
                    let mut q = CVec::zeros(rest.dim);
                    for g in 0..vac {
                        let col = &m * low.row(g).transpose();
                        q += &rest.bact[g] * col;
                    }
                    add_seg(&mut out, rest.offset, &q);
                    // Same-block action on the leading factor.
                    let m2 = &m * blk.transpose();
                    let p2 = CVec::from_iterator(rest.dim * cent, m2.iter().copied());
                    let y = match &block.proj {
                        Some(pm) => pm * p2,
                        None => p2,
                    };
                    add_seg(&mut out, block.offset, &y);
                }
                _ => {
                    // Fiber block (k != i0) or leading index below k.
                    // Expectation part: base action of psi(elem).
                    let mut q = CVec::zeros(block.dim);
                    for g in 0..vac {
                        if psi_on[g].norm_sqr() > 0.0 {
                            q += &block.bact[g] * &x * psi_on[g];
                        }
                    }
                    add_seg(&mut out, block.offset, &q);
                    // Creation: prepend the centered class of the letter.
                    let mut target = vec![k];
                    target.extend_from_slice(&block.tuple);
                    if let Some(&ti) = self.by_tuple.get(&target) {
                        let tb = &self.blocks[ti];
                        if tb.dim > 0 {
                            let m = &x * hat0.transpose();
                            let p = CVec::from_iterator(block.dim * cent, m.iter().copied());
                            let y = match &tb.proj {
                                Some(pm) => pm * p,
                                None => p,
                            };
                            add_seg(&mut out, tb.offset, &y);
                        }
                    } else {
                        return Err(Error::ContextMismatch(format!(
                            "creation target {target:?} missing"
                        )));
                    }
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

    /// Base-valued expectation of a word at a fiber vector, recovered
    /// from scalar overlaps against the base action on the fiber.
    pub fn moment_b(&self, word: &Word, v0: &CVec) -> Result<CMat> {
        if v0.len() != self.k_dim {
            return Err(Error::ShapeMismatch(format!(
                "fiber vector has length {}, fiber dimension is {}",
                v0.len(),
                self.k_dim
            )));
        }
        let mut v = CVec::zeros(self.dim);
        v.rows_mut(0, self.k_dim).copy_from(v0);
        let outv = self.apply_word(word, &v)?;
        let out0 = outv.rows(0, self.k_dim).into_owned();
        let mut m = CMat::zeros(self.family.b.dim, self.family.b.dim);
        for (beta, w) in self.bo.w_mats.iter().enumerate() {
            let probe = &self.blocks[0].bact[beta] * v0;
            let s = probe.dotc(&out0);
            m += w * s;
        }
        Ok(m)
    }

    /// Coordinate mask selecting blocks whose tuples satisfy a predicate.
    pub fn mask(&self, pred: impl Fn(&[u32]) -> bool) -> Vec<bool> {
        let mut m = vec![false; self.dim];
        for block in &self.blocks {
            if pred(&block.tuple) {
                for j in 0..block.dim {
                    m[block.offset + j] = true;
                }
            }
        }
        m
    }
}

fn add_seg(out: &mut CVec, offset: usize, v: &CVec) {
    let mut seg = out.rows_mut(offset, v.nrows());
    seg += v;
}
