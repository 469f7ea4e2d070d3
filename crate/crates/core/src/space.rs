//! Chain-indexed module spaces.
//!
//! A [`TupleSpace`] is an orthogonal sum of a vacuum block (a copy of the
//! base algebra `B`) and one block per index tuple, the block for
//! `(i_1, ..., i_n)` realizing the interior tensor product over `B` of the
//! centered slot spaces at those indices.  Two tuple regimes are used:
//! strictly decreasing tuples (the monotone product of the slot modules)
//! and alternating tuples up to a depth bound (a truncation of the free
//! product).  All coordinates are orthonormal with respect to the
//! normalized trace of `B`-valued inner products, so operator adjoints are
//! conjugate transposes.
//!
//! The letter action implemented by [`TupleSpace::apply_letter`] sends an
//! element `a` of the slot algebra at index `k` to the operator that
//!
//! * annihilates blocks whose leading index exceeds `k`;
//! * acts on the leading tensor factor when the leading index equals `k`,
//!   splitting into a same-block part and a lowering part that moves the
//!   `B`-valued overlap onto the remaining chain;
//! * otherwise multiplies by the left action of the expectation value and
//!   creates the centered class of `a` as a new leading factor.
//!
//! On decreasing tuples this is exactly the product-space action of the
//! slot at `k`; on alternating tuples it is the free left action cut down
//! by the projection onto chains leading at or below `k`.

use std::collections::{BTreeMap, HashMap};

use crate::algebra::{Algebra, Family, TOL_RANK};
use crate::error::{Error, Result};
use crate::gns::{b_ortho, gns_module, BOrtho, GnsModule};
use crate::linalg::{cplx, eye, gram_reduce, kron, max_abs, unvec, CMat, CVec};
use crate::word::Word;

/// Which tuples index the chain blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TupleKind {
    /// Strictly decreasing tuples over the index set.
    Decreasing,
    /// Adjacent-distinct tuples up to the given length.
    Alternating {
        /// Maximal chain length carried exactly.
        depth: usize,
    },
}

/// Per-index slot data: orthonormal coordinates of a module with a
/// distinguished vacuum block aligned with the base orthonormalization.
#[derive(Debug, Clone)]
pub struct Slot {
    /// Acting algebra.
    pub a: Algebra,
    /// Total dimension.
    pub dim: usize,
    /// Vacuum block size (rank of `B`).
    pub vac: usize,
    /// Centered block size.
    pub cent: usize,
    /// Left action of each algebra basis element.
    pub left: Vec<CMat>,
    /// Left action of each orthonormal `B`-basis element; empty when `B`
    /// is the scalars.
    pub left_b: Vec<CMat>,
    /// Coordinates of the vacuum vector.
    pub xi: CVec,
    /// `B`-valued inner products of coordinate vectors, row-major
    /// `inner[p * dim + q]`; empty when `B` is the scalars.
    pub inner: Vec<CMat>,
}

impl Slot {
    /// Left action of an algebra element.
    pub fn left_of(&self, x: &CMat) -> Result<CMat> {
        let c = self.a.coeffs(x)?;
        let mut m = CMat::zeros(self.dim, self.dim);
        for (j, l) in self.left.iter().enumerate() {
            m += l * c[j];
        }
        Ok(m)
    }

    /// Centered-class coordinates of an element (the part of its vector
    /// outside the vacuum block).
    pub fn hat_cent(&self, x: &CMat) -> Result<CVec> {
        let h = self.left_of(x)? * &self.xi;
        Ok(h.rows(self.vac, self.cent).into_owned())
    }
}

impl Slot {
    /// Slot view of a separated completion.
    pub fn from_gns(m: &GnsModule) -> Result<Self> {
        let scalar = m.b.nbasis() == 1 && m.b.dim == 1;
        let left_b = if scalar {
            Vec::new()
        } else {
            m.bo
                .w_mats
                .iter()
                .map(|w| m.left_of(&m.psi.embed_b(w)?))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Slot {
            a: m.a.clone(),
            dim: m.dim,
            vac: m.vac,
            cent: m.cent,
            left: m.left.clone(),
            left_b,
            xi: m.xi.clone(),
            inner: if scalar { Vec::new() } else { m.inner.clone() },
        })
    }
}

/// Factorization of a chain block through (leading slot) x (rest chain).
#[derive(Debug, Clone)]
struct BlockFact {
    /// Index of the rest-chain block.
    rest: usize,
    /// Block coordinates -> product coordinates; `None` means identity
    /// (scalar base, product already orthonormal).
    split: Option<CMat>,
    /// Product coordinates -> block coordinates.
    proj: Option<CMat>,
}

/// One orthogonal block of a [`TupleSpace`].
#[derive(Debug, Clone)]
pub struct Block {
    /// Index tuple; empty for the vacuum block.
    pub tuple: Vec<u32>,
    /// Coordinate offset.
    pub offset: usize,
    /// Block dimension.
    pub dim: usize,
    fact: Option<BlockFact>,
    /// Left action of each orthonormal `B`-basis element on this block;
    /// `None` for a scalar base.
    left_b: Option<Vec<CMat>>,
    /// `B`-valued inner products of block coordinate vectors, row-major;
    /// `None` for a scalar base (coordinates are orthonormal).
    inner_b: Option<Vec<CMat>>,
}

/// Chain-indexed module space over a base algebra.
#[derive(Debug, Clone)]
pub struct TupleSpace {
    /// Base algebra.
    pub b: Algebra,
    /// Base orthonormalization.
    pub bo: BOrtho,
    /// Tuple regime.
    pub kind: TupleKind,
    /// Slots keyed by index.
    pub slots: BTreeMap<u32, Slot>,
    /// Blocks; block 0 is the vacuum.
    pub blocks: Vec<Block>,
    by_tuple: HashMap<Vec<u32>, usize>,
    /// Total dimension.
    pub dim: usize,
    /// Coordinates of the vacuum vector (class of the base unit).
    pub xi: CVec,
    scalar_b: bool,
}

/// Builds the decreasing-chain module of a family (slots are the
/// separated completions under the member expectations).
pub fn decreasing_module(family: &Family) -> Result<TupleSpace> {
    let slots = family
        .members
        .iter()
        .map(|m| Ok((m.index, Slot::from_gns(&gns_module(&m.psi)?)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    TupleSpace::build(family.b.clone(), slots, TupleKind::Decreasing)
}

/// Builds the alternating-chain module of a family, exact on chains of
/// length at most `depth`.
pub fn alternating_module(family: &Family, depth: usize) -> Result<TupleSpace> {
    let slots = family
        .members
        .iter()
        .map(|m| Ok((m.index, Slot::from_gns(&gns_module(&m.psi)?)?)))
        .collect::<Result<BTreeMap<_, _>>>()?;
    TupleSpace::build(family.b.clone(), slots, TupleKind::Alternating { depth })
}

impl TupleSpace {
    /// Builds a chain space from prepared slots.
    pub fn build(b: Algebra, slots: BTreeMap<u32, Slot>, kind: TupleKind) -> Result<Self> {
        let bo = b_ortho(&b)?;
        let nb = b.nbasis();
        let scalar_b = nb == 1 && b.dim == 1;
        for (i, s) in &slots {
            if s.vac != nb {
                return Err(Error::ContextMismatch(format!(
                    "slot {i} vacuum block has size {}, base rank is {nb}",
                    s.vac
                )));
            }
        }

        // Vacuum block.
        let mut blocks = Vec::new();
        let mut by_tuple = HashMap::new();
        let (vac_left, vac_inner) = if scalar_b {
            (None, None)
        } else {
            let mut lb = Vec::with_capacity(nb);
            for wb in &bo.w_mats {
                let mut m = CMat::zeros(nb, nb);
                for (g, wg) in bo.w_mats.iter().enumerate() {
                    let c = b.coeffs(&(wb * wg))?;
                    m.set_column(g, &(&bo.to_on * c));
                }
                lb.push(m);
            }
            let mut inner = Vec::with_capacity(nb * nb);
            for p in 0..nb {
                for q in 0..nb {
                    inner.push(bo.w_mats[p].adjoint() * &bo.w_mats[q]);
                }
            }
            (Some(lb), Some(inner))
        };
        blocks.push(Block {
            tuple: Vec::new(),
            offset: 0,
            dim: nb,
            fact: None,
            left_b: vac_left,
            inner_b: vac_inner,
        });
        by_tuple.insert(Vec::new(), 0usize);
        let mut dim = nb;

        // Chain blocks by increasing length, lexicographic within length.
        let indices: Vec<u32> = slots.keys().copied().collect();
        let maxlen = match kind {
            TupleKind::Decreasing => indices.len(),
            TupleKind::Alternating { depth } => depth,
        };
        let mut current: Vec<Vec<u32>> = vec![Vec::new()];
        for _len in 1..=maxlen {
            let mut next = Vec::new();
            for t in &current {
                for &i in &indices {
                    let ok = match kind {
                        TupleKind::Decreasing => t.first().map_or(true, |&f| i > f),
                        TupleKind::Alternating { .. } => t.first() != Some(&i),
                    };
                    if ok {
                        let mut nt = vec![i];
                        nt.extend_from_slice(t);
                        next.push(nt);
                    }
                }
            }
            next.sort();
            for t in &next {
                let idx = blocks.len();
                let blk = Self::make_block(&b, &bo, &slots, &blocks, &by_tuple, t, dim, scalar_b)?;
                dim += blk.dim;
                by_tuple.insert(t.clone(), idx);
                blocks.push(blk);
            }
            current = next;
        }

        let mut xi = CVec::zeros(dim);
        let xiv = if scalar_b {
            CVec::from_element(1, cplx(1.0, 0.0))
        } else {
            &bo.to_on * &b.unit
        };
        xi.rows_mut(0, nb).copy_from(&xiv);

        Ok(TupleSpace { b, bo, kind, slots, blocks, by_tuple, dim, xi, scalar_b })
    }

    #[allow(clippy::too_many_arguments)]
    fn make_block(
        b: &Algebra,
        bo: &BOrtho,
        slots: &BTreeMap<u32, Slot>,
        blocks: &[Block],
        by_tuple: &HashMap<Vec<u32>, usize>,
        tuple: &[u32],
        offset: usize,
        scalar_b: bool,
    ) -> Result<Block> {
        let first = tuple[0];
        let slot = slots.get(&first).ok_or(Error::UnknownIndex(first))?;
        let rest_idx = *by_tuple
            .get(&tuple[1..].to_vec())
            .ok_or_else(|| Error::ContextMismatch("rest chain missing".into()))?;
        let rest = &blocks[rest_idx];
        let cent = slot.cent;
        let rdim = rest.dim;
        let prod = cent * rdim;

        if scalar_b {
            return Ok(Block {
                tuple: tuple.to_vec(),
                offset,
                dim: prod,
                fact: Some(BlockFact { rest: rest_idx, split: None, proj: None }),
                left_b: None,
                inner_b: None,
            });
        }

        // B-valued Gram of product generators (alpha, r) -> alpha*rdim + r.
        let nb = b.nbasis();
        let rest_inner = rest.inner_b.as_ref().expect("nonscalar rest inner");
        let rest_left = rest.left_b.as_ref().expect("nonscalar rest left");
        let mut bg = vec![CMat::zeros(b.dim, b.dim); prod * prod];
        for a1 in 0..cent {
            for a2 in 0..cent {
                // Overlap of leading factors, as a left action on the rest.
                let ov = &slot.inner[(slot.vac + a1) * slot.dim + (slot.vac + a2)];
                let c = &bo.to_on * b.coeffs(ov)?;
                let mut lov = CMat::zeros(rdim, rdim);
                for g in 0..nb {
                    lov += &rest_left[g] * c[g];
                }
                for r1 in 0..rdim {
                    for r2 in 0..rdim {
                        // <e_r1, L(ov) e_r2>_B through the rest inner table.
                        let mut v = CMat::zeros(b.dim, b.dim);
                        for s in 0..rdim {
                            let w = lov[(s, r2)];
                            if w.norm_sqr() > 0.0 {
                                v += &rest_inner[r1 * rdim + s] * w;
                            }
                        }
                        bg[(a1 * rdim + r1) * prod + (a2 * rdim + r2)] = v;
                    }
                }
            }
        }
        // Scalarize and reduce.
        let mut g = CMat::zeros(prod, prod);
        for p in 0..prod {
            for q in 0..prod {
                g[(p, q)] = b.tau(&bg[p * prod + q]);
            }
        }
        let (w, pm) = gram_reduce(&g, TOL_RANK);
        let bdim = w.ncols();
        // Block-level B-valued inner table.
        let mut inner_b = Vec::with_capacity(bdim * bdim);
        for u in 0..bdim {
            for v in 0..bdim {
                let mut m = CMat::zeros(b.dim, b.dim);
                for p in 0..prod {
                    for q in 0..prod {
                        let c = w[(p, u)].conj() * w[(q, v)];
                        if c.norm_sqr() > 0.0 {
                            m += &bg[p * prod + q] * c;
                        }
                    }
                }
                inner_b.push(m);
            }
        }
        // Block-level left B action: acts on the leading factor.
        let mut left_b = Vec::with_capacity(nb);
        for la in &slot.left_b {
            let lcent = la.view((slot.vac, slot.vac), (cent, cent)).into_owned();
            let prod_op = kron(&lcent, &eye(rdim));
            left_b.push(&pm * prod_op * &w);
        }
        Ok(Block {
            tuple: tuple.to_vec(),
            offset,
            dim: bdim,
            fact: Some(BlockFact { rest: rest_idx, split: Some(w), proj: Some(pm) }),
            left_b: Some(left_b),
            inner_b: Some(inner_b),
        })
    }

    /// Block index of a tuple.
    pub fn block_of(&self, tuple: &[u32]) -> Option<usize> {
        self.by_tuple.get(tuple).copied()
    }

    /// Applies the letter action of `elem` (in the slot algebra at `k`).
    pub fn apply_letter(&self, k: u32, elem: &CMat, v: &CVec) -> Result<CVec> {
        let slot = self.slots.get(&k).ok_or(Error::UnknownIndex(k))?;
        let la = slot.left_of(elem)?;
        let vac = slot.vac;
        let cent = slot.cent;
        let low = la.view((0, vac), (vac, cent)).into_owned();
        let blk = la.view((vac, vac), (cent, cent)).into_owned();
        let hv = &la * &slot.xi;
        let psi_on = hv.rows(0, vac).into_owned();
        let hat0 = hv.rows(vac, cent).into_owned();
        let hat0_sz = max_abs(&CMat::from_columns(&[hat0.clone()]));

        let mut out = CVec::zeros(self.dim);
        for block in self.blocks.iter() {
            let x = v.rows(block.offset, block.dim).into_owned();
            if max_abs(&CMat::from_columns(&[x.clone()])) == 0.0 {
                continue;
            }
            let first = block.tuple.first().copied();
            match first {
                Some(f) if f > k => {
                    // Annihilated (monotone) / cut off (alternating filter).
                }
                Some(f) if f == k => {
                    let fact = block.fact.as_ref().expect("chain block fact");
                    let rest = &self.blocks[fact.rest];
                    let p = match &fact.split {
                        Some(w) => w * &x,
                        None => x.clone(),
                    };
                    let m = unvec(&p, rest.dim, cent);
                    // Lowering: move the B-valued overlap onto the rest.
                    let mut q = CVec::zeros(rest.dim);
                    if self.scalar_b {
                        let lr = low.row(0).transpose();
                        q += &m * lr;
                    } else {
                        let lb = rest.left_b.as_ref().expect("rest left action");
                        for g in 0..vac {
                            let col = &m * low.row(g).transpose();
                            q += &lb[g] * col;
                        }
                    }
                    add_seg(&mut out, rest.offset, &q);
                    // Same-block action on the leading factor.
                    let m2 = &m * blk.transpose();
                    let p2 = CVec::from_iterator(rest.dim * cent, m2.iter().copied());
                    let y = match &fact.proj {
                        Some(pm) => pm * p2,
                        None => p2,
                    };
                    add_seg(&mut out, block.offset, &y);
                }
                _ => {
                    // Leading index below k, or vacuum.
                    // Expectation part: left action of psi(a).
                    if block.tuple.is_empty() {
                        if self.scalar_b {
                            add_seg(&mut out, 0, &(&x * psi_on[0]));
                        } else {
                            let lb = self.blocks[0].left_b.as_ref().expect("vacuum left");
                            let mut q = CVec::zeros(block.dim);
                            for g in 0..vac {
                                q += &lb[g] * &x * psi_on[g];
                            }
                            add_seg(&mut out, 0, &q);
                        }
                    } else if self.scalar_b {
                        add_seg(&mut out, block.offset, &(&x * psi_on[0]));
                    } else {
                        let lb = block.left_b.as_ref().expect("chain left");
                        let mut q = CVec::zeros(block.dim);
                        for g in 0..vac {
                            q += &lb[g] * &x * psi_on[g];
                        }
                        add_seg(&mut out, block.offset, &q);
                    }
                    // Creation: prepend the centered class of the letter.
                    let xs = max_abs(&CMat::from_columns(&[x.clone()]));
                    if hat0_sz * xs > 0.0 {
                        let mut target = vec![k];
                        target.extend_from_slice(&block.tuple);
                        match self.by_tuple.get(&target) {
                            Some(&ti) => {
                                let tb = &self.blocks[ti];
                                let m = &x * hat0.transpose();
                                let p = CVec::from_iterator(
                                    block.dim * cent,
                                    m.iter().copied(),
                                );
                                let y = match tb.fact.as_ref().and_then(|f| f.proj.as_ref()) {
                                    Some(pm) => pm * p,
                                    None => p,
                                };
                                add_seg(&mut out, tb.offset, &y);
                            }
                            None => {
                                if hat0_sz * xs > 1.0e-12 {
                                    return Err(Error::DepthExceeded(block.tuple.len() + 1));
                                }
                            }
                        }
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

    /// `B`-valued inner product of two coordinate vectors.
    pub fn inner_b(&self, u: &CVec, v: &CVec) -> CMat {
        let mut out = CMat::zeros(self.b.dim, self.b.dim);
        for block in &self.blocks {
            let xu = u.rows(block.offset, block.dim);
            let xv = v.rows(block.offset, block.dim);
            match &block.inner_b {
                None => {
                    let s: num_complex::Complex64 = xu.dotc(&xv);
                    out[(0, 0)] += s;
                }
                Some(tbl) => {
                    for p in 0..block.dim {
                        for q in 0..block.dim {
                            let c = xu[p].conj() * xv[q];
                            if c.norm_sqr() > 0.0 {
                                out += &tbl[p * block.dim + q] * c;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Vacuum expectation `<xi, v>_B`.
    pub fn vacuum_expectation(&self, v: &CVec) -> CMat {
        self.inner_b(&self.xi, v)
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

    /// Projects a vector onto masked coordinates.
    pub fn project(&self, v: &CVec, mask: &[bool]) -> CVec {
        CVec::from_iterator(
            self.dim,
            v.iter()
                .zip(mask)
                .map(|(z, &keep)| if keep { *z } else { cplx(0.0, 0.0) }),
        )
    }

    /// Builds the chain vector `f_1 (x) ... (x) f_n` from centered slot
    /// coordinates, each pair being (index, centered coordinates).
    pub fn tensor_chain(&self, parts: &[(u32, CVec)]) -> Result<CVec> {
        let mut tuple: Vec<u32> = Vec::new();
        let mut coords = if self.scalar_b {
            CVec::from_element(1, cplx(1.0, 0.0))
        } else {
            (&self.bo.to_on * &self.b.unit).clone_owned()
        };
        for (idx, g) in parts.iter().rev() {
            let slot = self.slots.get(idx).ok_or(Error::UnknownIndex(*idx))?;
            if g.nrows() != slot.cent {
                return Err(Error::ShapeMismatch(format!(
                    "centered coordinates at index {idx} have size {}, slot has {}",
                    g.nrows(),
                    slot.cent
                )));
            }
            let mut nt = vec![*idx];
            nt.extend_from_slice(&tuple);
            let ti = self
                .by_tuple
                .get(&nt)
                .copied()
                .ok_or(Error::DepthExceeded(nt.len()))?;
            let m = &coords * g.transpose();
            let p = CVec::from_iterator(coords.nrows() * slot.cent, m.iter().copied());
            coords = match self.blocks[ti].fact.as_ref().and_then(|f| f.proj.as_ref()) {
                Some(pm) => pm * p,
                None => p,
            };
            tuple = nt;
        }
        let bi = *self.by_tuple.get(&tuple).expect("tuple exists");
        let mut out = CVec::zeros(self.dim);
        add_seg(&mut out, self.blocks[bi].offset, &coords);
        Ok(out)
    }

    /// Norm induced by the scalarized inner product (coordinates are
    /// orthonormal, so this is the Euclidean norm).
    pub fn norm(&self, v: &CVec) -> f64 {
        v.norm()
    }

    /// Assembles the module map induced blockwise by per-slot maps of the
    /// centered parts: the identity on the vacuum block and the tensor
    /// product of the per-slot maps on each chain block.  `cent_maps[i]`
    /// sends centered slot coordinates at index `i` in `self` to centered
    /// slot coordinates at `i` in `target`.  Well-definedness on the
    /// quotiented blocks requires each per-slot map to preserve `B`-valued
    /// inner products and intertwine the base actions; callers own those
    /// properties.  Returns the `target.dim x self.dim` matrix.
    pub fn chain_map(
        &self,
        target: &TupleSpace,
        cent_maps: &BTreeMap<u32, CMat>,
    ) -> Result<CMat> {
        if self.blocks[0].dim != target.blocks[0].dim {
            return Err(Error::ContextMismatch(
                "chain map endpoints have different vacuum ranks".into(),
            ));
        }
        for (i, m) in cent_maps {
            let sc = self.slots.get(i).ok_or(Error::UnknownIndex(*i))?.cent;
            let tc = target.slots.get(i).ok_or(Error::UnknownIndex(*i))?.cent;
            if m.nrows() != tc || m.ncols() != sc {
                return Err(Error::ShapeMismatch(format!(
                    "slot map at index {i} is {}x{}, expected {tc}x{sc}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        let mut out = CMat::zeros(target.dim, self.dim);
        let mut maps: HashMap<Vec<u32>, CMat> = HashMap::new();
        maps.insert(Vec::new(), eye(self.blocks[0].dim));
        // Blocks are ordered by increasing tuple length, so every rest
        // chain is resolved before the chains extending it.
        for blk in &self.blocks {
            let tb = target
                .block_of(&blk.tuple)
                .map(|bi| &target.blocks[bi])
                .ok_or_else(|| {
                    Error::ContextMismatch(format!(
                        "chain map target lacks the tuple {:?}",
                        blk.tuple
                    ))
                })?;
            let m = match &blk.tuple[..] {
                [] => maps[&blk.tuple].clone(),
                [lead, rest @ ..] => {
                    let vc = cent_maps.get(lead).ok_or(Error::UnknownIndex(*lead))?;
                    let mr = maps
                        .get(rest)
                        .ok_or_else(|| Error::ContextMismatch("rest chain missing".into()))?;
                    let prod = kron(vc, mr);
                    let sf = blk.fact.as_ref().expect("chain block factorization");
                    let tf = tb.fact.as_ref().expect("chain block factorization");
                    let lifted = match &sf.split {
                        Some(w) => prod * w,
                        None => prod,
                    };
                    let m = match &tf.proj {
                        Some(p) => p * lifted,
                        None => lifted,
                    };
                    maps.insert(blk.tuple.clone(), m.clone());
                    m
                }
            };
            if blk.dim > 0 && tb.dim > 0 {
                out.view_mut((tb.offset, blk.offset), (tb.dim, blk.dim))
                    .copy_from(&m);
            }
        }
        Ok(out)
    }
}

fn add_seg(out: &mut CVec, offset: usize, v: &CVec) {
    let mut seg = out.rows_mut(offset, v.nrows());
    seg += v;
}
