//! Transfer of completely positive maps through the monotone product.
//!
//! Input: a family of members `(A_i, phi_i)`, a second family `(D_i,
//! psi_i)` over the same base `B`, and for each index a unital completely
//! positive `B`-bimodule map `theta_i: A_i -> D_i` with `psi_i . theta_i =
//! phi_i`.  Output: one unital completely positive map `theta` from the
//! product of the `(A_i, phi_i)` into the operators on the
//! decreasing-chain module of the `(D_i, psi_i)`, restricting to `theta_i`
//! on each member and intertwining the product expectations.
//!
//! Realization.  For each index, `E_i` is the separated completion of
//! `(D_i, psi_i)` and the twisted module `F_i` is spanned by tensors
//! `a (x) e` with `a` in `A_i`, `e` in `E_i`, under the `B`-valued form
//! `<a (x) e, a' (x) e'> = <e, theta_i(a* a') e'>`.  Its unit vector is
//! `1 (x) xi_i`, left multiplication by `A_i` acts on the first leg, and
//! the vacuum expectation of that action is `phi_i`, so the
//! decreasing-chain module over the twisted slots carries the product of
//! the left actions of the `A_i` with product expectation `phi`.  The
//! per-slot maps `e |-> 1 (x) e` are isometries sending vacuum to vacuum
//! and centered parts to centered parts; their blockwise tensor assembly
//! is an isometry `v` between the chain modules, and the transferred map
//! is the compression `theta(x) = v* sigma(x) v` of the product left
//! action `sigma`.  Complete positivity is inherited from the compression
//! form; positivity of each twisted form is exactly complete positivity
//! of the member map, which is validated up front.

use std::collections::BTreeMap;

use crate::algebra::{Algebra, Family, FamilyMember, TOL_RANK};
use crate::error::{Error, Result};
use crate::gns::{gns_module, GnsModule};
use crate::linalg::{eye, gram_reduce, kron, max_abs, min_eig, CMat, CVec};
use crate::space::{Slot, TupleKind, TupleSpace};
use crate::word::{Letter, Word};

/// Residual tolerance for the validated hypotheses on the member maps.
const TOL: f64 = 1.0e-9;
/// Tolerance for adjoint and isometry identities of the construction.
const TOL_ADJ: f64 = 1.0e-10;
/// Eigenvalue floor certifying complete positivity of a member map.
const EIG_FLOOR: f64 = -1.0e-8;

/// A family of completely positive member maps transferred through the
/// monotone product, realized on the chain module of the target family.
#[derive(Debug, Clone)]
pub struct TransferRealization {
    /// Members `(A_i, phi_i)`; the member expectations are the `phi_i`.
    pub source: Family,
    /// Members `(D_i, psi_i)`.
    pub target: Family,
    /// Images of each source basis element under the member maps.
    pub maps: BTreeMap<u32, Vec<CMat>>,
    /// Decreasing-chain module of the target family.
    pub module: TupleSpace,
    /// Decreasing-chain module of the twisted slots.
    pub carrier: TupleSpace,
    /// Per-index maps `e |-> 1 (x) e` in slot coordinates.
    pub slot_isometries: BTreeMap<u32, CMat>,
    /// Blockwise assembly of the slot maps, `carrier.dim x module.dim`.
    pub isometry: CMat,
    /// Separated completions of the target members.
    pub gns: BTreeMap<u32, GnsModule>,
}

/// Builds and validates the transferred map for `theta_i` given by
/// `maps[i]`, the images of the basis of `source.member(i)` inside the
/// algebra of `target.member(i)`.
pub fn transfer_realization(
    source: &Family,
    target: &Family,
    maps: &BTreeMap<u32, Vec<CMat>>,
) -> Result<TransferRealization> {
    if !source.b.same_as(&target.b) {
        return Err(Error::ContextMismatch(
            "transfer endpoints live over different base algebras".into(),
        ));
    }
    if source.indices() != target.indices() {
        return Err(Error::ContextMismatch(
            "transfer endpoints have different index sets".into(),
        ));
    }
    let b = &source.b;
    let mut gns = BTreeMap::new();
    let mut eslots = BTreeMap::new();
    let mut fslots = BTreeMap::new();
    let mut slot_isometries = BTreeMap::new();
    for i in source.indices() {
        let sm = source.member(i)?;
        let tm = target.member(i)?;
        let imgs = maps.get(&i).ok_or(Error::UnknownIndex(i))?;
        validate_member(b, sm, tm, imgs)?;
        let e = gns_module(&tm.psi)?;
        let (slot, vs) = twisted_slot(b, sm, &e, imgs)?;
        eslots.insert(i, Slot::from_gns(&e)?);
        fslots.insert(i, slot);
        slot_isometries.insert(i, vs);
        gns.insert(i, e);
    }
    let module = TupleSpace::build(b.clone(), eslots, TupleKind::Decreasing)?;
    let carrier = TupleSpace::build(b.clone(), fslots, TupleKind::Decreasing)?;

    // Blockwise assembly of the per-slot maps on the centered parts.
    let mut cent_maps = BTreeMap::new();
    for (i, vs) in &slot_isometries {
        let es = module.slots.get(i).expect("module slot");
        let fs = carrier.slots.get(i).expect("carrier slot");
        cent_maps.insert(
            *i,
            vs.view((fs.vac, es.vac), (fs.cent, es.cent)).into_owned(),
        );
    }
    let isometry = module.chain_map(&carrier, &cent_maps)?;
    if max_abs(&(isometry.adjoint() * &isometry - eye(module.dim))) > TOL_ADJ {
        return Err(Error::CompatibilityFail(
            "assembled chain map is not an isometry".into(),
        ));
    }
    let xi_gap = &isometry * &module.xi - &carrier.xi;
    if xi_gap.iter().map(|z| z.norm()).fold(0.0, f64::max) > TOL_ADJ {
        return Err(Error::CompatibilityFail(
            "assembled chain map moves the vacuum vector".into(),
        ));
    }

    Ok(TransferRealization {
        source: source.clone(),
        target: target.clone(),
        maps: maps.clone(),
        module,
        carrier,
        slot_isometries,
        isometry,
        gns,
    })
}

impl TransferRealization {
    /// Member map applied to an element of the source algebra at `i`.
    pub fn apply_map(&self, i: u32, x: &CMat) -> Result<CMat> {
        let sm = self.source.member(i)?;
        let imgs = self.maps.get(&i).ok_or(Error::UnknownIndex(i))?;
        apply_images(&sm.algebra, imgs, x)
    }

    /// Transferred map on a word of source letters, as a dense operator on
    /// the target chain module: the compression of the product action by
    /// the assembled isometry.
    pub fn theta_word(&self, w: &Word) -> Result<CMat> {
        let n = self.module.dim;
        let mut y = CMat::zeros(self.carrier.dim, n);
        for j in 0..n {
            let col = self.isometry.column(j).into_owned();
            y.set_column(j, &self.carrier.apply_word(w, &col)?);
        }
        Ok(self.isometry.adjoint() * y)
    }

    /// Transferred map on a single letter.
    pub fn theta_letter(&self, i: u32, x: &CMat) -> Result<CMat> {
        self.theta_word(&Word::from_letters(vec![Letter {
            index: i,
            elem: x.clone(),
        }]))
    }

    /// Dense operator of the member image `theta_i(x)` acting as a letter
    /// on the target chain module; the transferred map restricted to one
    /// member must reproduce this.
    pub fn member_letter(&self, i: u32, x: &CMat) -> Result<CMat> {
        let t = self.apply_map(i, x)?;
        self.module.dense_letter(i, &t)
    }

    /// `B`-valued vacuum expectation of the transferred word; equals the
    /// product moment of the word in the source family.
    pub fn moment(&self, w: &Word) -> Result<CMat> {
        let y = self.carrier.apply_word(w, &self.carrier.xi)?;
        Ok(self.carrier.vacuum_expectation(&y))
    }
}

/// Word with the letter at position `l` replaced by its member
/// expectation, absorbed into the letter to its left.
pub fn absorb_expectation(family: &Family, w: &Word, l: usize) -> Result<Word> {
    if l == 0 || l >= w.letters.len() {
        return Err(Error::ShapeMismatch(format!(
            "cannot absorb position {l} of a {}-letter word to the left",
            w.letters.len()
        )));
    }
    let m = family.member(w.letters[l].index)?;
    let val = m.psi.apply(&w.letters[l].elem)?;
    let lm = family.member(w.letters[l - 1].index)?;
    let emb = lm.psi.embed_b(&val)?;
    let mut letters = w.letters.clone();
    letters[l - 1] = Letter {
        index: letters[l - 1].index,
        elem: &letters[l - 1].elem * emb,
    };
    letters.remove(l);
    let mut out = Word::from_letters(letters);
    out.coeff = w.coeff;
    Ok(out)
}

fn apply_images(a: &Algebra, imgs: &[CMat], x: &CMat) -> Result<CMat> {
    let c = a.coeffs(x)?;
    let d = imgs[0].nrows();
    let mut out = CMat::zeros(d, d);
    for (j, img) in imgs.iter().enumerate() {
        out += img * c[j];
    }
    Ok(out)
}

/// Checks the hypotheses on one member map: images inside the target
/// algebra, unital, adjoint-preserving, a base bimodule map, compatible
/// with the two expectations, and completely positive.
fn validate_member(
    b: &Algebra,
    sm: &FamilyMember,
    tm: &FamilyMember,
    imgs: &[CMat],
) -> Result<()> {
    let sa = &sm.algebra;
    let ta = &tm.algebra;
    let i = sm.index;
    if imgs.len() != sa.nbasis() {
        return Err(Error::ShapeMismatch(format!(
            "index {i} has {} transfer images for {} basis elements",
            imgs.len(),
            sa.nbasis()
        )));
    }
    for m in imgs {
        if m.nrows() != ta.dim || m.ncols() != ta.dim {
            return Err(Error::ShapeMismatch(format!(
                "a transfer image at index {i} is {}x{}, target ambient is {}",
                m.nrows(),
                m.ncols(),
                ta.dim
            )));
        }
        if !ta.contains(m) {
            return Err(Error::ContextMismatch(format!(
                "a transfer image at index {i} leaves the target algebra"
            )));
        }
    }
    let th = |x: &CMat| apply_images(sa, imgs, x);
    if max_abs(&(th(&sa.identity())? - ta.identity())) > TOL {
        return Err(Error::CompatibilityFail(format!(
            "transfer map at index {i} is not unital"
        )));
    }
    for a in &sa.basis {
        if max_abs(&(th(&a.adjoint())? - th(a)?.adjoint())) > TOL {
            return Err(Error::CompatibilityFail(format!(
                "transfer map at index {i} does not preserve adjoints"
            )));
        }
    }
    // Bimodule property over the base; with unitality this also forces
    // the map to restrict to the identity on the embedded base.
    for wb in &b.basis {
        let es = sm.psi.embed_b(wb)?;
        let et = tm.psi.embed_b(wb)?;
        for a in &sa.basis {
            if max_abs(&(th(&(&es * a))? - &et * th(a)?)) > TOL
                || max_abs(&(th(&(a * &es))? - th(a)? * &et)) > TOL
            {
                return Err(Error::CompatibilityFail(format!(
                    "transfer map at index {i} is not a base bimodule map"
                )));
            }
        }
    }
    for a in &sa.basis {
        if max_abs(&(tm.psi.apply(&th(a)?)? - sm.psi.apply(a)?)) > TOL {
            return Err(Error::CompatibilityFail(format!(
                "expectations do not agree through the transfer map at index {i}"
            )));
        }
    }
    // Complete positivity: the block matrix of values on products of
    // basis elements is positive semidefinite exactly when every matrix
    // amplification of the map preserves positivity.
    let na = sa.nbasis();
    let d = ta.dim;
    let mut big = CMat::zeros(na * d, na * d);
    for p in 0..na {
        for q in 0..na {
            let t = th(&(sa.basis[p].adjoint() * &sa.basis[q]))?;
            big.view_mut((p * d, q * d), (d, d)).copy_from(&t);
        }
    }
    if min_eig(&big) < EIG_FLOOR {
        return Err(Error::CompatibilityFail(format!(
            "transfer map at index {i} is not completely positive"
        )));
    }
    Ok(())
}

/// Builds the twisted slot at one index and the slot map `e |-> 1 (x) e`.
///
/// Generators are pairs `(p, mu)` for `a_p (x) e_mu`; their `B`-valued
/// gram is `<e_mu, theta(a_p* a_q) e_nu>` computed through the inner
/// table of the separated completion.  Orthonormalization follows the
/// completion layout: the embedded orthonormal base classes `1 (x) xi w_g`
/// come first, then a reduced orthonormal basis of the centered classes.
fn twisted_slot(
    b: &Algebra,
    sm: &FamilyMember,
    e: &GnsModule,
    imgs: &[CMat],
) -> Result<(Slot, CMat)> {
    let sa = &sm.algebra;
    let na = sa.nbasis();
    let ed = e.dim;
    let nb = b.nbasis();
    let tot = na * ed;
    let scalar = nb == 1 && b.dim == 1;
    let th = |x: &CMat| apply_images(sa, imgs, x);

    // B-valued gram of the generators, (p, mu) -> p*ed + mu.
    let mut bg = vec![CMat::zeros(b.dim, b.dim); tot * tot];
    for p in 0..na {
        for q in 0..na {
            let l = e.left_of(&th(&(sa.basis[p].adjoint() * &sa.basis[q]))?)?;
            for mu in 0..ed {
                for nu in 0..ed {
                    let mut v = CMat::zeros(b.dim, b.dim);
                    for s in 0..ed {
                        let wgt = l[(s, nu)];
                        if wgt.norm_sqr() > 0.0 {
                            v += &e.inner[mu * ed + s] * wgt;
                        }
                    }
                    bg[(p * ed + mu) * tot + (q * ed + nu)] = v;
                }
            }
        }
    }
    let mut gs = CMat::zeros(tot, tot);
    for pp in 0..tot {
        for qq in 0..tot {
            gs[(pp, qq)] = b.tau(&bg[pp * tot + qq]);
        }
    }

    // Vacuum block: unit tensor the orthonormal base classes.
    let cu = sa.coeffs(&sa.identity())?;
    let mut vac_cols = CMat::zeros(tot, nb);
    for g in 0..nb {
        let xw = &e.right[g] * &e.xi;
        for p in 0..na {
            for mu in 0..ed {
                vac_cols[(p * ed + mu, g)] = cu[p] * xw[mu];
            }
        }
    }
    let gv = vac_cols.adjoint() * &gs * &vac_cols;
    if max_abs(&(gv - eye(nb))) > 1.0e-7 {
        return Err(Error::CompatibilityFail(
            "embedded base block is not orthonormal under the twisted form".into(),
        ));
    }

    // Centered candidates: generators minus their vacuum component.
    let mut cand = eye(tot);
    for q in 0..na {
        let lq = e.left_of(&th(&sa.basis[q])?)?;
        for nu in 0..ed {
            let m = e.inner_b(&e.xi, &lq.column(nu).into_owned());
            let mc = &e.bo.to_on * b.coeffs(&m)?;
            for g in 0..nb {
                let col = vac_cols.column(g).into_owned();
                let mut c = cand.column_mut(q * ed + nu);
                c -= col * mc[g];
            }
        }
    }
    let gc = cand.adjoint() * &gs * &cand;
    let (wc, _) = gram_reduce(&gc, TOL_RANK);
    let ucent = &cand * &wc;
    let cent = ucent.ncols();
    let dim = nb + cent;
    let mut u = CMat::zeros(tot, dim);
    u.view_mut((0, 0), (tot, nb)).copy_from(&vac_cols);
    u.view_mut((0, nb), (tot, cent)).copy_from(&ucent);
    if max_abs(&(u.adjoint() * &gs * &u - eye(dim))) > 1.0e-7 {
        return Err(Error::CompatibilityFail(
            "twisted module coordinates failed to orthonormalize".into(),
        ));
    }
    let hat = u.adjoint() * &gs;

    // Transported left actions of the source algebra and of the base.
    let gen_left = |x: &CMat| -> Result<CMat> {
        let mut am = CMat::zeros(na, na);
        for q in 0..na {
            am.set_column(q, &sa.coeffs(&(x * &sa.basis[q]))?);
        }
        Ok(kron(&am, &eye(ed)))
    };
    let mut left = Vec::with_capacity(na);
    for aj in &sa.basis {
        left.push(&hat * gen_left(aj)? * &u);
    }
    let left_b = if scalar {
        Vec::new()
    } else {
        let mut lb = Vec::with_capacity(nb);
        for wg in &e.bo.w_mats {
            lb.push(&hat * gen_left(&sm.psi.embed_b(wg)?)? * &u);
        }
        lb
    };

    // Unit vector 1 (x) xi.
    let mut g0 = CVec::zeros(tot);
    for p in 0..na {
        for mu in 0..ed {
            g0[p * ed + mu] = cu[p] * e.xi[mu];
        }
    }
    let xi = &hat * g0;

    let inner = if scalar {
        Vec::new()
    } else {
        let mut inner = Vec::with_capacity(dim * dim);
        for u1 in 0..dim {
            for u2 in 0..dim {
                let mut m = CMat::zeros(b.dim, b.dim);
                for pp in 0..tot {
                    for qq in 0..tot {
                        let c = u[(pp, u1)].conj() * u[(qq, u2)];
                        if c.norm_sqr() > 0.0 {
                            m += &bg[pp * tot + qq] * c;
                        }
                    }
                }
                inner.push(m);
            }
        }
        inner
    };

    // Slot map e |-> 1 (x) e in the orthonormal coordinates.
    let mut kmat = CMat::zeros(tot, ed);
    for mu in 0..ed {
        for p in 0..na {
            kmat[(p * ed + mu, mu)] = cu[p];
        }
    }
    let vs = &hat * kmat;

    let slot = Slot {
        a: sa.clone(),
        dim,
        vac: nb,
        cent,
        left,
        left_b,
        xi,
        inner,
    };
    check_slot_map(b, e, imgs, sa, &slot, &vs, &u)?;
    Ok((slot, vs))
}

/// Verifies the structural identities of one slot map: isometry, vacuum
/// alignment, centered parts to centered parts, unit to unit, the adjoint
/// formula `(1 (x) e |-> e)* (a (x) e) = theta(a) e`, base-action
/// intertwining, and preservation of `B`-valued inner products.
fn check_slot_map(
    b: &Algebra,
    e: &GnsModule,
    imgs: &[CMat],
    sa: &Algebra,
    slot: &Slot,
    vs: &CMat,
    lift: &CMat,
) -> Result<()> {
    let nb = slot.vac;
    let ed = e.dim;
    let dim = slot.dim;
    let fail = |what: &str| Error::CompatibilityFail(format!("slot map {what}"));
    if max_abs(&(vs.adjoint() * vs - eye(ed))) > TOL_ADJ {
        return Err(fail("is not an isometry"));
    }
    if max_abs(&(vs.view((0, 0), (nb, nb)).into_owned() - eye(nb))) > TOL_ADJ
        || max_abs(&vs.view((nb, 0), (dim - nb, nb)).into_owned()) > TOL_ADJ
    {
        return Err(fail("moves the vacuum block"));
    }
    if max_abs(&vs.view((0, nb), (nb, ed - nb)).into_owned()) > TOL_ADJ {
        return Err(fail("does not send centered parts to centered parts"));
    }
    let unit_gap = vs * &e.xi - &slot.xi;
    if unit_gap.iter().map(|z| z.norm()).fold(0.0, f64::max) > TOL_ADJ {
        return Err(fail("moves the unit vector"));
    }
    // Adjoint formula on generators, against the conjugate transpose in
    // the orthonormal coordinates.
    let limg: Vec<CMat> = imgs.iter().map(|m| e.left_of(m)).collect::<Result<_>>()?;
    let na = sa.nbasis();
    let mut va = CMat::zeros(ed, dim);
    for u1 in 0..dim {
        let mut col = CVec::zeros(ed);
        for p in 0..na {
            for mu in 0..ed {
                let c = lift[(p * ed + mu, u1)];
                if c.norm_sqr() > 0.0 {
                    col += limg[p].column(mu) * c;
                }
            }
        }
        va.set_column(u1, &col);
    }
    if max_abs(&(va - vs.adjoint())) > TOL_ADJ {
        return Err(fail("disagrees with its displayed adjoint"));
    }
    if slot.left_b.is_empty() {
        return Ok(());
    }
    // Base actions intertwine and B-valued inner products are preserved;
    // chain blocks compose through both, so the blockwise assembly of the
    // slot maps is well defined exactly under these identities.
    for (g, wg) in e.bo.w_mats.iter().enumerate() {
        let el = e.left_of(&e.psi.embed_b(wg)?)?;
        if max_abs(&(&slot.left_b[g] * vs - vs * el)) > TOL_ADJ {
            return Err(fail("does not intertwine the base action"));
        }
    }
    for mu in 0..ed {
        for nu in 0..ed {
            let mut m = CMat::zeros(b.dim, b.dim);
            for u1 in 0..dim {
                for u2 in 0..dim {
                    let c = vs[(u1, mu)].conj() * vs[(u2, nu)];
                    if c.norm_sqr() > 0.0 {
                        m += &slot.inner[u1 * dim + u2] * c;
                    }
                }
            }
            if max_abs(&(m - &e.inner[mu * ed + nu])) > TOL_ADJ {
                return Err(fail("does not preserve the B-valued form"));
            }
        }
    }
    Ok(())
}
