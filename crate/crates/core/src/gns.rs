//! Representation spaces built from expectations.
//!
//! [`GnsModule`] carries the separated completion of an algebra under the
//! form `<x, y> = E(x* y)`, in orthonormal coordinates split as
//! `[cyclic-subspace | centered complement]`.  The cyclic block is a copy
//! of the base algebra `B` (one-dimensional for states); the complement
//! is spanned by vectors of centered elements.  [`PairedGns`] represents
//! two states of one algebra on a single space with a shared unit cyclic
//! vector, so that one representation implements the first state and a
//! rotated copy implements the second.

use num_complex::Complex64;

use crate::algebra::{Algebra, CondExp, TOL_RANK};
use crate::error::{Error, Result};
use crate::linalg::{cplx, eye, gram_reduce, max_abs, CMat, CVec};

/// Orthonormalization data for a base algebra under its normalized trace.
#[derive(Debug, Clone)]
pub struct BOrtho {
    /// Orthonormal basis matrices (ambient), `tau(w_p* w_q) = delta_pq`.
    pub w_mats: Vec<CMat>,
    /// Basis coefficients -> orthonormal coordinates.
    pub to_on: CMat,
    /// Orthonormal coordinates -> basis coefficients.
    pub from_on: CMat,
}

/// Orthonormalizes the basis of `b` with respect to `tau(x* y)`.
pub fn b_ortho(b: &Algebra) -> Result<BOrtho> {
    let n = b.nbasis();
    let mut g = CMat::zeros(n, n);
    for p in 0..n {
        for q in 0..n {
            g[(p, q)] = b.tau(&(b.basis[p].adjoint() * &b.basis[q]));
        }
    }
    let (w, pm) = gram_reduce(&g, 1.0e-12);
    if w.ncols() != n {
        return Err(Error::DegenerateChoice(
            "base algebra basis degenerates under the trace form".into(),
        ));
    }
    let w_mats = (0..n)
        .map(|j| b.element(&CVec::from_iterator(n, w.column(j).iter().copied())))
        .collect();
    Ok(BOrtho { w_mats, to_on: pm, from_on: w })
}

/// Separated completion of `E.a` under `<x, y> = E(x* y)`, in orthonormal
/// coordinates ordered `[cyclic block | centered complement]`.
#[derive(Debug, Clone)]
pub struct GnsModule {
    /// Base algebra.
    pub b: Algebra,
    /// Represented algebra.
    pub a: Algebra,
    /// Defining expectation.
    pub psi: CondExp,
    /// Total coordinate dimension.
    pub dim: usize,
    /// Dimension of the cyclic block (rank of `B`); coordinates `0..vac`.
    pub vac: usize,
    /// Dimension of the centered complement; coordinates `vac..vac+cent`.
    pub cent: usize,
    /// Class map: basis coefficients of `x` -> coordinates of its vector.
    pub hat: CMat,
    /// Right inverse of `hat`: coordinates -> coefficients of a representative.
    pub lift: CMat,
    /// Left action of each `A`-basis element, `dim x dim`.
    pub left: Vec<CMat>,
    /// Right action of each orthonormal `B`-basis element, `dim x dim`.
    pub right: Vec<CMat>,
    /// Coordinates of the cyclic vector (class of the identity).
    pub xi: CVec,
    /// `B`-valued inner products of the coordinate basis vectors, row-major:
    /// `inner[p * dim + q] = E(lift_p* lift_q)`.
    pub inner: Vec<CMat>,
    /// Base orthonormalization.
    pub bo: BOrtho,
}

/// Builds the module carried by a conditional expectation.  Requires the
/// induced form to be nondegenerate on the represented algebra.
pub fn gns_module(psi: &CondExp) -> Result<GnsModule> {
    let a = psi.a.clone();
    let b = psi.b.clone();
    let bo = b_ortho(&b)?;
    let na = a.nbasis();
    let nb = b.nbasis();

    // Scalarized Gram matrix of the domain basis.
    let gs = psi.gram_tau()?;

    // Cyclic candidates: classes of embedded orthonormal base elements.
    let mut cand_vac = CMat::zeros(na, nb);
    for (g, w) in bo.w_mats.iter().enumerate() {
        let c = a.coeffs(&psi.embed_b(w)?)?;
        cand_vac.set_column(g, &c);
    }
    // Centered candidates: classes of centered basis elements.
    let mut cand_cent = CMat::zeros(na, na);
    for (j, bj) in a.basis.iter().enumerate() {
        let c = a.coeffs(&psi.center(bj)?)?;
        cand_cent.set_column(j, &c);
    }

    // Orthonormalize each block under the Gram form.  The cyclic block is
    // automatically orthonormal and orthogonal to centered classes; the
    // reductions also certify that.
    let g_vac = cand_vac.adjoint() * &gs * &cand_vac;
    if max_abs(&(&g_vac - &eye(nb))) > 1.0e-8 {
        return Err(Error::CompatibilityFail(
            "embedded base block is not orthonormal under the form".into(),
        ));
    }
    let g_cent = cand_cent.adjoint() * &gs * &cand_cent;
    let (wc, _) = gram_reduce(&g_cent, TOL_RANK);
    let cent = wc.ncols();
    let u_cent = &cand_cent * &wc;

    let dim = nb + cent;
    let mut u = CMat::zeros(na, dim);
    for g in 0..nb {
        u.set_column(g, &cand_vac.column(g));
    }
    for j in 0..cent {
        u.set_column(nb + j, &u_cent.column(j));
    }
    let check = u.adjoint() * &gs * &u;
    if max_abs(&(&check - &eye(dim))) > 1.0e-7 {
        return Err(Error::CompatibilityFail(
            "module coordinates failed orthonormality".into(),
        ));
    }
    if psi.gns_faithful()? && dim != na {
        return Err(Error::CompatibilityFail(
            "faithful form produced a proper quotient".into(),
        ));
    }

    let hat = u.adjoint() * &gs;
    let lift = u.clone();
    let xi = &hat * &a.unit;

    // Left action of A-basis elements.
    let mut left = Vec::with_capacity(na);
    for bj in &a.basis {
        let mut s = CMat::zeros(na, dim);
        for p in 0..dim {
            let rep = a.element(&CVec::from_iterator(na, lift.column(p).iter().copied()));
            s.set_column(p, &a.coeffs(&(bj * rep))?);
        }
        left.push(&hat * &s);
    }
    // Right action of orthonormal B-basis elements.
    let mut right = Vec::with_capacity(nb);
    for w in &bo.w_mats {
        let we = psi.embed_b(w)?;
        let mut s = CMat::zeros(na, dim);
        for p in 0..dim {
            let rep = a.element(&CVec::from_iterator(na, lift.column(p).iter().copied()));
            s.set_column(p, &a.coeffs(&(rep * &we))?);
        }
        right.push(&hat * &s);
    }
    // B-valued inner products of coordinate basis vectors.
    let mut inner = Vec::with_capacity(dim * dim);
    for p in 0..dim {
        let rp = a.element(&CVec::from_iterator(na, lift.column(p).iter().copied()));
        for q in 0..dim {
            let rq = a.element(&CVec::from_iterator(na, lift.column(q).iter().copied()));
            inner.push(psi.apply(&(rp.adjoint() * rq))?);
        }
    }

    Ok(GnsModule {
        b,
        a,
        psi: psi.clone(),
        dim,
        vac: nb,
        cent,
        hat,
        lift,
        left,
        right,
        xi,
        inner,
        bo,
    })
}

impl GnsModule {
    /// Coordinates of the class of `x`.
    pub fn hat_of(&self, x: &CMat) -> Result<CVec> {
        Ok(&self.hat * self.a.coeffs(x)?)
    }

    /// Left action matrix of an algebra element.
    pub fn left_of(&self, x: &CMat) -> Result<CMat> {
        let c = self.a.coeffs(x)?;
        let mut m = CMat::zeros(self.dim, self.dim);
        for (j, l) in self.left.iter().enumerate() {
            m += l * c[j];
        }
        Ok(m)
    }

    /// `B`-valued inner product of two coordinate vectors.
    pub fn inner_b(&self, x: &CVec, y: &CVec) -> CMat {
        let mut out = CMat::zeros(self.b.dim, self.b.dim);
        for p in 0..self.dim {
            for q in 0..self.dim {
                let c = x[p].conj() * y[q];
                if c.norm_sqr() > 0.0 {
                    out += &self.inner[p * self.dim + q] * c;
                }
            }
        }
        out
    }
}

/// Two states of one algebra represented on a single space with a common
/// unit cyclic vector: `pi` implements the first state at the vector and
/// `sigma` implements the second.
#[derive(Debug, Clone)]
pub struct PairedGns {
    /// Represented algebra.
    pub a: Algebra,
    /// Space dimension.
    pub dim: usize,
    /// Representation implementing the first state at `xi`.
    pub pi: Vec<CMat>,
    /// Representation implementing the second state at `xi`.
    pub sigma: Vec<CMat>,
    /// Common cyclic vector coordinates.
    pub xi: CVec,
}

/// Builds the paired representation of `(phi, psi)` on the direct sum of
/// their separated completions.  Both must be scalar-valued states.
pub fn paired_gns(phi: &CondExp, psi: &CondExp) -> Result<PairedGns> {
    if phi.b.dim != 1 || psi.b.dim != 1 {
        return Err(Error::ContextMismatch(
            "paired representation needs scalar-valued states".into(),
        ));
    }
    if !phi.a.same_as(&psi.a) {
        return Err(Error::ContextMismatch(
            "paired representation needs a common algebra".into(),
        ));
    }
    let mp = gns_module(phi)?;
    let ms = gns_module(psi)?;
    let dim = mp.dim + ms.dim;
    let a = phi.a.clone();

    let block = |x: &CMat, y: &CMat| -> CMat {
        let mut m = CMat::zeros(dim, dim);
        m.view_mut((0, 0), (mp.dim, mp.dim)).copy_from(x);
        m.view_mut((mp.dim, mp.dim), (ms.dim, ms.dim)).copy_from(y);
        m
    };

    let mut e = CVec::zeros(dim);
    e.rows_mut(0, mp.dim).copy_from(&mp.xi);
    let mut f = CVec::zeros(dim);
    f.rows_mut(mp.dim, ms.dim).copy_from(&ms.xi);

    // Self-adjoint unitary exchanging the two cyclic vectors and fixing
    // their orthogonal complement.
    let mut u = eye(dim);
    u -= &e * e.adjoint();
    u -= &f * f.adjoint();
    u += &f * e.adjoint();
    u += &e * f.adjoint();

    let mut pi = Vec::with_capacity(a.nbasis());
    let mut sigma = Vec::with_capacity(a.nbasis());
    for j in 0..a.nbasis() {
        let d = block(&mp.left[j], &ms.left[j]);
        sigma.push(u.adjoint() * &d * &u);
        pi.push(d);
    }
    Ok(PairedGns { a, dim, pi, sigma, xi: e })
}

/// Completes a unit vector to an orthonormal basis; the returned matrix is
/// unitary with first column `x`.
pub fn complete_orthobasis(x: &CVec) -> Result<CMat> {
    let n = x.nrows();
    let nrm = x.norm();
    if (nrm - 1.0).abs() > 1.0e-8 {
        return Err(Error::DegenerateChoice(format!(
            "vector has norm {nrm:.6}, expected a unit vector"
        )));
    }
    let mut cols: Vec<CVec> = vec![x.clone()];
    for j in 0..n {
        let mut v = CVec::zeros(n);
        v[j] = cplx(1.0, 0.0);
        for c in &cols {
            let ip: Complex64 = c.dotc(&v);
            v -= c * ip;
        }
        let nv = v.norm();
        if nv > 1.0e-8 {
            cols.push(v / cplx(nv, 0.0));
        }
        if cols.len() == n {
            break;
        }
    }
    if cols.len() != n {
        return Err(Error::DegenerateChoice(
            "failed to complete an orthonormal basis".into(),
        ));
    }
    Ok(CMat::from_columns(&cols))
}
