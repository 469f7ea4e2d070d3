//! Concrete *-algebras of matrices, states and conditional expectations.
//!
//! An [`Algebra`] is a unital self-adjoint subalgebra of some full matrix
//! algebra, described by an explicit basis.  A [`CondExp`] is a validated
//! conditional expectation from an algebra onto a base algebra `B`
//! (states are the special case where `B` is the scalars).  A [`Family`]
//! collects indexed algebras sharing one base algebra; all product
//! constructions in this crate start from a family.

use std::collections::BTreeSet;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    cplx, eye, gram_reduce, lstsq, max_abs, min_eig, trace, vec_mat, CMat, CVec,
};

/// Tolerance for membership residuals when extracting coefficients.
pub const TOL_MEMBER: f64 = 1.0e-9;
/// Rank cutoff for Gram reductions.
pub const TOL_RANK: f64 = 1.0e-10;

/// A unital self-adjoint subalgebra of `M_d(C)` with a designated basis.
#[derive(Debug, Clone)]
pub struct Algebra {
    /// Ambient matrix size `d`.
    pub dim: usize,
    /// Linearly independent basis matrices, each `d x d`.
    pub basis: Vec<CMat>,
    /// Coefficients of the ambient identity in the basis.
    pub unit: CVec,
    vec_basis: CMat,
}

impl Algebra {
    /// Builds an algebra from a basis, checking independence and that the
    /// ambient identity lies in the span.
    pub fn new(basis: Vec<CMat>) -> Result<Self> {
        if basis.is_empty() {
            return Err(Error::NotFullAlgebra("empty basis".into()));
        }
        let dim = basis[0].nrows();
        for (j, b) in basis.iter().enumerate() {
            if b.nrows() != dim || b.ncols() != dim {
                return Err(Error::ShapeMismatch(format!(
                    "basis element {j} is {}x{}, expected {dim}x{dim}",
                    b.nrows(),
                    b.ncols()
                )));
            }
        }
        let vec_basis = CMat::from_columns(
            &basis.iter().map(vec_mat).collect::<Vec<_>>(),
        );
        // Independence via the Gram matrix of vectorized basis elements.
        let gram = vec_basis.adjoint() * &vec_basis;
        let (w, _) = gram_reduce(&gram, 1.0e-12);
        if w.ncols() != basis.len() {
            return Err(Error::DegenerateChoice(
                "basis is linearly dependent".into(),
            ));
        }
        let id = eye(dim);
        let unit_m = lstsq(&vec_basis, &CMat::from_columns(&[vec_mat(&id)]))?;
        let unit = CVec::from_iterator(basis.len(), unit_m.iter().copied());
        let resid = &vec_basis * &unit_m - CMat::from_columns(&[vec_mat(&id)]);
        if max_abs(&resid) > TOL_MEMBER {
            return Err(Error::NotFullAlgebra(
                "ambient identity is not in the span of the basis".into(),
            ));
        }
        Ok(Self { dim, basis, unit, vec_basis })
    }

    /// The scalars as a one-dimensional algebra.
    pub fn scalars() -> Self {
        Self::new(vec![CMat::from_element(1, 1, cplx(1.0, 0.0))])
            .expect("scalar algebra")
    }

    /// Full matrix algebra `M_n(C)` with the matrix-unit basis, ordered
    /// row-major: `E11, E12, ..., Enn`.
    pub fn full_matrix(n: usize) -> Self {
        let mut basis = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let mut m = CMat::zeros(n, n);
                m[(r, c)] = cplx(1.0, 0.0);
                basis.push(m);
            }
        }
        Self::new(basis).expect("matrix-unit basis")
    }

    /// Number of basis elements.
    pub fn nbasis(&self) -> usize {
        self.basis.len()
    }

    /// Coefficients of `x` in the basis; errors when `x` is not in the
    /// span within [`TOL_MEMBER`] (relative to the element size).
    pub fn coeffs(&self, x: &CMat) -> Result<CVec> {
        if x.nrows() != self.dim || x.ncols() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "element is {}x{}, ambient is {}",
                x.nrows(),
                x.ncols(),
                self.dim
            )));
        }
        let rhs = CMat::from_columns(&[vec_mat(x)]);
        let sol = lstsq(&self.vec_basis, &rhs)?;
        let resid = &self.vec_basis * &sol - rhs;
        let scale = 1.0_f64.max(max_abs(x));
        if max_abs(&resid) > TOL_MEMBER * scale {
            return Err(Error::NotInImage(format!(
                "element is not in the algebra span (residual {:.3e})",
                max_abs(&resid)
            )));
        }
        Ok(CVec::from_iterator(self.nbasis(), sol.iter().copied()))
    }

    /// True when `x` lies in the span of the basis.
    pub fn contains(&self, x: &CMat) -> bool {
        self.coeffs(x).is_ok()
    }

    /// Element from coefficients.
    pub fn element(&self, c: &CVec) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (j, b) in self.basis.iter().enumerate() {
            m += b * c[j];
        }
        m
    }

    /// Ambient identity.
    pub fn identity(&self) -> CMat {
        eye(self.dim)
    }

    /// Checks closure under products and adjoints, i.e. that the span is a
    /// *-subalgebra and not just a subspace.
    pub fn validate_closed(&self) -> Result<()> {
        for (j, bj) in self.basis.iter().enumerate() {
            if self.coeffs(&bj.adjoint()).is_err() {
                return Err(Error::NotFullAlgebra(format!(
                    "adjoint of basis element {j} leaves the span"
                )));
            }
            for (k, bk) in self.basis.iter().enumerate() {
                if self.coeffs(&(bj * bk)).is_err() {
                    return Err(Error::NotFullAlgebra(format!(
                        "product of basis elements {j} and {k} leaves the span"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Normalized trace `tr(x) / tr(1)`, the canonical faithful trace used
    /// to scalarize `B`-valued inner products.
    pub fn tau(&self, x: &CMat) -> Complex64 {
        trace(x) / cplx(self.dim as f64, 0.0)
    }

    /// True when the two algebras have identical ambient size and bases.
    pub fn same_as(&self, other: &Algebra) -> bool {
        self.dim == other.dim
            && self.nbasis() == other.nbasis()
            && self
                .basis
                .iter()
                .zip(&other.basis)
                .all(|(a, b)| max_abs(&(a - b)) < 1.0e-12)
    }
}

/// A conditional expectation from a domain algebra onto a base algebra,
/// described by the images of the domain basis and the embedding of the
/// base into the domain.
#[derive(Debug, Clone)]
pub struct CondExp {
    /// Domain algebra `A`.
    pub a: Algebra,
    /// Base algebra `B`.
    pub b: Algebra,
    /// Image of each `B`-basis element inside the domain ambient algebra.
    pub embed: Vec<CMat>,
    /// Image of each `A`-basis element inside the `B` ambient algebra.
    pub images: Vec<CMat>,
}

impl CondExp {
    /// Builds and validates a conditional expectation.
    pub fn new(a: Algebra, b: Algebra, embed: Vec<CMat>, images: Vec<CMat>) -> Result<Self> {
        if embed.len() != b.nbasis() {
            return Err(Error::ShapeMismatch(format!(
                "{} embedding images for {} base basis elements",
                embed.len(),
                b.nbasis()
            )));
        }
        if images.len() != a.nbasis() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for {} domain basis elements",
                images.len(),
                a.nbasis()
            )));
        }
        for m in &embed {
            if m.nrows() != a.dim || m.ncols() != a.dim {
                return Err(Error::ShapeMismatch(
                    "embedding image has wrong ambient size".into(),
                ));
            }
        }
        for m in &images {
            if m.nrows() != b.dim || m.ncols() != b.dim {
                return Err(Error::ShapeMismatch(
                    "image has wrong base ambient size".into(),
                ));
            }
        }
        let ce = Self { a, b, embed, images };
        ce.validate()?;
        Ok(ce)
    }

    /// State (scalar-valued expectation) from a density matrix.
    pub fn from_density(a: Algebra, rho: &CMat) -> Result<Self> {
        if rho.nrows() != a.dim || rho.ncols() != a.dim {
            return Err(Error::ShapeMismatch(
                "density has wrong ambient size".into(),
            ));
        }
        if max_abs(&(rho - rho.adjoint())) > 1.0e-10 {
            return Err(Error::NonState("density is not Hermitian".into()));
        }
        if min_eig(rho) < -1.0e-10 {
            return Err(Error::NonState("density is not positive".into()));
        }
        if (trace(rho).re - 1.0).abs() > 1.0e-9 {
            return Err(Error::NonState("density trace is not one".into()));
        }
        let b = Algebra::scalars();
        let embed = vec![a.identity()];
        let images = a
            .basis
            .iter()
            .map(|m| CMat::from_element(1, 1, trace(&(rho * m))))
            .collect();
        Self::new(a, b, embed, images)
    }

    /// Applies the expectation to an element of the domain.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        let c = self.a.coeffs(x)?;
        let mut out = CMat::zeros(self.b.dim, self.b.dim);
        for (j, img) in self.images.iter().enumerate() {
            out += img * c[j];
        }
        Ok(out)
    }

    /// Embeds a base element into the domain.
    pub fn embed_b(&self, y: &CMat) -> Result<CMat> {
        let c = self.b.coeffs(y)?;
        let mut out = CMat::zeros(self.a.dim, self.a.dim);
        for (j, img) in self.embed.iter().enumerate() {
            out += img * c[j];
        }
        Ok(out)
    }

    /// Scalar value for scalar-target expectations.
    pub fn scalar(&self, x: &CMat) -> Result<Complex64> {
        if self.b.dim != 1 {
            return Err(Error::ContextMismatch(
                "expectation does not take scalar values".into(),
            ));
        }
        Ok(self.apply(x)?[(0, 0)])
    }

    /// Centers `x`: subtracts the embedded expectation value.
    pub fn center(&self, x: &CMat) -> Result<CMat> {
        Ok(x - self.embed_b(&self.apply(x)?)?)
    }

    fn validate(&self) -> Result<()> {
        // The embedding must be unital and multiplicative on the base.
        let one_b = self.b.identity();
        let e1 = self.embed_b(&one_b)?;
        if max_abs(&(&e1 - self.a.identity())) > 1.0e-9 {
            return Err(Error::NonUnitalInclusion(
                "base embedding does not send the unit to the unit".into(),
            ));
        }
        for p in &self.b.basis {
            for q in &self.b.basis {
                let lhs = self.embed_b(&(p * q))?;
                let rhs = self.embed_b(p)? * self.embed_b(q)?;
                if max_abs(&(lhs - rhs)) > 1.0e-9 {
                    return Err(Error::CompatibilityFail(
                        "base embedding is not multiplicative".into(),
                    ));
                }
            }
        }
        // Unital: E(1_A) = 1_B.
        let v = self.apply(&self.a.identity())?;
        if max_abs(&(v - &one_b)) > 1.0e-9 {
            return Err(Error::CompatibilityFail(
                "expectation is not unital".into(),
            ));
        }
        // Projection onto the base: E(embed(b)) = b.
        for p in &self.b.basis {
            let v = self.apply(&self.embed_b(p)?)?;
            if max_abs(&(v - p)) > 1.0e-9 {
                return Err(Error::CompatibilityFail(
                    "expectation does not restrict to the identity on the base".into(),
                ));
            }
        }
        // Bimodule property over the whole basis (hence everywhere).
        for p in &self.b.basis {
            for q in &self.b.basis {
                for (j, bj) in self.a.basis.iter().enumerate() {
                    let x = self.embed_b(p)? * bj * self.embed_b(q)?;
                    let lhs = self.apply(&x)?;
                    let rhs = p * &self.images[j] * q;
                    if max_abs(&(lhs - rhs)) > 1.0e-8 {
                        return Err(Error::CompatibilityFail(
                            "expectation is not a bimodule map".into(),
                        ));
                    }
                }
            }
        }
        // Positivity through the induced sesquilinear form.
        let g = self.gram_tau()?;
        if min_eig(&g) < -1.0e-8 {
            return Err(Error::NonPositive(
                "expectation induces an indefinite form".into(),
            ));
        }
        Ok(())
    }

    /// Scalarized Gram matrix `tau(E(a_p* a_q))` of the domain basis.
    pub fn gram_tau(&self) -> Result<CMat> {
        let n = self.a.nbasis();
        let mut g = CMat::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                let v = self.apply(&(self.a.basis[p].adjoint() * &self.a.basis[q]))?;
                g[(p, q)] = self.b.tau(&v);
            }
        }
        Ok(g)
    }

    /// True when the induced representation space separates the domain,
    /// i.e. the Gram matrix of the basis has full rank.
    pub fn gns_faithful(&self) -> Result<bool> {
        let g = self.gram_tau()?;
        let (w, _) = gram_reduce(&g, TOL_RANK);
        Ok(w.ncols() == self.a.nbasis())
    }

    /// True when two expectations agree as linear maps.
    pub fn same_map(&self, other: &CondExp) -> bool {
        self.a.same_as(&other.a)
            && self.b.same_as(&other.b)
            && self
                .images
                .iter()
                .zip(&other.images)
                .all(|(x, y)| max_abs(&(x - y)) < 1.0e-12)
    }
}

/// One member of an indexed family: an algebra with its expectation(s).
#[derive(Debug, Clone)]
pub struct FamilyMember {
    /// Index in the totally ordered index set.
    pub index: u32,
    /// The algebra.
    pub algebra: Algebra,
    /// Conditional expectation onto the shared base algebra.
    pub psi: CondExp,
    /// Optional second expectation (scalar pairs use this as the primary
    /// state of the pair).
    pub phi: Option<CondExp>,
}

/// An indexed family of algebras over one base algebra.
#[derive(Debug, Clone)]
pub struct Family {
    /// Shared base algebra `B`.
    pub b: Algebra,
    /// Members sorted by index.
    pub members: Vec<FamilyMember>,
}

impl Family {
    /// Builds a family, checking index uniqueness and base consistency.
    pub fn new(members: Vec<FamilyMember>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::EmptyFamily);
        }
        let mut members = members;
        members.sort_by_key(|m| m.index);
        let mut seen = BTreeSet::new();
        for m in &members {
            if !seen.insert(m.index) {
                return Err(Error::CompatibilityFail(format!(
                    "duplicate index {}",
                    m.index
                )));
            }
        }
        let b = members[0].psi.b.clone();
        for m in &members {
            if !m.psi.b.same_as(&b) {
                return Err(Error::MixedB(format!("member {}", m.index)));
            }
            if let Some(phi) = &m.phi {
                if !phi.b.same_as(&b) {
                    return Err(Error::MixedB(format!("member {} (phi)", m.index)));
                }
                if !phi.a.same_as(&m.algebra) {
                    return Err(Error::ContextMismatch(format!(
                        "member {}: phi domain differs from the algebra",
                        m.index
                    )));
                }
            }
            if !m.psi.a.same_as(&m.algebra) {
                return Err(Error::ContextMismatch(format!(
                    "member {}: psi domain differs from the algebra",
                    m.index
                )));
            }
        }
        Ok(Self { b, members })
    }

    /// Member with the given index.
    pub fn member(&self, index: u32) -> Result<&FamilyMember> {
        self.members
            .iter()
            .find(|m| m.index == index)
            .ok_or(Error::UnknownIndex(index))
    }

    /// Sorted indices.
    pub fn indices(&self) -> Vec<u32> {
        self.members.iter().map(|m| m.index).collect()
    }

    /// Smallest index.
    pub fn min_index(&self) -> u32 {
        self.members[0].index
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gauss_cmat;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag2() -> Algebra {
        let mut e11 = CMat::zeros(2, 2);
        e11[(0, 0)] = cplx(1.0, 0.0);
        let mut e22 = CMat::zeros(2, 2);
        e22[(1, 1)] = cplx(1.0, 0.0);
        Algebra::new(vec![e11, e22]).unwrap()
    }

    #[test]
    fn full_matrix_roundtrip() {
        let a = Algebra::full_matrix(2);
        a.validate_closed().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = gauss_cmat(&mut rng, 2, 2);
        let c = a.coeffs(&x).unwrap();
        assert!(max_abs(&(a.element(&c) - &x)) < 1.0e-10);
    }

    #[test]
    fn dependent_basis_rejected() {
        let b1 = eye(2);
        let b2 = eye(2).scale(2.0);
        assert!(matches!(
            Algebra::new(vec![b1, b2]),
            Err(Error::DegenerateChoice(_))
        ));
    }

    #[test]
    fn span_without_identity_rejected() {
        let mut n = CMat::zeros(2, 2);
        n[(0, 1)] = cplx(1.0, 0.0);
        assert!(matches!(
            Algebra::new(vec![n]),
            Err(Error::NotFullAlgebra(_))
        ));
    }

    #[test]
    fn membership_detects_outsiders() {
        let d = diag2();
        let mut x = CMat::zeros(2, 2);
        x[(0, 1)] = cplx(1.0, 0.0);
        assert!(!d.contains(&x));
        assert!(d.contains(&eye(2)));
    }

    #[test]
    fn diagonal_compression_is_a_conditional_expectation() {
        let a = Algebra::full_matrix(2);
        let b = diag2();
        let embed = b.basis.clone();
        // E11 -> E11, E12 -> 0, E21 -> 0, E22 -> E22 in the 2x2 base ambient.
        let images = vec![
            CMat::from_fn(2, 2, |r, c| if r == 0 && c == 0 { cplx(1.0, 0.0) } else { cplx(0.0, 0.0) }),
            CMat::zeros(2, 2),
            CMat::zeros(2, 2),
            CMat::from_fn(2, 2, |r, c| if r == 1 && c == 1 { cplx(1.0, 0.0) } else { cplx(0.0, 0.0) }),
        ];
        let ce = CondExp::new(a, b, embed, images).unwrap();
        assert!(ce.gns_faithful().unwrap());
    }

    #[test]
    fn state_from_density_and_centering() {
        let a = Algebra::full_matrix(2);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho = crate::linalg::random_density(&mut rng, 2, 0.1);
        let phi = CondExp::from_density(a, &rho).unwrap();
        let x = gauss_cmat(&mut rng, 2, 2);
        let xc = phi.center(&x).unwrap();
        assert!(phi.scalar(&xc).unwrap().norm() < 1.0e-10);
    }

    #[test]
    fn non_state_rejected() {
        let a = Algebra::full_matrix(2);
        let not_herm = CMat::from_fn(2, 2, |r, c| {
            if r == 0 && c == 1 { cplx(1.0, 0.0) } else { cplx(0.0, 0.0) }
        });
        assert!(matches!(
            CondExp::from_density(a, &not_herm),
            Err(Error::NonState(_))
        ));
    }
}
