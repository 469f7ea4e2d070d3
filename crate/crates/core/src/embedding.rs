//! Embedding a monotone product into the product of a nesting family.
//!
//! Given per-index inclusions of algebras over an inclusion of bases,
//! with the big expectations restricting to the small ones, the small
//! chain module sits inside the big one as an invariant subspace, so the
//! big product realization dominates the small one in norm on every
//! *-polynomial; the two norms in fact agree, which realizes the small
//! product inside the big one.  Non-unital inclusions are reduced to
//! unital ones by adjoining the scalar multiples of the unit defect to
//! the base and to each member.

use std::collections::BTreeMap;

use crate::algebra::{Algebra, CondExp, Family, FamilyMember};
use crate::bimodule::monotone_model;
use crate::error::{Error, Result};
use crate::linalg::{gauss_cmat, max_abs, op_norm, CMat};
use crate::word::{random_pattern, random_word, Letter, Word};
use num_complex::Complex64;
use rand::Rng;

/// A *-homomorphic inclusion of one concrete algebra into the span of
/// another, given by the images of the domain basis.
#[derive(Debug, Clone)]
pub struct Inclusion {
    /// Domain algebra.
    pub dom: Algebra,
    /// Image of each domain basis element in the codomain ambient.
    pub images: Vec<CMat>,
}

impl Inclusion {
    /// Validates linearity data, multiplicativity, adjoints, and that
    /// every image lies in the codomain.
    pub fn new(dom: Algebra, cod: &Algebra, images: Vec<CMat>) -> Result<Self> {
        if images.len() != dom.nbasis() {
            return Err(Error::ShapeMismatch(format!(
                "{} images for {} domain basis elements",
                images.len(),
                dom.nbasis()
            )));
        }
        for m in &images {
            if m.nrows() != cod.dim || m.ncols() != cod.dim {
                return Err(Error::ShapeMismatch(
                    "inclusion image has wrong ambient size".into(),
                ));
            }
            if !cod.contains(m) {
                return Err(Error::NotInImage(
                    "inclusion image leaves the codomain".into(),
                ));
            }
        }
        let inc = Self { dom, images };
        for p in 0..inc.dom.nbasis() {
            let adj = inc.apply(&inc.dom.basis[p].adjoint())?;
            if max_abs(&(adj - inc.images[p].adjoint())) > 1.0e-9 {
                return Err(Error::ContextMismatch(
                    "inclusion does not respect adjoints".into(),
                ));
            }
            for q in 0..inc.dom.nbasis() {
                let prod = inc.apply(&(&inc.dom.basis[p] * &inc.dom.basis[q]))?;
                if max_abs(&(prod - &inc.images[p] * &inc.images[q])) > 1.0e-9 {
                    return Err(Error::ContextMismatch(
                        "inclusion is not multiplicative".into(),
                    ));
                }
            }
        }
        Ok(inc)
    }

    /// Identity inclusion of an algebra into a larger one on the same
    /// ambient space.
    pub fn identity(dom: Algebra, cod: &Algebra) -> Result<Self> {
        let images = dom.basis.clone();
        Self::new(dom, cod, images)
    }

    /// Applies the inclusion to a domain element.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        let c = self.dom.coeffs(x)?;
        let n = self.images[0].nrows();
        let mut out = CMat::zeros(n, n);
        for (j, img) in self.images.iter().enumerate() {
            out += img * c[j];
        }
        Ok(out)
    }

    /// Whether the inclusion maps the domain unit to `one`.
    pub fn unital_into(&self, one: &CMat) -> Result<bool> {
        Ok(max_abs(&(self.apply(&self.dom.identity())? - one)) <= 1.0e-9)
    }
}

/// A family nested in a larger family over a nested base, with the big
/// expectations restricting to the small ones through the inclusions.
///
/// Norm comparisons are made for polynomials over the original members.
/// When the inclusions are not unital, the pair also records an enlarged
/// copy of the inner family with the unit defects adjoined.  The enlarged
/// copy is a valid family in its own right, but the two product
/// realizations of it are not norm-compatible in general: the enclosing
/// product gives each index its own defect-led chain directions, which
/// letters at lower indexes annihilate, while the inner product carries a
/// single defect line in its vacuum slot on which every letter acts by
/// its defect coefficient.  A two-term combination of words at different
/// patterns then takes different norms in the two realizations.
#[derive(Debug, Clone)]
pub struct NestedPair {
    /// The inner family.
    pub small: Family,
    /// The enclosing family.
    pub big: Family,
    /// Base inclusion.
    pub inc_b: Inclusion,
    /// Member inclusions, per index.
    pub incs: BTreeMap<u32, Inclusion>,
    /// For non-unital inclusions, the inner family with unit defects
    /// adjoined, realized inside the big ambient.
    pub enlarged: Option<Family>,
}

/// Builds and validates a nested pair.  Non-unital inclusions are
/// recorded alongside an enlarged copy of the small family that adjoins
/// the unit defect to the base and to each member inside the big ambient.
pub fn nested_pair(
    small: Family,
    big: Family,
    inc_b: Inclusion,
    incs: BTreeMap<u32, Inclusion>,
) -> Result<NestedPair> {
    if small.indices() != big.indices() {
        return Err(Error::ContextMismatch(
            "the two families have different index sets".into(),
        ));
    }
    for &i in &small.indices() {
        if !incs.contains_key(&i) {
            return Err(Error::UnknownIndex(i));
        }
    }
    // The big expectations must restrict to the small ones, and the
    // member inclusions must agree with the base inclusion on the
    // embedded copy of the base.
    for &i in &small.indices() {
        let sm = small.member(i)?;
        let bm = big.member(i)?;
        let inc = &incs[&i];
        for e in &sm.algebra.basis {
            let through_big = bm.psi.apply(&inc.apply(e)?)?;
            let through_small = inc_b.apply(&sm.psi.apply(e)?)?;
            if max_abs(&(through_big - through_small)) > 1.0e-9 {
                return Err(Error::CompatibilityFail(format!(
                    "expectation at index {i} does not restrict through the inclusion"
                )));
            }
        }
        for b in &small.b.basis {
            let through_member = inc.apply(&sm.psi.embed_b(b)?)?;
            let through_base = bm.psi.embed_b(&inc_b.apply(b)?)?;
            if max_abs(&(through_member - through_base)) > 1.0e-9 {
                return Err(Error::ContextMismatch(format!(
                    "member inclusion at index {i} disagrees with the base inclusion"
                )));
            }
        }
    }
    let mut unital = inc_b.unital_into(&big.b.identity())?;
    for (&i, inc) in &incs {
        unital &= inc.unital_into(&big.member(i)?.algebra.identity())?;
    }
    let enlarged =
        if unital { None } else { Some(adjoin_unit_defects(&small, &big, &inc_b, &incs)?) };
    Ok(NestedPair { small, big, inc_b, incs, enlarged })
}

/// Adjoins the unit defects, producing an enlarged small family living
/// in the big ambient.
fn adjoin_unit_defects(
    small: &Family,
    big: &Family,
    inc_b: &Inclusion,
    incs: &BTreeMap<u32, Inclusion>,
) -> Result<Family> {
    let pad_base = big.b.identity() - inc_b.apply(&small.b.identity())?;
    let mut base_basis: Vec<CMat> = inc_b.images.clone();
    if max_abs(&pad_base) > 1.0e-12 {
        base_basis.push(pad_base);
    }
    let base = Algebra::new(base_basis)?;

    let mut members = Vec::new();
    for &i in &small.indices() {
        let sm = small.member(i)?;
        let bm = big.member(i)?;
        let inc = &incs[&i];
        let pad = bm.algebra.identity() - inc.apply(&sm.algebra.identity())?;
        let mut basis: Vec<CMat> = inc.images.clone();
        if max_abs(&pad) > 1.0e-12 {
            basis.push(pad);
        }
        let algebra = Algebra::new(basis)?;
        let embed = base
            .basis
            .iter()
            .map(|w| bm.psi.embed_b(w))
            .collect::<Result<Vec<_>>>()?;
        let images = algebra
            .basis
            .iter()
            .map(|e| bm.psi.apply(e))
            .collect::<Result<Vec<_>>>()?;
        let psi = CondExp::new(algebra.clone(), base.clone(), embed, images)?;
        members.push(FamilyMember { index: i, algebra, psi, phi: None });
    }
    Family::new(members)
}

impl NestedPair {
    /// Unit defect at an index: the big member's identity minus the
    /// included image of the small member's identity.  Zero exactly when
    /// the inclusion at that index is unital.
    pub fn unit_defect(&self, i: u32) -> Result<CMat> {
        let inc = self.incs.get(&i).ok_or(Error::UnknownIndex(i))?;
        Ok(self.big.member(i)?.algebra.identity() - inc.apply(&self.small.member(i)?.algebra.identity())?)
    }

    /// Maps a word over the small family to the big family through the
    /// member inclusions.
    pub fn include_word(&self, w: &Word) -> Result<Word> {
        let letters = w
            .letters
            .iter()
            .map(|l| {
                Ok(Letter { index: l.index, elem: self.incs[&l.index].apply(&l.elem)? })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Word { coeff: w.coeff, letters })
    }
}

/// Deviations observed when comparing the two product realizations.
#[derive(Debug, Clone)]
pub struct EmbeddingCheck {
    /// Largest moment incompatibility through the base inclusion.
    pub moment_dev: f64,
    /// Largest deviation from norm equality over the sampled polynomials.
    pub norm_dev: f64,
    /// Smallest value of the big norm minus the small norm; domination
    /// by the enclosing realization makes this nonnegative.
    pub domination_margin: f64,
    /// Number of words compared for moments.
    pub words: usize,
    /// Number of *-polynomials compared for norms.
    pub polys: usize,
}

/// Compares vacuum moments and operator norms of the two realizations
/// on random words and random *-polynomials over the small family.
pub fn verify_nested_embedding<R: Rng>(
    pair: &NestedPair,
    rng: &mut R,
    words: usize,
    polys: usize,
    maxlen: usize,
) -> Result<EmbeddingCheck> {
    let model = monotone_model(&pair.small)?;
    let model_big = monotone_model(&pair.big)?;
    let indices = pair.small.indices();

    let mut moment_dev = 0.0f64;
    for _ in 0..words {
        let len = rng.gen_range(1..=maxlen);
        let pat = random_pattern(rng, &indices, len);
        let w = random_word(rng, &pair.small, &pat, false)?;
        let wb = pair.include_word(&w)?;
        let lhs = pair.inc_b.apply(&model.moment(&w)?)?;
        let rhs = model_big.moment(&wb)?;
        moment_dev = moment_dev.max(max_abs(&(lhs - rhs)));
    }

    let mut norm_dev = 0.0f64;
    let mut domination_margin = f64::INFINITY;
    for _ in 0..polys {
        let terms = rng.gen_range(1..=3usize);
        let mut s_small = CMat::zeros(model.space.dim, model.space.dim);
        let mut s_big = CMat::zeros(model_big.space.dim, model_big.space.dim);
        for _ in 0..terms {
            let len = rng.gen_range(1..=maxlen);
            let pat = random_pattern(rng, &indices, len);
            let mut w = random_word(rng, &pair.small, &pat, false)?;
            let g = gauss_cmat(rng, 1, 1)[(0, 0)];
            w.coeff = Complex64::new(g.re, g.im);
            let wb = pair.include_word(&w)?;
            s_small += model.space.dense_word(&w)?;
            s_big += model_big.space.dense_word(&wb)?;
        }
        let ns = op_norm(&s_small);
        let nb = op_norm(&s_big);
        norm_dev = norm_dev.max((ns - nb).abs());
        domination_margin = domination_margin.min(nb - ns);
    }
    if polys == 0 {
        domination_margin = 0.0;
    }
    Ok(EmbeddingCheck { moment_dev, norm_dev, domination_margin, words, polys })
}
