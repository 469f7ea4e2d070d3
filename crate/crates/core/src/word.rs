//! Words over an indexed family: sequences of letters tagged by the index
//! of the algebra each element lives in.

use num_complex::Complex64;
use rand::Rng;

use crate::algebra::Family;
use crate::error::{Error, Result};
use crate::linalg::{cplx, gauss_cmat, max_abs, unit_op_norm, CMat};

/// One letter: an element of the algebra at `index`.
#[derive(Debug, Clone)]
pub struct Letter {
    /// Family index of the algebra the element belongs to.
    pub index: u32,
    /// The element, in the ambient coordinates of that algebra.
    pub elem: CMat,
}

/// A scalar multiple of a product of letters.
#[derive(Debug, Clone)]
pub struct Word {
    /// Scalar prefactor.
    pub coeff: Complex64,
    /// Letters in product order.
    pub letters: Vec<Letter>,
}

impl Word {
    /// The empty word (the identity of the product).
    pub fn one() -> Self {
        Self { coeff: cplx(1.0, 0.0), letters: Vec::new() }
    }

    /// Word from letters with unit coefficient.
    pub fn from_letters(letters: Vec<Letter>) -> Self {
        Self { coeff: cplx(1.0, 0.0), letters }
    }

    /// Index pattern of the word.
    pub fn pattern(&self) -> Vec<u32> {
        self.letters.iter().map(|l| l.index).collect()
    }

    /// Validates every letter against the family and merges adjacent
    /// letters with equal indices into single letters.
    pub fn reduced(&self, family: &Family) -> Result<Word> {
        for l in &self.letters {
            let m = family.member(l.index)?;
            if l.elem.nrows() != m.algebra.dim || l.elem.ncols() != m.algebra.dim {
                return Err(Error::ShapeMismatch(format!(
                    "letter at index {} is {}x{}, algebra ambient is {}",
                    l.index,
                    l.elem.nrows(),
                    l.elem.ncols(),
                    m.algebra.dim
                )));
            }
            if !m.algebra.contains(&l.elem) {
                return Err(Error::NotInImage(format!(
                    "letter element is not in the algebra at index {}",
                    l.index
                )));
            }
        }
        Ok(Word { coeff: self.coeff, letters: merge_adjacent(self.letters.clone()) })
    }

    /// Adjoint word: reversed order, adjoint elements, conjugate coefficient.
    pub fn adjoint(&self) -> Word {
        Word {
            coeff: self.coeff.conj(),
            letters: self
                .letters
                .iter()
                .rev()
                .map(|l| Letter { index: l.index, elem: l.elem.adjoint() })
                .collect(),
        }
    }

    /// Concatenation followed by adjacent-index merging.
    pub fn times(&self, other: &Word) -> Word {
        let mut letters = self.letters.clone();
        letters.extend(other.letters.iter().cloned());
        Word { coeff: self.coeff * other.coeff, letters: merge_adjacent(letters) }
    }

    /// Deterministic byte key of the letter sequence (coefficient excluded).
    pub fn key(&self) -> Vec<u8> {
        key_of(&self.letters)
    }
}

/// Merges adjacent letters with equal indices by multiplying the elements.
pub fn merge_adjacent(letters: Vec<Letter>) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(letters.len());
    for l in letters {
        match out.last_mut() {
            Some(last) if last.index == l.index => {
                last.elem = &last.elem * &l.elem;
            }
            _ => out.push(l),
        }
    }
    out
}

/// Byte key of a letter slice: index tag then element entries, all little
/// endian, column-major.
pub fn key_of(letters: &[Letter]) -> Vec<u8> {
    let mut k = Vec::with_capacity(letters.len() * 16);
    for l in letters {
        k.extend_from_slice(&l.index.to_le_bytes());
        for z in l.elem.iter() {
            k.extend_from_slice(&z.re.to_le_bytes());
            k.extend_from_slice(&z.im.to_le_bytes());
        }
    }
    k
}

/// Random index pattern of the given length with distinct adjacent indices.
pub fn random_pattern<R: Rng>(rng: &mut R, indices: &[u32], len: usize) -> Vec<u32> {
    let mut pat = Vec::with_capacity(len);
    let mut prev: Option<u32> = None;
    for _ in 0..len {
        loop {
            let i = indices[rng.gen_range(0..indices.len())];
            if prev != Some(i) || indices.len() == 1 {
                pat.push(i);
                prev = Some(i);
                break;
            }
        }
    }
    pat
}

/// Random element of the algebra at `index`: a Gaussian combination of the
/// basis, scaled to unit operator norm, optionally centered.
pub fn random_element<R: Rng>(
    rng: &mut R,
    family: &Family,
    index: u32,
    centered: bool,
) -> Result<CMat> {
    let m = family.member(index)?;
    let c = gauss_cmat(rng, m.algebra.nbasis(), 1);
    let cv = crate::linalg::CVec::from_iterator(m.algebra.nbasis(), c.iter().copied());
    let mut x = unit_op_norm(&m.algebra.element(&cv))?;
    if centered {
        x = m.psi.center(&x)?;
        if max_abs(&x) < 1.0e-12 {
            return Err(Error::DegenerateChoice("centered sample vanished".into()));
        }
        x = unit_op_norm(&x)?;
    }
    Ok(x)
}

/// Random word with the given index pattern; letters are sampled inside
/// the respective algebras with unit operator norm.
pub fn random_word<R: Rng>(
    rng: &mut R,
    family: &Family,
    pattern: &[u32],
    centered: bool,
) -> Result<Word> {
    let mut letters = Vec::with_capacity(pattern.len());
    for &i in pattern {
        let elem = random_element(rng, family, i, centered)?;
        letters.push(Letter { index: i, elem });
    }
    Word::from_letters(letters).reduced(family)
}
