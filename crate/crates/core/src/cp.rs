//! Products of bimodule maps into a common target algebra: the free
//! product determined by values on centered alternating words, the
//! ordered product shared with the moment evaluator, unitalizations that
//! connect the two, and complete-positivity certificates via Choi blocks
//! and sampled Gram matrices.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::algebra::{Algebra, CondExp, Family, FamilyMember};
use crate::engine::{eval_map_product, eval_monotone, EvalOrder, TransferFamily, TransferMap};
use crate::error::{Error, Result};
use crate::linalg::{blkdiag, cplx, dag, eye, max_abs, min_eig, CMat};
use crate::word::{key_of, merge_adjacent, random_pattern, random_word, Letter, Word};

/// Expectations below this magnitude count as centered.
const TOL_CENTERED: f64 = 1.0e-12;

fn check_base_identity(family: &Family, transfers: &TransferFamily) -> Result<()> {
    if transfers.embed.len() != family.b.nbasis() {
        return Err(Error::ShapeMismatch(format!(
            "target embeds {} base elements, family base has {}",
            transfers.embed.len(),
            family.b.nbasis()
        )));
    }
    for m in &family.members {
        let t = transfers.map(m.index)?;
        for (g, img) in transfers.embed.iter().enumerate() {
            let lhs = t.apply(&m.psi.embed[g])?;
            if max_abs(&(lhs - img)) > 1.0e-9 {
                return Err(Error::CompatibilityFail(format!(
                    "map at index {} does not fix the embedded base",
                    m.index
                )));
            }
        }
    }
    Ok(())
}

fn free_rec(
    family: &Family,
    transfers: &TransferFamily,
    letters: &[Letter],
    memo: &mut HashMap<Vec<u8>, CMat>,
) -> Result<CMat> {
    match letters.len() {
        0 => return Ok(eye(transfers.target.dim)),
        1 => return transfers.map(letters[0].index)?.apply(&letters[0].elem),
        _ => {}
    }
    let key = key_of(letters);
    if let Some(v) = memo.get(&key) {
        return Ok(v.clone());
    }
    // Leftmost letter whose expectation does not vanish.
    let mut split = None;
    for (k, l) in letters.iter().enumerate() {
        let b = family.member(l.index)?.psi.apply(&l.elem)?;
        if max_abs(&b) > TOL_CENTERED {
            split = Some((k, b));
            break;
        }
    }
    let value = match split {
        // Centered alternating word: the ordered product of the images.
        None => {
            let mut out = eye(transfers.target.dim);
            for l in letters {
                out = out * transfers.map(l.index)?.apply(&l.elem)?;
            }
            out
        }
        // Split the letter into its centered part and its base part; the
        // base part migrates into a neighboring letter.
        Some((k, b)) => {
            let member = family.member(letters[k].index)?;
            let centered = member.psi.center(&letters[k].elem)?;
            let dim = transfers.target.dim;
            let mut acc = CMat::zeros(dim, dim);
            if max_abs(&centered) > TOL_CENTERED {
                let mut cl = letters.to_vec();
                cl[k].elem = centered;
                acc += free_rec(family, transfers, &cl, memo)?;
            }
            let mut ml = letters.to_vec();
            ml.remove(k);
            if k < ml.len() {
                let nb = family.member(ml[k].index)?;
                ml[k].elem = nb.psi.embed_b(&b)? * &ml[k].elem;
            } else {
                let last = ml.len() - 1;
                let nb = family.member(ml[last].index)?;
                ml[last].elem = &ml[last].elem * nb.psi.embed_b(&b)?;
            }
            let ml = merge_adjacent(ml);
            acc += free_rec(family, transfers, &ml, memo)?;
            acc
        }
    };
    memo.insert(key, value.clone());
    Ok(value)
}

/// Evaluates the free product of the transfer maps on a word: the unique
/// extension of the ordered image product from centered alternating words
/// to all words by linearity and the bimodule property.  Every map must
/// restrict to the identity on the embedded base.
pub fn eval_free_product(
    family: &Family,
    transfers: &TransferFamily,
    word: &Word,
) -> Result<CMat> {
    check_base_identity(family, transfers)?;
    let w = word.reduced(family)?;
    let mut memo = HashMap::new();
    Ok(free_rec(family, transfers, &w.letters, &mut memo)? * w.coeff)
}

/// Rule for extending a conditional expectation to the enlarged algebra
/// obtained by adjoining a fresh copy of the base.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnitalRule {
    /// `b 1 + a` maps to `b`; the original member is annihilated.  Used
    /// at the minimal index.
    Annihilate,
    /// `b 1 + a` maps to `b + psi(a)`; the original expectation extends.
    Extend,
}

/// One member enlarged by a fresh base copy.  The element `b 1 + a` is
/// realized block-diagonally as `diag(a + embed(b), b)`, so the enlarged
/// unit is the full ambient identity and the defect `1 - 1_A` is the
/// projection onto the second block.
#[derive(Debug, Clone)]
pub struct Unitalization {
    /// Enlarged member at the original index.
    pub member: FamilyMember,
    /// Projection `1 - 1_A` inside the enlarged ambient algebra.
    pub unit_defect: CMat,
    /// Rule chosen for the enlarged expectation.
    pub rule: UnitalRule,
    /// Member that was enlarged.
    pub original: FamilyMember,
}

/// Adjoins a fresh copy of the base to one member and extends its
/// expectation by the given rule.
pub fn unitalize(m: &FamilyMember, rule: UnitalRule) -> Result<Unitalization> {
    let b = &m.psi.b;
    let d = m.algebra.dim;
    let db = b.dim;
    let zb = CMat::zeros(db, db);
    let za = CMat::zeros(d, d);
    let mut basis = Vec::with_capacity(m.algebra.nbasis() + b.nbasis());
    for a in &m.algebra.basis {
        basis.push(blkdiag(a, &zb));
    }
    for w in &b.basis {
        basis.push(blkdiag(&za, w));
    }
    let enlarged = Algebra::new(basis)?;
    let mut embed = Vec::with_capacity(b.nbasis());
    for (g, w) in b.basis.iter().enumerate() {
        embed.push(blkdiag(&m.psi.embed[g], w));
    }
    let mut images = Vec::with_capacity(enlarged.nbasis());
    match rule {
        UnitalRule::Annihilate => {
            for _ in &m.algebra.basis {
                images.push(zb.clone());
            }
            for w in &b.basis {
                images.push(w.clone());
            }
        }
        UnitalRule::Extend => {
            for (p, _) in m.algebra.basis.iter().enumerate() {
                images.push(m.psi.images[p].clone());
            }
            for _ in &b.basis {
                images.push(zb.clone());
            }
        }
    }
    let psi = CondExp::new(enlarged, b.clone(), embed, images)?;
    let member = FamilyMember {
        index: m.index,
        algebra: psi.a.clone(),
        psi,
        phi: None,
    };
    Ok(Unitalization {
        member,
        unit_defect: blkdiag(&za, &eye(db)),
        rule,
        original: m.clone(),
    })
}

impl Unitalization {
    /// Embeds an element of the original algebra into the enlarged one.
    pub fn inject(&self, x: &CMat) -> Result<CMat> {
        self.original.algebra.coeffs(x)?;
        let db = self.original.psi.b.dim;
        Ok(blkdiag(x, &CMat::zeros(db, db)))
    }

    /// Extends a map on the original algebra to the enlarged one by
    /// `b 1 + a -> b + theta(a)`; `embed` gives the base images in the
    /// target.
    pub fn lift_transfer(&self, t: &TransferMap, embed: &[CMat]) -> Result<TransferMap> {
        if !t.domain.same_as(&self.original.algebra) {
            return Err(Error::ContextMismatch(
                "lift needs a map on the algebra that was enlarged".into(),
            ));
        }
        let b = &self.original.psi.b;
        if embed.len() != b.nbasis() {
            return Err(Error::ShapeMismatch(format!(
                "target embeds {} base elements, base has {}",
                embed.len(),
                b.nbasis()
            )));
        }
        let mut images = t.images.clone();
        for g in 0..b.nbasis() {
            images.push(&embed[g] - t.apply(&self.original.psi.embed[g])?);
        }
        Ok(TransferMap {
            index: self.member.index,
            domain: self.member.algebra.clone(),
            images,
        })
    }
}

/// Evaluates one word of a two-member family in two ways: the free
/// product of the lifted maps over the enlargement that annihilates the
/// lower member and extends the upper one, and the ordered product of the
/// original maps.  The two values coincide.
pub fn restriction_pair(
    family: &Family,
    transfers: &TransferFamily,
    word: &Word,
) -> Result<(CMat, CMat)> {
    if family.members.len() != 2 {
        return Err(Error::ContextMismatch(
            "restriction comparison needs exactly two members".into(),
        ));
    }
    let lo = family.min_index();
    let mut enlarged = Vec::with_capacity(2);
    let mut lifted = BTreeMap::new();
    let mut units = Vec::with_capacity(2);
    for m in &family.members {
        let rule = if m.index == lo {
            UnitalRule::Annihilate
        } else {
            UnitalRule::Extend
        };
        let u = unitalize(m, rule)?;
        lifted.insert(
            m.index,
            u.lift_transfer(transfers.map(m.index)?, &transfers.embed)?,
        );
        enlarged.push(u.member.clone());
        units.push(u);
    }
    let efam = Family::new(enlarged)?;
    let etransfers = TransferFamily {
        target: transfers.target.clone(),
        embed: transfers.embed.clone(),
        maps: lifted,
    };
    let w = word.reduced(family)?;
    let mut letters = Vec::with_capacity(w.letters.len());
    for l in &w.letters {
        let u = units
            .iter()
            .find(|u| u.member.index == l.index)
            .ok_or(Error::UnknownIndex(l.index))?;
        letters.push(Letter {
            index: l.index,
            elem: u.inject(&l.elem)?,
        });
    }
    let mut injected = Word::from_letters(letters);
    injected.coeff = w.coeff;
    let free = eval_free_product(&efam, &etransfers, &injected)?;
    let mono = eval_map_product(family, transfers, word, EvalOrder::Canonical)?;
    Ok((free, mono))
}

fn sub_family(family: &Family, pick: impl Fn(u32) -> bool) -> Result<Family> {
    Family::new(
        family
            .members
            .iter()
            .filter(|m| pick(m.index))
            .cloned()
            .collect(),
    )
}

fn sub_transfers(transfers: &TransferFamily, pick: impl Fn(u32) -> bool) -> TransferFamily {
    TransferFamily {
        target: transfers.target.clone(),
        embed: transfers.embed.clone(),
        maps: transfers
            .maps
            .iter()
            .filter(|(i, _)| pick(**i))
            .map(|(i, t)| (*i, t.clone()))
            .collect(),
    }
}

#[derive(Clone)]
struct Seg {
    high: bool,
    letters: Vec<Letter>,
}

struct SplitEval<'a> {
    family: &'a Family,
    transfers: &'a TransferFamily,
    lo: Family,
    lo_t: TransferFamily,
    hi: Family,
    hi_t: TransferFamily,
}

impl SplitEval<'_> {
    fn seg_value(&self, s: &Seg) -> Result<CMat> {
        let w = Word::from_letters(s.letters.clone());
        if s.high {
            eval_map_product(&self.hi, &self.hi_t, &w, EvalOrder::Canonical)
        } else {
            eval_map_product(&self.lo, &self.lo_t, &w, EvalOrder::Canonical)
        }
    }

    fn seg_expect(&self, s: &Seg) -> Result<CMat> {
        eval_monotone(&self.hi, &Word::from_letters(s.letters.clone()))
    }

    fn eval(&self, segs: &[Seg]) -> Result<CMat> {
        let n = segs.len();
        match n {
            0 => return Ok(eye(self.transfers.target.dim)),
            1 => return self.seg_value(&segs[0]),
            _ => {}
        }
        // The leftmost upper run plays the maximal index of the merged
        // two-member word.
        let p = segs
            .iter()
            .position(|s| s.high)
            .expect("alternating runs contain an upper run");
        if p == 0 {
            let head = self.seg_value(&segs[0])?;
            let rest = self.eval(&segs[1..])?;
            return Ok(head * rest);
        }
        if p == n - 1 {
            let tail = self.seg_value(&segs[p])?;
            let init = self.eval(&segs[..p])?;
            return Ok(init * tail);
        }
        // Interior upper run: absorb its expectation into the run on its
        // left, then add the centered correction.
        let ev = self.seg_expect(&segs[p])?;
        let mut collapsed: Vec<Seg> = segs[..p].to_vec();
        let mut joined = collapsed.pop().expect("left neighbor").letters;
        {
            let last = joined.len() - 1;
            let member = self.family.member(joined[last].index)?;
            joined[last].elem = &joined[last].elem * member.psi.embed_b(&ev)?;
        }
        joined.extend(segs[p + 1].letters.iter().cloned());
        collapsed.push(Seg {
            high: false,
            letters: merge_adjacent(joined),
        });
        collapsed.extend(segs[p + 2..].iter().cloned());
        let t1 = self.eval(&collapsed)?;
        let corr = self.seg_value(&segs[p])? - self.transfers.embed_b(&self.family.b, &ev)?;
        if max_abs(&corr) < 1.0e-15 {
            return Ok(t1);
        }
        let pre = self.eval(&segs[..p])?;
        let suf = self.eval(&segs[p + 1..])?;
        Ok(t1 + pre * corr * suf)
    }
}

/// Evaluates the word by first merging all letters with index at or above
/// `split` into single functional letters of the merged upper member, then
/// running the two-member rules on the run word.  Agreement with the
/// direct evaluation witnesses associativity of the ordered product.
pub fn eval_split_product(
    family: &Family,
    transfers: &TransferFamily,
    word: &Word,
    split: u32,
) -> Result<CMat> {
    let indices = family.indices();
    if !indices.iter().any(|&i| i < split) || !indices.iter().any(|&i| i >= split) {
        return Err(Error::ContextMismatch(
            "split must separate the index set into two nonempty parts".into(),
        ));
    }
    let w = word.reduced(family)?;
    let ev = SplitEval {
        family,
        transfers,
        lo: sub_family(family, |i| i < split)?,
        lo_t: sub_transfers(transfers, |i| i < split),
        hi: sub_family(family, |i| i >= split)?,
        hi_t: sub_transfers(transfers, |i| i >= split),
    };
    let mut segs: Vec<Seg> = Vec::new();
    for l in &w.letters {
        let high = l.index >= split;
        match segs.last_mut() {
            Some(s) if s.high == high => s.letters.push(l.clone()),
            _ => segs.push(Seg {
                high,
                letters: vec![l.clone()],
            }),
        }
    }
    Ok(ev.eval(&segs)? * w.coeff)
}

/// Basis images of `x -> sum_j k_j^adj x k_j` on the given domain.
pub fn kraus_images(domain: &Algebra, kraus: &[CMat]) -> Result<Vec<CMat>> {
    if kraus.is_empty() {
        return Err(Error::DegenerateChoice("no kraus operators".into()));
    }
    let d = domain.dim;
    let dt = kraus[0].ncols();
    for k in kraus {
        if k.nrows() != d || k.ncols() != dt {
            return Err(Error::ShapeMismatch(format!(
                "kraus operator is {}x{}, expected {}x{}",
                k.nrows(),
                k.ncols(),
                d,
                dt
            )));
        }
    }
    Ok(domain
        .basis
        .iter()
        .map(|a| {
            let mut out = CMat::zeros(dt, dt);
            for k in kraus {
                out += dag(k) * a * k;
            }
            out
        })
        .collect())
}

/// Basis images of entrywise multiplication by a fixed matrix.
pub fn schur_images(domain: &Algebra, mult: &CMat) -> Result<Vec<CMat>> {
    if mult.nrows() != domain.dim || mult.ncols() != domain.dim {
        return Err(Error::ShapeMismatch(format!(
            "multiplier is {}x{}, domain ambient is {}x{}",
            mult.nrows(),
            mult.ncols(),
            domain.dim,
            domain.dim
        )));
    }
    Ok(domain.basis.iter().map(|a| a.component_mul(mult)).collect())
}

/// Smallest eigenvalue of the block matrix `[theta(E_pq)]` over all matrix
/// units of the domain, which must be a full matrix algebra.  Nonnegative
/// exactly when the map is completely positive.
pub fn cp_check_choi(domain: &Algebra, images: &[CMat]) -> Result<f64> {
    let d = domain.dim;
    if domain.nbasis() != d * d {
        return Err(Error::NotFullAlgebra(
            "matrix-unit certificate needs the full matrix algebra as domain".into(),
        ));
    }
    if images.len() != domain.nbasis() {
        return Err(Error::ShapeMismatch(format!(
            "{} images for {} basis elements",
            images.len(),
            domain.nbasis()
        )));
    }
    let e = images[0].nrows();
    let mut choi = CMat::zeros(d * e, d * e);
    for p in 0..d {
        for q in 0..d {
            let mut unit = CMat::zeros(d, d);
            unit[(p, q)] = cplx(1.0, 0.0);
            let c = domain.coeffs(&unit)?;
            let mut img = CMat::zeros(e, e);
            for (j, im) in images.iter().enumerate() {
                img += im * c[j];
            }
            choi.view_mut((p * e, q * e), (e, e)).copy_from(&img);
        }
    }
    Ok(min_eig(&choi))
}

/// Sampling plan for Gram-matrix positivity evidence.
#[derive(Debug, Clone, Copy)]
pub struct GramOptions {
    /// Number of independent sampling rounds.
    pub rounds: u32,
    /// Maximal number of words per round.
    pub max_words: usize,
    /// Maximal word length; length zero draws the empty word.
    pub max_len: usize,
    /// Master seed; each round draws from its own stream, so the rounds
    /// are independent of evaluation order.
    pub seed: u64,
}

/// Evidence gathered from sampled Gram matrices `[value(w_p^adj w_q)]`.
#[derive(Debug, Clone)]
pub struct GramEvidence {
    /// Smallest eigenvalue over all rounds.
    pub min_eig: f64,
    /// Smallest eigenvalue per round.
    pub round_eigs: Vec<f64>,
    /// Largest deviation from self-adjointness over all rounds.
    pub herm_defect: f64,
}

/// Samples Gram matrices of random words under the product of the
/// transfer maps.  All eigenvalues are nonnegative up to roundoff when
/// every factor map is completely positive; a negative eigenvalue
/// certifies that the product is not.
pub fn cp_check_gram(
    family: &Family,
    transfers: &TransferFamily,
    opts: &GramOptions,
) -> Result<GramEvidence> {
    if opts.rounds == 0 || opts.max_words == 0 {
        return Err(Error::DegenerateChoice(
            "gram sampling needs at least one round and one word".into(),
        ));
    }
    let indices = family.indices();
    let d = transfers.target.dim;
    let mut round_eigs = Vec::with_capacity(opts.rounds as usize);
    let mut herm_defect: f64 = 0.0;
    for r in 0..opts.rounds {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        rng.set_stream(u64::from(r) + 1);
        let m = rng.gen_range(1..=opts.max_words);
        let mut words = Vec::with_capacity(m);
        for _ in 0..m {
            let len = rng.gen_range(0..=opts.max_len);
            let w = if len == 0 {
                Word::one()
            } else {
                let pat = random_pattern(&mut rng, &indices, len);
                random_word(&mut rng, family, &pat, false)?
            };
            words.push(w);
        }
        let mut gram = CMat::zeros(m * d, m * d);
        for p in 0..m {
            for q in 0..m {
                let v = eval_map_product(
                    family,
                    transfers,
                    &words[p].adjoint().times(&words[q]),
                    EvalOrder::Canonical,
                )?;
                gram.view_mut((p * d, q * d), (d, d)).copy_from(&v);
            }
        }
        herm_defect = herm_defect.max(max_abs(&(&gram - dag(&gram))));
        round_eigs.push(min_eig(&gram));
    }
    let min = round_eigs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(GramEvidence {
        min_eig: min,
        round_eigs,
        herm_defect,
    })
}
