mod common;

use std::collections::BTreeMap;

use monoprod_core::algebra::{Algebra, CondExp, Family, FamilyMember};
use monoprod_core::bimodule::monotone_model;
use monoprod_core::embedding::{nested_pair, verify_nested_embedding, Inclusion, NestedPair};
use monoprod_core::linalg::{cplx, max_abs, op_norm, random_density, trace, CMat};
use monoprod_core::word::{Letter, Word};
use monoprod_core::Error;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Places a 2x2 matrix in the upper-left block of a 4x4 matrix.
fn ul(x: &CMat) -> CMat {
    let mut m = CMat::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            m[(r, c)] = x[(r, c)];
        }
    }
    m
}

/// Places a 2x2 matrix in the lower-right block of a 4x4 matrix.
fn lr(x: &CMat) -> CMat {
    let mut m = CMat::zeros(4, 4);
    for r in 0..2 {
        for c in 0..2 {
            m[(r + 2, c + 2)] = x[(r, c)];
        }
    }
    m
}

fn pauli_x() -> CMat {
    let mut x = CMat::zeros(2, 2);
    x[(0, 1)] = cplx(1.0, 0.0);
    x[(1, 0)] = cplx(1.0, 0.0);
    x
}

/// The block-pair algebra of two M_2 summands, over the block scalars.
fn block_pair_base() -> Algebra {
    Algebra::new(vec![ul(&CMat::identity(2, 2)), lr(&CMat::identity(2, 2))]).unwrap()
}

fn block_pair_algebra() -> Algebra {
    let m2 = Algebra::full_matrix(2);
    let mut basis: Vec<CMat> = m2.basis.iter().map(ul).collect();
    basis.extend(m2.basis.iter().map(lr));
    Algebra::new(basis).unwrap()
}

/// Expectation onto the block scalars from blockwise densities.
fn block_pair_exp(a: &Algebra, base: &Algebra, rho1: &CMat, rho2: &CMat) -> CondExp {
    let embed = base.basis.clone();
    let images = a
        .basis
        .iter()
        .map(|e| {
            let top = CMat::from_fn(2, 2, |r, c| e[(r, c)]);
            let bot = CMat::from_fn(2, 2, |r, c| e[(r + 2, c + 2)]);
            base.basis[0].clone() * trace(&(rho1 * top)) + base.basis[1].clone() * trace(&(rho2 * bot))
        })
        .collect();
    CondExp::new(a.clone(), base.clone(), embed, images).unwrap()
}

/// A doubled family: each M_2 member sits diagonally in a pair of blocks,
/// the second block twisted by a unitary, over the block-scalar base.
fn doubled_pair(seed: u64, indices: &[u32]) -> monoprod_core::embedding::NestedPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = pauli_x();
    let base = block_pair_base();
    let big_alg = block_pair_algebra();
    let m2 = Algebra::full_matrix(2);

    let mut small_members = Vec::new();
    let mut big_members = Vec::new();
    let mut incs = BTreeMap::new();
    for &i in indices {
        let rho = random_density(&mut rng, 2, 0.05);
        let rho2 = &x * &rho * &x;
        let psi_small = CondExp::from_density(m2.clone(), &rho).unwrap();
        small_members.push(FamilyMember {
            index: i,
            algebra: m2.clone(),
            psi: psi_small,
            phi: None,
        });
        let psi_big = block_pair_exp(&big_alg, &base, &rho, &rho2);
        big_members.push(FamilyMember {
            index: i,
            algebra: big_alg.clone(),
            psi: psi_big,
            phi: None,
        });
        let images = m2.basis.iter().map(|e| ul(e) + lr(&(&x * e * &x))).collect();
        incs.insert(i, Inclusion::new(m2.clone(), &big_alg, images).unwrap());
    }
    let small = Family::new(small_members).unwrap();
    let big = Family::new(big_members).unwrap();
    let inc_b = Inclusion::new(
        small.b.clone(),
        &big.b,
        vec![base.identity()],
    )
    .unwrap();
    nested_pair(small, big, inc_b, incs).unwrap()
}

/// Identity nesting: all comparisons are exact.
#[test]
fn identity_nesting_has_zero_deviations() {
    let family = common::scalar_family(48, &[1, 2], 2);
    let incs = family
        .indices()
        .iter()
        .map(|&i| {
            let a = family.member(i).unwrap().algebra.clone();
            (i, Inclusion::identity(a.clone(), &a).unwrap())
        })
        .collect();
    let inc_b = Inclusion::identity(family.b.clone(), &family.b).unwrap();
    let pair = nested_pair(family.clone(), family, inc_b, incs).unwrap();
    assert!(pair.enlarged.is_none());
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let check = verify_nested_embedding(&pair, &mut rng, 10, 8, 4).unwrap();
    assert!(check.moment_dev < 1e-12, "moments {}", check.moment_dev);
    assert!(check.norm_dev < 1e-12, "norms {}", check.norm_dev);
    assert!(check.domination_margin.abs() < 1e-12);
}

/// Doubling each member into twisted blocks over the block scalars
/// preserves vacuum moments and realizes the product isometrically.
#[test]
fn doubled_family_embeds_isometrically() {
    let pair = doubled_pair(49, &[1, 2, 3]);
    assert!(pair.enlarged.is_none());
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let check = verify_nested_embedding(&pair, &mut rng, 20, 12, 4).unwrap();
    assert!(check.moment_dev < 1e-9, "moments {}", check.moment_dev);
    assert!(check.norm_dev < 1e-7, "norms {}", check.norm_dev);
    assert!(
        check.domination_margin > -1e-12,
        "domination {}",
        check.domination_margin
    );
}

fn corner_pair(seed: u64) -> NestedPair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = block_pair_base();
    let big_alg = block_pair_algebra();
    let m2 = Algebra::full_matrix(2);

    let mut small_members = Vec::new();
    let mut big_members = Vec::new();
    let mut incs = BTreeMap::new();
    for &i in &[1u32, 2] {
        let rho1 = random_density(&mut rng, 2, 0.05);
        let rho2 = random_density(&mut rng, 2, 0.05);
        small_members.push(FamilyMember {
            index: i,
            algebra: m2.clone(),
            psi: CondExp::from_density(m2.clone(), &rho1).unwrap(),
            phi: None,
        });
        big_members.push(FamilyMember {
            index: i,
            algebra: big_alg.clone(),
            psi: block_pair_exp(&big_alg, &base, &rho1, &rho2),
            phi: None,
        });
        let images = m2.basis.iter().map(ul).collect();
        incs.insert(i, Inclusion::new(m2.clone(), &big_alg, images).unwrap());
    }
    let small = Family::new(small_members).unwrap();
    let big = Family::new(big_members).unwrap();
    let inc_b =
        Inclusion::new(small.b.clone(), &big.b, vec![base.basis[0].clone()]).unwrap();
    nested_pair(small, big, inc_b, incs).unwrap()
}

/// A corner inclusion keeps its original members as the comparison
/// domain; on those the big realization acts as the small one padded by
/// zeros, so moments and norms agree exactly.
#[test]
fn corner_inclusion_embeds_on_the_original_members() {
    let pair = corner_pair(50);
    // The non-unital inclusion is recorded with an enlarged companion
    // carrying the unit defect as an extra direction per member.
    let enlarged = pair.enlarged.as_ref().unwrap();
    assert_eq!(enlarged.member(1).unwrap().algebra.nbasis(), 5);
    assert_eq!(enlarged.b.nbasis(), 2);

    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let check = verify_nested_embedding(&pair, &mut rng, 15, 10, 4).unwrap();
    assert!(check.moment_dev < 1e-9, "moments {}", check.moment_dev);
    assert!(check.norm_dev < 1e-7, "norms {}", check.norm_dev);
    assert!(check.domination_margin > -1e-12);
}

/// The enlarged family is not norm-compatible with the enclosing one:
/// with p the adjoined unit defect, p at index 2 minus the three-letter
/// word p p p at indexes 1, 2, 1 acts as zero on the inner product
/// module, because both map to the same vacuum-line projection there,
/// while the enclosing module keeps the defect-led chain directions at
/// index 2 that letters at index 1 annihilate, leaving a projection of
/// norm one.  Vacuum moments still agree; only norms separate.
#[test]
fn adjoined_unit_defects_can_separate_the_products() {
    let pair = corner_pair(50);
    let enlarged = pair.enlarged.clone().unwrap();
    let model_small = monotone_model(&enlarged).unwrap();
    let model_big = monotone_model(&pair.big).unwrap();

    let p1 = pair.unit_defect(1).unwrap();
    let p2 = pair.unit_defect(2).unwrap();
    assert!(max_abs(&(&p1 * &p1 - &p1)) < 1e-12);
    let single = Word::from_letters(vec![Letter { index: 2, elem: p2.clone() }]);
    let mut triple = Word::from_letters(vec![
        Letter { index: 1, elem: p1.clone() },
        Letter { index: 2, elem: p2 },
        Letter { index: 1, elem: p1 },
    ]);
    triple.coeff = cplx(-1.0, 0.0);

    let xs = model_small.space.dense_word(&single).unwrap()
        + model_small.space.dense_word(&triple).unwrap();
    let xb = model_big.space.dense_word(&single).unwrap()
        + model_big.space.dense_word(&triple).unwrap();
    assert!(op_norm(&xs) < 1e-12, "small norm {}", op_norm(&xs));
    assert!((op_norm(&xb) - 1.0).abs() < 1e-12, "big norm {}", op_norm(&xb));
    // The big image is an orthogonal projection.
    assert!(max_abs(&(&xb * &xb - &xb)) < 1e-12);
    assert!(max_abs(&(xb.adjoint() - &xb)) < 1e-12);
    // Moments cannot tell the two realizations apart.
    let ms = model_small.moment(&single).unwrap() + model_small.moment(&triple).unwrap();
    let mb = model_big.moment(&single).unwrap() + model_big.moment(&triple).unwrap();
    assert!(max_abs(&ms) < 1e-12);
    assert!(max_abs(&mb) < 1e-12);
}

/// Incompatible data is rejected with a specific error.
#[test]
fn incompatible_nestings_are_rejected() {
    let family = common::scalar_family(51, &[1, 2], 2);
    let other = common::scalar_family(52, &[1, 2], 2);
    let incs: BTreeMap<u32, Inclusion> = family
        .indices()
        .iter()
        .map(|&i| {
            let a = family.member(i).unwrap().algebra.clone();
            (i, Inclusion::identity(a.clone(), &a).unwrap())
        })
        .collect();
    let inc_b = Inclusion::identity(family.b.clone(), &family.b).unwrap();
    // Same shapes but different states: the restriction check must fail.
    let err = nested_pair(family.clone(), other, inc_b.clone(), incs.clone());
    assert!(matches!(err, Err(Error::CompatibilityFail(_))));

    // Mismatched index sets are rejected outright.
    let third = common::scalar_family(51, &[1, 3], 2);
    let err = nested_pair(family, third, inc_b, incs);
    assert!(matches!(err, Err(Error::ContextMismatch(_))));

    // A non-multiplicative inclusion is rejected at construction.
    let m2 = Algebra::full_matrix(2);
    let mut images = m2.basis.clone();
    images[1] = &images[1] * cplx(2.0, 0.0);
    let err = Inclusion::new(m2.clone(), &m2, images);
    assert!(matches!(err, Err(Error::ContextMismatch(_))));
    let _ = max_abs(&CMat::zeros(1, 1));
}
