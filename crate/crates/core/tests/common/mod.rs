//! Shared builders for integration tests.
#![allow(dead_code)]

use monoprod_core::algebra::{Algebra, CondExp, Family, FamilyMember};
use monoprod_core::linalg::{cplx, random_density, CMat};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Family of full matrix algebras with random faithful states, scalar base.
/// Each member carries an independent `phi` alongside `psi`.
pub fn scalar_family(seed: u64, indices: &[u32], matdim: usize) -> Family {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let members = indices
        .iter()
        .map(|&i| {
            let a = Algebra::full_matrix(matdim);
            let psi =
                CondExp::from_density(a.clone(), &random_density(&mut rng, matdim, 0.05))
                    .unwrap();
            let phi =
                CondExp::from_density(a.clone(), &random_density(&mut rng, matdim, 0.05))
                    .unwrap();
            FamilyMember { index: i, algebra: a, psi, phi: Some(phi) }
        })
        .collect();
    Family::new(members).unwrap()
}

/// Like [`scalar_family`] but with `phi = psi` at the minimal index, so the
/// family is valid for strict state-pair evaluation.
pub fn scalar_family_strict(seed: u64, indices: &[u32], matdim: usize) -> Family {
    let mut f = scalar_family(seed, indices, matdim);
    let m = f.members.first_mut().unwrap();
    m.phi = Some(m.psi.clone());
    f
}

/// The diagonal subalgebra of `M_2`.
pub fn diag2() -> Algebra {
    let mut e11 = CMat::zeros(2, 2);
    e11[(0, 0)] = cplx(1.0, 0.0);
    let mut e22 = CMat::zeros(2, 2);
    e22[(1, 1)] = cplx(1.0, 0.0);
    Algebra::new(vec![e11, e22]).unwrap()
}

/// Compression of `M_2` onto its diagonal, as a conditional expectation.
pub fn diag_compression() -> CondExp {
    let a = Algebra::full_matrix(2);
    let b = diag2();
    let pick = |r: usize, c: usize| {
        CMat::from_fn(2, 2, move |i, j| {
            if i == r && j == c { cplx(1.0, 0.0) } else { cplx(0.0, 0.0) }
        })
    };
    let images = vec![pick(0, 0), CMat::zeros(2, 2), CMat::zeros(2, 2), pick(1, 1)];
    CondExp::new(a, b, b_basis(), images).unwrap()
}

fn b_basis() -> Vec<CMat> {
    diag2().basis
}

/// Family of copies of `M_2` over the diagonal base, each with the
/// diagonal compression as its expectation.
pub fn diag_family(indices: &[u32]) -> Family {
    let members = indices
        .iter()
        .map(|&i| {
            let ce = diag_compression();
            FamilyMember { index: i, algebra: ce.a.clone(), psi: ce, phi: None }
        })
        .collect();
    Family::new(members).unwrap()
}
