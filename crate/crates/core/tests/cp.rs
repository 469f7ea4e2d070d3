//! Free products of maps, unitalizations and complete-positivity
//! certificates.

mod common;

use std::collections::BTreeMap;

use common::{diag2, diag_family, scalar_family};
use monoprod_core::algebra::{Algebra, Family};
use monoprod_core::cp::{
    cp_check_choi, cp_check_gram, eval_free_product, eval_split_product, kraus_images,
    restriction_pair, schur_images, unitalize, GramOptions, UnitalRule,
};
use monoprod_core::engine::{eval_map_product, EvalOrder, TransferFamily, TransferMap};
use monoprod_core::linalg::{
    blkdiag, cplx, dag, eye, gauss_cmat, max_abs, psd_power, trace, CMat,
};
use monoprod_core::word::{random_element, random_pattern, random_word, Letter, Word};
use monoprod_core::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Unital completely positive maps from each member into a full matrix
/// target, built from normalized Kraus operators.
fn kraus_transfers(seed: u64, family: &Family, dt: usize, nk: usize) -> TransferFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maps = BTreeMap::new();
    for m in &family.members {
        let raws: Vec<CMat> = (0..nk)
            .map(|_| gauss_cmat(&mut rng, m.algebra.dim, dt))
            .collect();
        let mut s = CMat::zeros(dt, dt);
        for k in &raws {
            s += dag(k) * k;
        }
        let t = psd_power(&s, -0.5, 1.0e-12);
        let kraus: Vec<CMat> = raws.iter().map(|k| k * &t).collect();
        let images = kraus_images(&m.algebra, &kraus).unwrap();
        maps.insert(
            m.index,
            TransferMap {
                index: m.index,
                domain: m.algebra.clone(),
                images,
            },
        );
    }
    TransferFamily {
        target: Algebra::full_matrix(dt),
        embed: vec![eye(dt)],
        maps,
    }
}

/// Entrywise multiplier maps with Hermitian multipliers and unit diagonal;
/// they fix the embedded diagonal base and respect its bimodule action.
fn schur_transfers(seed: u64, family: &Family) -> TransferFamily {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut maps = BTreeMap::new();
    for m in &family.members {
        let g = gauss_cmat(&mut rng, 2, 2);
        let mut mult = &g + dag(&g);
        mult[(0, 0)] = cplx(1.0, 0.0);
        mult[(1, 1)] = cplx(1.0, 0.0);
        let images = schur_images(&m.algebra, &mult).unwrap();
        maps.insert(
            m.index,
            TransferMap {
                index: m.index,
                domain: m.algebra.clone(),
                images,
            },
        );
    }
    TransferFamily {
        target: Algebra::full_matrix(2),
        embed: diag2().basis,
        maps,
    }
}

fn random_base<R: Rng>(rng: &mut R, b: &Algebra) -> CMat {
    let g = gauss_cmat(rng, b.nbasis(), 1);
    let mut out = CMat::zeros(b.dim, b.dim);
    for (j, w) in b.basis.iter().enumerate() {
        out += w * g[(j, 0)];
    }
    out
}

#[test]
fn free_product_fixes_base_and_single_letters() {
    let f = scalar_family(11, &[1, 2, 3], 2);
    let t = kraus_transfers(12, &f, 2, 2);
    let one = eval_free_product(&f, &t, &Word::one()).unwrap();
    assert!(max_abs(&(one - eye(2))) < 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for &i in &[1u32, 2, 3] {
        let x = random_element(&mut rng, &f, i, false).unwrap();
        let w = Word::from_letters(vec![Letter {
            index: i,
            elem: x.clone(),
        }]);
        let v = eval_free_product(&f, &t, &w).unwrap();
        let direct = t.map(i).unwrap().apply(&x).unwrap();
        assert!(max_abs(&(v - direct)) < 1e-12);
    }
    // A letter equal to a base multiple of the unit passes through.
    let w = Word::from_letters(vec![Letter {
        index: 2,
        elem: eye(2) * cplx(0.7, 0.0),
    }]);
    let v = eval_free_product(&f, &t, &w).unwrap();
    assert!(max_abs(&(v - eye(2) * cplx(0.7, 0.0))) < 1e-12);
}

#[test]
fn free_product_multiplies_centered_words() {
    let cases = vec![
        {
            let f = scalar_family(21, &[1, 2, 3], 2);
            let t = kraus_transfers(22, &f, 2, 2);
            (f, t)
        },
        {
            let f = diag_family(&[1, 2, 3]);
            let t = schur_transfers(23, &f);
            (f, t)
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    for (f, t) in &cases {
        for len in 1..=5 {
            for _ in 0..5 {
                let pat = random_pattern(&mut rng, &f.indices(), len);
                let w = random_word(&mut rng, f, &pat, true).unwrap();
                let v = eval_free_product(f, t, &w).unwrap();
                let mut direct = eye(t.target.dim) * w.coeff;
                for l in &w.letters {
                    direct = direct * t.map(l.index).unwrap().apply(&l.elem).unwrap();
                }
                assert!(max_abs(&(v - direct)) < 1e-9);
            }
        }
    }
}

#[test]
fn free_and_ordered_products_agree_on_valley_words() {
    let f = scalar_family(25, &[1, 2, 3], 2);
    let t = kraus_transfers(26, &f, 2, 2);
    let mut rng = ChaCha8Rng::seed_from_u64(27);
    let indices = f.indices();
    let mut patterns: Vec<Vec<u32>> = Vec::new();
    let mut stack: Vec<Vec<u32>> = indices.iter().map(|&i| vec![i]).collect();
    while let Some(p) = stack.pop() {
        patterns.push(p.clone());
        if p.len() >= 5 {
            continue;
        }
        for &i in &indices {
            if i != *p.last().unwrap() {
                let mut q = p.clone();
                q.push(i);
                stack.push(q);
            }
        }
    }
    let is_valley = |p: &[u32]| {
        let peak = p.iter().enumerate().min_by_key(|(_, &i)| i).unwrap().0;
        p.windows(2).enumerate().all(|(k, w)| {
            if k < peak {
                w[0] > w[1]
            } else {
                w[0] < w[1]
            }
        })
    };
    let mut checked = 0;
    for pat in patterns.iter().filter(|p| is_valley(p)) {
        let w = random_word(&mut rng, &f, pat, true).unwrap();
        let free = eval_free_product(&f, &t, &w).unwrap();
        let mono = eval_map_product(&f, &t, &w, EvalOrder::Canonical).unwrap();
        assert!(
            max_abs(&(free - mono)) < 1e-9,
            "pattern {pat:?} disagrees"
        );
        checked += 1;
    }
    assert!(checked > 20);
}

#[test]
fn unitalization_extends_expectations_and_maps() {
    let cases = vec![
        {
            let f = scalar_family(31, &[1, 2], 2);
            let t = kraus_transfers(32, &f, 2, 2);
            (f, t)
        },
        {
            let f = diag_family(&[1, 2]);
            let t = schur_transfers(33, &f);
            (f, t)
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for (f, t) in &cases {
        for rule in [UnitalRule::Annihilate, UnitalRule::Extend] {
            let m = f.member(1).unwrap();
            let u = unitalize(m, rule).unwrap();
            let e = &u.unit_defect;
            // The defect is a self-adjoint projection of the enlarged
            // algebra, and the enlarged unit is the ambient identity.
            assert!(max_abs(&(e * e - e)) < 1e-12);
            assert!(max_abs(&(dag(e) - e)) < 1e-12);
            assert!(u.member.algebra.contains(e));
            let dim = u.member.algebra.dim;
            assert!(max_abs(&(u.member.algebra.identity() - eye(dim))) < 1e-12);
            let lifted = u.lift_transfer(t.map(1).unwrap(), &t.embed).unwrap();
            for _ in 0..10 {
                let a = random_element(&mut rng, f, 1, false).unwrap();
                let bv = random_base(&mut rng, &f.b);
                let x = u.member.psi.embed_b(&bv).unwrap() + u.inject(&a).unwrap();
                // Expectation rule on `b 1 + a`.
                let got = u.member.psi.apply(&x).unwrap();
                let want = match rule {
                    UnitalRule::Annihilate => bv.clone(),
                    UnitalRule::Extend => &bv + m.psi.apply(&a).unwrap(),
                };
                assert!(max_abs(&(got - want)) < 1e-10);
                // Lifted map rule on `b 1 + a`.
                let got = lifted.apply(&x).unwrap();
                let want =
                    t.embed_b(&f.b, &bv).unwrap() + t.map(1).unwrap().apply(&a).unwrap();
                assert!(max_abs(&(got - want)) < 1e-10);
                // The lifted map kills base multiples of the defect, since
                // the original map is unital.
                let defect = blkdiag(&CMat::zeros(m.algebra.dim, m.algebra.dim), &bv);
                let got = lifted.apply(&defect).unwrap();
                assert!(max_abs(&got) < 1e-10);
            }
        }
    }
}

#[test]
fn restriction_of_free_product_matches_ordered_product() {
    let cases = vec![
        {
            let f = scalar_family(41, &[1, 2], 2);
            let t = kraus_transfers(42, &f, 2, 2);
            (f, t)
        },
        {
            let f = diag_family(&[1, 2]);
            let t = schur_transfers(44, &f);
            (f, t)
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for (f, t) in &cases {
        let mut worst = 0.0f64;
        for len in 1..=5 {
            for _ in 0..8 {
                let pat = random_pattern(&mut rng, &f.indices(), len);
                let w = random_word(&mut rng, f, &pat, false).unwrap();
                let (free, mono) = restriction_pair(f, t, &w).unwrap();
                worst = worst.max(max_abs(&(free - mono)));
            }
        }
        assert!(worst < 1e-9, "worst deviation {worst:.3e}");
    }
    // Families with three members are rejected.
    let f = scalar_family(45, &[1, 2, 3], 2);
    let t = kraus_transfers(46, &f, 2, 2);
    let w = random_word(&mut rng, &f, &[1, 2], false).unwrap();
    assert!(matches!(
        restriction_pair(&f, &t, &w),
        Err(Error::ContextMismatch(_))
    ));
}

#[test]
fn split_evaluation_matches_direct_recursion() {
    let cases = vec![
        {
            let f = scalar_family(51, &[1, 2, 3, 4], 2);
            let t = kraus_transfers(52, &f, 2, 2);
            (f, t, vec![2u32, 3, 4])
        },
        {
            let f = diag_family(&[1, 2, 3]);
            let t = schur_transfers(53, &f);
            (f, t, vec![2u32, 3])
        },
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(54);
    for (f, t, splits) in &cases {
        let mut worst = 0.0f64;
        for _ in 0..25 {
            let len = rng.gen_range(1..=6);
            let pat = random_pattern(&mut rng, &f.indices(), len);
            let w = random_word(&mut rng, f, &pat, false).unwrap();
            let direct = eval_map_product(f, t, &w, EvalOrder::Canonical).unwrap();
            for &split in splits {
                let nested = eval_split_product(f, t, &w, split).unwrap();
                worst = worst.max(max_abs(&(&nested - &direct)));
            }
        }
        assert!(worst < 1e-9, "worst deviation {worst:.3e}");
    }
    // Splits outside the index range are rejected.
    let (f, t, _) = &cases[0];
    let w = random_word(&mut rng, f, &[1, 2], false).unwrap();
    assert!(matches!(
        eval_split_product(f, t, &w, 1),
        Err(Error::ContextMismatch(_))
    ));
    assert!(matches!(
        eval_split_product(f, t, &w, 5),
        Err(Error::ContextMismatch(_))
    ));
}

#[test]
fn choi_certificate_classifies_known_maps() {
    let m2 = Algebra::full_matrix(2);
    // Identity map: smallest block eigenvalue is exactly zero.
    let v = cp_check_choi(&m2, &m2.basis).unwrap();
    assert!(v.abs() < 1e-12);
    // Transpose: the classical non-example.
    let tr: Vec<CMat> = m2.basis.iter().map(|b| b.transpose()).collect();
    let v = cp_check_choi(&m2, &tr).unwrap();
    assert!((v + 1.0).abs() < 1e-12);
    // Depolarizing with mixing weight one half stays strictly positive.
    let dep: Vec<CMat> = m2
        .basis
        .iter()
        .map(|b| b * cplx(0.5, 0.0) + eye(2) * (trace(b) * cplx(0.25, 0.0)))
        .collect();
    let v = cp_check_choi(&m2, &dep).unwrap();
    assert!((v - 0.25).abs() < 1e-12);
    // The certificate needs the full matrix algebra.
    let d2 = diag2();
    assert!(matches!(
        cp_check_choi(&d2, &d2.basis),
        Err(Error::NotFullAlgebra(_))
    ));
}

#[test]
fn gram_sampling_certifies_and_refutes() {
    let f = scalar_family(61, &[1, 2, 3], 2);
    let t = kraus_transfers(62, &f, 2, 2);
    let opts = GramOptions {
        rounds: 20,
        max_words: 5,
        max_len: 5,
        seed: 63,
    };
    let ev = cp_check_gram(&f, &t, &opts).unwrap();
    assert!(ev.min_eig > -1e-8, "min eigenvalue {:.3e}", ev.min_eig);
    assert!(ev.herm_defect < 1e-12, "defect {:.3e}", ev.herm_defect);
    assert_eq!(ev.round_eigs.len(), 20);
    // Corrupting one factor with the transpose map is detected.
    let mut bad = t.clone();
    let imgs: Vec<CMat> = f
        .member(2)
        .unwrap()
        .algebra
        .basis
        .iter()
        .map(|b| b.transpose())
        .collect();
    bad.maps.get_mut(&2).unwrap().images = imgs;
    let ev = cp_check_gram(&f, &bad, &opts).unwrap();
    assert!(ev.min_eig < -1e-3, "corrupted min eigenvalue {:.3e}", ev.min_eig);
}

#[test]
fn free_product_rejects_maps_moving_the_base() {
    let f = scalar_family(71, &[1, 2], 2);
    let mut t = kraus_transfers(72, &f, 2, 2);
    for img in &mut t.maps.get_mut(&1).unwrap().images {
        *img *= cplx(0.9, 0.0);
    }
    let w = random_word(&mut ChaCha8Rng::seed_from_u64(73), &f, &[1, 2], false).unwrap();
    assert!(matches!(
        eval_free_product(&f, &t, &w),
        Err(Error::CompatibilityFail(_))
    ));
}
