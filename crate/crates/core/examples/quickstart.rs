//! End-to-end smoke drive through the public API: builds a two-member
//! family of 2x2 algebras, compares the chain-space moment against the
//! recursive evaluation, evaluates the two-state recursion, and pushes the
//! family through a transferred product built from unitary conjugation
//! maps.  Exits nonzero if any invariant drifts above 1e-9.

use std::collections::BTreeMap;
use std::process::ExitCode;

use monoprod_core::algebra::{Algebra, CondExp, Family, FamilyMember};
use monoprod_core::bimodule::monotone_model;
use monoprod_core::engine::{eval_cmonotone, eval_monotone, Strictness};
use monoprod_core::linalg::{cplx, max_abs, CMat};
use monoprod_core::transfer::transfer_realization;
use monoprod_core::word::{Letter, Word};

fn herm2(d0: f64, d1: f64, re: f64, im: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[cplx(d0, 0.0), cplx(re, im), cplx(re, -im), cplx(d1, 0.0)],
    )
}

fn rot(t: f64) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[
            cplx(t.cos(), 0.0),
            cplx(-t.sin(), 0.0),
            cplx(t.sin(), 0.0),
            cplx(t.cos(), 0.0),
        ],
    )
}

fn member(i: u32, rho: &CMat, phi: Option<&CMat>) -> FamilyMember {
    let a = Algebra::full_matrix(2);
    FamilyMember {
        index: i,
        algebra: a.clone(),
        psi: CondExp::from_density(a.clone(), rho).unwrap(),
        phi: phi.map(|p| CondExp::from_density(a, p).unwrap()),
    }
}

fn main() -> ExitCode {
    let rho1 = herm2(0.7, 0.3, 0.0, 0.0);
    let rho2 = herm2(0.6, 0.4, 0.2, 0.0);
    let phi2 = herm2(0.5, 0.5, -0.1, 0.0);
    let f = Family::new(vec![
        member(1, &rho1, Some(&rho1)),
        member(2, &rho2, Some(&phi2)),
    ])
    .unwrap();

    let a = herm2(1.0, -0.3, 0.5, 0.0);
    let b = herm2(0.2, 0.1, 0.3, 0.1);
    let w = Word::from_letters(vec![
        Letter { index: 1, elem: a.clone() },
        Letter { index: 2, elem: b },
        Letter { index: 1, elem: a },
    ]);

    let chain = monotone_model(&f).unwrap().moment(&w).unwrap()[(0, 0)];
    let rec = eval_monotone(&f, &w).unwrap()[(0, 0)];
    let two_state = eval_cmonotone(&f, &w, Strictness::Strict).unwrap();
    println!("chain moment      : {:+.15e} {:+.15e}i", chain.re, chain.im);
    println!("recursive moment  : {:+.15e} {:+.15e}i", rec.re, rec.im);
    println!(
        "two-state moment  : {:+.15e} {:+.15e}i",
        two_state.re, two_state.im
    );

    // Transferred product: conjugation by fixed rotations, source states
    // pulled back so expectations agree through the maps.
    let (u1, u2) = (rot(0.4), rot(0.9));
    let pull = |u: &CMat, rho: &CMat| u * rho * u.adjoint();
    let src = Family::new(vec![
        member(1, &pull(&u1, &rho1), None),
        member(2, &pull(&u2, &rho2), None),
    ])
    .unwrap();
    let tgt = Family::new(vec![member(1, &rho1, None), member(2, &rho2, None)]).unwrap();
    let mut maps = BTreeMap::new();
    for (i, u) in [(1u32, &u1), (2u32, &u2)] {
        let a4 = Algebra::full_matrix(2);
        maps.insert(
            i,
            a4.basis.iter().map(|e| u.adjoint() * e * u).collect::<Vec<_>>(),
        );
    }
    let tr = transfer_realization(&src, &tgt, &maps).unwrap();
    let tm = tr.moment(&w).unwrap()[(0, 0)];
    let sm = monotone_model(&src).unwrap().moment(&w).unwrap()[(0, 0)];
    println!("transfer moment   : {:+.15e} {:+.15e}i", tm.re, tm.im);
    println!("source moment     : {:+.15e} {:+.15e}i", sm.re, sm.im);

    let x = herm2(0.4, -0.2, 0.1, 0.3);
    let gap = max_abs(
        &(tr.theta_letter(1, &x).unwrap() - tr.member_letter(1, &x).unwrap()),
    );
    println!("restriction gap   : {gap:.3e}");

    let ok = (chain - rec).norm() < 1.0e-9
        && (tm - sm).norm() < 1.0e-9
        && two_state.im.abs() < 1.0e-9
        && gap < 1.0e-9;
    println!("status            : {}", if ok { "ok" } else { "FAILED" });
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
