mod common;

use monoprod_core::freemod::{restriction_deviation, separation_demo};
use monoprod_core::word::random_element;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The three-letter product keeps the chain overlap that the collapsed
/// product drops: the result is an explicit multiple of the lowest-index
/// chain, with coefficient `psi(a2 a2*)^2 psi(a3 a3*)`.
#[test]
fn separation_demo_matches_closed_form() {
    let family = common::scalar_family(31, &[1, 2, 3], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (i1, i2, i3) = (1u32, 3u32, 2u32);
    let a1 = random_element(&mut rng, &family, i1, true).unwrap();
    let a2 = random_element(&mut rng, &family, i2, true).unwrap();
    let a3 = random_element(&mut rng, &family, i3, true).unwrap();

    let demo = separation_demo(&family, [i1, i2, i3], [&a1, &a2, &a3]).unwrap();

    let b = family.member(i2).unwrap().psi.scalar(&(&a2 * a2.adjoint())).unwrap();
    let p33 = family.member(i3).unwrap().psi.scalar(&(&a3 * a3.adjoint())).unwrap();
    let p11 = family.member(i1).unwrap().psi.scalar(&(a1.adjoint() * &a1)).unwrap();
    let gamma = b * b * p33;

    assert!((demo.overlap - b).norm() < 1e-12);
    assert!((demo.gamma - gamma).norm() < 1e-10, "gamma {} vs {}", demo.gamma, gamma);
    let norm = gamma.norm() * p11.norm().sqrt();
    assert!((demo.separated_norm - norm).abs() < 1e-10);
    assert!(demo.separated_norm > 1e-3, "demo degenerated to zero");
    assert!(demo.collapsed_norm < 1e-10, "collapsed product should vanish");
    assert!(demo.support_escape < 1e-12, "support should be one chain");
}

/// Scaling the middle letter enters the final norm with its fourth
/// power: the product sees the squared overlap of the second slot.
#[test]
fn middle_scaling_enters_quadratically_in_overlap() {
    let family = common::scalar_family(32, &[1, 2, 3], 2);
    let mut rng = ChaCha8Rng::seed_from_u64(78);
    let (i1, i2, i3) = (1u32, 3u32, 2u32);
    let a1 = random_element(&mut rng, &family, i1, true).unwrap();
    let a2 = random_element(&mut rng, &family, i2, true).unwrap();
    let a3 = random_element(&mut rng, &family, i3, true).unwrap();

    let base = separation_demo(&family, [i1, i2, i3], [&a1, &a2, &a3]).unwrap();
    let scaled_mid = &a2 * monoprod_core::linalg::cplx(1.3, 0.0);
    let scaled = separation_demo(&family, [i1, i2, i3], [&a1, &scaled_mid, &a3]).unwrap();

    let ratio = scaled.separated_norm / base.separated_norm;
    let expected = 1.3f64.powi(4);
    assert!(
        (ratio - expected).abs() < 1e-9,
        "norm ratio {ratio} should be 1.3^4 = {expected}"
    );
}

/// On decreasing chains the filtered free action agrees with the
/// decreasing-chain model and never leaves the decreasing chains.
#[test]
fn filtered_action_restricts_to_decreasing_model() {
    let family = common::scalar_family(33, &[1, 2, 3], 2);
    let (dev, escape) = restriction_deviation(&family, 4).unwrap();
    assert!(dev < 1e-9, "deviation on decreasing chains: {dev}");
    assert!(escape < 1e-12, "action escaped the decreasing chains: {escape}");

    let diag = common::diag_family(&[1, 2]);
    let (dev, escape) = restriction_deviation(&diag, 3).unwrap();
    assert!(dev < 1e-9, "deviation over a nontrivial base: {dev}");
    assert!(escape < 1e-12, "escape over a nontrivial base: {escape}");
}
