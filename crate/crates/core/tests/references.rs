//! Reference solutions against independent computations.

use std::sync::Arc;

use accelopt::certificates::gap_q;
use accelopt::linalg::{lincomb, DenseMatrix};
use accelopt::problems::{
    gen_cs_tv, gen_logistic, reference_composite, reference_two_block, CompositeProblem, Quadratic,
    ReferenceConfig,
};
use accelopt::prox::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Ternary search of a convex scalar function on `[lo, hi]`.
fn ternary(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let a = lo + (hi - lo) / 3.0;
        let b = hi - (hi - lo) / 3.0;
        if f(a) <= f(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn logistic_reference_matches_coordinate_descent() {
    let inst = gen_logistic(5, 3, 2, 0.0, 17).unwrap();
    let p = &inst.problem;
    let r = reference_composite(p, &ReferenceConfig::default()).unwrap();

    // exact cyclic coordinate minimization of the full objective
    let mut x = vec![0.0; p.dim()];
    for _ in 0..2000 {
        for i in 0..x.len() {
            let t = ternary(
                |t| {
                    let mut y = x.clone();
                    y[i] = t;
                    p.objective(&y)
                },
                -30.0,
                30.0,
            );
            x[i] = t;
        }
    }
    let brute = p.objective(&x);
    assert!((r.f_star - brute).abs() <= 1e-4, "{} vs {brute}", r.f_star);
    assert!(r.f_star <= brute + 1e-9);
}

#[test]
fn scalar_quadratic_reference() {
    let f = Quadratic::new(DenseMatrix::identity(1), vec![0.0]).unwrap();
    let p = CompositeProblem::new(Arc::new(f), Arc::new(Zero));
    let r = reference_composite(&p, &ReferenceConfig::default()).unwrap();
    assert!(r.x[0].abs() <= 1e-6 && r.f_star.abs() <= 1e-12);
}

#[test]
fn two_block_reference_is_a_saddle_point() {
    let inst = gen_cs_tv(16, 0.3, 1e-3, 1e-3, 2).unwrap();
    let p = &inst.problem;
    let r = reference_two_block(p, &ReferenceConfig::default()).unwrap();
    let (ys, zs) = (r.y.clone().unwrap(), r.z.clone().unwrap());
    assert!(p.feasibility(&r.x, &ys) <= 1e-8);

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        // feasible perturbation: y = Ax + b
        let dx: Vec<f64> = (0..p.x_dim()).map(|_| rng.random_range(-0.1..0.1)).collect();
        let x = lincomb(1.0, &r.x, 1.0, &dx);
        let y = p.a.apply(&x);
        let z: Vec<f64> = (0..p.y_dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let q = gap_q(&r.x, &ys, &zs, &x, &y, &z, p);
        assert!(q >= -1e-9, "{q}");
        // with both arguments feasible Q reduces to the objective difference
        let diff = p.objective(&x, &y) - p.objective(&r.x, &ys);
        assert!((q - diff).abs() <= 1e-8 * (1.0 + diff.abs()));
    }
    assert_eq!(gap_q(&r.x, &ys, &zs, &r.x, &ys, &zs, p), 0.0);
}
