mod common;

use cmll::embedding::{random_orthonormal, KernelSpec};
use cmll::harness::{fit_pipeline, ExperimentConfig, Method};
use cmll::learner::{binarize, kridge_fit, ridge_fit};
use cmll::linalg::column_means;
use common::*;

#[test]
fn ridge_identity_map() {
    let mut r = rng(80);
    let u = gaussian(20, 3, &mut r);
    let reg = ridge_fit(&u, &u, 0.0).unwrap();
    assert!(reg.predict(&u).unwrap().max_abs_diff(&u) <= 1e-10);
}

#[test]
fn ridge_first_order_optimality() {
    let mut r = rng(81);
    let u = gaussian(30, 4, &mut r);
    let v = gaussian(30, 2, &mut r);
    let reg = ridge_fit(&u, &v, 0.1).unwrap();
    let uc = cmll::linalg::center_columns(&u).unwrap().0;
    let vc = cmll::linalg::center_columns(&v).unwrap().0;
    let resid = uc.matmul(&reg.coef).unwrap().sub(&vc).unwrap();
    let grad = uc.t_matmul(&resid).unwrap().scale(2.0).add(&reg.coef.scale(0.2)).unwrap();
    assert!(grad.max_abs() <= 1e-8);
}

#[test]
fn huge_rho_collapses_to_means() {
    let mut r = rng(82);
    let u = gaussian(25, 3, &mut r);
    let v = gaussian(25, 2, &mut r);
    let means = column_means(&v);
    for reg in [ridge_fit(&u, &v, 1e12).unwrap(), kridge_fit(&u, &v, 1e12, &KernelSpec::rbf(0.5)).unwrap()] {
        let p = reg.predict(&u).unwrap();
        for i in 0..25 {
            for j in 0..2 {
                assert!((p[(i, j)] - means[j]).abs() <= 1e-8);
            }
        }
    }
}

#[test]
fn primal_dual_equivalence() {
    let mut r = rng(83);
    let u = gaussian(40, 5, &mut r);
    let v = gaussian(40, 3, &mut r);
    let z = gaussian(7, 5, &mut r);
    for rho in [1e-3, 0.1, 10.0] {
        let a = ridge_fit(&u, &v, rho).unwrap().predict(&z).unwrap();
        let b = kridge_fit(&u, &v, rho, &KernelSpec::linear()).unwrap().predict(&z).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-8, "rho {rho}");
    }
}

#[test]
fn identity_kernel_interpolates() {
    let u = M::identity(4);
    let v = M::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0], &[0.0, 0.0]]);
    let reg = kridge_fit(&u, &v, 0.0, &KernelSpec::linear()).unwrap();
    assert!(reg.predict(&u).unwrap().max_abs_diff(&v) <= 1e-10);
}

#[test]
fn orthogonal_input_invariance() {
    let mut r = rng(84);
    let u = gaussian(30, 4, &mut r);
    let v = gaussian(30, 3, &mut r);
    let o: M = random_orthonormal(4, 4, 5);
    let uo = u.matmul(&o).unwrap();
    for rho in [0.0, 0.5] {
        let a = ridge_fit(&u, &v, rho).unwrap().predict(&u).unwrap();
        let b = ridge_fit(&uo, &v, rho).unwrap().predict(&uo).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-8);
    }
}

#[test]
fn prediction_is_row_wise() {
    let data = random_dataset(40, 6, 4, 85);
    for method in [Method::Cmll, Method::Kcmll, Method::Ori, Method::Mddm, Method::CmllY] {
        let cfg = ExperimentConfig::<f64> { method, ..Default::default() };
        let pipe = fit_pipeline(&data, &cfg).unwrap();
        let idx = [3usize, 1, 1, 7, 0];
        let sub = data.x.select_rows(&idx);
        let all = pipe.predict_scores(&data.x).unwrap();
        let part = pipe.predict_scores(&sub).unwrap();
        assert!(part.max_abs_diff(&all.select_rows(&idx)) <= 1e-12, "{method}");
        assert_eq!(part.row(1), part.row(2));
    }
}

#[test]
fn exact_pipeline_reproduces_labels() {
    let mut r = rng(86);
    let mut y = random_labels(12, 3, 0.5, &mut r);
    y[(0, 0)] = 1.0;
    y[(1, 1)] = 1.0;
    y[(2, 2)] = 1.0;
    let data = cmll::data::Dataset::new(gaussian(12, 20, &mut r), y, "exact").unwrap();
    let cfg = ExperimentConfig::<f64> {
        method: Method::Cmll,
        mu: 1.0,
        nu: 1.0,
        alpha: 0.0,
        rho: 0.0,
        kernel: KernelSpec::linear(),
        learner: Some(cmll::learner::RegressorKind::KernelRidge),
        ..Default::default()
    };
    let pipe = fit_pipeline(&data, &cfg).unwrap();
    let scores = pipe.predict_scores(&data.x).unwrap();
    assert!(scores.max_abs_diff(&data.y) <= 1e-6);
}

#[test]
fn binarize_strict() {
    assert_eq!(binarize(&M::from_rows(&[&[0.5]]), 0.5), M::from_rows(&[&[0.0]]));
    assert_eq!(binarize(&M::from_rows(&[&[0.9, 0.1]]), 0.5), M::from_rows(&[&[1.0, 0.0]]));
    assert_eq!(binarize(&M::from_rows(&[&[-1.0, -0.2]]), 0.5).max_abs(), 0.0);
}
