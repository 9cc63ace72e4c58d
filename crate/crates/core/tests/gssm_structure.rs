mod common;

use gssm_core::factor::FactorKind;
use gssm_core::radar::{radar_gssm_config, ScenarioConfig};
use gssm_core::{
    dimension_report, solve_normal_equations, Error, Factor, FactorWindow, GaussNewtonOptions,
    GssmPriors, GssmWindow, PartitionedDiscreteSystem, PriorMode, VarId,
};
use nalgebra::{dmatrix, dvector, DMatrix, DVector};

fn scalar_system(f_b: f64, c_b: f64, r: f64) -> PartitionedDiscreteSystem {
    PartitionedDiscreteSystem::new(
        dmatrix![1.0],
        dmatrix![f_b],
        DMatrix::zeros(1, 0),
        dmatrix![1.0],
        dmatrix![c_b],
        dmatrix![1.0],
        dmatrix![r],
        1.0,
    )
    .unwrap()
}

fn scalar_priors(b: f64, c: f64) -> GssmPriors {
    GssmPriors {
        constant_mean: dvector![b],
        constant_cov: dmatrix![1.0],
        dynamic_mean: dvector![c],
        dynamic_cov: dmatrix![1.0],
    }
}

#[test]
fn radar_window_of_two_matches_printed_pattern() {
    let cfg = ScenarioConfig::default();
    let t = cfg.dt;
    let mut gssm = radar_gssm_config(&cfg).unwrap();
    let u = DVector::zeros(0);
    gssm.append(&dvector![2000.0], &u).unwrap();
    gssm.append(&dvector![2001.0], &u).unwrap();
    let sys = gssm.assemble().unwrap();

    // Columns [h, ẋ, x_k, x_k+1, x_k+2]; the new states start at the prior x.
    let rho = (100.0f64 * 100.0 + 2000.0 * 2000.0).sqrt();
    let (alpha, beta) = (-100.0 / rho, 2000.0 / rho);
    let expected = dmatrix![
        1.0, 0.0, 0.0, 0.0, 0.0;
        0.0, 1.0, 0.0, 0.0, 0.0;
        0.0, 0.0, 1.0, 0.0, 0.0;
        0.0, -t, -1.0, 1.0, 0.0;
        beta, 0.0, 0.0, alpha, 0.0;
        0.0, -t, 0.0, -1.0, 1.0;
        beta, 0.0, 0.0, 0.0, alpha
    ];
    assert_eq!(sys.a.shape(), (7, 5));
    for i in 0..7 {
        for j in 0..5 {
            if expected[(i, j)] == 0.0 {
                assert_eq!(sys.a[(i, j)], 0.0, "entry ({i},{j}) must be a structural zero");
            } else {
                assert!((sys.a[(i, j)] - expected[(i, j)]).abs() < 1e-15, "entry ({i},{j})");
            }
        }
    }
    assert!((alpha - -0.049937616943892).abs() < 1e-14);
    assert!((beta - 0.998752338877845).abs() < 1e-14);

    let q = 0.005f64.powi(2);
    let diag = DVector::from_vec(vec![49.0, 49.0, 49.0, q, 9.0, q, 9.0]);
    assert_eq!(sys.noise, DMatrix::from_diagonal(&diag));
    // At the linearization point α·x + β·h = ρ, so the relinearized rhs is y itself.
    assert!((sys.b[4] - 2000.0).abs() < 1e-9);
    assert!((sys.b[6] - 2001.0).abs() < 1e-9);
    assert_eq!(sys.b.rows(0, 4), dvector![2000.0, 200.0, -100.0, 0.0]);
}

#[test]
fn identity_window_of_one_solves_like_hand_built_system() {
    let sys = scalar_system(1.0, 1.0, 1.0);
    let mut gssm = GssmWindow::new(
        sys.clone(),
        GssmWindow::linear_observation(&sys),
        scalar_priors(1.0, 2.0),
        1,
        PriorMode::BlockDiagonal,
        GaussNewtonOptions::default(),
    )
    .unwrap();
    gssm.append(&dvector![5.0], &DVector::zeros(0)).unwrap();
    let assembled = gssm.assemble().unwrap();
    let a = dmatrix![
        1.0, 0.0, 0.0;
        0.0, 1.0, 0.0;
        -1.0, -1.0, 1.0;
        1.0, 0.0, 1.0
    ];
    let b = dvector![1.0, 2.0, 0.0, 5.0];
    assert_eq!(assembled.a, a);
    assert_eq!(assembled.b, b);
    assert_eq!(assembled.noise, DMatrix::identity(4, 4));

    let oracle = a.clone().pseudo_inverse(1e-14).unwrap() * &b;
    let solved = gssm.window().solve().unwrap();
    assert!((solved.estimate - &oracle).amax() < 1e-12);

    let mut stepped = GssmWindow::new(
        sys.clone(),
        GssmWindow::linear_observation(&sys),
        scalar_priors(1.0, 2.0),
        1,
        PriorMode::BlockDiagonal,
        GaussNewtonOptions::default(),
    )
    .unwrap();
    let est = stepped.step(&dvector![5.0], &DVector::zeros(0)).unwrap();
    assert!((est.constant.mean()[0] - oracle[0]).abs() < 1e-12);
    assert!((est.dynamic.mean()[0] - oracle[2]).abs() < 1e-12);
}

#[test]
fn constant_block_seen_only_through_transitions_when_unmeasured() {
    let sys = scalar_system(0.5, 0.0, 0.1);
    let mut gssm = GssmWindow::new(
        sys.clone(),
        GssmWindow::linear_observation(&sys),
        scalar_priors(0.0, 0.0),
        3,
        PriorMode::ExactJoint,
        GaussNewtonOptions::default(),
    )
    .unwrap();
    let u = DVector::zeros(0);
    // truth: x_b = 2, x_c(k+1) = x_c(k) + 0.5·x_b
    let mut last = None;
    for k in 1..=40 {
        let y = dvector![k as f64];
        if k == 3 {
            // rows: prior(x_b), prior(x_c), then between/measurement pairs
            let sys = gssm.assemble().unwrap();
            for row in [3, 5] {
                assert_eq!(sys.a[(row, 0)], 0.0);
            }
            for row in [2, 4] {
                assert_eq!(sys.a[(row, 0)], -0.5);
            }
        }
        last = Some(gssm.step(&y, &u).unwrap());
    }
    let last = last.unwrap();
    let var = last.constant.variances()[0];
    assert!(var < 0.25, "variance {var}");
    assert!((last.constant.mean()[0] - 2.0).abs() < 3.0 * var.sqrt());
}

#[test]
fn constant_block_persists_across_slides() {
    let cfg = ScenarioConfig::default();
    let mut gssm = radar_gssm_config(&cfg).unwrap();
    let u = DVector::zeros(0);
    let w = cfg.w;
    for k in 0..3 * w {
        let est = gssm
            .step(&dvector![2000.0 + 0.3 * k as f64], &u)
            .unwrap();
        assert_eq!(gssm.constant_id(), Some(VarId(0)));
        assert_eq!(est.constant.blocks()[0].id, VarId(0));
        let blocks = gssm.window().blocks();
        assert_eq!(blocks[0].id, VarId(0));
        assert_eq!(blocks.iter().filter(|b| b.id == VarId(0)).count(), 1);
        let states = (k + 2).min(w + 1);
        assert_eq!(blocks.len(), 1 + states);
        assert_eq!(gssm.window().rows(), 2 + 1 + 2 * (states - 1));
    }
    let ids: Vec<_> = gssm.dynamic_ids().collect();
    assert_eq!(ids.len(), w + 1);
    assert_eq!(ids.last(), Some(&VarId(3 * w as u32 + 1)));
    // exactly one prior on the constant block and one on the oldest state
    let priors: Vec<_> = gssm
        .window()
        .factors()
        .iter()
        .filter(|f| f.kind() == FactorKind::Prior)
        .collect();
    assert_eq!(priors.len(), 2);
    assert_eq!(priors[0].vars(), &[VarId(0)]);
    assert_eq!(priors[1].vars(), &[ids[0]]);
}

#[test]
fn diagonal_mode_drops_cross_covariance_joint_mode_keeps_it() {
    let cfg = ScenarioConfig::default();
    let u = DVector::zeros(0);
    let mut windows = [PriorMode::BlockDiagonal, PriorMode::ExactJoint].map(|mode| {
        let mut gssm = radar_gssm_config(&ScenarioConfig {
            w: 1,
            prior_mode: mode,
            ..cfg.clone()
        })
        .unwrap();
        // the second step performs the first slide from identical states
        for y in [2000.0, 2002.0] {
            gssm.step(&dvector![y], &u).unwrap();
        }
        gssm
    });
    let [diagonal, joint] = &mut windows;

    let prior_factors = |g: &GssmWindow| -> Vec<Factor> {
        g.window()
            .factors()
            .iter()
            .filter(|f| f.kind() == FactorKind::Prior)
            .cloned()
            .collect()
    };
    let d = prior_factors(diagonal);
    assert_eq!(d.len(), 2);
    assert!(d.iter().all(|f| f.vars().len() == 1));

    let j = prior_factors(joint);
    assert_eq!(j.len(), 1);
    assert_eq!(j[0].vars().len(), 2);
    let noise = j[0].noise();
    assert_eq!(noise.shape(), (3, 3));
    let off = noise.view((0, 2), (2, 1));
    assert!(off.amax() > 0.0, "joint prior must carry the x_b / x_c correlation");
    // the diagonal blocks of the joint prior are the two separate priors
    assert!((noise.view((0, 0), (2, 2)).into_owned() - d[0].noise()).amax() < 1e-9);
    assert!((noise[(2, 2)] - d[1].noise()[(0, 0)]).abs() < 1e-9);
}

#[test]
fn table_and_assembled_dimensions() {
    let [unified, gssm] = dimension_report(2, 1, 1, 10).unwrap();
    assert_eq!((gssm.table.rows, gssm.table.cols), (22, 13));
    assert_eq!(gssm.table.unknowns, 13);
    assert_eq!(unified.table.unknowns, 33);
    assert_eq!((unified.table.rows, unified.table.cols), (40, 33));
    assert_eq!((gssm.assembled.rows, gssm.assembled.cols), (23, 13));
    assert_eq!(gssm.assembled.rhs, 23);
    assert_eq!((unified.assembled.rows, unified.assembled.cols), (43, 33));

    let cfg = ScenarioConfig::default();
    let mut radar = radar_gssm_config(&cfg).unwrap();
    for k in 0..cfg.w + 5 {
        radar.step(&dvector![2000.0 + k as f64], &DVector::zeros(0)).unwrap();
    }
    let sys = radar.assemble().unwrap();
    assert_eq!(sys.a.shape(), (gssm.assembled.rows, gssm.assembled.cols));
    assert_eq!(sys.b.len(), gssm.assembled.rhs);

    let [u, g] = dimension_report(0, 3, 2, 1).unwrap();
    assert_eq!(g.table.cols, 6);
    assert_eq!(g.table.cols, u.table.cols);
    assert_eq!(g.assembled, u.assembled);
}

#[test]
fn constant_partition_always_saves_columns() {
    for n_b in 1..5 {
        for n_c in 1..5 {
            for w in 1..15 {
                let [unified, gssm] = dimension_report(n_b, n_c, 1, w).unwrap();
                assert!(gssm.table.unknowns < unified.table.unknowns);
                assert_eq!(gssm.assembled.cols, n_b + n_c * (w + 1));
                assert_eq!(gssm.assembled.rows, n_b + n_c + w * (n_c + 1));
            }
        }
    }
}

#[test]
fn dimension_report_rejects_empty_sizes() {
    assert!(matches!(dimension_report(2, 0, 1, 10), Err(Error::InvalidArgument(_))));
    assert!(dimension_report(2, 1, 0, 10).is_err());
    assert!(dimension_report(2, 1, 1, 0).is_err());
}

#[test]
fn near_noiseless_measurements_are_interpolated() {
    let sys = scalar_system(0.1, 1.0, 1e-12);
    let mut gssm = GssmWindow::new(
        sys.clone(),
        GssmWindow::linear_observation(&sys),
        scalar_priors(3.0, 1.0),
        4,
        PriorMode::ExactJoint,
        GaussNewtonOptions::default(),
    )
    .unwrap();
    let (xb, mut xc) = (3.0, 1.0);
    for _ in 0..8 {
        xc += 0.1 * xb;
        let est = gssm.step(&dvector![xc + xb], &DVector::zeros(0)).unwrap();
        let fitted = est.dynamic.mean()[0] + est.constant.mean()[0];
        assert!((fitted - (xc + xb)).abs() < 1e-6);
    }
}

#[test]
fn infinite_tolerance_stops_after_first_solve() {
    let cfg = ScenarioConfig::default();
    let mut gssm = radar_gssm_config(&cfg).unwrap();
    gssm.append(&dvector![2010.0], &DVector::zeros(0)).unwrap();
    let opts = GaussNewtonOptions {
        tolerance: f64::INFINITY,
        ..GaussNewtonOptions::default()
    };
    let first = gssm.window().solve().unwrap();
    let gn = gssm.window().gauss_newton(&opts).unwrap();
    assert_eq!(gn.iterations, 1);
    assert!(gn.converged);
    assert!((gn.estimate - first.estimate).amax() < 1e-12);
}

#[test]
fn linear_window_converges_in_one_iteration() {
    let sys = scalar_system(1.0, 1.0, 1.0);
    let mut gssm = GssmWindow::new(
        sys.clone(),
        GssmWindow::linear_observation(&sys),
        scalar_priors(1.0, 2.0),
        3,
        PriorMode::BlockDiagonal,
        GaussNewtonOptions::default(),
    )
    .unwrap();
    for y in [5.0, 6.0, 8.0, 9.0, 11.0] {
        let est = gssm.step(&dvector![y], &DVector::zeros(0)).unwrap();
        assert_eq!(est.iterations, 1);
        assert!(est.converged);
    }
}

#[test]
fn chain_without_prior_is_reported() {
    let mut w = FactorWindow::new();
    w.add_variable(VarId(0), dvector![0.0]).unwrap();
    w.add_variable(VarId(1), dvector![0.0]).unwrap();
    w.add_factor(
        Factor::linear(
            FactorKind::Between,
            vec![(VarId(0), dmatrix![-1.0]), (VarId(1), dmatrix![1.0])],
            dvector![1.0],
            dmatrix![1.0],
        )
        .unwrap(),
    )
    .unwrap();
    assert!(matches!(w.assemble(), Err(Error::Unanchored(_))));
    // the same rows handed straight to the solver are rank deficient
    let err = solve_normal_equations(&dmatrix![-1.0, 1.0; -2.0, 2.0], &DMatrix::identity(2, 2), &dvector![1.0, 2.0])
        .unwrap_err();
    assert!(matches!(err, Error::RankDeficient { .. }));
}
