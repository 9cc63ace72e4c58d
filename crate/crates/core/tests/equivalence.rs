mod common;

use common::{gaussian_matrix, gaussian_vector, rel_err, rng, sample, spd, LinearProblem};
use gssm_core::kalman::{run_filter, FILTER_STATE};
use gssm_core::{
    discretize_linear, discretize_partitioned, GaussNewtonOptions, GaussianBelief, GssmPriors,
    GssmWindow, PartitionedContinuousSystem, PartitionedDiscreteSystem, PriorMode,
    SlidingWindowSmoother,
};
use nalgebra::{DMatrix, DVector};

#[test]
fn kalman_final_mean_is_batch_map_last_state() {
    for (seed, n, m) in [(1, 3, 1), (2, 3, 1), (3, 4, 2), (4, 2, 2)] {
        let p = LinearProblem::random(seed, n, m, 60);
        let kf = p.kalman_means();
        let batch = p.batch_map();
        let e = rel_err(kf.last().unwrap(), batch.last().unwrap());
        assert!(e < 1e-8, "seed {seed}: relative error {e:e}");
    }
}

#[test]
fn full_window_equals_batch_solve() {
    let p = LinearProblem::random(11, 3, 1, 40);
    let mut fgo =
        SlidingWindowSmoother::linear(p.system.clone(), p.prior(), 40, PriorMode::ExactJoint).unwrap();
    for (y, u) in p.measurements.iter().zip(&p.inputs) {
        fgo.step(y, u).unwrap();
    }
    assert_eq!(fgo.window().blocks().len(), 41);
    let stacked = fgo.window().solve().unwrap().estimate;
    let batch = p.batch_map();
    let oracle = DVector::from_iterator(stacked.len(), batch.iter().flat_map(|x| x.iter().copied()));
    let e = rel_err(&stacked, &oracle);
    assert!(e < 1e-10, "relative error {e:e}");
}

#[test]
fn fixed_lag_smoother_tracks_kalman_filter() {
    let p = LinearProblem::random(5, 3, 1, 80);
    let kf = p.kalman_means();
    for w in [1, 2, 5] {
        let mut fgo =
            SlidingWindowSmoother::linear(p.system.clone(), p.prior(), w, PriorMode::ExactJoint)
                .unwrap();
        for (k, (y, u)) in p.measurements.iter().zip(&p.inputs).enumerate() {
            let est = fgo.step(y, u).unwrap();
            let e = rel_err(est.newest.mean(), &kf[k]);
            assert!(e < 1e-8, "w={w} step {k}: relative error {e:e}");
        }
    }
}

#[test]
fn single_block_state_makes_prior_modes_agree() {
    let p = LinearProblem::random(8, 3, 1, 30);
    let run = |mode| {
        let mut fgo = SlidingWindowSmoother::linear(p.system.clone(), p.prior(), 3, mode).unwrap();
        p.measurements
            .iter()
            .zip(&p.inputs)
            .map(|(y, u)| fgo.step(y, u).unwrap().newest.mean().clone())
            .collect::<Vec<_>>()
    };
    for (a, b) in run(PriorMode::BlockDiagonal).iter().zip(&run(PriorMode::ExactJoint)) {
        assert!(rel_err(a, b) < 1e-10);
    }
}

fn without_constant(p: &LinearProblem) -> PartitionedDiscreteSystem {
    let s = &p.system;
    let n = s.state_dim();
    let m = s.measurement_dim();
    PartitionedDiscreteSystem::new(
        s.f().clone(),
        DMatrix::zeros(n, 0),
        s.b().clone(),
        s.c().clone(),
        DMatrix::zeros(m, 0),
        s.q().clone(),
        s.r().clone(),
        s.dt(),
    )
    .unwrap()
}

#[test]
fn gssm_without_constant_block_matches_standard_window() {
    let p = LinearProblem::random(21, 3, 1, 50);
    let sys = without_constant(&p);
    for mode in [PriorMode::BlockDiagonal, PriorMode::ExactJoint] {
        for w in [1, 4] {
            let mut fgo = SlidingWindowSmoother::linear(p.system.clone(), p.prior(), w, mode).unwrap();
            let mut gssm = GssmWindow::new(
                sys.clone(),
                GssmWindow::linear_observation(&sys),
                GssmPriors {
                    constant_mean: DVector::zeros(0),
                    constant_cov: DMatrix::zeros(0, 0),
                    dynamic_mean: p.prior_mean.clone(),
                    dynamic_cov: p.prior_cov.clone(),
                },
                w,
                mode,
                GaussNewtonOptions::default(),
            )
            .unwrap();
            assert_eq!(gssm.constant_id(), None);
            for (y, u) in p.measurements.iter().zip(&p.inputs) {
                let a = fgo.step(y, u).unwrap();
                let b = gssm.step(y, u).unwrap();
                assert!((a.newest.mean() - b.dynamic.mean()).amax() < 1e-10);
                assert!((a.newest.covariance() - b.dynamic.covariance()).amax() < 1e-10);
                assert_eq!(b.constant.dim(), 0);
            }
        }
    }
}

struct PartitionedProblem {
    continuous: PartitionedContinuousSystem,
    discrete: PartitionedDiscreteSystem,
    priors: GssmPriors,
    inputs: Vec<DVector<f64>>,
    measurements: Vec<DVector<f64>>,
}

fn partitioned_problem(seed: u64, n_c: usize, n_b: usize, m: usize, steps: usize) -> PartitionedProblem {
    let mut rng = rng(seed);
    let dt = 0.1;
    let a_c = gaussian_matrix(&mut rng, n_c, n_c) * 0.3 - DMatrix::identity(n_c, n_c) * 0.5;
    let a_b = gaussian_matrix(&mut rng, n_c, n_b);
    let b = gaussian_matrix(&mut rng, n_c, 1);
    let c_c = gaussian_matrix(&mut rng, m, n_c);
    let c_b = gaussian_matrix(&mut rng, m, n_b);
    let q = spd(&mut rng, n_c, 0.05) * 0.01;
    let r = spd(&mut rng, m, 0.5);
    let continuous =
        PartitionedContinuousSystem::new(a_c, a_b, b, c_c, c_b, q.clone(), r).unwrap();
    let discrete = discretize_partitioned(&continuous, dt, q).unwrap();
    let priors = GssmPriors {
        constant_mean: gaussian_vector(&mut rng, n_b),
        constant_cov: spd(&mut rng, n_b, 0.5),
        dynamic_mean: gaussian_vector(&mut rng, n_c),
        dynamic_cov: spd(&mut rng, n_c, 0.5),
    };

    let xb = sample(&mut rng, &priors.constant_mean, &priors.constant_cov);
    let mut xc = sample(&mut rng, &priors.dynamic_mean, &priors.dynamic_cov);
    let mut inputs = Vec::new();
    let mut measurements = Vec::new();
    for _ in 0..steps {
        let u = gaussian_vector(&mut rng, 1);
        xc = discrete.f_c() * &xc
            + discrete.f_b() * &xb
            + discrete.b() * &u
            + sample(&mut rng, &DVector::zeros(n_c), discrete.q());
        let y = discrete.c_c() * &xc
            + discrete.c_b() * &xb
            + sample(&mut rng, &DVector::zeros(m), discrete.r());
        inputs.push(u);
        measurements.push(y);
    }
    PartitionedProblem {
        continuous,
        discrete,
        priors,
        inputs,
        measurements,
    }
}

/// With exact-joint priors the GSSM window is a fixed-lag smoother of the
/// unified model whose constant rows carry no process noise, so its newest
/// estimates equal the Kalman filter on that model.
#[test]
fn exact_joint_gssm_matches_kalman_on_unified_model() {
    let (n_c, n_b, m) = (2, 2, 2);
    let p = partitioned_problem(31, n_c, n_b, m, 60);
    let n = n_c + n_b;
    let mut qd = DMatrix::zeros(n, n);
    qd.view_mut((0, 0), (n_c, n_c)).copy_from(p.discrete.q());
    let unified = discretize_linear(&p.continuous.to_unified(), p.discrete.dt(), qd).unwrap();

    let mut mean = DVector::zeros(n);
    mean.rows_mut(0, n_c).copy_from(&p.priors.dynamic_mean);
    mean.rows_mut(n_c, n_b).copy_from(&p.priors.constant_mean);
    let mut cov = DMatrix::zeros(n, n);
    cov.view_mut((0, 0), (n_c, n_c)).copy_from(&p.priors.dynamic_cov);
    cov.view_mut((n_c, n_c), (n_b, n_b)).copy_from(&p.priors.constant_cov);
    let init = GaussianBelief::single(FILTER_STATE, mean, cov).unwrap();
    let kf = run_filter(&init, &unified, &p.inputs, &p.measurements).unwrap();

    for w in [1, 3, 60] {
        let mut gssm = GssmWindow::new(
            p.discrete.clone(),
            GssmWindow::linear_observation(&p.discrete),
            p.priors.clone(),
            w,
            PriorMode::ExactJoint,
            GaussNewtonOptions::default(),
        )
        .unwrap();
        for (k, (y, u)) in p.measurements.iter().zip(&p.inputs).enumerate() {
            let est = gssm.step(y, u).unwrap();
            let kf_mean = kf[k].mean();
            let xc = kf_mean.rows(0, n_c).into_owned();
            let xb = kf_mean.rows(n_c, n_b).into_owned();
            assert!(rel_err(est.dynamic.mean(), &xc) < 1e-8, "w={w} step {k} x_c");
            assert!(rel_err(est.constant.mean(), &xb) < 1e-8, "w={w} step {k} x_b");
            let var_b = kf[k].covariance().view((n_c, n_c), (n_b, n_b)).diagonal();
            assert!(rel_err(&est.constant.variances(), &var_b) < 1e-8);
        }
    }
}

#[test]
fn gssm_holding_all_data_equals_one_shot_solve() {
    let p = partitioned_problem(41, 2, 1, 1, 25);
    let gssm = GssmWindow::build(
        p.discrete.clone(),
        GssmWindow::linear_observation(&p.discrete),
        p.priors.clone(),
        &p.measurements,
        &p.inputs,
        25,
    )
    .unwrap();
    let sys = gssm.assemble().unwrap();
    let oracle = common::explicit_wls(&sys.a, &sys.noise, &sys.b);
    let solved = gssm.window().solve().unwrap();
    assert!(rel_err(&solved.estimate, &oracle) < 1e-10);

    // The same data stepped through a window that never slides.
    let mut stepped = GssmWindow::new(
        p.discrete.clone(),
        GssmWindow::linear_observation(&p.discrete),
        p.priors.clone(),
        25,
        PriorMode::BlockDiagonal,
        GaussNewtonOptions::default(),
    )
    .unwrap();
    let mut last = None;
    for (y, u) in p.measurements.iter().zip(&p.inputs) {
        last = Some(stepped.step(y, u).unwrap());
    }
    let last = last.unwrap();
    let n = oracle.len();
    assert!(rel_err(last.constant.mean(), &oracle.rows(0, 1).into_owned()) < 1e-10);
    assert!(rel_err(last.dynamic.mean(), &oracle.rows(n - 2, 2).into_owned()) < 1e-10);
}
