#![allow(dead_code)]

use gssm_core::kalman::{run_filter, FILTER_STATE};
use gssm_core::{DiscreteLinearSystem, GaussianBelief};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

pub fn gaussian_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Random symmetric positive definite matrix with eigenvalues roughly in `[floor, floor + n]`.
pub fn spd(rng: &mut ChaCha8Rng, n: usize, floor: f64) -> DMatrix<f64> {
    let g = gaussian_matrix(rng, n, n) / (n as f64).sqrt();
    let mut p = &g * g.transpose() + DMatrix::identity(n, n) * floor;
    p = (&p + p.transpose()) * 0.5;
    p
}

pub fn rel_err(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Draw `x ~ N(mean, cov)`.
pub fn sample(rng: &mut ChaCha8Rng, mean: &DVector<f64>, cov: &DMatrix<f64>) -> DVector<f64> {
    let l = cov.clone().cholesky().expect("covariance must be PD").unpack();
    mean + l * gaussian_vector(rng, mean.len())
}

/// A random linear-Gaussian problem with its simulated data.
pub struct LinearProblem {
    pub system: DiscreteLinearSystem,
    pub prior_mean: DVector<f64>,
    pub prior_cov: DMatrix<f64>,
    pub inputs: Vec<DVector<f64>>,
    pub measurements: Vec<DVector<f64>>,
}

impl LinearProblem {
    /// Stable `F` (spectral norm 0.95), one control input, `m` outputs.
    pub fn random(seed: u64, n: usize, m: usize, steps: usize) -> Self {
        let mut rng = rng(seed);
        let g = gaussian_matrix(&mut rng, n, n);
        let f = &g * (0.95 / g.clone().singular_values().max());
        let b = gaussian_matrix(&mut rng, n, 1);
        let c = gaussian_matrix(&mut rng, m, n);
        let q = spd(&mut rng, n, 0.05) * 0.1;
        let r = spd(&mut rng, m, 0.5);
        let system = DiscreteLinearSystem::new(f, b, c, q, r, 0.1).unwrap();
        let prior_mean = gaussian_vector(&mut rng, n);
        let prior_cov = spd(&mut rng, n, 0.5);

        let mut x = sample(&mut rng, &prior_mean, &prior_cov);
        let zero_n = DVector::zeros(n);
        let zero_m = DVector::zeros(m);
        let mut inputs = Vec::with_capacity(steps);
        let mut measurements = Vec::with_capacity(steps);
        for _ in 0..steps {
            let u = gaussian_vector(&mut rng, 1);
            x = system.f() * &x + system.b() * &u + sample(&mut rng, &zero_n, system.q());
            let y = system.c() * &x + sample(&mut rng, &zero_m, system.r());
            inputs.push(u);
            measurements.push(y);
        }
        Self {
            system,
            prior_mean,
            prior_cov,
            inputs,
            measurements,
        }
    }

    pub fn prior(&self) -> (DVector<f64>, DMatrix<f64>) {
        (self.prior_mean.clone(), self.prior_cov.clone())
    }

    pub fn kalman_means(&self) -> Vec<DVector<f64>> {
        let init =
            GaussianBelief::single(FILTER_STATE, self.prior_mean.clone(), self.prior_cov.clone())
                .unwrap();
        run_filter(&init, &self.system, &self.inputs, &self.measurements)
            .unwrap()
            .into_iter()
            .map(|s| s.mean().clone())
            .collect()
    }

    /// MAP estimate of every state `x_0 .. x_N` from the block-tridiagonal
    /// information system, built entry by entry and solved with dense LU.
    pub fn batch_map(&self) -> Vec<DVector<f64>> {
        let sys = &self.system;
        let n = sys.state_dim();
        let steps = self.measurements.len();
        let dim = n * (steps + 1);
        let inv = |m: &DMatrix<f64>| m.clone().try_inverse().unwrap();
        let (p0i, qi, ri) = (inv(&self.prior_cov), inv(sys.q()), inv(sys.r()));
        let f = sys.f();

        let mut lambda = DMatrix::zeros(dim, dim);
        let mut eta = DVector::zeros(dim);
        let add = |lambda: &mut DMatrix<f64>, i: usize, j: usize, blk: &DMatrix<f64>| {
            let mut v = lambda.view_mut((i * n, j * n), (n, n));
            v += blk;
        };
        add(&mut lambda, 0, 0, &p0i);
        eta.rows_mut(0, n).copy_from(&(&p0i * &self.prior_mean));
        for k in 0..steps {
            let bu = sys.b() * &self.inputs[k];
            add(&mut lambda, k, k, &(f.transpose() * &qi * f));
            add(&mut lambda, k, k + 1, &(-(f.transpose() * &qi)));
            add(&mut lambda, k + 1, k, &(-(&qi * f)));
            add(&mut lambda, k + 1, k + 1, &qi);
            add(&mut lambda, k + 1, k + 1, &(sys.c().transpose() * &ri * sys.c()));
            let mut e = eta.rows_mut(k * n, n);
            e -= f.transpose() * &qi * &bu;
            let mut e = eta.rows_mut((k + 1) * n, n);
            e += &qi * &bu + sys.c().transpose() * &ri * &self.measurements[k];
        }
        let x = lambda.lu().solve(&eta).unwrap();
        (0..=steps).map(|k| x.rows(k * n, n).into_owned()).collect()
    }
}

/// `(AᵀP⁻¹A)⁻¹ AᵀP⁻¹ b` by explicit inversion.
pub fn explicit_wls(a: &DMatrix<f64>, p: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let pi = p.clone().try_inverse().unwrap();
    let normal = a.transpose() * &pi * a;
    normal.try_inverse().unwrap() * a.transpose() * pi * b
}
