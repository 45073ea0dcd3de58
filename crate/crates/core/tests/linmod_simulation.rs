use bagged_ci::linmod::{self, Dataset};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn simulated_estimates_follow_the_joint_normal_law() {
    let n = 15;
    let x = DMatrix::from_fn(n, 4, |i, j| match j {
        0 => 1.0,
        1 => i as f64 / n as f64,
        2 => ((i * 7) % 5) as f64 - 2.0,
        _ => (i as f64 / n as f64).powi(2) + 0.1 * (((i * 3) % 4) as f64),
    });
    let a = DVector::from_vec(vec![0.0, 1.0, 0.0, 0.0]);
    let b = DVector::from_vec(vec![0.0, 0.0, 0.5, 1.0]);
    let beta = DVector::from_vec(vec![0.3, 2.0, -0.1, 0.4]);
    let sigma = 0.7;
    let reps = 100_000;

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut sum_theta = 0.0;
    let mut sum_gamma = 0.0;
    let mut first = None;
    for _ in 0..reps {
        let y = &x * &beta
            + DVector::from_fn(n, |_, _| {
                let e: f64 = StandardNormal.sample(&mut rng);
                sigma * e
            });
        let m =
            linmod::fit(&Dataset::new(x.clone(), y, sigma, a.clone(), b.clone()).unwrap()).unwrap();
        sum_theta += m.theta_hat;
        sum_gamma += m.gamma_hat;
        first.get_or_insert(m);
    }
    let model = first.unwrap();
    let theta = a.dot(&beta);
    let gamma = b.dot(&beta) / (sigma * model.v_tau.sqrt());
    let m = reps as f64;
    let z_theta = (sum_theta / m - theta) / (model.theta_scale() / m.sqrt());
    let z_gamma = (sum_gamma / m - gamma) / (1.0 / m.sqrt());
    assert!(z_theta.abs() < 3.0, "theta z = {z_theta}");
    assert!(z_gamma.abs() < 3.0, "gamma z = {z_gamma}");
}
