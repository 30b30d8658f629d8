use proptest::prelude::*;

use orbitflow::sde::{ensemble, integrate, qv_oracle, Formulation, MeanEstimate, NoiseShape, NoiseSource, SdeProblem, TimeGrid};
use orbitflow::Matrix;

fn scalar_bm() -> SdeProblem {
    SdeProblem::new("R", Matrix::zeros(1, 1), Formulation::Ito, NoiseShape::Vector { len: 1 }).diffusion(|_, _, dw| Ok(dw.clone()))
}

fn rotation_problem() -> SdeProblem {
    // dX = X dA on O(3), Stratonovich
    SdeProblem::new("O(3)", Matrix::identity(3, 3), Formulation::Stratonovich, NoiseShape::Skew { n: 3 }).diffusion(|_, x, da| Ok(x * da))
}

#[test]
fn second_moment_of_brownian_motion() {
    let problem = scalar_bm();
    let grid = TimeGrid::new(0.0, 1.0, 100).unwrap().endpoints_only();
    let source = NoiseSource::new(41);
    let ends = ensemble(10_000, None, |i| Ok(integrate(&problem, &grid, &source, i)?.last()[(0, 0)].powi(2))).unwrap();
    let est = MeanEstimate::of(&ends);
    assert!(est.within(1.0, 3.0), "E[X_1^2] = {} +- {}", est.mean, est.se);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn paths_ignore_worker_count(seed in any::<u64>(), threads in 2usize..6) {
        let problem = rotation_problem();
        let grid = TimeGrid::new(0.0, 0.2, 200).unwrap().recording(20);
        let source = NoiseSource::new(seed);
        let job = |i| integrate(&problem, &grid, &source, i);
        let one = ensemble(12, Some(1), job).unwrap();
        let many = ensemble(12, Some(threads), job).unwrap();
        prop_assert_eq!(&one, &many);
        // and a path does not depend on which other paths ran
        prop_assert_eq!(&one[7], &integrate(&problem, &grid, &source, 7).unwrap());
    }
}

#[test]
fn oracle_error_shrinks_like_inverse_root() {
    let source = NoiseSource::new(5);
    let x = Matrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
    let counts = [100usize, 1000, 10_000, 100_000];
    let ses: Vec<f64> = counts
        .iter()
        .map(|&s| {
            let q = qv_oracle(
                |x, dw| Ok(dw - x * (x.dot(dw) / x.norm_squared())),
                &x,
                NoiseShape::Gaussian { rows: 3, cols: 1 },
                1e-2,
                s,
                &source,
            )
            .unwrap();
            q.inner.se[(0, 0)]
        })
        .collect();
    let xs: Vec<f64> = counts.iter().map(|&c| (c as f64).ln()).collect();
    let ys: Vec<f64> = ses.iter().map(|s| s.ln()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / 4.0, ys.iter().sum::<f64>() / 4.0);
    let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
    assert!((slope + 0.5).abs() <= 0.1, "log-log slope {slope}");
}

#[test]
fn heun_keeps_rotations_orthogonal() {
    let problem = rotation_problem();
    let grid = TimeGrid::new(0.0, 1.0, 10_000).unwrap().endpoints_only();
    let p = integrate(&problem, &grid, &NoiseSource::new(9), 0).unwrap();
    assert!(p.completed());
    let q = p.last();
    assert!((q.transpose() * q - Matrix::identity(3, 3)).norm() <= 1e-3);
}

#[test]
fn blow_up_is_an_error() {
    let problem = SdeProblem::new("R", Matrix::from_element(1, 1, 1.0), Formulation::Ito, NoiseShape::Vector { len: 1 }).drift(|_, x| Ok(x * x * 1e300));
    let grid = TimeGrid::new(0.0, 1.0, 10).unwrap();
    assert!(integrate(&problem, &grid, &NoiseSource::silent(), 0).is_err());
}
