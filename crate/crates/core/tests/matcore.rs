use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use orbitflow::matcore::{expm, fd_gradient, orthogonality_defect, sample, solve_lyapunov, solve_lyapunov_skew, solve_lyapunov_sym, Skew, Spd, Symmetric};
use orbitflow::Matrix;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn lyapunov_residual_over_thousand_pairs() {
    let mut r = rng(1);
    let mut worst = 0.0f64;
    for i in 0..1000 {
        let n = 1 + i % 8;
        let p = sample::random_spd(&mut r, n, 0.05, 20.0);
        let b = sample::gaussian_matrix(&mut r, n, n);
        let x = solve_lyapunov(&p, &b).unwrap();
        let res = (p.as_matrix() * &x + &x * p.as_matrix() - &b).norm() / b.norm();
        worst = worst.max(res);
    }
    assert!(worst <= 1e-10, "worst relative residual {worst:e}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn storage_class_is_exact(seed in any::<u64>(), n in 1usize..9) {
        let mut r = rng(seed);
        let p = sample::random_spd(&mut r, n, 0.1, 10.0);
        let g = sample::gaussian_matrix(&mut r, n, n);
        let s = solve_lyapunov_sym(&p, &Symmetric::symmetrize(&g)).unwrap().into_matrix();
        prop_assert_eq!(&s, &s.transpose());
        let k = solve_lyapunov_skew(&p, &Skew::skew_part(&g)).unwrap().into_matrix();
        prop_assert_eq!(&k, &(-k.transpose()));
    }

    #[test]
    fn fd_gradient_of_log_det(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let m = Matrix::identity(n, n) * 2.0 + sample::gaussian_matrix(&mut r, n, n) * 0.3;
        let h = 1e-3;
        let g = fd_gradient(|x| Ok((x * x.transpose()).determinant().ln()), &m, Some(h)).unwrap();
        let want = m.clone().try_inverse().unwrap().transpose() * 2.0;
        prop_assert!((g - &want).norm() / want.norm() <= 10.0 * h * h);
    }

    #[test]
    fn expm_of_skew_is_orthogonal(seed in any::<u64>(), n in 2usize..9) {
        let mut r = rng(seed);
        let a = Skew::skew_part(&(sample::gaussian_matrix(&mut r, n, n) * 3.0));
        let q = expm(a.as_matrix()).unwrap();
        prop_assert!(orthogonality_defect(&q) <= 1e-12);
        prop_assert!((q.determinant() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn spd_functions_compose(seed in any::<u64>(), n in 1usize..7) {
        let mut r = rng(seed);
        let p = sample::random_spd(&mut r, n, 0.1, 10.0);
        let s = p.sqrt();
        prop_assert!((s.as_matrix() * s.as_matrix() - p.as_matrix()).norm() <= 1e-12 * p.as_matrix().norm());
        let id = p.as_matrix() * p.inverse().as_matrix();
        prop_assert!((id - Matrix::identity(n, n)).norm() <= 1e-10);
        prop_assert!((p.log_det() - p.as_matrix().determinant().ln()).abs() <= 1e-10 * p.log_det().abs().max(1.0));
    }
}

#[test]
fn rejected_inputs() {
    let not_sym = Matrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 1.0]);
    assert!(Spd::new(not_sym).is_err());
    assert!(Spd::new(Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0])).is_err());
    assert!(solve_lyapunov(&Spd::identity(2), &Matrix::zeros(3, 3)).is_err());
}
