use orbitflow::matcore::{eigh, Symmetric};
use orbitflow::processes::{self, EigenKind, ProcessConfig};
use orbitflow::sde::PathStatus;
use orbitflow::Matrix;

fn diag(d: &[f64]) -> Matrix {
    Symmetric::from_diagonal(d).into_matrix()
}

#[test]
fn orthogonal_and_grassmann_guards() {
    let cfg = ProcessConfig::new(4, 4, 1.0, 1e-4).unwrap().paths(4).seed(3).endpoints_only();
    for p in processes::bm_orthogonal(&cfg).unwrap() {
        let q = p.last();
        assert!((q.transpose() * q - Matrix::identity(4, 4)).norm() <= 1e-3);
    }
    for p in processes::bm_grassmann(&ProcessConfig { k: 2, ..cfg }).unwrap() {
        let pr = p.last();
        assert!((pr * pr - pr).norm() <= 1e-10);
        assert!((pr - pr.transpose()).norm() == 0.0);
        assert!((pr.trace() - 2.0).abs() <= 1e-10);
    }
}

#[test]
fn spd_paths_stay_positive() {
    let cfg = ProcessConfig::new(3, 3, 1.0, 1e-3).unwrap().paths(8).seed(4);
    for p in processes::bm_cartan_hadamard(&cfg).unwrap() {
        assert!(p.completed());
        for s in &p.states {
            assert!(eigh(&Symmetric::symmetrize(s)).unwrap().min() > 0.0);
        }
    }
}

#[test]
fn bures_wasserstein_drift_only_slope() {
    // k = n: tr P grows like k n - n (n - 1) / 2
    for n in 2..=4 {
        let cfg = ProcessConfig::new(n, n, 1.0, 1e-3).unwrap().noise_scale(0.0).initial(diag(&vec![2.0; n]));
        let p = processes::bm_bures_wasserstein(&cfg).unwrap().remove(0);
        let slope = (n * n - n * (n - 1) / 2) as f64;
        for (t, s) in p.times.iter().zip(&p.states) {
            assert!((s.trace() - (2.0 * n as f64 + slope * t)).abs() <= 1e-8, "n = {n}, t = {t}");
        }
    }
}

#[test]
fn vertical_image_is_nearly_deterministic() {
    // the image X X^T follows the mean-curvature ODE; seeds differ by O(sqrt dt)
    let m0 = diag(&[3f64.sqrt(), 1.0]);
    for dt in [1e-3, 1e-4] {
        let cfg = ProcessConfig::new(2, 2, 1.0, dt).unwrap();
        let images: Vec<_> = (0..32)
            .map(|s| processes::vertical_bm(&m0, &cfg.clone().seed(s)).unwrap().1.remove(0))
            .collect();
        let mut worst = 0.0f64;
        for a in 0..images.len() {
            for b in a + 1..images.len() {
                for (x, y) in images[a].states.iter().zip(&images[b].states) {
                    worst = worst.max((x - y).abs().max());
                }
            }
        }
        assert!(worst <= 5.0 * dt.sqrt(), "dt = {dt}: sup distance {worst:e}");
    }
}

#[test]
fn eigen_sde_stops_rather_than_reflects() {
    // eigenvalues started almost equal collide quickly
    let cfg = ProcessConfig::new(2, 2, 1.0, 1e-3).unwrap().paths(64).seed(8);
    let paths = processes::eigen_sde(EigenKind::BuresWasserstein, &[1.0, 0.999], 2, &cfg).unwrap();
    let stopped: Vec<_> = paths.iter().filter(|p| p.status != PathStatus::Completed).collect();
    assert!(!stopped.is_empty());
    for p in &paths {
        for v in &p.values {
            assert!(v.windows(2).all(|w| w[0] >= w[1]), "ordering lost: {v:?}");
            assert!(v.iter().all(|x| *x > 0.0));
        }
        if p.status != PathStatus::Completed {
            assert!(*p.times.last().unwrap() < 1.0);
        }
    }
}

#[test]
fn poincare_starts_at_given_point_and_stays_in_half_plane() {
    let cfg = ProcessConfig::new(2, 2, 0.1, 1e-3)
        .unwrap()
        .paths(4)
        .seed(2)
        .initial(Matrix::from_row_slice(1, 2, &[0.5, 2.0]));
    for p in processes::bm_poincare(&cfg).unwrap() {
        assert_eq!(p.states[0][(0, 0)], 0.5);
        assert!((p.states[0][(0, 1)] - 2.0).abs() <= 1e-12);
        assert!(p.states.iter().all(|s| s[(0, 1)] > 0.0));
    }
}

#[test]
fn bad_configs_are_rejected() {
    assert!(ProcessConfig::new(2, 3, 1.0, 1e-3).is_err());
    assert!(ProcessConfig::new(2, 2, 1.0, -1e-3).is_err());
    let cfg = ProcessConfig::new(3, 3, 1.0, 1e-3).unwrap();
    assert!(processes::bm_grassmann(&cfg).is_err());
    assert!(processes::bm_cartan_hadamard(&cfg.clone().initial(diag(&[1.0, -1.0, 1.0]))).is_err());
}
