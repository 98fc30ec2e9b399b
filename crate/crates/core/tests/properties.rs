use nalgebra::DVector;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sia_aircomp::baselines::optimal_partition_search;
use sia_aircomp::functional::{direct, postprocess, preprocess, FunctionSpec};
use sia_aircomp::linalg::*;
use sia_aircomp::system::{
    draw_channels, draw_symbols, partition, receive, ComplexVector, FunctionKind, Precoders,
    Scheme, SystemConfig,
};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rel(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    fro(&(a - b)) / fro(b).max(f64::MIN_POSITIVE)
}

fn random_unitary(n: usize, r: &mut ChaCha8Rng) -> ComplexMatrix {
    random_orthonormal_columns(n, n, r)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn inverse_is_involutive(n in 1usize..8, seed in any::<u64>()) {
        let a = gaussian_matrix(n, n, &mut rng(seed));
        if let Ok(x) = inverse(&a) {
            let back = inverse(&x).unwrap();
            prop_assert!(rel(&back, &a) < 1e-6);
        }
    }

    #[test]
    fn null_space_contract(m in 2usize..10, seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = 1 + (seed as usize) % (m - 1);
        let b = gaussian_matrix(m, n, &mut r);
        let a = left_null_space_basis(&b).unwrap();
        prop_assert_eq!(a.shape(), (m - n, m));
        prop_assert!(fro(&(&a * &b)) <= 1e-10 * fro(&b));
        prop_assert!(fro(&(&a * a.adjoint() - eye(m - n))) < 1e-10);
    }

    #[test]
    fn right_inverse_contract(r in 1usize..6, extra in 0usize..4, seed in any::<u64>()) {
        let mut g = rng(seed);
        let a = gaussian_matrix(r, r + extra, &mut g);
        let x = right_inverse(&a).unwrap();
        prop_assert!(fro(&(&a * &x - eye(r))) <= 1e-8 * fro(&a));
        if extra == 0 {
            prop_assert!(rel(&x, &inverse(&a).unwrap()) < 1e-9);
        }
    }

    #[test]
    fn rank_is_unitarily_invariant(rows in 1usize..7, cols in 1usize..7, inner in 1usize..7, seed in any::<u64>()) {
        let mut g = rng(seed);
        let a = gaussian_matrix(rows, inner, &mut g) * gaussian_matrix(inner, cols, &mut g);
        let rank = numerical_rank(&a, RANK_TOL);
        prop_assert_eq!(rank, inner.min(rows).min(cols));
        let u = random_unitary(rows, &mut g);
        let v = random_unitary(cols, &mut g);
        prop_assert_eq!(numerical_rank(&(&u * &a * &v), RANK_TOL), rank);
        // Permute rows and columns by reversing them.
        let flipped = ComplexMatrix::from_fn(rows, cols, |i, j| a[(rows - 1 - i, cols - 1 - j)]);
        prop_assert_eq!(numerical_rank(&flipped, RANK_TOL), rank);
    }

    #[test]
    fn receive_is_linear(m in 2usize..7, k in 1usize..5, seed in any::<u64>(),
                         alpha_re in -3.0f64..3.0, beta_im in -3.0f64..3.0) {
        let cfg = SystemConfig::new(m, k, Scheme::Sia);
        let mut g = rng(seed);
        let ch = draw_channels(&cfg, &mut g).unwrap();
        let n_ac = partition(m).n_ac;
        let w: Precoders = [0, 1].map(|_| (0..k).map(|_| gaussian_matrix(m, n_ac, &mut g)).collect());
        let x = draw_symbols(&cfg, &mut g).unwrap();
        let z = draw_symbols(&cfg, &mut g).unwrap();
        let (alpha, beta) = (Complex64::new(alpha_re, 0.5), Complex64::new(-1.0, beta_im));
        let mut combo = x.scaled(alpha);
        for (cell, zs) in z.symbols.iter().enumerate() {
            for (dst, src) in combo.symbols[cell].iter_mut().zip(zs) {
                *dst += src * beta;
            }
        }
        let lhs = receive(&ch, &w, &combo, 0.0, &mut g).unwrap();
        let rx = receive(&ch, &w, &x, 0.0, &mut g).unwrap();
        let rz = receive(&ch, &w, &z, 0.0, &mut g).unwrap();
        for cell in 0..2 {
            let rhs: ComplexVector = &rx[cell] * alpha + &rz[cell] * beta;
            prop_assert!((&lhs[cell] - &rhs).norm() <= 1e-10 * rhs.norm().max(1e-300));
        }
    }

    #[test]
    fn function_round_trip(k in prop::sample::select(vec![1usize, 3, 10]), seed in any::<u64>()) {
        use rand::Rng;
        let mut g = rng(seed);
        for kind in [FunctionKind::Sum, FunctionKind::Mean, FunctionKind::Geomean] {
            let spec = FunctionSpec::new(kind, k);
            let data: Vec<Vec<f64>> = (0..k).map(|_| (0..3).map(|_| g.random_range(0.01..100.0)).collect()).collect();
            let sum = data.iter().fold(DVector::<Complex64>::zeros(3), |acc, d| acc + preprocess(&spec, d).unwrap());
            let got = postprocess(&spec, &sum);
            for (a, b) in got.iter().zip(direct(kind, &data)) {
                prop_assert!(((a - b) / b).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn partition_identities() {
    for m in 1..=64 {
        let p = partition(m);
        assert_eq!(p.n_ac + p.n_prime, m);
        assert_eq!(p.n_ac, m / 2);
        assert_eq!(p.n_prime, m.div_ceil(2));
    }
    for m in 2..=64 {
        let r = optimal_partition_search(m).unwrap();
        assert!(r.balanced);
        assert_eq!(r.dof, partition(m).n_ac);
    }
}
