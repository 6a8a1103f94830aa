//! Property tests for transforms, aggregation, models and the scheme.

use chlab::grid::{apply_laplacian, naive_dst, Field, Mesh, SpectralBasis};
use chlab::models::{Cutoff, Diffusion, Drift, CUTOFF_MAX_SLOPE};
use chlab::noise::generate;
use chlab::solver::{simulate, SolverConfig};
use proptest::prelude::*;

fn small_n() -> impl Strategy<Value = usize> {
    2usize..70
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dst_is_an_involution(n in small_n(), seed in any::<u64>()) {
        let b = SpectralBasis::new(n).unwrap();
        let x: Vec<f64> = (0..n - 1).map(|k| ((seed % 1000) as f64 * 0.37 + k as f64 * 1.3).sin()).collect();
        let back = b.plan().apply(&b.plan().apply(&x).unwrap()).unwrap();
        for (a, c) in x.iter().zip(&back) {
            prop_assert!((a - c).abs() < 1e-12);
        }
    }

    #[test]
    fn dst_preserves_norm(n in small_n(), values in prop::collection::vec(-10.0f64..10.0, 1..69)) {
        let len = (n - 1).min(values.len());
        let n = len + 1;
        let x = &values[..len];
        let y = SpectralBasis::new(n).unwrap().plan().apply(x).unwrap();
        let nx: f64 = x.iter().map(|v| v * v).sum();
        let ny: f64 = y.iter().map(|v| v * v).sum();
        prop_assert!((nx - ny).abs() <= 1e-11 * nx.max(1.0));
    }

    #[test]
    fn fast_dst_matches_naive(values in prop::collection::vec(-5.0f64..5.0, 1..40)) {
        let n = values.len() + 1;
        let fast = SpectralBasis::new(n).unwrap().plan().apply(&values).unwrap();
        for (a, b) in fast.iter().zip(naive_dst(&values)) {
            prop_assert!((a - b).abs() < 1e-11);
        }
    }

    #[test]
    fn laplacian_diagonal_in_basis(n in 3usize..64, j_frac in 0.0f64..1.0) {
        let b = SpectralBasis::new(n).unwrap();
        let j = 1 + ((n - 2) as f64 * j_frac) as usize;
        let e = b.eigenvector(j);
        let le = apply_laplacian(&e);
        let lam = b.eigenvalues()[j - 1];
        for (a, v) in le.values().iter().zip(e.values()) {
            prop_assert!((a - lam * v).abs() < 1e-9 * lam.abs().max(1.0));
        }
    }

    #[test]
    fn coarsening_is_transitive(seed in 0u64..1000, t in 1usize..4, s in 1usize..4) {
        let sheet = generate(seed, 0, 16 * t * t, 16 * s * s, 0.3).unwrap();
        let two_step = sheet.coarsen(t, s).unwrap().coarsen(t, s).unwrap();
        let one_step = sheet.coarsen(t * t, s * s).unwrap();
        prop_assert_eq!(two_step.m(), one_step.m());
        for (a, b) in two_step.increments().iter().zip(one_step.increments()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
        prop_assert!((sheet.total() - one_step.total()).abs() < 1e-11);
    }

    #[test]
    fn cutoff_even_bounded_and_lipschitz(r in 1.0f64..20.0, x in -40.0f64..40.0, dx in 1e-6f64..1.0) {
        let k = Cutoff::new(r).unwrap();
        prop_assert_eq!(k.eval(x), k.eval(-x));
        prop_assert_eq!(k.derivative(x), -k.derivative(-x));
        let v = k.eval(x);
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert!((k.eval(x + dx) - v).abs() <= CUTOFF_MAX_SLOPE * dx * (1.0 + 1e-12));
        if x.abs() <= r {
            prop_assert_eq!(v, 1.0);
        }
        if x.abs() >= r + 1.0 {
            prop_assert_eq!(v, 0.0);
        }
    }

    #[test]
    fn drift_lipschitz_bound_holds(a0 in 0.05f64..2.0, a1 in -2.0f64..2.0, a2 in -2.0f64..2.0, a3 in -2.0f64..2.0,
                                   r in 1.0f64..4.0, x in -8.0f64..8.0, y in -8.0f64..8.0) {
        let d = Drift::CubicCutoff { a0, a1, a2, a3, r };
        let l = d.lipschitz_constant().unwrap();
        prop_assert!((d.eval(x) - d.eval(y)).abs() <= l * (x - y).abs() * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn interpolation_reproduces_nodes(n in 2usize..50, seed in 0u64..100) {
        let mesh = Mesh::new(n).unwrap();
        let f = Field::from_fn(mesh, |x| (x * (1.0 + seed as f64 * 0.1)).sin());
        for k in 0..=n {
            prop_assert!((f.interpolate(mesh.node(k)).unwrap() - f.at_node(k)).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_data_zero_noise_stays_zero(n in 2usize..40, m in 1usize..20) {
        let cfg = SolverConfig {
            drift: Drift::Zero,
            diffusion: Diffusion::Constant { c: 0.0 },
            initial: chlab::models::InitialData::zero(),
            ..SolverConfig::new(n, m, 0.1)
        };
        let traj = simulate(&cfg, &generate(0, 0, m, n, 0.1).unwrap()).unwrap();
        prop_assert_eq!(traj.terminal().max_abs(), 0.0);
    }
}

#[test]
fn scheme_is_odd_under_sign_flip_for_odd_coefficients() {
    // f(-u) = -f(u) and constant σ: negating u₀ and the noise negates the path.
    let (n, m, t) = (16, 32, 0.1);
    let cfg = SolverConfig { diffusion: Diffusion::Constant { c: 0.7 }, ..SolverConfig::new(n, m, t) };
    let sheet = generate(4, 0, m, n, t).unwrap();
    let flipped =
        chlab::noise::SheetIncrements::from_increments(m, n, t, sheet.increments().iter().map(|v| -v).collect())
            .unwrap();
    let neg = SolverConfig { initial: chlab::models::InitialData::SineMode { j: 1, a: -1.0 }, ..cfg.clone() };
    let a = simulate(&cfg, &sheet).unwrap();
    let b = simulate(&neg, &flipped).unwrap();
    for (x, y) in a.terminal().values().iter().zip(b.terminal().values()) {
        assert!((x + y).abs() < 1e-13);
    }
    assert!(a.terminal().values().iter().any(|v| v.abs() > 1e-3));
}
