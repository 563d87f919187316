use cosflow::eigen::{eigen_rhs, reduced_rhs_cos, EigenPair, EigenParams};
use cosflow::equilibria::{find_equilibria_cos, is_monotone_progression, regime_scan, Stability};
use cosflow::linalg::asym_rel;
use cosflow::loss::{cosine_loss, grad_cosine};
use cosflow::mean_flow::{diagnostics, flow_rhs, FlowState};
use cosflow::model::{init_params, sample_batch, SimConfig};
use cosflow::optim::cosine_annealing;
use cosflow::rng::stream;
use proptest::prelude::*;

fn small(seed: u64, symmetric: bool) -> (cosflow::ModelState, cosflow::PairBatch) {
    let c = SimConfig {
        d: 6,
        h: 4,
        sigma2: 0.5,
        symmetrize_w: symmetric,
        ..SimConfig::default()
    };
    let mut rng = stream(seed, 0);
    let st = init_params(&c, &mut rng);
    let b = sample_batch(5, 6, c.sigma2, &mut rng).unwrap();
    (st, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cosine_is_scale_invariant(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let (st, b) = small(seed, false);
        let mut scaled = st.clone();
        scaled.phi *= c;
        scaled.w *= c;
        let l0 = cosine_loss(&st, &b, 0.0).unwrap().loss_value;
        let l1 = cosine_loss(&scaled, &b, 0.0).unwrap().loss_value;
        prop_assert!((l0 - l1).abs() < 1e-12);
        let g0 = grad_cosine(&st, &b, 0.0).unwrap();
        let g1 = grad_cosine(&scaled, &b, 0.0).unwrap();
        prop_assert!((&g1.w * c - &g0.w).amax() < 1e-10 * (1.0 + g0.w.amax()));
        prop_assert!((&g1.phi * c - &g0.phi).amax() < 1e-10 * (1.0 + g0.phi.amax()));
    }

    #[test]
    fn target_rescaling_leaves_gradient_unchanged(seed in 0u64..10_000, a in 0.1f64..10.0) {
        let (st, b) = small(seed, true);
        let mut b2 = b.clone();
        b2.x_prime *= a;
        let g0 = grad_cosine(&st, &b, 0.1).unwrap();
        let g1 = grad_cosine(&st, &b2, 0.1).unwrap();
        prop_assert!((&g0.w - &g1.w).amax() < 1e-12);
        prop_assert!((&g0.phi - &g1.phi).amax() < 1e-12);
    }

    #[test]
    fn parabola_identity_on_rhs(
        w in -3.0f64..3.0, f in 0.0f64..5.0, rho in 0.0f64..1.0,
        n_phi in 0.1f64..3.0, n_psi in 0.1f64..3.0, n_times in -1.0f64..1.0, sigma2 in 0.0f64..2.0,
    ) {
        let p = EigenParams::new(rho, n_phi, n_psi, n_times, sigma2);
        let (dw, df) = eigen_rhs(&EigenPair::new(w, f), &p);
        let resid = df - 2.0 * w * dw + 2.0 * rho * (f - w * w);
        let size = 1.0 + df.abs() + (w * dw).abs() + (rho * f).abs();
        prop_assert!(resid.abs() < 1e-12 * size);
    }

    #[test]
    fn reduced_equation_is_coupled_on_parabola(
        w in -3.0f64..3.0, rho in 0.0f64..1.0,
        n_phi in 0.1f64..3.0, n_psi in 0.1f64..3.0, n_times in -1.0f64..1.0, sigma2 in 0.0f64..2.0,
    ) {
        let p = EigenParams::new(rho, n_phi, n_psi, n_times, sigma2);
        let a = reduced_rhs_cos(w, &p);
        let b = eigen_rhs(&EigenPair::on_parabola(w), &p).0;
        prop_assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn cross_term_obeys_cauchy_schwarz(seed in 0u64..10_000, symmetric in any::<bool>()) {
        let (st, _) = small(seed, symmetric);
        let d = diagnostics(&st);
        prop_assert!(d.n_times.abs() <= 1.0 + 1e-12);
        prop_assert!(d.n_phi >= 0.0 && d.n_psi >= 0.0 && d.asym_rel >= 0.0 && d.comm_rel >= 0.0);
    }

    #[test]
    fn gram_derivative_is_symmetric(seed in 0u64..10_000, rho in 0.0f64..1.0) {
        let (st, _) = small(seed, true);
        let (dw, df) = flow_rhs(&FlowState::from_model(&st), 0.5, rho).unwrap();
        prop_assert!(asym_rel(&df) < 1e-10);
        prop_assert!(asym_rel(&dw) < 1e-12);
    }

    #[test]
    fn roots_have_small_residuals_and_alternate(
        rho in 0.001f64..1.0, n_phi in 0.1f64..2.0, n_psi in 0.1f64..2.0,
        n_times in 0.0f64..1.0, sigma2 in 0.0f64..1.0,
    ) {
        let p = EigenParams::new(rho, n_phi, n_psi, n_times, sigma2);
        let r = find_equilibria_cos(&p, None).unwrap();
        let mut last: Option<Stability> = None;
        for w in r.raw_roots.windows(2) {
            prop_assert!(w[0].value < w[1].value);
        }
        for root in &r.raw_roots {
            prop_assert!(reduced_rhs_cos(root.value, &p).abs() < 1e-9 * r.scale);
            if root.multiplicity == 1 {
                if let Some(prev) = last {
                    prop_assert_ne!(prev, root.stability);
                }
                last = Some(root.stability);
            }
        }
        prop_assert!(r.raw_roots.iter().any(|x| x.value == 0.0));
    }

    #[test]
    fn shrinking_norms_never_reverse_the_regime(rho in 0.01f64..1.0, ratio in 0.5f64..2.0) {
        let grid: Vec<(f64, f64, f64)> = (0..60)
            .map(|i| 2.0 * (0.95f64).powi(i))
            .map(|s| (rho, s, s * ratio))
            .collect();
        let cells = regime_scan(&grid, 1.0, 0.1);
        let regimes: Vec<_> = cells.iter().filter_map(|c| c.regime).collect();
        prop_assert_eq!(regimes.len(), cells.len());
        prop_assert!(is_monotone_progression(&regimes));
    }

    #[test]
    fn init_is_reproducible(seed in any::<u64>()) {
        let c = SimConfig { d: 8, h: 4, ..SimConfig::default() };
        prop_assert_eq!(init_params(&c, &mut stream(seed, 3)), init_params(&c, &mut stream(seed, 3)));
    }

    #[test]
    fn annealing_is_bounded_and_nonincreasing(step in 0usize..3000) {
        let a = cosine_annealing(0.05, step, 3000);
        let b = cosine_annealing(0.05, step + 1, 3000);
        prop_assert!((0.0..=0.05).contains(&a));
        prop_assert!(b <= a);
    }
}
