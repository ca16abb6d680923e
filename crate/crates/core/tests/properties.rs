use proptest::prelude::*;
use uam_core::afl::{corollary3_bound, ConvergenceInputs, StalenessTable, StalenessWeight, VarianceGrowth};
use uam_core::units::{db_to_linear, linear_to_db};
use uam_core::ModelParams;

fn table() -> StalenessTable {
    StalenessTable::new(1e-3, &[(1.01e-3, 0.3), (1.1e-3, 0.6), (2e-3, 0.9), (1e-2, 0.99)]).unwrap()
}

proptest! {
    #[test]
    fn quantile_is_monotone_and_above_compute_delay(a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let t = table();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(t.quantile(lo) <= t.quantile(hi));
        prop_assert!(t.quantile(lo) >= t.t_comp());
    }

    #[test]
    fn staleness_weights_are_bounded_and_monotone(d in 0.0f64..50.0, e in 0.0f64..50.0) {
        let (lo, hi) = if d <= e { (d, e) } else { (e, d) };
        let g1 = StalenessWeight::OnePlusExp;
        let g2 = VarianceGrowth::OneMinusExp;
        prop_assert!(g1.eval(lo) >= g1.eval(hi));
        prop_assert!(g1.eval(hi) >= g1.limit() && g1.eval(lo) <= 2.0);
        prop_assert!(g2.eval(lo) <= g2.eval(hi));
        prop_assert!((0.0..=g2.limit()).contains(&g2.eval(hi)));
        prop_assert_eq!(StalenessWeight::Unit.eval(d), 1.0);
    }

    #[test]
    fn deadline_threshold_inverts_the_delay(slack in 1e-6f64..10.0) {
        let p = ModelParams::reference_gaussian();
        let tau = p.t_comp() + slack;
        let gamma = p.gamma_for_deadline(tau);
        let back = p.t_comp() + p.t_tran(gamma);
        prop_assert!((back - tau).abs() <= 1e-9 * tau, "{} vs {}", back, tau);
    }

    #[test]
    fn decibels_round_trip(db in -80.0f64..80.0) {
        prop_assert!((linear_to_db(db_to_linear(db)) - db).abs() < 1e-9);
    }

    #[test]
    fn corollary3_bound_moves_from_start_to_asymptote(
        eta in 0.01f64..0.5, f0 in 0.0f64..100.0, phi in 0.0f64..10.0, i in 0u64..2000,
    ) {
        let inputs = ConvergenceInputs {
            lipschitz: 1.0,
            strong_convexity: 1.0,
            phi_sq: phi,
            clients: 10.0,
            eta,
            e_g1: 1.9,
            v_g1: 0.01,
        };
        let q = inputs.contraction();
        let gap = inputs.asymptotic_gap();
        let b = corollary3_bound(&inputs, f0, i);
        let lo = gap.min(q * f0);
        let hi = gap.max(q * f0);
        prop_assert!(b >= lo - 1e-12 && b <= hi + 1e-12);
        prop_assert!((corollary3_bound(&inputs, f0, 0) - q * f0).abs() <= 1e-12 * (1.0 + f0));
    }
}
