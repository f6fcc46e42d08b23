use optigraph::library::{random_block_qp, BlockQpConfig};
use optigraph::model::flatten;
use optigraph::qp::{solve_qp, SolverOptions, Status};
use proptest::prelude::*;

const SMALL: BlockQpConfig = BlockQpConfig { max_nodes: 5, max_vars: 10, max_links: 6 };

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn stationarity_holds_against_finite_differences(seed in any::<u64>()) {
        let m = random_block_qp::<f64>(seed, SMALL).unwrap();
        let qp = flatten(&m.model, m.graph).unwrap();
        prop_assert!(qp.num_vars() <= 50);
        let sol = solve_qp(&qp, &SolverOptions::default());
        prop_assert_eq!(sol.status, Status::Optimal);

        let h = 1e-5;
        let mut residual: Vec<f64> = (0..qp.num_vars())
            .map(|j| {
                let mut plus = sol.x.clone();
                let mut minus = sol.x.clone();
                plus[j] += h;
                minus[j] -= h;
                (qp.objective(&plus) - qp.objective(&minus)) / (2.0 * h) - sol.z[j]
            })
            .collect();
        for (row, &y) in qp.a_eq.iter().zip(&sol.y_eq).chain(qp.a_in.iter().zip(&sol.y_in)) {
            for (j, a) in row.iter() {
                residual[j] += a * y;
            }
        }
        let worst = residual.iter().fold(0.0f64, |a, r| a.max(r.abs()));
        prop_assert!(worst <= 1e-5, "stationarity residual {}", worst);
    }

    #[test]
    fn inequality_multipliers_follow_the_sign_convention(seed in any::<u64>()) {
        let m = random_block_qp::<f64>(seed, SMALL).unwrap();
        let qp = flatten(&m.model, m.graph).unwrap();
        let sol = solve_qp(&qp, &SolverOptions::default());
        prop_assert_eq!(sol.status, Status::Optimal);
        for ((lo, hi), &y) in qp.in_lower.iter().zip(&qp.in_upper).zip(&sol.y_in) {
            if lo.is_infinite() {
                prop_assert!(y >= -1e-7, "<= row multiplier {}", y);
            }
            if hi.is_infinite() {
                prop_assert!(y <= 1e-7, ">= row multiplier {}", y);
            }
        }
        for (j, &z) in sol.z.iter().enumerate() {
            if qp.lower[j].is_infinite() {
                prop_assert!(z <= 1e-7);
            }
            if qp.upper[j].is_infinite() {
                prop_assert!(z >= -1e-7);
            }
        }
    }

    #[test]
    fn repeated_solves_are_bitwise_identical(seed in any::<u64>()) {
        let m = random_block_qp::<f64>(seed, SMALL).unwrap();
        let qp = flatten(&m.model, m.graph).unwrap();
        let a = solve_qp(&qp, &SolverOptions::default());
        let b = solve_qp(&qp, &SolverOptions::default());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn final_iterate_meets_the_tolerance(seed in any::<u64>()) {
        let m = random_block_qp::<f64>(seed, SMALL).unwrap();
        let qp = flatten(&m.model, m.graph).unwrap();
        let opts = SolverOptions::default();
        let sol = solve_qp(&qp, &opts);
        prop_assert_eq!(sol.status, Status::Optimal);
        let last = sol.history.last().unwrap();
        prop_assert!(last.mu <= opts.tol);
    }
}
