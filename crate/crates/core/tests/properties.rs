use proptest::prelude::*;

use besov_mlmcmc::experiment::io::{csv_bytes, RunRecord};
use besov_mlmcmc::fem::{solve, CoefficientField, UniformMesh};
use besov_mlmcmc::mcmc::{acceptance_probability, ratio_estimate};
use besov_mlmcmc::mlmcmc::aterms::{coarse_functionals, fine_functionals};
use besov_mlmcmc::mlmcmc::{
    a_terms, AtomModel, BlockMeans, Depth, DirectionWeights, LevelSchedule, ScheduleParams, WeightParams,
};
use besov_mlmcmc::prior::{GwTree, PriorParams, PriorSample};
use besov_mlmcmc::rng::{stream, Purpose, StreamKey};

fn simplex(raw: Vec<f64>) -> Vec<f64> {
    let z: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / z).collect()
}

proptest! {
    #[test]
    fn a_terms_reassemble_the_level_difference(
        prior in prop::collection::vec(0.01f64..1.0, 5),
        fine in prop::collection::vec(-80.0f64..80.0, 5),
        coarse in prop::collection::vec(-80.0f64..80.0, 5),
        dphi in prop::collection::vec(-10.0f64..10.0, 5),
    ) {
        let model = AtomModel::new(simplex(prior), vec![coarse.clone(), fine.clone()], vec![dphi.clone()]).unwrap();
        let terms: Vec<_> = (0..5).map(|i| a_terms(fine[i], coarse[i], dphi[i])).collect();
        let mean = |level: usize, fine_side: bool, k: usize| model.expectation(level, |i| {
            let mut out = [0.0; 3];
            if fine_side { fine_functionals(&terms[i], &mut out) } else { coarse_functionals(&terms[i], &mut out) }
            out[k]
        });
        let m = BlockMeans {
            fine_a1: mean(1, true, 0),
            fine_a3: mean(1, true, 1),
            fine_a67: mean(1, true, 2),
            coarse_a2: mean(0, false, 0),
            coarse_a5: mean(0, false, 1),
            coarse_a48: mean(0, false, 2),
        };
        let exact = model.expectation(1, |i| dphi[i]) - model.expectation(0, |i| dphi[i]);
        prop_assert!((m.combine() - exact).abs() <= 1e-11, "{} vs {}", m.combine(), exact);
    }

    #[test]
    fn a_terms_are_bounded(phi_f in -1e3f64..1e3, phi_c in -1e3f64..1e3, dphi in -5.0f64..5.0) {
        let t = a_terms(phi_f, phi_c, dphi);
        for a in t.a {
            prop_assert!(a.is_finite() && a.abs() <= dphi.abs().max(1.0));
        }
    }

    #[test]
    fn acceptance_is_a_probability(current in -1e4f64..1e4, proposal in -1e4f64..1e4) {
        let a = acceptance_probability(current, proposal);
        prop_assert!((0.0..=1.0).contains(&a));
        if proposal <= current {
            prop_assert_eq!(a, 1.0);
        }
    }

    #[test]
    fn ratio_estimate_ignores_potential_shifts(
        pairs in prop::collection::vec((0.0f64..30.0, -5.0f64..5.0), 2..50),
        shift in -1e3f64..1e3,
    ) {
        let a = ratio_estimate(&pairs).unwrap();
        let shifted: Vec<_> = pairs.iter().map(|&(p, f)| (p + shift, f)).collect();
        let b = ratio_estimate(&shifted).unwrap();
        prop_assert!((a.mean - b.mean).abs() <= 1e-9 * (1.0 + a.mean.abs()));
    }

    #[test]
    fn ratio_estimate_of_a_constant_is_exact(phis in prop::collection::vec(-50.0f64..50.0, 1..40), c in -1e3f64..1e3) {
        let pairs: Vec<_> = phis.iter().map(|&p| (p, c)).collect();
        prop_assert_eq!(ratio_estimate(&pairs).unwrap().mean, c);
    }

    #[test]
    fn weight_sums_stay_below_their_bound(depth in 0u32..8, alpha1 in 2.1f64..6.0, h0 in 1u32..4) {
        let w = DirectionWeights { alpha1, ..DirectionWeights::default() };
        let s = LevelSchedule::build(&ScheduleParams {
            dim: 1,
            h0_level: h0,
            depth: Depth::Levels(depth),
            r: 1.0,
            t: 1.0,
            eta_obs: 1.0,
            eta_qoi: 1.0,
            weights: WeightParams { level: w, qoi: w },
        }).unwrap();
        prop_assert!(s.weight_sum <= s.weight_bound);
        prop_assert!(s.samples.iter().flatten().all(|&m| m >= 1));
        let m_l = s.mesh_levels[depth as usize] as i32;
        for (l, row) in s.samples.iter().enumerate() {
            for (lq, &m) in row.iter().enumerate() {
                let fine = if l > 0 { s.mesh_levels[l] as i32 } else { 0 };
                let qoi = if lq > 0 { s.qoi_mesh_levels[lq] as i32 } else { 0 };
                let target = 2f64.powi(2 * (m_l - fine - qoi)) * s.weights[l][lq];
                // a ceiling, up to the relative snap
                prop_assert!(m as f64 >= target * (1.0 - 1e-9) && (m as f64) < target + 1.0, "{m} vs {target}");
            }
        }
    }

    #[test]
    fn gw_trees_are_closed_under_parents(beta in 0.0f64..=1.0, dim in 1usize..=2, seed in any::<u64>()) {
        let mut rng = stream(seed, StreamKey::new(Purpose::Test));
        let t = GwTree::sample(beta, dim, 5, &mut rng).unwrap();
        for j in 1..=t.height() {
            for k in t.nodes_at(j) {
                let parent = [k[0] / 2, k[1] / 2];
                prop_assert!(t.contains(j - 1, parent));
            }
            prop_assert!(t.nodes_at(j).len() <= 1 << (dim as u32 * j));
        }
    }

    #[test]
    fn truncated_norm_grows_with_truncation(seed in any::<u64>()) {
        let params = PriorParams { dim: 1, s: 1.6, p: 5.0 / 3.0, beta: 0.8, kappa: 1.0 };
        let mut rng = stream(seed, StreamKey::new(Purpose::Test));
        let sample = PriorSample::draw(&params, 8, &mut rng).unwrap();
        let norms: Vec<f64> = (0..=8).map(|n| sample.parseval_norm_sq(n)).collect();
        prop_assert!(norms.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn solution_scales_inversely_with_the_coefficient(c in 0.01f64..100.0, dim in 1usize..=2, level in 2u32..6) {
        let mesh = UniformMesh::new(dim, level).unwrap();
        let a = CoefficientField::from_fn(mesh, |x| 1.0 + x[0] * (1.0 - x[1])).unwrap();
        let ca = CoefficientField::new(mesh, a.values().iter().map(|v| c * v).collect()).unwrap();
        let u = solve(&a, 10.0).unwrap();
        let v = solve(&ca, 10.0).unwrap();
        for (x, y) in u.values().iter().zip(v.values()) {
            prop_assert!((x / c - y).abs() <= 1e-8 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn run_records_round_trip_through_csv(
        estimate in -1e6f64..1e6,
        cpu in 0.0f64..1e4,
        acceptance in 0.0f64..=1.0,
        depth in 0u32..10,
        evaluations in 0usize..1_000_000,
    ) {
        let row = RunRecord {
            depth,
            replicate: depth * 3,
            burn_in: depth % 2 == 0,
            estimate,
            cpu_seconds: cpu,
            wall_seconds: cpu * 1.5,
            acceptance_rate: acceptance,
            evaluations,
        };
        let bytes = csv_bytes(std::slice::from_ref(&row)).unwrap();
        let back: Vec<RunRecord> = csv::Reader::from_reader(bytes.as_slice())
            .deserialize()
            .collect::<Result<_, _>>()
            .unwrap();
        prop_assert_eq!(back, vec![row]);
    }
}
