use std::collections::HashSet;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ubsga::bench_io::{parse_qap_instance, parse_top_instance, write_qap_instance, write_top_instance};
use ubsga::metrics::{compute_arpe, compute_mrpe, compute_rpe};
use ubsga::qap::{
    qap_objective, qap_random_solution, qap_swap_mutation, qap_two_point_crossover, two_point_child,
};
use ubsga::top::{top_feasible, top_mutate, top_objective, top_random_solution, top_recombine, top_similarity, TopGraph};
use ubsga::{Direction, QapInstance, QapSolution, TopInstance, TopSolution, Vertex};

fn random_top(seed: u64, n: usize, paths: usize, tmax: f64) -> TopInstance {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let vertices = (0..n)
        .map(|i| Vertex {
            x: r.random_range(0.0..20.0),
            y: r.random_range(0.0..20.0),
            score: if i == 0 || i == n - 1 { 0.0 } else { r.random_range(1..=20) as f64 },
        })
        .collect();
    let d = {
        let v: &Vec<Vertex> = &vertices;
        ((v[0].x - v[n - 1].x).powi(2) + (v[0].y - v[n - 1].y).powi(2)).sqrt()
    };
    TopInstance::new(vertices, 0, n - 1, paths, d + tmax).unwrap()
}

fn random_qap(seed: u64, n: usize) -> QapInstance {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    let flow: Vec<f64> = (0..n * n).map(|_| r.random_range(0..50) as f64).collect();
    let dist: Vec<f64> = (0..n * n).map(|_| r.random_range(0..50) as f64).collect();
    QapInstance::new(n, flow, dist).unwrap()
}

fn naive_qap(inst: &QapInstance, perm: &[usize]) -> f64 {
    let mut total = 0.0;
    for a in 0..perm.len() {
        for b in 0..perm.len() {
            total += inst.flow(a, b) * inst.distance(perm[a], perm[b]);
        }
    }
    total
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn top_operators_stay_feasible(
        seed in any::<u64>(),
        n in 4usize..40,
        paths in 1usize..4,
        slack in 0.0f64..30.0,
    ) {
        let inst = random_top(seed, n, paths, slack);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let a = top_random_solution(&inst, &mut r).unwrap();
        let b = top_random_solution(&inst, &mut r).unwrap();
        prop_assert!(top_feasible(&a, &inst) && top_feasible(&b, &inst));
        let (c1, c2) = top_recombine(&a, &b, &inst);
        let m1 = top_mutate(&c1, &inst, &mut r);
        for s in [&c1, &c2, &m1] {
            prop_assert!(top_feasible(s, &inst), "{:?}", s);
            let recomputed: f64 = s.visited().map(|v| inst.vertices()[v].score).sum();
            prop_assert_eq!(top_objective(s, &inst), recomputed);
        }
    }

    #[test]
    fn top_children_only_contain_parent_vertices(seed in any::<u64>(), n in 4usize..40, paths in 1usize..4) {
        let inst = random_top(seed, n, paths, 25.0);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let a = top_random_solution(&inst, &mut r).unwrap();
        let b = top_random_solution(&inst, &mut r).unwrap();
        let (c1, c2) = top_recombine(&a, &b, &inst);
        let best_path = |s: &TopSolution| {
            let mut best = &s.paths[0];
            for p in &s.paths[1..] {
                if inst.path_score(p) > inst.path_score(best) {
                    best = p;
                }
            }
            best.clone()
        };
        let allowed1: HashSet<usize> = best_path(&a).into_iter().chain(b.visited()).collect();
        let allowed2: HashSet<usize> = best_path(&b).into_iter().chain(a.visited()).collect();
        prop_assert!(c1.visited().all(|v| allowed1.contains(&v)));
        prop_assert!(c2.visited().all(|v| allowed2.contains(&v)));
        prop_assert_eq!(&c1.paths[0], &best_path(&a));
    }

    #[test]
    fn top_similarity_axioms(seed in any::<u64>(), n in 4usize..30, paths in 1usize..4) {
        let inst = random_top(seed, n, paths, 20.0);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let a = top_random_solution(&inst, &mut r).unwrap();
        let b = top_random_solution(&inst, &mut r).unwrap();
        let (ga, gb) = (TopGraph::from_solution(&a, &inst), TopGraph::from_solution(&b, &inst));
        let s = top_similarity(&ga, &gb);
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, top_similarity(&gb, &ga));
        prop_assert_eq!(top_similarity(&ga, &ga), 1.0);
    }

    #[test]
    fn qap_operators_emit_permutations(seed in any::<u64>(), n in 2usize..30) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let p1 = qap_random_solution(n, &mut r);
        let p2 = qap_random_solution(n, &mut r);
        let (c1, c2) = qap_two_point_crossover(&p1, &p2, &mut r);
        prop_assert!(c1.is_permutation() && c2.is_permutation());
        prop_assert!(qap_swap_mutation(&c1, &mut r).is_permutation());
        let i = r.random_range(0..n);
        let j = r.random_range(i + 1..=n);
        let child = two_point_child(&p1.perm, &p2.perm, i, j);
        prop_assert_eq!(&child[i..j], &p1.perm[i..j]);
        prop_assert!(ubsga::qap::is_permutation(&child));
    }

    #[test]
    fn qap_objective_matches_naive_loop(seed in any::<u64>(), n in 1usize..15) {
        let inst = random_qap(seed, n);
        let sol = qap_random_solution(n, &mut ChaCha8Rng::seed_from_u64(seed ^ 4));
        prop_assert_eq!(qap_objective(&sol, &inst), naive_qap(&inst, &sol.perm));
    }

    #[test]
    fn qap_objective_is_invariant_under_facility_relabeling(seed in any::<u64>(), n in 2usize..15) {
        let inst = random_qap(seed, n);
        let mut r = ChaCha8Rng::seed_from_u64(seed ^ 5);
        let sigma = qap_random_solution(n, &mut r).perm;
        let phi = qap_random_solution(n, &mut r).perm;
        // Facility a of the relabeled instance is facility sigma[a] of the original.
        let flow: Vec<f64> = (0..n * n).map(|k| inst.flow(sigma[k / n], sigma[k % n])).collect();
        let relabeled = QapInstance::new(n, flow, inst.distance_matrix().to_vec()).unwrap();
        let moved = QapSolution { perm: (0..n).map(|a| phi[sigma[a]]).collect() };
        prop_assert_eq!(
            qap_objective(&QapSolution { perm: phi }, &inst),
            qap_objective(&moved, &relabeled)
        );
    }

    #[test]
    fn instance_formats_round_trip(seed in any::<u64>(), n in 3usize..20) {
        let top = random_top(seed, n, 2, 10.0);
        let back = parse_top_instance(&write_top_instance(&top)).unwrap();
        prop_assert_eq!(back.vertices(), top.vertices());
        prop_assert_eq!(back.tmax(), top.tmax());
        prop_assert_eq!(back.path_count(), top.path_count());
        let qap = random_qap(seed, n);
        prop_assert_eq!(parse_qap_instance(&write_qap_instance(&qap)).unwrap(), qap);
    }

    #[test]
    fn metrics_are_nonnegative_and_scale_free(
        objs in prop::collection::vec(1.0f64..1000.0, 1..10),
        bks in 1.0f64..1000.0,
        k in 0.01f64..100.0,
        maximize in any::<bool>(),
    ) {
        let dir = if maximize { Direction::Maximize } else { Direction::Minimize };
        let scaled: Vec<f64> = objs.iter().map(|o| o * k).collect();
        let pairs = [
            (compute_arpe(&objs, bks), compute_arpe(&scaled, bks * k)),
            (compute_mrpe(&objs, bks), compute_mrpe(&scaled, bks * k)),
            (compute_rpe(&objs, bks, dir), compute_rpe(&scaled, bks * k, dir)),
        ];
        for (a, b) in pairs {
            prop_assert!(a >= 0.0);
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0), "{} vs {}", a, b);
        }
        let at_bks = vec![bks; objs.len()];
        prop_assert_eq!(compute_arpe(&at_bks, bks), 0.0);
        prop_assert_eq!(compute_mrpe(&at_bks, bks), 0.0);
        prop_assert_eq!(compute_rpe(&at_bks, bks, dir), 0.0);
    }
}

#[test]
fn tight_budget_leaves_every_tour_empty() {
    let inst = random_top(9, 20, 3, 0.0);
    let mut r = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        let s = top_random_solution(&inst, &mut r).unwrap();
        assert_eq!(top_objective(&s, &inst), 0.0);
        let m = top_mutate(&s, &inst, &mut r);
        assert_eq!(top_objective(&m, &inst), 0.0);
    }
}

#[test]
fn bundled_fixtures_parse() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data");
    for (dir, ext) in [("top", "txt"), ("qap", "dat")] {
        let mut count = 0;
        for entry in std::fs::read_dir(root.join(dir)).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == ext) {
                let text = std::fs::read_to_string(&path).unwrap();
                let ok = if ext == "txt" {
                    parse_top_instance(&text).is_ok()
                } else {
                    parse_qap_instance(&text).is_ok()
                };
                assert!(ok, "{}", path.display());
                count += 1;
            }
        }
        assert!(count > 0, "no fixtures in {dir}");
    }
}
