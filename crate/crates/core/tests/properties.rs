use proptest::prelude::*;
use rand::Rng;

use xlwalk_core::datahub::{gen_synthetic, partition_label_skew, NodeQuality};
use xlwalk_core::learner::{weighted_average, Arch, ModelParams};
use xlwalk_core::policy::{
    build_importance_vector, build_transition, dynamic_alpha, elastic_iterations, mh_transition,
    uniform_transition, ElasticParams, ImportanceParams, TransitionPolicy,
};
use xlwalk_core::rng::rng_from_seed;
use xlwalk_core::swarm::{attraction_prob, AttractionConfig};
use xlwalk_core::topology::{betweenness, gen_connected_caveman, Graph};

fn connected_graph(n: usize, extra: f64, seed: u64) -> Graph {
    let mut rng = rng_from_seed(seed);
    let mut edges = Vec::new();
    for v in 1..n {
        edges.push((rng.random_range(0..v), v));
    }
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < extra && !edges.contains(&(a, b)) {
                edges.push((a, b));
            }
        }
    }
    Graph::from_edges(n, &edges).unwrap()
}

fn assert_stochastic(g: &Graph, p: &TransitionPolicy, self_loops: bool) {
    for i in 0..g.node_count() {
        let row = p.row(i);
        let sum: f64 = row.probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "row {i} sums to {sum}");
        for (&t, &q) in row.targets.iter().zip(&row.probs) {
            assert!(q >= 0.0);
            assert!(g.has_edge(i, t) || (self_loops && t == i), "row {i} reaches {t}");
        }
    }
}

fn model(theta: Vec<f64>) -> ModelParams {
    ModelParams {
        arch: Arch::Softmax,
        n_dims: theta.len(),
        n_classes: 1,
        theta,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn importance_rows_are_stochastic(
        n in 2usize..20,
        extra in 0.0f64..0.5,
        seed in any::<u64>(),
        alpha in 0.0f64..=1.0,
        normalize in any::<bool>(),
        dl in prop::collection::vec((0.0f64..=1.0, 0.0f64..=1.0), 20),
    ) {
        let g = connected_graph(n, extra, seed);
        let quality: Vec<NodeQuality> = dl[..n].iter().map(|&(d, l)| NodeQuality { d, l }).collect();
        let imp = build_importance_vector(&quality, &betweenness(&g), alpha, normalize);
        assert_stochastic(&g, &build_transition(&g, &imp).unwrap(), false);
        assert_stochastic(&g, &uniform_transition(&g), false);
    }

    #[test]
    fn mh_keeps_uniform_distribution(n in 2usize..20, extra in 0.0f64..0.6, seed in any::<u64>()) {
        let g = connected_graph(n, extra, seed);
        let p = mh_transition(&g);
        assert_stochastic(&g, &p, true);
        let dense = p.dense();
        let pi = 1.0 / n as f64;
        for j in 0..n {
            let flow: f64 = (0..n).map(|i| pi * dense[i][j]).sum();
            prop_assert!((flow - pi).abs() < 1e-12);
            for i in 0..n {
                prop_assert!((dense[i][j] - dense[j][i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn dynamic_alpha_is_monotone_and_bounded(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
        let p = ImportanceParams::default();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (dynamic_alpha(lo, &p), dynamic_alpha(hi, &p));
        prop_assert!(x <= y);
        prop_assert!(x >= p.alpha_min && y <= p.alpha_max);
    }

    #[test]
    fn elastic_budget_is_monotone_and_bounded(a in 0.0f64..=1.0, b in 0.0f64..=1.0, x_max in 1usize..64) {
        let p = ElasticParams { x_max, ..ElasticParams::default() };
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (x, y) = (elastic_iterations(lo, &p), elastic_iterations(hi, &p));
        prop_assert!(x <= y);
        prop_assert!(x >= 1 && y <= x_max);
    }

    #[test]
    fn attraction_probability_grows_with_time(
        t in 0u64..200,
        strength in 0.0f64..1.0,
        base in 0.0f64..=1.0,
    ) {
        let cfg = AttractionConfig { strength, base_coeff: base, cooldown_max: 0 };
        let (p, q) = (attraction_prob(t, &cfg), attraction_prob(t + 1, &cfg));
        prop_assert!((0.0..=1.0).contains(&p));
        prop_assert!(p <= q);
    }

    #[test]
    fn weighted_average_stays_in_hull(
        rows in prop::collection::vec(prop::collection::vec(-10.0f64..10.0, 5), 1..6),
        raw in prop::collection::vec(0.0f64..5.0, 6),
    ) {
        let models: Vec<ModelParams> = rows.into_iter().map(model).collect();
        let refs: Vec<&ModelParams> = models.iter().collect();
        let avg = weighted_average(&refs, &raw[..models.len()]).unwrap();
        for k in 0..5 {
            let lo = models.iter().map(|m| m.theta[k]).fold(f64::INFINITY, f64::min);
            let hi = models.iter().map(|m| m.theta[k]).fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(avg.theta[k] >= lo - 1e-12 && avg.theta[k] <= hi + 1e-12);
        }
    }

    #[test]
    fn label_skew_assigns_every_sample_once(
        seed in any::<u64>(),
        skew in 0.0f64..=1.0,
        hi in 1usize..4,
    ) {
        let ds = gen_synthetic(4, 2, 30, 0.2, 2.0, seed).unwrap();
        let g = gen_connected_caveman(3, 9, 0).unwrap();
        let p = partition_label_skew(&ds, &g, skew, 1, hi, seed).unwrap();
        let mut all: Vec<usize> = p.assignment.iter().flatten().copied().collect();
        all.sort_unstable();
        let mut train = ds.train.clone();
        train.sort_unstable();
        prop_assert_eq!(all, train);
        let sizes: Vec<usize> = p.assignment.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }
}

#[test]
fn unskewed_labels_look_uniform() {
    let ds = gen_synthetic(5, 2, 400, 0.1, 2.0, 11).unwrap();
    let g = gen_connected_caveman(4, 20, 0).unwrap();
    let p = partition_label_skew(&ds, &g, 0.0, 1, 1, 12).unwrap();
    // Pearson statistic per node against equal label counts, pooled.
    let mut stat = 0.0;
    let mut dof = 0.0;
    for node in 0..g.node_count() {
        let h = p.label_histogram(&ds, node);
        let total: usize = h.iter().sum();
        let expected = total as f64 / h.len() as f64;
        stat += h.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum::<f64>();
        dof += (h.len() - 1) as f64;
    }
    // sampling without replacement only shrinks the statistic
    let bound = dof + 4.0 * (2.0 * dof).sqrt();
    assert!(stat < bound, "chi-square {stat:.1} over {dof} dof");
}

#[test]
fn saturated_attraction_probability() {
    let cfg = AttractionConfig {
        strength: 0.1,
        base_coeff: 0.05,
        cooldown_max: 5,
    };
    assert_eq!(attraction_prob(30, &cfg), 1.0);
    assert!((attraction_prob(10, &cfg) - 0.05 * 1f64.exp()).abs() < 1e-15);
}
