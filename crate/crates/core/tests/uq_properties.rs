use proptest::prelude::*;

use swarm_core::uq::{divergence, normalize_answer, semantic_entropy, AnswerDistribution};

const LABELS: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

fn distribution() -> impl Strategy<Value = AnswerDistribution> {
    proptest::collection::vec(0u64..20, LABELS.len()).prop_filter_map("non-empty", |counts| {
        let pairs: Vec<_> = LABELS.iter().zip(counts).filter(|(_, c)| *c > 0).map(|(l, c)| (*l, c)).collect();
        (!pairs.is_empty()).then(|| AnswerDistribution::from_counts(pairs).unwrap())
    })
}

proptest! {
    #[test]
    fn entropy_bounds(d in distribution()) {
        let h = semantic_entropy(&d).unwrap();
        prop_assert!(h >= 0.0);
        prop_assert!(h <= (d.clusters() as f64).ln() + 1e-12);
    }

    #[test]
    fn entropy_ignores_labels(counts in proptest::collection::vec(1u64..30, 1..6), shift in 0usize..6) {
        let a = AnswerDistribution::from_counts(counts.iter().enumerate().map(|(i, &c)| (LABELS[i], c))).unwrap();
        let b = AnswerDistribution::from_counts(
            counts.iter().enumerate().map(|(i, &c)| (LABELS[(i + shift) % LABELS.len()], c)),
        )
        .unwrap();
        prop_assert!((semantic_entropy(&a).unwrap() - semantic_entropy(&b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn entropy_is_scale_free(d in distribution(), factor in 1u64..5) {
        let scaled = AnswerDistribution::from_counts(d.iter().map(|(a, c)| (a.to_string(), c * factor))).unwrap();
        prop_assert!((semantic_entropy(&d).unwrap() - semantic_entropy(&scaled).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn divergence_is_a_metric(a in distribution(), b in distribution(), c in distribution()) {
        let ab = divergence(&a, &b).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&ab));
        prop_assert_eq!(ab, divergence(&b, &a).unwrap());
        prop_assert_eq!(divergence(&a, &a).unwrap(), 0.0);
        prop_assert!(divergence(&a, &c).unwrap() <= ab + divergence(&b, &c).unwrap() + 1e-12);
    }

    #[test]
    fn normalization_is_idempotent(raw in "[ -~]{0,24}") {
        if let Some(once) = normalize_answer(&raw) {
            prop_assert_eq!(normalize_answer(&once), Some(once.clone()));
        }
    }
}

#[test]
fn disjoint_support_is_maximally_divergent() {
    let a = AnswerDistribution::from_answers(["1", "1", "2"]);
    let b = AnswerDistribution::from_answers(["3"]);
    assert_eq!(divergence(&a, &b).unwrap(), 1.0);
}
