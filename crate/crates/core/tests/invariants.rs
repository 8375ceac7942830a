use std::collections::BTreeSet;

use carekg::eval::{auc_ovr_macro, f1_scores, make_split};
use carekg::grad::Matrix;
use carekg::kg::{add_inverses, build_cohort_graph, vocab, SchemaVariant};
use carekg::models::{rgcn_train, RgcnConfig};
use carekg::pathway::{generate_cohort, CohortConfig, Outcome};
use carekg::rdf::Term;
use proptest::prelude::*;

fn small_cohort(n: usize, seed: u64) -> Vec<carekg::pathway::PatientRecord> {
    let mut config = CohortConfig::default_config();
    config.n_patients = n;
    config.seed = seed;
    generate_cohort(&config).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn inverse_edges_mirror_every_iri_triple(seed in 0u64..1000, v in 0usize..8) {
        let cohort = small_cohort(12, seed);
        let g = add_inverses(&build_cohort_graph(&cohort, SchemaVariant::ALL[v]).unwrap().graph);
        let set = g.triple_set();
        for (s, p, o) in g.iter() {
            if o.is_literal() {
                continue;
            }
            let p = p.as_iri().unwrap();
            let mirror = if vocab::is_inverse(p) {
                let forward = set.iter().any(|t| t.subject == *o && t.object == *s && vocab::inverse(t.predicate.as_iri().unwrap()).as_iri() == Some(p));
                prop_assert!(forward, "inverse triple without a forward edge");
                continue;
            } else {
                carekg::rdf::Triple::new(o.clone(), vocab::inverse(p), s.clone())
            };
            prop_assert!(set.contains(&mirror));
        }
    }

    #[test]
    fn outcomes_never_enter_the_graph(seed in 0u64..1000, shift in 1usize..3) {
        let cohort = small_cohort(15, seed);
        let mut relabelled = cohort.clone();
        for p in &mut relabelled {
            p.outcome = Outcome::ALL[(p.outcome.index() + shift) % 3];
        }
        for v in SchemaVariant::ALL {
            let a = build_cohort_graph(&cohort, v).unwrap().graph.triple_set();
            let b = build_cohort_graph(&relabelled, v).unwrap().graph.triple_set();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn split_partitions_and_stratifies(labels in prop::collection::vec(0usize..3, 10..300), seed in any::<u64>()) {
        let s = make_split(&labels, seed).unwrap();
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for k in 0..3 {
            let count = |part: &[usize]| part.iter().filter(|&&i| labels[i] == k).count() as f64;
            let m = labels.iter().filter(|&&l| l == k).count() as f64;
            prop_assert!((count(&s.validation) - m / 10.0).abs() <= 1.0);
            prop_assert!((count(&s.test) - m / 10.0).abs() <= 1.0);
        }
        prop_assert_eq!(&s, &make_split(&labels, seed).unwrap());
    }

    #[test]
    fn macro_f1_lies_between_class_extremes(
        pairs in prop::collection::vec((0usize..3, 0usize..3), 1..200),
    ) {
        let (y, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
        let f = f1_scores(&y, &p, 3).unwrap();
        let lo = f.per_class.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.per_class.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(lo <= f.macro_f1 + 1e-12 && f.macro_f1 <= hi + 1e-12);
        for c in &f.per_class {
            prop_assert!((0.0..=1.0).contains(c));
        }
    }

    #[test]
    fn auc_is_invariant_under_monotone_maps(
        rows in prop::collection::vec((0usize..3, 0u8..8, 0u8..8, 0u8..8), 4..80),
    ) {
        let y: Vec<usize> = rows.iter().map(|r| r.0).collect();
        let probs = Matrix::from_fn(rows.len(), 3, |i, k| {
            let r = rows[i];
            [r.1, r.2, r.3][k] as f64 / 8.0
        });
        let Ok(base) = auc_ovr_macro(&y, &probs) else { return Ok(()) };
        prop_assert!((0.0..=1.0).contains(&base));
        let mapped = probs.map(|x| (3.0 * x).exp() - 0.5);
        prop_assert_eq!(auc_ovr_macro(&y, &mapped).unwrap(), base);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    /// Validation labels steer model selection only, and test labels are
    /// never passed to training at all.
    #[test]
    fn validation_labels_do_not_move_the_training_loss(seed in 0u64..100, shift in 1usize..3) {
        let cohort = small_cohort(30, seed);
        let cg = build_cohort_graph(&cohort, SchemaVariant::SphnTs).unwrap();
        let g = add_inverses(&cg.graph);
        let patients: Vec<String> = cg.patients.iter().map(|p| p.iri.clone()).collect();
        let labels: Vec<usize> = cohort.iter().map(|p| p.outcome.index()).collect();
        let split = make_split(&labels, seed).unwrap();
        let train: Vec<(usize, usize)> = split.train.iter().map(|&i| (i, labels[i])).collect();
        let val: Vec<(usize, usize)> = split.validation.iter().map(|&i| (i, labels[i])).collect();
        let val_moved: Vec<(usize, usize)> = val.iter().map(|&(i, k)| (i, (k + shift) % 3)).collect();
        let config = RgcnConfig {
            input_dim: 6,
            hidden: vec![6, 6],
            epochs: 8,
            patience: 100,
            seed,
            ..RgcnConfig::with_layers(2, true)
        };
        let a = rgcn_train(&g, &patients, &train, &val, &config).unwrap();
        let b = rgcn_train(&g, &patients, &train, &val_moved, &config).unwrap();
        let la: Vec<f64> = a.history.iter().map(|e| e.loss).collect();
        let lb: Vec<f64> = b.history.iter().map(|e| e.loss).collect();
        prop_assert_eq!(la, lb);
    }
}

#[test]
fn saturation_of_a_cohort_graph_is_transitive() {
    let cohort = small_cohort(10, 3);
    let g = build_cohort_graph(&cohort, SchemaVariant::SphnSat2).unwrap().graph;
    let fix = carekg::kg::saturate_to_fixpoint(&g).unwrap();
    let before = vocab::time_before();
    let edges: BTreeSet<(Term, Term)> = fix
        .iter()
        .filter(|(_, p, _)| **p == before)
        .map(|(s, _, o)| (s.clone(), o.clone()))
        .collect();
    for (a, b) in &edges {
        for (c, d) in &edges {
            if b == c {
                assert!(edges.contains(&(a.clone(), d.clone())));
            }
        }
    }
}
