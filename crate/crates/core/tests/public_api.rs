use multiplex_nmf::{
    adjusted_rand_index, factorize, generate_network, hard_clustering, merged_baseline, nf_cce, nmi, purity,
    rand_index, LayerMatrix, Method, MultiplexNetwork, PlantedSpec, SolverConfig,
};
use proptest::prelude::*;

const COLLECTIVE: [Method; 4] = [Method::Snmf, Method::Pnmf, Method::Snmtf, Method::Ssnmtf];

fn two_layers(seed: u64) -> MultiplexNetwork {
    let first = PlantedSpec::uniform(vec![10, 10, 10], 0.7, 0.05, seed).unwrap();
    let second = PlantedSpec::uniform(vec![10, 10, 10], 0.6, 0.1, seed + 1).unwrap();
    generate_network(&[first, second]).unwrap()
}

#[test]
fn every_collective_method_recovers_clean_communities() {
    let network = two_layers(7);
    let truth = network.ground_truth().unwrap().labels();
    for method in COLLECTIVE {
        let fit = nf_cce(&network, method, &SolverConfig::new(3).with_seed(2)).unwrap();
        assert_eq!(fit.layers.len(), 2);
        assert_eq!(fit.objective_trace.len(), fit.iterations + 1);
        let score = nmi(fit.assignment.labels(), truth).unwrap();
        assert!(score > 0.9, "{method:?}: {score}");
    }
}

#[test]
fn runs_repeat_exactly_for_a_seed() {
    let network = two_layers(3);
    for method in COLLECTIVE {
        let cfg = SolverConfig::new(3).with_seed(11);
        assert_eq!(nf_cce(&network, method, &cfg).unwrap(), nf_cce(&network, method, &cfg).unwrap());
        assert_eq!(merged_baseline(&network, method, &cfg).unwrap(), merged_baseline(&network, method, &cfg).unwrap());
    }
}

#[test]
fn merged_baseline_factorizes_the_layer_average() {
    let network = two_layers(5);
    let sum = network.layers().iter().map(|l| l.values().clone()).reduce(|a, b| a + b).unwrap();
    let average = LayerMatrix::new(sum / 2.0).unwrap();
    for method in COLLECTIVE {
        let cfg = SolverConfig::new(3).with_seed(4);
        let merged = merged_baseline(&network, method, &cfg).unwrap();
        let direct = factorize(&average, method, &cfg).unwrap();
        assert!(merged.layers.is_empty());
        assert_eq!(merged.h, direct.h);
        assert_eq!(merged.assignment, hard_clustering(direct.h.values()).unwrap().assignment);
    }
}

fn labelings() -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2usize..30).prop_flat_map(|n| (prop::collection::vec(0usize..4, n), prop::collection::vec(0usize..5, n)))
}

proptest! {
    #[test]
    fn scores_ignore_cluster_names((clusters, classes) in labelings(), shift in 1usize..4) {
        let renamed: Vec<usize> = clusters.iter().map(|&c| (c + shift) % 4 + 10).collect();
        prop_assert_eq!(purity(&renamed, &classes).unwrap(), purity(&clusters, &classes).unwrap());
        prop_assert_eq!(rand_index(&renamed, &classes).unwrap(), rand_index(&clusters, &classes).unwrap());
        prop_assert_eq!(
            adjusted_rand_index(&renamed, &classes).unwrap(),
            adjusted_rand_index(&clusters, &classes).unwrap()
        );
        prop_assert!((nmi(&renamed, &classes).unwrap() - nmi(&clusters, &classes).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn scores_stay_in_range((clusters, classes) in labelings()) {
        for score in [purity(&clusters, &classes).unwrap(), nmi(&clusters, &classes).unwrap(), rand_index(&clusters, &classes).unwrap()] {
            prop_assert!((0.0..=1.0 + 1e-12).contains(&score));
        }
        let ari = adjusted_rand_index(&clusters, &classes).unwrap();
        prop_assert!((-1.0..=1.0 + 1e-12).contains(&ari));
    }
}
