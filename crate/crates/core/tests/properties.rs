use std::collections::BTreeSet;

use openbox::analysis::{consistency_report, exactness_report};
use openbox::closedform::fold_configuration;
use openbox::dataio::{gen_syn, Dataset, Split};
use openbox::openbox::{openbox, OpenBoxOptions};
use openbox::polytope::build_polytope;
use openbox::{ActivationSpec, Network};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn arch() -> impl Strategy<Value = Vec<usize>> {
    (
        1usize..=4,
        prop::collection::vec(1usize..=6, 1..=3),
        2usize..=3,
    )
        .prop_map(|(d, hidden, out)| {
            let mut a = vec![d];
            a.extend(hidden);
            a.push(out);
            a
        })
}

fn activation() -> impl Strategy<Value = ActivationSpec> {
    prop_oneof![
        Just(ActivationSpec::relu()),
        Just(ActivationSpec::leaky_relu(0.1).unwrap()),
        Just(ActivationSpec::hard_tanh()),
    ]
}

fn random_data(d: usize, n: usize, rng: &mut ChaCha8Rng) -> Dataset {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
        .collect();
    let labels = (0..n).map(|_| rng.gen_range(0..2)).collect();
    Dataset::from_rows(&rows, labels, Split::Train).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn softmax_output_is_a_distribution(a in arch(), act in activation(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::random(&a, act, &mut rng).unwrap();
        let x: Vec<f64> = (0..a[0]).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let t = net.forward(&x).unwrap();
        prop_assert!(t.output.iter().all(|&p| p >= 0.0));
        prop_assert!((t.output.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert_eq!(&t.post_activations[0], &x);
        prop_assert_eq!(net.forward(&x).unwrap(), t);
    }

    #[test]
    fn llc_reproduces_network_and_polytope_partitions(
        a in arch(), act in activation(), seed in any::<u64>()
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::random(&a, act, &mut rng).unwrap();
        let data = random_data(a[0], 60, &mut rng);
        let model = openbox(&net, &data, &OpenBoxOptions { skip_redundancy: true, bbox: None }).unwrap();
        prop_assert!(exactness_report(&net, &model, &data).unwrap().max < 1e-9);
        prop_assert_eq!(model.entries().values().map(|e| e.support).sum::<usize>(), data.len());
        for e in model.entries().values() {
            for x in data.rows() {
                let inside = e.llc.polytope.contains(x).unwrap();
                prop_assert_eq!(inside, net.conf(x).unwrap() == e.llc.configuration);
            }
        }
    }

    #[test]
    fn network_is_affine_inside_a_polytope(a in arch(), seed in any::<u64>()) {
        // Midpoints of same-configuration pairs stay in the (convex) region,
        // where logits must be the average of the endpoint logits.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::random(&a, ActivationSpec::relu(), &mut rng).unwrap();
        let data = random_data(a[0], 40, &mut rng);
        for i in 0..data.len() {
            for j in i + 1..data.len() {
                let (x, y) = (data.row(i), data.row(j));
                if net.conf(x).unwrap() != net.conf(y).unwrap() {
                    continue;
                }
                let mid: Vec<f64> = x.iter().zip(y).map(|(p, q)| 0.5 * (p + q)).collect();
                prop_assert_eq!(net.conf(&mid).unwrap(), net.conf(x).unwrap());
                let (lx, ly, lm) = (
                    net.forward(x).unwrap().pre_activations.last().unwrap().clone(),
                    net.forward(y).unwrap().pre_activations.last().unwrap().clone(),
                    net.forward(&mid).unwrap().pre_activations.last().unwrap().clone(),
                );
                for k in 0..lm.len() {
                    let scale = 1.0 + lx[k].abs() + ly[k].abs();
                    prop_assert!((lm[k] - 0.5 * (lx[k] + ly[k])).abs() < 1e-12 * scale);
                }
            }
        }
    }

    #[test]
    fn enumeration_is_order_independent(seed in any::<u64>(), perm_seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::random(&[2, 5, 4, 2], ActivationSpec::relu(), &mut rng).unwrap();
        let data = random_data(2, 80, &mut rng);
        let mut order: Vec<usize> = (0..data.len()).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut ChaCha8Rng::seed_from_u64(perm_seed));
        let shuffled = data.select(&order);
        let opts = OpenBoxOptions::default();
        let a = openbox(&net, &data, &opts).unwrap();
        let b = openbox(&net, &shuffled, &opts).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for ((ca, ea), (cb, eb)) in a.entries().iter().zip(b.entries()) {
            prop_assert_eq!(ca, cb);
            prop_assert_eq!(&ea.llc, &eb.llc);
            prop_assert_eq!(ea.support, eb.support);
        }
    }

    #[test]
    fn same_configuration_means_identical_decision_features(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let net = Network::random(&[3, 4, 3, 2], ActivationSpec::relu(), &mut rng).unwrap();
        let data = random_data(3, 50, &mut rng);
        let model = openbox(&net, &data, &OpenBoxOptions::default()).unwrap();
        let r = consistency_report(&net, &model, &data).unwrap();
        for rec in r.records.iter().filter(|r| r.same_configuration) {
            prop_assert_eq!(rec.cosine, 1.0);
        }
    }
}

#[test]
fn thread_count_does_not_change_the_model() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let net = Network::random(&[2, 6, 6, 2], ActivationSpec::relu(), &mut rng).unwrap();
    let data = gen_syn(2000, 3).unwrap();
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| {
                openbox(&net, &data, &OpenBoxOptions::default())
                    .unwrap()
                    .to_json()
            })
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn configurations_are_far_fewer_than_possible() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let net = Network::random(&[2, 4, 16, 2, 2], ActivationSpec::relu(), &mut rng).unwrap();
    let data = gen_syn(5000, 1).unwrap();
    let confs: BTreeSet<_> = data.rows().map(|x| net.conf(x).unwrap()).collect();
    assert!(confs.len() < 1 << 10, "{}", confs.len());
}

#[test]
fn polytope_count_matches_hidden_neurons_for_relu() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let net = Network::random(&[3, 5, 4, 2], ActivationSpec::relu(), &mut rng).unwrap();
    let x = [0.1, 0.2, -0.3];
    let c = net.conf(&x).unwrap();
    let p = build_polytope(&net, &fold_configuration(&net, &c).unwrap(), &c).unwrap();
    assert_eq!(p.constraints().len(), net.hidden_count());
}
