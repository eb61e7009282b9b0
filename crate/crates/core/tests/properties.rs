use hyperclimb_core::fitness::TableFitness;
use hyperclimb_core::schema::{effect, Mode, PartitionModel, SchemaModel};
use hyperclimb_core::staircase::StaircaseDescriptor;
use hyperclimb_core::uga::{sigma_scale, sus_counts, uniform_crossover};
use hyperclimb_core::{BitString, Fitness, Population, RandomStream};
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    (1usize..40).prop_flat_map(|n| prop::collection::vec(0.0f64..10.0, n * 2))
}

proptest! {
    #[test]
    fn sus_copies_are_floor_or_ceil_of_expectation(w in weights(), u in 0.0f64..1.0) {
        let total: f64 = w.iter().sum();
        prop_assume!(total > 0.0);
        let counts = sus_counts(&w, u);
        prop_assert_eq!(counts.iter().sum::<usize>(), w.len());
        for (c, wi) in counts.iter().zip(&w) {
            let e = wi * w.len() as f64 / total;
            prop_assert!((*c as f64) >= e.floor() - 1e-9 && (*c as f64) <= e.ceil() + 1e-9, "count {} expectation {}", c, e);
        }
    }

    #[test]
    fn crossover_conserves_allele_counts(half in 1usize..20, len in 1usize..150, seed: u64) {
        let mut rng = RandomStream::new(seed);
        let parents = Population::random(half * 2, len, &mut rng).unwrap();
        let children = uniform_crossover(&parents, &mut rng);
        prop_assert_eq!(parents.one_counts(), children.one_counts());
    }

    #[test]
    fn sigma_scaling_preserves_argmax_and_is_nonnegative(raw in prop::collection::vec(-100.0f64..100.0, 2..60)) {
        let adj = sigma_scale(&raw);
        prop_assert!(adj.iter().all(|&a| a >= 0.0));
        let best = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let top = adj.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (r, a) in raw.iter().zip(&adj) {
            if *r == best {
                prop_assert_eq!(*a, top);
            }
        }
    }

    #[test]
    fn permuting_loci_permutes_fitness(h in 1usize..5, o in 1usize..4, extra in 0usize..6, seed: u64) {
        let mut rng = RandomStream::new(seed);
        let ell = h * o + extra;
        let f = StaircaseDescriptor::random_embedding(h, o, 0.7, ell, &mut rng).unwrap();
        let perm = rand::seq::index::sample(&mut rng, ell, ell).into_vec();
        let fp = f.permuted(&perm).unwrap();
        for _ in 0..50 {
            let g = BitString::random(ell, &mut rng);
            let mut moved = BitString::zeros(ell);
            for (l, &to) in perm.iter().enumerate() {
                moved.set(to, g.get(l));
            }
            prop_assert_eq!(f.expected(g.as_bits()), fp.expected(moved.as_bits()));
        }
    }
}

#[test]
fn effect_is_monotone_under_refinement() {
    let mut rng = RandomStream::new(71);
    for _ in 0..50 {
        let ell = 2 + rng.below(11);
        let f = TableFitness::random(ell, &mut rng);
        for _ in 0..4 {
            let mut loci = rand::seq::index::sample(&mut rng, ell, ell).into_vec();
            let outer = 1 + rng.below(ell);
            let inner = rng.below(outer + 1);
            loci.truncate(outer);
            let fine = PartitionModel::new(ell, loci.iter().copied()).unwrap();
            let coarse = PartitionModel::new(ell, loci[..inner].iter().copied()).unwrap();
            let ef = effect(&f, &fine, &mut Mode::Exact).unwrap();
            let ec = effect(&f, &coarse, &mut Mode::Exact).unwrap();
            assert!(ef >= ec - 1e-12, "{ef} < {ec}");
        }
    }
}

#[test]
fn stage_partition_sums_to_negative_mean_gain() {
    for h in 1..=4 {
        for o in 1..=3 {
            for delta in [0.3, 1.0, 3.0] {
                let f = StaircaseDescriptor::basic(h, o, delta).unwrap();
                let base = f
                    .brute_force_schema_mean(&SchemaModel::empty(f.span()))
                    .unwrap();
                for i in 1..=h {
                    let stage = f.stage_schema(f.stage_index(i).unwrap());
                    let part = stage.partition();
                    let mut total = 0.0;
                    for p in 0..part.schema_count() {
                        let s = part.schema(p);
                        if s != stage {
                            total += f.brute_force_schema_mean(&s).unwrap() - base;
                        }
                    }
                    let want = -(i as f64) * delta;
                    assert!(
                        (total - want).abs() < 1e-9,
                        "h={h} o={o} i={i}: {total} vs {want}"
                    );
                }
            }
        }
    }
}
