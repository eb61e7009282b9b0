use hyperclimb_core::refractal::{render_grid, RefractalAddressing};
use hyperclimb_core::staircase::StaircaseDescriptor;
use hyperclimb_core::{Bits, RandomStream};

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

fn assert_bijective(a: &RefractalAddressing) {
    let len = a.chrom_len();
    let side = a.side() as usize;
    let mut hit = vec![false; side * side];
    for w in 0..1u64 << len {
        let (x, y) = a.address(Bits::new(std::slice::from_ref(&w), len)).unwrap();
        assert!((1..=side as u64).contains(&x) && (1..=side as u64).contains(&y));
        let cell = (y as usize - 1) * side + x as usize - 1;
        assert!(!hit[cell], "cell ({x},{y}) written twice");
        hit[cell] = true;
    }
    assert!(hit.iter().all(|&h| h));
}

#[test]
fn every_small_system_is_bijective() {
    let mut rng = RandomStream::new(41);
    for m in 1..=6 {
        for n in 1..=6 {
            let len = 2 * m * n;
            if len > 12 {
                continue;
            }
            for x in subsets(len, m * n) {
                let y: Vec<usize> = (0..len).filter(|l| !x.contains(l)).collect();
                assert_bijective(&RefractalAddressing::new(m, n, x.clone(), y.clone()).unwrap());
                let mut xs = x.clone();
                let mut ys = y.clone();
                for v in [&mut xs, &mut ys] {
                    let p = rand::seq::index::sample(&mut rng, v.len(), v.len()).into_vec();
                    *v = p.into_iter().map(|i| v[i]).collect();
                }
                assert_bijective(&RefractalAddressing::new(m, n, xs, ys).unwrap());
            }
        }
    }
}

fn example_staircase(delta: f64) -> StaircaseDescriptor {
    let v = [true, false, false, true, false, false, true, true];
    StaircaseDescriptor::new(4, 2, delta, 16, (0..8).collect(), v.to_vec()).unwrap()
}

/// X rows: L1, L3, then free loci; Y rows: L2, L4, then free loci.
fn example_addressing() -> RefractalAddressing {
    RefractalAddressing::new(
        4,
        2,
        vec![0, 1, 4, 5, 8, 9, 12, 13],
        vec![2, 3, 6, 7, 10, 11, 14, 15],
    )
    .unwrap()
}

#[test]
fn sixteen_bit_example_is_bijective() {
    assert_bijective(&example_addressing());
}

#[test]
fn stage_one_band_stands_out() {
    let grid = render_grid(&example_staircase(3.0), &example_addressing(), None).unwrap();
    assert_eq!(grid.side(), 256);
    let width = 64;
    let band_mean = |b: usize| {
        let s: f64 = grid
            .rows()
            .map(|r| r[b * width..(b + 1) * width].iter().sum::<f64>())
            .sum();
        s / (256 * width) as f64
    };
    // V's first row is "10", so step 1 is matched in band 2.
    let target = band_mean(2);
    for b in [0, 1, 3] {
        assert!(target > band_mean(b), "band {b}");
    }
    assert!(grid.band_contrast(2, 2) > 0.0);
}

#[test]
fn contrast_falls_with_delta() {
    let a = example_addressing();
    let contrasts: Vec<f64> = [3.0, 1.0, 0.3]
        .iter()
        .map(|&d| {
            let mut rng = RandomStream::new(43);
            render_grid(&example_staircase(d), &a, Some(&mut rng))
                .unwrap()
                .band_contrast(2, 2)
        })
        .collect();
    assert!(contrasts.windows(2).all(|w| w[0] > w[1]), "{contrasts:?}");
}
