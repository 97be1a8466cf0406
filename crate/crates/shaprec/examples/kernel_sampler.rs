//! The coalition sampler behind the amortized estimator.
//!
//! Subsets are drawn with probability proportional to
//! `(n−1) / (C(n,|S|)·|S|·(n−|S|))` — small and large coalitions are far
//! more likely than mid-sized ones. Compares empirical frequencies against
//! the analytic distribution.
//!
//! Run: `cargo run --release -p shaprec --example kernel_sampler`

use shaprec::numerics::{chi_square_p_value, Rng};
use shaprec::shapley::{per_subset_probability, sample_subset};

fn mask_index(mask: &[bool]) -> usize {
    mask.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1 << i).sum()
}

fn main() {
    // n = 4: exact per-subset probabilities are 1/11 (sizes 1 and 3)
    // and 1/22 (size 2).
    println!("analytic per-subset probabilities at n=4:");
    for size in 1..4 {
        println!("  size {size}: {:.6}  ({} subsets)", per_subset_probability(4, size), match size {
            2 => 6,
            _ => 4,
        });
    }

    let mut rng = Rng::new(7);
    let draws = 200_000;
    let mut counts = vec![0usize; 16];
    for _ in 0..draws {
        let s = sample_subset(4, &mut rng).unwrap();
        counts[mask_index(&s.mask)] += 1;
    }
    println!("\nempirical frequencies over {draws} draws:");
    for mask in 1..15usize {
        let size = mask.count_ones() as usize;
        let expected = per_subset_probability(4, size);
        println!(
            "  mask {mask:04b}: {:.6} (expected {:.6})",
            counts[mask] as f64 / draws as f64,
            expected
        );
    }

    // chi-square goodness of fit at n = 6 over all 62 admissible subsets
    let n = 6;
    let draws = 100_000;
    let mut counts = vec![0usize; 1 << n];
    let mut rng = Rng::new(99);
    for _ in 0..draws {
        let s = sample_subset(n, &mut rng).unwrap();
        counts[mask_index(&s.mask)] += 1;
    }
    let mut stat = 0.0;
    let mut categories = 0;
    for mask in 1..(1usize << n) - 1 {
        let size = mask.count_ones() as usize;
        let expected = per_subset_probability(n, size) * draws as f64;
        let diff = counts[mask] as f64 - expected;
        stat += diff * diff / expected;
        categories += 1;
    }
    let p = chi_square_p_value(stat, categories - 1);
    println!("\nn=6 goodness of fit: χ² = {stat:.2} over {categories} subsets, p = {p:.4}");
}
