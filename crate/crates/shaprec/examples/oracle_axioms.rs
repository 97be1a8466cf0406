//! Exact Shapley oracle on small cooperative games.
//!
//! Enumerates all coalitions of a few hand-built and random games and
//! checks the four defining axioms: efficiency, symmetry, null player,
//! and linearity.
//!
//! Run: `cargo run --release -p shaprec --example oracle_axioms`

use shaprec::numerics::Rng;
use shaprec::shapley::{exact_shapley, TableGame};

fn main() {
    // Worked two-player example: v(∅)=0, v({1})=1, v({2})=2, v({1,2})=4.
    let game = TableGame::new(2, vec![0.0, 1.0, 2.0, 4.0]);
    let phi = exact_shapley(&game).unwrap();
    println!("two-player game: φ = ({}, {})   [expected (1.5, 2.5)]", phi[0], phi[1]);

    // Additivity: an additive game returns exactly its weights.
    let weights = [0.1, 0.2, 0.3];
    let additive = TableGame::from_fn(3, |mask| {
        (0..3).filter(|i| mask & (1 << i) != 0).map(|i| weights[i]).sum()
    });
    println!("additive game:  φ = {:?}   [expected {weights:?}]", exact_shapley(&additive).unwrap());

    // Axioms on random games.
    let mut rng = Rng::new(2024);
    let mut worst_efficiency: f64 = 0.0;
    let mut worst_symmetry: f64 = 0.0;
    let mut worst_linearity: f64 = 0.0;
    for trial in 0..200 {
        let n = 2 + trial % 7;
        let values: Vec<f64> = (0..1usize << n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let gap = values[values.len() - 1] - values[0];
        let game_a = TableGame::new(n, values.clone());
        let phi_a = exact_shapley(&game_a).unwrap();
        worst_efficiency = worst_efficiency.max((phi_a.iter().sum::<f64>() - gap).abs());

        // symmetry: make players 0 and 1 interchangeable by symmetrizing
        let sym = TableGame::from_fn(n, |mask| {
            let swapped = (mask & !0b11) | ((mask & 0b01) << 1) | ((mask & 0b10) >> 1);
            0.5 * (values[mask] + values[swapped])
        });
        let phi_s = exact_shapley(&sym).unwrap();
        worst_symmetry = worst_symmetry.max((phi_s[0] - phi_s[1]).abs());

        // linearity: φ(a + b) = φ(a) + φ(b)
        let values_b: Vec<f64> = (0..1usize << n).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let game_b = TableGame::new(n, values_b.clone());
        let phi_b = exact_shapley(&game_b).unwrap();
        let sum_game = TableGame::from_fn(n, |mask| values[mask] + values_b[mask]);
        let phi_sum = exact_shapley(&sum_game).unwrap();
        for i in 0..n {
            worst_linearity = worst_linearity.max((phi_sum[i] - phi_a[i] - phi_b[i]).abs());
        }
    }
    println!("\n200 random games, n in 2..=8:");
    println!("  efficiency  |Σφ − (v(full) − v(empty))| ≤ {worst_efficiency:.2e}");
    println!("  symmetry    |φ_i − φ_j| for interchangeable i,j ≤ {worst_symmetry:.2e}");
    println!("  linearity   |φ(a+b) − φ(a) − φ(b)| ≤ {worst_linearity:.2e}");
}
