//! Synthetic corpora for benchmarks, examples, and tests.
//!
//! `block_events` plants a recoverable taste structure: users and items are
//! partitioned into blocks and users interact almost entirely within their
//! own block. A model that learns the blocks ranks held-out in-block items
//! highly, which is what makes injected cross-block noise both harmful and
//! detectable. `powerlaw_events` mimics the popularity skew of real
//! interaction logs for pipeline-scale smoke runs.

use super::{filter_corpus, InteractionCorpus, RawEvent};
use crate::numerics::Rng;

/// Events for a planted block-structure corpus.
///
/// Items are split into `n_blocks` contiguous ranges; user `u` belongs to
/// block `u % n_blocks`. Each user gets `degree` distinct items, each drawn
/// from the user's own block with probability `1 − cross_prob`.
pub fn block_events(
    n_users: usize,
    n_items: usize,
    n_blocks: usize,
    degree: usize,
    cross_prob: f64,
    seed: u64,
) -> Vec<RawEvent> {
    assert!(n_blocks >= 1 && n_items >= n_blocks);
    assert!(degree < n_items, "degree must leave room for non-interacted items");
    assert!(
        cross_prob > 0.0 || degree <= n_items / n_blocks,
        "without cross draws a user cannot exceed their block size"
    );
    let mut rng = Rng::new(seed).derive(0x424c4f434b);
    let block_size = n_items / n_blocks;
    let mut events = Vec::with_capacity(n_users * degree);
    for u in 0..n_users {
        let block = u % n_blocks;
        let lo = block * block_size;
        let hi = if block == n_blocks - 1 { n_items } else { lo + block_size };
        let mut picked = std::collections::BTreeSet::new();
        while picked.len() < degree {
            let v = if rng.bernoulli(cross_prob) {
                rng.below(n_items)
            } else {
                lo + rng.below(hi - lo)
            };
            picked.insert(v);
        }
        for v in picked {
            events.push(RawEvent {
                user_key: format!("u{u}"),
                item_key: format!("i{v}"),
                rating: 1.0,
                timestamp: None,
            });
        }
    }
    events
}

/// [`block_events`] filtered into a corpus with thresholds (1, 1).
pub fn block_events_corpus(
    n_users: usize,
    n_items: usize,
    n_blocks: usize,
    degree: usize,
    cross_prob: f64,
    seed: u64,
) -> InteractionCorpus {
    filter_corpus(&block_events(n_users, n_items, n_blocks, degree, cross_prob, seed), 1, 1)
        .expect("synthetic block corpus is nonempty")
}

/// Events with a power-law item popularity profile, for smoke-scale runs.
///
/// Item `v` is drawn with weight `(v + 2)^-0.8`; per-user degrees are
/// uniform in `[mean_degree/2, 3·mean_degree/2]`.
pub fn powerlaw_events(n_users: usize, n_items: usize, mean_degree: usize, seed: u64) -> Vec<RawEvent> {
    assert!(mean_degree >= 2 && n_items > 2 * mean_degree);
    let mut rng = Rng::new(seed).derive(0x504f5745524c4157);
    let mut cumulative = Vec::with_capacity(n_items);
    let mut acc = 0.0;
    for v in 0..n_items {
        acc += ((v + 2) as f64).powf(-0.8);
        cumulative.push(acc);
    }
    let total = acc;
    let mut events = Vec::new();
    for u in 0..n_users {
        let lo = mean_degree / 2;
        let degree = lo + rng.below(mean_degree + 1);
        let mut picked = std::collections::BTreeSet::new();
        while picked.len() < degree {
            let x = rng.next_f64() * total;
            let v = cumulative.partition_point(|&c| c < x).min(n_items - 1);
            picked.insert(v);
        }
        for v in picked {
            events.push(RawEvent {
                user_key: format!("u{u}"),
                item_key: format!("i{v}"),
                rating: 1.0,
                timestamp: Some((u * 7) as i64),
            });
        }
    }
    events
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn block_corpus_has_expected_shape() {
        let c = block_events_corpus(40, 20, 2, 6, 0.1, 1);
        assert_eq!(c.n_users(), 40);
        assert!(c.n_items() <= 20);
        for u in 0..c.n_users() {
            assert_eq!(c.degree(u), 6);
        }
    }

    #[test]
    fn block_structure_dominates() {
        let events = block_events(100, 40, 2, 8, 0.1, 2);
        let mut in_block = 0usize;
        for e in &events {
            let u: usize = e.user_key[1..].parse().unwrap();
            let v: usize = e.item_key[1..].parse().unwrap();
            if (v < 20) == (u % 2 == 0) {
                in_block += 1;
            }
        }
        let frac = in_block as f64 / events.len() as f64;
        assert!(frac > 0.8, "in-block fraction {frac}");
    }

    #[test]
    fn powerlaw_is_skewed() {
        let events = powerlaw_events(300, 200, 10, 3);
        let c = filter_corpus(&events, 1, 1).unwrap();
        let mut degs = c.item_degrees();
        degs.sort_unstable_by(|a, b| b.cmp(a));
        let top_decile: usize = degs[..c.n_items() / 10].iter().sum();
        let total: usize = degs.iter().sum();
        assert!(top_decile as f64 > 0.25 * total as f64);
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(block_events(10, 10, 2, 3, 0.2, 5), block_events(10, 10, 2, 3, 0.2, 5));
        assert_eq!(powerlaw_events(10, 50, 5, 5), powerlaw_events(10, 50, 5, 5));
    }
}
