//! Planted-community interaction data for tests and demos.
//!
//! Users and items are each assigned to one of `communities` groups
//! round-robin. Every user interacts with `items_per_user` distinct items,
//! each drawn from the user's own group with probability `affinity` and
//! uniformly from all items otherwise.

use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::data::{split, ImplicitPair, InteractionMatrix, RawRating, SplitRatios};
use crate::error::{Error, Result};
use crate::rng::{SeededRng, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommunityConfig {
    pub users: usize,
    pub items: usize,
    pub communities: usize,
    pub items_per_user: usize,
    pub affinity: f64,
    pub ratios: SplitRatios,
}

impl Default for CommunityConfig {
    fn default() -> Self {
        Self {
            users: 300,
            items: 200,
            communities: 4,
            items_per_user: 30,
            affinity: 1.0,
            ratios: SplitRatios::default(),
        }
    }
}

impl CommunityConfig {
    fn validate(&self) -> Result<()> {
        if self.users == 0 || self.items == 0 || self.communities == 0 {
            return Err(Error::invalid("users, items and communities must be positive"));
        }
        let smallest_group = self.items / self.communities;
        if self.items_per_user > smallest_group {
            return Err(Error::invalid(format!(
                "{} items per user exceeds the smallest community of {smallest_group} items",
                self.items_per_user
            )));
        }
        if !(0.0..=1.0).contains(&self.affinity) {
            return Err(Error::invalid(format!("affinity must be in [0, 1], got {}", self.affinity)));
        }
        Ok(())
    }
}

pub fn community_of(index: usize, communities: usize) -> usize {
    index % communities
}

/// `(user, item)` index pairs, user-major, each user's items in draw order.
fn draw(config: &CommunityConfig, seed: u64) -> Result<Vec<(usize, usize)>> {
    config.validate()?;
    let mut rng = SeededRng::new(seed, Stream::Synthetic);
    let c = config.communities;
    let groups: Vec<Vec<usize>> = (0..c)
        .map(|g| (0..config.items).filter(|&i| community_of(i, c) == g).collect())
        .collect();
    let mut out = Vec::with_capacity(config.users * config.items_per_user);
    let mut chosen = alloc::vec![false; config.items];
    for u in 0..config.users {
        let own = &groups[community_of(u, c)];
        let mut picked = Vec::with_capacity(config.items_per_user);
        while picked.len() < config.items_per_user {
            let i = if rng.uniform() < config.affinity {
                own[rng.below(own.len())]
            } else {
                rng.below(config.items)
            };
            if !chosen[i] {
                chosen[i] = true;
                picked.push(i);
            }
        }
        for &i in &picked {
            chosen[i] = false;
            out.push((u, i));
        }
    }
    Ok(out)
}

/// Positive pairs with ids `u{n}` and `i{n}`.
pub fn community_pairs(config: &CommunityConfig, seed: u64) -> Result<Vec<ImplicitPair>> {
    Ok(draw(config, seed)?
        .into_iter()
        .map(|(u, i)| ImplicitPair {
            user: format!("u{u}"),
            item: format!("i{i}"),
        })
        .collect())
}

/// Explicit ratings whose positives (value ≥ 4) are the community pairs,
/// interleaved with low ratings on further items that binarization drops.
pub fn community_ratings(config: &CommunityConfig, seed: u64) -> Result<Vec<RawRating>> {
    let pairs = draw(config, seed)?;
    let mut rng = SeededRng::new(seed ^ 0x5eed, Stream::Synthetic);
    let mut out = Vec::with_capacity(pairs.len() * 2);
    for (u, i) in pairs {
        out.push(RawRating {
            user: format!("u{u}"),
            item: format!("i{i}"),
            value: if rng.uniform() < 0.5 { 4.0 } else { 5.0 },
        });
        if rng.uniform() < 0.3 {
            // A low rating, on the user's positive item or a random one; it
            // never becomes a positive and never displaces one.
            let j = rng.below(config.items);
            out.push(RawRating {
                user: format!("u{u}"),
                item: format!("i{j}"),
                value: (1 + rng.below(3)) as f64,
            });
        }
    }
    Ok(out)
}

/// Community pairs split with the `Split` stream of `seed`.
pub fn community_dataset(config: &CommunityConfig, seed: u64) -> Result<InteractionMatrix> {
    let pairs = community_pairs(config, seed)?;
    split(&pairs, config.ratios, &mut SeededRng::new(seed, Stream::Split))
}
