//! Block mini-batches and negative sampling.
//!
//! Each epoch, users and items are shuffled independently and cut into
//! chunks; every (user chunk, item chunk) pair is one block, visited in
//! shuffled order. A block's user VAE input is the full training row of each
//! block user and its item VAE input the full training column of each block
//! item; only the block's own cells enter the reconstruction loss.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::data::{InteractionMatrix, Split};
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub users: Vec<usize>,
    pub items: Vec<usize>,
}

pub fn make_blocks(
    n_users: usize,
    n_items: usize,
    block_users: usize,
    block_items: usize,
    rng: &mut SeededRng,
) -> Result<Vec<Block>> {
    if block_users == 0 || block_items == 0 {
        return Err(Error::invalid("block sizes must be at least 1"));
    }
    let mut users: Vec<usize> = (0..n_users).collect();
    let mut items: Vec<usize> = (0..n_items).collect();
    rng.shuffle(&mut users);
    rng.shuffle(&mut items);
    let mut blocks: Vec<Block> = users
        .chunks(block_users)
        .flat_map(|uc| {
            items.chunks(block_items).map(move |ic| Block {
                users: uc.to_vec(),
                items: ic.to_vec(),
            })
        })
        .collect();
    rng.shuffle(&mut blocks);
    Ok(blocks)
}

/// The `k`-th (0-based) item missing from the sorted list `positives`.
fn kth_unobserved(positives: &[u32], k: usize) -> usize {
    // positives[t] - t counts the gaps before positives[t]; it never decreases.
    let (mut lo, mut hi) = (0, positives.len());
    while lo < hi {
        let mid = (lo + hi) / 2;
        if positives[mid] as usize - mid <= k {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    k + lo
}

/// `count` uniform draws (with replacement) from the items user `u` has no
/// training interaction with. Empty when the user has seen every item.
pub fn sample_negatives(matrix: &InteractionMatrix, u: usize, count: usize, rng: &mut SeededRng) -> Vec<usize> {
    let positives = matrix.positives(u, Split::Train);
    let unobserved = matrix.n_items() - positives.len();
    if unobserved == 0 {
        return Vec::new();
    }
    (0..count)
        .map(|_| kth_unobserved(positives, rng.below(unobserved)))
        .collect()
}

/// One sampled negative per training positive, for a whole epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochNegatives {
    /// Aligned with `matrix.positives(u, Train)`; empty for saturated users.
    per_user: Vec<Vec<u32>>,
}

impl EpochNegatives {
    pub fn sample(matrix: &InteractionMatrix, rng: &mut SeededRng) -> Self {
        let per_user = (0..matrix.n_users())
            .map(|u| {
                let count = matrix.positives(u, Split::Train).len();
                sample_negatives(matrix, u, count, rng)
                    .into_iter()
                    .map(|j| j as u32)
                    .collect()
            })
            .collect();
        Self { per_user }
    }

    pub fn for_user(&self, u: usize) -> &[u32] {
        &self.per_user[u]
    }
}

/// One (user, positive, negative) triple with its rows in the batch slabs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HingePair {
    pub user: usize,
    pub positive: usize,
    pub negative: usize,
    pub user_row: usize,
    pub positive_row: usize,
    pub negative_row: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockBatch {
    pub users: Vec<usize>,
    pub items: Vec<usize>,
    /// Negative items outside `items`; their columns follow the block items
    /// in `item_slab` and only feed the hinge term.
    pub extra_items: Vec<usize>,
    /// Training rows of `users`, |users| × n_items.
    pub user_slab: DenseMatrix,
    /// Training columns of `items` then `extra_items`, × n_users.
    pub item_slab: DenseMatrix,
    pub pairs: Vec<HingePair>,
}

impl BlockBatch {
    /// Builds the slabs for `block`. With `negatives`, also collects a hinge
    /// pair for every training positive of a block user that falls inside
    /// the block's items.
    pub fn assemble(matrix: &InteractionMatrix, block: &Block, negatives: Option<&EpochNegatives>) -> Self {
        let item_row: BTreeMap<usize, usize> = block.items.iter().enumerate().map(|(r, &i)| (i, r)).collect();
        let mut extra_row: BTreeMap<usize, usize> = BTreeMap::new();
        let mut extra_items = Vec::new();
        let mut pairs = Vec::new();
        if let Some(neg) = negatives {
            for (user_row, &u) in block.users.iter().enumerate() {
                let sampled = neg.for_user(u);
                if sampled.is_empty() {
                    continue;
                }
                for (&i, &j) in matrix.positives(u, Split::Train).iter().zip(sampled) {
                    let Some(&positive_row) = item_row.get(&(i as usize)) else {
                        continue;
                    };
                    let j = j as usize;
                    let negative_row = match item_row.get(&j) {
                        Some(&r) => r,
                        None => *extra_row.entry(j).or_insert_with(|| {
                            extra_items.push(j);
                            block.items.len() + extra_items.len() - 1
                        }),
                    };
                    pairs.push(HingePair {
                        user: u,
                        positive: i as usize,
                        negative: j,
                        user_row,
                        positive_row,
                        negative_row,
                    });
                }
            }
        }
        let all_items: Vec<usize> = block.items.iter().chain(&extra_items).copied().collect();
        Self {
            users: block.users.clone(),
            items: block.items.clone(),
            user_slab: matrix.train_rows(&block.users),
            item_slab: matrix.train_columns(&all_items),
            extra_items,
            pairs,
        }
    }
}
