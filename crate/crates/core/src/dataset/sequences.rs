use std::collections::HashMap;

use super::{DatasetStats, IdMap, InteractionLog};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FilterOutcome {
    pub log: InteractionLog,
    /// Number of filtering passes run until the fixed point.
    pub iterations: usize,
}

/// Repeatedly drops users and items with fewer than `min_count` actions until
/// no violator remains.
pub fn core_filter(log: InteractionLog, min_count: usize) -> Result<FilterOutcome> {
    if min_count == 0 {
        return Err(Error::InvalidArgument("min_count must be at least 1".into()));
    }
    let skipped = log.skipped;
    let mut current = log.interactions;
    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut user_counts: HashMap<&str, usize> = HashMap::new();
        let mut item_counts: HashMap<&str, usize> = HashMap::new();
        for it in &current {
            *user_counts.entry(&it.user).or_default() += 1;
            *item_counts.entry(&it.item).or_default() += 1;
        }
        let keep: Vec<bool> = current
            .iter()
            .map(|it| user_counts[it.user.as_str()] >= min_count && item_counts[it.item.as_str()] >= min_count)
            .collect();
        if keep.iter().all(|&k| k) {
            break;
        }
        let mut flags = keep.into_iter();
        current.retain(|_| flags.next().unwrap_or(false));
    }
    if current.is_empty() {
        return Err(Error::Annihilated { min_count });
    }
    Ok(FilterOutcome {
        log: InteractionLog {
            interactions: current,
            skipped,
        },
        iterations,
    })
}

/// Per-user, time-ordered item sequences over dense indices.
///
/// Once split, the last item of every sequence is the test item, the one
/// before it the validation item, and the rest the training prefix.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceDataset {
    users: IdMap,
    items: IdMap,
    sequences: Vec<Vec<usize>>,
    user_items: Vec<Vec<usize>>,
    split: bool,
}

impl SequenceDataset {
    /// Assembles a dataset from dense sequences. Used for synthetic data and by
    /// the on-disk format.
    pub fn from_parts(users: IdMap, items: IdMap, sequences: Vec<Vec<usize>>) -> Result<Self> {
        if users.len() != sequences.len() {
            return Err(Error::DimensionMismatch {
                expected: users.len(),
                actual: sequences.len(),
            });
        }
        if let Some(&bad) = sequences.iter().flatten().find(|&&i| i >= items.len()) {
            return Err(Error::InvalidArgument(format!(
                "item index {bad} out of range for {} items",
                items.len()
            )));
        }
        let user_items = sequences
            .iter()
            .map(|s| {
                let mut set = s.clone();
                set.sort_unstable();
                set.dedup();
                set
            })
            .collect();
        Ok(Self {
            users,
            items,
            sequences,
            user_items,
            split: false,
        })
    }

    /// Unsplit dataset over synthetic ids `u0..`, `i0..`.
    pub fn from_sequences(num_items: usize, sequences: Vec<Vec<usize>>) -> Result<Self> {
        Self::from_parts(
            IdMap::synthetic("u", sequences.len()),
            IdMap::synthetic("i", num_items),
            sequences,
        )
    }

    pub fn users(&self) -> &IdMap {
        &self.users
    }

    pub fn items(&self) -> &IdMap {
        &self.items
    }

    pub fn num_users(&self) -> usize {
        self.sequences.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_actions(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    pub fn is_split(&self) -> bool {
        self.split
    }

    /// Full sequence S^u, including held-out items.
    pub fn sequence(&self, user: usize) -> &[usize] {
        &self.sequences[user]
    }

    pub fn sequences(&self) -> &[Vec<usize>] {
        &self.sequences
    }

    /// Training part of S^u (the whole sequence when unsplit).
    pub fn training(&self, user: usize) -> &[usize] {
        let s = &self.sequences[user];
        if self.split {
            &s[..s.len() - 2]
        } else {
            s
        }
    }

    pub fn validation(&self, user: usize) -> Option<usize> {
        let s = &self.sequences[user];
        self.split.then(|| s[s.len() - 2])
    }

    pub fn test(&self, user: usize) -> Option<usize> {
        let s = &self.sequences[user];
        self.split.then(|| s[s.len() - 1])
    }

    /// Sorted distinct items of S^u.
    pub fn user_items(&self, user: usize) -> &[usize] {
        &self.user_items[user]
    }

    pub fn has_interacted(&self, user: usize, item: usize) -> bool {
        self.user_items[user].binary_search(&item).is_ok()
    }

    /// Number of (previous, next) pairs inside training prefixes.
    pub fn num_training_transitions(&self) -> usize {
        (0..self.num_users())
            .map(|u| self.training(u).len().saturating_sub(1))
            .sum()
    }

    /// How often each item occurs in training prefixes.
    pub fn training_item_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_items()];
        for u in 0..self.num_users() {
            for &i in self.training(u) {
                counts[i] += 1;
            }
        }
        counts
    }

    pub fn stats(&self) -> DatasetStats {
        let actions = self.num_actions();
        DatasetStats {
            users: self.num_users(),
            items: self.num_items(),
            actions,
            avg_actions_per_user: ratio(actions, self.num_users()),
            avg_actions_per_item: ratio(actions, self.num_items()),
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Groups the log by user and orders each sequence by timestamp. Ties keep
/// input order. Dense indices follow first appearance in the log.
pub fn build_sequences(log: &InteractionLog) -> Result<SequenceDataset> {
    if log.is_empty() {
        return Err(Error::Empty("interaction log".into()));
    }
    let mut users = IdMap::new();
    let mut items = IdMap::new();
    let mut events: Vec<Vec<(i64, usize)>> = Vec::new();
    for it in &log.interactions {
        let u = users.intern(&it.user);
        let i = items.intern(&it.item);
        if u == events.len() {
            events.push(Vec::new());
        }
        events[u].push((it.timestamp, i));
    }
    let sequences = events
        .into_iter()
        .map(|mut ev| {
            // stable: equal timestamps keep file order
            ev.sort_by_key(|&(t, _)| t);
            ev.into_iter().map(|(_, i)| i).collect()
        })
        .collect();
    SequenceDataset::from_parts(users, items, sequences)
}

#[derive(Debug, Clone)]
pub struct SplitOutcome {
    pub dataset: SequenceDataset,
    /// Users removed for having fewer than three actions.
    pub dropped_users: usize,
}

/// Marks the last action of every user as test and the second to last as
/// validation. Users with fewer than three actions are dropped (users are
/// re-indexed, items keep their indices).
pub fn split_leave_one_out(ds: SequenceDataset) -> SplitOutcome {
    if ds.split {
        return SplitOutcome {
            dataset: ds,
            dropped_users: 0,
        };
    }
    let mut kept_ids = Vec::new();
    let mut kept = Vec::new();
    let mut dropped = 0;
    for (u, seq) in ds.sequences.into_iter().enumerate() {
        if seq.len() >= 3 {
            kept_ids.push(ds.users.id(u).to_owned());
            kept.push(seq);
        } else {
            dropped += 1;
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} users with fewer than 3 actions");
    }
    let users = IdMap::from_ids(kept_ids).expect("ids were unique");
    let mut dataset = SequenceDataset::from_parts(users, ds.items, kept).expect("indices were validated");
    dataset.split = true;
    SplitOutcome {
        dataset,
        dropped_users: dropped,
    }
}
