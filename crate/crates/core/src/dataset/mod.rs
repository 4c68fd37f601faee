//! Interaction logs, k-core filtering, per-user sequences and the
//! leave-one-out split.

mod load;
mod sequences;
mod store;

pub use load::{load_interactions, read_interactions, Column, LoadOptions, MalformedPolicy};
pub use sequences::{build_sequences, core_filter, split_leave_one_out, FilterOutcome, SequenceDataset, SplitOutcome};
pub use store::{read_dataset, write_dataset};

use std::collections::HashMap;

/// One implicit-feedback action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub timestamp: i64,
}

impl Interaction {
    pub fn new(user: impl Into<String>, item: impl Into<String>, timestamp: i64) -> Self {
        Self {
            user: user.into(),
            item: item.into(),
            timestamp,
        }
    }
}

/// Raw interactions in input order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct InteractionLog {
    pub interactions: Vec<Interaction>,
    /// Lines rejected while loading (skip mode only).
    pub skipped: usize,
}

impl InteractionLog {
    pub fn new(interactions: Vec<Interaction>) -> Self {
        Self {
            interactions,
            skipped: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.interactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.interactions.is_empty()
    }
}

/// Bijection between raw string identifiers and dense indices.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct IdMap {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids(ids: Vec<String>) -> crate::Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(crate::Error::InvalidArgument(format!("duplicate id `{id}`")));
            }
        }
        Ok(Self { ids, index })
    }

    /// Synthetic ids `{prefix}0 .. {prefix}{n-1}`.
    pub fn synthetic(prefix: &str, n: usize) -> Self {
        let ids: Vec<String> = (0..n).map(|i| format!("{prefix}{i}")).collect();
        Self::from_ids(ids).expect("synthetic ids are unique")
    }

    /// Returns the dense index for `id`, assigning the next one if unseen.
    pub fn intern(&mut self, id: &str) -> usize {
        if let Some(&i) = self.index.get(id) {
            return i;
        }
        let i = self.ids.len();
        self.ids.push(id.to_owned());
        self.index.insert(id.to_owned(), i);
        i
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, index: usize) -> &str {
        &self.ids[index]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

/// Summary counts of a dataset, in the layout of the usual statistics table.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetStats {
    pub users: usize,
    pub items: usize,
    pub actions: usize,
    pub avg_actions_per_user: f64,
    pub avg_actions_per_item: f64,
}

impl DatasetStats {
    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        format!(
            "users={}\nitems={}\nactions={}\navg_actions_per_user={:.4}\navg_actions_per_item={:.4}\n",
            self.users, self.items, self.actions, self.avg_actions_per_user, self.avg_actions_per_item
        )
    }
}
