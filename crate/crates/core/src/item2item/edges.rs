use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::dataset::IdMap;
use crate::error::{Error, Result};
use crate::model::Triple;
use crate::rng::{substream, StreamRng};
use crate::training::TripleSampler;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EdgeSplit {
    Train,
    Validation,
    Test,
}

/// Directed item-to-item edges partitioned 80/10/10 into train, validation
/// and test.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeDataset {
    num_items: usize,
    edges: Vec<(usize, usize)>,
    assignment: Vec<EdgeSplit>,
    /// Sorted destinations of every source, across all splits.
    out_links: Vec<Vec<usize>>,
}

impl EdgeDataset {
    /// Shuffles the (deduplicated) edges with `seed` and cuts them at 80% and
    /// 90%.
    pub fn split(num_items: usize, edges: Vec<(usize, usize)>, seed: u64) -> Result<Self> {
        let mut edges = edges;
        if let Some(&(a, b)) = edges.iter().find(|&&(a, b)| a >= num_items || b >= num_items) {
            return Err(Error::InvalidArgument(format!("edge ({a}, {b}) out of range")));
        }
        edges.sort_unstable();
        edges.dedup();
        if edges.is_empty() {
            return Err(Error::Empty("edge list".into()));
        }
        edges.shuffle(&mut substream(seed, "split"));
        let n = edges.len();
        let (train_end, val_end) = (n * 8 / 10, n * 9 / 10);
        let assignment = (0..n)
            .map(|k| {
                if k < train_end {
                    EdgeSplit::Train
                } else if k < val_end {
                    EdgeSplit::Validation
                } else {
                    EdgeSplit::Test
                }
            })
            .collect();
        let mut out_links = vec![Vec::new(); num_items];
        for &(a, b) in &edges {
            out_links[a].push(b);
        }
        for l in &mut out_links {
            l.sort_unstable();
        }
        Ok(Self {
            num_items,
            edges,
            assignment,
            out_links,
        })
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self, split: EdgeSplit) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges
            .iter()
            .zip(&self.assignment)
            .filter(move |(_, s)| **s == split)
            .map(|(&e, _)| e)
    }

    pub fn all_edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn assignment(&self) -> &[EdgeSplit] {
        &self.assignment
    }

    /// Whether `src -> dst` exists in any split.
    pub fn is_linked(&self, src: usize, dst: usize) -> bool {
        self.out_links[src].binary_search(&dst).is_ok()
    }

    /// A valid negative destination for `src`: not `src` itself and not
    /// linked from it.
    pub fn is_negative(&self, src: usize, dst: usize) -> bool {
        dst != src && !self.is_linked(src, dst)
    }
}

/// Reads `src<delim>dst` lines, interning ids into `items`.
pub fn read_edges(path: impl AsRef<Path>, delimiter: char, items: &mut IdMap) -> Result<Vec<(usize, usize)>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut edges = Vec::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut f = line.split(delimiter).map(str::trim);
        match (f.next(), f.next()) {
            (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => {
                edges.push((items.intern(a), items.intern(b)));
            }
            _ => {
                return Err(Error::Malformed {
                    line: n as u64 + 1,
                    reason: "expected `src<delim>dst`".into(),
                })
            }
        }
    }
    Ok(edges)
}

/// Samples a training edge `i -> j` uniformly and a negative `j''` uniformly
/// among items not linked from `i`. The user slot of the triple is unused.
#[derive(Debug)]
pub struct EdgeSampler<'a> {
    edges: &'a EdgeDataset,
    train: Vec<(usize, usize)>,
}

impl<'a> EdgeSampler<'a> {
    pub fn new(edges: &'a EdgeDataset) -> Result<Self> {
        let train: Vec<_> = edges.edges(EdgeSplit::Train).collect();
        if train.is_empty() {
            return Err(Error::Empty("no training edges".into()));
        }
        if let Some(&(src, _)) = train
            .iter()
            .find(|&&(src, _)| edges.out_links[src].len() + 1 >= edges.num_items)
        {
            return Err(Error::NoNegative { user: src });
        }
        Ok(Self { edges, train })
    }
}

impl TripleSampler for EdgeSampler<'_> {
    fn sample(&self, rng: &mut StreamRng) -> Triple {
        let (src, dst) = self.train[rng.random_range(0..self.train.len())];
        let neg = loop {
            let j = rng.random_range(0..self.edges.num_items);
            if self.edges.is_negative(src, j) {
                break j;
            }
        };
        Triple {
            user: 0,
            prev: src,
            pos: dst,
            neg,
        }
    }

    fn epoch_size(&self) -> usize {
        self.train.len()
    }
}
