//! Independent oracles shared by the integration and acceptance tests.
#![allow(dead_code)]

use std::sync::Arc;

use rand::Rng;
use transrec::baselines::{BprMf, Fmc, Fpmc, Hrm, Pooling, Prme};
use transrec::dataset::{split_leave_one_out, IdMap, SequenceDataset};
use transrec::eval::Split;
use transrec::item2item::{ContentTransRec, FeatureMatrix, Lmt, Wnn};
use transrec::linalg::Matrix;
use transrec::model::{TransRec, Triple};
use transrec::rng::{fill_uniform, fill_unit_vector, substream, StreamRng};
use transrec::{DistanceKind, RankingModel, Trainable};

pub const FD_STEP: f64 = 1e-5;
pub const GRADIENT_TOLERANCE: f64 = 1e-4;
/// Coordinates closer than this to an L1 or max-pooling kink are resampled.
pub const KINK_MARGIN: f64 = 1e-4;

pub fn delta<M: RankingModel<f64>>(m: &M, t: &Triple) -> f64 {
    m.score(t.user, t.prev, t.pos) - m.score(t.user, t.prev, t.neg)
}

/// Analytic gradient of the score difference, densified block by block.
pub fn analytic_gradient<M: Trainable<f64>>(m: &M, t: &Triple) -> Vec<Matrix<f64>> {
    let mut out: Vec<Matrix<f64>> = (0..m.num_blocks())
        .map(|b| Matrix::zeros(m.block(b).rows(), m.block(b).cols()))
        .collect();
    for g in m.delta_gradient(t) {
        for (o, v) in out[g.block].row_mut(g.row).iter_mut().zip(&g.values) {
            *o += v;
        }
    }
    out
}

/// Central finite differences of the score difference over every parameter.
pub fn numeric_gradient<M: Trainable<f64>>(m: &M, t: &Triple, h: f64) -> Vec<Matrix<f64>> {
    let mut work = m.clone();
    let mut out = Vec::new();
    for b in 0..m.num_blocks() {
        let (rows, cols) = (m.block(b).rows(), m.block(b).cols());
        let mut g = Matrix::zeros(rows, cols);
        for k in 0..rows * cols {
            let orig = work.block(b).as_slice()[k];
            work.block_mut(b).as_mut_slice()[k] = orig + h;
            let up = delta(&work, t);
            work.block_mut(b).as_mut_slice()[k] = orig - h;
            let down = delta(&work, t);
            work.block_mut(b).as_mut_slice()[k] = orig;
            g.as_mut_slice()[k] = (up - down) / (2.0 * h);
        }
        out.push(g);
    }
    out
}

/// Components smaller than this are compared absolutely: where the true
/// gradient is exactly zero the central difference still carries ~1e-10 of
/// round-off.
pub const GRADIENT_FLOOR: f64 = 1e-4;

pub fn relative_error(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(GRADIENT_FLOOR)
}

/// Largest relative error between analytic and numeric gradients.
pub fn max_gradient_error<M: Trainable<f64>>(m: &M, t: &Triple) -> f64 {
    let a = analytic_gradient(m, t);
    let n = numeric_gradient(m, t, FD_STEP);
    a.iter()
        .zip(&n)
        .flat_map(|(x, y)| x.as_slice().iter().zip(y.as_slice()))
        .map(|(&x, &y)| relative_error(x, y))
        .fold(0.0, f64::max)
}

fn randomize<M: Trainable<f64>>(m: &mut M, rng: &mut StreamRng) {
    for b in 0..m.num_blocks() {
        fill_uniform(rng, m.block_mut(b).as_mut_slice(), -1.0, 1.0);
    }
}

fn triple(rng: &mut StreamRng, nu: usize, ni: usize) -> Triple {
    let pos = rng.random_range(0..ni);
    let neg = loop {
        let j = rng.random_range(0..ni);
        if j != pos {
            break j;
        }
    };
    Triple {
        user: rng.random_range(0..nu),
        prev: rng.random_range(0..ni),
        pos,
        neg,
    }
}

fn near_kink(x: &[f64], y: &[f64]) -> bool {
    x.iter().zip(y).any(|(a, b)| (a - b).abs() < KINK_MARGIN)
}

pub fn random_features(rng: &mut StreamRng, items: usize, dim: usize, density: f64) -> Arc<FeatureMatrix<f64>> {
    let rows = (0..items)
        .map(|_| {
            let mut row = Vec::new();
            for c in 0..dim {
                if rng.random_bool(density) {
                    row.push((c, rng.random_range(0.5..2.0)));
                }
            }
            row
        })
        .collect();
    Arc::new(FeatureMatrix::new(IdMap::synthetic("i", items), dim, rows).unwrap())
}

/// Random features with every row scaled to unit L2 norm (empty rows stay
/// empty).
pub fn unit_features(rng: &mut StreamRng, items: usize, dim: usize, density: f64) -> Arc<FeatureMatrix<f64>> {
    let raw = random_features(rng, items, dim, density);
    let rows = (0..items)
        .map(|i| {
            let r = raw.row(i);
            let n = r.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
            r.iter().map(|&(c, v)| (c, v / n)).collect()
        })
        .collect();
    Arc::new(FeatureMatrix::new(raw.items().clone(), dim, rows).unwrap())
}

const NU: usize = 4;
const NI: usize = 6;
const DIM: usize = 3;

/// One random gradient check; `None` when the draw landed near a kink.
pub type GradientProbe = fn(&mut StreamRng) -> Option<f64>;

fn probe_transrec(rng: &mut StreamRng, d: DistanceKind) -> Option<f64> {
    let mut m = TransRec::zeros(NU, NI, DIM, d);
    randomize(&mut m, rng);
    let t = triple(rng, NU, NI);
    if d == DistanceKind::L1 {
        let q = m.query(t.user, t.prev);
        if near_kink(&q, m.gamma().row(t.pos)) || near_kink(&q, m.gamma().row(t.neg)) {
            return None;
        }
    }
    Some(max_gradient_error(&m, &t))
}

fn probe_hrm(rng: &mut StreamRng, p: Pooling) -> Option<f64> {
    let mut m = Hrm::from_parts(Matrix::zeros(NU, DIM), Matrix::zeros(NI, DIM), p);
    randomize(&mut m, rng);
    let t = triple(rng, NU, NI);
    if p == Pooling::Max
        && near_kink(
            m.block(Hrm::<f64>::USER).row(t.user),
            m.block(Hrm::<f64>::ITEM).row(t.prev),
        )
    {
        return None;
    }
    Some(max_gradient_error(&m, &t))
}

fn probe_i2i_transrec(rng: &mut StreamRng) -> Option<f64> {
    let f = random_features(rng, NI, 5, 0.5);
    let mut m = ContentTransRec::from_parts(f, DistanceKind::SquaredL2, Matrix::zeros(5, DIM), vec![0.0; DIM]).unwrap();
    randomize(&mut m, rng);
    let t = Triple {
        user: 0,
        ..triple(rng, 1, NI)
    };
    Some(max_gradient_error(&m, &t))
}

/// The gradient probes for every trainable scorer.
pub fn gradient_probes() -> Vec<(&'static str, GradientProbe)> {
    vec![
        ("transrec-l1", |r| probe_transrec(r, DistanceKind::L1)),
        ("transrec-l2", |r| probe_transrec(r, DistanceKind::SquaredL2)),
        ("bprmf", |r| {
            let bias = r.random_bool(0.5);
            let mut m = BprMf::zeros(NU, NI, DIM, bias);
            randomize(&mut m, r);
            let t = triple(r, NU, NI);
            Some(max_gradient_error(&m, &t))
        }),
        ("fmc", |r| {
            let bias = r.random_bool(0.5);
            let mut m = Fmc::zeros(NU, NI, DIM, bias);
            randomize(&mut m, r);
            let t = triple(r, NU, NI);
            Some(max_gradient_error(&m, &t))
        }),
        ("fpmc", |r| {
            let mut m = Fpmc::zeros(NU, NI, DIM);
            randomize(&mut m, r);
            let t = triple(r, NU, NI);
            Some(max_gradient_error(&m, &t))
        }),
        ("prme", |r| {
            let alpha = r.random_range(0.05..0.95);
            let mut m = Prme::from_parts(
                Matrix::zeros(NU, DIM),
                Matrix::zeros(NI, DIM),
                Matrix::zeros(NI, DIM),
                alpha,
            );
            randomize(&mut m, r);
            let t = triple(r, NU, NI);
            Some(max_gradient_error(&m, &t))
        }),
        ("hrm-avg", |r| probe_hrm(r, Pooling::Average)),
        ("hrm-max", |r| probe_hrm(r, Pooling::Max)),
        ("wnn", |r| {
            let f = random_features(r, NI, 5, 0.5);
            let mut w = vec![0.0; 5];
            fill_uniform(r, &mut w, -1.0, 1.0);
            let m = Wnn::from_parts(f, w).unwrap();
            let t = Triple {
                user: 0,
                ..triple(r, 1, NI)
            };
            Some(max_gradient_error(&m, &t))
        }),
        ("lmt", |r| {
            let f = random_features(r, NI, 5, 0.5);
            let mut m = Lmt::from_parts(f, Matrix::zeros(5, DIM)).unwrap();
            randomize(&mut m, r);
            let t = Triple {
                user: 0,
                ..triple(r, 1, NI)
            };
            Some(max_gradient_error(&m, &t))
        }),
        ("i2i-transrec", probe_i2i_transrec),
    ]
}

/// Worst relative error over `points` non-kink draws.
pub fn run_probe(probe: GradientProbe, points: usize, seed: u64) -> f64 {
    let mut rng = substream(seed, "gradient-probe");
    let mut worst: f64 = 0.0;
    let mut done = 0;
    while done < points {
        if let Some(e) = probe(&mut rng) {
            worst = worst.max(e);
            done += 1;
        }
    }
    worst
}

/// Scores looked up from a table, with coarse quantization so ties occur.
#[derive(Debug, Clone)]
pub struct TableModel {
    pub nu: usize,
    pub ni: usize,
    pub table: Vec<f64>,
}

impl TableModel {
    pub fn random(nu: usize, ni: usize, rng: &mut StreamRng) -> Self {
        let table = (0..nu * ni * ni)
            .map(|_| (rng.random_range(-1.0f64..1.0) * 8.0).round() / 8.0)
            .collect();
        Self { nu, ni, table }
    }
}

impl RankingModel<f64> for TableModel {
    fn num_users(&self) -> usize {
        self.nu
    }

    fn num_items(&self) -> usize {
        self.ni
    }

    fn score(&self, user: usize, prev: usize, item: usize) -> f64 {
        self.table[(user * self.ni + prev) * self.ni + item]
    }
}

/// Random split dataset: every user has 3..=max_len distinct items.
pub fn random_dataset(rng: &mut StreamRng, nu: usize, ni: usize, max_len: usize) -> SequenceDataset {
    let seqs = (0..nu)
        .map(|_| {
            let len = rng.random_range(3..=max_len.min(ni));
            let mut pool: Vec<usize> = (0..ni).collect();
            let mut s = Vec::with_capacity(len);
            for _ in 0..len {
                let k = rng.random_range(0..pool.len());
                s.push(pool.swap_remove(k));
            }
            s
        })
        .collect();
    split_leave_one_out(SequenceDataset::from_sequences(ni, seqs).unwrap()).dataset
}

pub struct OracleMetrics {
    pub auc: f64,
    pub auc_tie_aware: f64,
    pub hit: f64,
    pub evaluated: usize,
}

/// Plain double loop over users and candidate items.
pub fn brute_force_metrics<M: RankingModel<f64>>(m: &M, ds: &SequenceDataset, split: Split, k: usize) -> OracleMetrics {
    let (mut auc, mut ties, mut hit, mut n) = (0.0, 0.0, 0.0, 0usize);
    for u in 0..ds.num_users() {
        let seq = ds.sequence(u);
        let len = seq.len();
        let (target, prev) = match split {
            Split::Test => (seq[len - 1], seq[len - 2]),
            Split::Validation => (seq[len - 2], seq[len - 3]),
        };
        let gt = m.score(u, prev, target);
        let mut negatives = 0usize;
        let (mut wins, mut tied, mut not_below) = (0usize, 0usize, 0usize);
        for j in 0..ds.num_items() {
            if seq.contains(&j) {
                continue;
            }
            negatives += 1;
            let s = m.score(u, prev, j);
            if gt > s {
                wins += 1;
            }
            if gt == s {
                tied += 1;
            }
            if s >= gt {
                not_below += 1;
            }
        }
        if negatives == 0 {
            continue;
        }
        n += 1;
        auc += wins as f64 / negatives as f64;
        ties += (wins as f64 + 0.5 * tied as f64) / negatives as f64;
        if not_below < k {
            hit += 1.0;
        }
    }
    let d = n.max(1) as f64;
    OracleMetrics {
        auc: auc / d,
        auc_tie_aware: ties / d,
        hit: hit / d,
        evaluated: n,
    }
}

/// Ground-truth translation model for planted-recovery experiments: unit item
/// points, a global translation of length 0.3 and per-user translations of
/// length `user_scale`.
pub fn planted_transrec(seed: u64, nu: usize, ni: usize, dim: usize, user_scale: f64) -> TransRec<f64> {
    let mut rng = substream(seed, "planted");
    let mut m = TransRec::zeros(nu, ni, dim, DistanceKind::SquaredL2);
    for i in 0..ni {
        fill_unit_vector(&mut rng, m.gamma_mut().row_mut(i));
    }
    let mut t = vec![0.0; dim];
    fill_unit_vector(&mut rng, &mut t);
    for x in &mut t {
        *x *= 0.3;
    }
    m.t_global_mut().copy_from_slice(&t);
    for u in 0..nu {
        let mut v = vec![0.0; dim];
        fill_unit_vector(&mut rng, &mut v);
        for (dst, x) in m.t_user_mut().row_mut(u).iter_mut().zip(v) {
            *dst = user_scale * x;
        }
    }
    for b in m.beta_mut() {
        *b = 0.5 * rng.random_range(-1.0..1.0);
    }
    m
}

/// Index drawn from `softmax(scale * scores)` restricted to `allowed`.
pub fn softmax_draw(rng: &mut StreamRng, scores: &[f64], scale: f64, allowed: impl Fn(usize) -> bool) -> usize {
    let max = scores
        .iter()
        .enumerate()
        .filter(|&(j, _)| allowed(j))
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = scores
        .iter()
        .enumerate()
        .map(|(j, &s)| if allowed(j) { (scale * (s - max)).exp() } else { 0.0 })
        .collect();
    let total: f64 = w.iter().sum();
    let mut x = rng.random_range(0.0..total);
    for (j, &wj) in w.iter().enumerate() {
        if x < wj {
            return j;
        }
        x -= wj;
    }
    w.iter().rposition(|&v| v > 0.0).unwrap()
}

/// Sequences sampled from a ground-truth model; each user draws `len`
/// distinct items, the first uniformly and each next one from the softmax of
/// the model's scores given the previous item.
pub fn planted_sequences(truth: &TransRec<f64>, len: usize, scale: f64, seed: u64) -> SequenceDataset {
    let mut rng = substream(seed, "planted-sequences");
    let ni = truth.num_items();
    let mut scores = vec![0.0; ni];
    let seqs = (0..truth.num_users())
        .map(|u| {
            let mut seen = vec![false; ni];
            let mut s = vec![rng.random_range(0..ni)];
            seen[s[0]] = true;
            while s.len() < len {
                truth.score_all(u, *s.last().unwrap(), &mut scores);
                let j = softmax_draw(&mut rng, &scores, scale, |j| !seen[j]);
                seen[j] = true;
                s.push(j);
            }
            s
        })
        .collect();
    split_leave_one_out(SequenceDataset::from_sequences(ni, seqs).unwrap()).dataset
}

/// Directed edges sampled from a ground-truth content translation model:
/// each item links to `per_item` distinct destinations drawn from the softmax
/// of its pair scores.
pub fn planted_edges(truth: &ContentTransRec<f64>, per_item: usize, scale: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = substream(seed, "planted-edges");
    let n = truth.num_items();
    let mut edges = Vec::new();
    for i in 0..n {
        let scores: Vec<f64> = (0..n).map(|j| truth.pair_score(i, j)).collect();
        let mut taken = vec![false; n];
        taken[i] = true;
        for _ in 0..per_item {
            let j = softmax_draw(&mut rng, &scores, scale, |j| !taken[j]);
            taken[j] = true;
            edges.push((i, j));
        }
    }
    edges
}
