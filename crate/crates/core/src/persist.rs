//! Binary model files.
//!
//! All integers and scalars are little-endian:
//!
//! ```text
//! magic        8 bytes  "TRANSREC"
//! version      u32      currently 1
//! scalar       u8       bytes per scalar (4 or 8)
//! kind         u8       model kind code
//! distance     u8       0 = none, 1 = L1, 2 = squared L2
//! flags        u8       bit 0 = item bias enabled
//! dim          u32      latent dimensionality
//! n_users      u32
//! n_items      u32
//! n_features   u32      feature dimensionality (item-to-item models, else 0)
//! alpha        f64      PRME mixing weight (else 0)
//! seed         u64      seed the model was trained with
//! block_count  u32
//! blocks       block_count x (rows u32, cols u32, rows*cols scalars row-major)
//! user ids     u32 count, then count x (u32 length, UTF-8 bytes)
//! item ids     same layout
//! metadata     u32 length, UTF-8 bytes (training configuration echo)
//! end magic    8 bytes  "ENDTRREC"
//! ```

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::baselines::{BprMf, Fmc, Fpmc, Hrm, Pooling, PopRec, Prme};
use crate::dataset::{IdMap, SequenceDataset};
use crate::error::{Error, Result};
use crate::item2item::{ContentTransRec, FeatureMatrix, I2IKind, I2IModel, Lmt, Wnn};
use crate::linalg::Matrix;
use crate::model::{DistanceKind, Trainable, TransRec};
use crate::scalar::Scalar;
use crate::zoo::{AnyModel, ModelKind};

pub const MAGIC: &[u8; 8] = b"TRANSREC";
pub const END_MAGIC: &[u8; 8] = b"ENDTRREC";
pub const VERSION: u32 = 1;

const FLAG_ITEM_BIAS: u8 = 1;

fn seq_code(kind: ModelKind) -> u8 {
    match kind {
        ModelKind::PopRec => 0,
        ModelKind::BprMf => 1,
        ModelKind::Fmc => 2,
        ModelKind::Fpmc => 3,
        ModelKind::Prme => 4,
        ModelKind::HrmAvg => 5,
        ModelKind::HrmMax => 6,
        ModelKind::TransRecL1 => 7,
        ModelKind::TransRecL2 => 8,
    }
}

fn i2i_code(kind: I2IKind) -> u8 {
    match kind {
        I2IKind::TransRec => 16,
        I2IKind::Wnn => 17,
        I2IKind::Lmt => 18,
    }
}

fn distance_code(d: Option<DistanceKind>) -> u8 {
    match d {
        None => 0,
        Some(DistanceKind::L1) => 1,
        Some(DistanceKind::SquaredL2) => 2,
    }
}

fn distance_from(code: u8) -> Result<Option<DistanceKind>> {
    match code {
        0 => Ok(None),
        1 => Ok(Some(DistanceKind::L1)),
        2 => Ok(Some(DistanceKind::SquaredL2)),
        c => Err(Error::Corrupt(format!("unknown distance code {c}"))),
    }
}

/// Item-to-item parameters as stored; they only become a model once bound to
/// the feature matrix they were trained on.
#[derive(Debug, Clone, PartialEq)]
pub struct I2IParams<T> {
    pub kind: I2IKind,
    pub distance: DistanceKind,
    pub num_features: usize,
    pub blocks: Vec<Matrix<T>>,
}

impl<T: Scalar> I2IParams<T> {
    pub fn from_model(model: &I2IModel<T>) -> Self {
        fn all<T: Scalar, M: Trainable<T>>(m: &M) -> Vec<Matrix<T>> {
            (0..m.num_blocks()).map(|b| m.block(b).clone()).collect()
        }
        let (distance, blocks, num_features) = match model {
            I2IModel::TransRec(m) => (m.distance_kind(), all(m), m.features().dim()),
            I2IModel::Wnn(m) => (DistanceKind::SquaredL2, all(m), m.features().dim()),
            I2IModel::Lmt(m) => (DistanceKind::SquaredL2, all(m), m.features().dim()),
        };
        Self {
            kind: model.kind(),
            distance,
            num_features,
            blocks,
        }
    }

    pub fn bind(self, features: Arc<FeatureMatrix<T>>) -> Result<I2IModel<T>> {
        if features.dim() != self.num_features {
            return Err(Error::DimensionMismatch {
                expected: self.num_features,
                actual: features.dim(),
            });
        }
        let mut blocks = self.blocks.into_iter();
        let mut next = || {
            blocks
                .next()
                .ok_or_else(|| Error::Corrupt("missing parameter block".into()))
        };
        Ok(match self.kind {
            I2IKind::TransRec => {
                let proj = next()?;
                let translation = next()?;
                I2IModel::TransRec(ContentTransRec::from_parts(
                    features,
                    self.distance,
                    proj,
                    translation.as_slice().to_vec(),
                )?)
            }
            I2IKind::Lmt => I2IModel::Lmt(Lmt::from_parts(features, next()?)?),
            I2IKind::Wnn => I2IModel::Wnn(Wnn::from_parts(features, next()?.as_slice().to_vec())?),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StoredModel<T> {
    Sequential(AnyModel<T>),
    ItemToItem(I2IParams<T>),
}

/// A model together with the id mappings and configuration it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile<T> {
    pub model: StoredModel<T>,
    pub users: IdMap,
    pub items: IdMap,
    pub seed: u64,
    pub metadata: String,
}

impl<T: Scalar> ModelFile<T> {
    pub fn sequential(model: AnyModel<T>, users: IdMap, items: IdMap, seed: u64, metadata: String) -> Self {
        Self {
            model: StoredModel::Sequential(model),
            users,
            items,
            seed,
            metadata,
        }
    }

    pub fn item_to_item(model: &I2IModel<T>, items: IdMap, seed: u64, metadata: String) -> Self {
        Self {
            model: StoredModel::ItemToItem(I2IParams::from_model(model)),
            users: IdMap::new(),
            items,
            seed,
            metadata,
        }
    }

    pub fn as_sequential(&self) -> Result<&AnyModel<T>> {
        match &self.model {
            StoredModel::Sequential(m) => Ok(m),
            StoredModel::ItemToItem(_) => Err(Error::InvalidArgument(
                "expected a sequential model, found an item-to-item model".into(),
            )),
        }
    }

    /// Errors unless `ds` has exactly the users and items of this model.
    pub fn check_dataset(&self, ds: &SequenceDataset) -> Result<()> {
        if ds.users().ids() != self.users.ids() || ds.items().ids() != self.items.ids() {
            return Err(Error::ShapeMismatch(format!(
                "dataset ({} users, {} items) does not match the model ({} users, {} items)",
                ds.num_users(),
                ds.num_items(),
                self.users.len(),
                self.items.len()
            )));
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Vec::new();
        w.extend_from_slice(MAGIC);
        w.extend_from_slice(&VERSION.to_le_bytes());
        w.push(T::BYTES as u8);

        let (kind, distance, flags, dim, n_features, alpha, blocks): (u8, _, u8, usize, usize, f64, Vec<&Matrix<T>>) =
            match &self.model {
                StoredModel::Sequential(m) => {
                    let (distance, flags, dim, alpha) = match m {
                        AnyModel::PopRec(_) => (None, 0, 0, 0.0),
                        AnyModel::BprMf(b) => (
                            None,
                            bias_flag(b.has_item_bias()),
                            b.block(BprMf::<T>::USER).cols(),
                            0.0,
                        ),
                        AnyModel::Fmc(f) => (None, bias_flag(f.has_item_bias()), f.block(Fmc::<T>::PREV).cols(), 0.0),
                        AnyModel::Fpmc(f) => (None, 0, f.block(Fpmc::<T>::USER).cols(), 0.0),
                        AnyModel::Prme(p) => (None, 0, p.block(Prme::<T>::USER).cols(), p.alpha().to_f64_lossy()),
                        AnyModel::Hrm(h) => (None, 0, h.block(Hrm::<T>::USER).cols(), 0.0),
                        AnyModel::TransRec(t) => (Some(t.distance_kind()), 0, t.dim(), 0.0),
                    };
                    let blocks = match m {
                        AnyModel::PopRec(_) => Vec::new(),
                        _ => m.blocks(),
                    };
                    (seq_code(m.kind()), distance, flags, dim, 0, alpha, blocks)
                }
                StoredModel::ItemToItem(p) => {
                    let dim = match p.kind {
                        I2IKind::Wnn => 1,
                        _ => p.blocks.first().map_or(0, |b| b.cols()),
                    };
                    (
                        i2i_code(p.kind),
                        Some(p.distance),
                        0,
                        dim,
                        p.num_features,
                        0.0,
                        p.blocks.iter().collect(),
                    )
                }
            };
        // Popularity counts travel as a single block.
        let pop_block;
        let blocks = match &self.model {
            StoredModel::Sequential(AnyModel::PopRec(p)) => {
                pop_block = Matrix::from_vec(p.counts().len(), 1, p.counts().to_vec());
                vec![&pop_block]
            }
            _ => blocks,
        };
        let (n_users, n_items) = match &self.model {
            StoredModel::Sequential(m) => {
                use crate::model::RankingModel;
                (m.num_users(), m.num_items())
            }
            StoredModel::ItemToItem(_) => (0, self.items.len()),
        };

        w.push(kind);
        w.push(distance_code(distance));
        w.push(flags);
        put_u32(&mut w, dim)?;
        put_u32(&mut w, n_users)?;
        put_u32(&mut w, n_items)?;
        put_u32(&mut w, n_features)?;
        w.extend_from_slice(&alpha.to_le_bytes());
        w.extend_from_slice(&self.seed.to_le_bytes());
        put_u32(&mut w, blocks.len())?;
        for b in blocks {
            put_u32(&mut w, b.rows())?;
            put_u32(&mut w, b.cols())?;
            for &x in b.as_slice() {
                x.write_le(&mut w);
            }
        }
        put_ids(&mut w, &self.users)?;
        put_ids(&mut w, &self.items)?;
        put_str(&mut w, &self.metadata)?;
        w.extend_from_slice(END_MAGIC);
        Ok(w)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Cursor { buf: bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Corrupt("not a transrec model file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Corrupt(format!("unsupported model file version {version}")));
        }
        let width = r.u8()? as usize;
        if width != T::BYTES {
            return Err(Error::InvalidArgument(format!(
                "model file stores {width}-byte scalars, loader expects {}-byte scalars",
                T::BYTES
            )));
        }
        let kind = r.u8()?;
        let distance = distance_from(r.u8()?)?;
        let flags = r.u8()?;
        let dim = r.u32()? as usize;
        let n_users = r.u32()? as usize;
        let n_items = r.u32()? as usize;
        let n_features = r.u32()? as usize;
        let alpha = f64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let seed = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes"));
        let count = r.u32()? as usize;
        let mut blocks = Vec::new();
        for _ in 0..count {
            let rows = r.u32()? as usize;
            let cols = r.u32()? as usize;
            let n = rows
                .checked_mul(cols)
                .ok_or_else(|| Error::Corrupt("block size overflows".into()))?;
            let raw = r.take(
                n.checked_mul(T::BYTES)
                    .ok_or_else(|| Error::Corrupt("block size overflows".into()))?,
            )?;
            let data = raw.chunks_exact(T::BYTES).map(T::read_le).collect();
            blocks.push(Matrix::from_vec(rows, cols, data));
        }
        let users = r.ids()?;
        let items = r.ids()?;
        let metadata = r.string()?;
        if r.take(8)? != END_MAGIC {
            return Err(Error::Corrupt("missing end marker".into()));
        }
        if r.pos != bytes.len() {
            return Err(Error::Corrupt(format!(
                "{} trailing bytes after end marker",
                bytes.len() - r.pos
            )));
        }

        let model = if kind >= 16 {
            let kind = match kind {
                16 => I2IKind::TransRec,
                17 => I2IKind::Wnn,
                18 => I2IKind::Lmt,
                c => return Err(Error::Corrupt(format!("unknown model kind code {c}"))),
            };
            let expected: Vec<(usize, usize)> = match kind {
                I2IKind::TransRec => vec![(n_features, dim), (1, dim)],
                I2IKind::Lmt => vec![(n_features, dim)],
                I2IKind::Wnn => vec![(n_features, 1)],
            };
            check_shapes(&blocks, &expected)?;
            if items.len() != n_items {
                return Err(Error::Corrupt("item id count disagrees with header".into()));
            }
            StoredModel::ItemToItem(I2IParams {
                kind,
                distance: distance.ok_or_else(|| Error::Corrupt("item-to-item model without distance".into()))?,
                num_features: n_features,
                blocks,
            })
        } else {
            if users.len() != n_users || items.len() != n_items {
                return Err(Error::Corrupt("id counts disagree with header".into()));
            }
            StoredModel::Sequential(rebuild(kind, distance, flags, dim, n_users, n_items, alpha, blocks)?)
        };
        Ok(Self {
            model,
            users,
            items,
            seed,
            metadata,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Scalar width recorded in a model file header, so callers can pick the
/// matching instantiation before decoding.
pub fn scalar_width(bytes: &[u8]) -> Result<usize> {
    if bytes.len() < 13 || &bytes[..8] != MAGIC {
        return Err(Error::Corrupt("not a transrec model file (bad magic)".into()));
    }
    Ok(bytes[12] as usize)
}

fn bias_flag(on: bool) -> u8 {
    if on {
        FLAG_ITEM_BIAS
    } else {
        0
    }
}

fn check_shapes<T: Scalar>(blocks: &[Matrix<T>], expected: &[(usize, usize)]) -> Result<()> {
    if blocks.len() != expected.len() {
        return Err(Error::Corrupt(format!(
            "expected {} parameter blocks, found {}",
            expected.len(),
            blocks.len()
        )));
    }
    for (i, (b, &(r, c))) in blocks.iter().zip(expected).enumerate() {
        if (b.rows(), b.cols()) != (r, c) {
            return Err(Error::Corrupt(format!(
                "block {i} is {}x{}, expected {r}x{c}",
                b.rows(),
                b.cols()
            )));
        }
    }
    Ok(())
}

fn fill<T: Scalar, M: Trainable<T>>(mut model: M, blocks: Vec<Matrix<T>>) -> Result<M> {
    let expected: Vec<_> = (0..model.num_blocks())
        .map(|b| (model.block(b).rows(), model.block(b).cols()))
        .collect();
    check_shapes(&blocks, &expected)?;
    for (i, b) in blocks.into_iter().enumerate() {
        *model.block_mut(i) = b;
    }
    Ok(model)
}

#[allow(clippy::too_many_arguments)]
fn rebuild<T: Scalar>(
    code: u8,
    distance: Option<DistanceKind>,
    flags: u8,
    dim: usize,
    nu: usize,
    ni: usize,
    alpha: f64,
    mut blocks: Vec<Matrix<T>>,
) -> Result<AnyModel<T>> {
    let bias = flags & FLAG_ITEM_BIAS != 0;
    let zeros = |r: usize| Matrix::<T>::zeros(r, dim);
    Ok(match code {
        0 => {
            check_shapes(&blocks, &[(ni, 1)])?;
            let counts = blocks.pop().expect("one block").as_slice().to_vec();
            AnyModel::PopRec(PopRec::from_counts(nu, counts))
        }
        1 => AnyModel::BprMf(fill(BprMf::zeros(nu, ni, dim, bias), blocks)?),
        2 => AnyModel::Fmc(fill(Fmc::zeros(nu, ni, dim, bias), blocks)?),
        3 => AnyModel::Fpmc(fill(Fpmc::zeros(nu, ni, dim), blocks)?),
        4 => AnyModel::Prme(fill(
            Prme::from_parts(zeros(nu), zeros(ni), zeros(ni), T::of(alpha)),
            blocks,
        )?),
        5 => AnyModel::Hrm(fill(Hrm::from_parts(zeros(nu), zeros(ni), Pooling::Average), blocks)?),
        6 => AnyModel::Hrm(fill(Hrm::from_parts(zeros(nu), zeros(ni), Pooling::Max), blocks)?),
        7 | 8 => {
            let expected = if code == 7 {
                DistanceKind::L1
            } else {
                DistanceKind::SquaredL2
            };
            if distance != Some(expected) {
                return Err(Error::Corrupt(
                    "TransRec distance code disagrees with model kind".into(),
                ));
            }
            AnyModel::TransRec(fill(TransRec::zeros(nu, ni, dim, expected), blocks)?)
        }
        c => return Err(Error::Corrupt(format!("unknown model kind code {c}"))),
    })
}

fn put_u32(w: &mut Vec<u8>, n: usize) -> Result<()> {
    let n = u32::try_from(n).map_err(|_| Error::InvalidArgument(format!("{n} does not fit in a u32 field")))?;
    w.extend_from_slice(&n.to_le_bytes());
    Ok(())
}

fn put_str(w: &mut Vec<u8>, s: &str) -> Result<()> {
    put_u32(w, s.len())?;
    w.extend_from_slice(s.as_bytes());
    Ok(())
}

fn put_ids(w: &mut Vec<u8>, ids: &IdMap) -> Result<()> {
    put_u32(w, ids.len())?;
    for id in ids.ids() {
        put_str(w, id)?;
    }
    Ok(())
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corrupt(format!("truncated model file at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::Corrupt("invalid UTF-8 in model file".into()))
    }

    fn ids(&mut self) -> Result<IdMap> {
        let n = self.u32()? as usize;
        let mut ids = Vec::with_capacity(n.min(self.buf.len()));
        for _ in 0..n {
            ids.push(self.string()?);
        }
        IdMap::from_ids(ids).map_err(|e| Error::Corrupt(format!("bad id table: {e}")))
    }
}
