//! Plain-text persistence of prepared datasets.
//!
//! ```text
//! transrec-dataset 1
//! items <N>
//! <item id>                       N lines, dense index order
//! users <M>
//! <user id>\t<item id>\t...       M lines, time-ordered sequence
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{IdMap, SequenceDataset};
use crate::error::{Error, Result};

const HEADER: &str = "transrec-dataset 1";

pub fn write_dataset(ds: &SequenceDataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    out.push_str(&format!("items {}\n", ds.num_items()));
    for id in ds.items().ids() {
        check_id(id)?;
        out.push_str(id);
        out.push('\n');
    }
    out.push_str(&format!("users {}\n", ds.num_users()));
    for u in 0..ds.num_users() {
        let id = ds.users().id(u);
        check_id(id)?;
        out.push_str(id);
        for &i in ds.sequence(u) {
            out.push('\t');
            out.push_str(ds.items().id(i));
        }
        out.push('\n');
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}

fn check_id(id: &str) -> Result<()> {
    if id.contains(['\t', '\n', '\r']) {
        return Err(Error::InvalidArgument(format!(
            "identifier {id:?} contains a tab or newline"
        )));
    }
    Ok(())
}

/// Reads a dataset written by [`write_dataset`]. The result is unsplit.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<SequenceDataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate().map(|(n, l)| (n as u64 + 1, l));
    let bad = |line: u64, reason: &str| Error::Malformed {
        line,
        reason: reason.to_owned(),
    };

    match lines.next() {
        Some((_, HEADER)) => {}
        _ => return Err(bad(1, "not a transrec dataset file")),
    }
    let count = |lines: &mut dyn Iterator<Item = (u64, &str)>, key: &str| -> Result<usize> {
        let (n, l) = lines.next().ok_or_else(|| bad(0, "unexpected end of file"))?;
        l.strip_prefix(key)
            .and_then(|rest| rest.trim().parse().ok())
            .ok_or_else(|| bad(n, &format!("expected `{key} <count>`")))
    };

    let n_items = count(&mut lines, "items ")?;
    let mut item_ids = Vec::with_capacity(n_items);
    for _ in 0..n_items {
        let (_, l) = lines.next().ok_or_else(|| bad(0, "truncated item list"))?;
        item_ids.push(l.to_owned());
    }
    let items = IdMap::from_ids(item_ids)?;

    let n_users = count(&mut lines, "users ")?;
    let mut user_ids = Vec::with_capacity(n_users);
    let mut sequences = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        let (n, l) = lines.next().ok_or_else(|| bad(0, "truncated user list"))?;
        let mut fields = l.split('\t');
        user_ids.push(fields.next().unwrap_or_default().to_owned());
        let seq = fields
            .map(|id| items.get(id).ok_or_else(|| bad(n, &format!("unknown item `{id}`"))))
            .collect::<Result<Vec<_>>>()?;
        sequences.push(seq);
    }
    SequenceDataset::from_parts(IdMap::from_ids(user_ids)?, items, sequences)
}
