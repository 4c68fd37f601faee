//! Bag-of-words item features.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::dataset::IdMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default vocabulary size.
pub const DEFAULT_VOCABULARY: usize = 5000;

/// English stop words removed before counting. Fixed so vocabularies are
/// reproducible.
pub const STOP_WORDS: &[&str] = &[
    "a",
    "about",
    "above",
    "after",
    "again",
    "against",
    "all",
    "am",
    "an",
    "and",
    "any",
    "are",
    "as",
    "at",
    "be",
    "because",
    "been",
    "before",
    "being",
    "below",
    "between",
    "both",
    "but",
    "by",
    "can",
    "could",
    "d",
    "did",
    "do",
    "does",
    "doing",
    "don",
    "down",
    "during",
    "each",
    "few",
    "for",
    "from",
    "further",
    "had",
    "has",
    "have",
    "having",
    "he",
    "her",
    "here",
    "hers",
    "herself",
    "him",
    "himself",
    "his",
    "how",
    "i",
    "if",
    "in",
    "into",
    "is",
    "it",
    "its",
    "itself",
    "just",
    "ll",
    "m",
    "me",
    "more",
    "most",
    "my",
    "myself",
    "no",
    "nor",
    "not",
    "now",
    "of",
    "off",
    "on",
    "once",
    "only",
    "or",
    "other",
    "our",
    "ours",
    "ourselves",
    "out",
    "over",
    "own",
    "re",
    "s",
    "same",
    "she",
    "should",
    "so",
    "some",
    "such",
    "t",
    "than",
    "that",
    "the",
    "their",
    "theirs",
    "them",
    "themselves",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "through",
    "to",
    "too",
    "under",
    "until",
    "up",
    "ve",
    "very",
    "was",
    "we",
    "were",
    "what",
    "when",
    "where",
    "which",
    "while",
    "who",
    "whom",
    "why",
    "will",
    "with",
    "would",
    "you",
    "your",
    "yours",
    "yourself",
    "yourselves",
];

/// Vocabulary filter hook. A part-of-speech tagger can be plugged in here to
/// keep only nouns, adjectives and adjective-noun bigrams.
pub trait TermFilter {
    fn name(&self) -> &str;

    fn keep_unigram(&self, _term: &str) -> bool {
        true
    }

    fn keep_bigram(&self, _first: &str, _second: &str) -> bool {
        true
    }
}

/// Keeps every term: frequency alone decides the vocabulary.
#[derive(Debug, Clone, Copy, Default)]
pub struct FrequencyOnly;

impl TermFilter for FrequencyOnly {
    fn name(&self) -> &str {
        "none"
    }
}

/// Sparse non-negative item features. Rows are sorted by column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<T> {
    items: IdMap,
    dim: usize,
    rows: Vec<Vec<(usize, T)>>,
    vocabulary: Vec<String>,
}

impl<T: Scalar> FeatureMatrix<T> {
    pub fn new(items: IdMap, dim: usize, rows: Vec<Vec<(usize, T)>>) -> Result<Self> {
        if rows.len() != items.len() {
            return Err(Error::DimensionMismatch {
                expected: items.len(),
                actual: rows.len(),
            });
        }
        let mut rows = rows;
        for row in &mut rows {
            row.sort_by_key(|&(c, _)| c);
            if let Some(&(c, _)) = row.iter().find(|&&(c, _)| c >= dim) {
                return Err(Error::InvalidArgument(format!("feature column {c} >= dimension {dim}")));
            }
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::InvalidArgument("duplicate feature column in a row".into()));
            }
            if row.iter().any(|&(_, v)| !v.is_finite()) {
                return Err(Error::InvalidArgument("non-finite feature value".into()));
            }
        }
        Ok(Self {
            items,
            dim,
            rows,
            vocabulary: Vec::new(),
        })
    }

    pub fn with_vocabulary(mut self, vocabulary: Vec<String>) -> Self {
        self.vocabulary = vocabulary;
        self
    }

    pub fn items(&self) -> &IdMap {
        &self.items
    }

    pub fn num_items(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, item: usize) -> &[(usize, T)] {
        &self.rows[item]
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    /// Value at `(item, col)`.
    pub fn get(&self, item: usize, col: usize) -> T {
        let row = &self.rows[item];
        row.binary_search_by_key(&col, |&(c, _)| c)
            .map_or(T::zero(), |k| row[k].1)
    }

    /// Dense copy of one row.
    pub fn dense_row(&self, item: usize) -> Vec<T> {
        let mut out = vec![T::zero(); self.dim];
        for &(c, v) in &self.rows[item] {
            out[c] = v;
        }
        out
    }

    /// Same features with `extra` all-zero columns appended.
    pub fn with_zero_columns(&self, extra: usize) -> Self {
        let mut out = self.clone();
        out.dim += extra;
        out
    }

    /// Ensures every id in `ids` has a row, adding empty rows for unknown
    /// items.
    pub fn cover(&mut self, ids: impl IntoIterator<Item = impl AsRef<str>>) {
        for id in ids {
            let before = self.items.len();
            if self.items.intern(id.as_ref()) == before {
                self.rows.push(Vec::new());
            }
        }
    }
}

/// Lower-cased alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

/// Unigrams and adjacent bigrams (joined by a space) of `text` after
/// stop-word removal. A bigram is only formed from two tokens that were
/// adjacent in the original text.
pub fn terms(text: &str, filter: &dyn TermFilter) -> Vec<String> {
    let tokens = tokenize(text);
    let stop = |t: &str| STOP_WORDS.binary_search(&t).is_ok();
    let mut out = Vec::new();
    for (k, t) in tokens.iter().enumerate() {
        if stop(t) {
            continue;
        }
        if filter.keep_unigram(t) {
            out.push(t.clone());
        }
        if let Some(next) = tokens.get(k + 1) {
            if !stop(next) && filter.keep_bigram(t, next) {
                out.push(format!("{t} {next}"));
            }
        }
    }
    out
}

/// Counts the `dim` most frequent terms (ties broken lexicographically) for
/// every item in `corpus`.
pub fn extract_features<T: Scalar>(
    corpus: &[(String, String)],
    dim: usize,
    filter: &dyn TermFilter,
) -> Result<FeatureMatrix<T>> {
    if corpus.is_empty() {
        return Err(Error::Empty("corpus".into()));
    }
    let docs: Vec<Vec<String>> = corpus.iter().map(|(_, text)| terms(text, filter)).collect();
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for doc in &docs {
        for t in doc {
            *freq.entry(t.as_str()).or_default() += 1;
        }
    }
    if freq.is_empty() || dim == 0 {
        return Err(Error::Empty("vocabulary".into()));
    }
    let mut ranked: Vec<(&str, usize)> = freq.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    ranked.truncate(dim);
    let vocabulary: Vec<String> = ranked.iter().map(|(t, _)| (*t).to_owned()).collect();
    let column: HashMap<&str, usize> = vocabulary.iter().enumerate().map(|(c, t)| (t.as_str(), c)).collect();

    let mut items = IdMap::new();
    let mut rows: Vec<HashMap<usize, f64>> = Vec::new();
    for ((id, _), doc) in corpus.iter().zip(&docs) {
        let i = items.intern(id);
        if i == rows.len() {
            rows.push(HashMap::new());
        }
        for t in doc {
            if let Some(&c) = column.get(t.as_str()) {
                *rows[i].entry(c).or_default() += 1.0;
            }
        }
    }
    let rows = rows
        .into_iter()
        .map(|r| r.into_iter().map(|(c, v)| (c, T::of(v))).collect())
        .collect();
    Ok(FeatureMatrix::new(items, vocabulary.len(), rows)?.with_vocabulary(vocabulary))
}

/// Reads `item_id<TAB>text` lines, or every file in a directory (the item id
/// is the file stem).
pub fn read_corpus(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let path = path.as_ref();
    if path.is_dir() {
        let mut entries: Vec<_> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_file())
            .collect();
        entries.sort();
        return entries
            .into_iter()
            .map(|p| {
                let text = fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
                let id = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Ok((id, text))
            })
            .collect();
    }
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            let (id, body) = l.split_once('\t').ok_or_else(|| Error::Malformed {
                line: n as u64 + 1,
                reason: "expected `item_id<TAB>text`".into(),
            })?;
            Ok((id.to_owned(), body.to_owned()))
        })
        .collect()
}

/// Writes `item_id<TAB>col<TAB>value` triplets preceded by a
/// `#features <dim>` line and `comment` as `# ` lines. The vocabulary, if
/// any, goes to `<path>.vocab`, one term per line in column order.
pub fn write_triplets<T: Scalar>(features: &FeatureMatrix<T>, path: impl AsRef<Path>, comment: &str) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("#features {}\n", features.dim());
    for line in comment.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    for i in 0..features.num_items() {
        for &(c, v) in features.row(i) {
            out.push_str(&format!("{}\t{}\t{}\n", features.items().id(i), c, v));
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))?;
    if !features.vocabulary().is_empty() {
        let vpath = path.with_extension("vocab");
        let mut v = features.vocabulary().join("\n");
        v.push('\n');
        fs::write(&vpath, v).map_err(|e| Error::io(&vpath, e))?;
    }
    Ok(())
}

pub fn read_triplets<T: Scalar>(path: impl AsRef<Path>) -> Result<FeatureMatrix<T>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut dim: Option<usize> = None;
    let mut items = IdMap::new();
    let mut rows: Vec<Vec<(usize, T)>> = Vec::new();
    let mut max_col = 0;
    for (n, line) in text.lines().enumerate() {
        let line_no = n as u64 + 1;
        let bad = |reason: String| Error::Malformed { line: line_no, reason };
        if let Some(rest) = line.strip_prefix("#features") {
            dim = Some(rest.trim().parse().map_err(|_| bad("bad #features header".into()))?);
            continue;
        }
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(bad(format!("expected 3 fields, found {}", fields.len())));
        }
        let col: usize = fields[1]
            .parse()
            .map_err(|_| bad(format!("bad column `{}`", fields[1])))?;
        let val: f64 = fields[2]
            .parse()
            .map_err(|_| bad(format!("bad value `{}`", fields[2])))?;
        if !val.is_finite() || val < 0.0 {
            return Err(bad(format!(
                "feature values must be finite and non-negative, got {val}"
            )));
        }
        let i = items.intern(fields[0]);
        if i == rows.len() {
            rows.push(Vec::new());
        }
        rows[i].push((col, T::of(val)));
        max_col = max_col.max(col + 1);
    }
    let dim = dim.unwrap_or(max_col);
    let mut fm = FeatureMatrix::new(items, dim, rows)?;
    let vpath = path.with_extension("vocab");
    if vpath.is_file() {
        let v = fs::read_to_string(&vpath).map_err(|e| Error::io(&vpath, e))?;
        fm = fm.with_vocabulary(v.lines().map(str::to_owned).collect());
    }
    Ok(fm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn corpus(docs: &[(&str, &str)]) -> Vec<(String, String)> {
        docs.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect()
    }

    #[test]
    fn stop_words_are_sorted_for_lookup() {
        assert!(STOP_WORDS.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn shared_term_counts_once_per_document() {
        let fm = extract_features::<f64>(&corpus(&[("a", "camera"), ("b", "camera")]), 10, &FrequencyOnly).unwrap();
        assert_eq!(fm.vocabulary(), &["camera".to_string()]);
        assert_eq!(fm.get(0, 0), 1.0);
        assert_eq!(fm.get(1, 0), 1.0);
    }

    #[test]
    fn bigrams_and_stop_words() {
        let t = terms("The great camera, and a lens", &FrequencyOnly);
        assert_eq!(t, ["great", "great camera", "camera", "lens"]);
    }

    #[test]
    fn vocabulary_order_is_deterministic() {
        let c = corpus(&[("a", "zeta beta beta"), ("b", "alpha zeta")]);
        let fm = extract_features::<f64>(&c, 100, &FrequencyOnly).unwrap();
        // frequency desc, then lexicographic
        assert_eq!(&fm.vocabulary()[..3], &["beta", "zeta", "alpha"]);
        let fm2 = extract_features::<f64>(&c, 100, &FrequencyOnly).unwrap();
        assert_eq!(fm, fm2);
    }

    #[test]
    fn large_dimension_keeps_full_vocabulary() {
        let fm = extract_features::<f64>(&corpus(&[("a", "red shoe"), ("b", "blue")]), 5000, &FrequencyOnly).unwrap();
        assert_eq!(fm.dim(), 4); // red, shoe, red shoe, blue
    }

    #[test]
    fn truncation_to_top_terms() {
        let fm = extract_features::<f64>(
            &corpus(&[("a", "x"), ("b", "x"), ("c", "x"), ("d", "y"), ("e", "y"), ("f", "z")]),
            2,
            &FrequencyOnly,
        )
        .unwrap();
        assert_eq!(fm.vocabulary(), &["x".to_string(), "y".to_string()]);
        assert_eq!(fm.get(0, 0), 1.0);
        assert_eq!(fm.get(5, 0), 0.0);
    }

    #[test]
    fn empty_vocabulary_errors() {
        assert!(extract_features::<f64>(&corpus(&[("a", "the and of")]), 10, &FrequencyOnly).is_err());
        assert!(extract_features::<f64>(&[], 10, &FrequencyOnly).is_err());
    }

    #[test]
    fn triplet_roundtrip() {
        let fm =
            extract_features::<f64>(&corpus(&[("a", "red shoe"), ("b", "blue shoe")]), 10, &FrequencyOnly).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.tsv");
        write_triplets(&fm, &p, "dim=2\nsource=test").unwrap();
        assert_eq!(read_triplets::<f64>(&p).unwrap(), fm);
    }
}
