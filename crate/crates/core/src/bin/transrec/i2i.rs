//! Item-to-item commands: i2i-features, i2i-train, i2i-eval.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, ValueEnum};

use transrec::dataset::IdMap;
use transrec::item2item::{
    extract_features, read_corpus, read_edges, read_triplets, train_i2i, write_triplets, EdgeDataset, EdgeSplit,
    FeatureMatrix, FrequencyOnly, I2IConfig, I2IKind, DEFAULT_DIM, DEFAULT_HIT_K, DEFAULT_VOCABULARY,
};
use transrec::persist::{ModelFile, StoredModel};
use transrec::training::{grid_search, Regularization, TrainConfig};
use transrec::{DistanceKind, Error, Result, Scalar};

use crate::seq::{create_dir, with_width, write, MODEL_FILE, REPORT_FILE, TIMINGS_FILE};
use crate::settings::Settings;
use crate::{Precision, TrainFlags};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DistanceArg {
    L1,
    L2,
}

impl From<DistanceArg> for DistanceKind {
    fn from(d: DistanceArg) -> Self {
        match d {
            DistanceArg::L1 => DistanceKind::L1,
            DistanceArg::L2 => DistanceKind::SquaredL2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EdgeSplitArg {
    Validation,
    Test,
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    /// `item_id<TAB>text` file, or a directory with one text file per item.
    #[arg(long)]
    corpus: PathBuf,
    /// Number of most frequent terms kept.
    #[arg(long, default_value_t = DEFAULT_VOCABULARY)]
    dim: usize,
    /// Output triplet file; the vocabulary is written next to it as .vocab.
    #[arg(long)]
    out: PathBuf,
}

pub fn features(a: FeaturesArgs) -> Result<()> {
    let corpus = read_corpus(&a.corpus)?;
    let fm = extract_features::<f64>(&corpus, a.dim, &FrequencyOnly)?;
    let comment = format!(
        "command=i2i-features\ncorpus={}\ndim={}\nterms=unigrams and adjacent bigrams by raw frequency, stop words removed, no part-of-speech filter\nitems={}\nfeatures={}",
        a.corpus.display(),
        a.dim,
        fm.num_items(),
        fm.dim()
    );
    write_triplets(&fm, &a.out, &comment)?;
    println!("items={} features={}", fm.num_items(), fm.dim());
    Ok(())
}

fn parse_edge_delimiter(s: &str) -> Result<char> {
    match s {
        "tab" | "\\t" => Ok('\t'),
        "comma" => Ok(','),
        "space" => Ok(' '),
        _ => {
            let mut c = s.chars();
            match (c.next(), c.next()) {
                (Some(ch), None) => Ok(ch),
                _ => Err(Error::InvalidArgument(format!(
                    "delimiter must be a single character, got `{s}`"
                ))),
            }
        }
    }
}

/// Features extended with empty rows for items that only appear in edges,
/// plus the edges re-indexed onto the combined item ids.
fn load_graph<T: Scalar>(
    features: &Path,
    edges: &Path,
    delimiter: &str,
    seed: u64,
) -> Result<(Arc<FeatureMatrix<T>>, EdgeDataset)> {
    let mut fm = read_triplets::<T>(features)?;
    let mut items: IdMap = fm.items().clone();
    let known = items.len();
    let list = read_edges(edges, parse_edge_delimiter(delimiter)?, &mut items)?;
    if list.is_empty() {
        return Err(Error::Empty(format!("no edges in {}", edges.display())));
    }
    if items.len() > known {
        log::warn!("{} items have edges but no features", items.len() - known);
    }
    fm.cover(items.ids()[known..].iter());
    let eds = EdgeDataset::split(items.len(), list, seed)?;
    Ok((Arc::new(fm), eds))
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Directed edges, one `src<delim>dst` per line.
    #[arg(long)]
    edges: PathBuf,
    /// Feature triplet file written by i2i-features.
    #[arg(long)]
    features: PathBuf,
    /// transrec | wnn | lmt
    #[arg(long)]
    model: I2IKind,
    /// Output directory for model.bin, report.txt and timings.tsv.
    #[arg(long)]
    out: PathBuf,
    /// Distance of the translation model.
    #[arg(long, value_enum, default_value = "l2")]
    distance: DistanceArg,
    /// Half-width of the uniform initialization of embedding matrices.
    #[arg(long, default_value_t = 0.1)]
    init_scale: f64,
    /// Edge file delimiter: a single character, or `tab`.
    #[arg(long, default_value = "tab")]
    delimiter: String,
    /// Cutoff for the Hit@K figures in the report.
    #[arg(long, default_value_t = DEFAULT_HIT_K)]
    k: usize,
    #[command(flatten)]
    flags: TrainFlags,
}

pub fn train(a: TrainArgs, settings: &Settings) -> Result<()> {
    let resolved = a.flags.resolve(settings, DEFAULT_DIM)?;
    match resolved.precision {
        Precision::F32 => train_as::<f32>(&a, &resolved),
        Precision::F64 => train_as::<f64>(&a, &resolved),
    }
}

fn train_as<T: Scalar>(a: &TrainArgs, r: &crate::seq::Resolved) -> Result<()> {
    if a.init_scale.is_nan() || a.init_scale <= 0.0 {
        return Err(Error::InvalidArgument("init scale must be positive".into()));
    }
    let (fm, eds) = load_graph::<T>(&a.features, &a.edges, &a.delimiter, r.config.seed)?;
    let distance: DistanceKind = a.distance.into();

    let mut header = String::from("# transrec i2i-train\ncommand=i2i-train\n");
    let _ = write!(
        header,
        "model={}\nedges={}\nfeatures={}\ndelimiter={}\ndistance={}\ninit_scale={}\nhit_k={}\n",
        a.model.name(),
        a.edges.display(),
        a.features.display(),
        a.delimiter,
        distance.name(),
        a.init_scale,
        a.k
    );
    header.push_str(&r.to_kv());

    let result = grid_search(&r.lambdas, |&lambda| {
        let config = I2IConfig {
            train: TrainConfig {
                reg: Regularization::uniform(lambda),
                ..r.config.clone()
            },
            distance,
            init_scale: a.init_scale,
        };
        train_i2i(&eds, fm.clone(), a.model, &config)
    })?;
    let model = &result.best.model;
    let validation = model.evaluate(&eds, EdgeSplit::Validation, a.k)?;
    let test = model.evaluate(&eds, EdgeSplit::Test, a.k)?;

    let mut report = header.clone();
    let _ = write!(
        report,
        "items={}\nfeatures={}\nedges={}\ntrain_edges={}\nvalidation_edges={}\ntest_edges={}\nselected_lambda={}\nbest_iteration={}\n",
        eds.num_items(),
        fm.dim(),
        eds.len(),
        eds.edges(EdgeSplit::Train).count(),
        eds.edges(EdgeSplit::Validation).count(),
        eds.edges(EdgeSplit::Test).count(),
        result.best_params,
        result.best.report.best_iteration
    );
    report.push_str("\n[grid]\nlambda\tvalidation_auc\tbest_iteration\n");
    for p in &result.table {
        let _ = writeln!(report, "{}\t{:.6}\t{}", p.params, p.validation_auc, p.best_iteration);
    }
    report.push_str("\n[validation]\n");
    report.push_str(&validation.to_kv());
    report.push_str("\n[test]\n");
    report.push_str(&test.to_kv());
    report.push_str("\n[curve]\n");
    report.push_str(&result.best.report.to_tsv(false));

    create_dir(&a.out)?;
    ModelFile::item_to_item(model, fm.items().clone(), r.config.seed, header.clone()).save(a.out.join(MODEL_FILE))?;
    write(&a.out.join(REPORT_FILE), &report)?;
    let mut timings = header;
    timings.push_str("# wall-clock timings of the selected run; not reproducible\n");
    timings.push_str(&result.best.report.to_tsv(true));
    write(&a.out.join(TIMINGS_FILE), &timings)?;

    println!(
        "model={} lambda={} validation_auc={:.6} test_auc={:.6} test_hit_at_{}={:.6}",
        a.model.name(),
        result.best_params,
        validation.auc,
        test.auc,
        a.k,
        test.hit_at_k
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file written by i2i-train.
    #[arg(long)]
    model: PathBuf,
    /// The edge file the model was trained on.
    #[arg(long)]
    edges: PathBuf,
    /// The feature file the model was trained on.
    #[arg(long)]
    features: PathBuf,
    #[arg(long, default_value = "tab")]
    delimiter: String,
    #[arg(long, value_enum, default_value = "test")]
    split: EdgeSplitArg,
    /// Hit@K cutoff.
    #[arg(long, default_value_t = DEFAULT_HIT_K)]
    k: usize,
}

pub fn eval(a: EvalArgs) -> Result<()> {
    let bytes = std::fs::read(&a.model).map_err(|e| Error::io(&a.model, e))?;
    with_width!(bytes, eval_as(&bytes, &a))
}

fn eval_as<T: Scalar>(bytes: &[u8], a: &EvalArgs) -> Result<()> {
    let file = ModelFile::<T>::from_bytes(bytes)?;
    let params = match file.model {
        StoredModel::ItemToItem(p) => p,
        StoredModel::Sequential(_) => {
            return Err(Error::InvalidArgument(
                "expected an item-to-item model, found a sequential model".into(),
            ))
        }
    };
    let (fm, eds) = load_graph::<T>(&a.features, &a.edges, &a.delimiter, file.seed)?;
    if fm.items().ids() != file.items.ids() {
        return Err(Error::ShapeMismatch(
            "edges and features do not reproduce the model's item set".into(),
        ));
    }
    let model = params.bind(fm)?;
    let split = match a.split {
        EdgeSplitArg::Validation => EdgeSplit::Validation,
        EdgeSplitArg::Test => EdgeSplit::Test,
    };
    let report = model.evaluate(&eds, split, a.k)?;
    let mut out = String::new();
    for line in file.metadata.lines() {
        let prefix = if line.starts_with('#') { "" } else { "# " };
        let _ = writeln!(out, "{prefix}{line}");
    }
    let _ = write!(
        out,
        "command=i2i-eval\nmodel_file={}\nsplit={}\n",
        a.model.display(),
        match split {
            EdgeSplit::Validation => "validation",
            _ => "test",
        }
    );
    out.push_str(&report.to_kv());
    print!("{out}");
    Ok(())
}
