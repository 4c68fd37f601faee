//! Sequential recommendation commands: prepare, train, eval, recommend.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};

use transrec::baselines::PRME_ALPHA_GRID;
use transrec::dataset::{
    build_sequences, core_filter, load_interactions, read_dataset, split_leave_one_out, write_dataset, Column,
    LoadOptions, MalformedPolicy, SequenceDataset,
};
use transrec::eval::{evaluate, Split, DEFAULT_HIT_K};
use transrec::persist::ModelFile;
use transrec::retrieval::{build_index, recommend as retrieve, recommend_exhaustive};
use transrec::training::{TrainConfig, LAMBDA_GRID};
use transrec::zoo::{select_model, AnyModel, ModelKind, ModelOptions};
use transrec::{Error, Result, Scalar};

use crate::settings::{format_list, parse_list, Settings};
use crate::{Precision, TrainFlags};

pub const DATASET_FILE: &str = "dataset.txt";
pub const MANIFEST_FILE: &str = "manifest.txt";
pub const MODEL_FILE: &str = "model.bin";
pub const REPORT_FILE: &str = "report.txt";
pub const TIMINGS_FILE: &str = "timings.tsv";

pub(crate) fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub(crate) fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Args)]
pub struct PrepareArgs {
    /// Interaction log (optionally gzip-compressed).
    #[arg(long)]
    input: PathBuf,
    /// Output directory for dataset.txt and manifest.txt.
    #[arg(long)]
    out: PathBuf,
    /// Field delimiter: a single character, or `tab`.
    #[arg(long, default_value = "tab")]
    delimiter: String,
    /// The first row is a header.
    #[arg(long)]
    header: bool,
    /// User column (index or header name).
    #[arg(long, default_value = "0")]
    user_col: String,
    /// Item column (index or header name).
    #[arg(long, default_value = "1")]
    item_col: String,
    /// Timestamp column (index or header name).
    #[arg(long, default_value = "2")]
    time_col: String,
    /// Minimum actions per user and per item (iterated to a fixed point).
    #[arg(long, default_value_t = 5)]
    min_count: usize,
    /// Skip malformed rows instead of failing.
    #[arg(long)]
    skip_malformed: bool,
}

fn parse_delimiter(s: &str) -> Result<u8> {
    match s {
        "tab" | "\\t" => Ok(b'\t'),
        "comma" => Ok(b','),
        "space" => Ok(b' '),
        _ if s.len() == 1 => Ok(s.as_bytes()[0]),
        _ => Err(Error::InvalidArgument(format!(
            "delimiter must be a single byte, got `{s}`"
        ))),
    }
}

pub fn prepare(a: PrepareArgs) -> Result<()> {
    let opts = LoadOptions {
        delimiter: parse_delimiter(&a.delimiter)?,
        has_header: a.header,
        user: a.user_col.parse::<Column>().expect("infallible"),
        item: a.item_col.parse::<Column>().expect("infallible"),
        timestamp: a.time_col.parse::<Column>().expect("infallible"),
        malformed: if a.skip_malformed {
            MalformedPolicy::Skip
        } else {
            MalformedPolicy::Fail
        },
    };
    let log = load_interactions(&a.input, &opts)?;
    let raw_actions = log.len();
    let skipped = log.skipped;
    let filtered = core_filter(log, a.min_count)?;
    let split = split_leave_one_out(build_sequences(&filtered.log)?);
    let ds = split.dataset;
    if ds.num_users() == 0 {
        return Err(Error::Empty(
            "no user has the three actions a leave-one-out split needs".into(),
        ));
    }

    create_dir(&a.out)?;
    write_dataset(&ds, a.out.join(DATASET_FILE))?;
    let mut m = String::from("# transrec prepare manifest\ncommand=prepare\n");
    let _ = write!(
        m,
        "input={}\ndelimiter={}\nheader={}\nuser_col={}\nitem_col={}\ntime_col={}\nmin_count={}\nmalformed={}\n",
        a.input.display(),
        a.delimiter,
        a.header,
        a.user_col,
        a.item_col,
        a.time_col,
        a.min_count,
        if a.skip_malformed { "skip" } else { "fail" }
    );
    let _ = write!(
        m,
        "raw_actions={raw_actions}\nskipped_rows={skipped}\nfilter_iterations={}\nfiltered_actions={}\ndropped_users={}\n",
        filtered.iterations,
        filtered.log.len(),
        split.dropped_users
    );
    m.push_str(&ds.stats().to_kv());
    let _ = writeln!(m, "training_transitions={}", ds.num_training_transitions());
    write(&a.out.join(MANIFEST_FILE), &m)?;
    print!("{m}");
    Ok(())
}

/// Reads a prepared dataset (a file, or a directory holding dataset.txt) and
/// applies the leave-one-out split.
pub fn load_prepared(path: &Path) -> Result<SequenceDataset> {
    let file = if path.is_dir() {
        path.join(DATASET_FILE)
    } else {
        path.to_path_buf()
    };
    let split = split_leave_one_out(read_dataset(&file)?);
    if split.dropped_users > 0 {
        log::warn!("{} users with fewer than three actions ignored", split.dropped_users);
    }
    Ok(split.dataset)
}

/// Training configuration after merging flags, config file and defaults.
pub struct Resolved {
    pub config: TrainConfig,
    pub lambdas: Vec<f64>,
    pub precision: Precision,
}

impl TrainFlags {
    pub fn resolve(&self, s: &Settings, default_dim: usize) -> Result<Resolved> {
        let d = TrainConfig::default();
        let config = TrainConfig {
            learning_rate: s.pick(self.learning_rate, "learning_rate", d.learning_rate)?,
            dim: s.pick(self.dim, "dim", default_dim)?,
            max_iterations: s.pick(self.max_iterations, "max_iterations", d.max_iterations)?,
            samples_per_iteration: s.pick_opt(self.samples_per_iteration, "samples_per_iteration")?,
            patience: s.pick(self.patience, "patience", d.patience)?,
            seed: s.pick(self.seed, "seed", d.seed)?,
            ..d
        };
        config.validate()?;
        let grid_list = s.pick_opt(self.lambda_grid.clone(), "lambda_grid")?;
        let lambdas = if let Some(list) = grid_list {
            parse_list(&list)?
        } else if self.grid || s.pick(None, "grid", false)? {
            LAMBDA_GRID.to_vec()
        } else {
            vec![s.pick(self.lambda, "lambda", 0.0)?]
        };
        if lambdas.is_empty() || lambdas.iter().any(|&l| l.is_nan() || l < 0.0) {
            return Err(Error::InvalidArgument(
                "regularization grid must be non-empty and non-negative".into(),
            ));
        }
        let precision = match self.precision {
            Some(p) => p,
            None => match s.pick(None, "precision", "f64".to_owned())?.as_str() {
                "f32" => Precision::F32,
                "f64" => Precision::F64,
                other => return Err(Error::InvalidArgument(format!("unknown precision `{other}`"))),
            },
        };
        Ok(Resolved {
            config,
            lambdas,
            precision,
        })
    }
}

impl Resolved {
    /// Resolved settings as `key=value` lines (regularization comes from the grid).
    pub fn to_kv(&self) -> String {
        let c = &self.config;
        format!(
            "precision={}\nlearning_rate={}\ndim={}\nmax_iterations={}\nsamples_per_iteration={}\npatience={}\nseed={}\nlambda_grid={}\n",
            match self.precision {
                Precision::F32 => "f32",
                Precision::F64 => "f64",
            },
            c.learning_rate,
            c.dim,
            c.max_iterations,
            c.samples_per_iteration.map_or_else(|| "epoch".to_owned(), |n| n.to_string()),
            c.patience,
            c.seed,
            format_list(&self.lambdas)
        )
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Prepared dataset (directory or dataset.txt).
    #[arg(long)]
    dataset: PathBuf,
    /// poprec | bprmf | fmc | fpmc | prme | hrm-avg | hrm-max | transrec-l1 | transrec-l2
    #[arg(long)]
    model: ModelKind,
    /// Output directory for model.bin, report.txt and timings.tsv.
    #[arg(long)]
    out: PathBuf,
    /// PRME mixing weight [default: 0.2, or the grid with --grid].
    #[arg(long, conflicts_with = "alpha_grid")]
    alpha: Option<f64>,
    /// Comma-separated PRME mixing-weight grid.
    #[arg(long)]
    alpha_grid: Option<String>,
    /// Disable the BPR-MF item bias.
    #[arg(long)]
    no_bprmf_bias: bool,
    /// Enable the FMC item bias.
    #[arg(long)]
    fmc_bias: bool,
    /// Cutoff for the Hit@K figures in the report.
    #[arg(long, default_value_t = DEFAULT_HIT_K)]
    k: usize,
    #[command(flatten)]
    flags: TrainFlags,
}

pub fn train(a: TrainArgs, settings: &Settings) -> Result<()> {
    let resolved = a.flags.resolve(settings, transrec::training::DEFAULT_DIM)?;
    match resolved.precision {
        Precision::F32 => train_as::<f32>(&a, settings, &resolved),
        Precision::F64 => train_as::<f64>(&a, settings, &resolved),
    }
}

fn train_as<T: Scalar>(a: &TrainArgs, settings: &Settings, r: &Resolved) -> Result<()> {
    let ds = load_prepared(&a.dataset)?;
    let alpha_list = settings.pick_opt(a.alpha_grid.clone(), "alpha_grid")?;
    let alphas = if let Some(list) = alpha_list {
        parse_list(&list)?
    } else if let Some(x) = settings.pick_opt(a.alpha, "alpha")? {
        vec![x]
    } else if a.flags.grid {
        PRME_ALPHA_GRID.to_vec()
    } else {
        vec![PRME_ALPHA_GRID[0]]
    };
    let options = ModelOptions {
        bprmf_item_bias: !a.no_bprmf_bias,
        fmc_item_bias: a.fmc_bias,
        ..ModelOptions::default()
    };

    let mut header = String::from("# transrec train\ncommand=train\n");
    let _ = write!(header, "model={}\ndataset={}\n", a.model, a.dataset.display());
    header.push_str(&r.to_kv());
    if a.model == ModelKind::Prme {
        let _ = writeln!(header, "alpha_grid={}", format_list(&alphas));
    }
    let _ = write!(
        header,
        "bprmf_item_bias={}\nfmc_item_bias={}\nhit_k={}\n",
        options.bprmf_item_bias, options.fmc_item_bias, a.k
    );

    let result = select_model::<T>(a.model, &ds, &r.config, &options, &r.lambdas, &alphas)?;
    let model = &result.best.model;
    let validation = evaluate(model, &ds, Split::Validation, a.k)?;
    let test = evaluate(model, &ds, Split::Test, a.k)?;

    let mut report = header.clone();
    let _ = write!(
        report,
        "selected_lambda={}\n{}",
        result.best_params.lambda,
        result
            .best_params
            .alpha
            .map_or_else(String::new, |x| format!("selected_alpha={x}\n"))
    );
    let _ = writeln!(report, "best_iteration={}", result.best.report.best_iteration);
    report.push_str("\n[grid]\nlambda\talpha\tvalidation_auc\tbest_iteration\n");
    for p in &result.table {
        let _ = writeln!(
            report,
            "{}\t{}\t{:.6}\t{}",
            p.params.lambda,
            p.params.alpha.map_or_else(|| "-".to_owned(), |x| x.to_string()),
            p.validation_auc,
            p.best_iteration
        );
    }
    report.push_str("\n[validation]\n");
    report.push_str(&validation.to_kv());
    report.push_str("\n[test]\n");
    report.push_str(&test.to_kv());
    report.push_str("\n[curve]\n");
    report.push_str(&result.best.report.to_tsv(false));

    create_dir(&a.out)?;
    let file = ModelFile::sequential(
        result.best.model.clone(),
        ds.users().clone(),
        ds.items().clone(),
        r.config.seed,
        header.clone(),
    );
    file.save(a.out.join(MODEL_FILE))?;
    write(&a.out.join(REPORT_FILE), &report)?;
    let mut timings = header;
    timings.push_str("# wall-clock timings of the selected run; not reproducible\n");
    timings.push_str(&result.best.report.to_tsv(true));
    write(&a.out.join(TIMINGS_FILE), &timings)?;

    println!(
        "model={} {} validation_auc={:.6} test_auc={:.6} test_hit_at_{}={:.6}",
        a.model, result.best_params, validation.auc, test.auc, a.k, test.hit_at_k
    );
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Validation,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Validation => Split::Validation,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// Prepared dataset the model was trained on.
    #[arg(long)]
    dataset: PathBuf,
    /// Hit@K cutoff.
    #[arg(long, default_value_t = DEFAULT_HIT_K)]
    k: usize,
    #[arg(long, value_enum, default_value = "test")]
    split: SplitArg,
    /// Also write per-user ranks (user_id, rank, candidates) to this file.
    #[arg(long)]
    ranks: Option<PathBuf>,
}

fn read_model_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// Dispatches on the scalar width stored in the model header.
macro_rules! with_width {
    ($bytes:expr, $f:ident ( $($arg:expr),* )) => {
        match transrec::persist::scalar_width(&$bytes)? {
            4 => $f::<f32>($($arg),*),
            8 => $f::<f64>($($arg),*),
            w => Err(Error::Corrupt(format!("unsupported scalar width {w}"))),
        }
    };
}
pub(crate) use with_width;

pub fn eval(a: EvalArgs) -> Result<()> {
    let bytes = read_model_bytes(&a.model)?;
    with_width!(bytes, eval_as(&bytes, &a))
}

fn eval_as<T: Scalar>(bytes: &[u8], a: &EvalArgs) -> Result<()> {
    let file = ModelFile::<T>::from_bytes(bytes)?;
    let model = file.as_sequential()?;
    let ds = load_prepared(&a.dataset)?;
    file.check_dataset(&ds)?;
    let split: Split = a.split.into();
    let report = evaluate(model, &ds, split, a.k)?;
    let mut out = String::new();
    for line in file.metadata.lines() {
        let prefix = if line.starts_with('#') { "" } else { "# " };
        let _ = writeln!(out, "{prefix}{line}");
    }
    let _ = write!(
        out,
        "command=eval\nmodel_file={}\neval_dataset={}\nsplit={}\n",
        a.model.display(),
        a.dataset.display(),
        split.name()
    );
    out.push_str(&report.to_kv());
    print!("{out}");
    if let Some(path) = &a.ranks {
        let mut t = String::from("user_id\trank\tcandidates\n");
        for r in &report.ranks {
            let _ = writeln!(t, "{}\t{}\t{}", ds.users().id(r.user), r.rank, r.candidates);
        }
        write(path, &t)?;
    }
    Ok(())
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    /// Model file written by `train`.
    #[arg(long)]
    model: PathBuf,
    /// User id.
    #[arg(long)]
    user: String,
    /// Id of the item the user interacted with last.
    #[arg(long)]
    prev_item: String,
    /// Number of items to return.
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Never return items the user has interacted with (needs --dataset).
    #[arg(long, requires = "dataset")]
    exclude_seen: bool,
    /// Prepared dataset supplying each user's history.
    #[arg(long)]
    dataset: Option<PathBuf>,
}

pub fn recommend(a: RecommendArgs) -> Result<()> {
    let bytes = read_model_bytes(&a.model)?;
    with_width!(bytes, recommend_as(&bytes, &a))
}

fn recommend_as<T: Scalar>(bytes: &[u8], a: &RecommendArgs) -> Result<()> {
    let file = ModelFile::<T>::from_bytes(bytes)?;
    let model = file.as_sequential()?;
    let user = file
        .users
        .get(&a.user)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown user `{}`", a.user)))?;
    let prev = file
        .items
        .get(&a.prev_item)
        .ok_or_else(|| Error::InvalidArgument(format!("unknown item `{}`", a.prev_item)))?;
    let seen = match &a.dataset {
        Some(path) if a.exclude_seen => {
            let ds = load_prepared(path)?;
            file.check_dataset(&ds)?;
            ds.user_items(user).to_vec()
        }
        _ => Vec::new(),
    };
    let hits = match model {
        AnyModel::TransRec(m) => retrieve(&build_index(m), m, user, prev, a.top, a.exclude_seen, &seen)?,
        other => recommend_exhaustive(other, user, prev, a.top, &seen)?,
    };
    let mut out = String::new();
    for (rank, (j, score)) in hits.into_iter().enumerate() {
        let _ = writeln!(out, "{}\t{}\t{}", rank + 1, file.items.id(j), score);
    }
    print!("{out}");
    Ok(())
}
