//! The `svdstack` command line.
//!
//! Every command that writes files first writes `<command>.manifest.json`
//! into the output directory with status `running`, then rewrites it with
//! status `complete` and the SHA-256 of every output. A manifest can be
//! passed back through `--config` to repeat a run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::{sample_word_pairs, tokenize, PairSampling, TrigramSample};
use crate::diagnostics::{
    column_correlations, compare_representations, focality_measure, histogram_csv,
    histogram_shift, log_abs_histogram, CoefficientSet, CorrelationSummary, Sidedness,
};
use crate::error::{Error, Result};
use crate::persist::{self, read_representation, write_atomic, write_json};
use crate::svdstack::{
    derive_seed, pipeline_1layer, pipeline_2layer, Layer, PipelineConfig, Representation,
};
use crate::vectors::TfIdfVariant;

const STREAM_PAIRS: u64 = 3;
pub const THREADS_ENV: &str = "SVDSTACK_THREADS";

#[derive(Debug, Parser)]
#[command(name = "svdstack", version, about = "Stacked-SVD trigram representations and diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build SVD¹ and SVD² trigram representations from a corpus.
    Embed(EmbedArgs),
    /// Correlation histograms of two representations and the shift between them.
    Diagnose(DiagnoseArgs),
    /// Compare two representations on sampled word-pair tasks.
    Discriminate(DiscriminateArgs),
    /// Smallest number of dimensions reaching a target accuracy on one pair.
    Focality(FocalityArgs),
    /// Recompute the output digests recorded in a manifest.
    Verify(VerifyArgs),
}

/// Run parameters. Unset flags fall back to `--config`, then to defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// Manifest of an earlier run to take parameters from.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus_path: Option<PathBuf>,
    /// Number of most frequent words used as left/right context features.
    #[arg(long)]
    pub context_dims: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n_trigrams: Option<usize>,
    #[arg(long)]
    pub n_pairs: Option<usize>,
    #[arg(long)]
    pub freq_lo: Option<u64>,
    #[arg(long)]
    pub freq_hi: Option<u64>,
    /// Minimum sampled trigrams centred on a word for it to enter a pair.
    #[arg(long)]
    pub min_occurrences: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub mode: Option<Layer>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub tfidf_variant: Option<TfIdfVariant>,
    /// Correlation coefficients entering the histograms.
    #[arg(long, value_enum)]
    pub diagonal_mode: Option<CoefficientSet>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_path: Option<PathBuf>,
    pub context_dims: usize,
    pub k: usize,
    pub n_trigrams: usize,
    pub n_pairs: usize,
    pub freq_lo: u64,
    pub freq_hi: u64,
    pub min_occurrences: usize,
    pub seed: u64,
    pub mode: Layer,
    pub output_dir: PathBuf,
    pub tfidf_variant: TfIdfVariant,
    pub diagonal_mode: CoefficientSet,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            corpus_path: None,
            context_dims: 250,
            k: 100,
            n_trigrams: 100_000,
            n_pairs: 100,
            freq_lo: 25,
            freq_hi: 250,
            min_occurrences: 2,
            seed: 0,
            mode: Layer::One,
            output_dir: PathBuf::from("out"),
            tfidf_variant: TfIdfVariant::Standard,
            diagonal_mode: CoefficientSet::All,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("context-dims", self.context_dims),
            ("k", self.k),
            ("n-trigrams", self.n_trigrams),
            ("n-pairs", self.n_pairs),
            ("min-occurrences", self.min_occurrences),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("--{name} must be positive")));
        }
        if self.freq_lo == 0 || self.freq_lo > self.freq_hi {
            return Err(Error::Config(format!(
                "need 0 < freq-lo <= freq-hi, got {} and {}",
                self.freq_lo, self.freq_hi
            )));
        }
        Ok(())
    }
}

impl RunArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let base = match &self.config {
            Some(path) => persist::read_json::<Manifest>(path)?.config,
            None => RunConfig::default(),
        };
        let cfg = RunConfig {
            corpus_path: self.corpus_path.clone().or(base.corpus_path),
            context_dims: self.context_dims.unwrap_or(base.context_dims),
            k: self.k.unwrap_or(base.k),
            n_trigrams: self.n_trigrams.unwrap_or(base.n_trigrams),
            n_pairs: self.n_pairs.unwrap_or(base.n_pairs),
            freq_lo: self.freq_lo.unwrap_or(base.freq_lo),
            freq_hi: self.freq_hi.unwrap_or(base.freq_hi),
            min_occurrences: self.min_occurrences.unwrap_or(base.min_occurrences),
            seed: self.seed.unwrap_or(base.seed),
            mode: self.mode.unwrap_or(base.mode),
            output_dir: self.output_dir.clone().unwrap_or(base.output_dir),
            tfidf_variant: self.tfidf_variant.unwrap_or(base.tfidf_variant),
            diagonal_mode: self.diagonal_mode.unwrap_or(base.diagonal_mode),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    pub rep_a: PathBuf,
    #[arg(long)]
    pub rep_b: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    pub bin_width: f64,
    /// Coefficients with |c| below this are counted separately.
    #[arg(long, default_value_t = 1e-12)]
    pub floor: f64,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct DiscriminateArgs {
    #[arg(long)]
    pub rep_a: PathBuf,
    #[arg(long)]
    pub rep_b: PathBuf,
    /// Vocabulary TSV; defaults to `vocab.tsv` next to `--rep-a`.
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Sidedness::TwoSided)]
    pub sidedness: Sidedness,
    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct FocalityArgs {
    #[arg(long)]
    pub rep: PathBuf,
    #[arg(long, num_args = 2, value_names = ["WORD_A", "WORD_B"])]
    pub pair: Vec<String>,
    #[arg(long)]
    pub theta: f64,
    #[arg(long, default_value_t = 2)]
    pub max_subset: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub manifest: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunStatus {
    Running,
    Complete,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Parameters, input digests and output digests of one command run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub status: RunStatus,
    pub config: RunConfig,
    #[serde(default)]
    pub inputs: BTreeMap<String, FileDigest>,
    /// Output file name (relative to the manifest) → SHA-256.
    #[serde(default)]
    pub outputs: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extra: BTreeMap<String, serde_json::Value>,
}

impl Manifest {
    fn start(command: &str, config: &RunConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            status: RunStatus::Running,
            config: config.clone(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            extra: BTreeMap::new(),
        }
    }

    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    fn add_input(&mut self, name: &str, path: &Path) -> Result<()> {
        let sha256 = sha256_file(path)?;
        self.inputs.insert(name.into(), FileDigest { path: path.to_path_buf(), sha256 });
        Ok(())
    }

    /// Hashes `files` (relative to `dir`), marks the run complete and
    /// rewrites the manifest.
    fn finish(&mut self, dir: &Path, files: &[String]) -> Result<()> {
        for f in files {
            self.outputs.insert(f.clone(), sha256_file(&dir.join(f))?);
        }
        self.status = RunStatus::Complete;
        write_json(&dir.join(Self::file_name(&self.command)), self)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(sha256_hex(&fs::read(path).map_err(|e| Error::io(path, e))?))
}

fn prepare_output_dir(cfg: &RunConfig) -> Result<&Path> {
    let dir = cfg.output_dir.as_path();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    Ok(dir)
}

/// Writes a MAT1 file, returning its name and its sidecar's name.
fn write_rep(
    rep: &Representation,
    dir: &Path,
    name: &str,
    labels: &str,
    cfg: &RunConfig,
) -> Result<Vec<String>> {
    let mut params = BTreeMap::new();
    params.insert("context_dims".into(), cfg.context_dims.into());
    params.insert("n_trigrams".into(), cfg.n_trigrams.into());
    params.insert("tfidf_variant".into(), serde_json::to_value(cfg.tfidf_variant).unwrap_or_default());
    persist::write_representation(rep, &dir.join(name), labels, cfg.seed, params)?;
    let side = persist::sidecar_path(Path::new(name));
    Ok(vec![name.to_string(), side.to_string_lossy().into_owned()])
}

pub fn cmd_embed(cfg: &RunConfig) -> Result<Manifest> {
    let corpus_path = cfg
        .corpus_path
        .as_deref()
        .ok_or_else(|| Error::Config("--corpus-path is required".into()))?;
    let dir = prepare_output_dir(cfg)?;
    let mut manifest = Manifest::start("embed", cfg);
    manifest.add_input("corpus", corpus_path)?;
    write_json(&dir.join(Manifest::file_name("embed")), &manifest)?;

    let raw = fs::read(corpus_path).map_err(|e| Error::io(corpus_path, e))?;
    let corpus = tokenize(&raw, corpus_path.display().to_string())?;
    let pc = PipelineConfig {
        n_trigrams: cfg.n_trigrams,
        context_dims: cfg.context_dims,
        k: cfg.k,
        seed: cfg.seed,
        tfidf: cfg.tfidf_variant,
        ..PipelineConfig::default()
    };
    let out = match cfg.mode {
        Layer::One => pipeline_1layer(&corpus, &pc)?,
        Layer::Two => pipeline_2layer(&corpus, &pc)?,
    };

    persist::write_vocab(&out.vocab, &dir.join("vocab.tsv"))?;
    persist::write_trigrams(&out.trigrams, &dir.join("trigrams.tsv"))?;
    let mut files = vec!["vocab.tsv".to_string(), "trigrams.tsv".to_string()];
    files.extend(write_rep(&out.svd1, dir, "svd1.mat", "trigrams.tsv", cfg)?);
    files.extend(write_rep(&out.svd2, dir, "svd2.mat", "trigrams.tsv", cfg)?);
    if let Some(words) = &out.word_embedding {
        files.extend(write_rep(words, dir, "word_svd1.mat", "vocab.tsv", cfg)?);
    }
    manifest.extra.insert("vocabulary_size".into(), out.vocab.len().into());
    manifest.extra.insert("zero_input_rows".into(), out.zero_input_rows.len().into());
    manifest.finish(dir, &files)?;
    Ok(manifest)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShiftReport {
    pub rep_a: PathBuf,
    pub rep_b: PathBuf,
    /// Off-diagonal mean of `log10 |c|` of A minus that of B; positive when
    /// B lies to the left.
    pub shift: f64,
    pub summary_a: CorrelationSummary,
    pub summary_b: CorrelationSummary,
}

pub fn cmd_diagnose(args: &DiagnoseArgs, cfg: &RunConfig) -> Result<ShiftReport> {
    let dir = prepare_output_dir(cfg)?;
    let mut manifest = Manifest::start("diagnose", cfg);
    manifest.add_input("rep_a", &args.rep_a)?;
    manifest.add_input("rep_b", &args.rep_b)?;
    manifest.extra.insert("bin_width".into(), args.bin_width.into());
    manifest.extra.insert("floor".into(), args.floor.into());
    write_json(&dir.join(Manifest::file_name("diagnose")), &manifest)?;

    let (a, _) = read_representation(&args.rep_a)?;
    let (b, _) = read_representation(&args.rep_b)?;
    if a.k() != b.k() {
        return Err(Error::Shape(format!(
            "{} has k = {} but {} has k = {}",
            args.rep_a.display(),
            a.k(),
            args.rep_b.display(),
            b.k()
        )));
    }
    let summarize = |rep: &Representation| {
        log_abs_histogram(&column_correlations(rep)?, args.bin_width, args.floor, cfg.diagonal_mode)
    };
    let summary_a = summarize(&a)?;
    let summary_b = summarize(&b)?;
    let report = ShiftReport {
        rep_a: args.rep_a.clone(),
        rep_b: args.rep_b.clone(),
        shift: histogram_shift(&summary_a, &summary_b)?,
        summary_a,
        summary_b,
    };
    write_atomic(&dir.join("histogram_a.csv"), histogram_csv(&report.summary_a).as_bytes())?;
    write_atomic(&dir.join("histogram_b.csv"), histogram_csv(&report.summary_b).as_bytes())?;
    write_json(&dir.join("shift.json"), &report)?;
    manifest.finish(dir, &["histogram_a.csv".into(), "histogram_b.csv".into(), "shift.json".into()])?;
    Ok(report)
}

/// Rebuilds the trigram sample from a representation's row labels.
pub fn sample_from_labels(rep: &Representation) -> Result<TrigramSample> {
    let trigrams = rep
        .row_labels
        .iter()
        .map(|label| {
            let words: Vec<&str> = label.split(' ').collect();
            match words.as_slice() {
                [a, b, c] => Ok([a.to_string(), b.to_string(), c.to_string()]),
                _ => Err(Error::Shape(format!("row label `{label}` is not a trigram"))),
            }
        })
        .collect::<Result<Vec<_>>>()?;
    if trigrams.len() != rep.nrows() {
        return Err(Error::Shape("representation has no trigram row labels".into()));
    }
    let requested = trigrams.len();
    Ok(TrigramSample { trigrams, seed: 0, requested })
}

pub fn cmd_discriminate(
    args: &DiscriminateArgs,
    cfg: &RunConfig,
) -> Result<crate::diagnostics::DiscriminationReport> {
    let dir = prepare_output_dir(cfg)?;
    let vocab_path = args.vocab.clone().unwrap_or_else(|| {
        args.rep_a.parent().unwrap_or(Path::new(".")).join("vocab.tsv")
    });
    let mut manifest = Manifest::start("discriminate", cfg);
    manifest.add_input("rep_a", &args.rep_a)?;
    manifest.add_input("rep_b", &args.rep_b)?;
    manifest.add_input("vocab", &vocab_path)?;
    manifest.extra.insert("sidedness".into(), serde_json::to_value(args.sidedness).unwrap_or_default());
    write_json(&dir.join(Manifest::file_name("discriminate")), &manifest)?;

    let (a, _) = read_representation(&args.rep_a)?;
    let (b, _) = read_representation(&args.rep_b)?;
    let vocab = persist::read_vocab(&vocab_path)?;
    let trigrams = sample_from_labels(&a)?;
    let pairs = sample_word_pairs(
        &vocab,
        &trigrams,
        PairSampling {
            n_pairs: cfg.n_pairs,
            freq_lo: cfg.freq_lo,
            freq_hi: cfg.freq_hi,
            min_occurrences: cfg.min_occurrences,
            seed: derive_seed(cfg.seed, STREAM_PAIRS),
        },
    )?;
    let report = compare_representations(&a, &b, &trigrams, &pairs, args.sidedness)?;
    write_json(&dir.join("discrimination.json"), &report)?;
    manifest.finish(dir, &["discrimination.json".into()])?;
    Ok(report)
}

pub fn cmd_focality(args: &FocalityArgs) -> Result<crate::diagnostics::FocalityResult> {
    let (rep, _) = read_representation(&args.rep)?;
    let trigrams = sample_from_labels(&rep)?;
    focality_measure(&rep, &trigrams, (&args.pair[0], &args.pair[1]), args.theta, args.max_subset)
}

/// Returns the names of outputs whose digest no longer matches.
pub fn cmd_verify(args: &VerifyArgs) -> Result<Vec<String>> {
    let manifest: Manifest = persist::read_json(&args.manifest)?;
    let dir = args.manifest.parent().unwrap_or(Path::new("."));
    let mut bad = Vec::new();
    for (name, digest) in &manifest.outputs {
        let path = dir.join(name);
        if !path.exists() || sha256_file(&path)? != *digest {
            bad.push(name.clone());
        }
    }
    Ok(bad)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Json { path: PathBuf::from("<stdout>"), source: e })?;
    println!("{text}");
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Embed(args) => {
            let cfg = args.run.resolve()?;
            let m = cmd_embed(&cfg)?;
            for (name, digest) in &m.outputs {
                println!("{digest}  {}", cfg.output_dir.join(name).display());
            }
        }
        Command::Diagnose(args) => {
            let cfg = args.run.resolve()?;
            let r = cmd_diagnose(&args, &cfg)?;
            println!("shift {}", r.shift);
        }
        Command::Discriminate(args) => {
            let cfg = args.run.resolve()?;
            let r = cmd_discriminate(&args, &cfg)?;
            println!("wins {} ties {} losses {} p {}", r.wins_a, r.ties, r.wins_b, r.p_value);
        }
        Command::Focality(args) => print_json(&cmd_focality(&args)?)?,
        Command::Verify(args) => {
            let bad = cmd_verify(&args)?;
            if let Some(first) = bad.first() {
                return Err(Error::DigestMismatch { path: PathBuf::from(first) });
            }
            println!("ok");
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{THREADS_ENV} must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(e.to_string()))
}

/// Process entry point: exit code 0 on success, 1 for usage errors, 2 for
/// data errors and 3 for numeric errors.
pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = RunConfig { freq_lo: 300, ..RunConfig::default() };
        assert_eq!(bad.validate().unwrap_err().exit_code(), 1);
        let zero = RunConfig { k: 0, ..RunConfig::default() };
        assert!(zero.validate().is_err());
    }

    #[test]
    fn flags_override_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        let cfg = RunConfig { k: 7, seed: 9, ..RunConfig::default() };
        write_json(&path, &Manifest::start("embed", &cfg)).unwrap();
        let args = RunArgs { config: Some(path), seed: Some(11), ..RunArgs::default() };
        let resolved = args.resolve().unwrap();
        assert_eq!((resolved.k, resolved.seed), (7, 11));
    }

    #[test]
    fn flag_names_are_kebab_case() {
        let cli = Cli::try_parse_from([
            "svdstack", "embed", "--corpus-path", "c.txt", "--context-dims", "10", "--k", "5",
            "--n-trigrams", "50", "--n-pairs", "3", "--freq-lo", "2", "--freq-hi", "9",
            "--min-occurrences", "1", "--seed", "4", "--mode", "2layer", "--output-dir", "o",
            "--tfidf-variant", "smooth", "--diagonal-mode", "off-diagonal",
        ])
        .unwrap();
        let Command::Embed(args) = cli.command else { panic!("not embed") };
        let cfg = args.run.resolve().unwrap();
        assert_eq!(cfg.mode, Layer::Two);
        assert_eq!(cfg.diagonal_mode, CoefficientSet::OffDiagonal);
        assert_eq!(cfg.tfidf_variant, TfIdfVariant::Smooth);
    }
}
