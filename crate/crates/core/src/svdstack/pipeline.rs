use serde::{Deserialize, Serialize};

use super::{
    derive_seed, svd1_embed, svd2_rotate, Layer, Objects, Provenance, Representation, Stage,
    SvdOptions,
};
use crate::corpus::{build_vocab, sample_trigrams, TokenizedCorpus, TrigramSample, Vocabulary};
use crate::error::Result;
use crate::vectors::{
    assemble_trigram_matrix_1layer, assemble_trigram_matrix_2layer, assemble_word_matrix,
    build_context_counts, normalize_rows, CountMatrix, TfIdfVariant,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub n_trigrams: usize,
    pub context_dims: usize,
    pub k: usize,
    pub seed: u64,
    pub tfidf: TfIdfVariant,
    /// Row-normalize assembled matrices before their SVD.
    pub normalize_concatenation: bool,
    pub svd: SvdOptions,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            n_trigrams: 100_000,
            context_dims: 250,
            k: 100,
            seed: 0,
            tfidf: TfIdfVariant::Standard,
            normalize_concatenation: true,
            svd: SvdOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub vocab: Vocabulary,
    pub trigrams: TrigramSample,
    /// Word-level embedding; two-layer runs only.
    pub word_embedding: Option<Representation>,
    pub svd1: Representation,
    pub svd2: Representation,
    /// All-zero rows of the trigram matrix fed to the first SVD.
    pub zero_input_rows: Vec<usize>,
}

// Seed streams for the independent random draws of one run.
const STREAM_TRIGRAM_SVD: u64 = 1;
const STREAM_WORD_SVD: u64 = 2;

fn prepare(m: CountMatrix, normalize: bool) -> CountMatrix {
    if normalize {
        normalize_rows(&m).matrix
    } else {
        m
    }
}

/// Word context vectors → six-block trigram matrix → SVD¹ → SVD².
pub fn pipeline_1layer(corpus: &TokenizedCorpus, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let vocab = build_vocab(corpus)?;
    let trigrams = sample_trigrams(corpus, cfg.n_trigrams, cfg.seed)?;
    let wv = build_context_counts(corpus, &vocab, cfg.context_dims)?.weighted(cfg.tfidf)?;
    let m = prepare(assemble_trigram_matrix_1layer(&trigrams, &wv)?, cfg.normalize_concatenation);
    let zero_input_rows = m.zero_rows();
    let prov = Provenance { stage: Stage::Svd1, layer: Layer::One, objects: Objects::Trigrams };
    let opts = cfg.svd.with_seed(derive_seed(cfg.seed, STREAM_TRIGRAM_SVD));
    let svd1 = svd1_embed(&m, cfg.k, prov, &opts)?;
    let svd2 = svd2_rotate(&svd1)?;
    Ok(PipelineOutput { vocab, trigrams, word_embedding: None, svd1, svd2, zero_input_rows })
}

/// Word matrix → word-level SVD¹ → three-block trigram matrix → SVD¹
/// truncated to `k` → SVD².
pub fn pipeline_2layer(corpus: &TokenizedCorpus, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    let vocab = build_vocab(corpus)?;
    let trigrams = sample_trigrams(corpus, cfg.n_trigrams, cfg.seed)?;
    let wv = build_context_counts(corpus, &vocab, cfg.context_dims)?.weighted(cfg.tfidf)?;

    let words = prepare(assemble_word_matrix(&wv)?, cfg.normalize_concatenation);
    let word_prov = Provenance { stage: Stage::Svd1, layer: Layer::Two, objects: Objects::Words };
    let word_opts = cfg.svd.with_seed(derive_seed(cfg.seed, STREAM_WORD_SVD));
    let word_embedding = svd1_embed(&words, cfg.k, word_prov, &word_opts)?;

    let m = prepare(
        assemble_trigram_matrix_2layer(&trigrams, &word_embedding)?,
        cfg.normalize_concatenation,
    );
    let zero_input_rows = m.zero_rows();
    let prov = Provenance { objects: Objects::Trigrams, ..word_prov };
    let opts = cfg.svd.with_seed(derive_seed(cfg.seed, STREAM_TRIGRAM_SVD));
    let svd1 = svd1_embed(&m, cfg.k, prov, &opts)?;
    let svd2 = svd2_rotate(&svd1)?;
    Ok(PipelineOutput {
        vocab,
        trigrams,
        word_embedding: Some(word_embedding),
        svd1,
        svd2,
        zero_input_rows,
    })
}
