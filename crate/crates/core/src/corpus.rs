//! Corpus ingestion, vocabulary construction and seeded sampling of
//! trigrams and evaluation word pairs.

use std::collections::{BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::error::{Error, Result};

/// Sentences of lowercased tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedCorpus {
    pub sentences: Vec<Vec<String>>,
    pub source_id: String,
}

impl TokenizedCorpus {
    pub fn num_tokens(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Splits raw UTF-8 text, one sentence per line, into tokens.
///
/// Tokens are lowercased. Every character that is neither alphanumeric nor
/// whitespace becomes a standalone token, except an apostrophe or hyphen with
/// alphanumeric characters on both sides, which stays inside its word
/// (`he's`, `co-writer`). Lines without tokens are dropped.
pub fn tokenize(raw: &[u8], source_id: impl Into<String>) -> Result<TokenizedCorpus> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Ingest { offset: e.valid_up_to() })?;
    let sentences = text
        .lines()
        .map(tokenize_line)
        .filter(|s| !s.is_empty())
        .collect();
    Ok(TokenizedCorpus { sentences, source_id: source_id.into() })
}

fn tokenize_line(line: &str) -> Vec<String> {
    let chars: Vec<char> = line.chars().collect();
    let mut tokens = Vec::new();
    let mut current = String::new();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_whitespace() {
            flush(&mut current, &mut tokens);
        } else if c.is_alphanumeric() {
            current.extend(c.to_lowercase());
        } else {
            let joiner = matches!(c, '\'' | '-')
                && i > 0
                && chars[i - 1].is_alphanumeric()
                && chars.get(i + 1).is_some_and(|n| n.is_alphanumeric());
            if joiner {
                current.push(c);
            } else {
                flush(&mut current, &mut tokens);
                tokens.push(c.to_lowercase().collect());
            }
        }
    }
    flush(&mut current, &mut tokens);
    tokens
}

fn flush(current: &mut String, tokens: &mut Vec<String>) {
    if !current.is_empty() {
        tokens.push(std::mem::take(current));
    }
}

/// Word types with corpus frequencies, ordered by frequency rank.
///
/// `words()[i]` has rank `i + 1`. Ranks are assigned by descending frequency
/// with ties broken by ascending lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    words: Vec<String>,
    freqs: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from `(word, freq)` entries in any order.
    pub fn from_counts(counts: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut entries: Vec<(String, u64)> = counts.into_iter().collect();
        entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let (words, freqs) = entries.into_iter().unzip();
        Vocabulary { words, freqs, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Words in rank order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Frequencies aligned with [`Vocabulary::words`].
    pub fn freqs(&self) -> &[u64] {
        &self.freqs
    }

    /// Zero-based row index of `word` (its rank minus one).
    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// One-based frequency rank.
    pub fn rank(&self, word: &str) -> Option<usize> {
        self.index_of(word).map(|i| i + 1)
    }

    pub fn freq(&self, word: &str) -> Option<u64> {
        self.index_of(word).map(|i| self.freqs[i])
    }
}

pub fn build_vocab(corpus: &TokenizedCorpus) -> Result<Vocabulary> {
    if corpus.num_tokens() == 0 {
        return Err(Error::EmptyCorpus);
    }
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for tok in corpus.sentences.iter().flatten() {
        *counts.entry(tok.as_str()).or_default() += 1;
    }
    Ok(Vocabulary::from_counts(counts.into_iter().map(|(w, c)| (w.to_string(), c))))
}

pub type Trigram = [String; 3];

/// Joins a trigram into its row label, `w1 w2 w3`.
pub fn trigram_label(t: &Trigram) -> String {
    t.join(" ")
}

/// Distinct trigram types drawn without replacement, lexicographically sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrigramSample {
    pub trigrams: Vec<Trigram>,
    pub seed: u64,
    pub requested: usize,
}

impl TrigramSample {
    pub fn len(&self) -> usize {
        self.trigrams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.trigrams.is_empty()
    }

    /// Number of sampled trigrams with each word as the central word.
    pub fn central_counts(&self) -> HashMap<&str, usize> {
        let mut counts = HashMap::new();
        for t in &self.trigrams {
            *counts.entry(t[1].as_str()).or_default() += 1;
        }
        counts
    }

    /// Row indices whose central word is `word`.
    pub fn rows_with_center(&self, word: &str) -> Vec<usize> {
        self.trigrams
            .iter()
            .enumerate()
            .filter(|(_, t)| t[1] == word)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn labels(&self) -> Vec<String> {
        self.trigrams.iter().map(trigram_label).collect()
    }
}

/// All distinct contiguous within-sentence trigram types, sorted.
pub fn distinct_trigrams(corpus: &TokenizedCorpus) -> Vec<[&str; 3]> {
    let set: BTreeSet<[&str; 3]> = corpus
        .sentences
        .iter()
        .flat_map(|s| s.windows(3).map(|w| [w[0].as_str(), w[1].as_str(), w[2].as_str()]))
        .collect();
    set.into_iter().collect()
}

pub fn sample_trigrams(corpus: &TokenizedCorpus, n: usize, seed: u64) -> Result<TrigramSample> {
    let all = distinct_trigrams(corpus);
    if all.len() < n {
        return Err(Error::NotEnoughTrigrams { requested: n, available: all.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = rand::seq::index::sample(&mut rng, all.len(), n).into_vec();
    picked.sort_unstable();
    let trigrams = picked
        .into_iter()
        .map(|i| all[i].map(str::to_string))
        .collect();
    Ok(TrigramSample { trigrams, seed, requested: n })
}

/// Word pairs for the discrimination task.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WordPairSet {
    pub pairs: Vec<(String, String)>,
    pub freq_lo: u64,
    pub freq_hi: u64,
    pub min_occurrences: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairSampling {
    pub n_pairs: usize,
    pub freq_lo: u64,
    pub freq_hi: u64,
    pub min_occurrences: usize,
    pub seed: u64,
}

/// Words whose corpus frequency lies in `[freq_lo, freq_hi]` and that are the
/// central word of at least `min_occurrences` sampled trigrams, in rank order.
pub fn eligible_words<'a>(
    vocab: &'a Vocabulary,
    trigrams: &TrigramSample,
    freq_lo: u64,
    freq_hi: u64,
    min_occurrences: usize,
) -> Vec<&'a str> {
    let central = trigrams.central_counts();
    vocab
        .words()
        .iter()
        .zip(vocab.freqs())
        .filter(|(w, &f)| {
            (freq_lo..=freq_hi).contains(&f)
                && central.get(w.as_str()).copied().unwrap_or(0) >= min_occurrences
        })
        .map(|(w, _)| w.as_str())
        .collect()
}

pub fn sample_word_pairs(
    vocab: &Vocabulary,
    trigrams: &TrigramSample,
    params: PairSampling,
) -> Result<WordPairSet> {
    let eligible = eligible_words(
        vocab,
        trigrams,
        params.freq_lo,
        params.freq_hi,
        params.min_occurrences,
    );
    let needed = 2 * params.n_pairs;
    if eligible.len() < needed {
        return Err(Error::NotEnoughEligibleWords { needed, eligible: eligible.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut chosen: Vec<&str> = rand::seq::index::sample(&mut rng, eligible.len(), needed)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.shuffle(&mut rng);
    let pairs = chosen
        .chunks_exact(2)
        .map(|p| (p[0].to_string(), p[1].to_string()))
        .collect();
    Ok(WordPairSet {
        pairs,
        freq_lo: params.freq_lo,
        freq_hi: params.freq_hi,
        min_occurrences: params.min_occurrences,
        seed: params.seed,
    })
}
