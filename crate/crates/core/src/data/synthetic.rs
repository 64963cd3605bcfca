//! A small deterministic spam/ham corpus with two spam clusters.
//!
//! Ham messages draw from a ham vocabulary. "Core" spam uses its own
//! vocabulary only; "borderline" spam mixes ham words with a separate set of
//! spam words. Both draws are Zipf-distributed over their vocabularies.

use rand::Rng as _;
use rand_distr::{Distribution, Zipf};
use serde::{Deserialize, Serialize};

use crate::data::text::TextCorpus;
use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticTextConfig {
    pub n_ham: usize,
    pub n_spam: usize,
    /// Share of spam drawn from the borderline cluster.
    pub borderline_share: f64,
    /// Share of borderline tokens taken from the ham vocabulary.
    pub borderline_ham_words: f64,
    pub ham_vocab: usize,
    pub core_vocab: usize,
    pub edge_vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
}

impl Default for SyntheticTextConfig {
    fn default() -> Self {
        Self {
            n_ham: 1300,
            n_spam: 240,
            borderline_share: 0.5,
            borderline_ham_words: 0.6,
            ham_vocab: 400,
            core_vocab: 80,
            edge_vocab: 80,
            min_len: 6,
            max_len: 14,
            seed: 2024,
        }
    }
}

/// Ham is label 0, spam label 1. Rows are interleaved deterministically.
pub fn synthetic_spam_corpus(cfg: &SyntheticTextConfig) -> Result<TextCorpus> {
    if cfg.n_ham == 0 || cfg.n_spam == 0 {
        return Err(Error::EmptyCorpus);
    }
    if cfg.min_len == 0 || cfg.min_len > cfg.max_len {
        return Err(Error::invalid("need 1 <= min_len <= max_len"));
    }
    if !(0.0..=1.0).contains(&cfg.borderline_share) || !(0.0..=1.0).contains(&cfg.borderline_ham_words) {
        return Err(Error::invalid("shares must lie in [0, 1]"));
    }
    let zipf = |n: usize| Zipf::new(n.max(1) as f64, 1.1).map_err(|e| Error::invalid(e.to_string()));
    let (ham, core, edge) = (zipf(cfg.ham_vocab)?, zipf(cfg.core_vocab)?, zipf(cfg.edge_vocab)?);
    let mut rng = rng_from_seed(cfg.seed);

    let n = cfg.n_ham + cfg.n_spam;
    let n_border = (cfg.borderline_share * cfg.n_spam as f64).round() as usize;
    let mut corpus = TextCorpus::default();
    let mut spams = 0;
    for i in 0..n {
        let is_spam = spread(i, n, cfg.n_spam);
        let len = rng.random_range(cfg.min_len..=cfg.max_len);
        let words: Vec<String> = if !is_spam {
            (0..len).map(|_| format!("ham{}", ham.sample(&mut rng) as u64)).collect()
        } else if spread(spams, cfg.n_spam, n_border) {
            (0..len)
                .map(|_| {
                    if rng.random::<f64>() < cfg.borderline_ham_words {
                        format!("ham{}", ham.sample(&mut rng) as u64)
                    } else {
                        format!("edge{}", edge.sample(&mut rng) as u64)
                    }
                })
                .collect()
        } else {
            (0..len).map(|_| format!("core{}", core.sample(&mut rng) as u64)).collect()
        };
        spams += usize::from(is_spam);
        corpus.ids.push(format!("syn{i:05}"));
        corpus.labels.push(usize::from(is_spam));
        corpus.texts.push(words.join(" "));
    }
    Ok(corpus)
}

/// Marks `k` of the positions `0..n` as evenly spaced as integers allow.
fn spread(i: usize, n: usize, k: usize) -> bool {
    (i + 1) * k / n > i * k / n
}
