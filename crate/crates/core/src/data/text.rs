use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::Path;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::data::dataset::{Group, LabeledDataset};
use crate::data::stopwords::STOPWORDS;
use crate::error::{Error, Result};
use crate::matrix::{CsrMatrix, FeatureMatrix};

/// Labeled documents with stable identifiers.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TextCorpus {
    pub ids: Vec<String>,
    pub labels: Vec<usize>,
    pub texts: Vec<String>,
}

impl TextCorpus {
    pub fn len(&self) -> usize {
        self.texts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.texts.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> TextCorpus {
        TextCorpus {
            ids: rows.iter().map(|&r| self.ids[r].clone()).collect(),
            labels: rows.iter().map(|&r| self.labels[r]).collect(),
            texts: rows.iter().map(|&r| self.texts[r].clone()).collect(),
        }
    }

    /// Rows whose label equals `p1_label` form the forget group.
    pub fn groups(&self, p1_label: usize) -> Vec<Group> {
        self.labels
            .iter()
            .map(|&l| if l == p1_label { Group::P1 } else { Group::P2 })
            .collect()
    }
}

fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('t') => out.push('\t'),
                Some('n') => out.push('\n'),
                Some('\\') => out.push('\\'),
                Some(other) => {
                    out.push('\\');
                    out.push(other);
                }
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

pub fn escape_text(text: &str) -> String {
    text.replace('\\', "\\\\").replace('\t', "\\t").replace('\n', "\\n")
}

/// Reads `id <TAB> label <TAB> text` lines; tabs and newlines inside the text
/// are written as `\t` and `\n`.
pub fn load_text_tsv(path: &Path) -> Result<TextCorpus> {
    let raw = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut corpus = TextCorpus {
        ids: Vec::new(),
        labels: Vec::new(),
        texts: Vec::new(),
    };
    for (i, line) in raw.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(3, '\t');
        let (id, label, text) = match (parts.next(), parts.next(), parts.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(Error::Parse {
                    location: format!("{}:{}", path.display(), i + 1),
                    message: "expected three tab-separated fields".into(),
                })
            }
        };
        let label = label.trim().parse().map_err(|_| Error::Parse {
            location: format!("{}:{}", path.display(), i + 1),
            message: format!("`{label}` is not a non-negative integer label"),
        })?;
        corpus.ids.push(id.to_string());
        corpus.labels.push(label);
        corpus.texts.push(unescape(text));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

pub fn write_text_tsv(corpus: &TextCorpus, path: &Path) -> Result<()> {
    let mut out = String::new();
    for i in 0..corpus.len() {
        out += &format!("{}\t{}\t{}\n", corpus.ids[i], corpus.labels[i], escape_text(&corpus.texts[i]));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads the UCI SMS Spam Collection layout: `ham|spam <TAB> text` per line.
/// Spam is label 1; ids are 1-based line numbers.
pub fn load_sms_collection(path: &Path) -> Result<TextCorpus> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let raw = String::from_utf8_lossy(&bytes);
    let mut corpus = TextCorpus {
        ids: Vec::new(),
        labels: Vec::new(),
        texts: Vec::new(),
    };
    for (i, line) in raw.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let (tag, text) = line.split_once('\t').ok_or_else(|| Error::Parse {
            location: format!("{}:{}", path.display(), i + 1),
            message: "expected `ham` or `spam`, a tab, then the message".into(),
        })?;
        let label = match tag.trim() {
            "ham" => 0,
            "spam" => 1,
            other => {
                return Err(Error::Parse {
                    location: format!("{}:{}", path.display(), i + 1),
                    message: format!("unknown class tag `{other}`"),
                })
            }
        };
        corpus.ids.push((i + 1).to_string());
        corpus.labels.push(label);
        corpus.texts.push(text.to_string());
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(corpus)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TfidfConfig {
    pub max_features: usize,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub sublinear_tf: bool,
    pub min_df: usize,
    pub lowercase: bool,
    pub stopword_removal: bool,
}

impl Default for TfidfConfig {
    fn default() -> Self {
        Self::sms()
    }
}

impl TfidfConfig {
    /// 20K features, uni- and bigrams, stopword removal.
    pub fn sms() -> Self {
        Self {
            max_features: 20_000,
            ngram_min: 1,
            ngram_max: 2,
            sublinear_tf: false,
            min_df: 1,
            lowercase: true,
            stopword_removal: true,
        }
    }

    /// 40K features, uni- and bigrams, sublinear tf, min_df 5.
    pub fn jigsaw() -> Self {
        Self {
            max_features: 40_000,
            ngram_min: 1,
            ngram_max: 2,
            sublinear_tf: true,
            min_df: 5,
            lowercase: true,
            stopword_removal: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1 <= self.ngram_min && self.ngram_min <= self.ngram_max && self.ngram_max <= 2) {
            return Err(Error::Config(format!(
                "need 1 <= ngram_min <= ngram_max <= 2, got {}..{}",
                self.ngram_min, self.ngram_max
            )));
        }
        if self.max_features == 0 || self.min_df == 0 {
            return Err(Error::Config("max_features and min_df must be at least 1".into()));
        }
        Ok(())
    }
}

fn stopword_set() -> &'static HashSet<&'static str> {
    static SET: OnceLock<HashSet<&'static str>> = OnceLock::new();
    SET.get_or_init(|| STOPWORDS.iter().copied().collect())
}

/// Lowercase (optionally), split on runs of non-alphanumeric characters,
/// drop stopwords (optionally), then join adjacent tokens into n-grams.
pub fn ngrams(text: &str, config: &TfidfConfig) -> Vec<String> {
    let text = if config.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    let stop = stopword_set();
    let tokens: Vec<&str> = text
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .filter(|t| !(config.stopword_removal && stop.contains(t)))
        .collect();
    let mut out = Vec::new();
    for n in config.ngram_min..=config.ngram_max {
        for w in tokens.windows(n) {
            out.push(w.join(" "));
        }
    }
    out
}

/// Fitted vocabulary and inverse document frequencies.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    config: TfidfConfig,
    vocabulary: Vec<String>,
    idf: Vec<f64>,
    index: HashMap<String, u32>,
}

/// Output of a TF-IDF transform.
#[derive(Debug, Clone, PartialEq)]
pub struct TfidfMatrix {
    pub matrix: CsrMatrix,
    /// Rows with no in-vocabulary term; they stay all-zero.
    pub empty_rows: Vec<usize>,
}

impl TfidfModel {
    /// Keeps the `max_features` n-grams with the highest corpus count among
    /// those with document frequency `>= min_df` (ties go to the
    /// lexicographically smaller term), then orders them lexicographically.
    /// `idf = ln((1 + N) / (1 + df)) + 1`.
    pub fn fit(corpus: &[String], config: &TfidfConfig) -> Result<Self> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut stats: HashMap<String, (usize, usize)> = HashMap::new();
        for doc in corpus {
            let grams = ngrams(doc, config);
            let mut seen = HashSet::new();
            for g in grams {
                let first = seen.insert(g.clone());
                let e = stats.entry(g).or_insert((0, 0));
                e.0 += 1;
                if first {
                    e.1 += 1;
                }
            }
        }
        let mut kept: Vec<(String, usize, usize)> = stats
            .into_iter()
            .filter(|(_, (_, df))| *df >= config.min_df)
            .map(|(t, (tf, df))| (t, tf, df))
            .collect();
        if kept.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        kept.truncate(config.max_features);
        kept.sort_by(|a, b| a.0.cmp(&b.0));
        let n = corpus.len() as f64;
        let idf = kept
            .iter()
            .map(|(_, _, df)| ((1.0 + n) / (1.0 + *df as f64)).ln() + 1.0)
            .collect();
        let vocabulary: Vec<String> = kept.into_iter().map(|(t, _, _)| t).collect();
        let index = vocabulary
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Ok(Self {
            config: config.clone(),
            vocabulary,
            idf,
            index,
        })
    }

    pub fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    /// Weight `tf' * idf` with `tf' = 1 + ln(tf)` under sublinear scaling,
    /// then unit L2 norm per row.
    pub fn transform(&self, docs: &[String]) -> Result<TfidfMatrix> {
        let mut rows = Vec::with_capacity(docs.len());
        let mut empty_rows = Vec::new();
        for (i, doc) in docs.iter().enumerate() {
            let mut counts: HashMap<u32, usize> = HashMap::new();
            for g in ngrams(doc, &self.config) {
                if let Some(&j) = self.index.get(&g) {
                    *counts.entry(j).or_insert(0) += 1;
                }
            }
            let mut row: Vec<(u32, f64)> = counts
                .into_iter()
                .map(|(j, tf)| {
                    let tf = tf as f64;
                    let w = if self.config.sublinear_tf { 1.0 + tf.ln() } else { tf };
                    (j, w * self.idf[j as usize])
                })
                .collect();
            row.sort_by_key(|e| e.0);
            let norm = row.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|e| e.1 /= norm);
            } else {
                empty_rows.push(i);
            }
            rows.push(row);
        }
        Ok(TfidfMatrix {
            matrix: CsrMatrix::from_triplet_rows(self.vocabulary.len(), rows)?,
            empty_rows,
        })
    }
}

/// Fits on `corpus` and transforms it.
pub fn tfidf_fit_transform(corpus: &[String], config: &TfidfConfig) -> Result<(TfidfModel, TfidfMatrix)> {
    let model = TfidfModel::fit(corpus, config)?;
    let out = model.transform(corpus)?;
    Ok((model, out))
}

/// Labeled sparse dataset for `corpus` under a fitted model.
pub fn corpus_dataset(corpus: &TextCorpus, model: &TfidfModel, p1_label: usize, n_classes: usize) -> Result<(LabeledDataset, Vec<usize>)> {
    let t = model.transform(&corpus.texts)?;
    let d = LabeledDataset::new(
        FeatureMatrix::Sparse(t.matrix),
        corpus.labels.clone(),
        corpus.groups(p1_label),
        corpus.ids.clone(),
        Some(n_classes),
    )?
    .with_feature_names(model.vocabulary().to_vec())?;
    Ok((d, t.empty_rows))
}
