//! Dataset ingestion, TF-IDF featurization, splits and p2 downsampling.

mod csv_io;
mod dataset;
mod split;
mod synthetic;
pub mod stopwords;
mod text;

pub use csv_io::{format_f64, load_features_csv, write_features_csv, FeatureSchema};
pub use dataset::{Group, LabeledDataset};
pub use synthetic::{synthetic_spam_corpus, SyntheticTextConfig};
pub use split::{downsample_p2, downsample_p2_indices, split_stratified, stratified_indices, SplitIndices};
pub use text::{
    corpus_dataset, escape_text, load_sms_collection, load_text_tsv, ngrams, tfidf_fit_transform,
    write_text_tsv, TextCorpus, TfidfConfig, TfidfMatrix, TfidfModel,
};
