//! Fixtures shared by the benchmarks under `benches/`.

use distunlearn::data::{corpus_dataset, synthetic_spam_corpus, LabeledDataset, SyntheticTextConfig, TfidfConfig, TfidfModel};
use distunlearn::matrix::{DenseMatrix, FeatureMatrix};
use distunlearn::rng::rng_from_seed;
use rand_distr::{Distribution, StandardNormal};

/// `n` rows of `d` standard normals shifted by `shift`.
pub fn gaussian_rows(n: usize, d: usize, shift: f64, seed: u64) -> FeatureMatrix {
    let mut rng = rng_from_seed(seed);
    let data: Vec<f64> = (0..n * d).map(|_| shift + Distribution::<f64>::sample(&StandardNormal, &mut rng)).collect();
    FeatureMatrix::Dense(DenseMatrix::new(n, d, data).expect("shape matches"))
}

/// TF-IDF features of the built-in spam corpus.
pub fn spam_features(n_ham: usize, n_spam: usize) -> LabeledDataset {
    let corpus = synthetic_spam_corpus(&SyntheticTextConfig {
        n_ham,
        n_spam,
        ..Default::default()
    })
    .expect("valid corpus config");
    let model = TfidfModel::fit(&corpus.texts, &TfidfConfig::sms()).expect("non-empty vocabulary");
    corpus_dataset(&corpus, &model, 1, 2).expect("featurizes").0
}
