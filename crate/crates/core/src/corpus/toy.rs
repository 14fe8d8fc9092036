//! Seeded synthetic corpora for tests and demos.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Category, PaperRecord};

const BASE_VOCABULARY: [(&str, Category); 48] = [
    ("Graph Neural Networks", Category::DeepLearning),
    ("Contrastive Learning", Category::DeepLearning),
    ("Diffusion Models", Category::DeepLearning),
    ("Meta Learning", Category::DeepLearning),
    ("Federated Learning", Category::DeepLearning),
    ("Optimization", Category::DeepLearning),
    ("Normalizing Flows", Category::DeepLearning),
    ("Continual Learning", Category::DeepLearning),
    ("Bayesian Deep Learning", Category::DeepLearning),
    ("Neural Architecture Search", Category::DeepLearning),
    ("Adversarial Robustness", Category::DeepLearning),
    ("Representation Learning", Category::DeepLearning),
    ("Large Language Models", Category::NaturalLanguage),
    ("Machine Translation", Category::NaturalLanguage),
    ("Question Answering", Category::NaturalLanguage),
    ("In-Context Learning", Category::NaturalLanguage),
    ("Instruction Tuning", Category::NaturalLanguage),
    ("Retrieval Augmentation", Category::NaturalLanguage),
    ("Summarization", Category::NaturalLanguage),
    ("Named Entity Recognition", Category::NaturalLanguage),
    ("Dialogue Systems", Category::NaturalLanguage),
    ("Chain of Thought", Category::NaturalLanguage),
    ("Hallucination", Category::NaturalLanguage),
    ("Tokenization", Category::NaturalLanguage),
    ("Object Detection", Category::ComputerVision),
    ("Semantic Segmentation", Category::ComputerVision),
    ("Vision Transformers", Category::ComputerVision),
    ("3D Reconstruction", Category::ComputerVision),
    ("Image Generation", Category::ComputerVision),
    ("Video Understanding", Category::ComputerVision),
    ("Pose Estimation", Category::ComputerVision),
    ("Neural Radiance Fields", Category::ComputerVision),
    ("Domain Adaptation", Category::ComputerVision),
    ("Self-Supervised Learning", Category::ComputerVision),
    ("Optical Flow", Category::ComputerVision),
    ("Image Captioning", Category::ComputerVision),
    ("Reinforcement Learning", Category::GeneralAi),
    ("Multi-Agent Systems", Category::GeneralAi),
    ("Knowledge Graphs", Category::GeneralAi),
    ("Planning", Category::GeneralAi),
    ("Causal Inference", Category::GeneralAi),
    ("Constraint Satisfaction", Category::GeneralAi),
    ("Game Theory", Category::GeneralAi),
    ("Explainability", Category::GeneralAi),
    ("Fairness", Category::GeneralAi),
    ("Recommender Systems", Category::GeneralAi),
    ("Automated Reasoning", Category::GeneralAi),
    ("Reward Modeling", Category::GeneralAi),
];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ToyCorpusError {
    #[error("keywords per paper must satisfy 1 <= min <= max, got {min}..={max}")]
    KeywordRange { min: usize, max: usize },
    #[error("vocabulary of {vocabulary} cannot supply {max} distinct keywords per paper")]
    VocabularyTooSmall { vocabulary: usize, max: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToyCorpusSpec {
    pub papers: usize,
    /// Number of distinct keywords to draw from.
    pub vocabulary: usize,
    pub min_keywords: usize,
    pub max_keywords: usize,
    pub seed: u64,
    /// Emit records without a `keywords` field so ingestion must extract them.
    pub omit_keywords: bool,
}

impl Default for ToyCorpusSpec {
    fn default() -> Self {
        Self {
            papers: 200,
            vocabulary: 48,
            min_keywords: 3,
            max_keywords: 4,
            seed: 7,
            omit_keywords: false,
        }
    }
}

fn venue(category: Category, rng: &mut impl Rng) -> &'static str {
    let venues: &[&str] = match category {
        Category::DeepLearning => &["ICLR", "NeurIPS", "ICML"],
        Category::NaturalLanguage => &["ACL", "NAACL"],
        Category::ComputerVision => &["CVPR", "ICCV"],
        Category::GeneralAi => &["AAAI", "IJCAI"],
    };
    venues.choose(rng).expect("venue lists are nonempty")
}

/// The vocabulary a spec draws from, as `(display form, category)`.
pub fn vocabulary(size: usize) -> Vec<(String, Category)> {
    (0..size)
        .map(|i| match BASE_VOCABULARY.get(i) {
            Some((name, cat)) => (name.to_string(), *cat),
            None => (format!("Concept {i:03}"), Category::ALL[i % 4]),
        })
        .collect()
}

/// Generates a reproducible corpus: the same spec always yields the same records.
///
/// Papers mostly draw keywords from their own category, with occasional
/// cross-category picks so the resulting network is well connected.
pub fn generate(spec: &ToyCorpusSpec) -> Result<Vec<PaperRecord>, ToyCorpusError> {
    if spec.min_keywords == 0 || spec.min_keywords > spec.max_keywords {
        return Err(ToyCorpusError::KeywordRange {
            min: spec.min_keywords,
            max: spec.max_keywords,
        });
    }
    if spec.vocabulary < spec.max_keywords {
        return Err(ToyCorpusError::VocabularyTooSmall {
            vocabulary: spec.vocabulary,
            max: spec.max_keywords,
        });
    }
    let vocab = vocabulary(spec.vocabulary);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.papers);
    for i in 0..spec.papers {
        let category = Category::ALL[rng.random_range(0..4)];
        let in_category: Vec<usize> = (0..vocab.len())
            .filter(|&j| vocab[j].1 == category)
            .collect();
        let count = rng.random_range(spec.min_keywords..=spec.max_keywords);
        let mut picked: Vec<usize> = Vec::with_capacity(count);
        while picked.len() < count {
            let j = if !in_category.is_empty() && rng.random_bool(0.75) {
                *in_category.choose(&mut rng).expect("nonempty")
            } else {
                rng.random_range(0..vocab.len())
            };
            if !picked.contains(&j) {
                picked.push(j);
            }
        }
        picked.shuffle(&mut rng);
        let names: Vec<&str> = picked.iter().map(|&j| vocab[j].0.as_str()).collect();
        let year = rng.random_range(2015..=2024);
        let lead = names[0];
        let rest = names[1..].join(", ");
        records.push(PaperRecord {
            id: format!("toy-{}-{i:05}", spec.seed),
            venue: venue(category, &mut rng).to_string(),
            year,
            category,
            title: if rest.is_empty() {
                format!("Revisiting {lead}")
            } else {
                format!("{lead} meets {rest}")
            },
            abstract_text: format!(
                "We study {} and show how combining {} improves results on standard benchmarks.",
                lead,
                names.join(" with ")
            ),
            introduction: format!(
                "Progress on {lead} has been rapid. This paper connects {} in a single framework.",
                names.join(", ")
            ),
            keywords: (!spec.omit_keywords).then(|| names.iter().map(|s| s.to_string()).collect()),
        });
    }
    Ok(records)
}
