//! Topic modelling: bag-of-words corpus, collapsed Gibbs LDA, c_v coherence
//! and coherence-driven choice of the topic count.

mod coherence;
mod lda;
mod select;
mod vocab;

pub use coherence::{coherence_cv, coherence_cv_for_topics, CoherenceScore, DEFAULT_TOP_N, DEFAULT_WINDOW};
pub use lda::{assign_topic, fit_lda, LdaConfig, LdaModel, TopicAssignment};
pub use select::{select_k, KScore, KSelection, SelectConfig};
pub use vocab::{build_vocabulary, BowCorpus, Vocabulary, VocabularyBuild};
