//! Transcript features: lexicon category proportions, PCA with Bartlett's
//! sphericity test, and precomputed sentence embeddings.

mod embedding;
mod lexicon;
mod pca;

pub use embedding::{hash_embedding, load_embeddings, write_embeddings, EmbeddingRecord, EMBEDDING_DIM};
pub use lexicon::{category_counts, tokenize, CategoryVector, Lexicon, Pattern};
pub use pca::{bartlett_sphericity, pca_fit, BartlettResult, PcaModel};
