//! QA corpus construction: taxonomy, patches, SAR channel composition,
//! question generation, geographic splits, synthetic scenes and manifest IO.

pub mod manifest;
pub mod patch;
pub mod question;
pub mod sar;
pub mod split;
pub mod synth;
pub mod taxonomy;

pub use manifest::{load_manifest, load_qa_file, write_manifest, write_qa_file, ManifestRow};
pub use patch::PatchRecord;
pub use question::{
    count_conjunctions, derive_answer, expr_from_terms, generate_questions,
    generate_questions_with, BoolExpr, Conjunction, QARecord, QType, QuestionAst, QuestionConfig,
    Split,
};
pub use sar::{compose_sar_channels, SarClipBounds};
pub use split::{split_by_longitude, SplitFractions};
pub use synth::{synthesize_corpus, synthesize_scene, synthesize_scene_raw, SceneConfig, SynthScene};
pub use taxonomy::{ClassEntry, ClassTaxonomy, Level};
