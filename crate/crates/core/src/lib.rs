//! Assertion-polarity classification for Action mentions in clinical
//! mobility descriptions.
//!
//! The library covers the full experimental pipeline:
//!
//! * [`corpus`] — data model, JSONL ingestion, stratified splitting,
//!   k-fold generation, and a synthetic corpus generator.
//! * [`docstruct`] — document decomposition: sentences, nested sections,
//!   slot:value constructs, question/answer lines, bullet items.
//! * [`context`] — lexicon-driven contextual attribute tagging
//!   (negated / asserted / conditional / hypothetical / historical /
//!   subject) with directional scope bounded by the sentence.
//! * [`rulepolarity`] — the rule-based polarity assigner over structural
//!   loci and contextual attributes.
//! * [`features`] — tokenization, binary unigram features, embedding
//!   tables and averaging.
//! * [`learners`] — Naive Bayes, random forest, k-NN, linear SVM and a
//!   small feed-forward network behind one train/predict contract.
//! * [`cnn`] — word+character convolutional classifier with
//!   max-over-time pooling.
//! * [`ensemble`] — rarity-preferring voting and the DNN chooser.
//! * [`eval`] — metrics, cross-validation driver, bootstrap significance
//!   testing, report rendering.

pub mod cnn;
pub mod context;
pub mod corpus;
pub mod docstruct;
pub mod ensemble;
pub mod eval;
pub mod features;

pub mod nn;
pub mod rulepolarity;
pub mod util;
