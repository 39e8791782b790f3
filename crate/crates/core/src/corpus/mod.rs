//! Corpus data model, JSONL ingestion, stratified splitting, k-fold
//! generation, and the synthetic corpus generator.
//!
//! A corpus is a list of documents; each document carries mobility
//! mentions, each containing one or more Action mentions. The Action
//! mention is the classification unit. Gold polarity labels attach to
//! Action mentions.

mod synth;

pub use synth::{
    synth_generate, GeneratedInstance, Manifest, SynthConfig, SynthOutput, TemplateFamily,
};

use std::collections::BTreeMap;
use std::collections::HashSet;
use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::util::char_len;

/// The four-way assertion polarity of an Action mention.
///
/// `NoInfo` serializes as the string `"None"`; the internal name avoids
/// colliding with null values in serialized records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum PolarityLabel {
    Able,
    Unable,
    Unclear,
    #[serde(rename = "None")]
    NoInfo,
}

impl PolarityLabel {
    /// Fixed label order used for confusion matrices, score vectors and
    /// deterministic tie-breaks.
    pub const ALL: [PolarityLabel; 4] = [
        PolarityLabel::Able,
        PolarityLabel::Unable,
        PolarityLabel::Unclear,
        PolarityLabel::NoInfo,
    ];

    pub fn index(self) -> usize {
        match self {
            PolarityLabel::Able => 0,
            PolarityLabel::Unable => 1,
            PolarityLabel::Unclear => 2,
            PolarityLabel::NoInfo => 3,
        }
    }

    pub fn from_index(i: usize) -> PolarityLabel {
        PolarityLabel::ALL[i]
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolarityLabel::Able => "Able",
            PolarityLabel::Unable => "Unable",
            PolarityLabel::Unclear => "Unclear",
            PolarityLabel::NoInfo => "None",
        }
    }
}

impl fmt::Display for PolarityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolarityLabel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Able" => Ok(PolarityLabel::Able),
            "Unable" => Ok(PolarityLabel::Unable),
            "Unclear" => Ok(PolarityLabel::Unclear),
            "None" | "NoInfo" => Ok(PolarityLabel::NoInfo),
            other => Err(format!("unknown polarity label: {other}")),
        }
    }
}

/// Half-open character range `[start, end)` into a document text.
/// Offsets are Unicode scalar-value indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Span {
        Span { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.start >= self.end
    }

    /// True when `other` lies entirely within `self`.
    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    pub fn contains_idx(&self, idx: usize) -> bool {
        self.start <= idx && idx < self.end
    }

    /// True when the two spans share at least one character.
    pub fn overlaps(&self, other: &Span) -> bool {
        self.start < other.end && other.start < self.end
    }

    /// Shift both offsets by `delta`.
    pub fn offset(&self, delta: usize) -> Span {
        Span::new(self.start + delta, self.end + delta)
    }
}

/// An Action mention: the span being classified, plus its gold label
/// when annotated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMention {
    #[serde(flatten)]
    pub span: Span,
    #[serde(rename = "polarity", default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<PolarityLabel>,
}

/// A mobility description containing one or more Action mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MobilityMention {
    #[serde(flatten)]
    pub span: Span,
    pub actions: Vec<ActionMention>,
}

/// One clinical note with its annotated mobility mentions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub mobilities: Vec<MobilityMention>,
}

/// An annotated corpus. Immutable after construction.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

/// Index triple identifying one Action mention inside a corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InstanceRef {
    pub doc: usize,
    pub mobility: usize,
    pub action: usize,
}

/// Per-label instance counts in the fixed label order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelCounts(pub [usize; 4]);

impl LabelCounts {
    pub fn get(&self, label: PolarityLabel) -> usize {
        self.0[label.index()]
    }

    pub fn add(&mut self, label: PolarityLabel) {
        self.0[label.index()] += 1;
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Label proportions; all zeros for an empty count.
    pub fn proportions(&self) -> [f64; 4] {
        let total = self.total();
        if total == 0 {
            return [0.0; 4];
        }
        let mut out = [0.0; 4];
        for (i, &c) in self.0.iter().enumerate() {
            out[i] = c as f64 / total as f64;
        }
        out
    }
}

impl Serialize for LabelCounts {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = BTreeMap::new();
        for label in PolarityLabel::ALL {
            map.insert(label.as_str().to_string(), self.get(label));
        }
        map.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for LabelCounts {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let map = BTreeMap::<String, usize>::deserialize(deserializer)?;
        let mut counts = LabelCounts::default();
        for (key, value) in map {
            let label = PolarityLabel::from_str(&key).map_err(serde::de::Error::custom)?;
            counts.0[label.index()] = value;
        }
        Ok(counts)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("document {doc_id}: {what} span [{start}, {end}) out of bounds (text length {len})")]
    SpanOutOfBounds {
        doc_id: String,
        what: &'static str,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("duplicate document id {doc_id}")]
    DuplicateId { doc_id: String },
    #[error("document {doc_id}: {reason}")]
    InvalidMention { doc_id: String, reason: String },
    #[error("corpus has no gold-labeled instances")]
    NoLabeledInstances,
    #[error("test fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("k-fold requires 2 <= k <= document count (k={k}, documents={docs})")]
    BadFoldCount { k: usize, docs: usize },
    #[error("label mixture must sum to 1 (got {0})")]
    BadMixture(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Corpus {
    /// Validate every structural invariant: spans in bounds, actions
    /// inside their mobility mention, non-overlapping and sorted, ids
    /// unique.
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut seen = HashSet::new();
        for doc in &self.documents {
            if !seen.insert(doc.id.clone()) {
                return Err(CorpusError::DuplicateId {
                    doc_id: doc.id.clone(),
                });
            }
            let len = char_len(&doc.text);
            for mob in &doc.mobilities {
                if mob.span.start >= mob.span.end || mob.span.end > len {
                    return Err(CorpusError::SpanOutOfBounds {
                        doc_id: doc.id.clone(),
                        what: "mobility",
                        start: mob.span.start,
                        end: mob.span.end,
                        len,
                    });
                }
                if mob.actions.is_empty() {
                    return Err(CorpusError::InvalidMention {
                        doc_id: doc.id.clone(),
                        reason: "mobility mention with no actions".into(),
                    });
                }
                let mut prev_end = None;
                for act in &mob.actions {
                    if act.span.start >= act.span.end || act.span.end > len {
                        return Err(CorpusError::SpanOutOfBounds {
                            doc_id: doc.id.clone(),
                            what: "action",
                            start: act.span.start,
                            end: act.span.end,
                            len,
                        });
                    }
                    if !mob.span.contains(&act.span) {
                        return Err(CorpusError::InvalidMention {
                            doc_id: doc.id.clone(),
                            reason: format!(
                                "action span [{}, {}) outside mobility span [{}, {})",
                                act.span.start, act.span.end, mob.span.start, mob.span.end
                            ),
                        });
                    }
                    if let Some(end) = prev_end {
                        if act.span.start < end {
                            return Err(CorpusError::InvalidMention {
                                doc_id: doc.id.clone(),
                                reason: "action spans overlap or are unsorted".into(),
                            });
                        }
                    }
                    prev_end = Some(act.span.end);
                }
            }
        }
        Ok(())
    }

    /// All Action mentions in document order.
    pub fn instances(&self) -> Vec<InstanceRef> {
        let mut out = Vec::new();
        for (d, doc) in self.documents.iter().enumerate() {
            for (m, mob) in doc.mobilities.iter().enumerate() {
                for a in 0..mob.actions.len() {
                    out.push(InstanceRef {
                        doc: d,
                        mobility: m,
                        action: a,
                    });
                }
            }
        }
        out
    }

    pub fn action(&self, r: InstanceRef) -> (&Document, &MobilityMention, &ActionMention) {
        let doc = &self.documents[r.doc];
        let mob = &doc.mobilities[r.mobility];
        (doc, mob, &mob.actions[r.action])
    }

    pub fn gold(&self, r: InstanceRef) -> Option<PolarityLabel> {
        self.action(r).2.gold
    }

    /// Stable instance identifier: `<doc id>:<mobility idx>:<action idx>`.
    pub fn instance_id(&self, r: InstanceRef) -> String {
        format!("{}:{}:{}", self.documents[r.doc].id, r.mobility, r.action)
    }
}

/// Count gold labels over all labeled Action mentions.
pub fn label_counts(corpus: &Corpus) -> LabelCounts {
    let mut counts = LabelCounts::default();
    for r in corpus.instances() {
        if let Some(gold) = corpus.gold(r) {
            counts.add(gold);
        }
    }
    counts
}

/// Parse a corpus from a JSONL reader: one document object per line,
/// blank lines ignored.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document =
            serde_json::from_str(&line).map_err(|source| CorpusError::Parse {
                line: i + 1,
                source,
            })?;
        documents.push(doc);
    }
    let corpus = Corpus { documents };
    corpus.validate()?;
    Ok(corpus)
}

/// Load a corpus file (UTF-8 JSONL, one record per line).
pub fn load_corpus(path: &Path) -> Result<Corpus, CorpusError> {
    let file = std::fs::File::open(path)?;
    parse_corpus(std::io::BufReader::new(file))
}

/// Serialize a corpus to its line-delimited record form.
pub fn corpus_to_jsonl(corpus: &Corpus) -> String {
    let mut out = String::new();
    for doc in &corpus.documents {
        out.push_str(&serde_json::to_string(doc).expect("document serializes"));
        out.push('\n');
    }
    out
}

pub fn save_corpus(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let mut file = std::fs::File::create(path)?;
    file.write_all(corpus_to_jsonl(corpus).as_bytes())?;
    Ok(())
}

/// Result of a stratified document split.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: Corpus,
    pub test: Corpus,
    pub warnings: Vec<String>,
}

/// Split a corpus into train/test by whole documents, stratified by the
/// distribution of gold polarity labels.
///
/// Deterministic given the seed. Document counts land within one of the
/// requested fraction; per-label instance proportions on each side stay
/// within `max(2 instances, 10% relative)` of the corpus proportions on
/// corpora large enough to permit it (violations are reported as
/// warnings, not errors).
pub fn stratified_split(
    corpus: &Corpus,
    test_fraction: f64,
    seed: u64,
) -> Result<Split, CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::BadFraction(test_fraction));
    }
    let totals = label_counts(corpus);
    if totals.total() == 0 {
        return Err(CorpusError::NoLabeledInstances);
    }
    let n = corpus.documents.len();
    let n_test = ((n as f64) * test_fraction).round() as usize;
    let n_test = n_test.min(n);
    let mut warnings = Vec::new();
    if n_test == 0 || n_test == n {
        warnings.push(format!(
            "degenerate split: {n} documents at fraction {test_fraction} leaves one side empty; all documents kept on the train side"
        ));
        return Ok(Split {
            train: corpus.clone(),
            test: Corpus::default(),
            warnings,
        });
    }
    let sides = greedy_stratify(corpus, &[n - n_test, n_test], seed);
    let train = select_documents(corpus, &sides, 0);
    let test = select_documents(corpus, &sides, 1);
    warnings.extend(tolerance_warnings(&totals, &[&train, &test], &["train", "test"]));
    Ok(Split {
        train,
        test,
        warnings,
    })
}

/// One cross-validation fold.
#[derive(Debug, Clone)]
pub struct Fold {
    pub train: Corpus,
    pub heldout: Corpus,
}

/// Label-stratified k-fold partition by whole documents. Each document
/// appears in exactly one heldout fold.
pub fn kfold(corpus: &Corpus, k: usize, seed: u64) -> Result<Vec<Fold>, CorpusError> {
    let n = corpus.documents.len();
    if k < 2 || k > n {
        return Err(CorpusError::BadFoldCount { k, docs: n });
    }
    if label_counts(corpus).total() == 0 {
        return Err(CorpusError::NoLabeledInstances);
    }
    let mut quotas = vec![n / k; k];
    for quota in quotas.iter_mut().take(n % k) {
        *quota += 1;
    }
    let sides = greedy_stratify(corpus, &quotas, seed);
    let folds = (0..k)
        .map(|fold| {
            let heldout = select_documents(corpus, &sides, fold);
            let train = Corpus {
                documents: corpus
                    .documents
                    .iter()
                    .zip(&sides)
                    .filter(|(_, &s)| s != fold)
                    .map(|(d, _)| d.clone())
                    .collect(),
            };
            Fold { train, heldout }
        })
        .collect();
    Ok(folds)
}

/// Greedy stratified assignment of documents to sides with fixed
/// document quotas.
///
/// Documents are visited in descending labeled-instance count (ties
/// randomized by seed); each goes to the quota-eligible side where the
/// aggregate L1 divergence of side label distributions from the corpus
/// distribution ends up smallest.
fn greedy_stratify(corpus: &Corpus, quotas: &[usize], seed: u64) -> Vec<usize> {
    let target = label_counts(corpus).proportions();
    let n_sides = quotas.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut order: Vec<usize> = (0..corpus.documents.len()).collect();
    order.shuffle(&mut rng);
    let doc_counts: Vec<LabelCounts> = corpus
        .documents
        .iter()
        .map(|doc| {
            let mut counts = LabelCounts::default();
            for mob in &doc.mobilities {
                for act in &mob.actions {
                    if let Some(gold) = act.gold {
                        counts.add(gold);
                    }
                }
            }
            counts
        })
        .collect();
    order.sort_by_key(|&d| std::cmp::Reverse(doc_counts[d].total()));

    let l1 = |counts: &LabelCounts| -> f64 {
        counts
            .proportions()
            .iter()
            .zip(&target)
            .map(|(p, t)| (p - t).abs())
            .sum()
    };

    let mut side_counts = vec![LabelCounts::default(); n_sides];
    let mut side_docs = vec![0usize; n_sides];
    let mut assignment = vec![0usize; corpus.documents.len()];
    for &d in &order {
        let mut best: Vec<usize> = Vec::new();
        let mut best_delta = f64::INFINITY;
        for s in 0..n_sides {
            if side_docs[s] >= quotas[s] {
                continue;
            }
            let mut after = side_counts[s];
            for (i, &c) in doc_counts[d].0.iter().enumerate() {
                after.0[i] += c;
            }
            let delta = l1(&after) - l1(&side_counts[s]);
            if delta < best_delta - 1e-12 {
                best_delta = delta;
                best.clear();
                best.push(s);
            } else if (delta - best_delta).abs() <= 1e-12 {
                best.push(s);
            }
        }
        let side = best[rng.random_range(0..best.len())];
        assignment[d] = side;
        side_docs[side] += 1;
        for (i, &c) in doc_counts[d].0.iter().enumerate() {
            side_counts[side].0[i] += c;
        }
    }
    assignment
}

fn select_documents(corpus: &Corpus, sides: &[usize], side: usize) -> Corpus {
    Corpus {
        documents: corpus
            .documents
            .iter()
            .zip(sides)
            .filter(|(_, &s)| s == side)
            .map(|(d, _)| d.clone())
            .collect(),
    }
}

fn tolerance_warnings(totals: &LabelCounts, sides: &[&Corpus], names: &[&str]) -> Vec<String> {
    let target = totals.proportions();
    let mut warnings = Vec::new();
    for (corpus, name) in sides.iter().zip(names) {
        let counts = label_counts(corpus);
        let side_total = counts.total() as f64;
        for label in PolarityLabel::ALL {
            let expected = target[label.index()] * side_total;
            let tol = (0.1 * expected).max(2.0);
            let got = counts.get(label) as f64;
            if (got - expected).abs() > tol {
                warnings.push(format!(
                    "{name} side: label {label} count {got} deviates from expected {expected:.1} by more than {tol:.1}"
                ));
            }
        }
    }
    warnings
}
