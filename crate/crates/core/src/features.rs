//! Tokenization, binary unigram features, embedding tables and
//! feature-vector assembly.
//!
//! The feature grid has four rows: unigrams over context words alone,
//! unigrams over context+action words, context unigrams concatenated
//! with an averaged context embedding, and context+action unigrams
//! concatenated with an embedding averaged over context and action
//! words combined.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{ActionMention, Corpus, Document, InstanceRef, MobilityMention, Span};
use crate::util::{fnv1a64, slice_chars, subseed};

/// A lowercased token with its char span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub span: Span,
}

/// Lowercase tokenizer: maximal alphanumeric runs plus single
/// punctuation characters; whitespace separates. Numeric tokens are
/// kept distinct (numbers are decisive for the Unclear class).
pub fn tokenize(text: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut run_start: Option<usize> = None;
    let mut run = String::new();
    let chars: Vec<char> = text.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        if c.is_alphanumeric() {
            if run_start.is_none() {
                run_start = Some(i);
            }
            run.extend(c.to_lowercase());
        } else {
            if let Some(start) = run_start.take() {
                tokens.push(Token {
                    text: std::mem::take(&mut run),
                    span: Span::new(start, i),
                });
            }
            if !c.is_whitespace() {
                tokens.push(Token {
                    text: c.to_lowercase().collect(),
                    span: Span::new(i, i + 1),
                });
            }
        }
    }
    if let Some(start) = run_start {
        tokens.push(Token {
            text: run,
            span: Span::new(start, chars.len()),
        });
    }
    tokens
}

/// Tokenize a span of a document, producing document-absolute token
/// spans.
pub fn tokenize_span(text: &str, span: Span) -> Vec<Token> {
    let mut tokens = tokenize(slice_chars(text, span.start, span.end));
    for t in &mut tokens {
        t.span = t.span.offset(span.start);
    }
    tokens
}

/// One Action mention viewed as its mobility-mention token sequence
/// with the action token range marked.
#[derive(Debug, Clone)]
pub struct MentionView {
    pub tokens: Vec<Token>,
    /// token index range overlapping the action span
    pub action_range: (usize, usize),
}

impl MentionView {
    pub fn action_tokens(&self) -> &[Token] {
        &self.tokens[self.action_range.0..self.action_range.1]
    }

    /// Context is everything in the mobility mention except the action
    /// itself.
    pub fn context_tokens(&self) -> impl Iterator<Item = &Token> {
        self.tokens[..self.action_range.0]
            .iter()
            .chain(self.tokens[self.action_range.1..].iter())
    }
}

/// Build the mention view for one action inside its mobility mention.
pub fn mention_view(doc: &Document, mob: &MobilityMention, act: &ActionMention) -> MentionView {
    let tokens = tokenize_span(&doc.text, mob.span);
    let mut start = tokens.len();
    let mut end = tokens.len();
    for (i, t) in tokens.iter().enumerate() {
        if t.span.overlaps(&act.span) {
            if i < start {
                start = i;
            }
            end = i + 1;
        }
    }
    if start > end {
        start = end;
    }
    MentionView {
        tokens,
        action_range: (start, end),
    }
}

/// Mention views for every instance of a corpus, in instance order.
pub fn corpus_views(corpus: &Corpus) -> Vec<(InstanceRef, MentionView)> {
    corpus
        .instances()
        .into_iter()
        .map(|r| {
            let (doc, mob, act) = corpus.action(r);
            (r, mention_view(doc, mob, act))
        })
        .collect()
}

/// Which feature blocks to assemble. At least one block must be on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub include_action: bool,
    pub use_unigrams: bool,
    pub use_embeddings: bool,
}

impl FeatureConfig {
    /// Context unigrams alone.
    pub fn unigrams() -> Self {
        FeatureConfig {
            include_action: false,
            use_unigrams: true,
            use_embeddings: false,
        }
    }

    /// Unigrams over context and action words.
    pub fn plus_action() -> Self {
        FeatureConfig {
            include_action: true,
            use_unigrams: true,
            use_embeddings: false,
        }
    }

    /// Context unigrams plus averaged context embeddings.
    pub fn plus_embeddings() -> Self {
        FeatureConfig {
            include_action: false,
            use_unigrams: true,
            use_embeddings: true,
        }
    }

    /// Context+action unigrams plus an embedding averaged over context
    /// and action words combined.
    pub fn plus_both() -> Self {
        FeatureConfig {
            include_action: true,
            use_unigrams: true,
            use_embeddings: true,
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.trim().to_lowercase().as_str() {
            "unigrams" => Some(Self::unigrams()),
            "+action" | "action" => Some(Self::plus_action()),
            "+embeddings" | "embeddings" => Some(Self::plus_embeddings()),
            "+both" | "both" => Some(Self::plus_both()),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.include_action, self.use_unigrams, self.use_embeddings) {
            (false, true, false) => "unigrams",
            (true, true, false) => "+action",
            (false, true, true) => "+embeddings",
            (true, true, true) => "+both",
            (true, false, true) => "embeddings-action-only",
            (false, false, true) => "embeddings-only",
            _ => "invalid",
        }
    }

    pub fn valid(&self) -> bool {
        self.use_unigrams || self.use_embeddings
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("training corpus yields an empty vocabulary")]
    EmptyVocab,
    #[error("embedding file line {line}: expected {expected} dims, found {found}")]
    RaggedDims {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("embedding file line {line}: {reason}")]
    BadEmbeddingLine { line: usize, reason: String },
    #[error("feature config must enable unigrams or embeddings")]
    InvalidConfig,
    #[error("embedding features requested but no table supplied")]
    MissingTable,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Frozen token-to-index map built on the training split. Ordering is
/// stable (sorted by token), so rebuilding from the same corpus yields
/// identical index assignments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "VocabSerde", into = "VocabSerde")]
pub struct Vocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    pub version: u64,
}

#[derive(Serialize, Deserialize)]
struct VocabSerde {
    tokens: Vec<String>,
}

impl From<VocabSerde> for Vocab {
    fn from(v: VocabSerde) -> Self {
        Vocab::from_tokens(v.tokens)
    }
}

impl From<Vocab> for VocabSerde {
    fn from(v: Vocab) -> Self {
        VocabSerde { tokens: v.tokens }
    }
}

impl Vocab {
    pub fn from_tokens(mut tokens: Vec<String>) -> Vocab {
        tokens.sort();
        tokens.dedup();
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        let version = fnv1a64(tokens.join("\n").as_bytes());
        Vocab {
            tokens,
            index,
            version,
        }
    }

    pub fn get(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// One "token index" pair per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(&format!("{t} {i}\n"));
        }
        out
    }
}

/// Build the vocabulary from a training corpus: context tokens of every
/// instance, plus action tokens when the config includes the action.
pub fn build_vocab(train: &Corpus, config: &FeatureConfig) -> Result<Vocab, FeatureError> {
    let mut set = BTreeSet::new();
    for (_, view) in corpus_views(train) {
        for t in view.context_tokens() {
            set.insert(t.text.clone());
        }
        if config.include_action {
            for t in view.action_tokens() {
                set.insert(t.text.clone());
            }
        }
    }
    if set.is_empty() {
        return Err(FeatureError::EmptyVocab);
    }
    Ok(Vocab::from_tokens(set.into_iter().collect()))
}

/// Binary unigram indicators over the mention view: context words, plus
/// action words when requested. Unseen tokens are dropped.
pub fn unigram_features(
    view: &MentionView,
    vocab: &Vocab,
    include_action: bool,
) -> BTreeSet<usize> {
    let mut active = BTreeSet::new();
    for t in view.context_tokens() {
        if let Some(i) = vocab.get(&t.text) {
            active.insert(i);
        }
    }
    if include_action {
        for t in view.action_tokens() {
            if let Some(i) = vocab.get(&t.text) {
                active.insert(i);
            }
        }
    }
    active
}

/// Dense word-vector table. All vectors share one dimension; tokens are
/// lowercased.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TableSerde", into = "TableSerde")]
pub struct EmbeddingTable {
    pub dim: usize,
    entries: HashMap<String, Vec<f64>>,
    pub version: u64,
}

#[derive(Serialize, Deserialize)]
struct TableSerde {
    dim: usize,
    entries: Vec<(String, Vec<f64>)>,
}

impl From<TableSerde> for EmbeddingTable {
    fn from(t: TableSerde) -> Self {
        EmbeddingTable::from_entries(t.dim, t.entries.into_iter().collect())
    }
}

impl From<EmbeddingTable> for TableSerde {
    fn from(t: EmbeddingTable) -> Self {
        let mut entries: Vec<(String, Vec<f64>)> = t.entries.into_iter().collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0));
        TableSerde {
            dim: t.dim,
            entries,
        }
    }
}

impl EmbeddingTable {
    pub fn from_entries(dim: usize, entries: HashMap<String, Vec<f64>>) -> EmbeddingTable {
        let mut keys: Vec<&String> = entries.keys().collect();
        keys.sort();
        let version = fnv1a64(
            keys.iter()
                .map(|k| k.as_str())
                .collect::<Vec<_>>()
                .join("\n")
                .as_bytes(),
        ) ^ dim as u64;
        EmbeddingTable {
            dim,
            entries,
            version,
        }
    }

    pub fn get(&self, token: &str) -> Option<&Vec<f64>> {
        self.entries.get(token)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Seeded random table over the given tokens: components are stable
    /// per (token, seed) regardless of enumeration order. Useful where
    /// no pretrained file is supplied.
    pub fn deterministic(tokens: &[String], dim: usize, seed: u64) -> EmbeddingTable {
        let mut entries = HashMap::new();
        for token in tokens {
            let mut rng = ChaCha8Rng::seed_from_u64(subseed(seed, fnv1a64(token.as_bytes())));
            let vec: Vec<f64> = (0..dim).map(|_| rng.random_range(-0.5..0.5)).collect();
            entries.insert(token.to_lowercase(), vec);
        }
        EmbeddingTable::from_entries(dim, entries)
    }
}

/// Parse an embedding text file: optional "count dim" first line,
/// otherwise `token v1 .. vD` per line, dimension inferred from the
/// first vector. Duplicate tokens keep the last vector and add a
/// warning.
pub fn parse_embeddings<R: BufRead>(
    reader: R,
) -> Result<(EmbeddingTable, Vec<String>), FeatureError> {
    let mut entries: HashMap<String, Vec<f64>> = HashMap::new();
    let mut warnings = Vec::new();
    let mut dim: Option<usize> = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if lineno == 1 && fields.len() == 2 {
            if let (Ok(_), Ok(d)) = (fields[0].parse::<usize>(), fields[1].parse::<usize>()) {
                dim = Some(d);
                continue;
            }
        }
        if fields.len() < 2 {
            return Err(FeatureError::BadEmbeddingLine {
                line: lineno,
                reason: "expected a token followed by vector components".into(),
            });
        }
        let token = fields[0].to_lowercase();
        let vector: Result<Vec<f64>, _> = fields[1..].iter().map(|f| f.parse::<f64>()).collect();
        let vector = vector.map_err(|e| FeatureError::BadEmbeddingLine {
            line: lineno,
            reason: e.to_string(),
        })?;
        match dim {
            None => dim = Some(vector.len()),
            Some(d) if d != vector.len() => {
                return Err(FeatureError::RaggedDims {
                    line: lineno,
                    expected: d,
                    found: vector.len(),
                });
            }
            _ => {}
        }
        if entries.insert(token.clone(), vector).is_some() {
            warnings.push(format!("line {lineno}: duplicate token {token}, last wins"));
        }
    }
    let dim = dim.unwrap_or(0);
    Ok((EmbeddingTable::from_entries(dim, entries), warnings))
}

pub fn load_embeddings(path: &Path) -> Result<(EmbeddingTable, Vec<String>), FeatureError> {
    let file = std::fs::File::open(path)?;
    parse_embeddings(std::io::BufReader::new(file))
}

/// Arithmetic mean of the in-vocabulary token vectors; out-of-vocabulary
/// tokens are skipped, and all-OOV or empty input yields the zero
/// vector.
pub fn embed_average<'a, I>(tokens: I, table: &EmbeddingTable) -> Vec<f64>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut sum = vec![0.0; table.dim];
    let mut n = 0usize;
    for token in tokens {
        if let Some(v) = table.get(token) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    sum
}

/// Assembled model input: sorted active unigram indices plus an
/// optional dense block, stamped with the vocabulary version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub sparse: Vec<usize>,
    pub dense: Option<Vec<f64>>,
    pub vocab_version: u64,
}

impl FeatureVector {
    /// Total input dimension given the owning vocab/table sizes.
    pub fn width(vocab_len: usize, dense_dim: Option<usize>) -> usize {
        vocab_len + dense_dim.unwrap_or(0)
    }

    /// Dense value at a global feature index: binary block first, dense
    /// block after.
    pub fn value_at(&self, index: usize, vocab_len: usize) -> f64 {
        if index < vocab_len {
            if self.sparse.binary_search(&index).is_ok() {
                1.0
            } else {
                0.0
            }
        } else {
            self.dense
                .as_ref()
                .map(|d| d[index - vocab_len])
                .unwrap_or(0.0)
        }
    }
}

/// Assemble the feature vector for one mention per the config grid.
pub fn assemble(
    view: &MentionView,
    vocab: &Vocab,
    table: Option<&EmbeddingTable>,
    config: &FeatureConfig,
) -> Result<FeatureVector, FeatureError> {
    if !config.valid() {
        return Err(FeatureError::InvalidConfig);
    }
    let sparse: Vec<usize> = if config.use_unigrams {
        unigram_features(view, vocab, config.include_action)
            .into_iter()
            .collect()
    } else {
        Vec::new()
    };
    let dense = if config.use_embeddings {
        let table = table.ok_or(FeatureError::MissingTable)?;
        let ctx = view.context_tokens().map(|t| t.text.as_str());
        let avg = if config.include_action {
            let all = ctx.chain(view.action_tokens().iter().map(|t| t.text.as_str()));
            embed_average(all, table)
        } else {
            embed_average(ctx, table)
        };
        Some(avg)
    } else {
        None
    };
    Ok(FeatureVector {
        sparse,
        dense,
        vocab_version: vocab.version,
    })
}
