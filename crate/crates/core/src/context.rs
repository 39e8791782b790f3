//! Contextual attribute tagger in the conTEXT style: a lexicon of
//! evidence phrases with directional scope, bounded by the containing
//! sentence.
//!
//! Attributes accumulate independently (a mention can be both negated
//! and conditional); the rule engine resolves combinations. Two extra
//! flags ride along for the rule engine: a pertinent-negative marker
//! ("no trouble walking" asserts ability) and an environment-negation
//! marker (a negated scope containing "without" or an asserted modifier
//! after the mention, as in "unable to propel wheelchair
//! independently").

use std::collections::HashMap;
use std::fmt;
use std::io::BufRead;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Span;
use crate::features::{tokenize, Token};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContextAttribute {
    Negated,
    Asserted,
    Conditional,
    Hypothetical,
    Historical,
    SubjectOther,
}

impl ContextAttribute {
    pub fn as_str(self) -> &'static str {
        match self {
            ContextAttribute::Negated => "negated",
            ContextAttribute::Asserted => "asserted",
            ContextAttribute::Conditional => "conditional",
            ContextAttribute::Hypothetical => "hypothetical",
            ContextAttribute::Historical => "historical",
            ContextAttribute::SubjectOther => "subject",
        }
    }
}

impl FromStr for ContextAttribute {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "negated" => Ok(ContextAttribute::Negated),
            "asserted" => Ok(ContextAttribute::Asserted),
            "conditional" => Ok(ContextAttribute::Conditional),
            "hypothetical" => Ok(ContextAttribute::Hypothetical),
            "historical" => Ok(ContextAttribute::Historical),
            "subject" | "subject_other" => Ok(ContextAttribute::SubjectOther),
            other => Err(format!("unknown attribute: {other}")),
        }
    }
}

/// Which side of the cue its scope extends to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
    Bidirectional,
}

impl Direction {
    fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Backward => "backward",
            Direction::Bidirectional => "bidirectional",
        }
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "forward" => Ok(Direction::Forward),
            "backward" => Ok(Direction::Backward),
            "bidirectional" => Ok(Direction::Bidirectional),
            other => Err(format!("unknown direction: {other}")),
        }
    }
}

/// One lexicon row: a phrase, its attribute effect and scope direction,
/// or a scope terminator (which carries no attribute effect).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    pub phrase: String,
    pub attribute: Option<ContextAttribute>,
    pub direction: Direction,
    pub is_terminator: bool,
}

impl EvidenceEntry {
    pub fn cue(phrase: &str, attribute: ContextAttribute, direction: Direction) -> EvidenceEntry {
        EvidenceEntry {
            phrase: phrase.to_lowercase(),
            attribute: Some(attribute),
            direction,
            is_terminator: false,
        }
    }

    pub fn terminator(phrase: &str) -> EvidenceEntry {
        EvidenceEntry {
            phrase: phrase.to_lowercase(),
            attribute: None,
            direction: Direction::Bidirectional,
            is_terminator: true,
        }
    }

    /// Pertinent negatives are asserted evidence built on a negation
    /// word: "no trouble", "without difficulty". Adding such a phrase
    /// as asserted evidence automatically marks it pertinent-negative.
    pub fn is_pertinent_negative(&self) -> bool {
        if self.attribute != Some(ContextAttribute::Asserted) {
            return false;
        }
        matches!(
            self.phrase.split_whitespace().next(),
            Some("no") | Some("not") | Some("without") | Some("denies")
        )
    }
}

impl fmt::Display for EvidenceEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_terminator {
            write!(f, "{}\t-\t-\tterm", self.phrase)
        } else {
            write!(
                f,
                "{}\t{}\t{}\tcue",
                self.phrase,
                self.attribute.map(|a| a.as_str()).unwrap_or("-"),
                self.direction.as_str()
            )
        }
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Evidence lexicon with a phrase-token index for longest-match-first
/// scanning. Immutable after load.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: Vec<EvidenceEntry>,
    by_tokens: HashMap<Vec<String>, usize>,
    max_phrase_tokens: usize,
}

impl Lexicon {
    pub fn new(raw_entries: Vec<EvidenceEntry>) -> Lexicon {
        let mut entries: Vec<EvidenceEntry> = Vec::new();
        let mut by_tokens: HashMap<Vec<String>, usize> = HashMap::new();
        let mut max_phrase_tokens = 1;
        for entry in raw_entries {
            let key: Vec<String> = tokenize(&entry.phrase)
                .into_iter()
                .map(|t| t.text)
                .collect();
            if key.is_empty() {
                continue;
            }
            max_phrase_tokens = max_phrase_tokens.max(key.len());
            match by_tokens.get(&key) {
                // last writer wins so user files can override defaults
                Some(&idx) => entries[idx] = entry,
                None => {
                    by_tokens.insert(key, entries.len());
                    entries.push(entry);
                }
            }
        }
        Lexicon {
            entries,
            by_tokens,
            max_phrase_tokens,
        }
    }

    pub fn entries(&self) -> &[EvidenceEntry] {
        &self.entries
    }

    pub fn lookup(&self, phrase: &str) -> Option<&EvidenceEntry> {
        let key: Vec<String> = tokenize(phrase).into_iter().map(|t| t.text).collect();
        self.by_tokens.get(&key).map(|&i| &self.entries[i])
    }

    /// Tab-separated dump, one entry per line.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&format!("{e}\n"));
        }
        out
    }
}

/// The built-in evidence lexicon. "able" and "independent" appear as
/// asserted evidence and "unable" as negative evidence; the pertinent-
/// negative constructs ("no trouble" and friends) are asserted
/// evidence; slot-negation markers ("difficulty", "trouble") make
/// "Difficulty Walking" a negated action.
pub fn default_lexicon() -> Lexicon {
    use ContextAttribute::*;
    use Direction::*;
    let mut entries = vec![
        // negation cues
        EvidenceEntry::cue("no", Negated, Forward),
        EvidenceEntry::cue("not", Negated, Forward),
        EvidenceEntry::cue("unable", Negated, Forward),
        EvidenceEntry::cue("cannot", Negated, Forward),
        EvidenceEntry::cue("can't", Negated, Forward),
        EvidenceEntry::cue("denies", Negated, Forward),
        EvidenceEntry::cue("without", Negated, Forward),
        EvidenceEntry::cue("none", Negated, Forward),
        EvidenceEntry::cue("difficulty", Negated, Forward),
        EvidenceEntry::cue("difficult", Negated, Forward),
        EvidenceEntry::cue("trouble", Negated, Forward),
        EvidenceEntry::cue("dependent", Negated, Bidirectional),
        // assertion cues
        EvidenceEntry::cue("able", Asserted, Forward),
        EvidenceEntry::cue("can", Asserted, Forward),
        EvidenceEntry::cue("independent", Asserted, Bidirectional),
        EvidenceEntry::cue("independently", Asserted, Bidirectional),
        EvidenceEntry::cue("yes", Asserted, Bidirectional),
        // pertinent negatives (asserted evidence on a negation word)
        EvidenceEntry::cue("no trouble", Asserted, Bidirectional),
        EvidenceEntry::cue("no difficulty", Asserted, Bidirectional),
        EvidenceEntry::cue("no problem", Asserted, Bidirectional),
        EvidenceEntry::cue("without difficulty", Asserted, Bidirectional),
        EvidenceEntry::cue("denies difficulty", Asserted, Bidirectional),
        // conditional / hypothetical
        EvidenceEntry::cue("if", Conditional, Forward),
        EvidenceEntry::cue("would", Hypothetical, Forward),
        EvidenceEntry::cue("goal", Hypothetical, Bidirectional),
        EvidenceEntry::cue("plan to", Hypothetical, Forward),
        EvidenceEntry::cue("in order to", Hypothetical, Forward),
        // historical
        EvidenceEntry::cue("history of", Historical, Forward),
        EvidenceEntry::cue("previously", Historical, Forward),
        // subject
        EvidenceEntry::cue("family", SubjectOther, Forward),
        EvidenceEntry::cue("caregiver", SubjectOther, Forward),
    ];
    for term in ["but", "however", "except", ";"] {
        entries.push(EvidenceEntry::terminator(term));
    }
    Lexicon::new(entries)
}

/// Parse lexicon lines: `phrase TAB attribute TAB direction TAB flag`
/// where terminators use `-` for attribute/direction and flag `term`.
pub fn parse_lexicon<R: BufRead>(reader: R) -> Result<Vec<EvidenceEntry>, LexiconError> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = i + 1;
        let trimmed = line.trim_end();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split('\t').collect();
        if fields.len() != 4 {
            return Err(LexiconError::Malformed {
                line: lineno,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let phrase = fields[0].trim();
        if phrase.is_empty() {
            return Err(LexiconError::Malformed {
                line: lineno,
                reason: "empty phrase".into(),
            });
        }
        match fields[3].trim() {
            "term" => entries.push(EvidenceEntry::terminator(phrase)),
            "cue" => {
                let attribute = ContextAttribute::from_str(fields[1].trim())
                    .map_err(|reason| LexiconError::Malformed {
                        line: lineno,
                        reason,
                    })?;
                let direction = Direction::from_str(fields[2].trim()).map_err(|reason| {
                    LexiconError::Malformed {
                        line: lineno,
                        reason,
                    }
                })?;
                entries.push(EvidenceEntry::cue(phrase, attribute, direction));
            }
            other => {
                return Err(LexiconError::Malformed {
                    line: lineno,
                    reason: format!("flag must be 'cue' or 'term', found {other}"),
                });
            }
        }
    }
    Ok(entries)
}

/// Load the lexicon: the built-in default, overlaid with entries from
/// `path` when given (last writer wins per phrase).
pub fn load_lexicon(path: Option<&Path>) -> Result<Lexicon, LexiconError> {
    let mut entries = default_lexicon().entries.clone();
    if let Some(path) = path {
        let file = std::fs::File::open(path)?;
        entries.extend(parse_lexicon(std::io::BufReader::new(file))?);
    }
    Ok(Lexicon::new(entries))
}

/// Per-mention contextual attributes. The six core attributes accumulate
/// independently; `pertinent_negative` and `env_negation` are derived
/// flags consumed by the rule engine.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextAttributes {
    pub negated: bool,
    pub asserted: bool,
    pub conditional: bool,
    pub hypothetical: bool,
    pub historical: bool,
    pub subject_other: bool,
    pub pertinent_negative: bool,
    pub env_negation: bool,
}

/// A lexicon phrase matched over the token sequence.
#[derive(Debug, Clone, Copy)]
struct PhraseMatch {
    entry: usize,
    start: usize, // token index
    end: usize,
}

/// Longest-match-first scan: at each position try the longest phrase
/// first; a match consumes its tokens ("no trouble" wins over "no").
fn scan_matches(tokens: &[Token], lexicon: &Lexicon) -> Vec<PhraseMatch> {
    let texts: Vec<&str> = tokens.iter().map(|t| t.text.as_str()).collect();
    let mut matches = Vec::new();
    let mut i = 0;
    while i < texts.len() {
        let mut advanced = false;
        let longest = lexicon.max_phrase_tokens.min(texts.len() - i);
        for len in (1..=longest).rev() {
            let key: Vec<String> = texts[i..i + len].iter().map(|s| s.to_string()).collect();
            if let Some(&entry) = lexicon.by_tokens.get(&key) {
                matches.push(PhraseMatch {
                    entry,
                    start: i,
                    end: i + len,
                });
                i += len;
                advanced = true;
                break;
            }
        }
        if !advanced {
            i += 1;
        }
    }
    matches
}

/// Token index range overlapping a char span.
fn token_range(tokens: &[Token], span: &Span) -> (usize, usize) {
    let mut start = tokens.len();
    let mut end = tokens.len();
    for (i, t) in tokens.iter().enumerate() {
        if t.span.overlaps(span) {
            if i < start {
                start = i;
            }
            end = i + 1;
        }
    }
    if start > end {
        start = end;
    }
    (start, end)
}

fn blocked(terminators: &[usize], from: usize, to: usize) -> bool {
    terminators.iter().any(|&t| from <= t && t < to)
}

/// Assign contextual attributes to each mention of one sentence.
///
/// A Forward cue affects mentions after it up to the next terminator or
/// sentence end; Backward affects mentions before it back to the
/// previous terminator or sentence start; Bidirectional goes both ways.
/// Scope never crosses the sentence.
pub fn apply_context(
    tokens: &[Token],
    mentions: &[Span],
    lexicon: &Lexicon,
) -> Vec<ContextAttributes> {
    let matches = scan_matches(tokens, lexicon);
    let terminator_positions: Vec<usize> = matches
        .iter()
        .filter(|m| lexicon.entries[m.entry].is_terminator)
        .map(|m| m.start)
        .collect();

    mentions
        .iter()
        .map(|span| {
            let (ms, me) = token_range(tokens, span);
            let mut attrs = ContextAttributes::default();
            let mut applied: Vec<&PhraseMatch> = Vec::new();
            for m in &matches {
                let entry = &lexicon.entries[m.entry];
                if entry.is_terminator {
                    continue;
                }
                // cues inside the mention itself do not scope over it
                if m.start < me && m.end > ms {
                    continue;
                }
                let forward_hit =
                    m.end <= ms && !blocked(&terminator_positions, m.end, ms);
                let backward_hit =
                    m.start >= me && !blocked(&terminator_positions, me, m.start);
                let hits = match entry.direction {
                    Direction::Forward => forward_hit,
                    Direction::Backward => backward_hit,
                    Direction::Bidirectional => forward_hit || backward_hit,
                };
                if !hits {
                    continue;
                }
                applied.push(m);
                match entry.attribute {
                    Some(ContextAttribute::Negated) => attrs.negated = true,
                    Some(ContextAttribute::Asserted) => attrs.asserted = true,
                    Some(ContextAttribute::Conditional) => attrs.conditional = true,
                    Some(ContextAttribute::Hypothetical) => attrs.hypothetical = true,
                    Some(ContextAttribute::Historical) => attrs.historical = true,
                    Some(ContextAttribute::SubjectOther) => attrs.subject_other = true,
                    None => {}
                }
                if lexicon.entries[m.entry].is_pertinent_negative() {
                    attrs.pertinent_negative = true;
                }
            }

            // pertinent-negative override: the construct asserts ability
            if attrs.pertinent_negative {
                attrs.asserted = true;
                attrs.negated = false;
            }

            // environment negation: a negated mention followed in-scope
            // by "without" or an asserted modifier ("independently")
            if attrs.negated {
                for m in &matches {
                    let entry = &lexicon.entries[m.entry];
                    if entry.is_terminator || m.start < me {
                        continue;
                    }
                    if blocked(&terminator_positions, me, m.start) {
                        continue;
                    }
                    let without = entry.phrase == "without";
                    let asserted_modifier =
                        entry.attribute == Some(ContextAttribute::Asserted);
                    if without || asserted_modifier {
                        attrs.env_negation = true;
                        break;
                    }
                }
            }
            attrs
        })
        .collect()
}

/// True when a pertinent-negative construct governs the mention. Such
/// mentions are treated as asserted, overriding negation.
pub fn pertinent_negative_check(tokens: &[Token], mention: &Span, lexicon: &Lexicon) -> bool {
    apply_context(tokens, &[*mention], lexicon)[0].pertinent_negative
}

/// Direction-agnostic evidence presence inside a token window. Used by
/// the slot:value rules, where position within the slot or value span
/// is what matters, not scope direction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EvidencePresence {
    pub asserted: bool,
    pub negated: bool,
}

pub fn scan_evidence(tokens: &[Token], lexicon: &Lexicon) -> EvidencePresence {
    let mut presence = EvidencePresence::default();
    for m in scan_matches(tokens, lexicon) {
        let entry = &lexicon.entries[m.entry];
        match entry.attribute {
            Some(ContextAttribute::Asserted) => presence.asserted = true,
            Some(ContextAttribute::Negated) => presence.negated = true,
            _ => {}
        }
    }
    presence
}
