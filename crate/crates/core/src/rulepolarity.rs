//! Rule-based polarity assignment: hypothetical-section rules with the
//! goal-met exception, the slot:value rule table, and prose rules over
//! contextual attributes.
//!
//! Precedence is section > slot:value > prose. Mentions that receive no
//! label map to the "None" polarity downstream.

use serde::{Deserialize, Serialize};

use crate::context::{apply_context, scan_evidence, ContextAttributes, Lexicon};
use crate::corpus::{ActionMention, Corpus, Document, InstanceRef, PolarityLabel, Span};
use crate::docstruct::{decompose, locate_mention, DocElement, ElementKind, LocusKind, MentionLocus};
use crate::features::{tokenize_span, Token};

/// Section names treated as hypothetical constructs: mentions inside
/// them carry no polarity unless a goal-met cue is present.
pub const HYPOTHETICAL_SECTIONS: [&str; 5] =
    ["plan", "goals", "education", "intervention", "recommendations"];

/// Default cues recognizing that a goal was met.
pub fn default_goal_met_cues() -> Vec<String> {
    vec!["goal met".into(), "met".into(), "achieved".into()]
}

/// Outcome of the rule engine for one mention: the label (absent when no
/// polarity was assigned), the fired rule, and an evaluation trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleDecision {
    pub label: Option<PolarityLabel>,
    pub rule_id: String,
    pub trace: Vec<String>,
}

impl RuleDecision {
    /// Unlabeled decisions map to "None".
    pub fn final_label(&self) -> PolarityLabel {
        self.label.unwrap_or(PolarityLabel::NoInfo)
    }
}

/// Everything the rule engine needs about a mention's surroundings.
pub struct RuleContext<'a> {
    pub doc: &'a Document,
    pub elements: &'a [DocElement],
    pub lexicon: &'a Lexicon,
    /// tokens of the sentence containing the mention
    pub sentence_tokens: &'a [Token],
    pub goal_met_cues: &'a [String],
}

fn is_numeric_chunk(chunk: &str) -> bool {
    let mut digits = 0;
    let mut prev_sep = true;
    for c in chunk.chars() {
        if c.is_ascii_digit() {
            digits += 1;
            prev_sep = false;
        } else if (c == '.' || c == '/') && !prev_sep {
            prev_sep = true;
        } else {
            return false;
        }
    }
    digits > 0 && !prev_sep
}

/// Values made entirely of numeric tokens: integers, decimals, and
/// fractions like "3/5".
pub fn is_numeric_value(value: &str) -> bool {
    let mut chunks = value.split_whitespace().peekable();
    if chunks.peek().is_none() {
        return false;
    }
    chunks.all(is_numeric_chunk)
}

fn contains_cue_sequence(tokens: &[Token], cue: &str) -> bool {
    let cue_tokens: Vec<String> = crate::features::tokenize(cue)
        .into_iter()
        .map(|t| t.text)
        .collect();
    if cue_tokens.is_empty() || cue_tokens.len() > tokens.len() {
        return false;
    }
    tokens
        .windows(cue_tokens.len())
        .any(|w| w.iter().zip(&cue_tokens).all(|(t, c)| &t.text == c))
}

fn decision(
    label: Option<PolarityLabel>,
    rule_id: &str,
    mut trace: Vec<String>,
) -> RuleDecision {
    trace.push(match label {
        Some(l) => format!("fired {rule_id} -> {l}"),
        None => format!("fired {rule_id} -> no polarity"),
    });
    RuleDecision {
        label,
        rule_id: rule_id.to_string(),
        trace,
    }
}

/// Count actions of the document lying inside a span (the slot of a
/// construct); two or more trigger the multiple-actions rule.
fn actions_within(doc: &Document, container: &Span) -> usize {
    doc.mobilities
        .iter()
        .flat_map(|m| m.actions.iter())
        .filter(|a| container.contains(&a.span))
        .count()
}

/// Classify one mention given its structural locus and contextual
/// attributes. Total: always returns a decision.
pub fn classify_rule(
    action: &ActionMention,
    locus: &MentionLocus,
    attrs: &ContextAttributes,
    ctx: &RuleContext,
) -> RuleDecision {
    let mut trace = vec![format!(
        "locus={:?} section={}",
        locus.kind,
        locus.section_name.as_deref().unwrap_or("-")
    )];

    // 1. hypothetical sections suppress polarity unless a goal was met
    if let Some(name) = &locus.section_name {
        if HYPOTHETICAL_SECTIONS.iter().any(|h| name.contains(h)) {
            let met = ctx
                .goal_met_cues
                .iter()
                .any(|cue| contains_cue_sequence(ctx.sentence_tokens, cue));
            trace.push(format!("hypothetical section '{name}', goal_met={met}"));
            return if met {
                decision(Some(PolarityLabel::Able), "section.goal_met", trace)
            } else {
                decision(None, "section.hypothetical", trace)
            };
        }
    }

    // 2. slot rules for mentions inside a slot (or question) span
    if locus.kind == LocusKind::InSlot {
        if let Some(idx) = locus.element {
            let (slot_span, value_span) = match &ctx.elements[idx].kind {
                ElementKind::SlotValue { slot, value, .. } => (*slot, *value),
                ElementKind::QuestionAnswer { question, answer } => (*question, *answer),
                _ => (action.span, Span::new(action.span.end, action.span.end)),
            };
            return classify_slot(action, slot_span, value_span, ctx, trace);
        }
    }

    // mentions inside a bare section name give no information
    if locus.kind == LocusKind::InSectionName {
        return decision(None, "section.name_mention", trace);
    }

    // 3. prose and in-value mentions resolve from contextual attributes
    trace.push(format!(
        "attrs: negated={} asserted={} conditional={} hypothetical={} pn={} env={}",
        attrs.negated,
        attrs.asserted,
        attrs.conditional,
        attrs.hypothetical,
        attrs.pertinent_negative,
        attrs.env_negation
    ));
    if attrs.conditional || attrs.hypothetical {
        return decision(None, "prose.conditional", trace);
    }
    if attrs.pertinent_negative {
        return decision(Some(PolarityLabel::Able), "prose.pertinent_negative", trace);
    }
    if attrs.negated && attrs.env_negation {
        return decision(Some(PolarityLabel::Unclear), "prose.env_negation", trace);
    }
    if attrs.negated {
        return decision(Some(PolarityLabel::Unable), "prose.negated", trace);
    }
    if attrs.asserted {
        return decision(Some(PolarityLabel::Able), "prose.asserted", trace);
    }
    decision(None, "prose.no_evidence", trace)
}

fn classify_slot(
    action: &ActionMention,
    slot_span: Span,
    value_span: Span,
    ctx: &RuleContext,
    mut trace: Vec<String>,
) -> RuleDecision {
    let _ = action;
    let shared = actions_within(ctx.doc, &slot_span);
    if shared >= 2 {
        trace.push(format!("{shared} actions share the slot"));
        return decision(None, "slot.multiple_actions", trace);
    }
    if value_span.is_empty() {
        return decision(None, "slot.no_value", trace);
    }

    let value_tokens = tokenize_span(&ctx.doc.text, value_span);
    let slot_tokens = tokenize_span(&ctx.doc.text, slot_span);
    let value_evidence = scan_evidence(&value_tokens, ctx.lexicon);
    let slot_evidence = scan_evidence(&slot_tokens, ctx.lexicon);
    let slot_negated = slot_evidence.negated;
    trace.push(format!(
        "slot_negated={slot_negated} value_asserted={} value_negated={}",
        value_evidence.asserted, value_evidence.negated
    ));

    if value_evidence.asserted || value_evidence.negated {
        let (label, rule_id) = match (slot_negated, value_evidence.negated) {
            (false, true) => (PolarityLabel::Unable, "slot.asserted_negated"),
            (false, false) => (PolarityLabel::Able, "slot.asserted_asserted"),
            (true, true) => (PolarityLabel::Able, "slot.negated_negated"),
            (true, false) => (PolarityLabel::Unable, "slot.negated_asserted"),
        };
        return decision(Some(label), rule_id, trace);
    }

    let value_text: String = crate::util::slice_chars(
        &ctx.doc.text,
        value_span.start,
        value_span.end,
    )
    .to_string();
    if is_numeric_value(&value_text) {
        return decision(Some(PolarityLabel::Unclear), "slot.numbers", trace);
    }
    decision(
        Some(PolarityLabel::Unclear),
        "slot.no_context_evidence",
        trace,
    )
}

/// Run the full pipeline (decompose, contextual attributes, rules) over
/// one document. Decisions come back in instance order.
pub fn classify_document_rule(doc: &Document, lexicon: &Lexicon) -> Vec<RuleDecision> {
    classify_document_with_cues(doc, lexicon, &default_goal_met_cues())
}

pub fn classify_document_with_cues(
    doc: &Document,
    lexicon: &Lexicon,
    goal_met_cues: &[String],
) -> Vec<RuleDecision> {
    let elements = decompose(&doc.text);
    let sentences: Vec<Span> = elements
        .iter()
        .filter(|el| matches!(el.kind, ElementKind::Sentence))
        .map(|el| el.span)
        .collect();
    let sentence_tokens: Vec<Vec<Token>> = sentences
        .iter()
        .map(|s| tokenize_span(&doc.text, *s))
        .collect();
    let empty: Vec<Token> = Vec::new();

    let mut decisions = Vec::new();
    for mob in &doc.mobilities {
        for action in &mob.actions {
            let locus = locate_mention(doc, action, &elements);
            let tokens = sentences
                .iter()
                .position(|s| s.contains_idx(action.span.start))
                .map(|i| &sentence_tokens[i])
                .unwrap_or(&empty);
            let attrs = apply_context(tokens, &[action.span], lexicon)
                .pop()
                .unwrap_or_default();
            let ctx = RuleContext {
                doc,
                elements: &elements,
                lexicon,
                sentence_tokens: tokens,
                goal_met_cues,
            };
            decisions.push(classify_rule(action, &locus, &attrs, &ctx));
        }
    }
    decisions
}

/// Rule decisions for every instance of a corpus, in instance order.
pub fn classify_corpus_rule(
    corpus: &Corpus,
    lexicon: &Lexicon,
) -> Vec<(InstanceRef, RuleDecision)> {
    let mut out = Vec::new();
    for (d, doc) in corpus.documents.iter().enumerate() {
        let decisions = classify_document_rule(doc, lexicon);
        let mut i = 0;
        for (m, mob) in doc.mobilities.iter().enumerate() {
            for a in 0..mob.actions.len() {
                out.push((
                    InstanceRef {
                        doc: d,
                        mobility: m,
                        action: a,
                    },
                    decisions[i].clone(),
                ));
                i += 1;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::context::default_lexicon;
    use crate::corpus::MobilityMention;

    /// A one-line document whose whole text is the mobility mention and
    /// whose action covers the named fragment.
    fn doc_with(text: &str, action: &str) -> Document {
        let pos = text.find(action).expect("action in text");
        Document {
            id: "t".into(),
            text: text.to_string(),
            mobilities: vec![MobilityMention {
                span: Span::new(0, text.chars().count()),
                actions: vec![ActionMention {
                    span: Span::new(pos, pos + action.chars().count()),
                    gold: None,
                }],
            }],
        }
    }

    fn rule_label(text: &str, action: &str) -> (PolarityLabel, String) {
        let lexicon = default_lexicon();
        let doc = doc_with(text, action);
        let d = classify_document_rule(&doc, &lexicon)
            .pop()
            .expect("one decision");
        (d.final_label(), d.rule_id)
    }

    #[test]
    fn table2_conformance() {
        use PolarityLabel::*;
        let rows: [(&str, &str, PolarityLabel); 7] = [
            ("Transfers: Independent", "Transfers", Able),
            ("Transfers: Unable", "Transfers", Unable),
            ("Difficulty Walking: No", "Walking", Able),
            ("Unable to Walk: yes", "Walk", Unable),
            ("Transfers: 4", "Transfers", Unclear),
            ("Sit to stand: minimal assist", "Sit to stand", Unclear),
            ("Stand to sit:", "Stand to sit", NoInfo),
        ];
        for (text, action, expected) in rows {
            let (label, rule) = rule_label(text, action);
            assert_eq!(label, expected, "{text} (rule {rule})");
        }
    }

    #[test]
    fn table2_multiple_actions_row() {
        // three activities share one slot; none receives a polarity
        let text = "Difficulty with chores, shopping, driving: Yes";
        let lexicon = default_lexicon();
        let mut actions = Vec::new();
        for word in ["chores", "shopping", "driving"] {
            let pos = text.find(word).unwrap();
            actions.push(ActionMention {
                span: Span::new(pos, pos + word.len()),
                gold: None,
            });
        }
        let doc = Document {
            id: "t".into(),
            text: text.into(),
            mobilities: vec![MobilityMention {
                span: Span::new(0, text.len()),
                actions,
            }],
        };
        let decisions = classify_document_rule(&doc, &lexicon);
        assert_eq!(decisions.len(), 3);
        for d in decisions {
            assert_eq!(d.final_label(), PolarityLabel::NoInfo);
            assert_eq!(d.rule_id, "slot.multiple_actions");
        }
    }

    #[test]
    fn label_definition_examples() {
        use PolarityLabel::*;
        assert_eq!(
            rule_label("She states she can walk 20 minutes before tiring", "walk").0,
            Able
        );
        assert_eq!(rule_label("He is unable to walk", "walk").0, Unable);
        assert_eq!(
            rule_label("unable to propel wheelchair independently", "propel").0,
            Unclear
        );
        // numeric slot value reads Unclear under the slot rules
        assert_eq!(rule_label("Ambulation: 1", "Ambulation").0, Unclear);
    }

    #[test]
    fn pertinent_negative_classifies_able() {
        assert_eq!(
            rule_label("no trouble walking", "walking"),
            (PolarityLabel::Able, "prose.pertinent_negative".to_string())
        );
        assert_eq!(
            rule_label("Pt ambulated 300 feet without difficulty", "ambulated").0,
            PolarityLabel::Able
        );
    }

    #[test]
    fn conditional_mentions_get_no_polarity() {
        let (label, rule) = rule_label("If pt tolerates, will progress walk training", "walk");
        assert_eq!(label, PolarityLabel::NoInfo);
        assert_eq!(rule, "prose.conditional");
        // conditional wins even when negation is present
        let (label, rule) = rule_label("if pt cannot walk, call PT", "walk");
        assert_eq!(label, PolarityLabel::NoInfo);
        assert_eq!(rule, "prose.conditional");
    }

    #[test]
    fn goals_section_suppresses_unless_met() {
        let lexicon = default_lexicon();
        let base = "GOALS:\nPt to ambulate 100 feet.";
        let pos = base.find("ambulate").unwrap();
        let doc = Document {
            id: "g".into(),
            text: base.into(),
            mobilities: vec![MobilityMention {
                span: Span::new(7, base.len()),
                actions: vec![ActionMention {
                    span: Span::new(pos, pos + 8),
                    gold: None,
                }],
            }],
        };
        let d = classify_document_rule(&doc, &lexicon).pop().unwrap();
        assert_eq!(d.final_label(), PolarityLabel::NoInfo);
        assert_eq!(d.rule_id, "section.hypothetical");

        let met = "GOALS:\nPt to ambulate 100 feet, goal met.";
        let doc_met = Document {
            id: "g".into(),
            text: met.into(),
            mobilities: vec![MobilityMention {
                span: Span::new(7, met.len()),
                actions: vec![ActionMention {
                    span: Span::new(pos, pos + 8),
                    gold: None,
                }],
            }],
        };
        let d = classify_document_rule(&doc_met, &lexicon).pop().unwrap();
        assert_eq!(d.final_label(), PolarityLabel::Able);
        assert_eq!(d.rule_id, "section.goal_met");
    }

    #[test]
    fn section_dominance_wraps_any_instance() {
        // the same slot line flips to NoInfo inside a goals section
        let lexicon = default_lexicon();
        let text = "GOALS:\nTransfers: Independent";
        let pos = text.find("Transfers").unwrap();
        let doc = Document {
            id: "s".into(),
            text: text.into(),
            mobilities: vec![MobilityMention {
                span: Span::new(pos, text.len()),
                actions: vec![ActionMention {
                    span: Span::new(pos, pos + 9),
                    gold: None,
                }],
            }],
        };
        let d = classify_document_rule(&doc, &lexicon).pop().unwrap();
        assert_eq!(d.final_label(), PolarityLabel::NoInfo);
    }

    #[test]
    fn numeric_value_detection() {
        assert!(is_numeric_value("4"));
        assert!(is_numeric_value("3/5"));
        assert!(is_numeric_value("3.5"));
        assert!(is_numeric_value("4 5"));
        assert!(!is_numeric_value("4+"));
        assert!(!is_numeric_value("minimal assist"));
        assert!(!is_numeric_value(""));
        assert!(!is_numeric_value("3/"));
    }

    #[test]
    fn totality_and_trace_completeness() {
        let lexicon = default_lexicon();
        let texts = [
            ("Transfers: Independent", "Transfers"),
            ("pt walked today", "walked"),
            ("no trouble walking", "walking"),
            ("GOALS:", "GOALS"),
        ];
        for (text, action) in texts {
            let doc = doc_with(text, action);
            for d in classify_document_rule(&doc, &lexicon) {
                assert!(!d.rule_id.is_empty(), "{text}: missing rule id");
                assert!(!d.trace.is_empty(), "{text}: missing trace");
                let _ = d.final_label(); // total
            }
        }
    }

    #[test]
    fn empty_document_yields_no_decisions() {
        let lexicon = default_lexicon();
        let doc = Document {
            id: "e".into(),
            text: String::new(),
            mobilities: vec![],
        };
        assert!(classify_document_rule(&doc, &lexicon).is_empty());
    }

    #[test]
    fn in_value_mentions_follow_prose_rules() {
        // mention inside the value part of a construct
        let lexicon = default_lexicon();
        let text = "Status: unable to walk";
        let pos = text.find("walk").unwrap();
        let doc = Document {
            id: "v".into(),
            text: text.into(),
            mobilities: vec![MobilityMention {
                span: Span::new(8, text.len()),
                actions: vec![ActionMention {
                    span: Span::new(pos, pos + 4),
                    gold: None,
                }],
            }],
        };
        let d = classify_document_rule(&doc, &lexicon).pop().unwrap();
        assert_eq!(d.final_label(), PolarityLabel::Unable);
        assert_eq!(d.rule_id, "prose.negated");
    }
}
