//! Document decomposition: sentences, nested sections, slot:value
//! constructs, question/answer lines and bullet items, plus the
//! structural locus of each Action mention.
//!
//! All spans are Unicode scalar-value offsets into the document text.
//! Clinical notes are line-oriented, so a newline always terminates a
//! sentence, and slot:value / question-answer constructs are detected
//! per physical line.

use serde::{Deserialize, Serialize};

use crate::corpus::{ActionMention, Document, Span};

/// Kind-specific payload of a structural element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ElementKind {
    Section {
        name: String,
        depth: usize,
        name_span: Span,
    },
    Sentence,
    SlotValue {
        slot: Span,
        value: Span,
        nested: bool,
    },
    QuestionAnswer {
        question: Span,
        answer: Span,
    },
    BulletItem,
}

/// One parsed structural element.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocElement {
    pub span: Span,
    #[serde(flatten)]
    pub kind: ElementKind,
}

/// Where an Action mention sits structurally.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocusKind {
    Prose,
    InSlot,
    InValue,
    InSectionName,
}

/// Structural locus of a mention: its kind, the element it sits in
/// (index into the element list), and the innermost enclosing section
/// name when one exists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MentionLocus {
    pub kind: LocusKind,
    pub element: Option<usize>,
    pub section_name: Option<String>,
}

fn is_sentence_terminator(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

/// Split text into sentence spans. Spans are ordered, non-overlapping,
/// and cover every non-whitespace character. A newline always ends a
/// sentence; `.`/`!`/`?` end one when followed by whitespace, so
/// decimals like `3.5` stay intact.
pub fn segment_sentences(text: &str) -> Vec<Span> {
    let chars: Vec<char> = text.chars().collect();
    let mut spans = Vec::new();
    let mut start: Option<usize> = None;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c == '\n' {
            if let Some(s) = start.take() {
                spans.push(Span::new(s, i));
            }
        } else if !c.is_whitespace() && start.is_none() {
            start = Some(i);
        }
        if start.is_some() && is_sentence_terminator(c) {
            let next_ws = chars.get(i + 1).map(|n| n.is_whitespace()).unwrap_or(true);
            if next_ws {
                spans.push(Span::new(start.take().unwrap(), i + 1));
            }
        }
        i += 1;
    }
    if let Some(s) = start {
        spans.push(Span::new(s, trim_end_idx(&chars, chars.len())));
    }
    spans
}

fn trim_end_idx(chars: &[char], mut end: usize) -> usize {
    while end > 0 && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    end
}

/// Lines with their starting char offset. Line text excludes the
/// newline.
fn char_lines(text: &str) -> Vec<(usize, String)> {
    let mut lines = Vec::new();
    let mut current = String::new();
    let mut start = 0usize;
    let mut idx = 0usize;
    for c in text.chars() {
        if c == '\n' {
            lines.push((start, std::mem::take(&mut current)));
            start = idx + 1;
        } else {
            current.push(c);
        }
        idx += 1;
    }
    lines.push((start, current));
    lines
}

/// Indentation depth: one level per tab or per two leading spaces.
fn indent_depth(line: &[char]) -> usize {
    let mut depth = 0;
    let mut spaces = 0;
    for &c in line {
        match c {
            '\t' => depth += 1,
            ' ' => {
                spaces += 1;
                if spaces == 2 {
                    depth += 1;
                    spaces = 0;
                }
            }
            _ => break,
        }
    }
    depth
}

/// Header grammar: at most 6 tokens, and either ends with a bare colon
/// or is fully uppercase with at least 3 letters. A line carrying a
/// non-empty value after its colon is a slot:value construct, never a
/// header.
fn header_name_of(line: &str) -> Option<String> {
    let trimmed = line.trim();
    if trimmed.is_empty() {
        return None;
    }
    if trimmed.split_whitespace().count() > 6 {
        return None;
    }
    if let Some(colon) = trimmed.find(':') {
        if !trimmed[colon + 1..].trim().is_empty() {
            return None; // slot:value takes precedence
        }
    }
    let bare_colon = trimmed.ends_with(':');
    let letters: Vec<char> = trimmed.chars().filter(|c| c.is_alphabetic()).collect();
    let uppercase = letters.len() >= 3 && letters.iter().all(|c| c.is_uppercase());
    if !(bare_colon || uppercase) {
        return None;
    }
    let name = trimmed.trim_end_matches(':').trim();
    if name.is_empty() {
        return None;
    }
    Some(name.to_lowercase())
}

/// Detect sections. A header opens a section running to the next header
/// of equal-or-shallower depth, or end of document; deeper headers nest.
pub fn detect_sections(text: &str) -> Vec<DocElement> {
    let lines = char_lines(text);
    let total = text.chars().count();

    struct Header {
        line_start: usize,
        depth: usize,
        name: String,
        name_span: Span,
    }

    let mut headers = Vec::new();
    for (start, line) in &lines {
        if let Some(name) = header_name_of(line) {
            let line_chars: Vec<char> = line.chars().collect();
            let depth = indent_depth(&line_chars);
            // name span: first non-ws char through the name end
            let lead = line_chars.len() - line.trim_start().chars().count();
            let name_len = line.trim().trim_end_matches(':').trim_end().chars().count();
            headers.push(Header {
                line_start: *start,
                depth,
                name,
                name_span: Span::new(start + lead, start + lead + name_len),
            });
        }
    }

    let mut sections = Vec::new();
    for (i, h) in headers.iter().enumerate() {
        let end = headers[i + 1..]
            .iter()
            .find(|other| other.depth <= h.depth)
            .map(|other| other.line_start)
            .unwrap_or(total);
        sections.push(DocElement {
            span: Span::new(h.line_start, end),
            kind: ElementKind::Section {
                name: h.name.clone(),
                depth: h.depth,
                name_span: h.name_span,
            },
        });
    }
    sections
}

/// Bullet markers: `-`, `*`, `•`, or an enumerator like `1.` followed
/// by whitespace. Returns the char offset where the content begins.
fn bullet_content_start(chars: &[char]) -> Option<usize> {
    let mut i = 0;
    while i < chars.len() && chars[i].is_whitespace() {
        i += 1;
    }
    let marker_end = if i < chars.len() && matches!(chars[i], '-' | '*' | '•') {
        i + 1
    } else {
        let mut j = i;
        while j < chars.len() && chars[j].is_ascii_digit() {
            j += 1;
        }
        if j > i && j < chars.len() && chars[j] == '.' {
            j + 1
        } else {
            return None;
        }
    };
    if marker_end >= chars.len() || !chars[marker_end].is_whitespace() {
        return None;
    }
    let mut content = marker_end;
    while content < chars.len() && chars[content].is_whitespace() {
        content += 1;
    }
    if content == chars.len() {
        return None;
    }
    Some(content)
}

/// A following slot begins at a run of at most 4 words ending in `:`,
/// preceded by two or more spaces or a tab. Returns (run start, colon
/// index) for the earliest such construct at or after `from`.
fn next_construct(chars: &[char], from: usize) -> Option<(usize, usize)> {
    let mut i = from;
    while i < chars.len() {
        if chars[i] == ':' {
            if let Some(start) = construct_run_start(chars, from, i) {
                return Some((start, i));
            }
        }
        i += 1;
    }
    None
}

/// Walk back from a colon to find a token run of 1..=4 words preceded
/// by a two-space / tab gap.
fn construct_run_start(chars: &[char], from: usize, colon: usize) -> Option<usize> {
    let mut words = 0;
    let mut in_word = false;
    let mut j = colon;
    while j > from {
        let c = chars[j - 1];
        if c == '\t' {
            if in_word {
                words += 1;
            }
            return (1..=4).contains(&words).then_some(j);
        } else if c == ' ' {
            if in_word {
                words += 1;
                in_word = false;
            }
            if j >= 2 && chars[j - 2] == ' ' {
                return (1..=4).contains(&words).then_some(j);
            }
            j -= 1;
        } else if c == ':' {
            return None;
        } else {
            in_word = true;
            j -= 1;
        }
    }
    None
}

fn trimmed_span(chars: &[char], mut start: usize, mut end: usize) -> Span {
    while start < end && chars[start].is_whitespace() {
        start += 1;
    }
    while end > start && chars[end - 1].is_whitespace() {
        end -= 1;
    }
    Span::new(start, end)
}

/// Parse one physical line (no newline) into slot:value / question-
/// answer / bullet elements. `line_offset` is the char offset of the
/// line within its document; all returned spans are document-absolute.
pub fn detect_slot_values(line: &str, line_offset: usize) -> Vec<DocElement> {
    debug_assert!(!line.contains('\n'));
    let chars: Vec<char> = line.chars().collect();
    let mut elements = Vec::new();

    let mut content_start = 0usize;
    if let Some(start) = bullet_content_start(&chars) {
        let content_end = trim_end_idx(&chars, chars.len());
        elements.push(DocElement {
            span: Span::new(line_offset + start, line_offset + content_end),
            kind: ElementKind::BulletItem,
        });
        content_start = start;
    }

    // question/answer: a question mark with an answer token after it,
    // and no earlier colon construct
    if let Some(q_rel) = chars[content_start..].iter().position(|&c| c == '?') {
        let q = content_start + q_rel;
        let first_colon = chars[content_start..q].iter().position(|&c| c == ':');
        let answer = trimmed_span(&chars, q + 1, chars.len());
        if first_colon.is_none() && !answer.is_empty() {
            let question = trimmed_span(&chars, content_start, q + 1);
            elements.push(DocElement {
                span: Span::new(line_offset + question.start, line_offset + answer.end),
                kind: ElementKind::QuestionAnswer {
                    question: question.offset(line_offset),
                    answer: answer.offset(line_offset),
                },
            });
            return elements;
        }
    }

    // slot:value constructs, possibly several per line
    let mut cursor = content_start;
    loop {
        let colon_rel = match chars[cursor..].iter().position(|&c| c == ':') {
            Some(p) => cursor + p,
            None => break,
        };
        let slot = trimmed_span(&chars, cursor, colon_rel);
        if slot.is_empty() {
            cursor = colon_rel + 1;
            continue;
        }
        let (value_end, next_cursor) = match next_construct(&chars, colon_rel + 1) {
            Some((run_start, _)) => (run_start, Some(run_start)),
            None => (chars.len(), None),
        };
        let mut value = trimmed_span(&chars, colon_rel + 1, value_end);
        if value.is_empty() {
            // zero-length value anchored just past the colon
            let anchor = (colon_rel + 1).min(chars.len());
            value = Span::new(anchor, anchor);
        }
        let value_text: String = chars[value.start..value.end].iter().collect();
        let nested = match value_text.find(':') {
            Some(pos) => !value_text[..pos].trim().is_empty(),
            None => false,
        };
        let construct_end = if value.is_empty() {
            colon_rel + 1
        } else {
            value.end
        };
        elements.push(DocElement {
            span: Span::new(line_offset + slot.start, line_offset + construct_end),
            kind: ElementKind::SlotValue {
                slot: slot.offset(line_offset),
                value: value.offset(line_offset),
                nested,
            },
        });
        match next_cursor {
            Some(n) => cursor = n,
            None => break,
        }
    }
    elements
}

/// Full decomposition of a document text: sections, line constructs and
/// sentences, in that group order.
pub fn decompose(text: &str) -> Vec<DocElement> {
    let mut elements = detect_sections(text);
    for (start, line) in char_lines(text) {
        elements.extend(detect_slot_values(&line, start));
    }
    elements.extend(segment_sentences(text).into_iter().map(|span| DocElement {
        span,
        kind: ElementKind::Sentence,
    }));
    elements
}

/// Assign the structural locus of one Action mention. Total: every
/// mention receives exactly one locus; the narrowest containing
/// construct wins, with slot beating value beating section name on
/// ties.
pub fn locate_mention(
    _doc: &Document,
    action: &ActionMention,
    elements: &[DocElement],
) -> MentionLocus {
    let span = &action.span;
    let mut best: Option<(usize, u8)> = None;
    let mut best_idx = None;
    let mut consider = |idx: usize, container: &Span, priority: u8| {
        if container.contains(span) && !container.is_empty() {
            let key = (container.len(), priority);
            if best.map(|b| key < b).unwrap_or(true) {
                best = Some(key);
                best_idx = Some(idx);
            }
        }
    };
    for (idx, el) in elements.iter().enumerate() {
        match &el.kind {
            ElementKind::SlotValue { slot, value, .. } => {
                consider(idx, slot, 0);
                consider(idx, value, 1);
            }
            ElementKind::QuestionAnswer { question, answer } => {
                consider(idx, question, 0);
                consider(idx, answer, 1);
            }
            ElementKind::Section { name_span, .. } => {
                consider(idx, name_span, 2);
            }
            _ => {}
        }
    }

    let section_name = innermost_section(span, elements);
    if let (Some((_, priority)), Some(idx)) = (best, best_idx) {
        let kind = match priority {
            0 => LocusKind::InSlot,
            1 => LocusKind::InValue,
            _ => LocusKind::InSectionName,
        };
        return MentionLocus {
            kind,
            element: Some(idx),
            section_name,
        };
    }

    // prose: attach the containing sentence when there is one
    let sentence = elements.iter().position(|el| {
        matches!(el.kind, ElementKind::Sentence) && el.span.contains_idx(span.start)
    });
    MentionLocus {
        kind: LocusKind::Prose,
        element: sentence,
        section_name,
    }
}

/// Name of the innermost section containing the mention start, if any.
fn innermost_section(span: &Span, elements: &[DocElement]) -> Option<String> {
    let mut best: Option<(usize, &str)> = None;
    for el in elements {
        if let ElementKind::Section { name, .. } = &el.kind {
            if el.span.contains_idx(span.start) {
                let better = best.map(|(len, _)| el.span.len() < len).unwrap_or(true);
                if better {
                    best = Some((el.span.len(), name));
                }
            }
        }
    }
    best.map(|(_, name)| name.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot_values_of(elements: &[DocElement]) -> Vec<(&Span, &Span, bool)> {
        elements
            .iter()
            .filter_map(|el| match &el.kind {
                ElementKind::SlotValue {
                    slot,
                    value,
                    nested,
                } => Some((slot, value, *nested)),
                _ => None,
            })
            .collect()
    }

    fn text_of(text: &str, span: &Span) -> String {
        crate::util::slice_chars(text, span.start, span.end).to_string()
    }

    #[test]
    fn two_terminated_sentences() {
        let text = "Pt walked 300'. Tolerated well.";
        let spans = segment_sentences(text);
        assert_eq!(spans.len(), 2);
        assert_eq!(text_of(text, &spans[0]), "Pt walked 300'.");
        assert_eq!(text_of(text, &spans[1]), "Tolerated well.");
    }

    #[test]
    fn newline_terminates_sentence() {
        let text = "Transfers: Independent\nAmbulation: 1";
        let spans = segment_sentences(text);
        assert_eq!(spans.len(), 2);
        assert_eq!(text_of(text, &spans[0]), "Transfers: Independent");
        assert_eq!(text_of(text, &spans[1]), "Ambulation: 1");
    }

    #[test]
    fn empty_text_yields_no_sentences() {
        assert!(segment_sentences("").is_empty());
        assert!(segment_sentences("  \n \n").is_empty());
    }

    #[test]
    fn decimals_do_not_split() {
        let text = "Score was 3.5 today.";
        let spans = segment_sentences(text);
        assert_eq!(spans.len(), 1);
    }

    #[test]
    fn sentences_cover_non_whitespace() {
        let text = "One. Two here\nThree: x  and more. ";
        let spans = segment_sentences(text);
        let chars: Vec<char> = text.chars().collect();
        for (i, c) in chars.iter().enumerate() {
            if !c.is_whitespace() {
                assert!(
                    spans.iter().any(|s| s.contains_idx(i)),
                    "char {i} ({c:?}) uncovered"
                );
            }
        }
        for w in spans.windows(2) {
            assert!(w[0].end <= w[1].start, "spans overlap or unordered");
        }
    }

    #[test]
    fn goals_header_opens_section() {
        let text = "GOALS:\npt to ambulate 100 feet";
        let sections = detect_sections(text);
        assert_eq!(sections.len(), 1);
        match &sections[0].kind {
            ElementKind::Section { name, depth, .. } => {
                assert_eq!(name, "goals");
                assert_eq!(*depth, 0);
            }
            other => panic!("expected section, got {other:?}"),
        }
        assert_eq!(sections[0].span, Span::new(0, text.chars().count()));
    }

    #[test]
    fn no_headers_no_sections() {
        assert!(detect_sections("pt walked down the hall today with a cane").is_empty());
    }

    #[test]
    fn nested_sections_report_inner_name() {
        let text = "ASSESSMENT:\npt seen today\n  Goals:\n  pt to walk 100 feet\n";
        let elements = decompose(text);
        let sections: Vec<_> = elements
            .iter()
            .filter(|el| matches!(el.kind, ElementKind::Section { .. }))
            .collect();
        assert_eq!(sections.len(), 2);
        let (outer, inner) = (&sections[0], &sections[1]);
        let (od, id) = match (&outer.kind, &inner.kind) {
            (ElementKind::Section { depth: od, .. }, ElementKind::Section { depth: id, .. }) => {
                (*od, *id)
            }
            _ => unreachable!(),
        };
        assert_eq!(id, od + 1);
        assert!(outer.span.contains(&inner.span));
        // mention "walk" inside the inner section
        let pos = text.find("walk 100").unwrap(); // ascii text: byte == char offset
        let action = ActionMention {
            span: Span::new(pos, pos + 4),
            gold: None,
        };
        let doc = Document {
            id: "t".into(),
            text: text.into(),
            mobilities: vec![],
        };
        let locus = locate_mention(&doc, &action, &elements);
        assert_eq!(locus.section_name.as_deref(), Some("goals"));
    }

    #[test]
    fn simple_slot_value() {
        let text = "Transfers: Independent";
        let elements = detect_slot_values(text, 0);
        let sv = slot_values_of(&elements);
        assert_eq!(sv.len(), 1);
        assert_eq!(text_of(text, sv[0].0), "Transfers");
        assert_eq!(text_of(text, sv[0].1), "Independent");
        assert!(!sv[0].2);
    }

    #[test]
    fn empty_value_slot() {
        let text = "Stand to sit:";
        let elements = detect_slot_values(text, 0);
        let sv = slot_values_of(&elements);
        assert_eq!(sv.len(), 1);
        assert_eq!(text_of(text, sv[0].0), "Stand to sit");
        assert!(sv[0].1.is_empty());
    }

    #[test]
    fn two_constructs_on_one_line() {
        let text = "Bed mobility: mod assist  Transfers: 4";
        let elements = detect_slot_values(text, 0);
        let sv = slot_values_of(&elements);
        assert_eq!(sv.len(), 2, "elements: {elements:?}");
        assert_eq!(text_of(text, sv[0].0), "Bed mobility");
        assert_eq!(text_of(text, sv[0].1), "mod assist");
        assert_eq!(text_of(text, sv[1].0), "Transfers");
        assert_eq!(text_of(text, sv[1].1), "4");
    }

    #[test]
    fn nested_construct_flagged() {
        let text = "Notes: Transfers: Independent";
        let elements = detect_slot_values(text, 0);
        let sv = slot_values_of(&elements);
        assert!(!sv.is_empty());
        assert!(sv[0].2, "value containing a construct should flag nested");
    }

    #[test]
    fn question_answer_line() {
        let text = "Difficulty walking? No";
        let elements = detect_slot_values(text, 0);
        assert_eq!(elements.len(), 1);
        match &elements[0].kind {
            ElementKind::QuestionAnswer { question, answer } => {
                assert_eq!(text_of(text, question), "Difficulty walking?");
                assert_eq!(text_of(text, answer), "No");
            }
            other => panic!("expected QA, got {other:?}"),
        }
    }

    #[test]
    fn trailing_question_without_answer_is_not_qa() {
        let elements = detect_slot_values("Can pt walk?", 0);
        assert!(elements.is_empty());
    }

    #[test]
    fn bullet_item_reparsed_for_slot_value() {
        for text in ["- Transfers: 4", "* Transfers: 4", "1. Transfers: 4"] {
            let elements = detect_slot_values(text, 0);
            assert!(
                elements
                    .iter()
                    .any(|el| matches!(el.kind, ElementKind::BulletItem)),
                "{text}: no bullet item"
            );
            let sv = slot_values_of(&elements);
            assert_eq!(sv.len(), 1, "{text}");
            assert_eq!(text_of(text, sv[0].0), "Transfers");
        }
    }

    #[test]
    fn locate_slot_and_value_and_prose() {
        let text = "Transfers: Unable";
        let elements = decompose(text);
        let doc = Document {
            id: "t".into(),
            text: text.into(),
            mobilities: vec![],
        };
        let slot_mention = ActionMention {
            span: Span::new(0, 9),
            gold: None,
        };
        assert_eq!(
            locate_mention(&doc, &slot_mention, &elements).kind,
            LocusKind::InSlot
        );
        let value_mention = ActionMention {
            span: Span::new(11, 17),
            gold: None,
        };
        assert_eq!(
            locate_mention(&doc, &value_mention, &elements).kind,
            LocusKind::InValue
        );

        let prose = "pt walked in the hall";
        let prose_elements = decompose(prose);
        let prose_doc = Document {
            id: "p".into(),
            text: prose.into(),
            mobilities: vec![],
        };
        let mention = ActionMention {
            span: Span::new(3, 9),
            gold: None,
        };
        let locus = locate_mention(&prose_doc, &mention, &prose_elements);
        assert_eq!(locus.kind, LocusKind::Prose);
        assert!(
            locus.element.is_some(),
            "prose mention attaches its sentence"
        );
    }

    #[test]
    fn difficulty_walking_slot_locus() {
        let text = "Difficulty Walking: No";
        let elements = decompose(text);
        let doc = Document {
            id: "t".into(),
            text: text.into(),
            mobilities: vec![],
        };
        let mention = ActionMention {
            span: Span::new(11, 18),
            gold: None,
        };
        assert_eq!(
            locate_mention(&doc, &mention, &elements).kind,
            LocusKind::InSlot
        );
    }

    #[test]
    fn sections_form_a_forest() {
        let text = "A:\n  B:\n  x\nC:\ny\n";
        let sections = detect_sections(text);
        for i in 0..sections.len() {
            for j in (i + 1)..sections.len() {
                let (a, b) = (&sections[i].span, &sections[j].span);
                let nested = a.contains(b) || b.contains(a);
                let disjoint = !a.overlaps(b);
                assert!(nested || disjoint, "sections {i} and {j} cross");
            }
        }
    }

    #[test]
    fn slot_value_spans_stay_within_line() {
        let line = " Toileting: max assist ";
        let offset = 100;
        for el in detect_slot_values(line, offset) {
            if let ElementKind::SlotValue { slot, value, .. } = &el.kind {
                let line_span = Span::new(offset, offset + line.chars().count());
                assert!(line_span.contains(slot));
                assert!(line_span.contains(value) || value.is_empty());
            }
        }
    }
}
