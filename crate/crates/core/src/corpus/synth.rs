//! Template-based synthetic corpus generator.
//!
//! Emits clinical-note-shaped documents containing prose sentences,
//! slot:value lines (all eight rule-table shapes), question/answer
//! lines, hypothetical sections (goals / plan / education), bullet
//! items, negation/assertion cues and assistance-device phrases. Gold
//! labels are assigned by the emitting template, so they are correct by
//! construction; a manifest records the realized label counts.

use std::collections::BTreeMap;
use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    ActionMention, Corpus, CorpusError, Document, InstanceRef, LabelCounts, MobilityMention,
    PolarityLabel, Span,
};

/// Generator configuration: document count and target label mixture in
/// the fixed label order (Able, Unable, Unclear, None).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub docs: usize,
    pub label_mix: [f64; 4],
    pub mentions_per_doc: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        // Proportions of the reference dataset: 1982/77/206/2262 of 4527.
        SynthConfig {
            docs: 400,
            label_mix: [
                1982.0 / 4527.0,
                77.0 / 4527.0,
                206.0 / 4527.0,
                2262.0 / 4527.0,
            ],
            mentions_per_doc: (7, 11),
        }
    }
}

/// Which template emitted an instance. Slot-value families follow the
/// eight rule-table rows; the rest are prose, scale-reference and
/// section templates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TemplateFamily {
    SlotAssertedAsserted,
    SlotAssertedNegated,
    SlotNegatedNegated,
    SlotNegatedAsserted,
    SlotNumeric,
    SlotNoEvidence,
    SlotEmptyValue,
    SlotMultipleActions,
    Scale,
    ProseAble,
    ProsePertinentNegative,
    ProseUnable,
    ProseUnclear,
    ProseNone,
    ProseConditional,
    SectionGoal,
    GoalMet,
}

impl TemplateFamily {
    pub fn gold(self) -> PolarityLabel {
        use TemplateFamily::*;
        match self {
            SlotAssertedAsserted | SlotNegatedNegated => PolarityLabel::Able,
            ProseAble | ProsePertinentNegative | GoalMet => PolarityLabel::Able,
            SlotAssertedNegated | SlotNegatedAsserted | ProseUnable => PolarityLabel::Unable,
            SlotNumeric | SlotNoEvidence | ProseUnclear => PolarityLabel::Unclear,
            SlotEmptyValue | SlotMultipleActions | Scale | ProseNone | ProseConditional
            | SectionGoal => PolarityLabel::NoInfo,
        }
    }

    /// Instances produced per emission (the multiple-actions row emits
    /// one instance per listed activity).
    pub fn multiplicity(self) -> usize {
        match self {
            TemplateFamily::SlotMultipleActions => 3,
            _ => 1,
        }
    }

    /// True for the families shaped exactly like the slot:value rule
    /// table; the rule engine classifies these perfectly by design.
    pub fn is_slot_value(self) -> bool {
        use TemplateFamily::*;
        matches!(
            self,
            SlotAssertedAsserted
                | SlotAssertedNegated
                | SlotNegatedNegated
                | SlotNegatedAsserted
                | SlotNumeric
                | SlotNoEvidence
                | SlotEmptyValue
                | SlotMultipleActions
        )
    }

    pub fn as_str(self) -> &'static str {
        use TemplateFamily::*;
        match self {
            SlotAssertedAsserted => "slot_asserted_asserted",
            SlotAssertedNegated => "slot_asserted_negated",
            SlotNegatedNegated => "slot_negated_negated",
            SlotNegatedAsserted => "slot_negated_asserted",
            SlotNumeric => "slot_numeric",
            SlotNoEvidence => "slot_no_evidence",
            SlotEmptyValue => "slot_empty_value",
            SlotMultipleActions => "slot_multiple_actions",
            Scale => "scale",
            ProseAble => "prose_able",
            ProsePertinentNegative => "prose_pertinent_negative",
            ProseUnable => "prose_unable",
            ProseUnclear => "prose_unclear",
            ProseNone => "prose_none",
            ProseConditional => "prose_conditional",
            SectionGoal => "section_goal",
            GoalMet => "goal_met",
        }
    }
}

impl fmt::Display for TemplateFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Gold-count bookkeeping written next to every generated corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub labels: LabelCounts,
    pub families: BTreeMap<String, usize>,
    pub documents: usize,
    pub instances: usize,
    pub seed: u64,
    pub config: SynthConfig,
}

/// Per-instance generator bookkeeping (not serialized with the corpus).
#[derive(Debug, Clone)]
pub struct GeneratedInstance {
    pub id: String,
    pub reference: InstanceRef,
    pub label: PolarityLabel,
    pub family: TemplateFamily,
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub corpus: Corpus,
    pub manifest: Manifest,
    pub instances: Vec<GeneratedInstance>,
}

const fn family_weights(label: PolarityLabel) -> &'static [(TemplateFamily, f64)] {
    use TemplateFamily::*;
    match label {
        PolarityLabel::Able => &[
            (SlotAssertedAsserted, 0.26),
            (SlotNegatedNegated, 0.10),
            (ProseAble, 0.40),
            (ProsePertinentNegative, 0.12),
            (GoalMet, 0.12),
        ],
        PolarityLabel::Unable => &[
            (SlotAssertedNegated, 0.35),
            (SlotNegatedAsserted, 0.15),
            (ProseUnable, 0.50),
        ],
        PolarityLabel::Unclear => &[
            (SlotNumeric, 0.30),
            (SlotNoEvidence, 0.30),
            (ProseUnclear, 0.40),
        ],
        PolarityLabel::NoInfo => &[
            (SlotEmptyValue, 0.13),
            (SlotMultipleActions, 0.09),
            (Scale, 0.20),
            (ProseNone, 0.23),
            (ProseConditional, 0.15),
            (SectionGoal, 0.20),
        ],
    }
}

struct Verb {
    base: &'static str,
    third: &'static str,
    gerund: &'static str,
    past: &'static str,
}

const VERBS: &[Verb] = &[
    Verb { base: "walk", third: "walks", gerund: "walking", past: "walked" },
    Verb { base: "ambulate", third: "ambulates", gerund: "ambulating", past: "ambulated" },
    Verb { base: "transfer", third: "transfers", gerund: "transferring", past: "transferred" },
    Verb { base: "stand", third: "stands", gerund: "standing", past: "stood" },
    Verb { base: "dress", third: "dresses", gerund: "dressing", past: "dressed" },
    Verb { base: "bathe", third: "bathes", gerund: "bathing", past: "bathed" },
    Verb { base: "climb stairs", third: "climbs stairs", gerund: "climbing stairs", past: "climbed stairs" },
];

const SLOT_ACTIONS: &[&str] = &[
    "Transfers",
    "Bed mobility",
    "Stair climbing",
    "Sit to stand",
    "Stand to sit",
    "Dressing",
    "Bathing",
    "Toileting",
];

const SCALE_SLOTS: &[&str] = &["Ambulation", "Gait", "Mobility"];
const SCALE_VALUES: &[&str] = &["0", "1", "2"];
const NUMERIC_VALUES: &[&str] = &["3", "4", "5", "6", "3/5"];
const ASSIST_VALUES: &[&str] = &[
    "minimal assist",
    "moderate assist",
    "max assist",
    "contact guard",
    "supervision",
];
const ASSERTED_VALUES: &[&str] = &["Independent", "independent", "able"];
const NEGATED_VALUES: &[&str] = &["Unable", "unable", "not able"];
const DENY_VALUES: &[&str] = &["No", "no", "None", "none", "Denies"];
const YES_VALUES: &[&str] = &["yes", "Yes"];
const IADLS: &[&str] = &["chores", "shopping", "driving", "cooking", "cleaning", "laundry"];
const DEVICES: &[&str] = &["rolling walker", "cane", "wheelchair", "quad cane", "crutches"];
const EXTENTS: &[&str] = &["20 minutes", "100 feet", "300 feet", "50 feet", "two blocks"];
const TITLES: &[&str] = &[
    "PHYSICAL THERAPY INITIAL ASSESSMENT",
    "PT REASSESSMENT NOTE",
    "REHAB THERAPY NOTE",
];
const MID_HEADERS: &[&str] = &["ASSESSMENT:", "OBJECTIVE:", "STATUS:", "FINDINGS:"];
const GOAL_HEADERS: &[&str] = &["GOALS:", "SHORT TERM GOALS:", "EDUCATION:", "PLAN:"];
const FILLERS: &[&str] = &[
    "Seen for PT evaluation.",
    "Vitals stable.",
    "Session lasted 45 minutes.",
    "Patient resting comfortably.",
    "Tolerated treatment well.",
    "Chart reviewed prior to session.",
];

/// Text fragment with mobility/action spans relative to its own start.
/// Each mobility keeps the family that rendered it (combined lines mix
/// families).
struct Rendered {
    text: String,
    mobilities: Vec<(Span, Vec<Span>, TemplateFamily)>,
    // single-construct slot lines may be combined onto one physical line
    combinable: bool,
}

struct LineBuilder {
    text: String,
    chars: usize,
}

impl LineBuilder {
    fn new() -> Self {
        LineBuilder {
            text: String::new(),
            chars: 0,
        }
    }

    fn push(&mut self, s: &str) -> Span {
        let start = self.chars;
        self.text.push_str(s);
        self.chars += s.chars().count();
        Span::new(start, self.chars)
    }

    fn mark(&self) -> usize {
        self.chars
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    items.choose(rng).expect("non-empty bank")
}

fn render(family: TemplateFamily, rng: &mut ChaCha8Rng) -> Rendered {
    use TemplateFamily::*;
    let mut b = LineBuilder::new();
    let mut actions = Vec::new();
    let mut combinable = false;
    let mob_start = b.mark();
    match family {
        SlotAssertedAsserted => {
            actions.push(b.push(pick(rng, SLOT_ACTIONS)));
            b.push(": ");
            b.push(pick(rng, ASSERTED_VALUES));
            combinable = true;
        }
        SlotAssertedNegated => {
            actions.push(b.push(pick(rng, SLOT_ACTIONS)));
            b.push(": ");
            b.push(pick(rng, NEGATED_VALUES));
            combinable = true;
        }
        SlotNegatedNegated => {
            // "Difficulty Walking: No" shape; sometimes a question/answer line
            let verb = pick(rng, VERBS);
            let qa = rng.random_bool(0.25);
            if rng.random_bool(0.5) {
                b.push("Difficulty ");
                let mut gerund = verb.gerund.to_string();
                let mut chars = gerund.chars();
                if let Some(first) = chars.next() {
                    gerund = first.to_uppercase().collect::<String>() + chars.as_str();
                }
                actions.push(b.push(&gerund));
            } else {
                b.push("Trouble with ");
                actions.push(b.push(verb.gerund));
            }
            b.push(if qa { "? " } else { ": " });
            b.push(pick(rng, DENY_VALUES));
        }
        SlotNegatedAsserted => {
            let verb = pick(rng, VERBS);
            let qa = rng.random_bool(0.25);
            b.push("Unable to ");
            actions.push(b.push(verb.base));
            b.push(if qa { "? " } else { ": " });
            b.push(pick(rng, YES_VALUES));
        }
        SlotNumeric => {
            actions.push(b.push(pick(rng, SLOT_ACTIONS)));
            b.push(": ");
            b.push(pick(rng, NUMERIC_VALUES));
            combinable = true;
        }
        SlotNoEvidence => {
            actions.push(b.push(pick(rng, SLOT_ACTIONS)));
            b.push(": ");
            b.push(pick(rng, ASSIST_VALUES));
            combinable = true;
        }
        SlotEmptyValue => {
            actions.push(b.push(pick(rng, SLOT_ACTIONS)));
            b.push(":");
            combinable = true;
        }
        SlotMultipleActions => {
            b.push("Difficulty with ");
            let mut picks: Vec<&str> = IADLS.to_vec();
            picks.shuffle(rng);
            for (i, iadl) in picks.iter().take(3).enumerate() {
                if i > 0 {
                    b.push(", ");
                }
                actions.push(b.push(iadl));
            }
            b.push(": Yes");
        }
        Scale => {
            actions.push(b.push(pick(rng, SCALE_SLOTS)));
            b.push(": ");
            b.push(pick(rng, SCALE_VALUES));
            combinable = true;
        }
        ProseAble => {
            let verb = pick(rng, VERBS);
            match rng.random_range(0..4) {
                0 => {
                    b.push("Pt is able to ");
                    actions.push(b.push(verb.base));
                    b.push(" ");
                    b.push(pick(rng, EXTENTS));
                    b.push(".");
                }
                1 => {
                    b.push("She states she can ");
                    actions.push(b.push(verb.base));
                    b.push(" ");
                    b.push(pick(rng, EXTENTS));
                    b.push(" before tiring.");
                }
                2 => {
                    b.push("Pt can now ");
                    actions.push(b.push(verb.base));
                    b.push(" with ");
                    b.push(pick(rng, DEVICES));
                    b.push(".");
                }
                _ => {
                    b.push("Pt ");
                    actions.push(b.push(verb.third));
                    b.push(" independently in the room.");
                }
            }
        }
        ProsePertinentNegative => {
            let verb = pick(rng, VERBS);
            match rng.random_range(0..3) {
                0 => {
                    b.push("Pt reports no trouble ");
                    actions.push(b.push(verb.gerund));
                    b.push(".");
                }
                1 => {
                    b.push("Pt ");
                    actions.push(b.push(verb.past));
                    b.push(" ");
                    b.push(pick(rng, EXTENTS));
                    b.push(" without difficulty.");
                }
                _ => {
                    b.push("No problem with ");
                    actions.push(b.push(verb.gerund));
                    b.push(" noted.");
                }
            }
        }
        ProseUnable => {
            let verb = pick(rng, VERBS);
            match rng.random_range(0..3) {
                0 => {
                    b.push("He is unable to ");
                    actions.push(b.push(verb.base));
                    b.push(".");
                }
                1 => {
                    b.push("Pt is now unable to ");
                    actions.push(b.push(verb.base));
                    b.push(" more than ");
                    b.push(pick(rng, EXTENTS));
                    b.push(".");
                }
                _ => {
                    b.push("Pt cannot ");
                    actions.push(b.push(verb.base));
                    b.push(" at this time.");
                }
            }
        }
        ProseUnclear => {
            let verb = pick(rng, VERBS);
            match rng.random_range(0..3) {
                0 => {
                    b.push("Pt is unable to ");
                    actions.push(b.push(verb.base));
                    b.push(" without ");
                    b.push(pick(rng, DEVICES));
                    b.push(".");
                }
                1 => {
                    b.push("Pt cannot ");
                    actions.push(b.push(verb.base));
                    b.push(" ");
                    b.push(pick(rng, EXTENTS));
                    b.push(" independently.");
                }
                _ => {
                    b.push("She is unable to ");
                    actions.push(b.push(verb.base));
                    b.push(" more than a few feet without support.");
                }
            }
        }
        ProseNone => {
            let verb = pick(rng, VERBS);
            match rng.random_range(0..3) {
                0 => {
                    b.push("Tendency during ");
                    actions.push(b.push(verb.gerund));
                    b.push(" to quickly extend the leg.");
                }
                1 => {
                    b.push("Pt fearful to start ");
                    actions.push(b.push(verb.gerund));
                    b.push(" again.");
                }
                _ => {
                    b.push("Moderate fatigue noted during ");
                    actions.push(b.push(verb.gerund));
                    b.push(".");
                }
            }
        }
        ProseConditional => {
            let verb = pick(rng, VERBS);
            match rng.random_range(0..3) {
                0 => {
                    b.push("If pt tolerates, will progress ");
                    actions.push(b.push(verb.base));
                    b.push(" training.");
                }
                1 => {
                    b.push("Plan to increase ");
                    actions.push(b.push(verb.base));
                    b.push(" distance next visit.");
                }
                _ => {
                    b.push("Pt would benefit from ");
                    actions.push(b.push(verb.base));
                    b.push(" practice.");
                }
            }
        }
        SectionGoal => {
            let verb = pick(rng, VERBS);
            match rng.random_range(0..3) {
                0 => {
                    b.push("Pt to ");
                    actions.push(b.push(verb.base));
                    b.push(" ");
                    b.push(pick(rng, EXTENTS));
                    b.push(" with ");
                    b.push(pick(rng, DEVICES));
                    b.push(".");
                }
                1 => {
                    b.push("Increase ");
                    actions.push(b.push(verb.base));
                    b.push(" distance to ");
                    b.push(pick(rng, EXTENTS));
                    b.push(".");
                }
                _ => {
                    let mut gerund = verb.gerund.to_string();
                    let mut chars = gerund.chars();
                    if let Some(first) = chars.next() {
                        gerund = first.to_uppercase().collect::<String>() + chars.as_str();
                    }
                    actions.push(b.push(&gerund));
                    b.push(" endurance to improve this week.");
                }
            }
        }
        GoalMet => {
            let verb = pick(rng, VERBS);
            if rng.random_bool(0.5) {
                b.push("Pt to ");
                actions.push(b.push(verb.base));
                b.push(" ");
                b.push(pick(rng, EXTENTS));
                b.push(", goal met.");
            } else {
                let mut gerund = verb.gerund.to_string();
                let mut chars = gerund.chars();
                if let Some(first) = chars.next() {
                    gerund = first.to_uppercase().collect::<String>() + chars.as_str();
                }
                actions.push(b.push(&gerund));
                b.push(" goal achieved this week.");
            }
        }
    }
    let mob = Span::new(mob_start, b.mark());
    Rendered {
        text: b.text,
        mobilities: vec![(mob, actions, family)],
        combinable,
    }
}

fn draw_label(rng: &mut ChaCha8Rng, weights: &[f64; 4]) -> PolarityLabel {
    let total: f64 = weights.iter().sum();
    let mut x = rng.random_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return PolarityLabel::from_index(i);
        }
        x -= w;
    }
    PolarityLabel::NoInfo
}

fn draw_family(rng: &mut ChaCha8Rng, label: PolarityLabel) -> TemplateFamily {
    let bank = family_weights(label);
    let total: f64 = bank.iter().map(|(_, w)| w).sum();
    let mut x = rng.random_range(0.0..total);
    for (family, w) in bank {
        if x < *w {
            return *family;
        }
        x -= w;
    }
    bank[bank.len() - 1].0
}

/// Generate a corpus. Deterministic given (`config`, `seed`).
pub fn synth_generate(config: &SynthConfig, seed: u64) -> Result<SynthOutput, CorpusError> {
    let mix_sum: f64 = config.label_mix.iter().sum();
    if (mix_sum - 1.0).abs() > 5e-3 || config.label_mix.iter().any(|&w| w < 0.0) {
        return Err(CorpusError::BadMixture(mix_sum));
    }
    let (lo, hi) = config.mentions_per_doc;
    assert!(lo >= 1 && lo <= hi, "mentions_per_doc range must be non-empty");

    // Correct draw weights for family multiplicity so realized instance
    // proportions land on the requested mixture in expectation.
    let mut weights = [0.0f64; 4];
    for label in PolarityLabel::ALL {
        let bank = family_weights(label);
        let expected_mult: f64 = bank.iter().map(|(f, w)| w * f.multiplicity() as f64).sum();
        weights[label.index()] = config.label_mix[label.index()] / expected_mult;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut documents = Vec::with_capacity(config.docs);
    let mut generated = Vec::new();
    let mut labels = LabelCounts::default();
    let mut families: BTreeMap<String, usize> = BTreeMap::new();

    for d in 0..config.docs {
        let id = format!("synth-{d:04}");
        let target = rng.random_range(lo..=hi);
        let mut planned: Vec<TemplateFamily> = Vec::new();
        let mut count = 0;
        while count < target {
            let label = draw_label(&mut rng, &weights);
            let family = draw_family(&mut rng, label);
            count += family.multiplicity();
            planned.push(family);
        }

        let (goal_plan, mut body_plan): (Vec<_>, Vec<_>) = planned.into_iter().partition(|f| {
            matches!(f, TemplateFamily::SectionGoal | TemplateFamily::GoalMet)
        });
        body_plan.shuffle(&mut rng);

        let mut rendered_body: Vec<Rendered> = Vec::new();
        for family in body_plan {
            let mut r = render(family, &mut rng);
            // some single-construct slot lines get a bullet marker
            if r.combinable && rng.random_bool(0.2) {
                let marker = *pick(&mut rng, &["- ", "* ", "1. "]);
                let shift = marker.chars().count();
                r.text = format!("{marker}{}", r.text);
                for (mob, actions, _) in &mut r.mobilities {
                    *mob = mob.offset(shift);
                    for a in actions {
                        *a = a.offset(shift);
                    }
                }
                r.combinable = false;
            }
            rendered_body.push(r);
        }

        // occasionally join two adjacent slot constructs onto one line,
        // separated by two spaces
        let mut lines: Vec<Rendered> = Vec::new();
        let mut iter = rendered_body.into_iter().peekable();
        while let Some(mut r) = iter.next() {
            if r.combinable
                && iter.peek().map(|n| n.combinable).unwrap_or(false)
                && rng.random_bool(0.15)
            {
                let next = iter.next().unwrap();
                let shift = r.text.chars().count() + 2;
                r.text = format!("{}  {}", r.text, next.text);
                for (mob, actions, family) in next.mobilities {
                    let actions = actions.into_iter().map(|a| a.offset(shift)).collect();
                    r.mobilities.push((mob.offset(shift), actions, family));
                }
            }
            lines.push(r);
        }

        // assemble the document text
        fn push_line(text: &mut String, offset: &mut usize, line: &str) -> usize {
            let start = *offset;
            text.push_str(line);
            text.push('\n');
            *offset += line.chars().count() + 1;
            start
        }
        let mut text = String::new();
        let mut offset = 0usize;

        let mut mobilities: Vec<(MobilityMention, Vec<TemplateFamily>)> = Vec::new();
        if rng.random_bool(0.8) {
            push_line(&mut text, &mut offset, pick(&mut rng, TITLES));
        }
        push_line(&mut text, &mut offset, pick(&mut rng, FILLERS));

        for r in &lines {
            if rng.random_bool(0.12) {
                push_line(&mut text, &mut offset, pick(&mut rng, MID_HEADERS));
            }
            if rng.random_bool(0.10) {
                push_line(&mut text, &mut offset, pick(&mut rng, FILLERS));
            }
            let start = push_line(&mut text, &mut offset, &r.text);
            for (mob, actions, family) in &r.mobilities {
                let mention = MobilityMention {
                    span: mob.offset(start),
                    actions: actions
                        .iter()
                        .map(|a| ActionMention {
                            span: a.offset(start),
                            gold: Some(family.gold()),
                        })
                        .collect(),
                };
                mobilities.push((mention, vec![*family; actions.len()]));
            }
        }

        if !goal_plan.is_empty() {
            push_line(&mut text, &mut offset, pick(&mut rng, GOAL_HEADERS));
            for family in goal_plan {
                let r = render(family, &mut rng);
                let start = push_line(&mut text, &mut offset, &r.text);
                for (mob, actions, _) in &r.mobilities {
                    let mention = MobilityMention {
                        span: mob.offset(start),
                        actions: actions
                            .iter()
                            .map(|a| ActionMention {
                                span: a.offset(start),
                                gold: Some(family.gold()),
                            })
                            .collect(),
                    };
                    mobilities.push((mention, vec![family; actions.len()]));
                }
            }
        }

        // strip the trailing newline so spans stay in bounds exactly
        if text.ends_with('\n') {
            text.pop();
        }

        let mut doc_mobilities = Vec::new();
        for (m_idx, (mention, fams)) in mobilities.into_iter().enumerate() {
            for (a_idx, family) in fams.iter().enumerate() {
                labels.add(family.gold());
                *families.entry(family.as_str().to_string()).or_insert(0) += 1;
                generated.push(GeneratedInstance {
                    id: format!("{id}:{m_idx}:{a_idx}"),
                    reference: InstanceRef {
                        doc: d,
                        mobility: m_idx,
                        action: a_idx,
                    },
                    label: family.gold(),
                    family: *family,
                });
            }
            doc_mobilities.push(mention);
        }

        documents.push(Document {
            id,
            text,
            mobilities: doc_mobilities,
        });
    }

    let corpus = Corpus { documents };
    corpus.validate()?;
    let manifest = Manifest {
        labels,
        families,
        documents: config.docs,
        instances: generated.len(),
        seed,
        config: config.clone(),
    };
    Ok(SynthOutput {
        corpus,
        manifest,
        instances: generated,
    })
}
