//! Question templates and slot rendering.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::facts::FactGroup;
use crate::qgen::QgenError;
use crate::solver::{Direction, Level, Query, QueryForm};
use crate::temporal::format_duration;

/// Query family a template renders; offsets additionally carry a direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormKind {
    Point,
    Interval,
    Offset,
    Before,
    After,
    During,
    EventOffset,
}

impl FormKind {
    pub const ALL: [FormKind; 7] = [
        FormKind::Point,
        FormKind::Interval,
        FormKind::Offset,
        FormKind::Before,
        FormKind::After,
        FormKind::During,
        FormKind::EventOffset,
    ];

    pub fn of(form: &QueryForm) -> Self {
        match form {
            QueryForm::Point { .. } => FormKind::Point,
            QueryForm::Interval { .. } => FormKind::Interval,
            QueryForm::Offset { .. } => FormKind::Offset,
            QueryForm::Before { .. } => FormKind::Before,
            QueryForm::After { .. } => FormKind::After,
            QueryForm::During { .. } => FormKind::During,
            QueryForm::EventOffset { .. } => FormKind::EventOffset,
        }
    }

    pub fn level(&self) -> Level {
        match self {
            FormKind::Point | FormKind::Interval | FormKind::Offset => Level::L2,
            _ => Level::L3,
        }
    }

    pub fn is_event(&self) -> bool {
        self.level() == Level::L3
    }

    pub fn has_direction(&self) -> bool {
        matches!(self, FormKind::Offset | FormKind::EventOffset)
    }

    pub fn required_slots(&self) -> &'static [&'static str] {
        match self {
            FormKind::Point => &["subject", "t1"],
            FormKind::Interval => &["subject", "t1", "t2"],
            FormKind::Offset => &["subject", "dt", "t1"],
            FormKind::Before | FormKind::After | FormKind::During => &["subject", "object"],
            FormKind::EventOffset => &["subject", "object", "dt"],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            FormKind::Point => "point",
            FormKind::Interval => "interval",
            FormKind::Offset => "offset",
            FormKind::Before => "before",
            FormKind::After => "after",
            FormKind::During => "during",
            FormKind::EventOffset => "event_offset",
        }
    }
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionTemplate {
    pub relation: String,
    pub level: Level,
    pub form: FormKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction: Option<Direction>,
    /// Relation of the reference event, for L3 forms.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ref_relation: Option<String>,
    pub pattern: String,
}

const SLOTS: [&str; 5] = ["subject", "object", "t1", "t2", "dt"];

/// Slot names in order of appearance.
fn pattern_slots(pattern: &str) -> Result<Vec<&str>, QgenError> {
    let mut out = Vec::new();
    let mut rest = pattern;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| QgenError::BadTemplate(format!("unclosed slot in {pattern:?}")))?;
        let name = &after[..close];
        if !SLOTS.contains(&name) {
            return Err(QgenError::UnknownSlot(name.to_string()));
        }
        out.push(name);
        rest = &after[close + 1..];
    }
    Ok(out)
}

impl QuestionTemplate {
    pub fn validate(&self) -> Result<(), QgenError> {
        let bad = |msg: String| Err(QgenError::BadTemplate(format!("{} {}: {msg}", self.relation, self.form)));
        if self.level != self.form.level() {
            return bad(format!("form requires level {}", self.form.level()));
        }
        if self.form.has_direction() != self.direction.is_some() {
            return bad("direction must be given exactly for offset forms".into());
        }
        if self.form.is_event() != self.ref_relation.is_some() {
            return bad("ref_relation must be given exactly for L3 forms".into());
        }
        if self.form == FormKind::During && self.ref_relation.as_deref() == Some(self.relation.as_str()) {
            return bad("during templates need a reference relation different from the target".into());
        }
        let present: BTreeSet<&str> = pattern_slots(&self.pattern)?.into_iter().collect();
        let required: BTreeSet<&str> = self.form.required_slots().iter().copied().collect();
        if present != required {
            return bad(format!("pattern slots {present:?} differ from required {required:?}"));
        }
        Ok(())
    }

    /// Does this template produce queries of the given shape?
    pub fn matches(&self, query: &Query) -> bool {
        if query.relation != self.relation || FormKind::of(&query.form) != self.form {
            return false;
        }
        let direction = match &query.form {
            QueryForm::Offset { delta, .. } => Some(if delta.months() < 0 {
                Direction::Before
            } else {
                Direction::After
            }),
            QueryForm::EventOffset { direction, .. } => Some(*direction),
            _ => None,
        };
        direction == self.direction && query.form.reference().map(|r| r.relation.id.as_str()) == self.ref_relation.as_deref()
    }
}

/// Fills every `{slot}` of the template from `bindings`.
pub fn render_template(tpl: &QuestionTemplate, bindings: &HashMap<&str, String>) -> Result<String, QgenError> {
    let mut out = String::with_capacity(tpl.pattern.len() + 32);
    let mut rest = tpl.pattern.as_str();
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let close = after
            .find('}')
            .ok_or_else(|| QgenError::BadTemplate(format!("unclosed slot in {:?}", tpl.pattern)))?;
        let name = &after[..close];
        if !SLOTS.contains(&name) {
            return Err(QgenError::UnknownSlot(name.to_string()));
        }
        let value = bindings.get(name).ok_or_else(|| QgenError::MissingSlot(name.to_string()))?;
        out.push_str(value);
        rest = &after[close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Slot values implied by a query over its group.
pub fn bindings_for(query: &Query, group: &FactGroup) -> Result<HashMap<&'static str, String>, QgenError> {
    let mut b = HashMap::new();
    b.insert("subject", group.subject().label.clone());
    match &query.form {
        QueryForm::Point { t_r } => {
            b.insert("t1", t_r.to_string());
        }
        QueryForm::Interval { t_rs, t_re } => {
            b.insert("t1", t_rs.to_string());
            b.insert("t2", t_re.to_string());
        }
        QueryForm::Offset { t_r, delta } => {
            b.insert("t1", t_r.to_string());
            b.insert("dt", format_duration(delta.abs())?);
        }
        QueryForm::Before { reference } | QueryForm::After { reference } | QueryForm::During { reference } => {
            b.insert("object", reference.object.label.clone());
        }
        QueryForm::EventOffset { reference, delta, .. } => {
            b.insert("object", reference.object.label.clone());
            b.insert("dt", format_duration(*delta)?);
        }
    }
    Ok(b)
}

pub fn question_text(tpl: &QuestionTemplate, query: &Query, group: &FactGroup) -> Result<String, QgenError> {
    render_template(tpl, &bindings_for(query, group)?)
}

/// Surface phrasing for one relation.
struct RelationPhrases {
    id: &'static str,
    stem: &'static str,
    /// Clause naming the reference event, e.g. "he/she studied at {object}".
    event: &'static str,
    /// Progressive clause used after "when".
    ongoing: &'static str,
}

const PHRASES: &[RelationPhrases] = &[
    RelationPhrases {
        id: "P54",
        stem: "Which team did {subject} play for",
        event: "he/she played for {object}",
        ongoing: "he/she was playing for {object}",
    },
    RelationPhrases {
        id: "P39",
        stem: "Which position did {subject} hold",
        event: "he/she held the position of {object}",
        ongoing: "he/she was holding the position of {object}",
    },
    RelationPhrases {
        id: "P108",
        stem: "Which employer did {subject} work for",
        event: "he/she worked for {object}",
        ongoing: "he/she was working for {object}",
    },
    RelationPhrases {
        id: "P102",
        stem: "Which political party did {subject} belong to",
        event: "he/she was a member of {object}",
        ongoing: "he/she was a member of {object}",
    },
    RelationPhrases {
        id: "P286",
        stem: "Who was the head coach of {subject}",
        event: "{object} was the head coach",
        ongoing: "{object} was the head coach",
    },
    RelationPhrases {
        id: "P69",
        stem: "Where was {subject} educated",
        event: "he/she studied at {object}",
        ongoing: "he/she was studying at {object}",
    },
    RelationPhrases {
        id: "P488",
        stem: "Who was the chair of {subject}",
        event: "{object} was the chair",
        ongoing: "{object} was the chair",
    },
    RelationPhrases {
        id: "P6",
        stem: "Who was the head of {subject}",
        event: "{object} was the head of government",
        ongoing: "{object} was the head of government",
    },
    RelationPhrases {
        id: "P35",
        stem: "Who was the head of state of {subject}",
        event: "{object}'s term of head of state",
        ongoing: "{object} was the head of state",
    },
    RelationPhrases {
        id: "P127",
        stem: "Who was the owner of {subject}",
        event: "{object} was the owner",
        ongoing: "{object} was the owner",
    },
    RelationPhrases {
        id: "P26",
        stem: "Who was {subject} married to",
        event: "he/she was married to {object}",
        ongoing: "he/she was married to {object}",
    },
    RelationPhrases {
        id: "P166",
        stem: "Which award did {subject} receive",
        event: "he/she received {object}",
        ongoing: "he/she received {object}",
    },
    RelationPhrases {
        id: "P937",
        stem: "Where did {subject} work",
        event: "he/she worked in {object}",
        ongoing: "he/she was working in {object}",
    },
    RelationPhrases {
        id: "P551",
        stem: "What was the residence of {subject}",
        event: "he/she was living in {object}",
        ongoing: "he/she was living in {object}",
    },
];

/// The default template set: one pattern per (relation, form[, direction],
/// reference relation) over the fourteen built-in relations.
pub fn builtin_templates() -> Vec<QuestionTemplate> {
    let mut out = Vec::new();
    let l2 = |p: &RelationPhrases, form, direction, pattern: String| QuestionTemplate {
        relation: p.id.to_string(),
        level: Level::L2,
        form,
        direction,
        ref_relation: None,
        pattern,
    };
    for p in PHRASES {
        out.push(l2(p, FormKind::Point, None, format!("{} in {{t1}}?", p.stem)));
        out.push(l2(p, FormKind::Interval, None, format!("{} from {{t1}} to {{t2}}?", p.stem)));
        out.push(l2(p, FormKind::Offset, Some(Direction::Before), format!("{} {{dt}} before {{t1}}?", p.stem)));
        out.push(l2(p, FormKind::Offset, Some(Direction::After), format!("{} {{dt}} after {{t1}}?", p.stem)));
    }
    for p in PHRASES {
        for r in PHRASES {
            let l3 = |form, direction, pattern: String| QuestionTemplate {
                relation: p.id.to_string(),
                level: Level::L3,
                form,
                direction,
                ref_relation: Some(r.id.to_string()),
                pattern,
            };
            out.push(l3(FormKind::Before, None, format!("{} before {}?", p.stem, r.event)));
            out.push(l3(FormKind::After, None, format!("{} after {}?", p.stem, r.event)));
            if p.id != r.id {
                out.push(l3(FormKind::During, None, format!("{} when {}?", p.stem, r.ongoing)));
            }
            out.push(l3(
                FormKind::EventOffset,
                Some(Direction::Before),
                format!("{} {{dt}} before {}?", p.stem, r.event),
            ));
            out.push(l3(
                FormKind::EventOffset,
                Some(Direction::After),
                format!("{} {{dt}} after {}?", p.stem, r.event),
            ));
        }
    }
    out
}

pub fn load_templates(json: &str) -> Result<Vec<QuestionTemplate>, QgenError> {
    let templates: Vec<QuestionTemplate> =
        serde_json::from_str(json).map_err(|e| QgenError::BadTemplate(format!("template file: {e}")))?;
    for t in &templates {
        t.validate()?;
    }
    Ok(templates)
}
