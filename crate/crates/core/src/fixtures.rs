//! Small hand-checked fact groups used by tests, the acceptance suite and the
//! demo data under `data/fixtures`.

use crate::facts::{EntityRef, FactGroup, RelationRef, TemporalFact};
use crate::temporal::{TimeInterval, TimePoint};

fn ym(year: i32, month: u32) -> TimePoint {
    TimePoint::month(year, month).expect("fixture month")
}

fn fact(subject: &EntityRef, relation: (&str, &str), object: &str, start: TimePoint, end: Option<TimePoint>) -> TemporalFact {
    let object_id = object
        .to_lowercase()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect::<String>();
    TemporalFact::new(
        subject.clone(),
        RelationRef::new(relation.0, relation.1),
        EntityRef::new(object_id, object),
        TimeInterval::new(start, end).expect("fixture interval"),
    )
    .expect("fixture fact")
}

pub const EDUCATED_AT: (&str, &str) = ("P69", "educated at");
pub const POSITION_HELD: (&str, &str) = ("P39", "position held");
pub const EMPLOYER: (&str, &str) = ("P108", "employer");
pub const RESIDENCE: (&str, &str) = ("P551", "residence");

/// Five facts about Layla Moran: three schools and two parliament terms.
pub fn layla_moran() -> FactGroup {
    let s = EntityRef::new("layla_moran", "Layla Moran");
    let facts = vec![
        fact(&s, POSITION_HELD, "Member of the 57th Parliament of the United Kingdom", ym(2017, 6), Some(ym(2019, 11))),
        fact(&s, EDUCATED_AT, "UCL Institute of Education", ym(2007, 9), Some(ym(2008, 9))),
        fact(&s, POSITION_HELD, "Member of the 58th Parliament of the United Kingdom", ym(2019, 12), Some(ym(2023, 5))),
        fact(&s, EDUCATED_AT, "Brunel University", ym(2005, 9), Some(ym(2007, 3))),
        fact(&s, EDUCATED_AT, "Imperial College London", ym(2000, 9), Some(ym(2003, 8))),
    ];
    FactGroup::new(s, facts, None).expect("fixture group")
}

/// Hans Kramers' three employers.
pub fn hans_kramers() -> FactGroup {
    let s = EntityRef::new("hans_kramers", "Hans Kramers");
    let facts = vec![
        fact(&s, EMPLOYER, "Leiden University", ym(1934, 1), Some(ym(1952, 1))),
        fact(&s, EMPLOYER, "Utrecht University", ym(1926, 1), Some(ym(1934, 1))),
        fact(&s, EMPLOYER, "Delft University of Technology", ym(1931, 1), Some(ym(1952, 1))),
    ];
    FactGroup::new(s, facts, None).expect("fixture group")
}

/// Elon Musk's employers and Boca Chica residence; ongoing roles run to the
/// October 2023 snapshot.
pub fn elon_musk() -> FactGroup {
    let s = EntityRef::new("elon_musk", "Elon Musk");
    let facts = vec![
        fact(&s, EMPLOYER, "OpenAI", ym(2015, 12), Some(ym(2019, 1))),
        fact(&s, EMPLOYER, "SpaceX", ym(2002, 6), None),
        fact(&s, EMPLOYER, "Neuralink", ym(2016, 7), None),
        fact(&s, EMPLOYER, "The Boring Company", ym(2016, 12), None),
        fact(&s, EMPLOYER, "Tesla Inc.", ym(2004, 4), None),
        fact(&s, RESIDENCE, "Boca Chica (Texas)", ym(2021, 6), None),
    ];
    FactGroup::new(s, facts, Some(ym(2023, 10))).expect("fixture group")
}

/// The fact in `group` with the given object label.
pub fn fact_by_object<'a>(group: &'a FactGroup, label: &str) -> &'a TemporalFact {
    group
        .facts()
        .iter()
        .find(|f| f.object.label == label)
        .unwrap_or_else(|| panic!("no fact with object {label}"))
}
