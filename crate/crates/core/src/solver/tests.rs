use super::*;
use crate::facts::{EntityRef, RelationRef};
use crate::fixtures::{self, fact_by_object};
use crate::temporal::TimeInterval;
use proptest::prelude::*;

fn ym(y: i32, m: u32) -> TimePoint {
    TimePoint::month(y, m).unwrap()
}

fn set(labels: &[&str]) -> AnswerSet {
    labels.iter().copied().collect()
}

fn both(group: &FactGroup, q: &Query) -> AnswerSet {
    let a = answer(group, q).unwrap();
    assert_eq!(a, brute_force_answer(group, q).unwrap(), "oracle disagreement on {q:?}");
    a
}

fn months(n: i32) -> SignedDuration {
    SignedDuration::from_months(n)
}

#[test]
fn kramers_point_query() {
    let g = fixtures::hans_kramers();
    let q = Query::new("hans_kramers", "P108", QueryForm::Point { t_r: ym(1931, 9) }).unwrap();
    assert_eq!(both(&g, &q), set(&["Delft University of Technology", "Utrecht University"]));
    // January 1934 is inside both Utrecht (closed end) and Leiden (start)
    let q = Query::new("hans_kramers", "P108", QueryForm::Point { t_r: ym(1934, 1) }).unwrap();
    assert_eq!(
        both(&g, &q),
        set(&["Delft University of Technology", "Leiden University", "Utrecht University"])
    );
}

#[test]
fn layla_moran_table_rows() {
    let g = fixtures::layla_moran();
    let q = |form| Query::new("layla_moran", "P69", form).unwrap();

    assert_eq!(both(&g, &q(QueryForm::Point { t_r: ym(2005, 11) })), set(&["Brunel University"]));
    assert_eq!(
        both(&g, &q(QueryForm::Interval { t_rs: ym(2003, 5), t_re: ym(2006, 7) })),
        set(&["Imperial College London", "Brunel University"])
    );
    let offset = q(QueryForm::Offset { t_r: ym(2002, 5), delta: months(74) });
    assert_eq!(
        resolve_query_time(&offset, &g).unwrap(),
        QueryWindow::Span(MonthSpan::single(ym(2008, 7).month_index()))
    );
    assert_eq!(both(&g, &offset), set(&["UCL Institute of Education"]));

    let brunel = fact_by_object(&g, "Brunel University").clone();
    assert_eq!(both(&g, &q(QueryForm::Before { reference: brunel })), set(&["Imperial College London"]));

    let imperial = fact_by_object(&g, "Imperial College London").clone();
    let after = q(QueryForm::EventOffset {
        reference: imperial,
        delta: months(59),
        direction: Direction::After,
    });
    assert_eq!(
        resolve_query_time(&after, &g).unwrap(),
        QueryWindow::Span(MonthSpan::single(ym(2008, 7).month_index()))
    );
    assert_eq!(both(&g, &after), set(&["UCL Institute of Education"]));
}

#[test]
fn musk_offset_before_residence() {
    let g = fixtures::elon_musk();
    let boca = fact_by_object(&g, "Boca Chica (Texas)").clone();
    let q = Query::new(
        "elon_musk",
        "P108",
        QueryForm::EventOffset {
            reference: boca,
            delta: months(42),
            direction: Direction::Before,
        },
    )
    .unwrap();
    assert_eq!(
        resolve_query_time(&q, &g).unwrap(),
        QueryWindow::Span(MonthSpan::single(ym(2017, 12).month_index()))
    );
    assert_eq!(
        both(&g, &q),
        set(&["The Boring Company", "Neuralink", "OpenAI", "Tesla Inc.", "SpaceX"])
    );
}

#[test]
fn after_picks_immediate_successor() {
    let g = fixtures::layla_moran();
    let imperial = fact_by_object(&g, "Imperial College London").clone();
    let q = Query::new("layla_moran", "P69", QueryForm::After { reference: imperial }).unwrap();
    assert_eq!(both(&g, &q), set(&["Brunel University"]));
    // nothing precedes the earliest school
    let imperial = fact_by_object(&g, "Imperial College London").clone();
    let q = Query::new("layla_moran", "P69", QueryForm::Before { reference: imperial }).unwrap();
    assert!(both(&g, &q).is_empty());
}

#[test]
fn during_uses_reference_span() {
    let g = fixtures::elon_musk();
    let boca = fact_by_object(&g, "Boca Chica (Texas)").clone();
    let q = Query::new("elon_musk", "P108", QueryForm::During { reference: boca }).unwrap();
    assert_eq!(both(&g, &q), set(&["The Boring Company", "Neuralink", "Tesla Inc.", "SpaceX"]));
}

#[test]
fn year_granular_point_covers_whole_year() {
    let g = fixtures::layla_moran();
    let q = Query::new("layla_moran", "P69", QueryForm::Point { t_r: TimePoint::year(2003).unwrap() }).unwrap();
    assert_eq!(both(&g, &q), set(&["Imperial College London"]));
    let q = Query::new("layla_moran", "P69", QueryForm::Point { t_r: TimePoint::year(2007).unwrap() }).unwrap();
    assert_eq!(both(&g, &q), set(&["Brunel University", "UCL Institute of Education"]));
}

#[test]
fn errors() {
    let g = fixtures::layla_moran();
    let wrong = Query::new("someone", "P69", QueryForm::Point { t_r: ym(2005, 1) }).unwrap();
    assert!(matches!(answer(&g, &wrong), Err(SolverError::SubjectMismatch { .. })));

    let foreign = fact_by_object(&fixtures::hans_kramers(), "Leiden University").clone();
    let q = Query::new("layla_moran", "P69", QueryForm::During { reference: foreign }).unwrap();
    assert!(matches!(answer(&g, &q), Err(SolverError::RefNotInGroup { .. })));
    assert!(matches!(brute_force_answer(&g, &q), Err(SolverError::RefNotInGroup { .. })));

    // ongoing reference with no horizon
    let s = EntityRef::new("x", "X");
    let open = TemporalFact::new(
        s.clone(),
        RelationRef::new("P551", "residence"),
        EntityRef::new("t", "Town"),
        TimeInterval::ongoing(ym(2010, 1)),
    )
    .unwrap();
    let g = FactGroup::new(s, vec![open.clone()], None).unwrap();
    let q = Query::new("x", "P551", QueryForm::After { reference: open }).unwrap();
    assert!(matches!(answer(&g, &q), Err(SolverError::Time(TimeError::NoHorizon))));

    assert!(Query::new("x", "P1", QueryForm::Interval { t_rs: ym(2001, 1), t_re: ym(2000, 1) }).is_err());
}

#[test]
fn empty_window_is_empty_for_both() {
    let g = fixtures::hans_kramers();
    let q = Query::new("hans_kramers", "P108", QueryForm::Point { t_r: ym(1800, 1) }).unwrap();
    assert!(both(&g, &q).is_empty());
    let q = Query::new("hans_kramers", "P999", QueryForm::Point { t_r: ym(1931, 1) }).unwrap();
    assert!(both(&g, &q).is_empty());
}

#[test]
fn duplicate_episodes_collapse() {
    let s = EntityRef::new("x", "X");
    let ep = |a, b| {
        TemporalFact::new(
            s.clone(),
            RelationRef::new("P54", "member of sports team"),
            EntityRef::new("club", "Club"),
            TimeInterval::closed(ym(a, 1), ym(b, 1)).unwrap(),
        )
        .unwrap()
    };
    let g = FactGroup::new(s.clone(), vec![ep(2000, 2002), ep(2004, 2006)], None).unwrap();
    let q = Query::new("x", "P54", QueryForm::Interval { t_rs: ym(2001, 1), t_re: ym(2005, 1) }).unwrap();
    assert_eq!(both(&g, &q).len(), 1);
}

#[test]
fn query_serialization_is_flat_and_round_trips() {
    let g = fixtures::layla_moran();
    let imperial = fact_by_object(&g, "Imperial College London").clone();
    let q = Query::new(
        "layla_moran",
        "P69",
        QueryForm::EventOffset {
            reference: imperial,
            delta: months(59),
            direction: Direction::After,
        },
    )
    .unwrap();
    let json = serde_json::to_value(&q).unwrap();
    assert_eq!(json["form"], "event_offset");
    assert_eq!(json["delta"], 59);
    assert_eq!(json["reference"]["interval"]["start"], "2000-09");
    let back: Query = serde_json::from_value(json).unwrap();
    assert_eq!(back, q);
}

// ---------------------------------------------------------------------------
// property tests over random groups
// ---------------------------------------------------------------------------

fn arb_group() -> impl Strategy<Value = FactGroup> {
    let fact = (0usize..3, 0usize..5, 1800i32..2040, 1u32..=12, 0i32..240, 0u8..10);
    (prop::collection::vec(fact, 1..12), prop::option::of((1990i32..2040, 1u32..=12))).prop_map(|(specs, horizon)| {
        let s = EntityRef::new("s", "S");
        let facts = specs
            .into_iter()
            .map(|(r, o, y, m, len, kind)| {
                let start = ym(y, m);
                let interval = match kind {
                    0 if horizon.is_some() => TimeInterval::ongoing(start),
                    1 => TimeInterval::closed(start, TimePoint::year(start.year_value() + len / 12).unwrap()).unwrap(),
                    _ => TimeInterval::closed(start, start.add_duration(months(len)).unwrap()).unwrap(),
                };
                TemporalFact::new(
                    s.clone(),
                    RelationRef::new(format!("R{r}"), format!("rel {r}")),
                    EntityRef::new(format!("o{o}"), format!("Object {o}")),
                    interval,
                )
                .unwrap()
            })
            .collect();
        FactGroup::new(s, facts, horizon.map(|(y, m)| ym(y, m))).unwrap()
    })
}

fn arb_query(g: &FactGroup) -> impl Strategy<Value = Query> {
    let facts = g.facts().to_vec();
    let n = facts.len();
    (0usize..7, 0usize..3, 1780i32..2060, 1u32..=12, 0i32..300, -400i32..400, 1i32..400, 0..n, any::<bool>()).prop_map(
        move |(form, rel, y, m, len, delta, mag, ref_ix, dir)| {
            let t = ym(y, m);
            let reference = facts[ref_ix].clone();
            let direction = if dir { Direction::After } else { Direction::Before };
            let form = match form {
                0 => QueryForm::Point { t_r: t },
                1 => QueryForm::Interval { t_rs: t, t_re: t.add_duration(months(len)).unwrap() },
                2 => QueryForm::Offset { t_r: t, delta: months(delta) },
                3 => QueryForm::Before { reference },
                4 => QueryForm::After { reference },
                5 => QueryForm::During { reference },
                _ => QueryForm::EventOffset { reference, delta: months(mag), direction },
            };
            Query::new("s", format!("R{rel}"), form).unwrap()
        },
    )
}

fn group_and_query() -> impl Strategy<Value = (FactGroup, Query)> {
    arb_group().prop_flat_map(|g| {
        let q = arb_query(&g);
        (Just(g), q)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn answer_matches_oracle((g, q) in group_and_query()) {
        prop_assert_eq!(answer(&g, &q), brute_force_answer(&g, &q));
    }

    #[test]
    fn translation_equivariance((g, q) in group_and_query(), d in -1200i32..=240) {
        let d = months(d);
        let shifted = answer(&g.shifted(d).unwrap(), &q.shifted(d).unwrap());
        prop_assert_eq!(shifted, answer(&g, &q));
    }

    #[test]
    fn interval_answers_are_monotone(g in arb_group(), y in 1800i32..2040, inner in 0i32..120, pad_l in 0i32..120, pad_r in 0i32..120) {
        let a = ym(y, 1);
        let b = a.add_duration(months(inner)).unwrap();
        let narrow = Query::new("s", "R0", QueryForm::Interval { t_rs: a, t_re: b }).unwrap();
        let wide = Query::new("s", "R0", QueryForm::Interval {
            t_rs: a.add_duration(months(-pad_l)).unwrap(),
            t_re: b.add_duration(months(pad_r)).unwrap(),
        }).unwrap();
        let small = answer(&g, &narrow).unwrap();
        let big = answer(&g, &wide).unwrap();
        prop_assert!(small.iter().all(|x| big.contains(x)));
    }

    #[test]
    fn point_equals_degenerate_interval(g in arb_group(), y in 1800i32..2040, m in 1u32..=12) {
        let t = ym(y, m);
        let p = Query::new("s", "R1", QueryForm::Point { t_r: t }).unwrap();
        let i = Query::new("s", "R1", QueryForm::Interval { t_rs: t, t_re: t }).unwrap();
        prop_assert_eq!(answer(&g, &p).unwrap(), answer(&g, &i).unwrap());
    }
}
