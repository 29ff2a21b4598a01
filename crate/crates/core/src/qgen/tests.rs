use super::*;
use crate::fixtures::{elon_musk, fact_by_object, hans_kramers, layla_moran};

fn ym(y: i32, m: u32) -> TimePoint {
    TimePoint::month(y, m).unwrap()
}

fn template_for<'a>(bank: &'a [QuestionTemplate], q: &Query) -> &'a QuestionTemplate {
    bank.iter().find(|t| t.matches(q)).expect("template for query")
}

#[test]
fn builtin_bank_validates() {
    let bank = builtin_templates();
    for t in &bank {
        t.validate().unwrap();
    }
    // 14 relations x 4 L2 patterns, 14 x 14 x 4 + 14 x 13 during patterns
    assert_eq!(bank.len(), 14 * 4 + 14 * 14 * 4 + 14 * 13);
}

#[test]
fn layla_questions_render_and_solve() {
    let g = layla_moran();
    let bank = builtin_templates();
    let brunel = fact_by_object(&g, "Brunel University").clone();
    let imperial = fact_by_object(&g, "Imperial College London").clone();
    let rows = [
        (
            QueryForm::Point { t_r: ym(2005, 11) },
            "Where was Layla Moran educated in November 2005?",
            vec!["Brunel University"],
        ),
        (
            QueryForm::Interval {
                t_rs: ym(2003, 5),
                t_re: ym(2006, 7),
            },
            "Where was Layla Moran educated from May 2003 to July 2006?",
            vec!["Brunel University", "Imperial College London"],
        ),
        (
            QueryForm::Offset {
                t_r: ym(2002, 5),
                delta: SignedDuration::from_months(74),
            },
            "Where was Layla Moran educated 6 years and 2 months after May 2002?",
            vec!["UCL Institute of Education"],
        ),
        (
            QueryForm::Before { reference: brunel },
            "Where was Layla Moran educated before he/she studied at Brunel University?",
            vec!["Imperial College London"],
        ),
        (
            QueryForm::EventOffset {
                reference: imperial,
                delta: SignedDuration::from_months(59),
                direction: Direction::After,
            },
            "Where was Layla Moran educated 4 years and 11 months after he/she studied at Imperial College London?",
            vec!["UCL Institute of Education"],
        ),
    ];
    for (form, text, gold) in rows {
        let q = Query::new("layla_moran", "P69", form).unwrap();
        let tpl = template_for(&bank, &q);
        assert_eq!(question_text(tpl, &q, &g).unwrap(), text);
        let got: Vec<String> = answer(&g, &q).unwrap().into_iter().collect();
        assert_eq!(got, gold);
    }
}

#[test]
fn kramers_and_musk_render() {
    let bank = builtin_templates();
    let g = hans_kramers();
    let q = Query::new("hans_kramers", "P108", QueryForm::Point { t_r: ym(1931, 9) }).unwrap();
    assert_eq!(
        question_text(template_for(&bank, &q), &q, &g).unwrap(),
        "Which employer did Hans Kramers work for in September 1931?"
    );

    let g = elon_musk();
    let boca = fact_by_object(&g, "Boca Chica (Texas)").clone();
    let q = Query::new(
        "elon_musk",
        "P108",
        QueryForm::EventOffset {
            reference: boca,
            delta: SignedDuration::from_months(42),
            direction: Direction::Before,
        },
    )
    .unwrap();
    assert_eq!(
        question_text(template_for(&bank, &q), &q, &g).unwrap(),
        "Which employer did Elon Musk work for 3 years and 6 months before he/she was living in Boca Chica (Texas)?"
    );
}

#[test]
fn render_reports_missing_slot() {
    let tpl = QuestionTemplate {
        relation: "P69".into(),
        level: Level::L2,
        form: FormKind::Point,
        direction: None,
        ref_relation: None,
        pattern: "Where was {subject} educated in {t1}?".into(),
    };
    let mut b = HashMap::new();
    b.insert("subject", "X".to_string());
    match render_template(&tpl, &b) {
        Err(QgenError::MissingSlot(s)) => assert_eq!(s, "t1"),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn validation_rejects_wrong_slots_and_levels() {
    let mut tpl = QuestionTemplate {
        relation: "P69".into(),
        level: Level::L2,
        form: FormKind::Point,
        direction: None,
        ref_relation: None,
        pattern: "Where was {subject} educated?".into(),
    };
    assert!(tpl.validate().is_err());
    tpl.pattern = "Where was {subject} educated in {t1} near {bogus}?".into();
    assert!(matches!(tpl.validate(), Err(QgenError::UnknownSlot(_))));
    tpl.pattern = "Where was {subject} educated in {t1}?".into();
    tpl.validate().unwrap();
    tpl.level = Level::L3;
    assert!(tpl.validate().is_err());
    let json = serde_json::to_string(&vec![&tpl]).unwrap();
    assert!(load_templates(&json).is_err());
}

fn all_groups() -> Vec<FactGroup> {
    vec![layla_moran(), hans_kramers(), elon_musk()]
}

fn rich_config(seed: u64) -> GenerationConfig {
    GenerationConfig {
        quotas: FormKind::ALL.iter().map(|k| (*k, 4)).collect(),
        seed,
        ..GenerationConfig::default()
    }
}

#[test]
fn generated_items_are_consistent() {
    let groups = all_groups();
    let bank = builtin_templates();
    let items = generate_dataset(&groups, &bank, &rich_config(11)).unwrap();
    assert!(!items.is_empty());
    let mut kinds = HashSet::new();
    for item in &items {
        let g = groups.iter().find(|g| g.subject().id == item.subject_id).unwrap();
        let gold: Vec<String> = answer(g, &item.query).unwrap().into_iter().collect();
        assert_eq!(item.answers, gold);
        assert_eq!(item.n_answers, gold.len());
        assert_eq!(item.reference_time, item.query.reference_time());
        let tpl = template_for(&bank, &item.query);
        assert_eq!(item.question, question_text(tpl, &item.query, g).unwrap());
        if let QueryForm::During { reference } = &item.query.form {
            assert_ne!(reference.relation.id, item.relation_id);
        }
        kinds.insert(FormKind::of(&item.query.form));
    }
    assert!(kinds.len() >= 5, "only {kinds:?}");
    let ids: HashSet<&str> = items.iter().map(|i| i.id.as_str()).collect();
    assert_eq!(ids.len(), items.len());
    let queries: HashSet<&Query> = items.iter().map(|i| &i.query).collect();
    assert_eq!(queries.len(), items.len());
}

#[test]
fn generation_is_deterministic() {
    let groups = all_groups();
    let bank = builtin_templates();
    let a = generate_dataset(&groups, &bank, &rich_config(3)).unwrap();
    let b = generate_dataset(&groups, &bank, &rich_config(3)).unwrap();
    assert_eq!(a, b);
    let c = generate_dataset(&groups, &bank, &rich_config(4)).unwrap();
    assert_ne!(a, c);
}

#[test]
fn training_split_respects_cutoff() {
    let groups = all_groups();
    let cfg = GenerationConfig {
        training: true,
        ..rich_config(5)
    };
    let items = generate_dataset(&groups, &builtin_templates(), &cfg).unwrap();
    assert!(!items.is_empty());
    assert!(items.iter().all(|i| i.reference_time < ym(2020, 1)));
}

#[test]
fn small_groups_yield_nothing() {
    let g = layla_moran();
    let cfg = GenerationConfig {
        min_group_facts: 6,
        ..rich_config(1)
    };
    assert!(generate_questions(&g, &builtin_templates(), &cfg).unwrap().is_empty());
}

#[test]
fn dataset_round_trips_and_rejects_bad_records() {
    let items = generate_dataset(&all_groups(), &builtin_templates(), &rich_config(9)).unwrap();
    let mut buf = Vec::new();
    assert_eq!(write_dataset(&items, &mut buf).unwrap(), items.len());
    let back = read_dataset(buf.as_slice()).unwrap();
    assert_eq!(back, items);

    let mut broken = items[0].clone();
    broken.n_answers += 1;
    let line = serde_json::to_string(&broken).unwrap();
    match read_dataset(line.as_bytes()) {
        Err(QgenError::BadRecord { line, .. }) => assert_eq!(line, 1),
        other => panic!("unexpected {other:?}"),
    }
}
