use std::collections::BTreeSet;

use kgverb_core::aligner::align_corpus;
use kgverb_core::ingest::{load_pages, load_triples, validate_catalog, CorpusBundle, LoadOptions};
use kgverb_core::model::{DateValue, EntityCatalog, EntityRecord, ObjectValue, PageText, QuantityValue, Triple};
use proptest::prelude::*;

fn lines<T: serde::Serialize>(items: &[T]) -> String {
    items
        .iter()
        .map(|t| serde_json::to_string(t).unwrap() + "\n")
        .collect()
}

fn catalog() -> Vec<EntityRecord> {
    vec![
        EntityRecord::new("Q1", "Neff Maiava", ["Neff Maiava", "Maiava"], true).unwrap(),
        EntityRecord::new("Q2", "professional wrestler", ["professional wrestler"], false).unwrap(),
        EntityRecord::new("Q3", "inch", ["inch", "inches"], false).unwrap(),
        EntityRecord::new("Q4", "American Samoa", ["American Samoa", "Samoa"], true).unwrap(),
    ]
}

fn object() -> impl Strategy<Value = ObjectValue> {
    prop_oneof![
        prop::sample::select(vec!["Q1", "Q2", "Q4"]).prop_map(|id| ObjectValue::Entity(id.into())),
        (prop::sample::select(vec!["+71", "16", "1.5", "-4"]), any::<bool>())
            .prop_map(|(a, u)| ObjectValue::Quantity(QuantityValue::new(a, u.then(|| "Q3".into())).unwrap())),
        (1900i32..2020, 0u8..=12, 0u8..=28).prop_map(|(y, m, d)| {
            let d = if m == 0 { 0 } else { d };
            ObjectValue::Date(DateValue::new(d, m, y).unwrap())
        }),
    ]
}

fn triple() -> impl Strategy<Value = Triple> {
    (
        prop::sample::select(vec!["Q1", "Q4"]),
        prop::sample::select(vec!["date of birth", "occupation", "height", "country"]),
        object(),
        prop::option::of(object()),
    )
        .prop_map(|(s, r, o, q)| {
            let t = Triple::new(s, r, o).unwrap();
            match q {
                Some(q) => t.with_subproperty("point in time", q),
                None => t,
            }
        })
}

fn sentence() -> impl Strategy<Value = String> {
    prop::collection::vec(
        prop::sample::select(vec![
            "Maiava", "He", "her", "was", "a", "professional wrestler", "71 inches", "May 1, 1924", "in", "Samoa",
            "1990", "16",
        ]),
        1..10,
    )
    .prop_map(|w| w.join(" ") + ".")
}

fn bundle_from_text(entities: &str, triples: &str, pages: &str) -> CorpusBundle {
    let opts = LoadOptions::default();
    let cat = validate_catalog(entities.as_bytes(), opts).unwrap();
    assert!(cat.rejected.is_empty());
    let ts = load_triples(triples.as_bytes(), &cat.items, opts).unwrap();
    assert!(ts.rejected.is_empty(), "{:?}", ts.rejected);
    let ps = load_pages(pages.as_bytes(), &cat.items, opts).unwrap();
    assert!(ps.rejected.is_empty());
    CorpusBundle::new(cat.items, ts.items, ps.items).unwrap()
}

fn shuffled(text: &str, seed: &[usize]) -> String {
    let mut ls: Vec<&str> = text.lines().collect();
    for (i, s) in seed.iter().enumerate() {
        if ls.len() > 1 {
            let j = (i + s) % ls.len();
            let k = s % ls.len();
            ls.swap(j, k);
        }
    }
    ls.iter().map(|l| format!("{l}\n")).collect()
}

#[test]
fn entities_round_trip() {
    let records = catalog();
    let loaded = validate_catalog(lines(&records).as_bytes(), LoadOptions::default()).unwrap();
    assert!(loaded.rejected.is_empty());
    let expected: EntityCatalog = records.into_iter().collect();
    assert_eq!(loaded.items, expected);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn triples_round_trip(triples in prop::collection::vec(triple(), 0..30)) {
        let cat: EntityCatalog = catalog().into_iter().collect();
        let loaded = load_triples(lines(&triples).as_bytes(), &cat, LoadOptions::default()).unwrap();
        prop_assert!(loaded.rejected.is_empty());
        prop_assert_eq!(loaded.items, triples);
    }

    #[test]
    fn input_order_does_not_change_contents(
        triples in prop::collection::vec(triple(), 0..30),
        q1 in prop::collection::vec(sentence(), 0..6),
        q4 in prop::collection::vec(sentence(), 0..6),
        seed in prop::collection::vec(0usize..100, 0..40),
    ) {
        let pages = vec![
            PageText { subject: "Q1".into(), root_section: q1.join(" "), sentences: q1 },
            PageText { subject: "Q4".into(), root_section: q4.join(" "), sentences: q4 },
        ];
        let (e, t, p) = (lines(&catalog()), lines(&triples), lines(&pages));
        let a = bundle_from_text(&e, &t, &p);
        let b = bundle_from_text(&shuffled(&e, &seed), &shuffled(&t, &seed), &shuffled(&p, &seed));
        prop_assert_eq!(a.catalog(), b.catalog());
        prop_assert_eq!(a.pages(), b.pages());
        for (subject, ts) in a.triples() {
            let mut x = ts.clone();
            let mut y = b.triples_of(subject).to_vec();
            x.sort();
            y.sort();
            prop_assert_eq!(x, y);
        }
        prop_assert_eq!(a.triples().len(), b.triples().len());

        let (ea, sa) = align_corpus(&a).unwrap();
        let (eb, sb) = align_corpus(&b).unwrap();
        prop_assert_eq!(sa, sb);
        prop_assert_eq!(ea.len(), eb.len());
        for (x, y) in ea.iter().zip(&eb) {
            prop_assert_eq!((&x.page, x.sentence_index, &x.sentence), (&y.page, y.sentence_index, &y.sentence));
            let tx: BTreeSet<_> = x.triples.iter().collect();
            let ty: BTreeSet<_> = y.triples.iter().collect();
            prop_assert_eq!(tx, ty);
        }
    }
}
