//! Text in, metrics out: baseline records, an edge dump and a reference
//! export pushed through ingestion, linkage and evaluation.

use citegauge::evaluation::evaluate;
use citegauge::ingest::{load_baseline, load_edge_dump, load_reference_export, ColumnConfig, ReferenceColumns, Scheme};
use citegauge::linkage::{build_gold_standard, extract_baseline_gold, resolve_edges, Criterion};
use citegauge::ratio::format_percent;

const BASELINE: &str = r#"{"pmid": 1, "doi": "10.1/one", "title": "First", "year": 2001, "types": ["journal-article"], "refs": [2, 3, 99]}
{"pmid": 2, "doi": "10.1/two", "title": "Second", "year": 2000, "types": ["journal-article"], "issn": "0138-9130", "volume": 4, "page": "12-19"}
{"pmid": 3, "doi": "10.1/three", "title": "Third", "year": 1999, "types": ["review"]}
{"pmid": 4, "title": "Fourth", "year": 2002, "types": ["journal-article"]}
not json
{"pmid": 5, "title": "Fifth", "year": 2003, "types": ["other"]}
"#;

const DUMP: &str = "10.1/one,10.1/two\n10.1/one,10.1/THREE\n10.1/four,10.1/one\n10.1/two,10.1/two\nbroken\n10.1/one,https://doi.org/10.1/two\n";

const EXPORT: &str = "citing_pmid,ref_pmid,ref_doi,ref_title,ref_year,ref_issn,ref_volume,ref_page\n\
4,,10.1/one,,,,,\n\
4,,,,2000,0138-9130,4,12\n\
4,,,third,1999,,,\n\
4,,,Unknown,1990,,,\n";

#[test]
fn end_to_end() {
    let (corpus, log) = load_baseline(BASELINE.as_bytes()).unwrap();
    assert_eq!((corpus.len(), log.rejected), (5, 1));
    assert_eq!(corpus.article_or_review_count(), 4);

    let (raw, dump_log) = load_edge_dump(DUMP.as_bytes(), &ColumnConfig::uniform(Scheme::Doi)).unwrap();
    assert_eq!((dump_log.accepted, dump_log.rejected), (5, 1));
    let (source, res) = resolve_edges(raw, &corpus, "dois");
    assert_eq!(
        (
            res.kept,
            res.endpoint_unresolved,
            res.self_loop_dropped,
            res.duplicate_merged
        ),
        (2, 1, 1, 1)
    );
    assert_eq!(dump_log.total(), res.input + dump_log.rejected);

    let (shipped, dangling) = extract_baseline_gold(&corpus, "shipped");
    assert_eq!(dangling, 1);
    let report = evaluate(&source, &shipped, &corpus).unwrap();
    assert_eq!(format_percent(report.precision, 1), "100.0%");
    assert_eq!(report.accuracy, 1.0);
    assert_eq!(report.global_coverage, Some(0.2));

    let (refs, export_log) = load_reference_export(EXPORT.as_bytes(), &ReferenceColumns::default(), b',').unwrap();
    assert_eq!(export_log.accepted, 4);
    let (external, matching) = build_gold_standard(&refs, &corpus, "external");
    assert_eq!(matching.matched[&Criterion::Identifier], 1);
    assert_eq!(matching.matched[&Criterion::Composite], 1);
    assert_eq!(matching.matched[&Criterion::TitleYear], 1);
    assert_eq!(matching.no_match, 1);
    let cited: Vec<u64> = external
        .refs(citegauge::corpus::DocKey::new(4).unwrap())
        .unwrap()
        .iter()
        .map(|k| k.get())
        .collect();
    assert_eq!(cited, vec![1, 2, 3]);

    let uncovered = evaluate(&source, &external, &corpus).unwrap();
    assert!(!uncovered.metrics_defined);
    assert_eq!(uncovered.gold_coverage, 0.0);
}
