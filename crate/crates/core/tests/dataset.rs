use std::collections::BTreeSet;

use proptest::prelude::*;
use satd_forge_core::dataset::{
    read_dataset, read_stats, split_by_repository, write_dataset, write_stats, DatasetError, FilterStats,
    SplitError, SplitRatios,
};
use satd_forge_core::{Language, RepaymentSample, SatdRecord};

fn sample(user: &str, project: &str, line: usize, body: &str) -> RepaymentSample {
    RepaymentSample {
        record: SatdRecord {
            user: user.into(),
            project: project.into(),
            file_path: "src/m.py".into(),
            creation_commit: "c0".into(),
            deletion_commit: Some("c1".into()),
            line_at_creation: line,
            line_before_deletion: Some(line + 1),
            comment_text: format!("# TODO: {body}"),
            language: Language::Python,
            deletion_timestamp: Some(1_700_000_000),
        },
        method_before: format!("def f():\n    # TODO: {body}\n    return 1"),
        method_after: "def f():\n    return 2".into(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dataset_round_trips(bodies in prop::collection::vec("[a-zA-Z0-9 {}\"\\\\\u{e9}\u{4e2d}\t]{0,30}", 0..8)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/d.jsonl");
        let samples: Vec<_> = bodies.iter().enumerate().map(|(i, b)| sample("u", "p", i + 1, b)).collect();
        write_dataset(&samples, &path).unwrap();
        prop_assert_eq!(read_dataset(&path).unwrap(), samples);
    }

    #[test]
    fn split_partitions_repositories(repos in 3usize..40, per_repo in 1usize..4, seed in any::<u64>()) {
        let samples: Vec<_> = (0..repos)
            .flat_map(|r| (0..per_repo).map(move |i| sample(&format!("user{}", r % 5), &format!("proj{r}"), i + 1, "fix later please")))
            .collect();
        let split = split_by_repository(&samples, SplitRatios::default(), seed).unwrap();
        let names = |v: &[RepaymentSample]| -> BTreeSet<(String, String)> {
            v.iter().map(|s| (s.record.user.clone(), s.record.project.clone())).collect()
        };
        let (tr, va, te) = (names(&split.train), names(&split.validation), names(&split.test));
        prop_assert!(tr.is_disjoint(&va) && tr.is_disjoint(&te) && va.is_disjoint(&te));
        prop_assert!(!tr.is_empty() && !va.is_empty() && !te.is_empty());
        prop_assert_eq!(split.train.len() + split.validation.len() + split.test.len(), samples.len());
        prop_assert_eq!(split_by_repository(&samples, SplitRatios::default(), seed).unwrap(), split);
    }
}

#[test]
fn malformed_line_is_reported_with_its_number() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.jsonl");
    write_dataset(&[sample("u", "p", 1, "one two")], &path).unwrap();
    let mut text = std::fs::read_to_string(&path).unwrap();
    text.push_str("{\"user\": 3}\n");
    std::fs::write(&path, text).unwrap();
    match read_dataset(&path) {
        Err(DatasetError::Malformed { line, .. }) => assert_eq!(line, 2),
        other => panic!("expected a malformed-line error, got {other:?}"),
    }
}

#[test]
fn record_fields_use_the_published_names() {
    let v = serde_json::to_value(sample("u", "p", 4, "later")).unwrap();
    for field in [
        "user",
        "project",
        "file_path",
        "creation_commit",
        "deletion_commit",
        "line_at_creation",
        "line_before_deletion",
        "satd_comment",
        "language",
        "method_before",
        "method_after",
    ] {
        assert!(v.get(field).is_some(), "missing {field}");
    }
}

#[test]
fn too_few_repositories_cannot_split() {
    let samples = vec![sample("u", "a", 1, "x y z"), sample("u", "b", 1, "x y z")];
    assert_eq!(
        split_by_repository(&samples, SplitRatios::default(), 7),
        Err(SplitError::SplitImpossible { repositories: 2 })
    );
}

#[test]
fn stats_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("stats.tsv");
    let mut stats = FilterStats::default();
    stats.push("total", 11);
    stats.push("deleted", 9);
    write_stats(&stats, &path).unwrap();
    assert!(std::fs::read_to_string(&path).unwrap().starts_with("step\tcount\ntotal\t11\n"));
    assert_eq!(read_stats(&path).unwrap(), stats);
}
