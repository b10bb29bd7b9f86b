use proptest::prelude::*;
use satd_forge_core::harness::{
    aggregate, coverage_counts, extract_code_from_response, oracle_em, pearson, Difficulty, ExperimentRun,
};
use satd_forge_core::{MetricReport, RunItem};


fn item(key: usize, em: u8, score: f64, hard: bool) -> RunItem {
    RunItem {
        sample_key: format!("u/p:c:f.py:{key}"),
        model_id: "m".into(),
        template_name: "t".into(),
        generated_raw: String::new(),
        extracted_code: String::new(),
        difficulty: if hard { Difficulty::Hard } else { Difficulty::Easy },
        report: MetricReport {
            exact_match: em,
            bleu_whole: score,
            crystal_whole: score / 2.0,
            bleu_diff: score,
            crystal_diff: score,
            line_p: score,
            line_r: score,
            line_f: score,
            deleted_lines: key % 3,
            inserted_lines: key % 5,
        },
    }
}

fn runs(matrix: &[Vec<u8>]) -> Vec<ExperimentRun<f64>> {
    matrix
        .iter()
        .enumerate()
        .map(|(r, ems)| {
            let items = ems.iter().enumerate().map(|(k, &e)| item(k, e, 0.5, k % 2 == 0)).collect();
            ExperimentRun::new("m", &format!("t{r}"), "d", items).unwrap()
        })
        .collect()
}

fn em_matrix() -> impl Strategy<Value = Vec<Vec<u8>>> {
    (1usize..6, 1usize..20).prop_flat_map(|(r, n)| prop::collection::vec(prop::collection::vec(0u8..=1, n), r))
}

proptest! {
    #[test]
    fn oracle_dominates_every_run(m in em_matrix()) {
        let runs = runs(&m);
        let oracle = oracle_em(&runs).unwrap();
        for run in &runs {
            prop_assert!(oracle + 1e-12 >= aggregate(run)[0].em_percent);
        }
        let cov = coverage_counts(&runs).unwrap();
        prop_assert!((oracle - 100.0 * cov.addressed_by_at_least_one as f64 / cov.items as f64).abs() < 1e-9);
        prop_assert!(cov.addressed_by_all <= cov.addressed_by_at_least_one);
        prop_assert!(cov.addressed_by_exactly_one <= cov.addressed_by_at_least_one);
    }

    #[test]
    fn aggregate_ignores_item_order(scores in prop::collection::vec((0u8..=1, 0.0f64..1.0, any::<bool>()), 1..30), seed in any::<u64>()) {
        let items: Vec<_> = scores.iter().enumerate().map(|(k, &(e, s, h))| item(k, e, s, h)).collect();
        let mut shuffled = items.clone();
        let n = shuffled.len();
        for i in (1..n).rev() {
            shuffled.swap(i, (seed.wrapping_mul(i as u64 + 7) % (i as u64 + 1)) as usize);
        }
        let a = aggregate(&ExperimentRun::new("m", "t", "d", items).unwrap());
        let b = aggregate(&ExperimentRun::new("m", "t", "d", shuffled).unwrap());
        prop_assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            prop_assert_eq!(x.n, y.n);
            prop_assert!((x.em_percent - y.em_percent).abs() < 1e-9);
            prop_assert!((x.bleu_whole - y.bleu_whole).abs() < 1e-9);
            prop_assert!((x.line_f - y.line_f).abs() < 1e-9);
            prop_assert!((x.avg_inserted - y.avg_inserted).abs() < 1e-9);
        }
        let all = &a[0];
        let parts: usize = a[1..].iter().map(|r| r.n).sum();
        prop_assert_eq!(parts, all.n);
    }

    #[test]
    fn pearson_is_affine_invariant(
        xy in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..20),
        scale in 0.1f64..10.0,
        shift in -50.0f64..50.0,
    ) {
        let (x, y): (Vec<f64>, Vec<f64>) = xy.into_iter().unzip();
        if let Ok(r) = pearson(&x, &y) {
            prop_assert!((-1.0..=1.0).contains(&r));
            let moved: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
            prop_assert!((pearson(&moved, &y).unwrap() - r).abs() < 1e-6);
            let flipped: Vec<f64> = x.iter().map(|v| -v).collect();
            prop_assert!((pearson(&flipped, &y).unwrap() + r).abs() < 1e-9);
            prop_assert!((pearson(&y, &x).unwrap() - r).abs() < 1e-12);
        }
    }
}

#[test]
fn mismatched_runs_are_rejected() {
    let mut r = runs(&[vec![1, 0, 1], vec![0, 0, 1]]);
    r[1].items.pop();
    assert!(oracle_em(&r).is_err());
    assert!(coverage_counts(&r).is_err());
}

#[test]
fn duplicate_keys_are_rejected() {
    assert!(ExperimentRun::new("m", "t", "d", vec![item(1, 0, 0.0, false), item(1, 1, 0.0, false)]).is_err());
}

#[test]
fn response_extraction() {
    let resp = "Here is how.\n```python\ndef f():\n    pass\n```\nThen:\n```python\ndef f():\n    return 1\n```\nDone.";
    assert_eq!(extract_code_from_response(resp), "def f():\n    return 1");
    assert_eq!(extract_code_from_response("  x = 1  \n"), "x = 1");
    assert_eq!(extract_code_from_response("### Updated code:\n```\ny = 2\n"), "y = 2");
}
