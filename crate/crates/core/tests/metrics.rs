use num_rational::Ratio;
use proptest::prelude::*;
use satd_forge_core::code_model::{Language, TokenStream};
use satd_forge_core::metrics::{
    bleu, crystal_bleu, lemod, line_diff, trivially_shared, BleuConfig, LineScores, TriviallySharedNgrams,
};

/// Sentence BLEU by exhaustive n-gram counting.
fn oracle_bleu(c: &[String], r: &[String], max_n: usize) -> f64 {
    if c.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=max_n {
        if c.len() < n {
            continue;
        }
        let grams: Vec<&[String]> = c.windows(n).collect();
        let mut distinct: Vec<&[String]> = Vec::new();
        let mut matched = 0usize;
        for g in &grams {
            if distinct.contains(g) {
                continue;
            }
            distinct.push(g);
            let in_c = grams.iter().filter(|h| h == &g).count();
            let in_r = r.windows(n).filter(|h| h == g).count();
            matched += in_c.min(in_r);
        }
        if matched == 0 {
            return 0.0;
        }
        log_sum += (matched as f64 / grams.len() as f64).ln();
        orders += 1;
    }
    let bp = if c.len() > r.len() { 1.0 } else { (1.0 - r.len() as f64 / c.len() as f64).exp() };
    bp * (log_sum / orders as f64).exp()
}

fn tokens(max_len: usize) -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "("]), 0..max_len)
        .prop_map(|v| v.into_iter().map(String::from).collect())
}

fn lines(max: usize) -> impl Strategy<Value = String> {
    prop::collection::vec(prop::sample::select(vec!["x = 1", "y = 2", "return x", "", "pass", "  z = 3"]), 0..max)
        .prop_map(|v| v.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bleu_matches_counting_oracle(c in tokens(14), r in tokens(14)) {
        let cfg = BleuConfig::<f64>::default();
        let got = bleu(&TokenStream::new(c.clone()), &TokenStream::new(r.clone()), &cfg);
        prop_assert!((got - oracle_bleu(&c, &r, 4)).abs() <= 1e-9, "got {got}");
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn crystal_with_nothing_shared_is_bleu(c in tokens(20), r in tokens(20)) {
        let cfg = BleuConfig::<f64>::default();
        let (c, r) = (TokenStream::new(c), TokenStream::new(r));
        let empty = TriviallySharedNgrams::empty();
        prop_assert!((crystal_bleu(&c, &r, &empty, &cfg) - bleu(&c, &r, &cfg)).abs() <= 1e-12);
    }

    #[test]
    fn crystal_in_unit_interval(c in tokens(20), r in tokens(20), corpus in prop::collection::vec(tokens(10), 0..4)) {
        let corpus: Vec<TokenStream> = corpus.into_iter().map(TokenStream::new).collect();
        let shared = trivially_shared(&corpus, 3, 4);
        let s = crystal_bleu(&TokenStream::new(c), &TokenStream::new(r), &shared, &BleuConfig::<f64>::default());
        prop_assert!((0.0..=1.0).contains(&s));
    }

    #[test]
    fn self_bleu_is_one(c in tokens(20)) {
        prop_assume!(!c.is_empty());
        let c = TokenStream::new(c);
        prop_assert_eq!(bleu(&c, &c, &BleuConfig::<f64>::default()), 1.0);
    }

    #[test]
    fn diff_replays_to_target(a in lines(12), b in lines(12)) {
        let d = line_diff(&a, &b);
        let want: Vec<String> = b.lines().map(|l| l.trim_end().to_string()).collect();
        prop_assert_eq!(d.apply(&a), want);
        prop_assert_eq!(line_diff(&a, &a).len(), 0);
    }

    #[test]
    fn lemod_exact_and_float_agree(a in lines(8), t in lines(8), g in lines(8)) {
        let f: Result<LineScores<f64>, _> = lemod(&a, &t, &g, Language::Python);
        let q: Result<LineScores<Ratio<i64>>, _> = lemod(&a, &t, &g, Language::Python);
        match (f, q) {
            (Ok(f), Ok(q)) => {
                let to_f = |r: Ratio<i64>| *r.numer() as f64 / *r.denom() as f64;
                prop_assert!((f.precision - to_f(q.precision)).abs() < 1e-12);
                prop_assert!((f.recall - to_f(q.recall)).abs() < 1e-12);
                prop_assert!((f.f1 - to_f(q.f1)).abs() < 1e-12);
                prop_assert!(q.f1 <= Ratio::from_integer(1) && q.f1 >= Ratio::from_integer(0));
            }
            (Err(_), Err(_)) => {}
            _ => prop_assert!(false, "precision types disagree on errors"),
        }
    }
}

#[test]
fn f32_and_f64_agree_on_a_fixture() {
    let c: TokenStream = "if x < 0 : raise ValueError return x".split(' ').collect();
    let r: TokenStream = "if x < 0 : raise ValueError ( x ) return x".split(' ').collect();
    let d = bleu(&c, &r, &BleuConfig::<f64>::default());
    let s = bleu(&c, &r, &BleuConfig::<f32>::default());
    assert!((d - f64::from(s)).abs() < 1e-6);
    assert!(d > 0.0 && d < 1.0);
}
