use std::collections::BTreeMap;

use confcurate_core::methodology::*;
use proptest::prelude::*;
use MethodologyLabel::*;

fn rules() -> &'static RulesClassifier {
    static R: std::sync::LazyLock<RulesClassifier> =
        std::sync::LazyLock::new(RulesClassifier::default);
    &R
}

fn label(text: &str) -> MethodologyLabel {
    match classify_methodology(text, rules()).unwrap() {
        Classification::Labeled(l) => l,
        other => panic!("{other:?}"),
    }
}

#[test]
fn worked_examples() {
    assert_eq!(
        label("This study used logistic regression on survey data (N=1,200) to examine service utilization among older adults."),
        Quantitative
    );
    assert_eq!(
        label("We used a convergent mixed methods design integrating survey and interview strands to study supervision."),
        MixedMethods
    );
    assert_eq!(
        label("Drawing on critical social theory, we present a conceptual framework for anti-oppressive practice."),
        TheoreticalOther
    );
    assert_eq!(
        label("Semi-structured interviews with 24 kinship caregivers were analyzed using thematic analysis."),
        Qualitative
    );
}

#[test]
fn review_language_outranks_incidental_statistics() {
    let fixtures = [
        "We conducted a systematic review and meta-analysis of 42 trials; pooled odds ratios from random-effects regression indicated benefit.",
        "This scoping review followed PRISMA guidance and charted survey and administrative data sources used in 61 studies.",
        "A meta-analysis of 18 randomized controlled trials estimated standardized effects with meta-regression.",
        "Following a systematic review of mixed methods studies, we synthesized qualitative and quantitative findings.",
    ];
    for text in fixtures {
        assert_eq!(label(text), Review, "{text}");
    }
}

#[test]
fn integration_language_needs_both_families() {
    // both families and integration language
    assert_eq!(
        label("Survey responses (n = 310) and focus groups were merged through triangulation to explain program uptake."),
        MixedMethods
    );
    // both families without integration: the dominant one wins
    assert_eq!(
        label("We fit multilevel models to survey data (n = 2,400) and report statistically significant effects; two interviews provided context."),
        Quantitative
    );
}

#[test]
fn case_insensitive_and_deterministic() {
    let text = "Semi-structured interviews with 24 kinship caregivers were analyzed using thematic analysis.";
    assert_eq!(label(text), label(&text.to_uppercase()));
    assert_eq!(label(text), label(&text.to_lowercase()));
}

#[test]
fn short_abstract_is_a_precondition_error() {
    assert!(matches!(
        classify_methodology("too short", rules()),
        Err(ClassifyError::ShortAbstract { len: 9 })
    ));
}

/// Textbook kappa with floating sums, written independently of the
/// library's integer bookkeeping.
fn oracle_kappa(matrix: &[Vec<f64>]) -> (f64, f64, Option<f64>) {
    let k = matrix.len();
    let n: f64 = matrix.iter().flatten().sum();
    let po = (0..k).map(|i| matrix[i][i]).sum::<f64>() / n;
    let pe = (0..k)
        .map(|i| {
            let row: f64 = matrix[i].iter().sum();
            let col: f64 = matrix.iter().map(|r| r[i]).sum();
            (row / n) * (col / n)
        })
        .sum::<f64>();
    let kappa = if (1.0 - pe).abs() < 1e-15 {
        None
    } else {
        Some((po - pe) / (1.0 - pe))
    };
    (po, pe, kappa)
}

fn sequences(matrix: &[[usize; 2]; 2]) -> (Vec<MethodologyLabel>, Vec<MethodologyLabel>) {
    let labels = [Quantitative, Qualitative];
    let (mut h, mut m) = (vec![], vec![]);
    for (i, row) in matrix.iter().enumerate() {
        for (j, &count) in row.iter().enumerate() {
            for _ in 0..count {
                h.push(labels[i]);
                m.push(labels[j]);
            }
        }
    }
    (h, m)
}

#[test]
fn two_by_two_hand_computed() {
    let (h, m) = sequences(&[[20, 5], [10, 15]]);
    let r = cohen_kappa(&h, &m).unwrap();
    assert!((r.observed_agreement - 0.7).abs() < 1e-9);
    assert!((r.expected_agreement - 0.5).abs() < 1e-9);
    assert!((r.kappa.unwrap() - 0.4).abs() < 1e-9);
    assert_eq!(r.confusion[0][..2], [20, 5]);
    assert_eq!(r.confusion[1][..2], [10, 15]);
    assert!((r.per_category_accuracy[&Quantitative] - 0.8).abs() < 1e-12);
    assert!((r.per_category_accuracy[&Qualitative] - 0.6).abs() < 1e-12);
}

#[test]
fn constant_machine_gives_zero() {
    let human: Vec<_> = (0..100).map(|i| MethodologyLabel::ALL[i % 5]).collect();
    let machine = vec![Quantitative; 100];
    let r = cohen_kappa(&human, &machine).unwrap();
    assert!((r.observed_agreement - 0.2).abs() < 1e-9);
    assert!((r.expected_agreement - 0.2).abs() < 1e-9);
    assert!(r.kappa.unwrap().abs() < 1e-9);
}

#[test]
fn degenerate_and_invalid_inputs() {
    let same = vec![Review; 10];
    let r = cohen_kappa(&same, &same).unwrap();
    assert_eq!(r.expected_agreement, 1.0);
    assert_eq!(r.kappa, None);
    assert_eq!(cohen_kappa(&[], &[]).unwrap_err(), KappaError::Empty);
    assert!(matches!(
        cohen_kappa(&[Review], &[Review, Review]),
        Err(KappaError::LengthMismatch {
            human: 1,
            machine: 2
        })
    ));
}

fn label_strategy() -> impl Strategy<Value = MethodologyLabel> {
    prop::sample::select(MethodologyLabel::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn kappa_matches_oracle(pairs in prop::collection::vec((label_strategy(), label_strategy()), 1..200)) {
        let (h, m): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let r = cohen_kappa(&h, &m).unwrap();
        let matrix: Vec<Vec<f64>> = r.confusion.iter().map(|row| row.iter().map(|&c| c as f64).collect()).collect();
        let (po, pe, kappa) = oracle_kappa(&matrix);
        prop_assert!((r.observed_agreement - po).abs() < 1e-9);
        prop_assert!((r.expected_agreement - pe).abs() < 1e-9);
        match (r.kappa, kappa) {
            (Some(a), Some(b)) => {
                prop_assert!((a - b).abs() < 1e-9);
                prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&a));
            }
            (None, None) => {}
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn swapping_raters_transposes(pairs in prop::collection::vec((label_strategy(), label_strategy()), 1..200)) {
        let (h, m): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let a = cohen_kappa(&h, &m).unwrap();
        let b = cohen_kappa(&m, &h).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                prop_assert_eq!(a.confusion[i][j], b.confusion[j][i]);
            }
        }
        match (a.kappa, b.kappa) {
            (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
            (x, y) => prop_assert_eq!(x, y),
        }
    }

    #[test]
    fn kappa_is_one_exactly_when_identical(h in prop::collection::vec(label_strategy(), 2..100), flip in any::<prop::sample::Index>()) {
        prop_assume!(h.iter().any(|l| *l != h[0]));
        let r = cohen_kappa(&h, &h).unwrap();
        prop_assert!((r.kappa.unwrap() - 1.0).abs() < 1e-12);
        let mut m = h.clone();
        let i = flip.index(m.len());
        m[i] = if m[i] == Review { Qualitative } else { Review };
        let r = cohen_kappa(&h, &m).unwrap();
        prop_assert!(r.kappa.is_none_or(|k| k < 1.0));
    }
}

fn dataset(counts: [usize; 5]) -> Vec<MethodologyLabel> {
    let mut v = vec![];
    for (l, &c) in MethodologyLabel::ALL.iter().zip(&counts) {
        v.extend(std::iter::repeat_n(*l, c));
    }
    // interleave so indices are not grouped by label
    v.sort_by_key(|l| (l.index() * 7919) % 13);
    v
}

#[test]
fn stratified_sampling() {
    let labels = dataset([40, 30, 20, 15, 12]);
    let s = stratified_sample(&labels, &uniform_counts(10), 42).unwrap();
    assert_eq!(s.len(), 50);
    for l in MethodologyLabel::ALL {
        assert_eq!(s.iter().filter(|&&i| labels[i] == l).count(), 10);
    }
    assert_eq!(
        s,
        stratified_sample(&labels, &uniform_counts(10), 42).unwrap()
    );
    assert_ne!(
        s,
        stratified_sample(&labels, &uniform_counts(10), 43).unwrap()
    );

    let short = dataset([40, 30, 20, 3, 12]);
    assert_eq!(
        stratified_sample(&short, &uniform_counts(10), 1).unwrap_err(),
        SampleError::InsufficientCategory {
            label: Review,
            requested: 10,
            available: 3
        }
    );

    let mut custom = BTreeMap::new();
    custom.insert(Quantitative, 12);
    custom.insert(TheoreticalOther, 12);
    assert_eq!(stratified_sample(&labels, &custom, 5).unwrap().len(), 24);
}

#[test]
fn flagged_model_output_falls_back_to_rules() {
    use confcurate_core::llm::{CompletionParams, CompletionTransport, Mode, TransportError};
    struct Garbage;
    impl CompletionTransport for Garbage {
        fn complete(&self, _: &str, _: &CompletionParams) -> Result<String, TransportError> {
            Ok("the label is probably quantitative".into())
        }
    }
    let config = ClassifierConfig {
        mode: Mode::Model,
        endpoint: Some("http://unused".into()),
        ..Default::default()
    };
    let model =
        ModelClassifier::new(Box::new(Garbage), METHODOLOGY_PROMPT.into(), &config).unwrap();
    let text = "Semi-structured interviews with 24 kinship caregivers were analyzed using thematic analysis.";
    let items = vec![("p1".to_string(), text.to_string())];

    let alone = classify_batch(&model, None, &items).unwrap();
    assert_eq!(alone[0].label, None);
    assert!(alone[0].flag.as_deref().unwrap().contains("malformed"));

    let with_fallback = classify_batch(&model, Some(rules()), &items).unwrap();
    assert_eq!(with_fallback[0].label, Some(Qualitative));
    assert_eq!(with_fallback[0].mode, Mode::Rules);
    assert!(with_fallback[0].flag.is_some());
}
