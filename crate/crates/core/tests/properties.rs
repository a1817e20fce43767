//! Property tests for the metric and parsing invariants.

use proptest::prelude::*;
use scribebench_core::judge::{self, JudgeAssessment, LikertScore, SeverityCategory};
use scribebench_core::note::{SectionSchema, parse_note, serialize_note};
use scribebench_core::report::percent_change;
use scribebench_core::rouge::{RougeConfig, rouge_l, rouge_n, rouge_suite};

fn token_seq() -> impl Strategy<Value = Vec<String>> {
    prop::collection::vec(
        prop::sample::select((0..20).map(|i| format!("w{i}")).collect::<Vec<_>>()),
        0..=30,
    )
}

proptest! {
    #[test]
    fn fmeasure_is_swap_symmetric(a in token_seq(), b in token_seq()) {
        for n in [1usize, 2] {
            let forward = rouge_n(&a, &b, n);
            let backward = rouge_n(&b, &a, n);
            prop_assert!((forward.fmeasure - backward.fmeasure).abs() <= 1e-12);
            prop_assert!((forward.precision - backward.recall).abs() <= 1e-12);
        }
        let forward = rouge_l(&a, &b);
        let backward = rouge_l(&b, &a);
        prop_assert!((forward.fmeasure - backward.fmeasure).abs() <= 1e-12);
    }

    #[test]
    fn rouge_scores_stay_in_unit_interval(a in token_seq(), b in token_seq(), n in 1usize..4) {
        for score in [rouge_n(&a, &b, n), rouge_l(&a, &b)] {
            prop_assert!((0.0..=1.0).contains(&score.precision));
            prop_assert!((0.0..=1.0).contains(&score.recall));
            prop_assert!((0.0..=1.0).contains(&score.fmeasure));
        }
    }

    #[test]
    fn rouge_identity_scores_one(a in token_seq(), n in 1usize..4) {
        if a.len() >= n {
            prop_assert_eq!(rouge_n(&a, &a, n).fmeasure, 1.0);
        } else {
            prop_assert_eq!(rouge_n(&a, &a, n).fmeasure, 0.0);
        }
    }

    #[test]
    fn rouge_suite_bounds_on_arbitrary_text(cand in ".{0,200}", reference in ".{0,200}") {
        let suite = rouge_suite(&cand, &reference, &RougeConfig::default());
        for score in [suite.rouge1, suite.rouge2, suite.rouge_l, suite.rouge_lsum] {
            prop_assert!((0.0..=1.0).contains(&score.fmeasure));
        }
    }

    #[test]
    fn parse_note_is_total_and_round_trips(text in ".{0,400}") {
        let schema = SectionSchema::default_clinical();
        let first = parse_note(&text, &schema);
        prop_assert!(!first.sections.is_empty());
        let second = parse_note(&serialize_note(&first), &schema);
        prop_assert_eq!(first.sections, second.sections);
    }

    #[test]
    fn judge_parser_never_panics(text in ".{0,300}") {
        let _ = judge::parse_judge_response(&text);
    }

    #[test]
    fn composite_is_monotone(values in prop::array::uniform7(1i64..=5), bump in 0usize..7) {
        let build = |vals: [i64; 7]| JudgeAssessment {
            factual_correctness: LikertScore::new(vals[0]).unwrap(),
            completeness: LikertScore::new(vals[1]).unwrap(),
            clinical_relevance: LikertScore::new(vals[2]).unwrap(),
            coherence_organization: LikertScore::new(vals[3]).unwrap(),
            terminology_accuracy: LikertScore::new(vals[4]).unwrap(),
            readability: LikertScore::new(vals[5]).unwrap(),
            overall_quality: LikertScore::new(vals[6]).unwrap(),
            negation_detection: true,
            hallucination: SeverityCategory::No,
            omission: SeverityCategory::No,
            rationale: String::new(),
        };
        let base = build(values);
        let mut raised = values;
        raised[bump] = (raised[bump] + 1).min(5);
        let bumped = build(raised);
        let before = judge::composite_score(&base);
        let after = judge::composite_score(&bumped);
        prop_assert!(after >= before);
        prop_assert!((1.0..=5.0).contains(&before));
    }

    #[test]
    fn percent_change_of_equal_values_is_zero(x in -1e6f64..1e6) {
        if x != 0.0 {
            prop_assert_eq!(percent_change(x, x), Some(0.0));
        } else {
            prop_assert_eq!(percent_change(x, x), None);
        }
    }

    #[test]
    fn judge_round_trip_over_valid_objects(
        values in prop::array::uniform7(1i64..=5),
        negation in any::<bool>(),
        hallucination in prop::sample::select(vec!["no", "minor", "major", "NO", "Minor", "MAJOR"]),
        omission in prop::sample::select(vec!["no", "minor", "major"]),
    ) {
        let wire = format!(
            r#"{{"factual_correctness": {}, "completeness": {}, "clinical_relevance": {},
                "coherence_organization": {}, "terminology_accuracy": {}, "readability": {},
                "overall_quality": {}, "negation_detection": {}, "hallucination": "{}",
                "omission": "{}", "rationale": "ok"}}"#,
            values[0], values[1], values[2], values[3], values[4], values[5], values[6],
            negation, hallucination, omission,
        );
        let parsed = judge::parse_judge_response(&wire).unwrap();
        prop_assert_eq!(parsed.factual_correctness.value() as i64, values[0]);
        prop_assert_eq!(parsed.negation_detection, negation);
        prop_assert_eq!(parsed.hallucination, SeverityCategory::parse(hallucination).unwrap());
        // Reserialize through serde and parse again: identical assessment.
        let json = serde_json::to_string(&parsed).unwrap();
        let again = judge::parse_judge_response(&json).unwrap();
        prop_assert_eq!(parsed, again);
    }
}
