use crsq_core::dataset::{
    aggregate_step1, aggregate_step2, assemble_record, dataset_to_string, load_dataset, na_record, parse_dataset,
    Arity, Asker, AggregationError, DatasetError, DatasetStats, QuestionRecord, RecordLabel, Step1Outcome,
    Step2Outcome, ValidationVerdict, WriteResponse,
};
use crsq_core::synth::synthetic_dataset;
use proptest::prelude::*;

#[test]
fn step1_rule_table() {
    // (N/A answers among the three workers) -> outcome
    for mask in 0u8..8 {
        let responses: Vec<WriteResponse> = (0..3)
            .map(|w| {
                if mask >> w & 1 == 1 {
                    WriteResponse::NotApplicable
                } else {
                    WriteResponse::Question(format!("Q{w}?"))
                }
            })
            .collect();
        let na = mask.count_ones();
        let expected = match na {
            0 => Step1Outcome::Accepted(vec!["Q0?".into(), "Q1?".into(), "Q2?".into()]),
            1 => Step1Outcome::Rerun,
            2 | 3 => Step1Outcome::NotApplicable,
            _ => unreachable!(),
        };
        assert_eq!(aggregate_step1(&responses).unwrap(), expected, "mask {mask:03b}");
    }
}

#[test]
fn step_arity_is_enforced() {
    assert_eq!(
        aggregate_step1(&[WriteResponse::NotApplicable]),
        Err(AggregationError::Arity { expected: 3, got: 1 })
    );
    assert!(aggregate_step2(&[ValidationVerdict::VALID; 4]).is_err());
}

fn verdict(bits: u16) -> ValidationVerdict {
    ValidationVerdict {
        grammatical: bits & 1 == 0,
        yesno_answerable: bits & 2 == 0,
        mentions_usage: bits & 4 == 0,
        asker: if bits & 8 == 0 { Asker::Salesperson } else if bits & 1 == 0 { Asker::Buyer } else { Asker::Neither },
    }
}

/// Written from the rule text, worker by worker: a question is rejected
/// when a single check fails for all three workers, or when two checks
/// each fail for at least two workers; with no rejection, disagreement on
/// two or more distinct checks sends it to an expert.
fn step2_oracle(marks: [[bool; 4]; 3]) -> Step2Outcome {
    let failing = |check: usize| marks.iter().filter(|w| w[check]).count();
    let all_three = (0..4).any(|c| failing(c) == 3);
    let mut two_plus = 0;
    for c in 0..4 {
        if failing(c) >= 2 {
            two_plus += 1;
        }
    }
    if all_three || two_plus >= 2 {
        return Step2Outcome::Rejected;
    }
    let mut distinct = 0;
    for c in 0..4 {
        if failing(c) > 0 {
            distinct += 1;
        }
    }
    if distinct >= 2 {
        Step2Outcome::ExpertReview
    } else {
        Step2Outcome::Approved
    }
}

#[test]
fn step2_all_4096_verdict_combinations() {
    let mut tally = [0usize; 3];
    for combo in 0u16..4096 {
        let mut marks = [[false; 4]; 3];
        let verdicts: Vec<ValidationVerdict> = (0..3)
            .map(|w| {
                let bits = combo >> (4 * w) & 0xf;
                for (c, m) in marks[w].iter_mut().enumerate() {
                    *m = bits >> c & 1 == 1;
                }
                verdict(bits)
            })
            .collect();
        let expected = step2_oracle(marks);
        assert_eq!(aggregate_step2(&verdicts).unwrap(), expected, "combo {combo:012b}");
        tally[expected as usize] += 1;
    }
    assert_eq!(tally.iter().sum::<usize>(), 4096);
    assert!(tally.iter().all(|&n| n > 0));
}

#[test]
fn buyer_and_neither_both_fail_the_asker_check() {
    let neither = ValidationVerdict { asker: Asker::Neither, ..ValidationVerdict::VALID };
    let buyer = ValidationVerdict { asker: Asker::Buyer, ..ValidationVerdict::VALID };
    assert_eq!(neither.invalid_aspects(), [false, false, false, true]);
    assert_eq!(buyer.invalid_aspects(), [false, false, false, true]);
    assert_eq!(aggregate_step2(&[neither, buyer, neither]).unwrap(), Step2Outcome::Rejected);
    assert_eq!(aggregate_step2(&[neither, buyer, ValidationVerdict::VALID]).unwrap(), Step2Outcome::Approved);
}

#[test]
fn synthetic_dataset_has_the_released_shape() {
    let records = synthetic_dataset(11);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dataset.tsv");
    std::fs::write(&path, dataset_to_string(&records)).unwrap();
    let (loaded, stats) = load_dataset(&path).unwrap();
    assert_eq!(loaded, records);
    assert_eq!((stats.total, stats.na, stats.applicable), (1115, 277, 838));
    assert_eq!(stats.questions, 838 * 5);
    assert_eq!(stats.per_category.len(), 12);
    assert_eq!(stats.per_category["Birdhouses"].total, 15);
    assert!(stats.na_fraction < 0.25);
    assert!(loaded.iter().filter(|r| !r.is_na()).all(|r| r.questions().len() == 5));
}

#[test]
fn comma_separated_export_with_numbered_columns() {
    let csv = "sentence,category,question_1,question_2,question_3,question_4,question_5\n\
               \"Great for making smoothies, really.\",Blenders,A?,B?,C?,D?,E?\n\
               Excellent for doing the job.,Snow Shovels,N/A,,,,\n";
    let r = parse_dataset(csv, Arity::Exactly(5)).unwrap();
    assert_eq!(r[0].id, "00001");
    assert_eq!(r[0].sentence, "Great for making smoothies, really.");
    assert_eq!(r[0].questions().len(), 5);
    assert!(r[1].is_na());
}

#[test]
fn schema_violations_name_record_and_field() {
    let tsv = "id\tcategory\tsentence\tlabel\tq1\tq2\tq3\tq4\tq5\n\
               7\tBikes\tGood for riding.\tQUESTIONS\tA?\tB?\tC?\tD?\n";
    match parse_dataset(tsv, Arity::Exactly(5)) {
        Err(DatasetError::Schema { record, field, .. }) => {
            assert_eq!(record, "7");
            assert_eq!(field, "questions");
        }
        other => panic!("{other:?}"),
    }
    let no_mark = "id\tcategory\tsentence\tlabel\tq1\n1\tBikes\tx\tQUESTIONS\tA statement\n";
    assert!(matches!(parse_dataset(no_mark, Arity::AtMost(5)), Err(DatasetError::Schema { .. })));
    assert!(matches!(parse_dataset("id\tsentence\n1\tx\n", Arity::AtMost(5)), Err(DatasetError::MissingColumn("category"))));
    assert!(matches!(parse_dataset("category\tsentence\n", Arity::AtMost(5)), Err(DatasetError::Empty)));
}

#[test]
fn assembled_record_orders_generated_before_paraphrases() {
    let g: Vec<String> = ["a?", "b?", "c?"].map(String::from).to_vec();
    let p: Vec<String> = ["d?", "e?"].map(String::from).to_vec();
    let r = assemble_record("1", "Bikes", "s", &g, &p).unwrap();
    assert_eq!(r.questions(), ["a?", "b?", "c?", "d?", "e?"]);
    assert!(assemble_record("1", "Bikes", "s", &g[..2], &p).is_err());
}

fn text_field() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 ,.\"'()&-]{1,30}".prop_filter("non-blank", |s| !s.trim().is_empty()).prop_map(|s| s.trim().to_string())
}

fn record() -> impl Strategy<Value = QuestionRecord> {
    (
        "[a-z0-9]{1,8}",
        text_field(),
        text_field(),
        prop::option::of(prop::collection::vec(text_field().prop_map(|q| format!("{q}?")), 5)),
    )
        .prop_map(|(id, category, sentence, qs)| match qs {
            None => na_record(&id, &category, &sentence),
            Some(q) => QuestionRecord { id, category, sentence, label: RecordLabel::Questions(q) },
        })
}

proptest! {
    #[test]
    fn serialize_then_load_is_identity(records in prop::collection::vec(record(), 1..30)) {
        let text = dataset_to_string(&records);
        let back = parse_dataset(&text, Arity::Exactly(5)).unwrap();
        prop_assert_eq!(&back, &records);
        prop_assert_eq!(dataset_to_string(&back), text);
        let stats = DatasetStats::of(&back);
        prop_assert_eq!(stats.na + stats.applicable, records.len());
    }
}
