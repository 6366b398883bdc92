use std::path::Path;

use proptest::prelude::*;
use vdd::runner::classify_batch;
use vdd::samples::load_samples;
use vdd::trace::{load_trace, parse_trace, write_trace};
use vdd_core::calibration::PosthocOptions;
use vdd_core::source::TraceSource;
use vdd_core::{Error as CoreError, LogitSource, LogitVector, Prompt, TokenId, Variant, VisualContext, Vocabulary};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");

type Expected = (&'static str, [f64; 2], [f64; 2], [f64; 2], usize, usize);

// High-precision reference computed from the committed trace rows by scripts/trace_oracle.py.
#[allow(clippy::excessive_precision)]
const ORACLE: [Expected; 3] = [
    (
        "s0",
        [0.93702664394300351049, 0.062973356056996489514],
        [0.81986741871065874252, 0.18013258128934125748],
        [0.6885406935673135887, 0.3114593064326864113],
        0,
        0,
    ),
    (
        "s1",
        [0.57444251681165898715, 0.42555748318834101285],
        [0.81912047926097053955, 0.18087952073902946045],
        [0.16091705678200183582, 0.83908294321799816418],
        0,
        1,
    ),
    (
        "s2",
        [0.92518517887048401446, 0.074814821129515985541],
        [0.78837492298377495472, 0.21162507701622504528],
        [0.69423829281634448762, 0.30576170718365551238],
        0,
        0,
    ),
];

fn close(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
}

#[test]
fn committed_trace_classifies_like_the_oracle() {
    let trace = load_trace(Path::new(FIXTURES).join("trace.jsonl")).unwrap();
    let samples = load_samples(Path::new(FIXTURES).join("trace_samples.json"), trace.vocabulary()).unwrap();
    let records = classify_batch(&trace, &samples, &PosthocOptions::default(), 2).unwrap();
    assert_eq!(records.len(), ORACLE.len());
    for (r, (id, naive, prior, debiased, naive_label, label)) in records.iter().zip(ORACLE) {
        assert_eq!(r.sample, id);
        assert!(close(r.naive.as_ref().unwrap(), &naive), "{id} naive");
        assert!(close(r.prior.as_ref().unwrap(), &prior), "{id} prior");
        assert!(close(r.debiased.as_ref().unwrap(), &debiased), "{id} debiased");
        assert_eq!(r.naive_label, Some(naive_label));
        assert_eq!(r.label, Some(label));
    }
}

#[test]
fn missing_step_is_a_trace_miss() {
    let trace = load_trace(Path::new(FIXTURES).join("trace.jsonl")).unwrap();
    let prompt = Prompt::new("s0", vec![TokenId(2)], None).unwrap();
    let err = trace
        .query(
            &prompt,
            &VisualContext::Real { id: "s0".into() },
            &[TokenId(7), TokenId(1)],
        )
        .unwrap_err();
    assert!(matches!(err, CoreError::TraceMiss { step: 2, .. }), "{err:?}");
}

fn vocab() -> Vocabulary {
    Vocabulary::new(["<unk>", "<eos>", "a", "b", "c"].map(String::from).to_vec()).unwrap()
}

proptest! {
    #[test]
    fn trace_round_trips_exactly(
        rows in prop::collection::btree_map(
            ("[a-z]{1,4}", 0usize..6, 0usize..4),
            prop::collection::vec(prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(f64::NEG_INFINITY)], 5),
            0..20,
        )
    ) {
        let mut trace = TraceSource::new(vocab());
        for ((sample, v, step), logits) in rows {
            let Ok(l) = LogitVector::new(logits) else { continue };
            trace.insert(sample, Variant::ALL[v], step, l).unwrap();
        }
        let mut bytes = Vec::new();
        write_trace(&trace, &mut bytes).unwrap();
        let back = parse_trace(bytes.as_slice(), Path::new("mem")).unwrap();
        prop_assert_eq!(back.len(), trace.len());
        for ((ka, la), (kb, lb)) in trace.records().zip(back.records()) {
            prop_assert_eq!(ka, kb);
            prop_assert_eq!(la.as_slice(), lb.as_slice());
        }
        let mut again = Vec::new();
        write_trace(&back, &mut again).unwrap();
        prop_assert_eq!(bytes, again);
    }
}
