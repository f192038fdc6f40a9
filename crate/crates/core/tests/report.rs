use kernel_spectra::report::{
    format_number, write_eigfun_csv, Comparison, EigfunSample, Entry, Metadata, VerificationReport, PLUMBING,
};
use kernel_spectra::suites::{criterion_title, run_suite, Suite, SuiteContext};
use proptest::prelude::*;

fn metadata() -> Metadata {
    Metadata {
        panels: 64,
        order: 4,
        grid_size: 256,
        truncations: vec![("expansion".into(), 40)],
        seed: 7,
        tol_scale: 1.0,
    }
}

#[test]
fn comparisons() {
    assert!(Entry::within("a", PLUMBING, 1.0, 1.05, 0.1).pass);
    assert!(!Entry::within("a", PLUMBING, 1.0, 1.2, 0.1).pass);
    assert!(Entry::at_most("b", PLUMBING, 0.9, 1.0, 0.0).pass);
    assert!(!Entry::at_least("c", PLUMBING, 0.9, 1.0, 0.05).pass);
    assert!(Entry::holds("d", PLUMBING, true).pass);
    assert!(!Entry::holds("d", PLUMBING, false).pass);
    // non-finite values never pass
    assert!(!Entry::within("e", PLUMBING, f64::NAN, 0.0, 1.0).pass);
    assert!(!Entry::at_most("e", PLUMBING, f64::NEG_INFINITY, 0.0, 1.0).pass);
    assert!(!Comparison::Within.holds(f64::NAN, 0.0, f64::INFINITY));
}

#[test]
#[should_panic(expected = "anchor")]
fn entries_need_an_anchor() {
    Entry::within("x", "", 0.0, 0.0, 0.0);
}

#[test]
fn report_passes_iff_every_entry_passes() {
    let mut report = VerificationReport {
        suite: "kernel".into(),
        entries: vec![Entry::holds("a", PLUMBING, true), Entry::within("b", PLUMBING, 2.0, 2.0, 0.0)],
        metadata: metadata(),
    };
    assert!(report.passed());
    assert_eq!(report.failures().count(), 0);
    report.entries.push(Entry::holds("c", PLUMBING, false));
    assert!(!report.passed());
    assert_eq!(report.failures().map(|e| e.check_id.as_str()).collect::<Vec<_>>(), ["c"]);
}

#[test]
fn suite_names_round_trip() {
    for name in Suite::NAMES {
        let suite: Suite = name.parse().unwrap();
        assert_eq!(suite.to_string(), name);
        assert_eq!(serde_json::to_string(&suite).unwrap(), format!("\"{name}\""));
    }
    assert!("spectral".parse::<Suite>().is_err());
    assert_eq!(Suite::All.criteria(), (1..=20).collect::<Vec<u8>>());
    let mut covered: Vec<u8> = Suite::All.members().into_iter().flat_map(|s| s.criteria()).collect();
    covered.sort_unstable();
    assert_eq!(covered, (1..=20).collect::<Vec<u8>>());
    assert!((1..=20).all(|n| !criterion_title(n).is_empty()));
}

#[test]
fn kernel_suite_report() {
    let report = run_suite(Suite::Kernel, &SuiteContext::default()).unwrap();
    assert_eq!(report.suite, "kernel");
    assert!(report.passed(), "{:?}", report.failures().collect::<Vec<_>>());
    assert!(report.entries.iter().any(|e| e.check_id.starts_with("c17")));
    assert!(report.entries.iter().all(|e| !e.anchor.is_empty() && e.runtime_seconds >= 0.0));
    let back = VerificationReport::from_json(&report.to_json().unwrap()).unwrap();
    assert_eq!(back, report);
}

#[test]
fn eigfun_csv_leaves_undefined_values_empty() {
    let rows = [
        EigfunSample { x: 0.25, phi: 1.0, dphi: Some(-2.0), p: 0.5, q: Some(-0.5) },
        EigfunSample { x: 0.5, phi: 1.5, dphi: None, p: 0.25, q: None },
    ];
    let mut out = Vec::new();
    write_eigfun_csv(&rows, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,phi,dphi,P,Q");
    assert_eq!(lines[2], format!("{},{},,{},", format_number(0.5), format_number(1.5), format_number(0.25)));
    assert_eq!(lines[1].split(',').nth(2).unwrap().parse::<f64>().unwrap(), -2.0);
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![any::<f64>().prop_filter("finite", |x| x.is_finite()), Just(0.0), Just(-0.0)]
}

proptest! {
    #[test]
    fn json_round_trips(
        values in proptest::collection::vec((finite(), finite(), 0.0f64..1e3, any::<bool>()), 0..8),
        seed in any::<u64>(),
    ) {
        let entries = values
            .iter()
            .enumerate()
            .map(|(i, (c, r, t, b))| {
                let e = if *b { Entry::within(format!("p{i}"), PLUMBING, *c, *r, *t) } else { Entry::at_most(format!("p{i}"), "a bound", *c, *r, *t) };
                e.with_runtime(*t)
            })
            .collect();
        let report = VerificationReport { suite: "all".into(), entries, metadata: Metadata { seed, ..metadata() } };
        let back = VerificationReport::from_json(&report.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, report);
    }

    #[test]
    fn numbers_round_trip_through_the_csv_format(x in finite()) {
        prop_assert_eq!(format_number(x).parse::<f64>().unwrap(), x);
    }
}
