use holoball_core::integration::MCEstimate;
use holoball_experiments::{emit_report, Format, Report};

fn sample() -> Report {
    let mut r = Report::new("demo", "thm_keumo6");
    r.estimate("ratio", &MCEstimate { value: 0.5, stderr: 0.01, n_samples: 100, seed: 7 });
    r.exact("rhs", 2.0).verdict("bounded");
    r.fitted("slope", -0.25, 100, 7);
    r.rule("window", true, "ok");
    r
}

#[test]
fn csv_has_fixed_columns_and_exactness_tags() {
    let mut out = Vec::new();
    emit_report(&[sample()], Format::Csv, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,quantity,value,stderr,n,seed,verdict");
    assert_eq!(lines[1], "demo,ratio,0.5,1e-2,100,7,");
    assert_eq!(lines[2], "demo,rhs,2.0,exact,0,0,bounded");
    assert!(lines[3].contains(",fitted,"));
    assert_eq!(lines[4], "demo,rule:window,1.0,exact,0,0,pass");
}

#[test]
fn json_round_trips_rules() {
    let mut r = sample();
    r.rule("other", false, "broken");
    assert!(!r.passed());
    let mut out = Vec::new();
    emit_report(&[r], Format::Json, &mut out).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out).unwrap();
    let rules = v[0]["rules"].as_array().unwrap();
    assert_eq!(rules.len(), 2);
    assert_eq!(rules[1]["passed"], false);
}

#[test]
fn empty_report_set_still_has_a_header() {
    let mut out = Vec::new();
    emit_report(&[], Format::Csv, &mut out).unwrap();
    assert_eq!(String::from_utf8(out).unwrap().trim(), "scenario,quantity,value,stderr,n,seed,verdict");
}
