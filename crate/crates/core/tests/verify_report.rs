use moyal::models::ModelPreset;
use moyal::verify::{run, Suite, VerifyConfig};

#[test]
fn frame_suites_pass_at_small_hbar() {
    let cfg = VerifyConfig {
        hbar: 0.5,
        suites: vec![Suite::Projection, Suite::Routes, Suite::Evolution, Suite::ClassicalLimit],
        ..VerifyConfig::default()
    };
    let rep = run(&cfg).unwrap();
    for r in rep.failures() {
        println!("{} {} {:?} {:?}", r.suite, r.metric, r.value, r.error);
    }
    assert!(rep.pass);
    assert!(rep.rows.iter().all(|r| r.model.is_none()));
}

#[test]
fn report_round_trips_through_json() {
    let cfg = VerifyConfig { suites: vec![Suite::ClassicalLimit, Suite::Ermakov], ..VerifyConfig::default() };
    let rep = run(&cfg).unwrap();
    let text = serde_json::to_string(&rep).unwrap();
    let back: moyal::verify::Report = serde_json::from_str(&text).unwrap();
    assert_eq!(back.rows, rep.rows);
    assert_eq!(back.schema, 1);
}

#[test]
fn per_model_suites_pass_for_every_preset() {
    let cfg = VerifyConfig {
        suites: vec![Suite::Ermakov, Suite::Invariant, Suite::ClosedForms],
        models: vec![
            ("sho".into(), ModelPreset::sho()),
            ("ck".into(), ModelPreset::caldirola_kanai()),
            ("tdf".into(), ModelPreset::td_frequency()),
        ],
        ..VerifyConfig::default()
    };
    let rep = run(&cfg).unwrap();
    for r in rep.failures() {
        println!("{} {:?} {} {:?}", r.suite, r.model, r.metric, r.value);
    }
    assert_eq!(rep.rows.len(), 3 * (1 + 1 + 3));
    assert!(rep.pass);
}
