use frrd::config::{ConfigError, RunConfig};
use frrd::solver::Termination;
use frrd::study::run_study;

fn case(name: &str) -> RunConfig {
    RunConfig::load(format!("{}/../../cases/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn shipped_cases_parse_and_resolve() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../cases");
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            let cfg = RunConfig::load(&path).unwrap();
            cfg.resolve().unwrap();
            cfg.build_mesh().unwrap();
            let again = RunConfig::from_json_str(&cfg.to_json_string()).unwrap();
            assert_eq!(again.to_json_string(), cfg.to_json_string());
            count += 1;
        }
    }
    assert!(count >= 5);
}

#[test]
fn linear_case_is_exact() {
    let out = run_study(&case("linear_exact.json"), 0, 1.0).unwrap();
    let level = &out.report.levels[0];
    assert_eq!(level.elements, 32);
    assert_eq!(level.termination, Termination::Converged);
    assert!(level.l2_error.unwrap() <= 1e-8);
    assert!(out.report.violations.is_empty(), "{:?}", out.report.violations);
    assert_eq!(out.elements.len(), 32);
    assert_eq!(out.level_rows().len(), 1);
}

#[test]
fn reports_are_reproducible() {
    let cfg = case("burgers_hex.json");
    let a = run_study(&cfg, 7, 1.0).unwrap();
    let b = run_study(&cfg, 7, 1.0).unwrap();
    assert_eq!(serde_json::to_string(&a.report.numerics()).unwrap(), serde_json::to_string(&b.report.numerics()).unwrap());
    assert!(a.report.numerics().get("timing").is_none());
}

#[test]
fn tight_tolerances_raise_violations() {
    let out = run_study(&case("two_triangles_st.json"), 0, 1e-40).unwrap();
    assert!(out.report.violations.iter().any(|v| v.contains("conservation")), "{:?}", out.report.violations);
}

#[test]
fn two_level_linear_study_reports_orders() {
    let mut cfg = case("sine_order_k1.json");
    cfg.levels = 2;
    let out = run_study(&cfg, 0, 1.0).unwrap();
    assert_eq!(out.report.orders.len(), 1);
    let o = &out.report.orders[0];
    assert!(o.l2.unwrap() > 1.5, "{o:?}");
    assert!(out.report.levels[1].elements == 4 * out.report.levels[0].elements);
}

#[test]
fn malformed_configs_are_rejected() {
    assert!(matches!(RunConfig::from_json_str("{"), Err(ConfigError::Malformed(_))));
    let unknown = r#"{"case":"x","mesh":{"generator":"square-triangles","n":2},"law":{"name":"burgers"},"bogus":1}"#;
    assert!(RunConfig::from_json_str(unknown).is_err());
    let bad_degree = r#"{"case":"x","mesh":{"generator":"square-triangles","n":2},"law":{"name":"burgers"},"degree":40}"#;
    assert!(RunConfig::from_json_str(bad_degree).is_err());
    let hex_k2 = r#"{"case":"x","mesh":{"generator":"honeycomb","n":1},"law":{"name":"burgers"},"degree":2}"#;
    let cfg = RunConfig::from_json_str(hex_k2);
    assert!(cfg.is_err() || run_study(&cfg.unwrap(), 0, 1.0).is_err());
}
