use std::path::PathBuf;

use multicurve::credit_funding::CollateralMode;
use multicurve::market_data::{validate_config, validate_policy};
use multicurve::pricing::DealSchedule;

fn data(name: &str) -> String {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "data", name].iter().collect();
    std::fs::read_to_string(path).unwrap()
}

#[test]
fn sample_config_validates() {
    let cfg = validate_config(&serde_json::from_str(&data("config.json")).unwrap()).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.model.q_loadings(0.25), vec![1.0]);
    assert_eq!(cfg.credit.lgd_c(), 0.6);
}

#[test]
fn sample_policies_validate() {
    for (file, ccp) in [
        ("policy_none.json", false),
        ("policy_perfect.json", false),
        ("policy_partial.json", false),
        ("policy_ccp.json", true),
    ] {
        let p = validate_policy(&serde_json::from_str(&data(file)).unwrap()).unwrap();
        assert_eq!(matches!(p.mode, CollateralMode::Ccp { .. }), ccp, "{file}");
    }
}

#[test]
fn sample_deal_parses() {
    let deal = DealSchedule::from_json_str(&data("deal_irs.json")).unwrap();
    assert_eq!(deal.maturity(), 5.0);
    assert_eq!(deal.flows().len(), 15);
}
