const PAGE: &str = include_str!("../www/index.html");

fn default_quotes() -> &'static str {
    let start = PAGE.find("<textarea id=\"quotes\">").expect("quotes textarea") + "<textarea id=\"quotes\">".len();
    let end = start + PAGE[start..].find("</textarea>").expect("closing tag");
    &PAGE[start..end]
}

#[test]
fn default_page_quotes_bootstrap() {
    let json: serde_json::Value = serde_json::from_str(&multicurve_web::bootstrap_curves(default_quotes()).unwrap()).unwrap();
    assert!(json["max_repricing_error"].as_f64().unwrap() < 1e-10);
}

#[test]
fn page_calls_every_export() {
    for name in ["bootstrap_curves", "forward_fan", "swap_explorer"] {
        assert!(PAGE.contains(&format!("{name}(")), "{name}");
    }
}
