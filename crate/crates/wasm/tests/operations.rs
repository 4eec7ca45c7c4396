use intertwine_browser::{oscillator_partner_json, pseudoboson_spectrum_json, quon_spectra_json};
use serde_json::Value;

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

#[test]
fn quon_spectrum_matches_geometric_sums() {
    let r = parse(quon_spectra_json(8, 0.3).unwrap());
    let h1 = floats(&r["h1"]);
    let closed = floats(&r["closed_form"]);
    for (a, b) in h1.iter().zip(&closed) {
        assert!((a - b).abs() <= 1e-12);
    }
    assert_eq!(r["partners"]["lower"]["mode"], "beta_pseudoinverse");
    assert!(r["partners"]["raise"]["intertwining"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn quon_at_zero_has_no_lower_partner() {
    let r = parse(quon_spectra_json(5, 0.0).unwrap());
    assert!(r["partners"].get("lower").is_none());
}

#[test]
fn pseudoboson_is_deterministic_and_passes() {
    let a = pseudoboson_spectrum_json(10, 3, 5.0).unwrap();
    assert_eq!(a, pseudoboson_spectrum_json(10, 3, 5.0).unwrap());
    let r = parse(a);
    assert_eq!(r["pass"], true);
    let b = floats(&r["frame_bounds"]);
    assert!((b[1] / b[0] - 25.0).abs() <= 1e-8);
}

#[test]
fn oscillator_raise_drops_ground_state() {
    let r = parse(oscillator_partner_json(6, "raise").unwrap());
    assert_eq!(r["dropped"], serde_json::json!([0]));
    let diag = floats(&r["theta2_diagonal"]);
    for (n, v) in diag.iter().take(4).enumerate() {
        assert!((v - (n as f64 + 1.0)).abs() <= 1e-12);
    }
    let nu = floats(&r["nu"]);
    assert!((nu[3] - 3.0).abs() <= 1e-12);
}

#[test]
fn invalid_arguments_are_rejected() {
    assert!(quon_spectra_json(2, 0.5).is_err());
    assert!(quon_spectra_json(5, 1.5).is_err());
    assert!(pseudoboson_spectrum_json(5, 1, 0.5).is_err());
    assert!(pseudoboson_spectrum_json(60, 1, 2.0).is_err());
    assert!(oscillator_partner_json(5, "sideways").is_err());
}
