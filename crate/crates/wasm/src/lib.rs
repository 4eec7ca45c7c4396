//! Browser bindings: three small operations that return JSON strings for
//! the static demo page in `www/`.

use intertwine::intertwine::{build_partners, map_eigenfamily, nu_values, verify_intertwining};
use intertwine::linalg::{eig_general, eig_hermitian, Tolerances};
use intertwine::models::{make_oscillator, make_pseudoboson, make_quon, pseudoboson_verify, MAX_PSEUDOBOSON_DIM};
use intertwine::random::{riesz_generator, InstanceRng};
use intertwine::{Matrix, C64};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

/// Largest dimension the page offers for the ladder models.
pub const MAX_DIM: usize = 40;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn check_dim(d: usize, max: usize) -> Result<(), String> {
    if (3..=max).contains(&d) {
        Ok(())
    } else {
        Err(format!("dimension must be between 3 and {max}, got {d}"))
    }
}

fn sorted_spectrum(m: &Matrix, t: &Tolerances) -> Result<Vec<C64>, String> {
    let mut eig = eig_general(m, t).map_err(|e| e.to_string())?.eigenvalues;
    eig.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(eig)
}

fn complex(values: &[C64]) -> Value {
    values.iter().map(|z| json!([z.re, z.im])).collect()
}

/// Spectrum of `h1 = B†B` against `1 + q + … + q^(n−1)` and the spectra of
/// both partners.
pub fn quon_spectra_json(d: usize, q: f64) -> Result<String, String> {
    check_dim(d, MAX_DIM)?;
    let t = tol();
    let sys = make_quon(d, q).map_err(|e| e.to_string())?;
    let h1 = eig_hermitian(&sys.h1, &t).map_err(|e| e.to_string())?.eigenvalues;
    let closed: Vec<f64> = (0..d).map(|n| (0..n).map(|k| q.powi(k as i32)).sum()).collect();
    let mut partners = serde_json::Map::new();
    for (name, x) in [("raise", sys.b.adjoint()), ("lower", sys.b.clone())] {
        if name == "lower" && q <= t.rank_tol {
            continue;
        }
        let pair = build_partners(&sys.h1, &x, &t).map_err(|e| e.to_string())?;
        let iv = verify_intertwining(&pair, &t);
        partners.insert(
            name.into(),
            json!({
                "eigenvalues": complex(&sorted_spectrum(&pair.theta2, &t)?),
                "mode": pair.mode.as_str(),
                "intertwining": iv.left.max(iv.right),
            }),
        );
    }
    Ok(json!({ "dim": d, "q": q, "h1": h1, "closed_form": closed, "partners": partners }).to_string())
}

/// Eigenvalues of the pseudo-boson `theta1` built from a random generator
/// with condition number `kappa`, plus frame bounds and residuals.
pub fn pseudoboson_spectrum_json(d: usize, seed: u64, kappa: f64) -> Result<String, String> {
    check_dim(d, MAX_PSEUDOBOSON_DIM)?;
    if !(kappa.is_finite() && kappa >= 1.0) {
        return Err(format!("condition number must be at least 1, got {kappa}"));
    }
    let t = tol();
    let generator = riesz_generator(&mut InstanceRng::seed(seed), d, kappa);
    let sys = make_pseudoboson(&generator, &t).map_err(|e| e.to_string())?;
    let report = pseudoboson_verify(&sys, &t).map_err(|e| e.to_string())?;
    Ok(json!({
        "dim": d,
        "seed": seed,
        "kappa": kappa,
        "eigenvalues": complex(&report.theta1_eigenvalues),
        "frame_bounds": [sys.basis.bounds.0, sys.basis.bounds.1],
        "residuals": report.residuals,
        "nonhermiticity": sys.theta1.hermiticity_defect(),
        "theta2_theta1_distance": report.theta_distance,
        "pass": report.pass,
    })
    .to_string())
}

/// Partner of the truncated number operator along `a†` ("raise") or `a`
/// ("lower"): its diagonal, ν values and the dropped indices.
pub fn oscillator_partner_json(d: usize, direction: &str) -> Result<String, String> {
    check_dim(d, MAX_DIM)?;
    let t = tol();
    let osc = make_oscillator(d).map_err(|e| e.to_string())?;
    let x = match direction {
        "raise" => osc.raise.clone(),
        "lower" => osc.lower.clone(),
        other => return Err(format!("direction must be raise or lower, got {other}")),
    };
    let pair = build_partners(&osc.h1, &x, &t).map_err(|e| e.to_string())?;
    let fam = osc.number_family();
    let transport = map_eigenfamily(&x, &fam, &t).map_err(|e| e.to_string())?;
    let magnitudes: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| pair.theta2.get(i, j).norm()).collect()).collect();
    let diagonal: Vec<f64> = pair.theta2.diagonal().iter().map(|z| z.re).collect();
    Ok(json!({
        "dim": d,
        "direction": direction,
        "mode": pair.mode.as_str(),
        "theta2_diagonal": diagonal,
        "theta2_magnitudes": magnitudes,
        "nu": nu_values(&x, &fam),
        "dropped": transport.dropped,
        "guard": t.guard,
    })
    .to_string())
}

#[wasm_bindgen]
pub fn quon_spectra(d: usize, q: f64) -> Result<String, JsValue> {
    quon_spectra_json(d, q).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn pseudoboson_spectrum(d: usize, seed: u32, kappa: f64) -> Result<String, JsValue> {
    pseudoboson_spectrum_json(d, u64::from(seed), kappa).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn oscillator_partner(d: usize, direction: &str) -> Result<String, JsValue> {
    oscillator_partner_json(d, direction).map_err(|e| JsValue::from_str(&e))
}
