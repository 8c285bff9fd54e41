use serde_json::Value;
use spatial_cournot_web::{benefit_curve, reaction_curves, solve};

fn parse(s: String) -> Value {
    serde_json::from_str(&s).unwrap()
}

#[test]
fn solve_zero_transport() {
    let v = parse(solve(0.3, 0.7, 0.0, 0.0));
    assert!((v["q1"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(v["branch"], "t_zero_closed_form");
}

#[test]
fn solve_reports_errors_as_json() {
    let v = parse(solve(0.7, 0.3, 0.2, 0.0));
    assert!(v["error"].as_str().unwrap().contains("r1 < r2"));
    let v = parse(solve(0.3, 0.6, 0.2, 40.0));
    assert!(v["error"].as_str().unwrap().contains("gamma"));
}

#[test]
fn benefit_curve_shape() {
    let v = parse(benefit_curve(0.3, 0.6, 5.0, 0.0, 1.0, 11));
    let t = v["t"].as_array().unwrap();
    assert_eq!(t.len(), 11);
    assert_eq!(t[10].as_f64(), Some(1.0));
    let b1 = v["benefit1"].as_array().unwrap();
    let b2 = v["benefit2"].as_array().unwrap();
    assert_eq!(b1[0], b2[0]);
    assert!(b1.iter().all(|g| g.as_f64().unwrap() > 0.0));
    assert!(parse(benefit_curve(0.3, 0.6, 5.0, 1.0, 0.0, 11))["error"].is_string());
    assert!(parse(benefit_curve(0.3, 0.6, 5.0, 0.0, 1.0, 1))["error"].is_string());
}

#[test]
fn reaction_curves_cross_at_equilibrium() {
    let v = parse(reaction_curves(0.3, 0.6, 0.2, 0.0, 0.1, 5));
    let eq = [v["equilibrium"][0].as_f64().unwrap(), v["equilibrium"][1].as_f64().unwrap()];
    let f1 = v["firm1"].as_array().unwrap();
    let f2 = v["firm2"].as_array().unwrap();
    assert_eq!((f1.len(), f2.len()), (5, 5));
    // The middle sample sits at the rival's equilibrium strategy.
    assert!((f1[2][0].as_f64().unwrap() - eq[1]).abs() < 1e-12);
    assert!((f1[2][1].as_f64().unwrap() - eq[0]).abs() < 1e-4);
    assert!((f2[2][1].as_f64().unwrap() - eq[1]).abs() < 1e-4);
    // Quantities are strategic substitutes.
    assert!(f1[0][1].as_f64().unwrap() > f1[4][1].as_f64().unwrap());
}
