use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;
use wealth_target_server::api::{router, AppState};
use wealth_target_server::config::ServiceConfig;

fn app() -> Router {
    router(AppState::new(&ServiceConfig::default()))
}

fn market() -> Value {
    json!({
        "d": 1,
        "horizon": 1.0,
        "pieces": [{ "t_start": 0.0, "t_end": 1.0, "rate": 0.02, "drift": [0.06], "vol": [[0.2]] }]
    })
}

async fn send(app: &Router, method: &str, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = match body {
        Some(b) => req.body(Body::from(b.to_string())).unwrap(),
        None => req.body(Body::empty()).unwrap(),
    };
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

fn compute(dist: Value, x0: f64, mode: &str) -> Value {
    json!({ "market": market(), "distribution": dist, "x0": x0, "mode": mode })
}

#[tokio::test]
async fn feasibility_solves_the_lognormal_parameter() {
    let app = app();
    let (s, v) = send(&app, "POST", "/v1/feasibility", Some(compute(json!({"family": "lognormal"}), 1.0, "terminal"))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["feasible"], true);
    assert!((v["solved_parameter"].as_f64().unwrap() - 0.16).abs() < 1e-10);
    assert!((v["a_target"].as_f64().unwrap() - 0.04).abs() < 1e-15);
}

#[tokio::test]
async fn fixed_parameter_off_budget_is_reported_infeasible() {
    let app = app();
    let (s, v) =
        send(&app, "POST", "/v1/feasibility", Some(compute(json!({"family": "lognormal", "b": 0.16}), 1.1, "terminal"))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["feasible"], false);
    assert!((v["budget_value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[tokio::test]
async fn wealth_below_minimum_is_422() {
    let app = app();
    let x0 = 0.97; // below e^{−A_T/2} ≈ 0.9802
    let (s, v) = send(&app, "POST", "/v1/feasibility", Some(compute(json!({"family": "lognormal"}), x0, "terminal"))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "infeasible-wealth");
    assert_eq!(v["error"]["status"], 422);
}

#[tokio::test]
async fn malformed_requests_are_400() {
    let app = app();
    let mut bad = compute(json!({"family": "lognormal"}), 1.0, "terminal");
    bad["market"]["pieces"][0].as_object_mut().unwrap().remove("vol");
    let (s, v) = send(&app, "POST", "/v1/feasibility", Some(bad)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid-request");

    let mut singular = compute(json!({"family": "lognormal"}), 1.0, "terminal");
    singular["market"]["pieces"][0]["vol"] = json!([[0.0]]);
    let (s, v) = send(&app, "POST", "/v1/feasibility", Some(singular)).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"]["code"], "invalid-market");

    let req = Request::builder()
        .method("POST")
        .uri("/v1/preferences")
        .header("content-type", "application/json")
        .body(Body::from("{not json"))
        .unwrap();
    assert_eq!(app.clone().oneshot(req).await.unwrap().status(), StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn terminal_preferences_sample_the_power_curve() {
    let app = app();
    let (s, v) = send(&app, "POST", "/v1/preferences", Some(compute(json!({"family": "lognormal"}), 1.0, "terminal"))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["kind"], "marginal-utility");
    let samples = v["samples"].as_array().unwrap();
    assert!(samples.len() > 10);
    for p in samples {
        let (x, u) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        assert!((u - x.powf(-0.5)).abs() < 1e-9 * u);
    }
}

#[tokio::test]
async fn intermediate_preferences_and_refusals() {
    let app = app();
    let mut req = compute(json!({"family": "lognormal"}), 1.0, "intermediate");
    req["target_time"] = json!(0.5);
    let (s, v) = send(&app, "POST", "/v1/preferences", Some(req)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["kind"], "inverse-marginal");
    assert!((v["solved_parameter"].as_f64().unwrap() - 0.08).abs() < 1e-10);
    // I_T(y) = e^{−0.04} y^{−2}
    for p in v["samples"].as_array().unwrap() {
        let (y, i) = (p[0].as_f64().unwrap(), p[1].as_f64().unwrap());
        assert!((i - (-0.04f64).exp() / (y * y)).abs() < 1e-6 * i);
    }

    let markers = json!({"family": "markers", "levels": [0.7, 0.8, 0.9, 0.95, 1.0, 1.05, 1.1, 1.2, 1.3, 1.5]});
    let mut req = compute(markers, 1.0, "intermediate");
    req["target_time"] = json!(0.5);
    let (s, v) = send(&app, "POST", "/v1/preferences", Some(req)).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "assumption-violated");

    let (s, _) = send(&app, "POST", "/v1/preferences", Some(compute(json!({"family": "lognormal"}), 1.0, "intermediate"))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn forward_preferences_report_the_measure() {
    let app = app();
    let (s, v) = send(&app, "POST", "/v1/preferences", Some(compute(json!({"family": "lognormal"}), 1.0, "forward"))).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["kind"], "forward-measure");
    assert_eq!(v["measure"]["form"], "atomic");
    let atoms = v["measure"]["atoms"].as_array().unwrap();
    assert_eq!(atoms.len(), 1);
    assert!((atoms[0]["y"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert!((atoms[0]["m"].as_f64().unwrap() - 2.0).abs() < 1e-6);
    assert_eq!(v["measure"]["admissible"], true);
    assert!(v["measure"]["normalization"].is_object());

    let (s, v) = send(&app, "POST", "/v1/preferences", Some(compute(json!({"family": "whole-line"}), 1.0, "forward"))).await;
    assert_eq!(s, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(v["error"]["code"], "inadmissible");
    assert!(v["error"]["message"].as_str().unwrap().contains("local forward performance"));
}

#[tokio::test]
async fn simulation_summary_is_reproducible() {
    let app = app();
    let mut req = compute(json!({"family": "lognormal"}), 1.0, "terminal");
    req["config"] = json!({ "path_count": 4000, "dt": 0.01, "seed": 5, "checks": [] });
    let (s, a) = send(&app, "POST", "/v1/simulate", Some(req.clone())).await;
    assert_eq!(s, StatusCode::OK, "{a}");
    let (_, b) = send(&app, "POST", "/v1/simulate", Some(req)).await;
    assert_eq!(a, b);
    let levels = a["fan"]["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 5);
    let last = a["fan"]["wealth"].as_array().unwrap().last().unwrap().as_array().unwrap();
    // Median of x₀e^{2M_T} is x₀; sampling error of the median is about 1.25·0.4/√n.
    assert!((last[2].as_f64().unwrap() - 1.0).abs() < 4.0 * 1.25 * 0.4 / 4000f64.sqrt());
}

#[tokio::test]
async fn simulation_checks_pass_at_defaults() {
    let app = app();
    let mut req = compute(json!({"family": "lognormal"}), 1.0, "terminal");
    req["config"] = json!({ "seed": 11 });
    let (s, v) = send(&app, "POST", "/v1/simulate", Some(req)).await;
    assert_eq!(s, StatusCode::OK, "{v}");
    assert_eq!(v["summary"]["path_count"], 100_000);
    assert_eq!(v["summary"]["all_pass"], true, "{}", v["summary"]);
}

#[tokio::test]
async fn builder_session_lifecycle() {
    let app = app();
    let (s, v) =
        send(&app, "POST", "/v1/builder", Some(json!({"N": 100, "budget": 1.0, "mu": 0.07, "sigma": 0.2, "r": 0.02}))).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    let id = v["id"].as_str().unwrap().to_string();
    let xi: Vec<f64> = v["state_prices"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let st: Vec<f64> = v["stock_states"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(xi.len(), 100);
    assert!((xi.iter().sum::<f64>() / 100.0 - 1.0 / 1.02).abs() < 1e-10);
    assert!((xi.iter().zip(&st).map(|(a, b)| a * b).sum::<f64>() / 100.0 - 1.0).abs() < 1e-10);
    assert_eq!(v["status"], "editing");
    assert_eq!(v["cost"], 0.0);

    let uri = format!("/v1/builder/{id}");
    let (s, v) = send(&app, "PUT", &format!("{uri}/markers"), Some(json!({"markers": vec![0.95 * 1.02; 100]}))).await;
    assert_eq!(s, StatusCode::OK);
    assert!((v["cost_fraction"].as_f64().unwrap() - 0.95).abs() < 1e-12);
    let (s, v) = send(&app, "POST", &format!("{uri}/submit"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"]["code"], "illegal-transition");

    let (s, v) = send(&app, "PUT", &format!("{uri}/markers"), Some(json!({"markers": vec![1.02; 100]}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "submittable");
    let (s, v) = send(&app, "POST", &format!("{uri}/submit"), None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["session"]["status"], "submitted");
    assert_eq!(v["marginal"]["degenerate"], true);
    let (s, v) = send(&app, "POST", &format!("{uri}/realize"), Some(json!({"seed": 3}))).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["realization"]["wealth"], 1.02);
    let (s, _) = send(&app, "POST", &format!("{uri}/realize"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    let (s, v) = send(&app, "GET", &uri, None).await;
    assert_eq!(s, StatusCode::OK);
    assert_eq!(v["status"], "realized");

    let (s, v) = send(&app, "GET", "/v1/builder/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["error"]["code"], "unknown-session");
    let (s, _) = send(&app, "PUT", &format!("{uri}/markers"), Some(json!({"markers": [1.0]}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
}

#[tokio::test]
async fn numbers_round_trip_exactly() {
    let app = app();
    let (_, v) = send(&app, "POST", "/v1/feasibility", Some(compute(json!({"family": "transformed-normal"}), 5.0, "terminal"))).await;
    let b = v["solved_parameter"].as_f64().unwrap();
    let text = serde_json::to_string(&v).unwrap();
    let back: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(back["solved_parameter"].as_f64().unwrap().to_bits(), b.to_bits());
}
