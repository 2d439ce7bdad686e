mod common;

use std::collections::BTreeSet;
use std::sync::Arc;

use aefi::dataset::RecordSchema;
use aefi::service::{router, save_bundle, AppState, ModelBundle, RecordStore};
use axum::http::StatusCode;
use common::{call, form_record, small_bundle};
use serde_json::{json, Value};

fn app_with(bundle: Option<ModelBundle>, dir: &tempfile::TempDir) -> (axum::Router, Arc<AppState>) {
    let store = RecordStore::open(dir.path().join("records.jsonl")).unwrap();
    let mut state = AppState::new(store, RecordSchema::default());
    if let Some(b) = bundle {
        state = state.with_bundle(b, None);
    }
    let state = Arc::new(state);
    (router(state.clone(), None), state)
}

#[tokio::test]
async fn predict_returns_consistent_label_and_score() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app_with(Some(small_bundle("rusboost", 3)), &dir);
    let (status, body) = call(
        &app,
        "POST",
        "/api/v1/predict",
        Some(json!({ "features": form_record() })),
    )
    .await;
    assert_eq!(status, StatusCode::OK, "{body}");
    let score = body["score"].as_f64().unwrap();
    let threshold = body["threshold"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&score));
    assert_eq!(body["label"] == "Yes", score >= threshold);
    assert_eq!(body["model"]["algorithm"], "rusboost");
}

#[tokio::test]
async fn score_at_threshold_is_positive() {
    let dir = tempfile::tempdir().unwrap();
    let mut bundle = small_bundle("decision_tree", 4);
    let record: aefi::dataset::RawRecord =
        serde_json::from_value(Value::Object(form_record())).unwrap();
    bundle.metadata.threshold = bundle.score_record(&record).unwrap();
    let (app, _) = app_with(Some(bundle), &dir);
    let (status, body) = call(
        &app,
        "POST",
        "/api/v1/predict",
        Some(json!({ "features": form_record() })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["score"], body["threshold"]);
    assert_eq!(body["label"], "Yes");
}

#[tokio::test]
async fn invalid_fields_are_named_in_422() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app_with(Some(small_bundle("decision_tree", 5)), &dir);
    let mut missing = form_record();
    missing.remove("gender");
    let (status, body) = call(
        &app,
        "POST",
        "/api/v1/predict",
        Some(json!({ "features": missing })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let fields: Vec<&str> = body["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["field"].as_str().unwrap())
        .collect();
    assert_eq!(fields, ["gender"]);

    let mut bad = form_record();
    bad.insert("fever".into(), "Scorching".into());
    bad.insert("vaccine_name".into(), "Unobtainium".into());
    let (status, body) = call(
        &app,
        "POST",
        "/api/v1/records",
        Some(json!({ "features": bad, "outcome": "No" })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let fields: BTreeSet<&str> = body["fields"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["field"].as_str().unwrap())
        .collect();
    assert_eq!(fields, BTreeSet::from(["fever", "vaccine_name"]));

    let (status, _) = call(
        &app,
        "POST",
        "/api/v1/records",
        Some(json!({ "features": form_record(), "outcome": "Maybe" })),
    )
    .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
    let (status, _) = call(
        &app,
        "POST",
        "/api/v1/predict",
        Some(json!("not an object")),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn no_model_means_503() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app_with(None, &dir);
    let (status, _) = call(
        &app,
        "POST",
        "/api/v1/predict",
        Some(json!({ "features": form_record() })),
    )
    .await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    let (status, _) = call(&app, "GET", "/api/v1/model", None).await;
    assert_eq!(status, StatusCode::SERVICE_UNAVAILABLE);
    // records and schema work without a model
    let (status, body) = call(&app, "GET", "/api/v1/schema", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["features"].as_array().unwrap().len(), 12);
    let (status, body) = call(
        &app,
        "POST",
        "/api/v1/records",
        Some(json!({ "features": form_record() })),
    )
    .await;
    assert_eq!((status, body), (StatusCode::CREATED, json!({ "id": 1 })));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn concurrent_appends_get_consecutive_ids() {
    let dir = tempfile::tempdir().unwrap();
    let (app, state) = app_with(None, &dir);
    let tasks: Vec<_> = (0..100)
        .map(|i| {
            let app = app.clone();
            let outcome = if i % 3 == 0 {
                json!("Yes")
            } else {
                Value::Null
            };
            tokio::spawn(async move {
                call(
                    &app,
                    "POST",
                    "/api/v1/records",
                    Some(json!({ "features": form_record(), "outcome": outcome })),
                )
                .await
            })
        })
        .collect();
    let mut ids = Vec::new();
    for t in tasks {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::CREATED);
        ids.push(body["id"].as_u64().unwrap());
    }
    ids.sort_unstable();
    assert_eq!(ids, (1..=100).collect::<Vec<u64>>());

    let text = std::fs::read_to_string(state.store().path()).unwrap();
    let file_ids: Vec<u64> = text
        .lines()
        .map(|l| {
            serde_json::from_str::<Value>(l).unwrap()["id"]
                .as_u64()
                .unwrap()
        })
        .collect();
    assert_eq!(file_ids.len(), 100);
    assert!(file_ids.windows(2).all(|w| w[0] < w[1]));
}

#[tokio::test]
async fn pages_are_newest_first() {
    let dir = tempfile::tempdir().unwrap();
    let (app, _) = app_with(None, &dir);
    let (_, body) = call(&app, "GET", "/api/v1/records", None).await;
    assert_eq!(body, json!({ "records": [], "total": 0 }));
    for _ in 0..5 {
        call(
            &app,
            "POST",
            "/api/v1/records",
            Some(json!({ "features": form_record(), "outcome": "No" })),
        )
        .await;
    }
    let (status, body) = call(&app, "GET", "/api/v1/records?limit=2", None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body["total"], 5);
    let ids: Vec<u64> = body["records"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, [5, 4]);
    assert_eq!(body["records"][0]["record"]["hospitalization"], "No");
    let (_, body) = call(&app, "GET", "/api/v1/records?limit=2&offset=4", None).await;
    assert_eq!(body["records"][0]["id"], 1);
    let (_, body) = call(&app, "GET", "/api/v1/records?offset=9", None).await;
    assert_eq!(body["records"], json!([]));
}

#[tokio::test]
async fn appends_never_rewrite_the_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let (app, state) = app_with(Some(small_bundle("decision_tree", 6)), &dir);
    for _ in 0..3 {
        call(
            &app,
            "POST",
            "/api/v1/records",
            Some(json!({ "features": form_record(), "outcome": "Yes" })),
        )
        .await;
    }
    let before = std::fs::read(state.store().path()).unwrap();
    for _ in 0..3 {
        call(
            &app,
            "POST",
            "/api/v1/records",
            Some(json!({ "features": form_record() })),
        )
        .await;
        call(
            &app,
            "POST",
            "/api/v1/predict",
            Some(json!({ "features": form_record() })),
        )
        .await;
    }
    let after = std::fs::read(state.store().path()).unwrap();
    assert!(after.starts_with(&before));
    assert_eq!(after.iter().filter(|&&b| b == b'\n').count(), 6);

    // a predict alone leaves the file untouched
    call(
        &app,
        "POST",
        "/api/v1/predict",
        Some(json!({ "features": form_record() })),
    )
    .await;
    assert_eq!(std::fs::read(state.store().path()).unwrap(), after);

    // a reopened store continues the sequence
    drop(app);
    drop(state);
    let store = RecordStore::open(dir.path().join("records.jsonl")).unwrap();
    let record = serde_json::from_value(Value::Object(form_record())).unwrap();
    assert_eq!(
        store.append(record, "2024-01-01T00:00:00Z".into()).unwrap(),
        7
    );
}

#[tokio::test(flavor = "multi_thread", worker_threads = 4)]
async fn reload_swaps_atomically_and_isolates_failures() {
    let dir = tempfile::tempdir().unwrap();
    let a = small_bundle("decision_tree", 7);
    let b = small_bundle("logistic_regression", 8);
    let record: aefi::dataset::RawRecord =
        serde_json::from_value(Value::Object(form_record())).unwrap();
    let (score_a, score_b) = (
        a.score_record(&record).unwrap(),
        b.score_record(&record).unwrap(),
    );
    assert_ne!(score_a, score_b);
    let path_a = dir.path().join("a.json");
    let path_b = dir.path().join("b.json");
    save_bundle(&a, &path_a).unwrap();
    save_bundle(&b, &path_b).unwrap();
    let (app, _) = app_with(Some(a.clone()), &dir);
    let predict = || {
        call(
            &app,
            "POST",
            "/api/v1/predict",
            Some(json!({ "features": form_record() })),
        )
    };

    // same bundle: metadata unchanged
    let (_, before) = call(&app, "GET", "/api/v1/model", None).await;
    let (status, meta) = call(
        &app,
        "POST",
        "/api/v1/model/reload",
        Some(json!({ "path": path_a })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(meta, before);

    // corrupt file and bumped version: 400, old model keeps answering
    let corrupt = dir.path().join("corrupt.json");
    std::fs::write(&corrupt, "{\"format_version\": 1, \"schema\": ").unwrap();
    let (status, _) = call(
        &app,
        "POST",
        "/api/v1/model/reload",
        Some(json!({ "path": corrupt })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    let mut v: Value = serde_json::from_slice(&std::fs::read(&path_a).unwrap()).unwrap();
    v["format_version"] = 999.into();
    let bumped = dir.path().join("bumped.json");
    std::fs::write(&bumped, v.to_string()).unwrap();
    let (status, body) = call(
        &app,
        "POST",
        "/api/v1/model/reload",
        Some(json!({ "path": bumped })),
    )
    .await;
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert!(body["error"].as_str().unwrap().contains("999"));
    let (_, body) = predict().await;
    assert_eq!(body["score"].as_f64().unwrap(), score_a);

    // interleave predictions with a swap to the other bundle
    let inflight: Vec<_> = (0..40)
        .map(|_| {
            let app = app.clone();
            tokio::spawn(async move {
                call(
                    &app,
                    "POST",
                    "/api/v1/predict",
                    Some(json!({ "features": form_record() })),
                )
                .await
            })
        })
        .collect();
    let (status, meta) = call(
        &app,
        "POST",
        "/api/v1/model/reload",
        Some(json!({ "path": path_b })),
    )
    .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(meta["algorithm"], "logistic_regression");
    for t in inflight {
        let (status, body) = t.await.unwrap();
        assert_eq!(status, StatusCode::OK);
        let s = body["score"].as_f64().unwrap();
        let expected = if body["model"]["algorithm"] == "decision_tree" {
            score_a
        } else {
            score_b
        };
        assert_eq!(
            s, expected,
            "score and model metadata come from one snapshot"
        );
    }
    for _ in 0..10 {
        let (_, body) = predict().await;
        assert_eq!(body["score"].as_f64().unwrap(), score_b);
    }
}
