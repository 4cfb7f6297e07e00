use axum::body::Body;
use axum::http::{Method, Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use serde_json::{json, Value};
use tower::ServiceExt;

use tfnp_core::game::{self, GameState, Phase, Player};
use tfnp_core::gen::{gen_one, GenKind};
use tfnp_core::problems::{verify_solution, ProblemInstance, SolutionCertificate};
use tfnp_lab::server::router;

async fn call(app: &Router, method: Method, uri: &str, body: Option<Value>) -> (StatusCode, Value) {
    let req = Request::builder().method(method).uri(uri).header("content-type", "application/json");
    let req = req
        .body(body.map_or_else(Body::empty, |b| Body::from(b.to_string())))
        .unwrap();
    let resp = app.clone().oneshot(req).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    let v = if bytes.is_empty() { Value::Null } else { serde_json::from_slice(&bytes).unwrap() };
    (status, v)
}

async fn create(app: &Router, body: Value) -> (String, Value) {
    let (s, v) = call(app, Method::POST, "/api/sessions", Some(body)).await;
    assert_eq!(s, StatusCode::CREATED, "{v}");
    (v["id"].as_str().unwrap().to_string(), v)
}

fn state(v: &Value) -> GameState {
    serde_json::from_value(v["state"].clone()).unwrap()
}

#[tokio::test]
async fn create_returns_201_with_initial_state() {
    let app = router();
    let (id, v) = create(&app, json!({"n": 2, "human_seat": "player2"})).await;
    // the engine opens as Player 1
    let s = state(&v);
    assert_eq!(s.n, 2);
    assert_eq!(s.picks.len(), 1);
    assert_eq!(s.phase, Phase::AwaitingPartition);
    let (code, got) = call(&app, Method::GET, &format!("/api/sessions/{id}"), None).await;
    assert_eq!(code, StatusCode::OK);
    assert_eq!(got["state"], v["state"]);
    assert_eq!(got["legal_moves"]["kind"], "partition");
}

#[tokio::test]
async fn fresh_human_session_shows_every_stone() {
    let app = router();
    let (_, v) = create(&app, json!({"n": 2, "human_seat": "both"})).await;
    assert_eq!(v["state"]["phase"], "awaiting_pick");
    assert_eq!(state(&v).alive.len(), 4);
    assert_eq!(v["legal_moves"]["stones"], json!([1, 2, 3, 4]));
}

#[tokio::test]
async fn illegal_moves_are_409_with_an_error_code() {
    let app = router();
    let (id, _) = create(&app, json!({"n": 2, "human_seat": "both"})).await;
    let pick = format!("/api/sessions/{id}/pick");
    let (s, v) = call(&app, Method::POST, &pick, Some(json!({"stone": 1}))).await;
    assert_eq!(s, StatusCode::OK);
    let (s, v2) = call(&app, Method::POST, &pick, Some(json!({"stone": 2}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v2["error"], "wrong_phase");
    let part = format!("/api/sessions/{id}/partition");
    let (s, v3) = call(&app, Method::POST, &part, Some(json!({"group0": [1]}))).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v3["error"], "not_subset");
    // nothing changed
    let (_, now) = call(&app, Method::GET, &format!("/api/sessions/{id}"), None).await;
    assert_eq!(now["state"], v["state"]);
}

#[tokio::test]
async fn human_moves_on_an_engine_seat_are_rejected() {
    let app = router();
    let (id, _) = create(&app, json!({"n": 3, "human_seat": "player2"})).await;
    let (s, v) = call(&app, Method::POST, &format!("/api/sessions/{id}/engine-step"), None).await;
    assert_eq!(s, StatusCode::CONFLICT);
    assert_eq!(v["error"], "wrong_seat");
    let (s, v) = call(&app, Method::POST, &format!("/api/sessions/{id}/pick"), Some(json!({"stone": 2}))).await;
    assert_eq!(s, StatusCode::CONFLICT, "{v}");
}

#[tokio::test]
async fn bad_bodies_and_sizes_are_400() {
    let app = router();
    for body in [json!({"n": 1}), json!({"n": 9}), json!({"n": "two"}), json!({"n": 2, "human_seat": "nobody"})] {
        let (s, v) = call(&app, Method::POST, "/api/sessions", Some(body.clone())).await;
        assert_eq!(s, StatusCode::BAD_REQUEST, "{body} → {v}");
    }
    let (id, _) = create(&app, json!({"n": 2, "human_seat": "both"})).await;
    let (s, _) = call(&app, Method::POST, &format!("/api/sessions/{id}/pick"), Some(json!({"stone": 0}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
}

#[tokio::test]
async fn unknown_and_deleted_sessions_are_404() {
    let app = router();
    let (s, v) = call(&app, Method::GET, "/api/sessions/nope", None).await;
    assert_eq!(s, StatusCode::NOT_FOUND);
    assert_eq!(v["error"], "session_not_found");
    let (id, _) = create(&app, json!({"n": 2})).await;
    let uri = format!("/api/sessions/{id}");
    assert_eq!(call(&app, Method::DELETE, &uri, None).await.0, StatusCode::NO_CONTENT);
    assert_eq!(call(&app, Method::GET, &uri, None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, Method::DELETE, &uri, None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn engine_against_engine_plays_to_a_player1_win() {
    let app = router();
    for n in 2..=5 {
        for seed in 0..5 {
            let (_, v) = create(&app, json!({"n": n, "human_seat": "none", "seed": seed})).await;
            let s = state(&v);
            assert_eq!(s.phase, Phase::Finished);
            assert_eq!(s.winner, Some(Player::Player1));
            assert_eq!(s.picks.len(), n as usize + 1);
            assert_eq!(v["legal_moves"]["kind"], "none");
            // the partitions came from the seeded instance, so the picks solve it
            let inst = gen_one(GenKind::LongChoiceRandom, n, None, seed).unwrap();
            let sol = SolutionCertificate::LongChoiceSequence { sequence: s.picks.clone() };
            assert!(verify_solution(&inst, &sol).unwrap().is_accept());
        }
    }
}

#[tokio::test]
async fn manual_engine_steps_match_auto_play() {
    let app = router();
    let (id, v) = create(&app, json!({"n": 3, "human_seat": "none", "seed": 4, "auto": false})).await;
    assert_eq!(state(&v).picks.len(), 0);
    let step = format!("/api/sessions/{id}/engine-step");
    let mut last = v;
    loop {
        let (s, v) = call(&app, Method::POST, &step, None).await;
        if s == StatusCode::CONFLICT {
            assert_eq!(v["error"], "wrong_phase");
            break;
        }
        assert_eq!(s, StatusCode::OK);
        last = v;
    }
    let (_, auto) = create(&app, json!({"n": 3, "human_seat": "none", "seed": 4})).await;
    assert_eq!(last["state"], auto["state"]);
}

#[tokio::test]
async fn scripted_player2_always_loses_to_the_engine() {
    let app = router();
    for script in 0u64..20 {
        let (id, mut v) = create(&app, json!({"n": 3, "human_seat": "player2"})).await;
        let mut r = script;
        while v["state"]["phase"] == "awaiting_partition" {
            let alive: Vec<u64> = v["legal_moves"]["alive"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
            let group0: Vec<u64> = alive.iter().copied().filter(|x| (r >> (x % 7)) & 1 == 1).collect();
            r = r.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let (s, next) = call(&app, Method::POST, &format!("/api/sessions/{id}/partition"), Some(json!({"group0": group0}))).await;
            assert_eq!(s, StatusCode::OK, "{next}");
            v = next;
        }
        let s = state(&v);
        assert_eq!(s.winner, Some(Player::Player1));
        // the server payload replays from its own transcript
        let again = game::replay(s.n, s.roles, &s.transcript).unwrap();
        assert_eq!(serde_json::to_value(&again).unwrap(), v["state"]);
    }
}

#[tokio::test]
async fn uploaded_instance_drives_player2() {
    let app = router();
    let ProblemInstance::LongChoice(lc) = gen_one(GenKind::LongChoiceRandom, 3, None, 77).unwrap() else { unreachable!() };
    let (_, v) = create(&app, json!({"n": 3, "human_seat": "none", "instance": ProblemInstance::LongChoice(lc.clone())})).await;
    let expected = game::playout(&lc).unwrap();
    assert_eq!(state(&v), expected);

    let pigeon = gen_one(GenKind::PigeonRandom, 3, None, 0).unwrap();
    let (s, _) = call(&app, Method::POST, "/api/sessions", Some(json!({"n": 3, "instance": pigeon}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    let (s, v) = call(&app, Method::POST, "/api/sessions", Some(json!({"n": 2, "instance": ProblemInstance::LongChoice(lc)}))).await;
    assert_eq!(s, StatusCode::BAD_REQUEST);
    assert_eq!(v["error"], "size_mismatch");
}

#[tokio::test]
async fn concurrent_sessions_stay_separate() {
    let app = router();
    let (a, _) = create(&app, json!({"n": 2, "human_seat": "both"})).await;
    let (b, _) = create(&app, json!({"n": 2, "human_seat": "both"})).await;
    assert_ne!(a, b);
    let (ua, ub) = (format!("/api/sessions/{a}/pick"), format!("/api/sessions/{b}/pick"));
    let (ta, tb) = tokio::join!(
        call(&app, Method::POST, &ua, Some(json!({"stone": 1}))),
        call(&app, Method::POST, &ub, Some(json!({"stone": 4}))),
    );
    assert_eq!(ta.1["state"]["picks"], json!([1]));
    assert_eq!(tb.1["state"]["picks"], json!([4]));
}
