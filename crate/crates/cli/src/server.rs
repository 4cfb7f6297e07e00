//! In-memory game sessions over HTTP/JSON.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex};

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use tfnp_core::game::{
    apply_partition, apply_pick, engine_pick, new_game, partition_from_instance, GameError, GameState, Phase,
    Player, Roles, Seat,
};
use tfnp_core::gen::{gen_one, GenKind};
use tfnp_core::model::{Element, FiniteSet};
use tfnp_core::problems::{LongChoiceInstance, ProblemInstance};

/// Who sits at the board for a human; `none` is engine against engine.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HumanSeat {
    Player1,
    #[default]
    Player2,
    Both,
    None,
}

impl HumanSeat {
    fn roles(self) -> Roles {
        let seat = |human| if human { Seat::Human } else { Seat::Engine };
        Roles {
            player1: seat(matches!(self, HumanSeat::Player1 | HumanSeat::Both)),
            player2: seat(matches!(self, HumanSeat::Player2 | HumanSeat::Both)),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub n: u32,
    #[serde(default)]
    pub human_seat: HumanSeat,
    /// Long Choice instance driving an engine Player 2; a seeded random one otherwise.
    #[serde(default)]
    pub instance: Option<ProblemInstance>,
    #[serde(default)]
    pub seed: u64,
    /// Engine seats answer immediately after each human move.
    #[serde(default = "yes")]
    pub auto: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PickBody {
    pub stone: Element,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionBody {
    pub group0: Vec<Element>,
}

#[derive(Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LegalMoves {
    /// Any stone of either pending group (or of `alive` before the first split).
    Pick { player: Player, stones: Vec<Element> },
    /// Any subset of `alive` as group 0.
    Partition { player: Player, alive: Vec<Element> },
    None,
}

fn legal_moves(s: &GameState) -> LegalMoves {
    match s.phase {
        Phase::AwaitingPick => LegalMoves::Pick {
            player: Player::Player1,
            stones: s.alive.to_vec(),
        },
        Phase::AwaitingPartition => LegalMoves::Partition {
            player: Player::Player2,
            alive: s.alive.to_vec(),
        },
        Phase::Finished => LegalMoves::None,
    }
}

struct Session {
    state: GameState,
    partitioner: LongChoiceInstance,
    auto: bool,
}

impl Session {
    fn engine_move(&mut self) -> Result<(), GameError> {
        let s = &self.state;
        let player = s.to_move().ok_or(GameError::WrongPhase {
            expected: Phase::AwaitingPick,
            found: Phase::Finished,
        })?;
        if s.seat(player) != Seat::Engine {
            return Err(GameError::WrongSeat(player));
        }
        self.state = match player {
            Player::Player1 => apply_pick(s, engine_pick(s)?)?,
            Player::Player2 => apply_partition(s, &partition_from_instance(s, &self.partitioner)?)?,
        };
        Ok(())
    }

    fn settle(&mut self) {
        if !self.auto {
            return;
        }
        while let Some(p) = self.state.to_move() {
            if self.state.seat(p) != Seat::Engine || self.engine_move().is_err() {
                break;
            }
        }
    }

    fn human(&self, p: Player) -> Result<(), GameError> {
        match self.state.seat(p) {
            Seat::Human => Ok(()),
            Seat::Engine => Err(GameError::WrongSeat(p)),
        }
    }

    fn view(&self, id: &str) -> Value {
        json!({ "id": id, "state": self.state, "legal_moves": legal_moves(&self.state) })
    }
}

#[derive(Clone, Default)]
pub struct AppState {
    sessions: Arc<Mutex<HashMap<String, Arc<Mutex<Session>>>>>,
    next: Arc<AtomicU64>,
}

impl AppState {
    fn get(&self, id: &str) -> Result<Arc<Mutex<Session>>, ApiError> {
        self.sessions
            .lock()
            .expect("session map poisoned")
            .get(id)
            .cloned()
            .ok_or_else(|| ApiError::NotFound(id.to_string()))
    }
}

#[derive(Debug)]
pub enum ApiError {
    NotFound(String),
    BadRequest(String),
    Game(GameError),
}

impl From<GameError> for ApiError {
    fn from(e: GameError) -> Self {
        ApiError::Game(e)
    }
}

impl From<JsonRejection> for ApiError {
    fn from(e: JsonRejection) -> Self {
        ApiError::BadRequest(e.body_text())
    }
}

pub fn game_error_code(e: &GameError) -> &'static str {
    match e {
        GameError::NOutOfRange(_) => "n_out_of_range",
        GameError::WrongPhase { .. } => "wrong_phase",
        GameError::NotAlive(_) => "not_alive",
        GameError::NotSubset(_) => "not_subset",
        GameError::WrongSeat(_) => "wrong_seat",
        GameError::SizeMismatch { .. } => "size_mismatch",
        GameError::NoStone => "no_stone",
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let (status, code, message) = match self {
            ApiError::NotFound(id) => (StatusCode::NOT_FOUND, "session_not_found", format!("no session {id}")),
            ApiError::BadRequest(m) => (StatusCode::BAD_REQUEST, "bad_request", m),
            ApiError::Game(e @ (GameError::NOutOfRange(_) | GameError::SizeMismatch { .. })) => {
                (StatusCode::BAD_REQUEST, game_error_code(&e), e.to_string())
            }
            ApiError::Game(e) => (StatusCode::CONFLICT, game_error_code(&e), e.to_string()),
        };
        (status, Json(json!({ "error": code, "message": message }))).into_response()
    }
}

type ApiResult = Result<Response, ApiError>;

async fn create(State(app): State<AppState>, body: Result<Json<CreateSession>, JsonRejection>) -> ApiResult {
    let Json(req) = body?;
    let state = new_game(req.n, req.human_seat.roles())?;
    let partitioner = match req.instance {
        Some(ProblemInstance::LongChoice(lc)) => lc,
        Some(other) => return Err(ApiError::BadRequest(format!("expected a long_choice instance, got {}", other.kind()))),
        None => match gen_one(GenKind::LongChoiceRandom, req.n, None, req.seed) {
            Ok(ProblemInstance::LongChoice(lc)) => lc,
            Ok(_) => unreachable!("long_choice_random yields Long Choice"),
            Err(e) => return Err(ApiError::BadRequest(e.to_string())),
        },
    };
    if partitioner.n() != req.n {
        return Err(GameError::SizeMismatch {
            expected: req.n,
            found: partitioner.n(),
        }
        .into());
    }
    let mut session = Session {
        state,
        partitioner,
        auto: req.auto,
    };
    session.settle();
    let id = format!("s{}", app.next.fetch_add(1, Ordering::Relaxed) + 1);
    let view = session.view(&id);
    app.sessions
        .lock()
        .expect("session map poisoned")
        .insert(id, Arc::new(Mutex::new(session)));
    Ok((StatusCode::CREATED, Json(view)).into_response())
}

fn mutate(app: &AppState, id: &str, f: impl FnOnce(&mut Session) -> Result<(), GameError>) -> ApiResult {
    let cell = app.get(id)?;
    let mut s = cell.lock().expect("session poisoned");
    f(&mut s)?;
    s.settle();
    Ok(Json(s.view(id)).into_response())
}

async fn fetch(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let cell = app.get(&id)?;
    let s = cell.lock().expect("session poisoned");
    Ok(Json(s.view(&id)).into_response())
}

async fn pick(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PickBody>, JsonRejection>,
) -> ApiResult {
    let Json(b) = body?;
    mutate(&app, &id, |s| {
        s.human(Player::Player1)?;
        s.state = apply_pick(&s.state, b.stone)?;
        Ok(())
    })
}

async fn partition(
    State(app): State<AppState>,
    Path(id): Path<String>,
    body: Result<Json<PartitionBody>, JsonRejection>,
) -> ApiResult {
    let Json(b) = body?;
    mutate(&app, &id, |s| {
        s.human(Player::Player2)?;
        let n = s.state.n;
        let g0 = FiniteSet::from_elements(n, b.group0.iter().copied())
            .map_err(|_| GameError::NotSubset(*b.group0.iter().find(|x| !x.in_domain(n)).expect("out of domain")))?;
        s.state = apply_partition(&s.state, &g0)?;
        Ok(())
    })
}

async fn engine_step(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    let cell = app.get(&id)?;
    let mut s = cell.lock().expect("session poisoned");
    s.engine_move()?;
    Ok(Json(s.view(&id)).into_response())
}

async fn delete(State(app): State<AppState>, Path(id): Path<String>) -> ApiResult {
    match app.sessions.lock().expect("session map poisoned").remove(&id) {
        Some(_) => Ok(StatusCode::NO_CONTENT.into_response()),
        None => Err(ApiError::NotFound(id)),
    }
}

pub fn router() -> Router {
    Router::new()
        .route("/api/sessions", post(create))
        .route("/api/sessions/{id}", get(fetch).delete(delete))
        .route("/api/sessions/{id}/pick", post(pick))
        .route("/api/sessions/{id}/partition", post(partition))
        .route("/api/sessions/{id}/engine-step", post(engine_step))
        .with_state(AppState::default())
}

pub async fn serve(listener: tokio::net::TcpListener) -> std::io::Result<()> {
    axum::serve(listener, router()).await
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seats_map_to_roles() {
        assert_eq!(HumanSeat::None.roles(), Roles { player1: Seat::Engine, player2: Seat::Engine });
        assert_eq!(HumanSeat::Player2.roles(), Roles { player1: Seat::Engine, player2: Seat::Human });
        assert_eq!(HumanSeat::Both.roles(), Roles::default());
    }

    #[test]
    fn legal_moves_follow_the_phase() {
        let s = new_game(2, Roles::default()).unwrap();
        assert!(matches!(legal_moves(&s), LegalMoves::Pick { ref stones, .. } if stones.len() == 4));
        let s = apply_pick(&s, Element::from_code(0)).unwrap();
        assert!(matches!(legal_moves(&s), LegalMoves::Partition { ref alive, .. } if alive.len() == 3));
    }

    #[test]
    fn engine_sessions_settle_to_a_finish() {
        let ProblemInstance::LongChoice(lc) = gen_one(GenKind::LongChoiceRandom, 3, None, 1).unwrap() else {
            unreachable!()
        };
        let mut s = Session {
            state: new_game(3, HumanSeat::None.roles()).unwrap(),
            partitioner: lc,
            auto: true,
        };
        s.settle();
        assert_eq!(s.state.phase, Phase::Finished);
        assert!(matches!(s.engine_move(), Err(GameError::WrongPhase { .. })));
    }

    #[test]
    fn conflicts_and_request_errors_get_distinct_statuses() {
        let status = |e| ApiError::Game(e).into_response().status();
        assert_eq!(status(GameError::NoStone), StatusCode::CONFLICT);
        assert_eq!(status(GameError::NOutOfRange(9)), StatusCode::BAD_REQUEST);
        assert_eq!(ApiError::NotFound("s1".into()).into_response().status(), StatusCode::NOT_FOUND);
    }
}
