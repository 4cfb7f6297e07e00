//! The interactive bipartition stone-picking game.
//!
//! Player 1 picks a stone, Player 2 splits the remaining stones into two groups, Player 1 picks
//! from one group and the other group is discarded. Player 1 wins after `n + 1` picks.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{domain_size, Element, FiniteSet};
use crate::problems::LongChoiceInstance;

pub const MIN_GAME_N: u32 = 2;
pub const MAX_GAME_N: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("games are played with {MIN_GAME_N} ≤ n ≤ {MAX_GAME_N}, got {0}")]
    NOutOfRange(u32),
    #[error("expected phase {expected:?}, game is in {found:?}")]
    WrongPhase { expected: Phase, found: Phase },
    #[error("stone {0} is not in play")]
    NotAlive(Element),
    #[error("group 0 contains {0}, which is not in play")]
    NotSubset(Element),
    #[error("{0:?} is seated by a human")]
    WrongSeat(Player),
    #[error("instance has n = {found}, game has n = {expected}")]
    SizeMismatch { expected: u32, found: u32 },
    #[error("no stone left to pick")]
    NoStone,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    AwaitingPick,
    AwaitingPartition,
    Finished,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Player {
    Player1,
    Player2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Seat {
    #[default]
    Human,
    Engine,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roles {
    pub player1: Seat,
    pub player2: Seat,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "move", rename_all = "snake_case")]
pub enum Move {
    Pick { stone: Element },
    Partition { group0: Vec<Element> },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub winner: Player,
    pub transcript: Vec<Move>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GameState {
    pub n: u32,
    /// Number of completed partitions.
    pub round: usize,
    pub alive: FiniteSet,
    pub picks: Vec<Element>,
    pub discarded: FiniteSet,
    pub pending_partition: Option<(FiniteSet, FiniteSet)>,
    pub phase: Phase,
    pub roles: Roles,
    pub winner: Option<Player>,
    pub transcript: Vec<Move>,
}

impl GameState {
    pub fn outcome(&self) -> Option<GameOutcome> {
        self.winner.map(|winner| GameOutcome {
            winner,
            transcript: self.transcript.clone(),
        })
    }

    /// Whose move it is, if the game is still running.
    pub fn to_move(&self) -> Option<Player> {
        match self.phase {
            Phase::AwaitingPick => Some(Player::Player1),
            Phase::AwaitingPartition => Some(Player::Player2),
            Phase::Finished => None,
        }
    }

    pub fn seat(&self, p: Player) -> Seat {
        match p {
            Player::Player1 => self.roles.player1,
            Player::Player2 => self.roles.player2,
        }
    }

    fn expect_phase(&self, expected: Phase) -> Result<(), GameError> {
        if self.phase == expected {
            Ok(())
        } else {
            Err(GameError::WrongPhase {
                expected,
                found: self.phase,
            })
        }
    }

    fn finish(&mut self, winner: Player) {
        self.phase = Phase::Finished;
        self.winner = Some(winner);
    }
}

pub fn new_game(n: u32, roles: Roles) -> Result<GameState, GameError> {
    if !(MIN_GAME_N..=MAX_GAME_N).contains(&n) {
        return Err(GameError::NOutOfRange(n));
    }
    Ok(GameState {
        n,
        round: 0,
        alive: FiniteSet::full(n),
        picks: Vec::new(),
        discarded: FiniteSet::empty(n),
        pending_partition: None,
        phase: Phase::AwaitingPick,
        roles,
        winner: None,
        transcript: Vec::new(),
    })
}

pub fn apply_pick(state: &GameState, stone: Element) -> Result<GameState, GameError> {
    state.expect_phase(Phase::AwaitingPick)?;
    if !state.alive.contains(stone) {
        return Err(GameError::NotAlive(stone));
    }
    let mut s = state.clone();
    if let Some((g0, g1)) = s.pending_partition.take() {
        let (kept, dropped) = if g0.contains(stone) { (g0, g1) } else { (g1, g0) };
        for x in dropped.iter() {
            s.discarded.insert(x);
        }
        s.alive = kept;
    }
    s.alive.remove(stone);
    s.picks.push(stone);
    s.transcript.push(Move::Pick { stone });
    if s.picks.len() == s.n as usize + 1 {
        s.finish(Player::Player1);
    } else {
        s.phase = Phase::AwaitingPartition;
    }
    Ok(s)
}

pub fn apply_partition(state: &GameState, group0: &FiniteSet) -> Result<GameState, GameError> {
    state.expect_phase(Phase::AwaitingPartition)?;
    if let Some(x) = group0.iter().find(|&x| !state.alive.contains(x)) {
        return Err(GameError::NotSubset(x));
    }
    let mut s = state.clone();
    let group1 = s.alive.difference(group0);
    s.transcript.push(Move::Partition {
        group0: group0.to_vec(),
    });
    s.round += 1;
    if s.alive.is_empty() {
        s.finish(Player::Player2);
        return Ok(s);
    }
    s.pending_partition = Some((group0.clone(), group1));
    s.phase = Phase::AwaitingPick;
    Ok(s)
}

/// Minimum of the larger pending group, group 0 on ties; the minimum of `alive` before any partition.
pub fn larger_group_pick(state: &GameState) -> Result<Element, GameError> {
    state.expect_phase(Phase::AwaitingPick)?;
    let group = match &state.pending_partition {
        Some((g0, g1)) if g1.len() > g0.len() => g1,
        Some((g0, _)) => g0,
        None => &state.alive,
    };
    group.min().ok_or(GameError::NoStone)
}

/// The engine's move when it holds the Player 1 seat.
pub fn engine_pick(state: &GameState) -> Result<Element, GameError> {
    if state.roles.player1 != Seat::Engine {
        return Err(GameError::WrongSeat(Player::Player1));
    }
    larger_group_pick(state)
}

/// `{x ∈ alive : P_i(a_0 … a_i, x) = 0}` for round `i ≤ n − 2`; the whole of `alive` afterwards.
pub fn partition_from_instance(state: &GameState, inst: &LongChoiceInstance) -> Result<FiniteSet, GameError> {
    state.expect_phase(Phase::AwaitingPartition)?;
    if inst.n() != state.n {
        return Err(GameError::SizeMismatch {
            expected: state.n,
            found: inst.n(),
        });
    }
    let i = state.picks.len() - 1;
    if i + 2 > state.n as usize {
        return Ok(state.alive.clone());
    }
    let zeros = state.alive.iter().filter(|&x| !inst.eval_predicate(i, &state.picks, x));
    Ok(FiniteSet::from_elements(state.n, zeros).expect("alive stones are in the domain"))
}

/// Rebuilds a game from its transcript.
pub fn replay(n: u32, roles: Roles, moves: &[Move]) -> Result<GameState, GameError> {
    let mut s = new_game(n, roles)?;
    for m in moves {
        s = match m {
            Move::Pick { stone } => apply_pick(&s, *stone)?,
            Move::Partition { group0 } => {
                let g = FiniteSet::from_elements(n, group0.iter().copied()).map_err(|_| {
                    GameError::NotSubset(*group0.iter().find(|x| !x.in_domain(n)).expect("an out-of-domain stone"))
                })?;
                apply_partition(&s, &g)?
            }
        };
    }
    Ok(s)
}

/// Engine-vs-instance playout; the picks are a Long Choice solution.
pub fn playout(inst: &LongChoiceInstance) -> Result<GameState, GameError> {
    let roles = Roles {
        player1: Seat::Engine,
        player2: Seat::Engine,
    };
    let mut s = new_game(inst.n(), roles)?;
    while s.phase != Phase::Finished {
        s = match s.phase {
            Phase::AwaitingPick => apply_pick(&s, engine_pick(&s)?)?,
            _ => apply_partition(&s, &partition_from_instance(&s, inst)?)?,
        };
    }
    Ok(s)
}

/// Searches every Player 2 partition sequence, listing each subset of `alive`; returns a
/// transcript that beats the larger-group strategy, if one exists. Feasible for `n ≤ 3`.
pub fn adversary_search_literal(n: u32) -> Result<Option<Vec<Move>>, GameError> {
    fn go(s: &GameState) -> Option<Vec<Move>> {
        match s.phase {
            Phase::Finished => (s.winner == Some(Player::Player2)).then(|| s.transcript.clone()),
            Phase::AwaitingPick => match larger_group_pick(s) {
                Ok(x) => go(&apply_pick(s, x).expect("engine picks a live stone")),
                Err(_) => Some(s.transcript.clone()),
            },
            Phase::AwaitingPartition => {
                let alive = s.alive.to_vec();
                (0u64..1 << alive.len()).find_map(|mask| {
                    let g0 = alive.iter().enumerate().filter(|(t, _)| mask >> t & 1 == 1).map(|(_, &x)| x);
                    let g0 = FiniteSet::from_elements(s.n, g0).expect("subset of alive");
                    go(&apply_partition(s, &g0).expect("subset of alive"))
                })
            }
        }
    }
    let s = new_game(n, Roles::default())?;
    Ok(go(&s))
}

/// The same search keyed on group sizes: the larger-group strategy only sees `|U^0|` and `|U^1|`,
/// so one representative split per size covers every partition. Returns the sizes of group 0
/// along a defeating line, if any.
pub fn adversary_search_by_size(n: u32) -> Result<Option<Vec<usize>>, GameError> {
    if !(MIN_GAME_N..=MAX_GAME_N).contains(&n) {
        return Err(GameError::NOutOfRange(n));
    }
    // (stones alive before the partition, picks made) → defeating split sizes
    fn go(alive: usize, picks: usize, n: usize, memo: &mut HashMap<(usize, usize), Option<Vec<usize>>>) -> Option<Vec<usize>> {
        if picks == n + 1 {
            return None;
        }
        if let Some(r) = memo.get(&(alive, picks)) {
            return r.clone();
        }
        let r = (0..=alive).find_map(|k0| {
            let larger = k0.max(alive - k0);
            if larger == 0 {
                return Some(vec![k0]);
            }
            go(larger - 1, picks + 1, n, memo).map(|mut rest| {
                rest.insert(0, k0);
                rest
            })
        });
        memo.insert((alive, picks), r.clone());
        r
    }
    let n = n as usize;
    Ok(go(domain_size(n as u32) - 1, 1, n, &mut HashMap::new()))
}
