//! Referee for the mirror game.
//!
//! Alice and Bob alternate (Alice first) declaring numbers from `[1, 2N]`.
//! Declaring an already declared number loses on the spot; declaring all
//! `2N` numbers without a repeat is a tie. The referee keeps the full
//! declared set. Only the players' memory is metered (see
//! [`crate::strategies`]).

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Default memory constant `c` in `k = ceil(c * log2 N)`.
pub const DEFAULT_C: f64 = 2.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GameError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("number {x} outside [1, {max}]")]
    OutOfRange { x: u64, max: u64 },
    #[error("it is {expected}'s turn, not {got}'s")]
    WrongTurn { expected: Player, got: Player },
    #[error("game is already over ({0})")]
    GameOver(Outcome),
    #[error("malformed transcript line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Player {
    Alice,
    Bob,
}

impl Player {
    pub fn other(self) -> Player {
        match self {
            Player::Alice => Player::Bob,
            Player::Bob => Player::Alice,
        }
    }

    fn tag(self) -> char {
        match self {
            Player::Alice => 'A',
            Player::Bob => 'B',
        }
    }
}

impl fmt::Display for Player {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Player::Alice => f.write_str("Alice"),
            Player::Bob => f.write_str("Bob"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Outcome {
    Ongoing,
    AliceWins,
    BobWins,
    Tie,
}

impl Outcome {
    pub fn is_over(self) -> bool {
        self != Outcome::Ongoing
    }

    fn win_for(player: Player) -> Outcome {
        match player {
            Player::Alice => Outcome::AliceWins,
            Player::Bob => Outcome::BobWins,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Outcome::Ongoing => "Ongoing",
            Outcome::AliceWins => "AliceWins",
            Outcome::BobWins => "BobWins",
            Outcome::Tie => "Tie",
        };
        f.write_str(s)
    }
}

impl FromStr for Outcome {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "Ongoing" => Ok(Outcome::Ongoing),
            "AliceWins" => Ok(Outcome::AliceWins),
            "BobWins" => Ok(Outcome::BobWins),
            "Tie" => Ok(Outcome::Tie),
            other => Err(format!("unknown outcome {other:?}")),
        }
    }
}

/// Parameters of a single game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig {
    /// Half the universe size; numbers range over `[1, 2N]`.
    pub n: u64,
    /// Memory constant, `k = ceil(c * log2 N)`.
    pub c: f64,
    pub master_seed: u64,
}

impl GameConfig {
    pub fn new(n: u64, c: f64, master_seed: u64) -> Result<Self, GameError> {
        let config = GameConfig { n, c, master_seed };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.n < 1 {
            return Err(GameError::InvalidConfig("N must be at least 1".into()));
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(GameError::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        Ok(())
    }

    pub fn universe(&self) -> u64 {
        2 * self.n
    }

    /// Missing-number budget `k = ceil(c * log2 N)`, at least 1.
    pub fn k(&self) -> usize {
        budget(self.n, self.c)
    }
}

/// `ceil(c * log2 n)`, clamped to at least 1.
pub fn budget(n: u64, c: f64) -> usize {
    // Fractional c can leave the product a rounding error above an integer.
    let k = (c * (n as f64).log2() - 1e-9).ceil();
    (k.max(1.0)) as usize
}

/// Live state of one game, including the move history.
#[derive(Debug, Clone)]
pub struct GameState {
    config: GameConfig,
    declared: Vec<bool>,
    declared_count: u64,
    mover: Player,
    outcome: Outcome,
    abort_flag: bool,
    abort_reason: Option<String>,
    moves: Vec<(Player, u64)>,
}

impl GameState {
    pub fn new(config: GameConfig) -> Result<Self, GameError> {
        config.validate()?;
        Ok(GameState {
            declared: vec![false; config.universe() as usize + 1],
            declared_count: 0,
            mover: Player::Alice,
            outcome: Outcome::Ongoing,
            abort_flag: false,
            abort_reason: None,
            moves: Vec::new(),
            config,
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn mover(&self) -> Player {
        self.mover
    }

    pub fn outcome(&self) -> Outcome {
        self.outcome
    }

    pub fn abort_flag(&self) -> bool {
        self.abort_flag
    }

    pub fn declared_count(&self) -> u64 {
        self.declared_count
    }

    pub fn is_declared(&self, x: u64) -> bool {
        self.declared.get(x as usize).copied().unwrap_or(false)
    }

    /// Declared numbers in increasing order.
    pub fn declared(&self) -> impl Iterator<Item = u64> + '_ {
        self.declared
            .iter()
            .enumerate()
            .filter(|(_, &d)| d)
            .map(|(x, _)| x as u64)
    }

    pub fn moves(&self) -> &[(Player, u64)] {
        &self.moves
    }

    /// Applies `player` declaring `x` and returns the resulting outcome.
    pub fn apply_declaration(&mut self, player: Player, x: u64) -> Result<Outcome, GameError> {
        if self.outcome.is_over() {
            return Err(GameError::GameOver(self.outcome));
        }
        if player != self.mover {
            return Err(GameError::WrongTurn { expected: self.mover, got: player });
        }
        let max = self.config.universe();
        if x < 1 || x > max {
            return Err(GameError::OutOfRange { x, max });
        }
        self.moves.push((player, x));
        if self.declared[x as usize] {
            self.outcome = Outcome::win_for(player.other());
            return Ok(self.outcome);
        }
        self.declared[x as usize] = true;
        self.declared_count += 1;
        if self.declared_count == max {
            self.outcome = Outcome::Tie;
        } else {
            self.mover = player.other();
        }
        Ok(self.outcome)
    }

    /// Records Alice forfeiting: the game ends as a win for Bob with the
    /// abort flag set.
    pub fn abort(&mut self, reason: impl Into<String>) -> Result<Outcome, GameError> {
        if self.outcome.is_over() {
            return Err(GameError::GameOver(self.outcome));
        }
        if self.mover != Player::Alice {
            return Err(GameError::WrongTurn { expected: self.mover, got: Player::Alice });
        }
        self.outcome = Outcome::BobWins;
        self.abort_flag = true;
        self.abort_reason = Some(reason.into());
        Ok(self.outcome)
    }

    pub fn transcript(&self) -> GameTranscript {
        GameTranscript {
            moves: self.moves.clone(),
            outcome: self.outcome,
            aborted: self.abort_flag,
            abort_reason: self.abort_reason.clone(),
        }
    }
}

/// Completed (or in-progress) move record of a game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTranscript {
    pub moves: Vec<(Player, u64)>,
    pub outcome: Outcome,
    pub aborted: bool,
    pub abort_reason: Option<String>,
}

impl GameTranscript {
    /// Text form: one `A x` / `B x` line per move, then
    /// `OUTCOME <Tie|AliceWins|BobWins> [abort]`.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.moves.len() * 8 + 24);
        for (player, x) in &self.moves {
            out.push(player.tag());
            out.push(' ');
            out.push_str(&x.to_string());
            out.push('\n');
        }
        out.push_str("OUTCOME ");
        out.push_str(&self.outcome.to_string());
        if self.aborted {
            out.push_str(" abort");
        }
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Self, GameError> {
        let mut moves = Vec::new();
        let mut tail = None;
        for (idx, line) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |reason: &str| GameError::Parse { line: line_no, reason: reason.to_string() };
            if tail.is_some() {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(err("content after OUTCOME line"));
            }
            let mut parts = line.split_whitespace();
            match parts.next() {
                Some(tag @ ("A" | "B")) => {
                    let player = if tag == "A" { Player::Alice } else { Player::Bob };
                    let x = parts
                        .next()
                        .ok_or_else(|| err("missing number"))?
                        .parse::<u64>()
                        .map_err(|_| err("bad number"))?;
                    if parts.next().is_some() {
                        return Err(err("trailing tokens"));
                    }
                    moves.push((player, x));
                }
                Some("OUTCOME") => {
                    let outcome: Outcome = parts
                        .next()
                        .ok_or_else(|| err("missing outcome"))?
                        .parse()
                        .map_err(|e: String| err(&e))?;
                    let aborted = match parts.next() {
                        None => false,
                        Some("abort") => true,
                        Some(_) => return Err(err("unexpected token after outcome")),
                    };
                    tail = Some((outcome, aborted));
                }
                Some(_) => return Err(err("expected A, B or OUTCOME")),
                None => {}
            }
        }
        let (outcome, aborted) =
            tail.ok_or(GameError::Parse { line: 0, reason: "missing OUTCOME line".into() })?;
        Ok(GameTranscript { moves, outcome, aborted, abort_reason: None })
    }
}
