use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::game::{GameConfig, GameState, GameTranscript, Outcome, Player};
use crate::strategies::{AliceMove, AliceState};

use super::{check_n, oracle_for_seed, HarnessError};

/// Terminal game where a human plays Bob against the partition strategy.
///
/// Reads one command per line: a number to declare, `show` to list the
/// declared numbers, or `quit`. End of input counts as `quit`.
pub fn run_repl<R: BufRead, W: Write>(
    mut input: R,
    mut out: W,
    n: u64,
    c: f64,
    seed: u64,
) -> Result<GameTranscript, HarnessError> {
    check_n(n)?;
    let max = 2 * n;
    let oracle = oracle_for_seed(n, seed)?;
    let (mut alice, first) = AliceState::init(Arc::clone(&oracle), c)?;
    let mut game = GameState::new(GameConfig::new(n, c, seed)?)?;

    writeln!(out, "Mirror game on 1..{max}. You are Bob; a repeated number loses.")?;
    writeln!(out, "Commands: <number>, show, quit")?;
    game.apply_declaration(Player::Alice, first)?;
    writeln!(out, "Alice declares {first}")?;

    let mut line = String::new();
    loop {
        write!(out, "bob> ")?;
        out.flush()?;
        line.clear();
        if input.read_line(&mut line)? == 0 {
            writeln!(out)?;
            break;
        }
        let cmd = line.trim();
        match cmd {
            "quit" | "exit" => break,
            "show" => {
                let declared: Vec<String> = game.declared().map(|x| x.to_string()).collect();
                writeln!(out, "declared ({}): {}", declared.len(), declared.join(" "))?;
                continue;
            }
            "" => continue,
            _ => {}
        }
        let x = match cmd.parse::<u64>() {
            Ok(x) if (1..=max).contains(&x) => x,
            _ => {
                writeln!(out, "please enter a number in [1, {max}], 'show' or 'quit'")?;
                continue;
            }
        };
        match game.apply_declaration(Player::Bob, x)? {
            Outcome::AliceWins => {
                writeln!(out, "you lose: repeated declaration of {x}")?;
                break;
            }
            Outcome::Tie => {
                writeln!(out, "*** tie: all {max} numbers declared ***")?;
                break;
            }
            _ => {}
        }
        match alice.respond(x)? {
            AliceMove::Declare(a) => {
                game.apply_declaration(Player::Alice, a)?;
                writeln!(out, "Alice declares {a}")?;
            }
            AliceMove::Abort { partition, undeclared } => {
                game.abort(format!("P_{partition} has {undeclared} undeclared numbers"))?;
                writeln!(out, "Alice aborts (P_{partition} still has {undeclared} undeclared numbers): you win")?;
                break;
            }
        }
    }
    writeln!(out, "outcome: {}", game.outcome())?;
    Ok(game.transcript())
}
