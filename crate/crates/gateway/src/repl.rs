//! Line-oriented console over the service.
//!
//! Plain lines are typed user turns. Commands:
//! `/seed N` restarts the session with seed `N`, `/user ID` restarts it for a
//! user id, `/hypotheses text|score;text|score` sends an n-best list,
//! `/state` prints the session state as JSON, `/quit` ends the session.

use std::io::{BufRead, Write};

use parlor_core::nlu::{AsrHypothesis, AsrInput};
use parlor_core::replay::{bot_line, user_line};
use parlor_core::service::{OpenRequest, Service};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplOptions {
    /// Echo user turns as transcript lines and print no prompt.
    pub transcript: bool,
}

/// Parses `text|score;text|score`.
pub fn parse_hypotheses(list: &str) -> Result<AsrInput, String> {
    let mut hyps = Vec::new();
    for part in list.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (text, score) = part.rsplit_once('|').ok_or_else(|| format!("expected text|score in {part:?}"))?;
        let score: f64 = score.trim().parse().map_err(|_| format!("bad score in {part:?}"))?;
        hyps.push(AsrHypothesis {
            text: text.trim().to_string(),
            score,
        });
    }
    AsrInput::new(hyps).map_err(|e| e.to_string())
}

pub fn run_repl<R: BufRead, W: Write>(service: &Service, input: R, out: &mut W, opts: ReplOptions) -> anyhow::Result<()> {
    let mut req = OpenRequest::default();
    let mut session = service.open_session(req.clone())?.session_id;
    let prompt = |out: &mut W| -> std::io::Result<()> {
        if !opts.transcript {
            write!(out, "> ")?;
            out.flush()?;
        }
        Ok(())
    };
    prompt(out)?;
    for line in input.lines() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() {
            prompt(out)?;
            continue;
        }
        let turn_input = if let Some(rest) = line.strip_prefix('/') {
            let (cmd, arg) = rest.split_once(' ').map(|(c, a)| (c, a.trim())).unwrap_or((rest, ""));
            match cmd {
                "seed" | "user" => {
                    if cmd == "seed" {
                        match arg.parse() {
                            Ok(n) => req.seed = Some(n),
                            Err(_) => {
                                writeln!(out, "error: /seed needs a number")?;
                                prompt(out)?;
                                continue;
                            }
                        }
                    } else {
                        req.user_id = (!arg.is_empty()).then(|| arg.to_string());
                    }
                    let _ = service.end_session(&session);
                    session = service.open_session(req.clone())?.session_id;
                    if !opts.transcript {
                        writeln!(out, "new session {session}")?;
                    }
                    prompt(out)?;
                    continue;
                }
                "state" => {
                    let s = service.get_state(&session)?;
                    writeln!(out, "{}", serde_json::to_string_pretty(&s)?)?;
                    prompt(out)?;
                    continue;
                }
                "quit" | "exit" => break,
                "hypotheses" => match parse_hypotheses(arg) {
                    Ok(i) => i,
                    Err(e) => {
                        writeln!(out, "error: {e}")?;
                        prompt(out)?;
                        continue;
                    }
                },
                other => {
                    writeln!(out, "error: unknown command /{other}")?;
                    prompt(out)?;
                    continue;
                }
            }
        } else {
            AsrInput::text(line)
        };

        if opts.transcript {
            writeln!(out, "{}", user_line(&turn_input.top().text))?;
        }
        match service.turn(&session, &turn_input) {
            Ok(r) => {
                writeln!(out, "{}", bot_line(r.response.origin.as_str(), &r.reply))?;
                if r.end_session {
                    break;
                }
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
        prompt(out)?;
    }
    let _ = service.end_session(&session);
    Ok(())
}
