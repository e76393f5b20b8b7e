//! The evaluator side of the protocol: a reference server that wraps the
//! builtin learner, plus scripted and misbehaving modes for conformance
//! testing.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use super::protocol::{decode, encode, Request, Response};
use super::BUILTIN_EVALUATOR_ID;
use crate::policy::{induce, LearnerConfig, Policy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Misbehavior {
    #[default]
    None,
    /// Answer with an action that is never valid.
    InvalidAction,
    /// Answer with a line that is not a protocol message.
    Malformed,
    /// Exit without answering.
    Crash,
    /// Stop answering but stay alive.
    Hang,
}

#[derive(Debug, Clone, Default)]
pub struct ServeOptions {
    /// Replay fixed actions per episode id instead of learning.
    pub script: Option<BTreeMap<String, Vec<String>>>,
    pub misbehave: Misbehavior,
    /// Number of observations answered normally before misbehaving.
    pub after: u32,
}

/// How the server loop ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServeEnd {
    Shutdown,
    EndOfInput,
    Crash,
    Hang,
}

struct Server<'o, W: Write> {
    out: W,
    opts: &'o ServeOptions,
    answered: u32,
}

enum Next {
    Train(Request),
    End(ServeEnd),
}

impl<W: Write> Server<'_, W> {
    fn reply(&mut self, r: Response) -> io::Result<()> {
        writeln!(self.out, "{}", encode(r))?;
        self.out.flush()
    }

    /// Applies a configured misbehavior once the budget of normal answers is
    /// spent. Returns `Some(end)` when the loop must stop.
    fn misbehave(&mut self, episode: &str) -> io::Result<Option<Option<ServeEnd>>> {
        if self.opts.misbehave == Misbehavior::None || self.answered < self.opts.after {
            return Ok(None);
        }
        match self.opts.misbehave {
            Misbehavior::None => Ok(None),
            Misbehavior::InvalidAction => {
                self.reply(Response::Act { episode: episode.to_string(), action: "dance wildly".into() })?;
                Ok(Some(None))
            }
            Misbehavior::Malformed => {
                writeln!(self.out, "this is not json")?;
                self.out.flush()?;
                Ok(Some(None))
            }
            Misbehavior::Crash => Ok(Some(Some(ServeEnd::Crash))),
            Misbehavior::Hang => Ok(Some(Some(ServeEnd::Hang))),
        }
    }

    /// Answers observations with `policy` until the next train request or
    /// the end of the session.
    fn session<I>(&mut self, lines: &mut I, policy: Option<&Policy>) -> io::Result<Next>
    where
        I: Iterator<Item = io::Result<String>>,
    {
        let mut runner = None;
        for line in lines {
            let line = line?;
            let req = match decode::<Request>(&line) {
                Ok(r) => r,
                Err(e) => {
                    self.reply(Response::Error { message: e.to_string() })?;
                    continue;
                }
            };
            match req {
                Request::Hello => self.reply(Response::Ready { evaluator_id: BUILTIN_EVALUATOR_ID.into() })?,
                Request::Shutdown => return Ok(Next::End(ServeEnd::Shutdown)),
                train @ Request::Train { .. } => return Ok(Next::Train(train)),
                Request::Obs { episode, step, view } => {
                    match self.misbehave(&episode)? {
                        Some(Some(end)) => return Ok(Next::End(end)),
                        Some(None) => continue,
                        None => {}
                    }
                    let action = if let Some(script) = &self.opts.script {
                        script
                            .get(&episode)
                            .and_then(|acts| acts.get(step as usize))
                            .cloned()
                            .unwrap_or_else(|| "look around".into())
                    } else if let Some(policy) = policy {
                        if step == 0 || runner.is_none() {
                            runner = Some(policy.start_episode());
                        }
                        runner.as_mut().expect("runner").act(view).to_string()
                    } else {
                        self.reply(Response::Error { message: "observation before training".into() })?;
                        continue;
                    };
                    self.answered += 1;
                    self.reply(Response::Act { episode, action })?;
                }
            }
        }
        Ok(Next::End(ServeEnd::EndOfInput))
    }
}

/// Serves the protocol over `input`/`output` until shutdown or end of input.
pub fn serve<R: BufRead, W: Write>(input: R, output: W, opts: &ServeOptions) -> io::Result<ServeEnd> {
    let mut server = Server { out: output, opts, answered: 0 };
    let mut lines = input.lines();
    let mut policy: Option<Policy> = None;
    loop {
        match server.session(&mut lines, policy.as_ref())? {
            Next::End(end) => return Ok(end),
            Next::Train(Request::Train { records, config }) => {
                let cfg: LearnerConfig = if config.is_null() {
                    LearnerConfig::default()
                } else {
                    match serde_json::from_value(config) {
                        Ok(c) => c,
                        Err(e) => {
                            server.reply(Response::Error { message: format!("bad learner config: {e}") })?;
                            continue;
                        }
                    }
                };
                if opts.script.is_some() && !records.is_empty() {
                    server.reply(Response::Trained)?;
                    continue;
                }
                match induce(&records, &cfg) {
                    Ok(p) => {
                        policy = Some(p);
                        server.reply(Response::Trained)?;
                    }
                    Err(e) => server.reply(Response::Error { message: e.to_string() })?,
                }
            }
            Next::Train(_) => unreachable!("session only yields train requests"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(input: &str, opts: &ServeOptions) -> Vec<Response> {
        let mut out = Vec::new();
        serve(input.as_bytes(), &mut out, opts).unwrap();
        String::from_utf8(out).unwrap().lines().map(|l| decode(l).unwrap()).collect()
    }

    #[test]
    fn hello_and_empty_training() {
        let input = [encode(Request::Hello), encode(Request::Train { records: vec![], config: serde_json::Value::Null })]
            .join("\n");
        let replies = run(&input, &ServeOptions::default());
        assert_eq!(replies[0], Response::Ready { evaluator_id: BUILTIN_EVALUATOR_ID.into() });
        assert!(matches!(replies[1], Response::Error { .. }));
    }
}
