use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::protocol::{decode, encode, Request, Response};
use super::{play_episode, ActFailure, EvalError, EvalReport};
use crate::engine::EpisodeSpec;
use crate::policy::PromptRecord;

/// A running external evaluator process speaking the line protocol.
pub struct ExternalSession {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    evaluator_id: String,
}

impl ExternalSession {
    pub fn spawn(command: &[String], timeout: Duration) -> Result<ExternalSession, EvalError> {
        let (program, args) =
            command.split_first().ok_or_else(|| EvalError::Protocol("empty evaluator command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| EvalError::Protocol(format!("cannot start {program:?}: {e}")))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut session = ExternalSession { child, stdin, lines: rx, timeout, evaluator_id: String::new() };
        match session.request(&Request::Hello).map_err(fatal)? {
            Response::Ready { evaluator_id } => session.evaluator_id = evaluator_id,
            other => return Err(EvalError::Protocol(format!("expected ready, got {other:?}"))),
        }
        Ok(session)
    }

    pub fn evaluator_id(&self) -> &str {
        &self.evaluator_id
    }

    fn send(&mut self, req: &Request) -> Result<(), String> {
        let stdin = self.stdin.as_mut().ok_or("evaluator stdin closed")?;
        writeln!(stdin, "{}", encode(req)).and_then(|_| stdin.flush()).map_err(|e| format!("write failed: {e}"))
    }

    /// Reads one raw line. Errors are fatal (crash, timeout, closed pipe).
    fn recv_line(&mut self) -> Result<String, String> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(line)) => Ok(line),
            Ok(Err(e)) => Err(format!("read failed: {e}")),
            Err(RecvTimeoutError::Timeout) => Err(format!("no response within {:?}", self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Err("evaluator exited".into()),
        }
    }

    fn request(&mut self, req: &Request) -> Result<Response, String> {
        self.send(req)?;
        let line = self.recv_line()?;
        decode(&line).map_err(|e| e.to_string())
    }

    pub fn train(&mut self, records: &[PromptRecord], config: &serde_json::Value) -> Result<(), EvalError> {
        let req = Request::Train { records: records.to_vec(), config: config.clone() };
        match self.request(&req).map_err(fatal)? {
            Response::Trained => Ok(()),
            Response::Error { message } => Err(EvalError::Protocol(format!("training rejected: {message}"))),
            other => Err(EvalError::Protocol(format!("expected trained, got {other:?}"))),
        }
    }

    /// Trains, then plays the episodes one after another.
    pub fn evaluate(
        &mut self,
        group_key: &str,
        records: &[PromptRecord],
        config: &serde_json::Value,
        specs: &[EpisodeSpec],
        label: &str,
    ) -> Result<EvalReport, EvalError> {
        self.train(records, config)?;
        let mut per_episode = BTreeMap::new();
        for spec in specs {
            let tag = spec.tag();
            let outcome = play_episode(spec, |step, view| {
                self.send(&Request::Obs { episode: tag.clone(), step, view }).map_err(ActFailure::Fatal)?;
                let line = self.recv_line().map_err(ActFailure::Fatal)?;
                match decode::<Response>(&line) {
                    Ok(Response::Act { episode, action }) if episode == tag => Ok(action),
                    Ok(other) => {
                        tracing::warn!(episode = %tag, response = ?other, "unexpected response; aborting episode");
                        Err(ActFailure::Abort)
                    }
                    Err(e) => {
                        tracing::warn!(episode = %tag, error = %e, "malformed response; aborting episode");
                        Err(ActFailure::Abort)
                    }
                }
            });
            match outcome {
                Ok(r) => {
                    if r.aborted {
                        tracing::warn!(episode = %tag, score = %r.score, "episode aborted");
                    }
                    per_episode.insert(spec.variation, r);
                }
                Err((partial, message)) => {
                    per_episode.insert(spec.variation, partial);
                    return Err(EvalError::EvaluatorFailure { message, partial: per_episode });
                }
            }
        }
        Ok(EvalReport::from_episodes(group_key, label, self.evaluator_id.clone(), per_episode))
    }

    pub fn shutdown(mut self) {
        let _ = self.send(&Request::Shutdown);
        self.stdin = None;
        // Give a well-behaved process a moment to exit, then make sure.
        for _ in 0..20 {
            if let Ok(Some(_)) = self.child.try_wait() {
                return;
            }
            thread::sleep(Duration::from_millis(10));
        }
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ExternalSession {
    fn drop(&mut self) {
        if let Ok(None) = self.child.try_wait() {
            let _ = self.child.kill();
            let _ = self.child.wait();
        }
    }
}

fn fatal(message: String) -> EvalError {
    EvalError::EvaluatorFailure { message, partial: BTreeMap::new() }
}
