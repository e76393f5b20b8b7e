//! Line-delimited JSON protocol between the pipeline and an external
//! evaluator process.
//!
//! Every line is one JSON object with a `version` and a `type` field.
//!
//! | direction  | type       | fields                                                         |
//! |------------|------------|----------------------------------------------------------------|
//! | to eval    | `hello`    | —                                                              |
//! | from eval  | `ready`    | `evaluator_id`                                                 |
//! | to eval    | `train`    | `records` (prompt records), `config` (opaque JSON)             |
//! | from eval  | `trained`  | —                                                              |
//! | to eval    | `obs`      | `episode`, `step`, and the agent view fields                   |
//! | from eval  | `act`      | `episode`, `action`                                            |
//! | to eval    | `shutdown` | —                                                              |
//! | from eval  | `error`    | `message`                                                      |
//!
//! Agent view fields: `task_description`, `obs`, `inventory`, `look`,
//! `prev_action`, `prev_obs`, `valid_actions`. `step` 0 starts a new episode.

use serde::{Deserialize, Serialize};

use crate::policy::{AgentView, PromptRecord};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Request {
    Hello,
    Train {
        records: Vec<PromptRecord>,
        #[serde(default)]
        config: serde_json::Value,
    },
    Obs {
        episode: String,
        step: u32,
        #[serde(flatten)]
        view: AgentView,
    },
    Shutdown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Response {
    Ready { evaluator_id: String },
    Trained,
    Act { episode: String, action: String },
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub version: u32,
    #[serde(flatten)]
    pub body: T,
}

pub fn encode<T: Serialize>(body: T) -> String {
    serde_json::to_string(&Envelope { version: PROTOCOL_VERSION, body }).expect("protocol messages serialize")
}

#[derive(Debug, thiserror::Error)]
pub enum DecodeError {
    #[error("malformed message: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("unsupported protocol version {0}")]
    Version(u32),
}

pub fn decode<T: for<'de> Deserialize<'de>>(line: &str) -> Result<T, DecodeError> {
    let env: Envelope<T> = serde_json::from_str(line)?;
    if env.version != PROTOCOL_VERSION {
        return Err(DecodeError::Version(env.version));
    }
    Ok(env.body)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn messages_round_trip() {
        let line = encode(Response::Act { episode: "dev-3".into(), action: "look around".into() });
        assert_eq!(line, r#"{"version":1,"type":"act","episode":"dev-3","action":"look around"}"#);
        let back: Response = decode(&line).unwrap();
        assert_eq!(back, Response::Act { episode: "dev-3".into(), action: "look around".into() });
        assert!(matches!(decode::<Request>(r#"{"version":2,"type":"hello"}"#), Err(DecodeError::Version(2))));
        assert!(decode::<Request>("not json").is_err());
    }
}
