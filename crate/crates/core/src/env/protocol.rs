//! Line-delimited JSON wire protocol.
//!
//! Each request and each response is one JSON object on its own line.
//!
//! Requests:
//!
//! ```text
//! {"cmd":"reset","seed":7}
//! {"cmd":"step","layers":[1,3],"placements":[0,2]}
//! {"cmd":"update_multipliers"}
//! {"cmd":"close"}
//! ```
//!
//! Every response carries `"proto":1`. A reset answers with `obs`; a step
//! with `obs`, `rewards`, `done` and `info`; a multiplier update with
//! `multipliers`; close with `"closed":true`. Failures answer with
//! `{"proto":1,"error":{"code":...,"message":...}}` and leave the
//! environment as it was.

use serde::{Deserialize, Serialize};

use super::{Environment, JointAction, Observation, StepInfo};
use crate::Error;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Reset {
        seed: u64,
    },
    Step {
        layers: Vec<usize>,
        placements: Vec<usize>,
    },
    UpdateMultipliers,
    Close,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Multipliers {
    pub mu0: f64,
    pub mu1: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub proto: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub obs: Option<Observation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rewards: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub done: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub info: Option<StepInfo>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multipliers: Option<Multipliers>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub closed: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorBody>,
}

impl Response {
    fn empty() -> Self {
        Self {
            proto: PROTOCOL_VERSION,
            obs: None,
            rewards: None,
            done: None,
            info: None,
            multipliers: None,
            closed: None,
            error: None,
        }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Self {
            error: Some(ErrorBody {
                code: code.into(),
                message: message.into(),
            }),
            ..Self::empty()
        }
    }

    fn from_error(e: &Error) -> Self {
        Self::error(e.code(), e.to_string())
    }

    pub fn is_error(&self) -> bool {
        self.error.is_some()
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("responses contain only finite numbers")
    }
}

impl Request {
    #[allow(clippy::result_large_err)]
    pub fn parse(line: &str) -> Result<Self, Response> {
        serde_json::from_str(line).map_err(|e| Response::error("bad_request", e.to_string()))
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("requests always serialize")
    }
}

/// Protocol state machine bound to one environment.
#[derive(Debug)]
pub struct Session {
    env: Environment,
    closed: bool,
}

impl Session {
    pub fn new(env: Environment) -> Self {
        Self { env, closed: false }
    }

    pub fn env(&self) -> &Environment {
        &self.env
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn handle_line(&mut self, line: &str) -> Response {
        match Request::parse(line) {
            Ok(req) => self.handle(req),
            Err(resp) => resp,
        }
    }

    pub fn handle(&mut self, req: Request) -> Response {
        if self.closed {
            return Response::error("closed", "session is closed");
        }
        match req {
            Request::Reset { seed } => match self.env.reset(seed) {
                Ok(obs) => Response {
                    obs: Some(obs),
                    ..Response::empty()
                },
                Err(e) => Response::from_error(&e),
            },
            Request::Step { layers, placements } => {
                match self.env.step(&JointAction { layers, placements }) {
                    Ok(step) => Response {
                        obs: Some(step.observation),
                        rewards: Some(step.rewards),
                        done: Some(step.done),
                        info: Some(step.info),
                        ..Response::empty()
                    },
                    Err(e) => Response::from_error(&e),
                }
            }
            Request::UpdateMultipliers => match self.env.update_multipliers_epoch() {
                Ok((mu0, mu1)) => Response {
                    multipliers: Some(Multipliers { mu0, mu1 }),
                    ..Response::empty()
                },
                Err(e) => Response::from_error(&e),
            },
            Request::Close => {
                self.closed = true;
                Response {
                    closed: Some(true),
                    ..Response::empty()
                }
            }
        }
    }
}
