use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;

/// One newline-delimited JSON frame between the engine and an external agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WireFrame {
    pub protocol_version: u32,
    #[serde(flatten)]
    pub body: FrameBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FrameBody {
    /// Engine to agent.
    Turn {
        trial_id: String,
        round: u32,
        agent: String,
        /// Rules prompt, first turn only.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        context: Option<String>,
        observation: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        belief_seed: Option<String>,
        deadline_ms: u64,
    },
    /// Agent to engine.
    Reply {
        raw_reply: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        belief_text: Option<String>,
    },
    TomQuery {
        question_id: String,
        question_text: String,
    },
    TomAnswer {
        question_id: String,
        answer_text: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        yes_no: Option<bool>,
    },
    /// The trial is over; the agent may exit.
    End { trial_id: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("unsupported protocol version {0}")]
    Version(u32),
}

impl WireFrame {
    pub fn new(body: FrameBody) -> Self {
        WireFrame {
            protocol_version: PROTOCOL_VERSION,
            body,
        }
    }

    /// Single line, no trailing newline.
    pub fn encode(&self) -> String {
        serde_json::to_string(self).expect("frames always serialize")
    }
}

pub fn decode_frame(line: &str) -> Result<WireFrame, WireError> {
    let frame: WireFrame =
        serde_json::from_str(line.trim()).map_err(|e| WireError::Malformed(e.to_string()))?;
    if frame.protocol_version != PROTOCOL_VERSION {
        return Err(WireError::Version(frame.protocol_version));
    }
    Ok(frame)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_round_trip() {
        let frames = [
            FrameBody::Turn {
                trial_id: "t1".into(),
                round: 3,
                agent: "Alpha".into(),
                context: None,
                observation: "Current round: 3".into(),
                belief_seed: Some("belief".into()),
                deadline_ms: 120_000,
            },
            FrameBody::Reply {
                raw_reply: "Action selection: inspect bomb.".into(),
                belief_text: None,
            },
            FrameBody::TomQuery {
                question_id: "r3-alpha-1".into(),
                question_text: "Do you know?".into(),
            },
            FrameBody::TomAnswer {
                question_id: "r3-alpha-1".into(),
                answer_text: "Yes".into(),
                yes_no: Some(true),
            },
            FrameBody::End {
                trial_id: "t1".into(),
            },
        ];
        for body in frames {
            let f = WireFrame::new(body);
            let line = f.encode();
            assert!(!line.contains('\n'));
            assert!(line.contains("\"protocol_version\":1"));
            assert_eq!(decode_frame(&line).unwrap(), f);
        }
    }

    #[test]
    fn bad_frames_are_rejected() {
        assert!(matches!(decode_frame("{"), Err(WireError::Malformed(_))));
        assert!(matches!(
            decode_frame(r#"{"protocol_version":9,"type":"end","trial_id":"x"}"#),
            Err(WireError::Version(9))
        ));
        assert!(decode_frame(r#"{"type":"end","trial_id":"x"}"#).is_err());
    }
}
