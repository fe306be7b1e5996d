use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::thread;

use defuse_core::agents::{decode_frame, FrameBody, PolicySpec, WireFrame};
use defuse_core::harness::{run_trial, EventBody, HarnessError, TrialConfig};
use defuse_core::world::{AgentId, WorldConfig};

const INSPECT: &str = "Action selection: Inspect Bomb. Message to Team: \"Checking.\"";

fn config(alpha: PolicySpec) -> TrialConfig {
    let mut c = TrialConfig {
        world: Some(WorldConfig::standard_map()),
        round_limit: Some(4),
        ..TrialConfig::default()
    };
    c.policies.insert("alpha".into(), alpha);
    c
}

/// Serves one connection. `turns` replies are answered before the agent hangs up; `None`
/// answers everything. Returns every frame received.
fn tcp_agent(turns: Option<usize>, silent: bool) -> (String, thread::JoinHandle<Vec<WireFrame>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let endpoint = format!("tcp://{}", listener.local_addr().unwrap());
    let handle = thread::spawn(move || {
        let (stream, _) = listener.accept().unwrap();
        let mut out = stream.try_clone().unwrap();
        let mut seen = Vec::new();
        let mut answered = 0;
        for line in BufReader::new(stream).lines() {
            let Ok(line) = line else { break };
            let frame = decode_frame(&line).unwrap();
            let reply = match &frame.body {
                FrameBody::Turn { .. } => {
                    if turns.is_some_and(|n| answered >= n) {
                        seen.push(frame);
                        break;
                    }
                    answered += 1;
                    Some(FrameBody::Reply {
                        raw_reply: INSPECT.into(),
                        belief_text: None,
                    })
                }
                FrameBody::TomQuery { question_id, .. } => Some(FrameBody::TomAnswer {
                    question_id: question_id.clone(),
                    answer_text: "Yes, they do.".into(),
                    yes_no: None,
                }),
                _ => None,
            };
            let end = matches!(frame.body, FrameBody::End { .. });
            seen.push(frame);
            if let (Some(body), false) = (reply, silent) {
                writeln!(out, "{}", WireFrame::new(body).encode()).unwrap();
            }
            if end {
                break;
            }
        }
        seen
    });
    (endpoint, handle)
}

fn alpha_replies(t: &defuse_core::harness::Transcript) -> Vec<String> {
    t.replies(AgentId(0)).into_iter().map(|r| r.raw).collect()
}

#[test]
fn tcp_agent_plays_a_trial() {
    let (endpoint, server) = tcp_agent(None, false);
    let out = run_trial(&config(PolicySpec::External {
        endpoint: Some(endpoint),
    }))
    .unwrap();
    let frames = server.join().unwrap();
    let turns: Vec<&FrameBody> = frames
        .iter()
        .map(|f| &f.body)
        .filter(|b| matches!(b, FrameBody::Turn { .. }))
        .collect();
    assert_eq!(turns.len(), 4);
    for (i, t) in turns.iter().enumerate() {
        let FrameBody::Turn {
            context,
            round,
            agent,
            ..
        } = t
        else {
            unreachable!()
        };
        assert_eq!(*round, i as u32 + 1);
        assert_eq!(agent, "Alpha");
        assert_eq!(context.is_some(), i == 0);
    }
    assert!(matches!(frames.last().unwrap().body, FrameBody::End { .. }));
    assert_eq!(alpha_replies(&out.transcript), vec![INSPECT.to_string(); 4]);
    let answers: Vec<bool> = out
        .transcript
        .events
        .iter()
        .filter(|e| e.agent == Some(AgentId(0)))
        .filter_map(|e| match &e.body {
            EventBody::TomAnswer { yes, text, .. } => {
                assert_eq!(text, "Yes, they do.");
                Some(*yes)
            }
            _ => None,
        })
        .collect();
    assert!(!answers.is_empty());
    assert!(answers.iter().all(|y| *y));
}

#[test]
fn hang_up_forfeits_later_turns() {
    let (endpoint, server) = tcp_agent(Some(1), false);
    let out = run_trial(&config(PolicySpec::External {
        endpoint: Some(endpoint),
    }))
    .unwrap();
    server.join().unwrap();
    let replies = alpha_replies(&out.transcript);
    assert_eq!(replies.len(), 4);
    assert_eq!(replies[0], INSPECT);
    assert!(replies[1..].iter().all(|r| r != INSPECT));
    assert_eq!(out.metrics.rounds_played, 4);
}

#[test]
fn silent_agent_times_out() {
    let (endpoint, server) = tcp_agent(None, true);
    let mut c = config(PolicySpec::External {
        endpoint: Some(endpoint),
    });
    c.turn_timeout_ms = 50;
    c.round_limit = Some(2);
    let out = run_trial(&c).unwrap();
    server.join().unwrap();
    assert!(alpha_replies(&out.transcript).iter().all(|r| r != INSPECT));
    assert!(out.metrics.valid_replies < out.metrics.replies);
}

#[test]
fn exec_agent_plays_a_trial() {
    let script = r#"while IFS= read -r line; do
  case "$line" in
    *'"type":"turn"'*) printf '%s\n' '{"protocol_version":1,"type":"reply","raw_reply":"Action selection: Inspect Bomb."}' ;;
    *'"type":"tom_query"'*) id=$(printf '%s' "$line" | sed 's/.*"question_id":"\([^"]*\)".*/\1/'); printf '{"protocol_version":1,"type":"tom_answer","question_id":"%s","answer_text":"No."}\n' "$id" ;;
    *'"type":"end"'*) exit 0 ;;
  esac
done"#;
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("agent with space.sh");
    std::fs::write(&path, script).unwrap();
    let endpoint = format!("exec:sh '{}'", path.display());
    let out = run_trial(&config(PolicySpec::External {
        endpoint: Some(endpoint),
    }))
    .unwrap();
    assert_eq!(
        alpha_replies(&out.transcript),
        vec!["Action selection: Inspect Bomb.".to_string(); 4]
    );
    let answers: Vec<&str> = out
        .transcript
        .events
        .iter()
        .filter(|e| e.agent == Some(AgentId(0)))
        .filter_map(|e| match &e.body {
            EventBody::TomAnswer { text, yes, .. } => {
                assert!(!yes);
                Some(text.as_str())
            }
            _ => None,
        })
        .collect();
    assert!(!answers.is_empty());
    assert!(answers.iter().all(|a| *a == "No."));
}

#[test]
fn unreachable_endpoints_fail_the_trial() {
    let port = {
        let l = TcpListener::bind("127.0.0.1:0").unwrap();
        l.local_addr().unwrap().port()
    };
    let err = run_trial(&config(PolicySpec::External {
        endpoint: Some(format!("tcp://127.0.0.1:{port}")),
    }))
    .unwrap_err();
    assert!(
        matches!(err, HarnessError::Agent { ref call_sign, .. } if call_sign == "Alpha"),
        "{err}"
    );
    let err = run_trial(&config(PolicySpec::External {
        endpoint: Some("udp://nowhere".into()),
    }))
    .unwrap_err();
    assert!(err.to_string().contains("tcp://"), "{err}");
}
