mod common;

use serde_json::json;

use common::{completion, StubServer};
use swarm_core::agents::{count_tokens, render_prompt, Agent, AgentError, QARecord, RemoteAgent, RemoteConfig, Turn, SYSTEM_PROMPT};
use swarm_core::rng::sub_stream;

fn agent(base_url: &str, max_attempts: usize) -> RemoteAgent {
    RemoteAgent::new(RemoteConfig {
        base_url: format!("{base_url}/"),
        model: "stub".into(),
        api_key: Some("k".into()),
        max_attempts,
        backoff_ms: 1,
        timeout_secs: 10,
        ..RemoteConfig::default()
    })
}

fn ask(agent: &RemoteAgent, item: &QARecord) -> Result<swarm_core::agents::AgentMessage, AgentError> {
    agent.respond(&Turn { item, round: 0, agent: 0, neighbors: &[] }, &mut sub_stream(0, &[], "test"))
}

#[test]
fn transient_failures_are_retried() {
    let server = StubServer::start(|i, _| match i {
        0 => (503, json!({"error": "busy"})),
        1 => (429, json!({"error": "slow down"})),
        _ => (200, completion("The answer is B.", 10, 4)),
    });
    let item = QARecord::multiple_choice("mc", "Which?", &["x", "y", "z"], "B");
    let msg = ask(&agent(&server.base_url, 3), &item).unwrap();
    assert_eq!(msg.answer.as_deref(), Some("B"));
    assert_eq!((msg.token_cost.prompt, msg.token_cost.completion), (10, 4));
    assert_eq!(server.requests().len(), 3);
    assert!(server.requests().iter().all(|r| r.path == "/v1/chat/completions"));
}

#[test]
fn client_errors_are_not_retried() {
    let server = StubServer::start(|_, _| (401, json!({"error": "bad key"})));
    let err = ask(&agent(&server.base_url, 5), &QARecord::numeric("n", "1 + 1?", "2")).unwrap_err();
    assert!(matches!(err, AgentError::Http { attempts: 1, .. }), "{err:?}");
    assert_eq!(server.requests().len(), 1);
}

#[test]
fn missing_usage_falls_back_to_the_proxy() {
    let server = StubServer::start(|_, _| {
        (200, json!({"choices": [{"message": {"role": "assistant", "content": "Final answer: 12"}}]}))
    });
    let item = QARecord::numeric("n", "What is 3 * 4?", "12");
    let msg = ask(&agent(&server.base_url, 1), &item).unwrap();
    let prompt = render_prompt(&Turn { item: &item, round: 0, agent: 0, neighbors: &[] });
    assert_eq!(msg.token_cost.prompt, count_tokens(SYSTEM_PROMPT) + count_tokens(&prompt));
    assert_eq!(msg.token_cost.completion, count_tokens("Final answer: 12"));
    assert_eq!(msg.answer.as_deref(), Some("12"));
}

#[test]
fn malformed_bodies_are_reported() {
    let server = StubServer::start(|_, _| (200, json!({"choices": []})));
    let err = ask(&agent(&server.base_url, 1), &QARecord::numeric("n", "1 + 1?", "2")).unwrap_err();
    assert!(matches!(err, AgentError::InvalidResponse(_)), "{err:?}");
}

#[test]
fn unreachable_server_exhausts_attempts() {
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    drop(listener);
    let err = ask(&agent(&url, 2), &QARecord::numeric("n", "1 + 1?", "2")).unwrap_err();
    assert!(matches!(err, AgentError::Http { attempts: 2, .. }), "{err:?}");
}
