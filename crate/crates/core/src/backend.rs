//! Optional remote language-model backend.
//!
//! Nothing in the simulator or the experiment runner needs it; it exists so
//! a real model can stand in for the deterministic estimator and selector.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{build_property_prompt, parse_property_answer, PropertyAnswer};
use crate::model::{FoodItemState, Skill};
use crate::planner::{build_planner_prompt, parse_skill_answer, select_skill, PlannerContext, SkillScore};
use crate::runner::AttemptRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RemoteConfig {
    /// URL receiving `{"prompt", "image_ref"}` and answering `{"text"}`.
    pub endpoint: String,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
}

fn default_timeout_ms() -> u64 {
    30_000
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    image_ref: &'a str,
}

#[derive(Deserialize)]
struct CompletionResponse {
    text: String,
}

pub trait PropertyBackend {
    fn estimate_properties(&self, label: &str, image_ref: &str) -> Result<PropertyAnswer>;
}

pub trait PlannerBackend {
    fn choose_skill(&self, ctx: &PlannerContext) -> Result<Skill>;
}

#[derive(Debug, Clone)]
pub struct RemoteClient {
    agent: ureq::Agent,
    endpoint: String,
}

impl RemoteClient {
    pub fn new(config: &RemoteConfig) -> Result<Self> {
        if config.timeout_ms == 0 {
            return Err(Error::Config("backend timeout must be positive".into()));
        }
        let agent = ureq::AgentBuilder::new().timeout(Duration::from_millis(config.timeout_ms)).build();
        Ok(Self { agent, endpoint: config.endpoint.clone() })
    }

    pub fn complete(&self, prompt: &str, image_ref: &str) -> Result<String> {
        let response = self
            .agent
            .post(&self.endpoint)
            .send_json(CompletionRequest { prompt, image_ref })
            .map_err(|e| Error::Backend(e.to_string()))?;
        let body: CompletionResponse = response.into_json().map_err(|e| Error::Backend(e.to_string()))?;
        Ok(body.text)
    }
}

impl PropertyBackend for RemoteClient {
    fn estimate_properties(&self, label: &str, image_ref: &str) -> Result<PropertyAnswer> {
        parse_property_answer(&self.complete(&build_property_prompt(label, image_ref), image_ref)?)
    }
}

impl PlannerBackend for RemoteClient {
    fn choose_skill(&self, ctx: &PlannerContext) -> Result<Skill> {
        parse_skill_answer(&self.complete(&build_planner_prompt(ctx), "")?)
    }
}

/// Asks `backend` first and falls back to the deterministic selector when
/// the call or the reply parse fails.
pub fn choose_skill_or_fallback(
    backend: &dyn PlannerBackend,
    ctx: &PlannerContext,
    scores: &[SkillScore],
    target: &FoodItemState,
    history: &[AttemptRecord],
) -> Result<Skill> {
    match backend.choose_skill(ctx) {
        Ok(skill) => Ok(skill),
        Err(_) => select_skill(scores, target, history),
    }
}

#[cfg(test)]
mod tests {
    use std::io::{BufRead, BufReader, Read, Write};
    use std::net::TcpListener;
    use std::thread;

    use super::*;
    use crate::estimator::{init_prior, PriorTable};
    use crate::model::{make_plate, FoodRegistry, PlateSpec};
    use crate::planner::{score_skills, SuccessTable};

    /// Serves one canned JSON reply per connection and hands back the
    /// request bodies it saw.
    fn fake_server(replies: Vec<String>) -> (String, thread::JoinHandle<Vec<String>>) {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/complete", listener.local_addr().unwrap());
        let handle = thread::spawn(move || {
            let mut bodies = Vec::new();
            for reply in replies {
                let (stream, _) = listener.accept().unwrap();
                let mut reader = BufReader::new(stream.try_clone().unwrap());
                let mut length = 0;
                loop {
                    let mut line = String::new();
                    reader.read_line(&mut line).unwrap();
                    if line.trim().is_empty() {
                        break;
                    }
                    if let Some(v) = line.to_ascii_lowercase().strip_prefix("content-length:") {
                        length = v.trim().parse().unwrap();
                    }
                }
                let mut body = vec![0; length];
                reader.read_exact(&mut body).unwrap();
                bodies.push(String::from_utf8(body).unwrap());
                let mut stream = stream;
                write!(
                    stream,
                    "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
                    reply.len(),
                    reply
                )
                .unwrap();
            }
            bodies
        });
        (url, handle)
    }

    fn client(url: &str) -> RemoteClient {
        RemoteClient::new(&RemoteConfig { endpoint: url.into(), timeout_ms: 5_000 }).unwrap()
    }

    fn planner_inputs() -> (PlannerContext, Vec<SkillScore>, FoodItemState) {
        let entry = init_prior("tofu", &PriorTable::default());
        let scores = score_skills(&SuccessTable::uninformed(), &entry, 0.35);
        let plate = make_plate(&PlateSpec::new("p", &[("tofu", 1)]), &FoodRegistry::default(), 1).unwrap();
        (PlannerContext::new("plastic_fork", "", String::new(), entry), scores, plate.items[0].clone())
    }

    #[test]
    fn planner_reply_is_parsed() {
        let (url, server) = fake_server(vec![r#"{"text": "Reasoning: soft. Answer: scoop"}"#.into()]);
        let (ctx, scores, target) = planner_inputs();
        let skill = choose_skill_or_fallback(&client(&url), &ctx, &scores, &target, &[]).unwrap();
        assert_eq!(skill, Skill::Scoop);
        let bodies = server.join().unwrap();
        assert!(bodies[0].contains("select an action from"));
    }

    #[test]
    fn unparseable_reply_falls_back() {
        let (url, server) = fake_server(vec![r#"{"text": "no idea"}"#.into()]);
        let (ctx, scores, target) = planner_inputs();
        let skill = choose_skill_or_fallback(&client(&url), &ctx, &scores, &target, &[]).unwrap();
        assert_eq!(skill, select_skill(&scores, &target, &[]).unwrap());
        server.join().unwrap();
    }

    #[test]
    fn property_reply_is_parsed() {
        let reply = r#"{"text": "Reasoning: wobbly. Answer: Shape: cubic; Size: bite-sized; Softness: 5; Moisture: 4; Viscosity: 2"}"#;
        let (url, server) = fake_server(vec![reply.into()]);
        let answer = client(&url).estimate_properties("jello", "frame_0.png").unwrap();
        assert_eq!(answer.softness.value(), 5);
        let bodies = server.join().unwrap();
        assert!(bodies[0].contains("frame_0.png"));
    }

    #[test]
    fn unreachable_endpoint_is_backend_error() {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let url = format!("http://{}/", listener.local_addr().unwrap());
        drop(listener);
        assert!(matches!(client(&url).complete("x", ""), Err(Error::Backend(_))));
        let zero = RemoteConfig { endpoint: url, timeout_ms: 0 };
        assert!(RemoteClient::new(&zero).is_err());
    }
}
