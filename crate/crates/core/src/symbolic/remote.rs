//! Remote LLM backend for cluster-level hazard estimation: a MetaAgent
//! renders the regime summary, one StateAgent per origin state estimates
//! outgoing hazards concurrently, and the rule oracle backs every failure
//! path so offline runs never stall.

use crate::error::{Error, Result};
use crate::model::StateSpace;
use crate::symbolic::context::ClusterContext;
use crate::symbolic::cost::CostLedger;
use crate::symbolic::prompt::{
    default_meta_template, default_state_template, PromptRole, PromptTemplate,
};
use crate::symbolic::rules::{HazardEntry, RuleTable, SymbolicHazardEstimate};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Mutex;
use std::time::Duration;

/// One outbound chat call.
#[derive(Debug, Clone)]
pub struct ChatCall {
    pub role: PromptRole,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: usize,
}

/// Transport abstraction: returns the assistant's content string. The
/// production implementation speaks HTTPS JSON chat completions; tests plug
/// in deterministic mocks.
pub trait ChatTransport: Send + Sync {
    fn send(&self, call: &ChatCall) -> Result<String>;
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteConfig {
    pub retry_attempts: usize,
    pub backoff_base: Duration,
    pub in_flight_cap: usize,
    pub meta_temperature: f64,
    pub state_temperature: f64,
    pub meta_max_tokens: usize,
    pub state_max_tokens: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        Self {
            retry_attempts: 3,
            backoff_base: Duration::from_millis(500),
            in_flight_cap: 50,
            meta_temperature: 0.3,
            state_temperature: 0.5,
            meta_max_tokens: 1500,
            state_max_tokens: 800,
        }
    }
}

/// Domain strings injected into the prompt templates at runtime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DomainBinding {
    pub name: String,
    pub description: String,
    pub rules_text: String,
}

#[derive(Debug, Deserialize)]
struct StateAgentResponse {
    transitions: Vec<TransitionEstimate>,
}

#[derive(Debug, Deserialize)]
struct TransitionEstimate {
    target_state: String,
    hazard: f64,
    uncertainty: f64,
    #[serde(default)]
    rationale: String,
}

pub struct RemoteSymbolic {
    transport: Box<dyn ChatTransport>,
    pub config: RemoteConfig,
    pub meta_template: PromptTemplate,
    pub state_template: PromptTemplate,
    pub domain: DomainBinding,
    /// Oracle rules used when the remote path fails after retries.
    pub fallback: RuleTable,
}

fn fmt_phi(phi: &[f64], space: &StateSpace) -> String {
    phi.iter()
        .enumerate()
        .map(|(s, f)| format!("{}:{:.4}", space.state_name(s), f))
        .collect::<Vec<_>>()
        .join(" ")
}

fn fmt_psi(ctx: &ClusterContext) -> String {
    if ctx.psi.is_empty() {
        "none".to_string()
    } else {
        ctx.psi
            .iter()
            .map(|s| format!("{}={:.4} (7d mean {:.4})", s.name, s.value, s.trailing_mean))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

impl RemoteSymbolic {
    pub fn new(
        transport: Box<dyn ChatTransport>,
        domain: DomainBinding,
        fallback: RuleTable,
        config: RemoteConfig,
    ) -> Self {
        Self {
            transport,
            config,
            meta_template: default_meta_template(),
            state_template: default_state_template(),
            domain,
            fallback,
        }
    }

    fn send_with_retry(&self, call: &ChatCall) -> Result<String> {
        let mut last_err = None;
        for attempt in 0..self.config.retry_attempts {
            if attempt > 0 {
                std::thread::sleep(self.config.backoff_base * (1 << (attempt - 1)) as u32);
            }
            match self.transport.send(call) {
                Ok(content) => return Ok(content),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| Error::Transport("no attempts made".into())))
    }

    fn common_bindings(&self, ctx: &ClusterContext, space: &StateSpace) -> BTreeMap<String, String> {
        let transitions = space
            .transitions()
            .iter()
            .map(|t| space.transition_key(t))
            .collect::<Vec<_>>()
            .join(", ");
        let mut b = BTreeMap::new();
        b.insert("DOMAIN_NAME".into(), self.domain.name.clone());
        b.insert("DOMAIN_DESCRIPTION".into(), self.domain.description.clone());
        b.insert("DOMAIN_RULES".into(), self.domain.rules_text.clone());
        b.insert(
            "STATE_SET".into(),
            space.states().join(","),
        );
        b.insert("TRANSITION_SET".into(), transitions);
        b.insert("CLUSTER_ID".into(), ctx.cluster_id.to_string());
        b.insert("CLUSTER_SIZE".into(), ctx.size.to_string());
        b.insert("CURRENT_TIMESTEP".into(), ctx.t.to_string());
        b.insert("STATE_DISTRIBUTION".into(), fmt_phi(&ctx.phi, space));
        b.insert(
            "NEIGHBOR_CLUSTER_CONTEXT".into(),
            format!(
                "{} (cross-edge fraction {:.3})",
                fmt_phi(&ctx.psi_nbr.mean_phi, space),
                ctx.psi_nbr.inter_cluster_edge_fraction
            ),
        );
        b.insert("EXTERNAL_CONTEXT".into(), fmt_psi(ctx));
        b
    }

    /// Parses and validates a state agent's JSON content against the origin's
    /// outgoing transitions. Values outside range are clamped and flagged.
    fn parse_state_response(
        &self,
        content: &str,
        origin: usize,
        space: &StateSpace,
    ) -> Result<Vec<((usize, usize), HazardEntry)>> {
        let parsed: StateAgentResponse = serde_json::from_str(content)
            .map_err(|e| Error::Schema(format!("state agent response: {e}")))?;
        let outgoing: Vec<(usize, usize)> = space.outgoing(origin).map(|t| (t.from, t.to)).collect();
        let mut entries = Vec::new();
        for est in &parsed.transitions {
            let target = space
                .state_index(&est.target_state)
                .ok_or_else(|| Error::Schema(format!("unknown target state {}", est.target_state)))?;
            if !outgoing.contains(&(origin, target)) {
                return Err(Error::Schema(format!(
                    "transition {} -> {} not admissible",
                    space.state_name(origin),
                    est.target_state
                )));
            }
            if !est.hazard.is_finite() || !est.uncertainty.is_finite() {
                return Err(Error::Schema("non-finite hazard or uncertainty".into()));
            }
            let clamped = !(0.0..=1.0).contains(&est.hazard) || est.uncertainty < 0.0;
            entries.push((
                (origin, target),
                HazardEntry {
                    hazard: est.hazard.clamp(0.0, 1.0),
                    uncertainty: est.uncertainty.max(0.0),
                    rationale: est.rationale.clone(),
                    clamped,
                    fallback: false,
                },
            ));
        }
        for key in &outgoing {
            if !entries.iter().any(|(k, _)| k == key) {
                return Err(Error::Schema(format!(
                    "missing estimate for {} -> {}",
                    space.state_name(key.0),
                    space.state_name(key.1)
                )));
            }
        }
        Ok(entries)
    }

    /// Full MetaAgent + StateAgent round for one cluster. Exactly
    /// (1 + |origin states|) calls are recorded per invocation; failed
    /// requests fall back to the rule oracle with `fallback = true`.
    pub fn remote_hazards(
        &self,
        ctx: &ClusterContext,
        space: &StateSpace,
        ledger: &Mutex<CostLedger>,
    ) -> Result<SymbolicHazardEstimate> {
        let common = self.common_bindings(ctx, space);

        // MetaAgent first: the regime summary is injected into every
        // StateAgent request.
        let meta_prompt = self.meta_template.render(&common)?;
        let meta_call = ChatCall {
            role: PromptRole::Meta,
            prompt: meta_prompt.clone(),
            temperature: self.config.meta_temperature,
            max_tokens: self.config.meta_max_tokens,
        };
        let (regime_summary, meta_failed) = match self.send_with_retry(&meta_call) {
            Ok(content) => (content, false),
            Err(_) => ("regime summary unavailable".to_string(), true),
        };
        ledger.lock().unwrap().record_call(
            ctx.t,
            PromptRole::Meta,
            meta_prompt.len(),
            regime_summary.len(),
        );

        let origins = space.origin_states();
        // Render all state prompts up front, then issue them concurrently
        // under the in-flight cap. Results are keyed by origin state so
        // completion order never affects the assembled estimate.
        let mut prompts = Vec::new();
        for &origin in &origins {
            let mut b = common.clone();
            b.insert("ORIGIN_STATE".into(), space.state_name(origin).to_string());
            b.insert(
                "OUTGOING_TRANSITIONS".into(),
                space
                    .outgoing(origin)
                    .map(|t| space.transition_key(t))
                    .collect::<Vec<_>>()
                    .join(", "),
            );
            b.insert("REGIME_SUMMARY".into(), regime_summary.clone());
            b.insert(
                "RESPONSE_SCHEMA".into(),
                self.state_template.response_schema.clone(),
            );
            prompts.push((origin, self.state_template.render(&b)?));
        }

        let mut results: BTreeMap<usize, Result<(String, usize)>> = BTreeMap::new();
        for chunk in prompts.chunks(self.config.in_flight_cap.max(1)) {
            let chunk_results: Vec<(usize, Result<String>)> = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|(origin, prompt)| {
                        let origin = *origin;
                        let call = ChatCall {
                            role: PromptRole::State,
                            prompt: prompt.clone(),
                            temperature: self.config.state_temperature,
                            max_tokens: self.config.state_max_tokens,
                        };
                        scope.spawn(move || (origin, self.send_with_retry(&call)))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
            for ((origin, prompt), (o2, result)) in chunk.iter().zip(chunk_results) {
                debug_assert_eq!(*origin, o2);
                results.insert(*origin, result.map(|content| (content, prompt.len())));
            }
        }

        let mut entries = BTreeMap::new();
        for &origin in &origins {
            let (content, prompt_len, failed) = match results.remove(&origin).unwrap() {
                Ok((content, plen)) => (content, plen, false),
                Err(_) => (String::new(), 0, true),
            };
            ledger
                .lock()
                .unwrap()
                .record_call(ctx.t, PromptRole::State, prompt_len, content.len());
            let parsed = if failed || meta_failed {
                None
            } else {
                self.parse_state_response(&content, origin, space).ok()
            };
            match parsed {
                Some(list) => {
                    for (k, v) in list {
                        entries.insert(k, v);
                    }
                }
                None => {
                    // Oracle fallback for every transition out of this origin.
                    for t in space.outgoing(origin) {
                        let rule = self
                            .fallback
                            .rule(t.from, t.to)
                            .ok_or_else(|| Error::MissingRule(space.transition_key(t)))?;
                        let (hazard, rationale) = self.fallback.evaluate_rule(rule, ctx, space)?;
                        entries.insert(
                            (t.from, t.to),
                            HazardEntry {
                                hazard,
                                uncertainty: rule.uncertainty,
                                rationale: format!("oracle fallback: {rationale}"),
                                clamped: false,
                                fallback: true,
                            },
                        );
                    }
                }
            }
        }

        Ok(SymbolicHazardEstimate {
            cluster_id: ctx.cluster_id,
            t: ctx.t,
            entries,
        })
    }
}

/// HTTPS JSON chat-completions transport configured from the environment:
/// `CLUSTERABM_ENDPOINT`, `CLUSTERABM_API_KEY`, `CLUSTERABM_MODEL`.
pub struct HttpChatTransport {
    endpoint: String,
    api_key: String,
    model: String,
    client: reqwest::blocking::Client,
}

impl HttpChatTransport {
    pub fn from_env() -> Result<Self> {
        let endpoint = std::env::var("CLUSTERABM_ENDPOINT")
            .map_err(|_| Error::Transport("CLUSTERABM_ENDPOINT not set".into()))?;
        let api_key = std::env::var("CLUSTERABM_API_KEY")
            .map_err(|_| Error::Transport("CLUSTERABM_API_KEY not set".into()))?;
        let model = std::env::var("CLUSTERABM_MODEL")
            .map_err(|_| Error::Transport("CLUSTERABM_MODEL not set".into()))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(Self {
            endpoint,
            api_key,
            model,
            client,
        })
    }
}

impl ChatTransport for HttpChatTransport {
    fn send(&self, call: &ChatCall) -> Result<String> {
        let body = serde_json::json!({
            "model": self.model,
            "messages": [{"role": "user", "content": call.prompt}],
            "temperature": call.temperature,
            "max_tokens": call.max_tokens,
        });
        let response = self
            .client
            .post(&self.endpoint)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| Error::Transport(e.to_string()))?;
        if !response.status().is_success() {
            return Err(Error::Transport(format!("http status {}", response.status())));
        }
        let parsed: serde_json::Value = response.json().map_err(|e| Error::Transport(e.to_string()))?;
        parsed["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.to_string())
            .ok_or_else(|| Error::Schema("completion content missing".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbolic::context::{ExoSnapshot, NeighborSummary};
    use crate::symbolic::rules::{HazardForm, HazardRule};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn seird_ctx() -> ClusterContext {
        ClusterContext {
            cluster_id: 0,
            t: 3,
            size: 20,
            phi: vec![0.8, 0.1, 0.1, 0.0, 0.0],
            psi: vec![ExoSnapshot {
                name: "stringency".into(),
                value: 0.0,
                trailing_mean: 0.0,
            }],
            psi_nbr: NeighborSummary {
                mean_phi: vec![0.0; 5],
                inter_cluster_edge_fraction: 0.0,
            },
        }
    }

    fn fallback_rules() -> RuleTable {
        RuleTable {
            rules: vec![
                HazardRule::with_default_uncertainty(0, 1, HazardForm::ContactPressure { base: 0.5 }, None),
                HazardRule::with_default_uncertainty(1, 2, HazardForm::Reciprocal { days: 5.0 }, None),
                HazardRule::with_default_uncertainty(2, 3, HazardForm::Reciprocal { days: 10.0 }, None),
                HazardRule::with_default_uncertainty(2, 4, HazardForm::Constant { rate: 0.02 }, None),
            ],
        }
    }

    fn fast_config() -> RemoteConfig {
        RemoteConfig {
            backoff_base: Duration::from_millis(1),
            ..Default::default()
        }
    }

    fn domain() -> DomainBinding {
        DomainBinding {
            name: "epi".into(),
            description: "test".into(),
            rules_text: "none".into(),
        }
    }

    /// Mock answering meta calls with a summary and state calls with valid
    /// JSON covering the origin's outgoing transitions.
    struct HealthyMock;

    impl ChatTransport for HealthyMock {
        fn send(&self, call: &ChatCall) -> Result<String> {
            match call.role {
                PromptRole::Meta => Ok("stable regime".into()),
                PromptRole::State => {
                    // Identify the origin from the prompt text.
                    let origin = call
                        .prompt
                        .lines()
                        .find_map(|l| l.strip_prefix("Your origin state: "))
                        .unwrap()
                        .trim()
                        .to_string();
                    let json = match origin.as_str() {
                        "S" => r#"{"transitions":[{"target_state":"E","hazard":0.1,"uncertainty":0.2,"rationale":"contact"}]}"#,
                        "E" => r#"{"transitions":[{"target_state":"I","hazard":0.2,"uncertainty":0.1,"rationale":"progression"}]}"#,
                        "I" => r#"{"transitions":[{"target_state":"R","hazard":0.1,"uncertainty":0.1,"rationale":"recovery"},{"target_state":"D","hazard":2.0,"uncertainty":-0.5,"rationale":"mortality"}]}"#,
                        other => panic!("unexpected origin {other}"),
                    };
                    Ok(json.to_string())
                }
                PromptRole::Entity => unreachable!(),
            }
        }
    }

    #[test]
    fn records_one_meta_plus_one_call_per_origin_state() {
        let space = StateSpace::seird();
        let remote = RemoteSymbolic::new(Box::new(HealthyMock), domain(), fallback_rules(), fast_config());
        let ledger = Mutex::new(CostLedger::new(1.0, 20, 1).unwrap());
        let est = remote.remote_hazards(&seird_ctx(), &space, &ledger).unwrap();
        let ledger = ledger.into_inner().unwrap();
        // SEIRD has 3 origin states (S, E, I): 1 meta + 3 state calls.
        assert_eq!(ledger.calls_at(3), 4);
        assert_eq!(ledger.calls_by_role(PromptRole::Meta), 1);
        assert_eq!(ledger.calls_by_role(PromptRole::State), 3);
        assert_eq!(est.entries.len(), 4);
        assert!(!est.any_fallback());
    }

    #[test]
    fn out_of_range_values_are_clamped_and_flagged() {
        let space = StateSpace::seird();
        let remote = RemoteSymbolic::new(Box::new(HealthyMock), domain(), fallback_rules(), fast_config());
        let ledger = Mutex::new(CostLedger::new(1.0, 20, 1).unwrap());
        let est = remote.remote_hazards(&seird_ctx(), &space, &ledger).unwrap();
        let entry = est.hazard(2, 4).unwrap();
        assert_eq!(entry.hazard, 1.0);
        assert_eq!(entry.uncertainty, 0.0);
        assert!(entry.clamped);
        assert!(est.any_clamped());
    }

    /// Mock returning malformed content for state agents, counting attempts.
    struct MalformedMock {
        attempts: AtomicUsize,
    }

    impl ChatTransport for MalformedMock {
        fn send(&self, call: &ChatCall) -> Result<String> {
            match call.role {
                PromptRole::Meta => Ok("summary".into()),
                _ => {
                    self.attempts.fetch_add(1, Ordering::SeqCst);
                    Ok("not json at all".into())
                }
            }
        }
    }

    #[test]
    fn malformed_responses_fall_back_to_oracle_values() {
        let space = StateSpace::seird();
        let mock = MalformedMock { attempts: AtomicUsize::new(0) };
        let remote = RemoteSymbolic::new(Box::new(mock), domain(), fallback_rules(), fast_config());
        let ledger = Mutex::new(CostLedger::new(1.0, 20, 1).unwrap());
        let est = remote.remote_hazards(&seird_ctx(), &space, &ledger).unwrap();
        assert!(est.any_fallback());
        // Oracle fallback values: E->I reciprocal over 5 days.
        let e = est.hazard(1, 2).unwrap();
        assert!(e.fallback);
        assert!((e.hazard - 0.2).abs() < 1e-12);
        // S->E: contact pressure 0.5 * infectious fraction 0.1
        let s = est.hazard(0, 1).unwrap();
        assert!((s.hazard - 0.05).abs() < 1e-12);
    }

    /// Transport that always fails, counting attempts to verify retries.
    struct FailingMock {
        attempts: AtomicUsize,
    }

    impl ChatTransport for FailingMock {
        fn send(&self, _call: &ChatCall) -> Result<String> {
            self.attempts.fetch_add(1, Ordering::SeqCst);
            Err(Error::Transport("boom".into()))
        }
    }

    #[test]
    fn transport_failures_retry_then_fall_back() {
        let space = StateSpace::seird();
        let mock = FailingMock { attempts: AtomicUsize::new(0) };
        let remote = RemoteSymbolic::new(Box::new(mock), domain(), fallback_rules(), fast_config());
        let ledger = Mutex::new(CostLedger::new(1.0, 20, 1).unwrap());
        let est = remote.remote_hazards(&seird_ctx(), &space, &ledger).unwrap();
        assert!(est.entries.values().all(|e| e.fallback));
        assert_eq!(est.entries.len(), 4);
    }
}
