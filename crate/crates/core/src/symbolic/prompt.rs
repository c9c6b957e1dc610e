//! Prompt templates with `{PLACEHOLDER}` substitution.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PromptRole {
    Meta,
    State,
    Entity,
}

impl PromptRole {
    pub fn as_str(&self) -> &'static str {
        match self {
            PromptRole::Meta => "meta",
            PromptRole::State => "state",
            PromptRole::Entity => "entity",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub role: PromptRole,
    pub text: String,
    /// Human-readable description of the expected structured response.
    pub response_schema: String,
}

/// Byte-deterministic substitution of `{NAME}` placeholders. Placeholder
/// names are upper-snake identifiers; any unbound placeholder is an error, so
/// no placeholder braces survive rendering.
pub fn render_prompt(template: &str, bindings: &BTreeMap<String, String>) -> Result<String> {
    let mut out = String::with_capacity(template.len());
    let bytes = template.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            // find closing brace
            let rest = &template[i + 1..];
            if let Some(end) = rest.find('}') {
                let name = &rest[..end];
                let is_placeholder = !name.is_empty()
                    && name
                        .chars()
                        .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
                if is_placeholder {
                    match bindings.get(name) {
                        Some(value) => {
                            out.push_str(value);
                            i += name.len() + 2;
                            continue;
                        }
                        None => return Err(Error::UnboundPlaceholder(name.to_string())),
                    }
                }
            }
        }
        // advance one UTF-8 character
        let ch_len = template[i..].chars().next().map(|c| c.len_utf8()).unwrap_or(1);
        out.push_str(&template[i..i + ch_len]);
        i += ch_len;
    }
    Ok(out)
}

impl PromptTemplate {
    pub fn render(&self, bindings: &BTreeMap<String, String>) -> Result<String> {
        render_prompt(&self.text, bindings)
    }
}

/// Default meta-agent template: summarizes cluster regime state for the
/// state-specialized agents. All fields are injected at runtime.
pub fn default_meta_template() -> PromptTemplate {
    PromptTemplate {
        role: PromptRole::Meta,
        text: "\
You coordinate cluster-level state-transition inference for the domain {DOMAIN_NAME}.
Domain description: {DOMAIN_DESCRIPTION}
Latent state set: {STATE_SET}
Admissible transitions: {TRANSITION_SET}
Domain rules and priors: {DOMAIN_RULES}
Cluster: {CLUSTER_ID} with {CLUSTER_SIZE} member agents.
Timestep: {CURRENT_TIMESTEP}
Current state composition (fractions): {STATE_DISTRIBUTION}
Neighboring-cluster composition: {NEIGHBOR_CLUSTER_CONTEXT}
External context signals: {EXTERNAL_CONTEXT}

Condition only on information available up to timestep {CURRENT_TIMESTEP}.
Write a short regime summary for this cluster: the dominant dynamics, any
regime shift indicated by the external signals, and pressure from neighboring
clusters. Keep it under 120 words and do not estimate hazards yourself; the
state-specialized agents will.
"
        .to_string(),
        response_schema: "plain text regime summary".to_string(),
    }
}

/// Default state-agent template: per-origin-state hazard estimation with a
/// strict JSON response schema.
pub fn default_state_template() -> PromptTemplate {
    PromptTemplate {
        role: PromptRole::State,
        text: "\
You estimate per-day transition hazards out of one latent state for the
domain {DOMAIN_NAME}.
Latent state set: {STATE_SET}
Your origin state: {ORIGIN_STATE}
Admissible outgoing transitions: {OUTGOING_TRANSITIONS}
Domain rules and priors: {DOMAIN_RULES}
Cluster: {CLUSTER_ID} with {CLUSTER_SIZE} member agents.
Timestep: {CURRENT_TIMESTEP}
Current state composition (fractions): {STATE_DISTRIBUTION}
Regime summary from the coordinating agent: {REGIME_SUMMARY}
Neighboring-cluster composition: {NEIGHBOR_CLUSTER_CONTEXT}
External context signals: {EXTERNAL_CONTEXT}

Treat outgoing transitions as competing risks and estimate each hazard
independently on a per-day probability scale in [0, 1]. Condition only on
information available up to timestep {CURRENT_TIMESTEP}.
Respond with JSON only, matching:
{RESPONSE_SCHEMA}
"
        .to_string(),
        response_schema: "{\"transitions\": [{\"target_state\": \"<state>\", \"hazard\": <0..1>, \"uncertainty\": <float >= 0>, \"rationale\": \"<short text>\"}]}"
            .to_string(),
    }
}

/// Default entity-agent template (trace collection / sparse entity reasoning).
pub fn default_entity_template() -> PromptTemplate {
    PromptTemplate {
        role: PromptRole::Entity,
        text: "\
You realize individual state transitions inside the domain {DOMAIN_NAME}.
Entity id: {ENTITY_ID}
Entity profile: {ENTITY_PROFILE}
Latent state set: {STATE_SET}
Current state: {CURRENT_STATE}
Admissible outgoing transitions: {OUTGOING_TRANSITIONS}
Cluster: {CLUSTER_ID}
Cluster-level transition hazards: {CLUSTER_PROBABILITIES}
Neighborhood context: {NEIGHBOR_CONTEXT}
External context signals: {EXTERNAL_CONTEXT}
Operating mode: {MODE}
Timestep: {CURRENT_TIMESTEP}

Do not re-estimate population hazards. Combine the cluster-level hazards with
your profile and neighborhood context, treat multiple outcomes as competing
risks, and report the outcome. Respond with JSON only, matching:
{RESPONSE_SCHEMA}
"
        .to_string(),
        response_schema: "{\"previous_state\": \"<state>\", \"next_state\": \"<state>\", \"transitioned\": <bool>, \"sampled_probability\": <0..1>, \"rationale\": \"<short text>\"}"
            .to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bind(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    #[test]
    fn substitutes_bound_placeholder() {
        let out = render_prompt("state set: {STATE_SET}", &bind(&[("STATE_SET", "S,E,I,R,D")])).unwrap();
        assert_eq!(out, "state set: S,E,I,R,D");
    }

    #[test]
    fn missing_binding_names_the_placeholder() {
        let err = render_prompt("{STATE_SET}", &BTreeMap::new()).unwrap_err();
        assert!(err.to_string().contains("STATE_SET"), "{err}");
    }

    #[test]
    fn non_placeholder_braces_pass_through() {
        let out = render_prompt("json: {\"a\": 1} and {x}", &BTreeMap::new()).unwrap();
        assert_eq!(out, "json: {\"a\": 1} and {x}");
    }

    #[test]
    fn full_meta_template_renders_without_residual_placeholders() {
        let t = default_meta_template();
        let bindings = bind(&[
            ("DOMAIN_NAME", "epidemiology"),
            ("DOMAIN_DESCRIPTION", "SEIRD dynamics over a contact network"),
            ("STATE_SET", "S,E,I,R,D"),
            ("TRANSITION_SET", "S->E, E->I, I->R, I->D"),
            ("DOMAIN_RULES", "contact-driven exposure; fixed incubation"),
            ("CLUSTER_ID", "2"),
            ("CLUSTER_SIZE", "250"),
            ("CURRENT_TIMESTEP", "14"),
            ("STATE_DISTRIBUTION", "S:0.97 E:0.02 I:0.01"),
            ("NEIGHBOR_CLUSTER_CONTEXT", "S:0.95 E:0.03 I:0.02 (cross-edge fraction 0.12)"),
            ("EXTERNAL_CONTEXT", "stringency=0.0 (7d mean 0.0)"),
        ]);
        let rendered = t.render(&bindings).unwrap();
        // No placeholder-shaped tokens survive.
        for part in rendered.split('{').skip(1) {
            let inner: String = part.chars().take_while(|&c| c != '}').collect();
            let looks_like_placeholder = !inner.is_empty()
                && inner
                    .chars()
                    .all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_');
            assert!(!looks_like_placeholder, "unresolved placeholder {{{inner}}}");
        }
    }
}
