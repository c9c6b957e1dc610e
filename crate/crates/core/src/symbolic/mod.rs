//! Symbolic hazard pathway: cluster context assembly, the deterministic rule
//! oracle, the remote MetaAgent/StateAgent team, prompt templating, and cost
//! accounting.

pub mod backend;
pub mod context;
pub mod cost;
pub mod prompt;
pub mod remote;
pub mod rules;

pub use backend::{cosine, logistic, BehaviorBackend, BehaviorDim, ContextProbe, OracleBehavior};
pub use context::{assemble_all_contexts, assemble_context, ClusterContext, ExoSnapshot, NeighborSummary};
pub use cost::{estimate_tokens, summarize_cost, CostLedger, CostModel, CostReport};
pub use prompt::{render_prompt, PromptRole, PromptTemplate};
pub use remote::{ChatCall, ChatTransport, DomainBinding, HttpChatTransport, RemoteConfig, RemoteSymbolic};
pub use rules::{
    HazardEntry, HazardForm, HazardRule, PolicyEffect, RuleTable, SymbolicHazardEstimate,
};
