//! Per-object contact costs: fixtures, the all-zero ablation and a
//! chat-completion provider with an on-disk response cache.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::scene::Scene;

pub const MIN_COST: i32 = 0;
pub const MAX_COST: i32 = 10;

#[derive(Debug, Error)]
pub enum CostError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse cost fixture: {0}")]
    Parse(String),
    #[error("cost for {0:?} is {1}, outside 0..=10")]
    OutOfRange(String, i64),
    #[error("provider transport failed: {0}")]
    Transport(String),
    #[error("malformed provider response: {0}")]
    Malformed(String),
}

/// Integer contact cost per object; the target is always −1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CostAssignment {
    costs: BTreeMap<String, i32>,
    target: String,
}

impl CostAssignment {
    /// Entries named like the target are ignored; the target is forced to −1.
    pub fn new(
        entries: impl IntoIterator<Item = (String, i32)>,
        target: impl Into<String>,
    ) -> Result<Self, CostError> {
        let target = target.into();
        let mut costs = BTreeMap::new();
        for (name, cost) in entries {
            if name == target {
                continue;
            }
            if !(MIN_COST..=MAX_COST).contains(&cost) {
                return Err(CostError::OutOfRange(name, cost.into()));
            }
            costs.insert(name, cost);
        }
        Ok(Self { costs, target })
    }

    pub fn target(&self) -> &str {
        &self.target
    }

    /// Cost of `name`, −1 for the target, `None` if unassigned.
    pub fn cost(&self, name: &str) -> Option<i32> {
        if name == self.target {
            Some(-1)
        } else {
            self.costs.get(name).copied()
        }
    }

    /// Non-target costs in name order.
    pub fn object_costs(&self) -> &BTreeMap<String, i32> {
        &self.costs
    }

    pub fn len(&self) -> usize {
        self.costs.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fixture-style JSON map including the target at −1.
    pub fn to_json(&self) -> String {
        let mut map: BTreeMap<&str, i32> = self.costs.iter().map(|(k, v)| (k.as_str(), *v)).collect();
        map.insert(&self.target, -1);
        serde_json::to_string_pretty(&map).expect("map serializes")
    }
}

fn parse_cost_map(value: &Value, target: &str) -> Result<CostAssignment, CostError> {
    let obj = value
        .as_object()
        .ok_or_else(|| CostError::Parse("expected a JSON object of name -> integer".into()))?;
    let mut entries = Vec::with_capacity(obj.len());
    for (name, v) in obj {
        if name == target {
            continue;
        }
        let cost = v
            .as_i64()
            .ok_or_else(|| CostError::Parse(format!("cost for {name:?} is not an integer")))?;
        if !(i64::from(MIN_COST)..=i64::from(MAX_COST)).contains(&cost) {
            return Err(CostError::OutOfRange(name.clone(), cost));
        }
        entries.push((name.clone(), cost as i32));
    }
    CostAssignment::new(entries, target)
}

/// Parses a fixture `{ "<name>": int, ... }`.
pub fn parse_fixture(text: &str, target: &str) -> Result<CostAssignment, CostError> {
    let value: Value = serde_json::from_str(text).map_err(|e| CostError::Parse(e.to_string()))?;
    parse_cost_map(&value, target)
}

pub fn load_fixture(path: impl AsRef<Path>, target: &str) -> Result<CostAssignment, CostError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| CostError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_fixture(&text, target)
}

/// Every non-target object at cost 0.
pub fn uniform_zero(scene: &Scene) -> CostAssignment {
    CostAssignment::new(
        scene
            .objects
            .iter()
            .filter(|o| !o.is_target)
            .map(|o| (o.name.clone(), 0)),
        scene.target().name.clone(),
    )
    .expect("zero is in range")
}

const DEFAULT_INSTRUCTIONS: &str = "\
You assign contact costs to objects on a tabletop for a robot arm that may \
touch or push objects while reaching a target. For each listed object give an \
integer cost from 0 to 10. A higher cost means the object tolerates contact \
less: fragile, valuable, liquid-filled, tall and easy to topple, or likely to \
damage nearby objects when moved. A lower cost means contact is acceptable: \
soft, sturdy, light and easy to slide, or standing clear of fragile neighbors. \
Consider what is next to each object. Do not rate the target object. Reply \
with only a JSON dictionary mapping each object number to its cost.";

/// Task-agnostic instruction text plus the per-scene object list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub instructions: String,
}

impl Default for PromptTemplate {
    fn default() -> Self {
        Self {
            instructions: DEFAULT_INSTRUCTIONS.to_string(),
        }
    }
}

impl PromptTemplate {
    pub fn render(&self, description: &SceneDescription) -> String {
        let mut out = String::from("Objects in the scene:\n");
        for item in &description.items {
            out.push_str(&format!("{}. {} ({})\n", item.index, item.name, item.location));
        }
        out.push_str(&format!("Target: {}\n", description.target));
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DescribedObject {
    pub index: usize,
    pub name: String,
    pub location: String,
}

/// Textual stand-in for the annotated scene image: numbered non-target
/// objects with coarse tabletop locations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SceneDescription {
    pub items: Vec<DescribedObject>,
    pub target: String,
}

impl SceneDescription {
    pub fn from_scene(scene: &Scene) -> Self {
        let coarse = |v: f64, extent: f64, lo: &'static str, mid: &'static str, hi: &'static str| {
            let t = v / extent;
            if t < 1.0 / 3.0 {
                lo
            } else if t < 2.0 / 3.0 {
                mid
            } else {
                hi
            }
        };
        let items = scene
            .objects
            .iter()
            .filter(|o| !o.is_target)
            .enumerate()
            .map(|(k, o)| {
                let c = o.position();
                let row = coarse(c.y, scene.workspace.h, "near", "middle", "far");
                let col = coarse(c.x, scene.workspace.w, "left", "center", "right");
                DescribedObject {
                    index: k + 1,
                    name: o.name.clone(),
                    location: format!("{row} {col}"),
                }
            })
            .collect();
        Self {
            items,
            target: scene.target().name.clone(),
        }
    }

    fn name_for_key(&self, key: &str) -> Option<&str> {
        let key = key.trim();
        if let Ok(idx) = key.parse::<usize>() {
            return self.items.iter().find(|i| i.index == idx).map(|i| i.name.as_str());
        }
        self.items.iter().find(|i| i.name == key).map(|i| i.name.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VlmConfig {
    /// Chat-completions URL.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token.
    pub api_key_env: String,
    pub cache_dir: PathBuf,
    pub timeout_secs: u64,
    /// Forbid network access; only cached responses are served.
    pub offline: bool,
}

impl Default for VlmConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            cache_dir: PathBuf::from(".contactplan-cache"),
            timeout_secs: 60,
            offline: false,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    model: String,
    prompt: String,
    response: String,
}

/// Cache key over everything that determines the reply.
pub fn cache_key(config: &VlmConfig, template: &PromptTemplate, description: &SceneDescription) -> String {
    let mut h = Sha256::new();
    h.update(config.model.as_bytes());
    h.update([0]);
    h.update(template.instructions.as_bytes());
    h.update([0]);
    h.update(template.render(description).as_bytes());
    hex::encode(h.finalize())
}

/// Extracts the first JSON object from a chat reply, tolerating code fences
/// and surrounding prose.
fn extract_json_object(reply: &str) -> Option<&str> {
    let start = reply.find('{')?;
    let end = reply.rfind('}')?;
    (end > start).then(|| &reply[start..=end])
}

/// Validates a provider reply against the described objects. Every object
/// must be present with an integer in 0..=10; nothing is clamped.
pub fn parse_vlm_reply(reply: &str, description: &SceneDescription) -> Result<CostAssignment, CostError> {
    let body = extract_json_object(reply).ok_or_else(|| CostError::Malformed("no JSON object in reply".into()))?;
    let value: Value = serde_json::from_str(body).map_err(|e| CostError::Malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CostError::Malformed("reply is not a JSON object".into()))?;
    let mut entries: BTreeMap<String, i32> = BTreeMap::new();
    for (key, v) in obj {
        let Some(name) = description.name_for_key(key) else {
            if key.trim() == description.target {
                continue;
            }
            return Err(CostError::Malformed(format!("unknown object key {key:?}")));
        };
        let cost = v
            .as_i64()
            .ok_or_else(|| CostError::Malformed(format!("cost for {name:?} is not an integer")))?;
        if !(i64::from(MIN_COST)..=i64::from(MAX_COST)).contains(&cost) {
            return Err(CostError::OutOfRange(name.to_string(), cost));
        }
        entries.insert(name.to_string(), cost as i32);
    }
    for item in &description.items {
        if !entries.contains_key(&item.name) {
            return Err(CostError::Malformed(format!("missing object {:?}", item.name)));
        }
    }
    CostAssignment::new(entries, description.target.clone())
}

/// Blocking chat-completion client with a JSON sidecar cache per scene.
pub struct VlmClient {
    config: VlmConfig,
    template: PromptTemplate,
}

impl VlmClient {
    pub fn new(config: VlmConfig, template: PromptTemplate) -> Self {
        Self { config, template }
    }

    fn cache_path(&self, key: &str) -> PathBuf {
        self.config.cache_dir.join(format!("{key}.json"))
    }

    /// Raw reply text, from cache when available.
    pub fn raw_reply(&self, description: &SceneDescription) -> Result<String, CostError> {
        let key = cache_key(&self.config, &self.template, description);
        let path = self.cache_path(&key);
        if let Ok(text) = std::fs::read_to_string(&path) {
            if let Ok(entry) = serde_json::from_str::<CacheEntry>(&text) {
                log::debug!("cost reply served from cache {}", path.display());
                return Ok(entry.response);
            }
        }
        if self.config.offline {
            return Err(CostError::Transport("offline mode and no cached reply".into()));
        }
        let prompt = self.template.render(description);
        let response = self.post(&prompt)?;
        std::fs::create_dir_all(&self.config.cache_dir).map_err(|source| CostError::Io {
            path: self.config.cache_dir.display().to_string(),
            source,
        })?;
        let entry = CacheEntry {
            model: self.config.model.clone(),
            prompt,
            response: response.clone(),
        };
        std::fs::write(&path, serde_json::to_string_pretty(&entry).expect("entry serializes")).map_err(
            |source| CostError::Io {
                path: path.display().to_string(),
                source,
            },
        )?;
        Ok(response)
    }

    fn post(&self, prompt: &str) -> Result<String, CostError> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(self.config.timeout_secs)))
            .build()
            .into();
        let body = json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": self.template.instructions},
                {"role": "user", "content": prompt},
            ],
        });
        let mut req = agent.post(&self.config.endpoint);
        if let Ok(key) = std::env::var(&self.config.api_key_env) {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| CostError::Transport(e.to_string()))?;
        let value: Value = resp
            .body_mut()
            .read_json()
            .map_err(|e| CostError::Malformed(e.to_string()))?;
        value
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| CostError::Malformed("reply has no choices[0].message.content".into()))
    }

    pub fn query(&self, scene: &Scene) -> Result<CostAssignment, CostError> {
        let description = SceneDescription::from_scene(scene);
        let reply = self.raw_reply(&description)?;
        parse_vlm_reply(&reply, &description)
    }
}

/// Convenience wrapper over [`VlmClient::query`].
pub fn query_vlm(config: &VlmConfig, template: &PromptTemplate, scene: &Scene) -> Result<CostAssignment, CostError> {
    VlmClient::new(config.clone(), template.clone()).query(scene)
}
