use std::path::PathBuf;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::graph::DecompositionBudget;
use super::plan::{plan_network, ContractionPlan};
use super::{TensorNetwork, TnError};
use crate::scalar::Real;

/// Environment variable naming the plan-cache directory.
pub const PLAN_CACHE_ENV: &str = "ZZSIM_PLAN_CACHE";

/// Directory of plans keyed by network shape and planner budget.
#[derive(Clone, Debug)]
pub struct PlanCache {
    pub dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Entry<T> {
    key: String,
    value: T,
}

impl PlanCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    /// Cache at `$ZZSIM_PLAN_CACHE`, if set and non-empty.
    pub fn from_env() -> Option<Self> {
        std::env::var_os(PLAN_CACHE_ENV).filter(|v| !v.is_empty()).map(Self::new)
    }

    pub fn key<R: Real>(network: &TensorNetwork<R>, budget: &DecompositionBudget) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        h.update(network.structural_hash());
        h.update(serde_json::to_string(budget).expect("budget serializes"));
        hex::encode(h.finalize())
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(format!("{}.json", &key[..32]))
    }

    /// Entry stored under `key`; a missing, unreadable or colliding file
    /// is a miss.
    pub fn load<T: DeserializeOwned>(&self, key: &str) -> Option<T> {
        let text = std::fs::read_to_string(self.path(key)).ok()?;
        let e: Entry<T> = serde_json::from_str(&text).ok()?;
        (e.key == key).then_some(e.value)
    }

    pub fn store<T: Serialize>(&self, key: &str, value: &T) -> Result<(), TnError> {
        std::fs::create_dir_all(&self.dir).map_err(|e| TnError::Cache(e.to_string()))?;
        let text = serde_json::to_string(&Entry { key: key.to_string(), value }).map_err(|e| TnError::Cache(e.to_string()))?;
        let tmp = self.path(key).with_extension("tmp");
        std::fs::write(&tmp, text).map_err(|e| TnError::Cache(e.to_string()))?;
        std::fs::rename(&tmp, self.path(key)).map_err(|e| TnError::Cache(e.to_string()))
    }
}

/// Plans `network`, reusing a cached plan for an identical shape. Returns
/// the plan and whether it came from the cache.
pub fn plan_cached<R: Real>(
    network: &TensorNetwork<R>,
    budget: &DecompositionBudget,
    cache: Option<&PlanCache>,
) -> Result<(ContractionPlan, bool), TnError> {
    let key = PlanCache::key(network, budget);
    if let Some(plan) = cache.and_then(|c| c.load::<ContractionPlan>(&key)) {
        return Ok((plan, true));
    }
    let (plan, _) = plan_network(network, budget)?;
    if let Some(c) = cache {
        c.store(&key, &plan)?;
    }
    Ok((plan, false))
}
