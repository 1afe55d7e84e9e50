//! In-memory network and session store.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;
use std::sync::{Arc, Mutex, RwLock};

use cliquetree::{compile, query, BeliefNetwork, CompiledNetwork, EvidenceSet, NetworkDocument, PosteriorReport};
use sha2::{Digest, Sha256};

use crate::error::ApiError;

pub struct NetworkRecord {
    pub id: String,
    /// Document as uploaded, including any layout sidecar.
    pub document: NetworkDocument,
    pub network: Arc<BeliefNetwork>,
    /// SHA-256 of the canonical serialization (layout excluded).
    pub hash: String,
    /// Bumped on every replacement; sessions remember the value they saw.
    pub generation: u64,
    compiled: Option<(String, Arc<CompiledNetwork>)>,
}

impl NetworkRecord {
    fn new(id: String, document: NetworkDocument, generation: u64) -> Result<Self, ApiError> {
        let network = BeliefNetwork::from_document(document.clone())?;
        let hash = content_hash(&network);
        Ok(Self { id, document, network: Arc::new(network), hash, generation, compiled: None })
    }

    /// Compiled template, reusing the cached one while the hash matches.
    pub fn template(&mut self) -> Result<Arc<CompiledNetwork>, ApiError> {
        if let Some((hash, compiled)) = &self.compiled {
            if *hash == self.hash {
                return Ok(Arc::clone(compiled));
            }
        }
        let compiled = Arc::new(compile(&self.network)?);
        self.compiled = Some((self.hash.clone(), Arc::clone(&compiled)));
        Ok(compiled)
    }

    pub fn is_compiled(&self) -> bool {
        self.compiled.as_ref().is_some_and(|(h, _)| *h == self.hash)
    }
}

pub fn content_hash(net: &BeliefNetwork) -> String {
    hex::encode(Sha256::digest(cliquetree::serialize_network(net).as_bytes()))
}

/// Evidence applied to one network. Reports are always recomputed from
/// the template on the accumulated evidence, so they equal a one-shot query.
pub struct SessionRecord {
    pub id: String,
    pub network_id: String,
    pub generation: u64,
    pub template: Arc<CompiledNetwork>,
    /// Every observation accepted so far, batched or propagated.
    pub evidence: EvidenceSet,
    /// Evidence behind `latest`; restored when a propagation turns out to
    /// be impossible.
    pub committed: EvidenceSet,
    pub latest: Option<PosteriorReport>,
}

impl SessionRecord {
    /// Adds observations by label. Contradictions leave the record as is.
    pub fn add(&mut self, labels: &BTreeMap<String, String>) -> Result<(), ApiError> {
        let net = &self.template.network;
        let more = EvidenceSet::from_labels(net, labels.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
        self.evidence = self.evidence.union(&more, net)?;
        Ok(())
    }

    pub fn is_pending(&self) -> bool {
        self.latest.is_none() || self.evidence != self.committed
    }

    /// Propagates the accumulated evidence. On failure the evidence is
    /// reset to `fallback`.
    pub fn propagate_or(&mut self, fallback: EvidenceSet) -> Result<PosteriorReport, ApiError> {
        match query(&self.template, &self.evidence) {
            Ok(report) => {
                self.committed = self.evidence.clone();
                self.latest = Some(report.clone());
                Ok(report)
            }
            Err(err) => {
                self.evidence = fallback;
                Err(err.into())
            }
        }
    }

    pub fn propagate(&mut self) -> Result<PosteriorReport, ApiError> {
        if let (false, Some(latest)) = (self.is_pending(), &self.latest) {
            return Ok(latest.clone());
        }
        self.propagate_or(self.committed.clone())
    }

    /// Drops all evidence and returns the prior marginals.
    pub fn retract(&mut self) -> Result<PosteriorReport, ApiError> {
        self.evidence = EvidenceSet::new();
        self.committed = EvidenceSet::new();
        self.propagate_or(EvidenceSet::new())
    }
}

#[derive(Default)]
struct Inner {
    next_network: u64,
    next_session: u64,
    networks: HashMap<String, NetworkRecord>,
    sessions: HashMap<String, Arc<Mutex<SessionRecord>>>,
}

/// Shared state behind the router. Network records sit behind one lock;
/// each session has its own mutex so requests on a session are serialized
/// without blocking other sessions.
#[derive(Clone, Default)]
pub struct Store {
    inner: Arc<RwLock<Inner>>,
}

impl Store {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create_network(&self, document: NetworkDocument) -> Result<String, ApiError> {
        let mut inner = self.inner.write().expect("store lock");
        inner.next_network += 1;
        let id = format!("n{}", inner.next_network);
        let record = NetworkRecord::new(id.clone(), document, 1)?;
        inner.networks.insert(id.clone(), record);
        Ok(id)
    }

    pub fn replace_network(&self, id: &str, document: NetworkDocument) -> Result<(), ApiError> {
        let mut inner = self.inner.write().expect("store lock");
        let old = inner.networks.get(id).ok_or(ApiError::NotFound)?;
        let mut record = NetworkRecord::new(id.to_string(), document, old.generation + 1)?;
        if record.hash == old.hash {
            record.compiled = old.compiled.clone();
        }
        inner.networks.insert(id.to_string(), record);
        Ok(())
    }

    pub fn with_network<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut NetworkRecord) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let mut inner = self.inner.write().expect("store lock");
        let record = inner.networks.get_mut(id).ok_or(ApiError::NotFound)?;
        f(record)
    }

    pub fn network_ids(&self) -> Vec<String> {
        let inner = self.inner.read().expect("store lock");
        let mut ids: Vec<String> = inner.networks.keys().cloned().collect();
        ids.sort_by_key(|id| id.trim_start_matches('n').parse::<u64>().unwrap_or(u64::MAX));
        ids
    }

    pub fn open_session(&self, network_id: &str) -> Result<String, ApiError> {
        let (template, generation) = self.with_network(network_id, |r| Ok((r.template()?, r.generation)))?;
        let mut inner = self.inner.write().expect("store lock");
        inner.next_session += 1;
        let id = format!("s{}", inner.next_session);
        let record = SessionRecord {
            id: id.clone(),
            network_id: network_id.to_string(),
            generation,
            template,
            evidence: EvidenceSet::new(),
            committed: EvidenceSet::new(),
            latest: None,
        };
        inner.sessions.insert(id.clone(), Arc::new(Mutex::new(record)));
        Ok(id)
    }

    /// Runs `f` on a session whose network has not changed since it was
    /// opened.
    pub fn with_session<T>(
        &self,
        id: &str,
        f: impl FnOnce(&mut SessionRecord) -> Result<T, ApiError>,
    ) -> Result<T, ApiError> {
        let session = {
            let inner = self.inner.read().expect("store lock");
            let session = Arc::clone(inner.sessions.get(id).ok_or(ApiError::NotFound)?);
            let record = session.lock().expect("session lock");
            match inner.networks.get(&record.network_id) {
                Some(network) if network.generation == record.generation => {}
                _ => return Err(ApiError::NetworkChanged),
            }
            drop(record);
            session
        };
        let mut record = session.lock().expect("session lock");
        f(&mut record)
    }

    /// Documents keyed by id, for snapshots.
    pub fn documents(&self) -> BTreeMap<String, NetworkDocument> {
        let inner = self.inner.read().expect("store lock");
        inner.networks.iter().map(|(id, r)| (id.clone(), r.document.clone())).collect()
    }

    pub fn save_snapshot(&self, path: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(&self.documents()).map_err(std::io::Error::other)?;
        std::fs::write(path, text)
    }

    /// Restores networks saved by [`Store::save_snapshot`]. Sessions are not
    /// persisted.
    pub fn load_snapshot(path: &Path) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let text = std::fs::read_to_string(path)?;
        let documents: BTreeMap<String, NetworkDocument> = serde_json::from_str(&text)?;
        let store = Store::new();
        {
            let mut inner = store.inner.write().expect("store lock");
            for (id, document) in documents {
                let n: u64 = id.trim_start_matches('n').parse().unwrap_or(0);
                inner.next_network = inner.next_network.max(n);
                let record = NetworkRecord::new(id.clone(), document, 1).map_err(|e| e.to_string())?;
                inner.networks.insert(id, record);
            }
        }
        Ok(store)
    }
}
