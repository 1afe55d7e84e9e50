use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::BeliefNetwork;

/// Observed variables, keyed by id, with the index of the observed value.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EvidenceSet {
    assignments: BTreeMap<String, usize>,
}

impl EvidenceSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, id: impl Into<String>, value: usize) -> Self {
        self.assignments.insert(id.into(), value);
        self
    }

    /// Records an observation, replacing any earlier one for `id`.
    pub fn set(&mut self, id: impl Into<String>, value: usize) {
        self.assignments.insert(id.into(), value);
    }

    /// Builds evidence from `(id, value label)` pairs.
    pub fn from_labels<'a>(net: &BeliefNetwork, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut ev = Self::new();
        for (id, label) in pairs {
            let var = net.index_of(id).ok_or_else(|| Error::UnknownVariable(id.to_string()))?;
            let value = net
                .variable(var)
                .value_index(label)
                .ok_or_else(|| Error::UnknownValue { variable: id.to_string(), value: label.to_string() })?;
            if let Some(&existing) = ev.assignments.get(id) {
                if existing != value {
                    return Err(contradiction(net, var, existing, value));
                }
            }
            ev.set(id, value);
        }
        Ok(ev)
    }

    pub fn get(&self, id: &str) -> Option<usize> {
        self.assignments.get(id).copied()
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, usize)> {
        self.assignments.iter().map(|(k, v)| (k.as_str(), *v))
    }

    /// `(variable index, value index)` pairs, checked against `net`.
    pub fn resolve(&self, net: &BeliefNetwork) -> Result<Vec<(usize, usize)>> {
        self.assignments
            .iter()
            .map(|(id, &value)| {
                let var = net.index_of(id).ok_or_else(|| Error::UnknownVariable(id.clone()))?;
                if value >= net.cardinality(var) {
                    return Err(Error::UnknownValue { variable: id.clone(), value: value.to_string() });
                }
                Ok((var, value))
            })
            .collect()
    }

    /// Union of two consistent evidence sets.
    pub fn union(&self, other: &EvidenceSet, net: &BeliefNetwork) -> Result<EvidenceSet> {
        let mut out = self.clone();
        for (id, value) in other.iter() {
            match out.get(id) {
                Some(existing) if existing != value => {
                    let var = net.index_of(id).ok_or_else(|| Error::UnknownVariable(id.to_string()))?;
                    return Err(contradiction(net, var, existing, value));
                }
                _ => out.set(id, value),
            }
        }
        Ok(out)
    }
}

pub(crate) fn contradiction(net: &BeliefNetwork, var: usize, existing: usize, requested: usize) -> Error {
    let v = net.variable(var);
    Error::ContradictoryEvidence {
        variable: v.id.clone(),
        existing: v.values[existing].clone(),
        requested: v.values[requested].clone(),
    }
}
