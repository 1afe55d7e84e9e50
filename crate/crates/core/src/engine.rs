//! Evidence absorption and two-phase propagation over a compiled forest.
//!
//! A session owns a working copy of the template forest. Evidence is
//! absorbed by deleting incompatible cells from every clique and separator
//! that mentions the observed variable (or, in [`AbsorptionMode::Zeroing`],
//! by zeroing them in place). Propagation is a collect pass toward each root
//! followed by a distribute pass back out. New evidence on a calibrated
//! session is applied to the working forest directly; the template is only
//! copied when the session is created or retracted.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::{Duration, Instant};

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::compiler::CompiledNetwork;
use crate::error::{Error, Result};
use crate::evidence::{contradiction, EvidenceSet};
use crate::network::BeliefNetwork;
use crate::potential::PotentialTable;

/// Evidence probabilities at or below this are treated as impossible.
pub const IMPOSSIBLE_EVIDENCE_THRESHOLD: f64 = 1e-300;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AbsorptionMode {
    /// Incompatible cells are deleted and tables repacked.
    #[default]
    Removal,
    /// Incompatible cells are set to zero; table shapes never change.
    Zeroing,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationCounters {
    /// Cells scanned while applying evidence.
    pub checks: u64,
    /// Cells touched by message passing: sender cells marginalized plus
    /// receiver cells multiplied, per message.
    pub cells_sent: u64,
}

/// Per-clique breakdown of the work counted in [`OperationCounters`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CliqueCounters {
    pub checks: u64,
    /// Cells of this clique marginalized while it sent messages.
    pub cells_marginalized: u64,
    /// Cells of this clique multiplied while it received messages.
    pub cells_multiplied: u64,
}

impl CliqueCounters {
    /// Steps spent updating this clique: the consistency scan plus the
    /// messages it sends to its parent and children.
    pub fn update_steps(&self) -> u64 {
        self.checks + self.cells_marginalized
    }
}

/// Analytic step count for updating one clique after evidence on one of its
/// variables: the consistency scan plus one message to the parent and one to
/// each child.
pub fn count_update_operations(cardinalities: &[usize], observed: usize, children: usize, mode: AbsorptionMode) -> u64 {
    let cells: u64 = cardinalities.iter().map(|&k| k as u64).product();
    let message = match mode {
        AbsorptionMode::Removal => cells / cardinalities[observed] as u64,
        AbsorptionMode::Zeroing => cells,
    };
    cells + message * (1 + children as u64)
}

/// Posterior marginals for every variable plus the evidence likelihood.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorReport {
    /// Observed variables mapped to their observed value labels.
    pub evidence: IndexMap<String, String>,
    pub p_evidence: f64,
    pub posteriors: IndexMap<String, Vec<f64>>,
    pub counters: OperationCounters,
    pub elapsed_us: u64,
}

#[derive(Clone, Debug)]
pub struct InferenceSession {
    template: Arc<CompiledNetwork>,
    mode: AbsorptionMode,
    cliques: Vec<PotentialTable>,
    separators: Vec<Option<PotentialTable>>,
    evidence: BTreeMap<usize, usize>,
    /// Evidence absorbed since the last successful propagation.
    dirty: bool,
    p_evidence: Option<f64>,
    counters: OperationCounters,
    clique_counters: Vec<CliqueCounters>,
    template_copies: u64,
}

impl InferenceSession {
    pub fn new(template: Arc<CompiledNetwork>) -> Self {
        Self::with_mode(template, AbsorptionMode::Removal)
    }

    pub fn with_mode(template: Arc<CompiledNetwork>, mode: AbsorptionMode) -> Self {
        let forest = &template.forest;
        let cliques = forest.cliques().iter().map(|c| c.potential.clone()).collect();
        let separators = forest.separators().to_vec();
        let n = forest.len();
        Self {
            template,
            mode,
            cliques,
            separators,
            evidence: BTreeMap::new(),
            dirty: true,
            p_evidence: None,
            counters: OperationCounters::default(),
            clique_counters: vec![CliqueCounters::default(); n],
            template_copies: 1,
        }
    }

    pub fn template(&self) -> &Arc<CompiledNetwork> {
        &self.template
    }

    pub fn network(&self) -> &BeliefNetwork {
        &self.template.network
    }

    pub fn mode(&self) -> AbsorptionMode {
        self.mode
    }

    pub fn counters(&self) -> OperationCounters {
        self.counters
    }

    pub fn clique_counters(&self, clique: usize) -> CliqueCounters {
        self.clique_counters[clique]
    }

    /// How many times the working forest has been copied from the template.
    pub fn template_copies(&self) -> u64 {
        self.template_copies
    }

    pub fn is_calibrated(&self) -> bool {
        !self.dirty
    }

    /// Evidence likelihood from the last successful propagation.
    pub fn p_evidence(&self) -> Option<f64> {
        self.p_evidence
    }

    pub fn clique_potential(&self, clique: usize) -> &PotentialTable {
        &self.cliques[clique]
    }

    pub fn separator_potential(&self, clique: usize) -> Option<&PotentialTable> {
        self.separators[clique].as_ref()
    }

    /// Cells currently held by all cliques.
    pub fn clique_cells(&self) -> usize {
        self.cliques.iter().map(PotentialTable::len).sum()
    }

    /// Cells currently held by all cliques and separators.
    pub fn working_cells(&self) -> usize {
        self.clique_cells() + self.separators.iter().flatten().map(PotentialTable::len).sum::<usize>()
    }

    pub fn evidence(&self) -> EvidenceSet {
        let net = self.network();
        self.evidence.iter().fold(EvidenceSet::new(), |ev, (&var, &value)| ev.with(net.variable(var).id.clone(), value))
    }

    /// Restricts the working forest to `ev`. Observations already applied
    /// with the same value are skipped; a different value is an error and
    /// leaves the session untouched.
    pub fn absorb_evidence(&mut self, ev: &EvidenceSet) -> Result<()> {
        let resolved = ev.resolve(&self.template.network)?;
        for &(var, value) in &resolved {
            if let Some(&existing) = self.evidence.get(&var) {
                if existing != value {
                    return Err(contradiction(&self.template.network, var, existing, value));
                }
            }
        }
        for (var, value) in resolved {
            if self.evidence.insert(var, value).is_some() {
                continue;
            }
            self.dirty = true;
            for (c, table) in self.cliques.iter_mut().enumerate() {
                let scanned = apply(self.mode, table, var, value) as u64;
                self.clique_counters[c].checks += scanned;
                self.counters.checks += scanned;
            }
            for table in self.separators.iter_mut().flatten() {
                self.counters.checks += apply(self.mode, table, var, value) as u64;
            }
        }
        Ok(())
    }

    /// Collect toward every root, then distribute back out. Returns the
    /// evidence likelihood, read off the root masses between the two passes.
    pub fn propagate(&mut self) -> Result<f64> {
        if !self.dirty {
            if let Some(p) = self.p_evidence {
                return Ok(p);
            }
        }
        let template = Arc::clone(&self.template);
        let forest = &template.forest;
        let n = forest.len();

        // Parents always precede children, so index order is a valid
        // top-down schedule and its reverse a valid bottom-up one.
        for child in (0..n).rev() {
            if let Some(parent) = forest.parent(child) {
                self.pass(child, parent, child);
            }
        }
        let p_evidence: f64 = forest.roots().iter().map(|&r| self.cliques[r].sum()).product();
        if p_evidence <= IMPOSSIBLE_EVIDENCE_THRESHOLD {
            self.p_evidence = None;
            return Err(Error::ImpossibleEvidence);
        }
        for child in 0..n {
            if let Some(parent) = forest.parent(child) {
                self.pass(parent, child, child);
            }
        }

        self.dirty = false;
        self.p_evidence = Some(p_evidence);
        Ok(p_evidence)
    }

    /// Sends one message from `from` to `to` through the separator stored
    /// under clique index `separator`.
    fn pass(&mut self, from: usize, to: usize, separator: usize) {
        let old = self.separators[separator].take().expect("non-root clique has a separator");
        let message = self.cliques[from].marginalize(old.scope());
        self.cliques[to].absorb_ratio(&message, &old);

        let sent = self.cliques[from].len() as u64;
        let received = self.cliques[to].len() as u64;
        self.clique_counters[from].cells_marginalized += sent;
        self.clique_counters[to].cells_multiplied += received;
        self.counters.cells_sent += sent + received;
        self.separators[separator] = Some(message);
    }

    fn require_calibrated(&self) -> Result<()> {
        if self.dirty {
            return Err(Error::NotPropagated);
        }
        Ok(())
    }

    /// Normalized posterior of `id`, read from its home clique.
    pub fn marginal(&self, id: &str) -> Result<Vec<f64>> {
        let var = self.network().index_of(id).ok_or_else(|| Error::UnknownVariable(id.to_string()))?;
        self.marginal_in_clique(var, self.template.forest.home_clique(var))
    }

    /// Posterior of variable `var` computed from a specific clique that
    /// contains it.
    pub fn marginal_in_clique(&self, var: usize, clique: usize) -> Result<Vec<f64>> {
        self.require_calibrated()?;
        let card = self.network().cardinality(var);
        if let Some(&value) = self.evidence.get(&var) {
            let mut degenerate = vec![0.0; card];
            degenerate[value] = 1.0;
            return Ok(degenerate);
        }
        let mut dist = self.cliques[clique].marginal_of(var, card);
        let total: f64 = dist.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleEvidence);
        }
        dist.iter_mut().for_each(|p| *p /= total);
        Ok(dist)
    }

    /// Posterior report for every variable in declaration order.
    pub fn report(&self, elapsed: Duration) -> Result<PosteriorReport> {
        self.require_calibrated()?;
        let net = self.network();
        let evidence = self
            .evidence
            .iter()
            .map(|(&var, &value)| {
                let v = net.variable(var);
                (v.id.clone(), v.values[value].clone())
            })
            .collect();
        let mut posteriors = IndexMap::with_capacity(net.len());
        for (var, v) in net.variables().iter().enumerate() {
            posteriors.insert(v.id.clone(), self.marginal_in_clique(var, self.template.forest.home_clique(var))?);
        }
        Ok(PosteriorReport {
            evidence,
            p_evidence: self.p_evidence.expect("calibrated session has a likelihood"),
            posteriors,
            counters: self.counters,
            elapsed_us: elapsed.as_micros() as u64,
        })
    }

    /// Absorbs `more` into the already calibrated working forest and
    /// re-propagates, without going back to the template.
    pub fn add_evidence_incremental(&mut self, more: &EvidenceSet) -> Result<PosteriorReport> {
        let start = Instant::now();
        self.absorb_evidence(more)?;
        self.propagate()?;
        self.report(start.elapsed())
    }

    /// Drops all evidence by resetting the working forest to the template.
    pub fn retract_all(&mut self) {
        if self.evidence.is_empty() {
            return;
        }
        let forest = &self.template.forest;
        self.cliques = forest.cliques().iter().map(|c| c.potential.clone()).collect();
        self.separators = forest.separators().to_vec();
        self.evidence.clear();
        self.dirty = true;
        self.p_evidence = None;
        self.template_copies += 1;
    }
}

fn apply(mode: AbsorptionMode, table: &mut PotentialTable, var: usize, value: usize) -> usize {
    match mode {
        AbsorptionMode::Removal => table.restrict(var, value),
        AbsorptionMode::Zeroing => table.zero_out(var, value),
    }
}

/// Fresh session, absorb, propagate, report.
pub fn query(template: &Arc<CompiledNetwork>, ev: &EvidenceSet) -> Result<PosteriorReport> {
    query_with_mode(template, ev, AbsorptionMode::Removal)
}

pub fn query_with_mode(
    template: &Arc<CompiledNetwork>,
    ev: &EvidenceSet,
    mode: AbsorptionMode,
) -> Result<PosteriorReport> {
    let start = Instant::now();
    let mut session = InferenceSession::with_mode(Arc::clone(template), mode);
    session.absorb_evidence(ev)?;
    session.propagate()?;
    session.report(start.elapsed())
}
