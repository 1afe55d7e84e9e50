//! Brute-force ground truth: enumerate the full joint distribution and sum.
//!
//! Nothing here shares code with the compiler or engine beyond reading CPT
//! entries off the network.

use crate::error::{Error, Result};
use crate::evidence::EvidenceSet;
use crate::network::BeliefNetwork;

/// Default cap on the number of joint cells.
pub const DEFAULT_CELL_CAP: u128 = 1 << 24;

#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    /// Variable indices in topological order; the last varies fastest.
    pub variables: Vec<usize>,
    pub cardinalities: Vec<usize>,
    pub cells: Vec<f64>,
}

impl JointTable {
    pub fn total(&self) -> f64 {
        self.cells.iter().sum()
    }

    /// Calls `f(assignment, probability)` for every cell, with the
    /// assignment indexed by variable.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let n = self.variables.len();
        let mut assignment = vec![0usize; n];
        let mut digits = vec![0usize; n];
        for &p in &self.cells {
            for (d, &var) in self.variables.iter().enumerate() {
                assignment[var] = digits[d];
            }
            f(&assignment, p);
            for d in (0..n).rev() {
                digits[d] += 1;
                if digits[d] < self.cardinalities[d] {
                    break;
                }
                digits[d] = 0;
            }
        }
    }
}

pub fn joint(net: &BeliefNetwork) -> Result<JointTable> {
    joint_with_cap(net, DEFAULT_CELL_CAP)
}

pub fn joint_with_cap(net: &BeliefNetwork, cap: u128) -> Result<JointTable> {
    let variables = net.topological_order();
    let cardinalities: Vec<usize> = variables.iter().map(|&v| net.cardinality(v)).collect();
    let size: u128 = cardinalities.iter().map(|&k| k as u128).product();
    if size > cap {
        return Err(Error::StateSpaceTooLarge { cells: size, cap });
    }
    let mut table = JointTable { variables, cardinalities, cells: vec![0.0; size as usize] };
    let mut values = Vec::with_capacity(size as usize);
    table.for_each(|assignment, _| {
        values.push((0..net.len()).map(|v| net.conditional(v, assignment)).product());
    });
    table.cells = values;
    Ok(table)
}

/// Posterior of every variable (indexed by variable) and `P(e)`.
pub fn oracle_posteriors(net: &BeliefNetwork, joint: &JointTable, ev: &EvidenceSet) -> Result<(Vec<Vec<f64>>, f64)> {
    let observed = ev.resolve(net)?;
    let mut sums: Vec<Vec<f64>> = (0..net.len()).map(|v| vec![0.0; net.cardinality(v)]).collect();
    let mut p_evidence = 0.0;
    joint.for_each(|assignment, p| {
        if observed.iter().all(|&(var, value)| assignment[var] == value) {
            p_evidence += p;
            for (var, sum) in sums.iter_mut().enumerate() {
                sum[assignment[var]] += p;
            }
        }
    });
    if p_evidence <= 0.0 {
        return Err(Error::ImpossibleEvidence);
    }
    for sum in &mut sums {
        sum.iter_mut().for_each(|x| *x /= p_evidence);
    }
    Ok((sums, p_evidence))
}

/// Posterior of one unobserved variable and `P(e)`.
pub fn oracle_posterior(net: &BeliefNetwork, ev: &EvidenceSet, id: &str) -> Result<(Vec<f64>, f64)> {
    let var = net.index_of(id).ok_or_else(|| Error::UnknownVariable(id.to_string()))?;
    let table = joint(net)?;
    let (mut all, p) = oracle_posteriors(net, &table, ev)?;
    Ok((all.swap_remove(var), p))
}
