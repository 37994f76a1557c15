//! Brute-force ground truth: exhaustive enumeration of satisfying assignments
//! and exact Min-CSP optima for small instances. Deliberately simple — every
//! other solver in the crate is checked against this one.

use thiserror::Error;

use crate::instance::{assignment_string, Instance, Label};
use crate::util::binomial;

/// Default cap on the assignment search space.
pub const DEFAULT_SPACE_CAP: u64 = 1 << 24;

/// Deduplicated, lexicographically sorted set of full satisfying assignments.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct SolutionSet {
    assignments: Vec<Vec<Label>>,
}

impl SolutionSet {
    pub fn from_assignments(mut assignments: Vec<Vec<Label>>) -> Self {
        assignments.sort();
        assignments.dedup();
        SolutionSet { assignments }
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[Label]> {
        self.assignments.iter().map(|a| a.as_slice())
    }

    pub fn contains(&self, assignment: &[Label]) -> bool {
        self.assignments
            .binary_search_by(|a| a.as_slice().cmp(assignment))
            .is_ok()
    }

    /// One n-character label string per line, already in sorted order.
    pub fn lines(&self) -> Vec<String> {
        self.assignments
            .iter()
            .map(|a| assignment_string(a))
            .collect()
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum OracleError {
    #[error("search space of {space} assignments exceeds the cap of {cap}")]
    SearchSpaceTooLarge { space: u64, cap: u64 },
}

/// Iterates all assignments over the instance's label sets in lexicographic
/// order. Variables with empty label sets make the space empty.
struct AssignmentSweep {
    domains: Vec<Vec<Label>>,
    current: Option<Vec<usize>>,
}

impl AssignmentSweep {
    fn new(inst: &Instance, cap: u64) -> Result<Self, OracleError> {
        let domains: Vec<Vec<Label>> = inst
            .label_sets()
            .iter()
            .map(|s| s.iter().collect())
            .collect();
        let mut space: u64 = 1;
        for d in &domains {
            space = space.saturating_mul(d.len() as u64);
        }
        if space > cap {
            return Err(OracleError::SearchSpaceTooLarge { space, cap });
        }
        let current = if domains.iter().all(|d| !d.is_empty()) {
            Some(vec![0; domains.len()])
        } else {
            None
        };
        Ok(AssignmentSweep { domains, current })
    }
}

impl Iterator for AssignmentSweep {
    type Item = Vec<Label>;

    fn next(&mut self) -> Option<Vec<Label>> {
        let idx = self.current.as_mut()?;
        let out: Vec<Label> = idx
            .iter()
            .zip(&self.domains)
            .map(|(&i, d)| d[i])
            .collect();
        // odometer increment, most significant digit first for lex order
        let mut pos = idx.len();
        loop {
            if pos == 0 {
                self.current = None;
                break;
            }
            pos -= 1;
            if idx[pos] + 1 < self.domains[pos].len() {
                idx[pos] += 1;
                for slot in idx[pos + 1..].iter_mut() {
                    *slot = 0;
                }
                break;
            }
        }
        Some(out)
    }
}

/// Enumerates every satisfying assignment by exhausting the label-set product.
pub fn enumerate_bruteforce(inst: &Instance) -> Result<SolutionSet, OracleError> {
    enumerate_bruteforce_capped(inst, DEFAULT_SPACE_CAP)
}

pub fn enumerate_bruteforce_capped(
    inst: &Instance,
    cap: u64,
) -> Result<SolutionSet, OracleError> {
    let sweep = AssignmentSweep::new(inst, cap)?;
    let mut found = Vec::new();
    for assignment in sweep {
        if inst.satisfied_by(&assignment) {
            found.push(assignment);
        }
    }
    Ok(SolutionSet::from_assignments(found))
}

/// Exact Min-CSP optimum: the minimum number of violated constraints over all
/// assignments, with the lexicographically smallest witness attaining it.
pub fn min_unsat_bruteforce(inst: &Instance) -> Result<(usize, Vec<Label>), OracleError> {
    min_unsat_bruteforce_capped(inst, DEFAULT_SPACE_CAP)
}

pub fn min_unsat_bruteforce_capped(
    inst: &Instance,
    cap: u64,
) -> Result<(usize, Vec<Label>), OracleError> {
    let sweep = AssignmentSweep::new(inst, cap)?;
    let mut best: Option<(usize, Vec<Label>)> = None;
    for assignment in sweep {
        let cost = inst.violated_count(&assignment);
        // lex iteration order means strict improvement keeps the smallest witness
        if best.as_ref().map_or(true, |(c, _)| cost < *c) {
            best = Some((cost, assignment));
            if best.as_ref().unwrap().0 == 0 {
                break;
            }
        }
    }
    Ok(best.expect("non-empty assignment space"))
}

/// The explicit solution-count bound for complete Boolean k-CSP:
/// sum of C(n, i) for i in 0..k.
pub fn count_bound(n: usize, k: usize) -> u64 {
    assert!(n >= k && k >= 2, "count bound needs n >= k >= 2");
    (0..k).map(|i| binomial(n, i)).sum()
}
