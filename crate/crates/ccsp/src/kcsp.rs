//! All-solutions enumeration for complete Boolean k-CSP by good-tuple
//! branching: guessing a (k-1)-tuple assignment that forces a constant
//! fraction of the unfixed variables, with a complete (k-1)-ary residual
//! instance as the fallback branch, recursing down to the 2-CSP enumerator.

use std::collections::{BTreeSet, HashSet};

use thiserror::Error;

use crate::instance::{validate_complete, Instance, Label, PartialAssignment};
use crate::oracle::SolutionSet;
use crate::twocsp;
use crate::util::k_subsets;

/// Branching thresholds. The defaults keep the recursion depth logarithmic:
/// a good tuple must force at least a 1/2^(k+1) fraction of the unfixed
/// variables, and residues of at most ~100*log2(n) variables are exhausted
/// directly. Tests shrink `small_cutoff` to drive the branching paths on
/// desk-size instances.
#[derive(Clone, Copy, Debug)]
pub struct BranchConfig {
    pub epsilon: f64,
    pub small_cutoff: usize,
    pub depth_cap: usize,
}

impl BranchConfig {
    /// Defaults for arity k on an n-variable instance.
    pub fn for_arity(k: usize, n: usize) -> Self {
        Self::with_cutoff(k, n, (100.0 * (n.max(2) as f64).log2()).ceil() as usize)
    }

    /// Custom exhaust threshold; clamped to at least k so the branching paths
    /// only run where the fallback's averaging argument is valid.
    pub fn with_cutoff(k: usize, n: usize, cutoff: usize) -> Self {
        let epsilon = 1.0 / (1u64 << (k + 1)) as f64;
        let depth_cap = ((n.max(2) as f64).log2() / epsilon).ceil() as usize;
        BranchConfig {
            epsilon,
            small_cutoff: cutoff.max(k).max(1),
            depth_cap,
        }
    }
}

/// The variables forced by assigning `assignment` to `tuple`: each member u
/// has exactly one value satisfying the clause (tuple, u), recorded in
/// `members` together with that value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FixedSet {
    pub tuple: Vec<usize>,
    pub assignment: Vec<Label>,
    pub members: Vec<(usize, Label)>,
}

impl FixedSet {
    pub fn count(&self) -> usize {
        self.members.len()
    }
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum KcspError {
    #[error("instance is not a validated complete instance: {0}")]
    NotComplete(String),
    #[error("expected a Boolean instance, alphabet size is {0}")]
    NotBoolean(usize),
    #[error("arity {0} below 3; use the binary enumerator")]
    ArityTooSmall(usize),
    #[error("arity mismatch: wanted {expected}, instance has {actual}")]
    ArityMismatch { expected: usize, actual: usize },
    #[error(transparent)]
    TwoCsp(#[from] twocsp::TwoCspError),
}

/// Branch (tuple, assignment) admits no satisfying value for some clause;
/// the branch is immediately infeasible.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeadTuple {
    pub clause: Vec<usize>,
}

/// Computes the fixed set of a (k-1)-tuple assignment over the unfixed
/// variables `v_unfixed`, or reports a dead branch.
pub fn fixed_set(
    inst: &Instance,
    v_unfixed: &[usize],
    tuple: &[usize],
    assignment: &[Label],
) -> Result<FixedSet, DeadTuple> {
    debug_assert_eq!(tuple.len(), inst.k() - 1);
    debug_assert_eq!(assignment.len(), tuple.len());
    let mut members = Vec::new();
    let mut clause_vars: Vec<usize> = Vec::with_capacity(inst.k());
    let mut clause_tuple: Vec<Label> = Vec::with_capacity(inst.k());
    for &u in v_unfixed {
        if tuple.contains(&u) {
            continue;
        }
        clause_vars.clear();
        clause_vars.extend_from_slice(tuple);
        clause_vars.push(u);
        clause_vars.sort_unstable();
        let table = inst
            .table(&clause_vars)
            .expect("complete instance has every k-subset");
        let u_pos = clause_vars.iter().position(|&v| v == u).unwrap();
        let mut satisfying: Option<Label> = None;
        let mut count = 0;
        for b in 0..2u8 {
            clause_tuple.clear();
            for &v in clause_vars.iter() {
                if v == u {
                    clause_tuple.push(b);
                } else {
                    let pos = tuple.iter().position(|&t| t == v).unwrap();
                    clause_tuple.push(assignment[pos]);
                }
            }
            debug_assert_eq!(clause_tuple[u_pos], b);
            if !table.contains(&clause_tuple) {
                satisfying = Some(b);
                count += 1;
            }
        }
        match count {
            0 => {
                return Err(DeadTuple {
                    clause: clause_vars.clone(),
                })
            }
            1 => members.push((u, satisfying.unwrap())),
            _ => {}
        }
    }
    Ok(FixedSet {
        tuple: tuple.to_vec(),
        assignment: assignment.to_vec(),
        members,
    })
}

/// Builds the complete (k-1)-ary residual on the unfixed variables: each
/// (k-1)-subset forbids exactly the assignment maximizing its fixed-variable
/// count (ties broken by the lexicographically smallest assignment). Returns
/// the residual together with the map from its indices to original variables.
pub fn build_residual_km1(inst: &Instance, v_unfixed: &[usize]) -> (Instance, Vec<usize>) {
    let k = inst.k();
    debug_assert!(k >= 3);
    let mut new_index = vec![usize::MAX; inst.n()];
    for (i, &v) in v_unfixed.iter().enumerate() {
        new_index[v] = i;
    }
    let mut residual = Instance::new(k - 1, 2, v_unfixed.len()).expect("valid arity");
    for tuple in k_subsets(v_unfixed, k - 1) {
        let mut best: Option<(usize, Vec<Label>)> = None;
        for code in 0..(1u32 << (k - 1)) {
            let assignment: Vec<Label> =
                (0..k - 1).map(|i| (code >> i & 1) as Label).collect();
            let count = match fixed_set(inst, v_unfixed, &tuple, &assignment) {
                Ok(fs) => fs.count(),
                Err(_) => continue, // dead assignments force nothing
            };
            let better = match &best {
                None => true,
                Some((c, a)) => count > *c || (count == *c && assignment < *a),
            };
            if better {
                best = Some((count, assignment));
            }
        }
        let forbidden = best.map(|(_, a)| a).unwrap_or_else(|| vec![0; k - 1]);
        let mapped: Vec<usize> = tuple.iter().map(|&v| new_index[v]).collect();
        residual
            .add_clause(&mapped, vec![forbidden])
            .expect("fresh residual clause");
    }
    (residual, v_unfixed.to_vec())
}

/// Search counters for the branching enumeration.
#[derive(Clone, Copy, Debug, Default)]
pub struct KcspStats {
    pub nodes: usize,
    pub max_depth: usize,
    pub exhaust_leaves: usize,
    pub residual_branches: usize,
    pub good_tuple_branches: usize,
}

#[derive(Clone, Debug)]
pub struct Enumeration {
    pub solutions: SolutionSet,
    pub stats: KcspStats,
}

/// Enumerates all satisfying assignments of a validated complete Boolean
/// k-CSP (k >= 3) with default thresholds.
pub fn enumerate_kcsp(inst: &Instance) -> Result<Enumeration, KcspError> {
    enumerate_kcsp_with(inst, &BranchConfig::for_arity(inst.k(), inst.n()))
}

/// The arity-3 entry point; identical to the general enumeration with the
/// 1/16 good-pair threshold.
pub fn enumerate_3sat(inst: &Instance) -> Result<Enumeration, KcspError> {
    if inst.k() != 3 {
        return Err(KcspError::ArityMismatch {
            expected: 3,
            actual: inst.k(),
        });
    }
    enumerate_kcsp(inst)
}

pub fn enumerate_kcsp_with(
    inst: &Instance,
    config: &BranchConfig,
) -> Result<Enumeration, KcspError> {
    if inst.r() != 2 {
        return Err(KcspError::NotBoolean(inst.r()));
    }
    if inst.k() < 3 {
        return Err(KcspError::ArityTooSmall(inst.k()));
    }
    let report = validate_complete(inst);
    if !report.ok() {
        return Err(KcspError::NotComplete(report.to_string().trim().into()));
    }
    let mut out: BTreeSet<Vec<Label>> = BTreeSet::new();
    let mut stats = KcspStats::default();
    let mut pa = PartialAssignment::unfixed(inst.n());
    let mut seen: HashSet<Vec<u8>> = HashSet::new();
    enumerate_rec(inst, config, &mut pa, 0, &mut stats, &mut seen, &mut out)?;
    Ok(Enumeration {
        solutions: SolutionSet::from_assignments(out.into_iter().collect()),
        stats,
    })
}

/// Encodes a partial assignment for the visited-state set (2 marks unfixed).
fn pa_key(pa: &PartialAssignment) -> Vec<u8> {
    (0..pa.len()).map(|v| pa.get(v).unwrap_or(2)).collect()
}

fn enumerate_rec(
    inst: &Instance,
    config: &BranchConfig,
    pa: &mut PartialAssignment,
    depth: usize,
    stats: &mut KcspStats,
    seen: &mut HashSet<Vec<u8>>,
    out: &mut BTreeSet<Vec<Label>>,
) -> Result<(), KcspError> {
    stats.nodes += 1;
    stats.max_depth = stats.max_depth.max(depth);
    assert!(
        depth <= config.depth_cap + 1,
        "branch depth {depth} exceeded the cap {}",
        config.depth_cap
    );
    let v_unfixed = pa.unfixed_vars();

    if v_unfixed.len() <= config.small_cutoff {
        stats.exhaust_leaves += 1;
        exhaust(inst, pa, &v_unfixed, out);
        return Ok(());
    }

    let threshold = config.epsilon * v_unfixed.len() as f64;
    for tuple in k_subsets(&v_unfixed, inst.k() - 1) {
        for code in 0..(1u32 << (inst.k() - 1)) {
            let assignment: Vec<Label> =
                (0..inst.k() - 1).map(|i| (code >> i & 1) as Label).collect();
            let fs = match fixed_set(inst, &v_unfixed, &tuple, &assignment) {
                Ok(fs) => fs,
                Err(_) => continue, // dead branch, prune
            };
            if (fs.count() as f64) < threshold {
                continue;
            }
            for (&v, &a) in tuple.iter().zip(&assignment) {
                pa.fix(v, a);
            }
            for &(u, b) in &fs.members {
                pa.fix(u, b);
            }
            // distinct branches often force identical extensions; explore each
            // partial state once (pure optimization, same solution set)
            if seen.insert(pa_key(pa)) {
                stats.good_tuple_branches += 1;
                enumerate_rec(inst, config, pa, depth + 1, stats, seen, out)?;
            }
            for &v in &tuple {
                pa.unfix(v);
            }
            for &(u, _) in &fs.members {
                pa.unfix(u);
            }
        }
    }

    // fallback: the complete (k-1)-ary residual is satisfied by any solution
    // that had no good tuple; candidates are re-checked in full
    stats.residual_branches += 1;
    let (residual, var_map) = build_residual_km1(inst, &v_unfixed);
    let candidates = if residual.k() == 2 {
        twocsp::enumerate_complete_2csp(&residual)?.solutions
    } else {
        let sub = BranchConfig {
            epsilon: 1.0 / (1u64 << residual.k() + 1) as f64,
            small_cutoff: config.small_cutoff.max(residual.k()),
            depth_cap: config.depth_cap,
        };
        enumerate_kcsp_with(&residual, &sub)?.solutions
    };
    for candidate in candidates.iter() {
        let mut full: Vec<Label> = (0..inst.n()).map(|v| pa.get(v).unwrap_or(0)).collect();
        for (i, &v) in var_map.iter().enumerate() {
            full[v] = candidate[i];
        }
        if inst.satisfied_by(&full) {
            out.insert(full);
        }
    }
    Ok(())
}

/// Exhausts every extension of `pa` over the unfixed variables, keeping the
/// ones that satisfy the whole instance.
fn exhaust(
    inst: &Instance,
    pa: &PartialAssignment,
    v_unfixed: &[usize],
    out: &mut BTreeSet<Vec<Label>>,
) {
    let mut full: Vec<Label> = (0..inst.n()).map(|v| pa.get(v).unwrap_or(0)).collect();
    let m = v_unfixed.len();
    debug_assert!(m < 64);
    for code in 0..(1u64 << m) {
        for (i, &v) in v_unfixed.iter().enumerate() {
            full[v] = (code >> i & 1) as Label;
        }
        if inst.satisfied_by(&full) {
            out.insert(full.clone());
        }
    }
}

/// Planted complete Boolean k-CSP: every clause forbids all tuples except the
/// restriction of `alpha`, so `alpha` is the unique solution.
pub fn planted_instance(k: usize, alpha: &[Label]) -> Instance {
    let n = alpha.len();
    let mut inst = Instance::new(k, 2, n).expect("valid arity");
    for vars in k_subsets(&(0..n).collect::<Vec<_>>(), k) {
        let keep: Vec<Label> = vars.iter().map(|&v| alpha[v]).collect();
        let mut tuples = Vec::new();
        for code in 0..(1u32 << k) {
            let t: Vec<Label> = (0..k).map(|i| (code >> i & 1) as Label).collect();
            if t != keep {
                tuples.push(t);
            }
        }
        inst.add_clause(&vars, tuples).expect("fresh clause");
    }
    inst
}
