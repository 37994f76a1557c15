//! Decision procedure for complete binary CSPs whose variables carry at most
//! three labels: guess a variable whose correct value conflicts with many
//! neighbor labels and delete those labels; when no such variable exists,
//! delete each unreduced variable's most-conflicting label instead; what
//! remains is a two-label-per-variable instance decided by the 2-SAT core.

use thiserror::Error;

use crate::instance::{validate_complete, Instance, Label, LabelSet};
use crate::twocsp::{self, Decision, TwoCspView};

/// Per-variable label bookkeeping for the reduction recursion. Copied on
/// branch; variables are unreduced while they still hold three labels and
/// fixed once they hold one.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReductionLedger {
    labels: Vec<LabelSet>,
}

impl ReductionLedger {
    pub fn new(labels: Vec<LabelSet>) -> Self {
        ReductionLedger { labels }
    }

    pub fn from_instance(inst: &Instance) -> Self {
        ReductionLedger {
            labels: inst.label_sets().to_vec(),
        }
    }

    pub fn labels(&self) -> &[LabelSet] {
        &self.labels
    }

    pub fn label_set(&self, var: usize) -> LabelSet {
        self.labels[var]
    }

    /// Variables still carrying exactly `width` labels.
    pub fn vars_with_width(&self, width: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&v| self.labels[v].len() == width)
            .collect()
    }

    /// Unreduced variables: three remaining labels.
    pub fn unreduced(&self) -> Vec<usize> {
        self.vars_with_width(3)
    }

    /// Fixed variables: a single remaining label.
    pub fn fixed(&self) -> Vec<usize> {
        self.vars_with_width(1)
    }

    pub fn empty_var(&self) -> Option<usize> {
        (0..self.labels.len()).find(|&v| self.labels[v].is_empty())
    }

    pub fn remove_label(&mut self, var: usize, label: Label) {
        self.labels[var].remove(label);
    }
}

/// Neighbor labels conflicting with assigning `label` to `var`: every pair
/// (other variable, its label) that some clause forbids together with the
/// assignment, restricted to the current label sets.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ReducedSet {
    pub pairs: Vec<(usize, Label)>,
    /// Number of distinct neighbor variables among `pairs`.
    pub distinct_vars: usize,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum Csp23Error {
    #[error("expected a binary instance, arity is {0}")]
    NotBinary(usize),
    #[error("expected alphabet size 3, got {0}")]
    NotTernary(usize),
    #[error("instance is not a validated complete instance: {0}")]
    NotComplete(String),
    #[error(transparent)]
    TwoCsp(#[from] twocsp::TwoCspError),
}

/// Branch became infeasible: reducing emptied this variable's label set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EmptyLabelSet(pub usize);

/// Computes the reduced set of (variable, label) pairs for assigning `label`
/// to `var` under the current label sets.
pub fn reduced_set(
    inst: &Instance,
    domains: &[LabelSet],
    var: usize,
    label: Label,
) -> ReducedSet {
    debug_assert!(domains[var].contains(label));
    let mut pairs = Vec::new();
    let mut last_var = usize::MAX;
    let mut distinct = 0;
    for other in 0..inst.n() {
        if other == var {
            continue;
        }
        let key = if var < other {
            [var, other]
        } else {
            [other, var]
        };
        let Some(table) = inst.table(&key) else {
            continue;
        };
        for tuple in table.restricted(&key, domains) {
            let (a, b) = if var < other {
                (tuple[0], tuple[1])
            } else {
                (tuple[1], tuple[0])
            };
            if a == label {
                pairs.push((other, b));
                if other != last_var {
                    distinct += 1;
                    last_var = other;
                }
            }
        }
    }
    ReducedSet {
        pairs,
        distinct_vars: distinct,
    }
}

/// Fixes `var` to `label` and deletes every conflicting neighbor label; all
/// clauses at `var` are trivially satisfied afterwards. Fails when a neighbor
/// runs out of labels.
pub fn reduce(
    inst: &Instance,
    ledger: &ReductionLedger,
    var: usize,
    label: Label,
) -> Result<ReductionLedger, EmptyLabelSet> {
    let rs = reduced_set(inst, ledger.labels(), var, label);
    let mut next = ledger.clone();
    next.labels[var] = LabelSet::singleton(label);
    for &(other, l) in &rs.pairs {
        next.labels[other].remove(l);
        if next.labels[other].is_empty() {
            return Err(EmptyLabelSet(other));
        }
    }
    Ok(next)
}

/// Thresholds for the reduction recursion: a good variable must conflict with
/// at least an epsilon fraction of the unreduced set, and residues of at most
/// `small_cutoff` unreduced variables are exhausted directly.
#[derive(Clone, Copy, Debug)]
pub struct ReduceConfig {
    pub epsilon: f64,
    pub small_cutoff: usize,
    pub depth_cap: usize,
}

impl ReduceConfig {
    pub fn for_n(n: usize) -> Self {
        Self::with_cutoff(n, (100.0 * (n.max(2) as f64).log2()).ceil() as usize)
    }

    pub fn with_cutoff(n: usize, cutoff: usize) -> Self {
        let epsilon = 0.01;
        ReduceConfig {
            epsilon,
            small_cutoff: cutoff.max(1),
            depth_cap: ((n.max(2) as f64).log2() / epsilon).ceil() as usize,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReduceStats {
    pub nodes: usize,
    pub max_depth: usize,
    pub exhaust_leaves: usize,
    pub fallback_leaves: usize,
}

/// Decides a validated complete binary instance over a three-letter alphabet.
pub fn decide_23csp(inst: &Instance) -> Result<Decision, Csp23Error> {
    decide_23csp_with(inst, &ReduceConfig::for_n(inst.n()))
}

pub fn decide_23csp_with(inst: &Instance, config: &ReduceConfig) -> Result<Decision, Csp23Error> {
    if inst.k() != 2 {
        return Err(Csp23Error::NotBinary(inst.k()));
    }
    if inst.r() != 3 {
        return Err(Csp23Error::NotTernary(inst.r()));
    }
    let report = validate_complete(inst);
    if !report.ok() {
        return Err(Csp23Error::NotComplete(report.to_string().trim().into()));
    }
    let mut stats = ReduceStats::default();
    let ledger = ReductionLedger::from_instance(inst);
    decide_with_ledger(inst, &ledger, config, &mut stats)
}

/// Core recursion, also used as the terminal three-label decision of the
/// coloring solvers: works for any alphabet as long as every label set in the
/// ledger holds at most three labels.
pub fn decide_with_ledger(
    inst: &Instance,
    ledger: &ReductionLedger,
    config: &ReduceConfig,
    stats: &mut ReduceStats,
) -> Result<Decision, Csp23Error> {
    decide_rec(inst, ledger, config, 0, stats)
}

fn decide_rec(
    inst: &Instance,
    ledger: &ReductionLedger,
    config: &ReduceConfig,
    depth: usize,
    stats: &mut ReduceStats,
) -> Result<Decision, Csp23Error> {
    stats.nodes += 1;
    stats.max_depth = stats.max_depth.max(depth);
    if ledger.empty_var().is_some() {
        return Ok(Decision::unsat());
    }
    let unreduced = ledger.unreduced();
    debug_assert!(ledger.vars_with_width(4).is_empty());

    if unreduced.len() <= config.small_cutoff {
        stats.exhaust_leaves += 1;
        return exhaust_unreduced(inst, ledger, &unreduced, 0);
    }

    let threshold = config.epsilon * unreduced.len() as f64;
    for &var in &unreduced {
        for label in ledger.label_set(var).iter() {
            let rs = reduced_set(inst, ledger.labels(), var, label);
            if (rs.distinct_vars as f64) < threshold {
                continue;
            }
            match reduce(inst, ledger, var, label) {
                Err(_) => continue, // branch infeasible
                Ok(next) => {
                    let d = decide_rec(inst, &next, config, depth + 1, stats)?;
                    if d.sat {
                        return Ok(d);
                    }
                }
            }
        }
    }

    // no good variable: delete each unreduced variable's most-conflicting
    // label (counts snapshot before any deletion, ties to the smallest label)
    stats.fallback_leaves += 1;
    let mut next = ledger.clone();
    for &var in &unreduced {
        let mut best: Option<(usize, Label)> = None;
        for label in ledger.label_set(var).iter() {
            let count = reduced_set(inst, ledger.labels(), var, label).distinct_vars;
            if best.map_or(true, |(c, _)| count > c) {
                best = Some((count, label));
            }
        }
        let (_, doomed) = best.expect("three labels to choose from");
        next.labels[var].remove(doomed);
    }
    let view = TwoCspView::with_domains(inst, next.labels())?;
    Ok(twocsp::decide_2csp(&view))
}

/// Exhausts assignments to the unreduced variables in ascending variable and
/// label order, deciding the two-label remainder for each; clauses between
/// already-fixed variables prune early through the view's infeasibility flag.
fn exhaust_unreduced(
    inst: &Instance,
    ledger: &ReductionLedger,
    unreduced: &[usize],
    next_pos: usize,
) -> Result<Decision, Csp23Error> {
    if next_pos == unreduced.len() {
        let view = TwoCspView::with_domains(inst, ledger.labels())?;
        return Ok(twocsp::decide_2csp(&view));
    }
    let var = unreduced[next_pos];
    for label in ledger.label_set(var).iter() {
        if conflicts_with_fixed(inst, ledger, unreduced[..next_pos].iter(), var, label) {
            continue;
        }
        let mut next = ledger.clone();
        next.labels[var] = LabelSet::singleton(label);
        let d = exhaust_unreduced(inst, &next, unreduced, next_pos + 1)?;
        if d.sat {
            return Ok(d);
        }
    }
    Ok(Decision::unsat())
}

fn conflicts_with_fixed<'a>(
    inst: &Instance,
    ledger: &ReductionLedger,
    fixed: impl Iterator<Item = &'a usize>,
    var: usize,
    label: Label,
) -> bool {
    for &other in fixed {
        let forced = ledger.label_set(other).min_label().expect("fixed variable");
        let key = if var < other {
            [var, other]
        } else {
            [other, var]
        };
        let tuple = if var < other {
            [label, forced]
        } else {
            [forced, label]
        };
        if let Some(table) = inst.table(&key) {
            if table.contains(&tuple) {
                return true;
            }
        }
    }
    false
}

/// Complete binary instance where every pair forbids equal labels; satisfying
/// assignments are proper r-colorings of the complete graph.
pub fn identity_forbidding(n: usize, r: usize) -> Instance {
    let mut inst = Instance::new(2, r, n).expect("valid shape");
    for i in 0..n {
        for j in i + 1..n {
            let tuples = (0..r as Label).map(|c| vec![c, c]).collect();
            inst.add_clause(&[i, j], tuples).expect("fresh clause");
        }
    }
    inst
}

/// Random complete binary instance over three labels with one to `max_tuples`
/// UNSAT tuples per pair.
pub fn random_23csp(n: usize, max_tuples: usize, seed: u64) -> Instance {
    crate::instance::random_complete(2, 3, n, max_tuples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_bruteforce;

    fn branchy(n: usize) -> ReduceConfig {
        ReduceConfig::with_cutoff(n, 2)
    }

    #[test]
    fn reduced_set_identity_instance_hits_every_neighbor() {
        let inst = identity_forbidding(5, 3);
        let domains = inst.label_sets().to_vec();
        let rs = reduced_set(&inst, &domains, 2, 0);
        assert_eq!(rs.distinct_vars, 4);
        assert_eq!(rs.pairs.len(), 4);
        assert!(rs.pairs.iter().all(|&(_, l)| l == 0));
    }

    #[test]
    fn reduced_set_counts_match_direct_rescan() {
        for seed in 0..30 {
            let inst = random_23csp(6, 4, seed);
            let domains = inst.label_sets().to_vec();
            for var in 0..6 {
                for label in 0..3u8 {
                    let rs = reduced_set(&inst, &domains, var, label);
                    // recount from scratch over all clauses
                    let mut expected = std::collections::BTreeSet::new();
                    for (vars, table) in inst.clauses() {
                        let pos = vars.iter().position(|&v| v == var);
                        if let Some(p) = pos {
                            let other_p = 1 - p;
                            for t in table.iter() {
                                if t[p] == label {
                                    expected.insert(vars[other_p]);
                                }
                            }
                        }
                    }
                    assert_eq!(rs.distinct_vars, expected.len(), "seed {seed} v{var} l{label}");
                }
            }
        }
    }

    #[test]
    fn reduce_identity_instance_removes_label_everywhere() {
        let inst = identity_forbidding(4, 3);
        let ledger = ReductionLedger::from_instance(&inst);
        let next = reduce(&inst, &ledger, 0, 0).unwrap();
        assert_eq!(next.label_set(0), LabelSet::singleton(0));
        for v in 1..4 {
            let set: Vec<Label> = next.label_set(v).iter().collect();
            assert_eq!(set, vec![1, 2]);
        }
    }

    #[test]
    fn conflicting_reduces_empty_a_label_set() {
        // pair (0,1) forbids (0,*) entirely: fixing 0 to label 0 wipes out 1
        let mut inst = Instance::new(2, 3, 3).unwrap();
        inst.add_clause(&[0, 1], vec![vec![0, 0], vec![0, 1], vec![0, 2]])
            .unwrap();
        inst.add_clause(&[0, 2], vec![vec![1, 1]]).unwrap();
        inst.add_clause(&[1, 2], vec![vec![2, 2]]).unwrap();
        let ledger = ReductionLedger::from_instance(&inst);
        assert_eq!(reduce(&inst, &ledger, 0, 0), Err(EmptyLabelSet(1)));
    }

    #[test]
    fn reduce_keeps_unreduced_subinstance_complete() {
        for seed in 0..40 {
            let inst = random_23csp(7, 3, seed);
            let ledger = ReductionLedger::from_instance(&inst);
            let Ok(next) = reduce(&inst, &ledger, 0, (seed % 3) as Label) else {
                continue;
            };
            let unreduced = next.unreduced();
            for (i, &a) in unreduced.iter().enumerate() {
                for &b in unreduced.iter().skip(i + 1) {
                    let table = inst.table(&[a, b]).expect("pair clause");
                    assert!(
                        table.restricted(&[a, b], next.labels()).next().is_some(),
                        "seed {seed}: pair ({a},{b}) lost its constraint"
                    );
                }
            }
        }
    }

    #[test]
    fn triangle_is_three_colorable_k4_is_not() {
        let d3 = decide_23csp(&identity_forbidding(3, 3)).unwrap();
        assert!(d3.sat);
        assert_eq!(d3.witness.as_deref(), Some(&[0u8, 1, 2][..]));
        let d4 = decide_23csp(&identity_forbidding(4, 3)).unwrap();
        assert!(!d4.sat);
        assert!(enumerate_bruteforce(&identity_forbidding(4, 3))
            .unwrap()
            .is_empty());
    }

    #[test]
    fn decide_matches_oracle_on_random_instances() {
        for seed in 0..300 {
            let n = 4 + (seed as usize % 7);
            let inst = random_23csp(n, 4, seed);
            let d = decide_23csp(&inst).unwrap();
            let oracle = enumerate_bruteforce(&inst).unwrap();
            assert_eq!(d.sat, !oracle.is_empty(), "n={n} seed={seed}");
            if let Some(w) = d.witness {
                assert!(inst.satisfied_by(&w), "seed {seed}");
            }
        }
    }

    #[test]
    fn decide_matches_oracle_with_branching_config() {
        for seed in 0..150 {
            let n = 4 + (seed as usize % 6);
            let inst = random_23csp(n, 3, seed);
            let d = decide_23csp_with(&inst, &branchy(n)).unwrap();
            let oracle = enumerate_bruteforce(&inst).unwrap();
            assert_eq!(d.sat, !oracle.is_empty(), "n={n} seed={seed}");
            if let Some(w) = d.witness {
                assert!(inst.satisfied_by(&w), "seed {seed}");
            }
        }
    }

    #[test]
    fn counts_cover_all_other_unreduced_variables() {
        // on a complete instance the per-variable conflict counts, summed over
        // its labels, cover every other unreduced variable at least once
        for seed in 0..50 {
            let inst = random_23csp(7, 3, seed);
            let domains = inst.label_sets().to_vec();
            for var in 0..7 {
                let sum: usize = (0..3u8)
                    .map(|l| reduced_set(&inst, &domains, var, l).distinct_vars)
                    .sum();
                assert!(sum >= 6, "seed {seed} var {var}: sum {sum} < 6");
            }
        }
    }

    #[test]
    fn argmax_avoids_planted_solutions_without_good_variables() {
        for seed in 0..60 {
            let n = 6 + (seed as usize % 5);
            let inst = random_23csp(n, 2, seed);
            let oracle = enumerate_bruteforce(&inst).unwrap();
            let domains = inst.label_sets().to_vec();
            let eps = 0.01;
            for alpha in oracle.iter() {
                // when alpha marks no variable good, every argmax must dodge it
                let all_bad = (0..n).all(|v| {
                    (reduced_set(&inst, &domains, v, alpha[v]).distinct_vars as f64)
                        < eps * n as f64
                });
                if !all_bad {
                    continue;
                }
                for v in 0..n {
                    let mut best: Option<(usize, Label)> = None;
                    for label in 0..3u8 {
                        let c = reduced_set(&inst, &domains, v, label).distinct_vars;
                        if best.map_or(true, |(bc, _)| c > bc) {
                            best = Some((c, label));
                        }
                    }
                    assert_ne!(best.unwrap().1, alpha[v], "seed {seed} var {v}");
                }
            }
        }
    }

    #[test]
    fn branch_depth_stays_under_cap() {
        for seed in 0..40 {
            let n = 6 + (seed as usize % 5);
            let inst = random_23csp(n, 3, seed);
            let config = branchy(n);
            let mut stats = ReduceStats::default();
            let ledger = ReductionLedger::from_instance(&inst);
            let _ = decide_with_ledger(&inst, &ledger, &config, &mut stats).unwrap();
            assert!(
                stats.max_depth <= config.depth_cap,
                "seed {seed}: depth {} over cap {}",
                stats.max_depth,
                config.depth_cap
            );
        }
    }
}
