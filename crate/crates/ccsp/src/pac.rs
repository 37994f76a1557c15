//! Permutation-avoiding coloring: every vertex pair carries a partial
//! matching of forbidden color pairs. Instances convert losslessly to binary
//! CSPs; the deciders fix good vertices and delete conflicting colors until
//! the three-label core takes over, mirroring the label-reduction recursion.

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::csp23::{self, ReduceConfig, ReduceStats, ReductionLedger};
use crate::instance::{Instance, IssueCode, Label, LabelSet, ValidationReport};
use crate::twocsp::Decision;

/// Validation mode: complete instances carry matchings of size exactly
/// `ell` on every pair, over-complete instances at least `ell`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PacMode {
    Complete,
    OverComplete,
}

/// A coloring instance: n vertices, r colors, and one forbidden partial
/// matching per vertex pair.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PacInstance {
    n: usize,
    r: usize,
    ell: usize,
    /// Keyed by (i, j) with i < j; tuples are (color of i, color of j).
    matchings: BTreeMap<(usize, usize), Vec<(Label, Label)>>,
    label_sets: Vec<LabelSet>,
}

#[derive(Error, Debug)]
pub enum PacError {
    #[error("expected a binary instance, arity is {0}")]
    NotBinary(usize),
    #[error("instance failed validation:\n{0}")]
    Invalid(String),
    #[error("expected r = {expected}, instance has {actual} colors")]
    WrongAlphabet { expected: usize, actual: usize },
    #[error(transparent)]
    Csp23(#[from] csp23::Csp23Error),
}

impl PacInstance {
    pub fn new(n: usize, r: usize, ell: usize) -> Self {
        PacInstance {
            n,
            r,
            ell,
            matchings: BTreeMap::new(),
            label_sets: vec![LabelSet::full(r); n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn r(&self) -> usize {
        self.r
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn set_matching(&mut self, i: usize, j: usize, mut pairs: Vec<(Label, Label)>) {
        assert!(i != j && i < self.n && j < self.n);
        let key = (i.min(j), i.max(j));
        if i > j {
            pairs = pairs.into_iter().map(|(a, b)| (b, a)).collect();
        }
        pairs.sort();
        pairs.dedup();
        self.matchings.insert(key, pairs);
    }

    pub fn matching(&self, i: usize, j: usize) -> Option<&[(Label, Label)]> {
        self.matchings
            .get(&(i.min(j), i.max(j)))
            .map(|v| v.as_slice())
    }

    pub fn label_sets(&self) -> &[LabelSet] {
        &self.label_sets
    }

    /// Reads a PAC instance out of a parsed binary CSP file: UNSAT tables
    /// become the matchings. Matching shape is checked by `validate_pac`.
    pub fn from_instance(inst: &Instance, ell: usize) -> Result<Self, PacError> {
        if inst.k() != 2 {
            return Err(PacError::NotBinary(inst.k()));
        }
        let mut pac = PacInstance::new(inst.n(), inst.r(), ell);
        pac.label_sets = inst.label_sets().to_vec();
        for (vars, table) in inst.clauses() {
            let pairs: Vec<(Label, Label)> = table.iter().map(|t| (t[0], t[1])).collect();
            pac.set_matching(vars[0], vars[1], pairs);
        }
        Ok(pac)
    }
}

/// Checks the matching property, per-pair size bounds for the mode, and pair
/// coverage.
pub fn validate_pac(pac: &PacInstance, mode: PacMode) -> ValidationReport {
    let mut report = ValidationReport::default();
    for i in 0..pac.n {
        for j in i + 1..pac.n {
            let locus = format!("pair ({}, {})", i + 1, j + 1);
            let Some(pairs) = pac.matchings.get(&(i, j)) else {
                report.push(
                    IssueCode::MissingPair,
                    locus,
                    "no matching for this pair".into(),
                );
                continue;
            };
            let mut left = LabelSet::empty();
            let mut right = LabelSet::empty();
            for &(a, b) in pairs {
                if left.contains(a) || right.contains(b) {
                    report.push(
                        IssueCode::NotAMatching,
                        locus.clone(),
                        format!("color reused around ({a}, {b})"),
                    );
                }
                left.insert(a);
                right.insert(b);
            }
            let size_ok = match mode {
                PacMode::Complete => pairs.len() == pac.ell,
                PacMode::OverComplete => pairs.len() >= pac.ell,
            };
            if !size_ok {
                report.push(
                    IssueCode::SizeViolation,
                    locus,
                    format!(
                        "matching size {} violates the {:?} bound for ell = {}",
                        pairs.len(),
                        mode,
                        pac.ell
                    ),
                );
            }
        }
    }
    report
}

/// Converts to a binary CSP with the matchings as UNSAT tables. For any
/// valid instance (ell >= 1) the result is a validated complete binary CSP.
pub fn pac_to_csp(pac: &PacInstance) -> Instance {
    let mut inst = Instance::new(2, pac.r, pac.n).expect("valid shape");
    for (i, set) in pac.label_sets.iter().enumerate() {
        inst.set_label_set(i, *set);
    }
    for (&(i, j), pairs) in &pac.matchings {
        let tuples: Vec<Vec<Label>> = pairs.iter().map(|&(a, b)| vec![a, b]).collect();
        inst.add_clause(&[i, j], tuples).expect("fresh pair");
    }
    inst
}

#[derive(Clone, Copy, Debug, Default)]
pub struct PacStats {
    pub nodes: usize,
    pub max_depth: usize,
    pub check23_calls: usize,
    pub reduce_stats: ReduceStats,
}

/// Decides an over-complete four-color instance with matchings of size at
/// least three.
pub fn decide_pac43(pac: &PacInstance) -> Result<Decision, PacError> {
    decide_pac43_with(pac, &ReduceConfig::for_n(pac.n))
}

pub fn decide_pac43_with(pac: &PacInstance, config: &ReduceConfig) -> Result<Decision, PacError> {
    if pac.r != 4 {
        return Err(PacError::WrongAlphabet {
            expected: 4,
            actual: pac.r,
        });
    }
    let report = validate_pac(pac, PacMode::OverComplete);
    if !report.ok() {
        return Err(PacError::Invalid(report.to_string().trim().into()));
    }
    let csp = pac_to_csp(pac);
    let ledger = ReductionLedger::new(pac.label_sets.clone());
    let mut stats = PacStats::default();
    four_label_rec(&csp, &ledger, config, 0, &mut stats)
}

/// Reduction recursion over the vertices still carrying all four colors.
fn four_label_rec(
    csp: &Instance,
    ledger: &ReductionLedger,
    config: &ReduceConfig,
    depth: usize,
    stats: &mut PacStats,
) -> Result<Decision, PacError> {
    stats.nodes += 1;
    stats.max_depth = stats.max_depth.max(depth);
    if ledger.empty_var().is_some() {
        return Ok(Decision::unsat());
    }
    let four_wide = ledger.vars_with_width(4);

    if four_wide.len() <= config.small_cutoff {
        return exhaust_four_wide(csp, ledger, config, &four_wide, 0, stats);
    }

    let threshold = config.epsilon * four_wide.len() as f64;
    for &var in &four_wide {
        for label in ledger.label_set(var).iter() {
            let rs = csp23::reduced_set(csp, ledger.labels(), var, label);
            if (rs.distinct_vars as f64) < threshold {
                continue;
            }
            match csp23::reduce(csp, ledger, var, label) {
                Err(_) => continue,
                Ok(next) => {
                    let d = four_label_rec(csp, &next, config, depth + 1, stats)?;
                    if d.sat {
                        return Ok(d);
                    }
                }
            }
        }
    }

    // no good vertex: drop each four-wide vertex's most-conflicting color
    // (counts snapshot before any deletion, ties to the smallest color)
    let mut next = ledger.clone();
    for &var in &four_wide {
        let mut best: Option<(usize, Label)> = None;
        for label in ledger.label_set(var).iter() {
            let count = csp23::reduced_set(csp, ledger.labels(), var, label).distinct_vars;
            if best.map_or(true, |(c, _)| count > c) {
                best = Some((count, label));
            }
        }
        next.remove_label(var, best.expect("four colors").1);
    }
    check_three_label_core(csp, &next, config, stats)
}

/// Guesses colors for the four-wide vertices one at a time, reducing after
/// each fix, then hands the three-label remainder to the core decision.
fn exhaust_four_wide(
    csp: &Instance,
    ledger: &ReductionLedger,
    config: &ReduceConfig,
    four_wide: &[usize],
    pos: usize,
    stats: &mut PacStats,
) -> Result<Decision, PacError> {
    if pos == four_wide.len() {
        return check_three_label_core(csp, ledger, config, stats);
    }
    let var = four_wide[pos];
    for label in ledger.label_set(var).iter() {
        match csp23::reduce(csp, ledger, var, label) {
            Err(_) => continue,
            Ok(next) => {
                let d = exhaust_four_wide(csp, &next, config, four_wide, pos + 1, stats)?;
                if d.sat {
                    return Ok(d);
                }
            }
        }
    }
    Ok(Decision::unsat())
}

/// Terminal decision once every vertex holds at most three colors: reject on
/// empty label sets, then run the three-label reduction core (which itself
/// bottoms out in a single 2-SAT decision over all narrower vertices).
fn check_three_label_core(
    csp: &Instance,
    ledger: &ReductionLedger,
    config: &ReduceConfig,
    stats: &mut PacStats,
) -> Result<Decision, PacError> {
    stats.check23_calls += 1;
    if ledger.empty_var().is_some() {
        return Ok(Decision::unsat());
    }
    Ok(csp23::decide_with_ledger(
        csp,
        ledger,
        config,
        &mut stats.reduce_stats,
    )?)
}

/// Decides a complete five-color instance whose matchings are perfect: fixes
/// the lowest-indexed vertex, removes the uniquely matched color from every
/// other vertex, and decides the resulting four-wide system.
pub fn decide_pac55(pac: &PacInstance) -> Result<Decision, PacError> {
    decide_pac55_with(pac, &ReduceConfig::for_n(pac.n))
}

pub fn decide_pac55_with(pac: &PacInstance, config: &ReduceConfig) -> Result<Decision, PacError> {
    if pac.r != 5 || pac.ell != 5 {
        return Err(PacError::WrongAlphabet {
            expected: 5,
            actual: pac.r,
        });
    }
    let report = validate_pac(pac, PacMode::Complete);
    if !report.ok() {
        return Err(PacError::Invalid(report.to_string().trim().into()));
    }
    if pac.n == 0 {
        return Ok(Decision {
            sat: true,
            witness: Some(Vec::new()),
        });
    }
    let csp = pac_to_csp(pac);
    let anchor = 0usize;
    for color in 0..pac.r as Label {
        let mut labels = pac.label_sets.clone();
        labels[anchor] = LabelSet::singleton(color);
        let mut feasible = true;
        for other in anchor + 1..pac.n {
            let pairs = pac.matching(anchor, other).expect("validated pair");
            // a perfect matching pairs the anchor color with exactly one color
            let mut matched = pairs.iter().filter(|&&(a, _)| a == color).map(|&(_, b)| b);
            let banned = matched.next().expect("perfect matching");
            debug_assert_eq!(matched.next(), None);
            labels[other].remove(banned);
            if labels[other].is_empty() {
                feasible = false;
                break;
            }
        }
        if !feasible {
            continue;
        }
        let ledger = ReductionLedger::new(labels);
        let mut stats = PacStats::default();
        let d = four_label_rec(&csp, &ledger, config, 0, &mut stats)?;
        if d.sat {
            return Ok(d);
        }
    }
    Ok(Decision::unsat())
}

/// Identity-matching instance: every pair forbids equal colors, so solutions
/// are proper r-colorings of the complete graph.
pub fn identity_pac(n: usize, r: usize) -> PacInstance {
    let mut pac = PacInstance::new(n, r, r);
    for i in 0..n {
        for j in i + 1..n {
            pac.set_matching(i, j, (0..r as Label).map(|c| (c, c)).collect());
        }
    }
    pac
}

/// Random instance: each pair receives a partial matching of the size the
/// mode demands (exactly ell when complete, uniform in ell..=r otherwise).
pub fn random_pac(n: usize, r: usize, ell: usize, mode: PacMode, seed: u64) -> PacInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pac = PacInstance::new(n, r, ell);
    let mut colors: Vec<Label> = (0..r as Label).collect();
    for i in 0..n {
        for j in i + 1..n {
            let size = match mode {
                PacMode::Complete => ell,
                PacMode::OverComplete => rng.random_range(ell..=r),
            };
            colors.shuffle(&mut rng);
            let left: Vec<Label> = colors[..size].to_vec();
            colors.shuffle(&mut rng);
            let right: Vec<Label> = colors[..size].to_vec();
            pac.set_matching(i, j, left.into_iter().zip(right).collect());
        }
    }
    pac
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_bruteforce;

    #[test]
    fn single_color_identity_matchings_validate_as_complete() {
        let mut pac = PacInstance::new(3, 3, 1);
        for i in 0..3 {
            for j in i + 1..3 {
                pac.set_matching(i, j, vec![(1, 1)]);
            }
        }
        assert!(validate_pac(&pac, PacMode::Complete).ok());
        assert!(validate_pac(&pac, PacMode::OverComplete).ok());
    }

    #[test]
    fn repeated_color_is_not_a_matching() {
        let mut pac = PacInstance::new(2, 3, 2);
        pac.set_matching(0, 1, vec![(0, 1), (0, 2)]);
        let report = validate_pac(&pac, PacMode::Complete);
        assert!(report
            .issues
            .iter()
            .any(|i| i.code == IssueCode::NotAMatching));
    }

    #[test]
    fn complete_four_color_instance_is_overcomplete_for_smaller_ell() {
        let mut pac = identity_pac(4, 4);
        assert!(validate_pac(&pac, PacMode::Complete).ok());
        pac.ell = 3;
        assert!(validate_pac(&pac, PacMode::OverComplete).ok());
        assert!(!validate_pac(&pac, PacMode::Complete).ok());
    }

    #[test]
    fn missing_pair_is_reported() {
        let pac = PacInstance::new(3, 3, 1);
        let report = validate_pac(&pac, PacMode::Complete);
        assert_eq!(report.issues.len(), 3);
        assert!(report
            .issues
            .iter()
            .all(|i| i.code == IssueCode::MissingPair));
    }

    #[test]
    fn conversion_matches_matching_sizes_and_validates_complete() {
        let pac = random_pac(6, 4, 3, PacMode::OverComplete, 3);
        let csp = pac_to_csp(&pac);
        assert!(crate::instance::validate_complete(&csp).ok());
        for (vars, table) in csp.clauses() {
            let pairs = pac.matching(vars[0], vars[1]).unwrap();
            assert_eq!(table.len(), pairs.len());
        }
    }

    #[test]
    fn identity_conversion_is_the_coloring_instance() {
        let pac = identity_pac(4, 3);
        let csp = pac_to_csp(&pac);
        assert_eq!(csp, csp23::identity_forbidding(4, 3));
    }

    #[test]
    fn decide_pac43_color_counts_on_cliques() {
        let mut four = identity_pac(4, 4);
        four.ell = 3; // validate as over-complete (4,3)
        let d = decide_pac43(&four).unwrap();
        assert!(d.sat);
        let w = d.witness.unwrap();
        assert!(pac_to_csp(&four).satisfied_by(&w));

        let mut five = identity_pac(5, 4);
        five.ell = 3;
        assert!(!decide_pac43(&five).unwrap().sat);
    }

    #[test]
    fn decide_pac43_matches_oracle_on_random_instances() {
        for seed in 0..200 {
            let n = 4 + (seed as usize % 5);
            let mut pac = random_pac(n, 4, 3, PacMode::OverComplete, seed);
            pac.ell = 3;
            let d = decide_pac43(&pac).unwrap();
            let oracle = enumerate_bruteforce(&pac_to_csp(&pac)).unwrap();
            assert_eq!(d.sat, !oracle.is_empty(), "n={n} seed={seed}");
            if let Some(w) = d.witness {
                assert!(pac_to_csp(&pac).satisfied_by(&w), "seed {seed}");
            }
        }
    }

    #[test]
    fn decide_pac43_branching_config_matches_oracle() {
        for seed in 0..80 {
            let n = 4 + (seed as usize % 4);
            let mut pac = random_pac(n, 4, 3, PacMode::OverComplete, seed);
            pac.ell = 3;
            let cfg = ReduceConfig::with_cutoff(n, 1);
            let d = decide_pac43_with(&pac, &cfg).unwrap();
            let oracle = enumerate_bruteforce(&pac_to_csp(&pac)).unwrap();
            assert_eq!(d.sat, !oracle.is_empty(), "n={n} seed={seed}");
        }
    }

    #[test]
    fn decide_pac55_on_cliques() {
        let d5 = decide_pac55(&identity_pac(5, 5)).unwrap();
        assert!(d5.sat);
        let w = d5.witness.unwrap();
        assert!(pac_to_csp(&identity_pac(5, 5)).satisfied_by(&w));
        assert!(!decide_pac55(&identity_pac(6, 5)).unwrap().sat);
    }

    #[test]
    fn pac55_guess_removes_exactly_one_color_per_vertex() {
        for seed in 0..30 {
            let pac = random_pac(5, 5, 5, PacMode::Complete, seed);
            for color in 0..5u8 {
                for other in 1..5 {
                    let pairs = pac.matching(0, other).unwrap();
                    let banned: Vec<Label> = pairs
                        .iter()
                        .filter(|&&(a, _)| a == color)
                        .map(|&(_, b)| b)
                        .collect();
                    assert_eq!(banned.len(), 1, "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn decide_pac55_matches_oracle_on_random_instances() {
        for seed in 0..200 {
            let n = 4 + (seed as usize % 3);
            let pac = random_pac(n, 5, 5, PacMode::Complete, seed);
            let d = decide_pac55(&pac).unwrap();
            let oracle = enumerate_bruteforce(&pac_to_csp(&pac)).unwrap();
            assert_eq!(d.sat, !oracle.is_empty(), "n={n} seed={seed}");
            if let Some(w) = d.witness {
                assert!(pac_to_csp(&pac).satisfied_by(&w), "seed {seed}");
            }
        }
    }

    #[test]
    fn single_reduce_keeps_two_unsat_entries_per_remaining_pair() {
        for seed in 0..40 {
            let pac = random_pac(6, 4, 3, PacMode::OverComplete, seed);
            let csp = pac_to_csp(&pac);
            let ledger = ReductionLedger::new(pac.label_sets.clone());
            let Ok(next) = csp23::reduce(&csp, &ledger, 0, (seed % 4) as Label) else {
                continue;
            };
            for i in 1..6 {
                for j in i + 1..6 {
                    let table = csp.table(&[i, j]).unwrap();
                    let remaining = table.restricted(&[i, j], next.labels()).count();
                    assert!(
                        remaining >= pac.ell - 2,
                        "seed {seed}: pair ({i},{j}) kept {remaining} entries"
                    );
                }
            }
        }
    }
}
