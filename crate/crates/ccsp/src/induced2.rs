//! Polynomial-time decision for complete Boolean k-CSPs whose predicates
//! project onto binary constraints: guess an assignment to one (k-2)-tuple,
//! collapse every clause containing it to a constraint on the remaining pair,
//! and decide the resulting complete 2-CSP. Includes construction of
//! symmetric predicates (NAE, Only-1, ...) by accepted true-literal counts.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::instance::{validate_complete, Instance, Label};
use crate::twocsp::{self, Decision};
use crate::util::k_subsets;

/// A symmetric Boolean predicate of arity k: a clause is satisfied iff the
/// number of true literals lies in `accepted`. An optional per-clause sign
/// vector flips variables into literals before counting.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricSpec {
    pub k: usize,
    pub accepted: BTreeSet<usize>,
}

#[derive(Error, Debug, PartialEq, Eq)]
pub enum Induced2Error {
    #[error("predicate accepts every true-literal count; instance would be trivial")]
    TrivialPredicate,
    #[error("accepted count {0} exceeds arity {1}")]
    CountOutOfRange(usize, usize),
    #[error("expected a Boolean instance, alphabet size is {0}")]
    NotBoolean(usize),
    #[error("arity {0} below 3")]
    ArityTooSmall(usize),
    #[error("instance is not a validated complete instance: {0}")]
    NotComplete(String),
    #[error("instance does not have the induced binary projection property")]
    NotInduced2,
    #[error(transparent)]
    TwoCsp(#[from] twocsp::TwoCspError),
}

impl SymmetricSpec {
    pub fn new(k: usize, accepted: BTreeSet<usize>) -> Result<Self, Induced2Error> {
        if let Some(&max) = accepted.iter().max() {
            if max > k {
                return Err(Induced2Error::CountOutOfRange(max, k));
            }
        }
        if accepted.len() == k + 1 {
            return Err(Induced2Error::TrivialPredicate);
        }
        Ok(SymmetricSpec { k, accepted })
    }

    /// UNSAT tuples of the predicate under the given sign vector (`true`
    /// means the literal is the negated variable).
    fn unsat_tuples(&self, signs: &[bool]) -> Vec<Vec<Label>> {
        let k = self.k;
        let mut tuples = Vec::new();
        for code in 0..(1u32 << k) {
            let tuple: Vec<Label> = (0..k).map(|i| (code >> i & 1) as Label).collect();
            let true_literals = tuple
                .iter()
                .zip(signs)
                .filter(|&(&v, &s)| (v == 1) != s)
                .count();
            if !self.accepted.contains(&true_literals) {
                tuples.push(tuple);
            }
        }
        tuples
    }
}

/// Per-clause literal sign choice for symmetric instance construction.
#[derive(Clone, Copy, Debug)]
pub enum Signs {
    AllPositive,
    Random(u64),
}

/// Builds the complete instance whose every clause carries the symmetric
/// predicate, with signs chosen per clause.
pub fn build_symmetric_instance(
    n: usize,
    spec: &SymmetricSpec,
    signs: Signs,
) -> Result<Instance, Induced2Error> {
    if spec.accepted.len() == spec.k + 1 {
        return Err(Induced2Error::TrivialPredicate);
    }
    let mut rng = match signs {
        Signs::AllPositive => None,
        Signs::Random(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
    };
    let mut inst = Instance::new(spec.k, 2, n).expect("valid arity");
    for vars in k_subsets(&(0..n).collect::<Vec<_>>(), spec.k) {
        let clause_signs: Vec<bool> = match rng.as_mut() {
            None => vec![false; spec.k],
            Some(rng) => (0..spec.k).map(|_| rng.random_bool(0.5)).collect(),
        };
        inst.add_clause(&vars, spec.unsat_tuples(&clause_signs))
            .expect("fresh clause");
    }
    Ok(inst)
}

/// Whether a single predicate (UNSAT tuples in clause-position order) admits
/// binary projections: for every (k-2)-subset of positions and every
/// assignment to it, at least one of the four completions is unsatisfying.
fn predicate_is_induced2(k: usize, unsat: &crate::instance::UnsatTable) -> bool {
    let positions: Vec<usize> = (0..k).collect();
    for fixed in k_subsets(&positions, k - 2) {
        let rest: Vec<usize> = positions
            .iter()
            .copied()
            .filter(|p| !fixed.contains(p))
            .collect();
        for fixed_code in 0..(1u32 << (k - 2)) {
            let mut some_unsat = false;
            'completions: for rest_code in 0..4u32 {
                let mut tuple = vec![0 as Label; k];
                for (i, &p) in fixed.iter().enumerate() {
                    tuple[p] = (fixed_code >> i & 1) as Label;
                }
                for (i, &p) in rest.iter().enumerate() {
                    tuple[p] = (rest_code >> i & 1) as Label;
                }
                if unsat.contains(&tuple) {
                    some_unsat = true;
                    break 'completions;
                }
            }
            if !some_unsat {
                return false;
            }
        }
    }
    true
}

/// Checks the induced binary projection property over every clause of a
/// validated complete Boolean instance.
pub fn is_induced2(inst: &Instance) -> Result<bool, Induced2Error> {
    check_shape(inst)?;
    Ok(inst
        .clauses()
        .all(|(_, table)| predicate_is_induced2(inst.k(), table)))
}

fn check_shape(inst: &Instance) -> Result<(), Induced2Error> {
    if inst.r() != 2 {
        return Err(Induced2Error::NotBoolean(inst.r()));
    }
    if inst.k() < 3 {
        return Err(Induced2Error::ArityTooSmall(inst.k()));
    }
    let report = validate_complete(inst);
    if !report.ok() {
        return Err(Induced2Error::NotComplete(report.to_string().trim().into()));
    }
    Ok(())
}

/// Decides a complete induced-2 instance: fixes the lexicographically first
/// (k-2)-tuple, projects each clause containing it onto the remaining pair,
/// enumerates the projected complete 2-CSP, and keeps the first candidate
/// whose lift satisfies the whole instance (clauses disjoint from the guessed
/// tuple are enforced by that final check).
pub fn decide_induced2(inst: &Instance) -> Result<Decision, Induced2Error> {
    if !is_induced2(inst)? {
        return Err(Induced2Error::NotInduced2);
    }
    let k = inst.k();
    let n = inst.n();
    let guessed: Vec<usize> = (0..k - 2).collect();
    let rest: Vec<usize> = (k - 2..n).collect();
    for code in 0..(1u64 << (k - 2)) {
        let guess: Vec<Label> = (0..k - 2).map(|i| (code >> i & 1) as Label).collect();
        let projected = project(inst, &guessed, &guess, &rest);
        let enumeration = twocsp::enumerate_complete_2csp(&projected)?;
        for candidate in enumeration.solutions.iter() {
            let mut full = vec![0 as Label; n];
            for (i, &v) in guessed.iter().enumerate() {
                full[v] = guess[i];
            }
            for (i, &v) in rest.iter().enumerate() {
                full[v] = candidate[i];
            }
            if inst.satisfied_by(&full) {
                return Ok(Decision {
                    sat: true,
                    witness: Some(full),
                });
            }
        }
    }
    Ok(Decision::unsat())
}

/// The binary projection of all clauses containing the guessed tuple, over
/// the remaining variables re-indexed in ascending order.
fn project(inst: &Instance, guessed: &[usize], guess: &[Label], rest: &[usize]) -> Instance {
    let mut projected = Instance::new(2, 2, rest.len()).expect("binary instance");
    let mut clause_vars: Vec<usize> = Vec::with_capacity(inst.k());
    for (i, &vi) in rest.iter().enumerate() {
        for (j_off, &vj) in rest.iter().enumerate().skip(i + 1) {
            clause_vars.clear();
            clause_vars.extend_from_slice(guessed);
            clause_vars.push(vi);
            clause_vars.push(vj);
            clause_vars.sort_unstable();
            let table = inst.table(&clause_vars).expect("complete instance");
            let mut pair_unsat = Vec::new();
            for a in 0..2u8 {
                for b in 0..2u8 {
                    let tuple: Vec<Label> = clause_vars
                        .iter()
                        .map(|&v| {
                            if v == vi {
                                a
                            } else if v == vj {
                                b
                            } else {
                                let pos = guessed.iter().position(|&g| g == v).unwrap();
                                guess[pos]
                            }
                        })
                        .collect();
                    if table.contains(&tuple) {
                        pair_unsat.push(vec![a, b]);
                    }
                }
            }
            projected
                .add_clause(&[i, j_off], pair_unsat)
                .expect("fresh pair");
        }
    }
    projected
}

/// Random complete instance where each clause gets an independently sampled
/// symmetric predicate (rejection-sampled to keep the induced-2 property)
/// with random signs. Used to stress the decider against the oracle.
pub fn build_random_induced2(n: usize, k: usize, seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inst = Instance::new(k, 2, n).expect("valid arity");
    for vars in k_subsets(&(0..n).collect::<Vec<_>>(), k) {
        let tuples = loop {
            let mut accepted = BTreeSet::new();
            for count in 0..=k {
                if rng.random_bool(0.5) {
                    accepted.insert(count);
                }
            }
            if accepted.is_empty() || accepted.len() == k + 1 {
                continue;
            }
            let spec = SymmetricSpec { k, accepted };
            let signs: Vec<bool> = (0..k).map(|_| rng.random_bool(0.5)).collect();
            let tuples = spec.unsat_tuples(&signs);
            let table = crate::instance::UnsatTable::new(tuples.clone());
            if !table.is_empty() && predicate_is_induced2(k, &table) {
                break tuples;
            }
        };
        inst.add_clause(&vars, tuples).expect("fresh clause");
    }
    inst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::all_positive_ksat;
    use crate::oracle::enumerate_bruteforce;

    fn spec(k: usize, accepted: &[usize]) -> SymmetricSpec {
        SymmetricSpec::new(k, accepted.iter().copied().collect()).unwrap()
    }

    fn nae3(n: usize) -> Instance {
        build_symmetric_instance(n, &spec(3, &[1, 2]), Signs::AllPositive).unwrap()
    }

    fn only1(n: usize) -> Instance {
        build_symmetric_instance(n, &spec(3, &[1]), Signs::AllPositive).unwrap()
    }

    #[test]
    fn nae_tables_forbid_monochromatic_triples() {
        let inst = nae3(4);
        for (_, table) in inst.clauses() {
            let tuples: Vec<&[Label]> = table.iter().collect();
            assert_eq!(tuples, vec![&[0u8, 0, 0][..], &[1u8, 1, 1][..]]);
        }
    }

    #[test]
    fn accepted_counts_one_to_three_is_plain_3sat() {
        let inst = build_symmetric_instance(4, &spec(3, &[1, 2, 3]), Signs::AllPositive).unwrap();
        assert_eq!(inst, all_positive_ksat(3, 4));
    }

    #[test]
    fn only1_tables_are_the_complement_of_weight_one() {
        let inst = only1(3);
        let (_, table) = inst.clauses().next().unwrap();
        let got: Vec<&[Label]> = table.iter().collect();
        assert_eq!(
            got,
            vec![
                &[0u8, 0, 0][..],
                &[0u8, 1, 1][..],
                &[1u8, 0, 1][..],
                &[1u8, 1, 0][..],
                &[1u8, 1, 1][..],
            ]
        );
    }

    #[test]
    fn trivial_accepted_set_is_rejected() {
        assert_eq!(
            SymmetricSpec::new(3, [0, 1, 2, 3].into_iter().collect()).unwrap_err(),
            Induced2Error::TrivialPredicate
        );
    }

    #[test]
    fn nae_is_induced2_plain_3sat_is_not() {
        assert!(is_induced2(&nae3(4)).unwrap());
        assert!(!is_induced2(&all_positive_ksat(3, 4)).unwrap());
    }

    #[test]
    fn symmetric_3csp_induced2_classification() {
        // exactly the accepted sets 1..3 and 0..2 fail the projection property
        for code in 1u32..15 {
            let accepted: BTreeSet<usize> = (0..=3).filter(|&c| code >> c & 1 == 1).collect();
            let s = SymmetricSpec { k: 3, accepted };
            let inst = build_symmetric_instance(5, &s, Signs::AllPositive).unwrap();
            let expected = s.accepted != [1, 2, 3].into_iter().collect::<BTreeSet<_>>()
                && s.accepted != [0, 1, 2].into_iter().collect::<BTreeSet<_>>();
            assert_eq!(
                is_induced2(&inst).unwrap(),
                expected,
                "accepted = {:?}",
                s.accepted
            );
        }
    }

    #[test]
    fn decide_nae_boundary() {
        let d4 = decide_induced2(&nae3(4)).unwrap();
        assert!(d4.sat);
        let w = d4.witness.unwrap();
        assert!(nae3(4).satisfied_by(&w));
        let d5 = decide_induced2(&nae3(5)).unwrap();
        assert!(!d5.sat);
    }

    #[test]
    fn decide_only1_boundary() {
        assert!(decide_induced2(&only1(3)).unwrap().sat);
        // a triple avoiding the unique true variable has no true literal
        assert!(!decide_induced2(&only1(4)).unwrap().sat);
        assert!(!decide_induced2(&only1(5)).unwrap().sat);
    }

    #[test]
    fn decide_rejects_non_induced_instances() {
        assert!(matches!(
            decide_induced2(&all_positive_ksat(3, 4)),
            Err(Induced2Error::NotInduced2)
        ));
    }

    #[test]
    fn satisfying_extensions_survive_projection() {
        // any oracle solution restricted past the guessed tuple must satisfy
        // the projected 2-CSP of its own branch
        for seed in 0..40 {
            let k = 3 + (seed as usize % 2);
            let n = k + 2 + (seed as usize % 3);
            let inst = build_random_induced2(n, k, seed);
            let oracle = enumerate_bruteforce(&inst).unwrap();
            let guessed: Vec<usize> = (0..k - 2).collect();
            let rest: Vec<usize> = (k - 2..n).collect();
            for sol in oracle.iter() {
                let guess: Vec<Label> = guessed.iter().map(|&v| sol[v]).collect();
                let projected = project(&inst, &guessed, &guess, &rest);
                let restriction: Vec<Label> = rest.iter().map(|&v| sol[v]).collect();
                assert!(
                    projected.satisfied_by(&restriction),
                    "seed {seed}: oracle solution fails its projection"
                );
            }
        }
    }

    #[test]
    fn decide_agrees_with_oracle_on_random_induced2_instances() {
        for seed in 0..300 {
            let k = 3 + (seed as usize % 2);
            let n = k + 2 + (seed as usize % 5);
            let inst = build_random_induced2(n, k, seed);
            let d = decide_induced2(&inst).unwrap();
            let oracle = enumerate_bruteforce(&inst).unwrap();
            assert_eq!(d.sat, !oracle.is_empty(), "k={k} n={n} seed={seed}");
            if let Some(w) = d.witness {
                assert!(inst.satisfied_by(&w), "seed {seed}");
            }
        }
    }
}
