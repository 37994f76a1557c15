//! Approximate Min-2-SAT on complete instances: a vector relaxation solved by
//! low-rank projected gradient, bias preprocessing, random-radius ball
//! rounding on the implication graph, and exact bookkeeping of the deleted
//! clause set against the consistency property.

pub mod round;
pub mod sdp;

pub use round::{
    consistency_check, implication_graph, preprocess_bias, round_ckr, Preprocessed, RoundEvent,
    RoundingOutcome,
};
pub use sdp::{directed_distance, solve_sdp, Point, SdpParams, SdpSolution};

use thiserror::Error;

use crate::instance::{validate_complete, Instance};
use crate::twocsp::Lit;
use crate::util::derive_seed;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

#[derive(Error, Debug)]
pub enum Min2SatError {
    #[error("expected a binary Boolean instance, got arity {k} over {r} labels")]
    NotTwoSat { k: usize, r: usize },
    #[error("pair {0:?} carries {1} UNSAT tuples; a 2-SAT clause has exactly one")]
    NotSingleClause(Vec<usize>, usize),
    #[error("instance is not a validated complete instance: {0}")]
    NotComplete(String),
}

/// Extracts the clause list of a Boolean 2-SAT instance: the single UNSAT
/// tuple (a, b) of pair (x, y) is the clause (x != a) | (y != b).
pub fn two_sat_clauses(inst: &Instance) -> Result<Vec<(Lit, Lit)>, Min2SatError> {
    if inst.k() != 2 || inst.r() != 2 {
        return Err(Min2SatError::NotTwoSat {
            k: inst.k(),
            r: inst.r(),
        });
    }
    let mut clauses = Vec::with_capacity(inst.clause_count());
    for (vars, table) in inst.clauses() {
        if table.len() != 1 {
            return Err(Min2SatError::NotSingleClause(
                vars.iter().map(|v| v + 1).collect(),
                table.len(),
            ));
        }
        let tuple = table.iter().next().expect("single tuple");
        clauses.push((
            Lit::with_sign(vars[0], tuple[0] == 1),
            Lit::with_sign(vars[1], tuple[1] == 1),
        ));
    }
    Ok(clauses)
}

/// Pipeline parameters; `trials` draws a fresh bias threshold and ball pass
/// per trial, keeping the cheapest outcome (the randomized stand-in for the
/// conditional-expectation derandomization).
#[derive(Clone, Copy, Debug)]
pub struct PipelineParams {
    pub seed: u64,
    pub sdp_iterations: usize,
    pub trials: usize,
}

impl Default for PipelineParams {
    fn default() -> Self {
        PipelineParams {
            seed: 0,
            sdp_iterations: 5000,
            trials: 32,
        }
    }
}

/// Full pipeline on a validated complete Boolean 2-SAT instance. The outcome
/// always satisfies the consistency check; `sdp_converged` carries the
/// relaxation's feasibility warning.
pub fn min2sat_approx(
    inst: &Instance,
    params: &PipelineParams,
) -> Result<(RoundingOutcome, SdpSolution), Min2SatError> {
    let clauses = two_sat_clauses(inst)?;
    let n = inst.n();
    if n <= 1 {
        // no pairs, nothing to delete
        let outcome = RoundingOutcome {
            deleted: Default::default(),
            cost: 0,
            assignment: Some(vec![false; n]),
            assignment_cost: 0,
            trace: Vec::new(),
            sdp_converged: true,
        };
        return Ok((outcome, SdpSolution::integral(&vec![false; n], 3)));
    }
    let report = validate_complete(inst);
    if !report.ok() {
        return Err(Min2SatError::NotComplete(report.to_string().trim().into()));
    }
    let solution = solve_sdp(
        inst,
        &SdpParams {
            seed: derive_seed(params.seed, "sdp"),
            iterations: params.sdp_iterations,
            ..Default::default()
        },
    )?;
    let mut best: Option<RoundingOutcome> = None;
    let mut theta_rng = ChaCha8Rng::seed_from_u64(derive_seed(params.seed, "theta"));
    for trial in 0..params.trials.max(1) {
        let theta = theta_rng.random_range(0.001..0.002);
        let pre = preprocess_bias(n, &clauses, &solution, theta);
        let outcome = round_ckr(
            n,
            &clauses,
            &solution,
            &pre,
            derive_seed(params.seed, &format!("ckr-{trial}")),
            1,
        );
        if best.as_ref().map_or(true, |b| outcome.cost < b.cost) {
            best = Some(outcome);
        }
    }
    Ok((best.expect("at least one trial"), solution))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{all_positive_ksat, random_complete};
    use crate::oracle::min_unsat_bruteforce;

    #[test]
    fn clause_extraction_signs() {
        let mut inst = Instance::new(2, 2, 2).unwrap();
        inst.add_clause(&[0, 1], vec![vec![0, 1]]).unwrap();
        let clauses = two_sat_clauses(&inst).unwrap();
        // forbids (0,1): clause (x | !y)
        assert_eq!(clauses, vec![(Lit::positive(0), Lit::negative(1))]);
    }

    #[test]
    fn multi_tuple_pairs_are_rejected() {
        let mut inst = Instance::new(2, 2, 2).unwrap();
        inst.add_clause(&[0, 1], vec![vec![0, 0], vec![1, 1]]).unwrap();
        assert!(matches!(
            two_sat_clauses(&inst),
            Err(Min2SatError::NotSingleClause(_, 2))
        ));
    }

    #[test]
    fn satisfiable_pipeline_reaches_zero_cost() {
        let inst = all_positive_ksat(2, 10);
        let (outcome, solution) = min2sat_approx(
            &inst,
            &PipelineParams {
                seed: 7,
                trials: 8,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(solution.objective <= 1e-4);
        assert_eq!(outcome.cost, 0);
        let w = outcome.assignment.unwrap();
        let labels: Vec<u8> = w.iter().map(|&b| b as u8).collect();
        assert!(inst.satisfied_by(&labels));
    }

    #[test]
    fn pipeline_cost_upper_bounds_assignment_and_lower_bounds_nothing() {
        for seed in 0..6 {
            let n = 6 + (seed as usize % 3);
            let inst = random_complete(2, 2, n, 1, 1000 + seed);
            let (outcome, solution) = min2sat_approx(
                &inst,
                &PipelineParams {
                    seed,
                    sdp_iterations: 1500,
                    trials: 8,
                },
            )
            .unwrap();
            let (opt, _) = min_unsat_bruteforce(&inst).unwrap();
            assert!(outcome.assignment_cost >= opt, "seed {seed}");
            assert!(outcome.assignment_cost <= outcome.cost, "seed {seed}");
            assert!(outcome.cost >= opt, "seed {seed}");
            assert!(
                solution.objective <= opt as f64 + 1e-3,
                "seed {seed}: objective {} vs opt {opt}",
                solution.objective
            );
        }
    }

    #[test]
    fn degenerate_single_variable_instance() {
        let inst = Instance::new(2, 2, 1).unwrap();
        // n = 1 has no pairs and is vacuously complete
        let (outcome, _) = min2sat_approx(&inst, &PipelineParams::default()).unwrap();
        assert_eq!(outcome.cost, 0);
        assert!(outcome.deleted.is_empty());
    }
}
