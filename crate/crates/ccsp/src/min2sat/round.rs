//! Rounding for the Min-2-SAT relaxation. Preprocessing pays for the edges
//! leaving high-bias literals and removes those variables; the remaining
//! literals are swallowed by random-radius out/in ball pairs around each
//! surviving variable in random order. Every deleted edge has an endpoint
//! removed in the same round, which forces the consistency property on the
//! surviving implication graph regardless of relaxation quality.

use std::collections::BTreeSet;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::twocsp::{ImplicationGraph, Lit};
use crate::util::derive_seed;

use super::sdp::{Point, SdpSolution};

/// Preprocessing result: literals whose bias clears the threshold are set
/// true, and the implication edges leaving that set (or entering its mirror)
/// are paid for.
#[derive(Clone, Debug)]
pub struct Preprocessed {
    pub theta: f64,
    pub deleted: BTreeSet<usize>,
    pub removed_vars: Vec<bool>,
    /// Variables fixed by preprocessing, with the value making their
    /// high-bias literal true.
    pub forced: Vec<(usize, bool)>,
    pub b_plus_size: usize,
}

/// One rounding step of the best trial, for diagnostics.
#[derive(Clone, Debug)]
pub enum RoundEvent {
    Preprocess {
        theta: f64,
        b_plus: usize,
        deleted: usize,
    },
    Ball {
        center: Lit,
        gamma: f64,
        out_size: usize,
        in_size: usize,
        deleted: usize,
    },
}

/// Outcome of a full rounding run: the paid clause set, a concrete assignment
/// read off the surviving implication graph, and both costs (the assignment
/// can only violate paid clauses, so its cost never exceeds the paid count).
#[derive(Clone, Debug)]
pub struct RoundingOutcome {
    pub deleted: BTreeSet<usize>,
    pub cost: usize,
    pub assignment: Option<Vec<bool>>,
    pub assignment_cost: usize,
    pub trace: Vec<RoundEvent>,
    pub sdp_converged: bool,
}

/// All implication edges of the clause list: clause (lx | ly) yields
/// (!lx -> ly) and (!ly -> lx), tagged with the clause id.
pub fn implication_graph(n: usize, clauses: &[(Lit, Lit)]) -> ImplicationGraph {
    let mut graph = ImplicationGraph::new(n);
    for (id, &(lx, ly)) in clauses.iter().enumerate() {
        graph.add_clause_edges(lx, ly, Some(id));
    }
    graph
}

/// True iff the graph, after removing every edge of a deleted clause, has no
/// variable with both literals in one strongly connected component.
pub fn consistency_check(graph: &ImplicationGraph, deleted: &BTreeSet<usize>) -> bool {
    graph.consistent(|e| match graph.origin(e) {
        Some(c) => !deleted.contains(&c),
        None => true,
    })
}

/// Applies the bias threshold: pays for boundary edges of the high-bias set
/// and removes its variables from the instance.
pub fn preprocess_bias(
    n: usize,
    clauses: &[(Lit, Lit)],
    sdp: &SdpSolution,
    theta: f64,
) -> Preprocessed {
    let in_b_plus = |l: Lit| sdp.bias(l) >= theta;
    let in_b_minus = |l: Lit| sdp.bias(l) <= -theta;
    let mut deleted = BTreeSet::new();
    for (id, &(lx, ly)) in clauses.iter().enumerate() {
        for (p, q) in [(lx.negate(), ly), (ly.negate(), lx)] {
            let out_boundary = in_b_plus(p) && !in_b_plus(q);
            let in_boundary = in_b_minus(q) && !in_b_minus(p);
            if out_boundary || in_boundary {
                deleted.insert(id);
            }
        }
    }
    let mut removed_vars = vec![false; n];
    let mut forced = Vec::new();
    let mut b_plus_size = 0;
    for var in 0..n {
        for lit in [Lit::positive(var), Lit::negative(var)] {
            if in_b_plus(lit) {
                b_plus_size += 1;
                if !removed_vars[var] {
                    removed_vars[var] = true;
                    forced.push((var, !lit.is_negated()));
                }
            }
        }
    }
    Preprocessed {
        theta,
        deleted,
        removed_vars,
        forced,
        b_plus_size,
    }
}

/// Runs `trials` ball-rounding passes on the preprocessed instance and keeps
/// the cheapest (first trial wins ties). Each pass orders the surviving
/// variables at random; the ball pair around a variable's nonnegative-bias
/// literal pays for its boundary edges and removes its members.
pub fn round_ckr(
    n: usize,
    clauses: &[(Lit, Lit)],
    sdp: &SdpSolution,
    pre: &Preprocessed,
    seed: u64,
    trials: usize,
) -> RoundingOutcome {
    let graph = implication_graph(n, clauses);
    let mut best: Option<(BTreeSet<usize>, Vec<RoundEvent>)> = None;
    for trial in 0..trials.max(1) {
        let (deleted, trace) = ckr_trial(
            n,
            clauses,
            sdp,
            pre,
            derive_seed(seed, &format!("trial-{trial}")),
        );
        if best.as_ref().map_or(true, |(d, _)| deleted.len() < d.len()) {
            best = Some((deleted, trace));
        }
    }
    let (deleted, trace) = best.expect("at least one trial");
    finish_outcome(n, clauses, &graph, deleted, trace, sdp.converged)
}

fn finish_outcome(
    _n: usize,
    clauses: &[(Lit, Lit)],
    graph: &ImplicationGraph,
    deleted: BTreeSet<usize>,
    trace: Vec<RoundEvent>,
    sdp_converged: bool,
) -> RoundingOutcome {
    let comp = graph.components(|e| match graph.origin(e) {
        Some(c) => !deleted.contains(&c),
        None => true,
    });
    let var_count = graph.literal_count() / 2;
    let mut assignment = vec![false; var_count];
    let mut consistent = true;
    for v in 0..var_count {
        let pos = comp[Lit::positive(v).index()];
        let neg = comp[Lit::negative(v).index()];
        if pos == neg {
            consistent = false;
            break;
        }
        assignment[v] = pos < neg;
    }
    debug_assert!(consistent, "ball rounding left an inconsistent graph");
    let (assignment, assignment_cost) = if consistent {
        let cost = clauses
            .iter()
            .filter(|&&(lx, ly)| {
                let truth = |l: Lit| assignment[l.var()] != l.is_negated();
                !truth(lx) && !truth(ly)
            })
            .count();
        (Some(assignment), cost)
    } else {
        (None, usize::MAX)
    };
    RoundingOutcome {
        cost: deleted.len(),
        deleted,
        assignment,
        assignment_cost,
        trace,
        sdp_converged,
    }
}

fn ckr_trial(
    n: usize,
    clauses: &[(Lit, Lit)],
    sdp: &SdpSolution,
    pre: &Preprocessed,
    seed: u64,
) -> (BTreeSet<usize>, Vec<RoundEvent>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut removed = pre.removed_vars.clone();
    let mut deleted = pre.deleted.clone();
    let mut trace = vec![RoundEvent::Preprocess {
        theta: pre.theta,
        b_plus: pre.b_plus_size,
        deleted: deleted.len(),
    }];

    let mut order: Vec<usize> = (0..n).filter(|&v| !removed[v]).collect();
    order.shuffle(&mut rng);

    for &var in &order {
        if removed[var] {
            continue;
        }
        let center = if sdp.bias(Lit::positive(var)) >= 0.0 {
            Lit::positive(var)
        } else {
            Lit::negative(var)
        };
        let gamma: f64 = rng.random_range(0.1..0.11);
        let alive = |l: Lit| !removed[l.var()];
        let in_out_ball =
            |l: Lit| alive(l) && sdp.distance(Point::Literal(center), Point::Literal(l)) <= gamma;
        let in_in_ball = |l: Lit| {
            alive(l)
                && sdp.distance(Point::Literal(l), Point::Literal(center.negate())) <= gamma
        };

        let mut round_deleted = 0usize;
        for (id, &(lx, ly)) in clauses.iter().enumerate() {
            if deleted.contains(&id) {
                continue;
            }
            let mut pay = false;
            for (p, q) in [(lx.negate(), ly), (ly.negate(), lx)] {
                if !alive(p) || !alive(q) {
                    continue; // edge already removed from the instance
                }
                if (in_out_ball(p) && !in_out_ball(q)) || (in_in_ball(q) && !in_in_ball(p)) {
                    pay = true;
                }
            }
            if pay && deleted.insert(id) {
                round_deleted += 1;
            }
        }

        let mut out_size = 0;
        let mut in_size = 0;
        let mut to_remove: Vec<usize> = Vec::new();
        for v in 0..n {
            if removed[v] {
                continue;
            }
            for l in [Lit::positive(v), Lit::negative(v)] {
                let o = in_out_ball(l);
                let i = in_in_ball(l);
                // the out-ball is exactly the negated in-ball
                debug_assert_eq!(o, in_in_ball(l.negate()), "ball symmetry broke");
                out_size += o as usize;
                in_size += i as usize;
                if o || i {
                    to_remove.push(v);
                }
            }
        }
        for v in to_remove {
            removed[v] = true;
        }
        debug_assert!(removed[var], "center variable must leave the instance");
        trace.push(RoundEvent::Ball {
            center,
            gamma,
            out_size,
            in_size,
            deleted: round_deleted,
        });
    }
    (deleted, trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{all_positive_ksat, random_complete, Instance};
    use crate::min2sat::sdp::{solve_sdp, SdpParams, SdpSolution};
    use crate::min2sat::two_sat_clauses;

    #[test]
    fn consistency_on_empty_graph() {
        let graph = ImplicationGraph::new(3);
        assert!(consistency_check(&graph, &BTreeSet::new()));
    }

    #[test]
    fn contradictory_forcing_edges_break_consistency() {
        // x -> !x and !x -> x put both literals in one component
        let mut graph = ImplicationGraph::new(1);
        graph.add_unit_edge(Lit::negative(0), Some(0));
        graph.add_unit_edge(Lit::positive(0), Some(1));
        assert!(!consistency_check(&graph, &BTreeSet::new()));
        assert!(consistency_check(&graph, &[0usize].into_iter().collect()));
        assert!(consistency_check(&graph, &[1usize].into_iter().collect()));
    }

    #[test]
    fn integral_solution_preprocessing_pays_nothing() {
        let inst = all_positive_ksat(2, 7);
        let clauses = two_sat_clauses(&inst).unwrap();
        let sdp = SdpSolution::integral(&vec![true; 7], 4);
        let pre = preprocess_bias(7, &clauses, &sdp, 0.0015);
        assert!(pre.deleted.is_empty(), "paid {:?}", pre.deleted);
        // every variable leaves with its positive literal true
        assert_eq!(pre.forced.len(), 7);
        assert!(pre.forced.iter().all(|&(_, value)| value));
    }

    #[test]
    fn all_zero_biases_remove_nothing() {
        let inst = all_positive_ksat(2, 4);
        let clauses = two_sat_clauses(&inst).unwrap();
        // every vector orthogonal to the truth direction: all biases zero
        let rows: Vec<Vec<f64>> = (0..4).map(|_| vec![0.0, 1.0, 0.0]).collect();
        let sdp = SdpSolution::from_rows(rows);
        let pre = preprocess_bias(4, &clauses, &sdp, 0.0015);
        assert!(pre.deleted.is_empty());
        assert!(pre.forced.is_empty());
        assert_eq!(pre.b_plus_size, 0);
    }

    #[test]
    fn rounding_an_integral_satisfying_solution_costs_nothing() {
        // mixed-polarity satisfiable instance: plant an assignment and forbid
        // one violating tuple per pair
        let alpha = [true, false, true, true, false, true, false, false];
        let n = alpha.len();
        let mut inst = Instance::new(2, 2, n).unwrap();
        for i in 0..n {
            for j in i + 1..n {
                // forbid the tuple that flips alpha on i and keeps j
                inst.add_clause(&[i, j], vec![vec![!alpha[i] as u8, alpha[j] as u8]])
                    .unwrap();
            }
        }
        let clauses = two_sat_clauses(&inst).unwrap();
        let sdp = SdpSolution::integral(&alpha, 5);
        let pre = preprocess_bias(n, &clauses, &sdp, 0.0017);
        assert!(pre.deleted.is_empty());
        let outcome = round_ckr(n, &clauses, &sdp, &pre, 11, 4);
        assert_eq!(outcome.cost, 0, "trace: {:?}", outcome.trace);
        assert_eq!(outcome.assignment_cost, 0);
        let got = outcome.assignment.unwrap();
        let labels: Vec<u8> = got.iter().map(|&b| b as u8).collect();
        assert!(inst.satisfied_by(&labels));
    }

    #[test]
    fn every_outcome_leaves_a_consistent_graph() {
        for seed in 0..10 {
            let n = 5 + (seed as usize % 4);
            let inst = random_complete(2, 2, n, 1, seed + 400);
            let clauses = two_sat_clauses(&inst).unwrap();
            let sdp = solve_sdp(
                &inst,
                &SdpParams {
                    seed,
                    iterations: 600,
                    restarts: 1,
                    ..Default::default()
                },
            )
            .unwrap();
            let graph = implication_graph(n, &clauses);
            for trial_seed in 0..20 {
                let pre = preprocess_bias(n, &clauses, &sdp, 0.001 + 0.00004 * trial_seed as f64);
                let outcome = round_ckr(n, &clauses, &sdp, &pre, trial_seed, 1);
                assert!(
                    consistency_check(&graph, &outcome.deleted),
                    "seed {seed} trial {trial_seed}"
                );
                assert!(outcome.assignment_cost <= outcome.cost);
            }
        }
    }

    #[test]
    fn deletion_is_symmetric_across_edge_pairs() {
        // paying for one implication edge of a clause always pays for the
        // mirrored edge: check by re-deriving the boundary conditions
        for seed in 0..6 {
            let n = 6;
            let inst = random_complete(2, 2, n, 1, seed + 900);
            let clauses = two_sat_clauses(&inst).unwrap();
            let sdp = solve_sdp(
                &inst,
                &SdpParams {
                    seed,
                    iterations: 800,
                    restarts: 1,
                    ..Default::default()
                },
            )
            .unwrap();
            let theta = 0.0013;
            let in_b_plus = |l: Lit| sdp.bias(l) >= theta;
            let in_b_minus = |l: Lit| sdp.bias(l) <= -theta;
            for &(lx, ly) in &clauses {
                let e0 = (lx.negate(), ly);
                let e1 = (ly.negate(), lx);
                let pays = |(p, q): (Lit, Lit)| {
                    (in_b_plus(p) && !in_b_plus(q)) || (in_b_minus(q) && !in_b_minus(p))
                };
                assert_eq!(pays(e0), pays(e1), "seed {seed}");
            }
        }
    }
}
