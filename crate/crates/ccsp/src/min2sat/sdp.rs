//! Vector relaxation for complete Min-2-SAT: one unit vector per literal
//! (negations stored implicitly as sign flips), a fixed truth direction, and
//! the directed distance d(u, w) = (1 + <v0,u> - <v0,w> - <u,w>) / 4 summed
//! over clause edges as the objective. Solved by a low-rank factorization
//! under projected gradient steps; triangle inequalities are enforced lazily
//! through sampled penalty terms.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::instance::Instance;
use crate::twocsp::Lit;
use crate::util::derive_seed;

use super::{two_sat_clauses, Min2SatError};

/// Directed distance between unit vectors, computed in a fixed evaluation
/// order so that the reversal identity d(u, w) = d(-w, -u) holds exactly.
pub fn directed_distance(u: &[f64], w: &[f64], v0: &[f64]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    ((1.0 - dot(u, w)) + (dot(v0, u) - dot(v0, w))) * 0.25
}

/// A point of the relaxation metric: the truth vector or a literal vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Point {
    Truth,
    Literal(Lit),
}

/// Solver knobs. The rank default grows like the square root of the vector
/// count, which is enough for the factorization to avoid bad local minima at
/// this scale.
#[derive(Clone, Copy, Debug)]
pub struct SdpParams {
    pub seed: u64,
    pub iterations: usize,
    pub rank: Option<usize>,
    pub tolerance: f64,
    pub restarts: usize,
}

impl Default for SdpParams {
    fn default() -> Self {
        SdpParams {
            seed: 0,
            iterations: 5000,
            rank: None,
            tolerance: 1e-4,
            restarts: 2,
        }
    }
}

fn default_rank(n: usize) -> usize {
    (2 * n + 1).min((4.0 * n as f64).sqrt().ceil() as usize + 2).max(3)
}

/// An approximately feasible relaxation solution. Unit norms and the
/// literal/negation symmetry hold by construction; triangle feasibility is
/// reported through `max_violation` against the solver tolerance.
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub dim: usize,
    pub objective: f64,
    pub converged: bool,
    pub max_violation: f64,
    v0: Vec<f64>,
    rows: Vec<f64>,   // n x dim, one unit row per variable
    gram: Vec<f64>,   // n x n, symmetric, unit diagonal
    biases: Vec<f64>, // first coordinate per variable
    n: usize,
}

impl SdpSolution {
    /// Builds a solution from explicit unit rows (one per variable); used to
    /// pin down rounding behavior on hand-made configurations.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Self {
        let n = rows.len();
        let dim = rows.first().map_or(1, |r| r.len());
        let mut flat = Vec::with_capacity(n * dim);
        for r in &rows {
            assert_eq!(r.len(), dim);
            let norm: f64 = r.iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-9, "rows must be unit vectors");
            flat.extend_from_slice(r);
        }
        let mut v0 = vec![0.0; dim];
        v0[0] = 1.0;
        let mut gram = vec![0.0; n * n];
        for x in 0..n {
            gram[x * n + x] = 1.0;
            for y in x + 1..n {
                let dot: f64 = rows[x].iter().zip(&rows[y]).map(|(a, b)| a * b).sum();
                gram[x * n + y] = dot;
                gram[y * n + x] = dot;
            }
        }
        let biases: Vec<f64> = rows.iter().map(|r| r[0]).collect();
        SdpSolution {
            dim,
            objective: 0.0,
            converged: true,
            max_violation: 0.0,
            v0,
            rows: flat,
            gram,
            biases,
            n,
        }
    }

    /// The integral solution of a Boolean assignment: true variables sit on
    /// the truth vector, false ones on its negation.
    pub fn integral(assignment: &[bool], dim: usize) -> Self {
        let rows: Vec<Vec<f64>> = assignment
            .iter()
            .map(|&b| {
                let mut row = vec![0.0; dim.max(1)];
                row[0] = if b { 1.0 } else { -1.0 };
                row
            })
            .collect();
        Self::from_rows(rows)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn truth_vector(&self) -> &[f64] {
        &self.v0
    }

    /// The vector of a literal (negations flip the variable row).
    pub fn literal_vector(&self, lit: Lit) -> Vec<f64> {
        let row = &self.rows[lit.var() * self.dim..(lit.var() + 1) * self.dim];
        let sign = if lit.is_negated() { -1.0 } else { 1.0 };
        row.iter().map(|&x| sign * x).collect()
    }

    /// Bias of a literal toward truth.
    pub fn bias(&self, lit: Lit) -> f64 {
        let b = self.biases[lit.var()];
        if lit.is_negated() {
            -b
        } else {
            b
        }
    }

    fn inner(&self, a: Point, b: Point) -> f64 {
        match (a, b) {
            (Point::Truth, Point::Truth) => 1.0,
            (Point::Truth, Point::Literal(l)) | (Point::Literal(l), Point::Truth) => self.bias(l),
            (Point::Literal(p), Point::Literal(q)) => {
                let g = self.gram[p.var() * self.n + q.var()];
                if p.is_negated() == q.is_negated() {
                    g
                } else {
                    -g
                }
            }
        }
    }

    /// Directed distance between two points, evaluated in a fixed order so
    /// that d(a, b) == d(-b, -a) is bit-exact.
    pub fn distance(&self, a: Point, b: Point) -> f64 {
        let g = self.inner(a, b);
        let bias_a = self.inner(Point::Truth, a);
        let bias_b = self.inner(Point::Truth, b);
        ((1.0 - g) + (bias_a - bias_b)) * 0.25
    }

    pub fn distance_lits(&self, p: Lit, q: Lit) -> f64 {
        self.distance(Point::Literal(p), Point::Literal(q))
    }

    /// Violation of the directed triangle inequality d(a,b) + d(b,c) >= d(a,c),
    /// nonnegative when violated.
    pub fn triangle_violation(&self, a: Point, b: Point, c: Point) -> f64 {
        -(1.0 - self.inner(a, b) - self.inner(b, c) + self.inner(a, c))
    }

    /// Largest violation over `samples` random triples of points.
    pub fn sample_max_violation(&self, samples: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let triple: Vec<Point> = (0..3).map(|_| random_point(&mut rng, self.n)).collect();
            worst = worst.max(self.triangle_violation(triple[0], triple[1], triple[2]));
        }
        worst
    }
}

fn random_point(rng: &mut ChaCha8Rng, n: usize) -> Point {
    let idx = rng.random_range(0..=2 * n);
    if idx == 2 * n {
        Point::Truth
    } else {
        Point::Literal(Lit(idx as u32))
    }
}

/// A penalty triple over signed variable rows; row index `usize::MAX` stands
/// for the truth vector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct RawPoint {
    row: usize,
    negated: bool,
}

const TRUTH_ROW: usize = usize::MAX;

fn raw(point: Point) -> RawPoint {
    match point {
        Point::Truth => RawPoint {
            row: TRUTH_ROW,
            negated: false,
        },
        Point::Literal(l) => RawPoint {
            row: l.var(),
            negated: l.is_negated(),
        },
    }
}

/// Flip-descent over full assignments: returns the cheapest assignment found
/// across random starts. Used to warm-start the factorization.
fn local_search(n: usize, clauses: &[(Lit, Lit)], seed: u64, tries: usize) -> (usize, Vec<bool>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cost = |a: &[bool]| -> usize {
        clauses
            .iter()
            .filter(|&&(lx, ly)| {
                let truth = |l: Lit| a[l.var()] != l.is_negated();
                !truth(lx) && !truth(ly)
            })
            .count()
    };
    let mut best: Option<(usize, Vec<bool>)> = None;
    for _ in 0..tries.max(1) {
        let mut a: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let mut c = cost(&a);
        loop {
            let mut improved = false;
            for v in 0..n {
                a[v] = !a[v];
                let c2 = cost(&a);
                if c2 < c {
                    c = c2;
                    improved = true;
                } else {
                    a[v] = !a[v];
                }
            }
            if !improved {
                break;
            }
        }
        if best.as_ref().map_or(true, |(bc, _)| c < *bc) {
            best = Some((c, a));
        }
        if best.as_ref().unwrap().0 == 0 {
            break;
        }
    }
    best.expect("at least one try")
}

/// Solves the relaxation; the returned solution is usable by the rounding
/// stage even when the feasibility tolerance was not met (flagged through
/// `converged` and `max_violation`).
///
/// Candidates: a descent warm-started from a flip-search assignment, random
/// restarts, and the warm assignment's integral configuration itself (which
/// is exactly feasible and floors the reported value at the search cost).
pub fn solve_sdp(inst: &Instance, params: &SdpParams) -> Result<SdpSolution, Min2SatError> {
    let clauses = two_sat_clauses(inst)?;
    let n = inst.n();
    let dim = params.rank.unwrap_or_else(|| default_rank(n));
    let (ls_cost, ls_assignment) =
        local_search(n, &clauses, derive_seed(params.seed, "warm-start"), 24);

    let mut integral = SdpSolution::integral(&ls_assignment, dim);
    integral.objective = ls_cost as f64;
    let mut best = integral;

    for restart in 0..params.restarts.max(1) {
        let seed = derive_seed(params.seed, &format!("sdp-restart-{restart}"));
        let init = if restart == 0 {
            Some(ls_assignment.as_slice())
        } else {
            None
        };
        let candidate = optimize(n, dim, &clauses, params, seed, init);
        if (candidate.converged, -candidate.objective) > (best.converged, -best.objective) {
            best = candidate;
        }
    }
    Ok(best)
}

/// One clause edge as sign data: the objective term for clause (lx | ly) is
/// d(v[!lx], v[ly]).
struct ClauseTerm {
    x: usize,
    y: usize,
    sp: f64, // sign of the tail vector (!lx)
    sq: f64, // sign of the head vector (ly)
}

fn optimize(
    n: usize,
    dim: usize,
    clauses: &[(Lit, Lit)],
    params: &SdpParams,
    seed: u64,
    warm: Option<&[bool]>,
) -> SdpSolution {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let terms: Vec<ClauseTerm> = clauses
        .iter()
        .map(|&(lx, ly)| ClauseTerm {
            x: lx.var(),
            y: ly.var(),
            sp: if lx.is_negated() { 1.0 } else { -1.0 },
            sq: if ly.is_negated() { -1.0 } else { 1.0 },
        })
        .collect();

    // nonnegativity of every clause term is itself a triangle constraint on
    // (v0, lx, !ly); keep those always active
    let persistent: Vec<[RawPoint; 3]> = clauses
        .iter()
        .map(|&(lx, ly)| {
            [
                raw(Point::Truth),
                raw(Point::Literal(lx)),
                raw(Point::Literal(ly.negate())),
            ]
        })
        .collect();

    let mut rows = vec![0.0f64; n * dim];
    for (v, row) in rows.chunks_mut(dim).enumerate() {
        let mut norm = 0.0;
        for x in row.iter_mut() {
            // a uniform cube re-normalized is isotropic enough here
            *x = rng.random_range(-1.0..1.0);
            norm += *x * *x;
        }
        let inv = 1.0 / norm.sqrt();
        for x in row.iter_mut() {
            *x *= inv;
        }
        if let Some(assignment) = warm {
            // near the assignment's corner with a little exploration noise
            let pole = if assignment[v] { 1.0 } else { -1.0 };
            for x in row.iter_mut() {
                *x *= 0.05;
            }
            row[0] += pole;
            let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
    }

    let mut active: Vec<[RawPoint; 3]> = Vec::new();
    let mut grad = vec![0.0f64; n * dim];
    let mut adam_m = vec![0.0f64; n * dim];
    let mut adam_v = vec![0.0f64; n * dim];
    let (beta1, beta2, eps) = (0.9, 0.999, 1e-8);

    let iterations = params.iterations.max(1);
    for iter in 0..iterations {
        // two phases: steady descent with a mild penalty first, then decay
        // the step while stiffening the penalty so feasibility tightens
        // without ever drowning the objective
        let progress = iter as f64 / iterations as f64;
        let lr = if progress < 0.5 {
            0.04
        } else {
            0.04 * (1e-6f64 / 0.04).powf((progress - 0.5) * 2.0)
        };
        let penalty_weight = match progress {
            p if p < 0.5 => 8.0,
            p if p < 0.7 => 64.0,
            p if p < 0.85 => 512.0,
            _ => 2048.0,
        };

        grad.iter_mut().for_each(|g| *g = 0.0);
        for t in &terms {
            let (xr, yr) = (&rows[t.x * dim..t.x * dim + dim], &rows[t.y * dim..t.y * dim + dim]);
            let cross = -0.25 * t.sp * t.sq;
            for d in 0..dim {
                grad[t.x * dim + d] += cross * yr[d];
                grad[t.y * dim + d] += cross * xr[d];
            }
            grad[t.x * dim] += 0.25 * t.sp;
            grad[t.y * dim] -= 0.25 * t.sq;
        }
        for triple in persistent.iter().chain(active.iter()) {
            accumulate_triangle_penalty(&rows, dim, triple, penalty_weight, &mut grad);
        }

        for i in 0..n * dim {
            adam_m[i] = beta1 * adam_m[i] + (1.0 - beta1) * grad[i];
            adam_v[i] = beta2 * adam_v[i] + (1.0 - beta2) * grad[i] * grad[i];
            let mh = adam_m[i] / (1.0 - beta1.powi(iter as i32 + 1));
            let vh = adam_v[i] / (1.0 - beta2.powi(iter as i32 + 1));
            rows[i] -= lr * mh / (vh.sqrt() + eps);
        }
        for row in rows.chunks_mut(dim) {
            let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            let inv = 1.0 / norm;
            for x in row.iter_mut() {
                *x *= inv;
            }
        }

        // refresh the active triple set periodically, keeping near-boundary
        // triples around so the active manifold stays stable while polishing
        if iter % 25 == 24 {
            active.retain(|t| triangle_gap(&rows, dim, t) < 1e-3);
            for _ in 0..2000 {
                let triple = [
                    raw(random_point(&mut rng, n)),
                    raw(random_point(&mut rng, n)),
                    raw(random_point(&mut rng, n)),
                ];
                if triangle_gap(&rows, dim, &triple) < -1e-9 && active.len() < 20_000 {
                    active.push(triple);
                }
            }
        }
    }

    finish(n, dim, &rows, &terms, params, seed)
}

fn row_dot(rows: &[f64], dim: usize, a: RawPoint, b: RawPoint) -> f64 {
    let sign = |p: RawPoint| if p.negated { -1.0 } else { 1.0 };
    match (a.row, b.row) {
        (TRUTH_ROW, TRUTH_ROW) => 1.0,
        (TRUTH_ROW, r) => sign(b) * rows[r * dim],
        (r, TRUTH_ROW) => sign(a) * rows[r * dim],
        (ra, rb) => {
            let dot: f64 = rows[ra * dim..ra * dim + dim]
                .iter()
                .zip(&rows[rb * dim..rb * dim + dim])
                .map(|(x, y)| x * y)
                .sum();
            sign(a) * sign(b) * dot
        }
    }
}

/// Slack of the triangle inequality for a (middle-pivot) triple; negative
/// means violated.
fn triangle_gap(rows: &[f64], dim: usize, t: &[RawPoint; 3]) -> f64 {
    1.0 - row_dot(rows, dim, t[0], t[1]) - row_dot(rows, dim, t[1], t[2])
        + row_dot(rows, dim, t[0], t[2])
}

fn accumulate_triangle_penalty(
    rows: &[f64],
    dim: usize,
    t: &[RawPoint; 3],
    weight: f64,
    grad: &mut [f64],
) {
    let gap = triangle_gap(rows, dim, t);
    if gap >= 0.0 {
        return;
    }
    // d/dx of weight * gap^2 with gap licit only through the inner products
    let scale = 2.0 * weight * gap;
    let mut add = |target: RawPoint, source: RawPoint, factor: f64| {
        if target.row == TRUTH_ROW {
            return;
        }
        let t_sign = if target.negated { -1.0 } else { 1.0 };
        if source.row == TRUTH_ROW {
            grad[target.row * dim] += scale * factor * t_sign;
        } else {
            let s_sign = if source.negated { -1.0 } else { 1.0 };
            let base = source.row * dim;
            let tgt = target.row * dim;
            for d in 0..dim {
                grad[tgt + d] += scale * factor * t_sign * s_sign * rows[base + d];
            }
        }
    };
    // gap = 1 - <a,b> - <b,c> + <a,c>
    add(t[0], t[1], -1.0);
    add(t[1], t[0], -1.0);
    add(t[1], t[2], -1.0);
    add(t[2], t[1], -1.0);
    add(t[0], t[2], 1.0);
    add(t[2], t[0], 1.0);
}

fn finish(
    n: usize,
    dim: usize,
    rows: &[f64],
    terms: &[ClauseTerm],
    params: &SdpParams,
    seed: u64,
) -> SdpSolution {
    let mut v0 = vec![0.0; dim];
    v0[0] = 1.0;
    let mut gram = vec![0.0; n * n];
    for x in 0..n {
        gram[x * n + x] = 1.0;
        for y in x + 1..n {
            let dot: f64 = rows[x * dim..x * dim + dim]
                .iter()
                .zip(&rows[y * dim..y * dim + dim])
                .map(|(a, b)| a * b)
                .sum();
            gram[x * n + y] = dot;
            gram[y * n + x] = dot;
        }
    }
    let biases: Vec<f64> = (0..n).map(|x| rows[x * dim]).collect();
    let mut solution = SdpSolution {
        dim,
        objective: 0.0,
        converged: false,
        max_violation: 0.0,
        v0,
        rows: rows.to_vec(),
        gram,
        biases,
        n,
    };
    solution.objective = terms
        .iter()
        .map(|t| {
            let g = t.sp * t.sq * solution.gram[t.x * solution.n + t.y];
            let bp = t.sp * solution.biases[t.x];
            let bq = t.sq * solution.biases[t.y];
            ((1.0 - g) + (bp - bq)) * 0.25
        })
        .sum();
    solution.max_violation =
        solution.sample_max_violation(10_000, derive_seed(seed, "violation-sample"));
    solution.converged = solution.max_violation <= params.tolerance;
    solution
}
