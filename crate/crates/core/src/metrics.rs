//! Probability metrics on discrete measures: Prohorov (with coupling
//! certificates), L1-Wasserstein on the line, and the gauge-weighted
//! distance `d_psi`.
//!
//! Feasibility of a `(alpha, beta)` coupling is decided by maximum flow on
//! the bipartite graph whose edges join atoms at distance `<= beta`, with
//! capacities given by the atom masses. On the line the adjacency windows
//! are intervals that move monotonically with the left atom, so a greedy
//! sweep attains the maximum flow; in higher dimension a Dinic solver runs
//! on the explicit edge list.

use thiserror::Error;

use crate::measures::{euclidean, kahan_sum, DiscreteMeasure, GaugeFunction};

/// Default certified tolerance of the Prohorov bisection.
pub const DEFAULT_PROHOROV_TOL: f64 = 1e-9;

/// Absolute slack on flow feasibility; masses are probabilities, so an
/// absolute threshold is safe.
pub const FLOW_SLACK: f64 = 1e-12;

/// Largest support for which the subset-enumeration oracle will run.
pub const BRUTEFORCE_MAX_SUPPORT: usize = 12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("operation requires dimension 1, got {0}")]
    NotUnivariate(usize),
    #[error("support of size {got} exceeds brute-force limit {limit}")]
    SupportTooLarge { got: usize, limit: usize },
    #[error("alpha and beta must be strictly positive, got alpha={alpha}, beta={beta}")]
    InvalidLevels { alpha: f64, beta: f64 },
    #[error("coupling certificate violates {0}")]
    InvalidCertificate(String),
}

/// Sparse joint-mass entries `(left atom index, right atom index, mass)`.
type FlowPlan = Vec<(u32, u32, f64)>;

/// A joint distribution witnessing Strassen's coupling condition: marginals
/// match the two measures and at most `alpha` mass sits on pairs farther
/// apart than `beta`.
#[derive(Debug, Clone)]
pub struct CouplingCertificate {
    pub alpha: f64,
    pub beta: f64,
    rows: usize,
    cols: usize,
    /// Sparse joint mass entries over `supp(mu1) x supp(mu2)`.
    entries: FlowPlan,
}

impl CouplingCertificate {
    pub fn entries(&self) -> &[(u32, u32, f64)] {
        &self.entries
    }

    /// Checks marginal agreement (within 1e-9) and the near-diagonal mass
    /// bound `>= 1 - alpha - 1e-9`.
    pub fn validate(
        &self,
        mu1: &DiscreteMeasure,
        mu2: &DiscreteMeasure,
    ) -> Result<(), MetricError> {
        const TOL: f64 = 1e-9;
        let mut row_sums = vec![0.0; self.rows];
        let mut col_sums = vec![0.0; self.cols];
        let mut near = 0.0;
        for &(i, j, m) in &self.entries {
            row_sums[i as usize] += m;
            col_sums[j as usize] += m;
            if euclidean(mu1.atom(i as usize), mu2.atom(j as usize)) <= self.beta {
                near += m;
            }
        }
        for (i, &s) in row_sums.iter().enumerate() {
            if (s - mu1.mass(i)).abs() > TOL {
                return Err(MetricError::InvalidCertificate(format!(
                    "row {i} sum {s} vs mass {}",
                    mu1.mass(i)
                )));
            }
        }
        for (j, &s) in col_sums.iter().enumerate() {
            if (s - mu2.mass(j)).abs() > TOL {
                return Err(MetricError::InvalidCertificate(format!(
                    "column {j} sum {s} vs mass {}",
                    mu2.mass(j)
                )));
            }
        }
        if near < 1.0 - self.alpha - TOL {
            return Err(MetricError::InvalidCertificate(format!(
                "near-diagonal mass {near} below 1 - alpha = {}",
                1.0 - self.alpha
            )));
        }
        Ok(())
    }
}

/// Decides whether a coupling with parameters `(alpha, beta)` exists, and
/// returns a witness when it does.
pub fn strassen_feasible(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    alpha: f64,
    beta: f64,
) -> Result<(bool, Option<CouplingCertificate>), MetricError> {
    if mu1.dim() != mu2.dim() {
        return Err(MetricError::DimensionMismatch(mu1.dim(), mu2.dim()));
    }
    if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
        return Err(MetricError::InvalidLevels { alpha, beta });
    }
    let (flow, plan) = max_coupling_flow(mu1, mu2, beta, true);
    if flow < 1.0 - alpha - FLOW_SLACK {
        return Ok((false, None));
    }
    let mut entries = plan.expect("plan requested");
    complete_coupling(&mut entries, mu1, mu2);
    Ok((
        true,
        Some(CouplingCertificate {
            alpha,
            beta,
            rows: mu1.atom_count(),
            cols: mu2.atom_count(),
            entries,
        }),
    ))
}

/// Prohorov distance to the default tolerance.
pub fn prohorov(mu1: &DiscreteMeasure, mu2: &DiscreteMeasure) -> f64 {
    prohorov_with_tol(mu1, mu2, DEFAULT_PROHOROV_TOL)
}

/// Prohorov distance by bisection on the coupling feasibility, which is
/// monotone in epsilon. Returns the midpoint of the final bracket.
pub fn prohorov_with_tol(mu1: &DiscreteMeasure, mu2: &DiscreteMeasure, tol: f64) -> f64 {
    assert_eq!(mu1.dim(), mu2.dim(), "prohorov requires equal dimensions");
    assert!(tol > 0.0);
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let (flow, _) = max_coupling_flow(mu1, mu2, mid, false);
        if flow >= 1.0 - mid - FLOW_SLACK {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Exact Prohorov distance by subset enumeration; the test oracle for
/// [`prohorov`]. Limited to supports of at most [`BRUTEFORCE_MAX_SUPPORT`].
///
/// For each subset `A` of `supp(mu1)`, `mu2[A^eps]` is a step function of
/// `eps` with breakpoints at the distances from `mu2`-atoms to `A`, so the
/// smallest feasible `eps` for that subset is available in closed form; the
/// distance is the largest such value over all subsets.
pub fn prohorov_bruteforce(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
) -> Result<f64, MetricError> {
    if mu1.dim() != mu2.dim() {
        return Err(MetricError::DimensionMismatch(mu1.dim(), mu2.dim()));
    }
    let n = mu1.atom_count();
    if n > BRUTEFORCE_MAX_SUPPORT {
        return Err(MetricError::SupportTooLarge {
            got: n,
            limit: BRUTEFORCE_MAX_SUPPORT,
        });
    }
    let k = mu2.atom_count();
    // dist[i][j] = distance from mu1 atom i to mu2 atom j.
    let dist: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..k)
                .map(|j| euclidean(mu1.atom(i), mu2.atom(j)))
                .collect()
        })
        .collect();
    let mut worst = 0.0f64;
    for mask in 1u32..(1 << n) {
        let mass_a: f64 = (0..n)
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| mu1.mass(i))
            .sum();
        // Entry distance of each mu2 atom into the fattening of A.
        let mut entry: Vec<(f64, f64)> = (0..k)
            .map(|j| {
                let d = (0..n)
                    .filter(|i| mask & (1 << i) != 0)
                    .map(|i| dist[i][j])
                    .fold(f64::INFINITY, f64::min);
                (d, mu2.mass(j))
            })
            .collect();
        entry.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // Walk the pieces of eps -> mu2[A^eps]; the first piece starts at 0.
        let best;
        let mut covered = 0.0;
        let mut t = 0;
        let mut piece_start = 0.0f64;
        loop {
            while t < k && entry[t].0 <= piece_start {
                covered += entry[t].1;
                t += 1;
            }
            let piece_end = if t < k { entry[t].0 } else { f64::INFINITY };
            let candidate = (mass_a - covered).max(piece_start);
            if candidate < piece_end || t >= k {
                best = candidate;
                break;
            }
            piece_start = piece_end;
        }
        worst = worst.max(best);
    }
    Ok(worst.max(0.0))
}

/// L1-Wasserstein distance on the line: the exact piecewise-constant
/// integral of `|F1 - F2|` over the merged atom grid.
pub fn wasserstein1(mu1: &DiscreteMeasure, mu2: &DiscreteMeasure) -> Result<f64, MetricError> {
    if mu1.dim() != 1 {
        return Err(MetricError::NotUnivariate(mu1.dim()));
    }
    if mu2.dim() != 1 {
        return Err(MetricError::NotUnivariate(mu2.dim()));
    }
    let xs = mu1.values();
    let ys = mu2.values();
    let (mut i, mut j) = (0usize, 0usize);
    let (mut f1, mut f2) = (0.0f64, 0.0f64);
    let mut prev: Option<f64> = None;
    let mut segments: Vec<f64> = Vec::with_capacity(xs.len() + ys.len());
    while i < xs.len() || j < ys.len() {
        let v = match (xs.get(i), ys.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        if let Some(p) = prev {
            segments.push((f1 - f2).abs() * (v - p));
        }
        while i < xs.len() && xs[i] == v {
            f1 += mu1.mass(i);
            i += 1;
        }
        while j < ys.len() && ys[j] == v {
            f2 += mu2.mass(j);
            j += 1;
        }
        prev = Some(v);
    }
    Ok(kahan_sum(segments))
}

/// Gauge-weighted distance: `prohorov + |integral psi d(mu1 - mu2)|`.
pub fn psi_distance(mu1: &DiscreteMeasure, mu2: &DiscreteMeasure, psi: &GaugeFunction) -> f64 {
    psi_distance_with_tol(mu1, mu2, psi, DEFAULT_PROHOROV_TOL)
}

pub fn psi_distance_with_tol(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    psi: &GaugeFunction,
    tol: f64,
) -> f64 {
    prohorov_with_tol(mu1, mu2, tol) + (mu1.gauge_integral(psi) - mu2.gauge_integral(psi)).abs()
}

/// Maximum mass shippable between the supports along pairs at distance
/// `<= beta`; optionally returns the shipping plan.
fn max_coupling_flow(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    beta: f64,
    want_plan: bool,
) -> (f64, Option<FlowPlan>) {
    if mu1.dim() == 1 {
        interval_flow_1d(mu1, mu2, beta, want_plan)
    } else {
        dinic_flow(mu1, mu2, beta, want_plan)
    }
}

/// Greedy transport on the line. Left atoms are processed in ascending
/// order; each ships to the leftmost right atoms inside its window
/// `[x - beta, x + beta]`. Windows shift monotonically with the left atom,
/// so an uncrossing argument makes the greedy flow maximal. Exhausted right
/// atoms are skipped through a path-compressed jump table.
fn interval_flow_1d(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    beta: f64,
    want_plan: bool,
) -> (f64, Option<FlowPlan>) {
    let xs = mu1.values();
    let ys = mu2.values();
    let k = ys.len();
    let mut rem: Vec<f64> = mu2.masses().to_vec();
    // next[j] = first index >= j with remaining capacity.
    let mut next: Vec<u32> = (0..=k as u32).collect();
    fn find(next: &mut [u32], j: usize) -> usize {
        let mut root = j;
        while next[root] as usize != root {
            root = next[root] as usize;
        }
        let mut cur = j;
        while next[cur] as usize != root {
            let step = next[cur] as usize;
            next[cur] = root as u32;
            cur = step;
        }
        root
    }
    let mut plan = want_plan.then(Vec::new);
    let mut shipped: Vec<f64> = Vec::with_capacity(xs.len());
    for (i, &x) in xs.iter().enumerate() {
        let lo = x - beta;
        let hi = x + beta;
        let mut need = mu1.mass(i);
        let start = ys.partition_point(|&y| y < lo);
        let mut j = find(&mut next, start);
        while need > 0.0 && j < k && ys[j] <= hi {
            let t = need.min(rem[j]);
            if t > 0.0 {
                rem[j] -= t;
                need -= t;
                if let Some(p) = plan.as_mut() {
                    p.push((i as u32, j as u32, t));
                }
            }
            if rem[j] <= 0.0 {
                next[j] = (j + 1) as u32;
            }
            j = find(&mut next, j + 1);
        }
        shipped.push(mu1.mass(i) - need);
    }
    (kahan_sum(shipped), plan)
}

/// Dinic max-flow on the explicit bipartite graph, for dimension >= 2.
fn dinic_flow(
    mu1: &DiscreteMeasure,
    mu2: &DiscreteMeasure,
    beta: f64,
    want_plan: bool,
) -> (f64, Option<FlowPlan>) {
    const EPS: f64 = 1e-15;
    let n_left = mu1.atom_count();
    let n_right = mu2.atom_count();
    let source = 0usize;
    let sink = 1 + n_left + n_right;
    let node_count = sink + 1;

    struct Graph {
        to: Vec<u32>,
        cap: Vec<f64>,
        head: Vec<Vec<u32>>,
    }
    impl Graph {
        fn add_edge(&mut self, u: usize, v: usize, c: f64) -> usize {
            let id = self.to.len();
            self.to.push(v as u32);
            self.cap.push(c);
            self.head[u].push(id as u32);
            self.to.push(u as u32);
            self.cap.push(0.0);
            self.head[v].push(id as u32 + 1);
            id
        }
    }
    let mut g = Graph {
        to: Vec::new(),
        cap: Vec::new(),
        head: vec![Vec::new(); node_count],
    };
    for i in 0..n_left {
        g.add_edge(source, 1 + i, mu1.mass(i));
    }
    let mut mid_edges: Vec<(u32, u32, usize)> = Vec::new();
    for i in 0..n_left {
        for j in 0..n_right {
            if euclidean(mu1.atom(i), mu2.atom(j)) <= beta {
                let id = g.add_edge(1 + i, 1 + n_left + j, 2.0);
                mid_edges.push((i as u32, j as u32, id));
            }
        }
    }
    for j in 0..n_right {
        g.add_edge(1 + n_left + j, sink, mu2.mass(j));
    }

    let mut total = 0.0f64;
    let mut level = vec![-1i32; node_count];
    let mut it = vec![0usize; node_count];
    loop {
        level.fill(-1);
        level[source] = 0;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &eid in &g.head[u] {
                let v = g.to[eid as usize] as usize;
                if g.cap[eid as usize] > EPS && level[v] < 0 {
                    level[v] = level[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if level[sink] < 0 {
            break;
        }
        it.fill(0);
        fn dfs(
            g: &mut Graph,
            level: &[i32],
            it: &mut [usize],
            u: usize,
            sink: usize,
            pushed: f64,
        ) -> f64 {
            if u == sink {
                return pushed;
            }
            while it[u] < g.head[u].len() {
                let eid = g.head[u][it[u]] as usize;
                let v = g.to[eid] as usize;
                if g.cap[eid] > EPS && level[v] == level[u] + 1 {
                    let d = dfs(g, level, it, v, sink, pushed.min(g.cap[eid]));
                    if d > EPS {
                        g.cap[eid] -= d;
                        g.cap[eid ^ 1] += d;
                        return d;
                    }
                }
                it[u] += 1;
            }
            0.0
        }
        loop {
            let d = dfs(&mut g, &level, &mut it, source, sink, f64::INFINITY);
            if d <= EPS {
                break;
            }
            total += d;
        }
    }
    let plan = want_plan.then(|| {
        mid_edges
            .iter()
            .filter_map(|&(i, j, id)| {
                let f = g.cap[id ^ 1]; // flow equals reverse capacity
                (f > 0.0).then_some((i, j, f))
            })
            .collect()
    });
    (total, plan)
}

/// Extends a partial shipping plan to a full coupling by pairing leftover
/// row and column mass arbitrarily (the paired mass is what the certificate
/// may spend beyond distance beta).
fn complete_coupling(entries: &mut FlowPlan, mu1: &DiscreteMeasure, mu2: &DiscreteMeasure) {
    let mut row_left: Vec<f64> = mu1.masses().to_vec();
    let mut col_left: Vec<f64> = mu2.masses().to_vec();
    for &(i, j, m) in entries.iter() {
        row_left[i as usize] -= m;
        col_left[j as usize] -= m;
    }
    let mut j = 0usize;
    for (i, &row) in row_left.iter().enumerate() {
        let mut need = row.max(0.0);
        while need > FLOW_SLACK && j < col_left.len() {
            let t = need.min(col_left[j].max(0.0));
            if t > 0.0 {
                entries.push((i as u32, j as u32, t));
                col_left[j] -= t;
                need -= t;
            }
            if col_left[j] <= FLOW_SLACK {
                j += 1;
            } else if need <= FLOW_SLACK {
                break;
            }
        }
    }
}
