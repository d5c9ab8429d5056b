//! Finite metric spaces, correspondences and Gromov-Hausdorff bounds.

use rayon::prelude::*;

use crate::degeneration::LimitGraph;
use crate::error::{argument, Error, Result};
use crate::fiber::{FiberComplex, FiberPoint};
use crate::graph::{EdgeId, GraphPoint, MetricGraph};

/// Labelled symmetric distance matrix with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct FiniteMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<f64>>,
}

impl FiniteMetricSpace {
    /// Checks shape, exact symmetry, zero diagonal and finite nonnegative
    /// entries. The triangle inequality is checked by [`validate_metric`].
    pub fn new(labels: Vec<String>, dist: Vec<Vec<f64>>) -> Result<Self> {
        let n = labels.len();
        if dist.len() != n || dist.iter().any(|row| row.len() != n) {
            return Err(argument(format!("distance matrix must be {n}x{n}")));
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(argument(format!("nonzero diagonal entry at {i}")));
            }
            for j in 0..n {
                let d = dist[i][j];
                if !(d.is_finite() && d >= 0.0) {
                    return Err(argument(format!("entry ({i}, {j}) = {d} is not a finite nonnegative real")));
                }
                if d != dist[j][i] {
                    return Err(argument(format!("matrix is not symmetric at ({i}, {j})")));
                }
            }
        }
        Ok(FiniteMetricSpace { labels, dist })
    }

    /// Space with labels `0, 1, ...`.
    pub fn from_matrix(dist: Vec<Vec<f64>>) -> Result<Self> {
        Self::new((0..dist.len()).map(|i| i.to_string()).collect(), dist)
    }

    pub fn point() -> Self {
        FiniteMetricSpace { labels: vec!["0".into()], dist: vec![vec![0.0]] }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Distances divided by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(argument(format!("scale factor {factor} must be positive")));
        }
        let dist = self.dist.iter().map(|row| row.iter().map(|d| d / factor).collect()).collect();
        Ok(FiniteMetricSpace { labels: self.labels.clone(), dist })
    }

    pub fn eccentricities(&self) -> Vec<f64> {
        self.dist.iter().map(|row| row.iter().copied().fold(0.0, f64::max)).collect()
    }

    /// Row-major CSV with a header row of labels; entries use the shortest
    /// decimal that round-trips.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.labels).expect("in-memory write");
        for row in &self.dist {
            w.write_record(row.iter().map(|d| format!("{d:?}"))).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let labels: Vec<String> =
            r.headers().map_err(|e| Error::Parse(e.to_string()))?.iter().map(str::to_string).collect();
        let mut dist = Vec::new();
        for (k, record) in r.records().enumerate() {
            let record = record.map_err(|e| Error::Parse(e.to_string()))?;
            let row = record
                .iter()
                .map(|f| f.trim().parse::<f64>().map_err(|_| Error::Parse(format!("row {}: bad number {f:?}", k + 1))))
                .collect::<Result<Vec<f64>>>()?;
            dist.push(row);
        }
        Self::new(labels, dist).map_err(|e| Error::Parse(e.to_string()))
    }
}

/// Symmetry, zero diagonal and the triangle inequality, each within `tol`.
pub fn validate_metric(m: &FiniteMetricSpace, tol: f64) -> bool {
    let n = m.len();
    let d = &m.dist;
    (0..n).all(|i| d[i][i].abs() <= tol && (0..n).all(|j| (d[i][j] - d[j][i]).abs() <= tol && d[i][j] >= -tol))
        && (0..n).into_par_iter().all(|i| (0..n).all(|j| (0..n).all(|k| d[i][j] <= d[i][k] + d[k][j] + tol)))
}

/// Relation between the points of two finite spaces, as index pairs.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Correspondence {
    pub pairs: Vec<(usize, usize)>,
}

impl Correspondence {
    pub fn identity(n: usize) -> Self {
        Correspondence { pairs: (0..n).map(|i| (i, i)).collect() }
    }

    /// Errors unless every index of both sides occurs.
    pub fn check(&self, n1: usize, n2: usize) -> Result<()> {
        let mut left = vec![false; n1];
        let mut right = vec![false; n2];
        for &(a, b) in &self.pairs {
            if a >= n1 || b >= n2 {
                return Err(argument(format!("pair ({a}, {b}) out of range")));
            }
            left[a] = true;
            right[b] = true;
        }
        if let Some(a) = left.iter().position(|&x| !x) {
            return Err(argument(format!("correspondence misses point {a} of the first space")));
        }
        if let Some(b) = right.iter().position(|&x| !x) {
            return Err(argument(format!("correspondence misses point {b} of the second space")));
        }
        Ok(())
    }
}

pub fn distortion(m1: &FiniteMetricSpace, m2: &FiniteMetricSpace, r: &Correspondence) -> Result<f64> {
    r.check(m1.len(), m2.len())?;
    let p = &r.pairs;
    Ok((0..p.len())
        .into_par_iter()
        .map(|a| {
            let (x, y) = p[a];
            p[a + 1..].iter().map(|&(x2, y2)| (m1.d(x, x2) - m2.d(y, y2)).abs()).fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max))
}

pub fn gh_upper(m1: &FiniteMetricSpace, m2: &FiniteMetricSpace, r: &Correspondence) -> Result<f64> {
    Ok(distortion(m1, m2, r)? / 2.0)
}

/// Half the Hausdorff distance between two finite sets of reals.
fn half_hausdorff(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let one_sided = |from: &[f64], to: &[f64]| {
        from.iter()
            .map(|&x| {
                let k = to.partition_point(|&y| y < x);
                let mut best = f64::INFINITY;
                if k < to.len() {
                    best = best.min(to[k] - x);
                }
                if k > 0 {
                    best = best.min(x - to[k - 1]);
                }
                best
            })
            .fold(0.0, f64::max)
    };
    0.5 * one_sided(&a, &b).max(one_sided(&b, &a))
}

/// Lower bound on the GH distance: the largest of the diameter bound, half the
/// Hausdorff distance between eccentricity value sets, and half the Hausdorff
/// distance between the sets of all pairwise distances.
pub fn gh_lower(m1: &FiniteMetricSpace, m2: &FiniteMetricSpace) -> f64 {
    if m1.is_empty() || m2.is_empty() {
        return 0.0;
    }
    let diam = 0.5 * (m1.diameter() - m2.diameter()).abs();
    let ecc = half_hausdorff(&m1.eccentricities(), &m2.eccentricities());
    let values = |m: &FiniteMetricSpace| {
        let mut v: Vec<f64> = (0..m.len()).flat_map(|i| (i..m.len()).map(move |j| (i, j))).map(|(i, j)| m.d(i, j)).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    };
    let set = half_hausdorff(&values(m1), &values(m2));
    diam.max(ecc).max(set)
}

pub const GH_EXACT_MAX_POINTS: usize = 12;

/// Exact GH distance by searching over correspondences. The optimum distortion
/// is one of the values `|d1 - d2|`; each candidate is tested for a pair of maps
/// `f: X -> Y`, `g: Y -> X` whose combined graph has distortion at most it.
pub fn gh_exact_small(m1: &FiniteMetricSpace, m2: &FiniteMetricSpace) -> Result<f64> {
    if m1.len() + m2.len() > GH_EXACT_MAX_POINTS {
        return Err(argument(format!(
            "exact GH is limited to {GH_EXACT_MAX_POINTS} points in total, got {}",
            m1.len() + m2.len()
        )));
    }
    if m1.is_empty() || m2.is_empty() {
        return Err(argument("exact GH needs nonempty spaces"));
    }
    let mut candidates = vec![0.0];
    for a in m1.dist.iter().flatten() {
        for b in m2.dist.iter().flatten() {
            candidates.push((a - b).abs());
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // the largest candidate is always feasible
    let (mut lo, mut hi) = (0usize, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if Feasibility::new(m1, m2, candidates[mid]).solve() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(candidates[lo] / 2.0)
}

/// Backtracking search with forward checking for a correspondence of
/// distortion at most `t`. Variables are the images of points of X, then the
/// preimages of points of Y; each value is a pair `(x, y)`.
struct Feasibility<'a> {
    m1: &'a FiniteMetricSpace,
    m2: &'a FiniteMetricSpace,
    t: f64,
    chosen: Vec<(usize, usize)>,
}

impl<'a> Feasibility<'a> {
    fn new(m1: &'a FiniteMetricSpace, m2: &'a FiniteMetricSpace, t: f64) -> Self {
        Feasibility { m1, m2, t, chosen: Vec::new() }
    }

    fn compatible(&self, a: (usize, usize), b: (usize, usize)) -> bool {
        // tiny slack absorbs rounding in the candidate subtraction
        (self.m1.d(a.0, b.0) - self.m2.d(a.1, b.1)).abs() <= self.t * (1.0 + 1e-12) + 1e-15
    }

    fn solve(&mut self) -> bool {
        let (n1, n2) = (self.m1.len(), self.m2.len());
        let mut domains: Vec<Vec<(usize, usize)>> = Vec::with_capacity(n1 + n2);
        for x in 0..n1 {
            domains.push((0..n2).map(|y| (x, y)).collect());
        }
        for y in 0..n2 {
            domains.push((0..n1).map(|x| (x, y)).collect());
        }
        self.search(domains)
    }

    fn search(&mut self, domains: Vec<Vec<(usize, usize)>>) -> bool {
        // most constrained variable first
        let Some((var, _)) = domains.iter().enumerate().min_by_key(|(_, d)| d.len()) else {
            return true;
        };
        for &value in &domains[var] {
            let mut next = Vec::with_capacity(domains.len() - 1);
            let mut dead = false;
            for (k, d) in domains.iter().enumerate() {
                if k == var {
                    continue;
                }
                let pruned: Vec<_> = d.iter().copied().filter(|&v| self.compatible(value, v)).collect();
                if pruned.is_empty() {
                    dead = true;
                    break;
                }
                next.push(pruned);
            }
            if dead {
                continue;
            }
            self.chosen.push(value);
            if self.search(next) {
                return true;
            }
            self.chosen.pop();
        }
        false
    }
}

/// Greedy farthest-point net starting from point 0: every point is within
/// `eps` of the returned indices.
pub fn epsilon_net(m: &FiniteMetricSpace, eps: f64) -> Result<Vec<usize>> {
    if !(eps > 0.0) {
        return Err(argument(format!("eps = {eps} must be positive")));
    }
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let mut net = vec![0];
    let mut gap: Vec<f64> = m.dist[0].clone();
    loop {
        let (far, &d) = gap.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0))).expect("nonempty");
        if d <= eps {
            return Ok(net);
        }
        net.push(far);
        for (g, &x) in gap.iter_mut().zip(&m.dist[far]) {
            *g = g.min(x);
        }
    }
}

/// Largest distance from a point of the graph to the nearest of `points`.
/// On each edge the distance to each point is built from slope ±1 pieces, so
/// the maximum of their minimum sits at an edge end, at a point's own offset,
/// or where a rising piece meets a falling one.
pub fn covering_radius(g: &MetricGraph<f64>, points: &[GraphPoint<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Err(argument("covering radius of an empty set"));
    }
    let mut worst: f64 = 0.0;
    for (k, e) in g.edges().iter().enumerate() {
        let len = e.length;
        let mut via = Vec::with_capacity(points.len());
        let mut own = Vec::new();
        for p in points {
            via.push((g.distance(&g.vertex(e.tail)?, p)?, g.distance(&g.vertex(e.head)?, p)?));
            if let GraphPoint::Edge { edge, offset } = *p {
                if edge == EdgeId(k) {
                    own.push(offset);
                }
            }
        }
        let f = |t: f64| {
            let around = via.iter().map(|&(a, b)| (a + t).min(len - t + b)).fold(f64::INFINITY, f64::min);
            own.iter().map(|&o| (t - o).abs()).fold(around, f64::min)
        };
        // rising pieces t + c, falling pieces c - t
        let rising: Vec<f64> = via.iter().map(|v| v.0).chain(own.iter().map(|o| -o)).collect();
        let falling: Vec<f64> = via.iter().map(|v| len + v.1).chain(own.iter().copied()).collect();
        let mut best = f(0.0).max(f(len));
        for &o in &own {
            best = best.max(f(o));
        }
        for &cu in &rising {
            for &cd in &falling {
                let t = 0.5 * (cd - cu);
                if t > 0.0 && t < len {
                    best = best.max(f(t));
                }
            }
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

/// `eps`-net of a metric graph: an even subdivision cover of every edge,
/// thinned greedily while the exact covering radius stays within `eps`.
pub fn graph_epsilon_net(g: &MetricGraph<f64>, eps: f64) -> Result<Vec<GraphPoint<f64>>> {
    if !(eps > 0.0) {
        return Err(argument(format!("eps = {eps} must be positive")));
    }
    let mut net = Vec::new();
    for (k, e) in g.edges().iter().enumerate() {
        let pieces = ((e.length / (2.0 * eps)).ceil() as usize).max(1);
        for i in 0..pieces {
            net.push(g.point(EdgeId(k), e.length * (2 * i + 1) as f64 / (2 * pieces) as f64)?);
        }
    }
    if net.is_empty() {
        net.push(g.vertex(crate::graph::VertexId(0))?);
    }
    let mut i = 0;
    while i < net.len() && net.len() > 1 {
        let mut trial = net.clone();
        trial.remove(i);
        if covering_radius(g, &trial)? <= eps {
            net = trial;
        } else {
            i += 1;
        }
    }
    Ok(net)
}

/// Correspondence between a normalized fiber sample and normalized Δ.
#[derive(Clone, Debug)]
pub struct RetractionCorrespondence {
    /// Fiber sample distances divided by the sample diameter.
    pub fiber: FiniteMetricSpace,
    /// Δ distances between the retracted samples followed by the net points,
    /// divided by diam Δ.
    pub delta: FiniteMetricSpace,
    pub correspondence: Correspondence,
    /// Unnormalized diameter of the fiber sample.
    pub fiber_diameter: f64,
    pub retractions: Vec<GraphPoint<f64>>,
    pub net: Vec<GraphPoint<f64>>,
}

/// Pairs each sample point with its retraction in Δ, and each point of an
/// `eps`-net of Δ (eps relative to diam Δ) with the sample whose retraction
/// is nearest.
pub fn retraction_correspondence(
    fiber: &FiberComplex,
    limit: &LimitGraph,
    sample: &[FiberPoint],
    relative_eps: f64,
) -> Result<RetractionCorrespondence> {
    if sample.is_empty() {
        return Err(argument("retraction correspondence needs a nonempty sample"));
    }
    let raw = fiber.distance_matrix(sample)?;
    let fiber_space = FiniteMetricSpace::new((0..sample.len()).map(|i| format!("p{i}")).collect(), raw)?;
    let fiber_diameter = fiber_space.diameter();
    if fiber_diameter <= 0.0 {
        return Err(argument("fiber sample has zero diameter"));
    }
    let delta = limit.delta_real();
    let diam = delta.diameter();
    let retractions: Vec<GraphPoint<f64>> =
        sample.iter().map(|p| limit.map_real_point(&fiber.retract(p)?)).collect::<Result<_>>()?;
    let net = graph_epsilon_net(delta, relative_eps * diam)?;
    let all: Vec<GraphPoint<f64>> = retractions.iter().chain(&net).copied().collect();
    let rows: Vec<Vec<f64>> = all
        .par_iter()
        .map(|p| all.iter().map(|q| delta.distance(p, q).map(|d| d / diam)).collect::<Result<Vec<f64>>>())
        .collect::<Result<_>>()?;
    let mut d2 = rows;
    // enforce exact symmetry against rounding in the two evaluation orders
    for i in 0..d2.len() {
        d2[i][i] = 0.0;
        for j in 0..i {
            let v = d2[i][j].min(d2[j][i]);
            d2[i][j] = v;
            d2[j][i] = v;
        }
    }
    let m = sample.len();
    let labels = (0..m).map(|i| format!("r{i}")).chain((0..net.len()).map(|k| format!("net{k}"))).collect();
    let delta_space = FiniteMetricSpace::new(labels, d2)?;
    let mut pairs: Vec<(usize, usize)> = (0..m).map(|i| (i, i)).collect();
    for k in 0..net.len() {
        let row = &delta_space.dist[m + k];
        let nearest = (0..m).min_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b))).expect("nonempty");
        pairs.push((nearest, m + k));
    }
    Ok(RetractionCorrespondence {
        fiber: fiber_space.scaled(fiber_diameter)?,
        delta: delta_space,
        correspondence: Correspondence { pairs },
        fiber_diameter,
        retractions,
        net,
    })
}
