//! Metric multigraphs: points on edges, the shortest-path metric, exact
//! diameters, contraction of edge sets, and enumeration of path classes
//! between two edges.
//!
//! Every edge has a *tail* (offset 0) and a *head* (offset = length). Loops and
//! parallel edges are allowed. All types are immutable once constructed.

use serde::Serialize;

use crate::error::{argument, structural, Result};
use crate::number::{Length, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct VertexId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct EdgeId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum EdgeEnd {
    /// Offset 0.
    Tail,
    /// Offset equal to the edge length.
    Head,
}

impl EdgeEnd {
    pub fn opposite(self) -> EdgeEnd {
        match self {
            EdgeEnd::Tail => EdgeEnd::Head,
            EdgeEnd::Head => EdgeEnd::Tail,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge<T> {
    pub tail: VertexId,
    pub head: VertexId,
    pub length: T,
}

impl<T> Edge<T> {
    pub fn endpoint(&self, end: EdgeEnd) -> VertexId {
        match end {
            EdgeEnd::Tail => self.tail,
            EdgeEnd::Head => self.head,
        }
    }

    pub fn is_loop(&self) -> bool {
        self.tail == self.head
    }
}

/// A point of a metric graph: a vertex, or a point strictly inside an edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GraphPoint<T = Rational> {
    Vertex(VertexId),
    Edge { edge: EdgeId, offset: T },
}

#[derive(Clone, Debug)]
pub struct MetricGraph<T = Rational> {
    vertex_count: usize,
    edges: Vec<Edge<T>>,
    incidence: Vec<Vec<(EdgeId, EdgeEnd)>>,
    /// All-pairs shortest vertex distances.
    vertex_dist: Vec<Vec<T>>,
}

impl<T: Length> MetricGraph<T> {
    /// Builds a connected metric graph from `(tail, head, length)` triples.
    pub fn new(vertex_count: usize, edges: impl IntoIterator<Item = (usize, usize, T)>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(structural("graph has no vertices"));
        }
        let mut incidence = vec![Vec::new(); vertex_count];
        let mut list = Vec::new();
        for (k, (tail, head, length)) in edges.into_iter().enumerate() {
            if tail >= vertex_count || head >= vertex_count {
                return Err(structural(format!("edge {k} references a missing vertex")));
            }
            if length.is_negative() {
                return Err(structural(format!("edge {k} has negative length {length:?}")));
            }
            incidence[tail].push((EdgeId(k), EdgeEnd::Tail));
            incidence[head].push((EdgeId(k), EdgeEnd::Head));
            list.push(Edge { tail: VertexId(tail), head: VertexId(head), length });
        }
        let vertex_dist = floyd_warshall(vertex_count, &list)
            .ok_or_else(|| structural("graph is disconnected"))?;
        Ok(MetricGraph { vertex_count, edges: list, incidence, vertex_dist })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge(&self, e: EdgeId) -> Result<&Edge<T>> {
        self.edges.get(e.0).ok_or_else(|| argument(format!("unknown edge {}", e.0)))
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count).map(VertexId)
    }

    /// Edge ends incident to `v`; a loop contributes both of its ends.
    pub fn incident(&self, v: VertexId) -> &[(EdgeId, EdgeEnd)] {
        &self.incidence[v.0]
    }

    pub fn vertex_distance(&self, u: VertexId, v: VertexId) -> T {
        self.vertex_dist[u.0][v.0]
    }

    /// Point at `offset` along `edge`, canonicalized to a vertex at either end.
    pub fn point(&self, edge: EdgeId, offset: T) -> Result<GraphPoint<T>> {
        let e = self.edge(edge)?;
        if offset.is_negative() || offset > e.length {
            return Err(argument(format!("offset {offset:?} outside edge {} of length {:?}", edge.0, e.length)));
        }
        Ok(if offset == T::zero() {
            GraphPoint::Vertex(e.tail)
        } else if offset == e.length {
            GraphPoint::Vertex(e.head)
        } else {
            GraphPoint::Edge { edge, offset }
        })
    }

    pub fn vertex(&self, v: VertexId) -> Result<GraphPoint<T>> {
        if v.0 >= self.vertex_count {
            return Err(argument(format!("unknown vertex {}", v.0)));
        }
        Ok(GraphPoint::Vertex(v))
    }

    fn check(&self, p: &GraphPoint<T>) -> Result<()> {
        match *p {
            GraphPoint::Vertex(v) => self.vertex(v).map(|_| ()),
            GraphPoint::Edge { edge, offset } => {
                let e = self.edge(edge)?;
                if offset.is_negative() || offset > e.length {
                    return Err(argument(format!("offset {offset:?} outside edge {}", edge.0)));
                }
                Ok(())
            }
        }
    }

    /// The vertices a point can leave through, with the cost of reaching each.
    fn exits(&self, p: &GraphPoint<T>) -> ([(VertexId, T); 2], usize) {
        match *p {
            GraphPoint::Vertex(v) => ([(v, T::zero()), (v, T::zero())], 1),
            GraphPoint::Edge { edge, offset } => {
                let e = &self.edges[edge.0];
                ([(e.tail, offset), (e.head, e.length - offset)], 2)
            }
        }
    }

    /// Shortest-path distance between two points.
    pub fn distance(&self, p: &GraphPoint<T>, q: &GraphPoint<T>) -> Result<T> {
        self.check(p)?;
        self.check(q)?;
        let (pe, np) = self.exits(p);
        let (qe, nq) = self.exits(q);
        let mut best: Option<T> = None;
        for &(u, cu) in &pe[..np] {
            for &(v, cv) in &qe[..nq] {
                best = Some(min_opt(best, cu + self.vertex_dist[u.0][v.0] + cv));
            }
        }
        if let (GraphPoint::Edge { edge: e1, offset: a }, GraphPoint::Edge { edge: e2, offset: b }) = (p, q) {
            if e1 == e2 {
                let direct = if a > b { *a - *b } else { *b - *a };
                best = Some(min_opt(best, direct));
            }
        }
        Ok(best.expect("at least one route"))
    }

    /// Supremum of the distance over all pairs of points, edge interiors included.
    pub fn diameter(&self) -> T {
        let mut best = T::zero();
        for v in 0..self.vertex_count {
            for w in 0..self.vertex_count {
                best = max(best, self.vertex_dist[v][w]);
            }
        }
        for (i, e1) in self.edges.iter().enumerate() {
            for (j, e2) in self.edges.iter().enumerate() {
                let m = if i == j {
                    // Behaves like a circle of circumference L + d(tail, head).
                    (e1.length + self.vertex_dist[e1.tail.0][e1.head.0]).half()
                } else {
                    self.edge_pair_max(e1, e2)
                };
                best = max(best, m);
            }
        }
        best
    }

    /// max over p on e1, q on e2 (distinct edges) of d(p, q).
    ///
    /// For fixed p the maximum over q is (d(p,a2) + d(p,b2) + L2) / 2, which is
    /// concave piecewise-linear in the offset of p, so its maximum sits at an
    /// end of the edge or at a breakpoint of one of the two terms.
    fn edge_pair_max(&self, e1: &Edge<T>, e2: &Edge<T>) -> T {
        let d = &self.vertex_dist;
        let (a1, b1, l1) = (e1.tail.0, e1.head.0, e1.length);
        let (a2, b2, l2) = (e2.tail.0, e2.head.0, e2.length);
        let to = |s: T, x: usize| min(s + d[a1][x], l1 - s + d[b1][x]);
        let clip = |s: T| max(T::zero(), min(l1, s));
        let candidates = [
            T::zero(),
            l1,
            clip((l1 + d[b1][a2] - d[a1][a2]).half()),
            clip((l1 + d[b1][b2] - d[a1][b2]).half()),
        ];
        candidates
            .into_iter()
            .map(|s| (to(s, a2) + to(s, b2) + l2).half())
            .fold(T::zero(), max)
    }

    /// Contracts every edge in `zero` to a point (its endpoints are identified).
    pub fn collapse_edges(&self, zero: &[EdgeId]) -> Result<Collapse<T>> {
        let mut parent: Vec<usize> = (0..self.vertex_count).collect();
        fn find(parent: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            let mut c = x;
            while parent[c] != r {
                let next = parent[c];
                parent[c] = r;
                c = next;
            }
            r
        }
        let mut contracted = vec![false; self.edges.len()];
        for &e in zero {
            let edge = self.edge(e)?;
            contracted[e.0] = true;
            let (a, b) = (find(&mut parent, edge.tail.0), find(&mut parent, edge.head.0));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut class_of_root = vec![usize::MAX; self.vertex_count];
        let mut vertex_map = Vec::with_capacity(self.vertex_count);
        let mut classes = 0;
        for v in 0..self.vertex_count {
            let r = find(&mut parent, v);
            if class_of_root[r] == usize::MAX {
                class_of_root[r] = classes;
                classes += 1;
            }
            vertex_map.push(VertexId(class_of_root[r]));
        }
        let mut edge_map = Vec::with_capacity(self.edges.len());
        let mut kept = Vec::new();
        for (k, e) in self.edges.iter().enumerate() {
            if contracted[k] {
                edge_map.push(None);
            } else {
                edge_map.push(Some(EdgeId(kept.len())));
                kept.push((vertex_map[e.tail.0].0, vertex_map[e.head.0].0, e.length));
            }
        }
        let contracted_image = self.edges.iter().map(|e| vertex_map[e.tail.0]).collect();
        let graph = MetricGraph::new(classes, kept)?;
        Ok(Collapse { graph, vertex_map, edge_map, contracted_image })
    }

    /// All path classes from edge `start` to edge `end` whose exterior length is at
    /// most `bound`.
    ///
    /// A class leaves `start` through one of its ends, follows a walk without
    /// immediate backtracking, and enters `end` through one of its ends. When
    /// `start == end` the class that never leaves the edge is included as
    /// [`ClassRoute::Direct`]. A walk may not return to a vertex without having
    /// gained length since its previous visit, which keeps the set finite in the
    /// presence of zero-length edges.
    pub fn path_classes(&self, start: EdgeId, end: EdgeId, bound: T) -> Result<Vec<PathClass<T>>> {
        self.edge(start)?;
        self.edge(end)?;
        if bound.is_negative() {
            return Err(argument(format!("path class bound must be nonnegative, got {bound:?}")));
        }
        let mut out = Vec::new();
        if start == end {
            out.push(PathClass { start_edge: start, end_edge: end, route: ClassRoute::Direct, exterior_length: T::zero() });
        }
        for exit in [EdgeEnd::Tail, EdgeEnd::Head] {
            let v = self.edges[start.0].endpoint(exit);
            let mut search = ClassSearch {
                graph: self,
                start,
                end,
                exit,
                bound,
                walk: Vec::new(),
                visits: vec![(v, T::zero())],
                out: &mut out,
            };
            search.extend(v, (start, exit), T::zero());
        }
        Ok(out)
    }
}

struct ClassSearch<'a, T> {
    graph: &'a MetricGraph<T>,
    start: EdgeId,
    end: EdgeId,
    exit: EdgeEnd,
    bound: T,
    walk: Vec<WalkStep>,
    visits: Vec<(VertexId, T)>,
    out: &'a mut Vec<PathClass<T>>,
}

impl<T: Length> ClassSearch<'_, T> {
    /// `arrived` is the edge end through which the walk reached `v`.
    fn extend(&mut self, v: VertexId, arrived: (EdgeId, EdgeEnd), length: T) {
        let g = self.graph;
        for &(e, end) in g.incident(v) {
            if e == self.end && (e, end) != arrived {
                self.out.push(PathClass {
                    start_edge: self.start,
                    end_edge: self.end,
                    route: ClassRoute::Via { exit: self.exit, walk: self.walk.clone(), entry: end },
                    exterior_length: length,
                });
            }
        }
        for &(e, from) in g.incident(v) {
            if (e, from) == arrived {
                continue;
            }
            let edge = &g.edges[e.0];
            let next_len = length + edge.length;
            if next_len > self.bound {
                continue;
            }
            let to = from.opposite();
            let w = edge.endpoint(to);
            if self.visits.iter().any(|&(u, l)| u == w && l == next_len) {
                continue;
            }
            self.walk.push(WalkStep { vertex: v, edge: e, from });
            self.visits.push((w, next_len));
            self.extend(w, (e, to), next_len);
            self.visits.pop();
            self.walk.pop();
        }
    }
}

/// One traversal of an interior edge: leave `vertex` along `edge`, starting from
/// its `from` end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WalkStep {
    pub vertex: VertexId,
    pub edge: EdgeId,
    pub from: EdgeEnd,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ClassRoute {
    /// The path stays inside its single edge.
    Direct,
    /// Leave the start edge through `exit`, follow `walk`, enter the end edge
    /// through `entry`.
    Via { exit: EdgeEnd, walk: Vec<WalkStep>, entry: EdgeEnd },
}

/// Direction indicators at one end of a path class: `kappa = 1` when the path
/// moves toward the tail of the edge, `lambda = 1` when it moves toward the head.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Orientation {
    pub kappa: u8,
    pub lambda: u8,
}

impl Orientation {
    fn toward(end: EdgeEnd) -> Orientation {
        match end {
            EdgeEnd::Tail => Orientation { kappa: 1, lambda: 0 },
            EdgeEnd::Head => Orientation { kappa: 0, lambda: 1 },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PathClass<T = Rational> {
    pub start_edge: EdgeId,
    pub end_edge: EdgeId,
    pub route: ClassRoute,
    /// Length of the walk strictly between the two end edges.
    pub exterior_length: T,
}

impl<T> PathClass<T> {
    /// Orientation inside the start edge; `None` for a direct class.
    pub fn start_orientation(&self) -> Option<Orientation> {
        match &self.route {
            ClassRoute::Direct => None,
            ClassRoute::Via { exit, .. } => Some(Orientation::toward(*exit)),
        }
    }

    /// Orientation inside the end edge; `None` for a direct class.
    pub fn end_orientation(&self) -> Option<Orientation> {
        match &self.route {
            ClassRoute::Direct => None,
            ClassRoute::Via { entry, .. } => Some(Orientation::toward(entry.opposite())),
        }
    }

    pub fn interior_walk(&self) -> &[WalkStep] {
        match &self.route {
            ClassRoute::Direct => &[],
            ClassRoute::Via { walk, .. } => walk,
        }
    }
}

/// Result of contracting an edge set.
#[derive(Clone, Debug)]
pub struct Collapse<T = Rational> {
    pub graph: MetricGraph<T>,
    pub vertex_map: Vec<VertexId>,
    /// Image edge of every original edge; `None` for contracted edges.
    pub edge_map: Vec<Option<EdgeId>>,
    /// Image vertex of every original edge's tail.
    contracted_image: Vec<VertexId>,
}

impl<T: Length> Collapse<T> {
    pub fn map_point(&self, p: &GraphPoint<T>) -> Result<GraphPoint<T>> {
        match *p {
            GraphPoint::Vertex(v) => self
                .vertex_map
                .get(v.0)
                .map(|&w| GraphPoint::Vertex(w))
                .ok_or_else(|| argument(format!("unknown vertex {}", v.0))),
            GraphPoint::Edge { edge, offset } => match self.edge_map.get(edge.0) {
                None => Err(argument(format!("unknown edge {}", edge.0))),
                Some(Some(image)) => self.graph.point(*image, offset),
                // Both endpoints of a contracted edge share one class.
                Some(None) => Ok(GraphPoint::Vertex(self.contracted_image[edge.0])),
            },
        }
    }
}

fn floyd_warshall<T: Length>(n: usize, edges: &[Edge<T>]) -> Option<Vec<Vec<T>>> {
    let mut dist: Vec<Vec<Option<T>>> = vec![vec![None; n]; n];
    for (v, row) in dist.iter_mut().enumerate() {
        row[v] = Some(T::zero());
    }
    for e in edges {
        let (a, b) = (e.tail.0, e.head.0);
        dist[a][b] = Some(min_opt(dist[a][b], e.length));
        dist[b][a] = dist[a][b];
    }
    for k in 0..n {
        for i in 0..n {
            let Some(dik) = dist[i][k] else { continue };
            for j in 0..n {
                if let Some(dkj) = dist[k][j] {
                    let via = dik + dkj;
                    dist[i][j] = Some(min_opt(dist[i][j], via));
                }
            }
        }
    }
    dist.into_iter().map(|row| row.into_iter().collect::<Option<Vec<T>>>()).collect()
}

fn min<T: PartialOrd>(a: T, b: T) -> T {
    if b < a {
        b
    } else {
        a
    }
}

fn max<T: PartialOrd>(a: T, b: T) -> T {
    if b > a {
        b
    } else {
        a
    }
}

fn min_opt<T: PartialOrd + Copy>(current: Option<T>, candidate: T) -> T {
    match current {
        Some(c) if c <= candidate => c,
        _ => candidate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::number::{int, rat};

    fn theta(a: Rational, b: Rational, c: Rational) -> MetricGraph {
        MetricGraph::new(2, [(0, 1, a), (0, 1, b), (0, 1, c)]).unwrap()
    }

    #[test]
    fn segment_endpoints() {
        let g = MetricGraph::new(2, [(0, 1, int(1))]).unwrap();
        let d = g.distance(&GraphPoint::Vertex(VertexId(0)), &GraphPoint::Vertex(VertexId(1))).unwrap();
        assert_eq!(d, int(1));
        assert_eq!(g.diameter(), int(1));
    }

    #[test]
    fn loop_takes_shorter_arc() {
        let g = MetricGraph::new(1, [(0, 0, int(1))]).unwrap();
        let p = g.point(EdgeId(0), rat(1, 5)).unwrap();
        let q = g.point(EdgeId(0), rat(9, 10)).unwrap();
        assert_eq!(g.distance(&p, &q).unwrap(), rat(3, 10));
        let circle = MetricGraph::new(1, [(0, 0, int(2))]).unwrap();
        assert_eq!(circle.diameter(), int(1));
    }

    #[test]
    fn theta_midpoints_and_diameter() {
        let g = theta(int(1), int(1), int(2));
        let p = g.point(EdgeId(2), int(1)).unwrap();
        let q = g.point(EdgeId(0), rat(1, 2)).unwrap();
        assert_eq!(g.distance(&p, &q).unwrap(), rat(3, 2));
        assert_eq!(g.diameter(), rat(3, 2));
    }

    #[test]
    fn endpoints_canonicalize() {
        let g = MetricGraph::new(2, [(0, 1, int(3))]).unwrap();
        assert_eq!(g.point(EdgeId(0), int(0)).unwrap(), GraphPoint::Vertex(VertexId(0)));
        assert_eq!(g.point(EdgeId(0), int(3)).unwrap(), GraphPoint::Vertex(VertexId(1)));
        assert!(g.point(EdgeId(0), int(4)).is_err());
        assert!(g.point(EdgeId(1), int(1)).is_err());
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(MetricGraph::new(3, [(0, 1, int(1))]), Err(crate::Error::Structural(_))));
        assert!(MetricGraph::new(2, [(0, 2, int(1))]).is_err());
        assert!(MetricGraph::new(2, [(0, 1, int(-1))]).is_err());
        assert!(MetricGraph::<Rational>::new(0, []).is_err());
    }

    #[test]
    fn collapse_empty_set_is_identity() {
        let g = theta(int(1), int(1), int(2));
        let c = g.collapse_edges(&[]).unwrap();
        assert_eq!(c.graph.vertex_count(), 2);
        assert_eq!(c.graph.edges(), g.edges());
        let p = g.point(EdgeId(1), rat(1, 3)).unwrap();
        assert_eq!(c.map_point(&p).unwrap(), p);
    }

    #[test]
    fn collapse_theta_third_edge_gives_wedge() {
        let g = theta(int(1), int(1), int(0));
        let c = g.collapse_edges(&[EdgeId(2)]).unwrap();
        assert_eq!(c.graph.vertex_count(), 1);
        assert_eq!(c.graph.edge_count(), 2);
        assert!(c.graph.edges().iter().all(|e| e.is_loop() && e.length == int(1)));
        assert_eq!(c.graph.diameter(), int(1));
    }

    #[test]
    fn collapse_chain_middle() {
        let g = MetricGraph::new(4, [(0, 1, int(1)), (1, 2, int(0)), (2, 3, int(1))]).unwrap();
        let c = g.collapse_edges(&[EdgeId(1)]).unwrap();
        assert_eq!(c.graph.vertex_count(), 3);
        let lengths: Vec<_> = c.graph.edges().iter().map(|e| e.length).collect();
        assert_eq!(lengths, vec![int(1), int(1)]);
        assert_eq!(c.graph.diameter(), int(2));
        let mid = g.point(EdgeId(1), int(0)).unwrap();
        assert_eq!(c.map_point(&mid).unwrap(), GraphPoint::Vertex(VertexId(1)));
    }

    #[test]
    fn theta_classes_between_unit_edges() {
        let g = theta(int(1), int(1), int(2));
        let classes = g.path_classes(EdgeId(0), EdgeId(1), int(1)).unwrap();
        assert_eq!(classes.len(), 2);
        assert!(classes.iter().all(|c| c.exterior_length == int(0) && c.interior_walk().is_empty()));
    }

    #[test]
    fn theta_classes_into_long_edge() {
        let g = theta(int(1), int(1), int(2));
        let classes = g.path_classes(EdgeId(0), EdgeId(2), rat(3, 2)).unwrap();
        assert_eq!(classes.len(), 4);
        let zero = classes.iter().filter(|c| c.exterior_length == int(0)).count();
        let one: Vec<_> = classes.iter().filter(|c| c.exterior_length == int(1)).collect();
        assert_eq!(zero, 2);
        assert_eq!(one.len(), 2);
        assert!(one.iter().all(|c| c.interior_walk().len() == 1 && c.interior_walk()[0].edge == EdgeId(1)));
    }

    #[test]
    fn identity_class_for_same_edge() {
        let g = theta(int(1), int(1), int(2));
        let classes = g.path_classes(EdgeId(2), EdgeId(2), int(0)).unwrap();
        assert_eq!(classes.len(), 1);
        assert_eq!(classes[0].route, ClassRoute::Direct);
        assert!(g.path_classes(EdgeId(0), EdgeId(0), int(-1)).is_err());
    }

    #[test]
    fn loop_classes_go_around() {
        let g = MetricGraph::new(1, [(0, 0, int(3))]).unwrap();
        let classes = g.path_classes(EdgeId(0), EdgeId(0), int(0)).unwrap();
        // direct, plus leaving through either end and re-entering through the other
        assert_eq!(classes.len(), 3);
        for c in &classes[1..] {
            let (s, e) = (c.start_orientation().unwrap(), c.end_orientation().unwrap());
            assert_eq!(s.kappa + s.lambda, 1);
            assert_eq!(s, e);
        }
    }

    #[test]
    fn zero_length_cycles_stay_finite() {
        let g = MetricGraph::new(2, [(0, 1, int(1)), (0, 0, int(0)), (0, 1, int(0))]).unwrap();
        let classes = g.path_classes(EdgeId(0), EdgeId(0), int(2)).unwrap();
        assert!(!classes.is_empty() && classes.len() < 200);
    }
}
