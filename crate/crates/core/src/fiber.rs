//! Plumbed flat fibers at a concrete parameter `s`.
//!
//! Every annulus becomes a flat piece with the metric `|f| |dy|`: a cylinder
//! when `alpha = -1`, otherwise a cone annulus, developed with the coordinate
//! `r = cmag s^beta rho^(alpha+1) / |alpha+1|` and angle `|alpha+1| phi`. Balls
//! are capped flat cone discs. Each attached boundary circle is sampled at `n`
//! angles, and samples with equal index are joined across a junction at cost
//! `kappa * table[a][b] * C`, where `C` is the largest boundary circumference at
//! that junction. Distances between points are shortest paths through this
//! network whose within-piece hops are exact piece geodesics.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::degeneration::{Degeneration, PieceEnd, PieceRef};
use crate::error::{argument, Result};
use crate::graph::{ClassRoute, EdgeEnd, EdgeId, GraphPoint, PathClass, VertexId};
use crate::number::to_f64;

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// A point on the fiber.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum FiberPoint {
    /// Point of a piece at `|y| = s^val` and angle `phi` of the piece coordinate.
    Piece { piece: PieceRef, val: f64, phi: f64 },
    /// Point on the boundary circle attached to a junction slot.
    Slot { junction: usize, slot: usize, phi: f64 },
}

impl FiberPoint {
    /// `rho = s^val`.
    pub fn rho(&self, fiber: &FiberComplex) -> Result<f64> {
        let (_, val, _) = fiber.resolve(self)?;
        Ok(fiber.s.powf(val))
    }
}

/// Flat geometry of one piece in its developed coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum Geometry {
    /// Local coordinate is the height `z` measured from the `lo` circle.
    Cylinder { radius: f64, height: f64 },
    /// Local coordinate is the developed radius `r`; `order = |alpha+1|`, so the
    /// cone angle is `2 pi order`.
    Cone { order: f64, r_min: f64, r_max: f64 },
    /// Capped disc of slant radius `radius`; local coordinate is `r`.
    Disc { order: f64, radius: f64 },
}

impl Geometry {
    /// Exact geodesic distance inside the piece between local points.
    pub fn distance(&self, a1: f64, phi1: f64, a2: f64, phi2: f64) -> f64 {
        let dphi = reduced_angle(phi1, phi2);
        match *self {
            Geometry::Cylinder { radius, .. } => (a1 - a2).hypot(radius * dphi),
            Geometry::Cone { order, r_min, .. } => {
                let g = order * dphi;
                let t1 = (r_min / a1).min(1.0).acos();
                let t2 = (r_min / a2).min(1.0).acos();
                if g <= t1 + t2 {
                    chord(a1, a2, g)
                } else {
                    // wraps around the inner boundary circle
                    (a1 * a1 - r_min * r_min).max(0.0).sqrt()
                        + (a2 * a2 - r_min * r_min).max(0.0).sqrt()
                        + r_min * (g - t1 - t2)
                }
            }
            Geometry::Disc { order, .. } => {
                let g = order * dphi;
                if g < PI {
                    chord(a1, a2, g)
                } else {
                    a1 + a2
                }
            }
        }
    }

    pub fn area(&self, inner: f64) -> f64 {
        match *self {
            Geometry::Cylinder { radius, height } => TAU * radius * height,
            Geometry::Cone { order, r_min, r_max } => PI * order * (r_max * r_max - r_min * r_min),
            Geometry::Disc { order, radius } => PI * order * (radius * radius - inner * inner),
        }
    }
}

fn chord(r1: f64, r2: f64, angle: f64) -> f64 {
    (r1 * r1 + r2 * r2 - 2.0 * r1 * r2 * angle.cos()).max(0.0).sqrt()
}

/// Angular distance on the unit circle, in `[0, pi]`.
fn reduced_angle(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[derive(Clone, Debug, Serialize)]
pub struct Piece {
    pub kind: PieceRef,
    pub geometry: Geometry,
    /// Valuation range of `|y|` covered by the piece.
    pub val_lo: f64,
    pub val_hi: f64,
    ln_s: f64,
    ln_cmag: f64,
    beta: f64,
    k: f64,
}

impl Piece {
    /// Local radial coordinate from the valuation of `|y|`.
    fn local(&self, val: f64) -> f64 {
        match self.geometry {
            Geometry::Cylinder { radius, .. } => radius * (val - self.val_lo) * -self.ln_s,
            Geometry::Cone { order, .. } => (self.ln_cmag + (self.beta + val * self.k) * self.ln_s).exp() / order,
            Geometry::Disc { order, radius } => radius * ((val - self.val_lo) * order * self.ln_s).exp(),
        }
    }

    /// Inverse of [`Self::local`].
    fn valuation(&self, a: f64) -> f64 {
        let v = match self.geometry {
            Geometry::Cylinder { radius, .. } => self.val_lo + a / (radius * -self.ln_s),
            Geometry::Cone { order, .. } => (((a * order).ln() - self.ln_cmag) / self.ln_s - self.beta) / self.k,
            Geometry::Disc { order, radius } => self.val_lo + (a / radius).ln() / (order * self.ln_s),
        };
        v.clamp(self.val_lo, self.val_hi)
    }

    /// Circumference of the boundary circle at valuation `val`.
    fn circumference(&self, val: f64) -> f64 {
        match self.geometry {
            Geometry::Cylinder { radius, .. } => TAU * radius,
            Geometry::Cone { order, .. } => TAU * order * self.local(val),
            Geometry::Disc { order, radius } => TAU * order * radius,
        }
    }
}

#[derive(Clone, Debug)]
struct Node {
    piece: usize,
    a: f64,
    phi: f64,
}

/// A plumbed fiber with its boundary-sample network.
#[derive(Clone, Debug)]
pub struct FiberComplex {
    deg: Degeneration,
    s: f64,
    n: usize,
    pieces: Vec<Piece>,
    /// Boundary sample nodes; slot `(j, a)` owns `slot_base[j][a] .. + n`.
    nodes: Vec<Node>,
    slot_base: Vec<Vec<usize>>,
    piece_nodes: Vec<Vec<usize>>,
    junction_links: Vec<Vec<(usize, f64)>>,
    crossing: Vec<Vec<Vec<f64>>>,
}

impl FiberComplex {
    pub fn build(deg: &Degeneration, s: f64, n: usize) -> Result<Self> {
        if !(s > 0.0 && s < 1.0) {
            return Err(argument(format!("parameter s = {s} outside (0, 1)")));
        }
        if n < 8 {
            return Err(argument(format!("resolution n = {n} below the minimum of 8")));
        }
        let ln_s = s.ln();
        let mut pieces = Vec::new();
        for (i, a) in deg.annuli().iter().enumerate() {
            let (lo, hi) = (to_f64(a.a_lo), to_f64(a.a_hi));
            let cmag = to_f64(a.cmag);
            let beta = to_f64(a.beta);
            let k = (a.alpha + 1) as f64;
            let scale = cmag * (beta * ln_s).exp();
            let mut piece = Piece {
                kind: PieceRef::Annulus(i),
                geometry: Geometry::Cylinder { radius: scale, height: scale * (hi - lo) * -ln_s },
                val_lo: lo,
                val_hi: hi,
                ln_s,
                ln_cmag: cmag.ln(),
                beta,
                k,
            };
            if a.alpha != -1 {
                piece.geometry = Geometry::Cone { order: k.abs(), r_min: 0.0, r_max: 0.0 };
                let (r1, r2) = (piece.local(lo), piece.local(hi));
                piece.geometry = Geometry::Cone { order: k.abs(), r_min: r1.min(r2), r_max: r1.max(r2) };
            }
            pieces.push(piece);
        }
        for (i, b) in deg.balls().iter().enumerate() {
            let lo = to_f64(b.a_lo);
            let cmag = to_f64(b.cmag);
            let beta = to_f64(b.beta);
            let k = (b.alpha + 1) as f64;
            let radius = cmag * ((beta + lo * k) * ln_s).exp() / k.abs();
            pieces.push(Piece {
                kind: PieceRef::Ball(i),
                geometry: Geometry::Disc { order: k.abs(), radius },
                val_lo: lo,
                val_hi: lo + to_f64(b.depth),
                ln_s,
                ln_cmag: cmag.ln(),
                beta,
                k,
            });
        }

        let mut nodes = Vec::new();
        let mut slot_base = Vec::new();
        let mut piece_nodes = vec![Vec::new(); pieces.len()];
        let mut crossing = Vec::new();
        for junction in deg.junctions() {
            let mut bases = Vec::new();
            let mut c_max: f64 = 0.0;
            for &end in &junction.slots {
                let (p, val, twist) = Self::slot_geometry(deg, end);
                let piece = &pieces[p];
                c_max = c_max.max(piece.circumference(val));
                bases.push(nodes.len());
                for k in 0..n {
                    piece_nodes[p].push(nodes.len());
                    let phi = (TAU * k as f64 / n as f64 + twist).rem_euclid(TAU);
                    nodes.push(Node { piece: p, a: piece.local(val), phi });
                }
            }
            let weights: Vec<Vec<f64>> =
                junction.table.iter().map(|row| row.iter().map(|t| junction.kappa * t * c_max).collect()).collect();
            slot_base.push(bases);
            crossing.push(weights);
        }
        let mut junction_links = vec![Vec::new(); nodes.len()];
        for (j, bases) in slot_base.iter().enumerate() {
            for (a, &ba) in bases.iter().enumerate() {
                for (b, &bb) in bases.iter().enumerate() {
                    if a != b {
                        for k in 0..n {
                            junction_links[ba + k].push((bb + k, crossing[j][a][b]));
                        }
                    }
                }
            }
        }
        Ok(FiberComplex { deg: deg.clone(), s, n, pieces, nodes, slot_base, piece_nodes, junction_links, crossing })
    }

    /// Piece index, boundary valuation and twist of a piece end.
    fn slot_geometry(deg: &Degeneration, end: PieceEnd) -> (usize, f64, f64) {
        match end {
            PieceEnd::Annulus(i, EdgeEnd::Tail) => (i, to_f64(deg.annuli()[i].a_lo), deg.annuli()[i].twist_lo),
            PieceEnd::Annulus(i, EdgeEnd::Head) => (i, to_f64(deg.annuli()[i].a_hi), deg.annuli()[i].twist_hi),
            PieceEnd::Ball(i) => (deg.annuli().len() + i, to_f64(deg.balls()[i].a_lo), deg.balls()[i].twist),
        }
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn degeneration(&self) -> &Degeneration {
        &self.deg
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn piece(&self, piece: PieceRef) -> &Piece {
        &self.pieces[self.piece_index(piece)]
    }

    fn piece_index(&self, piece: PieceRef) -> usize {
        match piece {
            PieceRef::Annulus(i) => i,
            PieceRef::Ball(i) => self.deg.annuli().len() + i,
        }
    }

    /// Number of boundary sample nodes in the network.
    pub fn network_size(&self) -> usize {
        self.nodes.len()
    }

    /// Crossing cost between two slots of a junction.
    pub fn crossing_cost(&self, junction: usize, a: usize, b: usize) -> f64 {
        self.crossing[junction][a][b]
    }

    /// Piece index, valuation and angle of a point, after range checks.
    fn resolve(&self, p: &FiberPoint) -> Result<(usize, f64, f64)> {
        match *p {
            FiberPoint::Piece { piece, val, phi } => {
                let idx = match piece {
                    PieceRef::Annulus(i) if i < self.deg.annuli().len() => i,
                    PieceRef::Ball(i) if i < self.deg.balls().len() => self.deg.annuli().len() + i,
                    _ => return Err(argument(format!("unknown piece {piece:?}"))),
                };
                let pc = &self.pieces[idx];
                let slack = 1e-12 * (1.0 + pc.val_hi.abs());
                if !(val >= pc.val_lo - slack && val <= pc.val_hi + slack) || !phi.is_finite() {
                    return Err(argument(format!(
                        "point ({val}, {phi}) outside piece {piece:?} with valuation range [{}, {}]",
                        pc.val_lo, pc.val_hi
                    )));
                }
                Ok((idx, val.clamp(pc.val_lo, pc.val_hi), phi.rem_euclid(TAU)))
            }
            FiberPoint::Slot { junction, slot, phi } => {
                let end = self
                    .deg
                    .junctions()
                    .get(junction)
                    .and_then(|j| j.slots.get(slot))
                    .ok_or_else(|| argument(format!("unknown slot {slot} of junction {junction}")))?;
                if !phi.is_finite() {
                    return Err(argument("slot angle must be finite"));
                }
                let (idx, val, _) = Self::slot_geometry(&self.deg, *end);
                Ok((idx, val, phi.rem_euclid(TAU)))
            }
        }
    }

    fn node_of(&self, p: &FiberPoint) -> Result<Node> {
        let (piece, val, phi) = self.resolve(p)?;
        Ok(Node { piece, a: self.pieces[piece].local(val), phi })
    }

    /// Exact flat distance between two points of the same piece, ignoring the
    /// rest of the surface.
    pub fn piece_distance(&self, piece: PieceRef, p: &FiberPoint, q: &FiberPoint) -> Result<f64> {
        let (u, v) = (self.node_of(p)?, self.node_of(q)?);
        let idx = self.piece_index(piece);
        if u.piece != idx || v.piece != idx {
            return Err(argument(format!("points do not both lie in piece {piece:?}")));
        }
        Ok(self.local_distance(&u, &v))
    }

    fn local_distance(&self, u: &Node, v: &Node) -> f64 {
        self.pieces[u.piece].geometry.distance(u.a, u.phi, v.a, v.phi)
    }

    /// Network shortest-path distance between two points.
    pub fn distance(&self, p: &FiberPoint, q: &FiberPoint) -> Result<f64> {
        let queries = [self.node_of(p)?, self.node_of(q)?];
        Ok(self.dijkstra(&queries, 0, Some(1))[1])
    }

    /// Symmetric matrix of network distances between all given points.
    pub fn distance_matrix(&self, points: &[FiberPoint]) -> Result<Vec<Vec<f64>>> {
        let queries: Vec<Node> = points.iter().map(|p| self.node_of(p)).collect::<Result<_>>()?;
        let rows: Vec<Vec<f64>> = (0..queries.len()).into_par_iter().map(|i| self.dijkstra(&queries, i, None)).collect();
        let m = queries.len();
        let mut out = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in i + 1..m {
                out[i][j] = rows[i][j];
                out[j][i] = rows[i][j];
            }
        }
        Ok(out)
    }

    /// Distances from query `source` to every query point. Non-source query
    /// points are never used as transit: piece distances are already geodesic.
    fn dijkstra(&self, queries: &[Node], source: usize, target: Option<usize>) -> Vec<f64> {
        let base = self.nodes.len();
        let mut by_piece = vec![Vec::new(); self.pieces.len()];
        for (k, q) in queries.iter().enumerate() {
            by_piece[q.piece].push(base + k);
        }
        let node = |id: usize| if id < base { &self.nodes[id] } else { &queries[id - base] };
        let total = base + queries.len();
        let mut dist = vec![f64::INFINITY; total];
        let mut done = vec![false; total];
        let mut heap = BinaryHeap::new();
        let start = base + source;
        dist[start] = 0.0;
        heap.push(Entry(0.0, start));
        let mut remaining = queries.len();
        while let Some(Entry(d, u)) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            if u >= base {
                remaining -= 1;
                if target == Some(u - base) || remaining == 0 {
                    break;
                }
                if u != start {
                    continue;
                }
            }
            let nu = node(u);
            for &v in self.piece_nodes[nu.piece].iter().chain(&by_piece[nu.piece]) {
                if !done[v] {
                    let nd = d + self.local_distance(nu, node(v));
                    if nd < dist[v] {
                        dist[v] = nd;
                        heap.push(Entry(nd, v));
                    }
                }
            }
            if u < base {
                for &(v, w) in &self.junction_links[u] {
                    let nd = d + w;
                    if !done[v] && nd < dist[v] {
                        dist[v] = nd;
                        heap.push(Entry(nd, v));
                    }
                }
            }
        }
        dist.split_off(base)
    }

    /// Quasi-uniform sample: points allotted to pieces by area, stratified in
    /// the radial area coordinate, angles from a shifted golden-ratio sequence.
    pub fn sample(&self, m: usize, seed: u64) -> Vec<FiberPoint> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let areas: Vec<f64> = self.pieces.iter().map(|p| p.geometry.area(p.local(p.val_hi))).collect();
        let counts = largest_remainder(&areas, m);
        let mut out = Vec::with_capacity(m);
        for (piece, &count) in self.pieces.iter().zip(&counts) {
            let offset: f64 = rng.random();
            // squared radius for cones and discs makes the strata equal-area
            let (x0, x1) = match piece.geometry {
                Geometry::Cylinder { .. } => (piece.local(piece.val_lo), piece.local(piece.val_hi)),
                _ => (piece.local(piece.val_lo).powi(2), piece.local(piece.val_hi).powi(2)),
            };
            for i in 0..count {
                let u: f64 = rng.random();
                let x = x0 + (x1 - x0) * (i as f64 + u) / count as f64;
                let a = match piece.geometry {
                    Geometry::Cylinder { .. } => x,
                    _ => x.max(0.0).sqrt(),
                };
                let phi = TAU * (offset + i as f64 * GOLDEN).fract();
                out.push(FiberPoint::Piece { piece: piece.kind, val: piece.valuation(a), phi });
            }
        }
        out
    }

    /// Largest network distance over an `m`-point sample.
    pub fn diameter(&self, m: usize, seed: u64) -> Result<f64> {
        if m < 2 {
            return Err(argument("diameter estimate needs at least 2 sample points"));
        }
        let matrix = self.distance_matrix(&self.sample(m, seed))?;
        Ok(matrix.iter().flatten().copied().fold(0.0, f64::max))
    }

    /// Retraction to the skeleton: `|y| = s^val` on an annulus goes to offset
    /// `val - a_lo`; balls and junction circles go to their junction vertex.
    pub fn retract(&self, p: &FiberPoint) -> Result<GraphPoint<f64>> {
        let (idx, val, _) = self.resolve(p)?;
        Ok(match (self.pieces[idx].kind, p) {
            (PieceRef::Annulus(i), FiberPoint::Piece { .. }) => {
                let len = to_f64(self.deg.annuli()[i].length());
                let tau = (val - self.pieces[idx].val_lo).clamp(0.0, len);
                canonical(self, i, tau, len)
            }
            (_, FiberPoint::Slot { junction, .. }) => GraphPoint::Vertex(VertexId(*junction)),
            (PieceRef::Ball(b), _) => GraphPoint::Vertex(VertexId(self.deg.junction_at(PieceEnd::Ball(b)))),
        })
    }

    /// Point of annulus `edge` at skeleton offset `tau` and angle `phi`.
    pub fn annulus_point(&self, edge: EdgeId, tau: f64, phi: f64) -> Result<FiberPoint> {
        let a = self.deg.annuli().get(edge.0).ok_or_else(|| argument(format!("unknown annulus edge {}", edge.0)))?;
        let p = FiberPoint::Piece { piece: PieceRef::Annulus(edge.0), val: to_f64(a.a_lo) + tau, phi };
        self.resolve(&p)?;
        Ok(p)
    }

    /// Length of the shortest fiber path that follows the class piece by piece:
    /// from `p` across the start annulus to its exit circle, through each
    /// junction and interior annulus of the walk, and into the end annulus to `q`.
    pub fn subordinate_length(&self, class: &PathClass, p: &FiberPoint, q: &FiberPoint) -> Result<f64> {
        let (u, v) = (self.node_of(p)?, self.node_of(q)?);
        let (i, j) = (class.start_edge.0, class.end_edge.0);
        if i >= self.deg.annuli().len() || j >= self.deg.annuli().len() {
            return Err(argument("class edges are not annuli of this fiber"));
        }
        if u.piece != i || v.piece != j {
            return Err(argument("endpoints must lie on the class's start and end annuli"));
        }
        let ClassRoute::Via { exit, walk, entry } = &class.route else {
            if i != j {
                return Err(argument("direct class must start and end on the same edge"));
            }
            return Ok(self.local_distance(&u, &v));
        };
        let n = self.n;
        let circle = |end: PieceEnd| {
            let (j, a) = self.deg.slot_of(end);
            (j, a, self.slot_base[j][a])
        };
        let (mut junction, mut slot, start) = circle(PieceEnd::Annulus(i, *exit));
        let mut cur: Vec<f64> = (0..n).map(|k| self.local_distance(&u, &self.nodes[start + k])).collect();
        let cross = |cur: &mut Vec<f64>, junction: usize, slot: usize, end: PieceEnd| -> Result<(usize, usize)> {
            let (jb, b, _) = circle(end);
            if jb != junction {
                return Err(argument("class walk is not contiguous"));
            }
            let w = self.crossing[junction][slot][b];
            cur.iter_mut().for_each(|c| *c += w);
            Ok((b, self.slot_base[jb][b]))
        };
        for step in walk {
            let (_, entered) = cross(&mut cur, junction, slot, PieceEnd::Annulus(step.edge.0, step.from))?;
            let (jn, sn, leave) = circle(PieceEnd::Annulus(step.edge.0, step.from.opposite()));
            cur = (0..n)
                .map(|k2| {
                    let target = &self.nodes[leave + k2];
                    (0..n).map(|k1| cur[k1] + self.local_distance(&self.nodes[entered + k1], target)).fold(f64::INFINITY, f64::min)
                })
                .collect();
            junction = jn;
            slot = sn;
        }
        let (_, last) = cross(&mut cur, junction, slot, PieceEnd::Annulus(j, *entry))?;
        Ok((0..n).map(|k| cur[k] + self.local_distance(&self.nodes[last + k], &v)).fold(f64::INFINITY, f64::min))
    }
}

fn canonical(fiber: &FiberComplex, edge: usize, tau: f64, len: f64) -> GraphPoint<f64> {
    let annulus = &fiber.deg.annuli()[edge];
    if tau <= 0.0 {
        GraphPoint::Vertex(VertexId(fiber.deg.junction_index(&annulus.end_lo).expect("validated")))
    } else if tau >= len {
        GraphPoint::Vertex(VertexId(fiber.deg.junction_index(&annulus.end_hi).expect("validated")))
    } else {
        GraphPoint::Edge { edge: EdgeId(edge), offset: tau }
    }
}

/// Splits `m` in proportion to `weights` by the largest-remainder rule; ties go
/// to the earlier index.
fn largest_remainder(weights: &[f64], m: usize) -> Vec<usize> {
    let total: f64 = weights.iter().sum();
    if total <= 0.0 || weights.is_empty() {
        let mut out = vec![0; weights.len()];
        if let Some(first) = out.first_mut() {
            *first = m;
        }
        return out;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| w / total * m as f64).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor().to_usize().unwrap_or(0)).collect();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b)));
    let assigned: usize = counts.iter().sum();
    for &k in order.iter().cycle().take(m.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    counts
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // min-heap on distance, ties broken by node id for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}
