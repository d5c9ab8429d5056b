//! Combinatorial data of a degenerating family: monomial annuli, balls and the
//! junctions gluing them, together with everything computed from that data
//! alone: the skeleton, the weight profile, and the limit graph Δ.
//!
//! On an annulus the form is `f dy` with `|f| = cmag · |y|^alpha · |s|^beta` and
//! `|s|^a_hi < |y| < |s|^a_lo`. Valuations are exponents of `|s|`, so the
//! skeleton edge of an annulus has length `a_hi - a_lo` and offset `tau`
//! corresponds to `|y| = |s|^(a_lo + tau)`. The tail of an edge is its `lo` end.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};
use crate::graph::{ClassRoute, Collapse, EdgeEnd, EdgeId, GraphPoint, MetricGraph, PathClass, VertexId};
use crate::number::{int, to_f64, Rational, Valuation};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnulusPiece {
    pub id: String,
    pub alpha: i64,
    #[serde(with = "crate::specfile::rational")]
    pub beta: Valuation,
    #[serde(with = "crate::specfile::rational")]
    pub cmag: Rational,
    #[serde(with = "crate::specfile::rational")]
    pub a_lo: Valuation,
    #[serde(with = "crate::specfile::rational")]
    pub a_hi: Valuation,
    pub end_lo: String,
    pub end_hi: String,
    #[serde(default)]
    pub twist_lo: f64,
    #[serde(default)]
    pub twist_hi: f64,
}

impl AnnulusPiece {
    pub fn length(&self) -> Rational {
        self.a_hi - self.a_lo
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BallPiece {
    pub id: String,
    pub alpha: i64,
    #[serde(with = "crate::specfile::rational")]
    pub beta: Valuation,
    #[serde(with = "crate::specfile::rational")]
    pub cmag: Rational,
    #[serde(with = "crate::specfile::rational")]
    pub a_lo: Valuation,
    #[serde(with = "crate::specfile::rational")]
    pub depth: Valuation,
    pub end: String,
    #[serde(default)]
    pub twist: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Junction {
    pub id: String,
    /// Attached piece ends as `"<annulus>:lo"`, `"<annulus>:hi"` or `"<ball>"`.
    /// Empty means: every end naming this junction, annuli first, in file order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<String>,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Slot-to-slot crossing factors; defaults to 1 off the diagonal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<Vec<Vec<f64>>>,
}

fn default_kappa() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegenerationSpec {
    #[serde(default)]
    pub annuli: Vec<AnnulusPiece>,
    #[serde(default)]
    pub balls: Vec<BallPiece>,
    #[serde(default)]
    pub junctions: Vec<Junction>,
}

/// One attached piece end.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PieceEnd {
    /// Annulus index and end (`Tail` = lo, `Head` = hi).
    Annulus(usize, EdgeEnd),
    Ball(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum PieceRef {
    Annulus(usize),
    Ball(usize),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    /// Id of the offending piece or junction; empty for global problems.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.subject.is_empty() {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.subject, self.message)
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, subject: &str, message: impl Into<String>) {
        self.violations.push(Violation { subject: subject.to_string(), message: message.into() });
    }
}

/// Resolved junction: slot list and crossing table with defaults applied.
#[derive(Clone, Debug)]
pub struct ResolvedJunction {
    pub slots: Vec<PieceEnd>,
    pub kappa: f64,
    pub table: Vec<Vec<f64>>,
}

impl DegenerationSpec {
    /// Checks every invariant of the data model and reports all violations.
    pub fn validate(&self) -> ValidationReport {
        let mut report = ValidationReport::default();
        self.check_pieces(&mut report);
        let junction_index = self.junction_index(&mut report);
        if report.passed() {
            // slot resolution needs consistent ids
            let _ = self.resolve_slots(&junction_index, &mut report);
        }
        if report.passed() {
            self.check_connected(&junction_index, &mut report);
        }
        if !self.annuli.iter().any(|a| a.alpha == -1) {
            report.push("", "no annulus has alpha = -1, not maximally degenerate");
        }
        report
    }

    fn check_pieces(&self, report: &mut ValidationReport) {
        let mut seen: HashMap<&str, ()> = HashMap::new();
        let ids = self.annuli.iter().map(|a| a.id.as_str()).chain(self.balls.iter().map(|b| b.id.as_str()));
        for id in ids {
            if id.is_empty() || id.contains(':') {
                report.push(id, "piece ids must be nonempty and must not contain ':'");
            }
            if seen.insert(id, ()).is_some() {
                report.push(id, "duplicate piece id");
            }
        }
        for a in &self.annuli {
            if a.a_hi <= a.a_lo {
                report.push(&a.id, format!("empty annulus: a_hi = {} must exceed a_lo = {}", a.a_hi, a.a_lo));
            }
            if !a.cmag.is_positive() {
                report.push(&a.id, "cmag must be positive");
            }
            for (name, t) in [("twist_lo", a.twist_lo), ("twist_hi", a.twist_hi)] {
                if !(0.0..TAU).contains(&t) {
                    report.push(&a.id, format!("{name} = {t} outside [0, 2π)"));
                }
            }
        }
        for b in &self.balls {
            if b.alpha == -1 {
                report.push(&b.id, "ball must have α ≠ −1");
            }
            if !b.depth.is_positive() {
                report.push(&b.id, "ball depth must be positive");
            }
            if !b.cmag.is_positive() {
                report.push(&b.id, "cmag must be positive");
            }
            if !(0.0..TAU).contains(&b.twist) {
                report.push(&b.id, format!("twist = {} outside [0, 2π)", b.twist));
            }
        }
    }

    fn junction_index(&self, report: &mut ValidationReport) -> HashMap<String, usize> {
        let mut index = HashMap::new();
        if self.junctions.is_empty() {
            report.push("", "no junctions");
        }
        for (k, j) in self.junctions.iter().enumerate() {
            if index.insert(j.id.clone(), k).is_some() {
                report.push(&j.id, "duplicate junction id");
            }
            if !(j.kappa.is_finite() && j.kappa > 0.0) {
                report.push(&j.id, "kappa must be a positive real");
            }
        }
        let mut attach = |piece: &str, junction: &str| {
            if !index.contains_key(junction) {
                report.push(piece, format!("attached to unknown junction {junction:?}"));
            }
        };
        for a in &self.annuli {
            attach(&a.id, &a.end_lo);
            attach(&a.id, &a.end_hi);
        }
        for b in &self.balls {
            attach(&b.id, &b.end);
        }
        index
    }

    fn piece_end_junction(&self, end: PieceEnd) -> &str {
        match end {
            PieceEnd::Annulus(i, EdgeEnd::Tail) => &self.annuli[i].end_lo,
            PieceEnd::Annulus(i, EdgeEnd::Head) => &self.annuli[i].end_hi,
            PieceEnd::Ball(i) => &self.balls[i].end,
        }
    }

    pub fn piece_end_name(&self, end: PieceEnd) -> String {
        match end {
            PieceEnd::Annulus(i, EdgeEnd::Tail) => format!("{}:lo", self.annuli[i].id),
            PieceEnd::Annulus(i, EdgeEnd::Head) => format!("{}:hi", self.annuli[i].id),
            PieceEnd::Ball(i) => self.balls[i].id.clone(),
        }
    }

    fn all_ends(&self) -> Vec<PieceEnd> {
        let mut ends = Vec::new();
        for i in 0..self.annuli.len() {
            ends.push(PieceEnd::Annulus(i, EdgeEnd::Tail));
            ends.push(PieceEnd::Annulus(i, EdgeEnd::Head));
        }
        ends.extend((0..self.balls.len()).map(PieceEnd::Ball));
        ends
    }

    fn resolve_slots(&self, junction_index: &HashMap<String, usize>, report: &mut ValidationReport) -> Vec<ResolvedJunction> {
        let names: HashMap<String, PieceEnd> = self.all_ends().into_iter().map(|e| (self.piece_end_name(e), e)).collect();
        let mut claimed: HashMap<PieceEnd, usize> = HashMap::new();
        let mut resolved = Vec::new();
        for (k, j) in self.junctions.iter().enumerate() {
            let slots: Vec<PieceEnd> = if j.slots.is_empty() {
                self.all_ends().into_iter().filter(|&e| junction_index.get(self.piece_end_junction(e)) == Some(&k)).collect()
            } else {
                let mut list = Vec::new();
                for name in &j.slots {
                    match names.get(name) {
                        None => report.push(&j.id, format!("slot {name:?} names no piece end")),
                        Some(&end) => {
                            if self.piece_end_junction(end) != j.id {
                                report.push(&j.id, format!("slot {name:?} belongs to junction {:?}", self.piece_end_junction(end)));
                            }
                            list.push(end);
                        }
                    }
                }
                list
            };
            for &end in &slots {
                if claimed.insert(end, k).is_some() {
                    report.push(&j.id, format!("piece end {} occupies more than one slot", self.piece_end_name(end)));
                }
            }
            let n = slots.len();
            let table = match &j.table {
                None => (0..n).map(|a| (0..n).map(|b| if a == b { 0.0 } else { 1.0 }).collect()).collect(),
                Some(t) => {
                    if t.len() != n || t.iter().any(|row| row.len() != n) {
                        report.push(&j.id, format!("table must be {n}x{n} to match the slot list"));
                    } else {
                        for a in 0..n {
                            if t[a][a] != 0.0 {
                                report.push(&j.id, "table diagonal must be zero");
                            }
                            for b in 0..n {
                                if !(t[a][b].is_finite() && t[a][b] >= 0.0) {
                                    report.push(&j.id, "table entries must be finite and nonnegative");
                                }
                                if t[a][b] != t[b][a] {
                                    report.push(&j.id, "table must be symmetric");
                                }
                            }
                        }
                    }
                    t.clone()
                }
            };
            resolved.push(ResolvedJunction { slots, kappa: j.kappa, table });
        }
        for end in self.all_ends() {
            if !claimed.contains_key(&end) {
                report.push(&self.piece_end_name(end), "piece end is not attached to any junction slot");
            }
        }
        resolved
    }

    fn check_connected(&self, junction_index: &HashMap<String, usize>, report: &mut ValidationReport) {
        let n = self.junctions.len();
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for a in &self.annuli {
            let (u, v) = (junction_index[&a.end_lo], junction_index[&a.end_hi]);
            let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
            parent[ru] = rv;
        }
        let root = find(&mut parent, 0);
        if (0..n).any(|k| find(&mut parent, k) != root) {
            report.push("", "incidence graph is disconnected");
        }
    }
}

/// A validated decomposition with resolved junctions.
#[derive(Clone, Debug)]
pub struct Degeneration {
    spec: DegenerationSpec,
    junctions: Vec<ResolvedJunction>,
    junction_of: HashMap<String, usize>,
}

impl Degeneration {
    pub fn new(spec: DegenerationSpec) -> Result<Self> {
        let report = spec.validate();
        if !report.passed() {
            return Err(Error::Validation(report.violations.iter().map(|v| v.to_string()).collect()));
        }
        let mut scratch = ValidationReport::default();
        let junction_of = spec.junction_index(&mut scratch);
        let junctions = spec.resolve_slots(&junction_of, &mut scratch);
        Ok(Degeneration { spec, junctions, junction_of })
    }

    pub fn spec(&self) -> &DegenerationSpec {
        &self.spec
    }

    pub fn annuli(&self) -> &[AnnulusPiece] {
        &self.spec.annuli
    }

    pub fn balls(&self) -> &[BallPiece] {
        &self.spec.balls
    }

    pub fn junctions(&self) -> &[ResolvedJunction] {
        &self.junctions
    }

    pub fn junction_index(&self, id: &str) -> Option<usize> {
        self.junction_of.get(id).copied()
    }

    pub fn annulus_index(&self, id: &str) -> Option<usize> {
        self.spec.annuli.iter().position(|a| a.id == id)
    }

    /// Junction attached to a piece end.
    pub fn junction_at(&self, end: PieceEnd) -> usize {
        self.junction_of[self.spec.piece_end_junction(end)]
    }

    /// Junction and slot index of a piece end.
    pub fn slot_of(&self, end: PieceEnd) -> (usize, usize) {
        let j = self.junction_at(end);
        let slot = self.junctions[j].slots.iter().position(|&e| e == end).expect("validated slot");
        (j, slot)
    }

    /// One vertex per junction, one edge per annulus (tail = lo end).
    pub fn skeleton(&self) -> MetricGraph {
        let edges = self.spec.annuli.iter().map(|a| (self.junction_of[&a.end_lo], self.junction_of[&a.end_hi], a.length()));
        MetricGraph::new(self.spec.junctions.len(), edges).expect("validated spec has a connected skeleton")
    }

    pub fn weight_profile(&self) -> WeightProfile {
        WeightProfile::new(&self.spec)
    }

    pub fn limit_graph(&self) -> Result<LimitGraph> {
        LimitGraph::new(self)
    }
}

/// `W(tau) = at_zero + slope * tau` on `[0, span]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AffineWeight {
    pub at_zero: Rational,
    pub slope: Rational,
    pub span: Rational,
}

impl AffineWeight {
    fn monomial(alpha: i64, beta: Valuation, a_lo: Valuation, span: Rational) -> Self {
        let slope = int(alpha as i128 + 1);
        AffineWeight { at_zero: beta + slope * a_lo, slope, span }
    }

    pub fn eval(&self, tau: Rational) -> Rational {
        self.at_zero + self.slope * tau
    }

    pub fn infimum(&self) -> Rational {
        if self.slope.is_negative() {
            self.eval(self.span)
        } else {
            self.at_zero
        }
    }

    /// Closed subinterval of `[0, span]` where `W == level`, if any.
    fn level_set(&self, level: Rational) -> Option<(Rational, Rational)> {
        if self.slope.is_zero() {
            return (self.at_zero == level).then_some((int(0), self.span));
        }
        let tau = (level - self.at_zero) / self.slope;
        (tau >= int(0) && tau <= self.span).then_some((tau, tau))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LocusPart {
    pub piece: PieceRef,
    pub from: Rational,
    pub to: Rational,
}

/// Weight in valuation units, `W = beta + (alpha + 1) · v(y)`, on every piece.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightProfile {
    pub annuli: Vec<AffineWeight>,
    pub balls: Vec<AffineWeight>,
    pub minimum: Rational,
    pub locus: Vec<LocusPart>,
}

impl WeightProfile {
    pub fn new(spec: &DegenerationSpec) -> Self {
        let annuli: Vec<_> =
            spec.annuli.iter().map(|a| AffineWeight::monomial(a.alpha, a.beta, a.a_lo, a.length())).collect();
        let balls: Vec<_> = spec.balls.iter().map(|b| AffineWeight::monomial(b.alpha, b.beta, b.a_lo, b.depth)).collect();
        let minimum = annuli
            .iter()
            .chain(&balls)
            .map(AffineWeight::infimum)
            .reduce(|a, b| a.min(b))
            .unwrap_or_else(Rational::zero);
        let mut locus = Vec::new();
        for (refs, list) in [(PieceRef::Annulus as fn(usize) -> PieceRef, &annuli), (PieceRef::Ball, &balls)] {
            for (k, w) in list.iter().enumerate() {
                if let Some((from, to)) = w.level_set(minimum) {
                    locus.push(LocusPart { piece: refs(k), from, to });
                }
            }
        }
        WeightProfile { annuli, balls, minimum, locus }
    }

    /// Whether the whole skeleton edge of annulus `k` lies in the minimality locus.
    pub fn contains_edge(&self, k: usize) -> bool {
        self.locus.iter().any(|p| p.piece == PieceRef::Annulus(k) && p.from.is_zero() && p.to == self.annuli[k].span)
    }
}

/// The limit graph Δ: the skeleton with edge `i` rescaled by `d_i`, then with
/// all zero-length edges contracted.
#[derive(Clone, Debug)]
pub struct LimitGraph {
    skeleton: MetricGraph,
    /// Skeleton with edge lengths `d_i · (a_hi - a_lo)`, before contraction.
    weighted: MetricGraph,
    factors: Vec<Rational>,
    collapse: Collapse,
    weight: WeightProfile,
    diameter: Rational,
    skeleton_real: MetricGraph<f64>,
    weighted_real: MetricGraph<f64>,
    collapse_real: Collapse<f64>,
}

impl LimitGraph {
    fn new(deg: &Degeneration) -> Result<Self> {
        let weight = deg.weight_profile();
        let factors: Vec<Rational> = deg
            .annuli()
            .iter()
            .enumerate()
            .map(|(k, a)| if a.alpha == -1 && a.beta == weight.minimum && weight.contains_edge(k) { a.cmag } else { int(0) })
            .collect();
        if factors.iter().all(Zero::is_zero) {
            return Err(Error::NotMaximallyDegenerate(format!(
                "the minimality locus of the weight (minimum {}) contains no full skeleton edge",
                weight.minimum
            )));
        }
        let skeleton = deg.skeleton();
        let weighted = MetricGraph::new(
            skeleton.vertex_count(),
            skeleton.edges().iter().zip(&factors).map(|(e, d)| (e.tail.0, e.head.0, *d * e.length)),
        )?;
        let zero: Vec<EdgeId> = (0..factors.len()).filter(|&k| factors[k].is_zero()).map(EdgeId).collect();
        let collapse = weighted.collapse_edges(&zero)?;
        let diameter = collapse.graph.diameter();
        let real = |g: &MetricGraph| MetricGraph::new(g.vertex_count(), g.edges().iter().map(|e| (e.tail.0, e.head.0, to_f64(e.length))));
        let skeleton_real = real(&skeleton)?;
        let weighted_real = real(&weighted)?;
        let collapse_real = weighted_real.collapse_edges(&zero)?;
        Ok(LimitGraph { skeleton, weighted, factors, collapse, weight, diameter, skeleton_real, weighted_real, collapse_real })
    }

    pub fn delta(&self) -> &MetricGraph {
        &self.collapse.graph
    }

    pub fn skeleton(&self) -> &MetricGraph {
        &self.skeleton
    }

    pub fn weighted_skeleton(&self) -> &MetricGraph {
        &self.weighted
    }

    pub fn edge_factors(&self) -> &[Rational] {
        &self.factors
    }

    pub fn weight(&self) -> &WeightProfile {
        &self.weight
    }

    pub fn diameter(&self) -> Rational {
        self.diameter
    }

    /// Skeleton edges contracted in Δ.
    pub fn collapsed_edges(&self) -> Vec<EdgeId> {
        (0..self.factors.len()).filter(|&k| self.factors[k].is_zero()).map(EdgeId).collect()
    }

    /// Image in Δ of an annulus edge of Δ, if it survives.
    pub fn delta_edge(&self, skeleton_edge: EdgeId) -> Option<EdgeId> {
        self.collapse.edge_map.get(skeleton_edge.0).copied().flatten()
    }

    pub fn delta_vertex(&self, skeleton_vertex: VertexId) -> VertexId {
        self.collapse.vertex_map[skeleton_vertex.0]
    }

    /// Quotient map from skeleton points (offsets in valuation units) to Δ.
    pub fn map_point(&self, p: &GraphPoint) -> Result<GraphPoint> {
        let weighted = match *p {
            GraphPoint::Vertex(v) => self.skeleton.vertex(v)?,
            GraphPoint::Edge { edge, offset } => {
                self.skeleton.point(edge, offset)?;
                self.weighted.point(edge, self.factors[edge.0] * offset)?
            }
        };
        self.collapse.map_point(&weighted)
    }

    /// Δ with floating-point lengths, for points with real offsets.
    pub fn delta_real(&self) -> &MetricGraph<f64> {
        &self.collapse_real.graph
    }

    pub fn skeleton_real(&self) -> &MetricGraph<f64> {
        &self.skeleton_real
    }

    /// Quotient map for skeleton points with real offsets, into [`Self::delta_real`].
    pub fn map_real_point(&self, p: &GraphPoint<f64>) -> Result<GraphPoint<f64>> {
        let weighted = match *p {
            GraphPoint::Vertex(v) => self.skeleton_real.vertex(v)?,
            GraphPoint::Edge { edge, offset } => {
                self.skeleton_real.point(edge, offset)?;
                self.weighted_real.point(edge, to_f64(self.factors[edge.0]) * offset)?
            }
        };
        self.collapse_real.map_point(&weighted)
    }

    /// `d_Δ` between the images of two skeleton points.
    pub fn d_delta(&self, p: &GraphPoint, q: &GraphPoint) -> Result<Rational> {
        self.delta().distance(&self.map_point(p)?, &self.map_point(q)?)
    }

    /// Membership of the pair in `D_{≤α}` and `D_{≥α}`.
    pub fn d_set_membership(&self, p: &GraphPoint, q: &GraphPoint, alpha: Rational) -> Result<(bool, bool)> {
        if !alpha.is_positive() || alpha > self.diameter {
            return Err(argument(format!("alpha = {alpha} outside (0, diam Δ = {}]", self.diameter)));
        }
        let d = self.d_delta(p, q)?;
        Ok((d <= alpha, d >= alpha))
    }

    /// Path classes between two annulus edges on the rescaled skeleton.
    pub fn path_classes(&self, start: EdgeId, end: EdgeId, bound: Rational) -> Result<Vec<PathClass>> {
        self.weighted.path_classes(start, end, bound)
    }

    /// Length in Δ units of the class realized between offsets `tau_p` on the
    /// start edge and `tau_q` on the end edge: the direction-weighted boundary
    /// terms of both end edges plus the exterior length.
    pub fn class_length(&self, class: &PathClass, tau_p: Rational, tau_q: Rational) -> Result<Rational> {
        let (i, j) = (class.start_edge, class.end_edge);
        let len_i = self.skeleton.edge(i)?.length;
        let len_j = self.skeleton.edge(j)?.length;
        for (tau, len, e) in [(tau_p, len_i, i), (tau_q, len_j, j)] {
            if tau.is_negative() || tau > len {
                return Err(argument(format!("offset {tau} outside skeleton edge {}", e.0)));
            }
        }
        let (di, dj) = (self.factors[i.0], self.factors[j.0]);
        let terms = match (&class.route, class.start_orientation(), class.end_orientation()) {
            (ClassRoute::Direct, _, _) => {
                if i != j {
                    return Err(argument("direct class must start and end on the same edge"));
                }
                di * (tau_p - tau_q).abs()
            }
            (_, Some(si), Some(sj)) => {
                // toward the tail covers tau, toward the head covers len - tau;
                // on the end edge the walk arrives from the opposite side
                let start = int(si.kappa as i128) * tau_p + int(si.lambda as i128) * (len_i - tau_p);
                let end = int(sj.kappa as i128) * (len_j - tau_q) + int(sj.lambda as i128) * tau_q;
                di * start + dj * end
            }
            _ => unreachable!("via classes carry orientations"),
        };
        Ok(terms + class.exterior_length)
    }

    /// Membership of the pair in `E_{[γ],≤α}` and `E_{[γ],≥α}`.
    pub fn e_set_membership(&self, class: &PathClass, tau_p: Rational, tau_q: Rational, alpha: Rational) -> Result<(bool, bool)> {
        let len = self.class_length(class, tau_p, tau_q)?;
        Ok((len <= alpha, len >= alpha))
    }
}
