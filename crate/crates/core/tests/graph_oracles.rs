//! Brute-force oracles and metric invariants for the graph core.

use flatgh_core::graph::{EdgeId, GraphPoint, MetricGraph};
use flatgh_core::number::{int, rat, Length};
use flatgh_core::Rational;
use proptest::prelude::*;

/// Subdivides every edge into `k` equal pieces and runs Floyd-Warshall on the
/// resulting plain weighted graph. Returns node distances plus a lookup from
/// (edge, step) to node index.
struct Subdivision {
    dist: Vec<Vec<Rational>>,
    node: Vec<Vec<usize>>,
}

fn subdivide(g: &MetricGraph, k: usize) -> Subdivision {
    let mut count = g.vertex_count();
    let mut node = Vec::new();
    let mut links = Vec::new();
    for e in g.edges() {
        let mut ids = vec![e.tail.0];
        for _ in 1..k {
            ids.push(count);
            count += 1;
        }
        ids.push(e.head.0);
        let step = e.length / int(k as i128);
        for w in ids.windows(2) {
            links.push((w[0], w[1], step));
        }
        node.push(ids);
    }
    let mut dist = vec![vec![None::<Rational>; count]; count];
    for (i, row) in dist.iter_mut().enumerate() {
        row[i] = Some(int(0));
    }
    for &(a, b, l) in &links {
        let cur = dist[a][b];
        if cur.map_or(true, |c| l < c) {
            dist[a][b] = Some(l);
            dist[b][a] = Some(l);
        }
    }
    for m in 0..count {
        for i in 0..count {
            let Some(im) = dist[i][m] else { continue };
            for j in 0..count {
                if let Some(mj) = dist[m][j] {
                    if dist[i][j].map_or(true, |c| im + mj < c) {
                        dist[i][j] = Some(im + mj);
                    }
                }
            }
        }
    }
    Subdivision { dist: dist.into_iter().map(|r| r.into_iter().map(Option::unwrap).collect()).collect(), node }
}

fn theta112() -> MetricGraph {
    MetricGraph::new(2, [(0, 1, int(1)), (0, 1, int(1)), (0, 1, int(2))]).unwrap()
}

#[test]
fn theta_midpoint_distance_matches_subdivision() {
    let g = theta112();
    let sub = subdivide(&g, 4);
    // midpoint of 2-edge is step 2 of 4, midpoint of first 1-edge is step 2 of 4
    let brute = sub.dist[sub.node[2][2]][sub.node[0][2]];
    let p = g.point(EdgeId(2), int(1)).unwrap();
    let q = g.point(EdgeId(0), rat(1, 2)).unwrap();
    assert_eq!(brute, rat(3, 2));
    assert_eq!(g.distance(&p, &q).unwrap(), brute);
}

#[test]
fn theta_diameter_matches_subdivision() {
    let g = theta112();
    let sub = subdivide(&g, 8);
    let brute = sub.dist.iter().flatten().copied().fold(int(0), |a, b| if b > a { b } else { a });
    assert_eq!(brute, rat(3, 2));
    assert_eq!(g.diameter(), brute);
}

/// Exhaustive walk enumeration without the library: all non-backtracking walks
/// from a start edge to an end edge, counted by exterior length.
fn brute_class_lengths(g: &MetricGraph, i: usize, j: usize, bound: Rational) -> Vec<Rational> {
    #[derive(Clone, Copy, PartialEq)]
    struct Arrive(usize, bool); // edge, arrived at its head?
    fn go(g: &MetricGraph, v: usize, arrived: Arrive, len: Rational, j: usize, bound: Rational, out: &mut Vec<Rational>) {
        for (k, e) in g.edges().iter().enumerate() {
            for head_end in [false, true] {
                let at = if head_end { e.head.0 } else { e.tail.0 };
                if at != v || arrived == Arrive(k, head_end) {
                    continue;
                }
                if k == j {
                    out.push(len);
                }
                let next = len + e.length;
                if next <= bound && e.length > int(0) {
                    let to = if head_end { e.tail.0 } else { e.head.0 };
                    go(g, to, Arrive(k, !head_end), next, j, bound, out);
                }
            }
        }
    }
    let mut out = Vec::new();
    let e = &g.edges()[i];
    go(g, e.tail.0, Arrive(i, false), int(0), j, bound, &mut out);
    go(g, e.head.0, Arrive(i, true), int(0), j, bound, &mut out);
    out.sort();
    out
}

#[test]
fn theta_class_counts_match_exhaustive_enumeration() {
    let g = theta112();
    for (i, j, bound) in [(0, 1, int(1)), (0, 2, rat(3, 2)), (0, 2, int(4)), (2, 2, int(3))] {
        let mut got: Vec<_> = g
            .path_classes(EdgeId(i), EdgeId(j), bound)
            .unwrap()
            .into_iter()
            .filter(|c| c.start_orientation().is_some())
            .map(|c| c.exterior_length)
            .collect();
        got.sort();
        assert_eq!(got, brute_class_lengths(&g, i, j, bound), "classes {i}->{j} bound {bound}");
    }
}

fn arb_graph() -> impl Strategy<Value = MetricGraph> {
    (2usize..6).prop_flat_map(|n| {
        let tree = proptest::collection::vec((0usize..100, 1i128..9, 1i128..3), n - 1);
        let extra = proptest::collection::vec((0usize..n, 0usize..n, 1i128..9, 1i128..3), 0..4);
        (Just(n), tree, extra).prop_map(|(n, tree, extra)| {
            let mut edges = Vec::new();
            for (v, (parent, p, q)) in tree.into_iter().enumerate() {
                edges.push((parent % (v + 1), v + 1, rat(p, q)));
            }
            for (a, b, p, q) in extra {
                edges.push((a, b, rat(p, q)));
            }
            MetricGraph::new(n, edges).unwrap()
        })
    })
}

fn arb_point(g: &MetricGraph, pick: (usize, u32)) -> GraphPoint {
    let e = pick.0 % g.edge_count();
    let len = g.edges()[e].length;
    g.point(EdgeId(e), len * rat(pick.1 as i128 % 17, 16).min(int(1))).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn distance_is_a_metric(g in arb_graph(), a in (0usize..50, 0u32..17), b in (0usize..50, 0u32..17), c in (0usize..50, 0u32..17)) {
        let (p, q, r) = (arb_point(&g, a), arb_point(&g, b), arb_point(&g, c));
        let pq = g.distance(&p, &q).unwrap();
        prop_assert!(pq >= int(0));
        prop_assert_eq!(pq, g.distance(&q, &p).unwrap());
        prop_assert_eq!(g.distance(&p, &p).unwrap(), int(0));
        let pr = g.distance(&p, &r).unwrap();
        let rq = g.distance(&r, &q).unwrap();
        prop_assert!(pq <= pr + rq);
    }

    #[test]
    fn diameter_dominates_and_is_approached_by_sampling(g in arb_graph()) {
        let diam = g.diameter();
        let k = 16usize;
        let sub = subdivide(&g, k);
        let sampled = sub.dist.iter().flatten().copied().fold(int(0), |a, b| if b > a { b } else { a });
        let spacing = g.edges().iter().map(|e| e.length).fold(int(0), |a, b| if b > a { b } else { a }) / int(k as i128);
        prop_assert!(sampled <= diam);
        prop_assert!(diam - sampled <= spacing + spacing);
    }

    #[test]
    fn collapse_matches_zeroed_lengths(g in arb_graph(), mask in 0u32..64, a in (0usize..50, 0u32..17), b in (0usize..50, 0u32..17)) {
        let zero: Vec<EdgeId> = (0..g.edge_count()).filter(|k| mask >> (k % 6) & 1 == 1).map(EdgeId).collect();
        let zeroed = MetricGraph::new(
            g.vertex_count(),
            g.edges().iter().enumerate().map(|(k, e)| (e.tail.0, e.head.0, if zero.contains(&EdgeId(k)) { int(0) } else { e.length })),
        ).unwrap();
        let c = g.collapse_edges(&zero).unwrap();
        // points are taken on the zeroed graph, then transported by offset
        let (p, q) = (arb_point(&zeroed, a), arb_point(&zeroed, b));
        let expected = zeroed.distance(&p, &q).unwrap();
        let got = c.graph.distance(&c.map_point(&p).unwrap(), &c.map_point(&q).unwrap()).unwrap();
        prop_assert_eq!(got, expected);
        prop_assert_eq!(c.graph.diameter(), zeroed.diameter());
    }

    #[test]
    fn class_sets_are_monotone_in_the_bound(g in arb_graph(), i in 0usize..50, j in 0usize..50, lo in 0i128..4, extra in 0i128..3) {
        let (i, j) = (EdgeId(i % g.edge_count()), EdgeId(j % g.edge_count()));
        let small = g.path_classes(i, j, rat(lo, 2)).unwrap();
        let large = g.path_classes(i, j, rat(lo + extra, 2)).unwrap();
        let filtered: Vec<_> = large.into_iter().filter(|c| c.exterior_length <= rat(lo, 2)).collect();
        prop_assert_eq!(filtered, small);
    }
}

#[test]
fn real_valued_lengths_work_too() {
    let g = MetricGraph::<f64>::new(2, [(0, 1, 1.0), (0, 1, 1.0), (0, 1, 2.0)]).unwrap();
    assert_eq!(g.diameter().to_f64(), 1.5);
}
