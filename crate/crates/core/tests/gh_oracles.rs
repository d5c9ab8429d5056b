use flatgh_core::degeneration::PieceRef;
use flatgh_core::fiber::{FiberComplex, FiberPoint};
use flatgh_core::gh::{
    covering_radius, distortion, epsilon_net, gh_exact_small, gh_lower, gh_upper, graph_epsilon_net, retraction_correspondence,
    validate_metric, Correspondence, FiniteMetricSpace,
};
use flatgh_core::graph::{EdgeId, GraphPoint, MetricGraph};
use flatgh_core::specfile::builtin;
use flatgh_core::Error;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn space(d: Vec<Vec<f64>>) -> FiniteMetricSpace {
    FiniteMetricSpace::from_matrix(d).unwrap()
}

fn two_point(gap: f64) -> FiniteMetricSpace {
    space(vec![vec![0.0, gap], vec![gap, 0.0]])
}

/// Shortest-path metric of a random weighted complete graph.
fn random_space(rng: &mut impl Rng, n: usize) -> FiniteMetricSpace {
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = (rng.random_range(1..=20) as f64) / 4.0;
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    space(d)
}

/// Minimum distortion over every relation, by enumerating all subsets of X x Y.
fn brute_gh(m1: &FiniteMetricSpace, m2: &FiniteMetricSpace) -> f64 {
    let cells: Vec<(usize, usize)> = (0..m1.len()).flat_map(|x| (0..m2.len()).map(move |y| (x, y))).collect();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << cells.len()) {
        let pairs: Vec<_> = (0..cells.len()).filter(|k| mask >> k & 1 == 1).map(|k| cells[k]).collect();
        let r = Correspondence { pairs };
        if r.check(m1.len(), m2.len()).is_ok() {
            best = best.min(distortion(m1, m2, &r).unwrap());
        }
    }
    best / 2.0
}

fn random_correspondence(rng: &mut impl Rng, n1: usize, n2: usize) -> Correspondence {
    let mut pairs: Vec<(usize, usize)> = (0..n1).map(|x| (x, rng.random_range(0..n2))).collect();
    pairs.extend((0..n2).map(|y| (rng.random_range(0..n1), y)));
    Correspondence { pairs }
}

#[test]
fn validate_metric_examples() {
    assert!(validate_metric(&FiniteMetricSpace::point(), 0.0));
    let bad = space(vec![vec![0.0, 1.0, 1.0], vec![1.0, 0.0, 3.0], vec![1.0, 3.0, 0.0]]);
    assert!(!validate_metric(&bad, 1e-9));
    assert!(FiniteMetricSpace::from_matrix(vec![vec![0.0, 1.0], vec![2.0, 0.0]]).is_err());
}

#[test]
fn distortion_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let m = random_space(&mut rng, 5);
    assert_eq!(distortion(&m, &m, &Correspondence::identity(5)).unwrap(), 0.0);
    assert_eq!(distortion(&two_point(1.0), &two_point(2.0), &Correspondence::identity(2)).unwrap(), 1.0);
    assert_eq!(gh_upper(&two_point(1.0), &two_point(2.0), &Correspondence::identity(2)).unwrap(), 0.5);
    let partial = Correspondence { pairs: vec![(0, 0)] };
    assert!(matches!(distortion(&two_point(1.0), &two_point(1.0), &partial), Err(Error::Argument(_))));

    for _ in 0..20 {
        let m = random_space(&mut rng, 6);
        let eps = 0.1;
        let mut d = m.matrix().to_vec();
        for i in 0..6 {
            for j in i + 1..6 {
                let e = rng.random_range(-eps..=eps);
                d[i][j] += e;
                d[j][i] += e;
            }
        }
        let perturbed = space(d);
        assert!(distortion(&m, &perturbed, &Correspondence::identity(6)).unwrap() <= 2.0 * eps);
    }
}

#[test]
fn exact_gh_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let m = random_space(&mut rng, 6);
    assert_eq!(gh_exact_small(&m, &m).unwrap(), 0.0);
    assert_eq!(gh_exact_small(&FiniteMetricSpace::point(), &m).unwrap(), m.diameter() / 2.0);
    for (a, b) in [(1.0, 2.0), (0.5, 3.25), (2.0, 2.0)] {
        let exact = gh_exact_small(&two_point(a), &two_point(b)).unwrap();
        assert_eq!(exact, f64::abs(a - b) / 2.0);
        assert_eq!(exact, brute_gh(&two_point(a), &two_point(b)));
    }
    let big = random_space(&mut rng, 7);
    assert!(matches!(gh_exact_small(&big, &m), Err(Error::Argument(_))));
}

#[test]
fn exact_gh_matches_relation_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..30 {
        let (n1, n2) = (rng.random_range(1..=3), rng.random_range(1..=4));
        let (m1, m2) = (random_space(&mut rng, n1), random_space(&mut rng, n2));
        assert_eq!(gh_exact_small(&m1, &m2).unwrap(), brute_gh(&m1, &m2), "{m1:?} {m2:?}");
    }
}

#[test]
fn lower_bound_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let m = random_space(&mut rng, 5);
    assert_eq!(gh_lower(&m, &m), 0.0);
    assert_eq!(gh_lower(&FiniteMetricSpace::point(), &two_point(2.0)), 1.0);
}

#[test]
fn sandwich_on_random_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (n1, n2) = (rng.random_range(4..=6), rng.random_range(4..=6));
        let (m1, m2) = (random_space(&mut rng, n1), random_space(&mut rng, n2));
        let exact = gh_exact_small(&m1, &m2).unwrap();
        let best = (0..50)
            .map(|_| gh_upper(&m1, &m2, &random_correspondence(&mut rng, n1, n2)).unwrap())
            .fold(f64::INFINITY, f64::min);
        let lower = gh_lower(&m1, &m2);
        assert!(lower <= exact && exact <= best, "{lower} {exact} {best}");
        assert_eq!(gh_lower(&m2, &m1), lower);
        assert_eq!(gh_exact_small(&m2, &m1).unwrap(), exact);
    }
}

#[test]
fn point_distance_is_half_diameter() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..20 {
        let n = rng.random_range(2..=11);
        let m = random_space(&mut rng, n);
        assert!((gh_exact_small(&m, &FiniteMetricSpace::point()).unwrap() - m.diameter() / 2.0).abs() <= 1e-12);
        assert!(gh_lower(&m, &FiniteMetricSpace::point()) <= m.diameter() / 2.0);
    }
}

#[test]
fn distortion_is_invariant_under_relabeling() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (m1, m2) = (random_space(&mut rng, 5), random_space(&mut rng, 6));
    let r = random_correspondence(&mut rng, 5, 6);
    let mut perm: Vec<usize> = (0..6).collect();
    perm.shuffle(&mut rng);
    let d: Vec<Vec<f64>> = (0..6).map(|i| (0..6).map(|j| m2.d(perm[i], perm[j])).collect()).collect();
    let relabeled = space(d);
    let inverse: Vec<usize> = (0..6).map(|y| perm.iter().position(|&p| p == y).unwrap()).collect();
    let r2 = Correspondence { pairs: r.pairs.iter().map(|&(x, y)| (x, inverse[y])).collect() };
    assert_eq!(distortion(&m1, &m2, &r).unwrap(), distortion(&m1, &relabeled, &r2).unwrap());
    let flipped = Correspondence { pairs: r.pairs.iter().map(|&(x, y)| (y, x)).collect() };
    assert_eq!(distortion(&m1, &m2, &r).unwrap(), distortion(&m2, &m1, &flipped).unwrap());
}

#[test]
fn finite_nets_cover() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let m = random_space(&mut rng, 12);
        for eps in [0.25, 0.5, 1.0, 100.0] {
            let net = epsilon_net(&m, eps).unwrap();
            assert!((0..m.len()).all(|i| net.iter().any(|&k| m.d(i, k) <= eps)));
            if eps >= m.diameter() {
                assert_eq!(net.len(), 1);
            }
        }
    }
    assert!(matches!(epsilon_net(&FiniteMetricSpace::point(), 0.0), Err(Error::Argument(_))));
}

/// Largest distance from a dense subdivision of the graph to the point set.
fn sampled_cover(g: &MetricGraph<f64>, net: &[GraphPoint<f64>], k: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for (e, edge) in g.edges().iter().enumerate() {
        for i in 0..=k {
            let p = g.point(EdgeId(e), edge.length * i as f64 / k as f64).unwrap();
            let d = net.iter().map(|q| g.distance(&p, q).unwrap()).fold(f64::INFINITY, f64::min);
            worst = worst.max(d);
        }
    }
    worst
}

#[test]
fn graph_net_examples() {
    let circle = MetricGraph::new(1, [(0, 0, 1.0)]).unwrap();
    let net = graph_epsilon_net(&circle, 0.25).unwrap();
    assert_eq!(net.len(), 2);
    assert!(sampled_cover(&circle, &net, 1000) <= 0.25 + 1e-12);

    let segment = MetricGraph::new(2, [(0, 1, 1.0)]).unwrap();
    let net = graph_epsilon_net(&segment, 0.1).unwrap();
    assert!(net.len() <= 6);
    assert!(sampled_cover(&segment, &net, 1000) <= 0.1 + 1e-12);
    assert_eq!(graph_epsilon_net(&segment, 1.0).unwrap().len(), 1);

    let theta = MetricGraph::new(2, [(0, 1, 1.0), (0, 1, 1.0), (0, 1, 2.0)]).unwrap();
    for eps in [0.05, 0.2, 0.45, 0.8, 1.5] {
        let net = graph_epsilon_net(&theta, eps).unwrap();
        let sampled = sampled_cover(&theta, &net, 400);
        let exact = covering_radius(&theta, &net).unwrap();
        assert!(sampled <= exact + 1e-12 && exact <= sampled + 2.0 / 400.0, "{sampled} {exact}");
        assert!(exact <= eps + 1e-12);
    }
    assert_eq!(graph_epsilon_net(&theta, 1.5).unwrap().len(), 1);
}

#[test]
fn csv_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let m = random_space(&mut rng, 5).scaled(3.0).unwrap();
    let back = FiniteMetricSpace::from_csv(&m.to_csv()).unwrap();
    assert_eq!(back, m);
    let labelled = FiniteMetricSpace::new(vec!["a,b".into(), "c\"d".into()], vec![vec![0.0, 1e-300], vec![1e-300, 0.0]]).unwrap();
    assert_eq!(FiniteMetricSpace::from_csv(&labelled.to_csv()).unwrap(), labelled);
}

#[test]
fn retraction_correspondence_on_one_cylinder() {
    let deg = builtin("theta").unwrap();
    let lg = deg.limit_graph().unwrap();
    let f = FiberComplex::build(&deg, 1e-3, 64).unwrap();
    let sample: Vec<FiberPoint> =
        (0..20).map(|i| FiberPoint::Piece { piece: PieceRef::Annulus(2), val: 0.05 + 0.09 * i as f64, phi: 0.3 * i as f64 }).collect();
    let rc = retraction_correspondence(&f, &lg, &sample, 0.05).unwrap();
    assert!(rc.retractions.iter().all(|r| matches!(r, GraphPoint::Edge { edge: EdgeId(2), .. })));
    assert!((0..20).all(|i| rc.correspondence.pairs[i] == (i, i)));
    assert_eq!(rc.delta.len(), 20 + rc.net.len());
    assert!(validate_metric(&rc.fiber, 1e-9) && validate_metric(&rc.delta, 1e-9));
    assert!((rc.fiber.diameter() - 1.0).abs() < 1e-15);
}

#[test]
fn tate_upper_bound_improves_with_degeneration() {
    let deg = builtin("tate").unwrap();
    let lg = deg.limit_graph().unwrap();
    let bound = |s: f64| {
        let f = FiberComplex::build(&deg, s, 128).unwrap();
        let rc = retraction_correspondence(&f, &lg, &f.sample(150, 3), 0.02).unwrap();
        gh_upper(&rc.fiber, &rc.delta, &rc.correspondence).unwrap()
    };
    let (early, late) = (bound(1e-2), bound(1e-4));
    assert!(late < early, "{late} vs {early}");
}
