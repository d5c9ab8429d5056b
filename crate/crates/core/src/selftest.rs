//! The bundled acceptance suite, run on the built-in specs.

use std::f64::consts::TAU;
use std::fmt::Write as _;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotics::{convergence_experiment, diameter_s_list, verify_diameter_asymptotics, verify_edge_asymptotics, ConvergenceConfig, Tolerances};
use crate::degeneration::Degeneration;
use crate::error::Result;
use crate::export::fiber_matrix;
use crate::fiber::FiberComplex;
use crate::gh::{distortion, gh_exact_small, gh_lower, validate_metric, Correspondence, FiniteMetricSpace};
use crate::graph::{EdgeId, GraphPoint};
use crate::number::{rat, Rational};
use crate::specfile::{builtin, load_spec};

pub const TORUS_TOL: [(usize, f64); 2] = [(256, 0.02), (1024, 0.005)];
pub const TORUS_S: [f64; 3] = [1e-2, 1e-3, 1e-4];
pub const TORUS_PAIRS: usize = 200;
pub const EDGE_TOL: Tolerances = Tolerances { c_relative: 0.02, w_absolute: 1e-3 };
pub const CONE_DROP: f64 = 5.0;
pub const DIAM_TOL: Tolerances = Tolerances { c_relative: 0.05, w_absolute: 1e-2 };
pub const DIAM_RESOLUTION: usize = 128;
pub const DIAM_SAMPLES: usize = 240;
pub const CONVERGENCE_S: [f64; 4] = [1e-2, 1e-3, 1e-4, 1e-5];
pub const GH_THRESHOLD: [(&str, f64); 2] = [("tate", 0.1), ("theta", 0.15)];
pub const SANDWICH_PAIRS: usize = 100;
pub const SANDWICH_CORRESPONDENCES: usize = 50;
pub const POINT_GH_TOL: f64 = 1e-12;
pub const DE_PAIRS: usize = 100;
pub const METRIC_TOL: f64 = 1e-9;
pub const TORUS_BUDGET: Duration = Duration::from_secs(60);
pub const DIAM_BUDGET: Duration = Duration::from_secs(300);
pub const TOTAL_BUDGET: Duration = Duration::from_secs(600);

pub const TITLES: [&str; 8] = [
    "flat-torus oracle",
    "edge asymptotics",
    "diameter asymptotics",
    "GH convergence",
    "GH sandwich",
    "D/E-set consistency",
    "metric validity",
    "determinism",
];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SelftestOptions {
    /// Multiplies every tolerance; values below 1 tighten the suite.
    pub tolerance_scale: f64,
}

impl Default for SelftestOptions {
    fn default() -> Self {
        SelftestOptions { tolerance_scale: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CriterionResult {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl CriterionResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}. {}: {} ({:.1} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

/// Tally of finite metric spaces checked by `validate_metric`.
#[derive(Debug, Default)]
struct Audit {
    checked: usize,
    failed: usize,
}

impl Audit {
    fn record(&mut self, ok: bool) {
        self.checked += 1;
        self.failed += usize::from(!ok);
    }

    fn space(&mut self, m: &FiniteMetricSpace) {
        self.record(validate_metric(m, METRIC_TOL * m.diameter().max(1.0)));
    }
}

/// Runs all criteria and returns one result per criterion, ordered by id.
/// Metric validity runs last since it audits the spaces built by the others.
pub fn run_all(options: SelftestOptions) -> Vec<CriterionResult> {
    run_all_with(options, |_| {})
}

/// Like [`run_all`], calling `report` as each criterion finishes.
pub fn run_all_with(options: SelftestOptions, report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    run_selected(options, &[1, 2, 3, 4, 5, 6, 7, 8], report)
}

/// Runs the criteria in `ids` (1 to 8); unknown ids are ignored.
pub fn run_selected(options: SelftestOptions, ids: &[usize], mut report: impl FnMut(&CriterionResult)) -> Vec<CriterionResult> {
    let mut audit = Audit::default();
    let mut out = Vec::new();
    for id in [1, 2, 3, 4, 5, 6, 8, 7].into_iter().filter(|id| ids.contains(id)) {
        let t = Instant::now();
        let outcome = match id {
            1 => torus(options),
            2 => edges(options),
            3 => diameters(options, &mut audit),
            4 => convergence(options, &mut audit),
            5 => sandwich(options, &mut audit),
            6 => d_e_sets(),
            7 => Ok(metric_validity(&audit)),
            _ => determinism(&mut audit),
        };
        let (pass, detail) = outcome.unwrap_or_else(|e| (false, format!("error: {e}")));
        let r = CriterionResult { id, title: TITLES[id - 1], pass, detail, elapsed: t.elapsed() };
        report(&r);
        out.push(r);
    }
    out.sort_by_key(|r| r.id);
    out
}

/// Total runtime of a suite run against [`TOTAL_BUDGET`].
pub fn total_line(results: &[CriterionResult]) -> (bool, String) {
    let total: Duration = results.iter().map(|r| r.elapsed).sum();
    let pass = total < TOTAL_BUDGET && results.iter().all(|r| r.pass);
    let passed = results.iter().filter(|r| r.pass).count();
    (pass, format!("{passed}/{} criteria passed in {:.1} s (budget {} s)", results.len(), total.as_secs_f64(), TOTAL_BUDGET.as_secs()))
}

fn torus(options: SelftestOptions) -> Result<(bool, String)> {
    let start = Instant::now();
    let deg = builtin("tate")?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let pairs: Vec<[(f64, f64); 2]> =
        (0..TORUS_PAIRS).map(|_| [0, 1].map(|_| (rng.random_range(0.0..3.0), rng.random_range(0.0..TAU)))).collect();
    let mut pass = true;
    let mut detail = String::new();
    for (n, tol) in TORUS_TOL {
        let mut worst: f64 = 0.0;
        for s in TORUS_S {
            let fiber = FiberComplex::build(&deg, s, n)?;
            // flat torus: circumference 2 pi, height 3 ln(1/s)
            let h = -s.ln();
            let errors: Vec<f64> = pairs
                .par_iter()
                .map(|[(v1, p1), (v2, p2)]| {
                    let p = fiber.annulus_point(EdgeId(0), *v1, *p1)?;
                    let q = fiber.annulus_point(EdgeId(0), *v2, *p2)?;
                    let expected = lattice_minimum(TAU, 3.0 * h, (v1 - v2) * h, p1 - p2);
                    Ok((fiber.distance(&p, &q)? - expected).abs() / expected)
                })
                .collect::<Result<_>>()?;
            worst = errors.into_iter().fold(worst, f64::max);
        }
        let ok = worst <= tol * options.tolerance_scale;
        pass &= ok;
        let _ = write!(detail, "n={n}: max rel err {worst:.2e} (tol {:.1e}); ", tol * options.tolerance_scale);
    }
    let elapsed = start.elapsed();
    pass &= elapsed < TORUS_BUDGET;
    let _ = write!(detail, "runtime {:.1} s (budget {} s)", elapsed.as_secs_f64(), TORUS_BUDGET.as_secs());
    Ok((pass, detail))
}

/// Distance on the flat torus with lattice generated by `(c, 0)` and `(0, h)`,
/// for an angular offset `dphi` and height offset `dz`.
fn lattice_minimum(c: f64, h: f64, dz: f64, dphi: f64) -> f64 {
    let mut best = f64::INFINITY;
    for i in -1..=1 {
        for k in -2..=2 {
            best = best.min((dz + i as f64 * h).hypot(c * (dphi / TAU + k as f64)));
        }
    }
    best
}

fn loop_spec(alpha: i64, beta: &str, cmag: &str, len: &str, second: Option<i64>) -> String {
    let annulus = |id: &str, alpha: i64, beta: &str, cmag: &str, len: &str| {
        format!(
            "[[annuli]]\nid = \"{id}\"\nalpha = {alpha}\nbeta = \"{beta}\"\ncmag = \"{cmag}\"\na_lo = \"0\"\na_hi = \"{len}\"\nend_lo = \"v\"\nend_hi = \"v\"\n\n"
        )
    };
    let mut text = annulus("e0", alpha, beta, cmag, len);
    let slots = if let Some(a) = second {
        text += &annulus("e1", a, "0", "1", "2");
        4
    } else {
        2
    };
    let row = vec!["0.0"; slots].join(", ");
    let table = vec![format!("[{row}]"); slots].join(", ");
    text + &format!("[[junctions]]\nid = \"v\"\ntable = [{table}]\n")
}

fn edges(options: SelftestOptions) -> Result<(bool, String)> {
    let s = crate::asymptotics::default_s_list();
    let tol = Tolerances { c_relative: EDGE_TOL.c_relative * options.tolerance_scale, w_absolute: EDGE_TOL.w_absolute * options.tolerance_scale };
    let cylinders: [(&str, &str, &str, Rational, Rational); 3] = [
        ("0", "1", "3", rat(1, 2), rat(3, 2)),
        ("1/2", "2", "4", rat(0, 1), rat(3, 1)),
        ("1", "3/2", "2", rat(1, 2), rat(2, 1)),
    ];
    let mut pass = true;
    let mut detail = String::new();
    for (beta, cmag, len, ta, tb) in cylinders {
        let deg = load_spec(&loop_spec(-1, beta, cmag, len, None))?;
        let r = verify_edge_asymptotics(&deg, EdgeId(0), (ta, tb), &s, 64, tol)?;
        let f = r.fit.expect("three or more points are fitted");
        pass &= r.pass;
        let _ = write!(detail, "beta={beta} cmag={cmag}: C={:.4} ({:.4}) w={:.2e}; ", f.c, r.expected_c.unwrap_or(f64::NAN), f.w - r.reference_w);
    }
    for alpha in [0, 1] {
        let deg = load_spec(&loop_spec(-1, "0", "1", "3", Some(alpha)))?;
        let r = verify_edge_asymptotics(&deg, EdgeId(1), (rat(1, 2), rat(3, 2)), &s, 64, tol)?;
        let drop = r.series[0].ratio / r.series[r.series.len() - 1].ratio;
        let ok = r.checks[0].pass && drop >= CONE_DROP / options.tolerance_scale;
        pass &= ok;
        let _ = write!(detail, "alpha={alpha}: ratio drop {drop:.1}x; ");
    }
    Ok((pass, detail.trim_end_matches("; ").to_string()))
}

fn diameters(options: SelftestOptions, audit: &mut Audit) -> Result<(bool, String)> {
    let start = Instant::now();
    let s = diameter_s_list();
    let tol = Tolerances { c_relative: DIAM_TOL.c_relative * options.tolerance_scale, w_absolute: DIAM_TOL.w_absolute * options.tolerance_scale };
    let mut pass = true;
    let mut detail = format!("s={:e}..{:e}: ", s[0], s[s.len() - 1]);
    for name in ["tate", "theta", "collapsed-theta"] {
        let r = verify_diameter_asymptotics(&builtin(name)?, &s, DIAM_RESOLUTION, DIAM_SAMPLES, 7, tol)?;
        for p in &r.series {
            audit.record(p.metric_valid.unwrap_or(false));
        }
        let f = r.fit.expect("diameter reports are fitted");
        pass &= r.pass;
        let _ = write!(detail, "{name} C={:.4} ({}) w={:.1e}; ", f.c, r.expected_c.unwrap_or(f64::NAN), f.w);
    }
    let elapsed = start.elapsed();
    pass &= elapsed < DIAM_BUDGET;
    let _ = write!(detail, "runtime {:.1} s (budget {} s)", elapsed.as_secs_f64(), DIAM_BUDGET.as_secs());
    Ok((pass, detail))
}

fn convergence(options: SelftestOptions, audit: &mut Audit) -> Result<(bool, String)> {
    let mut pass = true;
    let mut detail = String::new();
    for (name, threshold) in GH_THRESHOLD {
        let config = ConvergenceConfig { threshold: threshold * options.tolerance_scale, ..ConvergenceConfig::default() };
        let r = convergence_experiment(&builtin(name)?, &CONVERGENCE_S, config)?;
        for row in &r.rows {
            // the sample space and the Δ space of each row
            audit.record(row.metric_valid);
            audit.record(row.metric_valid);
        }
        pass &= r.pass;
        let upper: Vec<String> = r.rows.iter().map(|row| format!("{:.4}", row.gh_upper)).collect();
        let _ = write!(detail, "{name} gh_upper [{}] (< {threshold}); ", upper.join(", "));
    }
    Ok((pass, detail.trim_end_matches("; ").to_string()))
}

fn random_space(rng: &mut impl Rng, n: usize) -> Result<FiniteMetricSpace> {
    let mut d = vec![vec![0.0f64; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let w = rng.random_range(0.1..4.0);
            d[i][j] = w;
            d[j][i] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    FiniteMetricSpace::from_matrix(d)
}

fn sandwich(options: SelftestOptions, audit: &mut Audit) -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = 0;
    let mut tightest = f64::INFINITY;
    let mut point_error: f64 = 0.0;
    for _ in 0..SANDWICH_PAIRS {
        let n1 = rng.random_range(4..=6);
        let n2 = rng.random_range(4..=6);
        let a = random_space(&mut rng, n1)?;
        let b = random_space(&mut rng, n2)?;
        audit.space(&a);
        audit.space(&b);
        let best = (0..SANDWICH_CORRESPONDENCES)
            .map(|_| {
                let mut pairs: Vec<(usize, usize)> = (0..n1).map(|x| (x, rng.random_range(0..n2))).collect();
                pairs.extend((0..n2).map(|y| (rng.random_range(0..n1), y)));
                distortion(&a, &b, &Correspondence { pairs }).map(|d| d / 2.0)
            })
            .collect::<Result<Vec<f64>>>()?
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let exact = gh_exact_small(&a, &b)?;
        let lower = gh_lower(&a, &b);
        violations += usize::from(!(lower <= exact && exact <= best));
        tightest = tightest.min(best - exact);
        let to_point = gh_exact_small(&a, &FiniteMetricSpace::point())?;
        point_error = point_error.max((to_point - a.diameter() / 2.0).abs());
    }
    let pass = violations == 0 && point_error <= POINT_GH_TOL * options.tolerance_scale;
    Ok((pass, format!("{violations} sandwich violations in {SANDWICH_PAIRS} pairs; |d_GH(M, pt) - diam/2| <= {point_error:.1e}")))
}

fn d_e_sets() -> Result<(bool, String)> {
    let lg = builtin("theta")?.limit_graph()?;
    let diam = lg.diameter();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let point = |rng: &mut ChaCha8Rng| {
        let e = EdgeId(rng.random_range(0..lg.skeleton().edge_count()));
        let den = rng.random_range(1..=12i128);
        (e, lg.skeleton().edges()[e.0].length * rat(rng.random_range(0..=den), den))
    };
    let mut mismatches = 0;
    let mut checked = 0;
    for _ in 0..DE_PAIRS {
        let (i, tp) = point(&mut rng);
        let (j, tq) = point(&mut rng);
        let p = GraphPoint::Edge { edge: i, offset: tp };
        let q = GraphPoint::Edge { edge: j, offset: tq };
        let d = lg.d_delta(&p, &q)?;
        let den = rng.random_range(1..=8i128);
        let mut levels = vec![diam * rat(rng.random_range(1..=den), den)];
        if d > rat(0, 1) {
            levels.push(d);
        }
        let classes = lg.path_classes(i, j, diam)?;
        for alpha in levels {
            let (leq, geq) = lg.d_set_membership(&p, &q, alpha)?;
            let members = classes.iter().map(|c| lg.e_set_membership(c, tp, tq, alpha)).collect::<Result<Vec<_>>>()?;
            checked += 1;
            mismatches += usize::from(leq != members.iter().any(|m| m.0) || geq != members.iter().all(|m| m.1));
        }
    }
    Ok((mismatches == 0, format!("{mismatches} mismatches over {checked} exact membership checks")))
}

fn metric_validity(audit: &Audit) -> (bool, String) {
    (
        audit.checked > 0 && audit.failed == 0,
        format!("{} of {} spaces pass validate_metric at {METRIC_TOL:e} relative", audit.checked - audit.failed, audit.checked),
    )
}

fn fiber_matrix_bytes(deg: &Degeneration, audit: &mut Audit) -> Result<(String, String)> {
    let fm = fiber_matrix(deg, 1e-3, 64, 40, 42)?;
    audit.space(&fm.space);
    Ok((fm.matrix_csv(), fm.sidecar))
}

fn determinism(audit: &mut Audit) -> Result<(bool, String)> {
    let deg = builtin("tate")?;
    let first = fiber_matrix_bytes(&deg, audit)?;
    let second = fiber_matrix_bytes(&deg, audit)?;
    let same = first == second;
    Ok((same, format!("two fiber-matrix runs {} ({} + {} bytes)", if same { "byte-identical" } else { "differ" }, first.0.len(), first.1.len())))
}
