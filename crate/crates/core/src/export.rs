//! Sampled fiber distance matrices and their coordinate sidecar.

use crate::degeneration::{Degeneration, PieceRef};
use crate::error::Result;
use crate::fiber::{FiberComplex, FiberPoint};
use crate::gh::FiniteMetricSpace;
use crate::graph::GraphPoint;
use crate::number::to_f64;

#[derive(Clone, Debug)]
pub struct FiberMatrix {
    /// Distances divided by `scale`.
    pub space: FiniteMetricSpace,
    /// `ln(1/s) s^w`.
    pub scale: f64,
    pub sidecar: String,
}

impl FiberMatrix {
    pub fn matrix_csv(&self) -> String {
        self.space.to_csv()
    }
}

/// Samples `m` points of the fiber at `s` and returns their normalized
/// distance matrix together with a CSV of piece coordinates and skeleton
/// retractions (`label,piece,val,phi,rho,retraction`).
pub fn fiber_matrix(deg: &Degeneration, s: f64, n: usize, m: usize, seed: u64) -> Result<FiberMatrix> {
    let limit = deg.limit_graph()?;
    let fiber = FiberComplex::build(deg, s, n)?;
    let sample = fiber.sample(m, seed);
    let scale = -s.ln() * s.powf(to_f64(limit.weight().minimum));
    let dist: Vec<Vec<f64>> =
        fiber.distance_matrix(&sample)?.into_iter().map(|row| row.into_iter().map(|d| d / scale).collect()).collect();
    let labels: Vec<String> = (0..sample.len()).map(|i| format!("p{i}")).collect();

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["label", "piece", "val", "phi", "rho", "retraction"]).expect("in-memory write");
    for (label, p) in labels.iter().zip(&sample) {
        let (piece, val, phi) = match *p {
            FiberPoint::Piece { piece, val, phi } => (piece_name(deg, piece), format!("{val:?}"), phi),
            FiberPoint::Slot { junction, slot, phi } => (format!("{}#{slot}", deg.spec().junctions[junction].id), String::new(), phi),
        };
        let retraction = match fiber.retract(p)? {
            GraphPoint::Vertex(v) => deg.spec().junctions[v.0].id.clone(),
            GraphPoint::Edge { edge, offset } => format!("{}@{offset:?}", deg.annuli()[edge.0].id),
        };
        let rho = format!("{:?}", p.rho(&fiber)?);
        w.write_record([label.as_str(), &piece, &val, &format!("{phi:?}"), &rho, &retraction]).expect("in-memory write");
    }
    let sidecar = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output");
    Ok(FiberMatrix { space: FiniteMetricSpace::new(labels, dist)?, scale, sidecar })
}

fn piece_name(deg: &Degeneration, piece: PieceRef) -> String {
    match piece {
        PieceRef::Annulus(i) => deg.annuli()[i].id.clone(),
        PieceRef::Ball(b) => deg.balls()[b].id.clone(),
    }
}
