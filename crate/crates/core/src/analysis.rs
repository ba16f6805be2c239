//! Error maps against a reference oracle, memory accounting, Lipschitz
//! estimation, and empirical checks of the per-cell error bounds
//! `|V(p) - V(q)| <= k e sqrt(n)` and `|V(p) - L(p)| <= 5/2 k e sqrt(n)`.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::oracles::DistanceOracle;
use crate::plr::{base_points, Cell, LeafPayload, PlrTree};

/// Slack added to every bound comparison.
pub const BOUND_SLACK: f64 = 1e-9;

/// `|query - reference|` over a uniform grid spanning the root cell.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub grid_resolution: usize,
    pub max_error: f64,
    pub mean_error: f64,
    pub evaluated_points: usize,
    pub skipped_points: usize,
    /// Axis 0 varies fastest; `None` (NaN) where either side was infinite.
    #[serde(serialize_with = "nan_as_null")]
    pub heatmap: Vec<f64>,
}

fn nan_as_null<S: serde::Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(v.iter().map(|x| if x.is_nan() { None } else { Some(*x) }))
}

/// Coordinates of grid node `index` on a `resolution^n` lattice over `cell`.
pub fn grid_point(cell: &Cell, resolution: usize, mut index: usize) -> Vec<f64> {
    (0..cell.dim())
        .map(|axis| {
            let i = index % resolution;
            index /= resolution;
            let t = i as f64 / (resolution - 1) as f64;
            if i == resolution - 1 {
                cell.hi[axis]
            } else {
                cell.lo[axis] + t * (cell.hi[axis] - cell.lo[axis])
            }
        })
        .collect()
}

/// Evaluates any estimator against a reference on the grid. Points where
/// either side is infinite are skipped and counted.
pub fn error_map_of<F, R>(cell: &Cell, resolution: usize, estimate: F, reference: &R) -> ErrorReport
where
    F: Fn(&[f64]) -> f64,
    R: DistanceOracle + ?Sized,
{
    assert!(resolution >= 2, "grid resolution must be at least 2");
    let total = resolution.pow(cell.dim() as u32);
    let mut heatmap = Vec::with_capacity(total);
    let (mut max, mut sum, mut evaluated) = (0.0f64, 0.0, 0usize);
    for i in 0..total {
        let x = grid_point(cell, resolution, i);
        let (a, b) = (estimate(&x), reference.evaluate(&x));
        if a.is_finite() && b.is_finite() {
            let e = (a - b).abs();
            max = max.max(e);
            sum += e;
            evaluated += 1;
            heatmap.push(e);
        } else {
            heatmap.push(f64::NAN);
        }
    }
    ErrorReport {
        grid_resolution: resolution,
        max_error: max,
        mean_error: if evaluated > 0 {
            sum / evaluated as f64
        } else {
            0.0
        },
        evaluated_points: evaluated,
        skipped_points: total - evaluated,
        heatmap,
    }
}

pub fn error_map<R: DistanceOracle + ?Sized>(
    tree: &PlrTree,
    reference: &R,
    resolution: usize,
) -> ErrorReport {
    error_map_of(
        tree.root_cell(),
        resolution,
        |x| tree.query_unchecked(x),
        reference,
    )
}

impl ErrorReport {
    /// One line per grid row (axis 0 along the line); `NaN` for skipped points.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.heatmap.chunks(self.grid_resolution) {
            let line: Vec<String> = row
                .iter()
                .map(|v| {
                    if v.is_nan() {
                        "NaN".into()
                    } else {
                        format!("{v:.9e}")
                    }
                })
                .collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Binary 8-bit PGM, min-max normalised over evaluated points, skipped
    /// points black. Rows are flipped so axis 1 points up.
    pub fn to_pgm(&self) -> Vec<u8> {
        let w = self.grid_resolution;
        let h = self.heatmap.len() / w;
        let finite = self.heatmap.iter().filter(|v| !v.is_nan());
        let lo = finite.clone().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
        for row in self.heatmap.chunks(w).rev() {
            out.extend(row.iter().map(|v| {
                if v.is_nan() {
                    0
                } else {
                    (((v - lo) / span) * 255.0).round() as u8
                }
            }));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Serialized size in bytes.
pub fn memory_footprint(tree: &PlrTree) -> usize {
    tree.serialize().len()
}

fn uniform_in(cell: &Cell, rng: &mut ChaCha8Rng) -> Vec<f64> {
    cell.lo
        .iter()
        .zip(&cell.hi)
        .map(|(l, h)| rng.random_range(*l..=*h))
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Largest `|d(p) - d(q)| / |p - q|` over random pairs with finite values.
pub fn estimate_lipschitz<O: DistanceOracle + ?Sized>(
    oracle: &O,
    region: &Cell,
    pairs: usize,
    seed: u64,
) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    for _ in 0..pairs {
        let p = uniform_in(region, &mut rng);
        let q = uniform_in(region, &mut rng);
        let d = dist(&p, &q);
        if d == 0.0 {
            continue;
        }
        let (a, b) = (oracle.evaluate(&p), oracle.evaluate(&q));
        if a.is_finite() && b.is_finite() {
            best = best.max((a - b).abs() / d);
        }
    }
    best
}

/// The worst cell found by [`check_bounds`].
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub point: Vec<f64>,
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundCheck {
    pub kappa: f64,
    pub cells_checked: usize,
    /// Fitted leaves that failed the obstacle-free certificate.
    pub cells_skipped: usize,
    /// Max over checked cells of `max |V - L| / (5/2 k e sqrt(n))`.
    pub worst_ratio: f64,
    pub violations: usize,
    /// Max over checked cells of `max |V(p) - V(q)| / (k e sqrt(n))`.
    pub spread_worst_ratio: f64,
    pub spread_violations: usize,
    pub witness: Option<Witness>,
}

impl BoundCheck {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Draws `pairs` point pairs in every fitted leaf and checks both bounds on
/// the leaves certified obstacle-free: all base points and samples finite,
/// all base points mutually visible, and every sample visible from the
/// center. `e` is the leaf's longest edge.
pub fn check_bounds<O: DistanceOracle + ?Sized>(
    tree: &PlrTree,
    oracle: &O,
    kappa: f64,
    pairs: usize,
    seed: u64,
) -> BoundCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sqrt_n = (tree.dim() as f64).sqrt();
    let mut report = BoundCheck {
        kappa,
        cells_checked: 0,
        cells_skipped: 0,
        worst_ratio: 0.0,
        violations: 0,
        spread_worst_ratio: 0.0,
        spread_violations: 0,
        witness: None,
    };
    for (cell, payload) in tree.leaves() {
        let LeafPayload::Fitted(c) = payload else {
            continue;
        };
        let bases = base_points(&cell);
        let center = cell.center();
        let mut certified = bases.iter().all(|p| oracle.evaluate(p).is_finite())
            && bases
                .iter()
                .enumerate()
                .all(|(i, p)| bases[i + 1..].iter().all(|q| oracle.segment_free(p, q)));
        let mut samples = Vec::with_capacity(pairs);
        if certified {
            for _ in 0..pairs {
                let p = uniform_in(&cell, &mut rng);
                let q = uniform_in(&cell, &mut rng);
                let (vp, vq) = (oracle.evaluate(&p), oracle.evaluate(&q));
                if !vp.is_finite()
                    || !vq.is_finite()
                    || !oracle.segment_free(&center, &p)
                    || !oracle.segment_free(&center, &q)
                {
                    certified = false;
                    break;
                }
                samples.push((p, vp, q, vq));
            }
        }
        if !certified {
            report.cells_skipped += 1;
            continue;
        }
        report.cells_checked += 1;
        let spread_bound = kappa * cell.longest_edge() * sqrt_n;
        let fit_bound = 2.5 * spread_bound;
        let (mut spread, mut err, mut at) = (0.0f64, 0.0f64, center.clone());
        for (p, vp, q, vq) in &samples {
            spread = spread.max((vp - vq).abs());
            for (x, v) in [(p, vp), (q, vq)] {
                let e = (c.eval(x) - v).abs();
                if e > err {
                    err = e;
                    at = x.clone();
                }
            }
        }
        let ratio = |value: f64, bound: f64| {
            if bound > 0.0 {
                value / bound
            } else if value > 0.0 {
                f64::INFINITY
            } else {
                0.0
            }
        };
        let spread_ratio = ratio(spread, spread_bound);
        let fit_ratio = ratio(err, fit_bound);
        if spread > spread_bound + BOUND_SLACK {
            report.spread_violations += 1;
        }
        report.spread_worst_ratio = report.spread_worst_ratio.max(spread_ratio);
        if err > fit_bound + BOUND_SLACK {
            report.violations += 1;
        }
        if report.witness.as_ref().is_none_or(|w| fit_ratio > w.ratio) {
            report.witness = Some(Witness {
                lo: cell.lo.clone(),
                hi: cell.hi.clone(),
                point: at,
                ratio: fit_ratio,
            });
        }
        report.worst_ratio = report.worst_ratio.max(fit_ratio);
    }
    report
}

/// Human-readable one-line summary used by the CLI.
pub fn summary_line(label: &str, report: &ErrorReport, bytes: Option<usize>) -> String {
    let mut s = format!(
        "{label}: max_error={} mean_error={} evaluated={} skipped={}",
        crate::format_sig(report.max_error),
        crate::format_sig(report.mean_error),
        report.evaluated_points,
        report.skipped_points
    );
    if let Some(b) = bytes {
        let _ = write!(s, " bytes={b}");
    }
    s
}
