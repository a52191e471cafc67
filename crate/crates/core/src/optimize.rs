//! Deterministic grid search with shrinking refinement over
//! `(μ, ν, P_μ, P_ν)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channel::{ChannelParams, ProtocolParams};
use crate::constraints::SecurityBudget;
use crate::error::{Error, Result};
use crate::keyrate::{analyze, AnalysisOptions, KeyRateReport};

/// How grid points are placed along an axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    /// Evenly spaced in `ln`; requires a positive lower bound.
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub spacing: Spacing,
}

impl Axis {
    pub fn linear(lo: f64, hi: f64) -> Self {
        Axis {
            lo,
            hi,
            spacing: Spacing::Linear,
        }
    }

    pub fn log(lo: f64, hi: f64) -> Self {
        Axis {
            lo,
            hi,
            spacing: Spacing::Log,
        }
    }

    pub fn point(v: f64) -> Self {
        Axis::linear(v, v)
    }

    fn value_to_unit(self, v: f64) -> f64 {
        match self.spacing {
            Spacing::Linear => v,
            Spacing::Log => v.ln(),
        }
    }

    fn unit_to_value(self, u: f64) -> f64 {
        match self.spacing {
            Spacing::Linear => u,
            Spacing::Log => u.exp(),
        }
    }

    /// `density` points over the window of half-width `half` (in axis
    /// units) around `center`, clipped to `[lo, hi]`.
    fn window(self, center: f64, half: f64, density: usize) -> Vec<f64> {
        let (lo, hi) = (self.value_to_unit(self.lo), self.value_to_unit(self.hi));
        let c = self.value_to_unit(center);
        // Snap window ends that fall within rounding of the range ends.
        let snap = 1e-12 * (hi - lo).abs();
        let a = if c - half <= lo + snap { lo } else { c - half };
        let b = if c + half >= hi - snap { hi } else { c + half };
        if b <= a || density == 1 {
            return vec![self.unit_to_value(a).clamp(self.lo, self.hi)];
        }
        let step = (b - a) / (density - 1) as f64;
        (0..density)
            .map(|i| {
                let u = if i + 1 == density {
                    b
                } else {
                    a + step * i as f64
                };
                // Exact end points survive the round trip through `ln`.
                if u == lo {
                    self.lo
                } else if u == hi {
                    self.hi
                } else {
                    self.unit_to_value(u).clamp(self.lo, self.hi)
                }
            })
            .collect()
    }

    fn full_half_width(self) -> f64 {
        0.5 * (self.value_to_unit(self.hi) - self.value_to_unit(self.lo))
    }

    fn midpoint(self) -> f64 {
        self.unit_to_value(0.5 * (self.value_to_unit(self.hi) + self.value_to_unit(self.lo)))
    }

    fn validate(self, name: &'static str, lo_min: f64, hi_max: f64) -> Result<()> {
        let ok = self.lo.is_finite()
            && self.hi.is_finite()
            && self.lo <= self.hi
            && self.lo >= lo_min
            && self.hi <= hi_max
            && (self.spacing == Spacing::Linear || self.lo > 0.0);
        if ok {
            Ok(())
        } else {
            Err(Error::Domain {
                name,
                value: self.lo,
                expected: "ordered finite range inside the allowed interval",
            })
        }
    }
}

/// Parameter ranges and grid settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SearchSpace {
    pub mu: Axis,
    pub nu: Axis,
    pub p_mu: Axis,
    pub p_nu: Axis,
    pub grid_density: usize,
    pub refinement_rounds: usize,
    /// Number of best coarse-grid points refined independently.
    pub starts: usize,
}

impl Default for SearchSpace {
    /// Intensities log-spaced over `[1e-4, 0.5]`, probabilities linear over
    /// `[0.01, 0.98]`, 7 points per axis, 5 refinement rounds from the 3
    /// best coarse points.
    fn default() -> Self {
        SearchSpace {
            mu: Axis::log(1e-4, 0.5),
            nu: Axis::log(1e-4, 0.5),
            p_mu: Axis::linear(0.01, 0.98),
            p_nu: Axis::linear(0.01, 0.98),
            grid_density: 7,
            refinement_rounds: 5,
            starts: 3,
        }
    }
}

impl SearchSpace {
    /// A space containing only the given point.
    pub fn single(mu: f64, nu: f64, p_mu: f64, p_nu: f64) -> Self {
        SearchSpace {
            mu: Axis::point(mu),
            nu: Axis::point(nu),
            p_mu: Axis::point(p_mu),
            p_nu: Axis::point(p_nu),
            grid_density: 3,
            refinement_rounds: 0,
            starts: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.mu.validate("mu range", 0.0, 0.5)?;
        self.nu.validate("nu range", 0.0, 0.5)?;
        self.p_mu.validate("p_mu range", 0.0, 1.0)?;
        self.p_nu.validate("p_nu range", 0.0, 1.0)?;
        if self.grid_density < 3 {
            return Err(Error::Domain {
                name: "grid_density",
                value: self.grid_density as f64,
                expected: ">= 3",
            });
        }
        if self.starts == 0 {
            return Err(Error::Domain {
                name: "starts",
                value: 0.0,
                expected: ">= 1",
            });
        }
        if self.p_mu.lo + self.p_nu.lo > 1.0 {
            return Err(Error::EmptyFeasibleRegion);
        }
        Ok(())
    }

    fn axes(&self) -> [Axis; 4] {
        [self.mu, self.nu, self.p_mu, self.p_nu]
    }
}

/// Problem data shared by every grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizeTask<'a> {
    pub channel: &'a ChannelParams,
    pub slices: usize,
    pub n_tot: u64,
    pub budget: &'a SecurityBudget,
    pub space: &'a SearchSpace,
    pub options: &'a AnalysisOptions,
}

/// Best point found and its report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Optimized {
    pub protocol: ProtocolParams,
    pub report: KeyRateReport,
    /// Grid points analyzed, infeasible ones excluded.
    pub evaluations: usize,
}

type Point = [f64; 4];

fn protocol_at(task: &OptimizeTask, p: Point) -> Option<ProtocolParams> {
    if p[2] + p[3] > 1.0 {
        return None;
    }
    ProtocolParams::new(p[0], p[1], p[2], p[3], task.slices, task.n_tot).ok()
}

/// Evaluates `points` in parallel; infeasible points give `None`.
fn evaluate(
    task: &OptimizeTask,
    distance_km: f64,
    points: &[Point],
) -> Result<Vec<Option<KeyRateReport>>> {
    points
        .par_iter()
        .map(|&p| {
            protocol_at(task, p)
                .map(|protocol| {
                    analyze(
                        &protocol,
                        task.channel,
                        distance_km,
                        task.budget,
                        task.options,
                    )
                })
                .transpose()
        })
        .collect()
}

/// Replaces `incumbent` by the first report, in order, that beats it.
fn absorb(incumbent: &mut KeyRateReport, reports: Vec<Option<KeyRateReport>>) -> usize {
    let mut evaluated = 0;
    for r in reports.into_iter().flatten() {
        evaluated += 1;
        if r.key_length > incumbent.key_length {
            *incumbent = r;
        }
    }
    evaluated
}

fn grid(axes: [Axis; 4], center: Point, half: [f64; 4], density: usize) -> Vec<Point> {
    let w: Vec<Vec<f64>> = (0..4)
        .map(|k| axes[k].window(center[k], half[k], density))
        .collect();
    let mut out = Vec::with_capacity(w.iter().map(Vec::len).product());
    for &a in &w[0] {
        for &b in &w[1] {
            for &c in &w[2] {
                for &d in &w[3] {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

/// Maximizes the key length at one distance.
pub fn optimize_point(task: &OptimizeTask, distance_km: f64) -> Result<Optimized> {
    optimize_point_from(task, distance_km, None)
}

/// [`optimize_point`] with an extra candidate appended to the coarse scan.
/// The candidate only wins if strictly better than every grid point.
///
/// The `starts` best coarse points (ties in scan order) are refined
/// independently; the best refined point wins, ties going to the earlier
/// start.
pub fn optimize_point_from(
    task: &OptimizeTask,
    distance_km: f64,
    warm: Option<&ProtocolParams>,
) -> Result<Optimized> {
    task.space.validate()?;
    let axes = task.space.axes();
    let density = task.space.grid_density;
    let mid = axes.map(Axis::midpoint);
    let full_half = axes.map(Axis::full_half_width);

    let mut points = grid(axes, mid, full_half, density);
    if let Some(w) = warm {
        let p = [w.mu.value(), w.nu.value(), w.p_mu, w.p_nu];
        if (0..4).all(|k| p[k] >= axes[k].lo && p[k] <= axes[k].hi) {
            points.push(p);
        }
    }
    let mut coarse: Vec<KeyRateReport> = evaluate(task, distance_km, &points)?
        .into_iter()
        .flatten()
        .collect();
    if coarse.is_empty() {
        return Err(Error::EmptyFeasibleRegion);
    }
    let mut evaluations = coarse.len();
    // Stable sort keeps scan order among equal key lengths.
    coarse.sort_by(|a, b| b.key_length.total_cmp(&a.key_length));
    coarse.truncate(task.space.starts);

    let mut best: Option<KeyRateReport> = None;
    for mut incumbent in coarse {
        let mut half = full_half;
        for _ in 0..task.space.refinement_rounds {
            for h in &mut half {
                *h *= 0.5;
            }
            let p = &incumbent.protocol;
            let center = [p.mu.value(), p.nu.value(), p.p_mu, p.p_nu];
            let reports = evaluate(task, distance_km, &grid(axes, center, half, density))?;
            evaluations += absorb(&mut incumbent, reports);
        }
        if best
            .as_ref()
            .is_none_or(|b| incumbent.key_length > b.key_length)
        {
            best = Some(incumbent);
        }
    }
    let report = best.expect("at least one start");
    Ok(Optimized {
        protocol: report.protocol,
        report,
        evaluations,
    })
}

/// Optimizes each distance in turn. With `warm_start` the previous
/// distance's optimum is offered as an extra candidate.
pub fn sweep(task: &OptimizeTask, distances: &[f64], warm_start: bool) -> Result<Vec<Optimized>> {
    if let Some(w) = distances
        .windows(2)
        .find(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater))
    {
        return Err(Error::Domain {
            name: "distances",
            value: w[1],
            expected: "strictly increasing",
        });
    }
    let mut out: Vec<Optimized> = Vec::with_capacity(distances.len());
    for &d in distances {
        let warm = if warm_start {
            out.last().map(|o| o.protocol)
        } else {
            None
        };
        out.push(optimize_point_from(task, d, warm.as_ref())?);
    }
    Ok(out)
}
