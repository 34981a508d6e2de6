//! Reference-free refinement by descent on distortion, overlap and a
//! boundary axis-alignment penalty.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use uvkit_core::geom::Vec2;
use uvkit_core::losses::{boundary_edges, distortion_loss, overlap_terms};
use uvkit_core::param::UvChart;
use uvkit_core::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectWeights {
    pub distortion: f64,
    pub overlap: f64,
    pub boundary: f64,
}

impl Default for DirectWeights {
    fn default() -> Self {
        DirectWeights {
            distortion: 1.0,
            overlap: 1.0,
            boundary: 0.1,
        }
    }
}

impl DirectWeights {
    pub fn validate(&self) -> Result<()> {
        for w in [self.distortion, self.overlap, self.boundary] {
            if !(w >= 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "direct refinement weights must be finite and ≥ 0, got {w}"
                )));
            }
        }
        Ok(())
    }

    fn is_null(&self) -> bool {
        self.distortion == 0.0 && self.overlap == 0.0 && self.boundary == 0.0
    }
}

/// Consecutive rejected trials before giving up.
pub const PATIENCE: usize = 50;
/// Hinge margin as a fraction of the mean face area.
const MARGIN_FRACTION: f64 = 1e-2;

#[derive(Clone, Debug)]
pub struct DirectOutcome {
    pub uv: UvChart,
    pub initial_loss: f64,
    /// Loss after every accepted step.
    pub history: Vec<f64>,
    pub accepted: usize,
    /// Stopped after [`PATIENCE`] rejected steps in a row.
    pub stalled: bool,
}

/// `sin²(2θ)` per boundary edge, averaged: zero for edges at multiples of
/// 90°.
pub fn boundary_axis_penalty(edges: &[(usize, usize)], uv: &[Vec2]) -> (f64, Vec<Vec2>) {
    let mut grad = vec![[0.0; 2]; uv.len()];
    if edges.is_empty() {
        return (0.0, grad);
    }
    let w = 1.0 / edges.len() as f64;
    let mut total = 0.0;
    for &(a, b) in edges {
        let dx = uv[b][0] - uv[a][0];
        let dy = uv[b][1] - uv[a][1];
        let l2 = dx * dx + dy * dy;
        if !(l2 > 0.0) {
            continue;
        }
        let th = dy.atan2(dx);
        total += w * (2.0 * th).sin().powi(2);
        // d sin²(2θ)/dθ = 2 sin(4θ), dθ/d(dx, dy) = (−dy, dx)/l²
        let dth = w * 2.0 * (4.0 * th).sin();
        let gx = -dth * dy / l2;
        let gy = dth * dx / l2;
        grad[b][0] += gx;
        grad[b][1] += gy;
        grad[a][0] -= gx;
        grad[a][1] -= gy;
    }
    (total, grad)
}

struct Objective<'a> {
    uv: &'a UvChart,
    weights: DirectWeights,
    edges: Vec<(usize, usize)>,
    margin: f64,
    reference_area: f64,
}

struct Eval {
    loss: f64,
    flips: usize,
    grad: Vec<Vec2>,
}

impl Objective<'_> {
    fn eval(&self, q: &[Vec2]) -> Result<Eval> {
        let chart = &self.uv.chart;
        let n = q.len();
        let mut grad = vec![[0.0; 2]; n];
        let mut loss = 0.0;
        let mut add = |w: f64, value: f64, g: &[Vec2]| {
            if w == 0.0 {
                return;
            }
            loss += w * value;
            for (acc, x) in grad.iter_mut().zip(g) {
                acc[0] += w * x[0];
                acc[1] += w * x[1];
            }
        };
        let (d, gd) = distortion_loss(chart, q)?;
        add(self.weights.distortion, d, &gd);
        let ov = overlap_terms(chart, q, self.margin, self.reference_area)?;
        add(self.weights.overlap, ov.soft, &ov.grad);
        let (b, gb) = boundary_axis_penalty(&self.edges, q);
        add(self.weights.boundary, b, &gb);
        Ok(Eval {
            loss,
            flips: ov.count,
            grad,
        })
    }
}

/// Limited-memory quasi-Newton pairs kept by [`direct_refine`].
const MEMORY: usize = 8;
/// Rejected trials in a row after which the curvature memory is dropped.
const RESET_AFTER: usize = 10;

fn dot(a: &[Vec2], b: &[Vec2]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x[0] * y[0] + x[1] * y[1]).sum()
}

/// Two-loop recursion: approximate inverse Hessian applied to `-grad`.
fn lbfgs_direction(grad: &[Vec2], memory: &VecDeque<(Vec<Vec2>, Vec<Vec2>)>) -> Vec<Vec2> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y) in memory.iter().rev() {
        let a = dot(s, &q) / dot(y, s);
        for (qi, yi) in q.iter_mut().zip(y) {
            qi[0] -= a * yi[0];
            qi[1] -= a * yi[1];
        }
        alphas.push(a);
    }
    if let Some((s, y)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        for qi in &mut q {
            qi[0] *= gamma;
            qi[1] *= gamma;
        }
    }
    for ((s, y), a) in memory.iter().zip(alphas.into_iter().rev()) {
        let b = dot(y, &q) / dot(y, s);
        for (qi, si) in q.iter_mut().zip(s) {
            qi[0] += (a - b) * si[0];
            qi[1] += (a - b) * si[1];
        }
    }
    q.iter().map(|d| [-d[0], -d[1]]).collect()
}

/// Quasi-Newton descent on `uv` with backtracking. A trial is accepted only
/// if it lowers the objective without adding flipped faces; each accepted
/// trial is one step. Without curvature memory the direction is the
/// gradient scaled so the fastest vertex moves a trust length that grows
/// after acceptance and halves after rejection.
pub fn direct_refine(uv: &UvChart, weights: DirectWeights, steps: usize) -> Result<DirectOutcome> {
    weights.validate()?;
    let faces = uv.chart.face_count().max(1);
    let reference_area: f64 = uv.signed_areas().iter().map(|a| a.abs()).sum();
    if !(reference_area > 0.0) {
        return Err(Error::Degenerate("uv layout has zero area".into()));
    }
    let obj = Objective {
        uv,
        weights,
        edges: boundary_edges(uv),
        margin: MARGIN_FRACTION * reference_area / faces as f64,
        reference_area,
    };
    let mut cur_uv = uv.uv.clone();
    let mut cur = obj.eval(&cur_uv)?;
    let initial_loss = cur.loss;
    let mut out = DirectOutcome {
        uv: uv.clone(),
        initial_loss,
        history: Vec::with_capacity(steps),
        accepted: 0,
        stalled: false,
    };
    if weights.is_null() {
        return Ok(out);
    }

    let extent = {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for p in &cur_uv {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (hi[0] - lo[0]).max(hi[1] - lo[1])
    };
    // no single trial moves a vertex further than this
    let max_move = 0.1 * extent;
    let mut trust = 1e-2 * extent;
    let mut memory: VecDeque<(Vec<Vec2>, Vec<Vec2>)> = VecDeque::with_capacity(MEMORY);
    let mut rejected = 0;
    'outer: for _ in 0..steps {
        let gmax = cur.grad.iter().flatten().fold(0.0f64, |m, g| m.max(g.abs()));
        if !(gmax > 0.0) {
            break;
        }
        let mut dir = lbfgs_direction(&cur.grad, &memory);
        if memory.is_empty() || !(dot(&dir, &cur.grad) < 0.0) {
            memory.clear();
            dir = cur.grad.iter().map(|g| [-g[0] / gmax, -g[1] / gmax]).collect();
        }
        let dmax = dir.iter().flatten().fold(0.0f64, |m, d| m.max(d.abs()));
        let mut t = if memory.is_empty() { trust } else { 1.0f64.min(max_move / dmax) };
        loop {
            let trial: Vec<Vec2> = cur_uv
                .iter()
                .zip(&dir)
                .map(|(p, d)| [p[0] + t * d[0], p[1] + t * d[1]])
                .collect();
            let next = obj.eval(&trial)?;
            if next.loss < cur.loss && next.flips <= cur.flips {
                let s: Vec<Vec2> = trial.iter().zip(&cur_uv).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
                let y: Vec<Vec2> = next.grad.iter().zip(&cur.grad).map(|(a, b)| [a[0] - b[0], a[1] - b[1]]).collect();
                // keep only pairs with positive curvature
                if dot(&s, &y) > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
                    if memory.len() == MEMORY {
                        memory.pop_front();
                    }
                    memory.push_back((s, y));
                }
                if memory.is_empty() {
                    trust = (1.2 * t).min(max_move);
                }
                cur_uv = trial;
                cur = next;
                out.accepted += 1;
                rejected = 0;
                break;
            }
            rejected += 1;
            t *= 0.5;
            if memory.is_empty() {
                trust = t;
            }
            if rejected >= PATIENCE {
                log::warn!("direct refinement stalled after {PATIENCE} rejected steps; keeping best");
                out.stalled = true;
                break 'outer;
            }
            if rejected % RESET_AFTER == 0 && !memory.is_empty() {
                memory.clear();
                continue 'outer;
            }
        }
        out.history.push(cur.loss);
    }
    out.uv = uv.with_uv(cur_uv);
    Ok(out)
}
