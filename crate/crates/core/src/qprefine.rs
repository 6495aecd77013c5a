//! Quadratic-program refinement of connection sites.
//!
//! Variables are the site coordinates. The goal is
//!
//! ```text
//! Σ_i (lx_i − cx_i)² + (ly_i − cy_i)²  +  w · Σ_j (d_j − D)²
//! d_j = (s·lx_{j+1} − ly_{j+1} − s·lx_j + ly_j) / √(k² + 1)
//! ```
//!
//! over adjacent leaders of one band whose diagonals start in order, with `s = +k` for up bands and `−k`
//! for down bands. `d_j` is linear in the sites, so it is substituted into
//! the goal rather than kept as a variable. Hard constraints:
//!
//! - each site stays inside its free rectangle;
//! - sites keep `d_lc` from the band separator lines;
//! - up sites stay below their port, down sites above it;
//! - every bend stays left of the port line;
//! - `d_j ≥ ε`, or `d_j` no lower than its start when that is smaller;
//! - pairs whose diagonals start inverted keep their vertical clearance,
//!   and other pairs of the band keep a positive separation wherever the
//!   adjacent chain cannot imply it.
//!
//! Bounds are widened where needed so the routed start point is feasible.
//! No constraint couples two bands, so each band is solved on its own.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::leaderlayout::{FreeRect, LeaderError, LeaderPlan, Orientation};
use crate::planar::Point2;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QpError {
    #[error("quadratic program did not converge within {} iterations", .0.iterations)]
    NotConverged(Box<QpSolution>),
    #[error(transparent)]
    Leader(#[from] LeaderError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QpParams {
    /// Weight of the separation goal.
    pub w: f64,
    /// Target separation; the largest initial separation when unset.
    pub target_separation: Option<f64>,
    /// Clearance of sites from band separator lines.
    pub d_lc: f64,
    /// Smallest separation kept between adjacent diagonals.
    pub epsilon: f64,
}

impl Default for QpParams {
    fn default() -> Self {
        Self {
            w: 1.0,
            target_separation: None,
            d_lc: 0.0,
            epsilon: 1e-9,
        }
    }
}

/// Signed distance between the slope-`k` lines through `a` and `b`;
/// positive when `a`'s line lies above `b`'s.
pub fn separation(a: Point2, b: Point2, k: f64) -> f64 {
    (k * b.x - b.y - k * a.x + a.y) / (k * k + 1.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Sparse row `Σ coeffs · z (+ constant)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearRow {
    pub coeffs: Vec<(usize, f64)>,
    pub constant: f64,
}

impl LinearRow {
    fn eval(&self, z: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(i, c)| c * z[i]).sum::<f64>() + self.constant
    }
}

/// One band's subproblem: minimise `½ zᵀHz + gᵀz + constant` subject to
/// `lower ≤ z ≤ upper` and `row(z) ≤ 0` for every row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpBlock {
    pub band: usize,
    /// (port index, axis) of each variable.
    pub vars: Vec<(usize, Axis)>,
    pub hessian: Vec<Vec<f64>>,
    pub linear: Vec<f64>,
    pub constant: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<LinearRow>,
    pub start: Vec<f64>,
    /// `d_j` as a function of `z`, for each adjacent pair of the band.
    pub separations: Vec<LinearRow>,
    /// Whether each adjacent pair enters the spacing goal; pairs whose
    /// diagonals start inverted are kept apart by height instead.
    pub spaced: Vec<bool>,
    pub weight: f64,
    pub target: f64,
}

impl QpBlock {
    /// Goal value, summed term by term rather than through the expanded form.
    pub fn objective(&self, z: &[f64]) -> f64 {
        let centre: f64 = z
            .iter()
            .zip(&self.start)
            .map(|(a, c)| (a - c) * (a - c))
            .sum();
        let sep: f64 = self
            .separations
            .iter()
            .zip(&self.spaced)
            .filter(|(_, &on)| on)
            .map(|(r, _)| (r.eval(z) - self.target).powi(2))
            .sum();
        centre + self.weight * sep
    }

    /// `½ zᵀHz + gᵀz + constant`; equals [`QpBlock::objective`] up to rounding.
    pub fn quadratic_form(&self, z: &[f64]) -> f64 {
        let n = z.len();
        let mut v = self.constant;
        for i in 0..n {
            v += self.linear[i] * z[i];
            for j in 0..n {
                v += 0.5 * z[i] * self.hessian[i][j] * z[j];
            }
        }
        v
    }

    pub fn is_feasible(&self, z: &[f64], tol: f64) -> bool {
        z.iter()
            .enumerate()
            .all(|(i, &v)| v >= self.lower[i] - tol && v <= self.upper[i] + tol)
            && self.rows.iter().all(|r| r.eval(z) <= tol)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpProblem {
    pub k: f64,
    pub w: f64,
    pub target_separation: f64,
    /// Initial sites in port order.
    pub initial: Vec<Point2>,
    pub blocks: Vec<QpBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    /// Refined sites in port order.
    pub sites: Vec<Point2>,
    /// Separation of each adjacent same-band pair, top to bottom.
    pub separations: Vec<f64>,
    pub objective: f64,
    pub initial_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Separation goal the problem was built with.
    pub target_separation: f64,
}

/// Sets up the refinement problem for `plan` with per-leader free rectangles.
pub fn build_qp(plan: &LeaderPlan, rects: &[FreeRect], params: &QpParams) -> QpProblem {
    let k = plan.k;
    let norm = (k * k + 1.0).sqrt();
    let initial = plan.sites();
    let mut target = 0.0f64;
    for b in &plan.bands {
        let s = b.orientation.slope(k);
        for j in b.start..b.end.saturating_sub(1) {
            target = target.max(separation(initial[j], initial[j + 1], s));
        }
    }
    let target = params.target_separation.unwrap_or(target);

    let blocks = plan
        .bands
        .iter()
        .enumerate()
        .map(|(bi, band)| {
            let s = band.orientation.slope(k);
            // variable slots per site, None when collapsed
            let mut slot = vec![None; band.len()];
            let mut vars = Vec::new();
            for (o, i) in (band.start..band.end).enumerate() {
                if !rects[i].collapsed {
                    slot[o] = Some(vars.len());
                    vars.push((i, Axis::X));
                    vars.push((i, Axis::Y));
                }
            }
            let nv = vars.len();
            let start: Vec<f64> = vars
                .iter()
                .map(|&(i, a)| match a {
                    Axis::X => initial[i].x,
                    Axis::Y => initial[i].y,
                })
                .collect();

            let mut lower = vec![0.0; nv];
            let mut upper = vec![0.0; nv];
            let mut rows = Vec::new();
            let line_above = bi.checked_sub(1).map(|u| plan.band_lines[u].y);
            let line_below = plan.band_lines.get(bi).map(|l| l.y);
            for (o, i) in (band.start..band.end).enumerate() {
                let Some(v) = slot[o] else { continue };
                let r = rects[i].rect;
                let c = initial[i];
                let p = plan.ports.port_y(i);
                let (mut ylo, mut yhi) = (r.min_y, r.max_y);
                if let Some(y) = line_above {
                    yhi = yhi.min(y - params.d_lc);
                }
                if let Some(y) = line_below {
                    ylo = ylo.max(y + params.d_lc);
                }
                match band.orientation {
                    Orientation::Up => yhi = yhi.min(p),
                    Orientation::Down => ylo = ylo.max(p),
                }
                lower[v] = r.min_x.min(c.x);
                upper[v] = r.max_x.max(c.x);
                lower[v + 1] = ylo.min(c.y);
                upper[v + 1] = yhi.max(c.y);
                // bend stays left of the port line
                let dy = match band.orientation {
                    Orientation::Up => -1.0 / k,
                    Orientation::Down => 1.0 / k,
                };
                rows.push(LinearRow {
                    coeffs: vec![(v, 1.0), (v + 1, dy)],
                    constant: -plan.ports.x - dy * p,
                });
            }

            // d(i, j) as a row over the free sites of the band
            let pair_row = |i: usize, j: usize| {
                let mut row = LinearRow {
                    coeffs: Vec::new(),
                    constant: 0.0,
                };
                for (site, sx, sy) in [(i, -s, 1.0), (j, s, -1.0)] {
                    match slot[site - band.start] {
                        Some(v) => {
                            row.coeffs.push((v, sx / norm));
                            row.coeffs.push((v + 1, sy / norm));
                        }
                        None => {
                            row.constant += (sx * initial[site].x + sy * initial[site].y) / norm
                        }
                    }
                }
                row
            };
            let keep_positive = |row: &LinearRow, rows: &mut Vec<LinearRow>| {
                if !row.coeffs.is_empty() {
                    let eps = params.epsilon.min(row.eval(&start));
                    rows.push(LinearRow {
                        coeffs: row.coeffs.iter().map(|&(v, c)| (v, -c)).collect(),
                        constant: eps - row.constant,
                    });
                }
            };

            let mut separations = Vec::new();
            for i in band.start..band.end.saturating_sub(1) {
                let row = pair_row(i, i + 1);
                keep_positive(&row, &mut rows);
                separations.push(row);
            }

            // Inverted diagonals stay disjoint only by height: the upper
            // site stays above the lower port (up) or the lower site below
            // the upper port (down). Ordered pairs whose chain of adjacent
            // separations has a non-positive link get their own row.
            let d0: Vec<f64> = (band.start..band.end.saturating_sub(1))
                .map(|i| separation(initial[i], initial[i + 1], s))
                .collect();
            for i in band.start..band.end {
                for j in i + 2..band.end {
                    let sep0 = separation(initial[i], initial[j], s);
                    if sep0 <= 0.0 {
                        continue;
                    }
                    if d0[i - band.start..j - band.start].iter().any(|&d| d <= 0.0) {
                        keep_positive(&pair_row(i, j), &mut rows);
                    }
                }
                for j in i + 1..band.end {
                    if separation(initial[i], initial[j], s) > 0.0 {
                        continue;
                    }
                    let margin = params.epsilon;
                    match band.orientation {
                        Orientation::Up => {
                            if let Some(v) = slot[i - band.start] {
                                let y = plan.ports.port_y(j) + margin;
                                lower[v + 1] = lower[v + 1].max(y.min(initial[i].y));
                            }
                        }
                        Orientation::Down => {
                            if let Some(v) = slot[j - band.start] {
                                let y = plan.ports.port_y(i) - margin;
                                upper[v + 1] = upper[v + 1].min(y.max(initial[j].y));
                            }
                        }
                    }
                }
            }

            // H = 2(I + w·Σ a aᵀ), g = −2c + 2w·Σ (a0 − D) a
            let mut hessian = vec![vec![0.0; nv]; nv];
            let mut linear = vec![0.0; nv];
            let mut constant = 0.0;
            for v in 0..nv {
                hessian[v][v] = 2.0;
                linear[v] = -2.0 * start[v];
                constant += start[v] * start[v];
            }
            let spaced: Vec<bool> = d0.iter().map(|&d| d > 0.0).collect();
            for row in separations
                .iter()
                .zip(&spaced)
                .filter(|(_, &on)| on)
                .map(|(r, _)| r)
            {
                let r0 = row.constant - target;
                for &(a, ca) in &row.coeffs {
                    linear[a] += 2.0 * params.w * r0 * ca;
                    for &(b, cb) in &row.coeffs {
                        hessian[a][b] += 2.0 * params.w * ca * cb;
                    }
                }
                constant += params.w * r0 * r0;
            }

            QpBlock {
                band: bi,
                vars,
                hessian,
                linear,
                constant,
                lower,
                upper,
                rows,
                start,
                separations,
                spaced,
                weight: params.w,
                target,
            }
        })
        .collect();

    QpProblem {
        k,
        w: params.w,
        target_separation: target,
        initial,
        blocks,
    }
}

/// Result of the active-set iteration on one block.
struct BlockResult {
    z: Vec<f64>,
    iterations: usize,
    converged: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum BoundState {
    Free,
    Lower,
    Upper,
}

const STEP_TOL: f64 = 1e-12;
const MULTIPLIER_TOL: f64 = 1e-10;

/// Primal active-set method from a feasible start. Bounds in the working
/// set fix their variable; active rows enter the equality-constrained step
/// through a KKT system.
fn solve_block(b: &QpBlock) -> BlockResult {
    let n = b.start.len();
    let m = b.rows.len();
    let mut z = b.start.clone();
    let mut bound = vec![BoundState::Free; n];
    for i in 0..n {
        if z[i] <= b.lower[i] {
            bound[i] = BoundState::Lower;
        } else if z[i] >= b.upper[i] {
            bound[i] = BoundState::Upper;
        }
    }
    let mut working: Vec<usize> = Vec::new();
    let mut in_working = vec![false; m];
    let h = DMatrix::from_fn(n, n, |i, j| b.hessian[i][j]);
    let g = DVector::from_column_slice(&b.linear);
    let cap = 50 * (n + m).max(1);

    for iter in 0..cap {
        let grad = &h * DVector::from_column_slice(&z) + &g;
        let free: Vec<usize> = (0..n).filter(|&i| bound[i] == BoundState::Free).collect();
        let mut pos = vec![usize::MAX; n];
        for (fi, &i) in free.iter().enumerate() {
            pos[i] = fi;
        }
        let nf = free.len();
        let mw = working.len();
        let dim = nf + mw;
        let mut kkt = DMatrix::zeros(dim, dim);
        let mut rhs = DVector::zeros(dim);
        for (a, &i) in free.iter().enumerate() {
            for (c, &j) in free.iter().enumerate() {
                kkt[(a, c)] = h[(i, j)];
            }
            rhs[a] = -grad[i];
        }
        for (r, &row) in working.iter().enumerate() {
            for &(v, c) in &b.rows[row].coeffs {
                if pos[v] != usize::MAX {
                    kkt[(nf + r, pos[v])] = c;
                    kkt[(pos[v], nf + r)] = c;
                }
            }
        }
        let sol = if dim == 0 {
            DVector::zeros(0)
        } else {
            match kkt.clone().lu().solve(&rhs) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => kkt
                    .svd(true, true)
                    .solve(&rhs, 1e-12)
                    .unwrap_or_else(|_| DVector::zeros(dim)),
            }
        };
        let mut p = vec![0.0; n];
        for (a, &i) in free.iter().enumerate() {
            p[i] = sol[a];
        }
        let step_norm = p.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));

        if step_norm <= STEP_TOL {
            // Multipliers: rows from the KKT solve, bounds from stationarity.
            let lambda: Vec<f64> = (0..mw).map(|r| sol[nf + r]).collect();
            let mut resid = grad.clone();
            for (r, &row) in working.iter().enumerate() {
                for &(v, c) in &b.rows[row].coeffs {
                    resid[v] += lambda[r] * c;
                }
            }
            let mut worst: Option<(f64, Result<usize, usize>)> = None;
            let mut consider = |mu: f64, who: Result<usize, usize>| {
                if mu < -MULTIPLIER_TOL && worst.map_or(true, |(w, _)| mu < w) {
                    worst = Some((mu, who));
                }
            };
            for i in 0..n {
                match bound[i] {
                    BoundState::Lower => consider(resid[i], Ok(i)),
                    BoundState::Upper => consider(-resid[i], Ok(i)),
                    BoundState::Free => {}
                }
            }
            for (r, &row) in working.iter().enumerate() {
                consider(lambda[r], Err(row));
            }
            match worst {
                None => {
                    return BlockResult {
                        z,
                        iterations: iter,
                        converged: true,
                    }
                }
                Some((_, Ok(i))) => bound[i] = BoundState::Free,
                Some((_, Err(row))) => {
                    working.retain(|&r| r != row);
                    in_working[row] = false;
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking: Option<Result<(usize, BoundState), usize>> = None;
        for &i in &free {
            let (limit, side) = if p[i] < 0.0 {
                ((b.lower[i] - z[i]) / p[i], BoundState::Lower)
            } else if p[i] > 0.0 {
                ((b.upper[i] - z[i]) / p[i], BoundState::Upper)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            if limit < alpha {
                alpha = limit;
                blocking = Some(Ok((i, side)));
            }
        }
        for (r, row) in b.rows.iter().enumerate() {
            if in_working[r] {
                continue;
            }
            let ap: f64 = row.coeffs.iter().map(|&(v, c)| c * p[v]).sum();
            if ap > STEP_TOL {
                let limit = (-row.eval(&z) / ap).max(0.0);
                if limit < alpha {
                    alpha = limit;
                    blocking = Some(Err(r));
                }
            }
        }
        for i in 0..n {
            z[i] += alpha * p[i];
        }
        match blocking {
            Some(Ok((i, side))) => {
                z[i] = if side == BoundState::Lower {
                    b.lower[i]
                } else {
                    b.upper[i]
                };
                bound[i] = side;
            }
            Some(Err(r)) => {
                working.push(r);
                in_working[r] = true;
            }
            None => {}
        }
        for i in 0..n {
            z[i] = z[i].clamp(b.lower[i], b.upper[i]);
        }
    }
    BlockResult {
        z,
        iterations: cap,
        converged: false,
    }
}

/// Solves every band block. On hitting the iteration cap the best feasible
/// iterate is returned inside [`QpError::NotConverged`].
pub fn solve_qp(problem: &QpProblem) -> Result<QpSolution, QpError> {
    let mut sites = problem.initial.clone();
    let mut separations = Vec::new();
    let mut objective = 0.0;
    let mut initial_objective = 0.0;
    let mut iterations = 0;
    let mut converged = true;
    for block in &problem.blocks {
        let r = solve_block(block);
        for (&(i, axis), &v) in block.vars.iter().zip(&r.z) {
            match axis {
                Axis::X => sites[i].x = v,
                Axis::Y => sites[i].y = v,
            }
        }
        separations.extend(block.separations.iter().map(|s| s.eval(&r.z)));
        objective += block.objective(&r.z);
        initial_objective += block.objective(&block.start);
        iterations += r.iterations;
        converged &= r.converged;
    }
    let solution = QpSolution {
        sites,
        separations,
        objective,
        initial_objective,
        iterations,
        converged,
        target_separation: problem.target_separation,
    };
    if converged {
        Ok(solution)
    } else {
        Err(QpError::NotConverged(Box::new(solution)))
    }
}

/// Builds and solves the refinement, then re-routes the leaders from the
/// refined sites. An unconverged solve still yields its feasible iterate.
pub fn refine(
    plan: &LeaderPlan,
    rects: &[FreeRect],
    params: &QpParams,
) -> Result<(LeaderPlan, QpSolution), QpError> {
    let problem = build_qp(plan, rects, params);
    let solution = match solve_qp(&problem) {
        Ok(s) => s,
        Err(QpError::NotConverged(s)) => *s,
        Err(e) => return Err(e),
    };
    let refined = plan.with_sites(&solution.sites)?;
    Ok((refined, solution))
}
