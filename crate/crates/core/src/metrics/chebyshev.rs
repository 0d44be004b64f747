//! Chebyshev centers of `{x : A x <= b, ‖x‖∞ <= R}` by linear programming.
//!
//! With rows normalized to unit length the center solves
//!
//! ```text
//! maximize r  subject to  ⟨âᵢ, x⟩ + r <= b̂ᵢ,  −R <= xⱼ <= R,  r >= 0.
//! ```
//!
//! The free variable `x` is shifted to `y = x + R ≥ 0` and the program is
//! handed to a dense two-phase simplex.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{check_len, distance, norm, DenseMatrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChebyshevResult {
    pub center: Vec<f64>,
    pub radius: f64,
    pub box_bound: f64,
}

/// Center and radius of the largest ball inside `A x <= b` whose center lies
/// in the box `‖x‖∞ <= box_bound`.
pub fn chebyshev_center(rows: &DenseMatrix, rhs: &[f64], box_bound: f64) -> Result<ChebyshevResult> {
    let (m, n) = rows.shape();
    check_len("right-hand side", m, rhs.len())?;
    if !(box_bound > 0.0 && box_bound.is_finite()) {
        return Err(Error::Config(format!("box bound must be positive, got {box_bound}")));
    }
    let r = box_bound;
    let vars = n + 1;
    let mut g = DenseMatrix::zeros(m + n, vars);
    let mut h = vec![0.0; m + n];
    for i in 0..m {
        let a = rows.row(i);
        let len = norm(a);
        if len == 0.0 {
            return Err(Error::ZeroRow { row: i });
        }
        let dst = g.row_mut(i);
        let mut shift = 0.0;
        for (d, v) in dst.iter_mut().zip(a) {
            *d = v / len;
            shift += v / len;
        }
        dst[n] = 1.0;
        h[i] = rhs[i] / len + r * shift;
    }
    for j in 0..n {
        g.set(m + j, j, 1.0);
        h[m + j] = 2.0 * r;
    }
    let mut c = vec![0.0; vars];
    c[n] = 1.0;
    let z = simplex_max(&g, &h, &c)?;
    Ok(ChebyshevResult {
        center: z[..n].iter().map(|y| y - r).collect(),
        radius: z[n].max(0.0),
        box_bound,
    })
}

/// `‖x − center‖₂`.
pub fn chebyshev_error(x: &[f64], result: &ChebyshevResult) -> f64 {
    distance(x, &result.center)
}

const PIVOT_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;
const STALL_LIMIT: usize = 64;

struct Tableau {
    width: usize,
    /// Constraint rows followed by the objective row; the last column is the
    /// right-hand side.
    cells: Vec<f64>,
    rows: usize,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.cells[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn objective(&self) -> usize {
        self.rows
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let w = self.width;
        let p = self.at(pr, pc);
        for v in &mut self.cells[pr * w..(pr + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.cells[pr * w..(pr + 1) * w].to_vec();
        for r in 0..=self.rows {
            if r == pr {
                continue;
            }
            let f = self.at(r, pc);
            if f == 0.0 {
                continue;
            }
            for (v, pv) in self.cells[r * w..(r + 1) * w].iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
        self.basis[pr] = pc;
    }

    /// Dantzig pricing over columns `< allowed`, switching to Bland's rule
    /// while the objective stalls on degenerate pivots.
    fn optimize(&mut self, allowed: usize) -> Result<()> {
        let obj = self.objective();
        let mut stalled = 0usize;
        for _ in 0..MAX_PIVOTS {
            let bland = stalled >= STALL_LIMIT;
            let entering = if bland {
                (0..allowed).find(|&c| self.at(obj, c) < -PIVOT_EPS)
            } else {
                (0..allowed)
                    .filter(|&c| self.at(obj, c) < -PIVOT_EPS)
                    .min_by(|&a, &b| self.at(obj, a).total_cmp(&self.at(obj, b)))
            };
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, pc);
                if a <= PIVOT_EPS {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                best = match best {
                    Some((br, bv))
                        if bv < ratio - 1e-12 || ((bv - ratio).abs() <= 1e-12 && self.basis[br] < self.basis[r]) =>
                    {
                        Some((br, bv))
                    }
                    _ => Some((r, ratio)),
                };
            }
            let (pr, step) = best.ok_or(Error::Unbounded)?;
            if step > 1e-12 {
                stalled = 0;
            } else {
                stalled += 1;
            }
            self.pivot(pr, pc);
        }
        Err(Error::PivotLimit { pivots: MAX_PIVOTS })
    }

    fn drop_row(&mut self, r: usize) {
        let w = self.width;
        self.cells.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }
}

/// Maximizes `cᵀz` subject to `G z <= h`, `z >= 0`.
pub(crate) fn simplex_max(g: &DenseMatrix, h: &[f64], c: &[f64]) -> Result<Vec<f64>> {
    let (p, q) = g.shape();
    check_len("objective", q, c.len())?;
    check_len("constraint bounds", p, h.len())?;
    let artificial: Vec<usize> = (0..p).filter(|&i| h[i] < 0.0).collect();
    let art_start = q + p;
    let width = q + p + artificial.len() + 1;
    let mut t = Tableau {
        width,
        cells: vec![0.0; (p + 1) * width],
        rows: p,
        basis: vec![0; p],
    };
    let mut next_art = art_start;
    for i in 0..p {
        let sgn = if h[i] < 0.0 { -1.0 } else { 1.0 };
        let row = &mut t.cells[i * width..(i + 1) * width];
        for (d, v) in row.iter_mut().zip(g.row(i)) {
            *d = sgn * v;
        }
        row[q + i] = sgn;
        row[width - 1] = sgn * h[i];
        if sgn < 0.0 {
            row[next_art] = 1.0;
            t.basis[i] = next_art;
            next_art += 1;
        } else {
            t.basis[i] = q + i;
        }
    }

    if !artificial.is_empty() {
        // maximize −Σ artificials, priced out against the starting basis
        let obj = t.objective();
        for c in art_start..width - 1 {
            t.cells[obj * width + c] = 1.0;
        }
        for r in 0..p {
            if t.basis[r] >= art_start {
                for c in 0..width {
                    let v = t.at(r, c);
                    t.cells[obj * width + c] -= v;
                }
            }
        }
        t.optimize(width - 1)?;
        let scale = 1.0 + h.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if t.rhs(obj) < -1e-9 * scale {
            return Err(Error::Infeasible);
        }
        let mut r = 0;
        while r < t.rows {
            if t.basis[r] >= art_start {
                match (0..art_start).find(|&c| t.at(r, c).abs() > PIVOT_EPS) {
                    Some(c) => t.pivot(r, c),
                    None => {
                        t.drop_row(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
    }

    let obj = t.objective();
    for col in 0..width {
        t.cells[obj * width + col] = if col < q { -c[col] } else { 0.0 };
    }
    for r in 0..t.rows {
        let f = t.at(obj, t.basis[r]);
        if f != 0.0 {
            for col in 0..width {
                let v = t.at(r, col);
                t.cells[obj * width + col] -= f * v;
            }
        }
    }
    t.optimize(art_start)?;

    let mut z = vec![0.0; q];
    for r in 0..t.rows {
        if t.basis[r] < q {
            z[t.basis[r]] = t.rhs(r);
        }
    }
    Ok(z)
}
