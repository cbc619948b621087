//! The discretized height-function system and its damped-Newton driver.
//!
//! Unknowns are heights h(q_i, p_j) above the bed on the half domain q ∈ [0, L],
//! p ∈ [p0, 0], stored row-major as `h[i*np + j]` including the bed row (j = 0,
//! identically zero) and the far-field column (i = m-1, pinned to the discrete
//! laminar profile). The equations are
//!
//!   interior:  (1 + h_q²) h_pp - 2 h_p h_q h_pq + h_p² h_qq + γ(-p) h_p³ = 0
//!   surface:   (1 + h_q²) / h_p² + 2g (h - d_ref) = λ        (one-sided h_p)
//!
//! with central differences inside, a three-point backward h_p on the surface row,
//! and crest symmetry folded in by mirroring the station left of q = 0.
//!
//! The same row evaluator solves the one-station system (m = 1), where the east
//! and west neighbours collapse onto the centre: that is the discrete laminar
//! column used for the far-field pin, so the pinned column zeroes the far rows of
//! the two-dimensional system exactly rather than to truncation order.

use crate::error::{Error, Result};
use crate::num::banded::BandedMatrix;
use crate::par;

/// Resolved half-domain discretization.
#[derive(Debug, Clone, Copy, serde::Serialize, serde::Deserialize)]
pub struct WaveGrid {
    /// Stations on [0, L]; the full wave has 2m-1 stations.
    pub m: usize,
    /// Streamline rows from bed (j = 0) to surface (j = np-1).
    pub np: usize,
    pub dq: f64,
    pub dp: f64,
    pub half_length: f64,
    pub p0: f64,
}

impl WaveGrid {
    pub fn q(&self, i: usize) -> f64 {
        i as f64 * self.dq
    }

    pub fn p(&self, j: usize) -> f64 {
        self.p0 + j as f64 * self.dp
    }

    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.np + j
    }

    /// Surface row index.
    pub fn js(&self) -> usize {
        self.np - 1
    }
}

/// Everything that defines the nonlinear system apart from the state itself.
pub struct DiscreteSystem<'a> {
    pub grid: WaveGrid,
    /// γ(-p_j) per streamline row.
    pub gamma_mp: &'a [f64],
    pub g: f64,
    pub lambda: f64,
    /// Datum in the surface condition (the conjugate laminar depth).
    pub d_ref: f64,
    /// Far-field column values H̃_j; unused when m = 1.
    pub far: &'a [f64],
}

/// One assembled row: residual plus its Jacobian entries (column, value).
#[derive(Debug, Clone, Copy)]
struct Row {
    r: f64,
    n: u8,
    cols: [u32; 9],
    vals: [f64; 9],
}

impl Row {
    fn push(&mut self, col: Option<u32>, val: f64) {
        if let Some(c) = col {
            self.cols[self.n as usize] = c;
            self.vals[self.n as usize] = val;
            self.n += 1;
        }
    }
}

impl<'a> DiscreteSystem<'a> {
    pub fn n_unknowns(&self) -> usize {
        self.grid.m * (self.grid.np - 1)
    }

    pub fn bandwidth(&self) -> usize {
        if self.grid.m == 1 {
            3
        } else {
            self.grid.np
        }
    }

    /// Column index of unknown (i, j), or None for the bed row.
    fn col(&self, i: usize, j: usize) -> Option<u32> {
        (j >= 1).then(|| (i * (self.grid.np - 1) + (j - 1)) as u32)
    }

    /// East/west station indices with crest mirroring (and self-collapse at m = 1).
    fn ew(&self, i: usize) -> (usize, usize) {
        if self.grid.m == 1 {
            (0, 0)
        } else if i == 0 {
            (1, 1)
        } else {
            (i + 1, i - 1)
        }
    }

    fn eval_row(&self, k: usize, h: &[f64], with_jac: bool) -> Row {
        let g = &self.grid;
        let np = g.np;
        let (i, j) = (k / (np - 1), 1 + k % (np - 1));
        let mut row = Row {
            r: 0.0,
            n: 0,
            cols: [0; 9],
            vals: [0.0; 9],
        };
        if g.m > 1 && i == g.m - 1 {
            row.r = h[g.idx(i, j)] - self.far[j];
            if with_jac {
                row.push(self.col(i, j), 1.0);
            }
            return row;
        }
        let (ie, iw) = self.ew(i);
        let c = h[g.idx(i, j)];
        let e = h[g.idx(ie, j)];
        let w = h[g.idx(iw, j)];
        let hq = (e - w) / (2.0 * g.dq);
        if j == g.js() {
            // Surface condition with a four-point one-sided h_p (O(dp³)). The cubic
            // closure keeps the discrete conjugate laminar pair alive near the
            // critical level, where the quadratic one's truncation bias can
            // annihilate it on desk-scale grids.
            let s1 = h[g.idx(i, j - 1)];
            let s2 = h[g.idx(i, j - 2)];
            let s3 = h[g.idx(i, j - 3)];
            let hp = (11.0 * c - 18.0 * s1 + 9.0 * s2 - 2.0 * s3) / (6.0 * g.dp);
            row.r = (1.0 + hq * hq) / (hp * hp) + 2.0 * self.g * (c - self.d_ref) - self.lambda;
            if with_jac {
                let r_hq = 2.0 * hq / (hp * hp);
                let r_hp = -2.0 * (1.0 + hq * hq) / (hp * hp * hp);
                row.push(self.col(i, j), r_hp * 11.0 / (6.0 * g.dp) + 2.0 * self.g);
                row.push(self.col(ie, j), r_hq / (2.0 * g.dq));
                row.push(self.col(iw, j), -r_hq / (2.0 * g.dq));
                row.push(self.col(i, j - 1), -3.0 * r_hp / g.dp);
                row.push(self.col(i, j - 2), r_hp * 1.5 / g.dp);
                row.push(self.col(i, j - 3), -r_hp / (3.0 * g.dp));
            }
            return row;
        }
        // Interior equation on a nine-point stencil (bed values are literal zeros).
        let n_ = h[g.idx(i, j + 1)];
        let s_ = h[g.idx(i, j - 1)];
        let ne = h[g.idx(ie, j + 1)];
        let nw = h[g.idx(iw, j + 1)];
        let se = h[g.idx(ie, j - 1)];
        let sw = h[g.idx(iw, j - 1)];
        let hp = (n_ - s_) / (2.0 * g.dp);
        let hqq = (e - 2.0 * c + w) / (g.dq * g.dq);
        let hpp = (n_ - 2.0 * c + s_) / (g.dp * g.dp);
        let hpq = (ne - se - nw + sw) / (4.0 * g.dq * g.dp);
        let gamma = self.gamma_mp[j];
        row.r = (1.0 + hq * hq) * hpp - 2.0 * hp * hq * hpq
            + hp * hp * hqq
            + gamma * hp * hp * hp;
        if with_jac {
            let r_hq = 2.0 * hq * hpp - 2.0 * hp * hpq;
            let r_hp = -2.0 * hq * hpq + 2.0 * hp * hqq + 3.0 * gamma * hp * hp;
            let r_hqq = hp * hp;
            let r_hpp = 1.0 + hq * hq;
            let r_hpq = -2.0 * hp * hq;
            let (dq2, dp2) = (g.dq * g.dq, g.dp * g.dp);
            row.push(
                self.col(i, j),
                -2.0 * r_hqq / dq2 - 2.0 * r_hpp / dp2,
            );
            row.push(self.col(ie, j), r_hq / (2.0 * g.dq) + r_hqq / dq2);
            row.push(self.col(iw, j), -r_hq / (2.0 * g.dq) + r_hqq / dq2);
            row.push(self.col(i, j + 1), r_hp / (2.0 * g.dp) + r_hpp / dp2);
            row.push(self.col(i, j - 1), -r_hp / (2.0 * g.dp) + r_hpp / dp2);
            let wpq = r_hpq / (4.0 * g.dq * g.dp);
            row.push(self.col(ie, j + 1), wpq);
            row.push(self.col(iw, j + 1), -wpq);
            row.push(self.col(ie, j - 1), -wpq);
            row.push(self.col(iw, j - 1), wpq);
        }
        row
    }

    /// Residual vector at state `h`.
    pub fn residual(&self, h: &[f64]) -> Vec<f64> {
        par::map_indexed(self.n_unknowns(), |k| self.eval_row(k, h, false).r)
    }

    pub fn residual_inf(&self, h: &[f64]) -> f64 {
        self.residual(h).iter().fold(0.0, |a, r| a.max(r.abs()))
    }

    /// Residual and assembled Jacobian at state `h`.
    fn linearize(&self, h: &[f64]) -> (Vec<f64>, BandedMatrix) {
        let n = self.n_unknowns();
        let kb = self.bandwidth();
        let rows: Vec<Row> = par::map_indexed(n, |k| self.eval_row(k, h, true));
        let mut jac = BandedMatrix::zeros(n, kb, kb);
        let mut r = Vec::with_capacity(n);
        for (k, row) in rows.iter().enumerate() {
            r.push(row.r);
            for t in 0..row.n as usize {
                jac.add(k, row.cols[t] as usize, row.vals[t]);
            }
        }
        (r, jac)
    }

    /// Writes the unknown part of `delta` into the state with step factor `t`.
    fn apply(&self, h: &mut [f64], delta: &[f64], t: f64) {
        let g = &self.grid;
        for k in 0..self.n_unknowns() {
            let (i, j) = (k / (g.np - 1), 1 + k % (g.np - 1));
            h[g.idx(i, j)] += t * delta[k];
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NewtonInfo {
    pub residual_inf: f64,
    pub iterations: usize,
}

/// Damped Newton iteration: full steps are halved until the residual norm drops.
pub fn newton_solve(
    sys: &DiscreteSystem,
    h: &mut [f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonInfo> {
    let mut norm = sys.residual_inf(h);
    for it in 0..max_iter {
        if norm <= tol {
            return Ok(NewtonInfo {
                residual_inf: norm,
                iterations: it,
            });
        }
        let (mut r, jac) = sys.linearize(h);
        for v in r.iter_mut() {
            *v = -*v;
        }
        let lu = jac.factorize()?;
        lu.solve(&mut r)?;
        let mut t = 1.0;
        loop {
            let mut trial = h.to_vec();
            sys.apply(&mut trial, &r, t);
            let trial_norm = sys.residual_inf(&trial);
            if trial_norm.is_finite() && trial_norm < norm {
                h.copy_from_slice(&trial);
                norm = trial_norm;
                break;
            }
            t *= 0.5;
            if t < 2.0f64.powi(-30) {
                return Err(Error::Convergence {
                    context: "Newton line search stalled".into(),
                    residual: norm,
                    iterations: it,
                });
            }
        }
    }
    if norm <= tol {
        return Ok(NewtonInfo {
            residual_inf: norm,
            iterations: max_iter,
        });
    }
    Err(Error::Convergence {
        context: "height-function Newton iteration".into(),
        residual: norm,
        iterations: max_iter,
    })
}
