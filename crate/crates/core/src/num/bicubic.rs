//! C1 bicubic interpolation of the solved height grid.
//!
//! Tensor-product Catmull–Rom on a uniform grid, so values and first derivatives are
//! continuous across cells. Ghosts encode the physics of the half grid: the left x-edge is
//! an even mirror (crest line symmetry), the right x-edge clamps to the far-field column,
//! and the y-edges extrapolate cubically (surface and bed rows are genuine boundaries).

#[derive(Debug, Clone)]
pub struct Bicubic {
    x0: f64,
    dx: f64,
    y0: f64,
    dy: f64,
    nx: usize,
    ny: usize,
    /// Extended (nx+2) x (ny+2) array, index `[(i+1)*(ny+2) + (j+1)]` for node `(i, j)`.
    ext: Vec<f64>,
}

/// Value and derivatives of the interpolant at one point.
#[derive(Debug, Clone, Copy, Default)]
pub struct Jet {
    pub f: f64,
    pub fx: f64,
    pub fy: f64,
    pub fxy: f64,
    pub fxx: f64,
    pub fyy: f64,
}

fn weights(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        -0.5 * t + t2 - 0.5 * t3,
        1.0 - 2.5 * t2 + 1.5 * t3,
        0.5 * t + 2.0 * t2 - 1.5 * t3,
        -0.5 * t2 + 0.5 * t3,
    ]
}

fn weights_d(t: f64) -> [f64; 4] {
    let t2 = t * t;
    [
        -0.5 + 2.0 * t - 1.5 * t2,
        -5.0 * t + 4.5 * t2,
        0.5 + 4.0 * t - 4.5 * t2,
        -t + 1.5 * t2,
    ]
}

fn weights_dd(t: f64) -> [f64; 4] {
    [
        2.0 - 3.0 * t,
        -5.0 + 9.0 * t,
        4.0 - 9.0 * t,
        -1.0 + 3.0 * t,
    ]
}

impl Bicubic {
    /// Builds the interpolant from `values[i*ny + j]` at `(x0+i*dx, y0+j*dy)`.
    ///
    /// Requires `nx >= 2` and `ny >= 4` (cubic extrapolation needs four rows).
    pub fn new(x0: f64, dx: f64, y0: f64, dy: f64, nx: usize, ny: usize, values: &[f64]) -> Self {
        assert!(nx >= 2 && ny >= 4, "grid too small for bicubic ghosts");
        assert_eq!(values.len(), nx * ny);
        let nye = ny + 2;
        let mut ext = vec![0.0; (nx + 2) * nye];
        let v = |i: usize, j: usize| values[i * ny + j];
        for i in 0..nx {
            for j in 0..ny {
                ext[(i + 1) * nye + (j + 1)] = v(i, j);
            }
        }
        // x ghosts: even mirror on the left, clamp on the right.
        for j in 0..ny {
            ext[j + 1] = v(1.min(nx - 1), j);
            ext[(nx + 1) * nye + (j + 1)] = v(nx - 1, j);
        }
        // y ghosts: one-sided cubic extrapolation, applied to every extended column.
        for ic in 0..nx + 2 {
            let col = ic * nye;
            ext[col] = 4.0 * ext[col + 1] - 6.0 * ext[col + 2] + 4.0 * ext[col + 3] - ext[col + 4];
            ext[col + ny + 1] = 4.0 * ext[col + ny] - 6.0 * ext[col + ny - 1]
                + 4.0 * ext[col + ny - 2]
                - ext[col + ny - 3];
        }
        Self {
            x0,
            dx,
            y0,
            dy,
            nx,
            ny,
            ext,
        }
    }

    pub fn x_max(&self) -> f64 {
        self.x0 + self.dx * (self.nx - 1) as f64
    }

    fn locate(&self, x: f64, y: f64) -> (usize, f64, usize, f64) {
        let sx = (x - self.x0) / self.dx;
        let i = (sx.floor() as isize).clamp(0, self.nx as isize - 2) as usize;
        let sy = (y - self.y0) / self.dy;
        let j = (sy.floor() as isize).clamp(0, self.ny as isize - 2) as usize;
        (i, sx - i as f64, j, sy - j as f64)
    }

    /// Evaluates value and derivatives. `x` is clamped to the grid span; `y` slightly
    /// outside is extrapolated by the boundary cells (callers guard the physical domain).
    pub fn jet(&self, x: f64, y: f64) -> Jet {
        let (i, tx, j, ty) = self.locate(x.clamp(self.x0, self.x_max()), y);
        let nye = self.ny + 2;
        let wx = weights(tx);
        let wxd = weights_d(tx);
        let wxdd = weights_dd(tx);
        let wy = weights(ty);
        let wyd = weights_d(ty);
        let wydd = weights_dd(ty);
        let mut f = 0.0;
        let mut fx = 0.0;
        let mut fy = 0.0;
        let mut fxy = 0.0;
        let mut fxx = 0.0;
        let mut fyy = 0.0;
        for a in 0..4 {
            // Row index i-1+a maps to extended column i+a.
            let col = (i + a) * nye + j;
            let mut s = 0.0;
            let mut sd = 0.0;
            let mut sdd = 0.0;
            for b in 0..4 {
                let v = self.ext[col + b];
                s += wy[b] * v;
                sd += wyd[b] * v;
                sdd += wydd[b] * v;
            }
            f += wx[a] * s;
            fx += wxd[a] * s;
            fy += wx[a] * sd;
            fxy += wxd[a] * sd;
            fxx += wxdd[a] * s;
            fyy += wx[a] * sdd;
        }
        Jet {
            f,
            fx: fx / self.dx,
            fy: fy / self.dy,
            fxy: fxy / (self.dx * self.dy),
            fxx: fxx / (self.dx * self.dx),
            fyy: fyy / (self.dy * self.dy),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn build_quadratic() -> (Bicubic, impl Fn(f64, f64) -> f64) {
        let g = |x: f64, y: f64| 1.0 + 0.5 * x + 0.25 * y + 0.125 * x * x - 0.2 * x * y + 0.3 * y * y;
        let (nx, ny) = (12, 9);
        let (dx, dy) = (0.5, 0.25);
        let mut v = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                v[i * ny + j] = g(i as f64 * dx, -1.0 + j as f64 * dy);
            }
        }
        (Bicubic::new(0.0, dx, -1.0, dy, nx, ny, &v), g)
    }

    #[test]
    fn interpolates_nodes_exactly() {
        let (b, g) = build_quadratic();
        for i in 0..12 {
            for j in 0..9 {
                let (x, y) = (i as f64 * 0.5, -1.0 + j as f64 * 0.25);
                assert!((b.jet(x, y).f - g(x, y)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn reproduces_quadratics_with_derivatives() {
        // Away from the x edges (whose ghosts deliberately encode mirror/clamp physics
        // instead of extrapolating), the stencil must reproduce quadratics exactly --
        // including on the y edges, whose ghosts do extrapolate.
        let (b, g) = build_quadratic();
        for &(x, y) in &[(0.6, -0.9), (2.71, -0.33), (4.9, 0.99), (1.0, -1.0), (3.5, 1.0)] {
            let j = b.jet(x, y);
            assert!((j.f - g(x, y)).abs() < 1e-12, "value at ({x},{y})");
            assert!((j.fx - (0.5 + 0.25 * x - 0.2 * y)).abs() < 1e-11, "fx at ({x},{y})");
            assert!((j.fy - (0.25 - 0.2 * x + 0.6 * y)).abs() < 1e-11, "fy at ({x},{y})");
            assert!((j.fxy - (-0.2)).abs() < 1e-10);
            assert!((j.fxx - 0.25).abs() < 1e-10);
            assert!((j.fyy - 0.6).abs() < 1e-10);
        }
    }

    #[test]
    fn c1_across_cell_seams() {
        let (b, _) = build_quadratic();
        for &x in &[0.5, 1.0, 4.5] {
            let eps = 1e-9;
            let l = b.jet(x - eps, -0.4);
            let r = b.jet(x + eps, -0.4);
            assert!((l.f - r.f).abs() < 1e-8);
            assert!((l.fx - r.fx).abs() < 1e-6);
        }
    }

    #[test]
    fn right_clamp_flattens_fx_at_far_edge() {
        // Data constant in x near the right edge (a converged far field): the clamp
        // ghost keeps fx at zero there instead of inventing slope.
        let (nx, ny) = (8, 6);
        let mut v = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let x = (i as f64).min(5.0); // frozen beyond i = 5
                v[i * ny + j] = (-x).exp() + 0.1 * j as f64;
            }
        }
        let b = Bicubic::new(0.0, 1.0, 0.0, 1.0, nx, ny, &v);
        for j in 0..6 {
            assert!(b.jet(7.0, j as f64).fx.abs() < 1e-13);
        }
    }

    #[test]
    fn even_mirror_kills_fx_on_axis() {
        // Data even in x about 0 after mirroring: fx(0, y) must vanish identically.
        let (nx, ny) = (8, 6);
        let mut v = vec![0.0; nx * ny];
        for i in 0..nx {
            for j in 0..ny {
                let (x, y) = (i as f64, j as f64);
                v[i * ny + j] = (x * x * 0.3 + 1.0) * (0.5 + 0.1 * y);
            }
        }
        let b = Bicubic::new(0.0, 1.0, 0.0, 1.0, nx, ny, &v);
        for j in 0..6 {
            assert!(b.jet(0.0, j as f64).fx.abs() < 1e-13);
        }
    }
}
