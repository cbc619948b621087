//! Banded LU factorization with partial pivoting (LAPACK band layout).
//!
//! Stores an n x n matrix with `kl` sub- and `ku` superdiagonals column-wise in a
//! `(2*kl+ku+1) x n` band; the extra `kl` rows hold fill-in created by row interchanges.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            ldab,
            ab: vec![0.0; ldab * n],
        }
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        let d = self.kl as isize + self.ku as isize + i as isize - j as isize;
        if i < self.n && j < self.n && d >= self.kl as isize && d < self.ldab as isize {
            Some(j * self.ldab + d as usize)
        } else {
            None
        }
    }

    /// Adds `v` to entry `(i, j)`. Panics if the entry lies outside the declared band.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        match self.offset(i, j) {
            Some(o) => self.ab[o] += v,
            None => panic!("entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku),
        }
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        match self.offset(i, j) {
            Some(o) => self.ab[o] = v,
            None => panic!("entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.offset(i, j).map_or(0.0, |o| self.ab[o])
    }

    /// Factorizes in place (partial pivoting). The matrix is consumed.
    pub fn factorize(mut self) -> Result<BandedLu> {
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku; // width of the factored upper band
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            // Pivot search over rows j..=j+km in column j.
            let base = j * ldab + kv;
            let mut jp = 0usize;
            let mut amax = self.ab[base].abs();
            for k in 1..=km {
                let v = self.ab[base + k].abs();
                if v > amax {
                    amax = v;
                    jp = k;
                }
            }
            ipiv[j] = j + jp;
            if amax == 0.0 {
                return Err(Error::Numerical(format!(
                    "banded matrix is singular at column {j}"
                )));
            }
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                // Swap rows j and j+jp across columns j..=ju.
                for jj in j..=ju {
                    let o1 = jj * ldab + (kv + j - jj);
                    let o2 = jj * ldab + (kv + j + jp - jj);
                    self.ab.swap(o1, o2);
                }
            }
            if km > 0 {
                let piv = self.ab[base];
                for k in 1..=km {
                    self.ab[base + k] /= piv;
                }
                for jj in (j + 1)..=ju {
                    let col = jj * ldab;
                    let u = self.ab[col + (kv + j - jj)];
                    if u != 0.0 {
                        for k in 1..=km {
                            self.ab[col + (kv + j + k - jj)] -= self.ab[base + k] * u;
                        }
                    }
                }
            }
        }
        Ok(BandedLu {
            n,
            kl,
            ku,
            ldab,
            ab: self.ab,
            ipiv,
        })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Solves `A x = b` in place.
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        if b.len() != self.n {
            return Err(Error::InvalidArgument(format!(
                "rhs length {} for system of size {}",
                b.len(),
                self.n
            )));
        }
        let (n, kl, ku, ldab) = (self.n, self.kl, self.ku, self.ldab);
        let kv = kl + ku;
        // L solve (unit lower, with interchanges).
        for j in 0..n {
            let p = self.ipiv[j];
            if p != j {
                b.swap(j, p);
            }
            let km = kl.min(n - 1 - j);
            let base = j * ldab + kv;
            for k in 1..=km {
                b[j + k] -= self.ab[base + k] * b[j];
            }
        }
        // U solve (bandwidth kl+ku above the diagonal).
        for j in (0..n).rev() {
            let col = j * ldab;
            b[j] /= self.ab[col + kv];
            let top = j.saturating_sub(kv);
            for i in top..j {
                b[i] -= self.ab[col + (kv + i - j)] * b[j];
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_banded(n: usize, kl: usize, ku: usize, rng: &mut StdRng) -> (BandedMatrix, DMatrix<f64>) {
        let mut band = BandedMatrix::zeros(n, kl, ku);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if j + kl >= i && i + ku >= j {
                    // Small diagonals force genuine pivoting.
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    let v = if i == j { 0.01 * v } else { v };
                    band.set(i, j, v);
                    dense[(i, j)] = v;
                }
            }
        }
        (band, dense)
    }

    #[test]
    fn matches_dense_lu_oracle() {
        let mut rng = StdRng::seed_from_u64(7);
        for &(n, kl, ku) in &[(12usize, 3usize, 3usize), (40, 5, 2), (81, 9, 9), (150, 1, 1)] {
            let (band, dense) = random_banded(n, kl, ku, &mut rng);
            let x_true: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let b_vec = &dense * nalgebra::DVector::from_column_slice(&x_true);
            let mut b: Vec<f64> = b_vec.iter().copied().collect();
            let lu = band.factorize().unwrap();
            lu.solve(&mut b).unwrap();
            let err: f64 = b
                .iter()
                .zip(&x_true)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-8, "n={n} kl={kl} ku={ku}: max err {err:.3e}");
        }
    }

    #[test]
    fn tridiagonal_exact() {
        // -u'' = f on a grid: classic SPD tridiagonal, solution recovered to roundoff.
        let n = 64;
        let mut a = BandedMatrix::zeros(n, 1, 1);
        for i in 0..n {
            a.set(i, i, 2.0);
            if i > 0 {
                a.set(i, i - 1, -1.0);
            }
            if i + 1 < n {
                a.set(i, i + 1, -1.0);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| ((i * 13) % 7) as f64 - 3.0).collect();
        let mut b = vec![0.0; n];
        for i in 0..n {
            b[i] = 2.0 * x_true[i]
                - if i > 0 { x_true[i - 1] } else { 0.0 }
                - if i + 1 < n { x_true[i + 1] } else { 0.0 };
        }
        let lu = a.factorize().unwrap();
        lu.solve(&mut b).unwrap();
        for i in 0..n {
            assert!((b[i] - x_true[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_detected() {
        let mut a = BandedMatrix::zeros(3, 1, 1);
        a.set(0, 0, 1.0);
        a.set(1, 1, 0.0);
        a.set(2, 2, 1.0);
        assert!(a.factorize().is_err());
    }
}
