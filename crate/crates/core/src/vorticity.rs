//! Vorticity distributions γ(ψ) and their pressure-side antiderivative.
//!
//! The model prescribes vorticity as a function of the stream function ψ, with
//! ψ = 0 on the free surface and ψ = -p0 > 0 on the bed. Everything downstream
//! needs two things from a distribution: pointwise values γ(ψ) (plus one or two
//! derivatives for cross-checks), and the antiderivative
//!
//! ```text
//! Γ(p) = ∫_0^p γ(-s) ds,     p in [p0, 0],
//! ```
//!
//! which enters the critical-speed equation and the laminar depth profile.
//! Closed forms are used where the distribution admits them; tabulated data is
//! interpolated with monotonicity-limited cubic Hermite pieces so sampled
//! sign-definite vorticity stays sign-definite between the samples.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::interp::{limit_slopes_monotone, HermiteTable};
use crate::num::{quad, root};

/// Tolerance for "is this sample effectively zero" in hypothesis checks.
const SIGN_TOL: f64 = 1e-12;
/// Sample counts for hypothesis scans and antiderivative extrema scans.
const HYPOTHESIS_SAMPLES: usize = 2001;
const EXTREMA_SAMPLES: usize = 4097;

/// A vorticity distribution γ(ψ).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VorticityFunction {
    /// Irrotational flow, γ ≡ 0.
    Zero,
    /// Constant vorticity γ ≡ omega0.
    Constant { omega0: f64 },
    /// Linear shear γ(ψ) = a ψ + b.
    Affine { a: f64, b: f64 },
    /// Samples γ(ψ_k) on a uniform ψ grid, interpolated shape-preservingly.
    Tabulated { psi: Vec<f64>, gamma: Vec<f64> },
}

impl VorticityFunction {
    /// Builds a tabulated distribution from uniformly spaced samples.
    pub fn tabulated(psi: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let v = Self::Tabulated { psi, gamma };
        v.table()?; // surfaces validation errors eagerly
        Ok(v)
    }

    fn table(&self) -> Result<Option<HermiteTable>> {
        let Self::Tabulated { psi, gamma } = self else {
            return Ok(None);
        };
        if psi.len() != gamma.len() || psi.len() < 4 {
            return Err(Error::InvalidArgument(format!(
                "tabulated vorticity needs >=4 matching samples (got {} abscissae, {} values)",
                psi.len(),
                gamma.len()
            )));
        }
        let dx = psi[1] - psi[0];
        if !(dx > 0.0) {
            return Err(Error::InvalidArgument("ψ samples must increase".into()));
        }
        let span = psi[psi.len() - 1] - psi[0];
        for (k, w) in psi.windows(2).enumerate() {
            if ((w[1] - w[0]) - dx).abs() > 1e-9 * span.max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "ψ samples must be uniformly spaced (cell {k} has width {})",
                    w[1] - w[0]
                )));
            }
        }
        // Centered-difference slopes, then Fritsch–Carlson limiting.
        let n = gamma.len();
        let mut m = vec![0.0; n];
        m[0] = (gamma[1] - gamma[0]) / dx;
        m[n - 1] = (gamma[n - 1] - gamma[n - 2]) / dx;
        for k in 1..n - 1 {
            m[k] = (gamma[k + 1] - gamma[k - 1]) / (2.0 * dx);
        }
        limit_slopes_monotone(dx, gamma, &mut m);
        Ok(Some(HermiteTable::new(psi[0], dx, gamma.clone(), m)?))
    }

    /// γ(ψ).
    pub fn gamma(&self, psi: f64) -> Result<f64> {
        self.eval_gamma(psi, 0)
    }

    /// The `order`-th derivative of γ at ψ (orders 0, 1, 2).
    pub fn eval_gamma(&self, psi: f64, order: u32) -> Result<f64> {
        if order > 2 {
            return Err(Error::InvalidArgument(format!(
                "vorticity derivative order {order} not available (max 2)"
            )));
        }
        Ok(match self {
            Self::Zero => 0.0,
            Self::Constant { omega0 } => match order {
                0 => *omega0,
                _ => 0.0,
            },
            Self::Affine { a, b } => match order {
                0 => a * psi + b,
                1 => *a,
                _ => 0.0,
            },
            Self::Tabulated { .. } => {
                let t = self.table()?.expect("tabulated variant has a table");
                match order {
                    0 => t.eval(psi)?,
                    1 => t.eval_deriv(psi)?,
                    _ => t.eval_deriv2(psi)?,
                }
            }
        })
    }

    /// Γ(p) = ∫_0^p γ(-s) ds for p ≤ 0.
    pub fn big_gamma(&self, p: f64) -> Result<f64> {
        if p > 0.0 {
            return Err(Error::Domain(format!(
                "antiderivative argument {p} must be non-positive"
            )));
        }
        Ok(match self {
            Self::Zero => 0.0,
            Self::Constant { omega0 } => omega0 * p,
            // γ(-s) = -a s + b, so Γ(p) = -a p²/2 + b p.
            Self::Affine { a, b } => -0.5 * a * p * p + b * p,
            Self::Tabulated { .. } => {
                let t = self.table()?.expect("tabulated variant has a table");
                // Γ(p) = -∫_0^{-p} γ(u) du after substituting u = -s.
                let knots: Vec<f64> = (0..8)
                    .map(|k| t.x_min() + (t.x_max() - t.x_min()) * k as f64 / 7.0)
                    .collect();
                -quad::integrate(|u| t.eval(u).unwrap_or(f64::NAN), 0.0, -p, 1e-13, 1e-12, &knots)?
            }
        })
    }

    /// Extrema of Γ over `[p0, 0]`: uniform scan plus golden-section refinement of
    /// interior candidates.
    pub fn big_gamma_extrema(&self, p0: f64) -> Result<GammaExtrema> {
        if !(p0 < 0.0) {
            return Err(Error::InvalidArgument(format!("bed streamline value {p0}")));
        }
        let n = EXTREMA_SAMPLES;
        let grid: Vec<f64> = (0..n).map(|k| p0 + (0.0 - p0) * k as f64 / (n - 1) as f64).collect();
        let vals: Vec<f64> = grid
            .iter()
            .map(|&p| self.big_gamma(p))
            .collect::<Result<_>>()?;
        let mut min = (vals[0], grid[0]);
        let mut max = (vals[0], grid[0]);
        for (&p, &v) in grid.iter().zip(&vals) {
            if v < min.0 {
                min = (v, p);
            }
            if v > max.0 {
                max = (v, p);
            }
        }
        // Refine any interior extremum to locate it sharply.
        for (target_max, slot) in [(false, &mut min), (true, &mut max)] {
            let k = grid.iter().position(|&p| p == slot.1).unwrap();
            if k == 0 || k == n - 1 {
                continue;
            }
            let f = |p: f64| {
                let v = self.big_gamma(p).unwrap_or(f64::NAN);
                if target_max {
                    -v
                } else {
                    v
                }
            };
            let p_ref = root::golden_min(f, grid[k - 1], grid[k], grid[k + 1], 1e-12);
            let v_ref = self.big_gamma(p_ref)?;
            if (target_max && v_ref > slot.0) || (!target_max && v_ref < slot.0) {
                *slot = (v_ref, p_ref);
            }
        }
        Ok(GammaExtrema {
            min: min.0,
            argmin: min.1,
            max: max.0,
            argmax: max.1,
        })
    }

    /// Scans γ over the fluid's ψ range `[0, -p0]` and reports sign information.
    pub fn hypothesis_report(&self, p0: f64) -> Result<HypothesisReport> {
        if !(p0 < 0.0) {
            return Err(Error::InvalidArgument(format!("bed streamline value {p0}")));
        }
        let n = HYPOTHESIS_SAMPLES;
        let mut gamma_min = f64::INFINITY;
        let mut gamma_max = f64::NEG_INFINITY;
        for k in 0..n {
            let psi = -p0 * k as f64 / (n - 1) as f64;
            let g = self.gamma(psi)?;
            gamma_min = gamma_min.min(g);
            gamma_max = gamma_max.max(g);
        }
        Ok(HypothesisReport {
            gamma_min,
            gamma_max,
            strictly_negative: gamma_max <= -SIGN_TOL,
            weakly_negative: gamma_max <= SIGN_TOL,
        })
    }

    /// γ at the surface streamline ψ = 0.
    pub fn gamma_surface(&self) -> Result<f64> {
        self.gamma(0.0)
    }
}

/// Range of Γ over the pressure interval, with the locations of the extremes.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GammaExtrema {
    pub min: f64,
    pub argmin: f64,
    pub max: f64,
    pub argmax: f64,
}

/// Sign summary of a γ scan over the fluid's ψ range.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub gamma_min: f64,
    pub gamma_max: f64,
    /// γ ≤ -1e-12 everywhere sampled.
    pub strictly_negative: bool,
    /// γ ≤ 1e-12 everywhere sampled (admits irrotational and sign-touching cases).
    pub weakly_negative: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tabulated_smooth() -> VorticityFunction {
        // Samples of γ(ψ) = -1.2 - 0.5 sin(3ψ) on [0, 1.25]: strictly negative, non-monotone.
        let n = 41;
        let dx = 1.25 / (n - 1) as f64;
        let psi: Vec<f64> = (0..n).map(|k| k as f64 * dx).collect();
        let gamma: Vec<f64> = psi.iter().map(|&s| -1.2 - 0.5 * (3.0 * s).sin()).collect();
        VorticityFunction::tabulated(psi, gamma).unwrap()
    }

    #[test]
    fn constant_antiderivative_closed_form() {
        let v = VorticityFunction::Constant { omega0: -1.0 };
        assert_eq!(v.big_gamma(0.0).unwrap(), 0.0);
        assert_eq!(v.big_gamma(-0.5).unwrap(), 0.5);
        assert_eq!(v.big_gamma(-1.0).unwrap(), 1.0);
    }

    #[test]
    fn affine_antiderivative_matches_quadrature() {
        let v = VorticityFunction::Affine { a: -2.0, b: -1.0 };
        // Γ(p) = p² - p for this distribution.
        for &p in &[-1.0, -0.7, -0.25, 0.0] {
            let closed = v.big_gamma(p).unwrap();
            assert!((closed - (p * p - p)).abs() < 1e-14);
            let oracle =
                quad::integrate(|s| -2.0 * (-s) - 1.0, p, 0.0, 1e-14, 1e-13, &[]).unwrap();
            assert!((closed + oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn tabulated_antiderivative_vs_simpson() {
        let v = tabulated_smooth();
        // Composite-Simpson oracle over the interpolant itself.
        let p = -1.1;
        let n = 20_000usize;
        let h = -p / n as f64;
        let mut acc = v.gamma(0.0).unwrap() + v.gamma(-p).unwrap();
        for k in 1..n {
            let u = k as f64 * h;
            acc += v.gamma(u).unwrap() * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        let oracle = -acc * h / 3.0;
        let got = v.big_gamma(p).unwrap();
        assert!((got - oracle).abs() < 1e-9, "Γ {got} vs Simpson {oracle}");
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let h = 1e-5;
        for v in [
            VorticityFunction::Affine { a: -2.0, b: -1.0 },
            tabulated_smooth(),
        ] {
            // Points chosen off the tabulated knots: the interpolant's second
            // derivative jumps at knots, where a straddling FD stencil is meaningless.
            for &psi in &[0.2, 0.61, 0.997] {
                let d_fd = (v.gamma(psi + h).unwrap() - v.gamma(psi - h).unwrap()) / (2.0 * h);
                let d = v.eval_gamma(psi, 1).unwrap();
                assert!((d - d_fd).abs() < 1e-5, "γ'({psi}) {d} vs FD {d_fd}");
                let s_fd = (v.gamma(psi + h).unwrap() - 2.0 * v.gamma(psi).unwrap()
                    + v.gamma(psi - h).unwrap())
                    / (h * h);
                let s = v.eval_gamma(psi, 2).unwrap();
                assert!((s - s_fd).abs() < 2e-3, "γ''({psi}) {s} vs FD {s_fd}");
            }
        }
    }

    #[test]
    fn derivative_order_capped() {
        let v = VorticityFunction::Zero;
        assert!(matches!(
            v.eval_gamma(0.0, 3),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn extrema_of_negative_vorticity_sit_at_ends() {
        // γ ≤ 0 makes Γ decreasing in p: max at p0, min 0 at the surface.
        let v = VorticityFunction::Constant { omega0: -1.0 };
        let e = v.big_gamma_extrema(-1.0).unwrap();
        assert!((e.max - 1.0).abs() < 1e-12 && (e.argmax + 1.0).abs() < 1e-12);
        assert!(e.min.abs() < 1e-12 && e.argmin.abs() < 1e-12);
    }

    #[test]
    fn interior_extremum_located() {
        // γ(ψ) = ψ - 0.5 changes sign, so Γ(p) = -p²/2 - p/2 peaks at p = -1/2.
        let v = VorticityFunction::Affine { a: 1.0, b: -0.5 };
        let e = v.big_gamma_extrema(-1.0).unwrap();
        assert!((e.argmax + 0.5).abs() < 1e-8, "argmax {}", e.argmax);
        assert!((e.max - 0.125).abs() < 1e-10, "max {}", e.max);
    }

    #[test]
    fn hypothesis_flags() {
        let strict = VorticityFunction::Constant { omega0: -1.0 }
            .hypothesis_report(-1.0)
            .unwrap();
        assert!(strict.strictly_negative && strict.weakly_negative);

        let irrotational = VorticityFunction::Zero.hypothesis_report(-1.0).unwrap();
        assert!(!irrotational.strictly_negative && irrotational.weakly_negative);

        let positive = VorticityFunction::Constant { omega0: 0.5 }
            .hypothesis_report(-1.0)
            .unwrap();
        assert!(!positive.strictly_negative && !positive.weakly_negative);

        // Touches zero at ψ = 0 only: weakly but not strictly negative.
        let touching = VorticityFunction::Affine { a: -1.0, b: 0.0 }
            .hypothesis_report(-1.0)
            .unwrap();
        assert!(!touching.strictly_negative && touching.weakly_negative);
    }

    #[test]
    fn tabulated_validation() {
        assert!(VorticityFunction::tabulated(vec![0.0, 1.0], vec![-1.0, -1.0]).is_err());
        assert!(
            VorticityFunction::tabulated(vec![0.0, 0.1, 0.3, 0.4], vec![-1.0; 4]).is_err(),
            "non-uniform spacing must be rejected"
        );
        let v = VorticityFunction::tabulated(vec![0.0, 0.25, 0.5, 0.75], vec![-1.0; 4]).unwrap();
        assert_eq!(v.gamma(0.4).unwrap(), -1.0);
        assert!(v.gamma(2.0).is_err(), "outside the sampled ψ range");
    }

    #[test]
    fn serde_round_trip() {
        let s = r#"{"kind":"constant","omega0":-1.0}"#;
        let v: VorticityFunction = serde_json::from_str(s).unwrap();
        assert_eq!(v.gamma(0.3).unwrap(), -1.0);
        let back = serde_json::to_string(&v).unwrap();
        let v2: VorticityFunction = serde_json::from_str(&back).unwrap();
        assert_eq!(v2.gamma(0.0).unwrap(), -1.0);
    }
}
