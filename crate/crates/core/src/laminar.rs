//! Laminar (parallel, flat-surface) shear flows and the critical Bernoulli level.
//!
//! For a prescribed vorticity distribution the flat-surface background flow is fully
//! determined by the Bernoulli-type constant λ: the height of the streamline with
//! pressure-side label p is
//!
//! ```text
//! H(p) = ∫_{p0}^{p} (λ + 2Γ(s))^{-1/2} ds,       H(p0) = 0 (bed),
//! ```
//!
//! so the depth is d(λ) = H(0). Solitary waves bifurcate where
//!
//! ```text
//! F(λ) = ∫_{p0}^{0} (λ + 2Γ(p))^{-3/2} dp = 1/g,
//! ```
//!
//! which has a unique root λ_c because F decreases strictly from +∞ to 0 on
//! (-2 min Γ, ∞). Waves are built for λ slightly above λ_c and decay to the laminar
//! flow with the *same* λ.

use crate::error::{Error, Result};
use crate::num::interp::HermiteTable;
use crate::num::{quad, root};
use crate::vorticity::VorticityFunction;

/// Nodes in the tabulated height profile.
const PROFILE_NODES: usize = 2049;
/// Absolute accuracy demanded of `F(λ_c) - 1/g` at the root.
const CRITICAL_FTOL: f64 = 1e-12;

fn bernoulli_argument(vf: &VorticityFunction, lambda: f64, p: f64) -> Result<f64> {
    Ok(lambda + 2.0 * vf.big_gamma(p)?)
}

/// F(λ) for the bifurcation equation, by adaptive quadrature.
pub fn dispersion_integral(vf: &VorticityFunction, p0: f64, lambda: f64) -> Result<f64> {
    let argmin = vf.big_gamma_extrema(p0)?.argmin;
    quad::integrate(
        |p| {
            bernoulli_argument(vf, lambda, p)
                .map(|a| a.powf(-1.5))
                .unwrap_or(f64::NAN)
        },
        p0,
        0.0,
        1e-14,
        1e-13,
        &[argmin],
    )
}

/// Solves F(λ) = 1/g for the critical Bernoulli level λ_c.
pub fn critical_lambda(vf: &VorticityFunction, p0: f64, g: f64) -> Result<f64> {
    if !(p0 < 0.0) || !(g > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bed streamline value {p0}, gravity {g}"
        )));
    }
    let extrema = vf.big_gamma_extrema(p0)?;
    let lambda_min = -2.0 * extrema.min;
    let scale = (g * p0.abs()).powf(2.0 / 3.0).max(1.0).max(2.0 * extrema.max.abs());
    let target = 1.0 / g;

    // Lower end: just above the singular edge, where F blows up.
    let mut lo = lambda_min + 1e-8 * scale;
    let mut f_lo = dispersion_integral(vf, p0, lo)?;
    for _ in 0..3 {
        if f_lo > target {
            break;
        }
        lo = lambda_min + (lo - lambda_min) / 100.0;
        f_lo = dispersion_integral(vf, p0, lo)?;
    }
    if f_lo <= target {
        return Err(Error::NoRoot(format!(
            "dispersion integral stays below 1/g={target:.6e} near its singular edge"
        )));
    }
    // Upper end: grow geometrically until F drops below the target.
    let mut hi = (2.0 * scale).max(lo * 2.0);
    let mut grow = 0;
    while dispersion_integral(vf, p0, hi)? >= target {
        hi *= 4.0;
        grow += 1;
        if grow > 40 {
            return Err(Error::NoRoot(
                "dispersion integral never drops below 1/g".into(),
            ));
        }
    }

    let lambda_c = root::bracketed(
        |lam| {
            dispersion_integral(vf, p0, lam)
                .map(|f| f - target)
                .unwrap_or(f64::NAN)
        },
        lo,
        hi,
        CRITICAL_FTOL * 0.1,
        200,
    )?;
    let residual = (dispersion_integral(vf, p0, lambda_c)? - target).abs();
    if residual > CRITICAL_FTOL {
        return Err(Error::Convergence {
            context: "critical Bernoulli level".into(),
            residual,
            iterations: 200,
        });
    }
    Ok(lambda_c)
}

/// Depth d(λ) of the laminar flow, without building the whole profile.
pub fn depth(vf: &VorticityFunction, p0: f64, lambda: f64) -> Result<f64> {
    let argmin = vf.big_gamma_extrema(p0)?.argmin;
    quad::integrate(
        |p| {
            bernoulli_argument(vf, lambda, p)
                .map(|a| 1.0 / a.sqrt())
                .unwrap_or(f64::NAN)
        },
        p0,
        0.0,
        1e-14,
        1e-13,
        &[argmin],
    )
}

/// A laminar shear flow at Bernoulli level λ: bed at y = -d, flat surface at y = 0.
#[derive(Debug, Clone)]
pub struct LaminarFlow {
    pub lambda: f64,
    pub depth: f64,
    pub p0: f64,
    pub g: f64,
    /// H(p) on a uniform p grid with exact nodal slopes (λ+2Γ)^{-1/2}.
    height: HermiteTable,
    vf: VorticityFunction,
}

impl LaminarFlow {
    pub fn build(vf: &VorticityFunction, p0: f64, g: f64, lambda: f64) -> Result<Self> {
        if !(p0 < 0.0) || !(g > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "bed streamline value {p0}, gravity {g}"
            )));
        }
        let extrema = vf.big_gamma_extrema(p0)?;
        if lambda + 2.0 * extrema.min <= 1e-10 * lambda.abs().max(1.0) {
            return Err(Error::Domain(format!(
                "Bernoulli level {lambda} touches the singular edge {}",
                -2.0 * extrema.min
            )));
        }
        let n = PROFILE_NODES;
        let dp = -p0 / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|k| p0 + dp * k as f64).collect();
        let integrand = |p: f64| {
            bernoulli_argument(vf, lambda, p)
                .map(|a| 1.0 / a.sqrt())
                .unwrap_or(f64::NAN)
        };
        let values = quad::cumulative_on_grid(integrand, &grid);
        let slopes: Vec<f64> = grid
            .iter()
            .map(|&p| integrand(p))
            .collect();
        let height = HermiteTable::new(p0, dp, values.clone(), slopes)?;
        Ok(Self {
            lambda,
            depth: values[n - 1],
            p0,
            g,
            height,
            vf: vf.clone(),
        })
    }

    /// Height above the bed of the streamline labelled p: H(p) ∈ [0, d].
    pub fn height_above_bed(&self, p: f64) -> Result<f64> {
        self.height.eval(p)
    }

    /// Inverse of [`Self::height_above_bed`]: the label of the streamline at height
    /// `y + d` above the bed, for y ∈ [-d, 0].
    pub fn pressure_at(&self, y: f64) -> Result<f64> {
        self.height.invert(y + self.depth)
    }

    /// Wave-frame flow speed √(λ + 2Γ(p)) on the streamline at height y.
    ///
    /// The still-frame horizontal velocity there is `c - relative_speed(y)`.
    pub fn relative_speed(&self, y: f64) -> Result<f64> {
        let p = self.pressure_at(y)?;
        Ok(bernoulli_argument(&self.vf, self.lambda, p)?.sqrt())
    }

    /// Relative speed at the surface, √λ.
    pub fn surface_speed(&self) -> f64 {
        self.lambda.sqrt()
    }

    /// Relative speed at the bed, √(λ + 2Γ(p0)).
    pub fn bed_speed(&self) -> Result<f64> {
        Ok(bernoulli_argument(&self.vf, self.lambda, self.p0)?.sqrt())
    }

    /// Height y* where the still-frame velocity c - relative_speed changes sign, if the
    /// sign actually changes across the depth. For non-positive vorticity the relative
    /// speed decreases with height, so the root is unique when it exists.
    pub fn still_level(&self, c: f64) -> Result<Option<f64>> {
        let f_bed = c - self.bed_speed()?;
        let f_surf = c - self.surface_speed();
        if f_bed == 0.0 {
            return Ok(Some(-self.depth));
        }
        if f_surf == 0.0 {
            return Ok(Some(0.0));
        }
        if f_bed.signum() == f_surf.signum() {
            return Ok(None);
        }
        let y = root::bisect(
            |y| c - self.relative_speed(y).unwrap_or(f64::NAN),
            -self.depth,
            0.0,
            1e-13 * self.depth.max(1.0),
        )?;
        Ok(Some(y))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 9.8;
    const P0: f64 = -1.0;

    #[test]
    fn irrotational_critical_level_closed_form() {
        let vf = VorticityFunction::Zero;
        let lc = critical_lambda(&vf, P0, G).unwrap();
        let exact = (G * P0.abs()).powf(2.0 / 3.0);
        assert!(
            (lc - exact).abs() < 1e-10,
            "λ_c {lc} vs closed form {exact}"
        );
    }

    /// Closed-form F for constant vorticity γ ≡ -s (s > 0):
    /// F(λ) = (1/s)(λ^{-1/2} - (λ + 2 s |p0|)^{-1/2}).
    fn constant_dispersion(s: f64, lambda: f64) -> f64 {
        (1.0 / lambda.sqrt() - 1.0 / (lambda + 2.0 * s * P0.abs()).sqrt()) / s
    }

    #[test]
    fn constant_vorticity_critical_level_vs_closed_form() {
        let s = 1.0;
        let vf = VorticityFunction::Constant { omega0: -s };
        let lc = critical_lambda(&vf, P0, G).unwrap();
        // Independent oracle: bisection on the closed-form F.
        let mut lo = 1e-6;
        let mut hi = 100.0;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if constant_dispersion(s, mid) > 1.0 / G {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let oracle = 0.5 * (lo + hi);
        assert!((lc - oracle).abs() < 1e-9, "λ_c {lc} vs oracle {oracle}");
        assert!((dispersion_integral(&vf, P0, lc).unwrap() - 1.0 / G).abs() <= 1e-12);
    }

    #[test]
    fn constant_vorticity_depth_closed_form() {
        // d(λ) = (√(λ + 2 s |p0|) - √λ)/s; at s = 1, λ = 1: √3 - 1.
        let vf = VorticityFunction::Constant { omega0: -1.0 };
        let d = depth(&vf, P0, 1.0).unwrap();
        assert!((d - (3.0f64.sqrt() - 1.0)).abs() < 1e-12, "depth {d}");
    }

    #[test]
    fn irrotational_depth_closed_form() {
        // Γ ≡ 0 so d = |p0| λ^{-1/2}.
        let vf = VorticityFunction::Zero;
        let d = depth(&vf, P0, 4.0).unwrap();
        assert!((d - 0.5).abs() < 1e-13);
    }

    #[test]
    fn profile_matches_pointwise_quadrature() {
        let vf = VorticityFunction::Affine { a: -2.0, b: -1.0 };
        let lc = critical_lambda(&vf, P0, G).unwrap();
        let lam = 1.01 * lc;
        let flow = LaminarFlow::build(&vf, P0, G, lam).unwrap();
        for &p in &[-0.93, -0.5, -0.118, 0.0] {
            let oracle = quad::integrate(
                |s| 1.0 / (lam + 2.0 * (s * s - s)).sqrt(),
                P0,
                p,
                1e-14,
                1e-13,
                &[],
            )
            .unwrap();
            let got = flow.height_above_bed(p).unwrap();
            assert!(
                (got - oracle).abs() < 1e-11,
                "H({p}) = {got} vs quadrature {oracle}"
            );
        }
        assert!((flow.height_above_bed(0.0).unwrap() - flow.depth).abs() < 1e-14);
    }

    #[test]
    fn pressure_height_round_trip() {
        let vf = VorticityFunction::Constant { omega0: -1.0 };
        let flow = LaminarFlow::build(&vf, P0, G, 4.0).unwrap();
        for &p in &[-1.0, -0.6, -0.25, 0.0] {
            let y = flow.height_above_bed(p).unwrap() - flow.depth;
            let back = flow.pressure_at(y).unwrap();
            assert!((back - p).abs() < 1e-10, "p {p} -> y {y} -> {back}");
        }
    }

    #[test]
    fn relative_speed_profile_constant_vorticity() {
        // With γ ≡ -s the relative speed is linear in height:
        // √(λ+2Γ(p(y))) = √(λ+2s|p0|) - s (y + d).
        let s = 1.0;
        let lam = 4.0;
        let vf = VorticityFunction::Constant { omega0: -s };
        let flow = LaminarFlow::build(&vf, P0, G, lam).unwrap();
        let w_bed = (lam + 2.0 * s * P0.abs()).sqrt();
        for &y in &[-flow.depth, -0.3, -0.1, 0.0] {
            let w = flow.relative_speed(y).unwrap();
            let exact = w_bed - s * (y + flow.depth);
            assert!((w - exact).abs() < 1e-9, "w({y}) {w} vs {exact}");
        }
        assert!((flow.surface_speed() - lam.sqrt()).abs() < 1e-14);
        assert!((flow.bed_speed().unwrap() - w_bed).abs() < 1e-14);
    }

    #[test]
    fn still_level_closed_form() {
        let s = 1.0;
        let lam = 4.0;
        let vf = VorticityFunction::Constant { omega0: -s };
        let flow = LaminarFlow::build(&vf, P0, G, lam).unwrap();
        let w_bed = flow.bed_speed().unwrap();
        let c = 0.5 * (flow.surface_speed() + w_bed);
        let y_star = flow.still_level(c).unwrap().expect("sign change");
        let exact = (w_bed - c) / s - flow.depth;
        assert!((y_star - exact).abs() < 1e-10, "y* {y_star} vs {exact}");
        // No reversal when c clears the whole profile.
        assert!(flow.still_level(w_bed + 0.1).unwrap().is_none());
        assert!(flow.still_level(flow.surface_speed() - 0.1).unwrap().is_none());
    }

    #[test]
    fn singular_level_rejected() {
        let vf = VorticityFunction::Zero;
        assert!(matches!(
            LaminarFlow::build(&vf, P0, G, 0.0),
            Err(Error::Domain(_))
        ));
    }
}
