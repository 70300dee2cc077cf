//! The compactly supported destabilizing perturbation chi(p; h, d, eps), its
//! norms and Hilbert transform, perturbed equilibria, the dynamical
//! accessibility gate, and the structural stability verdicts.
//!
//! chi perturbs the *derivative* of the equilibrium: the perturbed profile
//! has f0' + a chi with the piecewise form (in the variable centered at p_c)
//!
//!   h p / eps                   |p| < eps
//!   h sgn(p)                    eps < |p| < d + eps
//!   h + d/2 + eps/2 - p/2       d + eps < p < 2h + d + eps
//!   -h - d/2 - eps/2 - p/2      d + eps < -p < 2h + d + eps
//!   0                           |p| > 2h + d + eps
//!
//! Its W^{1,1} norm is 2h^2 + 2hd + h eps + 4h per unit amplitude: with
//! d = h and eps = e^{-1/h} the norm is arbitrarily small while the PV
//! integral of chi/p stays near 2, which is what moves Penrose crossings by
//! order one at infinitesimal cost.

use crate::equilibria::{critical_points, CriticalPoint, Distribution, EquilibriumProfile};
use crate::error::{Error, Result};
use crate::hilbert::{hilbert_at, HilbertOpts, PvIntegrand};
use crate::penrose::{winding_number, PenroseOpts};
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChiPerturbation {
    pub h: f64,
    pub d: f64,
    pub eps: f64,
    pub center: f64,
    /// Linear multiplier; the piecewise form above is the unit shape.
    pub amplitude: f64,
}

impl ChiPerturbation {
    pub fn new(h: f64, d: f64, eps: f64, center: f64, amplitude: f64) -> Result<Self> {
        if !(h > 0.0 && d > 0.0 && eps > 0.0) {
            return Err(Error::InvalidInput(format!(
                "chi parameters must be positive: h={h}, d={d}, eps={eps}"
            )));
        }
        Ok(Self {
            h,
            d,
            eps,
            center,
            amplitude,
        })
    }

    /// The paper-scaling constructor: d = h, eps = e^{-1/h}.
    pub fn scaled(h: f64, center: f64, amplitude: f64) -> Result<Self> {
        Self::new(h, h, (-1.0 / h).exp(), center, amplitude)
    }

    /// Support half-width around the center.
    pub fn support_radius(&self) -> f64 {
        2.0 * self.h + self.d + self.eps
    }

    /// Exact piecewise evaluation; continuous everywhere.
    pub fn eval(&self, p: f64) -> f64 {
        let x = p - self.center;
        let ax = x.abs();
        let s = x.signum();
        let v = if ax < self.eps {
            self.h * x / self.eps
        } else if ax < self.d + self.eps {
            self.h * s
        } else if ax < self.support_radius() {
            s * (self.h + 0.5 * self.d + 0.5 * self.eps - 0.5 * ax)
        } else {
            0.0
        };
        self.amplitude * v
    }

    /// Piecewise-constant derivative (one-sided value at the kinks). Both
    /// ramps slope -1/2.
    pub fn deriv(&self, p: f64) -> f64 {
        let ax = (p - self.center).abs();
        let v = if ax < self.eps {
            self.h / self.eps
        } else if ax < self.d + self.eps {
            0.0
        } else if ax < self.support_radius() {
            -0.5
        } else {
            0.0
        };
        self.amplitude * v
    }

    /// \int_{-inf}^{p} chi, exact piecewise; vanishes beyond the support
    /// because chi is odd about its center. By that oddness the primitive
    /// is F(|x|) - F(r) with F(y) = \int_0^y chi in centered coordinates.
    pub fn integral(&self, p: f64) -> f64 {
        let x = p - self.center;
        let r = self.support_radius();
        if x.abs() >= r {
            return 0.0;
        }
        let half = |y: f64| -> f64 {
            let y = y.min(r);
            let e = self.eps;
            let de = self.d + self.eps;
            let mut acc = 0.0;
            let y1 = y.min(e);
            acc += 0.5 * self.h / e * y1 * y1;
            if y > e {
                acc += self.h * (y.min(de) - e);
            }
            if y > de {
                let b = self.h + 0.5 * self.d + 0.5 * self.eps;
                acc += b * (y - de) - 0.25 * (y * y - de * de);
            }
            acc
        };
        self.amplitude * (half(x.abs()) - half(r))
    }

    /// Interior kink locations (quadrature panel cuts).
    pub fn knots(&self) -> Vec<f64> {
        let r = self.support_radius();
        let e = self.eps;
        let de = self.d + self.eps;
        vec![
            self.center - r,
            self.center - de,
            self.center - e,
            self.center,
            self.center + e,
            self.center + de,
            self.center + r,
        ]
    }

    /// (W^{1,1} norm, sup norm) from the closed forms
    ///   ||chi||_{1,1} = |a| (2h^2 + 2hd + h eps + 4h),   sup|chi| = |a| h.
    pub fn norms(&self) -> (f64, f64) {
        let a = self.amplitude.abs();
        (
            a * (2.0 * self.h * self.h + 2.0 * self.h * self.d + self.h * self.eps + 4.0 * self.h),
            a * self.h,
        )
    }

    /// Direct quadrature of \int |chi| + \int |chi'|, for cross-checking the
    /// closed form (piecewise exact integration of |chi'|).
    pub fn norms_by_quadrature(&self) -> Result<(f64, f64)> {
        let knots = self.knots();
        let r = self.support_radius();
        let q = crate::quad::integrate(
            |p| self.eval(p).abs(),
            self.center - r,
            self.center + r,
            1e-12,
            &knots,
        )?;
        // |chi'| is piecewise constant; sum |slope| * length exactly.
        let a = self.amplitude.abs();
        let tv = a * (2.0 * self.h + 2.0 * self.h); // 2h from the core, 2h from the ramps
        Ok((q.value + tv, a * self.h))
    }
}

impl PvIntegrand for ChiPerturbation {
    fn eval(&self, p: f64) -> f64 {
        ChiPerturbation::eval(self, p)
    }

    fn window(&self) -> (f64, f64) {
        let r = self.support_radius();
        (self.center - r, self.center + r)
    }

    fn knots(&self) -> Vec<f64> {
        ChiPerturbation::knots(self)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ChiCenterReport {
    /// PV \int chi(p)/(p - p_c) dp = pi H[chi](p_c).
    pub value: f64,
    /// Whether the call was inside the paper-scaling regime h = d,
    /// eps = e^{-1/h} where the 2 + O(h log h) expansion applies.
    pub in_scaling_regime: bool,
    /// value - 2 (meaningful in the scaling regime).
    pub deviation: f64,
    /// C h |log h| band with C = 2.5.
    pub band: f64,
}

/// PV integral of chi at its center. In the scaling regime this is
/// 2 + O(h log h); the quadrature value is returned in any case, flagged
/// when the regime preconditions are violated.
pub fn chi_hilbert_center(chi: &ChiPerturbation, opts: &HilbertOpts) -> Result<ChiCenterReport> {
    let unit = ChiPerturbation {
        amplitude: 1.0,
        ..*chi
    };
    let value_unit = PI * hilbert_at(&unit, chi.center, opts)?;
    let value = chi.amplitude * value_unit;
    let regime = (chi.h - chi.d).abs() < 1e-12 * chi.h.max(chi.d)
        && (chi.eps.ln() + 1.0 / chi.h).abs() < 0.5
        && chi.h < 0.3;
    let deviation = value_unit - 2.0;
    let band = 2.5 * chi.h * chi.h.ln().abs();
    Ok(ChiCenterReport {
        value,
        in_scaling_regime: regime,
        deviation,
        band,
    })
}

/// Exact PV \int chi(p)/(p - p_c) dp from the piecewise-linear closed form:
///   2h ln((d+eps)/eps) + (2h + d + eps) ln((2h+d+eps)/(d+eps))
/// per unit amplitude. Test oracle for the quadrature path.
pub fn chi_center_closed_form(chi: &ChiPerturbation) -> f64 {
    let (h, d, e) = (chi.h, chi.d, chi.eps);
    chi.amplitude * (2.0 * h * ((d + e) / e).ln() + (2.0 * h + d + e) * ((2.0 * h + d + e) / (d + e)).ln())
}

/// An equilibrium whose derivative is f0' + chi; density and curvature
/// follow by exact integration/differentiation of the piecewise form, so
/// the whole contour pipeline runs on it unchanged.
pub struct PerturbedProfile<'a> {
    pub base: &'a EquilibriumProfile,
    pub chi: ChiPerturbation,
}

impl Distribution for PerturbedProfile<'_> {
    fn density(&self, p: f64) -> f64 {
        self.base.density(p) + self.chi.integral(p)
    }

    fn deriv1(&self, p: f64) -> f64 {
        self.base.deriv1(p) + self.chi.eval(p)
    }

    fn deriv2(&self, p: f64) -> f64 {
        self.base.deriv2(p) + self.chi.deriv(p)
    }

    fn window(&self) -> (f64, f64) {
        self.base.window()
    }

    fn knots(&self) -> Vec<f64> {
        let mut k = self.base.knots();
        k.extend(self.chi.knots());
        k
    }

    fn tail_bound(&self) -> f64 {
        self.base.tail_bound()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbVerdict {
    Destabilized,
    StillStable,
    RejectedInaccessible,
}

#[derive(Debug, Clone, Serialize)]
pub struct PerturbationReport {
    pub w11_norm: f64,
    pub sup_norm: f64,
    pub hilbert_at_center: f64,
    pub winding_before: i64,
    pub winding_after: i64,
    pub accessible: bool,
    pub verdict: PerturbVerdict,
}

/// Applies chi to a Penrose-stable profile and recomputes the winding
/// end-to-end. With `require_accessible`, inaccessible perturbations are
/// rejected regardless of the winding outcome.
pub fn destabilize(
    profile: &EquilibriumProfile,
    k: f64,
    chi: &ChiPerturbation,
    require_accessible: bool,
    opts: &PenroseOpts,
) -> Result<PerturbationReport> {
    let before = winding_number(profile, k, opts)?;
    if !before.stable {
        return Err(Error::Domain(format!(
            "profile already unstable at k = {k} (winding {})",
            before.winding
        )));
    }
    let perturbed = PerturbedProfile {
        base: profile,
        chi: *chi,
    };
    let after = winding_number(&perturbed, k, opts)?;
    let accessible = accessibility_gate(profile, chi);
    let (w11, sup) = chi.norms();
    let center = chi_hilbert_center(chi, &opts.hilbert)?;
    let verdict = if require_accessible && !accessible {
        PerturbVerdict::RejectedInaccessible
    } else if after.winding >= 1 {
        PerturbVerdict::Destabilized
    } else {
        PerturbVerdict::StillStable
    };
    Ok(PerturbationReport {
        w11_norm: w11,
        sup_norm: sup,
        hilbert_at_center: center.value,
        winding_before: before.winding,
        winding_after: after.winding,
        accessible,
        verdict,
    })
}

/// Dynamical accessibility gate: monotone symplectic rearrangements cannot
/// change the number or type sequence of critical points, so a perturbation
/// is accepted only if f0' + chi has the same critical structure as f0'.
pub fn accessibility_gate(profile: &EquilibriumProfile, chi: &ChiPerturbation) -> bool {
    if chi.amplitude == 0.0 {
        return true;
    }
    let base_cps = critical_points(profile);
    let perturbed = PerturbedProfile {
        base: profile,
        chi: *chi,
    };
    let pert_cps = critical_points(&perturbed);
    base_cps.len() == pert_cps.len()
        && base_cps
            .iter()
            .zip(&pert_cps)
            .all(|(a, b)| a.kind == b.kind)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DaVerdict {
    StructurallyStableDa,
    StructurallyUnstableDa,
}

#[derive(Debug, Clone, Serialize)]
pub struct KreinReport {
    pub verdict: DaVerdict,
    pub critical_points: Vec<CriticalPoint>,
    /// Interior extrema where an accessible chi flips the winding, with the
    /// found (h, amplitude) witness.
    pub destabilizable: Vec<DestabilizableWitness>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DestabilizableWitness {
    pub location: f64,
    pub h: f64,
    pub amplitude: f64,
    pub w11_norm: f64,
}

/// Krein-like structural verdict under dynamically accessible perturbations:
/// a single critical point is structurally stable; with several, the
/// destabilizable interior extrema are located by searching for an
/// accessible chi that flips the winding. Both extremum types are searched;
/// in practice the witnesses sit at interior valleys.
pub fn krein_like_verdict(
    profile: &EquilibriumProfile,
    k: f64,
    opts: &PenroseOpts,
) -> Result<KreinReport> {
    let before = winding_number(profile, k, opts)?;
    if !before.stable {
        return Err(Error::Domain(format!(
            "verdict requires a Penrose-stable profile (winding {})",
            before.winding
        )));
    }
    let cps = critical_points(profile);
    if cps.len() <= 1 {
        return Ok(KreinReport {
            verdict: DaVerdict::StructurallyStableDa,
            critical_points: cps,
            destabilizable: Vec::new(),
        });
    }
    let mut destabilizable = Vec::new();
    for (i, cp) in cps.iter().enumerate() {
        if i == 0 || i == cps.len() - 1 {
            continue; // only interior extrema can host an accessible flip
        }
        let gap = (cp.location - cps[i - 1].location)
            .abs()
            .min((cps[i + 1].location - cp.location).abs());
        'search: for &h in &[0.05, 0.02, 0.01] {
            if 3.0 * h + (-1.0f64 / h).exp() >= 0.9 * gap {
                continue;
            }
            for &a in &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0, -1.0, -4.0, -16.0] {
                let chi = ChiPerturbation::scaled(h, cp.location, a)?;
                if !accessibility_gate(profile, &chi) {
                    continue;
                }
                match destabilize(profile, k, &chi, true, opts) {
                    Ok(rep) if rep.verdict == PerturbVerdict::Destabilized => {
                        destabilizable.push(DestabilizableWitness {
                            location: cp.location,
                            h,
                            amplitude: a,
                            w11_norm: rep.w11_norm,
                        });
                        break 'search;
                    }
                    Ok(_) => {}
                    Err(Error::CriticalContour { .. }) => {}
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok(KreinReport {
        verdict: DaVerdict::StructurallyUnstableDa,
        critical_points: cps,
        destabilizable,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn chi_std() -> ChiPerturbation {
        ChiPerturbation::new(0.1, 0.1, (-10.0f64).exp(), 0.0, 1.0).unwrap()
    }

    #[test]
    fn piecewise_values() {
        let c = chi_std();
        assert_eq!(c.eval(0.0), 0.0);
        assert_abs_diff_eq!(c.eval(c.eps), 0.1, epsilon = 1e-15);
        assert_abs_diff_eq!(c.eval(-c.eps), -0.1, epsilon = 1e-15);
        assert_eq!(c.eval(c.support_radius() + 0.01), 0.0);
        assert_eq!(c.eval(-(c.support_radius() + 0.01)), 0.0);
        // Plateau and ramp joints are continuous (offset scaled to the
        // piece width: the central slope is h/eps).
        for &x in &[c.eps, c.d + c.eps, c.support_radius()] {
            let dx = 1e-9 * x;
            let lo = c.eval(x - dx);
            let hi = c.eval(x + dx);
            assert!((lo - hi).abs() < 1e-8, "jump at {x}");
        }
        // Odd about the center.
        for &x in &[0.05, 0.15, 0.25, 0.31] {
            assert_abs_diff_eq!(c.eval(x), -c.eval(-x), epsilon = 1e-15);
        }
    }

    #[test]
    fn norm_closed_form() {
        // h=d=0.1, eps=e^-10: 2(0.01) + 2(0.01) + 0.1 e^-10 + 0.4 ~ 0.44.
        let c = chi_std();
        let (w11, sup) = c.norms();
        assert_abs_diff_eq!(
            w11,
            0.02 + 0.02 + 0.1 * (-10.0f64).exp() + 0.4,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(sup, 0.1, epsilon = 1e-15);
        // h -> 0 with d fixed: every term carries h.
        let tiny = ChiPerturbation::new(1e-9, 0.1, 1e-12, 0.0, 1.0).unwrap();
        assert!(tiny.norms().0 < 1e-8);
    }

    #[test]
    fn norm_quadrature_cross_check() {
        for &(h, d) in &[(0.1, 0.1), (0.05, 0.2), (0.3, 0.02)] {
            let c = ChiPerturbation::new(h, d, 1e-6, 0.4, 1.3).unwrap();
            let (w11, _) = c.norms();
            let (w11q, _) = c.norms_by_quadrature().unwrap();
            assert!(
                ((w11 - w11q) / w11).abs() < 1e-6,
                "closed form {w11} vs quadrature {w11q}"
            );
        }
    }

    #[test]
    fn norm_monotonicity() {
        let base = ChiPerturbation::new(0.1, 0.1, 0.01, 0.0, 1.0).unwrap();
        let (w0, _) = base.norms();
        for bump in [
            ChiPerturbation::new(0.12, 0.1, 0.01, 0.0, 1.0).unwrap(),
            ChiPerturbation::new(0.1, 0.12, 0.01, 0.0, 1.0).unwrap(),
            ChiPerturbation::new(0.1, 0.1, 0.012, 0.0, 1.0).unwrap(),
        ] {
            assert!(bump.norms().0 > w0);
        }
    }

    #[test]
    fn integral_is_continuous_and_compact() {
        let c = ChiPerturbation::new(0.07, 0.12, 1e-5, -0.3, 2.0).unwrap();
        let r = c.support_radius();
        // Odd chi integrates to zero across the support.
        assert_abs_diff_eq!(c.integral(c.center + r + 0.1), 0.0, epsilon = 1e-12);
        // Matches direct quadrature at interior points.
        for &x in &[-0.1, 0.0, 0.05, 0.2] {
            let q = crate::quad::integrate(
                |p| c.eval(p),
                c.center - r - 0.01,
                c.center + x,
                1e-11,
                &c.knots(),
            )
            .unwrap();
            assert_abs_diff_eq!(c.integral(c.center + x), q.value, epsilon = 1e-9);
        }
    }

    #[test]
    fn center_value_matches_closed_form() {
        let opts = HilbertOpts::default();
        let c = chi_std();
        let rep = chi_hilbert_center(&c, &opts).unwrap();
        let exact = chi_center_closed_form(&c);
        assert_abs_diff_eq!(rep.value, exact, epsilon = 1e-6);
        assert!(rep.in_scaling_regime);
        // Within the 2 +/- C h |log h| band.
        assert!(rep.deviation.abs() <= rep.band, "{rep:?}");
    }

    #[test]
    fn center_value_approaches_two() {
        let opts = HilbertOpts::default();
        let big = chi_hilbert_center(&ChiPerturbation::scaled(0.1, 0.0, 1.0).unwrap(), &opts)
            .unwrap();
        let small = chi_hilbert_center(&ChiPerturbation::scaled(0.01, 0.0, 1.0).unwrap(), &opts)
            .unwrap();
        assert!(small.deviation.abs() < big.deviation.abs());
        assert!((small.value - 2.0).abs() < 0.1);
        // Amplitude scales linearly.
        let scaled = chi_hilbert_center(&ChiPerturbation::scaled(0.1, 0.0, 3.0).unwrap(), &opts)
            .unwrap();
        assert_abs_diff_eq!(scaled.value, 3.0 * big.value, epsilon = 1e-8);
    }

    #[test]
    fn out_of_regime_flagged_but_valued() {
        let c = ChiPerturbation::new(0.1, 0.3, 1e-2, 0.0, 1.0).unwrap();
        let rep = chi_hilbert_center(&c, &HilbertOpts::default()).unwrap();
        assert!(!rep.in_scaling_regime);
        assert!(rep.value.is_finite());
    }
}
