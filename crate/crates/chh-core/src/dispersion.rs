//! Dispersion function off the real axis, root counting by the argument
//! principle, Newton refinement, eigenvalue-multiplet classification, and
//! the marginality estimates.
//!
//! Off the axis no principal value is needed:
//!
//!   eps(k, omega) = 1 + (1/k^2) \int f0'(p) / (u - p) dp,   u = omega/k,
//!
//! restricted to Im(omega) > 0; the real-axis limit reproduces
//! eps_R + i eps_I of the contour module through the Plemelj jump, which is
//! the cross-module consistency oracle in the tests.

use crate::argwind;
use crate::equilibria::Distribution;
use crate::error::{Error, Result};
use crate::hilbert::HilbertOpts;
use crate::penrose::{eps_i_at, eps_r_at, eps_r_slope};
use crate::quad::integrate_complex;
use num_complex::Complex64;
use serde::Serialize;

/// Residual threshold for a refined root.
pub const TOL_ROOT_RESIDUAL: f64 = 1e-10;

/// Minimum distance of a counting rectangle from the real axis.
pub const BOUNDARY_MARGIN: f64 = 1e-4;

/// |eps| on a rectangle boundary below this triggers a degenerate-region
/// error (root too close to the boundary).
pub const BOUNDARY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy)]
pub struct DispersionOpts {
    /// Absolute tolerance for the off-axis quadrature.
    pub quad_tol: f64,
    /// Boundary samples per rectangle edge before adaptive refinement.
    pub edge_samples: usize,
}

impl Default for DispersionOpts {
    fn default() -> Self {
        Self {
            quad_tol: 1e-9,
            edge_samples: 64,
        }
    }
}

/// eps(k, omega) for Im(omega) > 0.
pub fn epsilon_complex<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    omega: Complex64,
    opts: &DispersionOpts,
) -> Result<Complex64> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("wavenumber k = {k} must be positive")));
    }
    if omega.im <= 0.0 {
        return Err(Error::Domain(format!(
            "epsilon_complex requires Im(omega) > 0, got {omega}; real-axis values \
             come from the contour module's limiting formula"
        )));
    }
    let u = omega / k;
    let (a, b) = profile.window();
    // Panel cut at the resonance's real part keeps the Lorentzian peak on a
    // panel edge.
    let mut knots = profile.knots();
    knots.push(u.re);
    let r = integrate_complex(
        |p| Complex64::new(profile.deriv1(p), 0.0) / (u - p),
        a,
        b,
        opts.quad_tol,
        &knots,
    )?;
    Ok(1.0 + r.value / (k * k))
}

/// Numerical eps'(omega) by central differences along the real direction
/// (eps is analytic, so any direction gives the derivative).
fn epsilon_prime<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    omega: Complex64,
    opts: &DispersionOpts,
) -> Result<Complex64> {
    let h = 1e-6 * omega.norm().max(1.0);
    let ep = epsilon_complex(profile, k, omega + h, opts)?;
    let em = epsilon_complex(profile, k, omega - h, opts)?;
    Ok((ep - em) / (2.0 * h))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Rectangle {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Rectangle {
    pub fn new(re_lo: f64, re_hi: f64, im_lo: f64, im_hi: f64) -> Result<Self> {
        if !(re_lo < re_hi && im_lo < im_hi) {
            return Err(Error::InvalidInput(format!(
                "degenerate rectangle [{re_lo},{re_hi}]x[{im_lo},{im_hi}]"
            )));
        }
        if im_lo <= 0.0 {
            return Err(Error::Domain(format!(
                "counting rectangle must stay off the real axis (im_lo = {im_lo})"
            )));
        }
        Ok(Self {
            re_lo,
            re_hi,
            im_lo,
            im_hi,
        })
    }

    fn corner(&self, i: usize) -> Complex64 {
        match i % 4 {
            0 => Complex64::new(self.re_lo, self.im_lo),
            1 => Complex64::new(self.re_hi, self.im_lo),
            2 => Complex64::new(self.re_hi, self.im_hi),
            _ => Complex64::new(self.re_lo, self.im_hi),
        }
    }

    fn center(&self) -> Complex64 {
        Complex64::new(
            0.5 * (self.re_lo + self.re_hi),
            0.5 * (self.im_lo + self.im_hi),
        )
    }

    fn contains(&self, z: Complex64) -> bool {
        z.re >= self.re_lo && z.re <= self.re_hi && z.im >= self.im_lo && z.im <= self.im_hi
    }

    fn quadrants(&self) -> [Rectangle; 4] {
        let cm = self.center();
        [
            Rectangle {
                re_lo: self.re_lo,
                re_hi: cm.re,
                im_lo: self.im_lo,
                im_hi: cm.im,
            },
            Rectangle {
                re_lo: cm.re,
                re_hi: self.re_hi,
                im_lo: self.im_lo,
                im_hi: cm.im,
            },
            Rectangle {
                re_lo: self.re_lo,
                re_hi: cm.re,
                im_lo: cm.im,
                im_hi: self.im_hi,
            },
            Rectangle {
                re_lo: cm.re,
                re_hi: self.re_hi,
                im_lo: cm.im,
                im_hi: self.im_hi,
            },
        ]
    }

    fn jittered(&self, factor: f64) -> Rectangle {
        let w = self.re_hi - self.re_lo;
        Rectangle {
            re_lo: self.re_lo - 0.5 * (factor - 1.0) * w,
            re_hi: self.re_hi + 0.5 * (factor - 1.0) * w,
            im_lo: self.im_lo / factor,
            im_hi: self.im_hi * factor,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RootCountRegion {
    pub rect: Rectangle,
    pub count: i64,
    /// |accumulated argument/2 pi - count|; the invariant keeps it < 0.05.
    pub arg_defect: f64,
}

/// Zeros of eps inside the rectangle, by accumulating the argument of eps
/// around the boundary.
pub fn count_roots<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    rect: Rectangle,
    opts: &DispersionOpts,
) -> Result<RootCountRegion> {
    let perimeter_point = |t: f64| -> Complex64 {
        // t in [0,4): edge index + fraction, counterclockwise from the
        // bottom-left corner.
        let i = (t.floor() as usize) % 4;
        let s = t - t.floor();
        let a = rect.corner(i);
        let b = rect.corner(i + 1);
        a + (b - a) * s
    };
    let walk = argwind::walk(
        |t| epsilon_complex(profile, k, perimeter_point(t), opts),
        0.0,
        4.0,
        4 * opts.edge_samples,
        true,
    )?;
    if walk.min_abs < BOUNDARY_TOL {
        let at = perimeter_point(walk.min_at);
        return Err(Error::RegionDegenerate {
            at: format!("omega = {at}"),
            eps_abs: walk.min_abs,
        });
    }
    let w = walk.total_arg / (2.0 * std::f64::consts::PI);
    let count = w.round();
    let arg_defect = (w - count).abs();
    if arg_defect > 0.05 {
        return Err(Error::AccuracyFailure {
            achieved: arg_defect,
            requested: 0.05,
            context: "argument accumulation around counting rectangle".into(),
        });
    }
    if count < -0.5 {
        return Err(Error::AccuracyFailure {
            achieved: count,
            requested: 0.0,
            context: "negative zero count: quadrature inconsistency".into(),
        });
    }
    Ok(RootCountRegion {
        rect,
        count: count as i64,
        arg_defect,
    })
}

/// `count_roots` with deterministic jitter retries when a root sits too
/// close to the requested boundary.
pub fn count_roots_jittered<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    rect: Rectangle,
    opts: &DispersionOpts,
) -> Result<RootCountRegion> {
    let mut last = None;
    for factor in [1.0, 1.1, 0.93, 1.17] {
        match count_roots(profile, k, rect.jittered(factor), opts) {
            Ok(r) => return Ok(r),
            Err(e @ Error::RegionDegenerate { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryClass {
    QuartetMember,
    OctetMember,
    CssPairMember,
    RealEmbedded,
}

#[derive(Debug, Clone, Copy)]
pub struct DispersionRoot {
    pub omega: Complex64,
    pub k: f64,
    pub residual: f64,
    pub multiplicity: i64,
    pub symmetry_class: Option<SymmetryClass>,
}

/// Newton refinement from a seed in the upper half plane.
pub fn refine_root<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    seed: Complex64,
    opts: &DispersionOpts,
) -> Result<DispersionRoot> {
    let mut omega = seed;
    let mut residual = f64::INFINITY;
    for it in 0..80 {
        if omega.norm() > 1e3 * seed.norm().max(1.0) {
            return Err(Error::NoConvergence {
                iterations: it,
                residual,
            });
        }
        let val = epsilon_complex(profile, k, omega, opts)?;
        residual = val.norm();
        if residual < TOL_ROOT_RESIDUAL {
            let multiplicity = multiplicity_of(profile, k, omega, opts).unwrap_or(1);
            return Ok(DispersionRoot {
                omega,
                k,
                residual,
                multiplicity,
                symmetry_class: None,
            });
        }
        let dval = epsilon_prime(profile, k, omega, opts)?;
        if dval.norm() < 1e-14 {
            return Err(Error::NoConvergence {
                iterations: it,
                residual,
            });
        }
        let mut step = val / dval;
        // Keep the iterate in the upper half plane; halve the step if it
        // would tunnel through the axis.
        let mut next = omega - step;
        let mut halvings = 0;
        while next.im <= 0.5 * BOUNDARY_MARGIN && halvings < 50 {
            step *= 0.5;
            next = omega - step;
            halvings += 1;
        }
        omega = next;
    }
    Err(Error::NoConvergence {
        iterations: 80,
        residual,
    })
}

/// Multiplicity from a shrinking-box count around the root.
fn multiplicity_of<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    omega: Complex64,
    opts: &DispersionOpts,
) -> Result<i64> {
    let r = 1e-3 * omega.norm().max(1.0);
    let rect = Rectangle {
        re_lo: omega.re - r,
        re_hi: omega.re + r,
        im_lo: (omega.im - r).max(0.25 * BOUNDARY_MARGIN),
        im_hi: omega.im + r,
    };
    Ok(count_roots_jittered(profile, k, rect, opts)?.count)
}

/// All upper-half-plane roots in the rectangle: adaptive quadtree of
/// counting rectangles until each holds at most one root, then refinement.
pub fn find_roots<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    rect: Rectangle,
    opts: &DispersionOpts,
) -> Result<Vec<DispersionRoot>> {
    let mut roots: Vec<DispersionRoot> = Vec::new();
    let mut stack = vec![rect];
    while let Some(r) = stack.pop() {
        let c = count_roots_jittered(profile, k, r, opts)?;
        match c.count {
            0 => {}
            1 => {
                // Newton's basin may not contain the box center yet; accept
                // only iterates that stay near the counted box, otherwise
                // shrink the box around the root first.
                let margin = 0.2 * (r.re_hi - r.re_lo).max(r.im_hi - r.im_lo);
                let near = Rectangle {
                    re_lo: r.re_lo - margin,
                    re_hi: r.re_hi + margin,
                    im_lo: (r.im_lo - margin).max(0.25 * BOUNDARY_MARGIN),
                    im_hi: r.im_hi + margin,
                };
                match refine_root(profile, k, r.center(), opts) {
                    Ok(root) if near.contains(root.omega) => {
                        if roots.iter().all(|r0| {
                            (r0.omega - root.omega).norm() > 1e-8 * root.omega.norm().max(1.0)
                        }) {
                            roots.push(root);
                        }
                    }
                    _ => {
                        let min_w = 1e-6 * (rect.re_hi - rect.re_lo);
                        if r.re_hi - r.re_lo < min_w {
                            return Err(Error::NoConvergence {
                                iterations: 0,
                                residual: f64::NAN,
                            });
                        }
                        stack.extend_from_slice(&r.quadrants());
                    }
                }
            }
            _ => {
                let min_w = 1e-6 * (rect.re_hi - rect.re_lo);
                if r.re_hi - r.re_lo < min_w {
                    return Err(Error::AccuracyFailure {
                        achieved: c.count as f64,
                        requested: 1.0,
                        context: "cluster of roots below quadtree resolution".into(),
                    });
                }
                stack.extend_from_slice(&r.quadrants());
            }
        }
    }
    roots.sort_by(|a, b| a.omega.re.partial_cmp(&b.omega.re).unwrap());
    Ok(roots)
}

/// Extends a set of upper-half-plane roots for wavenumber k to the full
/// eigenvalue set of the +/-k degree of freedom: conjugates (Hamiltonian
/// pairing) and the -k images omega -> -omega.
pub fn full_spectrum(upper: &[DispersionRoot]) -> Vec<Complex64> {
    let mut all: Vec<Complex64> = Vec::new();
    for r in upper {
        for cand in [r.omega, r.omega.conj(), -r.omega, -r.omega.conj()] {
            if all
                .iter()
                .all(|z| (z - cand).norm() > 1e-9 * cand.norm().max(1.0))
            {
                all.push(cand);
            }
        }
    }
    all.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    all
}

/// Classifies a conjugation-closed root set into the Hamiltonian multiplet
/// taxonomy. `symmetric` marks reflection-symmetric equilibria.
pub fn classify_multiplet(
    roots: &[Complex64],
    symmetric: bool,
    tol: f64,
) -> Result<Vec<(Complex64, SymmetryClass)>> {
    // Conjugate closure is a precondition; violation signals quadrature
    // inconsistency upstream.
    for &z in roots {
        if z.im.abs() > tol
            && !roots
                .iter()
                .any(|&w| (w - z.conj()).norm() < tol * z.norm().max(1.0))
        {
            return Err(Error::SymmetryViolation {
                root: format!("{z}"),
            });
        }
    }
    Ok(roots
        .iter()
        .map(|&z| {
            let class = if z.im.abs() <= tol {
                SymmetryClass::RealEmbedded
            } else if symmetric && z.re.abs() <= tol {
                SymmetryClass::CssPairMember
            } else if symmetric {
                SymmetryClass::OctetMember
            } else {
                SymmetryClass::QuartetMember
            };
            (z, class)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MarginalEstimate {
    /// gamma = -eps_I / (d eps_R / d omega_R) at the eps_R zero.
    Rate(f64),
    /// Numerator and denominator both vanish (degenerate symmetric state).
    Indeterminate,
}

/// Marginality relations at a real frequency where eps_R vanishes.
pub fn marginal_growth_rate<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    omega_r: f64,
    hopts: &HilbertOpts,
) -> Result<MarginalEstimate> {
    let u = omega_r / k;
    let er = eps_r_at(profile, k, u, hopts)?;
    if er.abs() > 1e-4 {
        return Err(Error::Domain(format!(
            "eps_R(k, omega_R) = {er}; marginality applies at the real zero crossing"
        )));
    }
    let ei = eps_i_at(profile, k, u);
    // d eps_R / d omega_R = (1/k) d eps_R / du.
    let der = eps_r_slope(profile, k, u, hopts)? / k;
    let num_small = ei.abs() < 1e-6;
    let den_small = der.abs() < 1e-6;
    match (num_small, den_small) {
        (true, true) => Ok(MarginalEstimate::Indeterminate),
        (false, true) => Err(Error::Domain(format!(
            "pole-like marginality: eps_I = {ei} finite but d eps_R/d omega = {der} vanishes"
        ))),
        _ => Ok(MarginalEstimate::Rate(-ei / der)),
    }
}

/// Locates the real zeros of eps_R(u) on the window (marginality anchors).
pub fn eps_r_zeros<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    n_scan: usize,
    hopts: &HilbertOpts,
) -> Result<Vec<f64>> {
    let (a, b) = profile.window();
    let mut zeros = Vec::new();
    let mut prev_u = a;
    let mut prev_v = eps_r_at(profile, k, prev_u, hopts)?;
    for i in 1..n_scan {
        let u = a + (b - a) * i as f64 / (n_scan - 1) as f64;
        let v = eps_r_at(profile, k, u, hopts)?;
        if prev_v * v < 0.0 {
            let (mut lo, mut hi, mut flo) = (prev_u, u, prev_v);
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                let fm = eps_r_at(profile, k, mid, hopts)?;
                if flo * fm <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                    flo = fm;
                }
                if hi - lo < 1e-12 * (1.0 + mid.abs()) {
                    break;
                }
            }
            zeros.push(0.5 * (lo + hi));
        }
        prev_u = u;
        prev_v = v;
    }
    Ok(zeros)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::EquilibriumProfile;
    use crate::penrose::{self, PenroseOpts};

    fn maxwellian() -> EquilibriumProfile {
        EquilibriumProfile::maxwellian(0.0, 1.0, 1.0).unwrap()
    }

    #[test]
    fn epsilon_tends_to_one_far_away() {
        let f = maxwellian();
        let opts = DispersionOpts::default();
        // eps - 1 ~ -sqrt(pi)/u^2 for the unit-amplitude Maxwellian.
        let e = epsilon_complex(&f, 1.0, Complex64::new(100.0, 5.0), &opts).unwrap();
        assert!((e - 1.0).norm() < 2e-4);
    }

    #[test]
    fn flat_profile_epsilon_is_one() {
        let grid: Vec<f64> = (0..101).map(|i| -5.0 + 0.1 * i as f64).collect();
        let flat =
            EquilibriumProfile::tabulated(grid.clone(), vec![1.0; grid.len()], None).unwrap();
        let e = epsilon_complex(&flat, 1.0, Complex64::new(0.3, 0.2), &DispersionOpts::default())
            .unwrap();
        assert!((e - 1.0).norm() < 1e-6);
    }

    #[test]
    fn lower_half_plane_rejected() {
        let f = maxwellian();
        assert!(matches!(
            epsilon_complex(&f, 1.0, Complex64::new(0.0, -0.1), &DispersionOpts::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn plemelj_limit_matches_contour_values() {
        // eps(k, u k + i 0^+) -> eps_R(u) + i eps_I(u).
        let f = maxwellian();
        let opts = DispersionOpts::default();
        let hopts = HilbertOpts::default();
        for &u in &[0.5, 1.3, 2.0] {
            let e = epsilon_complex(&f, 1.0, Complex64::new(u, 1e-5), &opts).unwrap();
            let er = eps_r_at(&f, 1.0, u, &hopts).unwrap();
            let ei = eps_i_at(&f, 1.0, u);
            assert!(
                (e - Complex64::new(er, ei)).norm() < 1e-3,
                "u = {u}: off-axis {e} vs limit ({er}, {ei})"
            );
        }
    }

    #[test]
    fn maxwellian_rectangle_has_no_roots() {
        let f = maxwellian();
        let rect = Rectangle::new(-3.0, 3.0, 1e-4, 3.0).unwrap();
        let c = count_roots_jittered(&f, 1.0, rect, &DispersionOpts::default()).unwrap();
        assert_eq!(c.count, 0);
        assert!(c.arg_defect < 0.05);
    }

    #[test]
    fn supercritical_bimaxwellian_single_imaginary_root() {
        let f = EquilibriumProfile::bi_maxwellian(1.2, 1.0, 1.0).unwrap();
        let rect = Rectangle::new(-2.0, 2.0, 1e-4, 2.0).unwrap();
        let opts = DispersionOpts::default();
        let roots = find_roots(&f, 0.5, rect, &opts).unwrap();
        assert_eq!(roots.len(), 1);
        let r = roots[0];
        assert!(r.residual < TOL_ROOT_RESIDUAL);
        assert_eq!(r.multiplicity, 1);
        // Symmetric profile: the root is purely imaginary (omega^2 real < 0).
        assert!(r.omega.re.abs() < 1e-8, "Re omega = {}", r.omega.re);
        assert!(r.omega.im > 0.0);

        // Winding consistency with the contour module.
        let w = penrose::winding_number(&f, 0.5, &PenroseOpts::default()).unwrap();
        assert_eq!(w.winding, 1);
    }

    #[test]
    fn newton_preserves_imaginary_axis() {
        let f = EquilibriumProfile::bi_maxwellian(1.2, 1.0, 1.0).unwrap();
        let opts = DispersionOpts::default();
        let r = refine_root(&f, 0.5, Complex64::new(0.0, 0.3), &opts).unwrap();
        assert!(r.omega.re.abs() < 1e-10);
    }

    #[test]
    fn exp_has_no_zeros() {
        // Sanity check of the boundary walker on an entire function with no
        // zeros inside the region.
        let rect = Rectangle::new(-2.0, 2.0, 0.5, 3.0).unwrap();
        let w = argwind::walk(
            |t| {
                let i = (t.floor() as usize) % 4;
                let s = t - t.floor();
                let a = rect.corner(i);
                let b = rect.corner(i + 1);
                Ok((a + (b - a) * s).exp())
            },
            0.0,
            4.0,
            64,
            true,
        )
        .unwrap();
        assert!((w.total_arg / (2.0 * std::f64::consts::PI)).abs() < 1e-9);
    }

    #[test]
    fn classify_css_pair() {
        let g = 0.37;
        let set = vec![Complex64::new(0.0, g), Complex64::new(0.0, -g)];
        let out = classify_multiplet(&set, true, 1e-9).unwrap();
        assert!(out.iter().all(|(_, c)| *c == SymmetryClass::CssPairMember));
    }

    #[test]
    fn classify_quartet_and_octet() {
        let quartet = full_spectrum(&[DispersionRoot {
            omega: Complex64::new(0.4, 0.1),
            k: 0.5,
            residual: 0.0,
            multiplicity: 1,
            symmetry_class: None,
        }]);
        assert_eq!(quartet.len(), 4);
        let out = classify_multiplet(&quartet, false, 1e-9).unwrap();
        assert!(out.iter().all(|(_, c)| *c == SymmetryClass::QuartetMember));
        let out = classify_multiplet(&quartet, true, 1e-9).unwrap();
        assert!(out.iter().all(|(_, c)| *c == SymmetryClass::OctetMember));
    }

    #[test]
    fn conjugate_violation_detected() {
        let set = vec![Complex64::new(0.4, 0.1), Complex64::new(-0.4, 0.1)];
        assert!(matches!(
            classify_multiplet(&set, false, 1e-9),
            Err(Error::SymmetryViolation { .. })
        ));
    }

    #[test]
    fn galilean_shift_moves_roots() {
        let f = EquilibriumProfile::bi_maxwellian(1.2, 1.0, 1.0).unwrap();
        let g = f.shifted(0.5).unwrap();
        let opts = DispersionOpts::default();
        let k = 0.5;
        let r0 = find_roots(&f, k, Rectangle::new(-2.0, 2.0, 1e-4, 2.0).unwrap(), &opts).unwrap();
        let r1 = find_roots(&g, k, Rectangle::new(-2.0, 2.5, 1e-4, 2.0).unwrap(), &opts).unwrap();
        assert_eq!(r0.len(), 1);
        assert_eq!(r1.len(), 1);
        let shift = r1[0].omega - r0[0].omega;
        assert!((shift - Complex64::new(k * 0.5, 0.0)).norm() < 1e-8);
    }
}
