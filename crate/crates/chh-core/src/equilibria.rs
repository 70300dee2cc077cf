//! Equilibrium velocity distributions f0(p), their derivatives, critical
//! points, symmetry detection, and the one-parameter families used by the
//! bifurcation searches.
//!
//! Analytic kinds evaluate f0, f0', f0'' from closed forms; tabulated kinds
//! go through the shape-preserving interpolant in [`crate::interp`]. All
//! values are immutable after construction and the operations are pure.

use crate::error::{Error, Result};
use crate::interp::Pchip;
use serde::{Deserialize, Serialize};

/// Truncation: analytic windows extend this many widths past each component
/// center, which puts the neglected Gaussian tail mass below 1e-12.
const TAIL_SIGMAS: f64 = 6.0;

/// |f0'| threshold (in p) for critical-point location.
pub const TOL_ROOT: f64 = 1e-10;

/// Relative |f0''| threshold below which a critical point counts as
/// inflection-degenerate.
pub const TOL_DEGENERATE: f64 = 1e-8;

/// Anything that looks like a velocity distribution to the contour and
/// dispersion machinery: a density with two derivatives on a finite window.
///
/// Implemented by [`EquilibriumProfile`] and by the perturbed profiles in
/// [`crate::structural`], so the whole Penrose pipeline can be reused
/// end-to-end after a perturbation.
pub trait Distribution: Sync {
    fn density(&self, p: f64) -> f64;
    fn deriv1(&self, p: f64) -> f64;
    fn deriv2(&self, p: f64) -> f64;
    /// Finite window outside of which the density is treated as zero.
    fn window(&self) -> (f64, f64);
    /// Interior points where the density is not smooth (quadrature panel cuts).
    fn knots(&self) -> Vec<f64> {
        Vec::new()
    }
    /// Bound on the mass ignored beyond the window.
    fn tail_bound(&self) -> f64 {
        0.0
    }
}

/// One Gaussian component amplitude * exp(-((p-center)/width)^2).
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct GaussianComponent {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl GaussianComponent {
    fn value(&self, p: f64, order: u8) -> f64 {
        let z = (p - self.center) / self.width;
        let g = self.amplitude * (-z * z).exp();
        match order {
            0 => g,
            1 => -2.0 * z / self.width * g,
            _ => (4.0 * z * z - 2.0) / (self.width * self.width) * g,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileKind {
    Maxwellian {
        center: f64,
        width: f64,
        amplitude: f64,
    },
    BiMaxwellian {
        separation: f64,
        width: f64,
        amplitude: f64,
    },
    /// Sum of Gaussian humps; the representation behind constructed families
    /// (shoulders, asymmetric humps).
    GaussianMix { components: Vec<GaussianComponent> },
    Tabulated {
        grid: Vec<f64>,
        values: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        derivatives: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone)]
pub struct EquilibriumProfile {
    kind: ProfileKind,
    window: (f64, f64),
    /// Interpolants for tabulated kinds (values, optional derivative table).
    value_spline: Option<Pchip>,
    deriv_spline: Option<Pchip>,
}

impl EquilibriumProfile {
    pub fn maxwellian(center: f64, width: f64, amplitude: f64) -> Result<Self> {
        Self::gaussian_mix(vec![GaussianComponent {
            center,
            width,
            amplitude,
        }])
        .map(|mut p| {
            p.kind = ProfileKind::Maxwellian {
                center,
                width,
                amplitude,
            };
            p
        })
    }

    pub fn bi_maxwellian(separation: f64, width: f64, amplitude: f64) -> Result<Self> {
        Self::gaussian_mix(vec![
            GaussianComponent {
                center: separation,
                width,
                amplitude,
            },
            GaussianComponent {
                center: -separation,
                width,
                amplitude,
            },
        ])
        .map(|mut p| {
            p.kind = ProfileKind::BiMaxwellian {
                separation,
                width,
                amplitude,
            };
            p
        })
    }

    pub fn gaussian_mix(components: Vec<GaussianComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidInput("empty Gaussian mix".into()));
        }
        for c in &components {
            if !(c.width > 0.0) || !(c.amplitude >= 0.0) || !c.center.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "bad Gaussian component {c:?}: need width > 0, amplitude >= 0"
                )));
            }
        }
        let lo = components
            .iter()
            .map(|c| c.center - TAIL_SIGMAS * c.width)
            .fold(f64::INFINITY, f64::min);
        let hi = components
            .iter()
            .map(|c| c.center + TAIL_SIGMAS * c.width)
            .fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            kind: ProfileKind::GaussianMix { components },
            window: (lo, hi),
            value_spline: None,
            deriv_spline: None,
        })
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>, derivatives: Option<Vec<f64>>) -> Result<Self> {
        if values.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(
                "tabulated values must be finite and non-negative".into(),
            ));
        }
        let value_spline = Pchip::new(grid.clone(), values.clone())?;
        let deriv_spline = match &derivatives {
            Some(d) => Some(Pchip::new(grid.clone(), d.clone())?),
            None => None,
        };
        let window = (grid[0], *grid.last().unwrap());
        Ok(Self {
            kind: ProfileKind::Tabulated {
                grid,
                values,
                derivatives,
            },
            window,
            value_spline: Some(value_spline),
            deriv_spline,
        })
    }

    pub fn from_kind(kind: ProfileKind) -> Result<Self> {
        match kind {
            ProfileKind::Maxwellian {
                center,
                width,
                amplitude,
            } => Self::maxwellian(center, width, amplitude),
            ProfileKind::BiMaxwellian {
                separation,
                width,
                amplitude,
            } => Self::bi_maxwellian(separation, width, amplitude),
            ProfileKind::GaussianMix { components } => Self::gaussian_mix(components),
            ProfileKind::Tabulated {
                grid,
                values,
                derivatives,
            } => Self::tabulated(grid, values, derivatives),
        }
    }

    pub fn kind(&self) -> &ProfileKind {
        &self.kind
    }

    pub fn domain(&self) -> (f64, f64) {
        self.window
    }

    pub fn in_domain(&self, p: f64) -> bool {
        p >= self.window.0 && p <= self.window.1
    }

    fn components(&self) -> Option<Vec<GaussianComponent>> {
        match &self.kind {
            ProfileKind::Maxwellian {
                center,
                width,
                amplitude,
            } => Some(vec![GaussianComponent {
                center: *center,
                width: *width,
                amplitude: *amplitude,
            }]),
            ProfileKind::BiMaxwellian {
                separation,
                width,
                amplitude,
            } => Some(vec![
                GaussianComponent {
                    center: *separation,
                    width: *width,
                    amplitude: *amplitude,
                },
                GaussianComponent {
                    center: -*separation,
                    width: *width,
                    amplitude: *amplitude,
                },
            ]),
            ProfileKind::GaussianMix { components } => Some(components.clone()),
            ProfileKind::Tabulated { .. } => None,
        }
    }

    /// f0, f0' or f0'' at p. Outside the domain the profile is identically
    /// zero (tail truncation); check [`Self::in_domain`] to detect it.
    pub fn evaluate(&self, p: f64, order: u8) -> Result<f64> {
        if order > 2 {
            return Err(Error::UnsupportedOrder {
                order,
                kind: "any".into(),
            });
        }
        if !self.in_domain(p) {
            return Ok(0.0);
        }
        match &self.kind {
            ProfileKind::Tabulated { derivatives, .. } => {
                let vs = self.value_spline.as_ref().unwrap();
                match (order, derivatives) {
                    (0, _) => Ok(vs.eval(p)),
                    (1, Some(_)) => Ok(self.deriv_spline.as_ref().unwrap().eval(p)),
                    (1, None) => Ok(vs.deriv(p)),
                    (2, Some(_)) => Ok(self.deriv_spline.as_ref().unwrap().deriv(p)),
                    (2, None) => Err(Error::UnsupportedOrder {
                        order: 2,
                        kind: "tabulated (no derivative table)".into(),
                    }),
                    _ => unreachable!(),
                }
            }
            _ => {
                let comps = self.components().unwrap();
                Ok(comps.iter().map(|c| c.value(p, order)).sum())
            }
        }
    }

    /// Galilean shift: the same distribution viewed from a frame moving at
    /// -shift (every feature moves by +shift).
    pub fn shifted(&self, shift: f64) -> Result<Self> {
        match &self.kind {
            ProfileKind::Tabulated {
                grid,
                values,
                derivatives,
            } => Self::tabulated(
                grid.iter().map(|p| p + shift).collect(),
                values.clone(),
                derivatives.clone(),
            ),
            _ => {
                let comps = self
                    .components()
                    .unwrap()
                    .into_iter()
                    .map(|mut c| {
                        c.center += shift;
                        c
                    })
                    .collect();
                Self::gaussian_mix(comps)
            }
        }
    }

    /// Trapezoid mass over the window (used by validity checks).
    pub fn mass(&self, n: usize) -> f64 {
        let (a, b) = self.window;
        let h = (b - a) / (n - 1) as f64;
        let mut s = 0.0;
        for i in 0..n {
            let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
            s += w * self.density(a + i as f64 * h);
        }
        s * h
    }
}

impl Distribution for EquilibriumProfile {
    fn density(&self, p: f64) -> f64 {
        self.evaluate(p, 0).unwrap_or(0.0)
    }

    fn deriv1(&self, p: f64) -> f64 {
        self.evaluate(p, 1).unwrap_or(0.0)
    }

    fn deriv2(&self, p: f64) -> f64 {
        // For derivative-less tabulated kinds the public `evaluate` refuses
        // order 2; internally the interpolant's curvature is still the best
        // available classifier for crossing types.
        match self.evaluate(p, 2) {
            Ok(v) => v,
            Err(_) => self
                .value_spline
                .as_ref()
                .map(|s| s.deriv2(p))
                .unwrap_or(0.0),
        }
    }

    fn window(&self) -> (f64, f64) {
        self.window
    }

    fn knots(&self) -> Vec<f64> {
        match &self.kind {
            ProfileKind::Tabulated { grid, .. } => grid.clone(),
            _ => Vec::new(),
        }
    }

    fn tail_bound(&self) -> f64 {
        match &self.kind {
            ProfileKind::Tabulated { .. } => 0.0,
            _ => 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalKind {
    Maximum,
    Minimum,
    InflectionDegenerate,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalPoint {
    pub location: f64,
    #[serde(rename = "type")]
    pub kind: CriticalKind,
    pub second_derivative: f64,
}

/// All transverse zeros of f0' on the window, located by bracketing on a
/// fine sample grid followed by bisection, classified by curvature.
pub fn critical_points<D: Distribution + ?Sized>(profile: &D) -> Vec<CriticalPoint> {
    critical_points_sampled(profile, 4001)
}

pub fn critical_points_sampled<D: Distribution + ?Sized>(
    profile: &D,
    samples: usize,
) -> Vec<CriticalPoint> {
    let (a, b) = profile.window();
    let mut pts = Vec::new();
    // Merge profile knots into the scan grid so piecewise kinks are hit.
    let mut grid: Vec<f64> = (0..samples)
        .map(|i| a + (b - a) * i as f64 / (samples - 1) as f64)
        .collect();
    for k in profile.knots() {
        if k > a && k < b {
            grid.push(k);
        }
    }
    grid.sort_by(|x, y| x.partial_cmp(y).unwrap());
    grid.dedup();

    // Curvature scale for the degeneracy threshold.
    let d2_scale = grid
        .iter()
        .map(|&p| profile.deriv2(p).abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);

    let mut prev_p = grid[0];
    let mut prev_v = profile.deriv1(prev_p);
    for &p in &grid[1..] {
        let v = profile.deriv1(p);
        if prev_v == 0.0 {
            // Exact node hit: record if it is an isolated zero.
            if v != 0.0 {
                push_point(profile, &mut pts, prev_p, d2_scale);
            }
        } else if prev_v * v < 0.0 {
            let root = bisect(|x| profile.deriv1(x), prev_p, p);
            push_point(profile, &mut pts, root, d2_scale);
        }
        prev_p = p;
        prev_v = v;
    }
    pts
}

fn push_point<D: Distribution + ?Sized>(
    profile: &D,
    pts: &mut Vec<CriticalPoint>,
    root: f64,
    d2_scale: f64,
) {
    if let Some(last) = pts.last() {
        if (root - last.location).abs() < 10.0 * TOL_ROOT {
            return;
        }
    }
    let d2 = profile.deriv2(root);
    let kind = if d2.abs() < TOL_DEGENERATE * d2_scale {
        CriticalKind::InflectionDegenerate
    } else if d2 < 0.0 {
        CriticalKind::Maximum
    } else {
        CriticalKind::Minimum
    };
    pts.push(CriticalPoint {
        location: root,
        kind,
        second_derivative: d2,
    });
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = f(lo);
    for _ in 0..200 {
        if hi - lo < TOL_ROOT {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if flo * fm < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    0.5 * (lo + hi)
}

/// True iff sup over the sample grid of |f0(p) - f0(-p)| < tol.
pub fn is_reflection_symmetric(profile: &EquilibriumProfile, tol: f64) -> bool {
    let (a, b) = profile.domain();
    let half = a.abs().min(b.abs()).min(b.max(-a));
    let n = 2001;
    (0..n).all(|i| {
        let p = half * i as f64 / (n - 1) as f64;
        (profile.density(p) - profile.density(-p)).abs() < tol
    })
}

/// One-parameter families f_eta used by the critical-state searches.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ProfileFamily {
    /// eta = hump separation; symmetric two-hump profile.
    BiMaxwellianSeparation { width: f64, amplitude: f64 },
    /// eta = shoulder amplitude on the decaying flank of a Maxwellian:
    /// f_eta = exp(-p^2) + eta * exp(-((p-center)/width)^2).
    MaxwellianShoulder { center: f64, width: f64 },
    /// eta = amplitude imbalance of the right hump of a two-hump profile;
    /// breaks reflection symmetry while keeping the valley.
    AsymmetricBiMaxwellian {
        separation: f64,
        width: f64,
        amplitude: f64,
    },
}

impl ProfileFamily {
    pub fn at(&self, eta: f64) -> Result<EquilibriumProfile> {
        match *self {
            ProfileFamily::BiMaxwellianSeparation { width, amplitude } => {
                EquilibriumProfile::bi_maxwellian(eta, width, amplitude)
            }
            ProfileFamily::MaxwellianShoulder { center, width } => {
                EquilibriumProfile::gaussian_mix(vec![
                    GaussianComponent {
                        center: 0.0,
                        width: 1.0,
                        amplitude: 1.0,
                    },
                    GaussianComponent {
                        center,
                        width,
                        amplitude: eta,
                    },
                ])
            }
            ProfileFamily::AsymmetricBiMaxwellian {
                separation,
                width,
                amplitude,
            } => EquilibriumProfile::gaussian_mix(vec![
                GaussianComponent {
                    center: separation,
                    width,
                    amplitude: amplitude * (1.0 + eta),
                },
                GaussianComponent {
                    center: -separation,
                    width,
                    amplitude,
                },
            ]),
        }
    }
}
