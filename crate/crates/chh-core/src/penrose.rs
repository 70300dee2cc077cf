//! Penrose contours, winding numbers, continuous-spectrum signatures, and
//! critical states.
//!
//! The contour is the image of the real velocity line under
//! u -> eps_R(u) + i eps_I(u) with
//!
//!   eps_I(u) = -(pi/k^2) f0'(u),      eps_R(u) = 1 + H[eps_I](u).
//!
//! Winding number 0 is spectral stability. The winding is computed by the
//! ray-counting rule (zeros of eps_I with eps_R < 0, signed by f0'') and
//! cross-validated against a discrete total-argument accumulation around the
//! sampled contour; the two must agree or the computation reports an
//! accuracy failure instead of an integer.

use crate::argwind;
use crate::equilibria::{critical_points, CriticalKind, Distribution};
use crate::error::{Error, Result};
use crate::hilbert::{hilbert_at, HilbertOpts, PvIntegrand};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// Contour-origin proximity that marks a critical state.
pub const CRIT_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
pub struct PenroseOpts {
    pub hilbert: HilbertOpts,
    /// Sample count for contour scans and crossing isolation.
    pub grid_n: usize,
    /// |f0''| below this (relative to its scale) marks a tangency.
    pub tangency_rel_tol: f64,
}

impl Default for PenroseOpts {
    fn default() -> Self {
        Self {
            hilbert: HilbertOpts::default(),
            grid_n: 2001,
            tangency_rel_tol: 1e-8,
        }
    }
}

/// eps_I as a PV integrand borrowed from a distribution.
struct EpsI<'a, D: Distribution + ?Sized> {
    profile: &'a D,
    k: f64,
}

impl<D: Distribution + ?Sized> PvIntegrand for EpsI<'_, D> {
    fn eval(&self, p: f64) -> f64 {
        -PI / (self.k * self.k) * self.profile.deriv1(p)
    }

    fn window(&self) -> (f64, f64) {
        self.profile.window()
    }

    fn knots(&self) -> Vec<f64> {
        self.profile.knots()
    }

    fn tail_bound(&self) -> f64 {
        self.profile.tail_bound()
    }
}

/// Pointwise eps_I.
pub fn eps_i_at<D: Distribution + ?Sized>(profile: &D, k: f64, u: f64) -> f64 {
    -PI / (k * k) * profile.deriv1(u)
}

/// Pointwise eps_R = 1 + H[eps_I](u).
pub fn eps_r_at<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    u: f64,
    opts: &HilbertOpts,
) -> Result<f64> {
    let g = EpsI { profile, k };
    Ok(1.0 + hilbert_at(&g, u, opts)?)
}

/// d(eps_R)/du by Richardson-extrapolated central differences.
pub fn eps_r_slope<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    u: f64,
    opts: &HilbertOpts,
) -> Result<f64> {
    let (a, b) = profile.window();
    let h = 1e-3 * (b - a).min(1.0);
    let d = |step: f64| -> Result<f64> {
        Ok((eps_r_at(profile, k, u + step, opts)? - eps_r_at(profile, k, u - step, opts)?)
            / (2.0 * step))
    };
    let d1 = d(h)?;
    let d2 = d(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

#[derive(Debug, Clone, Serialize)]
pub struct DielectricSamples {
    pub k: f64,
    pub u: Vec<f64>,
    pub eps_i: Vec<f64>,
    pub eps_r: Vec<f64>,
}

impl DielectricSamples {
    /// |eps|^2 = eps_R^2 + eps_I^2 at sample i.
    pub fn abs2(&self, i: usize) -> f64 {
        self.eps_r[i] * self.eps_r[i] + self.eps_i[i] * self.eps_i[i]
    }
}

/// Samples the dielectric pair on `u_grid`.
pub fn dielectric<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    u_grid: &[f64],
    opts: &PenroseOpts,
) -> Result<DielectricSamples> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("wavenumber k = {k} must be positive")));
    }
    let g = EpsI { profile, k };
    let mut eps_i = Vec::with_capacity(u_grid.len());
    let mut eps_r = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        eps_i.push(g.eval(u));
        eps_r.push(1.0 + hilbert_at(&g, u, &opts.hilbert)?);
    }
    Ok(DielectricSamples {
        k,
        u: u_grid.to_vec(),
        eps_i,
        eps_r,
    })
}

/// Uniform grid over the profile window.
pub fn default_grid<D: Distribution + ?Sized>(profile: &D, n: usize) -> Vec<f64> {
    let (a, b) = profile.window();
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CrossingKind {
    /// f0'' > 0 at the crossing: the contour passes from the upper to the
    /// lower half plane; contributes +1 when eps_R < 0.
    TransverseUp,
    /// f0'' < 0: lower to upper; contributes -1 when eps_R < 0.
    TransverseDown,
    /// eps_I touches zero without crossing.
    Tangency,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CrossingEvent {
    pub u_c: f64,
    pub kind: CrossingKind,
    pub eps_r_at: f64,
    pub contributes: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct WindingReport {
    pub k: f64,
    pub winding: i64,
    pub stable: bool,
    pub crossings: Vec<CrossingEvent>,
}

/// Ray-counting winding number with total-argument cross-validation.
pub fn winding_number<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    opts: &PenroseOpts,
) -> Result<WindingReport> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("wavenumber k = {k} must be positive")));
    }
    let crossings = classify_crossings(profile, k, opts)?;
    let winding: i64 = crossings.iter().map(|c| c.contributes as i64).sum();

    // Independent check: accumulate the argument of the sampled contour.
    let arg_winding = contour_winding(profile, k, opts)?;
    if arg_winding != winding {
        // One refinement pass with a denser scan before giving up.
        let fine = PenroseOpts {
            grid_n: opts.grid_n * 4,
            ..*opts
        };
        let arg2 = contour_winding(profile, k, &fine)?;
        if arg2 != winding {
            return Err(Error::AccuracyFailure {
                achieved: (arg2 - winding) as f64,
                requested: 0.0,
                context: format!(
                    "winding cross-validation: ray rule {winding}, argument accumulation {arg2}"
                ),
            });
        }
    }

    Ok(WindingReport {
        k,
        winding,
        stable: winding == 0,
        crossings,
    })
}

fn classify_crossings<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    opts: &PenroseOpts,
) -> Result<Vec<CrossingEvent>> {
    let cps = critical_points(profile);
    let d2_scale = cps
        .iter()
        .map(|c| c.second_derivative.abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut events = Vec::with_capacity(cps.len());
    for cp in cps {
        let er = eps_r_at(profile, k, cp.location, &opts.hilbert)?;
        let ei = eps_i_at(profile, k, cp.location);
        let tangent = matches!(cp.kind, CriticalKind::InflectionDegenerate)
            || cp.second_derivative.abs() < opts.tangency_rel_tol * d2_scale;
        let eps_abs = (er * er + ei * ei).sqrt();
        if eps_abs < CRIT_TOL {
            return Err(Error::CriticalContour {
                u_c: cp.location,
                eps_abs,
            });
        }
        let (kind, contributes) = if tangent {
            (CrossingKind::Tangency, 0)
        } else if cp.second_derivative > 0.0 {
            (CrossingKind::TransverseUp, i32::from(er < 0.0))
        } else {
            (CrossingKind::TransverseDown, -i32::from(er < 0.0))
        };
        events.push(CrossingEvent {
            u_c: cp.location,
            kind,
            eps_r_at: er,
            contributes,
        });
    }
    Ok(events)
}

/// Winding by discrete argument accumulation around the sampled contour,
/// closed by the hop from u = +L back to u = -L (both ends sit near 1+0i).
fn contour_winding<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    opts: &PenroseOpts,
) -> Result<i64> {
    let (a, b) = profile.window();
    let g = EpsI { profile, k };
    let walk = argwind::walk(
        |u| {
            Ok(Complex64::new(
                1.0 + hilbert_at(&g, u, &opts.hilbert)?,
                g.eval(u),
            ))
        },
        a,
        b,
        opts.grid_n,
        true,
    )?;
    let w = walk.total_arg / (2.0 * PI);
    let rounded = w.round();
    if (w - rounded).abs() > 0.05 {
        return Err(Error::AccuracyFailure {
            achieved: (w - rounded).abs(),
            requested: 0.05,
            context: "contour argument accumulation did not close to an integer".into(),
        });
    }
    Ok(rounded as i64)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SignatureInterval {
    pub u_lo: f64,
    pub u_hi: f64,
    pub sigma: i8,
}

#[derive(Debug, Clone, Serialize)]
pub struct SignatureProfile {
    /// Signed intervals between consecutive zeros of u * eps_I. Intervals on
    /// either side of a neutral point may carry the same sign (the Maxwellian
    /// has sigma = +1 on both sides of u = 0); a signature *change* is a sign
    /// flip between consecutive intervals.
    pub intervals: Vec<SignatureInterval>,
    pub neutral_points: Vec<f64>,
    /// Galilean shift applied so that f0'(0) = 0 in the working frame;
    /// interval coordinates are in the shifted frame.
    pub frame_shift: f64,
}

impl SignatureProfile {
    pub fn signature_changes(&self) -> usize {
        self.intervals
            .windows(2)
            .filter(|w| w[0].sigma != w[1].sigma)
            .count()
    }
}

/// Partition of the velocity line by sigma(u) = sgn(u * eps_I(u)).
///
/// The signature is frame-dependent: it is defined in frames where
/// f0'(0) = 0. If the profile violates that, the frame is shifted to the
/// critical point nearest the origin first and the shift is reported.
pub fn signature_profile<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    opts: &PenroseOpts,
) -> Result<SignatureProfile> {
    let (a, b) = profile.window();
    let cps = critical_points(profile);

    let d1_scale = {
        let n = 512;
        (0..n)
            .map(|i| profile.deriv1(a + (b - a) * i as f64 / (n - 1) as f64).abs())
            .fold(0.0f64, f64::max)
    };
    if d1_scale == 0.0 {
        // eps_I identically zero: no signed spectrum at all.
        return Ok(SignatureProfile {
            intervals: Vec::new(),
            neutral_points: Vec::new(),
            frame_shift: 0.0,
        });
    }

    let mut shift = 0.0;
    if a < 0.0 && b > 0.0 && profile.deriv1(0.0).abs() > 1e-9 * d1_scale {
        shift = cps
            .iter()
            .map(|c| c.location)
            .min_by(|x, y| x.abs().partial_cmp(&y.abs()).unwrap())
            .ok_or_else(|| {
                Error::Domain("no critical point available for the Galilean frame shift".into())
            })?;
    }

    // Zeros of u*eps_I in the shifted frame: the shifted critical points
    // plus the origin.
    let mut cuts: Vec<f64> = cps.iter().map(|c| c.location - shift).collect();
    cuts.push(0.0);
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|x, y| (*x - *y).abs() < 1e-12);
    let (sa, sb) = (a - shift, b - shift);
    cuts.retain(|&c| c > sa && c < sb);

    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(sa);
    edges.extend(cuts.iter().copied());
    edges.push(sb);

    let mut intervals = Vec::new();
    for w in edges.windows(2) {
        let mid = 0.5 * (w[0] + w[1]);
        let ei = eps_i_at(profile, k, mid + shift);
        let sigma = (mid * ei).signum();
        if sigma != 0.0 {
            intervals.push(SignatureInterval {
                u_lo: w[0],
                u_hi: w[1],
                sigma: sigma as i8,
            });
        }
    }
    let _ = opts;
    Ok(SignatureProfile {
        intervals,
        neutral_points: cuts,
        frame_shift: shift,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticalStateKind {
    KNonzeroInflection,
    KZeroValley,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CriticalState {
    pub kind: CriticalStateKind,
    pub u_c: f64,
    pub k_c: f64,
    pub eta_c: f64,
    pub embedded_mode_signature: i8,
}

/// Stability of a family member, for the bisection drivers. `None` means
/// the contour passed through the origin (exactly critical).
fn member_stable<D: Distribution + ?Sized>(
    profile: &D,
    k: f64,
    opts: &PenroseOpts,
) -> Result<Option<bool>> {
    match winding_number(profile, k, opts) {
        Ok(rep) => Ok(Some(rep.stable)),
        Err(Error::CriticalContour { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// Locates the critical state of a one-parameter family.
///
/// With `k = Some(k)`: bisects eta on the stability flip at that wavenumber
/// (the contour touches the origin at the critical eta); the touch is a
/// valley crossing when f0'' is finite there, an inflection state when f0''
/// vanishes too. With `k = None`: bisects eta on the critical-point count of
/// f_eta itself (the birth of a degenerate critical point), then solves for
/// the k that places the contour's tangency exactly at the origin.
pub fn find_critical_state<F, D>(
    family: F,
    eta_lo: f64,
    eta_hi: f64,
    k: Option<f64>,
    opts: &PenroseOpts,
) -> Result<CriticalState>
where
    F: Fn(f64) -> Result<D>,
    D: Distribution,
{
    match k {
        Some(kv) => critical_by_winding(family, eta_lo, eta_hi, kv, opts),
        None => critical_by_merge(family, eta_lo, eta_hi, opts),
    }
}

fn critical_by_winding<F, D>(
    family: F,
    eta_lo: f64,
    eta_hi: f64,
    k: f64,
    opts: &PenroseOpts,
) -> Result<CriticalState>
where
    F: Fn(f64) -> Result<D>,
    D: Distribution,
{
    let stable_lo = member_stable(&family(eta_lo)?, k, opts)?;
    let stable_hi = member_stable(&family(eta_hi)?, k, opts)?;
    let (mut lo, mut hi) = match (stable_lo, stable_hi) {
        (Some(sl), Some(sh)) if sl != sh => (eta_lo, eta_hi),
        (None, _) => return critical_state_at(&family, eta_lo, k, opts),
        (_, None) => return critical_state_at(&family, eta_hi, k, opts),
        _ => {
            return Err(Error::NotFound(format!(
                "no stability change in eta range [{eta_lo}, {eta_hi}] at k = {k}"
            )))
        }
    };
    let lo_is_stable = stable_lo.unwrap();
    for _ in 0..60 {
        if (hi - lo).abs() < 1e-10 * (1.0 + lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        match member_stable(&family(mid)?, k, opts)? {
            None => return critical_state_at(&family, mid, k, opts),
            Some(s) if s == lo_is_stable => lo = mid,
            Some(_) => hi = mid,
        }
    }
    critical_state_at(&family, 0.5 * (lo + hi), k, opts)
}

/// Classifies the near-critical member at the contour point closest to the
/// origin.
fn critical_state_at<F, D>(family: &F, eta: f64, k: f64, opts: &PenroseOpts) -> Result<CriticalState>
where
    F: Fn(f64) -> Result<D>,
    D: Distribution,
{
    let profile = family(eta)?;
    let cps = critical_points(&profile);
    if cps.is_empty() {
        return Err(Error::NotFound("critical member has no crossings".into()));
    }
    let d2_scale = cps
        .iter()
        .map(|c| c.second_derivative.abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut best: Option<(f64, f64, f64)> = None; // (|eps|, u_c, f0'')
    for cp in &cps {
        let er = eps_r_at(&profile, k, cp.location, &opts.hilbert)?;
        if best.as_ref().map_or(true, |(e, _, _)| er.abs() < *e) {
            best = Some((er.abs(), cp.location, cp.second_derivative));
        }
    }
    let (_, u_c, d2) = best.unwrap();
    let kind = if d2.abs() < 1e-4 * d2_scale {
        CriticalStateKind::KNonzeroInflection
    } else {
        CriticalStateKind::KZeroValley
    };
    let slope = eps_r_slope(&profile, k, u_c, &opts.hilbert)?;
    Ok(CriticalState {
        kind,
        u_c,
        k_c: k,
        eta_c: eta,
        embedded_mode_signature: embedded_signature(u_c, slope),
    })
}

fn embedded_signature(u_c: f64, slope: f64) -> i8 {
    if u_c.abs() < 1e-6 || slope.abs() < 1e-6 {
        0
    } else {
        (u_c * slope).signum() as i8
    }
}

fn critical_by_merge<F, D>(
    family: F,
    eta_lo: f64,
    eta_hi: f64,
    opts: &PenroseOpts,
) -> Result<CriticalState>
where
    F: Fn(f64) -> Result<D>,
    D: Distribution,
{
    let count = |eta: f64| -> Result<usize> { Ok(critical_points(&family(eta)?).len()) };
    let n_lo = count(eta_lo)?;
    let n_hi = count(eta_hi)?;
    if n_lo == n_hi {
        return Err(Error::NotFound(format!(
            "critical-point count does not change over [{eta_lo}, {eta_hi}] ({n_lo} everywhere)"
        )));
    }
    let (mut lo, mut hi) = (eta_lo, eta_hi);
    for _ in 0..60 {
        if (hi - lo).abs() < 1e-11 * (1.0 + lo.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if count(mid)? == n_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Just past the merge: the new pair brackets the degenerate point, which
    // is the zero of f0'' between them.
    let eta_c = hi;
    let profile = family(eta_c)?;
    let before = critical_points(&family(lo)?);
    let after = critical_points(&profile);
    let fresh: Vec<f64> = after
        .iter()
        .map(|c| c.location)
        .filter(|&x| before.iter().all(|b| (b.location - x).abs() > 1e-4))
        .collect();
    let u_c = if fresh.len() >= 2 {
        let mid = 0.5 * (fresh[0] + fresh[fresh.len() - 1]);
        refine_d2_zero(&profile, fresh[0], fresh[fresh.len() - 1]).unwrap_or(mid)
    } else if let Some(x) = fresh.first() {
        *x
    } else {
        return Err(Error::NotFound(
            "merge located but no fresh critical points identified".into(),
        ));
    };

    // eps_R(u_c) = 1 + S(u_c)/k^2 with S independent of k; the embedded-mode
    // condition picks k_c = sqrt(-S).
    let s_at = {
        let er1 = eps_r_at(&profile, 1.0, u_c, &opts.hilbert)?;
        er1 - 1.0
    };
    if s_at >= 0.0 {
        return Err(Error::NotFound(format!(
            "no real wavenumber embeds the inflection point: S({u_c}) = {s_at} >= 0"
        )));
    }
    let k_c = (-s_at).sqrt();
    let slope = eps_r_slope(&profile, k_c, u_c, &opts.hilbert)?;
    Ok(CriticalState {
        kind: CriticalStateKind::KNonzeroInflection,
        u_c,
        k_c,
        eta_c,
        embedded_mode_signature: embedded_signature(u_c, slope),
    })
}

fn refine_d2_zero<D: Distribution + ?Sized>(profile: &D, mut lo: f64, mut hi: f64) -> Option<f64> {
    let mut flo = profile.deriv2(lo);
    if flo * profile.deriv2(hi) > 0.0 {
        return None;
    }
    for _ in 0..200 {
        if hi - lo < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fm = profile.deriv2(mid);
        if flo * fm <= 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
    }
    Some(0.5 * (lo + hi))
}
