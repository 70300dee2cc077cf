//! A harmonic oscillator of either energy sign coupled to a continuum bath:
//! dispersion relation, Nyquist contour, zero counting, and a discretized
//! matrix oracle.
//!
//! The Hamiltonian is
//!
//!   H = s (Omega/2)(Q^2 + P^2) + (1/2) \int_0^inf x (q^2 + p^2) dx
//!       + Q \int_0^inf f(x) q(x) dx
//!
//! with s = -1 the gyroscopic (negative-energy) case. Eliminating the bath
//! at frequency omega gives
//!
//!   (Omega^2 - omega^2) = -s Omega \int_0^inf x f^2/(omega^2 - x^2) dx,
//!
//! rewritten by partial fractions through the antisymmetric extension
//! f_-^2(x) = sgn(x) f(|x|)^2 as
//!
//!   D(omega) = (Omega^2 - omega^2) + s (Omega/2) \int_R f_-^2/(omega - x) dx.
//!
//! For s = -1 the normalized dispersion function eps = -D/(omega^2+Omega^2)
//! tends to 1 at infinity and has a single upper-half-plane pole at
//! omega = i Omega, so zeros = winding + 1. For s = +1 the normalization
//! -D/(omega + i Omega)^2 has no upper pole and zeros = winding.

use crate::error::{Error, Result};
use crate::hilbert::{hilbert_at, HilbertOpts, PvIntegrand, SampledRealFunction};
use crate::quad::{gauss_legendre_on, integrate_complex};
use crate::argwind;
use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OscillatorSign {
    Negative,
    Positive,
}

impl OscillatorSign {
    fn s(self) -> f64 {
        match self {
            OscillatorSign::Negative => -1.0,
            OscillatorSign::Positive => 1.0,
        }
    }
}

/// Coupling strength f(x)^2 on x > 0: a closed form or a table.
pub enum Coupling {
    Closed {
        f_sq: Box<dyn Fn(f64) -> f64 + Sync + Send>,
    },
    Table(SampledRealFunction),
}

impl Coupling {
    pub fn f_sq(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        match self {
            Coupling::Closed { f_sq } => f_sq(x),
            Coupling::Table(t) => {
                let (a, b) = {
                    let g = t.grid();
                    (g[0], *g.last().unwrap())
                };
                if x < a || x > b {
                    0.0
                } else {
                    t.eval(x)
                }
            }
        }
    }
}

pub struct BathModel {
    pub omega0: f64,
    pub sign: OscillatorSign,
    pub coupling: Coupling,
    /// Bath frequencies live on (0, x_max]; the coupling support must decay
    /// inside it.
    pub x_max: f64,
}

impl BathModel {
    pub fn new(omega0: f64, sign: OscillatorSign, coupling: Coupling, x_max: f64) -> Result<Self> {
        if !(omega0 > 0.0) || !(x_max > 0.0) {
            return Err(Error::InvalidInput(format!(
                "need Omega > 0 and x_max > 0, got {omega0}, {x_max}"
            )));
        }
        let m = BathModel {
            omega0,
            sign,
            coupling,
            x_max,
        };
        // Coupling must be non-negative with an integrable tail inside the
        // window.
        let n = 512;
        for i in 0..=n {
            let x = m.x_max * i as f64 / n as f64;
            if m.coupling.f_sq(x) < -1e-12 {
                return Err(Error::InvalidInput(format!(
                    "coupling f(x)^2 negative at x = {x}"
                )));
            }
        }
        Ok(m)
    }

    /// Antisymmetric extension f_-^2(x) = sgn(x) f(|x|)^2.
    pub fn f_minus_sq(&self, x: f64) -> f64 {
        x.signum() * self.coupling.f_sq(x.abs())
    }
}

struct FMinus<'a> {
    model: &'a BathModel,
}

impl PvIntegrand for FMinus<'_> {
    fn eval(&self, p: f64) -> f64 {
        self.model.f_minus_sq(p)
    }

    fn window(&self) -> (f64, f64) {
        (-self.model.x_max, self.model.x_max)
    }

    fn knots(&self) -> Vec<f64> {
        vec![0.0]
    }
}

/// Boundary value of the normalized dispersion function on the real axis.
///
/// s = -1:  eps(w) = (w^2-W^2)/(w^2+W^2) - W pi/(2(w^2+W^2)) H[f_-^2](w)
///                   - i pi W f_-^2(w) / (2(w^2+W^2))
/// s = +1:  same numerator with the coupling terms flipped, normalized by
///          (w + iW)^2 instead (keeps the pole out of the upper half plane).
pub fn cl_epsilon_real(model: &BathModel, omega: f64, hopts: &HilbertOpts) -> Result<Complex64> {
    let w0 = model.omega0;
    let s = model.sign.s();
    let g = FMinus { model };
    let hval = hilbert_at(&g, omega, hopts)?;
    // -D(omega + i0) = (w^2 - W^2) + s pi (W/2) H[f_-^2] + i s pi (W/2) f_-^2
    let num = Complex64::new(
        omega * omega - w0 * w0 + s * PI * 0.5 * w0 * hval,
        s * PI * 0.5 * w0 * model.f_minus_sq(omega),
    );
    Ok(num / norm_factor(model, Complex64::new(omega, 0.0)))
}

fn norm_factor(model: &BathModel, omega: Complex64) -> Complex64 {
    let w0 = model.omega0;
    match model.sign {
        OscillatorSign::Negative => omega * omega + w0 * w0,
        OscillatorSign::Positive => {
            let z = omega + Complex64::new(0.0, w0);
            z * z
        }
    }
}

/// Analytic continuation of the normalized dispersion function into the
/// upper half plane (no PV needed off the axis).
pub fn cl_epsilon_complex(model: &BathModel, omega: Complex64) -> Result<Complex64> {
    if omega.im <= 0.0 {
        return Err(Error::Domain(format!(
            "continuation requires Im(omega) > 0, got {omega}"
        )));
    }
    let w0 = model.omega0;
    let s = model.sign.s();
    let x_max = model.x_max;
    let integral = integrate_complex(
        |x| Complex64::new(model.f_minus_sq(x), 0.0) / (omega - x),
        -x_max,
        x_max,
        1e-10,
        &[0.0, omega.re],
    )?;
    let minus_d = omega * omega - w0 * w0 - s * 0.5 * w0 * integral.value;
    Ok(minus_d / norm_factor(model, omega))
}

/// The half-line dispersion form (Omega^2 - omega^2) + s Omega
/// \int_0^inf x f^2/(omega^2 - x^2) dx, evaluated off the axis. Root
/// agreement with `cl_epsilon_complex` validates the partial-fraction
/// rewriting.
pub fn cl_dispersion_halfline(model: &BathModel, omega: Complex64) -> Result<Complex64> {
    if omega.im <= 0.0 {
        return Err(Error::Domain("need Im(omega) > 0".into()));
    }
    let w0 = model.omega0;
    let s = model.sign.s();
    let w2 = omega * omega;
    let integral = integrate_complex(
        |x| Complex64::new(x * model.coupling.f_sq(x), 0.0) / (w2 - x * x),
        0.0,
        model.x_max,
        1e-10,
        &[omega.re.abs()],
    )?;
    Ok(w0 * w0 - w2 + s * w0 * integral.value)
}

#[derive(Debug, Clone, Serialize)]
pub struct NyquistReport {
    pub omega0: f64,
    pub sign: OscillatorSign,
    pub winding: i64,
    /// Upper-half-plane poles of the normalization: 1 for the negative
    /// oscillator, 0 for the positive one.
    pub poles: i64,
    /// Zeros of the dispersion relation in the upper half plane,
    /// winding + poles.
    pub zeros_upper: i64,
    /// Sampled contour (omega, Re eps, Im eps) for plotting.
    pub contour: Vec<(f64, f64, f64)>,
}

/// Nyquist contour of the real-axis dispersion function and the zero count
/// from the argument principle.
pub fn cl_nyquist(model: &BathModel, grid: &[f64], hopts: &HilbertOpts) -> Result<NyquistReport> {
    if grid.len() < 16 {
        return Err(Error::InvalidInput("nyquist grid too coarse".into()));
    }
    let lo = grid[0];
    let hi = *grid.last().unwrap();
    if lo > -model.x_max || hi < model.x_max {
        return Err(Error::Domain(format!(
            "nyquist grid [{lo}, {hi}] must span the coupling support generously"
        )));
    }
    let mut contour = Vec::with_capacity(grid.len());
    for &w in grid {
        let e = cl_epsilon_real(model, w, hopts)?;
        contour.push((w, e.re, e.im));
    }
    // Total argument along the real line, closed by the hop back from
    // eps(+inf) ~ 1 to eps(-inf) ~ 1.
    let walk = argwind::walk(
        |w| cl_epsilon_real(model, w, hopts),
        lo,
        hi,
        grid.len(),
        true,
    )?;
    let frac = walk.total_arg / (2.0 * PI);
    let winding = frac.round();
    if (frac - winding).abs() > 0.05 {
        return Err(Error::AccuracyFailure {
            achieved: (frac - winding).abs(),
            requested: 0.05,
            context: "nyquist argument accumulation".into(),
        });
    }
    // A contour passing through the origin at grid resolution makes the
    // count ill-defined: flag it. Checked on the base samples, not the
    // refined ones: the exactly degenerate real contour of the uncoupled
    // model crosses the origin transversally in omega, and refinement toward
    // the flip would otherwise always report a false criticality.
    let (min_w, min_abs) = contour
        .iter()
        .map(|&(w, re, im)| (w, (re * re + im * im).sqrt()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    if min_abs < 1e-8 {
        return Err(Error::CriticalContour {
            u_c: min_w,
            eps_abs: min_abs,
        });
    }
    let poles = match model.sign {
        OscillatorSign::Negative => 1,
        OscillatorSign::Positive => 0,
    };
    Ok(NyquistReport {
        omega0: model.omega0,
        sign: model.sign,
        winding: winding as i64,
        poles,
        zeros_upper: winding as i64 + poles,
        contour,
    })
}

/// Discretizes the bath on n Gauss-Legendre nodes and assembles the real
/// (2n+2) x (2n+2) equations of motion
///
///   dQ/dt = s W P
///   dP/dt = -s W Q - sum_j w_j f_j q_j
///   dq_j/dt = x_j p_j
///   dp_j/dt = -x_j q_j - f_j Q
///
/// (the continuum coupling carries the quadrature weight; symmetrizing by
/// q_j -> sqrt(w_j) q_j makes the finite system Hamiltonian again). Returns
/// the eigenfrequencies omega = i lambda with Im(omega) > threshold.
pub fn cl_matrix_oracle(model: &BathModel, n: usize, threshold: f64) -> Result<Vec<Complex64>> {
    if n < 8 {
        return Err(Error::InvalidInput("bath grid too small".into()));
    }
    let (nodes, weights) = gauss_legendre_on(n, 0.0, model.x_max);
    let s = model.sign.s();
    let w0 = model.omega0;
    let dim = 2 * n + 2;
    let mut m = DMatrix::<f64>::zeros(dim, dim);
    // Layout: [Q, P, q_1..q_n, p_1..p_n], with c_j = sqrt(w_j) f(x_j) the
    // symmetrized coupling.
    let c: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| (w * model.coupling.f_sq(x).max(0.0)).sqrt())
        .collect();
    m[(0, 1)] = s * w0;
    m[(1, 0)] = -s * w0;
    for j in 0..n {
        m[(1, 2 + j)] = -c[j];
        m[(2 + j, 2 + n + j)] = nodes[j];
        m[(2 + n + j, 2 + j)] = -nodes[j];
        m[(2 + n + j, 0)] = -c[j];
    }
    let eig = m.complex_eigenvalues();
    let mut unstable: Vec<Complex64> = eig
        .iter()
        .map(|l| Complex64::new(0.0, 1.0) * l) // omega = i lambda
        .filter(|w| w.im > threshold)
        .collect();
    unstable.sort_by(|a, b| {
        (a.re, a.im)
            .partial_cmp(&(b.re, b.im))
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(unstable)
}

/// Newton refinement of a dispersion zero in the upper half plane.
pub fn cl_refine_root(model: &BathModel, seed: Complex64) -> Result<Complex64> {
    let mut w = seed;
    for _ in 0..60 {
        let f = cl_epsilon_complex(model, w)?;
        if f.norm() < 1e-12 {
            return Ok(w);
        }
        let h = 1e-7 * w.norm().max(1.0);
        let df = (cl_epsilon_complex(model, w + h)? - cl_epsilon_complex(model, w - h)?)
            / (2.0 * h);
        if df.norm() < 1e-14 {
            break;
        }
        let mut step = f / df;
        let mut next = w - step;
        let mut halved = 0;
        while next.im <= 1e-6 && halved < 40 {
            step *= 0.5;
            next = w - step;
            halved += 1;
        }
        w = next;
    }
    let res = cl_epsilon_complex(model, w)?.norm();
    if res < 1e-9 {
        Ok(w)
    } else {
        Err(Error::NoConvergence {
            iterations: 60,
            residual: res,
        })
    }
}

/// The worked example model: f(x)^2 = 0.4 x e^{-0.25 x^2} at Omega = 1.
pub fn example_model(sign: OscillatorSign) -> BathModel {
    BathModel::new(
        1.0,
        sign,
        Coupling::Closed {
            f_sq: Box::new(|x: f64| 0.4 * x * (-0.25 * x * x).exp()),
        },
        12.0,
    )
    .unwrap()
}

/// Time integration of the discretized system by fixed-step RK4; returns the
/// sup norm of the state at the sample times. Test support for the
/// growth-rate cross-check.
pub fn cl_integrate_norm(
    model: &BathModel,
    n: usize,
    t_end: f64,
    steps: usize,
) -> Result<Vec<(f64, f64)>> {
    let (nodes, weights) = gauss_legendre_on(n, 0.0, model.x_max);
    let s = model.sign.s();
    let w0 = model.omega0;
    let c: Vec<f64> = nodes
        .iter()
        .zip(&weights)
        .map(|(&x, &w)| (w * model.coupling.f_sq(x).max(0.0)).sqrt())
        .collect();
    let dim = 2 * n + 2;
    let deriv = |y: &[f64], out: &mut [f64]| {
        out[0] = s * w0 * y[1];
        let mut coupling_term = 0.0;
        for j in 0..n {
            coupling_term += c[j] * y[2 + j];
        }
        out[1] = -s * w0 * y[0] - coupling_term;
        for j in 0..n {
            out[2 + j] = nodes[j] * y[2 + n + j];
            out[2 + n + j] = -nodes[j] * y[2 + j] - c[j] * y[0];
        }
    };
    let mut y = vec![0.0; dim];
    y[0] = 1.0; // kick the oscillator
    let dt = t_end / steps as f64;
    let mut out = Vec::with_capacity(steps + 1);
    let norm = |y: &[f64]| y.iter().map(|v| v * v).sum::<f64>().sqrt();
    out.push((0.0, norm(&y)));
    let mut k1 = vec![0.0; dim];
    let mut k2 = vec![0.0; dim];
    let mut k3 = vec![0.0; dim];
    let mut k4 = vec![0.0; dim];
    let mut tmp = vec![0.0; dim];
    for i in 0..steps {
        deriv(&y, &mut k1);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * dt * k1[j];
        }
        deriv(&tmp, &mut k2);
        for j in 0..dim {
            tmp[j] = y[j] + 0.5 * dt * k2[j];
        }
        deriv(&tmp, &mut k3);
        for j in 0..dim {
            tmp[j] = y[j] + dt * k3[j];
        }
        deriv(&tmp, &mut k4);
        for j in 0..dim {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
        out.push(((i + 1) as f64 * dt, norm(&y)));
    }
    Ok(out)
}
