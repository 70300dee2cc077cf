//! Discrete total-argument accumulation along a parametrized contour in the
//! complex plane, with adaptive refinement where the turning angle per step
//! is too large. Shared by the Penrose cross-validation, the dispersion
//! rectangle counter, and the Nyquist module.

use crate::error::Result;
use num_complex::Complex64;

pub struct ArgWalk {
    /// Accumulated argument along the path (radians).
    pub total_arg: f64,
    /// Minimum |z| seen over all evaluated samples.
    pub min_abs: f64,
    /// Parameter where the minimum was attained.
    pub min_at: f64,
    pub evals: usize,
}

/// Angle of z2/z1 normalized to [-pi, pi). The half-open choice maps the
/// degenerate half-turn (contour flipping through the origin along the real
/// axis) to -pi consistently, which is the convention check fixing the
/// uncoupled-limit winding in the oscillator-bath model.
fn turn(z1: Complex64, z2: Complex64) -> f64 {
    if z1.norm() == 0.0 || z2.norm() == 0.0 {
        // An exact zero sample carries no angle information; the walker
        // avoids splitting on such points.
        return 0.0;
    }
    let w = z2 * z1.conj();
    let mut d = w.im.atan2(w.re);
    if d >= std::f64::consts::PI {
        d = -std::f64::consts::PI;
    }
    d
}

/// Walks t in [t0, t1], accumulating arg changes of f(t); refines any step
/// whose turn exceeds `max_turn` until it fits or `max_depth` bisections.
/// If `close` is set, the hop from f(t1) back to f(t0) is appended.
pub fn walk<F>(
    mut f: F,
    t0: f64,
    t1: f64,
    n_init: usize,
    close: bool,
) -> Result<ArgWalk>
where
    F: FnMut(f64) -> Result<Complex64>,
{
    const MAX_TURN: f64 = 0.75;
    const MAX_DEPTH: u32 = 48;

    let n = n_init.max(8);
    let mut out = ArgWalk {
        total_arg: 0.0,
        min_abs: f64::INFINITY,
        min_at: t0,
        evals: 0,
    };
    let mut eval = |t: f64, out: &mut ArgWalk| -> Result<Complex64> {
        let z = f(t)?;
        out.evals += 1;
        if z.norm() < out.min_abs {
            out.min_abs = z.norm();
            out.min_at = t;
        }
        Ok(z)
    };

    let first = eval(t0, &mut out)?;
    let mut prev_t = t0;
    let mut prev_z = first;
    for i in 1..=n {
        let t = t0 + (t1 - t0) * i as f64 / n as f64;
        let z = eval(t, &mut out)?;
        segment(&mut eval, prev_t, prev_z, t, z, MAX_TURN, MAX_DEPTH, &mut out)?;
        prev_t = t;
        prev_z = z;
    }
    if close {
        out.total_arg += turn(prev_z, first);
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn segment<E>(
    eval: &mut E,
    t1: f64,
    z1: Complex64,
    t2: f64,
    z2: Complex64,
    max_turn: f64,
    depth: u32,
    out: &mut ArgWalk,
) -> Result<()>
where
    E: FnMut(f64, &mut ArgWalk) -> Result<Complex64>,
{
    let d = turn(z1, z2);
    if d.abs() <= max_turn || depth == 0 {
        out.total_arg += d;
        return Ok(());
    }
    let tm = 0.5 * (t1 + t2);
    if !(t1 < tm && tm < t2) {
        out.total_arg += d;
        return Ok(());
    }
    let mut zm = eval(tm, out)?;
    let mut tm = tm;
    if zm.norm() == 0.0 {
        // Split point sits exactly on a contour zero; an off-center split
        // keeps the flip's angle information intact.
        let ta = t1 + 0.380 * (t2 - t1);
        if t1 < ta && ta < t2 {
            tm = ta;
            zm = eval(tm, out)?;
        }
        if zm.norm() == 0.0 {
            out.total_arg += d;
            return Ok(());
        }
    }
    segment(eval, t1, z1, tm, zm, max_turn, depth - 1, out)?;
    segment(eval, tm, zm, t2, z2, max_turn, depth - 1, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_circle_winds_once() {
        let w = walk(
            |t| Ok(Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t)),
            0.0,
            1.0,
            16,
            true,
        )
        .unwrap();
        assert!((w.total_arg / (2.0 * std::f64::consts::PI) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn offset_circle_winds_zero() {
        let w = walk(
            |t| {
                Ok(Complex64::new(3.0, 0.0)
                    + Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * t))
            },
            0.0,
            1.0,
            16,
            true,
        )
        .unwrap();
        assert!(w.total_arg.abs() < 1e-10);
        assert!((w.min_abs - 2.0).abs() < 1e-6);
    }

    #[test]
    fn double_loop_counts_two() {
        let w = walk(
            |t| Ok(Complex64::from_polar(1.0 + t, 4.0 * std::f64::consts::PI * t)),
            0.0,
            1.0,
            16,
            false,
        )
        .unwrap();
        assert!((w.total_arg / (4.0 * std::f64::consts::PI) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn real_axis_flip_ties_to_minus_pi() {
        // A path that jumps across zero on the real axis: with ties toward
        // -pi each flip contributes -pi.
        let w = walk(
            |t| {
                Ok(if t < 0.5 {
                    Complex64::new(1.0 - 2.0 * t + 1e-30, 0.0)
                } else {
                    Complex64::new(1.0 - 2.0 * t - 1e-30, 0.0)
                })
            },
            0.0,
            1.0,
            9,
            false,
        )
        .unwrap();
        assert!((w.total_arg + std::f64::consts::PI).abs() < 1e-9);
    }
}
