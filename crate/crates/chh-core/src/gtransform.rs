//! The G-transform pair and exact free-streaming evolution.
//!
//!   G[g]    = eps_R g + eps_I H[g]
//!   Ginv[f] = (eps_R/|eps|^2) f - (eps_I/|eps|^2) H[f]
//!
//! For stable equilibria with no discrete modes, Ginv diagonalizes the
//! linearized dynamics into dg/dt + i k u g = 0, so time evolution is exact:
//! no time-stepping error enters anywhere. This module is the independent
//! time-domain oracle for the frequency-domain machinery (Landau-damped
//! field moments vs. marginality rates).
//!
//! The context refuses to build when |eps|^2 collapses anywhere on the grid:
//! an embedded mode makes the inverse transform ill-conditioned and the
//! diagonalization does not apply.

use crate::equilibria::Distribution;
use crate::error::{Error, Result};
use crate::hilbert::{hilbert_at, HilbertOpts, SampledRealFunction};
use crate::penrose::{dielectric, DielectricSamples, PenroseOpts};
use crate::quad::integrate_complex;
use num_complex::Complex64;

/// |eps|^2 floor relative to its median over the grid.
pub const ABS2_FLOOR_REL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct ComplexSampledFunction {
    pub grid: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl ComplexSampledFunction {
    pub fn new(grid: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::GridMismatch(format!(
                "{} grid points vs {} values",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub fn re(&self) -> Result<SampledRealFunction> {
        SampledRealFunction::new(self.grid.clone(), self.values.iter().map(|v| v.re).collect())
    }

    pub fn im(&self) -> Result<SampledRealFunction> {
        SampledRealFunction::new(self.grid.clone(), self.values.iter().map(|v| v.im).collect())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct TransformContext {
    pub k: f64,
    pub diel: DielectricSamples,
    abs2: Vec<f64>,
    hopts: HilbertOpts,
}

impl TransformContext {
    /// Builds the dielectric data for (profile, k) on `grid` and verifies
    /// invertibility.
    pub fn new<D: Distribution + ?Sized>(
        profile: &D,
        k: f64,
        grid: &[f64],
        opts: &PenroseOpts,
    ) -> Result<Self> {
        let diel = dielectric(profile, k, grid, opts)?;
        let abs2: Vec<f64> = (0..grid.len()).map(|i| diel.abs2(i)).collect();
        let mut sorted = abs2.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = sorted[sorted.len() / 2];
        for (i, &a2) in abs2.iter().enumerate() {
            if a2 < ABS2_FLOOR_REL * median {
                return Err(Error::EmbeddedMode {
                    at: grid[i],
                    min: a2,
                });
            }
        }
        Ok(Self {
            k,
            diel,
            abs2,
            hopts: opts.hilbert,
        })
    }

    pub fn grid(&self) -> &[f64] {
        &self.diel.u
    }

    fn check_grid(&self, f: &ComplexSampledFunction) -> Result<()> {
        if f.grid.len() != self.grid().len()
            || f.grid
                .iter()
                .zip(self.grid())
                .any(|(a, b)| (a - b).abs() > 1e-12)
        {
            return Err(Error::GridMismatch(
                "sampled function grid differs from context grid".into(),
            ));
        }
        Ok(())
    }

    /// H applied to a complex sampled function, componentwise, evaluated
    /// back on the context grid.
    fn hilbert_samples(&self, f: &ComplexSampledFunction) -> Result<Vec<Complex64>> {
        let re = f.re()?;
        let im = f.im()?;
        let mut out = Vec::with_capacity(f.grid.len());
        for &u in &f.grid {
            out.push(Complex64::new(
                hilbert_at(&re, u, &self.hopts)?,
                hilbert_at(&im, u, &self.hopts)?,
            ));
        }
        Ok(out)
    }

    /// f = eps_R g + eps_I H[g].
    pub fn g_forward(&self, g: &ComplexSampledFunction) -> Result<ComplexSampledFunction> {
        self.check_grid(g)?;
        let hg = self.hilbert_samples(g)?;
        let vals = (0..g.values.len())
            .map(|i| self.diel.eps_r[i] * g.values[i] + self.diel.eps_i[i] * hg[i])
            .collect();
        ComplexSampledFunction::new(g.grid.clone(), vals)
    }

    /// g = (eps_R f - eps_I H[f]) / |eps|^2.
    pub fn g_inverse(&self, f: &ComplexSampledFunction) -> Result<ComplexSampledFunction> {
        self.check_grid(f)?;
        let hf = self.hilbert_samples(f)?;
        let vals = (0..f.values.len())
            .map(|i| {
                (self.diel.eps_r[i] * f.values[i] - self.diel.eps_i[i] * hf[i]) / self.abs2[i]
            })
            .collect();
        ComplexSampledFunction::new(f.grid.clone(), vals)
    }

    /// Free-streaming phase rotation in the diagonal representation.
    pub fn evolve_diagonal(&self, g0: &ComplexSampledFunction, t: f64) -> ComplexSampledFunction {
        let vals = g0
            .grid
            .iter()
            .zip(&g0.values)
            .map(|(&u, &v)| v * Complex64::from_polar(1.0, -self.k * u * t))
            .collect();
        ComplexSampledFunction {
            grid: g0.grid.clone(),
            values: vals,
        }
    }

    /// zeta_t = G[ e^{-i k u t} Ginv[zeta0] ]; exact in time.
    pub fn evolve(&self, zeta0: &ComplexSampledFunction, t: f64) -> Result<ComplexSampledFunction> {
        let g0 = self.g_inverse(zeta0)?;
        let gt = self.evolve_diagonal(&g0, t);
        self.g_forward(&gt)
    }

    /// Field moment E proportional to \int zeta dp, by quadrature over the
    /// interpolated samples.
    pub fn field_moment(&self, zeta: &ComplexSampledFunction) -> Result<Complex64> {
        let re = zeta.re()?;
        let im = zeta.im()?;
        let (a, b) = (self.grid()[0], *self.grid().last().unwrap());
        let r = integrate_complex(
            |p| Complex64::new(re.eval(p), im.eval(p)),
            a,
            b,
            1e-10,
            &zeta.grid,
        )?;
        Ok(r.value)
    }

    /// E(t) for many times at once. Uses the exact operator identity
    /// \int G[w] dp = \int w dp (H is anti-self-adjoint, so the eps_I H[w]
    /// term integrates to -\int w (eps_R - 1)), reducing each sample to one
    /// oscillatory quadrature of the diagonal data. Validated against
    /// `field_moment(evolve(t))` in the tests.
    pub fn moment_series(
        &self,
        zeta0: &ComplexSampledFunction,
        times: &[f64],
    ) -> Result<Vec<Complex64>> {
        let g0 = self.g_inverse(zeta0)?;
        let re = g0.re()?;
        let im = g0.im()?;
        let (a, b) = (self.grid()[0], *self.grid().last().unwrap());
        let mut out = Vec::with_capacity(times.len());
        for &t in times {
            let kt = self.k * t;
            let r = integrate_complex(
                |u| Complex64::new(re.eval(u), im.eval(u)) * Complex64::from_polar(1.0, -kt * u),
                a,
                b,
                1e-10,
                &g0.grid,
            )?;
            out.push(r.value);
        }
        Ok(out)
    }

    /// Diagonal Hamiltonian (1/2) \int sigma(u) |k u| (Q^2 + P^2) du with
    /// sigma = sgn(u eps_I) read off the grid; trapezoid quadrature.
    pub fn diagonal_energy(&self, q: &[f64], p: &[f64]) -> Result<f64> {
        let grid = self.grid();
        if q.len() != grid.len() || p.len() != grid.len() {
            return Err(Error::GridMismatch(
                "Q/P samples must match the context grid".into(),
            ));
        }
        let mut total = 0.0;
        for i in 0..grid.len() - 1 {
            let h = grid[i + 1] - grid[i];
            let f = |j: usize| {
                let u = grid[j];
                let sigma = (u * self.diel.eps_i[j]).signum();
                0.5 * sigma * (self.k * u).abs() * (q[j] * q[j] + p[j] * p[j])
            };
            total += 0.5 * h * (f(i) + f(i + 1));
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equilibria::EquilibriumProfile;
    use rand::{Rng, SeedableRng};

    fn maxwellian_ctx(n: usize) -> TransformContext {
        let f = EquilibriumProfile::maxwellian(0.0, 1.0, 1.0).unwrap();
        let grid: Vec<f64> = (0..n).map(|i| -6.0 + 12.0 * i as f64 / (n - 1) as f64).collect();
        TransformContext::new(&f, 1.0, &grid, &PenroseOpts::default()).unwrap()
    }

    fn random_smooth(grid: &[f64], rng: &mut impl Rng) -> ComplexSampledFunction {
        // Random sum of Gaussian bumps, rapidly decaying inside the window:
        // the transform of sampled data is data-limited at the window edges,
        // so the ensemble keeps edge values below 1e-12.
        let mut centers = Vec::new();
        for _ in 0..3 {
            centers.push((
                rng.gen_range(-1.2..1.2),
                rng.gen_range(0.5..0.9),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ));
        }
        let vals = grid
            .iter()
            .map(|&p| {
                let mut v = Complex64::new(0.0, 0.0);
                for &(c, w, ar, ai) in &centers {
                    let z = (p - c) / w;
                    v += Complex64::new(ar, ai) * (-z * z).exp();
                }
                v
            })
            .collect();
        ComplexSampledFunction::new(grid.to_vec(), vals).unwrap()
    }

    #[test]
    fn zero_maps_to_zero() {
        let ctx = maxwellian_ctx(301);
        let z = ComplexSampledFunction::new(
            ctx.grid().to_vec(),
            vec![Complex64::new(0.0, 0.0); ctx.grid().len()],
        )
        .unwrap();
        let f = ctx.g_forward(&z).unwrap();
        assert!(f.sup_norm() < 1e-14);
        let g = ctx.g_inverse(&z).unwrap();
        assert!(g.sup_norm() < 1e-14);
    }

    #[test]
    fn flat_profile_transform_is_identity() {
        let grid: Vec<f64> = (0..201).map(|i| -5.0 + 0.05 * i as f64).collect();
        let flat = EquilibriumProfile::tabulated(grid.clone(), vec![1.0; grid.len()], None).unwrap();
        let ctx = TransformContext::new(&flat, 1.0, &grid, &PenroseOpts::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let g = random_smooth(&grid, &mut rng);
        let f = ctx.g_forward(&g).unwrap();
        for i in 0..grid.len() {
            assert!((f.values[i] - g.values[i]).norm() < 1e-6);
        }
    }

    #[test]
    fn round_trip_identity() {
        let ctx = maxwellian_ctx(801);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        for _ in 0..5 {
            let g = random_smooth(ctx.grid(), &mut rng);
            let f = ctx.g_forward(&g).unwrap();
            let back = ctx.g_inverse(&f).unwrap();
            let err = g
                .values
                .iter()
                .zip(&back.values)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-6, "round trip sup error {err}");
        }
    }

    #[test]
    fn evolve_at_zero_time_is_identity() {
        let ctx = maxwellian_ctx(601);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let z0 = random_smooth(ctx.grid(), &mut rng);
        let zt = ctx.evolve(&z0, 0.0).unwrap();
        let err = z0
            .values
            .iter()
            .zip(&zt.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-6);
    }

    #[test]
    fn evolve_is_a_group() {
        let ctx = maxwellian_ctx(601);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let z0 = random_smooth(ctx.grid(), &mut rng);
        let one = ctx.evolve(&z0, 3.0).unwrap();
        let two = ctx.evolve(&one, 2.0).unwrap();
        let direct = ctx.evolve(&z0, 5.0).unwrap();
        let err = two
            .values
            .iter()
            .zip(&direct.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "group property error {err}");
    }

    #[test]
    fn free_streaming_limit() {
        // eps_I ~ 0 (flat profile): zeta_t = zeta_0 e^{-i k p t}.
        let grid: Vec<f64> = (0..401).map(|i| -5.0 + 10.0 * i as f64 / 400.0).collect();
        let flat = EquilibriumProfile::tabulated(grid.clone(), vec![1.0; grid.len()], None).unwrap();
        let ctx = TransformContext::new(&flat, 1.0, &grid, &PenroseOpts::default()).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let z0 = random_smooth(&grid, &mut rng);
        let t = 1.5;
        let zt = ctx.evolve(&z0, t).unwrap();
        for (i, &p) in grid.iter().enumerate() {
            let expect = z0.values[i] * Complex64::from_polar(1.0, -1.0 * p * t);
            assert!((zt.values[i] - expect).norm() < 1e-5);
        }
    }

    #[test]
    fn diagonal_energy_zero_and_positive() {
        let ctx = maxwellian_ctx(401);
        let n = ctx.grid().len();
        assert_eq!(ctx.diagonal_energy(&vec![0.0; n], &vec![0.0; n]).unwrap(), 0.0);
        // Maxwellian: positive signature only, so any nonzero Q gives
        // positive energy.
        let q: Vec<f64> = ctx.grid().iter().map(|&u| (-u * u).exp()).collect();
        let e = ctx.diagonal_energy(&q, &vec![0.0; n]).unwrap();
        assert!(e > 0.0);
    }

    #[test]
    fn energy_conserved_along_evolution() {
        let ctx = maxwellian_ctx(601);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        let z0 = random_smooth(ctx.grid(), &mut rng);
        let g0 = ctx.g_inverse(&z0).unwrap();
        let energy = |g: &ComplexSampledFunction| {
            let q: Vec<f64> = g.values.iter().map(|v| v.re).collect();
            let p: Vec<f64> = g.values.iter().map(|v| v.im).collect();
            ctx.diagonal_energy(&q, &p).unwrap()
        };
        let e0 = energy(&g0);
        for &t in &[1.0, 5.0, 12.0] {
            let gt = ctx.evolve_diagonal(&g0, t);
            let et = energy(&gt);
            assert!(
                ((et - e0) / e0).abs() < 1e-6,
                "energy drift {} at t = {t}",
                et - e0
            );
        }
    }

    #[test]
    fn moment_series_matches_direct_moment() {
        let ctx = maxwellian_ctx(801);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(17);
        let z0 = random_smooth(ctx.grid(), &mut rng);
        let times = [0.0, 1.0, 4.0];
        let fast = ctx.moment_series(&z0, &times).unwrap();
        for (i, &t) in times.iter().enumerate() {
            let zt = ctx.evolve(&z0, t).unwrap();
            let direct = ctx.field_moment(&zt).unwrap();
            assert!(
                (fast[i] - direct).norm() < 2e-4,
                "t = {t}: identity route {} vs direct {}",
                fast[i],
                direct
            );
        }
    }

    #[test]
    fn critical_context_refused() {
        // At the critical separation the valley crossing is an embedded mode:
        // eps_R and eps_I vanish together at u = 0 and |eps|^2 collapses.
        // Locate criticality by bisection on eps_R(0).
        let k = 0.5;
        let hopts = crate::hilbert::HilbertOpts::default();
        let er0 = |sep: f64| {
            let f = EquilibriumProfile::bi_maxwellian(sep, 1.0, 1.0).unwrap();
            crate::penrose::eps_r_at(&f, k, 0.0, &hopts).unwrap()
        };
        let (mut lo, mut hi) = (0.8, 1.2);
        assert!(er0(lo) > 0.0 && er0(hi) < 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if er0(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let sep_c = 0.5 * (lo + hi);
        let f = EquilibriumProfile::bi_maxwellian(sep_c, 1.0, 1.0).unwrap();
        // Grid contains u = 0 exactly, where the collapse happens.
        let grid: Vec<f64> = (0..1201).map(|i| -6.9 + 13.8 * i as f64 / 1200.0).collect();
        let r = TransformContext::new(&f, k, &grid, &PenroseOpts::default());
        assert!(
            matches!(r, Err(Error::EmbeddedMode { .. })),
            "expected embedded-mode refusal at separation {sep_c}"
        );
    }
}
