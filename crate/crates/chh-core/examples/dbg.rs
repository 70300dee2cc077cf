use chh_core::dispersion::*;
use chh_core::equilibria::*;
use chh_core::gtransform::*;
use chh_core::hilbert::HilbertOpts;
use chh_core::penrose::*;
use num_complex::Complex64;

fn main() {
    let hopts = HilbertOpts::default();
    let f1 = EquilibriumProfile::maxwellian(0.0, 1.0, 1.0).unwrap();

    // 1. Landau: for k/sqrt2 in {0.35,0.4,0.5,0.6}: find outer eps_R zero,
    //    marginality rate, and the fitted decay from evolve.
    for kf in [0.35, 0.4, 0.5, 0.6] {
        let k = kf * std::f64::consts::SQRT_2;
        let zeros = eps_r_zeros(&f1, k, 2001, &hopts).unwrap();
        let zpos: Vec<&f64> = zeros.iter().filter(|&&u| u > 0.0).collect();
        println!("k/sqrt2={kf}: k={k:.4}, eps_R zeros: {zeros:?}");
        if let Some(&&u2) = zpos.last() {
            let omega_r = k * u2;
            match marginal_growth_rate(&f1, k, omega_r, &hopts) {
                Ok(MarginalEstimate::Rate(g)) => {
                    println!("  outer zero u={u2:.4}, omega_R={omega_r:.4}, gamma_marg={g:.6}");
                    // evolve fit
                    let n = 1401;
                    let grid: Vec<f64> = (0..n).map(|i| -6.0 + 12.0 * i as f64 / (n - 1) as f64).collect();
                    let ctx = TransformContext::new(&f1, k, &grid, &PenroseOpts::default()).unwrap();
                    let z0: Vec<Complex64> = grid.iter().map(|&p| Complex64::new((-p * p).exp(), 0.0)).collect();
                    let z0 = ComplexSampledFunction::new(grid.clone(), z0).unwrap();
                    let t_lo = 5.0 / (k / std::f64::consts::SQRT_2);
                    let t_hi = 20.0 / (k / std::f64::consts::SQRT_2);
                    let nt = 240;
                    let times: Vec<f64> = (0..nt).map(|i| t_lo + (t_hi - t_lo) * i as f64 / (nt - 1) as f64).collect();
                    let e = ctx.moment_series(&z0, &times).unwrap();
                    // peak detection on |E|
                    let mags: Vec<f64> = e.iter().map(|v| v.norm()).collect();
                    let mut peaks: Vec<(f64, f64)> = Vec::new();
                    for i in 1..nt - 1 {
                        if mags[i] > mags[i - 1] && mags[i] > mags[i + 1] {
                            peaks.push((times[i], mags[i].ln()));
                        }
                    }
                    if peaks.len() >= 3 {
                        let n = peaks.len() as f64;
                        let (mut st, mut sy, mut stt, mut sty) = (0.0, 0.0, 0.0, 0.0);
                        for (t, y) in &peaks {
                            st += t; sy += y; stt += t * t; sty += t * y;
                        }
                        let slope = (n * sty - st * sy) / (n * stt - st * st);
                        println!("  fitted decay = {slope:.6} over {} peaks, ratio fit/marg = {:.4}", peaks.len(), slope / g);
                    } else {
                        println!("  only {} peaks", peaks.len());
                    }
                }
                other => println!("  marginality: {other:?}"),
            }
        }
    }

    // 2. Bi-max critical separation at k=0.5 and CSS gamma at sep 1.2
    let er0 = |sep: f64| {
        let f = EquilibriumProfile::bi_maxwellian(sep, 1.0, 1.0).unwrap();
        eps_r_at(&f, 0.5, 0.0, &hopts).unwrap()
    };
    let (mut lo, mut hi) = (0.8, 1.2);
    for _ in 0..60 { let m = 0.5*(lo+hi); if er0(m) > 0.0 { lo = m; } else { hi = m; } }
    println!("bi-max critical separation at k=0.5: {:.8}", 0.5*(lo+hi));

    // 3. Asymmetric family near criticality: base at critical sep, eta = amplitude imbalance
    let sep_c = 0.5 * (lo + hi);
    for eta in [0.01, 0.02, 0.05] {
        let fam = ProfileFamily::AsymmetricBiMaxwellian { separation: sep_c, width: 1.0, amplitude: 1.0 };
        let f = fam.at(eta).unwrap();
        let rect = Rectangle::new(-1.0, 1.0, 1e-4, 1.0).unwrap();
        match find_roots(&f, 0.5, rect, &DispersionOpts::default()) {
            Ok(roots) => {
                for r in &roots {
                    println!("eta={eta}: root omega = {:.6e} + {:.6e}i", r.omega.re, r.omega.im);
                    // marginality comparison
                    let zeros = eps_r_zeros(&f, 0.5, 3001, &hopts).unwrap();
                    println!("  eps_R zeros: {zeros:?}");
                    for &u in &zeros {
                        if let Ok(MarginalEstimate::Rate(g)) = marginal_growth_rate(&f, 0.5, 0.5 * u, &hopts) {
                            if g > 0.0 {
                                println!("  marg at u={u:.4}: gamma={g:.6e} vs refined {:.6e}, diff={:.3e}", r.omega.im, (g - r.omega.im).abs());
                            }
                        }
                    }
                }
            }
            Err(e) => println!("eta={eta}: {e}"),
        }
    }
}
