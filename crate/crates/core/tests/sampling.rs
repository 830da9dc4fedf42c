use dmaps_core::density::DensityModel;
use dmaps_core::torus::TorusDomain;

fn models() -> Vec<DensityModel> {
    let rho = |x: f64| 1.0 + 0.5 * (2.0 * std::f64::consts::PI * x).sin();
    vec![
        DensityModel::uniform(TorusDomain::new(2, 2.0).unwrap()),
        DensityModel::lacunary_benchmark(),
        DensityModel::separable_benchmark(),
        DensityModel::tabulated(1.0, (0..32).map(|i| rho(i as f64 / 32.0)).collect()).unwrap(),
    ]
}

#[test]
fn densities_have_unit_mass_and_are_positive() {
    for model in models() {
        let d = model.domain().dim();
        let side = model.domain().side();
        // the density is the product of its axis factors, each of unit mass
        let h = side / 4096.0;
        let at: Vec<f64> = (0..d).map(|axis| 0.1 + 0.2 * axis as f64).collect();
        let mut prod = 1.0;
        for (axis, &x) in at.iter().enumerate() {
            let f = model.axis_model(axis).unwrap();
            let mass: f64 = (0..4096).map(|i| f.eval(&[i as f64 * h]).unwrap()).sum::<f64>() * h;
            assert!((mass - 1.0).abs() < 1e-10, "axis {axis}: {mass}");
            prod *= f.eval(&[x]).unwrap();
        }
        assert!((model.eval(&at).unwrap() - prod).abs() < 1e-12 * prod);
        for axis in 0..d {
            for i in 0..4096 {
                let mut x = vec![0.3 * side; d];
                x[axis] = i as f64 * side / 4096.0;
                assert!(model.eval(&x).unwrap() > 0.0);
            }
        }
    }
}

#[test]
fn log_gradient_matches_finite_differences() {
    for model in models() {
        let d = model.domain().dim();
        for t in 0..20 {
            let x: Vec<f64> = (0..d).map(|a| ((t * 7 + a * 3) as f64 * 0.0371) % 1.0).collect();
            let g = model.log_gradient(&x).unwrap();
            for a in 0..d {
                let h = 1e-6;
                let (mut xp, mut xm) = (x.clone(), x.clone());
                xp[a] += h;
                xm[a] -= h;
                let fd = (model.eval(&xp).unwrap().ln() - model.eval(&xm).unwrap().ln()) / (2.0 * h);
                // the lacunary density is only C^1, so its derivative is rough
                let tol = if matches!(model.kind(), dmaps_core::density::DensityKind::CosineLacunary { .. }) {
                    1e-4
                } else {
                    1e-6
                };
                assert!((fd - g[a]).abs() <= tol * g[a].abs().max(1.0), "{fd} vs {}", g[a]);
            }
        }
    }
}

/// Kolmogorov-Smirnov statistic of one axis of a sample.
fn ks_statistic(model: &DensityModel, xs: &mut [f64], axis: usize) -> f64 {
    let cdf = model.axis_cdf(axis).unwrap();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0f64, |d, (i, &x)| {
        let f = cdf.cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

#[test]
fn marginals_pass_kolmogorov_smirnov() {
    let m = 100_000;
    for model in models() {
        let s = model.sample(m, 2024).unwrap();
        let d = model.domain().dim();
        for axis in 0..d {
            let mut xs: Vec<f64> = (0..m).map(|i| s.point(i)[axis]).collect();
            let stat = ks_statistic(&model, &mut xs, axis);
            // 1% critical value 1.628 / sqrt(n)
            assert!(stat < 1.628 / (m as f64).sqrt(), "axis {axis}: {stat}");
        }
    }
}

#[test]
fn marginals_pass_chi_squared() {
    let m = 100_000;
    let bins = 50;
    // 99th percentile of chi-squared with 49 degrees of freedom
    let critical = 74.919;
    for model in models() {
        let s = model.sample(m, 99).unwrap();
        let side = model.domain().side();
        for axis in 0..model.domain().dim() {
            let cdf = model.axis_cdf(axis).unwrap();
            let mut counts = vec![0usize; bins];
            for i in 0..m {
                let b = ((s.point(i)[axis] / side) * bins as f64) as usize;
                counts[b.min(bins - 1)] += 1;
            }
            let chi2: f64 = (0..bins)
                .map(|b| {
                    let p = cdf.cdf((b + 1) as f64 * side / bins as f64) - cdf.cdf(b as f64 * side / bins as f64);
                    let e = p * m as f64;
                    (counts[b] as f64 - e).powi(2) / e
                })
                .sum();
            assert!(chi2 < critical, "axis {axis}: chi2 = {chi2}");
        }
    }
}

#[test]
fn rejection_sampler_matches_inverse_cdf() {
    let model = DensityModel::lacunary_benchmark();
    let m = 50_000;
    let mut xs = model.sample_rejection(m, 5).unwrap().points;
    let stat = ks_statistic(&model, &mut xs, 0);
    assert!(stat < 1.628 / (m as f64).sqrt(), "{stat}");
}

#[test]
fn streams_are_reproducible_and_distinct() {
    let model = DensityModel::separable_benchmark();
    let a = model.sample_stream(500, 1, 0).unwrap();
    let b = model.sample_stream(500, 1, 0).unwrap();
    let c = model.sample_stream(500, 1, 1).unwrap();
    assert_eq!(a.points, b.points);
    assert_ne!(a.points, c.points);
}
