//! Eigenvalue bias rates on the lacunary density once `eps` is small enough
//! for every significant Fourier mode of the density to be resolved by the
//! kernel.

use dmaps::config::{BiasConfig, DensitySpec};
use dmaps::experiments::bias;

#[test]
fn rates_in_the_asymptotic_regime() {
    let cfg = BiasConfig { eps_min: 1e-5, eps_max: 1e-4, eps_points: 6, n_grid: 4096, k: 1, ..BiasConfig::default() };
    let out = bias::run(&cfg).unwrap();
    let standard = out.rate("standard:0.5", 1).unwrap().slope.unwrap();
    let sinkhorn = out.rate("sinkhorn", 1).unwrap().slope.unwrap();
    println!("standard slope {standard:.3}, sinkhorn slope {sinkhorn:.3}");
    assert!((0.9..=1.1).contains(&standard), "{standard}");
    assert!((1.8..=2.2).contains(&sinkhorn), "{sinkhorn}");
    let es = out.errors("sinkhorn", 1);
    let ed = out.errors("standard:0.5", 1);
    assert!(es.iter().zip(&ed).all(|(s, d)| s < d));
}

#[test]
fn uniform_density_has_no_sinkhorn_bias() {
    let cfg = BiasConfig {
        density: DensitySpec::Uniform { side: 1.0, dim: 1 },
        eps: Some(vec![1e-3, 1e-2, 1e-1]),
        n_modes: 101,
        n_grid: 512,
        ..BiasConfig::default()
    };
    let out = bias::run(&cfg).unwrap();
    for r in &out.rows {
        // both weightings are exact for constant densities
        assert!(r.err_lambda <= 1e-10 * r.reference, "{r:?}");
    }
    assert_eq!(out.rates.len(), 6);
}

#[test]
fn separable_densities_use_a_tensor_reference() {
    let cfg = BiasConfig {
        density: DensitySpec::SeparableBenchmark,
        normalizations: vec!["sinkhorn".into()],
        eps: Some(vec![2e-3, 4e-3, 8e-3]),
        n_modes: 129,
        n_grid: 512,
        k: 2,
        ..BiasConfig::default()
    };
    let out = bias::run(&cfg).unwrap();
    assert_eq!(out.rows.len(), 6);
    assert!(out.rows.iter().all(|r| r.err_subspace_l2.is_none() && r.err_lambda > 0.0));
    let slope = out.rate("sinkhorn", 1).unwrap().slope.unwrap();
    assert!((1.7..=2.3).contains(&slope), "{slope}");
}
