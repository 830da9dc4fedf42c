//! End-to-end checks of the sample -> kernel -> normalization -> spectrum
//! pipeline against independent dense solvers.

use dmaps_core::density::{DensityModel, Sample};
use dmaps_core::kernel::{KernelMatrix, KernelMode};
use dmaps_core::normalization::{
    assa, assemble_p, convergence_trace, fixed_point_residual, sinkhorn_plain, standard_weights, symmetrize,
    AssaOptions, NormalizationKind, NormalizedOperator, SinkhornAlgorithm,
};
use dmaps_core::spectral::{eigen_residual, eigensolve, nystrom_extend, EigenOptions};
use dmaps_core::torus::TorusDomain;
use nalgebra::DMatrix;

fn torus_kernel(m: usize, eps: f64, seed: u64) -> KernelMatrix {
    let model = DensityModel::lacunary_benchmark();
    let sample = model.sample(m, seed).unwrap();
    KernelMatrix::build(&sample, eps, KernelMode::periodic(*model.domain(), eps)).unwrap()
}

fn normalized(k: KernelMatrix, kind: NormalizationKind) -> NormalizedOperator {
    let w = match kind {
        NormalizationKind::Sinkhorn => assa(&k, k.eps(), &AssaOptions::for_size(k.len(), k.eps())).unwrap().0,
        NormalizationKind::Standard { alpha } => standard_weights(&k, alpha).unwrap(),
    };
    assemble_p(k, w).unwrap()
}

const KINDS: [NormalizationKind; 4] = [
    NormalizationKind::Sinkhorn,
    NormalizationKind::Standard { alpha: 0.0 },
    NormalizationKind::Standard { alpha: 0.5 },
    NormalizationKind::Standard { alpha: 1.0 },
];

#[test]
fn sinkhorn_is_doubly_stochastic() {
    for (m, eps, seed) in [(200, 0.01, 1), (500, 0.1, 2), (1000, 0.003, 3)] {
        let k = torus_kernel(m, eps, seed);
        let (w, report) = assa(&k, eps, &AssaOptions::for_size(m, eps)).unwrap();
        assert!(report.converged);
        assert!(fixed_point_residual(&k, &w.u) <= 1e-10);
        let p = assemble_p(k, w).unwrap();
        for (r, c) in p.row_sums().iter().zip(p.column_sums()) {
            assert!((r - 1.0).abs() <= 1e-10 && (c - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn sinkhorn_spectrum_lies_in_unit_interval() {
    let k = torus_kernel(800, 0.005, 11);
    let p = normalized(k, NormalizationKind::Sinkhorn);
    let full = eigensolve(&p, p.len(), &EigenOptions::default()).unwrap();
    assert!((full.semigroup_eigs[0] - 1.0).abs() <= 1e-10);
    assert!(full.semigroup_eigs.iter().all(|&mu| (-1e-10..=1.0 + 1e-10).contains(&mu)));
    let phi0 = &full.eigenvectors[0];
    assert!(phi0.iter().all(|v| (v - phi0[0]).abs() <= 1e-8 * phi0[0].abs()));
}

#[test]
fn symmetrization_matches_nonsymmetric_solve() {
    for kind in KINDS {
        let k = torus_kernel(50, 0.02, 5);
        let p = normalized(k, kind);
        let dense = DMatrix::from_row_slice(50, 50, &p.matrix());
        let mut reference: Vec<f64> = dense.complex_eigenvalues().iter().map(|z| z.re).collect();
        reference.sort_by(|a, b| b.total_cmp(a));
        let ours = eigensolve(&p, 50, &EigenOptions::default()).unwrap();
        for (a, b) in ours.semigroup_eigs.iter().zip(&reference) {
            assert!((a - b).abs() <= 1e-8, "{}: {a} vs {b}", kind.label());
        }
    }
}

#[test]
fn symmetric_conjugate_is_symmetric() {
    for kind in KINDS {
        let p = normalized(torus_kernel(120, 0.05, 8), kind);
        let s = symmetrize(&p);
        for i in 0..120 {
            for j in 0..i {
                assert_eq!(s.entry(i, j), s.entry(j, i));
            }
        }
    }
}

#[test]
fn dense_and_lanczos_paths_agree() {
    let p = normalized(torus_kernel(600, 0.01, 21), NormalizationKind::Sinkhorn);
    let dense = eigensolve(&p, 6, &EigenOptions::default()).unwrap();
    let krylov = eigensolve(&p, 6, &EigenOptions { dense_threshold: 0, ..Default::default() }).unwrap();
    for (a, b) in dense.semigroup_eigs.iter().zip(&krylov.semigroup_eigs) {
        assert!((a - b).abs() < 1e-10);
    }
    for j in 0..6 {
        assert!(eigen_residual(&p, &krylov, j) < 1e-8);
    }
}

#[test]
fn eigenvectors_are_weighted_orthonormal() {
    for kind in KINDS {
        let p = normalized(torus_kernel(300, 0.01, 4), kind);
        let r = eigensolve(&p, 5, &EigenOptions::default()).unwrap();
        for a in 0..5 {
            for b in 0..5 {
                let ip = r.inner(&r.eigenvectors[a], &r.eigenvectors[b]);
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!((ip - expect).abs() < 1e-10, "{a} {b} {ip}");
            }
        }
    }
}

#[test]
fn graph_laplacian_bound() {
    for kind in KINDS {
        let p = normalized(torus_kernel(400, 0.01, 6), kind);
        let r = eigensolve(&p, 10, &EigenOptions::default()).unwrap();
        for (l, lt) in r.generator_eigs.iter().zip(&r.laplacian_eigs) {
            assert!((lt - l).abs() <= l * l * r.eps / 2.0 + 1e-12);
        }
    }
}

#[test]
fn nystrom_reproduces_sample_values() {
    for kind in KINDS {
        let p = normalized(torus_kernel(400, 0.01, 9), kind);
        let r = eigensolve(&p, 4, &EigenOptions::default()).unwrap();
        let pts = p.kernel().sample().points.clone();
        for j in 0..4 {
            let ext = nystrom_extend(&p, r.semigroup_eigs[j], &r.eigenvectors[j], &pts).unwrap();
            let scale = r.eigenvectors[j].iter().fold(0.0f64, |a, v| a.max(v.abs()));
            for (a, b) in ext.iter().zip(&r.eigenvectors[j]) {
                assert!((a - b).abs() <= 1e-8 * scale, "{}: {a} vs {b}", kind.label());
            }
        }
    }
}

#[test]
fn nystrom_interpolates_smoothly() {
    // extension to a fine grid approximates the continuum eigenfunction: neighbours
    // in x have nearby values
    let p = normalized(torus_kernel(2000, 1e-3, 13), NormalizationKind::Sinkhorn);
    let r = eigensolve(&p, 2, &EigenOptions::default()).unwrap();
    let grid: Vec<f64> = (0..512).map(|i| i as f64 / 512.0).collect();
    let ext = nystrom_extend(&p, r.semigroup_eigs[1], &r.eigenvectors[1], &grid).unwrap();
    let jump = ext.windows(2).fold(0.0f64, |a, w| a.max((w[1] - w[0]).abs()));
    assert!(jump < 0.1, "{jump}");
    // and the first nontrivial mode resembles a single Fourier mode
    let c: f64 = grid.iter().zip(&ext).map(|(x, f)| f * (2.0 * std::f64::consts::PI * x).cos()).sum();
    let s: f64 = grid.iter().zip(&ext).map(|(x, f)| f * (2.0 * std::f64::consts::PI * x).sin()).sum();
    let nrm: f64 = ext.iter().map(|f| f * f).sum::<f64>().sqrt();
    let corr = (c * c + s * s).sqrt() / (nrm * (256.0f64).sqrt());
    assert!(corr > 0.95, "{corr}");
}

#[test]
fn assa_beats_plain_sinkhorn() {
    let sample = Sample::standard_normal(3, 1000, 3).unwrap();
    let k = KernelMatrix::build(&sample, 0.5, KernelMode::euclidean(3)).unwrap();
    let fast = convergence_trace(&k, SinkhornAlgorithm::Assa, None, 1e-13, 200).unwrap();
    let slow = convergence_trace(&k, SinkhornAlgorithm::Plain, None, 1e-13, 5000).unwrap();
    let (na, np) = (fast.iterations_to_tol.unwrap(), slow.iterations_to_tol.unwrap());
    assert!(na <= 60 && 3 * na <= np, "{na} vs {np}");
    let (wa, ra) = assa(&k, 0.5, &AssaOptions::for_size(k.len(), 0.5)).unwrap();
    let (wp, rp) = sinkhorn_plain(&k, &vec![1.0; k.len()], 1e-13, 5000).unwrap();
    assert!(ra.converged && rp.converged);
    for (a, b) in wa.u.iter().zip(&wp.u) {
        assert!((a - b).abs() <= 1e-12 * a);
    }
    assert!(ra.tail_contraction.unwrap() <= 0.2);
}

#[test]
fn uniform_torus_spectrum_matches_fourier_modes() {
    // evenly spaced points on the circle: K is circulant, so P's spectrum is
    // known exactly
    let m = 64;
    let eps = 0.01;
    let pts: Vec<f64> = (0..m).map(|i| i as f64 / m as f64).collect();
    let dom = TorusDomain::unit(1);
    let sample = Sample::from_points(Some(dom), 1, pts.clone(), 0).unwrap();
    let k = KernelMatrix::build(&sample, eps, KernelMode::periodic(dom, eps)).unwrap();
    let p = normalized(k, NormalizationKind::Sinkhorn);
    let r = eigensolve(&p, 3, &EigenOptions::default()).unwrap();
    let row = p.kernel().row(0).to_vec();
    let sum: f64 = row.iter().sum();
    let mu1: f64 = row.iter().zip(&pts).map(|(k, x)| k * (2.0 * std::f64::consts::PI * x).cos()).sum::<f64>() / sum;
    assert!((r.semigroup_eigs[1] - mu1).abs() < 1e-12);
    assert!((r.semigroup_eigs[2] - mu1).abs() < 1e-12);
}
