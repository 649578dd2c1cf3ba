use opmod_core::classical::{evaluate, multiplication_matrix, Family};
use opmod_core::connection::{
    connection_coefficients, gautschi_residual, modified_jacobi, synthesize, Backend, ConnectionFactor,
    ConnectionProblem,
};
use opmod_core::displacement::TriangularFactor;
use opmod_core::gram::gram_from_moments;
use opmod_core::moments::{MomentVector, Preset};
use opmod_core::quadrature::Point;
use opmod_core::Error;

fn factor(p: &Preset, n: usize, backend: Backend) -> (ConnectionProblem, ConnectionFactor) {
    let prob = ConnectionProblem::new(p.moments(2 * n - 1).unwrap(), n)
        .unwrap()
        .with_backend(backend);
    let r = connection_coefficients(&prob).unwrap();
    (prob, r)
}

#[test]
fn szego_envelope_for_four_algebraic_factors() {
    let p = Preset::algebraic_default();
    let (_, r) = factor(&p, 128, Backend::DisplacementCholesky);
    let sing = p.singular_points();
    let xs: Vec<f64> = (1..2000)
        .map(|i| -1.0 + i as f64 / 1000.0)
        .filter(|x| x.abs() < 0.98 && sing.iter().all(|s| (x - s).abs() > 0.02))
        .collect();
    let q = synthesize(&r, &p.family(), 100, &xs).unwrap();
    let mut worst: f64 = 0.0;
    for (x, v) in xs.iter().zip(&q) {
        assert!(v.is_finite());
        let w = p.weight(&Point::plain(*x));
        let env = v.abs() * (w * std::f64::consts::PI * (1.0 - x * x).sqrt() / 2.0).sqrt();
        worst = worst.max(env);
    }
    assert!(worst <= 2.5, "envelope {worst}");
    // the bound is not vacuous: q_100 oscillates at full amplitude somewhere
    assert!(worst > 0.5);
}

#[test]
fn legendre_delta_weight_factor_is_accurate() {
    let p = Preset::DeltaSqrt(0.1);
    let n = 512;
    let prob = ConnectionProblem::new(p.moments(2 * n - 1).unwrap(), n).unwrap();
    assert_eq!(prob.backend, Backend::DisplacementCholesky);
    let x = prob.multiplication().unwrap();
    let w = prob.fill(&x).unwrap();
    assert!(w.section.bandwidth().is_some());
    let r = prob.factor(&w, &x).unwrap();
    assert!(r.relative_residual(&w.section) <= 1e-10);
}

#[test]
fn laguerre_step_pipeline_at_stable_size() {
    let p = Preset::LaguerreStep;
    let n = 16;
    let (prob, r) = factor(&p, n, Backend::DenseCholesky);
    let x = prob.multiplication().unwrap();
    let xq = modified_jacobi(&r, &x).unwrap();
    assert!(gautschi_residual(&r, &x, &xq) <= 1e-9);
    // Q is orthonormal under the step weight: check <q_3, q_5> and <q_4, q_4>
    // against the weight's own Gram matrix
    let w = gram_from_moments(&p.moments(2 * n - 1).unwrap(), &multiplication_matrix(&p.family(), 2 * n - 1).unwrap(), n)
        .unwrap()
        .to_dense();
    let rd = r.to_dense();
    let rinv = rd.clone().try_inverse().unwrap();
    let gram_q = rinv.transpose() * &w * &rinv;
    assert!((gram_q[(4, 4)] - 1.0).abs() < 1e-8);
    assert!(gram_q[(3, 5)].abs() < 1e-8);
}

#[test]
fn synthesis_agrees_with_direct_expansion() {
    let p = Preset::Jacobi(0.5, -0.5);
    let n = 20;
    let (_, r) = factor(&p, n, Backend::DenseCholesky);
    let rinv = r.to_dense().try_inverse().unwrap();
    let xs = [-0.7, 0.1, 0.8];
    let q = synthesize(&r, &p.family(), 9, &xs).unwrap();
    for (x, v) in xs.iter().zip(q) {
        let pv = evaluate(&p.family(), n, *x);
        let direct: f64 = (0..n).map(|j| pv[j] * rinv[(j, 9)]).sum();
        assert!((v - direct).abs() < 1e-12 * direct.abs().max(1.0));
    }
}

#[test]
fn band_file_roundtrip() {
    let (_, r) = factor(&Preset::DeltaSqrt(1.0), 200, Backend::DisplacementCholesky);
    let ConnectionFactor::Triangular(l) = r else { panic!("expected a triangular factor") };
    assert!(l.is_banded());
    let mut buf = Vec::new();
    l.write_band(&mut buf).unwrap();
    assert_eq!(buf.len(), 16 + 8 * 200 * (l.bandwidth() + 1));
    assert_eq!(TriangularFactor::read_band(buf.as_slice()).unwrap(), l);
    assert!(TriangularFactor::read_band(&buf[..20]).is_err());
}

#[test]
fn indefinite_moments_are_reported() {
    // against ChebyshevT, W[1,1] = (mu_0 + mu_2) / 2 = -1
    let n = 3;
    let mu = MomentVector::new(
        Family::chebyshev_t(),
        vec![1.0, 0.0, -3.0, 0.0, 0.0],
        opmod_core::moments::Provenance::ClosedForm,
    )
    .unwrap();
    for b in [Backend::DenseCholesky, Backend::DisplacementCholesky] {
        let prob = ConnectionProblem::new(mu.clone(), n).unwrap().with_backend(b);
        assert!(matches!(connection_coefficients(&prob), Err(Error::NotPositiveDefinite(_))), "{b}");
    }
}
