mod common;

use common::*;
use sdg_ibm::app::forcing::rotating_field;
use sdg_ibm::assembly::{assemble_convection, build_momentum, load_vector, ConvectionForm};
use sdg_ibm::mesh::Point;
use sdg_ibm::postprocess::PostprocessedVelocity;
use sdg_ibm::solver::Discretization;
use sdg_ibm::spaces::SpaceKind;

fn dense(m: &sdg_ibm::sparse::CsrMatrix) -> nalgebra::DMatrix<f64> {
    m.to_dense()
}

#[test]
fn space_dimensions_match_constraint_rank() {
    for n in [2, 3, 4] {
        let disc = Discretization::unit_square(n).unwrap();
        for (kind, layout) in [
            (SpaceKind::VelocityComponent, &disc.spaces.velocity),
            (SpaceKind::Gradient, &disc.spaces.gradient),
            (SpaceKind::Pressure, &disc.spaces.pressure),
        ] {
            let k = constraint_matrix(&disc.mesh, kind);
            let expected = k.ncols() - numerical_rank(&k);
            let t = transfer_matrix(layout);
            assert_eq!(layout.dim, expected, "{kind:?} at N={n}");
            assert_eq!(numerical_rank(&t), layout.dim, "{kind:?} basis is not independent");
            assert!((&k * &t).amax() < 1e-12, "{kind:?} basis violates continuity");
        }
    }
}

#[test]
fn adjoint_relations_hold_on_odd_mesh() {
    let disc = Discretization::unit_square(3).unwrap();
    assert!(max_abs_diff(&dense(&disc.core.b), &oracle_b(&disc)) < 1e-12);
    assert!(max_abs_diff(&dense(&disc.core.c), &oracle_c(&disc)) < 1e-12);
}

#[test]
fn convection_matrix_matches_oracle_for_a_nonzero_field() {
    let disc = Discretization::unit_square(3).unwrap();
    let u = disc.project_divergence_free(&load_vector(&disc.mesh, &disc.spaces, rotating_field)).unwrap();
    let v = disc.postprocess(&u).unwrap();
    let r = assemble_convection(&disc.mesh, &v).matrix(&disc.core, &disc.spaces);
    assert!(max_abs_diff(&dense(&r), &oracle_r(&disc, &v)) < 1e-12);
    let zero = ConvectionForm::zero(disc.mesh.num_macros()).matrix(&disc.core, &disc.spaces);
    assert_eq!(zero.max_abs(), 0.0);
    assert!(oracle_r(&disc, &PostprocessedVelocity::zeros(disc.mesh.num_macros())).amax() == 0.0);
}

#[test]
fn rows_of_c_sum_to_zero() {
    // constants lie in the pressure space and annihilate the divergence
    let disc = Discretization::unit_square(4).unwrap();
    let ones = vec![1.0; disc.core.n_pressure];
    let ct = disc.core.c.transpose().mul_vec(&ones);
    assert!(ct.iter().all(|v| v.abs() < 1e-13));
}

#[test]
fn momentum_operator_is_mass_plus_laplacian_plus_convection() {
    let disc = Discretization::unit_square(3).unwrap();
    let u = disc.project_divergence_free(&load_vector(&disc.mesh, &disc.spaces, rotating_field)).unwrap();
    let v = disc.postprocess(&u).unwrap();
    let conv = assemble_convection(&disc.mesh, &v);
    let (alpha, mu, rho) = (7.0, 0.3, 2.0);
    let op = build_momentum(&disc.core, &conv, alpha, mu, rho).unwrap();
    let expected = disc.core.m_tilde.scale(alpha).add_scaled(mu, &op.negative_laplacian()).add_scaled(rho, &op.convection());
    assert!(op.matrix().add_scaled(-1.0, &expected).max_abs() < 1e-11);
}

#[test]
fn load_vector_integrates_constants() {
    let disc = Discretization::unit_square(4).unwrap();
    let f = load_vector(&disc.mesh, &disc.spaces, |_| Point::new(1.0, -2.0));
    let nu = disc.n_velocity();
    // (1, v) for the interior nodal function of a sub-triangle is area/3
    let t = 5;
    let g = disc.spaces.velocity.local(t, 2)[0].0;
    assert!((f[g] - disc.mesh.elements[t].area / 3.0).abs() < 1e-14);
    assert!((f[nu + g] + 2.0 * disc.mesh.elements[t].area / 3.0).abs() < 1e-14);
}
