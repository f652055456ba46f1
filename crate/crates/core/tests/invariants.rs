use nonlocal_ch::local_op::{inv_laplacian, laplacian};
use nonlocal_ch::nonlocal_op::apply_direct;
use nonlocal_ch::norms::{hminus1_norm, sobolev_norm};
use nonlocal_ch::{Boundary, Field, MollifierSpec, NonlocalOperator, Profile, Spectral, UniformGrid};
use proptest::prelude::*;

fn boundary() -> impl Strategy<Value = Boundary> {
    prop_oneof![Just(Boundary::Neumann), Just(Boundary::Periodic)]
}

/// A grid with 1D or 2D shape and a pair of random fields on it.
fn fields() -> impl Strategy<Value = (UniformGrid, Vec<f64>, Vec<f64>)> {
    (1usize..=2, boundary(), 8usize..40).prop_flat_map(|(dim, b, cells)| {
        let cells = if dim == 2 { cells.min(20) } else { cells };
        let grid = UniformGrid::new(&vec![cells; dim], &vec![1.0; dim], b).unwrap();
        let n = grid.len();
        (
            Just(grid),
            prop::collection::vec(-1.0f64..1.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
        )
    })
}

fn operator(grid: &UniformGrid, eps_cells: f64) -> NonlocalOperator {
    let m = MollifierSpec::new(grid.dim(), Profile::Poly23).unwrap();
    let eps = (eps_cells * grid.max_spacing()).min(0.45);
    NonlocalOperator::new(&m.at_scale(eps).unwrap(), grid).unwrap()
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nonlocal_operator_is_self_adjoint_and_nonnegative(
        (grid, u, v) in fields(),
        eps_cells in 2.0f64..6.0,
    ) {
        let op = operator(&grid, eps_cells);
        let u = Field::new(grid.clone(), u).unwrap();
        let v = Field::new(grid.clone(), v).unwrap();
        let lu = op.apply(&u).unwrap();
        let lv = op.apply(&v).unwrap();
        let a = lu.inner(&v).unwrap();
        let b = u.inner(&lv).unwrap();
        let scale = lu.l2_norm() * v.l2_norm() + u.l2_norm() * lv.l2_norm();
        prop_assert!(rel(a, b, scale) < 1e-12, "{a} vs {b}");
        prop_assert!(lu.inner(&u).unwrap() >= -1e-12 * lu.l2_norm() * u.l2_norm());
        // mean annihilation
        prop_assert!(lu.integrate().abs() <= 1e-12 * lu.l2_norm().max(1.0));
    }

    #[test]
    fn fft_matches_direct_sum((grid, u, _v) in fields(), eps_cells in 2.0f64..6.0) {
        let op = operator(&grid, eps_cells);
        let u = Field::new(grid, u).unwrap();
        let fast = op.apply(&u).unwrap();
        let direct = apply_direct(op.kernel(), &u).unwrap();
        prop_assert!(fast.sub(&direct).unwrap().l2_norm() <= 1e-11 * direct.l2_norm().max(1.0));
    }

    #[test]
    fn laplacian_is_self_adjoint_and_nonpositive((grid, u, v) in fields()) {
        let sp = Spectral::new(&grid);
        let u = Field::new(grid.clone(), u).unwrap();
        let v = Field::new(grid.clone(), v).unwrap();
        let du = laplacian(&sp, &u).unwrap();
        let dv = laplacian(&sp, &v).unwrap();
        let a = du.inner(&v).unwrap();
        let b = u.inner(&dv).unwrap();
        prop_assert!(rel(a, b, du.l2_norm() * v.l2_norm()) < 1e-11, "{a} vs {b}");
        prop_assert!(du.inner(&u).unwrap() <= 1e-11 * du.l2_norm() * u.l2_norm());
    }

    #[test]
    fn parseval_and_round_trip((grid, u, _v) in fields()) {
        let sp = Spectral::new(&grid);
        let f = Field::new(grid.clone(), u.clone()).unwrap();
        let energy = sp.quadratic_form(&u, |_| 1.0);
        prop_assert!(rel(energy, f.l2_norm().powi(2), energy) < 1e-12);
        let back = sp.inverse(sp.forward(&u));
        let err = back.iter().zip(&u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        prop_assert!(err < 1e-12);
    }

    #[test]
    fn inverse_laplacian_inverts_on_mean_zero_fields((grid, u, _v) in fields()) {
        let sp = Spectral::new(&grid);
        let f = Field::new(grid.clone(), u).unwrap();
        let f = f.sub(&Field::constant(&grid, f.mean())).unwrap();
        let back = laplacian(&sp, &inv_laplacian(&sp, &f).unwrap()).unwrap().scale(-1.0);
        prop_assert!(back.sub(&f).unwrap().l2_norm() <= 1e-10 * f.l2_norm().max(1e-12));
    }

    #[test]
    fn norms_are_ordered((grid, u, _v) in fields()) {
        let sp = Spectral::new(&grid);
        let f = Field::new(grid.clone(), u).unwrap();
        let f = f.sub(&Field::constant(&grid, f.mean())).unwrap();
        let m1 = sobolev_norm(&sp, &f, -1.0).unwrap();
        let mh = sobolev_norm(&sp, &f, -0.5).unwrap();
        let l2 = f.l2_norm();
        let h1 = sobolev_norm(&sp, &f, 1.0).unwrap();
        let dual = hminus1_norm(&sp, &f).unwrap();
        let slack = 1.0 + 1e-12;
        prop_assert!(m1 <= mh * slack && mh <= l2 * slack && l2 <= h1 * slack);
        // the smallest nonzero eigenvalue on the unit box is pi^2
        prop_assert!(m1 <= dual * slack);
        prop_assert!(dual <= l2 / std::f64::consts::PI * slack);
    }
}
