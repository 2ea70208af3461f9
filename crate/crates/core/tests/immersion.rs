mod common;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use translator_lab::grid::Grid;
use translator_lab::immersion::{
    conformal_curvature_closed_form, conformal_sectional_curvature, read_patch, unit_vector, weighted_volume,
    write_patch, ConformalAmbient, GraphPatch,
};

use common::fd_sectional;

fn random_unit(d: usize, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let v = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
    let len = v.norm();
    v / len
}

#[test]
fn conformal_curvature_matches_differenced_riemann_tensor() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..30 {
        let d = rng.random_range(2..=4);
        let n = rng.random_range(1..d);
        let v = random_unit(d, &mut rng);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
        let a = random_unit(d, &mut rng);
        let mut b = random_unit(d, &mut rng);
        b -= a.dot(&b) * &a;
        let b = b.normalize();
        let section = DMatrix::from_fn(2, d, |r, c| if r == 0 { a[c] } else { b[c] });
        let amb = ConformalAmbient::new(v.as_slice().to_vec(), n).unwrap();
        let closed = conformal_curvature_closed_form(&amb, &x, &section).unwrap();
        let tensor = conformal_sectional_curvature(&amb, &x, &section).unwrap();
        let oracle = fd_sectional(v.as_slice(), n, &x, &a, &b);
        assert!((closed - oracle).abs() <= 1e-5, "closed form {closed} vs differenced {oracle}");
        assert!((tensor - oracle).abs() <= 1e-5, "tensor {tensor} vs differenced {oracle}");
    }
}

#[test]
fn patch_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let grid = Grid::new(vec![-1.0, 0.0], vec![1.0, 0.5], vec![9, 5]).unwrap();
    let patch = GraphPatch::from_fn(grid, 2, unit_vector(4, 3), |x| vec![x[0] * x[1], (x[0] - x[1]).sin()]).unwrap();
    let (header, _) = write_patch(&patch, &dir.path().join("p")).unwrap();
    let back = read_patch(&header).unwrap();
    assert_eq!(back, patch);
    assert_eq!(weighted_volume(&back).to_bits(), weighted_volume(&patch).to_bits());
}
