use proptest::prelude::*;
use threeplayer::toy::{
    analytic_posterior, boundary_angle, overlap_score, points_of, posterior_margin,
    rasterize_surface, sample_mixture, GaussianClassSpec, RasterBounds,
};

// Fraction of one class's draws with posterior margin below 0.5, in closed
// form: the margin is |tanh((x + y) / σ²)| and x + y ~ N(2, 2σ²).
const OVERLAP_SIGMA_1: f64 = 0.11677096206;
const OVERLAP_SIGMA_HALF: f64 = 0.00296364868646;

#[test]
fn overlap_score_matches_closed_form() {
    for (spec, expected) in [
        (GaussianClassSpec::overlap(), OVERLAP_SIGMA_1),
        (GaussianClassSpec::separable(), OVERLAP_SIGMA_HALF),
    ] {
        let points = points_of(&sample_mixture(&spec, 50_000, 17)).unwrap();
        let got = overlap_score(&points, &spec, 0.5).unwrap();
        assert!((got - expected).abs() < 0.01, "{got} vs {expected}");
    }
}

#[test]
fn posterior_at_the_class_mean() {
    // log-odds at (1, 1) with σ = 0.5 is 16
    let p = analytic_posterior(&GaussianClassSpec::separable(), [1.0, 1.0]);
    assert!((p[0] - (1.0 - 0.9999998874648379449)).abs() < 1e-15);
    assert!((p[1] - 0.9999998874648379449).abs() < 1e-15);
    assert_eq!(
        posterior_margin(&GaussianClassSpec::overlap(), [0.0, 0.0]).unwrap(),
        0.0
    );
}

#[test]
fn raster_refinement_agrees_at_shared_centers() {
    // the middle cell of every 3 x 3 block at resolution 3r has the center of
    // the covering cell at resolution r
    let classify = |p: [f64; 2]| {
        let s = 0.8 * p[0] + 1.3 * p[1] - 0.21;
        Ok((usize::from(s > 0.0), s))
    };
    let bounds = RasterBounds::square(-3.0, 3.0);
    let coarse = rasterize_surface(classify, bounds, 20).unwrap();
    let fine = rasterize_surface(classify, bounds, 60).unwrap();
    for row in 0..20 {
        for col in 0..20 {
            let a = coarse.cell_center(row, col);
            let b = fine.cell_center(3 * row + 1, 3 * col + 1);
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
            assert_eq!(
                coarse.class_at(row, col),
                fine.class_at(3 * row + 1, 3 * col + 1)
            );
        }
    }
    let ones =
        |r: &threeplayer::toy::SurfaceRaster| r.classes.iter().filter(|&&c| c == 1).count() as f64;
    let share = (ones(&coarse) / 400.0 - ones(&fine) / 3600.0).abs();
    assert!(share < 0.05, "{share}");
}

#[test]
fn raster_rejects_degenerate_grids() {
    let classify = |_: [f64; 2]| Ok((0, 1.0));
    assert!(rasterize_surface(classify, RasterBounds::square(-1.0, 1.0), 1).is_err());
    assert!(rasterize_surface(classify, RasterBounds::square(1.0, 1.0), 4).is_err());
}

proptest! {
    #[test]
    fn angle_ignores_scale_and_orientation(x in -10.0f64..10.0, y in -10.0f64..10.0, k in 0.01f64..100.0) {
        prop_assume!(x.abs() + y.abs() > 1e-3);
        let a = boundary_angle([x, y]).unwrap();
        prop_assert!((0.0..=90.0).contains(&a));
        prop_assert!((boundary_angle([k * x, k * y]).unwrap() - a).abs() < 1e-9);
        prop_assert!((boundary_angle([-x, -y]).unwrap() - a).abs() < 1e-12);
    }

    #[test]
    fn overlap_is_a_symmetric_fraction(
        pts in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 1..50),
        tau in 0.01f64..0.99,
    ) {
        let spec = GaussianClassSpec::overlap();
        let points: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let mirrored: Vec<[f64; 2]> = points.iter().map(|p| [-p[0], -p[1]]).collect();
        let s = overlap_score(&points, &spec, tau).unwrap();
        prop_assert!((0.0..=1.0).contains(&s));
        prop_assert_eq!(s, overlap_score(&mirrored, &spec, tau).unwrap());
    }

    #[test]
    fn posteriors_sum_to_one(x in -6.0f64..6.0, y in -6.0f64..6.0) {
        for spec in [GaussianClassSpec::separable(), GaussianClassSpec::overlap()] {
            let p = analytic_posterior(&spec, [x, y]);
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
