use proptest::prelude::*;
use sfrrt::container::{
    conservative_frustum_of, max_tilt_angle, profile_tilt_oracle, tilt_angle_oracle, ContainerSpec, TiltCase, WallProfile,
};

fn container() -> impl Strategy<Value = ContainerSpec> {
    (0.01f64..0.08, 0.0f64..0.06, 0.03f64..0.3, 0.0f64..1.0)
        .prop_map(|(r_b, dr, h_c, f)| ContainerSpec::new(r_b, r_b + dr, h_c, f * h_c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn closed_form_matches_area_oracle(c in container()) {
        let exact = max_tilt_angle(&c).unwrap();
        let oracle = tilt_angle_oracle(&c, 1e-9).unwrap();
        prop_assert!((exact.theta_max - oracle.theta_max).abs() < 1e-4, "{c:?}: {} vs {}", exact.theta_max, oracle.theta_max);
        prop_assert!((0.0..=std::f64::consts::FRAC_PI_2).contains(&exact.theta_max));
    }

    #[test]
    fn more_liquid_never_tilts_further(c in container(), extra in 0.0f64..1.0) {
        let fuller = c.with_fill(c.h_w + extra * (c.h_c - c.h_w)).unwrap();
        prop_assert!(fuller.theta_max().unwrap() <= c.theta_max().unwrap() + 1e-12);
    }

    #[test]
    fn taller_container_at_same_fraction_tilts_further(c in container(), grow in 1.0f64..3.0) {
        let taller = ContainerSpec::new(c.r_b, c.r_u, c.h_c * grow, c.h_w * grow).unwrap();
        // Keeps wall radii fixed, so the slope flattens as height grows.
        prop_assert!(taller.theta_max().unwrap() >= c.theta_max().unwrap() - 1e-12);
    }

    #[test]
    fn case_boundary_is_continuous(r_b in 0.01f64..0.06, dr in 0.0f64..0.05, h_c in 0.05f64..0.3) {
        // Fill where the wetted bottom exactly spans the base: 2A/h_c = 2 r_b.
        let s = dr / h_c;
        let target_area = r_b * h_c;
        // Solve h (2 r_b + s h) = target_area for h.
        let h = if s > 0.0 { (-2.0 * r_b + (4.0 * r_b * r_b + 4.0 * s * target_area).sqrt()) / (2.0 * s) } else { target_area / (2.0 * r_b) };
        prop_assume!(h > 1e-6 && h < h_c - 1e-6);
        let c = ContainerSpec::new(r_b, r_b + dr, h_c, h).unwrap();
        let below = max_tilt_angle(&c.with_fill(h * (1.0 - 1e-7)).unwrap()).unwrap();
        let above = max_tilt_angle(&c.with_fill(h * (1.0 + 1e-7)).unwrap()).unwrap();
        prop_assert_eq!(below.case, TiltCase::TriangleOnly);
        prop_assert_eq!(above.case, TiltCase::TrapezoidPlusTriangle);
        prop_assert!((below.theta_max - above.theta_max).abs() < 1e-5);
    }

    #[test]
    fn frustum_of_a_frustum_is_itself(c in container()) {
        let profile = WallProfile::from_pairs(&[(0.0, c.r_b), (c.h_c / 2.0, c.radius_at(c.h_c / 2.0)), (c.h_c, c.r_u)], c.h_w);
        let f = conservative_frustum_of(&profile).unwrap();
        prop_assert!((f.r_b - c.r_b).abs() < 1e-9 && (f.r_u - c.r_u).abs() < 1e-9);
        prop_assert!((f.h_w - c.h_w).abs() < 1e-7);
        let direct = profile_tilt_oracle(&profile, 1e-9).unwrap();
        prop_assert!((direct - c.theta_max().unwrap()).abs() < 1e-4);
    }

    #[test]
    fn inscribed_frustum_is_conservative(r0 in 0.015f64..0.05, a in 0.0f64..0.3, b in 0.0f64..2.0, h_c in 0.05f64..0.2, f in 0.05f64..0.95) {
        let pairs: Vec<(f64, f64)> = (0..=12).map(|i| {
            let y = h_c * i as f64 / 12.0;
            (y, r0 + a * y - b * y * y)
        }).collect();
        prop_assume!(pairs.iter().all(|p| p.1 > 0.005));
        let profile = WallProfile::from_pairs(&pairs, f * h_c);
        let frustum = conservative_frustum_of(&profile).unwrap();
        let real = profile_tilt_oracle(&profile, 1e-9).unwrap();
        prop_assert!(frustum.theta_max().unwrap() <= real + 1e-6, "frustum {} > real {}", frustum.theta_max().unwrap(), real);
    }
}

#[test]
fn analytic_cylinders() {
    let c = ContainerSpec::cylinder(0.04, 0.10, 0.06).unwrap();
    assert!((c.theta_max().unwrap() - 45f64.to_radians()).abs() < 1e-6);
    let low = c.with_fill(0.02).unwrap();
    // Wetted bottom width w = 2A / h_c with rest area A = 2 r h_w.
    let expect = (0.10f64).atan2(2.0 * 0.04 * 0.02 * 2.0 / 0.10);
    assert!((low.theta_max().unwrap() - expect).abs() < 1e-12);
    assert!((low.theta_max().unwrap().to_degrees() - 72.2553).abs() < 1e-3);
}
