use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use nalgebra::{UnitQuaternion, Vector3};
use proptest::prelude::*;
use sfrrt::container::ContainerSpec;
use sfrrt::planner::Path;
use sfrrt::se3::{Aabb, Pose};
use sfrrt::spill::{jerk_schedule, oracle_label, sftp, ClassifierHandle, SftpParams, SloshParams, SpillError, SpillVerdict};
use sfrrt::timeparam::{parameterize, KinematicLimits};

fn bounds() -> Aabb {
    Aabb::new(Vector3::new(-1.0, -1.0, 0.0), Vector3::new(1.0, 1.0, 1.0))
}

fn path(dx: f64, dy: f64, tilt: f64) -> Path {
    let a = Pose::upright(Vector3::new(0.0, 0.0, 0.3));
    let b = Pose::new(Vector3::new(dx, dy, 0.3), UnitQuaternion::from_axis_angle(&Vector3::y_axis(), tilt));
    Path::from_poses(vec![a, b], 0.3)
}

/// Rejects the first `k` queries and records each trajectory's duration.
fn scripted(k: usize, durations: Arc<Mutex<Vec<f64>>>) -> ClassifierHandle {
    let calls = AtomicUsize::new(0);
    ClassifierHandle::Custom(Arc::new(move |t, _| {
        durations.lock().unwrap().push(t.duration());
        let n = calls.fetch_add(1, Ordering::SeqCst);
        SpillVerdict::from_margin(if n < k { -1.0 } else { 1.0 }, 0.0)
    }))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn margin_non_increasing_in_fill(dx in -0.8f64..0.8, dy in -0.5f64..0.5, tilt in 0.0f64..0.8,
                                     j in 1.0f64..150.0, r in 0.02f64..0.05, f1 in 0.05f64..0.95, f2 in 0.05f64..0.95) {
        let limits = KinematicLimits { j_max: j, a_max: 5.0, v_max: 1.0, ..Default::default() };
        let traj = parameterize(&path(dx, dy, tilt), &limits, 0.01).unwrap();
        let (lo, hi) = (f1.min(f2), f1.max(f2));
        let base = ContainerSpec::cylinder(r, 0.12, 0.0).unwrap();
        let m_lo = oracle_label(&traj, &base.with_fill(lo * 0.12).unwrap(), &SloshParams::default()).unwrap().margin;
        let m_hi = oracle_label(&traj, &base.with_fill(hi * 0.12).unwrap(), &SloshParams::default()).unwrap().margin;
        prop_assert!(m_hi <= m_lo + 1e-12);
    }

    #[test]
    fn query_count_is_one_plus_rejections(k in 0usize..14, rate in 1.2f64..4.0, floor_div in 2.0f64..2000.0) {
        let limits = KinematicLimits::default();
        let params = SftpParams { rate, j_floor: Some(limits.j_max / floor_div), ..Default::default() };
        let schedule = jerk_schedule(&limits, &params);
        prop_assert_eq!(schedule.len() as f64, floor_div.ln().div_euclid(rate.ln()) + if (floor_div.ln() / rate.ln()).fract() > 1e-12 { 1.0 } else { 0.0 });
        for (i, l) in schedule.iter().enumerate() {
            prop_assert_eq!(l.j_max, limits.j_max / rate.powi(i as i32));
            prop_assert!(l.j_max > params.j_floor.unwrap());
        }
        let durations = Arc::new(Mutex::new(Vec::new()));
        let c = ContainerSpec::cylinder(0.03, 0.1, 0.05).unwrap();
        let result = sftp(&path(0.5, 0.1, 0.3), &limits, &scripted(k, durations.clone()), &params, &c, &bounds());
        let seen = durations.lock().unwrap().clone();
        if k < schedule.len() {
            let r = result.unwrap();
            prop_assert_eq!(r.queries, k + 1);
            prop_assert_eq!(r.rejected.len(), k);
            prop_assert_eq!(r.limits.j_max, schedule[k].j_max);
            prop_assert_eq!(seen.len(), k + 1);
        } else {
            let is_floor_error = matches!(result, Err(SpillError::NoSpillFreeTrajectory { queries, .. }) if queries == schedule.len());
            prop_assert!(is_floor_error);
            prop_assert_eq!(seen.len(), schedule.len());
        }
        // Lower jerk never shortens the motion.
        prop_assert!(seen.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}

#[test]
fn oracle_guided_result_beats_every_rejected_candidate() {
    let c = ContainerSpec::cylinder(0.03, 0.10, 0.08).unwrap();
    let limits = KinematicLimits { v_max: 1.0, a_max: 8.0, j_max: 200.0, ..Default::default() };
    for (dx, dy) in [(0.9, 0.0), (0.4, -0.6), (-0.7, 0.3)] {
        let r = sftp(&path(dx, dy, 0.2), &limits, &ClassifierHandle::oracle(), &SftpParams::default(), &c, &bounds()).unwrap();
        assert!(!r.rejected.is_empty(), "fast candidates should spill");
        let accepted = oracle_label(&r.trajectory, &c, &SloshParams::default()).unwrap();
        assert!(!accepted.spilled);
        assert!(r.rejected.iter().all(|v| v.margin <= accepted.margin));
    }
}

#[test]
fn random_handle_is_seeded_and_query_free() {
    let c = ContainerSpec::cylinder(0.03, 0.1, 0.05).unwrap();
    let limits = KinematicLimits::default();
    let p = path(0.6, 0.0, 0.0);
    let run = |seed| sftp(&p, &limits, &ClassifierHandle::Random(seed), &SftpParams::default(), &c, &bounds()).unwrap();
    let picks: Vec<u32> = (0..40).map(|s| run(s).reductions).collect();
    assert!(picks.iter().all(|k| *k < 10));
    assert!(picks.iter().any(|k| *k != picks[0]), "different seeds should pick different jerks");
    assert_eq!(run(5).limits, run(5).limits);
    assert_eq!(run(5).queries, 0);
}

#[test]
fn always_spill_reports_the_floor() {
    let c = ContainerSpec::cylinder(0.03, 0.1, 0.05).unwrap();
    let limits = KinematicLimits { j_max: 40.0, ..Default::default() };
    for (floor, expect) in [(1.0, 6usize), (40.0 / 8.0, 3), (39.0, 1)] {
        let params = SftpParams { j_floor: Some(floor), ..Default::default() };
        match sftp(&path(0.3, 0.0, 0.0), &limits, &ClassifierHandle::AlwaysSpill, &params, &c, &bounds()) {
            Err(SpillError::NoSpillFreeTrajectory { queries, j_floor }) => {
                assert_eq!(queries, expect, "floor {floor}");
                assert_eq!(queries, (40.0f64 / floor).log2().ceil() as usize);
                assert_eq!(j_floor, floor);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
