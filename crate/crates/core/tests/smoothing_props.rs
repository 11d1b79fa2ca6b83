#![allow(clippy::needless_range_loop)]

use armband_teleop::math::{PoseIncrement, Quaternion};
use armband_teleop::smoothing::{
    apply_pose_update, avg_position, avg_quaternion, IncrementSmoother, RobotPose, SmootherConfig,
    SmoothingError,
};
use nalgebra::{DMatrix, SVD};
use proptest::prelude::*;

fn unit() -> impl Strategy<Value = Quaternion> {
    prop::array::uniform4(-1.0..1.0f64)
        .prop_filter("away from zero", |v| {
            v.iter().map(|x| x * x).sum::<f64>() > 1e-2
        })
        .prop_map(|v| {
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            Quaternion::from_array(v.map(|x| x / n)).unwrap()
        })
}

fn small_rotation(max_angle: f64) -> impl Strategy<Value = Quaternion> {
    (prop::array::uniform3(-1.0..1.0f64), 0.0..max_angle)
        .prop_filter("axis", |(a, _)| a.iter().map(|x| x * x).sum::<f64>() > 1e-2)
        .prop_map(|(a, angle)| Quaternion::from_axis_angle(a, angle).unwrap())
}

/// Window of rotations scattered around a random centre, with random signs.
fn cluster(max_angle: f64) -> impl Strategy<Value = Vec<Quaternion>> {
    (
        unit(),
        prop::collection::vec((small_rotation(max_angle), any::<bool>()), 1..=12),
    )
        .prop_map(|(c, offsets)| {
            offsets
                .into_iter()
                .map(|(r, flip)| {
                    let q = c.mul(&r);
                    if flip {
                        -q
                    } else {
                        q
                    }
                })
                .collect()
        })
}

fn vec3() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-0.1..0.1f64)
}

fn inc(dp: [f64; 3]) -> PoseIncrement {
    PoseIncrement {
        t_us: 0,
        dp,
        dq: Quaternion::IDENTITY,
    }
}

/// Principal left singular vector of the sign-aligned 4×n stack.
fn svd_oracle(window: &[Quaternion]) -> ([f64; 4], f64) {
    let first = window[0];
    let cols: Vec<f64> = window
        .iter()
        .flat_map(|q| {
            let s = if q.dot(&first) < 0.0 { -1.0 } else { 1.0 };
            q.to_array().map(|x| s * x)
        })
        .collect();
    let m = DMatrix::from_column_slice(4, window.len(), &cols);
    let svd = SVD::new(m, true, false);
    let sv = &svd.singular_values;
    let mut idx: Vec<usize> = (0..sv.len()).collect();
    idx.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let gap = if sv.len() > 1 {
        sv[idx[0]] - sv[idx[1]]
    } else {
        sv[idx[0]]
    };
    let u = svd.u.unwrap();
    let k = idx[0];
    ([u[(0, k)], u[(1, k)], u[(2, k)], u[(3, k)]], gap)
}

#[test]
fn empty_windows_are_errors() {
    assert_eq!(avg_position(&[]), Err(SmoothingError::EmptyWindow));
    assert!(avg_quaternion(&[]).is_err());
    assert!(SmootherConfig::new(0).is_err());
}

#[test]
fn orthogonal_basis_is_flagged_degenerate() {
    let basis: Vec<Quaternion> = (0..4)
        .map(|i| {
            let mut c = [0.0; 4];
            c[i] = 1.0;
            Quaternion::from_array(c).unwrap()
        })
        .collect();
    let avg = avg_quaternion(&basis).unwrap();
    assert!(avg.degenerate);
    assert!((avg.q.norm() - 1.0).abs() < 1e-12);
}

#[test]
fn smoother_forgets_increments_older_than_the_window() {
    let mut s = IncrementSmoother::new(SmootherConfig::new(3).unwrap());
    for dx in [9.0, 1.0, 2.0, 3.0] {
        s.push(inc([dx, 0.0, 0.0]));
    }
    assert_eq!(s.len(), 3);
    let out = s.push(inc([4.0, 0.0, 0.0]));
    assert_eq!(out.dp, [3.0, 0.0, 0.0]);
}

proptest! {
    #[test]
    fn matches_nalgebra_svd(window in cluster(1.2)) {
        let (oracle, gap) = svd_oracle(&window);
        prop_assume!(gap > 1e-6);
        let avg = avg_quaternion(&window).unwrap();
        prop_assert!(!avg.degenerate);
        let d: f64 = avg.q.to_array().iter().zip(oracle).map(|(a, b)| a * b).sum();
        prop_assert!(d.abs() >= 1.0 - 1e-10, "|dot| = {}", d.abs());
        prop_assert!(avg.q.dot(window.last().unwrap()) >= 0.0);
    }

    #[test]
    fn output_is_unit(window in prop::collection::vec(unit(), 1..=12)) {
        let avg = avg_quaternion(&window).unwrap();
        prop_assert!((avg.q.norm() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn left_rotation_equivariance(window in cluster(0.5), r in unit()) {
        let rotated: Vec<Quaternion> = window.iter().map(|q| r.mul(q)).collect();
        let a = r.mul(&avg_quaternion(&window).unwrap().q);
        let b = avg_quaternion(&rotated).unwrap().q;
        prop_assert!(a.angle_to(&b) <= 1e-7);
    }

    #[test]
    fn position_average_is_linear(
        a in prop::collection::vec(vec3(), 1..=10),
        b in prop::collection::vec(vec3(), 10),
        s in -5.0..5.0f64,
    ) {
        let b = &b[..a.len()];
        let wa: Vec<_> = a.iter().map(|v| inc(*v)).collect();
        let wb: Vec<_> = b.iter().map(|v| inc(*v)).collect();
        let sum: Vec<_> = a.iter().zip(b).map(|(x, y)| inc([x[0] + y[0], x[1] + y[1], x[2] + y[2]])).collect();
        let scaled: Vec<_> = a.iter().map(|x| inc(x.map(|c| s * c))).collect();
        let (ma, mb) = (avg_position(&wa).unwrap(), avg_position(&wb).unwrap());
        let (msum, ms) = (avg_position(&sum).unwrap(), avg_position(&scaled).unwrap());
        for k in 0..3 {
            prop_assert!((msum[k] - (ma[k] + mb[k])).abs() <= 1e-15);
            prop_assert!((ms[k] - s * ma[k]).abs() <= 1e-14);
        }
    }

    #[test]
    fn constant_stream_passes_through(dp in vec3(), dq in small_rotation(0.3), n in 1usize..30) {
        let mut s = IncrementSmoother::new(SmootherConfig::default());
        let mut pose = RobotPose::default();
        for _ in 0..n {
            let out = s.push(PoseIncrement { t_us: 0, dp, dq });
            for k in 0..3 {
                prop_assert!((out.dp[k] - dp[k]).abs() <= 1e-15);
            }
            prop_assert!(out.dq.angle_to(&dq) <= 1e-7);
            pose = apply_pose_update(&pose, out.dp, &out.dq);
        }
        for k in 0..3 {
            prop_assert!((pose.p[k] - n as f64 * dp[k]).abs() <= 1e-12);
        }
    }
}
