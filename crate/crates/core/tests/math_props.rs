use armband_teleop::math::{
    norm, pose_increment, sub, wrist_position, ArmModel, ImuSample, MathError, Quaternion,
};
use nalgebra::{UnitQuaternion, Vector3};
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

fn to_na(q: &Quaternion) -> UnitQuaternion<f64> {
    let [w, x, y, z] = q.to_array();
    UnitQuaternion::new_unchecked(nalgebra::Quaternion::new(w, x, y, z))
}

fn close(a: [f64; 4], b: [f64; 4], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

#[test]
fn construction_rejects_non_unit() {
    assert!(matches!(
        Quaternion::new(2.0, 0.0, 0.0, 0.0),
        Err(MathError::NonUnitQuaternion { .. })
    ));
    assert!(Quaternion::new(1.0 + 5e-7, 0.0, 0.0, 0.0).is_ok());
    assert!(Quaternion::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
}

proptest! {
    #[test]
    fn product_with_inverse_is_identity(q in unit()) {
        prop_assert!(close(q.mul(&q.inverse()).to_array(), [1.0, 0.0, 0.0, 0.0], 1e-12));
        prop_assert!(close(q.inverse().mul(&q).to_array(), [1.0, 0.0, 0.0, 0.0], 1e-12));
    }

    #[test]
    fn hamilton_product_matches_nalgebra(a in unit(), b in unit()) {
        let ours = a.mul(&b).to_array();
        let theirs = to_na(&a) * to_na(&b);
        let c = theirs.quaternion().coords;
        prop_assert!(close(ours, [c.w, c.x, c.y, c.z], 1e-12));
    }

    #[test]
    fn double_cover(q in unit(), v in prop::array::uniform3(-1.0..1.0f64)) {
        let neg = Quaternion::from_array(q.to_array().map(|x| -x)).unwrap();
        let r = q.to_rotation_matrix();
        prop_assert!(r.max_abs_diff(&neg.to_rotation_matrix()) <= 1e-15);
        prop_assert!(norm(sub(q.rotate(v), neg.rotate(v))) <= 1e-14);
        prop_assert!(q.angle_to(&neg) <= 1e-7);
    }

    #[test]
    fn rotation_matrix_is_proper_and_round_trips(q in unit()) {
        let r = q.to_rotation_matrix();
        prop_assert!(r.orthonormality_error() <= 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() <= 1e-12);
        let back = Quaternion::from_rotation_matrix(&r).unwrap();
        prop_assert!(back.angle_to(&q) <= 1e-7);
        let na = to_na(&q).to_rotation_matrix();
        for i in 0..3 {
            for j in 0..3 {
                prop_assert!((r.0[i][j] - na[(i, j)]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn rotation_composition_matches_product(a in unit(), b in unit(), v in prop::array::uniform3(-1.0..1.0f64)) {
        let composed = a.to_rotation_matrix().matmul(&b.to_rotation_matrix());
        prop_assert!(composed.max_abs_diff(&a.mul(&b).to_rotation_matrix()) <= 1e-12);
        let na = to_na(&a) * Vector3::new(v[0], v[1], v[2]);
        prop_assert!(norm(sub(a.rotate(v), [na.x, na.y, na.z])) <= 1e-12);
    }

    #[test]
    fn wrist_stays_within_reach(u in unit(), f in unit(), lu in 0.05..1.0f64, lf in 0.05..1.0f64) {
        let arm = ArmModel::new(lu, lf).unwrap();
        let p = wrist_position(&arm, &ImuSample::new(0, u, f));
        prop_assert!(norm(p) <= lu + lf + 1e-12);
        prop_assert!(norm(p) >= (lu - lf).abs() - 1e-12);
    }

    #[test]
    fn increments_compose_back(a in unit(), b in unit(), pa in prop::array::uniform3(-1.0..1.0f64), pb in prop::array::uniform3(-1.0..1.0f64)) {
        let inc = pose_increment((pa, a), (pb, b), 0);
        let p = [pa[0] + inc.dp[0], pa[1] + inc.dp[1], pa[2] + inc.dp[2]];
        prop_assert!(norm(sub(p, pb)) <= 1e-15);
        prop_assert!(inc.dq.mul(&a).angle_to(&b) <= 1e-7);
    }
}
