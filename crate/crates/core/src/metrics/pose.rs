//! 21-joint hand poses and the pose-estimation metrics MPJPE, PCK and AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

pub const NUM_JOINTS: usize = 21;

/// Joint order: wrist, then four joints per digit (base to tip) for thumb,
/// index, middle, ring and pinky.
pub const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "wrist",
    "thumb_mcp", "thumb_pip", "thumb_dip", "thumb_tip",
    "index_mcp", "index_pip", "index_dip", "index_tip",
    "middle_mcp", "middle_pip", "middle_dip", "middle_tip",
    "ring_mcp", "ring_pip", "ring_dip", "ring_tip",
    "pinky_mcp", "pinky_pip", "pinky_dip", "pinky_tip",
];

/// 3D positions of the 21 hand joints (millimeters).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 3]>", into = "Vec<[f64; 3]>")]
pub struct HandPose {
    pub joints: [Point3; NUM_JOINTS],
}

impl HandPose {
    pub fn new(joints: [Point3; NUM_JOINTS]) -> Self {
        HandPose { joints }
    }

    /// Flattened `[x0, y0, z0, x1, ...]` (63 values).
    pub fn to_flat(&self) -> [f64; 3 * NUM_JOINTS] {
        let mut out = [0.0; 3 * NUM_JOINTS];
        for (j, p) in self.joints.iter().enumerate() {
            out[3 * j..3 * j + 3].copy_from_slice(p.coords.as_slice());
        }
        out
    }

    pub fn from_flat(values: &[f64]) -> Result<Self> {
        if values.len() != 3 * NUM_JOINTS {
            return Err(Error::InvalidArgument(format!(
                "a hand pose needs {} values, got {}",
                3 * NUM_JOINTS,
                values.len()
            )));
        }
        let mut joints = [Point3::origin(); NUM_JOINTS];
        for (j, p) in joints.iter_mut().enumerate() {
            *p = Point3::new(values[3 * j], values[3 * j + 1], values[3 * j + 2]);
        }
        Ok(HandPose { joints })
    }
}

impl TryFrom<Vec<[f64; 3]>> for HandPose {
    type Error = String;

    fn try_from(v: Vec<[f64; 3]>) -> std::result::Result<Self, String> {
        if v.len() != NUM_JOINTS {
            return Err(format!("expected {NUM_JOINTS} joints, got {}", v.len()));
        }
        let mut joints = [Point3::origin(); NUM_JOINTS];
        for (dst, src) in joints.iter_mut().zip(&v) {
            if src.iter().any(|c| !c.is_finite()) {
                return Err("joint coordinates must be finite".into());
            }
            *dst = Point3::from(*src);
        }
        Ok(HandPose { joints })
    }
}

impl From<HandPose> for Vec<[f64; 3]> {
    fn from(p: HandPose) -> Self {
        p.joints.iter().map(|j| [j.x, j.y, j.z]).collect()
    }
}

/// Euclidean error of each joint.
pub fn joint_errors(pred: &HandPose, gt: &HandPose) -> [f64; NUM_JOINTS] {
    let mut out = [0.0; NUM_JOINTS];
    for (e, (p, g)) in out.iter_mut().zip(pred.joints.iter().zip(&gt.joints)) {
        *e = (p - g).norm();
    }
    out
}

/// Mean per-joint position error.
pub fn mpjpe(pred: &HandPose, gt: &HandPose) -> f64 {
    joint_errors(pred, gt).iter().sum::<f64>() / NUM_JOINTS as f64
}

/// Fraction of joint errors within each threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PckCurve {
    thresholds: Vec<f64>,
    values: Vec<f64>,
}

impl PckCurve {
    /// Validates strictly ascending thresholds and non-decreasing values in [0, 1].
    pub fn new(thresholds: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if thresholds.len() != values.len() {
            return Err(Error::InvalidArgument("thresholds and values differ in length".into()));
        }
        check_thresholds(&thresholds)?;
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidArgument("PCK values must be non-decreasing within [0, 1]".into()));
        }
        Ok(PckCurve { thresholds, values })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::InvalidArgument("no PCK thresholds".into()));
    }
    if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("PCK thresholds must be finite and strictly ascending".into()));
    }
    Ok(())
}

/// PCK at every threshold: the fraction of `errors` that are `<= threshold`.
pub fn pck_curve(errors: &[f64], thresholds: &[f64]) -> Result<PckCurve> {
    if errors.is_empty() {
        return Err(Error::InvalidArgument("no joint errors".into()));
    }
    if errors.iter().any(|e| e.is_nan()) {
        return Err(Error::InvalidArgument("joint errors contain NaN".into()));
    }
    check_thresholds(thresholds)?;
    let mut sorted = errors.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let values = thresholds
        .iter()
        .map(|&t| sorted.partition_point(|&e| e <= t) as f64 / n)
        .collect();
    Ok(PckCurve {
        thresholds: thresholds.to_vec(),
        values,
    })
}

/// Trapezoidal area under the PCK curve, normalized by the threshold span.
pub fn auc(curve: &PckCurve) -> Result<f64> {
    let t = &curve.thresholds;
    let v = &curve.values;
    if t.len() < 2 {
        return Err(Error::InvalidArgument("AUC needs at least two thresholds".into()));
    }
    let area: f64 = (1..t.len()).map(|i| (t[i] - t[i - 1]) * (v[i] + v[i - 1]) / 2.0).sum();
    Ok(area / (t[t.len() - 1] - t[0]))
}

/// `count` evenly spaced thresholds covering `[lo, hi]` inclusive.
pub fn linear_thresholds(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Vector3;
    use proptest::prelude::*;

    fn pose_from(f: impl Fn(usize) -> Point3) -> HandPose {
        let mut joints = [Point3::origin(); NUM_JOINTS];
        for (j, p) in joints.iter_mut().enumerate() {
            *p = f(j);
        }
        HandPose::new(joints)
    }

    #[test]
    fn mpjpe_examples() {
        let gt = pose_from(|j| Point3::new(j as f64, 2.0 * j as f64, -(j as f64)));
        assert_eq!(mpjpe(&gt, &gt), 0.0);
        let shifted = pose_from(|j| gt.joints[j] + Vector3::new(3.0, 0.0, 4.0));
        assert_eq!(mpjpe(&shifted, &gt), 5.0);
    }

    #[test]
    fn mpjpe_matches_direct_summation() {
        let gt = pose_from(|j| Point3::new((j * 7 % 5) as f64, (j * 3 % 11) as f64, j as f64));
        let pred = pose_from(|j| Point3::new((j * 2 % 3) as f64, (j % 4) as f64, 0.5 * j as f64));
        let mut sum = 0.0;
        for j in 0..NUM_JOINTS {
            let d = pred.joints[j] - gt.joints[j];
            sum += (d.x * d.x + d.y * d.y + d.z * d.z).sqrt();
        }
        assert!((mpjpe(&pred, &gt) - sum / 21.0).abs() < 1e-12);
    }

    #[test]
    fn pck_examples() {
        let c = pck_curve(&[0.0; 5], &[0.0, 10.0]).unwrap();
        assert_eq!(c.values(), &[1.0, 1.0]);
        let c = pck_curve(&[5.0, 15.0, 25.0], &[20.0]).unwrap();
        assert!((c.values()[0] - 2.0 / 3.0).abs() < 1e-15);
        assert!(pck_curve(&[], &[1.0]).is_err());
        assert!(pck_curve(&[1.0], &[2.0, 1.0]).is_err());
    }

    #[test]
    fn auc_examples() {
        let flat = PckCurve::new(vec![20.0, 35.0, 50.0], vec![1.0, 1.0, 1.0]).unwrap();
        assert_eq!(auc(&flat).unwrap(), 1.0);
        let linear = PckCurve::new(vec![0.0, 10.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(auc(&linear).unwrap(), 0.5);
        // Manual trapezoids: (1*(0+0.5) + 3*(0.5+0.5) + 1*(0.5+1)) / 2 / 5 = 0.5
        let piecewise = PckCurve::new(vec![0.0, 1.0, 4.0, 5.0], vec![0.0, 0.5, 0.5, 1.0]).unwrap();
        assert!((auc(&piecewise).unwrap() - 0.5).abs() < 1e-15);
        let single = PckCurve::new(vec![1.0], vec![1.0]).unwrap();
        assert!(auc(&single).is_err());
    }

    #[test]
    fn pose_json_round_trip() {
        let p = pose_from(|j| Point3::new(j as f64, 0.5, -1.0));
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<HandPose>(&s).unwrap(), p);
        assert!(serde_json::from_str::<HandPose>("[[0,0,0]]").is_err());
        assert_eq!(HandPose::from_flat(&p.to_flat()).unwrap(), p);
    }

    proptest! {
        #[test]
        fn pck_is_monotone(errors in prop::collection::vec(0.0f64..100.0, 1..200)) {
            let curve = pck_curve(&errors, &linear_thresholds(0.0, 80.0, 17)).unwrap();
            prop_assert!(curve.values().windows(2).all(|w| w[0] <= w[1]));
            let a = auc(&curve).unwrap();
            prop_assert!((0.0..=1.0).contains(&a));
        }
    }
}
