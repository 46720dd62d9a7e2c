use crate::error::{Error, Result};
use crate::meshcore::Vec3;

pub const JOINT_COUNT: usize = 17;

pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "pelvis",
    "spine",
    "neck",
    "head",
    "nose",
    "left_shoulder",
    "right_shoulder",
    "left_elbow",
    "right_elbow",
    "left_wrist",
    "right_wrist",
    "left_hip",
    "right_hip",
    "left_knee",
    "right_knee",
    "left_ankle",
    "right_ankle",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(usize)]
pub enum Joint {
    Pelvis,
    Spine,
    Neck,
    Head,
    Nose,
    LeftShoulder,
    RightShoulder,
    LeftElbow,
    RightElbow,
    LeftWrist,
    RightWrist,
    LeftHip,
    RightHip,
    LeftKnee,
    RightKnee,
    LeftAnkle,
    RightAnkle,
}

impl Joint {
    pub const ALL: [Joint; JOINT_COUNT] = [
        Joint::Pelvis,
        Joint::Spine,
        Joint::Neck,
        Joint::Head,
        Joint::Nose,
        Joint::LeftShoulder,
        Joint::RightShoulder,
        Joint::LeftElbow,
        Joint::RightElbow,
        Joint::LeftWrist,
        Joint::RightWrist,
        Joint::LeftHip,
        Joint::RightHip,
        Joint::LeftKnee,
        Joint::RightKnee,
        Joint::LeftAnkle,
        Joint::RightAnkle,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        JOINT_NAMES[self.index()]
    }
}

/// The 17 body joints in model space and their image projections (pixels,
/// `u` to the right, `v` down).
#[derive(Clone, Debug, PartialEq)]
pub struct JointSet {
    pub joints3d: [Vec3; JOINT_COUNT],
    pub joints2d: [[f64; 2]; JOINT_COUNT],
}

impl JointSet {
    /// Joints with no projection yet (all image coordinates zero).
    pub fn from_3d(joints3d: [Vec3; JOINT_COUNT]) -> Self {
        Self { joints3d, joints2d: [[0.0; 2]; JOINT_COUNT] }
    }

    pub fn get(&self, j: Joint) -> Vec3 {
        self.joints3d[j.index()]
    }

    pub fn pixel(&self, j: Joint) -> [f64; 2] {
        self.joints2d[j.index()]
    }

    pub fn map_3d(&self, f: impl Fn(&Vec3) -> Vec3) -> JointSet {
        JointSet { joints3d: self.joints3d.map(|p| f(&p)), joints2d: self.joints2d }
    }

    /// One `name x y z u v` line per joint, in canonical order.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (i, name) in JOINT_NAMES.iter().enumerate() {
            let p = self.joints3d[i];
            let [u, v] = self.joints2d[i];
            s.push_str(&format!("{name} {:?} {:?} {:?} {:?} {:?}\n", p.x, p.y, p.z, u, v));
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let lines: Vec<&str> = text.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        if lines.len() != JOINT_COUNT {
            return Err(Error::Format(format!("expected {JOINT_COUNT} joint lines, found {}", lines.len())));
        }
        let mut joints3d = [Vec3::zeros(); JOINT_COUNT];
        let mut joints2d = [[0.0; 2]; JOINT_COUNT];
        for (i, line) in lines.iter().enumerate() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(Error::Format(format!("joint line {}: expected 6 fields", i + 1)));
            }
            if fields[0] != JOINT_NAMES[i] {
                return Err(Error::Format(format!(
                    "joint line {}: expected '{}', found '{}'",
                    i + 1,
                    JOINT_NAMES[i],
                    fields[0]
                )));
            }
            let mut v = [0.0; 5];
            for (k, f) in fields[1..].iter().enumerate() {
                v[k] = f
                    .parse::<f64>()
                    .map_err(|e| Error::Format(format!("joint line {}: {e}", i + 1)))?;
            }
            joints3d[i] = Vec3::new(v[0], v[1], v[2]);
            joints2d[i] = [v[3], v[4]];
        }
        Ok(Self { joints3d, joints2d })
    }
}
