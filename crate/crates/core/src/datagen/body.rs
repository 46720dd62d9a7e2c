use std::f64::consts::TAU;

use nalgebra::{Rotation3, Unit};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::extraction::{marching_cubes, OccupancyGrid};
use crate::meshcore::geometry::segment_distance_squared;
use crate::meshcore::{Aabb, TriMesh, Vec3};
use crate::rng;
use crate::sampling::{Joint, JointSet, JOINT_COUNT};

/// Segment lengths in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lengths {
    /// Pelvis to spine joint.
    pub abdomen: f64,
    /// Spine joint to neck base.
    pub chest: f64,
    /// Neck base to head center.
    pub neck: f64,
    pub shoulder_half_width: f64,
    pub hip_half_width: f64,
    /// Drop of the hip joints below the pelvis.
    pub hip_drop: f64,
    pub upper_arm: f64,
    pub forearm: f64,
    /// Wrist to knuckles.
    pub hand: f64,
    pub thigh: f64,
    pub shin: f64,
    pub foot: f64,
}

impl Default for Lengths {
    fn default() -> Self {
        Self {
            abdomen: 0.22,
            chest: 0.28,
            neck: 0.2,
            shoulder_half_width: 0.18,
            hip_half_width: 0.1,
            hip_drop: 0.07,
            upper_arm: 0.29,
            forearm: 0.26,
            hand: 0.08,
            thigh: 0.44,
            shin: 0.42,
            foot: 0.15,
        }
    }
}

/// Capsule radii in meters.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Radii {
    pub hips: f64,
    pub abdomen: f64,
    pub chest: f64,
    pub shoulders: f64,
    pub neck: f64,
    pub head: f64,
    pub upper_arm: f64,
    pub forearm: f64,
    pub hand: f64,
    pub thigh: f64,
    pub shin: f64,
    pub foot: f64,
}

impl Default for Radii {
    fn default() -> Self {
        Self {
            hips: 0.11,
            abdomen: 0.12,
            chest: 0.13,
            shoulders: 0.065,
            neck: 0.05,
            head: 0.1,
            upper_arm: 0.05,
            forearm: 0.04,
            hand: 0.035,
            thigh: 0.075,
            shin: 0.055,
            foot: 0.04,
        }
    }
}

impl Radii {
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            hips: self.hips * s,
            abdomen: self.abdomen * s,
            chest: self.chest * s,
            shoulders: self.shoulders * s,
            neck: self.neck * s,
            head: self.head * s,
            upper_arm: self.upper_arm * s,
            forearm: self.forearm * s,
            hand: self.hand * s,
            thigh: self.thigh * s,
            shin: self.shin * s,
            foot: self.foot * s,
        }
    }
}

/// Arm pose. Limits: `elevation` in [0, 2.0] rad away from hanging
/// straight down; `azimuth` in [-0.5, 2.3] rad, where 0 lifts the arm out to
/// the side and pi/2 straight forward (larger values cross in front of the
/// body); `elbow` flexion in [0, 2.5] rad.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ArmPose {
    pub elevation: f64,
    pub azimuth: f64,
    pub elbow: f64,
}

/// Leg pose. Limits: hip `flexion` in [-0.6, 1.8] rad (forward positive);
/// `abduction` in [-0.15, 0.6] rad (outward positive); `knee` flexion in
/// [0, 2.4] rad.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct LegPose {
    pub flexion: f64,
    pub abduction: f64,
    pub knee: f64,
}

/// Whole-body pose. Torso limits: `torso_pitch` in [-0.3, 0.7] (forward
/// lean positive), `torso_roll` and `torso_yaw` in [-0.4, 0.4]. Head limits:
/// `head_yaw` in [-0.8, 0.8], `head_pitch` in [-0.4, 0.5].
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Pose {
    pub torso_pitch: f64,
    pub torso_roll: f64,
    pub torso_yaw: f64,
    pub head_yaw: f64,
    pub head_pitch: f64,
    pub left_arm: ArmPose,
    pub right_arm: ArmPose,
    pub left_leg: LegPose,
    pub right_leg: LegPose,
}

/// Everything that defines one synthetic body.
#[derive(Clone, Debug, PartialEq)]
pub struct BodySpec {
    pub lengths: Lengths,
    pub radii: Radii,
    pub pose: Pose,
    /// Peak radial offset of the clothing folds on torso and legs (meters).
    pub clothing_amplitude: f64,
    /// Seeds the fold pattern.
    pub seed: u64,
}

impl Default for BodySpec {
    fn default() -> Self {
        Self {
            lengths: Lengths::default(),
            radii: Radii::default(),
            pose: Pose {
                left_arm: ArmPose { elevation: 0.25, ..Default::default() },
                right_arm: ArmPose { elevation: 0.25, ..Default::default() },
                ..Default::default()
            },
            clothing_amplitude: 0.012,
            seed: 0,
        }
    }
}

fn check_range(name: &str, v: f64, lo: f64, hi: f64) -> Result<()> {
    if !(lo..=hi).contains(&v) {
        return Err(Error::InvalidArgument(format!("{name} = {v} outside [{lo}, {hi}]")));
    }
    Ok(())
}

impl BodySpec {
    pub fn validate(&self) -> Result<()> {
        let l = &self.lengths;
        let lengths = [
            l.abdomen,
            l.chest,
            l.neck,
            l.shoulder_half_width,
            l.hip_half_width,
            l.hip_drop,
            l.upper_arm,
            l.forearm,
            l.hand,
            l.thigh,
            l.shin,
            l.foot,
        ];
        let r = &self.radii;
        let radii = [
            r.hips, r.abdomen, r.chest, r.shoulders, r.neck, r.head, r.upper_arm, r.forearm, r.hand, r.thigh, r.shin,
            r.foot,
        ];
        if lengths.iter().chain(&radii).any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidArgument("body lengths and radii must be positive".into()));
        }
        if !(self.clothing_amplitude >= 0.0 && self.clothing_amplitude.is_finite()) {
            return Err(Error::InvalidArgument("clothing amplitude must be >= 0".into()));
        }
        let p = &self.pose;
        check_range("torso_pitch", p.torso_pitch, -0.3, 0.7)?;
        check_range("torso_roll", p.torso_roll, -0.4, 0.4)?;
        check_range("torso_yaw", p.torso_yaw, -0.4, 0.4)?;
        check_range("head_yaw", p.head_yaw, -0.8, 0.8)?;
        check_range("head_pitch", p.head_pitch, -0.4, 0.5)?;
        for arm in [p.left_arm, p.right_arm] {
            check_range("arm elevation", arm.elevation, 0.0, 2.0)?;
            check_range("arm azimuth", arm.azimuth, -0.5, 2.3)?;
            check_range("elbow", arm.elbow, 0.0, 2.5)?;
        }
        for leg in [p.left_leg, p.right_leg] {
            check_range("hip flexion", leg.flexion, -0.6, 1.8)?;
            check_range("hip abduction", leg.abduction, -0.15, 0.6)?;
            check_range("knee", leg.knee, 0.0, 2.4)?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Part {
    Core,
    Head,
    UpperArm,
    ArmDistal,
    Thigh,
    LegDistal,
}

/// A segment swept by a sphere. `chain` tags the limb (0 core, 1 head,
/// 2/3 left/right arm, 4/5 left/right leg).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Capsule {
    pub a: Vec3,
    pub b: Vec3,
    pub radius: f64,
    /// Carries the clothing offset.
    pub clothed: bool,
    chain: u8,
    part: Part,
}

impl Capsule {
    pub fn distance(&self, p: &Vec3) -> f64 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        let t = if len2 > 0.0 { ((p - self.a).dot(&ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
        (p - (self.a + ab * t)).norm() - self.radius
    }
}

fn rotate(v: &Vec3, axis: &Vec3, angle: f64) -> Vec3 {
    match Unit::try_new(*axis, 1e-12) {
        Some(k) => Rotation3::from_axis_angle(&k, angle) * v,
        None => *v,
    }
}

/// Bends `d` by `angle` toward `toward` (falls back to `alt` when parallel).
fn bend(d: &Vec3, toward: &Vec3, alt: &Vec3, angle: f64) -> Vec3 {
    let mut k = d.cross(toward);
    if k.norm() < 1e-6 {
        k = d.cross(alt);
    }
    rotate(d, &k, angle)
}

/// Joint positions and capsules of a posed body, pelvis at the origin, y up,
/// +x toward the body's left, facing +z.
pub struct Skeleton {
    pub joints: [Vec3; JOINT_COUNT],
    pub capsules: Vec<Capsule>,
}

pub fn pose_skeleton(spec: &BodySpec) -> Skeleton {
    let (l, r, p) = (&spec.lengths, &spec.radii, &spec.pose);
    let (x, y, z) = (Vec3::x(), Vec3::y(), Vec3::z());
    let torso = Rotation3::from_axis_angle(&Vec3::y_axis(), p.torso_yaw)
        * Rotation3::from_axis_angle(&Vec3::z_axis(), -p.torso_roll)
        * Rotation3::from_axis_angle(&Vec3::x_axis(), p.torso_pitch);
    let head_rot = torso
        * Rotation3::from_axis_angle(&Vec3::y_axis(), p.head_yaw)
        * Rotation3::from_axis_angle(&Vec3::x_axis(), p.head_pitch);

    let mut j = [Vec3::zeros(); JOINT_COUNT];
    let at = |jn: Joint| jn.index();
    let pelvis = Vec3::zeros();
    j[at(Joint::Pelvis)] = pelvis;
    j[at(Joint::Spine)] = pelvis + torso * (y * l.abdomen);
    j[at(Joint::Neck)] = j[at(Joint::Spine)] + torso * (y * l.chest);
    j[at(Joint::Head)] = j[at(Joint::Neck)] + head_rot * (y * l.neck);
    j[at(Joint::Nose)] = j[at(Joint::Head)] + head_rot * Vec3::new(0.0, -0.15 * r.head, 0.95 * r.head);
    j[at(Joint::LeftHip)] = pelvis + Vec3::new(l.hip_half_width, -l.hip_drop, 0.0);
    j[at(Joint::RightHip)] = pelvis + Vec3::new(-l.hip_half_width, -l.hip_drop, 0.0);

    let mut capsules = Vec::new();
    let mut add = |a: Vec3, b: Vec3, radius: f64, clothed: bool, chain: u8, part: Part| {
        capsules.push(Capsule { a, b, radius, clothed, chain, part })
    };

    let shoulder_base = j[at(Joint::Neck)] + torso * (-y * 0.04);
    let mut hands = [(Vec3::zeros(), Vec3::zeros()); 2];
    for (side, arm) in [(1.0, p.left_arm), (-1.0, p.right_arm)] {
        let (sh, el, wr) = if side > 0.0 {
            (Joint::LeftShoulder, Joint::LeftElbow, Joint::LeftWrist)
        } else {
            (Joint::RightShoulder, Joint::RightElbow, Joint::RightWrist)
        };
        let shoulder = shoulder_base + torso * (x * side * l.shoulder_half_width);
        // Upper arm direction in the torso frame, mirrored for the right side.
        let (se, ce) = arm.elevation.sin_cos();
        let (sa, ca) = arm.azimuth.sin_cos();
        let upper = torso * Vec3::new(side * se * ca, -ce, se * sa);
        let elbow = shoulder + upper * l.upper_arm;
        let fore = bend(&upper, &(torso * z), &(torso * y), arm.elbow);
        let wrist = elbow + fore * l.forearm;
        j[at(sh)] = shoulder;
        j[at(el)] = elbow;
        j[at(wr)] = wrist;
        hands[(side < 0.0) as usize] = (wrist, wrist + fore * l.hand);
    }
    for (side, leg) in [(1.0, p.left_leg), (-1.0, p.right_leg)] {
        let (hip, kn, an) = if side > 0.0 {
            (Joint::LeftHip, Joint::LeftKnee, Joint::LeftAnkle)
        } else {
            (Joint::RightHip, Joint::RightKnee, Joint::RightAnkle)
        };
        let leg_rot = Rotation3::from_axis_angle(&Vec3::z_axis(), side * leg.abduction)
            * Rotation3::from_axis_angle(&Vec3::x_axis(), -leg.flexion);
        let thigh = leg_rot * -y;
        let knee = j[at(hip)] + thigh * l.thigh;
        let shin = rotate(&thigh, &(leg_rot * x), leg.knee);
        let ankle = knee + shin * l.shin;
        j[at(kn)] = knee;
        j[at(an)] = ankle;
    }

    // Core and head.
    add(j[at(Joint::LeftHip)], j[at(Joint::RightHip)], r.hips, true, 0, Part::Core);
    add(pelvis, j[at(Joint::Spine)], r.abdomen, true, 0, Part::Core);
    add(j[at(Joint::Spine)], shoulder_base - torso * (y * 0.03), r.chest, true, 0, Part::Core);
    add(j[at(Joint::LeftShoulder)], j[at(Joint::RightShoulder)], r.shoulders, true, 0, Part::Core);
    add(j[at(Joint::Neck)], j[at(Joint::Head)], r.neck, false, 1, Part::Head);
    add(j[at(Joint::Head)], j[at(Joint::Head)] + head_rot * (y * 0.02), r.head, false, 1, Part::Head);
    for (k, (sh, el, wr)) in [
        (Joint::LeftShoulder, Joint::LeftElbow, Joint::LeftWrist),
        (Joint::RightShoulder, Joint::RightElbow, Joint::RightWrist),
    ]
    .into_iter()
    .enumerate()
    {
        let chain = 2 + k as u8;
        add(j[at(sh)], j[at(el)], r.upper_arm, false, chain, Part::UpperArm);
        add(j[at(el)], j[at(wr)], r.forearm, false, chain, Part::ArmDistal);
        add(hands[k].0, hands[k].1, r.hand, false, chain, Part::ArmDistal);
    }
    for (k, (hip, kn, an)) in [
        (Joint::LeftHip, Joint::LeftKnee, Joint::LeftAnkle),
        (Joint::RightHip, Joint::RightKnee, Joint::RightAnkle),
    ]
    .into_iter()
    .enumerate()
    {
        let chain = 4 + k as u8;
        let shin = (j[at(an)] - j[at(kn)]).normalize();
        let mut foot = z - shin * z.dot(&shin);
        if foot.norm() < 1e-6 {
            foot = y.cross(&shin);
        }
        let foot = foot.normalize();
        add(j[at(hip)], j[at(kn)], r.thigh, true, chain, Part::Thigh);
        add(j[at(kn)], j[at(an)], r.shin, true, chain, Part::LegDistal);
        add(j[at(an)], j[at(an)] + foot * l.foot, r.foot, false, chain, Part::LegDistal);
    }
    Skeleton { joints: j, capsules }
}

/// Pairs of capsules that may not overlap: different chains, except that
/// a limb's root segment (upper arm, thigh) may blend into the core.
fn must_separate(a: &Capsule, b: &Capsule) -> bool {
    if a.chain == b.chain {
        return false;
    }
    let rooted = |c: &Capsule, o: &Capsule| o.part == Part::Core && matches!(c.part, Part::UpperArm | Part::Thigh);
    if rooted(a, b) || rooted(b, a) {
        return false;
    }
    // The neck sits on the shoulder bar and chest.
    let neck_core = |c: &Capsule, o: &Capsule| c.part == Part::Head && o.part == Part::Core;
    !(neck_core(a, b) || neck_core(b, a))
}

impl Skeleton {
    /// Deepest overlap among capsules that should stay apart, if any pair
    /// interpenetrates by more than `tolerance`.
    pub fn check_separation(&self, tolerance: f64) -> Result<()> {
        for (i, a) in self.capsules.iter().enumerate() {
            for b in &self.capsules[i + 1..] {
                if !must_separate(a, b) {
                    continue;
                }
                let d = segment_distance_squared(&a.a, &a.b, &b.a, &b.b).sqrt();
                let depth = a.radius + b.radius - d;
                if depth > tolerance {
                    return Err(Error::SelfIntersection(format!(
                        "capsules of chains {} and {} overlap by {depth:.4}",
                        a.chain, b.chain
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn bounds(&self, margin: f64) -> Aabb {
        let mut b = Aabb::from_points(self.capsules.iter().flat_map(|c| [&c.a, &c.b])).expect("capsules");
        let r = self.capsules.iter().map(|c| c.radius).fold(0.0, f64::max);
        b = b.padded(r + margin);
        b
    }
}

/// Smooth low-frequency fold pattern with values in [-1, 1].
#[derive(Clone, Debug)]
pub struct FoldNoise {
    waves: Vec<(Vec3, f64)>,
}

impl FoldNoise {
    pub const WAVES: usize = 5;

    /// Plane waves with wavelengths between 8 and 14 cm.
    pub fn new(seed: u64) -> Self {
        let mut r = rng::substream(seed, 0xC10);
        let waves = (0..Self::WAVES)
            .map(|_| {
                let (u, v): (f64, f64) = (r.random(), r.random());
                let zc = 2.0 * u - 1.0;
                let phi = TAU * v;
                let s = (1.0 - zc * zc).sqrt();
                let dir = Vec3::new(s * phi.cos(), s * phi.sin(), zc);
                let wavelength = r.random_range(0.08..0.14);
                (dir * (TAU / wavelength), r.random_range(0.0..TAU))
            })
            .collect();
        Self { waves }
    }

    pub fn eval(&self, p: &Vec3) -> f64 {
        self.waves.iter().map(|(k, ph)| (k.dot(p) + ph).sin()).sum::<f64>() / Self::WAVES as f64
    }
}

/// Signed distance-like field of the clothed capsule union (negative
/// inside). Clothed capsules are offset by `amplitude * noise`.
pub fn body_field(capsules: &[Capsule], noise: &FoldNoise, amplitude: f64, p: &Vec3) -> f64 {
    let fold = if amplitude > 0.0 { amplitude * noise.eval(p) } else { 0.0 };
    capsules
        .iter()
        .map(|c| c.distance(p) - if c.clothed { fold } else { 0.0 })
        .fold(f64::INFINITY, f64::min)
}

/// Default marching cubes cell edge for body meshes (meters).
pub const BODY_CELL: f64 = 0.015;

/// Max interpenetration allowed between capsules of different limbs.
pub const SEPARATION_TOLERANCE: f64 = 0.005;

/// Meshes the body with marching cubes over its own field.
pub fn generate_body(spec: &BodySpec) -> Result<(TriMesh, JointSet)> {
    generate_body_with_cell(spec, BODY_CELL)
}

pub fn generate_body_with_cell(spec: &BodySpec, cell: f64) -> Result<(TriMesh, JointSet)> {
    spec.validate()?;
    if !(cell > 0.0) {
        return Err(Error::InvalidArgument("cell size must be positive".into()));
    }
    let skeleton = pose_skeleton(spec);
    skeleton.check_separation(SEPARATION_TOLERANCE)?;
    let noise = FoldNoise::new(spec.seed);
    let bbox = skeleton.bounds(spec.clothing_amplitude + 2.0 * cell);
    let e = bbox.extent();
    let res = [e.x, e.y, e.z].map(|s| (s / cell).ceil().max(2.0) as usize);
    let bbox = Aabb::new(bbox.min, bbox.min + Vec3::new(res[0] as f64, res[1] as f64, res[2] as f64) * cell)?;
    let dims = res.map(|r| r + 1);
    let values: Vec<f64> = (0..dims[2])
        .into_par_iter()
        .flat_map_iter(|k| {
            let skeleton = &skeleton;
            let noise = &noise;
            (0..dims[1]).flat_map(move |jj| {
                (0..dims[0]).map(move |i| {
                    let p = bbox.min + Vec3::new(i as f64, jj as f64, k as f64) * cell;
                    -body_field(&skeleton.capsules, noise, spec.clothing_amplitude, &p)
                })
            })
        })
        .collect();
    let grid = OccupancyGrid::new(res, bbox, values)?;
    let mesh = marching_cubes(&grid, 0.0)?;
    Ok((mesh, JointSet::from_3d(skeleton.joints)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_body_is_separated_and_symmetric() {
        let s = pose_skeleton(&BodySpec::default());
        s.check_separation(SEPARATION_TOLERANCE).unwrap();
        let l = s.joints[Joint::LeftWrist.index()];
        let r = s.joints[Joint::RightWrist.index()];
        assert!((l.x + r.x).abs() < 1e-12 && (l.y - r.y).abs() < 1e-12);
        assert!(s.joints[Joint::Head.index()].y > s.joints[Joint::Neck.index()].y);
        assert!(s.joints[Joint::Nose.index()].z > 0.0);
    }

    #[test]
    fn arms_through_torso_are_rejected() {
        let mut spec = BodySpec::default();
        spec.pose.left_arm = ArmPose { elevation: 1.2, azimuth: 2.3, elbow: 2.5 };
        spec.pose.right_arm = ArmPose { elevation: 1.2, azimuth: 2.3, elbow: 2.5 };
        spec.lengths.upper_arm = 0.1;
        assert!(matches!(pose_skeleton(&spec).check_separation(0.005), Err(Error::SelfIntersection(_))));
    }

    #[test]
    fn out_of_range_angles_fail_validation() {
        let mut spec = BodySpec::default();
        spec.pose.left_leg.knee = 3.0;
        assert!(spec.validate().is_err());
    }
}
