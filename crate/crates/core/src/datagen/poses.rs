use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::body::{ArmPose, BodySpec, LegPose, Pose};
use crate::error::{Error, Result};
use crate::rng::Rng as StreamRng;

/// Pose families drawn by the dataset builder.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PoseFamily {
    /// Standing with arms loosely at the sides.
    Relaxed,
    /// Forearms folded in front of the torso, hiding it from the front.
    ArmsAcross,
    /// One arm raised or reaching forward.
    Reach,
    /// Deep knee and hip flexion with the torso leaning forward.
    Crouch,
    /// Walking stride with opposite arm swing.
    Stride,
}

impl PoseFamily {
    pub const ALL: [PoseFamily; 5] =
        [PoseFamily::Relaxed, PoseFamily::ArmsAcross, PoseFamily::Reach, PoseFamily::Crouch, PoseFamily::Stride];

    pub fn name(self) -> &'static str {
        match self {
            PoseFamily::Relaxed => "relaxed",
            PoseFamily::ArmsAcross => "arms_across",
            PoseFamily::Reach => "reach",
            PoseFamily::Crouch => "crouch",
            PoseFamily::Stride => "stride",
        }
    }
}

impl fmt::Display for PoseFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PoseFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PoseFamily::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown pose family '{s}'")))
    }
}

fn u(r: &mut StreamRng, lo: f64, hi: f64) -> f64 {
    r.random_range(lo..=hi)
}

fn relaxed_arm(r: &mut StreamRng) -> ArmPose {
    ArmPose { elevation: u(r, 0.15, 0.6), azimuth: u(r, -0.3, 0.9), elbow: u(r, 0.0, 0.8) }
}

fn standing_leg(r: &mut StreamRng) -> LegPose {
    LegPose { flexion: u(r, -0.1, 0.25), abduction: u(r, 0.0, 0.2), knee: u(r, 0.0, 0.35) }
}

/// Draws a pose of `family`. Draws may still self-intersect; callers
/// resample on [`Error::SelfIntersection`].
pub fn sample_pose(family: PoseFamily, r: &mut StreamRng) -> Pose {
    let mut p = Pose {
        torso_pitch: u(r, -0.1, 0.15),
        torso_roll: u(r, -0.1, 0.1),
        torso_yaw: u(r, -0.15, 0.15),
        head_yaw: u(r, -0.5, 0.5),
        head_pitch: u(r, -0.2, 0.3),
        left_arm: relaxed_arm(r),
        right_arm: relaxed_arm(r),
        left_leg: standing_leg(r),
        right_leg: standing_leg(r),
    };
    match family {
        PoseFamily::Relaxed => {}
        PoseFamily::ArmsAcross => {
            let across = |r: &mut StreamRng| ArmPose {
                elevation: u(r, 0.9, 1.45),
                azimuth: u(r, 1.65, 2.15),
                elbow: u(r, 1.2, 2.1),
            };
            p.left_arm = across(r);
            if r.random_bool(0.6) {
                p.right_arm = across(r);
            }
        }
        PoseFamily::Reach => {
            let reach = ArmPose { elevation: u(r, 1.0, 1.9), azimuth: u(r, 0.0, 1.6), elbow: u(r, 0.0, 0.6) };
            if r.random_bool(0.5) {
                p.left_arm = reach;
            } else {
                p.right_arm = reach;
            }
        }
        PoseFamily::Crouch => {
            p.torso_pitch = u(r, 0.25, 0.6);
            let crouch = |r: &mut StreamRng| LegPose {
                flexion: u(r, 0.9, 1.5),
                abduction: u(r, 0.15, 0.45),
                knee: u(r, 1.4, 2.1),
            };
            p.left_leg = crouch(r);
            p.right_leg = crouch(r);
            let fwd = |r: &mut StreamRng| ArmPose { elevation: u(r, 0.5, 1.3), azimuth: u(r, 1.1, 1.6), elbow: u(r, 0.0, 0.7) };
            p.left_arm = fwd(r);
            p.right_arm = fwd(r);
        }
        PoseFamily::Stride => {
            let front = LegPose { flexion: u(r, 0.3, 0.7), abduction: u(r, 0.0, 0.1), knee: u(r, 0.0, 0.4) };
            let back = LegPose { flexion: u(r, -0.5, -0.2), abduction: u(r, 0.0, 0.1), knee: u(r, 0.2, 0.7) };
            let swing_fwd = ArmPose { elevation: u(r, 0.3, 0.6), azimuth: u(r, 1.3, 1.6), elbow: u(r, 0.2, 0.9) };
            let swing_back = ArmPose { elevation: u(r, 0.2, 0.4), azimuth: u(r, -0.5, -0.2), elbow: u(r, 0.0, 0.4) };
            if r.random_bool(0.5) {
                (p.left_leg, p.right_leg, p.left_arm, p.right_arm) = (front, back, swing_back, swing_fwd);
            } else {
                (p.left_leg, p.right_leg, p.left_arm, p.right_arm) = (back, front, swing_fwd, swing_back);
            }
        }
    }
    p
}

/// Random proportions around the default body plus a pose from `family`.
pub fn sample_body(family: PoseFamily, clothing_amplitude: f64, r: &mut StreamRng) -> BodySpec {
    let mut spec = BodySpec::default();
    let l = &mut spec.lengths;
    for v in [
        &mut l.abdomen,
        &mut l.chest,
        &mut l.neck,
        &mut l.shoulder_half_width,
        &mut l.hip_half_width,
        &mut l.upper_arm,
        &mut l.forearm,
        &mut l.thigh,
        &mut l.shin,
    ] {
        *v *= u(r, 0.92, 1.08);
    }
    spec.radii = spec.radii.scaled(u(r, 0.9, 1.12));
    spec.radii.abdomen *= u(r, 0.9, 1.15);
    spec.pose = sample_pose(family, r);
    spec.clothing_amplitude = clothing_amplitude * u(r, 0.7, 1.0);
    spec.seed = r.random();
    spec
}
