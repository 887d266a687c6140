use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::geometry::Pose;

/// Per-frame factor applied to the length of each relative translation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScaleFn {
    Constant {
        factor: f64,
    },
    /// `start + per_meter * distance`, distance measured along the ground truth.
    LinearInDistance {
        start: f64,
        per_meter: f64,
    },
    /// Multiplicative random walk: each frame multiplies the factor by `exp(sigma * n)`.
    RandomWalk {
        start: f64,
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftModel {
    pub scale_fn: ScaleFn,
    /// Per-axis rotation noise on each relative motion, degrees.
    pub rot_noise_sigma: f64,
    /// Per-axis translation noise on each relative motion, meters.
    pub trans_noise_sigma: f64,
    pub seed: u64,
}

impl DriftModel {
    pub fn constant(factor: f64) -> Self {
        Self {
            scale_fn: ScaleFn::Constant { factor },
            rot_noise_sigma: 0.0,
            trans_noise_sigma: 0.0,
            seed: 0,
        }
    }
}

type Stamped = Vec<(f64, Pose)>;

/// Drifted trajectory plus the factor applied to each relative motion
/// (`factors[k]` scales the motion from frame `k` to `k + 1`).
pub fn inject_vo_drift_with_factors(gt: &[(f64, Pose)], model: &DriftModel) -> Result<(Stamped, Vec<f64>), SynthError> {
    if gt.len() < 2 {
        return Err(SynthError::Domain("drift injection needs at least 2 poses".into()));
    }
    if !(model.rot_noise_sigma >= 0.0 && model.trans_noise_sigma >= 0.0) {
        return Err(SynthError::Domain("noise sigmas must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let rot_sigma = model.rot_noise_sigma.to_radians();

    let mut out = Vec::with_capacity(gt.len());
    let mut factors = Vec::with_capacity(gt.len() - 1);
    out.push(gt[0]);
    let mut distance = 0.0;
    let mut walk = match model.scale_fn {
        ScaleFn::RandomWalk { start, .. } => start,
        _ => 1.0,
    };
    for k in 1..gt.len() {
        let rel = gt[k - 1].1.inverse().compose(&gt[k].1);
        let step_noise = normal();
        let factor = match model.scale_fn {
            ScaleFn::Constant { factor } => factor,
            ScaleFn::LinearInDistance { start, per_meter } => start + per_meter * distance,
            ScaleFn::RandomWalk { sigma, .. } => {
                if k > 1 {
                    walk *= (sigma * step_noise).exp();
                }
                walk
            }
        };
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(SynthError::Domain(format!(
                "drift factor {factor} at frame {k} is not positive"
            )));
        }
        distance += rel.translation().norm();

        let rot_noise = Vector3::new(normal(), normal(), normal()) * rot_sigma;
        let trans_noise = Vector3::new(normal(), normal(), normal()) * model.trans_noise_sigma;
        let rotation = rel.rotation() * nalgebra::UnitQuaternion::from_scaled_axis(rot_noise);
        let noisy = Pose::new(rotation, rel.translation() * factor + trans_noise);
        let prev = out[k - 1].1;
        out.push((gt[k].0, prev.compose(&noisy)));
        factors.push(factor);
    }
    Ok((out, factors))
}

/// Rebuilds `gt` from its relative motions with scaled, perturbed translations
/// and perturbed rotations. The first pose is kept.
pub fn inject_vo_drift(gt: &[(f64, Pose)], model: &DriftModel) -> Result<Vec<(f64, Pose)>, SynthError> {
    inject_vo_drift_with_factors(gt, model).map(|(poses, _)| poses)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_trajectory, PathKind, TrajectorySpec};

    fn gt() -> Vec<(f64, Pose)> {
        generate_trajectory(&TrajectorySpec::new(PathKind::Arc { radius: 30.0 }, 50.0, 5.0, 10.0)).unwrap()
    }

    #[test]
    fn unit_factor_is_identity() {
        let gt = gt();
        let out = inject_vo_drift(&gt, &DriftModel::constant(1.0)).unwrap();
        for (a, b) in gt.iter().zip(&out) {
            assert_eq!(a.0, b.0);
            assert!((a.1.translation() - b.1.translation()).norm() < 1e-12);
            assert!(a.1.rotation_angle_to(&b.1) < 1e-12);
        }
    }

    #[test]
    fn constant_factor_scales_every_step() {
        let gt = gt();
        let out = inject_vo_drift(&gt, &DriftModel::constant(1.1)).unwrap();
        assert_eq!(out[0], gt[0]);
        for k in 1..gt.len() {
            let a = gt[k - 1].1.inverse().compose(&gt[k].1).translation().norm();
            let b = out[k - 1].1.inverse().compose(&out[k].1).translation().norm();
            assert!((b - 1.1 * a).abs() < 1e-12);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let model = DriftModel {
            scale_fn: ScaleFn::RandomWalk {
                start: 1.0,
                sigma: 0.01,
            },
            rot_noise_sigma: 0.1,
            trans_noise_sigma: 0.01,
            seed: 9,
        };
        let a = inject_vo_drift_with_factors(&gt(), &model).unwrap();
        assert_eq!(a, inject_vo_drift_with_factors(&gt(), &model).unwrap());
        assert_eq!(a.1[0], 1.0);
        assert!(a.1.windows(2).any(|w| w[0] != w[1]));
        let other = inject_vo_drift(&gt(), &DriftModel { seed: 10, ..model }).unwrap();
        assert_ne!(a.0, other);
    }

    #[test]
    fn linear_factor_grows_with_distance() {
        let model = DriftModel {
            scale_fn: ScaleFn::LinearInDistance {
                start: 1.0,
                per_meter: 0.01,
            },
            ..DriftModel::constant(1.0)
        };
        let (_, f) = inject_vo_drift_with_factors(&gt(), &model).unwrap();
        assert_eq!(f[0], 1.0);
        assert!((f[10] - 1.05).abs() < 1e-6);
    }

    #[test]
    fn domain_errors() {
        assert!(inject_vo_drift(&gt()[..1], &DriftModel::constant(1.0)).is_err());
        assert!(inject_vo_drift(&gt(), &DriftModel::constant(-1.0)).is_err());
    }
}
