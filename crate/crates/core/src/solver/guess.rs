//! Reproducible cold-start guesses.

use crate::error::{Error, Result};
use crate::maneuvers::ManeuverSpec;
use crate::srbm::{SrbmState, Vec3};

/// Lateral foot offset from the CoM path used by the cold start, m.
fn lateral_offset(delta: f64) -> f64 {
    (1.5 * delta).max(0.12)
}

/// Keyframe-interpolated decision vector: states blend linearly between
/// boundary keyframes (slerp for attitude), durations sit at the middle of
/// their bounds, stance forces share the body weight and feet are placed
/// beside the mid-mode CoM on their own side.
pub fn cold_start(spec: &ManeuverSpec) -> Result<Vec<f64>> {
    let lay = spec.layout()?;
    if spec.keyframes.len() != spec.modes.len() + 1 {
        return Err(Error::InvalidSpec(format!(
            "expected {} keyframes, got {}",
            spec.modes.len() + 1,
            spec.keyframes.len()
        )));
    }
    let mut z = vec![0.0; lay.total()];
    let durations = spec.nominal_durations();
    let sides = spec.contact_sides();
    let weight = spec.params.mass * spec.params.gravity;
    let offset = lateral_offset(spec.transfer.delta_min);

    for m in 0..lay.modes() {
        let (a, b) = (&spec.keyframes[m], &spec.keyframes[m + 1]);
        let n = lay.knots(m);
        let c = lay.kind(m).contacts();
        lay.set_duration(&mut z, m, durations[m]);
        for k in 0..n {
            let t = k as f64 / (n - 1) as f64;
            let s = SrbmState {
                p: a.p.lerp(&b.p, t),
                q: a.q.slerp(&b.q, t),
                v: a.v.lerp(&b.v, t),
                omega: a.omega.lerp(&b.omega, t),
            };
            lay.set_state(&mut z, m, k, &s);
            for i in 0..c {
                lay.set_grf(&mut z, m, k, i, &Vec3::new(0.0, 0.0, weight / c as f64));
            }
        }
        let mid = a.p.lerp(&b.p, 0.5);
        let h = spec.headings[m];
        let left = Vec3::new(-h.sin(), h.cos(), 0.0);
        for (i, side) in sides[m].iter().enumerate() {
            let foot = Vec3::new(mid.x, mid.y, 0.0) + left * (side.sign() * offset);
            lay.set_foot(&mut z, m, i, &foot);
        }
    }
    Ok(z)
}
