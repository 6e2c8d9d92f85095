//! Leakage out of the logical subspace under the full nine-level lab-frame
//! Hamiltonian.
//!
//! The state is integrated with RK4 in the interaction picture of the
//! zero-field dimer Hamiltonian, with each tone written as a real field
//! `(g·μB·B/2h)·cos(2π(ω+Δ)t + φ)` coupling through `g1·S1z + g2·S2z`
//! (normalized by the mean g). Time runs continuously across segments.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{run_schedule_pure, PureState, DIM};
use crate::error::{Error, Result};
use crate::model::{drive_coupling, MU_B_OVER_H};
use crate::operator::{C64, ZERO};
use crate::pulses::{rwa_hamiltonian, Schedule};
use crate::spectrum::EffectiveModel;

/// Largest RK4 step used for the lab-frame integration, ns.
pub const LEAKAGE_MAX_STEP_NS: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageReport {
    /// Population outside the four logical levels at the end.
    pub final_leakage: f64,
    /// Largest such population at any step.
    pub max_leakage: f64,
    /// Overlap of the projected full-space state with the rotating-wave result.
    pub rwa_fidelity: f64,
    pub steps: usize,
}

struct Drive {
    amplitude: f64,
    omega: f64,
    phase: f64,
}

pub fn full_space_validation(
    sched: &Schedule,
    em: &EffectiveModel,
    psi: &PureState,
    max_dt: f64,
) -> Result<LeakageReport> {
    sched.validate()?;
    if !(max_dt > 0.0 && max_dt <= LEAKAGE_MAX_STEP_NS) {
        return Err(Error::InvalidParameter(format!(
            "lab-frame step must lie in (0, {LEAKAGE_MAX_STEP_NS}] ns, got {max_dt}"
        )));
    }
    let (energies, vectors) = em.full_basis();
    let n = energies.len();
    let g_mean = 0.5 * (em.params.m1.g + em.params.m2.g);
    let w_lab = drive_coupling(&em.params);
    let w = DMatrix::from_fn(n, n, |i, j| {
        w_lab.element(&vectors[i], &vectors[j]) / g_mean
    });

    let mut c = DVector::<C64>::zeros(n);
    for k in 0..DIM {
        c[k] = psi.vector()[k];
    }
    let mut t = 0.0;
    let mut max_leak: f64 = 0.0;
    let mut total_steps = 0;

    for seg in &sched.segments {
        // sanity-check the segment the same way the reduced model does
        rwa_hamiltonian(em, seg)?;
        let drives: Vec<Drive> = seg
            .tones
            .iter()
            .map(|tone| Drive {
                amplitude: 0.5 * em.g * MU_B_OVER_H * tone.amplitude_mt,
                omega: em.omega(tone.channel) + tone.detuning_ghz,
                phase: tone.phase_rad,
            })
            .collect();
        let steps = (seg.duration_ns / max_dt).ceil().max(1.0) as usize;
        let dt = seg.duration_ns / steps as f64;

        let rhs = |time: f64, v: &DVector<C64>| -> DVector<C64> {
            let field: f64 = drives
                .iter()
                .map(|d| d.amplitude * (2.0 * PI * d.omega * time + d.phase).cos())
                .sum();
            if field == 0.0 {
                return DVector::zeros(n);
            }
            let rot: Vec<C64> = energies
                .iter()
                .map(|e| C64::from_polar(1.0, 2.0 * PI * e * time))
                .collect();
            let mut out = DVector::zeros(n);
            for i in 0..n {
                let mut acc = ZERO;
                for j in 0..n {
                    acc += w[(i, j)] * rot[j].conj() * v[j];
                }
                out[i] = acc * rot[i] * C64::new(0.0, -2.0 * PI * field);
            }
            out
        };

        if drives.is_empty() {
            t += seg.duration_ns;
            continue;
        }
        let half = C64::new(0.5 * dt, 0.0);
        let full = C64::new(dt, 0.0);
        let sixth = C64::new(dt / 6.0, 0.0);
        for _ in 0..steps {
            let k1 = rhs(t, &c);
            let k2 = rhs(t + 0.5 * dt, &(&c + &k1 * half));
            let k3 = rhs(t + 0.5 * dt, &(&c + &k2 * half));
            let k4 = rhs(t + dt, &(&c + &k3 * full));
            c += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * sixth;
            t += dt;
            let leak: f64 = (DIM..n).map(|k| c[k].norm_sqr()).sum();
            max_leak = max_leak.max(leak);
        }
        total_steps += steps;
    }

    let final_leakage: f64 = (DIM..n).map(|k| c[k].norm_sqr()).sum();
    if !final_leakage.is_finite() {
        return Err(Error::NumericalFailure(
            "lab-frame integration diverged".into(),
        ));
    }
    // rotate the logical amplitudes into the frame of the reduced model
    let free = rwa_hamiltonian(em, &crate::pulses::free_evolution_segment(1.0)?)?;
    let projected: Vec<C64> = (0..DIM)
        .map(|k| c[k] * C64::from_polar(1.0, -2.0 * PI * free.get(k, k).re * t))
        .collect();
    let reduced = run_schedule_pure(sched, em, psi)?;
    let overlap: C64 = reduced
        .vector()
        .iter()
        .zip(&projected)
        .map(|(a, b)| a.conj() * b)
        .sum();
    Ok(LeakageReport {
        final_leakage,
        max_leakage: max_leak,
        rwa_fidelity: overlap.norm_sqr(),
        steps: total_steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Channel, DimerParams};
    use crate::pulses::{pi2_segment, pi2_segment_with_amplitude, RotationAxis};
    use crate::spectrum::extract_effective_model;

    #[test]
    fn single_pulse_stays_in_subspace_and_matches_rwa() {
        let em = extract_effective_model(&DimerParams::reference(0.05)).unwrap();
        let sched =
            Schedule::new("x", vec![pi2_segment(&em, Channel::One, RotationAxis::X)]).unwrap();
        let r = full_space_validation(&sched, &em, &PureState::basis(0), 1e-3).unwrap();
        assert!(r.max_leakage < 1e-6, "{}", r.max_leakage);
        assert!(r.rwa_fidelity > 0.999, "{}", r.rwa_fidelity);
    }

    #[test]
    fn leakage_grows_with_amplitude() {
        let em = extract_effective_model(&DimerParams::reference(0.05)).unwrap();
        let leak = |a: f64| {
            let s = Schedule::new(
                "x",
                vec![pi2_segment_with_amplitude(
                    &em,
                    Channel::Two,
                    RotationAxis::X,
                    a,
                )],
            )
            .unwrap();
            full_space_validation(&s, &em, &PureState::basis(0), 1e-3)
                .unwrap()
                .max_leakage
        };
        assert!(leak(10.0) > leak(1.0));
    }

    #[test]
    fn rejects_coarse_step() {
        let em = extract_effective_model(&DimerParams::reference(0.05)).unwrap();
        let sched =
            Schedule::new("x", vec![pi2_segment(&em, Channel::One, RotationAxis::X)]).unwrap();
        assert!(full_space_validation(&sched, &em, &PureState::basis(0), 0.01).is_err());
    }
}
