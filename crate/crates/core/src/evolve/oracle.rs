//! Fixed-step RK4 integration, independent of the eigen/exponential route.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};

use super::{lindblad_rhs, DensityMatrix, DephasingRates, PureState};
use crate::error::{Error, Result};
use crate::operator::{Operator, C64};
use crate::pulses::{rwa_hamiltonian, Schedule};
use crate::spectrum::EffectiveModel;

fn steps(t_ns: f64, max_dt: f64) -> Result<(usize, f64)> {
    if !(max_dt > 0.0 && max_dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "RK4 step must be positive, got {max_dt}"
        )));
    }
    let n = (t_ns / max_dt).ceil().max(1.0) as usize;
    Ok((n, t_ns / n as f64))
}

pub fn rk4_pure(h: &Operator, t_ns: f64, psi: &DVector<C64>, max_dt: f64) -> Result<DVector<C64>> {
    let (n, dt) = steps(t_ns, max_dt)?;
    let a = h.matrix() * C64::new(0.0, -2.0 * PI);
    let f = |v: &DVector<C64>| &a * v;
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let mut v = psi.clone();
    for _ in 0..n {
        let k1 = f(&v);
        let k2 = f(&(&v + &k1 * half));
        let k3 = f(&(&v + &k2 * half));
        let k4 = f(&(&v + &k3 * full));
        v += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * sixth;
    }
    Ok(v)
}

pub fn rk4_lindblad(
    h: &Operator,
    rates: &DephasingRates,
    t_ns: f64,
    rho: &DMatrix<C64>,
    max_dt: f64,
) -> Result<DMatrix<C64>> {
    let (n, dt) = steps(t_ns, max_dt)?;
    let f = |r: &DMatrix<C64>| lindblad_rhs(h, rates, r);
    let half = C64::new(0.5 * dt, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let mut r = rho.clone();
    for _ in 0..n {
        let k1 = f(&r);
        let k2 = f(&(&r + &k1 * half));
        let k3 = f(&(&r + &k2 * half));
        let k4 = f(&(&r + &k3 * full));
        r += (k1 + (k2 + k3) * C64::new(2.0, 0.0) + k4) * sixth;
    }
    Ok(r)
}

pub fn run_schedule_rk4_pure(
    sched: &Schedule,
    em: &EffectiveModel,
    psi: &PureState,
    max_dt: f64,
) -> Result<PureState> {
    sched.validate()?;
    let mut v = psi.vector().clone();
    for seg in &sched.segments {
        let h = rwa_hamiltonian(em, seg)?;
        v = rk4_pure(&h, seg.duration_ns, &v, max_dt)?;
    }
    Ok(PureState(v))
}

pub fn run_schedule_rk4_lindblad(
    sched: &Schedule,
    em: &EffectiveModel,
    rates: &DephasingRates,
    rho: &DensityMatrix,
    max_dt: f64,
) -> Result<DensityMatrix> {
    sched.validate()?;
    let mut r = rho.matrix().clone();
    for seg in &sched.segments {
        let h = rwa_hamiltonian(em, seg)?;
        r = rk4_lindblad(&h, rates, seg.duration_ns, &r, max_dt)?;
    }
    Ok(DensityMatrix(r))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{run_schedule_lindblad, run_schedule_pure};
    use crate::model::{Channel, DimerParams};
    use crate::operator::{frobenius, ONE};
    use crate::pulses::{pi2_segment, two_tone_segment, RotationAxis};
    use crate::spectrum::extract_effective_model;

    #[test]
    fn rk4_agrees_with_exact_propagator() {
        let em = extract_effective_model(&DimerParams::reference(0.1)).unwrap();
        let sched = Schedule::new(
            "t",
            vec![
                pi2_segment(&em, Channel::Two, RotationAxis::Y),
                two_tone_segment(&em, RotationAxis::XBar, RotationAxis::YBar),
            ],
        )
        .unwrap();
        let psi = PureState::from_amplitudes(&[ONE, C64::new(0.0, 1.0), ONE, ONE]).unwrap();
        let exact = run_schedule_pure(&sched, &em, &psi).unwrap();
        let rk = run_schedule_rk4_pure(&sched, &em, &psi, 0.01).unwrap();
        assert!((exact.vector() - rk.vector()).norm() < 1e-9);

        let rates = DephasingRates::from_t2_us(0.2, 0.5).unwrap();
        let a = run_schedule_lindblad(&sched, &em, &rates, &psi.density()).unwrap();
        let b = run_schedule_rk4_lindblad(&sched, &em, &rates, &psi.density(), 0.01).unwrap();
        assert!(frobenius(&(a.matrix() - b.matrix())) < 1e-9);
    }
}
