//! Time evolution of the logical four-level system.
//!
//! Closed evolution uses the exact propagator `exp(−i2πHt)` of each
//! piecewise-constant segment (H in GHz, t in ns). Open evolution adds pure
//! dephasing of each qubit, `L_i = (√γ_i/2)·σz_i`, with dissipator
//! `2LρL† − {L†L, ρ}`, so single-qubit coherences decay at rate γ_i = 1/T2.

mod leakage;
mod oracle;

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use leakage::{full_space_validation, LeakageReport, LEAKAGE_MAX_STEP_NS};
pub use oracle::{rk4_lindblad, rk4_pure, run_schedule_rk4_lindblad, run_schedule_rk4_pure};

use crate::error::{Error, Result};
use crate::model::Channel;
use crate::operator::{Operator, C64, ONE, ZERO};
use crate::pulses::{rwa_hamiltonian, Schedule, Segment};
use crate::spectrum::{diagonalize, EffectiveModel};

pub const DIM: usize = 4;

/// Largest tolerated negative eigenvalue of a propagated density matrix.
pub const POSITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct PureState(DVector<C64>);

impl PureState {
    pub fn basis(k: usize) -> Self {
        assert!(k < DIM, "logical index out of range");
        let mut v = DVector::zeros(DIM);
        v[k] = ONE;
        PureState(v)
    }

    /// Normalizes `amplitudes`; fails on the zero vector or a wrong length.
    pub fn from_amplitudes(amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.len() != DIM {
            return Err(Error::InvalidParameter(format!(
                "state needs {DIM} amplitudes, got {}",
                amplitudes.len()
            )));
        }
        let v = DVector::from_column_slice(amplitudes);
        let n = v.norm();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::InvalidParameter("state has zero norm".into()));
        }
        Ok(PureState(v.unscale(n)))
    }

    pub fn from_vector(v: DVector<C64>) -> Result<Self> {
        Self::from_amplitudes(v.as_slice())
    }

    pub fn vector(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_vector(self) -> DVector<C64> {
        self.0
    }

    pub fn population(&self, k: usize) -> f64 {
        self.0[k].norm_sqr()
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(&self.0 * self.0.adjoint())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(DMatrix<C64>);

impl DensityMatrix {
    pub fn new(m: DMatrix<C64>) -> Result<Self> {
        let rho = DensityMatrix(m);
        rho.validate()?;
        Ok(rho)
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.0 + self.0.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn validate(&self) -> Result<()> {
        if self.0.shape() != (DIM, DIM) {
            return Err(Error::InvalidParameter("density matrix must be 4x4".into()));
        }
        let defect = crate::operator::frobenius(&(&self.0 - self.0.adjoint()));
        if defect > 1e-9 {
            return Err(Error::NonHermitian { defect });
        }
        let tr = self.0.trace();
        if (tr - ONE).norm() > 1e-9 {
            return Err(Error::NumericalFailure(format!(
                "trace {tr} differs from 1"
            )));
        }
        let lambda = self.min_eigenvalue();
        if lambda < -POSITIVITY_TOL {
            return Err(Error::NumericalFailure(format!(
                "density matrix has eigenvalue {lambda:e}"
            )));
        }
        Ok(())
    }

    pub fn purity(&self) -> f64 {
        (&self.0 * &self.0).trace().re
    }

    /// One line per element: `i,j,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,re,im\n");
        for i in 0..DIM {
            for j in 0..DIM {
                let z = self.0[(i, j)];
                out.push_str(&format!(
                    "{i},{j},{},{}\n",
                    crate::format::fmt_num(z.re),
                    crate::format::fmt_num(z.im)
                ));
            }
        }
        out
    }
}

/// Pure-dephasing rates per qubit, 1/ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DephasingRates {
    pub gamma1: f64,
    pub gamma2: f64,
}

impl DephasingRates {
    pub fn none() -> Self {
        DephasingRates {
            gamma1: 0.0,
            gamma2: 0.0,
        }
    }

    /// From coherence times in µs; an infinite T2 gives zero rate.
    pub fn from_t2_us(t2_1: f64, t2_2: f64) -> Result<Self> {
        Ok(DephasingRates {
            gamma1: rate(t2_1)?,
            gamma2: rate(t2_2)?,
        })
    }

    pub fn uniform_t2_us(t2: f64) -> Result<Self> {
        Self::from_t2_us(t2, t2)
    }

    pub fn is_closed(&self) -> bool {
        self.gamma1 == 0.0 && self.gamma2 == 0.0
    }
}

fn rate(t2_us: f64) -> Result<f64> {
    if t2_us.is_nan() || t2_us <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "T2 must be positive, got {t2_us} µs"
        )));
    }
    Ok(if t2_us.is_infinite() {
        0.0
    } else {
        1.0 / (t2_us * 1e3)
    })
}

/// σz of one qubit in the logical basis (−1 for down, +1 for up).
pub fn sigma_z(qubit: Channel) -> DMatrix<C64> {
    let bit = match qubit {
        Channel::One => 1,
        Channel::Two => 2,
    };
    DMatrix::from_fn(DIM, DIM, |i, j| {
        if i != j {
            ZERO
        } else if i & bit != 0 {
            ONE
        } else {
            -ONE
        }
    })
}

/// exp(−i2πHt) for Hermitian H.
pub fn propagator(h: &Operator, t_ns: f64) -> Result<DMatrix<C64>> {
    let eig = diagonalize(h)?;
    let n = h.dim();
    let phases = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            C64::from_polar(1.0, -2.0 * PI * eig.values[i] * t_ns)
        } else {
            ZERO
        }
    });
    Ok(&eig.vectors * phases * eig.vectors.adjoint())
}

pub fn propagate_segment_pure(h: &Operator, t_ns: f64, psi: &PureState) -> Result<PureState> {
    let u = propagator(h, t_ns)?;
    Ok(PureState(u * &psi.0))
}

pub fn segment_unitary(seg: &Segment, em: &EffectiveModel) -> Result<DMatrix<C64>> {
    let h = rwa_hamiltonian(em, seg)?;
    propagator(&h, seg.duration_ns)
}

/// Product of segment propagators, last segment leftmost.
pub fn schedule_unitary(sched: &Schedule, em: &EffectiveModel) -> Result<DMatrix<C64>> {
    sched.validate()?;
    let mut u = DMatrix::identity(DIM, DIM);
    for seg in &sched.segments {
        u = segment_unitary(seg, em)? * u;
    }
    Ok(u)
}

pub fn run_schedule_pure(
    sched: &Schedule,
    em: &EffectiveModel,
    psi: &PureState,
) -> Result<PureState> {
    let u = schedule_unitary(sched, em)?;
    Ok(PureState(u * &psi.0))
}

fn collapse_operators(rates: &DephasingRates) -> Vec<DMatrix<C64>> {
    [(Channel::One, rates.gamma1), (Channel::Two, rates.gamma2)]
        .into_iter()
        .filter(|(_, g)| *g > 0.0)
        .map(|(q, g)| sigma_z(q) * C64::new(0.5 * g.sqrt(), 0.0))
        .collect()
}

/// dρ/dt in ns⁻¹.
pub fn lindblad_rhs(h: &Operator, rates: &DephasingRates, rho: &DMatrix<C64>) -> DMatrix<C64> {
    let hm = h.matrix();
    let mut out = (hm * rho - rho * hm) * C64::new(0.0, -2.0 * PI);
    for l in collapse_operators(rates) {
        let ld = l.adjoint();
        let ldl = &ld * &l;
        out += (&l * rho * &ld) * C64::new(2.0, 0.0) - &ldl * rho - rho * &ldl;
    }
    out
}

/// Superoperator acting on column-stacked ρ: vec(AρB) = (Bᵀ⊗A)·vec(ρ).
pub fn liouvillian(h: &Operator, rates: &DephasingRates) -> DMatrix<C64> {
    let n = h.dim();
    let id = DMatrix::<C64>::identity(n, n);
    let hm = h.matrix();
    let mut l = (id.kronecker(hm) - hm.transpose().kronecker(&id)) * C64::new(0.0, -2.0 * PI);
    for c in collapse_operators(rates) {
        let cd = c.adjoint();
        let cdc = &cd * &c;
        l += c.conjugate().kronecker(&c) * C64::new(2.0, 0.0)
            - id.kronecker(&cdc)
            - cdc.transpose().kronecker(&id);
    }
    l
}

pub fn vectorize(rho: &DMatrix<C64>) -> DVector<C64> {
    DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &DVector<C64>) -> DMatrix<C64> {
    let n = (v.len() as f64).sqrt().round() as usize;
    DMatrix::from_column_slice(n, n, v.as_slice())
}

pub fn segment_superoperator(
    seg: &Segment,
    em: &EffectiveModel,
    rates: &DephasingRates,
) -> Result<DMatrix<C64>> {
    let h = rwa_hamiltonian(em, seg)?;
    let l = liouvillian(&h, rates) * C64::new(seg.duration_ns, 0.0);
    let s = l.exp();
    if s.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericalFailure(format!(
            "non-finite propagator for segment '{}'",
            seg.label
        )));
    }
    Ok(s)
}

/// Superoperator of the whole schedule.
pub fn schedule_superoperator(
    sched: &Schedule,
    em: &EffectiveModel,
    rates: &DephasingRates,
) -> Result<DMatrix<C64>> {
    sched.validate()?;
    let mut s = DMatrix::identity(DIM * DIM, DIM * DIM);
    for seg in &sched.segments {
        s = segment_superoperator(seg, em, rates)? * s;
    }
    Ok(s)
}

pub fn apply_superoperator(s: &DMatrix<C64>, rho: &DensityMatrix) -> Result<DensityMatrix> {
    let out = unvectorize(&(s * vectorize(&rho.0)));
    let out = DensityMatrix((&out + out.adjoint()) * C64::new(0.5, 0.0));
    let lambda = out.min_eigenvalue();
    if lambda < -POSITIVITY_TOL {
        return Err(Error::NumericalFailure(format!(
            "propagated density matrix lost positivity (eigenvalue {lambda:e})"
        )));
    }
    Ok(out)
}

pub fn run_schedule_lindblad(
    sched: &Schedule,
    em: &EffectiveModel,
    rates: &DephasingRates,
    rho: &DensityMatrix,
) -> Result<DensityMatrix> {
    rho.validate()?;
    let s = schedule_superoperator(sched, em, rates)?;
    apply_superoperator(&s, rho)
}
