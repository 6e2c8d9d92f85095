//! Gate fidelity averaged over the 20 two-qubit mutually unbiased basis states.
//!
//! The five bases are the joint eigenbases of the commuting Pauli triples
//! {ZI, IZ, ZZ}, {XI, IX, XX}, {YI, IY, YY}, {XY, YZ, ZX}, {XZ, YX, ZY}.
//! Together they form a 2-design, so for a unitary U and target V the average
//! equals (4 + |Tr V†U|²)/20.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{
    schedule_superoperator, schedule_unitary, unvectorize, vectorize, DephasingRates, DIM,
};
use crate::model::Channel;
use crate::operator::{C64, I, ONE, ZERO};
use crate::pulses::{
    calibrate_schedule, cnot_schedule_with, pi2_segment_with_amplitude, CalibrationResult,
    CalibrationSettings, CompileOptions, RotationAxis, Schedule,
};
use crate::spectrum::EffectiveModel;

pub const MUB_TRIPLES: [[&str; 3]; 5] = [
    ["ZI", "IZ", "ZZ"],
    ["XI", "IX", "XX"],
    ["YI", "IY", "YY"],
    ["XY", "YZ", "ZX"],
    ["XZ", "YX", "ZY"],
];

fn pauli1(c: char) -> DMatrix<C64> {
    match c {
        'I' => DMatrix::identity(2, 2),
        'X' => DMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO]),
        'Y' => DMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO]),
        'Z' => DMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE]),
        _ => panic!("not a Pauli label: {c}"),
    }
}

/// Two-qubit Pauli; the first letter acts on qubit 1, the second on qubit 2.
/// In the logical ordering qubit 2 is the high bit, so the matrix is B ⊗ A.
pub fn pauli(label: &str) -> DMatrix<C64> {
    let mut chars = label.chars();
    let a = pauli1(chars.next().expect("two-letter label"));
    let b = pauli1(chars.next().expect("two-letter label"));
    b.kronecker(&a)
}

/// The 20 states, five bases of four, each vector phased so its largest
/// component is real and positive.
pub fn mub20() -> Vec<DVector<C64>> {
    let mut out = Vec::with_capacity(20);
    for triple in MUB_TRIPLES {
        let m = pauli(triple[0]) + pauli(triple[1]) * C64::new(2.0, 0.0);
        let eig = m.symmetric_eigen();
        let mut order: Vec<usize> = (0..DIM).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        for k in order {
            let v = eig.eigenvectors.column(k).into_owned();
            let big = v
                .iter()
                .cloned()
                .max_by(|a, b| a.norm().total_cmp(&b.norm()))
                .unwrap();
            out.push(v * (big.conj() / big.norm()));
        }
    }
    out
}

pub fn fidelity_pure(ideal: &DVector<C64>, actual: &DVector<C64>) -> f64 {
    ideal.dotc(actual).norm_sqr()
}

pub fn fidelity_mixed(ideal: &DVector<C64>, rho: &DMatrix<C64>) -> f64 {
    ideal.dotc(&(rho * ideal)).re
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Gate {
    /// π/2 rotation of one qubit.
    Rotation {
        qubit: Channel,
        axis: RotationAxis,
    },
    Cnot {
        control: Channel,
    },
}

impl Gate {
    pub fn name(&self) -> String {
        match self {
            Gate::Rotation { qubit, axis } => format!("{}{}", axis.name(), qubit.index()),
            Gate::Cnot {
                control: Channel::One,
            } => "CNOT".into(),
            Gate::Cnot {
                control: Channel::Two,
            } => "CNOT21".into(),
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Gate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "cnot" | "cnot12" => {
                return Ok(Gate::Cnot {
                    control: Channel::One,
                })
            }
            "cnot21" => {
                return Ok(Gate::Cnot {
                    control: Channel::Two,
                })
            }
            "pi2-1" => {
                return Ok(Gate::Rotation {
                    qubit: Channel::One,
                    axis: RotationAxis::X,
                })
            }
            "pi2-2" => {
                return Ok(Gate::Rotation {
                    qubit: Channel::Two,
                    axis: RotationAxis::X,
                })
            }
            _ => {}
        }
        let (axis, qubit) = lower.split_at(lower.len().saturating_sub(1));
        let axis = match axis {
            "x" => RotationAxis::X,
            "y" => RotationAxis::Y,
            "xbar" => RotationAxis::XBar,
            "ybar" => RotationAxis::YBar,
            _ => return Err(Error::UnknownGate(s.to_string())),
        };
        let qubit = match qubit {
            "1" => Channel::One,
            "2" => Channel::Two,
            _ => return Err(Error::UnknownGate(s.to_string())),
        };
        Ok(Gate::Rotation { qubit, axis })
    }
}

/// Target unitary in the logical basis.
pub fn ideal_gate(gate: Gate) -> DMatrix<C64> {
    match gate {
        Gate::Rotation { qubit, axis } => {
            let (c, s) = (axis.phase().cos(), axis.phase().sin());
            // exp(−i(π/4)(cosφ σx − sinφ σy)), lower level first
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let off_ab = C64::new(0.0, -h) * C64::new(c, s);
            let off_ba = C64::new(0.0, -h) * C64::new(c, -s);
            let r = DMatrix::from_row_slice(
                2,
                2,
                &[C64::new(h, 0.0), off_ab, off_ba, C64::new(h, 0.0)],
            );
            let id = DMatrix::<C64>::identity(2, 2);
            match qubit {
                Channel::One => id.kronecker(&r),
                Channel::Two => r.kronecker(&id),
            }
        }
        Gate::Cnot { control } => {
            let (a, b) = match control {
                Channel::One => (1, 3),
                Channel::Two => (2, 3),
            };
            let mut m = DMatrix::<C64>::identity(DIM, DIM);
            m[(a, a)] = ZERO;
            m[(b, b)] = ZERO;
            m[(a, b)] = ONE;
            m[(b, a)] = ONE;
            m
        }
    }
}

/// Nominal pulse program for `gate`.
pub fn compile_gate(em: &EffectiveModel, gate: Gate, opts: &CompileOptions) -> Result<Schedule> {
    match gate {
        Gate::Rotation { qubit, axis } => Schedule::new(
            gate.name(),
            vec![pi2_segment_with_amplitude(
                em,
                qubit,
                axis,
                opts.amplitude_mt,
            )],
        ),
        Gate::Cnot {
            control: Channel::One,
        } => {
            let s = cnot_schedule_with(em, opts);
            s.validate()?;
            Ok(s)
        }
        Gate::Cnot {
            control: Channel::Two,
        } => Err(Error::UnknownGate(
            "no pulse program for CNOT with control qubit 2".into(),
        )),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    pub gate: String,
    pub j_perp_ghz: f64,
    pub j_zz_ghz: f64,
    /// Coherence times in µs; absent for closed evolution.
    pub t2_us: Option<(f64, f64)>,
    pub duration_ns: f64,
    pub per_state: Vec<f64>,
    pub average: f64,
    pub min: f64,
    pub max: f64,
}

impl FidelityReport {
    pub const CSV_HEADER: &'static str = "gate,Jzz_GHz,T2_us,duration_ns,F_avg,F_min,F_max";

    pub fn csv_row(&self) -> String {
        use crate::format::fmt_num;
        let t2 = match self.t2_us {
            Some((a, b)) if a == b => fmt_num(a),
            Some((a, b)) => format!("{}/{}", fmt_num(a), fmt_num(b)),
            None => "inf".into(),
        };
        format!(
            "{},{},{},{},{},{},{}",
            self.gate,
            fmt_num(self.j_zz_ghz),
            t2,
            fmt_num(self.duration_ns),
            fmt_num(self.average),
            fmt_num(self.min),
            fmt_num(self.max)
        )
    }
}

fn t2_of(rates: &DephasingRates) -> Option<(f64, f64)> {
    if rates.is_closed() {
        return None;
    }
    let t2 = |g: f64| if g == 0.0 { f64::INFINITY } else { 1e-3 / g };
    Some((t2(rates.gamma1), t2(rates.gamma2)))
}

/// Per-state fidelities of `sched` against `ideal` over the 20 MUB states.
pub fn state_fidelities(
    sched: &Schedule,
    em: &EffectiveModel,
    ideal: &DMatrix<C64>,
    rates: &DephasingRates,
) -> Result<Vec<f64>> {
    let states = mub20();
    if rates.is_closed() {
        let u = schedule_unitary(sched, em)?;
        Ok(states
            .par_iter()
            .map(|psi| fidelity_pure(&(ideal * psi), &(&u * psi)))
            .collect())
    } else {
        let s = schedule_superoperator(sched, em, rates)?;
        states
            .par_iter()
            .map(|psi| {
                let rho = unvectorize(&(&s * vectorize(&(psi * psi.adjoint()))));
                let herm = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
                let lambda = herm.clone().symmetric_eigen().eigenvalues.min();
                if lambda < -crate::evolve::POSITIVITY_TOL {
                    return Err(Error::NumericalFailure(format!(
                        "propagated density matrix lost positivity (eigenvalue {lambda:e})"
                    )));
                }
                Ok(fidelity_mixed(&(ideal * psi), &herm))
            })
            .collect()
    }
}

pub fn average_gate_fidelity(
    sched: &Schedule,
    em: &EffectiveModel,
    ideal: &DMatrix<C64>,
    rates: &DephasingRates,
) -> Result<FidelityReport> {
    let per_state = state_fidelities(sched, em, ideal, rates)?;
    let average = per_state.iter().sum::<f64>() / per_state.len() as f64;
    let min = per_state.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = per_state.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(FidelityReport {
        gate: sched.gate.clone(),
        j_perp_ghz: em.params.j.j_perp,
        j_zz_ghz: em.params.j.j_zz,
        t2_us: t2_of(rates),
        duration_ns: sched.total_duration_ns(),
        per_state,
        average,
        min,
        max,
    })
}

/// (4 + |Tr V†U|²)/20.
pub fn trace_fidelity(u: &DMatrix<C64>, ideal: &DMatrix<C64>) -> f64 {
    let tr = (ideal.adjoint() * u).trace();
    (DIM as f64 + tr.norm_sqr()) / (DIM * (DIM + 1)) as f64
}

/// Compile `gate` and tune its segment durations for the closed-system average
/// fidelity.
pub fn calibrate_gate(
    em: &EffectiveModel,
    gate: Gate,
    opts: &CompileOptions,
    settings: &CalibrationSettings,
) -> Result<CalibrationResult> {
    let nominal = compile_gate(em, gate, opts)?;
    let ideal = ideal_gate(gate);
    calibrate_schedule(&nominal, settings, |s| {
        Ok(trace_fidelity(&schedule_unitary(s, em)?, &ideal))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::DimerParams;
    use crate::operator::frobenius;
    use crate::pulses::{Segment, Tone};
    use crate::spectrum::extract_effective_model;
    use proptest::prelude::*;

    fn em(j_zz: f64) -> EffectiveModel {
        extract_effective_model(&DimerParams::reference(j_zz)).unwrap()
    }

    #[test]
    fn mub_states_are_unbiased() {
        let s = mub20();
        assert_eq!(s.len(), 20);
        for i in 0..20 {
            for j in 0..20 {
                let o = s[i].dotc(&s[j]).norm_sqr();
                let want = if i == j {
                    1.0
                } else if i / 4 == j / 4 {
                    0.0
                } else {
                    0.25
                };
                assert!((o - want).abs() < 1e-12, "{i} {j} {o}");
            }
        }
    }

    #[test]
    fn mub_is_a_two_design() {
        // Σ |ψ⟩⟨ψ|⊗|ψ⟩⟨ψ| over the 20 states equals 20·Π_sym/10
        let s = mub20();
        let mut m = DMatrix::<C64>::zeros(16, 16);
        for psi in &s {
            let p = psi * psi.adjoint();
            m += p.kronecker(&p);
        }
        let swap = DMatrix::from_fn(16, 16, |r, c| {
            let (a, b) = (r / 4, r % 4);
            if c == b * 4 + a {
                ONE
            } else {
                ZERO
            }
        });
        let sym = (DMatrix::<C64>::identity(16, 16) + swap) * C64::new(0.5, 0.0);
        assert!(frobenius(&(m * C64::new(0.5, 0.0) - sym)) < 1e-10);
    }

    #[test]
    fn gate_names_roundtrip() {
        for name in [
            "X1", "Y1", "Xbar1", "Ybar1", "X2", "Y2", "Xbar2", "Ybar2", "CNOT", "CNOT21",
        ] {
            let g: Gate = name.parse().unwrap();
            assert_eq!(g.name(), name);
        }
        assert_eq!("pi2-1".parse::<Gate>().unwrap().name(), "X1");
        assert!("Z1".parse::<Gate>().is_err());
        assert!("X3".parse::<Gate>().is_err());
        assert!(matches!("swap".parse::<Gate>(), Err(Error::UnknownGate(_))));
    }

    #[test]
    fn ideal_gates_are_unitary() {
        for name in ["X1", "Ybar2", "CNOT", "CNOT21"] {
            let u = ideal_gate(name.parse().unwrap());
            assert!(frobenius(&(u.adjoint() * &u - DMatrix::identity(4, 4))) < 1e-14);
        }
    }

    #[test]
    fn rwa_pulse_on_uncoupled_dimer_is_ideal_rotation() {
        let em =
            extract_effective_model(&DimerParams::reference(0.0).with_exchange(0.0, 0.0)).unwrap();
        for name in ["X1", "Y1", "Xbar2", "Ybar2"] {
            let g: Gate = name.parse().unwrap();
            let s = compile_gate(&em, g, &CompileOptions::default()).unwrap();
            let r =
                average_gate_fidelity(&s, &em, &ideal_gate(g), &DephasingRates::none()).unwrap();
            assert!(r.average > 1.0 - 1e-12, "{name} {}", r.average);
        }
    }

    #[test]
    fn average_matches_trace_formula() {
        let em = em(0.05);
        let s = compile_gate(
            &em,
            Gate::Cnot {
                control: Channel::One,
            },
            &CompileOptions::default(),
        )
        .unwrap();
        let ideal = ideal_gate(Gate::Cnot {
            control: Channel::One,
        });
        let r = average_gate_fidelity(&s, &em, &ideal, &DephasingRates::none()).unwrap();
        let t = trace_fidelity(&schedule_unitary(&s, &em).unwrap(), &ideal);
        assert!((r.average - t).abs() < 1e-12);
        let mixed = average_gate_fidelity(
            &s,
            &em,
            &ideal,
            &DephasingRates::uniform_t2_us(1e12).unwrap(),
        )
        .unwrap();
        assert!((mixed.average - t).abs() < 1e-6);
    }

    #[test]
    fn cnot_control_is_qubit_one() {
        let em = em(0.0);
        let opts = CompileOptions::default();
        let r = calibrate_gate(
            &em,
            Gate::Cnot {
                control: Channel::One,
            },
            &opts,
            &CalibrationSettings::default(),
        )
        .unwrap();
        assert!(r.fidelity_after > 0.999, "{}", r.fidelity_after);
        let wrong = trace_fidelity(
            &schedule_unitary(&r.schedule, &em).unwrap(),
            &ideal_gate(Gate::Cnot {
                control: Channel::Two,
            }),
        );
        assert!(wrong < 0.6, "{wrong}");
    }

    #[test]
    fn csv_row_shape() {
        let em = em(0.05);
        let g = Gate::Rotation {
            qubit: Channel::One,
            axis: RotationAxis::X,
        };
        let s = compile_gate(&em, g, &CompileOptions::default()).unwrap();
        let r = average_gate_fidelity(
            &s,
            &em,
            &ideal_gate(g),
            &DephasingRates::uniform_t2_us(1.0).unwrap(),
        )
        .unwrap();
        let row = r.csv_row();
        assert_eq!(
            row.split(',').count(),
            FidelityReport::CSV_HEADER.split(',').count()
        );
        assert!(row.starts_with("X1,0.05,1,"));
    }

    fn arb_schedule() -> impl Strategy<Value = Schedule> {
        let tone = (0u8..2, 0.0..3.0f64, 0.0..6.3f64).prop_map(|(c, a, p)| {
            Tone::new(if c == 0 { Channel::One } else { Channel::Two }, a, p)
        });
        let seg = (1.0..60.0f64, proptest::option::of(tone))
            .prop_map(|(t, tone)| Segment::new("s", t, tone.into_iter().collect()).unwrap());
        proptest::collection::vec(seg, 1..5).prop_map(|v| Schedule::new("rand", v).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn fidelities_are_bounded(s in arb_schedule(), t2 in 0.05..50.0f64) {
            let em = em(0.05);
            let ideal = ideal_gate(Gate::Cnot { control: Channel::One });
            for rates in [DephasingRates::none(), DephasingRates::uniform_t2_us(t2).unwrap()] {
                let r = average_gate_fidelity(&s, &em, &ideal, &rates).unwrap();
                for f in &r.per_state {
                    prop_assert!(*f >= -1e-12 && *f <= 1.0 + 1e-12);
                }
                prop_assert!(r.min <= r.average && r.average <= r.max);
            }
        }

        #[test]
        fn global_phase_is_irrelevant(s in arb_schedule(), phi in 0.0..6.3f64) {
            let em = em(0.05);
            let u = schedule_unitary(&s, &em).unwrap();
            let ideal = u.clone() * C64::from_polar(1.0, phi);
            let r = average_gate_fidelity(&s, &em, &ideal, &DephasingRates::none()).unwrap();
            prop_assert!((r.average - 1.0).abs() < 1e-10);
            prop_assert!((trace_fidelity(&u, &ideal) - 1.0).abs() < 1e-10);
        }

        #[test]
        fn dephasing_never_helps_against_own_unitary(s in arb_schedule(), t2 in 0.05..50.0f64) {
            let em = em(0.05);
            let u = schedule_unitary(&s, &em).unwrap();
            let r = average_gate_fidelity(&s, &em, &u, &DephasingRates::uniform_t2_us(t2).unwrap()).unwrap();
            prop_assert!(r.average <= 1.0 + 1e-12);
        }
    }
}
