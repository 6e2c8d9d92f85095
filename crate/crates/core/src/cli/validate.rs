//! Self-checks run by `clockgate validate`.

use std::fmt;

use crate::evolve::{
    full_space_validation, run_schedule_lindblad, run_schedule_rk4_lindblad, DephasingRates,
    PureState,
};
use crate::fidelity::mub20;
use crate::model::{Axis, Channel, DimerParams, MonomerParams};
use crate::operator::{trace_distance, Operator, Unit};
use crate::pulses::{cnot_schedule, pi2_segment, RotationAxis, Schedule};
use crate::spectrum::{
    clock_derivative_check, extract_effective_model, monomer_clock_derivative, perturbative_states,
    reference_products, zeeman_slope,
};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CheckLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

fn below(name: &str, value: f64, limit: f64) -> CheckLine {
    CheckLine {
        name: name.into(),
        pass: value < limit,
        detail: format!("{value:.3e} < {limit:.1e}"),
    }
}

fn failed(name: &str, err: impl fmt::Display) -> CheckLine {
    CheckLine {
        name: name.into(),
        pass: false,
        detail: err.to_string(),
    }
}

pub fn run_checks(params: &DimerParams) -> Vec<CheckLine> {
    let mut out = Vec::new();
    let em = match extract_effective_model(params) {
        Ok(em) => {
            out.push(CheckLine {
                name: "truncation".into(),
                pass: true,
                detail: "four lowest levels isolated and labeled".into(),
            });
            em
        }
        Err(e) => {
            out.push(failed("truncation", e));
            return out;
        }
    };

    for axis in Axis::ALL {
        let name = format!("clock_slope_{}", axis.name());
        out.push(match clock_derivative_check(params, axis) {
            Ok(c) => below(&name, c.max_abs, 1e-5),
            Err(e) => failed(&name, e),
        });
    }
    let bare = MonomerParams {
        d: 0.0,
        e: 0.0,
        g: params.m1.g,
    };
    out.push(match monomer_clock_derivative(&bare, Axis::Z) {
        Ok(s) => {
            let expected = zeeman_slope(bare.g);
            CheckLine {
                name: "zeeman_control".into(),
                pass: (s - expected).abs() < 1e-3 * expected,
                detail: format!("{s:.6} GHz/mT vs {expected:.6}"),
            }
        }
        Err(e) => failed("zeeman_control", e),
    });

    let pt = perturbative_states(params).energies();
    let worst = em
        .energies
        .iter()
        .zip(pt)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    out.push(below("perturbative_energies_GHz", worst, 5e-4));

    let refs = reference_products();
    let min_overlap = (0..4)
        .map(|k| refs[k].dotc(&em.basis[k]).norm_sqr())
        .fold(f64::INFINITY, f64::min);
    out.push(CheckLine {
        name: "logical_overlap".into(),
        pass: min_overlap > 0.99,
        detail: format!("{min_overlap:.6} > 0.99"),
    });

    let herm = Operator::new(
        crate::model::dimer_hamiltonian(params, &crate::model::FieldVector::zero()).into_matrix(),
        Unit::GHz,
    )
    .hermiticity_defect();
    out.push(below("hermiticity", herm, 1e-12));

    let cnot = cnot_schedule(&em);
    let psi = PureState::from_amplitudes(&mub20()[13].as_slice().to_vec()).expect("normalized");
    let rates = DephasingRates::uniform_t2_us(10.0).expect("positive");
    out.push(
        match (
            run_schedule_lindblad(&cnot, &em, &rates, &psi.density()),
            run_schedule_rk4_lindblad(&cnot, &em, &rates, &psi.density(), 0.01),
        ) {
            (Ok(a), Ok(b)) => below(
                "expm_vs_rk4_trace_distance",
                trace_distance(a.matrix(), b.matrix()),
                1e-8,
            ),
            (Err(e), _) | (_, Err(e)) => failed("expm_vs_rk4_trace_distance", e),
        },
    );

    let states = mub20();
    let mut mub_err: f64 = 0.0;
    for i in 0..states.len() {
        for j in 0..states.len() {
            let want = if i == j {
                1.0
            } else if i / 4 == j / 4 {
                0.0
            } else {
                0.25
            };
            mub_err = mub_err.max((states[i].dotc(&states[j]).norm_sqr() - want).abs());
        }
    }
    out.push(below("mub_overlaps", mub_err, 1e-12));

    let pulse = Schedule {
        gate: "X1".into(),
        segments: vec![pi2_segment(&em, Channel::One, RotationAxis::X)],
    };
    out.push(
        match full_space_validation(&pulse, &em, &PureState::basis(0), 1e-3) {
            Ok(r) => below("leakage_pi2", r.max_leakage, 1e-3),
            Err(e) => failed("leakage_pi2", e),
        },
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_parameters_pass() {
        let lines = run_checks(&DimerParams::reference(0.05));
        for l in &lines {
            assert!(l.pass, "{l}");
        }
        assert!(lines.len() >= 10);
    }

    #[test]
    fn degenerate_monomer_reports_truncation() {
        let mut p = DimerParams::reference(0.05);
        p.m1.e = p.m1.d;
        let lines = run_checks(&p);
        assert_eq!(lines.len(), 1);
        assert!(!lines[0].pass);
        assert!(lines[0].detail.contains("truncation"), "{}", lines[0]);
    }
}
