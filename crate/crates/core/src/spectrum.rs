//! Diagonalization, level diagrams and the four-state logical manifold.
//!
//! Logical states are written with the qubit-2 arrow first and the qubit-1
//! arrow second, and indexed `k = 2·b2 + b1`:
//!
//! | k | label | dominant product (spin 1 ⊗ spin 2) |
//! |---|-------|------------------------------------|
//! | 0 | ↓↓    | \|−−⟩                              |
//! | 1 | ↓↑    | \|+−⟩                              |
//! | 2 | ↑↓    | \|−+⟩                              |
//! | 3 | ↑↑    | \|++⟩                              |
//!
//! Qubit `i` is spin `i`, so the channel-1 tone (which flips spin 1) connects
//! ↓↓↔↓↑ and ↑↓↔↑↑, and the channel-2 tone connects ↓↓↔↑↓ and ↓↑↔↑↑.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_num;
use crate::model::{
    clock_states, dimer_hamiltonian, drive_coupling, monomer_hamiltonian, product_state, Axis,
    Channel, DimerParams, FieldVector, MonomerParams, MU_B_OVER_H,
};
use crate::operator::{Operator, C64};

/// Relative Hermiticity tolerance accepted by [`diagonalize`].
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Eigenvalues (ascending) and the matching orthonormal eigenvectors as columns.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: DMatrix<C64>,
}

impl Eigen {
    pub fn vector(&self, k: usize) -> DVector<C64> {
        self.vectors.column(k).into_owned()
    }
}

pub fn diagonalize(h: &Operator) -> Result<Eigen> {
    let defect = h.hermiticity_defect();
    if defect > HERMITIAN_TOL {
        return Err(Error::NonHermitian { defect });
    }
    let m = h.matrix();
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(m.nrows(), m.ncols(), |i, j| eig.eigenvectors[(i, order[j])]);
    Ok(Eigen { values, vectors })
}

// ---------------------------------------------------------------------------
// Level diagrams

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LevelSource {
    Monomer(MonomerParams),
    Dimer(DimerParams),
}

impl LevelSource {
    pub fn hamiltonian(&self, b: &FieldVector) -> Operator {
        match self {
            LevelSource::Monomer(p) => monomer_hamiltonian(p, b),
            LevelSource::Dimer(d) => dimer_hamiltonian(d, b),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelDiagram {
    pub axis: Axis,
    /// Field samples, mT.
    pub fields: Vec<f64>,
    /// Ascending eigenvalues per sample, GHz.
    pub energies: Vec<Vec<f64>>,
}

impl LevelDiagram {
    /// Keeps only the `n` lowest levels of every sample.
    pub fn lowest(mut self, n: usize) -> Self {
        for row in &mut self.energies {
            row.truncate(n);
        }
        self
    }

    pub fn levels(&self) -> usize {
        self.energies.first().map_or(0, Vec::len)
    }

    /// CSV with the field in column 1 and one column per level.
    pub fn to_csv(&self) -> String {
        let mut out = format!("field_{}_mT", self.axis.name());
        for k in 0..self.levels() {
            out.push_str(&format!(",E{k}_GHz"));
        }
        out.push('\n');
        for (b, row) in self.fields.iter().zip(&self.energies) {
            out.push_str(&fmt_num(*b));
            for e in row {
                out.push(',');
                out.push_str(&fmt_num(*e));
            }
            out.push('\n');
        }
        out
    }
}

pub fn level_diagram(
    source: &LevelSource,
    axis: Axis,
    range: (f64, f64),
    steps: usize,
) -> Result<LevelDiagram> {
    if steps < 3 {
        return Err(Error::InvalidParameter(format!(
            "level diagram needs at least 3 samples, got {steps}"
        )));
    }
    let (lo, hi) = range;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(Error::InvalidParameter(format!(
            "bad field range ({lo}, {hi})"
        )));
    }
    let fields: Vec<f64> = (0..steps)
        .map(|k| lo + (hi - lo) * k as f64 / (steps - 1) as f64)
        .collect();
    let energies = fields
        .par_iter()
        .map(|&b| diagonalize(&source.hamiltonian(&FieldVector::along(axis, b))).map(|e| e.values))
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelDiagram {
        axis,
        fields,
        energies,
    })
}

// ---------------------------------------------------------------------------
// Effective model

pub const LOGICAL_LABELS: [&str; 4] = ["↓↓", "↓↑", "↑↓", "↑↑"];

/// Drive matrix elements ⟨a|(g1·S1z + g2·S2z)/ḡ|b⟩ between logical states.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriveMatrixElements {
    /// Channel 1, ↓↓ ↔ ↓↑.
    pub ch1_lower: f64,
    /// Channel 1, ↑↓ ↔ ↑↑.
    pub ch1_upper: f64,
    /// Channel 2, ↓↓ ↔ ↑↓.
    pub ch2_lower: f64,
    /// Channel 2, ↓↑ ↔ ↑↑.
    pub ch2_upper: f64,
}

impl DriveMatrixElements {
    /// The two (lower, upper) logical index pairs a channel drives, with
    /// their matrix elements.
    pub fn transitions(&self, channel: Channel) -> [((usize, usize), f64); 2] {
        match channel {
            Channel::One => [((0, 1), self.ch1_lower), ((2, 3), self.ch1_upper)],
            Channel::Two => [((0, 2), self.ch2_lower), ((1, 3), self.ch2_upper)],
        }
    }

    pub fn mean(&self, channel: Channel) -> f64 {
        let [(_, a), (_, b)] = self.transitions(channel);
        0.5 * (a + b)
    }
}

#[derive(Debug, Clone)]
pub struct EffectiveModel {
    pub params: DimerParams,
    /// Logical basis vectors in the 9-dim product space, index order ↓↓, ↓↑, ↑↓, ↑↑.
    pub basis: [DVector<C64>; 4],
    /// Zero-field energies of the logical states, GHz.
    pub energies: [f64; 4],
    /// Mixing angle of the middle states from the exact eigenvectors, rad:
    /// ↓↑ = cos θ |+−⟩ + sin θ |−+⟩.
    pub theta: f64,
    /// Interaction-picture detuning of the middle states from the exact spectrum, GHz.
    pub delta: f64,
    /// −2D̄J⊥²/(D̄²−Ē²), kept as a reference value only.
    pub delta_closed_form: f64,
    pub matrix_elements: DriveMatrixElements,
    /// Channel drive frequencies, GHz.
    pub omega1: f64,
    pub omega2: f64,
    /// Mean g-factor used to convert tone amplitudes into Rabi rates.
    pub g: f64,
    /// Remaining five eigenpairs of the zero-field Hamiltonian.
    pub upper_values: Vec<f64>,
    pub upper_vectors: Vec<DVector<C64>>,
}

impl EffectiveModel {
    pub fn omega(&self, channel: Channel) -> f64 {
        match channel {
            Channel::One => self.omega1,
            Channel::Two => self.omega2,
        }
    }

    /// Transition frequency between two logical states, GHz.
    pub fn transition(&self, from: usize, to: usize) -> f64 {
        self.energies[to] - self.energies[from]
    }

    /// Full orthonormal 9-dim eigenbasis: logical states first, then the rest.
    pub fn full_basis(&self) -> (Vec<f64>, Vec<DVector<C64>>) {
        let mut values = self.energies.to_vec();
        values.extend_from_slice(&self.upper_values);
        let mut vectors = self.basis.to_vec();
        vectors.extend(self.upper_vectors.iter().cloned());
        (values, vectors)
    }
}

/// Reference products for the logical labels, index order ↓↓, ↓↑, ↑↓, ↑↑.
pub fn reference_products() -> [DVector<C64>; 4] {
    let (plus, minus) = clock_states();
    [
        product_state(&minus, &minus),
        product_state(&plus, &minus),
        product_state(&minus, &plus),
        product_state(&plus, &plus),
    ]
}

const DEGENERACY_TOL: f64 = 1e-9;

pub fn extract_effective_model(d: &DimerParams) -> Result<EffectiveModel> {
    d.validate()?;
    let h = dimer_hamiltonian(d, &FieldVector::zero());
    let eig = diagonalize(&h)?;
    let v = &eig.values;
    let spread = v[3] - v[0];
    let gap = v[4] - v[3];
    if gap <= spread {
        return Err(Error::TruncationInvalid(format!(
            "gap above the four lowest levels ({gap:.4} GHz) does not exceed their spread ({spread:.4} GHz)"
        )));
    }

    let refs = reference_products();

    // Clusters of (near-)degenerate levels among the lowest four.
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for k in 0..4 {
        match clusters.last_mut() {
            Some(c) if (v[k] - v[c[0]]).abs() < DEGENERACY_TOL => c.push(k),
            _ => clusters.push(vec![k]),
        }
    }

    // Each reference goes to the cluster holding most of its weight; ties go
    // to the lower cluster.
    let mut assigned: Vec<Vec<usize>> = vec![Vec::new(); clusters.len()];
    for (r, reference) in refs.iter().enumerate() {
        let weights: Vec<f64> = clusters
            .iter()
            .map(|c| {
                c.iter()
                    .map(|&k| eig.vector(k).dotc(reference).norm_sqr())
                    .sum()
            })
            .collect();
        let mut best = 0;
        for (ci, w) in weights.iter().enumerate() {
            if *w > weights[best] + 1e-12 {
                best = ci;
            }
        }
        if weights[best] < 0.5 {
            return Err(Error::TruncationInvalid(format!(
                "logical state {} has no dominant eigenvector (max weight {:.3})",
                LOGICAL_LABELS[r], weights[best]
            )));
        }
        assigned[best].push(r);
    }

    let mut basis: [DVector<C64>; 4] = std::array::from_fn(|_| DVector::zeros(9));
    let mut energies = [0.0; 4];
    for (ci, cluster) in clusters.iter().enumerate() {
        if assigned[ci].len() != cluster.len() {
            return Err(Error::TruncationInvalid(format!(
                "ambiguous labeling: {} reference states map onto {} levels near {:.4} GHz",
                assigned[ci].len(),
                cluster.len(),
                v[cluster[0]]
            )));
        }
        // Project references into the cluster's eigenspace and orthonormalize
        // in label order.
        let mut built: Vec<DVector<C64>> = Vec::new();
        for &r in &assigned[ci] {
            let mut u = DVector::<C64>::zeros(9);
            for &k in cluster {
                let vk = eig.vector(k);
                u += &vk * vk.dotc(&refs[r]);
            }
            for prev in &built {
                let overlap = prev.dotc(&u);
                u -= prev * overlap;
            }
            let n = u.norm();
            if n < 1e-6 {
                return Err(Error::TruncationInvalid(format!(
                    "degenerate labeling failed for {}",
                    LOGICAL_LABELS[r]
                )));
            }
            u /= C64::new(n, 0.0);
            built.push(u.clone());
            basis[r] = u;
            energies[r] = v[cluster[0]];
        }
    }
    // Nondegenerate clusters carry their exact eigenvalue.
    for (ci, cluster) in clusters.iter().enumerate() {
        if cluster.len() == 1 {
            energies[assigned[ci][0]] = v[cluster[0]];
        }
    }

    let coupling = drive_coupling(d);
    let g = 0.5 * (d.m1.g + d.m2.g);
    gauge_largest_component(&mut basis[0]);
    for (a, b) in [(0, 1), (0, 2), (1, 3)] {
        let me = coupling.element(&basis[a], &basis[b]);
        if me.norm() > 1e-12 {
            let phase = C64::from_polar(1.0, me.arg());
            basis[b] *= phase;
        } else {
            gauge_largest_component(&mut basis[b]);
        }
    }
    let element = |a: usize, b: usize| coupling.element(&basis[a], &basis[b]).re / g;
    let matrix_elements = DriveMatrixElements {
        ch1_lower: element(0, 1),
        ch1_upper: element(2, 3),
        ch2_lower: element(0, 2),
        ch2_upper: element(1, 3),
    };

    let theta = mixing_angle(&basis[1]);

    let e = energies;
    let delta = 0.5 * (e[1] + e[2] - e[0] - e[3]);
    let omega1 = 0.5 * ((e[1] - e[0]) + (e[3] - e[2]));
    let omega2 = 0.5 * ((e[2] - e[0]) + (e[3] - e[1]));

    Ok(EffectiveModel {
        params: *d,
        basis,
        energies,
        theta,
        delta,
        delta_closed_form: closed_form_delta(d),
        matrix_elements,
        omega1,
        omega2,
        g,
        upper_values: v[4..].to_vec(),
        upper_vectors: (4..9).map(|k| eig.vector(k)).collect(),
    })
}

fn mixing_angle(down_up: &DVector<C64>) -> f64 {
    let refs = reference_products();
    let c_pm = refs[1].dotc(down_up);
    let c_mp = refs[2].dotc(down_up);
    // ↓↑ is gauged so its dominant |+−⟩ amplitude is real; the relative sign
    // of the |−+⟩ amplitude sets the sign of θ.
    let phase = if c_pm.norm() > 0.0 {
        c_pm.conj() / c_pm.norm()
    } else {
        C64::new(1.0, 0.0)
    };
    (c_mp * phase).re.atan2((c_pm * phase).re)
}

fn gauge_largest_component(v: &mut DVector<C64>) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if let Some(z) = v.iter().find(|z| z.norm() >= max - 1e-12).copied() {
        if z.norm() > 0.0 {
            *v *= z.conj() / z.norm();
        }
    }
}

// ---------------------------------------------------------------------------
// Closed forms

/// −2D̄J⊥²/(D̄²−Ē²), GHz.
pub fn closed_form_delta(d: &DimerParams) -> f64 {
    let (dm, em) = (d.mean_d(), d.mean_e());
    -2.0 * dm * d.j.j_perp.powi(2) / (dm * dm - em * em)
}

/// Second-order detuning −(Δ𝓔↑↑ + Δ𝓔↓↓)/2 = D̄J⊥²/(2(D̄²−Ē²)), GHz.
pub fn perturbative_delta(d: &DimerParams) -> f64 {
    let p = perturbative_states(d);
    -0.5 * (p.shift_up_up + p.shift_down_down)
}

/// ½·atan(2Jzz/ΔE), the closed-form mixing angle as usually quoted.
pub fn closed_form_theta(d: &DimerParams) -> f64 {
    let de = d.delta_e();
    let jzz = d.j.j_zz;
    if de != 0.0 {
        0.5 * (2.0 * jzz / de).atan()
    } else if jzz != 0.0 {
        jzz.signum() * std::f64::consts::FRAC_PI_4
    } else {
        0.0
    }
}

/// Amplitudes of an outer logical state on |±±⟩, |00⟩ and |∓∓⟩.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OuterComposition {
    pub main: f64,
    pub zero_zero: f64,
    pub cross: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbativeStates {
    pub up_up: OuterComposition,
    pub down_down: OuterComposition,
    /// Unperturbed outer energies 𝓔±± = 2(−D̄ ± Ē), GHz.
    pub unperturbed_up_up: f64,
    pub unperturbed_down_down: f64,
    /// Second-order shifts J⊥²/(2(−D̄ ± Ē)), GHz.
    pub shift_up_up: f64,
    pub shift_down_down: f64,
    /// −2D̄ ∓ √(ΔE² + Jzz²) for ↓↑ and ↑↓, GHz.
    pub middle_lower: f64,
    pub middle_upper: f64,
}

impl PerturbativeStates {
    /// Closed-form logical energies, index order ↓↓, ↓↑, ↑↓, ↑↑.
    pub fn energies(&self) -> [f64; 4] {
        [
            self.unperturbed_down_down + self.shift_down_down,
            self.middle_lower,
            self.middle_upper,
            self.unperturbed_up_up + self.shift_up_up,
        ]
    }
}

pub fn perturbative_states(d: &DimerParams) -> PerturbativeStates {
    let (dm, em) = (d.mean_d(), d.mean_e());
    let jp = d.j.j_perp;
    let e_pp = 2.0 * (-dm + em);
    let e_mm = 2.0 * (-dm - em);
    let outer = |e: f64, sign: f64| OuterComposition {
        main: 1.0 - jp * jp / (2.0 * e * e),
        zero_zero: jp / e,
        cross: sign * jp * jp / ((e_mm - e_pp) * e),
    };
    let split = (d.delta_e().powi(2) + d.j.j_zz.powi(2)).sqrt();
    PerturbativeStates {
        up_up: outer(e_pp, 1.0),
        down_down: outer(e_mm, -1.0),
        unperturbed_up_up: e_pp,
        unperturbed_down_down: e_mm,
        shift_up_up: jp * jp / (2.0 * (-dm + em)),
        shift_down_down: jp * jp / (2.0 * (-dm - em)),
        middle_lower: -2.0 * dm - split,
        middle_upper: -2.0 * dm + split,
    }
}

// ---------------------------------------------------------------------------
// Clock-transition checks

/// Finite-difference step, mT.
pub const CLOCK_STEP_MT: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClockCheck {
    pub axis: Axis,
    /// `((i, j), df/dB)` for every tracked transition, GHz/mT.
    pub slopes: Vec<((usize, usize), f64)>,
    pub max_abs: f64,
}

/// Slopes at B = 0 of all transitions among the `levels` lowest states.
///
/// Levels are ordered by energy at B = −h and followed to the other sample
/// points by maximum eigenvector overlap, so crossings at B = 0 are tracked
/// through rather than re-sorted. The derivative is a Richardson-extrapolated
/// central difference with steps h and h/2.
pub fn transition_slopes<F>(hamiltonian: F, axis: Axis, levels: usize) -> Result<ClockCheck>
where
    F: Fn(&FieldVector) -> Operator,
{
    let h = CLOCK_STEP_MT;
    let at = |b: f64| diagonalize(&hamiltonian(&FieldVector::along(axis, b)));
    let reference = at(-h)?;
    let n = reference.values.len();
    let tracked = |b: f64| -> Result<Vec<f64>> {
        let eig = at(b)?;
        let mut used = vec![false; n];
        let mut out = Vec::with_capacity(levels);
        for r in 0..levels {
            let rv = reference.vector(r);
            let mut best = None;
            let mut best_ov = -1.0;
            for k in 0..n {
                if used[k] {
                    continue;
                }
                let ov = eig.vector(k).dotc(&rv).norm_sqr();
                if ov > best_ov + 1e-12 {
                    best_ov = ov;
                    best = Some(k);
                }
            }
            let k = best.expect("levels <= dimension");
            used[k] = true;
            out.push(eig.values[k]);
        }
        Ok(out)
    };
    let minus_h: Vec<f64> = reference.values[..levels].to_vec();
    let minus_half = tracked(-0.5 * h)?;
    let plus_half = tracked(0.5 * h)?;
    let plus_h = tracked(h)?;

    let mut slopes = Vec::new();
    for i in 0..levels {
        for j in (i + 1)..levels {
            let f = |e: &[f64]| e[j] - e[i];
            let coarse = (f(&plus_h) - f(&minus_h)) / (2.0 * h);
            let fine = (f(&plus_half) - f(&minus_half)) / h;
            slopes.push(((i, j), (4.0 * fine - coarse) / 3.0));
        }
    }
    let max_abs = slopes.iter().map(|(_, s)| s.abs()).fold(0.0, f64::max);
    Ok(ClockCheck {
        axis,
        slopes,
        max_abs,
    })
}

/// Slopes of the six transitions inside the logical manifold at zero field.
pub fn clock_derivative_check(d: &DimerParams, axis: Axis) -> Result<ClockCheck> {
    transition_slopes(|b| dimer_hamiltonian(d, b), axis, 4)
}

/// Slope of the transition between the two lowest monomer levels at zero field.
pub fn monomer_clock_derivative(p: &MonomerParams, axis: Axis) -> Result<f64> {
    Ok(transition_slopes(|b| monomer_hamiltonian(p, b), axis, 2)?.max_abs)
}

/// Analytic Zeeman slope g·μB/h, GHz/mT.
pub fn zeeman_slope(g: f64) -> f64 {
    g * MU_B_OVER_H
}

// ---------------------------------------------------------------------------
// Single-qubit error estimates

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorEstimates {
    /// me(↓↓,↓↑) − me(↑↓,↑↑)
    pub mismatch_1: f64,
    /// me(↓↓,↑↓) − me(↓↑,↑↑)
    pub mismatch_2: f64,
    /// J⊥²/(D̄Ē)
    pub j_perp_scale: f64,
    /// Jzz/ΔE
    pub j_zz_scale: f64,
}

pub fn single_qubit_error_estimates(em: &EffectiveModel) -> ErrorEstimates {
    let d = &em.params;
    let me = &em.matrix_elements;
    ErrorEstimates {
        mismatch_1: me.ch1_lower - me.ch1_upper,
        mismatch_2: me.ch2_lower - me.ch2_upper,
        j_perp_scale: d.j.j_perp.powi(2) / (d.mean_d() * d.mean_e()),
        j_zz_scale: if d.delta_e() != 0.0 {
            d.j.j_zz / d.delta_e()
        } else {
            f64::INFINITY
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{dimer_hamiltonian, ExchangeParams};
    use crate::operator::{Unit, ONE};

    fn random_hermitian(n: usize, seed: u64) -> Operator {
        // xorshift; enough for a smoke test without pulling in rand
        let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1;
        let mut next = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(next(), 0.0);
            for j in (i + 1)..n {
                let z = C64::new(next(), next());
                m[(i, j)] = z;
                m[(j, i)] = z.conj();
            }
        }
        Operator::new(m, Unit::GHz)
    }

    #[test]
    fn identity_eigenvalues() {
        let eig = diagonalize(&Operator::identity(5)).unwrap();
        assert!(eig.values.iter().all(|v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn rejects_non_hermitian() {
        let m = DMatrix::from_row_slice(2, 2, &[ONE, ONE, -ONE, ONE]);
        let err = diagonalize(&Operator::new(m, Unit::GHz)).unwrap_err();
        assert!(matches!(err, Error::NonHermitian { .. }));
    }

    #[test]
    fn residual_and_orthonormality_on_random_hermitian() {
        for seed in 1..20 {
            let h = random_hermitian(9, seed);
            let eig = diagonalize(&h).unwrap();
            let norm = h.frobenius_norm();
            for k in 0..9 {
                let v = eig.vector(k);
                let r = h.matrix() * &v - &v * C64::new(eig.values[k], 0.0);
                assert!(r.norm() < 1e-10 * norm);
            }
            let gram = eig.vectors.adjoint() * &eig.vectors;
            let id = DMatrix::<C64>::identity(9, 9);
            assert!(crate::operator::frobenius(&(gram - id)) < 1e-12);
            assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn monomer_diagram_is_even_in_field() {
        let src = LevelSource::Monomer(MonomerParams::green());
        let diagram = level_diagram(&src, Axis::Z, (-100.0, 100.0), 21).unwrap();
        assert_eq!(diagram.levels(), 3);
        for k in 0..21 {
            let a = &diagram.energies[k];
            let b = &diagram.energies[20 - k];
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn monomer_outer_levels_have_zeeman_slope_at_large_field() {
        let p = MonomerParams::green();
        let src = LevelSource::Monomer(p);
        let d = level_diagram(&src, Axis::Z, (20_000.0, 20_010.0), 3).unwrap();
        let slope_low = (d.energies[2][0] - d.energies[0][0]) / 10.0;
        let slope_high = (d.energies[2][2] - d.energies[0][2]) / 10.0;
        let expected = zeeman_slope(p.g);
        assert!(
            (slope_low + expected).abs() < 1e-4 * expected,
            "{slope_low}"
        );
        assert!(
            (slope_high - expected).abs() < 1e-4 * expected,
            "{slope_high}"
        );
    }

    #[test]
    fn level_diagram_validates_steps() {
        let src = LevelSource::Monomer(MonomerParams::green());
        assert!(level_diagram(&src, Axis::Z, (-1.0, 1.0), 2).is_err());
        assert!(level_diagram(&src, Axis::Z, (1.0, -1.0), 5).is_err());
    }

    #[test]
    fn dimer_diagram_csv_shape() {
        let src = LevelSource::Dimer(DimerParams::reference(0.05));
        let d = level_diagram(&src, Axis::Z, (-50.0, 50.0), 5)
            .unwrap()
            .lowest(4);
        let csv = d.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 6);
        assert!(lines.iter().all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn effective_model_reference_parameters() {
        let d = DimerParams::reference(0.05);
        let em = extract_effective_model(&d).unwrap();
        // ascending energies at E1 < E2
        assert!(em.energies.windows(2).all(|w| w[0] < w[1]));
        // orthonormal basis
        for a in 0..4 {
            for b in 0..4 {
                let ov = em.basis[a].dotc(&em.basis[b]);
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ov - C64::new(expected, 0.0)).norm() < 1e-10);
            }
        }
        // middle splitting 2√(ΔE² + Jzz²)
        let split = em.energies[2] - em.energies[1];
        assert!((split - 1.403_566).abs() < 1e-5, "{split}");
        // exact mixing angle: tan 2θ = Jzz/ΔE
        let exact_theta = 0.5 * (0.05f64 / -0.7).atan();
        assert!((em.theta - exact_theta).abs() < 1e-3, "{}", em.theta);
        // quoted closed-form angle
        assert!((closed_form_theta(&d) + 0.070_95).abs() < 1e-4);
        // all matrix elements real-positive after gauge fixing
        let me = em.matrix_elements;
        for x in [me.ch1_lower, me.ch1_upper, me.ch2_lower, me.ch2_upper] {
            assert!(x > 0.9 && x < 1.1, "{me:?}");
        }
        // ω1 ≈ 2E1, ω2 ≈ 2E2
        assert!((em.omega1 - 3.8).abs() < 5e-3);
        assert!((em.omega2 - 5.2).abs() < 5e-3);
    }

    #[test]
    fn delta_closed_form_and_exact() {
        let d = DimerParams::reference(0.05);
        assert!((closed_form_delta(&d) * 1e3 + 1.0823).abs() < 1e-4);
        let em = extract_effective_model(&d).unwrap();
        assert!((em.delta - perturbative_delta(&d)).abs() < 0.01 * em.delta.abs());
        // the exact detuning is a quarter of the quoted closed form, with opposite sign
        let ratio = em.delta / em.delta_closed_form;
        assert!((ratio + 0.25).abs() < 0.0125, "{ratio}");
        // entangling time 1/(4δ) ≈ 924 ns
        assert!((1.0 / (4.0 * em.delta) - 924.0).abs() < 5.0);
    }

    #[test]
    fn uncoupled_limit() {
        let d = DimerParams::reference(0.0).with_exchange(0.0, 0.0);
        let em = extract_effective_model(&d).unwrap();
        let me = em.matrix_elements;
        for x in [me.ch1_lower, me.ch1_upper, me.ch2_lower, me.ch2_upper] {
            assert!((x - 1.0).abs() < 1e-12);
        }
        assert!(em.theta.abs() < 1e-12);
        assert!(em.delta.abs() < 1e-12);
    }

    #[test]
    fn degenerate_middle_levels_label_deterministically() {
        let mut d = DimerParams::reference(0.0).with_exchange(0.0, 0.0);
        d.m2.e = d.m1.e;
        d.m2.d = d.m1.d;
        let a = extract_effective_model(&d).unwrap();
        let b = extract_effective_model(&d).unwrap();
        let refs = reference_products();
        for k in 0..4 {
            assert!((a.basis[k].dotc(&refs[k]).norm() - 1.0).abs() < 1e-10);
            assert_eq!(a.basis[k], b.basis[k]);
        }
    }

    #[test]
    fn degenerate_anisotropy_is_truncation_invalid() {
        let mut d = DimerParams::reference(0.05);
        d.m1.e = d.m1.d;
        assert!(matches!(
            extract_effective_model(&d),
            Err(Error::TruncationInvalid(_))
        ));
    }

    #[test]
    fn perturbative_compositions() {
        let d = DimerParams::reference(0.05);
        let p = perturbative_states(&d);
        assert!((p.up_up.zero_zero + 0.003_030_3).abs() < 1e-7);
        assert!((p.shift_up_up * 1e3 + 0.30303).abs() < 1e-4);
        assert!((p.shift_down_down * 1e3 + 0.238_095).abs() < 1e-5);
        // magnitudes agree with the exact eigenvectors (the closed form
        // treats J⊥ alone, so compare with Jzz = 0)
        let p = perturbative_states(&d.with_exchange(0.1, 0.0));
        let em = extract_effective_model(&d.with_exchange(0.1, 0.0)).unwrap();
        let zero = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let zz = product_state(&[zero, one, zero], &[zero, one, zero]);
        let exact_uu = em.basis[3].dotc(&zz).norm();
        let exact_dd = em.basis[0].dotc(&zz).norm();
        assert!(
            (exact_uu - p.up_up.zero_zero.abs()).abs() < 1e-5,
            "{exact_uu}"
        );
        assert!(
            (exact_dd - p.down_down.zero_zero.abs()).abs() < 1e-5,
            "{exact_dd}"
        );

        let none = perturbative_states(&d.with_exchange(0.0, 0.05));
        assert_eq!(none.up_up.zero_zero, 0.0);
        assert_eq!(none.shift_up_up, 0.0);
        assert_eq!(none.shift_down_down, 0.0);
    }

    #[test]
    fn exact_energies_match_closed_forms() {
        let d = DimerParams::reference(0.05);
        let em = extract_effective_model(&d).unwrap();
        let closed = perturbative_states(&d).energies();
        for (a, b) in em.energies.iter().zip(closed) {
            assert!((a - b).abs() < 0.5e-3, "{a} vs {b}");
        }
    }

    #[test]
    fn degeneracy_breaking_follows_j_perp() {
        let d = DimerParams::reference(0.05);
        let em = extract_effective_model(&d).unwrap();
        let split = em.transition(0, 1) - em.transition(2, 3);
        assert!((split - 2.0 * em.delta).abs() < 1e-12);
        assert!(split.abs() > 1e-4);
        let em0 = extract_effective_model(&d.with_exchange(0.0, 0.05)).unwrap();
        assert!((em0.transition(0, 1) - em0.transition(2, 3)).abs() < 1e-10);
    }

    #[test]
    fn monomer_clock_transition_is_flat() {
        for p in [MonomerParams::green(), MonomerParams::purple()] {
            for axis in Axis::ALL {
                let s = monomer_clock_derivative(&p, axis).unwrap();
                assert!(s < 1e-6, "{axis:?}: {s}");
            }
        }
    }

    #[test]
    fn dimer_clock_transitions_are_flat() {
        let d = DimerParams::reference(0.05);
        for axis in Axis::ALL {
            let c = clock_derivative_check(&d, axis).unwrap();
            assert_eq!(c.slopes.len(), 6);
            assert!(c.max_abs < 1e-5, "{axis:?}: {}", c.max_abs);
        }
    }

    #[test]
    fn bare_zeeman_control_is_not_flat() {
        let p = MonomerParams {
            d: 0.0,
            e: 0.0,
            g: 2.0,
        };
        let s = monomer_clock_derivative(&p, Axis::Z).unwrap();
        assert!((s - zeeman_slope(2.0)).abs() < 1e-6, "{s}");
        assert!((s - 0.028).abs() < 1e-4);
    }

    #[test]
    fn error_estimates() {
        let em = extract_effective_model(&DimerParams::reference(0.0)).unwrap();
        let est = single_qubit_error_estimates(&em);
        assert!((est.j_perp_scale - 2.370_37e-4).abs() < 1e-8);
        for m in [est.mismatch_1, est.mismatch_2] {
            assert!(m.abs() < 5.0 * est.j_perp_scale, "{m}");
        }

        let em = extract_effective_model(&DimerParams::reference(0.05)).unwrap();
        let est = single_qubit_error_estimates(&em);
        assert!((est.j_zz_scale + 0.071_428_6).abs() < 1e-6);
        for m in [est.mismatch_1, est.mismatch_2] {
            let ratio = m.abs() / est.j_zz_scale.abs();
            assert!(ratio > 0.5 && ratio < 1.5, "{m}");
        }

        let d = DimerParams {
            j: ExchangeParams::new(0.0, 0.0),
            ..DimerParams::reference(0.0)
        };
        let est = single_qubit_error_estimates(&extract_effective_model(&d).unwrap());
        assert!(est.mismatch_1.abs() < 1e-12 && est.mismatch_2.abs() < 1e-12);
    }

    #[test]
    fn effective_model_basis_diagonalizes_hamiltonian() {
        let d = DimerParams::reference(0.1);
        let em = extract_effective_model(&d).unwrap();
        let h = dimer_hamiltonian(&d, &FieldVector::zero());
        for k in 0..4 {
            let hv = h.matrix() * &em.basis[k];
            let r = hv - &em.basis[k] * C64::new(em.energies[k], 0.0);
            assert!(r.norm() < 1e-10);
        }
    }
}
