//! Spin-1 operators and the monomer / dimer Hamiltonians.
//!
//! Conventions used throughout the crate:
//!
//! * energies are ordinary frequencies (E/h) in GHz, times in ns, fields in mT;
//! * each spin uses the basis `{|+1⟩, |0⟩, |−1⟩}`;
//! * the dimer basis is the lexicographic tensor product, spin 1 on the left;
//! * both spins share one principal-axis frame, so a [`FieldVector`] acts on
//!   both spins with the same components.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operator::{Operator, Unit, C64, I, ONE, ZERO};

/// Bohr magneton over Planck's constant, GHz/mT.
pub const MU_B_OVER_H: f64 = 13.996_244_9e-3;

pub const DEFAULT_G: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonomerParams {
    /// Easy-axis anisotropy, GHz.
    pub d: f64,
    /// Transverse anisotropy, GHz.
    pub e: f64,
    pub g: f64,
}

impl MonomerParams {
    pub fn new(d: f64, e: f64, g: f64) -> Result<Self> {
        let p = MonomerParams { d, e, g };
        p.validate()?;
        Ok(p)
    }

    /// Green variant of the ring (spin 1 of the heterodimer).
    pub fn green() -> Self {
        MonomerParams {
            d: 21.0,
            e: 1.9,
            g: DEFAULT_G,
        }
    }

    /// Purple variant of the ring (spin 2 of the heterodimer).
    pub fn purple() -> Self {
        MonomerParams {
            d: 16.5,
            e: 2.6,
            g: DEFAULT_G,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d.is_finite() && self.e.is_finite() && self.g.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "monomer parameters must be finite: {self:?}"
            )));
        }
        if self.d <= 0.0 || self.e <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "D and E must be positive (D = {}, E = {})",
                self.d, self.e
            )));
        }
        if self.d <= self.e {
            return Err(Error::TruncationInvalid(format!(
                "easy-axis anisotropy D = {} GHz must exceed E = {} GHz",
                self.d, self.e
            )));
        }
        Ok(())
    }

    /// Zero-field spectrum in ascending order: `{−D−E, −D+E, 0}`.
    pub fn zero_field_energies(&self) -> [f64; 3] {
        [-self.d - self.e, -self.d + self.e, 0.0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeParams {
    /// Transverse exchange J⊥, GHz.
    pub j_perp: f64,
    /// Longitudinal exchange Jzz, GHz.
    pub j_zz: f64,
}

impl ExchangeParams {
    pub fn new(j_perp: f64, j_zz: f64) -> Self {
        ExchangeParams { j_perp, j_zz }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerParams {
    pub m1: MonomerParams,
    pub m2: MonomerParams,
    pub j: ExchangeParams,
}

impl DimerParams {
    pub fn new(m1: MonomerParams, m2: MonomerParams, j: ExchangeParams) -> Result<Self> {
        let d = DimerParams { m1, m2, j };
        d.validate()?;
        Ok(d)
    }

    /// Green/purple heterodimer with J⊥ = 100 MHz and the given Jzz (GHz).
    pub fn reference(j_zz: f64) -> Self {
        DimerParams {
            m1: MonomerParams::green(),
            m2: MonomerParams::purple(),
            j: ExchangeParams::new(0.1, j_zz),
        }
    }

    pub fn with_exchange(mut self, j_perp: f64, j_zz: f64) -> Self {
        self.j = ExchangeParams::new(j_perp, j_zz);
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.m1.validate()?;
        self.m2.validate()?;
        if !(self.j.j_perp.is_finite() && self.j.j_zz.is_finite()) {
            return Err(Error::InvalidParameter("exchange must be finite".into()));
        }
        if let Some(w) = self.validity_warning() {
            log::warn!("{w}");
        }
        Ok(())
    }

    /// Non-fatal warning when the exchange is not small against min(E1, E2).
    pub fn validity_warning(&self) -> Option<String> {
        let e_min = self.m1.e.min(self.m2.e);
        let j = self.j.j_perp.abs().max(self.j.j_zz.abs());
        (j > 0.1 * e_min).then(|| {
            format!("exchange {j} GHz is not small compared with min(E1, E2) = {e_min} GHz")
        })
    }

    pub fn mean_d(&self) -> f64 {
        0.5 * (self.m1.d + self.m2.d)
    }

    pub fn mean_e(&self) -> f64 {
        0.5 * (self.m1.e + self.m2.e)
    }

    /// ΔE = E1 − E2.
    pub fn delta_e(&self) -> f64 {
        self.m1.e - self.m2.e
    }
}

/// Drive channel `i` is the tone near ω_i; it rotates logical qubit `i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    pub fn index(self) -> u8 {
        match self {
            Channel::One => 1,
            Channel::Two => 2,
        }
    }

    pub fn from_index(i: u8) -> Result<Self> {
        match i {
            1 => Ok(Channel::One),
            2 => Ok(Channel::Two),
            other => Err(Error::InvalidSegment(format!(
                "channel must be 1 or 2, got {other}"
            ))),
        }
    }
}

impl Serialize for Channel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.index())
    }
}

impl<'de> Deserialize<'de> for Channel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let i = u8::deserialize(d)?;
        Channel::from_index(i).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::Usage(format!("unknown axis `{other}`"))),
        }
    }
}

/// Static magnetic field in mT, expressed in the shared principal frame.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FieldVector {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl FieldVector {
    pub fn zero() -> Self {
        FieldVector::default()
    }

    pub fn along(axis: Axis, value: f64) -> Self {
        let mut b = FieldVector::zero();
        match axis {
            Axis::X => b.x = value,
            Axis::Y => b.y = value,
            Axis::Z => b.z = value,
        }
        b
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub sx: Operator,
    pub sy: Operator,
    pub sz: Operator,
}

pub fn spin1_operators() -> SpinOperators {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let a = C64::new(r, 0.0);
    let ia = I * r;
    let sx = nalgebra::DMatrix::from_row_slice(3, 3, &[ZERO, a, ZERO, a, ZERO, a, ZERO, a, ZERO]);
    let sy =
        nalgebra::DMatrix::from_row_slice(3, 3, &[ZERO, -ia, ZERO, ia, ZERO, -ia, ZERO, ia, ZERO]);
    let sz = nalgebra::DMatrix::from_row_slice(
        3,
        3,
        &[ONE, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, ZERO, -ONE],
    );
    SpinOperators {
        sx: Operator::new(sx, Unit::Dimensionless),
        sy: Operator::new(sy, Unit::Dimensionless),
        sz: Operator::new(sz, Unit::Dimensionless),
    }
}

/// H = −D·Sz² + E·(Sx² − Sy²) + g·μB·S·B / h, in GHz.
pub fn monomer_hamiltonian(p: &MonomerParams, b: &FieldVector) -> Operator {
    let s = spin1_operators();
    let sx2 = s.sx.mul(&s.sx);
    let sy2 = s.sy.mul(&s.sy);
    let sz2 = s.sz.mul(&s.sz);
    let zeeman = p.g * MU_B_OVER_H;
    sz2.scale(-p.d)
        .add(&sx2.add(&sy2.scale(-1.0)).scale(p.e))
        .add(&s.sx.scale(zeeman * b.x))
        .add(&s.sy.scale(zeeman * b.y))
        .add(&s.sz.scale(zeeman * b.z))
        .with_unit(Unit::GHz)
}

/// H = H1⊗I + I⊗H2 + J⊥(S1x S2x + S1y S2y) + Jzz S1z S2z, in GHz.
pub fn dimer_hamiltonian(d: &DimerParams, b: &FieldVector) -> Operator {
    let s = spin1_operators();
    let id = Operator::identity(3);
    let h1 = monomer_hamiltonian(&d.m1, b).kron(&id);
    let h2 = id.kron(&monomer_hamiltonian(&d.m2, b));
    let perp = s.sx.kron(&s.sx).add(&s.sy.kron(&s.sy)).scale(d.j.j_perp);
    let zz = s.sz.kron(&s.sz).scale(d.j.j_zz);
    h1.add(&h2).add(&perp).add(&zz).with_unit(Unit::GHz)
}

/// `(S1z ⊗ I, I ⊗ S2z)` on the 9-dim product space.
pub fn drive_operators() -> (Operator, Operator) {
    let s = spin1_operators();
    let id = Operator::identity(3);
    (s.sz.kron(&id), id.kron(&s.sz))
}

/// g1·S1z + g2·S2z: both frames share the easy axis, so every tone couples
/// to the easy-axis spin of both molecules.
pub fn drive_coupling(d: &DimerParams) -> Operator {
    let (s1, s2) = drive_operators();
    s1.scale(d.m1.g).add(&s2.scale(d.m2.g))
}

/// Product state |a⟩⊗|b⟩ of two spin-1 kets.
pub fn product_state(a: &[C64; 3], b: &[C64; 3]) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_fn(9, |k, _| a[k / 3] * b[k % 3])
}

/// Zero-field clock states `|+⟩ = (|+1⟩ + |−1⟩)/√2` and `|−⟩ = (|+1⟩ − |−1⟩)/√2`.
pub fn clock_states() -> ([C64; 3], [C64; 3]) {
    let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ([r, ZERO, r], [r, ZERO, -r])
}
