//! Piecewise-constant pulse programs in the interaction picture.
//!
//! A [`Schedule`] is an ordered list of [`Segment`]s; each segment carries up
//! to one [`Tone`] per drive channel and is constant in the frame rotating at
//! ω1 (channel 1) and ω2 (channel 2). A tone of amplitude `B` (mT) drives each
//! of its two transitions at Rabi frequency `g·μB·B·me / 2h`, so a π/2 rotation
//! at 1 mT and unit matrix element takes 17.86 ns.

mod calibrate;

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

pub use calibrate::{calibrate_schedule, CalibrationResult, CalibrationSettings};

use crate::error::{Error, Result};
use crate::model::{Channel, MU_B_OVER_H};
use crate::operator::{Operator, Unit, C64};
use crate::spectrum::EffectiveModel;

/// Default tone amplitude, mT (10 G).
pub const DEFAULT_AMPLITUDE_MT: f64 = 1.0;

/// Starting free-evolution time of the CNOT protocol, ns.
pub const NOMINAL_ENTANGLING_TIME_NS: f64 = 924.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tone {
    pub channel: Channel,
    #[serde(rename = "amplitude_mT")]
    pub amplitude_mt: f64,
    pub phase_rad: f64,
    /// Offset of the tone from the channel frequency, GHz.
    #[serde(rename = "detuning_GHz", default)]
    pub detuning_ghz: f64,
}

impl Tone {
    pub fn new(channel: Channel, amplitude_mt: f64, phase_rad: f64) -> Self {
        Tone {
            channel,
            amplitude_mt,
            phase_rad,
            detuning_ghz: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub label: String,
    pub duration_ns: f64,
    #[serde(default)]
    pub tones: Vec<Tone>,
}

impl Segment {
    pub fn new(label: impl Into<String>, duration_ns: f64, tones: Vec<Tone>) -> Result<Self> {
        let seg = Segment {
            label: label.into(),
            duration_ns,
            tones,
        };
        seg.validate()?;
        Ok(seg)
    }

    pub fn is_free(&self) -> bool {
        self.tones.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.duration_ns.is_finite() && self.duration_ns > 0.0) {
            return Err(Error::InvalidSegment(format!(
                "duration must be positive, got {} ns",
                self.duration_ns
            )));
        }
        if self.tones.len() > 2 {
            return Err(Error::InvalidSegment(format!(
                "at most two tones per segment, got {}",
                self.tones.len()
            )));
        }
        if self.tones.len() == 2 && self.tones[0].channel == self.tones[1].channel {
            return Err(Error::InvalidSegment(format!(
                "two tones on channel {}",
                self.tones[0].channel.index()
            )));
        }
        for t in &self.tones {
            if !(t.amplitude_mt.is_finite() && t.amplitude_mt >= 0.0) {
                return Err(Error::InvalidSegment(format!(
                    "amplitude must be non-negative, got {} mT",
                    t.amplitude_mt
                )));
            }
            if !(t.phase_rad.is_finite() && t.detuning_ghz.is_finite()) {
                return Err(Error::InvalidSegment("non-finite tone parameter".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub gate: String,
    pub segments: Vec<Segment>,
}

impl Schedule {
    pub fn new(gate: impl Into<String>, segments: Vec<Segment>) -> Result<Self> {
        let s = Schedule {
            gate: gate.into(),
            segments,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(Error::InvalidSegment("schedule is empty".into()));
        }
        self.segments.iter().try_for_each(Segment::validate)
    }

    pub fn total_duration_ns(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_ns).sum()
    }

    pub fn durations(&self) -> Vec<f64> {
        self.segments.iter().map(|s| s.duration_ns).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schedule serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Schedule =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("schedule JSON: {e}")))?;
        s.validate()?;
        Ok(s)
    }
}

/// Rotation axis of a π/2 pulse, selected by the tone phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotationAxis {
    X,
    Y,
    XBar,
    YBar,
}

impl RotationAxis {
    pub fn phase(self) -> f64 {
        match self {
            RotationAxis::X => 0.0,
            RotationAxis::Y => FRAC_PI_2,
            RotationAxis::XBar => PI,
            RotationAxis::YBar => 3.0 * FRAC_PI_2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RotationAxis::X => "X",
            RotationAxis::Y => "Y",
            RotationAxis::XBar => "Xbar",
            RotationAxis::YBar => "Ybar",
        }
    }
}

/// Rabi frequency (GHz) of a tone of `amplitude_mt` on a transition with
/// matrix element `me`.
pub fn rabi_frequency(g: f64, amplitude_mt: f64, me: f64) -> f64 {
    0.5 * g * MU_B_OVER_H * amplitude_mt * me
}

/// Interaction-picture Hamiltonian (GHz) of one segment in the logical basis.
pub fn rwa_hamiltonian(em: &EffectiveModel, seg: &Segment) -> Result<Operator> {
    seg.validate()?;
    let mut h = DMatrix::<C64>::zeros(4, 4);
    h[(1, 1)] = C64::new(em.delta, 0.0);
    h[(2, 2)] = C64::new(em.delta, 0.0);
    for tone in &seg.tones {
        let half_rabi = 0.5 * rabi_frequency(em.g, tone.amplitude_mt, 1.0);
        let phase = C64::from_polar(1.0, tone.phase_rad);
        for ((lo, hi), me) in em.matrix_elements.transitions(tone.channel) {
            let c = phase * (half_rabi * me);
            h[(lo, hi)] += c;
            h[(hi, lo)] += c.conj();
        }
        if tone.detuning_ghz != 0.0 {
            // frame rotating at the tone frequency: shift the states whose
            // driven qubit is up
            let bit = match tone.channel {
                Channel::One => 1,
                Channel::Two => 2,
            };
            for k in 0..4 {
                if k & bit != 0 {
                    h[(k, k)] -= C64::new(tone.detuning_ghz, 0.0);
                }
            }
        }
    }
    Ok(Operator::new(h, Unit::GHz))
}

/// Duration (ns) of a π/2 rotation on `channel` at `amplitude_mt`.
pub fn pi2_duration(em: &EffectiveModel, channel: Channel, amplitude_mt: f64) -> f64 {
    let rabi = rabi_frequency(em.g, amplitude_mt, em.matrix_elements.mean(channel));
    0.25 / rabi
}

pub fn pi2_segment(em: &EffectiveModel, channel: Channel, axis: RotationAxis) -> Segment {
    pi2_segment_with_amplitude(em, channel, axis, DEFAULT_AMPLITUDE_MT)
}

pub fn pi2_segment_with_amplitude(
    em: &EffectiveModel,
    channel: Channel,
    axis: RotationAxis,
    amplitude_mt: f64,
) -> Segment {
    Segment {
        label: format!("{}{}", axis.name(), channel.index()),
        duration_ns: pi2_duration(em, channel, amplitude_mt),
        tones: vec![Tone::new(channel, amplitude_mt, axis.phase())],
    }
}

/// Simultaneous π/2 rotations on both qubits. The segment lasts as long as the
/// slower channel needs at `amplitude_mt`; the faster channel's amplitude is
/// reduced so both rotations end together.
pub fn two_tone_segment_with_amplitude(
    em: &EffectiveModel,
    axis1: RotationAxis,
    axis2: RotationAxis,
    amplitude_mt: f64,
) -> Segment {
    let t1 = pi2_duration(em, Channel::One, amplitude_mt);
    let t2 = pi2_duration(em, Channel::Two, amplitude_mt);
    let t = t1.max(t2);
    Segment {
        label: format!("[{}1 {}2]", axis1.name(), axis2.name()),
        duration_ns: t,
        tones: vec![
            Tone::new(Channel::One, amplitude_mt * t1 / t, axis1.phase()),
            Tone::new(Channel::Two, amplitude_mt * t2 / t, axis2.phase()),
        ],
    }
}

pub fn two_tone_segment(em: &EffectiveModel, axis1: RotationAxis, axis2: RotationAxis) -> Segment {
    two_tone_segment_with_amplitude(em, axis1, axis2, DEFAULT_AMPLITUDE_MT)
}

pub fn free_evolution_segment(duration_ns: f64) -> Result<Segment> {
    Segment::new("UJ", duration_ns, Vec::new())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompileOptions {
    pub amplitude_mt: f64,
    pub entangling_time_ns: f64,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions {
            amplitude_mt: DEFAULT_AMPLITUDE_MT,
            entangling_time_ns: NOMINAL_ENTANGLING_TIME_NS,
        }
    }
}

/// CNOT (control qubit 1, target qubit 2) as the five-segment sequence
/// Y2 · U_J · [X̄1 Ȳ2] · [Ȳ1 X2] · X1 in time order.
pub fn cnot_schedule(em: &EffectiveModel) -> Schedule {
    cnot_schedule_with(em, &CompileOptions::default())
}

pub fn cnot_schedule_with(em: &EffectiveModel, opts: &CompileOptions) -> Schedule {
    use RotationAxis::*;
    let a = opts.amplitude_mt;
    Schedule {
        gate: "CNOT".into(),
        segments: vec![
            pi2_segment_with_amplitude(em, Channel::Two, Y, a),
            Segment {
                label: "UJ".into(),
                duration_ns: opts.entangling_time_ns,
                tones: Vec::new(),
            },
            two_tone_segment_with_amplitude(em, XBar, YBar, a),
            two_tone_segment_with_amplitude(em, YBar, X, a),
            pi2_segment_with_amplitude(em, Channel::One, X, a),
        ],
    }
}

/// Candidate free-evolution times for the entangling step, ns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EntanglingTimes {
    /// Value used to seed calibration.
    pub nominal: f64,
    /// 1/|δ| with δ from the closed form.
    pub inverse_closed_form_delta: f64,
    /// π/(2·2π|δ|) with δ from the closed form.
    pub quarter_phase_closed_form_delta: f64,
    /// Time at which the exact detuning accumulates a π/4 conditional phase, 1/(4|δ|).
    pub exact: f64,
}

pub fn entangling_times(em: &EffectiveModel) -> EntanglingTimes {
    let dc = em.delta_closed_form.abs();
    EntanglingTimes {
        nominal: NOMINAL_ENTANGLING_TIME_NS,
        inverse_closed_form_delta: 1.0 / dc,
        quarter_phase_closed_form_delta: PI / (2.0 * 2.0 * PI * dc),
        exact: 1.0 / (4.0 * em.delta.abs()),
    }
}
