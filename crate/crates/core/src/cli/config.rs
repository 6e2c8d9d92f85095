//! Run configuration, read from TOML.
//!
//! ```toml
//! seed = 0
//!
//! [dimer]              # GHz
//! d1 = 21.0
//! e1 = 1.9
//! d2 = 16.5
//! e2 = 2.6
//! g1 = 2.0
//! g2 = 2.0
//! j_perp = 0.1
//! j_zz = 0.05
//!
//! [drive]
//! amplitude_mT = 1.0
//! entangling_time_ns = 924.0
//!
//! [sweep]
//! jzz_MHz = [0.0, 50.0, 100.0]
//! t2_us = [0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, inf]
//!
//! [levels]
//! monomer_range_mT = 500.0
//! dimer_range_mT = 50.0
//! samples = 201
//!
//! [calibration]
//! driven_window = 0.1
//! free_window = [0.2, 2.0]
//! resolution_ns = 0.01
//! tolerance = 1e-6
//! max_sweeps = 20
//!
//! [output]
//! dir = "out"
//! ```
//!
//! Every key is optional; missing keys take the values shown.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{DimerParams, ExchangeParams, MonomerParams};
use crate::pulses::{CalibrationSettings, CompileOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DimerSection {
    pub d1: f64,
    pub e1: f64,
    pub d2: f64,
    pub e2: f64,
    pub g1: f64,
    pub g2: f64,
    pub j_perp: f64,
    pub j_zz: f64,
}

impl Default for DimerSection {
    fn default() -> Self {
        let r = DimerParams::reference(0.05);
        DimerSection {
            d1: r.m1.d,
            e1: r.m1.e,
            d2: r.m2.d,
            e2: r.m2.e,
            g1: r.m1.g,
            g2: r.m2.g,
            j_perp: r.j.j_perp,
            j_zz: r.j.j_zz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriveSection {
    #[serde(rename = "amplitude_mT")]
    pub amplitude_mt: f64,
    pub entangling_time_ns: f64,
}

impl Default for DriveSection {
    fn default() -> Self {
        let o = CompileOptions::default();
        DriveSection {
            amplitude_mt: o.amplitude_mt,
            entangling_time_ns: o.entangling_time_ns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    #[serde(rename = "jzz_MHz")]
    pub jzz_mhz: Vec<f64>,
    pub t2_us: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            jzz_mhz: vec![0.0, 50.0, 100.0],
            t2_us: vec![0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, f64::INFINITY],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelsSection {
    #[serde(rename = "monomer_range_mT")]
    pub monomer_range_mt: f64,
    #[serde(rename = "dimer_range_mT")]
    pub dimer_range_mt: f64,
    pub samples: usize,
}

impl Default for LevelsSection {
    fn default() -> Self {
        LevelsSection {
            monomer_range_mt: 500.0,
            dimer_range_mt: 50.0,
            samples: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub dimer: DimerSection,
    pub drive: DriveSection,
    pub sweep: SweepSection,
    pub levels: LevelsSection,
    pub calibration: CalibrationSettings,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML form without the output section, hex.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputSection::default();
        let digest = Sha256::digest(canonical.to_toml().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Parameters without validation; truncation problems surface later.
    pub fn dimer_params(&self) -> DimerParams {
        let d = &self.dimer;
        DimerParams {
            m1: MonomerParams {
                d: d.d1,
                e: d.e1,
                g: d.g1,
            },
            m2: MonomerParams {
                d: d.d2,
                e: d.e2,
                g: d.g2,
            },
            j: ExchangeParams::new(d.j_perp, d.j_zz),
        }
    }

    pub fn compile_options(&self) -> CompileOptions {
        CompileOptions {
            amplitude_mt: self.drive.amplitude_mt,
            entangling_time_ns: self.drive.entangling_time_ns,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("drive.amplitude_mT", self.drive.amplitude_mt),
            ("drive.entangling_time_ns", self.drive.entangling_time_ns),
            ("levels.monomer_range_mT", self.levels.monomer_range_mt),
            ("levels.dimer_range_mT", self.levels.dimer_range_mt),
            ("calibration.resolution_ns", self.calibration.resolution_ns),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.levels.samples < 2 {
            return Err(Error::Config("levels.samples must be at least 2".into()));
        }
        if self.sweep.t2_us.iter().any(|t| t.is_nan() || *t <= 0.0) {
            return Err(Error::Config("sweep.t2_us entries must be positive".into()));
        }
        if self.sweep.jzz_mhz.iter().any(|j| !j.is_finite()) {
            return Err(Error::Config("sweep.jzz_MHz entries must be finite".into()));
        }
        let (lo, hi) = self.calibration.free_window;
        if !(lo > 0.0 && hi > lo) || !(self.calibration.driven_window >= 0.0) {
            return Err(Error::Config("calibration windows are malformed".into()));
        }
        Ok(())
    }
}
