//! Duration calibration by coordinate-wise golden-section search.

use serde::{Deserialize, Serialize};

use super::Schedule;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSettings {
    /// Relative half-width of the search window for driven segments.
    pub driven_window: f64,
    /// Search window for free evolution, as multiples of the nominal time.
    pub free_window: (f64, f64),
    /// Stop bracketing once the window is narrower than this, ns.
    pub resolution_ns: f64,
    /// Stop sweeping once a full sweep improves the score by less than this.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        CalibrationSettings {
            driven_window: 0.1,
            free_window: (0.2, 2.0),
            resolution_ns: 0.01,
            tolerance: 1e-6,
            max_sweeps: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub schedule: Schedule,
    pub fidelity_before: f64,
    pub fidelity_after: f64,
    /// Calibrated minus nominal duration per segment, ns.
    pub adjustments_ns: Vec<f64>,
    pub sweeps: usize,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximize `score` over segment durations. Windows are anchored at the
/// durations of `nominal`; amplitudes and phases are left untouched. Moves are
/// accepted only when they raise the score, so the result never scores below
/// the input.
pub fn calibrate_schedule<F>(
    nominal: &Schedule,
    settings: &CalibrationSettings,
    score: F,
) -> Result<CalibrationResult>
where
    F: Fn(&Schedule) -> Result<f64>,
{
    nominal.validate()?;
    let mut current = nominal.clone();
    let before = score(&current)?;
    let mut best = before;
    let mut sweeps = 0;

    while sweeps < settings.max_sweeps {
        sweeps += 1;
        let start = best;
        for idx in 0..current.segments.len() {
            let t0 = nominal.segments[idx].duration_ns;
            let (lo, hi) = if nominal.segments[idx].is_free() {
                (settings.free_window.0 * t0, settings.free_window.1 * t0)
            } else {
                (
                    (1.0 - settings.driven_window) * t0,
                    (1.0 + settings.driven_window) * t0,
                )
            };
            let mut eval = |t: f64| -> Result<f64> {
                let mut trial = current.clone();
                trial.segments[idx].duration_ns = t;
                score(&trial)
            };
            let (t_best, f_best) = golden_section(&mut eval, lo, hi, settings.resolution_ns)?;
            if f_best > best {
                best = f_best;
                current.segments[idx].duration_ns = t_best;
            }
        }
        log::debug!("calibration sweep {sweeps}: score {best:.9}");
        if best - start < settings.tolerance {
            break;
        }
    }

    if !best.is_finite() {
        return Err(Error::NumericalFailure(
            "calibration score is not finite".into(),
        ));
    }
    let adjustments_ns = current
        .segments
        .iter()
        .zip(&nominal.segments)
        .map(|(c, n)| c.duration_ns - n.duration_ns)
        .collect();
    Ok(CalibrationResult {
        schedule: current,
        fidelity_before: before,
        fidelity_after: best,
        adjustments_ns,
        sweeps,
    })
}

/// Best sampled point of a golden-section maximization on [lo, hi].
fn golden_section<F>(f: &mut F, mut lo: f64, mut hi: f64, resolution: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let mut best = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    while hi - lo > resolution {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
            if f1 > best.1 {
                best = (x1, f1);
            }
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
            if f2 > best.1 {
                best = (x2, f2);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pulses::Segment;

    fn toy() -> Schedule {
        Schedule::new(
            "toy",
            vec![
                Segment::new(
                    "a",
                    10.0,
                    vec![crate::pulses::Tone::new(
                        crate::model::Channel::One,
                        1.0,
                        0.0,
                    )],
                )
                .unwrap(),
                Segment::new("free", 100.0, vec![]).unwrap(),
            ],
        )
        .unwrap()
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let mut f = |x: f64| Ok(-(x - 1.2345).powi(2));
        let (x, _) = golden_section(&mut f, 0.0, 3.0, 1e-6).unwrap();
        assert!((x - 1.2345).abs() < 1e-5);
    }

    #[test]
    fn recovers_shifted_optimum_within_windows() {
        let score = |s: &Schedule| {
            let d = s.durations();
            Ok(1.0 - 1e-4 * (d[0] - 10.7).powi(2) - 1e-6 * (d[1] - 130.0).powi(2))
        };
        let r = calibrate_schedule(&toy(), &CalibrationSettings::default(), score).unwrap();
        assert!((r.adjustments_ns[0] - 0.7).abs() < 0.02);
        assert!((r.adjustments_ns[1] - 30.0).abs() < 0.05);
        assert!(r.fidelity_after >= r.fidelity_before);
    }

    #[test]
    fn optimum_outside_window_stays_clamped() {
        let score = |s: &Schedule| Ok(-(s.durations()[0] - 50.0).abs());
        let r = calibrate_schedule(&toy(), &CalibrationSettings::default(), score).unwrap();
        assert!((r.schedule.segments[0].duration_ns - 11.0).abs() < 0.02);
    }

    #[test]
    fn never_worsens_the_score() {
        let score = |s: &Schedule| Ok((s.durations()[0] * 7.0).sin());
        let r = calibrate_schedule(&toy(), &CalibrationSettings::default(), score).unwrap();
        assert!(r.fidelity_after >= r.fidelity_before);
    }
}
