//! Magnetic-field modulation protocols.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Waveform {
    Constant,
    Triangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FieldProtocol {
    /// Center field (T).
    pub b_center: f64,
    /// Sweep amplitude (T).
    pub amplitude: f64,
    /// Modulation frequency (Hz).
    pub frequency: f64,
    pub waveform: Waveform,
    /// Piecewise-constant subdivisions per modulation period.
    pub steps_per_period: usize,
}

impl FieldProtocol {
    pub fn constant(b: f64) -> Self {
        Self {
            b_center: b,
            amplitude: 0.0,
            frequency: 0.0,
            waveform: Waveform::Constant,
            steps_per_period: 1,
        }
    }

    pub fn triangular(b_center: f64, amplitude: f64, frequency: f64) -> Self {
        Self { b_center, amplitude, frequency, waveform: Waveform::Triangular, steps_per_period: 200 }
    }

    /// Field value at time t. The triangular wave starts at the center,
    /// rising, with equal-duration up and down ramps.
    pub fn field_at(&self, t: f64) -> f64 {
        assert!(t >= 0.0, "time must be nonnegative");
        match self.waveform {
            Waveform::Constant => self.b_center,
            Waveform::Triangular => {
                let phase = (t * self.frequency).rem_euclid(1.0);
                let x = if phase < 0.25 {
                    4.0 * phase
                } else if phase < 0.75 {
                    2.0 - 4.0 * phase
                } else {
                    4.0 * phase - 4.0
                };
                self.b_center + self.amplitude * x
            }
        }
    }

    /// Duration of one piecewise-constant field segment (infinite when
    /// constant).
    pub fn segment_duration(&self) -> f64 {
        match self.waveform {
            Waveform::Constant => f64::INFINITY,
            Waveform::Triangular => 1.0 / self.frequency / self.steps_per_period as f64,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn triangle_shape() {
        let p = FieldProtocol::triangular(0.05, 1e-5, 100.0);
        assert_abs_diff_eq!(p.field_at(0.0), 0.05, epsilon = 1e-15);
        // quarter period: maximum
        assert_abs_diff_eq!(p.field_at(0.25 / 100.0), 0.05 + 1e-5, epsilon = 1e-12);
        // three quarters: minimum
        assert_abs_diff_eq!(p.field_at(0.75 / 100.0), 0.05 - 1e-5, epsilon = 1e-12);
        // full period: back to center
        assert_abs_diff_eq!(p.field_at(1.0 / 100.0), 0.05, epsilon = 1e-12);
    }

    #[test]
    fn triangle_time_average_is_center() {
        let p = FieldProtocol::triangular(0.05, 1e-5, 37.0);
        let n = 10_000;
        let period = 1.0 / 37.0;
        let avg: f64 =
            (0..n).map(|k| p.field_at((k as f64 + 0.5) * period / n as f64)).sum::<f64>()
                / n as f64;
        assert_abs_diff_eq!(avg, 0.05, epsilon = 1e-10);
    }

    #[test]
    fn symmetric_ramps() {
        let p = FieldProtocol::triangular(0.0, 1.0, 1.0);
        // rising and falling ramps cover the range in equal time
        let up = p.field_at(0.2) - p.field_at(0.1);
        let down = p.field_at(0.45) - p.field_at(0.35);
        assert_abs_diff_eq!(up, -down, epsilon = 1e-12);
    }
}
