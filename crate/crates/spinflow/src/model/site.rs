//! Per-site hyperfine data and the conditional nuclear quantization frames.
//!
//! Each dressed site couples its nucleus to spin S through (a_zz, a_zx) and
//! to spin S' through (ap_zz, ap_zx). Conditioned on the electron projections
//! (m_S, m_S'), the nucleus sees an effective field
//!
//!   Z(m_S, m_S') = (m_S a_zx + m_S' ap_zx) x + (m_S a_zz + m_S' ap_zz - w_n) z
//!
//! whose norm sets the local splitting and whose direction defines the
//! dressed nuclear basis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sanity bound on hyperfine magnitudes (Hz).
pub const HYPERFINE_BOUND: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SiteSpec {
    /// Secular hyperfine to spin S, zz component (Hz).
    pub a_zz: f64,
    /// Secular hyperfine to spin S, zx component (Hz).
    pub a_zx: f64,
    /// Secular hyperfine to spin S', zz component (Hz).
    pub ap_zz: f64,
    /// Secular hyperfine to spin S', zx component (Hz).
    pub ap_zx: f64,
}

impl SiteSpec {
    pub fn new(a_zz: f64, a_zx: f64, ap_zz: f64, ap_zx: f64) -> Result<Self> {
        let s = Self { a_zz, a_zx, ap_zz, ap_zx };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("a_zz", self.a_zz),
            ("a_zx", self.a_zx),
            ("ap_zz", self.ap_zz),
            ("ap_zx", self.ap_zx),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidModel(format!("hyperfine {name} is not finite")));
            }
            if v.abs() >= HYPERFINE_BOUND {
                return Err(Error::InvalidModel(format!(
                    "hyperfine {name} = {v:.3e} Hz exceeds the 1 GHz sanity bound"
                )));
            }
        }
        Ok(())
    }
}

/// Nuclear quantization frame for one electron manifold (m_S, m_S').
#[derive(Debug, Clone, Copy)]
pub struct HyperfineFrame {
    /// Spin-S projection: -1, 0, +1.
    pub m_s: i8,
    /// Twice the spin-S' projection: -1 or +1.
    pub m_sp2: i8,
    /// Frame angle from the z axis, atan2 branch in (-pi, pi].
    pub theta: f64,
    /// Norm of the quantization axis (Hz).
    pub delta: f64,
    /// Axis components (x, z) in Hz.
    pub axis: [f64; 2],
}

impl HyperfineFrame {
    pub fn new(site: &SiteSpec, m_s: i8, m_sp2: i8, omega_n: f64) -> Result<Self> {
        assert!((-1..=1).contains(&m_s), "m_S must be -1, 0 or +1");
        assert!(m_sp2 == 1 || m_sp2 == -1, "m_S' must be +-1/2");
        let ms = m_s as f64;
        let msp = m_sp2 as f64 / 2.0;
        let x = ms * site.a_zx + msp * site.ap_zx;
        let z = ms * site.a_zz + msp * site.ap_zz - omega_n;
        let delta = x.hypot(z);
        if delta == 0.0 {
            return Err(Error::DegenerateFrame);
        }
        Ok(Self { m_s, m_sp2, theta: x.atan2(z), delta, axis: [x, z] })
    }

    /// Frame angle folded into the principal branch (-pi/2, pi/2].
    ///
    /// The principal branch keeps the dressed labels continuously connected
    /// to the bare ones, which is the convention under which the analytic
    /// coupling matrix elements hold.
    pub fn theta_principal(&self) -> f64 {
        let t = self.theta;
        if t > std::f64::consts::FRAC_PI_2 {
            t - std::f64::consts::PI
        } else if t <= -std::f64::consts::FRAC_PI_2 {
            t + std::f64::consts::PI
        } else {
            t
        }
    }

    /// Signed splitting: the dressed state adiabatically connected to bare
    /// "up" has energy +signed_delta/2. Equals delta when the axis points
    /// along +z, -delta when it points along -z.
    pub fn signed_delta(&self) -> f64 {
        let tp = self.theta_principal();
        self.axis[1] * tp.cos() + self.axis[0] * tp.sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_4, PI};

    #[test]
    fn zero_hyperfine_frame_points_down() {
        let site = SiteSpec::new(0.0, 0.0, 0.0, 0.0).unwrap();
        let f = HyperfineFrame::new(&site, 0, 1, 1e6).unwrap();
        assert_abs_diff_eq!(f.axis[0], 0.0);
        assert_abs_diff_eq!(f.axis[1], -1e6);
        assert_abs_diff_eq!(f.theta, PI);
        assert_abs_diff_eq!(f.delta, 1e6);
        assert_abs_diff_eq!(f.theta_principal(), 0.0);
        assert_abs_diff_eq!(f.signed_delta(), -1e6);
    }

    #[test]
    fn diagonal_frame_at_45_degrees() {
        // m_S = 0, m_S' = +1/2, ap = 4 MHz both, omega_n = 0
        let site = SiteSpec::new(0.0, 0.0, 4e6, 4e6).unwrap();
        let f = HyperfineFrame::new(&site, 0, 1, 0.0).unwrap();
        assert_abs_diff_eq!(f.theta, FRAC_PI_4, epsilon = 1e-12);
        assert_abs_diff_eq!(f.delta, 2.0 * 2.0_f64.sqrt() * 1e6, epsilon = 1e-3);
        assert_abs_diff_eq!(f.signed_delta(), f.delta, epsilon = 1e-3);
    }

    #[test]
    fn delta_is_axis_norm() {
        let site = SiteSpec::new(13e6, 13e6, 4e6, 4e6).unwrap();
        for (m_s, m_sp2) in [(0, 1), (0, -1), (-1, -1), (1, 1)] {
            let f = HyperfineFrame::new(&site, m_s, m_sp2, 0.55e6).unwrap();
            let [x, z] = f.axis;
            assert_abs_diff_eq!(f.delta * f.delta, x * x + z * z, epsilon = 1.0);
            assert_abs_diff_eq!(f.theta.tan(), x / z, epsilon = 1e-9);
        }
    }

    #[test]
    fn degenerate_frame_rejected() {
        let site = SiteSpec::new(0.0, 0.0, 0.0, 0.0).unwrap();
        assert!(HyperfineFrame::new(&site, 0, 1, 0.0).is_err());
    }

    #[test]
    fn rejects_out_of_bound_hyperfine() {
        assert!(SiteSpec::new(2e9, 0.0, 0.0, 0.0).is_err());
        assert!(SiteSpec::new(f64::NAN, 0.0, 0.0, 0.0).is_err());
    }
}
