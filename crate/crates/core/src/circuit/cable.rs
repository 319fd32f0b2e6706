use crate::{Error, Result};

/// Per-metre parameters of a lossy coaxial line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineParameters {
    pub r_per_m: f64,
    pub l_per_m: f64,
    pub c_per_m: f64,
    pub g_per_m: f64,
}

/// Typical RG58 datasheet values.
pub const RG58: LineParameters = LineParameters {
    r_per_m: 0.0365,
    l_per_m: 250e-9,
    c_per_m: 100e-12,
    g_per_m: 0.0,
};

/// Bandwidth at which [`build_cable_model`] checks segment granularity.
const REFERENCE_BANDWIDTH_HZ: f64 = 250.0;

/// Minimum ratio of per-segment RC corner frequency to signal bandwidth.
const MIN_CORNER_RATIO: f64 = 100.0;

/// A coaxial cable as a ladder of identical π sections.
///
/// Each segment carries its series `R`/`L` between two nodes and half of
/// its shunt `C`/`G` on either side, so a line of `n` segments has `n + 1`
/// nodes, node 0 at Alice's end and node `n` at Bob's.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CableModel {
    pub r_per_m: f64,
    pub l_per_m: f64,
    pub c_per_m: f64,
    pub g_per_m: f64,
    pub length_m: f64,
    pub n_segments: usize,
    /// Ideal unity-gain buffer driving the shield: the shunt capacitive
    /// current is cancelled, series R and L remain.
    pub killer_enabled: bool,
}

/// RG58 ladder of the given length.
pub fn build_cable_model(length_m: f64, n_segments: usize, killer: bool) -> Result<CableModel> {
    let model = CableModel::new(RG58, length_m, n_segments, killer)?;
    model.check_granularity(REFERENCE_BANDWIDTH_HZ)?;
    Ok(model)
}

impl CableModel {
    pub fn new(
        line: LineParameters,
        length_m: f64,
        n_segments: usize,
        killer_enabled: bool,
    ) -> Result<Self> {
        if !(length_m.is_finite() && length_m > 0.0) {
            return Err(Error::config("cable_length_m", "must be positive"));
        }
        if n_segments == 0 {
            return Err(Error::config("n_segments", "must be at least 1"));
        }
        for (key, v) in [
            ("r_per_m", line.r_per_m),
            ("l_per_m", line.l_per_m),
            ("c_per_m", line.c_per_m),
            ("g_per_m", line.g_per_m),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::config(key, "must be finite and non-negative"));
            }
        }
        if line.r_per_m == 0.0 && line.l_per_m == 0.0 {
            return Err(Error::config(
                "r_per_m",
                "series resistance and inductance cannot both be zero",
            ));
        }
        Ok(Self {
            r_per_m: line.r_per_m,
            l_per_m: line.l_per_m,
            c_per_m: line.c_per_m,
            g_per_m: line.g_per_m,
            length_m,
            n_segments,
            killer_enabled,
        })
    }

    pub fn line(&self) -> LineParameters {
        LineParameters {
            r_per_m: self.r_per_m,
            l_per_m: self.l_per_m,
            c_per_m: self.c_per_m,
            g_per_m: self.g_per_m,
        }
    }

    /// Errors when a segment's RC corner sits below 100× `bandwidth_hz`.
    pub fn check_granularity(&self, bandwidth_hz: f64) -> Result<()> {
        let corner = self.segment_rc_corner_hz();
        if corner < MIN_CORNER_RATIO * bandwidth_hz {
            return Err(Error::config(
                "n_segments",
                format!(
                    "segment RC corner {corner:.3e} Hz is below {MIN_CORNER_RATIO} x {bandwidth_hz} Hz; use more segments"
                ),
            ));
        }
        Ok(())
    }

    /// `1/(2π R_seg C_seg)`; infinite for a lossless or capacitance-free line.
    pub fn segment_rc_corner_hz(&self) -> f64 {
        let rc = self.segment_resistance() * self.segment_capacitance();
        if rc == 0.0 {
            f64::INFINITY
        } else {
            1.0 / (2.0 * std::f64::consts::PI * rc)
        }
    }

    pub fn segment_length(&self) -> f64 {
        self.length_m / self.n_segments as f64
    }

    pub fn segment_resistance(&self) -> f64 {
        self.r_per_m * self.segment_length()
    }

    pub fn segment_inductance(&self) -> f64 {
        self.l_per_m * self.segment_length()
    }

    pub fn segment_capacitance(&self) -> f64 {
        self.c_per_m * self.segment_length()
    }

    pub fn segment_conductance(&self) -> f64 {
        self.g_per_m * self.segment_length()
    }

    pub fn total_series_resistance(&self) -> f64 {
        self.r_per_m * self.length_m
    }

    pub fn total_shunt_capacitance(&self) -> f64 {
        self.c_per_m * self.length_m
    }

    pub fn node_count(&self) -> usize {
        self.n_segments + 1
    }

    /// Shunt capacitance seen by the solver at `node` (zero with the killer).
    pub fn node_capacitance(&self, node: usize) -> f64 {
        if self.killer_enabled {
            0.0
        } else {
            self.segment_capacitance() * self.end_weight(node)
        }
    }

    pub fn node_conductance(&self, node: usize) -> f64 {
        self.segment_conductance() * self.end_weight(node)
    }

    fn end_weight(&self, node: usize) -> f64 {
        if node == 0 || node == self.n_segments {
            0.5
        } else {
            1.0
        }
    }

    /// Same ladder with every per-unit parameter scaled by `1 + rel_error`;
    /// used to study a defender whose cable model is slightly off.
    pub fn perturbed(&self, rel_error: f64) -> Result<Self> {
        let f = 1.0 + rel_error;
        let line = LineParameters {
            r_per_m: self.r_per_m * f,
            l_per_m: self.l_per_m * f,
            c_per_m: self.c_per_m * f,
            g_per_m: self.g_per_m * f,
        };
        Self::new(line, self.length_m, self.n_segments, self.killer_enabled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals_for_1000_m() {
        let m = build_cable_model(1000.0, 10, false).unwrap();
        assert!((m.total_shunt_capacitance() - 100e-9).abs() < 1e-20);
        assert!((m.total_series_resistance() - 36.5).abs() < 1e-12);
        let sum: f64 = (0..m.node_count()).map(|j| m.node_capacitance(j)).sum();
        assert!((sum - 100e-9).abs() < 1e-20);
    }

    #[test]
    fn totals_for_100_m() {
        let m = build_cable_model(100.0, 10, false).unwrap();
        assert!((m.total_shunt_capacitance() - 10e-9).abs() < 1e-21);
    }

    #[test]
    fn killer_removes_shunt_capacitance_only() {
        let m = build_cable_model(1000.0, 10, true).unwrap();
        assert!((0..m.node_count()).all(|j| m.node_capacitance(j) == 0.0));
        assert!((m.total_series_resistance() - 36.5).abs() < 1e-12);
    }

    #[test]
    fn granularity_is_enforced() {
        let m = build_cable_model(1000.0, 10, false).unwrap();
        assert!(m.segment_rc_corner_hz() > 100.0 * 250.0);
        // A very resistive line in one segment fails at 250 Hz.
        let lossy = LineParameters {
            r_per_m: 1e3,
            ..RG58
        };
        let m = CableModel::new(lossy, 1000.0, 1, false).unwrap();
        assert!(m.check_granularity(250.0).is_err());
    }

    #[test]
    fn rejects_bad_geometry() {
        assert!(build_cable_model(0.0, 10, false).is_err());
        assert!(build_cable_model(100.0, 0, false).is_err());
        let lossless_no_l = LineParameters {
            r_per_m: 0.0,
            l_per_m: 0.0,
            ..RG58
        };
        assert!(CableModel::new(lossless_no_l, 1.0, 1, false).is_err());
    }
}
