//! Fluid property models for two-phase components.

use super::LibraryError;
use crate::graph::LookupTable;

/// Thermodynamic state at a `(p, h)` point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluidState {
    pub rho: f64,
    /// ∂ρ/∂p at constant h.
    pub drho_dp: f64,
    /// ∂ρ/∂h at constant p.
    pub drho_dh: f64,
    pub temperature: f64,
    pub quality: f64,
}

pub trait FluidProps: Send + Sync {
    fn state(&self, p: f64, h: f64) -> Result<FluidState, LibraryError>;
}

/// Analytic stand-in for refrigerant property tables.
///
/// Density is affine, `ρ = a + b p + c h`, so its derivatives are exact
/// constants. Temperature follows a saturation line `T_sat(p)` that is
/// linear in pressure, with constant specific heats on the liquid and vapor
/// sides of the saturated enthalpies `h_l`, `h_v`. Quality is
/// `(h - h_l) / (h_v - h_l)` clipped to `[0, 1]`.
///
/// The documented domain is `p ∈ [1e5, 1e6]` Pa, `h ∈ [1e5, 5e5]` J/kg.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticRefrigerant {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub t_sat_ref: f64,
    pub p_ref: f64,
    pub dtsat_dp: f64,
    pub h_l: f64,
    pub h_v: f64,
    pub cp_l: f64,
    pub cp_v: f64,
    pub p_range: (f64, f64),
    pub h_range: (f64, f64),
}

impl Default for SyntheticRefrigerant {
    fn default() -> Self {
        SyntheticRefrigerant {
            a: 1200.0,
            b: 1e-5,
            c: -1e-3,
            t_sat_ref: 250.0,
            p_ref: 1e5,
            dtsat_dp: 1e-4,
            h_l: 2e5,
            h_v: 4e5,
            cp_l: 1500.0,
            cp_v: 1000.0,
            p_range: (1e5, 1e6),
            h_range: (1e5, 5e5),
        }
    }
}

impl SyntheticRefrigerant {
    pub fn with_density(a: f64, b: f64, c: f64) -> Self {
        SyntheticRefrigerant { a, b, c, ..Default::default() }
    }

    pub fn in_domain(&self, p: f64, h: f64) -> bool {
        (self.p_range.0..=self.p_range.1).contains(&p) && (self.h_range.0..=self.h_range.1).contains(&h)
    }

    pub fn saturation_temperature(&self, p: f64) -> f64 {
        self.t_sat_ref + self.dtsat_dp * (p - self.p_ref)
    }

    /// Temperature without the domain check.
    pub fn temperature(&self, p: f64, h: f64) -> f64 {
        let t_sat = self.saturation_temperature(p);
        if h < self.h_l {
            t_sat - (self.h_l - h) / self.cp_l
        } else if h > self.h_v {
            t_sat + (h - self.h_v) / self.cp_v
        } else {
            t_sat
        }
    }

    pub fn quality(&self, h: f64) -> f64 {
        ((h - self.h_l) / (self.h_v - self.h_l)).clamp(0.0, 1.0)
    }

    /// `T(p, h)` as a 2-D table over the domain. The enthalpy grid includes
    /// both saturation points, so bilinear interpolation reproduces the
    /// model exactly.
    pub fn temperature_table(&self) -> LookupTable {
        let p_axis = vec![self.p_range.0, self.p_range.1];
        let h_axis = vec![self.h_range.0, self.h_l, self.h_v, self.h_range.1];
        LookupTable::sample_2d(p_axis, h_axis, |p, h| self.temperature(p, h))
    }
}

impl FluidProps for SyntheticRefrigerant {
    fn state(&self, p: f64, h: f64) -> Result<FluidState, LibraryError> {
        if !self.in_domain(p, h) {
            return Err(LibraryError::OutOfDomain(format!(
                "(p={p}, h={h}) outside p∈[{}, {}], h∈[{}, {}]",
                self.p_range.0, self.p_range.1, self.h_range.0, self.h_range.1
            )));
        }
        Ok(FluidState {
            rho: self.a + self.b * p + self.c * h,
            drho_dp: self.b,
            drho_dh: self.c,
            temperature: self.temperature(p, h),
            quality: self.quality(h),
        })
    }
}

/// Incompressible fluid. Produces a singular two-phase capacitance and is
/// only useful as a degenerate reference.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstantDensity {
    pub rho: f64,
}

impl FluidProps for ConstantDensity {
    fn state(&self, _p: f64, _h: f64) -> Result<FluidState, LibraryError> {
        Ok(FluidState { rho: self.rho, drho_dp: 0.0, drho_dh: 0.0, temperature: f64::NAN, quality: 0.0 })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivatives_match_finite_differences() {
        let f = SyntheticRefrigerant::default();
        for &(p, h) in &[(2e5, 1.5e5), (5e5, 3e5), (9e5, 4.8e5)] {
            let s = f.state(p, h).unwrap();
            let (dp, dh) = (1e-6 * p, 1e-6 * h);
            let fd_p = (f.state(p + dp, h).unwrap().rho - f.state(p - dp, h).unwrap().rho) / (2.0 * dp);
            let fd_h = (f.state(p, h + dh).unwrap().rho - f.state(p, h - dh).unwrap().rho) / (2.0 * dh);
            assert!(((fd_p - s.drho_dp) / s.drho_dp).abs() < 1e-6);
            assert!(((fd_h - s.drho_dh) / s.drho_dh).abs() < 1e-6);
        }
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let f = SyntheticRefrigerant::default();
        assert!(matches!(f.state(5e4, 2e5), Err(LibraryError::OutOfDomain(_))));
        assert!(f.state(2e5, 6e5).is_err());
    }

    #[test]
    fn temperature_table_is_exact() {
        let f = SyntheticRefrigerant::default();
        let t = f.temperature_table();
        for &(p, h) in &[(1.3e5, 1.2e5), (4e5, 2.5e5), (8e5, 4.5e5)] {
            assert!((t.lookup(&[p, h]).0 - f.temperature(p, h)).abs() < 1e-9);
        }
        assert_eq!(f.quality(3e5), 0.5);
    }
}
