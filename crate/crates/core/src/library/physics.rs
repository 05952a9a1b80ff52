//! Closed-form power and mass-flow relations used by the catalog components.

use super::fluid::FluidProps;
use super::LibraryError;
use crate::graph::LookupTable;
use nalgebra::Matrix2;

/// Advective heat transfer `mdot * cp * T_tail`. Flow must follow the edge
/// orientation.
pub fn advection_power(mdot: f64, cp: f64, t_tail: f64) -> Result<f64, LibraryError> {
    if mdot < 0.0 {
        return Err(LibraryError::ReverseFlow(format!("advection with negative mass flow {mdot}")));
    }
    Ok(mdot * cp * t_tail)
}

pub fn convection_power(h_a: f64, t_tail: f64, t_head: f64) -> f64 {
    h_a * (t_tail - t_head)
}

/// Hydraulic duct flow driven by the pressure drop and elevation head.
/// `k_total` is the combined loss coefficient `f L/D + K_L`.
pub fn duct_mdot(
    rho: f64,
    area: f64,
    p_tail: f64,
    p_head: f64,
    dh: f64,
    k_total: f64,
    g: f64,
) -> Result<f64, LibraryError> {
    let radicand = 2.0 * (p_tail - p_head + rho * g * dh) / (rho * k_total);
    if radicand < 0.0 {
        return Err(LibraryError::ReverseFlow(format!(
            "duct pressure drop {} Pa opposes the edge orientation",
            p_tail - p_head
        )));
    }
    Ok(rho * area * radicand.sqrt())
}

/// Centrifugal pump flow. The head map is indexed by speed and pressure
/// rise `p_head - p_tail`; lookups outside the grid clamp to the boundary
/// and are reported in the second return value.
pub fn pump_mdot(
    rho: f64,
    area: f64,
    map: &LookupTable,
    omega: f64,
    p_tail: f64,
    p_head: f64,
    g: f64,
) -> Result<(f64, bool), LibraryError> {
    let rise = p_head - p_tail;
    let (head, clamped) = map.lookup(&[omega, rise]);
    let radicand = 2.0 * g * (head - rise / (rho * g));
    if radicand < 0.0 {
        return Err(LibraryError::ReverseFlow(format!(
            "pump stalled: head {head} m below pressure rise {rise} Pa"
        )));
    }
    Ok((rho * area * radicand.sqrt(), clamped))
}

/// Two-phase control volume capacitance block ordered `(h, p)`:
///
/// ```text
/// [ (ρ_h h + ρ) V   (ρ_p h - 1) V ]
/// [  ρ_h V           ρ_p V        ]
/// ```
pub fn two_phase_capacitance(p: f64, h: f64, volume: f64, props: &dyn FluidProps) -> Result<Matrix2<f64>, LibraryError> {
    let s = props.state(p, h)?;
    let phi1 = (s.drho_dp * h - 1.0) * volume;
    let phi2 = (s.drho_dh * h + s.rho) * volume;
    let c = Matrix2::new(phi2, phi1, s.drho_dh * volume, s.drho_dp * volume);
    let scale = c.iter().map(|v| v.abs()).fold(0.0, f64::max).powi(2);
    let det = c.determinant();
    if scale == 0.0 || det.abs() < 1e-12 * scale {
        return Err(LibraryError::SingularCapacitance(format!(
            "two-phase capacitance is singular at p={p}, h={h} (det {det:e})"
        )));
    }
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::fluid::{ConstantDensity, SyntheticRefrigerant};

    #[test]
    fn advection_examples() {
        assert_eq!(advection_power(0.5, 3300.0, 300.0).unwrap(), 495000.0);
        assert_eq!(advection_power(0.0, 3300.0, 300.0).unwrap(), 0.0);
        assert_eq!(advection_power(1.0, 1.0, 1.0).unwrap(), 1.0);
        assert!(advection_power(-0.1, 1.0, 1.0).is_err());
    }

    #[test]
    fn convection_examples() {
        assert_eq!(convection_power(10.0, 350.0, 300.0), 500.0);
        assert_eq!(convection_power(10.0, 300.0, 300.0), 0.0);
        assert_eq!(convection_power(0.0, 350.0, 300.0), 0.0);
    }

    #[test]
    fn duct_examples() {
        let m = duct_mdot(1000.0, 1e-4, 1.1e5, 1.0e5, 0.0, 2.0, 9.81).unwrap();
        assert!((m - 0.1 * 10.0f64.sqrt()).abs() < 1e-12);
        assert!((m - 0.31623).abs() < 1e-5);
        assert_eq!(duct_mdot(1000.0, 1e-4, 1e5, 1e5, 0.0, 2.0, 9.81).unwrap(), 0.0);
        assert!(duct_mdot(1000.0, 1e-4, 1e5, 1.1e5, 0.0, 2.0, 9.81).is_err());
    }

    #[test]
    fn pump_examples() {
        let g = 9.81;
        let map = LookupTable::two_d(vec![0.0, 400.0], vec![-1e5, 1e5], vec![10.0; 4]);
        let rise = 5.0 * 1000.0 * g;
        let (m, clamped) = pump_mdot(1000.0, 1e-4, &map, 300.0, 0.0, rise, g).unwrap();
        assert!((m - 0.1 * (2.0 * g * 5.0f64).sqrt()).abs() < 1e-12);
        assert!((m - 0.99045).abs() < 1e-5);
        assert!(!clamped);
        let (m, _) = pump_mdot(1000.0, 1e-4, &map, 300.0, 0.0, 10.0 * 1000.0 * g, g).unwrap();
        assert!(m.abs() < 1e-6);
        assert!(pump_mdot(1000.0, 1e-4, &map, 900.0, 0.0, rise, g).unwrap().1);
    }

    #[test]
    fn capacitance_example_values() {
        let props = SyntheticRefrigerant::with_density(500.0, 1e-5, -1e-3);
        let c = two_phase_capacitance(4e5, 2.5e5, 1e-3, &props).unwrap();
        let rho = 500.0 + 1e-5 * 4e5 - 1e-3 * 2.5e5;
        assert!((c[(0, 1)] - 1.5e-3).abs() < 1e-15);
        assert!((c[(0, 0)] - (-1e-3 * 2.5e5 + rho) * 1e-3).abs() < 1e-15);
        assert!((c[(1, 0)] + 1e-6).abs() < 1e-18);
        assert!((c[(1, 1)] - 1e-8).abs() < 1e-20);
    }

    #[test]
    fn degenerate_capacitance_is_rejected() {
        let props = ConstantDensity { rho: 1000.0 };
        assert!(matches!(
            two_phase_capacitance(4e5, 2.5e5, 1e-3, &props),
            Err(LibraryError::SingularCapacitance(_))
        ));
        let props = SyntheticRefrigerant::default();
        assert!(two_phase_capacitance(4e5, 2.5e5, 0.0, &props).is_err());
    }
}
