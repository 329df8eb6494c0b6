//! Free-space link budget between reader, card and an eavesdropping sniffer.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::units::SPEED_OF_LIGHT;

/// Free-space path loss `(4 pi d / lambda)^2`.
pub fn fspl(d: f64, lambda: f64) -> Result<f64> {
    if !(d > 0.0 && lambda > 0.0) {
        return Err(invalid("FSPL needs positive distance and wavelength"));
    }
    Ok((4.0 * PI * d / lambda).powi(2))
}

/// Linear-unit link parameters: watts, gains as ratios, metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    pub p_t: f64,
    pub g_t: f64,
    pub g_r: f64,
    pub lambda: f64,
    pub sigma_rcs: f64,
    pub d0: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            p_t: 1.0,
            g_t: 4.0,
            g_r: 4.0,
            lambda: SPEED_OF_LIGHT / 915e6,
            sigma_rcs: 0.01,
            d0: 0.5,
            d1: 3.0,
            d2: 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkPowers {
    pub p_card: f64,
    pub eirp_card: f64,
    pub p_cw_d1: f64,
    pub p_bs_d2: f64,
}

impl LinkBudget {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.p_t,
            self.g_t,
            self.g_r,
            self.lambda,
            self.sigma_rcs,
            self.d0,
            self.d1,
            self.d2,
        ];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(invalid("link budget fields must be positive and finite"));
        }
        Ok(())
    }
}

pub fn link_powers(lb: &LinkBudget) -> Result<LinkPowers> {
    lb.validate()?;
    let LinkBudget {
        p_t,
        g_t,
        g_r,
        lambda,
        sigma_rcs,
        d0,
        d1,
        d2,
    } = *lb;
    let four_pi = 4.0 * PI;
    Ok(LinkPowers {
        p_card: p_t * g_t * (lambda / (four_pi * d0)).powi(2),
        eirp_card: p_t * g_t * sigma_rcs / (four_pi * d0 * d0),
        p_cw_d1: p_t * g_t * g_r * (lambda / (four_pi * d1)).powi(2),
        p_bs_d2: p_t * g_t * g_r * sigma_rcs * lambda * lambda / (four_pi.powi(3) * d0 * d0 * d2 * d2),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use libm::log10;

    #[test]
    fn fspl_unit_point_and_square_law() {
        let lambda = 0.33;
        let d = lambda / (4.0 * PI);
        assert!((fspl(d, lambda).unwrap() - 1.0).abs() < 1e-12);
        let r = fspl(2.0, lambda).unwrap() / fspl(1.0, lambda).unwrap();
        assert!((r - 4.0).abs() < 1e-12);
        assert!((10.0 * log10(r) - 6.0206).abs() < 1e-4);
        assert!(fspl(0.0, lambda).is_err());
    }

    #[test]
    fn fspl_matches_db_path() {
        let lambda = SPEED_OF_LIGHT / 915e6;
        let db_direct = 20.0 * log10(4.0 * PI * 1.0 / lambda);
        let db_linear = 10.0 * log10(fspl(1.0, lambda).unwrap());
        assert!((db_direct - db_linear).abs() < 1e-10);
    }

    #[test]
    fn eirp_identity_and_unit_cw_point() {
        let mut lb = LinkBudget::default();
        lb.sigma_rcs = 4.0 * PI * lb.d0 * lb.d0;
        lb.d1 = lb.lambda / (4.0 * PI);
        let p = link_powers(&lb).unwrap();
        assert!((p.eirp_card - lb.p_t * lb.g_t).abs() < 1e-12);
        assert!((p.p_cw_d1 - lb.p_t * lb.g_t * lb.g_r).abs() < 1e-12);
    }

    #[test]
    fn backscatter_power_two_ways() {
        let lb = LinkBudget::default();
        let p = link_powers(&lb).unwrap();
        let via_eirp = p.eirp_card / fspl(lb.d2, lb.lambda).unwrap() * lb.g_r;
        assert!((via_eirp / p.p_bs_d2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn powers_decrease_with_distance() {
        let base = LinkBudget::default();
        let mut prev = (f64::INFINITY, f64::INFINITY, f64::INFINITY);
        for i in 1..40 {
            let d = 0.1 * i as f64;
            let a = link_powers(&LinkBudget { d0: d, ..base }).unwrap().p_bs_d2;
            let b = link_powers(&LinkBudget { d2: d, ..base }).unwrap().p_bs_d2;
            let c = link_powers(&LinkBudget { d1: d, ..base }).unwrap().p_cw_d1;
            assert!(a < prev.0 && b < prev.1 && c < prev.2);
            prev = (a, b, c);
        }
    }

    #[test]
    fn invalid_budget() {
        let lb = LinkBudget {
            d2: 0.0,
            ..LinkBudget::default()
        };
        assert!(link_powers(&lb).is_err());
    }
}
