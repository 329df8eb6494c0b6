//! Two-sniffer attack: one sniffer decodes the reader's CW near the reader,
//! another must hear the card's backscatter without the CW. The attack is
//! possible only where the CW is still decodable and the backscatter is
//! already below detection.

use core::f64::consts::PI;

#[allow(unused_imports)]
use num_traits::Float;
use serde::{Deserialize, Serialize};

use crate::channel::{link_powers, LinkBudget};
use crate::error::{invalid, Result};
use crate::units::{dbm_to_watts, watts_to_dbm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SnifferModel {
    /// Weakest detectable signal, dBm.
    pub tau_rx_dbm: f64,
    /// Weakest decodable signal, dBm.
    pub tau_dec_dbm: f64,
}

impl Default for SnifferModel {
    fn default() -> Self {
        Self {
            tau_rx_dbm: -81.21,
            tau_dec_dbm: -55.98,
        }
    }
}

impl SnifferModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_dec_dbm > self.tau_rx_dbm) {
            return Err(invalid("decoding threshold must exceed the detection threshold"));
        }
        Ok(())
    }

    pub fn threshold_gap_db(&self) -> f64 {
        self.tau_dec_dbm - self.tau_rx_dbm
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Feasibility {
    pub d1_max: f64,
    pub d2_min: f64,
    pub feasible: bool,
    pub margin_db: f64,
}

/// Vulnerable-region bounds for a forward-computed link budget, under the
/// collinear reader-card-sniffer layout.
pub fn advanced_feasibility(lb: &LinkBudget, sniffer: &SnifferModel) -> Result<Feasibility> {
    sniffer.validate()?;
    let p = link_powers(lb)?;
    let four_pi = 4.0 * PI;
    let tau_dec = dbm_to_watts(sniffer.tau_dec_dbm);
    let tau_rx = dbm_to_watts(sniffer.tau_rx_dbm);
    let gain = lb.p_t * lb.g_t * lb.g_r;
    let d1_max = (gain / tau_dec).sqrt() * lb.lambda / four_pi;
    let d2_min = (gain * lb.sigma_rcs * lb.lambda * lb.lambda / (tau_rx * four_pi.powi(3) * lb.d0 * lb.d0)).sqrt();
    let gap = watts_to_dbm(p.p_cw_d1) - watts_to_dbm(p.p_bs_d2);
    Ok(Feasibility {
        d1_max,
        d2_min,
        feasible: lb.d0 + d2_min <= d1_max,
        margin_db: gap - sniffer.threshold_gap_db(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasuredFeasibility {
    pub d0_m: f64,
    pub p_cw_dbm: f64,
    pub p_bs_dbm: f64,
    pub gap_db: f64,
    pub threshold_db: f64,
    pub feasible: bool,
}

impl MeasuredFeasibility {
    pub fn margin_db(&self) -> f64 {
        self.gap_db - self.threshold_db
    }
}

/// Decision rule on measured powers: the attack needs
/// `P_CW - P_BS >= tau_dec - tau_rx`.
pub fn feasibility_from_measurements(
    d0_m: f64,
    p_cw_dbm: f64,
    p_bs_dbm: f64,
    sniffer: &SnifferModel,
) -> MeasuredFeasibility {
    let gap_db = p_cw_dbm - p_bs_dbm;
    let threshold_db = sniffer.threshold_gap_db();
    MeasuredFeasibility {
        d0_m,
        p_cw_dbm,
        p_bs_dbm,
        gap_db,
        threshold_db,
        feasible: gap_db >= threshold_db,
    }
}

/// One measurement row: card distance, the two sniffer powers and the
/// printed power gap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub d0_in: f64,
    pub p_cw_dbm: f64,
    pub p_bs_dbm: f64,
    /// The gap as published. For three rows it differs from
    /// `p_cw_dbm - p_bs_dbm` by 0.4 to 1.8 dB.
    pub gap_db: f64,
}

impl TableRow {
    pub fn d0_m(&self) -> f64 {
        self.d0_in * 0.0254
    }

    /// Decision on the published gap.
    pub fn decide_published(&self, sniffer: &SnifferModel) -> MeasuredFeasibility {
        let threshold_db = sniffer.threshold_gap_db();
        MeasuredFeasibility {
            d0_m: self.d0_m(),
            p_cw_dbm: self.p_cw_dbm,
            p_bs_dbm: self.p_bs_dbm,
            gap_db: self.gap_db,
            threshold_db,
            feasible: self.gap_db >= threshold_db,
        }
    }

    /// Decision on the gap recomputed from the two powers.
    pub fn decide_from_powers(&self, sniffer: &SnifferModel) -> MeasuredFeasibility {
        feasibility_from_measurements(self.d0_m(), self.p_cw_dbm, self.p_bs_dbm, sniffer)
    }
}

/// Sniffer power measurements at 10, 40, 80 and 120 inches with the second
/// sniffer 40 inches past the card.
pub const TABLE_IV: [TableRow; 4] = [
    TableRow {
        d0_in: 10.0,
        p_cw_dbm: -3.30,
        p_bs_dbm: -27.91,
        gap_db: 24.61,
    },
    TableRow {
        d0_in: 40.0,
        p_cw_dbm: -7.98,
        p_bs_dbm: -27.00,
        gap_db: 20.78,
    },
    TableRow {
        d0_in: 80.0,
        p_cw_dbm: -10.15,
        p_bs_dbm: -24.02,
        gap_db: 14.53,
    },
    TableRow {
        d0_in: 120.0,
        p_cw_dbm: -14.52,
        p_bs_dbm: -26.43,
        gap_db: 12.29,
    },
];
