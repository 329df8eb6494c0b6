//! Link budget input. Powers and gains may be given linearly (W, ratio) or
//! in dBm/dBi under `_dbm`/`_dbi` keys; absent fields take the defaults.

use serde::{Deserialize, Serialize};

use tapauth_core::channel::LinkBudget;
use tapauth_core::units::{db_to_linear, dbm_to_watts};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudgetInput {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_t_dbm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_t: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_t_dbi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g_r_dbi: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma_rcs: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d2: Option<f64>,
}

fn pick(name: &str, linear: Option<f64>, log: Option<f64>, to_linear: fn(f64) -> f64, default: f64) -> Result<f64> {
    match (linear, log) {
        (Some(_), Some(_)) => Err(HarnessError::config(format!(
            "link budget gives {name} both linearly and in dB"
        ))),
        (Some(x), None) => Ok(x),
        (None, Some(db)) => Ok(to_linear(db)),
        (None, None) => Ok(default),
    }
}

impl LinkBudgetInput {
    /// Fields set in `other` replace those in `self`, unit variant included.
    pub fn overlay(&self, other: &LinkBudgetInput) -> LinkBudgetInput {
        fn pair(a: (Option<f64>, Option<f64>), b: (Option<f64>, Option<f64>)) -> (Option<f64>, Option<f64>) {
            if b.0.is_some() || b.1.is_some() {
                b
            } else {
                a
            }
        }
        let (p_t, p_t_dbm) = pair((self.p_t, self.p_t_dbm), (other.p_t, other.p_t_dbm));
        let (g_t, g_t_dbi) = pair((self.g_t, self.g_t_dbi), (other.g_t, other.g_t_dbi));
        let (g_r, g_r_dbi) = pair((self.g_r, self.g_r_dbi), (other.g_r, other.g_r_dbi));
        LinkBudgetInput {
            p_t,
            p_t_dbm,
            g_t,
            g_t_dbi,
            g_r,
            g_r_dbi,
            lambda: other.lambda.or(self.lambda),
            sigma_rcs: other.sigma_rcs.or(self.sigma_rcs),
            d0: other.d0.or(self.d0),
            d1: other.d1.or(self.d1),
            d2: other.d2.or(self.d2),
        }
    }

    /// Linear-unit budget, validated.
    pub fn resolve(&self) -> Result<LinkBudget> {
        let d = LinkBudget::default();
        let lb = LinkBudget {
            p_t: pick("p_t", self.p_t, self.p_t_dbm, dbm_to_watts, d.p_t)?,
            g_t: pick("g_t", self.g_t, self.g_t_dbi, db_to_linear, d.g_t)?,
            g_r: pick("g_r", self.g_r, self.g_r_dbi, db_to_linear, d.g_r)?,
            lambda: self.lambda.unwrap_or(d.lambda),
            sigma_rcs: self.sigma_rcs.unwrap_or(d.sigma_rcs),
            d0: self.d0.unwrap_or(d.d0),
            d1: self.d1.unwrap_or(d.d1),
            d2: self.d2.unwrap_or(d.d2),
        };
        lb.validate()?;
        Ok(lb)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_is_the_default_budget() {
        assert_eq!(LinkBudgetInput::default().resolve().unwrap(), LinkBudget::default());
        assert_eq!(serde_json::to_string(&LinkBudgetInput::default()).unwrap(), "{}");
    }

    #[test]
    fn log_units_convert_on_ingest() {
        let i: LinkBudgetInput =
            serde_json::from_str(r#"{"p_t_dbm": 30, "g_t_dbi": 6, "g_r_dbi": 0, "d1": 2}"#).unwrap();
        let lb = i.resolve().unwrap();
        assert!((lb.p_t - 1.0).abs() < 1e-12);
        assert!((lb.g_t - 3.981_071_705_534_972).abs() < 1e-12);
        assert!((lb.g_r - 1.0).abs() < 1e-12);
        assert_eq!(lb.d1, 2.0);
        assert_eq!(lb.d2, LinkBudget::default().d2);
    }

    #[test]
    fn both_units_or_bad_values_rejected() {
        let i = LinkBudgetInput {
            g_r: Some(2.0),
            g_r_dbi: Some(3.0),
            ..Default::default()
        };
        assert!(matches!(i.resolve(), Err(HarnessError::Config(_))));
        let i = LinkBudgetInput {
            d2: Some(0.0),
            ..Default::default()
        };
        assert!(matches!(i.resolve(), Err(HarnessError::Config(_))));
        assert!(serde_json::from_str::<LinkBudgetInput>(r#"{"p_t_dBm": 30}"#).is_err());
    }

    #[test]
    fn overlay_replaces_unit_variants() {
        let base = LinkBudgetInput {
            p_t: Some(2.0),
            d0: Some(1.0),
            ..Default::default()
        };
        let top = LinkBudgetInput {
            p_t_dbm: Some(20.0),
            ..Default::default()
        };
        let m = base.overlay(&top);
        assert_eq!((m.p_t, m.p_t_dbm, m.d0), (None, Some(20.0), Some(1.0)));
        assert!((m.resolve().unwrap().p_t - 0.1).abs() < 1e-12);
    }
}
