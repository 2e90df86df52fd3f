//! Power flows between PV, load, battery and grid for one hour.

use serde::{Deserialize, Serialize};

/// All values in kW, each ≥ 0. Battery flows are measured on the AC side:
/// `*_es` is power into the battery inverter, `es_*` is power delivered by it.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Flows {
    pub pv_ld: f64,
    pub pv_es: f64,
    pub pv_gr: f64,
    pub gr_ld: f64,
    pub gr_es: f64,
    pub es_ld: f64,
    pub es_gr: f64,
    pub curtail: f64,
    pub shed: f64,
}

impl Flows {
    pub fn import(&self) -> f64 {
        self.gr_ld + self.gr_es
    }

    pub fn export(&self) -> f64 {
        self.pv_gr + self.es_gr
    }

    pub fn charge(&self) -> f64 {
        self.pv_es + self.gr_es
    }

    pub fn discharge(&self) -> f64 {
        self.es_ld + self.es_gr
    }

    /// Net battery power, positive when charging.
    pub fn net_battery(&self) -> f64 {
        self.charge() - self.discharge()
    }

    /// `pv + import + discharge + shed − load − export − charge − curtail`.
    /// Shed is unserved load, so it sits on the supply side.
    pub fn balance_residual(&self, pv: f64, load: f64) -> f64 {
        pv + self.import() + self.discharge() + self.shed - load - self.export() - self.charge() - self.curtail
    }

    /// Cost of the hour at the given prices, €.
    pub fn cost(&self, tou_imp: f64, tou_exp: f64, delta_t: f64) -> f64 {
        delta_t * (self.import() * tou_imp - self.export() * tou_exp)
    }

    pub fn as_array(&self) -> [f64; 9] {
        [
            self.pv_ld,
            self.pv_es,
            self.pv_gr,
            self.gr_ld,
            self.gr_es,
            self.es_ld,
            self.es_gr,
            self.curtail,
            self.shed,
        ]
    }

    pub fn from_array(a: [f64; 9]) -> Self {
        Self {
            pv_ld: a[0],
            pv_es: a[1],
            pv_gr: a[2],
            gr_ld: a[3],
            gr_es: a[4],
            es_ld: a[5],
            es_gr: a[6],
            curtail: a[7],
            shed: a[8],
        }
    }

    pub const NAMES: [&'static str; 9] = [
        "pv_ld", "pv_es", "pv_gr", "gr_ld", "gr_es", "es_ld", "es_gr", "curtail", "shed",
    ];
}
