//! Channel model and user drops.
//!
//! Gains follow a log-distance path loss without fading and are normalized by
//! the receiver noise power, giving the per-mW SNR `gamma`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::UserRecord;
use crate::error::{invalid, Result};
use crate::model::UserClass;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    /// Composite gain constant `G0` in dB; path loss is `-G0 + 10 n log10(d)`.
    pub g0_db: f64,
    pub n_exp: f64,
    pub n0_dbm_hz: f64,
    pub nf_db: f64,
    pub bandwidth_hz: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            g0_db: -70.0,
            n_exp: 2.0,
            n0_dbm_hz: -170.0,
            nf_db: 10.0,
            bandwidth_hz: 1e5,
        }
    }
}

impl ChannelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.n_exp.is_finite() && self.n_exp > 0.0) {
            return Err(invalid(format!("path-loss exponent must be positive, got {}", self.n_exp)));
        }
        if !(self.bandwidth_hz.is_finite() && self.bandwidth_hz > 0.0) {
            return Err(invalid(format!("bandwidth must be positive, got {}", self.bandwidth_hz)));
        }
        if ![self.g0_db, self.n0_dbm_hz, self.nf_db].iter().all(|v| v.is_finite()) {
            return Err(invalid("channel constants must be finite"));
        }
        Ok(())
    }

    pub fn path_loss_db(&self, d: f64) -> f64 {
        -self.g0_db + 10.0 * self.n_exp * d.log10()
    }

    pub fn noise_dbm(&self) -> f64 {
        self.n0_dbm_hz + self.nf_db + 10.0 * self.bandwidth_hz.log10()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Default for CellGeometry {
    fn default() -> Self {
        Self {
            r_inner: 10.0,
            r_outer: 100.0,
        }
    }
}

impl CellGeometry {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_inner > 0.0 && self.r_inner < self.r_outer && self.r_outer.is_finite()) {
            return Err(invalid(format!(
                "need 0 < r_inner < r_outer, got {} and {}",
                self.r_inner, self.r_outer
            )));
        }
        Ok(())
    }
}

/// Noise-normalized channel gain (1/mW) of a user at distance `d` meters.
pub fn gain_from_distance(d: f64, cp: &ChannelParams) -> Result<f64> {
    if !(d.is_finite() && d > 0.0) {
        return Err(invalid(format!("distance must be positive, got {d}")));
    }
    cp.validate()?;
    // Received SNR per mW in dB, converted once.
    let snr_db = -cp.path_loss_db(d) - cp.noise_dbm();
    Ok(10f64.powf(snr_db / 10.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioUser {
    pub id: usize,
    pub class: UserClass,
    pub distance_m: f64,
    pub gain: f64,
}

impl ScenarioUser {
    pub fn record(&self) -> UserRecord {
        UserRecord {
            id: self.id,
            class: self.class,
            gain: self.gain,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scenario {
    pub users: Vec<ScenarioUser>,
}

impl Scenario {
    pub fn records(&self) -> Vec<UserRecord> {
        self.users.iter().map(ScenarioUser::record).collect()
    }

    pub fn records_of(&self, class: UserClass) -> Vec<UserRecord> {
        self.users.iter().filter(|u| u.class == class).map(ScenarioUser::record).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let mut ids: Vec<usize> = self.users.iter().map(|u| u.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(invalid("duplicate user ids"));
        }
        if let Some(u) = self.users.iter().find(|u| !(u.gain.is_finite() && u.gain > 0.0)) {
            return Err(invalid(format!("user {} has a non-positive gain", u.id)));
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| invalid(format!("bad scenario JSON: {e}")))?;
        s.validate()?;
        Ok(s)
    }
}

/// Ten users on a line, user `k` at `10 (11 - k)` m with gain `10000 / d^2`;
/// `classes[k - 1]` is the class of user `k`, whose id is `k`.
pub fn deterministic_scenario(classes: [UserClass; 10]) -> Scenario {
    let users = (1..=10)
        .map(|k| {
            let d = 10.0 * (11 - k) as f64;
            ScenarioUser {
                id: k,
                class: classes[k - 1],
                distance_m: d,
                gain: 10_000.0 / (d * d),
            }
        })
        .collect();
    Scenario { users }
}

/// Users dropped uniformly over the annulus area. IoT users get ids
/// `0..n_iot`, eMBB users the following ids.
pub fn random_scenario(n_iot: usize, n_embb: usize, geom: &CellGeometry, cp: &ChannelParams, seed: u64) -> Result<Scenario> {
    geom.validate()?;
    cp.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (ri2, ro2) = (geom.r_inner * geom.r_inner, geom.r_outer * geom.r_outer);
    let classes = std::iter::repeat_n(UserClass::Iot, n_iot).chain(std::iter::repeat_n(UserClass::Embb, n_embb));
    let mut users = Vec::with_capacity(n_iot + n_embb);
    for (id, class) in classes.enumerate() {
        // inverse CDF of the radial law with density proportional to d
        let u: f64 = rng.gen();
        let d = (ri2 + u * (ro2 - ri2)).sqrt();
        users.push(ScenarioUser {
            id,
            class,
            distance_m: d,
            gain: gain_from_distance(d, cp)?,
        });
    }
    Ok(Scenario { users })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_distances() {
        let cp = ChannelParams::default();
        assert_eq!(cp.path_loss_db(100.0), 110.0);
        assert!((cp.noise_dbm() + 110.0).abs() < 1e-12);
        assert!((gain_from_distance(100.0, &cp).unwrap() - 1.0).abs() < 1e-12);
        assert!((gain_from_distance(10.0, &cp).unwrap() - 100.0).abs() < 1e-10);
    }

    #[test]
    fn independent_db_chain() {
        // linear-domain recomputation: path gain and noise power in mW
        let cp = ChannelParams::default();
        for d in [12.5, 37.0, 99.0] {
            let path_gain = 10f64.powf(-7.0) / (d * d);
            let noise_mw = 10f64.powf(-17.0) * 10f64.powf(1.0) * 1e5;
            let expected = path_gain / noise_mw;
            let got = gain_from_distance(d, &cp).unwrap();
            assert!(((got - expected) / expected).abs() < 1e-12);
        }
    }

    #[test]
    fn doubling_distance_quarters_gain() {
        let cp = ChannelParams::default();
        let a = gain_from_distance(20.0, &cp).unwrap();
        let b = gain_from_distance(40.0, &cp).unwrap();
        assert!((a / b - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_distance() {
        assert!(gain_from_distance(0.0, &ChannelParams::default()).is_err());
        assert!(gain_from_distance(-3.0, &ChannelParams::default()).is_err());
    }

    #[test]
    fn deterministic_line() {
        let s = deterministic_scenario([UserClass::Embb; 10]);
        assert_eq!(s.users[9].distance_m, 10.0);
        assert_eq!(s.users[9].gain, 100.0);
        assert_eq!(s.users[0].distance_m, 100.0);
        assert_eq!(s.users[0].gain, 1.0);
        assert_eq!(s.users[4].distance_m, 60.0);
        assert!((s.users[4].gain - 2.777_777_777_777_778).abs() < 1e-12);
        assert!(s.users.windows(2).all(|w| w[1].gain > w[0].gain));
    }

    #[test]
    fn random_drops() {
        let (g, cp) = (CellGeometry::default(), ChannelParams::default());
        assert_eq!(random_scenario(3, 4, &g, &cp, 9).unwrap(), random_scenario(3, 4, &g, &cp, 9).unwrap());
        assert!(random_scenario(0, 0, &g, &cp, 9).unwrap().users.is_empty());

        let s = random_scenario(10_000, 0, &g, &cp, 1).unwrap();
        let mean_d2 = s.users.iter().map(|u| u.distance_m.powi(2)).sum::<f64>() / 10_000.0;
        // E[d^2] under density 2d / (ro^2 - ri^2) on [ri, ro]
        let expected = (100f64.powi(4) - 10f64.powi(4)) / (2.0 * (100f64.powi(2) - 10f64.powi(2)));
        assert!(((mean_d2 - expected) / expected).abs() < 0.02);
        assert!(s.users.iter().all(|u| (10.0..=100.0).contains(&u.distance_m)));
    }

    #[test]
    fn json_round_trip() {
        let s = random_scenario(2, 3, &CellGeometry::default(), &ChannelParams::default(), 5).unwrap();
        assert_eq!(Scenario::from_json(&s.to_json()).unwrap(), s);
        assert!(Scenario::from_json("{\"users\": [{\"id\": 1, \"class\": \"IoT\", \"distance_m\": 1, \"gain\": 0}]}").is_err());
    }

    #[test]
    fn geometry_validation() {
        let bad = CellGeometry {
            r_inner: 50.0,
            r_outer: 10.0,
        };
        assert!(random_scenario(1, 1, &bad, &ChannelParams::default(), 0).is_err());
    }
}
