//! Domain types and per-user metrics for an uplink two-user cluster.
//!
//! Gains are normalized by the receiver noise power (1/mW) and powers are in
//! mW throughout, so an EE value is bits/s/Hz per mW of consumed power. All
//! logarithms are base 2.
//!
//! User 1 is always the weak user (`gamma1 <= gamma2`). Under NOMA the base
//! station decodes the strong user first, so only the strong user sees
//! interference. Under OMA each user is active every other slot and may spend
//! twice its NOMA budget.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UserClass {
    #[serde(rename = "IoT")]
    Iot,
    #[serde(rename = "eMBB")]
    Embb,
}

/// The metric a user class maximizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Spectral,
    Energy,
}

impl UserClass {
    pub fn metric(self) -> Metric {
        match self {
            UserClass::Iot => Metric::Energy,
            UserClass::Embb => Metric::Spectral,
        }
    }
}

impl std::fmt::Display for UserClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            UserClass::Iot => "IoT",
            UserClass::Embb => "eMBB",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Inverse of the amplifier efficiency.
    pub phi: f64,
    /// Circuit power in mW.
    pub q: f64,
    /// Normalization applied to SE terms.
    pub k_s: f64,
    /// Normalization applied to EE terms.
    pub k_e: f64,
    /// Bandwidth per user, used only when reporting.
    pub bandwidth_hz: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self {
            phi: 2.0,
            q: 10.0,
            k_s: 30.0,
            k_e: 1.0,
            bandwidth_hz: 1e5,
        }
    }
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("phi", self.phi),
            ("q", self.q),
            ("k_s", self.k_s),
            ("k_e", self.k_e),
            ("bandwidth_hz", self.bandwidth_hz),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    /// Normalization constant for a metric.
    pub fn norm(&self, metric: Metric) -> f64 {
        match metric {
            Metric::Spectral => self.k_s,
            Metric::Energy => self.k_e,
        }
    }

    /// Total consumed power for a transmit power `p`.
    pub fn consumed(&self, p: f64) -> f64 {
        self.phi * p + self.q
    }
}

/// Which of the four weighted-sum problems a cluster poses, named by
/// (weak-user metric, strong-user metric): `S` spectral, `E` energy.
#[allow(clippy::upper_case_acronyms)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubproblemKind {
    SS,
    ES,
    SE,
    EE,
}

impl SubproblemKind {
    pub const ALL: [SubproblemKind; 4] = [Self::SS, Self::ES, Self::SE, Self::EE];

    pub fn from_classes(weak: UserClass, strong: UserClass) -> Self {
        use UserClass::*;
        match (weak, strong) {
            (Embb, Embb) => Self::SS,
            (Iot, Embb) => Self::ES,
            (Embb, Iot) => Self::SE,
            (Iot, Iot) => Self::EE,
        }
    }

    /// (weak class, strong class)
    pub fn classes(self) -> (UserClass, UserClass) {
        use UserClass::*;
        match self {
            Self::SS => (Embb, Embb),
            Self::ES => (Iot, Embb),
            Self::SE => (Embb, Iot),
            Self::EE => (Iot, Iot),
        }
    }
}

impl std::str::FromStr for SubproblemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "SS" => Ok(Self::SS),
            "ES" => Ok(Self::ES),
            "SE" => Ok(Self::SE),
            "EE" => Ok(Self::EE),
            _ => Err(invalid(format!("unknown subproblem kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MaScheme {
    #[serde(rename = "NOMA")]
    Noma,
    #[serde(rename = "OMA")]
    Oma,
}

impl MaScheme {
    /// Budget multiplier relative to the per-user NOMA budget.
    pub fn budget_factor(self) -> f64 {
        match self {
            MaScheme::Noma => 1.0,
            MaScheme::Oma => 2.0,
        }
    }
}

impl std::fmt::Display for MaScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MaScheme::Noma => "NOMA",
            MaScheme::Oma => "OMA",
        })
    }
}

impl std::str::FromStr for MaScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "NOMA" => Ok(Self::Noma),
            "OMA" => Ok(Self::Oma),
            _ => Err(invalid(format!("unknown scheme {s:?}"))),
        }
    }
}

/// Role of a user inside a cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Weak,
    Strong,
}

/// One two-user cluster. The strong user's weight is `1 - w1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec {
    pub gamma1: f64,
    pub gamma2: f64,
    pub class1: UserClass,
    pub class2: UserClass,
    pub w1: f64,
    pub p1_max: f64,
    pub p2_max: f64,
}

impl ClusterSpec {
    pub fn new(
        gamma1: f64,
        gamma2: f64,
        class1: UserClass,
        class2: UserClass,
        w1: f64,
        p1_max: f64,
        p2_max: f64,
    ) -> Result<Self> {
        let spec = Self {
            gamma1,
            gamma2,
            class1,
            class2,
            w1,
            p1_max,
            p2_max,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a cluster of the given kind with equal budgets.
    pub fn of_kind(kind: SubproblemKind, gamma1: f64, gamma2: f64, w1: f64, p_max: f64) -> Result<Self> {
        let (c1, c2) = kind.classes();
        Self::new(gamma1, gamma2, c1, c2, w1, p_max, p_max)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma1.is_finite() && self.gamma1 > 0.0) {
            return Err(invalid(format!("gamma1 must be positive, got {}", self.gamma1)));
        }
        if !(self.gamma2.is_finite() && self.gamma2 >= self.gamma1) {
            return Err(invalid(format!(
                "gamma2 ({}) must be finite and not below gamma1 ({})",
                self.gamma2, self.gamma1
            )));
        }
        if !(0.0..=1.0).contains(&self.w1) {
            return Err(invalid(format!("w1 must lie in [0, 1], got {}", self.w1)));
        }
        for (name, b) in [("p1_max", self.p1_max), ("p2_max", self.p2_max)] {
            if !(b.is_finite() && b > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {b}")));
            }
        }
        Ok(())
    }

    pub fn w2(&self) -> f64 {
        1.0 - self.w1
    }

    pub fn kind(&self) -> SubproblemKind {
        SubproblemKind::from_classes(self.class1, self.class2)
    }

    pub fn with_w1(&self, w1: f64) -> Self {
        Self { w1, ..*self }
    }

    pub fn budgets(&self, scheme: MaScheme) -> (f64, f64) {
        let f = scheme.budget_factor();
        (f * self.p1_max, f * self.p2_max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerAllocation {
    pub p1: f64,
    pub p2: f64,
    pub scheme: MaScheme,
}

impl PowerAllocation {
    pub fn new(p1: f64, p2: f64, scheme: MaScheme) -> Self {
        Self { p1, p2, scheme }
    }

    pub fn check_feasible(&self, spec: &ClusterSpec) -> Result<()> {
        let (b1, b2) = spec.budgets(self.scheme);
        // Solvers clamp to the budget; the slack absorbs the last ulp.
        let ok = |p: f64, b: f64| p.is_finite() && p >= 0.0 && p <= b * (1.0 + 1e-12);
        if ok(self.p1, b1) && ok(self.p2, b2) {
            Ok(())
        } else {
            Err(Error::Infeasible {
                p1: self.p1,
                p2: self.p2,
                b1,
                b2,
            })
        }
    }
}

fn check_nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be non-negative and finite, got {v}")))
    }
}

fn check_gain(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Unchecked metric kernels shared by the solvers and the oracle.
pub(crate) mod raw {
    use super::SystemParams;

    #[inline]
    pub fn se_oma(gamma: f64, p: f64) -> f64 {
        (gamma * p).ln_1p() / std::f64::consts::LN_2
    }

    #[inline]
    pub fn se_noma_weak(gamma1: f64, p1: f64) -> f64 {
        2.0 * se_oma(gamma1, p1)
    }

    #[inline]
    pub fn se_noma_strong(gamma1: f64, p1: f64, gamma2: f64, p2: f64) -> f64 {
        2.0 * (gamma2 * p2 / (1.0 + gamma1 * p1)).ln_1p() / std::f64::consts::LN_2
    }

    #[inline]
    pub fn ee_oma(gamma: f64, p: f64, params: &SystemParams) -> f64 {
        se_oma(gamma, p) / params.consumed(p)
    }
}

/// Spectral efficiency of a user active every other slot: `log2(1 + gamma p)`.
pub fn se_oma(gamma: f64, p: f64) -> Result<f64> {
    check_gain("gamma", gamma)?;
    check_nonneg("p", p)?;
    Ok(raw::se_oma(gamma, p))
}

/// Weak-user NOMA spectral efficiency, `2 log2(1 + gamma1 p1)`; decoded
/// after the strong user is cancelled, so interference-free.
pub fn se_noma_weak(gamma1: f64, p1: f64) -> Result<f64> {
    check_gain("gamma1", gamma1)?;
    check_nonneg("p1", p1)?;
    Ok(raw::se_noma_weak(gamma1, p1))
}

/// Strong-user NOMA spectral efficiency, treating the weak user as noise.
pub fn se_noma_strong(gamma1: f64, p1: f64, gamma2: f64, p2: f64) -> Result<f64> {
    check_gain("gamma1", gamma1)?;
    check_gain("gamma2", gamma2)?;
    check_nonneg("p1", p1)?;
    check_nonneg("p2", p2)?;
    Ok(raw::se_noma_strong(gamma1, p1, gamma2, p2))
}

/// NOMA energy efficiency of one user: its NOMA SE over `2 (phi p_i + q)`.
pub fn ee_noma(role: Role, gamma1: f64, p1: f64, gamma2: f64, p2: f64, params: &SystemParams) -> Result<f64> {
    params.validate()?;
    match role {
        Role::Weak => Ok(se_noma_weak(gamma1, p1)? / (2.0 * params.consumed(p1))),
        Role::Strong => Ok(se_noma_strong(gamma1, p1, gamma2, p2)? / (2.0 * params.consumed(p2))),
    }
}

pub fn ee_oma(gamma: f64, p: f64, params: &SystemParams) -> Result<f64> {
    params.validate()?;
    Ok(se_oma(gamma, p)? / params.consumed(p))
}

/// Raw (unnormalized, unweighted) metric of each user under an allocation.
pub(crate) fn user_metrics(spec: &ClusterSpec, alloc: &PowerAllocation, params: &SystemParams) -> [f64; 2] {
    let (g1, g2, p1, p2) = (spec.gamma1, spec.gamma2, alloc.p1, alloc.p2);
    match alloc.scheme {
        MaScheme::Noma => {
            let se1 = raw::se_noma_weak(g1, p1);
            let se2 = raw::se_noma_strong(g1, p1, g2, p2);
            let m1 = match spec.class1.metric() {
                Metric::Spectral => se1,
                Metric::Energy => se1 / (2.0 * params.consumed(p1)),
            };
            let m2 = match spec.class2.metric() {
                Metric::Spectral => se2,
                Metric::Energy => se2 / (2.0 * params.consumed(p2)),
            };
            [m1, m2]
        }
        MaScheme::Oma => {
            let single = |class: UserClass, g: f64, p: f64| match class.metric() {
                Metric::Spectral => raw::se_oma(g, p),
                Metric::Energy => raw::ee_oma(g, p, params),
            };
            [single(spec.class1, g1, p1), single(spec.class2, g2, p2)]
        }
    }
}

/// Weighted, normalized contribution of each user: `[w1 M1 / K, w2 M2 / K]`.
pub(crate) fn weighted_terms_unchecked(spec: &ClusterSpec, alloc: &PowerAllocation, params: &SystemParams) -> [f64; 2] {
    let [m1, m2] = user_metrics(spec, alloc, params);
    [
        spec.w1 / params.norm(spec.class1.metric()) * m1,
        spec.w2() / params.norm(spec.class2.metric()) * m2,
    ]
}

/// Per-user weighted terms; their sum is [`weighted_objective`].
pub fn weighted_terms(spec: &ClusterSpec, alloc: &PowerAllocation, params: &SystemParams) -> Result<[f64; 2]> {
    spec.validate()?;
    params.validate()?;
    alloc.check_feasible(spec)?;
    Ok(weighted_terms_unchecked(spec, alloc, params))
}

/// `(w1 / K_1) M1 + (w2 / K_2) M2`, with `M_i` the SE or EE of user `i`
/// under the allocation's scheme and `K` the matching normalization.
pub fn weighted_objective(spec: &ClusterSpec, alloc: &PowerAllocation, params: &SystemParams) -> Result<f64> {
    let [a, b] = weighted_terms(spec, alloc, params)?;
    Ok(a + b)
}
