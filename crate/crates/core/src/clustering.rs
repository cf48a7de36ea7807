//! User pairing.
//!
//! The proposed plan pairs weak IoT users with strong eMBB users (EE+SE
//! clusters) and weak eMBB users with strong IoT users (SE+EE clusters), so
//! that as many clusters as possible are ones where NOMA can pay off. The
//! users left over are all of one class and are paired among themselves.
//! Two baselines are provided: a uniform random matching and a
//! strongest-with-weakest matching that ignores classes.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SubproblemKind, UserClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub id: usize,
    pub class: UserClass,
    /// Normalized gain, 1/mW.
    pub gain: f64,
}

/// How a pair picks its multiple-access scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchemePolicy {
    Adaptive,
    ForceNoma,
    ForceOma,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlannedPair {
    pub weak: UserRecord,
    pub strong: UserRecord,
    pub kind: SubproblemKind,
    pub policy: SchemePolicy,
}

impl PlannedPair {
    fn new(a: UserRecord, b: UserRecord, policy: SchemePolicy) -> Self {
        let (weak, strong) = if by_gain_then_id(&a, &b) == Ordering::Greater {
            (b, a)
        } else {
            (a, b)
        };
        Self {
            weak,
            strong,
            kind: SubproblemKind::from_classes(weak.class, strong.class),
            policy,
        }
    }
}

/// Partition of the users into pairs and OMA solos.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClusterPlan {
    pub pairs: Vec<PlannedPair>,
    pub solos: Vec<UserRecord>,
}

impl ClusterPlan {
    /// All user ids in the plan, sorted.
    pub fn ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self
            .pairs
            .iter()
            .flat_map(|p| [p.weak.id, p.strong.id])
            .chain(self.solos.iter().map(|u| u.id))
            .collect();
        ids.sort_unstable();
        ids
    }
}

fn by_gain_then_id(a: &UserRecord, b: &UserRecord) -> Ordering {
    a.gain.total_cmp(&b.gain).then(a.id.cmp(&b.id))
}

fn sorted_desc(users: &[UserRecord]) -> Vec<UserRecord> {
    let mut v = users.to_vec();
    v.sort_by(|a, b| by_gain_then_id(b, a));
    v
}

/// Largest `l` in `1..=M` (1-based) with `g[N_IoT + 1 - l] < h[l]`, or 0 when
/// no `l` qualifies. `g` are IoT gains and `h` eMBB gains, both sorted in
/// descending order; `M = min(len(g), len(h))`.
pub fn compute_l_star(g: &[f64], h: &[f64]) -> Result<usize> {
    for (name, s) in [("IoT", g), ("eMBB", h)] {
        if s.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::InvalidInput(format!("{name} gains must be positive")));
        }
        if s.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Unsorted(format!("{name} gains must be sorted in descending order")));
        }
    }
    let n_iot = g.len();
    let m = g.len().min(h.len());
    // g[N+1-l] grows with l while h[l] shrinks, so the condition holds on a prefix.
    Ok((1..=m).take_while(|&l| g[n_iot - l] < h[l - 1]).last().unwrap_or(0))
}

/// Pairs consecutive users of a descending-sorted list; an odd last user
/// becomes a solo.
fn pair_adjacent(users: &[UserRecord], policy: SchemePolicy, plan: &mut ClusterPlan) {
    let mut chunks = users.chunks_exact(2);
    for c in &mut chunks {
        plan.pairs.push(PlannedPair::new(c[0], c[1], policy));
    }
    plan.solos.extend_from_slice(chunks.remainder());
}

pub fn build_proposed_plan(iot: &[UserRecord], embb: &[UserRecord]) -> Result<ClusterPlan> {
    let g = sorted_desc(iot);
    let h = sorted_desc(embb);
    let gains = |v: &[UserRecord]| v.iter().map(|u| u.gain).collect::<Vec<_>>();
    let l_star = compute_l_star(&gains(&g), &gains(&h))?;
    let (n_iot, n_embb) = (g.len(), h.len());
    let m = n_iot.min(n_embb);

    let mut plan = ClusterPlan::default();
    // Strong eMBB with weak IoT: (h_l, g_{N_IoT + 1 - l}), l = 1..=l*.
    for l in 1..=l_star {
        plan.pairs.push(PlannedPair::new(h[l - 1], g[n_iot - l], SchemePolicy::Adaptive));
    }
    // Weak eMBB with strong IoT: (h_{N_eMBB + 1 - j}, g_j), j = 1..=M - l*.
    for j in 1..=(m - l_star) {
        plan.pairs.push(PlannedPair::new(h[n_embb - j], g[j - 1], SchemePolicy::Adaptive));
    }

    if n_iot <= n_embb {
        let rest = &h[l_star..n_embb - (m - l_star)];
        pair_adjacent(rest, SchemePolicy::Adaptive, &mut plan);
    } else {
        let rest = &g[m - l_star..n_iot - l_star];
        pair_adjacent(rest, SchemePolicy::ForceOma, &mut plan);
    }
    Ok(plan)
}

/// Uniform random perfect matching; with an odd count one user is left solo.
pub fn build_random_plan(users: &[UserRecord], seed: u64) -> ClusterPlan {
    let mut shuffled = users.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut plan = ClusterPlan::default();
    pair_adjacent(&shuffled, SchemePolicy::Adaptive, &mut plan);
    plan
}

/// Pairs the k-th weakest user with the k-th strongest, regardless of class.
pub fn build_strongest_weakest_plan(users: &[UserRecord]) -> ClusterPlan {
    let mut asc = users.to_vec();
    asc.sort_by(by_gain_then_id);
    let n = asc.len();
    let mut plan = ClusterPlan::default();
    for k in 0..n / 2 {
        plan.pairs.push(PlannedPair::new(asc[k], asc[n - 1 - k], SchemePolicy::Adaptive));
    }
    if n % 2 == 1 {
        plan.solos.push(asc[n / 2]);
    }
    plan
}

#[cfg(test)]
mod tests {
    use super::*;
    use UserClass::{Embb, Iot};

    fn users(class: UserClass, first_id: usize, gains: &[f64]) -> Vec<UserRecord> {
        gains
            .iter()
            .enumerate()
            .map(|(i, &gain)| UserRecord {
                id: first_id + i,
                class,
                gain,
            })
            .collect()
    }

    #[test]
    fn l_star_examples() {
        assert_eq!(compute_l_star(&[5.0, 3.0, 1.0], &[4.0, 2.0]).unwrap(), 1);
        assert_eq!(compute_l_star(&[1.0], &[2.0]).unwrap(), 1);
        assert_eq!(compute_l_star(&[9.0, 8.0], &[2.0, 1.0]).unwrap(), 0);
        assert_eq!(compute_l_star(&[], &[2.0, 1.0]).unwrap(), 0);
    }

    #[test]
    fn l_star_rejects_unsorted() {
        assert!(matches!(compute_l_star(&[1.0, 5.0], &[2.0]), Err(Error::Unsorted(_))));
        assert!(compute_l_star(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn proposed_plan_example() {
        let iot = users(Iot, 0, &[5.0, 3.0, 1.0]);
        let embb = users(Embb, 10, &[4.0, 2.0]);
        let plan = build_proposed_plan(&iot, &embb).unwrap();
        assert_eq!(plan.pairs.len(), 2);
        let s1 = &plan.pairs[0];
        assert_eq!((s1.weak.gain, s1.strong.gain, s1.kind), (1.0, 4.0, SubproblemKind::ES));
        let s2 = &plan.pairs[1];
        assert_eq!((s2.weak.gain, s2.strong.gain, s2.kind), (2.0, 5.0, SubproblemKind::SE));
        assert_eq!(plan.solos.len(), 1);
        assert_eq!((plan.solos[0].class, plan.solos[0].gain), (Iot, 3.0));
    }

    #[test]
    fn proposed_plan_without_iot() {
        let embb = users(Embb, 0, &[4.0, 2.0]);
        let plan = build_proposed_plan(&[], &embb).unwrap();
        assert_eq!(plan.pairs.len(), 1);
        let p = &plan.pairs[0];
        assert_eq!((p.weak.gain, p.strong.gain, p.kind), (2.0, 4.0, SubproblemKind::SS));
        assert!(plan.solos.is_empty());
    }

    #[test]
    fn proposed_plan_single_pair() {
        let plan = build_proposed_plan(&users(Iot, 0, &[3.0]), &users(Embb, 1, &[4.0])).unwrap();
        assert_eq!(plan.pairs.len(), 1);
        assert_eq!(plan.pairs[0].kind, SubproblemKind::ES);
        assert_eq!((plan.pairs[0].weak.gain, plan.pairs[0].strong.gain), (3.0, 4.0));
    }

    #[test]
    fn leftover_iot_forced_oma() {
        let iot = users(Iot, 0, &[9.0, 8.0, 7.0, 6.0, 0.5]);
        let embb = users(Embb, 10, &[1.0]);
        let plan = build_proposed_plan(&iot, &embb).unwrap();
        // l* = 1: (h1 = 1, g5 = 0.5); S2 empty; IoT 9, 8, 7, 6 pair up.
        assert_eq!(plan.pairs.len(), 3);
        let ee: Vec<_> = plan.pairs.iter().filter(|p| p.kind == SubproblemKind::EE).collect();
        assert_eq!(ee.len(), 2);
        assert!(ee.iter().all(|p| p.policy == SchemePolicy::ForceOma));
        assert_eq!((ee[0].weak.gain, ee[0].strong.gain), (8.0, 9.0));
        assert!(plan.solos.is_empty());
    }

    #[test]
    fn leftover_embb_odd_goes_solo() {
        let iot = users(Iot, 0, &[2.5]);
        let embb = users(Embb, 10, &[10.0, 8.0, 6.0, 4.0]);
        let plan = build_proposed_plan(&iot, &embb).unwrap();
        // l* = 1 pairs (10, 2.5); eMBB 8, 6, 4 remain -> (6, 8) and 4 solo.
        assert_eq!(plan.pairs.len(), 2);
        assert_eq!(plan.pairs[1].kind, SubproblemKind::SS);
        assert_eq!((plan.pairs[1].weak.gain, plan.pairs[1].strong.gain), (6.0, 8.0));
        assert_eq!(plan.solos.len(), 1);
        assert_eq!(plan.solos[0].gain, 4.0);
    }

    #[test]
    fn random_plan_basics() {
        let two = users(Embb, 0, &[1.0, 2.0]);
        let plan = build_random_plan(&two, 7);
        assert_eq!(plan.pairs.len(), 1);
        assert_eq!((plan.pairs[0].weak.id, plan.pairs[0].strong.id), (0, 1));

        let one = users(Iot, 0, &[1.0]);
        let plan = build_random_plan(&one, 7);
        assert_eq!((plan.pairs.len(), plan.solos.len()), (0, 1));

        let many = users(Iot, 0, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0]);
        assert_eq!(build_random_plan(&many, 42), build_random_plan(&many, 42));
    }

    #[test]
    fn strongest_weakest_examples() {
        let plan = build_strongest_weakest_plan(&users(Embb, 0, &[1.0, 2.0]));
        assert_eq!((plan.pairs[0].weak.gain, plan.pairs[0].strong.gain), (1.0, 2.0));

        let plan = build_strongest_weakest_plan(&users(Embb, 0, &[3.0, 1.0, 2.0]));
        assert_eq!((plan.pairs[0].weak.gain, plan.pairs[0].strong.gain), (1.0, 3.0));
        assert_eq!(plan.solos[0].gain, 2.0);
    }

    #[test]
    fn strongest_weakest_on_ten_user_line() {
        // gains increase with k, so rank k pairs with rank 11 - k
        let line: Vec<f64> = (1..=10).map(|k| 10_000.0 / (10.0 * (11 - k) as f64).powi(2)).collect();
        let plan = build_strongest_weakest_plan(&users(Embb, 1, &line));
        let pairs: Vec<(usize, usize)> = plan.pairs.iter().map(|p| (p.weak.id, p.strong.id)).collect();
        assert_eq!(pairs, vec![(1, 10), (2, 9), (3, 8), (4, 7), (5, 6)]);
        assert!(plan.solos.is_empty());
    }
}
