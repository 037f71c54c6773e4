//! Grant-free uplink access with a contention-window game.
//!
//! In every frame a user transmits with probability `1/W` and, if it does,
//! picks a (slot, subcarrier, sequence) triple uniformly. A triple chosen by
//! exactly one user succeeds; two or more users on the same triple collide.
//! Users on the same subcarrier with different sequences coexist.
//!
//! The game: each user picks its window `W` in `1..=w_max` to maximize
//! `P(success) - price / W`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NomaError, Result};
use crate::scenario::RngSeed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentionResources {
    pub num_slots: usize,
    pub num_sequences: usize,
    pub num_subcarriers: usize,
}

impl ContentionResources {
    pub fn new(num_slots: usize, num_subcarriers: usize, num_sequences: usize) -> Self {
        Self {
            num_slots,
            num_sequences,
            num_subcarriers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_slots == 0 || self.num_sequences == 0 || self.num_subcarriers == 0 {
            return Err(NomaError::InvalidConfig {
                field: "contention.resources".into(),
                reason: "slots, subcarriers and sequences must all be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Number of distinct (slot, subcarrier, sequence) triples.
    pub fn triples(&self) -> usize {
        self.num_slots * self.num_subcarriers * self.num_sequences
    }

    fn index(&self, slot: usize, subcarrier: usize, sequence: usize) -> usize {
        (slot * self.num_subcarriers + subcarrier) * self.num_sequences + sequence
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContentionProfile {
    pub windows: Vec<usize>,
    pub w_max: usize,
}

impl ContentionProfile {
    pub fn uniform(num_users: usize, window: usize, w_max: usize) -> Self {
        Self {
            windows: vec![window; num_users],
            w_max,
        }
    }

    pub fn num_users(&self) -> usize {
        self.windows.len()
    }

    pub fn access_probability(&self, user: usize) -> f64 {
        1.0 / self.windows[user] as f64
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((u, w)) = self.windows.iter().enumerate().find(|(_, &w)| w == 0 || w > self.w_max) {
            return Err(NomaError::InvalidConfig {
                field: "contention.window".into(),
                reason: format!("user {u} has window {w}, allowed 1..={}", self.w_max),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AccessResult {
    Success,
    Collision,
    Deferred,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentionOutcome {
    pub results: Vec<AccessResult>,
    /// Chosen triple per user (`None` when deferred).
    pub choices: Vec<Option<(usize, usize, usize)>>,
    /// Occupancy of every triple, indexed slot-major then subcarrier then sequence.
    pub occupancy: Vec<u32>,
}

impl ContentionOutcome {
    pub fn count(&self, result: AccessResult) -> usize {
        self.results.iter().filter(|&&r| r == result).count()
    }
}

/// One frame of random access.
pub fn contention_round(
    profile: &ContentionProfile,
    resources: &ContentionResources,
    seed: RngSeed,
) -> ContentionOutcome {
    let mut rng = seed.rng();
    let choices: Vec<Option<(usize, usize, usize)>> = profile
        .windows
        .iter()
        .map(|&w| {
            if rng.random_bool(1.0 / w as f64) {
                Some((
                    rng.random_range(0..resources.num_slots),
                    rng.random_range(0..resources.num_subcarriers),
                    rng.random_range(0..resources.num_sequences),
                ))
            } else {
                None
            }
        })
        .collect();
    let mut occupancy = vec![0u32; resources.triples()];
    for &(slot, sc, seq) in choices.iter().flatten() {
        occupancy[resources.index(slot, sc, seq)] += 1;
    }
    let results = choices
        .iter()
        .map(|c| match c {
            None => AccessResult::Deferred,
            Some((slot, sc, seq)) if occupancy[resources.index(*slot, *sc, *seq)] == 1 => AccessResult::Success,
            Some(_) => AccessResult::Collision,
        })
        .collect();
    ContentionOutcome {
        results,
        choices,
        occupancy,
    }
}

/// Closed-form `P(success)`: attempt, and every other user either defers or
/// lands on a different triple.
pub fn success_probability(user: usize, profile: &ContentionProfile, resources: &ContentionResources) -> f64 {
    let r = resources.triples() as f64;
    let others: f64 = (0..profile.num_users())
        .filter(|&m| m != user)
        .map(|m| 1.0 - profile.access_probability(m) / r)
        .product();
    profile.access_probability(user) * others
}

pub fn contention_utility(
    user: usize,
    profile: &ContentionProfile,
    resources: &ContentionResources,
    price: f64,
) -> f64 {
    success_probability(user, profile, resources) - price * profile.access_probability(user)
}

/// Best window for `user` with the others fixed; ties go to the smallest window.
pub fn update_window(
    user: usize,
    profile: &ContentionProfile,
    resources: &ContentionResources,
    price: f64,
    w_max: usize,
) -> usize {
    let mut trial = profile.clone();
    trial.w_max = trial.w_max.max(w_max);
    let mut best = (1usize, f64::NEG_INFINITY);
    for w in 1..=w_max {
        trial.windows[user] = w;
        let u = contention_utility(user, &trial, resources, price);
        if u > best.1 {
            best = (w, u);
        }
    }
    best.0
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentionGameResult {
    pub profile: ContentionProfile,
    pub converged: bool,
    pub sweeps: usize,
}

/// Round-robin best responses from `W = w_max` for everyone.
pub fn run_contention_game(
    resources: &ContentionResources,
    num_users: usize,
    price: f64,
    w_max: usize,
    max_sweeps: usize,
) -> Result<ContentionGameResult> {
    resources.validate()?;
    if num_users == 0 {
        return Err(NomaError::EmptyUserSet);
    }
    if w_max == 0 {
        return Err(NomaError::InvalidConfig {
            field: "contention.w_max".into(),
            reason: "must be at least 1".into(),
        });
    }
    if !(price.is_finite() && price >= 0.0) {
        return Err(NomaError::InvalidConfig {
            field: "contention.price".into(),
            reason: format!("must be >= 0, got {price}"),
        });
    }
    let mut profile = ContentionProfile::uniform(num_users, w_max, w_max);
    let mut sweeps = 0;
    let mut converged = false;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for u in 0..num_users {
            let w = update_window(u, &profile, resources, price, w_max);
            if w != profile.windows[u] {
                profile.windows[u] = w;
                changed = true;
            }
        }
        if !changed {
            converged = true;
            break;
        }
    }
    Ok(ContentionGameResult {
        profile,
        converged,
        sweeps,
    })
}

/// Empirical per-user success frequency over `rounds` frames with seeds
/// derived from `seed`.
pub fn monte_carlo_success(
    profile: &ContentionProfile,
    resources: &ContentionResources,
    seed: RngSeed,
    rounds: u64,
) -> Vec<f64> {
    let mut hits = vec![0u64; profile.num_users()];
    for r in 0..rounds {
        let out = contention_round(profile, resources, seed.derive(r));
        for (h, res) in hits.iter_mut().zip(&out.results) {
            if *res == AccessResult::Success {
                *h += 1;
            }
        }
    }
    hits.iter().map(|&h| h as f64 / rounds.max(1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lone_user_always_succeeds_when_attempting() {
        let res = ContentionResources::new(3, 2, 2);
        let profile = ContentionProfile::uniform(1, 2, 4);
        for s in 0..200 {
            let out = contention_round(&profile, &res, RngSeed(s));
            assert_ne!(out.results[0], AccessResult::Collision);
        }
    }

    #[test]
    fn pigeonhole_collision() {
        let res = ContentionResources::new(1, 1, 1);
        let profile = ContentionProfile::uniform(2, 1, 1);
        for s in 0..20 {
            let out = contention_round(&profile, &res, RngSeed(s));
            assert_eq!(out.results, vec![AccessResult::Collision; 2]);
            assert_eq!(out.occupancy, vec![2]);
        }
    }

    #[test]
    fn two_sequences_both_succeed_half_the_time() {
        let res = ContentionResources::new(1, 1, 2);
        let profile = ContentionProfile::uniform(2, 1, 1);
        let n = 100_000u64;
        let both = (0..n)
            .filter(|&r| contention_round(&profile, &res, RngSeed(9).derive(r)).count(AccessResult::Success) == 2)
            .count() as f64
            / n as f64;
        assert!((both - 0.5).abs() < 0.01, "both = {both}");
    }

    #[test]
    fn closed_form_examples() {
        let p = ContentionProfile::uniform(1, 1, 1);
        assert_eq!(success_probability(0, &p, &ContentionResources::new(1, 1, 1)), 1.0);
        let p = ContentionProfile::uniform(2, 1, 1);
        assert_eq!(success_probability(0, &p, &ContentionResources::new(1, 1, 2)), 0.5);
    }

    #[test]
    fn utility_examples() {
        let res = ContentionResources::new(2, 2, 2);
        let p = ContentionProfile::uniform(1, 1, 8);
        assert_eq!(contention_utility(0, &p, &res, 0.0), 1.0);
        let p = ContentionProfile {
            windows: vec![3, 3],
            w_max: 8,
        };
        assert_eq!(
            contention_utility(0, &p, &res, 0.2),
            contention_utility(1, &p, &res, 0.2)
        );
        // price >= 1: every attempt costs at least what it can earn.
        let p = ContentionProfile::uniform(1, 1, 8);
        let utilities: Vec<f64> = (1..=8)
            .map(|w| {
                contention_utility(
                    0,
                    &ContentionProfile {
                        windows: vec![w],
                        w_max: 8,
                    },
                    &res,
                    1.5,
                )
            })
            .collect();
        let argmax = (0..8).max_by(|&a, &b| utilities[a].total_cmp(&utilities[b])).unwrap() + 1;
        assert_eq!(argmax, 8);
        assert_eq!(update_window(0, &p, &res, 1.5, 8), 8);
    }

    #[test]
    fn free_access_prefers_smallest_window() {
        let res = ContentionResources::new(1, 1, 1);
        let p = ContentionProfile::uniform(1, 4, 4);
        assert_eq!(update_window(0, &p, &res, 0.0, 4), 1);
    }

    #[test]
    fn update_window_matches_grid_argmax() {
        let res = ContentionResources::new(1, 2, 1);
        for w_other in 1..=4 {
            for price in [0.0, 0.1, 0.3, 0.45, 0.7] {
                let p = ContentionProfile {
                    windows: vec![1, w_other],
                    w_max: 4,
                };
                let mut best = (0usize, f64::NEG_INFINITY);
                for w in 1..=4usize {
                    // Direct evaluation of the closed form.
                    let v = (1.0 / w as f64) * (1.0 - 1.0 / (w_other as f64 * 2.0)) - price / w as f64;
                    if v > best.1 + 1e-15 {
                        best = (w, v);
                    }
                }
                assert_eq!(
                    update_window(0, &p, &res, price, 4),
                    best.0,
                    "w_other={w_other} price={price}"
                );
            }
        }
    }

    #[test]
    fn crowded_free_access() {
        // With price 0 utility is (1/W) * C, C independent of W, so W = 1.
        let res = ContentionResources::new(1, 1, 1);
        let p = ContentionProfile::uniform(30, 1, 16);
        let w = update_window(3, &p, &res, 0.0, 16);
        let samples: Vec<f64> = (1..=16)
            .map(|w| {
                let mut t = p.clone();
                t.windows[3] = w;
                contention_utility(3, &t, &res, 0.0)
            })
            .collect();
        // Sampled slope of the closed form is never positive.
        assert!(samples.windows(2).all(|s| s[1] <= s[0]));
        assert_eq!(w, 1);
    }

    #[test]
    fn symmetric_users_split_into_corners() {
        let res = ContentionResources::new(1, 1, 2);
        let g = run_contention_game(&res, 4, 0.0, 8, 50).unwrap();
        assert_eq!(g.profile.windows, vec![1; 4]);
        let g = run_contention_game(&res, 4, 1.0, 8, 50).unwrap();
        assert_eq!(g.profile.windows, vec![8; 4]);
        // Identical users, yet the equilibrium is asymmetric: two aggressive, four idle.
        let g = run_contention_game(&res, 6, 0.3, 8, 50).unwrap();
        assert!(g.converged);
        assert_eq!(g.profile.windows, vec![1, 1, 8, 8, 8, 8]);
        for u in 0..6 {
            assert_eq!(update_window(u, &g.profile, &res, 0.3, 8), g.profile.windows[u]);
        }
    }

    #[test]
    fn game_runs() {
        let res = ContentionResources::new(2, 2, 2);
        let g = run_contention_game(&res, 1, 0.0, 8, 10).unwrap();
        assert!(g.converged && g.sweeps <= 2);
        assert_eq!(g.profile.windows, vec![1]);

        let g = run_contention_game(&res, 5, 0.5, 8, 50).unwrap();
        assert!(g.converged);
        let (lo, hi) = (
            *g.profile.windows.iter().min().unwrap(),
            *g.profile.windows.iter().max().unwrap(),
        );
        assert!(hi - lo <= 1);
        assert!(run_contention_game(&res, 0, 0.5, 8, 50).is_err());
    }

    proptest! {
        #[test]
        fn outcome_conservation(windows in prop::collection::vec(1usize..5, 1..8), seed: u64, slots in 1usize..3, seqs in 1usize..3) {
            let res = ContentionResources::new(slots, 1, seqs);
            let p = ContentionProfile { windows, w_max: 5 };
            let out = contention_round(&p, &res, RngSeed(seed));
            let total = out.count(AccessResult::Success) + out.count(AccessResult::Collision) + out.count(AccessResult::Deferred);
            prop_assert_eq!(total, p.num_users());
            for (u, c) in out.choices.iter().enumerate() {
                if let Some((s, k, q)) = c {
                    let occ = out.occupancy[res.index(*s, *k, *q)];
                    prop_assert_eq!(occ == 1, out.results[u] == AccessResult::Success);
                }
            }
        }

        #[test]
        fn success_decreasing_in_others_attempts(windows in prop::collection::vec(2usize..9, 2..6), other in 1usize..6, r in 1usize..5) {
            let res = ContentionResources::new(r, 1, 1);
            let mut p = ContentionProfile { windows, w_max: 9 };
            let other = other % p.num_users();
            prop_assume!(other != 0);
            let before = success_probability(0, &p, &res);
            p.windows[other] -= 1;
            prop_assert!(success_probability(0, &p, &res) < before);
        }
    }
}
