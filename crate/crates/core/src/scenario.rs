//! Problem instances and reproducible channel realizations.
//!
//! Users are dropped at a distance drawn uniformly from
//! `[min_distance, cell_radius]`; each (user, subcarrier) power gain is the
//! path loss `d^-alpha` times an independent unit-mean exponential draw
//! (Rayleigh fading power). Everything is a pure function of the seed.

use std::cmp::Ordering;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{NomaError, Result};

/// Static description of a single-cell network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkScenario {
    pub num_users: usize,
    pub num_subcarriers: usize,
    /// Downlink power budget of the base station (W).
    pub bs_total_power: f64,
    /// Uplink power budget of every user (W).
    pub per_user_power_budget: f64,
    /// Noise power per subcarrier (W).
    pub noise_power: f64,
    pub cell_radius: f64,
    pub path_loss_exponent: f64,
    pub min_distance: f64,
}

impl Default for NetworkScenario {
    fn default() -> Self {
        Self {
            num_users: 12,
            num_subcarriers: 8,
            bs_total_power: 1.0,
            per_user_power_budget: 0.2,
            noise_power: 1e-9,
            cell_radius: 100.0,
            path_loss_exponent: 3.0,
            min_distance: 10.0,
        }
    }
}

fn invalid(field: &'static str, reason: impl Into<String>) -> NomaError {
    NomaError::InvalidScenario {
        field,
        reason: reason.into(),
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

impl NetworkScenario {
    pub fn validate(&self) -> Result<()> {
        if self.num_users == 0 {
            return Err(invalid("num_users", "must be at least 1"));
        }
        if self.num_subcarriers == 0 {
            return Err(invalid("num_subcarriers", "must be at least 1"));
        }
        positive("bs_total_power", self.bs_total_power)?;
        positive("per_user_power_budget", self.per_user_power_budget)?;
        positive("noise_power", self.noise_power)?;
        positive("min_distance", self.min_distance)?;
        positive("cell_radius", self.cell_radius)?;
        // Equality is allowed so that a fixed-distance geometry can be expressed.
        if self.cell_radius < self.min_distance {
            return Err(invalid(
                "cell_radius",
                format!("must be >= min_distance ({} < {})", self.cell_radius, self.min_distance),
            ));
        }
        if !(self.path_loss_exponent.is_finite() && self.path_loss_exponent >= 2.0) {
            return Err(invalid(
                "path_loss_exponent",
                format!("must be >= 2, got {}", self.path_loss_exponent),
            ));
        }
        Ok(())
    }

    /// Per-subcarrier downlink budget when `active` subcarriers share the BS power.
    pub fn downlink_share(&self, active: usize) -> f64 {
        self.bs_total_power / active.max(1) as f64
    }
}

/// Seed for every random draw in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RngSeed(pub u64);

impl RngSeed {
    /// Derives the `index`-th child seed (splitmix64 finalizer), used for
    /// per-round and per-replication streams.
    pub fn derive(self, index: u64) -> RngSeed {
        let mut z = self
            .0
            .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        RngSeed(z ^ (z >> 31))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

impl From<u64> for RngSeed {
    fn from(value: u64) -> Self {
        RngSeed(value)
    }
}

/// Power gains `gains[user][subcarrier]` plus the user distances they came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    pub gains: Vec<Vec<f64>>,
    pub user_distances: Vec<f64>,
}

impl ChannelState {
    /// Wraps a pre-drawn gain table. Distances default to 1 when not known.
    pub fn from_gains(gains: Vec<Vec<f64>>) -> Result<Self> {
        let n = gains.len();
        Self::new(gains, vec![1.0; n])
    }

    pub fn new(gains: Vec<Vec<f64>>, user_distances: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(invalid("gains", "must have at least one user row"));
        }
        let k = gains[0].len();
        if k == 0 {
            return Err(invalid("gains", "must have at least one subcarrier column"));
        }
        if gains.iter().any(|row| row.len() != k) {
            return Err(invalid("gains", "rows have unequal lengths"));
        }
        if gains.iter().flatten().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(invalid("gains", "every gain must be finite and >= 0"));
        }
        if user_distances.len() != gains.len() {
            return Err(invalid("user_distances", "length must equal num_users"));
        }
        Ok(Self { gains, user_distances })
    }

    pub fn num_users(&self) -> usize {
        self.gains.len()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.gains[0].len()
    }

    #[inline]
    pub fn gain(&self, user: usize, subcarrier: usize) -> f64 {
        self.gains[user][subcarrier]
    }

    /// Checks that the table has the scenario's dimensions.
    pub fn check_dimensions(&self, scenario: &NetworkScenario) -> Result<()> {
        if self.num_users() != scenario.num_users {
            return Err(invalid("num_users", "does not match channel rows"));
        }
        if self.num_subcarriers() != scenario.num_subcarriers {
            return Err(invalid("num_subcarriers", "does not match channel columns"));
        }
        Ok(())
    }
}

/// Draws one channel realization. Distances are drawn first (one per user),
/// then the fading table row by row.
pub fn generate_channels(scenario: &NetworkScenario, seed: RngSeed) -> Result<ChannelState> {
    scenario.validate()?;
    let mut rng = seed.rng();
    let user_distances: Vec<f64> = (0..scenario.num_users)
        .map(|_| {
            if scenario.cell_radius > scenario.min_distance {
                rng.random_range(scenario.min_distance..=scenario.cell_radius)
            } else {
                scenario.min_distance
            }
        })
        .collect();
    let gains = user_distances
        .iter()
        .map(|&d| {
            let path_loss = d.powf(-scenario.path_loss_exponent);
            (0..scenario.num_subcarriers)
                .map(|_| {
                    let fading: f64 = rng.sample(Exp1);
                    path_loss * fading
                })
                .collect()
        })
        .collect();
    Ok(ChannelState { gains, user_distances })
}

/// SIC order comparator: descending value, ties by ascending user id.
pub(crate) fn descending_then_id(a: (usize, f64), b: (usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Orders `users` by descending gain on `subcarrier`; equal gains keep
/// ascending user id.
pub fn sic_order(channel: &ChannelState, subcarrier: usize, users: &[usize]) -> Result<Vec<usize>> {
    if users.is_empty() {
        return Err(NomaError::EmptyUserSet);
    }
    if subcarrier >= channel.num_subcarriers() {
        return Err(NomaError::SubcarrierOutOfRange {
            subcarrier,
            num_subcarriers: channel.num_subcarriers(),
        });
    }
    let mut keyed = Vec::with_capacity(users.len());
    for &u in users {
        if u >= channel.num_users() {
            return Err(NomaError::UserOutOfRange {
                user: u,
                num_users: channel.num_users(),
            });
        }
        if keyed.iter().any(|&(v, _)| v == u) {
            return Err(NomaError::DuplicateUser(u));
        }
        keyed.push((u, channel.gain(u, subcarrier)));
    }
    keyed.sort_by(|a, b| descending_then_id(*a, *b));
    Ok(keyed.into_iter().map(|(u, _)| u).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_scenario() -> NetworkScenario {
        NetworkScenario {
            num_users: 1,
            num_subcarriers: 1,
            min_distance: 1.0,
            cell_radius: 1.0,
            path_loss_exponent: 2.0,
            ..NetworkScenario::default()
        }
    }

    #[test]
    fn degenerate_geometry_has_unit_path_loss() {
        let scenario = unit_scenario();
        let ch = generate_channels(&scenario, RngSeed(3)).unwrap();
        assert_eq!(ch.user_distances, vec![1.0]);
        let mut rng = RngSeed(3).rng();
        let expected: f64 = rng.sample(Exp1);
        assert_eq!(ch.gains[0][0], expected);
    }

    #[test]
    fn same_seed_same_channels() {
        let scenario = NetworkScenario::default();
        let a = generate_channels(&scenario, RngSeed(42)).unwrap();
        let b = generate_channels(&scenario, RngSeed(42)).unwrap();
        assert_eq!(a, b);
        let c = generate_channels(&scenario, RngSeed(43)).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn mean_gain_matches_path_loss() {
        let scenario = NetworkScenario {
            min_distance: 2.0,
            cell_radius: 2.0,
            path_loss_exponent: 3.0,
            ..unit_scenario()
        };
        let n = 100_000u64;
        let mean = (0..n)
            .map(|s| generate_channels(&scenario, RngSeed(s)).unwrap().gains[0][0])
            .sum::<f64>()
            / n as f64;
        assert!((mean - 0.125).abs() / 0.125 < 0.02, "mean = {mean}");
    }

    #[test]
    fn distances_within_annulus_and_gains_positive() {
        let scenario = NetworkScenario::default();
        for s in 0..50 {
            let ch = generate_channels(&scenario, RngSeed(s)).unwrap();
            assert!(ch
                .user_distances
                .iter()
                .all(|&d| (scenario.min_distance..=scenario.cell_radius).contains(&d)));
            assert!(ch.gains.iter().flatten().all(|g| g.is_finite() && *g > 0.0));
        }
    }

    #[test]
    fn validation_names_the_field() {
        let bad = NetworkScenario {
            path_loss_exponent: 1.5,
            ..NetworkScenario::default()
        };
        match generate_channels(&bad, RngSeed(0)) {
            Err(NomaError::InvalidScenario { field, .. }) => assert_eq!(field, "path_loss_exponent"),
            other => panic!("unexpected {other:?}"),
        }
        let bad = NetworkScenario {
            num_subcarriers: 0,
            ..NetworkScenario::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(NomaError::InvalidScenario {
                field: "num_subcarriers",
                ..
            })
        ));
        let bad = NetworkScenario {
            min_distance: 200.0,
            ..NetworkScenario::default()
        };
        assert!(matches!(
            bad.validate(),
            Err(NomaError::InvalidScenario {
                field: "cell_radius",
                ..
            })
        ));
    }

    #[test]
    fn sic_order_examples() {
        let ch = ChannelState::from_gains(vec![vec![0.9], vec![0.3]]).unwrap();
        assert_eq!(sic_order(&ch, 0, &[1, 0]).unwrap(), vec![0, 1]);
        let ch = ChannelState::from_gains(vec![vec![0.5], vec![0.5]]).unwrap();
        assert_eq!(sic_order(&ch, 0, &[1, 0]).unwrap(), vec![0, 1]);
        assert_eq!(sic_order(&ch, 0, &[]), Err(NomaError::EmptyUserSet));
        assert!(matches!(sic_order(&ch, 0, &[2]), Err(NomaError::UserOutOfRange { .. })));
        assert!(matches!(
            sic_order(&ch, 1, &[0]),
            Err(NomaError::SubcarrierOutOfRange { .. })
        ));
    }

    #[test]
    fn sic_order_agrees_with_pairwise_comparison() {
        let scenario = NetworkScenario {
            num_users: 6,
            num_subcarriers: 2,
            ..NetworkScenario::default()
        };
        let ch = generate_channels(&scenario, RngSeed(11)).unwrap();
        let users: Vec<usize> = vec![5, 2, 0, 4, 1, 3];
        let order = sic_order(&ch, 1, &users).unwrap();
        // A user's position equals the number of users that beat it.
        for &u in &users {
            let beaten_by = users
                .iter()
                .filter(|&&v| ch.gain(v, 1) > ch.gain(u, 1) || (ch.gain(v, 1) == ch.gain(u, 1) && v < u))
                .count();
            assert_eq!(order[beaten_by], u);
        }
    }

    #[test]
    fn relabeling_permutes_rows() {
        let ch = generate_channels(&NetworkScenario::default(), RngSeed(9)).unwrap();
        let perm: Vec<usize> = (0..ch.num_users()).rev().collect();
        let permuted = ChannelState::from_gains(perm.iter().map(|&p| ch.gains[p].clone()).collect()).unwrap();
        let all: Vec<usize> = (0..ch.num_users()).collect();
        for k in 0..ch.num_subcarriers() {
            let original = sic_order(&ch, k, &all).unwrap();
            let relabeled = sic_order(&permuted, k, &all).unwrap();
            // Generic gains have no ties, so the order maps through the permutation.
            let mapped: Vec<usize> = relabeled.iter().map(|&u| perm[u]).collect();
            assert_eq!(mapped, original);
        }
    }

    #[test]
    fn derived_seeds_differ() {
        let base = RngSeed(7);
        assert_ne!(base.derive(0), base.derive(1));
        assert_eq!(base.derive(5), base.derive(5));
    }
}
