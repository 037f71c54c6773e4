//! Brute-force references for desk-scale instances.
//!
//! Rates here are recomputed from first principles with plain loops and do
//! not call into the SIC helpers used by the engines, so agreement between
//! an engine and its oracle is evidence rather than tautology. Every
//! enumeration is sized before it starts and refused when over budget.

use crate::coalition::{initialize_partition, CoalitionConfig, Partition, UserCategory};
use crate::contention::{ContentionProfile, ContentionResources};
use crate::error::{NomaError, Result};
use crate::matching::{MatchQuotas, Matching};
use crate::power::{PowerGameConfig, PowerGameResult};
use crate::scenario::{ChannelState, NetworkScenario};

/// Improvement a unilateral deviation must exceed to break a grid equilibrium.
pub const NASH_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleBudget {
    pub max_users: usize,
    pub max_subcarriers: usize,
    pub max_grid: usize,
    /// Largest number of candidates any single enumeration may visit.
    pub max_enumeration: u128,
}

impl Default for OracleBudget {
    fn default() -> Self {
        Self {
            max_users: 8,
            max_subcarriers: 8,
            max_grid: 101,
            max_enumeration: 10_000_000,
        }
    }
}

impl OracleBudget {
    fn admit(&self, size: u128) -> Result<()> {
        if size > self.max_enumeration {
            Err(NomaError::BudgetExceeded {
                size,
                limit: self.max_enumeration,
            })
        } else {
            Ok(())
        }
    }

    fn admit_dims(&self, users: usize, subcarriers: usize) -> Result<()> {
        if users > self.max_users || subcarriers > self.max_subcarriers {
            return Err(NomaError::BudgetExceeded {
                size: (users as u128) * (subcarriers as u128),
                limit: (self.max_users as u128) * (self.max_subcarriers as u128),
            });
        }
        Ok(())
    }
}

fn checked_pow(base: u128, exp: usize) -> u128 {
    let mut out: u128 = 1;
    for _ in 0..exp {
        out = out.saturating_mul(base);
    }
    out
}

/// Downlink rate of every member sharing one resource with budget `share`,
/// each power proportional to the inverse gain.
fn downlink_member_rates(gains: &[(usize, f64)], share: f64, noise: f64) -> Vec<(usize, f64)> {
    let inv_total: f64 = gains.iter().map(|(_, g)| 1.0 / g).sum();
    let power = |g: f64| share * (1.0 / g) / inv_total;
    gains
        .iter()
        .map(|&(u, g)| {
            let mut interference = 0.0;
            for &(v, h) in gains {
                let stronger = h > g || (h == g && v < u);
                if v != u && stronger {
                    interference += power(h);
                }
            }
            (u, (1.0 + power(g) * g / (g * interference + noise)).log2())
        })
        .collect()
}

/// Sum-rate of a matching, recomputed independently of the engine.
pub fn reference_sum_rate(matching: &Matching, channel: &ChannelState, scenario: &NetworkScenario) -> f64 {
    let k_total = channel.num_subcarriers();
    let share = scenario.bs_total_power / k_total as f64;
    (0..k_total)
        .map(|k| {
            let gains: Vec<(usize, f64)> = matching
                .pairs
                .iter()
                .filter(|p| p.1 == k)
                .map(|&(u, _)| (u, channel.gains[u][k]))
                .collect();
            if gains.is_empty() {
                0.0
            } else {
                downlink_member_rates(&gains, share, scenario.noise_power)
                    .iter()
                    .map(|r| r.1)
                    .sum()
            }
        })
        .sum()
}

/// Per-user rates under the matching sum-rate model, recomputed independently.
pub fn reference_user_rates(matching: &Matching, channel: &ChannelState, scenario: &NetworkScenario) -> Vec<f64> {
    let k_total = channel.num_subcarriers();
    let share = scenario.bs_total_power / k_total as f64;
    let mut rates = vec![0.0; channel.num_users()];
    for k in 0..k_total {
        let gains: Vec<(usize, f64)> = matching
            .pairs
            .iter()
            .filter(|p| p.1 == k)
            .map(|&(u, _)| (u, channel.gains[u][k]))
            .collect();
        if gains.is_empty() {
            continue;
        }
        for (u, r) in downlink_member_rates(&gains, share, scenario.noise_power) {
            rates[u] += r;
        }
    }
    rates
}

/// Exhaustive sum-rate maximizer over every quota-feasible matching.
/// Ties go to the lexicographically smallest pair list.
pub fn brute_force_best_matching(
    channel: &ChannelState,
    scenario: &NetworkScenario,
    quotas: MatchQuotas,
    budget: &OracleBudget,
) -> Result<(Matching, f64)> {
    let (n, k) = (channel.num_users(), channel.num_subcarriers());
    budget.admit_dims(n, k)?;
    if k >= 64 {
        return Err(NomaError::BudgetExceeded {
            size: k as u128,
            limit: 63,
        });
    }
    let options: Vec<u64> = (0u64..1 << k)
        .filter(|m| m.count_ones() as usize <= quotas.user_quota)
        .collect();
    budget.admit(checked_pow(options.len() as u128, n))?;

    struct Search<'a> {
        options: &'a [u64],
        channel: &'a ChannelState,
        scenario: &'a NetworkScenario,
        quotas: MatchQuotas,
        load: Vec<usize>,
        chosen: Vec<u64>,
        best: Option<(f64, Vec<(usize, usize)>)>,
    }

    impl Search<'_> {
        fn visit(&mut self, user: usize) {
            let k = self.load.len();
            if user == self.chosen.len() {
                let pairs: Vec<(usize, usize)> = self
                    .chosen
                    .iter()
                    .enumerate()
                    .flat_map(|(u, &m)| (0..k).filter(move |s| m >> s & 1 == 1).map(move |s| (u, s)))
                    .collect();
                let m = Matching::from_pairs(pairs.iter().copied());
                let rate = reference_sum_rate(&m, self.channel, self.scenario);
                let better = match &self.best {
                    None => true,
                    Some((r, p)) => rate > *r || (rate == *r && pairs < *p),
                };
                if better {
                    self.best = Some((rate, pairs));
                }
                return;
            }
            for i in 0..self.options.len() {
                let m = self.options[i];
                if (0..k).any(|s| m >> s & 1 == 1 && self.load[s] >= self.quotas.subcarrier_quota) {
                    continue;
                }
                for s in (0..k).filter(|s| m >> s & 1 == 1) {
                    self.load[s] += 1;
                }
                self.chosen[user] = m;
                self.visit(user + 1);
                for s in (0..k).filter(|s| m >> s & 1 == 1) {
                    self.load[s] -= 1;
                }
            }
        }
    }

    let mut search = Search {
        options: &options,
        channel,
        scenario,
        quotas,
        load: vec![0; k],
        chosen: vec![0; n],
        best: None,
    };
    search.visit(0);
    let (rate, pairs) = search.best.expect("the empty matching is always feasible");
    Ok((Matching::from_pairs(pairs), rate))
}

/// Total coalition value of a partition, recomputed independently.
pub fn reference_partition_value(partition: &Partition, channel: &ChannelState, scenario: &NetworkScenario) -> f64 {
    let groups = partition.groups.len();
    let share = scenario.bs_total_power / groups as f64;
    partition
        .groups
        .iter()
        .zip(&partition.assignment)
        .map(|(members, &k)| {
            let gains: Vec<(usize, f64)> = members.iter().map(|&u| (u, channel.gains[u][k])).collect();
            downlink_member_rates(&gains, share, scenario.noise_power)
                .iter()
                .map(|r| r.1 / groups as f64)
                .sum::<f64>()
        })
        .sum()
}

/// Exhaustive placement of broadband users into the sensor-anchored groups
/// (anchors and subcarriers as chosen by [`initialize_partition`]).
pub fn brute_force_best_partition(
    users: &[UserCategory],
    scenario: &NetworkScenario,
    channel: &ChannelState,
    config: &CoalitionConfig,
    budget: &OracleBudget,
) -> Result<(Partition, f64)> {
    let base = initialize_partition(users, scenario, channel, config)?;
    let g = base.groups.len();
    let movers: Vec<usize> = (0..users.len()).filter(|&u| !users[u].is_sensor()).collect();
    budget.admit(checked_pow(g as u128, movers.len()))?;
    let anchors_only = Partition {
        groups: base.anchor.iter().map(|&s| vec![s]).collect(),
        ..base
    };

    let mut best: Option<(f64, Partition)> = None;
    let mut place = vec![0usize; movers.len()];
    loop {
        let mut p = anchors_only.clone();
        for (&u, &gi) in movers.iter().zip(&place) {
            p.groups[gi].push(u);
        }
        if p.groups.iter().all(|grp| grp.len() <= config.max_group_size) {
            for grp in &mut p.groups {
                grp.sort_unstable();
            }
            let v = reference_partition_value(&p, channel, scenario);
            if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                best = Some((v, p));
            }
        }
        // Next placement in mixed-radix order.
        let mut i = 0;
        while i < place.len() {
            place[i] += 1;
            if place[i] < g {
                break;
            }
            place[i] = 0;
            i += 1;
        }
        if i == place.len() {
            break;
        }
    }
    let (v, p) = best.ok_or(NomaError::NoCapacity(movers.first().copied().unwrap_or(0)))?;
    Ok((p, v))
}

/// Equilibrium to certify on its discretized action grid.
#[derive(Debug, Clone, Copy)]
pub enum NashInstance<'a> {
    Power {
        result: &'a PowerGameResult,
        scenario: &'a NetworkScenario,
        channel: &'a ChannelState,
        config: &'a PowerGameConfig,
    },
    Contention {
        profile: &'a ContentionProfile,
        resources: &'a ContentionResources,
        price: f64,
        w_max: usize,
    },
}

/// Uplink payoff recomputed with direct decoding-order comparisons.
fn reference_power_payoff(
    user: usize,
    powers: &[Vec<f64>],
    channel: &ChannelState,
    config: &PowerGameConfig,
    noise: f64,
) -> f64 {
    let mut rate = 0.0;
    for &k in &config.user_subcarrier_sets[user] {
        let rx = |v: usize| powers[v][k] * channel.gains[v][k];
        let own = rx(user);
        let mut later = 0.0;
        for (v, set) in config.user_subcarrier_sets.iter().enumerate() {
            if v == user || !set.contains(&k) {
                continue;
            }
            let r = rx(v);
            // Decoded after `user` iff weaker, or equally strong with a larger id.
            if r < own || (r == own && v > user) {
                later += r;
            }
        }
        rate += (1.0 + own / (noise + later)).log2();
    }
    let spent: f64 = powers[user].iter().sum();
    rate - config.price_per_watt * spent
}

/// True iff no player gains more than [`NASH_EPSILON`] by a unilateral
/// deviation anywhere on its action grid.
pub fn grid_nash_certificate(instance: NashInstance<'_>, budget: &OracleBudget) -> Result<bool> {
    match instance {
        NashInstance::Power {
            result,
            scenario,
            channel,
            config,
        } => {
            let points = config.power_grid_points;
            if points > budget.max_grid {
                return Err(NomaError::BudgetExceeded {
                    size: points as u128,
                    limit: budget.max_grid as u128,
                });
            }
            budget.admit_dims(scenario.num_users, scenario.num_subcarriers)?;
            let cap = scenario.per_user_power_budget;
            let noise = scenario.noise_power;
            let powers = &result.allocation.powers;
            for (u, set) in config.user_subcarrier_sets.iter().enumerate() {
                budget.admit(checked_pow(points as u128, set.len()))?;
                let current = reference_power_payoff(u, powers, channel, config, noise);
                let mut trial = powers.clone();
                let mut levels = vec![0usize; set.len()];
                loop {
                    if levels.iter().sum::<usize>() < points {
                        trial[u] = vec![0.0; scenario.num_subcarriers];
                        for (&k, &l) in set.iter().zip(&levels) {
                            trial[u][k] = cap * l as f64 / (points - 1) as f64;
                        }
                        if reference_power_payoff(u, &trial, channel, config, noise) > current + NASH_EPSILON {
                            return Ok(false);
                        }
                    }
                    let mut i = 0;
                    while i < levels.len() {
                        levels[i] += 1;
                        if levels[i] < points {
                            break;
                        }
                        levels[i] = 0;
                        i += 1;
                    }
                    if i == levels.len() {
                        break;
                    }
                }
            }
            Ok(true)
        }
        NashInstance::Contention {
            profile,
            resources,
            price,
            w_max,
        } => {
            if w_max > budget.max_grid {
                return Err(NomaError::BudgetExceeded {
                    size: w_max as u128,
                    limit: budget.max_grid as u128,
                });
            }
            budget.admit((profile.windows.len() as u128) * (w_max as u128))?;
            let r = (resources.num_slots * resources.num_subcarriers * resources.num_sequences) as f64;
            let utility = |user: usize, w: usize| {
                let mut clear = 1.0;
                for (m, &wm) in profile.windows.iter().enumerate() {
                    if m != user {
                        clear *= 1.0 - 1.0 / (wm as f64 * r);
                    }
                }
                clear / w as f64 - price / w as f64
            };
            for (u, &w) in profile.windows.iter().enumerate() {
                let current = utility(u, w);
                if (1..=w_max).any(|alt| utility(u, alt) > current + NASH_EPSILON) {
                    return Ok(false);
                }
            }
            Ok(true)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalition::roster;
    use crate::power::run_power_control;
    use crate::sic::PowerAllocation;

    fn scenario(n: usize, k: usize, total: f64, noise: f64) -> NetworkScenario {
        NetworkScenario {
            num_users: n,
            num_subcarriers: k,
            bs_total_power: total,
            noise_power: noise,
            ..NetworkScenario::default()
        }
    }

    #[test]
    fn one_user_two_subcarriers() {
        let ch = ChannelState::from_gains(vec![vec![0.2, 0.7]]).unwrap();
        let (m, _) = brute_force_best_matching(
            &ch,
            &scenario(1, 2, 1.0, 0.1),
            MatchQuotas::new(1, 1),
            &OracleBudget::default(),
        )
        .unwrap();
        assert_eq!(m, Matching::from_pairs([(0, 1)]));
    }

    #[test]
    fn two_by_two_hand_enumeration() {
        // Share 0.5 W per subcarrier, noise 0.1. Single-user rates log2(1 + 5 g):
        // (0,0): g=1.0 -> log2 6; (0,1): g=0.2 -> log2 2; (1,0): g=0.6 -> log2 4; (1,1): g=0.4 -> log2 3.
        // The 7 feasible matchings: {}, 4 singles, {(0,0),(1,1)} = log2 18, {(0,1),(1,0)} = log2 8.
        let ch = ChannelState::from_gains(vec![vec![1.0, 0.2], vec![0.6, 0.4]]).unwrap();
        let (m, r) = brute_force_best_matching(
            &ch,
            &scenario(2, 2, 1.0, 0.1),
            MatchQuotas::new(1, 1),
            &OracleBudget::default(),
        )
        .unwrap();
        assert_eq!(m, Matching::from_pairs([(0, 0), (1, 1)]));
        assert!((r - 18f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn budget_refusal() {
        let ch = ChannelState::from_gains(vec![vec![0.5; 4]; 6]).unwrap();
        let tight = OracleBudget {
            max_enumeration: 1000,
            ..OracleBudget::default()
        };
        assert!(matches!(
            brute_force_best_matching(&ch, &scenario(6, 4, 1.0, 0.1), MatchQuotas::new(2, 2), &tight),
            Err(NomaError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn partition_oracle_small_cases() {
        let cfg = CoalitionConfig {
            max_group_size: 3,
            ..CoalitionConfig::default()
        };
        let users = roster(2, 0, 0.0);
        let ch = ChannelState::from_gains(vec![vec![0.2, 0.9], vec![0.5, 0.4]]).unwrap();
        let sc = scenario(2, 2, 1.0, 0.1);
        let (p, _) = brute_force_best_partition(&users, &sc, &ch, &cfg, &OracleBudget::default()).unwrap();
        assert_eq!(p, initialize_partition(&users, &sc, &ch, &cfg).unwrap());

        // Two broadband users, two groups: 4 placements.
        let users = roster(2, 2, 0.0);
        let ch =
            ChannelState::from_gains(vec![vec![0.9, 0.1], vec![0.1, 0.8], vec![0.7, 0.2], vec![0.3, 0.6]]).unwrap();
        let sc = scenario(4, 2, 1.0, 0.1);
        let (p, v) = brute_force_best_partition(&users, &sc, &ch, &cfg, &OracleBudget::default()).unwrap();
        let mut best = f64::NEG_INFINITY;
        for a in 0..2 {
            for b in 0..2 {
                let mut groups = vec![vec![0], vec![1]];
                groups[a].push(2);
                groups[b].push(3);
                let q = Partition {
                    groups,
                    anchor: vec![0, 1],
                    assignment: p.assignment.clone(),
                };
                best = best.max(crate::coalition::total_value(&q, &ch, &sc).unwrap());
            }
        }
        assert!((v - best).abs() < 1e-12);
    }

    #[test]
    fn certificates() {
        let sc = NetworkScenario {
            num_users: 1,
            num_subcarriers: 1,
            per_user_power_budget: 1.0,
            noise_power: 0.1,
            ..NetworkScenario::default()
        };
        let ch = ChannelState::from_gains(vec![vec![0.4]]).unwrap();
        let cfg = PowerGameConfig::full_overlap(1, 1);
        let res = run_power_control(&sc, &ch, &cfg, &PowerAllocation::zeros(1, 1)).unwrap();
        let inst = NashInstance::Power {
            result: &res,
            scenario: &sc,
            channel: &ch,
            config: &cfg,
        };
        assert!(grid_nash_certificate(inst, &OracleBudget::default()).unwrap());

        let mut perturbed = res.clone();
        perturbed.allocation.powers[0][0] = if res.allocation.powers[0][0] > 0.0 { 0.0 } else { 1.0 };
        let inst = NashInstance::Power {
            result: &perturbed,
            scenario: &sc,
            channel: &ch,
            config: &cfg,
        };
        assert!(!grid_nash_certificate(inst, &OracleBudget::default()).unwrap());

        let resources = ContentionResources::new(1, 1, 2);
        let good = ContentionProfile::uniform(2, 1, 4);
        let inst = NashInstance::Contention {
            profile: &good,
            resources: &resources,
            price: 0.0,
            w_max: 4,
        };
        assert!(grid_nash_certificate(inst, &OracleBudget::default()).unwrap());
        let bad = ContentionProfile {
            windows: vec![1, 4],
            w_max: 4,
        };
        let inst = NashInstance::Contention {
            profile: &bad,
            resources: &resources,
            price: 0.0,
            w_max: 4,
        };
        assert!(!grid_nash_certificate(inst, &OracleBudget::default()).unwrap());
    }
}
