//! SINR and achievable rates under successive interference cancellation.
//!
//! Downlink (superposition coding at the BS): a receiver first decodes and
//! removes the signals of users weaker than itself, so its interference is
//! the power intended for users *ahead* of it in [`sic_order`](crate::scenario::sic_order)
//! (stronger gains), seen through its own gain:
//!
//! `SINR_t = p_t g_t / (g_t * sum_{j ahead of t} p_j + noise)`
//!
//! Uplink (multiple access): the BS decodes in descending received power
//! `p g` and cancels each decoded user, so a user sees only the users decoded
//! after it:
//!
//! `SINR_t = p_t g_t / (noise + sum_{j decoded after t} p_j g_j)`
//!
//! All rates are in bits/s/Hz (log base 2).

use std::collections::BTreeMap;

use crate::error::{NomaError, Result};
use crate::scenario::{descending_then_id, ChannelState};

/// Per-user values on one subcarrier (gain or power), keyed by user id.
pub type UserMap = BTreeMap<usize, f64>;

fn check_noise(noise: f64) -> Result<()> {
    if noise.is_finite() && noise > 0.0 {
        Ok(())
    } else {
        Err(NomaError::NonPositiveNoise(noise))
    }
}

fn power_of(powers: &UserMap, user: usize) -> Result<f64> {
    powers.get(&user).copied().ok_or(NomaError::MissingUser(user))
}

/// Downlink SINR of `target` on one subcarrier.
pub fn downlink_sic_sinr(gains: &UserMap, powers: &UserMap, noise: f64, target: usize) -> Result<f64> {
    check_noise(noise)?;
    let g_t = *gains.get(&target).ok_or(NomaError::MissingUser(target))?;
    let p_t = power_of(powers, target)?;
    let mut ahead = 0.0;
    for (&j, &g_j) in gains {
        if j != target && descending_then_id((j, g_j), (target, g_t)).is_lt() {
            ahead += power_of(powers, j)?;
        }
    }
    Ok(p_t * g_t / (g_t * ahead + noise))
}

/// Uplink SINR of `target` on one subcarrier.
pub fn uplink_sic_sinr(gains: &UserMap, powers: &UserMap, noise: f64, target: usize) -> Result<f64> {
    check_noise(noise)?;
    let g_t = *gains.get(&target).ok_or(NomaError::MissingUser(target))?;
    let rx_t = power_of(powers, target)? * g_t;
    let mut after = 0.0;
    for (&j, &g_j) in gains {
        if j == target {
            continue;
        }
        let rx_j = power_of(powers, j)? * g_j;
        if descending_then_id((j, rx_j), (target, rx_t)).is_gt() {
            after += rx_j;
        }
    }
    Ok(rx_t / (noise + after))
}

/// Downlink SINR of every user on one subcarrier in a single pass.
pub fn downlink_sinrs(gains: &UserMap, powers: &UserMap, noise: f64) -> Result<UserMap> {
    check_noise(noise)?;
    let mut order: Vec<(usize, f64)> = gains.iter().map(|(&u, &g)| (u, g)).collect();
    order.sort_by(|a, b| descending_then_id(*a, *b));
    let mut out = UserMap::new();
    let mut ahead = 0.0;
    for (u, g) in order {
        let p = power_of(powers, u)?;
        out.insert(u, p * g / (g * ahead + noise));
        ahead += p;
    }
    Ok(out)
}

/// Uplink SINR of every user on one subcarrier in a single pass.
pub fn uplink_sinrs(gains: &UserMap, powers: &UserMap, noise: f64) -> Result<UserMap> {
    check_noise(noise)?;
    let mut order = Vec::with_capacity(gains.len());
    for (&u, &g) in gains {
        order.push((u, power_of(powers, u)? * g));
    }
    order.sort_by(|a, b| descending_then_id(*a, *b));
    let mut out = UserMap::new();
    let mut after = 0.0;
    for &(u, rx) in order.iter().rev() {
        out.insert(u, rx / (noise + after));
        after += rx;
    }
    Ok(out)
}

/// `(1/used) * log2(1 + sinr)`: the per-user rate when `used` subcarriers
/// share the band.
pub fn coalition_user_rate(sinr: f64, used_subcarriers: usize) -> Result<f64> {
    if used_subcarriers == 0 {
        return Err(NomaError::NoUsedSubcarriers);
    }
    Ok((1.0 + sinr).log2() / used_subcarriers as f64)
}

/// Splits a subcarrier budget with weights proportional to `1/g`, so weaker
/// users get more power. The weakest user (last in SIC order) absorbs the
/// rounding remainder so the split sums to `budget`.
pub fn inverse_gain_power_split(gains: &UserMap, budget: f64) -> Result<UserMap> {
    if !(budget.is_finite() && budget > 0.0) {
        return Err(NomaError::NonPositiveBudget(budget));
    }
    if gains.is_empty() {
        return Err(NomaError::EmptyUserSet);
    }
    if let Some((&u, _)) = gains.iter().find(|(_, &g)| !(g.is_finite() && g > 0.0)) {
        return Err(NomaError::ZeroGain(u));
    }
    let inverse_total: f64 = gains.values().map(|g| 1.0 / g).sum();
    let weakest = gains
        .iter()
        .map(|(&u, &g)| (u, g))
        .max_by(|a, b| descending_then_id(*a, *b))
        .map(|(u, _)| u)
        .expect("nonempty");
    let mut split = UserMap::new();
    let mut assigned = 0.0;
    for (&u, &g) in gains {
        if u != weakest {
            let p = budget * (1.0 / g) / inverse_total;
            assigned += p;
            split.insert(u, p);
        }
    }
    split.insert(weakest, (budget - assigned).max(0.0));
    Ok(split)
}

/// Transmit powers `powers[user][subcarrier]` in watts.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    pub powers: Vec<Vec<f64>>,
}

/// Which budget a [`PowerAllocation`] is checked against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerBudget {
    /// Every user row sums to at most this value.
    PerUser(f64),
    /// The whole table sums to at most this value.
    Total(f64),
}

impl PowerAllocation {
    pub fn zeros(num_users: usize, num_subcarriers: usize) -> Self {
        Self {
            powers: vec![vec![0.0; num_subcarriers]; num_users],
        }
    }

    pub fn num_users(&self) -> usize {
        self.powers.len()
    }

    pub fn user_total(&self, user: usize) -> f64 {
        self.powers[user].iter().sum()
    }

    /// Checks nonnegativity, finiteness, shape and the budget. A relative
    /// slack of 1e-12 absorbs rounding in grid powers.
    pub fn validate(&self, num_subcarriers: usize, budget: PowerBudget) -> Result<()> {
        for (u, row) in self.powers.iter().enumerate() {
            if row.len() != num_subcarriers {
                return Err(NomaError::Infeasible(format!(
                    "user {u} has {} entries, expected {num_subcarriers}",
                    row.len()
                )));
            }
            if let Some(p) = row.iter().find(|p| !p.is_finite() || **p < 0.0) {
                return Err(NomaError::Infeasible(format!("user {u} has power {p}")));
            }
        }
        match budget {
            PowerBudget::PerUser(cap) => {
                for u in 0..self.num_users() {
                    let total = self.user_total(u);
                    if total > cap * (1.0 + 1e-12) {
                        return Err(NomaError::Infeasible(format!(
                            "user {u} transmits {total} W over budget {cap} W"
                        )));
                    }
                }
            }
            PowerBudget::Total(cap) => {
                let total: f64 = self.powers.iter().flatten().sum();
                if total > cap * (1.0 + 1e-12) {
                    return Err(NomaError::Infeasible(format!(
                        "total power {total} W over budget {cap} W"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Rates of every user and every (user, subcarrier) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub per_user_rate: Vec<f64>,
    /// `per_pair_rate[user][subcarrier]`, zero where the user is absent.
    pub per_pair_rate: Vec<Vec<f64>>,
    /// Number of subcarriers carrying at least one user.
    pub used_subcarrier_count: usize,
}

impl RateReport {
    pub fn sum_rate(&self) -> f64 {
        self.per_user_rate.iter().sum()
    }

    fn from_pairs(per_pair_rate: Vec<Vec<f64>>, used_subcarrier_count: usize) -> Self {
        let per_user_rate = per_pair_rate.iter().map(|row| row.iter().sum()).collect();
        Self {
            per_user_rate,
            per_pair_rate,
            used_subcarrier_count,
        }
    }
}

/// Downlink rates when `subcarrier_users[k]` share subcarrier `k`, each
/// nonempty subcarrier gets `per_subcarrier_budget` split by inverse gain,
/// and every rate is divided by `normalization`.
pub fn downlink_rate_report(
    channel: &ChannelState,
    subcarrier_users: &[Vec<usize>],
    per_subcarrier_budget: f64,
    noise: f64,
    normalization: usize,
) -> Result<RateReport> {
    let mut per_pair = vec![vec![0.0; channel.num_subcarriers()]; channel.num_users()];
    let mut used = 0;
    for (k, users) in subcarrier_users.iter().enumerate() {
        if users.is_empty() {
            continue;
        }
        used += 1;
        let gains: UserMap = users.iter().map(|&u| (u, channel.gain(u, k))).collect();
        let powers = inverse_gain_power_split(&gains, per_subcarrier_budget)?;
        for (u, sinr) in downlink_sinrs(&gains, &powers, noise)? {
            per_pair[u][k] = coalition_user_rate(sinr, normalization)?;
        }
    }
    Ok(RateReport::from_pairs(per_pair, used))
}

/// Uplink rates for an allocation; a user is present on subcarrier `k`
/// when its power there is positive.
#[allow(clippy::needless_range_loop)]
pub fn uplink_rate_report(channel: &ChannelState, allocation: &PowerAllocation, noise: f64) -> Result<RateReport> {
    let mut per_pair = vec![vec![0.0; channel.num_subcarriers()]; channel.num_users()];
    let mut used = 0;
    for k in 0..channel.num_subcarriers() {
        let gains: UserMap = (0..allocation.num_users())
            .filter(|&u| allocation.powers[u][k] > 0.0)
            .map(|u| (u, channel.gain(u, k)))
            .collect();
        if gains.is_empty() {
            continue;
        }
        used += 1;
        let powers: UserMap = gains.keys().map(|&u| (u, allocation.powers[u][k])).collect();
        for (u, sinr) in uplink_sinrs(&gains, &powers, noise)? {
            per_pair[u][k] = (1.0 + sinr).log2();
        }
    }
    Ok(RateReport::from_pairs(per_pair, used))
}
