//! Noncooperative uplink power control.
//!
//! Each user spreads its power budget over the subcarriers it occupies and
//! earns `sum_k log2(1 + SINR_k) - price * sum_k p_k`, where `SINR_k` is its
//! uplink SIC SINR on subcarrier `k`. Users may occupy different, partially
//! overlapping subcarrier sets. Best responses are searched exhaustively over
//! a uniform per-subcarrier power grid `{0, B/(G-1), ..., B}` restricted to
//! row sums within the budget `B`, and users update in round-robin order.

use log::debug;
use serde::{Deserialize, Serialize};

use crate::error::{NomaError, Result};
use crate::scenario::{ChannelState, NetworkScenario};
use crate::sic::{uplink_sic_sinr, PowerAllocation, PowerBudget, UserMap};

/// Largest number of grid vectors a single best response may enumerate.
pub const MAX_GRID_VECTORS: u128 = 10_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerGameConfig {
    pub price_per_watt: f64,
    pub power_grid_points: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Sorted subcarrier indices occupied by each user.
    pub user_subcarrier_sets: Vec<Vec<usize>>,
}

impl PowerGameConfig {
    /// Every user occupies every subcarrier.
    pub fn full_overlap(num_users: usize, num_subcarriers: usize) -> Self {
        Self {
            price_per_watt: 1.0,
            power_grid_points: 5,
            tolerance: 1e-9,
            max_iterations: 200,
            user_subcarrier_sets: vec![(0..num_subcarriers).collect(); num_users],
        }
    }

    pub fn validate(&self, num_users: usize, num_subcarriers: usize) -> Result<()> {
        let bad = |field: &str, reason: String| NomaError::InvalidConfig {
            field: format!("power.{field}"),
            reason,
        };
        if !(self.price_per_watt.is_finite() && self.price_per_watt >= 0.0) {
            return Err(bad(
                "price_per_watt",
                format!("must be >= 0, got {}", self.price_per_watt),
            ));
        }
        if self.power_grid_points < 2 {
            return Err(bad("power_grid_points", "must be at least 2".into()));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(bad("tolerance", format!("must be > 0, got {}", self.tolerance)));
        }
        if self.user_subcarrier_sets.len() != num_users {
            return Err(bad(
                "user_subcarrier_sets",
                format!("has {} entries for {num_users} users", self.user_subcarrier_sets.len()),
            ));
        }
        for (u, set) in self.user_subcarrier_sets.iter().enumerate() {
            if set.windows(2).any(|w| w[0] >= w[1]) {
                return Err(bad(
                    "user_subcarrier_sets",
                    format!("set of user {u} must be strictly ascending"),
                ));
            }
            if let Some(&k) = set.iter().find(|&&k| k >= num_subcarriers) {
                return Err(NomaError::SubcarrierOutOfRange {
                    subcarrier: k,
                    num_subcarriers,
                });
            }
            let count = grid_vector_count(set.len(), self.power_grid_points);
            if count > MAX_GRID_VECTORS {
                return Err(bad(
                    "power_grid_points",
                    format!("user {u} would enumerate {count} grid vectors (limit {MAX_GRID_VECTORS})"),
                ));
            }
        }
        Ok(())
    }

    /// Power of grid level `level` under `budget`.
    #[inline]
    pub fn grid_power(&self, budget: f64, level: usize) -> f64 {
        budget * level as f64 / (self.power_grid_points - 1) as f64
    }

    fn occupants(&self, subcarrier: usize) -> impl Iterator<Item = usize> + '_ {
        self.user_subcarrier_sets
            .iter()
            .enumerate()
            .filter(move |(_, set)| set.binary_search(&subcarrier).is_ok())
            .map(|(u, _)| u)
    }
}

/// Number of level vectors of length `len` with level sum at most `points - 1`:
/// `C(points - 1 + len, len)`.
pub fn grid_vector_count(len: usize, points: usize) -> u128 {
    let top = points.saturating_sub(1) as u128;
    let mut c: u128 = 1;
    for i in 1..=len as u128 {
        c = c * (top + i) / i;
        if c > u128::MAX / 1024 {
            return u128::MAX;
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerGameResult {
    pub allocation: PowerAllocation,
    pub payoffs: Vec<f64>,
    pub iterations_used: usize,
    pub converged: bool,
    /// Largest per-entry power change in each sweep.
    pub trace: Vec<f64>,
    /// Every user's payoff after each sweep.
    pub payoff_trace: Vec<Vec<f64>>,
}

fn subcarrier_rate(
    user: usize,
    subcarrier: usize,
    own_power: f64,
    allocation: &PowerAllocation,
    channel: &ChannelState,
    config: &PowerGameConfig,
    noise: f64,
) -> Result<f64> {
    let mut gains = UserMap::new();
    let mut powers = UserMap::new();
    for v in config.occupants(subcarrier) {
        gains.insert(v, channel.gain(v, subcarrier));
        let p = if v == user {
            own_power
        } else {
            allocation.powers[v][subcarrier]
        };
        powers.insert(v, p);
    }
    Ok((1.0 + uplink_sic_sinr(&gains, &powers, noise, user)?).log2())
}

/// Rate minus linear power cost for `user` under `allocation`.
pub fn user_payoff(
    user: usize,
    allocation: &PowerAllocation,
    channel: &ChannelState,
    config: &PowerGameConfig,
    noise: f64,
) -> Result<f64> {
    let set = &config.user_subcarrier_sets[user];
    if set.is_empty() {
        debug!("user {user} occupies no subcarrier; payoff is 0");
        return Ok(0.0);
    }
    let mut rate = 0.0;
    for &k in set {
        rate += subcarrier_rate(user, k, allocation.powers[user][k], allocation, channel, config, noise)?;
    }
    let spent: f64 = allocation.powers[user].iter().sum();
    Ok(rate - config.price_per_watt * spent)
}

/// Best grid response of `user` with everyone else held at `others`.
///
/// The payoff separates across subcarriers once the others are fixed, so the
/// per-subcarrier rate at every grid level is tabulated first and candidate
/// vectors are scored from the table. Candidates are visited in ascending
/// lexicographic order and only a strictly better one replaces the
/// incumbent, so ties resolve to the lexicographically smallest vector.
pub fn best_response(
    user: usize,
    others: &PowerAllocation,
    channel: &ChannelState,
    config: &PowerGameConfig,
    noise: f64,
    budget: f64,
) -> Result<Vec<f64>> {
    let num_subcarriers = channel.num_subcarriers();
    let set = &config.user_subcarrier_sets[user];
    if set.is_empty() {
        return Ok(vec![0.0; num_subcarriers]);
    }
    let points = config.power_grid_points;
    let top = points - 1;
    let mut table = Vec::with_capacity(set.len());
    for &k in set {
        let mut row = Vec::with_capacity(points);
        for level in 0..points {
            let p = config.grid_power(budget, level);
            row.push(subcarrier_rate(user, k, p, others, channel, config, noise)?);
        }
        table.push(row);
    }

    let score = |levels: &[usize]| -> f64 {
        let rate: f64 = levels.iter().zip(&table).map(|(&l, row)| row[l]).sum();
        let spent: f64 = levels.iter().map(|&l| config.grid_power(budget, l)).sum();
        rate - config.price_per_watt * spent
    };

    let mut levels = vec![0usize; set.len()];
    let mut best_levels = levels.clone();
    let mut best = score(&levels);
    // Odometer over level vectors in lexicographic order, pruned to sum <= top.
    loop {
        let mut pos = set.len();
        let mut advanced = false;
        while pos > 0 {
            pos -= 1;
            let used: usize = levels[..pos].iter().sum();
            if levels[pos] < top - used {
                levels[pos] += 1;
                for l in &mut levels[pos + 1..] {
                    *l = 0;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            break;
        }
        let value = score(&levels);
        if value > best {
            best = value;
            best_levels.copy_from_slice(&levels);
        }
    }

    let mut out = vec![0.0; num_subcarriers];
    for (&k, &l) in set.iter().zip(&best_levels) {
        out[k] = config.grid_power(budget, l);
    }
    Ok(out)
}

fn check_init(init: &PowerAllocation, scenario: &NetworkScenario, config: &PowerGameConfig) -> Result<()> {
    if init.num_users() != scenario.num_users {
        return Err(NomaError::Infeasible(format!(
            "initial allocation has {} users, scenario has {}",
            init.num_users(),
            scenario.num_users
        )));
    }
    init.validate(
        scenario.num_subcarriers,
        PowerBudget::PerUser(scenario.per_user_power_budget),
    )?;
    for (u, row) in init.powers.iter().enumerate() {
        let set = &config.user_subcarrier_sets[u];
        if let Some((k, _)) = row
            .iter()
            .enumerate()
            .find(|(k, p)| **p > 0.0 && set.binary_search(k).is_err())
        {
            return Err(NomaError::Infeasible(format!(
                "user {u} transmits on unoccupied subcarrier {k}"
            )));
        }
    }
    Ok(())
}

/// Round-robin best-response dynamics from `init`.
pub fn run_power_control(
    scenario: &NetworkScenario,
    channel: &ChannelState,
    config: &PowerGameConfig,
    init: &PowerAllocation,
) -> Result<PowerGameResult> {
    scenario.validate()?;
    channel.check_dimensions(scenario)?;
    config.validate(scenario.num_users, scenario.num_subcarriers)?;
    check_init(init, scenario, config)?;

    let noise = scenario.noise_power;
    let budget = scenario.per_user_power_budget;
    let mut allocation = init.clone();
    let mut trace = Vec::new();
    let mut payoff_trace = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iterations {
        let mut max_change: f64 = 0.0;
        for u in 0..scenario.num_users {
            let response = best_response(u, &allocation, channel, config, noise, budget)?;
            for (old, new) in allocation.powers[u].iter().zip(&response) {
                max_change = max_change.max((old - new).abs());
            }
            allocation.powers[u] = response;
        }
        trace.push(max_change);
        payoff_trace.push(payoffs(&allocation, channel, config, noise)?);
        if max_change < config.tolerance {
            converged = true;
            break;
        }
    }

    Ok(PowerGameResult {
        payoffs: payoffs(&allocation, channel, config, noise)?,
        allocation,
        iterations_used: trace.len(),
        converged,
        trace,
        payoff_trace,
    })
}

fn payoffs(
    allocation: &PowerAllocation,
    channel: &ChannelState,
    config: &PowerGameConfig,
    noise: f64,
) -> Result<Vec<f64>> {
    (0..allocation.num_users())
        .map(|u| user_payoff(u, allocation, channel, config, noise))
        .collect()
}
