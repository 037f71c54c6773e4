//! Downlink power-domain user grouping as a strategic-form coalition game.
//!
//! Sensors are pinned one per group on orthogonal subcarriers, so the group
//! count (and with it the rate normalization `1/G`) never changes. Broadband
//! users then switch selfishly between groups until no one gains by moving.
//! Within a group the subcarrier budget `bs_total_power / G` is split by
//! inverse gain and decoded with downlink SIC.

use serde::{Deserialize, Serialize};

use crate::error::{NomaError, Result};
use crate::scenario::{ChannelState, NetworkScenario};
use crate::sic::{coalition_user_rate, downlink_sinrs, inverse_gain_power_split, UserMap};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UserKind {
    Sensor,
    Broadband,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserCategory {
    pub kind: UserKind,
    /// QoS floor in bits/s/Hz; always 0 for broadband users.
    pub min_rate: f64,
}

impl UserCategory {
    pub fn sensor(min_rate: f64) -> Self {
        Self {
            kind: UserKind::Sensor,
            min_rate,
        }
    }

    pub fn broadband() -> Self {
        Self {
            kind: UserKind::Broadband,
            min_rate: 0.0,
        }
    }

    pub fn is_sensor(&self) -> bool {
        self.kind == UserKind::Sensor
    }
}

/// Roster with users `0..sensors` as sensors and the rest broadband.
pub fn roster(sensors: usize, broadband: usize, sensor_min_rate: f64) -> Vec<UserCategory> {
    (0..sensors)
        .map(|_| UserCategory::sensor(sensor_min_rate))
        .chain((0..broadband).map(|_| UserCategory::broadband()))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoalitionConfig {
    pub max_group_size: usize,
    pub max_rounds: usize,
    pub improvement_epsilon: f64,
}

impl Default for CoalitionConfig {
    fn default() -> Self {
        Self {
            max_group_size: 2,
            max_rounds: 100,
            improvement_epsilon: 1e-9,
        }
    }
}

impl CoalitionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_group_size == 0 {
            return Err(NomaError::InvalidConfig {
                field: "coalition.max_group_size".into(),
                reason: "must be at least 1".into(),
            });
        }
        if !(self.improvement_epsilon.is_finite() && self.improvement_epsilon > 0.0) {
            return Err(NomaError::InvalidConfig {
                field: "coalition.improvement_epsilon".into(),
                reason: format!("must be > 0, got {}", self.improvement_epsilon),
            });
        }
        Ok(())
    }
}

/// Sensor-anchored groups. Group `i` holds sensor `anchor[i]` and sits on
/// subcarrier `assignment[i]`; members are kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    pub groups: Vec<Vec<usize>>,
    pub anchor: Vec<usize>,
    pub assignment: Vec<usize>,
}

impl Partition {
    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_of(&self, user: usize) -> Option<usize> {
        self.groups.iter().position(|g| g.binary_search(&user).is_ok())
    }

    /// Checks disjointness, coverage, one sensor per group and distinct subcarriers.
    pub fn check(&self, users: &[UserCategory], num_subcarriers: usize) -> Result<()> {
        let broken = |why: String| Err(NomaError::Infeasible(format!("partition: {why}")));
        let g = self.groups.len();
        if self.anchor.len() != g || self.assignment.len() != g {
            return broken("group, anchor and assignment lengths differ".into());
        }
        let mut seen = vec![false; users.len()];
        for (i, group) in self.groups.iter().enumerate() {
            for &u in group {
                if u >= users.len() || seen[u] {
                    return broken(format!("user {u} missing from roster or repeated"));
                }
                seen[u] = true;
            }
            let sensors: Vec<usize> = group.iter().copied().filter(|&u| users[u].is_sensor()).collect();
            if sensors != [self.anchor[i]] {
                return broken(format!("group {i} must contain exactly its anchor sensor"));
            }
            if self.assignment[i] >= num_subcarriers {
                return broken(format!("group {i} on invalid subcarrier"));
            }
            if self.assignment[..i].contains(&self.assignment[i]) {
                return broken(format!("subcarrier {} assigned twice", self.assignment[i]));
            }
        }
        if let Some(u) = seen.iter().position(|s| !s) {
            return broken(format!("user {u} is in no group"));
        }
        Ok(())
    }

    fn check_group(&self, group: usize) -> Result<()> {
        if group < self.groups.len() {
            Ok(())
        } else {
            Err(NomaError::ForeignGroup(group))
        }
    }
}

/// Rates of `members` sharing `subcarrier` when the band is split into `groups` groups.
fn member_rates(
    members: &[usize],
    subcarrier: usize,
    groups: usize,
    channel: &ChannelState,
    scenario: &NetworkScenario,
) -> Result<UserMap> {
    if members.is_empty() {
        return Ok(UserMap::new());
    }
    let gains: UserMap = members.iter().map(|&u| (u, channel.gain(u, subcarrier))).collect();
    let powers = inverse_gain_power_split(&gains, scenario.downlink_share(groups))?;
    downlink_sinrs(&gains, &powers, scenario.noise_power)?
        .into_iter()
        .map(|(u, s)| Ok((u, coalition_user_rate(s, groups)?)))
        .collect()
}

/// Every user's rate under `partition`, indexed by user id.
pub fn partition_rates(partition: &Partition, channel: &ChannelState, scenario: &NetworkScenario) -> Result<Vec<f64>> {
    let mut rates = vec![0.0; channel.num_users()];
    for (members, &k) in partition.groups.iter().zip(&partition.assignment) {
        for (u, r) in member_rates(members, k, partition.num_groups(), channel, scenario)? {
            rates[u] = r;
        }
    }
    Ok(rates)
}

/// Sum of member rates of `group`. Other groups enter only through the group count.
pub fn coalition_value(
    group: usize,
    partition: &Partition,
    channel: &ChannelState,
    scenario: &NetworkScenario,
) -> Result<f64> {
    partition.check_group(group)?;
    let rates = member_rates(
        &partition.groups[group],
        partition.assignment[group],
        partition.num_groups(),
        channel,
        scenario,
    )?;
    Ok(rates.values().sum())
}

pub fn total_value(partition: &Partition, channel: &ChannelState, scenario: &NetworkScenario) -> Result<f64> {
    (0..partition.num_groups())
        .map(|g| coalition_value(g, partition, channel, scenario))
        .sum()
}

fn validate_roster(users: &[UserCategory], scenario: &NetworkScenario, channel: &ChannelState) -> Result<()> {
    scenario.validate()?;
    channel.check_dimensions(scenario)?;
    if users.len() != scenario.num_users {
        return Err(NomaError::InvalidConfig {
            field: "coalition.roster".into(),
            reason: format!("{} categories for {} users", users.len(), scenario.num_users),
        });
    }
    if let Some(u) = users
        .iter()
        .find(|u| !(u.min_rate.is_finite() && u.min_rate >= 0.0) || (!u.is_sensor() && u.min_rate != 0.0))
    {
        return Err(NomaError::InvalidConfig {
            field: "coalition.min_rate".into(),
            reason: format!("invalid QoS floor {} for {:?}", u.min_rate, u.kind),
        });
    }
    Ok(())
}

/// Sensors alone on distinct subcarriers, then broadband users placed greedily.
///
/// Sensors pick subcarriers in descending order of their best gain, each
/// taking its highest-gain unclaimed subcarrier. Broadband users (ascending
/// id) join the non-full group whose subcarrier gives them the highest
/// interference-free rate, preferring groups whose anchor keeps its QoS
/// floor after the join.
pub fn initialize_partition(
    users: &[UserCategory],
    scenario: &NetworkScenario,
    channel: &ChannelState,
    config: &CoalitionConfig,
) -> Result<Partition> {
    validate_roster(users, scenario, channel)?;
    config.validate()?;
    let sensors: Vec<usize> = (0..users.len()).filter(|&u| users[u].is_sensor()).collect();
    if sensors.is_empty() {
        return Err(NomaError::NoSensor);
    }
    let k_total = channel.num_subcarriers();
    if sensors.len() > k_total {
        return Err(NomaError::TooManySensors {
            sensors: sensors.len(),
            subcarriers: k_total,
        });
    }

    let best_gain = |u: usize| channel.gains[u].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut pick_order = sensors.clone();
    pick_order.sort_by(|&a, &b| best_gain(b).total_cmp(&best_gain(a)).then(a.cmp(&b)));
    let mut claimed = vec![false; k_total];
    let mut subcarrier_of = vec![usize::MAX; users.len()];
    for &s in &pick_order {
        let k = (0..k_total)
            .filter(|&k| !claimed[k])
            .max_by(|&a, &b| channel.gain(s, a).total_cmp(&channel.gain(s, b)).then(b.cmp(&a)))
            .expect("at least one unclaimed subcarrier");
        claimed[k] = true;
        subcarrier_of[s] = k;
    }

    let mut partition = Partition {
        groups: sensors.iter().map(|&s| vec![s]).collect(),
        anchor: sensors.clone(),
        assignment: sensors.iter().map(|&s| subcarrier_of[s]).collect(),
    };
    let g = partition.num_groups();

    for u in (0..users.len()).filter(|&u| !users[u].is_sensor()) {
        let mut best: Option<(bool, f64, usize)> = None;
        for i in 0..g {
            if partition.groups[i].len() >= config.max_group_size {
                continue;
            }
            let mut joined = partition.groups[i].clone();
            insert_sorted(&mut joined, u);
            let rates = member_rates(&joined, partition.assignment[i], g, channel, scenario)?;
            let anchor = partition.anchor[i];
            let qos_ok = rates[&anchor] >= users[anchor].min_rate;
            let standalone = channel.gain(u, partition.assignment[i]);
            let better = match best {
                None => true,
                Some((b_ok, b_val, _)) => (qos_ok && !b_ok) || (qos_ok == b_ok && standalone > b_val),
            };
            if better {
                best = Some((qos_ok, standalone, i));
            }
        }
        let (qos_ok, _, i) = best.ok_or(NomaError::NoCapacity(u))?;
        if !qos_ok {
            log::warn!("broadband user {u} placed in group {i} below its anchor's QoS floor");
        }
        insert_sorted(&mut partition.groups[i], u);
    }
    Ok(partition)
}

fn insert_sorted(group: &mut Vec<usize>, user: usize) {
    if let Err(pos) = group.binary_search(&user) {
        group.insert(pos, user);
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchDecision {
    pub accept: bool,
    /// Mover's rate after the move minus its rate before.
    pub delta: f64,
}

/// Decides whether broadband `user` should move from `from` to `to`.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_switch(
    user: usize,
    from: usize,
    to: usize,
    partition: &Partition,
    users: &[UserCategory],
    channel: &ChannelState,
    scenario: &NetworkScenario,
    config: &CoalitionConfig,
) -> Result<SwitchDecision> {
    partition.check_group(from)?;
    partition.check_group(to)?;
    if users.get(user).is_some_and(|c| c.is_sensor()) {
        return Err(NomaError::SensorCannotMove(user));
    }
    if partition.groups[from].binary_search(&user).is_err() {
        return Err(NomaError::NotInGroup { user, group: from });
    }
    if from == to {
        return Err(NomaError::Infeasible(format!(
            "user {user} switching to its own group {to}"
        )));
    }
    let g = partition.num_groups();
    let before = member_rates(
        &partition.groups[from],
        partition.assignment[from],
        g,
        channel,
        scenario,
    )?[&user];
    let mut joined = partition.groups[to].clone();
    insert_sorted(&mut joined, user);
    let after_rates = member_rates(&joined, partition.assignment[to], g, channel, scenario)?;
    let delta = after_rates[&user] - before;

    let fits = joined.len() <= config.max_group_size;
    let anchor = partition.anchor[to];
    let anchor_ok = after_rates[&anchor] >= users[anchor].min_rate;
    Ok(SwitchDecision {
        accept: fits && anchor_ok && delta > config.improvement_epsilon,
        delta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwitchRecord {
    pub round: usize,
    pub user: usize,
    pub from: usize,
    pub to: usize,
    pub delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoalitionOutcome {
    pub partition: Partition,
    pub history: Vec<SwitchRecord>,
    /// Passes over the broadband users that were executed.
    pub rounds: usize,
    /// True when the last pass made no switch.
    pub stable: bool,
}

/// Moves `user` between groups in place.
pub fn execute_switch(partition: &mut Partition, user: usize, from: usize, to: usize) {
    partition.groups[from].retain(|&v| v != user);
    insert_sorted(&mut partition.groups[to], user);
}

/// Selfish switch dynamics until a pass makes no move or `max_rounds` passes ran.
pub fn run_coalition_formation(
    users: &[UserCategory],
    scenario: &NetworkScenario,
    channel: &ChannelState,
    config: &CoalitionConfig,
) -> Result<CoalitionOutcome> {
    let mut partition = initialize_partition(users, scenario, channel, config)?;
    let movers: Vec<usize> = (0..users.len()).filter(|&u| !users[u].is_sensor()).collect();
    let mut history = Vec::new();
    let mut rounds = 0;
    let mut stable = false;

    while rounds < config.max_rounds {
        rounds += 1;
        let mut moved = false;
        for &u in &movers {
            let from = partition.group_of(u).expect("every user is placed");
            let mut best: Option<(usize, f64)> = None;
            for to in (0..partition.num_groups()).filter(|&to| to != from) {
                let d = evaluate_switch(u, from, to, &partition, users, channel, scenario, config)?;
                if d.accept && best.is_none_or(|(_, bd)| d.delta > bd) {
                    best = Some((to, d.delta));
                }
            }
            if let Some((to, delta)) = best {
                execute_switch(&mut partition, u, from, to);
                history.push(SwitchRecord {
                    round: rounds,
                    user: u,
                    from,
                    to,
                    delta,
                });
                moved = true;
            }
        }
        if !moved {
            stable = true;
            break;
        }
    }
    Ok(CoalitionOutcome {
        partition,
        history,
        rounds,
        stable,
    })
}
