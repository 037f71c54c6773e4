//! Downlink code-domain user/subcarrier assignment as a many-to-many matching.
//!
//! 1. Preference lists: users rank subcarriers by interference-free rate,
//!    subcarriers rank users by gain.
//! 2. User-proposing deferred acceptance under quotas gives an initial matching.
//! 3. Swap-blocking pairs (and single-sided moves into vacant quota) are
//!    executed while they strictly raise the system sum-rate without hurting
//!    either mover. The sum-rate is bounded, so step 3 terminates.
//!
//! Codebooks enter only through the quotas: a user spreads over `d_v`
//! subcarriers and a subcarrier carries at most `d_f` users.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{NomaError, Result};
use crate::scenario::{descending_then_id, ChannelState, NetworkScenario};
use crate::sic::{downlink_sinrs, inverse_gain_power_split, UserMap};

/// Minimum sum-rate gain for a swap to count as blocking.
pub const SWAP_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Codebook {
    pub codebook_count: usize,
    pub codewords_per_book: usize,
    pub codeword_length: usize,
    pub nonzeros_per_codeword: usize,
}

impl Codebook {
    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, reason: &str| NomaError::InvalidConfig {
            field: format!("codebook.{field}"),
            reason: reason.into(),
        };
        if self.codebook_count == 0 {
            return Err(bad("codebook_count", "must be at least 1"));
        }
        if !self.codewords_per_book.is_power_of_two() {
            return Err(bad("codewords_per_book", "must be a power of two"));
        }
        if self.nonzeros_per_codeword == 0 || self.nonzeros_per_codeword > self.codeword_length {
            return Err(bad("nonzeros_per_codeword", "must lie in 1..=codeword_length"));
        }
        Ok(())
    }

    /// Payload bits carried by one codeword.
    pub fn bits_per_codeword(&self) -> u32 {
        self.codewords_per_book.trailing_zeros()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchQuotas {
    /// Subcarriers per user (d_v).
    pub user_quota: usize,
    /// Users per subcarrier (d_f).
    pub subcarrier_quota: usize,
}

impl MatchQuotas {
    pub fn new(user_quota: usize, subcarrier_quota: usize) -> Self {
        Self {
            user_quota,
            subcarrier_quota,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.user_quota == 0 || self.subcarrier_quota == 0 {
            return Err(NomaError::InvalidConfig {
                field: "matching.quotas".into(),
                reason: "user_quota and subcarrier_quota must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// `K * d_f / d_v` users served per `K` subcarriers.
    pub fn overloading_factor(&self) -> f64 {
        self.subcarrier_quota as f64 / self.user_quota as f64
    }
}

/// Set of (user, subcarrier) pairs.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Matching {
    pub pairs: BTreeSet<(usize, usize)>,
}

impl Matching {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self {
            pairs: pairs.into_iter().collect(),
        }
    }

    pub fn contains(&self, user: usize, subcarrier: usize) -> bool {
        self.pairs.contains(&(user, subcarrier))
    }

    pub fn users_on(&self, subcarrier: usize) -> Vec<usize> {
        self.pairs.iter().filter(|p| p.1 == subcarrier).map(|p| p.0).collect()
    }

    pub fn subcarriers_of(&self, user: usize) -> Vec<usize> {
        self.pairs.range((user, 0)..(user + 1, 0)).map(|p| p.1).collect()
    }

    /// Users on each of `num_subcarriers` subcarriers, ascending.
    pub fn by_subcarrier(&self, num_subcarriers: usize) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); num_subcarriers];
        for &(u, k) in &self.pairs {
            out[k].push(u);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn check(&self, num_users: usize, num_subcarriers: usize, quotas: MatchQuotas) -> Result<()> {
        let mut per_user = vec![0usize; num_users];
        let mut per_sc = vec![0usize; num_subcarriers];
        for &(u, k) in &self.pairs {
            if u >= num_users {
                return Err(NomaError::UserOutOfRange { user: u, num_users });
            }
            if k >= num_subcarriers {
                return Err(NomaError::SubcarrierOutOfRange {
                    subcarrier: k,
                    num_subcarriers,
                });
            }
            per_user[u] += 1;
            per_sc[k] += 1;
        }
        if let Some(u) = per_user.iter().position(|&c| c > quotas.user_quota) {
            return Err(NomaError::Infeasible(format!("user {u} exceeds its quota")));
        }
        if let Some(k) = per_sc.iter().position(|&c| c > quotas.subcarrier_quota) {
            return Err(NomaError::Infeasible(format!("subcarrier {k} exceeds its quota")));
        }
        Ok(())
    }
}

/// Complete preference lists, most preferred first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Preferences {
    pub user_prefs: Vec<Vec<usize>>,
    pub subcarrier_prefs: Vec<Vec<usize>>,
}

pub fn build_preference_lists(
    channel: &ChannelState,
    scenario: &NetworkScenario,
    quotas: MatchQuotas,
) -> Result<Preferences> {
    scenario.validate()?;
    channel.check_dimensions(scenario)?;
    quotas.validate()?;
    let (n, k) = (channel.num_users(), channel.num_subcarriers());
    let share = scenario.downlink_share(k);
    let user_prefs = (0..n)
        .map(|u| {
            let mut keyed: Vec<(usize, f64)> = (0..k)
                .map(|s| (s, (1.0 + share * channel.gain(u, s) / scenario.noise_power).log2()))
                .collect();
            keyed.sort_by(|a, b| descending_then_id(*a, *b));
            keyed.into_iter().map(|(s, _)| s).collect()
        })
        .collect();
    let subcarrier_prefs = (0..k)
        .map(|s| {
            let mut keyed: Vec<(usize, f64)> = (0..n).map(|u| (u, channel.gain(u, s))).collect();
            keyed.sort_by(|a, b| descending_then_id(*a, *b));
            keyed.into_iter().map(|(u, _)| u).collect()
        })
        .collect();
    Ok(Preferences {
        user_prefs,
        subcarrier_prefs,
    })
}

/// User-proposing many-to-many deferred acceptance.
///
/// Every round, each user with spare quota proposes to the next subcarrier on
/// its list; each subcarrier keeps its `subcarrier_quota` favourite holders
/// and proposers and rejects the rest. Stops when nobody proposes.
pub fn deferred_acceptance(prefs: &Preferences, quotas: MatchQuotas) -> Matching {
    let n = prefs.user_prefs.len();
    let k = prefs.subcarrier_prefs.len();
    let mut rank = vec![vec![usize::MAX; n]; k];
    for (s, list) in prefs.subcarrier_prefs.iter().enumerate() {
        for (r, &u) in list.iter().enumerate() {
            rank[s][u] = r;
        }
    }
    let mut next = vec![0usize; n];
    let mut held_count = vec![0usize; n];
    let mut holders: Vec<Vec<usize>> = vec![Vec::new(); k];

    loop {
        let mut proposals: Vec<Vec<usize>> = vec![Vec::new(); k];
        let mut any = false;
        for u in 0..n {
            if held_count[u] < quotas.user_quota && next[u] < prefs.user_prefs[u].len() {
                let s = prefs.user_prefs[u][next[u]];
                next[u] += 1;
                proposals[s].push(u);
                any = true;
            }
        }
        if !any {
            break;
        }
        for s in 0..k {
            if proposals[s].is_empty() {
                continue;
            }
            let mut pool = std::mem::take(&mut holders[s]);
            for &u in &proposals[s] {
                pool.push(u);
                held_count[u] += 1;
            }
            pool.sort_by_key(|&u| rank[s][u]);
            for &u in &pool[quotas.subcarrier_quota.min(pool.len())..] {
                held_count[u] -= 1;
            }
            pool.truncate(quotas.subcarrier_quota);
            holders[s] = pool;
        }
    }
    Matching::from_pairs(
        holders
            .iter()
            .enumerate()
            .flat_map(|(s, users)| users.iter().map(move |&u| (u, s))),
    )
}

/// Rates `log2(1 + SINR)` of `users` sharing subcarrier `k` with budget `share`.
fn subcarrier_rates(users: &[usize], k: usize, share: f64, channel: &ChannelState, noise: f64) -> Result<UserMap> {
    if users.is_empty() {
        return Ok(UserMap::new());
    }
    let gains: UserMap = users.iter().map(|&u| (u, channel.gain(u, k))).collect();
    let powers = inverse_gain_power_split(&gains, share)?;
    Ok(downlink_sinrs(&gains, &powers, noise)?
        .into_iter()
        .map(|(u, s)| (u, (1.0 + s).log2()))
        .collect())
}

/// System sum-rate: every subcarrier gets `bs_total_power / K`, split by inverse gain.
pub fn matching_sum_rate(matching: &Matching, channel: &ChannelState, scenario: &NetworkScenario) -> Result<f64> {
    let k_total = channel.num_subcarriers();
    let share = scenario.downlink_share(k_total);
    let mut total = 0.0;
    for (k, users) in matching.by_subcarrier(k_total).iter().enumerate() {
        total += subcarrier_rates(users, k, share, channel, scenario.noise_power)?
            .values()
            .sum::<f64>();
    }
    Ok(total)
}

/// Per-user total rate under the sum-rate model.
pub fn matching_user_rates(
    matching: &Matching,
    channel: &ChannelState,
    scenario: &NetworkScenario,
) -> Result<Vec<f64>> {
    let k_total = channel.num_subcarriers();
    let share = scenario.downlink_share(k_total);
    let mut rates = vec![0.0; channel.num_users()];
    for (k, users) in matching.by_subcarrier(k_total).iter().enumerate() {
        for (u, r) in subcarrier_rates(users, k, share, channel, scenario.noise_power)? {
            rates[u] += r;
        }
    }
    Ok(rates)
}

/// An exchange of two pairs, or (with `partner == None`) a single user moving
/// from `from_a` into spare quota on `to_a`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SwapMove {
    pub user_a: usize,
    /// `a` leaves this subcarrier.
    pub from_a: usize,
    /// `a` joins this subcarrier (`b`'s old one for a real swap).
    pub to_a: usize,
    pub partner: Option<usize>,
}

impl SwapMove {
    pub fn apply(&self, matching: &mut Matching) {
        matching.pairs.remove(&(self.user_a, self.from_a));
        matching.pairs.insert((self.user_a, self.to_a));
        if let Some(b) = self.partner {
            matching.pairs.remove(&(b, self.to_a));
            matching.pairs.insert((b, self.from_a));
        }
    }

    pub fn applied(&self, matching: &Matching) -> Matching {
        let mut m = matching.clone();
        self.apply(&mut m);
        m
    }
}

struct SwapContext<'a> {
    channel: &'a ChannelState,
    noise: f64,
    share: f64,
    users_on: Vec<Vec<usize>>,
    rates_on: Vec<UserMap>,
}

impl<'a> SwapContext<'a> {
    fn new(matching: &Matching, channel: &'a ChannelState, scenario: &NetworkScenario) -> Result<Self> {
        let k_total = channel.num_subcarriers();
        let share = scenario.downlink_share(k_total);
        let users_on = matching.by_subcarrier(k_total);
        let rates_on = users_on
            .iter()
            .enumerate()
            .map(|(k, us)| subcarrier_rates(us, k, share, channel, scenario.noise_power))
            .collect::<Result<_>>()?;
        Ok(Self {
            channel,
            noise: scenario.noise_power,
            share,
            users_on,
            rates_on,
        })
    }

    fn rates(&self, users: &[usize], k: usize) -> Result<UserMap> {
        subcarrier_rates(users, k, self.share, self.channel, self.noise)
    }

    /// Checks a move; only the two touched subcarriers change.
    fn is_blocking(&self, mv: &SwapMove) -> Result<bool> {
        let (a, sa, sb) = (mv.user_a, mv.from_a, mv.to_a);
        let replace = |k: usize, out: usize, inn: Option<usize>| {
            let mut v: Vec<usize> = self.users_on[k].iter().copied().filter(|&u| u != out).collect();
            if let Some(i) = inn {
                v.push(i);
            }
            v
        };
        let (new_sa, new_sb) = match mv.partner {
            Some(b) => (replace(sa, a, Some(b)), replace(sb, b, Some(a))),
            None => (replace(sa, a, None), {
                let mut v = self.users_on[sb].clone();
                v.push(a);
                v
            }),
        };
        let after_sa = self.rates(&new_sa, sa)?;
        let after_sb = self.rates(&new_sb, sb)?;

        let old_a = self.rates_on[sa][&a];
        let new_a = after_sb[&a];
        if new_a < old_a {
            return Ok(false);
        }
        if let Some(b) = mv.partner {
            if after_sa[&b] < self.rates_on[sb][&b] {
                return Ok(false);
            }
        }
        let before: f64 = self.rates_on[sa].values().sum::<f64>() + self.rates_on[sb].values().sum::<f64>();
        let after: f64 = after_sa.values().sum::<f64>() + after_sb.values().sum::<f64>();
        Ok(after - before > SWAP_EPSILON)
    }
}

/// Candidate moves in scan order: for each matched pair `(a, s_a)` in
/// ascending order, first exchanges with every pair `(b, s_b)`, `b > a`, in
/// ascending order, then moves into each subcarrier with spare quota.
pub fn swap_candidates(matching: &Matching, num_subcarriers: usize, quotas: MatchQuotas) -> Vec<SwapMove> {
    let users_on = matching.by_subcarrier(num_subcarriers);
    let mut out = Vec::new();
    for &(a, sa) in &matching.pairs {
        for &(b, sb) in matching.pairs.range((a + 1, 0)..) {
            if sa != sb && !matching.contains(a, sb) && !matching.contains(b, sa) {
                out.push(SwapMove {
                    user_a: a,
                    from_a: sa,
                    to_a: sb,
                    partner: Some(b),
                });
            }
        }
        for (t, on_t) in users_on.iter().enumerate() {
            if t != sa && on_t.len() < quotas.subcarrier_quota && !matching.contains(a, t) {
                out.push(SwapMove {
                    user_a: a,
                    from_a: sa,
                    to_a: t,
                    partner: None,
                });
            }
        }
    }
    out
}

/// First swap-blocking move in scan order, if any.
pub fn find_swap_blocking_pair(
    matching: &Matching,
    channel: &ChannelState,
    scenario: &NetworkScenario,
    quotas: MatchQuotas,
) -> Result<Option<SwapMove>> {
    if matching.is_empty() {
        return Ok(None);
    }
    let ctx = SwapContext::new(matching, channel, scenario)?;
    for mv in swap_candidates(matching, channel.num_subcarriers(), quotas) {
        if ctx.is_blocking(&mv)? {
            return Ok(Some(mv));
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapRecord {
    pub swap: SwapMove,
    pub sum_rate_after: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwapMatchingOutcome {
    /// Deferred-acceptance result before any swap.
    pub initial: Matching,
    pub initial_sum_rate: f64,
    pub matching: Matching,
    pub swaps: Vec<SwapRecord>,
}

impl SwapMatchingOutcome {
    pub fn final_sum_rate(&self) -> f64 {
        self.swaps.last().map_or(self.initial_sum_rate, |s| s.sum_rate_after)
    }
}

/// Preference lists, deferred acceptance, then swaps until none blocks.
pub fn run_swap_matching(
    channel: &ChannelState,
    scenario: &NetworkScenario,
    quotas: MatchQuotas,
) -> Result<SwapMatchingOutcome> {
    let prefs = build_preference_lists(channel, scenario, quotas)?;
    let initial = deferred_acceptance(&prefs, quotas);
    let initial_sum_rate = matching_sum_rate(&initial, channel, scenario)?;
    let mut matching = initial.clone();
    let mut swaps = Vec::new();
    while let Some(mv) = find_swap_blocking_pair(&matching, channel, scenario, quotas)? {
        mv.apply(&mut matching);
        swaps.push(SwapRecord {
            swap: mv,
            sum_rate_after: matching_sum_rate(&matching, channel, scenario)?,
        });
    }
    Ok(SwapMatchingOutcome {
        initial,
        initial_sum_rate,
        matching,
        swaps,
    })
}

/// Distinct users holding at least one subcarrier.
pub fn scheduled_user_count(matching: &Matching) -> usize {
    matching.pairs.iter().map(|p| p.0).collect::<BTreeSet<_>>().len()
}

/// One user per subcarrier, greedily taking the highest remaining gain.
pub fn ofdma_baseline(channel: &ChannelState, scenario: &NetworkScenario) -> Result<Matching> {
    scenario.validate()?;
    channel.check_dimensions(scenario)?;
    let (n, k) = (channel.num_users(), channel.num_subcarriers());
    let mut pairs: Vec<(usize, usize)> = (0..n).flat_map(|u| (0..k).map(move |s| (u, s))).collect();
    pairs.sort_by(|&(u1, s1), &(u2, s2)| {
        channel
            .gain(u2, s2)
            .total_cmp(&channel.gain(u1, s1))
            .then((u1, s1).cmp(&(u2, s2)))
    });
    let mut user_used = vec![false; n];
    let mut sc_used = vec![false; k];
    let mut matching = Matching::new();
    for (u, s) in pairs {
        if !user_used[u] && !sc_used[s] {
            user_used[u] = true;
            sc_used[s] = true;
            matching.pairs.insert((u, s));
        }
    }
    Ok(matching)
}

#[cfg(test)]
mod tests {
    use super::*;

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
    fn codebook_validation() {
        let cb = Codebook {
            codebook_count: 6,
            codewords_per_book: 4,
            codeword_length: 4,
            nonzeros_per_codeword: 2,
        };
        cb.validate().unwrap();
        assert_eq!(cb.bits_per_codeword(), 2);
        assert!(Codebook {
            codewords_per_book: 6,
            ..cb.clone()
        }
        .validate()
        .is_err());
        assert!(Codebook {
            nonzeros_per_codeword: 5,
            ..cb.clone()
        }
        .validate()
        .is_err());
        assert!(Codebook {
            codebook_count: 0,
            ..cb
        }
        .validate()
        .is_err());
    }

    #[test]
    fn single_user_prefers_by_gain() {
        let ch = ChannelState::from_gains(vec![vec![0.2, 0.9, 0.5]]).unwrap();
        let p = build_preference_lists(&ch, &scenario(1, 3, 1.0, 0.1), MatchQuotas::new(1, 1)).unwrap();
        assert_eq!(p.user_prefs, vec![vec![1, 2, 0]]);
    }

    #[test]
    fn identical_gains_give_id_order() {
        let ch = ChannelState::from_gains(vec![vec![0.5; 3]; 4]).unwrap();
        let p = build_preference_lists(&ch, &scenario(4, 3, 1.0, 0.1), MatchQuotas::new(1, 1)).unwrap();
        assert!(p.user_prefs.iter().all(|l| l == &vec![0, 1, 2]));
        assert!(p.subcarrier_prefs.iter().all(|l| l == &vec![0, 1, 2, 3]));
    }

    #[test]
    fn da_hand_example() {
        let prefs = Preferences {
            user_prefs: vec![vec![0, 1], vec![0, 1]],
            subcarrier_prefs: vec![vec![1, 0], vec![0, 1]],
        };
        let m = deferred_acceptance(&prefs, MatchQuotas::new(1, 1));
        assert_eq!(m, Matching::from_pairs([(1, 0), (0, 1)]));
    }

    #[test]
    fn saturated_quotas_match_everything() {
        let prefs = Preferences {
            user_prefs: vec![vec![2, 0, 1], vec![1, 2, 0], vec![0, 1, 2]],
            subcarrier_prefs: vec![vec![0, 1, 2], vec![2, 1, 0], vec![1, 0, 2]],
        };
        let m = deferred_acceptance(&prefs, MatchQuotas::new(3, 3));
        assert_eq!(m.len(), 9);
    }

    #[test]
    fn sum_rate_examples() {
        let ch = ChannelState::from_gains(vec![vec![1.0]]).unwrap();
        let sc = scenario(1, 1, 1.0, 0.1);
        assert_eq!(matching_sum_rate(&Matching::new(), &ch, &sc).unwrap(), 0.0);
        let r = matching_sum_rate(&Matching::from_pairs([(0, 0)]), &ch, &sc).unwrap();
        assert!((r - 11f64.log2()).abs() < 1e-12);
        assert!((r - 3.4594).abs() < 1e-4);
    }

    #[test]
    fn crossed_gains_swap_found() {
        // Each user sits on the other's strong subcarrier.
        let ch = ChannelState::from_gains(vec![vec![1.0, 0.1], vec![0.1, 1.0]]).unwrap();
        let sc = scenario(2, 2, 2.0, 0.1);
        let m = Matching::from_pairs([(0, 1), (1, 0)]);
        let mv = find_swap_blocking_pair(&m, &ch, &sc, MatchQuotas::new(1, 1)).unwrap();
        assert_eq!(
            mv,
            Some(SwapMove {
                user_a: 0,
                from_a: 1,
                to_a: 0,
                partner: Some(1)
            })
        );
        let fixed = mv.unwrap().applied(&m);
        assert_eq!(fixed, Matching::from_pairs([(0, 0), (1, 1)]));
        assert_eq!(
            find_swap_blocking_pair(&fixed, &ch, &sc, MatchQuotas::new(1, 1)).unwrap(),
            None
        );
    }

    #[test]
    fn empty_matching_has_no_swap() {
        let ch = ChannelState::from_gains(vec![vec![1.0, 0.1]]).unwrap();
        let sc = scenario(1, 2, 1.0, 0.1);
        assert_eq!(
            find_swap_blocking_pair(&Matching::new(), &ch, &sc, MatchQuotas::new(1, 1)).unwrap(),
            None
        );
    }

    #[test]
    fn vacancy_move_repairs_bad_slot() {
        let ch = ChannelState::from_gains(vec![vec![0.1, 1.0]]).unwrap();
        let sc = scenario(1, 2, 2.0, 0.1);
        let m = Matching::from_pairs([(0, 0)]);
        let mv = find_swap_blocking_pair(&m, &ch, &sc, MatchQuotas::new(1, 1))
            .unwrap()
            .unwrap();
        assert_eq!(mv.partner, None);
        assert_eq!(mv.applied(&m), Matching::from_pairs([(0, 1)]));
    }

    #[test]
    fn swap_log_strictly_increasing() {
        let sc = scenario(5, 3, 1.0, 1e-9);
        for seed in 0..20 {
            let ch = crate::scenario::generate_channels(&sc, crate::scenario::RngSeed(seed)).unwrap();
            let q = MatchQuotas::new(1, 2);
            let out = run_swap_matching(&ch, &sc, q).unwrap();
            let mut prev = out.initial_sum_rate;
            for s in &out.swaps {
                assert!(s.sum_rate_after > prev);
                prev = s.sum_rate_after;
            }
            out.matching.check(5, 3, q).unwrap();
            assert_eq!(find_swap_blocking_pair(&out.matching, &ch, &sc, q).unwrap(), None);
        }
    }

    #[test]
    fn scheduled_counts() {
        assert_eq!(scheduled_user_count(&Matching::new()), 0);
        let m = Matching::from_pairs([(0, 0), (0, 1), (2, 1)]);
        assert_eq!(scheduled_user_count(&m), 2);
        assert_eq!(m.subcarriers_of(0), vec![0, 1]);
        assert_eq!(m.users_on(1), vec![0, 2]);
    }

    #[test]
    fn ofdma_examples() {
        let ch = ChannelState::from_gains(vec![vec![0.2, 0.7, 0.4]]).unwrap();
        let m = ofdma_baseline(&ch, &scenario(1, 3, 1.0, 0.1)).unwrap();
        assert_eq!(m, Matching::from_pairs([(0, 1)]));

        let ch =
            ChannelState::from_gains(vec![vec![0.9, 0.8, 0.1], vec![0.85, 0.3, 0.2], vec![0.6, 0.7, 0.5]]).unwrap();
        // Greedy trace: (0,0)=0.9; then (1,0) and (0,1) blocked, (2,1)=0.7; then (1,2)=0.2.
        let m = ofdma_baseline(&ch, &scenario(3, 3, 1.0, 0.1)).unwrap();
        assert_eq!(m, Matching::from_pairs([(0, 0), (2, 1), (1, 2)]));
    }

    #[test]
    fn ofdma_equals_single_user_sum_rate() {
        let sc = scenario(6, 4, 1.0, 1e-9);
        let ch = crate::scenario::generate_channels(&sc, crate::scenario::RngSeed(4)).unwrap();
        let m = ofdma_baseline(&ch, &sc).unwrap();
        assert_eq!(scheduled_user_count(&m), 4);
        let expected: f64 = m
            .pairs
            .iter()
            .map(|&(u, k)| (1.0 + 0.25 * ch.gain(u, k) / 1e-9).log2())
            .sum();
        assert!((matching_sum_rate(&m, &ch, &sc).unwrap() - expected).abs() < 1e-9);
    }
}
