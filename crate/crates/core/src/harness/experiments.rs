use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind};
use super::{fmt_float, HarnessError};
use crate::coalition::{coalition_value, partition_rates, run_coalition_formation};
use crate::contention::{contention_utility, monte_carlo_success, run_contention_game, success_probability};
use crate::matching::{matching_sum_rate, ofdma_baseline, run_swap_matching, scheduled_user_count, MatchQuotas};
use crate::oracle::{
    brute_force_best_matching, brute_force_best_partition, grid_nash_certificate, NashInstance, OracleBudget,
};
use crate::power::run_power_control;
use crate::scenario::{generate_channels, NetworkScenario, RngSeed};
use crate::sic::PowerAllocation;

type Rows = Vec<Vec<String>>;

/// Runs the configured experiment and returns the CSV text, metadata line included.
pub fn run_experiment(config: &ExperimentConfig, oracle: bool) -> Result<String, HarnessError> {
    config.validate()?;
    let (header, rows) = match config.experiment {
        ExperimentKind::Fig3 => {
            if oracle {
                log::warn!("--oracle has no effect on the fig3 experiment");
            }
            fig3(config)?
        }
        ExperimentKind::Matching => matching(config, oracle)?,
        ExperimentKind::Coalition => coalition(config, oracle)?,
        ExperimentKind::Power => power(config, oracle)?,
        ExperimentKind::Contention => contention(config, oracle)?,
    };

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| HarnessError::Io(e.to_string());
    w.write_record(&header).map_err(io)?;
    for row in &rows {
        w.write_record(row).map_err(io)?;
    }
    let mut text =
        String::from_utf8(w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?).expect("csv output is utf-8");
    let seeds: Vec<String> = config.effective_seeds().iter().map(|s| s.0.to_string()).collect();
    text.push_str(&format!(
        "# config_sha256={} seeds={} oracle={} config={}\n",
        config.hash(),
        seeds.join(";"),
        oracle,
        config.canonical_json()
    ));
    Ok(text)
}

fn header(cols: &[&str]) -> Vec<String> {
    cols.iter().map(|s| s.to_string()).collect()
}

fn scenario_with_users(base: &NetworkScenario, n: usize) -> NetworkScenario {
    NetworkScenario {
        num_users: n,
        ..base.clone()
    }
}

/// One aggregated fig3 curve point.
#[derive(Debug, Clone, PartialEq)]
pub struct Fig3Row {
    pub scheme: &'static str,
    pub num_users: usize,
    pub num_subcarriers: usize,
    pub quotas: MatchQuotas,
    pub seed_count: usize,
    pub mean_scheduled: f64,
    pub mean_sum_rate: f64,
}

/// Scheduled users and sum-rate per population size, quota setting and OFDMA.
/// Replications run in parallel and are reduced in seed order.
pub fn fig3_rows(config: &ExperimentConfig) -> Result<Vec<Fig3Row>, HarnessError> {
    let seeds = config.effective_seeds();
    let settings = &config.fig3;
    let mut rows = Vec::new();
    for n in config.fig3_populations() {
        let scenario = scenario_with_users(&config.scenario, n);
        let per_seed: Vec<Vec<(usize, f64)>> = seeds
            .par_iter()
            .map(|&seed| -> Result<Vec<(usize, f64)>, crate::NomaError> {
                let channel = generate_channels(&scenario, seed)?;
                let mut out = Vec::new();
                for &q in &settings.subcarrier_quotas {
                    let res = run_swap_matching(&channel, &scenario, MatchQuotas::new(settings.user_quota, q))?;
                    out.push((scheduled_user_count(&res.matching), res.final_sum_rate()));
                }
                if settings.include_ofdma {
                    let m = ofdma_baseline(&channel, &scenario)?;
                    out.push((scheduled_user_count(&m), matching_sum_rate(&m, &channel, &scenario)?));
                }
                Ok(out)
            })
            .collect::<Result<_, _>>()?;

        let mut schemes: Vec<(&'static str, MatchQuotas)> = settings
            .subcarrier_quotas
            .iter()
            .map(|&q| ("swap_matching", MatchQuotas::new(settings.user_quota, q)))
            .collect();
        if settings.include_ofdma {
            schemes.push(("ofdma", MatchQuotas::new(1, 1)));
        }
        for (i, (scheme, quotas)) in schemes.into_iter().enumerate() {
            let mut sched = 0.0;
            let mut rate = 0.0;
            for seed_result in &per_seed {
                sched += seed_result[i].0 as f64;
                rate += seed_result[i].1;
            }
            rows.push(Fig3Row {
                scheme,
                num_users: n,
                num_subcarriers: scenario.num_subcarriers,
                quotas,
                seed_count: seeds.len(),
                mean_scheduled: sched / seeds.len() as f64,
                mean_sum_rate: rate / seeds.len() as f64,
            });
        }
    }
    check_fig3_trends(&rows)?;
    Ok(rows)
}

/// Each curve nondecreasing in N; larger subcarrier quotas never schedule fewer users.
fn check_fig3_trends(rows: &[Fig3Row]) -> Result<(), HarnessError> {
    let mut curves: Vec<(&str, MatchQuotas)> = Vec::new();
    for r in rows {
        if !curves.contains(&(r.scheme, r.quotas)) {
            curves.push((r.scheme, r.quotas));
        }
    }
    for &(scheme, quotas) in &curves {
        let mut points: Vec<&Fig3Row> = rows
            .iter()
            .filter(|r| r.scheme == scheme && r.quotas == quotas)
            .collect();
        points.sort_by_key(|r| r.num_users);
        if let Some(w) = points.windows(2).find(|w| w[1].mean_scheduled < w[0].mean_scheduled) {
            return Err(HarnessError::Check(format!(
                "{scheme} d_f={} scheduled users drop from {} at N={} to {} at N={}",
                quotas.subcarrier_quota, w[0].mean_scheduled, w[0].num_users, w[1].mean_scheduled, w[1].num_users
            )));
        }
    }
    for a in rows.iter().filter(|r| r.scheme == "swap_matching") {
        for b in rows.iter().filter(|r| {
            r.scheme == "swap_matching"
                && r.num_users == a.num_users
                && r.quotas.user_quota == a.quotas.user_quota
                && r.quotas.subcarrier_quota > a.quotas.subcarrier_quota
        }) {
            if b.mean_scheduled < a.mean_scheduled {
                return Err(HarnessError::Check(format!(
                    "at N={} d_f={} schedules fewer users than d_f={}",
                    a.num_users, b.quotas.subcarrier_quota, a.quotas.subcarrier_quota
                )));
            }
        }
    }
    Ok(())
}

fn fig3(config: &ExperimentConfig) -> Result<(Vec<String>, Rows), HarnessError> {
    let rows = fig3_rows(config)?
        .into_iter()
        .map(|r| {
            vec![
                "fig3".to_string(),
                r.scheme.to_string(),
                r.num_users.to_string(),
                r.num_subcarriers.to_string(),
                r.quotas.user_quota.to_string(),
                r.quotas.subcarrier_quota.to_string(),
                r.seed_count.to_string(),
                fmt_float(r.mean_scheduled),
                fmt_float(r.mean_sum_rate),
            ]
        })
        .collect();
    Ok((
        header(&[
            "experiment",
            "scheme",
            "N",
            "K",
            "user_quota",
            "subcarrier_quota",
            "seed_count",
            "mean_scheduled",
            "mean_sum_rate",
        ]),
        rows,
    ))
}

fn matching(config: &ExperimentConfig, oracle: bool) -> Result<(Vec<String>, Rows), HarnessError> {
    let scenario = &config.scenario;
    let quotas = config.matching.quotas();
    let budget = OracleBudget::default();
    let per_seed: Vec<Vec<String>> = config
        .effective_seeds()
        .par_iter()
        .map(|&seed| -> Result<Vec<String>, crate::NomaError> {
            let channel = generate_channels(scenario, seed)?;
            let res = run_swap_matching(&channel, scenario, quotas)?;
            let mut row = vec![
                seed.0.to_string(),
                scenario.num_users.to_string(),
                scenario.num_subcarriers.to_string(),
                quotas.user_quota.to_string(),
                quotas.subcarrier_quota.to_string(),
                fmt_float(quotas.overloading_factor()),
                fmt_float(res.initial_sum_rate),
                fmt_float(res.final_sum_rate()),
                res.swaps.len().to_string(),
                scheduled_user_count(&res.matching).to_string(),
            ];
            if oracle {
                let (_, best) = brute_force_best_matching(&channel, scenario, quotas, &budget)?;
                row.push(fmt_float(best));
                row.push(fmt_float(res.final_sum_rate() / best));
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![
        "seed",
        "N",
        "K",
        "user_quota",
        "subcarrier_quota",
        "overloading_factor",
        "da_sum_rate",
        "final_sum_rate",
        "swaps",
        "scheduled",
    ];
    if oracle {
        cols.extend(["oracle_sum_rate", "oracle_ratio"]);
    }
    Ok((header(&cols), per_seed))
}

fn coalition(config: &ExperimentConfig, oracle: bool) -> Result<(Vec<String>, Rows), HarnessError> {
    let scenario = &config.scenario;
    let users = config.coalition.roster();
    let game = config.coalition.game_config();
    let budget = OracleBudget::default();
    let rows: Vec<Vec<String>> = config
        .effective_seeds()
        .par_iter()
        .map(|&seed| -> Result<Vec<String>, crate::NomaError> {
            let channel = generate_channels(scenario, seed)?;
            let out = run_coalition_formation(&users, scenario, &channel, &game)?;
            let p = &out.partition;
            let total: f64 = (0..p.num_groups())
                .map(|g| coalition_value(g, p, &channel, scenario))
                .sum::<Result<f64, _>>()?;
            let rates = partition_rates(p, &channel, scenario)?;
            let min_sensor = p.anchor.iter().map(|&s| rates[s]).fold(f64::INFINITY, f64::min);
            let mut row = vec![
                seed.0.to_string(),
                config.coalition.sensors.to_string(),
                config.coalition.broadband.to_string(),
                p.num_groups().to_string(),
                out.rounds.to_string(),
                out.history.len().to_string(),
                out.stable.to_string(),
                fmt_float(total),
                fmt_float(min_sensor),
            ];
            if oracle {
                let (_, best) = brute_force_best_partition(&users, scenario, &channel, &game, &budget)?;
                row.push(fmt_float(best));
                row.push(fmt_float(total / best));
            }
            Ok(row)
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![
        "seed",
        "sensors",
        "broadband",
        "groups",
        "rounds",
        "switches_executed",
        "stable",
        "total_value",
        "min_sensor_rate",
    ];
    if oracle {
        cols.extend(["oracle_value", "oracle_ratio"]);
    }
    Ok((header(&cols), rows))
}

fn power(config: &ExperimentConfig, oracle: bool) -> Result<(Vec<String>, Rows), HarnessError> {
    let scenario = &config.scenario;
    let game = config.power.game_config(scenario);
    let budget = OracleBudget::default();
    let per_seed: Vec<Rows> = config
        .effective_seeds()
        .par_iter()
        .map(|&seed| -> Result<Rows, crate::NomaError> {
            let channel = generate_channels(scenario, seed)?;
            let init = PowerAllocation::zeros(scenario.num_users, scenario.num_subcarriers);
            let res = run_power_control(scenario, &channel, &game, &init)?;
            let certificate = if oracle {
                let inst = NashInstance::Power {
                    result: &res,
                    scenario,
                    channel: &channel,
                    config: &game,
                };
                Some(grid_nash_certificate(inst, &budget)?)
            } else {
                None
            };
            Ok(res
                .trace
                .iter()
                .zip(&res.payoff_trace)
                .enumerate()
                .map(|(i, (delta, payoffs))| {
                    let mut row = vec![seed.0.to_string(), (i + 1).to_string(), fmt_float(*delta)];
                    row.extend(payoffs.iter().map(|&p| fmt_float(p)));
                    row.push(res.converged.to_string());
                    if let Some(c) = certificate {
                        row.push(c.to_string());
                    }
                    row
                })
                .collect())
        })
        .collect::<Result<_, _>>()?;
    let mut cols = vec![
        "seed".to_string(),
        "iteration".to_string(),
        "max_power_delta".to_string(),
    ];
    cols.extend((1..=scenario.num_users).map(|u| format!("payoff_{u}")));
    cols.push("converged".to_string());
    if oracle {
        cols.push("grid_nash".to_string());
    }
    Ok((cols, per_seed.into_iter().flatten().collect()))
}

fn contention(config: &ExperimentConfig, oracle: bool) -> Result<(Vec<String>, Rows), HarnessError> {
    let c = &config.contention;
    let resources = c.resources();
    let n = config.scenario.num_users;
    let game = run_contention_game(&resources, n, c.price, c.w_max, c.max_sweeps)?;
    let certificate = if oracle {
        let inst = NashInstance::Contention {
            profile: &game.profile,
            resources: &resources,
            price: c.price,
            w_max: c.w_max,
        };
        Some(grid_nash_certificate(inst, &OracleBudget::default())?)
    } else {
        None
    };
    let per_seed: Vec<Rows> = config
        .effective_seeds()
        .par_iter()
        .map(|&seed: &RngSeed| {
            let freq = monte_carlo_success(&game.profile, &resources, seed, c.mc_rounds);
            (0..n)
                .map(|u| {
                    let mut row = vec![
                        seed.0.to_string(),
                        u.to_string(),
                        game.profile.windows[u].to_string(),
                        fmt_float(game.profile.access_probability(u)),
                        fmt_float(success_probability(u, &game.profile, &resources)),
                        fmt_float(contention_utility(u, &game.profile, &resources, c.price)),
                        fmt_float(freq[u]),
                        game.converged.to_string(),
                        game.sweeps.to_string(),
                    ];
                    if let Some(cert) = certificate {
                        row.push(cert.to_string());
                    }
                    row
                })
                .collect()
        })
        .collect();
    let mut cols = vec![
        "seed",
        "user",
        "window",
        "access_probability",
        "success_probability",
        "utility",
        "mc_success_frequency",
        "converged",
        "sweeps",
    ];
    if oracle {
        cols.push("grid_nash");
    }
    Ok((header(&cols), per_seed.into_iter().flatten().collect()))
}
