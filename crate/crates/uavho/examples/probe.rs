//! Throwaway fixture-design probe. Not part of the crate surface.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uavho::agent::{self, AgentConfig, Algorithm};
use uavho::qnet;
use uavho::baselines::BaselineConfig;
use uavho::env::{self, BaseStation, FlightPath, Scenario};
use uavho::eval::{self, Policy};
use uavho::qnet::QNetwork;
use uavho::seed;
use uavho::transfer;

fn fixture_scenario() -> Scenario {
    let mut s = Scenario::default();
    s.base_stations = vec![
        BaseStation { id: 0, x: 900.0, y: 1000.0, h_bs_m: 25.0, tx_power_dbm: 45.0 },
        BaseStation { id: 1, x: 1060.0, y: 1000.0, h_bs_m: 25.0, tx_power_dbm: 45.0 },
        BaseStation { id: 2, x: 100.0, y: 1900.0, h_bs_m: 25.0, tx_power_dbm: 45.0 },
        BaseStation { id: 3, x: 1900.0, y: 100.0, h_bs_m: 25.0, tx_power_dbm: 45.0 },
        BaseStation { id: 4, x: 1000.0, y: 1900.0, h_bs_m: 25.0, tx_power_dbm: 45.0 },
    ];
    s.channel.sinr_threshold_db = -10.0;
    s.max_altitude_m = 100.0;
    s.reward.alpha_o = 10.0;
    s
}

/// Random-walk waypoints inside a box, segments sampled at <= 1 m spacing.
fn walk_path(id: u32, xr: [f64; 2], yr: [f64; 2], z: f64, total_m: f64, seed_v: u64) -> FlightPath {
    let mut rng = ChaCha8Rng::seed_from_u64(seed_v);
    let mut points: Vec<[f64; 3]> = Vec::new();
    let mut cur = [rng.random_range(xr[0]..=xr[1]), rng.random_range(yr[0]..=yr[1]), z];
    points.push(cur);
    let mut walked = 0.0;
    while walked < total_m {
        let next = [rng.random_range(xr[0]..=xr[1]), rng.random_range(yr[0]..=yr[1]), z];
        let d = ((next[0] - cur[0]).powi(2) + (next[1] - cur[1]).powi(2)).sqrt();
        if d < 5.0 {
            continue;
        }
        let n = d.ceil() as usize;
        for k in 1..=n {
            let f = k as f64 / n as f64;
            points.push([cur[0] + f * (next[0] - cur[0]), cur[1] + f * (next[1] - cur[1]), z]);
        }
        walked += d;
        cur = next;
    }
    FlightPath { id, points, phases: None }
}

/// Straight dash between waypoints at <= 1 m spacing.
fn dash(points: &mut Vec<[f64; 3]>, to: [f64; 3]) {
    let cur = *points.last().unwrap();
    let d = ((to[0] - cur[0]).powi(2) + (to[1] - cur[1]).powi(2) + (to[2] - cur[2]).powi(2)).sqrt();
    let n = d.ceil().max(1.0) as usize;
    for k in 1..=n {
        let f = k as f64 / n as f64;
        points.push([
            cur[0] + f * (to[0] - cur[0]),
            cur[1] + f * (to[1] - cur[1]),
            cur[2] + f * (to[2] - cur[2]),
        ]);
    }
}

fn fixture_paths() -> Vec<FlightPath> {
    // Orbit boxes sit on the far side of their BS so the other corridor BS
    // stays inside the connected-blip band.
    let box_a_x = [830.0, 920.0];
    let box_b_x = [1040.0, 1130.0];
    let yr = [945.0, 1055.0];
    let mut paths = Vec::new();
    for i in 0..4u32 {
        paths.push(walk_path(i + 1, box_a_x, yr, 90.0, 80.0, 1000 + u64::from(i)));
    }
    for i in 0..4u32 {
        paths.push(walk_path(i + 5, box_b_x, yr, 90.0, 80.0, 2000 + u64::from(i)));
    }
    for i in 0..2u32 {
        let id = i + 9;
        let mut points = vec![[878.0, 995.0 + 10.0 * f64::from(i), 90.0]];
        dash(&mut points, [870.0 + 6.0 * f64::from(i), 1010.0 - 20.0 * f64::from(i), 90.0]);
        dash(&mut points, [1082.0, 1000.0, 90.0]);
        paths.push(FlightPath { id, points, phases: None });
    }
    paths
}

fn report(policy: &Policy, scenario: &Scenario, paths: &[FlightPath]) {
    let ev = eval::evaluate(policy, scenario, paths, 200, 7).unwrap();
    let mut per_path = Vec::new();
    for p in paths {
        let pe = eval::evaluate(policy, scenario, std::slice::from_ref(p), 200, 7).unwrap();
        per_path.push((pe.aggregate.ho_mean * 10.0).round() / 10.0);
    }
    println!(
        "{:>12}: ho={:.2} outage={:.3}%  per-path={:?}",
        policy.name(),
        ev.aggregate.ho_mean,
        ev.aggregate.outage_pct_mean,
        per_path
    );
}

/// Keep while connected, else jump to the strongest candidate. Also counts
/// band events (greedy trigger while connected) vs forced (below threshold).
fn eval_lazy(scenario: &Scenario, paths: &[FlightPath]) {
    let episodes = 200u64;
    let thr = scenario.channel.sinr_threshold_db;
    let (mut ho_sum, mut out_sum, mut steps) = (0.0, 0.0, 0.0);
    let (mut band, mut forced) = (0u64, 0u64);
    for path in paths {
        for ep in 0..episodes {
            let ep_seed = seed::episode_seed(7, u64::from(path.id), ep);
            let mut env = env::reset(scenario, path, ep_seed).unwrap();
            while !env.done {
                let serving = env.serving_bs as usize;
                let s_db = env.per_bs_sinr_db[serving];
                let best = (0..env.per_bs_sinr_db.len())
                    .max_by(|&a, &b| env.per_bs_sinr_db[a].total_cmp(&env.per_bs_sinr_db[b]))
                    .unwrap();
                let best_db = env.per_bs_sinr_db[best];
                if s_db < thr {
                    forced += 1;
                } else if best != serving && best_db >= s_db + 3.0 {
                    band += 1;
                }
                let choice = if s_db < thr { best as u32 } else { serving as u32 };
                let out = env::apply_serving(&mut env, choice, scenario).unwrap();
                ho_sum += f64::from(u8::from(out.handover));
                out_sum += f64::from(u8::from(out.outage));
                steps += 1.0;
            }
        }
    }
    let n = (paths.len() as f64) * (episodes as f64);
    println!(
        "{:>12}: ho={:.2} outage={:.3}%  band/ep={:.2} forced/ep={:.2}",
        "lazy",
        ho_sum / n,
        100.0 * out_sum / steps,
        band as f64 / n,
        forced as f64 / n
    );
}

fn main() {
    let scenario = fixture_scenario();
    let paths = fixture_paths();
    println!("path lengths: {:?}", paths.iter().map(FlightPath::len).collect::<Vec<_>>());
    for p in &paths {
        p.validate(scenario.step_len_m()).unwrap();
    }
    let cfg = BaselineConfig::default();
    report(&Policy::Greedy { cfg: cfg.clone() }, &scenario, &paths);
    report(&Policy::Hysteresis { cfg: cfg.clone() }, &scenario, &paths);
    report(&Policy::Mop { cfg: cfg.clone() }, &scenario, &paths);
    eval_lazy(&scenario, &paths);

    // Full one-seed pipeline: train both algorithms on every path, evaluate
    // each model on its own path, then average paths 1-9 and finetune on 10.
    let mut acfg = AgentConfig::default();
    acfg.hidden_layers = vec![64, 64, 64];
    let t0 = std::time::Instant::now();
    let mut models: Vec<(u32, QNetwork)> = Vec::new();
    for algo in [Algorithm::Ddqn, Algorithm::Dqn] {
        let mut cfg_a = acfg.clone();
        cfg_a.algorithm = algo;
        let init = qnet::init(&cfg_a.network_spec(), seed::derive2(4242, 0x4e49, algo as u64))
            .unwrap();
        let mut ho = 0.0;
        let mut out = 0.0;
        let mut scratch_last50 = 0.0;
        for path in &paths {
            let s = seed::derive2(4242, algo as u64 + 1, u64::from(path.id));
            let (net, rep) = agent::train(
                &scenario,
                path,
                &cfg_a,
                &scenario.reward,
                s,
                500,
                Some(init.copy_weights()),
                None,
            )
            .unwrap();
            let pol = Policy::Agent { name: "agent".into(), net: &net };
            let ev =
                eval::evaluate(&pol, &scenario, std::slice::from_ref(path), 200, 7).unwrap();
            ho += ev.aggregate.ho_mean / 10.0;
            out += ev.aggregate.outage_pct_mean / 10.0;
            if algo == Algorithm::Ddqn {
                if path.id == 10 {
                    scratch_last50 = rep.mean_reward(450..500);
                }
                models.push((path.id, net));
            }
        }
        println!(
            "{}: corpus ho={ho:.2} outage={out:.3}%  ({:.0}s)  scratch_last50={scratch_last50:.2}",
            cfg_a.algorithm.name(),
            t0.elapsed().as_secs_f64()
        );
    }
    let gv = eval::evaluate(&Policy::Greedy { cfg }, &scenario, &paths, 200, 7).unwrap();
    println!("greedy corpus ho={:.2}", gv.aggregate.ho_mean);

    let scratch_last50 = {
        let s = seed::derive2(4242, Algorithm::Ddqn as u64 + 1, 10);
        let init =
            qnet::init(&acfg.network_spec(), seed::derive2(4242, 0x4e49, Algorithm::Ddqn as u64))
                .unwrap();
        let path10 = paths.iter().find(|p| p.id == 10).unwrap();
        let (_, rep) =
            agent::train(&scenario, path10, &acfg, &scenario.reward, s, 500, Some(init), None)
                .unwrap();
        rep.mean_reward(450..500)
    };
    let set = transfer::ModelSet::from_entries(
        models
            .iter()
            .filter(|(id, _)| *id != 10)
            .map(|(id, net)| (format!("p{id}"), net.copy_weights()))
            .collect(),
    )
    .unwrap();
    let global = transfer::average_weights(&set).unwrap();
    let path10 = paths.iter().find(|p| p.id == 10).unwrap();
    let (_, frep) = transfer::finetune(
        &global,
        &scenario,
        path10,
        2,
        1e-4,
        &acfg,
        seed::derive2(4242, 77, 10),
        500,
    )
    .unwrap();
    let hit = (50..=frep.episodes.len())
        .find(|&e| frep.mean_reward(e - 50..e) >= scratch_last50)
        .map_or(-1i64, |e| e as i64);
    println!(
        "transfer: scratch_last50={scratch_last50:.2} finetune_first50={:.2} last50={:.2} hit_ep={hit}",
        frep.mean_reward(0..50),
        frep.mean_reward(450..500)
    );
}
