//! One function per subcommand; each writes its files and returns a one-line
//! summary for stdout.

use clusterwalk::experiments::{
    beta_sweep, entry_probe, escape_time, estimate_exponent_with, mean_sojourn_by_size,
    sojourn_experiment, EntryProbeConfig, ExponentConfig, ExponentEstimate,
};
use clusterwalk::snapshot::write_snapshot;
use clusterwalk::spectral::{
    build_chain, edge_load_bound, edge_load_estimate, BoxChain, DEFAULT_DENSE_LIMIT,
};
use clusterwalk::{
    cluster_tail, continuize, sample_labeled, simulate_discrete, BoxRestriction, BoxSpec,
    ClusterMap, Environment, KernelParams, LazyClusters, SampleOptions, SiteField, TailStats,
};
use serde_json::json;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{num, OutputDir};
use crate::plot::exponent_plot;

type CmdResult = Result<String, CliError>;

fn labeled_env(c: &RunConfig, n: usize, seed: u64) -> Result<(Environment, ClusterMap), CliError> {
    let b = BoxSpec::new(n, c.d)?;
    let opts = SampleOptions {
        margin: c.margin,
        ..SampleOptions::default()
    };
    Ok(sample_labeled(c.p, b, seed, 0, c.cluster_scope, &opts)?)
}

fn coord_headers(d: usize) -> impl Iterator<Item = String> {
    (1..=d).map(|k| format!("x{k}"))
}

fn header(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

fn tail_rows(t: &TailStats) -> Vec<Vec<String>> {
    t.points
        .iter()
        .map(|pt| {
            vec![
                pt.threshold.to_string(),
                pt.count.to_string(),
                num(pt.frequency),
            ]
        })
        .collect()
}

pub fn sample_env(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let (env, cmap) = labeled_env(c, c.n, c.seed)?;
    let mut snap = Vec::new();
    write_snapshot(&env, &mut snap)?;
    out.write("env.txt", &snap, true)?;
    // empirical P[|C(x)| > N] over the sites of the box
    let sizes: Vec<usize> = cmap.box_sizes().into_iter().map(|s| s as usize).collect();
    let tail = clusterwalk::tail::tail_from_sizes(c.p, c.d, c.seed, &sizes, 0);
    out.csv(
        "cluster_histogram.csv",
        &header(&["threshold_N", "count", "frequency"]),
        tail_rows(&tail),
    )?;
    Ok(format!(
        "sampled n={} d={} p={}: {} open sites in the box, {} clusters, margin {}",
        c.n,
        c.d,
        c.p,
        sizes.iter().filter(|&&s| s > 0).count(),
        cmap.cluster_count(),
        env.margin()
    ))
}

pub fn simulate(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let params = KernelParams::new(c.beta, c.d)?;
    let t_max = c.t_max as usize;
    let traj = if c.confine {
        let (_, mut cmap) = labeled_env(c, c.n, c.seed)?;
        let confine = BoxRestriction {
            box_spec: BoxSpec::new(c.n, c.d)?,
            restriction: c.restriction,
        };
        simulate_discrete(&mut cmap, &params, None, Some(confine), t_max, c.seed, 0)?
    } else {
        let mut lazy = LazyClusters::from_field(SiteField::bernoulli(c.d, c.p, c.seed, 0)?);
        simulate_discrete(&mut lazy, &params, None, None, t_max, c.seed, 0)?
    };
    let traj = if c.continuous {
        continuize(&traj, c.seed, 0)
    } else {
        traj
    };
    let mut cols = vec!["step_or_time".to_string()];
    cols.extend(coord_headers(c.d));
    cols.extend(header(&["cluster_size_at_site", "max_disp"]));
    let rows = (0..traj.len()).map(|k| {
        let clock = traj
            .jump_times
            .as_ref()
            .map_or(k.to_string(), |j| num(j[k]));
        let mut row = vec![clock];
        row.extend(traj.positions[k].coords().iter().map(|x| x.to_string()));
        row.push(traj.cluster_sizes[k].to_string());
        row.push(traj.max_displacement[k].to_string());
        row
    });
    out.csv("trajectory.csv", &cols, rows)?;
    let final_max = *traj
        .max_displacement
        .last()
        .expect("trajectory holds the start");
    out.json(
        "summary.json",
        &json!({
            "seed": c.seed,
            "beta": c.beta,
            "p": c.p,
            "d": c.d,
            "t_max": c.t_max,
            "final_max_disp": final_max,
            "continuous": c.continuous,
            "confined": c.confine,
            "restriction": c.restriction,
        }),
    )?;
    Ok(format!(
        "simulated {} steps, final max displacement {final_max}",
        c.t_max
    ))
}

pub fn gap(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let params = KernelParams::new(c.beta, c.d)?;
    let mut rows = Vec::new();
    let mut first = None;
    for n in c.box_sizes() {
        for s in 0..c.seeds as u64 {
            let seed = c.seed + s;
            let (env, mut cmap) = labeled_env(c, n, seed)?;
            let b = BoxSpec::new(n, c.d)?;
            let n2 = (n * n) as f64;
            let sampled = c.sampled_pairs.filter(|_| b.volume() > DEFAULT_DENSE_LIMIT);
            let entry = if let Some(pairs) = sampled {
                let chain = BoxChain::new(&mut cmap, &b, &params, c.restriction)?;
                let (a, worst) = edge_load_estimate(&chain, pairs, seed)?;
                json!({
                    "n": n, "d": c.d, "p": c.p, "beta": c.beta, "seed": seed,
                    "lambda": null,
                    "bound_one_over_A": 1.0 / a,
                    "congestion_A": a,
                    "worst_edge": [worst.0.coords(), worst.1.coords()],
                    "lambda_times_n2": null,
                    "margin": null,
                    "approximate": true,
                    "sampled_pairs": pairs,
                    "restriction": c.restriction,
                    "cluster_scope": c.cluster_scope,
                    "escalations": env.escalations(),
                })
            } else {
                let chain = build_chain(&mut cmap, &b, &params, c.restriction)?;
                let r = edge_load_bound(&chain)?;
                log::info!("n={n} seed={seed}: λ={:e} 1/A={:e}", r.gap, r.bound);
                json!({
                    "n": n, "d": c.d, "p": c.p, "beta": c.beta, "seed": seed,
                    "lambda": r.gap,
                    "bound_one_over_A": r.bound,
                    "congestion_A": r.congestion,
                    "worst_edge": [r.worst_edge.0.coords(), r.worst_edge.1.coords()],
                    "lambda_times_n2": r.gap * n2,
                    "margin": r.margin,
                    "approximate": false,
                    "restriction": c.restriction,
                    "cluster_scope": c.cluster_scope,
                    "escalations": env.escalations(),
                })
            };
            let cell = |k: &str| match &entry[k] {
                serde_json::Value::Null => String::new(),
                v => v.to_string(),
            };
            rows.push(vec![
                n.to_string(),
                seed.to_string(),
                num(c.p),
                num(c.beta),
                cell("lambda"),
                cell("bound_one_over_A"),
                cell("lambda_times_n2"),
                cell("margin"),
                cell("approximate"),
            ]);
            first.get_or_insert(entry);
        }
    }
    let report = first.expect("at least one box size and seed");
    out.json("report.json", &report)?;
    let cols = header(&[
        "n",
        "seed",
        "p",
        "beta",
        "lambda",
        "bound_one_over_A",
        "lambda_times_n2",
        "margin",
        "approximate",
    ]);
    let count = rows.len();
    out.csv("gap_sweep.csv", &cols, rows)?;
    Ok(format!(
        "n={} seed={}: lambda={} 1/A={} ({count} sweep rows)",
        report["n"], report["seed"], report["lambda"], report["bound_one_over_A"]
    ))
}

fn exponent_rows(estimates: &[ExponentEstimate]) -> Vec<Vec<String>> {
    let mut rows = Vec::new();
    for e in estimates {
        for (t, m) in e.time_grid.iter().zip(&e.mean_log_maxdisp) {
            rows.push(vec![
                num(e.beta),
                num(e.p),
                e.d.to_string(),
                t.to_string(),
                num(*m),
                num(e.slope),
                num(e.stderr),
                e.replicas.to_string(),
                e.seed.to_string(),
            ]);
        }
    }
    rows
}

fn sweep_header() -> Vec<String> {
    header(&[
        "beta",
        "p",
        "d",
        "t",
        "mean_log_maxdisp",
        "slope",
        "stderr",
        "replicas",
        "seed",
    ])
}

fn write_estimates(
    c: &RunConfig,
    out: &mut OutputDir,
    stem: &str,
    estimates: &[ExponentEstimate],
) -> Result<(), CliError> {
    out.csv(
        &format!("{stem}.csv"),
        &sweep_header(),
        exponent_rows(estimates),
    )?;
    out.json(&format!("{stem}.json"), &estimates)?;
    let title = format!(
        "log M(t) vs log t, p={}, d={}, {} replicas",
        c.p, c.d, c.replicas
    );
    let svg = exponent_plot(estimates, &title, c.deterministic);
    out.write(&format!("{stem}.svg"), svg.as_bytes(), c.deterministic)
}

pub fn exponent(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let e = estimate_exponent_with(&ExponentConfig {
        p: c.p,
        d: c.d,
        beta: c.beta,
        t_max: c.t_max,
        replicas: c.replicas,
        seed: c.seed,
        quenched: c.quenched,
    })?;
    let line = format!("β={}: slope {:.4} ± {:.4}", e.beta, e.slope, e.stderr);
    write_estimates(c, out, "exponent", &[e])?;
    Ok(line)
}

pub fn sweep(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let estimates = if c.quenched {
        c.beta_grid
            .iter()
            .map(|&beta| {
                estimate_exponent_with(&ExponentConfig {
                    p: c.p,
                    d: c.d,
                    beta,
                    t_max: c.t_max,
                    replicas: c.replicas,
                    seed: c.seed,
                    quenched: true,
                })
            })
            .collect::<Result<Vec<_>, _>>()?
    } else {
        beta_sweep(c.p, c.d, &c.beta_grid, c.t_max, c.replicas, c.seed)?
    };
    let line = estimates
        .iter()
        .map(|e| format!("β={}: {:.3}", e.beta, e.slope))
        .collect::<Vec<_>>()
        .join(", ");
    write_estimates(c, out, "sweep", &estimates)?;
    Ok(line)
}

pub fn escape(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let (_, cmap) = labeled_env(c, c.n, c.seed)?;
    let b = BoxSpec::new(c.n, c.d)?;
    let params = KernelParams::new(c.beta, c.d)?;
    let s = escape_time(&cmap, &b, &params, c.restriction, c.replicas, c.seed)?;
    let rows = s.hitting_times.iter().enumerate().map(|(r, t)| {
        vec![
            r.to_string(),
            t.map_or(String::new(), |t| t.to_string()),
            t.is_none().to_string(),
        ]
    });
    out.csv(
        "escape_times.csv",
        &header(&["replica", "hitting_time", "censored"]),
        rows,
    )?;
    out.json("escape.json", &s)?;
    Ok(format!(
        "median hitting time {} (median/n² = {:.4}), {} censored, π(far) = {:.4}",
        s.median, s.median_over_n2, s.censored, s.far_mass
    ))
}

pub fn sojourn(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let recs = sojourn_experiment(c.p, c.d, c.beta, c.t_max as usize, c.replicas, c.seed)?;
    let rows = recs.iter().map(|r| {
        vec![
            r.cluster_label.to_string(),
            r.cluster_size.to_string(),
            r.visit_index.to_string(),
            r.entry_step.to_string(),
            num(r.entry_time),
            r.steps.to_string(),
            num(r.sojourn),
            r.censored.to_string(),
        ]
    });
    let cols = header(&[
        "cluster_label",
        "cluster_size",
        "visit_index",
        "entry_step",
        "entry_time",
        "steps",
        "sojourn",
        "censored",
    ]);
    out.csv("sojourn.csv", &cols, rows)?;
    let by = mean_sojourn_by_size(&recs, c.d, c.beta);
    let rows = by.iter().map(|s| {
        vec![
            s.cluster_size.to_string(),
            s.visits.to_string(),
            num(s.mean_steps),
            num(s.floor),
        ]
    });
    out.csv(
        "sojourn_by_size.csv",
        &header(&["cluster_size", "visits", "mean_steps", "floor"]),
        rows,
    )?;
    Ok(format!(
        "{} sojourns over {} cluster sizes",
        recs.len(),
        by.len()
    ))
}

pub fn entry(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let mut rows = Vec::new();
    let mut runs = Vec::new();
    let (mut steps, mut hits) = (0usize, 0usize);
    let mut last = None;
    for r in 0..c.runs as u64 {
        let mut cfg = EntryProbeConfig::new(c.p, c.d, c.n, c.delta, c.beta, c.seed);
        cfg.theta = c.theta;
        if let Some(eps) = c.epsilon {
            cfg.epsilon = eps;
        }
        cfg.replica = r;
        let res = entry_probe(&cfg)?;
        for rec in &res.records {
            let mut row = vec![
                r.to_string(),
                rec.step_index.to_string(),
                rec.tau.to_string(),
            ];
            row.extend(rec.site.coords().iter().map(|x| x.to_string()));
            row.extend([
                rec.cluster_size.to_string(),
                rec.found_big.to_string(),
                rec.g_size.to_string(),
            ]);
            rows.push(row);
        }
        steps += res.records.len();
        hits += res.hits;
        runs.push(
            json!({"run": r, "steps": res.records.len(), "hits": res.hits, "stop": res.stop}),
        );
        last = Some(res);
    }
    let res = last.expect("runs >= 1");
    let mut cols = header(&["run", "step_index", "tau"]);
    cols.extend(coord_headers(c.d));
    cols.extend(header(&["cluster_size", "found_big", "g_size"]));
    out.csv("entry_probe.csv", &cols, rows)?;
    let frequency = if steps == 0 {
        0.0
    } else {
        hits as f64 / steps as f64
    };
    out.json(
        "entry_probe.json",
        &json!({
            "p": c.p, "d": c.d, "n": c.n, "beta": c.beta, "seed": c.seed,
            "delta": res.config.delta, "theta": res.config.theta, "epsilon": res.config.epsilon,
            "threshold": res.threshold,
            "steps": steps, "hits": hits, "frequency": frequency,
            "path_bound": res.path_bound,
            "epsilon_bound": res.epsilon_bound,
            "runs": runs,
        }),
    )?;
    Ok(format!(
        "found_big frequency {frequency:.4} over {steps} steps; p^(δ ln n) = {:.4}, n^-ε = {:.4}",
        res.path_bound, res.epsilon_bound
    ))
}

pub fn tail(c: &RunConfig, out: &mut OutputDir) -> CmdResult {
    let t = cluster_tail(c.p, c.d, c.samples, c.seed)?;
    out.csv(
        "tail.csv",
        &header(&["threshold_N", "count", "frequency"]),
        tail_rows(&t),
    )?;
    out.json(
        "tail.json",
        &json!({
            "p": t.p, "d": t.d, "seed": t.seed, "samples": t.sample_count,
            "fitted_slope": t.fitted_slope, "intercept": t.intercept, "r_squared": t.r_squared,
            "cap_hits": t.cap_hits,
        }),
    )?;
    Ok(format!(
        "log-tail slope {:.4}, R² {:.4}",
        t.fitted_slope, t.r_squared
    ))
}
