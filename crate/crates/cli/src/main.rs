mod args;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use adhoc_sinr::coloring::{read_coloring, verify_ball_mass, verify_proximity};
use adhoc_sinr::geometry::{generate_topology, line_spacing_for_hops, read_topology, write_topology, TopologyFamily};
use adhoc_sinr::harness::{
    calibrate_profile, check_reception_facts, fact_notransmit_suite, fact_sum_suite, fit_scaling, run_trial,
    write_trial, CalibrationFamily, CalibrationGrid, CalibrationTarget, ExperimentConfig, ProfileSource, Protocol,
    ReceptionFact, ScalingGroup, ScalingModel, TopologySpec, TrialOutput,
};
use adhoc_sinr::protocols::RunSummary;
use adhoc_sinr::sinr::SinrParams;
use adhoc_sinr::Error;
use clap::Parser;
use rayon::prelude::*;

use args::{
    CalibrateArgs, Cli, Command, ExperimentArgs, FactsArgs, GenArgs, ProfileArg, ProfileArgs, RunArgs, SinrArgs,
    SweepArgs, VerifyArgs,
};

/// Exit codes: a check did not pass, or the invocation itself was wrong.
enum Failure {
    Check(String),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Config(_) | Error::InvalidInput(_) | Error::Io(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Check(other.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Facts(a) => facts(a),
        Command::Calibrate(a) => calibrate(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

/// Scale used when a family is named without `--param`: density 12 for
/// squares, one-hop spacing for lines and grids.
fn default_param(family: &str, n: usize, epsilon: f64) -> Option<f64> {
    match family {
        "uniform-square" => Some((n.max(1) as f64 / 12.0).sqrt()),
        "grid" | "line-uniform" => Some(line_spacing_for_hops(epsilon, 1)),
        _ => None,
    }
}

fn apply_sinr(params: &mut SinrParams, gamma: &mut Option<f64>, a: &SinrArgs) {
    if a.alpha.is_some() || a.beta.is_some() || a.noise.is_some() || a.epsilon.is_some() {
        *params = SinrParams::normalized(
            a.alpha.unwrap_or(params.alpha),
            a.beta.unwrap_or(params.beta),
            a.noise.unwrap_or(params.noise),
            a.epsilon.unwrap_or(params.epsilon),
        );
    }
    if a.gamma.is_some() {
        *gamma = a.gamma;
    }
}

fn apply_profile(config: &mut ExperimentConfig, a: &ProfileArgs) {
    if let Some(p) = a.profile {
        config.profile.mode = match p {
            ProfileArg::Theory => ProfileSource::Theory,
            ProfileArg::Tuned => ProfileSource::Tuned,
            ProfileArg::File => ProfileSource::File,
        };
    }
    if let Some(path) = &a.profile_path {
        config.profile.path = Some(path.clone());
    }
}

/// Reads `--config` (if any) and layers the flags on top.
fn build_config(a: &ExperimentArgs) -> Result<ExperimentConfig, Failure> {
    let mut config = match &a.config {
        Some(path) => ExperimentConfig::read(path)?,
        None => {
            let protocol = a
                .protocol
                .as_deref()
                .ok_or_else(|| Failure::Usage("either --config or --protocol is required".into()))?;
            ExperimentConfig::new(protocol.parse()?, TopologySpec::default())
        }
    };
    if let Some(p) = &a.protocol {
        config.protocol = p.parse()?;
    }
    if let Some(f) = &a.family {
        config.topology.family = Some(f.clone());
        config.topology.file = None;
        config.topology.param = a.param;
    } else if a.param.is_some() {
        config.topology.param = a.param;
    }
    if let Some(path) = &a.topology {
        config.topology.file = Some(path.clone());
        config.topology.family = None;
    }
    if a.n.is_some() {
        config.topology.n = a.n;
    }
    if let Some(s) = a.topology_seed {
        config.topology.seed = s;
    }
    apply_sinr(&mut config.sinr, &mut config.gamma, &a.sinr);
    apply_profile(&mut config, &a.profile);
    if let Some(m) = a.budget_mult {
        config.run.budget_mult = m;
    }
    if a.budget.is_some() {
        config.run.budget = a.budget;
    }
    if let Some(s) = a.source {
        config.run.source = s;
    }
    if a.x.is_some() {
        config.run.x = a.x;
    }
    if a.out_dir.is_some() {
        config.output.dir = a.out_dir.clone();
    }
    if config.topology.file.is_none() && config.topology.family.is_none() {
        return Err(Failure::Usage("a topology needs --family or --topology".into()));
    }
    fill_param(&mut config);
    Ok(config)
}

fn fill_param(config: &mut ExperimentConfig) {
    if let (Some(family), None, Some(n)) = (&config.topology.family, config.topology.param, config.topology.n) {
        config.topology.param = default_param(family, n, config.sinr.epsilon);
    }
}

fn gen(a: GenArgs) -> CliResult {
    let param = a.param.or_else(|| default_param(&a.family, a.n, a.epsilon));
    let family = TopologyFamily::from_name(&a.family, param)?;
    let topology = generate_topology(family, a.n, a.epsilon, a.seed)?;
    let path = match a.out {
        Some(p) => p,
        None => {
            fs::create_dir_all(&a.out_dir).map_err(Error::from)?;
            a.out_dir.join(format!("{}-n{}-seed{}.topo", a.family, a.n, a.seed))
        }
    };
    write_topology(&topology, &path)?;
    println!(
        "wrote {} (n = {}, diameter = {})",
        path.display(),
        topology.len(),
        topology.diameter().map_or("-".to_string(), |d| d.to_string())
    );
    Ok(())
}

fn check_summary(summary: &RunSummary) -> CliResult {
    if summary.success && summary.invariants_hold() {
        Ok(())
    } else {
        Err(Failure::Check(format!(
            "{} seed {} did not succeed",
            summary.protocol, summary.seed
        )))
    }
}

fn run(a: RunArgs) -> CliResult {
    let config = build_config(&a.experiment)?;
    let seeds = match a.seed {
        Some(s) => vec![s],
        None => config.seeds.clone(),
    };
    let mut failures = Vec::new();
    for seed in seeds {
        let out = run_trial(&config, seed)?;
        print!("{}", out.summary.to_text());
        if let Some(dir) = &config.output.dir {
            for path in write_trial(&out, &config, dir)? {
                println!("wrote {}", path.display());
            }
        }
        if let Err(Failure::Check(msg)) = check_summary(&out.summary) {
            failures.push(msg);
        }
    }
    if failures.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(failures.join("; ")))
    }
}

fn verify(a: VerifyArgs) -> CliResult {
    let topology = read_topology(&a.topology)?;
    let coloring = read_coloring(&a.coloring)?;
    if let Some(&v) = coloring.keys().find(|&&v| v >= topology.len()) {
        return Err(Failure::Usage(format!(
            "coloring names station {v}, topology has {}",
            topology.len()
        )));
    }
    let mut config = ExperimentConfig::new(
        Protocol::Coloring,
        TopologySpec {
            file: Some(a.topology.clone()),
            ..TopologySpec::default()
        },
    );
    config.sinr.epsilon = topology.epsilon();
    apply_sinr(&mut config.sinr, &mut config.gamma, &a.sinr);
    apply_profile(&mut config, &a.profile);
    let profile = config.profile_for(&topology)?;
    let l1 = verify_ball_mass(&coloring, &topology, profile.ball_mass_cap);
    let l2 = verify_proximity(&coloring, &topology, profile.epsilon, profile.proximity_threshold());
    let worst = l1.worst.map_or("-".to_string(), |w| {
        format!("color {:e} at station {} mass {:e}", w.color, w.center, w.sum)
    });
    println!(
        "ball-mass: {} (threshold {:e}, heaviest {worst})",
        verdict(l1.pass),
        l1.threshold
    );
    let weakest = l2
        .weakest
        .map_or("-".to_string(), |(v, m)| format!("station {v} mass {m:e}"));
    let first = l2.first_failure.map_or("-".to_string(), |v| v.to_string());
    println!(
        "proximity: {} (threshold {:e}, weakest {weakest}, first failure {first})",
        verdict(l2.pass),
        l2.threshold
    );
    if l1.pass && l2.pass {
        Ok(())
    } else {
        Err(Failure::Check("coloring verification failed".into()))
    }
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "pass"
    } else {
        "FAIL"
    }
}

fn facts(a: FactsArgs) -> CliResult {
    let mut reports = vec![
        fact_sum_suite(a.vectors, a.seed)?,
        fact_notransmit_suite(a.vectors, a.seed)?,
    ];
    for fact in ReceptionFact::ALL {
        reports.push(check_reception_facts(fact, a.instances, a.seed)?);
    }
    let mut failed = Vec::new();
    for r in &reports {
        println!("{r}");
        if !r.passed() {
            failed.push(r.fact.to_string());
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(format!("counterexamples for {}", failed.join(", "))))
    }
}

fn pool(threads: usize) -> Result<rayon::ThreadPool, Failure> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Usage(format!("cannot start {threads} worker threads: {e}")))
}

fn calibrate(a: CalibrateArgs) -> CliResult {
    let mut target = CalibrationTarget::shipped();
    let mut gamma = None;
    apply_sinr(&mut target.params, &mut gamma, &a.sinr);
    target.sizes = a.sizes;
    target.seeds = a.seeds;
    target.master_seed = a.master_seed;
    target.families = vec![CalibrationFamily::Square { density: a.density }];
    target
        .families
        .extend(a.line_hops.iter().map(|&hops| CalibrationFamily::Line { hops }));
    let grid = CalibrationGrid::shipped();
    let outcome = pool(a.parallel)?.install(|| calibrate_profile(&grid, &target));
    let outcome = match outcome {
        Ok(o) => o,
        Err(e @ Error::CalibrationFailed(_)) => return Err(Failure::Check(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    fs::create_dir_all(&a.out_dir).map_err(Error::from)?;
    let sizes: Vec<String> = target.sizes.iter().map(usize::to_string).collect();
    let families: Vec<String> = target.families.iter().map(|f| f.name()).collect();
    let header = format!(
        "# Output of `adhoc-sinr calibrate` ({}; n in {{{}}}; {} seeds; master seed {}).\n",
        families.join(", "),
        sizes.join(", "),
        target.seeds,
        target.master_seed
    );
    let profile_path = a.out_dir.join("tuned.toml");
    fs::write(&profile_path, header + &outcome.overrides.to_profile_text()).map_err(Error::from)?;
    let log_path = a.out_dir.join("calibration.log");
    fs::write(&log_path, outcome.log.join("\n") + "\n").map_err(Error::from)?;
    for line in &outcome.log {
        println!("{line}");
    }
    println!("wrote {}", profile_path.display());
    println!("wrote {}", log_path.display());
    Ok(())
}

fn fit_model(protocol: Protocol) -> Option<ScalingModel> {
    match protocol {
        Protocol::SBroadcast => Some(ScalingModel::Spontaneous),
        Protocol::NosBroadcast | Protocol::WakeupAdhoc => Some(ScalingModel::NonSpontaneous),
        _ => None,
    }
}

fn sweep(a: SweepArgs) -> CliResult {
    let mut base = build_config(&a.experiment)?;
    base.run.keep_events = false;
    let sizes = if a.sizes.is_empty() {
        vec![base.topology.n]
    } else {
        if base.topology.file.is_some() {
            return Err(Failure::Usage("--sizes needs a generated topology".into()));
        }
        a.sizes.iter().map(|&n| Some(n)).collect()
    };
    let mut jobs = Vec::new();
    for n in sizes {
        let mut config = base.clone();
        config.topology.n = n;
        if a.experiment.param.is_none() && base.topology.family.is_some() && n != base.topology.n {
            config.topology.param = None;
            fill_param(&mut config);
        }
        for seed in a.first_seed..a.first_seed + a.trials {
            let mut c = config.clone();
            if a.vary_topology {
                c.topology.seed = config.topology.seed.wrapping_add(seed);
            }
            jobs.push((c, seed));
        }
    }
    let results: Vec<Result<TrialOutput, Error>> =
        pool(a.parallel)?.install(|| jobs.par_iter().map(|(c, seed)| run_trial(c, *seed)).collect());

    let mut csv = String::from("n,seed,diameter,success,completion_rounds,rounds_simulated,trace_hash\n");
    let mut groups: Vec<(u32, u64, Vec<RunSummary>)> = Vec::new();
    for ((config, _), r) in jobs.iter().zip(results) {
        let out = r?;
        let s = &out.summary;
        let d = out.topology.diameter().unwrap_or(0);
        let n = out.topology.len() as u64;
        let _ = writeln!(
            csv,
            "{n},{},{d},{},{},{},{:016x}",
            s.seed,
            s.success,
            s.completion_rounds.map_or(String::new(), |c| c.to_string()),
            s.rounds_simulated,
            s.trace_hash
        );
        if let Some(dir) = &config.output.dir {
            write_trial(&out, config, dir)?;
        }
        match groups.iter_mut().find(|g| g.0 == d && g.1 == n) {
            Some(g) => g.2.push(out.summary),
            None => groups.push((d, n, vec![out.summary])),
        }
    }
    match &base.output.dir {
        Some(dir) => {
            let path = write_sweep(dir, &csv)?;
            println!("wrote {}", path.display());
        }
        None => print!("{csv}"),
    }
    let mut scaling = Vec::new();
    for (d, n, summaries) in &groups {
        let g = ScalingGroup::from_summaries(*d, *n, summaries);
        let ok = summaries.iter().filter(|s| s.success).count();
        let med = g.median().map_or("-".to_string(), |m| m.to_string());
        println!(
            "n = {n} D = {d}: success {ok}/{} median completion {med}",
            summaries.len()
        );
        scaling.push(g);
    }
    if let Some(model) = fit_model(base.protocol) {
        if let Ok(fit) = fit_scaling(&scaling, model) {
            println!(
                "fit: rounds = {:.3} + {:.4} * term (R^2 = {:.4}, leave-one-out spread {:.3})",
                fit.intercept,
                fit.coefficient,
                fit.r_squared,
                fit.loo_spread()
            );
        }
    }
    Ok(())
}

fn write_sweep(dir: &Path, csv: &str) -> Result<PathBuf, Failure> {
    fs::create_dir_all(dir).map_err(Error::from)?;
    let path = dir.join("sweep.csv");
    fs::write(&path, csv).map_err(Error::from)?;
    Ok(path)
}
