use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fj_core::broadcasting::{classical_centralities, BroadcastingGraph, CentralityParams, Measure};
use fj_core::datasets::{self, BUILTIN};
use fj_core::dynamics::{DirichletProblem, Slot, SusceptibilityProfile};
use fj_core::influence::{influence_matrix_of, node_diagnostics, scan_all_vertices, ScanOptions};
use fj_core::io::{self, format_float, write_file};
use fj_core::montecarlo::{run_campaign, CampaignConfig};
use fj_core::report::campaign_artifacts;
use fj_core::sensitivity::all_gradients;
use fj_core::spectral::dirichlet_spectrum;
use fj_core::{Error, InfluenceSystem};
use serde_json::{json, Value};

use crate::{CampaignArgs, CentralityArgs, Cli, Command, DiagnoseArgs, GraphArgs, ScanArgs, SolveArgs, StepArgs};

pub fn run(cli: &Cli) -> Result<()> {
    if let Command::Datasets = cli.command {
        for (name, description) in BUILTIN {
            println!("{name}\t{description}");
        }
        return Ok(());
    }
    fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let out = cli.out.as_path();
    match &cli.command {
        Command::Solve(args) => solve(out, args),
        Command::Diagnose(args) => diagnose(out, args),
        Command::Scan(args) => scan(out, args),
        Command::Centrality(args) => centrality(out, args),
        Command::Campaign(args) => campaign(out, args),
        Command::Datasets => unreachable!(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())).into())
}

fn write_json(dir: &Path, name: &str, value: &impl serde::Serialize) -> Result<PathBuf> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(write_file(dir, name, &text)?)
}

/// Writes `manifest.json` echoing the resolved configuration and the files written.
fn write_manifest(dir: &Path, command: &str, config: Value, extra: Value, outputs: &[PathBuf]) -> Result<()> {
    let names: Vec<String> =
        outputs.iter().map(|p| p.file_name().unwrap_or_default().to_string_lossy().into_owned()).collect();
    let mut manifest = json!({
        "tool": "fj",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "outputs": names,
    });
    if let (Value::Object(m), Value::Object(e)) = (&mut manifest, extra) {
        m.extend(e);
    }
    write_json(dir, "manifest.json", &manifest)?;
    Ok(())
}

fn load_problem(path: &Path) -> Result<(InfluenceSystem, DirichletProblem)> {
    let text = read(path)?;
    Ok(io::parse_problem(&text, &path.display().to_string())?)
}

fn step_options(steps: &StepArgs) -> Result<ScanOptions> {
    let options = ScanOptions { epsilon: steps.epsilon, t_cap: steps.t_cap };
    options.validate()?;
    Ok(options)
}

fn cap_check(capped: bool, steps: &StepArgs) -> Result<()> {
    if capped && !steps.allow_cap {
        return Err(Error::CapReached { cap: steps.t_cap as usize }.into());
    }
    if capped {
        eprintln!("warning: step cap {} reached, unconverged entries are written as inf", steps.t_cap);
    }
    Ok(())
}

fn solve(out: &Path, args: &SolveArgs) -> Result<()> {
    let (system, problem) = load_problem(&args.problem)?;
    let diagnosis = problem.well_posedness();
    let mut outputs = vec![write_json(out, "well_posedness.json", &diagnosis)?];
    let config = json!({
        "problem": args.problem.display().to_string(),
        "spectrum": args.spectrum,
        "sensitivity": args.sensitivity,
    });
    let steady = match problem.steady_state() {
        Ok(s) => s,
        Err(e) => {
            write_manifest(out, "solve", config, json!({}), &outputs)?;
            return Err(e.into());
        }
    };
    outputs.push(write_json(
        out,
        "steady_state.json",
        &json!({
            "interior": problem.interior(),
            "boundary": problem.boundary(),
            "v_star": steady.v_star.as_slice(),
            "full": steady.full.as_slice(),
            "rho": steady.rho,
            "residual": steady.residual,
            "well_posedness": diagnosis,
        }),
    )?);
    let mut csv = String::from("node,role,value\n");
    for (i, &v) in steady.full.iter().enumerate() {
        let role = match problem.slot(i) {
            Slot::Interior(_) => "interior",
            Slot::Boundary(_) => "boundary",
        };
        let _ = writeln!(csv, "{i},{role},{}", format_float(v));
    }
    outputs.push(write_file(out, "steady_state.csv", &csv)?);
    if args.spectrum {
        let spectrum = dirichlet_spectrum(&system, problem.interior())?;
        outputs.push(write_file(out, "spectrum.csv", &io::spectrum_csv(&spectrum))?);
    }
    if args.sensitivity {
        let reports = all_gradients(&problem)?;
        outputs.push(write_file(out, "sensitivity.csv", &io::sensitivity_csv(problem.interior(), &reports))?);
    }
    write_manifest(out, "solve", config, json!({}), &outputs)?;
    println!("rho = {}, residual = {:e}", steady.rho, steady.residual);
    Ok(())
}

fn diagnose(out: &Path, args: &DiagnoseArgs) -> Result<()> {
    let (system, problem) = load_problem(&args.problem)?;
    let options = step_options(&args.steps)?;
    let report = node_diagnostics(&problem, &system, options)?;
    let mut csv = String::from("node,kickoff,germinated,stabilization,steady_value\n");
    for (i, d) in report.nodes.iter().enumerate() {
        let _ = writeln!(
            csv,
            "{i},{},{},{},{}",
            d.kickoff,
            format_float(d.germinated),
            d.stabilization,
            format_float(d.steady_value)
        );
    }
    let u = influence_matrix_of(&problem)?;
    let outputs = vec![
        write_file(out, "diagnostics.csv", &csv)?,
        write_json(
            out,
            "diagnostics.json",
            &json!({
                "structural_kickoff": report.structural_kickoff,
                "steps": report.steps,
                "capped": report.capped,
                "well_posedness": problem.well_posedness(),
            }),
        )?,
        write_file(out, "influence_matrix.csv", &io::matrix_csv(&u.u))?,
    ];
    let config = json!({
        "problem": args.problem.display().to_string(),
        "epsilon": options.epsilon,
        "t_cap": options.t_cap,
    });
    write_manifest(out, "diagnose", config, json!({}), &outputs)?;
    cap_check(report.capped, &args.steps)
}

struct LoadedGraph {
    system: InfluenceSystem,
    profile: SusceptibilityProfile,
    config: Value,
}

fn load_graph(args: &GraphArgs) -> Result<LoadedGraph> {
    let src = &args.source;
    let (system, graph) = if let Some(name) = &src.builtin {
        (datasets::builtin_or_err(name)?, json!({ "builtin": name }))
    } else if let Some(path) = &src.graph {
        let text = read(path)?;
        let system = io::parse_edge_list(&text, &path.display().to_string(), args.directed)?;
        (system, json!({ "edge_list": path.display().to_string(), "directed": args.directed }))
    } else if let Some(path) = &src.matrix {
        let text = read(path)?;
        let w = io::parse_dense_csv(&text, &path.display().to_string())?;
        (InfluenceSystem::new(w)?, json!({ "matrix": path.display().to_string() }))
    } else {
        bail!("no graph given");
    };
    let n = system.n();
    let (profile, s) = match (args.profile.s, &args.profile.s_file) {
        (Some(s), _) => (SusceptibilityProfile::homogeneous(n, s)?, json!({ "homogeneous": s })),
        (None, Some(path)) => {
            let values = io::parse_vector(&read(path)?, &path.display().to_string())?;
            if values.len() != n {
                return Err(Error::DimensionMismatch { expected: n, actual: values.len() }.into());
            }
            (SusceptibilityProfile::new(values)?, json!({ "file": path.display().to_string() }))
        }
        (None, None) => bail!("no susceptibility given"),
    };
    Ok(LoadedGraph { system, profile, config: json!({ "graph": graph, "susceptibility": s }) })
}

fn with_fields(mut base: Value, extra: Value) -> Value {
    if let (Value::Object(m), Value::Object(e)) = (&mut base, extra) {
        m.extend(e);
    }
    base
}

fn scan(out: &Path, args: &ScanArgs) -> Result<()> {
    let loaded = load_graph(&args.graph)?;
    let options = step_options(&args.steps)?;
    let scan = scan_all_vertices(&loaded.system, &loaded.profile, options)?;
    let mut outputs = io::write_scan(out, &scan)?;
    let ill_posed: Vec<usize> = (0..scan.n()).filter(|&i| !scan.row_ok[i]).collect();
    let capped: Vec<usize> = (0..scan.n()).filter(|&i| scan.row_capped[i]).collect();
    outputs.push(write_json(out, "scan.json", &json!({ "n": scan.n(), "ill_posed_rows": ill_posed, "capped_rows": capped }))?);
    let config = with_fields(loaded.config, json!({ "epsilon": options.epsilon, "t_cap": options.t_cap }));
    write_manifest(out, "scan", config, json!({}), &outputs)?;
    if !ill_posed.is_empty() {
        eprintln!("warning: source rows {ill_posed:?} are not well posed and hold nan / inf");
    }
    cap_check(!capped.is_empty(), &args.steps)
}

fn centrality(out: &Path, args: &CentralityArgs) -> Result<()> {
    let loaded = load_graph(&args.graph)?;
    let options = step_options(&args.steps)?;
    let params = CentralityParams { eta: args.eta, alpha: args.alpha, closeness: args.closeness.into(), ..Default::default() };
    params.validate()?;
    let scan = scan_all_vertices(&loaded.system, &loaded.profile, options)?;
    let bg = BroadcastingGraph::new(&loaded.system, &scan)?;
    let broadcast = bg.centralities(&params)?;
    let classical = classical_centralities(&loaded.system, &params)?;
    let (bc, cc) = (broadcast.centralizations(), classical.centralizations());
    let summary: serde_json::Map<String, Value> = Measure::ALL
        .iter()
        .map(|&m| {
            (
                m.broadcast_name().to_string(),
                json!({ "broadcast": bc[m.index()], "classical": cc[m.index()] }),
            )
        })
        .collect();
    let outputs = vec![
        write_file(out, "centralities.csv", &io::centrality_csv(&broadcast.values, &classical))?,
        write_json(out, "centralization.json", &summary)?,
    ];
    let config = with_fields(
        loaded.config,
        json!({ "epsilon": options.epsilon, "t_cap": options.t_cap, "centrality": params }),
    );
    write_manifest(out, "centrality", config, json!({}), &outputs)?;
    cap_check(scan.row_capped.iter().any(|&c| c), &args.steps)
}

/// A campaign config file, or a campaign manifest whose `config` is reused.
fn load_campaign_config(path: &Path) -> Result<(CampaignConfig, bool)> {
    let text = read(path)?;
    let name = path.display().to_string();
    let value: Value = io::parse_json(&text, &name)?;
    if let Some(command) = value.get("command") {
        if command != "campaign" {
            bail!("{name} is a manifest of '{command}', not of a campaign");
        }
        let config = value.get("config").cloned().unwrap_or(Value::Null);
        let config: CampaignConfig =
            serde_json::from_value(config).with_context(|| format!("invalid config in manifest {name}"))?;
        let keep_runs = value.get("keep_runs").and_then(Value::as_bool).unwrap_or(false);
        return Ok((config, keep_runs));
    }
    Ok((io::parse_json(&text, &name)?, false))
}

fn campaign(out: &Path, args: &CampaignArgs) -> Result<()> {
    let (mut config, mut keep_runs) = match &args.config {
        Some(path) => load_campaign_config(path)?,
        None => (CampaignConfig::default(), false),
    };
    macro_rules! apply {
        ($($field:ident),*) => { $(if let Some(v) = args.$field.clone() { config.$field = v.into(); })* };
    }
    apply!(runs, p0, mu, kappa, epsilon, t_cap, eta, alpha, seed, dataset, closeness);
    keep_runs |= args.keep_runs;
    config.validate()?;

    let system = datasets::builtin_or_err(&config.dataset)?;
    let result = run_campaign(&system, &config, keep_runs)?;
    let mut outputs = Vec::new();
    for artifact in campaign_artifacts(&result)? {
        outputs.push(write_file(out, &artifact.name, &artifact.contents)?);
    }
    outputs.push(write_json(
        out,
        "summary.json",
        &json!({
            "n": result.n,
            "runs_ok": result.runs_ok,
            "ill_posed_runs": result.ill_posed_runs,
            "capped_runs": result.capped_runs,
            "bound_violations": result.bound_violations,
            "statistics": result.statistics,
        }),
    )?);
    write_manifest(out, "campaign", serde_json::to_value(&config)?, json!({ "keep_runs": keep_runs }), &outputs)?;
    for s in &result.statistics {
        let f = |x: Option<f64>| x.map_or_else(|| "nan".to_string(), |v| format!("{v:.3}"));
        println!(
            "{:8} pearson {} spearman {} top5 {}",
            s.measure.broadcast_name(),
            f(s.pearson),
            f(s.spearman),
            f(s.top5)
        );
    }
    if !result.bound_violations.is_empty() {
        eprintln!("warning: {} centrality bound violations, see summary.json", result.bound_violations.len());
    }
    Ok(())
}
