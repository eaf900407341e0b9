use std::fs;
use std::path::Path;
use std::time::Instant;

use embedplan_core::engine::{EmbeddingStore, MlpWeights, Precision, Query};
use embedplan_core::model::{
    generate_synthetic, load_spec, spec_to_json, CapacityRegime, MemoryHierarchySpec, ModelSpec,
    SizeProfile,
};
use embedplan_core::planner::{
    brute_force_plan, compare_planners, heuristic_plan, no_cartesian_plan, CostEstimate,
    PlacementPlan, PlanDocument, PlannerConfig,
};
use embedplan_core::simulator::{
    simulate_lookup, simulate_pipeline, LookupStats, PipelineConfig, SimulationReport,
};
use log::{debug, info};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Table count for `gen` when neither the flag nor the profile fixes one.
const DEFAULT_GEN_TABLES: usize = 47;
/// MLP weights are drawn from `seed` offset by this, so they do not share a
/// stream with table contents.
const WEIGHT_SEED_OFFSET: u64 = 0x9E37_79B9_7F4A_7C15;

struct Spec {
    model: ModelSpec,
    hierarchy: MemoryHierarchySpec,
    digest: String,
}

fn read_input(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))
}

fn load(path: &Path) -> Result<Spec, CliError> {
    let text = read_input(path)?;
    let (model, hierarchy) = load_spec(&text)?;
    Ok(Spec {
        model,
        hierarchy,
        digest: hex::encode(Sha256::digest(text.as_bytes())),
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    let mut text = text.to_owned();
    if !text.is_empty() && !text.ends_with('\n') {
        text.push('\n');
    }
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))
}

/// Reads a plan written by `plan`: either a whole report or a bare plan document.
fn load_plan(path: &Path, spec: &Spec) -> Result<PlacementPlan, CliError> {
    let text = read_input(path)?;
    let mut value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    if let Some(inner) = value.get_mut("plan") {
        value = inner.take();
    }
    let doc: PlanDocument = serde_json::from_value(value)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    Ok(doc.to_plan(
        &spec.model,
        &spec.hierarchy,
        PlannerConfig::default().product_cap_bytes,
    )?)
}

fn plan_or_default(plan: Option<&Path>, spec: &Spec) -> Result<PlacementPlan, CliError> {
    match plan {
        Some(path) => load_plan(path, spec),
        None => Ok(heuristic_plan(&spec.model, &spec.hierarchy, &PlannerConfig::default())?.0),
    }
}

pub fn gen(
    profile: &str,
    tables: Option<usize>,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let p = SizeProfile::by_name(profile).ok_or_else(|| {
        CliError::input(format!(
            "unknown profile '{profile}' (expected default, table3-small or table3-large)"
        ))
    })?;
    let n = tables
        .or(p.fixed_table_count())
        .unwrap_or(DEFAULT_GEN_TABLES);
    let model = generate_synthetic(n, &p, seed)?;
    info!("generated {n} tables with profile {profile}, seed {seed}");
    emit(out, &spec_to_json(&model, &MemoryHierarchySpec::default()))
}

pub struct PlanFlags {
    pub no_cartesian: bool,
    pub oracle: bool,
    pub timing: bool,
    pub items: u64,
}

#[derive(Debug, Serialize)]
struct PlanSummary {
    tables: usize,
    physical_tables: usize,
    cartesian_pairs: usize,
    onchip_tables: usize,
    offchip_tables: usize,
    dram_rounds: u64,
    lookup_latency_ns: f64,
    storage_overhead_ratio: f64,
}

#[derive(Debug, Serialize)]
struct OracleReport {
    cost: CostEstimate,
    /// Planner latency over oracle latency.
    latency_ratio: f64,
    matches: bool,
}

#[derive(Debug, Serialize)]
struct PlanReport {
    spec_digest: String,
    planner: &'static str,
    summary: PlanSummary,
    cost: CostEstimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    oracle: Option<OracleReport>,
    simulation: SimulationReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    planner_time_ms: Option<f64>,
    plan: PlanDocument,
}

pub fn plan(spec_path: &Path, flags: &PlanFlags, out: Option<&Path>) -> Result<(), CliError> {
    let spec = load(spec_path)?;
    let cfg = PlannerConfig::default();
    if flags.oracle && spec.model.num_tables() > cfg.brute_force_limit {
        return Err(CliError::input(format!(
            "--oracle supports at most {} tables, spec has {}",
            cfg.brute_force_limit,
            spec.model.num_tables()
        )));
    }

    let start = Instant::now();
    let (planner, (plan, cost)) = if flags.no_cartesian {
        (
            "no-cartesian",
            no_cartesian_plan(&spec.model, &spec.hierarchy)?,
        )
    } else {
        (
            "heuristic",
            heuristic_plan(&spec.model, &spec.hierarchy, &cfg)?,
        )
    };
    let elapsed_ms = start.elapsed().as_secs_f64() * 1e3;
    info!("{planner} planner finished in {elapsed_ms:.3} ms");

    let oracle = if flags.oracle {
        let (_, oc) = brute_force_plan(&spec.model, &spec.hierarchy, &cfg)?;
        Some(OracleReport {
            cost: oc,
            latency_ratio: cost.lookup_latency_ns / oc.lookup_latency_ns,
            matches: cost.lookup_latency_ns == oc.lookup_latency_ns,
        })
    } else {
        None
    };

    let simulation = simulate_pipeline(
        &spec.model,
        &plan,
        &spec.hierarchy,
        &PipelineConfig::default(),
        flags.items,
    )
    .map_err(|e| CliError::input(e.to_string()))?;

    let report = PlanReport {
        spec_digest: spec.digest,
        planner,
        summary: PlanSummary {
            tables: spec.model.num_tables(),
            physical_tables: cost.physical_tables,
            cartesian_pairs: plan.cartesian_pairs().len(),
            onchip_tables: cost.onchip_tables,
            offchip_tables: cost.offchip_tables,
            dram_rounds: cost.dram_rounds,
            lookup_latency_ns: cost.lookup_latency_ns,
            storage_overhead_ratio: cost.overhead_ratio,
        },
        cost,
        oracle,
        simulation,
        planner_time_ms: flags.timing.then_some(elapsed_ms),
        plan: PlanDocument::new(&plan, &cost),
    };
    emit(out, &to_json(&report)?)
}

#[derive(Debug, Serialize)]
struct SimulateReport {
    spec_digest: String,
    pipeline: PipelineConfig,
    lookup: LookupStats,
    simulation: SimulationReport,
}

pub fn simulate(
    spec_path: &Path,
    plan: Option<&Path>,
    items: u64,
    overhead_ns: f64,
    csv: Option<&Path>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if !(overhead_ns.is_finite() && overhead_ns >= 0.0) {
        return Err(CliError::input(
            "--overhead-ns must be a non-negative number",
        ));
    }
    let spec = load(spec_path)?;
    let plan = plan_or_default(plan, &spec)?;
    let pipeline = PipelineConfig {
        lookup_overhead_ns: overhead_ns,
        ..PipelineConfig::default()
    };
    let simulation = simulate_pipeline(&spec.model, &plan, &spec.hierarchy, &pipeline, items)
        .map_err(|e| CliError::input(e.to_string()))?;
    if let Some(path) = csv {
        fs::write(path, simulation.stages_csv())
            .map_err(|e| CliError::Internal(format!("cannot write {}: {e}", path.display())))?;
    }
    let report = SimulateReport {
        spec_digest: spec.digest,
        pipeline,
        lookup: simulate_lookup(&plan, &spec.hierarchy, items, overhead_ns),
        simulation,
    };
    emit(out, &to_json(&report)?)
}

pub fn run(
    spec_path: &Path,
    plan: Option<&Path>,
    queries: &Path,
    precision: u32,
    seed: u64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let precision = Precision::try_from(precision).map_err(CliError::Input)?;
    let spec = load(spec_path)?;
    let text = read_input(queries)?;
    let plan = plan_or_default(plan, &spec)?;
    let store = EmbeddingStore::<f32>::build(&spec.model, &plan, seed)?;
    let mlp = MlpWeights::<f32>::random(
        spec.model.concat_length(),
        &spec.model.hidden_dims,
        seed.wrapping_add(WEIGHT_SEED_OFFSET),
    )
    .prepare(precision);

    let mut lines = String::new();
    for (k, line) in text.lines().enumerate() {
        let line_no = k + 1;
        if line.trim().is_empty() {
            continue;
        }
        let indices: Vec<u64> = serde_json::from_str(line)
            .map_err(|e| CliError::input(format!("{}:{line_no}: {e}", queries.display())))?;
        let vector = store
            .lookup_concat(&Query::new(indices))
            .map_err(|e| CliError::input(format!("{}:{line_no}: {e}", queries.display())))?;
        let ctr = mlp.forward(&vector)?;
        debug!("query {line_no}: ctr {ctr}");
        lines.push_str(&format!("{ctr}\n"));
    }
    emit(out, &lines)
}

pub fn compare(
    seeds: u64,
    n_min: usize,
    n_max: usize,
    regime: CapacityRegime,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let cfg = PlannerConfig::default();
    if n_min == 0 || n_min > n_max {
        return Err(CliError::input(format!(
            "invalid table range {n_min}..={n_max}"
        )));
    }
    if n_max > cfg.brute_force_limit {
        return Err(CliError::input(format!(
            "--n-max {n_max} exceeds the exhaustive planner limit of {}",
            cfg.brute_force_limit
        )));
    }
    let mut csv =
        String::from("n_tables,instances,skipped,matches,match_rate,mean_gap_ns,max_ratio\n");
    for n in n_min..=n_max {
        let s = compare_planners(n, 0..seeds, regime, &cfg)?;
        info!("N={n}: {}/{} matches", s.matches, s.instances);
        csv.push_str(&format!(
            "{},{},{},{},{:.4},{:.3},{:.4}\n",
            s.n_tables,
            s.instances,
            s.skipped,
            s.matches,
            s.match_rate(),
            s.mean_gap_ns,
            s.max_ratio
        ));
    }
    emit(out, &csv)
}
