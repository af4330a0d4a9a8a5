use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use goflab_core::dataset::{aggregate_evps, load_dataset, Dataset, LoadOptions};
use goflab_core::ghl::ghl_test;
use goflab_core::grouping::{
    group_by_balanced_variance, group_by_quantiles, Grouping, GroupingMethod,
};
use goflab_core::hl::{hl_test, Method, TestResult};
use goflab_core::logistic::{fit_logistic, FitOptions};
use goflab_core::simulate::{gen_dataset, run_grid, substream, Purpose, Scenario, SimSummary};
use goflab_core::GofError;

use crate::advise::{advise, Recommendation};
use crate::config::GridConfig;
use crate::error::{CliError, Result};
use crate::plot;
use crate::results::{read_results, sig6, write_results};

/// A seed derived from the wall clock, used only when none is given.
pub fn clock_seed() -> u64 {
    let now = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .unwrap_or_default();
    now.as_secs().wrapping_mul(1_000_000_007) ^ u64::from(now.subsec_nanos())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Methods {
    Hl,
    Ghl,
    Both,
}

impl Methods {
    fn list(self) -> &'static [Method] {
        match self {
            Methods::Hl => &[Method::Hl],
            Methods::Ghl => &[Method::Ghl],
            Methods::Both => &[Method::Hl, Method::Ghl],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestArgs {
    pub data: PathBuf,
    pub groups: usize,
    pub grouping: GroupingMethod,
    pub methods: Methods,
    pub load: LoadOptions,
    pub seed: u64,
}

/// Fits the model, builds one grouping and runs the requested tests on it.
pub fn run_tests(data: &Dataset, args: &TestArgs) -> Result<(Grouping, Vec<TestResult>)> {
    let model = fit_logistic(data, &FitOptions::default())?;
    if !model.converged {
        return Err(GofError::NotConverged {
            iterations: model.iterations,
            score_norm: model.score_norm,
        }
        .into());
    }
    let grouping = match args.grouping {
        GroupingMethod::Quantile => group_by_quantiles(&model, args.groups)?,
        GroupingMethod::Balanced => group_by_balanced_variance(
            &model,
            args.groups,
            &mut substream(args.seed, 0, Purpose::Grouping),
        )?,
    };
    let mut results = Vec::new();
    for method in args.methods.list() {
        results.push(match method {
            Method::Hl => hl_test(&model, data, &grouping)?,
            Method::Ghl => ghl_test(&model, data, &grouping)?,
        });
    }
    Ok((grouping, results))
}

pub fn cmd_test<W: Write>(args: &TestArgs, out: &mut W) -> Result<Vec<TestResult>> {
    let data = load_dataset(&args.data, &args.load)?;
    let (grouping, results) = run_tests(&data, args)?;
    let io = |e| CliError::io("<stdout>", e);

    let summary = &results[0].groups;
    writeln!(
        out,
        "{:>5} {:>7} {:>10} {:>12} {:>10}",
        "group", "size", "observed", "expected", "pi_bar"
    )
    .map_err(io)?;
    for (g, s) in summary.groups.iter().enumerate() {
        writeln!(
            out,
            "{:>5} {:>7} {:>10} {:>12.4} {:>10.4}",
            g + 1,
            s.size,
            s.observed,
            s.expected,
            s.pi_bar
        )
        .map_err(io)?;
    }
    writeln!(out).map_err(io)?;
    writeln!(out, "method,statistic,df,p_value,G,n,grouping,seed").map_err(io)?;
    for r in &results {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.method,
            sig6(r.statistic),
            r.df,
            sig6(r.p_value),
            grouping.groups(),
            data.n(),
            args.grouping,
            args.seed
        )
        .map_err(io)?;
    }
    Ok(results)
}

pub type CellFailure = (Scenario, GofError);

/// Runs the grid and writes the results table. Cells that fail are reported
/// on stderr and left out of the table.
pub fn simulate_to<W: Write>(
    config: &GridConfig,
    seed: u64,
    workers: usize,
    long: bool,
    out: W,
) -> Result<(Vec<SimSummary>, Vec<CellFailure>)> {
    let scenarios = config.scenarios(seed)?;
    let outcomes = run_grid(&scenarios, workers)?;
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (s, r) in scenarios.into_iter().zip(outcomes) {
        match r {
            Ok(summary) => ok.push(summary),
            Err(e) => failed.push((s, e)),
        }
    }
    write_results(out, &ok, long)?;
    Ok((ok, failed))
}

#[derive(Debug, Clone)]
pub struct SimulateArgs {
    pub config: PathBuf,
    pub out: PathBuf,
    pub workers: usize,
    pub long: bool,
    pub seed: Option<u64>,
}

pub fn cmd_simulate(args: &SimulateArgs) -> Result<Vec<SimSummary>> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| CliError::io(&args.config, e))?;
    let config = GridConfig::parse(&text)?;
    let seed = match args.seed.or(config.seed) {
        Some(s) => s,
        None => {
            let s = clock_seed();
            eprintln!("no seed given; using seed {s}");
            s
        }
    };
    config.scenarios(seed)?;
    let file = std::fs::File::create(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let (ok, failed) = simulate_to(
        &config,
        seed,
        args.workers,
        args.long,
        std::io::BufWriter::new(file),
    )?;
    for s in &ok {
        if s.failures > 0 {
            let reasons: Vec<String> = s
                .failure_reasons
                .iter()
                .map(|(r, k)| format!("{r}={k}"))
                .collect();
            eprintln!(
                "m={} d={} G={} sigma2_e={}: {} of {} realizations excluded ({})",
                s.scenario.m,
                s.scenario.d,
                s.scenario.groups,
                sig6(s.scenario.sigma2_e),
                s.failures,
                s.scenario.reps,
                reasons.join(", ")
            );
        }
    }
    for (s, e) in &failed {
        eprintln!(
            "cell m={} d={} G={} sigma2_e={} failed: {e}",
            s.m,
            s.d,
            s.groups,
            sig6(s.sigma2_e)
        );
    }
    if failed.is_empty() {
        Ok(ok)
    } else {
        Err(CliError::CellsFailed {
            failed: failed.len(),
            total: failed.len() + ok.len(),
        })
    }
}

#[derive(Debug, Clone)]
pub struct PlotArgs {
    pub results: PathBuf,
    pub outdir: PathBuf,
    pub alpha: f64,
    pub data: Option<PathBuf>,
    pub load: LoadOptions,
}

pub fn cmd_plot(args: &PlotArgs) -> Result<Vec<PathBuf>> {
    let file = std::fs::File::open(&args.results).map_err(|e| CliError::io(&args.results, e))?;
    let rows = read_results(file)?;
    let scatter = match &args.data {
        Some(path) => {
            let data = load_dataset(path, &args.load)?;
            let title = format!("covariate patterns, {}", file_name(path));
            Some(plot::covariate_scatter(&data, &title)?)
        }
        None => None,
    };
    let mut written = plot::write_charts(&rows, &args.outdir, args.alpha)?;
    if let Some(svg) = scatter {
        let path = args.outdir.join("scatter.svg");
        std::fs::write(&path, svg).map_err(|e| CliError::io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Debug, Clone, Default)]
pub struct AdviseArgs {
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub very_large_n: usize,
    pub data: Option<PathBuf>,
    pub load: LoadOptions,
}

/// Explicit counts take precedence over those measured from `--data`, so
/// `--m` can carry an externally estimated cluster count.
pub fn cmd_advise<W: Write>(args: &AdviseArgs, out: &mut W) -> Result<Recommendation> {
    let measured = match &args.data {
        Some(path) => {
            let data = load_dataset(path, &args.load)?;
            let evp = aggregate_evps(&data);
            Some((data.n(), evp.m, data.d()))
        }
        None => None,
    };
    let pick = |given: Option<usize>, k: usize, name: &str| -> Result<usize> {
        given
            .or(measured.map(|t| [t.0, t.1, t.2][k]))
            .ok_or_else(|| CliError::Usage(format!("--{name} is required without --data")))
    };
    let (n, m, d) = (
        pick(args.n, 0, "n")?,
        pick(args.m, 1, "m")?,
        pick(args.d, 2, "d")?,
    );
    let rec = advise(n, m, d, args.very_large_n)?;
    let io = |e| CliError::io("<stdout>", e);
    writeln!(out, "{}", rec.verdict).map_err(io)?;
    writeln!(
        out,
        "inputs: n={} m={} d={} clustering={} very_large_n={}",
        rec.n, rec.m, rec.d, rec.clustering, rec.very_large_n
    )
    .map_err(io)?;
    for line in &rec.rationale {
        writeln!(out, "  {line}").map_err(io)?;
    }
    Ok(rec)
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    pub sigma2_e: f64,
    pub seed: u64,
    pub out: PathBuf,
}

/// Writes one simulated null dataset (realization 0 of the matching scenario).
pub fn cmd_generate(args: &GenerateArgs) -> Result<Dataset> {
    let scenario = Scenario {
        n: args.n,
        m: args.m,
        d: args.d,
        groups: 3.min(args.m),
        sigma2_e: args.sigma2_e,
        seed: args.seed,
        ..Scenario::default()
    };
    scenario.validate()?;
    let data = gen_dataset(&scenario, 0)?;
    data.save(&args.out)?;
    Ok(data)
}
