use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use goflab_cli::advise::DEFAULT_VERY_LARGE_N;
use goflab_cli::commands::{self, clock_seed, Methods};
use goflab_cli::Result;
use goflab_core::dataset::{InterceptMode, LoadOptions};
use goflab_core::grouping::GroupingMethod;

#[derive(Parser)]
#[command(
    name = "gof-lab",
    version,
    about = "Hosmer-Lemeshow and generalized HL goodness-of-fit tests"
)]
struct Cli {
    /// Master seed; without it a clock-derived seed is used and reported.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataOptions {
    /// Name of the binary response column.
    #[arg(long, default_value = "y")]
    response: String,
    /// Field delimiter (a single byte).
    #[arg(long, default_value = ",")]
    delimiter: char,
    /// How to treat the intercept column.
    #[arg(long, value_enum, default_value_t = Intercept::Auto)]
    intercept: Intercept,
}

#[derive(Clone, Copy, ValueEnum)]
enum Intercept {
    Auto,
    Prepend,
    Present,
}

impl DataOptions {
    fn load_options(&self) -> Result<LoadOptions> {
        if !self.delimiter.is_ascii() {
            return Err(goflab_cli::CliError::Usage(format!(
                "delimiter {:?} is not a single byte",
                self.delimiter
            )));
        }
        Ok(LoadOptions {
            delimiter: self.delimiter as u8,
            response: self.response.clone(),
            intercept: match self.intercept {
                Intercept::Auto => InterceptMode::Auto,
                Intercept::Prepend => InterceptMode::Prepend,
                Intercept::Present => InterceptMode::Present,
            },
        })
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Hl,
    Ghl,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a logistic model to a CSV file and run HL and/or GHL.
    Test {
        #[arg(long)]
        data: PathBuf,
        #[arg(long = "G", default_value_t = 10)]
        groups: usize,
        #[arg(long, default_value = "balanced")]
        grouping: GroupingMethod,
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        #[command(flatten)]
        data_options: DataOptions,
    },
    /// Run a Monte Carlo grid from a key = value config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Append full-precision columns.
        #[arg(long)]
        long: bool,
    },
    /// Draw SVG charts (and tidy CSVs) from a results file.
    Plot {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        outdir: PathBuf,
        /// Nominal level for the reference line.
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Raw data for a covariate scatter.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        data_options: DataOptions,
    },
    /// Recommend HL, GHL or both.
    Advise {
        #[arg(long)]
        n: Option<usize>,
        /// Unique covariate patterns or estimated clusters.
        #[arg(long)]
        m: Option<usize>,
        #[arg(long)]
        d: Option<usize>,
        #[arg(long = "very-large-n", default_value_t = DEFAULT_VERY_LARGE_N)]
        very_large_n: usize,
        /// Measure n, m and d from a data file.
        #[arg(long)]
        data: Option<PathBuf>,
        #[command(flatten)]
        data_options: DataOptions,
    },
    /// Write one simulated dataset under the null model.
    Generate {
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 50)]
        m: usize,
        #[arg(long, default_value_t = 2)]
        d: usize,
        #[arg(long = "sigma2-e", default_value_t = 0.0)]
        sigma2_e: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn seed_or_clock(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let s = clock_seed();
        eprintln!("no seed given; using seed {s}");
        s
    })
}

fn run(cli: Cli) -> Result<()> {
    let mut stdout = std::io::stdout().lock();
    match cli.command {
        Command::Test {
            data,
            groups,
            grouping,
            method,
            data_options,
        } => {
            let args = commands::TestArgs {
                data,
                groups,
                grouping,
                methods: match method {
                    MethodArg::Hl => Methods::Hl,
                    MethodArg::Ghl => Methods::Ghl,
                    MethodArg::Both => Methods::Both,
                },
                load: data_options.load_options()?,
                seed: seed_or_clock(cli.seed),
            };
            commands::cmd_test(&args, &mut stdout)?;
        }
        Command::Simulate {
            config,
            out,
            workers,
            long,
        } => {
            let summaries = commands::cmd_simulate(&commands::SimulateArgs {
                config,
                out: out.clone(),
                workers,
                long,
                seed: cli.seed,
            })?;
            eprintln!("wrote {} rows to {}", 2 * summaries.len(), out.display());
        }
        Command::Plot {
            results,
            outdir,
            alpha,
            data,
            data_options,
        } => {
            let files = commands::cmd_plot(&commands::PlotArgs {
                results,
                outdir,
                alpha,
                data,
                load: data_options.load_options()?,
            })?;
            for f in files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Advise {
            n,
            m,
            d,
            very_large_n,
            data,
            data_options,
        } => {
            commands::cmd_advise(
                &commands::AdviseArgs {
                    n,
                    m,
                    d,
                    very_large_n,
                    data,
                    load: data_options.load_options()?,
                },
                &mut stdout,
            )?;
        }
        Command::Generate {
            n,
            m,
            d,
            sigma2_e,
            out,
        } => {
            commands::cmd_generate(&commands::GenerateArgs {
                n,
                m,
                d,
                sigma2_e,
                seed: seed_or_clock(cli.seed),
                out,
            })?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
