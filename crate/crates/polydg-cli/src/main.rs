use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use polydg_cli::commands::{self, BenchArgs, MeshArgs, MmsArgs};

/// Polytopal DG solver for coupled multi-network poroelasticity and
/// (Navier-)Stokes flow.
#[derive(Parser)]
#[command(name = "polydg", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a coupled simulation from a TOML config file.
    Run {
        /// Path to the configuration file.
        config: PathBuf,
    },
    /// Manufactured-solution convergence study.
    Mms(MmsCli),
    /// Poisson benchmark: agglomerated vs standard meshes on the inclusion
    /// domain.
    BenchPoisson(BenchCli),
    /// Build, optionally agglomerate, and export a mesh.
    Mesh(MeshCli),
}

#[derive(Args)]
struct MmsCli {
    /// Polynomial degrees to test.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    degrees: Vec<usize>,
    /// Cells per direction and subdomain for each refinement.
    #[arg(long, value_delimiter = ',', default_value = "2,4,8")]
    cells: Vec<usize>,
    /// Time step size.
    #[arg(long, default_value_t = 1e-3)]
    dt: f64,
    /// Number of time steps.
    #[arg(long, default_value_t = 5)]
    steps: usize,
    /// Spatial exponent M of the manufactured fields.
    #[arg(long, default_value_t = 5)]
    exponent: u32,
    /// Temporal envelope: exp or poly.
    #[arg(long, default_value = "exp")]
    envelope: String,
    /// Use the Navier-Stokes fluid model instead of Stokes.
    #[arg(long)]
    navier_stokes: bool,
    /// Interface slip-rate coefficient.
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Fail (exit 3) unless every fitted slope is within this window of its
    /// degree.
    #[arg(long)]
    check_window: Option<f64>,
}

#[derive(Args)]
struct BenchCli {
    /// Cells per direction of the fine standard mesh.
    #[arg(long, default_value_t = 96)]
    n_fine: usize,
    /// Number of disk inclusions removed from the unit square.
    #[arg(long, default_value_t = 5)]
    disks: usize,
    /// Disk diameter.
    #[arg(long, default_value_t = 0.02)]
    eps: f64,
    /// Inclusion sampling seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Degrees for the standard fine mesh.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    degrees: Vec<usize>,
    /// Agglomerated element counts.
    #[arg(long, value_delimiter = ',', default_value = "45,90")]
    agglomerates: Vec<usize>,
    /// Degrees for the agglomerated meshes.
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    agg_degrees: Vec<usize>,
    /// Interior-penalty constant.
    #[arg(long, default_value_t = 10.0)]
    eta: f64,
    /// Timing repetitions (median reported).
    #[arg(long, default_value_t = 3)]
    repeats: usize,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Zero the timing columns for bit-reproducible output.
    #[arg(long)]
    no_timing: bool,
    /// Run cases concurrently; timing columns become NaN (unreliable).
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct MeshCli {
    /// stack | pocket | square-el | square-f | inclusion
    #[arg(long)]
    kind: String,
    /// Cells in x (also the inclusion-mesh resolution).
    #[arg(long, default_value_t = 8)]
    nx: usize,
    /// Cells in y.
    #[arg(long, default_value_t = 8)]
    ny: usize,
    /// Disk count for the inclusion mesh.
    #[arg(long, default_value_t = 5)]
    disks: usize,
    /// Disk diameter for the inclusion mesh.
    #[arg(long, default_value_t = 0.02)]
    eps: f64,
    /// Inclusion sampling seed.
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Agglomerate into this many elements per subdomain.
    #[arg(long)]
    agglomerate: Option<usize>,
    /// Output path for the mesh text file.
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run { config } => commands::cmd_run(&config),
        Command::Mms(a) => commands::cmd_mms(&MmsArgs {
            degrees: a.degrees,
            cells: a.cells,
            dt: a.dt,
            steps: a.steps,
            exponent: a.exponent,
            envelope: a.envelope,
            navier_stokes: a.navier_stokes,
            gamma: a.gamma,
            out: a.out,
            check_window: a.check_window,
        }),
        Command::BenchPoisson(a) => commands::cmd_bench(&BenchArgs {
            n_fine: a.n_fine,
            disks: a.disks,
            eps: a.eps,
            seed: a.seed,
            degrees: a.degrees,
            agglomerates: a.agglomerates,
            agg_degrees: a.agg_degrees,
            eta: a.eta,
            repeats: a.repeats,
            out: a.out,
            no_timing: a.no_timing,
            parallel: a.parallel,
        }),
        Command::Mesh(a) => commands::cmd_mesh(&MeshArgs {
            kind: a.kind,
            nx: a.nx,
            ny: a.ny,
            disks: a.disks,
            eps: a.eps,
            seed: a.seed,
            agglomerate: a.agglomerate,
            out: a.out,
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
