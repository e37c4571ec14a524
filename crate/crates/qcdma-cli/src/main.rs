//! `qcdma` — experiment harness for the spread-spectrum single-photon
//! network simulator. Reproduces the loss, crosstalk and fidelity tables
//! and the per-channel transmission traces.

mod report;
mod spec;

use std::path::PathBuf;

use anyhow::bail;
use clap::{Args, Parser, Subcommand};

use qcdma::codes::{build_family, CodeExport, LfsrSpec};
use qcdma::metrics::{
    crosstalk_probability, photon_loss_probability, photon_number_density, state_fidelity_sweep,
    Background,
};
use qcdma::network::{propagate, FilterRule, NetworkConfig};

use report::{fidelity_rows, render};
use spec::{load_config, BitSpec, ExperimentSpec, OutputFormat};

#[derive(Parser)]
#[command(
    name = "qcdma",
    about = "Spread-spectrum (CDMA) single-photon network simulator",
    long_about = "Monte Carlo experiments over a shared-fiber add-drop multiplexer chain.\n\
                  Worker count is capped by the QCDMA_THREADS environment variable.",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Configuration file with `key: value` lines; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Spreading exponent(s) n, comma-separated; S = 2^n - 1.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<u32>>,

    /// User count(s) N, comma-separated.
    #[arg(long, value_delimiter = ',')]
    users: Option<Vec<usize>>,

    /// Trials for the loss and fidelity experiments.
    #[arg(long)]
    trials: Option<usize>,

    /// Runs for the crosstalk experiment.
    #[arg(long)]
    runs: Option<usize>,

    /// Bits per user: a bin count, or comma-separated 0/1 patterns.
    #[arg(long)]
    bits: Option<String>,

    /// Master seed; sub-seeds are derived per trial.
    #[arg(long)]
    seed: Option<u64>,

    /// Samples per chip M.
    #[arg(long)]
    samples_per_chip: Option<usize>,

    /// Grating profile: wide | narrow | brickwall.
    #[arg(long)]
    filter_rule: Option<String>,

    /// Background traffic during the fidelity sweep: silent | random.
    #[arg(long)]
    background: Option<String>,

    /// Emit all packets with phase 0 instead of random phases.
    #[arg(long)]
    in_phase: bool,

    /// Permit n > 15 (memory grows linearly in S).
    #[arg(long)]
    allow_large: bool,

    /// Output format: csv | json | table.
    #[arg(long)]
    format: Option<String>,

    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Mean photon-loss probability per (S, N) cell.
    LossTable(CommonArgs),
    /// Mean crosstalk into a random empty channel-bin per (S, N) cell.
    CrosstalkTable(CommonArgs),
    /// Fidelity of the four time-bin states per (S, N) cell.
    FidelityTable(CommonArgs),
    /// Per-channel photon-number density traces for one transmission.
    DensityTrace {
        #[command(flatten)]
        common: CommonArgs,
        /// Also write the run manifest (config, seed, photon ledger) as JSON.
        #[arg(long)]
        manifest: Option<PathBuf>,
    },
    /// Correlation identities of the code family; optional chip export.
    CodeCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Cyclic shift of the exported code.
        #[arg(long, default_value_t = 0)]
        shift: usize,
        /// Export the code chips to this path (text: one chip per line;
        /// json: compact {n, taps, shift, chips}).
        #[arg(long)]
        export: Option<PathBuf>,
    },
}

/// Defaults, overlaid with the config file, overlaid with flags.
fn effective_spec(args: &CommonArgs) -> anyhow::Result<ExperimentSpec> {
    let mut spec = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentSpec::default(),
    };
    if let Some(n) = &args.n {
        spec.exponents = n.clone();
    }
    if let Some(u) = &args.users {
        spec.users = u.clone();
    }
    if let Some(t) = args.trials {
        spec.trials = t;
    }
    if let Some(r) = args.runs {
        spec.runs = r;
    }
    if let Some(b) = &args.bits {
        spec.bits = BitSpec::parse(b)?;
    }
    if let Some(s) = args.seed {
        spec.seed = s;
    }
    if let Some(m) = args.samples_per_chip {
        spec.samples_per_chip = m;
    }
    if let Some(f) = &args.filter_rule {
        spec.filter_rule = FilterRule::parse(f)?;
    }
    if let Some(b) = &args.background {
        spec.background = Background::parse(b)?;
    }
    if args.in_phase {
        spec.in_phase = true;
    }
    if args.allow_large {
        spec.allow_large = true;
    }
    if let Some(f) = &args.format {
        spec.format = OutputFormat::parse(f)?;
    }
    if let Some(o) = &args.out {
        spec.out = Some(o.clone());
    }
    spec.validate()?;
    Ok(spec)
}

fn network_config(spec: &ExperimentSpec, n: u32, users: usize) -> NetworkConfig {
    NetworkConfig {
        users,
        exponent: n,
        samples_per_chip: spec.samples_per_chip,
        bits_per_user: spec.bits.bin_count(),
        filter_rule: spec.filter_rule,
        in_phase: spec.in_phase,
    }
}

fn run_loss_table(args: &CommonArgs) -> anyhow::Result<()> {
    let spec = effective_spec(args)?;
    let mut rows = Vec::new();
    for &n in &spec.exponents {
        for &users in &spec.users {
            let cfg = network_config(&spec, n, users);
            let r = photon_loss_probability(&cfg, spec.trials, spec.seed)?;
            rows.push((&r).into());
        }
    }
    report::emit(
        &spec,
        &render(&spec, "loss-table", report::TableKind::Loss, &rows),
    )
}

fn run_crosstalk_table(args: &CommonArgs) -> anyhow::Result<()> {
    let spec = effective_spec(args)?;
    let mut rows = Vec::new();
    for &n in &spec.exponents {
        for &users in &spec.users {
            let cfg = network_config(&spec, n, users);
            let r = crosstalk_probability(&cfg, spec.runs, spec.seed)?;
            rows.push((&r).into());
        }
    }
    report::emit(
        &spec,
        &render(&spec, "crosstalk-table", report::TableKind::Crosstalk, &rows),
    )
}

fn run_fidelity_table(args: &CommonArgs) -> anyhow::Result<()> {
    let spec = effective_spec(args)?;
    let mut rows = Vec::new();
    for &n in &spec.exponents {
        for &users in &spec.users {
            let cfg = network_config(&spec, n, users);
            let results = state_fidelity_sweep(&cfg, spec.trials, spec.seed, spec.background)?;
            for r in &results {
                rows.extend(fidelity_rows(r));
            }
        }
    }
    report::emit(
        &spec,
        &render(&spec, "fidelity-table", report::TableKind::Fidelity, &rows),
    )
}

fn run_density_trace(args: &CommonArgs, manifest: Option<&PathBuf>) -> anyhow::Result<()> {
    let spec = effective_spec(args)?;
    if spec.exponents.len() != 1 || spec.users.len() != 1 {
        bail!("density-trace takes exactly one n and one user count");
    }
    let users = spec.users[0];
    let cfg = network_config(&spec, spec.exponents[0], users);

    let bits: Vec<Vec<bool>> = match &spec.bits {
        BitSpec::Patterns(patterns) => {
            if patterns.len() != users {
                bail!(
                    "got {} bit patterns for {} users",
                    patterns.len(),
                    users
                );
            }
            patterns.clone()
        }
        BitSpec::Count(bins) => {
            // random bits, drawn deterministically from the master seed
            use qcdma::metrics::sub_seed;
            let mut rows = Vec::with_capacity(users);
            for u in 0..users {
                let mut x = sub_seed(spec.seed, u as u64);
                let mut row = Vec::with_capacity(*bins);
                for _ in 0..*bins {
                    x = x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    row.push((x >> 62) & 1 == 1);
                }
                rows.push(row);
            }
            rows
        }
    };

    let outcome = propagate(&cfg, &bits, spec.seed)?;
    let trace = photon_number_density(&outcome);

    let mut content = spec.header("density-trace");
    content.push_str(&trace.to_csv());
    report::emit(&spec, &content)?;

    if let Some(path) = manifest {
        let json = serde_json::to_string_pretty(&outcome.manifest())? + "\n";
        report::write_file(path, &json)?;
    }
    Ok(())
}

fn run_code_check(
    args: &CommonArgs,
    shift: usize,
    export: Option<&PathBuf>,
) -> anyhow::Result<()> {
    let spec = effective_spec(args)?;
    if spec.exponents.len() != 1 {
        bail!("code-check takes exactly one n");
    }
    let n = spec.exponents[0];
    let lfsr = LfsrSpec::for_register_count(n)?;
    let s = lfsr.period();
    let family = build_family(&lfsr, s.min(64))?;

    let mut out = spec.header("code-check");
    out.push_str(&format!("# S = {s}, taps = {:?}\n", lfsr.taps));
    if s <= 32 {
        out.push_str("# correlation matrix (diagonal = S, off-diagonal = -1)\n");
        for p in 0..s {
            let row: Vec<String> = (0..s)
                .map(|q| {
                    family.code(p)
                        .correlation(family.code(q))
                        .expect("equal lengths")
                        .to_string()
                })
                .collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
    } else {
        let c0 = family.code(0);
        let auto = c0.correlation(c0).expect("equal lengths");
        let mut cross_ok = true;
        for q in 1..family.len() {
            if c0.correlation(family.code(q)).expect("equal lengths") != -1 {
                cross_ok = false;
            }
        }
        out.push_str(&format!(
            "# autocorrelation = {auto}, first {} cross-correlations all -1: {cross_ok}\n",
            family.len() - 1
        ));
    }
    report::emit(&spec, &out)?;

    if let Some(path) = export {
        let code = family.base().cyclic_shift(shift);
        match spec.format {
            OutputFormat::Json => {
                let doc = CodeExport {
                    n,
                    taps: &lfsr.taps,
                    shift: code.shift(),
                    chips: code.chips(),
                };
                report::write_file(path, &(serde_json::to_string(&doc)? + "\n"))?;
            }
            _ => report::write_file(path, &code.to_chip_lines())?,
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::LossTable(args) => run_loss_table(args),
        Command::CrosstalkTable(args) => run_crosstalk_table(args),
        Command::FidelityTable(args) => run_fidelity_table(args),
        Command::DensityTrace { common, manifest } => {
            run_density_trace(common, manifest.as_ref())
        }
        Command::CodeCheck {
            common,
            shift,
            export,
        } => run_code_check(common, *shift, export.as_ref()),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
