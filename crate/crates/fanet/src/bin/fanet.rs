//! Command-line front end: run experiment sweeps, query single routes or
//! links, and validate configuration files.
//!
//! Exit codes: 0 on success, 1 for configuration problems, 2 for runtime
//! failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fanet::config::{load_config, Overrides};
use fanet::harness::{
    build_scenario, evaluate_protocol, format_float, run_and_write, tracking_trace_csv,
    ExperimentConfig, Variant,
};
use fanet::routing::{expected_link_capacity, NetworkBelief, Protocol};
use fanet::{BeamPattern, UpaConfig};

#[derive(Parser)]
#[command(
    name = "fanet",
    about = "FANET mmWave routing simulator: DBR / SMURF / BA-SMURF comparison",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Experiment configuration file (TOML).
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Override: single density in UAVs/km^3.
    #[arg(long)]
    density: Option<f64>,
    /// Override: single antenna element count.
    #[arg(long)]
    antennas: Option<usize>,
    /// Override: restrict to one protocol (dbr | smurf | ba-smurf).
    #[arg(long)]
    protocol: Option<String>,
    /// Override: master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override: Monte Carlo samples per routing call.
    #[arg(long)]
    samples: Option<usize>,
    /// Override: output directory (otherwise FANET_OUTPUT_DIR, then the
    /// config value).
    #[arg(long, value_name = "DIR")]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment sweep and write run.csv / summary.csv.
    Run(CommonArgs),
    /// Compute one route on one generated network and print it.
    Route {
        #[command(flatten)]
        common: CommonArgs,
        /// Source UAV id (default: largest-separation pair).
        #[arg(long)]
        source: Option<usize>,
        /// Destination UAV id (default: largest-separation pair).
        #[arg(long)]
        dest: Option<usize>,
        /// Network index within the sweep.
        #[arg(long, default_value_t = 0)]
        network: u64,
        /// Route on true positions instead of the tracked belief.
        #[arg(long)]
        ideal: bool,
        /// Write the tracking warmup trace CSV to this path.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Print the Monte Carlo statistics of one link.
    ProbeLink {
        #[command(flatten)]
        common: CommonArgs,
        /// Transmitter UAV id.
        #[arg(long)]
        tx: usize,
        /// Receiver UAV id.
        #[arg(long)]
        rx: usize,
        /// Network index within the sweep.
        #[arg(long, default_value_t = 0)]
        network: u64,
    },
    /// Parse and validate a config file without writing anything.
    ValidateConfig(CommonArgs),
}

fn parse_protocol(name: &str) -> Result<Protocol, String> {
    match name.to_ascii_lowercase().as_str() {
        "dbr" => Ok(Protocol::Dbr),
        "smurf" => Ok(Protocol::Smurf),
        "ba-smurf" | "basmurf" => Ok(Protocol::BaSmurf),
        other => Err(format!("unknown protocol '{other}' (expected dbr | smurf | ba-smurf)")),
    }
}

fn to_overrides(args: &CommonArgs) -> Result<Overrides, String> {
    Ok(Overrides {
        density: args.density,
        antennas: args.antennas,
        protocol: args.protocol.as_deref().map(parse_protocol).transpose()?,
        seed: args.seed,
        samples: args.samples,
        output: args.output.clone(),
    })
}

fn load(args: &CommonArgs) -> Result<ExperimentConfig, ExitCode> {
    let overrides = to_overrides(args).map_err(|msg| {
        eprintln!("error: {msg}");
        ExitCode::from(1)
    })?;
    load_config(&args.config, &overrides).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(1)
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => code,
    }
}

fn run(cli: Cli) -> Result<(), ExitCode> {
    match cli.command {
        Command::ValidateConfig(args) => {
            // Surface file-not-found distinctly from constraint violations.
            let cfg = load(&args)?;
            println!(
                "config ok: {} densities x {} antenna configs x {} networks, {} protocols",
                cfg.densities.len(),
                cfg.antenna_elements.len(),
                cfg.n_networks,
                cfg.protocols.len()
            );
            Ok(())
        }
        Command::Run(args) => {
            let cfg = load(&args)?;
            let (output, paths) = run_and_write(&cfg).map_err(runtime_error)?;
            println!("{} runs written to {}", output.records.len(), paths[0].display());
            println!("summary written to {}", paths[1].display());
            print!("{}", human_summary(&output.summary_csv));
            Ok(())
        }
        Command::Route { common, source, dest, network, ideal, trace } => {
            let cfg = load(&common)?;
            let density = cfg.densities[0];
            let antennas = cfg.antenna_elements[0];
            let protocol = cfg.protocols.first().copied().unwrap_or(Protocol::BaSmurf);
            let scenario = build_scenario(&cfg, density, network).map_err(runtime_error)?;
            let (source, dest) =
                (source.unwrap_or(scenario.source), dest.unwrap_or(scenario.dest));
            if let Some(path) = &trace {
                let csv = tracking_trace_csv(&cfg, density, network).map_err(runtime_error)?;
                std::fs::write(path, csv).map_err(|e| {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    ExitCode::from(2)
                })?;
                println!("tracking trace written to {}", path.display());
            }
            let variant = if ideal { Variant::Ideal } else { Variant::Tracked };
            let mut scenario = scenario;
            scenario.source = source;
            scenario.dest = dest;
            let record =
                evaluate_protocol(&cfg, &scenario, protocol, variant, antennas, density, network)
                    .map_err(runtime_error)?;
            match &record.route {
                None => {
                    println!(
                        "{protocol}-{variant}: no route from {source} to {dest} ({} UAVs)",
                        record.k
                    );
                }
                Some(route) => {
                    println!(
                        "{protocol}-{variant}: route {:?} over {} UAVs",
                        route.path, record.k
                    );
                    println!(
                        "bottleneck {} bit/s, achieved {} bit/s, interference {} dB",
                        format_float(route.bottleneck_capacity),
                        format_float(record.throughput_bps),
                        format_float(record.interference_db),
                    );
                    for (w, beam) in route.link_weights.iter().zip(&route.beams) {
                        println!(
                            "  hop {} -> {}: E[C] {} bit/s (p_exist {:.3}, se {}), aim az {:.4} rad el {:.4} rad",
                            w.tx,
                            w.rx,
                            format_float(w.expected_capacity),
                            w.existence_probability,
                            format_float(w.mc_std_error),
                            beam.tx_aim.azimuth,
                            beam.tx_aim.elevation,
                        );
                    }
                }
            }
            Ok(())
        }
        Command::ProbeLink { common, tx, rx, network } => {
            let cfg = load(&common)?;
            let density = cfg.densities[0];
            let antennas = cfg.antenna_elements[0];
            let scenario = build_scenario(&cfg, density, network).map_err(runtime_error)?;
            let upa = UpaConfig::from_element_count(antennas, cfg.channel.wavelength())
                .map_err(|e| runtime_error(fanet::harness::HarnessError::Beamforming(e)))?;
            let beam = BeamPattern::full(&upa);
            let mut belief =
                NetworkBelief::new(scenario.tracked.clone(), cfg.channel, upa, beam);
            belief.cross_traffic = vec![cfg.cross_traffic; belief.len()];
            let seed = fanet::rng::derive_seed(
                cfg.master_seed,
                &[density.to_bits(), network, fanet::rng::tag::LINK_PROBE],
            );
            let weight = expected_link_capacity(&belief, tx, rx, cfg.n_mc_samples, seed)
                .map_err(|e| {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                })?;
            let d = (scenario.tracked.estimates[tx].mean - scenario.tracked.estimates[rx].mean)
                .norm();
            println!("link {tx} -> {rx} (estimated distance {:.2} m):", d);
            println!("  expected capacity    {} bit/s", format_float(weight.expected_capacity));
            println!("  existence probability {:.4}", weight.existence_probability);
            println!("  mc standard error    {} bit/s", format_float(weight.mc_std_error));
            Ok(())
        }
    }
}

fn runtime_error(e: fanet::harness::HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(2)
}

/// Renders the summary CSV as an aligned table for the terminal.
fn human_summary(summary_csv: &str) -> String {
    let mut out = String::new();
    let mut lines = summary_csv.lines();
    let Some(header) = lines.next() else { return out };
    let headers: Vec<&str> = header.split(',').collect();
    let rows: Vec<Vec<String>> = lines
        .map(|l| {
            l.split(',')
                .enumerate()
                .map(|(i, field)| {
                    if i >= 5 {
                        field
                            .parse::<f64>()
                            .map(|v| {
                                if headers[i].contains("db") {
                                    format!("{v:.2}")
                                } else {
                                    format!("{:.1}", v / 1e6)
                                }
                            })
                            .unwrap_or_else(|_| field.to_string())
                    } else {
                        field.to_string()
                    }
                })
                .collect()
        })
        .collect();
    out.push_str("cell means (throughput in Mb/s):\n");
    out.push_str(
        "protocol  var  density      M    n    mean      p25       p50       p75       intf_db\n",
    );
    for row in rows {
        out.push_str(&format!(
            "{:<9} {:<4} {:<12} {:<4} {:<4} {:<9} {:<9} {:<9} {:<9} {}\n",
            row[0], row[1], row[2], row[3], row[4], row[5], row[6], row[7], row[8], row[9]
        ));
    }
    out
}
