#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::AtomicBool;
use std::time::Duration;

use asid_core::airframe;
use asid_core::atmosphere::AtmosphereModel;
use asid_core::groundstation;
use asid_core::mission::{self, SoundingPattern};
use asid_core::pipeline::{self, RunConfig};
use asid_core::synclink::{self, TcpTransport};
use asid_core::{Error, SdCardImage};
use chrono::NaiveDateTime;
use clap::{Args, Parser, Subcommand};

const EXIT_USAGE: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_SIMULATION: u8 = 3;
const EXIT_TRANSPORT: u8 = 4;
const EXIT_DATA: u8 = 5;

/// Drone weather-sounding simulator and ground-station tools.
#[derive(Debug, Parser)]
#[command(name = "asid", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fly the configured sounding and write the logger's card image.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the environment's random seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Serve a card image over HTTP the way the logger does.
    Serve {
        #[arg(long)]
        sdcard: PathBuf,
        #[arg(long)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        bind: String,
        /// Exit after this many connections.
        #[arg(long)]
        max_connections: Option<usize>,
    },
    /// Download air.csv then ground.csv from a serving logger.
    Sync {
        #[arg(long)]
        host: String,
        #[arg(long)]
        port: u16,
        #[arg(long)]
        out: PathBuf,
        /// Connect and read timeout, seconds.
        #[arg(long, default_value_t = 10.0)]
        timeout: f64,
    },
    /// Build the weather report and plots from synced logs.
    Report {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Processing time printed in the report, e.g. 2021-06-01T12:00:00. Defaults to now.
        #[arg(long)]
        generated_at: Option<NaiveDateTime>,
    },
    /// Print thrust, ceiling, speed, drift and endurance figures.
    Sizing {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Print JSON instead of text.
        #[arg(long)]
        json: bool,
    },
    /// Generate or check autopilot mission files.
    #[command(subcommand)]
    Mission(MissionCommand),
    /// Print the default run configuration.
    Config,
}

#[derive(Debug, Subcommand)]
enum MissionCommand {
    /// Generate a stepped sounding mission.
    Gen(GenArgs),
    /// Check a mission file against the airframe's ceiling.
    Validate {
        file: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Top level, m.
    #[arg(long, default_value_t = 40.0)]
    target: f64,
    #[arg(long, default_value_t = 10.0)]
    start: f64,
    #[arg(long, default_value_t = 10.0)]
    step: f64,
    /// Write here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::Json(_) => EXIT_CONFIG,
        Error::Simulation(_) => EXIT_SIMULATION,
        Error::Transport(_) | Error::Protocol(_) => EXIT_TRANSPORT,
        Error::Parse { .. } | Error::Data(_) | Error::Io(_) => EXIT_DATA,
    }
}

fn load_config(path: Option<&Path>) -> asid_core::Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn simulate(config: &Path, out: &Path, seed: Option<u64>) -> asid_core::Result<()> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(seed) = seed {
        cfg.environment.rng_seed = seed;
    }
    let result = pipeline::simulate_to_dir(&cfg, out)?;
    let log = &result.log;
    println!("flight time       {:.1} s", result.trajectory.duration());
    println!(
        "max altitude      {:.1} m",
        result.trajectory.max_altitude()
    );
    println!(
        "photos            {}",
        result.trajectory.camera_events.len()
    );
    println!("ground rows       {}", log.ground_rows.len());
    println!("air rows          {}", log.air_rows.len());
    match log.server_started_ms {
        Some(ms) => println!(
            "server started    {:.1} s after power-on",
            ms as f64 / 1000.0
        ),
        None => println!("server started    never"),
    }
    println!(
        "landing offset    {:.0} m",
        result.trajectory.landing_offset
    );
    println!("written to        {}", out.display());
    Ok(())
}

fn serve(sdcard: &Path, bind: &str, port: u16, limit: Option<usize>) -> asid_core::Result<()> {
    let mut sd = SdCardImage::open_dir(sdcard)
        .map_err(|e| Error::Data(format!("cannot open card image {}: {e}", sdcard.display())))?;
    let listener = TcpListener::bind((bind, port))
        .map_err(|e| Error::Transport(format!("cannot listen on {bind}:{port}: {e}")))?;
    let addr = listener.local_addr()?;
    println!("listening on {addr}");
    std::io::stdout().flush()?;
    let stop = AtomicBool::new(false);
    synclink::run_server(&listener, &mut sd, limit, &stop)?;
    Ok(())
}

fn sync(host: &str, port: u16, out: &Path, timeout: f64) -> asid_core::Result<()> {
    if !(timeout > 0.0) {
        return Err(Error::Config(format!(
            "timeout must be positive, got {timeout}"
        )));
    }
    let mut transport = TcpTransport {
        timeout: Duration::from_secs_f64(timeout),
        ..TcpTransport::new(host, port)
    };
    let result = synclink::sync(&mut transport)?;
    synclink::persist(&result, out)?;
    println!(
        "synced {} bytes of air log and {} bytes of ground log into {}",
        result.air.len(),
        result.ground.len(),
        out.display()
    );
    Ok(())
}

fn report(input: &Path, out: &Path, generated_at: Option<NaiveDateTime>) -> asid_core::Result<()> {
    let generated_at = generated_at.unwrap_or_else(|| chrono::Local::now().naive_local());
    let bundle = groundstation::build_bundle(input, generated_at)?;
    groundstation::write_bundle(&bundle, out)?;
    print!(
        "{}",
        groundstation::render_text_report(&bundle.report, generated_at)
    );
    Ok(())
}

fn sizing(config: Option<&Path>, json: bool) -> asid_core::Result<()> {
    let cfg = load_config(config)?;
    let r = pipeline::sizing(&cfg)?;
    if json {
        println!("{}", serde_json::to_string_pretty(&r)?);
        return Ok(());
    }
    let opt = |v: Option<f64>, digits: usize| {
        v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.digits$}"))
    };
    println!("thrust/weight            {:.2}", r.thrust_to_weight);
    println!("service ceiling          {} m", opt(r.service_ceiling, 0));
    println!(
        "required static thrust   {:.0} g ({:.0} g per motor) for {:.2}x weight at {:.0} m",
        r.required_static_thrust, r.required_per_motor, cfg.sizing.thrust_margin, r.design_altitude
    );
    println!(
        "max progressive speed    {} km/h",
        opt(r.max_progressive_speed, 1)
    );
    println!("battery max load         {:.0} A", r.battery_max_load);
    println!(
        "endurance                {} min",
        opt(r.endurance.map(|s| s / 60.0), 1)
    );
    match r.expected_flights {
        Some(n) => println!("expected flights         {n}"),
        None => println!("expected flights         n/a"),
    }
    println!("drift over {:.0} s:", cfg.sizing.drift_duration);
    for d in &r.drift {
        println!(
            "  Bft {:>2}  {:>5.0} km/h  {:>6.0} m",
            d.beaufort, d.wind_kmh, d.drift_m
        );
    }
    Ok(())
}

fn mission_gen(args: &GenArgs) -> asid_core::Result<()> {
    let pattern = SoundingPattern {
        start_alt: args.start,
        step: args.step,
        ..SoundingPattern::new(args.target)
    };
    let plan = mission::generate_sounding_profile(&pattern).map_err(|e| match e {
        Error::Domain(msg) => Error::Config(msg),
        other => other,
    })?;
    let text = mission::serialize(&plan);
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn mission_validate(file: &Path, config: Option<&Path>) -> asid_core::Result<()> {
    let cfg = load_config(config)?;
    let text = fs::read_to_string(file)?;
    let plan = mission::parse(&text)?;
    let ceiling = airframe::service_ceiling(&cfg.airframe, &AtmosphereModel::isa())?;
    let violations = mission::validate(&plan, ceiling);
    if violations.is_empty() {
        println!(
            "ok: {} commands, {} photos, top {:.1} m (ceiling {:.0} m)",
            plan.commands.len(),
            plan.capture_count(),
            plan.max_altitude(),
            ceiling
        );
        return Ok(());
    }
    for v in &violations {
        println!("{v}");
    }
    Err(Error::Data(format!(
        "{} violation(s) in {}",
        violations.len(),
        file.display()
    )))
}

fn run(cli: Cli) -> asid_core::Result<()> {
    match cli.command {
        Command::Simulate { config, out, seed } => simulate(&config, &out, seed),
        Command::Serve {
            sdcard,
            port,
            bind,
            max_connections,
        } => serve(&sdcard, &bind, port, max_connections),
        Command::Sync {
            host,
            port,
            out,
            timeout,
        } => sync(&host, port, &out, timeout),
        Command::Report {
            input,
            out,
            generated_at,
        } => report(&input, &out, generated_at),
        Command::Sizing { config, json } => sizing(config.as_deref(), json),
        Command::Mission(MissionCommand::Gen(args)) => mission_gen(&args),
        Command::Mission(MissionCommand::Validate { file, config }) => {
            mission_validate(&file, config.as_deref())
        }
        Command::Config => {
            print!("{}", RunConfig::default().to_json()?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("ASID_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
