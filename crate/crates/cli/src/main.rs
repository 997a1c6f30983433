use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use accelctl::config::{self, AuxCostConfig, PointsConfig, ValueFunction};
use accelctl::io::{config_hash, parse_theta_list, VERSION};
use accelctl_cli::*;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "accelctl", version, about = "State-constrained control with acceleration penalties")]
struct Cli {
    /// JSON config for the subcommand.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; tables go to stdout when omitted.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads for parallel solves.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Braking cost I(θ, w) over a list of horizons.
    AuxCost(AuxFlags),
    /// Half-line value function at one state.
    ValuePhi(PointFlags),
    /// Interval value function at one state.
    ValueTildePhi(PointFlags),
    /// Value function and branch tags on an (x, v) grid.
    ValueGrid,
    /// Closed forms against the direct solver.
    OracleCompare(OracleFlags),
    /// HJB residual sweep.
    HjbResidual,
    /// One optimal trajectory.
    Trajectory,
    /// inf over θ of I along x_i = −base^{−i}.
    Asymptotics,
    /// Boundary singularity in the ball.
    NdSingularity,
    /// Fictitious play for the mean-field game.
    MfgRun,
}

#[derive(Args)]
struct AuxFlags {
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    w: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Comma-separated horizons.
    #[arg(long)]
    theta: Option<String>,
}

#[derive(Args)]
struct PointFlags {
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    t: f64,
    #[arg(long, allow_hyphen_values = true)]
    x: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    v: Option<f64>,
    #[arg(long)]
    q: Option<f64>,
    /// Horizon T.
    #[arg(long = "horizon")]
    horizon: Option<f64>,
}

#[derive(Args)]
struct OracleFlags {
    #[arg(long)]
    threshold: Option<f64>,
    /// Time steps N.
    #[arg(long)]
    steps: Option<usize>,
}

fn load<T: DeserializeOwned>(path: &Option<PathBuf>) -> CmdResult<Option<T>> {
    let Some(path) = path else { return Ok(None) };
    let text = fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    config::parse(&text).map(Some).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn require<T: DeserializeOwned>(path: &Option<PathBuf>, name: &str) -> CmdResult<T> {
    load(path)?.ok_or_else(|| usage(format!("{name} needs --config")))
}

fn hash_of<T: Serialize>(cfg: &T) -> String {
    config_hash(&serde_json::to_vec(cfg).unwrap_or_default())
}

fn need<T>(v: Option<T>, flag: &str) -> CmdResult<T> {
    v.ok_or_else(|| usage(format!("missing --{flag} (or pass --config)")))
}

fn point_config(flags: &PointFlags, path: &Option<PathBuf>) -> CmdResult<PointsConfig> {
    if let Some(cfg) = load(path)? {
        return Ok(cfg);
    }
    Ok(PointsConfig {
        q: need(flags.q, "q")?,
        horizon: need(flags.horizon, "horizon")?,
        points: vec![[flags.t, need(flags.x, "x")?, need(flags.v, "v")?]],
    })
}

fn run(cli: &Cli) -> CmdResult<(Artifacts, String)> {
    macro_rules! go {
        ($cfg:expr, $f:expr) => {{
            let cfg = $cfg;
            let hash = hash_of(&cfg);
            Ok(($f(&cfg)?, hash))
        }};
    }
    match &cli.command {
        Command::AuxCost(a) => {
            let cfg = match load::<AuxCostConfig>(&cli.config)? {
                Some(c) => c,
                None => AuxCostConfig {
                    x: need(a.x, "x")?,
                    v: need(a.v, "v")?,
                    w: need(a.w, "w")?,
                    q: need(a.q, "q")?,
                    theta: parse_theta_list(&need(a.theta.clone(), "theta")?)?,
                },
            };
            go!(cfg, aux_cost)
        }
        Command::ValuePhi(p) => go!(point_config(p, &cli.config)?, |c| value_points(ValueFunction::Phi, c)),
        Command::ValueTildePhi(p) => go!(point_config(p, &cli.config)?, |c| value_points(ValueFunction::TildePhi, c)),
        Command::ValueGrid => go!(require(&cli.config, "value-grid")?, value_grid),
        Command::OracleCompare(o) => {
            let mut cfg: config::OracleConfig = load(&cli.config)?.unwrap_or_default();
            if let Some(t) = o.threshold {
                cfg.threshold = t;
            }
            if let Some(n) = o.steps {
                cfg.steps = n;
            }
            go!(cfg, oracle_compare)
        }
        Command::HjbResidual => go!(require(&cli.config, "hjb-residual")?, hjb_sweep),
        Command::Trajectory => go!(require(&cli.config, "trajectory")?, trajectory),
        Command::Asymptotics => go!(load::<config::AsymptoticsConfig>(&cli.config)?.unwrap_or_default(), asymptotics),
        Command::NdSingularity => go!(load::<config::NdSingularityConfig>(&cli.config)?.unwrap_or_default(), nd_singularity),
        Command::MfgRun => {
            if cli.out.is_none() {
                return Err(usage("mfg-run writes several files and needs --out"));
            }
            go!(require::<accelctl::mfg::MfgConfig>(&cli.config, "mfg-run")?, mfg_run)
        }
    }
}

fn render(payload: &Payload, format: Format, hash: &str) -> CmdResult<(String, &'static str)> {
    Ok(match (payload, format) {
        (Payload::Table(t), Format::Csv) => (t.to_csv(hash)?, "csv"),
        (Payload::Table(t), Format::Json) => (pretty(&t.to_json(hash)), "json"),
        (Payload::Json(v), _) => {
            let mut v = v.clone();
            if let Some(obj) = v.as_object_mut() {
                obj.insert("version".into(), VERSION.into());
                obj.insert("config_hash".into(), hash.into());
            }
            (pretty(&v), "json")
        }
    })
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).unwrap_or_default();
    s.push('\n');
    s
}

fn write(artifacts: &Artifacts, out: Option<&Path>, format: Format, hash: &str) -> CmdResult<()> {
    match out {
        Some(dir) => {
            fs::create_dir_all(dir).map_err(|e| CmdError { code: EXIT_INTERNAL, message: format!("{}: {e}", dir.display()) })?;
            for (name, payload) in &artifacts.files {
                let (text, ext) = render(payload, format, hash)?;
                let path = dir.join(format!("{name}.{ext}"));
                fs::write(&path, text).map_err(|e| CmdError { code: EXIT_INTERNAL, message: format!("{}: {e}", path.display()) })?;
            }
        }
        None => {
            for (_, payload) in &artifacts.files {
                print!("{}", render(payload, format, hash)?.0);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(k) = cli.threads {
        if k == 0 || rayon::ThreadPoolBuilder::new().num_threads(k).build_global().is_err() {
            eprintln!("error: invalid --threads {k}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    }
    let outcome = run(&cli).and_then(|(artifacts, hash)| {
        write(&artifacts, cli.out.as_deref(), cli.format, &hash)?;
        match artifacts.breach {
            Some(msg) => Err(CmdError { code: EXIT_THRESHOLD, message: msg }),
            None => Ok(()),
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}
