//! Command-line interface.

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use tracing::info;

use quadsocial_core::bridge::CommandKind;
use quadsocial_core::model::{
    compose_gesture, execute_gesture, extension_target, optimize_stage, run_ablation, run_curriculum, GestureKind,
    Leg, PosePolicy, StageSpec, CALF, THIGH,
};
use quadsocial_core::reward::{evaluate_metrics, stage_reward, RewardBreakdown, TrajectoryMetrics};

use crate::config::Config;
use crate::corpus::{self, CorpusSpec};
use crate::formats::{self, stage_path, Checkpoint};
use crate::pipeline;
use crate::robot::RobotSession;
use crate::server::{BridgeClient, BridgeServer, SendOutcome};
use crate::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "quadsocial", version, about = "Gesture-driven quadruped control: bridge, mock robot and training tools")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Log level filter (e.g. `info`, `debug`).
    #[arg(long, global = true, default_value = "info", env = "QUADSOCIAL_LOG")]
    pub log: String,
    #[command(subcommand)]
    pub command: Cmd,
}

#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Classify a labelled corpus and report the confusion matrix.
    Classify {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Add zero-mean landmark noise with this standard deviation.
        #[arg(long)]
        noise: Option<f64>,
        #[arg(long, default_value_t = 0)]
        noise_seed: u64,
    },
    /// Command bridge server and client.
    #[command(subcommand)]
    Bridge(BridgeCmd),
    /// Mock robot: execute bridge commands and publish telemetry.
    Robot {
        #[arg(long, default_value = "127.0.0.1:9000")]
        addr: String,
        /// Directory holding stage{1,2,3}.json checkpoints for G1-G5.
        #[arg(long)]
        checkpoints: Option<PathBuf>,
        /// Also write telemetry NDJSON here.
        #[arg(long)]
        telemetry: Option<PathBuf>,
        #[arg(long)]
        ticks: Option<usize>,
    },
    /// Score a trajectory NDJSON file under a stage reward.
    Score {
        #[arg(long)]
        stage: u8,
        #[arg(long)]
        trajectory: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train one curriculum stage.
    Train(TrainArgs),
    /// Train all three stages for each seed.
    Curriculum {
        /// `1..5` (inclusive) or a comma list.
        #[arg(long, default_value = "1..5")]
        seeds: String,
        #[arg(long, default_value = "checkpoints")]
        out_dir: PathBuf,
    },
    /// Curriculum versus direct Stage 2 training.
    Ablate {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        report: Option<PathBuf>,
        /// Train both branches directly.
        #[arg(long)]
        no_curriculum: bool,
    },
    /// Compose, schedule and simulate a social gesture.
    Gesture {
        #[arg(long)]
        kind: String,
        #[arg(long, default_value = "checkpoints")]
        checkpoints: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic labelled corpus.
    MakeCorpus {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Replay landmark files through classifier, bridge and mock robot
    /// offline, printing each command and the resulting robot state.
    Replay {
        #[arg(required = true)]
        scripts: Vec<PathBuf>,
        #[arg(long)]
        checkpoints: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum BridgeCmd {
    /// Listen for classifier, console and robot connections.
    Serve {
        /// Defaults to `[bridge] port`, then $BRIDGE_PORT, then 9000.
        #[arg(long)]
        port: Option<u16>,
        #[arg(long, default_value = "0.0.0.0")]
        host: String,
    },
    /// Inject one command (e.g. SIT, GESTURE_G1).
    Send {
        cmd: String,
        #[arg(long, default_value = "127.0.0.1:9000")]
        addr: String,
    },
    /// Print the bridge status line.
    Status {
        #[arg(long, default_value = "127.0.0.1:9000")]
        addr: String,
    },
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub stage: u8,
    /// Checkpoint of the previous stage.
    #[arg(long)]
    pub from: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub no_curriculum: bool,
}

pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Usage(format!("bad seed list {s:?}"));
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    s.split(',').map(|x| x.trim().parse().map_err(|_| bad())).collect()
}

fn print_json<T: Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v).map_err(|source| Error::Json { path: path.into(), source })?;
    std::fs::write(path, text + "\n").map_err(crate::io_err(path))
}

#[derive(Serialize)]
struct ScoreReport {
    breakdowns: Vec<RewardBreakdown>,
    metrics: TrajectoryMetrics,
}

fn score(cfg: &Config, stage: u8, trajectory: &Path, out: Option<&Path>) -> Result<()> {
    if !(1..=3).contains(&stage) {
        return Err(Error::Usage("stage must be 1, 2 or 3".into()));
    }
    let ctx = cfg.model()?;
    let states = formats::read_trajectory(trajectory)?;
    let breakdowns: Vec<RewardBreakdown> = states.iter().map(|s| stage_reward(stage, s, &ctx.reward)).collect();
    let mut metrics = evaluate_metrics(&states, &ctx.reward)?;
    if stage == 3 {
        let last = states.last().expect("non-empty after evaluate_metrics");
        let i = 3 * Leg::FL.index();
        metrics.extension_joint_error = extension_target(last, &ctx)
            .map(|t| (last.q[i + THIGH] - t[THIGH]).abs().max((last.q[i + CALF] - t[CALF]).abs()));
    }
    let report = ScoreReport { breakdowns, metrics };
    match out {
        Some(p) => write_json(p, &report),
        None => {
            print_json(&report);
            Ok(())
        }
    }
}

fn train(cfg: &Config, a: &TrainArgs) -> Result<()> {
    let ctx = cfg.model()?;
    let mut spec = cfg.stage_spec(a.stage)?;
    spec.no_curriculum = a.no_curriculum;
    let parent = a.from.as_deref().map(|p| Checkpoint::load(p, &ctx.geometry)).transpose()?;
    let init = parent.as_ref().map_or_else(PosePolicy::nominal, Checkpoint::policy);
    let o = optimize_stage(&spec, &init, a.seed, &ctx)?;
    let ck = Checkpoint::from_outcome(&o, a.seed, parent.as_ref(), &ctx.geometry);
    ck.save(&a.out)?;
    let m = &o.evaluation.metrics;
    println!(
        "stage {} seed {}: passed={} best={:.4} lift={:.3} height_mae={:.4} m -> {}",
        o.policy.stage,
        a.seed,
        o.policy.passed,
        o.best_reward,
        m.lift_success_rate,
        m.height_mae_m,
        a.out.display()
    );
    Ok(())
}

fn curriculum(cfg: &Config, seeds: &str, out_dir: &Path) -> Result<()> {
    let ctx = cfg.model()?;
    let specs: Vec<StageSpec> = (1..=3).map(|s| cfg.stage_spec(s)).collect::<Result<_>>()?;
    for seed in parse_seeds(seeds)? {
        let dir = out_dir.join(format!("seed{seed}"));
        std::fs::create_dir_all(&dir).map_err(crate::io_err(&dir))?;
        let outcomes = run_curriculum(&specs, seed, &ctx)?;
        let mut parent: Option<Checkpoint> = None;
        for o in &outcomes {
            let ck = Checkpoint::from_outcome(o, seed, parent.as_ref(), &ctx.geometry);
            ck.save(&stage_path(&dir, o.policy.stage))?;
            let m = &o.evaluation.metrics;
            println!(
                "seed {seed} stage {}: passed={} lift={:.3} height_mae={:.4} m joint_err={}",
                o.policy.stage,
                o.policy.passed,
                m.lift_success_rate,
                m.height_mae_m,
                m.extension_joint_error.map_or("-".into(), |e| format!("{e:.4}"))
            );
            parent = Some(ck);
        }
    }
    Ok(())
}

fn ablate(cfg: &Config, seed: u64, report: Option<&Path>, no_curriculum: bool) -> Result<()> {
    let ctx = cfg.model()?;
    let specs = [cfg.stage_spec(1)?, cfg.stage_spec(2)?, cfg.stage_spec(3)?];
    let r = run_ablation(&specs, seed, !no_curriculum, &ctx)?;
    for (name, b) in [("curriculum", &r.curriculum), ("direct", &r.direct)] {
        println!(
            "{name:>10}: lift={:.3} success={} completed={:.1} s contacts={:.2} height_mae={:.4} m roll_rms={:.2} deg",
            b.lift_success_rate, b.success, b.completed_s, b.mean_contacts, b.height_mae_m, b.roll_rms_deg
        );
    }
    if let Some(p) = report {
        write_json(p, &r)?;
    }
    Ok(())
}

fn gesture(cfg: &Config, kind: &str, checkpoints: &Path, out: &Path) -> Result<()> {
    let kind = GestureKind::from_name(kind).ok_or_else(|| Error::Usage(format!("unknown gesture {kind:?}")))?;
    let ctx = cfg.model()?;
    let poses = formats::load_stage_poses(checkpoints, &ctx.geometry)?;
    let traj = compose_gesture(kind, &poses, &cfg.gesture()?, &ctx)?;
    let run = execute_gesture(&traj, &ctx)?;
    formats::write_trajectory(out, &run.states)?;
    println!(
        "{kind:?}: {} steps ({} segments), completed={} -> {}",
        run.states.len(),
        traj.segments.len(),
        run.completed(),
        out.display()
    );
    if let Some(r) = run.terminated {
        return Err(Error::Usage(format!("{kind:?} stopped by safety check: {r:?}")));
    }
    Ok(())
}

fn classify(cfg: &Config, dir: &Path, report: Option<&Path>, noise: Option<f64>, seed: u64) -> Result<()> {
    let clips = corpus::load(dir)?;
    let r = corpus::evaluate(&clips, &cfg.classifier()?, noise.map(|s| (s, seed)))?;
    for (label, row) in &r.confusion {
        let cells: Vec<String> = row.iter().map(|(p, n)| format!("{p}={n}")).collect();
        println!("{label:>12}: {}", cells.join(" "));
    }
    println!(
        "hand {}/{} ({:.1}%), head {}/{}, {:.1} us/frame",
        r.hand_correct,
        r.hand_total,
        100.0 * r.hand_accuracy,
        r.head_correct,
        r.head_total,
        r.mean_frame_us
    );
    if let Some(p) = report {
        write_json(p, &r)?;
    }
    Ok(())
}

fn robot(cfg: &Config, addr: &str, checkpoints: Option<&Path>, telemetry: Option<&Path>, ticks: Option<usize>) -> Result<()> {
    let ctx = cfg.model()?;
    let poses = match checkpoints {
        Some(d) => formats::load_stage_poses(d, &ctx.geometry)?,
        None => Default::default(),
    };
    let actuator = pipeline::build_actuator(&ctx, cfg.actuator()?, &poses, &cfg.gesture()?)?;
    let mut session = RobotSession::connect(addr, actuator)?;
    if let Some(p) = telemetry {
        session.log_telemetry(p)?;
    }
    info!(addr, "robot connected");
    session.run(ticks)
}

fn replay(cfg: &Config, scripts: &[PathBuf], checkpoints: Option<&Path>) -> Result<()> {
    let ctx = cfg.model()?;
    let poses = match checkpoints {
        Some(d) => formats::load_stage_poses(d, &ctx.geometry)?,
        None => Default::default(),
    };
    let clips: Vec<_> = scripts.iter().map(|p| formats::read_replay(p)).collect::<Result<_>>()?;
    let frames = pipeline::concat_clips(&clips);
    let mut hub = crate::hub::Hub::new(cfg.classifier()?)?;
    let mut actuator = pipeline::build_actuator(&ctx, cfg.actuator()?, &poses, &cfg.gesture()?)?;
    for a in pipeline::replay(&frames, &mut hub, &mut actuator) {
        let s = &a.state;
        println!(
            "{:>6} ms {:<12} {:<8} posture={:?} motion={:?} speed={}",
            a.cmd.t_ms,
            a.cmd.kind.as_str(),
            if a.result.is_ok() { "ok" } else { "rejected" },
            s.posture,
            s.active_motion.map(|k| k.as_str()),
            s.speed_level
        );
    }
    Ok(())
}

fn bridge(cfg: &Config, cmd: &BridgeCmd) -> Result<()> {
    let timeout = Duration::from_secs(2);
    match cmd {
        BridgeCmd::Serve { port, host } => {
            let port = port.unwrap_or_else(|| cfg.port());
            let addr: SocketAddr = format!("{host}:{port}").parse().map_err(|e| Error::Usage(format!("address: {e}")))?;
            BridgeServer::bind(addr, cfg.classifier()?)?.run()
        }
        BridgeCmd::Send { cmd, addr } => {
            let kind: CommandKind = cmd.parse().map_err(|e| Error::Usage(format!("{e}")))?;
            let mut c = BridgeClient::connect(addr.as_str())?;
            match c.send_command(kind, timeout)? {
                SendOutcome::Emitted(c) => println!("{}", serde_json::to_string(&c).expect("serializes")),
                SendOutcome::Suppressed => println!("{kind}: suppressed (cooldown)"),
                SendOutcome::Unconfirmed => return Err(Error::Usage(format!("{kind}: no reply from bridge"))),
            }
            Ok(())
        }
        BridgeCmd::Status { addr } => {
            let mut c = BridgeClient::connect(addr.as_str())?;
            let s = c.status(timeout)?.ok_or_else(|| Error::Usage("no status reply".into()))?;
            println!("{}", serde_json::to_string(&s).expect("serializes"));
            Ok(())
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let cfg = Config::load_opt(cli.config.as_deref())?;
    match &cli.command {
        Cmd::Classify { corpus, report, noise, noise_seed } => classify(&cfg, corpus, report.as_deref(), *noise, *noise_seed),
        Cmd::Bridge(b) => bridge(&cfg, b),
        Cmd::Robot { addr, checkpoints, telemetry, ticks } => {
            robot(&cfg, addr, checkpoints.as_deref(), telemetry.as_deref(), *ticks)
        }
        Cmd::Score { stage, trajectory, out } => score(&cfg, *stage, trajectory, out.as_deref()),
        Cmd::Train(a) => train(&cfg, a),
        Cmd::Curriculum { seeds, out_dir } => curriculum(&cfg, seeds, out_dir),
        Cmd::Ablate { seed, report, no_curriculum } => ablate(&cfg, *seed, report.as_deref(), *no_curriculum),
        Cmd::Gesture { kind, checkpoints, out } => gesture(&cfg, kind, checkpoints, out),
        Cmd::MakeCorpus { out, seed } => {
            let n = corpus::generate(out, &CorpusSpec { seed: *seed, ..Default::default() })?;
            println!("wrote {n} clips to {}", out.display());
            Ok(())
        }
        Cmd::Replay { scripts, checkpoints } => replay(&cfg, scripts, checkpoints.as_deref()),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_new(&cli.log).unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
