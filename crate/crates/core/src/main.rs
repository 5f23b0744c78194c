use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{ArgGroup, Args, Parser, Subcommand};

use sdfslam::io::{
    evaluate_trajectory, export_image, load_map, load_submap_set, read_scan_log, read_timings,
    read_trajectory, save_map, save_submap_set, write_scan_log, write_timings, write_trajectory,
    TimingStats,
};
use sdfslam::matching::MatchConfig;
use sdfslam::pipeline::{ground_truth_trajectory, run_localization, run_slam, SlamConfig};
use sdfslam::sdf::ExpansionPolicy;
use sdfslam::sim::{calibrate_outlier_rate, fixtures, parse_scenario};
use sdfslam::submap::{merge_submaps, MergedMap};
use sdfslam::Pose2;

#[derive(Parser)]
#[command(
    name = "sdfslam",
    version,
    about = "2D laser SLAM and localization on SDF maps"
)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct MapArgs {
    /// Cell size in meters.
    #[arg(long, default_value_t = 0.05)]
    resolution: f64,
    /// Truncation distance in meters.
    #[arg(long, default_value_t = 0.06)]
    truncation: f64,
    /// Weight cap per cell.
    #[arg(long, default_value_t = 10.0)]
    w_max: f64,
    /// Ring expansions when collecting hit points [default: from resolution].
    #[arg(long)]
    max_expansions: Option<usize>,
    /// Scans per submap.
    #[arg(long, default_value_t = 50)]
    submap_scans: usize,
}

#[derive(Args, Clone, Copy)]
struct SolverArgs {
    /// Stage-one Gauss-Newton iterations.
    #[arg(long, default_value_t = 10)]
    iters1: usize,
    /// Stage-two Gauss-Newton iterations.
    #[arg(long, default_value_t = 20)]
    iters2: usize,
    /// Trim threshold in meters [default: the map truncation].
    #[arg(long)]
    trim: Option<f64>,
    /// Huber threshold on W·F [default: w_max · truncation / 3].
    #[arg(long)]
    huber_delta: Option<f64>,
    /// Relative cost decrease that counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    eps: f64,
}

impl SolverArgs {
    fn config(&self, truncation: f64, w_max: f64) -> MatchConfig {
        let base = MatchConfig::for_map(truncation, w_max);
        MatchConfig {
            max_iters_stage1: self.iters1,
            max_iters_stage2: self.iters2,
            trim_threshold: self.trim.unwrap_or(base.trim_threshold),
            huber_delta: self.huber_delta.unwrap_or(base.huber_delta),
            convergence_eps: self.eps,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario into a scan log.
    Simulate {
        /// Key-value scenario file [default: the rectangle-room circuit].
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Overrides the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Calibrate outliers so this fraction of returns are outliers.
        #[arg(long)]
        outlier_fraction: Option<f64>,
    },
    /// Build a map from a scan log.
    Slam {
        #[arg(long)]
        log: PathBuf,
        /// Merged map output.
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        /// Directory for the submap set.
        #[arg(long)]
        submaps: PathBuf,
        #[command(flatten)]
        map_args: MapArgs,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Fuse a submap set into one map.
    Merge {
        #[arg(long)]
        submaps: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Localize a scan log against a fused map.
    Localize {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        log: PathBuf,
        #[arg(long)]
        trajectory: PathBuf,
        /// Per-frame solve times.
        #[arg(long)]
        timing: Option<PathBuf>,
        /// Gauss-Newton iterations per stage.
        #[arg(long, default_value_t = 5)]
        loc_iters: usize,
        /// Initial pose `x,y,theta` [default: first ground truth in the log].
        #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
        init: Option<Pose2>,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Compare an estimated trajectory with ground truth.
    #[command(group(ArgGroup::new("truth").required(true).args(["ground_truth", "log"])))]
    Eval {
        #[arg(long)]
        estimated: PathBuf,
        /// Ground-truth trajectory file.
        #[arg(long)]
        ground_truth: Option<PathBuf>,
        /// Scan log whose ground-truth poses are used instead.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Timing file written by `localize`.
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Render a map file as a PGM image.
    Export {
        #[arg(long)]
        map: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_pose(s: &str) -> Result<Pose2, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| format!("bad number `{t}`"))
        })
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        [x, y, th] => Ok(Pose2::new(*x, *y, *th)),
        _ => Err("expected x,y,theta".into()),
    }
}

fn create(path: &Path) -> Result<BufWriter<std::fs::File>> {
    Ok(BufWriter::new(std::fs::File::create(path).with_context(
        || format!("cannot create {}", path.display()),
    )?))
}

fn check_map_args(a: &MapArgs) -> Result<()> {
    if !(a.resolution > 0.0 && a.truncation > 0.0 && a.w_max > 0.0) {
        bail!("resolution, truncation and w-max must be positive");
    }
    if a.submap_scans == 0 {
        bail!("submap-scans must be at least 1");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            scenario,
            out,
            seed,
            outlier_fraction,
        } => {
            let mut sc = match &scenario {
                Some(p) => {
                    let text = std::fs::read_to_string(p)
                        .with_context(|| format!("cannot read {}", p.display()))?;
                    parse_scenario(&text)?
                }
                None => fixtures::room_circuit(0),
            };
            if let Some(s) = seed {
                sc.model.seed = s;
            }
            if let Some(f) = outlier_fraction {
                if !(0.0..=1.0).contains(&f) {
                    bail!("outlier-fraction must be in [0, 1]");
                }
                sc.model.outlier_rate =
                    calibrate_outlier_rate(&sc.world, &sc.poses(), &sc.model, f);
            }
            let records = sc.run();
            write_scan_log(create(&out)?, &records)?;
            println!("wrote {} scans to {}", records.len(), out.display());
        }
        Command::Slam {
            log,
            map,
            trajectory,
            submaps,
            map_args,
            solver,
        } => {
            check_map_args(&map_args)?;
            let records =
                read_scan_log(&log).with_context(|| format!("reading {}", log.display()))?;
            let mut cfg = SlamConfig::new(map_args.resolution, map_args.truncation, map_args.w_max);
            cfg.submap.scans_per_submap = map_args.submap_scans;
            if let Some(e) = map_args.max_expansions {
                cfg.submap.policy = ExpansionPolicy::new(e);
            }
            cfg.matching = solver.config(map_args.truncation, map_args.w_max);
            let out = run_slam(&records, &cfg)?;
            write_trajectory(create(&trajectory)?, &out.trajectory)?;
            save_submap_set(&submaps, &out.submaps)?;
            let merged = merge_submaps(&out.submaps)?;
            save_map(&merged.grid, &map)?;
            println!(
                "{} scans, {} submaps, {} match failures",
                records.len(),
                out.submaps.len(),
                out.match_failures
            );
        }
        Command::Merge { submaps, out } => {
            let set = load_submap_set(&submaps)
                .with_context(|| format!("reading {}", submaps.display()))?;
            let merged = merge_submaps(&set)?;
            save_map(&merged.grid, &out)?;
            let g = merged.grid.geometry();
            println!(
                "merged {} submaps into {}x{} cells",
                set.len(),
                g.width,
                g.height
            );
        }
        Command::Localize {
            map,
            log,
            trajectory,
            timing,
            loc_iters,
            init,
            solver,
        } => {
            let grid = load_map(&map).with_context(|| format!("reading {}", map.display()))?;
            let records =
                read_scan_log(&log).with_context(|| format!("reading {}", log.display()))?;
            let cfg = solver.config(grid.truncation(), grid.w_max());
            let merged = MergedMap {
                grid,
                provenance: Vec::new(),
            };
            let out = run_localization(&merged, &records, init, loc_iters, &cfg);
            write_trajectory(create(&trajectory)?, &out.trajectory)?;
            if let Some(t) = timing {
                let stamps: Vec<f64> = out.trajectory.iter().map(|e| e.timestamp).collect();
                write_timings(create(&t)?, &stamps, &out.timings)?;
            }
            println!(
                "{} frames, {} match failures",
                records.len(),
                out.match_failures
            );
            if let Some(s) = TimingStats::from_samples(&out.timings) {
                println!("median & mean & max & std");
                println!("{}", s.table_row());
            }
        }
        Command::Eval {
            estimated,
            ground_truth,
            log,
            timing,
        } => {
            let est = read_trajectory(&estimated)
                .with_context(|| format!("reading {}", estimated.display()))?;
            let gt = match (ground_truth, log) {
                (Some(p), _) => {
                    read_trajectory(&p).with_context(|| format!("reading {}", p.display()))?
                }
                (None, Some(p)) => ground_truth_trajectory(&read_scan_log(&p)?),
                (None, None) => unreachable!("clap enforces one source"),
            };
            let timings = timing.map(read_timings).transpose()?;
            let report = evaluate_trajectory(&est, &gt, timings.as_deref())?;
            println!("{report}");
        }
        Command::Export { map, out } => {
            let grid = load_map(&map).with_context(|| format!("reading {}", map.display()))?;
            export_image(&grid, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::from(1)
        }
    }
}
