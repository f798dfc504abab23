use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;

use lin3lp::io::{self, GainTableHeader, Thresholds};
use lin3lp::linalg::Vec2;
use lin3lp::sim::{self, Scenario, SweepAxis};
use lin3lp::stabilizer::DlqrWeights;
use lin3lp::{signal, solve_periodic, Controller, Error, ModelParams, Result};

#[derive(Parser)]
#[command(
    name = "lin3lp",
    version,
    about = "3LP biped gaits, gains and push-recovery simulation"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve a periodic gait and sample its trajectory.
    Gait {
        #[command(flatten)]
        gait: GaitArgs,
        /// Trajectory samples per phase.
        #[arg(long, default_value_t = 101)]
        samples: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Export the time-projection gain table.
    Gains {
        #[command(flatten)]
        gait: GaitArgs,
        #[arg(long, default_value_t = 101)]
        grid: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Fit dead-zone thresholds to the errors of a trace.
    Calibrate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Source::Filt)]
        source: Source,
    },
    /// Run one scenario.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Thresholds JSON overriding the scenario and auto-calibration.
        #[arg(long)]
        thresholds: Option<PathBuf>,
        /// Also write whitespace-separated column files.
        #[arg(long)]
        dat: bool,
    },
    /// Run a scenario over a grid of one parameter.
    Sweep {
        #[arg(long)]
        axis: String,
        /// Comma-separated values, or `start:stop:count`.
        #[arg(long)]
        grid: String,
        #[arg(long)]
        base: PathBuf,
        /// CSV output; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct GaitArgs {
    /// Sagittal speed, or `vx,vy` (m/s).
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    speed: String,
    /// Phase duration (s); defaults to the parameter file value.
    #[arg(long)]
    step_time: Option<f64>,
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Source {
    Filt,
    Raw,
}

fn parse_list(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| Error::Scenario(format!("bad number {v:?}: {e}")))
        })
        .collect()
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    match parts.as_slice() {
        [a, b, n] => {
            let (a, b) = (parse_list(a)?[0], parse_list(b)?[0]);
            let n: usize = n
                .trim()
                .parse()
                .map_err(|e| Error::Scenario(format!("bad grid count: {e}")))?;
            if n < 2 {
                return Err(Error::Scenario("grid count must be at least 2".into()));
            }
            Ok((0..n)
                .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                .collect())
        }
        [_] => parse_list(s),
        _ => Err(Error::Scenario(format!("bad grid {s:?}"))),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Scenario(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, text)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn load_params(args: &GaitArgs) -> Result<(ModelParams, Vec2, f64)> {
    let mut params = match &args.params {
        Some(p) => ModelParams::from_json(&read(p)?)?,
        None => ModelParams::default(),
    };
    if let Some(t) = args.step_time {
        params.step_time = t;
    }
    params.validate()?;
    let v = parse_list(&args.speed)?;
    let v_des = match v.as_slice() {
        [x] => Vec2::new(*x, 0.0),
        [x, y] => Vec2::new(*x, *y),
        _ => return Err(Error::Scenario("--speed takes one or two values".into())),
    };
    Ok((params, v_des, params.step_time))
}

fn load_scenario(path: &Path) -> Result<Scenario> {
    Scenario::from_json(&read(path)?)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Gait { gait, samples, out } => {
            let (params, v_des, t) = load_params(&gait)?;
            let g = solve_periodic(&params, v_des, t)?;
            write(&out.join("gait.json"), &g.to_json()?)?;
            let rows = io::sample_trajectory(&g, samples)?;
            write(&out.join("trajectory.csv"), &io::trajectory_to_csv(&rows)?)?;
        }
        Cmd::Gains { gait, grid, out } => {
            let (params, v_des, t) = load_params(&gait)?;
            let g = solve_periodic(&params, v_des, t)?;
            let weights = DlqrWeights::per_unit(&params, t);
            let c = Controller::new(g, &weights)?;
            let table = c.export_gain_table(grid)?;
            write(&out.join("gains.csv"), &io::gain_table_to_csv(&table)?)?;
            let header = GainTableHeader {
                grid,
                step_time: t,
                weights,
            };
            write(
                &out.join("gains.json"),
                &serde_json::to_string_pretty(&header)?,
            )?;
        }
        Cmd::Calibrate { trace, out, source } => {
            let prefix = match source {
                Source::Filt => "e_filt",
                Source::Raw => "e_raw",
            };
            let file = fs::File::open(&trace)
                .map_err(|e| Error::Scenario(format!("{}: {e}", trace.display())))?;
            let cols = io::read_columns(file, prefix, 8)?;
            let samples = cols[0].len();
            let thr = signal::calibrate_thresholds(&cols)?;
            let mut thresholds = [0.0; 8];
            thresholds.copy_from_slice(&thr);
            let t = Thresholds {
                thresholds,
                source: prefix.into(),
                samples,
            };
            write(&out, &t.to_json()?)?;
        }
        Cmd::Simulate {
            scenario,
            out,
            thresholds,
            dat,
        } => {
            let mut s = load_scenario(&scenario)?;
            if let Some(p) = thresholds {
                s.thresholds = Some(Thresholds::from_json(&read(&p)?)?.thresholds);
            }
            let (trace, metrics) = sim::run_scenario(&s)?;
            if trace.fell {
                info!("fell at t = {:?}", trace.fall_time);
            }
            write(&out.join("trace.csv"), &trace.to_csv())?;
            write(
                &out.join("metrics.json"),
                &serde_json::to_string_pretty(&metrics)?,
            )?;
            write(&out.join("augment.csv"), &trace.augment_csv())?;
            if dat {
                let names = [
                    "t", "swing_x", "swing_y", "pelvis_x", "pelvis_y", "stance_x", "stance_y",
                    "dp_x", "dp_y", "fx", "fy",
                ];
                let rows = trace.rows.iter().map(|r| {
                    let mut v = vec![r.t];
                    v.extend(r.q.iter().take(6));
                    v.extend([r.dp[0], r.dp[1], r.force[0], r.force[1]]);
                    v
                });
                write(&out.join("trace.dat"), &io::columns_to_dat(&names, rows))?;
                let names: Vec<&str> = sim::AUGMENT_HEADER.split(',').collect();
                let rows = trace.augment.iter().map(|a| {
                    vec![
                        a.t,
                        a.lift_fixed,
                        a.roll,
                        a.lift_adaptive,
                        a.theta_hat,
                        a.pitch_comp,
                        a.hip_gamma,
                        a.knee_left,
                        a.knee_right,
                        a.hip_rate,
                    ]
                });
                write(&out.join("augment.dat"), &io::columns_to_dat(&names, rows))?;
            }
        }
        Cmd::Sweep {
            axis,
            grid,
            base,
            out,
        } => {
            let axis: SweepAxis = axis.parse()?;
            let grid = parse_grid(&grid)?;
            let s = load_scenario(&base)?;
            let rows = sim::sweep(&s, axis, &grid)?;
            let csv = sim::sweep_to_csv(&rows);
            match out {
                Some(p) => write(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
