use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use contactplan::bench::{
    default_costs_path, plan_method, provide_costs, run_suite, write_outputs, BenchmarkSuite, CostSource, Method,
    MethodError, Prepared,
};
use contactplan::config::Config;
use contactplan::costmap::build_anisotropic;
use contactplan::planner::{lift_to_3d, PlanError, Trajectory};
use contactplan::render::{grid_csv, render_ppm, render_svg};
use contactplan::scene::Scene;
use contactplan::semantics::{load_fixture, CostAssignment};
use contactplan::sim::execute;

#[derive(Parser)]
#[command(name = "contactplan", version, about = "Contact-aware tabletop motion planning")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Scene JSON.
    #[arg(long, global = true)]
    scene: Option<PathBuf>,
    /// Cost fixture JSON; defaults to `<scene>.costs.json` beside the scene.
    #[arg(long, global = true)]
    costs: Option<PathBuf>,
    /// TOML configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Serve VLM costs from the cache only.
    #[arg(long, global = true)]
    offline: bool,
    /// Where planning costs come from. Simulation always scores with the fixture.
    #[arg(long, global = true, default_value = "fixture", value_parser = parse_source)]
    cost_source: CostSource,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Svg,
    Ppm,
}

#[derive(Subcommand)]
enum Command {
    /// Build M and M′ and write grids plus a heatmap.
    Costmap {
        #[arg(long, value_enum, default_value = "svg")]
        format: Format,
    },
    /// Plan a trajectory.
    Plan {
        #[arg(long, default_value = "contact_aware_astar/vlm_cost", value_parser = parse_method)]
        method: Method,
        /// Also write timestamped 3D poses.
        #[arg(long)]
        lift: bool,
    },
    /// Replay a trajectory and report metrics.
    Simulate {
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Run a benchmark suite.
    Bench {
        #[arg(long)]
        suite: PathBuf,
    },
    /// Render the cost map with an optional trajectory overlay.
    Render {
        #[arg(long)]
        trajectory: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "svg")]
        format: Format,
        /// Output file; defaults to `render.svg` / `render.ppm` in the output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse()
}

fn parse_source(s: &str) -> Result<CostSource, String> {
    s.parse()
}

enum Failure {
    NoPath(String),
    Input(String),
}

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Input(e.to_string())
    }
}

struct Inputs {
    scene: Scene,
    fixture: CostAssignment,
    costs: CostAssignment,
    config: Config,
}

fn load_config(g: &Global) -> Result<Config, Failure> {
    let mut config = match &g.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    config.vlm.offline |= g.offline;
    config.costmap.seed = g.seed;
    config.rrt.seed = g.seed;
    Ok(config)
}

fn load_inputs(g: &Global) -> Result<Inputs, Failure> {
    let config = load_config(g)?;
    let scene_path = g.scene.as_ref().ok_or_else(|| Failure::Input("--scene is required".into()))?;
    let scene = Scene::load(scene_path)?;
    let costs_path = g.costs.clone().unwrap_or_else(|| default_costs_path(scene_path));
    let fixture = load_fixture(&costs_path, &scene.target().name)?;
    let costs = provide_costs(g.cost_source, &scene, &fixture, &config)?;
    Ok(Inputs {
        scene,
        fixture,
        costs,
        config,
    })
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    std::fs::write(path, contents).map_err(|e| Failure::Input(format!("cannot write {}: {e}", path.display())))?;
    log::info!("wrote {}", path.display());
    Ok(())
}

fn read_trajectory(path: &Path) -> Result<Trajectory, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(Trajectory::from_json(&text)?)
}

fn heatmap(inputs: &Inputs, format: Format, traj: Option<&Trajectory>, out: &Path) -> Result<(), Failure> {
    let prepared = Prepared::new(&inputs.scene, &inputs.costs)?;
    let map = build_anisotropic(&prepared.base, &inputs.scene, &inputs.costs, &inputs.config.costmap)?;
    match format {
        Format::Svg => write(out, render_svg(&inputs.scene, &map, traj)),
        Format::Ppm => write(out, render_ppm(&map, 8)),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let g = &cli.global;
    match cli.command {
        Command::Costmap { format } => {
            let inputs = load_inputs(g)?;
            let prepared = Prepared::new(&inputs.scene, &inputs.costs)?;
            let map = build_anisotropic(&prepared.base, &inputs.scene, &inputs.costs, &inputs.config.costmap)?;
            let grid = map.grid;
            write(&g.out_dir.join("base_costmap.csv"), grid_csv(grid.nx, grid.ny, |i, j| prepared.base.value(i, j)))?;
            write(&g.out_dir.join("costmap.csv"), grid_csv(grid.nx, grid.ny, |i, j| map.value(i, j)))?;
            write(
                &g.out_dir.join("boundary.json"),
                serde_json::to_string_pretty(map.records())? + "\n",
            )?;
            match format {
                Format::Svg => write(&g.out_dir.join("costmap.svg"), render_svg(&inputs.scene, &map, None))?,
                Format::Ppm => write(&g.out_dir.join("costmap.ppm"), render_ppm(&map, 8))?,
            }
            println!("{} boundary cells", map.records().len());
        }
        Command::Plan { method, lift } => {
            let inputs = load_inputs(g)?;
            let prepared = Prepared::new(&inputs.scene, &inputs.costs)?;
            let traj = match plan_method(method, &inputs.scene, &inputs.costs, &prepared, None, &inputs.config, g.seed) {
                Ok(t) => t,
                Err(MethodError::NoPath(e @ PlanError::NoPath { .. })) => {
                    return Err(Failure::NoPath(format!("{method}: {e}")));
                }
                Err(e) => return Err(e.into()),
            };
            write(&g.out_dir.join("trajectory.json"), traj.to_json() + "\n")?;
            if lift {
                let poses = lift_to_3d(&traj, &inputs.scene, inputs.config.sim.speed, 90.0);
                write(&g.out_dir.join("trajectory3d.json"), serde_json::to_string_pretty(&poses)? + "\n")?;
            }
            println!(
                "{method}: {} waypoints, cost {:.3}, {} expansions",
                traj.waypoints.len(),
                traj.total_cost,
                traj.expansions
            );
        }
        Command::Simulate { trajectory } => {
            let inputs = load_inputs(g)?;
            let traj = read_trajectory(&trajectory)?;
            let report = execute(&inputs.scene, &inputs.fixture, &traj, &inputs.config.sim);
            write(&g.out_dir.join("report.json"), report.to_json() + "\n")?;
            println!(
                "reach={} path_cost={} contact={:.2}s max_unsafe_displacement={:.4}m success={}",
                report.reach_target,
                report.path_cost,
                report.contact_duration,
                report.max_unsafe_displacement(),
                report.success
            );
        }
        Command::Bench { suite } => {
            let config = load_config(g)?;
            let suite = BenchmarkSuite::load(&suite)?;
            let result = run_suite(&suite, &config);
            write_outputs(&result, &g.out_dir)?;
            print!("{}", contactplan::bench::summary_csv(&result.rows));
        }
        Command::Render {
            trajectory,
            format,
            output,
        } => {
            let inputs = load_inputs(g)?;
            let traj = trajectory.as_deref().map(read_trajectory).transpose()?;
            let out = output.unwrap_or_else(|| {
                g.out_dir.join(match format {
                    Format::Svg => "render.svg",
                    Format::Ppm => "render.ppm",
                })
            });
            heatmap(&inputs, format, traj.as_ref(), &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::NoPath(msg)) => {
            eprintln!("no path: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
