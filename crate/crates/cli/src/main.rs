use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use nsac_core::config::ExperimentConfig;
use nsac_core::experiment::{simulate, sweep, write_profile, write_riemann, Prepared};
use nsac_core::output::{RunDir, OUTPUT_ROOT_ENV};
use nsac_core::presets;
use nsac_core::verify::{verify, Level, VerifyOptions};

const RIEMANN_HELP: &str = "\
Writes <root>/<name>/riemann.csv and config.resolved.

riemann.csv columns:
  xi      similarity coordinate x/t
  V,U     specific volume and velocity of the exact two-rarefaction solution
  Theta   temperature on the common isentrope
  S       entropy (constant, equal to s_bar)";

const PROFILE_HELP: &str = "\
Writes <root>/<name>/profile.csv and config.resolved.

profile.csv columns:
  t,x        time and Lagrangian coordinate
  V,U,Theta  smoothed composite wave
  S          its entropy level s_bar
  V_x,U_x    spatial slopes
  g          residual of the volume equation, V_t - U_x
  q,r        residuals of the momentum and energy equations";

const SIMULATE_HELP: &str = "\
Writes <root>/<name>/{config.resolved, fields_*.csv, diagnostics.csv, summary.json}.

fields_NNNNN.csv columns (NNNNN is the cadence tick):
  t,x            time and cell center
  v,u,theta,chi  volume, velocity, temperature, phase field
  s              entropy
  mu             chemical potential of the phase field

diagnostics.csv columns, one row per cadence tick:
  t
  <f>_l2,<f>_h1,<f>_h2,<f>_linf for f in phi,psi,zeta,varphi,xi
                 norms of the perturbations of v,u,theta,s,chi from the wave
  zeta_weighted_l2        zeta_l2 / sqrt(gamma - 1)
  energy                  relative entropy functional E
  dissipation             its dissipation rate D
  cumulative_dissipation  time integral of D so far
  wave_interaction        pressure-convexity term weighted by U_x
  entropy_integral        integral of (s - S) dx
  v_min,v_max,theta_min,theta_max,chi_min,chi_max  extremes since the start
  chi_flag,v_flag,theta_flag  1 when the corresponding bound is violated
  energy_bound_constant   constant C with E <= C times the squared perturbation norms
  energy_bound_ok         1 when E is nonnegative and that bound holds
  jiang_rel_error         worst relative error of the volume representation
                          at the probes (NaN without probes)";

const SWEEP_HELP: &str = "\
Writes <root>/<name>-sweep/{sweep.csv, sweep.json} and one run directory per member.

sweep.csv columns:
  member            member index
  completed         1 if the run reached t_end
  max_decay_ratio   largest final-to-peak L_inf ratio over the perturbations
  energy_constant   max over time of (E + int D) / (E(0) + 1)
  min_entropy_rate  smallest rate of change of int (s - S) dx
  chi_in_range      1 if chi stayed within its bounds
  jiang_max_error   worst representation error (NaN without probes)";

const VERIFY_HELP: &str = "\
Runs the acceptance criteria and writes <root>/verify-<level>/ with verdict.json,
the reference riemann.csv and profile.csv, the stability runs and a determinism
check. Exits nonzero if any criterion fails.";

#[derive(Parser)]
#[command(name = "nsac", version, about = "Composite rarefaction waves for the Navier-Stokes-Allen-Cahn system")]
struct Cli {
    /// Root directory for all outputs.
    #[arg(long, global = true, env = OUTPUT_ROOT_ENV, default_value = "runs")]
    output_root: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config file (TOML).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in experiment: reference, equilibrium, stability or shock.
    #[arg(long)]
    preset: Option<String>,

    /// Override a config key, e.g. --set gas.gamma=1.2 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn text(&self) -> Result<String> {
        match (&self.config, &self.preset) {
            (Some(path), _) => std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display())),
            (None, Some(name)) => match presets::preset(name) {
                Some(text) => Ok(text.to_string()),
                None => bail!("unknown preset {name:?}; available: {}", presets::names().collect::<Vec<_>>().join(", ")),
            },
            (None, None) => bail!("pass --config <file> or --preset <name>"),
        }
    }

    fn load(&self, extra: &[String]) -> Result<ExperimentConfig> {
        let mut all = self.overrides.clone();
        all.extend_from_slice(extra);
        Ok(ExperimentConfig::from_toml(&self.text()?, &all)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the intermediate state and print the fan table.
    #[command(after_help = RIEMANN_HELP)]
    Riemann(ConfigArgs),

    /// Tabulate the smoothed composite wave.
    #[command(after_help = PROFILE_HELP)]
    Profile {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Sampling times, overriding sampling.times.
        #[arg(long, value_delimiter = ',')]
        times: Vec<f64>,
    },

    /// Run the solver with diagnostics.
    #[command(after_help = SIMULATE_HELP)]
    Simulate(ConfigArgs),

    /// Run the acceptance suite.
    #[command(after_help = VERIFY_HELP)]
    Verify {
        #[arg(value_enum)]
        level: LevelArg,
        /// Only these criteria (comma separated, 1 to 8).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Flip the sign of Phi in the energy monitor; the energy checks must then fail.
        #[arg(long, hide = true)]
        tamper_phi: bool,
    },

    /// Run a family of simulations varying one key or the perturbation amplitudes.
    #[command(after_help = SWEEP_HELP)]
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Config key to vary.
        #[arg(long, requires = "values")]
        key: Option<String>,
        /// Values for --key (comma separated).
        #[arg(long, value_delimiter = ',')]
        values: Vec<String>,
        /// Extra members with bump amplitudes rescaled by seeded random factors.
        #[arg(long, default_value_t = 0)]
        random: usize,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<bool> {
    let root = &cli.output_root;
    match &cli.command {
        Command::Riemann(args) => {
            let prep = Prepared::new(&args.load(&[])?)?;
            let dir = RunDir::create(root, &prep.cfg.name)?;
            write_riemann(&prep, &dir)?;
            print!("{}", prep.profile.riemann);
            println!("wrote {}", dir.file("riemann.csv").display());
            Ok(true)
        }
        Command::Profile { cfg, times } => {
            let extra = if times.is_empty() {
                Vec::new()
            } else {
                let list: Vec<String> = times.iter().map(|t| format!("{t:?}")).collect();
                vec![format!("sampling.times=[{}]", list.join(","))]
            };
            let prep = Prepared::new(&cfg.load(&extra)?)?;
            let dir = RunDir::create(root, &prep.cfg.name)?;
            write_profile(&prep, &dir)?;
            println!("wrote {}", dir.file("profile.csv").display());
            Ok(true)
        }
        Command::Simulate(args) => {
            let prep = Prepared::new(&args.load(&[])?)?;
            let dir = RunDir::create(root, &prep.cfg.name)?;
            let o = simulate(&prep, Some(&dir))?;
            let v = &o.verdict;
            println!("run {} on {} cells, dx = {:e}, dt0 = {:e}", o.name, prep.grid.n_cells, o.derived.dx, o.derived.dt0);
            if let Some(r) = &o.run {
                println!("reached t = {} in {} steps", r.t_final, r.steps);
            }
            println!("decay ratios (phi, psi, zeta, varphi, xi): {:?}", v.decay_ratios);
            println!("energy constant {:.4}, chi in range: {}, min entropy rate {:e}", v.energy_constant, v.chi_in_range, v.min_entropy_rate);
            if let Some(e) = o.jiang_max_error() {
                println!("representation error at probes: {e:e}");
            }
            println!("wrote {}", dir.path.display());
            if let Some(e) = &o.error {
                eprintln!("run stopped early: {e}");
                return Ok(false);
            }
            Ok(true)
        }
        Command::Verify { level, only, tamper_phi } => {
            let level = match level {
                LevelArg::Quick => Level::Quick,
                LevelArg::Full => Level::Full,
            };
            let opts = VerifyOptions {
                level,
                only: only.clone(),
                tamper_phi: *tamper_phi,
            };
            let report = verify(&opts, root)?;
            for c in &report.criteria {
                println!("{}", c.line());
            }
            println!("{}", if report.passed { "all criteria passed" } else { "some criteria failed" });
            Ok(report.passed)
        }
        Command::Sweep { cfg, key, values, random } => {
            let rows = sweep(&cfg.text()?, &cfg.overrides, key.as_deref(), values, *random, root)?;
            for r in &rows {
                println!(
                    "{:<28} completed={} max_decay_ratio={:.4} energy_constant={:.4}",
                    r.label, r.completed, r.max_decay_ratio, r.energy_constant
                );
            }
            Ok(rows.iter().all(|r| r.completed))
        }
    }
}
