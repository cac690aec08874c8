use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use roughreg::controlled::{orthogonality_stat, pair_gradient};
use roughreg::harness::config::{parse_configs, DriverSpec, ScalarFn, DEFAULT_SEED};
use roughreg::harness::presets::{preset_configs, run_configs, PRESETS};
use roughreg::harness::{read_result, render_summary, write_result, Overrides};
use roughreg::regcalc::{c_eps, cubic_variation_stat, forward_integral, scalar_qv, EvalSeries};
use roughreg::roughint::{rough_integral_backward, rough_integral_reg};
use roughreg::{enhance, gen_bm, gen_fbm, gen_semimartingale, EpsSchedule, Error, Flavor, Grid, GridPath, Seed};

#[derive(Parser)]
#[command(name = "roughreg", version, about = "Regularized and rough stochastic integrals on sampled paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON experiment config (one object or a list)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo paths M
    #[arg(long)]
    paths: Option<usize>,
    /// Grid steps N
    #[arg(long)]
    grid: Option<usize>,
    /// Number of regularization widths K
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (defaults to all cores)
    #[arg(long)]
    jobs: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            paths: self.paths,
            steps: self.grid,
            levels: self.levels,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DriverKind {
    Bm,
    Fbm,
    Sde,
    Smooth,
}

#[derive(Args, Clone)]
struct DriverArgs {
    #[arg(long, value_enum, default_value = "bm")]
    driver: DriverKind,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 0.4)]
    hurst: f64,
    #[arg(long, default_value_t = 1.0)]
    horizon: f64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Functional {
    /// Scalar quadratic variation of X
    Qv,
    /// Covariation of the first two components
    Cov,
    /// Cubic variation statistic of the first component
    Cubic,
    /// Forward integral of the first component against X
    Forward,
    /// Rough integral of the gradient pair of --f
    Rough,
    /// Backward rough integral of the gradient pair of --f
    Backward,
    /// Orthogonality statistic of the gradient pair of --f
    Orthogonality,
}

#[derive(Subcommand)]
enum Command {
    /// Sample driver paths and write them as CSV
    Generate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        driver: DriverArgs,
    },
    /// Evaluate one functional across the width schedule at t = T
    Eval {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        driver: DriverArgs,
        #[arg(long, value_enum)]
        functional: Functional,
        /// Path CSV (`t,x1,...`) instead of a generated driver
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "sin")]
        f: FnArg,
        #[arg(long, value_enum, default_value = "strat")]
        flavor: FlavorArg,
    },
    /// Run a preset (or the experiments of --config) and write a result directory
    Verify {
        /// One of: theorem_66, theorem_69, prop_64, section2, orthogonality, time_reversal, identities
        preset: Option<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Print the summary of a result directory
    Report {
        dir: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FnArg {
    Sin,
    Cos,
    Arctan,
    Square,
    Linear,
}

impl From<FnArg> for ScalarFn {
    fn from(f: FnArg) -> Self {
        match f {
            FnArg::Sin => ScalarFn::Sin,
            FnArg::Cos => ScalarFn::Cos,
            FnArg::Arctan => ScalarFn::Arctan,
            FnArg::Square => ScalarFn::Square,
            FnArg::Linear => ScalarFn::Linear,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FlavorArg {
    Ito,
    Strat,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<bool, Error> {
    match cli.command {
        Command::Generate { common, driver } => generate(&common, &driver),
        Command::Eval {
            common,
            driver,
            functional,
            input,
            f,
            flavor,
        } => eval(&common, &driver, functional, input.as_deref(), f.into(), flavor),
        Command::Verify { preset, common } => verify(preset, &common),
        Command::Report { dir, common } => {
            let dir = dir
                .or(common.out)
                .ok_or_else(|| Error::Config("report needs a result directory".into()))?;
            let result = read_result(&dir)?;
            print!("{}", render_summary(&result));
            Ok(result.pass())
        }
    }
}

fn sample(d: &DriverArgs, grid: Grid, seed: Seed) -> Result<GridPath, Error> {
    match d.driver {
        DriverKind::Bm => gen_bm(grid, d.dim, seed),
        DriverKind::Fbm => gen_fbm(grid, d.hurst, d.dim, seed),
        DriverKind::Sde => gen_semimartingale(
            grid,
            d.dim,
            &vec![0.0; d.dim],
            &|_, x, b| b.iter_mut().zip(x).for_each(|(o, v)| *o = -0.5 * v),
            &|_, _, s| {
                s.fill(0.0);
                for i in 0..d.dim {
                    s[i * d.dim + i] = 1.0;
                }
            },
            seed,
        ),
        DriverKind::Smooth => {
            let spec = DriverSpec::Smooth { dim: d.dim };
            GridPath::from_fn(grid, spec.dim(), |t, out| {
                for (i, o) in out.iter_mut().enumerate() {
                    let f = (i + 1) as f64;
                    *o = (2.0 * std::f64::consts::PI * f * t).sin() / f;
                }
            })
        }
    }
}

fn generate(common: &Common, d: &DriverArgs) -> Result<bool, Error> {
    let grid = Grid::new(d.horizon, common.grid.unwrap_or(1024))?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("paths"));
    fs::create_dir_all(&out).map_err(Error::from)?;
    let seed = common.seed.unwrap_or(DEFAULT_SEED);
    for i in 0..common.paths.unwrap_or(1) {
        let x = sample(d, grid, Seed::new(seed, i as u64))?;
        let file = fs::File::create(out.join(format!("path_{i:05}.csv"))).map_err(Error::from)?;
        x.write_csv(std::io::BufWriter::new(file))?;
    }
    Ok(true)
}

fn eval(
    common: &Common,
    d: &DriverArgs,
    functional: Functional,
    input: Option<&Path>,
    f: ScalarFn,
    flavor: FlavorArg,
) -> Result<bool, Error> {
    let x = match input {
        Some(p) => {
            let file = fs::File::open(p).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::NotFound(p.to_path_buf()),
                _ => Error::Io(e),
            })?;
            GridPath::read_csv(file)?
        }
        None => {
            let grid = Grid::new(d.horizon, common.grid.unwrap_or(1024))?;
            sample(d, grid, Seed::new(common.seed.unwrap_or(DEFAULT_SEED), 0))?
        }
    };
    let grid = *x.grid();
    let schedule = EpsSchedule::with_levels(&grid, common.levels.unwrap_or(6))?;
    let t = grid.horizon();
    let flavor = match flavor {
        FlavorArg::Ito => Flavor::Ito,
        FlavorArg::Strat => Flavor::Strat,
    };
    let d = x.dim();
    let needs_pair = matches!(functional, Functional::Rough | Functional::Backward | Functional::Orthogonality);
    let pair = if needs_pair {
        Some(pair_gradient(&|v| f.eval(v), &|v, g| f.grad(v, g), &x)?)
    } else {
        None
    };
    let e = enhance(&x, flavor)?;
    let (name, cols) = match functional {
        Functional::Qv => ("scalar_qv", 1),
        Functional::Cov => ("covariation", 1),
        Functional::Cubic => ("cubic_variation", 1),
        Functional::Forward => ("forward_integral", d),
        Functional::Rough => ("rough_integral", d),
        Functional::Backward => ("rough_integral_backward", d),
        Functional::Orthogonality => ("orthogonality", 1),
    };
    let mut series = EvalSeries::new(name, 1, cols);
    for eps in schedule.eps() {
        let value = match functional {
            Functional::Qv => vec![scalar_qv(&x, eps, t)?],
            Functional::Cov => {
                if d < 2 {
                    return Err(Error::InvalidDimension("covariation needs dim >= 2".into()));
                }
                vec![c_eps(&x.component(0)?, &x.component(1)?, eps, t)?]
            }
            Functional::Cubic => vec![cubic_variation_stat(&x.component(0)?, eps, t)?],
            Functional::Forward => forward_integral(&x.component(0)?, &x, eps, t)?.data,
            Functional::Rough => rough_integral_reg(pair.as_ref().unwrap(), &e, eps, t)?.data,
            Functional::Backward => rough_integral_backward(pair.as_ref().unwrap(), &e, eps, t)?.data,
            Functional::Orthogonality => vec![orthogonality_stat(pair.as_ref().unwrap(), eps, t)?],
        };
        series.push(eps, t, value)?;
    }
    match &common.out {
        Some(p) => series.write_csv(fs::File::create(p).map_err(Error::from)?)?,
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            series.write_csv(&mut lock)?;
            lock.flush().map_err(Error::from)?;
        }
    }
    Ok(true)
}

fn verify(preset: Option<String>, common: &Common) -> Result<bool, Error> {
    let overrides = common.overrides();
    let (name, cfgs) = match (&common.config, preset) {
        (Some(path), name) => {
            let text = fs::read_to_string(path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Error::Config(format!("config file {} not found", path.display())),
                _ => Error::Io(e),
            })?;
            let mut cfgs = parse_configs(&text)?;
            for c in &mut cfgs {
                overrides.apply(c);
                c.validate()?;
            }
            (name.unwrap_or_else(|| "custom".to_string()), cfgs)
        }
        (None, Some(name)) => {
            let cfgs = preset_configs(&name, &overrides)?;
            (name, cfgs)
        }
        (None, None) => {
            return Err(Error::Config(format!("verify needs a preset ({}) or --config", PRESETS.join(", "))))
        }
    };
    let result = run_configs(&name, &cfgs, common.jobs)?;
    let out = common.out.clone().unwrap_or_else(|| PathBuf::from("results").join(&name));
    write_result(&out, &result)?;
    print!("{}", render_summary(&result));
    println!("results written to {}", out.display());
    Ok(result.pass())
}
