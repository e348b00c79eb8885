use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kdv2_core::equations::Preset;
use kdv2_core::error::Result;
use kdv2_core::integrators::Scheme;
use kdv2_core::io::RunConfig;
use kdv2_core::runner;

#[derive(Parser, Debug)]
#[command(name = "kdv2", version, about = "Stochastic extended KdV pseudospectral simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evolve one trajectory.
    Run(Common),
    /// Evolve independent members with seeds base + index.
    Ensemble {
        #[command(flatten)]
        common: Common,
        /// Number of members (defaults to `ensemble` in the config).
        #[arg(long, short = 'm')]
        members: Option<usize>,
    },
    /// Picard iteration of the Duhamel map with contraction diagnostics.
    Picard {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma: Option<f64>,
        #[arg(long)]
        t_horizon: Option<f64>,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        kappa: Option<f64>,
    },
    /// Near-identity coefficient identities and the equivalence experiment.
    NitCheck {
        #[command(flatten)]
        common: Common,
        /// Comma-separated alpha values (beta = alpha).
        #[arg(long, value_delimiter = ',')]
        alphas: Option<Vec<f64>>,
    },
    /// Monte Carlo regularity study of the stochastic convolution.
    NoiseCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        sigma_tilde: Option<f64>,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        paths: Option<usize>,
        /// Comma-separated grid sizes, increasing.
        #[arg(long, value_delimiter = ',')]
        grids: Option<Vec<usize>>,
    },
}

/// Overrides applied on top of the config file; flags win.
#[derive(Args, Debug, Clone)]
struct Common {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    length: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    dt: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_final: Option<f64>,
    #[arg(long)]
    scheme: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    beta: Option<f64>,
    #[arg(long)]
    snapshot_stride: Option<usize>,
    /// Noise amplitude.
    #[arg(long, allow_hyphen_values = true)]
    amp: Option<f64>,
    /// Noise spectral decay exponent.
    #[arg(long, allow_hyphen_values = true)]
    decay: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(p) = &self.preset {
            c.preset = p.parse::<Preset>()?;
        }
        if let Some(s) = &self.scheme {
            c.step.scheme = s.parse::<Scheme>()?;
        }
        macro_rules! set {
            ($($flag:ident => $($field:ident).+;)*) => {
                $(if let Some(v) = self.$flag.clone() { c.$($field).+ = v; })*
            };
        }
        set! {
            n => grid.n;
            length => grid.length;
            dt => step.dt;
            t_final => step.t_final;
            seed => noise.seed;
            alpha => equation.alpha;
            beta => equation.beta;
            snapshot_stride => step.snapshot_stride;
            amp => noise.amp;
            decay => noise.decay;
        }
        if let Some(o) = &self.out {
            c.out = o.to_string_lossy().into_owned();
        }
        let out = PathBuf::from(&c.out);
        Ok((c, out))
    }
}

fn print_json<T: serde::Serialize>(v: &T) {
    match serde_json::to_string_pretty(v) {
        Ok(s) => println!("{s}"),
        Err(e) => log::warn!("cannot render summary: {e}"),
    }
}

fn execute(cmd: Command) -> Result<i32> {
    match cmd {
        Command::Run(common) => {
            let (c, out) = common.resolve()?;
            let s = runner::run(&c, &out)?;
            if s.blew_up {
                log::warn!("trajectory blew up at t = {}", s.final_time);
            }
            print_json(&s);
            Ok(s.exit_code())
        }
        Command::Ensemble { common, members } => {
            let (c, out) = common.resolve()?;
            let m = members.unwrap_or(c.ensemble);
            let s = runner::ensemble(&c, m, &out)?;
            print_json(&s);
            Ok(0)
        }
        Command::Picard { common, sigma, t_horizon, iters, kappa } => {
            let (mut c, out) = common.resolve()?;
            if let Some(v) = sigma {
                c.picard.sigma = v;
            }
            if let Some(v) = t_horizon {
                c.picard.t_horizon = v;
            }
            if let Some(v) = iters {
                c.picard.iters = v;
            }
            if let Some(v) = kappa {
                c.picard.kappa = v;
            }
            let r = runner::picard(&c, &out)?;
            print_json(&r);
            Ok(if r.diverged { 1 } else { 0 })
        }
        Command::NitCheck { common, alphas } => {
            let (mut c, out) = common.resolve()?;
            if let Some(a) = alphas {
                c.nit_check.alphas = a;
            }
            let s = runner::nit_check(&c, &out)?;
            print_json(&s);
            Ok(0)
        }
        Command::NoiseCheck { common, sigma_tilde, epsilon, paths, grids } => {
            let (mut c, out) = common.resolve()?;
            let nc = &mut c.noise_check;
            if let Some(v) = sigma_tilde {
                nc.sigma_tilde = v;
            }
            if let Some(v) = epsilon {
                nc.epsilon = v;
            }
            if let Some(v) = paths {
                nc.paths = v;
            }
            if let Some(v) = grids {
                nc.grids = v;
            }
            let t = runner::noise_check(&c, &out)?;
            print_json(&t);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("kdv2: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
