use std::ffi::OsString;
use std::path::PathBuf;

use clap::parser::ValueSource;
use clap::{ArgMatches, Args, CommandFactory, Parser, Subcommand};

/// Free relativistic wave packets: moments, field dumps, dispersion curves
/// and 1/r² asymptotes.
///
/// Energies and momenta are in eV, times and lengths in eV⁻¹. Every option
/// can also be set in a `key = value` file passed with --config; flags win.
#[derive(Parser, Debug)]
#[command(name = "wavekit", version, allow_negative_numbers = true)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Common {
    /// Config file with `key = value` lines
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// gaussian-noncov, gaussian-cov-exact, gaussian-cov-factorized or tabulated-isotropic
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Particle mass in eV [default: 1]
    #[arg(long, global = true)]
    pub mass: Option<String>,
    /// Mean momentum `px,py,pz` in eV [default: 0,0,0]
    #[arg(long, global = true, value_name = "PX,PY,PZ", allow_hyphen_values = true)]
    pub momentum: Option<String>,
    /// Momentum width in eV [default: 0.01]
    #[arg(long, global = true)]
    pub sigma_p: Option<String>,
    /// Envelope table (CSV with `k_eV,phi` columns) for tabulated-isotropic
    #[arg(long, global = true, value_name = "PATH")]
    pub table: Option<String>,
    /// Relative tolerance of field quadrature
    #[arg(long, global = true)]
    pub rel_tol: Option<String>,
    /// Absolute field tolerance as a fraction of the peak amplitude
    #[arg(long, global = true)]
    pub abs_tol: Option<String>,
    #[arg(long, global = true)]
    pub max_subdivisions: Option<String>,
    /// Grid points per axis [default: 96]
    #[arg(long, global = true)]
    pub grid: Option<String>,
    /// Grid half-width in packet widths [default: 12]
    #[arg(long, global = true)]
    pub half_extent: Option<String>,
    /// closed-form or quadrature [default: quadrature]
    #[arg(long, global = true)]
    pub field_method: Option<String>,
    /// Output file [default: standard output]
    #[arg(long, short, global = true, value_name = "PATH")]
    pub output: Option<String>,
    /// csv or json
    #[arg(long, global = true)]
    pub format: Option<String>,
    /// Worker threads [default: WAVEKIT_THREADS or all cores]
    #[arg(long, global = true)]
    pub threads: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Momentum-space moments as JSON
    #[command(allow_negative_numbers = true)]
    Moments,
    /// Field dump on the measurement grid
    #[command(allow_negative_numbers = true)]
    Evolve {
        /// Lab times `start:stop:n`, evenly spaced and inclusive
        #[arg(long = "t", value_name = "START:STOP:N", allow_hyphen_values = true)]
        t: Option<String>,
    },
    /// Analytic dispersion curve, optionally measured on the grid
    #[command(allow_negative_numbers = true)]
    Dispersion {
        /// Comma-separated lab times
        #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
        times: Option<String>,
        /// Measure σ²ₓ on the grid as well
        #[arg(long)]
        measure: bool,
    },
    /// Normalized time-integrated flux 4πr²|Φ| (rest frame)
    #[command(allow_negative_numbers = true)]
    FluxAsymptote(Asymptote),
    /// Normalized time-integrated probability 4πr²P/⟨1/|v|⟩ (rest frame)
    #[command(allow_negative_numbers = true)]
    ProbAsymptote(Asymptote),
    /// Dispersion times of an electron, a light neutrino and a 1 g body
    #[command(allow_negative_numbers = true)]
    Table1,
    /// Continuity residual statistics at random points as JSON
    #[command(allow_negative_numbers = true)]
    Continuity {
        /// Number of random events [default: 50]
        #[arg(long)]
        samples: Option<String>,
        /// Random seed [default: 0]
        #[arg(long)]
        seed: Option<String>,
        /// Finite-difference step as a fraction of the packet width [default: 0.01]
        #[arg(long)]
        step: Option<String>,
    },
}

#[derive(Args, Debug)]
pub struct Asymptote {
    /// Comma-separated radii [default: 10, 20 and 40 σ_x]
    #[arg(long, value_name = "LIST", allow_hyphen_values = true)]
    pub radii: Option<String>,
    /// time-domain, spectral or both [default: spectral]
    #[arg(long)]
    pub method: Option<String>,
}

/// What the command line asked for.
pub enum Parsed {
    Run { command: String, config: Option<PathBuf>, flags: Vec<(String, String)> },
    /// Help or version text, already rendered.
    Info(String),
}

/// Parses `argv` and returns the subcommand name together with every option
/// that was given explicitly on the command line, keyed by its config name.
pub fn parse<I, T>(argv: I) -> Result<Parsed, String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let matches = match Cli::command().try_get_matches_from(argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Ok(Parsed::Info(e.render().to_string())),
                _ => Err(e.render().to_string().trim_start_matches("error: ").to_string()),
            };
        }
    };
    let (name, sub) = matches.subcommand().ok_or("a subcommand is required")?;
    let mut flags = Vec::new();
    collect(&matches, &mut flags);
    collect(sub, &mut flags);
    let config = flags.iter().position(|(k, _)| k == "config").map(|i| PathBuf::from(flags.remove(i).1));
    Ok(Parsed::Run { command: name.to_string(), config, flags })
}

fn collect(m: &ArgMatches, out: &mut Vec<(String, String)>) {
    for id in m.ids() {
        let id = id.as_str();
        if m.value_source(id) != Some(ValueSource::CommandLine) {
            continue;
        }
        let Some(raw) = m.get_raw(id) else { continue };
        let value = raw.map(|v| v.to_string_lossy().into_owned()).collect::<Vec<_>>().join(",");
        out.retain(|(k, _)| k != id);
        out.push((id.to_string(), value));
    }
}
