//! `hom3d` command-line front end.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration or input,
//! 3 numeric failure.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hom3d::harness::{emit_results, reproduce_fig4, Fig4Options, Summary};
use hom3d::information::fisher_nonresolving;
use hom3d::parametrization::{feasibility_check, OperatingPoint, DEFAULT_FEASIBILITY_MARGIN};
use hom3d::probability::{nonresolving_prob, resolved_density};
use hom3d::sampling::{read_jsonl, write_jsonl};
use hom3d::{
    crb, estimate, fisher_resolved, generate_sample, qfi, DetectorModel, Efficiency, Error, MomentumDifference,
    OutcomeLabel, SampleConfig, SolverConfig, SourceWidths, SphericalParams, Visibility,
};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "hom3d", version, about = "Two-photon interference localization simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate outcome probabilities.
    Prob(ProbArgs),
    /// Draw a detection sample and write it as JSON lines.
    Sample(SampleArgs),
    /// Maximum-likelihood estimate from a JSON-lines sample.
    Estimate(EstimateArgs),
    /// Fisher information, quantum Fisher information and Cramér-Rao bounds.
    Fisher(FisherArgs),
    /// Check whether a detector resolves the envelope and the beats.
    Feasibility(FeasibilityArgs),
    /// Run the six standard variance and bias campaigns.
    #[command(name = "repro-fig4")]
    ReproFig4(ReproArgs),
}

#[derive(Args, Clone, Copy)]
struct ParamArgs {
    #[arg(long, default_value_t = 4.0)]
    s: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    theta: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_3)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    gamma: f64,
}

impl ParamArgs {
    fn params(&self) -> Result<(SphericalParams, Visibility, Efficiency), Error> {
        Ok((
            SphericalParams::new(self.s, self.theta, self.phi)?,
            Visibility::new(self.nu)?,
            Efficiency::new(self.gamma)?,
        ))
    }
}

#[derive(Args)]
struct ProbArgs {
    #[command(flatten)]
    p: ParamArgs,
    /// Momentum difference (xi, kx, ky); enables the resolved density.
    #[arg(long, num_args = 3, value_names = ["XI", "KX", "KY"], allow_negative_numbers = true)]
    kappa: Option<Vec<f64>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    p: ParamArgs,
    /// Number of detected pairs.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    stream: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EstimateArgs {
    /// JSON-lines sample, as written by `sample`.
    #[arg(long)]
    input: PathBuf,
    /// Visibility; defaults to the one recorded in the sample header.
    #[arg(long)]
    nu: Option<f64>,
    /// Solver settings as JSON.
    #[arg(long)]
    solver: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FisherArgs {
    #[command(flatten)]
    p: ParamArgs,
    /// Sample size for the Cramér-Rao bounds.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FeasibilityArgs {
    #[command(flatten)]
    p: ParamArgs,
    /// Frequency resolution, rad/s.
    #[arg(long)]
    delta_omega: f64,
    /// Camera pixel resolution along x', m.
    #[arg(long)]
    delta_xp: f64,
    /// Camera pixel resolution along y', m.
    #[arg(long)]
    delta_yp: f64,
    /// Source-to-camera distance, m.
    #[arg(long)]
    distance: f64,
    #[arg(long)]
    sigma_omega: f64,
    #[arg(long)]
    sigma_kx: f64,
    #[arg(long)]
    sigma_ky: f64,
    /// Camera position and frequency at which resolutions are evaluated.
    #[arg(long)]
    x_prime: f64,
    #[arg(long)]
    y_prime: f64,
    #[arg(long)]
    omega: f64,
    #[arg(long, default_value_t = DEFAULT_FEASIBILITY_MARGIN)]
    margin: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReproArgs {
    /// Campaign options as JSON; flags given explicitly override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    repetitions: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory for `fig4.csv` and `fig4.json`.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

fn write_json(out: Option<&Path>, v: &Value) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(v).map_err(|e| Error::Parse(e.to_string()))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| Error::Io { path: path.into(), source: e }),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> Result<Value, Error> {
    serde_json::to_value(v).map_err(|e| Error::Parse(e.to_string()))
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Error> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io { path: path.into(), source: e })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn prob(a: &ProbArgs) -> Result<(), Error> {
    let (sph, nu, gamma) = a.p.params()?;
    let mut v = json!({
        "nonresolving": {
            "A": nonresolving_prob(OutcomeLabel::A, sph.s(), nu, gamma),
            "B": nonresolving_prob(OutcomeLabel::B, sph.s(), nu, gamma),
        }
    });
    if let Some(k) = &a.kappa {
        let kappa = MomentumDifference::new(k[0], k[1], k[2]);
        v["resolved_density"] = json!({
            "A": resolved_density(OutcomeLabel::A, &kappa, &sph, nu, gamma),
            "B": resolved_density(OutcomeLabel::B, &kappa, &sph, nu, gamma),
        });
    }
    write_json(a.out.as_deref(), &v)
}

fn sample(a: &SampleArgs) -> Result<(), Error> {
    let (truth, nu, gamma) = a.p.params()?;
    let cfg = SampleConfig { truth, nu, gamma, n_detected: a.n, seed: a.seed, stream: a.stream };
    let s = generate_sample(&cfg)?;
    match &a.out {
        Some(path) => {
            let f = File::create(path).map_err(|e| Error::Io { path: path.clone(), source: e })?;
            write_jsonl(BufWriter::new(f), &cfg, &s).map_err(|e| Error::Io { path: path.clone(), source: e })
        }
        None => {
            let stdout = io::stdout();
            write_jsonl(stdout.lock(), &cfg, &s).map_err(|e| Error::Io { path: "<stdout>".into(), source: e })
        }
    }
}

fn estimate_cmd(a: &EstimateArgs) -> Result<(), Error> {
    let f = File::open(&a.input).map_err(|e| Error::Io { path: a.input.clone(), source: e })?;
    let (header, records) = read_jsonl(BufReader::new(f))?;
    let nu = match (a.nu, &header) {
        (Some(v), _) => Visibility::new(v)?,
        (None, Some(h)) => h.config.nu,
        (None, None) => {
            return Err(Error::InvalidArgument("sample has no header; pass --nu".into()));
        }
    };
    let solver = match &a.solver {
        Some(p) => read_json::<SolverConfig>(p)?,
        None => SolverConfig::default(),
    };
    let r = estimate(&records, nu, &solver)?;
    write_json(a.out.as_deref(), &to_value(&r)?)
}

fn fisher(a: &FisherArgs) -> Result<(), Error> {
    let (sph, nu, gamma) = a.p.params()?;
    let f = fisher_resolved(&sph, nu, gamma)?;
    let v = json!({
        "fisher": to_value(&f)?,
        "qfi": to_value(&qfi(&sph))?,
        "crb": to_value(&crb(&f, a.n)?)?,
        "fisher_nonresolving": fisher_nonresolving(sph.s(), nu, gamma),
    });
    write_json(a.out.as_deref(), &v)
}

fn feasibility(a: &FeasibilityArgs) -> Result<(), Error> {
    let (sph, _, gamma) = a.p.params()?;
    let det = DetectorModel::new(gamma, a.delta_omega, a.delta_xp, a.delta_yp, a.distance)?;
    let widths = SourceWidths::new(a.sigma_omega, a.sigma_kx, a.sigma_ky)?;
    let point = OperatingPoint { x_prime: a.x_prime, y_prime: a.y_prime, omega: a.omega };
    let r = feasibility_check(&det, &widths, &sph, &point, a.margin)?;
    write_json(a.out.as_deref(), &to_value(&r)?)
}

fn repro(a: &ReproArgs) -> Result<(), Error> {
    let mut opts = match &a.config {
        Some(p) => read_json::<Fig4Options>(p)?,
        None => Fig4Options::default(),
    };
    if let Some(r) = a.repetitions {
        opts.repetitions = r;
    }
    if let Some(s) = a.seed {
        opts.master_seed = s;
    }
    if let Some(g) = a.gamma {
        opts.gamma = Efficiency::new(g)?;
    }
    if let Some(n) = &a.n {
        opts.n_values = n.clone();
    }
    if a.workers.is_some() {
        opts.workers = a.workers;
    }
    let rows = reproduce_fig4(&opts)?;
    let summary = Summary::new(opts.configs(), rows);
    emit_results(&a.out, "fig4", &summary)?;
    let mut stderr = io::stderr().lock();
    let _ = writeln!(stderr, "wrote {}", a.out.join("fig4.csv").display());
    let _ = writeln!(stderr, "wrote {}", a.out.join("fig4.json").display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Prob(a) => prob(a),
        Command::Sample(a) => sample(a),
        Command::Estimate(a) => estimate_cmd(a),
        Command::Fisher(a) => fisher(a),
        Command::Feasibility(a) => feasibility(a),
        Command::ReproFig4(a) => repro(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
