use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dirlap::cheeger::{
    abs_condition, h_infinity_trend, inequality_check, m_sup, multiples_schedule, TrendDomain, Variant,
};
use dirlap::generators::{z_shell, GeneratorSpec, WeightRange, ZWeights};
use dirlap::graph::format::write_graph;
use dirlap::graph::{validate, DirectedWeightedGraph, Filtration, VertexId, VertexSubset};
use dirlap::linalg::fmt_f64;
use dirlap::operators::{assemble, OperatorKind};
use dirlap::spectra::{
    eigenvalues, ess_spectrum_estimate, lambda1_symmetric, nu, numerical_range_boundary, sector_fit_with, SectorOptions,
};

/// Exit status for a failed check, as opposed to a usage or I/O error.
const CHECK_FAILED: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "dirlap", version, about = "Laplacians of directed weighted graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check balance, antisymmetry bound, degree and connectivity.
    Validate(Common),
    /// Eigenvalues of an operator restricted to a vertex subset.
    Spectra {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "delta")]
        operator: OperatorArg,
    },
    /// Numerical range boundary and sector certificate.
    Range {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 360)]
        angles: usize,
        /// Sector vertex; defaults to −M/2.
        #[arg(long, allow_hyphen_values = true)]
        vertex: Option<f64>,
    },
    /// Isoperimetric constants and the Cheeger chain on a subset.
    Cheeger {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        filtration: FiltrationArgs,
    },
    /// Dirichlet bottoms on annuli of a hop-ball filtration.
    Essgap {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        filtration: FiltrationArgs,
    },
    /// Full report for the cubic-weight integer line.
    ReproZ {
        #[arg(long, default_value_t = 64)]
        radius: usize,
        #[arg(long, default_value_t = 8)]
        n_max: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Write a generated graph file.
    Gen(Common),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OperatorArg {
    Delta,
    DeltaPrime,
    S,
    B,
}

impl From<OperatorArg> for OperatorKind {
    fn from(o: OperatorArg) -> Self {
        match o {
            OperatorArg::Delta => OperatorKind::Delta,
            OperatorArg::DeltaPrime => OperatorKind::DeltaPrime,
            OperatorArg::S => OperatorKind::S,
            OperatorArg::B => OperatorKind::B,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GenKind {
    ZLine,
    UniformLine,
    DirectedCycle,
    SymmetricRandom,
    CirculationRandom,
}

#[derive(Args, Debug)]
struct Common {
    /// Graph file.
    #[arg(long, conflicts_with = "gen")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    gen: Option<GenKind>,
    #[arg(long, default_value_t = 16)]
    radius: usize,
    #[arg(long, default_value_t = 12)]
    size: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.3)]
    density: f64,
    #[arg(long, default_value_t = 3)]
    cycles: usize,
    #[arg(long, default_value_t = 1.0)]
    forward: f64,
    #[arg(long, default_value_t = 0.0)]
    backward: f64,
    #[arg(long, default_value_t = 0.5)]
    weight_lo: f64,
    #[arg(long, default_value_t = 2.0)]
    weight_hi: f64,
    /// Vertex ids separated by commas; `a..b` expands integer ranges.
    /// Defaults to every interior vertex.
    #[arg(long, allow_hyphen_values = true)]
    subset: Option<String>,
    #[arg(long, default_value_t = 1e-12)]
    tol_beta: f64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct FiltrationArgs {
    /// Largest filtration level `n`.
    #[arg(long)]
    n_max: Option<usize>,
    /// Multipliers `f` giving `k = f·n`, separated by commas.
    #[arg(long, default_value = "2,4")]
    k_schedule: String,
}

impl Common {
    fn spec(&self) -> anyhow::Result<GeneratorSpec> {
        let range = || WeightRange::new(self.weight_lo, self.weight_hi);
        Ok(match (&self.input, self.gen) {
            (Some(path), None) => GeneratorSpec::File { path: path.clone() },
            (None, Some(kind)) => match kind {
                GenKind::ZLine => GeneratorSpec::z_line(self.radius),
                GenKind::UniformLine => GeneratorSpec::ZLine { radius: self.radius, weights: ZWeights::Uniform(1) },
                GenKind::DirectedCycle => {
                    GeneratorSpec::DirectedCycle { n: self.size, forward: self.forward, backward: self.backward }
                }
                GenKind::SymmetricRandom => GeneratorSpec::SymmetricRandom {
                    size: self.size,
                    seed: self.seed,
                    density: self.density,
                    weight_range: range()?,
                },
                GenKind::CirculationRandom => GeneratorSpec::CirculationRandom {
                    size: self.size,
                    seed: self.seed,
                    symmetric_density: self.density,
                    cycle_count: self.cycles,
                    weight_range: range()?,
                },
            },
            _ => bail!("exactly one of --input or --gen is required"),
        })
    }

    fn load(&self) -> anyhow::Result<(GeneratorSpec, DirectedWeightedGraph)> {
        let spec = self.spec()?;
        let graph = spec.build().context("building graph")?;
        Ok((spec, graph))
    }

    fn omega(&self, graph: &DirectedWeightedGraph) -> anyhow::Result<VertexSubset> {
        match &self.subset {
            None => Ok(graph.interior()),
            Some(text) => Ok(graph.subset(parse_ids(text)?)?),
        }
    }
}

fn parse_ids(text: &str) -> anyhow::Result<Vec<VertexId>> {
    let mut ids = Vec::new();
    for tok in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        if let Some((a, b)) = tok.split_once("..") {
            let (a, b): (i64, i64) = (a.trim().parse()?, b.trim().parse()?);
            ids.extend((a..=b).map(VertexId::Int));
        } else if let Ok(k) = tok.parse::<i64>() {
            ids.push(VertexId::Int(k));
        } else {
            ids.push(VertexId::Name(tok.trim_matches('"').to_string()));
        }
    }
    if ids.is_empty() {
        bail!("empty --subset");
    }
    Ok(ids)
}

fn parse_factors(text: &str) -> anyhow::Result<Vec<usize>> {
    let f: Vec<usize> =
        text.split(',').map(|t| t.trim().parse::<usize>()).collect::<Result<_, _>>().context("--k-schedule")?;
    if f.is_empty() || f.iter().any(|&x| x < 2) {
        bail!("--k-schedule multipliers must be at least 2");
    }
    Ok(f)
}

struct Outputs {
    dir: PathBuf,
}

impl Outputs {
    fn new(dir: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf() })
    }

    fn text(&self, name: &str, body: &str) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))
    }

    fn json(&self, name: &str, value: &impl Serialize) -> anyhow::Result<()> {
        let mut body = serde_json::to_string_pretty(value)?;
        body.push('\n');
        self.text(name, &body)
    }
}

/// Outcome of a command: whether every asserted check passed.
type Checked = anyhow::Result<bool>;

fn cmd_validate(c: &Common) -> Checked {
    let (_, g) = c.load()?;
    let report = validate(&g, c.tol_beta)?;
    Outputs::new(&c.out)?.json("validation.json", &report)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(true)
}

#[derive(Serialize)]
struct SpectraSummary {
    operator: OperatorKind,
    dimension: usize,
    lambda1: f64,
    nu: f64,
    min_re: f64,
}

fn cmd_spectra(c: &Common, which: OperatorArg) -> Checked {
    let (_, g) = c.load()?;
    let omega = c.omega(&g)?;
    let op = assemble(&g, &omega, which.into())?;
    let eig = eigenvalues(&op)?;
    let lambda1 = lambda1_symmetric(&assemble(&g, &omega, OperatorKind::S)?)?;
    let nu = nu(&op)?;
    let mut csv = String::from("index,re,im\n");
    for (i, z) in eig.iter().enumerate() {
        writeln!(csv, "{i},{},{}", fmt_f64(z.re), fmt_f64(z.im))?;
    }
    let summary = SpectraSummary {
        operator: which.into(),
        dimension: op.dim(),
        lambda1,
        nu,
        min_re: eig.iter().map(|z| z.re).fold(f64::INFINITY, f64::min),
    };
    let out = Outputs::new(&c.out)?;
    out.text("eigenvalues.csv", &csv)?;
    out.json("spectra.json", &summary)?;
    println!("lambda1 = {}", fmt_f64(lambda1));
    println!("nu = {}", fmt_f64(nu));
    Ok(true)
}

fn cmd_range(c: &Common, angles: usize, vertex: Option<f64>) -> Checked {
    if angles < 8 {
        bail!("--angles must be at least 8");
    }
    let (_, g) = c.load()?;
    let omega = c.omega(&g)?;
    let op = assemble(&g, &omega, OperatorKind::Delta)?;
    let boundary = numerical_range_boundary(&op, angles)?;
    let opts = SectorOptions { vertex_a: vertex, angle_count: angles, ..SectorOptions::default() };
    let sector = sector_fit_with(&g, &op, &opts)?;
    let mut csv = String::from("theta,re,im\n");
    for p in &boundary {
        writeln!(csv, "{},{},{}", fmt_f64(p.theta), fmt_f64(p.point.re), fmt_f64(p.point.im))?;
    }
    let out = Outputs::new(&c.out)?;
    out.text("range.csv", &csv)?;
    out.json("sector.json", &sector)?;
    println!("{}", serde_json::to_string_pretty(&sector)?);
    Ok(sector.sectorial && sector.boundary_in_sector)
}

fn filtration_for(spec: &GeneratorSpec, g: &DirectedWeightedGraph, max_level: usize) -> anyhow::Result<Filtration> {
    Ok(Filtration::hop_balls(g, spec.root(g), max_level)?)
}

fn cmd_cheeger(c: &Common, f: &FiltrationArgs) -> Checked {
    let (spec, g) = c.load()?;
    let out = Outputs::new(&c.out)?;
    let Some(n_max) = f.n_max else {
        let omega = c.omega(&g)?;
        let report = inequality_check(&g, &omega)?;
        out.json("cheeger.json", &report)?;
        println!("{}", serde_json::to_string_pretty(&report)?);
        return Ok(report.inequality_holds && report.self_adjoint_bound_holds);
    };
    let factors = parse_factors(&f.k_schedule)?;
    let ns: Vec<usize> = (1..=n_max).collect();
    let schedule = multiples_schedule(&ns, &factors);
    let max_k = n_max * factors.iter().max().expect("non-empty");
    let filtration = filtration_for(&spec, &g, max_k)?;
    let domain = TrendDomain::Annulus { factor: 2 };
    let h = h_infinity_trend(&g, &filtration, &ns, Variant::H, domain)?;
    let ht = h_infinity_trend(&g, &filtration, &ns, Variant::HTilde, domain)?;
    let abs = abs_condition(&g, &filtration, &schedule)?;
    let mut csv = String::from("n,h,h_tilde,M,c_n\n");
    for (i, &n) in ns.iter().enumerate() {
        let m = m_sup(&g, &filtration.annulus(n, 2 * n)?)?;
        writeln!(
            csv,
            "{n},{},{},{},{}",
            fmt_f64(h.points[i].value),
            fmt_f64(ht.points[i].value),
            fmt_f64(m),
            fmt_f64(abs.c_sequence[i].1)
        )?;
    }
    out.text("cheeger.csv", &csv)?;
    out.json("cheeger_trend.json", &serde_json::json!({ "h": h, "h_tilde": ht, "abs": abs }))?;
    print!("{csv}");
    println!("abs verdict: {:?}", abs.verdict);
    Ok(abs.cross_check_holds)
}

fn cmd_essgap(c: &Common, f: &FiltrationArgs) -> Checked {
    let (spec, g) = c.load()?;
    let n_max = f.n_max.unwrap_or(8);
    let factors = parse_factors(&f.k_schedule)?;
    let ns: Vec<usize> = (1..=n_max).collect();
    let schedule = multiples_schedule(&ns, &factors);
    let filtration = filtration_for(&spec, &g, n_max * factors.iter().max().expect("non-empty"))?;
    let est = ess_spectrum_estimate(&g, &filtration, &schedule)?;
    let out = Outputs::new(&c.out)?;
    out.text("ess.csv", &est.to_csv())?;
    out.json("ess.json", &est)?;
    println!("verdict: {:?}", est.verdict);
    println!("eta_ess_lower = {}", fmt_f64(est.eta_ess_lower));
    Ok(true)
}

fn z_envelope(n: f64) -> f64 {
    2.0 * (n.powi(3) + (2.0 * n + 1.0).powi(3)) / ((n + 1.0) * (n.powi(3) + (n + 1.0).powi(3)))
}

fn cmd_repro_z(radius: usize, n_max: usize, dir: &Path) -> Checked {
    if n_max < 1 || 2 * n_max >= radius {
        bail!("need 1 <= n-max and 2 * n-max < radius");
    }
    let spec = GeneratorSpec::z_line(radius);
    let g = spec.build()?;
    let out = Outputs::new(dir)?;
    let mut summary = String::new();
    let mut all = true;
    let mut check = |summary: &mut String, ok: bool, line: String| -> anyhow::Result<()> {
        all &= ok;
        writeln!(summary, "{} {line}", if ok { "PASS" } else { "FAIL" })?;
        Ok(())
    };

    let report = validate(&g, 0.0)?;
    out.json("validation.json", &report)?;
    check(&mut summary, report.beta_max_deviation_exact == "0", "beta_max_deviation = 0".into())?;
    check(&mut summary, report.gamma_constant_exact == "1", "gamma_constant = 1".into())?;

    let mut csv = String::from("n,lambda1,bound\n");
    let mut last = f64::NEG_INFINITY;
    let mut increasing = true;
    for n in 1..=n_max {
        let omega = z_shell(&g, n as i64, radius as i64 - 1);
        let l = lambda1_symmetric(&assemble(&g, &omega, OperatorKind::S)?)?;
        let bound = n as f64 / 8.0;
        writeln!(csv, "{n},{},{}", fmt_f64(l), fmt_f64(bound))?;
        check(&mut summary, l >= bound, format!("lambda1(n={n}) >= {bound:?}"))?;
        increasing &= l > last;
        last = l;
    }
    out.text("lambda1.csv", &csv)?;
    check(&mut summary, increasing, "lambda1 strictly increasing in n".into())?;

    let ns: Vec<usize> = std::iter::successors(Some(2usize), |n| Some(n * 2)).take_while(|&n| n <= n_max).collect();
    if !ns.is_empty() {
        let filtration = Filtration::hop_balls(&g, spec.root(&g), 2 * n_max)?;
        let trend = h_infinity_trend(&g, &filtration, &ns, Variant::HTilde, TrendDomain::Annulus { factor: 2 })?;
        let mut csv = String::from("n,h_tilde,envelope\n");
        for p in &trend.points {
            let env = z_envelope(p.n as f64);
            writeln!(csv, "{},{},{}", p.n, fmt_f64(p.value), fmt_f64(env))?;
            check(&mut summary, p.value <= env, format!("h_tilde(n={}) <= envelope {env:.6}", p.n))?;
        }
        let decreasing = trend.points.windows(2).all(|w| w[1].value < w[0].value);
        check(&mut summary, decreasing, "h_tilde decreasing in n".into())?;
        out.text("h_tilde.csv", &csv)?;
        out.json("h_tilde.json", &trend)?;
    }

    let op = assemble(&g, &g.interior(), OperatorKind::Delta)?;
    let sector = sector_fit_with(&g, &op, &SectorOptions { vertex_a: Some(-0.5), ..SectorOptions::default() })?;
    out.json("sector.json", &sector)?;
    check(&mut summary, sector.im_bound <= 0.5 + 1e-8, "im_bound <= 1/2".into())?;
    check(&mut summary, sector.half_angle <= std::f64::consts::FRAC_PI_4 + 1e-6, "half_angle <= pi/4".into())?;

    writeln!(summary, "summary: {}", if all { "PASS" } else { "FAIL" })?;
    out.text("summary.txt", &summary)?;
    print!("{summary}");
    Ok(all)
}

fn cmd_gen(c: &Common) -> Checked {
    let (_, g) = c.load()?;
    let text = write_graph(&g);
    Outputs::new(&c.out)?.text("graph.txt", &text)?;
    Ok(true)
}

fn configure_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("DIRLAP_THREADS") {
        let n: usize = v.parse().with_context(|| format!("DIRLAP_THREADS={v}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> Checked {
    configure_threads()?;
    match cli.command {
        Command::Validate(c) => cmd_validate(&c),
        Command::Spectra { common, operator } => cmd_spectra(&common, operator),
        Command::Range { common, angles, vertex } => cmd_range(&common, angles, vertex),
        Command::Cheeger { common, filtration } => cmd_cheeger(&common, &filtration),
        Command::Essgap { common, filtration } => cmd_essgap(&common, &filtration),
        Command::ReproZ { radius, n_max, out } => cmd_repro_z(radius, n_max, &out),
        Command::Gen(c) => cmd_gen(&c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(CHECK_FAILED),
        Err(e) => match e.downcast_ref::<dirlap::Error>() {
            Some(dirlap::Error::BetaViolated(_)) => {
                eprintln!("error: {e:#}");
                ExitCode::from(CHECK_FAILED)
            }
            _ => {
                eprintln!("error: {e:#}");
                ExitCode::FAILURE
            }
        },
    }
}
