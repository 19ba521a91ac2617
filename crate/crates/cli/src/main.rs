//! Command-line front end: residual reports over scenario grids, the seeded
//! identity suite, polynomial extraction, leaf meshes and residual grids.
//!
//! Exit codes: 0 when every check passes, 1 when some residual fails, 2 on
//! input errors. Reports are JSON on stdout; meshes and grids are CSV.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use contactroll::contact::{leaf_integrate, ContactJet, DEFAULT_LEAF_GRID, DEFAULT_W0};
use contactroll::correspondence::poly::{label, p1_claims, p1_coefficients};
use contactroll::correspondence::CorrFrame;
use contactroll::report::{Residual, ResidualRecord, ResidualReport, Summary};
use contactroll::scenarios::suite::{identity_suite, pair_grid, run_report, ScenarioConfig, KEYSTONE};
use contactroll::scenarios::PairKind;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "contactroll", version, about = "Residual checks for rolling contact-element distributions")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run check groups over a scenario grid.
    Report(ReportArgs),
    /// Seeded property suite of the kernel and form identities.
    Identity(IdentityArgs),
    /// Coefficients of the degree-four polynomial and its claims at a point.
    Poly(PolyArgs),
    /// Integrate a leaf and write its mesh as CSV.
    Leaf(LeafArgs),
    /// Rolling residual over an isometric pair, as CSV.
    Grid(GridArgs),
}

#[derive(Args)]
struct ReportArgs {
    /// JSON scenario config; flags given on the command line override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// pseudosphere (alias tractroid), sphere or random_tangent.
    #[arg(long)]
    scenario: Option<String>,
    /// Bäcklund angle, e.g. 0.6, 0.5i, 0.3-0.2i.
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    /// Grid "NxMxP" (or "NxM" for a single w).
    #[arg(long)]
    grid: Option<String>,
    /// Box "u0,u1,v0,v1,w0,w1".
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Comma-separated check groups.
    #[arg(long)]
    checks: Option<String>,
    /// Amplitude of a perturbation added to V.
    #[arg(long, allow_hyphen_values = true)]
    perturb: Option<f64>,
    /// Seed surface of random_tangent.
    #[arg(long)]
    surface: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Tolerance override for every record.
    #[arg(long)]
    tol: Option<f64>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct IdentityArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 1000)]
    samples: usize,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PolyArgs {
    #[arg(long, default_value = "pseudosphere")]
    scenario: String,
    #[arg(long, allow_hyphen_values = true)]
    sigma: Option<String>,
    /// Point "u,v,w".
    #[arg(long, allow_hyphen_values = true)]
    point: Option<String>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LeafArgs {
    /// Tractroid Bäcklund angle (real).
    #[arg(long, allow_hyphen_values = true, default_value = "0.6")]
    sigma: String,
    /// Fiber coordinate at the grid corner.
    #[arg(long, allow_hyphen_values = true, default_value_t = DEFAULT_W0)]
    w0: f64,
    /// Grid "NxM".
    #[arg(long, default_value = "33x33")]
    grid: String,
    /// Box "u0,u1,v0,v1".
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// CSV destination (stdout when absent); the JSON report goes to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    /// eq2.flat, eq2.tangent or eq2.perp.
    #[arg(long, default_value = "eq2.flat")]
    check: String,
    /// catenoid_helicoid, plane_cylinder or rigid_motion.
    #[arg(long, default_value = "catenoid_helicoid")]
    pair: String,
    /// Grid "NxM".
    #[arg(long, default_value = "15x15")]
    grid: String,
    #[arg(long)]
    tol: Option<f64>,
    /// CSV destination (stdout when absent); the JSON report goes to stderr.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Top-level JSON document.
#[derive(Serialize)]
struct Output<'a, C: Serialize> {
    config_echo: C,
    #[serde(skip_serializing_if = "Option::is_none")]
    coefficients: Option<Vec<Coefficient>>,
    records: &'a [ResidualRecord],
    summary: Summary,
}

#[derive(Serialize)]
struct Coefficient {
    monomial: String,
    re: f64,
    im: f64,
}

fn parse_floats(s: &str, n: usize, what: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("malformed {what} {s:?}"))?;
    if v.len() != n {
        bail!("{what} needs {n} comma-separated numbers, got {s:?}");
    }
    Ok(v)
}

/// "NxM" or "NxMxP".
fn parse_grid(s: &str) -> Result<Vec<usize>> {
    let v: Vec<usize> = s
        .split('x')
        .map(|x| x.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("malformed grid {s:?}"))?;
    if !(2..=3).contains(&v.len()) || v.contains(&0) {
        bail!("grid must be NxM or NxMxP with positive sizes, got {s:?}");
    }
    Ok(v)
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn emit<C: Serialize>(out: &mut dyn Write, echo: C, coefficients: Option<Vec<Coefficient>>, rep: &ResidualReport) -> Result<()> {
    let doc = Output { config_echo: echo, coefficients, records: &rep.records, summary: rep.summary() };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn report_config(a: &ReportArgs) -> Result<ScenarioConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("cannot read {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("malformed config {}", p.display()))?
        }
        None => ScenarioConfig::default(),
    };
    if let Some(s) = &a.scenario {
        cfg.scenario = s.clone();
    }
    if let Some(s) = &a.sigma {
        cfg.sigma = Some(s.clone());
    }
    if let Some(g) = &a.grid {
        let g = parse_grid(g)?;
        cfg.grid = [g[0], g[1], g.get(2).copied().unwrap_or(1)];
    }
    if let Some(d) = &a.domain {
        let d = parse_floats(d, 6, "domain")?;
        cfg.domain = [[d[0], d[1]], [d[2], d[3]], [d[4], d[5]]];
    }
    if let Some(c) = &a.checks {
        cfg.checks = c.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect();
    }
    if let Some(p) = a.perturb {
        cfg.perturb = p;
    }
    if let Some(s) = &a.surface {
        cfg.surface = s.clone();
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if a.tol.is_some() {
        cfg.tol = a.tol;
    }
    // surface input errors before any evaluation
    cfg.sigma()?;
    cfg.groups()?;
    cfg.points()?;
    cfg.field()?;
    Ok(cfg)
}

fn cmd_report(a: &ReportArgs) -> Result<bool> {
    let cfg = report_config(a)?;
    let rep = run_report(&cfg)?;
    emit(&mut *sink(a.out.as_deref())?, &cfg, None, &rep)?;
    Ok(rep.all_pass())
}

fn cmd_identity(a: &IdentityArgs) -> Result<bool> {
    if a.samples == 0 {
        bail!("--samples must be positive");
    }
    let mut rep = identity_suite(a.seed, a.samples)?;
    if let Some(t) = a.tol {
        rep.retolerate(t);
    }
    #[derive(Serialize)]
    struct Echo {
        seed: u64,
        samples: usize,
        tol: Option<f64>,
    }
    emit(&mut *sink(a.out.as_deref())?, Echo { seed: a.seed, samples: a.samples, tol: a.tol }, None, &rep)?;
    Ok(rep.all_pass())
}

fn cmd_poly(a: &PolyArgs) -> Result<bool> {
    let cfg = ScenarioConfig { scenario: a.scenario.clone(), sigma: a.sigma.clone(), ..Default::default() };
    let p = match &a.point {
        Some(s) => parse_floats(s, 3, "point")?,
        None => KEYSTONE.to_vec(),
    };
    let field = cfg.field()?;
    let frame = ContactJet::new(&field, p[0], p[1], p[2], 3).and_then(|cj| CorrFrame::build(&cj));
    let (coefficients, mut rep) = match frame.and_then(|f| Ok((p1_coefficients(&f)?, p1_claims(&f)?))) {
        Ok((pc, rep)) => {
            let mut cs = Vec::new();
            for d in 0..=4 {
                for i in (0..=d).rev() {
                    let z = pc.a[i][d - i].v;
                    cs.push(Coefficient { monomial: label(i, d - i, "c2"), re: z.re, im: z.im });
                }
            }
            (Some(cs), rep)
        }
        Err(e) => {
            let mut rep = ResidualReport::new();
            rep.push_failed("P1", [p[0], p[1], p[2]], &e, 0.0);
            (None, rep)
        }
    };
    if let Some(t) = a.tol {
        rep.retolerate(t);
    }
    rep.sort();
    #[derive(Serialize)]
    struct Echo<'a> {
        scenario: &'a str,
        sigma: String,
        point: [f64; 3],
        tol: Option<f64>,
    }
    let echo = Echo { scenario: &a.scenario, sigma: cfg.sigma()?.to_string(), point: [p[0], p[1], p[2]], tol: a.tol };
    emit(&mut *sink(a.out.as_deref())?, echo, coefficients, &rep)?;
    Ok(rep.all_pass())
}

/// Tolerances of the leaf statistics.
const LEAF_PATH_TOL: f64 = 1e-6;
const LEAF_CURVATURE_TOL: f64 = 1e-4;

fn cmd_leaf(a: &LeafArgs) -> Result<bool> {
    let sigma = contactroll::scenarios::parse_complex(&a.sigma)?;
    if sigma.im != 0.0 {
        bail!("leaf integration needs a real angle, got {}", a.sigma);
    }
    let g = parse_grid(&a.grid)?;
    if g.len() != 2 || g.iter().any(|&n| n < 2) {
        bail!("leaf grid must be NxM with N, M ≥ 2, got {:?}", a.grid);
    }
    let mut grid = DEFAULT_LEAF_GRID;
    grid.n = [g[0], g[1]];
    if let Some(d) = &a.domain {
        let d = parse_floats(d, 4, "domain")?;
        grid.u = [d[0], d[1]];
        grid.v = [d[2], d[3]];
    }
    let field = contactroll::scenarios::backlund_field(contactroll::scenarios::BacklundSeed::Tractroid, sigma)?;
    let mesh = leaf_integrate(&field, None, a.w0, &grid);
    let start = [grid.u[0], grid.v[0], a.w0];
    let mut rep = ResidualReport::new();
    if let Some(e) = &mesh.error {
        rep.push_failed("leaf.integrate", start, e, LEAF_PATH_TOL);
    }
    rep.push("leaf.path", start, Residual::relative(mesh.path_independence, 0.0), LEAF_PATH_TOL);
    // the transformed surface has curvature −1
    let worst = mesh.curvature().iter().map(|(_, _, k)| (k + 1.0).norm()).fold(0.0, f64::max);
    rep.push("leaf.curvature", start, Residual::relative(worst, 0.0), LEAF_CURVATURE_TOL);
    let mut out = sink(a.out.as_deref())?;
    mesh.write_csv(&mut *out)?;
    out.flush()?;
    #[derive(Serialize)]
    struct Echo<'a> {
        sigma: &'a str,
        w0: f64,
        grid: [usize; 2],
        domain: [[f64; 2]; 2],
    }
    let echo = Echo { sigma: &a.sigma, w0: a.w0, grid: grid.n, domain: [grid.u, grid.v] };
    emit(&mut io::stderr().lock(), echo, None, &rep)?;
    Ok(rep.all_pass())
}

fn cmd_grid(a: &GridArgs) -> Result<bool> {
    let g = parse_grid(&a.grid)?;
    if g.len() != 2 {
        bail!("grid must be NxM, got {:?}", a.grid);
    }
    let pair = PairKind::from_name(&a.pair)?;
    let mut rep = pair_grid(&pair, &a.check, g[0], g[1])?;
    if let Some(t) = a.tol {
        rep.retolerate(t);
    }
    let mut out = sink(a.out.as_deref())?;
    writeln!(out, "u,v,residual,scale,rel_residual,pass")?;
    for r in &rep.records {
        writeln!(out, "{},{},{:e},{:e},{:e},{}", r.point[0], r.point[1], r.residual, r.scale, r.rel_residual, r.pass)?;
    }
    out.flush()?;
    #[derive(Serialize)]
    struct Echo<'a> {
        check: &'a str,
        pair: &'a str,
        grid: [usize; 2],
        tol: Option<f64>,
    }
    emit(&mut io::stderr().lock(), Echo { check: &a.check, pair: &a.pair, grid: [g[0], g[1]], tol: a.tol }, None, &rep)?;
    Ok(rep.all_pass())
}

fn init_pool() -> Result<()> {
    if let Ok(s) = std::env::var("CONTACTROLL_THREADS") {
        let n: usize = s.trim().parse().map_err(|_| anyhow!("CONTACTROLL_THREADS must be a positive integer, got {s:?}"))?;
        if n == 0 {
            bail!("CONTACTROLL_THREADS must be positive");
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    init_pool()?;
    match &cli.cmd {
        Cmd::Report(a) => cmd_report(a),
        Cmd::Identity(a) => cmd_identity(a),
        Cmd::Poly(a) => cmd_poly(a),
        Cmd::Leaf(a) => cmd_leaf(a),
        Cmd::Grid(a) => cmd_grid(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids_parse() {
        assert_eq!(parse_grid("9x9x5").unwrap(), vec![9, 9, 5]);
        assert_eq!(parse_grid("33x33").unwrap(), vec![33, 33]);
        assert!(parse_grid("9").is_err());
        assert!(parse_grid("9x0").is_err());
        assert!(parse_grid("axb").is_err());
    }

    #[test]
    fn points_parse() {
        assert_eq!(parse_floats("0.8,1.1,-0.4", 3, "point").unwrap(), vec![0.8, 1.1, -0.4]);
        assert!(parse_floats("0.8,1.1", 3, "point").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
