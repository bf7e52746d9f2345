//! `fluxband`: band structures and spectral bounds for magnetic Schrödinger
//! operators on periodic graphs.
//!
//! Exit status: 0 on success, 2 for invalid input (unreadable spec, failed
//! validation, bad parameters), 3 when a checked bound is violated, 1 for
//! any other failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use fluxband::bounds::{self, BoundReport, Extremum};
use fluxband::io::{self, fmt_real, PlotKind};
use fluxband::library;
use fluxband::spectrum::{self, TorusGrid};
use fluxband::topology;
use fluxband::{Error, FluxData, FundamentalGraph};

#[derive(Parser)]
#[command(name = "fluxband", version, about = "Band structures and spectral bounds for magnetic Laplacians on periodic graphs")]
struct Cli {
    /// Grid points per torus dimension (odd, at least 3).
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Output format.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Write the main output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write a gnuplot script next to --out (CSV output only).
    #[arg(long, global = true)]
    gnuplot: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Sizes, spanning tree, cotree, fluxes and the modified 1-form.
    Info { spec: PathBuf },
    /// Eigenvalues on the torus grid, or along a path of waypoints.
    Bands {
        spec: PathBuf,
        /// Comma-separated waypoints: G, X, Y, Z, M or colon-separated
        /// coordinates such as pi/2:0.
        #[arg(long)]
        path: Option<String>,
        /// Samples per path segment.
        #[arg(long, default_value_t = 32)]
        samples: usize,
    },
    /// Bands, flat bands, gaps and the measure of the spectrum.
    Spectrum {
        spec: PathBuf,
        /// Polish band edges with a local quadratic fit.
        #[arg(long)]
        refine: bool,
    },
    /// Band-length and gap bounds.
    Verify { spec: PathBuf },
    /// Magnetic perturbation bounds between the 1-forms of two specs of the same graph.
    Perturb { spec: PathBuf, other: PathBuf },
    /// Effective form of a band at its grid extremum.
    EffectiveMass {
        spec: PathBuf,
        /// Band number, starting at 1.
        #[arg(long)]
        band: usize,
        /// Use the band maximum instead of the minimum.
        #[arg(long)]
        max: bool,
    },
    /// Minimal flux reduction: θ0, the reduced 1-form and the remaining fluxes.
    Reduce { spec: PathBuf },
    /// Write the graph spec of a built-in family.
    New {
        /// square, harper, hexagonal, star, figure1 or figure2.
        family: String,
        /// Integer parameters: square D | harper P Q | star D NU.
        #[arg(allow_negative_numbers = true)]
        params: Vec<i64>,
    },
    /// Spectra of the Harper model for all fluxes p/q with q ≤ qmax.
    Butterfly {
        #[arg(long)]
        qmax: i64,
    },
}

enum Failure {
    Input(String),
    Violated(String),
    Other(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let input = e.is_validation()
            || matches!(
                e,
                Error::Parse { .. }
                    | Error::BadParameter(_)
                    | Error::BadFraction { .. }
                    | Error::BadGrid(_)
                    | Error::BadBand { .. }
                    | Error::GraphMismatch(_)
            );
        if input {
            Failure::Input(e.to_string())
        } else {
            Failure::Other(e.to_string())
        }
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Input(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Violated(m)) => {
            eprintln!("bound violated: {m}");
            ExitCode::from(3)
        }
        Err(Failure::Other(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn load(path: &Path) -> CliResult<FundamentalGraph> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    io::parse_spec(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn grid_for(cli: &Cli, dimension: usize) -> CliResult<TorusGrid> {
    match cli.grid {
        Some(n) => Ok(TorusGrid::new(dimension, n)?),
        None => {
            if dimension >= 3 {
                eprintln!("note: using the coarse default grid N=9 for d={dimension}; pass --grid to refine");
            }
            Ok(TorusGrid::default_for(dimension))
        }
    }
}

/// Writes `text` to --out or stdout, plus a gnuplot script when requested.
fn emit(cli: &Cli, text: &str, plot: Option<PlotKind>) -> CliResult<()> {
    match &cli.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::Other(format!("cannot write {}: {e}", path.display())))?;
            if cli.gnuplot {
                let kind = plot.ok_or_else(|| Failure::Input("--gnuplot needs CSV output".into()))?;
                let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("data.csv");
                let script = path.with_extension("gp");
                fs::write(&script, io::gnuplot_script(name, kind))
                    .map_err(|e| Failure::Other(format!("cannot write {}: {e}", script.display())))?;
            }
        }
        None => {
            if cli.gnuplot {
                return Err(Failure::Input("--gnuplot needs --out".into()));
            }
            print!("{text}");
        }
    }
    Ok(())
}

fn pretty(value: &Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("JSON serializes");
    s.push('\n');
    s
}

fn format_or(cli: &Cli, default: Format, allowed: &[Format]) -> CliResult<Format> {
    let f = cli.format.unwrap_or(default);
    if allowed.contains(&f) {
        Ok(f)
    } else {
        Err(Failure::Input(format!("format {f:?} is not available for this command").to_lowercase()))
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    match &cli.command {
        Command::Info { spec } => info(cli, &load(spec)?),
        Command::Bands { spec, path, samples } => bands(cli, &load(spec)?, path.as_deref(), *samples),
        Command::Spectrum { spec, refine } => spectrum_cmd(cli, &load(spec)?, *refine),
        Command::Verify { spec } => verify(cli, &load(spec)?),
        Command::Perturb { spec, other } => perturb(cli, &load(spec)?, &load(other)?),
        Command::EffectiveMass { spec, band, max } => effective_mass(cli, &load(spec)?, *band, *max),
        Command::Reduce { spec } => reduce(cli, &load(spec)?),
        Command::New { family, params } => {
            let named = library::by_name(family, params)?;
            emit(cli, &io::to_spec_string(&named.graph), None)
        }
        Command::Butterfly { qmax } => butterfly(cli, *qmax),
    }
}

fn edge_label(graph: &FundamentalGraph, e: usize) -> String {
    let edge = graph.edge(e);
    format!(
        "{} -> {} {:?}",
        graph.vertices()[edge.tail].name,
        graph.vertices()[edge.head].name,
        edge.index
    )
}

fn info(cli: &Cli, graph: &FundamentalGraph) -> CliResult<()> {
    let fd = FluxData::new(graph, &graph.alpha());
    let tree = &fd.tree().tree_edges;
    match format_or(cli, Format::Text, &[Format::Text, Format::Json])? {
        Format::Json => {
            let value = json!({
                "dimension": graph.dimension(),
                "nu": graph.vertex_count(),
                "edges": graph.edge_count(),
                "beta": fd.betti(),
                "kappa_plus": graph.kappa_plus(),
                "tree_edges": tree,
                "cotree_edges": fd.cotree(),
                "fluxes": io::flux_table(graph, &fd),
                "alpha_star": fd.alpha_star().values(),
            });
            emit(cli, &pretty(&value), None)
        }
        _ => {
            let mut s = String::new();
            let _ = writeln!(s, "dimension   {}", graph.dimension());
            let _ = writeln!(s, "vertices    {}", graph.vertex_count());
            let _ = writeln!(s, "edges       {}", graph.edge_count());
            let _ = writeln!(s, "beta        {}", fd.betti());
            let _ = writeln!(s, "kappa_plus  {}", graph.kappa_plus());
            let _ = writeln!(s, "tree edges");
            for &e in tree {
                let _ = writeln!(s, "  e{e}: {}", edge_label(graph, e));
            }
            let _ = writeln!(s, "cotree edges (flux, cycle index)");
            for (&e, flux) in fd.cotree().iter().zip(fd.fluxes()) {
                let _ = writeln!(s, "  e{e}: {}  flux={flux}  cycle={:?}", edge_label(graph, e), fd.basis().index(e));
            }
            let _ = writeln!(s, "alpha_*");
            for (e, a) in fd.alpha_star().values().iter().enumerate() {
                let _ = writeln!(s, "  e{e}: {a}");
            }
            emit(cli, &s, None)
        }
    }
}

fn waypoint(label: &str, d: usize) -> CliResult<Vec<f64>> {
    let pi = std::f64::consts::PI;
    let axis = |j: usize| -> CliResult<Vec<f64>> {
        if j >= d {
            return Err(Failure::Input(format!("waypoint {label} needs dimension > {j}")));
        }
        let mut v = vec![0.0; d];
        v[j] = pi;
        Ok(v)
    };
    match label {
        "G" | "Γ" | "Gamma" => Ok(vec![0.0; d]),
        "X" => axis(0),
        "Y" => axis(1),
        "Z" => axis(2),
        "M" | "R" => Ok(vec![pi; d]),
        coords => {
            let values: Vec<f64> = coords
                .split(':')
                .map(io::parse_real)
                .collect::<Result<_, _>>()
                .map_err(Failure::Input)?;
            if values.len() != d {
                return Err(Failure::Input(format!("waypoint {coords} needs {d} coordinates")));
            }
            Ok(values)
        }
    }
}

fn bands(cli: &Cli, graph: &FundamentalGraph, path: Option<&str>, samples: usize) -> CliResult<()> {
    let d = graph.dimension();
    let nu = graph.vertex_count();
    let format = format_or(cli, Format::Csv, &[Format::Csv, Format::Json])?;
    if let Some(path) = path {
        let waypoints = path
            .split(',')
            .map(|w| waypoint(w.trim(), d))
            .collect::<CliResult<Vec<_>>>()?;
        let band_path = spectrum::band_path(graph, &graph.alpha(), &waypoints, samples)?;
        return match format {
            Format::Json => emit(cli, &pretty(&json!(band_path)), None),
            _ => emit(cli, &io::path_csv(&band_path), Some(PlotKind::Path { dimension: d, nu })),
        };
    }
    let grid = grid_for(cli, d)?;
    let fd = FluxData::new(graph, &graph.alpha());
    let bs = spectrum::sweep_flux(graph, &fd, &grid, true)?;
    match format {
        Format::Json => emit(cli, &pretty(&io::band_json(graph, &fd, &bs)), None),
        _ => emit(cli, &io::band_csv(&bs), Some(PlotKind::Grid { dimension: d, nu })),
    }
}

fn spectrum_cmd(cli: &Cli, graph: &FundamentalGraph, refine: bool) -> CliResult<()> {
    let grid = grid_for(cli, graph.dimension())?;
    let fd = FluxData::new(graph, &graph.alpha());
    let mut bs = spectrum::sweep_flux(graph, &fd, &grid, true)?;
    if refine {
        let bands = spectrum::refine_band_edges(graph, &graph.alpha(), &bs)?;
        let flat: Vec<bool> = bs.bands.iter().map(|b| b.width() <= spectrum::DEFAULT_FLAT_TOL * (1.0 + b.lower.abs())).collect();
        let (measure, gaps) = spectrum::measure_and_gaps(&bands, &flat);
        bs.bands = bands;
        bs.measure = measure;
        bs.gaps = gaps;
    }
    match format_or(cli, Format::Text, &[Format::Text, Format::Json])? {
        Format::Json => {
            let mut value = io::band_json(graph, &fd, &bs);
            value.as_object_mut().expect("object").remove("points");
            emit(cli, &pretty(&value), None)
        }
        _ => {
            let mut s = String::new();
            let _ = writeln!(s, "grid        N={} per dimension", grid.points_per_dim());
            let _ = writeln!(s, "beta        {}", fd.betti());
            let _ = writeln!(s, "bands");
            for (n, b) in bs.bands.iter().enumerate() {
                let _ = writeln!(s, "  {:>3}  [{}, {}]", n + 1, fmt_real(b.lower), fmt_real(b.upper));
            }
            let _ = writeln!(s, "flat bands");
            for f in &bs.flat_bands {
                let _ = writeln!(
                    s,
                    "  {}  multiplicity {}{}",
                    fmt_real(f.value),
                    f.multiplicity,
                    if f.in_gap { "  (inside a gap)" } else { "" }
                );
            }
            let _ = writeln!(s, "gaps");
            for g in &bs.gaps {
                let _ = writeln!(
                    s,
                    "  ({}, {})  length {}",
                    fmt_real(g.lower),
                    fmt_real(g.upper),
                    fmt_real(g.length())
                );
            }
            let _ = writeln!(s, "measure     {}", fmt_real(bs.measure));
            let _ = writeln!(s, "total band length {}", fmt_real(bs.total_band_length()));
            emit(cli, &s, None)
        }
    }
}

fn emit_reports(cli: &Cli, reports: &[BoundReport], extra: Option<(&str, Value)>, text_header: &str) -> CliResult<()> {
    match format_or(cli, Format::Text, &[Format::Text, Format::Json])? {
        Format::Json => {
            let mut value = io::reports_json(reports);
            if let Some((key, data)) = extra {
                value.as_object_mut().expect("object").insert(key.into(), data);
            }
            emit(cli, &pretty(&value), None)?;
        }
        _ => emit(cli, &format!("{text_header}{}", io::reports_table(reports)), None)?,
    }
    let violated: Vec<&str> = reports.iter().filter(|r| !r.satisfied).map(|r| r.name.as_str()).collect();
    if violated.is_empty() {
        Ok(())
    } else {
        Err(Failure::Violated(violated.join("; ")))
    }
}

fn verify(cli: &Cli, graph: &FundamentalGraph) -> CliResult<()> {
    let grid = grid_for(cli, graph.dimension())?;
    let reports = bounds::verify(graph, &grid)?;
    emit_reports(cli, &reports, None, "")
}

fn perturb(cli: &Cli, graph: &FundamentalGraph, other: &FundamentalGraph) -> CliResult<()> {
    if !graph.same_structure(other) {
        return Err(Failure::Input("the two specs describe different graphs".into()));
    }
    let grid = grid_for(cli, graph.dimension())?;
    let (data, reports) = bounds::perturbation_bounds(graph, &graph.alpha(), &other.alpha(), &grid)?;
    let header = format!(
        "Lambda_1 = {}\nLambda_nu = {}\nC = {}\n",
        data.lambda_1, data.lambda_nu, data.c
    );
    emit_reports(cli, &reports, Some(("perturbation", json!(data))), &header)
}

fn effective_mass(cli: &Cli, graph: &FundamentalGraph, band: usize, max: bool) -> CliResult<()> {
    if band == 0 {
        return Err(Failure::Input("bands are numbered from 1".into()));
    }
    let grid = grid_for(cli, graph.dimension())?;
    let extremum = if max { Extremum::Max } else { Extremum::Min };
    let (form, report) = bounds::effective_form(graph, &graph.alpha(), band - 1, extremum, &grid)?;
    let header = format!(
        "band {band} {} at theta0 = {:?} (value {})\nhessian = {:?}\nrho = {}\nT1 = {}\nT2 = {}\n",
        if max { "maximum" } else { "minimum" },
        form.theta0,
        fmt_real(form.value),
        form.hessian,
        form.rho,
        form.t1,
        form.t2
    );
    emit_reports(cli, &[report], Some(("effective_form", json!(form))), &header)
}

fn reduce(cli: &Cli, graph: &FundamentalGraph) -> CliResult<()> {
    let fd = FluxData::new(graph, &graph.alpha());
    let reduction = topology::minimal_reduction(&fd, graph.dimension())?;
    let remaining: Vec<Value> = reduction
        .reduced_cotree
        .iter()
        .map(|&e| json!({"edge": e, "alpha_tilde": reduction.alpha_tilde.value(e)}))
        .collect();
    match format_or(cli, Format::Text, &[Format::Text, Format::Json])? {
        Format::Json => {
            let value = json!({
                "theta0": reduction.theta0,
                "independent_edges": reduction.independent_edges,
                "reduced_flux_count": reduction.reduced_cotree.len(),
                "reduced_fluxes": remaining,
                "alpha_tilde": reduction.alpha_tilde.values(),
            });
            emit(cli, &pretty(&value), None)
        }
        _ => {
            let mut s = String::new();
            let _ = writeln!(s, "theta0              {:?}", reduction.theta0);
            let _ = writeln!(s, "independent edges   {:?}", reduction.independent_edges);
            let _ = writeln!(s, "reduced flux count  {} (beta - d)", reduction.reduced_cotree.len());
            for &e in &reduction.reduced_cotree {
                let _ = writeln!(s, "  e{e}: {}  alpha_tilde={}", edge_label(graph, e), reduction.alpha_tilde.value(e));
            }
            emit(cli, &s, None)
        }
    }
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

fn butterfly(cli: &Cli, qmax: i64) -> CliResult<()> {
    if qmax < 1 {
        return Err(Failure::Input("--qmax must be at least 1".into()));
    }
    let grid = TorusGrid::new(2, cli.grid.unwrap_or(5))?;
    let format = format_or(cli, Format::Csv, &[Format::Csv, Format::Json])?;
    let mut csv = String::from("p,q,flux,lambda\n");
    let mut columns = Vec::new();
    for q in 1..=qmax {
        for p in 0..=q {
            if gcd(p, q) != 1 {
                continue;
            }
            let graph = library::harper(p, q)?.graph;
            let bs = spectrum::sweep(&graph, &graph.alpha(), &grid)?;
            let mut values: Vec<f64> = bs.values.iter().flatten().copied().collect();
            values.sort_by(f64::total_cmp);
            values.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
            let flux = p as f64 / q as f64;
            for v in &values {
                let _ = writeln!(csv, "{p},{q},{flux},{}", fmt_real(*v));
            }
            columns.push(json!({"p": p, "q": q, "flux": flux, "bottom": bs.bottom(), "top": bs.top(), "lambda": values}));
        }
    }
    match format {
        Format::Json => emit(cli, &pretty(&json!(columns)), None),
        _ => emit(cli, &csv, Some(PlotKind::Butterfly)),
    }
}
