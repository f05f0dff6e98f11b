mod report;
mod validate;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use conformal::geometry::{gallery, gallery_names, GalleryParams};
use conformal::mesh::DEFAULT_RATIO;
use conformal::tracer::{
    canonical_grid, uniform_levels, write_csv, write_svg, Status, TraceOptions,
};
use conformal::{build_map, build_ring_map, ConformalMap, Error, Problem, SolveOptions};

use report::RunReport;

#[derive(Parser)]
#[command(
    name = "conformal",
    version,
    about = "Conformal maps of quadrilaterals and ring domains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute M(Q), M(Q~) and rec(Q), or M(R) and cap R for a ring.
    Modulus(SolveArgs),
    /// Build the map and write it as a JSON bundle.
    Map {
        #[command(flatten)]
        solve: SolveArgs,
        /// Bundle path; rings also get `<stem>.cut.csv`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Trace the pre-image of a rectangular (or polar) grid to CSV and SVG.
    Grid(GridArgs),
    /// Run the built-in regression suite.
    Validate(ValidateArgs),
    /// Write a problem definition file.
    Export {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List the gallery entries.
    Gallery,
}

#[derive(Args, Clone)]
struct SourceArgs {
    /// Gallery entry name.
    #[arg(long, conflicts_with = "file")]
    gallery: Option<String>,
    /// Problem definition JSON.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Gallery parameter as `name=value`; repeatable.
    #[arg(long = "param", value_parser = parse_param)]
    params: Vec<(String, f64)>,
    #[arg(long)]
    h: Option<f64>,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    #[arg(long)]
    c: Option<f64>,
    #[arg(long)]
    n: Option<f64>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    x0: Option<f64>,
}

#[derive(Args, Clone)]
struct SolveArgs {
    #[command(flatten)]
    source: SourceArgs,
    /// Polynomial order.
    #[arg(long, default_value_t = 8)]
    p: usize,
    /// Refinement levels at marked corners (default: p).
    #[arg(long)]
    levels: Option<usize>,
    /// Geometric grading ratio.
    #[arg(long, default_value_t = DEFAULT_RATIO)]
    ratio: f64,
}

#[derive(Args)]
struct GridArgs {
    /// Map bundle written by `map`; otherwise the problem is solved inline.
    #[arg(long, conflicts_with_all = ["gallery", "file"])]
    bundle: Option<PathBuf>,
    #[command(flatten)]
    solve: SolveArgs,
    /// Number of equally spaced u1 levels.
    #[arg(long, default_value_t = 9)]
    nu: usize,
    /// Number of equally spaced u2 levels.
    #[arg(long, default_value_t = 9)]
    nv: usize,
    /// Explicit u1 levels, comma separated; overrides --nu.
    #[arg(long, value_delimiter = ',')]
    levels_u: Option<Vec<f64>>,
    /// Explicit u2 levels, comma separated; overrides --nv.
    #[arg(long, value_delimiter = ',')]
    levels_v: Option<Vec<f64>>,
    /// Predictor step (default: 0.02 × bounding-box diagonal).
    #[arg(long)]
    sigma: Option<f64>,
    /// Level residual accepted by the corrector.
    #[arg(long)]
    eps: Option<f64>,
    /// Output prefix for `<prefix>.csv` and `<prefix>.svg`.
    #[arg(long, default_value = "grid")]
    out: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long, default_value_t = 12)]
    p: usize,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_RATIO)]
    ratio: f64,
    /// Run only these groups, comma separated (see `--list`).
    #[arg(long, value_delimiter = ',')]
    only: Vec<String>,
    /// Print the group names and exit.
    #[arg(long)]
    list: bool,
    /// Also write the rows as JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

fn parse_param(s: &str) -> Result<(String, f64), String> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let v: f64 = v.trim().parse().map_err(|e| format!("`{v}`: {e}"))?;
    Ok((k.trim().to_string(), v))
}

/// A failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn problem(e: impl std::fmt::Display) -> Self {
        Self {
            code: 2,
            message: e.to_string(),
        }
    }

    fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        Self {
            code: 1,
            message: format!("{}: {e}", path.display()),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Singular(_)
            | Error::Dimension { .. }
            | Error::Outside(..)
            | Error::CriticalPoint { .. } => 3,
            _ => 2,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CmdResult<T> = std::result::Result<T, Failure>;

impl SourceArgs {
    fn params(&self) -> BTreeMap<String, f64> {
        let mut out: BTreeMap<String, f64> = self.params.iter().cloned().collect();
        for (k, v) in [
            ("h", self.h),
            ("r", self.r),
            ("a", self.a),
            ("b", self.b),
            ("c", self.c),
            ("n", self.n),
            ("t", self.t),
            ("x0", self.x0),
        ] {
            if let Some(v) = v {
                out.insert(k.into(), v);
            }
        }
        out
    }

    fn load(&self) -> CmdResult<(Problem, &'static str)> {
        let params = self.params();
        match (&self.gallery, &self.file) {
            (Some(name), _) => Ok((gallery(name, &GalleryParams(params))?, "gallery")),
            (None, Some(path)) => {
                if !params.is_empty() {
                    return Err(Failure::problem("gallery parameters need --gallery"));
                }
                let text = fs::read_to_string(path)
                    .map_err(|e| Failure::problem(format!("{}: {e}", path.display())))?;
                Ok((Problem::from_json(&text)?, "file"))
            }
            (None, None) => Err(Failure::problem("one of --gallery or --file is required")),
        }
    }
}

impl SolveArgs {
    fn options(&self) -> SolveOptions {
        SolveOptions {
            p: self.p,
            levels: self.levels,
            ratio: self.ratio,
        }
    }

    fn solve(&self, command: &str) -> CmdResult<(ConformalMap, RunReport)> {
        let start = Instant::now();
        let (problem, source) = self.source.load()?;
        let opts = self.options();
        let map = match &problem {
            Problem::Quadrilateral(q) => build_map(q, &opts)?,
            Problem::Ring(r) => build_ring_map(r, &opts)?,
        };
        let report = RunReport::new(
            command,
            source,
            self.source.params(),
            &map,
            start.elapsed().as_secs_f64(),
        );
        Ok((map, report))
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> CmdResult<()> {
    fs::write(path, bytes).map_err(|e| Failure::io(path, e))
}

fn print_json<T: serde::Serialize>(value: &T) -> CmdResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    println!("{text}");
    Ok(())
}

fn cmd_modulus(args: &SolveArgs) -> CmdResult<()> {
    let (_, report) = args.solve("modulus")?;
    print_json(&report)
}

fn cmd_map(args: &SolveArgs, out: &Path) -> CmdResult<()> {
    let (map, mut report) = args.solve("map")?;
    write_file(out, map.to_json()?.as_bytes())?;
    report.outputs.push(out.display().to_string());
    if let Some(cut) = map.cut_polyline() {
        let path = out.with_extension("cut.csv");
        let mut text = String::from("x,y\n");
        for z in cut {
            text.push_str(&format!("{},{}\n", z.re, z.im));
        }
        write_file(&path, text.as_bytes())?;
        report.outputs.push(path.display().to_string());
    }
    print_json(&report)
}

fn cmd_grid(args: &GridArgs) -> CmdResult<()> {
    let start = Instant::now();
    let (map, mut report) = match &args.bundle {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::problem(format!("{}: {e}", path.display())))?;
            let map = ConformalMap::from_json(&text)?;
            let report = RunReport::new("grid", "bundle", BTreeMap::new(), &map, 0.0);
            (map, report)
        }
        None => args.solve.solve("grid")?,
    };
    let mut opts = TraceOptions::for_map(&map);
    if let Some(s) = args.sigma {
        opts.sigma = s;
    }
    if let Some(e) = args.eps {
        opts.eps = e;
    }
    if !(opts.sigma > 0.0 && opts.eps > 0.0) {
        return Err(Failure::problem("--sigma and --eps must be positive"));
    }
    let levels_u = args
        .levels_u
        .clone()
        .unwrap_or_else(|| uniform_levels(args.nu));
    let levels_v = args
        .levels_v
        .clone()
        .unwrap_or_else(|| uniform_levels(args.nv));
    if let Some(bad) = levels_u
        .iter()
        .chain(&levels_v)
        .find(|&&c| !(0.0..=1.0).contains(&c))
    {
        return Err(Failure::problem(format!("level {bad} outside [0, 1]")));
    }
    let contours = canonical_grid(&map, &levels_u, &levels_v, &opts);
    for c in contours.iter().filter(|c| c.status == Status::Stalled) {
        report.warnings.push(format!(
            "{} = {} stalled after {} points",
            c.family.name(),
            c.level,
            c.points.len()
        ));
    }

    let csv = args.out.with_extension("csv");
    let svg = args.out.with_extension("svg");
    let mut buf = Vec::new();
    write_csv(&contours, &mut buf)?;
    write_file(&csv, &buf)?;
    buf.clear();
    write_svg(&map.boundary_chains(), &contours, &mut buf)?;
    write_file(&svg, &buf)?;
    report.outputs.push(csv.display().to_string());
    report.outputs.push(svg.display().to_string());
    report.timings.total += start.elapsed().as_secs_f64();
    print_json(&report)?;
    if !contours.is_empty() && contours.iter().all(|c| c.status == Status::Stalled) {
        return Err(Failure {
            code: 3,
            message: "every contour stalled".into(),
        });
    }
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> CmdResult<()> {
    let groups = validate::groups();
    if args.list {
        for g in groups {
            println!("{g}");
        }
        return Ok(());
    }
    if let Some(bad) = args.only.iter().find(|o| !groups.contains(&o.as_str())) {
        return Err(Failure::problem(format!(
            "unknown validation group `{bad}`"
        )));
    }
    let opts = SolveOptions {
        p: args.p,
        levels: args.levels,
        ratio: args.ratio,
    };
    let rows = validate::run(&opts, &args.only, &validate::Gates::default(), |case| {
        eprintln!("solving {case}")
    })?;
    validate::print_table(&rows, std::io::stdout().lock()).map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })?;
    if let Some(path) = &args.json {
        let text = serde_json::to_string_pretty(&rows).map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })?;
        write_file(path, text.as_bytes())?;
    }
    if rows.iter().any(|r| !r.pass) {
        return Err(Failure {
            code: 1,
            message: "validation failed".into(),
        });
    }
    Ok(())
}

fn cmd_export(source: &SourceArgs, out: Option<&Path>) -> CmdResult<()> {
    let (problem, _) = source.load()?;
    let text = problem.to_json()?;
    match out {
        Some(path) => write_file(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            writeln!(stdout, "{text}").map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Modulus(args) => cmd_modulus(args),
        Command::Map { solve, out } => cmd_map(solve, out),
        Command::Grid(args) => cmd_grid(args),
        Command::Validate(args) => cmd_validate(args),
        Command::Export { source, out } => cmd_export(source, out.as_deref()),
        Command::Gallery => {
            for name in gallery_names() {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
