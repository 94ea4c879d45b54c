use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use needlets::bench::{bench, format_table, BenchConfig};
use needlets::fastsht::fast_isht;
use needlets::formats::{
    fmt_f64, format_alm, format_beta, format_grid, format_map, format_pairs, read_alm, read_beta,
    read_points, write_bytes, write_text,
};
use needlets::harmonics::{
    aliasing_risk, compute_weights, naive_isht, sht_irregular, WeightScheme,
};
use needlets::healpix::{perturb_grid, HealpixGrid, SphPoint};
use needlets::needlet::{analyze, eval_field, eval_needlet, hard_threshold, make_plan, synthesize};
use needlets::render::{render_map, MapSource, Raster};
use needlets::wendland::{eval_wendland, run_wendland_demo, DemoConfig, WendlandField};
use needlets::{Error, Result, WindowSpec};

#[derive(Parser, Debug)]
#[command(
    name = "needlets",
    version,
    about = "Spherical needlet transforms on HEALPix grids"
)]
struct Cli {
    /// Dilation base of the needlet window
    #[arg(long = "B", global = true, default_value_t = 2.0)]
    b: f64,
    /// Harmonic bandwidth
    #[arg(long, global = true, default_value_t = 16)]
    lmax: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output file (directory for demo-wendland); stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Suppress progress messages
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pixel centers as "k theta phi", or sampled Wendland values as a points file
    Grid(GridArgs),
    /// Window profile rows "xi b(xi)"
    Window(WindowArgs),
    /// Needlet radial profile rows "distance value"
    Psi(PsiArgs),
    /// Harmonic coefficients from scattered samples
    ShtIrr(ShtIrrArgs),
    /// Needlet coefficients from harmonic coefficients
    Analyze(AnalyzeArgs),
    /// Harmonic coefficients from needlet coefficients
    Synth(SynthArgs),
    /// Field values from needlet or harmonic coefficients
    Eval(EvalArgs),
    /// Percentage hard thresholding of needlet levels
    Threshold(ThresholdArgs),
    /// Wendland approximation and thresholding demonstration
    DemoWendland(DemoArgs),
    /// Time the needlet analysis
    Bench(BenchArgs),
    /// Hammer-projected PPM raster of a map file
    Render(RenderArgs),
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = 8)]
    nside: usize,
    /// Jitter amplitude in pixel-size units; 0 keeps the regular grid
    #[arg(long, default_value_t = 0.0)]
    perturb: f64,
    /// Emit "theta phi value" samples of the default Wendland field
    #[arg(long)]
    wendland: bool,
}

#[derive(Args, Debug)]
struct WindowArgs {
    #[arg(long, default_value_t = 0.0)]
    from: f64,
    /// Upper end of the range; defaults to B
    #[arg(long)]
    to: Option<f64>,
    #[arg(long, default_value_t = 513)]
    samples: usize,
}

#[derive(Args, Debug)]
struct PsiArgs {
    #[arg(long)]
    j: usize,
    #[arg(long, default_value_t = 0)]
    k: usize,
    #[arg(long, default_value_t = 513)]
    samples: usize,
    /// Also write a Hammer raster of the needlet to this path
    #[arg(long)]
    raster: Option<PathBuf>,
    #[arg(long, default_value_t = 512)]
    width: usize,
}

#[derive(Args, Debug)]
struct ShtIrrArgs {
    /// Points file with "theta phi value" rows
    #[arg(long)]
    points: PathBuf,
    /// equal, voronoi, or a path to a weights file
    #[arg(long, default_value = "voronoi")]
    weights: String,
    #[arg(long, default_value_t = WeightScheme::DEFAULT_FINE_NSIDE)]
    fine_nside: usize,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[arg(long)]
    alm: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    beta: PathBuf,
}

#[derive(Args, Debug)]
#[command(group(clap::ArgGroup::new("source").required(true).args(["beta", "alm"])))]
#[command(group(clap::ArgGroup::new("at").required(true).args(["points", "nside"])))]
struct EvalArgs {
    #[arg(long)]
    beta: Option<PathBuf>,
    #[arg(long)]
    alm: Option<PathBuf>,
    /// Points file; values, if present, are ignored
    #[arg(long)]
    points: Option<PathBuf>,
    /// Evaluate at the centers of this HEALPix grid
    #[arg(long)]
    nside: Option<usize>,
}

#[derive(Args, Debug)]
struct ThresholdArgs {
    #[arg(long)]
    beta: PathBuf,
    /// Levels to threshold; defaults to the highest nonzero level
    #[arg(long, value_delimiter = ',')]
    levels: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    keep: f64,
}

#[derive(Args, Debug)]
struct DemoArgs {
    #[arg(long, default_value_t = 8)]
    nside: usize,
    #[arg(long, default_value_t = 0.3)]
    amplitude: f64,
    #[arg(long, default_value_t = 0.05)]
    keep: f64,
    #[arg(long)]
    level: Option<usize>,
    #[arg(long, default_value_t = 32)]
    map_nside: usize,
    /// Also write Hammer rasters of the maps at this width
    #[arg(long)]
    raster_width: Option<usize>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
    lmax_list: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    repetitions: usize,
    /// Largest bandwidth at which the naive path is timed
    #[arg(long, default_value_t = 32)]
    naive_limit: usize,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// Map file with "theta phi value" rows
    #[arg(long)]
    map: PathBuf,
    #[arg(long, default_value_t = 512)]
    width: usize,
}

struct Ctx {
    out: Option<PathBuf>,
    quiet: bool,
}

impl Ctx {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => write_text(p, text),
            None => std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| Error::Io {
                    path: "<stdout>".into(),
                    source: e,
                }),
        }
    }

    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn out_path(&self, what: &str) -> Result<&Path> {
        self.out
            .as_deref()
            .ok_or_else(|| Error::InvalidArgument(format!("{what} needs --out")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                e.exit();
            }
            let msg = e.to_string();
            let first = msg
                .lines()
                .next()
                .unwrap_or("")
                .trim_start_matches("error: ");
            eprintln!("error: usage: {first}");
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}: {}", e.kind(), e.to_string().replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        out: cli.out.clone(),
        quiet: cli.quiet,
    };
    match cli.command {
        Command::Grid(a) => grid(&ctx, cli.seed, a),
        Command::Window(a) => window(&ctx, cli.b, a),
        Command::Psi(a) => psi(&ctx, cli.b, cli.lmax, a),
        Command::ShtIrr(a) => sht_irr(&ctx, cli.lmax, a),
        Command::Analyze(a) => {
            let alm = read_alm(&a.alm)?;
            let plan = make_plan(cli.b, cli.lmax)?;
            ctx.note(format!("analyzing on {} levels", plan.levels().len()));
            ctx.emit(&format_beta(&analyze(&alm, &plan)?))
        }
        Command::Synth(a) => ctx.emit(&format_alm(&synthesize(&read_beta(&a.beta)?)?)),
        Command::Eval(a) => eval(&ctx, a),
        Command::Threshold(a) => threshold(&ctx, a),
        Command::DemoWendland(a) => demo(&ctx, cli.b, cli.lmax, cli.seed, a),
        Command::Bench(a) => {
            let rows = bench(&BenchConfig {
                l_max: a.lmax_list,
                b: cli.b,
                repetitions: a.repetitions,
                seed: cli.seed,
                naive_limit: a.naive_limit,
            })?;
            ctx.emit(&format_table(&rows))
        }
        Command::Render(a) => render(&ctx, a),
    }
}

fn grid(ctx: &Ctx, seed: u64, a: GridArgs) -> Result<()> {
    let g = HealpixGrid::new(a.nside)?;
    let points = if a.perturb > 0.0 {
        perturb_grid(&g, a.perturb, seed)?
    } else {
        g.centers()
    };
    if a.wendland {
        let field = WendlandField::default();
        let values: Vec<f64> = points.iter().map(|x| eval_wendland(&field, x)).collect();
        return ctx.emit(&format_map(&points, &values));
    }
    if a.perturb > 0.0 {
        let mut out = String::new();
        for (k, p) in points.iter().enumerate() {
            out.push_str(&format!("{k} {} {}\n", fmt_f64(p.theta), fmt_f64(p.phi)));
        }
        return ctx.emit(&out);
    }
    ctx.emit(&format_grid(&g))
}

fn window(ctx: &Ctx, b: f64, a: WindowArgs) -> Result<()> {
    let spec = WindowSpec::new(b)?;
    let to = a.to.unwrap_or(b);
    if a.samples < 2 || !(to > a.from) || a.from < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need 0 <= from < to and at least 2 samples, got [{}, {to}] with {}",
            a.from, a.samples
        )));
    }
    let rows: Vec<(f64, f64)> = (0..a.samples)
        .map(|i| {
            let xi = a.from + (to - a.from) * i as f64 / (a.samples - 1) as f64;
            (xi, spec.b(xi))
        })
        .collect();
    ctx.emit(&format_pairs(&rows))
}

fn psi(ctx: &Ctx, b: f64, l_max: usize, a: PsiArgs) -> Result<()> {
    let plan = make_plan(b, l_max)?;
    let level = plan.level(a.j)?;
    if a.k >= level.n_pix() {
        return Err(Error::Index {
            index: a.k,
            len: level.n_pix(),
        });
    }
    if a.samples < 2 {
        return Err(Error::InvalidArgument("need at least 2 samples".into()));
    }
    // The radial profile does not depend on k.
    let profile = plan.profile(a.j, false)?;
    let rows: Vec<(f64, f64)> = (0..a.samples)
        .map(|i| {
            let d = PI * i as f64 / (a.samples - 1) as f64;
            (d, profile.at_distance(d))
        })
        .collect();
    if let Some(path) = &a.raster {
        let grid = HealpixGrid::new(64)?;
        let values: Vec<f64> = grid
            .centers()
            .iter()
            .map(|x| eval_needlet(&plan, a.j, a.k, x))
            .collect::<Result<_>>()?;
        render_map(
            &MapSource::Grid {
                grid: &grid,
                values: &values,
            },
            a.width,
            path,
        )?;
        ctx.note(format!("wrote {}", path.display()));
    }
    ctx.emit(&format_pairs(&rows))
}

fn sht_irr(ctx: &Ctx, l_max: usize, a: ShtIrrArgs) -> Result<()> {
    let (points, values) = read_points(&a.points)?;
    let values = values.ok_or_else(|| {
        Error::Validation(format!(
            "{}: points file has no value column",
            a.points.display()
        ))
    })?;
    let scheme = match a.weights.as_str() {
        "equal" => WeightScheme::Equal,
        "voronoi" => WeightScheme::ApproxVoronoi {
            fine_nside: a.fine_nside,
        },
        path => WeightScheme::File(path.into()),
    };
    if aliasing_risk(l_max, points.len()) {
        ctx.note(format!(
            "warning: {} samples are few for l_max={l_max}; coefficients may alias",
            points.len()
        ));
    }
    let weights = compute_weights(&points, &scheme)?;
    ctx.emit(&format_alm(&sht_irregular(
        &points, &values, &weights, l_max,
    )?))
}

fn eval(ctx: &Ctx, a: EvalArgs) -> Result<()> {
    let (points, grid) = match (&a.points, a.nside) {
        (Some(p), _) => (read_points(p)?.0, None),
        (None, Some(n)) => {
            let g = HealpixGrid::new(n)?;
            (g.centers(), Some(g))
        }
        (None, None) => unreachable!("clap requires --points or --nside"),
    };
    let values = match (&a.beta, &a.alm, &grid) {
        // On a grid: synthesize and use the fast transform.
        (Some(b), _, Some(g)) => {
            let alm = synthesize(&read_beta(b)?)?;
            fast_isht(&alm, 0, alm.l_max(), g)?
        }
        // At scattered points: direct needlet sum.
        (Some(b), _, None) => eval_field(&read_beta(b)?, &points)?,
        (None, Some(p), Some(g)) => {
            let alm = read_alm(p)?;
            fast_isht(&alm, 0, alm.l_max(), g)?
        }
        (None, Some(p), None) => {
            let alm = read_alm(p)?;
            naive_isht(&alm, &points, 0, alm.l_max())?
        }
        (None, None, _) => unreachable!("clap requires --beta or --alm"),
    };
    ctx.emit(&format_map(&points, &values))
}

fn threshold(ctx: &Ctx, a: ThresholdArgs) -> Result<()> {
    let beta = read_beta(&a.beta)?;
    let levels = if a.levels.is_empty() {
        let top = (0..beta.levels().len())
            .rev()
            .find(|&j| beta.level(j).iter().any(|&v| v != 0.0))
            .ok_or_else(|| Error::Validation("every needlet level is zero".into()))?;
        vec![top]
    } else {
        a.levels
    };
    ctx.note(format!("thresholding levels {levels:?} keeping {}", a.keep));
    ctx.emit(&format_beta(&hard_threshold(&beta, &levels, a.keep)?))
}

fn demo(ctx: &Ctx, b: f64, l_max: usize, seed: u64, a: DemoArgs) -> Result<()> {
    let out_dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("wendland"));
    let config = DemoConfig {
        b,
        l_max,
        n_side: a.nside,
        amplitude: a.amplitude,
        seed,
        keep_fraction: a.keep,
        threshold_level: a.level,
        map_nside: a.map_nside,
        ..DemoConfig::default()
    };
    let (result, files) = run_wendland_demo(&config, &out_dir)?;
    if let Some(width) = a.raster_width {
        let g = &result.map_grid;
        for (name, values) in [
            ("map_truth.ppm", &result.truth_map),
            ("map_sh.ppm", &result.sh_map),
            ("map_thresholded.ppm", &result.thresholded_map),
        ] {
            render_map(
                &MapSource::Grid { grid: g, values },
                width,
                &out_dir.join(name),
            )?;
        }
        let samples = MapSource::Points {
            points: &result.samples,
            values: &result.sample_values,
        };
        render_map(&samples, width, &out_dir.join("samples.ppm"))?;
    }
    for f in &files {
        ctx.note(format!("wrote {}", f.display()));
    }
    if !ctx.quiet {
        for (k, v) in result.metrics.to_pairs() {
            eprintln!("{k}={v}");
        }
    }
    Ok(())
}

/// Uses grid lookup when the map's points are exactly the centers of a
/// HEALPix grid, nearest sample otherwise.
fn detect_grid(points: &[SphPoint]) -> Option<HealpixGrid> {
    let n_side = ((points.len() / 12) as f64).sqrt().round() as usize;
    if n_side == 0 || 12 * n_side * n_side != points.len() {
        return None;
    }
    let g = HealpixGrid::new(n_side).ok()?;
    g.centers()
        .iter()
        .zip(points)
        .all(|(a, b)| (a.theta - b.theta).abs() < 1e-12 && (a.phi - b.phi).abs() < 1e-12)
        .then_some(g)
}

fn render(ctx: &Ctx, a: RenderArgs) -> Result<()> {
    let out = ctx.out_path("render")?;
    let (points, values) = read_points(&a.map)?;
    let values = values.ok_or_else(|| {
        Error::Validation(format!("{}: map file has no value column", a.map.display()))
    })?;
    let grid = detect_grid(&points);
    let source = match &grid {
        Some(g) => MapSource::Grid {
            grid: g,
            values: &values,
        },
        None => MapSource::Points {
            points: &points,
            values: &values,
        },
    };
    let raster = Raster::sample(&source, a.width, PI)?;
    write_bytes(out, &raster.to_ppm())?;
    ctx.note(format!(
        "wrote {} ({}x{})",
        out.display(),
        raster.width,
        raster.height
    ));
    Ok(())
}
