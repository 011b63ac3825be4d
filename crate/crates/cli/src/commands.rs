//! Argument parsing, configuration overrides, and the six subcommands.
//!
//! Every command follows the same output discipline: numeric results land in
//! CSV first, figures are rendered afterwards from those CSV files alone
//! (never from in-memory state), and re-running a command with the same
//! inputs reproduces every CSV byte for byte.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use num_complex::Complex;
use quadvol::carr_lee::{exp_claim_price, immunized_initial_value, Sign};
use quadvol::heston::{qv_density, true_value, HestonParams, MarketState};
use quadvol::mc::{evolve_portfolios, hedge_experiment, simulate_path, HedgeRun, SimConfig};
use quadvol::payoffs::{eval_payoff, PayoffSpec};
use quadvol::stats::{
    format_hedge_table, hedge_table_csv, histogram_in_range, sample_range, summarize, Convention,
    ErrorSummary, StrategyStats,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, PayoffConfig};
use crate::svg;

/// Pricing and correlation-immunized replication of claims on realized
/// quadratic variation under Heston dynamics.
#[derive(Debug, Parser)]
#[command(name = "quadvol", version, about)]
pub struct Cli {
    /// JSON experiment configuration; omitted fields (or the whole flag)
    /// fall back to the standard experiment.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Base seed override.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory for CSV/JSON/SVG artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Quick mode: dt = 1/250 and 2000 paths. Documented tolerances on the
    /// simulation examples are meant to be read three times wider.
    #[arg(long, global = true)]
    pub quick: bool,
    /// Payoff override: a preset name (exp_pos, exp_neg, put, volswap) or a
    /// path to a payoff wire-format JSON file.
    #[arg(long, global = true, value_name = "NAME|FILE")]
    pub payoff: Option<String>,
    /// Correlation grid override, comma separated (e.g. --rho=-0.66,0,0.66).
    #[arg(
        long,
        global = true,
        value_delimiter = ',',
        allow_negative_numbers = true,
        value_name = "RHO,..."
    )]
    pub rho: Option<Vec<f64>>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form strategy prices over a fine correlation grid.
    SweepRho {
        /// Number of grid points on [-1, 1].
        #[arg(long, default_value_t = 81)]
        points: usize,
    },
    /// Follow one simulated path per configured correlation and track the
    /// strategy portfolios along it.
    Paths {
        /// Which path of the batch to follow.
        #[arg(long, default_value_t = 0)]
        path_id: usize,
    },
    /// Hedging-error table over the correlation grid.
    Table,
    /// Histograms of terminal hedging errors, one figure per correlation.
    Hist {
        /// Number of bins, shared by the three strategies.
        #[arg(long, default_value_t = 40)]
        bins: usize,
    },
    /// Exact put/volswap payoff against its exponential approximation,
    /// overlaid on the quadratic-variation density.
    PayoffPlot,
    /// Quadratic-variation density on [0, grid-max].
    Density {
        /// Upper edge of the density grid.
        #[arg(long, default_value_t = 0.2)]
        grid_max: f64,
        /// Number of grid points.
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
}

const PRESET_NAMES: [&str; 4] = ["exp_pos", "exp_neg", "put", "volswap"];

/// Fully resolved run context: configuration after flag overrides, plus the
/// payoff, parameter set, and simulation scale derived from it.
#[derive(Debug)]
pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub payoff: PayoffSpec<f64>,
    pub params: HestonParams<f64>,
    pub sim: SimConfig,
    pub out: PathBuf,
}

fn build_ctx(cli: &Cli) -> anyhow::Result<Ctx> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(name) = &cli.payoff {
        // A known preset name stays a preset; anything that looks like a
        // path is a wire-format file; the rest resolves (and fails) as a
        // preset so typos report the valid names.
        cfg.payoff = if !PRESET_NAMES.contains(&name.as_str())
            && (name.ends_with(".json") || Path::new(name).exists())
        {
            PayoffConfig::File {
                file: PathBuf::from(name),
            }
        } else {
            PayoffConfig::Preset(name.clone())
        };
    }
    if let Some(seed) = cli.seed {
        cfg.sim.seed = seed;
    }
    if let Some(rhos) = &cli.rho {
        cfg.rho_grid = rhos.clone();
    }
    if let Some(dir) = &cli.out {
        cfg.outputs.dir = dir.clone();
    }
    if cli.quick {
        cfg.sim.dt = 1.0 / 250.0;
        cfg.sim.n_paths = 2000;
    }
    cfg.validate()?;
    let payoff = cfg.payoff.resolve()?;
    let params = cfg.model.params()?;
    let sim = cfg.sim.sim_config();
    let out = cfg.outputs.dir.clone();
    fs::create_dir_all(&out)
        .with_context(|| format!("creating output directory {}", out.display()))?;
    Ok(Ctx {
        cfg,
        payoff,
        params,
        sim,
        out,
    })
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let ctx = build_ctx(&cli)?;
    match cli.command {
        Command::SweepRho { points } => cmd_sweep_rho(&ctx, points),
        Command::Paths { path_id } => cmd_paths(&ctx, path_id),
        Command::Table => cmd_table(&ctx),
        Command::Hist { bins } => cmd_hist(&ctx, bins),
        Command::PayoffPlot => cmd_payoff_plot(&ctx),
        Command::Density { grid_max, points } => cmd_density(&ctx, grid_max, points),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing

fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))?;
    println!("wrote {}", path.display());
    Ok(())
}

fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> anyhow::Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        if row.len() != header.len() {
            bail!("CSV row width {} does not match header {}", row.len(), header.len());
        }
        w.write_record(&row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| anyhow::anyhow!("finishing CSV buffer: {e}"))?;
    write_file(path, &bytes)
}

/// Numeric CSV contents, read back for plotting. Figures are built from
/// these parsed files only, so anything a figure shows is re-derivable from
/// the shipped data.
struct CsvData {
    header: Vec<String>,
    rows: Vec<Vec<f64>>,
}

impl CsvData {
    fn read(path: &Path) -> anyhow::Result<Self> {
        let mut rdr = csv::Reader::from_path(path)
            .with_context(|| format!("reading {}", path.display()))?;
        let header = rdr.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row: Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
            rows.push(row.with_context(|| format!("non-numeric cell in {}", path.display()))?);
        }
        Ok(Self { header, rows })
    }

    fn column_index(&self, name: &str) -> anyhow::Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .with_context(|| format!("CSV column {name} missing"))
    }

    fn series(&self, x: &str, y: &str, label: &str) -> anyhow::Result<svg::Series> {
        let (xi, yi) = (self.column_index(x)?, self.column_index(y)?);
        Ok(svg::Series::new(
            label,
            self.rows.iter().map(|r| (r[xi], r[yi])).collect(),
        ))
    }

    /// Splits the rows into maximal consecutive runs with equal values in
    /// the named column (used to separate per-correlation blocks).
    fn runs_by(&self, name: &str) -> anyhow::Result<Vec<(f64, CsvData)>> {
        let idx = self.column_index(name)?;
        let mut out: Vec<(f64, CsvData)> = Vec::new();
        for row in &self.rows {
            match out.last_mut() {
                Some((key, block)) if *key == row[idx] => block.rows.push(row.clone()),
                _ => out.push((
                    row[idx],
                    CsvData {
                        header: self.header.clone(),
                        rows: vec![row.clone()],
                    },
                )),
            }
        }
        Ok(out)
    }
}

/// Value of the sign-fixed strategy portfolio for the whole payoff.
fn leg_value(
    p: &HestonParams<f64>,
    state: &MarketState<f64>,
    payoff: &PayoffSpec<f64>,
    sign: Sign,
) -> quadvol::Result<Complex<f64>> {
    let mut acc = Complex::new(0.0, 0.0);
    for term in payoff.terms() {
        acc += term.a * exp_claim_price(p, state, term.s, sign)?;
    }
    Ok(acc)
}

fn sanitize_label(label: &str) -> String {
    let cleaned: String = label
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    if cleaned.is_empty() {
        "payoff".to_string()
    } else {
        cleaned
    }
}

fn complex_cells(z: Complex<f64>) -> [String; 2] {
    [z.re.to_string(), z.im.to_string()]
}

// ---------------------------------------------------------------------------
// sweep-rho

fn sweep_grid(points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            if i == points - 1 {
                1.0
            } else {
                -1.0 + 2.0 * i as f64 / (points - 1) as f64
            }
        })
        .collect()
}

fn cmd_sweep_rho(ctx: &Ctx, points: usize) -> anyhow::Result<()> {
    if points < 2 {
        bail!("sweep-rho: need at least 2 grid points, got {points}");
    }
    let header = [
        "rho",
        "pi_plus_re",
        "pi_plus_im",
        "pi_minus_re",
        "pi_minus_im",
        "pi_imm_re",
        "pi_imm_im",
        "v_re",
        "v_im",
    ];
    let mut rows = Vec::with_capacity(points);
    for rho in sweep_grid(points) {
        let p = ctx.params.with_rho(rho)?;
        let state = MarketState::initial(&p);
        let plus = leg_value(&p, &state, &ctx.payoff, Sign::Plus)?;
        let minus = leg_value(&p, &state, &ctx.payoff, Sign::Minus)?;
        let imm = immunized_initial_value(&p, &state, &ctx.payoff)?;
        let v = true_value(&p, &ctx.payoff, &state)?;
        let mut row = vec![rho.to_string()];
        for z in [plus, minus, imm, v] {
            row.extend(complex_cells(z));
        }
        rows.push(row);
    }
    let csv_path = ctx.out.join("sweep_rho.csv");
    write_csv(&csv_path, &header, rows)?;

    if ctx.cfg.outputs.svg {
        let data = CsvData::read(&csv_path)?;
        let top = [
            data.series("rho", "pi_plus_re", "Re pi+")?,
            data.series("rho", "pi_minus_re", "Re pi-")?,
            data.series("rho", "pi_imm_re", "Re immunized")?,
            data.series("rho", "v_re", "Re true value")?,
        ];
        let bottom = [
            data.series("rho", "pi_plus_im", "Im pi+")?,
            data.series("rho", "pi_minus_im", "Im pi-")?,
            data.series("rho", "pi_imm_im", "Im immunized")?,
            data.series("rho", "v_im", "Im true value")?,
        ];
        let title = format!("{}: initial strategy prices", ctx.payoff.label());
        let doc = svg::two_panel_chart(
            (&title, "imaginary parts"),
            "rho",
            ("price", "price"),
            &top,
            &bottom,
        );
        write_file(&ctx.out.join("sweep_rho.svg"), doc.as_bytes())?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// paths

fn cmd_paths(ctx: &Ctx, path_id: usize) -> anyhow::Result<()> {
    if path_id >= ctx.sim.n_paths {
        bail!(
            "paths: path id {path_id} out of range for a batch of {} paths",
            ctx.sim.n_paths
        );
    }
    let header = [
        "rho",
        "path_id",
        "t",
        "x",
        "y",
        "qv",
        "pi_plus_re",
        "pi_plus_im",
        "pi_minus_re",
        "pi_minus_im",
        "pi_imm_re",
        "pi_imm_im",
        "v_true_re",
        "v_true_im",
    ];
    let mut rows = Vec::new();
    for &rho in &ctx.cfg.rho_grid {
        // Same seed at every correlation: the Brownian draws are shared, so
        // the figures differ only through the correlation itself.
        let mut sim = ctx.sim.clone();
        sim.rho_override = Some(rho);
        let path = simulate_path(&ctx.params, &sim, path_id as u64)?;
        let p_eff = ctx.params.with_rho(rho)?;
        let track = evolve_portfolios(&path, &p_eff, &ctx.payoff)?;
        for j in 0..path.times.len() {
            let mut row = vec![
                rho.to_string(),
                path_id.to_string(),
                path.times[j].to_string(),
                path.x[j].to_string(),
                path.y[j].to_string(),
                path.qv[j].to_string(),
            ];
            for z in [
                track.pi_plus[j],
                track.pi_minus[j],
                track.pi_imm[j],
                track.v_true[j],
            ] {
                row.extend(complex_cells(z));
            }
            rows.push(row);
        }
    }
    let csv_path = ctx.out.join("paths.csv");
    write_csv(&csv_path, &header, rows)?;

    if ctx.cfg.outputs.svg {
        let data = CsvData::read(&csv_path)?;
        for (i, (rho, block)) in data.runs_by("rho")?.into_iter().enumerate() {
            let series = [
                block.series("t", "pi_plus_re", "pi+")?,
                block.series("t", "pi_minus_re", "pi-")?,
                block.series("t", "pi_imm_re", "immunized")?,
                block.series("t", "v_true_re", "true value")?,
            ];
            let title = format!(
                "{}: portfolio tracks, path {path_id}, rho = {rho}",
                ctx.payoff.label()
            );
            let doc = svg::line_chart(&title, "t", "portfolio value", &series);
            write_file(&ctx.out.join(format!("paths_rho{i}.svg")), doc.as_bytes())?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// table and hist share the per-correlation experiment grid

struct GridRun {
    rho: f64,
    seed: u64,
    run: HedgeRun,
    summary: ErrorSummary,
}

/// Runs the hedging experiment once per configured correlation, column `i`
/// seeded with `seed + i` so the columns are independent batches. The
/// correlations run concurrently; per-path results are deterministic, so the
/// outputs never depend on the scheduling.
fn run_grid(ctx: &Ctx) -> anyhow::Result<Vec<GridRun>> {
    let convention = Convention::for_payoff(&ctx.payoff);
    let results: Vec<quadvol::Result<GridRun>> = std::thread::scope(|scope| {
        let handles: Vec<_> = ctx
            .cfg
            .rho_grid
            .iter()
            .enumerate()
            .map(|(i, &rho)| {
                let (params, payoff, sim) = (&ctx.params, &ctx.payoff, &ctx.sim);
                scope.spawn(move || {
                    let mut cfg = sim.clone();
                    cfg.rho_override = Some(rho);
                    cfg.seed = sim.seed.wrapping_add(i as u64);
                    let run = hedge_experiment(params, payoff, &cfg)?;
                    let summary = summarize(&run.errors, convention)?;
                    Ok(GridRun {
                        rho,
                        seed: cfg.seed,
                        run,
                        summary,
                    })
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("correlation experiment thread panicked"))
            .collect()
    });
    Ok(results.into_iter().collect::<quadvol::Result<Vec<_>>>()?)
}

#[derive(Serialize)]
struct StrategyJson {
    mean_re: f64,
    mean_im: f64,
    std: f64,
}

impl StrategyJson {
    fn from_stats(s: &StrategyStats) -> Self {
        Self {
            mean_re: s.mean.re,
            mean_im: s.mean.im,
            std: s.std,
        }
    }
}

#[derive(Serialize)]
struct ColumnJson {
    rho: f64,
    seed: u64,
    n: usize,
    eps_plus: StrategyJson,
    eps_minus: StrategyJson,
    eps_imm: StrategyJson,
    max_im_ratio: f64,
    variance_clamps: usize,
}

#[derive(Serialize)]
struct TableJson<'a> {
    payoff: &'a str,
    convention: &'a str,
    dt: f64,
    n_paths: usize,
    base_seed: u64,
    columns: Vec<ColumnJson>,
}

fn convention_name(convention: Convention) -> &'static str {
    match convention {
        Convention::Raw => "raw",
        Convention::RealPart => "real_part",
    }
}

fn cmd_table(ctx: &Ctx) -> anyhow::Result<()> {
    let convention = Convention::for_payoff(&ctx.payoff);
    let grid = run_grid(ctx)?;
    let rhos: Vec<f64> = grid.iter().map(|g| g.rho).collect();
    let summaries: Vec<ErrorSummary> = grid.iter().map(|g| g.summary).collect();

    print!("{}", format_hedge_table(&rhos, &summaries, convention)?);

    let label = sanitize_label(ctx.payoff.label());
    let csv_text = hedge_table_csv(&rhos, &summaries, convention)?;
    write_file(
        &ctx.out.join(format!("table_{label}.csv")),
        csv_text.as_bytes(),
    )?;

    let json = TableJson {
        payoff: ctx.payoff.label(),
        convention: convention_name(convention),
        dt: ctx.sim.dt,
        n_paths: ctx.sim.n_paths,
        base_seed: ctx.sim.seed,
        columns: grid
            .iter()
            .map(|g| ColumnJson {
                rho: g.rho,
                seed: g.seed,
                n: g.summary.n,
                eps_plus: StrategyJson::from_stats(&g.summary.plus),
                eps_minus: StrategyJson::from_stats(&g.summary.minus),
                eps_imm: StrategyJson::from_stats(&g.summary.immunized),
                max_im_ratio: g.run.max_im_ratio,
                variance_clamps: g.run.total_clamps,
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&json)?;
    text.push('\n');
    write_file(
        &ctx.out.join(format!("table_{label}.json")),
        text.as_bytes(),
    )?;
    Ok(())
}

fn cmd_hist(ctx: &Ctx, bins: usize) -> anyhow::Result<()> {
    if bins == 0 {
        bail!("hist: need at least one bin");
    }
    let grid = run_grid(ctx)?;
    let label = sanitize_label(ctx.payoff.label());
    for (i, g) in grid.iter().enumerate() {
        let plus: Vec<f64> = g.run.errors.iter().map(|e| e.plus.re).collect();
        let minus: Vec<f64> = g.run.errors.iter().map(|e| e.minus.re).collect();
        let imm: Vec<f64> = g.run.errors.iter().map(|e| e.immunized.re).collect();
        // One shared bin grid per figure so the three strategies overlay.
        let pooled: Vec<f64> = plus
            .iter()
            .chain(&minus)
            .chain(&imm)
            .copied()
            .collect();
        let (lo, hi) = sample_range(&pooled)?;
        let h_plus = histogram_in_range(&plus, bins, lo, hi)?;
        let h_imm = histogram_in_range(&imm, bins, lo, hi)?;
        let h_minus = histogram_in_range(&minus, bins, lo, hi)?;
        let rows = h_plus
            .iter()
            .zip(&h_imm)
            .zip(&h_minus)
            .map(|((p, m_imm), m)| {
                vec![
                    p.0.to_string(),
                    p.1.to_string(),
                    m_imm.1.to_string(),
                    m.1.to_string(),
                ]
            })
            .collect::<Vec<_>>();
        let csv_path = ctx.out.join(format!("hist_{label}_rho{i}.csv"));
        write_csv(&csv_path, &["center", "plus", "immunized", "minus"], rows)?;

        if ctx.cfg.outputs.svg {
            let data = CsvData::read(&csv_path)?;
            let series = [
                data.series("center", "plus", "eps_plus")?,
                data.series("center", "immunized", "eps_imm")?,
                data.series("center", "minus", "eps_minus")?,
            ];
            let title = format!(
                "{}: terminal hedging errors, rho = {}",
                ctx.payoff.label(),
                g.rho
            );
            let doc = svg::bar_chart(&title, "error (real part)", &series);
            write_file(
                &ctx.out.join(format!("hist_{label}_rho{i}.svg")),
                doc.as_bytes(),
            )?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// payoff-plot and density

enum Target {
    Put { strike: f64 },
    Volswap { v_cap: f64 },
}

impl Target {
    fn eval(&self, v: f64) -> f64 {
        match *self {
            Target::Put { strike } => (strike - v).max(0.0),
            Target::Volswap { v_cap } => v.min(v_cap).sqrt(),
        }
    }
}

/// The exact curve a configured payoff approximates, where one exists: only
/// the put and volswap families have a non-exponential target.
fn exact_target(cfg: &PayoffConfig) -> Option<Target> {
    match cfg {
        PayoffConfig::Preset(name) => match name.as_str() {
            "put" => Some(Target::Put { strike: 0.04 }),
            "volswap" => Some(Target::Volswap { v_cap: 1.0 }),
            _ => None,
        },
        PayoffConfig::Parameterized {
            preset,
            strike,
            v_cap,
            ..
        } => match preset.as_str() {
            "put" => Some(Target::Put {
                strike: strike.unwrap_or(0.04),
            }),
            "volswap" => Some(Target::Volswap {
                v_cap: v_cap.unwrap_or(1.0),
            }),
            _ => None,
        },
        _ => None,
    }
}

fn cmd_payoff_plot(ctx: &Ctx) -> anyhow::Result<()> {
    let target = exact_target(&ctx.cfg.payoff).ok_or_else(|| {
        anyhow::anyhow!(
            "payoff-plot: needs a put or volswap payoff, got \"{}\"",
            ctx.payoff.label()
        )
    })?;
    let grid: Vec<f64> = (0..201).map(|i| 0.2 * i as f64 / 200.0).collect();
    let density = qv_density(&ctx.params, &grid)?;
    let rows = grid
        .iter()
        .zip(&density)
        .map(|(&v, &d)| {
            vec![
                v.to_string(),
                target.eval(v).to_string(),
                eval_payoff(&ctx.payoff, v).re.to_string(),
                d.to_string(),
            ]
        })
        .collect::<Vec<_>>();
    let label = sanitize_label(ctx.payoff.label());
    let csv_path = ctx.out.join(format!("payoff_{label}.csv"));
    write_csv(&csv_path, &["v", "target", "approx", "density"], rows)?;

    if ctx.cfg.outputs.svg {
        let data = CsvData::read(&csv_path)?;
        let left = [
            data.series("v", "target", "exact payoff")?,
            data.series("v", "approx", "exponential approximation")?,
        ];
        let right = data.series("v", "density", "QV density")?;
        let title = format!("{}: target vs approximation", ctx.payoff.label());
        let doc = svg::dual_axis_chart(&title, "v", "payoff", &left, "density", &right);
        write_file(
            &ctx.out.join(format!("payoff_{label}.svg")),
            doc.as_bytes(),
        )?;
    }
    Ok(())
}

fn cmd_density(ctx: &Ctx, grid_max: f64, points: usize) -> anyhow::Result<()> {
    if !(grid_max > 0.0 && grid_max.is_finite()) {
        bail!("density: grid-max must be positive and finite, got {grid_max}");
    }
    if points < 2 {
        bail!("density: need at least 2 grid points, got {points}");
    }
    let grid: Vec<f64> = (0..points)
        .map(|i| grid_max * i as f64 / (points - 1) as f64)
        .collect();
    let density = qv_density(&ctx.params, &grid)?;
    let rows = grid
        .iter()
        .zip(&density)
        .map(|(&v, &d)| vec![v.to_string(), d.to_string()])
        .collect::<Vec<_>>();
    let csv_path = ctx.out.join("density.csv");
    write_csv(&csv_path, &["v", "density"], rows)?;

    if ctx.cfg.outputs.svg {
        let data = CsvData::read(&csv_path)?;
        let series = [data.series("v", "density", "QV density")?];
        let doc = svg::line_chart(
            "density of terminal quadratic variation",
            "v",
            "density",
            &series,
        );
        write_file(&ctx.out.join("density.svg"), doc.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Cli {
        Cli::try_parse_from(args).expect("arguments must parse")
    }

    #[test]
    fn sweep_grid_hits_both_endpoints_exactly() {
        let grid = sweep_grid(81);
        assert_eq!(grid.len(), 81);
        assert_eq!(grid[0], -1.0);
        assert_eq!(grid[40], 0.0);
        assert_eq!(grid[80], 1.0);
        assert!(grid.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn overrides_apply_in_order() {
        let cli = parse(&[
            "quadvol", "--quick", "--seed", "7", "--payoff", "exp_neg", "--rho=-0.5,0.5",
            "table",
        ]);
        let ctx = build_ctx(&cli).unwrap();
        assert_eq!(ctx.sim.dt, 1.0 / 250.0);
        assert_eq!(ctx.sim.n_paths, 2000);
        assert_eq!(ctx.sim.seed, 7);
        assert_eq!(ctx.cfg.rho_grid, vec![-0.5, 0.5]);
        assert_eq!(ctx.payoff.label(), "exp_neg");
    }

    #[test]
    fn unknown_preset_reports_preset_error() {
        let cli = parse(&["quadvol", "--payoff", "gamma_swap", "table"]);
        let err = build_ctx(&cli).unwrap_err();
        assert!(format!("{err:#}").contains("gamma_swap"));
    }

    #[test]
    fn bad_rho_override_is_rejected() {
        let cli = parse(&["quadvol", "--rho=1.5", "table"]);
        assert!(build_ctx(&cli).is_err());
    }

    #[test]
    fn labels_sanitize_to_filename_safe_strings() {
        assert_eq!(sanitize_label("exp_pos"), "exp_pos");
        assert_eq!(sanitize_label("my payoff!"), "my_payoff_");
        assert_eq!(sanitize_label(""), "payoff");
    }

    #[test]
    fn exact_targets_only_for_put_and_volswap() {
        let put = exact_target(&PayoffConfig::Preset("put".into())).unwrap();
        assert_eq!(put.eval(0.01), 0.03);
        assert_eq!(put.eval(0.05), 0.0);
        let vs = exact_target(&PayoffConfig::Parameterized {
            preset: "volswap".into(),
            strike: None,
            decay: None,
            degree: None,
            v_cap: Some(0.09),
        })
        .unwrap();
        assert_eq!(vs.eval(0.04), 0.2);
        assert_eq!(vs.eval(0.16), 0.3);
        assert!(exact_target(&PayoffConfig::Preset("exp_pos".into())).is_none());
    }

    #[test]
    fn csv_runs_split_on_key_change() {
        let data = CsvData {
            header: vec!["rho".into(), "t".into()],
            rows: vec![
                vec![-0.5, 0.0],
                vec![-0.5, 1.0],
                vec![0.5, 0.0],
                vec![0.5, 1.0],
            ],
        };
        let runs = data.runs_by("rho").unwrap();
        assert_eq!(runs.len(), 2);
        assert_eq!(runs[0].0, -0.5);
        assert_eq!(runs[0].1.rows.len(), 2);
        assert_eq!(runs[1].0, 0.5);
    }
}
