//! Euler–Maruyama simulation of the Heston pair `(X, Y)` with accumulated
//! quadratic variation, and the discrete self-financing evolution of the
//! basic and correlation-immunized hedging portfolios along each path.
//!
//! Paths are independent work units: each draws from its own counter-based
//! RNG stream keyed by `(seed, path_index)`, so results are bit-identical
//! for any worker count. Portfolio evolution reads the multiplier `N` and
//! the European leg `Q` at the left endpoint of every step and accumulates
//!
//! ```text
//! dPi = sum_k a_k [ N_j(s_k) (Q_{j+1} - Q_j) - iu(s_k) N_j Q_j (S_{j+1}/S_j - 1) ]
//! ```
//!
//! per leg, with both pieces fused so the log-price factors of `N` and `Q`
//! cancel analytically and the increment keeps full relative accuracy when
//! a step is small. This module is pinned to `f64`.

use num_complex::Complex;
use rayon::prelude::*;

use crate::carr_lee::{exponents, immunization_weights, Sign};
use crate::error::{Error, Result};
use crate::heston::{logprice_cf_exponents, qv_cf_exponents, transform_value, HestonParams};
use crate::payoffs::{eval_payoff, PayoffSpec};
use crate::rng::PathRng;
use crate::stats::ErrorTriple;
use crate::{cexpm1, C64};

/// Default simulation step, 1/1000 of a year.
pub const DEFAULT_DT: f64 = 1.0 / 1000.0;
/// Default number of sample paths.
pub const DEFAULT_N_PATHS: usize = 10_000;

/// Simulation scale and scheduling knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Time step in years. `t_final / dt` must be an integer (within half an
    /// ulp), so the grid lands exactly on the horizon.
    pub dt: f64,
    /// Number of sample paths.
    pub n_paths: usize,
    /// Seed shared by all paths; path `i` uses RNG stream `i`.
    pub seed: u64,
    /// Replaces the parameter set's correlation for this run when set.
    pub rho_override: Option<f64>,
    /// Worker threads: `None` uses the process-wide pool, `Some(w)` builds a
    /// dedicated pool (`Some(1)` runs serially). Results never depend on it.
    pub parallel_workers: Option<usize>,
}

impl SimConfig {
    pub fn new(dt: f64, n_paths: usize, seed: u64) -> Self {
        Self {
            dt,
            n_paths,
            seed,
            rho_override: None,
            parallel_workers: None,
        }
    }

    /// The default experiment scale: `dt` = 1/1000, 10^4 paths.
    pub fn baseline(seed: u64) -> Self {
        Self::new(DEFAULT_DT, DEFAULT_N_PATHS, seed)
    }

    /// Number of steps implied by `dt` against the horizon, rejecting grids
    /// that do not divide it exactly (to within 0.5 ulp of the ratio).
    pub fn steps(&self, t_final: f64) -> Result<usize> {
        if !self.dt.is_finite() || self.dt <= 0.0 {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "time step must be positive and finite",
            });
        }
        let ratio = t_final / self.dt;
        let rounded = ratio.round();
        let ulp = f64::from_bits(ratio.to_bits() + 1) - ratio;
        if rounded < 1.0 || rounded > 1e9 || (ratio - rounded).abs() > 0.5 * ulp {
            return Err(Error::InvalidParameter {
                name: "dt",
                value: self.dt,
                reason: "t_final/dt must be an integral step count",
            });
        }
        Ok(rounded as usize)
    }
}

/// One simulated path of the log-price, variance, and accumulated quadratic
/// variation over the common time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathRecord {
    pub times: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Running quadratic variation: `qv[j+1] = qv[j] + (x[j+1] - x[j])^2`,
    /// nondecreasing with `qv[0] = 0`.
    pub qv: Vec<f64>,
    /// Steps where the variance went negative and its square root was
    /// floored at zero. Zero at the default parameter set.
    pub negative_y_clamps: usize,
}

/// Portfolio values along one path: the two basic strategies, their
/// immunized combination, and the true conditional claim value (diagnostic,
/// not used in hedging).
#[derive(Debug, Clone, PartialEq)]
pub struct PortfolioTrack {
    pub pi_plus: Vec<Complex<f64>>,
    pub pi_minus: Vec<Complex<f64>>,
    pub pi_imm: Vec<Complex<f64>>,
    pub v_true: Vec<Complex<f64>>,
}

/// Outcome of a hedging experiment over a batch of paths.
#[derive(Debug, Clone)]
pub struct HedgeRun {
    /// Per-path terminal errors, in path-index order.
    pub errors: Vec<ErrorTriple>,
    /// Max over paths and steps of `|Im pi_imm| / (1 + |Re pi_imm|)`; for
    /// payoffs with real values this must stay below 1e-10.
    pub max_im_ratio: f64,
    /// Total variance clamps across all paths.
    pub total_clamps: usize,
}

/// The grid `t_j = t_final j / n`, with the endpoint pinned to `t_final`
/// bit-exactly so terminal exponent tables vanish exactly.
fn time_grid(t_final: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps as f64;
    (0..=n_steps)
        .map(|j| {
            if j == n_steps {
                t_final
            } else {
                t_final * j as f64 / n
            }
        })
        .collect()
}

fn effective_params(p: &HestonParams<f64>, cfg: &SimConfig) -> Result<HestonParams<f64>> {
    match cfg.rho_override {
        Some(rho) => p.with_rho(rho),
        None => Ok(*p),
    }
}

fn simulate_one(
    p: &HestonParams<f64>,
    times: &[f64],
    dt: f64,
    seed: u64,
    path_index: u64,
) -> PathRecord {
    let n_steps = times.len() - 1;
    let mut rng = PathRng::new(seed, path_index);
    let rho = p.rho;
    let rho_bar = (1.0 - rho * rho).max(0.0).sqrt();
    let sqrt_dt = dt.sqrt();
    let mut x = Vec::with_capacity(n_steps + 1);
    let mut y = Vec::with_capacity(n_steps + 1);
    let mut qv = Vec::with_capacity(n_steps + 1);
    let (mut xc, mut yc, mut qc) = (p.x0, p.y0, 0.0);
    x.push(xc);
    y.push(yc);
    qv.push(qc);
    let mut clamps = 0usize;
    for _ in 0..n_steps {
        // Fixed draw order per step: the W^1 increment, then the W^2 one.
        let dw1 = sqrt_dt * rng.standard_normal();
        let dw2 = sqrt_dt * rng.standard_normal();
        // Only the square root is floored; the drifts see the raw value so a
        // negative excursion still mean-reverts.
        let floored = if yc < 0.0 {
            clamps += 1;
            0.0
        } else {
            yc
        };
        let vol = floored.sqrt();
        let dx = -0.5 * yc * dt + vol * (rho_bar * dw1 + rho * dw2);
        let dy = p.kappa * (p.theta - yc) * dt + p.delta * vol * dw2;
        xc += dx;
        yc += dy;
        qc += dx * dx;
        x.push(xc);
        y.push(yc);
        qv.push(qc);
    }
    PathRecord {
        times: times.to_vec(),
        x,
        y,
        qv,
        negative_y_clamps: clamps,
    }
}

/// Simulates every path and maps it through `f` without retaining the batch:
/// path `i` is built, consumed, and dropped. Results come back in path-index
/// order; the first error in that order wins.
pub fn map_paths<R, F>(p: &HestonParams<f64>, cfg: &SimConfig, f: F) -> Result<Vec<R>>
where
    R: Send,
    F: Fn(usize, PathRecord) -> Result<R> + Sync,
{
    let p_eff = effective_params(p, cfg)?;
    let n_steps = cfg.steps(p_eff.t_final)?;
    if cfg.n_paths == 0 {
        return Err(Error::InvalidParameter {
            name: "n_paths",
            value: 0.0,
            reason: "need at least one path",
        });
    }
    let times = time_grid(p_eff.t_final, n_steps);
    let dt = p_eff.t_final / n_steps as f64;
    let run = |i: usize| f(i, simulate_one(&p_eff, &times, dt, cfg.seed, i as u64));
    let results: Vec<Result<R>> = match cfg.parallel_workers {
        Some(0) => {
            return Err(Error::InvalidParameter {
                name: "parallel_workers",
                value: 0.0,
                reason: "worker count must be at least 1",
            })
        }
        Some(1) => (0..cfg.n_paths).map(run).collect(),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|_| Error::InvalidParameter {
                name: "parallel_workers",
                value: w as f64,
                reason: "could not build the worker pool",
            })?
            .install(|| (0..cfg.n_paths).into_par_iter().map(run).collect()),
        None => (0..cfg.n_paths).into_par_iter().map(run).collect(),
    };
    results.into_iter().collect()
}

/// Simulates and materializes the whole batch.
pub fn simulate_paths(p: &HestonParams<f64>, cfg: &SimConfig) -> Result<Vec<PathRecord>> {
    map_paths(p, cfg, |_, rec| Ok(rec))
}

/// Simulates the single path `path_index` of the batch `cfg` describes —
/// identical to that entry of [`simulate_paths`] by the determinism contract.
pub fn simulate_path(
    p: &HestonParams<f64>,
    cfg: &SimConfig,
    path_index: u64,
) -> Result<PathRecord> {
    let p_eff = effective_params(p, cfg)?;
    let n_steps = cfg.steps(p_eff.t_final)?;
    let times = time_grid(p_eff.t_final, n_steps);
    let dt = p_eff.t_final / n_steps as f64;
    Ok(simulate_one(&p_eff, &times, dt, cfg.seed, path_index))
}

/// Exponent tables for one strategy leg of one payoff term.
struct LegTables {
    /// -iu, the share-count factor.
    minus_iu: C64,
    /// iu, the log-return phase factor.
    iu: C64,
    alpha: C64,
    c: Vec<C64>,
    d: Vec<C64>,
}

impl LegTables {
    fn build(p: &HestonParams<f64>, times: &[f64], u: C64, alpha: C64) -> Result<Self> {
        let i = C64::new(0.0, 1.0);
        let iu = i * u;
        let mut c = Vec::with_capacity(times.len());
        let mut d = Vec::with_capacity(times.len());
        for &t in times {
            let (cj, dj) = logprice_cf_exponents(p, p.t_final - t, u)?;
            c.push(cj);
            d.push(dj);
        }
        Ok(Self {
            minus_iu: -iu,
            iu,
            alpha,
            c,
            d,
        })
    }

    /// Portfolio value N_j Q_j of this leg at step `j`, with the `e^{iux}`
    /// factors cancelled analytically.
    #[inline]
    fn value(&self, s: C64, qv_j: f64, y_j: f64, j: usize) -> C64 {
        transform_value(s, qv_j, self.c[j], self.d[j], y_j)
    }

    /// Self-financing increment over step `j -> j+1`:
    /// `N_j (Q_{j+1} - Q_j) - iu N_j Q_j (e^{dx} - 1)`, factored as
    /// `N_j Q_j (expm1(zeta) - iu expm1(dx))` with
    /// `zeta = iu dx + (C_{j+1} - C_j) + (y_{j+1} D_{j+1} - y_j D_j)`,
    /// so a constant claim's increments are exactly zero.
    #[inline]
    fn increment(&self, s: C64, qv_j: f64, y0: f64, y1: f64, dx: f64, edx: f64, j: usize) -> C64 {
        let nq = self.value(s, qv_j, y0, j);
        let zeta = self.iu * dx + (self.c[j + 1] - self.c[j]) + (self.d[j + 1] * y1 - self.d[j] * y0);
        nq * (cexpm1(zeta) + self.minus_iu * edx)
    }
}

struct TermTables {
    a: C64,
    s: C64,
    plus: LegTables,
    minus: LegTables,
    /// Quadratic-variation transform exponents for the diagnostic V series.
    a_qv: Vec<C64>,
    b_qv: Vec<C64>,
}

/// Precomputed per-(term, sign) exponent tables over a fixed time grid.
///
/// Building the tables costs two `logprice_cf_exponents` and one
/// `qv_cf_exponents` sweep per active payoff term; evolving a path then needs
/// only two complex exponentials per (term, sign, step). Terms with a zero
/// coefficient contribute exactly nothing and are skipped outright.
pub struct PortfolioEvaluator {
    times: Vec<f64>,
    terms: Vec<TermTables>,
    payoff: PayoffSpec<f64>,
}

impl PortfolioEvaluator {
    pub fn new(p: &HestonParams<f64>, payoff: &PayoffSpec<f64>, times: &[f64]) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "times",
                value: times.len() as f64,
                reason: "need at least two grid points",
            });
        }
        let zero = C64::new(0.0, 0.0);
        let mut terms = Vec::new();
        for term in payoff.terms() {
            if term.a == zero {
                continue;
            }
            let pair = exponents(term.s);
            let w = immunization_weights(term.s)?;
            let plus = LegTables::build(p, times, Sign::Plus.select(&pair), w.alpha_plus)?;
            let minus = LegTables::build(p, times, Sign::Minus.select(&pair), w.alpha_minus)?;
            let mut a_qv = Vec::with_capacity(times.len());
            let mut b_qv = Vec::with_capacity(times.len());
            for &t in times {
                let (aj, bj) = qv_cf_exponents(p, p.t_final - t, term.s)?;
                a_qv.push(aj);
                b_qv.push(bj);
            }
            terms.push(TermTables {
                a: term.a,
                s: term.s,
                plus,
                minus,
                a_qv,
                b_qv,
            });
        }
        Ok(Self {
            times: times.to_vec(),
            terms,
            payoff: payoff.clone(),
        })
    }

    /// Runs the recursion over one path, handing each grid row
    /// `(j, pi_plus, pi_minus, pi_imm, v_true)` to `row`. Returns the maximum
    /// immunized imaginary-part ratio seen. `with_v` gates the diagnostic V
    /// series (terminal-only consumers skip its cost; the row then carries
    /// zero in that slot).
    fn run(
        &self,
        path: &PathRecord,
        with_v: bool,
        mut row: impl FnMut(usize, C64, C64, C64, C64),
    ) -> Result<f64> {
        let len = self.times.len();
        if path.times.len() != len
            || path.x.len() != len
            || path.y.len() != len
            || path.qv.len() != len
        {
            return Err(Error::InvalidParameter {
                name: "path",
                value: path.x.len() as f64,
                reason: "series length does not match the evaluator grid",
            });
        }
        let n = len - 1;
        let zero = C64::new(0.0, 0.0);
        let mut legs: Vec<(C64, C64)> = self
            .terms
            .iter()
            .map(|t| {
                (
                    t.plus.value(t.s, path.qv[0], path.y[0], 0),
                    t.minus.value(t.s, path.qv[0], path.y[0], 0),
                )
            })
            .collect();
        let mut max_ratio = 0.0f64;
        for j in 0..=n {
            if j > 0 {
                let dx = path.x[j] - path.x[j - 1];
                let edx = dx.exp_m1();
                let qv_prev = path.qv[j - 1];
                let (y0, y1) = (path.y[j - 1], path.y[j]);
                for (term, leg) in self.terms.iter().zip(legs.iter_mut()) {
                    leg.0 = leg.0 + term.plus.increment(term.s, qv_prev, y0, y1, dx, edx, j - 1);
                    leg.1 = leg.1 + term.minus.increment(term.s, qv_prev, y0, y1, dx, edx, j - 1);
                }
            }
            let mut sp = zero;
            let mut sm = zero;
            let mut si = zero;
            for (term, leg) in self.terms.iter().zip(&legs) {
                sp = sp + term.a * leg.0;
                sm = sm + term.a * leg.1;
                si = si + term.a * (term.plus.alpha * leg.0 + term.minus.alpha * leg.1);
            }
            let sv = if with_v {
                let mut acc = zero;
                for term in &self.terms {
                    acc = acc
                        + term.a
                            * transform_value(term.s, path.qv[j], term.a_qv[j], term.b_qv[j], path.y[j]);
                }
                acc
            } else {
                zero
            };
            if !(sp.is_finite() && sm.is_finite() && si.is_finite() && sv.is_finite()) {
                let s0 = self.terms.first().map_or(zero, |t| t.s);
                return Err(Error::Overflow {
                    context: "evolve_portfolios",
                    u_re: s0.re,
                    u_im: s0.im,
                    tau: self.times[n] - self.times[j],
                });
            }
            let ratio = si.im.abs() / (1.0 + si.re.abs());
            if ratio > max_ratio {
                max_ratio = ratio;
            }
            row(j, sp, sm, si, sv);
        }
        Ok(max_ratio)
    }

    /// Full portfolio tracks along a path.
    pub fn evolve(&self, path: &PathRecord) -> Result<PortfolioTrack> {
        let len = self.times.len();
        let mut track = PortfolioTrack {
            pi_plus: Vec::with_capacity(len),
            pi_minus: Vec::with_capacity(len),
            pi_imm: Vec::with_capacity(len),
            v_true: Vec::with_capacity(len),
        };
        self.run(path, true, |_, sp, sm, si, sv| {
            track.pi_plus.push(sp);
            track.pi_minus.push(sm);
            track.pi_imm.push(si);
            track.v_true.push(sv);
        })?;
        Ok(track)
    }

    /// Terminal hedging errors against the payoff at the path's simulated
    /// terminal quadratic variation, plus the max imaginary-part ratio.
    pub fn terminal_errors(&self, path: &PathRecord) -> Result<(ErrorTriple, f64)> {
        let zero = C64::new(0.0, 0.0);
        let (mut tp, mut tm, mut ti) = (zero, zero, zero);
        let max_ratio = self.run(path, false, |_, sp, sm, si, _| {
            tp = sp;
            tm = sm;
            ti = si;
        })?;
        let target = eval_payoff(&self.payoff, *path.qv.last().expect("nonempty grid"));
        let triple = ErrorTriple {
            plus: tp - target,
            minus: tm - target,
            immunized: ti - target,
        };
        if !(triple.plus.is_finite() && triple.minus.is_finite() && triple.immunized.is_finite()) {
            return Err(Error::Overflow {
                context: "hedge_experiment",
                u_re: 0.0,
                u_im: *path.qv.last().expect("nonempty grid"),
                tau: 0.0,
            });
        }
        Ok((triple, max_ratio))
    }
}

/// Evolves both basic portfolios, their immunized combination, and the true
/// value series along one path. `p` must be the parameter set the path was
/// simulated under.
pub fn evolve_portfolios(
    path: &PathRecord,
    p: &HestonParams<f64>,
    payoff: &PayoffSpec<f64>,
) -> Result<PortfolioTrack> {
    PortfolioEvaluator::new(p, payoff, &path.times)?.evolve(path)
}

/// Runs the full hedging experiment: simulate `cfg.n_paths` paths, evolve the
/// portfolios along each, and report per-path terminal errors
/// `(eps+, eps-, eps_immunized)` in path-index order.
pub fn hedge_experiment(
    p: &HestonParams<f64>,
    payoff: &PayoffSpec<f64>,
    cfg: &SimConfig,
) -> Result<HedgeRun> {
    let p_eff = effective_params(p, cfg)?;
    let n_steps = cfg.steps(p_eff.t_final)?;
    let times = time_grid(p_eff.t_final, n_steps);
    let eval = PortfolioEvaluator::new(&p_eff, payoff, &times)?;
    let per_path = map_paths(p, cfg, |_, path| {
        let (triple, ratio) = eval.terminal_errors(&path)?;
        Ok((triple, ratio, path.negative_y_clamps))
    })?;
    let mut errors = Vec::with_capacity(per_path.len());
    let mut max_im_ratio = 0.0f64;
    let mut total_clamps = 0usize;
    for (triple, ratio, clamps) in per_path {
        errors.push(triple);
        if ratio > max_im_ratio {
            max_im_ratio = ratio;
        }
        total_clamps += clamps;
    }
    Ok(HedgeRun {
        errors,
        max_im_ratio,
        total_clamps,
    })
}

/// Streams paths and their portfolio tracks to CSV with columns
/// `(path_id, t, x, y, qv, re/im of pi_plus, pi_minus, pi_imm, v_true)`.
/// Rows are subsampled to every `stride`-th grid point; the first and last
/// rows of each path are always written.
pub fn export_paths_csv<W: std::io::Write>(
    out: W,
    paths: &[PathRecord],
    tracks: &[PortfolioTrack],
    stride: usize,
) -> Result<()> {
    if stride == 0 {
        return Err(Error::InvalidParameter {
            name: "stride",
            value: 0.0,
            reason: "stride must be at least 1",
        });
    }
    if paths.len() != tracks.len() {
        return Err(Error::InvalidParameter {
            name: "tracks",
            value: tracks.len() as f64,
            reason: "need exactly one portfolio track per path",
        });
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
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
    ])?;
    for (id, (path, track)) in paths.iter().zip(tracks).enumerate() {
        let last = path.times.len() - 1;
        if track.pi_plus.len() != path.times.len() {
            return Err(Error::InvalidParameter {
                name: "tracks",
                value: track.pi_plus.len() as f64,
                reason: "track length does not match its path",
            });
        }
        for j in 0..=last {
            if j % stride != 0 && j != last {
                continue;
            }
            w.write_record(&[
                id.to_string(),
                path.times[j].to_string(),
                path.x[j].to_string(),
                path.y[j].to_string(),
                path.qv[j].to_string(),
                track.pi_plus[j].re.to_string(),
                track.pi_plus[j].im.to_string(),
                track.pi_minus[j].re.to_string(),
                track.pi_minus[j].im.to_string(),
                track.pi_imm[j].re.to_string(),
                track.pi_imm[j].im.to_string(),
                track.v_true[j].re.to_string(),
                track.v_true[j].im.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
