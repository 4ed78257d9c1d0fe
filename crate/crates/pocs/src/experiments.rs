//! Deterministic Monte Carlo harness: success-rate curves over a grid of
//! measurement counts, with per-trial seeds derived from the master seed so
//! results are identical no matter how trials are scheduled.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::io::{io_err, parse_err};
use crate::recovery::{
    recover_full_dithered, recover_linear_cs, recover_lowrank, recover_noisy, recover_sparse,
};
use crate::sensing::{
    corrupt_phases, gen_lowrank_signal, gen_sparse_signal, measure_lowrank_phases, measure_phases,
    measure_phases_dithered, DitheredEnsemble, Field, LowRankMap, NoiseModel, SensingEnsemble,
};
use crate::solvers::SolverOptions;

/// Trial index reserved for the shared draw of the uniform ("fixed
/// ensemble") modes; real trial indices can never reach it.
pub const SHARED_DRAW_TAG: u64 = u64::MAX;

fn splitmix64(seed: u64) -> u64 {
    let mut x = seed.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-trial seed: a splitmix64 chain over (master, m, trial). Documented
/// and fixed so runs replay across platforms and thread counts.
pub fn mix_seed(master: u64, m: u64, trial: u64) -> u64 {
    let mut h = master;
    for w in [m, trial] {
        h = splitmix64(h ^ splitmix64(w));
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentMode {
    PocsNonuniform,
    PocsUniform,
    LinearCs,
    DitheredNonuniform,
    DitheredUniform,
    Noisy,
    Lowrank,
}

impl ExperimentMode {
    pub fn tag(&self) -> &'static str {
        match self {
            ExperimentMode::PocsNonuniform => "pocs-nonuniform",
            ExperimentMode::PocsUniform => "pocs-uniform",
            ExperimentMode::LinearCs => "linear-cs",
            ExperimentMode::DitheredNonuniform => "dithered-nonuniform",
            ExperimentMode::DitheredUniform => "dithered-uniform",
            ExperimentMode::Noisy => "noisy",
            ExperimentMode::Lowrank => "lowrank",
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Ok(match tag {
            "pocs-nonuniform" => ExperimentMode::PocsNonuniform,
            "pocs-uniform" => ExperimentMode::PocsUniform,
            "linear-cs" => ExperimentMode::LinearCs,
            "dithered-nonuniform" => ExperimentMode::DitheredNonuniform,
            "dithered-uniform" => ExperimentMode::DitheredUniform,
            "noisy" => ExperimentMode::Noisy,
            "lowrank" => ExperimentMode::Lowrank,
            other => {
                return Err(Error::parameter(
                    "mode",
                    format!("unknown experiment mode {other:?}"),
                ))
            }
        })
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self, ExperimentMode::PocsUniform | ExperimentMode::DitheredUniform)
    }
}

/// Sweep description. Sparse modes use (n, s); the low-rank mode uses
/// (n1, n2, r) instead. All defaults follow the reference experiment:
/// n = 80, s = 3, 100 trials per measurement count.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub mode: ExperimentMode,
    pub n: usize,
    pub s: usize,
    pub r: usize,
    pub n1: usize,
    pub n2: usize,
    pub m_list: Vec<usize>,
    pub trials: usize,
    pub threshold: f64,
    pub rho: f64,
    pub tau0: f64,
    pub master_seed: u64,
    pub solver: SolverOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mode: ExperimentMode::PocsNonuniform,
            n: 80,
            s: 3,
            r: 1,
            n1: 8,
            n2: 8,
            m_list: vec![6, 12, 18, 24, 30, 36, 42, 48],
            trials: 100,
            threshold: 1e-3,
            rho: 1.0 / 3.0,
            tau0: 0.0,
            master_seed: 0,
            solver: SolverOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::parameter("trials", "must be at least 1".to_string()));
        }
        if self.m_list.is_empty() {
            return Err(Error::Empty { what: "m_list" });
        }
        if self.m_list[0] == 0 {
            return Err(Error::parameter("m_list", "entries must be positive".to_string()));
        }
        if !self.m_list.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::parameter(
                "m_list",
                "must be strictly ascending".to_string(),
            ));
        }
        if !(self.threshold.is_finite() && self.threshold > 0.0) {
            return Err(Error::parameter(
                "threshold",
                format!("must be positive, got {}", self.threshold),
            ));
        }
        if !(self.rho.is_finite() && self.rho > 0.0) {
            return Err(Error::parameter("rho", format!("must be positive, got {}", self.rho)));
        }
        if !(self.tau0.is_finite() && self.tau0 >= 0.0) {
            return Err(Error::parameter(
                "tau0",
                format!("must be nonnegative, got {}", self.tau0),
            ));
        }
        if self.mode == ExperimentMode::Lowrank {
            if self.n1 == 0 || self.n2 == 0 {
                return Err(Error::parameter("n1/n2", "must be positive".to_string()));
            }
            if self.r == 0 || self.r > self.n1.min(self.n2) {
                return Err(Error::parameter(
                    "r",
                    format!("must lie in [1, {}], got {}", self.n1.min(self.n2), self.r),
                ));
            }
        } else {
            if self.n == 0 {
                return Err(Error::parameter("n", "must be positive".to_string()));
            }
            if self.s == 0 || self.s > self.n {
                return Err(Error::parameter(
                    "s",
                    format!("must lie in [1, {}], got {}", self.n, self.s),
                ));
            }
        }
        self.solver.validate()
    }

    /// Sparsity order used on the plot's x-axis (m/s): s for the sparse
    /// modes, r for the low-rank one.
    pub fn order(&self) -> usize {
        if self.mode == ExperimentMode::Lowrank {
            self.r
        } else {
            self.s
        }
    }

    fn meta_lines(&self) -> Vec<String> {
        let mut v = vec![
            format!("mode {}", self.mode.tag()),
            format!("trials {}", self.trials),
            format!("threshold {}", self.threshold),
            format!("master_seed {}", self.master_seed),
        ];
        if self.mode == ExperimentMode::Lowrank {
            v.push(format!("n1 {}", self.n1));
            v.push(format!("n2 {}", self.n2));
            v.push(format!("r {}", self.r));
        } else {
            v.push(format!("n {}", self.n));
            v.push(format!("sparsity {}", self.s));
        }
        match self.mode {
            ExperimentMode::DitheredNonuniform | ExperimentMode::DitheredUniform => {
                v.push(format!("rho {}", self.rho));
            }
            ExperimentMode::Noisy => v.push(format!("tau0 {}", self.tau0)),
            _ => {}
        }
        v.push(format!("penalty {}", self.solver.penalty));
        v.push(format!("over_relax {}", self.solver.over_relax));
        v.push(format!("abs_tol {}", self.solver.abs_tol));
        v.push(format!("rel_tol {}", self.solver.rel_tol));
        v.push(format!("max_iter {}", self.solver.max_iter));
        v
    }
}

/// Parses a flat `key = value` config file (`#` comments allowed) over the
/// defaults.
pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_config_text(&text, &path.display().to_string())
}

pub fn parse_config_text(text: &str, label: &str) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let no = idx + 1;
        let bad = |msg: String| Error::Config(format!("{label}:{no}: {msg}"));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("expected `key = value`, got {line:?}")))?;
        let (key, value) = (key.trim(), value.trim());
        let as_usize = || -> Result<usize> {
            value
                .parse()
                .map_err(|_| bad(format!("{key} expects an integer, got {value:?}")))
        };
        let as_f64 = || -> Result<f64> {
            let v: f64 = value
                .parse()
                .map_err(|_| bad(format!("{key} expects a float, got {value:?}")))?;
            if !v.is_finite() {
                return Err(bad(format!("{key} must be finite, got {value:?}")));
            }
            Ok(v)
        };
        match key {
            "mode" => cfg.mode = ExperimentMode::from_tag(value)?,
            "n" => cfg.n = as_usize()?,
            "s" => cfg.s = as_usize()?,
            "r" => cfg.r = as_usize()?,
            "n1" => cfg.n1 = as_usize()?,
            "n2" => cfg.n2 = as_usize()?,
            "trials" => cfg.trials = as_usize()?,
            "max_iter" => cfg.solver.max_iter = as_usize()?,
            "threshold" => cfg.threshold = as_f64()?,
            "rho" => cfg.rho = as_f64()?,
            "tau0" => cfg.tau0 = as_f64()?,
            "penalty" => cfg.solver.penalty = as_f64()?,
            "over_relax" => cfg.solver.over_relax = as_f64()?,
            "abs_tol" => cfg.solver.abs_tol = as_f64()?,
            "rel_tol" => cfg.solver.rel_tol = as_f64()?,
            "master_seed" => {
                cfg.master_seed = value
                    .parse()
                    .map_err(|_| bad(format!("master_seed expects an integer, got {value:?}")))?
            }
            "m_list" => {
                let mut list = Vec::new();
                for tok in value.split(',') {
                    let v: usize = tok
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("m_list entry {tok:?} is not an integer")))?;
                    list.push(v);
                }
                cfg.m_list = list;
            }
            other => return Err(bad(format!("unknown key {other:?}"))),
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// The per-m fixed draw of the uniform modes.
#[derive(Clone, Debug)]
pub enum SharedDraw {
    Plain(SensingEnsemble),
    Dithered(DitheredEnsemble),
}

/// Draws the fixed ensemble for a uniform mode at measurement count m, from
/// the reserved trial tag; `None` for the regenerate-every-trial modes.
pub fn shared_draw(cfg: &ExperimentConfig, m: usize) -> Result<Option<SharedDraw>> {
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.master_seed, m as u64, SHARED_DRAW_TAG));
    match cfg.mode {
        ExperimentMode::PocsUniform => Ok(Some(SharedDraw::Plain(SensingEnsemble::sample(
            m, cfg.n, &mut rng,
        )?))),
        ExperimentMode::DitheredUniform => Ok(Some(SharedDraw::Dithered(
            DitheredEnsemble::sample(m, cfg.n, cfg.rho, &mut rng)?,
        ))),
        _ => Ok(None),
    }
}

/// One Monte Carlo trial. Equality between records ignores wall time, which
/// is the only nondeterministic field.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    pub m: usize,
    pub trial_index: usize,
    pub seed: u64,
    pub success: bool,
    pub error: f64,
    pub iterations: usize,
    pub wall_time: Duration,
}

impl PartialEq for TrialRecord {
    fn eq(&self, other: &Self) -> bool {
        self.m == other.m
            && self.trial_index == other.trial_index
            && self.seed == other.seed
            && self.success == other.success
            && self.error.to_bits() == other.error.to_bits()
            && self.iterations == other.iterations
    }
}

fn trial_body(
    cfg: &ExperimentConfig,
    m: usize,
    rng: &mut ChaCha8Rng,
    shared: Option<&SharedDraw>,
) -> Result<(f64, usize)> {
    match cfg.mode {
        ExperimentMode::PocsNonuniform | ExperimentMode::PocsUniform => {
            let local;
            let ens = match shared {
                Some(SharedDraw::Plain(e)) => e,
                _ => {
                    local = SensingEnsemble::sample(m, cfg.n, rng)?;
                    &local
                }
            };
            let x = gen_sparse_signal(cfg.n, cfg.s, Field::Complex, rng)?;
            let obs = measure_phases(ens, &x)?;
            let out = recover_sparse(ens, &obs, Field::Complex, Some(&x), cfg.threshold, &cfg.solver)?;
            Ok((out.direction_error.unwrap_or(1.0), out.report.iterations))
        }
        ExperimentMode::LinearCs => {
            let ens = SensingEnsemble::sample(m, cfg.n, rng)?;
            let x = gen_sparse_signal(cfg.n, cfg.s, Field::Complex, rng)?;
            let y = ens.phi().mul_vec(&x)?;
            let out = recover_linear_cs(&ens, &y, Some(&x), cfg.threshold, &cfg.solver)?;
            Ok((out.full_error.unwrap_or(1.0), out.report.iterations))
        }
        ExperimentMode::DitheredNonuniform | ExperimentMode::DitheredUniform => {
            let local;
            let dens = match shared {
                Some(SharedDraw::Dithered(d)) => d,
                _ => {
                    local = DitheredEnsemble::sample(m, cfg.n, cfg.rho, rng)?;
                    &local
                }
            };
            let x = gen_sparse_signal(cfg.n, cfg.s, Field::Complex, rng)?;
            let obs = measure_phases_dithered(dens, &x)?;
            let out = recover_full_dithered(dens, &obs, Some(&x), cfg.threshold, &cfg.solver)?;
            Ok((out.full_error.unwrap_or(1.0), out.report.iterations))
        }
        ExperimentMode::Noisy => {
            let ens = SensingEnsemble::sample(m, cfg.n, rng)?;
            let x = gen_sparse_signal(cfg.n, cfg.s, Field::Complex, rng)?;
            let clean = measure_phases(&ens, &x)?;
            let obs = corrupt_phases(&clean, cfg.tau0, NoiseModel::Disk, rng)?;
            let out = recover_noisy(&ens, &obs, cfg.tau0, Some(&x), cfg.threshold, &cfg.solver)?;
            Ok((out.full_error.unwrap_or(1.0), out.report.iterations))
        }
        ExperimentMode::Lowrank => {
            let map = LowRankMap::sample(m, cfg.n1, cfg.n2, rng)?;
            let x = gen_lowrank_signal(cfg.n1, cfg.n2, cfg.r, rng)?;
            let obs = measure_lowrank_phases(&map, &x)?;
            let out = recover_lowrank(&map, &obs, Some(&x), cfg.threshold, &cfg.solver)?;
            Ok((out.direction_error.unwrap_or(1.0), out.report.iterations))
        }
    }
}

/// Runs one trial. The record is a pure function of (master_seed, m,
/// trial_index): the uniform modes re-derive their shared ensemble when it
/// is not supplied, so passing `shared` is purely an optimization.
/// Numerical failures inside the pipeline are scored as error 1 rather than
/// aborting a sweep.
pub fn run_trial(
    cfg: &ExperimentConfig,
    m: usize,
    trial_index: usize,
    shared: Option<&SharedDraw>,
) -> Result<TrialRecord> {
    cfg.validate()?;
    if shared.is_some() && !cfg.mode.is_uniform() {
        return Err(Error::parameter(
            "shared",
            format!("mode {} regenerates its ensemble per trial", cfg.mode.tag()),
        ));
    }
    if let Some(draw) = shared {
        let shared_m = match draw {
            SharedDraw::Plain(e) => e.m(),
            SharedDraw::Dithered(d) => d.base().m(),
        };
        if shared_m != m {
            return Err(Error::Dimension {
                context: "shared ensemble measurement count",
                left: shared_m,
                right: m,
            });
        }
    }
    let start = Instant::now();
    let seed = mix_seed(cfg.master_seed, m as u64, trial_index as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rebuilt;
    let shared = if cfg.mode.is_uniform() && shared.is_none() {
        rebuilt = shared_draw(cfg, m)?;
        rebuilt.as_ref()
    } else {
        shared
    };
    let (error, iterations) = trial_body(cfg, m, &mut rng, shared).unwrap_or((1.0, 0));
    Ok(TrialRecord {
        m,
        trial_index,
        seed,
        success: error < cfg.threshold,
        error,
        iterations,
        wall_time: start.elapsed(),
    })
}

/// Per-m aggregate of a sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct CurveRow {
    pub m: usize,
    pub trials: usize,
    pub successes: usize,
    pub rate: f64,
    pub mean_error: f64,
    pub median_iters: f64,
}

/// Aggregated sweep: one row per measurement count, plus the sparsity order
/// (for the m/s axis) and the config echo embedded in result files.
#[derive(Clone, Debug, PartialEq)]
pub struct SuccessCurve {
    pub s: usize,
    pub meta: Vec<String>,
    pub rows: Vec<CurveRow>,
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Full sweep over cfg.m_list, trials fanned out across the rayon pool.
/// Output is bit-identical regardless of thread count: every trial owns an
/// rng seeded from (master_seed, m, trial_index), and rows aggregate in
/// (m, trial_index) order.
pub fn run_curve(cfg: &ExperimentConfig) -> Result<SuccessCurve> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.m_list.len());
    for &m in &cfg.m_list {
        let shared = shared_draw(cfg, m)?;
        let records: Vec<TrialRecord> = (0..cfg.trials)
            .into_par_iter()
            .map(|idx| run_trial(cfg, m, idx, shared.as_ref()))
            .collect::<Result<_>>()?;
        let successes = records.iter().filter(|r| r.success).count();
        let mean_error = records.iter().map(|r| r.error).sum::<f64>() / cfg.trials as f64;
        let median_iters = median(records.iter().map(|r| r.iterations as f64).collect());
        rows.push(CurveRow {
            m,
            trials: cfg.trials,
            successes,
            rate: successes as f64 / cfg.trials as f64,
            mean_error,
            median_iters,
        });
    }
    Ok(SuccessCurve {
        s: cfg.order(),
        meta: cfg.meta_lines(),
        rows,
    })
}

/// Writes `# s <s>`, the config echo, the column header, then one row per
/// m with floats at 17 significant digits.
pub fn write_results_csv(curve: &SuccessCurve, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("# s {}\n", curve.s);
    for line in &curve.meta {
        let _ = writeln!(out, "# {line}");
    }
    out.push_str("m,trials,successes,rate,mean_error,median_iters\n");
    for row in &curve.rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            row.m, row.trials, row.successes, row.rate, row.mean_error, row.median_iters
        );
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_results_csv(path: impl AsRef<Path>) -> Result<SuccessCurve> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut s: Option<usize> = None;
    let mut meta = Vec::new();
    let mut rows = Vec::new();
    let mut saw_header = false;
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            let comment = comment.trim();
            if let Some(v) = comment.strip_prefix("s ") {
                s = Some(
                    v.trim()
                        .parse()
                        .map_err(|_| parse_err(path, no, format!("bad `# s` line {line:?}")))?,
                );
            } else {
                meta.push(comment.to_string());
            }
            continue;
        }
        if !saw_header {
            if line != "m,trials,successes,rate,mean_error,median_iters" {
                return Err(parse_err(path, no, format!("unexpected header {line:?}")));
            }
            saw_header = true;
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != 6 {
            return Err(parse_err(path, no, format!("expected 6 columns, got {}", toks.len())));
        }
        let parse_int = |t: &str| -> Result<usize> {
            t.parse()
                .map_err(|_| parse_err(path, no, format!("bad integer {t:?}")))
        };
        let parse_float = |t: &str| -> Result<f64> {
            let v: f64 = t
                .parse()
                .map_err(|_| parse_err(path, no, format!("bad float {t:?}")))?;
            if !v.is_finite() {
                return Err(parse_err(path, no, format!("non-finite value {t:?}")));
            }
            Ok(v)
        };
        rows.push(CurveRow {
            m: parse_int(toks[0])?,
            trials: parse_int(toks[1])?,
            successes: parse_int(toks[2])?,
            rate: parse_float(toks[3])?,
            mean_error: parse_float(toks[4])?,
            median_iters: parse_float(toks[5])?,
        });
    }
    if !saw_header {
        return Err(parse_err(path, 1, "missing results header"));
    }
    let s = s.ok_or_else(|| parse_err(path, 1, "missing `# s <order>` line"))?;
    Ok(SuccessCurve { s, meta, rows })
}
