//! Command-line driver: Monte Carlo experiments, one-shot recoveries from
//! files, and diagnostic probes.
//!
//! Exit codes: 0 success, 1 usage error, 2 I/O or file-format error,
//! 3 numerical failure.

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pocs::diagnostics::{
    count_near_vanishing, estimate_kappa, estimate_ric_sampled, l1_concentration, spe_deviation,
};
use pocs::experiments::{parse_config, run_curve, write_results_csv};
use pocs::io::{
    read_complex_matrix, read_complex_vector, read_phase_observation, write_complex_matrix,
    write_complex_vector,
};
use pocs::plot::emit_plot;
use pocs::sensing::{gen_sparse_signal, DitheredEnsemble, Field, LowRankMap, SensingEnsemble};
use pocs::{
    build_complex_scaled, measure_phases, recover_full_dithered, recover_lowrank, recover_noisy,
    recover_sparse, t_hat_complex, ComplexMatrix, Error, RecoveredSignal, RecoveryOutcome,
    SolveStatus, SolverOptions,
};

#[derive(Parser)]
#[command(name = "pocs", version, about = "Phase-only compressive sensing toolkit")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo success-rate sweep from a config file.
    Experiment {
        /// Flat `key = value` config file.
        #[arg(long)]
        config: PathBuf,
        /// Results CSV to write.
        #[arg(long)]
        out: PathBuf,
        /// Optional SVG success-rate plot.
        #[arg(long)]
        plot: Option<PathBuf>,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (defaults to all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Recover one signal from a measurement matrix and observed phases.
    Recover {
        /// Sensing matrix (complex CSV). For --mode lowrank this holds the m
        /// measurement matrices stacked vertically (m*n1 rows).
        #[arg(long)]
        matrix: PathBuf,
        /// Observed phases (complex CSV, single column).
        #[arg(long)]
        phases: PathBuf,
        #[arg(long, value_enum)]
        mode: RecoverMode,
        /// Dithering scale (dithered mode).
        #[arg(long, default_value_t = 1.0 / 3.0)]
        rho: f64,
        /// Phase-noise bound (noisy mode).
        #[arg(long, default_value_t = 0.0)]
        tau0: f64,
        /// Dither vector file (complex CSV; required for dithered mode).
        #[arg(long)]
        dither: Option<PathBuf>,
        /// Row count of each stacked measurement matrix (required for
        /// lowrank mode).
        #[arg(long)]
        n1: Option<usize>,
        /// Recovered signal (complex CSV).
        #[arg(long)]
        out: PathBuf,
    },
    /// Estimate a diagnostic quantity on a random instance.
    Diagnose {
        #[arg(long, value_enum)]
        probe: Probe,
        /// One-row CSV: probe, parameters, value, samples, seed.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Measurement count of the probe instance.
        #[arg(long, default_value_t = 400)]
        m: usize,
        /// Ambient dimension of the probe instance.
        #[arg(long, default_value_t = 20)]
        n: usize,
        /// Sparsity of probe signals.
        #[arg(long, default_value_t = 2)]
        s: usize,
        /// RIC order (ric probe).
        #[arg(long, default_value_t = 8)]
        order: usize,
        /// Sample budget (ric, kappa probes).
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        /// Row scaling of the phase block (ric probe).
        #[arg(long)]
        t_hat: Option<f64>,
        /// Near-vanishing radius (nearvanish probe).
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
        /// Number of random (u, v) pairs (spe probe).
        #[arg(long, default_value_t = 10)]
        pairs: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RecoverMode {
    Real,
    Complex,
    Dithered,
    Noisy,
    Lowrank,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Probe {
    Ric,
    L1,
    Spe,
    Nearvanish,
    Kappa,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Io { .. } | Error::Parse { .. } | Error::Config(_) => 2,
        Error::Numerical(_) => 3,
        _ => 1,
    }
}

fn run(cli: Cli) -> pocs::Result<()> {
    match cli.cmd {
        Command::Experiment {
            config,
            out,
            plot,
            seed,
            threads,
        } => cmd_experiment(config, out, plot, seed, threads),
        Command::Recover {
            matrix,
            phases,
            mode,
            rho,
            tau0,
            dither,
            n1,
            out,
        } => cmd_recover(matrix, phases, mode, rho, tau0, dither, n1, out),
        Command::Diagnose {
            probe,
            out,
            seed,
            m,
            n,
            s,
            order,
            samples,
            t_hat,
            eta,
            pairs,
        } => cmd_diagnose(probe, out, seed, m, n, s, order, samples, t_hat, eta, pairs),
    }
}

fn cmd_experiment(
    config: PathBuf,
    out: PathBuf,
    plot: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
) -> pocs::Result<()> {
    let mut cfg = parse_config(&config)?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    let curve = match threads {
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| Error::Config(format!("cannot build a {t}-thread pool: {e}")))?;
            pool.install(|| run_curve(&cfg))?
        }
        None => run_curve(&cfg)?,
    };
    for row in &curve.rows {
        println!(
            "m={} rate={:.3} successes={}/{} mean_error={:.3e}",
            row.m, row.rate, row.successes, row.trials, row.mean_error
        );
    }
    write_results_csv(&curve, &out)?;
    println!("wrote {}", out.display());
    if let Some(plot_path) = plot {
        emit_plot(&[(cfg.mode.tag().to_string(), curve)], &plot_path)?;
        println!("wrote {}", plot_path.display());
    }
    Ok(())
}

fn report_outcome(out_path: &PathBuf, outcome: &RecoveryOutcome) -> pocs::Result<()> {
    if outcome.report.status == SolveStatus::Infeasible {
        return Err(Error::Numerical(
            "the linearized system is inconsistent; no signal fits these phases".to_string(),
        ));
    }
    match &outcome.xhat {
        RecoveredSignal::Vector(v) => write_complex_vector(out_path, v)?,
        RecoveredSignal::Matrix(m) => write_complex_matrix(out_path, m)?,
    }
    println!("{}", outcome.report.csv_line());
    println!("wrote {}", out_path.display());
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_recover(
    matrix: PathBuf,
    phases: PathBuf,
    mode: RecoverMode,
    rho: f64,
    tau0: f64,
    dither: Option<PathBuf>,
    n1: Option<usize>,
    out: PathBuf,
) -> pocs::Result<()> {
    let opts = SolverOptions::default();
    let threshold = 1e-3;
    let obs = read_phase_observation(&phases)?;
    let mat = read_complex_matrix(&matrix)?;
    let outcome = match mode {
        RecoverMode::Real | RecoverMode::Complex => {
            let field = match mode {
                RecoverMode::Real => Field::Real,
                _ => Field::Complex,
            };
            let ens = SensingEnsemble::new(mat);
            recover_sparse(&ens, &obs, field, None, threshold, &opts)?
        }
        RecoverMode::Dithered => {
            let dither_path = dither.ok_or_else(|| Error::Parameter {
                name: "dither",
                reason: "dithered mode needs --dither <complex-csv>".to_string(),
            })?;
            let tau = read_complex_vector(&dither_path)?;
            let dens = DitheredEnsemble::new(SensingEnsemble::new(mat), tau, rho)?;
            recover_full_dithered(&dens, &obs, None, threshold, &opts)?
        }
        RecoverMode::Noisy => {
            let ens = SensingEnsemble::new(mat);
            recover_noisy(&ens, &obs, tau0, None, threshold, &opts)?
        }
        RecoverMode::Lowrank => {
            let n1 = n1.ok_or_else(|| Error::Parameter {
                name: "n1",
                reason: "lowrank mode needs --n1 <rows per matrix>".to_string(),
            })?;
            let map = split_stacked_atoms(&mat, n1, obs.len())?;
            recover_lowrank(&map, &obs, None, threshold, &opts)?
        }
    };
    report_outcome(&out, &outcome)
}

/// Splits an (m*n1) x n2 stack into m measurement matrices.
fn split_stacked_atoms(mat: &ComplexMatrix, n1: usize, m: usize) -> pocs::Result<LowRankMap> {
    if n1 == 0 {
        return Err(Error::Parameter {
            name: "n1",
            reason: "must be positive".to_string(),
        });
    }
    if mat.rows() != m * n1 {
        return Err(Error::Dimension {
            context: "stacked measurement-matrix rows (m * n1)",
            left: mat.rows(),
            right: m * n1,
        });
    }
    let n2 = mat.cols();
    let atoms = (0..m)
        .map(|k| ComplexMatrix::from_fn(n1, n2, |i, j| mat.get(k * n1 + i, j)))
        .collect::<pocs::Result<Vec<_>>>()?;
    LowRankMap::new(atoms)
}

#[allow(clippy::too_many_arguments)]
fn cmd_diagnose(
    probe: Probe,
    out: PathBuf,
    seed: u64,
    m: usize,
    n: usize,
    s: usize,
    order: usize,
    samples: usize,
    t_hat: Option<f64>,
    eta: f64,
    pairs: usize,
) -> pocs::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (name, params, value, sample_count) = match probe {
        Probe::Ric => {
            let t_hat = t_hat.unwrap_or_else(t_hat_complex);
            let ens = SensingEnsemble::sample(m, n, &mut rng)?;
            let x = gen_sparse_signal(n, s, Field::Complex, &mut rng)?;
            let obs = measure_phases(&ens, &x)?;
            let sys = build_complex_scaled(&obs, &ens, t_hat)?;
            let est = estimate_ric_sampled(sys.matrix(), order, samples, &mut rng)?;
            (
                "ric",
                format!("m={m};n={n};s={s};order={order};that={t_hat}"),
                est.delta,
                est.samples,
            )
        }
        Probe::L1 => {
            let ens = SensingEnsemble::sample(m, n, &mut rng)?;
            let w = gen_sparse_signal(n, s, Field::Complex, &mut rng)?;
            let dev = l1_concentration(&ens, &w)?;
            ("l1", format!("m={m};n={n};s={s}"), dev, 1)
        }
        Probe::Spe => {
            let ens = SensingEnsemble::sample(m, n, &mut rng)?;
            let mut list = Vec::with_capacity(pairs);
            for _ in 0..pairs {
                let u = gen_sparse_signal(n, s, Field::Complex, &mut rng)?;
                let v = gen_sparse_signal(n, s, Field::Complex, &mut rng)?;
                list.push((u, v));
            }
            let rep = spe_deviation(&ens, &list)?;
            (
                "spe",
                format!("m={m};n={n};s={s};pairs={pairs}"),
                rep.deviation,
                rep.pair_count,
            )
        }
        Probe::Nearvanish => {
            let ens = SensingEnsemble::sample(m, n, &mut rng)?;
            let x = gen_sparse_signal(n, s, Field::Complex, &mut rng)?;
            let count = count_near_vanishing(&ens, &x, eta)?;
            (
                "nearvanish",
                format!("m={m};n={n};s={s};eta={eta}"),
                count as f64 / m as f64,
                m,
            )
        }
        Probe::Kappa => {
            let est = estimate_kappa(samples, &mut rng)?;
            ("kappa", format!("samples={samples}"), est, samples)
        }
    };
    let text = format!(
        "probe,parameters,value,samples,seed\n{name},{params},{value:.16e},{sample_count},{seed}\n"
    );
    std::fs::write(&out, text).map_err(|e| Error::Io {
        path: out.clone(),
        source: e,
    })?;
    println!("{name} value={value:.6e}");
    println!("wrote {}", out.display());
    Ok(())
}
