use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU64, Ordering};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pocs::io::{
    read_complex_matrix, read_complex_vector, write_complex_matrix, write_complex_vector,
    write_phase_observation,
};
use pocs::sensing::{
    gen_lowrank_signal, gen_sparse_signal, measure_lowrank_phases, measure_phases,
    measure_phases_dithered, DitheredEnsemble, Field, LowRankMap, SensingEnsemble,
};
use pocs::{direction_error, direction_error_matrix, kappa, ComplexMatrix, ComplexVector};

static COUNTER: AtomicU64 = AtomicU64::new(0);

fn scratch_dir() -> PathBuf {
    let dir = std::env::temp_dir().join(format!(
        "pocs-cli-test-{}-{}",
        std::process::id(),
        COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn pocs_cmd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pocs"))
        .args(args)
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn help_exits_zero() {
    let out = pocs_cmd(&["--help"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("experiment"));
    assert!(text.contains("recover"));
    assert!(text.contains("diagnose"));
}

#[test]
fn unknown_flag_exits_one() {
    let out = pocs_cmd(&["experiment", "--nope"]);
    assert_eq!(code(&out), 1);
    let out = pocs_cmd(&[]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_config_exits_two() {
    let dir = scratch_dir();
    let cfg = dir.join("absent.cfg");
    let out_csv = dir.join("out.csv");
    let out = pocs_cmd(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn experiment_writes_csv_and_plot() {
    let dir = scratch_dir();
    let cfg = dir.join("sweep.cfg");
    std::fs::write(
        &cfg,
        "mode = pocs-nonuniform\nn = 16\ns = 2\ntrials = 4\nm_list = 10, 16\nmaster_seed = 11\n",
    )
    .unwrap();
    let csv = dir.join("sweep.csv");
    let svg = dir.join("sweep.svg");
    let out = pocs_cmd(&[
        "experiment",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        csv.to_str().unwrap(),
        "--plot",
        svg.to_str().unwrap(),
        "--threads",
        "2",
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.contains("m,trials,successes,rate,mean_error,median_iters"));
    let data_rows = text
        .lines()
        .filter(|l| !l.starts_with('#') && l.starts_with(|c: char| c.is_ascii_digit()))
        .count();
    assert_eq!(data_rows, 2);

    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert!(svg_text.starts_with("<svg"));
    assert!(svg_text.contains("<polyline"));
}

#[test]
fn experiment_seed_flag_changes_results() {
    let dir = scratch_dir();
    let cfg = dir.join("seeded.cfg");
    std::fs::write(
        &cfg,
        "mode = pocs-nonuniform\nn = 12\ns = 2\ntrials = 3\nm_list = 8\nmaster_seed = 1\n",
    )
    .unwrap();
    let run = |seed: &str, name: &str| {
        let csv = dir.join(name);
        let out = pocs_cmd(&[
            "experiment",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            csv.to_str().unwrap(),
            "--seed",
            seed,
        ]);
        assert_eq!(code(&out), 0);
        std::fs::read_to_string(&csv).unwrap()
    };
    let a = run("1", "a.csv");
    let b = run("1", "b.csv");
    let c = run("2", "c.csv");
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn recover_complex_round_trip() {
    let dir = scratch_dir();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let ens = SensingEnsemble::sample(30, 10, &mut rng).unwrap();
    let x = gen_sparse_signal(10, 2, Field::Complex, &mut rng).unwrap();
    let obs = measure_phases(&ens, &x).unwrap();

    let phi_path = dir.join("phi.csv");
    let z_path = dir.join("z.csv");
    let xhat_path = dir.join("xhat.csv");
    write_complex_matrix(&phi_path, ens.phi()).unwrap();
    write_phase_observation(&z_path, &obs).unwrap();

    let out = pocs_cmd(&[
        "recover",
        "--matrix",
        phi_path.to_str().unwrap(),
        "--phases",
        z_path.to_str().unwrap(),
        "--mode",
        "complex",
        "--out",
        xhat_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.starts_with("converged,"));

    let xhat = read_complex_vector(&xhat_path).unwrap();
    assert!(direction_error(&xhat, &x) < 1e-3);
}

#[test]
fn recover_dithered_round_trip_and_degenerate_dither() {
    let dir = scratch_dir();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let dens = DitheredEnsemble::sample(40, 10, 1.0 / 3.0, &mut rng).unwrap();
    let x = gen_sparse_signal(10, 2, Field::Complex, &mut rng).unwrap();
    let obs = measure_phases_dithered(&dens, &x).unwrap();

    let phi_path = dir.join("phi.csv");
    let z_path = dir.join("z.csv");
    let tau_path = dir.join("tau.csv");
    let xhat_path = dir.join("xhat.csv");
    write_complex_matrix(&phi_path, dens.base().phi()).unwrap();
    write_phase_observation(&z_path, &obs).unwrap();
    write_complex_vector(&tau_path, dens.dither()).unwrap();

    let out = pocs_cmd(&[
        "recover",
        "--matrix",
        phi_path.to_str().unwrap(),
        "--phases",
        z_path.to_str().unwrap(),
        "--mode",
        "dithered",
        "--rho",
        &format!("{}", 1.0 / 3.0),
        "--dither",
        tau_path.to_str().unwrap(),
        "--out",
        xhat_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let xhat = read_complex_vector(&xhat_path).unwrap();
    let err = xhat.sub(&x).unwrap().norm() / x.norm();
    assert!(err < 1e-3, "full error {err}");

    // An all-zero dither cannot pin the scale: the solver drops the dither
    // column entirely and the recovered scale degenerates.
    let zero_tau = ComplexVector::from_fn(40, |_| num_complex::Complex64::new(0.0, 0.0)).unwrap();
    write_complex_vector(&tau_path, &zero_tau).unwrap();
    let out = pocs_cmd(&[
        "recover",
        "--matrix",
        phi_path.to_str().unwrap(),
        "--phases",
        z_path.to_str().unwrap(),
        "--mode",
        "dithered",
        "--dither",
        tau_path.to_str().unwrap(),
        "--out",
        xhat_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate scale"));
}

#[test]
fn recover_dithered_without_dither_flag_exits_one() {
    let dir = scratch_dir();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let ens = SensingEnsemble::sample(8, 4, &mut rng).unwrap();
    let x = gen_sparse_signal(4, 1, Field::Complex, &mut rng).unwrap();
    let obs = measure_phases(&ens, &x).unwrap();
    let phi_path = dir.join("phi.csv");
    let z_path = dir.join("z.csv");
    write_complex_matrix(&phi_path, ens.phi()).unwrap();
    write_phase_observation(&z_path, &obs).unwrap();
    let out = pocs_cmd(&[
        "recover",
        "--matrix",
        phi_path.to_str().unwrap(),
        "--phases",
        z_path.to_str().unwrap(),
        "--mode",
        "dithered",
        "--out",
        dir.join("xhat.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn recover_lowrank_with_stacked_atoms() {
    let dir = scratch_dir();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let map = LowRankMap::sample(30, 3, 3, &mut rng).unwrap();
    let x = gen_lowrank_signal(3, 3, 1, &mut rng).unwrap();
    let obs = measure_lowrank_phases(&map, &x).unwrap();

    let stacked = ComplexMatrix::from_fn(30 * 3, 3, |i, j| map.atom(i / 3).get(i % 3, j)).unwrap();
    let mat_path = dir.join("atoms.csv");
    let z_path = dir.join("z.csv");
    let xhat_path = dir.join("xhat.csv");
    write_complex_matrix(&mat_path, &stacked).unwrap();
    write_phase_observation(&z_path, &obs).unwrap();

    let out = pocs_cmd(&[
        "recover",
        "--matrix",
        mat_path.to_str().unwrap(),
        "--phases",
        z_path.to_str().unwrap(),
        "--mode",
        "lowrank",
        "--n1",
        "3",
        "--out",
        xhat_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let xhat = read_complex_matrix(&xhat_path).unwrap();
    assert!(direction_error_matrix(&xhat, &x) < 1e-3);

    // Without --n1 the stacked matrix cannot be split.
    let out = pocs_cmd(&[
        "recover",
        "--matrix",
        mat_path.to_str().unwrap(),
        "--phases",
        z_path.to_str().unwrap(),
        "--mode",
        "lowrank",
        "--out",
        dir.join("nope.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
}

#[test]
fn malformed_phases_exit_two() {
    let dir = scratch_dir();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let ens = SensingEnsemble::sample(6, 3, &mut rng).unwrap();
    let phi_path = dir.join("phi.csv");
    write_complex_matrix(&phi_path, ens.phi()).unwrap();
    let z_path = dir.join("z.csv");
    std::fs::write(&z_path, "# garbled 6 1\n1.0,0.0\n").unwrap();
    let out = pocs_cmd(&[
        "recover",
        "--matrix",
        phi_path.to_str().unwrap(),
        "--phases",
        z_path.to_str().unwrap(),
        "--mode",
        "complex",
        "--out",
        dir.join("xhat.csv").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn diagnose_kappa_matches_constant() {
    let dir = scratch_dir();
    let csv = dir.join("kappa.csv");
    let out = pocs_cmd(&[
        "diagnose",
        "--probe",
        "kappa",
        "--samples",
        "20000",
        "--seed",
        "0",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "probe,parameters,value,samples,seed");
    let row = lines.next().unwrap();
    let fields: Vec<&str> = row.split(',').collect();
    assert_eq!(fields[0], "kappa");
    assert_eq!(fields[1], "samples=20000");
    assert_eq!(fields[3], "20000");
    assert_eq!(fields[4], "0");
    let value: f64 = fields[2].parse().unwrap();
    assert!((value - kappa()).abs() < 0.02);
}

#[test]
fn diagnose_ric_reports_parameters() {
    let dir = scratch_dir();
    let csv = dir.join("ric.csv");
    let out = pocs_cmd(&[
        "diagnose",
        "--probe",
        "ric",
        "--m",
        "60",
        "--n",
        "8",
        "--s",
        "2",
        "--order",
        "3",
        "--samples",
        "200",
        "--seed",
        "1",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let row = text.lines().nth(1).unwrap();
    assert!(row.starts_with("ric,m=60;n=8;s=2;order=3;that="));
    let fields: Vec<&str> = row.split(',').collect();
    let value: f64 = fields[2].parse().unwrap();
    assert!(value.is_finite() && value > 0.0);
}
