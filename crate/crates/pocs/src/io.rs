//! CSV-based file formats. Complex data is written one entry as `re,im`
//! (`# complex <m> <n>` header, rows of 2n floats); real data uses
//! `# real <p> <q>`. Floats are printed with shortest round-trip formatting,
//! so write/read cycles are bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, ComplexVector, RealMatrix, RealVector};
use crate::reformulation::{ReformulatedSystem, SystemCase};
use crate::sensing::PhaseObservation;

pub(crate) fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub(crate) fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Lines of a CSV file with 1-based numbers, blank lines dropped.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_float(path: &Path, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok
        .trim()
        .parse()
        .map_err(|_| parse_err(path, line, format!("expected a float, got {tok:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value {tok:?}")));
    }
    Ok(v)
}

/// Header line `# <magic> <rows> <cols>`.
fn parse_header(path: &Path, line_no: usize, line: &str, magic: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = line.split_whitespace().collect();
    let bad = || parse_err(path, line_no, format!("expected header `# {magic} <rows> <cols>`, got {line:?}"));
    if parts.len() != 4 || parts[0] != "#" || parts[1] != magic {
        return Err(bad());
    }
    let rows: usize = parts[2].parse().map_err(|_| bad())?;
    let cols: usize = parts[3].parse().map_err(|_| bad())?;
    Ok((rows, cols))
}

/// Reads a CSV body: the magic header first, then `rows` data rows of
/// `floats_per_row` values. Other `#` lines are collected for the caller.
fn read_grid(path: &Path, magic: &str) -> Result<(usize, usize, Vec<f64>, Vec<String>)> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut lines = numbered_lines(&text);
    let (first_no, first) = lines
        .next()
        .ok_or_else(|| parse_err(path, 1, "empty file"))?;
    if !first.starts_with('#') {
        return Err(parse_err(path, first_no, "missing header line"));
    }
    let (rows, cols) = parse_header(path, first_no, first, magic)?;
    if rows == 0 || cols == 0 {
        return Err(parse_err(path, first_no, "header declares an empty shape"));
    }
    let per_row = if magic == "complex" { 2 * cols } else { cols };
    let mut data = Vec::with_capacity(rows * per_row);
    let mut comments = Vec::new();
    let mut seen = 0usize;
    for (no, line) in lines {
        if line.starts_with('#') {
            comments.push(line.to_string());
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != per_row {
            return Err(parse_err(
                path,
                no,
                format!("expected {per_row} values per row, got {}", toks.len()),
            ));
        }
        for tok in toks {
            data.push(parse_float(path, no, tok)?);
        }
        seen += 1;
        if seen > rows {
            return Err(parse_err(path, no, format!("more than {rows} data rows")));
        }
    }
    if seen != rows {
        return Err(parse_err(
            path,
            text.lines().count(),
            format!("expected {rows} data rows, found {seen}"),
        ));
    }
    Ok((rows, cols, data, comments))
}

pub fn write_complex_matrix(path: impl AsRef<Path>, mat: &ComplexMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("# complex {} {}\n", mat.rows(), mat.cols());
    for i in 0..mat.rows() {
        for j in 0..mat.cols() {
            let v = mat.get(i, j);
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{},{}", v.re, v.im);
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_complex_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let path = path.as_ref();
    let (rows, cols, data, _) = read_grid(path, "complex")?;
    let entries: Vec<Complex64> = data
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    ComplexMatrix::new(rows, cols, entries)
}

pub fn write_real_matrix(path: impl AsRef<Path>, mat: &RealMatrix) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("# real {} {}\n", mat.rows(), mat.cols());
    write_real_rows(&mut out, mat);
    fs::write(path, out).map_err(|e| io_err(path, e))
}

fn write_real_rows(out: &mut String, mat: &RealMatrix) {
    for i in 0..mat.rows() {
        for j in 0..mat.cols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", mat.get(i, j));
        }
        out.push('\n');
    }
}

pub fn read_real_matrix(path: impl AsRef<Path>) -> Result<RealMatrix> {
    let path = path.as_ref();
    let (rows, cols, data, _) = read_grid(path, "real")?;
    RealMatrix::new(rows, cols, data)
}

/// Vectors are stored as single-column matrices.
pub fn write_complex_vector(path: impl AsRef<Path>, v: &ComplexVector) -> Result<()> {
    let mat = ComplexMatrix::new(v.len(), 1, v.as_slice().to_vec())?;
    write_complex_matrix(path, &mat)
}

pub fn read_complex_vector(path: impl AsRef<Path>) -> Result<ComplexVector> {
    let path = path.as_ref();
    let mat = read_complex_matrix(path)?;
    if mat.cols() != 1 {
        return Err(parse_err(
            path,
            1,
            format!("expected a single-column vector file, got {} columns", mat.cols()),
        ));
    }
    ComplexVector::new((0..mat.rows()).map(|i| mat.get(i, 0)).collect())
}

pub fn write_real_vector(path: impl AsRef<Path>, v: &RealVector) -> Result<()> {
    if !v.iter().all(|x| x.is_finite()) {
        return Err(Error::NonFinite { what: "vector to write" });
    }
    if v.is_empty() {
        return Err(Error::Empty { what: "vector to write" });
    }
    let mat = RealMatrix::new(v.len(), 1, v.as_slice().to_vec())?;
    write_real_matrix(path, &mat)
}

pub fn read_real_vector(path: impl AsRef<Path>) -> Result<RealVector> {
    let path = path.as_ref();
    let mat = read_real_matrix(path)?;
    if mat.cols() != 1 {
        return Err(parse_err(
            path,
            1,
            format!("expected a single-column vector file, got {} columns", mat.cols()),
        ));
    }
    Ok(RealVector::from_fn(mat.rows(), |i, _| mat.get(i, 0)))
}

/// Observation files are complex vectors plus a second header recording the
/// corruption flag and noise bound: `# corrupted <0|1> tau0 <float>`.
/// Files without that header are read as clean observations.
pub fn write_phase_observation(path: impl AsRef<Path>, obs: &PhaseObservation) -> Result<()> {
    let path = path.as_ref();
    let mut out = format!("# complex {} 1\n", obs.len());
    let _ = writeln!(
        out,
        "# corrupted {} tau0 {}",
        u8::from(obs.corrupted()),
        obs.noise_bound()
    );
    for v in obs.phases().iter() {
        let _ = writeln!(out, "{},{}", v.re, v.im);
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_phase_observation(path: impl AsRef<Path>) -> Result<PhaseObservation> {
    let path = path.as_ref();
    let (rows, cols, data, comments) = read_grid(path, "complex")?;
    if cols != 1 {
        return Err(parse_err(
            path,
            1,
            format!("expected a single-column observation file, got {cols} columns"),
        ));
    }
    let entries: Vec<Complex64> = data
        .chunks_exact(2)
        .map(|c| Complex64::new(c[0], c[1]))
        .collect();
    debug_assert_eq!(entries.len(), rows);
    let vec = ComplexVector::new(entries)?;

    let mut meta: Option<(bool, f64)> = None;
    for line in &comments {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() >= 2 && parts[0] == "#" && parts[1] == "corrupted" {
            let bad =
                || parse_err(path, 2, format!("expected `# corrupted <0|1> tau0 <float>`, got {line:?}"));
            if parts.len() != 5 || parts[3] != "tau0" {
                return Err(bad());
            }
            let flag = match parts[2] {
                "0" => false,
                "1" => true,
                _ => return Err(bad()),
            };
            let tau0: f64 = parts[4].parse().map_err(|_| bad())?;
            meta = Some((flag, tau0));
        }
    }
    match meta {
        None | Some((false, _)) => {
            if let Some((false, tau0)) = meta {
                if tau0 != 0.0 {
                    return Err(parse_err(
                        path,
                        2,
                        format!("clean observation declares nonzero tau0 {tau0}"),
                    ));
                }
            }
            PhaseObservation::new_clean(vec)
        }
        Some((true, tau0)) => PhaseObservation::new_corrupted(vec, tau0),
    }
}

/// Reformulated systems are real matrices with a metadata header:
/// `# system case <tag> m <m> n <n> that <t_hat> kappa <kappa>`.
pub fn write_system(path: impl AsRef<Path>, sys: &ReformulatedSystem) -> Result<()> {
    let path = path.as_ref();
    let a = sys.matrix();
    let mut out = format!("# real {} {}\n", a.rows(), a.cols());
    let _ = writeln!(
        out,
        "# system case {} m {} n {} that {} kappa {}",
        sys.case().tag(),
        sys.m(),
        sys.n(),
        sys.t_hat(),
        sys.kappa()
    );
    write_real_rows(&mut out, a);
    fs::write(path, out).map_err(|e| io_err(path, e))
}

pub fn read_system(path: impl AsRef<Path>) -> Result<ReformulatedSystem> {
    let path = path.as_ref();
    let (rows, cols, data, comments) = read_grid(path, "real")?;
    let a = RealMatrix::new(rows, cols, data)?;
    for line in &comments {
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() >= 2 && parts[0] == "#" && parts[1] == "system" {
            let bad = || {
                parse_err(
                    path,
                    2,
                    format!("expected `# system case <tag> m <m> n <n> that <f> kappa <f>`, got {line:?}"),
                )
            };
            if parts.len() != 12
                || parts[2] != "case"
                || parts[4] != "m"
                || parts[6] != "n"
                || parts[8] != "that"
                || parts[10] != "kappa"
            {
                return Err(bad());
            }
            let case = SystemCase::from_tag(parts[3])?;
            let m: usize = parts[5].parse().map_err(|_| bad())?;
            let n: usize = parts[7].parse().map_err(|_| bad())?;
            let t_hat: f64 = parts[9].parse().map_err(|_| bad())?;
            let kappa: f64 = parts[11].parse().map_err(|_| bad())?;
            return ReformulatedSystem::from_parts(a, case, m, n, t_hat, kappa);
        }
    }
    Err(parse_err(path, 2, "missing `# system ...` metadata header"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::sample_complex_gaussian;
    use crate::reformulation::{build_complex, build_real};
    use crate::sensing::{
        corrupt_phases, gen_sparse_signal, measure_phases, Field, NoiseModel, SensingEnsemble,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::atomic::{AtomicU64, Ordering};

    fn temp_path(tag: &str) -> std::path::PathBuf {
        static COUNTER: AtomicU64 = AtomicU64::new(0);
        let k = COUNTER.fetch_add(1, Ordering::Relaxed);
        std::env::temp_dir().join(format!("pocs-io-{}-{tag}-{k}.csv", std::process::id()))
    }

    #[test]
    fn complex_matrix_round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = sample_complex_gaussian(5, 3, &mut rng).unwrap();
        let path = temp_path("cmat");
        write_complex_matrix(&path, &m).unwrap();
        let back = read_complex_matrix(&path).unwrap();
        assert_eq!(m.matrix(), back.matrix());
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn real_matrix_round_trip_is_bit_exact() {
        let m = RealMatrix::new(2, 3, vec![1.5, -0.0, 3e-300, 1e300, -7.25, 0.1]).unwrap();
        let path = temp_path("rmat");
        write_real_matrix(&path, &m).unwrap();
        let back = read_real_matrix(&path).unwrap();
        for i in 0..2 {
            for j in 0..3 {
                assert_eq!(m.get(i, j).to_bits(), back.get(i, j).to_bits());
            }
        }
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn vector_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = gen_sparse_signal(9, 3, Field::Complex, &mut rng).unwrap();
        let path = temp_path("cvec");
        write_complex_vector(&path, &v).unwrap();
        let back = read_complex_vector(&path).unwrap();
        assert_eq!(v.vector(), back.vector());
        let _ = fs::remove_file(&path);

        let rv = RealVector::from_vec(vec![0.25, -3.5, 11.0]);
        let path = temp_path("rvec");
        write_real_vector(&path, &rv).unwrap();
        assert_eq!(read_real_vector(&path).unwrap(), rv);
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn observation_round_trips_keep_flags() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ens = SensingEnsemble::sample(6, 4, &mut rng).unwrap();
        let x = gen_sparse_signal(4, 2, Field::Complex, &mut rng).unwrap();
        let clean = measure_phases(&ens, &x).unwrap();
        let path = temp_path("obs-clean");
        write_phase_observation(&path, &clean).unwrap();
        let back = read_phase_observation(&path).unwrap();
        assert!(!back.corrupted());
        assert_eq!(back.phases().vector(), clean.phases().vector());
        let _ = fs::remove_file(&path);

        let noisy = corrupt_phases(&clean, 0.05, NoiseModel::Disk, &mut rng).unwrap();
        let path = temp_path("obs-noisy");
        write_phase_observation(&path, &noisy).unwrap();
        let back = read_phase_observation(&path).unwrap();
        assert!(back.corrupted());
        assert_eq!(back.noise_bound(), 0.05);
        assert_eq!(back.phases().vector(), noisy.phases().vector());
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn plain_vector_file_reads_as_clean_observation() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let ens = SensingEnsemble::sample(5, 3, &mut rng).unwrap();
        let x = gen_sparse_signal(3, 1, Field::Complex, &mut rng).unwrap();
        let obs = measure_phases(&ens, &x).unwrap();
        let path = temp_path("obs-plain");
        write_complex_vector(&path, obs.phases()).unwrap();
        let back = read_phase_observation(&path).unwrap();
        assert!(!back.corrupted());
        let _ = fs::remove_file(&path);
    }

    #[test]
    fn system_round_trip_preserves_metadata() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let ens = SensingEnsemble::sample(8, 5, &mut rng).unwrap();
        let x = gen_sparse_signal(5, 2, Field::Complex, &mut rng).unwrap();
        let obs = measure_phases(&ens, &x).unwrap();
        for sys in [build_real(&obs, &ens).unwrap(), build_complex(&obs, &ens).unwrap()] {
            let path = temp_path("sys");
            write_system(&path, &sys).unwrap();
            let back = read_system(&path).unwrap();
            assert_eq!(back.case(), sys.case());
            assert_eq!(back.m(), sys.m());
            assert_eq!(back.n(), sys.n());
            assert_eq!(back.t_hat().to_bits(), sys.t_hat().to_bits());
            assert_eq!(back.matrix().matrix(), sys.matrix().matrix());
            let _ = fs::remove_file(&path);
        }
    }

    #[test]
    fn rejects_malformed_inputs() {
        let cases: &[(&str, &str)] = &[
            ("bad-magic", "# imaginary 2 2\n1,2\n3,4\n"),
            ("jagged", "# real 2 2\n1,2\n3\n"),
            ("nonfinite", "# real 1 2\n1,nan\n"),
            ("short", "# real 3 1\n1\n2\n"),
            ("long", "# real 1 1\n1\n2\n"),
            ("noheader", "1,2\n3,4\n"),
            ("emptyshape", "# real 0 2\n"),
            ("badflag", "# complex 1 1\n# corrupted 2 tau0 0\n1,0\n"),
        ];
        for (tag, text) in cases {
            let path = temp_path(tag);
            fs::write(&path, text).unwrap();
            let failed = if tag.starts_with("badflag") {
                read_phase_observation(&path).is_err()
            } else {
                read_real_matrix(&path).is_err() && read_complex_matrix(&path).is_err()
            };
            assert!(failed, "case {tag} should fail");
            let _ = fs::remove_file(&path);
        }
    }

    #[test]
    fn extra_comment_lines_are_skipped() {
        let path = temp_path("comments");
        fs::write(&path, "# real 2 1\n# produced by a test\n1.5\n# midstream note\n2.5\n").unwrap();
        let m = read_real_matrix(&path).unwrap();
        assert_eq!((m.get(0, 0), m.get(1, 0)), (1.5, 2.5));
        let _ = fs::remove_file(&path);
    }
}
