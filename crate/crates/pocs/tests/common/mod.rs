use std::path::PathBuf;

use pocs::{RealMatrix, RealVector};

/// Exhaustive basis-pursuit reference for tiny systems: every support of at
/// most `max_support` columns is solved by least squares, and the feasible
/// candidate (residual below 1e-9) with the smallest l1 norm wins. Returns
/// the padded solution and its l1 norm, or None when nothing is feasible.
pub fn brute_force_basis_pursuit(
    a: &RealMatrix,
    b: &RealVector,
    max_support: usize,
) -> Option<(RealVector, f64)> {
    let q = a.cols();
    let mut best: Option<(RealVector, f64)> = None;
    for size in 1..=max_support.min(q) {
        let mut support: Vec<usize> = (0..size).collect();
        loop {
            let sub = RealMatrix::from_fn(a.rows(), size, |r, c| a.get(r, support[c])).unwrap();
            let svd = sub.matrix().clone().svd(true, true);
            if let Ok(coef) = svd.solve(b, 1e-12) {
                let resid = (sub.matrix() * &coef - b).norm();
                if resid <= 1e-9 {
                    let l1: f64 = coef.iter().map(|v| v.abs()).sum();
                    if best.as_ref().map(|(_, bl1)| l1 < *bl1).unwrap_or(true) {
                        let mut full = RealVector::zeros(q);
                        for (c, &j) in support.iter().enumerate() {
                            full[j] = coef[c];
                        }
                        best = Some((full, l1));
                    }
                }
            }
            if !next_combination(&mut support, q) {
                break;
            }
        }
    }
    best
}

fn next_combination(support: &mut [usize], q: usize) -> bool {
    let k = support.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if support[i] < q - (k - i) {
            support[i] += 1;
            for j in i + 1..k {
                support[j] = support[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Directory where acceptance runs leave their sweep CSVs.
pub fn record_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../target/acceptance");
    std::fs::create_dir_all(&dir).expect("create acceptance record dir");
    dir
}
