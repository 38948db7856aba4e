#![allow(dead_code)]

use regensim::ctmc::CtmcModel;

/// `Q = [[-1, 1], [2, -2]]`, stationary law `(2/3, 1/3)`.
pub fn two_state() -> CtmcModel {
    CtmcModel::from_rows(&[&[-1.0, 1.0], &[2.0, -2.0]]).unwrap()
}

/// Non-reversible three-state chain.
pub fn three_state() -> CtmcModel {
    CtmcModel::from_rows(&[&[-2.0, 1.0, 1.0], &[1.0, -3.0, 2.0], &[0.5, 0.5, -1.0]]).unwrap()
}

/// Directed three-cycle with unit rates.
pub fn cycle3() -> CtmcModel {
    CtmcModel::from_rows(&[&[-1.0, 1.0, 0.0], &[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0]]).unwrap()
}

/// Birth–death chain on four states, up-rate 1, down-rate 2.
pub fn birth_death4() -> CtmcModel {
    CtmcModel::from_rows(&[
        &[-1.0, 1.0, 0.0, 0.0],
        &[2.0, -3.0, 1.0, 0.0],
        &[0.0, 2.0, -3.0, 1.0],
        &[0.0, 0.0, 2.0, -2.0],
    ])
    .unwrap()
}

/// Dense six-state generator with uneven rates.
pub fn dense6() -> CtmcModel {
    let n = 6;
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for (j, r) in row.iter_mut().enumerate() {
            if i != j {
                *r = 0.1 + 0.3 * ((7 * i + 3 * j) % 5) as f64;
            }
        }
        row[i] = -row.iter().sum::<f64>();
    }
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    CtmcModel::from_rows(&refs).unwrap()
}

/// The five oracle models with a test function each.
pub fn oracle_models() -> Vec<(&'static str, CtmcModel, Vec<f64>)> {
    vec![
        ("two-state", two_state(), vec![1.0, 0.0]),
        ("three-state", three_state(), vec![1.0, -2.0, 0.5]),
        ("cycle", cycle3(), vec![0.0, 1.0, 3.0]),
        ("birth-death", birth_death4(), vec![0.0, 1.0, 2.0, 3.0]),
        ("dense-6", dense6(), vec![1.0, -1.0, 2.0, 0.0, 0.5, -3.0]),
    ]
}
