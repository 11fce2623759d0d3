//! Least squares, ridge and lasso on standardised features.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::linalg::{dot, gram, sym_eigen, Standardizer, SymEigen};
use super::{penalty_grid, Penalty};
use crate::data::Matrix;
use crate::math;
use crate::seed::SeedSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    /// Coefficients on the original feature scale.
    pub coef: Vec<f64>,
    pub rank_deficient: bool,
}

impl LinearModel {
    pub fn predict_row(&self, x: &[f64]) -> f64 {
        self.intercept + dot(&self.coef, x)
    }

    fn from_standardized(std: &Standardizer, y_mean: f64, beta: &[f64], rank_deficient: bool) -> Self {
        let coef: Vec<f64> = beta
            .iter()
            .enumerate()
            .map(|(j, b)| if std.constant[j] { 0.0 } else { b / std.scales[j] })
            .collect();
        let intercept = y_mean - dot(&coef, &std.means);
        LinearModel {
            intercept,
            coef,
            rank_deficient,
        }
    }
}

struct Prepared {
    std: Standardizer,
    xs: Matrix,
    y_mean: f64,
    yc: Vec<f64>,
}

fn prepare(x: &Matrix, y: &[f64]) -> Prepared {
    let std = Standardizer::fit(x);
    let xs = std.transform(x);
    let y_mean = y.iter().sum::<f64>() / y.len() as f64;
    let yc = y.iter().map(|v| v - y_mean).collect();
    Prepared { std, xs, y_mean, yc }
}

/// Solves `(XᵀX + λI) β = Xᵀy` through the eigenbasis of `XᵀX`. Directions
/// with eigenvalue below the rank tolerance are dropped when `λ = 0`, which
/// yields the minimum-norm least-squares solution.
fn solve_spectral(e: &SymEigen, xty: &[f64], lambda: f64) -> (Vec<f64>, bool) {
    let d = xty.len();
    let max_ev = e.values.iter().cloned().fold(0.0f64, f64::max);
    let tol = max_ev * 1e-10 * d.max(1) as f64;
    let mut beta = alloc::vec![0.0; d];
    let mut deficient = false;
    for k in 0..d {
        let ev = e.values[k];
        if lambda == 0.0 && ev <= tol {
            deficient = true;
            continue;
        }
        let denom = ev.max(0.0) + lambda;
        if denom <= 0.0 {
            continue;
        }
        let c = dot(&e.vectors[k], xty) / denom;
        for (b, v) in beta.iter_mut().zip(&e.vectors[k]) {
            *b += c * v;
        }
    }
    (beta, deficient)
}

pub fn fit_ols(x: &Matrix, y: &[f64]) -> LinearModel {
    let p = prepare(x, y);
    let (g, xty) = gram(&p.xs, &p.yc);
    let e = sym_eigen(&g, x.cols());
    let (beta, deficient) = solve_spectral(&e, &xty, 0.0);
    let deficient = deficient || p.std.constant.iter().any(|&c| c);
    LinearModel::from_standardized(&p.std, p.y_mean, &beta, deficient)
}

/// Fold id per row: a seeded shuffle dealt round-robin.
pub(crate) fn fold_ids(n: usize, folds: usize, seed: SeedSpec) -> Vec<usize> {
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.derive("cv-folds", 0).rng());
    let mut ids = alloc::vec![0; n];
    for (pos, &i) in perm.iter().enumerate() {
        ids[i] = pos % folds;
    }
    ids
}

/// Mean held-out MSE for every grid value; `fit_path` maps a training fold
/// to one model per grid value.
fn cv_errors<F>(x: &Matrix, y: &[f64], folds: usize, seed: SeedSpec, grid: &[f64], fit_path: F) -> Vec<f64>
where
    F: Fn(&Matrix, &[f64], &[f64]) -> Vec<LinearModel>,
{
    let ids = fold_ids(x.rows(), folds, seed);
    let mut err = alloc::vec![0.0; grid.len()];
    for f in 0..folds {
        let tr: Vec<usize> = (0..x.rows()).filter(|&i| ids[i] != f).collect();
        let te: Vec<usize> = (0..x.rows()).filter(|&i| ids[i] == f).collect();
        let xt = x.select_rows(&tr);
        let yt: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
        let models = fit_path(&xt, &yt, grid);
        for (g, m) in models.iter().enumerate() {
            let s: f64 = te
                .iter()
                .map(|&i| {
                    let r = m.predict_row(x.row(i)) - y[i];
                    r * r
                })
                .sum();
            err[g] += s / x.rows() as f64;
        }
    }
    err
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &e) in v.iter().enumerate() {
        if e < v[best] {
            best = i;
        }
    }
    best
}

fn ridge_path(x: &Matrix, y: &[f64], grid: &[f64]) -> Vec<LinearModel> {
    let p = prepare(x, y);
    let (g, xty) = gram(&p.xs, &p.yc);
    let e = sym_eigen(&g, x.cols());
    grid.iter()
        .map(|&l| {
            let (beta, _) = solve_spectral(&e, &xty, l);
            LinearModel::from_standardized(&p.std, p.y_mean, &beta, false)
        })
        .collect()
}

fn select_penalty<F>(x: &Matrix, y: &[f64], penalty: Penalty, seed: SeedSpec, path: F) -> f64
where
    F: Fn(&Matrix, &[f64], &[f64]) -> Vec<LinearModel>,
{
    match penalty {
        Penalty::Fixed(l) => l,
        Penalty::Cv { folds } => {
            let grid = penalty_grid();
            if x.rows() < 2 * folds {
                return grid[grid.len() / 2];
            }
            grid[argmin(&cv_errors(x, y, folds, seed, &grid, path))]
        }
    }
}

/// Ridge: `min ||y - Xβ||² + λ||β||²` on standardised columns.
pub fn fit_ridge(x: &Matrix, y: &[f64], penalty: Penalty, seed: SeedSpec) -> (LinearModel, f64) {
    let lambda = select_penalty(x, y, penalty, seed, ridge_path);
    let model = ridge_path(x, y, &[lambda]).pop().expect("one model");
    (model, lambda)
}

const LASSO_MAX_SWEEPS: usize = 1000;
const LASSO_TOL: f64 = 1e-7;

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

/// Coordinate descent for `(1/2n)||y - Xβ||² + λ||β||₁`, warm-started along
/// the grid from the largest penalty down. Returns models in grid order.
fn lasso_path(x: &Matrix, y: &[f64], grid: &[f64]) -> Vec<LinearModel> {
    let p = prepare(x, y);
    let (n, d) = (x.rows(), x.cols());
    let cols: Vec<Vec<f64>> = (0..d).map(|j| p.xs.column(j)).collect();
    let norms: Vec<f64> = cols.iter().map(|c| dot(c, c) / n as f64).collect();
    let mut beta = alloc::vec![0.0; d];
    let mut resid = p.yc.clone();
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[b].total_cmp(&grid[a]));
    let mut out: Vec<Option<LinearModel>> = alloc::vec![None; grid.len()];
    for &gi in &order {
        let lambda = grid[gi];
        for _ in 0..LASSO_MAX_SWEEPS {
            let mut max_delta = 0.0f64;
            for j in 0..d {
                if norms[j] == 0.0 {
                    continue;
                }
                let old = beta[j];
                let rho = dot(&cols[j], &resid) / n as f64 + norms[j] * old;
                let new = soft_threshold(rho, lambda) / norms[j];
                if new != old {
                    let delta = new - old;
                    for (r, c) in resid.iter_mut().zip(&cols[j]) {
                        *r -= delta * c;
                    }
                    beta[j] = new;
                    max_delta = max_delta.max(math::abs(delta));
                }
            }
            if max_delta < LASSO_TOL {
                break;
            }
        }
        out[gi] = Some(LinearModel::from_standardized(&p.std, p.y_mean, &beta, false));
    }
    out.into_iter().map(|m| m.expect("every grid point fitted")).collect()
}

pub fn fit_lasso(x: &Matrix, y: &[f64], penalty: Penalty, seed: SeedSpec) -> (LinearModel, f64) {
    let lambda = select_penalty(x, y, penalty, seed, lasso_path);
    let model = lasso_path(x, y, &[lambda]).pop().expect("one model");
    (model, lambda)
}
