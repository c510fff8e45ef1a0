#![allow(dead_code)]

use eitmag::cli::{self, RunConfig, Settings};
use nalgebra::Vector2;

/// Runs the CLI in-process, returning (exit code, stdout, stderr).
pub fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("eitmag").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

/// Default configuration with `key=value` overrides applied.
pub fn config_with(overrides: &[&str]) -> RunConfig {
    let mut s = Settings::default();
    for o in overrides {
        s.set_pair(o).unwrap();
    }
    s.resolve().unwrap()
}

/// Reads `key = value` lines into pairs.
pub fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

pub fn kv<'a>(pairs: &'a [(String, String)], key: &str) -> &'a str {
    pairs
        .iter()
        .find(|(k, _)| k == key)
        .map(|(_, v)| v.as_str())
        .unwrap_or_else(|| panic!("missing {key}"))
}

/// Least-squares slope of y against x.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Magnetostatic relaxation solver for a line current inside a permeable
/// cylinder, used as an independent check on the image-current model.
///
/// Solves `-div(nu grad A) = mu0 I delta` on a square finite-volume grid,
/// `nu = 1` inside the cylinder and `1 / mu_r` in a concentric shell whose
/// outer surface is held at `A = 0`. Face conductances come from subsampling: harmonic mean along
/// the link, arithmetic mean across it.
pub struct RelaxationOracle {
    h: f64,
    half: usize,
    n: usize,
    a: Vec<f64>,
    pub iterations: usize,
    pub relative_residual: f64,
}

pub struct OracleSetup {
    /// Grid spacing, metres.
    pub h: f64,
    /// Half-width of the box in grid cells.
    pub half_cells: usize,
    /// Wire position in grid cells from the box centre.
    pub wire_cells: (i64, i64),
    pub current: f64,
    pub radius: f64,
    pub shield_center: Vector2<f64>,
    /// Outer radius of the permeable shell; must fit inside the box.
    pub outer_radius: f64,
    pub mu_r: f64,
}

const SUB: usize = 8;
const MU0: f64 = 4.0e-7 * std::f64::consts::PI;

impl RelaxationOracle {
    pub fn solve(s: &OracleSetup) -> Self {
        let n = 2 * s.half_cells + 1;
        let half = s.half_cells;
        let h = s.h;
        let pos = |i: usize| (i as f64 - half as f64) * h;
        let nu = |x: f64, y: f64| {
            if (Vector2::new(x, y) - s.shield_center).norm() < s.radius {
                1.0
            } else {
                1.0 / s.mu_r
            }
        };
        // kx[j*n+i]: link (i,j)-(i+1,j); ky[j*n+i]: link (i,j)-(i,j+1)
        let link = |x0: f64, y0: f64, along_x: bool| {
            let mut parallel = 0.0;
            for t in 0..SUB {
                let across = (t as f64 + 0.5) / SUB as f64 - 0.5;
                let mut series = 0.0;
                for u in 0..SUB {
                    let along = (u as f64 + 0.5) / SUB as f64;
                    let (x, y) = if along_x {
                        (x0 + along * h, y0 + across * h)
                    } else {
                        (x0 + across * h, y0 + along * h)
                    };
                    series += 1.0 / nu(x, y);
                }
                parallel += SUB as f64 / series;
            }
            parallel / SUB as f64
        };
        let mut kx = vec![0.0; n * n];
        let mut ky = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                if i + 1 < n {
                    kx[j * n + i] = link(pos(i), pos(j), true);
                }
                if j + 1 < n {
                    ky[j * n + i] = link(pos(i), pos(j), false);
                }
            }
        }
        assert!(s.outer_radius + s.shield_center.abs().max() < (half as f64 - 1.0) * h);
        let interior =
            |i: usize, j: usize| (Vector2::new(pos(i), pos(j)) - s.shield_center).norm() < s.outer_radius;
        let apply = |x: &[f64], y: &mut [f64]| {
            for j in 0..n {
                for i in 0..n {
                    let c = j * n + i;
                    if !interior(i, j) {
                        y[c] = 0.0;
                        continue;
                    }
                    let mut acc = 0.0;
                    let mut nb = |k: f64, o: usize| {
                        acc += k * (x[c] - if interior(o % n, o / n) { x[o] } else { 0.0 });
                    };
                    nb(kx[c], c + 1);
                    nb(kx[c - 1], c - 1);
                    nb(ky[c], c + n);
                    nb(ky[c - n], c - n);
                    y[c] = acc;
                }
            }
        };
        let mut diag = vec![1.0; n * n];
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                let c = j * n + i;
                if interior(i, j) {
                    diag[c] = kx[c] + kx[c - 1] + ky[c] + ky[c - n];
                }
            }
        }

        let mut b = vec![0.0; n * n];
        let wi = (half as i64 + s.wire_cells.0) as usize;
        let wj = (half as i64 + s.wire_cells.1) as usize;
        b[wj * n + wi] = MU0 * s.current;

        // Jacobi-preconditioned conjugate gradient
        let dot = |u: &[f64], v: &[f64]| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        let mut x = vec![0.0; n * n];
        let mut r = b.clone();
        let mut z: Vec<f64> = r.iter().zip(&diag).map(|(r, d)| r / d).collect();
        let mut p = z.clone();
        let mut ap = vec![0.0; n * n];
        let mut rz = dot(&r, &z);
        let bnorm = dot(&b, &b).sqrt();
        let mut iterations = 0;
        let mut rel = 1.0;
        while iterations < 200_000 {
            apply(&p, &mut ap);
            let alpha = rz / dot(&p, &ap);
            for k in 0..n * n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            iterations += 1;
            rel = dot(&r, &r).sqrt() / bnorm;
            if rel < 1e-11 {
                break;
            }
            for k in 0..n * n {
                z[k] = r[k] / diag[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n * n {
                p[k] = z[k] + beta * p[k];
            }
        }
        RelaxationOracle {
            h,
            half,
            n,
            a: x,
            iterations,
            relative_residual: rel,
        }
    }

    fn node_field(&self, i: usize, j: usize) -> Vector2<f64> {
        let n = self.n;
        let a = |i: usize, j: usize| self.a[j * n + i];
        let dadx = (a(i + 1, j) - a(i - 1, j)) / (2.0 * self.h);
        let dady = (a(i, j + 1) - a(i, j - 1)) / (2.0 * self.h);
        Vector2::new(dady, -dadx)
    }

    /// Field in tesla at a point, bilinear between node fields.
    pub fn field(&self, p: Vector2<f64>) -> Vector2<f64> {
        let fx = p.x / self.h + self.half as f64;
        let fy = p.y / self.h + self.half as f64;
        let (i, j) = (fx.floor() as usize, fy.floor() as usize);
        let (tx, ty) = (fx - i as f64, fy - j as f64);
        self.node_field(i, j) * ((1.0 - tx) * (1.0 - ty))
            + self.node_field(i + 1, j) * (tx * (1.0 - ty))
            + self.node_field(i, j + 1) * ((1.0 - tx) * ty)
            + self.node_field(i + 1, j + 1) * (tx * ty)
    }
}
