//! Derivative-free reference solution of the Max-Det problem for two or
//! three components: a feasibility-filtered grid followed by pattern search,
//! first over `D` directly and then over a factor `K - D = L L^T` in which
//! the semidefinite constraint disappears. Feasibility uses principal minors
//! only, so it shares no code path with the barrier solver.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariance::{DistortionConstraints, SymmetricMatrix};
use crate::error::{invalid, Error, Result};

const MINOR_TOL: f64 = 1e-13;
const MAX_SWEEPS: usize = 5000;

/// Reference RDF in nats for `n in {2, 3}`. `resolution` is the coarse grid
/// spacing relative to each constraint (clamped to `[1e-3, 0.5]`).
pub fn brute_force_rdf(k: &SymmetricMatrix, e: &DistortionConstraints, resolution: f64) -> Result<f64> {
    let n = k.n();
    if !(2..=3).contains(&n) {
        return Err(invalid("n", format!("brute force supports n in {{2, 3}}, got {n}")));
    }
    if e.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: e.len(),
        });
    }
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(invalid("resolution", "must be positive"));
    }
    let kk = k.to_rows();
    let det_k = det(&kk);
    if det_k <= 0.0 {
        return Err(Error::NotPositiveDefinite { what: "covariance" });
    }
    let problem = Problem {
        k: kk,
        e: e.values().to_vec(),
    };
    let res = resolution.clamp(1e-3, 0.5);

    let (mut best_x, mut best) = problem.grid_search(res);
    if best == f64::NEG_INFINITY {
        // a small multiple of the identity is always strictly feasible
        let mut t = 0.5 * problem.e.iter().copied().fold(f64::INFINITY, f64::min);
        loop {
            let x = problem.pack_scaled_identity(t);
            if let Some(v) = problem.value(&x) {
                best_x = x;
                best = v;
                break;
            }
            t *= 0.5;
        }
    }
    let best = pattern_search(|x| problem.value(x), &mut best_x, best, res);
    let factored = problem.factor_search(&best_x, res);
    Ok(0.5 * (det_k.ln() - best.max(factored)))
}

struct Problem {
    k: Vec<Vec<f64>>,
    e: Vec<f64>,
}

fn det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        3 => {
            m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
                + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
        }
        _ => unreachable!("n <= 3"),
    }
}

/// Cholesky factor of a small symmetric positive semidefinite matrix; pivots
/// down to `-1e-10` are treated as zero.
fn cholesky(a: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|t| l[i][t] * l[j][t]).sum();
            if i == j {
                let r = a[i][i] - s;
                if r < -1e-10 {
                    return None;
                }
                l[i][i] = r.max(0.0).sqrt();
            } else {
                l[i][j] = if l[j][j] > 1e-9 { (a[i][j] - s) / l[j][j] } else { 0.0 };
            }
        }
    }
    Some(l)
}

fn principal(m: &[Vec<f64>], idx: &[usize]) -> Vec<Vec<f64>> {
    idx.iter().map(|&i| idx.iter().map(|&j| m[i][j]).collect()).collect()
}

fn subsets(n: usize) -> Vec<Vec<usize>> {
    (1..(1usize << n))
        .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
        .collect()
}

impl Problem {
    fn n(&self) -> usize {
        self.e.len()
    }

    /// Variables: diagonal entries first, then off-diagonals in row-major
    /// upper-triangle order.
    fn unpack(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n();
        let upper = |i: usize, j: usize| {
            if i == j {
                x[i]
            } else {
                x[n + i * n - i * (i + 1) / 2 + j - i - 1]
            }
        };
        (0..n)
            .map(|i| (0..n).map(|j| upper(i.min(j), i.max(j))).collect())
            .collect()
    }

    fn pack_scaled_identity(&self, t: f64) -> Vec<f64> {
        let n = self.n();
        let mut x = vec![0.0; n * (n + 1) / 2];
        x[..n].fill(t);
        x
    }

    /// `ln det D` on the feasible set, `None` outside it.
    fn value(&self, x: &[f64]) -> Option<f64> {
        let n = self.n();
        if (0..n).any(|i| x[i] > self.e[i] || x[i] <= 0.0) {
            return None;
        }
        let d = self.unpack(x);
        // D ≻ 0: leading principal minors positive
        for size in 1..=n {
            let idx: Vec<usize> = (0..size).collect();
            if det(&principal(&d, &idx)) <= 0.0 {
                return None;
            }
        }
        // K - D ⪰ 0: every principal minor non-negative
        let gap: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| self.k[i][j] - d[i][j]).collect())
            .collect();
        for idx in subsets(n) {
            if det(&principal(&gap, &idx)) < -MINOR_TOL {
                return None;
            }
        }
        Some(det(&d).ln())
    }

    fn grid_search(&self, res: f64) -> (Vec<f64>, f64) {
        let n = self.n();
        let (diag_pts, off_pts) = if n == 2 {
            let g = (1.0 / res).round().min(200.0) as usize;
            (g, 2 * g)
        } else {
            (6, 8)
        };
        let mut best = (Vec::new(), f64::NEG_INFINITY);
        let diag_levels: Vec<Vec<f64>> = self
            .e
            .iter()
            .map(|ei| (1..=diag_pts).map(|s| ei * s as f64 / diag_pts as f64).collect())
            .collect();
        let mut x = vec![0.0; n * (n + 1) / 2];
        let mut diag_idx = vec![0usize; n];
        loop {
            for i in 0..n {
                x[i] = diag_levels[i][diag_idx[i]];
            }
            self.grid_offdiag(&mut x, n, off_pts, &mut best);
            // odometer over diagonal levels
            let mut carry = 0;
            while carry < n {
                diag_idx[carry] += 1;
                if diag_idx[carry] < diag_pts {
                    break;
                }
                diag_idx[carry] = 0;
                carry += 1;
            }
            if carry == n {
                break;
            }
        }
        best
    }

    fn grid_offdiag(&self, x: &mut [f64], n: usize, pts: usize, best: &mut (Vec<f64>, f64)) {
        let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
        let bounds: Vec<f64> = pairs.iter().map(|&(i, j)| (x[i] * x[j]).sqrt()).collect();
        let mut idx = vec![0usize; pairs.len()];
        loop {
            for (p, b) in bounds.iter().enumerate() {
                // interior points of (-b, b)
                x[n + p] = -b + 2.0 * b * (idx[p] as f64 + 0.5) / pts as f64;
            }
            if let Some(v) = self.value(x) {
                if v > best.1 {
                    *best = (x.to_vec(), v);
                }
            }
            let mut carry = 0;
            while carry < idx.len() {
                idx[carry] += 1;
                if idx[carry] < pts {
                    break;
                }
                idx[carry] = 0;
                carry += 1;
            }
            if carry == idx.len() {
                return;
            }
        }
    }

    /// Factor-space point `(s, w)`: row `i` of the lower-triangular `L` is
    /// `(c_i + s_i^2) w_i / |w_i|` with `c_i = sqrt(max(k_ii - e_i, 0))`, so
    /// `diag(K - L L^T) <= e` holds everywhere and a binding constraint is
    /// the smooth point `s_i = 0`.
    fn factor_to_d(&self, v: &[f64]) -> Option<Vec<Vec<f64>>> {
        let n = self.n();
        let mut l = vec![vec![0.0; n]; n];
        let mut p = n;
        for i in 0..n {
            let row = &v[p..p + i + 1];
            p += i + 1;
            let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm == 0.0 {
                return None;
            }
            let radius = (self.k[i][i] - self.e[i]).max(0.0).sqrt() + v[i] * v[i];
            for (j, a) in row.iter().enumerate() {
                l[i][j] = a * radius / norm;
            }
        }
        Some(
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| self.k[i][j] - (0..n).map(|t| l[i][t] * l[j][t]).sum::<f64>())
                        .collect()
                })
                .collect(),
        )
    }

    fn factor_value(&self, v: &[f64]) -> Option<f64> {
        let d = self.factor_to_d(v)?;
        for size in 1..=self.n() {
            let idx: Vec<usize> = (0..size).collect();
            if det(&principal(&d, &idx)) <= 0.0 {
                return None;
            }
        }
        Some(det(&d).ln())
    }

    /// Best `ln det D` found by pattern search in factor space, started from
    /// the Cholesky factor of `K - D` at `x` and from a few random points.
    fn factor_search(&self, x: &[f64], res: f64) -> f64 {
        let n = self.n();
        let m = n + n * (n + 1) / 2;
        let d = self.unpack(x);
        let gap: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| self.k[i][j] - d[i][j]).collect())
            .collect();
        let mut starts = Vec::new();
        if let Some(l) = cholesky(&gap) {
            let mut v = vec![0.0; n];
            for (i, row) in l.iter().enumerate() {
                let c = (self.k[i][i] - self.e[i]).max(0.0).sqrt();
                let norm = row[..=i].iter().map(|a| a * a).sum::<f64>().sqrt();
                v[i] = (norm - c).max(0.0).sqrt();
                if norm > 0.0 {
                    v.extend_from_slice(&row[..=i]);
                } else {
                    v.extend((0..=i).map(|j| if j == i { 1.0 } else { 0.0 }));
                }
            }
            starts.push(v);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0xfac7);
        for _ in 0..64 {
            if starts.len() > 2 {
                break;
            }
            let v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
            if self.factor_value(&v).is_some() {
                starts.push(v);
            }
        }
        let mut best = f64::NEG_INFINITY;
        for mut v in starts {
            if let Some(f) = self.factor_value(&v) {
                best = best.max(pattern_search(|y| self.factor_value(y), &mut v, f, res));
            }
        }
        best
    }
}

/// Opportunistic pattern search over coordinate, pairwise and random
/// directions with step halving.
fn pattern_search(value: impl Fn(&[f64]) -> Option<f64>, x: &mut Vec<f64>, mut best: f64, initial_step: f64) -> f64 {
    let m = x.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..m {
        for s in [1.0, -1.0] {
            let mut d = vec![0.0; m];
            d[i] = s;
            dirs.push(d);
        }
    }
    for i in 0..m {
        for j in (i + 1)..m {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let mut d = vec![0.0; m];
                d[i] = si * std::f64::consts::FRAC_1_SQRT_2;
                d[j] = sj * std::f64::consts::FRAC_1_SQRT_2;
                dirs.push(d);
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut step = initial_step;
    let mut sweeps = 0;
    while step > 1e-11 && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut improved = false;
        let random: Vec<Vec<f64>> = (0..2 * m)
            .map(|_| {
                let v: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
                let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
                v.into_iter().map(|a| a / norm).collect()
            })
            .collect();
        for d in dirs.iter().chain(&random) {
            let trial: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + step * b).collect();
            if let Some(v) = value(&trial) {
                if v > best {
                    best = v;
                    *x = trial;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}
