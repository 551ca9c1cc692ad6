//! Small dense solves: rank-revealing least squares, jet-carrying least
//! squares, jet matrix inversion, and a cached block factorization of sparse
//! normal equations.

use crate::error::{Error, Result};
use crate::jet::Jet;
use nalgebra::{DMatrix, DVector};

/// Relative singular-value threshold used for rank decisions.
pub const RANK_RTOL: f64 = 1e-10;

/// Outcome of a least-squares solve.
#[derive(Clone, Debug)]
pub struct Lstsq {
    pub x: Vec<f64>,
    /// Max-abs entry of `M x - b`.
    pub residual: f64,
    pub rank: usize,
}

/// Thin singular value decomposition `M = U diag(s) Vᵀ`, singular values
/// in descending order.
pub struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

fn to_faer(m: &DMatrix<f64>) -> faer::Mat<f64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)])
}

pub fn svd(m: &DMatrix<f64>) -> Result<Svd> {
    let f = to_faer(m)
        .thin_svd()
        .map_err(|e| Error::Singular(format!("svd: {e:?}")))?;
    let (u, s, v) = (f.U(), f.S().column_vector(), f.V());
    let k = s.nrows();
    Ok(Svd {
        u: DMatrix::from_fn(u.nrows(), k, |i, j| u[(i, j)]),
        s: (0..k).map(|i| s[i]).collect(),
        v: DMatrix::from_fn(v.nrows(), k, |i, j| v[(i, j)]),
    })
}

pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    to_faer(m)
        .singular_values()
        .map_err(|e| Error::Singular(format!("svd: {e:?}")))
}

/// Dense pseudo-inverse of a full-column-rank matrix and its Gram inverse.
pub struct Pinv {
    pub pinv: DMatrix<f64>,
    pub gram_inv: DMatrix<f64>,
    pub rank: usize,
}

/// Pseudo-inverse via SVD; errors on column-rank deficiency.
pub fn pinv(m: &DMatrix<f64>) -> Result<Pinv> {
    let cols = m.ncols();
    let d = svd(m)?;
    let smax = d.s.iter().cloned().fold(0.0, f64::max);
    let thr = smax * RANK_RTOL;
    let rank = d.s.iter().filter(|&&s| s > thr).count();
    if rank < cols || smax == 0.0 {
        return Err(Error::RankDeficient { rank, cols });
    }
    let sinv = DMatrix::from_diagonal(&DVector::from_iterator(cols, d.s.iter().map(|s| 1.0 / s)));
    let s2inv = DMatrix::from_diagonal(&DVector::from_iterator(cols, d.s.iter().map(|s| 1.0 / (s * s))));
    let pinv = &d.v * &sinv * d.u.transpose();
    let gram_inv = &d.v * s2inv * d.v.transpose();
    Ok(Pinv { pinv, gram_inv, rank })
}

/// Least-squares solution of `M x = b` with rank check.
pub fn lstsq(m: &DMatrix<f64>, b: &[f64]) -> Result<Lstsq> {
    let p = pinv(m)?;
    let bv = DVector::from_column_slice(b);
    let x = &p.pinv * &bv;
    let r = m * &x - bv;
    Ok(Lstsq {
        x: x.iter().cloned().collect(),
        residual: r.amax(),
        rank: p.rank,
    })
}

/// Minimum-norm least-squares solution, tolerating rank deficiency.
pub fn lstsq_min_norm(m: &DMatrix<f64>, b: &[f64]) -> Result<Vec<f64>> {
    let d = svd(m)?;
    let smax = d.s.iter().cloned().fold(0.0, f64::max);
    let mut x = vec![0.0; m.ncols()];
    for (k, &s) in d.s.iter().enumerate() {
        if s > smax * RANK_RTOL {
            let c: f64 = (0..m.nrows()).map(|i| d.u[(i, k)] * b[i]).sum::<f64>() / s;
            for (j, xj) in x.iter_mut().enumerate() {
                *xj += c * d.v[(j, k)];
            }
        }
    }
    Ok(x)
}

/// Numerical rank of a dense matrix.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let s = singular_values(m).unwrap_or_default();
    let smax = s.iter().cloned().fold(0.0, f64::max);
    s.iter().filter(|&&x| x > smax * RANK_RTOL && x > 0.0).count()
}

/// Least squares with jet-valued coefficients: returns the solution as
/// order-1 jets (value and exact first derivatives of the least-squares
/// solution) together with the residual at the point.
///
/// `m` is row-major `rows × cols`.
pub fn lstsq_jet(m: &[Jet], rows: usize, cols: usize, b: &[Jet]) -> Result<(Vec<Jet>, f64)> {
    assert_eq!(m.len(), rows * cols);
    assert_eq!(b.len(), rows);
    let dim = b[0].dim();
    let order = m
        .iter()
        .chain(b.iter())
        .map(Jet::order)
        .min()
        .unwrap()
        .min(1);
    let m0 = DMatrix::from_fn(rows, cols, |i, j| m[i * cols + j].value());
    let b0 = DVector::from_fn(rows, |i, _| b[i].value());
    let p = pinv(&m0)?;
    let x0 = &p.pinv * &b0;
    let r = &b0 - &m0 * &x0;
    let residual = r.amax();
    let mut out: Vec<Jet> = x0.iter().map(|&v| Jet::constant(v, dim, order)).collect();
    if order == 1 {
        let mut dx = DMatrix::zeros(cols, dim);
        for k in 0..dim {
            let dm = DMatrix::from_fn(rows, cols, |i, j| m[i * cols + j].d1(k));
            let db = DVector::from_fn(rows, |i, _| b[i].d1(k));
            let rhs = db - &dm * &x0;
            let col = &p.pinv * rhs + &p.gram_inv * (dm.transpose() * &r);
            dx.set_column(k, &col);
        }
        for (j, x) in out.iter_mut().enumerate() {
            let grad: Vec<f64> = (0..dim).map(|k| dx[(j, k)]).collect();
            *x = Jet::from_parts(x.value(), &grad, None, None);
        }
    }
    Ok((out, residual))
}

/// Inverse of an `n × n` row-major matrix of jets by Gauss–Jordan
/// elimination with partial pivoting on values.
pub fn inverse_jet(m: &[Jet], n: usize) -> Result<Vec<Jet>> {
    assert_eq!(m.len(), n * n);
    let dim = m[0].dim();
    let order = crate::jet::min_order(m);
    let mut a: Vec<Jet> = m.iter().map(|j| j.truncate(order)).collect();
    let mut inv: Vec<Jet> = (0..n * n)
        .map(|k| Jet::constant(if k / n == k % n { 1.0 } else { 0.0 }, dim, order))
        .collect();
    let scale = m.iter().fold(0.0f64, |s, j| s.max(j.value().abs()));
    for c in 0..n {
        let (piv, pv) = (c..n)
            .map(|r| (r, a[r * n + c].value().abs()))
            .fold((c, -1.0), |best, x| if x.1 > best.1 { x } else { best });
        if pv <= scale * 1e-14 {
            return Err(Error::Singular("matrix inversion".into()));
        }
        if piv != c {
            for j in 0..n {
                a.swap(c * n + j, piv * n + j);
                inv.swap(c * n + j, piv * n + j);
            }
        }
        let rp = a[c * n + c].recip()?;
        for j in 0..n {
            a[c * n + j] = &a[c * n + j] * &rp;
            inv[c * n + j] = &inv[c * n + j] * &rp;
        }
        for r in 0..n {
            if r == c {
                continue;
            }
            let f = a[r * n + c].clone();
            if f.max_abs() == 0.0 {
                continue;
            }
            for j in 0..n {
                let (ac, ic) = (a[c * n + j].clone(), inv[c * n + j].clone());
                a[r * n + j].add_mul_scaled(-1.0, &f, &ac);
                inv[r * n + j].add_mul_scaled(-1.0, &f, &ic);
            }
        }
    }
    Ok(inv)
}

/// Inverse of a dense real matrix.
pub fn inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular("matrix inversion".into()))
}

/// Factorization of the normal matrix `MᵀM` of a sparse operator `M`, split
/// into independent blocks. Each block is checked for full rank and stored
/// as a dense inverse.
pub struct NormalFactor {
    pub cols: usize,
    blocks: Vec<(Vec<usize>, DMatrix<f64>)>,
    /// Smallest singular value over all blocks, relative to the largest.
    pub condition: f64,
}

impl NormalFactor {
    /// `columns[j]` lists the nonzero `(row, value)` entries of column `j`.
    pub fn new(columns: &[Vec<(usize, f64)>], nrows: usize) -> Result<Self> {
        let cols = columns.len();
        let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for (j, col) in columns.iter().enumerate() {
            for &(r, v) in col {
                by_row[r].push((j, v));
            }
        }
        let mut parent: Vec<usize> = (0..cols).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for row in &by_row {
            for w in row.windows(2) {
                let (a, b) = (find(&mut parent, w[0].0), find(&mut parent, w[1].0));
                if a != b {
                    parent[a] = b;
                }
            }
        }
        let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for j in 0..cols {
            let r = find(&mut parent, j);
            groups.entry(r).or_default().push(j);
        }
        let mut local = vec![0usize; cols];
        let mut block_of = vec![0usize; cols];
        let members: Vec<Vec<usize>> = groups.into_values().collect();
        let mut grams: Vec<DMatrix<f64>> = Vec::with_capacity(members.len());
        for (g, m) in members.iter().enumerate() {
            for (k, &j) in m.iter().enumerate() {
                local[j] = k;
                block_of[j] = g;
            }
            grams.push(DMatrix::zeros(m.len(), m.len()));
        }
        for row in &by_row {
            if let Some(&(first, _)) = row.first() {
                let nm = &mut grams[block_of[first]];
                for &(a, va) in row {
                    for &(b, vb) in row {
                        nm[(local[a], local[b])] += va * vb;
                    }
                }
            }
        }
        let mut blocks = Vec::with_capacity(members.len());
        let mut smin_rel = f64::INFINITY;
        let mut smax_all = 0.0f64;
        let mut svals = Vec::new();
        for (m, nm) in members.into_iter().zip(grams) {
            let s = singular_values(&nm)?;
            let smax = s.iter().cloned().fold(0.0, f64::max);
            let smin = s.iter().cloned().fold(f64::INFINITY, f64::min);
            smax_all = smax_all.max(smax);
            svals.push(smin);
            let inv = nm
                .try_inverse()
                .ok_or(Error::RankDeficient { rank: 0, cols })?;
            blocks.push((m, inv));
        }
        for s in &svals {
            smin_rel = smin_rel.min(s / smax_all);
        }
        if !(smin_rel > RANK_RTOL * RANK_RTOL) {
            let deficient = svals
                .iter()
                .filter(|&&s| !(s / smax_all > RANK_RTOL * RANK_RTOL))
                .count();
            return Err(Error::RankDeficient {
                rank: cols - deficient,
                cols,
            });
        }
        Ok(NormalFactor {
            cols,
            blocks,
            condition: smin_rel,
        })
    }

    /// Solves `(MᵀM) x = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.cols];
        for (members, inv) in &self.blocks {
            let n = members.len();
            for a in 0..n {
                let mut s = 0.0;
                for b in 0..n {
                    s += inv[(a, b)] * rhs[members[b]];
                }
                x[members[a]] = s;
            }
        }
        x
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.0.len()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::variables;

    #[test]
    fn lstsq_exact_system() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 1.0, 1.0]);
        let s = lstsq(&m, &[1.0, 4.0, 3.0]).unwrap();
        assert!((s.x[0] - 1.0).abs() < 1e-14 && (s.x[1] - 2.0).abs() < 1e-14);
        assert!(s.residual < 1e-14);
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(matches!(lstsq(&bad, &[1.0, 1.0]), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn lstsq_jet_derivative_matches_finite_difference() {
        let solve_at = |t: f64| {
            let v = variables(&[t], 1).unwrap();
            let x = &v[0];
            let m = vec![
                x + 1.0,
                x * x,
                Jet::constant(1.0, 1, 1),
                x.sin(),
                x.clone(),
                Jet::constant(2.0, 1, 1),
            ];
            let b = vec![x.exp(), x * 3.0, x.cos()];
            lstsq_jet(&m, 3, 2, &b).unwrap()
        };
        let (x, _) = solve_at(0.4);
        let h = 1e-6;
        let (xp, _) = solve_at(0.4 + h);
        let (xm, _) = solve_at(0.4 - h);
        for j in 0..2 {
            let fd = (xp[j].value() - xm[j].value()) / (2.0 * h);
            assert!((x[j].d1(0) - fd).abs() < 1e-7, "{} vs {}", x[j].d1(0), fd);
        }
    }

    #[test]
    fn jet_inverse() {
        let v = variables(&[0.3, 0.5], 2).unwrap();
        let m = vec![&v[0] + 2.0, v[1].clone(), &v[0] * &v[1], v[1].exp()];
        let inv = inverse_jet(&m, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s = Jet::zero(2, 2);
                for k in 0..2 {
                    s.add_mul(&m[i * 2 + k], &inv[k * 2 + j]);
                }
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((s.value() - e).abs() < 1e-14);
                assert!(s.as_slice()[1..].iter().all(|x| x.abs() < 1e-13));
            }
        }
    }

    #[test]
    fn block_factor_solves_normal_equations() {
        let cols = vec![
            vec![(0, 1.0), (1, 1.0)],
            vec![(1, 2.0)],
            vec![(2, 3.0)],
        ];
        let f = NormalFactor::new(&cols, 3).unwrap();
        assert_eq!(f.block_sizes().iter().sum::<usize>(), 3);
        let x = f.solve(&[2.0, 4.0, 9.0]);
        assert!((x[2] - 1.0).abs() < 1e-14);
        let dup = vec![vec![(0, 1.0)], vec![(0, 1.0)]];
        assert!(NormalFactor::new(&dup, 1).is_err());
    }
}
