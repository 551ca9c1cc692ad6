//! Quaternion arithmetic on reals and jets, and the standard constant
//! hypercomplex structure.
//!
//! Quaternions are `(w, x, y, z)` with `e1 e2 = e3`.

use crate::jet::Jet;

pub type Q = [f64; 4];

pub fn qmul(a: &Q, b: &Q) -> Q {
    [
        a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
        a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
        a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
        a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0],
    ]
}

pub fn qconj(a: &Q) -> Q {
    [a[0], -a[1], -a[2], -a[3]]
}

pub fn unit(i: usize) -> Q {
    let mut e = [0.0; 4];
    e[i] = 1.0;
    e
}

/// Quaternion product on jets.
pub fn qmul_j(a: &[Jet], b: &[Jet]) -> [Jet; 4] {
    let t = |sa: [f64; 4], ia: [usize; 4], ib: [usize; 4]| {
        let mut s = &a[ia[0]] * &b[ib[0]] * sa[0];
        for k in 1..4 {
            s.add_mul_scaled(sa[k], &a[ia[k]], &b[ib[k]]);
        }
        s
    };
    [
        t([1.0, -1.0, -1.0, -1.0], [0, 1, 2, 3], [0, 1, 2, 3]),
        t([1.0, 1.0, 1.0, -1.0], [0, 1, 2, 3], [1, 0, 3, 2]),
        t([1.0, -1.0, 1.0, 1.0], [0, 1, 2, 3], [2, 3, 0, 1]),
        t([1.0, 1.0, -1.0, 1.0], [0, 1, 2, 3], [3, 2, 1, 0]),
    ]
}

pub fn qconj_j(a: &[Jet]) -> [Jet; 4] {
    [a[0].clone(), -&a[1], -&a[2], -&a[3]]
}

/// Squared norm on jets.
pub fn qnorm2_j(a: &[Jet]) -> Jet {
    let mut s = &a[0] * &a[0];
    for k in 1..4 {
        s.add_mul(&a[k], &a[k]);
    }
    s
}

/// Matrix of right multiplication `x ↦ x e` acting on column vectors.
pub fn right_mult(e: &Q) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for c in 0..4 {
        let col = qmul(&unit(c), e);
        for r in 0..4 {
            m[r][c] = col[r];
        }
    }
    m
}

/// Matrix of left multiplication `x ↦ e x` acting on column vectors.
pub fn left_mult(e: &Q) -> [[f64; 4]; 4] {
    let mut m = [[0.0; 4]; 4];
    for c in 0..4 {
        let col = qmul(e, &unit(c));
        for r in 0..4 {
            m[r][c] = col[r];
        }
    }
    m
}

/// Standard hypercomplex structure on ℍ^m in the row-vector convention:
/// `J^a = kron(I_m, R(e_a)^T)`, flattened `[a][X][Y]`, dimension `4m`.
pub fn flat_j(m: usize) -> Vec<f64> {
    let d = 4 * m;
    let mut j = vec![0.0; 3 * d * d];
    for a in 0..3 {
        let r = right_mult(&unit(a + 1));
        for b in 0..m {
            for x in 0..4 {
                for y in 0..4 {
                    j[(a * d + 4 * b + x) * d + 4 * b + y] = r[y][x];
                }
            }
        }
    }
    j
}

/// `Ad(c)[b][a]`: the `e_b` component of `c e_a c⁻¹` for a unit quaternion
/// `c` given as jets.
pub fn adjoint_j(c: &[Jet]) -> [[Jet; 3]; 3] {
    let cc = qconj_j(c);
    let dim = c[0].dim();
    let order = c[0].order();
    let col = |a: usize| {
        let e: Vec<Jet> = (0..4)
            .map(|i| Jet::constant(if i == a + 1 { 1.0 } else { 0.0 }, dim, order))
            .collect();
        let t = qmul_j(c, &e);
        qmul_j(&t, &cc)
    };
    let cols = [col(0), col(1), col(2)];
    std::array::from_fn(|b| std::array::from_fn(|a| cols[a][b + 1].clone()))
}
