// SPDX-License-Identifier: Apache-2.0

//! Dense complex linear algebra used by the solvers.
//!
//! Everything here works on small, dense, non-Hermitian matrices (a few
//! hundred rows at most), so plain row-major loops are adequate. The
//! factorizations expose both `A x = b` and `A^H x = b` solves because the
//! 1-norm condition estimator needs the adjoint.

use ndarray::Array2;
use num_complex::Complex64;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Common surface of the factorizations fed to [`condition_estimate`].
pub trait Factorization {
    fn dim(&self) -> usize;
    /// 1-norm of the factored matrix.
    fn norm1(&self) -> f64;
    fn has_zero_pivot(&self) -> bool;
    fn solve(&self, b: &[C64]) -> Vec<C64>;
    fn solve_adjoint(&self, b: &[C64]) -> Vec<C64>;
}

fn norm1_vec(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).sum()
}

/// Matrix 1-norm (maximum absolute column sum).
pub fn norm1(a: &Array2<C64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Hager–Higham estimate of `‖A‖₁ ‖A⁻¹‖₁`. Returns infinity for an exactly
/// singular factorization.
pub fn condition_estimate<F: Factorization>(f: &F) -> f64 {
    let n = f.dim();
    if n == 0 {
        return 1.0;
    }
    if f.has_zero_pivot() {
        return f64::INFINITY;
    }
    let mut x = vec![C64::new(1.0 / n as f64, 0.0); n];
    let mut est = 0.0;
    for iter in 0..5 {
        let y = f.solve(&x);
        let est_new = norm1_vec(&y);
        if !est_new.is_finite() {
            return f64::INFINITY;
        }
        if iter > 0 && est_new <= est {
            break;
        }
        est = est_new;
        let xi: Vec<C64> = y
            .iter()
            .map(|&z| if z.norm() > 0.0 { z / z.norm() } else { ONE })
            .collect();
        let z = f.solve_adjoint(&xi);
        let (jmax, zmax) = z
            .iter()
            .enumerate()
            .map(|(j, v)| (j, v.norm()))
            .fold((0, -1.0), |acc, cur| if cur.1 > acc.1 { cur } else { acc });
        let ztx: f64 = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        if iter > 0 && zmax <= ztx {
            break;
        }
        x.iter_mut().for_each(|v| *v = ZERO);
        x[jmax] = ONE;
    }
    // Alternating-sign probe guards against the estimator's known blind spots.
    if n > 1 {
        let probe: Vec<C64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                C64::new(sign * (1.0 + i as f64 / (n - 1) as f64), 0.0)
            })
            .collect();
        let alt = 2.0 * norm1_vec(&f.solve(&probe)) / (3.0 * n as f64);
        est = est.max(alt);
    }
    f.norm1() * est
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    n: usize,
    lu: Vec<C64>,
    perm: Vec<usize>,
    norm1: f64,
    zero_pivot: bool,
}

impl Lu {
    pub fn factor(a: &Array2<C64>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU requires a square matrix");
        let norm = norm1(a);
        let mut lu: Vec<C64> = a.iter().copied().collect();
        if !a.is_standard_layout() {
            lu = (0..n * n).map(|k| a[[k / n, k % n]]).collect();
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut zero_pivot = false;
        for k in 0..n {
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in (k + 1)..n {
                let v = lu[i * n + k].norm();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 {
                zero_pivot = true;
                continue;
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            let (head, tail) = lu.split_at_mut((k + 1) * n);
            let row_k = &head[k * n..k * n + n];
            for i in 0..(n - k - 1) {
                let row_i = &mut tail[i * n..i * n + n];
                let l = row_i[k] / pivot;
                row_i[k] = l;
                if l != ZERO {
                    for j in (k + 1)..n {
                        row_i[j] -= l * row_k[j];
                    }
                }
            }
        }
        Self {
            n,
            lu,
            perm,
            norm1: norm,
            zero_pivot,
        }
    }

    /// Solves `Aᵀ x = b` (plain transpose, no conjugation).
    pub fn solve_transpose(&self, b: &[C64]) -> Vec<C64> {
        self.transpose_solve(b, false)
    }

    fn transpose_solve(&self, b: &[C64], conj: bool) -> Vec<C64> {
        let n = self.n;
        let f = |z: C64| if conj { z.conj() } else { z };
        // Uᵀ z = b, forward.
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= f(self.lu[j * n + i]) * z[j];
            }
            z[i] = s / f(self.lu[i * n + i]);
        }
        // Lᵀ w = z, backward with unit diagonal.
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..n {
                s -= f(self.lu[j * n + i]) * z[j];
            }
            z[i] = s;
        }
        let mut x = vec![ZERO; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = z[i];
        }
        x
    }

    /// Solves `A X = B` column by column.
    pub fn solve_matrix(&self, b: &Array2<C64>) -> Array2<C64> {
        let mut out = Array2::zeros(b.raw_dim());
        for (j, col) in b.columns().into_iter().enumerate() {
            let rhs: Vec<C64> = col.iter().copied().collect();
            let x = self.solve(&rhs);
            for (i, v) in x.into_iter().enumerate() {
                out[[i, j]] = v;
            }
        }
        out
    }
}

impl Factorization for Lu {
    fn dim(&self) -> usize {
        self.n
    }

    fn norm1(&self) -> f64 {
        self.norm1
    }

    fn has_zero_pivot(&self) -> bool {
        self.zero_pivot
    }

    fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<C64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let row = &self.lu[i * n..i * n + i];
            let s: C64 = row.iter().zip(&y[..i]).map(|(l, v)| l * v).sum();
            y[i] -= s;
        }
        for i in (0..n).rev() {
            let row = &self.lu[i * n..(i + 1) * n];
            let s: C64 = row[i + 1..].iter().zip(&y[i + 1..]).map(|(u, v)| u * v).sum();
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        self.transpose_solve(b, true)
    }
}

/// Unitary reduction `A = Q H Qᴴ` to upper Hessenberg form.
///
/// Shifted systems `(A − σ I) x = b` then cost O(n²) each, which is what a
/// detuning sweep needs: the probe detuning only shifts the diagonal.
#[derive(Debug, Clone)]
pub struct Hessenberg {
    n: usize,
    h: Vec<C64>,
    reflectors: Vec<Option<Vec<C64>>>,
}

impl Hessenberg {
    pub fn reduce(a: &Array2<C64>) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "Hessenberg reduction requires a square matrix");
        let mut h: Vec<C64> = (0..n * n).map(|k| a[[k / n, k % n]]).collect();
        let mut reflectors = Vec::with_capacity(n.saturating_sub(2));
        for k in 0..n.saturating_sub(2) {
            let x: Vec<C64> = ((k + 1)..n).map(|i| h[i * n + k]).collect();
            let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
            if tail == 0.0 {
                reflectors.push(None);
                continue;
            }
            let xnorm = (x[0].norm_sqr() + tail).sqrt();
            let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { ONE };
            let alpha = -phase * xnorm;
            let mut v = x;
            v[0] -= alpha;
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            v.iter_mut().for_each(|z| *z /= vnorm);
            // H ← (I − 2vvᴴ) H from the left, rows k+1..n.
            for j in 0..n {
                let mut s = ZERO;
                for (r, vr) in v.iter().enumerate() {
                    s += vr.conj() * h[(k + 1 + r) * n + j];
                }
                let s2 = s * 2.0;
                for (r, vr) in v.iter().enumerate() {
                    h[(k + 1 + r) * n + j] -= vr * s2;
                }
            }
            // H ← H (I − 2vvᴴ) from the right, columns k+1..n.
            for i in 0..n {
                let mut s = ZERO;
                for (r, vr) in v.iter().enumerate() {
                    s += h[i * n + k + 1 + r] * vr;
                }
                let s2 = s * 2.0;
                for (r, vr) in v.iter().enumerate() {
                    h[i * n + k + 1 + r] -= s2 * vr.conj();
                }
            }
            for i in (k + 2)..n {
                h[i * n + k] = ZERO;
            }
            reflectors.push(Some(v));
        }
        Self { n, h, reflectors }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    fn apply_reflector(&self, k: usize, v: &[C64], x: &mut [C64]) {
        let s: C64 = v.iter().zip(&x[k + 1..]).map(|(a, b)| a.conj() * b).sum();
        let s2 = s * 2.0;
        for (r, vr) in v.iter().enumerate() {
            x[k + 1 + r] -= vr * s2;
        }
    }

    /// `Qᴴ x`.
    pub fn apply_qh(&self, x: &mut [C64]) {
        for (k, v) in self.reflectors.iter().enumerate() {
            if let Some(v) = v {
                self.apply_reflector(k, v, x);
            }
        }
    }

    /// `Q x`.
    pub fn apply_q(&self, x: &mut [C64]) {
        for (k, v) in self.reflectors.iter().enumerate().rev() {
            if let Some(v) = v {
                self.apply_reflector(k, v, x);
            }
        }
    }

    /// Factor `H − σ I` (Hessenberg form, not the original matrix).
    pub fn shifted(&self, shift: C64) -> ShiftedHessenbergLu {
        ShiftedHessenbergLu::factor(self, shift)
    }

    /// Solves `(A − σ I) x = b` in the original basis and returns `x`
    /// together with the condition estimate of the shifted Hessenberg matrix.
    pub fn solve_shifted(&self, shift: C64, b: &[C64]) -> (Vec<C64>, f64) {
        let f = self.shifted(shift);
        let cond = condition_estimate(&f);
        let mut y = b.to_vec();
        self.apply_qh(&mut y);
        let mut x = f.solve(&y);
        self.apply_q(&mut x);
        (x, cond)
    }
}

/// LU of a shifted upper Hessenberg matrix with adjacent-row pivoting.
#[derive(Debug, Clone)]
pub struct ShiftedHessenbergLu {
    n: usize,
    u: Vec<C64>,
    mult: Vec<C64>,
    swapped: Vec<bool>,
    norm1: f64,
    zero_pivot: bool,
}

impl ShiftedHessenbergLu {
    fn factor(hess: &Hessenberg, shift: C64) -> Self {
        let n = hess.n;
        let mut u = hess.h.clone();
        for i in 0..n {
            u[i * n + i] -= shift;
        }
        let norm1 = (0..n)
            .map(|j| (0..n).map(|i| u[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max);
        let mut mult = vec![ZERO; n.saturating_sub(1)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        let mut zero_pivot = false;
        for k in 0..n.saturating_sub(1) {
            if u[(k + 1) * n + k].norm() > u[k * n + k].norm() {
                for j in k..n {
                    u.swap(k * n + j, (k + 1) * n + j);
                }
                swapped[k] = true;
            }
            let pivot = u[k * n + k];
            if pivot.norm() == 0.0 {
                zero_pivot = true;
                continue;
            }
            let l = u[(k + 1) * n + k] / pivot;
            mult[k] = l;
            u[(k + 1) * n + k] = ZERO;
            if l != ZERO {
                for j in (k + 1)..n {
                    let ukj = u[k * n + j];
                    u[(k + 1) * n + j] -= l * ukj;
                }
            }
        }
        if n > 0 && u[(n - 1) * n + n - 1].norm() == 0.0 {
            zero_pivot = true;
        }
        Self {
            n,
            u,
            mult,
            swapped,
            norm1,
            zero_pivot,
        }
    }
}

impl Factorization for ShiftedHessenbergLu {
    fn dim(&self) -> usize {
        self.n
    }

    fn norm1(&self) -> f64 {
        self.norm1
    }

    fn has_zero_pivot(&self) -> bool {
        self.zero_pivot
    }

    fn solve(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut y = b.to_vec();
        for k in 0..n.saturating_sub(1) {
            if self.swapped[k] {
                y.swap(k, k + 1);
            }
            let yk = y[k];
            y[k + 1] -= self.mult[k] * yk;
        }
        for i in (0..n).rev() {
            let row = &self.u[i * n..(i + 1) * n];
            let s: C64 = row[i + 1..].iter().zip(&y[i + 1..]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i];
        }
        y
    }

    fn solve_adjoint(&self, b: &[C64]) -> Vec<C64> {
        let n = self.n;
        let mut z = b.to_vec();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.u[j * n + i].conj() * z[j];
            }
            z[i] = s / self.u[i * n + i].conj();
        }
        for k in (0..n.saturating_sub(1)).rev() {
            let zk1 = z[k + 1];
            z[k] -= self.mult[k].conj() * zk1;
            if self.swapped[k] {
                z.swap(k, k + 1);
            }
        }
        z
    }
}

/// Indices connected to `seeds` through the nonzero pattern of `a`
/// (treated as an undirected graph). Returned in ascending order.
pub fn connected_support(a: &Array2<C64>, seeds: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let n = a.nrows();
    let mut seen = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for s in seeds {
        if !seen[s] {
            seen[s] = true;
            stack.push(s);
        }
    }
    while let Some(i) = stack.pop() {
        for j in 0..n {
            if !seen[j] && (a[[i, j]] != ZERO || a[[j, i]] != ZERO) {
                seen[j] = true;
                stack.push(j);
            }
        }
    }
    (0..n).filter(|&i| seen[i]).collect()
}

/// Principal submatrix on `idx`.
pub fn submatrix(a: &Array2<C64>, rows: &[usize], cols: &[usize]) -> Array2<C64> {
    Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| a[[rows[i], cols[j]]])
}

pub fn matvec(a: &Array2<C64>, x: &[C64]) -> Vec<C64> {
    a.rows()
        .into_iter()
        .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum())
        .collect()
}

pub fn vec_norm(x: &[C64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

const PADE13: [f64; 14] = [
    64_764_752_532_480_000.0,
    32_382_376_266_240_000.0,
    7_771_770_303_897_600.0,
    1_187_353_796_428_800.0,
    129_060_195_264_000.0,
    10_559_470_521_600.0,
    670_442_572_800.0,
    33_522_128_640.0,
    1_323_241_920.0,
    40_840_800.0,
    960_960.0,
    16_380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371_920_351_148_152;

/// Matrix exponential by scaling and squaring with a degree-13 Padé approximant.
pub fn expm(a: &Array2<C64>) -> Array2<C64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Array2::zeros((0, 0));
    }
    let norm = norm1(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a.mapv(|z| z / 2f64.powi(squarings));
    let ident = Array2::<C64>::eye(n);
    let a2 = scaled.dot(&scaled);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = |k: usize| C64::new(PADE13[k], 0.0);

    let inner_u = &a6 * b(13) + &a4 * b(11) + &a2 * b(9);
    let u_poly = a6.dot(&inner_u) + &a6 * b(7) + &a4 * b(5) + &a2 * b(3) + &ident * b(1);
    let u = scaled.dot(&u_poly);
    let inner_v = &a6 * b(12) + &a4 * b(10) + &a2 * b(8);
    let v = a6.dot(&inner_v) + &a6 * b(6) + &a4 * b(4) + &a2 * b(2) + &ident * b(0);

    let lu = Lu::factor(&(&v - &u));
    let mut r = lu.solve_matrix(&(&v + &u));
    for _ in 0..squarings {
        r = r.dot(&r);
    }
    r
}

/// Attempts a Cholesky factorization of `a + shift·I` for Hermitian `a`.
/// Returns the failing pivot index when the shifted matrix is not positive
/// definite.
pub fn cholesky_shifted(a: &Array2<C64>, shift: f64) -> Result<(), usize> {
    let n = a.nrows();
    let mut l = vec![ZERO; n * n];
    for j in 0..n {
        let mut d = a[[j, j]].re + shift;
        for k in 0..j {
            d -= l[j * n + k].norm_sqr();
        }
        if d.is_nan() || d <= 0.0 {
            return Err(j);
        }
        let djj = d.sqrt();
        l[j * n + j] = C64::new(djj, 0.0);
        for i in (j + 1)..n {
            let mut s = a[[i, j]];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k].conj();
            }
            l[i * n + j] = s / djj;
        }
    }
    Ok(())
}

/// Numerical rank analysis by LU with complete pivoting.
#[derive(Debug, Clone)]
pub struct RankRevealingLu {
    n: usize,
    rank: usize,
    u: Vec<C64>,
    col_perm: Vec<usize>,
}

impl RankRevealingLu {
    /// Pivots below `rel_tol` times the first pivot are treated as zero.
    pub fn factor(a: &Array2<C64>, rel_tol: f64) -> Self {
        let n = a.nrows();
        assert_eq!(n, a.ncols());
        let mut u: Vec<C64> = (0..n * n).map(|k| a[[k / n, k % n]]).collect();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let mut first = 0.0;
        let mut rank = n;
        for k in 0..n {
            let (mut pi, mut pj, mut best) = (k, k, -1.0);
            for i in k..n {
                for j in k..n {
                    let v = u[i * n + j].norm();
                    if v > best {
                        best = v;
                        pi = i;
                        pj = j;
                    }
                }
            }
            if k == 0 {
                first = best;
            }
            if best <= rel_tol * first || best == 0.0 {
                rank = k;
                break;
            }
            if pi != k {
                for j in 0..n {
                    u.swap(k * n + j, pi * n + j);
                }
            }
            if pj != k {
                for i in 0..n {
                    u.swap(i * n + k, i * n + pj);
                }
                col_perm.swap(k, pj);
            }
            let pivot = u[k * n + k];
            for i in (k + 1)..n {
                let l = u[i * n + k] / pivot;
                u[i * n + k] = ZERO;
                if l != ZERO {
                    for j in (k + 1)..n {
                        let ukj = u[k * n + j];
                        u[i * n + j] -= l * ukj;
                    }
                }
            }
        }
        Self {
            n,
            rank,
            u,
            col_perm,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn nullity(&self) -> usize {
        self.n - self.rank
    }

    /// A null vector obtained by fixing the first free variable to one.
    pub fn null_vector(&self) -> Option<Vec<C64>> {
        if self.rank == self.n {
            return None;
        }
        let n = self.n;
        let r = self.rank;
        let mut y = vec![ZERO; n];
        y[r] = ONE;
        for i in (0..r).rev() {
            let mut s = self.u[i * n + r];
            for j in (i + 1)..r {
                s += self.u[i * n + j] * y[j];
            }
            y[i] = -s / self.u[i * n + i];
        }
        let mut x = vec![ZERO; n];
        for (k, &c) in self.col_perm.iter().enumerate() {
            x[c] = y[k];
        }
        Some(x)
    }
}
