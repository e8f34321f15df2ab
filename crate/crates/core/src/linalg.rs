//! Dense exact linear algebra over an ordered [`Field`].
//!
//! Everything here is exact for `Rational` and `QuadExt`; for the tolerance
//! field `Approx` the same algorithms run with tolerance-decided signs.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::arith::Rational;
use crate::error::{Error, Result};
use crate::field::Field;

/// Dense row-major matrix with optional row/column labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<F> {
    rows: Vec<Vec<F>>,
    ncols: usize,
    labels: Option<Vec<String>>,
}

/// Symmetric matrices use the same storage; symmetry is a caller invariant
/// checked by [`Matrix::is_symmetric`].
pub type SymMatrix<F> = Matrix<F>;

impl<F: Field> Matrix<F> {
    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let ncols = rows.first().map_or(0, |r| r.len());
        assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix");
        Matrix {
            rows,
            ncols,
            labels: None,
        }
    }

    pub fn from_fn(nrows: usize, ncols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let rows = (0..nrows)
            .map(|i| (0..ncols).map(|j| f(i, j)).collect())
            .collect();
        Matrix {
            rows,
            ncols,
            labels: None,
        }
    }

    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Self::from_fn(nrows, ncols, |_, _| F::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { F::one() } else { F::zero() })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        assert_eq!(labels.len(), self.nrows(), "label count must match dimension");
        self.labels = Some(labels);
        self
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn dim(&self) -> usize {
        debug_assert_eq!(self.nrows(), self.ncols);
        self.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.rows[i][j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: F) {
        self.rows[i][j] = x;
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[Vec<F>] {
        &self.rows
    }

    pub fn col(&self, j: usize) -> Vec<F> {
        self.rows.iter().map(|r| r[j].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.ncols, self.nrows(), |i, j| self.rows[j][i].clone())
    }

    pub fn is_symmetric(&self) -> bool {
        self.nrows() == self.ncols
            && (0..self.ncols).all(|i| (0..i).all(|j| self.rows[i][j] == self.rows[j][i]))
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows(), "dimension mismatch in product");
        Self::from_fn(self.nrows(), other.ncols, |i, j| {
            dot_with(&self.rows[i], |k| other.rows[k][j].clone())
        })
    }

    pub fn mul_vec(&self, v: &[F]) -> Vec<F> {
        assert_eq!(self.ncols, v.len(), "dimension mismatch in product");
        self.rows.iter().map(|r| dot(r, v)).collect()
    }

    /// Submatrix on the given row and column index lists.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::from_fn(rows.len(), cols.len(), |i, j| self.rows[rows[i]][cols[j]].clone());
        if let Some(l) = &self.labels {
            if rows == cols {
                m.labels = Some(rows.iter().map(|&i| l[i].clone()).collect());
            }
        }
        m
    }

    /// Principal compression on an index set.
    pub fn principal(&self, idx: &[usize]) -> Self {
        self.submatrix(idx, idx)
    }

    /// Leading principal `k x k` block.
    pub fn leading(&self, k: usize) -> Self {
        let idx: Vec<usize> = (0..k).collect();
        self.principal(&idx)
    }

    /// `[self | cols]` where `cols` are extra columns.
    pub fn hstack_cols(&self, cols: &[Vec<F>]) -> Self {
        let mut m = self.clone();
        m.labels = None;
        for (i, r) in m.rows.iter_mut().enumerate() {
            for c in cols {
                r.push(c[i].clone());
            }
        }
        m.ncols += cols.len();
        m
    }

    pub fn map<G: Field>(&self, f: impl Fn(&F) -> G) -> Matrix<G> {
        Matrix {
            rows: self.rows.iter().map(|r| r.iter().map(&f).collect()).collect(),
            ncols: self.ncols,
            labels: self.labels.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|x| x.is_zero()))
    }

    pub fn rank(&self) -> usize {
        F::rank(self)
    }

    /// Positive semidefiniteness by recursive exact Schur complements.
    ///
    /// At each step the leading diagonal entry is the pivot: negative means
    /// not psd; zero requires its whole row to vanish; positive continues on
    /// the Schur complement.
    pub fn is_psd(&self) -> bool {
        self.schur_scan().0
    }

    /// Positive definiteness: psd with every pivot strictly positive.
    pub fn is_pd(&self) -> bool {
        let (psd, positive) = self.schur_scan();
        psd && positive == self.nrows()
    }

    /// Returns (psd, number of strictly positive pivots).
    fn schur_scan(&self) -> (bool, usize) {
        assert_eq!(self.nrows(), self.ncols, "psd test needs a square matrix");
        let mut a = self.rows.clone();
        let mut positive = 0;
        while !a.is_empty() {
            let p = a[0][0].clone();
            match p.sign() {
                s if s < 0 => return (false, positive),
                0 => {
                    if a[0].iter().any(|x| !x.is_zero()) || a.iter().any(|r| !r[0].is_zero()) {
                        return (false, positive);
                    }
                    a = a.into_iter().skip(1).map(|r| r.into_iter().skip(1).collect()).collect();
                }
                _ => {
                    positive += 1;
                    let head = a[0].clone();
                    a = a
                        .into_iter()
                        .skip(1)
                        .map(|r| {
                            let f = r[0].clone() / p.clone();
                            r.into_iter()
                                .zip(head.iter())
                                .skip(1)
                                .map(|(x, h)| x - f.clone() * h.clone())
                                .collect()
                        })
                        .collect();
                }
            }
        }
        (true, positive)
    }

    /// Exact inverse by Gauss-Jordan elimination. A single row of the product
    /// with the input is re-checked against the identity before returning.
    pub fn invert(&self) -> Result<Self> {
        let n = self.dim();
        let mut a = self.rows.clone();
        let mut inv = Self::identity(n).rows;
        for col in 0..n {
            let piv = (col..n).find(|&i| !a[i][col].is_zero()).ok_or(Error::Singular)?;
            a.swap(col, piv);
            inv.swap(col, piv);
            let p = a[col][col].clone();
            for j in 0..n {
                a[col][j] = a[col][j].clone() / p.clone();
                inv[col][j] = inv[col][j].clone() / p.clone();
            }
            for i in 0..n {
                if i == col || a[i][col].is_zero() {
                    continue;
                }
                let f = a[i][col].clone();
                for j in 0..n {
                    let t = f.clone() * a[col][j].clone();
                    a[i][j] = a[i][j].clone() - t;
                    let t = f.clone() * inv[col][j].clone();
                    inv[i][j] = inv[i][j].clone() - t;
                }
            }
        }
        let inv = Matrix {
            rows: inv,
            ncols: n,
            labels: self.labels.clone(),
        };
        if F::EXACT && n > 0 {
            let r = n / 2;
            for j in 0..n {
                let e = dot_with(&self.rows[r], |k| inv.rows[k][j].clone());
                let want = if r == j { F::one() } else { F::zero() };
                if e != want {
                    return Err(Error::Consistency("inverse spot-check failed".into()));
                }
            }
        }
        Ok(inv)
    }

    /// Solves `self x = b` for nonsingular `self`.
    pub fn solve(&self, b: &[F]) -> Result<Vec<F>> {
        let n = self.dim();
        let mut a: Vec<Vec<F>> = self
            .rows
            .iter()
            .zip(b)
            .map(|(r, x)| {
                let mut r = r.clone();
                r.push(x.clone());
                r
            })
            .collect();
        for col in 0..n {
            let piv = (col..n).find(|&i| !a[i][col].is_zero()).ok_or(Error::Singular)?;
            a.swap(col, piv);
            for i in col + 1..n {
                if a[i][col].is_zero() {
                    continue;
                }
                let f = a[i][col].clone() / a[col][col].clone();
                for j in col..=n {
                    let t = f.clone() * a[col][j].clone();
                    a[i][j] = a[i][j].clone() - t;
                }
            }
        }
        let mut x = vec![F::zero(); n];
        for i in (0..n).rev() {
            let mut s = a[i][n].clone();
            for j in i + 1..n {
                s = s - a[i][j].clone() * x[j].clone();
            }
            x[i] = s / a[i][i].clone();
        }
        Ok(x)
    }

    /// True iff `v` lies in the column space, i.e. appending it keeps the rank.
    pub fn in_column_space(&self, v: &[F]) -> bool {
        assert_eq!(v.len(), self.nrows(), "vector length must match dimension");
        self.hstack_cols(&[v.to_vec()]).rank() == self.rank()
    }

    /// A basis of the right kernel, from the reduced row echelon form.
    pub fn kernel(&self) -> Vec<Vec<F>> {
        let (rref, pivots) = self.rref();
        let free: Vec<usize> = (0..self.ncols).filter(|j| !pivots.contains(j)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![F::zero(); self.ncols];
                v[f] = F::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -rref[r][f].clone();
                }
                v
            })
            .collect()
    }

    fn rref(&self) -> (Vec<Vec<F>>, Vec<usize>) {
        let mut a = self.rows.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for col in 0..self.ncols {
            let Some(piv) = (r..a.len()).find(|&i| !a[i][col].is_zero()) else {
                continue;
            };
            a.swap(r, piv);
            let p = a[r][col].clone();
            for x in a[r].iter_mut() {
                *x = x.clone() / p.clone();
            }
            for i in 0..a.len() {
                if i != r && !a[i][col].is_zero() {
                    let f = a[i][col].clone();
                    for j in 0..self.ncols {
                        let t = f.clone() * a[r][j].clone();
                        a[i][j] = a[i][j].clone() - t;
                    }
                }
            }
            pivots.push(col);
            r += 1;
            if r == a.len() {
                break;
            }
        }
        (a, pivots)
    }
}

impl<F: Field + fmt::Display> fmt::Display for Matrix<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in &self.rows {
            let cells: Vec<String> = r.iter().map(|x| x.to_string()).collect();
            writeln!(f, "[{}]", cells.join(", "))?;
        }
        Ok(())
    }
}

pub fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

fn dot_with<F: Field>(a: &[F], b: impl Fn(usize) -> F) -> F {
    a.iter()
        .enumerate()
        .fold(F::zero(), |acc, (k, x)| acc + x.clone() * b(k))
}

/// Rank by plain Gaussian elimination with full pivoting; the pivot is the
/// first nonzero entry of the remaining block in row-major order.
pub fn gauss_rank<F: Field>(m: &Matrix<F>) -> usize {
    let mut a = m.rows.clone();
    let (nr, nc) = (m.nrows(), m.ncols());
    let mut rank = 0;
    for k in 0..nr.min(nc) {
        let Some((pi, pj)) = first_nonzero(&a, k, |x: &F| !x.is_zero()) else {
            break;
        };
        a.swap(k, pi);
        for r in a.iter_mut() {
            r.swap(k, pj);
        }
        for i in k + 1..nr {
            if a[i][k].is_zero() {
                continue;
            }
            let f = a[i][k].clone() / a[k][k].clone();
            for j in k..nc {
                let t = f.clone() * a[k][j].clone();
                a[i][j] = a[i][j].clone() - t;
            }
        }
        rank += 1;
    }
    rank
}

fn first_nonzero<T>(a: &[Vec<T>], k: usize, nz: impl Fn(&T) -> bool) -> Option<(usize, usize)> {
    (k..a.len()).find_map(|i| (k..a[i].len()).find(|&j| nz(&a[i][j])).map(|j| (i, j)))
}

/// Fraction-free (Bareiss) rank over the integers after clearing row
/// denominators; full pivoting with the same row-major tie-break.
pub fn bareiss_rank(m: &Matrix<Rational>) -> usize {
    let mut a: Vec<Vec<BigInt>> = m
        .rows
        .iter()
        .map(|r| {
            let l = r.iter().fold(BigInt::one(), |l, x| l.lcm(x.denom()));
            r.iter().map(|x| x.numer() * (&l / x.denom())).collect()
        })
        .collect();
    let (nr, nc) = (m.nrows(), m.ncols());
    let mut prev = BigInt::one();
    let mut rank = 0;
    for k in 0..nr.min(nc) {
        let Some((pi, pj)) = first_nonzero(&a, k, |x: &BigInt| !x.is_zero()) else {
            break;
        };
        a.swap(k, pi);
        for r in a.iter_mut() {
            r.swap(k, pj);
        }
        for i in k + 1..nr {
            for j in k + 1..nc {
                let t = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = t / &prev;
            }
            a[i][k] = BigInt::zero();
        }
        prev = a[k][k].clone();
        rank += 1;
    }
    rank
}

impl<F: Field> std::ops::Add for Matrix<F> {
    type Output = Matrix<F>;
    fn add(self, o: Matrix<F>) -> Matrix<F> {
        Matrix::from_fn(self.nrows(), self.ncols, |i, j| {
            self.rows[i][j].clone() + o.rows[i][j].clone()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, rat, QuadExt};
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> Matrix<Rational> {
        Matrix::from_rows(rows.iter().map(|r| r.iter().map(|&x| int(x)).collect()).collect())
    }

    #[test]
    fn rank_examples() {
        assert_eq!(Matrix::<Rational>::zeros(3, 3).rank(), 0);
        assert_eq!(Matrix::<Rational>::identity(4).rank(), 4);
        assert_eq!(m(&[&[1, 2], &[2, 4]]).rank(), 1);
        assert_eq!(m(&[&[0, 1, 2], &[0, 2, 4], &[1, 0, 0]]).rank(), 2);
    }

    #[test]
    fn psd_examples() {
        assert!(m(&[&[1, 0, 0], &[0, 0, 0], &[0, 0, 2]]).is_psd());
        assert!(!m(&[&[0, 1], &[1, 0]]).is_psd());
        assert!(!m(&[&[1, 2], &[2, 1]]).is_psd());
        assert!(m(&[&[1, 1], &[1, 1]]).is_psd());
        assert!(!m(&[&[1, 1], &[1, 1]]).is_pd());
        assert!(m(&[&[2, 1], &[1, 1]]).is_pd());
    }

    #[test]
    fn invert_examples() {
        let a = m(&[&[2, 1], &[1, 1]]);
        assert_eq!(a.invert().unwrap(), m(&[&[1, -1], &[-1, 2]]));
        assert_eq!(Matrix::<Rational>::identity(3).invert().unwrap(), Matrix::identity(3));
        assert!(matches!(m(&[&[1, 1], &[1, 1]]).invert(), Err(Error::Singular)));
    }

    #[test]
    fn column_space_examples() {
        let a = m(&[&[1, 0], &[0, 0]]);
        assert!(a.in_column_space(&[int(5), int(0)]));
        assert!(!a.in_column_space(&[int(0), int(1)]));
    }

    #[test]
    fn kernel_vectors_annihilate() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        let k = a.kernel();
        assert_eq!(k.len(), 1);
        assert!(a.mul_vec(&k[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn quad_field_rank_and_psd() {
        let s = QuadExt::sqrt_of(&int(2));
        let one = QuadExt::from_rational(&int(1));
        let two = QuadExt::from_rational(&int(2));
        // [[1, s], [s, 2]] is singular psd.
        let a = Matrix::from_rows(vec![vec![one.clone(), s.clone()], vec![s.clone(), two]]);
        assert_eq!(a.rank(), 1);
        assert!(a.is_psd());
        let b = Matrix::from_rows(vec![vec![one.clone(), s.clone()], vec![s, one]]);
        assert!(!b.is_psd());
    }

    fn arb_rational() -> impl Strategy<Value = Rational> {
        (-20i64..20, 1i64..6).prop_map(|(n, d)| rat(n, d))
    }

    fn arb_matrix(r: usize, c: usize) -> impl Strategy<Value = Matrix<Rational>> {
        proptest::collection::vec(proptest::collection::vec(arb_rational(), c), r)
            .prop_map(Matrix::from_rows)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(60))]

        #[test]
        fn rank_permutation_invariant(n in 1usize..=12, seed in any::<u64>(), lowrank in any::<bool>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let k = if lowrank { n / 2 + 1 } else { n };
            let g = crate::testutil::random_rational_matrix(&mut rng, n, k);
            let a = g.mul(&g.transpose());
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut rng);
            let pa = a.principal(&perm);
            prop_assert_eq!(a.rank(), pa.rank());
            prop_assert_eq!(a.rank(), gauss_rank(&a));
        }

        #[test]
        fn gram_is_psd(g in (1usize..6, 1usize..6).prop_flat_map(|(r, c)| arb_matrix(r, c))) {
            let a = g.transpose().mul(&g);
            prop_assert!(a.is_psd());
        }

        #[test]
        fn psd_has_nonnegative_2x2_minors(g in arb_matrix(4, 3)) {
            let a = g.mul(&g.transpose());
            prop_assert!(a.is_psd());
            for i in 0..4 {
                for j in i + 1..4 {
                    let minor = a.get(i, i) * a.get(j, j) - a.get(i, j) * a.get(j, i);
                    prop_assert!(minor >= int(0));
                }
            }
        }

        #[test]
        fn double_inverse_is_identity(g in arb_matrix(4, 4)) {
            let a = g.mul(&g.transpose()) + Matrix::identity(4);
            let back = a.invert().unwrap().invert().unwrap();
            prop_assert_eq!(back, a);
        }
    }
}
