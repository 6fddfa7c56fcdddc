use super::{NumericError, Result};

/// Small dense row-major square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for r in rows {
            if r.len() != n {
                return Err(NumericError::Dimension { expected: n, got: r.len() });
            }
            data.extend_from_slice(r);
        }
        Ok(Self { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }
}

impl std::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// LU factorization with partial pivoting, `P D M = L U` where `D` is the
/// diagonal row scaling `1 / max|row|` applied before elimination.
///
/// The factorization is immutable and can be reused for any number of
/// right-hand sides.
#[derive(Debug, Clone)]
pub struct LuFactorization {
    lu: Matrix,
    perm: Vec<usize>,
    row_scale: Vec<f64>,
    parity: f64,
}

const PIVOT_THRESHOLD: f64 = 1e-14;

impl LuFactorization {
    pub fn new(m: &Matrix) -> Result<Self> {
        let n = m.dim();
        if n == 0 {
            return Err(NumericError::InvalidArgument("empty matrix".into()));
        }
        let mut lu = m.clone();
        let mut row_scale = vec![1.0; n];
        for (i, s) in row_scale.iter_mut().enumerate() {
            let mx = lu.row(i).iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if mx == 0.0 {
                return Err(NumericError::Singular { column: 0, pivot: 0.0 });
            }
            *s = 1.0 / mx;
            for j in 0..n {
                lu[(i, j)] *= *s;
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        let mut parity = 1.0;
        for col in 0..n {
            let (p, pv) = (col..n)
                .map(|r| (r, lu[(r, col)].abs()))
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty column");
            if pv < PIVOT_THRESHOLD {
                return Err(NumericError::Singular { column: col, pivot: pv });
            }
            if p != col {
                for j in 0..n {
                    let tmp = lu[(p, j)];
                    lu[(p, j)] = lu[(col, j)];
                    lu[(col, j)] = tmp;
                }
                perm.swap(p, col);
                parity = -parity;
            }
            let d = lu[(col, col)];
            for r in col + 1..n {
                let f = lu[(r, col)] / d;
                lu[(r, col)] = f;
                if f != 0.0 {
                    for j in col + 1..n {
                        lu[(r, j)] -= f * lu[(col, j)];
                    }
                }
            }
        }
        Ok(Self { lu, perm, row_scale, parity })
    }

    pub fn dim(&self) -> usize {
        self.lu.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(NumericError::Dimension { expected: n, got: b.len() });
        }
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p] * self.row_scale[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    /// Determinant of the original (unscaled) matrix.
    pub fn det(&self) -> f64 {
        let mut d = self.parity;
        for i in 0..self.dim() {
            d *= self.lu[(i, i)] / self.row_scale[i];
        }
        d
    }

    /// Cheap reciprocal condition estimate: min|u_ii| / max|u_ii| of the
    /// scaled factor.
    pub fn pivot_ratio(&self) -> f64 {
        let diag: Vec<f64> = (0..self.dim()).map(|i| self.lu[(i, i)].abs()).collect();
        let mx = diag.iter().cloned().fold(0.0, f64::max);
        let mn = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        mn / mx
    }
}

/// Solve `M x = b` by partial-pivoting LU.
pub fn linsolve(m: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    LuFactorization::new(m)?.solve(b)
}
