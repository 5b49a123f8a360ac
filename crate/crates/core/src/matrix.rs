use crate::scalar::Field;

/// Square row-major matrix over a [`Field`].
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix<T> {
    n: usize,
    data: Vec<T>,
}

impl<T: Field> DenseMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(Self { n, data: rows.into_iter().flatten().collect() })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Self { n, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &T {
        &self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        Self::from_fn(n, |i, j| {
            (0..n).fold(T::zero(), |acc, k| acc + self.get(i, k).clone() * other.get(k, j).clone())
        })
    }

    /// `self^m` by exponentiation by squaring.
    pub fn pow(&self, mut m: u32) -> Self {
        let mut acc = Self::identity(self.n);
        let mut base = self.clone();
        while m > 0 {
            if m & 1 == 1 {
                acc = acc.mul(&base);
            }
            m >>= 1;
            if m > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, v: &[T]) -> Vec<T> {
        (0..self.n)
            .map(|j| (0..self.n).fold(T::zero(), |acc, i| acc + v[i].clone() * self.get(i, j).clone()))
            .collect()
    }

    pub fn map<U: Field>(&self, f: impl Fn(&T) -> U) -> DenseMatrix<U> {
        DenseMatrix { n: self.n, data: self.data.iter().map(f).collect() }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.to_f64_lossy() - b.to_f64_lossy()).abs())
            .fold(0.0, f64::max)
    }
}

/// Ising kernel over `{-1, +1}` (index 0 is `-1`).
pub fn ising_matrix<T: Field>(rho: T) -> DenseMatrix<T> {
    let two = T::from_count(2);
    let same = (T::one() + rho.clone()) / two.clone();
    let flip = (T::one() - rho) / two;
    DenseMatrix::from_fn(2, |i, j| if i == j { same.clone() } else { flip.clone() })
}

/// Proper-coloring kernel over `q` colors.
pub fn coloring_matrix<T: Field>(q: usize) -> DenseMatrix<T> {
    let off = T::one() / T::from_count(q as u64 - 1);
    DenseMatrix::from_fn(q, |i, j| if i == j { T::zero() } else { off.clone() })
}
