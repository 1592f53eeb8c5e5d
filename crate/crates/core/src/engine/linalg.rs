//! Dense LU factorization with partial pivoting.

#[derive(Debug, Clone)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n] }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.n + c]
    }

    #[inline]
    pub fn add(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.n + c] += v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.n..(r + 1) * self.n]
    }

    /// Solves `A x = b` in place (`b` becomes `x`), destroying the matrix.
    /// Returns the index of the first zero pivot on failure.
    pub fn solve_in_place(&mut self, b: &mut [f64]) -> Result<(), usize> {
        let n = self.n;
        debug_assert_eq!(b.len(), n);
        let scale = self.data.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let tiny = scale * 1e-300_f64.max(f64::EPSILON * 1e-6);
        let a = &mut self.data;
        for k in 0..n {
            let mut p = k;
            let mut best = a[k * n + k].abs();
            for r in (k + 1)..n {
                let v = a[r * n + k].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if !(best > tiny) || !best.is_finite() {
                return Err(k);
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                b.swap(k, p);
            }
            let pivot = a[k * n + k];
            let (top, bottom) = a.split_at_mut((k + 1) * n);
            let pivot_row = &top[k * n + k + 1..];
            for (i, row) in bottom.chunks_exact_mut(n).enumerate() {
                let f = row[k] / pivot;
                if f == 0.0 {
                    continue;
                }
                row[k] = 0.0;
                for (x, y) in row[k + 1..].iter_mut().zip(pivot_row) {
                    *x -= f * y;
                }
                b[k + 1 + i] -= f * b[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = b[k];
            for c in (k + 1)..n {
                s -= a[k * n + c] * b[c];
            }
            b[k] = s / a[k * n + k];
        }
        Ok(())
    }
}
