use crate::{Error, Result};

/// LU factorization with partial pivoting of a square band matrix with `kl`
/// sub- and `ku` super-diagonals. Row `i` stores columns
/// `i - kl ..= i + kl + ku` so that pivoting fill-in fits.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
    pivots: Vec<usize>,
    factored: bool,
}

impl BandedLu {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
            pivots: vec![0; n],
            factored: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        i * self.width + (j + self.kl - i)
    }

    pub fn clear(&mut self) {
        self.data.iter_mut().for_each(|x| *x = 0.0);
        self.factored = false;
    }

    /// Whether `(i, j)` lies inside the band of the unfactored matrix.
    #[inline]
    pub fn in_band(&self, i: usize, j: usize) -> bool {
        j + self.kl >= i && j <= i + self.ku && i < self.n && j < self.n
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(self.in_band(i, j));
        let k = self.idx(i, j);
        self.data[k] = value;
        self.factored = false;
    }

    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        debug_assert!(self.in_band(i, j));
        let k = self.idx(i, j);
        self.data[k] += value;
        self.factored = false;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if j + self.kl < i || j > i + self.kl + self.ku || j >= self.n {
            return 0.0;
        }
        self.data[self.idx(i, j)]
    }

    pub fn factor(&mut self) -> Result<()> {
        let n = self.n;
        let span = self.kl + self.ku;
        for k in 0..n {
            let last_row = (k + self.kl).min(n - 1);
            let mut piv = k;
            let mut best = self.data[self.idx(k, k)].abs();
            for r in k + 1..=last_row {
                let v = self.data[self.idx(r, k)].abs();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return Err(Error::SingularJacobian);
            }
            self.pivots[k] = piv;
            let last_col = (k + span).min(n - 1);
            if piv != k {
                for j in k..=last_col {
                    let a = self.idx(k, j);
                    let b = self.idx(piv, j);
                    self.data.swap(a, b);
                }
            }
            let pivot = self.data[self.idx(k, k)];
            for r in k + 1..=last_row {
                let rk = self.idx(r, k);
                let m = self.data[rk] / pivot;
                self.data[rk] = m;
                if m == 0.0 {
                    continue;
                }
                let row_k = self.idx(k, k);
                let row_r = self.idx(r, k);
                for off in 1..=last_col - k {
                    self.data[row_r + off] -= m * self.data[row_k + off];
                }
            }
        }
        self.factored = true;
        Ok(())
    }

    /// Solves `A x = b` in place; requires a prior [`factor`](Self::factor).
    pub fn solve(&self, b: &mut [f64]) -> Result<()> {
        if !self.factored {
            return Err(Error::SingularJacobian);
        }
        if b.len() != self.n {
            return Err(Error::ShapeMismatch(format!(
                "rhs {} vs matrix {}",
                b.len(),
                self.n
            )));
        }
        let n = self.n;
        for k in 0..n {
            let piv = self.pivots[k];
            if piv != k {
                b.swap(k, piv);
            }
            let bk = b[k];
            if bk != 0.0 {
                for r in k + 1..=(k + self.kl).min(n - 1) {
                    b[r] -= self.data[self.idx(r, k)] * bk;
                }
            }
        }
        let span = self.kl + self.ku;
        for k in (0..n).rev() {
            let mut acc = b[k];
            let row = self.idx(k, k);
            for off in 1..=(span.min(n - 1 - k)) {
                acc -= self.data[row + off] * b[k + off];
            }
            b[k] = acc / self.data[row];
        }
        Ok(())
    }
}
