//! Small linear-algebra kernels for the inner solver.

/// Symmetric matrix stored by rows over its lower envelope: row `i` keeps
/// columns `first[i]..=i`. Cholesky factorization fills only inside the
/// envelope, so banded collocation Hessians factor in near-linear time.
#[derive(Debug, Clone)]
pub(crate) struct Envelope {
    first: Vec<usize>,
    start: Vec<usize>,
    data: Vec<f64>,
}

impl Envelope {
    /// `first[i] <= i` is the leftmost stored column of row `i`.
    pub(crate) fn zeros(first: Vec<usize>) -> Self {
        let mut start = Vec::with_capacity(first.len() + 1);
        let mut len = 0;
        for (i, &f) in first.iter().enumerate() {
            debug_assert!(f <= i);
            start.push(len);
            len += i - f + 1;
        }
        start.push(len);
        Self {
            first,
            start,
            data: vec![0.0; len],
        }
    }

    #[cfg(test)]
    pub(crate) fn dense(n: usize) -> Self {
        Self::zeros(vec![0; n])
    }

    pub(crate) fn n(&self) -> usize {
        self.first.len()
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && j >= self.first[i]);
        self.start[i] + j - self.first[i]
    }

    /// Add `v` at `(i, j)` with `j <= i`.
    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub(crate) fn diag(&self, i: usize) -> f64 {
        self.data[self.slot(i, i)]
    }

    /// In-place Cholesky `A = L L^T`. Returns `false` if `A` is not
    /// numerically positive definite.
    pub(crate) fn factor(&mut self) -> bool {
        for i in 0..self.n() {
            let fi = self.first[i];
            let ri = self.start[i];
            for j in fi..=i {
                let fj = self.first[j];
                let rj = self.start[j];
                let k0 = fi.max(fj);
                let li = &self.data[ri + k0 - fi..ri + j - fi];
                let lj = &self.data[rj + k0 - fj..rj + j - fj];
                let sum = self.data[ri + j - fi] - dot(li, lj);
                if j == i {
                    if !(sum > 0.0) || !sum.is_finite() {
                        return false;
                    }
                    self.data[ri + i - fi] = sum.sqrt();
                } else {
                    self.data[ri + j - fi] = sum / self.data[rj + j - fj];
                }
            }
        }
        true
    }

    /// Solve `L L^T x = b` in place after [`Envelope::factor`].
    pub(crate) fn solve(&self, b: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            let s = b[i] - dot(&row[..i - fi], &b[fi..i]);
            b[i] = s / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.data[self.start[i]..self.start[i + 1]];
            b[i] /= row[i - fi];
            let x = b[i];
            for (bk, l) in b[fi..i].iter_mut().zip(&row[..i - fi]) {
                *bk -= l * x;
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let k = 4 * c;
        acc[0] += a[k] * b[k];
        acc[1] += a[k + 1] * b[k + 1];
        acc[2] += a[k + 2] * b[k + 2];
        acc[3] += a[k + 3] * b[k + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for k in 4 * chunks..a.len() {
        s += a[k] * b[k];
    }
    s
}

pub(crate) fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
}
