//! Banded LU factorisation with partial pivoting.

/// Square matrix with `kl` sub- and `ku` super-diagonals. Each row keeps
/// `kl` extra columns on the right for the fill-in that row swaps produce.
#[derive(Debug, Clone)]
pub(crate) struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub(crate) fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 2 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    pub(crate) fn clear(&mut self) {
        self.data.iter_mut().for_each(|v| *v = 0.0);
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(
            j + self.kl >= i && j <= i + self.kl + self.ku,
            "({i}, {j}) outside band"
        );
        i * self.width + (j + self.kl - i)
    }

    #[inline]
    pub(crate) fn add(&mut self, i: usize, j: usize, v: f64) {
        debug_assert!(j + self.kl >= i && j <= i + self.ku);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    #[inline]
    pub(crate) fn get(&self, i: usize, j: usize) -> f64 {
        self.data[self.idx(i, j)]
    }

    /// Overwrites `rhs` with the solution of `A x = rhs`, destroying `A`.
    /// Returns `false` if a zero pivot is met.
    pub(crate) fn solve_in_place(&mut self, rhs: &mut [f64]) -> bool {
        let n = self.n;
        let reach = self.kl + self.ku;
        for k in 0..n {
            let last = (k + self.kl).min(n - 1);
            let mut p = k;
            let mut best = self.get(k, k).abs();
            for i in k + 1..=last {
                let v = self.get(i, k).abs();
                if v > best {
                    best = v;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return false;
            }
            let jmax = (k + reach).min(n - 1);
            if p != k {
                for j in k..=jmax {
                    let (a, b) = (self.idx(k, j), self.idx(p, j));
                    self.data.swap(a, b);
                }
                rhs.swap(k, p);
            }
            let pivot = self.get(k, k);
            for i in k + 1..=last {
                let m = self.get(i, k) / pivot;
                if m == 0.0 {
                    continue;
                }
                for j in k + 1..=jmax {
                    let t = self.get(k, j);
                    let at = self.idx(i, j);
                    self.data[at] -= m * t;
                }
                rhs[i] -= m * rhs[k];
            }
        }
        for k in (0..n).rev() {
            let jmax = (k + reach).min(n - 1);
            let mut s = rhs[k];
            for j in k + 1..=jmax {
                s -= self.get(k, j) * rhs[j];
            }
            rhs[k] = s / self.get(k, k);
        }
        true
    }
}
