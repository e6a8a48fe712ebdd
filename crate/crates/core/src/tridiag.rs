/// Tridiagonal matrix stored by diagonals. `lower[i]` sits at `(i+1, i)`,
/// `upper[i]` at `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn is_symmetric(&self) -> bool {
        self.lower == self.upper
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i > 0 {
                    s += self.lower[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `A x = b` by Gaussian elimination with partial pivoting.
    /// Returns `None` if a pivot vanishes.
    pub fn solve(&self, b: &[f64]) -> Option<Vec<f64>> {
        let n = self.len();
        assert_eq!(b.len(), n);
        if n == 0 {
            return Some(Vec::new());
        }
        let mut dl = self.lower.clone();
        let mut d = self.diag.clone();
        let mut du = self.upper.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut x = b.to_vec();
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return None;
                }
                let f = dl[i] / d[i];
                d[i + 1] -= f * du[i];
                x[i + 1] -= f * x[i];
                dl[i] = 0.0;
            } else {
                // swap rows i and i+1
                let f = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - f * tmp;
                du[i] = tmp;
                if i + 1 < n - 1 {
                    du2[i] = du[i + 1];
                    du[i + 1] = -f * du2[i];
                }
                x.swap(i, i + 1);
                x[i + 1] -= f * x[i];
            }
        }
        if d[n - 1] == 0.0 {
            return None;
        }
        x[n - 1] /= d[n - 1];
        if n > 1 {
            x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
        }
        if x.iter().all(|v| v.is_finite()) {
            Some(x)
        } else {
            None
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn solve_inverts_mul(n in 1usize..40, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut a = Tridiagonal::zeros(n);
            for v in a.lower.iter_mut().chain(a.upper.iter_mut()) {
                *v = rng.gen_range(-1.0..1.0);
            }
            for v in a.diag.iter_mut() {
                // includes small and negative pivots to exercise row swaps
                *v = rng.gen_range(-0.5..0.5);
            }
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = a.mul_vec(&x);
            if let Some(y) = a.solve(&b) {
                let r = a.mul_vec(&y);
                let err = r.iter().zip(&b).fold(0.0f64, |m, (u, v)| m.max((u - v).abs()));
                prop_assert!(err < 1e-8 * (1.0 + y.iter().fold(0.0f64, |m, v| m.max(v.abs()))));
            }
        }
    }

    #[test]
    fn laplacian_stencil() {
        let n = 5;
        let mut a = Tridiagonal::zeros(n);
        a.diag.iter_mut().for_each(|d| *d = 2.0);
        a.lower.iter_mut().for_each(|d| *d = -1.0);
        a.upper.iter_mut().for_each(|d| *d = -1.0);
        let x = a.solve(&[1.0; 5]).unwrap();
        let expect = [2.5, 4.0, 4.5, 4.0, 2.5];
        for (a, b) in x.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(a.is_symmetric());
    }
}
