//! Orthonormal DCT-II on regular grids. Its basis vectors are the
//! eigenvectors of the 5-point Neumann Laplacian, so every lattice prior in
//! this crate is diagonal in it.

use std::f64::consts::PI;

#[derive(Debug, Clone)]
pub struct CosineTransform {
    n: usize,
    // table[k * n + i] = c_k cos(pi k (2i + 1) / 2n)
    table: Vec<f64>,
}

impl CosineTransform {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "transform length must be positive");
        let nf = n as f64;
        let mut table = vec![0.0; n * n];
        for k in 0..n {
            let scale = if k == 0 { (1.0 / nf).sqrt() } else { (2.0 / nf).sqrt() };
            for i in 0..n {
                table[k * n + i] = scale * (PI * k as f64 * (2 * i + 1) as f64 / (2.0 * nf)).cos();
            }
        }
        Self { n, table }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Nodal values to cosine coefficients, strided access on both sides.
    fn forward_strided(&self, x: &[f64], xs: usize, out: &mut [f64], os: usize) {
        for k in 0..self.n {
            let row = &self.table[k * self.n..(k + 1) * self.n];
            let mut acc = 0.0;
            for (i, t) in row.iter().enumerate() {
                acc += t * x[i * xs];
            }
            out[k * os] = acc;
        }
    }

    fn inverse_strided(&self, a: &[f64], as_: usize, out: &mut [f64], os: usize) {
        for i in 0..self.n {
            let mut acc = 0.0;
            for k in 0..self.n {
                acc += self.table[k * self.n + i] * a[k * as_];
            }
            out[i * os] = acc;
        }
    }

    pub fn forward(&self, x: &[f64], out: &mut [f64]) {
        self.forward_strided(x, 1, out, 1);
    }

    pub fn inverse(&self, a: &[f64], out: &mut [f64]) {
        self.inverse_strided(a, 1, out, 1);
    }

    /// Eigenvalue of the 1-d Neumann second-difference operator (unit spacing)
    /// for mode k.
    pub fn laplacian_eigenvalue(&self, k: usize) -> f64 {
        let s = (PI * k as f64 / (2.0 * self.n as f64)).sin();
        4.0 * s * s
    }
}

/// Separable 2-d transform for row-major `n1 x n2` grids.
#[derive(Debug, Clone)]
pub struct CosineTransform2d {
    rows: CosineTransform,
    cols: CosineTransform,
}

impl CosineTransform2d {
    pub fn new(n1: usize, n2: usize) -> Self {
        Self { rows: CosineTransform::new(n1), cols: CosineTransform::new(n2) }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.cols.len())
    }

    pub fn size(&self) -> usize {
        self.rows.len() * self.cols.len()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        let (n1, n2) = self.shape();
        debug_assert_eq!(x.len(), n1 * n2);
        let mut tmp = vec![0.0; n1 * n2];
        for r in 0..n1 {
            self.cols.forward_strided(&x[r * n2..], 1, &mut tmp[r * n2..], 1);
        }
        let mut out = vec![0.0; n1 * n2];
        for c in 0..n2 {
            self.rows.forward_strided(&tmp[c..], n2, &mut out[c..], n2);
        }
        out
    }

    pub fn inverse(&self, a: &[f64]) -> Vec<f64> {
        let (n1, n2) = self.shape();
        debug_assert_eq!(a.len(), n1 * n2);
        let mut tmp = vec![0.0; n1 * n2];
        for c in 0..n2 {
            self.rows.inverse_strided(&a[c..], n2, &mut tmp[c..], n2);
        }
        let mut out = vec![0.0; n1 * n2];
        for r in 0..n1 {
            self.cols.inverse_strided(&tmp[r * n2..], 1, &mut out[r * n2..], 1);
        }
        out
    }

    /// Neumann 5-point Laplacian eigenvalue (as a positive number) of the mode
    /// with flat index `k1 * n2 + k2`.
    pub fn laplacian_eigenvalue(&self, flat: usize) -> f64 {
        let n2 = self.cols.len();
        self.rows.laplacian_eigenvalue(flat / n2) + self.cols.laplacian_eigenvalue(flat % n2)
    }
}
