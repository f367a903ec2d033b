use rand::Rng;

/// Dense row-major matrix of `f64`. Vectors are `1 × n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn uniform<R: Rng>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        Self {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.gen_range(-bound..bound))
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|x| *x = value);
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.rows, self.cols)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

/// `out = x · w (+ bias)` for `rows` row vectors packed in `x`.
pub(crate) fn affine(x: &[f64], rows: usize, w: &Tensor, bias: Option<&Tensor>, out: &mut [f64]) {
    let (inp, outp) = (w.rows, w.cols);
    debug_assert_eq!(x.len(), rows * inp);
    debug_assert_eq!(out.len(), rows * outp);
    for r in 0..rows {
        let o = &mut out[r * outp..(r + 1) * outp];
        match bias {
            Some(b) => o.copy_from_slice(&b.data),
            None => o.fill(0.0),
        }
        for (k, &xv) in x[r * inp..(r + 1) * inp].iter().enumerate() {
            let wr = &w.data[k * outp..(k + 1) * outp];
            for (ov, &wv) in o.iter_mut().zip(wr) {
                *ov += xv * wv;
            }
        }
    }
}

/// Backward of [`affine`]: accumulates `dw += xᵀ·dy`, `db += Σ dy`, and
/// `dx += dy·wᵀ` when `dx` is given.
pub(crate) fn affine_backward(
    x: &[f64],
    rows: usize,
    w: &Tensor,
    dy: &[f64],
    dw: &mut Tensor,
    db: Option<&mut Tensor>,
    dx: Option<&mut [f64]>,
) {
    let (inp, outp) = (w.rows, w.cols);
    for r in 0..rows {
        let g = &dy[r * outp..(r + 1) * outp];
        for (k, &xv) in x[r * inp..(r + 1) * inp].iter().enumerate() {
            if xv == 0.0 {
                continue;
            }
            let dwr = &mut dw.data[k * outp..(k + 1) * outp];
            for (d, &gv) in dwr.iter_mut().zip(g) {
                *d += xv * gv;
            }
        }
    }
    if let Some(db) = db {
        for r in 0..rows {
            for (d, &gv) in db.data.iter_mut().zip(&dy[r * outp..(r + 1) * outp]) {
                *d += gv;
            }
        }
    }
    if let Some(dx) = dx {
        for r in 0..rows {
            let g = &dy[r * outp..(r + 1) * outp];
            for k in 0..inp {
                let wr = &w.data[k * outp..(k + 1) * outp];
                dx[r * inp + k] += dot(wr, g);
            }
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Numerically stable log-softmax.
pub fn log_softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln();
    z.iter().map(|&v| v - lse).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn softmax_examples() {
        assert_eq!(softmax(&[0.0, 0.0]), vec![0.5, 0.5]);
        let p = softmax(&[1.0, 0.0]);
        let e = std::f64::consts::E;
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((p[0] - 0.7311).abs() < 1e-4 && (p[1] - 0.2689).abs() < 1e-4);
        assert_eq!(softmax(&[1000.0, 0.0]), vec![1.0, 0.0]);
        let lp = log_softmax(&[1000.0, 0.0]);
        assert!(lp[0] == 0.0 && (lp[1] + 1000.0).abs() < 1e-9);
    }

    #[test]
    fn affine_and_backward_agree_with_hand_values() {
        let w = Tensor {
            rows: 2,
            cols: 3,
            data: vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let b = Tensor {
            rows: 1,
            cols: 3,
            data: vec![0.5, 0.0, -0.5],
        };
        let x = [1.0, -1.0];
        let mut y = [0.0; 3];
        affine(&x, 1, &w, Some(&b), &mut y);
        assert_eq!(y, [-2.5, -3.0, -3.5]);

        let dy = [1.0, 0.0, 2.0];
        let mut dw = w.zeros_like();
        let mut db = b.zeros_like();
        let mut dx = [0.0; 2];
        affine_backward(&x, 1, &w, &dy, &mut dw, Some(&mut db), Some(&mut dx));
        assert_eq!(dw.data, vec![1.0, 0.0, 2.0, -1.0, 0.0, -2.0]);
        assert_eq!(db.data, vec![1.0, 0.0, 2.0]);
        assert_eq!(dx, [7.0, 16.0]);
    }
}
