//! Reverse-mode differentiation over dense matrices.
//!
//! Every operation records its inputs and output value; [`Tape::backward`]
//! walks the records in reverse and applies each vector-Jacobian product.

use std::sync::Arc;

use nalgebra::DMatrix;

pub type Mat = DMatrix<f64>;

/// Handle to a recorded value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

const LN_EPS: f64 = 1e-5;
const GELU_K: f64 = 0.797_884_560_802_865_4; // sqrt(2/π)
const GELU_C: f64 = 0.044_715;

/// Fixed sparse row mixing `Y_i = Σ_j w_ij X_j`. Covers gathers,
/// permutations, neighbourhood means and pyramid up-sampling.
#[derive(Clone, Debug, PartialEq)]
pub struct RowMix {
    pub cols_in: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl RowMix {
    pub fn gather(rows_in: usize, idx: &[usize]) -> Self {
        RowMix {
            cols_in: rows_in,
            rows: idx.iter().map(|&j| vec![(j, 1.0)]).collect(),
        }
    }

    /// Row `i` of the output averages the rows listed in `groups[i]`;
    /// empty groups give zero rows.
    pub fn mean(rows_in: usize, groups: &[Vec<usize>]) -> Self {
        RowMix {
            cols_in: rows_in,
            rows: groups
                .iter()
                .map(|g| {
                    let w = 1.0 / g.len().max(1) as f64;
                    g.iter().map(|&j| (j, w)).collect()
                })
                .collect(),
        }
    }

    pub fn apply(&self, x: &Mat) -> Mat {
        debug_assert_eq!(x.nrows(), self.cols_in);
        let mut y = Mat::zeros(self.rows.len(), x.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                for c in 0..x.ncols() {
                    y[(i, c)] += w * x[(j, c)];
                }
            }
        }
        y
    }

    fn apply_transpose(&self, dy: &Mat) -> Mat {
        let mut dx = Mat::zeros(self.cols_in, dy.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                for c in 0..dy.ncols() {
                    dx[(j, c)] += w * dy[(i, c)];
                }
            }
        }
        dx
    }
}

#[derive(Clone, Debug)]
enum Op {
    Input,
    Param(usize),
    MatMul(Var, Var),
    /// `A Bᵀ`
    MatMulNt(Var, Var),
    /// Adds a `1 × c` row to every row.
    AddRow(Var, Var),
    Add(Var, Var),
    Scale(Var, f64),
    Gelu(Var),
    Tanh(Var),
    SoftmaxRows(Var),
    LayerNorm {
        x: Var,
        gain: Var,
        bias: Var,
        xhat: Mat,
        rstd: Vec<f64>,
    },
    SliceCols(Var, usize),
    ConcatCols(Vec<Var>),
    RowMix(Var, Arc<RowMix>),
}

struct Node {
    value: Mat,
    op: Op,
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Result of [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Option<Mat>>,
    params: Vec<(usize, Var)>,
}

impl Gradients {
    pub fn of(&self, v: Var) -> Option<&Mat> {
        self.grads[v.0].as_ref()
    }

    /// Adds the gradient of every parameter leaf into `out[param index]`.
    pub fn accumulate_params(&self, out: &mut [Mat]) {
        for &(p, v) in &self.params {
            if let Some(g) = &self.grads[v.0] {
                out[p] += g;
            }
        }
    }
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_K * (x + GELU_C * x * x * x)).tanh())
}

fn gelu_prime(x: f64) -> f64 {
    let t = (GELU_K * (x + GELU_C * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_K * (1.0 + 3.0 * GELU_C * x * x)
}

impl Tape {
    pub fn new() -> Self {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &Mat {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: Mat, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn input(&mut self, value: Mat) -> Var {
        self.push(value, Op::Input)
    }

    /// Leaf whose gradient is reported under parameter index `index`.
    pub fn param(&mut self, index: usize, value: Mat) -> Var {
        self.push(value, Op::Param(index))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b);
        self.push(v, Op::MatMul(a, b))
    }

    pub fn matmul_nt(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) * self.value(b).transpose();
        self.push(v, Op::MatMulNt(a, b))
    }

    pub fn add_row(&mut self, x: Var, row: Var) -> Var {
        let r = self.value(row);
        assert_eq!(r.nrows(), 1, "bias must be a single row");
        let mut v = self.value(x).clone();
        for mut out in v.row_iter_mut() {
            out += r;
        }
        self.push(v, Op::AddRow(x, row))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.value(a) + self.value(b);
        self.push(v, Op::Add(a, b))
    }

    pub fn scale(&mut self, a: Var, s: f64) -> Var {
        let v = self.value(a) * s;
        self.push(v, Op::Scale(a, s))
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&mut self, a: Var) -> Var {
        let v = self.value(a).map(gelu);
        self.push(v, Op::Gelu(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.value(a).map(f64::tanh);
        self.push(v, Op::Tanh(a))
    }

    pub fn softmax_rows(&mut self, a: Var) -> Var {
        let mut v = self.value(a).clone();
        for mut row in v.row_iter_mut() {
            let m = row.max();
            row.apply(|x| *x = (*x - m).exp());
            let s = row.sum();
            row /= s;
        }
        self.push(v, Op::SoftmaxRows(a))
    }

    /// Row-wise normalization followed by a per-column gain and bias.
    pub fn layer_norm(&mut self, x: Var, gain: Var, bias: Var) -> Var {
        let xv = self.value(x);
        let (n, c) = xv.shape();
        let mut xhat = Mat::zeros(n, c);
        let mut rstd = Vec::with_capacity(n);
        for i in 0..n {
            let row = xv.row(i);
            let mean = row.mean();
            let var = row.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / c as f64;
            let r = 1.0 / (var + LN_EPS).sqrt();
            for j in 0..c {
                xhat[(i, j)] = (xv[(i, j)] - mean) * r;
            }
            rstd.push(r);
        }
        let (g, b) = (self.value(gain), self.value(bias));
        let mut y = xhat.clone();
        for i in 0..n {
            for j in 0..c {
                y[(i, j)] = xhat[(i, j)] * g[(0, j)] + b[(0, j)];
            }
        }
        self.push(
            y,
            Op::LayerNorm {
                x,
                gain,
                bias,
                xhat,
                rstd,
            },
        )
    }

    pub fn slice_cols(&mut self, a: Var, start: usize, len: usize) -> Var {
        let v = self.value(a).columns(start, len).into_owned();
        self.push(v, Op::SliceCols(a, start))
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        let n = self.value(parts[0]).nrows();
        let total: usize = parts.iter().map(|&p| self.value(p).ncols()).sum();
        let mut v = Mat::zeros(n, total);
        let mut at = 0;
        for &p in parts {
            let pv = self.value(p);
            assert_eq!(pv.nrows(), n, "row count mismatch in concat");
            v.columns_mut(at, pv.ncols()).copy_from(pv);
            at += pv.ncols();
        }
        self.push(v, Op::ConcatCols(parts.to_vec()))
    }

    pub fn row_mix(&mut self, a: Var, mix: Arc<RowMix>) -> Var {
        let v = mix.apply(self.value(a));
        self.push(v, Op::RowMix(a, mix))
    }

    /// Back-propagates `seed = ∂L/∂out` through every recorded operation.
    pub fn backward(&self, out: Var, seed: Mat) -> Gradients {
        let mut grads: Vec<Option<Mat>> = vec![None; self.nodes.len()];
        assert_eq!(seed.shape(), self.value(out).shape(), "seed shape");
        grads[out.0] = Some(seed);
        let mut params = Vec::new();

        fn acc(grads: &mut [Option<Mat>], v: Var, g: Mat) {
            match &mut grads[v.0] {
                Some(existing) => *existing += g,
                slot => *slot = Some(g),
            }
        }

        for idx in (0..self.nodes.len()).rev() {
            let node = &self.nodes[idx];
            if let Op::Param(p) = node.op {
                params.push((p, Var(idx)));
                continue;
            }
            let Some(dy) = grads[idx].take() else { continue };
            match &node.op {
                Op::Input | Op::Param(_) => {
                    grads[idx] = Some(dy);
                    continue;
                }
                Op::MatMul(a, b) => {
                    let ga = &dy * self.value(*b).transpose();
                    let gb = self.value(*a).tr_mul(&dy);
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::MatMulNt(a, b) => {
                    let ga = &dy * self.value(*b);
                    let gb = dy.tr_mul(self.value(*a));
                    acc(&mut grads, *a, ga);
                    acc(&mut grads, *b, gb);
                }
                Op::AddRow(x, row) => {
                    let gr = Mat::from_fn(1, dy.ncols(), |_, j| dy.column(j).sum());
                    acc(&mut grads, *row, gr);
                    acc(&mut grads, *x, dy.clone());
                }
                Op::Add(a, b) => {
                    acc(&mut grads, *a, dy.clone());
                    acc(&mut grads, *b, dy.clone());
                }
                Op::Scale(a, s) => acc(&mut grads, *a, &dy * *s),
                Op::Gelu(a) => {
                    let g = dy.zip_map(self.value(*a), |d, x| d * gelu_prime(x));
                    acc(&mut grads, *a, g);
                }
                Op::Tanh(a) => {
                    let g = dy.zip_map(&node.value, |d, y| d * (1.0 - y * y));
                    acc(&mut grads, *a, g);
                }
                Op::SoftmaxRows(a) => {
                    let y = &node.value;
                    let mut g = dy.component_mul(y);
                    for i in 0..y.nrows() {
                        let s = g.row(i).sum();
                        for j in 0..y.ncols() {
                            g[(i, j)] -= y[(i, j)] * s;
                        }
                    }
                    acc(&mut grads, *a, g);
                }
                Op::LayerNorm {
                    x,
                    gain,
                    bias,
                    xhat,
                    rstd,
                } => {
                    let (n, c) = xhat.shape();
                    let gv = self.value(*gain);
                    let mut dg = Mat::zeros(1, c);
                    let mut db = Mat::zeros(1, c);
                    let mut dx = Mat::zeros(n, c);
                    for i in 0..n {
                        let mut m1 = 0.0;
                        let mut m2 = 0.0;
                        for j in 0..c {
                            let d = dy[(i, j)];
                            dg[(0, j)] += d * xhat[(i, j)];
                            db[(0, j)] += d;
                            let dh = d * gv[(0, j)];
                            m1 += dh;
                            m2 += dh * xhat[(i, j)];
                        }
                        m1 /= c as f64;
                        m2 /= c as f64;
                        for j in 0..c {
                            let dh = dy[(i, j)] * gv[(0, j)];
                            dx[(i, j)] = rstd[i] * (dh - m1 - xhat[(i, j)] * m2);
                        }
                    }
                    acc(&mut grads, *x, dx);
                    acc(&mut grads, *gain, dg);
                    acc(&mut grads, *bias, db);
                }
                Op::SliceCols(a, start) => {
                    let av = self.value(*a);
                    let mut g = Mat::zeros(av.nrows(), av.ncols());
                    g.columns_mut(*start, dy.ncols()).copy_from(&dy);
                    acc(&mut grads, *a, g);
                }
                Op::ConcatCols(parts) => {
                    let mut at = 0;
                    for &p in parts {
                        let w = self.value(p).ncols();
                        acc(&mut grads, p, dy.columns(at, w).into_owned());
                        at += w;
                    }
                }
                Op::RowMix(a, mix) => acc(&mut grads, *a, mix.apply_transpose(&dy)),
            }
        }
        Gradients { grads, params }
    }
}
