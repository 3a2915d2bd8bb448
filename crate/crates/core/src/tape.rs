//! Minimal reverse-mode automatic differentiation over `f64` vectors.
//!
//! A [`Tape`] records every operation of one forward pass. Parameters are
//! borrowed, not copied; [`Tape::backward`] returns one gradient buffer per
//! parameter tensor.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(usize),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Scale(Var, f64),
    Concat(Vec<Var>),
    /// `m` is row-major with `cols` columns; output has one entry per row.
    MatVec {
        m: Var,
        x: Var,
        cols: usize,
    },
    /// Transposed product; output has `cols` entries.
    MatTVec {
        m: Var,
        x: Var,
        cols: usize,
    },
    Gelu(Var),
    Dot(Var, Var),
    Softmax(Var),
    LogSumExp(Var),
    Gather(Var, Vec<usize>),
    Row {
        table: Var,
        row: usize,
        width: usize,
    },
}

struct Node {
    op: Op,
    value: Vec<f64>,
}

pub struct Tape<'p> {
    params: Vec<&'p [f64]>,
    param_vars: Vec<Option<Var>>,
    nodes: Vec<Node>,
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2 / pi)
const GELU_A: f64 = 0.044_715;

pub fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

pub fn log_sum_exp(x: &[f64]) -> f64 {
    let max = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

impl<'p> Tape<'p> {
    pub fn new(params: Vec<&'p [f64]>) -> Self {
        let n = params.len();
        Tape {
            params,
            param_vars: vec![None; n],
            nodes: Vec::new(),
        }
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> Var {
        self.nodes.push(Node { op, value });
        Var(self.nodes.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &[f64] {
        match self.nodes[v.0].op {
            Op::Param(i) => self.params[i],
            _ => &self.nodes[v.0].value,
        }
    }

    pub fn scalar(&self, v: Var) -> f64 {
        let val = self.value(v);
        debug_assert_eq!(val.len(), 1, "not a scalar");
        val[0]
    }

    /// Variable for parameter tensor `index`; created once per tape.
    pub fn param(&mut self, index: usize) -> Var {
        if let Some(v) = self.param_vars[index] {
            return v;
        }
        let v = self.push(Op::Param(index), Vec::new());
        self.param_vars[index] = Some(v);
        v
    }

    pub fn constant(&mut self, value: Vec<f64>) -> Var {
        self.push(Op::Constant, value)
    }

    pub fn scalar_constant(&mut self, value: f64) -> Var {
        self.constant(vec![value])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let value = zip_map(self.value(a), self.value(b), |x, y| x + y);
        self.push(Op::Add(a, b), value)
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Var {
        let value = zip_map(self.value(a), self.value(b), |x, y| x - y);
        self.push(Op::Sub(a, b), value)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let value = zip_map(self.value(a), self.value(b), |x, y| x * y);
        self.push(Op::Mul(a, b), value)
    }

    pub fn scale(&mut self, a: Var, k: f64) -> Var {
        let value = self.value(a).iter().map(|x| x * k).collect();
        self.push(Op::Scale(a, k), value)
    }

    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut value = Vec::with_capacity(parts.iter().map(|p| self.value(*p).len()).sum());
        for p in parts {
            value.extend_from_slice(self.value(*p));
        }
        self.push(Op::Concat(parts.to_vec()), value)
    }

    pub fn matvec(&mut self, m: Var, x: Var, rows: usize, cols: usize) -> Var {
        let (mv, xv) = (self.value(m), self.value(x));
        assert_eq!(mv.len(), rows * cols, "matvec: matrix shape");
        assert_eq!(xv.len(), cols, "matvec: vector length");
        let value = mv.chunks_exact(cols).map(|row| dot(row, xv)).collect();
        self.push(Op::MatVec { m, x, cols }, value)
    }

    pub fn mat_t_vec(&mut self, m: Var, x: Var, rows: usize, cols: usize) -> Var {
        let (mv, xv) = (self.value(m), self.value(x));
        assert_eq!(mv.len(), rows * cols, "mat_t_vec: matrix shape");
        assert_eq!(xv.len(), rows, "mat_t_vec: vector length");
        let mut value = vec![0.0; cols];
        for (row, &xi) in mv.chunks_exact(cols).zip(xv) {
            for (o, r) in value.iter_mut().zip(row) {
                *o += r * xi;
            }
        }
        self.push(Op::MatTVec { m, x, cols }, value)
    }

    /// `w x + b` for a `rows x cols` weight.
    pub fn affine(&mut self, w: Var, x: Var, b: Var, rows: usize, cols: usize) -> Var {
        let wx = self.matvec(w, x, rows, cols);
        self.add(wx, b)
    }

    pub fn gelu(&mut self, a: Var) -> Var {
        let value = self.value(a).iter().map(|&x| gelu(x)).collect();
        self.push(Op::Gelu(a), value)
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Var {
        let value = vec![dot(self.value(a), self.value(b))];
        self.push(Op::Dot(a, b), value)
    }

    pub fn softmax(&mut self, a: Var) -> Var {
        let value = softmax(self.value(a));
        self.push(Op::Softmax(a), value)
    }

    pub fn log_sum_exp(&mut self, a: Var) -> Var {
        let value = vec![log_sum_exp(self.value(a))];
        self.push(Op::LogSumExp(a), value)
    }

    pub fn gather(&mut self, a: Var, indices: &[usize]) -> Var {
        let av = self.value(a);
        let value = indices.iter().map(|&i| av[i]).collect();
        self.push(Op::Gather(a, indices.to_vec()), value)
    }

    pub fn index(&mut self, a: Var, i: usize) -> Var {
        self.gather(a, &[i])
    }

    /// Row `row` of a `? x width` table.
    pub fn row(&mut self, table: Var, row: usize, width: usize) -> Var {
        let value = self.value(table)[row * width..(row + 1) * width].to_vec();
        self.push(Op::Row { table, row, width }, value)
    }

    /// Gradients of scalar `root` with respect to every parameter tensor.
    pub fn backward(&self, root: Var) -> Vec<Vec<f64>> {
        assert_eq!(self.value(root).len(), 1, "backward needs a scalar root");
        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[root.0] = Some(vec![1.0]);
        let mut param_grads: Vec<Vec<f64>> =
            self.params.iter().map(|p| vec![0.0; p.len()]).collect();

        for i in (0..=root.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Constant => {}
                Op::Param(p) => accumulate(&mut param_grads[*p], &g),
                Op::Add(a, b) => {
                    self.acc(&mut grads, *a, &g);
                    self.acc(&mut grads, *b, &g);
                }
                Op::Sub(a, b) => {
                    self.acc(&mut grads, *a, &g);
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    self.acc(&mut grads, *b, &neg);
                }
                Op::Mul(a, b) => {
                    let ga = zip_map(&g, self.value(*b), |x, y| x * y);
                    let gb = zip_map(&g, self.value(*a), |x, y| x * y);
                    self.acc(&mut grads, *a, &ga);
                    self.acc(&mut grads, *b, &gb);
                }
                Op::Scale(a, k) => {
                    let ga: Vec<f64> = g.iter().map(|v| v * k).collect();
                    self.acc(&mut grads, *a, &ga);
                }
                Op::Concat(parts) => {
                    let mut off = 0;
                    for p in parts {
                        let n = self.value(*p).len();
                        self.acc(&mut grads, *p, &g[off..off + n]);
                        off += n;
                    }
                }
                Op::MatVec { m, x, cols } => {
                    let (mv, xv) = (self.value(*m), self.value(*x));
                    if self.needs_grad(*m) {
                        let mut gm = vec![0.0; mv.len()];
                        for (grow, gi) in gm.chunks_exact_mut(*cols).zip(&g) {
                            if *gi != 0.0 {
                                for (o, xj) in grow.iter_mut().zip(xv) {
                                    *o = gi * xj;
                                }
                            }
                        }
                        self.acc(&mut grads, *m, &gm);
                    }
                    if self.needs_grad(*x) {
                        let mut gx = vec![0.0; *cols];
                        for (row, gi) in mv.chunks_exact(*cols).zip(&g) {
                            for (o, r) in gx.iter_mut().zip(row) {
                                *o += r * gi;
                            }
                        }
                        self.acc(&mut grads, *x, &gx);
                    }
                }
                Op::MatTVec { m, x, cols } => {
                    let (mv, xv) = (self.value(*m), self.value(*x));
                    if self.needs_grad(*m) {
                        let mut gm = vec![0.0; mv.len()];
                        for (grow, xi) in gm.chunks_exact_mut(*cols).zip(xv) {
                            for (o, gj) in grow.iter_mut().zip(&g) {
                                *o = xi * gj;
                            }
                        }
                        self.acc(&mut grads, *m, &gm);
                    }
                    if self.needs_grad(*x) {
                        let gx: Vec<f64> = mv.chunks_exact(*cols).map(|row| dot(row, &g)).collect();
                        self.acc(&mut grads, *x, &gx);
                    }
                }
                Op::Gelu(a) => {
                    let ga = zip_map(&g, self.value(*a), |gi, x| gi * gelu_grad(x));
                    self.acc(&mut grads, *a, &ga);
                }
                Op::Dot(a, b) => {
                    let ga: Vec<f64> = self.value(*b).iter().map(|v| v * g[0]).collect();
                    let gb: Vec<f64> = self.value(*a).iter().map(|v| v * g[0]).collect();
                    self.acc(&mut grads, *a, &ga);
                    self.acc(&mut grads, *b, &gb);
                }
                Op::Softmax(a) => {
                    let y = &node.value;
                    let gy = dot(&g, y);
                    let ga = zip_map(&g, y, |gi, yi| yi * (gi - gy));
                    self.acc(&mut grads, *a, &ga);
                }
                Op::LogSumExp(a) => {
                    let p = softmax(self.value(*a));
                    let ga: Vec<f64> = p.iter().map(|pi| pi * g[0]).collect();
                    self.acc(&mut grads, *a, &ga);
                }
                Op::Gather(a, idx) => {
                    let mut ga = vec![0.0; self.value(*a).len()];
                    for (gi, &j) in g.iter().zip(idx) {
                        ga[j] += gi;
                    }
                    self.acc(&mut grads, *a, &ga);
                }
                Op::Row { table, row, width } => {
                    if self.needs_grad(*table) {
                        let mut gt = vec![0.0; self.value(*table).len()];
                        gt[row * width..(row + 1) * width].copy_from_slice(&g);
                        self.acc(&mut grads, *table, &gt);
                    }
                }
            }
        }
        param_grads
    }

    fn needs_grad(&self, v: Var) -> bool {
        !matches!(self.nodes[v.0].op, Op::Constant)
    }

    fn acc(&self, grads: &mut [Option<Vec<f64>>], v: Var, g: &[f64]) {
        if !self.needs_grad(v) {
            return;
        }
        match &mut grads[v.0] {
            Some(existing) => accumulate(existing, g),
            slot => *slot = Some(g.to_vec()),
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn zip_map(a: &[f64], b: &[f64], f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    assert_eq!(a.len(), b.len(), "length mismatch");
    a.iter().zip(b).map(|(&x, &y)| f(x, y)).collect()
}

fn accumulate(into: &mut [f64], g: &[f64]) {
    for (o, v) in into.iter_mut().zip(g) {
        *o += v;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn numeric(params: &[Vec<f64>], f: &dyn Fn(&mut Tape) -> Var, h: f64) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for (pi, p) in params.iter().enumerate() {
            let mut g = Vec::new();
            for j in 0..p.len() {
                let eval = |delta: f64| {
                    let mut ps = params.to_vec();
                    ps[pi][j] += delta;
                    let refs: Vec<&[f64]> = ps.iter().map(Vec::as_slice).collect();
                    let mut t = Tape::new(refs);
                    let r = f(&mut t);
                    t.scalar(r)
                };
                g.push((eval(h) - eval(-h)) / (2.0 * h));
            }
            out.push(g);
        }
        out
    }

    #[test]
    fn square_derivative() {
        let params = vec![vec![3.0]];
        let f = |t: &mut Tape| {
            let w = t.param(0);
            t.mul(w, w)
        };
        let mut t = Tape::new(vec![&params[0]]);
        let r = f(&mut t);
        assert_eq!(t.backward(r)[0], vec![6.0]);
        let n = numeric(&params, &f, 1e-3);
        assert!((n[0][0] - 6.0).abs() < 1e-9, "{}", n[0][0]);
    }

    #[test]
    fn composite_matches_finite_differences() {
        let params = vec![
            vec![0.3, -0.2, 0.5, 0.1, 0.7, -0.4],
            vec![0.05, -0.1],
            vec![0.2, -0.3, 0.6, 0.1],
        ];
        let f = |t: &mut Tape| {
            let w = t.param(0);
            let b = t.param(1);
            let table = t.param(2);
            let x = t.constant(vec![1.0, -2.0, 0.5]);
            let h = t.affine(w, x, b, 2, 3);
            let h = t.gelu(h);
            let e = t.row(table, 1, 2);
            let hm = t.mul(h, e);
            let cat = t.concat(&[h, hm]);
            let s = t.softmax(cat);
            let m = t.constant(vec![1.0, 2.0, -1.0, 0.5, 0.3, 0.3, -0.7, 1.1]);
            let ctx = t.mat_t_vec(m, s, 4, 2);
            let d = t.dot(ctx, h);
            let mv = t.matvec(w, x, 2, 3);
            let lse = t.log_sum_exp(mv);
            let sel = t.gather(cat, &[0, 3]);
            let lsel = t.log_sum_exp(sel);
            let diff = t.sub(lse, lsel);
            let sc = t.scale(d, 2.5);
            t.add(diff, sc)
        };
        let refs: Vec<&[f64]> = params.iter().map(Vec::as_slice).collect();
        let mut t = Tape::new(refs);
        let r = f(&mut t);
        let analytic = t.backward(r);
        let numeric = numeric(&params, &f, 1e-5);
        for (a, n) in analytic.iter().flatten().zip(numeric.iter().flatten()) {
            assert!((a - n).abs() < 1e-8, "{a} vs {n}");
        }
    }

    #[test]
    fn softmax_is_stable_and_normalized() {
        let p = softmax(&[1000.0, 1000.0 + 2f64.ln()]);
        assert!((p[0] - 1.0 / 3.0).abs() < 1e-12 && (p[1] - 2.0 / 3.0).abs() < 1e-12);
        assert!((log_sum_exp(&[0.0, 0.0]) - 2f64.ln()).abs() < 1e-15);
    }
}
