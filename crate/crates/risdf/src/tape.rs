//! Reverse-mode automatic differentiation on a flat arena tape.
//!
//! Nodes hold vector values. Complex vectors use a halves layout:
//! `[re_0..re_{n-1}, im_0..im_{n-1}]`; complex matrices are row-major with
//! the same re/im split. Parameters live outside the tape in a
//! [`ParamStore`], so one parameter set can back many tapes.

use std::rc::Rc;

pub type NodeId = usize;
pub type ParamId = usize;

#[derive(Debug, Clone)]
pub struct Param {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Named parameter tensors in a fixed order. The flat layout (row-major
/// per tensor, tensors in insertion order) is what checkpoints and the
/// gradient check index into.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    pub params: Vec<Param>,
}

impl ParamStore {
    pub fn add(&mut self, name: impl Into<String>, rows: usize, cols: usize, data: Vec<f64>) -> ParamId {
        assert_eq!(data.len(), rows * cols);
        self.params.push(Param {
            name: name.into(),
            rows,
            cols,
            data,
        });
        self.params.len() - 1
    }

    pub fn total_len(&self) -> usize {
        self.params.iter().map(|p| p.data.len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.total_len());
        for p in &self.params {
            out.extend_from_slice(&p.data);
        }
        out
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.total_len());
        let mut off = 0;
        for p in &mut self.params {
            let len = p.data.len();
            p.data.copy_from_slice(&flat[off..off + len]);
            off += len;
        }
    }

    /// (param index, offset within it) for a flat coordinate.
    pub fn locate(&self, mut coord: usize) -> (ParamId, usize) {
        for (pid, p) in self.params.iter().enumerate() {
            if coord < p.data.len() {
                return (pid, coord);
            }
            coord -= p.data.len();
        }
        panic!("coordinate out of range");
    }
}

/// Per-parameter gradient buffers, same shapes as the store.
#[derive(Debug, Clone)]
pub struct Gradients {
    pub by_param: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(store: &ParamStore) -> Self {
        Gradients {
            by_param: store.params.iter().map(|p| vec![0.0; p.data.len()]).collect(),
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for g in &self.by_param {
            out.extend_from_slice(g);
        }
        out
    }

    pub fn add_scaled(&mut self, other: &Gradients, scale: f64) {
        for (a, b) in self.by_param.iter_mut().zip(other.by_param.iter()) {
            for (x, y) in a.iter_mut().zip(b.iter()) {
                *x += scale * y;
            }
        }
    }
}

/// Dense constant real matrix, shared across tape nodes.
#[derive(Debug)]
pub struct RealMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl RealMat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Rc<Self> {
        assert_eq!(data.len(), rows * cols);
        Rc::new(RealMat { rows, cols, data })
    }
}

enum Op {
    Const,
    /// y = W x + b with W, b in the parameter store.
    Affine { w: ParamId, b: ParamId, x: NodeId },
    /// y = A x + c with constant A (and optional constant shift).
    AffineConst { a: Rc<RealMat>, x: NodeId },
    Softplus { x: NodeId },
    Concat { xs: Vec<NodeId> },
    Slice { x: NodeId, start: usize },
    MeanStack { xs: Vec<NodeId> },
    MaxStack { xs: Vec<NodeId>, arg: Vec<u32> },
    /// Per entry n of a 2N real vector: (a,b) -> (a,b)/sqrt(a^2+b^2).
    UnitComplex { x: NodeId },
    SumSquares { xs: Vec<NodeId> },
    /// y = x * sqrt(p / t); t is a scalar node.
    ScaleBySqrt { x: NodeId, t: NodeId, p: f64 },
    /// Complex matrix (rows x cols, halves layout) times complex vector.
    CMatVec { m: NodeId, x: NodeId, rows: usize, cols: usize },
    /// |u^T v|^2 (bilinear, no conjugation).
    CSqInnerT { u: NodeId, v: NodeId },
    /// |u^H v|^2.
    CSqInnerH { u: NodeId, v: NodeId },
    /// ||u||^2.
    CNormSq { u: NodeId },
    Add { a: NodeId, b: NodeId },
    Mul { a: NodeId, b: NodeId },
    Div { a: NodeId, b: NodeId },
    AddConst { a: NodeId },
    MulConst { a: NodeId, c: f64 },
    Square { a: NodeId },
    /// log2(1 + a).
    Log2OnePlus { a: NodeId },
    MinZero { a: NodeId },
    SumMany { xs: Vec<NodeId> },
}

pub struct Tape<'p> {
    store: &'p ParamStore,
    ops: Vec<Op>,
    spans: Vec<(usize, usize)>,
    vals: Vec<f64>,
}

// centered so features stay zero-mean-ish through deep stacks
fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p() - std::f64::consts::LN_2
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl<'p> Tape<'p> {
    pub fn new(store: &'p ParamStore) -> Self {
        Tape {
            store,
            ops: Vec::with_capacity(1024),
            spans: Vec::with_capacity(1024),
            vals: Vec::with_capacity(16 * 1024),
        }
    }

    pub fn value(&self, id: NodeId) -> &[f64] {
        let (off, len) = self.spans[id];
        &self.vals[off..off + len]
    }

    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        debug_assert_eq!(v.len(), 1);
        v[0]
    }

    pub fn len_of(&self, id: NodeId) -> usize {
        self.spans[id].1
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> NodeId {
        let off = self.vals.len();
        self.vals.extend_from_slice(&value);
        self.spans.push((off, value.len()));
        self.ops.push(op);
        self.spans.len() - 1
    }

    fn push_computed(&mut self, op: Op, len: usize, fill: impl FnOnce(&[f64], &mut [f64])) -> NodeId {
        let off = self.vals.len();
        self.vals.resize(off + len, 0.0);
        // split borrow: previous values are read-only while the new span fills
        let (prev, new) = self.vals.split_at_mut(off);
        fill(prev, new);
        self.spans.push((off, len));
        self.ops.push(op);
        self.spans.len() - 1
    }

    fn span(&self, id: NodeId) -> (usize, usize) {
        self.spans[id]
    }

    pub fn constant(&mut self, data: &[f64]) -> NodeId {
        self.push(Op::Const, data.to_vec())
    }

    pub fn scalar_const(&mut self, v: f64) -> NodeId {
        self.push(Op::Const, vec![v])
    }

    pub fn affine(&mut self, w: ParamId, b: ParamId, x: NodeId) -> NodeId {
        let wp = &self.store.params[w];
        let bp = &self.store.params[b];
        assert_eq!(wp.cols, self.len_of(x), "affine input width mismatch ({})", wp.name);
        assert_eq!(bp.rows, wp.rows, "bias width mismatch ({})", bp.name);
        let (xo, xl) = self.span(x);
        let rows = wp.rows;
        let cols = wp.cols;
        let wd = &wp.data;
        let bd = &bp.data;
        let mut out = vec![0.0; rows];
        {
            let xv = &self.vals[xo..xo + xl];
            for r in 0..rows {
                let row = &wd[r * cols..(r + 1) * cols];
                let mut acc = bd[r];
                for c in 0..cols {
                    acc += row[c] * xv[c];
                }
                out[r] = acc;
            }
        }
        self.push(Op::Affine { w, b, x }, out)
    }

    pub fn affine_const(&mut self, a: Rc<RealMat>, c: Option<Rc<Vec<f64>>>, x: NodeId) -> NodeId {
        assert_eq!(a.cols, self.len_of(x));
        if let Some(cv) = &c {
            assert_eq!(cv.len(), a.rows);
        }
        let (xo, xl) = self.span(x);
        let rows = a.rows;
        let cols = a.cols;
        let mut out = vec![0.0; rows];
        {
            let xv = &self.vals[xo..xo + xl];
            for r in 0..rows {
                let row = &a.data[r * cols..(r + 1) * cols];
                let mut acc = c.as_ref().map_or(0.0, |cv| cv[r]);
                for cc in 0..cols {
                    acc += row[cc] * xv[cc];
                }
                out[r] = acc;
            }
        }
        self.push(Op::AffineConst { a, x }, out)
    }

    pub fn softplus(&mut self, x: NodeId) -> NodeId {
        let (xo, xl) = self.span(x);
        self.push_computed(Op::Softplus { x }, xl, |prev, new| {
            for (o, v) in new.iter_mut().zip(prev[xo..xo + xl].iter()) {
                *o = softplus(*v);
            }
        })
    }

    pub fn concat(&mut self, xs: &[NodeId]) -> NodeId {
        let total: usize = xs.iter().map(|&x| self.len_of(x)).sum();
        let spans: Vec<_> = xs.iter().map(|&x| self.span(x)).collect();
        self.push_computed(Op::Concat { xs: xs.to_vec() }, total, |prev, new| {
            let mut at = 0;
            for (o, l) in spans {
                new[at..at + l].copy_from_slice(&prev[o..o + l]);
                at += l;
            }
        })
    }

    pub fn slice(&mut self, x: NodeId, start: usize, len: usize) -> NodeId {
        let (xo, xl) = self.span(x);
        assert!(start + len <= xl);
        self.push_computed(Op::Slice { x, start }, len, |prev, new| {
            new.copy_from_slice(&prev[xo + start..xo + start + len]);
        })
    }

    pub fn mean_stack(&mut self, xs: &[NodeId]) -> NodeId {
        assert!(!xs.is_empty());
        let len = self.len_of(xs[0]);
        let spans: Vec<_> = xs
            .iter()
            .map(|&x| {
                assert_eq!(self.len_of(x), len, "mean over unequal widths");
                self.span(x)
            })
            .collect();
        let inv = 1.0 / xs.len() as f64;
        self.push_computed(Op::MeanStack { xs: xs.to_vec() }, len, |prev, new| {
            for (o, l) in spans {
                for (acc, v) in new.iter_mut().zip(prev[o..o + l].iter()) {
                    *acc += v;
                }
            }
            for v in new.iter_mut() {
                *v *= inv;
            }
        })
    }

    pub fn max_stack(&mut self, xs: &[NodeId]) -> NodeId {
        assert!(!xs.is_empty());
        let len = self.len_of(xs[0]);
        let spans: Vec<_> = xs
            .iter()
            .map(|&x| {
                assert_eq!(self.len_of(x), len, "max over unequal widths");
                self.span(x)
            })
            .collect();
        let mut arg = vec![0u32; len];
        let id = self.push_computed(
            Op::MaxStack {
                xs: xs.to_vec(),
                arg: Vec::new(),
            },
            len,
            |prev, new| {
                for (idx, (o, l)) in spans.iter().enumerate() {
                    let src = &prev[*o..*o + *l];
                    if idx == 0 {
                        new.copy_from_slice(src);
                    } else {
                        for (t, (cur, v)) in new.iter_mut().zip(src.iter()).enumerate() {
                            if *v > *cur {
                                *cur = *v;
                                arg[t] = idx as u32;
                            }
                        }
                    }
                }
            },
        );
        if let Op::MaxStack { arg: slot, .. } = &mut self.ops[id] {
            *slot = arg;
        }
        id
    }

    pub fn unit_complex(&mut self, x: NodeId) -> NodeId {
        let (xo, xl) = self.span(x);
        assert!(xl % 2 == 0);
        let n = xl / 2;
        self.push_computed(Op::UnitComplex { x }, xl, |prev, new| {
            let xv = &prev[xo..xo + xl];
            for t in 0..n {
                let a = xv[t];
                let b = xv[n + t];
                let s = (a * a + b * b).sqrt();
                if s == 0.0 {
                    new[t] = 1.0;
                    new[n + t] = 0.0;
                } else {
                    new[t] = a / s;
                    new[n + t] = b / s;
                }
            }
        })
    }

    pub fn sum_squares(&mut self, xs: &[NodeId]) -> NodeId {
        let spans: Vec<_> = xs.iter().map(|&x| self.span(x)).collect();
        self.push_computed(Op::SumSquares { xs: xs.to_vec() }, 1, |prev, new| {
            let mut acc = 0.0;
            for (o, l) in spans {
                for v in &prev[o..o + l] {
                    acc += v * v;
                }
            }
            new[0] = acc;
        })
    }

    pub fn scale_by_sqrt(&mut self, x: NodeId, t: NodeId, p: f64) -> NodeId {
        assert_eq!(self.len_of(t), 1);
        let (xo, xl) = self.span(x);
        let (to, _) = self.span(t);
        self.push_computed(Op::ScaleBySqrt { x, t, p }, xl, |prev, new| {
            let tv = prev[to];
            let s = if tv == 0.0 { 1.0 } else { (p / tv).sqrt() };
            for (o, v) in new.iter_mut().zip(prev[xo..xo + xl].iter()) {
                *o = s * v;
            }
        })
    }

    pub fn cmatvec(&mut self, m: NodeId, x: NodeId, rows: usize, cols: usize) -> NodeId {
        assert_eq!(self.len_of(m), 2 * rows * cols);
        assert_eq!(self.len_of(x), 2 * cols);
        let (mo, _) = self.span(m);
        let (xo, _) = self.span(x);
        self.push_computed(Op::CMatVec { m, x, rows, cols }, 2 * rows, |prev, new| {
            let rc = rows * cols;
            let m_re = &prev[mo..mo + rc];
            let m_im = &prev[mo + rc..mo + 2 * rc];
            let x_re = &prev[xo..xo + cols];
            let x_im = &prev[xo + cols..xo + 2 * cols];
            for r in 0..rows {
                let mut yr = 0.0;
                let mut yi = 0.0;
                let base = r * cols;
                for c in 0..cols {
                    let mr = m_re[base + c];
                    let mi = m_im[base + c];
                    yr += mr * x_re[c] - mi * x_im[c];
                    yi += mr * x_im[c] + mi * x_re[c];
                }
                new[r] = yr;
                new[rows + r] = yi;
            }
        })
    }

    fn complex_inner(&self, u: NodeId, v: NodeId, conj_u: bool) -> (f64, f64) {
        let uv = self.value(u);
        let vv = self.value(v);
        let n = uv.len() / 2;
        let mut zr = 0.0;
        let mut zi = 0.0;
        for t in 0..n {
            let (ur, ui) = (uv[t], uv[n + t]);
            let (vr, vi) = (vv[t], vv[n + t]);
            if conj_u {
                zr += ur * vr + ui * vi;
                zi += ur * vi - ui * vr;
            } else {
                zr += ur * vr - ui * vi;
                zi += ur * vi + ui * vr;
            }
        }
        (zr, zi)
    }

    pub fn csq_inner_t(&mut self, u: NodeId, v: NodeId) -> NodeId {
        assert_eq!(self.len_of(u), self.len_of(v));
        let (zr, zi) = self.complex_inner(u, v, false);
        self.push(Op::CSqInnerT { u, v }, vec![zr * zr + zi * zi])
    }

    pub fn csq_inner_h(&mut self, u: NodeId, v: NodeId) -> NodeId {
        assert_eq!(self.len_of(u), self.len_of(v));
        let (zr, zi) = self.complex_inner(u, v, true);
        self.push(Op::CSqInnerH { u, v }, vec![zr * zr + zi * zi])
    }

    pub fn cnorm_sq(&mut self, u: NodeId) -> NodeId {
        let s: f64 = self.value(u).iter().map(|v| v * v).sum();
        self.push(Op::CNormSq { u }, vec![s])
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.scalar(a) + self.scalar(b);
        self.push(Op::Add { a, b }, vec![v])
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.scalar(a) * self.scalar(b);
        self.push(Op::Mul { a, b }, vec![v])
    }

    pub fn div(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.scalar(a) / self.scalar(b);
        self.push(Op::Div { a, b }, vec![v])
    }

    pub fn add_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.scalar(a) + c;
        self.push(Op::AddConst { a }, vec![v])
    }

    pub fn mul_const(&mut self, a: NodeId, c: f64) -> NodeId {
        let v = self.scalar(a) * c;
        self.push(Op::MulConst { a, c }, vec![v])
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let v = self.scalar(a);
        self.push(Op::Square { a }, vec![v * v])
    }

    pub fn log2_one_plus(&mut self, a: NodeId) -> NodeId {
        let v = self.scalar(a).ln_1p() / std::f64::consts::LN_2;
        self.push(Op::Log2OnePlus { a }, vec![v])
    }

    pub fn min_zero(&mut self, a: NodeId) -> NodeId {
        let v = self.scalar(a).min(0.0);
        self.push(Op::MinZero { a }, vec![v])
    }

    pub fn sum_many(&mut self, xs: &[NodeId]) -> NodeId {
        let v: f64 = xs.iter().map(|&x| self.scalar(x)).sum();
        self.push(Op::SumMany { xs: xs.to_vec() }, vec![v])
    }

    /// Reverse pass from a scalar loss node. Returns parameter gradients.
    pub fn backward(&self, loss: NodeId) -> Gradients {
        assert_eq!(self.len_of(loss), 1, "loss must be scalar");
        let mut grads = Gradients::zeros_like(self.store);
        let mut g = vec![0.0; self.vals.len()];
        g[self.spans[loss].0] = 1.0;

        for id in (0..=loss).rev() {
            let (yo, yl) = self.spans[id];
            // skip nodes with no incoming gradient
            if g[yo..yo + yl].iter().all(|&v| v == 0.0) {
                continue;
            }
            match &self.ops[id] {
                Op::Const => {}
                Op::Affine { w, b, x } => {
                    let wp = &self.store.params[*w];
                    let rows = wp.rows;
                    let cols = wp.cols;
                    let (xo, _) = self.spans[*x];
                    let gw = &mut grads.by_param[*w];
                    for r in 0..rows {
                        let gy = g[yo + r];
                        if gy == 0.0 {
                            continue;
                        }
                        let base = r * cols;
                        for c in 0..cols {
                            gw[base + c] += gy * self.vals[xo + c];
                        }
                    }
                    let gb = &mut grads.by_param[*b];
                    for r in 0..rows {
                        gb[r] += g[yo + r];
                    }
                    for c in 0..cols {
                        let mut acc = 0.0;
                        for r in 0..rows {
                            acc += g[yo + r] * wp.data[r * cols + c];
                        }
                        g[xo + c] += acc;
                    }
                }
                Op::AffineConst { a, x } => {
                    let (xo, _) = self.spans[*x];
                    for c in 0..a.cols {
                        let mut acc = 0.0;
                        for r in 0..a.rows {
                            acc += g[yo + r] * a.data[r * a.cols + c];
                        }
                        g[xo + c] += acc;
                    }
                }
                Op::Softplus { x } => {
                    let (xo, xl) = self.spans[*x];
                    for t in 0..xl {
                        g[xo + t] += g[yo + t] * sigmoid(self.vals[xo + t]);
                    }
                }
                Op::Concat { xs } => {
                    let mut at = 0;
                    for &x in xs {
                        let (xo, xl) = self.spans[x];
                        for t in 0..xl {
                            g[xo + t] += g[yo + at + t];
                        }
                        at += xl;
                    }
                }
                Op::Slice { x, start } => {
                    let (xo, _) = self.spans[*x];
                    for t in 0..yl {
                        g[xo + start + t] += g[yo + t];
                    }
                }
                Op::MeanStack { xs } => {
                    let inv = 1.0 / xs.len() as f64;
                    for &x in xs {
                        let (xo, _) = self.spans[x];
                        for t in 0..yl {
                            g[xo + t] += g[yo + t] * inv;
                        }
                    }
                }
                Op::MaxStack { xs, arg } => {
                    for (t, &winner) in arg.iter().enumerate() {
                        let (xo, _) = self.spans[xs[winner as usize]];
                        g[xo + t] += g[yo + t];
                    }
                }
                Op::UnitComplex { x } => {
                    let (xo, xl) = self.spans[*x];
                    let n = xl / 2;
                    for t in 0..n {
                        let a = self.vals[xo + t];
                        let b = self.vals[xo + n + t];
                        let s2 = a * a + b * b;
                        if s2 == 0.0 {
                            continue;
                        }
                        let s3 = s2 * s2.sqrt();
                        let gre = g[yo + t];
                        let gim = g[yo + n + t];
                        g[xo + t] += gre * (b * b / s3) + gim * (-a * b / s3);
                        g[xo + n + t] += gre * (-a * b / s3) + gim * (a * a / s3);
                    }
                }
                Op::SumSquares { xs } => {
                    let gy = g[yo];
                    for &x in xs {
                        let (xo, xl) = self.spans[x];
                        for t in 0..xl {
                            g[xo + t] += gy * 2.0 * self.vals[xo + t];
                        }
                    }
                }
                Op::ScaleBySqrt { x, t, p } => {
                    let (xo, xl) = self.spans[*x];
                    let (to, _) = self.spans[*t];
                    let tv = self.vals[to];
                    if tv == 0.0 {
                        for i in 0..xl {
                            g[xo + i] += g[yo + i];
                        }
                    } else {
                        let s = (p / tv).sqrt();
                        let mut gdotx = 0.0;
                        for i in 0..xl {
                            g[xo + i] += g[yo + i] * s;
                            gdotx += g[yo + i] * self.vals[xo + i];
                        }
                        g[to] += gdotx * (-s / (2.0 * tv));
                    }
                }
                Op::CMatVec { m, x, rows, cols } => {
                    let (mo, _) = self.spans[*m];
                    let (xo, _) = self.spans[*x];
                    let rc = rows * cols;
                    for r in 0..*rows {
                        let gyr = g[yo + r];
                        let gyi = g[yo + rows + r];
                        if gyr == 0.0 && gyi == 0.0 {
                            continue;
                        }
                        let base = r * cols;
                        for c in 0..*cols {
                            let mr = self.vals[mo + base + c];
                            let mi = self.vals[mo + rc + base + c];
                            let xr = self.vals[xo + c];
                            let xi = self.vals[xo + cols + c];
                            g[xo + c] += gyr * mr + gyi * mi;
                            g[xo + cols + c] += -gyr * mi + gyi * mr;
                            g[mo + base + c] += gyr * xr + gyi * xi;
                            g[mo + rc + base + c] += -gyr * xi + gyi * xr;
                        }
                    }
                }
                Op::CSqInnerT { u, v } => {
                    let gy = g[yo];
                    let (zr, zi) = self.complex_inner(*u, *v, false);
                    let (uo, ul) = self.spans[*u];
                    let (vo, _) = self.spans[*v];
                    let n = ul / 2;
                    for t in 0..n {
                        let (ur, ui) = (self.vals[uo + t], self.vals[uo + n + t]);
                        let (vr, vi) = (self.vals[vo + t], self.vals[vo + n + t]);
                        g[uo + t] += gy * 2.0 * (zr * vr + zi * vi);
                        g[uo + n + t] += gy * 2.0 * (-zr * vi + zi * vr);
                        g[vo + t] += gy * 2.0 * (zr * ur + zi * ui);
                        g[vo + n + t] += gy * 2.0 * (-zr * ui + zi * ur);
                    }
                }
                Op::CSqInnerH { u, v } => {
                    let gy = g[yo];
                    let (zr, zi) = self.complex_inner(*u, *v, true);
                    let (uo, ul) = self.spans[*u];
                    let (vo, _) = self.spans[*v];
                    let n = ul / 2;
                    for t in 0..n {
                        let (ur, ui) = (self.vals[uo + t], self.vals[uo + n + t]);
                        let (vr, vi) = (self.vals[vo + t], self.vals[vo + n + t]);
                        g[uo + t] += gy * 2.0 * (zr * vr + zi * vi);
                        g[uo + n + t] += gy * 2.0 * (zr * vi - zi * vr);
                        g[vo + t] += gy * 2.0 * (zr * ur - zi * ui);
                        g[vo + n + t] += gy * 2.0 * (zr * ui + zi * ur);
                    }
                }
                Op::CNormSq { u } => {
                    let gy = g[yo];
                    let (uo, ul) = self.spans[*u];
                    for t in 0..ul {
                        g[uo + t] += gy * 2.0 * self.vals[uo + t];
                    }
                }
                Op::Add { a, b } => {
                    g[self.spans[*a].0] += g[yo];
                    g[self.spans[*b].0] += g[yo];
                }
                Op::Mul { a, b } => {
                    let av = self.vals[self.spans[*a].0];
                    let bv = self.vals[self.spans[*b].0];
                    g[self.spans[*a].0] += g[yo] * bv;
                    g[self.spans[*b].0] += g[yo] * av;
                }
                Op::Div { a, b } => {
                    let av = self.vals[self.spans[*a].0];
                    let bv = self.vals[self.spans[*b].0];
                    g[self.spans[*a].0] += g[yo] / bv;
                    g[self.spans[*b].0] += -g[yo] * av / (bv * bv);
                }
                Op::AddConst { a } => {
                    g[self.spans[*a].0] += g[yo];
                }
                Op::MulConst { a, c } => {
                    g[self.spans[*a].0] += g[yo] * c;
                }
                Op::Square { a } => {
                    let av = self.vals[self.spans[*a].0];
                    g[self.spans[*a].0] += g[yo] * 2.0 * av;
                }
                Op::Log2OnePlus { a } => {
                    let av = self.vals[self.spans[*a].0];
                    g[self.spans[*a].0] += g[yo] / ((1.0 + av) * std::f64::consts::LN_2);
                }
                Op::MinZero { a } => {
                    let av = self.vals[self.spans[*a].0];
                    if av < 0.0 {
                        g[self.spans[*a].0] += g[yo];
                    }
                }
                Op::SumMany { xs } => {
                    for &x in xs {
                        g[self.spans[x].0] += g[yo];
                    }
                }
            }
        }
        grads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Central finite differences over the flattened store vs analytic
    /// gradients, for an arbitrary graph builder.
    fn check_grad(store: &mut ParamStore, build: impl Fn(&mut Tape) -> NodeId) -> f64 {
        let (analytic, base_grads) = {
            let mut tape = Tape::new(store);
            let loss = build(&mut tape);
            let g = tape.backward(loss);
            (tape.scalar(loss), g.flatten())
        };
        let _ = analytic;
        let flat = store.flatten();
        let h = 1e-6;
        let mut worst = 0.0f64;
        for i in 0..flat.len() {
            let mut fp = flat.clone();
            fp[i] += h;
            store.set_flat(&fp);
            let up = {
                let mut tape = Tape::new(store);
                let loss = build(&mut tape);
                tape.scalar(loss)
            };
            fp[i] -= 2.0 * h;
            store.set_flat(&fp);
            let dn = {
                let mut tape = Tape::new(store);
                let loss = build(&mut tape);
                tape.scalar(loss)
            };
            let fd = (up - dn) / (2.0 * h);
            let an = base_grads[i];
            let denom = fd.abs().max(an.abs()).max(1e-8);
            worst = worst.max((fd - an).abs() / denom);
        }
        store.set_flat(&flat);
        worst
    }

    fn seeded_store(sizes: &[(usize, usize)]) -> ParamStore {
        let mut store = ParamStore::default();
        let mut state = 0x9e3779b97f4a7c15u64;
        for (idx, &(r, c)) in sizes.iter().enumerate() {
            let data: Vec<f64> = (0..r * c)
                .map(|_| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
                })
                .collect();
            store.add(format!("p{idx}"), r, c, data);
        }
        store
    }

    #[test]
    fn affine_softplus_grad() {
        let mut store = seeded_store(&[(3, 4), (3, 1), (1, 3), (1, 1)]);
        let worst = check_grad(&mut store, |tape| {
            let x = tape.constant(&[0.3, -0.7, 1.1, 0.2]);
            let h = tape.affine(0, 1, x);
            let h = tape.softplus(h);
            let y = tape.affine(2, 3, h);
            tape.square(y)
        });
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn aggregation_grads() {
        let mut store = seeded_store(&[(4, 2), (4, 1), (4, 2), (4, 1), (1, 4), (1, 1)]);
        let worst = check_grad(&mut store, |tape| {
            let x1 = tape.constant(&[1.0, -0.5]);
            let x2 = tape.constant(&[0.2, 0.9]);
            let a = tape.affine(0, 1, x1);
            let b = tape.affine(2, 3, x2);
            let mean = tape.mean_stack(&[a, b]);
            let max = tape.max_stack(&[a, b]);
            let cat = tape.concat(&[mean, max]);
            let sl = tape.slice(cat, 2, 4);
            let y = tape.affine(4, 5, sl);
            tape.square(y)
        });
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn unit_complex_grad() {
        // gradient through a non-trivial use of the unit phase
        let mut store = seeded_store(&[(4, 2), (4, 1)]);
        let worst = check_grad(&mut store, |tape| {
            let x = tape.constant(&[0.4, -1.2]);
            let r = tape.affine(0, 1, x);
            let theta = tape.unit_complex(r);
            let probe = tape.constant(&[0.3, -0.8, 1.1, 0.5]);
            tape.csq_inner_t(theta, probe)
        });
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn complex_op_grads() {
        // u, v complex 2-vectors from params; m complex 2x2 from params
        let mut store = seeded_store(&[(4, 3), (4, 1), (4, 3), (4, 1), (8, 3), (8, 1)]);
        for build in [
            |tape: &mut Tape| -> NodeId {
                let x = tape.constant(&[0.5, -0.3, 0.8]);
                let u = tape.affine(0, 1, x);
                let v = tape.affine(2, 3, x);
                tape.csq_inner_t(u, v)
            } as fn(&mut Tape) -> NodeId,
            |tape: &mut Tape| -> NodeId {
                let x = tape.constant(&[0.5, -0.3, 0.8]);
                let u = tape.affine(0, 1, x);
                let v = tape.affine(2, 3, x);
                tape.csq_inner_h(u, v)
            },
            |tape: &mut Tape| -> NodeId {
                let x = tape.constant(&[0.5, -0.3, 0.8]);
                let u = tape.affine(0, 1, x);
                let m = tape.affine(4, 5, x);
                let y = tape.cmatvec(m, u, 2, 2);
                tape.cnorm_sq(y)
            },
        ] {
            let worst = check_grad(&mut store, build);
            assert!(worst < 1e-6, "worst {worst}");
        }
    }

    #[test]
    fn cmatvec_matches_complex_reference() {
        // (1+2i, 3-i; 0+i, 2) * (1-i, 2+i)
        let store = ParamStore::default();
        let mut tape = Tape::new(&store);
        let m = tape.constant(&[1.0, 3.0, 0.0, 2.0, 2.0, -1.0, 1.0, 0.0]);
        let x = tape.constant(&[1.0, 2.0, -1.0, 1.0]);
        let y = tape.cmatvec(m, x, 2, 2);
        let v = tape.value(y);
        // row0: (1+2i)(1-i) + (3-i)(2+i) = (3+i) + (7+i) = 10+2i
        // row1: (i)(1-i) + 2(2+i) = (1+i) + (4+2i) = 5+3i
        assert!((v[0] - 10.0).abs() < 1e-12);
        assert!((v[2] - 2.0).abs() < 1e-12);
        assert!((v[1] - 5.0).abs() < 1e-12);
        assert!((v[3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn scalar_chain_grads() {
        let mut store = seeded_store(&[(1, 2), (1, 1), (1, 2), (1, 1)]);
        let worst = check_grad(&mut store, |tape| {
            let x = tape.constant(&[0.7, 0.1]);
            let a = tape.affine(0, 1, x);
            let b = tape.affine(2, 3, x);
            let a2 = tape.square(a);
            let prod = tape.mul(a2, b);
            let ratio = tape.div(prod, a2);
            let r = tape.add_const(ratio, 2.0);
            let r = tape.mul_const(r, 0.5);
            let s = tape.add(r, b);
            let s = tape.square(s); // keep positive for log
            let rate = tape.log2_one_plus(s);
            let hinge_arg = tape.add_const(rate, -0.35);
            let hinge = tape.min_zero(hinge_arg);
            tape.sum_many(&[rate, hinge])
        });
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn normalization_grads() {
        let mut store = seeded_store(&[(4, 2), (4, 1), (4, 2), (4, 1)]);
        let worst = check_grad(&mut store, |tape| {
            let x = tape.constant(&[0.9, -0.4]);
            let g1 = tape.affine(0, 1, x);
            let g2 = tape.affine(2, 3, x);
            let total = tape.sum_squares(&[g1, g2]);
            let n1 = tape.scale_by_sqrt(g1, total, 2.0);
            let n2 = tape.scale_by_sqrt(g2, total, 2.0);
            // after normalization the power is exactly 2; probe a direction
            let probe = tape.constant(&[0.3, 1.0, -0.2, 0.4]);
            let p1 = tape.csq_inner_t(n1, probe);
            let p2 = tape.csq_inner_h(n2, probe);
            tape.add(p1, p2)
        });
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn normalization_scales_exactly() {
        let store = ParamStore::default();
        let mut tape = Tape::new(&store);
        let g = tape.constant(&[3.0, 4.0]);
        let t = tape.sum_squares(&[g]);
        assert!((tape.scalar(t) - 25.0).abs() < 1e-12);
        let n = tape.scale_by_sqrt(g, t, 4.0);
        let t2 = tape.sum_squares(&[n]);
        assert!((tape.scalar(t2) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn affine_const_grad() {
        let mut store = seeded_store(&[(3, 2), (3, 1)]);
        let a = RealMat::new(2, 3, vec![0.5, -1.0, 0.25, 2.0, 0.0, -0.5]);
        let c = Rc::new(vec![0.1, -0.2]);
        let worst = check_grad(&mut store, move |tape| {
            let x = tape.constant(&[1.0, 0.5]);
            let h = tape.affine(0, 1, x);
            let y = tape.affine_const(a.clone(), Some(c.clone()), h);
            tape.sum_squares(&[y])
        });
        assert!(worst < 1e-6, "worst {worst}");
    }

    #[test]
    fn max_stack_routes_to_argmax() {
        let store = ParamStore::default();
        let mut tape = Tape::new(&store);
        let a = tape.constant(&[1.0, 5.0]);
        let b = tape.constant(&[3.0, 2.0]);
        let m = tape.max_stack(&[a, b]);
        assert_eq!(tape.value(m), &[3.0, 5.0]);
    }
}
