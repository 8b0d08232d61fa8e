//! Learnable parameters of the two-phase GNN.
//!
//! Every extraction/update function is a dense stack: two hidden layers of
//! width `q` with softplus, then a linear output. Readouts are single
//! affine maps. Widths follow the assembled input lengths, so one
//! parameter set serves any user count K.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::tape::{NodeId, ParamId, ParamStore, Tape};

/// Structural dimensions a parameter set is built for. `k` is recorded for
/// provenance only: the architecture itself is K-independent.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GnnDims {
    pub q: usize,
    pub d: usize,
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub i: usize,
    pub j: usize,
    pub k: usize,
}

impl GnnDims {
    pub fn from_config(cfg: &SystemConfig) -> Self {
        GnnDims {
            q: cfg.q,
            d: cfg.d,
            m: cfg.m,
            n: cfg.n,
            l: cfg.l,
            i: cfg.i,
            j: cfg.j,
            k: cfg.k,
        }
    }

    /// Structural compatibility ignores `k`.
    pub fn compatible_with(&self, cfg: &SystemConfig) -> bool {
        self.q == cfg.q
            && self.d == cfg.d
            && self.m == cfg.m
            && self.n == cfg.n
            && self.l == cfg.l
            && self.i == cfg.i
            && self.j == cfg.j
    }
}

/// Two softplus hidden layers of width q, then a linear map.
#[derive(Debug, Clone, Copy)]
pub struct DenseStack {
    pub w1: ParamId,
    pub b1: ParamId,
    pub w2: ParamId,
    pub b2: ParamId,
    pub w3: ParamId,
    pub b3: ParamId,
    pub input: usize,
    pub output: usize,
}

/// Single affine readout.
#[derive(Debug, Clone, Copy)]
pub struct Readout {
    pub w: ParamId,
    pub b: ParamId,
    pub input: usize,
    pub output: usize,
}

#[derive(Debug, Clone)]
pub struct GnnParams {
    pub dims: GnnDims,
    pub store: ParamStore,
    pub f0: DenseStack,
    pub fr0: DenseStack,
    pub fu0: DenseStack,
    pub f_upd: Vec<DenseStack>,
    pub fu_upd: Vec<DenseStack>,
    pub f_ro: Readout,
    pub fu_ro: Readout,
    pub g0: DenseStack,
    pub gv0: DenseStack,
    pub g_upd: Vec<DenseStack>,
    pub gv_upd: Vec<DenseStack>,
    pub g_ro: Readout,
    pub gv_ro: Readout,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize, gain: f64) -> Vec<f64> {
    let limit = gain * (6.0 / (rows + cols) as f64).sqrt();
    (0..rows * cols)
        .map(|_| rng.gen_range(-limit..limit))
        .collect()
}

// softplus outputs carry roughly 0.22x the preactivation variance, so
// layers fed by activations get a compensating init gain
pub const ACT_GAIN: f64 = 1.0;

fn add_stack(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    input: usize,
    hidden: usize,
    output: usize,
) -> DenseStack {
    let w1 = store.add(format!("{name}.w1"), hidden, input, glorot(rng, hidden, input, 1.0));
    let b1 = store.add(format!("{name}.b1"), hidden, 1, vec![0.0; hidden]);
    let w2 = store.add(format!("{name}.w2"), hidden, hidden, glorot(rng, hidden, hidden, ACT_GAIN));
    let b2 = store.add(format!("{name}.b2"), hidden, 1, vec![0.0; hidden]);
    let w3 = store.add(format!("{name}.w3"), output, hidden, glorot(rng, output, hidden, ACT_GAIN));
    let b3 = store.add(format!("{name}.b3"), output, 1, vec![0.0; output]);
    DenseStack {
        w1,
        b1,
        w2,
        b2,
        w3,
        b3,
        input,
        output,
    }
}

fn add_readout(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    input: usize,
    output: usize,
) -> Readout {
    let w = store.add(format!("{name}.w"), output, input, glorot(rng, output, input, 1.0));
    let b = store.add(format!("{name}.b"), output, 1, vec![0.0; output]);
    Readout {
        w,
        b,
        input,
        output,
    }
}

impl GnnParams {
    pub fn init(dims: GnnDims, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rng = &mut rng;
        let mut store = ParamStore::default();
        let GnnDims {
            q,
            d,
            m,
            n,
            l,
            i,
            j,
            ..
        } = dims;
        assert!(q % 2 == 0, "q must be even");

        let f0 = add_stack(&mut store, rng, "f0", 2 * (n + 1), q, q / 2);
        let fr0 = add_stack(&mut store, rng, "fr0", 2 * m * l * i * j, q, q / 2);
        let fu0 = add_stack(&mut store, rng, "fu0", 2 * m * (n + 1), q, q);
        let mut f_upd = Vec::with_capacity(d);
        let mut fu_upd = Vec::with_capacity(d);
        for dd in 1..=d {
            f_upd.push(add_stack(&mut store, rng, &format!("f_upd{dd}"), 2 * q * dd, q, q));
            fu_upd.push(add_stack(&mut store, rng, &format!("fu_upd{dd}"), 3 * q * dd, q, q));
        }
        let f_ro = add_readout(&mut store, rng, "f_ro", q * (d + 1), 2 * n);
        let fu_ro = add_readout(&mut store, rng, "fu_ro", q * (d + 1), 2 * m);

        let g0 = add_stack(&mut store, rng, "g0", 2 * (n + 1), q, q);
        let gv0 = add_stack(&mut store, rng, "gv0", 2 * l * (n + 1), q, q);
        let mut g_upd = Vec::with_capacity(d);
        let mut gv_upd = Vec::with_capacity(d);
        for dd in 1..=d {
            let width = q * (d + dd + 1);
            g_upd.push(add_stack(&mut store, rng, &format!("g_upd{dd}"), 2 * width, q, q));
            gv_upd.push(add_stack(&mut store, rng, &format!("gv_upd{dd}"), 3 * width, q, q));
        }
        let g_ro = add_readout(&mut store, rng, "g_ro", 2 * q * (d + 1), 2 * n);
        let gv_ro = add_readout(&mut store, rng, "gv_ro", 2 * q * (d + 1), 2 * l);

        GnnParams {
            dims,
            store,
            f0,
            fr0,
            fu0,
            f_upd,
            fu_upd,
            f_ro,
            fu_ro,
            g0,
            gv0,
            g_upd,
            gv_upd,
            g_ro,
            gv_ro,
        }
    }

    pub fn param_count(&self) -> usize {
        self.store.total_len()
    }

    pub fn apply_stack(&self, tape: &mut Tape, stack: &DenseStack, x: NodeId) -> NodeId {
        let h = tape.affine(stack.w1, stack.b1, x);
        let h = tape.softplus(h);
        let h = tape.affine(stack.w2, stack.b2, h);
        let h = tape.softplus(h);
        tape.affine(stack.w3, stack.b3, h)
    }

    pub fn apply_readout(&self, tape: &mut Tape, ro: &Readout, x: NodeId) -> NodeId {
        tape.affine(ro.w, ro.b, x)
    }
}

const MAGIC: &[u8; 7] = b"RISGNN1";
const VERSION: u32 = 1;

pub fn save_checkpoint(params: &GnnParams, path: &Path) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    let d = params.dims;
    for v in [d.q, d.d, d.m, d.n, d.l, d.i, d.j, d.k] {
        w.write_all(&(v as u32).to_le_bytes())?;
    }
    w.write_all(&(params.store.params.len() as u32).to_le_bytes())?;
    for p in &params.store.params {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(p.rows as u32).to_le_bytes())?;
        w.write_all(&(p.cols as u32).to_le_bytes())?;
        for v in &p.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<GnnParams> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    let mut read_exact = |buf: &mut [u8], what: &str| -> Result<()> {
        r.read_exact(buf)
            .map_err(|_| Error::Format(format!("truncated checkpoint while reading {what}")))
    };
    let mut magic = [0u8; 7];
    read_exact(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format("bad checkpoint magic".into()));
    }
    let mut b4 = [0u8; 4];
    read_exact(&mut b4, "version")?;
    if u32::from_le_bytes(b4) != VERSION {
        return Err(Error::Format("unsupported checkpoint version".into()));
    }
    let mut dims = [0usize; 8];
    for d in dims.iter_mut() {
        read_exact(&mut b4, "dims")?;
        *d = u32::from_le_bytes(b4) as usize;
    }
    let dims = GnnDims {
        q: dims[0],
        d: dims[1],
        m: dims[2],
        n: dims[3],
        l: dims[4],
        i: dims[5],
        j: dims[6],
        k: dims[7],
    };
    let mut params = GnnParams::init(dims, 0);
    read_exact(&mut b4, "param count")?;
    let count = u32::from_le_bytes(b4) as usize;
    if count != params.store.params.len() {
        return Err(Error::Format(format!(
            "checkpoint has {count} tensors, architecture needs {}",
            params.store.params.len()
        )));
    }
    let mut b8 = [0u8; 8];
    for idx in 0..count {
        read_exact(&mut b4, "name length")?;
        let name_len = u32::from_le_bytes(b4) as usize;
        let mut name = vec![0u8; name_len];
        read_exact(&mut name, "name")?;
        let name = String::from_utf8(name)
            .map_err(|_| Error::Format("non-utf8 tensor name".into()))?;
        let p = &mut params.store.params[idx];
        if p.name != name {
            return Err(Error::Format(format!(
                "tensor order mismatch: expected `{}`, found `{name}`",
                p.name
            )));
        }
        read_exact(&mut b4, "rows")?;
        let rows = u32::from_le_bytes(b4) as usize;
        read_exact(&mut b4, "cols")?;
        let cols = u32::from_le_bytes(b4) as usize;
        if rows != p.rows || cols != p.cols {
            return Err(Error::Format(format!(
                "tensor `{name}` has shape {rows}x{cols}, expected {}x{}",
                p.rows, p.cols
            )));
        }
        for v in p.data.iter_mut() {
            read_exact(&mut b8, "tensor data")?;
            *v = f64::from_le_bytes(b8);
        }
    }
    Ok(params)
}
