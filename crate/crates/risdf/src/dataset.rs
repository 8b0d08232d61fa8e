//! Binary dataset persistence.
//!
//! Layout: magic `RISDF01`, then a little-endian header
//! (version u32, M N L J I K as u32, sample count u64), then per sample the
//! channel groups in declared order, each complex entry stored as an
//! interleaved (re, im) pair of f64. Matrices are row-major. User positions
//! close each sample as plain f64 pairs.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::channel::ChannelRealization;
use crate::error::{Error, Result};

const MAGIC: &[u8; 7] = b"RISDF01";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetHeader {
    pub m: usize,
    pub n: usize,
    pub l: usize,
    pub j: usize,
    pub i: usize,
    pub k: usize,
    pub count: usize,
}

impl DatasetHeader {
    pub fn from_realization(real: &ChannelRealization, count: usize) -> Result<Self> {
        let i = real.g_bs_ris.len();
        let j = real.h_bs_relay.len();
        if i == 0 || j == 0 {
            return Err(Error::Format("empty realization".into()));
        }
        let (m, n) = real.g_bs_ris[0].dim();
        let l = real.h_bs_relay[0].dim().1;
        let k = real.h_bs_user.first().map(Vec::len).unwrap_or(0);
        Ok(DatasetHeader {
            m,
            n,
            l,
            j,
            i,
            k,
            count,
        })
    }
}

struct Sink<W: Write> {
    w: W,
}

impl<W: Write> Sink<W> {
    fn u32(&mut self, v: u32) -> Result<()> {
        self.w.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn u64(&mut self, v: u64) -> Result<()> {
        self.w.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn f64(&mut self, v: f64) -> Result<()> {
        self.w.write_all(&v.to_le_bytes())?;
        Ok(())
    }
    fn complex_slice<'a>(&mut self, it: impl Iterator<Item = &'a Complex64>) -> Result<()> {
        for c in it {
            self.f64(c.re)?;
            self.f64(c.im)?;
        }
        Ok(())
    }
}

struct Source<R: Read> {
    r: R,
}

impl<R: Read> Source<R> {
    fn bytes(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        self.r.read_exact(buf).map_err(|_| {
            Error::Format(format!("truncated or unreadable data while reading {what}"))
        })
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        let mut b = [0u8; 4];
        self.bytes(&mut b, what)?;
        Ok(u32::from_le_bytes(b))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b, what)?;
        Ok(u64::from_le_bytes(b))
    }
    fn f64(&mut self, what: &str) -> Result<f64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b, what)?;
        Ok(f64::from_le_bytes(b))
    }
    fn cvec(&mut self, len: usize, what: &str) -> Result<Array1<Complex64>> {
        let mut v = Vec::with_capacity(len);
        for _ in 0..len {
            let re = self.f64(what)?;
            let im = self.f64(what)?;
            v.push(Complex64::new(re, im));
        }
        Ok(Array1::from_vec(v))
    }
    fn cmat(&mut self, rows: usize, cols: usize, what: &str) -> Result<Array2<Complex64>> {
        let flat = self.cvec(rows * cols, what)?;
        Array2::from_shape_vec((rows, cols), flat.to_vec())
            .map_err(|_| Error::Format(format!("bad shape for {what}")))
    }
}

pub fn save_dataset(realizations: &[ChannelRealization], path: &Path) -> Result<()> {
    let first = realizations
        .first()
        .ok_or_else(|| Error::Format("cannot save an empty dataset".into()))?;
    let hdr = DatasetHeader::from_realization(first, realizations.len())?;
    let file = File::create(path)?;
    let mut s = Sink {
        w: BufWriter::new(file),
    };
    s.w.write_all(MAGIC)?;
    s.u32(VERSION)?;
    for v in [hdr.m, hdr.n, hdr.l, hdr.j, hdr.i, hdr.k] {
        s.u32(v as u32)?;
    }
    s.u64(hdr.count as u64)?;
    for real in realizations {
        for g in &real.g_bs_ris {
            s.complex_slice(g.iter())?;
        }
        for h in &real.h_bs_relay {
            s.complex_slice(h.iter())?;
        }
        for per_k in &real.h_bs_user {
            for h in per_k {
                s.complex_slice(h.iter())?;
            }
        }
        for per_k in &real.h_ris_user {
            for h in per_k {
                s.complex_slice(h.iter())?;
            }
        }
        for per_j in &real.h_ris_relay {
            for h in per_j {
                s.complex_slice(h.iter())?;
            }
        }
        for per_i in &real.h_relay_user {
            for per_k in per_i {
                for h in per_k {
                    s.complex_slice(h.iter())?;
                }
            }
        }
        for per_k in &real.user_pos {
            for p in per_k {
                s.f64(p[0])?;
                s.f64(p[1])?;
            }
        }
    }
    s.w.flush()?;
    Ok(())
}

pub fn read_header(path: &Path) -> Result<DatasetHeader> {
    let file = File::open(path)?;
    let mut src = Source {
        r: BufReader::new(file),
    };
    read_header_from(&mut src)
}

fn read_header_from<R: Read>(src: &mut Source<R>) -> Result<DatasetHeader> {
    let mut magic = [0u8; 7];
    src.bytes(&mut magic, "magic")?;
    if &magic != MAGIC {
        return Err(Error::Format(format!(
            "bad magic: expected RISDF01, got {:?}",
            String::from_utf8_lossy(&magic)
        )));
    }
    let version = src.u32("version")?;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported version {version}, expected {VERSION}"
        )));
    }
    let m = src.u32("header.m")? as usize;
    let n = src.u32("header.n")? as usize;
    let l = src.u32("header.l")? as usize;
    let j = src.u32("header.j")? as usize;
    let i = src.u32("header.i")? as usize;
    let k = src.u32("header.k")? as usize;
    let count = src.u64("header.count")? as usize;
    Ok(DatasetHeader {
        m,
        n,
        l,
        j,
        i,
        k,
        count,
    })
}

/// Load a dataset, checking shapes against the header. If `expect` is
/// given, the header must match it field by field.
pub fn load_dataset(path: &Path, expect: Option<&DatasetHeader>) -> Result<Vec<ChannelRealization>> {
    let file = File::open(path)?;
    let mut src = Source {
        r: BufReader::new(file),
    };
    let hdr = read_header_from(&mut src)?;
    if let Some(e) = expect {
        for (field, got, want) in [
            ("m", hdr.m, e.m),
            ("n", hdr.n, e.n),
            ("l", hdr.l, e.l),
            ("j", hdr.j, e.j),
            ("i", hdr.i, e.i),
            ("k", hdr.k, e.k),
        ] {
            if got != want {
                return Err(Error::Shape {
                    field: format!("header.{field}"),
                    expected: want.to_string(),
                    actual: got.to_string(),
                });
            }
        }
    }
    let DatasetHeader {
        m,
        n,
        l,
        j,
        i,
        k,
        count,
    } = hdr;
    let mut out = Vec::with_capacity(count);
    for s in 0..count {
        let ctx = |f: &str| format!("sample {s} {f}");
        let g_bs_ris = (0..i)
            .map(|_| src.cmat(m, n, &ctx("g_bs_ris")))
            .collect::<Result<Vec<_>>>()?;
        let h_bs_relay = (0..j)
            .map(|_| src.cmat(m, l, &ctx("h_bs_relay")))
            .collect::<Result<Vec<_>>>()?;
        let h_bs_user = (0..i)
            .map(|_| (0..k).map(|_| src.cvec(m, &ctx("h_bs_user"))).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let h_ris_user = (0..i)
            .map(|_| (0..k).map(|_| src.cvec(n, &ctx("h_ris_user"))).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let h_ris_relay = (0..i)
            .map(|_| (0..j).map(|_| src.cmat(n, l, &ctx("h_ris_relay"))).collect())
            .collect::<Result<Vec<Vec<_>>>>()?;
        let h_relay_user = (0..j)
            .map(|_| {
                (0..i)
                    .map(|_| (0..k).map(|_| src.cvec(l, &ctx("h_relay_user"))).collect())
                    .collect()
            })
            .collect::<Result<Vec<Vec<Vec<_>>>>>()?;
        let mut user_pos = Vec::with_capacity(i);
        for _ in 0..i {
            let mut per_k = Vec::with_capacity(k);
            for _ in 0..k {
                let x = src.f64(&ctx("user_pos"))?;
                let y = src.f64(&ctx("user_pos"))?;
                per_k.push([x, y]);
            }
            user_pos.push(per_k);
        }
        out.push(ChannelRealization {
            g_bs_ris,
            h_bs_relay,
            h_bs_user,
            h_ris_user,
            h_ris_relay,
            h_relay_user,
            user_pos,
        });
    }
    Ok(out)
}
