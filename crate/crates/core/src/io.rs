//! Bit-exact file formats.
//!
//! Dataset files ("CSK1") carry one tensor each:
//!
//! ```text
//! magic  4 bytes  ASCII "CSK1"
//! kind   1 byte   1=image 2=kspace 3=sensitivities 4=mask
//! pad    3 bytes  zero
//! dims   4 x u32  little-endian n_v, n_h, n_t, n_c (unused dims = 1)
//! payload
//! ```
//!
//! Kinds 1-3 store interleaved little-endian IEEE-754 f32 (re, im) pairs,
//! index order v-fastest, then h, then c, then t. Kind 4 stores one byte
//! per (v, t), 0 or 1, v-fastest then t. A kind-2 file embeds its mask as
//! a trailing complete kind-4 record and the zero-fill invariant is
//! checked on load. Disk precision is f32; in-memory data stays f64, so
//! `read(write(x))` is bit-identical exactly when x is f32-representable
//! (everything this crate writes is re-read bit-identically).
//!
//! Traces are CSV with the exact header `iter,objective,delta,elapsed_ms`
//! preceded by `# key=value` comment lines echoing the solve
//! configuration.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::metrics::BenchmarkReport;
use crate::solvers::SolverTrace;
use crate::types::{CoilSensitivities, Dims, ImageSequence, KSpaceData, SamplingMask};

const MAGIC: &[u8; 4] = b"CSK1";

const KIND_IMAGE: u8 = 1;
const KIND_KSPACE: u8 = 2;
const KIND_SENSITIVITIES: u8 = 3;
const KIND_MASK: u8 = 4;

/// Any object a dataset file can hold.
#[derive(Debug, Clone, PartialEq)]
pub enum Dataset {
    Image(ImageSequence),
    KSpace(KSpaceData),
    Sensitivities(CoilSensitivities),
    Mask(SamplingMask),
}

fn write_header(w: &mut impl Write, kind: u8, dims: Dims) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&[kind, 0, 0, 0])?;
    for n in [dims.n_v, dims.n_h, dims.n_t, dims.n_c] {
        w.write_all(&(n as u32).to_le_bytes())?;
    }
    Ok(())
}

fn write_complex_payload(w: &mut impl Write, data: &[Complex64]) -> Result<()> {
    for z in data {
        w.write_all(&(z.re as f32).to_le_bytes())?;
        w.write_all(&(z.im as f32).to_le_bytes())?;
    }
    Ok(())
}

fn write_mask_record(w: &mut impl Write, mask: &SamplingMask) -> Result<()> {
    let dims = Dims {
        n_v: mask.n_v(),
        n_h: 1,
        n_t: mask.n_t(),
        n_c: 1,
    };
    write_header(w, KIND_MASK, dims)?;
    let bytes: Vec<u8> = mask.as_flags().iter().map(|&k| k as u8).collect();
    w.write_all(&bytes)?;
    Ok(())
}

pub fn write_image(path: impl AsRef<Path>, x: &ImageSequence) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let d = x.dims();
    write_header(&mut w, KIND_IMAGE, Dims { n_c: 1, ..d })?;
    write_complex_payload(&mut w, x.data())?;
    w.flush()?;
    Ok(())
}

pub fn write_kspace(path: impl AsRef<Path>, y: &KSpaceData) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, KIND_KSPACE, y.dims())?;
    write_complex_payload(&mut w, y.data())?;
    write_mask_record(&mut w, y.mask())?;
    w.flush()?;
    Ok(())
}

pub fn write_sensitivities(path: impl AsRef<Path>, s: &CoilSensitivities) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let d = s.dims();
    write_header(&mut w, KIND_SENSITIVITIES, Dims { n_t: 1, ..d })?;
    write_complex_payload(&mut w, s.data())?;
    w.flush()?;
    Ok(())
}

pub fn write_mask(path: impl AsRef<Path>, mask: &SamplingMask) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_mask_record(&mut w, mask)?;
    w.flush()?;
    Ok(())
}

pub fn write_dataset(path: impl AsRef<Path>, object: &Dataset) -> Result<()> {
    match object {
        Dataset::Image(x) => write_image(path, x),
        Dataset::KSpace(y) => write_kspace(path, y),
        Dataset::Sensitivities(s) => write_sensitivities(path, s),
        Dataset::Mask(m) => write_mask(path, m),
    }
}

/// Byte cursor that reports precise offsets in errors.
struct Cursor {
    buf: Vec<u8>,
    pos: usize,
}

impl Cursor {
    fn take(&mut self, n: usize, what: &str) -> Result<&[u8]> {
        if self.pos + n > self.buf.len() {
            return Err(Error::format(
                self.pos as u64,
                format!(
                    "truncated file: need {n} bytes for {what}, {} left",
                    self.buf.len() - self.pos
                ),
            ));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32_le(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn header(&mut self) -> Result<(u8, Dims)> {
        let at = self.pos as u64;
        let magic = self.take(4, "magic")?;
        if magic != MAGIC {
            return Err(Error::format(
                at,
                format!("bad magic {:?}, expected \"CSK1\"", String::from_utf8_lossy(magic)),
            ));
        }
        let at = self.pos as u64;
        let kind = self.take(1, "kind")?[0];
        if !(KIND_IMAGE..=KIND_MASK).contains(&kind) {
            return Err(Error::format(at, format!("unknown kind {kind}")));
        }
        let at = self.pos as u64;
        if self.take(3, "padding")? != [0, 0, 0] {
            return Err(Error::format(at, "nonzero padding".to_string()));
        }
        let at = self.pos as u64;
        let mut dims = [0usize; 4];
        for (i, d) in dims.iter_mut().enumerate() {
            *d = self.u32_le("dims")? as usize;
            if *d == 0 {
                return Err(Error::format(at + 4 * i as u64, "zero dimension".to_string()));
            }
        }
        Ok((
            kind,
            Dims {
                n_v: dims[0],
                n_h: dims[1],
                n_t: dims[2],
                n_c: dims[3],
            },
        ))
    }

    fn complex_payload(&mut self, len: usize) -> Result<Vec<Complex64>> {
        let bytes = self.take(len * 8, "complex payload")?;
        Ok(bytes
            .chunks_exact(8)
            .map(|c| {
                Complex64::new(
                    f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64,
                    f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64,
                )
            })
            .collect())
    }

    fn mask_payload(&mut self, dims: Dims) -> Result<SamplingMask> {
        let at = self.pos as u64;
        let bytes = self.take(dims.n_v * dims.n_t, "mask payload")?;
        let mut kept = Vec::with_capacity(bytes.len());
        for (i, &b) in bytes.iter().enumerate() {
            match b {
                0 => kept.push(false),
                1 => kept.push(true),
                other => {
                    return Err(Error::format(
                        at + i as u64,
                        format!("mask byte must be 0 or 1, got {other}"),
                    ))
                }
            }
        }
        SamplingMask::new(dims.n_v, dims.n_t, kept)
    }

    fn expect_eof(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::format(
                self.pos as u64,
                format!("{} trailing bytes", self.buf.len() - self.pos),
            ));
        }
        Ok(())
    }
}

fn expect_unused_one(dims: Dims, kind: u8) -> Result<()> {
    let checks: &[(&str, usize)] = match kind {
        KIND_IMAGE => &[("n_c", 1)],
        KIND_SENSITIVITIES => &[("n_t", 1)],
        KIND_MASK => &[("n_h", 1), ("n_c", 1)],
        _ => &[],
    };
    for &(axis, expected) in checks {
        let got = match axis {
            "n_c" => dims.n_c,
            "n_t" => dims.n_t,
            "n_h" => dims.n_h,
            _ => unreachable!(),
        };
        if got != expected {
            return Err(Error::DimMismatch {
                axis,
                expected,
                got,
            });
        }
    }
    Ok(())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let mut buf = Vec::new();
    File::open(path)?.read_to_end(&mut buf)?;
    let mut cur = Cursor { buf, pos: 0 };
    let (kind, dims) = cur.header()?;
    expect_unused_one(dims, kind)?;
    match kind {
        KIND_IMAGE => {
            let data = cur.complex_payload(dims.image_len())?;
            cur.expect_eof()?;
            Ok(Dataset::Image(ImageSequence::from_vec(dims, data)?))
        }
        KIND_SENSITIVITIES => {
            let data = cur.complex_payload(dims.sens_len())?;
            cur.expect_eof()?;
            Ok(Dataset::Sensitivities(CoilSensitivities::from_vec(
                dims, data,
            )?))
        }
        KIND_MASK => {
            let mask = cur.mask_payload(dims)?;
            cur.expect_eof()?;
            Ok(Dataset::Mask(mask))
        }
        KIND_KSPACE => {
            let payload_start = cur.pos as u64;
            let data = cur.complex_payload(dims.kspace_len())?;
            let (mkind, mdims) = cur.header()?;
            if mkind != KIND_MASK {
                return Err(Error::format(
                    payload_start + dims.kspace_len() as u64 * 8,
                    format!("k-space file must embed a kind-4 mask record, found kind {mkind}"),
                ));
            }
            if mdims.n_v != dims.n_v || mdims.n_t != dims.n_t {
                return Err(Error::DimMismatch {
                    axis: "embedded mask",
                    expected: dims.n_v * dims.n_t,
                    got: mdims.n_v * mdims.n_t,
                });
            }
            let mask = cur.mask_payload(mdims)?;
            cur.expect_eof()?;
            // zero-fill invariant, reported with the byte offset of the
            // first offending sample
            for t in 0..dims.n_t {
                for v in 0..dims.n_v {
                    if mask.kept(v, t) {
                        continue;
                    }
                    for c in 0..dims.n_c {
                        for h in 0..dims.n_h {
                            let idx = dims.kspace_index(v, h, t, c);
                            if data[idx] != Complex64::ZERO {
                                return Err(Error::format(
                                    payload_start + idx as u64 * 8,
                                    format!(
                                        "nonzero sample at unsampled line (v={v}, t={t})"
                                    ),
                                ));
                            }
                        }
                    }
                }
            }
            Ok(Dataset::KSpace(KSpaceData::from_vec(dims, data, mask)?))
        }
        _ => unreachable!("header() validated the kind"),
    }
}

macro_rules! typed_reader {
    ($name:ident, $variant:ident, $ty:ty, $label:expr) => {
        pub fn $name(path: impl AsRef<Path>) -> Result<$ty> {
            match read_dataset(path)? {
                Dataset::$variant(x) => Ok(x),
                other => Err(Error::format(
                    4,
                    format!("expected a {} file, found {}", $label, other.kind_name()),
                )),
            }
        }
    };
}

impl Dataset {
    fn kind_name(&self) -> &'static str {
        match self {
            Dataset::Image(_) => "image (kind 1)",
            Dataset::KSpace(_) => "k-space (kind 2)",
            Dataset::Sensitivities(_) => "sensitivities (kind 3)",
            Dataset::Mask(_) => "mask (kind 4)",
        }
    }
}

typed_reader!(read_image, Image, ImageSequence, "image (kind 1)");
typed_reader!(read_kspace, KSpace, KSpaceData, "k-space (kind 2)");
typed_reader!(
    read_sensitivities,
    Sensitivities,
    CoilSensitivities,
    "sensitivities (kind 3)"
);
typed_reader!(read_mask, Mask, SamplingMask, "mask (kind 4)");

/// Writes a convergence trace as CSV. `metadata` pairs become `# key=value`
/// comment lines above the exact header `iter,objective,delta,elapsed_ms`;
/// row 0 carries the initial objective with delta 0 by convention.
pub fn write_trace(
    path: impl AsRef<Path>,
    trace: &SolverTrace,
    metadata: &[(&str, String)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "iter,objective,delta,elapsed_ms")?;
    writeln!(w, "0,{:.15e},{:.15e},0.000", trace.initial_objective, 0.0)?;
    for e in &trace.entries {
        writeln!(
            w,
            "{},{:.15e},{:.15e},{:.3}",
            e.iter, e.objective, e.delta, e.elapsed_ms
        )?;
    }
    w.flush()?;
    Ok(())
}

/// One parsed trace row.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub delta: f64,
    pub elapsed_ms: f64,
}

/// Reads a trace CSV back (comment lines are skipped, header checked).
pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let mut text = String::new();
    File::open(path)?.read_to_string(&mut text)?;
    let mut rows = Vec::new();
    let mut header_seen = false;
    for line in text.lines() {
        if line.starts_with('#') || line.is_empty() {
            continue;
        }
        if !header_seen {
            if line != "iter,objective,delta,elapsed_ms" {
                return Err(Error::format(0, format!("bad trace header: {line}")));
            }
            header_seen = true;
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(Error::format(0, format!("bad trace row: {line}")));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::format(0, format!("bad float {s}")))
        };
        rows.push(TraceRow {
            iter: fields[0]
                .parse()
                .map_err(|_| Error::format(0, format!("bad iter {}", fields[0])))?,
            objective: parse_f(fields[1])?,
            delta: parse_f(fields[2])?,
            elapsed_ms: parse_f(fields[3])?,
        });
    }
    if !header_seen {
        return Err(Error::format(0, "missing trace header".to_string()));
    }
    Ok(rows)
}

/// Writes benchmark reports as CSV (one row per solver).
pub fn write_benchmark_report(
    path: impl AsRef<Path>,
    reports: &[BenchmarkReport],
    metadata: &[(&str, String)],
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (k, v) in metadata {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(
        w,
        "solver,algorithm,regularizer,lambda,mu,mu_ratio,cg_iters,max_iters,tol,\
         reached_target,time_to_target_ms,iters_to_target,final_objective,nrmse,\
         spectral_precompute_ms"
    )?;
    for r in reports {
        writeln!(
            w,
            "{},{},{:?},{},{},{},{},{},{},{},{:.3},{},{:.15e},{:.15e},{:.3}",
            r.solver,
            r.algorithm.name(),
            r.regularizer,
            r.config.lambda,
            r.config.mu,
            r.config.mu_ratio,
            r.config.cg_iters,
            r.config.max_iters,
            r.config.tol,
            r.reached_target,
            r.time_to_target_ms,
            r.iters_to_target,
            r.final_objective,
            r.nrmse_vs_reference,
            r.spectral_precompute_ms
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Exports one 16-bit binary PGM per frame (`frame_000.pgm`, ...), with a
/// single global scale mapping the sequence-wide magnitude maximum to
/// 65535 so frames stay comparable.
pub fn export_frames(x: &ImageSequence, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let d = x.dims();
    let max = x.max_abs();
    let scale = if max > 0.0 { 65535.0 / max } else { 0.0 };
    for t in 0..d.n_t {
        let mut w = BufWriter::new(File::create(dir.join(format!("frame_{t:03}.pgm")))?);
        write!(w, "P5\n{} {}\n65535\n", d.n_h, d.n_v)?;
        for v in 0..d.n_v {
            for h in 0..d.n_h {
                let g = (x.at(v, h, t).norm() * scale).round().clamp(0.0, 65535.0) as u16;
                w.write_all(&g.to_be_bytes())?;
            }
        }
        w.flush()?;
    }
    Ok(())
}
