//! Plain-text formats for dense tensors and tensor-ring cores.
//!
//! Tensor: line 1 is the order `d`, line 2 the dims, then one value per line
//! in layout order (first index most significant). Cores: line 1 is `d`,
//! line 2 the ranks `r_1..r_d`, line 3 the dims `n_1..n_d`, then every core
//! as a complete tensor block.
//!
//! Values are written with 17 significant digits, so a write/read round trip
//! reproduces every `f64` bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Result, TrError};
use crate::tensor::DenseTensor;
use crate::tr::TrCores;

/// Formats a value with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_dims(w: &mut (impl Write + ?Sized), dims: &[usize]) -> std::io::Result<()> {
    let line: Vec<String> = dims.iter().map(usize::to_string).collect();
    writeln!(w, "{}", line.join(" "))
}

pub fn write_tensor(w: &mut (impl Write + ?Sized), t: &DenseTensor) -> Result<()> {
    writeln!(w, "{}", t.order())?;
    write_dims(w, t.dims())?;
    for &v in t.values() {
        writeln!(w, "{}", fmt_f64(v))?;
    }
    Ok(())
}

pub fn write_tr(w: &mut (impl Write + ?Sized), u: &TrCores) -> Result<()> {
    writeln!(w, "{}", u.order())?;
    write_dims(w, &u.ranks())?;
    write_dims(w, &u.dims())?;
    for core in u.cores() {
        write_tensor(w, core)?;
    }
    Ok(())
}

/// Line reader that tracks 1-based line numbers and skips blank lines.
struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn new(r: R) -> Self {
        Self {
            inner: r.lines(),
            line: 0,
        }
    }

    fn err(&self, msg: impl Into<String>) -> TrError {
        TrError::Parse {
            line: self.line,
            msg: msg.into(),
        }
    }

    fn next_line(&mut self) -> Result<String> {
        loop {
            self.line += 1;
            match self.inner.next() {
                Some(line) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        return Ok(line);
                    }
                }
                None => return Err(self.err("unexpected end of input")),
            }
        }
    }

    fn usize_list(&mut self) -> Result<Vec<usize>> {
        let line = self.next_line()?;
        line.split_whitespace()
            .map(|tok| {
                tok.parse::<usize>()
                    .map_err(|e| self.err(format!("bad integer {tok:?}: {e}")))
            })
            .collect()
    }

    fn single_usize(&mut self) -> Result<usize> {
        let v = self.usize_list()?;
        match v.as_slice() {
            [x] => Ok(*x),
            _ => Err(self.err(format!("expected one integer, found {}", v.len()))),
        }
    }

    fn value(&mut self) -> Result<f64> {
        let line = self.next_line()?;
        let tok = line.trim();
        tok.parse::<f64>()
            .map_err(|e| self.err(format!("bad value {tok:?}: {e}")))
    }

    fn tensor(&mut self) -> Result<DenseTensor> {
        let d = self.single_usize()?;
        let dims = self.usize_list()?;
        if dims.len() != d {
            return Err(self.err(format!("order {d} but {} dims", dims.len())));
        }
        let len = dims.iter().try_fold(1usize, |acc, &n| acc.checked_mul(n));
        let len = len.ok_or_else(|| self.err("tensor size overflows"))?;
        let mut values = Vec::with_capacity(len);
        for _ in 0..len {
            values.push(self.value()?);
        }
        DenseTensor::new(dims, values).map_err(|e| self.err(e.to_string()))
    }

    fn expect_end(&mut self) -> Result<()> {
        for line in self.inner.by_ref() {
            self.line += 1;
            if !line?.trim().is_empty() {
                return Err(self.err("trailing content"));
            }
        }
        Ok(())
    }
}

pub fn read_tensor(r: impl BufRead) -> Result<DenseTensor> {
    let mut lines = Lines::new(r);
    let t = lines.tensor()?;
    lines.expect_end()?;
    Ok(t)
}

pub fn read_tr(r: impl BufRead) -> Result<TrCores> {
    let mut lines = Lines::new(r);
    let d = lines.single_usize()?;
    let ranks = lines.usize_list()?;
    let dims = lines.usize_list()?;
    if ranks.len() != d || dims.len() != d {
        return Err(lines.err(format!("order {d} needs {d} ranks and {d} dims")));
    }
    let mut cores = Vec::with_capacity(d);
    for i in 0..d {
        let core = lines.tensor()?;
        let expect = [ranks[i], dims[i], ranks[(i + 1) % d]];
        if core.dims() != expect {
            return Err(lines.err(format!(
                "core {} has dims {:?}, header says {expect:?}",
                i + 1,
                core.dims()
            )));
        }
        cores.push(core);
    }
    lines.expect_end()?;
    TrCores::new(cores).map_err(|e| lines.err(e.to_string()))
}

pub fn save_tensor(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, t)?;
    w.flush()?;
    Ok(())
}

pub fn save_tr(path: impl AsRef<Path>, u: &TrCores) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_tr(&mut w, u)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<DenseTensor> {
    read_tensor(BufReader::new(File::open(path)?))
}

pub fn load_tr(path: impl AsRef<Path>) -> Result<TrCores> {
    read_tr(BufReader::new(File::open(path)?))
}
