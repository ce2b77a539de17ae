//! The NPY v1.0 subset used for tensor interchange.
//!
//! Only little-endian `f4`/`f8`, C-order arrays of rank 2 to 4 are accepted.
//! Anything else is rejected rather than converted, so every accepted file
//! round-trips bit-exactly.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{DType, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 6] = b"\x93NUMPY";
const ALIGN: usize = 64;
// numpy reserves room for the leading axis to grow to this many digits.
const GROWTH_AXIS_MAX_DIGITS: usize = 21;

pub fn read_tensor(path: impl AsRef<Path>) -> Result<Tensor> {
    let mut reader = BufReader::new(File::open(path)?);
    read_npy(&mut reader)
}

pub fn write_tensor(path: impl AsRef<Path>, t: &Tensor) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_npy(&mut writer, t)?;
    writer.flush()?;
    Ok(())
}

pub fn read_npy<R: Read>(reader: &mut R) -> Result<Tensor> {
    let mut preamble = [0u8; 10];
    reader
        .read_exact(&mut preamble)
        .map_err(|e| eof_as_format(e, "file shorter than the npy preamble"))?;
    if &preamble[..6] != MAGIC {
        return Err(Error::Format("bad magic string".into()));
    }
    match (preamble[6], preamble[7]) {
        (1, 0) => {}
        (major, minor) => {
            return Err(Error::UnsupportedLayout(format!(
                "npy version {major}.{minor} (only 1.0 is supported)"
            )))
        }
    }
    let header_len = u16::from_le_bytes([preamble[8], preamble[9]]) as usize;
    let mut header = vec![0u8; header_len];
    reader
        .read_exact(&mut header)
        .map_err(|e| eof_as_format(e, "truncated header"))?;
    let header = std::str::from_utf8(&header)
        .map_err(|_| Error::Format("header is not ASCII".into()))?;
    let dict = parse_header(header)?;

    let len = dict
        .shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("shape overflows".into()))?;
    let nbytes = len
        .checked_mul(dict.dtype.size())
        .ok_or_else(|| Error::Format("shape overflows".into()))?;

    let mut raw = Vec::new();
    reader.take(nbytes as u64).read_to_end(&mut raw)?;
    if raw.len() != nbytes {
        return Err(Error::Format(format!(
            "expected {nbytes} data bytes, found {}",
            raw.len()
        )));
    }
    let mut trailing = [0u8; 1];
    if reader.read(&mut trailing)? != 0 {
        return Err(Error::Format("trailing bytes after array data".into()));
    }

    let data: Vec<f64> = match dict.dtype {
        DType::F32 => raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
            .collect(),
        DType::F64 => raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect(),
    };
    Tensor::with_dtype(dict.shape, data, dict.dtype)
}

pub fn write_npy<W: Write>(writer: &mut W, t: &Tensor) -> Result<()> {
    let header = header_text(t.shape(), t.dtype());
    let header_len = u16::try_from(header.len())
        .map_err(|_| Error::Format("header too long for npy v1.0".into()))?;
    writer.write_all(MAGIC)?;
    writer.write_all(&[1, 0])?;
    writer.write_all(&header_len.to_le_bytes())?;
    writer.write_all(header.as_bytes())?;
    match t.dtype() {
        DType::F32 => {
            for &v in t.data() {
                writer.write_all(&(v as f32).to_le_bytes())?;
            }
        }
        DType::F64 => {
            for &v in t.data() {
                writer.write_all(&v.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

fn header_text(shape: &[usize], dtype: DType) -> String {
    let descr = match dtype {
        DType::F32 => "<f4",
        DType::F64 => "<f8",
    };
    let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    let mut text = format!(
        "{{'descr': '{descr}', 'fortran_order': False, 'shape': ({}), }}",
        dims.join(", ")
    );
    let lead_digits = dims.first().map_or(1, |d| d.len());
    text.push_str(&" ".repeat(GROWTH_AXIS_MAX_DIGITS.saturating_sub(lead_digits)));
    let unpadded = MAGIC.len() + 4 + text.len() + 1;
    let pad = (ALIGN - unpadded % ALIGN) % ALIGN;
    text.push_str(&" ".repeat(pad));
    text.push('\n');
    text
}

fn eof_as_format(e: io::Error, what: &str) -> Error {
    if e.kind() == io::ErrorKind::UnexpectedEof {
        Error::Format(what.into())
    } else {
        Error::Io(e)
    }
}

#[derive(Debug)]
struct HeaderDict {
    dtype: DType,
    shape: Vec<usize>,
}

#[derive(Debug, PartialEq)]
enum Value {
    Str(String),
    Bool(bool),
    Tuple(Vec<usize>),
}

/// Parses the Python dict literal of an npy header.
fn parse_header(text: &str) -> Result<HeaderDict> {
    let mut p = Parser {
        s: text.trim_end().as_bytes(),
        pos: 0,
    };
    let mut descr = None;
    let mut fortran = None;
    let mut shape = None;

    p.expect(b'{')?;
    loop {
        p.skip_ws();
        if p.eat(b'}') {
            break;
        }
        let key = p.string()?;
        p.skip_ws();
        p.expect(b':')?;
        p.skip_ws();
        let value = p.value()?;
        let slot = match key.as_str() {
            "descr" => &mut descr,
            "fortran_order" => &mut fortran,
            "shape" => &mut shape,
            other => return Err(Error::Format(format!("unexpected header key '{other}'"))),
        };
        if slot.replace(value).is_some() {
            return Err(Error::Format(format!("duplicate header key '{key}'")));
        }
        p.skip_ws();
        if !p.eat(b',') {
            p.skip_ws();
            p.expect(b'}')?;
            break;
        }
    }
    if p.pos != p.s.len() {
        return Err(Error::Format("garbage after header dict".into()));
    }

    let descr = match descr {
        Some(Value::Str(s)) => s,
        _ => return Err(Error::Format("missing or invalid 'descr'".into())),
    };
    let fortran = match fortran {
        Some(Value::Bool(b)) => b,
        _ => return Err(Error::Format("missing or invalid 'fortran_order'".into())),
    };
    let shape = match shape {
        Some(Value::Tuple(t)) => t,
        _ => return Err(Error::Format("missing or invalid 'shape'".into())),
    };

    let dtype = match descr.as_str() {
        "<f4" => DType::F32,
        "<f8" => DType::F64,
        other => {
            return Err(Error::UnsupportedLayout(format!(
                "dtype '{other}' (only '<f4' and '<f8' are supported)"
            )))
        }
    };
    if fortran {
        return Err(Error::UnsupportedLayout("fortran_order arrays".into()));
    }
    if !(2..=4).contains(&shape.len()) {
        return Err(Error::UnsupportedLayout(format!(
            "rank {} (only 2 to 4 are supported)",
            shape.len()
        )));
    }
    if shape.contains(&0) {
        return Err(Error::UnsupportedLayout(format!("empty axis in shape {shape:?}")));
    }
    Ok(HeaderDict { dtype, shape })
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(b' ' | b'\t' | b'\n' | b'\r')) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(Error::Format(format!(
                "expected '{}' at header offset {}",
                c as char, self.pos
            )))
        }
    }

    fn string(&mut self) -> Result<String> {
        let quote = match self.peek() {
            Some(q @ (b'\'' | b'"')) => q,
            _ => return Err(Error::Format(format!("expected string at offset {}", self.pos))),
        };
        self.pos += 1;
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c == quote {
                let s = String::from_utf8_lossy(&self.s[start..self.pos]).into_owned();
                self.pos += 1;
                return Ok(s);
            }
            self.pos += 1;
        }
        Err(Error::Format("unterminated string".into()))
    }

    fn value(&mut self) -> Result<Value> {
        match self.peek() {
            Some(b'\'' | b'"') => self.string().map(Value::Str),
            Some(b'(') => self.tuple().map(Value::Tuple),
            _ => {
                let rest = &self.s[self.pos..];
                if rest.starts_with(b"True") {
                    self.pos += 4;
                    Ok(Value::Bool(true))
                } else if rest.starts_with(b"False") {
                    self.pos += 5;
                    Ok(Value::Bool(false))
                } else {
                    Err(Error::Format(format!("unexpected value at offset {}", self.pos)))
                }
            }
        }
    }

    fn tuple(&mut self) -> Result<Vec<usize>> {
        self.expect(b'(')?;
        let mut dims = Vec::new();
        loop {
            self.skip_ws();
            if self.eat(b')') {
                return Ok(dims);
            }
            let start = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii digits");
            let dim = digits
                .parse::<usize>()
                .map_err(|_| Error::Format(format!("bad shape entry at offset {start}")))?;
            dims.push(dim);
            self.skip_ws();
            if !self.eat(b',') {
                self.skip_ws();
                self.expect(b')')?;
                return Ok(dims);
            }
        }
    }
}
