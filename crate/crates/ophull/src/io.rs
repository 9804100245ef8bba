//! Reading and writing operator families, subspace models, hull models and
//! experiment CSVs.
//!
//! All containers share one convention: an ASCII header line whose last token
//! names the payload mode, followed by raw payload numbers.
//!
//! - operator:        `OPF1 <m> <n> <K> <mode>` then K records of (m floats α, n floats β)
//! - family:          `OPFAM1 <L> <mode>` then L operator containers
//! - subspace model:  `SSM1 <m> <n> <I> <J> <mode>` then E column-major, F
//!   column-major, the fit value, and the history filling the rest of the file
//! - hull model:      `HUL1 <L> <I> <J> <mode>` then the L vertex coefficient
//!   matrices column-major and the |L|×|L| Gram matrix column-major
//!
//! Payload numbers are little-endian 64-bit floats in `binary` mode and
//! whitespace-separated decimals in `text` mode. Text values are written in
//! shortest round-trip form, so both modes reproduce the data exactly.
//! Malformed input never panics: parsers return typed errors carrying the
//! byte offset of the failure and, for truncation, the index of the record
//! being read.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::hull::HullModel;
use crate::subspace::{BasisMode, CoeffMatrix, OrthoBasis, SubspaceModel};
use crate::tensor::FactoredOperator;

/// Payload encoding of a container file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FileMode {
    /// Whitespace-separated decimal payload.
    Text,
    /// Little-endian 64-bit float payload.
    #[default]
    Binary,
}

impl FileMode {
    fn token(self) -> &'static str {
        match self {
            FileMode::Text => "text",
            FileMode::Binary => "binary",
        }
    }
}

impl FromStr for FileMode {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s {
            "text" => Ok(FileMode::Text),
            "binary" => Ok(FileMode::Binary),
            _ => Err(()),
        }
    }
}

/// Method tag of one experiment record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Dct,
    Svd,
    Hosvd,
    Als,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self {
            Method::Dct => "DCT",
            Method::Svd => "SVD",
            Method::Hosvd => "HOSVD",
            Method::Als => "ALS",
        };
        f.write_str(tag)
    }
}

impl FromStr for Method {
    type Err = ();

    fn from_str(s: &str) -> std::result::Result<Self, ()> {
        match s.to_ascii_lowercase().as_str() {
            "dct" => Ok(Method::Dct),
            "svd" => Ok(Method::Svd),
            "hosvd" => Ok(Method::Hosvd),
            "als" => Ok(Method::Als),
            _ => Err(()),
        }
    }
}

/// One row of an experiment CSV: `method,n,dimension,value`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExperimentRecord {
    pub method: Method,
    /// Ambient dimension of the operators.
    pub n: usize,
    /// Basis dimension |I| (= |J|), or the rank of the SVD baseline.
    pub dimension: usize,
    /// Relative approximation error or wall time in seconds; never negative.
    pub value: f64,
}

// ---------------------------------------------------------------------------
// writing

fn push_floats(buf: &mut Vec<u8>, mode: FileMode, values: &[f64]) {
    match mode {
        FileMode::Binary => {
            for v in values {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        FileMode::Text => {
            let mut line = String::new();
            for (i, v) in values.iter().enumerate() {
                if i > 0 {
                    line.push(' ');
                }
                line.push_str(&format!("{v}"));
            }
            line.push('\n');
            buf.extend_from_slice(line.as_bytes());
        }
    }
}

fn push_operator(buf: &mut Vec<u8>, op: &FactoredOperator, mode: FileMode) {
    let (m, n, k) = (op.output_dim(), op.input_dim(), op.num_pairs());
    buf.extend_from_slice(format!("OPF1 {m} {n} {k} {}\n", mode.token()).as_bytes());
    let alphas = op.alphas().as_slice();
    let betas = op.betas().as_slice();
    for pair in 0..k {
        push_floats(buf, mode, &alphas[pair * m..(pair + 1) * m]);
        push_floats(buf, mode, &betas[pair * n..(pair + 1) * n]);
    }
}

/// Write a single operator container.
pub fn write_operator(path: impl AsRef<Path>, op: &FactoredOperator, mode: FileMode) -> Result<()> {
    let mut buf = Vec::new();
    push_operator(&mut buf, op, mode);
    fs::write(path, buf)?;
    Ok(())
}

/// Write a family container: `OPFAM1 L` followed by L operator containers.
pub fn write_family(
    path: impl AsRef<Path>,
    family: &[FactoredOperator],
    mode: FileMode,
) -> Result<()> {
    if family.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let mut buf = Vec::new();
    buf.extend_from_slice(format!("OPFAM1 {} {}\n", family.len(), mode.token()).as_bytes());
    for op in family {
        push_operator(&mut buf, op, mode);
    }
    fs::write(path, buf)?;
    Ok(())
}

/// Write a subspace model container.
pub fn write_model(path: impl AsRef<Path>, model: &SubspaceModel, mode: FileMode) -> Result<()> {
    let (m, n) = (model.output_dim(), model.input_dim());
    let (i_dim, j_dim) = (model.i_dim(), model.j_dim());
    let mut buf = Vec::new();
    buf.extend_from_slice(format!("SSM1 {m} {n} {i_dim} {j_dim} {}\n", mode.token()).as_bytes());
    push_floats(&mut buf, mode, model.basis_e().vectors().as_slice());
    push_floats(&mut buf, mode, model.basis_f().vectors().as_slice());
    push_floats(&mut buf, mode, &[model.fit()]);
    push_floats(&mut buf, mode, model.history());
    fs::write(path, buf)?;
    Ok(())
}

/// Write a hull container: the vertex coefficients and their Gram matrix.
/// The subspace model is persisted separately (see [`write_model`]) and must
/// be supplied again when reading the hull back.
pub fn write_hull(path: impl AsRef<Path>, hull: &HullModel, mode: FileMode) -> Result<()> {
    let (i_dim, j_dim) = (hull.model().i_dim(), hull.model().j_dim());
    let mut buf = Vec::new();
    buf.extend_from_slice(
        format!("HUL1 {} {i_dim} {j_dim} {}\n", hull.len(), mode.token()).as_bytes(),
    );
    for vertex in hull.vertices() {
        push_floats(&mut buf, mode, vertex.gamma().as_slice());
    }
    push_floats(&mut buf, mode, hull.gram().as_slice());
    fs::write(path, buf)?;
    Ok(())
}

/// Write experiment records as CSV with the fixed column set
/// `method,n,dimension,value`.
pub fn write_csv(path: impl AsRef<Path>, records: &[ExperimentRecord]) -> Result<()> {
    let mut out = String::from("method,n,dimension,value\n");
    for r in records {
        if !r.value.is_finite() || r.value < 0.0 {
            return Err(Error::InvalidParam {
                name: "value",
                reason: format!("record value {} must be finite and nonnegative", r.value),
            });
        }
        out.push_str(&format!("{},{},{},{}\n", r.method, r.n, r.dimension, r.value));
    }
    fs::write(path, out)?;
    Ok(())
}

// ---------------------------------------------------------------------------
// reading

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn offset(&self) -> u64 {
        self.pos as u64
    }

    fn skip_whitespace(&mut self) {
        while self.pos < self.data.len() && self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    /// Read one header line (skipping leading whitespace) and split it into tokens.
    fn header_line(&mut self) -> Result<(u64, Vec<&'a str>)> {
        self.skip_whitespace();
        let start = self.pos;
        let end = self.data[self.pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|off| self.pos + off)
            .ok_or(Error::MalformedHeader {
                offset: start as u64,
                detail: "missing header line".into(),
            })?;
        let line = std::str::from_utf8(&self.data[start..end]).map_err(|_| {
            Error::MalformedHeader {
                offset: start as u64,
                detail: "header is not valid UTF-8".into(),
            }
        })?;
        self.pos = end + 1;
        Ok((start as u64, line.split_whitespace().collect()))
    }

    fn read_f64(&mut self, mode: FileMode, record: usize) -> Result<f64> {
        match mode {
            FileMode::Binary => {
                if self.pos + 8 > self.data.len() {
                    return Err(Error::TruncatedPayload {
                        offset: self.offset(),
                        record,
                    });
                }
                let mut bytes = [0u8; 8];
                bytes.copy_from_slice(&self.data[self.pos..self.pos + 8]);
                self.pos += 8;
                Ok(f64::from_le_bytes(bytes))
            }
            FileMode::Text => {
                self.skip_whitespace();
                let start = self.pos;
                if start == self.data.len() {
                    return Err(Error::TruncatedPayload {
                        offset: self.offset(),
                        record,
                    });
                }
                while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
                    self.pos += 1;
                }
                let token = std::str::from_utf8(&self.data[start..self.pos]).map_err(|_| {
                    Error::MalformedPayload {
                        offset: start as u64,
                        detail: "payload token is not valid UTF-8".into(),
                    }
                })?;
                token.parse::<f64>().map_err(|_| Error::MalformedPayload {
                    offset: start as u64,
                    detail: format!("expected a number, found {token:?}"),
                })
            }
        }
    }

    /// True once no payload value remains (whitespace does not count in text mode).
    fn at_end(&mut self, mode: FileMode) -> bool {
        if mode == FileMode::Text {
            self.skip_whitespace();
        }
        self.pos == self.data.len()
    }

    fn expect_end(&mut self, mode: FileMode) -> Result<()> {
        if !self.at_end(mode) {
            return Err(Error::MalformedPayload {
                offset: self.offset(),
                detail: "unexpected trailing data".into(),
            });
        }
        Ok(())
    }

    fn read_floats(
        &mut self,
        mode: FileMode,
        count: usize,
        record_of: impl Fn(usize) -> usize,
    ) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        for i in 0..count {
            out.push(self.read_f64(mode, record_of(i))?);
        }
        Ok(out)
    }
}

fn parse_usize(offset: u64, token: &str, what: &str) -> Result<usize> {
    token.parse().map_err(|_| Error::MalformedHeader {
        offset,
        detail: format!("invalid {what}: {token:?}"),
    })
}

fn parse_mode(offset: u64, token: &str) -> Result<FileMode> {
    token.parse().map_err(|()| Error::MalformedHeader {
        offset,
        detail: format!("unknown payload mode {token:?}"),
    })
}

/// Parse the tokens of a header against a magic string and a field count.
fn split_header<'a>(
    offset: u64,
    tokens: &[&'a str],
    magic: &str,
    fields: usize,
) -> Result<(Vec<&'a str>, &'a str)> {
    if tokens.first() != Some(&magic) {
        return Err(Error::MalformedHeader {
            offset,
            detail: format!("expected magic {magic:?}, found {:?}", tokens.first().unwrap_or(&"")),
        });
    }
    if tokens.len() != fields + 2 {
        return Err(Error::MalformedHeader {
            offset,
            detail: format!(
                "{magic} header needs {fields} fields and a mode, found {} tokens",
                tokens.len() - 1
            ),
        });
    }
    Ok((tokens[1..=fields].to_vec(), tokens[fields + 1]))
}

fn read_operator_container(
    reader: &mut Reader<'_>,
    family_mode: Option<FileMode>,
) -> Result<(FactoredOperator, FileMode)> {
    let (offset, tokens) = reader.header_line()?;
    let (fields, mode_token) = split_header(offset, &tokens, "OPF1", 3)?;
    let m = parse_usize(offset, fields[0], "output dimension")?;
    let n = parse_usize(offset, fields[1], "input dimension")?;
    let k = parse_usize(offset, fields[2], "pair count")?;
    let mode = parse_mode(offset, mode_token)?;
    if let Some(expected) = family_mode {
        if mode != expected {
            return Err(Error::MalformedHeader {
                offset,
                detail: format!(
                    "operator mode {} differs from family mode {}",
                    mode.token(),
                    expected.token()
                ),
            });
        }
    }
    if m == 0 || n == 0 || k == 0 {
        return Err(Error::MalformedHeader {
            offset,
            detail: format!("OPF1 dimensions must be positive, got m={m} n={n} K={k}"),
        });
    }
    let per_record = m.checked_add(n).ok_or(Error::MalformedHeader {
        offset,
        detail: "operator size overflows".into(),
    })?;
    let count = per_record.checked_mul(k).ok_or(Error::MalformedHeader {
        offset,
        detail: "operator size overflows".into(),
    })?;
    let floats = reader.read_floats(mode, count, |i| i / per_record)?;
    let mut alphas = DMatrix::zeros(m, k);
    let mut betas = DMatrix::zeros(n, k);
    for pair in 0..k {
        let base = pair * per_record;
        for row in 0..m {
            alphas[(row, pair)] = floats[base + row];
        }
        for row in 0..n {
            betas[(row, pair)] = floats[base + m + row];
        }
    }
    Ok((FactoredOperator::new(alphas, betas)?, mode))
}

/// Read a single operator container.
pub fn read_operator(path: impl AsRef<Path>) -> Result<FactoredOperator> {
    let data = fs::read(path)?;
    let mut reader = Reader::new(&data);
    let (op, mode) = read_operator_container(&mut reader, None)?;
    reader.expect_end(mode)?;
    Ok(op)
}

/// Read a family container.
pub fn read_family(path: impl AsRef<Path>) -> Result<Vec<FactoredOperator>> {
    let data = fs::read(path)?;
    let mut reader = Reader::new(&data);
    let (offset, tokens) = reader.header_line()?;
    let (fields, mode_token) = split_header(offset, &tokens, "OPFAM1", 1)?;
    let count = parse_usize(offset, fields[0], "operator count")?;
    let mode = parse_mode(offset, mode_token)?;
    if count == 0 {
        return Err(Error::MalformedHeader {
            offset,
            detail: "family must contain at least one operator".into(),
        });
    }
    let mut family = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        family.push(read_operator_container(&mut reader, Some(mode))?.0);
    }
    reader.expect_end(mode)?;
    Ok(family)
}

/// Read a subspace model container.
pub fn read_model(path: impl AsRef<Path>) -> Result<SubspaceModel> {
    let data = fs::read(path)?;
    let mut reader = Reader::new(&data);
    let (offset, tokens) = reader.header_line()?;
    let (fields, mode_token) = split_header(offset, &tokens, "SSM1", 4)?;
    let m = parse_usize(offset, fields[0], "output dimension")?;
    let n = parse_usize(offset, fields[1], "input dimension")?;
    let i_dim = parse_usize(offset, fields[2], "output basis size")?;
    let j_dim = parse_usize(offset, fields[3], "input basis size")?;
    let mode = parse_mode(offset, mode_token)?;
    if i_dim > m || j_dim > n {
        return Err(Error::DimensionInconsistency {
            offset,
            detail: format!("basis sizes ({i_dim}, {j_dim}) exceed ambient ({m}, {n})"),
        });
    }

    let overflow = |offset| Error::MalformedHeader {
        offset,
        detail: "model size overflows".into(),
    };
    let e_count = m.checked_mul(i_dim).ok_or_else(|| overflow(offset))?;
    let f_count = n.checked_mul(j_dim).ok_or_else(|| overflow(offset))?;

    // sections: 0 = E, 1 = F, 2 = fit, 3 = history
    let e_floats = reader.read_floats(mode, e_count, |_| 0)?;
    let f_floats = reader.read_floats(mode, f_count, |_| 1)?;
    let fit = reader.read_f64(mode, 2)?;
    let mut history = Vec::new();
    while !reader.at_end(mode) {
        history.push(reader.read_f64(mode, 3)?);
    }

    let e = OrthoBasis::new(DMatrix::from_column_slice(m, i_dim, &e_floats), BasisMode::Output)?;
    let f = OrthoBasis::new(DMatrix::from_column_slice(n, j_dim, &f_floats), BasisMode::Input)?;
    SubspaceModel::with_fit(e, f, fit, history)
}

/// Read a hull container against the subspace model it was built in.
///
/// The file stores the vertex coefficients and the Gram matrix; the Lipschitz
/// constant is recomputed and the Gram matrix is revalidated against the
/// vertices on load.
pub fn read_hull(path: impl AsRef<Path>, model: SubspaceModel) -> Result<HullModel> {
    let data = fs::read(path)?;
    let mut reader = Reader::new(&data);
    let (offset, tokens) = reader.header_line()?;
    let (fields, mode_token) = split_header(offset, &tokens, "HUL1", 3)?;
    let count = parse_usize(offset, fields[0], "vertex count")?;
    let i_dim = parse_usize(offset, fields[1], "output basis size")?;
    let j_dim = parse_usize(offset, fields[2], "input basis size")?;
    let mode = parse_mode(offset, mode_token)?;
    if count == 0 {
        return Err(Error::MalformedHeader {
            offset,
            detail: "hull must contain at least one vertex".into(),
        });
    }
    if i_dim != model.i_dim() || j_dim != model.j_dim() {
        return Err(Error::DimensionInconsistency {
            offset,
            detail: format!(
                "hull coefficients are {i_dim}x{j_dim} but the model is {}x{}",
                model.i_dim(),
                model.j_dim()
            ),
        });
    }

    let overflow = |offset| Error::MalformedHeader {
        offset,
        detail: "hull size overflows".into(),
    };
    let per_vertex = i_dim.checked_mul(j_dim).ok_or_else(|| overflow(offset))?;
    let gram_count = count.checked_mul(count).ok_or_else(|| overflow(offset))?;

    // records: vertex l for l < L, then the Gram matrix as record L
    let mut vertices = Vec::with_capacity(count.min(1 << 16));
    for l in 0..count {
        let floats = reader.read_floats(mode, per_vertex, |_| l)?;
        vertices.push(CoeffMatrix::new(
            DMatrix::from_column_slice(i_dim, j_dim, &floats),
            Some(l),
        )?);
    }
    let gram_floats = reader.read_floats(mode, gram_count, |_| count)?;
    reader.expect_end(mode)?;
    let gram = DMatrix::from_column_slice(count, count, &gram_floats);
    HullModel::from_parts(vertices, gram, model)
}
