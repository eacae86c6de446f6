//! Sentence-vector files and normalized cosine similarity.
//!
//! EMB1 layout (little-endian, no padding):
//!
//! ```text
//! "EMB1" | u32 count | u32 dim | count × ( u32 id_len | id bytes (UTF-8) | dim × f32 )
//! ```

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::{Error, Result};

pub const EMB1_MAGIC: &[u8; 4] = b"EMB1";

/// Row-major `count × dim` matrix of f32 vectors keyed by text id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    ids: Vec<String>,
    dim: usize,
    values: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingMatrix {
    pub fn new(ids: Vec<String>, dim: usize, values: Vec<f32>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("embedding dimension must be positive"));
        }
        if values.len() != ids.len() * dim {
            return Err(Error::domain(format!(
                "expected {} values for {} rows of dim {}, got {}",
                ids.len() * dim,
                ids.len(),
                dim,
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite value in row `{}`",
                ids[pos / dim]
            )));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::domain(format!("duplicate embedding id `{id}`")));
            }
        }
        Ok(EmbeddingMatrix {
            ids,
            dim,
            values,
            index,
        })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, id: &str) -> Option<&[f32]> {
        self.index.get(id).map(|&i| self.row(i))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f32])> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.values.chunks_exact(self.dim))
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::EmbeddingFormat {
                offset: self.pos as u64,
                message: format!(
                    "truncated: need {n} bytes for {what}, {} remain",
                    self.bytes.len() - self.pos
                ),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

pub fn load_embeddings<R: Read>(mut reader: R) -> Result<EmbeddingMatrix> {
    let mut bytes = Vec::new();
    reader
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<embedding stream>", e))?;
    decode_emb1(&bytes)
}

pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_emb1(&bytes)
}

fn format_err(offset: usize, message: impl Into<String>) -> Error {
    Error::EmbeddingFormat {
        offset: offset as u64,
        message: message.into(),
    }
}

pub fn decode_emb1(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let mut cur = Cursor { bytes, pos: 0 };
    let magic = cur.take(4, "magic")?;
    if magic != EMB1_MAGIC {
        return Err(format_err(0, format!("bad magic {magic:?}")));
    }
    let count = cur.u32("count")? as usize;
    let dim_offset = cur.pos;
    let dim = cur.u32("dim")? as usize;
    if dim == 0 {
        return Err(format_err(dim_offset, "dim must be positive"));
    }

    let mut ids = Vec::with_capacity(count.min(1 << 20));
    let mut values = Vec::with_capacity(count.min(1 << 20) * dim);
    let mut seen = HashMap::new();
    for row in 0..count {
        let len = cur.u32(&format!("id length of row {row}"))? as usize;
        let id_offset = cur.pos;
        let raw = cur.take(len, &format!("id of row {row}"))?;
        let id = std::str::from_utf8(raw)
            .map_err(|e| format_err(id_offset, format!("id of row {row} is not UTF-8: {e}")))?
            .to_string();
        if seen.insert(id.clone(), row).is_some() {
            return Err(format_err(id_offset, format!("duplicate id `{id}`")));
        }
        for _ in 0..dim {
            let offset = cur.pos;
            let b = cur.take(4, &format!("values of row {row}"))?;
            let v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if !v.is_finite() {
                return Err(format_err(offset, format!("non-finite value in row `{id}`")));
            }
            values.push(v);
        }
        ids.push(id);
    }
    if cur.pos != bytes.len() {
        return Err(format_err(
            cur.pos,
            format!("{} trailing bytes after last row", bytes.len() - cur.pos),
        ));
    }
    EmbeddingMatrix::new(ids, dim, values)
}

pub fn encode_emb1(m: &EmbeddingMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + m.len() * (4 + m.dim * 4 + 16));
    out.extend_from_slice(EMB1_MAGIC);
    out.extend_from_slice(&(m.len() as u32).to_le_bytes());
    out.extend_from_slice(&(m.dim as u32).to_le_bytes());
    for (id, row) in m.rows() {
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        for v in row {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_embeddings<W: Write>(mut writer: W, m: &EmbeddingMatrix) -> std::io::Result<()> {
    writer.write_all(&encode_emb1(m))
}

fn dot(u: &[f32], v: &[f32]) -> f64 {
    u.iter().zip(v).map(|(&a, &b)| a as f64 * b as f64).sum()
}

fn norm(u: &[f32]) -> f64 {
    dot(u, u).sqrt()
}

fn mapped_cosine(dot: f64, norm_u: f64, norm_v: f64) -> f64 {
    ((dot / (norm_u * norm_v) + 1.0) / 2.0).clamp(0.0, 1.0)
}

/// Cosine similarity mapped affinely from [-1, 1] onto [0, 1].
pub fn normalized_cosine(u: &[f32], v: &[f32]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::domain(format!(
            "vector length mismatch: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::domain("zero-norm vector"));
    }
    Ok(mapped_cosine(dot(u, v), nu, nv))
}

/// Symmetric similarity matrix stored as its strict upper triangle; the
/// diagonal is implicitly 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    ids: Vec<String>,
    upper: Vec<f64>,
}

fn upper_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl SimilarityMatrix {
    /// Build from a dense matrix; only the strict upper triangle is read.
    pub fn from_dense(ids: Vec<String>, dense: &[Vec<f64>]) -> Result<Self> {
        let n = ids.len();
        if dense.len() != n || dense.iter().any(|r| r.len() != n) {
            return Err(Error::domain("dense similarity matrix must be n×n"));
        }
        let mut upper = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for (i, row) in dense.iter().enumerate() {
            for &v in &row[i + 1..] {
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::domain(format!("similarity {v} outside [0, 1]")));
                }
                upper.push(v);
            }
        }
        Ok(SimilarityMatrix { ids, upper })
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering;
        match i.cmp(&j) {
            Ordering::Equal => 1.0,
            Ordering::Less => self.upper[upper_index(self.len(), i, j)],
            Ordering::Greater => self.upper[upper_index(self.len(), j, i)],
        }
    }

    /// Upper-triangle entries as `(i, j, weight)` with `i < j`, in
    /// lexicographic pair order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.len();
        (0..n)
            .flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
            .zip(self.upper.iter().copied())
            .map(|((i, j), w)| (i, j, w))
    }

    pub fn pair_count(&self) -> usize {
        self.upper.len()
    }
}

pub fn pairwise_similarity(m: &EmbeddingMatrix) -> Result<SimilarityMatrix> {
    let norms: Vec<f64> = (0..m.len()).map(|i| norm(m.row(i))).collect();
    if let Some(i) = norms.iter().position(|&n| n == 0.0) {
        return Err(Error::ZeroNorm(m.ids()[i].clone()));
    }
    let n = m.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = m.row(i);
            (i + 1..n)
                .map(|j| mapped_cosine(dot(ri, m.row(j)), norms[i], norms[j]))
                .collect()
        })
        .collect();
    Ok(SimilarityMatrix {
        ids: m.ids().to_vec(),
        upper: rows.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn matrix(rows: &[&[f32]]) -> EmbeddingMatrix {
        let dim = rows[0].len();
        EmbeddingMatrix::new(
            (0..rows.len()).map(|i| format!("r{i}")).collect(),
            dim,
            rows.iter().flat_map(|r| r.iter().copied()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn cosine_landmarks() {
        assert_abs_diff_eq!(normalized_cosine(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(normalized_cosine(&[1.0, 0.0], &[0.0, 3.0]).unwrap(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(normalized_cosine(&[1.0, -2.0], &[-1.0, 2.0]).unwrap(), 0.0, epsilon = 1e-12);
        assert!(normalized_cosine(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(normalized_cosine(&[1.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn pairwise_basis_vectors() {
        let m = matrix(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0]]);
        let s = pairwise_similarity(&m).unwrap();
        assert_eq!(s.get(0, 2), 1.0);
        assert_eq!(s.get(0, 1), 0.5);
        assert_eq!(s.get(1, 1), 1.0);
        assert_eq!(s.get(2, 0), s.get(0, 2));

        let single = pairwise_similarity(&matrix(&[&[3.0, 4.0]])).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single.get(0, 0), 1.0);
    }

    #[test]
    fn zero_row_names_id() {
        let m = matrix(&[&[1.0, 0.0], &[0.0, 0.0]]);
        match pairwise_similarity(&m) {
            Err(Error::ZeroNorm(id)) => assert_eq!(id, "r1"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn emb1_small_file() {
        let m = matrix(&[&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]]);
        let bytes = encode_emb1(&m);
        assert_eq!(&bytes[..4], b"EMB1");
        assert_eq!(bytes.len(), 12 + 2 * (4 + 2 + 12));
        let back = load_embeddings(bytes.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        assert_eq!(back.dim(), 3);
        assert_eq!(back.get("r1").unwrap(), &[4.0, 5.0, 6.0]);
    }

    #[test]
    fn emb1_corruption() {
        let m = matrix(&[&[1.0, 2.0]]);
        let bytes = encode_emb1(&m);

        match decode_emb1(&bytes[..12]) {
            Err(Error::EmbeddingFormat { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("unexpected {other:?}"),
        }
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_emb1(&bad), Err(Error::EmbeddingFormat { offset: 0, .. })));

        let mut nan = bytes.clone();
        let at = bytes.len() - 4;
        nan[at..].copy_from_slice(&f32::NAN.to_le_bytes());
        match decode_emb1(&nan) {
            Err(Error::EmbeddingFormat { offset, .. }) => assert_eq!(offset, at as u64),
            other => panic!("unexpected {other:?}"),
        }

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(decode_emb1(&trailing).is_err());
    }

    proptest! {
        #[test]
        fn cosine_is_scale_invariant(
            u in prop::collection::vec(-10.0f32..10.0, 8),
            v in prop::collection::vec(-10.0f32..10.0, 8),
            a in 0.01f32..100.0,
            b in 0.01f32..100.0,
        ) {
            prop_assume!(u.iter().any(|x| x.abs() > 1e-3) && v.iter().any(|x| x.abs() > 1e-3));
            let base = normalized_cosine(&u, &v).unwrap();
            let su: Vec<f32> = u.iter().map(|x| x * a).collect();
            let sv: Vec<f32> = v.iter().map(|x| x * b).collect();
            let scaled = normalized_cosine(&su, &sv).unwrap();
            prop_assert!((base - scaled).abs() <= 1e-6);
            prop_assert!((0.0..=1.0).contains(&base));
        }

        #[test]
        fn emb1_roundtrip(rows in prop::collection::vec(prop::collection::vec(-1e6f32..1e6, 5), 0..20)) {
            let ids: Vec<String> = (0..rows.len()).map(|i| format!("id-{i}-ü")).collect();
            let m = EmbeddingMatrix::new(ids, 5, rows.concat()).unwrap();
            let back = decode_emb1(&encode_emb1(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }
}
