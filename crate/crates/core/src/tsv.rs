//! Tab-separated artifact helpers.
//!
//! Every artifact starts with a `# config_hash=<hex>` line; readers skip `#`
//! lines. Free-text fields escape `\`, tab, CR and LF.

use std::path::Path;

use crate::cluster::Partition;
use crate::{Error, Result};

pub fn escape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\t' => out.push_str("\\t"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            c => out.push(c),
        }
    }
    out
}

pub fn unescape_field(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some(other) => out.push(other),
            None => out.push('\\'),
        }
    }
    out
}

pub fn with_hash_header(config_hash: &str, body: &str) -> String {
    format!("# config_hash={config_hash}\n{body}")
}

/// The hash recorded in an artifact's first line, if any.
pub fn header_hash(text: &str) -> Option<&str> {
    text.lines().next()?.strip_prefix("# config_hash=")
}

/// Data rows of a TSV body as `(1-based line number, fields)`, skipping
/// comments, blank lines and the header row.
pub fn rows<'a>(text: &'a str, header: &'a str) -> impl Iterator<Item = (usize, Vec<&'a str>)> + 'a {
    text.lines()
        .enumerate()
        .filter(move |(_, l)| !l.is_empty() && !l.starts_with('#') && *l != header)
        .map(|(i, l)| (i + 1, l.split('\t').collect()))
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub const PARTITION_HEADER: &str = "node_id\tcommunity";

pub fn partition_to_tsv(p: &Partition) -> String {
    let mut out = format!("{PARTITION_HEADER}\n");
    for (id, c) in p.node_ids().iter().zip(p.assignment()) {
        out.push_str(&format!("{id}\t{c}\n"));
    }
    out
}

pub fn parse_partition_tsv(path: &Path, text: &str) -> Result<Partition> {
    let mut ids = Vec::new();
    let mut labels = Vec::new();
    for (line, fields) in rows(text, PARTITION_HEADER) {
        let bad = |message: &str| Error::Table {
            path: path.to_path_buf(),
            line,
            message: message.to_string(),
        };
        let [id, c] = fields[..] else {
            return Err(bad("expected `node_id<TAB>community`"));
        };
        ids.push(id.to_string());
        labels.push(c.parse::<usize>().map_err(|_| bad("community must be a non-negative integer"))?);
    }
    Partition::new(ids, &labels)
}
