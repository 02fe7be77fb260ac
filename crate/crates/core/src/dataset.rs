//! URL corpus handling: standardization to fixed-length canonical strings,
//! duplicate removal, CSV ingestion, and the cached corpus file format.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use crate::codec::{self, CodecError};

/// Canonical URL length after standardization.
pub const CANONICAL_LEN: usize = 150;

/// Padding marker for short URLs. NUL never appears in a URL, and it is
/// excluded from vocabularies and character counts.
pub const MARKER: char = '\0';

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("line {line}: {reason}")]
    BadRow { line: u64, reason: String },
    #[error("{malformed} of {total} rows malformed (> 1% threshold); first: line {first_line}: {first_reason}")]
    TooManyMalformed {
        malformed: u64,
        total: u64,
        first_line: u64,
        first_reason: String,
    },
    #[error("corpus file: {0}")]
    Codec(#[from] CodecError),
    #[error("empty corpus")]
    Empty,
}

/// One standardized record. `label` is +1 for keys (stored in the filter)
/// and -1 for non-keys.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlRecord {
    pub canonical: String,
    pub label: i8,
}

impl UrlRecord {
    pub fn new(raw: &str, label: i8) -> Self {
        debug_assert!(label == 1 || label == -1);
        UrlRecord { canonical: standardize(raw), label }
    }

    pub fn is_key(&self) -> bool {
        self.label == 1
    }

    /// Byte-string form used as the filter key.
    pub fn key_bytes(&self) -> &[u8] {
        self.canonical.as_bytes()
    }
}

/// Strip leading "http://", "https://", "www." (repeatedly, in that order),
/// then resize to exactly [`CANONICAL_LEN`] symbols: truncate long inputs,
/// right-pad short ones with [`MARKER`].
pub fn standardize(raw: &str) -> String {
    let mut s = raw;
    loop {
        let before = s;
        for prefix in ["http://", "https://", "www."] {
            if let Some(rest) = s.strip_prefix(prefix) {
                s = rest;
            }
        }
        if s == before {
            break;
        }
    }
    let mut out: String = s.chars().take(CANONICAL_LEN).collect();
    let short = CANONICAL_LEN - out.chars().count();
    for _ in 0..short {
        out.push(MARKER);
    }
    out
}

/// Duplicate removal report.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DedupeStats {
    pub duplicates_removed: u64,
    pub label_conflicts: u64,
}

/// Keep the first occurrence of each canonical string. A duplicate carrying
/// a conflicting label promotes the kept record to the key class (+1): a
/// filter must never miss a key. Each promotion counts as one conflict.
pub fn dedupe(records: Vec<UrlRecord>) -> (Vec<UrlRecord>, DedupeStats) {
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut out: Vec<UrlRecord> = Vec::with_capacity(records.len());
    let mut stats = DedupeStats::default();
    for rec in records {
        match seen.get(&rec.canonical) {
            Some(&i) => {
                stats.duplicates_removed += 1;
                if rec.label != out[i].label {
                    stats.label_conflicts += 1;
                    out[i].label = 1;
                }
            }
            None => {
                seen.insert(rec.canonical.clone(), out.len());
                out.push(rec);
            }
        }
    }
    (out, stats)
}

/// Corpus ingestion summary printed by the CLI.
#[derive(Debug, Clone, serde::Serialize)]
pub struct CorpusSummary {
    pub keys: u64,
    pub non_keys: u64,
    pub duplicates_removed: u64,
    pub label_conflicts: u64,
    pub malformed_rows: u64,
}

/// Standardized, deduplicated corpus.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<UrlRecord>,
    pub summary: CorpusSummary,
}

impl Corpus {
    pub fn keys(&self) -> Vec<&UrlRecord> {
        self.records.iter().filter(|r| r.is_key()).collect()
    }

    pub fn non_keys(&self) -> Vec<&UrlRecord> {
        self.records.iter().filter(|r| !r.is_key()).collect()
    }

    /// Parse a `url,label` CSV (header required, label in {0,1} or {-1,1};
    /// 0 means non-key). Malformed rows are tolerated up to 1% of the file.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, DataError> {
        let mut csv_reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let mut records = Vec::new();
        let mut malformed: Vec<(u64, String)> = Vec::new();
        let mut total: u64 = 0;
        for (i, row) in csv_reader.records().enumerate() {
            let line = i as u64 + 2; // 1-based, after the header
            total += 1;
            let row = match row {
                Ok(r) => r,
                Err(e) => {
                    malformed.push((line, e.to_string()));
                    continue;
                }
            };
            if row.len() != 2 {
                malformed.push((line, format!("expected 2 fields, found {}", row.len())));
                continue;
            }
            let label = match row[1].trim() {
                "1" => 1,
                "0" | "-1" => -1,
                other => {
                    malformed.push((line, format!("bad label {other:?}")));
                    continue;
                }
            };
            records.push(UrlRecord::new(&row[0], label));
        }
        if total == 0 {
            return Err(DataError::Empty);
        }
        if malformed.len() as u64 * 100 > total {
            let (first_line, first_reason) = malformed[0].clone();
            return Err(DataError::TooManyMalformed {
                malformed: malformed.len() as u64,
                total,
                first_line,
                first_reason,
            });
        }
        let malformed_rows = malformed.len() as u64;
        let (records, stats) = dedupe(records);
        let keys = records.iter().filter(|r| r.is_key()).count() as u64;
        let non_keys = records.len() as u64 - keys;
        Ok(Corpus {
            records,
            summary: CorpusSummary {
                keys,
                non_keys,
                duplicates_removed: stats.duplicates_removed,
                label_conflicts: stats.label_conflicts,
                malformed_rows,
            },
        })
    }

    pub fn from_csv_path(path: &Path) -> Result<Self, DataError> {
        Self::from_csv(std::fs::File::open(path)?)
    }

    /// Cached corpus format: magic "LBD1", version, summary counters, record
    /// count, then per record a label byte and the canonical string blob.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(b"LBD1");
        out.push(codec::FORMAT_VERSION);
        out.extend_from_slice(&self.summary.duplicates_removed.to_le_bytes());
        out.extend_from_slice(&self.summary.label_conflicts.to_le_bytes());
        out.extend_from_slice(&self.summary.malformed_rows.to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for rec in &self.records {
            out.push(if rec.is_key() { 1 } else { 0 });
            codec::put_blob(&mut out, rec.canonical.as_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, DataError> {
        let mut r = codec::Reader::new(bytes);
        r.expect_magic(b"LBD1")?;
        r.expect_version()?;
        let duplicates_removed = r.u64()?;
        let label_conflicts = r.u64()?;
        let malformed_rows = r.u64()?;
        let count = r.u64()?;
        let mut records = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let label = if r.u8()? == 1 { 1 } else { -1 };
            let canonical = String::from_utf8(r.blob()?.to_vec())
                .map_err(|e| CodecError::Corrupt(e.to_string()))?;
            records.push(UrlRecord { canonical, label });
        }
        r.expect_end()?;
        let keys = records.iter().filter(|x| x.is_key()).count() as u64;
        let non_keys = records.len() as u64 - keys;
        Ok(Corpus {
            records,
            summary: CorpusSummary {
                keys,
                non_keys,
                duplicates_removed,
                label_conflicts,
                malformed_rows,
            },
        })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        Self::decode(&std::fs::read(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn standardize_strips_and_pads() {
        let s = standardize("http://www.example.com/x");
        assert_eq!(s.chars().count(), CANONICAL_LEN);
        assert!(s.starts_with("example.com/x"));
        assert!(s["example.com/x".len()..].chars().all(|c| c == MARKER));
    }

    #[test]
    fn standardize_truncates_long_input() {
        let long: String = "https://".to_string() + &"a".repeat(200);
        let s = standardize(&long);
        assert_eq!(s, "a".repeat(150));
    }

    #[test]
    fn standardize_clean_input_only_padded() {
        let s = standardize("example.com");
        assert!(s.starts_with("example.com"));
        assert_eq!(s.chars().filter(|&c| c == MARKER).count(), 150 - 11);
    }

    #[test]
    fn standardize_repeated_prefixes() {
        assert!(standardize("http://https://www.x.org").starts_with("x.org"));
        assert_eq!(standardize("").chars().filter(|&c| c == MARKER).count(), 150);
    }

    #[test]
    fn dedupe_keeps_first_and_promotes_conflicts() {
        let recs = vec![
            UrlRecord::new("a.com", -1),
            UrlRecord::new("a.com", -1),
            UrlRecord::new("b.com", -1),
            UrlRecord::new("b.com", 1),
        ];
        let (out, stats) = dedupe(recs);
        assert_eq!(out.len(), 2);
        assert_eq!(stats.duplicates_removed, 2);
        assert_eq!(stats.label_conflicts, 1);
        assert_eq!(out[0].label, -1);
        assert_eq!(out[1].label, 1, "conflicting duplicate resolves to key");
    }

    #[test]
    fn dedupe_disjoint_unchanged() {
        let recs = vec![UrlRecord::new("a.com", 1), UrlRecord::new("b.com", -1)];
        let (out, stats) = dedupe(recs.clone());
        assert_eq!(out, recs);
        assert_eq!(stats, DedupeStats::default());
    }

    #[test]
    fn csv_ingest_counts_and_errors() {
        let csv = "url,label\na.com,1\nb.com,0\nb.com,0\n";
        let corpus = Corpus::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(corpus.summary.keys, 1);
        assert_eq!(corpus.summary.non_keys, 1);
        assert_eq!(corpus.summary.duplicates_removed, 1);

        let bad = "url,label\na.com,2\nb.com,1\n";
        let err = Corpus::from_csv(bad.as_bytes()).unwrap_err();
        match err {
            DataError::TooManyMalformed { first_line, .. } => assert_eq!(first_line, 2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn csv_tolerates_sub_percent_malformed() {
        let mut csv = String::from("url,label\nbad-row,7\n");
        for i in 0..200 {
            csv.push_str(&format!("u{i}.com,1\n"));
        }
        let corpus = Corpus::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(corpus.summary.malformed_rows, 1);
        assert_eq!(corpus.summary.keys, 200);
    }

    #[test]
    fn corpus_round_trip() {
        let csv = "url,label\na.com,1\nb.com,0\nc.net/path,1\n";
        let corpus = Corpus::from_csv(csv.as_bytes()).unwrap();
        let decoded = Corpus::decode(&corpus.encode()).unwrap();
        assert_eq!(decoded.records, corpus.records);
        assert_eq!(decoded.summary.keys, corpus.summary.keys);
    }

    proptest! {
        #[test]
        fn standardize_idempotent(raw in "\\PC{0,200}") {
            let once = standardize(&raw);
            prop_assert_eq!(standardize(&once), once);
        }

        #[test]
        fn standardize_fixed_length(raw in "\\PC{0,300}") {
            prop_assert_eq!(standardize(&raw).chars().count(), CANONICAL_LEN);
        }
    }
}
