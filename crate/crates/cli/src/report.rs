//! The coverage report format adapters speak: one stanza per seed,
//!
//! ```text
//! seed <seed_name> <content_hash_32_hex>
//! branch <pred_16_hex> <succ_16_hex>
//! ...
//! <blank line>
//! ```
//!
//! Block ids are 16 lowercase hex digits, content hashes 32. The same format
//! carries initial-corpus manifests and the body of an adapter `RESULT`.

use fuzzmux_core::coverage::{Branch, ContentHash};
use std::fmt::Write as _;

/// One parsed stanza. Branches keep the reported order and any duplicates;
/// the pool is the judge of malformed coverage.
#[derive(Clone, Debug, PartialEq)]
pub struct ReportSeed {
    pub name: String,
    pub hash: ContentHash,
    pub branches: Vec<Branch>,
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ReportError {
    #[error("line {line}: expected `seed <name> <hash>`, got {text:?}")]
    ExpectedSeedHeader { line: usize, text: String },
    #[error("line {line}: malformed {what}: {text:?}")]
    Malformed {
        line: usize,
        what: &'static str,
        text: String,
    },
}

fn parse_hex_u64(token: &str) -> Option<u64> {
    if token.len() > 16 || token.is_empty() {
        return None;
    }
    if token.chars().any(|c| c.is_ascii_uppercase()) {
        return None;
    }
    u64::from_str_radix(token, 16).ok()
}

fn parse_hash(token: &str) -> Option<ContentHash> {
    if token.len() != 32 {
        return None;
    }
    u128::from_str_radix(token, 16).ok().map(ContentHash)
}

/// Parses stanzas from an iterator of lines. Blank lines terminate stanzas;
/// extra blank lines and `#` comments between stanzas are tolerated.
pub fn parse_report<'a, I>(lines: I) -> Result<Vec<ReportSeed>, ReportError>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut seeds = Vec::new();
    let mut current: Option<ReportSeed> = None;
    for (idx, raw) in lines.into_iter().enumerate() {
        let line = idx + 1;
        let text = raw.trim_end_matches(['\r', '\n']);
        let trimmed = text.trim();
        if trimmed.is_empty() {
            if let Some(seed) = current.take() {
                seeds.push(seed);
            }
            continue;
        }
        if trimmed.starts_with('#') && current.is_none() {
            continue;
        }
        let mut parts = trimmed.split_ascii_whitespace();
        match parts.next() {
            Some("seed") if current.is_none() => {
                let (name, hash) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(name), Some(hash), None) => (name, hash),
                    _ => {
                        return Err(ReportError::Malformed {
                            line,
                            what: "seed header",
                            text: trimmed.into(),
                        })
                    }
                };
                let hash = parse_hash(hash).ok_or(ReportError::Malformed {
                    line,
                    what: "content hash",
                    text: trimmed.into(),
                })?;
                current = Some(ReportSeed {
                    name: name.to_string(),
                    hash,
                    branches: Vec::new(),
                });
            }
            Some("branch") if current.is_some() => {
                let (pred, succ) = match (parts.next(), parts.next(), parts.next()) {
                    (Some(p), Some(s), None) => (p, s),
                    _ => {
                        return Err(ReportError::Malformed {
                            line,
                            what: "branch line",
                            text: trimmed.into(),
                        })
                    }
                };
                let pred = parse_hex_u64(pred).ok_or(ReportError::Malformed {
                    line,
                    what: "block id",
                    text: trimmed.into(),
                })?;
                let succ = parse_hex_u64(succ).ok_or(ReportError::Malformed {
                    line,
                    what: "block id",
                    text: trimmed.into(),
                })?;
                current
                    .as_mut()
                    .expect("checked above")
                    .branches
                    .push(Branch::new(pred, succ));
            }
            _ => {
                return Err(ReportError::ExpectedSeedHeader {
                    line,
                    text: trimmed.into(),
                })
            }
        }
    }
    if let Some(seed) = current.take() {
        seeds.push(seed);
    }
    Ok(seeds)
}

/// Renders stanzas in canonical form, each terminated by a blank line.
pub fn emit_report(seeds: &[ReportSeed]) -> String {
    let mut out = String::new();
    for seed in seeds {
        let _ = writeln!(out, "seed {} {}", seed.name, seed.hash);
        for branch in &seed.branches {
            let _ = writeln!(out, "branch {} {}", branch.pred, branch.succ);
        }
        out.push('\n');
    }
    out
}
