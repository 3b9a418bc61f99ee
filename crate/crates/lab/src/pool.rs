//! Plain-text type pool files.
//!
//! ```text
//! # typeprior type pool
//! game<TAB>17
//! true_index<TAB>3
//! CDT<TAB>1 2 0 0 1 0 0
//! CDT<TAB>0 1
//! ```
//!
//! One member per line: kind, a tab, then the genome values separated by
//! spaces. Values are written in shortest round-trip form, so a pool reads
//! back bit-exactly and its hash is stable.

use sha2::{Digest, Sha256};
use thiserror::Error;
use typeprior_core::policy::{PolicyType, TypeKind, TypeSet};

const HEADER: &str = "# typeprior type pool";

#[derive(Debug, Error)]
pub enum PoolError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error(transparent)]
    Core(#[from] typeprior_core::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolFile {
    pub game_id: u16,
    pub types: TypeSet,
}

pub fn format_pool(game_id: u16, types: &TypeSet) -> String {
    let mut out = format!("{HEADER}\ngame\t{game_id}\ntrue_index\t{}\n", types.true_index());
    for t in types.members() {
        let values: Vec<String> = t.genome().iter().map(|v| v.to_string()).collect();
        out.push_str(&format!("{}\t{}\n", t.kind().name(), values.join(" ")));
    }
    out
}

/// Hex SHA-256 of the formatted pool.
pub fn pool_hash(game_id: u16, types: &TypeSet) -> String {
    hex::encode(Sha256::digest(format_pool(game_id, types).as_bytes()))
}

pub fn parse_pool(text: &str) -> Result<PoolFile, PoolError> {
    let err = |line: usize, message: &str| PoolError::Syntax { line, message: message.to_string() };
    let mut game_id = None;
    let mut true_index = None;
    let mut members = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let n = i + 1;
        let line = raw.trim_end();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once('\t').ok_or_else(|| err(n, "expected a tab-separated key"))?;
        match key {
            "game" => game_id = Some(rest.trim().parse::<u16>().map_err(|_| err(n, "bad game id"))?),
            "true_index" => true_index = Some(rest.trim().parse::<usize>().map_err(|_| err(n, "bad true index"))?),
            kind => {
                let kind = TypeKind::parse(kind).ok_or_else(|| err(n, "unknown type kind"))?;
                let values = rest
                    .split_whitespace()
                    .map(|v| v.parse::<f64>())
                    .collect::<Result<Vec<f64>, _>>()
                    .map_err(|_| err(n, "bad genome value"))?;
                members.push(PolicyType::from_genome(kind, &values).map_err(|e| err(n, &e.to_string()))?);
            }
        }
    }
    let game_id = game_id.ok_or_else(|| err(0, "missing game line"))?;
    let true_index = true_index.ok_or_else(|| err(0, "missing true_index line"))?;
    Ok(PoolFile { game_id, types: TypeSet::new(members, true_index)? })
}

#[cfg(test)]
mod tests {
    use super::*;
    use typeprior_core::game::game_by_id;
    use typeprior_core::policy::sample_type_set;

    #[test]
    fn round_trip_every_kind() {
        let g = game_by_id(30).unwrap();
        for kind in TypeKind::ALL {
            let set = sample_type_set(kind, &g, 4, 7).unwrap();
            let text = format_pool(30, &set);
            let back = parse_pool(&text).unwrap();
            assert_eq!(back.game_id, 30);
            assert_eq!(back.types, set);
            assert_eq!(format_pool(30, &back.types), text);
            assert_eq!(pool_hash(30, &set).len(), 64);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_pool("game\t1\ntrue_index\t0\nXYZ\t1 2\n").is_err());
        assert!(parse_pool("game\t1\nCDT\t0 1\nCDT\t0 0\n").is_err());
        assert!(parse_pool("game\t1\ntrue_index\t5\nCDT\t0 1\nCDT\t0 0\n").is_err());
        assert!(parse_pool("game 1\n").is_err());
    }
}
