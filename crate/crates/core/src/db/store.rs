//! Single-file persistence.
//!
//! Layout: a one-line JSON header carrying the format tag and generation,
//! then the JSON body with the `cve`, `cpe_dict`, `exploit_link`, `cache`
//! and `meta` tables. Writes go to a temporary file in the same directory
//! that is renamed over the target, so readers see either the old or the new
//! file.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CveRecord, DbContents, DbGeneration, ExploitLink, PvcCacheEntry};
use crate::cpe::CpeName;
use crate::error::DbError;

const FORMAT: &str = "pvcscan-db";
const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    generation: u64,
}

#[derive(Serialize, Deserialize)]
struct Body {
    meta: DbGeneration,
    cve: Vec<CveRecord>,
    cpe_dict: Vec<CpeName>,
    exploit_link: Vec<ExploitLink>,
    cache: Vec<PvcCacheEntry>,
}

fn corrupt(path: &Path, message: impl Into<String>) -> DbError {
    DbError::Store {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

fn read_header(path: &Path, line: &str) -> Result<Header, DbError> {
    let header: Header =
        serde_json::from_str(line).map_err(|e| corrupt(path, format!("bad header: {e}")))?;
    if header.format != FORMAT || header.version != FORMAT_VERSION {
        return Err(corrupt(
            path,
            format!("unsupported format {} v{}", header.format, header.version),
        ));
    }
    Ok(header)
}

/// Generation recorded in the file header, without reading the body.
pub fn peek_generation(path: &Path) -> Result<Option<u64>, DbError> {
    let file = match std::fs::File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(DbError::io(path, e)),
    };
    let mut line = String::new();
    BufReader::new(file)
        .read_line(&mut line)
        .map_err(|e| DbError::io(path, e))?;
    Ok(Some(read_header(path, &line)?.generation))
}

pub fn load(path: &Path) -> Result<Option<(DbContents, Vec<PvcCacheEntry>)>, DbError> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(DbError::io(path, e)),
    };
    let (head, body) = text.split_once('\n').ok_or_else(|| corrupt(path, "missing body"))?;
    let header = read_header(path, head)?;
    let body: Body = serde_json::from_str(body).map_err(|e| corrupt(path, e.to_string()))?;
    if body.meta.counter != header.generation {
        return Err(corrupt(path, "header and body generations differ"));
    }
    let contents = DbContents {
        generation: body.meta,
        cves: body.cve.into_iter().map(|r| (r.id.clone(), r)).collect(),
        dictionary: body.cpe_dict.into_iter().collect(),
        exploit_links: body.exploit_link.into_iter().collect(),
    };
    Ok(Some((contents, body.cache)))
}

pub fn save(path: &Path, contents: &DbContents, cache: &[PvcCacheEntry]) -> Result<(), DbError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let header = Header {
        format: FORMAT.into(),
        version: FORMAT_VERSION,
        generation: contents.generation.counter,
    };
    let body = Body {
        meta: contents.generation,
        cve: contents.cves.values().cloned().collect(),
        cpe_dict: contents.dictionary.iter().cloned().collect(),
        exploit_link: contents.exploit_links.iter().cloned().collect(),
        cache: cache.to_vec(),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| DbError::io(dir, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        let write = |w: &mut std::io::BufWriter<&mut std::fs::File>| -> std::io::Result<()> {
            serde_json::to_writer(&mut *w, &header)?;
            w.write_all(b"\n")?;
            serde_json::to_writer(&mut *w, &body)?;
            w.flush()
        };
        write(&mut w).map_err(|e| DbError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| DbError::io(path, e))?;
    tmp.persist(path).map_err(|e| DbError::io(path, e.error))?;
    Ok(())
}
