//! JSON-lines sample archives: one header line, then one record per sweep
//! point. A `.gz` extension selects gzip, written as one member per line so
//! records can be appended.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use super::config::RawConfig;
use crate::error::{Error, Result};
use crate::ring::{RingSpec, SpinConfig};
use crate::schedule::GammaRatio;

pub const ARCHIVE_FORMAT: &str = "wallmem-archive";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveHeader {
    pub format: String,
    pub version: u32,
    /// Seconds since the Unix epoch.
    pub created_unix: u64,
    pub schedule: String,
    pub schedule_synthetic: bool,
    pub config: RawConfig,
}

impl ArchiveHeader {
    pub fn ring_spec(&self) -> Result<RingSpec> {
        let c = &self.config;
        RingSpec::with_options(
            c.n,
            c.j_programmed,
            c.initial_wall_edge,
            c.faulty_sites.iter().copied().collect(),
        )
    }

    pub fn schedule_label(&self) -> String {
        if self.schedule_synthetic {
            format!("{} (synthetic)", self.schedule)
        } else {
            self.schedule.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointRecord {
    pub index: usize,
    pub s: f64,
    pub gamma_over_j: GammaRatio<f64>,
    pub gamma_ghz: f64,
    pub seed: u64,
    pub samples: Vec<SpinConfig>,
    /// Wall count of each sample.
    pub walls: Vec<usize>,
}

impl PointRecord {
    fn check(&self, n: usize) -> Result<()> {
        if self.walls.len() != self.samples.len() {
            return Err(Error::Archive(format!(
                "record {}: {} wall counts for {} samples",
                self.index,
                self.walls.len(),
                self.samples.len()
            )));
        }
        for (cfg, &w) in self.samples.iter().zip(&self.walls) {
            if cfg.len() != n {
                return Err(Error::Archive(format!(
                    "record {}: sample `{cfg}` has length {}, ring has {n}",
                    self.index,
                    cfg.len()
                )));
            }
            if cfg.wall_count() != w {
                return Err(Error::Archive(format!(
                    "record {}: sample `{cfg}` stored with {w} walls",
                    self.index
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleArchive {
    pub header: ArchiveHeader,
    pub records: Vec<PointRecord>,
}

impl SampleArchive {
    /// Strict read: every line must parse and be consistent.
    pub fn read(path: &Path) -> Result<Self> {
        let partial = read_lines(path)?;
        if let Some(err) = partial.error {
            return Err(err);
        }
        let mut lines = partial.lines.into_iter();
        let header = parse_header(&lines.next().ok_or_else(|| Error::Archive(format!("{}: empty archive", path.display())))?)?;
        let mut records = Vec::new();
        for (k, line) in lines.enumerate() {
            let rec: PointRecord = serde_json::from_str(&line)
                .map_err(|e| Error::Archive(format!("{}: line {}: {e}", path.display(), k + 2)))?;
            rec.check(header.config.n)?;
            records.push(rec);
        }
        Ok(SampleArchive { header, records })
    }

    /// Atomic write of the whole archive.
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut lines = vec![serde_json::to_string(&self.header)?];
        for r in &self.records {
            lines.push(serde_json::to_string(r)?);
        }
        write_lines_atomic(path, &lines)
    }
}

pub(crate) fn parse_header(line: &str) -> Result<ArchiveHeader> {
    let header: ArchiveHeader =
        serde_json::from_str(line).map_err(|e| Error::Archive(format!("bad header: {e}")))?;
    if header.format != ARCHIVE_FORMAT {
        return Err(Error::Archive(format!("unknown format `{}`", header.format)));
    }
    if header.version != ARCHIVE_VERSION {
        return Err(Error::Archive(format!("unsupported version {}", header.version)));
    }
    Ok(header)
}

fn is_gzip(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Complete lines read before the first decoding or framing problem.
pub(crate) struct PartialRead {
    pub lines: Vec<String>,
    pub error: Option<Error>,
}

pub(crate) fn read_lines(path: &Path) -> Result<PartialRead> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if is_gzip(path) {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    let mut reader = BufReader::new(reader);
    let mut lines = Vec::new();
    let mut error = None;
    loop {
        let mut buf = String::new();
        match reader.read_line(&mut buf) {
            Ok(0) => break,
            Ok(_) if buf.ends_with('\n') => {
                buf.pop();
                lines.push(buf);
            }
            Ok(_) => {
                error = Some(Error::Archive(format!("{}: truncated final line", path.display())));
                break;
            }
            Err(e) => {
                error = Some(Error::io(path, e));
                break;
            }
        }
    }
    Ok(PartialRead { lines, error })
}

fn encode(path: &Path, line: &str) -> Result<Vec<u8>> {
    let mut text = line.as_bytes().to_vec();
    text.push(b'\n');
    if !is_gzip(path) {
        return Ok(text);
    }
    let mut enc = GzEncoder::new(Vec::new(), Compression::default());
    enc.write_all(&text).map_err(|e| Error::io(path, e))?;
    enc.finish().map_err(|e| Error::io(path, e))
}

fn temp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".tmp");
    path.with_file_name(name)
}

/// Writes bytes to a sibling temp file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let tmp = temp_path(path);
    {
        let mut f = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        f.write_all(bytes).map_err(|e| Error::io(&tmp, e))?;
        f.sync_all().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_lines_atomic(path: &Path, lines: &[String]) -> Result<()> {
    let mut bytes = Vec::new();
    for l in lines {
        bytes.extend(encode(path, l)?);
    }
    write_atomic(path, &bytes)
}

/// Appends whole lines with one write each.
pub(crate) struct Appender {
    path: PathBuf,
    file: File,
}

impl Appender {
    pub fn open(path: &Path) -> Result<Self> {
        let file = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Appender {
            path: path.to_path_buf(),
            file,
        })
    }

    pub fn append(&mut self, line: &str) -> Result<()> {
        let bytes = encode(&self.path, line)?;
        self.file.write_all(&bytes).map_err(|e| Error::io(&self.path, e))?;
        self.file.flush().map_err(|e| Error::io(&self.path, e))
    }
}
