//! Reading raw rating files: comma- or tab-separated text and the `::`
//! separated MovieLens `ratings.dat` layout.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use jova_core::data::RawRating;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Tsv,
    /// `user::item::rating::timestamp`
    MovielensDat,
}

/// A column picked by zero-based position or, with a header, by name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Column {
    Index(usize),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schema {
    pub has_header: bool,
    pub user: Column,
    pub item: Column,
    /// `None` treats every row as an implicit interaction with value 1.
    pub rating: Option<Column>,
    /// Overrides the format's delimiter (csv and tsv only).
    pub delimiter: Option<char>,
}

impl Default for Schema {
    fn default() -> Self {
        Self {
            has_header: false,
            user: Column::Index(0),
            item: Column::Index(1),
            rating: Some(Column::Index(2)),
            delimiter: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestReport {
    pub ratings: Vec<RawRating>,
    /// Non-empty data lines seen, header excluded.
    pub total_lines: usize,
    /// 1-based line numbers of skipped lines.
    pub malformed_lines: Vec<u64>,
}

struct Positions {
    user: usize,
    item: usize,
    rating: Option<usize>,
}

impl Positions {
    fn resolve(path: &Path, schema: &Schema, header: Option<&[String]>) -> Result<Self> {
        let find = |c: &Column| -> Result<usize> {
            match c {
                Column::Index(i) => Ok(*i),
                Column::Name(name) => header
                    .ok_or_else(|| Error::format(path, format!("column {name:?} named but the schema has no header")))?
                    .iter()
                    .position(|h| h.trim() == name)
                    .ok_or_else(|| Error::format(path, format!("no column named {name:?} in the header"))),
            }
        };
        Ok(Self {
            user: find(&schema.user)?,
            item: find(&schema.item)?,
            rating: schema.rating.as_ref().map(find).transpose()?,
        })
    }

    fn parse<'a>(&self, field: impl Fn(usize) -> Option<&'a str>) -> Option<RawRating> {
        let user = field(self.user)?.trim();
        let item = field(self.item)?.trim();
        if user.is_empty() || item.is_empty() {
            return None;
        }
        let value = match self.rating {
            Some(r) => field(r)?.trim().parse::<f64>().ok().filter(|v| v.is_finite())?,
            None => 1.0,
        };
        Some(RawRating {
            user: user.to_string(),
            item: item.to_string(),
            value,
        })
    }
}

pub fn ingest(path: &Path, format: Format, schema: &Schema, max_malformed_fraction: f64) -> Result<IngestReport> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let report = match format {
        Format::MovielensDat => read_dat(path, BufReader::new(file), schema)?,
        Format::Csv | Format::Tsv => {
            let default = if format == Format::Csv { ',' } else { '\t' };
            read_delimited(path, file, schema, schema.delimiter.unwrap_or(default))?
        }
    };
    let malformed = report.malformed_lines.len();
    if malformed as f64 > max_malformed_fraction * report.total_lines as f64 {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            malformed,
            total: report.total_lines,
            limit_percent: max_malformed_fraction * 100.0,
            lines: report.malformed_lines.iter().take(10).copied().collect(),
        });
    }
    Ok(report)
}

fn read_dat(path: &Path, reader: impl BufRead, schema: &Schema) -> Result<IngestReport> {
    let mut lines = reader.split(b'\n').enumerate();
    let header = if schema.has_header {
        lines
            .next()
            .map(|(_, l)| l.map_err(|e| Error::io(path, e)))
            .transpose()?
            .map(|l| String::from_utf8_lossy(&l).split("::").map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    let positions = Positions::resolve(path, schema, header.as_deref())?;
    let mut report = IngestReport {
        ratings: Vec::new(),
        total_lines: 0,
        malformed_lines: Vec::new(),
    };
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io(path, e))?;
        let text = String::from_utf8_lossy(&line);
        let text = text.trim_end_matches('\r');
        if text.trim().is_empty() {
            continue;
        }
        report.total_lines += 1;
        let fields: Vec<&str> = text.split("::").collect();
        match positions.parse(|i| fields.get(i).copied()) {
            Some(r) => report.ratings.push(r),
            None => report.malformed_lines.push(n as u64 + 1),
        }
    }
    Ok(report)
}

fn read_delimited(path: &Path, file: File, schema: &Schema, delimiter: char) -> Result<IngestReport> {
    if !delimiter.is_ascii() {
        return Err(Error::format(path, format!("delimiter {delimiter:?} is not ASCII")));
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(schema.has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let header = if schema.has_header {
        let h = reader
            .headers()
            .map_err(|e| Error::format(path, format!("unreadable header: {e}")))?;
        Some(h.iter().map(str::to_string).collect::<Vec<_>>())
    } else {
        None
    };
    let positions = Positions::resolve(path, schema, header.as_deref())?;
    let mut report = IngestReport {
        ratings: Vec::new(),
        total_lines: 0,
        malformed_lines: Vec::new(),
    };
    let mut record = csv::StringRecord::new();
    loop {
        let line = reader.position().line();
        match reader.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                if record.iter().all(str::is_empty) {
                    continue;
                }
                report.total_lines += 1;
                let line = record.position().map_or(line, |p| p.line());
                match positions.parse(|i| record.get(i)) {
                    Some(r) => report.ratings.push(r),
                    None => report.malformed_lines.push(line),
                }
            }
            Err(e) => {
                if e.is_io_error() {
                    return Err(Error::format(path, e.to_string()));
                }
                report.total_lines += 1;
                let line = e.position().map_or(line, |p| p.line());
                report.malformed_lines.push(line);
            }
        }
    }
    Ok(report)
}
