use std::fs::File;
use std::io::{BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use super::{Interaction, InteractionLog};
use crate::error::{Error, Result};

/// A column selected by zero-based position or by header name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Column {
    Index(usize),
    Name(String),
}

impl std::str::FromStr for Column {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => Column::Index(i),
            Err(_) => Column::Name(s.to_owned()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MalformedPolicy {
    Fail,
    Skip,
}

#[derive(Debug, Clone)]
pub struct LoadOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub user: Column,
    pub item: Column,
    pub timestamp: Column,
    pub malformed: MalformedPolicy,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            delimiter: b'\t',
            has_header: false,
            user: Column::Index(0),
            item: Column::Index(1),
            timestamp: Column::Index(2),
            malformed: MalformedPolicy::Fail,
        }
    }
}

/// Loads a delimited interaction file. Gzip input is detected by its magic
/// bytes and decompressed transparently.
pub fn load_interactions(path: impl AsRef<Path>, opts: &LoadOptions) -> Result<InteractionLog> {
    let path = path.as_ref();
    let mut file = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    let mut magic = [0u8; 2];
    let n = read_prefix(&mut file, &mut magic).map_err(|e| Error::io(path, e))?;
    let head = std::io::Cursor::new(magic[..n].to_vec());
    let reader: Box<dyn Read> = if n == 2 && magic == [0x1f, 0x8b] {
        Box::new(MultiGzDecoder::new(head.chain(file)))
    } else {
        Box::new(head.chain(file))
    };
    read_interactions(reader, opts)
}

fn read_prefix(r: &mut impl Read, buf: &mut [u8]) -> std::io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..])? {
            0 => break,
            k => filled += k,
        }
    }
    Ok(filled)
}

pub fn read_interactions(reader: impl Read, opts: &LoadOptions) -> Result<InteractionLog> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(opts.delimiter)
        .has_headers(opts.has_header)
        .flexible(true)
        .quoting(opts.delimiter == b',')
        .from_reader(reader);

    let (user_col, item_col, time_col) = if opts.has_header {
        let headers = rdr
            .headers()
            .map_err(|e| Error::Malformed {
                line: 1,
                reason: e.to_string(),
            })?
            .clone();
        (
            resolve(&opts.user, &headers)?,
            resolve(&opts.item, &headers)?,
            resolve(&opts.timestamp, &headers)?,
        )
    } else {
        (
            positional(&opts.user)?,
            positional(&opts.item)?,
            positional(&opts.timestamp)?,
        )
    };

    let mut log = InteractionLog::default();
    let mut record = csv::StringRecord::new();
    loop {
        let line = rdr.position().line();
        let parsed = match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {
                let line = record.position().map_or(line, |p| p.line());
                parse_record(&record, user_col, item_col, time_col).map_err(|reason| Error::Malformed { line, reason })
            }
            Err(e) => Err(Error::Malformed {
                line: e.position().map_or(line, |p| p.line()),
                reason: e.to_string(),
            }),
        };
        match parsed {
            Ok(interaction) => log.interactions.push(interaction),
            Err(err) => match opts.malformed {
                MalformedPolicy::Fail => return Err(err),
                MalformedPolicy::Skip => {
                    log::debug!("skipping {err}");
                    log.skipped += 1;
                }
            },
        }
    }
    Ok(log)
}

fn parse_record(
    record: &csv::StringRecord,
    user: usize,
    item: usize,
    time: usize,
) -> std::result::Result<Interaction, String> {
    let field = |i: usize, what: &str| -> std::result::Result<&str, String> {
        let v = record
            .get(i)
            .ok_or_else(|| format!("missing {what} column {i} (found {} fields)", record.len()))?
            .trim();
        if v.is_empty() {
            return Err(format!("empty {what}"));
        }
        Ok(v)
    };
    if record.len() == 1 && record.get(0).is_some_and(|f| f.trim().is_empty()) {
        return Err("blank line".to_owned());
    }
    let user = field(user, "user")?;
    let item = field(item, "item")?;
    let ts = field(time, "timestamp")?;
    let timestamp = ts.parse::<i64>().map_err(|e| format!("timestamp `{ts}`: {e}"))?;
    Ok(Interaction::new(user, item, timestamp))
}

fn resolve(col: &Column, headers: &csv::StringRecord) -> Result<usize> {
    match col {
        Column::Index(i) => Ok(*i),
        Column::Name(name) => headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| Error::InvalidArgument(format!("no column named `{name}` in header"))),
    }
}

fn positional(col: &Column) -> Result<usize> {
    match col {
        Column::Index(i) => Ok(*i),
        Column::Name(name) => Err(Error::InvalidArgument(format!(
            "column `{name}` selected by name but the input has no header"
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(text: &str, opts: &LoadOptions) -> Result<InteractionLog> {
        read_interactions(text.as_bytes(), opts)
    }

    #[test]
    fn parses_well_formed_lines_in_order() {
        let log = read("u1\ta\t10\nu1\tb\t5\nu2\ta\t7\n", &LoadOptions::default()).unwrap();
        assert_eq!(log.len(), 3);
        assert_eq!(log.interactions[1], Interaction::new("u1", "b", 5));
        assert_eq!(log.skipped, 0);
    }

    #[test]
    fn empty_input_gives_empty_log() {
        let log = read("", &LoadOptions::default()).unwrap();
        assert!(log.is_empty());
        assert_eq!(log.skipped, 0);
    }

    #[test]
    fn malformed_line_fails_with_line_number() {
        let err = read("u1\ta\t1\nu2\tb\tnope\nu3\tc\t3\n", &LoadOptions::default()).unwrap_err();
        match err {
            Error::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_skipped_and_counted() {
        let opts = LoadOptions {
            malformed: MalformedPolicy::Skip,
            ..LoadOptions::default()
        };
        let log = read("u1\ta\t1\nu2\tb\n\u{0}\nu3\tc\t3\n", &opts).unwrap();
        assert_eq!(log.len(), 2);
        assert_eq!(log.skipped, 2);
    }

    #[test]
    fn named_columns_with_header_and_commas() {
        let opts = LoadOptions {
            delimiter: b',',
            has_header: true,
            user: "who".parse().unwrap(),
            item: "what".parse().unwrap(),
            timestamp: "when".parse().unwrap(),
            malformed: MalformedPolicy::Fail,
        };
        let log = read("when,what,rating,who\n100,i9,5,u3\n", &opts).unwrap();
        assert_eq!(log.interactions, vec![Interaction::new("u3", "i9", 100)]);
    }

    #[test]
    fn unknown_header_name_is_rejected() {
        let opts = LoadOptions {
            has_header: true,
            user: Column::Name("missing".into()),
            ..LoadOptions::default()
        };
        assert!(matches!(read("a\tb\tc\n", &opts), Err(Error::InvalidArgument(_))));
    }
}
