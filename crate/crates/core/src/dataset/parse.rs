use std::fmt;
use std::io::Read;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DatasetError, ItemCatalog, ItemId, Rating, RatingScale, RatingsTable, UserId};

/// On-disk layout of rating and catalog files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DataFormat {
    /// `::`-separated MovieLens 1M layout.
    #[serde(rename = "movielens-dat")]
    MovielensDat,
    /// Comma-separated with a header row.
    #[serde(rename = "csv")]
    Csv,
}

impl FromStr for DataFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "movielens-dat" => Ok(Self::MovielensDat),
            "csv" => Ok(Self::Csv),
            other => Err(format!(
                "unknown data format `{other}` (expected `movielens-dat` or `csv`)"
            )),
        }
    }
}

impl fmt::Display for DataFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::MovielensDat => "movielens-dat",
            Self::Csv => "csv",
        })
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> DatasetError {
    DatasetError::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: FromStr>(line: usize, name: &str, raw: &str) -> Result<T, DatasetError> {
    raw.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {name} `{raw}`")))
}

fn rating_value(line: usize, raw: &str, scale: &RatingScale) -> Result<f64, DatasetError> {
    let value: f64 = field(line, "rating", raw)?;
    if !value.is_finite() || !scale.contains(value) {
        return Err(DatasetError::OutOfScale {
            line,
            value,
            min: scale.min,
            max: scale.max,
        });
    }
    Ok(value)
}

/// Non-empty lines with their 1-based line numbers. A trailing `\r` is dropped.
fn lines(bytes: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    bytes
        .split(|&b| b == b'\n')
        .enumerate()
        .map(|(ix, line)| (ix + 1, line.strip_suffix(b"\r").unwrap_or(line)))
        .filter(|(_, line)| !line.iter().all(u8::is_ascii_whitespace))
}

/// UTF-8 when valid, otherwise Latin-1 (every byte maps to the same code point).
fn decode_text(raw: &[u8]) -> String {
    match std::str::from_utf8(raw) {
        Ok(s) => s.to_owned(),
        Err(_) => raw.iter().map(|&b| char::from(b)).collect(),
    }
}

/// Reads a ratings file. Duplicate (user, item) pairs are rejected with the line
/// number of the second occurrence.
pub fn parse_ratings<R: Read>(
    mut source: R,
    format: DataFormat,
    scale: &RatingScale,
) -> Result<RatingsTable, DatasetError> {
    let mut ratings = Vec::new();
    let mut line_of = Vec::new();
    match format {
        DataFormat::MovielensDat => {
            let mut bytes = Vec::new();
            source.read_to_end(&mut bytes)?;
            for (line, raw) in lines(&bytes) {
                let text = std::str::from_utf8(raw)
                    .map_err(|_| parse_err(line, "ratings line is not valid text"))?;
                let parts: Vec<&str> = text.split("::").collect();
                if parts.len() != 4 {
                    return Err(parse_err(
                        line,
                        format!("expected 4 `::`-separated fields, found {}", parts.len()),
                    ));
                }
                ratings.push(Rating {
                    user: UserId(field(line, "user id", parts[0])?),
                    item: ItemId(field(line, "item id", parts[1])?),
                    value: rating_value(line, parts[2], scale)?,
                    timestamp: Some(field(line, "timestamp", parts[3])?),
                });
                line_of.push(line);
            }
        }
        DataFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_reader(source);
            let headers = reader.headers().map_err(|e| csv_err(e, 1))?.clone();
            let names: Vec<&str> = headers.iter().collect();
            let with_timestamp = match names.as_slice() {
                ["user_id", "item_id", "rating"] => false,
                ["user_id", "item_id", "rating", "timestamp"] => true,
                _ => {
                    return Err(parse_err(
                        1,
                        format!(
                            "expected header `user_id,item_id,rating[,timestamp]`, found `{}`",
                            names.join(",")
                        ),
                    ))
                }
            };
            for record in reader.records() {
                let record = record.map_err(|e| csv_err(e, 0))?;
                let line = record_line(&record);
                let timestamp = match record.get(3) {
                    Some(raw) if with_timestamp && !raw.is_empty() => {
                        Some(field(line, "timestamp", raw)?)
                    }
                    _ => None,
                };
                ratings.push(Rating {
                    user: UserId(field(line, "user id", &record[0])?),
                    item: ItemId(field(line, "item id", &record[1])?),
                    value: rating_value(line, &record[2], scale)?,
                    timestamp,
                });
                line_of.push(line);
            }
        }
    }
    RatingsTable::from_ratings(ratings).map_err(|err| match err {
        DatasetError::DuplicateRating { line, user, item } => DatasetError::DuplicateRating {
            line: line_of[line - 1],
            user,
            item,
        },
        other => other,
    })
}

/// Reads an item catalog with pipe-separated genre lists.
pub fn parse_catalog<R: Read>(
    mut source: R,
    format: DataFormat,
) -> Result<ItemCatalog, DatasetError> {
    let mut catalog = ItemCatalog::new();
    match format {
        DataFormat::MovielensDat => {
            let mut bytes = Vec::new();
            source.read_to_end(&mut bytes)?;
            for (line, raw) in lines(&bytes) {
                let text = decode_text(raw);
                let (id, rest) = text
                    .split_once("::")
                    .ok_or_else(|| parse_err(line, "expected `MovieID::Title::Genres`"))?;
                let (title, genres) = rest
                    .rsplit_once("::")
                    .ok_or_else(|| parse_err(line, "expected `MovieID::Title::Genres`"))?;
                let item = ItemId(field(line, "item id", id)?);
                catalog.insert(line, item, title.to_owned(), split_genres(genres))?;
            }
        }
        DataFormat::Csv => {
            let mut reader = csv::ReaderBuilder::new()
                .trim(csv::Trim::All)
                .from_reader(source);
            let headers = reader.headers().map_err(|e| csv_err(e, 1))?.clone();
            if headers.iter().collect::<Vec<_>>() != ["item_id", "title", "genres"] {
                return Err(parse_err(
                    1,
                    format!(
                        "expected header `item_id,title,genres`, found `{}`",
                        headers.iter().collect::<Vec<_>>().join(",")
                    ),
                ));
            }
            for record in reader.byte_records() {
                let record = record.map_err(|e| csv_err(e, 0))?;
                let line = record.position().map_or(0, |p| p.line() as usize);
                let id = decode_text(&record[0]);
                let item = ItemId(field(line, "item id", &id)?);
                let genres = decode_text(&record[2]);
                catalog.insert(line, item, decode_text(&record[1]), split_genres(&genres))?;
            }
        }
    }
    Ok(catalog)
}

fn split_genres(raw: &str) -> impl Iterator<Item = &str> {
    let raw = raw.trim();
    // newer MovieLens releases spell an empty list this way
    let raw = if raw == "(no genres listed)" { "" } else { raw };
    raw.split('|')
}

fn record_line(record: &csv::StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn csv_err(err: csv::Error, fallback_line: usize) -> DatasetError {
    let line = err.position().map_or(fallback_line, |p| p.line() as usize);
    match err.into_kind() {
        csv::ErrorKind::Io(io) => DatasetError::Io(io),
        csv::ErrorKind::UnequalLengths {
            expected_len, len, ..
        } => parse_err(line, format!("expected {expected_len} fields, found {len}")),
        csv::ErrorKind::Utf8 { .. } => parse_err(line, "field is not valid UTF-8"),
        other => parse_err(line, format!("{other:?}")),
    }
}
