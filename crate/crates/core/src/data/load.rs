//! CSV ingestion of smart-meter readings into daily episodes.
//!
//! Input format: header `timestamp,house_id,p_res_kw,p_ev_kw,p_pv_kw`,
//! ISO-8601 local timestamps at a strict 15-minute cadence, decimal point
//! `.`, UTF-8. Rows are grouped by (house_id, date); any day without all
//! 96 slots, or with a missing or invalid reading, is dropped and counted.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::{NaiveDate, NaiveDateTime, Timelike};

use super::{DailyEpisode, DataError, SlotSeries};
use crate::SLOTS_PER_DAY;

/// Expected CSV column names, in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub columns: [String; 5],
}

impl Default for CsvSchema {
    fn default() -> Self {
        Self {
            columns: [
                "timestamp".into(),
                "house_id".into(),
                "p_res_kw".into(),
                "p_ev_kw".into(),
                "p_pv_kw".into(),
            ],
        }
    }
}

/// Result of an ingest pass: surviving episodes plus the dropped-day count.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadOutcome {
    pub episodes: Vec<DailyEpisode>,
    /// Days discarded for being incomplete or containing missing/invalid
    /// readings.
    pub dropped_days: usize,
}

struct DayAccum {
    slots: Vec<Option<(f64, f64, f64)>>,
    /// Missing reading, invalid (negative / non-finite) value or duplicate
    /// slot anywhere in the day.
    invalid: bool,
}

impl DayAccum {
    fn new() -> Self {
        Self {
            slots: vec![None; SLOTS_PER_DAY],
            invalid: false,
        }
    }
}

/// Loads and groups episodes from a CSV file.
///
/// Malformed headers and unparsable rows are hard errors; incomplete days
/// and days with missing values are silently dropped and counted in the
/// returned [`LoadOutcome`].
pub fn load_episodes(path: &Path, schema: &CsvSchema) -> Result<LoadOutcome, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_path(path)
        .map_err(|e| DataError::Io(e.to_string()))?;

    let headers = reader.headers().map_err(|e| DataError::Io(e.to_string()))?;
    for (position, expected) in schema.columns.iter().enumerate() {
        if headers.get(position) != Some(expected.as_str()) {
            return Err(DataError::SchemaMismatch {
                expected: expected.clone(),
                position,
            });
        }
    }

    let mut days: BTreeMap<(String, NaiveDate), DayAccum> = BTreeMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| DataError::Io(e.to_string()))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or_default();
        if record.len() != schema.columns.len() {
            return Err(DataError::MalformedRow {
                line,
                message: format!("expected {} fields, got {}", schema.columns.len(), record.len()),
            });
        }

        let (date, slot) = parse_slot(record.get(0).unwrap_or_default(), line)?;
        let house_id = record.get(1).unwrap_or_default().trim();
        if house_id.is_empty() {
            return Err(DataError::MalformedRow {
                line,
                message: "empty house_id".into(),
            });
        }

        let day = days
            .entry((house_id.to_string(), date))
            .or_insert_with(DayAccum::new);
        if day.slots[slot].is_some() {
            day.invalid = true; // duplicate reading for this slot
            continue;
        }

        let mut powers = [0.0f64; 3];
        let mut missing = false;
        for (i, power) in powers.iter_mut().enumerate() {
            let field = record.get(2 + i).unwrap_or_default().trim();
            if field.is_empty() {
                missing = true;
                continue;
            }
            let value: f64 = field.parse().map_err(|_| DataError::MalformedRow {
                line,
                message: format!("cannot parse '{field}' as a power reading"),
            })?;
            if !value.is_finite() || value < 0.0 {
                missing = true;
            } else {
                *power = value;
            }
        }
        if missing {
            day.invalid = true;
        } else {
            day.slots[slot] = Some((powers[0], powers[1], powers[2]));
        }
    }

    let mut episodes = Vec::new();
    let mut dropped_days = 0usize;
    for ((house_id, date), day) in days {
        if day.invalid || day.slots.iter().any(Option::is_none) {
            dropped_days += 1;
            continue;
        }
        let take = |pick: fn(&(f64, f64, f64)) -> f64| {
            SlotSeries::new(day.slots.iter().map(|s| pick(s.as_ref().unwrap())).collect())
                .expect("per-row validation keeps values finite and non-negative")
        };
        episodes.push(DailyEpisode::new(
            house_id,
            date,
            take(|v| v.0),
            take(|v| v.1),
            take(|v| v.2),
        ));
    }
    Ok(LoadOutcome {
        episodes,
        dropped_days,
    })
}

fn parse_slot(raw: &str, line: u64) -> Result<(NaiveDate, usize), DataError> {
    let raw = raw.trim();
    let ts = NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S")
        .or_else(|_| NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S"))
        .map_err(|_| DataError::MalformedRow {
            line,
            message: format!("cannot parse timestamp '{raw}'"),
        })?;
    if ts.second() != 0 || ts.minute() % 15 != 0 {
        return Err(DataError::MalformedRow {
            line,
            message: format!("timestamp '{raw}' is off the 15-minute cadence"),
        });
    }
    let slot = (ts.hour() * 4 + ts.minute() / 15) as usize;
    Ok((ts.date(), slot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_csv(rows: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "timestamp,house_id,p_res_kw,p_ev_kw,p_pv_kw").unwrap();
        for row in rows {
            writeln!(f, "{row}").unwrap();
        }
        f
    }

    fn day_rows(house: &str, date: &str, slots: usize) -> Vec<String> {
        (0..slots)
            .map(|s| {
                format!(
                    "{date}T{:02}:{:02}:00,{house},0.5,3.3,1.0",
                    s / 4,
                    (s % 4) * 15
                )
            })
            .collect()
    }

    #[test]
    fn one_complete_day() {
        let f = write_csv(&day_rows("h1", "2018-05-01", 96));
        let out = load_episodes(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(out.episodes.len(), 1);
        assert_eq!(out.dropped_days, 0);
        let ep = &out.episodes[0];
        assert_eq!(ep.house_id, "h1");
        assert_eq!(ep.ev_sum(), 96.0 * 3.3);
        assert_eq!(ep.p_res[0], 0.5);
    }

    #[test]
    fn incomplete_day_is_dropped_and_counted() {
        let f = write_csv(&day_rows("h1", "2018-05-01", 95));
        let out = load_episodes(f.path(), &CsvSchema::default()).unwrap();
        assert!(out.episodes.is_empty());
        assert_eq!(out.dropped_days, 1);
    }

    #[test]
    fn groups_by_house_and_date() {
        let mut rows = Vec::new();
        for house in ["h1", "h2"] {
            for date in ["2018-05-01", "2018-05-02", "2018-05-03"] {
                rows.extend(day_rows(house, date, 96));
            }
        }
        let f = write_csv(&rows);
        let out = load_episodes(f.path(), &CsvSchema::default()).unwrap();
        assert_eq!(out.episodes.len(), 6);
        let h1 = out.episodes.iter().filter(|e| e.house_id == "h1").count();
        assert_eq!(h1, 3);
    }

    #[test]
    fn missing_field_drops_the_day() {
        let mut rows = day_rows("h1", "2018-05-01", 96);
        rows[40] = "2018-05-01T10:00:00,h1,0.5,,1.0".into();
        let f = write_csv(&rows);
        let out = load_episodes(f.path(), &CsvSchema::default()).unwrap();
        assert!(out.episodes.is_empty());
        assert_eq!(out.dropped_days, 1);
    }

    #[test]
    fn bad_header_is_a_schema_error() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "time,house_id,p_res_kw,p_ev_kw,p_pv_kw").unwrap();
        let err = load_episodes(f.path(), &CsvSchema::default()).unwrap_err();
        assert!(matches!(err, DataError::SchemaMismatch { position: 0, .. }));
    }

    #[test]
    fn unparsable_row_reports_its_line() {
        let mut rows = day_rows("h1", "2018-05-01", 96);
        rows[2] = "2018-05-01T00:30:00,h1,0.5,not-a-number,1.0".into();
        let f = write_csv(&rows);
        let err = load_episodes(f.path(), &CsvSchema::default()).unwrap_err();
        match err {
            DataError::MalformedRow { line, .. } => assert_eq!(line, 4),
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn off_cadence_timestamp_is_rejected() {
        let rows = vec!["2018-05-01T00:07:00,h1,0.5,3.3,1.0".to_string()];
        let f = write_csv(&rows);
        assert!(matches!(
            load_episodes(f.path(), &CsvSchema::default()).unwrap_err(),
            DataError::MalformedRow { .. }
        ));
    }
}
