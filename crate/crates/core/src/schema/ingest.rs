use std::collections::BTreeSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use log::warn;

use super::direction::wrap_degrees;
use super::{Dataset, FeatureKind, FeatureSchema, Origin, RowMeta};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const LABEL_COLUMN: &str = "presence";
const BEACH_COLUMN: &str = "beach";
const DATE_COLUMN: &str = "date";
const ORIGIN_COLUMN: &str = "origin";

/// Location-specific columns that are dropped without comment.
pub const LOCATION_COLUMNS: [&str; 10] = [
    "beach_key",
    "latitude",
    "longitude",
    "orientation",
    "embaymentisation",
    "surf_club",
    "slsa",
    "state",
    "length",
    "council_report",
];

#[derive(Debug, Clone, Copy, Default)]
pub struct LoadOptions {
    /// Skip rows with an empty feature or label cell instead of failing.
    pub drop_incomplete_rows: bool,
}

pub fn load_observations<T: Scalar>(
    path: impl AsRef<Path>,
    schema: &FeatureSchema,
    options: LoadOptions,
) -> Result<Dataset<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_observations(file, schema, options)
}

enum Source {
    Column(usize),
    MonthFromDate(usize),
}

pub fn read_observations<T: Scalar, R: Read>(
    reader: R,
    schema: &FeatureSchema,
    options: LoadOptions,
) -> Result<Dataset<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_string()).collect();
    let find = |name: &str| headers.iter().position(|h| h == name);

    let date_col = find(DATE_COLUMN);
    let beach_col = find(BEACH_COLUMN);
    let origin_col = find(ORIGIN_COLUMN);
    let label_col = find(LABEL_COLUMN)
        .ok_or_else(|| Error::Schema(format!("missing label column `{LABEL_COLUMN}`")))?;

    let mut sources = Vec::with_capacity(schema.len());
    for f in schema.features() {
        let src = match (find(&f.name), f.kind, date_col) {
            (Some(c), _, _) => Source::Column(c),
            (None, FeatureKind::Month, Some(d)) => Source::MonthFromDate(d),
            (None, FeatureKind::Month, None) => {
                return Err(Error::Schema(format!(
                    "missing column `{}` (and no `{DATE_COLUMN}` column to derive it from)",
                    f.name
                )))
            }
            (None, _, _) => return Err(Error::Schema(format!("missing column `{}`", f.name))),
        };
        sources.push(src);
    }

    for h in &headers {
        let known = h == LABEL_COLUMN
            || h == BEACH_COLUMN
            || h == DATE_COLUMN
            || h == ORIGIN_COLUMN
            || schema.index_of(h).is_some()
            || LOCATION_COLUMNS.contains(&h.to_ascii_lowercase().as_str());
        if !known {
            warn!("ignoring unrecognised column `{h}`");
        }
    }

    let records: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>()?;

    // categorical levels not declared in the schema are collected from the data
    let mut schema = schema.clone();
    let mut features = schema.features().to_vec();
    for (f, src) in features.iter_mut().zip(&sources) {
        if f.kind == FeatureKind::Categorical && f.levels.is_empty() {
            if let Source::Column(c) = src {
                let levels: BTreeSet<&str> = records
                    .iter()
                    .map(|r| &r[*c])
                    .filter(|v| !v.is_empty())
                    .collect();
                f.levels = levels.into_iter().map(str::to_string).collect();
            }
        }
    }
    schema = FeatureSchema::new(features)?;

    let mut rows = Vec::with_capacity(records.len());
    let mut labels = Vec::with_capacity(records.len());
    let mut meta = Vec::with_capacity(records.len());

    'records: for (i, rec) in records.iter().enumerate() {
        let date = match date_col.map(|c| &rec[c]) {
            Some(s) if !s.is_empty() => Some(parse_date(s).map_err(|m| Error::Parse {
                row: i,
                column: DATE_COLUMN.into(),
                message: m,
            })?),
            _ => None,
        };

        let mut row = Vec::with_capacity(schema.len());
        for (f, src) in schema.features().iter().zip(&sources) {
            let (raw, column) = match src {
                Source::Column(c) => (&rec[*c], f.name.as_str()),
                Source::MonthFromDate(c) => (&rec[*c], DATE_COLUMN),
            };
            if raw.is_empty() {
                if options.drop_incomplete_rows {
                    continue 'records;
                }
                return Err(Error::Parse {
                    row: i,
                    column: column.into(),
                    message: "missing value".into(),
                });
            }
            let parse_err = |message: String| Error::Parse {
                row: i,
                column: column.into(),
                message,
            };
            let v = match (f.kind, src) {
                (FeatureKind::Month, Source::MonthFromDate(_)) => {
                    T::of(date.expect("non-empty date was parsed").month() as f64)
                }
                (FeatureKind::Month, _) => {
                    let m: u32 = raw
                        .parse()
                        .map_err(|_| parse_err(format!("`{raw}` is not a month number")))?;
                    if !(1..=12).contains(&m) {
                        return Err(parse_err(format!("month {m} outside 1..=12")));
                    }
                    T::of(m as f64)
                }
                (FeatureKind::Categorical, _) => {
                    let k = f
                        .levels
                        .iter()
                        .position(|l| l == raw)
                        .ok_or_else(|| parse_err(format!("unknown level `{raw}`")))?;
                    T::of_usize(k)
                }
                (kind, _) => {
                    let x: f64 = raw
                        .parse()
                        .map_err(|_| parse_err(format!("`{raw}` is not numeric")))?;
                    if !x.is_finite() {
                        return Err(parse_err(format!("`{raw}` is not finite")));
                    }
                    let x = T::of(x);
                    if kind == FeatureKind::CircularDegrees {
                        wrap_degrees(x)
                    } else {
                        x
                    }
                }
            };
            row.push(v);
        }

        let raw_label = &rec[label_col];
        if raw_label.is_empty() && options.drop_incomplete_rows {
            continue;
        }
        let label = match raw_label.parse::<f64>() {
            Ok(x) if x == 0.0 => 0,
            Ok(x) if x == 1.0 => 1,
            _ => {
                return Err(Error::Label {
                    row: i,
                    value: raw_label.to_string(),
                })
            }
        };

        let beach = beach_col
            .map(|c| rec[c].to_string())
            .filter(|b| !b.is_empty());
        let origin = match origin_col.map(|c| &rec[c]) {
            Some("synthetic") => Origin::Synthetic,
            Some("real") | Some("") | None => Origin::Real,
            Some(other) => {
                return Err(Error::Parse {
                    row: i,
                    column: ORIGIN_COLUMN.into(),
                    message: format!("`{other}` is neither `real` nor `synthetic`"),
                })
            }
        };
        rows.push(row);
        labels.push(label);
        meta.push(RowMeta {
            beach,
            date,
            origin,
        });
    }

    Dataset::new(schema, rows, labels, meta)
}

fn parse_date(s: &str) -> std::result::Result<NaiveDate, String> {
    // accept a trailing time component such as `2017-02-03T00:00:00`
    let day = s.split(['T', ' ']).next().unwrap_or(s);
    NaiveDate::parse_from_str(day, "%Y-%m-%d")
        .map_err(|e| format!("`{s}` is not an ISO-8601 date: {e}"))
}

/// Writes a dataset in the same delimited format `load_observations` reads,
/// with an `origin` provenance column.
pub fn write_dataset<T: Scalar>(path: impl AsRef<Path>, dataset: &Dataset<T>) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut buf = Vec::new();
    write_dataset_to(&mut buf, dataset)?;
    file.write_all(&buf).map_err(|e| Error::io(path, e))
}

pub(crate) fn write_dataset_to<T: Scalar, W: Write>(writer: W, dataset: &Dataset<T>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let schema = dataset.schema();
    let mut header = vec![DATE_COLUMN.to_string(), BEACH_COLUMN.to_string()];
    header.extend(schema.features().iter().map(|f| f.name.clone()));
    header.push(LABEL_COLUMN.into());
    header.push(ORIGIN_COLUMN.into());
    w.write_record(&header)?;
    for ((row, &label), meta) in dataset
        .rows()
        .iter()
        .zip(dataset.labels())
        .zip(dataset.meta())
    {
        let mut rec = Vec::with_capacity(header.len());
        rec.push(
            meta.date
                .map(|d| d.format("%Y-%m-%d").to_string())
                .unwrap_or_default(),
        );
        rec.push(meta.beach.clone().unwrap_or_default());
        for (f, &v) in schema.features().iter().zip(row) {
            rec.push(match f.kind {
                FeatureKind::Categorical => f.levels[v.f64() as usize].clone(),
                FeatureKind::Month => format!("{}", v.f64() as u32),
                _ => v.to_string(),
            });
        }
        rec.push(label.to_string());
        rec.push(meta.origin.as_str().to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io("<csv writer>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str =
        "date,beach,presence,sst_c,wind_dir_deg,wind_speed_ms,curr_dir_deg,curr_speed_ms";

    fn read(text: &str) -> Result<Dataset<f64>> {
        read_observations(
            text.as_bytes(),
            &FeatureSchema::stinger(),
            LoadOptions::default(),
        )
    }

    #[test]
    fn reads_rows_in_order_and_derives_month() {
        let text = format!(
            "{HEADER},latitude\n2017-02-03,Coogee,1,22.5,370,5.1,90,0.2,-33.9\n2017-07-01,Coogee,0,17.0,180,3.0,270,0.1,-33.9\n"
        );
        let d = read(&text).unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d.labels(), &[1, 0]);
        assert_eq!(d.rows()[0][1], 10.0, "circular values wrap modulo 360");
        assert_eq!(d.rows()[0][5], 2.0);
        assert_eq!(d.rows()[1][5], 7.0);
        assert_eq!(d.meta()[0].beach.as_deref(), Some("Coogee"));
    }

    #[test]
    fn empty_file_gives_empty_dataset() {
        let d = read(&format!("{HEADER}\n")).unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn missing_column_is_schema_error() {
        let text = "date,beach,presence,sst_c,wind_speed_ms,curr_dir_deg,curr_speed_ms\n";
        match read(text) {
            Err(Error::Schema(m)) => assert!(m.contains("wind_dir_deg")),
            other => panic!("expected schema error, got {other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell_reports_row() {
        let text = format!("{HEADER}\n2017-02-03,Coogee,1,22.5,10,5.1,90,0.2\n2017-02-04,Coogee,1,warm,10,5.1,90,0.2\n");
        match read(&text) {
            Err(Error::Parse { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "sst_c");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_label_rejected() {
        let text = format!("{HEADER}\n2017-02-03,Coogee,2,22.5,10,5.1,90,0.2\n");
        assert!(matches!(read(&text), Err(Error::Label { row: 0, .. })));
    }

    #[test]
    fn missing_cells_rejected_unless_dropping() {
        let text = format!(
            "{HEADER}\n2017-02-03,Coogee,1,,10,5.1,90,0.2\n2017-02-04,Coogee,0,20,10,5.1,90,0.2\n"
        );
        assert!(matches!(read(&text), Err(Error::Parse { row: 0, .. })));
        let d: Dataset<f64> = read_observations(
            text.as_bytes(),
            &FeatureSchema::stinger(),
            LoadOptions {
                drop_incomplete_rows: true,
            },
        )
        .unwrap();
        assert_eq!(d.len(), 1);
    }

    #[test]
    fn class_counts_of_a_beach_sized_file() {
        let mut text = format!("{HEADER}\n");
        for i in 0..1483 {
            let label = u8::from(i < 126);
            text.push_str(&format!(
                "2018-01-0{},Maroubra,{label},21.0,161.5,5.7,95.3,0.215\n",
                1 + i % 9
            ));
        }
        let d = read(&text).unwrap();
        assert_eq!(d.count_label(1), 126);
        assert_eq!(d.count_label(0), 1357);
    }

    #[test]
    fn write_then_read_preserves_table() {
        let text = format!("{HEADER}\n2017-02-03,Coogee,1,22.5,10,5.1,90,0.2\n2019-11-30,Clovelly,0,19.25,359.5,0.5,0,0.01\n");
        let d = read(&text).unwrap();
        let mut buf = Vec::new();
        write_dataset_to(&mut buf, &d).unwrap();
        let back: Dataset<f64> = read_observations(
            buf.as_slice(),
            &FeatureSchema::stinger(),
            LoadOptions::default(),
        )
        .unwrap();
        assert_eq!(back, d);
    }
}
