use std::fs;
use std::io::Write;
use std::path::Path;

use crate::data::dataset::{Group, LabeledDataset};
use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, FeatureMatrix};

/// Column roles for a feature CSV. Every column not named here is a feature.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureSchema {
    pub label_col: String,
    pub group_col: Option<String>,
    pub id_col: Option<String>,
    /// Tags rows whose label equals this value as p1 when there is no group column.
    pub p1_label: Option<usize>,
}

impl FeatureSchema {
    /// Parses `key = value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut schema = FeatureSchema::default();
        let mut label = None;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                location: format!("schema line {}", lineno + 1),
                message: "expected key = value".into(),
            })?;
            let value = value.trim().to_string();
            match key.trim() {
                "label_col" => label = Some(value),
                "group_col" => schema.group_col = Some(value),
                "id_col" => schema.id_col = Some(value),
                "p1_label" => {
                    schema.p1_label = Some(value.parse().map_err(|_| Error::Parse {
                        location: format!("schema line {}", lineno + 1),
                        message: format!("p1_label must be a non-negative integer, got `{value}`"),
                    })?)
                }
                other => {
                    return Err(Error::Parse {
                        location: format!("schema line {}", lineno + 1),
                        message: format!("unknown key `{other}`"),
                    })
                }
            }
        }
        schema.label_col = label.ok_or_else(|| Error::MissingColumn("label_col (schema key)".into()))?;
        if schema.group_col.is_none() && schema.p1_label.is_none() {
            return Err(Error::Config("schema needs group_col or p1_label".into()));
        }
        Ok(schema)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("label_col = {}\n", self.label_col);
        if let Some(g) = &self.group_col {
            out += &format!("group_col = {g}\n");
        }
        if let Some(i) = &self.id_col {
            out += &format!("id_col = {i}\n");
        }
        if let Some(l) = self.p1_label {
            out += &format!("p1_label = {l}\n");
        }
        out
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn parse_f64(cell: &str, location: impl FnOnce() -> String) -> Result<f64> {
    let t = cell.trim();
    // Rust's float parser accepts only '.' as decimal separator.
    t.parse::<f64>().map_err(|_| Error::Parse {
        location: location(),
        message: format!("`{t}` is not a number"),
    })
}

/// Reads a headed CSV into a dense dataset.
pub fn load_features_csv(path: &Path, schema: &FeatureSchema) -> Result<LabeledDataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_error(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let find = |name: &str| -> Result<usize> {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    };
    let label_idx = find(&schema.label_col)?;
    let group_idx = schema.group_col.as_deref().map(find).transpose()?;
    let id_idx = schema.id_col.as_deref().map(find).transpose()?;
    let feature_idx: Vec<usize> = (0..header.len())
        .filter(|&i| i != label_idx && Some(i) != group_idx && Some(i) != id_idx)
        .collect();
    if feature_idx.is_empty() {
        return Err(Error::invalid("no feature columns"));
    }

    let (mut data, mut labels, mut groups, mut ids) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (r, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_error(path, e))?;
        let line = r + 2;
        let loc = |col: &str| format!("{}:{line} column `{col}`", path.display());
        if record.len() != header.len() {
            return Err(Error::Parse {
                location: format!("{}:{line}", path.display()),
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let id = match id_idx {
            Some(i) => record[i].trim().to_string(),
            None => r.to_string(),
        };
        for &j in &feature_idx {
            data.push(parse_f64(&record[j], || loc(&header[j]))?);
        }
        let label: usize = record[label_idx].trim().parse().map_err(|_| Error::Parse {
            location: loc(&schema.label_col),
            message: format!("`{}` is not a non-negative integer label", record[label_idx].trim()),
        })?;
        let group = match group_idx {
            Some(g) => record[g].parse::<Group>().map_err(|_| Error::UnknownGroup {
                tag: record[g].trim().to_string(),
                row: id.clone(),
            })?,
            None if schema.p1_label == Some(label) => Group::P1,
            None => Group::P2,
        };
        labels.push(label);
        groups.push(group);
        ids.push(id);
    }
    let n = labels.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let x = DenseMatrix::new(n, feature_idx.len(), data)?;
    let names = feature_idx.iter().map(|&j| header[j].clone()).collect();
    match LabeledDataset::new(FeatureMatrix::Dense(x), labels, groups, ids.clone(), None) {
        Err(Error::NonFiniteFeature { row, col }) => Err(Error::Parse {
            location: format!("{} row id `{}` column `{}`", path.display(), ids[row], header[feature_idx[col]]),
            message: "non-finite feature value".into(),
        }),
        other => other?.with_feature_names(names),
    }
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.kind() {
        csv::ErrorKind::Io(_) => match e.into_kind() {
            csv::ErrorKind::Io(err) => Error::io(path, err),
            _ => unreachable!(),
        },
        _ => Error::Parse {
            location: path.display().to_string(),
            message: e.to_string(),
        },
    }
}

/// Writes `id,<features...>,label,group` and the matching schema text.
pub fn write_features_csv(dataset: &LabeledDataset, path: &Path) -> Result<FeatureSchema> {
    let mut out = String::new();
    out.push_str("id");
    for name in dataset.feature_names() {
        out.push(',');
        out.push_str(name);
    }
    out.push_str(",label,group\n");
    let cols = dataset.features().cols();
    for i in 0..dataset.len() {
        out.push_str(&dataset.row_ids()[i]);
        for v in dataset.features().row(i).to_dense(cols) {
            out.push(',');
            out.push_str(&format_f64(v));
        }
        out.push_str(&format!(",{},{}\n", dataset.labels()[i], dataset.groups()[i]));
    }
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))?;
    Ok(FeatureSchema {
        label_col: "label".into(),
        group_col: Some("group".into()),
        id_col: Some("id".into()),
        p1_label: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng as _;

    fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn fixture_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x.csv", "id,a,b,y,g\nr0,1.5,2,0,p1\nr1,-3e2,0.25,1,P2\nr2,0,1,0,p2\n");
        let schema = FeatureSchema::parse("label_col = y\ngroup_col = g\nid_col = id # row ids\n").unwrap();
        let d = load_features_csv(&p, &schema).unwrap();
        assert_eq!((d.len(), d.features().cols()), (3, 2));
        assert_eq!(d.labels(), &[0, 1, 0]);
        assert_eq!(d.groups(), &[Group::P1, Group::P2, Group::P2]);
        assert_eq!(d.feature_names(), &["a".to_string(), "b".to_string()]);
        assert_eq!(d.features().row(1).to_dense(2), vec![-300.0, 0.25]);
    }

    #[test]
    fn missing_group_column_is_named() {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "x.csv", "a,y\n1,0\n");
        let schema = FeatureSchema::parse("label_col = y\ngroup_col = tag\n").unwrap();
        match load_features_csv(&p, &schema) {
            Err(Error::MissingColumn(c)) => assert_eq!(c, "tag"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_cells() {
        let dir = tempfile::tempdir().unwrap();
        let schema = FeatureSchema::parse("label_col = y\ngroup_col = g\n").unwrap();
        let p = write(dir.path(), "a.csv", "a,y,g\n1,5,0\n2,0,p1\n");
        assert!(matches!(load_features_csv(&p, &schema), Err(Error::UnknownGroup { .. })));
        let p = write(dir.path(), "b.csv", "a,y,g\n1,0,p1\n1,5,p2\n2,0,p1\n");
        assert!(load_features_csv(&p, &schema).is_ok());
        let p = write(dir.path(), "c.csv", "a,y,g\n1;5,0,p1\n");
        assert!(matches!(load_features_csv(&p, &schema), Err(Error::Parse { .. })));
        let p = write(dir.path(), "d.csv", "a,y\n1,0\n2,1\n");
        let s = FeatureSchema::parse("label_col = y\np1_label = 0\n").unwrap();
        let d = load_features_csv(&p, &s).unwrap();
        assert_eq!(d.groups(), &[Group::P1, Group::P2]);
        assert!(FeatureSchema::parse("label_col = y\n").is_err());
        assert!(FeatureSchema::parse("label = y\n").is_err());
        assert!(load_features_csv(&dir.path().join("nope.csv"), &schema).is_err());
    }

    #[test]
    fn write_read_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let mut rng = rng_from_seed(5);
        let rows: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                (0..4)
                    .map(|_| {
                        let m: f64 = rng.random_range(-1.0..1.0);
                        m * 10f64.powi(rng.random_range(-300..300))
                    })
                    .collect()
            })
            .collect();
        let d = LabeledDataset::new(
            FeatureMatrix::Dense(DenseMatrix::from_rows(&rows).unwrap()),
            (0..50).map(|i| i % 3).collect(),
            (0..50).map(|i| if i % 2 == 0 { Group::P1 } else { Group::P2 }).collect(),
            (0..50).map(|i| format!("row{i}")).collect(),
            None,
        )
        .unwrap();
        let p = dir.path().join("rt.csv");
        let schema = write_features_csv(&d, &p).unwrap();
        let back = load_features_csv(&p, &FeatureSchema::parse(&schema.to_text()).unwrap()).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn float_format() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(f64::NAN), "nan");
        assert_eq!(format_f64(f64::NEG_INFINITY), "-inf");
        assert_eq!(format_f64(0.1).parse::<f64>().unwrap(), 0.1);
    }
}
