//! JSON files holding a single realization: `{"n": .., "k": .., "coords": [[..], ..]}`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::edm::{EdmError, Realization};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RealizationFile {
    n: usize,
    k: usize,
    coords: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RealizationFileError {
    #[error("malformed realization JSON: {0}")]
    Json(String),
    #[error("`n` is {declared} but `coords` has {found} rows")]
    RowCount { declared: usize, found: usize },
    #[error("coords row {row} has {found} entries, expected k = {expected}")]
    RowLength {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error(transparent)]
    Coordinates(#[from] EdmError),
}

pub fn write_realization_json(x: &Realization) -> String {
    let file = RealizationFile {
        n: x.n(),
        k: x.dim(),
        coords: x.to_rows(),
    };
    let mut text = serde_json::to_string_pretty(&file).expect("plain data serializes");
    text.push('\n');
    text
}

pub fn read_realization_json(text: &str) -> Result<Realization, RealizationFileError> {
    let file: RealizationFile =
        serde_json::from_str(text).map_err(|e| RealizationFileError::Json(e.to_string()))?;
    if file.coords.len() != file.n {
        return Err(RealizationFileError::RowCount {
            declared: file.n,
            found: file.coords.len(),
        });
    }
    if let Some((row, r)) = file
        .coords
        .iter()
        .enumerate()
        .find(|(_, r)| r.len() != file.k)
    {
        return Err(RealizationFileError::RowLength {
            row,
            expected: file.k,
            found: r.len(),
        });
    }
    Ok(Realization::from_flat(file.k, file.coords.concat())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let x = Realization::from_rows(vec![vec![0.1, -2.0], vec![1e-300, 3.5]]).unwrap();
        let text = write_realization_json(&x);
        assert_eq!(read_realization_json(&text).unwrap(), x);
    }

    #[test]
    fn rejects_inconsistent_files() {
        assert!(matches!(
            read_realization_json(r#"{"n":2,"k":1,"coords":[[1]]}"#),
            Err(RealizationFileError::RowCount {
                declared: 2,
                found: 1
            })
        ));
        assert!(matches!(
            read_realization_json(r#"{"n":1,"k":2,"coords":[[1]]}"#),
            Err(RealizationFileError::RowLength { row: 0, .. })
        ));
        assert!(matches!(
            read_realization_json(r#"{"n":1,"k":2,"coords":[[1,2]],"x":0}"#),
            Err(RealizationFileError::Json(_))
        ));
        assert!(matches!(
            read_realization_json("[1"),
            Err(RealizationFileError::Json(_))
        ));
    }
}
