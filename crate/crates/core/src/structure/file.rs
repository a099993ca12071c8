//! JSON design files.
//!
//! ```json
//! {
//!   "n": 3, "m": 2, "l": 1,
//!   "M": [[1, 0], [-1, 1], [0, -1]],
//!   "H": [[0, 0], [1, 0], [0, 1]],
//!   "G": [[1, 0, 0], [0, 1, 0]],
//!   "P": [[0], [1], [0]], "Q": [[0], [0], [1]], "R": [[1, 0, 0]],
//!   "pattern_hg": [0, 1, 2], "pattern_e": [0, 1, 1], "pattern_f": [0, 0, 1],
//!   "sigma": [1, 1], "lip": [1]
//! }
//! ```
//!
//! `laplacian`, `U` and `K` are optional, as are the patterns (the evenly
//! spread defaults are used when absent) and the constants. A matrix with a
//! zero dimension may be written as `[]`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::blockspace::DenseMatrix;
use crate::error::{Error, Result};

use super::{DesignParts, SplittingDesign, StaircaseVector};

type Rows = Vec<Vec<f64>>;

/// Serialized form of a design plus its operator constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignFile {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub governor: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub laplacian: Option<Rows>,
    #[serde(rename = "U", default, skip_serializing_if = "Option::is_none")]
    pub u: Option<Rows>,
    #[serde(rename = "H")]
    pub h: Rows,
    #[serde(rename = "G")]
    pub g: Rows,
    #[serde(rename = "P")]
    pub p: Rows,
    #[serde(rename = "Q")]
    pub q: Rows,
    #[serde(rename = "R")]
    pub r: Rows,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Rows>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_hg: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_e: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern_f: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lip: Option<Vec<f64>>,
}

fn field_err(field: &str, message: impl Into<String>) -> Error {
    Error::Parse {
        location: format!("field {}", field),
        message: message.into(),
    }
}

fn to_matrix(field: &str, rows: &Rows, shape: (usize, usize)) -> Result<DenseMatrix> {
    let (r, c) = shape;
    let empty = rows.iter().all(Vec::is_empty);
    if (r == 0 || c == 0) && empty && (rows.is_empty() || rows.len() == r) {
        return Ok(DenseMatrix::zeros(r, c));
    }
    let mat = DenseMatrix::from_rows(rows).map_err(|e| field_err(field, e.to_string()))?;
    if mat.shape() != shape {
        return Err(field_err(
            field,
            format!("expected a {}x{} matrix, found {}x{}", r, c, mat.rows(), mat.cols()),
        ));
    }
    Ok(mat)
}

fn to_pattern(
    field: &str,
    given: &Option<Vec<usize>>,
    end: usize,
    default: impl FnOnce() -> Result<StaircaseVector>,
) -> Result<StaircaseVector> {
    match given {
        Some(v) => StaircaseVector::new(v.clone(), end),
        None => default(),
    }
    .map_err(|e| field_err(field, e.to_string()))
}

/// A parsed design file: the design and whatever constants it carried.
#[derive(Clone, Debug)]
pub struct LoadedDesign {
    pub design: SplittingDesign,
    pub sigma: Option<Vec<f64>>,
    pub lip: Option<Vec<f64>>,
}

impl DesignFile {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {}, column {}", e.line(), e.column()),
            message: e.to_string(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design files always serialize")
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::Io(format!("{}: {}", path.display(), e)))
    }

    pub fn from_design(design: &SplittingDesign, sigma: Option<&[f64]>, lip: Option<&[f64]>) -> Self {
        Self {
            n: design.n(),
            m: design.m(),
            l: design.l(),
            governor: design.governor().map(DenseMatrix::to_rows),
            laplacian: design.laplacian().map(DenseMatrix::to_rows),
            u: design.u().map(DenseMatrix::to_rows),
            h: design.h().to_rows(),
            g: design.g().to_rows(),
            p: design.p().to_rows(),
            q: design.q().to_rows(),
            r: design.r().to_rows(),
            k: design.k().map(DenseMatrix::to_rows),
            pattern_hg: Some(design.pattern_hg().entries().to_vec()),
            pattern_e: Some(design.pattern_e().entries().to_vec()),
            pattern_f: Some(design.pattern_f().entries().to_vec()),
            sigma: sigma.map(<[f64]>::to_vec),
            lip: lip.map(<[f64]>::to_vec),
        }
    }

    /// Converts to a design; shape and pattern problems are reported as parse
    /// errors located at the offending field.
    pub fn into_design(&self) -> Result<LoadedDesign> {
        let (n, m, l) = (self.n, self.m, self.l);
        if n == 0 {
            return Err(field_err("n", "at least one resolvent is required"));
        }
        let optional =
            |field: &str, rows: &Option<Rows>, shape| rows.as_ref().map(|r| to_matrix(field, r, shape)).transpose();
        let governor = optional("M", &self.governor, (n, n - 1))?;
        let laplacian = optional("laplacian", &self.laplacian, (n, n))?;
        let u = match &self.u {
            Some(rows) => {
                let cols = rows.first().map_or(0, Vec::len);
                Some(to_matrix("U", rows, (n, cols))?)
            }
            None => None,
        };
        let k = optional("K", &self.k, (n, n))?;
        if governor.is_none() && laplacian.is_none() {
            return Err(field_err("M", "either M or laplacian must be present"));
        }
        let parts = DesignParts {
            governor,
            laplacian,
            u,
            h: to_matrix("H", &self.h, (n, m))?,
            g: to_matrix("G", &self.g, (m, n))?,
            p: to_matrix("P", &self.p, (n, l))?,
            q: to_matrix("Q", &self.q, (n, l))?,
            r: to_matrix("R", &self.r, (l, n))?,
            pattern_hg: to_pattern("pattern_hg", &self.pattern_hg, m, || StaircaseVector::spread(n, m))?,
            pattern_e: to_pattern("pattern_e", &self.pattern_e, l, || {
                StaircaseVector::default_relative(n, l).map(|(e, _)| e)
            })?,
            pattern_f: to_pattern("pattern_f", &self.pattern_f, l, || {
                StaircaseVector::default_relative(n, l).map(|(_, f)| f)
            })?,
            k,
        };
        let design = SplittingDesign::new(parts).map_err(|e| field_err("design", e.to_string()))?;
        if let Some(s) = &self.sigma {
            if s.len() != m {
                return Err(field_err("sigma", format!("expected {} values, found {}", m, s.len())));
            }
        }
        if let Some(v) = &self.lip {
            if v.len() != l {
                return Err(field_err("lip", format!("expected {} values, found {}", l, v.len())));
            }
        }
        Ok(LoadedDesign {
            design,
            sigma: self.sigma.clone(),
            lip: self.lip.clone(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "n": 3, "m": 2, "l": 1,
        "M": [[1, 0], [-1, 1], [0, -1]],
        "H": [[0, 0], [1, 0], [0, 1]],
        "G": [[1, 0, 0], [0, 1, 0]],
        "P": [[0], [1], [0]], "Q": [[0], [0], [1]], "R": [[1, 0, 0]],
        "sigma": [1, 1], "lip": [1]
    }"#;

    #[test]
    fn parses_with_default_patterns() {
        let loaded = DesignFile::parse(SAMPLE).unwrap().into_design().unwrap();
        assert_eq!(loaded.design.pattern_hg().entries(), &[0, 1, 2]);
        assert_eq!(loaded.design.pattern_e().entries(), &[0, 1, 1]);
        assert_eq!(loaded.design.pattern_f().entries(), &[0, 0, 1]);
        assert_eq!(loaded.sigma, Some(vec![1.0, 1.0]));
    }

    #[test]
    fn roundtrip_is_exact() {
        let file = DesignFile::parse(SAMPLE).unwrap();
        let loaded = file.into_design().unwrap();
        let again = DesignFile::from_design(&loaded.design, loaded.sigma.as_deref(), loaded.lip.as_deref());
        let reparsed = DesignFile::parse(&again.to_json()).unwrap();
        assert_eq!(reparsed, again);
        assert_eq!(reparsed.into_design().unwrap().design, loaded.design);
    }

    #[test]
    fn syntax_error_has_location() {
        match DesignFile::parse("{\n \"n\": 3,\n oops }") {
            Err(Error::Parse { location, .. }) => assert!(location.starts_with("line 3")),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn shape_error_names_field() {
        let bad = SAMPLE.replace(r#""R": [[1, 0, 0]]"#, r#""R": [[1, 0]]"#);
        match DesignFile::parse(&bad).unwrap().into_design() {
            Err(Error::Parse { location, .. }) => assert_eq!(location, "field R"),
            other => panic!("unexpected {:?}", other),
        }
    }

    #[test]
    fn empty_matrices_take_expected_shape() {
        let text = r#"{"n": 2, "m": 0, "l": 0, "M": [[1], [-1]],
                       "H": [], "G": [], "P": [], "Q": [], "R": []}"#;
        let d = DesignFile::parse(text).unwrap().into_design().unwrap().design;
        assert_eq!(d.h().shape(), (2, 0));
        assert_eq!(d.r().shape(), (0, 2));
    }
}
