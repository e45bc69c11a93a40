//! JSON file formats.
//!
//! A matrix file is `{"n": n, "data": [[re, im], ...]}` with `n^2` row-major
//! entries. Floats are written in shortest round-trip form, so reading back a
//! written file reproduces every entry bit for bit.

use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Serialize, Deserialize)]
struct MatrixFile {
    n: usize,
    data: Vec<[f64; 2]>,
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        if !self.is_square() {
            return Err(serde::ser::Error::custom("only square matrices have a file format"));
        }
        MatrixFile {
            n: self.rows(),
            data: self.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let file = MatrixFile::deserialize(deserializer)?;
        if file.n == 0 {
            return Err(D::Error::custom("n must be positive"));
        }
        let data = file.data.iter().map(|&[re, im]| Complex64::new(re, im)).collect();
        Matrix::from_rows(file.n, file.n, data).map_err(D::Error::custom)
    }
}

pub fn matrix_to_json(m: &Matrix) -> String {
    serde_json::to_string(m).expect("square matrix serializes")
}

pub fn matrix_from_json(text: &str) -> Result<Matrix> {
    serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("bad matrix file: {e}")))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    matrix_from_json(&fs::read_to_string(path)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_text(path, &matrix_to_json(m))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut body = text.to_string();
    body.push('\n');
    fs::write(path, body)?;
    Ok(())
}
