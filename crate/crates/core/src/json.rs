//! JSON encodings shared by the artifact writers: complex numbers as
//! `[re, im]`, matrices as row-major nested arrays.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Value};

pub fn complex(z: Complex64) -> Value {
    // fold signed zeros so equal values print identically
    json!([z.re + 0.0, z.im + 0.0])
}

pub fn matrix(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|r| Value::Array((0..m.ncols()).map(|c| complex(m[(r, c)])).collect()))
            .collect(),
    )
}
