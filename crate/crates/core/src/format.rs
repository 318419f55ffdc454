//! Shared serialisation helpers: the matrix JSON document and CSV number
//! formatting.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Matrix4c, C64};

/// `{"dim": 4, "re": [[..]], "im": [[..]]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &Matrix4c) -> Self {
        let re = (0..4).map(|r| (0..4).map(|c| m[(r, c)].re).collect()).collect();
        let im = (0..4).map(|r| (0..4).map(|c| m[(r, c)].im).collect()).collect();
        MatrixJson { dim: 4, re, im }
    }

    pub fn to_matrix(&self) -> Result<Matrix4c> {
        if self.dim != 4 {
            return Err(Error::Format(format!("expected dim 4, got {}", self.dim)));
        }
        let shape_ok = |rows: &Vec<Vec<f64>>| rows.len() == 4 && rows.iter().all(|r| r.len() == 4);
        if !shape_ok(&self.re) || !shape_ok(&self.im) {
            return Err(Error::Format("re and im must both be 4x4".into()));
        }
        Ok(Matrix4c::from_fn(|r, c| C64::new(self.re[r][c], self.im[r][c])))
    }
}

/// Row-major 4×4 real grid, as used for standard errors and correlators.
pub fn real_grid(f: impl Fn(usize, usize) -> f64) -> Vec<Vec<f64>> {
    (0..4).map(|r| (0..4).map(|c| f(r, c)).collect()).collect()
}

/// Format with 12 significant digits in the style of C's `%.12g`,
/// independent of locale.
pub fn sig12(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..DIGITS).contains(&exp) {
        format!("{}e{}{:02}", trim_zeros(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
