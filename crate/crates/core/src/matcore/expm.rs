use super::Matrix;
use crate::error::{Error, Result};

/// Matrix exponential (scaling-and-squaring Padé, via nalgebra).
pub fn expm(a: &Matrix) -> Result<Matrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::Shape {
            expected: "square matrix".into(),
            got: super::shape_str(a),
        });
    }
    super::check_finite(a)?;
    let norm = a.lp_norm(1);
    let e = a.exp();
    if e.iter().any(|v| !v.is_finite()) {
        return Err(Error::ExpmOverflow { norm });
    }
    Ok(e)
}
