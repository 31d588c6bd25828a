use crate::error::{Error, Result};
use crate::vec3::{cross, dot, Vec3};

/// Row-major 3x3 matrix.
pub type Mat3 = [[f64; 3]; 3];

/// Solves `a x = b` by Cramer's rule.
///
/// Fails with [`Error::SingularSystem`] when `|det a| <= 1e-14 * s³`,
/// `s` being the largest absolute entry of `a`.
pub fn solve3(a: &Mat3, b: Vec3) -> Result<Vec3> {
    let scale = a.iter().flatten().fold(0.0_f64, |m, v| m.max(v.abs()));
    let [r0, r1, r2] = *a;
    // rows of the cofactor matrix are the pairwise cross products of the rows
    let c12 = cross(r1, r2);
    let det = dot(r0, c12);
    if !(det.abs() > 1e-14 * scale * scale * scale) {
        return Err(Error::SingularSystem(format!("3x3 determinant {det:e} (scale {scale:e})")));
    }
    let c20 = cross(r2, r0);
    let c01 = cross(r0, r1);
    // inverse = [c12 c20 c01] / det, columns
    let inv_det = 1.0 / det;
    Ok([
        (c12[0] * b[0] + c20[0] * b[1] + c01[0] * b[2]) * inv_det,
        (c12[1] * b[0] + c20[1] * b[1] + c01[1] * b[2]) * inv_det,
        (c12[2] * b[0] + c20[2] * b[1] + c01[2] * b[2]) * inv_det,
    ])
}
