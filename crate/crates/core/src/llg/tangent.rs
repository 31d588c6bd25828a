use crate::error::{Error, Result};
use crate::fem::UNIT_TOL;
use crate::vec3::{cross, dot, norm, scale, sub, Vec3};

/// Orthonormal pair `(t1, t2)` spanning the plane orthogonal to the unit
/// vector `u`, with `t1 × t2 = u`.
///
/// `t1` is the coordinate axis along which `u` has its smallest component
/// (first such axis on ties), orthonormalised against `u`.
pub fn tangent_basis(u: Vec3) -> Result<(Vec3, Vec3)> {
    if !((norm(u) - 1.0).abs() <= UNIT_TOL) {
        return Err(Error::Precondition(format!("tangent_basis needs a unit vector, got {u:?}")));
    }
    let mut axis = 0;
    for d in 1..3 {
        if u[d].abs() < u[axis].abs() {
            axis = d;
        }
    }
    let mut e = [0.0; 3];
    e[axis] = 1.0;
    let t1 = sub(e, scale(dot(u, e), u));
    let t1 = scale(1.0 / norm(t1), t1);
    let t2 = cross(u, t1);
    Ok((t1, t2))
}
