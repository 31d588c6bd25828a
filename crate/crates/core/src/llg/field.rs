use crate::error::{Error, Result};
use crate::fem::{Assembly, NodalField};
use crate::vec3::{dot, norm, scale, Vec3};

/// Lower-order operator `π` of the effective field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LowerOrder {
    None,
    /// `π(m) = c (a·m) a` with unit axis `a`.
    Uniaxial { c: f64, axis: Vec3 },
}

/// Applied field `f(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AppliedField {
    Zero,
    Constant(Vec3),
}

impl AppliedField {
    pub fn at(&self, _t: f64) -> Vec3 {
        match *self {
            AppliedField::Zero => [0.0; 3],
            AppliedField::Constant(f) => f,
        }
    }

    pub fn is_zero(&self) -> bool {
        match *self {
            AppliedField::Zero => true,
            AppliedField::Constant(f) => f == [0.0; 3],
        }
    }
}

/// `h_eff(m) = ℓ_ex² Δm + π(m) + f(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveField {
    pub ell_ex: f64,
    pub pi: LowerOrder,
    pub applied: AppliedField,
}

impl EffectiveField {
    pub fn exchange_only(ell_ex: f64) -> Self {
        Self { ell_ex, pi: LowerOrder::None, applied: AppliedField::Zero }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.ell_ex > 0.0) || !self.ell_ex.is_finite() {
            return Err(Error::Config(format!("exchange length must be positive, got {}", self.ell_ex)));
        }
        if let LowerOrder::Uniaxial { c, axis } = self.pi {
            if !(c >= 0.0) || !c.is_finite() {
                return Err(Error::Config(format!("anisotropy constant must be >= 0, got {c}")));
            }
            if !((norm(axis) - 1.0).abs() <= 1e-12) {
                return Err(Error::Config(format!("anisotropy axis {axis:?} is not unit length")));
            }
        }
        if let AppliedField::Constant(f) = self.applied {
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::Config("applied field must be finite".into()));
            }
        }
        Ok(())
    }

    /// True when the effective field is the exchange contribution alone.
    pub fn is_exchange_only(&self) -> bool {
        self.pi == LowerOrder::None && self.applied.is_zero()
    }

    /// `P_h(π(u) + f(t))`, the lower-order field as a discrete function.
    pub fn lower_order_field(&self, asm: &Assembly, u: &NodalField, t: f64) -> Result<NodalField> {
        let f = self.applied.at(t);
        match self.pi {
            // P_h reproduces constants
            LowerOrder::None => Ok(NodalField::constant(u.len(), f)),
            LowerOrder::Uniaxial { .. } => {
                let mut p = apply_pi(self, u);
                for v in p.values_mut() {
                    *v = [v[0] + f[0], v[1] + f[1], v[2] + f[2]];
                }
                asm.ph(&p)
            }
        }
    }
}

/// Nodewise `π(m)`.
pub fn apply_pi(field: &EffectiveField, m: &NodalField) -> NodalField {
    match field.pi {
        LowerOrder::None => NodalField::zeros(m.len()),
        LowerOrder::Uniaxial { c, axis } => {
            NodalField::new(m.values().iter().map(|v| scale(c * dot(axis, *v), axis)).collect())
        }
    }
}

/// Gibbs energy `(ℓ_ex²/2)‖∇m‖² − ½(π(m), m) − (f(t), m)` with the
/// consistent L² product for the lower-order terms.
pub fn energy(asm: &Assembly, field: &EffectiveField, m: &NodalField, t: f64) -> Result<f64> {
    if m.len() != asm.n_vertices() {
        return Err(Error::InvalidParameter("energy: field does not match the mesh".into()));
    }
    let exchange = 0.5 * field.ell_ex * field.ell_ex * asm.grad_sq(m);
    let anisotropy = match field.pi {
        LowerOrder::None => 0.0,
        LowerOrder::Uniaxial { .. } => 0.5 * asm.l2_inner(&apply_pi(field, m), m),
    };
    let zeeman = if field.applied.is_zero() {
        0.0
    } else {
        asm.l2_inner(&NodalField::constant(m.len(), field.applied.at(t)), m)
    };
    Ok(exchange - anisotropy - zeeman)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_cube_mesh;

    fn setup() -> (Assembly, usize) {
        let mesh = build_cube_mesh(2, 1.0, [0.5; 3]).unwrap();
        (Assembly::new(&mesh).unwrap(), mesh.n_vertices())
    }

    fn uniaxial(c: f64) -> EffectiveField {
        EffectiveField {
            ell_ex: 1.0,
            pi: LowerOrder::Uniaxial { c, axis: [0.0, 0.0, 1.0] },
            applied: AppliedField::Zero,
        }
    }

    #[test]
    fn pi_along_and_across_axis() {
        let f = uniaxial(2.0);
        let along = apply_pi(&f, &NodalField::constant(4, [0.0, 0.0, 1.0]));
        assert_eq!(along, NodalField::constant(4, [0.0, 0.0, 2.0]));
        let across = apply_pi(&f, &NodalField::constant(4, [0.6, 0.8, 0.0]));
        assert_eq!(across.max_abs(), 0.0);
        assert_eq!(apply_pi(&EffectiveField::exchange_only(1.0), &along).max_abs(), 0.0);
    }

    #[test]
    fn pi_self_adjoint_in_lumped_product() {
        let (asm, n) = setup();
        let f = EffectiveField {
            ell_ex: 1.0,
            pi: LowerOrder::Uniaxial { c: 1.7, axis: [0.6, 0.0, 0.8] },
            applied: AppliedField::Zero,
        };
        let u = NodalField::new((0..n).map(|i| [(i as f64).sin(), 1.0, (i as f64).cos()]).collect());
        let w = NodalField::new((0..n).map(|i| [0.3, (2.0 * i as f64).cos(), -1.0]).collect());
        let a = asm.inner_h(&apply_pi(&f, &u), &w).unwrap();
        let b = asm.inner_h(&u, &apply_pi(&f, &w)).unwrap();
        assert!((a - b).abs() < 1e-14);
    }

    #[test]
    fn energy_examples() {
        let (asm, n) = setup();
        let m = NodalField::constant(n, [0.0, 0.0, 1.0]);
        assert!(energy(&asm, &EffectiveField::exchange_only(1.0), &m, 0.0).unwrap().abs() < 1e-13);

        let f = [-2.0, -0.5, 0.3];
        let zee = EffectiveField { applied: AppliedField::Constant(f), ..EffectiveField::exchange_only(1.0) };
        let mx = NodalField::constant(n, [0.6, 0.8, 0.0]);
        let expected = -(f[0] * 0.6 + f[1] * 0.8);
        assert!((energy(&asm, &zee, &mx, 0.0).unwrap() - expected).abs() < 1e-13);

        assert!((energy(&asm, &uniaxial(3.0), &m, 0.0).unwrap() + 1.5).abs() < 1e-13);
    }

    #[test]
    fn validation() {
        assert!(uniaxial(1.0).validate().is_ok());
        assert!(EffectiveField::exchange_only(0.0).validate().is_err());
        let bad_axis = EffectiveField {
            pi: LowerOrder::Uniaxial { c: 1.0, axis: [1.0, 1.0, 0.0] },
            ..EffectiveField::exchange_only(1.0)
        };
        assert!(bad_axis.validate().is_err());
    }
}
