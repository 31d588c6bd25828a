//! Dense reference assembly shared by the integration tests, built from the
//! mesh coordinates with nalgebra and no use of the crate's own assembly.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use llg_pc::fem::NodalField;
use llg_pc::mesh::Mesh;

pub struct DenseFem {
    pub n: usize,
    pub beta: Vec<f64>,
    pub stiffness: DMatrix<f64>,
    pub mass: DMatrix<f64>,
}

impl DenseFem {
    pub fn new(mesh: &Mesh) -> Self {
        let n = mesh.n_vertices();
        let mut beta = vec![0.0; n];
        let mut stiffness = DMatrix::zeros(n, n);
        let mut mass = DMatrix::zeros(n, n);
        for tet in mesh.tets() {
            let p: Vec<Vector3<f64>> = tet.iter().map(|&i| Vector3::from(mesh.vertices()[i])).collect();
            let jac = Matrix3::from_columns(&[p[1] - p[0], p[2] - p[0], p[3] - p[0]]);
            let vol = jac.determinant().abs() / 6.0;
            let inv_t = jac.try_inverse().unwrap().transpose();
            let ref_grads = [
                Vector3::new(-1.0, -1.0, -1.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 1.0, 0.0),
                Vector3::new(0.0, 0.0, 1.0),
            ];
            let grads: Vec<Vector3<f64>> = ref_grads.iter().map(|g| inv_t * g).collect();
            for a in 0..4 {
                beta[tet[a]] += vol / 4.0;
                for b in 0..4 {
                    stiffness[(tet[a], tet[b])] += vol * grads[a].dot(&grads[b]);
                    mass[(tet[a], tet[b])] += vol / 20.0 * if a == b { 2.0 } else { 1.0 };
                }
            }
        }
        Self { n, beta, stiffness, mass }
    }

    /// Dense `Δ_h = −diag(β)⁻¹ A`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.stiffness.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                l[(i, j)] /= self.beta[i];
            }
        }
        l
    }

    /// Dense `P_h = diag(β)⁻¹ M`.
    pub fn ph(&self) -> DMatrix<f64> {
        let mut p = self.mass.clone();
        for i in 0..self.n {
            for j in 0..self.n {
                p[(i, j)] /= self.beta[i];
            }
        }
        p
    }

    /// Applies a scalar `N×N` operator componentwise to a nodal field.
    pub fn apply(&self, op: &DMatrix<f64>, u: &NodalField) -> Vec<Vector3<f64>> {
        let mut out = vec![Vector3::zeros(); self.n];
        for d in 0..3 {
            let x = DVector::from_iterator(self.n, u.values().iter().map(|v| v[d]));
            let y = op * x;
            for z in 0..self.n {
                out[z][d] = y[z];
            }
        }
        out
    }
}

pub fn skew(a: Vector3<f64>) -> Matrix3<f64> {
    a.cross_matrix()
}

pub fn v3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

pub fn to_field(x: &DVector<f64>) -> NodalField {
    NodalField::new(x.as_slice().chunks(3).map(|c| [c[0], c[1], c[2]]).collect())
}

/// Single tetrahedron with an obtuse-free, non-degenerate shape.
pub fn single_tet() -> Mesh {
    Mesh::new(
        vec![[0.0, 0.0, 0.0], [1.0, 0.1, 0.0], [0.2, 0.9, 0.1], [0.1, 0.2, 1.1]],
        vec![[0, 1, 2, 3]],
    )
    .unwrap()
}

pub struct Params {
    pub theta: f64,
    pub k: f64,
    pub alpha: f64,
    pub ell: f64,
}

/// Dense `3N×3N` predictor system, tested against every `φ_z e_j`, solved by LU.
pub fn dense_predictor(fem: &DenseFem, m: &NodalField, p: &Params, h_lower: &NodalField) -> NodalField {
    let n = fem.n;
    let l = fem.laplacian();
    let c = p.theta * p.k * p.ell * p.ell;
    let mut k = DMatrix::zeros(3 * n, 3 * n);
    let mut rhs = DVector::zeros(3 * n);
    let lm = fem.apply(&l, m);
    for z in 0..n {
        let s = skew(v3(m.values()[z]));
        let op = s + p.alpha * s * s;
        for y in 0..n {
            let mut block = c * l[(z, y)] * op;
            if z == y {
                block += (1.0 + p.alpha * p.alpha) * Matrix3::identity();
            }
            k.view_mut((3 * z, 3 * y), (3, 3)).copy_from(&(fem.beta[z] * block));
        }
        let h0 = p.ell * p.ell * lm[z] + v3(h_lower.values()[z]);
        rhs.rows_mut(3 * z, 3).copy_from(&(-fem.beta[z] * (op * h0)));
    }
    to_field(&k.lu().solve(&rhs).unwrap())
}

/// Dense `3N×3N` midpoint corrector for the unknown `m_next`, solved by LU.
/// `pi` maps a nodal vector to the lower-order field.
pub fn dense_corrector(
    fem: &DenseFem,
    m: &NodalField,
    v: &NodalField,
    p: &Params,
    pi: impl Fn(Vector3<f64>) -> Vector3<f64>,
    f: Vector3<f64>,
) -> NodalField {
    let n = fem.n;
    let mid = NodalField::new(
        m.values().iter().zip(v.values()).map(|(a, b)| std::array::from_fn(|d| a[d] + 0.5 * p.k * b[d])).collect(),
    );
    let lmid = fem.apply(&fem.laplacian(), &mid);
    let lower_pointwise = NodalField::new(
        mid.values().iter().map(|&u| {
            let r = pi(v3(u)) + f;
            [r[0], r[1], r[2]]
        })
        .collect(),
    );
    let ph = fem.apply(&fem.ph(), &lower_pointwise);
    let lead = (1.0 + p.alpha * p.alpha) / p.k;
    let mut k = DMatrix::zeros(3 * n, 3 * n);
    let mut rhs = DVector::zeros(3 * n);
    for z in 0..n {
        let h = p.ell * p.ell * lmid[z] + ph[z];
        let b = h + p.alpha * v3(mid.values()[z]).cross(&h);
        let sb = skew(b);
        let lhs = fem.beta[z] * (lead * Matrix3::identity() - 0.5 * sb);
        k.view_mut((3 * z, 3 * z), (3, 3)).copy_from(&lhs);
        let r = fem.beta[z] * (lead * Matrix3::identity() + 0.5 * sb) * v3(m.values()[z]);
        rhs.rows_mut(3 * z, 3).copy_from(&r);
    }
    to_field(&k.lu().solve(&rhs).unwrap())
}

pub fn max_diff(a: &NodalField, b: &NodalField) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .flat_map(|(x, y)| (0..3).map(move |d| (x[d] - y[d]).abs()))
        .fold(0.0, f64::max)
}
