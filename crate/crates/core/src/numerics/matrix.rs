use super::{Jet, NumericsError};

/// Condition estimate above which a matrix is reported singular.
pub const SINGULAR_COND: f64 = 1e12;

/// Dense row-major matrix of jets sharing one order and variable count.
#[derive(Debug, Clone, PartialEq)]
pub struct JetMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Jet>,
}

impl JetMatrix {
    pub fn zeros(rows: usize, cols: usize, nvars: usize, order: u8) -> Self {
        Self {
            rows,
            cols,
            data: vec![Jet::constant(0.0, nvars, order); rows * cols],
        }
    }

    pub fn identity(n: usize, nvars: usize, order: u8) -> Self {
        let mut m = Self::zeros(n, n, nvars, order);
        for i in 0..n {
            m[(i, i)] = Jet::constant(1.0, nvars, order);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Jet) -> Self {
        let data = (0..rows)
            .flat_map(|i| (0..cols).map(move |j| (i, j)))
            .map(|(i, j)| f(i, j))
            .collect();
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn values(&self) -> Vec<Vec<f64>> {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)].value()).collect())
            .collect()
    }

    fn shape(&self) -> (usize, u8) {
        let j = self.data.first().expect("empty jet matrix");
        (j.nvars(), j.order())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "jet matrix product shape");
        let (nv, ord) = self.shape();
        Self::from_fn(self.rows, other.cols, |i, j| {
            (0..self.cols).fold(Jet::constant(0.0, nv, ord), |acc, k| {
                acc + self[(i, k)] * other[(k, j)]
            })
        })
    }

    /// Inverse with derivative slots from `∂B = -B ∂A B` and
    /// `∂k∂l B = B (∂kA B ∂lA + ∂lA B ∂kA - ∂k∂lA) B`, where `B = A⁻¹`.
    pub fn inverse(&self) -> Result<Self, NumericsError> {
        assert_eq!(self.rows, self.cols, "inverse of a non-square jet matrix");
        let n = self.rows;
        let (nv, ord) = self.shape();
        let a0 = self.values();
        let b0 = invert_values(&a0)?;
        let slot = |f: &dyn Fn(&Jet) -> f64| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| f(&self[(i, j)])).collect())
                .collect()
        };
        let mut out = Self::zeros(n, n, nv, ord);
        let mut grads = vec![vec![vec![0.0; n]; n]; nv];
        let mut da = Vec::new();
        if ord >= 1 {
            for k in 0..nv {
                let dk = slot(&|j| j.d(k));
                grads[k] = neg(&mul3(&b0, &dk, &b0));
                da.push(dk);
            }
        }
        let mut hess = vec![vec![vec![vec![0.0; n]; n]; nv]; nv];
        if ord >= 2 {
            for k in 0..nv {
                for l in k..nv {
                    let dkl = slot(&|j| j.hess(k, l));
                    let t1 = mul3(&da[k], &b0, &da[l]);
                    let t2 = mul3(&da[l], &b0, &da[k]);
                    let inner = sub(&add(&t1, &t2), &dkl);
                    hess[k][l] = mul3(&b0, &inner, &b0);
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let g: Vec<f64> = (0..nv).map(|k| grads[k][i][j]).collect();
                let h = (ord >= 2).then(|| {
                    (0..nv)
                        .map(|k| {
                            (0..nv)
                                .map(|l| {
                                    let (a, b) = if k <= l { (k, l) } else { (l, k) };
                                    hess[a][b][i][j]
                                })
                                .collect::<Vec<_>>()
                        })
                        .collect::<Vec<_>>()
                });
                let jet = Jet::from_parts(b0[i][j], &g, h.as_deref());
                out[(i, j)] = jet.truncate(ord);
            }
        }
        Ok(out)
    }
}

impl std::ops::Index<(usize, usize)> for JetMatrix {
    type Output = Jet;
    fn index(&self, (i, j): (usize, usize)) -> &Jet {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for JetMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Jet {
        &mut self.data[i * self.cols + j]
    }
}

type Mat = Vec<Vec<f64>>;

fn mul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let m = b[0].len();
    let k = b.len();
    (0..n)
        .map(|i| {
            (0..m)
                .map(|j| (0..k).map(|t| a[i][t] * b[t][j]).sum())
                .collect()
        })
        .collect()
}

fn mul3(a: &Mat, b: &Mat, c: &Mat) -> Mat {
    mul(&mul(a, b), c)
}

fn add(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect())
        .collect()
}

fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(r, s)| r.iter().zip(s).map(|(x, y)| x - y).collect())
        .collect()
}

fn neg(a: &Mat) -> Mat {
    a.iter().map(|r| r.iter().map(|x| -x).collect()).collect()
}

fn norm1(a: &Mat) -> f64 {
    let n = a[0].len();
    (0..n)
        .map(|j| a.iter().map(|r| r[j].abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// LU factorization with partial pivoting, stored compactly.
pub struct Lu {
    lu: Mat,
    perm: Vec<usize>,
}

impl Lu {
    pub fn factor(a: &Mat) -> Result<Self, NumericsError> {
        let n = a.len();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&x, &y| lu[x][k].abs().total_cmp(&lu[y][k].abs()))
                .expect("non-empty pivot range");
            if lu[p][k] == 0.0 || !lu[p][k].is_finite() {
                return Err(NumericsError::Singular {
                    cond: f64::INFINITY,
                });
            }
            lu.swap(k, p);
            perm.swap(k, p);
            for i in k + 1..n {
                let f = lu[i][k] / lu[k][k];
                lu[i][k] = f;
                for j in k + 1..n {
                    lu[i][j] -= f * lu[k][j];
                }
            }
        }
        Ok(Self { lu, perm })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.len();
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[i][j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[i][j] * x[j];
            }
            x[i] /= self.lu[i][i];
        }
        x
    }
}

/// Inverse and 1-norm condition number of a plain matrix.
pub fn invert_with_cond(a: &Mat) -> Result<(Mat, f64), NumericsError> {
    let n = a.len();
    let lu = Lu::factor(a)?;
    let mut inv = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = lu.solve(&e);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    let cond = norm1(a) * norm1(&inv);
    if !cond.is_finite() {
        return Err(NumericsError::Singular {
            cond: f64::INFINITY,
        });
    }
    Ok((inv, cond))
}

/// Inverse of a plain matrix, rejecting condition estimates at or above
/// [`SINGULAR_COND`].
pub fn invert_values(a: &Mat) -> Result<Mat, NumericsError> {
    let (inv, cond) = invert_with_cond(a)?;
    if cond >= SINGULAR_COND {
        return Err(NumericsError::Singular { cond });
    }
    Ok(inv)
}

/// Solves `A x = b` by LU with partial pivoting.
pub fn solve(a: &Mat, b: &[f64]) -> Result<Vec<f64>, NumericsError> {
    Ok(Lu::factor(a)?.solve(b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{Chart, ScalarField};
    use crate::numerics::jet_eval;
    use std::sync::Arc;

    #[test]
    fn identity_inverse() {
        let m = JetMatrix::identity(3, 4, 2);
        assert_eq!(m.inverse().unwrap(), m);
    }

    #[test]
    fn conformal_inverse() {
        let c = Arc::new(Chart::tangent(2).unwrap());
        let f = ScalarField::parse("exp(2*x1)", &c).unwrap();
        let j = jet_eval(&f, &[0.0, 0.0, 0.0, 0.0], 1).unwrap();
        let zero = Jet::constant(0.0, 4, 1);
        let m = JetMatrix::from_fn(2, 2, |i, k| if i == k { j } else { zero });
        let inv = m.inverse().unwrap();
        for i in 0..2 {
            assert_eq!(inv[(i, i)].value(), 1.0);
            assert_eq!(inv[(i, i)].d(0), -2.0);
        }
    }

    #[test]
    fn scalar_inverse() {
        let c = Arc::new(Chart::with_names(&["x"], &["v"]).unwrap());
        let f = ScalarField::parse("v^2", &c).unwrap();
        let j = jet_eval(&f, &[0.0, 2.0], 1).unwrap();
        let inv = JetMatrix::from_fn(1, 1, |_, _| j).inverse().unwrap();
        assert_eq!(inv[(0, 0)].value(), 0.25);
        assert_eq!(inv[(0, 0)].d(1), -0.25);
    }

    #[test]
    fn singular_reports_condition() {
        let a = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
        assert!(matches!(
            invert_values(&a),
            Err(NumericsError::Singular { .. })
        ));
        let b = vec![vec![1.0, 0.0], vec![0.0, 1e-13]];
        match invert_values(&b) {
            Err(NumericsError::Singular { cond }) => assert!(cond >= 1e12),
            other => panic!("unexpected {other:?}"),
        }
    }
}
