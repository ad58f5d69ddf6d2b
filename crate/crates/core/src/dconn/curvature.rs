use super::connection::{Coefficients, DConnection};
use super::tensor::{DTensor, Slot};
use crate::expr::ScalarField;
use crate::nconn::AdaptedFrame;
use crate::numerics::{jet_eval, Jet};
use crate::{Error, Result};

/// Curvature components `R^α_{βγδ} = [R(e_δ, e_γ) e_β]^α` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Curvature {
    n: usize,
    m: usize,
    data: Vec<f64>,
}

impl Curvature {
    fn zeros(n: usize, m: usize) -> Self {
        let d = n + m;
        Self {
            n,
            m,
            data: vec![0.0; d * d * d * d],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn dim(&self) -> usize {
        self.n + self.m
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, g: usize, dl: usize) -> usize {
        let d = self.dim();
        ((a * d + b) * d + g) * d + dl
    }

    pub fn get(&self, a: usize, b: usize, g: usize, dl: usize) -> f64 {
        self.data[self.idx(a, b, g, dl)]
    }

    fn set(&mut self, a: usize, b: usize, g: usize, dl: usize, v: f64) {
        let k = self.idx(a, b, g, dl);
        self.data[k] = v;
    }

    /// Sets `R^α_{βγδ}` and its antisymmetric partner in `γδ`.
    fn set_pair(&mut self, a: usize, b: usize, g: usize, dl: usize, v: f64) {
        self.set(a, b, g, dl, v);
        self.set(a, b, dl, g, -v);
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `R(e_δ, e_γ) Z` for adapted components `z`.
    pub fn apply(&self, g: usize, dl: usize, z: &[f64]) -> Vec<f64> {
        let d = self.dim();
        (0..d)
            .map(|a| (0..d).map(|b| self.get(a, b, g, dl) * z[b]).sum())
            .collect()
    }
}

/// Curvature of an arbitrary linear connection in the adapted frame:
///
/// ```text
/// R^α_{βγδ} = e_δ Γ^α_{βγ} − e_γ Γ^α_{βδ} + Γ^μ_{βγ} Γ^α_{μδ} − Γ^μ_{βδ} Γ^α_{μγ}
///           − W^μ_{δγ} Γ^α_{βμ}
/// ```
///
/// where `Γ^α_{βγ}` is the coefficient of `e_α` in `D_{e_γ} e_β`.
pub fn curvature_general(co: &Coefficients, frame: &AdaptedFrame) -> Curvature {
    let (n, m) = (co.n(), co.m());
    let d = n + m;
    let w = frame.anholonomy();
    let mut r = Curvature::zeros(n, m);
    for a in 0..d {
        for b in 0..d {
            for g in 0..d {
                for dl in 0..d {
                    let mut s =
                        frame.e(co.get(a, b, g), dl).value() - frame.e(co.get(a, b, dl), g).value();
                    for mu in 0..d {
                        s += co.value(mu, b, g) * co.value(a, mu, dl)
                            - co.value(mu, b, dl) * co.value(a, mu, g)
                            - w[mu][dl][g] * co.value(a, b, mu);
                    }
                    r.set(a, b, g, dl, s);
                }
            }
        }
    }
    r
}

/// The six curvature blocks of a d-connection, assembled into the full
/// array. Returns the array and the blocks
/// `R^i_hjk, R^a_bjk, R^i_jka, R^c_bka, R^i_jbc, R^a_bcd`.
pub fn d_curvature(co: &Coefficients) -> Result<(Curvature, Vec<DTensor>)> {
    let (n, m) = (co.n(), co.m());
    let fr = &co.metric_or_err()?.frame;
    let om = fr.omega();
    let ek = |j: &Jet, k: usize| fr.e(j, k).value();
    let dn = |a: usize, k: usize, b: usize| fr.dn_dy(a, k, b).value();
    let l = |i: usize, j: usize, k: usize| co.value(i, j, k);
    let lv = |a: usize, b: usize, k: usize| co.value(n + a, n + b, k);
    let ch = |i: usize, j: usize, c: usize| co.value(i, j, n + c);
    let cv = |a: usize, b: usize, c: usize| co.value(n + a, n + b, n + c);
    let mut r = Curvature::zeros(n, m);

    // R^i_hjk = e_k L^i_hj − e_j L^i_hk + L^m_hj L^i_mk − L^m_hk L^i_mj − C^i_ha Ω^a_kj
    for i in 0..n {
        for h in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut s = ek(co.get(i, h, j), k) - ek(co.get(i, h, k), j);
                    for p in 0..n {
                        s += l(p, h, j) * l(i, p, k) - l(p, h, k) * l(i, p, j);
                    }
                    for a in 0..m {
                        s -= ch(i, h, a) * om[a][k][j];
                    }
                    r.set(i, h, j, k, s);
                }
            }
        }
    }
    // R^a_bjk = e_k L^a_bj − e_j L^a_bk + L^c_bj L^a_ck − L^c_bk L^a_cj − C^a_bc Ω^c_kj
    for a in 0..m {
        for b in 0..m {
            for j in 0..n {
                for k in 0..n {
                    let mut s = ek(co.get(n + a, n + b, j), k) - ek(co.get(n + a, n + b, k), j);
                    for c in 0..m {
                        s += lv(c, b, j) * lv(a, c, k)
                            - lv(c, b, k) * lv(a, c, j)
                            - cv(a, b, c) * om[c][k][j];
                    }
                    r.set(n + a, n + b, j, k, s);
                }
            }
        }
    }
    // R^i_jka = ∂_a L^i_jk − D_k C^i_ja + C^i_jb T^b_ka, with
    // D_k C^i_ja = e_k C^i_ja + L^i_pk C^p_ja − L^p_jk C^i_pa − L^b_ak C^i_jb
    // (L^i acts on the upper h-index, L on the lower h-index, L^b_ak on the
    // v-index) and T^b_ka = ∂_a N_k^b − L^b_ak.
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for a in 0..m {
                    let mut dkc = ek(co.get(i, j, n + a), k);
                    for p in 0..n {
                        dkc += l(i, p, k) * ch(p, j, a) - l(p, j, k) * ch(i, p, a);
                    }
                    for b in 0..m {
                        dkc -= lv(b, a, k) * ch(i, j, b);
                    }
                    let mut s = ek(co.get(i, j, k), n + a) - dkc;
                    for b in 0..m {
                        s += ch(i, j, b) * (dn(b, k, a) - lv(b, a, k));
                    }
                    r.set_pair(i, j, k, n + a, s);
                }
            }
        }
    }
    // R^c_bka = ∂_a L^c_bk − D_k C^c_ba + C^c_bd T^d_ka, with
    // D_k C^c_ba = e_k C^c_ba + L^c_dk C^d_ba − L^d_bk C^c_da − L^d_ak C^c_bd.
    for c in 0..m {
        for b in 0..m {
            for k in 0..n {
                for a in 0..m {
                    let mut dkc = ek(co.get(n + c, n + b, n + a), k);
                    for e in 0..m {
                        dkc += lv(c, e, k) * cv(e, b, a)
                            - lv(e, b, k) * cv(c, e, a)
                            - lv(e, a, k) * cv(c, b, e);
                    }
                    let mut s = ek(co.get(n + c, n + b, k), n + a) - dkc;
                    for e in 0..m {
                        s += cv(c, b, e) * (dn(e, k, a) - lv(e, a, k));
                    }
                    r.set_pair(n + c, n + b, k, n + a, s);
                }
            }
        }
    }
    // R^i_jbc = ∂_c C^i_jb − ∂_b C^i_jc + C^h_jb C^i_hc − C^h_jc C^i_hb
    for i in 0..n {
        for j in 0..n {
            for b in 0..m {
                for c in 0..m {
                    let mut s = ek(co.get(i, j, n + b), n + c) - ek(co.get(i, j, n + c), n + b);
                    for h in 0..n {
                        s += ch(h, j, b) * ch(i, h, c) - ch(h, j, c) * ch(i, h, b);
                    }
                    r.set(i, j, n + b, n + c, s);
                }
            }
        }
    }
    // R^a_bcd = ∂_d C^a_bc − ∂_c C^a_bd + C^e_bc C^a_ed − C^e_bd C^a_ec
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                for d in 0..m {
                    let mut s = ek(co.get(n + a, n + b, n + c), n + d)
                        - ek(co.get(n + a, n + b, n + d), n + c);
                    for e in 0..m {
                        s += cv(e, b, c) * cv(a, e, d) - cv(e, b, d) * cv(a, e, c);
                    }
                    r.set(n + a, n + b, n + c, n + d, s);
                }
            }
        }
    }

    let (hu, hl, vu, vl) = (Slot::HU, Slot::HL, Slot::VU, Slot::VL);
    let blocks = vec![
        DTensor::from_fn("R^i_hjk", &[hu, hl, hl, hl], n, m, |x| {
            r.get(x[0], x[1], x[2], x[3])
        }),
        DTensor::from_fn("R^a_bjk", &[vu, vl, hl, hl], n, m, |x| {
            r.get(n + x[0], n + x[1], x[2], x[3])
        }),
        DTensor::from_fn("R^i_jka", &[hu, hl, hl, vl], n, m, |x| {
            r.get(x[0], x[1], x[2], n + x[3])
        }),
        DTensor::from_fn("R^c_bka", &[vu, vl, hl, vl], n, m, |x| {
            r.get(n + x[0], n + x[1], x[2], n + x[3])
        }),
        DTensor::from_fn("R^i_jbc", &[hu, hl, vl, vl], n, m, |x| {
            r.get(x[0], x[1], n + x[2], n + x[3])
        }),
        DTensor::from_fn("R^a_bcd", &[vu, vl, vl, vl], n, m, |x| {
            r.get(n + x[0], n + x[1], n + x[2], n + x[3])
        }),
    ];
    Ok((r, blocks))
}

/// Outcome of the commutator oracle at one point: for every frame pair
/// `(γ, δ)`, the nested-derivative vector and `R(e_δ, e_γ) Z`.
#[derive(Debug, Clone)]
pub struct OracleSample {
    pub nested: Vec<Vec<f64>>,
    pub contracted: Vec<Vec<f64>>,
}

impl OracleSample {
    /// `max |nested − contracted| / max(1, max |contracted|)`.
    pub fn relative_deviation(&self) -> f64 {
        let scale = self
            .contracted
            .iter()
            .flatten()
            .fold(1.0f64, |m, x| m.max(x.abs()));
        let diff = self
            .nested
            .iter()
            .flatten()
            .zip(self.contracted.iter().flatten())
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        diff / scale
    }
}

/// `(D_δ D_γ − D_γ D_δ − D_{[e_δ, e_γ]}) Z` by nested covariant derivatives of
/// the d-vector field `Z` (adapted components), with the bracket computed from
/// coordinate derivatives of the frame vectors, against the contraction of
/// the block curvature with `Z`.
pub fn commutator_oracle(
    dc: &DConnection,
    coords: &[f64],
    z: &[ScalarField],
) -> Result<OracleSample> {
    let co = dc.at(coords)?;
    let (n, m) = (co.n(), co.m());
    let d = n + m;
    if z.len() != d {
        return Err(Error::Shape(format!("d-vector field needs {d} components")));
    }
    let (curv, _) = d_curvature(&co)?;
    let fr = &co.metric_or_err()?.frame;
    let zj = z
        .iter()
        .map(|f| jet_eval(f, coords, 2).map_err(Error::from))
        .collect::<Result<Vec<_>>>()?;

    // (D_γ Z)^α as order-1 jets, [γ][α].
    let dz: Vec<Vec<Jet>> = (0..d)
        .map(|g| {
            (0..d)
                .map(|a| {
                    (0..d).fold(fr.e(&zj[a], g), |acc, mu| {
                        acc + *co.get(a, mu, g) * zj[mu].truncate(1)
                    })
                })
                .collect()
        })
        .collect();
    let ddz = |dl: usize, g: usize, a: usize| -> f64 {
        let mut s = fr.e(&dz[g][a], dl).value();
        for mu in 0..d {
            s += co.value(a, mu, dl) * dz[g][mu].value();
        }
        s
    };

    // Coordinate components of e_α as order-1 jets.
    let nv = coords.len();
    let vielbein: Vec<Vec<Jet>> = (0..d)
        .map(|alpha| {
            (0..d)
                .map(|mu| {
                    if alpha < n && mu >= n {
                        -fr.nn(mu - n, alpha).truncate(1)
                    } else {
                        Jet::constant(if alpha == mu { 1.0 } else { 0.0 }, nv, 1)
                    }
                })
                .collect()
        })
        .collect();
    let bracket = |x: usize, y: usize| -> Vec<f64> {
        let coord: Vec<f64> = (0..d)
            .map(|nu| {
                (0..d)
                    .map(|mu| {
                        vielbein[x][mu].value() * vielbein[y][nu].d(mu)
                            - vielbein[y][mu].value() * vielbein[x][nu].d(mu)
                    })
                    .sum()
            })
            .collect();
        let mut out = coord.clone();
        for a in 0..m {
            for i in 0..n {
                out[n + a] += fr.nn(a, i).value() * coord[i];
            }
        }
        out
    };

    let zv: Vec<f64> = zj.iter().map(Jet::value).collect();
    let mut nested = Vec::with_capacity(d * d);
    let mut contracted = Vec::with_capacity(d * d);
    for g in 0..d {
        for dl in 0..d {
            let b = bracket(dl, g);
            let v: Vec<f64> = (0..d)
                .map(|a| {
                    let mut s = ddz(dl, g, a) - ddz(g, dl, a);
                    for nu in 0..d {
                        s -= b[nu] * dz[nu][a].value();
                    }
                    s
                })
                .collect();
            nested.push(v);
            contracted.push(curv.apply(g, dl, &zv));
        }
    }
    Ok(OracleSample { nested, contracted })
}

/// Ricci, scalar and Einstein data of a d-connection at a point.
#[derive(Debug, Clone)]
pub struct RicciData {
    /// `R_{βγ} = R^α_{βγα}`, `(n+m)²` row-major.
    pub ricci: Vec<Vec<f64>>,
    /// `R_ij, R_ia, R_ai, R_ab`.
    pub blocks: Vec<DTensor>,
    pub scalar: f64,
    /// `G_{αβ} = R_{αβ} − ½ g_{αβ} R`.
    pub einstein: Vec<Vec<f64>>,
    pub einstein_blocks: Vec<DTensor>,
    /// `g^{αβ} G_{αβ} − R (1 − (n+m)/2)`.
    pub trace_residual: f64,
}

pub fn ricci_scalar_einstein(co: &Coefficients, curv: &Curvature) -> Result<RicciData> {
    let (n, m) = (co.n(), co.m());
    let d = n + m;
    let mj = co.metric_or_err()?;
    let ricci: Vec<Vec<f64>> = (0..d)
        .map(|b| {
            (0..d)
                .map(|g| (0..d).map(|a| curv.get(a, b, g, a)).sum())
                .collect()
        })
        .collect();
    let gv = |a: usize, b: usize| mj.adapted(a, b).map_or(0.0, |j| j.value());
    let giv = |a: usize, b: usize| mj.adapted_inv(a, b).map_or(0.0, |j| j.value());
    let mut scalar = 0.0;
    for a in 0..d {
        for b in 0..d {
            scalar += giv(a, b) * ricci[a][b];
        }
    }
    let einstein: Vec<Vec<f64>> = (0..d)
        .map(|a| {
            (0..d)
                .map(|b| ricci[a][b] - 0.5 * gv(a, b) * scalar)
                .collect()
        })
        .collect();
    let mut trace = 0.0;
    for a in 0..d {
        for b in 0..d {
            trace += giv(a, b) * einstein[a][b];
        }
    }
    let trace_residual = (trace - scalar * (1.0 - d as f64 / 2.0)).abs();
    let split = |name: &str, t: &[Vec<f64>]| -> Vec<DTensor> {
        let (hl, vl) = (Slot::HL, Slot::VL);
        let sfx = |s: &str| format!("{name}_{s}");
        vec![
            DTensor::from_fn(&sfx("ij"), &[hl, hl], n, m, |x| t[x[0]][x[1]]),
            DTensor::from_fn(&sfx("ia"), &[hl, vl], n, m, |x| t[x[0]][n + x[1]]),
            DTensor::from_fn(&sfx("ai"), &[vl, hl], n, m, |x| t[n + x[0]][x[1]]),
            DTensor::from_fn(&sfx("ab"), &[vl, vl], n, m, |x| t[n + x[0]][n + x[1]]),
        ]
    };
    Ok(RicciData {
        blocks: split("R", &ricci),
        einstein_blocks: split("G", &einstein),
        ricci,
        scalar,
        einstein,
        trace_residual,
    })
}
