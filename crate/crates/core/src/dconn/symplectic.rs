use super::connection::Coefficients;
use super::metric::MetricJets;
use crate::numerics::{invert_values, JetMatrix};
use crate::{Error, Result};

/// Adapted components `θ_{αβ} = θ(e_α, e_β)` of `θ(X, Y) = g(FX, Y)` with
/// `F e_i = e_{n+i}`, `F e_{n+i} = −e_i`: `θ_{i,n+j} = h_ij`,
/// `θ_{n+i,j} = −g_ij`. Requires `m = n`.
pub fn theta_components(mj: &MetricJets) -> Result<JetMatrix> {
    let (n, m) = (mj.n(), mj.m());
    if n != m {
        return Err(Error::Shape("almost complex structure needs m = n".into()));
    }
    let z = mj.g[(0, 0)] * 0.0;
    Ok(JetMatrix::from_fn(2 * n, 2 * n, |a, b| {
        match (a < n, b < n) {
            (true, false) => mj.h[(a, b - n)],
            (false, true) => -mj.g[(a - n, b)],
            _ => z,
        }
    }))
}

/// `(D_γ t)_{αβ} = e_γ t_αβ − Γ[μ][α][γ] t_μβ − Γ[μ][β][γ] t_αμ`, max over
/// all indices.
fn covariant_residual(co: &Coefficients, frame: &crate::nconn::AdaptedFrame, t: &JetMatrix) -> f64 {
    let d = co.dim();
    let mut worst: f64 = 0.0;
    for g in 0..d {
        for a in 0..d {
            for b in 0..d {
                let mut s = frame.e(&t[(a, b)], g).value();
                for mu in 0..d {
                    s -= co.value(mu, a, g) * t[(mu, b)].value()
                        + co.value(mu, b, g) * t[(a, mu)].value();
                }
                worst = worst.max(s.abs());
            }
        }
    }
    worst
}

/// Max `|e_γ θ_αβ + e_α θ_γβ + e_β θ_αγ|`.
pub fn cyclic_residual(frame: &crate::nconn::AdaptedFrame, theta: &JetMatrix) -> f64 {
    let d = theta.rows();
    let e = |a: usize, b: usize, g: usize| frame.e(&theta[(a, b)], g).value();
    let mut worst: f64 = 0.0;
    for g in 0..d {
        for a in 0..d {
            for b in 0..d {
                worst = worst.max((e(a, b, g) + e(g, b, a) + e(a, g, b)).abs());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompatResiduals {
    pub dg: f64,
    pub dtheta: f64,
    pub cyclic: f64,
}

/// `max |Dg|`, `max |Dθ|` and the cyclic (N-symplectic) residual.
pub fn compat_residuals(co: &Coefficients, theta: Option<&JetMatrix>) -> Result<CompatResiduals> {
    let mj = co.metric_or_err()?;
    let d = co.dim();
    let z = mj.g[(0, 0)] * 0.0;
    let g = JetMatrix::from_fn(d, d, |a, b| mj.adapted(a, b).unwrap_or(z));
    let dg = covariant_residual(co, &mj.frame, &g);
    let (dtheta, cyclic) = match theta {
        Some(t) => (
            covariant_residual(co, &mj.frame, t),
            cyclic_residual(&mj.frame, t),
        ),
        None => (f64::NAN, f64::NAN),
    };
    Ok(CompatResiduals { dg, dtheta, cyclic })
}

/// Symmetric part of a connection and its reconstruction from `θ`.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// `S^τ_{γβ} = ½(Γ^τ_{γβ} + Γ^τ_{βγ})`, flat `[τ][γ][β]`.
    pub symmetric: Vec<f64>,
    /// `Γ_{αγβ} = θ_ατ Γ^τ_{γβ}`, flat `[α][γ][β]`.
    pub lowered: Vec<f64>,
    /// `½(e_α θ_γβ + e_γ θ_αβ − e_β θ_αγ) + S_αγβ − S_γβα + S_βγα`.
    pub reconstructed: Vec<f64>,
    pub residual: f64,
    /// Same with the sign of the `e_γ θ_αβ` term flipped.
    pub residual_flipped: f64,
    /// `−e_β θ_αγ + S_αγβ − S_γβα + S_βγα`, valid when the cyclic residual
    /// vanishes.
    pub residual_cyclic_branch: f64,
    pub cyclic: f64,
    /// Max `|Γ^τ_{γβ}|` recovered by raising the reconstruction with `θ^{-1}`
    /// minus the original.
    pub raised_residual: f64,
}

pub fn symmetrize_reconstruct(co: &Coefficients, theta: &JetMatrix) -> Result<Reconstruction> {
    let mj = co.metric_or_err()?;
    let fr = &mj.frame;
    let d = co.dim();
    let tv = theta.values();
    let tinv = invert_values(&tv)
        .map_err(|_| Error::Degenerate("θ is degenerate at this point".into()))?;
    let idx = |a: usize, b: usize, c: usize| (a * d + b) * d + c;
    // Γ^τ_{γβ} with the derivative index first, i.e. Γ[τ][β][γ].
    let up = |t: usize, g: usize, b: usize| co.value(t, b, g);
    let mut symmetric = vec![0.0; d * d * d];
    let mut lowered = vec![0.0; d * d * d];
    for t in 0..d {
        for g in 0..d {
            for b in 0..d {
                symmetric[idx(t, g, b)] = 0.5 * (up(t, g, b) + up(t, b, g));
            }
        }
    }
    let mut s_low = vec![0.0; d * d * d];
    for a in 0..d {
        for g in 0..d {
            for b in 0..d {
                let mut l = 0.0;
                let mut s = 0.0;
                for t in 0..d {
                    l += tv[a][t] * up(t, g, b);
                    s += tv[a][t] * symmetric[idx(t, g, b)];
                }
                lowered[idx(a, g, b)] = l;
                s_low[idx(a, g, b)] = s;
            }
        }
    }
    let e = |a: usize, b: usize, g: usize| fr.e(&theta[(a, b)], g).value();
    let cyclic = cyclic_residual(fr, theta);
    let mut reconstructed = vec![0.0; d * d * d];
    let (mut residual, mut residual_flipped, mut residual_cyclic_branch) = (0.0f64, 0.0f64, 0.0f64);
    for a in 0..d {
        for g in 0..d {
            for b in 0..d {
                let s_terms = s_low[idx(a, g, b)] - s_low[idx(g, b, a)] + s_low[idx(b, g, a)];
                let r = 0.5 * (e(g, b, a) + e(a, b, g) - e(a, g, b)) + s_terms;
                let r_flip = 0.5 * (e(g, b, a) - e(a, b, g) - e(a, g, b)) + s_terms;
                let r_cyc = -e(a, g, b) + s_terms;
                let truth = lowered[idx(a, g, b)];
                reconstructed[idx(a, g, b)] = r;
                residual = residual.max((r - truth).abs());
                residual_flipped = residual_flipped.max((r_flip - truth).abs());
                residual_cyclic_branch = residual_cyclic_branch.max((r_cyc - truth).abs());
            }
        }
    }
    let mut raised_residual: f64 = 0.0;
    for t in 0..d {
        for g in 0..d {
            for b in 0..d {
                let v: f64 = (0..d)
                    .map(|a| tinv[t][a] * reconstructed[idx(a, g, b)])
                    .sum();
                raised_residual = raised_residual.max((v - up(t, g, b)).abs());
            }
        }
    }
    Ok(Reconstruction {
        symmetric,
        lowered,
        reconstructed,
        residual,
        residual_flipped,
        residual_cyclic_branch,
        cyclic,
        raised_residual,
    })
}
