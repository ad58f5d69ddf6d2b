use crate::numerics::Jet;
use crate::Result;

/// Index into the horizontal block, `0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HIdx(pub usize);

/// Index into the vertical block, `0..m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VIdx(pub usize);

/// A frame index tagged by block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameIndex {
    H(HIdx),
    V(VIdx),
}

impl FrameIndex {
    pub fn h(i: usize) -> Self {
        FrameIndex::H(HIdx(i))
    }

    pub fn v(a: usize) -> Self {
        FrameIndex::V(VIdx(a))
    }

    /// Position in the combined `0..n+m` range.
    pub fn flat(self, n: usize) -> usize {
        match self {
            FrameIndex::H(HIdx(i)) => i,
            FrameIndex::V(VIdx(a)) => n + a,
        }
    }

    pub fn from_flat(n: usize, k: usize) -> Self {
        if k < n {
            Self::h(k)
        } else {
            Self::v(k - n)
        }
    }

    pub fn is_h(self) -> bool {
        matches!(self, FrameIndex::H(_))
    }
}

/// N-connection jets at one point, with the frame operators built on them.
#[derive(Debug, Clone)]
pub struct AdaptedFrame {
    n: usize,
    m: usize,
    /// `[a][i] = N_i^a`
    nj: Vec<Vec<Jet>>,
}

impl AdaptedFrame {
    pub fn new(n: usize, m: usize, nj: Vec<Vec<Jet>>) -> Result<Self> {
        Ok(Self { n, m, nj })
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

    pub fn order(&self) -> u8 {
        self.nj
            .first()
            .and_then(|r| r.first())
            .map_or(2, Jet::order)
    }

    /// Jet of `N_i^a`.
    pub fn nn(&self, a: usize, i: usize) -> &Jet {
        &self.nj[a][i]
    }

    /// `e_α f`, one order lower than `f`.
    pub fn e(&self, f: &Jet, alpha: usize) -> Jet {
        let d = f.partial(alpha);
        if alpha >= self.n {
            return d;
        }
        let ord = d.order();
        (0..self.m).fold(d, |acc, a| {
            acc - self.nj[a][alpha].truncate(ord) * f.partial(self.n + a)
        })
    }

    /// `∂N_i^a/∂y^b` as a jet one order lower than N.
    pub fn dn_dy(&self, a: usize, i: usize, b: usize) -> Jet {
        self.nj[a][i].partial(self.n + b)
    }

    /// `Ω^a_{ij}` values, `[a][i][j]`.
    pub fn omega(&self) -> Vec<Vec<Vec<f64>>> {
        let (n, m) = (self.n, self.m);
        let mut om = vec![vec![vec![0.0; n]; n]; m];
        for a in 0..m {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut w = self.nj[a][i].d(j) - self.nj[a][j].d(i);
                    for b in 0..m {
                        w += self.nj[b][i].value() * self.nj[a][j].d(n + b)
                            - self.nj[b][j].value() * self.nj[a][i].d(n + b);
                    }
                    om[a][i][j] = w;
                }
            }
        }
        om
    }

    /// `W^γ_{αβ}` with `[e_α, e_β] = W^γ_{αβ} e_γ`, indexed `[γ][α][β]`.
    pub fn anholonomy(&self) -> Vec<Vec<Vec<f64>>> {
        let (n, m) = (self.n, self.m);
        let d = n + m;
        let mut w = vec![vec![vec![0.0; d]; d]; d];
        let om = self.omega();
        for a in 0..m {
            for i in 0..n {
                for j in 0..n {
                    w[n + a][i][j] = om[a][i][j];
                }
            }
        }
        for b in 0..m {
            for i in 0..n {
                for a in 0..m {
                    let dn = self.nj[b][i].d(n + a);
                    w[n + b][i][n + a] = dn;
                    w[n + b][n + a][i] = -dn;
                }
            }
        }
        w
    }
}
