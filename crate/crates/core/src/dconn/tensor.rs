use std::fmt;

/// Horizontal or vertical index block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Block {
    H,
    V,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Position {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Slot {
    pub block: Block,
    pub position: Position,
}

impl Slot {
    pub const HU: Slot = Slot {
        block: Block::H,
        position: Position::Upper,
    };
    pub const HL: Slot = Slot {
        block: Block::H,
        position: Position::Lower,
    };
    pub const VU: Slot = Slot {
        block: Block::V,
        position: Position::Upper,
    };
    pub const VL: Slot = Slot {
        block: Block::V,
        position: Position::Lower,
    };
}

/// Numeric components of one block of a d-tensor at a point, row-major
/// over `slots`.
#[derive(Debug, Clone, PartialEq)]
pub struct DTensor {
    name: String,
    slots: Vec<Slot>,
    extents: Vec<usize>,
    data: Vec<f64>,
}

impl DTensor {
    pub fn zeros(name: &str, slots: &[Slot], n: usize, m: usize) -> Self {
        let extents: Vec<usize> = slots
            .iter()
            .map(|s| match s.block {
                Block::H => n,
                Block::V => m,
            })
            .collect();
        let len = extents.iter().product();
        Self {
            name: name.to_string(),
            slots: slots.to_vec(),
            extents,
            data: vec![0.0; len],
        }
    }

    /// Fills every component from `f(multi_index)`.
    pub fn from_fn(
        name: &str,
        slots: &[Slot],
        n: usize,
        m: usize,
        mut f: impl FnMut(&[usize]) -> f64,
    ) -> Self {
        let mut t = Self::zeros(name, slots, n, m);
        let mut idx = vec![0; slots.len()];
        for k in 0..t.data.len() {
            t.data[k] = f(&idx);
            for p in (0..idx.len()).rev() {
                idx[p] += 1;
                if idx[p] < t.extents[p] {
                    break;
                }
                idx[p] = 0;
            }
        }
        t
    }

    fn offset(&self, idx: &[usize]) -> usize {
        assert_eq!(idx.len(), self.extents.len(), "index rank mismatch");
        idx.iter().zip(&self.extents).fold(0, |acc, (&i, &e)| {
            assert!(i < e, "index out of range");
            acc * e + i
        })
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.data[self.offset(idx)]
    }

    pub fn set(&mut self, idx: &[usize], v: f64) {
        let k = self.offset(idx);
        self.data[k] = v;
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

impl fmt::Display for DTensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?} = {:?}", self.name, self.extents, self.data)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn row_major_layout() {
        let t = DTensor::from_fn("T", &[Slot::HU, Slot::VL, Slot::HL], 2, 3, |i| {
            (100 * i[0] + 10 * i[1] + i[2]) as f64
        });
        assert_eq!(t.extents(), &[2, 3, 2]);
        assert_eq!(t.get(&[1, 2, 0]), 120.0);
        assert_eq!(t.data().len(), 12);
        assert_eq!(t.max_abs(), 121.0);
    }
}
