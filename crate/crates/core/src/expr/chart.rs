use super::ExprError;

/// Largest total dimension `n + m` supported by the jet machinery.
pub const MAX_DIM: usize = 6;

/// Local coordinates `u = (x^1..x^n, y^1..y^m)` split into horizontal and
/// vertical groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Chart {
    n: usize,
    m: usize,
    names: Vec<String>,
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Chart {
    pub fn new(n: usize, m: usize, names: Vec<String>) -> Result<Self, ExprError> {
        if n == 0 || m == 0 {
            return Err(ExprError::InvalidChart(format!(
                "need n >= 1 and m >= 1, got n={n}, m={m}"
            )));
        }
        if n + m > MAX_DIM {
            return Err(ExprError::InvalidChart(format!(
                "dimension {} exceeds the supported maximum {MAX_DIM}",
                n + m
            )));
        }
        if names.len() != n + m {
            return Err(ExprError::InvalidChart(format!(
                "expected {} names, got {}",
                n + m,
                names.len()
            )));
        }
        for (k, name) in names.iter().enumerate() {
            if !is_identifier(name) {
                return Err(ExprError::InvalidChart(format!(
                    "`{name}` is not an identifier"
                )));
            }
            if super::Func::from_name(name).is_some() || name == "integrate" {
                return Err(ExprError::InvalidChart(format!(
                    "`{name}` is a reserved name"
                )));
            }
            if names[..k].contains(name) {
                return Err(ExprError::InvalidChart(format!(
                    "duplicate coordinate `{name}`"
                )));
            }
        }
        Ok(Self { n, m, names })
    }

    /// Builds a chart from string slices.
    pub fn with_names(h: &[&str], v: &[&str]) -> Result<Self, ExprError> {
        let names = h.iter().chain(v).map(|s| s.to_string()).collect();
        Self::new(h.len(), v.len(), names)
    }

    /// Tangent-bundle chart `(x1..xn, y1..yn)`.
    pub fn tangent(n: usize) -> Result<Self, ExprError> {
        let names = (1..=n)
            .map(|i| format!("x{i}"))
            .chain((1..=n).map(|i| format!("y{i}")))
            .collect();
        Self::new(n, n, names)
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

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|s| s == name)
    }

    /// Chart index of the `a`-th vertical coordinate.
    pub fn v_index(&self, a: usize) -> usize {
        self.n + a
    }
}
