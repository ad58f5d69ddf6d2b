use std::fmt::Write as _;

use serde::Serialize;

/// One residual check aggregated over sample points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub check: String,
    pub anchor: String,
    pub max: f64,
    pub mean: f64,
    pub worst_point: Option<Vec<f64>>,
    pub tol: f64,
    pub samples: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FieldDump {
    pub name: String,
    pub expr: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Machine- and human-readable outcome of a command. Key order in JSON
/// follows field order here.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub driver: String,
    pub seed: u64,
    pub tol: f64,
    pub pass: bool,
    pub rows: Vec<Row>,
    pub errors: Vec<String>,
    pub notes: Vec<String>,
    pub fields: Vec<FieldDump>,
    pub tables: Vec<Table>,
}

impl Report {
    pub fn new(command: &str, driver: &str, seed: u64, tol: f64) -> Self {
        Self {
            command: command.to_string(),
            driver: driver.to_string(),
            seed,
            tol,
            pass: true,
            rows: vec![],
            errors: vec![],
            notes: vec![],
            fields: vec![],
            tables: vec![],
        }
    }

    pub fn push(&mut self, check: Check) {
        self.rows.push(check.finish(self.tol));
    }

    pub fn field(&mut self, name: impl Into<String>, expr: impl ToString) {
        self.fields.push(FieldDump {
            name: name.into(),
            expr: expr.to_string(),
        });
    }

    pub fn error(&mut self, e: impl Into<String>) {
        self.errors.push(e.into());
    }

    /// Folds another report's rows and messages into this one. Rows and
    /// errors already present (same check and anchor, same message) are
    /// dropped, since both suites sample the same points.
    pub fn absorb(&mut self, other: Report) {
        for r in other.rows {
            if !self
                .rows
                .iter()
                .any(|x| x.check == r.check && x.anchor == r.anchor)
            {
                self.rows.push(r);
            }
        }
        for e in other.errors {
            if !self.errors.contains(&e) {
                self.errors.push(e);
            }
        }
        self.notes.extend(other.notes);
        self.fields.extend(other.fields);
        self.tables.extend(other.tables);
    }

    /// Sets `pass`: every row passes and no errors were recorded.
    pub fn seal(mut self) -> Self {
        self.pass = self.errors.is_empty() && self.rows.iter().all(|r| r.pass);
        self
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("check,anchor,max,mean,worst_point,tol,samples,pass\n");
        for r in &self.rows {
            let point = r
                .worst_point
                .as_ref()
                .map(|p| {
                    p.iter()
                        .map(|x| format!("{x}"))
                        .collect::<Vec<_>>()
                        .join(";")
                })
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{:e},{:e},{},{:e},{},{}",
                csv_quote(&r.check),
                csv_quote(&r.anchor),
                r.max,
                r.mean,
                point,
                r.tol,
                r.samples,
                r.pass
            );
        }
        s
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        let _ = writeln!(
            s,
            "{} ({} scene, seed {}, tol {:e}): {verdict}",
            self.command, self.driver, self.seed, self.tol
        );
        let w = self
            .rows
            .iter()
            .map(|r| r.check.chars().count())
            .max()
            .unwrap_or(5)
            .max(5);
        let _ = writeln!(
            s,
            "  {:<w$}  {:>10}  {:>10}  {:>7}  result",
            "check", "max", "mean", "samples"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "  {:<w$}  {:>10.3e}  {:>10.3e}  {:>7}  {}   [{}]",
                r.check,
                r.max,
                r.mean,
                r.samples,
                if r.pass { "pass" } else { "FAIL" },
                r.anchor
            );
        }
        for e in &self.errors {
            let _ = writeln!(s, "  error: {e}");
        }
        for n in &self.notes {
            let _ = writeln!(s, "  note: {n}");
        }
        for f in &self.fields {
            let _ = writeln!(s, "  {} = {}", f.name, f.expr);
        }
        for t in &self.tables {
            let _ = writeln!(s, "  table {} ({} rows)", t.name, t.rows.len());
            let _ = writeln!(s, "    {}", t.columns.join("  "));
            for row in &t.rows {
                let cells: Vec<String> = row.iter().map(|x| format!("{x:.6e}")).collect();
                let _ = writeln!(s, "    {}", cells.join("  "));
            }
        }
        s
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Accumulates the per-point values of one check in sample order.
#[derive(Debug, Clone)]
pub struct Check {
    name: String,
    anchor: String,
    max: f64,
    sum: f64,
    worst: Option<Vec<f64>>,
    samples: usize,
}

impl Check {
    pub fn new(name: &str, anchor: &str) -> Self {
        Self {
            name: name.to_string(),
            anchor: anchor.to_string(),
            max: 0.0,
            sum: 0.0,
            worst: None,
            samples: 0,
        }
    }

    /// Records `|x|` at `point`; NaN counts as the worst possible value.
    pub fn add(&mut self, x: f64, point: &[f64]) {
        let a = if x.is_nan() { f64::INFINITY } else { x.abs() };
        self.samples += 1;
        self.sum += a;
        if self.worst.is_none() || a > self.max {
            self.max = a;
            self.worst = Some(point.to_vec());
        }
    }

    fn finish(self, tol: f64) -> Row {
        let mean = if self.samples == 0 {
            0.0
        } else {
            self.sum / self.samples as f64
        };
        Row {
            check: self.name,
            anchor: self.anchor,
            max: self.max,
            mean,
            worst_point: self.worst,
            tol,
            samples: self.samples,
            pass: self.samples > 0 && self.max <= tol,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn check_aggregation() {
        let mut c = Check::new("c", "a");
        c.add(-2.0, &[1.0]);
        c.add(1.0, &[2.0]);
        c.add(2.0, &[3.0]);
        let r = c.finish(2.0);
        assert_eq!(
            (r.max, r.mean, r.samples, r.pass),
            (2.0, 5.0 / 3.0, 3, true)
        );
        assert_eq!(r.worst_point, Some(vec![1.0]));
        assert!(!Check::new("e", "a").finish(1.0).pass);
        let mut c = Check::new("n", "a");
        c.add(f64::NAN, &[0.0]);
        assert!(!c.finish(1.0).pass);
    }

    #[test]
    fn renderings() {
        let mut r = Report::new("verify", "metric", 0, 1e-6);
        let mut c = Check::new("Dg = 0", "metricity, with comma");
        c.add(1e-9, &[0.5, 1.0]);
        r.push(c);
        let r = r.seal();
        assert!(r.pass);
        let csv = r.to_csv();
        assert!(csv
            .lines()
            .nth(1)
            .unwrap()
            .starts_with("Dg = 0,\"metricity, with comma\",1e-9"));
        let json = r.to_json();
        assert!(json.find("\"command\"").unwrap() < json.find("\"rows\"").unwrap());
        assert!(r.to_text().contains("PASS"));
    }

    #[test]
    fn absorb_skips_repeated_rows() {
        let mk = |v: f64| {
            let mut r = Report::new("verify", "lagrangian", 0, 1.0);
            let mut c = Check::new("Dg = 0", "metricity");
            c.add(v, &[0.0]);
            r.push(c);
            r.error("e");
            r
        };
        let mut a = mk(0.5);
        a.absorb(mk(0.5));
        assert_eq!((a.rows.len(), a.errors.len()), (1, 1));
    }
}
