//! Line-oriented scene files.
//!
//! ```text
//! # comment
//! [chart]
//! h = x1, x2
//! v = y1, y2
//! [constants]
//! k = 0.5
//! [lagrangian]
//! L = exp(2*x1)*(y1^2 + y2^2)
//! [window]
//! x1 = -1, 1, 4
//! ```
//!
//! Entries are `key = value`; keys are unique within a section and sections
//! may not repeat.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use crate::expr::{Chart, ScalarField};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("scene line {line}: {message}")]
pub struct SceneError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, SceneError> {
    Err(SceneError {
        line,
        message: message.into(),
    })
}

const SECTIONS: [&str; 7] = [
    "chart",
    "constants",
    "lagrangian",
    "metric",
    "recipe",
    "window",
    "options",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub line: usize,
}

/// Raw sections in file order, entries keyed by name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawScene {
    pub sections: BTreeMap<String, (usize, BTreeMap<String, Entry>)>,
}

impl RawScene {
    pub fn parse(text: &str) -> Result<Self, SceneError> {
        let mut out = RawScene::default();
        let mut current: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(rest) = body.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return err(line, "unterminated section header");
                };
                let name = name.trim().to_string();
                if !SECTIONS.contains(&name.as_str()) {
                    return err(line, format!("unknown section [{name}]"));
                }
                if out.sections.contains_key(&name) {
                    return err(line, format!("section [{name}] repeated"));
                }
                out.sections.insert(name.clone(), (line, BTreeMap::new()));
                current = Some(name);
                continue;
            }
            let Some(sec) = &current else {
                return err(line, "entry before any section header");
            };
            let Some((key, value)) = body.split_once('=') else {
                return err(line, "expected `key = value`");
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() || value.is_empty() {
                return err(line, "empty key or value");
            }
            let entries = &mut out.sections.get_mut(sec).expect("section exists").1;
            if entries.contains_key(&key) {
                return err(line, format!("key `{key}` repeated in [{sec}]"));
            }
            entries.insert(key, Entry { value, line });
        }
        Ok(out)
    }

    pub fn has(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    pub fn section(&self, name: &str) -> Option<&BTreeMap<String, Entry>> {
        self.sections.get(name).map(|(_, e)| e)
    }

    pub fn header_line(&self, name: &str) -> usize {
        self.sections.get(name).map_or(0, |(l, _)| *l)
    }
}

/// View of one section with typed accessors; tracks which keys were read so
/// unknown keys can be reported.
pub struct Section<'a> {
    pub name: &'a str,
    header: usize,
    entries: Option<&'a BTreeMap<String, Entry>>,
    used: std::cell::RefCell<Vec<String>>,
}

impl<'a> Section<'a> {
    pub fn new(raw: &'a RawScene, name: &'a str) -> Self {
        Self {
            name,
            header: raw.header_line(name),
            entries: raw.section(name),
            used: Default::default(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&'a Entry> {
        let e = self.entries?.get(key);
        if e.is_some() {
            self.used.borrow_mut().push(key.to_string());
        }
        e
    }

    pub fn require(&self, key: &str) -> Result<&'a Entry, SceneError> {
        match self.get(key) {
            Some(e) => Ok(e),
            None => err(self.header, format!("[{}] needs `{key}`", self.name)),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, SceneError> {
        self.get(key).map_or(Ok(default), parse_f64)
    }

    pub fn keys(&self) -> Vec<&'a str> {
        self.entries
            .map(|e| e.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    /// Fails on keys never read.
    pub fn finish(&self) -> Result<(), SceneError> {
        let used = self.used.borrow();
        if let Some(entries) = self.entries {
            for (k, e) in entries {
                if !used.contains(k) {
                    return err(e.line, format!("unknown key `{k}` in [{}]", self.name));
                }
            }
        }
        Ok(())
    }
}

pub fn parse_f64(e: &Entry) -> Result<f64, SceneError> {
    match e.value.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => err(e.line, format!("`{}` is not a finite number", e.value)),
    }
}

pub fn parse_usize(e: &Entry) -> Result<usize, SceneError> {
    e.value.parse::<usize>().or_else(|_| {
        err(
            e.line,
            format!("`{}` is not a nonnegative integer", e.value),
        )
    })
}

pub fn split_list(e: &Entry) -> Vec<&str> {
    e.value.split(',').map(str::trim).collect()
}

/// Parsed scene: chart, constants and the raw sections for the drivers.
#[derive(Debug, Clone)]
pub struct Scene {
    pub raw: RawScene,
    pub chart: Arc<Chart>,
    pub constants: BTreeMap<String, f64>,
    pub driver: Driver,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Driver {
    Lagrangian,
    Metric,
    Recipe,
}

impl fmt::Display for Driver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Driver::Lagrangian => "lagrangian",
            Driver::Metric => "metric",
            Driver::Recipe => "recipe",
        })
    }
}

impl Scene {
    pub fn parse(
        text: &str,
        default_chart: impl Fn(&RawScene) -> Option<Arc<Chart>>,
    ) -> Result<Self, SceneError> {
        let raw = RawScene::parse(text)?;
        let drivers: Vec<Driver> = [
            ("lagrangian", Driver::Lagrangian),
            ("metric", Driver::Metric),
            ("recipe", Driver::Recipe),
        ]
        .into_iter()
        .filter(|(s, _)| raw.has(s))
        .map(|(_, d)| d)
        .collect();
        let driver = match drivers.as_slice() {
            [d] => *d,
            [] => return err(0, "scene needs one of [lagrangian], [metric], [recipe]"),
            _ => {
                return err(
                    0,
                    "scene has more than one of [lagrangian], [metric], [recipe]",
                )
            }
        };
        let chart = if raw.has("chart") {
            let s = Section::new(&raw, "chart");
            let h = s.require("h")?;
            let v = s.require("v")?;
            s.finish()?;
            let names: Vec<String> = split_list(h)
                .into_iter()
                .chain(split_list(v))
                .map(String::from)
                .collect();
            let n = split_list(h).len();
            match Chart::new(n, names.len() - n, names) {
                Ok(c) => Arc::new(c),
                Err(e) => return err(h.line, e.to_string()),
            }
        } else if let Some(c) = default_chart(&raw) {
            c
        } else {
            return err(0, "scene needs a [chart] section");
        };
        let mut constants = BTreeMap::new();
        if let Some(entries) = raw.section("constants") {
            for (k, e) in entries {
                if chart.index_of(k).is_some() {
                    return err(e.line, format!("constant `{k}` shadows a coordinate"));
                }
                constants.insert(k.clone(), parse_f64(e)?);
            }
        }
        Ok(Self {
            raw,
            chart,
            constants,
            driver,
        })
    }

    pub fn section<'a>(&'a self, name: &'a str) -> Section<'a> {
        Section::new(&self.raw, name)
    }

    pub fn field(&self, e: &Entry) -> Result<ScalarField, SceneError> {
        self.field_str(&e.value, e.line)
    }

    pub fn field_str(&self, s: &str, line: usize) -> Result<ScalarField, SceneError> {
        ScalarField::parse_with_constants(s, &self.chart, &self.constants)
            .or_else(|e| err(line, e.to_string()))
    }

    /// Comma-separated list of fields of exactly `len` entries.
    pub fn fields(&self, e: &Entry, len: usize) -> Result<Vec<ScalarField>, SceneError> {
        let parts = split_list(e);
        if parts.len() != len {
            return err(e.line, format!("expected {len} comma-separated entries"));
        }
        parts
            .into_iter()
            .map(|p| self.field_str(p, e.line))
            .collect()
    }

    /// A number, allowing named constants.
    pub fn number(&self, e: &Entry) -> Result<f64, SceneError> {
        self.number_str(&e.value, e.line)
    }

    pub fn number_str(&self, s: &str, line: usize) -> Result<f64, SceneError> {
        let f = self.field_str(s, line)?;
        if !f.is_constant() {
            return err(line, format!("`{s}` must be a constant"));
        }
        f.eval_coords(&vec![0.0; self.chart.dim()])
            .or_else(|e| err(line, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let s =
            RawScene::parse("# top\n[chart]\nh = x1 # trailing\nv = y1\n\n[options]\ntol = 1e-8\n")
                .unwrap();
        assert_eq!(s.section("chart").unwrap()["h"].value, "x1");
        assert_eq!(s.section("options").unwrap()["tol"].line, 7);
    }

    #[test]
    fn malformed_scenes() {
        for bad in [
            "x = 1",
            "[chart\nh = x",
            "[nope]",
            "[chart]\nh\n",
            "[chart]\n[chart]",
            "[chart]\nh = 1\nh = 2",
        ] {
            assert!(RawScene::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn single_driver_required() {
        let none = "[chart]\nh = x1\nv = y1\n";
        assert!(Scene::parse(none, |_| None).is_err());
        let two = "[chart]\nh = x1\nv = y1\n[lagrangian]\nL = y1^2\n[metric]\ng[1,1] = 1\n";
        assert!(Scene::parse(two, |_| None).is_err());
        let ok = "[chart]\nh = x1\nv = y1\n[constants]\nk = 2\n[lagrangian]\nL = k*y1^2\n";
        let s = Scene::parse(ok, |_| None).unwrap();
        assert_eq!(s.driver, Driver::Lagrangian);
        let e = &s.raw.section("lagrangian").unwrap()["L"];
        assert_eq!(s.field(e).unwrap().eval_coords(&[0.0, 3.0]).unwrap(), 18.0);
    }
}
