use std::collections::BTreeMap;

use serde::Serialize;

use crate::fit::FitResult;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

/// A named rectangular table with one header row.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width in table {}", self.name);
        self.rows.push(row);
    }

    pub fn push_nums(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&v| Cell::Num(v)).collect());
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedFit {
    pub name: String,
    pub fit: FitResult,
}

/// Deviation between two engines (or an engine and a reference value),
/// checked against a declared tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub name: String,
    pub max_deviation: f64,
    pub rms_deviation: f64,
    pub tolerance: f64,
    pub samples: usize,
    pub passed: bool,
}

impl Comparison {
    pub fn from_deviations(name: impl Into<String>, devs: &[f64], tolerance: f64) -> Self {
        let max = devs.iter().copied().fold(0.0, f64::max);
        let rms = if devs.is_empty() {
            0.0
        } else {
            (devs.iter().map(|d| d * d).sum::<f64>() / devs.len() as f64).sqrt()
        };
        let finite = devs.iter().all(|d| d.is_finite());
        Self {
            name: name.into(),
            max_deviation: max,
            rms_deviation: rms,
            tolerance,
            samples: devs.len(),
            passed: finite && !devs.is_empty() && max <= tolerance,
        }
    }

    /// A single scalar deviation.
    pub fn scalar(name: impl Into<String>, deviation: f64, tolerance: f64) -> Self {
        Self::from_deviations(name, &[deviation.abs()], tolerance)
    }
}

/// Everything one run produces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ArtifactBundle {
    pub name: String,
    pub metadata: BTreeMap<String, String>,
    pub tables: Vec<Table>,
    pub fits: Vec<NamedFit>,
    pub comparisons: Vec<Comparison>,
}

impl ArtifactBundle {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            metadata: BTreeMap::new(),
            tables: Vec::new(),
            fits: Vec::new(),
            comparisons: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.insert(key.to_string(), value.to_string());
    }

    pub fn fit(&mut self, name: &str, fit: FitResult) {
        self.fits.push(NamedFit {
            name: name.to_string(),
            fit,
        });
    }

    pub fn passed(&self) -> bool {
        self.comparisons.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Comparison> {
        self.comparisons.iter().filter(|c| !c.passed)
    }

    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }

    pub fn comparison(&self, name: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.name == name)
    }

    pub fn fit_named(&self, name: &str) -> Option<&FitResult> {
        self.fits.iter().find(|f| f.name == name).map(|f| &f.fit)
    }

    /// Appends every part of `other`, prefixing its names.
    pub fn absorb(&mut self, prefix: &str, other: ArtifactBundle) {
        for (k, v) in other.metadata {
            self.metadata.insert(format!("{prefix}.{k}"), v);
        }
        for mut t in other.tables {
            t.name = format!("{prefix}_{}", t.name);
            self.tables.push(t);
        }
        for mut f in other.fits {
            f.name = format!("{prefix}.{}", f.name);
            self.fits.push(f);
        }
        for mut c in other.comparisons {
            c.name = format!("{prefix}.{}", c.name);
            self.comparisons.push(c);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparison_statistics() {
        let c = Comparison::from_deviations("x", &[0.1, 0.3, 0.2], 0.25);
        assert!(!c.passed);
        assert_eq!(c.max_deviation, 0.3);
        assert!((c.rms_deviation - (0.14f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!(!Comparison::from_deviations("e", &[], 1.0).passed);
        assert!(!Comparison::from_deviations("n", &[f64::NAN], 1.0).passed);
        assert!(Comparison::scalar("s", -0.1, 0.1).passed);
    }
}
