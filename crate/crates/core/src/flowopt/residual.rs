use std::fmt;

/// Largest residual seen in one constraint family.
#[derive(Clone, Debug, PartialEq)]
pub struct FamilyResidual {
    pub family: &'static str,
    pub max: f64,
    pub location: String,
}

/// Per-family constraint residuals of a candidate flow.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ResidualReport {
    pub families: Vec<FamilyResidual>,
    /// Every individual residual above zero, for diagnostics.
    pub details: Vec<(&'static str, String, f64)>,
}

impl ResidualReport {
    pub(crate) fn with_families(names: &[&'static str]) -> Self {
        Self {
            families: names
                .iter()
                .map(|f| FamilyResidual {
                    family: f,
                    max: 0.0,
                    location: String::new(),
                })
                .collect(),
            details: Vec::new(),
        }
    }

    pub(crate) fn record(
        &mut self,
        family: &'static str,
        location: impl FnOnce() -> String,
        value: f64,
    ) {
        let value = value.abs();
        if value == 0.0 {
            return;
        }
        let loc = location();
        if let Some(f) = self.families.iter_mut().find(|f| f.family == family) {
            if value > f.max {
                f.max = value;
                f.location = loc.clone();
            }
        }
        self.details.push((family, loc, value));
    }

    pub fn max(&self) -> f64 {
        self.families.iter().map(|f| f.max).fold(0.0, f64::max)
    }

    pub fn family(&self, name: &str) -> f64 {
        self.families
            .iter()
            .find(|f| f.family == name)
            .map_or(0.0, |f| f.max)
    }

    /// Residual recorded at an exact location, zero if none.
    pub fn at(&self, family: &str, location: &str) -> f64 {
        self.details
            .iter()
            .filter(|(f, l, _)| *f == family && l == location)
            .map(|(_, _, v)| *v)
            .fold(0.0, f64::max)
    }

    pub fn feasible(&self, tol: f64) -> bool {
        self.max() <= tol
    }

    /// Names of families whose residual exceeds `tol`.
    pub fn violated(&self, tol: f64) -> Vec<&'static str> {
        self.families
            .iter()
            .filter(|f| f.max > tol)
            .map(|f| f.family)
            .collect()
    }
}

impl fmt::Display for ResidualReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for fam in &self.families {
            writeln!(f, "{} max={:e} at {}", fam.family, fam.max, fam.location)?;
        }
        Ok(())
    }
}
