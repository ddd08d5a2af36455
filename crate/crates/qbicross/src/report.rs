//! Shared pass/fail report records and the run configuration printed with every report.

use serde::Serialize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One checked axiom or condition.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub axiom: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<String>,
    pub degree: u32,
    #[serde(rename = "paramOrder")]
    pub param_order: u32,
}

impl CheckResult {
    pub fn new(axiom: &str, failure: Option<String>, degree: u32, param_order: u32) -> Self {
        CheckResult {
            axiom: axiom.to_string(),
            status: if failure.is_some() { Status::Fail } else { Status::Pass },
            counterexample: failure,
            degree,
            param_order,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub subject: String,
    pub results: Vec<CheckResult>,
}

impl Report {
    pub fn new(subject: &str) -> Self {
        Report {
            subject: subject.to_string(),
            results: Vec::new(),
        }
    }

    pub fn passed(&self) -> bool {
        self.results.iter().all(CheckResult::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.results.iter().filter(|r| !r.passed())
    }

    pub fn get(&self, axiom: &str) -> Option<&CheckResult> {
        self.results.iter().find(|r| r.axiom == axiom)
    }

    pub fn extend(&mut self, other: Report) {
        self.results.extend(other.results);
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.subject);
        for r in &self.results {
            let status = if r.passed() { "pass" } else { "FAIL" };
            s += &format!(
                "  {:<28} {status}  (degree {}, order {})",
                r.axiom, r.degree, r.param_order
            );
            if let Some(c) = &r.counterexample {
                s += &format!("  counterexample: {c}");
            }
            s.push('\n');
        }
        s
    }
}

/// Every tunable default in one place; serialized at the top of each report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub subcommand: String,
    pub algebra: String,
    pub degree: u32,
    pub zorder: u32,
    pub bottom: u32,
    pub series_order: u32,
    pub z: f64,
    pub kappa: f64,
    pub step: f64,
    pub blowup_norm: f64,
    pub blowup_error: f64,
    pub tolerance: f64,
    /// Numeric value substituted for the deformation parameter.
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub character: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub times: Vec<f64>,
    pub format: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

impl RunConfig {
    /// `key = value` lines for text reports.
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# {} {}\n# degree = {}, zorder = {}, bottom = {}, series order = {}\n",
            self.subcommand, self.algebra, self.degree, self.zorder, self.bottom, self.series_order
        );
        s += &format!(
            "# z = {}, kappa = {}, value = {}, step = {}, tolerance = {:e}\n",
            self.z, self.kappa, self.value, self.step, self.tolerance
        );
        if let Some(c) = &self.character {
            s += &format!("# character = {c:?}\n");
        }
        if !self.times.is_empty() {
            s += &format!("# times = {:?}\n", self.times);
        }
        s
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            subcommand: String::new(),
            algebra: String::new(),
            degree: 4,
            zorder: 8,
            bottom: 2,
            series_order: 8,
            z: 0.3,
            kappa: 1.0,
            step: 1e-3,
            blowup_norm: 1e9,
            blowup_error: 1e-4,
            tolerance: 1e-8,
            value: 0.3,
            character: None,
            times: Vec::new(),
            format: "text".into(),
            output: None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schema_field_names() {
        let r = CheckResult::new("antipode-left", Some("Pp".into()), 3, 4);
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["axiom"], "antipode-left");
        assert_eq!(v["status"], "fail");
        assert_eq!(v["counterexample"], "Pp");
        assert_eq!(v["degree"], 3);
        assert_eq!(v["paramOrder"], 4);
        let ok = serde_json::to_value(CheckResult::new("counit-left", None, 3, 4)).unwrap();
        assert!(ok.get("counterexample").is_none());
    }
}
