use serde::{Deserialize, Serialize};

use super::{Verdict, VerificationRecord};

pub const REPORT_VERSION: u32 = 1;

pub const CSV_HEADER: &str = "check_id,spec,param,bound_exp10,estimate,ci,verdict,seed";

/// Free-form per-group output that carries no verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub group: String,
    pub key: String,
    pub value: serde_json::Value,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub vacuous: usize,
    pub total: usize,
}

impl Summary {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a VerificationRecord>) -> Self {
        let mut s = Summary::default();
        for r in records {
            match r.verdict {
                Verdict::Pass => s.pass += 1,
                Verdict::Fail => s.fail += 1,
                Verdict::Vacuous => s.vacuous += 1,
            }
            s.total += 1;
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub suite: String,
    pub spec: String,
    pub check: String,
    #[serde(flatten)]
    pub counts: Summary,
}

impl GroupSummary {
    pub fn from_records(suite: &str, spec: &str, check: &str, records: &[VerificationRecord]) -> Self {
        GroupSummary { suite: suite.into(), spec: spec.into(), check: check.into(), counts: Summary::of(records) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub seed: u64,
    pub version: u32,
    pub records: Vec<VerificationRecord>,
    pub groups: Vec<GroupSummary>,
    pub summary: Summary,
    pub diagnostics: Vec<Diagnostic>,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl Report {
    pub fn new(
        name: &str,
        seed: u64,
        records: Vec<VerificationRecord>,
        groups: Vec<GroupSummary>,
        diagnostics: Vec<Diagnostic>,
    ) -> Self {
        let summary = Summary::of(&records);
        Report { name: name.into(), seed, version: REPORT_VERSION, records, groups, summary, diagnostics }
    }

    /// 0 when nothing failed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        i32::from(self.summary.fail > 0)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# queuebound report v{REPORT_VERSION} name={} seed={}\n{CSV_HEADER}\n", self.name, self.seed);
        for r in &self.records {
            let bound = r.bound_exp10.map_or_else(|| "-inf".to_string(), |e| format!("{e:.6}"));
            out.push_str(&format!(
                "{},{},{},{bound},{:e},{:e},{},{}\n",
                csv_field(&r.check_id),
                csv_field(&r.spec),
                csv_field(&r.param),
                r.estimate,
                r.estimate_ci,
                r.verdict.as_str(),
                r.seed
            ));
        }
        out
    }

    /// One line per group plus the totals.
    pub fn text_summary(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str(&format!(
                "{:<18} {:<28} {:<18} pass={} fail={} vacuous={}\n",
                g.suite, g.spec, g.check, g.counts.pass, g.counts.fail, g.counts.vacuous
            ));
        }
        let s = self.summary;
        out.push_str(&format!("total={} pass={} fail={} vacuous={}\n", s.total, s.pass, s.fail, s.vacuous));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::super::{Quantity, Relation};
    use super::*;

    fn rec(v: Verdict, spec: &str) -> VerificationRecord {
        VerificationRecord {
            check_id: "t.x".into(),
            suite: "s".into(),
            spec: spec.into(),
            param: "a=1,b=2".into(),
            bound_id: "x".into(),
            quantity: Quantity::Mean,
            relation: Relation::AtMost,
            bound_exp10: None,
            estimate: 0.5,
            estimate_ci: 0.01,
            verdict: v,
            seed: 9,
            grid_point: None,
        }
    }

    #[test]
    fn summary_and_exit_code() {
        let r = Report::new("n", 1, vec![rec(Verdict::Pass, "a"), rec(Verdict::Vacuous, "b")], vec![], vec![]);
        assert_eq!(r.summary, Summary { pass: 1, fail: 0, vacuous: 1, total: 2 });
        assert_eq!(r.exit_code(), 0);
        let r = Report::new("n", 1, vec![rec(Verdict::Fail, "a")], vec![], vec![]);
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn csv_quotes_and_marks_zero_bounds() {
        let r = Report::new("n", 1, vec![rec(Verdict::Pass, "M/M/1")], vec![], vec![]);
        let csv = r.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with('#'));
        assert_eq!(lines[1], CSV_HEADER);
        assert!(lines[2].contains("\"a=1,b=2\""));
        assert!(lines[2].contains(",-inf,"));
        let back: Report = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(back, r);
    }
}
