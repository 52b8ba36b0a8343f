//! Analysis reports: a human-readable text rendering and a versioned CSV
//! table with columns `n, condition, value, certificate_ref`.
//!
//! Values are rounded to ten significant digits before printing so that
//! reports are byte-stable across runs and thread counts.

use crate::largemarket::{BuildOutcome, ContiguityProfile, NaflOutcome, Status, Verdict, WorstCase};
use crate::orlicz::YoungFunction;
use std::fmt::Write as _;

pub const CSV_HEADER: &str = "# ftaplab-report v1\nn,condition,value,certificate_ref\n";

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Market index in the family, `None` for sequence-level entries.
    pub n: Option<usize>,
    pub condition: String,
    pub value: f64,
    pub certificate: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AnalysisReport {
    pub title: String,
    pub lines: Vec<String>,
    pub rows: Vec<ReportRow>,
    /// Warnings such as violated standing assumptions.
    pub flags: Vec<String>,
}

/// Deterministic number formatting used by both renderings.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let rounded: f64 = format!("{v:.9e}").parse().unwrap_or(v);
    if rounded == 0.0 {
        "0".into()
    } else {
        format!("{rounded}")
    }
}

pub fn format_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format_value(*x)).collect();
    format!("({})", parts.join(","))
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn status_value(s: Status) -> f64 {
    match s {
        Status::Found => 1.0,
        Status::NotFoundOnPrefix => 0.5,
        Status::CertifiedAbsent => 0.0,
    }
}

impl AnalysisReport {
    pub fn new(title: impl Into<String>) -> Self {
        Self { title: title.into(), ..Default::default() }
    }

    pub fn line(&mut self, text: impl Into<String>) -> &mut Self {
        self.lines.push(text.into());
        self
    }

    pub fn flag(&mut self, text: impl Into<String>) -> &mut Self {
        self.flags.push(text.into());
        self
    }

    pub fn row(&mut self, n: Option<usize>, condition: impl Into<String>, value: f64, certificate: impl Into<String>) -> &mut Self {
        self.rows.push(ReportRow { n, condition: condition.into(), value, certificate: certificate.into() });
        self
    }

    pub fn extend(&mut self, other: AnalysisReport) -> &mut Self {
        self.lines.extend(other.lines);
        self.rows.extend(other.rows);
        self.flags.extend(other.flags);
        self
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        for r in &self.rows {
            let n = r.n.map(|n| n.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{}",
                n,
                csv_field(&r.condition),
                format_value(r.value),
                csv_field(&r.certificate)
            );
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "{}\n{}", self.title, "=".repeat(self.title.chars().count()));
        }
        for l in &self.lines {
            let _ = writeln!(out, "{l}");
        }
        if !self.rows.is_empty() {
            if !self.lines.is_empty() {
                out.push('\n');
            }
            let w = self.rows.iter().map(|r| r.condition.len()).max().unwrap_or(0).max(9);
            let _ = writeln!(out, "{:>4}  {:<w$}  {:>18}  certificate", "n", "condition", "value");
            for r in &self.rows {
                let n = r.n.map(|n| n.to_string()).unwrap_or_else(|| "-".into());
                let _ = writeln!(out, "{:>4}  {:<w$}  {:>18}  {}", n, r.condition, format_value(r.value), r.certificate);
            }
        }
        for f in &self.flags {
            let _ = writeln!(out, "warning: {f}");
        }
        out
    }

    /// One summary row per verdict plus its per-n profile.
    pub fn add_verdicts(&mut self, verdicts: &[Verdict]) -> &mut Self {
        for v in verdicts {
            let name = v.condition.name();
            let mut cert = format!("status={}", v.status.name());
            if let Some(a) = v.alpha {
                cert.push_str(&format!(";alpha={}", format_value(a)));
            }
            if !v.steps.is_empty() {
                cert.push_str(&format!(";steps={}", v.steps.len()));
            }
            self.row(None, name, status_value(v.status), cert);
            self.line(format!("{name}: {} ({})", v.status.name(), v.note));
            for (i, p) in v.profile.iter().enumerate() {
                self.row(Some(i + 1), format!("{name}-profile"), *p, "");
            }
            for s in &v.steps {
                self.row(
                    Some(s.n),
                    format!("{name}-step"),
                    s.mass,
                    format!("k={};floor={};level={};set={:?}", s.k, format_value(s.floor), format_value(s.level), s.set),
                );
            }
        }
        self
    }

    pub fn add_profile(&mut self, p: &ContiguityProfile) -> &mut Self {
        for (dir, d) in [("Q<|P", &p.forward), ("P<|Q", &p.backward)] {
            for (i, eps) in p.eps_grid.iter().enumerate() {
                let (n, set) = &d.worst[i];
                self.row(None, format!("delta[{dir}]"), d.delta[i], format!("eps={};n={};set={:?}", format_value(*eps), n, set));
                self.row(None, format!("delta-lower[{dir}]"), d.delta_lower[i], format!("eps={}", format_value(*eps)));
            }
            for (i, k) in p.kappa_grid.iter().enumerate() {
                self.row(None, format!("ui[{dir}]"), d.ui[i], format!("kappa={}", format_value(*k)));
            }
            let witness = match &d.witness {
                Some(w) => {
                    self.row(None, format!("young-witness[{dir}]"), w.moment, format!("young={};all_n={}", w.young, w.all_n));
                    format!("witness {} with moment {}", w.young, format_value(w.moment))
                }
                None => "no power witness on the grid".into(),
            };
            self.line(format!("{dir}: {witness}; exact={}", d.exact));
        }
        self
    }

    pub fn add_namfl_table(&mut self, eps: f64, young: &YoungFunction, table: &[WorstCase]) -> &mut Self {
        for (i, wc) in table.iter().enumerate() {
            let mut cert = format!("eps={};F={young};lambda={}", format_value(eps), format_value(wc.lambda));
            if let Some(fl) = &wc.free_lunch {
                cert.push_str(&format!(";free-lunch w={}", format_vec(&fl.w)));
            }
            self.row(Some(i + 1), "NAMFL-wc", wc.value, cert);
        }
        let worst = table.iter().map(|w| w.value).fold(f64::NEG_INFINITY, f64::max);
        self.line(format!("worst-case value over the prefix at eps={} for {young}: {}", format_value(eps), format_value(worst)));
        self
    }

    pub fn add_nafl(&mut self, n: usize, eps: f64, young: &YoungFunction, o: &NaflOutcome) -> &mut Self {
        let mut cert = format!("status={};eps={};F={young};upper={}", o.status.name(), format_value(eps), format_value(o.upper));
        if let Some(w) = &o.witness {
            cert.push_str(&format!(";w={}", format_vec(&w.w)));
        }
        self.row(Some(n), "NAFL-sep", o.lower, cert);
        self
    }

    pub fn add_build(&mut self, b: &BuildOutcome) -> &mut Self {
        for l in &b.levels {
            self.row(
                None,
                "build-level",
                l.delta,
                format!(
                    "level={};eps={};F={};gamma={};bracket=({},{})",
                    l.level,
                    format_value(l.eps),
                    l.young,
                    format_value(l.gamma),
                    format_value(l.bracket.0),
                    format_value(l.bracket.1)
                ),
            );
            for (i, m) in l.selection_mass.iter().enumerate() {
                self.row(Some(i + 1), format!("hs-mass[{}]", l.level), *m, format!("bound={}", format_value(l.selection_bound)));
            }
        }
        for (i, d) in b.seq.densities.iter().enumerate() {
            self.row(Some(i + 1), "density", d.values.iter().cloned().fold(f64::INFINITY, f64::min), format_vec(&d.values));
        }
        self.row(None, "remainder", b.mixture.remainder, format!("levels={}", b.mixture.levels));
        self.line(format!(
            "mixture over {} levels, remainder {}, strictly positive: {}",
            b.mixture.levels,
            format_value(b.mixture.remainder),
            b.mixture.strictly_positive
        ));
        self.add_profile(&b.profile)
    }
}
