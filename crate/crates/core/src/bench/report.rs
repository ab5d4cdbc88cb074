//! Report assembly, CSV/markdown rendering and parsing.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use super::config::ReportFormat;
use super::metrics::Metrics;
use super::rank::{F1Table, RankTable};
use super::{BenchError, Result, SamplerKind};
use crate::classifiers::ClassifierKind;

pub const METRICS_HEADER: [&str; 6] = ["dataset", "sampler", "classifier", "metric", "mean", "std"];

/// Mean and population standard deviation over runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Summary { mean: 0.0, std: 0.0 };
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Summary {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellSummary {
    pub dataset: String,
    pub sampler: String,
    pub classifier: String,
    pub recall: Summary,
    pub precision: Summary,
    pub f1: Summary,
}

impl CellSummary {
    pub fn from_runs(dataset: &str, sampler: &str, classifier: &str, runs: &[Metrics]) -> Self {
        let pick = |f: fn(&Metrics) -> f64| Summary::of(&runs.iter().map(f).collect::<Vec<_>>());
        CellSummary {
            dataset: dataset.to_string(),
            sampler: sampler.to_string(),
            classifier: classifier.to_string(),
            recall: pick(|m| m.recall),
            precision: pick(|m| m.precision),
            f1: pick(|m| m.f1),
        }
    }

    fn metrics(&self) -> [(&'static str, Summary); 3] {
        [
            ("recall", self.recall),
            ("precision", self.precision),
            ("f1", self.f1),
        ]
    }
}

/// Per-cell summaries, ordered by dataset, sampler, classifier.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub cells: Vec<CellSummary>,
}

impl MetricsReport {
    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn get(&self, dataset: &str, sampler: &str, classifier: &str) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.sampler == sampler && c.classifier == classifier)
    }

    fn axis(&self, f: fn(&CellSummary) -> &str) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for c in &self.cells {
            if !out.iter().any(|o| o == f(c)) {
                out.push(f(c).to_string());
            }
        }
        out
    }
}

/// Writes one row per (cell, metric). Floats use the shortest text that
/// parses back to the same value.
pub fn write_metrics_csv<W: Write>(report: &MetricsReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(METRICS_HEADER)?;
    for c in &report.cells {
        for (metric, s) in c.metrics() {
            w.write_record([
                c.dataset.as_str(),
                &c.sampler,
                &c.classifier,
                metric,
                &s.mean.to_string(),
                &s.std.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h.trim() == name)
}

fn parse_f64(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| BenchError::MalformedReport(format!("{what}: `{s}` is not a number")))
}

/// Inverse of [`write_metrics_csv`].
pub fn parse_metrics_csv<R: Read>(reader: R) -> Result<MetricsReport> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let cols: Vec<usize> = METRICS_HEADER
        .iter()
        .map(|h| header_index(&headers, h).ok_or_else(|| BenchError::MalformedReport(format!("missing column `{h}`"))))
        .collect::<Result<_>>()?;
    let mut report = MetricsReport::default();
    let mut seen: Vec<[bool; 3]> = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(cols[i]).unwrap_or("").trim();
        let (d, s, c) = (field(0), field(1), field(2));
        let summary = Summary {
            mean: parse_f64(field(4), "mean")?,
            std: parse_f64(field(5), "std")?,
        };
        let at = match report.cells.iter().position(|x| x.dataset == d && x.sampler == s && x.classifier == c) {
            Some(at) => at,
            None => {
                let empty = Summary { mean: 0.0, std: 0.0 };
                report.cells.push(CellSummary {
                    dataset: d.to_string(),
                    sampler: s.to_string(),
                    classifier: c.to_string(),
                    recall: empty,
                    precision: empty,
                    f1: empty,
                });
                seen.push([false; 3]);
                report.cells.len() - 1
            }
        };
        let cell = &mut report.cells[at];
        let slot = match field(3) {
            "recall" => (&mut cell.recall, 0),
            "precision" => (&mut cell.precision, 1),
            "f1" => (&mut cell.f1, 2),
            other => return Err(BenchError::MalformedReport(format!("unknown metric `{other}`"))),
        };
        *slot.0 = summary;
        seen[at][slot.1] = true;
    }
    if let Some(i) = seen.iter().position(|s| s.contains(&false)) {
        let c = &report.cells[i];
        return Err(BenchError::MalformedReport(format!(
            "{}/{}/{} lacks a metric",
            c.dataset, c.sampler, c.classifier
        )));
    }
    Ok(report)
}

/// Reads F1 scores either from a metrics CSV (mean of the `f1` rows) or
/// from a table with columns `dataset,classifier,sampler,f1`.
pub fn read_f1_table<R: Read>(mut reader: R) -> Result<F1Table> {
    let mut text = String::new();
    reader.read_to_string(&mut text)?;
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers()?.clone();
    if header_index(&headers, "metric").is_some() {
        return Ok(F1Table::from_report(&parse_metrics_csv(text.as_bytes())?));
    }
    let mut table = F1Table::default();
    let need = ["dataset", "classifier", "sampler", "f1"];
    let cols: Vec<usize> = need
        .iter()
        .map(|h| header_index(&headers, h).ok_or_else(|| BenchError::MalformedReport(format!("missing column `{h}`"))))
        .collect::<Result<_>>()?;
    for rec in r.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(cols[i]).unwrap_or("").trim();
        table.push(field(0), field(1), field(2), parse_f64(field(3), "f1")?);
    }
    Ok(table)
}

fn display_sampler(name: &str) -> String {
    name.parse::<SamplerKind>()
        .map(|k| k.label().to_string())
        .unwrap_or_else(|_| name.to_string())
}

fn display_classifier(name: &str) -> String {
    match name.parse::<ClassifierKind>() {
        Ok(ClassifierKind::LogReg) => "LR".into(),
        Ok(ClassifierKind::RandomForest) => "RF".into(),
        Ok(ClassifierKind::Gbt) => "GBT".into(),
        Ok(ClassifierKind::Mlp) => "MLP".into(),
        Err(_) => name.to_string(),
    }
}

/// One table per dataset: methods as rows, recall/precision/F1 per classifier.
pub fn render_markdown(report: &MetricsReport) -> String {
    let mut out = String::new();
    let classifiers = report.axis(|c| &c.classifier);
    let samplers = report.axis(|c| &c.sampler);
    for dataset in report.axis(|c| &c.dataset) {
        let _ = writeln!(out, "## {dataset}\n");
        out.push_str("| Method |");
        for c in &classifiers {
            let c = display_classifier(c);
            let _ = write!(out, " {c} Recall | {c} Precision | {c} F1 |");
        }
        out.push_str("\n|---|");
        out.push_str(&"---:|".repeat(3 * classifiers.len()));
        out.push('\n');
        for s in &samplers {
            let _ = write!(out, "| {} |", display_sampler(s));
            for c in &classifiers {
                match report.get(&dataset, s, c) {
                    Some(cell) => {
                        for (_, v) in cell.metrics() {
                            let _ = write!(out, " {:.4} ± {:.4} |", v.mean, v.std);
                        }
                    }
                    None => out.push_str(" failed | failed | failed |"),
                }
            }
            out.push('\n');
        }
        out.push('\n');
    }
    out
}

/// Methods as rows; overall mean rank then one column per classifier.
pub fn render_rank_markdown(rank: &RankTable) -> String {
    let mut out = String::from("## Mean F1 rank\n\n| Method | Overall |");
    for c in &rank.classifiers {
        let _ = write!(out, " {} |", display_classifier(c));
    }
    out.push_str("\n|---|---:|");
    out.push_str(&"---:|".repeat(rank.classifiers.len()));
    out.push('\n');
    for (si, s) in rank.samplers.iter().enumerate() {
        let _ = write!(out, "| {} | {:.3} |", display_sampler(s), rank.overall[si]);
        for v in &rank.per_classifier[si] {
            let _ = write!(out, " {v:.3} |");
        }
        out.push('\n');
    }
    out
}

/// Columns `sampler,classifier,mean_rank`; the overall rank uses the
/// classifier name `overall`.
pub fn write_rank_csv<W: Write>(rank: &RankTable, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["sampler", "classifier", "mean_rank"])?;
    for (si, s) in rank.samplers.iter().enumerate() {
        w.write_record([s.as_str(), "overall", &rank.overall[si].to_string()])?;
        for (ci, c) in rank.classifiers.iter().enumerate() {
            w.write_record([s.as_str(), c, &rank.per_classifier[si][ci].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Markdown when `path` ends in `.md`, CSV otherwise.
pub fn write_rank_table(rank: &RankTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    if path.extension().is_some_and(|e| e == "md") {
        fs::write(path, render_rank_markdown(rank))?;
    } else {
        write_rank_csv(rank, fs::File::create(path)?)?;
    }
    Ok(())
}

/// Writes the report into `out_dir` and returns the files created:
/// `metrics.csv` (plus `ranks.csv`) or `report.md`.
pub fn emit_report(
    report: &MetricsReport,
    rank: Option<&RankTable>,
    format: ReportFormat,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    if report.is_empty() {
        return Err(BenchError::EmptyReport);
    }
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    match format {
        ReportFormat::Csv => {
            let path = out_dir.join("metrics.csv");
            let mut buf = Vec::new();
            write_metrics_csv(report, &mut buf)?;
            fs::write(&path, buf)?;
            written.push(path);
            if let Some(rank) = rank {
                let path = out_dir.join("ranks.csv");
                let mut buf = Vec::new();
                write_rank_csv(rank, &mut buf)?;
                fs::write(&path, buf)?;
                written.push(path);
            }
        }
        ReportFormat::Markdown => {
            let mut text = render_markdown(report);
            if let Some(rank) = rank {
                text.push_str(&render_rank_markdown(rank));
            }
            let path = out_dir.join("report.md");
            fs::write(&path, text)?;
            written.push(path);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::rank::mean_rank;

    fn cell(d: &str, s: &str, c: &str, f1: f64) -> CellSummary {
        CellSummary {
            dataset: d.into(),
            sampler: s.into(),
            classifier: c.into(),
            recall: Summary { mean: 0.1 + f1 / 3.0, std: 0.01 },
            precision: Summary { mean: 1.0 / 3.0, std: 0.0 },
            f1: Summary { mean: f1, std: 0.123456789 },
        }
    }

    #[test]
    fn summary_std_is_zero_for_one_run() {
        assert_eq!(Summary::of(&[0.7]), Summary { mean: 0.7, std: 0.0 });
        let s = Summary::of(&[1.0, 3.0]);
        assert_eq!((s.mean, s.std), (2.0, 1.0));
    }

    #[test]
    fn one_cell_gives_three_rows_and_round_trips() {
        let report = MetricsReport {
            cells: vec![cell("pima", "smote", "rf", 0.6548)],
        };
        let mut buf = Vec::new();
        write_metrics_csv(&report, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "dataset,sampler,classifier,metric,mean,std");
        assert_eq!(lines.len(), 4);
        assert_eq!(parse_metrics_csv(buf.as_slice()).unwrap(), report);
    }

    #[test]
    fn empty_report_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let err = emit_report(&MetricsReport::default(), None, ReportFormat::Csv, &out);
        assert!(matches!(err, Err(BenchError::EmptyReport)));
        assert!(!out.exists());
    }

    #[test]
    fn f1_table_from_both_layouts() {
        let report = MetricsReport {
            cells: vec![cell("d", "none", "rf", 0.5), cell("d", "smote", "rf", 0.7)],
        };
        let mut buf = Vec::new();
        write_metrics_csv(&report, &mut buf).unwrap();
        let from_metrics = read_f1_table(buf.as_slice()).unwrap();
        let plain = "dataset,classifier,sampler,f1\nd,rf,none,0.5\nd,rf,smote,0.7\n";
        let from_plain = read_f1_table(plain.as_bytes()).unwrap();
        assert_eq!(from_metrics, from_plain);
        assert_eq!(from_metrics, F1Table::from_report(&report));
    }

    #[test]
    fn markdown_layout() {
        let report = MetricsReport {
            cells: vec![cell("pima", "none", "rf", 0.5), cell("pima", "sdg-gan", "rf", 0.7)],
        };
        let rank = mean_rank(&F1Table::from_report(&report)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let files = emit_report(&report, Some(&rank), ReportFormat::Markdown, dir.path()).unwrap();
        let text = fs::read_to_string(&files[0]).unwrap();
        assert!(text.contains("## pima"));
        assert!(text.contains("| SDG-GAN | 0.3333 ± 0.0100 |"));
        assert!(text.contains("| W/O | 2.000 | 2.000 |"));
    }
}
