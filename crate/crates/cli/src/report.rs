//! Report rendering: accuracy and sibling table, top-m misclassification
//! table with relation tags, and the knowledge-metric table, as Markdown or
//! as three CSV files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use taxoscope::datapipe::write_atomic;
use taxoscope::evalx::{ClassBreakdown, EvalReport, MfRow};
use taxoscope::{Percent, SimilarityTriple};
use thiserror::Error;

pub const EMPTY_CELL: &str = "—";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Markdown,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "markdown" | "md" => Ok(Format::Markdown),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format {other:?}, expected markdown or csv")),
        }
    }
}

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("cannot write report to {path}: {message}")]
    UnwritableOutput { path: PathBuf, message: String },
}

fn percent(p: Option<Percent>) -> Option<String> {
    p.map(|p| p.to_fixed())
}

fn two_decimals(v: f64) -> String {
    format!("{v:.2}")
}

fn knowledge_cells(k: Option<SimilarityTriple>) -> [Option<String>; 3] {
    match k {
        Some(k) => [k.path_sim, k.lch, k.wups].map(|v| Some(two_decimals(v))),
        None => [None, None, None],
    }
}

fn md_escape(s: &str) -> String {
    s.replace('|', "\\|").replace('\n', " ")
}

fn md_row(cells: &[String]) -> String {
    format!("| {} |\n", cells.join(" | "))
}

fn md_cell(v: Option<String>) -> String {
    v.unwrap_or_else(|| EMPTY_CELL.to_string())
}

fn mf_cell(row: &MfRow) -> String {
    let marker = if row.mapped { "" } else { ", unmapped" };
    format!("{} {}% ({}{marker})", md_escape(&row.name), row.mf.to_fixed(), row.tag)
}

fn rows(reports: &[EvalReport]) -> impl Iterator<Item = (&EvalReport, &ClassBreakdown)> {
    reports.iter().flat_map(|r| r.classes.iter().map(move |c| (r, c)))
}

/// The full Markdown report; `top_m` columns in the misclassification table.
pub fn render_markdown(reports: &[EvalReport], top_m: usize) -> String {
    let mut out = String::from("# Evaluation report\n\n");
    let models: Vec<&str> = reports.iter().map(|r| r.model_name.as_str()).collect();
    let _ = writeln!(out, "- Models: {}", models.join(", "));
    if let Some(first) = reports.first() {
        if let Some(q) = first.query {
            let _ = writeln!(out, "- Query: {q}");
        }
        let o = first.options;
        let _ = writeln!(out, "- KIN radius: {} edges", o.kin_radius);
        let over = if o.include_correct {
            "all samples"
        } else {
            "misclassified samples"
        };
        let _ = writeln!(out, "- Knowledge metrics averaged over {over}");
    }

    out.push_str("\n## Accuracy and sibling misclassifications\n\n");
    out.push_str("| Model | Label | Samples | Accuracy | Siblings |\n");
    out.push_str("| --- | --- | ---: | ---: | ---: |\n");
    for (r, c) in rows(reports) {
        out.push_str(&md_row(&[
            md_escape(&r.model_name),
            md_escape(&c.name),
            c.n_samples.to_string(),
            md_cell(percent(c.accuracy).map(|p| p + "%")),
            md_cell(percent(c.sibling_pct).map(|p| p + "%")),
        ]));
    }

    out.push_str("\n## Common misclassifications\n\n");
    let mut header = vec!["Model".to_string(), "Label".to_string()];
    header.extend((1..=top_m).map(|i| format!("FP {i}")));
    out.push_str(&md_row(&header));
    out.push_str(&md_row(&vec!["---".to_string(); header.len()]));
    for (r, c) in rows(reports) {
        let mut cells = vec![md_escape(&r.model_name), md_escape(&c.name)];
        cells.extend((0..top_m).map(|i| c.mf_table.get(i).map_or_else(|| EMPTY_CELL.to_string(), mf_cell)));
        out.push_str(&md_row(&cells));
    }

    out.push_str("\n## Knowledge-driven metrics\n\n");
    out.push_str("| Model | Label | Path | LCH | WUPS |\n");
    out.push_str("| --- | --- | ---: | ---: | ---: |\n");
    for (r, c) in rows(reports) {
        let mut cells = vec![md_escape(&r.model_name), md_escape(&c.name)];
        cells.extend(knowledge_cells(c.knowledge).map(md_cell));
        out.push_str(&md_row(&cells));
    }
    out
}

fn csv_text(header: &[&str], records: Vec<Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in records {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

/// Three CSV documents keyed by file name. Missing values are empty fields.
pub fn render_csv(reports: &[EvalReport], top_m: usize) -> Vec<(&'static str, String)> {
    let opt = |v: Option<String>| v.unwrap_or_default();
    let accuracy = rows(reports)
        .map(|(r, c)| {
            vec![
                r.model_name.clone(),
                c.name.clone(),
                c.gt_class.to_string(),
                c.n_samples.to_string(),
                c.n_correct.to_string(),
                opt(percent(c.accuracy)),
                opt(percent(c.sibling_pct)),
            ]
        })
        .collect();
    let mf = rows(reports)
        .flat_map(|(r, c)| {
            c.mf_table.iter().take(top_m).enumerate().map(move |(i, row)| {
                vec![
                    r.model_name.clone(),
                    c.name.clone(),
                    c.gt_class.to_string(),
                    (i + 1).to_string(),
                    row.name.clone(),
                    row.class.synset().map(|s| s.to_string()).unwrap_or_default(),
                    row.count.to_string(),
                    row.mf.to_fixed(),
                    row.tag.to_string(),
                ]
            })
        })
        .collect();
    let knowledge = rows(reports)
        .map(|(r, c)| {
            let mut v = vec![r.model_name.clone(), c.name.clone(), c.gt_class.to_string()];
            v.extend(knowledge_cells(c.knowledge).map(opt));
            v
        })
        .collect();
    vec![
        (
            "accuracy.csv",
            csv_text(&["model", "label", "wnid", "samples", "correct", "accuracy", "siblings"], accuracy),
        ),
        (
            "misclassifications.csv",
            csv_text(
                &["model", "label", "wnid", "rank", "fp_label", "fp_wnid", "count", "mf", "tag"],
                mf,
            ),
        ),
        (
            "knowledge.csv",
            csv_text(&["model", "label", "wnid", "path", "lch", "wups"], knowledge),
        ),
    ]
}

/// Render everything in memory, then write each file atomically into `out_dir`.
pub fn render_report(
    reports: &[EvalReport],
    format: Format,
    top_m: usize,
    out_dir: &Path,
) -> Result<Vec<PathBuf>, ReportError> {
    let files = match format {
        Format::Markdown => vec![("report.md", render_markdown(reports, top_m))],
        Format::Csv => render_csv(reports, top_m),
    };
    std::fs::create_dir_all(out_dir).map_err(|e| ReportError::UnwritableOutput {
        path: out_dir.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut written = Vec::with_capacity(files.len());
    for (name, text) in files {
        let path = out_dir.join(name);
        write_atomic(&path, text.as_bytes()).map_err(|e| ReportError::UnwritableOutput {
            path: path.clone(),
            message: e.to_string(),
        })?;
        written.push(path);
    }
    Ok(written)
}

/// Every false-positive class of one ground-truth class with distances and
/// similarities, for each report.
pub fn render_explanation(reports: &[(&EvalReport, &ClassBreakdown)]) -> String {
    let mut out = String::new();
    for (r, c) in reports {
        let _ = writeln!(out, "# {} ({}), model {}\n", c.name, c.gt_class, r.model_name);
        let _ = writeln!(
            out,
            "- Samples: {}, correct: {}, unscored: {}",
            c.n_samples, c.n_correct, c.n_unscored
        );
        let _ = writeln!(out, "- Accuracy: {}", md_cell(percent(c.accuracy).map(|p| p + "%")));
        let _ = writeln!(out, "- Siblings among misclassifications: {}", md_cell(percent(c.sibling_pct).map(|p| p + "%")));
        let [path, lch, wups] = knowledge_cells(c.knowledge).map(md_cell);
        let _ = writeln!(out, "- Mean path / LCH / WUPS: {path} / {lch} / {wups}\n");
        if c.mf_table.is_empty() {
            out.push_str("No misclassifications.\n\n");
            continue;
        }
        out.push_str("| Predicted | wnid | Count | MF | Relation | Distance | Path | LCH | WUPS |\n");
        out.push_str("| --- | --- | ---: | ---: | --- | ---: | ---: | ---: | ---: |\n");
        for row in &c.mf_table {
            let mut cells = vec![
                md_escape(&row.name),
                md_cell(row.class.synset().map(|s| s.to_string())),
                row.count.to_string(),
                format!("{}%", row.mf.to_fixed()),
                row.tag.to_string(),
                md_cell(row.distance.map(|d| d.to_string())),
            ];
            cells.extend(row.similarity.map_or([None, None, None], |s| knowledge_cells(Some(s))).map(md_cell));
            out.push_str(&md_row(&cells));
        }
        out.push('\n');
    }
    out
}
