//! Displayed-equation extraction.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Display environments recognized in every dialect.
pub const DISPLAY_ENVIRONMENTS: [&str; 5] =
    ["equation", "align", "gather", "displaymath", "eqnarray"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dialect {
    /// Author sources: environments, `\[...\]` and `$$...$$`.
    LatexSource,
    /// Markdown model output: environments and `$$...$$`.
    MarkdownOutput,
    /// Model output using `\[...\]`, plus environments.
    BracketOutput,
}

impl std::str::FromStr for Dialect {
    type Err = String;

    fn from_str(s: &str) -> Result<Dialect, String> {
        match s {
            "latex" | "latex-source" => Ok(Dialect::LatexSource),
            "markdown" | "markdown-output" => Ok(Dialect::MarkdownOutput),
            "bracket" | "bracket-output" => Ok(Dialect::BracketOutput),
            _ => Err(format!(
                "unknown dialect `{s}` (expected latex, markdown or bracket)"
            )),
        }
    }
}

impl Dialect {
    fn brackets(self) -> bool {
        matches!(self, Dialect::LatexSource | Dialect::BracketOutput)
    }

    fn dollars(self) -> bool {
        matches!(self, Dialect::LatexSource | Dialect::MarkdownOutput)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DocFormula {
    pub doc_id: String,
    /// 1-based line of the opening delimiter.
    pub line_no: usize,
    pub body: String,
    pub raw: String,
}

fn opener_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        let envs = DISPLAY_ENVIRONMENTS.join("|");
        Regex::new(&format!(r"\\begin\{{({envs})(\*?)\}}|\\\[|\$\$")).unwrap()
    })
}

fn cleanup_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\\(label|tag\*?)\s*\{[^{}]*\}|\\nonumber\b|\\notag\b").unwrap())
}

fn whitespace_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\s+").unwrap())
}

/// Drops labels, tags and numbering switches and folds whitespace.
pub fn clean_body(body: &str) -> String {
    let s = cleanup_regex().replace_all(body, " ");
    whitespace_regex().replace_all(s.trim(), " ").into_owned()
}

fn escaped(doc: &str, at: usize) -> bool {
    doc[..at].chars().rev().take_while(|&c| c == '\\').count() % 2 == 1
}

/// Display blocks in document order.
pub fn extract_displayed(doc_id: &str, doc: &str, dialect: Dialect) -> Vec<DocFormula> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(m) = opener_regex().captures_at(doc, pos) {
        let whole = m.get(0).expect("match");
        let start = whole.start();
        let closer = match whole.as_str() {
            r"\[" => dialect.brackets().then(|| r"\]".to_string()),
            "$$" => dialect.dollars().then(|| "$$".to_string()),
            _ => Some(format!(r"\end{{{}{}}}", &m[1], &m[2])),
        };
        let Some(closer) = closer.filter(|_| !escaped(doc, start)) else {
            pos = start + 1;
            continue;
        };
        let inner_start = whole.end();
        let mut search = inner_start;
        let end = loop {
            match doc[search..].find(&closer) {
                Some(off) if escaped(doc, search + off) => search += off + 1,
                Some(off) => break Some(search + off),
                None => break None,
            }
        };
        let Some(end) = end else {
            log::debug!("{doc_id}: unterminated display block at byte {start}");
            pos = inner_start;
            continue;
        };
        let body = clean_body(&doc[inner_start..end]);
        let stop = end + closer.len();
        if !body.is_empty() {
            out.push(DocFormula {
                doc_id: doc_id.to_string(),
                line_no: doc[..start].matches('\n').count() + 1,
                body,
                raw: doc[start..stop].to_string(),
            });
        }
        pos = stop;
    }
    out
}

/// One formula per non-empty line, as in prepared GT files.
pub fn formulas_from_lines(doc_id: &str, text: &str) -> Vec<DocFormula> {
    text.lines()
        .enumerate()
        .filter_map(|(i, line)| {
            let body = clean_body(line);
            (!body.is_empty()).then(|| DocFormula {
                doc_id: doc_id.to_string(),
                line_no: i + 1,
                body,
                raw: line.to_string(),
            })
        })
        .collect()
}
