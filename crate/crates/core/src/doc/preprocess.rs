//! Cleanup of LaTeX document sources before formula extraction.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;

/// Nested alias expansion stops after this many passes.
pub const MAX_EXPANSION_PASSES: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Macro {
    pub params: usize,
    /// Default for an optional first parameter.
    pub default: Option<String>,
    pub body: String,
}

/// Removes `%` comments up to end of line, keeping escaped `\%`.
pub fn strip_comments(doc: &str) -> String {
    let mut out = String::with_capacity(doc.len());
    for (i, line) in doc.split('\n').enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let mut backslashes = 0;
        let mut cut = line.len();
        for (j, c) in line.char_indices() {
            if c == '%' && backslashes % 2 == 0 {
                cut = j;
                break;
            }
            backslashes = if c == '\\' { backslashes + 1 } else { 0 };
        }
        if cut < line.len() {
            out.push_str(line[..cut].trim_end());
        } else {
            out.push_str(line);
        }
    }
    out
}

fn block_regexes() -> &'static [Regex; 2] {
    static RE: OnceLock<[Regex; 2]> = OnceLock::new();
    RE.get_or_init(|| {
        [
            Regex::new(r"(?s)\\iffalse\b.*?\\fi\b").unwrap(),
            Regex::new(r"(?s)\\begin\{comment\}.*?\\end\{comment\}").unwrap(),
        ]
    })
}

/// Drops `\iffalse ... \fi` and `comment` environments.
pub fn strip_disabled_blocks(doc: &str) -> String {
    let mut s = doc.to_string();
    for re in block_regexes() {
        s = re.replace_all(&s, "").into_owned();
    }
    s
}

fn skip_ws(s: &str, mut i: usize) -> usize {
    while let Some(c) = s[i..].chars().next() {
        if !c.is_whitespace() {
            break;
        }
        i += c.len_utf8();
    }
    i
}

/// Balanced `{...}` starting at `i`; returns (inner, end).
fn brace_group(s: &str, i: usize) -> Option<(&str, usize)> {
    if !s[i..].starts_with('{') {
        return None;
    }
    let mut depth = 0usize;
    let mut escaped = false;
    for (j, c) in s[i..].char_indices() {
        if escaped {
            escaped = false;
            continue;
        }
        match c {
            '\\' => escaped = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some((&s[i + 1..i + j], i + j + 1));
                }
            }
            _ => {}
        }
    }
    None
}

/// `[...]` without nesting.
fn bracket_group(s: &str, i: usize) -> Option<(&str, usize)> {
    if !s[i..].starts_with('[') {
        return None;
    }
    let close = s[i..].find(']')?;
    Some((&s[i + 1..i + close], i + close + 1))
}

/// A control word like `\foo` at `i`; returns (name with backslash, end).
fn control_word(s: &str, i: usize) -> Option<(&str, usize)> {
    let rest = s[i..].strip_prefix('\\')?;
    let len: usize = rest
        .chars()
        .take_while(|c| c.is_ascii_alphabetic() || *c == '@')
        .map(char::len_utf8)
        .sum();
    if len == 0 {
        let c = rest.chars().next()?;
        return Some((&s[i..i + 1 + c.len_utf8()], i + 1 + c.len_utf8()));
    }
    Some((&s[i..i + 1 + len], i + 1 + len))
}

/// Name given as `{\foo}` or bare `\foo`.
fn macro_name(s: &str, i: usize) -> Option<(String, usize)> {
    let i = skip_ws(s, i);
    if let Some((inner, end)) = brace_group(s, i) {
        let name = inner.trim();
        return (name.starts_with('\\') && name.len() > 1).then(|| (name.to_string(), end));
    }
    control_word(s, i).map(|(n, e)| (n.to_string(), e))
}

fn parse_newcommand(s: &str, i: usize) -> Option<(String, Macro, usize)> {
    let mut i = i;
    if s[i..].starts_with('*') {
        i += 1;
    }
    let (name, mut i) = macro_name(s, i)?;
    let mut params = 0;
    let mut default = None;
    i = skip_ws(s, i);
    if let Some((n, end)) = bracket_group(s, i) {
        params = n.trim().parse().ok()?;
        i = skip_ws(s, end);
        if let Some((d, end)) = bracket_group(s, i) {
            default = Some(d.to_string());
            i = skip_ws(s, end);
        }
    }
    let (body, end) = brace_group(s, i)?;
    Some((
        name,
        Macro {
            params,
            default,
            body: body.to_string(),
        },
        end,
    ))
}

fn parse_def(s: &str, i: usize) -> Option<(String, Macro, usize)> {
    let i = skip_ws(s, i);
    let (name, i) = control_word(s, i)?;
    let open = s[i..].find('{')? + i;
    let spec = &s[i..open];
    let params = spec.matches('#').count();
    if !spec
        .chars()
        .all(|c| c == '#' || c.is_ascii_digit() || c.is_whitespace())
    {
        return None;
    }
    let (body, end) = brace_group(s, open)?;
    Some((
        name.to_string(),
        Macro {
            params,
            default: None,
            body: body.to_string(),
        },
        end,
    ))
}

fn parse_operator(s: &str, i: usize) -> Option<(String, Macro, usize)> {
    let (star, i) = match s[i..].strip_prefix('*') {
        Some(_) => ("*", i + 1),
        None => ("", i),
    };
    let (name, i) = macro_name(s, i)?;
    let (text, end) = brace_group(s, skip_ws(s, i))?;
    Some((
        name,
        Macro {
            params: 0,
            default: None,
            body: format!("\\operatorname{star}{{{text}}}"),
        },
        end,
    ))
}

fn definition_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"\\(newcommand|renewcommand|providecommand|DeclareRobustCommand|DeclareMathOperator|def)\b",
        )
        .unwrap()
    })
}

/// Collects alias definitions and returns the text with them removed.
pub fn extract_macros(doc: &str) -> (String, HashMap<String, Macro>) {
    let mut macros = HashMap::new();
    let mut out = String::with_capacity(doc.len());
    let mut pos = 0;
    while let Some(m) = definition_regex().find_at(doc, pos) {
        out.push_str(&doc[pos..m.start()]);
        let parsed = match m.as_str() {
            r"\def" => parse_def(doc, m.end()),
            r"\DeclareMathOperator" => parse_operator(doc, m.end()),
            _ => parse_newcommand(doc, m.end()),
        };
        match parsed {
            Some((name, mac, end)) => {
                let keep_old = m.as_str() == r"\providecommand" && macros.contains_key(&name);
                if !keep_old {
                    macros.insert(name, mac);
                }
                pos = end;
            }
            None => {
                log::warn!(
                    "leaving malformed definition near byte {} unexpanded",
                    m.start()
                );
                out.push_str(m.as_str());
                pos = m.end();
            }
        }
    }
    out.push_str(&doc[pos..]);
    (out, macros)
}

/// One macro argument: a brace group or a single token.
fn argument(s: &str, i: usize) -> Option<(String, usize)> {
    let i = skip_ws(s, i);
    if let Some((inner, end)) = brace_group(s, i) {
        return Some((inner.to_string(), end));
    }
    if s[i..].starts_with('\\') {
        return control_word(s, i).map(|(w, e)| (w.to_string(), e));
    }
    let c = s[i..].chars().next()?;
    (c != '}').then(|| (c.to_string(), i + c.len_utf8()))
}

fn substitute(body: &str, args: &[String]) -> String {
    let mut out = String::with_capacity(body.len());
    let mut chars = body.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '#' {
            if let Some(d) = chars.peek().and_then(|d| d.to_digit(10)) {
                chars.next();
                if let Some(a) = args.get(d as usize - 1) {
                    out.push_str(a);
                }
                continue;
            }
        }
        out.push(c);
    }
    out
}

fn expand_once(doc: &str, macros: &HashMap<String, Macro>) -> (String, bool) {
    let mut out = String::with_capacity(doc.len());
    let mut changed = false;
    let mut i = 0;
    while i < doc.len() {
        let Some(off) = doc[i..].find('\\') else {
            out.push_str(&doc[i..]);
            break;
        };
        out.push_str(&doc[i..i + off]);
        i += off;
        let (word, end) = control_word(doc, i).unwrap_or((&doc[i..i + 1], i + 1));
        let Some(mac) = macros.get(word) else {
            out.push_str(word);
            i = end;
            continue;
        };
        let mut args = Vec::with_capacity(mac.params);
        let mut j = end;
        let mut ok = true;
        for k in 0..mac.params {
            if k == 0 {
                if let Some(d) = &mac.default {
                    let at = skip_ws(doc, j);
                    match bracket_group(doc, at) {
                        Some((v, e)) => {
                            args.push(v.to_string());
                            j = e;
                        }
                        None => args.push(d.clone()),
                    }
                    continue;
                }
            }
            match argument(doc, j) {
                Some((a, e)) => {
                    args.push(a);
                    j = e;
                }
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if !ok {
            out.push_str(word);
            i = end;
            continue;
        }
        let body = substitute(&mac.body, &args);
        // keep a following letter from fusing with a trailing control word
        let needs_space = mac.params == 0
            && body.ends_with(|c: char| c.is_ascii_alphabetic())
            && doc[j..].starts_with(|c: char| c.is_ascii_alphabetic());
        out.push_str(&body);
        if needs_space {
            out.push(' ');
        }
        changed = true;
        i = j;
    }
    (out, changed)
}

/// Expands known aliases, at most `MAX_EXPANSION_PASSES` times.
pub fn expand_macros(doc: &str, macros: &HashMap<String, Macro>) -> String {
    let mut s = doc.to_string();
    if macros.is_empty() {
        return s;
    }
    for _ in 0..MAX_EXPANSION_PASSES {
        let (next, changed) = expand_once(&s, macros);
        s = next;
        if !changed {
            break;
        }
    }
    s
}

/// Body between `\begin{document}` and `\end{document}`; the whole text when
/// there is no such marker.
pub fn document_body(doc: &str) -> &str {
    let Some(start) = doc.find(r"\begin{document}") else {
        return doc;
    };
    let body = &doc[start + r"\begin{document}".len()..];
    match body.find(r"\end{document}") {
        Some(end) => &body[..end],
        None => body,
    }
}

/// Comment removal, alias expansion and preamble removal.
pub fn preprocess_source(doc: &str) -> String {
    let doc = strip_disabled_blocks(&strip_comments(doc));
    let (doc, macros) = extract_macros(&doc);
    expand_macros(document_body(&doc), &macros)
}
