//! Parse tree for normalized math LaTeX.
//!
//! The tree is the single source of structure for tokenization, colorization
//! and the stub layout engine. All three walk it in the same order, so the
//! `index` recorded on each glyph node during [`flatten`] is the token's
//! `order_index` everywhere.

use super::lexer::{lex, Lex};
use super::{LatexError, TokenKind};

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Sym {
    pub text: String,
    pub kind: TokenKind,
    pub index: usize,
}

impl Sym {
    fn new(text: impl Into<String>, kind: TokenKind) -> Self {
        Sym {
            text: text.into(),
            kind,
            index: usize::MAX,
        }
    }

    fn structural(text: impl Into<String>) -> Self {
        Sym::new(text, TokenKind::Structural)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Node {
    Sym(Sym),
    Group(Vec<Node>),
    Scripts {
        base: Option<Box<Node>>,
        modifiers: Vec<Sym>,
        sup: Option<Vec<Node>>,
        sub: Option<Vec<Node>>,
    },
    Cmd {
        head: Sym,
        layout: CmdLayout,
        opt: Option<Vec<Node>>,
        args: Vec<Vec<Node>>,
    },
    Env {
        name: String,
        spec: Option<String>,
        rows: Vec<Vec<Vec<Node>>>,
    },
}

/// How the stub engine arranges a command and its arguments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum CmdLayout {
    /// Head glyph followed by arguments, left to right.
    Inline,
    /// Two arguments stacked around the head glyph (a fraction bar).
    Stacked,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum ArgMode {
    Normal,
    /// Consumed but produces no glyphs (`\hspace{1em}`, `\label{x}`).
    Silent,
}

struct CmdSpec {
    head: TokenKind,
    layout: CmdLayout,
    optional: bool,
    args: &'static [ArgMode],
}

const N1: &[ArgMode] = &[ArgMode::Normal];
const N2: &[ArgMode] = &[ArgMode::Normal, ArgMode::Normal];
const S1: &[ArgMode] = &[ArgMode::Silent];
const SN: &[ArgMode] = &[ArgMode::Silent, ArgMode::Normal];

const FRACTIONS: &[&str] = &[
    "frac", "dfrac", "tfrac", "cfrac", "binom", "dbinom", "tbinom",
];

const ACCENTS: &[&str] = &[
    "hat",
    "widehat",
    "bar",
    "overline",
    "underline",
    "vec",
    "overrightarrow",
    "overleftarrow",
    "overleftrightarrow",
    "tilde",
    "widetilde",
    "dot",
    "ddot",
    "dddot",
    "check",
    "breve",
    "acute",
    "grave",
    "mathring",
    "overbrace",
    "underbrace",
    "boxed",
    "cancel",
    "not",
];

/// Font, text and atom-class wrappers: the wrapper has no glyph of its own.
const WRAPPERS: &[&str] = &[
    "mathrm",
    "mathbf",
    "mathit",
    "mathsf",
    "mathtt",
    "mathcal",
    "mathbb",
    "mathfrak",
    "mathscr",
    "mathnormal",
    "boldsymbol",
    "bm",
    "pmb",
    "operatorname",
    "operatorname*",
    "text",
    "textrm",
    "textbf",
    "textit",
    "textsf",
    "texttt",
    "textup",
    "textnormal",
    "mbox",
    "hbox",
    "mathop",
    "mathrel",
    "mathbin",
    "mathord",
    "mathpunct",
    "mathopen",
    "mathclose",
    "mathinner",
    "emph",
];

const STACKERS: &[&str] = &["overset", "underset", "stackrel"];

const SILENT_ARGS: &[&str] = &[
    "hspace", "hspace*", "vspace", "vspace*", "label", "phantom", "hphantom", "vphantom", "color",
    "tag", "tag*", "kern", "mkern",
];

const SILENT_WORDS: &[&str] = &[
    "quad",
    "qquad",
    "enspace",
    "thinspace",
    "medspace",
    "thickspace",
    "negthinspace",
    "negmedspace",
    "negthickspace",
    "limits",
    "nolimits",
    "displaystyle",
    "textstyle",
    "scriptstyle",
    "scriptscriptstyle",
    "nonumber",
    "notag",
    "hline",
    "newline",
    "cr",
    "rm",
    "bf",
    "it",
    "cal",
    "sf",
    "tt",
    "mit",
    "relax",
    "strut",
    "hfill",
    "hfil",
    "centering",
    "allowbreak",
    "nobreak",
    "noindent",
    "space",
];

const SILENT_SYMBOLS: &[&str] = &["\\,", "\\:", "\\;", "\\!", "\\>", "\\ ", "\\/"];

const DELIMITER_PREFIXES: &[&str] = &[
    "left", "right", "middle", "big", "Big", "bigg", "Bigg", "bigl", "bigr", "bigm", "Bigl",
    "Bigr", "Bigm", "biggl", "biggr", "biggm", "Biggl", "Biggr", "Biggm",
];

/// Commands that may take a trailing `*` as part of their name.
const STARRED: &[&str] = &["operatorname", "hspace", "vspace", "tag"];

/// Environments whose `\begin` carries a column specification argument.
const SPEC_ENVIRONMENTS: &[&str] = &["array", "subarray", "tabular", "alignat", "alignat*"];

fn command_spec(word: &str) -> Option<CmdSpec> {
    let spec = |head, layout, optional, args| CmdSpec {
        head,
        layout,
        optional,
        args,
    };
    if FRACTIONS.contains(&word) {
        Some(spec(TokenKind::Command, CmdLayout::Stacked, false, N2))
    } else if word == "sqrt" {
        Some(spec(TokenKind::Command, CmdLayout::Inline, true, N1))
    } else if ACCENTS.contains(&word) {
        Some(spec(TokenKind::Command, CmdLayout::Inline, false, N1))
    } else if WRAPPERS.contains(&word) {
        Some(spec(TokenKind::Structural, CmdLayout::Inline, false, N1))
    } else if STACKERS.contains(&word) {
        Some(spec(TokenKind::Structural, CmdLayout::Inline, false, N2))
    } else if SILENT_ARGS.contains(&word) {
        Some(spec(TokenKind::Structural, CmdLayout::Inline, false, S1))
    } else if word == "textcolor" {
        Some(spec(TokenKind::Structural, CmdLayout::Inline, false, SN))
    } else {
        None
    }
}

pub(crate) fn is_silent_command(text: &str) -> bool {
    SILENT_SYMBOLS.contains(&text)
        || text
            .strip_prefix('\\')
            .is_some_and(|w| SILENT_WORDS.contains(&w))
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Stop {
    Eof,
    Brace,
    Bracket,
    Cell,
}

struct Parser {
    lexemes: Vec<Lex>,
    pos: usize,
    delimiter_depth: i64,
}

pub(crate) fn parse(source: &str) -> Result<Vec<Node>, LatexError> {
    let mut parser = Parser {
        lexemes: lex(source),
        pos: 0,
        delimiter_depth: 0,
    };
    let nodes = parser.parse_list(Stop::Eof)?;
    if parser.delimiter_depth != 0 {
        return Err(LatexError::UnbalancedDelimiters);
    }
    Ok(nodes)
}

impl Parser {
    fn peek(&self) -> Option<&Lex> {
        self.lexemes.get(self.pos)
    }

    fn next(&mut self) -> Option<Lex> {
        let l = self.lexemes.get(self.pos).cloned();
        if l.is_some() {
            self.pos += 1;
        }
        l
    }

    fn peek_command(&self) -> Option<&str> {
        match self.peek() {
            Some(Lex::Command(c)) => Some(c.as_str()),
            _ => None,
        }
    }

    fn parse_list(&mut self, stop: Stop) -> Result<Vec<Node>, LatexError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                None => {
                    return match stop {
                        Stop::Eof | Stop::Cell => Ok(out),
                        Stop::Brace => Err(LatexError::UnbalancedBraces(
                            "a `{` group is never closed".into(),
                        )),
                        Stop::Bracket => Err(LatexError::UnbalancedBraces(
                            "an optional `[` argument is never closed".into(),
                        )),
                    }
                }
                Some(Lex::Close) => {
                    if stop == Stop::Brace {
                        return Ok(out);
                    }
                    return Err(LatexError::UnbalancedBraces(
                        "`}` without a matching `{`".into(),
                    ));
                }
                Some(Lex::Char(']')) if stop == Stop::Bracket => return Ok(out),
                Some(Lex::Char('&')) if stop == Stop::Cell => return Ok(out),
                Some(Lex::Command(c)) if stop == Stop::Cell && (c == "\\\\" || c == "\\end") => {
                    return Ok(out)
                }
                Some(Lex::Command(c)) if c == "\\end" => {
                    self.next();
                    let name = self.read_braced_raw().unwrap_or_default();
                    return Err(LatexError::UnexpectedEnd(name));
                }
                _ => self.parse_scripted(&mut out)?,
            }
        }
    }

    /// One atom plus any attached scripts.
    fn parse_scripted(&mut self, out: &mut Vec<Node>) -> Result<(), LatexError> {
        let base = match self.peek() {
            Some(Lex::Sup) | Some(Lex::Sub) => None,
            _ => Some(self.parse_atom()?),
        };
        let mut modifiers = Vec::new();
        while let Some(c) = self.peek_command() {
            if c == "\\limits" || c == "\\nolimits" {
                modifiers.push(Sym::structural(c));
                self.next();
            } else {
                break;
            }
        }
        let mut sup = None;
        let mut sub = None;
        loop {
            match self.peek() {
                Some(Lex::Sup) => {
                    self.next();
                    let arg = self.parse_arg("^")?;
                    if sup.replace(arg).is_some() {
                        return Err(LatexError::DoubleSuperscript);
                    }
                }
                Some(Lex::Sub) => {
                    self.next();
                    let arg = self.parse_arg("_")?;
                    if sub.replace(arg).is_some() {
                        return Err(LatexError::DoubleSubscript);
                    }
                }
                _ => break,
            }
        }
        if sup.is_none() && sub.is_none() {
            out.extend(base);
            out.extend(modifiers.into_iter().map(Node::Sym));
        } else {
            out.push(Node::Scripts {
                base: base.map(Box::new),
                modifiers,
                sup,
                sub,
            });
        }
        Ok(())
    }

    /// A braced group or a single atom, always returned as a group body.
    fn parse_arg(&mut self, owner: &str) -> Result<Vec<Node>, LatexError> {
        match self.peek() {
            Some(Lex::Open) => {
                self.next();
                let body = self.parse_list(Stop::Brace)?;
                self.next();
                Ok(body)
            }
            None | Some(Lex::Close) | Some(Lex::Sup) | Some(Lex::Sub) => {
                Err(LatexError::MissingArgument(owner.to_string()))
            }
            Some(Lex::Command(c)) if c == "\\end" || c == "\\\\" => {
                Err(LatexError::MissingArgument(owner.to_string()))
            }
            _ => Ok(vec![self.parse_atom()?]),
        }
    }

    fn parse_atom(&mut self) -> Result<Node, LatexError> {
        match self.next() {
            Some(Lex::Open) => {
                let body = self.parse_list(Stop::Brace)?;
                self.next();
                Ok(Node::Group(body))
            }
            Some(Lex::Char(c)) => Ok(Node::Sym(match c {
                '&' | '~' => Sym::structural(c.to_string()),
                c => Sym::new(c.to_string(), TokenKind::Char),
            })),
            Some(Lex::Command(name)) => self.parse_command(name),
            Some(Lex::Close) => Err(LatexError::UnbalancedBraces(
                "`}` without a matching `{`".into(),
            )),
            // Scripts are consumed by `parse_scripted`; reaching one here
            // means an argument slot was given a bare marker.
            Some(Lex::Sup) | Some(Lex::Sub) | None => {
                Err(LatexError::MissingArgument("atom".into()))
            }
        }
    }

    fn parse_command(&mut self, name: String) -> Result<Node, LatexError> {
        if name == "\\\\" {
            self.skip_bracketed();
            return Ok(Node::Sym(Sym::structural("\\\\")));
        }
        if name == "\\ " {
            return Ok(Node::Sym(Sym::structural("~")));
        }
        if name == "\\begin" {
            return self.parse_env();
        }
        let mut word = name[1..].to_string();
        if STARRED.contains(&word.as_str()) && self.peek() == Some(&Lex::Char('*')) {
            self.next();
            word.push('*');
        }
        let text = format!("\\{word}");

        if DELIMITER_PREFIXES.contains(&word.as_str()) {
            return self.parse_delimiter(text, &word);
        }
        if is_silent_command(&text) {
            return Ok(Node::Sym(Sym::structural(text)));
        }
        let Some(spec) = command_spec(&word) else {
            return Ok(Node::Sym(Sym::new(text, TokenKind::Command)));
        };
        let opt = if spec.optional && self.peek() == Some(&Lex::Char('[')) {
            self.next();
            let body = self.parse_list(Stop::Bracket)?;
            self.next();
            Some(body)
        } else {
            None
        };
        let mut args = Vec::with_capacity(spec.args.len());
        for mode in spec.args {
            let mut arg = self.parse_arg(&text)?;
            if *mode == ArgMode::Silent {
                arg.iter_mut().for_each(silence);
            }
            args.push(arg);
        }
        Ok(Node::Cmd {
            head: Sym::new(text, spec.head),
            layout: spec.layout,
            opt,
            args,
        })
    }

    fn parse_delimiter(&mut self, text: String, word: &str) -> Result<Node, LatexError> {
        let delim = match self.next() {
            Some(Lex::Char(c)) => c.to_string(),
            Some(Lex::Command(c)) if c != "\\\\" && c != "\\end" && c != "\\begin" => c,
            _ => return Err(LatexError::MissingDelimiter(text)),
        };
        match word {
            "left" => self.delimiter_depth += 1,
            "right" => {
                self.delimiter_depth -= 1;
                if self.delimiter_depth < 0 {
                    return Err(LatexError::UnbalancedDelimiters);
                }
            }
            "middle" if self.delimiter_depth == 0 => return Err(LatexError::UnbalancedDelimiters),
            _ => {}
        }
        let kind = if delim == "." {
            TokenKind::Structural
        } else {
            TokenKind::Command
        };
        Ok(Node::Sym(Sym::new(format!("{text}{delim}"), kind)))
    }

    fn parse_env(&mut self) -> Result<Node, LatexError> {
        let name = self
            .read_braced_raw()
            .ok_or_else(|| LatexError::MissingArgument("\\begin".into()))?;
        let spec = if SPEC_ENVIRONMENTS.contains(&name.as_str()) {
            self.skip_bracketed();
            Some(
                self.read_braced_raw()
                    .ok_or_else(|| LatexError::MissingArgument(format!("\\begin{{{name}}}")))?,
            )
        } else {
            None
        };
        let mut rows: Vec<Vec<Vec<Node>>> = Vec::new();
        let mut row = Vec::new();
        loop {
            let cell = self.parse_list(Stop::Cell)?;
            row.push(cell);
            match self.next() {
                Some(Lex::Char('&')) => {}
                Some(Lex::Command(c)) if c == "\\\\" => {
                    self.skip_bracketed();
                    rows.push(std::mem::take(&mut row));
                }
                Some(Lex::Command(c)) if c == "\\end" => {
                    let found = self.read_braced_raw().unwrap_or_default();
                    if found != name {
                        return Err(LatexError::MismatchedEnvironment {
                            expected: name,
                            found,
                        });
                    }
                    rows.push(row);
                    break;
                }
                _ => return Err(LatexError::UnclosedEnvironment(name)),
            }
        }
        // a trailing `\\` leaves an empty final row
        if rows.len() > 1 && rows.last().is_some_and(|r| r.len() == 1 && r[0].is_empty()) {
            rows.pop();
        }
        Ok(Node::Env { name, spec, rows })
    }

    /// Reads `{...}` verbatim (whitespace dropped), honoring nested braces.
    fn read_braced_raw(&mut self) -> Option<String> {
        if self.peek() != Some(&Lex::Open) {
            return None;
        }
        self.next();
        let mut depth = 1;
        let mut text = String::new();
        while let Some(l) = self.next() {
            match l {
                Lex::Open => depth += 1,
                Lex::Close => {
                    depth -= 1;
                    if depth == 0 {
                        return Some(text);
                    }
                }
                _ => {}
            }
            text.push_str(&l.text());
        }
        None
    }

    fn skip_bracketed(&mut self) {
        if self.peek() != Some(&Lex::Char('[')) {
            return;
        }
        let save = self.pos;
        self.next();
        while let Some(l) = self.next() {
            if l == Lex::Char(']') {
                return;
            }
        }
        self.pos = save;
    }
}

fn silence(node: &mut Node) {
    match node {
        Node::Sym(s) => s.kind = TokenKind::Structural,
        Node::Group(children) => children.iter_mut().for_each(silence),
        Node::Scripts { base, sup, sub, .. } => {
            if let Some(b) = base {
                silence(b);
            }
            for part in [sup, sub].into_iter().flatten() {
                part.iter_mut().for_each(silence);
            }
        }
        Node::Cmd {
            head, opt, args, ..
        } => {
            head.kind = TokenKind::Structural;
            for part in opt.iter_mut().chain(args.iter_mut()) {
                part.iter_mut().for_each(silence);
            }
        }
        Node::Env { rows, .. } => rows.iter_mut().flatten().flatten().for_each(silence),
    }
}

/// Emits the canonical token stream and records each glyph node's index.
pub(crate) fn flatten(nodes: &mut [Node], out: &mut Vec<(String, TokenKind)>) {
    for node in nodes {
        flatten_node(node, out);
    }
}

fn push_sym(sym: &mut Sym, out: &mut Vec<(String, TokenKind)>) {
    sym.index = out.len();
    out.push((sym.text.clone(), sym.kind));
}

fn push_group(body: &mut [Node], out: &mut Vec<(String, TokenKind)>) {
    out.push(("{".into(), TokenKind::GroupOpen));
    flatten(body, out);
    out.push(("}".into(), TokenKind::GroupClose));
}

fn flatten_node(node: &mut Node, out: &mut Vec<(String, TokenKind)>) {
    match node {
        Node::Sym(s) => push_sym(s, out),
        Node::Group(body) => push_group(body, out),
        Node::Scripts {
            base,
            modifiers,
            sup,
            sub,
        } => {
            if let Some(b) = base {
                flatten_node(b, out);
            }
            for m in modifiers {
                push_sym(m, out);
            }
            if let Some(s) = sup {
                out.push(("^".into(), TokenKind::ScriptMarker));
                push_group(s, out);
            }
            if let Some(s) = sub {
                out.push(("_".into(), TokenKind::ScriptMarker));
                push_group(s, out);
            }
        }
        Node::Cmd {
            head, opt, args, ..
        } => {
            push_sym(head, out);
            if let Some(o) = opt {
                out.push(("[".into(), TokenKind::Structural));
                flatten(o, out);
                out.push(("]".into(), TokenKind::Structural));
            }
            for a in args {
                push_group(a, out);
            }
        }
        Node::Env { name, spec, rows } => {
            out.push((format!("\\begin{{{name}}}"), TokenKind::Structural));
            if let Some(s) = spec {
                out.push((format!("{{{s}}}"), TokenKind::Structural));
            }
            for (r, row) in rows.iter_mut().enumerate() {
                if r > 0 {
                    out.push(("\\\\".into(), TokenKind::Structural));
                }
                for (c, cell) in row.iter_mut().enumerate() {
                    if c > 0 {
                        out.push(("&".into(), TokenKind::Structural));
                    }
                    flatten(cell, out);
                }
            }
            out.push((format!("\\end{{{name}}}"), TokenKind::Structural));
        }
    }
}
