//! Raw lexical scan of LaTeX math source.
//!
//! Whitespace and `%` comments are discarded. Control words keep their
//! backslash (`\alpha`), control symbols are two characters (`\{`, `\,`).

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum Lex {
    Char(char),
    Command(String),
    Open,
    Close,
    Sup,
    Sub,
}

impl Lex {
    /// Source text of the lexeme, whitespace-free.
    pub(crate) fn text(&self) -> String {
        match self {
            Lex::Char(c) => c.to_string(),
            Lex::Command(c) => c.clone(),
            Lex::Open => "{".into(),
            Lex::Close => "}".into(),
            Lex::Sup => "^".into(),
            Lex::Sub => "_".into(),
        }
    }
}

pub(crate) fn lex(source: &str) -> Vec<Lex> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            '%' => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
            }
            c if c.is_whitespace() => i += 1,
            '{' => {
                out.push(Lex::Open);
                i += 1;
            }
            '}' => {
                out.push(Lex::Close);
                i += 1;
            }
            '^' => {
                out.push(Lex::Sup);
                i += 1;
            }
            '_' => {
                out.push(Lex::Sub);
                i += 1;
            }
            '\\' => {
                if i + 1 >= chars.len() {
                    out.push(Lex::Char('\\'));
                    i += 1;
                } else if chars[i + 1].is_ascii_alphabetic() {
                    let start = i;
                    i += 1;
                    while i < chars.len() && chars[i].is_ascii_alphabetic() {
                        i += 1;
                    }
                    out.push(Lex::Command(chars[start..i].iter().collect()));
                } else if chars[i + 1].is_whitespace() {
                    // control space
                    out.push(Lex::Command("\\ ".into()));
                    i += 2;
                } else {
                    out.push(Lex::Command(format!("\\{}", chars[i + 1])));
                    i += 2;
                }
            }
            c => {
                out.push(Lex::Char(c));
                i += 1;
            }
        }
    }
    out
}
