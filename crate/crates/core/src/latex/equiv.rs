use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use super::Token;

const BUILTIN: &str = include_str!("../../data/equiv.txt");

/// Partition of token texts into render-equivalence classes.
///
/// Tokens absent from the table form singleton classes named by their own
/// text. Lines that share a member are merged, so the table is always a
/// partition regardless of how the file is written.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EquivTable {
    classes: HashMap<String, String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Equivalence {
    Identical,
    RenderEquivalent,
    Different,
}

impl EquivTable {
    /// The table shipped with the crate (delimiter families and common aliases).
    pub fn builtin() -> &'static EquivTable {
        static TABLE: OnceLock<EquivTable> = OnceLock::new();
        TABLE.get_or_init(|| EquivTable::parse(BUILTIN))
    }

    pub fn load(path: &Path) -> std::io::Result<EquivTable> {
        Ok(EquivTable::parse(&std::fs::read_to_string(path)?))
    }

    /// Parses the line format: whitespace-separated members, `#` starts a comment.
    pub fn parse(text: &str) -> EquivTable {
        let mut parent: HashMap<String, String> = HashMap::new();
        fn find(parent: &mut HashMap<String, String>, x: &str) -> String {
            let mut root = x.to_string();
            while let Some(p) = parent.get(&root) {
                if *p == root {
                    break;
                }
                root = p.clone();
            }
            let mut cur = x.to_string();
            while cur != root {
                let next = parent[&cur].clone();
                parent.insert(cur, root.clone());
                cur = next;
            }
            root
        }
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            let members: Vec<&str> = line.split_whitespace().collect();
            let Some(first) = members.first() else {
                continue;
            };
            for m in &members {
                parent.entry(m.to_string()).or_insert_with(|| m.to_string());
            }
            let root = find(&mut parent, first);
            for m in &members[1..] {
                let r = find(&mut parent, m);
                if r != root {
                    parent.insert(r, root.clone());
                }
            }
        }
        let keys: Vec<String> = parent.keys().cloned().collect();
        let classes = keys
            .into_iter()
            .map(|k| {
                let r = find(&mut parent, &k);
                (k, r)
            })
            .collect();
        EquivTable { classes }
    }

    /// Merges another table's classes into this one.
    pub fn extend(&mut self, other: &EquivTable) {
        let mut text = String::new();
        for table in [&*self, other] {
            let mut by_class: HashMap<&str, Vec<&str>> = HashMap::new();
            for (member, class) in &table.classes {
                by_class.entry(class).or_default().push(member);
            }
            for members in by_class.values() {
                text.push_str(&members.join(" "));
                text.push('\n');
            }
        }
        *self = EquivTable::parse(&text);
    }

    pub fn class_of<'a>(&'a self, text: &'a str) -> &'a str {
        self.classes.get(text).map(String::as_str).unwrap_or(text)
    }

    pub fn compare(&self, a: &str, b: &str) -> Equivalence {
        if a == b {
            Equivalence::Identical
        } else if self.class_of(a) == self.class_of(b) {
            Equivalence::RenderEquivalent
        } else {
            Equivalence::Different
        }
    }

    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }
}

/// Classifies two tokens as identical, render-equivalent, or different.
pub fn equiv(a: &Token, b: &Token, table: &EquivTable) -> Equivalence {
    table.compare(&a.text, &b.text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_covers_delimiters_and_aliases() {
        let t = EquivTable::builtin();
        assert_eq!(t.compare("(", r"\left("), Equivalence::RenderEquivalent);
        assert_eq!(
            t.compare(r"\big(", r"\left("),
            Equivalence::RenderEquivalent
        );
        assert_eq!(t.compare(r"\le", r"\leq"), Equivalence::RenderEquivalent);
        assert_eq!(t.compare(r"\ne", r"\neq"), Equivalence::RenderEquivalent);
        assert_eq!(
            t.compare(r"\to", r"\rightarrow"),
            Equivalence::RenderEquivalent
        );
        assert_eq!(
            t.compare(r"\{", r"\left\lbrace"),
            Equivalence::RenderEquivalent
        );
        assert_eq!(t.compare("a", "a"), Equivalence::Identical);
        assert_eq!(t.compare("z", "2"), Equivalence::Different);
        assert_eq!(t.compare("(", ")"), Equivalence::Different);
    }

    #[test]
    fn overlapping_lines_merge() {
        let t = EquivTable::parse("a b # comment\nc d\nb c\n\n# only a comment\n");
        assert_eq!(t.class_of("a"), t.class_of("d"));
        assert_eq!(t.compare("a", "d"), Equivalence::RenderEquivalent);
        assert_eq!(t.class_of("zzz"), "zzz");
    }

    #[test]
    fn extend_merges_tables() {
        let mut t = EquivTable::parse("a b");
        t.extend(&EquivTable::parse("b c\nx y"));
        assert_eq!(t.compare("a", "c"), Equivalence::RenderEquivalent);
        assert_eq!(t.compare("x", "y"), Equivalence::RenderEquivalent);
        assert_eq!(t.compare("a", "x"), Equivalence::Different);
    }
}
