use super::ModelError;
use crate::discovery::Operator;
use crate::tree::ProcessTree;

/// Parses tree-text such as `seq('a', xor(tau, 'b'))`. Nodes are kept exactly
/// as written; nothing is flattened.
pub fn parse_tree_text(text: &str) -> Result<ProcessTree, ModelError> {
    let mut p = Parser { src: text, pos: 0 };
    let tree = p.node()?;
    p.skip_ws();
    if p.pos != text.len() {
        return Err(p.error("trailing input"));
    }
    Ok(tree)
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ModelError {
        ModelError::Parse { offset: self.pos, message: message.to_string() }
    }

    fn rest(&self) -> &str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn node(&mut self) -> Result<ProcessTree, ModelError> {
        self.skip_ws();
        if self.rest().starts_with('\'') {
            return self.label().map(ProcessTree::Activity);
        }
        let word_len = self
            .rest()
            .find(|c: char| !c.is_ascii_alphanumeric() && c != '_')
            .unwrap_or(self.rest().len());
        let word = &self.rest()[..word_len];
        if word == "tau" {
            self.pos += word_len;
            return Ok(ProcessTree::Silent);
        }
        let Some(op) = Operator::from_glyph(word) else {
            return Err(self.error("expected an operator, `tau`, or a quoted label"));
        };
        self.pos += word_len;
        if !self.eat('(') {
            return Err(self.error("expected `(`"));
        }
        let start = self.pos;
        let mut children = vec![self.node()?];
        while self.eat(',') {
            children.push(self.node()?);
        }
        if !self.eat(')') {
            return Err(self.error("expected `,` or `)`"));
        }
        let node = ProcessTree::Operator(op, children);
        if !node.is_well_formed() {
            self.pos = start;
            return Err(self.error(if op == Operator::Loop {
                "loop takes exactly two children"
            } else {
                "operator takes at least two children"
            }));
        }
        Ok(node)
    }

    fn label(&mut self) -> Result<String, ModelError> {
        self.pos += 1;
        let mut out = String::new();
        let mut chars = self.rest().char_indices();
        while let Some((i, c)) = chars.next() {
            match c {
                '\'' => {
                    self.pos += i + 1;
                    return Ok(out);
                }
                '\\' => match chars.next() {
                    Some((_, e)) => out.push(e),
                    None => break,
                },
                c => out.push(c),
            }
        }
        self.pos = self.src.len();
        Err(self.error("unterminated label"))
    }
}
