//! Parser for the rendered equation grammar.
//!
//! One equation per line: `name(t+1) = <expr>`, where `<expr>` is a state
//! reference `name(t)`, a parameter `g<k>` (1-based), or a parenthesized
//! binary expression `(<expr> op <expr>)` with `op` ∈ {`+`, `-`, `*`}.
//! Blank lines and lines starting with `#` are ignored, so rendered files may
//! carry comment headers.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{BinOp, EquationTree, ModelGenotype, StateSchema};

/// Parses rendered equations back into a genotype.
///
/// Every state declared by the schema must appear exactly once as a left-hand
/// side; equations may appear in any order. `lambda_max` bounds the `g<k>`
/// indices and becomes the parsed genotype's parameter-pool size.
pub fn parse(text: &str, schema: &StateSchema, lambda_max: usize) -> Result<ModelGenotype> {
    let mut trees: BTreeMap<usize, EquationTree> = BTreeMap::new();
    for (line_idx, raw_line) in text.lines().enumerate() {
        let line_no = line_idx + 1;
        if raw_line.trim().is_empty() || raw_line.trim_start().starts_with('#') {
            continue;
        }
        let mut p = LineParser::new(raw_line, line_no, schema, lambda_max);
        let (state, tree) = p.equation()?;
        if trees.insert(state, tree).is_some() {
            return Err(Error::ModelSyntax {
                line: line_no,
                col: 1,
                msg: format!("duplicate equation for state `{}`", schema.names()[state]),
            });
        }
    }
    for (i, name) in schema.names().iter().enumerate() {
        if !trees.contains_key(&i) {
            return Err(Error::Model(format!("missing equation for state `{name}`")));
        }
    }
    let ordered = trees.into_values().collect();
    ModelGenotype::new(ordered, lambda_max, schema)
}

struct LineParser<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    schema: &'a StateSchema,
    lambda_max: usize,
}

impl<'a> LineParser<'a> {
    fn new(line: &str, line_no: usize, schema: &'a StateSchema, lambda_max: usize) -> Self {
        LineParser { chars: line.chars().collect(), pos: 0, line: line_no, schema, lambda_max }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::ModelSyntax { line: self.line, col: self.pos + 1, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while matches!(self.chars.get(self.pos), Some(c) if c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).copied()
    }

    /// Next non-whitespace char without skipping leading whitespace state.
    fn peek_raw(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn expect(&mut self, c: char) -> Result<()> {
        match self.peek() {
            Some(found) if found == c => {
                self.pos += 1;
                Ok(())
            }
            Some(found) => Err(self.err(format!("expected `{c}`, found `{found}`"))),
            None => Err(self.err(format!("expected `{c}`, found end of line"))),
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        match self.peek_raw() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.pos += 1,
            Some(c) => return Err(self.err(format!("expected identifier, found `{c}`"))),
            None => return Err(self.err("expected identifier, found end of line")),
        }
        while matches!(self.peek_raw(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Ok(self.chars[start..self.pos].iter().collect())
    }

    fn equation(&mut self) -> Result<(usize, EquationTree)> {
        let name = self.ident()?;
        let state = self
            .schema
            .index_of(&name)
            .ok_or_else(|| Error::UnknownState(name.clone()))?;
        self.expect('(')?;
        self.time_head()?;
        self.expect(')')?;
        self.expect('=')?;
        let tree = self.expr()?;
        if let Some(c) = self.peek() {
            return Err(self.err(format!("unexpected trailing `{c}`")));
        }
        Ok((state, tree))
    }

    /// Consumes `t+1` inside the left-hand side's parentheses.
    fn time_head(&mut self) -> Result<()> {
        let t = self.ident()?;
        if t != "t" {
            return Err(self.err(format!("expected `t`, found `{t}`")));
        }
        self.expect('+')?;
        match self.peek() {
            Some('1') => {
                self.pos += 1;
                Ok(())
            }
            Some(c) => Err(self.err(format!("expected `1`, found `{c}`"))),
            None => Err(self.err("expected `1`, found end of line")),
        }
    }

    fn expr(&mut self) -> Result<EquationTree> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let left = self.expr()?;
                let op = self.operator()?;
                let right = self.expr()?;
                self.expect(')')?;
                Ok(EquationTree::Op { op, left: Box::new(left), right: Box::new(right) })
            }
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.leaf(),
            Some(c) => Err(self.err(format!("expected expression, found `{c}`"))),
            None => Err(self.err("expected expression, found end of line")),
        }
    }

    fn operator(&mut self) -> Result<BinOp> {
        match self.peek() {
            Some('+') => {
                self.pos += 1;
                Ok(BinOp::Add)
            }
            Some('-') => {
                self.pos += 1;
                Ok(BinOp::Sub)
            }
            Some('*') => {
                self.pos += 1;
                Ok(BinOp::Mul)
            }
            Some(c) => Err(self.err(format!("expected operator `+`, `-` or `*`, found `{c}`"))),
            None => Err(self.err("expected operator, found end of line")),
        }
    }

    /// A leaf: `name(t)` for a state, bare `g<digits>` for a parameter.
    fn leaf(&mut self) -> Result<EquationTree> {
        let name = self.ident()?;
        if self.peek() == Some('(') {
            self.pos += 1;
            let t = self.ident()?;
            if t != "t" {
                return Err(self.err(format!("expected `t`, found `{t}`")));
            }
            self.expect(')')?;
            let state = self
                .schema
                .index_of(&name)
                .ok_or_else(|| Error::UnknownState(name.clone()))?;
            return Ok(EquationTree::State(state));
        }
        if let Some(digits) = name.strip_prefix('g') {
            if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                let one_based: usize = digits
                    .parse()
                    .map_err(|_| self.err(format!("parameter index `{digits}` too large")))?;
                if one_based == 0 {
                    return Err(self.err("parameter indices start at g1"));
                }
                if one_based > self.lambda_max {
                    return Err(Error::ParamOutOfRange {
                        index: one_based - 1,
                        lambda_max: self.lambda_max,
                    });
                }
                return Ok(EquationTree::Param(one_based - 1));
            }
        }
        Err(self.err(format!(
            "`{name}` is neither a state reference `name(t)` nor a parameter `g<k>`"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{random_genotype, StateSchema};
    use crate::seed;

    fn schema() -> StateSchema {
        StateSchema::new(
            vec!["mood".into(), "sleep".into()],
            vec![0],
            vec![(0.0, 1.0), (0.0, 1.0)],
        )
        .unwrap()
    }

    #[test]
    fn parses_rendered_example() {
        let s = schema();
        let text = "mood(t+1) = (mood(t) + (g1 * sleep(t)))\nsleep(t+1) = sleep(t)\n";
        let g = parse(text, &s, 7).unwrap();
        assert_eq!(g.render(&s), text);
        assert_eq!(g.distinct_params(), 1);
    }

    #[test]
    fn ignores_comments_blank_lines_and_order() {
        let s = schema();
        let text = "# header\n\nsleep(t+1) = g2\nmood(t+1) = mood(t)\n";
        let g = parse(text, &s, 7).unwrap();
        assert_eq!(g.render(&s), "mood(t+1) = mood(t)\nsleep(t+1) = g2\n");
    }

    #[test]
    fn unbalanced_parenthesis_is_a_syntax_error() {
        let s = schema();
        let err = parse("mood(t+1) = (mood(t) +\nsleep(t+1) = sleep(t)\n", &s, 7).unwrap_err();
        match err {
            Error::ModelSyntax { line, .. } => assert_eq!(line, 1),
            other => panic!("expected syntax error, got {other}"),
        }
    }

    #[test]
    fn unknown_state_is_reported_by_name() {
        let s = schema();
        let err = parse("mood(t+1) = happiness(t)\nsleep(t+1) = sleep(t)\n", &s, 7).unwrap_err();
        match err {
            Error::UnknownState(name) => assert_eq!(name, "happiness"),
            other => panic!("expected unknown-state error, got {other}"),
        }
    }

    #[test]
    fn parameter_index_beyond_pool_is_rejected() {
        let s = schema();
        let err = parse("mood(t+1) = g8\nsleep(t+1) = sleep(t)\n", &s, 7).unwrap_err();
        assert!(matches!(err, Error::ParamOutOfRange { index: 7, lambda_max: 7 }));
    }

    #[test]
    fn missing_and_duplicate_equations_are_rejected() {
        let s = schema();
        assert!(matches!(parse("mood(t+1) = mood(t)\n", &s, 7), Err(Error::Model(_))));
        let dup = "mood(t+1) = mood(t)\nmood(t+1) = sleep(t)\nsleep(t+1) = sleep(t)\n";
        assert!(matches!(parse(dup, &s, 7), Err(Error::ModelSyntax { .. })));
    }

    #[test]
    fn whitespace_is_insignificant() {
        let s = schema();
        let text = "mood(t+1)=( mood( t ) *g3 )\nsleep( t + 1 ) = sleep(t)\n";
        let g = parse(text, &s, 7).unwrap();
        assert_eq!(g.render(&s), "mood(t+1) = (mood(t) * g3)\nsleep(t+1) = sleep(t)\n");
    }

    #[test]
    fn render_parse_round_trip_over_random_genotypes() {
        let s = StateSchema::new(
            vec!["alpha".into(), "beta".into(), "g2x".into()],
            vec![0, 2],
            vec![(0.0, 1.0); 3],
        )
        .unwrap();
        let mut rng = seed::rng(99);
        for _ in 0..1000 {
            let g = random_genotype(&s, 7, 6, 0.6, &mut rng);
            let text = g.render(&s);
            let back = parse(&text, &s, 7).unwrap();
            assert_eq!(back, g, "round trip failed for:\n{text}");
        }
    }
}
