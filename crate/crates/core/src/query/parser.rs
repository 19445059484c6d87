use alloc::string::String;
use alloc::vec::Vec;

#[allow(unused_imports)] // float methods are inherent in core on recent toolchains
use num_traits::Float;

use super::ast::{Given, Literal, MiSpec, Statement, VarFilter};
use super::lexer::{tokenize, Keyword, Pos, Token};
use super::SyntaxError;
use crate::cmi::{Comparator, Threshold};

/// Parses one statement, optionally followed by `;`.
pub fn parse(text: &str) -> Result<Statement, SyntaxError> {
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        at: 0,
        expected: Vec::new(),
    };
    let stmt = p.statement()?;
    p.eat(&Token::Semicolon, "';'");
    p.expect(&Token::Eof, "end of input")?;
    Ok(stmt)
}

struct Parser {
    tokens: Vec<(Token, Pos)>,
    at: usize,
    /// What would have been accepted at the current position.
    expected: Vec<&'static str>,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.at].0
    }

    fn peek_at(&self, k: usize) -> &Token {
        &self.tokens[(self.at + k).min(self.tokens.len() - 1)].0
    }

    fn advance(&mut self) -> Token {
        let t = self.tokens[self.at].0.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        self.expected.clear();
        t
    }

    fn error(&self) -> SyntaxError {
        let (tok, pos) = &self.tokens[self.at];
        let mut expected: Vec<String> = self.expected.iter().map(|s| String::from(*s)).collect();
        expected.dedup();
        SyntaxError {
            line: pos.line,
            column: pos.column,
            expected,
            found: tok.describe(),
        }
    }

    fn eat(&mut self, tok: &Token, what: &'static str) -> bool {
        if self.peek() == tok {
            self.advance();
            true
        } else {
            self.expected.push(what);
            false
        }
    }

    fn expect(&mut self, tok: &Token, what: &'static str) -> Result<(), SyntaxError> {
        if self.eat(tok, what) {
            Ok(())
        } else {
            Err(self.error())
        }
    }

    fn eat_kw(&mut self, kw: Keyword) -> bool {
        self.eat(&Token::Keyword(kw), kw.as_str())
    }

    fn kw(&mut self, kw: Keyword) -> Result<(), SyntaxError> {
        self.expect(&Token::Keyword(kw), kw.as_str())
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        if let Token::Ident(_) = self.peek() {
            let Token::Ident(s) = self.advance() else {
                unreachable!()
            };
            Ok(s)
        } else {
            self.expected.push("identifier");
            Err(self.error())
        }
    }

    fn number(&mut self) -> Result<f64, SyntaxError> {
        if let Token::Number(x) = *self.peek() {
            self.advance();
            Ok(x)
        } else {
            self.expected.push("number");
            Err(self.error())
        }
    }

    fn count(&mut self) -> Result<u64, SyntaxError> {
        match *self.peek() {
            Token::Number(x) if x >= 0.0 && x.fract() == 0.0 && x <= u32::MAX as f64 => {
                self.advance();
                Ok(x as u64)
            }
            _ => {
                self.expected.push("non-negative integer");
                Err(self.error())
            }
        }
    }

    fn comparator(&mut self) -> Result<Comparator, SyntaxError> {
        if self.eat(&Token::Lt, "'<'") {
            Ok(Comparator::Less)
        } else if self.eat(&Token::Gt, "'>'") {
            Ok(Comparator::Greater)
        } else {
            Err(self.error())
        }
    }

    fn threshold(&mut self) -> Result<Threshold, SyntaxError> {
        let comparator = self.comparator()?;
        let value = self.number()?;
        Ok(Threshold { comparator, value })
    }

    fn statement(&mut self) -> Result<Statement, SyntaxError> {
        if self.eat_kw(Keyword::Simulate) {
            if self.eat(&Token::LParen, "'('") {
                return self.simulate_vars();
            }
            let mi = self.mi_spec()?;
            let model = self.models_of(Keyword::From)?;
            Ok(Statement::SimulateMi { mi, model })
        } else if self.eat_kw(Keyword::Estimate) {
            if self.eat_kw(Keyword::Dependence) {
                self.kw(Keyword::Probability)?;
                self.kw(Keyword::Of)?;
                let i = self.ident()?;
                self.kw(Keyword::With)?;
                let j = self.ident()?;
                let model = self.models_of(Keyword::By)?;
                return Ok(Statement::EstimateDepProb { i, j, model });
            }
            self.kw(Keyword::Probability)?;
            self.kw(Keyword::Of)?;
            self.expect(&Token::LParen, "'('")?;
            let mi = self.mi_spec()?;
            let threshold = self.threshold()?;
            self.expect(&Token::RParen, "')'")?;
            let model = self.models_of(Keyword::By)?;
            Ok(Statement::EstimateProbMi { mi, threshold, model })
        } else {
            Err(self.error())
        }
    }

    fn models_of(&mut self, lead: Keyword) -> Result<String, SyntaxError> {
        self.kw(lead)?;
        self.kw(Keyword::Models)?;
        self.kw(Keyword::Of)?;
        self.ident()
    }

    fn var_list(&mut self) -> Result<Vec<String>, SyntaxError> {
        if !self.eat(&Token::LParen, "'('") {
            return Ok(alloc::vec![self.ident()?]);
        }
        let mut vars = alloc::vec![self.ident()?];
        while self.eat(&Token::Comma, "','") {
            vars.push(self.ident()?);
        }
        self.expect(&Token::RParen, "')'")?;
        Ok(vars)
    }

    fn mi_spec(&mut self) -> Result<MiSpec, SyntaxError> {
        self.kw(Keyword::Mutual)?;
        self.kw(Keyword::Information)?;
        self.kw(Keyword::Of)?;
        let a = self.var_list()?;
        self.kw(Keyword::With)?;
        let b = self.var_list()?;
        let mut given = Vec::new();
        if self.eat_kw(Keyword::Given) {
            self.expect(&Token::LParen, "'('")?;
            loop {
                let var = self.ident()?;
                let value = if self.eat(&Token::Eq, "'='") {
                    Some(self.literal()?)
                } else {
                    None
                };
                given.push(Given { var, value });
                if !self.eat(&Token::Comma, "','") {
                    break;
                }
            }
            self.expect(&Token::RParen, "')'")?;
        }
        let samples = if self.eat_kw(Keyword::Using) {
            let n = self.count()?;
            self.kw(Keyword::Samples)?;
            Some(n)
        } else {
            None
        };
        Ok(MiSpec { a, b, given, samples })
    }

    fn literal(&mut self) -> Result<Literal, SyntaxError> {
        match self.peek() {
            Token::Number(x) => {
                let x = *x;
                self.advance();
                Ok(Literal::Number(x))
            }
            Token::Text(_) => {
                let Token::Text(s) = self.advance() else { unreachable!() };
                Ok(Literal::Text(s))
            }
            _ => {
                self.expected.push("number");
                self.expected.push("quoted label");
                Err(self.error())
            }
        }
    }

    /// After `SIMULATE (`.
    fn simulate_vars(&mut self) -> Result<Statement, SyntaxError> {
        self.kw(Keyword::Select)?;
        self.expect(&Token::Star, "'*'")?;
        self.kw(Keyword::From)?;
        self.kw(Keyword::Variables)?;
        self.kw(Keyword::Of)?;
        let variables_of = self.ident()?;
        let filter = if self.eat_kw(Keyword::Where) {
            Some(self.var_filter()?)
        } else {
            None
        };
        self.expect(&Token::RParen, "')'")?;
        self.kw(Keyword::From)?;
        let model = self.ident()?;
        self.kw(Keyword::Limit)?;
        let limit = self.count()?;
        Ok(Statement::SimulateVars {
            variables_of,
            filter,
            model,
            limit,
        })
    }

    /// Canonical form:
    /// `PROBABILITY OF (MUTUAL INFORMATION WITH v < t) > p`.
    ///
    /// Also accepts the irregular published variant, where the whole
    /// predicate may be parenthesized, the mutual information term may be
    /// closed before its comparison, and one unmatched `)` may precede the
    /// outer comparison.
    fn var_filter(&mut self) -> Result<VarFilter, SyntaxError> {
        let wrapped = self.eat(&Token::LParen, "'('");
        self.kw(Keyword::Probability)?;
        self.kw(Keyword::Of)?;
        self.expect(&Token::LParen, "'('")?;
        self.kw(Keyword::Mutual)?;
        self.kw(Keyword::Information)?;
        self.kw(Keyword::With)?;
        let target = self.ident()?;
        let mut open = 1 + usize::from(wrapped);
        if self.eat(&Token::RParen, "')'") {
            open -= 1;
        }
        let mi = self.threshold()?;
        for _ in 0..open {
            self.expect(&Token::RParen, "')'")?;
        }
        if *self.peek() == Token::RParen && matches!(self.peek_at(1), Token::Lt | Token::Gt) {
            self.advance();
        }
        let prob = self.threshold()?;
        Ok(VarFilter { target, mi, prob })
    }
}
