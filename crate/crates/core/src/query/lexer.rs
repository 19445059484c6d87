use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::SyntaxError;

/// Reserved words. Matching is case-insensitive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Keyword {
    Simulate,
    Mutual,
    Information,
    Of,
    With,
    Given,
    Using,
    Samples,
    From,
    Models,
    Estimate,
    Probability,
    By,
    Dependence,
    Select,
    Variables,
    Where,
    Limit,
}

impl Keyword {
    pub const ALL: [Keyword; 18] = [
        Keyword::Simulate,
        Keyword::Mutual,
        Keyword::Information,
        Keyword::Of,
        Keyword::With,
        Keyword::Given,
        Keyword::Using,
        Keyword::Samples,
        Keyword::From,
        Keyword::Models,
        Keyword::Estimate,
        Keyword::Probability,
        Keyword::By,
        Keyword::Dependence,
        Keyword::Select,
        Keyword::Variables,
        Keyword::Where,
        Keyword::Limit,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Keyword::Simulate => "SIMULATE",
            Keyword::Mutual => "MUTUAL",
            Keyword::Information => "INFORMATION",
            Keyword::Of => "OF",
            Keyword::With => "WITH",
            Keyword::Given => "GIVEN",
            Keyword::Using => "USING",
            Keyword::Samples => "SAMPLES",
            Keyword::From => "FROM",
            Keyword::Models => "MODELS",
            Keyword::Estimate => "ESTIMATE",
            Keyword::Probability => "PROBABILITY",
            Keyword::By => "BY",
            Keyword::Dependence => "DEPENDENCE",
            Keyword::Select => "SELECT",
            Keyword::Variables => "VARIABLES",
            Keyword::Where => "WHERE",
            Keyword::Limit => "LIMIT",
        }
    }

    pub fn lookup(word: &str) -> Option<Keyword> {
        Keyword::ALL.into_iter().find(|k| k.as_str().eq_ignore_ascii_case(word))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Token {
    Keyword(Keyword),
    Ident(String),
    Number(f64),
    Text(String),
    LParen,
    RParen,
    Comma,
    Eq,
    Lt,
    Gt,
    Star,
    Semicolon,
    Eof,
}

impl Token {
    pub fn describe(&self) -> String {
        match self {
            Token::Keyword(k) => String::from(k.as_str()),
            Token::Ident(s) => format!("identifier {s:?}"),
            Token::Number(x) => format!("number {x}"),
            Token::Text(s) => format!("string '{s}'"),
            Token::LParen => "'('".into(),
            Token::RParen => "')'".into(),
            Token::Comma => "','".into(),
            Token::Eq => "'='".into(),
            Token::Lt => "'<'".into(),
            Token::Gt => "'>'".into(),
            Token::Star => "'*'".into(),
            Token::Semicolon => "';'".into(),
            Token::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

struct Cursor<'a> {
    chars: core::iter::Peekable<core::str::Chars<'a>>,
    pos: Pos,
}

impl Cursor<'_> {
    fn peek(&mut self) -> Option<char> {
        self.chars.peek().copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }
}

fn fail(pos: Pos, expected: &str, found: String) -> SyntaxError {
    SyntaxError {
        line: pos.line,
        column: pos.column,
        expected: alloc::vec![String::from(expected)],
        found,
    }
}

fn is_ident_start(c: char) -> bool {
    c.is_ascii_alphabetic() || c == '_'
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

/// Splits `text` into tokens, ending with [`Token::Eof`]. `--` starts a
/// comment running to the end of the line.
pub fn tokenize(text: &str) -> Result<Vec<(Token, Pos)>, SyntaxError> {
    let mut cur = Cursor {
        chars: text.chars().peekable(),
        pos: Pos { line: 1, column: 1 },
    };
    let mut out = Vec::new();
    loop {
        while cur.peek().is_some_and(char::is_whitespace) {
            cur.bump();
        }
        let start = cur.pos;
        let Some(c) = cur.peek() else {
            out.push((Token::Eof, start));
            return Ok(out);
        };
        let tok = match c {
            '(' | ')' | ',' | '=' | '<' | '>' | '*' | ';' => {
                cur.bump();
                match c {
                    '(' => Token::LParen,
                    ')' => Token::RParen,
                    ',' => Token::Comma,
                    '=' => Token::Eq,
                    '<' => Token::Lt,
                    '>' => Token::Gt,
                    '*' => Token::Star,
                    _ => Token::Semicolon,
                }
            }
            '"' | '\'' => {
                cur.bump();
                let mut s = String::new();
                loop {
                    match cur.bump() {
                        None => return Err(fail(cur.pos, "closing quote", "end of input".into())),
                        Some(q) if q == c => {
                            if cur.peek() == Some(c) {
                                cur.bump();
                                s.push(c);
                            } else {
                                break;
                            }
                        }
                        Some(ch) => s.push(ch),
                    }
                }
                if c == '"' {
                    if s.is_empty() {
                        return Err(fail(start, "non-empty quoted identifier", "\"\"".into()));
                    }
                    Token::Ident(s)
                } else {
                    Token::Text(s)
                }
            }
            '-' => {
                cur.bump();
                if cur.peek() == Some('-') {
                    while cur.peek().is_some_and(|c| c != '\n') {
                        cur.bump();
                    }
                    continue;
                }
                number(&mut cur, start, true)?
            }
            '+' => {
                cur.bump();
                number(&mut cur, start, false)?
            }
            c if c.is_ascii_digit() || c == '.' => number(&mut cur, start, false)?,
            c if is_ident_start(c) => {
                let mut s = String::new();
                while let Some(c) = cur.peek().filter(|&c| is_ident_char(c)) {
                    s.push(c);
                    cur.bump();
                }
                match Keyword::lookup(&s) {
                    Some(k) => Token::Keyword(k),
                    None => Token::Ident(s),
                }
            }
            other => return Err(fail(start, "a token", format!("character {other:?}"))),
        };
        out.push((tok, start));
    }
}

fn number(cur: &mut Cursor<'_>, start: Pos, negative: bool) -> Result<Token, SyntaxError> {
    let mut s = String::new();
    if negative {
        s.push('-');
    }
    let mut digits = 0;
    while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
        s.push(c);
        cur.bump();
        digits += 1;
    }
    if cur.peek() == Some('.') {
        s.push('.');
        cur.bump();
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            s.push(c);
            cur.bump();
            digits += 1;
        }
    }
    if digits == 0 {
        let found = cur.peek().map_or("end of input".into(), |c| format!("character {c:?}"));
        return Err(fail(cur.pos, "digit", found));
    }
    if let Some(e) = cur.peek().filter(|&c| c == 'e' || c == 'E') {
        s.push(e);
        cur.bump();
        if let Some(sign) = cur.peek().filter(|&c| c == '+' || c == '-') {
            s.push(sign);
            cur.bump();
        }
        let mut exp_digits = 0;
        while let Some(c) = cur.peek().filter(char::is_ascii_digit) {
            s.push(c);
            cur.bump();
            exp_digits += 1;
        }
        if exp_digits == 0 {
            let found = cur.peek().map_or("end of input".into(), |c| format!("character {c:?}"));
            return Err(fail(cur.pos, "exponent digits", found));
        }
    }
    if cur.peek().is_some_and(is_ident_char) {
        return Err(fail(
            cur.pos,
            "end of number",
            format!("{:?}", cur.peek().unwrap_or(' ')),
        ));
    }
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(Token::Number(x)),
        _ => Err(fail(start, "finite number", s)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn kinds(s: &str) -> Vec<Token> {
        tokenize(s).unwrap().into_iter().map(|t| t.0).collect()
    }

    #[test]
    fn keywords_any_case() {
        assert_eq!(
            kinds("simulate Mutual"),
            vec![
                Token::Keyword(Keyword::Simulate),
                Token::Keyword(Keyword::Mutual),
                Token::Eof
            ]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(
            kinds("3.5e2 -1 .5 +2")[..4],
            [
                Token::Number(350.0),
                Token::Number(-1.0),
                Token::Number(0.5),
                Token::Number(2.0)
            ]
        );
        assert!(tokenize("1e").is_err());
        assert!(tokenize("1e999").is_err());
        assert!(tokenize("12abc").is_err());
    }

    #[test]
    fn quoting_and_comments() {
        assert_eq!(
            kinds("\"with\" 'it''s' -- trailing\n x"),
            vec![
                Token::Ident("with".into()),
                Token::Text("it's".into()),
                Token::Ident("x".into()),
                Token::Eof
            ]
        );
        let err = tokenize("'open").unwrap_err();
        assert_eq!(err.expected, vec![String::from("closing quote")]);
    }

    #[test]
    fn positions() {
        let toks = tokenize("a\n  b").unwrap();
        assert_eq!(toks[1].1, Pos { line: 2, column: 3 });
    }
}
