//! Total lexer: never aborts, always covers every input byte with a token.

use super::span::{Position, SourceSpan};
use super::token::{CommentStyle, Keyword, Operator, Punct, Token, TokenKind, TokenStream};
use crate::diag::{codes, Diagnostic};

struct Cursor<'a> {
    src: &'a str,
    pos: Position,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos.offset..].chars().next()
    }

    fn peek_nth(&self, n: usize) -> Option<char> {
        self.src[self.pos.offset..].chars().nth(n)
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos.offset..]
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos.offset += c.len_utf8();
        if c == '\n' {
            self.pos.line += 1;
            self.pos.column = 1;
        } else {
            self.pos.column += 1;
        }
        Some(c)
    }

    fn bump_while(&mut self, mut pred: impl FnMut(char) -> bool) {
        while let Some(c) = self.peek() {
            if !pred(c) {
                break;
            }
            self.bump();
        }
    }

    fn at_end(&self) -> bool {
        self.pos.offset >= self.src.len()
    }
}

/// Lex `source` into a full token stream (trivia included) plus diagnostics.
pub fn tokenize(source: &str) -> (TokenStream, Vec<Diagnostic>) {
    let mut cur = Cursor {
        src: source,
        pos: Position::start(),
    };
    let mut tokens = Vec::new();
    let mut diags = Vec::new();

    while !cur.at_end() {
        let start = cur.pos;
        let kind = lex_one(&mut cur, &mut diags);
        let span = SourceSpan::new(start, cur.pos);
        tokens.push(Token {
            kind,
            lexeme: source[start.offset..cur.pos.offset].to_string(),
            span,
        });
    }

    (
        TokenStream {
            tokens,
            eof: cur.pos,
        },
        diags,
    )
}

fn lex_one(cur: &mut Cursor<'_>, diags: &mut Vec<Diagnostic>) -> TokenKind {
    let start = cur.pos;
    let c = cur.peek().expect("lex_one called at end of input");

    if c.is_whitespace() {
        cur.bump_while(char::is_whitespace);
        return TokenKind::Whitespace;
    }

    if cur.rest().starts_with("(*") {
        cur.bump();
        cur.bump();
        loop {
            if cur.rest().starts_with("*)") {
                cur.bump();
                cur.bump();
                return TokenKind::Comment(CommentStyle::Block);
            }
            if cur.bump().is_none() {
                let opener = SourceSpan::new(start, Position::new(start.line, start.column + 2, start.offset + 2));
                diags.push(Diagnostic::error(
                    codes::UNTERMINATED_COMMENT,
                    "unterminated comment",
                    opener,
                ));
                return TokenKind::Error;
            }
        }
    }

    if cur.rest().starts_with("//") {
        cur.bump_while(|c| c != '\n');
        return TokenKind::Comment(CommentStyle::Line);
    }

    if c.is_ascii_alphabetic() || c == '_' {
        cur.bump_while(|c| c.is_ascii_alphanumeric() || c == '_');
        let word = &cur.src[start.offset..cur.pos.offset];
        if cur.peek() == Some('#')
            && (word.eq_ignore_ascii_case("T") || word.eq_ignore_ascii_case("TIME"))
        {
            cur.bump();
            cur.bump_while(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
            let body_start = start.offset + word.len() + 1;
            let body = &cur.src[body_start..cur.pos.offset];
            return match parse_duration(body) {
                Some(ms) => TokenKind::Time(ms),
                None => {
                    diags.push(Diagnostic::error(
                        codes::MALFORMED_TIME,
                        format!(
                            "malformed time literal '{}'",
                            &cur.src[start.offset..cur.pos.offset]
                        ),
                        SourceSpan::new(start, cur.pos),
                    ));
                    TokenKind::Error
                }
            };
        }
        return match Keyword::lookup(word) {
            Some(kw) => TokenKind::Keyword(kw),
            None => TokenKind::Identifier,
        };
    }

    if c.is_ascii_digit() {
        return lex_number(cur, diags);
    }

    if c == '\'' || c == '"' {
        return lex_string(cur, c, diags);
    }

    let two = |a: char, b: char| c == a && cur.peek_nth(1) == Some(b);
    let (kind, len) = if two(':', '=') {
        (TokenKind::Operator(Operator::Assign), 2)
    } else if two('=', '>') {
        (TokenKind::Operator(Operator::OutputArrow), 2)
    } else if two('<', '>') {
        (TokenKind::Operator(Operator::Ne), 2)
    } else if two('<', '=') {
        (TokenKind::Operator(Operator::Le), 2)
    } else if two('>', '=') {
        (TokenKind::Operator(Operator::Ge), 2)
    } else if two('.', '.') {
        (TokenKind::Punct(Punct::DotDot), 2)
    } else {
        let kind = match c {
            '=' => TokenKind::Operator(Operator::Eq),
            '<' => TokenKind::Operator(Operator::Lt),
            '>' => TokenKind::Operator(Operator::Gt),
            '+' => TokenKind::Operator(Operator::Plus),
            '-' => TokenKind::Operator(Operator::Minus),
            '*' => TokenKind::Operator(Operator::Star),
            '/' => TokenKind::Operator(Operator::Slash),
            '&' => TokenKind::Operator(Operator::Ampersand),
            ';' => TokenKind::Punct(Punct::Semicolon),
            ':' => TokenKind::Punct(Punct::Colon),
            ',' => TokenKind::Punct(Punct::Comma),
            '(' => TokenKind::Punct(Punct::LParen),
            ')' => TokenKind::Punct(Punct::RParen),
            '.' => TokenKind::Punct(Punct::Dot),
            '[' => TokenKind::Punct(Punct::LBracket),
            ']' => TokenKind::Punct(Punct::RBracket),
            _ => {
                cur.bump();
                diags.push(Diagnostic::error(
                    codes::UNEXPECTED_CHAR,
                    format!("unexpected character '{}'", c.escape_debug()),
                    SourceSpan::new(start, cur.pos),
                ));
                return TokenKind::Error;
            }
        };
        (kind, 1)
    };
    for _ in 0..len {
        cur.bump();
    }
    kind
}

fn lex_number(cur: &mut Cursor<'_>, diags: &mut Vec<Diagnostic>) -> TokenKind {
    let start = cur.pos;
    cur.bump_while(|c| c.is_ascii_digit() || c == '_');
    let digits: String = cur.src[start.offset..cur.pos.offset]
        .chars()
        .filter(|c| *c != '_')
        .collect();

    let malformed = |cur: &Cursor<'_>, diags: &mut Vec<Diagnostic>| {
        diags.push(Diagnostic::error(
            codes::MALFORMED_NUMBER,
            format!(
                "malformed numeric literal '{}'",
                &cur.src[start.offset..cur.pos.offset]
            ),
            SourceSpan::new(start, cur.pos),
        ));
        TokenKind::Error
    };

    // Based integer: 2#1010, 8#17, 16#FF
    if cur.peek() == Some('#') {
        cur.bump();
        let body_start = cur.pos.offset;
        cur.bump_while(|c| c.is_ascii_alphanumeric() || c == '_');
        let body: String = cur.src[body_start..cur.pos.offset]
            .chars()
            .filter(|c| *c != '_')
            .collect();
        let radix = match digits.as_str() {
            "2" => 2,
            "8" => 8,
            "16" => 16,
            _ => return malformed(cur, diags),
        };
        return match i64::from_str_radix(&body, radix) {
            Ok(v) if !body.is_empty() => TokenKind::Integer(v),
            _ => malformed(cur, diags),
        };
    }

    let mut is_real = false;
    if cur.peek() == Some('.') && cur.peek_nth(1).is_some_and(|c| c.is_ascii_digit()) {
        is_real = true;
        cur.bump();
        cur.bump_while(|c| c.is_ascii_digit() || c == '_');
    }
    if matches!(cur.peek(), Some('e' | 'E')) {
        let sign = matches!(cur.peek_nth(1), Some('+' | '-'));
        let digit_at = if sign { 2 } else { 1 };
        if cur.peek_nth(digit_at).is_some_and(|c| c.is_ascii_digit()) {
            is_real = true;
            cur.bump();
            if sign {
                cur.bump();
            }
            cur.bump_while(|c| c.is_ascii_digit());
        } else {
            cur.bump();
            return malformed(cur, diags);
        }
    }
    if cur.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
        cur.bump_while(|c| c.is_ascii_alphanumeric() || c == '_');
        return malformed(cur, diags);
    }

    let text: String = cur.src[start.offset..cur.pos.offset]
        .chars()
        .filter(|c| *c != '_')
        .collect();
    if is_real {
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => TokenKind::Real(v),
            _ => malformed(cur, diags),
        }
    } else {
        match text.parse::<i64>() {
            Ok(v) => TokenKind::Integer(v),
            Err(_) => malformed(cur, diags),
        }
    }
}

fn lex_string(cur: &mut Cursor<'_>, quote: char, diags: &mut Vec<Diagnostic>) -> TokenKind {
    let start = cur.pos;
    cur.bump();
    let mut value = String::new();
    loop {
        match cur.peek() {
            None | Some('\n') => {
                diags.push(Diagnostic::error(
                    codes::UNTERMINATED_STRING,
                    "unterminated string literal",
                    SourceSpan::new(start, cur.pos),
                ));
                return TokenKind::Error;
            }
            Some(c) if c == quote => {
                cur.bump();
                return TokenKind::String(value);
            }
            Some('$') => {
                cur.bump();
                match cur.peek() {
                    Some('$') => value.push('$'),
                    Some('\'') => value.push('\''),
                    Some('"') => value.push('"'),
                    Some('N' | 'n' | 'L' | 'l') => value.push('\n'),
                    Some('R' | 'r') => value.push('\r'),
                    Some('T' | 't') => value.push('\t'),
                    Some('P' | 'p') => value.push('\u{c}'),
                    Some(h) if h.is_ascii_hexdigit() => {
                        let lo = cur.peek_nth(1).filter(|c| c.is_ascii_hexdigit());
                        if let Some(lo) = lo {
                            let code = u8::from_str_radix(&format!("{h}{lo}"), 16)
                                .expect("two hex digits");
                            value.push(char::from(code));
                            cur.bump();
                        } else {
                            value.push('$');
                            value.push(h);
                        }
                    }
                    _ => {
                        value.push('$');
                        continue;
                    }
                }
                cur.bump();
            }
            Some(c) => {
                value.push(c);
                cur.bump();
            }
        }
    }
}

/// Parse the body of a `T#` literal (`5m`, `1h30m`, `100ms`, `1.5s`, `2m_30s`)
/// into milliseconds.
pub fn parse_duration(body: &str) -> Option<i64> {
    let lower = body.to_ascii_lowercase();
    let bytes = lower.as_bytes();
    let mut i = 0;
    let mut total = 0f64;
    let mut components = 0;
    while i < bytes.len() {
        if bytes[i] == b'_' && components > 0 {
            i += 1;
            continue;
        }
        let num_start = i;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if num_start == i {
            return None;
        }
        let number: f64 = lower[num_start..i].parse().ok()?;
        let (scale, unit_len) = if lower[i..].starts_with("ms") {
            (1.0, 2)
        } else if lower[i..].starts_with('d') {
            (86_400_000.0, 1)
        } else if lower[i..].starts_with('h') {
            (3_600_000.0, 1)
        } else if lower[i..].starts_with('m') {
            (60_000.0, 1)
        } else if lower[i..].starts_with('s') {
            (1_000.0, 1)
        } else {
            return None;
        };
        total += number * scale;
        i += unit_len;
        components += 1;
    }
    if components == 0 || !total.is_finite() || total > i64::MAX as f64 {
        return None;
    }
    Some(total.round() as i64)
}

/// Canonical `T#...` spelling of a duration in milliseconds.
pub fn format_duration(ms: i64) -> String {
    if ms == 0 {
        return "T#0s".to_string();
    }
    let mut out = String::from("T#");
    if ms < 0 {
        out.push('-');
    }
    let mut rest = ms.unsigned_abs();
    for (unit, scale) in [("d", 86_400_000u64), ("h", 3_600_000), ("m", 60_000), ("s", 1_000), ("ms", 1)] {
        let n = rest / scale;
        if n > 0 {
            out.push_str(&format!("{n}{unit}"));
            rest -= n * scale;
        }
    }
    out
}
