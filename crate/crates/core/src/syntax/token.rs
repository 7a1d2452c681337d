use std::fmt;

use super::span::SourceSpan;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Keyword {
    Program,
    EndProgram,
    FunctionBlock,
    EndFunctionBlock,
    Function,
    EndFunction,
    Var,
    VarInput,
    VarOutput,
    VarInOut,
    EndVar,
    Constant,
    If,
    Then,
    Elsif,
    Else,
    EndIf,
    Case,
    Of,
    EndCase,
    For,
    To,
    By,
    Do,
    EndFor,
    While,
    EndWhile,
    Repeat,
    Until,
    EndRepeat,
    Exit,
    Return,
    True,
    False,
    And,
    Or,
    Xor,
    Not,
    Mod,
}

const KEYWORDS: &[(&str, Keyword)] = &[
    ("PROGRAM", Keyword::Program),
    ("END_PROGRAM", Keyword::EndProgram),
    ("FUNCTION_BLOCK", Keyword::FunctionBlock),
    ("END_FUNCTION_BLOCK", Keyword::EndFunctionBlock),
    ("FUNCTION", Keyword::Function),
    ("END_FUNCTION", Keyword::EndFunction),
    ("VAR", Keyword::Var),
    ("VAR_INPUT", Keyword::VarInput),
    ("VAR_OUTPUT", Keyword::VarOutput),
    ("VAR_IN_OUT", Keyword::VarInOut),
    ("END_VAR", Keyword::EndVar),
    ("CONSTANT", Keyword::Constant),
    ("IF", Keyword::If),
    ("THEN", Keyword::Then),
    ("ELSIF", Keyword::Elsif),
    ("ELSE", Keyword::Else),
    ("END_IF", Keyword::EndIf),
    ("CASE", Keyword::Case),
    ("OF", Keyword::Of),
    ("END_CASE", Keyword::EndCase),
    ("FOR", Keyword::For),
    ("TO", Keyword::To),
    ("BY", Keyword::By),
    ("DO", Keyword::Do),
    ("END_FOR", Keyword::EndFor),
    ("WHILE", Keyword::While),
    ("END_WHILE", Keyword::EndWhile),
    ("REPEAT", Keyword::Repeat),
    ("UNTIL", Keyword::Until),
    ("END_REPEAT", Keyword::EndRepeat),
    ("EXIT", Keyword::Exit),
    ("RETURN", Keyword::Return),
    ("TRUE", Keyword::True),
    ("FALSE", Keyword::False),
    ("AND", Keyword::And),
    ("OR", Keyword::Or),
    ("XOR", Keyword::Xor),
    ("NOT", Keyword::Not),
    ("MOD", Keyword::Mod),
];

impl Keyword {
    /// Case-insensitive keyword lookup.
    pub fn lookup(word: &str) -> Option<Keyword> {
        KEYWORDS
            .iter()
            .find(|(text, _)| text.eq_ignore_ascii_case(word))
            .map(|(_, kw)| *kw)
    }

    pub fn as_str(self) -> &'static str {
        KEYWORDS
            .iter()
            .find(|(_, kw)| *kw == self)
            .map(|(text, _)| *text)
            .expect("every keyword has a spelling")
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operator {
    Assign,
    OutputArrow,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    Ampersand,
}

impl Operator {
    pub fn as_str(self) -> &'static str {
        match self {
            Operator::Assign => ":=",
            Operator::OutputArrow => "=>",
            Operator::Eq => "=",
            Operator::Ne => "<>",
            Operator::Lt => "<",
            Operator::Le => "<=",
            Operator::Gt => ">",
            Operator::Ge => ">=",
            Operator::Plus => "+",
            Operator::Minus => "-",
            Operator::Star => "*",
            Operator::Slash => "/",
            Operator::Ampersand => "&",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Punct {
    Semicolon,
    Colon,
    Comma,
    LParen,
    RParen,
    Dot,
    DotDot,
    LBracket,
    RBracket,
}

impl Punct {
    pub fn as_str(self) -> &'static str {
        match self {
            Punct::Semicolon => ";",
            Punct::Colon => ":",
            Punct::Comma => ",",
            Punct::LParen => "(",
            Punct::RParen => ")",
            Punct::Dot => ".",
            Punct::DotDot => "..",
            Punct::LBracket => "[",
            Punct::RBracket => "]",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CommentStyle {
    /// `(* ... *)`
    Block,
    /// `// ...`
    Line,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Keyword(Keyword),
    Identifier,
    Integer(i64),
    Real(f64),
    /// Duration normalized to milliseconds.
    Time(i64),
    /// Decoded string contents.
    String(String),
    Operator(Operator),
    Punct(Punct),
    Comment(CommentStyle),
    Whitespace,
    /// Text the lexer could not make sense of; a diagnostic was emitted for it.
    Error,
}

impl TokenKind {
    pub fn is_trivia(&self) -> bool {
        matches!(self, TokenKind::Whitespace | TokenKind::Comment(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    pub span: SourceSpan,
}

impl Token {
    pub fn is_keyword(&self, kw: Keyword) -> bool {
        self.kind == TokenKind::Keyword(kw)
    }

    pub fn is_punct(&self, p: Punct) -> bool {
        self.kind == TokenKind::Punct(p)
    }

    pub fn is_op(&self, op: Operator) -> bool {
        self.kind == TokenKind::Operator(op)
    }

    /// Short human description used in "expected X, found Y" messages.
    pub fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Keyword(k) => format!("keyword {k}"),
            TokenKind::Identifier => format!("identifier '{}'", self.lexeme),
            TokenKind::Integer(_) | TokenKind::Real(_) => format!("number {}", self.lexeme),
            TokenKind::Time(_) => format!("time literal {}", self.lexeme),
            TokenKind::String(_) => "string literal".to_string(),
            TokenKind::Operator(o) => format!("'{}'", o.as_str()),
            TokenKind::Punct(p) => format!("'{}'", p.as_str()),
            TokenKind::Comment(_) => "comment".to_string(),
            TokenKind::Whitespace => "whitespace".to_string(),
            TokenKind::Error => format!("'{}'", self.lexeme),
        }
    }
}

/// Every token of a source text, trivia included, in source order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TokenStream {
    pub tokens: Vec<Token>,
    /// Position just past the last byte of the input.
    pub eof: super::span::Position,
}

impl TokenStream {
    /// Concatenated lexemes; equals the lexed input byte-for-byte.
    pub fn reconstruct(&self) -> String {
        self.tokens.iter().map(|t| t.lexeme.as_str()).collect()
    }

    pub fn significant(&self) -> impl Iterator<Item = &Token> {
        self.tokens.iter().filter(|t| !t.kind.is_trivia())
    }
}
