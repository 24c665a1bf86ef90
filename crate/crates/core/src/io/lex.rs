use std::fmt;

/// Location of a diagnostic: 1-based line and column range.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SourceSpan {
    pub file: Option<String>,
    pub line: usize,
    pub start: usize,
    pub end: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(file) = &self.file {
            write!(f, "{file}:")?;
        }
        write!(f, "{}:{}", self.line, self.start)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{span}: {message}")]
pub struct ParseError {
    pub span: SourceSpan,
    pub message: String,
}

/// All diagnostics of one parse, in source order.
#[derive(Debug, Clone, PartialEq, Eq, Default, thiserror::Error)]
pub struct Diagnostics(pub Vec<ParseError>);

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl Diagnostics {
    pub fn with_file(mut self, file: &str) -> Self {
        for e in &mut self.0 {
            e.span.file = Some(file.to_string());
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Int(i64),
    Str(String),
    Sym(&'static str),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Int(i) => write!(f, "`{i}`"),
            Tok::Str(s) => write!(f, "\"{s}\""),
            Tok::Sym(s) => write!(f, "`{s}`"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub tok: Tok,
    pub start: usize,
    pub end: usize,
}

const SYMBOLS: [&str; 22] = [
    "->", "=>", "..", "<=", ">=", "!=", "{", "}", "(", ")", "[", "]", ",", ":", ".", "=", "<", ">",
    "+", "-", "*", "/",
];

/// Splits one line into tokens; `#` starts a comment.
pub fn tokenize(line: &str, line_no: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let err = |start: usize, end: usize, message: String| ParseError {
        span: SourceSpan {
            file: None,
            line: line_no,
            start: start + 1,
            end: end + 1,
        },
        message,
    };
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c == '#' {
            break;
        }
        let start = i;
        let tok = if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            Tok::Int(
                text.parse()
                    .map_err(|_| err(start, i, format!("integer `{text}` is too large")))?,
            )
        } else if c == '"' {
            i += 1;
            while i < chars.len() && chars[i] != '"' {
                i += 1;
            }
            if i == chars.len() {
                return Err(err(start, i, "unterminated string".into()));
            }
            i += 1;
            Tok::Str(chars[start + 1..i - 1].iter().collect())
        } else {
            let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
            match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
                Some(s) => {
                    i += s.len();
                    Tok::Sym(s)
                }
                None => return Err(err(start, start + 1, format!("unexpected character `{c}`"))),
            }
        };
        out.push(Token {
            tok,
            start: start + 1,
            end: i + 1,
        });
    }
    Ok(out)
}

/// Token cursor over one line.
pub struct Cursor {
    toks: Vec<Token>,
    pos: usize,
    line: usize,
    width: usize,
}

impl Cursor {
    pub fn new(toks: Vec<Token>, line: usize, width: usize) -> Cursor {
        Cursor {
            toks,
            pos: 0,
            line,
            width,
        }
    }

    pub fn span(&self) -> SourceSpan {
        let (start, end) = match self.toks.get(self.pos) {
            Some(t) => (t.start, t.end),
            None => (self.width + 1, self.width + 1),
        };
        SourceSpan {
            file: None,
            line: self.line,
            start,
            end,
        }
    }

    pub fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError {
            span: self.span(),
            message: message.into(),
        }
    }

    /// Error spanning from token `from` to the current position.
    pub fn error_from(&self, from: usize, message: impl Into<String>) -> ParseError {
        let mut span = self.span();
        if let Some(t) = self.toks.get(from) {
            span.start = t.start;
            span.end = self
                .toks
                .get(self.pos.saturating_sub(1))
                .map_or(t.end, |e| e.end);
        }
        ParseError {
            span,
            message: message.into(),
        }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.tok)
    }

    pub fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }

    pub fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.tok.clone());
        self.pos += 1;
        t
    }

    pub fn is_sym(&self, s: &str) -> bool {
        matches!(self.peek(), Some(Tok::Sym(x)) if *x == s)
    }

    pub fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(x)) if x == kw)
    }

    pub fn eat_sym(&mut self, s: &str) -> bool {
        let hit = self.is_sym(s);
        if hit {
            self.pos += 1;
        }
        hit
    }

    pub fn eat_kw(&mut self, kw: &str) -> bool {
        let hit = self.is_kw(kw);
        if hit {
            self.pos += 1;
        }
        hit
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.to_string(),
            None => "end of line".to_string(),
        }
    }

    pub fn expect_sym(&mut self, s: &str) -> Result<(), ParseError> {
        if self.eat_sym(s) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{s}`, found {}", self.found())))
        }
    }

    pub fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{kw}`, found {}", self.found())))
        }
    }

    pub fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.found()))),
        }
    }

    pub fn int(&mut self, what: &str) -> Result<i64, ParseError> {
        let neg = self.eat_sym("-");
        match self.peek() {
            Some(Tok::Int(i)) => {
                let i = *i;
                self.pos += 1;
                Ok(if neg { -i } else { i })
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.found()))),
        }
    }

    pub fn uint(&mut self, what: &str) -> Result<u64, ParseError> {
        match self.peek() {
            Some(Tok::Int(i)) => {
                let i = *i as u64;
                self.pos += 1;
                Ok(i)
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.found()))),
        }
    }

    pub fn string(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error(format!("expected {what}, found {}", self.found()))),
        }
    }

    pub fn end(&self) -> Result<(), ParseError> {
        if self.at_end() {
            Ok(())
        } else {
            Err(self.error(format!("unexpected {}", self.found())))
        }
    }
}

/// Non-empty lines as cursors, with tokenizer errors collected.
pub fn lines(text: &str) -> (Vec<Cursor>, Vec<ParseError>) {
    let mut cursors = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in text.lines().enumerate() {
        match tokenize(line, i + 1) {
            Ok(toks) if toks.is_empty() => {}
            Ok(toks) => cursors.push(Cursor::new(toks, i + 1, line.chars().count())),
            Err(e) => errors.push(e),
        }
    }
    (cursors, errors)
}
