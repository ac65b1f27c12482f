//! Tiny arithmetic expressions in one variable, used for diffusion and
//! drift coefficients given as strings in config files.
//!
//! Grammar: numbers, the variable `x`, `+ - * / ^` with the usual
//! precedence, parentheses, and the functions `exp`, `sqrt`, `abs`.
//! `^` binds tighter than unary minus, so `-x^2` reads as `-(x^2)`.

/// A parsed coefficient expression, kept with its source text.
#[derive(Debug, Clone)]
pub struct CoeffExpr {
    ast: Node,
    source: String,
}

#[derive(Debug, Clone)]
enum Node {
    Number(f64),
    Variable,
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Exp(Box<Node>),
    Sqrt(Box<Node>),
    Abs(Box<Node>),
}

impl CoeffExpr {
    /// Parses `source`; the error message carries a character offset.
    pub fn parse(source: &str) -> Result<CoeffExpr, String> {
        let tokens = tokenize(source)?;
        let mut parser = Parser { tokens, pos: 0 };
        let ast = parser.expression()?;
        match parser.peek() {
            None => Ok(CoeffExpr {
                ast,
                source: source.to_string(),
            }),
            Some(tok) => Err(format!(
                "char {}: unexpected {}",
                tok.offset + 1,
                tok.describe()
            )),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        eval_node(&self.ast, x)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

fn eval_node(node: &Node, x: f64) -> f64 {
    match node {
        Node::Number(v) => *v,
        Node::Variable => x,
        Node::Neg(a) => -eval_node(a, x),
        Node::Add(a, b) => eval_node(a, x) + eval_node(b, x),
        Node::Sub(a, b) => eval_node(a, x) - eval_node(b, x),
        Node::Mul(a, b) => eval_node(a, x) * eval_node(b, x),
        Node::Div(a, b) => eval_node(a, x) / eval_node(b, x),
        Node::Pow(a, b) => eval_node(a, x).powf(eval_node(b, x)),
        Node::Exp(a) => eval_node(a, x).exp(),
        Node::Sqrt(a) => eval_node(a, x).sqrt(),
        Node::Abs(a) => eval_node(a, x).abs(),
    }
}

#[derive(Debug, Clone, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

#[derive(Debug, Clone)]
struct Token {
    kind: TokenKind,
    offset: usize,
}

impl Token {
    fn describe(&self) -> String {
        match &self.kind {
            TokenKind::Number(v) => format!("number {v}"),
            TokenKind::Ident(s) => format!("name '{s}'"),
            TokenKind::Plus => "'+'".into(),
            TokenKind::Minus => "'-'".into(),
            TokenKind::Star => "'*'".into(),
            TokenKind::Slash => "'/'".into(),
            TokenKind::Caret => "'^'".into(),
            TokenKind::Open => "'('".into(),
            TokenKind::Close => "')'".into(),
        }
    }
}

fn tokenize(source: &str) -> Result<Vec<Token>, String> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let offset = i;
        match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => tokens.push(Token { kind: TokenKind::Plus, offset }),
            '-' => tokens.push(Token { kind: TokenKind::Minus, offset }),
            '*' => tokens.push(Token { kind: TokenKind::Star, offset }),
            '/' => tokens.push(Token { kind: TokenKind::Slash, offset }),
            '^' => tokens.push(Token { kind: TokenKind::Caret, offset }),
            '(' => tokens.push(Token { kind: TokenKind::Open, offset }),
            ')' => tokens.push(Token { kind: TokenKind::Close, offset }),
            '0'..='9' | '.' => {
                let mut j = i;
                while j < bytes.len() && matches!(bytes[j] as char, '0'..='9' | '.') {
                    j += 1;
                }
                // Exponent part, e.g. 1e-3.
                if j < bytes.len()
                    && matches!(bytes[j] as char, 'e' | 'E')
                    && j + 1 < bytes.len()
                    && matches!(bytes[j + 1] as char, '0'..='9' | '+' | '-')
                {
                    j += 2;
                    while j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                        j += 1;
                    }
                }
                let text = &source[i..j];
                let value: f64 = text
                    .parse()
                    .map_err(|_| format!("char {}: bad number '{text}'", offset + 1))?;
                tokens.push(Token {
                    kind: TokenKind::Number(value),
                    offset,
                });
                i = j;
                continue;
            }
            'a'..='z' | 'A'..='Z' | '_' => {
                let mut j = i;
                while j < bytes.len()
                    && matches!(bytes[j] as char, 'a'..='z' | 'A'..='Z' | '0'..='9' | '_')
                {
                    j += 1;
                }
                tokens.push(Token {
                    kind: TokenKind::Ident(source[i..j].to_string()),
                    offset,
                });
                i = j;
                continue;
            }
            other => return Err(format!("char {}: unexpected character '{other}'", offset + 1)),
        }
        i += 1;
    }
    Ok(tokens)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<Token> {
        let tok = self.tokens.get(self.pos).cloned();
        if tok.is_some() {
            self.pos += 1;
        }
        tok
    }

    fn expression(&mut self) -> Result<Node, String> {
        let mut node = self.term()?;
        while let Some(tok) = self.peek() {
            match tok.kind {
                TokenKind::Plus => {
                    self.advance();
                    node = Node::Add(Box::new(node), Box::new(self.term()?));
                }
                TokenKind::Minus => {
                    self.advance();
                    node = Node::Sub(Box::new(node), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Node, String> {
        let mut node = self.factor()?;
        while let Some(tok) = self.peek() {
            match tok.kind {
                TokenKind::Star => {
                    self.advance();
                    node = Node::Mul(Box::new(node), Box::new(self.factor()?));
                }
                TokenKind::Slash => {
                    self.advance();
                    node = Node::Div(Box::new(node), Box::new(self.factor()?));
                }
                _ => break,
            }
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Node, String> {
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Minus {
                self.advance();
                return Ok(Node::Neg(Box::new(self.factor()?)));
            }
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, String> {
        let base = self.atom()?;
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Caret {
                self.advance();
                // Right-associative; the exponent may itself be negated.
                let exponent = self.factor()?;
                return Ok(Node::Pow(Box::new(base), Box::new(exponent)));
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, String> {
        let tok = self
            .advance()
            .ok_or_else(|| "expression ends too early".to_string())?;
        match tok.kind {
            TokenKind::Number(v) => Ok(Node::Number(v)),
            TokenKind::Ident(name) => match name.as_str() {
                "x" => Ok(Node::Variable),
                "exp" | "sqrt" | "abs" => {
                    let open = self.advance();
                    if !matches!(
                        open,
                        Some(Token {
                            kind: TokenKind::Open,
                            ..
                        })
                    ) {
                        return Err(format!(
                            "char {}: '{name}' needs a parenthesized argument",
                            tok.offset + 1
                        ));
                    }
                    let arg = self.expression()?;
                    let close = self.advance();
                    if !matches!(
                        close,
                        Some(Token {
                            kind: TokenKind::Close,
                            ..
                        })
                    ) {
                        return Err(format!(
                            "char {}: unclosed argument of '{name}'",
                            tok.offset + 1
                        ));
                    }
                    let boxed = Box::new(arg);
                    Ok(match name.as_str() {
                        "exp" => Node::Exp(boxed),
                        "sqrt" => Node::Sqrt(boxed),
                        _ => Node::Abs(boxed),
                    })
                }
                other => Err(format!(
                    "char {}: unknown name '{other}' (known: x, exp, sqrt, abs)",
                    tok.offset + 1
                )),
            },
            TokenKind::Open => {
                let inner = self.expression()?;
                let close = self.advance();
                if !matches!(
                    close,
                    Some(Token {
                        kind: TokenKind::Close,
                        ..
                    })
                ) {
                    return Err(format!("char {}: unclosed parenthesis", tok.offset + 1));
                }
                Ok(inner)
            }
            _ => Err(format!(
                "char {}: unexpected {}",
                tok.offset + 1,
                tok.describe()
            )),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eval(source: &str, x: f64) -> f64 {
        CoeffExpr::parse(source).unwrap().eval(x)
    }

    #[test]
    fn arithmetic_follows_the_usual_precedence() {
        assert_eq!(eval("1 + 2 * 3", 0.0), 7.0);
        assert_eq!(eval("(1 + 2) * 3", 0.0), 9.0);
        assert_eq!(eval("2 ^ 3 ^ 1", 0.0), 8.0);
        assert_eq!(eval("-x^2", 3.0), -9.0);
        assert_eq!(eval("6 / 3 / 2", 0.0), 1.0);
        assert_eq!(eval("1e-2 + 1E2", 0.0), 100.01);
    }

    #[test]
    fn variable_and_functions_evaluate() {
        assert_eq!(eval("-x", 2.5), -2.5);
        assert_eq!(eval("x^2 - 3*x + 1", 2.0), -1.0);
        let v = eval("exp(-x^2 / 2)", 1.0);
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(eval("sqrt(abs(-x))", 9.0), 3.0);
    }

    #[test]
    fn malformed_sources_are_rejected_with_a_position() {
        for bad in ["2 +", "exp x", "(1", "x $ 2", "foo(3)", "1..2"] {
            let err = CoeffExpr::parse(bad).unwrap_err();
            assert!(!err.is_empty(), "no message for {bad:?}");
        }
        let err = CoeffExpr::parse("x + y").unwrap_err();
        assert!(err.contains("char 5"), "{err}");
        assert!(err.contains("'y'"), "{err}");
    }

    #[test]
    fn source_text_is_preserved() {
        let expr = CoeffExpr::parse(" 1 + x ").unwrap();
        assert_eq!(expr.source(), " 1 + x ");
    }
}
