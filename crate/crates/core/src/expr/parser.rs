//! Recursive-descent parser.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := factor (('*' | '/') factor)*
//! factor  := unary ('^' factor)?
//! unary   := '-' unary | primary
//! primary := number | name | name '(' expr (',' expr)* ')' | '(' expr ')'
//! ```

use super::{BinaryOp, ExprError, Function, Node};

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Name(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

pub(super) struct Parser<'a> {
    src: &'a str,
    pos: usize,
    variables: &'a [String],
    peeked: Option<(Token, usize)>,
}

impl<'a> Parser<'a> {
    pub(super) fn new(src: &'a str, variables: &'a [String]) -> Self {
        Parser {
            src,
            pos: 0,
            variables,
            peeked: None,
        }
    }

    pub(super) fn parse(mut self) -> Result<Node, ExprError> {
        if self.src.trim().is_empty() {
            return Err(syntax(0, "empty expression"));
        }
        let node = self.expr()?;
        match self.next()? {
            (Token::End, _) => Ok(node),
            (Token::RParen, at) => Err(syntax(at, "unbalanced `)`")),
            (tok, at) => Err(syntax(at, &format!("unexpected {}", describe(&tok)))),
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek()? {
                Token::Op('+') => BinaryOp::Add,
                Token::Op('-') => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            let op = match self.peek()? {
                Token::Op('*') => BinaryOp::Mul,
                Token::Op('/') => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.next()?;
            let rhs = self.factor()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn factor(&mut self) -> Result<Node, ExprError> {
        let base = self.unary()?;
        if self.peek()? == &Token::Op('^') {
            self.next()?;
            let exponent = self.factor()?;
            return Ok(Node::Binary(
                BinaryOp::Pow,
                Box::new(base),
                Box::new(exponent),
            ));
        }
        Ok(base)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        if self.peek()? == &Token::Op('-') {
            self.next()?;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let (tok, at) = self.next()?;
        match tok {
            Token::Number(x) => Ok(Node::Number(x)),
            Token::LParen => {
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            Token::Name(name) => {
                if self.peek()? == &Token::LParen {
                    self.next()?;
                    let func =
                        Function::from_name(&name).ok_or_else(|| ExprError::UnknownIdentifier {
                            name: name.clone(),
                            offset: at,
                        })?;
                    let mut args = vec![self.expr()?];
                    while self.peek()? == &Token::Comma {
                        self.next()?;
                        args.push(self.expr()?);
                    }
                    self.expect_rparen()?;
                    if args.len() != func.arity() {
                        return Err(ExprError::Arity {
                            function: name,
                            expected: func.arity(),
                            found: args.len(),
                        });
                    }
                    return Ok(Node::Call(func, args));
                }
                match self.variables.iter().position(|v| *v == name) {
                    Some(i) => Ok(Node::Variable(i)),
                    None => Err(ExprError::UnknownIdentifier { name, offset: at }),
                }
            }
            Token::End => Err(syntax(at, "unexpected end of input")),
            other => Err(syntax(at, &format!("unexpected {}", describe(&other)))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        match self.next()? {
            (Token::RParen, _) => Ok(()),
            (Token::End, at) => Err(syntax(at, "unbalanced `(`: missing `)`")),
            (tok, at) => Err(syntax(
                at,
                &format!("expected `)`, found {}", describe(&tok)),
            )),
        }
    }

    fn peek(&mut self) -> Result<&Token, ExprError> {
        if self.peeked.is_none() {
            self.peeked = Some(self.lex()?);
        }
        Ok(&self.peeked.as_ref().unwrap().0)
    }

    fn next(&mut self) -> Result<(Token, usize), ExprError> {
        match self.peeked.take() {
            Some(t) => Ok(t),
            None => self.lex(),
        }
    }

    fn lex(&mut self) -> Result<(Token, usize), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(start) else {
            return Ok((Token::End, start));
        };
        let tok = match c {
            b'0'..=b'9' | b'.' => return self.number(start),
            b'a'..=b'z' | b'A'..=b'Z' | b'_' => {
                while self.pos < bytes.len()
                    && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                return Ok((Token::Name(self.src[start..self.pos].to_string()), start));
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => Token::Op(c as char),
            b'(' => Token::LParen,
            b')' => Token::RParen,
            b',' => Token::Comma,
            _ => {
                let ch = self.src[start..].chars().next().unwrap();
                return Err(syntax(start, &format!("unexpected character `{ch}`")));
            }
        };
        self.pos += 1;
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<(Token, usize), ExprError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let from = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - from
        };
        let mut pos = start;
        let mut count = digits(&mut pos);
        if bytes.get(pos) == Some(&b'.') {
            pos += 1;
            count += digits(&mut pos);
        }
        if count == 0 {
            return Err(syntax(start, "malformed number"));
        }
        if matches!(bytes.get(pos), Some(b'e' | b'E')) {
            let mut exp = pos + 1;
            if matches!(bytes.get(exp), Some(b'+' | b'-')) {
                exp += 1;
            }
            if digits(&mut exp) == 0 {
                return Err(syntax(exp, "malformed exponent"));
            }
            pos = exp;
        }
        self.pos = pos;
        let value: f64 = self.src[start..pos]
            .parse()
            .map_err(|_| syntax(start, "malformed number"))?;
        if !value.is_finite() {
            return Err(syntax(start, "numeric literal out of range"));
        }
        Ok((Token::Number(value), start))
    }
}

fn syntax(offset: usize, message: &str) -> ExprError {
    ExprError::Syntax {
        offset,
        message: message.to_string(),
    }
}

fn describe(tok: &Token) -> String {
    match tok {
        Token::Number(x) => format!("number {x}"),
        Token::Name(n) => format!("name `{n}`"),
        Token::Op(c) => format!("operator `{c}`"),
        Token::LParen => "`(`".into(),
        Token::RParen => "`)`".into(),
        Token::Comma => "`,`".into(),
        Token::End => "end of input".into(),
    }
}
