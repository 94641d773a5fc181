use super::ast::{BinOp, Expr, Func, VarLayout};
use super::lexer::{tokenize, Tok, Token};
use super::ExprError;

pub const MAX_SOURCE_LEN: usize = 64 * 1024;

const PREFIX_NEG_BP: u8 = 30;

/// Parses `src` against the variable layout of an `n`-pendulum,
/// `d`-rotator system.
pub fn parse(src: &str, layout: VarLayout) -> Result<Expr, ExprError> {
    if src.len() > MAX_SOURCE_LEN {
        return Err(ExprError::TooLarge { len: src.len() });
    }
    let tokens = tokenize(src)?;
    let mut p = Parser {
        tokens,
        pos: 0,
        layout,
        end: src.len(),
        open: Vec::new(),
    };
    let e = p.expr(0)?;
    if let Some(t) = p.tokens.get(p.pos) {
        return Err(match t.tok {
            Tok::RParen => ExprError::UnbalancedParen {
                span: t.span.clone(),
            },
            _ => ExprError::UnexpectedToken {
                found: t.tok.describe(),
                span: t.span.clone(),
            },
        });
    }
    Ok(e)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
    layout: VarLayout,
    end: usize,
    open: Vec<std::ops::Range<usize>>,
}

fn infix_bp(op: char) -> Option<(BinOp, u8, u8)> {
    Some(match op {
        '+' => (BinOp::Add, 10, 11),
        '-' => (BinOp::Sub, 10, 11),
        '*' => (BinOp::Mul, 20, 21),
        '/' => (BinOp::Div, 20, 21),
        '^' => (BinOp::Pow, 41, 40),
        _ => return None,
    })
}

impl Parser {
    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eof_error(&self) -> ExprError {
        match self.open.last() {
            Some(span) => ExprError::UnbalancedParen { span: span.clone() },
            None => ExprError::UnexpectedEnd { pos: self.end },
        }
    }

    fn expr(&mut self, min_bp: u8) -> Result<Expr, ExprError> {
        let mut lhs = self.prefix()?;
        while let Some(t) = self.peek() {
            let Tok::Op(c) = t.tok else { break };
            let Some((op, l_bp, r_bp)) = infix_bp(c) else {
                break;
            };
            if l_bp < min_bp {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(r_bp)?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn prefix(&mut self) -> Result<Expr, ExprError> {
        let Some(t) = self.next() else {
            return Err(self.eof_error());
        };
        match t.tok {
            Tok::Num(x) => Ok(Expr::Num(x)),
            Tok::Op('-') => Ok(Expr::Neg(Box::new(self.expr(PREFIX_NEG_BP)?))),
            Tok::LParen => {
                self.open.push(t.span.clone());
                let e = self.expr(0)?;
                match self.next() {
                    Some(Token {
                        tok: Tok::RParen, ..
                    }) => {
                        self.open.pop();
                        Ok(e)
                    }
                    Some(other) => Err(ExprError::UnexpectedToken {
                        found: other.tok.describe(),
                        span: other.span,
                    }),
                    None => Err(ExprError::UnbalancedParen { span: t.span }),
                }
            }
            Tok::Ident(name) => {
                let is_call = matches!(
                    self.peek(),
                    Some(Token {
                        tok: Tok::LParen,
                        ..
                    })
                );
                if is_call {
                    return self.call(name, t.span);
                }
                if name == "pi" {
                    return Ok(Expr::Pi);
                }
                match self.layout.resolve(&name) {
                    Some(v) => Ok(Expr::Var(v)),
                    None => Err(ExprError::UnknownIdentifier { name, span: t.span }),
                }
            }
            Tok::RParen => Err(ExprError::UnbalancedParen { span: t.span }),
            other => Err(ExprError::UnexpectedToken {
                found: other.describe(),
                span: t.span,
            }),
        }
    }

    fn call(&mut self, name: String, name_span: std::ops::Range<usize>) -> Result<Expr, ExprError> {
        let Some(func) = Func::from_name(&name) else {
            return Err(ExprError::UnknownIdentifier {
                name,
                span: name_span,
            });
        };
        let lparen = self.next().expect("caller checked for '('");
        self.open.push(lparen.span.clone());
        let mut args = Vec::new();
        if matches!(
            self.peek(),
            Some(Token {
                tok: Tok::RParen,
                ..
            })
        ) {
            let close = self.next().unwrap();
            self.open.pop();
            return Err(ExprError::Arity {
                func: name,
                expected: 1,
                got: 0,
                span: name_span.start..close.span.end,
            });
        }
        loop {
            args.push(self.expr(0)?);
            match self.next() {
                Some(Token {
                    tok: Tok::Comma, ..
                }) => continue,
                Some(Token {
                    tok: Tok::RParen,
                    span,
                }) => {
                    self.open.pop();
                    if args.len() != 1 {
                        return Err(ExprError::Arity {
                            func: name,
                            expected: 1,
                            got: args.len(),
                            span: name_span.start..span.end,
                        });
                    }
                    return Ok(Expr::Call(func, Box::new(args.pop().unwrap())));
                }
                Some(other) => {
                    return Err(ExprError::UnexpectedToken {
                        found: other.tok.describe(),
                        span: other.span,
                    })
                }
                None => return Err(ExprError::UnbalancedParen { span: lparen.span }),
            }
        }
    }
}
