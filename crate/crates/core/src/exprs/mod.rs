//! Small arithmetic expression language for perturbation Hamiltonians and
//! direct field components.
//!
//! Variables are `p1..pn`, `q1..qn`, `I1..Id`, `theta1..thetad`, `t` and
//! `eps`; when a family has a single member the bare name (`p`, `q`, `I`,
//! `theta`) is accepted as well. `pi` is the only named constant and the
//! functions are `sin cos exp tanh sech sqrt`.

mod ast;
mod dual;
mod eval;
mod lexer;
mod parser;

pub use ast::{BinOp, Expr, Func, Var, VarLayout};
pub use dual::{Dual, Scalar};
pub use eval::Program;
pub use parser::{parse, MAX_SOURCE_LEN};

use std::ops::Range;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("unexpected character {ch:?} at bytes {}..{}", span.start, span.end)]
    Lex { ch: char, span: Range<usize> },
    #[error("malformed number {text:?} at bytes {}..{}", span.start, span.end)]
    BadNumber { text: String, span: Range<usize> },
    #[error("unknown identifier {name} at bytes {}..{}", span.start, span.end)]
    UnknownIdentifier { name: String, span: Range<usize> },
    #[error("{func} takes {expected} argument(s), got {got} at bytes {}..{}", span.start, span.end)]
    Arity {
        func: String,
        expected: usize,
        got: usize,
        span: Range<usize>,
    },
    #[error("unbalanced parenthesis at bytes {}..{}", span.start, span.end)]
    UnbalancedParen { span: Range<usize> },
    #[error("unexpected token {found:?} at bytes {}..{}", span.start, span.end)]
    UnexpectedToken { found: String, span: Range<usize> },
    #[error("unexpected end of input at byte {pos}")]
    UnexpectedEnd { pos: usize },
    #[error("expression source is {len} bytes, limit is {MAX_SOURCE_LEN}")]
    TooLarge { len: usize },
    #[error("expression evaluated to a non-finite value ({value})")]
    NonFinite { value: f64 },
    #[error("expected {expected} variable values, got {got}")]
    BindingLength { expected: usize, got: usize },
}

impl ExprError {
    pub fn span(&self) -> Option<Range<usize>> {
        match self {
            ExprError::Lex { span, .. }
            | ExprError::BadNumber { span, .. }
            | ExprError::UnknownIdentifier { span, .. }
            | ExprError::Arity { span, .. }
            | ExprError::UnbalancedParen { span }
            | ExprError::UnexpectedToken { span, .. } => Some(span.clone()),
            ExprError::UnexpectedEnd { pos } => Some(*pos..*pos),
            _ => None,
        }
    }

    /// Evaluation failures as opposed to malformed source.
    pub fn is_evaluation(&self) -> bool {
        matches!(
            self,
            ExprError::NonFinite { .. } | ExprError::BindingLength { .. }
        )
    }
}
