use std::collections::BTreeSet;
use std::fmt;

/// Variable slots follow the flat extended-state order `p, q, I, theta, t`,
/// followed by `eps`. Indices are zero based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Var {
    P(usize),
    Q(usize),
    Action(usize),
    Angle(usize),
    Time,
    Eps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VarLayout {
    pub n: usize,
    pub d: usize,
}

impl VarLayout {
    pub fn new(n: usize, d: usize) -> Self {
        Self { n, d }
    }

    pub fn len(&self) -> usize {
        2 * self.n + 2 * self.d + 2
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn slot(&self, v: Var) -> usize {
        let (n, d) = (self.n, self.d);
        match v {
            Var::P(i) => i,
            Var::Q(i) => n + i,
            Var::Action(j) => 2 * n + j,
            Var::Angle(j) => 2 * n + d + j,
            Var::Time => 2 * n + 2 * d,
            Var::Eps => 2 * n + 2 * d + 1,
        }
    }

    pub fn contains(&self, v: Var) -> bool {
        match v {
            Var::P(i) | Var::Q(i) => i < self.n,
            Var::Action(j) | Var::Angle(j) => j < self.d,
            Var::Time | Var::Eps => true,
        }
    }

    /// All variables in slot order.
    pub fn vars(&self) -> Vec<Var> {
        let mut out = Vec::with_capacity(self.len());
        out.extend((0..self.n).map(Var::P));
        out.extend((0..self.n).map(Var::Q));
        out.extend((0..self.d).map(Var::Action));
        out.extend((0..self.d).map(Var::Angle));
        out.push(Var::Time);
        out.push(Var::Eps);
        out
    }

    pub fn resolve(&self, name: &str) -> Option<Var> {
        let indexed = |prefix: &str, count: usize, make: fn(usize) -> Var| -> Option<Var> {
            let rest = name.strip_prefix(prefix)?;
            if rest.is_empty() {
                return (count == 1).then(|| make(0));
            }
            if rest.starts_with('0') || !rest.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            let k: usize = rest.parse().ok()?;
            (k >= 1 && k <= count).then(|| make(k - 1))
        };
        match name {
            "t" => Some(Var::Time),
            "eps" => Some(Var::Eps),
            _ if name.starts_with("theta") => indexed("theta", self.d, Var::Angle),
            _ if name.starts_with('p') => indexed("p", self.n, Var::P),
            _ if name.starts_with('q') => indexed("q", self.n, Var::Q),
            _ if name.starts_with('I') => indexed("I", self.d, Var::Action),
            _ => None,
        }
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::P(i) => write!(f, "p{}", i + 1),
            Var::Q(i) => write!(f, "q{}", i + 1),
            Var::Action(j) => write!(f, "I{}", j + 1),
            Var::Angle(j) => write!(f, "theta{}", j + 1),
            Var::Time => f.write_str("t"),
            Var::Eps => f.write_str("eps"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub(crate) fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    pub(crate) fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sech,
    Sqrt,
}

impl Func {
    pub const ALL: [Func; 6] = [
        Func::Sin,
        Func::Cos,
        Func::Exp,
        Func::Tanh,
        Func::Sech,
        Func::Sqrt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sech => "sech",
            Func::Sqrt => "sqrt",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Numeric literals produced by the parser are always non-negative; a
/// leading minus is a [`Expr::Neg`] node.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn free_vars(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Num(_) | Expr::Pi => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(e) | Expr::Call(_, e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(e) | Expr::Call(_, e) => e.depends_on(v),
            Expr::Bin(_, a, b) => a.depends_on(v) || b.depends_on(v),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => 1,
            Expr::Neg(e) | Expr::Call(_, e) => 1 + e.node_count(),
            Expr::Bin(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(op, _, _) => op.precedence(),
            Expr::Neg(_) => 3,
            _ => 5,
        }
    }

    fn fmt_child(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => write!(f, "{x:?}"),
            Expr::Pi => f.write_str("pi"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(e) => {
                f.write_str("-")?;
                e.fmt_child(f, e.precedence() < 3)
            }
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                let left_parens = if *op == BinOp::Pow {
                    a.precedence() <= p
                } else {
                    a.precedence() < p
                };
                let right_parens = if *op == BinOp::Pow {
                    b.precedence() < p
                } else {
                    b.precedence() <= p
                };
                a.fmt_child(f, left_parens)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_child(f, right_parens)
            }
        }
    }
}
