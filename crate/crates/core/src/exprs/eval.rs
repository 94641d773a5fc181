use super::ast::{BinOp, Expr, Func, Var, VarLayout};
use super::dual::{Dual, Scalar};
use super::ExprError;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Const(f64),
    Load(usize),
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    PowI(i32),
    Call(Func),
}

/// An expression flattened to postfix form against a fixed variable layout.
#[derive(Debug, Clone)]
pub struct Program {
    ops: Vec<Op>,
    layout: VarLayout,
    depth: usize,
    expr: Expr,
}

impl Program {
    pub fn compile(expr: &Expr, layout: VarLayout) -> Program {
        let mut ops = Vec::with_capacity(expr.node_count());
        emit(expr, &layout, &mut ops);
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Load(_) => depth += 1,
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => depth -= 1,
                Op::Neg | Op::PowI(_) | Op::Call(_) => {}
            }
            max_depth = max_depth.max(depth);
        }
        Program {
            ops,
            layout,
            depth: max_depth,
            expr: expr.clone(),
        }
    }

    pub fn layout(&self) -> VarLayout {
        self.layout
    }

    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    pub fn depends_on(&self, v: Var) -> bool {
        let slot = self.layout.slot(v);
        self.ops.contains(&Op::Load(slot))
    }

    fn check(&self, vars: &[f64]) -> Result<(), ExprError> {
        if vars.len() != self.layout.len() {
            return Err(ExprError::BindingLength {
                expected: self.layout.len(),
                got: vars.len(),
            });
        }
        Ok(())
    }

    fn run<T: Scalar>(&self, load: impl Fn(usize) -> T) -> T {
        let mut stack: Vec<T> = Vec::with_capacity(self.depth);
        for op in &self.ops {
            match *op {
                Op::Const(c) => stack.push(T::constant(c)),
                Op::Load(i) => stack.push(load(i)),
                Op::Neg => {
                    let a = stack.pop().unwrap();
                    stack.push(-a);
                }
                Op::PowI(k) => {
                    let a = stack.pop().unwrap();
                    stack.push(a.powi(k));
                }
                Op::Call(f) => {
                    let a = stack.pop().unwrap();
                    stack.push(match f {
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                        Func::Exp => a.exp(),
                        Func::Tanh => a.tanh(),
                        Func::Sech => a.sech(),
                        Func::Sqrt => a.sqrt(),
                    });
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Pow => {
                    let b = stack.pop().unwrap();
                    let a = stack.pop().unwrap();
                    stack.push(match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => a / b,
                        _ => a.pow(b),
                    });
                }
            }
        }
        stack.pop().unwrap()
    }

    /// Evaluates with variables bound in [`VarLayout`] slot order.
    pub fn eval(&self, vars: &[f64]) -> Result<f64, ExprError> {
        self.check(vars)?;
        let v = self.run(|i| vars[i]);
        finite(v)
    }

    /// Value and directional derivative along `dir`.
    pub fn eval_dual(&self, vars: &[f64], dir: &[f64]) -> Result<Dual, ExprError> {
        self.check(vars)?;
        self.check(dir)?;
        let r = self.run(|i| Dual::new(vars[i], dir[i]));
        finite(r.v)?;
        finite(r.d)?;
        Ok(r)
    }

    /// Partial derivative with respect to one slot.
    pub fn partial(&self, vars: &[f64], slot: usize) -> Result<Dual, ExprError> {
        self.check(vars)?;
        let r = self.run(|i| Dual::new(vars[i], if i == slot { 1.0 } else { 0.0 }));
        finite(r.v)?;
        finite(r.d)?;
        Ok(r)
    }

    /// Value and partial derivatives for the requested slots, one forward
    /// pass per slot.
    pub fn gradient(
        &self,
        vars: &[f64],
        slots: &[usize],
        out: &mut [f64],
    ) -> Result<f64, ExprError> {
        self.check(vars)?;
        let mut value = self.run(|i| vars[i]);
        for (k, &slot) in slots.iter().enumerate() {
            let r = self.run(|i| Dual::new(vars[i], if i == slot { 1.0 } else { 0.0 }));
            out[k] = finite(r.d)?;
            value = r.v;
        }
        finite(value)
    }
}

fn finite(v: f64) -> Result<f64, ExprError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(ExprError::NonFinite { value: v })
    }
}

fn emit(e: &Expr, layout: &VarLayout, ops: &mut Vec<Op>) {
    match e {
        Expr::Num(x) => ops.push(Op::Const(*x)),
        Expr::Pi => ops.push(Op::Const(std::f64::consts::PI)),
        Expr::Var(v) => ops.push(Op::Load(layout.slot(*v))),
        Expr::Neg(a) => {
            emit(a, layout, ops);
            ops.push(Op::Neg);
        }
        Expr::Call(f, a) => {
            emit(a, layout, ops);
            ops.push(Op::Call(*f));
        }
        Expr::Bin(BinOp::Pow, a, b) => {
            emit(a, layout, ops);
            match const_integer(b) {
                Some(k) => ops.push(Op::PowI(k)),
                None => {
                    emit(b, layout, ops);
                    ops.push(Op::Pow);
                }
            }
        }
        Expr::Bin(op, a, b) => {
            emit(a, layout, ops);
            emit(b, layout, ops);
            ops.push(match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
                BinOp::Pow => unreachable!(),
            });
        }
    }
}

fn const_integer(e: &Expr) -> Option<i32> {
    let v = match e {
        Expr::Num(x) => *x,
        Expr::Neg(inner) => match inner.as_ref() {
            Expr::Num(x) => -*x,
            _ => return None,
        },
        _ => return None,
    };
    (v.fract() == 0.0 && v.abs() <= 1024.0).then_some(v as i32)
}

impl Expr {
    pub fn compile(&self, layout: VarLayout) -> Program {
        Program::compile(self, layout)
    }
}
