//! Side-effect-free expressions used as trigger guards, group guards,
//! control-graph guards and attribute initialisers.

use std::fmt;

use super::model::{Power, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Eq => "=",
            CmpOp::Ne => "!=",
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Gt => ">",
            CmpOp::Ge => ">=",
        }
    }

    fn holds<T: Ord>(self, a: T, b: T) -> bool {
        match self {
            CmpOp::Eq => a == b,
            CmpOp::Ne => a != b,
            CmpOp::Lt => a < b,
            CmpOp::Le => a <= b,
            CmpOp::Gt => a > b,
            CmpOp::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(i64),
    Str(String),
    Bool(bool),
    /// Attribute of the thing in context (the triggering thing).
    Attr(String),
    /// Number of things anywhere inside a machine.
    Count(String),
    /// Sum of an integer attribute over the things inside a machine.
    Sum(String, String),
    /// Power state of a machine, as the string `"on"` or `"off"`.
    Power(String),
    /// Whether a clock currently holds a deadline.
    Active(String),
    /// Seconds since a clock was last started.
    Elapsed(String),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Cmp(CmpOp, Box<Expr>, Box<Expr>),
    Arith(ArithOp, Box<Expr>, Box<Expr>),
}

/// Result of evaluating an expression.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Val {
    Int(i64),
    Str(String),
    Bool(bool),
}

impl From<Value> for Val {
    fn from(v: Value) -> Self {
        match v {
            Value::Int(i) => Val::Int(i),
            Value::Str(s) => Val::Str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("no thing attribute `{0}` in context")]
    MissingAttr(String),
    #[error("unknown machine `{0}`")]
    UnknownMachine(String),
    #[error("unknown clock `{0}`")]
    UnknownClock(String),
    #[error("clock `{0}` is not running")]
    ClockStopped(String),
    #[error("type mismatch in `{0}`")]
    Type(String),
    #[error("integer overflow")]
    Overflow,
    #[error("a string or boolean cannot be stored as a thing attribute")]
    NotAttribute,
}

/// What an expression may observe.
pub trait EvalContext {
    fn attr(&self, name: &str) -> Option<Value>;
    fn count(&self, machine: &str) -> Option<i64>;
    fn sum(&self, machine: &str, attr: &str) -> Option<i64>;
    fn power(&self, machine: &str) -> Option<Power>;
    fn clock_active(&self, clock: &str) -> Option<bool>;
    /// `Some(None)` for a known clock that is stopped.
    fn elapsed(&self, clock: &str) -> Option<Option<i64>>;
}

impl Expr {
    pub fn eval(&self, ctx: &dyn EvalContext) -> Result<Val, EvalError> {
        Ok(match self {
            Expr::Int(i) => Val::Int(*i),
            Expr::Str(s) => Val::Str(s.clone()),
            Expr::Bool(b) => Val::Bool(*b),
            Expr::Attr(a) => ctx
                .attr(a)
                .ok_or_else(|| EvalError::MissingAttr(a.clone()))?
                .into(),
            Expr::Count(m) => Val::Int(
                ctx.count(m)
                    .ok_or_else(|| EvalError::UnknownMachine(m.clone()))?,
            ),
            Expr::Sum(m, a) => Val::Int(
                ctx.sum(m, a)
                    .ok_or_else(|| EvalError::UnknownMachine(m.clone()))?,
            ),
            Expr::Power(m) => Val::Str(
                ctx.power(m)
                    .ok_or_else(|| EvalError::UnknownMachine(m.clone()))?
                    .name()
                    .to_string(),
            ),
            Expr::Active(c) => Val::Bool(
                ctx.clock_active(c)
                    .ok_or_else(|| EvalError::UnknownClock(c.clone()))?,
            ),
            Expr::Elapsed(c) => Val::Int(
                ctx.elapsed(c)
                    .ok_or_else(|| EvalError::UnknownClock(c.clone()))?
                    .ok_or_else(|| EvalError::ClockStopped(c.clone()))?,
            ),
            Expr::Not(e) => Val::Bool(!e.eval_bool(ctx)?),
            Expr::And(a, b) => Val::Bool(a.eval_bool(ctx)? && b.eval_bool(ctx)?),
            Expr::Or(a, b) => Val::Bool(a.eval_bool(ctx)? || b.eval_bool(ctx)?),
            Expr::Cmp(op, a, b) => {
                let holds = match (a.eval(ctx)?, b.eval(ctx)?) {
                    (Val::Int(x), Val::Int(y)) => op.holds(x, y),
                    (Val::Str(x), Val::Str(y)) => op.holds(x, y),
                    (Val::Bool(x), Val::Bool(y)) if matches!(op, CmpOp::Eq | CmpOp::Ne) => {
                        op.holds(x, y)
                    }
                    _ => return Err(EvalError::Type(self.to_string())),
                };
                Val::Bool(holds)
            }
            Expr::Arith(op, a, b) => {
                let (Val::Int(x), Val::Int(y)) = (a.eval(ctx)?, b.eval(ctx)?) else {
                    return Err(EvalError::Type(self.to_string()));
                };
                let r = match op {
                    ArithOp::Add => x.checked_add(y),
                    ArithOp::Sub => x.checked_sub(y),
                    ArithOp::Mul => x.checked_mul(y),
                };
                Val::Int(r.ok_or(EvalError::Overflow)?)
            }
        })
    }

    pub fn eval_bool(&self, ctx: &dyn EvalContext) -> Result<bool, EvalError> {
        match self.eval(ctx)? {
            Val::Bool(b) => Ok(b),
            _ => Err(EvalError::Type(self.to_string())),
        }
    }

    /// Guard semantics: any evaluation error counts as false.
    pub fn holds(&self, ctx: &dyn EvalContext) -> bool {
        self.eval_bool(ctx).unwrap_or(false)
    }

    /// Evaluates into a storable attribute value.
    pub fn eval_value(&self, ctx: &dyn EvalContext) -> Result<Value, EvalError> {
        match self.eval(ctx)? {
            Val::Int(i) => Ok(Value::Int(i)),
            Val::Str(s) => Ok(Value::Str(s)),
            Val::Bool(_) => Err(EvalError::NotAttribute),
        }
    }

    /// Static type when it does not depend on thing attributes.
    pub fn static_type(&self) -> Option<Ty> {
        match self {
            Expr::Int(_) | Expr::Count(_) | Expr::Sum(..) | Expr::Elapsed(_) | Expr::Arith(..) => {
                Some(Ty::Int)
            }
            Expr::Str(_) | Expr::Power(_) => Some(Ty::Str),
            Expr::Bool(_)
            | Expr::Active(_)
            | Expr::Not(_)
            | Expr::And(..)
            | Expr::Or(..)
            | Expr::Cmp(..) => Some(Ty::Bool),
            Expr::Attr(_) => None,
        }
    }

    /// Type errors found without evaluating.
    pub fn type_errors(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_type_errors(&mut out);
        out
    }

    fn collect_type_errors(&self, out: &mut Vec<String>) {
        let expect = |e: &Expr, ty: Ty, out: &mut Vec<String>| {
            if let Some(t) = e.static_type() {
                if t != ty {
                    out.push(format!("`{e}` is {t:?}, expected {ty:?}"));
                }
            }
        };
        match self {
            Expr::Not(e) => {
                expect(e, Ty::Bool, out);
                e.collect_type_errors(out);
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                expect(a, Ty::Bool, out);
                expect(b, Ty::Bool, out);
                a.collect_type_errors(out);
                b.collect_type_errors(out);
            }
            Expr::Arith(_, a, b) => {
                expect(a, Ty::Int, out);
                expect(b, Ty::Int, out);
                a.collect_type_errors(out);
                b.collect_type_errors(out);
            }
            Expr::Cmp(op, a, b) => {
                if let (Some(x), Some(y)) = (a.static_type(), b.static_type()) {
                    if x != y {
                        out.push(format!("cannot compare {x:?} with {y:?} in `{self}`"));
                    } else if x == Ty::Bool && !matches!(op, CmpOp::Eq | CmpOp::Ne) {
                        out.push(format!("booleans are unordered in `{self}`"));
                    }
                }
                a.collect_type_errors(out);
                b.collect_type_errors(out);
            }
            _ => {}
        }
    }

    /// Machines referenced through `count`, `sum` and `power`.
    pub fn machine_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| match e {
            Expr::Count(m) | Expr::Sum(m, _) | Expr::Power(m) => out.push(m.as_str()),
            _ => {}
        });
        out
    }

    pub fn clock_refs(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.visit(&mut |e| match e {
            Expr::Active(c) | Expr::Elapsed(c) => out.push(c.as_str()),
            _ => {}
        });
        out
    }

    fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match self {
            Expr::Not(e) => e.visit(f),
            Expr::And(a, b) | Expr::Or(a, b) | Expr::Cmp(_, a, b) | Expr::Arith(_, a, b) => {
                a.visit(f);
                b.visit(f);
            }
            _ => {}
        }
    }

    pub fn and(self, other: Expr) -> Expr {
        Expr::And(Box::new(self), Box::new(other))
    }

    pub fn cmp(op: CmpOp, a: Expr, b: Expr) -> Expr {
        Expr::Cmp(op, Box::new(a), Box::new(b))
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Or(..) => 1,
            Expr::And(..) => 2,
            Expr::Not(_) => 3,
            Expr::Cmp(..) => 4,
            Expr::Arith(ArithOp::Add | ArithOp::Sub, ..) => 5,
            Expr::Arith(ArithOp::Mul, ..) => 6,
            _ => 7,
        }
    }

    fn fmt_operand(&self, f: &mut fmt::Formatter<'_>, min: u8) -> fmt::Result {
        if self.precedence() < min {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Int,
    Str,
    Bool,
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.precedence();
        match self {
            Expr::Int(i) => write!(f, "{i}"),
            Expr::Str(s) => write!(f, "\"{s}\""),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Attr(a) => f.write_str(a),
            Expr::Count(m) => write!(f, "count({m})"),
            Expr::Sum(m, a) => write!(f, "sum({m}, {a})"),
            Expr::Power(m) => write!(f, "power({m})"),
            Expr::Active(c) => write!(f, "active({c})"),
            Expr::Elapsed(c) => write!(f, "elapsed({c})"),
            Expr::Not(e) => {
                f.write_str("not ")?;
                e.fmt_operand(f, p)
            }
            Expr::And(a, b) | Expr::Or(a, b) => {
                let kw = if matches!(self, Expr::And(..)) {
                    "and"
                } else {
                    "or"
                };
                a.fmt_operand(f, p)?;
                write!(f, " {kw} ")?;
                b.fmt_operand(f, p + 1)
            }
            Expr::Cmp(op, a, b) => {
                a.fmt_operand(f, p + 1)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_operand(f, p + 1)
            }
            Expr::Arith(op, a, b) => {
                a.fmt_operand(f, p)?;
                write!(f, " {} ", op.symbol())?;
                b.fmt_operand(f, p + 1)
            }
        }
    }
}
