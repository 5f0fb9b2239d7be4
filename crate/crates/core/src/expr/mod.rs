//! Holomorphic expressions `F(φ₁, …, φ_k)` with exact first and second partials.
//!
//! The grammar only admits holomorphic building blocks: `+ - * /`, integer
//! powers, `exp`, `sin`, `cos`, and the principal `log`. Variables are spelled
//! `phi1 … phiK` and the imaginary unit is `i`, so `3+2*i` is a literal.
//! Names such as `conj`, `re`, `im` or `abs` are recognized only to be
//! rejected with [`ExprError::NonHolomorphic`].
//!
//! Derivatives come from nested forward-mode duals (see [`dual`]).

pub mod dual;
mod parse;

use std::fmt;

use thiserror::Error;

use crate::linalg::CMatrix;
use crate::{c64, Complex};
use dual::{powi, Dual, Scalar};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("variable phi{index} at {position} is out of range 1..={arity}")]
    Arity { position: usize, index: usize, arity: usize },
    #[error("`{name}` at {position} is not holomorphic")]
    NonHolomorphic { position: usize, name: String },
    #[error("exponent at {position} is not an integer constant")]
    NonIntegerExponent { position: usize },
    #[error("evaluation hit a pole or branch point in `{subexpression}`")]
    EvalDomain { subexpression: String },
    #[error("expected {expected} phi components, got {actual}")]
    PhiLength { expected: usize, actual: usize },
    #[error("arity must be positive")]
    ZeroArity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Sin,
    Cos,
    Log,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Log => "log",
        }
    }
}

/// Expression tree. Variables are stored zero-based.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(Complex),
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i64),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Number of nodes on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        1 + match self {
            Expr::Const(_) | Expr::Var(_) => 0,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.depth(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.depth().max(b.depth()),
        }
    }

    fn max_var(&self) -> Option<usize> {
        match self {
            Expr::Const(_) => None,
            Expr::Var(j) => Some(*j),
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.max_var(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => a.max_var().max(b.max_var()),
        }
    }

    fn eval<T: Scalar>(&self, vars: &[T]) -> Result<T, ExprError> {
        let out = match self {
            Expr::Const(c) => T::constant(*c),
            Expr::Var(j) => vars[*j],
            Expr::Neg(a) => -a.eval(vars)?,
            Expr::Add(a, b) => a.eval(vars)? + b.eval(vars)?,
            Expr::Sub(a, b) => a.eval(vars)? - b.eval(vars)?,
            Expr::Mul(a, b) => a.eval(vars)? * b.eval(vars)?,
            Expr::Div(a, b) => {
                let num = a.eval(vars)?;
                let den = b.eval(vars)?;
                if den.value() == Complex::new(0.0, 0.0) {
                    return Err(self.domain_error());
                }
                num / den
            }
            Expr::Pow(a, n) => {
                let base = a.eval(vars)?;
                if *n < 0 && base.value() == Complex::new(0.0, 0.0) {
                    return Err(self.domain_error());
                }
                powi(base, *n)
            }
            Expr::Call(f, a) => {
                let arg = a.eval(vars)?;
                match f {
                    Func::Exp => arg.exp(),
                    Func::Sin => arg.sin(),
                    Func::Cos => arg.cos(),
                    Func::Log => {
                        if arg.value() == Complex::new(0.0, 0.0) {
                            return Err(self.domain_error());
                        }
                        arg.ln()
                    }
                }
            }
        };
        if !out.value().is_finite() {
            return Err(self.domain_error());
        }
        Ok(out)
    }

    fn domain_error(&self) -> ExprError {
        ExprError::EvalDomain { subexpression: self.to_string() }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized; reparsing yields the same tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => fmt_const(*c, f),
            Expr::Var(j) => write!(f, "phi{}", j + 1),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) if *n < 0 => write!(f, "({a}^(-{}))", n.unsigned_abs()),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

fn fmt_const(c: Complex, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    // The parser only produces non-negative reals and the unit `i`; anything
    // else was built by hand and prints as an equivalent (not identical) tree.
    match (c.re, c.im) {
        (re, im) if im == 0.0 && re >= 0.0 => write!(f, "{re:?}"),
        (re, im) if re == 0.0 && im == 1.0 => f.write_str("i"),
        (re, im) => write!(f, "({re:?} + {im:?}*i)"),
    }
}

/// A parsed holomorphic function of `arity` complex variables. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct HoloExpr {
    ast: Expr,
    arity: usize,
}

/// Value, gradient `F_i` and Hessian `F_ij` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    pub value: Complex,
    pub grad: Vec<Complex>,
    pub hess: CMatrix,
}

impl HoloExpr {
    pub fn parse(source: &str, arity: usize) -> Result<Self, ExprError> {
        if arity == 0 {
            return Err(ExprError::ZeroArity);
        }
        let ast = parse::parse(source, arity)?;
        Ok(HoloExpr { ast, arity })
    }

    /// Wraps an already built tree, checking every variable is in range.
    pub fn from_ast(ast: Expr, arity: usize) -> Result<Self, ExprError> {
        if arity == 0 {
            return Err(ExprError::ZeroArity);
        }
        if let Some(j) = ast.max_var() {
            if j >= arity {
                return Err(ExprError::Arity { position: 0, index: j + 1, arity });
            }
        }
        Ok(HoloExpr { ast, arity })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    fn check_len(&self, phi: &[Complex]) -> Result<(), ExprError> {
        if phi.len() != self.arity {
            return Err(ExprError::PhiLength { expected: self.arity, actual: phi.len() });
        }
        Ok(())
    }

    /// Plain value, no derivatives.
    pub fn value(&self, phi: &[Complex]) -> Result<Complex, ExprError> {
        self.check_len(phi)?;
        self.ast.eval(phi)
    }

    /// Value and all first partials, one dual pass per variable.
    pub fn gradient(&self, phi: &[Complex]) -> Result<(Complex, Vec<Complex>), ExprError> {
        self.check_len(phi)?;
        let mut vars: Vec<Dual<Complex>> = phi.iter().map(|&p| Dual::constant(p)).collect();
        let mut value = c64(0.0, 0.0);
        let mut grad = Vec::with_capacity(self.arity);
        for j in 0..self.arity {
            vars[j] = Dual::variable(phi[j]);
            let r = self.ast.eval(&vars)?;
            value = r.re;
            grad.push(r.eps);
            vars[j] = Dual::constant(phi[j]);
        }
        Ok((value, grad))
    }

    /// Value, gradient and Hessian. Only the upper triangle is computed; the
    /// lower one is mirrored, so the Hessian is exactly symmetric.
    pub fn evaluate(&self, phi: &[Complex]) -> Result<EvalResult, ExprError> {
        self.check_len(phi)?;
        let k = self.arity;
        let zero = c64(0.0, 0.0);
        let one = c64(1.0, 0.0);
        let mut value = zero;
        let mut grad = vec![zero; k];
        let mut hess = CMatrix::zeros(k);
        let mut vars: Vec<Dual<Dual<Complex>>> = phi.iter().map(|&p| Dual::constant(p)).collect();
        for a in 0..k {
            for b in a..k {
                for (j, v) in vars.iter_mut().enumerate() {
                    let inner = Dual::new(phi[j], if j == b { one } else { zero });
                    let outer = Dual::new(if j == a { one } else { zero }, zero);
                    *v = Dual::new(inner, outer);
                }
                let r = self.ast.eval(&vars)?;
                if a == b {
                    value = r.re.re;
                    grad[a] = r.eps.re;
                }
                hess[(a, b)] = r.eps.eps;
                hess[(b, a)] = r.eps.eps;
            }
        }
        Ok(EvalResult { value, grad, hess })
    }
}

impl fmt::Display for HoloExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.ast.fmt(f)
    }
}
