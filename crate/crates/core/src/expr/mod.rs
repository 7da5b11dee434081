//! A small expression language for radial coefficients `a(r)` and
//! nonlinearities `f(u1, ..., um)`.
//!
//! Expressions are parsed once against a declared variable list and then
//! evaluated many times with positional bindings, so the hot loop of the
//! solver never touches a map.

mod parser;
mod validate;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use validate::{
    validate_nonlinearity, MonotonicityViolation, PositivityViolation, ValidationReport,
    ORIGIN_TOLERANCE,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("`{function}` takes {expected} argument(s), got {found}")]
    Arity {
        function: String,
        expected: usize,
        found: usize,
    },

    #[error("invalid variable list: {0}")]
    Variables(String),

    #[error("domain error in `{subtree}`: {message}")]
    Domain { subtree: String, message: String },

    #[error("no binding for variable `{0}`")]
    MissingBinding(String),
}

impl ExprError {
    /// True for failures detected while parsing, as opposed to evaluating.
    pub fn is_parse_error(&self) -> bool {
        matches!(
            self,
            ExprError::Syntax { .. }
                | ExprError::UnknownIdentifier { .. }
                | ExprError::Arity { .. }
                | ExprError::Variables(_)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Function {
    Exp,
    Log,
    Sqrt,
    Abs,
    Min,
    Max,
}

impl Function {
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "exp" => Function::Exp,
            "log" => Function::Log,
            "sqrt" => Function::Sqrt,
            "abs" => Function::Abs,
            "min" => Function::Min,
            "max" => Function::Max,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Function::Exp => "exp",
            Function::Log => "log",
            Function::Sqrt => "sqrt",
            Function::Abs => "abs",
            Function::Min => "min",
            Function::Max => "max",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Function::Min | Function::Max => 2,
            _ => 1,
        }
    }
}

/// Syntax tree node. Variables are indices into the owning [`Expression`]'s
/// variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    Variable(usize),
    Neg(Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    Call(Function, Vec<Node>),
}

/// A parsed expression together with the variable set it was parsed against.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    variables: Arc<[String]>,
}

pub fn parse(source: &str, variables: &[&str]) -> Result<Expression, ExprError> {
    let variables = check_variables(variables)?;
    let root = parser::Parser::new(source, &variables).parse()?;
    Ok(Expression { root, variables })
}

fn check_variables(variables: &[&str]) -> Result<Arc<[String]>, ExprError> {
    for (i, name) in variables.iter().enumerate() {
        let valid = name
            .chars()
            .next()
            .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
            && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
        if !valid {
            return Err(ExprError::Variables(format!(
                "`{name}` is not an identifier"
            )));
        }
        if Function::from_name(name).is_some() {
            return Err(ExprError::Variables(format!("`{name}` is a function name")));
        }
        if variables[..i].contains(name) {
            return Err(ExprError::Variables(format!("`{name}` declared twice")));
        }
    }
    Ok(variables.iter().map(|s| s.to_string()).collect())
}

/// Names `u1`, ..., `um` used by nonlinearities.
pub fn unknown_names(m: usize) -> Vec<String> {
    (1..=m).map(|i| format!("u{i}")).collect()
}

impl Expression {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Evaluates with bindings given positionally, in declaration order.
    pub fn eval_slice(&self, values: &[f64]) -> Result<f64, ExprError> {
        if values.len() < self.variables.len() {
            return Err(ExprError::MissingBinding(
                self.variables[values.len()].clone(),
            ));
        }
        eval_node(&self.root, values, &self.variables)
    }

    /// Evaluates with bindings looked up by name.
    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64, ExprError> {
        let values = self
            .variables
            .iter()
            .map(|name| {
                bindings
                    .get(name)
                    .copied()
                    .ok_or_else(|| ExprError::MissingBinding(name.clone()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        eval_node(&self.root, &values, &self.variables)
    }

    /// Convenience for single-variable expressions such as `a(r)`.
    pub fn eval1(&self, x: f64) -> Result<f64, ExprError> {
        self.eval_slice(std::slice::from_ref(&x))
    }

    /// True if the tree contains no variable at all.
    pub fn is_constant(&self) -> bool {
        fn walk(node: &Node) -> bool {
            match node {
                Node::Number(_) => true,
                Node::Variable(_) => false,
                Node::Neg(a) => walk(a),
                Node::Binary(_, a, b) => walk(a) && walk(b),
                Node::Call(_, args) => args.iter().all(walk),
            }
        }
        walk(&self.root)
    }

    /// Sum of several expressions over the same variable set.
    pub fn sum(terms: &[Expression]) -> Result<Expression, ExprError> {
        let first = terms
            .first()
            .ok_or_else(|| ExprError::Variables("cannot sum an empty list".into()))?;
        let mut root = first.root.clone();
        for term in &terms[1..] {
            if term.variables != first.variables {
                return Err(ExprError::Variables(
                    "summed expressions use different variable sets".into(),
                ));
            }
            root = Node::Binary(BinaryOp::Add, Box::new(root), Box::new(term.root.clone()));
        }
        Ok(Expression {
            root,
            variables: first.variables.clone(),
        })
    }

    /// Restricts to the diagonal: every variable is replaced by the single
    /// variable `name`, so `f(u1, ..., um)` becomes `f(z, ..., z)`.
    pub fn diagonal(&self, name: &str) -> Result<Expression, ExprError> {
        fn walk(node: &Node) -> Node {
            match node {
                Node::Number(x) => Node::Number(*x),
                Node::Variable(_) => Node::Variable(0),
                Node::Neg(a) => Node::Neg(Box::new(walk(a))),
                Node::Binary(op, a, b) => Node::Binary(*op, Box::new(walk(a)), Box::new(walk(b))),
                Node::Call(f, args) => Node::Call(*f, args.iter().map(walk).collect()),
            }
        }
        Ok(Expression {
            root: walk(&self.root),
            variables: check_variables(&[name])?,
        })
    }

    /// Same tree, variables renamed positionally.
    pub fn rename_variables(&self, names: &[&str]) -> Result<Expression, ExprError> {
        if names.len() != self.variables.len() {
            return Err(ExprError::Variables(format!(
                "expected {} names, got {}",
                self.variables.len(),
                names.len()
            )));
        }
        Ok(Expression {
            root: self.root.clone(),
            variables: check_variables(names)?,
        })
    }
}

/// Fully parenthesised rendering; reparsing it yields the same tree.
impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, &self.root, &self.variables)
    }
}

fn write_node(f: &mut fmt::Formatter<'_>, node: &Node, vars: &[String]) -> fmt::Result {
    match node {
        Node::Number(x) => write!(f, "{x}"),
        Node::Variable(i) => f.write_str(&vars[*i]),
        Node::Neg(a) => {
            f.write_str("(-")?;
            write_node(f, a, vars)?;
            f.write_str(")")
        }
        Node::Binary(op, a, b) => {
            f.write_str("(")?;
            write_node(f, a, vars)?;
            write!(f, " {} ", op.symbol())?;
            write_node(f, b, vars)?;
            f.write_str(")")
        }
        Node::Call(func, args) => {
            write!(f, "{}(", func.name())?;
            for (i, arg) in args.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write_node(f, arg, vars)?;
            }
            f.write_str(")")
        }
    }
}

struct NodeDisplay<'a>(&'a Node, &'a [String]);

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(f, self.0, self.1)
    }
}

fn domain(node: &Node, vars: &[String], message: &str) -> ExprError {
    ExprError::Domain {
        subtree: NodeDisplay(node, vars).to_string(),
        message: message.to_string(),
    }
}

fn eval_node(node: &Node, values: &[f64], vars: &[String]) -> Result<f64, ExprError> {
    Ok(match node {
        Node::Number(x) => *x,
        Node::Variable(i) => values[*i],
        Node::Neg(a) => -eval_node(a, values, vars)?,
        Node::Binary(op, a, b) => {
            let x = eval_node(a, values, vars)?;
            let y = eval_node(b, values, vars)?;
            match op {
                BinaryOp::Add => x + y,
                BinaryOp::Sub => x - y,
                BinaryOp::Mul => x * y,
                BinaryOp::Div => {
                    if y == 0.0 {
                        return Err(domain(node, vars, "division by zero"));
                    }
                    x / y
                }
                BinaryOp::Pow => power(x, y).map_err(|msg| domain(node, vars, msg))?,
            }
        }
        Node::Call(func, args) => {
            let x = eval_node(&args[0], values, vars)?;
            match func {
                Function::Exp => x.exp(),
                Function::Log => {
                    if x <= 0.0 {
                        return Err(domain(node, vars, "log of a nonpositive number"));
                    }
                    x.ln()
                }
                Function::Sqrt => {
                    if x < 0.0 {
                        return Err(domain(node, vars, "sqrt of a negative number"));
                    }
                    x.sqrt()
                }
                Function::Abs => x.abs(),
                Function::Min => x.min(eval_node(&args[1], values, vars)?),
                Function::Max => x.max(eval_node(&args[1], values, vars)?),
            }
        }
    })
}

fn power(base: f64, exponent: f64) -> Result<f64, &'static str> {
    if base == 0.0 && exponent < 0.0 {
        return Err("zero raised to a negative power");
    }
    if base < 0.0 {
        // Negative bases are admitted only for integer exponents.
        if exponent.fract() != 0.0 {
            return Err("negative base with a non-integer exponent");
        }
        if exponent.abs() <= i32::MAX as f64 {
            return Ok(base.powi(exponent as i32));
        }
    }
    if exponent == 1.0 {
        return Ok(base);
    }
    Ok(base.powf(exponent))
}
