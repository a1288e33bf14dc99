//! Solver-agnostic 0-1 integer linear models.
//!
//! Constraints are linear relations over binary variables with integer
//! coefficients, optionally guarded by an indicator variable
//! ([`Constraint::Implication`]) or tied to one in both directions
//! ([`Constraint::Reified`]). The built-in solver handles all three forms
//! natively; [`IpModel::linearize`] rewrites them to plain rows for export.

mod lp;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use thiserror::Error;

pub use lp::{export_lp, export_lp_string, parse_lp, ParseError};

#[derive(Debug, Error)]
pub enum IlpError {
    #[error("variable name {0:?} is already registered")]
    DuplicateName(String),
    #[error("variable index {0} is not registered")]
    UnknownVar(u32),
    #[error("assignment covers {got} variables, model has {expected}")]
    PartialAssignment { expected: usize, got: usize },
    #[error("reified constraints need an inequality, got an equality")]
    ReifiedEquality,
    #[error("precondition violated: {0}")]
    PreconditionViolation(String),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
    #[error(transparent)]
    Parse(#[from] ParseError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarId(pub u32);

impl VarId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x{}", self.0)
    }
}

/// Branching hints attached to a variable. They steer search order only.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BranchHint {
    /// Lower classes are branched on first.
    pub priority: u32,
    /// Value tried first.
    pub prefer: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    pub name: String,
    pub hint: BranchHint,
}

/// `Σ coef·var + constant`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LinExpr {
    pub terms: Vec<(i64, VarId)>,
    pub constant: i64,
}

impl LinExpr {
    pub fn new() -> Self {
        LinExpr::default()
    }

    /// Sum of the given variables with unit coefficients.
    pub fn sum(vars: impl IntoIterator<Item = VarId>) -> Self {
        LinExpr { terms: vars.into_iter().map(|v| (1, v)).collect(), constant: 0 }
    }

    pub fn term(mut self, coef: i64, var: VarId) -> Self {
        self.terms.push((coef, var));
        self
    }

    pub fn add(&mut self, coef: i64, var: VarId) {
        self.terms.push((coef, var));
    }

    pub fn plus(mut self, constant: i64) -> Self {
        self.constant += constant;
        self
    }

    /// Merges duplicate variables, drops zero coefficients and sorts by variable.
    pub fn canonical(&self) -> LinExpr {
        let mut merged: BTreeMap<VarId, i64> = BTreeMap::new();
        for &(c, v) in &self.terms {
            *merged.entry(v).or_default() += c;
        }
        LinExpr {
            terms: merged.into_iter().filter(|&(_, c)| c != 0).map(|(v, c)| (c, v)).collect(),
            constant: self.constant,
        }
    }

    pub fn value(&self, assignment: &[bool]) -> i64 {
        self.constant + self.terms.iter().filter(|(_, v)| assignment[v.index()]).map(|(c, _)| c).sum::<i64>()
    }

    /// Smallest and largest values over all 0-1 assignments.
    pub fn range(&self) -> (i64, i64) {
        let e = self.canonical();
        let lo = e.constant + e.terms.iter().map(|(c, _)| (*c).min(0)).sum::<i64>();
        let hi = e.constant + e.terms.iter().map(|(c, _)| (*c).max(0)).sum::<i64>();
        (lo, hi)
    }

    fn negated(&self) -> LinExpr {
        LinExpr { terms: self.terms.iter().map(|&(c, v)| (-c, v)).collect(), constant: -self.constant }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Ge => ">=",
            Relation::Eq => "=",
        }
    }
}

/// `expr rel rhs`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Linear {
    pub expr: LinExpr,
    pub rel: Relation,
    pub rhs: i64,
}

impl Linear {
    pub fn new(expr: LinExpr, rel: Relation, rhs: i64) -> Self {
        Linear { expr, rel, rhs }
    }
    pub fn le(expr: LinExpr, rhs: i64) -> Self {
        Linear::new(expr, Relation::Le, rhs)
    }
    pub fn ge(expr: LinExpr, rhs: i64) -> Self {
        Linear::new(expr, Relation::Ge, rhs)
    }
    pub fn eq(expr: LinExpr, rhs: i64) -> Self {
        Linear::new(expr, Relation::Eq, rhs)
    }

    pub fn holds(&self, assignment: &[bool]) -> bool {
        let lhs = self.expr.value(assignment);
        match self.rel {
            Relation::Le => lhs <= self.rhs,
            Relation::Ge => lhs >= self.rhs,
            Relation::Eq => lhs == self.rhs,
        }
    }

    /// Same relation with the expression constant folded into the right-hand side.
    pub fn canonical(&self) -> Linear {
        let mut expr = self.expr.canonical();
        let rhs = self.rhs - expr.constant;
        expr.constant = 0;
        Linear { expr, rel: self.rel, rhs }
    }

    /// Equivalent list of `expr <= rhs` rows (constant folded).
    pub fn as_le_rows(&self) -> Vec<(LinExpr, i64)> {
        let c = self.canonical();
        match c.rel {
            Relation::Le => vec![(c.expr, c.rhs)],
            Relation::Ge => vec![(c.expr.negated(), -c.rhs)],
            Relation::Eq => vec![(c.expr.clone(), c.rhs), (c.expr.negated(), -c.rhs)],
        }
    }

    fn vars(&self) -> impl Iterator<Item = VarId> + '_ {
        self.expr.terms.iter().map(|&(_, v)| v)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Constraint {
    Linear(Linear),
    /// `antecedent = 1` forces the consequent.
    Implication { antecedent: VarId, consequent: Linear },
    /// `indicator = 1` exactly when the inequality holds.
    Reified { indicator: VarId, iff: Linear },
}

impl Constraint {
    pub fn holds(&self, assignment: &[bool]) -> bool {
        match self {
            Constraint::Linear(l) => l.holds(assignment),
            Constraint::Implication { antecedent, consequent } => {
                !assignment[antecedent.index()] || consequent.holds(assignment)
            }
            Constraint::Reified { indicator, iff } => assignment[indicator.index()] == iff.holds(assignment),
        }
    }

    fn vars(&self) -> Box<dyn Iterator<Item = VarId> + '_> {
        match self {
            Constraint::Linear(l) => Box::new(l.vars()),
            Constraint::Implication { antecedent, consequent } => {
                Box::new(std::iter::once(*antecedent).chain(consequent.vars()))
            }
            Constraint::Reified { indicator, iff } => Box::new(std::iter::once(*indicator).chain(iff.vars())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Maximize,
    Minimize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Objective {
    pub sense: Sense,
    pub expr: LinExpr,
}

impl Objective {
    pub fn maximize(expr: LinExpr) -> Self {
        Objective { sense: Sense::Maximize, expr }
    }
    pub fn minimize(expr: LinExpr) -> Self {
        Objective { sense: Sense::Minimize, expr }
    }

    /// Whether `a` is strictly better than `b`.
    pub fn better(&self, a: i64, b: i64) -> bool {
        match self.sense {
            Sense::Maximize => a > b,
            Sense::Minimize => a < b,
        }
    }
}

impl Default for Objective {
    fn default() -> Self {
        Objective::maximize(LinExpr::new())
    }
}

/// A 0-1 linear model. Variable indices are dense from zero and names are unique.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IpModel {
    vars: Vec<Variable>,
    names: HashMap<String, VarId>,
    constraints: Vec<Constraint>,
    objective: Objective,
    /// Free-form key/value annotations carried through export.
    pub metadata: BTreeMap<String, String>,
}

impl IpModel {
    pub fn new() -> Self {
        IpModel::default()
    }

    pub fn add_var(&mut self, name: impl Into<String>) -> Result<VarId, IlpError> {
        self.add_var_hinted(name, BranchHint::default())
    }

    pub fn add_var_hinted(&mut self, name: impl Into<String>, hint: BranchHint) -> Result<VarId, IlpError> {
        let name = name.into();
        if self.names.contains_key(&name) {
            return Err(IlpError::DuplicateName(name));
        }
        let id = VarId(self.vars.len() as u32);
        self.names.insert(name.clone(), id);
        self.vars.push(Variable { name, hint });
        Ok(id)
    }

    pub fn add_constraint(&mut self, c: Constraint) -> Result<(), IlpError> {
        for v in c.vars() {
            if v.index() >= self.vars.len() {
                return Err(IlpError::UnknownVar(v.0));
            }
        }
        if let Constraint::Reified { iff, .. } = &c {
            if iff.rel == Relation::Eq {
                return Err(IlpError::ReifiedEquality);
            }
        }
        self.constraints.push(c);
        Ok(())
    }

    pub fn add_linear(&mut self, l: Linear) -> Result<(), IlpError> {
        self.add_constraint(Constraint::Linear(l))
    }

    pub fn set_objective(&mut self, objective: Objective) -> Result<(), IlpError> {
        for &(_, v) in &objective.expr.terms {
            if v.index() >= self.vars.len() {
                return Err(IlpError::UnknownVar(v.0));
            }
        }
        self.objective = objective;
        Ok(())
    }

    pub fn num_vars(&self) -> usize {
        self.vars.len()
    }
    pub fn vars(&self) -> &[Variable] {
        &self.vars
    }
    pub fn var_name(&self, v: VarId) -> &str {
        &self.vars[v.index()].name
    }
    pub fn var_by_name(&self, name: &str) -> Option<VarId> {
        self.names.get(name).copied()
    }
    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }
    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn is_linear(&self) -> bool {
        self.constraints.iter().all(|c| matches!(c, Constraint::Linear(_)))
    }

    /// Checks every constraint and evaluates the objective.
    pub fn eval(&self, assignment: &[bool]) -> Result<(bool, i64), IlpError> {
        if assignment.len() != self.vars.len() {
            return Err(IlpError::PartialAssignment { expected: self.vars.len(), got: assignment.len() });
        }
        let ok = self.constraints.iter().all(|c| c.holds(assignment));
        Ok((ok, self.objective.expr.value(assignment)))
    }

    /// Equivalent model with only linear rows. Implications become big-M
    /// rows with `M` derived from the row's own attainable range; reified
    /// constraints become two implications first.
    pub fn linearize(&self) -> IpModel {
        let mut out = IpModel {
            vars: self.vars.clone(),
            names: self.names.clone(),
            constraints: Vec::with_capacity(self.constraints.len()),
            objective: self.objective.clone(),
            metadata: self.metadata.clone(),
        };
        for c in &self.constraints {
            match c {
                Constraint::Linear(l) => out.constraints.push(Constraint::Linear(l.clone())),
                Constraint::Implication { antecedent, consequent } => {
                    for (expr, rhs) in consequent.as_le_rows() {
                        out.constraints.extend(guarded_row(expr, rhs, *antecedent, true));
                    }
                }
                Constraint::Reified { indicator, iff } => {
                    let (expr, rhs) = iff.as_le_rows().remove(0);
                    let negated = expr.negated();
                    out.constraints.extend(guarded_row(expr, rhs, *indicator, true));
                    // not (e <= k)  <=>  -e <= -k - 1
                    out.constraints.extend(guarded_row(negated, -rhs - 1, *indicator, false));
                }
            }
        }
        out
    }
}

/// `guard == active  =>  expr <= rhs` as one big-M row, or nothing when the
/// row can never be violated.
fn guarded_row(expr: LinExpr, rhs: i64, guard: VarId, active: bool) -> Option<Constraint> {
    let expr = expr.canonical();
    let (_, hi) = expr.range();
    let big_m = hi - rhs;
    if big_m <= 0 {
        return None;
    }
    let mut row = expr;
    if active {
        // e + M*b <= k + M
        row.add(big_m, guard);
        Some(Constraint::Linear(Linear::le(row.canonical(), rhs + big_m)))
    } else {
        // e - M*b <= k
        row.add(-big_m, guard);
        Some(Constraint::Linear(Linear::le(row.canonical(), rhs)))
    }
}
