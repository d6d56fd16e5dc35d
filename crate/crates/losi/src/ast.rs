//! Syntax trees for processes, global types, and end-point types, plus the
//! free-variable and substitution machinery everything else builds on.
//!
//! All trees are immutable values. Alpha-renaming is driven by a fresh-name
//! counter (`NameGen`) so operations stay deterministic.

use std::collections::BTreeSet;
use std::fmt;

/// Arithmetic index expressions: variables, integer constants, sums, and
/// products with a constant coefficient. The grammar is linear by
/// construction; negative constants make `i-1` and `n-i` expressible.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArithExpr {
    Var(String),
    Const(i64),
    Add(Box<ArithExpr>, Box<ArithExpr>),
    /// coefficient * expr
    ScalarMul(i64, Box<ArithExpr>),
}

impl ArithExpr {
    pub fn var(name: &str) -> ArithExpr {
        ArithExpr::Var(name.to_string())
    }

    pub fn add(a: ArithExpr, b: ArithExpr) -> ArithExpr {
        ArithExpr::Add(Box::new(a), Box::new(b))
    }

    pub fn sub(a: ArithExpr, b: ArithExpr) -> ArithExpr {
        match b {
            ArithExpr::Const(c) => ArithExpr::add(a, ArithExpr::Const(-c)),
            other => ArithExpr::add(a, ArithExpr::ScalarMul(-1, Box::new(other))),
        }
    }

    /// Defined variables of an arithmetic expression.
    pub fn dv(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_dv(&mut out);
        out
    }

    fn collect_dv(&self, out: &mut BTreeSet<String>) {
        match self {
            ArithExpr::Var(x) => {
                out.insert(x.clone());
            }
            ArithExpr::Const(_) => {}
            ArithExpr::Add(a, b) => {
                a.collect_dv(out);
                b.collect_dv(out);
            }
            ArithExpr::ScalarMul(_, e) => e.collect_dv(out),
        }
    }

    pub fn is_const(&self) -> bool {
        self.eval_const().is_some()
    }

    /// Evaluate a closed expression.
    pub fn eval_const(&self) -> Option<i64> {
        match self {
            ArithExpr::Var(_) => None,
            ArithExpr::Const(c) => Some(*c),
            ArithExpr::Add(a, b) => Some(a.eval_const()? + b.eval_const()?),
            ArithExpr::ScalarMul(c, e) => Some(c * e.eval_const()?),
        }
    }

    /// Fold constant subexpressions; leaves open parts untouched.
    pub fn fold_consts(&self) -> ArithExpr {
        if let Some(c) = self.eval_const() {
            return ArithExpr::Const(c);
        }
        match self {
            ArithExpr::Add(a, b) => ArithExpr::add(a.fold_consts(), b.fold_consts()),
            ArithExpr::ScalarMul(c, e) => ArithExpr::ScalarMul(*c, Box::new(e.fold_consts())),
            other => other.clone(),
        }
    }

    /// Plain substitution of a variable.
    pub fn subst_var(&self, x: &str, by: &ArithExpr) -> ArithExpr {
        match self {
            ArithExpr::Var(y) if y == x => by.clone(),
            ArithExpr::Var(_) | ArithExpr::Const(_) => self.clone(),
            ArithExpr::Add(a, b) => ArithExpr::add(a.subst_var(x, by), b.subst_var(x, by)),
            ArithExpr::ScalarMul(c, e) => ArithExpr::ScalarMul(*c, Box::new(e.subst_var(x, by))),
        }
    }

    /// Linear form: coefficient map plus bias, or None if it would overflow.
    pub fn linear_form(&self) -> (std::collections::BTreeMap<String, i64>, i64) {
        let mut coeffs = std::collections::BTreeMap::new();
        let mut bias = 0i64;
        self.accumulate(1, &mut coeffs, &mut bias);
        coeffs.retain(|_, v| *v != 0);
        (coeffs, bias)
    }

    fn accumulate(
        &self,
        mult: i64,
        coeffs: &mut std::collections::BTreeMap<String, i64>,
        bias: &mut i64,
    ) {
        match self {
            ArithExpr::Var(x) => *coeffs.entry(x.clone()).or_insert(0) += mult,
            ArithExpr::Const(c) => *bias += mult * c,
            ArithExpr::Add(a, b) => {
                a.accumulate(mult, coeffs, bias);
                b.accumulate(mult, coeffs, bias);
            }
            ArithExpr::ScalarMul(c, e) => e.accumulate(mult * c, coeffs, bias),
        }
    }

    /// Semantic-lite equality: equal linear forms.
    pub fn same_linear(&self, other: &ArithExpr) -> bool {
        self.linear_form() == other.linear_form()
    }
}

/// Boolean expressions guarding matches and branches.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoolExpr {
    True,
    False,
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
    Not(Box<BoolExpr>),
    Lt(ArithExpr, ArithExpr),
    Eq(ArithExpr, ArithExpr),
}

impl BoolExpr {
    pub fn dv(&self) -> BTreeSet<String> {
        match self {
            BoolExpr::True | BoolExpr::False => BTreeSet::new(),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                let mut s = a.dv();
                s.extend(b.dv());
                s
            }
            BoolExpr::Not(b) => b.dv(),
            BoolExpr::Lt(a, b) | BoolExpr::Eq(a, b) => {
                let mut s = a.dv();
                s.extend(b.dv());
                s
            }
        }
    }

    pub fn eval_const(&self) -> Option<bool> {
        match self {
            BoolExpr::True => Some(true),
            BoolExpr::False => Some(false),
            BoolExpr::And(a, b) => Some(a.eval_const()? && b.eval_const()?),
            BoolExpr::Or(a, b) => Some(a.eval_const()? || b.eval_const()?),
            BoolExpr::Not(b) => Some(!b.eval_const()?),
            BoolExpr::Lt(a, b) => Some(a.eval_const()? < b.eval_const()?),
            BoolExpr::Eq(a, b) => Some(a.eval_const()? == b.eval_const()?),
        }
    }

    pub fn subst_var(&self, x: &str, by: &ArithExpr) -> BoolExpr {
        match self {
            BoolExpr::True | BoolExpr::False => self.clone(),
            BoolExpr::And(a, b) => {
                BoolExpr::And(Box::new(a.subst_var(x, by)), Box::new(b.subst_var(x, by)))
            }
            BoolExpr::Or(a, b) => {
                BoolExpr::Or(Box::new(a.subst_var(x, by)), Box::new(b.subst_var(x, by)))
            }
            BoolExpr::Not(b) => BoolExpr::Not(Box::new(b.subst_var(x, by))),
            BoolExpr::Lt(a, b) => BoolExpr::Lt(a.subst_var(x, by), b.subst_var(x, by)),
            BoolExpr::Eq(a, b) => BoolExpr::Eq(a.subst_var(x, by), b.subst_var(x, by)),
        }
    }
}

/// Predicates carving subsets out of index sorts: `e <= e'` and conjunction.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Predicate {
    Leq(ArithExpr, ArithExpr),
    Conj(Box<Predicate>, Box<Predicate>),
}

impl Predicate {
    pub fn dv(&self) -> BTreeSet<String> {
        match self {
            Predicate::Leq(a, b) => {
                let mut s = a.dv();
                s.extend(b.dv());
                s
            }
            Predicate::Conj(a, b) => {
                let mut s = a.dv();
                s.extend(b.dv());
                s
            }
        }
    }

    pub fn subst_var(&self, x: &str, by: &ArithExpr) -> Predicate {
        match self {
            Predicate::Leq(a, b) => Predicate::Leq(a.subst_var(x, by), b.subst_var(x, by)),
            Predicate::Conj(a, b) => Predicate::Conj(
                Box::new(a.subst_var(x, by)),
                Box::new(b.subst_var(x, by)),
            ),
        }
    }

    /// Flatten a conjunction into its `Leq` atoms.
    pub fn atoms(&self) -> Vec<(&ArithExpr, &ArithExpr)> {
        match self {
            Predicate::Leq(a, b) => vec![(a, b)],
            Predicate::Conj(a, b) => {
                let mut v = a.atoms();
                v.extend(b.atoms());
                v
            }
        }
    }
}

/// Index sorts: the naturals, or a predicate-carved subset of a base sort.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum IndexSort {
    Nat,
    Subset {
        var: String,
        base: Box<IndexSort>,
        pred: Predicate,
    },
}

impl IndexSort {
    pub fn subset(var: &str, base: IndexSort, pred: Predicate) -> IndexSort {
        IndexSort::Subset {
            var: var.to_string(),
            base: Box::new(base),
            pred,
        }
    }

    /// Free variables of an index sort.
    pub fn fv(&self) -> BTreeSet<String> {
        match self {
            IndexSort::Nat => BTreeSet::new(),
            IndexSort::Subset { var, base, pred } => {
                let mut s = pred.dv();
                s.extend(base.fv());
                s.remove(var);
                s
            }
        }
    }

    pub fn subst_var(&self, x: &str, by: &ArithExpr) -> IndexSort {
        match self {
            IndexSort::Nat => IndexSort::Nat,
            IndexSort::Subset { var, base, pred } => {
                if var == x {
                    // Bound occurrence shadows.
                    IndexSort::Subset {
                        var: var.clone(),
                        base: Box::new(base.subst_var(x, by)),
                        pred: pred.clone(),
                    }
                } else {
                    IndexSort::Subset {
                        var: var.clone(),
                        base: Box::new(base.subst_var(x, by)),
                        pred: pred.subst_var(x, by),
                    }
                }
            }
        }
    }
}

/// Roles: primitive participants or participants indexed by arithmetic
/// expressions (one or more indices).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Primitive(String),
    Indexed(String, Vec<ArithExpr>),
}

impl Role {
    pub fn prim(name: &str) -> Role {
        Role::Primitive(name.to_string())
    }

    pub fn indexed(name: &str, idx: Vec<ArithExpr>) -> Role {
        Role::Indexed(name.to_string(), idx)
    }

    pub fn base(&self) -> &str {
        match self {
            Role::Primitive(n) | Role::Indexed(n, _) => n,
        }
    }

    pub fn indices(&self) -> &[ArithExpr] {
        match self {
            Role::Primitive(_) => &[],
            Role::Indexed(_, idx) => idx,
        }
    }

    /// Defined variables of a role's indices.
    pub fn dv(&self) -> BTreeSet<String> {
        let mut s = BTreeSet::new();
        for e in self.indices() {
            s.extend(e.dv());
        }
        s
    }

    /// A value role: primitive, or indexed only by constants.
    pub fn is_value_role(&self) -> bool {
        self.indices().iter().all(|e| e.is_const())
    }

    pub fn subst_var(&self, x: &str, by: &ArithExpr) -> Role {
        match self {
            Role::Primitive(_) => self.clone(),
            Role::Indexed(n, idx) => {
                Role::Indexed(n.clone(), idx.iter().map(|e| e.subst_var(x, by)).collect())
            }
        }
    }

    /// Constant-fold indices; `W[2+1]` becomes `W[3]`.
    pub fn fold_consts(&self) -> Role {
        match self {
            Role::Primitive(_) => self.clone(),
            Role::Indexed(n, idx) => {
                Role::Indexed(n.clone(), idx.iter().map(|e| e.fold_consts()).collect())
            }
        }
    }

    /// Structural equality after constant folding.
    pub fn same_ground(&self, other: &Role) -> bool {
        match (self, other) {
            (Role::Primitive(a), Role::Primitive(b)) => a == b,
            (Role::Indexed(a, xs), Role::Indexed(b, ys)) => {
                a == b
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| x.same_linear(y))
            }
            _ => false,
        }
    }
}

/// Message types: primitives, carried global types, index sorts, carried
/// end-point types (delegation), and nominal data labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageType {
    Bool,
    Nat,
    Global(Box<GlobalType>),
    Index(IndexSort),
    Endpoint(Box<EndpointType>),
    Opaque(String),
}

impl MessageType {
    pub fn opaque(name: &str) -> MessageType {
        MessageType::Opaque(name.to_string())
    }
}

/// Sorts carried by interactions: a plain message type, or an index-sort
/// assignment to an interaction variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MessageSort {
    Plain(MessageType),
    IndexBinder(String, IndexSort),
}

impl MessageSort {
    /// Defined variables of a sort: the interaction variable, if any.
    pub fn dv(&self) -> BTreeSet<String> {
        match self {
            MessageSort::Plain(_) => BTreeSet::new(),
            MessageSort::IndexBinder(x, _) => {
                let mut s = BTreeSet::new();
                s.insert(x.clone());
                s
            }
        }
    }
}

/// Message payload expressions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Message {
    Arith(ArithExpr),
    Bool(BoolExpr),
    /// A site name.
    Site(String),
    /// A session channel `a[p]`.
    Chan(String, Role),
    /// An uninterpreted data atom (label payloads like `req`, `fwd`).
    Atom(String),
    /// A variable standing for a received payload.
    Var(String),
}

/// A queued runtime message: sender, receiver, payload, payload type.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueueMessage {
    pub sender: Role,
    pub receiver: Role,
    pub payload: Message,
    pub sort: MessageType,
}

/// Global types: bird's-eye protocol descriptions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GlobalType {
    /// `p -> q1,..,qn : <V> . G`; a single receiver is the common case, a
    /// receiver list is multicast notation produced by the robustness
    /// transformation (and accepted in source).
    Interaction {
        sender: Role,
        receivers: Vec<Role>,
        sort: MessageSort,
        cont: Box<GlobalType>,
    },
    Mu(String, Box<GlobalType>),
    TypeVar(String),
    End,
    Par(Box<GlobalType>, Box<GlobalType>),
    Sum(Box<GlobalType>, Box<GlobalType>),
    Match(BoolExpr, Box<GlobalType>),
    Prod(String, IndexSort, Box<GlobalType>),
    App(Box<GlobalType>, ArithExpr),
}

impl GlobalType {
    pub fn interaction(sender: Role, receivers: Vec<Role>, sort: MessageSort, cont: GlobalType) -> GlobalType {
        GlobalType::Interaction {
            sender,
            receivers,
            sort,
            cont: Box::new(cont),
        }
    }

    /// Participants of a global type; does not descend into carried types.
    pub fn pid(&self) -> BTreeSet<Role> {
        let mut out = BTreeSet::new();
        self.collect_pid(&mut out);
        out
    }

    fn collect_pid(&self, out: &mut BTreeSet<Role>) {
        match self {
            GlobalType::Interaction {
                sender,
                receivers,
                cont,
                ..
            } => {
                out.insert(sender.clone());
                out.extend(receivers.iter().cloned());
                cont.collect_pid(out);
            }
            GlobalType::Mu(_, g) => g.collect_pid(out),
            GlobalType::TypeVar(_) | GlobalType::End => {}
            GlobalType::Par(a, b) | GlobalType::Sum(a, b) => {
                a.collect_pid(out);
                b.collect_pid(out);
            }
            GlobalType::Match(_, g) | GlobalType::Prod(_, _, g) => g.collect_pid(out),
            GlobalType::App(g, _) => g.collect_pid(out),
        }
    }

    /// Free index/interaction/type variables of a global type.
    pub fn fv(&self) -> BTreeSet<String> {
        match self {
            GlobalType::Interaction {
                sender,
                receivers,
                sort,
                cont,
            } => {
                let mut s = sender.dv();
                for r in receivers {
                    s.extend(r.dv());
                }
                let mut inner = cont.fv();
                for bound in sort.dv() {
                    inner.remove(&bound);
                }
                s.extend(inner);
                s
            }
            GlobalType::Mu(x, g) => {
                let mut s = g.fv();
                s.remove(x);
                s
            }
            GlobalType::TypeVar(x) => {
                let mut s = BTreeSet::new();
                s.insert(x.clone());
                s
            }
            GlobalType::End => BTreeSet::new(),
            GlobalType::Par(a, b) | GlobalType::Sum(a, b) => {
                let mut s = a.fv();
                s.extend(b.fv());
                s
            }
            GlobalType::Match(b, g) => {
                let mut s = b.dv();
                s.extend(g.fv());
                s
            }
            GlobalType::Prod(x, i, g) => {
                let mut s = g.fv();
                s.extend(i.fv());
                s.remove(x);
                s
            }
            GlobalType::App(g, e) => {
                let mut s = g.fv();
                s.extend(e.dv());
                s
            }
        }
    }

    /// Substitute an index variable throughout, capture-permitting only at
    /// binders that rebind the same name (which shadow instead).
    pub fn subst_index(&self, x: &str, by: &ArithExpr) -> GlobalType {
        match self {
            GlobalType::Interaction {
                sender,
                receivers,
                sort,
                cont,
            } => {
                let sender = sender.subst_var(x, by);
                let receivers = receivers.iter().map(|r| r.subst_var(x, by)).collect();
                match sort {
                    MessageSort::IndexBinder(v, i) if v == x => GlobalType::Interaction {
                        sender,
                        receivers,
                        sort: MessageSort::IndexBinder(v.clone(), i.subst_var(x, by)),
                        cont: cont.clone(),
                    },
                    _ => GlobalType::Interaction {
                        sender,
                        receivers,
                        sort: subst_sort(sort, x, by),
                        cont: Box::new(cont.subst_index(x, by)),
                    },
                }
            }
            GlobalType::Mu(v, g) => GlobalType::Mu(v.clone(), Box::new(g.subst_index(x, by))),
            GlobalType::TypeVar(_) | GlobalType::End => self.clone(),
            GlobalType::Par(a, b) => GlobalType::Par(
                Box::new(a.subst_index(x, by)),
                Box::new(b.subst_index(x, by)),
            ),
            GlobalType::Sum(a, b) => GlobalType::Sum(
                Box::new(a.subst_index(x, by)),
                Box::new(b.subst_index(x, by)),
            ),
            GlobalType::Match(b, g) => {
                GlobalType::Match(b.subst_var(x, by), Box::new(g.subst_index(x, by)))
            }
            GlobalType::Prod(v, i, g) => {
                if v == x {
                    GlobalType::Prod(v.clone(), i.subst_var(x, by), g.clone())
                } else {
                    GlobalType::Prod(
                        v.clone(),
                        i.subst_var(x, by),
                        Box::new(g.subst_index(x, by)),
                    )
                }
            }
            GlobalType::App(g, e) => {
                GlobalType::App(Box::new(g.subst_index(x, by)), e.subst_var(x, by))
            }
        }
    }

    /// Substitute a type variable by a global type (equi-recursive unfolding).
    pub fn subst_typevar(&self, x: &str, by: &GlobalType) -> GlobalType {
        match self {
            GlobalType::TypeVar(v) if v == x => by.clone(),
            GlobalType::TypeVar(_) | GlobalType::End => self.clone(),
            GlobalType::Interaction {
                sender,
                receivers,
                sort,
                cont,
            } => GlobalType::Interaction {
                sender: sender.clone(),
                receivers: receivers.clone(),
                sort: sort.clone(),
                cont: Box::new(cont.subst_typevar(x, by)),
            },
            GlobalType::Mu(v, g) => {
                if v == x {
                    self.clone()
                } else {
                    GlobalType::Mu(v.clone(), Box::new(g.subst_typevar(x, by)))
                }
            }
            GlobalType::Par(a, b) => GlobalType::Par(
                Box::new(a.subst_typevar(x, by)),
                Box::new(b.subst_typevar(x, by)),
            ),
            GlobalType::Sum(a, b) => GlobalType::Sum(
                Box::new(a.subst_typevar(x, by)),
                Box::new(b.subst_typevar(x, by)),
            ),
            GlobalType::Match(b, g) => {
                GlobalType::Match(b.clone(), Box::new(g.subst_typevar(x, by)))
            }
            GlobalType::Prod(v, i, g) => {
                GlobalType::Prod(v.clone(), i.clone(), Box::new(g.subst_typevar(x, by)))
            }
            GlobalType::App(g, e) => {
                GlobalType::App(Box::new(g.subst_typevar(x, by)), e.clone())
            }
        }
    }

    /// Unfold one level of equi-recursion if this is a mu type.
    pub fn unfold_mu(&self) -> GlobalType {
        match self {
            GlobalType::Mu(x, g) => g.subst_typevar(x, self),
            other => other.clone(),
        }
    }
}

fn subst_sort(sort: &MessageSort, x: &str, by: &ArithExpr) -> MessageSort {
    match sort {
        MessageSort::Plain(t) => MessageSort::Plain(subst_msgtype(t, x, by)),
        MessageSort::IndexBinder(v, i) => MessageSort::IndexBinder(v.clone(), i.subst_var(x, by)),
    }
}

fn subst_msgtype(t: &MessageType, x: &str, by: &ArithExpr) -> MessageType {
    match t {
        MessageType::Bool | MessageType::Nat | MessageType::Opaque(_) => t.clone(),
        MessageType::Global(g) => MessageType::Global(Box::new(g.subst_index(x, by))),
        MessageType::Index(i) => MessageType::Index(i.subst_var(x, by)),
        MessageType::Endpoint(t) => MessageType::Endpoint(Box::new(t.subst_index(x, by))),
    }
}

/// End-point types: per-participant behaviours produced by projection.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EndpointType {
    /// `[p, q1..qn]!<V>.T` — output from p; multiple receivers are the
    /// multicast form produced by projecting transformed branch prefixes.
    Out {
        sender: Role,
        receivers: Vec<Role>,
        sort: MessageSort,
        cont: Box<EndpointType>,
    },
    /// `[p, q]?(V).T` — input at q from p.
    In {
        sender: Role,
        receiver: Role,
        sort: MessageSort,
        cont: Box<EndpointType>,
    },
    Mu(String, Box<EndpointType>),
    TypeVar(String),
    Sum(Box<EndpointType>, Box<EndpointType>),
    Match(BoolExpr, Box<EndpointType>),
    Prod(String, IndexSort, Box<EndpointType>),
    App(Box<EndpointType>, ArithExpr),
    End,
}

impl EndpointType {
    pub fn out(sender: Role, receiver: Role, sort: MessageSort, cont: EndpointType) -> EndpointType {
        EndpointType::Out {
            sender,
            receivers: vec![receiver],
            sort,
            cont: Box::new(cont),
        }
    }

    pub fn input(sender: Role, receiver: Role, sort: MessageSort, cont: EndpointType) -> EndpointType {
        EndpointType::In {
            sender,
            receiver,
            sort,
            cont: Box::new(cont),
        }
    }

    /// Flatten a sum tree into its summands.
    pub fn summands(&self) -> Vec<&EndpointType> {
        match self {
            EndpointType::Sum(a, b) => {
                let mut v = a.summands();
                v.extend(b.summands());
                v
            }
            other => vec![other],
        }
    }

    pub fn sum_of(mut branches: Vec<EndpointType>) -> EndpointType {
        let Some(mut acc) = branches.pop() else {
            return EndpointType::End;
        };
        while let Some(b) = branches.pop() {
            acc = EndpointType::Sum(Box::new(b), Box::new(acc));
        }
        acc
    }

    pub fn subst_index(&self, x: &str, by: &ArithExpr) -> EndpointType {
        match self {
            EndpointType::Out {
                sender,
                receivers,
                sort,
                cont,
            } => {
                let sender = sender.subst_var(x, by);
                let receivers: Vec<Role> = receivers.iter().map(|r| r.subst_var(x, by)).collect();
                match sort {
                    MessageSort::IndexBinder(v, i) if v == x => EndpointType::Out {
                        sender,
                        receivers,
                        sort: MessageSort::IndexBinder(v.clone(), i.subst_var(x, by)),
                        cont: cont.clone(),
                    },
                    _ => EndpointType::Out {
                        sender,
                        receivers,
                        sort: subst_sort(sort, x, by),
                        cont: Box::new(cont.subst_index(x, by)),
                    },
                }
            }
            EndpointType::In {
                sender,
                receiver,
                sort,
                cont,
            } => {
                let sender = sender.subst_var(x, by);
                let receiver = receiver.subst_var(x, by);
                match sort {
                    MessageSort::IndexBinder(v, i) if v == x => EndpointType::In {
                        sender,
                        receiver,
                        sort: MessageSort::IndexBinder(v.clone(), i.subst_var(x, by)),
                        cont: cont.clone(),
                    },
                    _ => EndpointType::In {
                        sender,
                        receiver,
                        sort: subst_sort(sort, x, by),
                        cont: Box::new(cont.subst_index(x, by)),
                    },
                }
            }
            EndpointType::Mu(v, t) => EndpointType::Mu(v.clone(), Box::new(t.subst_index(x, by))),
            EndpointType::TypeVar(_) | EndpointType::End => self.clone(),
            EndpointType::Sum(a, b) => EndpointType::Sum(
                Box::new(a.subst_index(x, by)),
                Box::new(b.subst_index(x, by)),
            ),
            EndpointType::Match(b, t) => {
                EndpointType::Match(b.subst_var(x, by), Box::new(t.subst_index(x, by)))
            }
            EndpointType::Prod(v, i, t) => {
                if v == x {
                    EndpointType::Prod(v.clone(), i.subst_var(x, by), t.clone())
                } else {
                    EndpointType::Prod(
                        v.clone(),
                        i.subst_var(x, by),
                        Box::new(t.subst_index(x, by)),
                    )
                }
            }
            EndpointType::App(t, e) => {
                EndpointType::App(Box::new(t.subst_index(x, by)), e.subst_var(x, by))
            }
        }
    }

    pub fn subst_typevar(&self, x: &str, by: &EndpointType) -> EndpointType {
        match self {
            EndpointType::TypeVar(v) if v == x => by.clone(),
            EndpointType::TypeVar(_) | EndpointType::End => self.clone(),
            EndpointType::Out {
                sender,
                receivers,
                sort,
                cont,
            } => EndpointType::Out {
                sender: sender.clone(),
                receivers: receivers.clone(),
                sort: sort.clone(),
                cont: Box::new(cont.subst_typevar(x, by)),
            },
            EndpointType::In {
                sender,
                receiver,
                sort,
                cont,
            } => EndpointType::In {
                sender: sender.clone(),
                receiver: receiver.clone(),
                sort: sort.clone(),
                cont: Box::new(cont.subst_typevar(x, by)),
            },
            EndpointType::Mu(v, t) => {
                if v == x {
                    self.clone()
                } else {
                    EndpointType::Mu(v.clone(), Box::new(t.subst_typevar(x, by)))
                }
            }
            EndpointType::Sum(a, b) => EndpointType::Sum(
                Box::new(a.subst_typevar(x, by)),
                Box::new(b.subst_typevar(x, by)),
            ),
            EndpointType::Match(b, t) => {
                EndpointType::Match(b.clone(), Box::new(t.subst_typevar(x, by)))
            }
            EndpointType::Prod(v, i, t) => {
                EndpointType::Prod(v.clone(), i.clone(), Box::new(t.subst_typevar(x, by)))
            }
            EndpointType::App(t, e) => EndpointType::App(Box::new(t.subst_typevar(x, by)), e.clone()),
        }
    }

    /// Count mu binders (used to budget unfolding).
    pub fn mu_count(&self) -> usize {
        match self {
            EndpointType::Out { cont, .. } | EndpointType::In { cont, .. } => cont.mu_count(),
            EndpointType::Mu(_, t) => 1 + t.mu_count(),
            EndpointType::TypeVar(_) | EndpointType::End => 0,
            EndpointType::Sum(a, b) => a.mu_count() + b.mu_count(),
            EndpointType::Match(_, t) | EndpointType::Prod(_, _, t) => t.mu_count(),
            EndpointType::App(t, _) => t.mu_count(),
        }
    }
}

/// Label forms that desugar into core syntax.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SugarForm {
    /// `select u[p,q] L . P`  — label selection as a typed output.
    LabelSelect {
        site: String,
        sender: Role,
        receiver: Role,
        label: String,
        body: Box<Process>,
    },
    /// `branch u[p,q] { L1 => P1 | ... }` — label branching as an input sum.
    LabelBranch {
        site: String,
        sender: Role,
        receiver: Role,
        arms: Vec<(String, Process)>,
    },
    /// `if b then P else Q`
    IfThenElse {
        cond: BoolExpr,
        then_branch: Box<Process>,
        else_branch: Box<Process>,
    },
    /// `primrec(i; X; bound; P; Q)` — primitive recursion.
    PrimRec {
        var: String,
        rec_var: String,
        bound: ArithExpr,
        base: Box<Process>,
        step: Box<Process>,
    },
    /// `try { P } catch { H1 | H2 | ... }` with input-prefixed handlers.
    TryCatch {
        body: Box<Process>,
        handlers: Vec<Process>,
    },
    /// `raise u[p,q] F . P` — failure notification as a typed output.
    RaiseFail {
        site: String,
        sender: Role,
        receiver: Role,
        failure: String,
        body: Box<Process>,
    },
    /// Asserted send, abstraction flavour: binds the assertion variable.
    AssertedSendFn {
        var: String,
        sort: IndexSort,
        assertion: BoolExpr,
        send: Box<Process>,
    },
    /// Asserted send, reception flavour: receives the assertion variable.
    AssertedSendRcv {
        site: String,
        sender: Role,
        receiver: Role,
        var: String,
        sort: IndexSort,
        assertion: BoolExpr,
        send: Box<Process>,
    },
    /// `def X(x) = P in Q`
    DefRecursion {
        name: String,
        param: String,
        def_body: Box<Process>,
        scope: Box<Process>,
    },
}

/// Processes of the structured-interaction language.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Process {
    /// `init(u:G, p).P` — join session `u` typed `G` as participant `p`.
    /// `gname` remembers the source-level name of `G` for printing.
    Init {
        site: String,
        gname: Option<String>,
        global: Box<GlobalType>,
        role: Role,
        body: Box<Process>,
    },
    /// `u[p,q]!<m:S>.P`
    Output {
        site: String,
        sender: Role,
        receiver: Role,
        payload: Message,
        sort: MessageType,
        body: Box<Process>,
    },
    /// `u[p,q]?(w:S).P`
    Input {
        site: String,
        sender: Role,
        receiver: Role,
        binder: InputBinder,
        sort: MessageType,
        body: Box<Process>,
    },
    Rec(String, Box<Process>),
    ProcVar(String),
    Inact,
    Par(Box<Process>, Box<Process>),
    Sum(Box<Process>, Box<Process>),
    Match(BoolExpr, Box<Process>),
    /// `fn x:I => P`
    Abs(String, IndexSort, Box<Process>),
    /// `P @ e`
    App(Box<Process>, ArithExpr),
    /// Runtime-only restriction `(new a:G)P`.
    New {
        site: String,
        gname: Option<String>,
        global: Box<GlobalType>,
        body: Box<Process>,
    },
    /// Runtime-only message queue `a:[...]`.
    Queue(String, Vec<QueueMessage>),
    /// Unexpanded surface sugar; eliminated by desugaring.
    Sugar(Box<SugarForm>),
}

/// What an input prefix binds: a plain variable or a session channel
/// (delegation reception).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum InputBinder {
    Var(String),
    Chan(String, Role),
}

impl Process {
    pub fn par(a: Process, b: Process) -> Process {
        Process::Par(Box::new(a), Box::new(b))
    }

    pub fn sum(a: Process, b: Process) -> Process {
        Process::Sum(Box::new(a), Box::new(b))
    }

    /// Flatten a parallel composition into components.
    pub fn components(&self) -> Vec<&Process> {
        match self {
            Process::Par(a, b) => {
                let mut v = a.components();
                v.extend(b.components());
                v
            }
            other => vec![other],
        }
    }

    /// Flatten a sum into summands.
    pub fn summands(&self) -> Vec<&Process> {
        match self {
            Process::Sum(a, b) => {
                let mut v = a.summands();
                v.extend(b.summands());
                v
            }
            other => vec![other],
        }
    }

    /// Whether any runtime-only form (queue or restriction) occurs.
    pub fn has_runtime_forms(&self) -> bool {
        match self {
            Process::New { .. } | Process::Queue(..) => true,
            Process::Init { body, .. } => body.has_runtime_forms(),
            Process::Output { body, .. } | Process::Input { body, .. } => body.has_runtime_forms(),
            Process::Rec(_, p) | Process::Match(_, p) | Process::Abs(_, _, p) => {
                p.has_runtime_forms()
            }
            Process::App(p, _) => p.has_runtime_forms(),
            Process::Par(a, b) | Process::Sum(a, b) => {
                a.has_runtime_forms() || b.has_runtime_forms()
            }
            Process::ProcVar(_) | Process::Inact => false,
            Process::Sugar(_) => false,
        }
    }

    pub fn has_sugar(&self) -> bool {
        match self {
            Process::Sugar(_) => true,
            Process::Init { body, .. }
            | Process::Output { body, .. }
            | Process::Input { body, .. } => body.has_sugar(),
            Process::Rec(_, p) | Process::Match(_, p) | Process::Abs(_, _, p) => p.has_sugar(),
            Process::App(p, _) => p.has_sugar(),
            Process::New { body, .. } => body.has_sugar(),
            Process::Par(a, b) | Process::Sum(a, b) => a.has_sugar() || b.has_sugar(),
            Process::ProcVar(_) | Process::Inact | Process::Queue(..) => false,
        }
    }
}

/// Free names of a process, clause by clause. Message occurrences contribute
/// through `dn`; queue contents contribute the names defined by their
/// payloads. (The site of a queue itself is deliberately not included here —
/// scope mobility inside the interpreter uses a corrected helper.)
pub fn free_names(p: &Process) -> BTreeSet<String> {
    match p {
        Process::Init { site, body, .. } => {
            let mut s = free_names(body);
            s.insert(site.clone());
            s
        }
        Process::Output {
            site,
            payload,
            body,
            ..
        } => {
            let mut s = free_names(body);
            s.extend(dn_message(payload));
            s.insert(site.clone());
            s
        }
        Process::Input {
            site, binder, body, ..
        } => {
            let mut s = free_names(body);
            if let InputBinder::Chan(b, _) = binder {
                s.remove(b);
            }
            s.insert(site.clone());
            s
        }
        Process::Rec(_, p) => free_names(p),
        Process::ProcVar(_) | Process::Inact => BTreeSet::new(),
        Process::Par(a, b) | Process::Sum(a, b) => {
            let mut s = free_names(a);
            s.extend(free_names(b));
            s
        }
        Process::Match(_, p) | Process::Abs(_, _, p) => free_names(p),
        Process::App(p, _) => free_names(p),
        Process::New { site, body, .. } => {
            let mut s = free_names(body);
            s.remove(site);
            s
        }
        Process::Queue(_, msgs) => {
            let mut s = BTreeSet::new();
            for m in msgs {
                s.extend(dn_message(&m.payload));
            }
            s
        }
        Process::Sugar(_) => BTreeSet::new(),
    }
}

/// Site names used anywhere in a process, including queue subjects. This is
/// the scoping-safe companion to `free_names` used for scope mobility.
pub fn sites_used(p: &Process) -> BTreeSet<String> {
    let mut s = free_names(p);
    collect_queue_sites(p, &mut s);
    s
}

fn collect_queue_sites(p: &Process, out: &mut BTreeSet<String>) {
    match p {
        Process::Queue(a, _) => {
            out.insert(a.clone());
        }
        Process::Init { body, .. }
        | Process::Output { body, .. }
        | Process::Input { body, .. } => collect_queue_sites(body, out),
        Process::Rec(_, q) | Process::Match(_, q) | Process::Abs(_, _, q) => {
            collect_queue_sites(q, out)
        }
        Process::App(q, _) => collect_queue_sites(q, out),
        Process::New { site, body, .. } => {
            let mut inner = BTreeSet::new();
            collect_queue_sites(body, &mut inner);
            inner.remove(site);
            out.extend(inner);
        }
        Process::Par(a, b) | Process::Sum(a, b) => {
            collect_queue_sites(a, out);
            collect_queue_sites(b, out);
        }
        _ => {}
    }
}

fn dn_message(m: &Message) -> BTreeSet<String> {
    let mut s = BTreeSet::new();
    match m {
        Message::Site(a) | Message::Chan(a, _) => {
            s.insert(a.clone());
        }
        _ => {}
    }
    s
}

/// Fresh-name supply threaded through alpha-renaming operations.
#[derive(Debug, Default, Clone)]
pub struct NameGen {
    counter: u64,
}

impl NameGen {
    pub fn new() -> NameGen {
        NameGen { counter: 0 }
    }

    pub fn fresh(&mut self, base: &str) -> String {
        self.counter += 1;
        format!("{}_{}", base, self.counter)
    }
}

/// Simplify the rewrite `pattern := replacement` down to `x := e` by the
/// inversion rules for sums with constant parts and shared scalar
/// coefficients; None if no variable can be isolated.
fn solve_for_var(pattern: &ArithExpr, replacement: &ArithExpr) -> Option<(String, ArithExpr)> {
    match pattern {
        ArithExpr::Var(x) => Some((x.clone(), replacement.clone())),
        ArithExpr::Add(a, b) => {
            // e + e' := e''  =>  e := e'' - e'   when dv(e') is empty
            if b.dv().is_empty() {
                solve_for_var(a, &ArithExpr::sub(replacement.clone(), (**b).clone()))
            } else if a.dv().is_empty() {
                solve_for_var(b, &ArithExpr::sub(replacement.clone(), (**a).clone()))
            } else {
                None
            }
        }
        ArithExpr::ScalarMul(c, e) => {
            // c*e := c*e''  =>  e := e''  (cancel the shared coefficient)
            match replacement {
                ArithExpr::ScalarMul(c2, e2) if c == c2 => solve_for_var(e, e2),
                _ => None,
            }
        }
        ArithExpr::Const(_) => None,
    }
}

/// Substitution on arithmetic expressions, `e{replacement/pattern}`: when the
/// pattern shares a variable with `e`, rewrite `pattern := replacement` to an
/// isolated `x := e'''` and substitute; otherwise leave `e` unchanged.
pub fn subst_arith(e: &ArithExpr, replacement: &ArithExpr, pattern: &ArithExpr) -> ArithExpr {
    let shared: Vec<_> = e.dv().intersection(&pattern.dv()).cloned().collect();
    if shared.is_empty() {
        return e.clone();
    }
    match solve_for_var(pattern, replacement) {
        Some((x, by)) => e.subst_var(&x, &by).fold_consts(),
        None => e.clone(),
    }
}

/// Errors from role substitution.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoleSubstError {
    #[error("role structure mismatch: {0} vs {1} (different base or arity)")]
    StructureMismatch(String, String),
}

/// Substitution on roles, `p{q/p'}`: p, p' and q must share base name and
/// arity; each index of p is rewritten through `subst_arith` with the
/// corresponding indices of the pattern and replacement.
pub fn subst_role(p: &Role, replacement: &Role, pattern: &Role) -> Result<Role, RoleSubstError> {
    if pattern.base() != replacement.base()
        || pattern.indices().len() != replacement.indices().len()
    {
        return Err(RoleSubstError::StructureMismatch(
            format!("{:?}", pattern),
            format!("{:?}", replacement),
        ));
    }
    match p {
        Role::Primitive(_) => Ok(p.clone()),
        Role::Indexed(n, idx) => {
            if n != pattern.base() || idx.len() != pattern.indices().len() {
                // Different participant family; substitution does not touch it.
                return Ok(p.clone());
            }
            let mut out = Vec::with_capacity(idx.len());
            for (k, e) in idx.iter().enumerate() {
                out.push(
                    subst_arith(e, &replacement.indices()[k], &pattern.indices()[k]).fold_consts(),
                );
            }
            Ok(Role::Indexed(n.clone(), out))
        }
    }
}

/// What a process-level substitution replaces.
#[derive(Debug, Clone)]
pub enum SubstKind<'a> {
    /// Replace a value variable with a message value.
    Value(&'a str, &'a Message),
    /// Replace an index variable with an arithmetic expression.
    Index(&'a str, &'a ArithExpr),
    /// Replace a process variable with a process.
    ProcVar(&'a str, &'a Process),
}

/// Capture-avoiding substitution on processes.
pub fn subst_process(p: &Process, kind: &SubstKind, gen: &mut NameGen) -> Process {
    match kind {
        SubstKind::Value(x, m) => subst_value(p, x, m, gen),
        SubstKind::Index(x, e) => subst_index_proc(p, x, e, gen),
        SubstKind::ProcVar(x, q) => subst_procvar(p, x, q, gen),
    }
}

fn message_as_arith(m: &Message) -> Option<ArithExpr> {
    match m {
        Message::Arith(e) => Some(e.clone()),
        Message::Var(x) => Some(ArithExpr::var(x)),
        _ => None,
    }
}

/// Substitute a received value for an input-bound variable. Values that are
/// arithmetic also substitute into index positions (roles, guards, arguments).
pub fn subst_value(p: &Process, x: &str, m: &Message, gen: &mut NameGen) -> Process {
    let arith = message_as_arith(m);
    let subst_msg = |payload: &Message| -> Message {
        match payload {
            Message::Var(v) if v == x => m.clone(),
            Message::Arith(e) => match &arith {
                Some(a) => Message::Arith(e.subst_var(x, a)),
                None => payload.clone(),
            },
            other => other.clone(),
        }
    };
    match p {
        Process::Init {
            site,
            gname,
            global,
            role,
            body,
        } => {
            let (global, role) = match &arith {
                Some(a) => (global.subst_index(x, a), role.subst_var(x, a)),
                None => ((**global).clone(), role.clone()),
            };
            Process::Init {
                site: site.clone(),
                gname: gname.clone(),
                global: Box::new(global),
                role,
                body: Box::new(subst_value(body, x, m, gen)),
            }
        }
        Process::Output {
            site,
            sender,
            receiver,
            payload,
            sort,
            body,
        } => {
            let (sender, receiver) = match &arith {
                Some(a) => (sender.subst_var(x, a), receiver.subst_var(x, a)),
                None => (sender.clone(), receiver.clone()),
            };
            Process::Output {
                site: site.clone(),
                sender,
                receiver,
                payload: subst_msg(payload),
                sort: sort.clone(),
                body: Box::new(subst_value(body, x, m, gen)),
            }
        }
        Process::Input {
            site,
            sender,
            receiver,
            binder,
            sort,
            body,
        } => {
            let (sender_s, receiver_s) = match &arith {
                Some(a) => (sender.subst_var(x, a), receiver.subst_var(x, a)),
                None => (sender.clone(), receiver.clone()),
            };
            let shadows = matches!(binder, InputBinder::Var(v) if v == x);
            let body = if shadows {
                (**body).clone()
            } else {
                subst_value(body, x, m, gen)
            };
            Process::Input {
                site: site.clone(),
                sender: sender_s,
                receiver: receiver_s,
                binder: binder.clone(),
                sort: sort.clone(),
                body: Box::new(body),
            }
        }
        Process::Rec(v, q) => Process::Rec(v.clone(), Box::new(subst_value(q, x, m, gen))),
        Process::ProcVar(_) | Process::Inact => p.clone(),
        Process::Par(a, b) => Process::par(subst_value(a, x, m, gen), subst_value(b, x, m, gen)),
        Process::Sum(a, b) => Process::sum(subst_value(a, x, m, gen), subst_value(b, x, m, gen)),
        Process::Match(b, q) => {
            let b = match &arith {
                Some(a) => b.subst_var(x, a),
                None => b.clone(),
            };
            Process::Match(b, Box::new(subst_value(q, x, m, gen)))
        }
        Process::Abs(v, i, q) => {
            let i = match &arith {
                Some(a) => i.subst_var(x, a),
                None => i.clone(),
            };
            if v == x {
                Process::Abs(v.clone(), i, q.clone())
            } else {
                Process::Abs(v.clone(), i, Box::new(subst_value(q, x, m, gen)))
            }
        }
        Process::App(q, e) => {
            let e = match &arith {
                Some(a) => e.subst_var(x, a),
                None => e.clone(),
            };
            Process::App(Box::new(subst_value(q, x, m, gen)), e)
        }
        Process::New {
            site,
            gname,
            global,
            body,
        } => {
            let global = match &arith {
                Some(a) => global.subst_index(x, a),
                None => (**global).clone(),
            };
            Process::New {
                site: site.clone(),
                gname: gname.clone(),
                global: Box::new(global),
                body: Box::new(subst_value(body, x, m, gen)),
            }
        }
        Process::Queue(a, msgs) => Process::Queue(
            a.clone(),
            msgs.iter()
                .map(|q| {
                    let (sender, receiver) = match &arith {
                        Some(ar) => (q.sender.subst_var(x, ar), q.receiver.subst_var(x, ar)),
                        None => (q.sender.clone(), q.receiver.clone()),
                    };
                    QueueMessage {
                        sender,
                        receiver,
                        payload: subst_msg(&q.payload),
                        sort: q.sort.clone(),
                    }
                })
                .collect(),
        ),
        Process::Sugar(_) => p.clone(),
    }
}

/// Substitute an index variable; same traversal as value substitution.
pub fn subst_index_proc(p: &Process, x: &str, e: &ArithExpr, gen: &mut NameGen) -> Process {
    subst_value(p, x, &Message::Arith(e.clone()), gen)
}

/// Substitute a process variable (equi-recursive unfolding). Bound process
/// variables shadow; input binders that would capture free value variables of
/// the replacement are alpha-renamed.
pub fn subst_procvar(p: &Process, x: &str, by: &Process, gen: &mut NameGen) -> Process {
    match p {
        Process::ProcVar(v) if v == x => by.clone(),
        Process::ProcVar(_) | Process::Inact => p.clone(),
        Process::Init {
            site,
            gname,
            global,
            role,
            body,
        } => Process::Init {
            site: site.clone(),
            gname: gname.clone(),
            global: global.clone(),
            role: role.clone(),
            body: Box::new(subst_procvar(body, x, by, gen)),
        },
        Process::Output {
            site,
            sender,
            receiver,
            payload,
            sort,
            body,
        } => Process::Output {
            site: site.clone(),
            sender: sender.clone(),
            receiver: receiver.clone(),
            payload: payload.clone(),
            sort: sort.clone(),
            body: Box::new(subst_procvar(body, x, by, gen)),
        },
        Process::Input {
            site,
            sender,
            receiver,
            binder,
            sort,
            body,
        } => {
            let mut binder = binder.clone();
            let mut body2 = (**body).clone();
            if let InputBinder::Var(v) = &binder {
                if free_value_vars(by).contains(v) {
                    let fresh = gen.fresh(v);
                    body2 = subst_value(&body2, v, &Message::Var(fresh.clone()), gen);
                    binder = InputBinder::Var(fresh);
                }
            }
            Process::Input {
                site: site.clone(),
                sender: sender.clone(),
                receiver: receiver.clone(),
                binder,
                sort: sort.clone(),
                body: Box::new(subst_procvar(&body2, x, by, gen)),
            }
        }
        Process::Rec(v, q) => {
            if v == x {
                p.clone()
            } else {
                Process::Rec(v.clone(), Box::new(subst_procvar(q, x, by, gen)))
            }
        }
        Process::Par(a, b) => {
            Process::par(subst_procvar(a, x, by, gen), subst_procvar(b, x, by, gen))
        }
        Process::Sum(a, b) => {
            Process::sum(subst_procvar(a, x, by, gen), subst_procvar(b, x, by, gen))
        }
        Process::Match(b, q) => Process::Match(b.clone(), Box::new(subst_procvar(q, x, by, gen))),
        Process::Abs(v, i, q) => {
            if free_value_vars(by).contains(v) {
                let fresh = gen.fresh(v);
                let q2 = subst_index_proc(q, v, &ArithExpr::var(&fresh), gen);
                Process::Abs(fresh, i.clone(), Box::new(subst_procvar(&q2, x, by, gen)))
            } else {
                Process::Abs(v.clone(), i.clone(), Box::new(subst_procvar(q, x, by, gen)))
            }
        }
        Process::App(q, e) => Process::App(Box::new(subst_procvar(q, x, by, gen)), e.clone()),
        Process::New {
            site,
            gname,
            global,
            body,
        } => Process::New {
            site: site.clone(),
            gname: gname.clone(),
            global: global.clone(),
            body: Box::new(subst_procvar(body, x, by, gen)),
        },
        Process::Queue(..) => p.clone(),
        Process::Sugar(_) => p.clone(),
    }
}

/// Free value/index variables of a process (variables that an enclosing
/// binder could capture).
pub fn free_value_vars(p: &Process) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_free_vars(p, &mut Vec::new(), &mut out);
    out
}

fn collect_free_vars(p: &Process, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
    let note = |vars: BTreeSet<String>, bound: &Vec<String>, out: &mut BTreeSet<String>| {
        for v in vars {
            if !bound.contains(&v) {
                out.insert(v);
            }
        }
    };
    match p {
        Process::Init { global, role, body, .. } => {
            note(global.fv(), bound, out);
            note(role.dv(), bound, out);
            collect_free_vars(body, bound, out);
        }
        Process::Output {
            sender,
            receiver,
            payload,
            body,
            ..
        } => {
            note(sender.dv(), bound, out);
            note(receiver.dv(), bound, out);
            match payload {
                Message::Arith(e) => note(e.dv(), bound, out),
                Message::Bool(b) => note(b.dv(), bound, out),
                Message::Var(v) => note(BTreeSet::from([v.clone()]), bound, out),
                _ => {}
            }
            collect_free_vars(body, bound, out);
        }
        Process::Input {
            sender,
            receiver,
            binder,
            body,
            ..
        } => {
            note(sender.dv(), bound, out);
            note(receiver.dv(), bound, out);
            match binder {
                InputBinder::Var(v) => {
                    bound.push(v.clone());
                    collect_free_vars(body, bound, out);
                    bound.pop();
                }
                InputBinder::Chan(..) => collect_free_vars(body, bound, out),
            }
        }
        Process::Rec(_, q) => collect_free_vars(q, bound, out),
        Process::ProcVar(_) | Process::Inact => {}
        Process::Par(a, b) | Process::Sum(a, b) => {
            collect_free_vars(a, bound, out);
            collect_free_vars(b, bound, out);
        }
        Process::Match(b, q) => {
            note(b.dv(), bound, out);
            collect_free_vars(q, bound, out);
        }
        Process::Abs(v, i, q) => {
            note(i.fv(), bound, out);
            bound.push(v.clone());
            collect_free_vars(q, bound, out);
            bound.pop();
        }
        Process::App(q, e) => {
            note(e.dv(), bound, out);
            collect_free_vars(q, bound, out);
        }
        Process::New { body, .. } => collect_free_vars(body, bound, out),
        Process::Queue(_, msgs) => {
            for m in msgs {
                note(m.sender.dv(), bound, out);
                note(m.receiver.dv(), bound, out);
            }
        }
        Process::Sugar(_) => {}
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Primitive(n) => write!(f, "{}", n),
            Role::Indexed(n, idx) => {
                write!(f, "{}", n)?;
                for e in idx {
                    write!(f, "[{}]", crate::syntax::print_arith(e))?;
                }
                Ok(())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn n(x: i64) -> ArithExpr {
        ArithExpr::Const(x)
    }

    fn v(x: &str) -> ArithExpr {
        ArithExpr::var(x)
    }

    #[test]
    fn free_names_inact_is_empty() {
        assert!(free_names(&Process::Inact).is_empty());
    }

    #[test]
    fn free_names_init_includes_site() {
        let p = Process::Init {
            site: "a".into(),
            gname: None,
            global: Box::new(GlobalType::End),
            role: Role::prim("p"),
            body: Box::new(Process::Inact),
        };
        assert_eq!(free_names(&p), BTreeSet::from(["a".to_string()]));
    }

    #[test]
    fn free_names_restriction_removes_bound_site() {
        // new(a:G)(a[p,q]!<b:G'>.0) has free names {b}: the output contributes
        // a (site) and b (payload site), and the restriction removes a.
        let p = Process::New {
            site: "a".into(),
            gname: None,
            global: Box::new(GlobalType::End),
            body: Box::new(Process::Output {
                site: "a".into(),
                sender: Role::prim("p"),
                receiver: Role::prim("q"),
                payload: Message::Site("b".into()),
                sort: MessageType::Global(Box::new(GlobalType::End)),
                body: Box::new(Process::Inact),
            }),
        };
        assert_eq!(free_names(&p), BTreeSet::from(["b".to_string()]));
    }

    #[test]
    fn pid_of_end_is_empty() {
        assert!(GlobalType::End.pid().is_empty());
    }

    #[test]
    fn pid_collects_interaction_endpoints() {
        // C -> P, then branch endpoints P, W: participants {C, P, W}.
        let g = GlobalType::interaction(
            Role::prim("C"),
            vec![Role::prim("P")],
            MessageSort::Plain(MessageType::opaque("Req")),
            GlobalType::interaction(
                Role::prim("P"),
                vec![Role::prim("W")],
                MessageSort::Plain(MessageType::opaque("Fwd")),
                GlobalType::End,
            ),
        );
        let pid = g.pid();
        assert_eq!(
            pid,
            BTreeSet::from([Role::prim("C"), Role::prim("P"), Role::prim("W")])
        );
    }

    #[test]
    fn pid_skips_match_guard() {
        let g = GlobalType::Match(BoolExpr::True, Box::new(GlobalType::End));
        assert!(g.pid().is_empty());
    }

    #[test]
    fn fv_global_end_empty() {
        assert!(GlobalType::End.fv().is_empty());
    }

    #[test]
    fn fv_global_ring_is_n() {
        // Pi i:{i':nat | i'<n and i'>=1} . W[i] -> W[i+1]:<U> . W[n] -> W[1]:<U> . end
        let j = IndexSort::subset(
            "i'",
            IndexSort::Nat,
            Predicate::Conj(
                Box::new(Predicate::Leq(ArithExpr::add(v("i'"), n(1)), v("n"))),
                Box::new(Predicate::Leq(n(1), v("i'"))),
            ),
        );
        let g = GlobalType::Prod(
            "i".into(),
            j,
            Box::new(GlobalType::interaction(
                Role::indexed("W", vec![v("i")]),
                vec![Role::indexed("W", vec![ArithExpr::add(v("i"), n(1))])],
                MessageSort::Plain(MessageType::opaque("U")),
                GlobalType::interaction(
                    Role::indexed("W", vec![v("n")]),
                    vec![Role::indexed("W", vec![n(1)])],
                    MessageSort::Plain(MessageType::opaque("U")),
                    GlobalType::End,
                ),
            )),
        );
        assert_eq!(g.fv(), BTreeSet::from(["n".to_string()]));
    }

    #[test]
    fn fv_global_prod_keeps_sort_vars() {
        // Pi i : {i':nat | i'<n} . end  has free variable n via the sort.
        let i = IndexSort::subset(
            "i'",
            IndexSort::Nat,
            Predicate::Leq(ArithExpr::add(v("i'"), n(1)), v("n")),
        );
        let g = GlobalType::Prod("i".into(), i, Box::new(GlobalType::End));
        assert_eq!(g.fv(), BTreeSet::from(["n".to_string()]));
    }

    #[test]
    fn subst_arith_ring_walkthrough() {
        // (j+1){i/j} = i+1
        let e = ArithExpr::add(v("j"), n(1));
        let got = subst_arith(&e, &v("i"), &v("j"));
        assert_eq!(got, ArithExpr::add(v("i"), n(1)));
    }

    #[test]
    fn subst_arith_direct_var() {
        // x{c/x} = c
        assert_eq!(subst_arith(&v("x"), &n(7), &v("x")), n(7));
    }

    #[test]
    fn subst_arith_no_shared_var_is_identity() {
        // 5{i/j} = 5
        assert_eq!(subst_arith(&n(5), &v("i"), &v("j")), n(5));
    }

    #[test]
    fn subst_arith_inverts_offset() {
        // j{i/j+1} = i-1  (solve j+1 := i  =>  j := i-1)
        let got = subst_arith(&v("j"), &v("i"), &ArithExpr::add(v("j"), n(1)));
        assert_eq!(got, ArithExpr::add(v("i"), n(-1)));
    }

    #[test]
    fn subst_role_identity_on_primitive() {
        let w = Role::prim("Alice");
        assert_eq!(subst_role(&w, &w, &w).unwrap(), w);
    }

    #[test]
    fn subst_role_ring_shift() {
        // W[j+1]{W[i]/W[j]} = W[i+1]
        let p = Role::indexed("W", vec![ArithExpr::add(v("j"), n(1))]);
        let repl = Role::indexed("W", vec![v("i")]);
        let pat = Role::indexed("W", vec![v("j")]);
        assert_eq!(
            subst_role(&p, &repl, &pat).unwrap(),
            Role::indexed("W", vec![ArithExpr::add(v("i"), n(1))])
        );
    }

    #[test]
    fn subst_role_arity_mismatch_errors() {
        let p = Role::indexed("W", vec![v("i")]);
        let repl = Role::indexed("W", vec![v("i"), v("j")]);
        let pat = Role::indexed("W", vec![v("j")]);
        assert!(subst_role(&p, &repl, &pat).is_err());
    }

    #[test]
    fn subst_process_procvar_unfold() {
        let mut gen = NameGen::new();
        let rec = Process::Rec("X".into(), Box::new(Process::ProcVar("X".into())));
        let got = subst_procvar(&Process::ProcVar("X".into()), "X", &rec, &mut gen);
        assert_eq!(got, rec);
    }

    #[test]
    fn subst_process_match_guard() {
        let mut gen = NameGen::new();
        let p = Process::Match(
            BoolExpr::Lt(v("x"), n(120)),
            Box::new(Process::Inact),
        );
        let got = subst_index_proc(&p, "x", &n(100), &mut gen);
        assert_eq!(
            got,
            Process::Match(BoolExpr::Lt(n(100), n(120)), Box::new(Process::Inact))
        );
    }

    #[test]
    fn subst_process_idempotent_when_var_absent() {
        let mut gen = NameGen::new();
        let p = Process::Inact;
        assert_eq!(subst_index_proc(&p, "x", &n(3), &mut gen), p);
    }

    #[test]
    fn subst_value_respects_input_shadowing() {
        let mut gen = NameGen::new();
        // a[p,q]?(x:nat).[x<5]0 — substituting x leaves the body alone.
        let p = Process::Input {
            site: "a".into(),
            sender: Role::prim("p"),
            receiver: Role::prim("q"),
            binder: InputBinder::Var("x".into()),
            sort: MessageType::Nat,
            body: Box::new(Process::Match(
                BoolExpr::Lt(v("x"), n(5)),
                Box::new(Process::Inact),
            )),
        };
        let got = subst_value(&p, "x", &Message::Arith(n(9)), &mut gen);
        assert_eq!(got, p);
    }

    #[test]
    fn free_names_of_substituted_subsets() {
        let mut gen = NameGen::new();
        let p = Process::Output {
            site: "a".into(),
            sender: Role::prim("p"),
            receiver: Role::prim("q"),
            payload: Message::Var("x".into()),
            sort: MessageType::opaque("D"),
            body: Box::new(Process::Inact),
        };
        let q = subst_value(&p, "x", &Message::Site("b".into()), &mut gen);
        let mut allowed = free_names(&p);
        allowed.insert("b".into());
        assert!(free_names(&q).is_subset(&allowed));
    }
}
