//! Endpoint projection of global types onto roles, branch compatibility,
//! prefix sorting, and coherence.

use crate::analysis::{matching_coherent, resolve_product};
use crate::ast::*;
use crate::constraints::{
    bool_distinct, member, nonempty, rel_prefix, role_equal, ConstraintContext, Ordering,
};
use std::collections::{BTreeMap, BTreeSet};

/// Why a projection is undefined: the failing clause, the subterm path, and
/// the violated side condition.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("projection undefined at {}: {kind} ({detail})", path.join("/"))]
pub struct ProjectionFailure {
    pub kind: FailureKind,
    pub path: Vec<String>,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// An interaction or product sort denotes the empty set.
    EmptySort,
    /// Application of a global type that is not a product.
    AppNotProduct,
    /// Application argument outside the product sort.
    AppMemberFail,
    /// The branches of a summation expose different first-prefix participants.
    SumPidMismatch,
    /// No compatibility mode covers the projected branches.
    IncompatibleBranches,
    /// A guard mentions variables bound nowhere in the protocol.
    GuardUnscoped,
    /// The target role occurs in both components of a parallel composition.
    ParallelOverlap,
    /// Parameterised multicast with the target on both sides.
    MulticastSelf,
}

impl std::fmt::Display for FailureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FailureKind::EmptySort => "empty index sort",
            FailureKind::AppNotProduct => "application of a non-product",
            FailureKind::AppMemberFail => "application argument outside the product sort",
            FailureKind::SumPidMismatch => "branch first-prefix participants differ",
            FailureKind::IncompatibleBranches => "incompatible branches",
            FailureKind::GuardUnscoped => "guard variables invisible",
            FailureKind::ParallelOverlap => "role present in both parallel components",
            FailureKind::MulticastSelf => "multicast interaction with the role on both sides",
        };
        write!(f, "{}", s)
    }
}

/// Compatibility modes for projected branches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompatMode {
    /// Same-direction, same-endpoint prefixes with pairwise distinct sorts.
    Prefix,
    /// All branches identical (non-participant view).
    NonParticipant,
    /// Guard-headed branches with pairwise disjoint guards.
    Boolean,
}

struct Projector<'c> {
    target: Role,
    gen: NameGen,
    mu_env: BTreeMap<String, GlobalType>,
    /// interaction variables bound along the path but invisible to the target
    hidden: BTreeSet<String>,
    path: Vec<String>,
    base_ctx: &'c ConstraintContext,
}

type PResult = Result<EndpointType, ProjectionFailure>;

impl<'c> Projector<'c> {
    fn fail(&self, kind: FailureKind, detail: impl Into<String>) -> ProjectionFailure {
        ProjectionFailure {
            kind,
            path: self.path.clone(),
            detail: detail.into(),
        }
    }

    fn proj(&mut self, g: &GlobalType, ctx: &ConstraintContext) -> PResult {
        match g {
            GlobalType::Interaction {
                sender,
                receivers,
                sort,
                cont,
            } => self.proj_interaction(sender, receivers, sort, cont, ctx),
            GlobalType::Mu(x, body) => {
                self.mu_env.insert(x.clone(), g.clone());
                let t = self.proj(body, ctx)?;
                Ok(EndpointType::Mu(x.clone(), Box::new(t)))
            }
            GlobalType::TypeVar(x) => Ok(EndpointType::TypeVar(x.clone())),
            GlobalType::End => Ok(EndpointType::End),
            GlobalType::Match(b, body) => {
                self.path.push("match".into());
                let fvs = b.dv();
                let visible = fvs.iter().all(|x| ctx.contains(x));
                let scoped = fvs
                    .iter()
                    .all(|x| ctx.contains(x) || self.hidden.contains(x));
                let r = if visible {
                    let t = self.proj(body, ctx)?;
                    Ok(EndpointType::Match(b.clone(), Box::new(t)))
                } else if scoped {
                    // Guard belongs to other participants; drop it here.
                    self.proj(body, ctx)
                } else {
                    Err(self.fail(
                        FailureKind::GuardUnscoped,
                        format!(
                            "guard `{}` mentions unbound variables",
                            crate::syntax::print_bool(b)
                        ),
                    ))
                };
                self.path.pop();
                r
            }
            GlobalType::Par(a, b) => {
                let in_a = self.occurs(a, ctx);
                let in_b = self.occurs(b, ctx);
                match (in_a, in_b) {
                    (true, true) => Err(self.fail(
                        FailureKind::ParallelOverlap,
                        format!("{} threads both components", self.target),
                    )),
                    (true, false) => self.proj(a, ctx),
                    (false, true) => self.proj(b, ctx),
                    (false, false) => Ok(EndpointType::End),
                }
            }
            GlobalType::Sum(_, _) => self.proj_sum(g, ctx),
            GlobalType::Prod(x, i, body) => {
                self.path.push(format!("Pi {}", x));
                if !nonempty(ctx, i).unwrap_or(false) {
                    let e = self.fail(FailureKind::EmptySort, format!("sort of `{}`", x));
                    self.path.pop();
                    return Err(e);
                }
                let inner_ctx = ctx.extended(x, i.clone());
                let param_of_roles = body
                    .pid()
                    .iter()
                    .any(|r| r.dv().contains(x));
                let t = self.proj(body, &inner_ctx)?;
                self.path.pop();
                if param_of_roles {
                    Ok(t)
                } else {
                    Ok(EndpointType::Prod(x.clone(), i.clone(), Box::new(t)))
                }
            }
            GlobalType::App(body, e) => {
                self.path.push("app".into());
                let produ = resolve_product(body, &self.mu_env, 8);
                let r = match produ {
                    Some((x, i, _)) => {
                        let inner = ctx.extended(&x, i.clone());
                        match member(&inner, e, &i) {
                            Ok(true) => {
                                let t = self.proj(body, ctx)?;
                                Ok(EndpointType::App(Box::new(t), e.clone()))
                            }
                            Ok(false) => Err(self.fail(
                                FailureKind::AppMemberFail,
                                format!(
                                    "argument {} outside sort {}",
                                    crate::syntax::print_arith(e),
                                    crate::syntax::print_sort(&i)
                                ),
                            )),
                            Err(err) => {
                                Err(self.fail(FailureKind::AppMemberFail, err.to_string()))
                            }
                        }
                    }
                    None => Err(self.fail(
                        FailureKind::AppNotProduct,
                        "applied global type is not a product".to_string(),
                    )),
                };
                self.path.pop();
                r
            }
        }
    }

    fn occurs(&self, g: &GlobalType, ctx: &ConstraintContext) -> bool {
        g.pid().iter().any(|r| role_equal(ctx, r, &self.target))
    }

    fn proj_interaction(
        &mut self,
        sender: &Role,
        receivers: &[Role],
        sort: &MessageSort,
        cont: &GlobalType,
        ctx: &ConstraintContext,
    ) -> PResult {
        self.path.push("interaction".into());
        // Side condition for interaction variables: the sort must be
        // non-empty in every case of the projection.
        if let MessageSort::IndexBinder(x, i) = sort {
            if !nonempty(ctx, i).unwrap_or(false) {
                let e = self.fail(
                    FailureKind::EmptySort,
                    format!("sort of interaction variable `{}`", x),
                );
                self.path.pop();
                return Err(e);
            }
        }
        let q = self.target.clone();
        let sender_match = role_equal(ctx, sender, &q);
        let recv_match = receivers.iter().position(|r| role_equal(ctx, r, &q));

        let extend = |ctx: &ConstraintContext| match sort {
            MessageSort::IndexBinder(x, i) => ctx.extended(x, i.clone()),
            MessageSort::Plain(_) => ctx.clone(),
        };

        let result = match (sender_match, recv_match) {
            (true, Some(_)) => {
                if receivers.len() > 1 {
                    Err(self.fail(
                        FailureKind::MulticastSelf,
                        format!("{} is sender and receiver of a multicast", q),
                    ))
                } else {
                    let p2 = &receivers[0];
                    let r_out = subst_role(p2, &q, sender)
                        .unwrap_or_else(|_| p2.clone())
                        .fold_consts();
                    let r_in = subst_role(sender, &q, p2)
                        .unwrap_or_else(|_| sender.clone())
                        .fold_consts();
                    let inner = extend(ctx);
                    let t = self.proj(cont, &inner)?;
                    Ok(EndpointType::Out {
                        sender: q.clone(),
                        receivers: vec![r_out],
                        sort: sort.clone(),
                        cont: Box::new(EndpointType::In {
                            sender: r_in,
                            receiver: q.clone(),
                            sort: sort.clone(),
                            cont: Box::new(t),
                        }),
                    })
                }
            }
            (true, None) => {
                let rewritten: Vec<Role> = receivers
                    .iter()
                    .map(|r| subst_role(r, &q, sender).unwrap_or_else(|_| r.clone()).fold_consts())
                    .collect();
                let inner = extend(ctx);
                let t = self.proj(cont, &inner)?;
                Ok(EndpointType::Out {
                    sender: q.clone(),
                    receivers: rewritten,
                    sort: sort.clone(),
                    cont: Box::new(t),
                })
            }
            (false, Some(k)) => {
                let matched = &receivers[k];
                let r_in = subst_role(sender, &q, matched)
                    .unwrap_or_else(|_| sender.clone())
                    .fold_consts();
                let inner = extend(ctx);
                let t = self.proj(cont, &inner)?;
                Ok(EndpointType::In {
                    sender: r_in,
                    receiver: q.clone(),
                    sort: sort.clone(),
                    cont: Box::new(t),
                })
            }
            (false, None) => {
                if let MessageSort::IndexBinder(x, _) = sort {
                    self.hidden.insert(x.clone());
                }
                self.proj(cont, ctx)
            }
        };
        self.path.pop();
        result
    }

    fn proj_sum(&mut self, g: &GlobalType, ctx: &ConstraintContext) -> PResult {
        // T + end == T: drop end summands before projecting.
        let summands: Vec<&GlobalType> = flatten_gsum(g)
            .into_iter()
            .filter(|s| !matches!(s, GlobalType::End))
            .collect();
        if summands.is_empty() {
            return Ok(EndpointType::End);
        }
        if summands.len() == 1 {
            return self.proj(summands[0], ctx);
        }
        self.path.push("sum".into());
        // Side condition: the first-prefix participants must agree.
        let pid0 = first_prefix_pid(summands[0]);
        for s in &summands[1..] {
            if first_prefix_pid(s) != pid0 {
                let e = self.fail(
                    FailureKind::SumPidMismatch,
                    "branches expose different first-prefix participants".to_string(),
                );
                self.path.pop();
                return Err(e);
            }
        }
        let mut ts = Vec::new();
        for s in &summands {
            ts.push(self.proj(s, ctx)?);
        }
        match compatible_all(&ts, ctx) {
            Some(_) => {
                self.path.pop();
                Ok(EndpointType::sum_of(ts))
            }
            None => {
                let e = self.fail(
                    FailureKind::IncompatibleBranches,
                    "projected branches fit no compatibility mode".to_string(),
                );
                self.path.pop();
                Err(e)
            }
        }
    }
}

fn flatten_gsum(g: &GlobalType) -> Vec<&GlobalType> {
    match g {
        GlobalType::Sum(a, b) => {
            let mut v = flatten_gsum(a);
            v.extend(flatten_gsum(b));
            v
        }
        other => vec![other],
    }
}

/// Endpoints of the first prefix of a global type; the empty set for
/// guard-headed branches. Nested sums look into the left branch.
pub fn first_prefix_pid(g: &GlobalType) -> BTreeSet<Role> {
    match g {
        GlobalType::Interaction {
            sender, receivers, ..
        } => {
            let mut s = BTreeSet::new();
            s.insert(sender.clone());
            s.extend(receivers.iter().cloned());
            s
        }
        GlobalType::Mu(_, b) | GlobalType::Prod(_, _, b) => first_prefix_pid(b),
        GlobalType::App(b, _) => first_prefix_pid(b),
        GlobalType::Sum(a, _) | GlobalType::Par(a, _) => first_prefix_pid(a),
        GlobalType::Match(_, _) | GlobalType::TypeVar(_) | GlobalType::End => BTreeSet::new(),
    }
}

/// Determine the compatibility mode of a full branch list, if any.
pub fn compatible_all(branches: &[EndpointType], ctx: &ConstraintContext) -> Option<CompatMode> {
    if branches.len() < 2 {
        return Some(CompatMode::NonParticipant);
    }
    // Identical branches: the non-participant mode.
    if branches.windows(2).all(|w| w[0] == w[1]) {
        return Some(CompatMode::NonParticipant);
    }
    // Guard-headed branches with pairwise disjoint guards.
    if branches
        .iter()
        .all(|t| matches!(t, EndpointType::Match(_, _)))
    {
        for i in 0..branches.len() {
            for j in (i + 1)..branches.len() {
                let (EndpointType::Match(bi, _), EndpointType::Match(bj, _)) =
                    (&branches[i], &branches[j])
                else {
                    unreachable!()
                };
                if !bool_distinct(ctx, bi, bj).unwrap_or(false) {
                    return None;
                }
            }
        }
        return Some(CompatMode::Boolean);
    }
    // Same-direction, same-endpoint prefixes with pairwise distinct sorts.
    let mut heads = Vec::new();
    for t in branches {
        match t {
            EndpointType::Out {
                sender,
                receivers,
                sort,
                ..
            } => heads.push((true, sender.clone(), receivers.clone(), sort.clone())),
            EndpointType::In {
                sender,
                receiver,
                sort,
                ..
            } => heads.push((false, sender.clone(), vec![receiver.clone()], sort.clone())),
            _ => return None,
        }
    }
    let (dir0, s0, r0, _) = &heads[0];
    for (dir, s, r, _) in &heads[1..] {
        if dir != dir0 {
            return None;
        }
        if !role_equal(ctx, s, s0) || r.len() != r0.len() {
            return None;
        }
        for (a, b) in r.iter().zip(r0) {
            if !role_equal(ctx, a, b) {
                return None;
            }
        }
    }
    for i in 0..heads.len() {
        for j in (i + 1)..heads.len() {
            if !sorts_distinct(&heads[i].3, &heads[j].3, ctx) {
                return None;
            }
        }
    }
    Some(CompatMode::Prefix)
}

/// Compatibility of two branch lists, mirroring the pairwise definition.
pub fn compatible(
    left: &[EndpointType],
    right: &[EndpointType],
    ctx: &ConstraintContext,
) -> Option<CompatMode> {
    let mut all: Vec<EndpointType> = left.to_vec();
    all.extend(right.to_vec());
    compatible_all(&all, ctx)
}

/// Sort inequality: structural for plain sorts; index-binder sorts compare
/// by their sort component.
pub fn sorts_distinct(a: &MessageSort, b: &MessageSort, ctx: &ConstraintContext) -> bool {
    match (a, b) {
        (MessageSort::Plain(x), MessageSort::Plain(y)) => x != y,
        (MessageSort::IndexBinder(_, i), MessageSort::IndexBinder(_, j)) => {
            !sorts_equal_sets(i, j, ctx)
        }
        _ => true,
    }
}

/// Two index sorts denote the same set: mutual inclusion over the naturals.
fn sorts_equal_sets(a: &IndexSort, b: &IndexSort, ctx: &ConstraintContext) -> bool {
    if a == b {
        return true;
    }
    // x in a but not in b, or vice versa, must be unsatisfiable. Negation of
    // a conjunction of Leq atoms splits into strict reversals.
    !inclusion_violated(a, b, ctx) && !inclusion_violated(b, a, ctx)
}

fn inclusion_violated(a: &IndexSort, b: &IndexSort, ctx: &ConstraintContext) -> bool {
    use crate::constraints::{oracle, LinAtom};
    let var = "%x";
    let mut base = Vec::new();
    collect_sort_atoms(var, a, &mut base);
    let mut negs: Vec<Vec<LinAtom>> = Vec::new();
    let mut b_atoms = Vec::new();
    collect_sort_atoms(var, b, &mut b_atoms);
    for atom in b_atoms {
        // violate one of b's constraints: atom fails, i.e. sum + bias > 0
        let mut flipped = atom.clone();
        flipped.coeffs = atom.coeffs.iter().map(|(k, v)| (k.clone(), -v)).collect();
        flipped.bias = -atom.bias + 1;
        flipped.equality = false;
        negs.push(vec![flipped]);
    }
    for neg in negs {
        let mut atoms = base.clone();
        atoms.extend(neg);
        let mut f = oracle::formula_for_context(ctx, atoms);
        if !f.vars.contains(&var.to_string()) {
            f.vars.push(var.to_string());
        }
        if crate::constraints::sat(&f) {
            return true;
        }
    }
    false
}

fn collect_sort_atoms(var: &str, sort: &IndexSort, out: &mut Vec<crate::constraints::LinAtom>) {
    use crate::constraints::LinAtom;
    out.push(LinAtom::leq(&ArithExpr::Const(0), &ArithExpr::var(var)));
    if let IndexSort::Subset { var: bound, base, pred } = sort {
        collect_sort_atoms(var, base, out);
        for (a, b) in pred.atoms() {
            let a = a.subst_var(bound, &ArithExpr::var(var));
            let b = b.subst_var(bound, &ArithExpr::var(var));
            out.push(LinAtom::leq(&a, &b));
        }
    }
}

/// Rename binders of the global type apart from the target's variables and
/// the ambient context, so projection equalities never confuse the two.
fn freshen_binders(g: &GlobalType, avoid: &BTreeSet<String>, gen: &mut NameGen) -> GlobalType {
    match g {
        GlobalType::Prod(x, i, body) => {
            if avoid.contains(x) {
                let fresh = gen.fresh(x);
                let renamed = body.subst_index(x, &ArithExpr::var(&fresh));
                GlobalType::Prod(
                    fresh,
                    i.clone(),
                    Box::new(freshen_binders(&renamed, avoid, gen)),
                )
            } else {
                GlobalType::Prod(x.clone(), i.clone(), Box::new(freshen_binders(body, avoid, gen)))
            }
        }
        GlobalType::Interaction {
            sender,
            receivers,
            sort,
            cont,
        } => {
            let (sort, cont2) = match sort {
                MessageSort::IndexBinder(x, i) if avoid.contains(x) => {
                    let fresh = gen.fresh(x);
                    let renamed = cont.subst_index(x, &ArithExpr::var(&fresh));
                    (MessageSort::IndexBinder(fresh, i.clone()), renamed)
                }
                _ => (sort.clone(), (**cont).clone()),
            };
            GlobalType::Interaction {
                sender: sender.clone(),
                receivers: receivers.clone(),
                sort,
                cont: Box::new(freshen_binders(&cont2, avoid, gen)),
            }
        }
        GlobalType::Mu(x, b) => GlobalType::Mu(x.clone(), Box::new(freshen_binders(b, avoid, gen))),
        GlobalType::TypeVar(_) | GlobalType::End => g.clone(),
        GlobalType::Par(a, b) => GlobalType::Par(
            Box::new(freshen_binders(a, avoid, gen)),
            Box::new(freshen_binders(b, avoid, gen)),
        ),
        GlobalType::Sum(a, b) => GlobalType::Sum(
            Box::new(freshen_binders(a, avoid, gen)),
            Box::new(freshen_binders(b, avoid, gen)),
        ),
        GlobalType::Match(b, body) => {
            GlobalType::Match(b.clone(), Box::new(freshen_binders(body, avoid, gen)))
        }
        GlobalType::App(b, e) => {
            GlobalType::App(Box::new(freshen_binders(b, avoid, gen)), e.clone())
        }
    }
}

/// The projection of `g` onto `q` under context `ctx`.
pub fn project(
    g: &GlobalType,
    q: &Role,
    ctx: &ConstraintContext,
) -> Result<EndpointType, ProjectionFailure> {
    let mut avoid: BTreeSet<String> = q.dv();
    for x in ctx.vars() {
        avoid.insert(x.to_string());
    }
    let mut gen = NameGen::new();
    let g = freshen_binders(g, &avoid, &mut gen);
    let mut p = Projector {
        target: q.clone(),
        gen: NameGen::new(),
        mu_env: BTreeMap::new(),
        hidden: BTreeSet::new(),
        path: Vec::new(),
        base_ctx: ctx,
    };
    let _ = &p.gen;
    let _ = p.base_ctx;
    p.proj(&g, ctx)
}

/// Stable merge sort of every maximal prefix run by the sender order.
/// Binder-carrying prefixes end their run so sorting never moves a use
/// before its binder.
pub fn sort_endpoint(t: &EndpointType, ctx: &ConstraintContext) -> EndpointType {
    match t {
        EndpointType::Out { .. } | EndpointType::In { .. } => {
            let (mut run, tail) = split_run(t);
            let tail = sort_endpoint(&tail, ctx);
            run = merge_sort(run, ctx);
            reattach(run, tail)
        }
        EndpointType::Mu(x, b) => EndpointType::Mu(x.clone(), Box::new(sort_endpoint(b, ctx))),
        EndpointType::TypeVar(_) | EndpointType::End => t.clone(),
        EndpointType::Sum(a, b) => EndpointType::Sum(
            Box::new(sort_endpoint(a, ctx)),
            Box::new(sort_endpoint(b, ctx)),
        ),
        EndpointType::Match(b, body) => {
            EndpointType::Match(b.clone(), Box::new(sort_endpoint(body, ctx)))
        }
        EndpointType::Prod(x, i, body) => {
            EndpointType::Prod(x.clone(), i.clone(), Box::new(sort_endpoint(body, ctx)))
        }
        EndpointType::App(body, e) => {
            EndpointType::App(Box::new(sort_endpoint(body, ctx)), e.clone())
        }
    }
}

/// A run element: one prefix with the continuation removed.
#[derive(Clone)]
struct Prefix {
    t: EndpointType,
}

fn split_run(t: &EndpointType) -> (Vec<Prefix>, EndpointType) {
    let mut run = Vec::new();
    let mut cur = t.clone();
    loop {
        match cur {
            EndpointType::Out {
                ref sender,
                ref receivers,
                ref sort,
                ref cont,
            } => {
                let binder = matches!(sort, MessageSort::IndexBinder(..));
                let next = (**cont).clone();
                run.push(Prefix {
                    t: EndpointType::Out {
                        sender: sender.clone(),
                        receivers: receivers.clone(),
                        sort: sort.clone(),
                        cont: Box::new(EndpointType::End),
                    },
                });
                if binder {
                    return (run, next);
                }
                cur = next;
            }
            EndpointType::In {
                ref sender,
                ref receiver,
                ref sort,
                ref cont,
            } => {
                let binder = matches!(sort, MessageSort::IndexBinder(..));
                let next = (**cont).clone();
                run.push(Prefix {
                    t: EndpointType::In {
                        sender: sender.clone(),
                        receiver: receiver.clone(),
                        sort: sort.clone(),
                        cont: Box::new(EndpointType::End),
                    },
                });
                if binder {
                    return (run, next);
                }
                cur = next;
            }
            other => return (run, other),
        }
    }
}

fn reattach(run: Vec<Prefix>, tail: EndpointType) -> EndpointType {
    let mut acc = tail;
    for p in run.into_iter().rev() {
        acc = match p.t {
            EndpointType::Out {
                sender,
                receivers,
                sort,
                ..
            } => EndpointType::Out {
                sender,
                receivers,
                sort,
                cont: Box::new(acc),
            },
            EndpointType::In {
                sender,
                receiver,
                sort,
                ..
            } => EndpointType::In {
                sender,
                receiver,
                sort,
                cont: Box::new(acc),
            },
            _ => unreachable!(),
        };
    }
    acc
}

fn merge_sort(run: Vec<Prefix>, ctx: &ConstraintContext) -> Vec<Prefix> {
    if run.len() <= 1 {
        return run;
    }
    let mid = run.len() / 2;
    let right = merge_sort(run[mid..].to_vec(), ctx);
    let left = merge_sort(run[..mid].to_vec(), ctx);
    let mut out = Vec::with_capacity(left.len() + right.len());
    let (mut li, mut ri) = (0usize, 0usize);
    while li < left.len() && ri < right.len() {
        // Stable: take from the left unless the right head is strictly
        // before it.
        if rel_prefix(ctx, &right[ri].t, &left[li].t) == Ordering::Before {
            out.push(right[ri].clone());
            ri += 1;
        } else {
            out.push(left[li].clone());
            li += 1;
        }
    }
    out.extend_from_slice(&left[li..]);
    out.extend_from_slice(&right[ri..]);
    out
}

/// Coherence: matching coherent, and projectable onto every participant.
/// Participants with parameterised indices project under the context extended
/// with their binder sorts as declared in the global type.
pub fn coherent(g: &GlobalType, ctx: &ConstraintContext) -> Result<(), ProjectionFailure> {
    let mc = matching_coherent(g, ctx);
    if let crate::analysis::Verdict::Fail { path, detail } = mc {
        return Err(ProjectionFailure {
            kind: FailureKind::GuardUnscoped,
            path: vec![path],
            detail,
        });
    }
    let binders = binder_sorts(g);
    for p in g.pid() {
        let mut c = ctx.clone();
        for x in p.dv() {
            if !c.contains(&x) {
                if let Some(i) = binders.get(&x) {
                    c.push(&x, i.clone());
                } else {
                    c.push(&x, IndexSort::Nat);
                }
            }
        }
        project(g, &p, &c)?;
    }
    Ok(())
}

fn binder_sorts(g: &GlobalType) -> BTreeMap<String, IndexSort> {
    let mut out = BTreeMap::new();
    fn walk(g: &GlobalType, out: &mut BTreeMap<String, IndexSort>) {
        match g {
            GlobalType::Prod(x, i, b) => {
                out.entry(x.clone()).or_insert_with(|| i.clone());
                walk(b, out);
            }
            GlobalType::Interaction { sort, cont, .. } => {
                if let MessageSort::IndexBinder(x, i) = sort {
                    out.entry(x.clone()).or_insert_with(|| i.clone());
                }
                walk(cont, out);
            }
            GlobalType::Mu(_, b) | GlobalType::Match(_, b) => walk(b, out),
            GlobalType::App(b, _) => walk(b, out),
            GlobalType::Par(a, b) | GlobalType::Sum(a, b) => {
                walk(a, out);
                walk(b, out);
            }
            GlobalType::TypeVar(_) | GlobalType::End => {}
        }
    }
    walk(g, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_endpoint, parse_global, parse_global_with, Definitions};

    fn empty() -> ConstraintContext {
        ConstraintContext::new()
    }

    fn gw() -> GlobalType {
        parse_global(
            "C -> P : <Req> . (P -> W : <Fwd> . W -> C : <Rep> . end \
             + P -> W : <Aud> . W -> P : <Dtls> . P -> W : <Res> . W -> C : <Rep> . end)",
        )
        .unwrap()
    }

    #[test]
    fn project_end() {
        assert_eq!(
            project(&GlobalType::End, &Role::prim("q"), &empty()).unwrap(),
            EndpointType::End
        );
    }

    #[test]
    fn project_web_service_onto_proxy() {
        let t = project(&gw(), &Role::prim("P"), &empty()).unwrap();
        let expected = parse_endpoint(
            "[C,P]?(Req).([P,W]!<Fwd>.end + [P,W]!<Aud>.[W,P]?(Dtls).[P,W]!<Res>.end)",
        )
        .unwrap();
        assert_eq!(t, expected);
    }

    #[test]
    fn project_web_service_onto_client_is_np_sum() {
        let t = project(&gw(), &Role::prim("C"), &empty()).unwrap();
        let expected =
            parse_endpoint("[C,P]!<Req>.([W,C]?(Rep).end + [W,C]?(Rep).end)").unwrap();
        assert_eq!(t, expected);
    }

    fn ring_defs() -> Definitions {
        let mut defs = Definitions::default();
        defs.sorts.insert(
            "I".into(),
            IndexSort::subset(
                "n'",
                IndexSort::Nat,
                Predicate::Leq(ArithExpr::Const(2), ArithExpr::var("n'")),
            ),
        );
        defs.sorts.insert(
            "Jmid".into(),
            IndexSort::subset(
                "i'",
                IndexSort::Nat,
                Predicate::Conj(
                    Box::new(Predicate::Leq(ArithExpr::Const(2), ArithExpr::var("i'"))),
                    Box::new(Predicate::Leq(
                        ArithExpr::var("i'"),
                        ArithExpr::sub(ArithExpr::var("n"), ArithExpr::Const(1)),
                    )),
                ),
            ),
        );
        defs
    }

    fn gr(defs: &Definitions) -> GlobalType {
        parse_global_with(
            "Pi i : {i' : nat | i' < n and 1 <= i'} . W[i] -> W[i+1] : <U> . W[n] -> W[1] : <U> . end",
            defs,
        )
        .unwrap()
    }

    fn ring_ctx(defs: &Definitions) -> ConstraintContext {
        ConstraintContext::of(vec![
            ("n".into(), defs.sorts["I"].clone()),
            ("i".into(), defs.sorts["Jmid"].clone()),
        ])
    }

    #[test]
    fn project_ring_onto_middle() {
        let defs = ring_defs();
        let g = gr(&defs);
        let ctx = ring_ctx(&defs);
        let q = Role::indexed("W", vec![ArithExpr::var("i")]);
        let t = project(&g, &q, &ctx).unwrap();
        let expected = parse_endpoint("[W[i],W[i+1]]!<U>.[W[i-1],W[i]]?(U).end").unwrap();
        assert_eq!(t, expected);
    }

    #[test]
    fn sort_ring_projection() {
        let defs = ring_defs();
        let g = gr(&defs);
        let ctx = ring_ctx(&defs);
        let q = Role::indexed("W", vec![ArithExpr::var("i")]);
        let t = project(&g, &q, &ctx).unwrap();
        let sorted = sort_endpoint(&t, &ctx);
        let expected = parse_endpoint("[W[i-1],W[i]]?(U).[W[i],W[i+1]]!<U>.end").unwrap();
        assert_eq!(sorted, expected);
    }

    #[test]
    fn project_ring_onto_starter_and_last() {
        let defs = ring_defs();
        let g = gr(&defs);
        let ctx = ConstraintContext::of(vec![("n".into(), defs.sorts["I"].clone())]);
        let starter = project(&g, &Role::indexed("W", vec![ArithExpr::Const(1)]), &ctx).unwrap();
        let sorted = sort_endpoint(&starter, &ctx);
        assert_eq!(
            sorted,
            parse_endpoint("[W[1],W[2]]!<U>.[W[n],W[1]]?(U).end").unwrap()
        );
        let last = project(&g, &Role::indexed("W", vec![ArithExpr::var("n")]), &ctx).unwrap();
        let sorted_last = sort_endpoint(&last, &ctx);
        assert_eq!(
            sorted_last,
            parse_endpoint("[W[n-1],W[n]]?(U).[W[n],W[1]]!<U>.end").unwrap()
        );
    }

    #[test]
    fn sorting_is_identity_on_primitive_roles() {
        let t = project(&gw(), &Role::prim("P"), &empty()).unwrap();
        assert_eq!(sort_endpoint(&t, &empty()), t);
    }

    #[test]
    fn sorting_is_idempotent_and_preserves_prefixes() {
        let defs = ring_defs();
        let g = gr(&defs);
        let ctx = ring_ctx(&defs);
        let q = Role::indexed("W", vec![ArithExpr::var("i")]);
        let t = project(&g, &q, &ctx).unwrap();
        let s1 = sort_endpoint(&t, &ctx);
        let s2 = sort_endpoint(&s1, &ctx);
        assert_eq!(s1, s2);
    }

    #[test]
    fn mesh_projection_and_sorting() {
        let g = parse_global(
            "Pi i : {i' : nat | i' < n} . Pi j : {j' : nat | j' < m} . \
             W[i][j] -> W[i+1][j] : <nat> . \
             W[i][j] -> W[i][j+1] : <nat> . \
             W[i][m] -> W[i+1][m] : <nat> . \
             W[n][j] -> W[n][j+1] : <nat> . end",
        )
        .unwrap();
        let jsort = IndexSort::subset(
            "i'",
            IndexSort::Nat,
            Predicate::Leq(
                ArithExpr::add(ArithExpr::var("i'"), ArithExpr::Const(1)),
                ArithExpr::var("n"),
            ),
        );
        let ksort = IndexSort::subset(
            "j'",
            IndexSort::Nat,
            Predicate::Leq(
                ArithExpr::add(ArithExpr::var("j'"), ArithExpr::Const(1)),
                ArithExpr::var("m"),
            ),
        );
        let ctx = ConstraintContext::of(vec![
            ("n".into(), IndexSort::Nat),
            ("m".into(), IndexSort::Nat),
            ("i".into(), jsort),
            ("j".into(), ksort),
        ]);
        let q = Role::indexed("W", vec![ArithExpr::var("i"), ArithExpr::var("j")]);
        let t = project(&g, &q, &ctx).unwrap();
        let expected = parse_endpoint(
            "[W[i][j],W[i+1][j]]!<nat>.[W[i-1][j],W[i][j]]?(nat).\
             [W[i][j],W[i][j+1]]!<nat>.[W[i][j-1],W[i][j]]?(nat).end",
        )
        .unwrap();
        assert_eq!(t, expected);
        let sorted = sort_endpoint(&t, &ctx);
        let expected_sorted = parse_endpoint(
            "[W[i-1][j],W[i][j]]?(nat).[W[i][j-1],W[i][j]]?(nat).\
             [W[i][j],W[i+1][j]]!<nat>.[W[i][j],W[i][j+1]]!<nat>.end",
        )
        .unwrap();
        assert_eq!(sorted, expected_sorted);
    }

    #[test]
    fn project_guard_with_unbound_variable_fails() {
        let g = parse_global("[x < 5] p -> q : <U> . end").unwrap();
        let err = project(&g, &Role::prim("p"), &empty()).unwrap_err();
        assert_eq!(err.kind, FailureKind::GuardUnscoped);
    }

    #[test]
    fn coherent_web_service() {
        assert!(coherent(&gw(), &empty()).is_ok());
    }

    #[test]
    fn coherent_end() {
        assert!(coherent(&GlobalType::End, &empty()).is_ok());
    }

    #[test]
    fn appendix_negatives_fail_with_expected_clauses() {
        let cases: Vec<(&str, FailureKind)> = vec![
            (
                "p -> q : <x : {x' : nat | x'+1 <= 0}> . end",
                FailureKind::EmptySort,
            ),
            ("(p -> q : <U> . end) @ 5", FailureKind::AppNotProduct),
            (
                "(Pi x : {x' : nat | 4 <= x'} . p -> q : <U> . end) @ 3",
                FailureKind::AppMemberFail,
            ),
            (
                "Pi x : nat . p -> q : <U> . end + Pi x : nat . p -> q : <V> . q -> p : <U> . end",
                FailureKind::IncompatibleBranches,
            ),
            ("[x < 5] p -> q : <U> . end", FailureKind::GuardUnscoped),
        ];
        for (src, kind) in cases {
            let g = parse_global(src).unwrap();
            let err = coherent(&g, &empty()).unwrap_err();
            assert_eq!(err.kind, kind, "wrong clause for `{}`: {:?}", src, err);
        }
    }

    #[test]
    fn parallel_overlap_fails() {
        let g = parse_global("p -> q : <U> . end || p -> r : <U> . end").unwrap();
        let err = project(&g, &Role::prim("p"), &empty()).unwrap_err();
        assert_eq!(err.kind, FailureKind::ParallelOverlap);
        // Non-participant of both sides projects to end.
        let t = project(&g, &Role::prim("z"), &empty()).unwrap();
        assert_eq!(t, EndpointType::End);
    }

    #[test]
    fn compatibility_modes() {
        let out_fwd = parse_endpoint("[P,W]!<Fwd>.end").unwrap();
        let out_aud = parse_endpoint("[P,W]!<Aud>.end").unwrap();
        assert_eq!(
            compatible(&[out_fwd.clone()], &[out_aud], &empty()),
            Some(CompatMode::Prefix)
        );
        let same = parse_endpoint("[W,C]?(Rep).end").unwrap();
        assert_eq!(
            compatible(&[same.clone()], &[same.clone()], &empty()),
            Some(CompatMode::NonParticipant)
        );
        let ctx = ConstraintContext::of(vec![("v0".into(), IndexSort::Nat)]);
        let g1 = parse_endpoint("[v0 < 120] end").unwrap();
        let g2 = parse_endpoint("[not v0 < 120] [S,Bu]?(Ok).end").unwrap();
        assert_eq!(compatible(&[g1], &[g2], &ctx), Some(CompatMode::Boolean));
        let bad1 = parse_endpoint("[P,W]!<Fwd>.end").unwrap();
        let bad2 = parse_endpoint("[P,W]!<Fwd>.[W,P]?(Dtls).end").unwrap();
        assert_eq!(compatible(&[bad1], &[bad2], &empty()), None);
    }

    #[test]
    fn financial_projects_onto_all() {
        let mut defs = Definitions::default();
        defs.sorts.insert(
            "IOffer".into(),
            IndexSort::subset(
                "v'",
                IndexSort::Nat,
                Predicate::Leq(ArithExpr::Const(100), ArithExpr::var("v'")),
            ),
        );
        let g = parse_global_with(
            "Bu -> S : <v0 : IOffer> . (mu X . Pi iter : nat . [iter < 5] \
             ([v0 < 120] S -> Bu,Ba : <Neg> . Bu -> S : <v0 : IOffer> . X @ (iter+1) \
              + [not v0 < 120] S -> Bu,Ba : <Ok> . Bu -> Ba : <v0 : IOffer> . Ba -> S : <Ack> . end)) @ 1",
            &defs,
        )
        .unwrap();
        assert!(coherent(&g, &empty()).is_ok(), "financial should be coherent");
        let bu = project(&g, &Role::prim("Bu"), &empty()).unwrap();
        let expected_bu = parse_endpoint(
            "[Bu,S]!<v0 : {v' : nat | 100 <= v'}>.(mu X . Pi iter : nat . [iter < 5] \
             ([v0 < 120] [S,Bu]?(Neg).[Bu,S]!<v0 : {v' : nat | 100 <= v'}>.X @ (iter+1) \
              + [not v0 < 120] [S,Bu]?(Ok).[Bu,Ba]!<v0 : {v' : nat | 100 <= v'}>.end)) @ 1",
        )
        .unwrap();
        assert_eq!(bu, expected_bu);
        // The bank never sees v0: its guards are dropped.
        let ba = project(&g, &Role::prim("Ba"), &empty()).unwrap();
        let expected_ba = parse_endpoint(
            "(mu X . Pi iter : nat . [iter < 5] \
             ([S,Ba]?(Neg).X @ (iter+1) \
              + [S,Ba]?(Ok).[Bu,Ba]?(v0 : {v' : nat | 100 <= v'}).[Ba,S]!<Ack>.end)) @ 1",
        )
        .unwrap();
        assert_eq!(ba, expected_ba);
    }

    #[test]
    fn network_robust_projects_multicast() {
        let g = crate::analysis::robust_transform(
            &parse_global(
                "C -> P : <Data> . (P -> L : <Logs> . L -> ES : <Data> . end \
                 + P -> L : <Suspicious> . L -> SS : <Logs> . end \
                 + P -> L : <QuotaWarn> . L -> C : <Quota> . end)",
            )
            .unwrap(),
        );
        let t = project(&g, &Role::prim("P"), &empty()).unwrap();
        let expected = parse_endpoint(
            "[C,P]?(Data).([P,{L,ES,SS,C}]!<Logs>.end \
             + [P,{L,ES,SS,C}]!<Suspicious>.end \
             + [P,{L,ES,SS,C}]!<QuotaWarn>.end)",
        )
        .unwrap();
        assert_eq!(t, expected);
        assert!(coherent(&g, &empty()).is_ok());
    }
}
