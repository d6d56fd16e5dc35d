//! Well-formedness checks on global types and the robustness transformation:
//! well-sortedness of index sets, well-typed dependent applications, matching
//! coherence of guards, input/output dependency, and the source-to-source
//! transformation that notifies branch participants.

use crate::ast::*;
use crate::constraints::{member, nonempty, ConstraintContext};
use std::collections::{BTreeMap, BTreeSet};

/// Tri-state verdict with the offending subterm path on failure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail { path: String, detail: String },
    NotApplicable,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        matches!(self, Verdict::Pass | Verdict::NotApplicable)
    }

    fn fail(path: &[String], detail: impl Into<String>) -> Verdict {
        Verdict::Fail {
            path: path.join("/"),
            detail: detail.into(),
        }
    }
}

/// Combined report over one global type.
#[derive(Debug, Clone)]
pub struct AnalysisReport {
    pub well_sorted: Verdict,
    pub well_asserted: Verdict,
    pub well_dependent: Verdict,
    pub matching_coherent: Verdict,
    pub robust: Verdict,
}

impl AnalysisReport {
    pub fn all_passed(&self) -> bool {
        self.well_sorted.passed()
            && self.well_asserted.passed()
            && self.well_dependent.passed()
            && self.matching_coherent.passed()
            && self.robust.passed()
    }
}

/// Every index sort occurring in the type must denote a non-empty set of
/// naturals under its local context.
pub fn well_sorted(g: &GlobalType, ctx: &ConstraintContext) -> Verdict {
    let mut path = Vec::new();
    ws(g, ctx, &mut path)
}

fn ws(g: &GlobalType, ctx: &ConstraintContext, path: &mut Vec<String>) -> Verdict {
    match g {
        GlobalType::Interaction { sort, cont, .. } => {
            path.push("interaction".into());
            let v = match sort {
                MessageSort::IndexBinder(x, i) => {
                    if !nonempty(ctx, i).unwrap_or(false) {
                        Verdict::fail(path, format!("empty interaction sort for `{}`", x))
                    } else {
                        ws(cont, &ctx.extended(x, i.clone()), path)
                    }
                }
                MessageSort::Plain(_) => ws(cont, ctx, path),
            };
            path.pop();
            v
        }
        GlobalType::Mu(_, body) => ws(body, ctx, path),
        GlobalType::TypeVar(_) | GlobalType::End => Verdict::Pass,
        GlobalType::Par(a, b) | GlobalType::Sum(a, b) => {
            path.push("left".into());
            let va = ws(a, ctx, path);
            path.pop();
            if !va.passed() {
                return va;
            }
            path.push("right".into());
            let vb = ws(b, ctx, path);
            path.pop();
            vb
        }
        GlobalType::Match(_, body) => ws(body, ctx, path),
        GlobalType::Prod(x, i, body) => {
            path.push(format!("Pi {}", x));
            let v = if !nonempty(ctx, i).unwrap_or(false) {
                Verdict::fail(path, format!("empty product sort for `{}`", x))
            } else {
                ws(body, &ctx.extended(x, i.clone()), path)
            };
            path.pop();
            v
        }
        GlobalType::App(body, _) => ws(body, ctx, path),
    }
}

/// Every application must apply a product (up to equi-recursion) to an
/// argument that conforms to the product's sort.
pub fn well_dependent(g: &GlobalType, ctx: &ConstraintContext) -> Verdict {
    let mut path = Vec::new();
    wd(g, ctx, &BTreeMap::new(), &mut path)
}

fn wd(
    g: &GlobalType,
    ctx: &ConstraintContext,
    mu_env: &BTreeMap<String, GlobalType>,
    path: &mut Vec<String>,
) -> Verdict {
    match g {
        GlobalType::Interaction { sort, cont, .. } => {
            let ctx = match sort {
                MessageSort::IndexBinder(x, i) => ctx.extended(x, i.clone()),
                _ => ctx.clone(),
            };
            wd(cont, &ctx, mu_env, path)
        }
        GlobalType::Mu(x, body) => {
            let mut env = mu_env.clone();
            env.insert(x.clone(), g.clone());
            wd(body, ctx, &env, path)
        }
        GlobalType::TypeVar(_) | GlobalType::End => Verdict::Pass,
        GlobalType::Par(a, b) | GlobalType::Sum(a, b) => {
            let va = wd(a, ctx, mu_env, path);
            if !va.passed() {
                return va;
            }
            wd(b, ctx, mu_env, path)
        }
        GlobalType::Match(_, body) => wd(body, ctx, mu_env, path),
        GlobalType::Prod(x, i, body) => wd(body, &ctx.extended(x, i.clone()), mu_env, path),
        GlobalType::App(body, e) => {
            path.push("app".into());
            let v = match resolve_product(body, mu_env, 8) {
                Some((x, i, _)) => {
                    let inner = ctx.extended(&x, i.clone());
                    match member(&inner, e, &i) {
                        Ok(true) => wd(body, ctx, mu_env, path),
                        Ok(false) => Verdict::fail(
                            path,
                            format!(
                                "argument {} outside product sort",
                                crate::syntax::print_arith(e)
                            ),
                        ),
                        Err(err) => Verdict::fail(path, err.to_string()),
                    }
                }
                None => Verdict::fail(path, "application of a non-product global type"),
            };
            path.pop();
            v
        }
    }
}

/// Chase a global type to a product through mu-unfolding and variables.
pub fn resolve_product(
    g: &GlobalType,
    mu_env: &BTreeMap<String, GlobalType>,
    fuel: usize,
) -> Option<(String, IndexSort, GlobalType)> {
    if fuel == 0 {
        return None;
    }
    match g {
        GlobalType::Prod(x, i, body) => Some((x.clone(), i.clone(), (**body).clone())),
        GlobalType::Mu(_, _) => resolve_product(&g.unfold_mu(), mu_env, fuel - 1),
        GlobalType::TypeVar(x) => {
            let bound = mu_env.get(x)?.clone();
            resolve_product(&bound.unfold_mu(), mu_env, fuel - 1)
        }
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Visibility {
    All,
    Roles(BTreeSet<Role>),
}

impl Visibility {
    fn sees(&self, r: &Role) -> bool {
        match self {
            Visibility::All => true,
            Visibility::Roles(rs) => rs.contains(r),
        }
    }
}

/// Matching coherence: every guard's variables must be visible to both
/// endpoints of some interaction in the guarded subterm (closed guards pass
/// trivially).
pub fn matching_coherent(g: &GlobalType, ctx: &ConstraintContext) -> Verdict {
    let mut vis: BTreeMap<String, Visibility> = BTreeMap::new();
    for x in ctx.vars() {
        vis.insert(x.to_string(), Visibility::All);
    }
    let mut path = Vec::new();
    mc(g, &mut vis, &mut path)
}

fn mc(
    g: &GlobalType,
    vis: &mut BTreeMap<String, Visibility>,
    path: &mut Vec<String>,
) -> Verdict {
    match g {
        GlobalType::Interaction {
            sender,
            receivers,
            sort,
            cont,
        } => {
            if let MessageSort::IndexBinder(x, _) = sort {
                let mut who = BTreeSet::new();
                who.insert(sender.clone());
                who.extend(receivers.iter().cloned());
                vis.insert(x.clone(), Visibility::Roles(who));
            }
            mc(cont, vis, path)
        }
        GlobalType::Mu(_, body) => mc(body, vis, path),
        GlobalType::TypeVar(_) | GlobalType::End => Verdict::Pass,
        GlobalType::Par(a, b) | GlobalType::Sum(a, b) => {
            let va = mc(a, &mut vis.clone(), path);
            if !va.passed() {
                return va;
            }
            mc(b, &mut vis.clone(), path)
        }
        GlobalType::Match(b, body) => {
            path.push("match".into());
            let fvs = b.dv();
            let v = if fvs.is_empty() {
                mc(body, vis, path)
            } else {
                // Some interaction in the guarded subterm must have both
                // endpoints see every guard variable.
                let mut witness = false;
                for (p, qs) in interactions_in(body) {
                    let mut all_visible = true;
                    for x in &fvs {
                        match vis.get(x) {
                            Some(v) => {
                                if !(v.sees(&p) && qs.iter().all(|q| v.sees(q))) {
                                    all_visible = false;
                                    break;
                                }
                            }
                            None => {
                                all_visible = false;
                                break;
                            }
                        }
                    }
                    if all_visible {
                        witness = true;
                        break;
                    }
                }
                if witness {
                    mc(body, vis, path)
                } else {
                    Verdict::fail(
                        path,
                        format!(
                            "guard `{}` not visible to the endpoints of any guarded interaction",
                            crate::syntax::print_bool(b)
                        ),
                    )
                }
            };
            path.pop();
            v
        }
        GlobalType::Prod(x, _, body) => {
            vis.insert(x.clone(), Visibility::All);
            mc(body, vis, path)
        }
        GlobalType::App(body, _) => mc(body, vis, path),
    }
}

fn interactions_in(g: &GlobalType) -> Vec<(Role, Vec<Role>)> {
    let mut out = Vec::new();
    fn walk(g: &GlobalType, out: &mut Vec<(Role, Vec<Role>)>) {
        match g {
            GlobalType::Interaction {
                sender,
                receivers,
                cont,
                ..
            } => {
                out.push((sender.clone(), receivers.clone()));
                walk(cont, out);
            }
            GlobalType::Mu(_, b) | GlobalType::Match(_, b) | GlobalType::Prod(_, _, b) => {
                walk(b, out)
            }
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

/// Input/output dependency: the target interaction depends on the prefix if
/// its sender is an endpoint of the prefix or is reachable through a chain of
/// interactions starting from the prefix endpoints, scanning `body` in
/// sequence order up to the target.
pub fn io_dependency(
    prefix_endpoints: &BTreeSet<Role>,
    body: &GlobalType,
    target: &GlobalType,
) -> bool {
    let mut tainted = prefix_endpoints.clone();
    io_dep_walk(body, target, &mut tainted).unwrap_or(false)
}

// Some(dependent) once the target is found.
fn io_dep_walk(
    g: &GlobalType,
    target: &GlobalType,
    tainted: &mut BTreeSet<Role>,
) -> Option<bool> {
    if std::ptr::eq(g, target) || g == target {
        if let GlobalType::Interaction { sender, .. } = g {
            return Some(tainted.contains(sender));
        }
        return Some(false);
    }
    match g {
        GlobalType::Interaction {
            sender,
            receivers,
            cont,
            ..
        } => {
            if tainted.contains(sender) {
                tainted.extend(receivers.iter().cloned());
            } else if receivers.iter().any(|r| tainted.contains(r)) {
                // Output dependency: sending to an already-involved party
                // chains through that party.
                tainted.insert(sender.clone());
                tainted.extend(receivers.iter().cloned());
            }
            io_dep_walk(cont, target, tainted)
        }
        GlobalType::Mu(_, b) | GlobalType::Match(_, b) | GlobalType::Prod(_, _, b) => {
            io_dep_walk(b, target, tainted)
        }
        GlobalType::App(b, _) => io_dep_walk(b, target, tainted),
        GlobalType::Par(a, b) | GlobalType::Sum(a, b) => {
            let mut ta = tainted.clone();
            if let Some(r) = io_dep_walk(a, target, &mut ta) {
                *tainted = ta;
                return Some(r);
            }
            io_dep_walk(b, target, tainted)
        }
        GlobalType::TypeVar(_) | GlobalType::End => None,
    }
}

/// The robustness transformation: hoist branch-independent common leading
/// interactions before the sum, then extend every branch prefix's receivers
/// with all participants of the sibling branches.
pub fn robust_transform(g: &GlobalType) -> GlobalType {
    match g {
        GlobalType::Sum(_, _) => transform_sum(g),
        GlobalType::Interaction {
            sender,
            receivers,
            sort,
            cont,
        } => GlobalType::Interaction {
            sender: sender.clone(),
            receivers: receivers.clone(),
            sort: sort.clone(),
            cont: Box::new(robust_transform(cont)),
        },
        GlobalType::Mu(x, b) => GlobalType::Mu(x.clone(), Box::new(robust_transform(b))),
        GlobalType::TypeVar(_) | GlobalType::End => g.clone(),
        GlobalType::Par(a, b) => {
            GlobalType::Par(Box::new(robust_transform(a)), Box::new(robust_transform(b)))
        }
        GlobalType::Match(b, body) => {
            GlobalType::Match(b.clone(), Box::new(robust_transform(body)))
        }
        GlobalType::Prod(x, i, b) => {
            GlobalType::Prod(x.clone(), i.clone(), Box::new(robust_transform(b)))
        }
        GlobalType::App(b, e) => GlobalType::App(Box::new(robust_transform(b)), e.clone()),
    }
}

struct BranchHead {
    sender: Role,
    receivers: Vec<Role>,
    sort: MessageSort,
    body: GlobalType,
}

fn branch_heads(g: &GlobalType) -> Option<Vec<BranchHead>> {
    let mut out = Vec::new();
    for s in flatten_sum(g) {
        match s {
            GlobalType::Interaction {
                sender,
                receivers,
                sort,
                cont,
            } => out.push(BranchHead {
                sender: sender.clone(),
                receivers: receivers.clone(),
                sort: sort.clone(),
                body: (**cont).clone(),
            }),
            _ => return None,
        }
    }
    // All heads must share sender and first receiver.
    let first = &out[0];
    if !out
        .iter()
        .all(|b| b.sender == first.sender && b.receivers.first() == first.receivers.first())
    {
        return None;
    }
    Some(out)
}

fn flatten_sum(g: &GlobalType) -> Vec<&GlobalType> {
    match g {
        GlobalType::Sum(a, b) => {
            let mut v = flatten_sum(a);
            v.extend(flatten_sum(b));
            v
        }
        other => vec![other],
    }
}

fn transform_sum(g: &GlobalType) -> GlobalType {
    let Some(mut heads) = branch_heads(g) else {
        // Not a uniform interaction branching; recurse into summands.
        let parts: Vec<GlobalType> = flatten_sum(g).into_iter().map(robust_transform).collect();
        return rebuild_sum(parts);
    };
    let prefix_sender = heads[0].sender.clone();
    let prefix_receiver = heads[0].receivers[0].clone();
    let mut prefix_endpoints = BTreeSet::new();
    prefix_endpoints.insert(prefix_sender.clone());
    prefix_endpoints.insert(prefix_receiver.clone());

    // Step 1: hoist the maximal common independent leading interactions.
    let mut hoisted: Vec<(Role, Vec<Role>, MessageSort)> = Vec::new();
    loop {
        let first_head = match &heads[0].body {
            GlobalType::Interaction {
                sender,
                receivers,
                sort,
                ..
            } => Some((sender.clone(), receivers.clone(), sort.clone())),
            _ => None,
        };
        let Some((hs, hr, hsort)) = first_head else {
            break;
        };
        let all_match = heads.iter().all(|b| {
            matches!(
                &b.body,
                GlobalType::Interaction { sender, receivers, sort, .. }
                    if *sender == hs && *receivers == hr && *sort == hsort
            )
        });
        if !all_match {
            break;
        }
        // Independence from the branch prefix inside each branch body.
        let independent = heads.iter().all(|b| {
            if let GlobalType::Interaction { .. } = &b.body {
                !io_dependency(&prefix_endpoints, &b.body, &b.body)
            } else {
                false
            }
        });
        if !independent {
            break;
        }
        hoisted.push((hs, hr, hsort));
        for b in &mut heads {
            if let GlobalType::Interaction { cont, .. } = &b.body {
                b.body = (**cont).clone();
            }
        }
    }

    // Step 2: extend receivers with all sibling-branch participants.
    let mut extra: Vec<Role> = Vec::new();
    for b in &heads {
        for r in ordered_pid(&b.body) {
            if r != prefix_sender
                && r != prefix_receiver
                && !extra.contains(&r)
                && !heads[0].receivers.contains(&r)
            {
                extra.push(r);
            }
        }
    }
    let branches: Vec<GlobalType> = heads
        .into_iter()
        .map(|b| {
            let mut receivers = b.receivers.clone();
            for r in &extra {
                if !receivers.contains(r) {
                    receivers.push(r.clone());
                }
            }
            GlobalType::Interaction {
                sender: b.sender,
                receivers,
                sort: b.sort,
                cont: Box::new(robust_transform(&b.body)),
            }
        })
        .collect();
    let mut result = rebuild_sum(branches);
    for (hs, hr, hsort) in hoisted.into_iter().rev() {
        result = GlobalType::Interaction {
            sender: hs,
            receivers: hr,
            sort: hsort,
            cont: Box::new(result),
        };
    }
    result
}

fn rebuild_sum(mut parts: Vec<GlobalType>) -> GlobalType {
    let Some(mut acc) = parts.pop() else {
        return GlobalType::End;
    };
    while let Some(p) = parts.pop() {
        acc = GlobalType::Sum(Box::new(p), Box::new(acc));
    }
    acc
}

/// Participants in first-occurrence order (for deterministic receiver lists).
fn ordered_pid(g: &GlobalType) -> Vec<Role> {
    let mut out = Vec::new();
    fn walk(g: &GlobalType, out: &mut Vec<Role>) {
        match g {
            GlobalType::Interaction {
                sender,
                receivers,
                cont,
                ..
            } => {
                if !out.contains(sender) {
                    out.push(sender.clone());
                }
                for r in receivers {
                    if !out.contains(r) {
                        out.push(r.clone());
                    }
                }
                walk(cont, out);
            }
            GlobalType::Mu(_, b) | GlobalType::Match(_, b) | GlobalType::Prod(_, _, b) => {
                walk(b, out)
            }
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

/// Robustness stated checkably: in every uniform interaction branching, each
/// branch prefix must already carry (or be an endpoint of) every role that
/// occurs in any sibling branch.
pub fn is_robust(g: &GlobalType) -> Verdict {
    match g {
        GlobalType::Sum(_, _) => {
            if let Some(heads) = branch_heads(g) {
                let mut all_roles: BTreeSet<Role> = BTreeSet::new();
                for b in &heads {
                    all_roles.extend(b.body.pid());
                }
                for b in &heads {
                    let mut covered: BTreeSet<Role> = BTreeSet::new();
                    covered.insert(b.sender.clone());
                    covered.extend(b.receivers.iter().cloned());
                    for r in &all_roles {
                        if !covered.contains(r) {
                            return Verdict::Fail {
                                path: "sum".into(),
                                detail: format!(
                                    "participant {} is not notified of the branch selection",
                                    crate::syntax::print_role(r)
                                ),
                            };
                        }
                    }
                }
                for b in &heads {
                    let v = is_robust(&b.body);
                    if !v.passed() {
                        return v;
                    }
                }
                Verdict::Pass
            } else {
                for s in flatten_sum(g) {
                    let v = is_robust(s);
                    if !v.passed() {
                        return v;
                    }
                }
                Verdict::Pass
            }
        }
        GlobalType::Interaction { cont, .. } => is_robust(cont),
        GlobalType::Mu(_, b) | GlobalType::Match(_, b) | GlobalType::Prod(_, _, b) => is_robust(b),
        GlobalType::App(b, _) => is_robust(b),
        GlobalType::Par(a, b) => {
            let va = is_robust(a);
            if !va.passed() {
                return va;
            }
            is_robust(b)
        }
        GlobalType::TypeVar(_) | GlobalType::End => Verdict::Pass,
    }
}

/// Full report: the standalone checks, plus well-assertedness derived from a
/// dry-run projection onto every participant (guard side conditions are
/// enforced there).
pub fn analyze(g: &GlobalType, ctx: &ConstraintContext) -> AnalysisReport {
    let well_asserted = match crate::projection::coherent(g, ctx) {
        Ok(()) => Verdict::Pass,
        Err(f) => Verdict::Fail {
            path: f.path.join("/"),
            detail: f.to_string(),
        },
    };
    AnalysisReport {
        well_sorted: well_sorted(g, ctx),
        well_asserted,
        well_dependent: well_dependent(g, ctx),
        matching_coherent: matching_coherent(g, ctx),
        robust: is_robust(g),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{parse_global, parse_global_with, Definitions};

    fn ctx() -> ConstraintContext {
        ConstraintContext::new()
    }

    #[test]
    fn well_sorted_end() {
        assert!(well_sorted(&GlobalType::End, &ctx()).passed());
    }

    #[test]
    fn well_sorted_rejects_empty_interaction_sort() {
        let g = parse_global("p -> q : <x : {x' : nat | x'+1 <= 0}> . end").unwrap();
        assert!(!well_sorted(&g, &ctx()).passed());
    }

    #[test]
    fn well_sorted_ring_under_n() {
        let g = parse_global(
            "Pi i : {i' : nat | i' < n and 1 <= i'} . W[i] -> W[i+1] : <U> . W[n] -> W[1] : <U> . end",
        )
        .unwrap();
        let nsort = IndexSort::subset(
            "n'",
            IndexSort::Nat,
            Predicate::Leq(ArithExpr::Const(2), ArithExpr::var("n'")),
        );
        let c = ConstraintContext::of(vec![("n".into(), nsort)]);
        assert!(well_sorted(&g, &c).passed());
    }

    #[test]
    fn well_dependent_rejects_non_product_application() {
        let g = parse_global("(p -> q : <U> . end) @ 5").unwrap();
        assert!(!well_dependent(&g, &ctx()).passed());
    }

    #[test]
    fn well_dependent_rejects_bad_argument() {
        let g = parse_global("(Pi x : {x' : nat | 4 <= x'} . p -> q : <U> . end) @ 3").unwrap();
        assert!(!well_dependent(&g, &ctx()).passed());
    }

    #[test]
    fn matching_coherent_rejects_unbound_guard() {
        let g = parse_global("[x < 5] p -> q : <U> . end").unwrap();
        // x > 5 in the source is modelled by any open comparison
        assert!(!matching_coherent(&g, &ctx()).passed());
    }

    #[test]
    fn matching_coherent_accepts_global_product_variable() {
        let g = parse_global("Pi iter : nat . [iter < 5] p -> q : <U> . end").unwrap();
        assert!(matching_coherent(&g, &ctx()).passed());
    }

    #[test]
    fn matching_coherent_true_guard() {
        let g = GlobalType::Match(BoolExpr::True, Box::new(GlobalType::End));
        assert!(matching_coherent(&g, &ctx()).passed());
    }

    #[test]
    fn io_dependency_direct_overlap() {
        let g = parse_global("L -> ES : <Data> . end").unwrap();
        let mut eps = BTreeSet::new();
        eps.insert(Role::prim("P"));
        eps.insert(Role::prim("L"));
        assert!(io_dependency(&eps, &g, &g));
    }

    #[test]
    fn io_dependency_disjoint() {
        let g = parse_global("q -> q2 : <U> . end").unwrap();
        let mut eps = BTreeSet::new();
        eps.insert(Role::prim("p"));
        eps.insert(Role::prim("p2"));
        assert!(!io_dependency(&eps, &g, &g));
    }

    fn network() -> GlobalType {
        parse_global(
            "C -> P : <Data> . (P -> L : <Logs> . L -> ES : <Data> . end \
             + P -> L : <Suspicious> . L -> SS : <Logs> . end \
             + P -> L : <QuotaWarn> . L -> C : <Quota> . end)",
        )
        .unwrap()
    }

    fn network_robust() -> GlobalType {
        parse_global(
            "C -> P : <Data> . (P -> L,ES,SS,C : <Logs> . L -> ES : <Data> . end \
             + P -> L,ES,SS,C : <Suspicious> . L -> SS : <Logs> . end \
             + P -> L,ES,SS,C : <QuotaWarn> . L -> C : <Quota> . end)",
        )
        .unwrap()
    }

    #[test]
    fn robust_transform_network_matches_expected() {
        assert_eq!(robust_transform(&network()), network_robust());
    }

    #[test]
    fn robust_transform_identity_on_branch_free() {
        let g = parse_global("C -> P : <Req> . end").unwrap();
        assert_eq!(robust_transform(&g), g);
    }

    #[test]
    fn robust_transform_idempotent() {
        let g = network();
        let once = robust_transform(&g);
        assert_eq!(robust_transform(&once), once);
    }

    #[test]
    fn robust_transform_preserves_pid() {
        let g = network();
        assert_eq!(robust_transform(&g).pid(), g.pid());
    }

    #[test]
    fn robust_transform_hoists_common_independent_interaction() {
        // Both branches start with q -> q2, independent of p -> p2.
        let g = parse_global(
            "p -> p2 : <A> . q -> q2 : <W> . p -> p2 : <C> . end \
             + p -> p2 : <B> . q -> q2 : <W> . p2 -> q2 : <D> . end",
        )
        .unwrap();
        let t = robust_transform(&g);
        match &t {
            GlobalType::Interaction {
                sender, receivers, ..
            } => {
                assert_eq!(sender, &Role::prim("q"));
                assert_eq!(receivers, &vec![Role::prim("q2")]);
            }
            other => panic!("expected hoisted interaction, got {:?}", other),
        }
        // And the branch prefixes got the sibling participants.
        if let GlobalType::Interaction { cont, .. } = &t {
            if let GlobalType::Sum(l, _) = &**cont {
                if let GlobalType::Interaction { receivers, .. } = &**l {
                    assert!(receivers.contains(&Role::prim("q2")));
                }
            }
        }
        assert_eq!(robust_transform(&t), t);
    }

    #[test]
    fn network_is_not_robust_until_transformed() {
        assert!(!is_robust(&network()).passed());
        assert!(is_robust(&network_robust()).passed());
    }

    #[test]
    fn well_dependent_financial() {
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
        assert!(well_dependent(&g, &ctx()).passed());
        assert!(well_sorted(&g, &ctx()).passed());
        assert!(matching_coherent(&g, &ctx()).passed());
    }
}
