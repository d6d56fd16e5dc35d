//! Prefix-subtyping (safe permutations of adjacent prefixes), n-time
//! unfolding of recursive end-point types, and the coinductive subtyping
//! relation built on both.

use crate::ast::*;
use crate::constraints::{role_equal, ConstraintContext};
use std::collections::BTreeSet;

/// One level of unfolding: unroll every mu once, distributing over all other
/// constructors; `unfold(t, 0)` is the identity.
pub fn unfold(t: &EndpointType, n: usize) -> EndpointType {
    let mut cur = t.clone();
    for _ in 0..n {
        cur = unfold1(&cur);
    }
    cur
}

fn unfold1(t: &EndpointType) -> EndpointType {
    match t {
        EndpointType::Mu(x, body) => body.subst_typevar(x, t),
        EndpointType::Out {
            sender,
            receivers,
            sort,
            cont,
        } => EndpointType::Out {
            sender: sender.clone(),
            receivers: receivers.clone(),
            sort: sort.clone(),
            cont: Box::new(unfold1(cont)),
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
            cont: Box::new(unfold1(cont)),
        },
        EndpointType::TypeVar(_) | EndpointType::End => t.clone(),
        EndpointType::Sum(a, b) => EndpointType::Sum(Box::new(unfold1(a)), Box::new(unfold1(b))),
        EndpointType::Match(b, body) => EndpointType::Match(b.clone(), Box::new(unfold1(body))),
        EndpointType::Prod(x, i, body) => {
            EndpointType::Prod(x.clone(), i.clone(), Box::new(unfold1(body)))
        }
        EndpointType::App(body, e) => EndpointType::App(Box::new(unfold1(body)), e.clone()),
    }
}

/// A detached prefix: direction, endpoints, and sort.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixHead {
    pub is_output: bool,
    pub sender: Role,
    pub receivers: Vec<Role>,
    pub sort: MessageSort,
}

impl PrefixHead {
    fn of(t: &EndpointType) -> Option<(PrefixHead, EndpointType)> {
        match t {
            EndpointType::Out {
                sender,
                receivers,
                sort,
                cont,
            } => Some((
                PrefixHead {
                    is_output: true,
                    sender: sender.clone(),
                    receivers: receivers.clone(),
                    sort: sort.clone(),
                },
                (**cont).clone(),
            )),
            EndpointType::In {
                sender,
                receiver,
                sort,
                cont,
            } => Some((
                PrefixHead {
                    is_output: false,
                    sender: sender.clone(),
                    receivers: vec![receiver.clone()],
                    sort: sort.clone(),
                },
                (**cont).clone(),
            )),
            _ => None,
        }
    }

    fn attach(&self, cont: EndpointType) -> EndpointType {
        if self.is_output {
            EndpointType::Out {
                sender: self.sender.clone(),
                receivers: self.receivers.clone(),
                sort: self.sort.clone(),
                cont: Box::new(cont),
            }
        } else {
            EndpointType::In {
                sender: self.sender.clone(),
                receiver: self.receivers[0].clone(),
                sort: self.sort.clone(),
                cont: Box::new(cont),
            }
        }
    }

    fn same_head(&self, other: &PrefixHead, ctx: &ConstraintContext) -> bool {
        self.is_output == other.is_output
            && role_equal(ctx, &self.sender, &other.sender)
            && self.receivers.len() == other.receivers.len()
            && self
                .receivers
                .iter()
                .zip(&other.receivers)
                .all(|(a, b)| role_equal(ctx, a, b))
            && sorts_match(&self.sort, &other.sort)
    }

    fn binder(&self) -> Option<&str> {
        match &self.sort {
            MessageSort::IndexBinder(x, _) => Some(x),
            MessageSort::Plain(_) => None,
        }
    }

    fn sort_vars(&self) -> BTreeSet<String> {
        match &self.sort {
            MessageSort::IndexBinder(_, i) => i.fv(),
            MessageSort::Plain(_) => BTreeSet::new(),
        }
    }
}

fn sorts_match(a: &MessageSort, b: &MessageSort) -> bool {
    match (a, b) {
        (MessageSort::Plain(x), MessageSort::Plain(y)) => x == y,
        (MessageSort::IndexBinder(_, i), MessageSort::IndexBinder(_, j)) => i == j,
        _ => false,
    }
}

/// May `moved` jump left over `fixed` (so that `moved` comes first)?
/// Output-over-input and same-direction swaps on different channels are the
/// allowed axioms; input never crosses an output. The crossing also must not
/// move a sort before a binder it depends on.
fn can_cross(moved: &PrefixHead, fixed: &PrefixHead, ctx: &ConstraintContext) -> bool {
    // scope safety: moved's sort cannot mention fixed's binder
    if let Some(x) = fixed.binder() {
        if moved.sort_vars().contains(x) {
            return false;
        }
    }
    match (moved.is_output, fixed.is_output) {
        // output before input: the out-in axiom
        (true, false) => true,
        // output-output: different receivers required
        (true, true) => !moved
            .receivers
            .iter()
            .any(|r| fixed.receivers.iter().any(|s| role_equal(ctx, r, s))),
        // input-input: different senders required
        (false, false) => !role_equal(ctx, &moved.sender, &fixed.sender),
        // input never moves before an output
        (false, true) => false,
    }
}

/// Expose `want` at the front of `t` using only the permutation axioms:
/// returns the residual continuation when `want.T' << t` for some T'.
fn expose(t: &EndpointType, want: &PrefixHead, ctx: &ConstraintContext) -> Option<EndpointType> {
    let (head, cont) = PrefixHead::of(t)?;
    if head.same_head(want, ctx) {
        return Some(cont);
    }
    if !can_cross(want, &head, ctx) {
        return None;
    }
    let rest = expose(&cont, want, ctx)?;
    Some(head.attach(rest))
}

/// The prefix-subtype relation: `t` is a safe permutation of `t2` reachable
/// by moving outputs earlier (never an input before an output), preserving
/// branch compatibility and coherence of dependent sorts.
pub fn prefix_subtype(t: &EndpointType, t2: &EndpointType, ctx: &ConstraintContext) -> bool {
    if t == t2 {
        return true;
    }
    match (t, t2) {
        (EndpointType::End, EndpointType::End) => true,
        (EndpointType::TypeVar(x), EndpointType::TypeVar(y)) => x == y,
        // recursion is compared literally
        (EndpointType::Mu(x, a), EndpointType::Mu(y, b)) => x == y && prefix_subtype(a, b, ctx),
        (EndpointType::Match(ba, a), EndpointType::Match(bb, b)) => {
            ba == bb && prefix_subtype(a, b, ctx)
        }
        (EndpointType::Prod(x, i, a), EndpointType::Prod(y, j, b)) => {
            x == y && i == j && prefix_subtype(a, b, ctx)
        }
        (EndpointType::App(a, e), EndpointType::App(b, e2)) => {
            e == e2 && prefix_subtype(a, b, ctx)
        }
        (EndpointType::Sum(_, _), EndpointType::Sum(_, _)) => {
            let left = t.summands();
            let right = t2.summands();
            if left.len() != right.len() {
                return false;
            }
            if !left
                .iter()
                .zip(&right)
                .all(|(a, b)| prefix_subtype(a, b, ctx))
            {
                return false;
            }
            // permutations must preserve branch compatibility
            let owned: Vec<EndpointType> = left.into_iter().cloned().collect();
            crate::projection::compatible_all(&owned, ctx).is_some()
        }
        (EndpointType::Out { .. } | EndpointType::In { .. }, _) => {
            let (head, cont) = PrefixHead::of(t).expect("prefix");
            match expose(t2, &head, ctx) {
                Some(rest) => prefix_subtype(&cont, &rest, ctx),
                None => false,
            }
        }
        _ => false,
    }
}

/// Outcome of the coinductive subtype check: decided, or out of unfolding
/// budget (distinct from false).
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("subtyping undecided within {budget} unfoldings")]
pub struct BudgetExhausted {
    pub budget: usize,
}

/// Default unfolding budget for a goal pair.
pub fn default_budget(t1: &EndpointType, t2: &EndpointType) -> usize {
    2 * (t1.mu_count() + t2.mu_count()) + 1
}

/// The coinductive subtyping relation `t1 <= t2`, deciding each head of `t1`
/// against an unfolding of `t2` rearranged through the prefix axioms.
pub fn subtype(
    t1: &EndpointType,
    t2: &EndpointType,
    ctx: &ConstraintContext,
    budget: usize,
) -> Result<bool, BudgetExhausted> {
    let mut seen = BTreeSet::new();
    sub(t1, t2, ctx, budget, &mut seen)
}

fn sub(
    t1: &EndpointType,
    t2: &EndpointType,
    ctx: &ConstraintContext,
    budget: usize,
    seen: &mut BTreeSet<(EndpointType, EndpointType)>,
) -> Result<bool, BudgetExhausted> {
    if t1 == t2 {
        return Ok(true);
    }
    let key = (t1.clone(), t2.clone());
    if seen.contains(&key) {
        // coinductive discharge
        return Ok(true);
    }
    seen.insert(key);

    // mu on the left unfolds once
    if let EndpointType::Mu(_, _) = t1 {
        return sub(&unfold(t1, 1), t2, ctx, budget, seen);
    }

    match t1 {
        EndpointType::End => {
            for n in 0..=budget {
                if unfold(t2, n) == EndpointType::End {
                    return Ok(true);
                }
            }
            if t2.mu_count() > 0 {
                Err(BudgetExhausted { budget })
            } else {
                Ok(false)
            }
        }
        EndpointType::TypeVar(x) => Ok(matches!(t2, EndpointType::TypeVar(y) if x == y)),
        EndpointType::Match(b, inner) => {
            with_exposed(t2, budget, |t2u| match t2u {
                EndpointType::Match(b2, inner2) if b == b2 => {
                    sub(inner, inner2, ctx, budget, seen)
                }
                _ => Ok(false),
            })
        }
        EndpointType::Prod(x, i, inner) => with_exposed(t2, budget, |t2u| match t2u {
            EndpointType::Prod(x2, i2, inner2) => {
                if i != i2 {
                    return Ok(false);
                }
                let renamed = if x2 == x {
                    (**inner2).clone()
                } else {
                    inner2.subst_index(x2, &ArithExpr::var(x))
                };
                sub(inner, &renamed, ctx, budget, seen)
            }
            _ => Ok(false),
        }),
        EndpointType::App(inner, e) => with_exposed(t2, budget, |t2u| match t2u {
            EndpointType::App(inner2, e2) if e.same_linear(e2) => {
                sub(inner, inner2, ctx, budget, seen)
            }
            _ => Ok(false),
        }),
        EndpointType::Out { .. } | EndpointType::In { .. } | EndpointType::Sum(_, _) => {
            let branches1 = t1.summands();
            // selection: outputs, k >= l; branching: inputs, k <= l
            let outputs = branches1
                .iter()
                .all(|b| matches!(b, EndpointType::Out { .. }));
            let inputs = branches1
                .iter()
                .all(|b| matches!(b, EndpointType::In { .. }));
            if !outputs && !inputs {
                // guard-style sums compare branchwise
                return with_exposed(t2, budget, |t2u| {
                    let branches2 = t2u.summands();
                    if branches1.len() != branches2.len() {
                        return Ok(false);
                    }
                    for (a, b) in branches1.iter().zip(&branches2) {
                        if !sub(a, b, ctx, budget, seen)? {
                            return Ok(false);
                        }
                    }
                    Ok(true)
                });
            }
            for n in 0..=budget {
                let t2u = unfold(t2, n);
                // A lone prefix first tries direct exposure through the
                // permutation axioms.
                if branches1.len() == 1 {
                    let (head, cont) = PrefixHead::of(branches1[0]).expect("prefix");
                    if let Some(rest) = expose(&t2u, &head, ctx) {
                        return sub(&cont, &rest, ctx, budget, seen);
                    }
                }
                let branches2: Vec<&EndpointType> = t2u.summands();
                let all_prefixed = branches2.iter().all(|b| {
                    matches!(b, EndpointType::Out { .. }) == outputs
                        && matches!(b, EndpointType::In { .. }) == inputs
                });
                if !all_prefixed {
                    if t2.mu_count() == 0 {
                        return Ok(false);
                    }
                    continue;
                }
                let k = branches1.len();
                let l = branches2.len();
                let card_ok = if outputs { k >= l } else { k <= l };
                if !card_ok {
                    return Ok(false);
                }
                // pair by head sort: every branch of the smaller side must
                // find its counterpart
                let (small, large): (&Vec<&EndpointType>, Vec<&EndpointType>) = if outputs {
                    (&branches2, branches1.clone())
                } else {
                    (&branches1, branches2.clone())
                };
                let mut ok = true;
                for s in small.iter() {
                    let (sh, scont) = PrefixHead::of(s).expect("prefix");
                    let mut found = false;
                    for cand in large.iter() {
                        let (ch, ccont) = PrefixHead::of(cand).expect("prefix");
                        if sh.same_head(&ch, ctx) {
                            // orient: t1-branch <= t2-branch
                            let (lhs, rhs) = if outputs {
                                (ccont.clone(), scont.clone())
                            } else {
                                (scont.clone(), ccont.clone())
                            };
                            if sub(&lhs, &rhs, ctx, budget, seen)? {
                                found = true;
                                break;
                            }
                        }
                    }
                    if !found {
                        ok = false;
                        break;
                    }
                }
                if ok {
                    return Ok(true);
                }
                if t2.mu_count() == 0 {
                    return Ok(false);
                }
            }
            Err(BudgetExhausted { budget })
        }
        EndpointType::Mu(_, _) => unreachable!("unfolded above"),
    }
}

fn with_exposed<F>(t2: &EndpointType, budget: usize, mut f: F) -> Result<bool, BudgetExhausted>
where
    F: FnMut(&EndpointType) -> Result<bool, BudgetExhausted>,
{
    for n in 0..=budget {
        let t2u = unfold(t2, n);
        match f(&t2u) {
            Ok(true) => return Ok(true),
            Ok(false) if t2.mu_count() == 0 => return Ok(false),
            Ok(false) => continue,
            Err(e) => return Err(e),
        }
    }
    if t2.mu_count() == 0 {
        Ok(false)
    } else {
        Err(BudgetExhausted { budget })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse_endpoint;

    fn ctx() -> ConstraintContext {
        ConstraintContext::new()
    }

    #[test]
    fn unfold_zero_is_identity() {
        let t = parse_endpoint("mu X . [K,So]!<Signal>.X").unwrap();
        assert_eq!(unfold(&t, 0), t);
    }

    #[test]
    fn unfold_one_unrolls_mu() {
        let t = parse_endpoint("mu X . [K,So]!<Signal>.X").unwrap();
        let expected =
            parse_endpoint("[K,So]!<Signal>.(mu X . [K,So]!<Signal>.X)").unwrap();
        assert_eq!(unfold(&t, 1), expected);
    }

    #[test]
    fn unfold_end_is_end() {
        for k in 0..4 {
            assert_eq!(unfold(&EndpointType::End, k), EndpointType::End);
        }
    }

    #[test]
    fn prefix_subtype_out_in_axiom() {
        // [p,q]!<V>.[q2,p]?(V2).T << [q2,p]?(V2).[p,q]!<V>.T
        let lhs = parse_endpoint("[p,q]!<V>.[q2,p]?(V2).end").unwrap();
        let rhs = parse_endpoint("[q2,p]?(V2).[p,q]!<V>.end").unwrap();
        assert!(prefix_subtype(&lhs, &rhs, &ctx()));
        // and never the other way around
        assert!(!prefix_subtype(&rhs, &lhs, &ctx()));
    }

    #[test]
    fn prefix_subtype_reflexive_on_end() {
        assert!(prefix_subtype(&EndpointType::End, &EndpointType::End, &ctx()));
    }

    #[test]
    fn prefix_subtype_rejects_incoherent_input_swap() {
        // Swapping two inputs would move a dependent sort before its binder.
        let orig = parse_endpoint(
            "[p,q]?(x : nat).[p2,q]?(y : {z : nat | z <= x}).end",
        )
        .unwrap();
        let swapped = parse_endpoint(
            "[p2,q]?(y : {z : nat | z <= x}).[p,q]?(x : nat).end",
        )
        .unwrap();
        assert!(!prefix_subtype(&swapped, &orig, &ctx()));
    }

    #[test]
    fn prefix_subtype_allows_independent_input_swap() {
        let orig = parse_endpoint("[p,q]?(A).[p2,q]?(B).end").unwrap();
        let swapped = parse_endpoint("[p2,q]?(B).[p,q]?(A).end").unwrap();
        assert!(prefix_subtype(&swapped, &orig, &ctx()));
    }

    #[test]
    fn prefix_subtype_output_output_needs_distinct_receivers() {
        let orig = parse_endpoint("[p,q]!<A>.[p,q2]!<B>.end").unwrap();
        let swapped = parse_endpoint("[p,q2]!<B>.[p,q]!<A>.end").unwrap();
        assert!(prefix_subtype(&swapped, &orig, &ctx()));
        let same_receiver = parse_endpoint("[p,q]!<A>.[p,q]!<B>.end").unwrap();
        let same_swapped = parse_endpoint("[p,q]!<B>.[p,q]!<A>.end").unwrap();
        assert!(!prefix_subtype(&same_swapped, &same_receiver, &ctx()));
    }

    #[test]
    fn prefix_subtype_transitive_two_hops() {
        // output hoisted over two inputs
        let orig = parse_endpoint("[a,q]?(A).[b,q]?(B).[q,c]!<C>.end").unwrap();
        let hoisted = parse_endpoint("[q,c]!<C>.[a,q]?(A).[b,q]?(B).end").unwrap();
        assert!(prefix_subtype(&hoisted, &orig, &ctx()));
    }

    fn gd_proj() -> EndpointType {
        parse_endpoint(
            "mu X . [K,So]!<Signal>.[So,K]?(Data).[So,K]?(Data).[K,Si]!<Data>.[K,Si]!<Data>.X",
        )
        .unwrap()
    }

    fn pipelined() -> EndpointType {
        parse_endpoint(
            "mu X . [K,So]!<Signal>.[So,K]?(Data).[K,Si]!<Data>.[So,K]?(Data).[K,Si]!<Data>.X",
        )
        .unwrap()
    }

    #[test]
    fn subtype_reflexive() {
        let t = parse_endpoint("[C,P]?(Req).[P,W]!<Fwd>.end").unwrap();
        assert_eq!(subtype(&t, &t, &ctx(), default_budget(&t, &t)), Ok(true));
    }

    #[test]
    fn subtype_pipelined_double_buffering() {
        let t1 = pipelined();
        let t2 = gd_proj();
        let budget = default_budget(&t1, &t2);
        assert_eq!(subtype(&t1, &t2, &ctx(), budget), Ok(true));
    }

    #[test]
    fn subtype_rejects_input_output_permutation() {
        // the deadlock-enabling permutation is not a subtype
        let t1 = parse_endpoint("[p2,p]?(V2).[p,q]!<V>.end").unwrap();
        let t2 = parse_endpoint("[p,q]!<V>.[p2,p]?(V2).end").unwrap();
        assert_eq!(subtype(&t1, &t2, &ctx(), default_budget(&t1, &t2)), Ok(false));
    }

    #[test]
    fn subtype_selection_cardinality() {
        let two = parse_endpoint("[p,q]!<A>.end + [p,q]!<B>.end").unwrap();
        let one = parse_endpoint("[p,q]!<A>.end").unwrap();
        let budget = default_budget(&two, &one);
        // selection: more branches on the left is allowed
        assert_eq!(subtype(&two, &one, &ctx(), budget), Ok(true));
        // fewer is not
        assert_eq!(subtype(&one, &two, &ctx(), budget), Ok(false));
    }

    #[test]
    fn subtype_branching_cardinality() {
        let one = parse_endpoint("[p,q]?(A).end").unwrap();
        let two = parse_endpoint("[p,q]?(A).end + [p,q]?(B).end").unwrap();
        let budget = default_budget(&one, &two);
        // branching: fewer branches on the left is allowed
        assert_eq!(subtype(&one, &two, &ctx(), budget), Ok(true));
        assert_eq!(subtype(&two, &one, &ctx(), budget), Ok(false));
    }
}
