//! Deterministic pretty-printing with minimal parentheses. `parse . print`
//! is the identity on every tree the parser can produce.

use crate::ast::*;

pub fn print_arith(e: &ArithExpr) -> String {
    match e {
        ArithExpr::Var(x) => x.clone(),
        ArithExpr::Const(c) => format!("{}", c),
        ArithExpr::Add(a, b) => match &**b {
            ArithExpr::Const(c) if *c < 0 => format!("{}-{}", print_arith(a), -c),
            ArithExpr::ScalarMul(-1, inner) => {
                format!("{}-{}", print_arith(a), print_arith_atom(inner))
            }
            _ => format!("{}+{}", print_arith(a), print_arith_atom(b)),
        },
        ArithExpr::ScalarMul(c, e2) => format!("{}*{}", c, print_arith_atom(e2)),
    }
}

fn print_arith_atom(e: &ArithExpr) -> String {
    match e {
        ArithExpr::Add(..) => format!("({})", print_arith(e)),
        _ => print_arith(e),
    }
}

pub fn print_bool(b: &BoolExpr) -> String {
    print_bool_prec(b, 0)
}

// precedence: or(0) < and(1) < not(2) < atoms
fn print_bool_prec(b: &BoolExpr, prec: u8) -> String {
    let (s, my) = match b {
        BoolExpr::True => ("true".to_string(), 3),
        BoolExpr::False => ("false".to_string(), 3),
        BoolExpr::Or(a, c) => (
            format!("{} or {}", print_bool_prec(a, 0), print_bool_prec(c, 1)),
            0,
        ),
        BoolExpr::And(a, c) => (
            format!("{} and {}", print_bool_prec(a, 1), print_bool_prec(c, 2)),
            1,
        ),
        BoolExpr::Not(a) => (format!("not {}", print_bool_prec(a, 2)), 2),
        BoolExpr::Lt(a, c) => (format!("{} < {}", print_arith(a), print_arith(c)), 3),
        BoolExpr::Eq(a, c) => (format!("{} = {}", print_arith(a), print_arith(c)), 3),
    };
    if my < prec {
        format!("({})", s)
    } else {
        s
    }
}

pub fn print_pred(p: &Predicate) -> String {
    match p {
        Predicate::Leq(a, b) => format!("{} <= {}", print_arith(a), print_arith(b)),
        Predicate::Conj(a, b) => format!("{} and {}", print_pred(a), print_pred(b)),
    }
}

pub fn print_sort(i: &IndexSort) -> String {
    match i {
        IndexSort::Nat => "nat".to_string(),
        IndexSort::Subset { var, base, pred } => {
            format!("{{{} : {} | {}}}", var, print_sort(base), print_pred(pred))
        }
    }
}

pub fn print_role(r: &Role) -> String {
    match r {
        Role::Primitive(n) => n.clone(),
        Role::Indexed(n, idx) => {
            let mut s = n.clone();
            for e in idx {
                s.push('[');
                s.push_str(&print_arith(e));
                s.push(']');
            }
            s
        }
    }
}

fn print_receivers(rs: &[Role]) -> String {
    rs.iter().map(print_role).collect::<Vec<_>>().join(",")
}

fn print_receiver_slot(rs: &[Role]) -> String {
    if rs.len() == 1 {
        print_role(&rs[0])
    } else {
        format!("{{{}}}", print_receivers(rs))
    }
}

pub fn print_msgtype(t: &MessageType) -> String {
    match t {
        MessageType::Bool => "bool".to_string(),
        MessageType::Nat => "nat".to_string(),
        MessageType::Global(g) => format!("global({})", print_global(g)),
        MessageType::Index(i) => print_sort(i),
        MessageType::Endpoint(t) => format!("endpoint({})", print_endpoint(t)),
        MessageType::Opaque(l) => l.clone(),
    }
}

pub fn print_msgsort(v: &MessageSort) -> String {
    match v {
        MessageSort::Plain(t) => print_msgtype(t),
        MessageSort::IndexBinder(x, i) => format!("{} : {}", x, print_sort(i)),
    }
}

pub fn print_message(m: &Message) -> String {
    match m {
        Message::Arith(e) => print_arith(e),
        Message::Bool(b) => print_bool(b),
        Message::Site(a) => a.clone(),
        Message::Chan(a, r) => format!("{}[{}]", a, print_role(r)),
        Message::Atom(s) | Message::Var(s) => s.clone(),
    }
}

// Global types. precedence: par(0) < sum(1) < prefix/app(2)
pub fn print_global(g: &GlobalType) -> String {
    print_global_prec(g, 0)
}

fn print_global_prec(g: &GlobalType, prec: u8) -> String {
    let (s, my) = match g {
        GlobalType::Par(a, b) => (
            format!(
                "{} || {}",
                print_global_prec(a, 1),
                print_global_prec(b, 0)
            ),
            0,
        ),
        GlobalType::Sum(a, b) => (
            format!("{} + {}", print_global_prec(a, 2), print_global_prec(b, 1)),
            1,
        ),
        GlobalType::Interaction {
            sender,
            receivers,
            sort,
            cont,
        } => (
            format!(
                "{} -> {} : <{}> . {}",
                print_role(sender),
                print_receivers(receivers),
                print_msgsort(sort),
                print_global_prec(cont, 2)
            ),
            2,
        ),
        GlobalType::Mu(x, body) => (format!("mu {} . {}", x, print_global_prec(body, 2)), 2),
        GlobalType::TypeVar(x) => (x.clone(), 3),
        GlobalType::End => ("end".to_string(), 3),
        GlobalType::Match(b, body) => (
            format!("[{}] {}", print_bool(b), print_global_prec(body, 2)),
            2,
        ),
        GlobalType::Prod(x, i, body) => (
            format!("Pi {} : {} . {}", x, print_sort(i), print_global_prec(body, 2)),
            2,
        ),
        GlobalType::App(g2, e) => (
            format!("{} @ {}", print_global_prec(g2, 3), print_arith_atom(e)),
            2,
        ),
    };
    if my < prec {
        format!("({})", s)
    } else {
        s
    }
}

// End-point types, same precedence scheme as globals.
pub fn print_endpoint(t: &EndpointType) -> String {
    print_endpoint_prec(t, 0)
}

fn print_endpoint_prec(t: &EndpointType, prec: u8) -> String {
    let (s, my) = match t {
        EndpointType::Sum(a, b) => (
            format!(
                "{} + {}",
                print_endpoint_prec(a, 2),
                print_endpoint_prec(b, 1)
            ),
            1,
        ),
        EndpointType::Out {
            sender,
            receivers,
            sort,
            cont,
        } => (
            format!(
                "[{},{}]!<{}>.{}",
                print_role(sender),
                print_receiver_slot(receivers),
                print_msgsort(sort),
                print_endpoint_prec(cont, 2)
            ),
            2,
        ),
        EndpointType::In {
            sender,
            receiver,
            sort,
            cont,
        } => (
            format!(
                "[{},{}]?({}).{}",
                print_role(sender),
                print_role(receiver),
                print_msgsort(sort),
                print_endpoint_prec(cont, 2)
            ),
            2,
        ),
        EndpointType::Mu(x, body) => (format!("mu {} . {}", x, print_endpoint_prec(body, 2)), 2),
        EndpointType::TypeVar(x) => (x.clone(), 3),
        EndpointType::End => ("end".to_string(), 3),
        EndpointType::Match(b, body) => (
            format!("[{}] {}", print_bool(b), print_endpoint_prec(body, 2)),
            2,
        ),
        EndpointType::Prod(x, i, body) => (
            format!(
                "Pi {} : {} . {}",
                x,
                print_sort(i),
                print_endpoint_prec(body, 2)
            ),
            2,
        ),
        EndpointType::App(t2, e) => (
            format!("{} @ {}", print_endpoint_prec(t2, 3), print_arith_atom(e)),
            2,
        ),
    };
    if my < prec {
        format!("({})", s)
    } else {
        s
    }
}

// Processes. precedence: par(0) < sum(1) < prefix/app(2)
pub fn print_process(p: &Process) -> String {
    print_process_prec(p, 0)
}

fn print_process_prec(p: &Process, prec: u8) -> String {
    let (s, my) = match p {
        Process::Par(a, b) => (
            format!(
                "{} | {}",
                print_process_prec(a, 1),
                print_process_prec(b, 0)
            ),
            0,
        ),
        Process::Sum(a, b) => (
            format!(
                "{} + {}",
                print_process_prec(a, 2),
                print_process_prec(b, 1)
            ),
            1,
        ),
        Process::Init {
            site,
            gname,
            global,
            role,
            body,
        } => {
            let gtxt = match gname {
                Some(n) => n.clone(),
                None => format!("({})", print_global(global)),
            };
            (
                format!(
                    "init({} : {}, {}). {}",
                    site,
                    gtxt,
                    print_role(role),
                    print_process_prec(body, 2)
                ),
                2,
            )
        }
        Process::Output {
            site,
            sender,
            receiver,
            payload,
            sort,
            body,
        } => (
            format!(
                "{}[{},{}]!<{} : {}>. {}",
                site,
                print_role(sender),
                print_role(receiver),
                print_message(payload),
                print_msgtype(sort),
                print_process_prec(body, 2)
            ),
            2,
        ),
        Process::Input {
            site,
            sender,
            receiver,
            binder,
            sort,
            body,
        } => {
            let b = match binder {
                InputBinder::Var(x) => x.clone(),
                InputBinder::Chan(a, r) => format!("{}[{}]", a, print_role(r)),
            };
            (
                format!(
                    "{}[{},{}]?({} : {}). {}",
                    site,
                    print_role(sender),
                    print_role(receiver),
                    b,
                    print_msgtype(sort),
                    print_process_prec(body, 2)
                ),
                2,
            )
        }
        Process::Rec(x, body) => (format!("rec {} = {}", x, print_process_prec(body, 2)), 2),
        Process::ProcVar(x) => (x.clone(), 3),
        Process::Inact => ("0".to_string(), 3),
        Process::Match(b, body) => (
            format!("[{}] {}", print_bool(b), print_process_prec(body, 2)),
            2,
        ),
        Process::Abs(x, i, body) => (
            format!(
                "fn {} : {} => {}",
                x,
                print_sort(i),
                print_process_prec(body, 2)
            ),
            2,
        ),
        Process::App(q, e) => (
            format!("{} @ {}", print_process_prec(q, 3), print_arith_atom(e)),
            2,
        ),
        Process::New {
            site,
            gname,
            global,
            body,
        } => {
            let gtxt = match gname {
                Some(n) => n.clone(),
                None => format!("({})", print_global(global)),
            };
            (
                format!("new({} : {}) {}", site, gtxt, print_process_prec(body, 3)),
                2,
            )
        }
        Process::Queue(a, msgs) => {
            let inner = msgs
                .iter()
                .map(|m| {
                    format!(
                        "({},{},{} : {})",
                        print_role(&m.sender),
                        print_role(&m.receiver),
                        print_message(&m.payload),
                        print_msgtype(&m.sort)
                    )
                })
                .collect::<Vec<_>>()
                .join(", ");
            (format!("{} :: [{}]", a, inner), 2)
        }
        Process::Sugar(s) => (print_sugar(s), 2),
    };
    if my < prec {
        format!("({})", s)
    } else {
        s
    }
}

fn print_sugar(s: &SugarForm) -> String {
    match s {
        SugarForm::LabelSelect {
            site,
            sender,
            receiver,
            label,
            body,
        } => format!(
            "select {}[{},{}] {} . {}",
            site,
            print_role(sender),
            print_role(receiver),
            label,
            print_process_prec(body, 2)
        ),
        SugarForm::LabelBranch {
            site,
            sender,
            receiver,
            arms,
        } => {
            let inner = arms
                .iter()
                .map(|(l, p)| format!("{} => {}", l, print_process(p)))
                .collect::<Vec<_>>()
                .join(" | ");
            format!(
                "branch {}[{},{}] {{ {} }}",
                site,
                print_role(sender),
                print_role(receiver),
                inner
            )
        }
        SugarForm::IfThenElse {
            cond,
            then_branch,
            else_branch,
        } => format!(
            "if {} then {} else {}",
            print_bool(cond),
            print_process_prec(then_branch, 2),
            print_process_prec(else_branch, 2)
        ),
        SugarForm::PrimRec {
            var,
            rec_var,
            bound,
            base,
            step,
        } => format!(
            "primrec({}; {}; {}; {}; {})",
            var,
            rec_var,
            print_arith(bound),
            print_process(base),
            print_process(step)
        ),
        SugarForm::TryCatch { body, handlers } => {
            let hs = handlers
                .iter()
                .map(print_process)
                .collect::<Vec<_>>()
                .join(" | ");
            format!("try {{ {} }} catch {{ {} }}", print_process(body), hs)
        }
        SugarForm::RaiseFail {
            site,
            sender,
            receiver,
            failure,
            body,
        } => format!(
            "raise {}[{},{}] {} . {}",
            site,
            print_role(sender),
            print_role(receiver),
            failure,
            print_process_prec(body, 2)
        ),
        SugarForm::AssertedSendFn {
            var,
            sort,
            assertion,
            send,
        } => format!(
            "assertfn {} : {} [{}] {}",
            var,
            print_sort(sort),
            print_bool(assertion),
            print_process_prec(send, 2)
        ),
        SugarForm::AssertedSendRcv {
            site,
            sender,
            receiver,
            var,
            sort,
            assertion,
            send,
        } => format!(
            "assertrcv {}[{},{}] {} : {} [{}] {}",
            site,
            print_role(sender),
            print_role(receiver),
            var,
            print_sort(sort),
            print_bool(assertion),
            print_process_prec(send, 2)
        ),
        SugarForm::DefRecursion {
            name,
            param,
            def_body,
            scope,
        } => format!(
            "def {}({}) = {} in {}",
            name,
            param,
            print_process(def_body),
            print_process_prec(scope, 2)
        ),
    }
}
