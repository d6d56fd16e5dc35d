//! Lowering of the layered surface forms into core syntax. Idempotent:
//! core trees pass through unchanged, and the output never contains sugar,
//! queues, or restrictions that were not already present.

use crate::ast::*;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DesugarError {
    #[error("try/catch with no handlers")]
    EmptyTryCatch,
}

/// Rewrite every sugar node in a process into core constructs.
pub fn desugar_process(p: &Process) -> Result<Process, DesugarError> {
    Ok(match p {
        Process::Sugar(s) => desugar_form(s)?,
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
            body: Box::new(desugar_process(body)?),
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
            body: Box::new(desugar_process(body)?),
        },
        Process::Input {
            site,
            sender,
            receiver,
            binder,
            sort,
            body,
        } => Process::Input {
            site: site.clone(),
            sender: sender.clone(),
            receiver: receiver.clone(),
            binder: binder.clone(),
            sort: sort.clone(),
            body: Box::new(desugar_process(body)?),
        },
        Process::Rec(x, q) => Process::Rec(x.clone(), Box::new(desugar_process(q)?)),
        Process::ProcVar(_) | Process::Inact | Process::Queue(..) => p.clone(),
        Process::Par(a, b) => Process::par(desugar_process(a)?, desugar_process(b)?),
        Process::Sum(a, b) => Process::sum(desugar_process(a)?, desugar_process(b)?),
        Process::Match(b, q) => Process::Match(b.clone(), Box::new(desugar_process(q)?)),
        Process::Abs(x, i, q) => {
            Process::Abs(x.clone(), i.clone(), Box::new(desugar_process(q)?))
        }
        Process::App(q, e) => Process::App(Box::new(desugar_process(q)?), e.clone()),
        Process::New {
            site,
            gname,
            global,
            body,
        } => Process::New {
            site: site.clone(),
            gname: gname.clone(),
            global: global.clone(),
            body: Box::new(desugar_process(body)?),
        },
    })
}

fn desugar_form(s: &SugarForm) -> Result<Process, DesugarError> {
    Ok(match s {
        // select u[p,q] L . P  =  u[p,q]!<l : L>. P
        SugarForm::LabelSelect {
            site,
            sender,
            receiver,
            label,
            body,
        } => Process::Output {
            site: site.clone(),
            sender: sender.clone(),
            receiver: receiver.clone(),
            payload: Message::Atom(label.to_lowercase()),
            sort: MessageType::Opaque(label.clone()),
            body: Box::new(desugar_process(body)?),
        },
        // branch u[p,q] { L_i => P_i }  =  sum of typed inputs
        SugarForm::LabelBranch {
            site,
            sender,
            receiver,
            arms,
        } => {
            let mut branches = Vec::new();
            for (label, p) in arms {
                branches.push(Process::Input {
                    site: site.clone(),
                    sender: sender.clone(),
                    receiver: receiver.clone(),
                    binder: InputBinder::Var(label.to_lowercase()),
                    sort: MessageType::Opaque(label.clone()),
                    body: Box::new(desugar_process(p)?),
                });
            }
            sum_all(branches)
        }
        // if b then P else Q  =  [b]P + [not b]Q
        SugarForm::IfThenElse {
            cond,
            then_branch,
            else_branch,
        } => Process::sum(
            Process::Match(cond.clone(), Box::new(desugar_process(then_branch)?)),
            Process::Match(
                BoolExpr::Not(Box::new(cond.clone())),
                Box::new(desugar_process(else_branch)?),
            ),
        ),
        // primrec(i; X; e; P; Q)  =  rec X = fn i:nat => [i=0]P + [i<e]Q
        SugarForm::PrimRec {
            var,
            rec_var,
            bound,
            base,
            step,
        } => Process::Rec(
            rec_var.clone(),
            Box::new(Process::Abs(
                var.clone(),
                IndexSort::Nat,
                Box::new(Process::sum(
                    Process::Match(
                        BoolExpr::Eq(ArithExpr::var(var), ArithExpr::Const(0)),
                        Box::new(desugar_process(base)?),
                    ),
                    Process::Match(
                        BoolExpr::Lt(ArithExpr::var(var), bound.clone()),
                        Box::new(desugar_process(step)?),
                    ),
                )),
            )),
        ),
        // try { P } catch { H_i }  =  P + H_1 + ... + H_n
        SugarForm::TryCatch { body, handlers } => {
            if handlers.is_empty() {
                return Err(DesugarError::EmptyTryCatch);
            }
            let mut acc = desugar_process(body)?;
            for h in handlers {
                acc = Process::sum(acc, desugar_process(h)?);
            }
            acc
        }
        // raise u[p,q] F . P  =  u[p,q]!<f : F>. P
        SugarForm::RaiseFail {
            site,
            sender,
            receiver,
            failure,
            body,
        } => Process::Output {
            site: site.clone(),
            sender: sender.clone(),
            receiver: receiver.clone(),
            payload: Message::Atom(failure.to_lowercase()),
            sort: MessageType::Opaque(failure.clone()),
            body: Box::new(desugar_process(body)?),
        },
        // assertfn x:I [A] P  =  fn x:I => [A] P
        SugarForm::AssertedSendFn {
            var,
            sort,
            assertion,
            send,
        } => Process::Abs(
            var.clone(),
            sort.clone(),
            Box::new(Process::Match(
                assertion.clone(),
                Box::new(desugar_process(send)?),
            )),
        ),
        // assertrcv u[p,q] x:I [A] P  =  u[p,q]?(x:I).[A] P
        SugarForm::AssertedSendRcv {
            site,
            sender,
            receiver,
            var,
            sort,
            assertion,
            send,
        } => Process::Input {
            site: site.clone(),
            sender: sender.clone(),
            receiver: receiver.clone(),
            binder: InputBinder::Var(var.clone()),
            sort: MessageType::Index(sort.clone()),
            body: Box::new(Process::Match(
                assertion.clone(),
                Box::new(desugar_process(send)?),
            )),
        },
        // def X(x) = P in Q  =  Q{rec X = fn x:nat => P / X}
        SugarForm::DefRecursion {
            name,
            param,
            def_body,
            scope,
        } => {
            let def = Process::Rec(
                name.clone(),
                Box::new(Process::Abs(
                    param.clone(),
                    IndexSort::Nat,
                    Box::new(desugar_process(def_body)?),
                )),
            );
            let scope = desugar_process(scope)?;
            let mut gen = NameGen::new();
            subst_procvar(&scope, name, &def, &mut gen)
        }
    })
}

fn sum_all(mut branches: Vec<Process>) -> Process {
    let Some(mut acc) = branches.pop() else {
        return Process::Inact;
    };
    while let Some(b) = branches.pop() {
        acc = Process::sum(b, acc);
    }
    acc
}
