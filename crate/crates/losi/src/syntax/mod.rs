//! Concrete syntax: tokenizer, parsers, deterministic printer, and the
//! desugaring of layered surface forms.

mod desugar;
mod lexer;
mod parser;
mod printer;

pub use desugar::{desugar_process, DesugarError};
pub use lexer::{lex, Pos, SyntaxError};
pub use parser::{
    parse_endpoint, parse_endpoint_with, parse_file, parse_global, parse_global_with,
    parse_process, parse_process_with, Definitions, SourceFile,
};
pub use printer::{
    print_arith, print_bool, print_endpoint, print_global, print_message, print_msgsort,
    print_msgtype, print_pred, print_process, print_role, print_sort,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::*;

    #[test]
    fn parse_inact() {
        assert_eq!(parse_process("0").unwrap(), Process::Inact);
    }

    #[test]
    fn parse_init_shape() {
        let mut defs = Definitions::default();
        defs.globals.insert(
            "GW".into(),
            GlobalType::interaction(
                Role::prim("C"),
                vec![Role::prim("P")],
                MessageSort::Plain(MessageType::opaque("Req")),
                GlobalType::End,
            ),
        );
        let p = parse_process_with("init(a : GW, P). a[C,P]?(x : Req). 0", &defs).unwrap();
        match p {
            Process::Init {
                site, gname, role, body, ..
            } => {
                assert_eq!(site, "a");
                assert_eq!(gname.as_deref(), Some("GW"));
                assert_eq!(role, Role::prim("P"));
                assert!(matches!(*body, Process::Input { .. }));
            }
            other => panic!("expected init, got {:?}", other),
        }
    }

    #[test]
    fn parse_sum_of_matches() {
        // [i=n] P + [i<n] Q
        let p = parse_process("[i=n] 0 + [i<n] 0").unwrap();
        let expected = Process::sum(
            Process::Match(
                BoolExpr::Eq(ArithExpr::var("i"), ArithExpr::var("n")),
                Box::new(Process::Inact),
            ),
            Process::Match(
                BoolExpr::Lt(ArithExpr::var("i"), ArithExpr::var("n")),
                Box::new(Process::Inact),
            ),
        );
        assert_eq!(p, expected);
    }

    #[test]
    fn parse_global_end() {
        assert_eq!(parse_global("end").unwrap(), GlobalType::End);
    }

    #[test]
    fn parse_global_interaction() {
        let g = parse_global("C -> P : <Req> . end").unwrap();
        assert_eq!(
            g,
            GlobalType::interaction(
                Role::prim("C"),
                vec![Role::prim("P")],
                MessageSort::Plain(MessageType::opaque("Req")),
                GlobalType::End
            )
        );
    }

    #[test]
    fn parse_global_product() {
        let g = parse_global(
            "Pi i : {i' : nat | i' < n and i' >= 1} . M[i] -> M[i+1] : <U> . end",
        )
        .unwrap();
        match g {
            GlobalType::Prod(x, IndexSort::Subset { .. }, body) => {
                assert_eq!(x, "i");
                assert!(matches!(*body, GlobalType::Interaction { .. }));
            }
            other => panic!("expected product, got {:?}", other),
        }
    }

    #[test]
    fn print_inact_and_end() {
        assert_eq!(print_process(&Process::Inact), "0");
        assert_eq!(print_endpoint(&EndpointType::End), "end");
    }

    #[test]
    fn roundtrip_processes() {
        let cases = [
            "0",
            "0 | 0",
            "a[C,P]!<req : Req>. 0",
            "a[C,P]?(x : Req). (a[P,W]!<f : Fwd>. 0 + a[P,W]!<aud : Aud>. 0)",
            "rec X = fn i : nat => [i=3] 0 + [i<3] X @ (i+1)",
            "fn n : {n' : nat | 2 <= n'} => 0",
            "a[W[i-1],W[i]]?(z : U). a[W[i],W[i+1]]!<z : U>. 0",
            "new(a : (end)) (0 | a :: [])",
            "a :: [(C,P,req : Req)]",
        ];
        for src in cases {
            let p1 = parse_process(src).unwrap();
            let printed = print_process(&p1);
            let p2 = parse_process(&printed).unwrap_or_else(|e| {
                panic!("reparse of `{}` failed: {}", printed, e)
            });
            assert_eq!(p1, p2, "roundtrip failed for `{}` -> `{}`", src, printed);
        }
    }

    #[test]
    fn roundtrip_globals() {
        let cases = [
            "end",
            "C -> P : <Req> . (P -> W : <Fwd> . end + P -> W : <Aud> . end)",
            "Pi i : {i' : nat | i' < n and 1 <= i'} . W[i] -> W[i+1] : <U> . W[n] -> W[1] : <U> . end",
            "mu X . K -> So : <Signal> . X",
            "Bu -> S : <v0 : {v' : nat | 100 <= v'}> . end",
            "S -> Bu,Ba : <Neg> . end",
            "end || end",
            "[x < 5] end + [not x < 5] end",
            "(Pi x : nat . end) @ 3",
        ];
        for src in cases {
            let g1 = parse_global(src).unwrap();
            let printed = print_global(&g1);
            let g2 = parse_global(&printed)
                .unwrap_or_else(|e| panic!("reparse of `{}` failed: {}", printed, e));
            assert_eq!(g1, g2, "roundtrip failed for `{}` -> `{}`", src, printed);
        }
    }

    #[test]
    fn roundtrip_endpoints() {
        let cases = [
            "end",
            "[C,P]?(Req).([P,W]!<Fwd>.end + [P,W]!<Aud>.[W,P]?(Dtls).[P,W]!<Res>.end)",
            "[W[i-1],W[i]]?(U).[W[i],W[i+1]]!<U>.end",
            "mu X . [K,So]!<Signal>.[So,K]?(Data).X",
            "[P,{L,ES,SS}]!<Logs>.end",
            "Pi iter : nat . [iter < 5] end",
            "(mu X . end) @ 1",
        ];
        for src in cases {
            let t1 = parse_endpoint(src).unwrap();
            let printed = print_endpoint(&t1);
            let t2 = parse_endpoint(&printed)
                .unwrap_or_else(|e| panic!("reparse of `{}` failed: {}", printed, e));
            assert_eq!(t1, t2, "roundtrip failed for `{}` -> `{}`", src, printed);
        }
    }

    #[test]
    fn numerals_map_through_roles_header() {
        let file = parse_file(
            "roles C P W\n\
             global GW = C -> P : <Req> . end\n\
             main = init(a : GW, 2). a[1,2]?(x : Req). 0",
        )
        .unwrap();
        match file.main.unwrap() {
            Process::Init { role, body, .. } => {
                assert_eq!(role, Role::prim("P"));
                match *body {
                    Process::Input {
                        sender, receiver, ..
                    } => {
                        assert_eq!(sender, Role::prim("C"));
                        assert_eq!(receiver, Role::prim("P"));
                    }
                    other => panic!("expected input, got {:?}", other),
                }
            }
            other => panic!("expected init, got {:?}", other),
        }
    }

    #[test]
    fn syntax_error_has_position() {
        let err = parse_process("a[C,P]!").unwrap_err();
        assert!(err.pos.line >= 1);
        assert!(err.msg.contains("expected"));
    }

    #[test]
    fn desugar_if_then_else() {
        let p = parse_process("if x < 5 then 0 else 0").unwrap();
        let d = desugar_process(&p).unwrap();
        let expected = parse_process("[x < 5] 0 + [not x < 5] 0").unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn desugar_primrec() {
        let p = parse_process("primrec(i; X; n; 0; X @ (i+1))").unwrap();
        let d = desugar_process(&p).unwrap();
        let expected = parse_process("rec X = fn i : nat => [i=0] 0 + [i<n] X @ (i+1)").unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn desugar_try_catch() {
        let p = parse_process(
            "try { a[C,P]!<m : Data>. 0 } catch { a[P,C]?(f : Suspicious). 0 }",
        )
        .unwrap();
        let d = desugar_process(&p).unwrap();
        let expected =
            parse_process("a[C,P]!<m : Data>. 0 + a[P,C]?(f : Suspicious). 0").unwrap();
        assert_eq!(d, expected);
    }

    #[test]
    fn desugar_is_idempotent() {
        let srcs = [
            "if x < 5 then 0 else 0",
            "select a[C,P] Fwd . 0",
            "branch a[P,W] { Fwd => 0 | Aud => 0 }",
            "raise a[P,L] Suspicious . 0",
            "def X(i) = [i < 3] X @ (i+1) in X @ 0",
            "assertfn x : nat [x < 9] a[C,P]!<x : nat>. 0",
            "assertrcv a[C,P] x : nat [x < 9] a[P,C]!<x : nat>. 0",
        ];
        for src in srcs {
            let p = parse_process(src).unwrap();
            let once = desugar_process(&p).unwrap();
            let twice = desugar_process(&once).unwrap();
            assert_eq!(once, twice, "desugar not idempotent for `{}`", src);
            assert!(!once.has_sugar());
            assert!(!once.has_runtime_forms());
        }
    }
}
