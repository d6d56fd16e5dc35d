//! Recursive-descent parser for processes, global types, end-point types,
//! and definition files.
//!
//! Precedence: prefixes bind tighter than `+`, which binds tighter than `|`
//! (`||` for global types). `[b]` scopes to the next prefix sequence; `fn`
//! and `rec` scope to the next summation. Application is the explicit
//! operator `@`. Numeric tokens in role position become primitive value
//! roles, optionally renamed through a `roles` header.

use super::lexer::{lex, Pos, Spanned, SyntaxError, Tok};
use crate::ast::*;
use std::collections::BTreeMap;

/// Named definitions accumulated while parsing a file; also serves as the
/// environment for parsing snippets that reference earlier definitions.
#[derive(Debug, Clone, Default)]
pub struct Definitions {
    pub sorts: BTreeMap<String, IndexSort>,
    pub globals: BTreeMap<String, GlobalType>,
    pub processes: BTreeMap<String, Process>,
    pub endpoints: BTreeMap<String, EndpointType>,
    /// Positional mapping for numeral roles: entry k names role k+1.
    pub role_numerals: Vec<String>,
    /// Optional projection context declared in the file.
    pub context: Vec<(String, IndexSort)>,
}

/// A parsed file: definitions plus an optional main process.
#[derive(Debug, Clone, Default)]
pub struct SourceFile {
    pub defs: Definitions,
    pub main: Option<Process>,
}

struct Parser<'d> {
    toks: Vec<Spanned>,
    pos: usize,
    defs: &'d Definitions,
    /// rec-bound process variables in scope
    proc_vars: Vec<String>,
    /// fn/input-bound value variables in scope
    val_vars: Vec<String>,
}

type PResult<T> = Result<T, SyntaxError>;

impl<'d> Parser<'d> {
    fn new(text: &str, defs: &'d Definitions) -> PResult<Parser<'d>> {
        Ok(Parser {
            toks: lex(text)?,
            pos: 0,
            defs,
            proc_vars: Vec::new(),
            val_vars: Vec::new(),
        })
    }

    fn here(&self) -> Pos {
        self.toks
            .get(self.pos)
            .or_else(|| self.toks.last())
            .map(|s| s.pos)
            .unwrap_or(Pos { line: 1, col: 1 })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|s| &s.tok)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, expected: &str) -> PResult<T> {
        let found = match self.peek() {
            Some(t) => format!("`{}`", t),
            None => "end of input".to_string(),
        };
        Err(SyntaxError {
            pos: self.here(),
            msg: format!("expected {}, found {}", expected, found),
        })
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            self.err(&format!("`{}`", tok))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => self.err("identifier"),
        }
    }

    fn is_kw(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(Tok::Ident(s)) if s == kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    // ---- expressions ------------------------------------------------------

    fn arith(&mut self) -> PResult<ArithExpr> {
        let mut e = self.arith_mul()?;
        loop {
            if self.eat(&Tok::Plus) {
                let r = self.arith_mul()?;
                e = ArithExpr::add(e, r);
            } else if self.eat(&Tok::Minus) {
                let r = self.arith_mul()?;
                e = ArithExpr::sub(e, r);
            } else {
                break;
            }
        }
        Ok(e)
    }

    fn arith_mul(&mut self) -> PResult<ArithExpr> {
        // constant * atom
        if let (Some(Tok::Int(c)), Some(Tok::Star)) = (self.peek(), self.peek2()) {
            let c = *c;
            self.pos += 2;
            let e = self.arith_atom()?;
            return Ok(ArithExpr::ScalarMul(c, Box::new(e)));
        }
        self.arith_atom()
    }

    fn arith_atom(&mut self) -> PResult<ArithExpr> {
        match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                Ok(ArithExpr::Const(n))
            }
            Some(Tok::Ident(x)) if x != "true" && x != "false" => {
                self.pos += 1;
                Ok(ArithExpr::var(&x))
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let e = self.arith()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.err("arithmetic expression"),
        }
    }

    fn bool_expr(&mut self) -> PResult<BoolExpr> {
        let mut b = self.bool_and()?;
        while self.eat_kw("or") {
            let r = self.bool_and()?;
            b = BoolExpr::Or(Box::new(b), Box::new(r));
        }
        Ok(b)
    }

    fn bool_and(&mut self) -> PResult<BoolExpr> {
        let mut b = self.bool_not()?;
        while self.eat_kw("and") {
            let r = self.bool_not()?;
            b = BoolExpr::And(Box::new(b), Box::new(r));
        }
        Ok(b)
    }

    fn bool_not(&mut self) -> PResult<BoolExpr> {
        if self.eat_kw("not") {
            let b = self.bool_not()?;
            return Ok(BoolExpr::Not(Box::new(b)));
        }
        self.bool_atom()
    }

    fn bool_atom(&mut self) -> PResult<BoolExpr> {
        if self.eat_kw("true") {
            return Ok(BoolExpr::True);
        }
        if self.eat_kw("false") {
            return Ok(BoolExpr::False);
        }
        if self.peek() == Some(&Tok::LParen) {
            // Could be a parenthesized boolean or an arithmetic grouping.
            let save = self.pos;
            self.pos += 1;
            if let Ok(b) = self.bool_expr() {
                if self.eat(&Tok::RParen) {
                    return Ok(b);
                }
            }
            self.pos = save;
        }
        let a = self.arith()?;
        if self.eat(&Tok::Lt) {
            let b = self.arith()?;
            Ok(BoolExpr::Lt(a, b))
        } else if self.eat(&Tok::Eq) {
            let b = self.arith()?;
            Ok(BoolExpr::Eq(a, b))
        } else {
            self.err("`<` or `=` comparison")
        }
    }

    fn predicate(&mut self) -> PResult<Predicate> {
        let mut p = self.pred_atom()?;
        while self.eat_kw("and") {
            let r = self.pred_atom()?;
            p = Predicate::Conj(Box::new(p), Box::new(r));
        }
        Ok(p)
    }

    fn pred_atom(&mut self) -> PResult<Predicate> {
        let a = self.arith()?;
        if self.eat(&Tok::Leq) {
            let b = self.arith()?;
            Ok(Predicate::Leq(a, b))
        } else if self.eat(&Tok::Geq) {
            let b = self.arith()?;
            Ok(Predicate::Leq(b, a))
        } else if self.eat(&Tok::Lt) {
            // e < e'  is  e+1 <= e'
            let b = self.arith()?;
            Ok(Predicate::Leq(ArithExpr::add(a, ArithExpr::Const(1)), b))
        } else {
            self.err("`<=`, `>=`, or `<`")
        }
    }

    fn index_sort(&mut self) -> PResult<IndexSort> {
        if self.eat_kw("nat") {
            return Ok(IndexSort::Nat);
        }
        if self.eat(&Tok::LBrace) {
            let var = self.ident()?;
            self.expect(Tok::Colon)?;
            let base = self.index_sort()?;
            self.expect(Tok::Bar)?;
            let pred = self.predicate()?;
            self.expect(Tok::RBrace)?;
            return Ok(IndexSort::Subset {
                var,
                base: Box::new(base),
                pred,
            });
        }
        // named sort
        if let Some(Tok::Ident(name)) = self.peek().cloned() {
            if let Some(s) = self.defs.sorts.get(&name) {
                self.pos += 1;
                return Ok(s.clone());
            }
        }
        self.err("index sort (`nat`, `{x : I | ...}`, or a defined sort name)")
    }

    // ---- roles ------------------------------------------------------------

    fn role(&mut self) -> PResult<Role> {
        let base = match self.peek().cloned() {
            Some(Tok::Int(n)) => {
                self.pos += 1;
                let idx = n as usize;
                if idx >= 1 && idx <= self.defs.role_numerals.len() {
                    self.defs.role_numerals[idx - 1].clone()
                } else {
                    n.to_string()
                }
            }
            Some(Tok::Ident(s)) => {
                self.pos += 1;
                s
            }
            _ => return self.err("role"),
        };
        let mut indices = Vec::new();
        while self.peek() == Some(&Tok::LBracket) {
            self.pos += 1;
            indices.push(self.arith()?);
            self.expect(Tok::RBracket)?;
        }
        if indices.is_empty() {
            Ok(Role::Primitive(base))
        } else {
            Ok(Role::Indexed(base, indices))
        }
    }

    // ---- message sorts ----------------------------------------------------

    fn message_type(&mut self) -> PResult<MessageType> {
        if self.eat_kw("bool") {
            return Ok(MessageType::Bool);
        }
        if self.is_kw("nat") {
            self.pos += 1;
            return Ok(MessageType::Nat);
        }
        if self.peek() == Some(&Tok::LBrace) {
            return Ok(MessageType::Index(self.index_sort()?));
        }
        if self.eat_kw("global") {
            self.expect(Tok::LParen)?;
            let g = self.global_par()?;
            self.expect(Tok::RParen)?;
            return Ok(MessageType::Global(Box::new(g)));
        }
        if self.eat_kw("endpoint") {
            self.expect(Tok::LParen)?;
            let t = self.endpoint_sum()?;
            self.expect(Tok::RParen)?;
            return Ok(MessageType::Endpoint(Box::new(t)));
        }
        let name = self.ident()?;
        if let Some(s) = self.defs.sorts.get(&name) {
            return Ok(MessageType::Index(s.clone()));
        }
        if let Some(g) = self.defs.globals.get(&name) {
            return Ok(MessageType::Global(Box::new(g.clone())));
        }
        Ok(MessageType::Opaque(name))
    }

    /// `V ::= S | x : I` — a binder when an identifier is followed by `:`.
    fn message_sort(&mut self) -> PResult<MessageSort> {
        if let (Some(Tok::Ident(x)), Some(Tok::Colon)) = (self.peek(), self.peek2()) {
            let is_keyword_type = matches!(
                x.as_str(),
                "bool" | "nat" | "global" | "endpoint"
            );
            if !is_keyword_type {
                let x = x.clone();
                self.pos += 2;
                let i = self.index_sort()?;
                return Ok(MessageSort::IndexBinder(x, i));
            }
        }
        Ok(MessageSort::Plain(self.message_type()?))
    }

    // ---- global types -----------------------------------------------------

    fn global_par(&mut self) -> PResult<GlobalType> {
        let g = self.global_sum()?;
        if self.eat(&Tok::DoubleBar) {
            let r = self.global_par()?;
            return Ok(GlobalType::Par(Box::new(g), Box::new(r)));
        }
        Ok(g)
    }

    fn global_sum(&mut self) -> PResult<GlobalType> {
        let g = self.global_seq()?;
        if self.eat(&Tok::Plus) {
            let r = self.global_sum()?;
            return Ok(GlobalType::Sum(Box::new(g), Box::new(r)));
        }
        Ok(g)
    }

    fn global_seq(&mut self) -> PResult<GlobalType> {
        if self.eat_kw("end") {
            return self.global_postfix(GlobalType::End);
        }
        if self.eat_kw("mu") {
            let x = self.ident()?;
            self.expect(Tok::Dot)?;
            let body = self.global_seq()?;
            return self.global_postfix(GlobalType::Mu(x, Box::new(body)));
        }
        if self.eat_kw("Pi") {
            let x = self.ident()?;
            self.expect(Tok::Colon)?;
            let i = self.index_sort()?;
            self.expect(Tok::Dot)?;
            let body = self.global_seq()?;
            return self.global_postfix(GlobalType::Prod(x, i, Box::new(body)));
        }
        if self.peek() == Some(&Tok::LBracket) {
            self.pos += 1;
            let b = self.bool_expr()?;
            self.expect(Tok::RBracket)?;
            let body = self.global_seq()?;
            return Ok(GlobalType::Match(b, Box::new(body)));
        }
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let g = self.global_par()?;
            self.expect(Tok::RParen)?;
            return self.global_postfix(g);
        }
        // interaction, type variable, or global reference
        let save = self.pos;
        if let Ok(sender) = self.role() {
            if self.eat(&Tok::Arrow) {
                let mut receivers = vec![self.role()?];
                while self.eat(&Tok::Comma) {
                    receivers.push(self.role()?);
                }
                self.expect(Tok::Colon)?;
                self.expect(Tok::Lt)?;
                let sort = self.message_sort()?;
                self.expect(Tok::Gt)?;
                self.expect(Tok::Dot)?;
                let cont = self.global_seq()?;
                return Ok(GlobalType::Interaction {
                    sender,
                    receivers,
                    sort,
                    cont: Box::new(cont),
                });
            }
            self.pos = save;
        }
        let name = self.ident()?;
        if let Some(g) = self.defs.globals.get(&name) {
            return self.global_postfix(g.clone());
        }
        self.global_postfix(GlobalType::TypeVar(name))
    }

    fn global_postfix(&mut self, mut g: GlobalType) -> PResult<GlobalType> {
        while self.eat(&Tok::At) {
            let e = self.arith_atom()?;
            g = GlobalType::App(Box::new(g), e);
        }
        Ok(g)
    }

    // ---- end-point types --------------------------------------------------

    fn endpoint_sum(&mut self) -> PResult<EndpointType> {
        let t = self.endpoint_seq()?;
        if self.eat(&Tok::Plus) {
            let r = self.endpoint_sum()?;
            return Ok(EndpointType::Sum(Box::new(t), Box::new(r)));
        }
        Ok(t)
    }

    fn endpoint_seq(&mut self) -> PResult<EndpointType> {
        if self.eat_kw("end") {
            return self.endpoint_postfix(EndpointType::End);
        }
        if self.eat_kw("mu") {
            let x = self.ident()?;
            self.expect(Tok::Dot)?;
            let body = self.endpoint_seq()?;
            return self.endpoint_postfix(EndpointType::Mu(x, Box::new(body)));
        }
        if self.eat_kw("Pi") {
            let x = self.ident()?;
            self.expect(Tok::Colon)?;
            let i = self.index_sort()?;
            self.expect(Tok::Dot)?;
            let body = self.endpoint_seq()?;
            return self.endpoint_postfix(EndpointType::Prod(x, i, Box::new(body)));
        }
        if self.peek() == Some(&Tok::LBracket) {
            // Either a guard [b]T or a prefix [p,q]!/?
            let save = self.pos;
            self.pos += 1;
            if let Ok(sender) = self.role() {
                if self.eat(&Tok::Comma) {
                    // prefix
                    let mut receivers = Vec::new();
                    if self.eat(&Tok::LBrace) {
                        receivers.push(self.role()?);
                        while self.eat(&Tok::Comma) {
                            receivers.push(self.role()?);
                        }
                        self.expect(Tok::RBrace)?;
                    } else {
                        receivers.push(self.role()?);
                    }
                    self.expect(Tok::RBracket)?;
                    if self.eat(&Tok::Bang) {
                        self.expect(Tok::Lt)?;
                        let sort = self.message_sort()?;
                        self.expect(Tok::Gt)?;
                        self.expect(Tok::Dot)?;
                        let cont = self.endpoint_seq()?;
                        return Ok(EndpointType::Out {
                            sender,
                            receivers,
                            sort,
                            cont: Box::new(cont),
                        });
                    }
                    self.expect(Tok::Question)?;
                    self.expect(Tok::LParen)?;
                    let sort = self.message_sort()?;
                    self.expect(Tok::RParen)?;
                    self.expect(Tok::Dot)?;
                    let cont = self.endpoint_seq()?;
                    if receivers.len() != 1 {
                        return Err(SyntaxError {
                            pos: self.here(),
                            msg: "input prefix takes exactly one receiver".into(),
                        });
                    }
                    return Ok(EndpointType::In {
                        sender,
                        receiver: receivers.pop().unwrap(),
                        sort,
                        cont: Box::new(cont),
                    });
                }
            }
            self.pos = save;
            self.pos += 1; // re-consume '['
            let b = self.bool_expr()?;
            self.expect(Tok::RBracket)?;
            let body = self.endpoint_seq()?;
            return Ok(EndpointType::Match(b, Box::new(body)));
        }
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let t = self.endpoint_sum()?;
            self.expect(Tok::RParen)?;
            return self.endpoint_postfix(t);
        }
        let name = self.ident()?;
        if let Some(t) = self.defs.endpoints.get(&name) {
            return self.endpoint_postfix(t.clone());
        }
        self.endpoint_postfix(EndpointType::TypeVar(name))
    }

    fn endpoint_postfix(&mut self, mut t: EndpointType) -> PResult<EndpointType> {
        while self.eat(&Tok::At) {
            let e = self.arith_atom()?;
            t = EndpointType::App(Box::new(t), e);
        }
        Ok(t)
    }

    // ---- processes --------------------------------------------------------

    fn process_par(&mut self) -> PResult<Process> {
        let p = self.process_sum()?;
        if self.eat(&Tok::Bar) {
            let r = self.process_par()?;
            return Ok(Process::par(p, r));
        }
        Ok(p)
    }

    fn process_sum(&mut self) -> PResult<Process> {
        let p = self.process_seq()?;
        if self.eat(&Tok::Plus) {
            let r = self.process_sum()?;
            return Ok(Process::sum(p, r));
        }
        Ok(p)
    }

    fn message(&mut self) -> PResult<Message> {
        if self.eat_kw("true") {
            return Ok(Message::Bool(BoolExpr::True));
        }
        if self.eat_kw("false") {
            return Ok(Message::Bool(BoolExpr::False));
        }
        // channel a[r]
        if let (Some(Tok::Ident(a)), Some(Tok::LBracket)) = (self.peek(), self.peek2()) {
            let a = a.clone();
            self.pos += 2;
            let r = self.role()?;
            self.expect(Tok::RBracket)?;
            return Ok(Message::Chan(a, r));
        }
        if let Some(Tok::Ident(x)) = self.peek().cloned() {
            // Lone identifier: a bound variable, a site (when followed by
            // nothing arithmetical), or a data atom.
            if !matches!(self.peek2(), Some(Tok::Plus) | Some(Tok::Minus) | Some(Tok::Star)) {
                self.pos += 1;
                if self.val_vars.contains(&x) {
                    return Ok(Message::Var(x));
                }
                return Ok(Message::Atom(x));
            }
        }
        let e = self.arith()?;
        Ok(Message::Arith(e))
    }

    fn process_seq(&mut self) -> PResult<Process> {
        // init
        if self.is_kw("init") && self.peek2() == Some(&Tok::LParen) {
            self.pos += 2;
            let site = self.ident()?;
            self.expect(Tok::Colon)?;
            let (gname, global) = self.global_ref()?;
            self.expect(Tok::Comma)?;
            let role = self.role()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Dot)?;
            let body = self.process_seq()?;
            return Ok(Process::Init {
                site,
                gname,
                global: Box::new(global),
                role,
                body: Box::new(body),
            });
        }
        if self.eat_kw("rec") {
            let x = self.ident()?;
            self.expect(Tok::Eq)?;
            self.proc_vars.push(x.clone());
            let body = self.process_sum()?;
            self.proc_vars.pop();
            return Ok(Process::Rec(x, Box::new(body)));
        }
        if self.eat_kw("fn") {
            let x = self.ident()?;
            self.expect(Tok::Colon)?;
            let i = self.index_sort()?;
            self.expect(Tok::FatArrow)?;
            self.val_vars.push(x.clone());
            let body = self.process_sum()?;
            self.val_vars.pop();
            return Ok(Process::Abs(x, i, Box::new(body)));
        }
        if self.eat_kw("new") {
            self.expect(Tok::LParen)?;
            let site = self.ident()?;
            self.expect(Tok::Colon)?;
            let (gname, global) = self.global_ref()?;
            self.expect(Tok::RParen)?;
            let body = self.process_atom()?;
            return Ok(Process::New {
                site,
                gname,
                global: Box::new(global),
                body: Box::new(body),
            });
        }
        if let Some(p) = self.try_sugar()? {
            return Ok(p);
        }
        if self.peek() == Some(&Tok::LBracket) {
            self.pos += 1;
            let b = self.bool_expr()?;
            self.expect(Tok::RBracket)?;
            let body = self.process_seq()?;
            return Ok(Process::Match(b, Box::new(body)));
        }
        // channel prefix: ident '[' role ',' role ']' ! / ?
        if let (Some(Tok::Ident(site)), Some(Tok::LBracket)) = (self.peek(), self.peek2()) {
            let site = site.clone();
            self.pos += 2;
            let sender = self.role()?;
            self.expect(Tok::Comma)?;
            let receiver = self.role()?;
            self.expect(Tok::RBracket)?;
            if self.eat(&Tok::Bang) {
                self.expect(Tok::Lt)?;
                let payload = self.message()?;
                self.expect(Tok::Colon)?;
                let sort = if matches!(payload, Message::Chan(..)) {
                    MessageType::Endpoint(Box::new(self.endpoint_seq()?))
                } else {
                    self.message_type()?
                };
                self.expect(Tok::Gt)?;
                self.expect(Tok::Dot)?;
                let body = self.process_seq()?;
                return Ok(Process::Output {
                    site,
                    sender,
                    receiver,
                    payload,
                    sort,
                    body: Box::new(body),
                });
            }
            self.expect(Tok::Question)?;
            self.expect(Tok::LParen)?;
            // binder: variable, or channel b[r] for delegation
            let binder = if let (Some(Tok::Ident(b)), Some(Tok::LBracket)) =
                (self.peek(), self.peek2())
            {
                let b = b.clone();
                self.pos += 2;
                let r = self.role()?;
                self.expect(Tok::RBracket)?;
                InputBinder::Chan(b, r)
            } else {
                InputBinder::Var(self.ident()?)
            };
            self.expect(Tok::Colon)?;
            let sort = match &binder {
                InputBinder::Chan(..) => MessageType::Endpoint(Box::new(self.endpoint_seq()?)),
                InputBinder::Var(_) => self.message_type()?,
            };
            self.expect(Tok::RParen)?;
            self.expect(Tok::Dot)?;
            if let InputBinder::Var(x) = &binder {
                self.val_vars.push(x.clone());
            }
            let body = self.process_seq()?;
            if matches!(binder, InputBinder::Var(_)) {
                self.val_vars.pop();
            }
            return Ok(Process::Input {
                site,
                sender,
                receiver,
                binder,
                sort,
                body: Box::new(body),
            });
        }
        // queue: ident ':' ':' '[' ... ']'
        if let (Some(Tok::Ident(a)), Some(Tok::Colon)) = (self.peek(), self.peek2()) {
            if self.toks.get(self.pos + 2).map(|s| &s.tok) == Some(&Tok::Colon) {
                let a = a.clone();
                self.pos += 3;
                self.expect(Tok::LBracket)?;
                let mut msgs = Vec::new();
                if self.peek() != Some(&Tok::RBracket) {
                    loop {
                        self.expect(Tok::LParen)?;
                        let sender = self.role()?;
                        self.expect(Tok::Comma)?;
                        let receiver = self.role()?;
                        self.expect(Tok::Comma)?;
                        let payload = self.message()?;
                        self.expect(Tok::Colon)?;
                        let sort = if matches!(payload, Message::Chan(..)) {
                            MessageType::Endpoint(Box::new(self.endpoint_seq()?))
                        } else {
                            self.message_type()?
                        };
                        self.expect(Tok::RParen)?;
                        msgs.push(QueueMessage {
                            sender,
                            receiver,
                            payload,
                            sort,
                        });
                        if !self.eat(&Tok::Comma) {
                            break;
                        }
                    }
                }
                self.expect(Tok::RBracket)?;
                return Ok(Process::Queue(a, msgs));
            }
        }
        self.process_atom()
    }

    fn process_atom(&mut self) -> PResult<Process> {
        let p = match self.peek().cloned() {
            Some(Tok::Int(0)) => {
                self.pos += 1;
                Process::Inact
            }
            Some(Tok::LParen) => {
                self.pos += 1;
                let p = self.process_par()?;
                self.expect(Tok::RParen)?;
                p
            }
            Some(Tok::Ident(s)) if s == "new" => {
                return self.process_seq();
            }
            Some(Tok::Ident(name)) => {
                self.pos += 1;
                if self.proc_vars.contains(&name) {
                    Process::ProcVar(name)
                } else if let Some(def) = self.defs.processes.get(&name) {
                    def.clone()
                } else {
                    Process::ProcVar(name)
                }
            }
            _ => return self.err("process"),
        };
        self.process_postfix(p)
    }

    fn process_postfix(&mut self, mut p: Process) -> PResult<Process> {
        while self.eat(&Tok::At) {
            let e = self.arith_atom()?;
            p = Process::App(Box::new(p), e);
        }
        Ok(p)
    }

    fn global_ref(&mut self) -> PResult<(Option<String>, GlobalType)> {
        if self.peek() == Some(&Tok::LParen) {
            self.pos += 1;
            let g = self.global_par()?;
            self.expect(Tok::RParen)?;
            return Ok((None, g));
        }
        let name = self.ident()?;
        match self.defs.globals.get(&name) {
            Some(g) => Ok((Some(name), g.clone())),
            None => Err(SyntaxError {
                pos: self.here(),
                msg: format!("unknown global type `{}`", name),
            }),
        }
    }

    // ---- sugar ------------------------------------------------------------

    fn try_sugar(&mut self) -> PResult<Option<Process>> {
        if self.eat_kw("if") {
            let cond = self.bool_expr()?;
            if !self.eat_kw("then") {
                return self.err("`then`");
            }
            let t = self.process_seq()?;
            if !self.eat_kw("else") {
                return self.err("`else`");
            }
            let e = self.process_seq()?;
            return Ok(Some(Process::Sugar(Box::new(SugarForm::IfThenElse {
                cond,
                then_branch: Box::new(t),
                else_branch: Box::new(e),
            }))));
        }
        if self.eat_kw("select") || self.is_kw("raise") {
            let raising = self.eat_kw("raise");
            let site = self.ident()?;
            self.expect(Tok::LBracket)?;
            let sender = self.role()?;
            self.expect(Tok::Comma)?;
            let receiver = self.role()?;
            self.expect(Tok::RBracket)?;
            let label = self.ident()?;
            self.expect(Tok::Dot)?;
            let body = self.process_seq()?;
            let s = if raising {
                SugarForm::RaiseFail {
                    site,
                    sender,
                    receiver,
                    failure: label,
                    body: Box::new(body),
                }
            } else {
                SugarForm::LabelSelect {
                    site,
                    sender,
                    receiver,
                    label,
                    body: Box::new(body),
                }
            };
            return Ok(Some(Process::Sugar(Box::new(s))));
        }
        if self.eat_kw("branch") {
            let site = self.ident()?;
            self.expect(Tok::LBracket)?;
            let sender = self.role()?;
            self.expect(Tok::Comma)?;
            let receiver = self.role()?;
            self.expect(Tok::RBracket)?;
            self.expect(Tok::LBrace)?;
            let mut arms = Vec::new();
            loop {
                let label = self.ident()?;
                self.expect(Tok::FatArrow)?;
                // the arm binds the lowercased label
                self.val_vars.push(label.to_lowercase());
                let p = self.process_sum()?;
                self.val_vars.pop();
                arms.push((label, p));
                if !self.eat(&Tok::Bar) {
                    break;
                }
            }
            self.expect(Tok::RBrace)?;
            return Ok(Some(Process::Sugar(Box::new(SugarForm::LabelBranch {
                site,
                sender,
                receiver,
                arms,
            }))));
        }
        if self.eat_kw("try") {
            self.expect(Tok::LBrace)?;
            let body = self.process_par()?;
            self.expect(Tok::RBrace)?;
            if !self.eat_kw("catch") {
                return self.err("`catch`");
            }
            self.expect(Tok::LBrace)?;
            let mut handlers = vec![self.process_sum()?];
            while self.eat(&Tok::Bar) {
                handlers.push(self.process_sum()?);
            }
            self.expect(Tok::RBrace)?;
            if handlers.is_empty() {
                return Err(SyntaxError {
                    pos: self.here(),
                    msg: "try/catch needs at least one handler".into(),
                });
            }
            return Ok(Some(Process::Sugar(Box::new(SugarForm::TryCatch {
                body: Box::new(body),
                handlers,
            }))));
        }
        if self.eat_kw("primrec") {
            self.expect(Tok::LParen)?;
            let var = self.ident()?;
            self.expect(Tok::Semi)?;
            let rec_var = self.ident()?;
            self.expect(Tok::Semi)?;
            let bound = self.arith()?;
            self.expect(Tok::Semi)?;
            self.val_vars.push(var.clone());
            self.proc_vars.push(rec_var.clone());
            let base = self.process_par()?;
            self.expect(Tok::Semi)?;
            let step = self.process_par()?;
            self.proc_vars.pop();
            self.val_vars.pop();
            self.expect(Tok::RParen)?;
            return Ok(Some(Process::Sugar(Box::new(SugarForm::PrimRec {
                var,
                rec_var,
                bound,
                base: Box::new(base),
                step: Box::new(step),
            }))));
        }
        if self.eat_kw("assertfn") {
            let var = self.ident()?;
            self.expect(Tok::Colon)?;
            let sort = self.index_sort()?;
            self.expect(Tok::LBracket)?;
            self.val_vars.push(var.clone());
            let assertion = self.bool_expr()?;
            self.expect(Tok::RBracket)?;
            let send = self.process_seq()?;
            self.val_vars.pop();
            return Ok(Some(Process::Sugar(Box::new(SugarForm::AssertedSendFn {
                var,
                sort,
                assertion,
                send: Box::new(send),
            }))));
        }
        if self.eat_kw("assertrcv") {
            let site = self.ident()?;
            self.expect(Tok::LBracket)?;
            let sender = self.role()?;
            self.expect(Tok::Comma)?;
            let receiver = self.role()?;
            self.expect(Tok::RBracket)?;
            let var = self.ident()?;
            self.expect(Tok::Colon)?;
            let sort = self.index_sort()?;
            self.expect(Tok::LBracket)?;
            self.val_vars.push(var.clone());
            let assertion = self.bool_expr()?;
            self.expect(Tok::RBracket)?;
            let send = self.process_seq()?;
            self.val_vars.pop();
            return Ok(Some(Process::Sugar(Box::new(SugarForm::AssertedSendRcv {
                site,
                sender,
                receiver,
                var,
                sort,
                assertion,
                send: Box::new(send),
            }))));
        }
        if self.eat_kw("def") {
            let name = self.ident()?;
            self.expect(Tok::LParen)?;
            let param = self.ident()?;
            self.expect(Tok::RParen)?;
            self.expect(Tok::Eq)?;
            self.proc_vars.push(name.clone());
            self.val_vars.push(param.clone());
            let def_body = self.process_sum()?;
            self.val_vars.pop();
            if !self.eat_kw("in") {
                return self.err("`in`");
            }
            let scope = self.process_sum()?;
            self.proc_vars.pop();
            return Ok(Some(Process::Sugar(Box::new(SugarForm::DefRecursion {
                name,
                param,
                def_body: Box::new(def_body),
                scope: Box::new(scope),
            }))));
        }
        Ok(None)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.toks.len()
    }
}

/// Parse a process from text, resolving names against `defs`.
pub fn parse_process_with(text: &str, defs: &Definitions) -> PResult<Process> {
    let mut p = Parser::new(text, defs)?;
    let proc = p.process_par()?;
    if !p.at_end() {
        return p.err("end of input");
    }
    Ok(proc)
}

/// Parse a process with no ambient definitions.
pub fn parse_process(text: &str) -> PResult<Process> {
    parse_process_with(text, &Definitions::default())
}

/// Parse a global type from text, resolving names against `defs`.
pub fn parse_global_with(text: &str, defs: &Definitions) -> PResult<GlobalType> {
    let mut p = Parser::new(text, defs)?;
    let g = p.global_par()?;
    if !p.at_end() {
        return p.err("end of input");
    }
    Ok(g)
}

pub fn parse_global(text: &str) -> PResult<GlobalType> {
    parse_global_with(text, &Definitions::default())
}

/// Parse an end-point type from text.
pub fn parse_endpoint_with(text: &str, defs: &Definitions) -> PResult<EndpointType> {
    let mut p = Parser::new(text, defs)?;
    let t = p.endpoint_sum()?;
    if !p.at_end() {
        return p.err("end of input");
    }
    Ok(t)
}

pub fn parse_endpoint(text: &str) -> PResult<EndpointType> {
    parse_endpoint_with(text, &Definitions::default())
}

/// Parse a definition file (`.losi` / `.cmst`): `roles`, `sort`, `global`,
/// `process`, `endpoint`, `context`, and `main` items.
pub fn parse_file(text: &str) -> PResult<SourceFile> {
    let mut out = SourceFile::default();
    let toks = lex(text)?;
    // Split at top-level item keywords so each item parses with the defs
    // accumulated so far.
    let mut idx = 0usize;
    while idx < toks.len() {
        let kw = match &toks[idx].tok {
            Tok::Ident(s) => s.clone(),
            _ => {
                return Err(SyntaxError {
                    pos: toks[idx].pos,
                    msg: "expected a definition item (`roles`, `sort`, `global`, `process`, `endpoint`, `context`, or `main`)".into(),
                })
            }
        };
        let item_start = idx;
        idx += 1;
        // find the start of the next item
        let mut end = toks.len();
        let mut scan = idx;
        let mut depth = 0i32;
        while scan < toks.len() {
            match &toks[scan].tok {
                Tok::LParen | Tok::LBracket | Tok::LBrace => depth += 1,
                Tok::RParen | Tok::RBracket | Tok::RBrace => depth -= 1,
                Tok::Ident(s)
                    if depth == 0
                        && scan > item_start + 1
                        && matches!(
                            s.as_str(),
                            "roles" | "sort" | "global" | "process" | "endpoint" | "context"
                                | "main"
                        )
                        && toks
                            .get(scan + 1)
                            .map(|t| {
                                matches!(t.tok, Tok::Ident(_) | Tok::Eq)
                                    || (s == "main" && t.tok == Tok::Eq)
                            })
                            .unwrap_or(false) =>
                {
                    end = scan;
                    break;
                }
                _ => {}
            }
            scan += 1;
        }
        let body_text = span_text(&toks[item_start..end]);
        parse_item(&kw, &body_text, toks[item_start].pos, &mut out)?;
        idx = end;
    }
    Ok(out)
}

fn span_text(toks: &[Spanned]) -> String {
    // Reconstruct source for the item span; tokens are whitespace-insensitive.
    let mut s = String::new();
    for t in toks {
        s.push_str(&format!("{} ", t.tok));
    }
    s
}

fn parse_item(kw: &str, body: &str, pos: Pos, out: &mut SourceFile) -> PResult<()> {
    let dup = |name: &str| SyntaxError {
        pos,
        msg: format!("duplicate definition `{}`", name),
    };
    match kw {
        "roles" => {
            let toks = lex(body)?;
            for t in &toks[1..] {
                match &t.tok {
                    Tok::Ident(s) => out.defs.role_numerals.push(s.clone()),
                    Tok::Comma => {}
                    other => {
                        return Err(SyntaxError {
                            pos: t.pos,
                            msg: format!("expected role name, found `{}`", other),
                        })
                    }
                }
            }
            Ok(())
        }
        "sort" => {
            let (name, rest) = split_def(body, pos)?;
            if out.defs.sorts.contains_key(&name) {
                return Err(dup(&name));
            }
            let mut p = Parser::new(&rest, &out.defs)?;
            let s = p.index_sort()?;
            if !p.at_end() {
                return p.err("end of definition");
            }
            out.defs.sorts.insert(name, s);
            Ok(())
        }
        "global" => {
            let (name, rest) = split_def(body, pos)?;
            if out.defs.globals.contains_key(&name) {
                return Err(dup(&name));
            }
            let g = parse_global_with(&rest, &out.defs)?;
            out.defs.globals.insert(name, g);
            Ok(())
        }
        "process" => {
            let (name, rest) = split_def(body, pos)?;
            if out.defs.processes.contains_key(&name) {
                return Err(dup(&name));
            }
            let p = parse_process_with(&rest, &out.defs)?;
            out.defs.processes.insert(name, p);
            Ok(())
        }
        "endpoint" => {
            let (name, rest) = split_def(body, pos)?;
            if out.defs.endpoints.contains_key(&name) {
                return Err(dup(&name));
            }
            let t = parse_endpoint_with(&rest, &out.defs)?;
            out.defs.endpoints.insert(name, t);
            Ok(())
        }
        "context" => {
            let toks = lex(body)?;
            let src = span_text(&toks[1..]);
            let mut entries = Vec::new();
            {
                let mut p = Parser::new(&src, &out.defs)?;
                loop {
                    let x = p.ident()?;
                    p.expect(Tok::Colon)?;
                    let s = p.index_sort()?;
                    entries.push((x, s));
                    if !p.eat(&Tok::Comma) {
                        break;
                    }
                }
                if !p.at_end() {
                    return p.err("end of context declaration");
                }
            }
            out.defs.context.extend(entries);
            Ok(())
        }
        "main" => {
            if out.main.is_some() {
                return Err(SyntaxError {
                    pos,
                    msg: "duplicate `main`".into(),
                });
            }
            let toks = lex(body)?;
            if toks.len() < 2 || toks[1].tok != Tok::Eq {
                return Err(SyntaxError {
                    pos,
                    msg: "expected `main = <process>`".into(),
                });
            }
            let src = span_text(&toks[2..]);
            out.main = Some(parse_process_with(&src, &out.defs)?);
            Ok(())
        }
        other => Err(SyntaxError {
            pos,
            msg: format!("unknown definition keyword `{}`", other),
        }),
    }
}

fn split_def(body: &str, pos: Pos) -> PResult<(String, String)> {
    let toks = lex(body)?;
    // body = kw NAME '=' rest
    if toks.len() < 3 {
        return Err(SyntaxError {
            pos,
            msg: "expected `NAME = ...`".into(),
        });
    }
    let name = match &toks[1].tok {
        Tok::Ident(s) => s.clone(),
        other => {
            return Err(SyntaxError {
                pos: toks[1].pos,
                msg: format!("expected definition name, found `{}`", other),
            })
        }
    };
    if toks[2].tok != Tok::Eq {
        return Err(SyntaxError {
            pos: toks[2].pos,
            msg: "expected `=`".into(),
        });
    }
    Ok((name, span_text(&toks[3..])))
}
