use super::{Program, ProgramError, Rule, Statement, Template};
use crate::lexer::{SyntaxError, Tok, Tokens};
use crate::tree::Label;
use crate::xexpr::{parse_expr, XExpr};

/// Parses and statically checks a program.
pub fn parse_program(text: &str) -> Result<Program, ProgramError> {
    let mut t = Tokens::new(text)?;
    let mut rules = Vec::new();
    while !t.at_eof() {
        rules.push(rule(&mut t)?);
    }
    let p = Program { rules };
    p.check()?;
    Ok(p)
}

fn paren_expr(t: &mut Tokens) -> Result<XExpr, SyntaxError> {
    t.expect(&Tok::LParen)?;
    if t.eat(&Tok::RParen) {
        return Ok(XExpr::Empty);
    }
    let e = parse_expr(t)?;
    t.expect(&Tok::RParen)?;
    Ok(e)
}

fn optional_mode(t: &mut Tokens) -> Result<Option<crate::Name>, SyntaxError> {
    if t.is_keyword("mode") {
        t.bump();
        return Ok(Some(t.ident("mode name")?.into()));
    }
    Ok(None)
}

fn rule(t: &mut Tokens) -> Result<Rule, SyntaxError> {
    t.expect_keyword("template")?;
    let name = t.ident("rule name")?;
    t.expect_keyword("match")?;
    let matches = paren_expr(t)?;
    let mode = optional_mode(t)?;
    let body = block(t)?;
    Ok(Rule { name: name.into(), matches, mode, body })
}

fn block(t: &mut Tokens) -> Result<Template, SyntaxError> {
    t.expect(&Tok::LBrace)?;
    let mut out = Vec::new();
    while !t.eat(&Tok::RBrace) {
        out.push(statement(t)?);
    }
    Ok(out)
}

fn statement(t: &mut Tokens) -> Result<Statement, SyntaxError> {
    let pos = t.pos();
    let word = match t.peek() {
        Tok::Ident(w) => w.clone(),
        _ => return Err(t.unexpected("statement")),
    };
    t.bump();
    Ok(match word.as_str() {
        "cons" => {
            let lpos = t.pos();
            let text = t.ident("label")?;
            let label = Label::new(&text).map_err(|_| SyntaxError::new(lpos, format!("bad label `{text}`")))?;
            Statement::Cons { label, body: block(t)? }
        }
        "apply" => {
            let expr = paren_expr(t)?;
            Statement::Apply { expr, mode: optional_mode(t)? }
        }
        "call" => Statement::Call(t.ident("rule name")?.into()),
        "foreach" => {
            let expr = paren_expr(t)?;
            Statement::Foreach { expr, body: block(t)? }
        }
        "val" => {
            let var = t.ident("variable name")?.into();
            Statement::Val { var, expr: paren_expr(t)? }
        }
        "tree" => {
            let var = t.ident("variable name")?.into();
            Statement::Tree { var, body: block(t)? }
        }
        "vcopy" => Statement::Vcopy(paren_expr(t)?),
        "tcopy" => Statement::Tcopy(t.ident("tree variable")?.into()),
        "if" => {
            let test = paren_expr(t)?;
            let then = block(t)?;
            t.expect_keyword("else")?;
            Statement::If { test, then, els: block(t)? }
        }
        _ => return Err(SyntaxError::new(pos, format!("unknown statement `{word}`"))),
    })
}
