use super::XExpr;
use crate::lexer::{SyntaxError, Tok, Tokens};
use crate::tree::Label;

/// expr := setunion ('=' setunion)?
pub fn parse_expr(t: &mut Tokens) -> Result<XExpr, SyntaxError> {
    let lhs = union(t)?;
    if t.eat(&Tok::Eq) {
        let rhs = union(t)?;
        return Ok(XExpr::eq(lhs, rhs));
    }
    Ok(lhs)
}

fn union(t: &mut Tokens) -> Result<XExpr, SyntaxError> {
    let mut e = setop(t)?;
    while t.eat(&Tok::Pipe) {
        e = XExpr::union(e, setop(t)?);
    }
    Ok(e)
}

fn setop(t: &mut Tokens) -> Result<XExpr, SyntaxError> {
    let mut e = primary(t)?;
    loop {
        if t.is_keyword("intersect") {
            t.bump();
            e = XExpr::intersect(e, primary(t)?);
        } else if t.is_keyword("except") {
            t.bump();
            e = XExpr::except(e, primary(t)?);
        } else {
            return Ok(e);
        }
    }
}

fn first_predicate(t: &mut Tokens) -> Result<(), SyntaxError> {
    t.expect(&Tok::LBrack)?;
    t.expect(&Tok::Int(1))?;
    t.expect(&Tok::RBrack)
}

fn primary(t: &mut Tokens) -> Result<XExpr, SyntaxError> {
    let pos = t.pos();
    match t.bump() {
        Tok::LParen => {
            if t.eat(&Tok::RParen) {
                return Ok(XExpr::Empty);
            }
            let e = parse_expr(t)?;
            t.expect(&Tok::RParen)?;
            Ok(e)
        }
        Tok::Slash => {
            t.expect(&Tok::Star)?;
            Ok(XExpr::Root)
        }
        Tok::DSlash => {
            t.expect(&Tok::Star)?;
            Ok(XExpr::AllNodes)
        }
        Tok::Dot => Ok(XExpr::ContextItem),
        Tok::Int(1) => Ok(XExpr::One),
        Tok::Dollar => {
            let name = t.ident("variable name")?;
            match t.peek() {
                Tok::Slash => {
                    t.bump();
                    t.expect(&Tok::Star)?;
                    Ok(XExpr::TreeRoot(name.into()))
                }
                Tok::Plus => {
                    t.bump();
                    t.expect(&Tok::Int(1))?;
                    Ok(XExpr::Inc(name.into()))
                }
                Tok::Minus => {
                    t.bump();
                    t.expect(&Tok::Int(1))?;
                    Ok(XExpr::Dec(name.into()))
                }
                _ => Ok(XExpr::Var(name.into())),
            }
        }
        Tok::Ident(word) => match word.as_str() {
            "child" => {
                t.expect(&Tok::ColonColon)?;
                t.expect(&Tok::Star)?;
                if matches!(t.peek(), Tok::LBrack) {
                    first_predicate(t)?;
                    Ok(XExpr::FirstChild)
                } else {
                    Ok(XExpr::Child)
                }
            }
            "following-sibling" | "preceding-sibling" => {
                t.expect(&Tok::ColonColon)?;
                t.expect(&Tok::Star)?;
                first_predicate(t)?;
                Ok(if word.starts_with('f') { XExpr::NextSibling } else { XExpr::PrevSibling })
            }
            "position" => {
                t.expect(&Tok::LParen)?;
                t.expect(&Tok::RParen)?;
                Ok(XExpr::Position)
            }
            "name" => {
                t.expect(&Tok::LParen)?;
                t.expect(&Tok::RParen)?;
                t.expect(&Tok::Eq)?;
                let p = t.pos();
                match t.bump() {
                    Tok::Str(s) => Label::new(&s)
                        .map(XExpr::NameIs)
                        .map_err(|_| SyntaxError::new(p, format!("`{s}` is not a valid label"))),
                    other => Err(SyntaxError::new(p, format!("expected quoted label, found {other}"))),
                }
            }
            _ => Err(SyntaxError::new(pos, format!("unknown expression `{word}`"))),
        },
        other => Err(SyntaxError::new(pos, format!("expected expression, found {other}"))),
    }
}
