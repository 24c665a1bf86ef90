use crate::fm::guard::{ArithOp, CmpOp, Expr};

use super::lex::{Cursor, ParseError, Tok};

pub fn parse_expr(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut e = and(c)?;
    while c.eat_kw("or") {
        e = Expr::Or(Box::new(e), Box::new(and(c)?));
    }
    Ok(e)
}

fn and(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut e = not(c)?;
    while c.eat_kw("and") {
        e = Expr::And(Box::new(e), Box::new(not(c)?));
    }
    Ok(e)
}

fn not(c: &mut Cursor) -> Result<Expr, ParseError> {
    if c.eat_kw("not") {
        return Ok(Expr::Not(Box::new(not(c)?)));
    }
    cmp(c)
}

fn cmp(c: &mut Cursor) -> Result<Expr, ParseError> {
    let a = sum(c)?;
    let op = match c.peek() {
        Some(Tok::Sym("=")) => CmpOp::Eq,
        Some(Tok::Sym("!=")) => CmpOp::Ne,
        Some(Tok::Sym("<")) => CmpOp::Lt,
        Some(Tok::Sym("<=")) => CmpOp::Le,
        Some(Tok::Sym(">")) => CmpOp::Gt,
        Some(Tok::Sym(">=")) => CmpOp::Ge,
        _ => return Ok(a),
    };
    c.bump();
    Ok(Expr::cmp(op, a, sum(c)?))
}

fn sum(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut e = product(c)?;
    loop {
        let op = if c.eat_sym("+") {
            ArithOp::Add
        } else if c.eat_sym("-") {
            ArithOp::Sub
        } else {
            return Ok(e);
        };
        e = Expr::Arith(op, Box::new(e), Box::new(product(c)?));
    }
}

fn product(c: &mut Cursor) -> Result<Expr, ParseError> {
    let mut e = atom(c)?;
    while c.eat_sym("*") {
        e = Expr::Arith(ArithOp::Mul, Box::new(e), Box::new(atom(c)?));
    }
    Ok(e)
}

fn atom(c: &mut Cursor) -> Result<Expr, ParseError> {
    if c.eat_sym("(") {
        let e = parse_expr(c)?;
        c.expect_sym(")")?;
        return Ok(e);
    }
    match c.peek().cloned() {
        Some(Tok::Int(_)) => Ok(Expr::Int(c.int("a number")?)),
        Some(Tok::Sym("-")) => Ok(Expr::Int(c.int("a number")?)),
        Some(Tok::Str(s)) => {
            c.bump();
            Ok(Expr::Str(s))
        }
        Some(Tok::Ident(name)) => {
            c.bump();
            match name.as_str() {
                "true" => return Ok(Expr::Bool(true)),
                "false" => return Ok(Expr::Bool(false)),
                _ => {}
            }
            if !c.eat_sym("(") {
                return Ok(Expr::Attr(name));
            }
            let arg = c.ident("a machine or clock id")?;
            let e = match name.as_str() {
                "count" => Expr::Count(arg),
                "power" => Expr::Power(arg),
                "active" => Expr::Active(arg),
                "elapsed" => Expr::Elapsed(arg),
                "sum" => {
                    c.expect_sym(",")?;
                    Expr::Sum(arg, c.ident("an attribute name")?)
                }
                other => return Err(c.error(format!("unknown function `{other}`"))),
            };
            c.expect_sym(")")?;
            Ok(e)
        }
        _ => Err(c.error("expected an expression")),
    }
}

#[cfg(test)]
mod tests {
    use super::super::lex::{tokenize, Cursor};
    use super::*;

    fn parse(s: &str) -> Expr {
        let mut c = Cursor::new(tokenize(s, 1).unwrap(), 1, s.len());
        let e = parse_expr(&mut c).unwrap();
        c.end().unwrap();
        e
    }

    #[test]
    fn precedence_and_round_trip() {
        for src in [
            "count(arm_top) = 0",
            "sum(credit, value) - total >= 0 and not active(c1)",
            "a - (b - c) * 2",
            "not (x or y)",
            "power(slot) = \"on\" or elapsed(c2) < -1",
        ] {
            let e = parse(src);
            assert_eq!(parse(&e.to_string()), e, "{src}");
        }
        assert_eq!(parse("1 + 2 * 3").to_string(), "1 + 2 * 3");
    }

    #[test]
    fn unknown_function() {
        let mut c = Cursor::new(tokenize("max(a)", 1).unwrap(), 1, 6);
        assert!(parse_expr(&mut c).is_err());
    }
}
