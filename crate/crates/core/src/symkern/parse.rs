//! Reader for the textual expression syntax produced by `Display`.

use super::expr::{Expr, Tower};
use super::poly::Param;
use super::rational::parse_rational;
use super::SymError;

/// Parses an expression, adjoining any `sqrt(...)` it contains to `tower`.
pub fn parse_expr(text: &str, tower: &mut Tower) -> Result<Expr, SymError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0, tower };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a, 't> {
    src: &'a [u8],
    pos: usize,
    tower: &'t mut Tower,
}

impl Parser<'_, '_> {
    fn error(&self, msg: &str) -> SymError {
        SymError::Parse { offset: self.pos, message: msg.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn sum(&mut self) -> Result<Expr, SymError> {
        let mut acc = self.product()?;
        loop {
            if self.eat(b'+') {
                acc = &acc + &self.product()?;
            } else if self.eat(b'-') {
                acc = &acc - &self.product()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn product(&mut self) -> Result<Expr, SymError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                acc = &acc * &self.unary()?;
            } else if self.eat(b'/') {
                let at = self.pos;
                let d = self.unary()?;
                acc = acc.div(&d, &self.tower.probe).map_err(|e| SymError::Parse {
                    offset: at,
                    message: format!("cannot divide: {e}"),
                })?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, SymError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        let base = self.primary()?;
        if self.eat(b'^') {
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
            let e: u32 = digits.parse().map_err(|_| self.error("expected exponent"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, SymError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                if !self.eat(b')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_digit() || self.src[self.pos] == b'.') {
                    self.pos += 1;
                }
                let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                parse_rational(s).map(Expr::from_rational).ok_or_else(|| SymError::Parse {
                    offset: start,
                    message: format!("bad number '{s}'"),
                })
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("");
                if name == "sqrt" {
                    if !self.eat(b'(') {
                        return Err(self.error("expected '(' after sqrt"));
                    }
                    let r = self.sum()?;
                    if !self.eat(b')') {
                        return Err(self.error("expected ')'"));
                    }
                    if self.tower.probe.zero_test(&r).is_zero() {
                        return Ok(Expr::zero());
                    }
                    return Ok(self.tower.adjoin_sqrt(&r).expr);
                }
                Ok(Expr::param(&Param::new(name)))
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(src: &str) {
        let mut t = Tower::new();
        let e = parse_expr(src, &mut t).unwrap();
        let again = parse_expr(&e.to_string(), &mut t).unwrap();
        assert_eq!(e, again, "{src} -> {e}");
    }

    #[test]
    fn parses_and_prints() {
        let mut t = Tower::new();
        let e = parse_expr("(1 + sqrt(2)) * (1 - sqrt(2))", &mut t).unwrap();
        assert_eq!(e.to_string(), "-1");
        let e = parse_expr("sqrt(8)", &mut t).unwrap();
        assert_eq!(e.to_string(), "2*sqrt(2)");
        let e = parse_expr("u^2/2 - 3/4", &mut t).unwrap();
        assert_eq!(e.to_string(), "1/2*u^2 - 3/4");
    }

    #[test]
    fn text_round_trips() {
        for src in [
            "0",
            "-7/3",
            "0.25 + u",
            "sqrt(u^2 + 2*u) - 1",
            "(u + 1)*sqrt(3) + 2/(u - 1)",
            "sqrt(1 + sqrt(2)) * sqrt(3) / (2*u)",
            "-sqrt(5)/u",
        ] {
            round_trip(src);
        }
    }

    #[test]
    fn reports_errors_with_offset() {
        let mut t = Tower::new();
        match parse_expr("1 + * 2", &mut t) {
            Err(SymError::Parse { offset, .. }) => assert_eq!(offset, 4),
            other => panic!("{other:?}"),
        }
        assert!(parse_expr("1/0", &mut t).is_err());
        assert!(parse_expr("sqrt(2", &mut t).is_err());
    }
}
