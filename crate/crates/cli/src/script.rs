use cyclekit::cycle::split_top_level;

use crate::CliError;

/// Relation text as written: `name`, `name(target)` or `name(target)=value`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationText {
    pub kind: String,
    pub target: Option<String>,
    pub value: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Figure { sigma: i8, sigma_cycle: i8 },
    Cycle { label: String, text: String },
    Point { label: String, coords: Vec<String> },
    Relations { label: String, relations: Vec<RelationText> },
    Check { assert: bool, kind: String, a: String, b: String },
    Measure { kind: String, a: String, b: String },
    Print,
    Svg { file: String, params: Vec<(String, String)> },
    Save { file: String },
    Load { file: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Line {
    pub number: usize,
    pub statement: Statement,
}

const RELATION_KINDS: [&str; 7] = ["orthogonal", "tangent", "self_orthogonal", "passes_infinity", "steiner_power", "angle_cos_sq", "only_reals"];
const CHECK_KINDS: [&str; 2] = ["orthogonal", "tangent"];
const MEASURE_KINDS: [&str; 3] = ["steiner_power", "angle_cos_sq", "inner"];

struct Cursor<'a> {
    line: usize,
    text: &'a str,
}

impl<'a> Cursor<'a> {
    fn error(&self, at: &str, message: impl Into<String>) -> CliError {
        // `at` is always a subslice of `text`
        let column = at.as_ptr() as usize - self.text.as_ptr() as usize + 1;
        CliError::Parse { line: self.line, column, message: message.into() }
    }

    fn words(&self) -> Vec<&'a str> {
        self.text.split_whitespace().collect()
    }
}

fn is_label(s: &str) -> bool {
    let mut chars = s.chars();
    chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_') && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn strip_comment(line: &str) -> &str {
    line.split_once('#').map_or(line, |(code, _)| code).trim_end()
}

/// Parses a whole script; nothing runs until every line parses.
pub fn parse_script(text: &str) -> Result<Vec<Line>, CliError> {
    let mut out = Vec::new();
    let mut headers = 0;
    for (i, raw) in text.lines().enumerate() {
        let code = strip_comment(raw);
        if code.trim().is_empty() {
            continue;
        }
        let cur = Cursor { line: i + 1, text: code };
        let statement = parse_line(&cur)?;
        if matches!(statement, Statement::Figure { .. }) {
            headers += 1;
            if headers > 1 {
                return Err(cur.error(code.trim_start(), "a script has exactly one figure header"));
            }
        }
        out.push(Line { number: i + 1, statement });
    }
    Ok(out)
}

fn parse_line(cur: &Cursor) -> Result<Statement, CliError> {
    let words = cur.words();
    let head = words[0];
    match head {
        "figure" => {
            if words.len() != 3 {
                return Err(cur.error(head, "expected: figure <sigma> <sigma_cycle>"));
            }
            let sig = |w: &str| w.parse::<i8>().ok().filter(|s| (-1..=1).contains(s)).ok_or_else(|| cur.error(w, format!("signature must be -1, 0 or 1, got '{w}'")));
            Ok(Statement::Figure { sigma: sig(words[1])?, sigma_cycle: sig(words[2])? })
        }
        "cycle" | "point" => parse_definition(cur, head),
        "assert" => match words.get(1) {
            Some(&"check") => parse_check(cur, &words[1..], true),
            _ => Err(cur.error(head, "only 'check' can be asserted")),
        },
        "check" => parse_check(cur, &words, false),
        "measure" => {
            if words.len() != 4 {
                return Err(cur.error(head, "expected: measure <kind> <label> <label>"));
            }
            if !MEASURE_KINDS.contains(&words[1]) {
                return Err(cur.error(words[1], format!("unknown measure '{}', expected one of {}", words[1], MEASURE_KINDS.join(", "))));
            }
            Ok(Statement::Measure { kind: words[1].into(), a: words[2].into(), b: words[3].into() })
        }
        "print" => {
            if words.len() != 1 {
                return Err(cur.error(words[1], "print takes no arguments"));
            }
            Ok(Statement::Print)
        }
        "svg" => {
            let file = *words.get(1).ok_or_else(|| cur.error(head, "expected: svg <file> [param=value ...]"))?;
            let params = words[2..]
                .iter()
                .map(|w| w.split_once('=').map(|(k, v)| (k.to_string(), v.to_string())).ok_or_else(|| cur.error(w, format!("expected param=value, got '{w}'"))))
                .collect::<Result<_, _>>()?;
            Ok(Statement::Svg { file: file.into(), params })
        }
        "save" | "load" => {
            if words.len() != 2 {
                return Err(cur.error(head, format!("expected: {head} <file>")));
            }
            let file = words[1].to_string();
            Ok(if head == "save" { Statement::Save { file } } else { Statement::Load { file } })
        }
        other => Err(cur.error(other, format!("unknown statement '{other}'"))),
    }
}

fn parse_check(cur: &Cursor, words: &[&str], assert: bool) -> Result<Statement, CliError> {
    if words.len() != 4 {
        return Err(cur.error(words[0], "expected: check <relation> <label> <label>"));
    }
    if !CHECK_KINDS.contains(&words[1]) {
        return Err(cur.error(words[1], format!("unknown relation '{}', expected one of {}", words[1], CHECK_KINDS.join(", "))));
    }
    Ok(Statement::Check { assert, kind: words[1].into(), a: words[2].into(), b: words[3].into() })
}

fn parse_definition(cur: &Cursor, head: &str) -> Result<Statement, CliError> {
    let rest = cur.text.trim_start()[head.len()..].trim_start();
    let split = rest.find(['=', ':']).ok_or_else(|| cur.error(rest, format!("expected '{head} <label> = ...'")))?;
    let label = rest[..split].trim();
    if !is_label(label) {
        return Err(cur.error(rest, format!("invalid label '{label}'")));
    }
    let body = rest[split + 1..].trim();
    match (head, &rest[split..split + 1]) {
        ("cycle", "=") => Ok(Statement::Cycle { label: label.into(), text: body.into() }),
        ("point", "=") => {
            let inner = body
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| cur.error(body, "expected point coordinates (x, y)"))?;
            let coords: Vec<String> = split_top_level(inner).into_iter().map(|s| s.trim().to_string()).collect();
            if coords.len() != 2 || coords.iter().any(String::is_empty) {
                return Err(cur.error(body, "a point needs exactly two coordinates"));
            }
            Ok(Statement::Point { label: label.into(), coords })
        }
        ("cycle", ":") => {
            let relations = split_top_level(body).into_iter().map(|r| parse_relation(cur, r)).collect::<Result<Vec<_>, _>>()?;
            if relations.is_empty() {
                return Err(cur.error(body, "no relations given"));
            }
            Ok(Statement::Relations { label: label.into(), relations })
        }
        _ => Err(cur.error(&rest[split..], format!("points are defined with '=', not '{}'", &rest[split..split + 1]))),
    }
}

fn parse_relation(cur: &Cursor, text: &str) -> Result<RelationText, CliError> {
    let t = text.trim();
    if t.is_empty() {
        return Err(cur.error(text, "empty relation"));
    }
    let name_end = t.find(['(', '=']).unwrap_or(t.len());
    let kind = t[..name_end].trim();
    if !RELATION_KINDS.contains(&kind) {
        return Err(cur.error(t, format!("unknown relation '{kind}'")));
    }
    let mut rest = &t[name_end..];
    let mut target = None;
    if let Some(r) = rest.strip_prefix('(') {
        let close = r.find(')').ok_or_else(|| cur.error(rest, "missing ')'"))?;
        let name = r[..close].trim();
        if !is_label(name) {
            return Err(cur.error(r, format!("invalid target '{name}'")));
        }
        target = Some(name.to_string());
        rest = &r[close + 1..];
    }
    let rest = rest.trim();
    let value = match rest.strip_prefix('=') {
        Some(v) if !v.trim().is_empty() => Some(v.trim().to_string()),
        Some(_) => return Err(cur.error(rest, "missing value after '='")),
        None if rest.is_empty() => None,
        None => return Err(cur.error(rest, format!("unexpected '{rest}'"))),
    };
    let valued = matches!(kind, "steiner_power" | "angle_cos_sq");
    if valued != value.is_some() {
        let message = if valued { format!("{kind} needs a value: {kind}(target)=value") } else { format!("{kind} takes no value") };
        return Err(cur.error(t, message));
    }
    if (matches!(kind, "orthogonal" | "tangent") || valued) && target.is_none() {
        return Err(cur.error(t, format!("{kind} needs a target: {kind}(label)")));
    }
    Ok(RelationText { kind: kind.into(), target, value })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(text: &str) -> Statement {
        parse_script(text).unwrap().remove(0).statement
    }

    fn err(text: &str) -> (usize, usize) {
        match parse_script(text).unwrap_err() {
            CliError::Parse { line, column, .. } => (line, column),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn statements() {
        assert_eq!(one("figure -1 -1"), Statement::Figure { sigma: -1, sigma_cycle: -1 });
        assert_eq!(one("point C = (0, 1/2)"), Statement::Point { label: "C".into(), coords: vec!["0".into(), "1/2".into()] });
        assert_eq!(one("cycle a = (1,[0,0],-1)  # unit"), Statement::Cycle { label: "a".into(), text: "(1,[0,0],-1)".into() });
        assert_eq!(one("assert check tangent a a"), Statement::Check { assert: true, kind: "tangent".into(), a: "a".into(), b: "a".into() });
        assert_eq!(
            one("svg out.svg u_l=1/2"),
            Statement::Svg { file: "out.svg".into(), params: vec![("u_l".into(), "1/2".into())] }
        );
    }

    #[test]
    fn relations() {
        let Statement::Relations { relations, .. } = one("cycle l : tangent(a), passes_infinity, steiner_power(b)=(1+2)/3") else { panic!() };
        assert_eq!(relations.len(), 3);
        assert_eq!(relations[0], RelationText { kind: "tangent".into(), target: Some("a".into()), value: None });
        assert_eq!(relations[2].value.as_deref(), Some("(1+2)/3"));
    }

    #[test]
    fn errors_carry_positions() {
        assert_eq!(err("figure -1 -1\ncycle l : tangnet(a)"), (2, 11));
        assert_eq!(err("  frobnicate"), (1, 3));
        assert_eq!(err("figure -1 -1\nfigure 0 0"), (2, 1));
        assert_eq!(err("cycle l : steiner_power(a)"), (1, 11));
        assert_eq!(err("cycle l : orthogonal"), (1, 11));
        assert_eq!(err("check parallel a b"), (1, 7));
    }
}
