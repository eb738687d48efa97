//! Line-oriented grammar definition format.
//!
//! ```text
//! # comment
//! languages: tptp, eng
//! defaults: distinct
//! R(fact(person,property); '1[?←0]'; '0 is 1')
//! R(adj; '~rich'; 'not rich'; weight=0.2)
//! R(premise(rule×16,fact×8); join('&\n', '(', ')'); join('\n', '', ''))
//! ```
//!
//! Quoted strings use single quotes; `\'` and `\n` are unescaped, any other
//! backslash sequence is handed to the template parser untouched.

use super::template::quote;
use super::{
    distinctness, parse_signature, parse_template, ConstraintRegistry, Grammar, GrammarError, Rule, Template, DISTINCT,
};

pub fn parse_grammar_definition(text: &str, constraints: &ConstraintRegistry) -> Result<Grammar, GrammarError> {
    let mut grammar: Option<Grammar> = None;
    let mut defaults: Option<Vec<String>> = None;
    for (n, raw) in text.lines().enumerate() {
        let line_no = n + 1;
        let err = |message: String| GrammarError::Definition { line: line_no, message };
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("languages:") {
            if grammar.is_some() {
                return Err(err("languages declared twice".into()));
            }
            let langs: Vec<&str> = rest.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
            if langs.is_empty() {
                return Err(err("no languages declared".into()));
            }
            let mut g = Grammar::new(&langs);
            g.constraints = constraints.clone();
            if g.constraints.get(DISTINCT).is_none() {
                g.constraints.insert(DISTINCT, distinctness);
            }
            grammar = Some(g);
            continue;
        }
        if let Some(rest) = line.strip_prefix("defaults:") {
            defaults = Some(
                rest.split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect(),
            );
            continue;
        }
        let Some(inner) = line.strip_prefix("R(").and_then(|l| l.strip_suffix(')')) else {
            return Err(err(format!("expected `R(...)`, found `{line}`")));
        };
        let g = grammar
            .as_mut()
            .ok_or_else(|| err("rule before `languages:` declaration".into()))?;
        let fields = split_fields(inner).map_err(err)?;
        let mut fields = fields.into_iter();
        let sig = fields.next().ok_or_else(|| err("missing signature".into()))?;
        let signature = parse_signature(&sig)?;
        let mut realizers = Vec::new();
        let mut weight = 1.0;
        let mut rule_constraints = Vec::new();
        for field in fields {
            if let Some(w) = field.strip_prefix("weight=") {
                weight = w.trim().parse::<f64>().map_err(|_| err(format!("bad weight `{w}`")))?;
            } else if let Some(c) = field.strip_prefix("constraints=") {
                rule_constraints = c
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(String::from)
                    .collect();
            } else {
                realizers.push(parse_template_field(&field, line_no)?);
            }
        }
        let rule = Rule {
            signature,
            realizers,
            weight,
            constraints: rule_constraints,
        };
        g.register(rule)?;
    }
    let mut g = grammar.ok_or(GrammarError::Definition {
        line: 0,
        message: "missing `languages:` declaration".into(),
    })?;
    if let Some(ids) = defaults {
        g.set_default_constraints(ids)?;
    }
    Ok(g)
}

fn parse_template_field(field: &str, line: usize) -> Result<Template, GrammarError> {
    let err = |message: String| GrammarError::Definition { line, message };
    if field.starts_with('\'') {
        let (s, rest) = read_quoted(field).map_err(err)?;
        if !rest.trim().is_empty() {
            return Err(err(format!("trailing text after template: `{rest}`")));
        }
        return parse_template(&s);
    }
    if let Some(args) = field.strip_prefix("join(").and_then(|f| f.strip_suffix(')')) {
        let mut parts = Vec::new();
        let mut rest = args.trim_start();
        while !rest.is_empty() {
            let (s, r) = read_quoted(rest).map_err(err)?;
            parts.push(s);
            rest = r.trim_start();
            if let Some(r) = rest.strip_prefix(',') {
                rest = r.trim_start();
            } else if !rest.is_empty() {
                return Err(err(format!("expected `,` in join, found `{rest}`")));
            }
        }
        let [separator, open, close]: [String; 3] = parts
            .try_into()
            .map_err(|_| err("join takes three strings: separator, open, close".into()))?;
        return Ok(Template::Join { separator, open, close });
    }
    Err(err(format!("expected a quoted template or join(...), found `{field}`")))
}

/// Reads a single-quoted string at the start of `s`; returns it unescaped and the remainder.
fn read_quoted(s: &str) -> Result<(String, &str), String> {
    let mut chars = s.char_indices();
    if chars.next().map(|(_, c)| c) != Some('\'') {
        return Err(format!("expected a quoted string at `{s}`"));
    }
    let mut out = String::new();
    while let Some((i, c)) = chars.next() {
        match c {
            '\'' => return Ok((out, &s[i + 1..])),
            '\\' => match chars.next() {
                Some((_, '\'')) => out.push('\''),
                Some((_, 'n')) => out.push('\n'),
                Some((_, other)) => {
                    out.push('\\');
                    out.push(other);
                }
                None => return Err("unterminated string".into()),
            },
            _ => out.push(c),
        }
    }
    Err("unterminated string".into())
}

/// Splits on `;` outside quotes and parentheses.
fn split_fields(inner: &str) -> Result<Vec<String>, String> {
    let mut fields = Vec::new();
    let mut current = String::new();
    let mut depth = 0i32;
    let mut in_quote = false;
    let mut chars = inner.chars();
    while let Some(c) = chars.next() {
        if in_quote {
            current.push(c);
            match c {
                '\\' => {
                    if let Some(n) = chars.next() {
                        current.push(n);
                    }
                }
                '\'' => in_quote = false,
                _ => {}
            }
            continue;
        }
        match c {
            '\'' => {
                in_quote = true;
                current.push(c);
            }
            '(' => {
                depth += 1;
                current.push(c);
            }
            ')' => {
                depth -= 1;
                if depth < 0 {
                    return Err("unbalanced parentheses".into());
                }
                current.push(c);
            }
            ';' if depth == 0 => fields.push(std::mem::take(&mut current).trim().to_string()),
            _ => current.push(c),
        }
    }
    if in_quote {
        return Err("unterminated string".into());
    }
    if depth != 0 {
        return Err("unbalanced parentheses".into());
    }
    fields.push(current.trim().to_string());
    Ok(fields)
}

pub(super) fn write_grammar_definition(g: &Grammar) -> String {
    let mut out = String::new();
    out.push_str(&format!("languages: {}\n", g.languages().join(", ")));
    out.push_str(&format!("defaults: {}\n", g.default_constraints().join(", ")));
    for rule in g.rules() {
        let mut fields = vec![rule.signature.to_string()];
        let all_same = rule.realizers.windows(2).all(|w| w[0] == w[1]);
        let shown = if all_same {
            &rule.realizers[..1]
        } else {
            &rule.realizers[..]
        };
        for t in shown {
            fields.push(match t {
                Template::Join { .. } => t.to_string(),
                Template::Tokens(_) => quote(&t.to_string()),
            });
        }
        if rule.weight != 1.0 {
            fields.push(format!("weight={}", rule.weight));
        }
        if !rule.constraints.is_empty() {
            fields.push(format!("constraints={}", rule.constraints.join(",")));
        }
        out.push_str(&format!("R({})\n", fields.join("; ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::TypeName;

    const SAMPLE: &str = "\
# toy grammar
languages: tptp, eng
R(adj; 'rich')
R(adj; '~rich'; 'not rich'; weight=0.2)
R(person; 'mary')
R(person; 'paul')
R(property(adj); '0(?)'; '0')
R(fact(person,property); '1[?←0]'; '0 is 1')
R(pair(fact×2); join('&\\n', '(', ')'); join('\\n', '', ''))
";

    #[test]
    fn parses_sample() {
        let g = parse_grammar_definition(SAMPLE, &ConstraintRegistry::with_builtins()).unwrap();
        assert_eq!(g.languages(), ["tptp", "eng"]);
        assert_eq!(g.rules().len(), 7);
        let neg = &g.rules()[1];
        assert_eq!(neg.weight, 0.2);
        assert_eq!(neg.realizers[1].to_string(), "not rich");
        let pair = g.producing(&TypeName::new("pair").unwrap()).next().unwrap();
        assert_eq!(
            pair.realizers[0],
            Template::Join {
                separator: "&\n".into(),
                open: "(".into(),
                close: ")".into()
            }
        );
        g.check_closed().unwrap();
    }

    #[test]
    fn written_definition_reparses_identically() {
        let g = parse_grammar_definition(SAMPLE, &ConstraintRegistry::with_builtins()).unwrap();
        let text = g.to_definition();
        let g2 = parse_grammar_definition(&text, &ConstraintRegistry::with_builtins()).unwrap();
        assert_eq!(g.rules(), g2.rules());
        assert_eq!(text, g2.to_definition());
    }

    #[test]
    fn quotes_and_semicolons_inside_templates() {
        let text = "languages: a, b\nR(x; 'it\\'s; fine'; 'ok')\n";
        let g = parse_grammar_definition(text, &ConstraintRegistry::with_builtins()).unwrap();
        assert_eq!(g.rules()[0].realizers[0].to_string(), "it's; fine");
    }

    #[test]
    fn unknown_constraint_is_rejected() {
        let text = "languages: a\nR(x; 'y'; constraints=nope)\n";
        let err = parse_grammar_definition(text, &ConstraintRegistry::with_builtins()).unwrap_err();
        assert_eq!(err, GrammarError::UnknownConstraint("nope".into()));
    }

    #[test]
    fn reports_line_numbers() {
        let text = "languages: a\n\nbogus\n";
        let err = parse_grammar_definition(text, &ConstraintRegistry::with_builtins()).unwrap_err();
        assert!(matches!(err, GrammarError::Definition { line: 3, .. }));
    }
}
