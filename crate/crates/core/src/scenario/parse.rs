use crate::formula::parse::{expr, lex_line, term, Cursor, Tok, Token};
use crate::formula::{ParseError, Span};
use crate::world::Agent;

use super::{
    ActionDecl, AssignDecl, At, DomainDecl, EvidenceDecl, NamedFormula, Scenario, TransDecl, VarDecl,
    WeightDecl, SECTIONS,
};

/// Parses scenario text. Entries end at the end of a line unless a bracket
/// is still open, in which case they continue on the next one.
pub fn parse(text: &str) -> Result<Scenario, ParseError> {
    let mut s = Scenario::default();
    let mut seen: Vec<&str> = Vec::new();
    let mut section: Option<&str> = None;
    for (toks, end) in logical_lines(text)? {
        let mut c = Cursor::new(&toks, end);
        if let Some(Tok::Ident(k)) = c.peek() {
            if let Some(&name) = SECTIONS.iter().find(|&&n| n == k) {
                if seen.contains(&name) {
                    return Err(ParseError::new(c.span(), format!("section {name} appears twice")));
                }
                seen.push(name);
                section = Some(name);
                if name == "JOINT_WEIGHTS" {
                    s.joint_weights = Some(Vec::new());
                }
                c.bump();
                if c.at_end() {
                    continue;
                }
            }
        }
        let Some(name) = section else {
            return Err(ParseError::new(c.span(), "expected a section header"));
        };
        entry(&mut s, name, &mut c)?;
        c.finish()?;
    }
    Ok(s)
}

fn logical_lines(text: &str) -> Result<Vec<(Vec<Token>, Span)>, ParseError> {
    let mut out = Vec::new();
    let mut pending: Vec<Token> = Vec::new();
    let mut depth = 0i64;
    let mut end = Span::default();
    for (i, line) in text.lines().enumerate() {
        let toks = lex_line(line, i + 1)?;
        end = Span { line: i + 1, col: line.chars().count() + 1 };
        for t in &toks {
            match t.tok {
                Tok::LParen | Tok::LBrace | Tok::LBracket => depth += 1,
                Tok::RParen | Tok::RBrace | Tok::RBracket => depth -= 1,
                _ => {}
            }
        }
        pending.extend(toks);
        if depth <= 0 && !pending.is_empty() {
            out.push((std::mem::take(&mut pending), end));
            depth = 0;
        }
    }
    if !pending.is_empty() {
        out.push((pending, end));
    }
    Ok(out)
}

fn entry(s: &mut Scenario, section: &str, c: &mut Cursor) -> Result<(), ParseError> {
    match section {
        "HORIZON" => {
            if s.horizon.is_some() {
                return Err(ParseError::new(c.span(), "HORIZON takes a single number"));
            }
            let span = c.span();
            s.horizon = Some(At::new(c.int()?, span));
        }
        "VARS" => s.vars.push(var_decl(c)?),
        "OBSERVABLE" => s.observable.extend(name_list(c)?),
        "ACTIONS" => s.actions.push(action_decl(c)?),
        "TRANS" => s.trans.push(trans_decl(c)?),
        "INIT" => s.init.push(expr(c)?),
        "HISTORY" => s.history.push(expr(c)?),
        "EVIDENCE" => s.evidence.push(evidence_decl(c)?),
        "GOALS_A" => s.goals_a.push(named(c)?),
        "WEIGHTS_A" => s.weights_a.push(weight_decl(c)?),
        "GOALS_B" => s.goals_b.push(named(c)?),
        "WEIGHTS_B" => s.weights_b.push(weight_decl(c)?),
        "B_KNOWS" => s.b_knows.push(named(c)?),
        "B_COMMITS" => s.b_commits.push(named(c)?),
        "B_ADOPTS" => s.b_adopts.extend(name_list(c)?),
        "JOINT_WEIGHTS" => s.joint_weights.get_or_insert_with(Vec::new).push(weight_decl(c)?),
        _ => unreachable!("section names come from SECTIONS"),
    }
    Ok(())
}

fn at_ident(c: &mut Cursor) -> Result<At<String>, ParseError> {
    let span = c.span();
    Ok(At::new(c.ident()?, span))
}

fn name_list(c: &mut Cursor) -> Result<Vec<At<String>>, ParseError> {
    let mut out = vec![at_ident(c)?];
    while c.eat(&Tok::Comma) {
        out.push(at_ident(c)?);
    }
    Ok(out)
}

fn var_decl(c: &mut Cursor) -> Result<VarDecl, ParseError> {
    let name = at_ident(c)?;
    c.expect(&Tok::Colon)?;
    let domain = match c.peek() {
        Some(Tok::LBrace) => {
            c.bump();
            let values = name_list(c)?;
            c.expect(&Tok::RBrace)?;
            DomainDecl::Enum(values)
        }
        Some(Tok::Ident(k)) if k == "bool" => {
            c.bump();
            DomainDecl::Bool
        }
        Some(Tok::Int(_)) | Some(Tok::Minus) => {
            let lo = c.int()?;
            c.expect(&Tok::DotDot)?;
            let hi = c.int()?;
            DomainDecl::Range(lo, hi)
        }
        _ => return Err(c.unexpected("a range `lo..hi`, `bool` or `{values}`")),
    };
    Ok(VarDecl { name, domain })
}

fn action_decl(c: &mut Cursor) -> Result<ActionDecl, ParseError> {
    let span = c.span();
    let agent = match c.ident()?.as_str() {
        "A" => Agent::A,
        "B" => Agent::B,
        "Env" => Agent::Env,
        other => return Err(ParseError::new(span, format!("unknown agent `{other}`, expected A, B or Env"))),
    };
    c.expect(&Tok::Colon)?;
    Ok(ActionDecl { agent: At::new(agent, span), names: name_list(c)? })
}

fn trans_decl(c: &mut Cursor) -> Result<TransDecl, ParseError> {
    let span = c.span();
    let action = if c.eat(&Tok::Star) { At::new(None, span) } else { At::new(Some(c.ident()?), span) };
    c.expect(&Tok::Colon)?;
    let mut assigns = vec![assign(c)?];
    while c.eat(&Tok::Comma) {
        assigns.push(assign(c)?);
    }
    let guard = match c.peek() {
        Some(Tok::Ident(k)) if k == "if" => {
            c.bump();
            Some(expr(c)?)
        }
        _ => None,
    };
    Ok(TransDecl { action, assigns, guard })
}

fn assign(c: &mut Cursor) -> Result<AssignDecl, ParseError> {
    let var = at_ident(c)?;
    c.expect(&Tok::Prime)?;
    c.expect(&Tok::Eq)?;
    Ok(AssignDecl { var, rhs: term(c)? })
}

fn evidence_decl(c: &mut Cursor) -> Result<EvidenceDecl, ParseError> {
    let id = at_ident(c)?;
    let tag = if c.eat(&Tok::LBracket) {
        let t = at_ident(c)?;
        c.expect(&Tok::RBracket)?;
        Some(t)
    } else {
        None
    };
    c.expect(&Tok::Colon)?;
    Ok(EvidenceDecl { id, tag, body: expr(c)? })
}

fn named(c: &mut Cursor) -> Result<NamedFormula, ParseError> {
    let name = at_ident(c)?;
    c.expect(&Tok::Colon)?;
    Ok(NamedFormula { name, body: expr(c)? })
}

fn weight_decl(c: &mut Cursor) -> Result<WeightDecl, ParseError> {
    c.expect(&Tok::LBrace)?;
    let goals = if c.peek() == Some(&Tok::RBrace) { Vec::new() } else { name_list(c)? };
    c.expect(&Tok::RBrace)?;
    c.expect(&Tok::Eq)?;
    let span = c.span();
    let weight = c.int()?;
    Ok(WeightDecl { goals, weight: At::new(weight, span) })
}
