use std::fmt::Write as _;

use super::{CnfFormula, SatError};

/// Reads `p cnf <vars> <clauses>` followed by zero-terminated clauses.
/// Comment lines start with `c`; clauses may span lines.
pub fn parse_dimacs(text: &str) -> Result<CnfFormula, SatError> {
    let mut header: Option<(u32, usize)> = None;
    let mut f = CnfFormula::new();
    let mut current: Vec<i32> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let lineno = idx + 1;
        if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
            continue;
        }
        if line.starts_with('p') {
            if header.is_some() {
                return Err(SatError::Dimacs { line: lineno, message: "duplicate header".into() });
            }
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 4 || parts[1] != "cnf" {
                return Err(SatError::Dimacs {
                    line: lineno,
                    message: format!("expected `p cnf <vars> <clauses>`, got `{line}`"),
                });
            }
            let parse = |s: &str| {
                s.parse::<usize>().map_err(|_| SatError::Dimacs {
                    line: lineno,
                    message: format!("bad number `{s}` in header"),
                })
            };
            let vars = parse(parts[2])?;
            let clauses = parse(parts[3])?;
            header = Some((vars as u32, clauses));
            f.num_vars = vars as u32;
            continue;
        }
        let Some((num_vars, _)) = header else {
            return Err(SatError::Dimacs { line: lineno, message: "clause before header".into() });
        };
        for tok in line.split_whitespace() {
            let lit: i32 = tok.parse().map_err(|_| SatError::Dimacs {
                line: lineno,
                message: format!("bad literal `{tok}`"),
            })?;
            if lit == 0 {
                f.clauses.push(std::mem::take(&mut current));
            } else {
                if lit.unsigned_abs() > num_vars {
                    return Err(SatError::MalformedLiteral { lit, num_vars });
                }
                current.push(lit);
            }
        }
    }
    if !current.is_empty() {
        f.clauses.push(current);
    }
    let Some((_, declared)) = header else {
        return Err(SatError::Dimacs { line: 0, message: "missing `p cnf` header".into() });
    };
    if declared != f.clauses.len() {
        log::warn!("dimacs header declares {declared} clauses, found {}", f.clauses.len());
    }
    Ok(f)
}

pub fn write_dimacs(f: &CnfFormula) -> String {
    let mut out = format!("p cnf {} {}\n", f.num_vars, f.clauses.len());
    for c in &f.clauses {
        for l in c {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_comments_and_multiline_clauses() {
        let f = parse_dimacs("c hello\np cnf 3 2\n1 -2\n 3 0\n-1 0\n").unwrap();
        assert_eq!(f.num_vars, 3);
        assert_eq!(f.clauses, vec![vec![1, -2, 3], vec![-1]]);
    }

    #[test]
    fn writer_output_reparses() {
        let mut f = CnfFormula::new();
        f.add_clause([1, -3]);
        f.add_clause([2]);
        assert_eq!(parse_dimacs(&write_dimacs(&f)).unwrap(), f);
    }

    #[test]
    fn rejects_out_of_range_literal() {
        assert!(matches!(
            parse_dimacs("p cnf 2 1\n1 5 0\n"),
            Err(SatError::MalformedLiteral { lit: 5, num_vars: 2 })
        ));
        assert!(parse_dimacs("1 2 0\n").is_err());
        assert!(parse_dimacs("p dnf 1 1\n1 0\n").is_err());
    }
}
