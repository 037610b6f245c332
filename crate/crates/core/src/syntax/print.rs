use std::fmt::{self, Write};

use super::{Program, Rule, Statement};

fn block(f: &mut impl Write, body: &[Statement], indent: usize) -> fmt::Result {
    if body.is_empty() {
        return f.write_str("{ }");
    }
    f.write_str("{\n")?;
    for s in body {
        statement(f, s, indent + 1)?;
    }
    write!(f, "{:w$}}}", "", w = indent * 2)
}

fn statement(f: &mut impl Write, s: &Statement, indent: usize) -> fmt::Result {
    write!(f, "{:w$}", "", w = indent * 2)?;
    match s {
        Statement::Cons { label, body } => {
            write!(f, "cons {label} ")?;
            block(f, body, indent)?;
        }
        Statement::Apply { expr, mode } => {
            write!(f, "apply ({expr})")?;
            if let Some(m) = mode {
                write!(f, " mode {m}")?;
            }
        }
        Statement::Call(r) => write!(f, "call {r}")?,
        Statement::Foreach { expr, body } => {
            write!(f, "foreach ({expr}) ")?;
            block(f, body, indent)?;
        }
        Statement::Val { var, expr } => write!(f, "val {var} ({expr})")?,
        Statement::Tree { var, body } => {
            write!(f, "tree {var} ")?;
            block(f, body, indent)?;
        }
        Statement::Vcopy(e) => write!(f, "vcopy ({e})")?,
        Statement::Tcopy(y) => write!(f, "tcopy {y}")?,
        Statement::If { test, then, els } => {
            write!(f, "if ({test}) ")?;
            block(f, then, indent)?;
            f.write_str(" else ")?;
            block(f, els, indent)?;
        }
    }
    f.write_char('\n')
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "template {} match ({})", self.name, self.matches)?;
        if let Some(m) = &self.mode {
            write!(f, " mode {m}")?;
        }
        f.write_char(' ')?;
        block(f, &self.body, 0)?;
        f.write_char('\n')
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.rules.iter().enumerate() {
            if i > 0 {
                f.write_char('\n')?;
            }
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        statement(&mut s, self, 0)?;
        f.write_str(s.trim_end())
    }
}

/// The template on one line, as `cons`-erased output would read when
/// terminal.
pub fn template_to_string(m: &[Statement]) -> String {
    let mut s = String::new();
    for st in m {
        if !s.is_empty() {
            s.push(' ');
        }
        let text = st.to_string();
        s.push_str(&text.split_whitespace().collect::<Vec<_>>().join(" "));
    }
    s
}
