//! The example programs and their golden outputs.
//!
//! A golden file records what checking and running a program produces: the
//! type of every definition, the printed value, and the value as a canonical
//! s-expression with every level written out.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use crate::eval::Machine;
use crate::frontend::{dump::Dumper, parse_program, pretty};
use crate::syntax::Term;
use crate::typing::{check_program, Checked};

/// The result of checking and running one program.
#[derive(Debug)]
pub struct Run {
    pub checked: Result<Checked, String>,
    /// `None` when the program has no entry expression.
    pub value: Option<Result<Term, String>>,
    pub matches: u64,
    pub discrepancies: u64,
}

pub fn run_source(src: &str) -> Run {
    let mut run = Run {
        checked: Err(String::new()),
        value: None,
        matches: 0,
        discrepancies: 0,
    };
    let prog = match parse_program(src) {
        Ok(p) => p,
        Err(e) => {
            run.checked = Err(format!("parse error: {e}"));
            return run;
        }
    };
    let checked = match check_program(&prog) {
        Ok(c) => c,
        Err(e) => {
            run.checked = Err(format!("type error: {e}"));
            return run;
        }
    };
    run.value = match checked.closed_main() {
        Ok(None) => None,
        Ok(Some(main)) => {
            let mut m = Machine::default();
            let v = m.run(&main).map_err(|e| format!("runtime error: {e}"));
            run.matches = m.matches;
            run.discrepancies = m.discrepancies;
            Some(v)
        }
        Err(e) => Some(Err(format!("runtime error: {e}"))),
    };
    run.checked = Ok(checked);
    run
}

/// The golden text for a run.
pub fn render(run: &Run) -> String {
    let mut out = String::from("# check\n");
    match &run.checked {
        Err(e) => {
            out.push_str(e);
            out.push('\n');
            return out;
        }
        Ok(c) => {
            for (n, t, _) in &c.defs {
                out.push_str(&format!("{n} : {}\n", pretty::ty(t)));
            }
            if let Some((_, t)) = &c.main {
                out.push_str(&format!("- : {}\n", pretty::ty(t)));
            }
        }
    }
    match &run.value {
        None => {}
        Some(Err(e)) => out.push_str(&format!("# run\n{e}\n")),
        Some(Ok(v)) => {
            out.push_str(&format!("# run\n{}\n", pretty::term(v)));
            out.push_str(&format!("# value\n{}\n", Dumper::default().term(v)));
        }
    }
    out
}

/// One corpus program compared against its golden file.
#[derive(Debug)]
pub struct Entry {
    pub program: PathBuf,
    pub expected: Option<String>,
    pub actual: String,
    pub run: Run,
}

impl Entry {
    pub fn matches(&self) -> bool {
        self.expected.as_deref() == Some(self.actual.as_str())
    }
}

/// Every `.mbs` file in `dir`, in name order, against its `.golden` sibling.
pub fn corpus_run(dir: &Path) -> io::Result<Vec<Entry>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "mbs"))
        .collect();
    files.sort();
    let mut out = Vec::with_capacity(files.len());
    for program in files {
        let src = fs::read_to_string(&program)?;
        let run = run_source(&src);
        let actual = render(&run);
        let expected = fs::read_to_string(program.with_extension("golden")).ok();
        out.push(Entry {
            program,
            expected,
            actual,
            run,
        });
    }
    Ok(out)
}
