//! Line-based text formats for SAS+ (`sas 1`) and explicit graph (`graph 1`) tasks.
//!
//! Blank lines and `#` comments are ignored. Serialization emits the
//! normalized form: single spaces, facts sorted by variable, no comments.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::str::FromStr;

use super::{ExplicitTask, Fact, Operator, PartialAssignment, SasTask, State, TaskError};
use crate::heuristics::HeuristicValue;

/// Either kind of task, as read from a file.
#[derive(Debug, Clone)]
pub enum AnyTask {
    Sas(SasTask),
    Graph(ExplicitTask),
}

struct Lines<'a> {
    inner: Vec<(usize, Vec<&'a str>)>,
    pos: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let inner = text
            .lines()
            .enumerate()
            .filter_map(|(i, line)| {
                let line = line.split('#').next().unwrap_or("");
                let tokens: Vec<&str> = line.split_whitespace().collect();
                (!tokens.is_empty()).then_some((i + 1, tokens))
            })
            .collect();
        Self { inner, pos: 0 }
    }

    fn next(&mut self) -> Option<(usize, Vec<&'a str>)> {
        let item = self.inner.get(self.pos).cloned();
        self.pos += 1;
        item
    }

    fn expect(&mut self, keyword: &str) -> Result<(usize, Vec<&'a str>), TaskError> {
        let last_line = self.inner.last().map_or(1, |l| l.0);
        match self.next() {
            Some((line, tokens)) if tokens[0] == keyword => Ok((line, tokens)),
            Some((line, tokens)) => Err(syntax(line, format!("expected `{keyword}`, found `{}`", tokens[0]))),
            None => Err(syntax(last_line, format!("unexpected end of input, expected `{keyword}`"))),
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> TaskError {
    TaskError::Syntax { line, message: message.into() }
}

struct Cursor<'a, 'b> {
    line: usize,
    tokens: &'b [&'a str],
    pos: usize,
}

impl<'a, 'b> Cursor<'a, 'b> {
    fn new(line: usize, tokens: &'b [&'a str]) -> Self {
        Self { line, tokens, pos: 1 }
    }

    fn word(&mut self) -> Result<&'a str, TaskError> {
        let tok = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| syntax(self.line, "line ends too early"))?;
        self.pos += 1;
        Ok(tok)
    }

    fn keyword(&mut self, kw: &str) -> Result<(), TaskError> {
        let w = self.word()?;
        if w == kw {
            Ok(())
        } else {
            Err(syntax(self.line, format!("expected `{kw}`, found `{w}`")))
        }
    }

    fn num<N: FromStr>(&mut self) -> Result<N, TaskError> {
        let w = self.word()?;
        w.parse().map_err(|_| syntax(self.line, format!("expected a number, found `{w}`")))
    }

    fn facts(&mut self) -> Result<Vec<Fact>, TaskError> {
        let count: usize = self.num()?;
        (0..count)
            .map(|_| Ok(Fact::new(self.num()?, self.num()?)))
            .collect()
    }

    fn finish(&self) -> Result<(), TaskError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(syntax(self.line, format!("unexpected trailing token `{}`", self.tokens[self.pos])))
        }
    }
}

fn header(lines: &mut Lines<'_>, kind: &str) -> Result<(), TaskError> {
    let (line, tokens) = lines.expect(kind)?;
    if tokens.len() != 2 || tokens[1] != "1" {
        return Err(syntax(line, format!("unsupported header, expected `{kind} 1`")));
    }
    Ok(())
}

/// Parses a SAS+ task in the `sas 1` format.
pub fn parse_task(text: &str) -> Result<SasTask, TaskError> {
    let mut lines = Lines::new(text);
    header(&mut lines, "sas")?;

    let (line, tokens) = lines.expect("vars")?;
    let mut c = Cursor::new(line, &tokens);
    let k: usize = c.num()?;
    let domains = (0..k).map(|_| c.num()).collect::<Result<Vec<usize>, _>>()?;
    c.finish()?;

    let (line, tokens) = lines.expect("init")?;
    let mut c = Cursor::new(line, &tokens);
    let init = (0..k).map(|_| c.num()).collect::<Result<Vec<u32>, _>>()?;
    c.finish()?;

    let (line, tokens) = lines.expect("goal")?;
    let mut c = Cursor::new(line, &tokens);
    let goal = PartialAssignment::new(c.facts()?)?;
    c.finish()?;

    let mut operators = Vec::new();
    while let Some((line, tokens)) = lines.next() {
        if tokens[0] != "op" {
            return Err(syntax(line, format!("expected `op`, found `{}`", tokens[0])));
        }
        let mut c = Cursor::new(line, &tokens);
        let name = c.word()?;
        let cost: u64 = c.num()?;
        c.keyword("pre")?;
        let pre = PartialAssignment::new(c.facts()?)?;
        c.keyword("eff")?;
        let eff = PartialAssignment::new(c.facts()?)?;
        c.finish()?;
        operators.push(Operator::new(name, pre, eff, cost)?);
    }

    SasTask::new(domains, State::new(init), operators, goal)
}

fn write_facts(out: &mut String, pa: &PartialAssignment) {
    write!(out, "{}", pa.len()).unwrap();
    for f in pa.facts() {
        write!(out, " {} {}", f.var, f.value).unwrap();
    }
}

/// Emits the normalized `sas 1` text for `task`.
pub fn serialize_task(task: &SasTask) -> String {
    let mut out = String::from("sas 1\n");
    write!(out, "vars {}", task.num_variables()).unwrap();
    for d in task.domains() {
        write!(out, " {d}").unwrap();
    }
    out.push_str("\ninit");
    for v in task.initial().values() {
        write!(out, " {v}").unwrap();
    }
    out.push_str("\ngoal ");
    write_facts(&mut out, task.goal());
    out.push('\n');
    for op in task.operators() {
        write!(out, "op {} {} pre ", op.name, op.cost).unwrap();
        write_facts(&mut out, &op.precondition);
        out.push_str(" eff ");
        write_facts(&mut out, &op.effect);
        out.push('\n');
    }
    out
}

/// Parses an explicit task in the `graph 1` format.
pub fn parse_explicit_task(text: &str) -> Result<ExplicitTask, TaskError> {
    let mut lines = Lines::new(text);
    header(&mut lines, "graph")?;

    let (line, tokens) = lines.expect("states")?;
    let mut c = Cursor::new(line, &tokens);
    let num_states: usize = c.num()?;
    c.finish()?;

    let (line, tokens) = lines.expect("init")?;
    let mut c = Cursor::new(line, &tokens);
    let initial: usize = c.num()?;
    c.finish()?;

    let (line, tokens) = lines.expect("goals")?;
    let mut c = Cursor::new(line, &tokens);
    let m: usize = c.num()?;
    let goals = (0..m).map(|_| c.num()).collect::<Result<BTreeSet<usize>, _>>()?;
    c.finish()?;

    let mut task = ExplicitTask::new(num_states, initial, goals)?;
    while let Some((line, tokens)) = lines.next() {
        let mut c = Cursor::new(line, &tokens);
        match tokens[0] {
            "arc" => {
                let src = c.num()?;
                let label = c.word()?;
                let cost = c.num()?;
                let dst = c.num()?;
                c.finish()?;
                task.add_arc(src, label, cost, dst)?;
            }
            "h" => {
                let heuristic: usize = c.num()?;
                let state: usize = c.num()?;
                let value = match c.word()? {
                    "inf" => HeuristicValue::Infinite,
                    w => HeuristicValue::Finite(
                        w.parse().map_err(|_| syntax(line, format!("expected a value or `inf`, found `{w}`")))?,
                    ),
                };
                c.finish()?;
                task.set_heuristic(heuristic, state, value)?;
            }
            other => return Err(syntax(line, format!("expected `arc` or `h`, found `{other}`"))),
        }
    }
    Ok(task)
}

/// Emits the normalized `graph 1` text for `task`.
pub fn serialize_explicit_task(task: &ExplicitTask) -> String {
    let mut out = String::from("graph 1\n");
    writeln!(out, "states {}", task.num_states()).unwrap();
    writeln!(out, "init {}", task.initial()).unwrap();
    write!(out, "goals {}", task.goals().len()).unwrap();
    for g in task.goals() {
        write!(out, " {g}").unwrap();
    }
    out.push('\n');
    for arc in task.arcs() {
        writeln!(out, "arc {} {} {} {}", arc.src, arc.label, arc.cost, arc.dst).unwrap();
    }
    for h in 0..task.num_heuristics() {
        for (state, value) in task.table(h).unwrap().iter().enumerate() {
            if let Some(v) = value {
                writeln!(out, "h {h} {state} {v}").unwrap();
            }
        }
    }
    out
}

/// Dispatches on the header line.
pub fn parse_any_task(text: &str) -> Result<AnyTask, TaskError> {
    let lines = Lines::new(text);
    match lines.inner.first() {
        Some((_, tokens)) if tokens[0] == "sas" => parse_task(text).map(AnyTask::Sas),
        Some((_, tokens)) if tokens[0] == "graph" => parse_explicit_task(text).map(AnyTask::Graph),
        Some((line, tokens)) => Err(syntax(*line, format!("unknown header `{}`", tokens[0]))),
        None => Err(syntax(1, "empty input")),
    }
}
