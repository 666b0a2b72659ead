//! Experience tuples and their newline-delimited text format.
//!
//! One record per line, fields separated by single spaces:
//!
//! ```text
//! episode step action planner_action done reward_safe reward_collision
//! rl_reward value_safe value_collision value_total
//! n x_1 .. x_n m next_x_1 .. next_x_m
//! ```
//!
//! (a single line in the file). `done` is `0` or `1`. Floats use the
//! shortest representation that parses back to the same bits. Blank lines
//! and lines starting with `#` are skipped.

use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::Path;

use guidedplan_core::{FactoredReward, FactoredValue};

use crate::error::{LearnError, Result};

pub const DATASET_HEADER: &str = "# guidedplan-dataset 1";

#[derive(Debug, Clone, PartialEq)]
pub struct ExperienceTuple {
    pub episode: u64,
    pub step: u32,
    /// Features of the history the planner saw.
    pub x: Vec<f64>,
    pub action: usize,
    pub reward: FactoredReward,
    /// Smooth reward channel used by the actor-critic learner.
    pub rl_reward: f64,
    pub planner_action: usize,
    pub value: FactoredValue,
    pub done: bool,
    /// Features after the executed action's observation.
    pub next_x: Vec<f64>,
}

impl ExperienceTuple {
    pub fn to_line(&self) -> String {
        let mut s = String::new();
        write!(
            s,
            "{} {} {} {} {} {:?} {:?} {:?} {:?} {:?} {:?} {}",
            self.episode,
            self.step,
            self.action,
            self.planner_action,
            u8::from(self.done),
            self.reward.safe,
            self.reward.collision,
            self.rl_reward,
            self.value.safe,
            self.value.collision,
            self.value.total,
            self.x.len()
        )
        .unwrap();
        for v in &self.x {
            write!(s, " {v:?}").unwrap();
        }
        write!(s, " {}", self.next_x.len()).unwrap();
        for v in &self.next_x {
            write!(s, " {v:?}").unwrap();
        }
        s
    }

    pub fn parse_line(text: &str, line: usize) -> Result<Self> {
        let err = |message: String| LearnError::CorruptDataset { line, message };
        let mut it = text.split_ascii_whitespace();
        let mut next = |what: &str| it.next().ok_or_else(|| err(format!("missing {what}")));
        fn num<T: std::str::FromStr>(tok: &str, what: &str, line: usize) -> Result<T> {
            tok.parse().map_err(|_| LearnError::CorruptDataset {
                line,
                message: format!("bad {what} `{tok}`"),
            })
        }
        let episode = num(next("episode")?, "episode", line)?;
        let step = num(next("step")?, "step", line)?;
        let action = num(next("action")?, "action", line)?;
        let planner_action = num(next("planner action")?, "planner action", line)?;
        let done = match next("done")? {
            "0" => false,
            "1" => true,
            t => return Err(err(format!("bad done flag `{t}`"))),
        };
        let mut f = |what: &str| -> Result<f64> { num(next(what)?, what, line) };
        let reward = FactoredReward::new(f("reward_safe")?, f("reward_collision")?);
        let rl_reward = f("rl_reward")?;
        let value = FactoredValue {
            safe: f("value_safe")?,
            collision: f("value_collision")?,
            total: f("value_total")?,
        };
        let mut vec = |what: &str| -> Result<Vec<f64>> {
            let n: usize = num(next(what)?, what, line)?;
            (0..n).map(|_| num(next(what)?, what, line)).collect()
        };
        let x = vec("x")?;
        let next_x = vec("next_x")?;
        if let Some(extra) = it.next() {
            return Err(err(format!("trailing token `{extra}`")));
        }
        Ok(Self {
            episode,
            step,
            x,
            action,
            reward,
            rl_reward,
            planner_action,
            value,
            done,
            next_x,
        })
    }
}

pub fn write_dataset<'a, W: Write>(mut out: W, tuples: impl IntoIterator<Item = &'a ExperienceTuple>) -> Result<()> {
    writeln!(out, "{DATASET_HEADER}")?;
    for t in tuples {
        writeln!(out, "{}", t.to_line())?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<ExperienceTuple>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        out.push(ExperienceTuple::parse_line(t, i + 1)?);
    }
    Ok(out)
}

pub fn save_dataset(path: &Path, tuples: &[ExperienceTuple]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_dataset(std::io::BufWriter::new(file), tuples)
}

pub fn load_dataset(path: &Path) -> Result<Vec<ExperienceTuple>> {
    let file = std::fs::File::open(path)?;
    read_dataset(std::io::BufReader::new(file))
}
