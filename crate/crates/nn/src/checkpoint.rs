//! Plain-text checkpoints.
//!
//! ```text
//! guidedplan-checkpoint 1
//! step <u64>
//! value_scale <f64>
//! alpha <f64>                      (optional)
//! network <name> <layer count>
//! sizes <in> <h1> ... <out>
//! layer <index> <in> <out>
//! <out lines of `in` weights, row-major>
//! <one line of `out` biases>
//! ...
//! end
//! ```
//!
//! Networks are `policy` and `value`, optionally followed by `q0`, `q1`,
//! `q0_target`, `q1_target`. Floats use the shortest representation that
//! parses back to the same bits.

use crate::error::{NnError, Result};
use crate::mlp::Mlp;
use crate::nets::{ApproximatorParams, TwinQ};
use std::fmt::Write as _;
use std::path::Path;

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &str = "guidedplan-checkpoint";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub params: ApproximatorParams,
    pub q: Option<TwinQ>,
    pub alpha: Option<f64>,
}

fn write_net(out: &mut String, name: &str, net: &Mlp) {
    let sizes = net.sizes();
    writeln!(out, "network {name} {}", sizes.len() - 1).unwrap();
    let s: Vec<String> = sizes.iter().map(|v| v.to_string()).collect();
    writeln!(out, "sizes {}", s.join(" ")).unwrap();
    for l in 0..sizes.len() - 1 {
        let (i, o) = (sizes[l], sizes[l + 1]);
        writeln!(out, "layer {l} {i} {o}").unwrap();
        let (w, b) = net.layer(l);
        for row in w.chunks(i) {
            out.push_str(&join(row));
            out.push('\n');
        }
        out.push_str(&join(b));
        out.push('\n');
    }
}

fn join(xs: &[f64]) -> String {
    let v: Vec<String> = xs.iter().map(|x| format!("{x:?}")).collect();
    v.join(" ")
}

impl Checkpoint {
    pub fn to_text(&self) -> String {
        let mut out = format!("{MAGIC} {CHECKPOINT_VERSION}\nstep {}\nvalue_scale {:?}\n", self.step, self.params.value_scale);
        if let Some(a) = self.alpha {
            writeln!(out, "alpha {a:?}").unwrap();
        }
        write_net(&mut out, "policy", &self.params.policy);
        write_net(&mut out, "value", &self.params.value);
        if let Some(q) = &self.q {
            write_net(&mut out, "q0", &q.online[0]);
            write_net(&mut out, "q1", &q.online[1]);
            write_net(&mut out, "q0_target", &q.target[0]);
            write_net(&mut out, "q1_target", &q.target[1]);
        }
        out.push_str("end\n");
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut p = Parser {
            lines: text.lines().enumerate(),
            line: 0,
        };
        let head = p.expect_key(MAGIC)?;
        let version: u32 = p.parse_one(&head)?;
        if version != CHECKPOINT_VERSION {
            return Err(p.err(format!("unsupported version {version}")));
        }
        let step_line = p.expect_key("step")?;
        let step = p.parse_one(&step_line)?;
        let scale_line = p.expect_key("value_scale")?;
        let value_scale = p.parse_one(&scale_line)?;
        let mut alpha = None;
        let mut nets: Vec<(String, Mlp)> = Vec::new();
        loop {
            let (key, rest) = p.next_line()?;
            match key.as_str() {
                "alpha" if nets.is_empty() && alpha.is_none() => alpha = Some(p.parse_one(&rest)?),
                "network" => nets.push(p.network(&rest)?),
                "end" => break,
                other => return Err(p.err(format!("unexpected `{other}`"))),
            }
        }
        let mut take = |name: &str| {
            nets.iter()
                .position(|(n, _)| n == name)
                .map(|i| nets.remove(i).1)
        };
        let missing = |name: &str| NnError::Checkpoint {
            line: 0,
            message: format!("missing network `{name}`"),
        };
        let policy = take("policy").ok_or_else(|| missing("policy"))?;
        let value = take("value").ok_or_else(|| missing("value"))?;
        let q = match take("q0") {
            None => None,
            Some(q0) => Some(TwinQ {
                online: [q0, take("q1").ok_or_else(|| missing("q1"))?],
                target: [
                    take("q0_target").ok_or_else(|| missing("q0_target"))?,
                    take("q1_target").ok_or_else(|| missing("q1_target"))?,
                ],
            }),
        };
        if let Some((name, _)) = nets.first() {
            return Err(NnError::Checkpoint {
                line: 0,
                message: format!("unknown network `{name}`"),
            });
        }
        Ok(Self {
            step,
            params: ApproximatorParams {
                policy,
                value,
                value_scale,
            },
            q,
            alpha,
        })
    }
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl Parser<'_> {
    fn err(&self, message: String) -> NnError {
        NnError::Checkpoint {
            line: self.line,
            message,
        }
    }

    fn raw(&mut self) -> Result<&str> {
        match self.lines.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of file".into())),
        }
    }

    fn next_line(&mut self) -> Result<(String, String)> {
        let l = self.raw()?.trim();
        let (k, r) = l.split_once(' ').unwrap_or((l, ""));
        Ok((k.to_string(), r.trim().to_string()))
    }

    fn expect_key(&mut self, key: &str) -> Result<String> {
        let (k, rest) = self.next_line()?;
        if k != key {
            return Err(self.err(format!("expected `{key}`, found `{k}`")));
        }
        Ok(rest)
    }

    fn parse_one<T: std::str::FromStr>(&self, s: &str) -> Result<T> {
        s.trim().parse().map_err(|_| self.err(format!("cannot parse `{s}`")))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f64>> {
        let l = self.raw()?.to_string();
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| self.parse_one(t))
            .collect::<Result<_>>()?;
        if v.len() != n {
            return Err(self.err(format!("expected {n} values, found {}", v.len())));
        }
        Ok(v)
    }

    fn network(&mut self, header: &str) -> Result<(String, Mlp)> {
        let mut it = header.split_whitespace();
        let name = it.next().ok_or_else(|| self.err("network name missing".into()))?.to_string();
        let layers: usize = self.parse_one(it.next().unwrap_or(""))?;
        let sizes_line = self.expect_key("sizes")?;
        let sizes: Vec<usize> = sizes_line
            .split_whitespace()
            .map(|t| self.parse_one(t))
            .collect::<Result<_>>()?;
        if sizes.len() != layers + 1 {
            return Err(self.err(format!("{layers} layers need {} sizes", layers + 1)));
        }
        let mut params = Vec::new();
        for l in 0..layers {
            let h = self.expect_key("layer")?;
            let dims: Vec<usize> = h.split_whitespace().map(|t| self.parse_one(t)).collect::<Result<_>>()?;
            if dims != [l, sizes[l], sizes[l + 1]] {
                return Err(self.err(format!("layer header `{h}` disagrees with sizes")));
            }
            for _ in 0..sizes[l + 1] {
                params.extend(self.floats(sizes[l])?);
            }
            params.extend(self.floats(sizes[l + 1])?);
        }
        let net = Mlp::from_parts(sizes, params).ok_or_else(|| self.err("invalid network shape".into()))?;
        Ok((name, net))
    }
}
