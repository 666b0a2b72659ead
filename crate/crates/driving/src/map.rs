//! Lane graph, exo-agent routes and the plain-text map format.
//!
//! ```text
//! guidedplan-map 1
//! lane <id> <x>,<y> <x>,<y> ...          ids are 0, 1, 2, ... in order
//! left <lane> <lane-on-its-left>          also sets the reverse `right`
//! succ <lane> <successor>
//! route <id> car|pedestrian <lane> ...    consecutive lanes must be successors
//! spawn <route> <s_min> <s_max> <v_min> <v_max>
//! ego <s_min> <s_max> <goal_s> <lane> ...
//! ```
//!
//! Blank lines and text after `#` are ignored.

use crate::geometry::{Path, Vec2};
use std::fmt::Write as _;
use thiserror::Error;

pub type LaneId = usize;
pub type RouteId = usize;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("map line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid map: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    Car,
    Pedestrian,
}

impl AgentKind {
    fn name(self) -> &'static str {
        match self {
            AgentKind::Car => "car",
            AgentKind::Pedestrian => "pedestrian",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lane {
    pub path: Path,
    pub left: Option<LaneId>,
    pub right: Option<LaneId>,
    pub successors: Vec<LaneId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub kind: AgentKind,
    pub lanes: Vec<LaneId>,
    pub path: Path,
}

/// Where and how fast agents on a route may appear at reset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spawn {
    pub route: RouteId,
    pub s: (f64, f64),
    pub speed: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct EgoSpec {
    pub lanes: Vec<LaneId>,
    pub start_s: (f64, f64),
    pub goal_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LaneGraph {
    pub lanes: Vec<Lane>,
    pub routes: Vec<Route>,
    pub spawns: Vec<Spawn>,
    pub ego: EgoSpec,
}

fn concat(paths: &[&Path]) -> Option<Path> {
    let mut pts: Vec<Vec2> = Vec::new();
    for p in paths {
        for &q in p.points() {
            if pts.last().is_none_or(|l| (*l - q).norm() > 1e-9) {
                pts.push(q);
            }
        }
    }
    Path::new(pts)
}

impl LaneGraph {
    pub fn parse(text: &str) -> Result<Self, MapError> {
        let mut lanes: Vec<Lane> = Vec::new();
        let mut adjacency: Vec<(usize, LaneId, LaneId)> = Vec::new();
        let mut succ: Vec<(usize, LaneId, LaneId)> = Vec::new();
        let mut routes: Vec<(usize, AgentKind, Vec<LaneId>)> = Vec::new();
        let mut spawns = Vec::new();
        let mut ego = None;
        let mut header = false;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let err = |message: String| MapError::Parse { line, message };
            let content = raw.split('#').next().unwrap().trim();
            if content.is_empty() {
                continue;
            }
            let mut tok = content.split_whitespace();
            let key = tok.next().unwrap();
            let rest: Vec<&str> = tok.collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| err(format!("bad number `{s}`")));
            let id = |s: &str| s.parse::<usize>().map_err(|_| err(format!("bad id `{s}`")));
            if !header {
                if key != "guidedplan-map" || rest != ["1"] {
                    return Err(err("expected header `guidedplan-map 1`".into()));
                }
                header = true;
                continue;
            }
            match key {
                "lane" => {
                    let (first, pts) = rest.split_first().ok_or_else(|| err("lane needs an id".into()))?;
                    if id(first)? != lanes.len() {
                        return Err(err(format!("lane ids must be sequential, expected {}", lanes.len())));
                    }
                    let points = pts
                        .iter()
                        .map(|p| {
                            let (x, y) = p.split_once(',').ok_or_else(|| err(format!("bad point `{p}`")))?;
                            Ok(Vec2::new(num(x)?, num(y)?))
                        })
                        .collect::<Result<Vec<_>, MapError>>()?;
                    let path = Path::new(points).ok_or_else(|| err("lane polyline is degenerate".into()))?;
                    lanes.push(Lane {
                        path,
                        left: None,
                        right: None,
                        successors: Vec::new(),
                    });
                }
                "left" | "succ" => {
                    if rest.len() != 2 {
                        return Err(err(format!("`{key}` takes two lane ids")));
                    }
                    let entry = (line, id(rest[0])?, id(rest[1])?);
                    if key == "left" { adjacency.push(entry) } else { succ.push(entry) }
                }
                "route" => {
                    if rest.len() < 3 {
                        return Err(err("route needs id, kind and lanes".into()));
                    }
                    if id(rest[0])? != routes.len() {
                        return Err(err(format!("route ids must be sequential, expected {}", routes.len())));
                    }
                    let kind = match rest[1] {
                        "car" => AgentKind::Car,
                        "pedestrian" => AgentKind::Pedestrian,
                        k => return Err(err(format!("unknown agent kind `{k}`"))),
                    };
                    let ids = rest[2..].iter().map(|s| id(s)).collect::<Result<Vec<_>, _>>()?;
                    routes.push((line, kind, ids));
                }
                "spawn" => {
                    if rest.len() != 5 {
                        return Err(err("spawn takes route s_min s_max v_min v_max".into()));
                    }
                    spawns.push((
                        line,
                        Spawn {
                            route: id(rest[0])?,
                            s: (num(rest[1])?, num(rest[2])?),
                            speed: (num(rest[3])?, num(rest[4])?),
                        },
                    ));
                }
                "ego" => {
                    if rest.len() < 4 {
                        return Err(err("ego takes s_min s_max goal_s and lanes".into()));
                    }
                    let lanes_ = rest[3..].iter().map(|s| id(s)).collect::<Result<Vec<_>, _>>()?;
                    ego = Some((
                        line,
                        EgoSpec {
                            lanes: lanes_,
                            start_s: (num(rest[0])?, num(rest[1])?),
                            goal_s: num(rest[2])?,
                        },
                    ));
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        if !header {
            return Err(MapError::Invalid("empty map".into()));
        }
        let n = lanes.len();
        let check = |line: usize, l: LaneId| {
            if l < n {
                Ok(l)
            } else {
                Err(MapError::Parse {
                    line,
                    message: format!("unknown lane {l}"),
                })
            }
        };
        for (line, a, b) in adjacency {
            let (a, b) = (check(line, a)?, check(line, b)?);
            lanes[a].left = Some(b);
            lanes[b].right = Some(a);
        }
        for (line, a, b) in succ {
            let (a, b) = (check(line, a)?, check(line, b)?);
            lanes[a].successors.push(b);
        }
        let mut built = Vec::new();
        for (line, kind, ids) in routes {
            for &l in &ids {
                check(line, l)?;
            }
            if ids.windows(2).any(|w| !lanes[w[0]].successors.contains(&w[1])) {
                return Err(MapError::Parse {
                    line,
                    message: "route lanes are not successors".into(),
                });
            }
            let paths: Vec<&Path> = ids.iter().map(|&l| &lanes[l].path).collect();
            let path = concat(&paths).ok_or_else(|| MapError::Parse {
                line,
                message: "route polyline is degenerate".into(),
            })?;
            built.push(Route { kind, lanes: ids, path });
        }
        let spawns = spawns
            .into_iter()
            .map(|(line, s)| {
                if s.route >= built.len() {
                    Err(MapError::Parse {
                        line,
                        message: format!("unknown route {}", s.route),
                    })
                } else {
                    Ok(s)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let (line, ego) = ego.ok_or_else(|| MapError::Invalid("missing `ego` line".into()))?;
        for &l in &ego.lanes {
            check(line, l)?;
        }
        let graph = Self {
            lanes,
            routes: built,
            spawns,
            ego,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn validate(&self) -> Result<(), MapError> {
        for (i, l) in self.lanes.iter().enumerate() {
            if let Some(left) = l.left {
                if self.lanes.get(left).and_then(|x| x.right) != Some(i) {
                    return Err(MapError::Invalid(format!("lane {i}: adjacency not symmetric")));
                }
            }
            if let Some(right) = l.right {
                if self.lanes.get(right).and_then(|x| x.left) != Some(i) {
                    return Err(MapError::Invalid(format!("lane {i}: adjacency not symmetric")));
                }
            }
        }
        if self.ego.lanes.is_empty() {
            return Err(MapError::Invalid("ego needs at least one lane".into()));
        }
        if self.spawns.is_empty() {
            return Err(MapError::Invalid("map has no spawn points".into()));
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("guidedplan-map 1\n");
        for (i, l) in self.lanes.iter().enumerate() {
            let pts: Vec<String> = l.path.points().iter().map(|p| format!("{:?},{:?}", p.x, p.y)).collect();
            writeln!(out, "lane {i} {}", pts.join(" ")).unwrap();
        }
        for (i, l) in self.lanes.iter().enumerate() {
            if let Some(left) = l.left {
                writeln!(out, "left {i} {left}").unwrap();
            }
            for s in &l.successors {
                writeln!(out, "succ {i} {s}").unwrap();
            }
        }
        for (i, r) in self.routes.iter().enumerate() {
            let ids: Vec<String> = r.lanes.iter().map(|l| l.to_string()).collect();
            writeln!(out, "route {i} {} {}", r.kind.name(), ids.join(" ")).unwrap();
        }
        for s in &self.spawns {
            writeln!(out, "spawn {} {:?} {:?} {:?} {:?}", s.route, s.s.0, s.s.1, s.speed.0, s.speed.1).unwrap();
        }
        let ids: Vec<String> = self.ego.lanes.iter().map(|l| l.to_string()).collect();
        writeln!(out, "ego {:?} {:?} {:?} {}", self.ego.start_s.0, self.ego.start_s.1, self.ego.goal_s, ids.join(" ")).unwrap();
        out
    }

    /// The same map moved by a rigid motion.
    pub fn transformed(&self, rotation: f64, shift: Vec2) -> Self {
        let mut g = self.clone();
        for l in &mut g.lanes {
            l.path = l.path.transformed(rotation, shift);
        }
        for r in &mut g.routes {
            r.path = r.path.transformed(rotation, shift);
        }
        g
    }

    /// Two-road uncontrolled intersection. The ego drives east on a
    /// two-lane road; crossing traffic may go straight or turn into the
    /// ego's road, oncoming traffic goes west, slow cars travel ahead of
    /// the ego and pedestrians cross downstream of the junction.
    pub fn default_intersection() -> Self {
        Self::parse(DEFAULT_MAP).expect("built-in map is valid")
    }
}

pub const DEFAULT_MAP: &str = "\
guidedplan-map 1
# eastbound, ego lanes
lane 0 -60,-1.75 60,-1.75
lane 1 -60,-5.25 60,-5.25
# westbound
lane 2 60,1.75 -60,1.75
# northbound approach, straight exit, right turn east
lane 3 1.75,-60 1.75,-9
lane 4 1.75,-9 1.75,60
lane 5 1.75,-9 3,-4.5 6,-2.3 10,-1.75 60,-1.75
# southbound approach, straight exit, left turn east
lane 6 -1.75,60 -1.75,9
lane 7 -1.75,9 -1.75,-60
lane 8 -1.75,9 -1.2,2 1.5,-2.5 6,-4.8 10,-5.25 60,-5.25
# crosswalk east of the junction
lane 9 14,-9 14,9
lane 10 14,9 14,-9
left 1 0
succ 3 4
succ 3 5
succ 6 7
succ 6 8
route 0 car 3 4
route 1 car 3 5
route 2 car 6 7
route 3 car 6 8
route 4 car 2
route 5 car 0
route 6 car 1
route 7 pedestrian 9
route 8 pedestrian 10
spawn 0 10 40 3 5
spawn 1 10 40 3 5
spawn 2 10 40 3 5
spawn 3 10 40 3 5
spawn 4 20 70 3 5
spawn 5 38 48 1 2.5
spawn 6 38 48 1 2.5
spawn 7 0 6 0.8 1.4
spawn 8 0 6 0.8 1.4
ego 25 30 85 0 1
";
