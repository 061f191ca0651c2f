//! Line-oriented scenario scripts (`.ccs`).
//!
//! ```text
//! # comment
//! scenario A                      # or: scenario custom <name>
//! layout two_by_two               # required for custom scenarios
//! ego crosses                     # crosses | turns left | turns right
//! adversary opposite turns left   # opposite | perpendicular, then a maneuver
//! param EGO_SPEED in [5, 80] kmh  # kmh for speeds, m for distances, none for EGO_BRAKE
//! sim timestep 0.05               # timestep | horizon | interaction_radius
//! ```
//!
//! Keywords are case-insensitive; parameter names and custom scenario
//! names are case-sensitive.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::scenario_model::{
    template_spec, template_with_geometry, Approach, GeometryParams, LaneLayout, ManeuverKind, Param,
    ParameterRange, RangeSet, ScenarioId, ScenarioTemplate, Unit,
};
use crate::simulator::SimulationConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// A positioned message; `line` and `column` are 1-based.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseDiagnostic {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub severity: Severity,
}

impl ParseDiagnostic {
    fn error(line: usize, column: usize, message: impl Into<String>) -> Self {
        Self {
            line,
            column,
            message: message.into(),
            severity: Severity::Error,
        }
    }
}

impl fmt::Display for ParseDiagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{}:{}: {sev}: {}", self.line, self.column, self.message)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamDecl {
    pub param: Param,
    pub low: f64,
    pub high: f64,
    pub unit: Unit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdversaryDecl {
    pub approach: Approach,
    pub maneuver: ManeuverKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimDecls {
    pub timestep: Option<f64>,
    pub horizon: Option<f64>,
    pub interaction_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScriptAst {
    pub scenario_id: ScenarioId,
    pub layout: Option<LaneLayout>,
    pub ego: ManeuverKind,
    pub adversary: AdversaryDecl,
    pub params: Vec<ParamDecl>,
    pub sim: SimDecls,
}

// ---------------------------------------------------------------- lexing

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Word(String),
    Num(f64),
    LBracket,
    RBracket,
    Comma,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    col: usize,
}

fn lex_line(line: &str, lineno: usize) -> Result<Vec<Token>, ParseDiagnostic> {
    let chars: Vec<char> = line.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '[' => Some(Tok::LBracket),
            ']' => Some(Tok::RBracket),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, col });
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Word(chars[start..i].iter().collect()),
                col,
            });
        } else if c.is_ascii_digit() || c == '-' || c == '+' || c == '.' {
            let start = i;
            i += 1;
            while i < chars.len() {
                let d = chars[i];
                let exp_sign = (d == '-' || d == '+') && matches!(chars[i - 1], 'e' | 'E');
                if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| ParseDiagnostic::error(lineno, col, format!("lexical error: malformed number '{text}'")))?;
            out.push(Token { tok: Tok::Num(value), col });
        } else {
            return Err(ParseDiagnostic::error(
                lineno,
                col,
                format!("lexical error: unexpected character '{c}'"),
            ));
        }
    }
    Ok(out)
}

// --------------------------------------------------------------- parsing

struct LineParser<'a> {
    toks: &'a [Token],
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> LineParser<'a> {
    fn col(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end_col, |t| t.col)
    }

    fn err(&self, message: impl Into<String>) -> ParseDiagnostic {
        ParseDiagnostic::error(self.line, self.col(), message)
    }

    fn next(&mut self) -> Option<&'a Token> {
        let t = self.toks.get(self.pos);
        self.pos += 1;
        t
    }

    fn word(&mut self, what: &str) -> Result<String, ParseDiagnostic> {
        match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Word(w), .. }) => {
                self.pos += 1;
                Ok(w.clone())
            }
            _ => Err(self.err(format!("syntax error: expected {what}"))),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), ParseDiagnostic> {
        let col = self.col();
        let w = self.word(&format!("'{kw}'"))?;
        if w.eq_ignore_ascii_case(kw) {
            Ok(())
        } else {
            Err(ParseDiagnostic::error(self.line, col, format!("syntax error: expected '{kw}', found '{w}'")))
        }
    }

    fn number(&mut self, what: &str) -> Result<f64, ParseDiagnostic> {
        match self.toks.get(self.pos) {
            Some(Token { tok: Tok::Num(v), .. }) => {
                self.pos += 1;
                Ok(*v)
            }
            _ => Err(self.err(format!("syntax error: expected {what}"))),
        }
    }

    fn punct(&mut self, p: Tok, shown: char) -> Result<(), ParseDiagnostic> {
        if self.toks.get(self.pos).map(|t| &t.tok) == Some(&p) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("syntax error: expected '{shown}'")))
        }
    }

    fn finish(&self) -> Result<(), ParseDiagnostic> {
        if self.pos < self.toks.len() {
            Err(self.err("syntax error: unexpected trailing tokens"))
        } else {
            Ok(())
        }
    }

    fn maneuver(&mut self) -> Result<ManeuverKind, ParseDiagnostic> {
        let col = self.col();
        let w = self.word("a maneuver ('crosses', 'turns left' or 'turns right')")?;
        match w.to_ascii_lowercase().as_str() {
            "crosses" => Ok(ManeuverKind::CrossStraight),
            "turns" => {
                let col = self.col();
                let dir = self.word("'left' or 'right'")?;
                match dir.to_ascii_lowercase().as_str() {
                    "left" => Ok(ManeuverKind::LeftTurn),
                    "right" => Ok(ManeuverKind::RightTurn),
                    _ => Err(ParseDiagnostic::error(self.line, col, format!("syntax error: expected 'left' or 'right', found '{dir}'"))),
                }
            }
            _ => Err(ParseDiagnostic::error(self.line, col, format!("syntax error: unknown maneuver '{w}'"))),
        }
    }
}

enum Stmt {
    Scenario(ScenarioId),
    Layout(LaneLayout),
    Ego(ManeuverKind),
    Adversary(AdversaryDecl),
    Param(ParamDecl),
    Sim(SimKey, f64),
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum SimKey {
    Timestep,
    Horizon,
    InteractionRadius,
}

fn parse_stmt(p: &mut LineParser<'_>) -> Result<Stmt, ParseDiagnostic> {
    let head_col = p.col();
    let head = p.word("a statement keyword")?;
    let stmt = match head.to_ascii_lowercase().as_str() {
        "scenario" => {
            let col = p.col();
            let id = p.word("a scenario id (A-F or 'custom')")?;
            if id.eq_ignore_ascii_case("custom") {
                let name = if p.pos < p.toks.len() {
                    let col = p.col();
                    let n = p.word("a custom scenario name")?;
                    if ScenarioId::from_str(&n).is_ok() {
                        return Err(ParseDiagnostic::error(p.line, col, format!("custom scenario name '{n}' collides with a built-in id")));
                    }
                    n
                } else {
                    "custom".to_string()
                };
                Stmt::Scenario(ScenarioId::Custom(name))
            } else {
                Stmt::Scenario(
                    ScenarioId::from_str(&id)
                        .map_err(|_| ParseDiagnostic::error(p.line, col, format!("unknown scenario '{id}'")))?,
                )
            }
        }
        "layout" => {
            let col = p.col();
            let w = p.word("'two_by_two' or 'three_lane'")?;
            Stmt::Layout(match w.to_ascii_lowercase().as_str() {
                "two_by_two" => LaneLayout::TwoByTwo,
                "three_lane" => LaneLayout::ThreeLane,
                _ => return Err(ParseDiagnostic::error(p.line, col, format!("unknown layout '{w}'"))),
            })
        }
        "ego" => Stmt::Ego(p.maneuver()?),
        "adversary" => {
            let col = p.col();
            let w = p.word("'opposite' or 'perpendicular'")?;
            let approach = match w.to_ascii_lowercase().as_str() {
                "opposite" => Approach::SameRoadOpposite,
                "perpendicular" => Approach::Perpendicular,
                _ => return Err(ParseDiagnostic::error(p.line, col, format!("syntax error: expected 'opposite' or 'perpendicular', found '{w}'"))),
            };
            Stmt::Adversary(AdversaryDecl {
                approach,
                maneuver: p.maneuver()?,
            })
        }
        "param" => {
            let col = p.col();
            let name = p.word("a parameter name")?;
            let param = Param::from_str(&name)
                .map_err(|_| ParseDiagnostic::error(p.line, col, format!("unknown parameter '{name}'")))?;
            p.keyword("in")?;
            p.punct(Tok::LBracket, '[')?;
            let low = p.number("a lower bound")?;
            p.punct(Tok::Comma, ',')?;
            let high = p.number("an upper bound")?;
            p.punct(Tok::RBracket, ']')?;
            let unit_col = p.col();
            let unit = match p.next() {
                None => Unit::Dimensionless,
                Some(Token { tok: Tok::Word(u), .. }) => match u.to_ascii_lowercase().as_str() {
                    "kmh" => Unit::KmPerH,
                    "m" => Unit::Meters,
                    _ => return Err(ParseDiagnostic::error(p.line, unit_col, format!("unknown unit '{u}'"))),
                },
                Some(_) => return Err(ParseDiagnostic::error(p.line, unit_col, "syntax error: expected a unit")),
            };
            if unit != param.unit() {
                return Err(ParseDiagnostic::error(
                    p.line,
                    unit_col,
                    format!("unit mismatch: {param} is measured in {}", unit_keyword(param.unit()).unwrap_or("no unit")),
                ));
            }
            if low > high {
                return Err(ParseDiagnostic::error(p.line, head_col, "range low exceeds high"));
            }
            let decl = ParamDecl { param, low, high, unit };
            if !to_range(&decl).within_bounds() {
                let (lo, hi) = param.bounds();
                return Err(ParseDiagnostic::error(
                    p.line,
                    head_col,
                    format!("range outside legal bounds [{lo}, {hi}] of {param}"),
                ));
            }
            Stmt::Param(decl)
        }
        "sim" => {
            let col = p.col();
            let key = p.word("a simulation setting")?;
            let key = match key.to_ascii_lowercase().as_str() {
                "timestep" => SimKey::Timestep,
                "horizon" => SimKey::Horizon,
                "interaction_radius" => SimKey::InteractionRadius,
                _ => return Err(ParseDiagnostic::error(p.line, col, format!("unknown simulation setting '{key}'"))),
            };
            let vcol = p.col();
            let v = p.number("a value")?;
            if v <= 0.0 {
                return Err(ParseDiagnostic::error(p.line, vcol, "simulation setting must be positive"));
            }
            Stmt::Sim(key, v)
        }
        _ => return Err(ParseDiagnostic::error(p.line, head_col, format!("unknown keyword '{head}'"))),
    };
    p.finish()?;
    Ok(stmt)
}

fn unit_keyword(u: Unit) -> Option<&'static str> {
    match u {
        Unit::KmPerH => Some("kmh"),
        Unit::Meters => Some("m"),
        Unit::Dimensionless => None,
    }
}

fn to_range(d: &ParamDecl) -> ParameterRange {
    ParameterRange {
        param: d.param,
        low: d.low,
        high: d.high,
        unit: d.unit,
    }
}

/// Parses a script. Every line is examined, so all independent errors are
/// reported together.
pub fn parse(source: &str) -> Result<ScriptAst, Vec<ParseDiagnostic>> {
    let mut diags = Vec::new();
    let mut scenario: Option<(ScenarioId, usize)> = None;
    let mut layout: Option<(LaneLayout, usize)> = None;
    let mut ego: Option<(ManeuverKind, usize)> = None;
    let mut adversary: Option<(AdversaryDecl, usize)> = None;
    let mut params: Vec<ParamDecl> = Vec::new();
    let mut sim = SimDecls::default();

    for (idx, raw) in source.lines().enumerate() {
        let line = idx + 1;
        let toks = match lex_line(raw, line) {
            Ok(t) => t,
            Err(d) => {
                diags.push(d);
                continue;
            }
        };
        if toks.is_empty() {
            continue;
        }
        let mut p = LineParser {
            toks: &toks,
            pos: 0,
            line,
            end_col: raw.chars().count() + 1,
        };
        let stmt = match parse_stmt(&mut p) {
            Ok(s) => s,
            Err(d) => {
                diags.push(d);
                continue;
            }
        };
        let dup = |what: &str, first: usize| {
            ParseDiagnostic::error(line, 1, format!("duplicate {what} declaration (first on line {first})"))
        };
        match stmt {
            Stmt::Scenario(id) => match &scenario {
                Some((_, first)) => diags.push(dup("scenario", *first)),
                None => scenario = Some((id, line)),
            },
            Stmt::Layout(l) => match layout {
                Some((_, first)) => diags.push(dup("layout", first)),
                None => layout = Some((l, line)),
            },
            Stmt::Ego(m) => match ego {
                Some((_, first)) => diags.push(dup("ego", first)),
                None => ego = Some((m, line)),
            },
            Stmt::Adversary(a) => match adversary {
                Some((_, first)) => diags.push(dup("adversary", first)),
                None => adversary = Some((a, line)),
            },
            Stmt::Param(d) => {
                if params.iter().any(|q| q.param == d.param) {
                    diags.push(ParseDiagnostic::error(line, 1, format!("duplicate parameter {}", d.param)));
                } else {
                    params.push(d);
                }
            }
            Stmt::Sim(key, v) => {
                let slot = match key {
                    SimKey::Timestep => &mut sim.timestep,
                    SimKey::Horizon => &mut sim.horizon,
                    SimKey::InteractionRadius => &mut sim.interaction_radius,
                };
                if slot.replace(v).is_some() {
                    diags.push(ParseDiagnostic::error(line, 1, "duplicate simulation setting"));
                }
            }
        }
    }

    let eof = source.lines().count().max(1);
    let Some((scenario_id, scenario_line)) = scenario else {
        diags.push(ParseDiagnostic::error(1, 1, "missing scenario declaration"));
        return Err(diags);
    };
    if ego.is_none() {
        diags.push(ParseDiagnostic::error(eof, 1, "missing vehicle declaration: ego"));
    }
    if adversary.is_none() {
        diags.push(ParseDiagnostic::error(eof, 1, "missing vehicle declaration: adversary"));
    }
    match (template_spec(&scenario_id), layout) {
        (None, None) => diags.push(ParseDiagnostic::error(
            scenario_line,
            1,
            "custom scenario requires a layout declaration",
        )),
        (Some((l, ..)), Some((declared, line))) if l != declared => diags.push(ParseDiagnostic::error(
            line,
            1,
            format!("declaration conflicts with template {scenario_id}: layout"),
        )),
        _ => {}
    }
    if let Some((_, e, a, approach)) = template_spec(&scenario_id) {
        if let Some((_, line)) = ego.filter(|(m, _)| *m != e) {
            diags.push(ParseDiagnostic::error(line, 1, format!("declaration conflicts with template {scenario_id}: ego maneuver")));
        }
        if let Some((_, line)) = adversary.filter(|(d, _)| d.maneuver != a || d.approach != approach) {
            diags.push(ParseDiagnostic::error(line, 1, format!("declaration conflicts with template {scenario_id}: adversary")));
        }
    }
    if !diags.is_empty() {
        diags.sort_by_key(|d| (d.line, d.column));
        return Err(diags);
    }
    Ok(ScriptAst {
        scenario_id,
        layout: layout.map(|(l, _)| l),
        ego: ego.expect("checked").0,
        adversary: adversary.expect("checked").0,
        params,
        sim,
    })
}

/// Compiles with the default intersection geometry.
pub fn compile(ast: &ScriptAst) -> Result<(ScenarioTemplate, RangeSet, SimulationConfig), Vec<ParseDiagnostic>> {
    compile_with_geometry(ast, GeometryParams::default())
}

/// Compile-time errors carry no source position and are reported at 1:1.
pub fn compile_with_geometry(
    ast: &ScriptAst,
    geometry: GeometryParams,
) -> Result<(ScenarioTemplate, RangeSet, SimulationConfig), Vec<ParseDiagnostic>> {
    let whole = |m: String| vec![ParseDiagnostic::error(1, 1, m)];
    let template = match template_spec(&ast.scenario_id) {
        Some(_) => template_with_geometry(&ast.scenario_id, geometry),
        None => ScenarioTemplate::new(
            ast.scenario_id.clone(),
            ast.layout.ok_or_else(|| whole("custom scenario requires a layout declaration".into()))?,
            ast.ego,
            ast.adversary.maneuver,
            ast.adversary.approach,
            geometry,
        ),
    }
    .map_err(|e| whole(e.to_string()))?;
    let overrides: Vec<ParameterRange> = ast.params.iter().map(to_range).collect();
    let ranges = RangeSet::with_overrides(&overrides).map_err(|e| whole(e.to_string()))?;
    let defaults = SimulationConfig::default();
    let sim = SimulationConfig {
        timestep: ast.sim.timestep.unwrap_or(defaults.timestep),
        horizon: ast.sim.horizon.unwrap_or(defaults.horizon),
        interaction_radius: ast.sim.interaction_radius.unwrap_or(defaults.interaction_radius),
    };
    sim.validate().map_err(|e| whole(e.to_string()))?;
    Ok((template, ranges, sim))
}

/// Parses and compiles in one step.
pub fn load(source: &str) -> Result<(ScriptAst, ScenarioTemplate, RangeSet, SimulationConfig), Vec<ParseDiagnostic>> {
    let ast = parse(source)?;
    let (t, r, s) = compile(&ast)?;
    Ok((ast, t, r, s))
}

// ------------------------------------------------------------ formatting

fn maneuver_text(m: ManeuverKind) -> &'static str {
    match m {
        ManeuverKind::CrossStraight => "crosses",
        ManeuverKind::LeftTurn => "turns left",
        ManeuverKind::RightTurn => "turns right",
    }
}

/// Canonical text of a script. Undeclared parameters produce no lines.
pub fn format(ast: &ScriptAst) -> String {
    let mut out = String::new();
    match &ast.scenario_id {
        ScenarioId::Custom(name) => writeln!(out, "scenario custom {name}"),
        id => writeln!(out, "scenario {id}"),
    }
    .expect("writing to a String");
    if let Some(l) = ast.layout {
        out.push_str(match l {
            LaneLayout::TwoByTwo => "layout two_by_two\n",
            LaneLayout::ThreeLane => "layout three_lane\n",
        });
    }
    let _ = writeln!(out, "ego {}", maneuver_text(ast.ego));
    let approach = match ast.adversary.approach {
        Approach::SameRoadOpposite => "opposite",
        Approach::Perpendicular => "perpendicular",
    };
    let _ = writeln!(out, "adversary {approach} {}", maneuver_text(ast.adversary.maneuver));
    for d in &ast.params {
        let _ = write!(out, "param {} in [{}, {}]", d.param, d.low, d.high);
        if let Some(u) = unit_keyword(d.unit) {
            let _ = write!(out, " {u}");
        }
        out.push('\n');
    }
    for (key, v) in [
        ("timestep", ast.sim.timestep),
        ("horizon", ast.sim.horizon),
        ("interaction_radius", ast.sim.interaction_radius),
    ] {
        if let Some(v) = v {
            let _ = writeln!(out, "sim {key} {v}");
        }
    }
    out
}
