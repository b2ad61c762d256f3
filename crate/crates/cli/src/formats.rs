//! File formats: plane dumps (CSV, PGM), critic masks, rule bases,
//! datasets, trajectories and metrics.
//!
//! Reals are written with Rust's shortest round-trip formatting, so every
//! dump is exact and byte-stable across runs.

use std::fmt::Write as _;

use ralm_core::alm::Dataset;
use ralm_core::critic::Region;
use ralm_core::fuzzy::{FuzzySystem, Rule, Trapezoid};
use ralm_core::grid::{GridSpec, NarrowLine, Plane};
use ralm_core::learner::{LogRow, Metrics};

use crate::error::{invalid, usage, Result};

pub const RULES_HEADER: &str = "RALM-FS v1";
/// Points written per consequent line.
pub const LINE_POINTS: usize = 65;

fn join(values: impl IntoIterator<Item = f64>, sep: &str) -> String {
    let mut s = String::new();
    for (k, v) in values.into_iter().enumerate() {
        if k > 0 {
            s.push_str(sep);
        }
        write!(s, "{v}").unwrap();
    }
    s
}

fn real(token: &str, what: &str) -> Result<f64> {
    token.trim().parse::<f64>().map_err(|_| usage(format!("{what}: not a number: {token:?}")))
}

fn plane_header(kind: &str, s: &GridSpec) -> String {
    format!("# {kind} x:[{},{}] y:[{},{}] {} {}\n", s.x_min, s.x_max, s.y_min, s.y_max, s.nx, s.ny)
}

fn parse_header(line: &str, kind: &str) -> Result<GridSpec> {
    let bad = || usage(format!("malformed {kind} header: {line:?}"));
    let rest = line.strip_prefix("# ").and_then(|l| l.strip_prefix(kind)).ok_or_else(bad)?;
    let mut parts = rest.split_whitespace();
    let mut range = |tag: &str| -> Result<(f64, f64)> {
        let body = parts.next().and_then(|p| p.strip_prefix(tag)).and_then(|p| p.strip_prefix('[')).and_then(|p| p.strip_suffix(']')).ok_or_else(bad)?;
        let (a, b) = body.split_once(',').ok_or_else(bad)?;
        Ok((real(a, kind)?, real(b, kind)?))
    };
    let x = range("x:")?;
    let y = range("y:")?;
    let nx = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    let ny = parts.next().and_then(|t| t.parse().ok()).ok_or_else(bad)?;
    GridSpec::new(x, y, nx, ny).map_err(invalid)
}

/// One CSV row per y cell, lowest y first.
pub fn plane_csv(plane: &Plane) -> String {
    let s = plane.spec();
    let mut out = plane_header("plane", s);
    for row in plane.values().chunks(s.nx) {
        out.push_str(&join(row.iter().copied(), ","));
        out.push('\n');
    }
    out
}

pub fn parse_plane_csv(text: &str) -> Result<Plane> {
    let mut lines = text.lines();
    let spec = parse_header(lines.next().unwrap_or(""), "plane")?;
    let mut values = Vec::with_capacity(spec.nx * spec.ny);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        let row = line.split(',').map(|t| real(t, "plane")).collect::<Result<Vec<_>>>()?;
        if row.len() != spec.nx {
            return Err(usage(format!("plane row has {} values, expected {}", row.len(), spec.nx)));
        }
        values.extend(row);
    }
    Plane::from_values(spec, values).map_err(invalid)
}

/// Plain PGM (P2), highest y on top; min maps to 0 and max to 255.
pub fn plane_pgm(plane: &Plane) -> String {
    let s = plane.spec();
    let (lo, hi) = plane.min_max();
    let scale = if hi > lo { 255.0 / (hi - lo) } else { 0.0 };
    let mut out = format!("P2\n{}", plane_header("plane", s));
    writeln!(out, "{} {}\n255", s.nx, s.ny).unwrap();
    for iy in (0..s.ny).rev() {
        let row: Vec<String> = (0..s.nx).map(|ix| format!("{}", ((plane.get(ix, iy) - lo) * scale).round() as u8)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

/// Region letters (R reward, P penalty, Y play), one row per y cell.
pub fn mask_csv(spec: &GridSpec, mask: &[Region]) -> String {
    let mut out = plane_header("mask", spec);
    for row in mask.chunks(spec.nx) {
        let letters: Vec<String> = row.iter().map(|r| r.letter().to_string()).collect();
        out.push_str(&letters.join(","));
        out.push('\n');
    }
    out
}

pub fn parse_mask_csv(text: &str) -> Result<(GridSpec, Vec<Region>)> {
    let mut lines = text.lines();
    let spec = parse_header(lines.next().unwrap_or(""), "mask")?;
    let mut mask = Vec::with_capacity(spec.nx * spec.ny);
    for line in lines.filter(|l| !l.trim().is_empty()) {
        for t in line.split(',') {
            let mut chars = t.trim().chars();
            let region = match (chars.next(), chars.next()) {
                (Some(c), None) => Region::from_letter(c),
                _ => None,
            };
            mask.push(region.ok_or_else(|| usage(format!("bad mask letter {t:?}")))?);
        }
    }
    if mask.len() != spec.nx * spec.ny {
        return Err(usage(format!("mask has {} cells, expected {}", mask.len(), spec.nx * spec.ny)));
    }
    Ok((spec, mask))
}

/// Rule base as versioned text.
///
/// ```text
/// RALM-FS v1
/// inputs 2
/// range -0.9 0.9
/// range -4.3 4.3
/// output -25 25
/// rules 4
///
/// rule
/// mf <a> <b> <c> <d>             one per input
/// line <x_min> <x_max> <y_0> ... one per input, 65 points
/// weights <w_0> ...
/// end
/// ```
///
/// Only the rules are stored: backing planes and reward scaling are not.
pub fn rules_text(fs: &FuzzySystem) -> String {
    let mut out = format!("{RULES_HEADER}\ninputs {}\n", fs.input_count());
    for r in fs.input_ranges() {
        writeln!(out, "range {} {}", r.0, r.1).unwrap();
    }
    let o = fs.output_range();
    writeln!(out, "output {} {}\nrules {}", o.0, o.1, fs.rules().len()).unwrap();
    for rule in fs.rules() {
        out.push_str("\nrule\n");
        for t in &rule.antecedent {
            writeln!(out, "mf {} {} {} {}", t.a, t.b, t.c, t.d).unwrap();
        }
        for l in &rule.lines {
            writeln!(out, "line {} {} {}", l.x_min, l.x_max, join(l.sample(LINE_POINTS), " ")).unwrap();
        }
        writeln!(out, "weights {}\nend", join(rule.weights.iter().copied(), " ")).unwrap();
    }
    out
}

struct Tokens<'a> {
    lines: std::iter::Peekable<std::iter::Filter<std::str::Lines<'a>, fn(&&str) -> bool>>,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let keep: fn(&&str) -> bool = |l| !l.trim().is_empty();
        Tokens { lines: text.lines().filter(keep).peekable() }
    }

    /// Next line, which must start with `key`; returns the remaining words.
    fn expect(&mut self, key: &str) -> Result<Vec<&'a str>> {
        let line = self.lines.next().ok_or_else(|| usage(format!("rule base ends early; expected `{key}`")))?;
        let mut words = line.split_whitespace();
        if words.next() != Some(key) {
            return Err(usage(format!("rule base: expected `{key}`, found {line:?}")));
        }
        Ok(words.collect())
    }

    fn reals(&mut self, key: &str, n: Option<usize>) -> Result<Vec<f64>> {
        let words = self.expect(key)?;
        if n.is_some_and(|n| n != words.len()) {
            return Err(usage(format!("rule base: `{key}` needs {} values, found {}", n.unwrap(), words.len())));
        }
        words.iter().map(|w| real(w, key)).collect()
    }

    fn count(&mut self, key: &str) -> Result<usize> {
        let words = self.expect(key)?;
        match words.as_slice() {
            [n] => n.parse().map_err(|_| usage(format!("rule base: bad `{key}` count {n:?}"))),
            _ => Err(usage(format!("rule base: `{key}` takes one count"))),
        }
    }
}

pub fn parse_rules(text: &str) -> Result<FuzzySystem> {
    let first = text.lines().next().unwrap_or("").trim();
    if first != RULES_HEADER {
        return Err(match first.strip_prefix("RALM-FS ") {
            Some(v) => usage(format!("unsupported rule base version {v:?}; expected v1")),
            None => usage("not a RALM-FS rule base"),
        });
    }
    let mut t = Tokens::new(text);
    t.lines.next();
    let m = t.count("inputs")?;
    let ranges = (0..m).map(|_| t.reals("range", Some(2)).map(|r| (r[0], r[1]))).collect::<Result<Vec<_>>>()?;
    let o = t.reals("output", Some(2))?;
    let n = t.count("rules")?;
    if n == 0 {
        return Err(usage("rule base has no rules"));
    }
    let mut rules = Vec::with_capacity(n);
    for _ in 0..n {
        t.expect("rule")?;
        let antecedent = (0..m)
            .map(|_| {
                let v = t.reals("mf", Some(4))?;
                Trapezoid::new(v[0], v[1], v[2], v[3]).map_err(invalid)
            })
            .collect::<Result<Vec<_>>>()?;
        let lines = (0..m)
            .map(|_| {
                let v = t.reals("line", None)?;
                if v.len() < 4 {
                    return Err(usage("rule base: `line` needs a range and at least 2 points"));
                }
                NarrowLine::from_samples((v[0], v[1]), v[2..].to_vec()).map_err(invalid)
            })
            .collect::<Result<Vec<_>>>()?;
        let weights = t.reals("weights", Some(m))?;
        t.expect("end")?;
        rules.push(Rule { antecedent, lines, weights });
    }
    if let Some(extra) = t.lines.next() {
        return Err(usage(format!("rule base: unexpected trailing line {extra:?}")));
    }
    FuzzySystem::new(rules, ranges, (o[0], o[1])).map_err(invalid)
}

fn csv_text(header: Vec<String>, rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).unwrap();
    for r in rows {
        w.write_record(&r).unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// `in_0,...,in_{m-1},out`
pub fn dataset_csv(data: &Dataset) -> String {
    let mut header: Vec<String> = (0..data.input_count()).map(|i| format!("in_{i}")).collect();
    header.push("out".into());
    csv_text(
        header,
        data.samples().iter().map(|s| s.inputs.iter().chain([&s.output]).map(|v| v.to_string()).collect()),
    )
}

/// `step,t,in_0..in_{m-1},action,e,ce,rpp_value,delta,region`
pub fn trajectory_csv(rows: &[LogRow], inputs: usize) -> String {
    let mut header = vec!["step".to_string(), "t".into()];
    header.extend((0..inputs).map(|i| format!("in_{i}")));
    header.extend(["action", "e", "ce", "rpp_value", "delta", "region"].map(String::from));
    csv_text(
        header,
        rows.iter().map(|r| {
            let mut rec = vec![r.step.to_string(), r.t.to_string()];
            rec.extend(r.inputs.iter().map(|v| v.to_string()));
            rec.extend([r.action, r.e, r.ce, r.rpp_value, r.delta].map(|v| v.to_string()));
            rec.push(r.region.letter().to_string());
            rec
        }),
    )
}

/// Header plus one row; missing values are empty fields.
pub fn metrics_csv(m: &Metrics, success_rate: Option<f64>) -> String {
    let mut header = ["rise_time", "overshoot", "success_count", "steps_to_stable", "episodes", "steps", "penalty_count"].map(String::from).to_vec();
    let mut row = vec![
        opt(m.rise_time),
        m.overshoot.to_string(),
        m.success_count.to_string(),
        opt(m.steps_to_stable),
        m.episodes.to_string(),
        m.steps.to_string(),
        m.penalty_count.to_string(),
    ];
    if let Some(rate) = success_rate {
        header.push("success_rate".into());
        row.push(rate.to_string());
    }
    csv_text(header, [row])
}

/// Start states, one per row; a header row of names is skipped.
pub fn parse_states_csv(text: &str, inputs: usize) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| usage(format!("initial states: {e}")))?;
        if k == 0 && rec.iter().any(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() != inputs {
            return Err(usage(format!("initial states row {} has {} values, expected {inputs}", k + 1, rec.len())));
        }
        out.push(rec.iter().map(|f| real(f, "initial states")).collect::<Result<Vec<_>>>()?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ralm_core::critic::{Rpp, RppConfig};
    use ralm_core::grid::InkWindow;
    use ralm_core::presets::linear_seed;

    #[test]
    fn plane_round_trip() {
        let spec = GridSpec::new((-1.0, 1.0), (-0.3, 0.7), 5, 4).unwrap();
        let mut p = Plane::new(spec).unwrap();
        p.drop_ink(0.1, 0.2, &InkWindow::pyramid(2, 2), 0.7).unwrap();
        p.drop_ink(-0.6, -0.1, &InkWindow::gaussian(1, 1), -1.0 / 3.0).unwrap();
        let text = plane_csv(&p);
        assert!(text.starts_with("# plane x:[-1,1] y:[-0.3,0.7] 5 4\n"));
        assert_eq!(parse_plane_csv(&text).unwrap(), p);
    }

    #[test]
    fn fresh_critic_image_has_three_levels() {
        let rpp = Rpp::new(RppConfig::default()).unwrap();
        let pgm = plane_pgm(rpp.plane());
        let mut levels: Vec<&str> = pgm.lines().skip(4).flat_map(|l| l.split(' ')).collect();
        levels.sort();
        levels.dedup();
        assert_eq!(levels, ["0", "255", "85"]);
        let (spec, mask) = parse_mask_csv(&mask_csv(rpp.plane().spec(), rpp.mask())).unwrap();
        assert_eq!(spec, *rpp.plane().spec());
        assert_eq!(mask, rpp.mask());
    }

    #[test]
    fn rules_round_trip() {
        let fs = linear_seed(&[(-1.0, 1.0), (-2.0, 2.0)], (-3.0, 3.0), &[1.5, -0.5], 17, 1.0).unwrap();
        let text = rules_text(&fs);
        let back = parse_rules(&text).unwrap();
        assert_eq!(rules_text(&back), text);
        for x in [-0.9, -0.2, 0.0, 0.45, 1.0] {
            assert!((back.infer(&[x, 0.3]).unwrap() - fs.infer(&[x, 0.3]).unwrap()).abs() < 1e-9);
        }
    }

    #[test]
    fn rule_base_validation() {
        let fs = linear_seed(&[(-1.0, 1.0)], (-1.0, 1.0), &[1.0], 9, 1.0).unwrap();
        let text = rules_text(&fs);
        let none = "RALM-FS v1\ninputs 1\nrange -1 1\noutput -1 1\nrules 0\n";
        assert!(parse_rules(none).unwrap_err().to_string().contains("no rules"));
        assert!(parse_rules(&text.replace("v1", "v2")).unwrap_err().to_string().contains("version"));
        assert!(parse_rules(&text.replace("weights 1", "weights 2")).is_err());
        assert!(parse_rules(&format!("{text}junk\n")).is_err());
    }

    #[test]
    fn states_with_and_without_header() {
        let a = parse_states_csv("in_0,in_1\n0.1,0.2\n-0.3, 0.4\n", 2).unwrap();
        assert_eq!(a, vec![vec![0.1, 0.2], vec![-0.3, 0.4]]);
        assert_eq!(parse_states_csv("0.5,1\n", 2).unwrap().len(), 1);
        assert!(parse_states_csv("0.5\n", 2).is_err());
    }

    #[test]
    fn metrics_row_leaves_missing_values_empty() {
        let m = Metrics { overshoot: 1.5, success_count: 3, ..Metrics::default() };
        assert_eq!(metrics_csv(&m, None), "rise_time,overshoot,success_count,steps_to_stable,episodes,steps,penalty_count\n,1.5,3,,0,0,0\n");
    }
}
