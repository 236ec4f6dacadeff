// SPDX-License-Identifier: Apache-2.0

//! SPICE-subset netlist reader and writer.
//!
//! ```text
//! * comment
//! Rname a b ohms
//! Iname a b [DC] amps      (current flows a -> source -> b)
//! Vname a b [DC] volts     (V(a) - V(b) = volts)
//! + continuation of the previous card
//! .op / .option / .title   ignored
//! .end                     stops reading
//! ```
//!
//! Element letters and value suffixes are case-insensitive; node labels are
//! case-sensitive except that `0`, `gnd` and `GND` all name ground.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

/// Index of the ground node in every [`Netlist`].
pub const GROUND: usize = 0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetlistError {
    #[error("duplicate element name {0:?}")]
    DuplicateName(String),
    #[error("element {name}: {message}")]
    BadValue { name: String, message: String },
}

/// A two-terminal element; `a` and `b` index [`Netlist::node_name`].
#[derive(Debug, Clone, PartialEq)]
pub struct Element {
    pub name: String,
    pub a: usize,
    pub b: usize,
    pub value: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Resistor,
    CurrentSource,
    VoltageSource,
}

#[derive(Debug, Clone)]
pub struct Netlist {
    /// Resistance in ohms.
    pub resistors: Vec<Element>,
    /// Current in amperes, flowing from `a` through the source to `b`.
    pub current_sources: Vec<Element>,
    /// `V(a) − V(b)` in volts.
    pub voltage_sources: Vec<Element>,
    node_names: Vec<String>,
    node_index: HashMap<String, usize>,
    element_names: HashSet<String>,
}

impl Default for Netlist {
    fn default() -> Self {
        Self::new()
    }
}

fn is_ground_label(label: &str) -> bool {
    label == "0" || label.eq_ignore_ascii_case("gnd")
}

impl Netlist {
    pub fn new() -> Self {
        let mut node_index = HashMap::new();
        node_index.insert("0".to_string(), GROUND);
        Self {
            resistors: Vec::new(),
            current_sources: Vec::new(),
            voltage_sources: Vec::new(),
            node_names: vec!["0".to_string()],
            node_index,
            element_names: HashSet::new(),
        }
    }

    /// Interns a node label, returning its index.
    pub fn node(&mut self, label: &str) -> usize {
        if is_ground_label(label) {
            return GROUND;
        }
        if let Some(&i) = self.node_index.get(label) {
            return i;
        }
        let i = self.node_names.len();
        self.node_names.push(label.to_string());
        self.node_index.insert(label.to_string(), i);
        i
    }

    pub fn node_id(&self, label: &str) -> Option<usize> {
        if is_ground_label(label) {
            return Some(GROUND);
        }
        self.node_index.get(label).copied()
    }

    pub fn node_name(&self, id: usize) -> &str {
        &self.node_names[id]
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    /// Number of nodes including ground.
    pub fn node_count(&self) -> usize {
        self.node_names.len()
    }

    pub fn element_count(&self) -> usize {
        self.resistors.len() + self.current_sources.len() + self.voltage_sources.len()
    }

    pub fn add(&mut self, kind: ElementKind, name: &str, a: &str, b: &str, value: f64) -> Result<(), NetlistError> {
        if !value.is_finite() {
            return Err(NetlistError::BadValue { name: name.into(), message: "value must be finite".into() });
        }
        if kind == ElementKind::Resistor && value < 0.0 {
            return Err(NetlistError::BadValue { name: name.into(), message: "resistance must be non-negative".into() });
        }
        if !self.element_names.insert(name.to_string()) {
            return Err(NetlistError::DuplicateName(name.to_string()));
        }
        let a = self.node(a);
        let b = self.node(b);
        let e = Element { name: name.to_string(), a, b, value };
        match kind {
            ElementKind::Resistor => self.resistors.push(e),
            ElementKind::CurrentSource => self.current_sources.push(e),
            ElementKind::VoltageSource => self.voltage_sources.push(e),
        }
        Ok(())
    }

    pub fn add_resistor(&mut self, name: &str, a: &str, b: &str, ohms: f64) -> Result<(), NetlistError> {
        self.add(ElementKind::Resistor, name, a, b, ohms)
    }

    pub fn add_current_source(&mut self, name: &str, a: &str, b: &str, amps: f64) -> Result<(), NetlistError> {
        self.add(ElementKind::CurrentSource, name, a, b, amps)
    }

    pub fn add_voltage_source(&mut self, name: &str, a: &str, b: &str, volts: f64) -> Result<(), NetlistError> {
        self.add(ElementKind::VoltageSource, name, a, b, volts)
    }

    /// Serializes to the dialect accepted by [`parse_spice`].
    pub fn to_spice(&self) -> String {
        let mut out = String::new();
        for (list, kw) in [
            (&self.resistors, ""),
            (&self.current_sources, " DC"),
            (&self.voltage_sources, " DC"),
        ] {
            for e in list {
                let _ = writeln!(
                    out,
                    "{} {} {}{} {:e}",
                    e.name, self.node_names[e.a], self.node_names[e.b], kw, e.value
                );
            }
        }
        out.push_str(".end\n");
        out
    }
}

impl PartialEq for Netlist {
    /// Equal when the element lists match by name, terminals and value;
    /// node numbering is irrelevant.
    fn eq(&self, other: &Self) -> bool {
        let same = |x: &[Element], y: &[Element]| {
            x.len() == y.len()
                && x.iter().zip(y).all(|(p, q)| {
                    p.name == q.name
                        && p.value == q.value
                        && self.node_names[p.a] == other.node_names[q.a]
                        && self.node_names[p.b] == other.node_names[q.b]
                })
        };
        let names = |n: &Netlist| n.node_names.iter().cloned().collect::<HashSet<_>>();
        same(&self.resistors, &other.resistors)
            && same(&self.current_sources, &other.current_sources)
            && same(&self.voltage_sources, &other.voltage_sources)
            && names(self) == names(other)
    }
}

/// Parses a SPICE number with an optional scale suffix (`1k`, `2.5meg`,
/// `10u`, `1e-3`). Trailing unit letters after the suffix are ignored.
pub fn parse_value(token: &str) -> Option<f64> {
    let bytes = token.as_bytes();
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    let digits_start = i;
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        i += 1;
    }
    if i == digits_start {
        return None;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut k = i + 1;
        if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
            k += 1;
        }
        if k < bytes.len() && bytes[k].is_ascii_digit() {
            while k < bytes.len() && bytes[k].is_ascii_digit() {
                k += 1;
            }
            i = k;
        }
    }
    let mantissa: f64 = token[..i].parse().ok()?;
    let suffix = token[i..].to_ascii_lowercase();
    if suffix.is_empty() {
        return Some(mantissa);
    }
    if !suffix.bytes().all(|c| c.is_ascii_alphabetic()) {
        return None;
    }
    let scale = if suffix.starts_with("meg") {
        1e6
    } else {
        match suffix.as_bytes()[0] {
            b't' => 1e12,
            b'g' => 1e9,
            b'k' => 1e3,
            b'm' => 1e-3,
            b'u' => 1e-6,
            b'n' => 1e-9,
            b'p' => 1e-12,
            b'f' => 1e-15,
            _ => 1.0,
        }
    };
    Some(mantissa * scale)
}

struct Card {
    line: usize,
    // (column, token)
    tokens: Vec<(usize, String)>,
}

fn tokenize(line: &str, tokens: &mut Vec<(usize, String)>) {
    let mut col = 0;
    for piece in line.split_inclusive(char::is_whitespace) {
        let tok = piece.trim_end();
        if !tok.is_empty() {
            tokens.push((col + 1, tok.to_string()));
        }
        col += piece.chars().count();
    }
}

fn logical_cards(text: &str) -> Vec<Card> {
    let mut cards: Vec<Card> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = raw.trim_start();
        if trimmed.is_empty() || trimmed.starts_with('*') {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('+') {
            if let Some(card) = cards.last_mut() {
                let offset = raw.len() - rest.len();
                let mut toks = Vec::new();
                tokenize(rest, &mut toks);
                card.tokens.extend(toks.into_iter().map(|(c, t)| (c + offset, t)));
                continue;
            }
        }
        let mut tokens = Vec::new();
        tokenize(raw, &mut tokens);
        cards.push(Card { line: line_no, tokens });
    }
    cards
}

/// Parses a netlist, failing on the first malformed card.
pub fn parse_spice(text: &str) -> Result<Netlist, ParseError> {
    let mut net = Netlist::new();
    for card in logical_cards(text) {
        let err = |column: usize, message: String| ParseError { line: card.line, column, message };
        let (col0, head) = &card.tokens[0];
        if let Some(dot) = head.strip_prefix('.') {
            match dot.to_ascii_lowercase().as_str() {
                "end" => break,
                "op" | "option" | "options" | "title" => continue,
                other => return Err(err(*col0, format!("unsupported control card .{other}"))),
            }
        }
        let kind = match head.as_bytes()[0].to_ascii_uppercase() {
            b'R' => ElementKind::Resistor,
            b'I' => ElementKind::CurrentSource,
            b'V' => ElementKind::VoltageSource,
            _ => return Err(err(*col0, format!("unsupported element {head:?}"))),
        };
        let mut rest: Vec<&(usize, String)> = card.tokens[1..].iter().collect();
        if kind != ElementKind::Resistor
            && rest.len() == 4
            && rest[2].1.eq_ignore_ascii_case("dc")
        {
            rest.remove(2);
        }
        if rest.len() < 3 {
            let col = card.tokens.last().map(|(c, t)| c + t.len()).unwrap_or(1);
            return Err(err(col, format!("{head}: expected two nodes and a value")));
        }
        if rest.len() > 3 {
            return Err(err(rest[3].0, format!("{head}: unexpected token {:?}", rest[3].1)));
        }
        let (vcol, vtok) = rest[2];
        let value = parse_value(vtok).ok_or_else(|| err(*vcol, format!("invalid value {vtok:?}")))?;
        net.add(kind, head, &rest[0].1, &rest[1].1, value).map_err(|e| err(*col0, e.to_string()))?;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_resistor() {
        let n = parse_spice("R1 n1_100_200 n1_300_200 0.5\n.end").unwrap();
        assert_eq!(n.resistors.len(), 1);
        assert_eq!(n.resistors[0].value, 0.5);
        assert_eq!(n.node_name(n.resistors[0].a), "n1_100_200");
        assert_eq!(n.element_count(), 1);
    }

    #[test]
    fn milli_suffix_and_ground() {
        let n = parse_spice("i2 n1_0_0 0 1m").unwrap();
        assert_eq!(n.current_sources[0].value, 1e-3);
        assert_eq!(n.current_sources[0].b, GROUND);
    }

    #[test]
    fn truncated_card_reports_line() {
        let e = parse_spice("R1 a").unwrap_err();
        assert_eq!(e.line, 1);
        let e = parse_spice("* hdr\nR1 a b 1\nR2 a b x1\n").unwrap_err();
        assert_eq!((e.line, e.column), (3, 8));
        assert!(e.to_string().contains("invalid value"));
    }

    #[test]
    fn duplicate_names_rejected() {
        let e = parse_spice("R1 a b 1\nR1 b c 2\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.message.contains("duplicate"));
    }

    #[test]
    fn suffixes() {
        for (tok, want) in [
            ("1k", 1e3),
            ("2.5MEG", 2.5e6),
            ("2.5M", 2.5e-3),
            ("10u", 1e-5),
            ("3n", 3e-9),
            ("4p", 4e-12),
            ("1e-3", 1e-3),
            ("1.5e3k", 1.5e6),
            ("-2", -2.0),
            ("5ohm", 5.0),
            ("1.8V", 1.8),
        ] {
            let got = parse_value(tok).unwrap();
            assert!((got - want).abs() <= 1e-12 * want.abs(), "{tok}: {got}");
        }
        assert_eq!(parse_value("abc"), None);
        assert_eq!(parse_value("1.2.3"), None);
        assert_eq!(parse_value("1k!"), None);
    }

    #[test]
    fn dc_keyword_continuation_and_control_cards() {
        let text = "* grid\n.op\nV1 vdd gnd DC 1.8\nR1 vdd\n+ n1 2k\nI1 n1 0 1u\n.end\nR9 this is ignored\n";
        let n = parse_spice(text).unwrap();
        assert_eq!(n.voltage_sources[0].value, 1.8);
        assert_eq!(n.voltage_sources[0].b, GROUND);
        assert_eq!(n.resistors[0].value, 2000.0);
        assert_eq!(n.node_name(n.resistors[0].b), "n1");
        assert_eq!(n.element_count(), 3);
        assert!(parse_spice(".tran 1n 10n\n").is_err());
        assert!(parse_spice("C1 a b 1p\n").is_err());
        assert!(parse_spice("R1 a b -1\n").is_err());
        assert!(parse_spice("R1 a b 1 tc=2\n").is_err());
    }

    #[test]
    fn round_trip() {
        let text = "V1 vdd 0 1.8\nR1 vdd a 0.1\nI1 a 0 1m\nR2 a b 1e-20\n";
        let n = parse_spice(text).unwrap();
        let again = parse_spice(&n.to_spice()).unwrap();
        assert_eq!(n, again);
    }
}
