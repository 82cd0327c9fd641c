//! Plain-text reaction network format.
//!
//! ```text
//! # the sequestration network K(2,3)
//! species: X1, X2, X3
//! X1 + X2 -> 0
//! X2 + X3 -> 0
//! X1 -> 2 X3
//! @fully_open
//! ```
//!
//! One reaction per line, `complex -> complex`, optionally followed by
//! `@ rate`. A complex is `0` or a `+`-separated list of terms `[coeff] name`
//! (`2 X3` and `2X3` are the same term). `#` starts a comment. Either every
//! reaction carries a rate or none does.
//!
//! Without a `species:` line, species are numbered in order of first
//! appearance. With one, the declared order is used and any other name is an
//! error. `@fully_open` adds the missing inflows and outflows and puts the
//! reactions in canonical order (internal, outflows, inflows).

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::model::{Complex, ModelError, Network, RateAssignment, Reaction};
use crate::numfmt;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("line {line}: species `{name}` is not declared")]
    UnknownSpecies { line: usize, name: String },
    #[error("line {line}: species `{name}` declared twice")]
    DuplicateSpecies { line: usize, name: String },
    #[error("line {line}: second species declaration (first on line {first})")]
    DuplicateDeclaration { line: usize, first: usize },
    #[error("line {line}: unknown directive `@{name}`")]
    UnknownDirective { line: usize, name: String },
    #[error("line {rated} has a rate but line {unrated} does not; rate all reactions or none")]
    MixedRates { rated: usize, unrated: usize },
    #[error("`@fully_open` would add a flow for X{} that has no rate", .species + 1)]
    FlowWithoutRate { species: usize },
    #[error("line {line}: {source}")]
    Model {
        line: usize,
        #[source]
        source: ModelError,
    },
    #[error(transparent)]
    Network(#[from] ModelError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Directive {
    FullyOpen,
}

/// One parsed reaction line, species still by name.
#[derive(Clone, Debug, PartialEq)]
pub struct ReactionLine {
    pub line: usize,
    pub reactant: Vec<(String, u32)>,
    pub product: Vec<(String, u32)>,
    pub rate: Option<f64>,
}

/// A parsed file before species are resolved to indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct NetworkDocument {
    /// Species in index order.
    pub species: Vec<String>,
    /// Line of the `species:` declaration, if any.
    pub declared_on: Option<usize>,
    pub reactions: Vec<ReactionLine>,
    pub directives: BTreeSet<Directive>,
}

/// Parses network text into a network and, when every reaction is rated, a
/// rate assignment.
pub fn parse_network(text: &str) -> Result<(Network, Option<RateAssignment>), ParseError> {
    parse_document(text)?.into_network()
}

pub fn parse_document(text: &str) -> Result<NetworkDocument, ParseError> {
    let mut doc = NetworkDocument::default();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.split('\n').enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let content = raw.split('#').next().unwrap_or("");
        let mut cur = Cursor::new(content, line_no);
        cur.skip_ws();
        if cur.at_end() {
            continue;
        }
        if cur.peek() == Some('@') {
            cur.bump();
            let name = cur.ident();
            cur.skip_ws();
            if !cur.at_end() {
                return Err(cur.error("unexpected text after directive"));
            }
            match name.as_str() {
                "fully_open" => {
                    doc.directives.insert(Directive::FullyOpen);
                }
                _ => {
                    return Err(ParseError::UnknownDirective {
                        line: line_no,
                        name,
                    })
                }
            }
            continue;
        }
        if let Some(names) = cur.species_declaration()? {
            if let Some(first) = doc.declared_on {
                return Err(ParseError::DuplicateDeclaration {
                    line: line_no,
                    first,
                });
            }
            // Species seen on earlier reaction lines must be declared too; the
            // check happens at resolution time.
            let mut declared = Vec::new();
            let mut index = HashMap::new();
            for name in names {
                if index.insert(name.clone(), declared.len()).is_some() {
                    return Err(ParseError::DuplicateSpecies {
                        line: line_no,
                        name,
                    });
                }
                declared.push(name);
            }
            doc.declared_on = Some(line_no);
            doc.species = declared;
            seen = index;
            continue;
        }
        let reaction = cur.reaction_line()?;
        if doc.declared_on.is_none() {
            for (name, _) in reaction.reactant.iter().chain(&reaction.product) {
                if !seen.contains_key(name) {
                    seen.insert(name.clone(), doc.species.len());
                    doc.species.push(name.clone());
                }
            }
        }
        doc.reactions.push(reaction);
    }
    Ok(doc)
}

impl NetworkDocument {
    pub fn into_network(self) -> Result<(Network, Option<RateAssignment>), ParseError> {
        let index: HashMap<&str, usize> = self
            .species
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let resolve = |terms: &[(String, u32)], line: usize| -> Result<Complex, ParseError> {
            terms
                .iter()
                .map(|(name, c)| {
                    index.get(name.as_str()).map(|&i| (i, *c)).ok_or_else(|| {
                        ParseError::UnknownSpecies {
                            line,
                            name: name.clone(),
                        }
                    })
                })
                .collect::<Result<Vec<_>, _>>()
                .map(Complex::from_terms)
        };

        let mut reactions = Vec::with_capacity(self.reactions.len());
        for rl in &self.reactions {
            let r = Reaction::new(
                resolve(&rl.reactant, rl.line)?,
                resolve(&rl.product, rl.line)?,
            )
            .map_err(|source| ParseError::Model {
                line: rl.line,
                source,
            })?;
            reactions.push(r);
        }

        let rates = match (
            self.reactions.iter().find(|r| r.rate.is_some()),
            self.reactions.iter().find(|r| r.rate.is_none()),
        ) {
            (Some(rated), Some(unrated)) => {
                return Err(ParseError::MixedRates {
                    rated: rated.line,
                    unrated: unrated.line,
                })
            }
            (Some(_), None) => Some(
                self.reactions
                    .iter()
                    .filter_map(|r| r.rate)
                    .collect::<Vec<_>>(),
            ),
            _ => None,
        };

        let net = Network::new(self.species.len(), reactions).map_err(|e| match e {
            ModelError::DuplicateReaction { second, .. } => ParseError::Model {
                line: self.reactions[second].line,
                source: e,
            },
            e => ParseError::Network(e),
        })?;

        if !self.directives.contains(&Directive::FullyOpen) {
            let rates = rates.map(RateAssignment::new).transpose()?;
            return Ok((net, rates));
        }
        let (reordered, source) = net.fully_open_layout();
        let rates = match rates {
            Some(rates) => {
                let mut out = Vec::with_capacity(source.len());
                for (r, src) in reordered.iter().zip(&source) {
                    match src {
                        Some(k) => out.push(rates[*k]),
                        None => {
                            return Err(ParseError::FlowWithoutRate {
                                species: r.flow_species().unwrap_or(0),
                            })
                        }
                    }
                }
                Some(RateAssignment::new(out)?)
            }
            None => None,
        };
        Ok((Network::new(net.species_count(), reordered)?, rates))
    }
}

/// Writes a network in the text format. Species are named `X1..Xn`; rates,
/// if given, carry 17 significant digits.
pub fn serialize_network(net: &Network, rates: Option<&RateAssignment>) -> String {
    if let Some(r) = rates {
        assert_eq!(r.len(), net.reaction_count(), "one rate per reaction");
    }
    let names: Vec<String> = (1..=net.species_count()).map(|i| format!("X{i}")).collect();
    let mut out = format!("species: {}\n", names.join(", "));
    for (k, r) in net.reactions().iter().enumerate() {
        out.push_str(&r.to_string());
        if let Some(rates) = rates {
            out.push_str(" @ ");
            out.push_str(&numfmt::sig17(rates[k]));
        }
        out.push('\n');
    }
    out
}

struct Cursor {
    chars: Vec<char>,
    pos: usize,
    line: usize,
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphabetic()
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

impl Cursor {
    fn new(src: &str, line: usize) -> Self {
        Self {
            chars: src.chars().collect(),
            pos: 0,
            line,
        }
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            line: self.line,
            column: self.pos + 1,
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn bump(&mut self) {
        self.pos += 1;
    }

    fn at_end(&self) -> bool {
        self.pos >= self.chars.len()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, s: &str) -> bool {
        let n = s.chars().count();
        if self.chars[self.pos..].iter().take(n).copied().eq(s.chars()) {
            self.pos += n;
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        if self.peek().is_some_and(is_name_start) {
            while self.peek().is_some_and(is_name_char) {
                self.pos += 1;
            }
        }
        self.chars[start..self.pos].iter().collect()
    }

    fn digits(&mut self) -> String {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.chars[start..self.pos].iter().collect()
    }

    /// `species: A, B C` -> `Some([A, B, C])`; `None` if the line is not a
    /// declaration (cursor left untouched).
    fn species_declaration(&mut self) -> Result<Option<Vec<String>>, ParseError> {
        let save = self.pos;
        if self.ident() != "species" {
            self.pos = save;
            return Ok(None);
        }
        self.skip_ws();
        if !self.eat(":") {
            self.pos = save;
            return Ok(None);
        }
        let mut names = Vec::new();
        loop {
            self.skip_ws();
            if self.at_end() {
                break;
            }
            let name = self.ident();
            if name.is_empty() {
                return Err(self.error("expected a species name"));
            }
            names.push(name);
            self.skip_ws();
            self.eat(",");
        }
        Ok(Some(names))
    }

    fn reaction_line(&mut self) -> Result<ReactionLine, ParseError> {
        let reactant = self.complex()?;
        self.skip_ws();
        if !self.eat("->") {
            return Err(self.error("expected `->`"));
        }
        let product = self.complex()?;
        self.skip_ws();
        let rate = if self.eat("@") {
            self.skip_ws();
            Some(self.rate()?)
        } else {
            None
        };
        self.skip_ws();
        if !self.at_end() {
            return Err(self.error("unexpected text after reaction"));
        }
        Ok(ReactionLine {
            line: self.line,
            reactant,
            product,
            rate,
        })
    }

    fn rate(&mut self) -> Result<f64, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| !c.is_whitespace()) {
            self.pos += 1;
        }
        let token: String = self.chars[start..self.pos].iter().collect();
        let value: f64 = token.parse().map_err(|_| ParseError::Syntax {
            line: self.line,
            column: start + 1,
            message: format!("invalid rate `{token}`"),
        })?;
        if !(value.is_finite() && value > 0.0) {
            return Err(ParseError::Syntax {
                line: self.line,
                column: start + 1,
                message: format!("rate must be finite and positive, got `{token}`"),
            });
        }
        Ok(value)
    }

    fn complex(&mut self) -> Result<Vec<(String, u32)>, ParseError> {
        self.skip_ws();
        let mut terms = Vec::new();
        loop {
            let start = self.pos;
            let digits = self.digits();
            self.skip_ws();
            let name = self.ident();
            if name.is_empty() {
                if digits == "0" && terms.is_empty() {
                    return Ok(terms);
                }
                self.pos = start;
                return Err(self.error("expected a species term or `0`"));
            }
            let coeff = if digits.is_empty() {
                1
            } else {
                match digits.parse::<u32>() {
                    Ok(0) => {
                        return Err(ParseError::Syntax {
                            line: self.line,
                            column: start + 1,
                            message: "stoichiometric coefficient must be positive".into(),
                        })
                    }
                    Ok(c) => c,
                    Err(_) => {
                        return Err(ParseError::Syntax {
                            line: self.line,
                            column: start + 1,
                            message: format!("coefficient `{digits}` is too large"),
                        })
                    }
                }
            };
            terms.push((name, coeff));
            let save = self.pos;
            self.skip_ws();
            if self.peek() == Some('+') {
                self.bump();
                self.skip_ws();
            } else {
                self.pos = save;
                return Ok(terms);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ReactionKind;

    const K23: &str = "X1 + X2 -> 0\nX2 + X3 -> 0\nX1 -> 2 X3\n@fully_open";

    #[test]
    fn parses_sequestration_fixture() {
        let (net, rates) = parse_network(K23).unwrap();
        assert!(rates.is_none());
        assert_eq!(net, Network::sequestration(2, 3).unwrap());
    }

    #[test]
    fn single_inflow() {
        let (net, _) = parse_network("0 -> X1").unwrap();
        assert_eq!(net.reaction_count(), 1);
        assert_eq!(net.reaction(0).kind(), ReactionKind::Inflow);
    }

    #[test]
    fn trivial_reaction_is_rejected() {
        let err = parse_network("X1 -> X1").unwrap_err();
        assert!(matches!(
            err,
            ParseError::Model {
                line: 1,
                source: ModelError::TrivialReaction(_)
            }
        ));
    }

    #[test]
    fn coefficient_spacing_is_optional() {
        let a = parse_network("X1 -> 2 X3 + X2").unwrap();
        let b = parse_network("X1->2X3+X2").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn whitespace_comments_and_crlf() {
        let text =
            "  # header\r\nspecies: X1, X2\r\n\tX1 +   X2->0   # sink\r\n\r\n 0 -> X2 # feed\r\n";
        let (net, _) = parse_network(text).unwrap();
        let (plain, _) = parse_network("species: X1, X2\nX1 + X2 -> 0\n0 -> X2").unwrap();
        assert_eq!(net, plain);
    }

    #[test]
    fn declaration_fixes_order_and_is_strict() {
        let (net, _) = parse_network("species: B, A\nA -> B").unwrap();
        assert_eq!(net.reaction(0).to_string(), "X2 -> X1");
        let err = parse_network("species: A\nA -> C").unwrap_err();
        assert_eq!(
            err,
            ParseError::UnknownSpecies {
                line: 2,
                name: "C".into()
            }
        );
        assert!(matches!(
            parse_network("species: A, A"),
            Err(ParseError::DuplicateSpecies { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        match parse_network("X1 -> 0\nX1 => X2").unwrap_err() {
            ParseError::Syntax { line, column, .. } => assert_eq!((line, column), (2, 4)),
            e => panic!("{e}"),
        }
        match parse_network("0 X1 -> X2").unwrap_err() {
            ParseError::Syntax {
                line,
                column,
                message,
            } => {
                assert_eq!((line, column), (1, 1));
                assert!(message.contains("positive"));
            }
            e => panic!("{e}"),
        }
        assert!(matches!(
            parse_network("-1 X1 -> 0"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_network("X1 -> 0 @ 0"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_network("X1 -> 0 @ -2"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_network("X1 -> 0 @ abc"),
            Err(ParseError::Syntax { .. })
        ));
        assert!(matches!(
            parse_network("@open"),
            Err(ParseError::UnknownDirective { .. })
        ));
    }

    #[test]
    fn rates_all_or_nothing() {
        let (_, rates) = parse_network("X1 -> 0 @ 2.5\n0 -> X1 @ 1e-3").unwrap();
        assert_eq!(&*rates.unwrap(), &[2.5, 1e-3]);
        assert_eq!(
            parse_network("X1 -> 0 @ 2\n0 -> X1").unwrap_err(),
            ParseError::MixedRates {
                rated: 1,
                unrated: 2
            }
        );
    }

    #[test]
    fn fully_open_with_rates_needs_every_flow() {
        let err = parse_network("X1 -> X2 @ 1\n@fully_open").unwrap_err();
        assert_eq!(err, ParseError::FlowWithoutRate { species: 0 });
        let text = "0 -> X1 @ 3\nX1 -> X2 @ 1\nX1 -> 0 @ 2\nX2 -> 0 @ 4\n0 -> X2 @ 5\n@fully_open";
        let (net, rates) = parse_network(text).unwrap();
        assert_eq!(net.reaction(0).to_string(), "X1 -> X2");
        assert_eq!(&*rates.unwrap(), &[1.0, 2.0, 4.0, 3.0, 5.0]);
    }

    #[test]
    fn fully_open_directive_is_idempotent() {
        let (net, _) = parse_network(K23).unwrap();
        let text = serialize_network(&net, None) + "@fully_open\n";
        let (again, _) = parse_network(&text).unwrap();
        assert_eq!(again, net);
    }

    #[test]
    fn duplicate_reaction_reports_line() {
        let err = parse_network("X1 -> 0\n\nX1->0").unwrap_err();
        assert!(matches!(err, ParseError::Model { line: 3, .. }));
    }

    #[test]
    fn serialize_sequestration() {
        let net = Network::sequestration(2, 3).unwrap();
        let text = serialize_network(&net, None);
        assert!(text.starts_with("species: X1, X2, X3\nX1 + X2 -> 0\n"));
        assert_eq!(parse_network(&text).unwrap(), (net, None));
    }

    #[test]
    fn serialize_rates_with_17_digits() {
        let net = Network::sequestration(2, 2).unwrap();
        let rates = RateAssignment::new((1..=6).map(|k| 1.0 / k as f64).collect()).unwrap();
        let text = serialize_network(&net, Some(&rates));
        assert!(text.contains("X1 + X2 -> 0 @ 1.0000000000000000e0\n"));
        assert!(text.contains("@ 3.3333333333333331e-1"));
        let (back, back_rates) = parse_network(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back_rates.unwrap(), rates);
    }

    #[test]
    fn serialize_empty_network() {
        let net = Network::new(2, vec![]).unwrap();
        let text = serialize_network(&net, None);
        assert_eq!(text, "species: X1, X2\n");
        assert_eq!(parse_network(&text).unwrap().0, net);
    }
}
