use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PathwayError;

/// The eight timed care events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Event {
    Nimodipine,
    Paracetamol,
    Nad,
    Corotrop,
    Morphine,
    Dve,
    Atl,
    Iot,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EventKind {
    DrugAdministration,
    MedicalProcedure,
}

impl Event {
    pub const ALL: [Event; 8] = [
        Event::Nimodipine,
        Event::Paracetamol,
        Event::Nad,
        Event::Corotrop,
        Event::Morphine,
        Event::Dve,
        Event::Atl,
        Event::Iot,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Event::Nimodipine => "nimodipine",
            Event::Paracetamol => "paracetamol",
            Event::Nad => "nad",
            Event::Corotrop => "corotrop",
            Event::Morphine => "morphine",
            Event::Dve => "dve",
            Event::Atl => "atl",
            Event::Iot => "iot",
        }
    }

    /// Drugs are administrations; drainage, angioplasty and intubation are procedures.
    pub fn kind(self) -> EventKind {
        match self {
            Event::Dve | Event::Atl | Event::Iot => EventKind::MedicalProcedure,
            _ => EventKind::DrugAdministration,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Event {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Event::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown event `{s}`"))
    }
}

/// A state of the pathway chain: the virtual START/END or an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum State {
    Start,
    Event(Event),
    End,
}

impl State {
    pub const COUNT: usize = 10;

    pub fn index(self) -> usize {
        match self {
            State::Start => 0,
            State::Event(e) => 1 + e.index(),
            State::End => 9,
        }
    }

    pub fn from_index(i: usize) -> State {
        match i {
            0 => State::Start,
            9 => State::End,
            i => State::Event(Event::ALL[i - 1]),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            State::Start => "START",
            State::Event(e) => e.name(),
            State::End => "END",
        }
    }

    pub fn all() -> impl Iterator<Item = State> {
        (0..Self::COUNT).map(State::from_index)
    }
}

impl FromStr for State {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "START" => Ok(State::Start),
            "END" => Ok(State::End),
            other => other.parse().map(State::Event),
        }
    }
}

/// Row-stochastic first-order transition matrix over START, the events and END.
///
/// END is absorbing and START is never re-entered. In JSON a matrix is an
/// object of rows, each an object of target → probability. Omitted entries
/// are zero, an omitted event row is terminal, and the END row is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<String, BTreeMap<String, f64>>")]
#[serde(into = "BTreeMap<String, BTreeMap<String, f64>>")]
pub struct TransitionMatrix {
    probs: [[f64; State::COUNT]; State::COUNT],
}

impl TransitionMatrix {
    pub fn from_rows(rows: &BTreeMap<String, BTreeMap<String, f64>>) -> Result<Self, PathwayError> {
        let mut probs = [[0.0; State::COUNT]; State::COUNT];
        let mut given = [false; State::COUNT];
        for (from, row) in rows {
            let field = format!("transitions.{from}");
            let s: State = from.parse().map_err(|e| PathwayError::config(&field, e))?;
            if s == State::End {
                return Err(PathwayError::config(field, "END is absorbing and takes no row"));
            }
            given[s.index()] = true;
            for (to, &p) in row {
                let t: State = to
                    .parse()
                    .map_err(|e| PathwayError::config(format!("{field}.{to}"), e))?;
                probs[s.index()][t.index()] = p;
            }
        }
        for e in Event::ALL {
            let i = State::Event(e).index();
            if !given[i] {
                probs[i][State::End.index()] = 1.0;
            }
        }
        probs[State::End.index()][State::End.index()] = 1.0;
        let m = TransitionMatrix { probs };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix from `(from, to, p)` entries; END is made absorbing.
    pub fn from_entries(entries: &[(State, State, f64)]) -> Result<Self, PathwayError> {
        let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        for &(from, to, p) in entries {
            rows.entry(from.name().into()).or_default().insert(to.name().into(), p);
        }
        Self::from_rows(&rows)
    }

    pub fn validate(&self) -> Result<(), PathwayError> {
        for from in State::all() {
            let row = &self.probs[from.index()];
            let field = format!("transitions.{}", from.name());
            if let Some(p) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(PathwayError::config(field, format!("probability {p} outside [0, 1]")));
            }
            if row[State::Start.index()] != 0.0 {
                return Err(PathwayError::config(field, "transition into START"));
            }
            if from == State::End {
                continue;
            }
            let total: f64 = row.iter().sum();
            if (total - 1.0).abs() > 1e-9 {
                return Err(PathwayError::config(field, format!("row sums to {total}, not 1")));
            }
        }
        Ok(())
    }

    pub fn prob(&self, from: State, to: State) -> f64 {
        self.probs[from.index()][to.index()]
    }

    pub fn row(&self, from: State) -> &[f64; State::COUNT] {
        &self.probs[from.index()]
    }
}

impl TryFrom<BTreeMap<String, BTreeMap<String, f64>>> for TransitionMatrix {
    type Error = PathwayError;

    fn try_from(rows: BTreeMap<String, BTreeMap<String, f64>>) -> Result<Self, Self::Error> {
        Self::from_rows(&rows)
    }
}

impl From<TransitionMatrix> for BTreeMap<String, BTreeMap<String, f64>> {
    fn from(m: TransitionMatrix) -> Self {
        let mut rows = BTreeMap::new();
        for from in State::all().filter(|s| *s != State::End) {
            let row: BTreeMap<String, f64> = State::all()
                .filter(|to| m.prob(from, *to) > 0.0)
                .map(|to| (to.name().to_string(), m.prob(from, to)))
                .collect();
            rows.insert(from.name().to_string(), row);
        }
        rows
    }
}

/// The 56 ordered pairs of distinct events, row-major in [`Event::ALL`] order.
pub fn transition_pairs() -> Vec<(Event, Event)> {
    let mut out = Vec::with_capacity(56);
    for a in Event::ALL {
        for b in Event::ALL {
            if a != b {
                out.push((a, b));
            }
        }
    }
    out
}

/// Direct-succession indicators: `(a, b)` is 1 iff `b` immediately follows `a`.
pub fn binarize_transitions(events: &[(Event, f64)]) -> BTreeMap<(Event, Event), u8> {
    let mut out: BTreeMap<(Event, Event), u8> =
        transition_pairs().into_iter().map(|p| (p, 0)).collect();
    for w in events.windows(2) {
        if w[0].0 != w[1].0 {
            out.insert((w[0].0, w[1].0), 1);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn states_round_trip() {
        for s in State::all() {
            assert_eq!(State::from_index(s.index()), s);
            assert_eq!(s.name().parse::<State>().unwrap(), s);
        }
        assert_eq!(transition_pairs().len(), 56);
    }

    #[test]
    fn matrix_validation_names_the_row() {
        let err = TransitionMatrix::from_entries(&[
            (State::Start, State::Event(Event::Nad), 0.5),
            (State::Event(Event::Nad), State::End, 1.0),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("transitions.START"), "{err}");
        let err = TransitionMatrix::from_entries(&[
            (State::Start, State::End, 1.0),
            (State::Event(Event::Nad), State::Start, 1.0),
        ])
        .unwrap_err();
        assert!(err.to_string().contains("START"), "{err}");
    }

    #[test]
    fn binarization_uses_direct_succession() {
        assert!(binarize_transitions(&[]).values().all(|&v| v == 0));
        let seq = [(Event::Iot, 1.0), (Event::Dve, 2.0), (Event::Nad, 3.0)];
        let b = binarize_transitions(&seq);
        assert_eq!(b.len(), 56);
        assert_eq!(b[&(Event::Iot, Event::Dve)], 1);
        assert_eq!(b[&(Event::Dve, Event::Nad)], 1);
        assert_eq!(b[&(Event::Iot, Event::Nad)], 0);
        assert_eq!(b.values().map(|&v| v as usize).sum::<usize>(), 2);
    }
}
