use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{KentParams, Party, ProtocolError};
use crate::bits::{bit01, opt_bit01, BitString};

pub const TRANSCRIPT_SCHEMA: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    Kent,
    Bb84,
}

/// First line of a serialized transcript.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptHeader {
    pub schema: u32,
    pub protocol: ProtocolKind,
    /// Total photon count (`N_B` for the Kent protocol, `N` for BB84).
    pub photons: usize,
    /// Photons kept after Bob's test; absent for BB84.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub retained: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub commitment_width: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family_seed: Option<u64>,
}

/// One classical message. Every variant has a fixed sender; see
/// [`Event::sender`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum Event {
    /// Alice's classical sub-commitment `y_i` for photon `i`.
    Commitment { index: usize, y: BitString },
    /// BB84 protocol: photon `i` handed to Bob.
    Photon { index: usize },
    /// Bob's test sample `X`, sorted.
    Sample { indices: Vec<usize> },
    /// Alice's unveiling of `(x, z, w)` for a tested photon.
    TestUnveil {
        index: usize,
        #[serde(with = "bit01")]
        x: bool,
        #[serde(with = "bit01")]
        z: bool,
        w: BitString,
    },
    /// Bob's verdict on one tested photon.
    TestCheck {
        index: usize,
        passed: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    /// Alice's masked basis bit `x_i ⊕ b` for a retained photon.
    Mask {
        index: usize,
        #[serde(with = "bit01")]
        bit: bool,
    },
    /// Alice's open-phase unveiling for a retained photon.
    OpenUnveil {
        index: usize,
        #[serde(with = "bit01")]
        x: bool,
        #[serde(with = "bit01")]
        z: bool,
        w: BitString,
    },
    /// BB84 protocol: the opened bit and the claimed value of every photon.
    Bb84Open {
        #[serde(with = "bit01")]
        bit: bool,
        values: BitString,
    },
    /// Bob's final decision.
    Verdict {
        accepted: bool,
        #[serde(default, with = "opt_bit01", skip_serializing_if = "Option::is_none")]
        bit: Option<bool>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
    /// The run stopped because `violator` broke the protocol.
    Abort { violator: Party, reason: String },
}

impl Event {
    pub fn sender(&self) -> Party {
        match self {
            Event::Commitment { .. }
            | Event::Photon { .. }
            | Event::TestUnveil { .. }
            | Event::Mask { .. }
            | Event::OpenUnveil { .. }
            | Event::Bb84Open { .. } => Party::Alice,
            Event::Sample { .. } | Event::TestCheck { .. } | Event::Verdict { .. } => Party::Bob,
            // Aborts are written by the session; attribute them to the violator.
            Event::Abort { violator, .. } => *violator,
        }
    }

    /// Variant name as used in the JSON `event` tag.
    pub fn kind(&self) -> &'static str {
        match self {
            Event::Commitment { .. } => "commitment",
            Event::Photon { .. } => "photon",
            Event::Sample { .. } => "sample",
            Event::TestUnveil { .. } => "test_unveil",
            Event::TestCheck { .. } => "test_check",
            Event::Mask { .. } => "mask",
            Event::OpenUnveil { .. } => "open_unveil",
            Event::Bb84Open { .. } => "bb84_open",
            Event::Verdict { .. } => "verdict",
            Event::Abort { .. } => "abort",
        }
    }
}

/// Ordered log of a protocol run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transcript {
    pub header: TranscriptHeader,
    pub events: Vec<Event>,
}

/// Where and by whom a transcript departs from the phase machine.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranscriptViolation {
    pub position: usize,
    pub violator: Party,
    pub reason: String,
}

impl Transcript {
    pub fn kent(params: &KentParams, family_seed: u64) -> Self {
        Self {
            header: TranscriptHeader {
                schema: TRANSCRIPT_SCHEMA,
                protocol: ProtocolKind::Kent,
                photons: params.total_photons,
                retained: Some(params.retained_photons),
                commitment_width: Some(params.commitment_width),
                family_seed: Some(family_seed),
            },
            events: Vec::new(),
        }
    }

    pub fn bb84(photons: usize) -> Self {
        Self {
            header: TranscriptHeader {
                schema: TRANSCRIPT_SCHEMA,
                protocol: ProtocolKind::Bb84,
                photons,
                retained: None,
                commitment_width: None,
                family_seed: None,
            },
            events: Vec::new(),
        }
    }

    pub fn push(&mut self, e: Event) {
        self.events.push(e);
    }

    /// Event kinds in order; two runs with equal shapes look alike to a
    /// reader that ignores the values.
    pub fn shape(&self) -> Vec<&'static str> {
        self.events.iter().map(Event::kind).collect()
    }

    pub fn commitments(&self) -> Vec<BitString> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Commitment { y, .. } => Some(*y),
                _ => None,
            })
            .collect()
    }

    pub fn sample(&self) -> Option<&[usize]> {
        self.events.iter().find_map(|e| match e {
            Event::Sample { indices } => Some(indices.as_slice()),
            _ => None,
        })
    }

    pub fn masks(&self) -> Vec<(usize, bool)> {
        self.events
            .iter()
            .filter_map(|e| match e {
                Event::Mask { index, bit } => Some((*index, *bit)),
                _ => None,
            })
            .collect()
    }

    pub fn verdict(&self) -> Option<&Event> {
        self.events.iter().rev().find(|e| matches!(e, Event::Verdict { .. } | Event::Abort { .. }))
    }

    /// Writes the header and one event per line.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<(), ProtocolError> {
        serde_json::to_writer(&mut out, &self.header)?;
        out.write_all(b"\n")?;
        for e in &self.events {
            serde_json::to_writer(&mut out, e)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }

    pub fn read_jsonl<R: BufRead>(input: R) -> Result<Self, ProtocolError> {
        let mut lines = input.lines();
        let first = lines.next().ok_or_else(|| ProtocolError::Format("empty transcript".into()))??;
        let header: TranscriptHeader = serde_json::from_str(&first)?;
        if header.schema != TRANSCRIPT_SCHEMA {
            return Err(ProtocolError::Format(format!("unsupported transcript schema {}", header.schema)));
        }
        let mut events = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            events.push(serde_json::from_str(&line)?);
        }
        Ok(Self { header, events })
    }

    /// Checks the event sequence against the protocol's phase machine.
    /// A prefix of a valid run is accepted; see [`is_complete`](Self::is_complete).
    pub fn validate(&self) -> Result<(), TranscriptViolation> {
        match self.header.protocol {
            ProtocolKind::Kent => self.validate_kent(),
            ProtocolKind::Bb84 => self.validate_bb84(),
        }
    }

    pub fn is_complete(&self) -> bool {
        self.validate().is_ok() && matches!(self.events.last(), Some(Event::Verdict { .. } | Event::Abort { .. }))
    }

    fn validate_kent(&self) -> Result<(), TranscriptViolation> {
        let n_b = self.header.photons;
        let retained = self.header.retained.unwrap_or(0);
        let mut checker = Checker::new(&self.events);
        for i in 0..n_b {
            if checker.done()? {
                return Ok(());
            }
            checker.expect("commitment", |e| matches!(e, Event::Commitment { index, .. } if *index == i))?;
        }
        if checker.done()? {
            return Ok(());
        }
        let sample = match checker.peek() {
            Event::Sample { indices } => indices.clone(),
            _ => return Err(checker.violation("expected Bob's sample")),
        };
        let sorted = sample.windows(2).all(|w| w[0] < w[1]);
        if !sorted || sample.len() != n_b - retained || sample.iter().any(|&i| i >= n_b) {
            return Err(checker.violation("sample must be a sorted set of N_B - N distinct indices"));
        }
        checker.advance();
        let retained_set: Vec<usize> = (0..n_b).filter(|i| !sample.contains(i)).collect();
        for &i in &sample {
            if checker.done()? {
                return Ok(());
            }
            checker.expect("test_unveil", |e| matches!(e, Event::TestUnveil { index, .. } if *index == i))?;
            if checker.done()? {
                return Ok(());
            }
            let passed = match checker.peek() {
                Event::TestCheck { index, passed, .. } if *index == i => *passed,
                _ => return Err(checker.violation("expected Bob's check of the unveiled photon")),
            };
            checker.advance();
            if !passed {
                if checker.done()? {
                    return Ok(());
                }
                checker.expect("rejecting verdict", |e| matches!(e, Event::Verdict { accepted: false, .. }))?;
                return checker.finish();
            }
        }
        for &i in &retained_set {
            if checker.done()? {
                return Ok(());
            }
            checker.expect("mask", |e| matches!(e, Event::Mask { index, .. } if *index == i))?;
        }
        for &i in &retained_set {
            if checker.done()? {
                return Ok(());
            }
            checker.expect("open_unveil", |e| matches!(e, Event::OpenUnveil { index, .. } if *index == i))?;
        }
        if checker.done()? {
            return Ok(());
        }
        checker.expect("verdict", |e| matches!(e, Event::Verdict { .. }))?;
        checker.finish()
    }

    fn validate_bb84(&self) -> Result<(), TranscriptViolation> {
        let n = self.header.photons;
        let mut checker = Checker::new(&self.events);
        for i in 0..n {
            if checker.done()? {
                return Ok(());
            }
            checker.expect("photon", |e| matches!(e, Event::Photon { index } if *index == i))?;
        }
        if checker.done()? {
            return Ok(());
        }
        checker.expect("bb84_open", |e| matches!(e, Event::Bb84Open { values, .. } if values.width() == n))?;
        if checker.done()? {
            return Ok(());
        }
        checker.expect("verdict", |e| matches!(e, Event::Verdict { .. }))?;
        checker.finish()
    }
}

struct Checker<'a> {
    events: &'a [Event],
    pos: usize,
}

impl<'a> Checker<'a> {
    fn new(events: &'a [Event]) -> Self {
        Self { events, pos: 0 }
    }

    /// True at the end of the log. An abort is legal anywhere but must be last.
    fn done(&mut self) -> Result<bool, TranscriptViolation> {
        match self.events.get(self.pos) {
            None => Ok(true),
            Some(Event::Abort { .. }) => {
                self.pos += 1;
                self.finish().map(|_| true)
            }
            Some(_) => Ok(false),
        }
    }

    fn peek(&self) -> &'a Event {
        &self.events[self.pos]
    }

    fn advance(&mut self) {
        self.pos += 1;
    }

    fn violation(&self, why: &str) -> TranscriptViolation {
        let e = &self.events[self.pos];
        TranscriptViolation {
            position: self.pos,
            violator: e.sender(),
            reason: format!("{why}; found {}", e.kind()),
        }
    }

    fn expect(&mut self, what: &str, ok: impl Fn(&Event) -> bool) -> Result<(), TranscriptViolation> {
        if ok(self.peek()) {
            self.advance();
            Ok(())
        } else {
            Err(self.violation(&format!("expected {what}")))
        }
    }

    fn finish(&self) -> Result<(), TranscriptViolation> {
        if self.pos < self.events.len() {
            Err(self.violation("event after the run ended"))
        } else {
            Ok(())
        }
    }
}
