use std::fmt::Write as _;

use crate::coloring::ProfileMode;

/// One named runtime check and its verdict.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InvariantCheck {
    pub name: &'static str,
    pub holds: bool,
}

/// Outcome of one protocol run, as reported by the harness.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub protocol: &'static str,
    /// Rounds until the goal was reached, `None` when the budget ran out.
    pub completion_rounds: Option<u64>,
    /// Rounds simulated in total.
    pub rounds_simulated: u64,
    /// Elapsed rounds at which each station first held the message
    /// (a decode in round `r` counts as `r + 1`).
    pub first_informed: Vec<Option<u64>>,
    pub success: bool,
    pub invariants: Vec<InvariantCheck>,
    pub seed: u64,
    pub profile_mode: ProfileMode,
    pub trace_hash: u64,
    pub max_message_bits: u32,
    /// Protocol-specific values, in insertion order.
    pub extra: Vec<(String, String)>,
}

impl RunSummary {
    pub(crate) fn new(protocol: &'static str, seed: u64, profile_mode: ProfileMode, stations: usize) -> Self {
        RunSummary {
            protocol,
            completion_rounds: None,
            rounds_simulated: 0,
            first_informed: vec![None; stations],
            success: false,
            invariants: Vec::new(),
            seed,
            profile_mode,
            trace_hash: 0,
            max_message_bits: 0,
            extra: Vec::new(),
        }
    }

    pub fn informed_count(&self) -> usize {
        self.first_informed.iter().filter(|r| r.is_some()).count()
    }

    pub fn all_informed(&self) -> bool {
        self.first_informed.iter().all(Option::is_some)
    }

    pub fn invariants_hold(&self) -> bool {
        self.invariants.iter().all(|c| c.holds)
    }

    pub fn extra_value(&self, key: &str) -> Option<&str> {
        self.extra.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub(crate) fn push_extra(&mut self, key: &str, value: impl ToString) {
        self.extra.push((key.to_string(), value.to_string()));
    }

    pub(crate) fn check(&mut self, name: &'static str, holds: bool) {
        self.invariants.push(InvariantCheck { name, holds });
    }

    /// Key-value text, one `key = value` per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "protocol = {}", self.protocol);
        let _ = writeln!(out, "seed = {}", self.seed);
        let _ = writeln!(out, "profile_mode = {}", mode_name(self.profile_mode));
        let _ = writeln!(out, "success = {}", self.success);
        match self.completion_rounds {
            Some(r) => {
                let _ = writeln!(out, "completion_rounds = {r}");
            }
            None => {
                let _ = writeln!(out, "completion_rounds = none");
            }
        }
        let _ = writeln!(out, "rounds_simulated = {}", self.rounds_simulated);
        let _ = writeln!(
            out,
            "informed = {}/{}",
            self.informed_count(),
            self.first_informed.len()
        );
        let _ = writeln!(out, "trace_hash = {:016x}", self.trace_hash);
        let _ = writeln!(out, "max_message_bits = {}", self.max_message_bits);
        for c in &self.invariants {
            let _ = writeln!(out, "invariant.{} = {}", c.name, if c.holds { "pass" } else { "fail" });
        }
        for (k, v) in &self.extra {
            let _ = writeln!(out, "{k} = {v}");
        }
        let informed: Vec<String> = self
            .first_informed
            .iter()
            .map(|r| r.map_or_else(|| "-".to_string(), |r| r.to_string()))
            .collect();
        let _ = writeln!(out, "first_informed = {}", informed.join(" "));
        out
    }
}

pub(crate) fn mode_name(mode: ProfileMode) -> &'static str {
    match mode {
        ProfileMode::Theory => "theory",
        ProfileMode::Tuned => "tuned",
    }
}

/// Parses `key = value` lines back into pairs.
pub fn parse_summary_text(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once(" = "))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

/// Rounds from `origin` until the last station got informed. Informed
/// times count elapsed rounds, so a decode in round `r` is time `r + 1`.
pub(crate) fn completion_from(first_informed: &[Option<u64>], origin: u64) -> Option<u64> {
    let mut last = origin;
    for r in first_informed {
        last = last.max((*r)?);
    }
    Some(last - origin)
}
