//! Probabilistic finite state machine underlying each functional role's
//! uncertainty model.
//!
//! A [`Utfm`] couples a symbol-conditioned transition structure (given the
//! machine is in state `s` and reads symbol `a`, it moves to `s'` with
//! probability `P(s' | s, a)`) with a per-state emission distribution over
//! symbols. The driven operations (trace probability, acceptance
//! probability, Viterbi decoding) treat the symbol sequence as an input and
//! consult only the transition structure; the emission layer makes the
//! machine generative so it can be fit to observation corpora with
//! [`train_baum_welch`].
//!
//! All likelihood arithmetic runs in the log2 domain (or with per-step
//! rescaling), with `-inf` standing in for probability zero.

#![allow(clippy::needless_range_loop)]

mod io;
mod smoothing;
mod train;

pub use io::{parse_model, render_model, ModelFormatError};
pub use smoothing::{prior_knowledge_factor, pseudocount_probability, SmoothingError};
pub use train::{corpus_log2_likelihood, train_baum_welch, TrainError, TrainOutcome};

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Tolerance for distribution sum checks.
pub const PROB_TOL: f64 = 1e-9;

/// Phase of disruption-management activity a state belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Tactical,
    Operational,
    Strategic,
}

impl Phase {
    pub const ALL: [Phase; 3] = [Phase::Tactical, Phase::Operational, Phase::Strategic];

    pub fn name(self) -> &'static str {
        match self {
            Phase::Tactical => "Tactical",
            Phase::Operational => "Operational",
            Phase::Strategic => "Strategic",
        }
    }

    pub fn parse(s: &str) -> Option<Phase> {
        match s.to_ascii_lowercase().as_str() {
            "tactical" => Some(Phase::Tactical),
            "operational" => Some(Phase::Operational),
            "strategic" => Some(Phase::Strategic),
            _ => None,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One of the twelve named machine states: four flight segments
/// (Turnaround, Taxi-Out, Enroute, Taxi-In) crossed with three phases
/// (Schedule, Decision, Outcome).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum StateId {
    Tas,
    Tos,
    Es,
    Tis,
    Tad,
    Tod,
    Ed,
    Tid,
    Tao,
    Too,
    Eo,
    Tio,
}

impl StateId {
    pub const ALL: [StateId; 12] = [
        StateId::Tas,
        StateId::Tos,
        StateId::Es,
        StateId::Tis,
        StateId::Tad,
        StateId::Tod,
        StateId::Ed,
        StateId::Tid,
        StateId::Tao,
        StateId::Too,
        StateId::Eo,
        StateId::Tio,
    ];

    pub fn phase(self) -> Phase {
        match self {
            StateId::Tas | StateId::Tos | StateId::Es | StateId::Tis => Phase::Tactical,
            StateId::Tad | StateId::Tod | StateId::Ed | StateId::Tid => Phase::Operational,
            StateId::Tao | StateId::Too | StateId::Eo | StateId::Tio => Phase::Strategic,
        }
    }

    /// Flight segment index: Turnaround 0, Taxi-Out 1, Enroute 2, Taxi-In 3.
    pub fn segment(self) -> usize {
        match self {
            StateId::Tas | StateId::Tad | StateId::Tao => 0,
            StateId::Tos | StateId::Tod | StateId::Too => 1,
            StateId::Es | StateId::Ed | StateId::Eo => 2,
            StateId::Tis | StateId::Tid | StateId::Tio => 3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            StateId::Tas => "TAS",
            StateId::Tos => "TOS",
            StateId::Es => "ES",
            StateId::Tis => "TIS",
            StateId::Tad => "TAD",
            StateId::Tod => "TOD",
            StateId::Ed => "ED",
            StateId::Tid => "TID",
            StateId::Tao => "TAO",
            StateId::Too => "TOO",
            StateId::Eo => "EO",
            StateId::Tio => "TIO",
        }
    }

    pub fn parse(s: &str) -> Option<StateId> {
        StateId::ALL.iter().copied().find(|st| st.name() == s)
    }
}

impl fmt::Display for StateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Opaque token from a scenario's finite action alphabet.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionSymbol(pub String);

impl ActionSymbol {
    pub fn new(s: impl Into<String>) -> Self {
        ActionSymbol(s.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ActionSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ActionSymbol {
    fn from(s: &str) -> Self {
        ActionSymbol(s.to_string())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum UtfmError {
    #[error("state {0} is not part of this model")]
    UnknownState(StateId),
    #[error("symbol `{0}` is not part of this model's alphabet")]
    UnknownSymbol(ActionSymbol),
    #[error("trace must contain at least one state")]
    EmptyTrace,
    #[error("trace has {states} states but {symbols} symbols; expected one more state than symbols")]
    TraceShape { states: usize, symbols: usize },
    #[error("input sequence must be non-empty")]
    EmptyInput,
    #[error("no admissible path: every state sequence for this input has probability zero")]
    NoAdmissiblePath,
}

/// A single violation found by [`Utfm::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// Successor distribution for `(state, symbol)` is non-empty but does
    /// not sum to one; `deviation` is `|sum - 1|`.
    TransitionSum {
        state: StateId,
        symbol: ActionSymbol,
        deviation: f64,
    },
    InitialSum { deviation: f64 },
    EmissionSum { state: StateId, deviation: f64 },
    ProbabilityOutOfRange { context: String, value: f64 },
    NoAcceptStates,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TransitionSum { state, symbol, deviation } => write!(
                f,
                "transition distribution ({state}, {symbol}) deviates from 1 by {deviation:.3e}"
            ),
            Violation::InitialSum { deviation } => {
                write!(f, "initial distribution deviates from 1 by {deviation:.3e}")
            }
            Violation::EmissionSum { state, deviation } => {
                write!(f, "emission distribution of {state} deviates from 1 by {deviation:.3e}")
            }
            Violation::ProbabilityOutOfRange { context, value } => {
                write!(f, "probability out of [0, 1] in {context}: {value}")
            }
            Violation::NoAcceptStates => write!(f, "model declares no accept states"),
        }
    }
}

/// Result of checking a model against the stochasticity invariants.
/// Violations are data, not failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "pass")
        } else {
            for v in &self.violations {
                writeln!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// A decoded path through the machine: states `s0..sk` interleaved with the
/// input symbols `x1..xk` that drove each transition.
///
/// `log2_probability` is the log2 of the product of the transition
/// probabilities along the path (the initial-state weight is not included).
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub states: Vec<StateId>,
    pub symbols: Vec<ActionSymbol>,
    pub log2_probability: f64,
}

impl Trace {
    pub fn probability(&self) -> f64 {
        self.log2_probability.exp2()
    }

    /// Number of transitions taken.
    pub fn transitions(&self) -> usize {
        self.symbols.len()
    }
}

/// A distribution over candidate resolution outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolutionDistribution {
    pub outcomes: BTreeMap<String, f64>,
}

impl ResolutionDistribution {
    pub fn probabilities(&self) -> impl Iterator<Item = f64> + '_ {
        self.outcomes.values().copied()
    }
}

/// Prior counts used to smooth expected counts during training and when
/// estimating outcome distributions from raw tallies.
///
/// `per_phase` applies to every cell owned by a state of that phase;
/// `per_feature` adds a symbol-specific count on top.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PseudocountConfig {
    pub per_phase: BTreeMap<Phase, u64>,
    pub per_feature: BTreeMap<String, u64>,
}

impl PseudocountConfig {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn with_phase(mut self, phase: Phase, count: u64) -> Self {
        self.per_phase.insert(phase, count);
        self
    }

    pub fn with_feature(mut self, feature: impl Into<String>, count: u64) -> Self {
        self.per_feature.insert(feature.into(), count);
        self
    }

    pub fn phase_count(&self, phase: Phase) -> u64 {
        self.per_phase.get(&phase).copied().unwrap_or(0)
    }

    pub fn feature_count(&self, feature: &str) -> u64 {
        self.per_feature.get(feature).copied().unwrap_or(0)
    }

    pub fn is_zero(&self) -> bool {
        self.per_phase.values().all(|&c| c == 0) && self.per_feature.values().all(|&c| c == 0)
    }
}

/// Weighted observation sequences for training.
#[derive(Debug, Clone, Default)]
pub struct TrainingCorpus {
    pub sequences: Vec<Vec<ActionSymbol>>,
    /// Per-sequence positive weights; `None` means every sequence counts once.
    pub weights: Option<Vec<f64>>,
}

impl TrainingCorpus {
    pub fn from_sequences(sequences: Vec<Vec<ActionSymbol>>) -> Self {
        TrainingCorpus { sequences, weights: None }
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights.as_ref().map(|w| w[i]).unwrap_or(1.0)
    }
}

/// The probabilistic state machine. Construct with [`UtfmBuilder`]; the
/// constructor checks shapes only, so that [`Utfm::validate`] can report
/// probability violations as data.
#[derive(Debug, Clone, PartialEq)]
pub struct Utfm {
    states: Vec<StateId>,
    alphabet: Vec<ActionSymbol>,
    /// Initial distribution, indexed by state.
    initial: Vec<f64>,
    /// Successor probabilities, indexed `[s][a][s']` row-major.
    transitions: Vec<f64>,
    /// Emission probabilities, indexed `[s][a]` row-major.
    emissions: Vec<f64>,
    accept: Vec<bool>,
}

impl Utfm {
    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn alphabet(&self) -> &[ActionSymbol] {
        &self.alphabet
    }

    pub fn n_states(&self) -> usize {
        self.states.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.alphabet.len()
    }

    pub fn is_accept(&self, state: StateId) -> bool {
        self.state_index(state).map(|i| self.accept[i]).unwrap_or(false)
    }

    pub fn accept_states(&self) -> Vec<StateId> {
        self.states
            .iter()
            .copied()
            .zip(&self.accept)
            .filter_map(|(s, &a)| a.then_some(s))
            .collect()
    }

    pub fn initial_probability(&self, state: StateId) -> Option<f64> {
        self.state_index(state).map(|i| self.initial[i])
    }

    pub fn state_index(&self, state: StateId) -> Option<usize> {
        self.states.iter().position(|&s| s == state)
    }

    pub fn symbol_index(&self, symbol: &ActionSymbol) -> Option<usize> {
        self.alphabet.iter().position(|a| a == symbol)
    }

    #[inline]
    pub(crate) fn trans(&self, s: usize, a: usize, t: usize) -> f64 {
        let n = self.states.len();
        self.transitions[(s * self.alphabet.len() + a) * n + t]
    }

    #[inline]
    pub(crate) fn emit(&self, s: usize, a: usize) -> f64 {
        self.emissions[s * self.alphabet.len() + a]
    }

    pub(crate) fn initial_vec(&self) -> &[f64] {
        &self.initial
    }

    #[cfg(test)]
    pub(crate) fn accept_flags(&self) -> &[bool] {
        &self.accept
    }

    pub fn transition_probability(
        &self,
        from: StateId,
        symbol: &ActionSymbol,
        to: StateId,
    ) -> Result<f64, UtfmError> {
        let s = self.state_index(from).ok_or(UtfmError::UnknownState(from))?;
        let a = self
            .symbol_index(symbol)
            .ok_or_else(|| UtfmError::UnknownSymbol(symbol.clone()))?;
        let t = self.state_index(to).ok_or(UtfmError::UnknownState(to))?;
        Ok(self.trans(s, a, t))
    }

    pub fn emission_probability(&self, state: StateId, symbol: &ActionSymbol) -> Result<f64, UtfmError> {
        let s = self.state_index(state).ok_or(UtfmError::UnknownState(state))?;
        let a = self
            .symbol_index(symbol)
            .ok_or_else(|| UtfmError::UnknownSymbol(symbol.clone()))?;
        Ok(self.emit(s, a))
    }

    /// Check every stochasticity invariant and report deviations.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        let n = self.states.len();
        let m = self.alphabet.len();

        let check_range = |context: String, value: f64, out: &mut Vec<Violation>| {
            if !(0.0..=1.0 + PROB_TOL).contains(&value) || !value.is_finite() {
                out.push(Violation::ProbabilityOutOfRange { context, value });
            }
        };

        for (i, &p) in self.initial.iter().enumerate() {
            check_range(format!("initial({})", self.states[i]), p, &mut violations);
        }
        let init_sum: f64 = self.initial.iter().sum();
        if (init_sum - 1.0).abs() > PROB_TOL {
            violations.push(Violation::InitialSum { deviation: (init_sum - 1.0).abs() });
        }

        for s in 0..n {
            for a in 0..m {
                let mut sum = 0.0;
                let mut any = false;
                for t in 0..n {
                    let p = self.trans(s, a, t);
                    check_range(
                        format!("transition({}, {}, {})", self.states[s], self.alphabet[a], self.states[t]),
                        p,
                        &mut violations,
                    );
                    if p > 0.0 {
                        any = true;
                    }
                    sum += p;
                }
                // An all-zero successor row is an empty transition set, which
                // is allowed; otherwise the row must be a distribution.
                if any && (sum - 1.0).abs() > PROB_TOL {
                    violations.push(Violation::TransitionSum {
                        state: self.states[s],
                        symbol: self.alphabet[a].clone(),
                        deviation: (sum - 1.0).abs(),
                    });
                }
            }
        }

        for s in 0..n {
            let mut sum = 0.0;
            for a in 0..m {
                let p = self.emit(s, a);
                check_range(
                    format!("emission({}, {})", self.states[s], self.alphabet[a]),
                    p,
                    &mut violations,
                );
                sum += p;
            }
            if (sum - 1.0).abs() > PROB_TOL {
                violations.push(Violation::EmissionSum {
                    state: self.states[s],
                    deviation: (sum - 1.0).abs(),
                });
            }
        }

        if !self.accept.iter().any(|&a| a) {
            violations.push(Violation::NoAcceptStates);
        }

        ValidationReport { violations }
    }

    /// Log2 probability of a given path: the sum of log2 transition
    /// probabilities along it. Returns `-inf` when any step leaves the
    /// transition structure. A zero-length path (one state, no symbols)
    /// has probability one.
    pub fn path_log2_probability(
        &self,
        states: &[StateId],
        symbols: &[ActionSymbol],
    ) -> Result<f64, UtfmError> {
        if states.is_empty() {
            return Err(UtfmError::EmptyTrace);
        }
        if states.len() != symbols.len() + 1 {
            return Err(UtfmError::TraceShape { states: states.len(), symbols: symbols.len() });
        }
        let mut idx = Vec::with_capacity(states.len());
        for &st in states {
            idx.push(self.state_index(st).ok_or(UtfmError::UnknownState(st))?);
        }
        let mut lp = 0.0_f64;
        for (i, sym) in symbols.iter().enumerate() {
            let a = self
                .symbol_index(sym)
                .ok_or_else(|| UtfmError::UnknownSymbol(sym.clone()))?;
            let p = self.trans(idx[i], a, idx[i + 1]);
            if p <= 0.0 {
                return Ok(f64::NEG_INFINITY);
            }
            lp += p.log2();
        }
        Ok(lp)
    }

    /// Probability of a given path (product of its transition probabilities).
    pub fn trace_probability(
        &self,
        states: &[StateId],
        symbols: &[ActionSymbol],
    ) -> Result<f64, UtfmError> {
        Ok(self.path_log2_probability(states, symbols)?.exp2())
    }

    fn symbol_indices(&self, input: &[ActionSymbol]) -> Result<Vec<usize>, UtfmError> {
        input
            .iter()
            .map(|sym| {
                self.symbol_index(sym)
                    .ok_or_else(|| UtfmError::UnknownSymbol(sym.clone()))
            })
            .collect()
    }

    /// Probability that the machine, started from the initial distribution
    /// and driven by `input`, ends in an accept state: the
    /// initial-weighted sum of path probabilities over accepting paths.
    ///
    /// Computed by a rescaled forward pass, so inputs of length up to 10^4
    /// stay finite.
    pub fn acceptance_probability(&self, input: &[ActionSymbol]) -> Result<f64, UtfmError> {
        let xs = self.symbol_indices(input)?;
        let n = self.states.len();
        let mut alpha = self.initial.clone();
        let mut log2_scale = 0.0_f64;
        for &a in &xs {
            let mut next = vec![0.0_f64; n];
            for s in 0..n {
                let w = alpha[s];
                if w == 0.0 {
                    continue;
                }
                for t in 0..n {
                    next[t] += w * self.trans(s, a, t);
                }
            }
            let total: f64 = next.iter().sum();
            if total <= 0.0 {
                return Ok(0.0);
            }
            for v in &mut next {
                *v /= total;
            }
            log2_scale += total.log2();
            alpha = next;
        }
        let accepted: f64 = alpha
            .iter()
            .zip(&self.accept)
            .filter_map(|(&v, &acc)| acc.then_some(v))
            .sum();
        Ok((accepted.log2() + log2_scale).exp2())
    }

    /// Most likely path for `input`, weighting each candidate path by the
    /// initial probability of its start state times the product of its
    /// transition probabilities. Ties break toward the lexicographically
    /// smallest state-index sequence. The returned trace reports the
    /// transition product only (see [`Trace`]).
    pub fn viterbi_decode(&self, input: &[ActionSymbol]) -> Result<Trace, UtfmError> {
        self.viterbi(input, false)
    }

    /// Like [`Utfm::viterbi_decode`] but restricted to paths that end in an
    /// accept state, which is what the stake pipeline requires of its
    /// schedule-to-outcome traces.
    pub fn viterbi_decode_accepting(&self, input: &[ActionSymbol]) -> Result<Trace, UtfmError> {
        self.viterbi(input, true)
    }

    fn viterbi(&self, input: &[ActionSymbol], accept_only: bool) -> Result<Trace, UtfmError> {
        if input.is_empty() {
            return Err(UtfmError::EmptyInput);
        }
        let xs = self.symbol_indices(input)?;
        let n = self.states.len();
        let k = xs.len();

        // Backward table: best[i][s] = best log2 transition product for
        // consuming input[i..] starting from state s. Filling it backward
        // lets the forward reconstruction pick the lexicographically
        // smallest argmax sequence.
        let mut best = vec![vec![f64::NEG_INFINITY; n]; k + 1];
        for s in 0..n {
            best[k][s] = if !accept_only || self.accept[s] { 0.0 } else { f64::NEG_INFINITY };
        }
        for i in (0..k).rev() {
            let a = xs[i];
            for s in 0..n {
                let mut b = f64::NEG_INFINITY;
                for t in 0..n {
                    let p = self.trans(s, a, t);
                    if p > 0.0 {
                        let cand = p.log2() + best[i + 1][t];
                        if cand > b {
                            b = cand;
                        }
                    }
                }
                best[i][s] = b;
            }
        }

        // Start state: maximize initial weight plus completion, smallest
        // index first.
        let mut start = None;
        let mut start_score = f64::NEG_INFINITY;
        for s in 0..n {
            if self.initial[s] <= 0.0 {
                continue;
            }
            let score = self.initial[s].log2() + best[0][s];
            if score > start_score {
                start_score = score;
                start = Some(s);
            }
        }
        let mut cur = start.ok_or(UtfmError::NoAdmissiblePath)?;
        if start_score == f64::NEG_INFINITY {
            return Err(UtfmError::NoAdmissiblePath);
        }

        let mut states = Vec::with_capacity(k + 1);
        states.push(cur);
        let mut lp = 0.0_f64;
        for (i, &a) in xs.iter().enumerate() {
            let target = best[i][cur];
            let mut chosen = None;
            for t in 0..n {
                let p = self.trans(cur, a, t);
                if p > 0.0 && p.log2() + best[i + 1][t] == target {
                    chosen = Some((t, p));
                    break;
                }
            }
            let (t, p) = chosen.expect("backward table admits a successor");
            lp += p.log2();
            states.push(t);
            cur = t;
        }

        Ok(Trace {
            states: states.into_iter().map(|i| self.states[i]).collect(),
            symbols: input.to_vec(),
            log2_probability: lp,
        })
    }
}

/// Shape errors raised while assembling a model.
#[derive(Debug, Error, PartialEq)]
pub enum BuildError {
    #[error("model must declare at least one state")]
    NoStates,
    #[error("duplicate state {0}")]
    DuplicateState(StateId),
    #[error("model must declare a non-empty alphabet")]
    NoAlphabet,
    #[error("duplicate symbol `{0}`")]
    DuplicateSymbol(ActionSymbol),
    #[error("{0} referenced before declaration")]
    UndeclaredState(StateId),
    #[error("symbol `{0}` referenced before declaration")]
    UndeclaredSymbol(ActionSymbol),
}

/// Incremental model assembly; entries default to probability zero.
#[derive(Debug, Clone, Default)]
pub struct UtfmBuilder {
    states: Vec<StateId>,
    alphabet: Vec<ActionSymbol>,
    initial: BTreeMap<StateId, f64>,
    transitions: Vec<(StateId, ActionSymbol, StateId, f64)>,
    emissions: Vec<(StateId, ActionSymbol, f64)>,
    accept: Vec<StateId>,
}

impl UtfmBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn states(mut self, states: impl IntoIterator<Item = StateId>) -> Self {
        self.states.extend(states);
        self
    }

    pub fn alphabet<I, S>(mut self, symbols: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<ActionSymbol>,
    {
        self.alphabet.extend(symbols.into_iter().map(Into::into));
        self
    }

    pub fn initial(mut self, state: StateId, p: f64) -> Self {
        self.initial.insert(state, p);
        self
    }

    pub fn transition(mut self, from: StateId, symbol: impl Into<ActionSymbol>, to: StateId, p: f64) -> Self {
        self.transitions.push((from, symbol.into(), to, p));
        self
    }

    pub fn emission(mut self, state: StateId, symbol: impl Into<ActionSymbol>, p: f64) -> Self {
        self.emissions.push((state, symbol.into(), p));
        self
    }

    pub fn accept(mut self, state: StateId) -> Self {
        self.accept.push(state);
        self
    }

    pub fn build(self) -> Result<Utfm, BuildError> {
        if self.states.is_empty() {
            return Err(BuildError::NoStates);
        }
        for (i, &s) in self.states.iter().enumerate() {
            if self.states[..i].contains(&s) {
                return Err(BuildError::DuplicateState(s));
            }
        }
        if self.alphabet.is_empty() {
            return Err(BuildError::NoAlphabet);
        }
        for (i, a) in self.alphabet.iter().enumerate() {
            if self.alphabet[..i].contains(a) {
                return Err(BuildError::DuplicateSymbol(a.clone()));
            }
        }

        let n = self.states.len();
        let m = self.alphabet.len();
        let sidx = |s: StateId| -> Result<usize, BuildError> {
            self.states.iter().position(|&x| x == s).ok_or(BuildError::UndeclaredState(s))
        };
        let aidx = |a: &ActionSymbol| -> Result<usize, BuildError> {
            self.alphabet
                .iter()
                .position(|x| x == a)
                .ok_or_else(|| BuildError::UndeclaredSymbol(a.clone()))
        };

        let mut initial = vec![0.0; n];
        for (s, p) in &self.initial {
            initial[sidx(*s)?] = *p;
        }
        let mut transitions = vec![0.0; n * m * n];
        for (from, sym, to, p) in &self.transitions {
            let (s, a, t) = (sidx(*from)?, aidx(sym)?, sidx(*to)?);
            transitions[(s * m + a) * n + t] = *p;
        }
        let mut emissions = vec![0.0; n * m];
        for (st, sym, p) in &self.emissions {
            emissions[sidx(*st)? * m + aidx(sym)?] = *p;
        }
        let mut accept = vec![false; n];
        for s in &self.accept {
            accept[sidx(*s)?] = true;
        }

        Ok(Utfm {
            states: self.states,
            alphabet: self.alphabet,
            initial,
            transitions,
            emissions,
            accept,
        })
    }
}

/// Replace the internal parameter tables wholesale; used by training.
pub(crate) fn with_parameters(
    template: &Utfm,
    initial: Vec<f64>,
    transitions: Vec<f64>,
    emissions: Vec<f64>,
) -> Utfm {
    debug_assert_eq!(initial.len(), template.states.len());
    Utfm {
        states: template.states.clone(),
        alphabet: template.alphabet.clone(),
        initial,
        transitions,
        emissions,
        accept: template.accept.clone(),
    }
}
