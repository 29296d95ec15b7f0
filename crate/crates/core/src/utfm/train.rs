//! Baum-Welch fitting of the machine's parameters to observation corpora.
//!
//! The generative reading used for training: the machine starts in a state
//! drawn from the initial distribution; at each step the current state
//! emits a symbol from its emission distribution and the machine then moves
//! to a successor conditioned on (state, symbol). The final state of a
//! sequence emits nothing.
//!
//! Expected counts are accumulated with a rescaled forward-backward pass
//! and, before each re-normalization, augmented by the configured prior
//! counts so that categories never observed keep positive probability.

#![allow(clippy::needless_range_loop)]

use thiserror::Error;

use super::{with_parameters, PseudocountConfig, TrainingCorpus, Utfm, UtfmError};

#[derive(Debug, Error, PartialEq)]
pub enum TrainError {
    #[error("model fails validation before training: {0}")]
    InvalidModel(String),
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("sequence weights must be positive and match the sequence count")]
    BadWeights,
    #[error("tolerance must be positive")]
    BadTolerance,
    #[error("max_iter must be at least 1")]
    BadMaxIter,
    #[error(transparent)]
    Domain(#[from] UtfmError),
    #[error("corpus log-likelihood became non-finite (a sequence has probability zero under the model)")]
    NumericalFailure,
}

/// Trained model plus the per-iteration corpus log2-likelihood record.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Utfm,
    pub log2_likelihoods: Vec<f64>,
}

struct SequencePass {
    log2_likelihood: f64,
    /// gamma[i][s]: posterior that the machine was in state s before
    /// consuming symbol i (gamma[k] is the final state posterior).
    gamma: Vec<Vec<f64>>,
    /// xi[i][s][t]: posterior that transition i went s -> t.
    xi: Vec<Vec<f64>>,
}

fn forward_backward(model: &Utfm, xs: &[usize]) -> Option<SequencePass> {
    let n = model.n_states();
    let k = xs.len();

    let mut alpha = vec![vec![0.0_f64; n]; k + 1];
    let mut scale = vec![0.0_f64; k + 1];

    alpha[0].copy_from_slice(model.initial_vec());
    let c0: f64 = alpha[0].iter().sum();
    if c0 <= 0.0 {
        return None;
    }
    for v in &mut alpha[0] {
        *v /= c0;
    }
    scale[0] = c0;

    for i in 0..k {
        let a = xs[i];
        let (prev, rest) = alpha.split_at_mut(i + 1);
        let cur = &mut rest[0];
        for s in 0..n {
            let w = prev[i][s] * model.emit(s, a);
            if w == 0.0 {
                continue;
            }
            for t in 0..n {
                cur[t] += w * model.trans(s, a, t);
            }
        }
        let c: f64 = cur.iter().sum();
        if c <= 0.0 || !c.is_finite() {
            return None;
        }
        for v in cur.iter_mut() {
            *v /= c;
        }
        scale[i + 1] = c;
    }

    let mut beta = vec![vec![0.0_f64; n]; k + 1];
    beta[k].iter_mut().for_each(|v| *v = 1.0);
    for i in (1..=k).rev() {
        let a = xs[i - 1];
        let (head, tail) = beta.split_at_mut(i);
        let next = &tail[0];
        let cur = &mut head[i - 1];
        for s in 0..n {
            let mut acc = 0.0;
            let e = model.emit(s, a);
            if e > 0.0 {
                for t in 0..n {
                    let p = model.trans(s, a, t);
                    if p > 0.0 {
                        acc += e * p * next[t];
                    }
                }
            }
            cur[s] = acc / scale[i];
        }
    }

    let mut gamma = vec![vec![0.0_f64; n]; k + 1];
    for i in 0..=k {
        for s in 0..n {
            gamma[i][s] = alpha[i][s] * beta[i][s];
        }
    }

    let mut xi = vec![vec![0.0_f64; n * n]; k];
    for i in 0..k {
        let a = xs[i];
        for s in 0..n {
            let base = alpha[i][s] * model.emit(s, a);
            if base == 0.0 {
                continue;
            }
            for t in 0..n {
                let p = model.trans(s, a, t);
                if p > 0.0 {
                    xi[i][s * n + t] = base * p * beta[i + 1][t] / scale[i + 1];
                }
            }
        }
    }

    let log2_likelihood: f64 = scale.iter().map(|c| c.log2()).sum();
    Some(SequencePass { log2_likelihood, gamma, xi })
}

/// Corpus log2-likelihood of the model under the generative reading above.
pub fn corpus_log2_likelihood(model: &Utfm, corpus: &TrainingCorpus) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (i, seq) in corpus.sequences.iter().enumerate() {
        let xs = index_sequence(model, seq)?;
        let pass = forward_backward(model, &xs).ok_or(TrainError::NumericalFailure)?;
        total += corpus.weight(i) * pass.log2_likelihood;
    }
    if !total.is_finite() {
        return Err(TrainError::NumericalFailure);
    }
    Ok(total)
}

fn index_sequence(model: &Utfm, seq: &[super::ActionSymbol]) -> Result<Vec<usize>, TrainError> {
    seq.iter()
        .map(|sym| {
            model
                .symbol_index(sym)
                .ok_or_else(|| TrainError::Domain(UtfmError::UnknownSymbol(sym.clone())))
        })
        .collect()
}

/// Run Baum-Welch until the log-likelihood improvement drops below `tol`
/// or `max_iter` iterations have been logged.
///
/// Prior counts are added per cell before each re-normalization: every
/// emission cell of a state receives the state's phase count plus the
/// symbol's feature count, and transition cells receive the phase count on
/// the cells the input model already supports, so structural zeros in the
/// transition topology survive training. Rows with no mass (state never
/// reached, zero priors) keep their previous values.
pub fn train_baum_welch(
    model: &Utfm,
    corpus: &TrainingCorpus,
    priors: &PseudocountConfig,
    tol: f64,
    max_iter: usize,
) -> Result<TrainOutcome, TrainError> {
    let report = model.validate();
    if !report.is_valid() {
        return Err(TrainError::InvalidModel(report.to_string()));
    }
    if corpus.sequences.is_empty() {
        return Err(TrainError::EmptyCorpus);
    }
    if let Some(w) = &corpus.weights {
        if w.len() != corpus.sequences.len() || w.iter().any(|&x| x.is_nan() || x <= 0.0) {
            return Err(TrainError::BadWeights);
        }
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(TrainError::BadTolerance);
    }
    if max_iter == 0 {
        return Err(TrainError::BadMaxIter);
    }

    let indexed: Vec<Vec<usize>> = corpus
        .sequences
        .iter()
        .map(|seq| index_sequence(model, seq))
        .collect::<Result<_, _>>()?;

    let n = model.n_states();
    let m = model.n_symbols();

    let mut current = model.clone();
    let mut log: Vec<f64> = Vec::new();

    for iter in 0..max_iter {
        let mut init_counts = vec![0.0_f64; n];
        let mut emit_counts = vec![0.0_f64; n * m];
        let mut trans_counts = vec![0.0_f64; n * m * n];
        let mut ll = 0.0_f64;

        for (i, xs) in indexed.iter().enumerate() {
            let w = corpus.weight(i);
            let pass = forward_backward(&current, xs).ok_or(TrainError::NumericalFailure)?;
            ll += w * pass.log2_likelihood;
            for s in 0..n {
                init_counts[s] += w * pass.gamma[0][s];
            }
            for (step, &a) in xs.iter().enumerate() {
                for s in 0..n {
                    let g = pass.gamma[step][s];
                    if g > 0.0 {
                        emit_counts[s * m + a] += w * g;
                    }
                }
                for s in 0..n {
                    for t in 0..n {
                        let x = pass.xi[step][s * n + t];
                        if x > 0.0 {
                            trans_counts[(s * m + a) * n + t] += w * x;
                        }
                    }
                }
            }
        }

        if !ll.is_finite() {
            return Err(TrainError::NumericalFailure);
        }
        log.push(ll);
        if iter > 0 && ll - log[iter - 1] < tol {
            break;
        }

        // M-step with prior counts.
        let mut initial = vec![0.0_f64; n];
        let init_total: f64 = init_counts.iter().sum();
        if init_total > 0.0 {
            for s in 0..n {
                initial[s] = init_counts[s] / init_total;
            }
        } else {
            initial.copy_from_slice(current.initial_vec());
        }

        let mut emissions = vec![0.0_f64; n * m];
        for s in 0..n {
            let phase_c = priors.phase_count(current.states()[s].phase()) as f64;
            let mut row = vec![0.0_f64; m];
            let mut total = 0.0;
            for a in 0..m {
                let prior = phase_c + priors.feature_count(current.alphabet()[a].as_str()) as f64;
                row[a] = emit_counts[s * m + a] + prior;
                total += row[a];
            }
            if total > 0.0 {
                for a in 0..m {
                    emissions[s * m + a] = row[a] / total;
                }
            } else {
                for a in 0..m {
                    emissions[s * m + a] = current.emit(s, a);
                }
            }
        }

        let mut transitions = vec![0.0_f64; n * m * n];
        for s in 0..n {
            let phase_c = priors.phase_count(current.states()[s].phase()) as f64;
            for a in 0..m {
                let mut row = vec![0.0_f64; n];
                let mut total = 0.0;
                for t in 0..n {
                    let supported = current.trans(s, a, t) > 0.0;
                    let prior = if supported { phase_c } else { 0.0 };
                    row[t] = trans_counts[(s * m + a) * n + t] + prior;
                    total += row[t];
                }
                if total > 0.0 {
                    for t in 0..n {
                        transitions[(s * m + a) * n + t] = row[t] / total;
                    }
                } else {
                    for t in 0..n {
                        transitions[(s * m + a) * n + t] = current.trans(s, a, t);
                    }
                }
            }
        }

        current = with_parameters(&current, initial, transitions, emissions);
    }

    Ok(TrainOutcome { model: current, log2_likelihoods: log })
}
