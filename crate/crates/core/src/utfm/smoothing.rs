//! Pseudocount smoothing of categorical estimates.
//!
//! Raw frequency estimates assign probability zero to anything unseen,
//! which both misstates the domain (an unobserved resolution is not an
//! impossible one) and breaks log-likelihood arithmetic. Adding a prior
//! count per category before normalizing fixes both.

use std::collections::BTreeMap;

use thiserror::Error;

use super::{PseudocountConfig, ResolutionDistribution};

#[derive(Debug, Error, PartialEq)]
pub enum SmoothingError {
    #[error("all observed and prior counts are zero; the distribution is undefined")]
    UndefinedDistribution,
    #[error("prior count must be positive")]
    ZeroPriorCount,
}

/// Smoothed probability of each observed category:
/// `(n_i + c_i) / sum_j (n_j + c_j)`, with `c_i` looked up in the
/// per-feature prior table (absent features count zero).
pub fn pseudocount_probability(
    observed: &BTreeMap<String, u64>,
    priors: &PseudocountConfig,
) -> Result<ResolutionDistribution, SmoothingError> {
    let mut total: u128 = 0;
    for (value, &n) in observed {
        total += n as u128 + priors.feature_count(value) as u128;
    }
    if total == 0 {
        return Err(SmoothingError::UndefinedDistribution);
    }
    let outcomes = observed
        .iter()
        .map(|(value, &n)| {
            let num = n as u128 + priors.feature_count(value) as u128;
            (value.clone(), num as f64 / total as f64)
        })
        .collect();
    Ok(ResolutionDistribution { outcomes })
}

/// How much more likely a value observed once is than one never observed,
/// given prior count `c`: `(1 + c) / c`. A zero prior is the degenerate
/// case smoothing exists to rule out, so it is rejected.
pub fn prior_knowledge_factor(c: u64) -> Result<f64, SmoothingError> {
    if c == 0 {
        return Err(SmoothingError::ZeroPriorCount);
    }
    Ok((1.0 + c as f64) / c as f64)
}
