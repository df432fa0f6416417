//! Similarity of disease states.
//!
//! Two states of the combined disease node are similar when the ratio of
//! their probabilities is unchanged by any instantiation of the findings.
//! [`states_similar`] tests the operational criterion: the two states'
//! columns of the finding-conditional matrix are identical (within a
//! tolerance). [`likelihood_ratio_invariant`] tests the definition directly
//! by enumerating every finding instantiation; it exists to validate the
//! column criterion, not for production use.

use crate::error::{Bn2oError, Result};
use crate::exact::finding_conditional;
use crate::network::{Bn2oNetwork, DiseaseState, Evidence};

/// Column criterion: `|p(f_j | a) - p(f_j | b)| <= tol` for every finding.
pub fn states_similar(
    net: &Bn2oNetwork,
    a: &DiseaseState,
    b: &DiseaseState,
    tol: f64,
) -> Result<bool> {
    a.check_dims(net)?;
    b.check_dims(net)?;
    for j in 0..net.n_findings {
        let pa = finding_conditional(net, j, a)?;
        let pb = finding_conditional(net, j, b)?;
        if (pa - pb).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Largest per-finding gap between the two states' conditional columns.
pub fn max_column_gap(net: &Bn2oNetwork, a: &DiseaseState, b: &DiseaseState) -> Result<f64> {
    a.check_dims(net)?;
    b.check_dims(net)?;
    let mut gap: f64 = 0.0;
    for j in 0..net.n_findings {
        let pa = finding_conditional(net, j, a)?;
        let pb = finding_conditional(net, j, b)?;
        gap = gap.max((pa - pb).abs());
    }
    Ok(gap)
}

/// Definition-level similarity test: enumerates every assignment of each
/// finding to positive / negative / unobserved (3^n_findings evidence sets)
/// and checks that the joint-probability ratio of the two states stays
/// within relative `tol` of the prior ratio.
///
/// If exactly one of the two joints vanishes under some instantiation the
/// ratio has changed (to 0 or infinity), so the pair is not similar; if both
/// vanish the instantiation carries no information about the pair and is
/// skipped.
pub fn likelihood_ratio_invariant(
    net: &Bn2oNetwork,
    a: &DiseaseState,
    b: &DiseaseState,
    tol: f64,
) -> Result<bool> {
    a.check_dims(net)?;
    b.check_dims(net)?;
    let prior_a = state_prior(net, a);
    let prior_b = state_prior(net, b);
    if prior_a == 0.0 || prior_b == 0.0 {
        return Err(Bn2oError::InvalidModel(
            "likelihood-ratio test requires both states to have nonzero prior".into(),
        ));
    }
    let n2 = net.n_findings;
    let instantiations = 3u128
        .checked_pow(n2 as u32)
        .ok_or(Bn2oError::Overflow("evidence instantiation count"))?;
    if instantiations > 1 << 24 {
        return Err(Bn2oError::CapExceeded {
            what: "exhaustive evidence enumeration",
            size: instantiations,
            cap: 1 << 24,
        });
    }
    let prior_ratio = prior_a / prior_b;

    // base-3 counter over findings: 0 unobserved, 1 positive, 2 negative
    let mut trits = vec![0u8; n2];
    loop {
        let mut positive = Vec::new();
        let mut negative = Vec::new();
        for (i, &t) in trits.iter().enumerate() {
            match t {
                1 => positive.push(i),
                2 => negative.push(i),
                _ => {}
            }
        }
        let evidence = Evidence { positive, negative };
        let ja = crate::exact::joint_probability(net, a, &evidence)?;
        let jb = crate::exact::joint_probability(net, b, &evidence)?;
        match (ja == 0.0, jb == 0.0) {
            (true, true) => {}
            (true, false) | (false, true) => return Ok(false),
            (false, false) => {
                let ratio = ja / jb;
                if (ratio / prior_ratio - 1.0).abs() > tol {
                    return Ok(false);
                }
            }
        }

        // next base-3 assignment
        let mut pos = 0;
        loop {
            if pos == n2 {
                return Ok(true);
            }
            trits[pos] += 1;
            if trits[pos] < 3 {
                break;
            }
            trits[pos] = 0;
            pos += 1;
        }
    }
}

fn state_prior(net: &Bn2oNetwork, state: &DiseaseState) -> f64 {
    state
        .bits
        .iter()
        .zip(&net.priors)
        .map(|(&bit, &p)| if bit { p } else { 1.0 - p })
        .product()
}
