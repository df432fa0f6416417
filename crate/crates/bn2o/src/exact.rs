//! Exact disease posteriors by three routes.
//!
//! * [`brute_force_posteriors`] enumerates all `2^n1` disease configurations
//!   and sums the joint. It is the ground-truth oracle for everything else.
//! * [`negative_evidence_posteriors`] is the linear fast path: with only
//!   negative findings the diseases stay conditionally independent and each
//!   posterior is a one-line update.
//! * [`quickscore_posteriors`] handles positive findings by expanding the
//!   product over positive findings into a signed sum over subsets, so the
//!   cost is exponential only in the number of positive findings.
//!
//! All functions are pure; they can be called concurrently from any number
//! of threads.

use crate::error::{Bn2oError, Result};
use crate::network::{Bn2oNetwork, DiseaseState, Evidence, Posteriors};

/// Default cap on exponential enumeration dimensions (disease count for the
/// brute-force engine, positive-finding count for quickscore).
pub const DEFAULT_ENUMERATION_CAP: u32 = 24;

/// Evidence probabilities smaller than this are treated as impossible
/// evidence: the signed quickscore sum cannot distinguish them from
/// cancellation noise.
pub const IMPOSSIBLE_EVIDENCE_TOLERANCE: f64 = 1e-12;

/// Noisy-OR conditional `p(f_i | state)`:
/// `1 - (1 - leak_i) * prod_j (1 - c_ij * x_j)`.
pub fn finding_conditional(net: &Bn2oNetwork, finding: usize, state: &DiseaseState) -> Result<f64> {
    net.check_finding(finding)?;
    state.check_dims(net)?;
    let row = &net.coeffs[finding];
    let mut absent = 1.0 - net.leaks[finding];
    for (j, &bit) in state.bits.iter().enumerate() {
        if bit {
            absent *= 1.0 - row[j];
        }
    }
    Ok(1.0 - absent)
}

/// Same conditional, for a state given as an integer encoding (bit `j` is
/// disease `j`). Used by the enumeration loops.
pub(crate) fn finding_conditional_mask(net: &Bn2oNetwork, finding: usize, mask: u64) -> f64 {
    let row = &net.coeffs[finding];
    let mut absent = 1.0 - net.leaks[finding];
    let mut m = mask;
    while m != 0 {
        let j = m.trailing_zeros() as usize;
        absent *= 1.0 - row[j];
        m &= m - 1;
    }
    1.0 - absent
}

/// Prior marginal `p(f_i)` in time linear in the number of diseases:
/// `1 - (1 - leak_i) * prod_k [p(!d_k) + p(d_k) * (1 - c_ik)]`.
pub fn prior_finding_marginal(net: &Bn2oNetwork, finding: usize) -> Result<f64> {
    net.check_finding(finding)?;
    let row = &net.coeffs[finding];
    let mut absent = 1.0 - net.leaks[finding];
    for (k, &p) in net.priors.iter().enumerate() {
        absent *= (1.0 - p) + p * (1.0 - row[k]);
    }
    Ok(1.0 - absent)
}

/// Prior probability of one joint disease configuration.
pub(crate) fn state_prior_mask(net: &Bn2oNetwork, mask: u64) -> f64 {
    net.priors
        .iter()
        .enumerate()
        .map(|(j, &p)| if mask >> j & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// Unnormalized joint `P(state, evidence)`: prior product times the
/// conditional of every observed finding.
pub fn joint_probability(net: &Bn2oNetwork, state: &DiseaseState, evidence: &Evidence) -> Result<f64> {
    state.check_dims(net)?;
    evidence.validate_for(net)?;
    let mut p: f64 = state
        .bits
        .iter()
        .zip(&net.priors)
        .map(|(&bit, &prior)| if bit { prior } else { 1.0 - prior })
        .product();
    for &i in &evidence.positive {
        p *= finding_conditional(net, i, state)?;
    }
    for &i in &evidence.negative {
        p *= 1.0 - finding_conditional(net, i, state)?;
    }
    Ok(p)
}

fn joint_probability_mask(net: &Bn2oNetwork, mask: u64, evidence: &Evidence) -> f64 {
    let mut p = state_prior_mask(net, mask);
    for &i in &evidence.positive {
        p *= finding_conditional_mask(net, i, mask);
    }
    for &i in &evidence.negative {
        p *= 1.0 - finding_conditional_mask(net, i, mask);
    }
    p
}

/// Ground-truth posteriors by summing the joint over all `2^n1` disease
/// configurations. Exponential in the disease count; refuses to run past
/// `cap` diseases.
pub fn brute_force_posteriors_capped(
    net: &Bn2oNetwork,
    evidence: &Evidence,
    cap: u32,
) -> Result<Posteriors> {
    evidence.validate_for(net)?;
    let n = net.n_diseases;
    if n as u32 > cap || n >= 64 {
        return Err(Bn2oError::CapExceeded {
            what: "brute-force disease enumeration",
            size: n as u128,
            cap: cap.min(63) as u128,
        });
    }
    let mut total = 0.0;
    let mut per_disease = vec![0.0; n];
    for mask in 0..1u64 << n {
        let p = joint_probability_mask(net, mask, evidence);
        total += p;
        let mut m = mask;
        while m != 0 {
            let j = m.trailing_zeros() as usize;
            per_disease[j] += p;
            m &= m - 1;
        }
    }
    if total == 0.0 {
        return Err(Bn2oError::ImpossibleEvidence {
            model: "brute force",
            value: total,
        });
    }
    for q in &mut per_disease {
        *q = (*q / total).clamp(0.0, 1.0);
    }
    Ok(Posteriors {
        per_disease,
        evidence_probability: total.clamp(0.0, 1.0),
    })
}

/// [`brute_force_posteriors_capped`] with the default cap.
pub fn brute_force_posteriors(net: &Bn2oNetwork, evidence: &Evidence) -> Result<Posteriors> {
    brute_force_posteriors_capped(net, evidence, DEFAULT_ENUMERATION_CAP)
}

/// Linear-time posteriors for purely negative evidence:
/// `p1(d_k) = r_k * p(d_k) / (p(!d_k) + r_k * p(d_k))` with
/// `r_k = prod_{i in neg} (1 - c_ik)`.
pub fn negative_evidence_posteriors(net: &Bn2oNetwork, negative: &[usize]) -> Result<Posteriors> {
    let evidence = Evidence::new(Vec::new(), negative.to_vec())?;
    evidence.validate_for(net)?;

    let mut evidence_probability: f64 = negative.iter().map(|&i| 1.0 - net.leaks[i]).product();
    let mut per_disease = Vec::with_capacity(net.n_diseases);
    for (k, &prior) in net.priors.iter().enumerate() {
        let survive: f64 = negative.iter().map(|&i| 1.0 - net.coeffs[i][k]).product();
        let denom = (1.0 - prior) + survive * prior;
        if denom == 0.0 {
            return Err(Bn2oError::ImpossibleEvidence {
                model: "negative-evidence fast path",
                value: 0.0,
            });
        }
        evidence_probability *= denom;
        per_disease.push((survive * prior / denom).clamp(0.0, 1.0));
    }
    if evidence_probability == 0.0 {
        return Err(Bn2oError::ImpossibleEvidence {
            model: "negative-evidence fast path",
            value: evidence_probability,
        });
    }
    Ok(Posteriors {
        per_disease,
        evidence_probability: evidence_probability.clamp(0.0, 1.0),
    })
}

/// Per-disease factor state across the subset walk: the running product of
/// `(1 - c_ik)` over the current `S + negatives`, split into the product of
/// nonzero terms and a count of exact zeros so that toggling a coefficient
/// of 1.0 never divides by zero.
#[derive(Clone, Copy)]
struct FactorState {
    nonzero_product: f64,
    zero_count: u32,
}

impl FactorState {
    fn one() -> Self {
        FactorState {
            nonzero_product: 1.0,
            zero_count: 0,
        }
    }

    fn multiply(&mut self, factor: f64) {
        if factor == 0.0 {
            self.zero_count += 1;
        } else {
            self.nonzero_product *= factor;
        }
    }

    fn divide(&mut self, factor: f64) {
        if factor == 0.0 {
            self.zero_count -= 1;
        } else {
            self.nonzero_product /= factor;
        }
    }

    fn value(&self) -> f64 {
        if self.zero_count > 0 {
            0.0
        } else {
            self.nonzero_product
        }
    }
}

/// Exact posteriors via the inclusion-exclusion expansion over subsets of
/// the positive findings. Cost `O(2^|positive| * n_diseases)` thanks to
/// Gray-code subset enumeration (one coefficient toggled per step).
///
/// The signed accumulation can cancel catastrophically when the positive
/// set approaches the cap; `|P(E)| < 1e-12` is reported as impossible
/// evidence rather than returning noise-dominated posteriors.
pub fn quickscore_posteriors_capped(
    net: &Bn2oNetwork,
    evidence: &Evidence,
    cap: u32,
) -> Result<Posteriors> {
    evidence.validate_for(net)?;
    let positive = &evidence.positive;
    let m = positive.len();
    if m as u32 > cap || m >= 64 {
        return Err(Bn2oError::CapExceeded {
            what: "quickscore positive-finding enumeration",
            size: m as u128,
            cap: cap.min(63) as u128,
        });
    }
    let n = net.n_diseases;

    // Factor state for S = empty: negative findings only.
    let mut leak = FactorState::one();
    for &i in &evidence.negative {
        leak.multiply(1.0 - net.leaks[i]);
    }
    let mut factors = vec![FactorState::one(); n];
    for &i in &evidence.negative {
        let row = &net.coeffs[i];
        for (k, f) in factors.iter_mut().enumerate() {
            f.multiply(1.0 - row[k]);
        }
    }

    let mut total = 0.0;
    let mut numerators = vec![0.0; n];
    // scratch buffers for the term evaluation
    let mut present = vec![0.0; n]; // p(d_k) * prod (1 - c_ik)
    let mut either = vec![0.0; n]; // p(!d_k) + present[k]
    let mut suffix = vec![0.0; n + 1];

    let mut accumulate = |leak: &FactorState,
                          factors: &[FactorState],
                          sign: f64,
                          total: &mut f64,
                          numerators: &mut [f64]| {
        let leak_value = leak.value();
        if leak_value == 0.0 {
            return;
        }
        for k in 0..n {
            let w = net.priors[k] * factors[k].value();
            present[k] = w;
            either[k] = (1.0 - net.priors[k]) + w;
        }
        suffix[n] = 1.0;
        for k in (0..n).rev() {
            suffix[k] = suffix[k + 1] * either[k];
        }
        *total += sign * leak_value * suffix[0];
        let mut prefix = 1.0;
        for k in 0..n {
            numerators[k] += sign * leak_value * prefix * present[k] * suffix[k + 1];
            prefix *= either[k];
        }
    };

    // S = empty
    accumulate(&leak, &factors, 1.0, &mut total, &mut numerators);

    // Gray-code walk over the remaining subsets: step t toggles the
    // positive finding at index trailing_zeros(t).
    let mut in_subset = vec![false; m];
    for t in 1..1u64 << m {
        let idx = t.trailing_zeros() as usize;
        let i = positive[idx];
        let row = &net.coeffs[i];
        if in_subset[idx] {
            leak.divide(1.0 - net.leaks[i]);
            for (k, f) in factors.iter_mut().enumerate() {
                f.divide(1.0 - row[k]);
            }
        } else {
            leak.multiply(1.0 - net.leaks[i]);
            for (k, f) in factors.iter_mut().enumerate() {
                f.multiply(1.0 - row[k]);
            }
        }
        in_subset[idx] = !in_subset[idx];
        let sign = if in_subset.iter().filter(|&&b| b).count() % 2 == 1 {
            -1.0
        } else {
            1.0
        };
        accumulate(&leak, &factors, sign, &mut total, &mut numerators);
    }

    if total < IMPOSSIBLE_EVIDENCE_TOLERANCE {
        return Err(Bn2oError::ImpossibleEvidence {
            model: "quickscore",
            value: total,
        });
    }
    let per_disease = numerators
        .iter()
        .map(|&q| (q / total).clamp(0.0, 1.0))
        .collect();
    Ok(Posteriors {
        per_disease,
        evidence_probability: total.clamp(0.0, 1.0),
    })
}

/// [`quickscore_posteriors_capped`] with the default cap.
pub fn quickscore_posteriors(net: &Bn2oNetwork, evidence: &Evidence) -> Result<Posteriors> {
    quickscore_posteriors_capped(net, evidence, DEFAULT_ENUMERATION_CAP)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net(priors: Vec<f64>, leaks: Vec<f64>, coeffs: Vec<Vec<f64>>) -> Bn2oNetwork {
        Bn2oNetwork::new(priors, leaks, coeffs).unwrap()
    }

    #[test]
    fn conditional_with_no_diseases_present_is_the_leak() {
        let n = net(vec![0.5, 0.5], vec![0.1], vec![vec![0.3, 0.7]]);
        let all_false = DiseaseState::all_false(2);
        assert_eq!(finding_conditional(&n, 0, &all_false).unwrap(), 0.1);
    }

    #[test]
    fn conditional_with_forcing_coefficient_is_one() {
        let n = net(vec![0.5], vec![0.0], vec![vec![1.0]]);
        let s = DiseaseState::new(vec![true]);
        assert_eq!(finding_conditional(&n, 0, &s).unwrap(), 1.0);
    }

    #[test]
    fn conditional_hand_expanded_product() {
        // 1 - 0.9 * 0.5 * 0.8 = 0.64
        let n = net(vec![0.5, 0.5], vec![0.1], vec![vec![0.5, 0.2]]);
        let s = DiseaseState::new(vec![true, true]);
        let got = finding_conditional(&n, 0, &s).unwrap();
        assert!((got - 0.64).abs() < 1e-15);
    }

    #[test]
    fn conditional_rejects_bad_indices() {
        let n = net(vec![0.5], vec![0.1], vec![vec![0.3]]);
        assert!(finding_conditional(&n, 1, &DiseaseState::all_false(1)).is_err());
        assert!(finding_conditional(&n, 0, &DiseaseState::all_false(2)).is_err());
    }

    #[test]
    fn prior_marginal_trivial_and_hand_derived() {
        let n = net(vec![0.5, 0.5], vec![0.2], vec![vec![0.0, 0.0]]);
        assert!((prior_finding_marginal(&n, 0).unwrap() - 0.2).abs() < 1e-15);
        // leak 0, single disease p=0.5, c=0.5: 1 - (0.5 + 0.25) = 0.25
        let n = net(vec![0.5], vec![0.0], vec![vec![0.5]]);
        assert!((prior_finding_marginal(&n, 0).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn prior_marginal_matches_enumeration() {
        let n = net(
            vec![0.3, 0.7, 0.12],
            vec![0.05, 0.4],
            vec![vec![0.9, 0.25, 0.5], vec![0.1, 0.0, 0.99]],
        );
        for finding in 0..n.n_findings {
            let mut by_enum = 0.0;
            for mask in 0..1u64 << n.n_diseases {
                by_enum += state_prior_mask(&n, mask) * finding_conditional_mask(&n, finding, mask);
            }
            let fast = prior_finding_marginal(&n, finding).unwrap();
            assert!((fast - by_enum).abs() < 1e-12, "finding {finding}");
        }
    }

    #[test]
    fn joint_prior_product_and_normalization() {
        let n = net(
            vec![0.3, 0.7],
            vec![0.05],
            vec![vec![0.9, 0.25]],
        );
        let all_false = DiseaseState::all_false(2);
        let p = joint_probability(&n, &all_false, &Evidence::empty()).unwrap();
        assert!((p - 0.7 * 0.3).abs() < 1e-15);

        let mut sum = 0.0;
        for mask in 0..4u64 {
            let s = DiseaseState::from_mask(mask, 2);
            sum += joint_probability(&n, &s, &Evidence::empty()).unwrap();
        }
        assert!((sum - 1.0).abs() < 1e-12);

        // single disease, one positive finding: p(state) * p(f | state)
        let n1 = net(vec![0.3], vec![0.1], vec![vec![0.5]]);
        let s = DiseaseState::new(vec![true]);
        let ev = Evidence::new(vec![0], vec![]).unwrap();
        let expected = 0.3 * (1.0 - 0.9 * 0.5);
        assert!((joint_probability(&n1, &s, &ev).unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn brute_force_empty_evidence_reproduces_priors() {
        let n = net(
            vec![0.3, 0.7, 0.12],
            vec![0.05],
            vec![vec![0.9, 0.25, 0.5]],
        );
        let post = brute_force_posteriors(&n, &Evidence::empty()).unwrap();
        for (q, p) in post.per_disease.iter().zip(&n.priors) {
            assert!((q - p).abs() < 1e-13);
        }
        assert!((post.evidence_probability - 1.0).abs() < 1e-12);
    }

    #[test]
    fn brute_force_single_disease_negative_finding() {
        // enumerate 2 states: 0.5 * 1 vs 0.5 * 0.5 -> p1(d) = 1/3
        let n = net(vec![0.5], vec![0.0], vec![vec![0.5]]);
        let ev = Evidence::new(vec![], vec![0]).unwrap();
        let post = brute_force_posteriors(&n, &ev).unwrap();
        assert!((post.per_disease[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((post.evidence_probability - 0.75).abs() < 1e-15);
    }

    #[test]
    fn brute_force_cap_is_enforced() {
        let n = net(vec![0.5; 6], vec![0.1], vec![vec![0.2; 6]]);
        let err = brute_force_posteriors_capped(&n, &Evidence::empty(), 5).unwrap_err();
        assert!(err.is_infeasible());
    }

    #[test]
    fn negative_engine_empty_set_keeps_priors() {
        let n = net(vec![0.3, 0.7], vec![0.05], vec![vec![0.9, 0.25]]);
        let post = negative_evidence_posteriors(&n, &[]).unwrap();
        assert_eq!(post.per_disease, vec![0.3, 0.7]);
        assert_eq!(post.evidence_probability, 1.0);
    }

    #[test]
    fn negative_engine_matches_hand_value_and_oracle() {
        let n = net(vec![0.5], vec![0.0], vec![vec![0.5]]);
        let post = negative_evidence_posteriors(&n, &[0]).unwrap();
        assert!((post.per_disease[0] - 1.0 / 3.0).abs() < 1e-15);

        let n = net(
            vec![0.3, 0.7, 0.12],
            vec![0.05, 0.4],
            vec![vec![0.9, 0.25, 0.5], vec![0.1, 0.0, 0.99]],
        );
        let ev = Evidence::new(vec![], vec![0, 1]).unwrap();
        let brute = brute_force_posteriors(&n, &ev).unwrap();
        let fast = negative_evidence_posteriors(&n, &[0, 1]).unwrap();
        for (a, b) in fast.per_disease.iter().zip(&brute.per_disease) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((fast.evidence_probability - brute.evidence_probability).abs() < 1e-12);
    }

    #[test]
    fn negative_engine_keeps_prior_for_disconnected_disease() {
        let n = net(
            vec![0.3, 0.7],
            vec![0.05, 0.4],
            vec![vec![0.0, 0.25], vec![0.0, 0.99]],
        );
        let post = negative_evidence_posteriors(&n, &[0, 1]).unwrap();
        assert_eq!(post.per_disease[0], 0.3);
    }

    #[test]
    fn quickscore_no_positive_findings_matches_negative_engine() {
        let n = net(
            vec![0.3, 0.7, 0.12],
            vec![0.05, 0.4],
            vec![vec![0.9, 0.25, 0.5], vec![0.1, 0.0, 0.99]],
        );
        let ev = Evidence::new(vec![], vec![1, 0]).unwrap();
        let a = quickscore_posteriors(&n, &ev).unwrap();
        let b = negative_evidence_posteriors(&n, &[1, 0]).unwrap();
        for (x, y) in a.per_disease.iter().zip(&b.per_disease) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!((a.evidence_probability - b.evidence_probability).abs() < 1e-12);
    }

    #[test]
    fn quickscore_forcing_positive_finding() {
        // leak 0, c = 1: only d = true explains the finding
        let n = net(vec![0.5], vec![0.0], vec![vec![1.0]]);
        let ev = Evidence::new(vec![0], vec![]).unwrap();
        let post = quickscore_posteriors(&n, &ev).unwrap();
        assert!((post.per_disease[0] - 1.0).abs() < 1e-15);
        assert!((post.evidence_probability - 0.5).abs() < 1e-15);
    }

    #[test]
    fn quickscore_cap_is_enforced() {
        let n = net(vec![0.5], vec![0.1, 0.1, 0.1], vec![vec![0.2]; 3]);
        let ev = Evidence::new(vec![0, 1, 2], vec![]).unwrap();
        let err = quickscore_posteriors_capped(&n, &ev, 2).unwrap_err();
        assert!(err.is_infeasible());
    }

    #[test]
    fn impossible_positive_finding_is_an_error_in_both_engines() {
        // leak 0 and no causes: the finding can never be true
        let n = net(vec![0.5, 0.5], vec![0.0], vec![vec![0.0, 0.0]]);
        let ev = Evidence::new(vec![0], vec![]).unwrap();
        assert!(brute_force_posteriors(&n, &ev)
            .unwrap_err()
            .is_impossible_evidence());
        assert!(quickscore_posteriors(&n, &ev)
            .unwrap_err()
            .is_impossible_evidence());
    }

    #[test]
    fn quickscore_handles_forcing_coefficients_in_subsets() {
        // coefficients of exactly 1.0 exercise the zero-count bookkeeping
        let n = net(
            vec![0.4, 0.25],
            vec![0.0, 0.2],
            vec![vec![1.0, 0.5], vec![1.0, 1.0]],
        );
        for ev in [
            Evidence::new(vec![0, 1], vec![]).unwrap(),
            Evidence::new(vec![0], vec![1]).unwrap(),
            Evidence::new(vec![1], vec![0]).unwrap(),
        ] {
            let brute = brute_force_posteriors(&n, &ev);
            let quick = quickscore_posteriors(&n, &ev);
            match (brute, quick) {
                (Ok(b), Ok(q)) => {
                    for (x, y) in q.per_disease.iter().zip(&b.per_disease) {
                        assert!((x - y).abs() < 1e-9, "{ev:?}");
                    }
                }
                (Err(b), Err(q)) => {
                    assert!(b.is_impossible_evidence() && q.is_impossible_evidence())
                }
                (b, q) => panic!("engines disagree on feasibility: {b:?} vs {q:?}"),
            }
        }
    }

    #[test]
    fn monotone_evidence_effect() {
        // finding 1 is caused only by disease 0; observing it positive can
        // only raise that disease's posterior.
        let n = net(
            vec![0.2, 0.4],
            vec![0.1, 0.05],
            vec![vec![0.6, 0.3], vec![0.7, 0.0]],
        );
        let base = Evidence::new(vec![0], vec![]).unwrap();
        let more = Evidence::new(vec![0, 1], vec![]).unwrap();
        let before = brute_force_posteriors(&n, &base).unwrap();
        let after = brute_force_posteriors(&n, &more).unwrap();
        assert!(after.per_disease[0] >= before.per_disease[0]);
    }
}
