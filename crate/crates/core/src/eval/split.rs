//! Stratified 80/10/10 splits.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::rng::{domain, stream};

/// Index lists into the patient list the split was made from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Which part slot `k` of the assignment cycle goes to: within every 10
/// consecutive slots, slot 4 is validation, slot 9 is test, the rest train.
fn part_of(k: usize) -> usize {
    match k % 10 {
        4 => 1,
        9 => 2,
        _ => 0,
    }
}

/// Patients are shuffled within their class, classes are laid out one after
/// the other, and the resulting sequence is dealt out by a fixed
/// 8:1:1 cycle. Every contiguous run of `m` slots holds `⌊m/10⌋` or
/// `⌈m/10⌉` validation and test slots each, so every class is split
/// 80/10/10 to within one patient, and so is the whole cohort.
pub fn make_split(labels: &[usize], seed: u64) -> Result<Split, EvalError> {
    if labels.len() < 10 {
        return Err(EvalError::Argument(format!(
            "a split needs at least 10 patients, got {}",
            labels.len()
        )));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut rng = stream(seed, domain::SPLIT, 0);
    let mut order = Vec::with_capacity(labels.len());
    for k in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == k).collect();
        members.shuffle(&mut rng);
        order.extend(members);
    }
    let mut parts = [Vec::new(), Vec::new(), Vec::new()];
    for (k, &i) in order.iter().enumerate() {
        parts[part_of(k)].push(i);
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, validation, test] = parts;
    Ok(Split {
        seed,
        train,
        validation,
        test,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_patients() {
        let s = make_split(&[0, 1, 2, 0, 1, 2, 0, 1, 2, 0], 3).unwrap();
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (8, 1, 1));
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(make_split(&[0; 9], 0).is_err());
        assert_eq!(s, make_split(&[0, 1, 2, 0, 1, 2, 0, 1, 2, 0], 3).unwrap());
    }
}
