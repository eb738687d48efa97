use super::PipelineError;
use crate::logic::Label;

fn balanced(counts: [usize; 3], tolerance: f64) -> bool {
    let total: usize = counts.iter().sum();
    total > 0
        && counts
            .iter()
            .all(|&c| (c as f64 / total as f64 - 1.0 / 3.0).abs() <= tolerance + 1e-12)
}

/// Decides which items survive hard-neutral mining.
///
/// Neutral items are ranked by `p_neutral` (most confident first, ties by
/// position) and dropped from the top until every label share is within
/// `tolerance` of 1/3. Non-neutral items are always kept.
pub fn mine_hard_neutrals(labels: &[Label], p_neutral: &[f64], tolerance: f64) -> Result<Vec<bool>, PipelineError> {
    assert_eq!(labels.len(), p_neutral.len());
    let mut counts = [0usize; 3];
    for l in labels {
        counts[l.index()] += 1;
    }
    let mut keep = vec![true; labels.len()];
    if balanced(counts, tolerance) {
        return Ok(keep);
    }
    let n = Label::Neutral.index();
    let mut neutrals: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == Label::Neutral).collect();
    neutrals.sort_by(|&a, &b| p_neutral[b].total_cmp(&p_neutral[a]).then(a.cmp(&b)));
    for i in neutrals {
        keep[i] = false;
        counts[n] -= 1;
        if balanced(counts, tolerance) {
            return Ok(keep);
        }
    }
    Err(PipelineError::InsufficientNonNeutrals(format!(
        "{} entailments and {} contradictions cannot be balanced within {tolerance}",
        counts[Label::Entailment.index()],
        counts[Label::Contradiction.index()]
    )))
}
