use super::cuts::{Cut, Operator};
use super::DiscoveryError;
use crate::log::Dfg;

/// Deviating plus estimated missing edges of a cut.
///
/// `m` below is the ceiling of the mean positive edge frequency; every missing
/// edge is charged `sup * m`.
///
/// | operator | deviating edges                    | missing edges                                   |
/// |----------|------------------------------------|-------------------------------------------------|
/// | seq      | Σ2 → Σ1                            | x ∈ Σ1 with no edge into Σ2 and no end edge     |
/// | xor      | Σ1 → Σ2 and Σ2 → Σ1                | none                                            |
/// | par      | none                               | pairs in Σ1×Σ2 and Σ2×Σ1 without a direct edge  |
/// | loop     | start → Σ2 and Σ2 → end            | redo activities with no edge to / from the body |
pub fn cut_cost(cut: &Cut, dfg: &Dfg, sup: f64) -> Result<f64, DiscoveryError> {
    let mut in_first = vec![false; dfg.len()];
    let mut seen = 0;
    for (i, a) in dfg.activities().iter().enumerate() {
        match cut.side_of(a) {
            Some(super::cuts::Side::First) => in_first[i] = true,
            Some(super::cuts::Side::Second) => {}
            None => return Err(DiscoveryError::InvalidPartition),
        }
        seen += 1;
    }
    if seen != cut.sigma1().len() + cut.sigma2().len() {
        return Err(DiscoveryError::InvalidPartition);
    }
    Ok(cost_by_mask(cut.operator(), &in_first, dfg, sup))
}

pub(crate) fn cost_by_mask(op: Operator, in_first: &[bool], dfg: &Dfg, sup: f64) -> f64 {
    let n = dfg.len();
    let first: Vec<usize> = (0..n).filter(|&i| in_first[i]).collect();
    let second: Vec<usize> = (0..n).filter(|&i| !in_first[i]).collect();
    let flow = |from: &[usize], to: &[usize]| -> u64 {
        from.iter()
            .flat_map(|&x| to.iter().map(move |&y| (x, y)))
            .map(|(x, y)| dfg.edge_at(x, y))
            .sum()
    };
    let absent = |from: &[usize], to: &[usize]| -> u64 {
        from.iter()
            .flat_map(|&x| to.iter().map(move |&y| (x, y)))
            .filter(|&(x, y)| dfg.edge_at(x, y) == 0)
            .count() as u64
    };

    let (deviating, missing): (u64, u64) = match op {
        Operator::Sequence => {
            let stuck = first
                .iter()
                .filter(|&&x| dfg.end_at(x) == 0 && second.iter().all(|&y| dfg.edge_at(x, y) == 0))
                .count();
            (flow(&second, &first), stuck as u64)
        }
        Operator::Xor => (flow(&first, &second) + flow(&second, &first), 0),
        Operator::Parallel => (0, absent(&first, &second) + absent(&second, &first)),
        Operator::Loop => {
            let dev = second.iter().map(|&y| dfg.start_at(y) + dfg.end_at(y)).sum();
            let no_exit = second
                .iter()
                .filter(|&&x| first.iter().all(|&y| dfg.edge_at(x, y) == 0))
                .count();
            let no_entry = second
                .iter()
                .filter(|&&x| first.iter().all(|&y| dfg.edge_at(y, x) == 0))
                .count();
            (dev, (no_exit + no_entry) as u64)
        }
    };
    let unit = sup * dfg.mean_edge_ceil() as f64;
    deviating as f64 + unit * missing as f64
}
