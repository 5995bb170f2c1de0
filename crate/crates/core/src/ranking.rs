//! Top-m extraction with deterministic tie breaking.

/// Writes into `out` the positions of the `m` largest entries of `values`,
/// sorted ascending by position. Ties go to the lower position.
///
/// Returns `true` when a tie at the selection boundary had to be broken.
pub fn top_m_into(values: &[f64], m: usize, out: &mut Vec<usize>) -> bool {
    out.clear();
    let m = m.min(values.len());
    if m == 0 {
        return false;
    }
    if m == 1 {
        let mut best = 0;
        let mut tie = false;
        for (i, &v) in values.iter().enumerate().skip(1) {
            if v > values[best] {
                best = i;
                tie = false;
            } else if v == values[best] {
                tie = true;
            }
        }
        out.push(best);
        return tie;
    }
    // Small m: repeated insertion into a descending run of (value, position).
    let mut run: Vec<(f64, usize)> = Vec::with_capacity(m + 1);
    for (i, &v) in values.iter().enumerate() {
        if run.len() == m && !beats(v, i, run[m - 1]) {
            continue;
        }
        let at = run.iter().position(|&e| beats(v, i, e)).unwrap_or(run.len());
        run.insert(at, (v, i));
        run.truncate(m);
    }
    let threshold = run[m - 1].0;
    let tie = values.iter().filter(|&&v| v == threshold).count()
        > run.iter().filter(|e| e.0 == threshold).count();
    out.extend(run.iter().map(|e| e.1));
    out.sort_unstable();
    tie
}

fn beats(v: f64, i: usize, other: (f64, usize)) -> bool {
    v > other.0 || (v == other.0 && i < other.1)
}

/// Convenience wrapper allocating a fresh vector.
pub fn top_m(values: &[f64], m: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(m);
    top_m_into(values, m, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_and_top_two() {
        assert_eq!(top_m(&[3.0, 1.0, 2.0], 1), vec![0]);
        assert_eq!(top_m(&[3.0, 1.0, 2.0], 2), vec![0, 2]);
        assert_eq!(top_m(&[3.0, 1.0, 2.0], 3), vec![0, 1, 2]);
    }

    #[test]
    fn ties_prefer_lower_position() {
        let mut out = Vec::new();
        assert!(top_m_into(&[1.0, 2.0, 2.0], 1, &mut out));
        assert_eq!(out, vec![1]);
        assert!(top_m_into(&[2.0, 1.0, 2.0, 2.0], 2, &mut out));
        assert_eq!(out, vec![0, 2]);
        assert!(!top_m_into(&[2.0, 1.0, 2.0, 0.5], 2, &mut out));
    }

    #[test]
    fn matches_full_sort() {
        let vals = [0.3, -1.0, 4.5, 2.2, 2.1, 9.0, -3.0, 0.0];
        for m in 1..=vals.len() {
            let mut idx: Vec<usize> = (0..vals.len()).collect();
            idx.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());
            let mut expect = idx[..m].to_vec();
            expect.sort_unstable();
            assert_eq!(top_m(&vals, m), expect, "m = {m}");
        }
    }
}
