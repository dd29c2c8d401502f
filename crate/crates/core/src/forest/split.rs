use super::gini::gini_of_total;

/// Impurity differences below this are treated as ties.
pub const IMPURITY_EPS: f64 = 1e-12;

/// Read-only view of the rows a tree is trained on. `classes` holds indices
/// into the forest's class alphabet.
#[derive(Debug, Clone, Copy)]
pub struct TrainingView<'a> {
    /// Row-major `n x d`.
    pub features: &'a [f64],
    pub d: usize,
    pub classes: &'a [usize],
    pub weights: &'a [f64],
    pub n_classes: usize,
}

impl TrainingView<'_> {
    #[inline]
    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.features[row * self.d + feature]
    }

    pub fn class_sums(&self, rows: &[usize]) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_classes];
        for &r in rows {
            sums[self.classes[r]] += self.weights[r];
        }
        sums
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    /// `(W_L/W) I(L) + (W_R/W) I(R)`.
    pub impurity: f64,
}

/// Midpoint between two consecutive distinct values, nudged down to the lower
/// value when rounding would put it on the upper one.
#[inline]
pub fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo + (hi - lo) / 2.0;
    if t < hi {
        t
    } else {
        lo
    }
}

/// `true` if `cand` beats `best` under the ordering: lower impurity, then
/// lower feature index, then lower threshold.
#[inline]
pub fn better(cand: &Split, best: &Split) -> bool {
    if cand.impurity < best.impurity - IMPURITY_EPS {
        return true;
    }
    if cand.impurity > best.impurity + IMPURITY_EPS {
        return false;
    }
    (cand.feature, cand.threshold) < (best.feature, best.threshold)
}

/// Best weighted-Gini split of `rows` over `candidates`.
///
/// Thresholds are midpoints between consecutive distinct values of a feature;
/// a sample goes left iff its value is `<= threshold`. Returns `None` when no
/// candidate lowers the node impurity or every candidate leaves a child with
/// fewer than `min_leaf` rows.
pub fn best_split(
    view: &TrainingView<'_>,
    rows: &[usize],
    candidates: &[usize],
    min_leaf: usize,
) -> Option<Split> {
    let n = rows.len();
    let min_leaf = min_leaf.max(1);
    if n < 2 * min_leaf {
        return None;
    }
    let total_sums = view.class_sums(rows);
    let total: f64 = total_sums.iter().sum();
    if !(total > 0.0) {
        return None;
    }
    let parent = gini_of_total(&total_sums, total);
    let k = view.n_classes;

    let mut best: Option<Split> = None;
    let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
    let mut left = vec![0.0; k];
    let mut left_counts = vec![0usize; k];
    let mut right = vec![0.0; k];
    let total_counts = {
        let mut c = vec![0usize; k];
        for &r in rows {
            c[view.classes[r]] += 1;
        }
        c
    };

    for &feature in candidates {
        order.clear();
        order.extend(rows.iter().map(|&r| (view.value(r, feature), r)));
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        if order[0].0 == order[n - 1].0 {
            continue;
        }
        left.iter_mut().for_each(|v| *v = 0.0);
        left_counts.iter_mut().for_each(|v| *v = 0);
        let mut w_left = 0.0;
        for i in 0..n - 1 {
            let (value, r) = order[i];
            let c = view.classes[r];
            left[c] += view.weights[r];
            left_counts[c] += 1;
            w_left += view.weights[r];
            let next = order[i + 1].0;
            if !(next > value) {
                continue;
            }
            let n_left = i + 1;
            if n_left < min_leaf || n - n_left < min_leaf {
                continue;
            }
            for j in 0..k {
                right[j] = if left_counts[j] == total_counts[j] {
                    0.0
                } else {
                    total_sums[j] - left[j]
                };
            }
            let w_right: f64 = right.iter().sum();
            if !(w_left > 0.0) || !(w_right > 0.0) {
                continue;
            }
            let impurity = (w_left / total) * gini_of_total(&left, w_left)
                + (w_right / total) * gini_of_total(&right, w_right);
            let cand = Split {
                feature,
                threshold: midpoint(value, next),
                impurity,
            };
            if !(impurity < parent - IMPURITY_EPS) {
                continue;
            }
            if best.as_ref().is_none_or(|b| better(&cand, b)) {
                best = Some(cand);
            }
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view<'a>(x: &'a [f64], d: usize, classes: &'a [usize], w: &'a [f64]) -> TrainingView<'a> {
        TrainingView {
            features: x,
            d,
            classes,
            weights: w,
            n_classes: 2,
        }
    }

    #[test]
    fn separable_four() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let c = [0, 0, 1, 1];
        let w = [1.0; 4];
        let s = best_split(&view(&x, 1, &c, &w), &[0, 1, 2, 3], &[0], 1).unwrap();
        assert_eq!(s.feature, 0);
        assert_eq!(s.threshold, 2.5);
        assert_eq!(s.impurity, 0.0);
    }

    #[test]
    fn separable_after_weighting() {
        let x = [1.0, 2.0, 3.0];
        let c = [0, 1, 1];
        let w = [2.0, 1.0, 1.0];
        let s = best_split(&view(&x, 1, &c, &w), &[0, 1, 2], &[0], 1).unwrap();
        assert_eq!(s.threshold, 1.5);
        assert_eq!(s.impurity, 0.0);
    }

    #[test]
    fn no_split_when_constant_or_pure_gain_impossible() {
        let x = [1.0, 1.0, 1.0];
        let c = [0, 1, 1];
        let w = [1.0; 3];
        assert!(best_split(&view(&x, 1, &c, &w), &[0, 1, 2], &[0], 1).is_none());
        // Two rows cannot give two children of min_leaf = 2.
        let x = [1.0, 2.0];
        let c = [0, 1];
        let w = [1.0; 2];
        assert!(best_split(&view(&x, 1, &c, &w), &[0, 1], &[0], 2).is_none());
    }

    #[test]
    fn tie_prefers_lower_feature() {
        // Both features separate perfectly.
        let x = [1.0, 1.0, 2.0, 2.0, 3.0, 3.0, 4.0, 4.0];
        let c = [0, 0, 1, 1];
        let w = [1.0; 4];
        let s = best_split(&view(&x, 2, &c, &w), &[0, 1, 2, 3], &[1, 0], 1).unwrap();
        assert_eq!(s.feature, 0);
    }

    #[test]
    fn midpoint_stays_below_upper_value() {
        let lo = 1.0f64;
        let hi = f64::from_bits(lo.to_bits() + 1);
        assert!(midpoint(lo, hi) < hi);
        assert_eq!(midpoint(1.0, 3.0), 2.0);
    }
}
