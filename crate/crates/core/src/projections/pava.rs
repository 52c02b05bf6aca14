//! Weighted pool-adjacent-violators algorithm.

struct Block {
    weighted_sum: f64,
    weight: f64,
    len: usize,
}

impl Block {
    fn mean(&self) -> f64 {
        self.weighted_sum / self.weight
    }
}

/// Weighted least-squares projection of `y` onto `{x : x_1 <= ... <= x_n}`,
/// i.e. the minimizer of `sum w_i (x_i - y_i)^2` over the chain-ordered cone.
///
/// Adjacent blocks are pooled only on a strict violation; equal neighbours
/// already satisfy the order and stay separate.
pub fn pava(y: &[f64], weights: &[f64]) -> Vec<f64> {
    debug_assert_eq!(y.len(), weights.len());
    let mut blocks: Vec<Block> = Vec::with_capacity(y.len());
    for (&yi, &wi) in y.iter().zip(weights) {
        blocks.push(Block {
            weighted_sum: wi * yi,
            weight: wi,
            len: 1,
        });
        while blocks.len() >= 2 {
            let n = blocks.len();
            if blocks[n - 2].mean() <= blocks[n - 1].mean() {
                break;
            }
            let last = blocks.pop().unwrap();
            let prev = blocks.last_mut().unwrap();
            prev.weighted_sum += last.weighted_sum;
            prev.weight += last.weight;
            prev.len += last.len;
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for block in &blocks {
        let m = block.mean();
        out.extend(std::iter::repeat_n(m, block.len));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pools_single_violation() {
        let fit = pava(&[1.0, 3.0, 2.0], &[1.0, 1.0, 1.0]);
        assert_eq!(fit, vec![1.0, 2.5, 2.5]);
    }

    #[test]
    fn monotone_input_untouched() {
        let y = [0.0, 1.0, 1.0, 4.0];
        assert_eq!(pava(&y, &[1.0; 4]), y.to_vec());
    }

    #[test]
    fn weights_shift_pooled_mean() {
        // 3*2 + 1*1 over weight 4
        let fit = pava(&[2.0, 1.0], &[3.0, 1.0]);
        assert_eq!(fit, vec![1.75, 1.75]);
    }

    #[test]
    fn cascading_merges() {
        let fit = pava(&[5.0, 4.0, 3.0, 2.0, 1.0], &[1.0; 5]);
        assert!(fit.iter().all(|&v| (v - 3.0).abs() < 1e-15));
    }
}
