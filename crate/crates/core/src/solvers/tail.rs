use crate::error::{Error, Result};
use crate::linalg::DenseVector;

/// Running mean of the iterates after the burn-in, updated as
/// `xbar <- xbar + (x_s - xbar) / (s - T_b)`.
#[derive(Clone, Debug)]
pub struct TailAverager {
    burn_in: usize,
    count: usize,
    mean: Option<DenseVector>,
}

impl TailAverager {
    pub fn new(burn_in: usize) -> Self {
        TailAverager {
            burn_in,
            count: 0,
            mean: None,
        }
    }

    /// Offers iterate `x_t` (`t >= 1`); ignored while `t <= T_b`.
    pub fn push(&mut self, t: usize, x: &DenseVector) {
        if t <= self.burn_in {
            return;
        }
        self.count += 1;
        match &mut self.mean {
            None => self.mean = Some(x.clone()),
            Some(mean) => {
                let w = 1.0 / self.count as f64;
                for (m, xi) in mean.iter_mut().zip(x.iter()) {
                    *m += (xi - *m) * w;
                }
            }
        }
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mean(&self) -> Option<&DenseVector> {
        self.mean.as_ref()
    }
}

/// `(1 / (T - T_b)) * sum_{t = T_b + 1}^{T} x_t` for the stream `x_1, ..., x_T`.
pub fn tail_average<'a>(xs: impl IntoIterator<Item = &'a DenseVector>, burn_in: usize) -> Result<DenseVector> {
    let mut avg = TailAverager::new(burn_in);
    for (i, x) in xs.into_iter().enumerate() {
        avg.push(i + 1, x);
    }
    avg.mean
        .ok_or_else(|| Error::param(format!("tail average needs more than T_b = {burn_in} iterates")))
}
