//! Transmit power allocation over subcarriers.

use crate::error::{Error, Result};
use crate::ofdm::{Cfr, OfdmParams};

/// Non-negative per-subcarrier powers with a total budget.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation {
    p: Vec<f64>,
    budget: f64,
}

impl PowerAllocation {
    pub fn new(p: Vec<f64>, budget: f64) -> Result<Self> {
        if p.iter().any(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(Error::ConstraintViolation("negative or non-finite subcarrier power".into()));
        }
        let total: f64 = p.iter().sum();
        if total > budget * (1.0 + 1e-12) {
            return Err(Error::ConstraintViolation(format!("allocated power {total} exceeds budget {budget}")));
        }
        Ok(Self { p, budget })
    }

    pub fn zeros(n: usize, budget: f64) -> Self {
        Self { p: vec![0.0; n], budget }
    }

    /// `P/N` on every subcarrier.
    pub fn equal(n: usize, budget: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidScenario("equal allocation over zero subcarriers".into()));
        }
        Ok(Self { p: vec![budget / n as f64; n], budget })
    }

    pub fn powers(&self) -> &[f64] {
        &self.p
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn total(&self) -> f64 {
        self.p.iter().sum()
    }
}

/// Equal power allocation.
pub fn equal_power(n: usize, budget: f64) -> Result<PowerAllocation> {
    PowerAllocation::equal(n, budget)
}

/// Water-filling allocation `p_n = (c - Γσ²/|d_n|²)⁺` with `Σp_n = P`.
pub fn waterfill(d: &Cfr, params: &OfdmParams) -> Result<PowerAllocation> {
    waterfill_with_level(d, params).map(|(p, _)| p)
}

const BISECTION_ITERS: usize = 200;

/// Water-filling allocation together with its water level `c`.
///
/// The level is bracketed in `[0, P + max_n Γσ²/|d_n|²]` and bisected until
/// the budget residual drops to `1e-9 P`; the active set found this way then
/// fixes `c` in closed form.
pub fn waterfill_with_level(d: &Cfr, params: &OfdmParams) -> Result<(PowerAllocation, f64)> {
    let budget = params.total_power;
    let noise = params.effective_noise();
    // Inverse gains; zero-gain subcarriers never enter the active set.
    let inv: Vec<f64> = d.gains().map(|g| if g > 0.0 { noise / g } else { f64::INFINITY }).collect();
    let max_inv = inv.iter().copied().filter(|x| x.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !max_inv.is_finite() {
        return Err(Error::NoSignal);
    }

    let allocated = |c: f64| inv.iter().map(|&x| (c - x).max(0.0)).sum::<f64>();
    let (mut lo, mut hi) = (0.0, budget + max_inv);
    let mut level = hi;
    for _ in 0..BISECTION_ITERS {
        level = 0.5 * (lo + hi);
        let residual = allocated(level) - budget;
        if residual.abs() <= 1e-9 * budget {
            break;
        }
        if residual > 0.0 {
            hi = level;
        } else {
            lo = level;
        }
    }

    // Closed-form level on the active set, iterated until the set is stable.
    let mut active: Vec<bool> = inv.iter().map(|&x| x < level).collect();
    if !active.iter().any(|&a| a) {
        active = inv.iter().map(|&x| x == max_inv.min(x)).collect();
    }
    for _ in 0..inv.len() + 1 {
        let (count, sum) =
            inv.iter().zip(&active).filter(|(_, &a)| a).fold((0usize, 0.0), |(c, s), (&x, _)| (c + 1, s + x));
        level = (budget + sum) / count as f64;
        let next: Vec<bool> = inv.iter().map(|&x| x < level).collect();
        if next == active || !next.iter().any(|&a| a) {
            break;
        }
        active = next;
    }

    let mut floors = inv.iter().zip(&active).filter(|(_, &a)| a).map(|(&x, _)| x);
    let first = floors.next();
    let uniform = floors.all(|x| Some(x) == first);
    let count = active.iter().filter(|&&a| a).count();
    let p = inv
        .iter()
        .zip(&active)
        .map(|(&x, &a)| match (a, uniform) {
            (false, _) => 0.0,
            // Equal gains share the budget evenly, bit for bit.
            (true, true) => budget / count as f64,
            (true, false) => (level - x).max(0.0),
        })
        .collect();
    Ok((PowerAllocation { p, budget }, level))
}
