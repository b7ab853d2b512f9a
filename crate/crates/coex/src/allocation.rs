//! Interference-constrained power loading.
//!
//! [`omega_factors`] condenses an interference table and a band layout into
//! one worst-case leakage weight per free subcarrier. [`AllocationProblem`]
//! then maximizes `sum log2(1 + P_m / sigma_m)` over per-subcarrier powers
//! subject to a transmit budget `sum P_m <= P_t` and an injected-interference
//! cap `sum Omega_m P_m <= I_th`. The optimum has the two-multiplier
//! water-filling form `P_m = max(0, 1/(alpha Omega_m + beta) - sigma_m)`;
//! [`AllocationProblem::solve`] recovers it with exact active-set passes when
//! only one budget binds and nested bisection when both do.

use std::collections::HashMap;

use crate::error::{CoexError, Result};
use crate::interference::{BandMap, InterferenceTable, Offset};

/// Relative slack tolerated when deciding whether a budget is met.
const BUDGET_RTOL: f64 = 1e-9;

/// Bisection sweeps; each halves the bracket, so this reaches f64 resolution.
const BISECT_STEPS: usize = 200;

/// Worst-case leakage weight per free subcarrier: for each free index `m`,
/// the sum over protected indices `l` of the largest table cell over the
/// stored offset grids at transmit-minus-receive distance `m - l`.
///
/// Frequency offsets of +-1 fold into the neighbouring distance, so the
/// table must span `[min(m - l) - 1, max(m - l) + 1]` whenever the stored
/// frequency grid reaches +-1.
pub fn omega_factors(table: &InterferenceTable, band: &BandMap) -> Result<Vec<f64>> {
    table.validate()?;
    let mut worst_at: HashMap<i64, f64> = HashMap::new();
    let mut omegas = Vec::with_capacity(band.free().len());
    for &m in band.free() {
        let mut total = 0.0;
        for &l in band.protected() {
            let d = m as i64 - l as i64;
            let worst = match worst_at.get(&d) {
                Some(&w) => w,
                None => {
                    let mut w = 0.0f64;
                    for &dt in &table.dt_grid {
                        for &df in &table.df_grid {
                            w = w.max(table.shift_lookup(d, Offset::new(dt, df))?);
                        }
                    }
                    worst_at.insert(d, w);
                    w
                }
            };
            total += worst;
        }
        omegas.push(total);
    }
    Ok(omegas)
}

/// One power-loading instance over the free subcarriers.
#[derive(Debug, Clone)]
pub struct AllocationProblem {
    omegas: Vec<f64>,
    noise: Vec<f64>,
    total_power: f64,
    interference_threshold: f64,
}

/// Solver output: the loaded powers and the two multipliers that certify
/// them. `alpha` prices the interference budget, `beta` the transmit budget;
/// a zero multiplier means the matching budget is slack.
#[derive(Debug, Clone)]
pub struct AllocationResult {
    powers: Vec<f64>,
    alpha: f64,
    beta: f64,
    power_bound: bool,
    interference_bound: bool,
}

impl AllocationResult {
    pub fn powers(&self) -> &[f64] {
        &self.powers
    }

    pub fn into_powers(self) -> Vec<f64> {
        self.powers
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn power_constraint_active(&self) -> bool {
        self.power_bound
    }

    pub fn interference_constraint_active(&self) -> bool {
        self.interference_bound
    }
}

impl AllocationProblem {
    pub fn new(
        omegas: Vec<f64>,
        noise: Vec<f64>,
        total_power: f64,
        interference_threshold: f64,
    ) -> Result<AllocationProblem> {
        if omegas.is_empty() {
            return Err(CoexError::InvalidParameter(
                "power loading needs at least one subcarrier".into(),
            ));
        }
        if noise.len() != omegas.len() {
            return Err(CoexError::DimensionMismatch {
                what: "noise power entries",
                expected: omegas.len(),
                got: noise.len(),
            });
        }
        if omegas.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(CoexError::InvalidParameter(
                "leakage weights must be finite and non-negative".into(),
            ));
        }
        if noise.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(CoexError::InvalidParameter(
                "noise powers must be finite and positive".into(),
            ));
        }
        if !total_power.is_finite() || total_power <= 0.0 {
            return Err(CoexError::InvalidParameter(format!(
                "transmit budget must be positive, got {total_power}"
            )));
        }
        if !interference_threshold.is_finite() || interference_threshold <= 0.0 {
            return Err(CoexError::InvalidParameter(format!(
                "interference threshold must be positive, got {interference_threshold}"
            )));
        }
        Ok(AllocationProblem {
            omegas,
            noise,
            total_power,
            interference_threshold,
        })
    }

    pub fn with_uniform_noise(
        omegas: Vec<f64>,
        noise: f64,
        total_power: f64,
        interference_threshold: f64,
    ) -> Result<AllocationProblem> {
        let n = omegas.len();
        AllocationProblem::new(omegas, vec![noise; n], total_power, interference_threshold)
    }

    pub fn len(&self) -> usize {
        self.omegas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omegas.is_empty()
    }

    pub fn omegas(&self) -> &[f64] {
        &self.omegas
    }

    pub fn noise(&self) -> &[f64] {
        &self.noise
    }

    pub fn total_power(&self) -> f64 {
        self.total_power
    }

    pub fn interference_threshold(&self) -> f64 {
        self.interference_threshold
    }

    /// Sum rate in bits per use for a given power vector.
    pub fn objective(&self, powers: &[f64]) -> f64 {
        assert_eq!(powers.len(), self.len(), "power vector length");
        powers
            .iter()
            .zip(&self.noise)
            .map(|(p, s)| (1.0 + p / s).log2())
            .sum()
    }

    pub fn power_used(&self, powers: &[f64]) -> f64 {
        assert_eq!(powers.len(), self.len(), "power vector length");
        powers.iter().sum()
    }

    pub fn interference_used(&self, powers: &[f64]) -> f64 {
        assert_eq!(powers.len(), self.len(), "power vector length");
        powers.iter().zip(&self.omegas).map(|(p, w)| p * w).sum()
    }

    fn finish(&self, powers: Vec<f64>, alpha: f64, beta: f64) -> AllocationResult {
        let used = self.power_used(&powers);
        let injected = self.interference_used(&powers);
        AllocationResult {
            powers,
            alpha,
            beta,
            power_bound: used >= self.total_power * (1.0 - BUDGET_RTOL),
            interference_bound: injected
                >= self.interference_threshold * (1.0 - BUDGET_RTOL),
        }
    }

    pub fn solve(&self) -> Result<AllocationResult> {
        // Power-only water fill; stands when the interference it implies
        // stays under the cap.
        let level = water_level(&self.noise, self.total_power);
        let powers: Vec<f64> = self.noise.iter().map(|s| (level - s).max(0.0)).collect();
        if self.interference_used(&powers)
            <= self.interference_threshold * (1.0 + BUDGET_RTOL)
        {
            return Ok(self.finish(powers, 0.0, 1.0 / level));
        }

        // Interference-only water fill over the weighted costs. A zero
        // weight makes power free of interference cost, which forces the
        // transmit budget to bind, so this branch needs every weight
        // positive; it stands when the power it spends fits the budget.
        if self.omegas.iter().all(|w| *w > 0.0) {
            let costs: Vec<f64> = self
                .omegas
                .iter()
                .zip(&self.noise)
                .map(|(w, s)| w * s)
                .collect();
            let level = water_level(&costs, self.interference_threshold);
            let powers: Vec<f64> = self
                .omegas
                .iter()
                .zip(&self.noise)
                .map(|(w, s)| ((level - w * s) / w).max(0.0))
                .collect();
            if self.power_used(&powers) <= self.total_power * (1.0 + BUDGET_RTOL) {
                return Ok(self.finish(powers, 1.0 / level, 0.0));
            }
        }

        // Both budgets bind. For a trial alpha the inner pass finds the beta
        // that keeps the transmit budget tight; the outer pass bisects alpha
        // until the injected interference meets its cap as well.
        let powers_for = |alpha: f64, beta: f64| -> Vec<f64> {
            self.omegas
                .iter()
                .zip(&self.noise)
                .map(|(w, s)| {
                    let denom = alpha * w + beta;
                    if denom > 0.0 {
                        (1.0 / denom - s).max(0.0)
                    } else {
                        f64::INFINITY
                    }
                })
                .collect()
        };
        let beta_for = |alpha: f64| -> f64 {
            let spent = |beta: f64| -> f64 { powers_for(alpha, beta).iter().sum() };
            if spent(0.0) <= self.total_power {
                return 0.0;
            }
            let mut lo = 0.0;
            let mut hi = self.noise.iter().fold(0.0f64, |acc, s| acc.max(1.0 / s));
            for _ in 0..BISECT_STEPS {
                let mid = 0.5 * (lo + hi);
                if spent(mid) > self.total_power {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        let excess = |alpha: f64| -> f64 {
            let powers = powers_for(alpha, beta_for(alpha));
            self.interference_used(&powers) - self.interference_threshold
        };

        let mut lo = 0.0;
        let mut hi = 1.0 / self.interference_threshold;
        let mut doublings = 0;
        while excess(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            doublings += 1;
            if doublings > 200 {
                return Err(CoexError::InvalidParameter(
                    "power loading failed to bracket the interference multiplier"
                        .into(),
                ));
            }
        }
        for _ in 0..BISECT_STEPS {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let alpha = 0.5 * (lo + hi);
        let beta = beta_for(alpha);
        let powers = powers_for(alpha, beta);
        Ok(self.finish(powers, alpha, beta))
    }

    /// Worst violation of the optimality conditions, as a dimensionless
    /// number: budget excess, multiplier sign, complementary slackness, and
    /// per-subcarrier stationarity. A correct solution sits below 1e-8.
    pub fn kkt_residual(&self, result: &AllocationResult) -> f64 {
        let powers = result.powers();
        assert_eq!(powers.len(), self.len(), "power vector length");
        let used = self.power_used(powers);
        let injected = self.interference_used(powers);
        let alpha = result.alpha();
        let beta = result.beta();
        let mut r: f64 = 0.0;
        r = r.max((used - self.total_power) / self.total_power);
        r = r.max((injected - self.interference_threshold) / self.interference_threshold);
        r = r.max(-alpha);
        r = r.max(-beta);
        r = r.max(
            alpha * (self.interference_threshold - injected).max(0.0)
                / (1.0 + alpha * self.interference_threshold),
        );
        r = r.max(beta * (self.total_power - used).max(0.0) / (1.0 + beta * self.total_power));
        for ((&p, &w), &s) in powers.iter().zip(&self.omegas).zip(&self.noise) {
            r = r.max(-p / self.total_power);
            let denom = alpha * w + beta;
            if p > 0.0 {
                r = r.max((denom * (p + s) - 1.0).abs());
            } else {
                r = r.max(1.0 - denom * s);
            }
        }
        r
    }
}

/// Exact water level for `sum over active of (level - cost) = budget` with
/// the active set `{cost < level}`. Scanning candidate set sizes from large
/// to small finds the unique consistent one; size one always works because
/// the budget is positive.
fn water_level(costs: &[f64], budget: f64) -> f64 {
    let mut sorted = costs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite costs"));
    let mut prefix = vec![0.0; sorted.len() + 1];
    for (i, c) in sorted.iter().enumerate() {
        prefix[i + 1] = prefix[i] + c;
    }
    for k in (1..=sorted.len()).rev() {
        let level = (budget + prefix[k]) / k as f64;
        if level > sorted[k - 1] {
            return level;
        }
    }
    unreachable!("a positive budget always admits one active entry");
}
