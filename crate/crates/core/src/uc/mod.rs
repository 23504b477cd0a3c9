//! Day-ahead unit commitment under renewable forecast errors, compiled into a
//! two-stage instance with a period-tied affine dispatch policy.
//!
//! Units: power in MW, energy costs in $/MWh, fixed costs in $, periods of one hour.
//! The uncertainty vector is bus-major: coordinate `i·T + t` is the forecast
//! error of bus `i` in period `t`, with support `[−w_it, W_i − w_it]`.

mod compile;
mod io;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generate::rng;
use crate::model::BoxSet;

pub use compile::{balance_residuals, build_uc_instance, UcLayout};
pub use io::{emit_uc, ingest_uc, parse_uc_system, sample_header};

/// Default demand-shedding penalty ($/MWh).
pub const SHEDDING_COST: f64 = 3500.0;
/// Default renewable curtailment penalty ($/MWh).
pub const CURTAILMENT_COST: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bus {
    /// Demand per period.
    pub demand: Vec<f64>,
    /// Renewable forecast per period; all zero without a renewable unit.
    pub forecast: Vec<f64>,
    pub renewable_capacity: f64,
    pub sheddable: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Generator {
    pub bus: usize,
    pub no_load_cost: f64,
    pub startup_cost: f64,
    pub shutdown_cost: f64,
    pub marginal_cost: f64,
    pub min_output: f64,
    pub max_output: f64,
    pub ramp_up: f64,
    pub ramp_down: f64,
    pub startup_ramp: f64,
    pub shutdown_ramp: f64,
    pub min_up: usize,
    pub min_down: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub capacity: f64,
    /// Flow on the line per MW of net injection at each bus.
    pub shift_factors: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UcSystem {
    pub periods: usize,
    pub buses: Vec<Bus>,
    pub generators: Vec<Generator>,
    pub lines: Vec<Line>,
    #[serde(default = "default_shedding")]
    pub shedding_cost: f64,
    #[serde(default = "default_curtailment")]
    pub curtailment_cost: f64,
    /// Commitment before the first period, per generator; empty means all off.
    #[serde(default)]
    pub initial_on: Vec<bool>,
}

fn default_shedding() -> f64 {
    SHEDDING_COST
}

fn default_curtailment() -> f64 {
    CURTAILMENT_COST
}

fn bad(msg: String) -> Error {
    Error::Input(msg)
}

impl UcSystem {
    pub fn num_buses(&self) -> usize {
        self.buses.len()
    }

    pub fn num_generators(&self) -> usize {
        self.generators.len()
    }

    /// Dimension of the forecast-error vector, `I·T`.
    pub fn uncertainty_dim(&self) -> usize {
        self.buses.len() * self.periods
    }

    pub fn xi_index(&self, bus: usize, t: usize) -> usize {
        bus * self.periods + t
    }

    pub fn initially_on(&self, g: usize) -> bool {
        self.initial_on.get(g).copied().unwrap_or(false)
    }

    pub fn validate(&self) -> Result<()> {
        let t = self.periods;
        if t == 0 {
            return Err(bad("periods must be positive".into()));
        }
        if self.buses.is_empty() || self.generators.is_empty() {
            return Err(bad("a system needs at least one bus and one generator".into()));
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !nonneg(self.shedding_cost) || !nonneg(self.curtailment_cost) {
            return Err(bad("penalty costs must be finite and >= 0".into()));
        }
        for (i, b) in self.buses.iter().enumerate() {
            if b.demand.len() != t || b.forecast.len() != t {
                return Err(bad(format!("buses[{i}]: demand and forecast need {t} entries")));
            }
            if !nonneg(b.renewable_capacity) {
                return Err(bad(format!("buses[{i}].renewable_capacity must be >= 0")));
            }
            for k in 0..t {
                if !nonneg(b.demand[k]) {
                    return Err(bad(format!("buses[{i}].demand[{k}] must be >= 0")));
                }
                if !nonneg(b.forecast[k]) || b.forecast[k] > b.renewable_capacity {
                    return Err(bad(format!("buses[{i}].forecast[{k}] must lie in [0, renewable_capacity]")));
                }
            }
        }
        for (k, g) in self.generators.iter().enumerate() {
            if g.bus >= self.buses.len() {
                return Err(bad(format!("generators[{k}].bus = {} does not exist", g.bus)));
            }
            let vals = [
                g.no_load_cost,
                g.startup_cost,
                g.shutdown_cost,
                g.marginal_cost,
                g.min_output,
                g.max_output,
                g.ramp_up,
                g.ramp_down,
                g.startup_ramp,
                g.shutdown_ramp,
            ];
            if !vals.iter().all(|v| nonneg(*v)) {
                return Err(bad(format!("generators[{k}]: costs, outputs and ramps must be finite and >= 0")));
            }
            if g.min_output > g.max_output {
                return Err(bad(format!("generators[{k}]: min_output exceeds max_output")));
            }
            if g.min_up > t || g.min_down > t {
                return Err(bad(format!("generators[{k}]: min_up and min_down must not exceed {t}")));
            }
        }
        for (l, line) in self.lines.iter().enumerate() {
            if line.shift_factors.len() != self.buses.len() {
                return Err(bad(format!(
                    "lines[{l}]: expected {} shift factors, found {}",
                    self.buses.len(),
                    line.shift_factors.len()
                )));
            }
            if !nonneg(line.capacity) || !line.shift_factors.iter().all(|v| v.is_finite()) {
                return Err(bad(format!("lines[{l}]: capacity must be >= 0 and shift factors finite")));
            }
        }
        if !self.initial_on.is_empty() && self.initial_on.len() != self.generators.len() {
            return Err(bad("initial_on needs one entry per generator".into()));
        }
        Ok(())
    }

    /// `ξ_it ∈ [−w_it, W_i − w_it]`.
    pub fn support(&self) -> BoxSet {
        let mut lo = Vec::with_capacity(self.uncertainty_dim());
        let mut hi = Vec::with_capacity(self.uncertainty_dim());
        for b in &self.buses {
            for &w in &b.forecast {
                lo.push(-w);
                hi.push(b.renewable_capacity - w);
            }
        }
        BoxSet::new(lo, hi).expect("validated forecasts lie within capacity")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ToyProfile {
    /// 2 buses, 2 generators, 1 line, 4 periods, 1 renewable.
    Tiny,
    /// 3 buses, 3 generators, 3 lines, 6 periods, 2 renewables.
    Small,
}

impl std::str::FromStr for ToyProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tiny" => Ok(ToyProfile::Tiny),
            "small" => Ok(ToyProfile::Small),
            other => Err(Error::Input(format!("unknown profile {other:?} (expected tiny or small)"))),
        }
    }
}

/// Seeded desk-scale system. Ranges:
/// demand 30–60 MW per bus with a morning ramp shape, renewable capacity 25–40 MW
/// with forecasts at 30–60 % of capacity, generator capacity 90–130 MW with
/// minimum output 10–20 MW, ramps 50–80 MW/h, start-up and shut-down ramps at
/// 60 % of capacity, min up/down 1–2 h, marginal cost 15–40 $/MWh, no-load cost
/// 50–150 $, start-up cost 100–300 $, shut-down cost 0–50 $. Line capacities are
/// 70–90 MW; one generator per bus, so total capacity covers peak demand even
/// with no renewable output. Shifts are the DC shift factors with bus 0 as slack.
/// All MW and cost figures are rounded to multiples of 0.25.
pub fn toy_system(profile: ToyProfile, seed: u64) -> UcSystem {
    let mut r = rng(seed);
    let (nb, periods, renewables, shift): (usize, usize, &[usize], Vec<Vec<f64>>) = match profile {
        ToyProfile::Tiny => (2, 4, &[1], vec![vec![0.0, -1.0]]),
        ToyProfile::Small => (
            3,
            6,
            &[1, 2],
            vec![
                vec![0.0, -2.0 / 3.0, -1.0 / 3.0],
                vec![0.0, -1.0 / 3.0, -2.0 / 3.0],
                vec![0.0, 1.0 / 3.0, -1.0 / 3.0],
            ],
        ),
    };
    let shape = |t: usize| 0.8 + 0.4 * (t as f64 / (periods.max(2) - 1) as f64);
    let buses = (0..nb)
        .map(|i| {
            let base = r.random_range(30.0..60.0);
            let demand = (0..periods).map(|t| quarter(base * shape(t))).collect();
            let (cap, forecast) = if renewables.contains(&i) {
                let cap = quarter(r.random_range(25.0..40.0));
                let f = (0..periods).map(|_| quarter(cap * r.random_range(0.3..0.6))).collect();
                (cap, f)
            } else {
                (0.0, vec![0.0; periods])
            };
            Bus {
                demand,
                forecast,
                renewable_capacity: cap,
                sheddable: true,
            }
        })
        .collect();
    let generators = (0..nb)
        .map(|i| {
            let max_output = quarter(r.random_range(90.0..130.0));
            let ramp = quarter(r.random_range(50.0..80.0));
            Generator {
                bus: i,
                no_load_cost: quarter(r.random_range(50.0..150.0)),
                startup_cost: quarter(r.random_range(100.0..300.0)),
                shutdown_cost: quarter(r.random_range(0.0..50.0)),
                marginal_cost: quarter(r.random_range(15.0..40.0)),
                min_output: quarter(r.random_range(10.0..20.0)),
                max_output,
                ramp_up: ramp,
                ramp_down: ramp,
                startup_ramp: quarter(0.6 * max_output),
                shutdown_ramp: quarter(0.6 * max_output),
                min_up: r.random_range(1..=2),
                min_down: r.random_range(1..=2),
            }
        })
        .collect();
    let lines = shift
        .into_iter()
        .map(|sf| Line {
            capacity: quarter(r.random_range(70.0..90.0)),
            shift_factors: sf,
        })
        .collect();
    UcSystem {
        periods,
        buses,
        generators,
        lines,
        shedding_cost: SHEDDING_COST,
        curtailment_cost: CURTAILMENT_COST,
        initial_on: Vec::new(),
    }
}

fn quarter(v: f64) -> f64 {
    (v * 4.0).round() / 4.0
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toy_profiles_have_documented_shapes() {
        let t = toy_system(ToyProfile::Tiny, 1);
        t.validate().unwrap();
        assert_eq!((t.num_buses(), t.num_generators(), t.lines.len(), t.periods), (2, 2, 1, 4));
        assert_eq!(t.uncertainty_dim(), 8);
        assert_eq!(t.support().effective_dim(), 4);
        let s = toy_system(ToyProfile::Small, 1);
        s.validate().unwrap();
        assert_eq!((s.num_buses(), s.num_generators(), s.lines.len(), s.periods), (3, 3, 3, 6));
        assert_eq!(s.support().effective_dim(), 12);
        assert_eq!(toy_system(ToyProfile::Small, 9), toy_system(ToyProfile::Small, 9));
    }

    #[test]
    fn validation_names_the_field() {
        let mut s = toy_system(ToyProfile::Tiny, 2);
        s.lines[0].shift_factors.pop();
        assert!(s.validate().unwrap_err().to_string().contains("lines[0]"));
        let mut s = toy_system(ToyProfile::Tiny, 2);
        s.generators[1].min_output = 500.0;
        assert!(s.validate().unwrap_err().to_string().contains("generators[1]"));
    }
}
