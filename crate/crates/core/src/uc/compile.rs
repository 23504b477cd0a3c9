use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FirstStageSpace, Instance, Matrix, PolicyEntry, PolicyStructure, RecourseData, SampleSet};

use super::UcSystem;

/// Positions of the UC variables in the flat first- and second-stage vectors.
///
/// First stage: `u^o, u^u, u^d` (on, start-up, shut-down; binary), then the
/// dispatch band `x̄, x̲`, each block generator-major. Second stage: dispatch
/// `x^g` per generator, then curtailment `x^r` and shedding `x^d` per bus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UcLayout {
    pub generators: usize,
    pub buses: usize,
    pub periods: usize,
}

impl UcLayout {
    pub fn of(system: &UcSystem) -> Self {
        UcLayout {
            generators: system.num_generators(),
            buses: system.num_buses(),
            periods: system.periods,
        }
    }

    fn gt(&self) -> usize {
        self.generators * self.periods
    }

    pub fn on(&self, g: usize, t: usize) -> usize {
        g * self.periods + t
    }

    pub fn startup(&self, g: usize, t: usize) -> usize {
        self.gt() + g * self.periods + t
    }

    pub fn shutdown(&self, g: usize, t: usize) -> usize {
        2 * self.gt() + g * self.periods + t
    }

    pub fn band_upper(&self, g: usize, t: usize) -> usize {
        3 * self.gt() + g * self.periods + t
    }

    pub fn band_lower(&self, g: usize, t: usize) -> usize {
        4 * self.gt() + g * self.periods + t
    }

    pub fn n_binary(&self) -> usize {
        3 * self.gt()
    }

    pub fn n1(&self) -> usize {
        5 * self.gt()
    }

    pub fn dispatch(&self, g: usize, t: usize) -> usize {
        g * self.periods + t
    }

    pub fn curtail(&self, i: usize, t: usize) -> usize {
        self.gt() + i * self.periods + t
    }

    pub fn shed(&self, i: usize, t: usize) -> usize {
        self.gt() + (self.buses + i) * self.periods + t
    }

    pub fn n2(&self) -> usize {
        self.gt() + 2 * self.buses * self.periods
    }

    /// Period of second-stage column `k`.
    pub fn period_of(&self, k: usize) -> usize {
        k % self.periods
    }
}

type Sparse = Vec<(usize, f64)>;

struct Rows {
    a1: Vec<Sparse>,
    a2: Vec<Sparse>,
    a3: Vec<Sparse>,
    b: Vec<f64>,
}

impl Rows {
    fn push(&mut self, a1: Sparse, a2: Sparse, a3: Sparse, b: f64) {
        self.a1.push(a1);
        self.a2.push(a2);
        self.a3.push(a3);
        self.b.push(b);
    }

    fn push_negated(&mut self, a1: &Sparse, a2: &Sparse, a3: &Sparse, b: f64) {
        let neg = |v: &Sparse| v.iter().map(|&(k, c)| (k, -c)).collect();
        self.push(neg(a1), neg(a2), neg(a3), -b);
    }
}

fn dense(rows: &[Sparse], cols: usize) -> Matrix {
    let mut m = Matrix::zeros(rows.len(), cols);
    for (r, row) in rows.iter().enumerate() {
        for &(k, v) in row {
            m.set(r, k, m.get(r, k) + v);
        }
    }
    m
}

/// Compiles a system and forecast-error samples into an instance and its tied
/// policy structure (every second-stage variable at period `t` reacts to the
/// total error `Σᵢ ξ_it` through one slope, plus its own intercept).
pub fn build_uc_instance(system: &UcSystem, samples: &SampleSet, epsilon: f64) -> Result<(Instance, PolicyStructure)> {
    system.validate()?;
    let lay = UcLayout::of(system);
    let (ng, nb, nt) = (lay.generators, lay.buses, lay.periods);
    let m = system.uncertainty_dim();
    if samples.dim() != m {
        return Err(Error::Input(format!("samples have {} columns, the system needs {m}", samples.dim())));
    }
    let support = system.support();
    let samples = SampleSet::new(samples.points().to_vec(), &support)?;
    let (n1, n2) = (lay.n1(), lay.n2());

    let mut c1 = vec![0.0; n1];
    for (g, gen) in system.generators.iter().enumerate() {
        for t in 0..nt {
            c1[lay.on(g, t)] = gen.no_load_cost;
            c1[lay.startup(g, t)] = gen.startup_cost;
            c1[lay.shutdown(g, t)] = gen.shutdown_cost;
        }
    }

    let mut fs: Vec<(Sparse, f64)> = Vec::new();
    for (g, gen) in system.generators.iter().enumerate() {
        let init = if system.initially_on(g) { 1.0 } else { 0.0 };
        for t in 0..nt {
            // u^o_t − u^o_{t−1} = u^u_t − u^d_t
            let mut logic = vec![(lay.on(g, t), 1.0), (lay.startup(g, t), -1.0), (lay.shutdown(g, t), 1.0)];
            let rhs = if t == 0 {
                init
            } else {
                logic.push((lay.on(g, t - 1), -1.0));
                0.0
            };
            fs.push((logic.iter().map(|&(k, v)| (k, -v)).collect(), -rhs));
            fs.push((logic, rhs));
            fs.push((vec![(lay.startup(g, t), 1.0), (lay.shutdown(g, t), 1.0)], 1.0));
            // rolling windows: a start-up within the last min_up periods keeps the unit on
            if gen.min_up > 0 {
                let mut row: Sparse = (t.saturating_sub(gen.min_up - 1)..=t).map(|s| (lay.startup(g, s), 1.0)).collect();
                row.push((lay.on(g, t), -1.0));
                fs.push((row, 0.0));
            }
            if gen.min_down > 0 {
                let mut row: Sparse = (t.saturating_sub(gen.min_down - 1)..=t).map(|s| (lay.shutdown(g, s), 1.0)).collect();
                row.push((lay.on(g, t), 1.0));
                fs.push((row, 1.0));
            }
            // X̲·u^o ≤ x̲ ≤ x̄ ≤ X̄·u^o
            fs.push((vec![(lay.on(g, t), gen.min_output), (lay.band_lower(g, t), -1.0)], 0.0));
            fs.push((vec![(lay.band_lower(g, t), 1.0), (lay.band_upper(g, t), -1.0)], 0.0));
            fs.push((vec![(lay.band_upper(g, t), 1.0), (lay.on(g, t), -gen.max_output)], 0.0));
            if t > 0 {
                // x̄_t − x̲_{t−1} ≤ X^ru·u^o_{t−1} + X^su·u^u_t
                fs.push((
                    vec![
                        (lay.band_upper(g, t), 1.0),
                        (lay.band_lower(g, t - 1), -1.0),
                        (lay.on(g, t - 1), -gen.ramp_up),
                        (lay.startup(g, t), -gen.startup_ramp),
                    ],
                    0.0,
                ));
                // x̄_{t−1} − x̲_t ≤ X^rd·u^o_t + X^sd·u^d_t
                fs.push((
                    vec![
                        (lay.band_upper(g, t - 1), 1.0),
                        (lay.band_lower(g, t), -1.0),
                        (lay.on(g, t), -gen.ramp_down),
                        (lay.shutdown(g, t), -gen.shutdown_ramp),
                    ],
                    0.0,
                ));
            } else if !system.initially_on(g) {
                fs.push((vec![(lay.band_upper(g, 0), 1.0), (lay.startup(g, 0), -gen.startup_ramp)], 0.0));
            }
        }
    }
    let first_stage = FirstStageSpace {
        n_binary: lay.n_binary(),
        n_continuous: 2 * ng * nt,
        g: dense(&fs.iter().map(|r| r.0.clone()).collect::<Vec<_>>(), n1),
        rhs: fs.iter().map(|r| r.1).collect(),
    };

    let mut c2 = vec![0.0; n2];
    for (g, gen) in system.generators.iter().enumerate() {
        for t in 0..nt {
            c2[lay.dispatch(g, t)] = gen.marginal_cost;
        }
    }
    for i in 0..nb {
        for t in 0..nt {
            c2[lay.curtail(i, t)] = system.curtailment_cost;
            c2[lay.shed(i, t)] = system.shedding_cost;
        }
    }

    let mut rows = Rows {
        a1: Vec::new(),
        a2: Vec::new(),
        a3: Vec::new(),
        b: Vec::new(),
    };
    for t in 0..nt {
        for g in 0..ng {
            // x̲ ≤ x^g ≤ x̄
            rows.push(vec![(lay.band_lower(g, t), 1.0)], vec![(lay.dispatch(g, t), -1.0)], vec![], 0.0);
            rows.push(vec![(lay.band_upper(g, t), -1.0)], vec![(lay.dispatch(g, t), 1.0)], vec![], 0.0);
        }
        for (i, bus) in system.buses.iter().enumerate() {
            let xi = system.xi_index(i, t);
            // 0 ≤ x^r ≤ w + ξ
            rows.push(vec![], vec![(lay.curtail(i, t), -1.0)], vec![], 0.0);
            rows.push(vec![], vec![(lay.curtail(i, t), 1.0)], vec![(xi, -1.0)], bus.forecast[t]);
            // 0 ≤ x^d ≤ d (0 when the load cannot be shed)
            rows.push(vec![], vec![(lay.shed(i, t), -1.0)], vec![], 0.0);
            let cap = if bus.sheddable { bus.demand[t] } else { 0.0 };
            rows.push(vec![], vec![(lay.shed(i, t), 1.0)], vec![], cap);
        }
        // net injection P_i = Σ_{g at i} x^g + w + ξ − x^r − d + x^d, split into
        // its decision part and the constant w − d
        let injection = |weights: &dyn Fn(usize) -> f64| {
            let mut a2: Sparse = Vec::new();
            let mut a3: Sparse = Vec::new();
            let mut constant = 0.0;
            for (g, gen) in system.generators.iter().enumerate() {
                let w = weights(gen.bus);
                if w != 0.0 {
                    a2.push((lay.dispatch(g, t), w));
                }
            }
            for (i, bus) in system.buses.iter().enumerate() {
                let w = weights(i);
                if w != 0.0 {
                    a2.push((lay.curtail(i, t), -w));
                    a2.push((lay.shed(i, t), w));
                    a3.push((system.xi_index(i, t), w));
                    constant += w * (bus.forecast[t] - bus.demand[t]);
                }
            }
            (a2, a3, constant)
        };
        for line in &system.lines {
            let (a2, a3, constant) = injection(&|i| line.shift_factors[i]);
            if a2.is_empty() && a3.is_empty() {
                continue;
            }
            rows.push(vec![], a2.clone(), a3.clone(), line.capacity - constant);
            rows.push_negated(&vec![], &a2, &a3, -line.capacity - constant);
        }
        let (a2, a3, constant) = injection(&|_| 1.0);
        rows.push(vec![], a2.clone(), a3.clone(), -constant);
        rows.push_negated(&vec![], &a2, &a3, -constant);
    }
    let recourse = RecourseData {
        a1: dense(&rows.a1, n1),
        a2: dense(&rows.a2, n2),
        a3: dense(&rows.a3, m),
        b: rows.b,
    };

    let mut terms = Vec::with_capacity(n2 * (nb + 1));
    for k in 0..n2 {
        let t = lay.period_of(k);
        for i in 0..nb {
            terms.push((PolicyEntry::Slope { row: k, col: system.xi_index(i, t) }, 2 * k, 1.0));
        }
        terms.push((PolicyEntry::Intercept { row: k }, 2 * k + 1, 1.0));
    }
    let structure = PolicyStructure {
        n2,
        m,
        parameter_count: 2 * n2,
        terms,
    };
    let inst = Instance {
        c1,
        c2,
        first_stage,
        recourse,
        support,
        samples,
        epsilon,
    };
    inst.validate()?;
    Ok((inst, structure))
}

/// Per period, `Σᵢ (Σ_{g at i} x^g + w + ξ − x^r − d + x^d)`; zero for a feasible dispatch.
pub fn balance_residuals(system: &UcSystem, x2: &[f64], xi: &[f64]) -> Vec<f64> {
    let lay = UcLayout::of(system);
    (0..system.periods)
        .map(|t| {
            let gen: f64 = (0..lay.generators).map(|g| x2[lay.dispatch(g, t)]).sum();
            let net: f64 = system
                .buses
                .iter()
                .enumerate()
                .map(|(i, b)| b.forecast[t] + xi[system.xi_index(i, t)] - x2[lay.curtail(i, t)] - b.demand[t] + x2[lay.shed(i, t)])
                .sum();
            gen + net
        })
        .collect()
}
