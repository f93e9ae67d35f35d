use serde::{Deserialize, Serialize};

use super::sample::{take_sample, ForceData, Sample};
use crate::ensemble::{EnsembleState, ModelParams};
use crate::error::{Error, Result};

/// Trapezoid weights for samples at `ts`; they sum to `ts.last() − ts[0]`.
pub fn trapezoid_weights(ts: &[f64]) -> Result<Vec<f64>> {
    if ts.is_empty() {
        return Err(Error::EmptyHistory("no samples to average".into()));
    }
    if let Some(w) = ts.windows(2).find(|w| !(w[1] > w[0])) {
        return Err(Error::config(format!("sample times must increase, found {} then {}", w[0], w[1])));
    }
    let mut w = vec![0.0; ts.len()];
    for k in 1..ts.len() {
        let h = 0.5 * (ts[k] - ts[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    Ok(w)
}

/// `⟨φ⟩_T = (1/T) ∫ φ dt` with the trapezoid rule over all samples. A single
/// sample is its own average.
pub fn time_average(ts: &[f64], values: &[f64]) -> Result<f64> {
    if ts.len() != values.len() {
        return Err(Error::config(format!("{} times but {} values", ts.len(), values.len())));
    }
    let w = trapezoid_weights(ts)?;
    if ts.len() == 1 {
        return Ok(values[0]);
    }
    let span = ts[ts.len() - 1] - ts[0];
    Ok(w.iter().zip(values).map(|(w, v)| w * v).sum::<f64>() / span)
}

/// `⟨φ⟩_{t_k}` over `[t_0, t_k]` for every `k`.
pub fn running_averages(ts: &[f64], values: &[f64]) -> Result<Vec<f64>> {
    if ts.len() != values.len() {
        return Err(Error::config(format!("{} times but {} values", ts.len(), values.len())));
    }
    trapezoid_weights(ts)?;
    let mut out = Vec::with_capacity(ts.len());
    let mut integral = 0.0;
    out.push(values[0]);
    for k in 1..ts.len() {
        integral += 0.5 * (ts[k] - ts[k - 1]) * (values[k] + values[k - 1]);
        out.push(integral / (ts[k] - ts[0]));
    }
    Ok(out)
}

/// Energy budget at one sample time, with running averages from the start of
/// the history.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyBudget {
    pub t: f64,
    pub ke_members: Vec<f64>,
    pub ke_mean_of_members: f64,
    pub eps_viscous: f64,
    pub eps_turb: f64,
    pub eps_turb_mean_part: f64,
    pub eps_turb_fluct_part: f64,
    pub avg_eps: f64,
    pub avg_eps_viscous: f64,
    pub avg_eps_turb: f64,
}

fn row(s: &Sample, avg: (f64, f64)) -> EnergyBudget {
    EnergyBudget {
        t: s.t,
        ke_members: s.members.iter().map(|m| m.ke).collect(),
        ke_mean_of_members: s.ke_mean(),
        eps_viscous: s.eps_viscous(),
        eps_turb: s.eps_turb(),
        eps_turb_mean_part: s.eps_turb_mean_part,
        eps_turb_fluct_part: s.eps_turb_fluct_part,
        avg_eps: avg.0 + avg.1,
        avg_eps_viscous: avg.0,
        avg_eps_turb: avg.1,
    }
}

/// Budget of the current state; its running averages are the instantaneous values.
pub fn instantaneous_budget(state: &EnsembleState, params: &ModelParams) -> Result<EnergyBudget> {
    let s = take_sample(state, params, &ForceData::new(&state.forces))?;
    Ok(row(&s, (s.eps_viscous(), s.eps_turb())))
}

/// Budget rows for a whole history.
pub fn budget_series(samples: &[Sample]) -> Result<Vec<EnergyBudget>> {
    let ts: Vec<f64> = samples.iter().map(|s| s.t).collect();
    let ev: Vec<f64> = samples.iter().map(Sample::eps_viscous).collect();
    let et: Vec<f64> = samples.iter().map(Sample::eps_turb).collect();
    let av = running_averages(&ts, &ev)?;
    let at = running_averages(&ts, &et)?;
    Ok(samples.iter().zip(av.into_iter().zip(at)).map(|(s, a)| row(s, a)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn averages_of_simple_signals() {
        let ts: Vec<f64> = (0..11).map(|k| 0.3 * k as f64).collect();
        let c = vec![2.5; ts.len()];
        assert!((time_average(&ts, &c).unwrap() - 2.5).abs() < 1e-15);
        assert!((time_average(&ts, &ts).unwrap() - 1.5).abs() < 1e-15);
        assert_eq!(time_average(&[4.0], &[7.0]).unwrap(), 7.0);
        assert!(matches!(time_average(&[], &[]), Err(Error::EmptyHistory(_))));
        assert!(time_average(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        let run = running_averages(&ts, &ts).unwrap();
        for (t, a) in ts.iter().zip(&run).skip(1) {
            assert!((a - t / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn weights_sum_to_span() {
        let ts = [0.0, 0.1, 0.25, 0.7, 1.0];
        let w = trapezoid_weights(&ts).unwrap();
        assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(w.iter().all(|&x| x > 0.0));
    }
}
