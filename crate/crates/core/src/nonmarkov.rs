//! Non-Markovianity of the relaxation, measured by the non-monotonic
//! evolution of the trace distance between the initially excited state and
//! the ground state.

use std::fmt::Write as _;

use serde::Serialize;

use crate::dynamics::{parse_f64, AmplitudeTrace};
use crate::error::{Error, Result};

/// Trace distance sampled on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceTrace {
    pub t0: f64,
    pub dt: f64,
    pub distance: Vec<f64>,
}

/// Summary printed by the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlpReport {
    pub blp: f64,
    pub dt: f64,
}

impl DistanceTrace {
    pub fn len(&self) -> usize {
        self.distance.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distance.is_empty()
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    /// CSV with header `t,distance`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("t,distance\n");
        for (k, d) in self.distance.iter().enumerate() {
            let _ = writeln!(s, "{:e},{:e}", self.time(k), d);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut t = Vec::new();
        let mut d = Vec::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with("t,") {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidInput(format!("bad distance row {line:?}")))?;
            t.push(parse_f64(a)?);
            d.push(parse_f64(b)?);
        }
        if t.len() < 2 {
            return Err(Error::InvalidInput("distance trace needs two rows".into()));
        }
        let dt = (t[t.len() - 1] - t[0]) / (t.len() - 1) as f64;
        Ok(Self {
            t0: t[0],
            dt,
            distance: d,
        })
    }
}

/// `D(t) = |a_e(t)|²`: with one excitation and pure amplitude decay both
/// evolved states stay diagonal, so the trace distance is the excited
/// population. Values are clipped to `[0, 1]` against rounding in
/// reconstructed traces.
pub fn trace_distance(trace: &AmplitudeTrace) -> DistanceTrace {
    DistanceTrace {
        t0: trace.t0,
        dt: trace.dt,
        distance: trace
            .values
            .iter()
            .map(|a| a.norm_sqr().clamp(0.0, 1.0))
            .collect(),
    }
}

/// Total positive variation of `D`, the sum of its rises over every
/// maximal increasing run on the sampled grid.
pub fn blp_measure(d: &DistanceTrace) -> f64 {
    d.distance
        .windows(2)
        .map(|w| (w[1] - w[0]).max(0.0))
        .sum()
}

pub fn blp_report(d: &DistanceTrace) -> BlpReport {
    BlpReport {
        blp: blp_measure(d),
        dt: d.dt,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{series_trace, Frame};
    use crate::model::GiantAtomParams;
    use crate::presets;
    use crate::units::hz_to_angular as w;

    fn oracle(p: &GiantAtomParams, t_max: f64, dt: f64) -> DistanceTrace {
        trace_distance(&series_trace(p, t_max, dt, Frame::Rotating).unwrap())
    }

    #[test]
    fn small_atom_is_markovian() {
        let p = GiantAtomParams::new(w(2.3e9), w(3e6), 0.0).unwrap().with_gamma_res(w(1e6));
        let rate = 2.0 * p.gamma + p.gamma_res;
        let d = oracle(&p, 5.0 / rate, 1e-3 / rate);
        assert_eq!(d.distance[0], 1.0);
        for (k, v) in d.distance.iter().enumerate() {
            let e = (-2.0 * rate * d.time(k)).exp();
            assert!((v - e).abs() <= 1e-12 + 1e-9 * e);
        }
        assert!(d.distance.windows(2).all(|w| w[1] < w[0]));
        assert_eq!(blp_measure(&d), 0.0);
    }

    #[test]
    fn b1_rises_at_least_twice() {
        let p = presets::params("B1").unwrap();
        let d = oracle(&p, 4.0 * p.delay_t, p.delay_t / 512.0);
        let mut runs = 0;
        let mut rising = false;
        for k in 1..d.len() {
            let up = d.distance[k] > d.distance[k - 1];
            if up && !rising && d.time(k) > p.delay_t {
                runs += 1;
            }
            rising = up;
        }
        assert!(runs >= 2, "{runs}");
        assert!(blp_measure(&d) > 0.0);
    }

    #[test]
    fn regression_value_for_gamma_t_4_8() {
        let p = presets::params("B1").unwrap().with_gamma_res(0.0);
        let blp = blp_measure(&oracle(&p, 10.0 * p.delay_t, p.delay_t / 1024.0));
        assert!((blp - BLP_B1_BARE_10T).abs() < 1e-9, "{blp:.15e}");
    }

    // total rise of |b|² on [0, 10T] for B1 without residual broadening
    const BLP_B1_BARE_10T: f64 = 3.4219236520030505e-1;

    #[test]
    fn refinement_is_stable() {
        let p = presets::params("B1").unwrap();
        let coarse = blp_measure(&oracle(&p, 6.0 * p.delay_t, p.delay_t / 256.0));
        let fine = blp_measure(&oracle(&p, 6.0 * p.delay_t, p.delay_t / 2048.0));
        assert!((coarse - fine).abs() < 1e-4, "{coarse} {fine}");
    }

    #[test]
    fn residual_broadening_never_adds_memory() {
        for gt in [0.8, 2.0, 4.0, 6.0, 8.0] {
            let t = 150e-9;
            let mut last = f64::INFINITY;
            for gr_hz in [0.0, 1e6, 3e6, 6e6, 12e6] {
                let p = GiantAtomParams::new(w(2.3e9), gt / t, t).unwrap().with_gamma_res(w(gr_hz));
                let blp = blp_measure(&oracle(&p, 12.0 * t, t / 256.0));
                assert!(blp <= last + 1e-12, "γT {gt} γres {gr_hz}: {blp} > {last}");
                last = blp;
            }
        }
    }

    #[test]
    fn monotone_input_gives_zero_and_rises_are_summed() {
        let d = DistanceTrace {
            t0: 0.0,
            dt: 1.0,
            distance: vec![1.0, 0.5, 0.5, 0.2],
        };
        assert_eq!(blp_measure(&d), 0.0);
        let e = DistanceTrace {
            t0: 0.0,
            dt: 1.0,
            distance: vec![1.0, 0.2, 0.3, 0.4, 0.1, 0.25],
        };
        assert!((blp_measure(&e) - 0.35).abs() < 1e-15);
    }

    #[test]
    fn csv_and_report() {
        let d = DistanceTrace {
            t0: 0.0,
            dt: 0.5,
            distance: vec![1.0, 0.25, 0.5],
        };
        let back = DistanceTrace::from_csv(&d.to_csv()).unwrap();
        assert_eq!(back, d);
        let json = serde_json::to_string(&blp_report(&d)).unwrap();
        assert_eq!(json, r#"{"blp":0.25,"dt":0.5}"#);
    }
}
