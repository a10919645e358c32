//! Recovery of states and input from a flat output series.
//!
//! Every derivative is a fourth-order central difference, so each stacked
//! differentiation drops two more samples at both ends. Samples outside the
//! returned `valid` range are `NaN`.

use std::ops::Range;

use super::deriv::central_derivative;
use super::ode::{CircadianParams, SocialParams};
use super::FlatError;

/// Denominators smaller than this in absolute value are treated as singular.
pub const SINGULAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct SocialRecovery {
    pub p: Vec<f64>,
    pub m: Vec<f64>,
    pub lambda: Vec<f64>,
    pub valid: Range<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CircadianRecovery {
    pub c: Vec<f64>,
    pub p2: Vec<f64>,
    pub p1: Vec<f64>,
    pub p0: Vec<f64>,
    pub mp: Vec<f64>,
    pub v_sp: Vec<f64>,
    pub valid: Range<usize>,
}

fn need(len: usize, stages: usize) -> Result<(), FlatError> {
    let needed = 4 * stages + 1;
    if len < needed {
        return Err(FlatError::TooFewSamples { needed, got: len });
    }
    Ok(())
}

fn guard(equation: usize, time: f64, den: f64, what: &str) -> Result<(), FlatError> {
    if den.abs().is_nan() || den.abs() < SINGULAR_TOL {
        return Err(FlatError::Singularity { equation, time, reason: format!("{what} = {den:e}") });
    }
    Ok(())
}

/// Equations are numbered `1 = dP`, `2 = dM`, `3 = dE`.
pub fn recover_social(e: &[f64], h: f64, t0: f64, params: &SocialParams) -> Result<SocialRecovery, FlatError> {
    need(e.len(), 3)?;
    let n = e.len();
    let time = |i: usize| t0 + i as f64 * h;
    let (de, r1) = central_derivative(e, h, 0..n);
    let mut m = vec![f64::NAN; n];
    for i in r1.clone() {
        let den = params.delta2 * e[i] + params.delta3;
        guard(3, time(i), den, "delta2*E + delta3")?;
        m[i] = (de[i] + params.delta1 * e[i]) / den;
    }
    let (dm, r2) = central_derivative(&m, h, r1);
    let mut p = vec![f64::NAN; n];
    for i in r2.clone() {
        let den = params.beta * m[i];
        guard(2, time(i), den, "beta*M")?;
        p[i] = (dm[i] + params.delta2 * m[i] * e[i] + params.delta3 * m[i]) / den;
    }
    let (dp, r3) = central_derivative(&p, h, r2);
    let mut lambda = vec![f64::NAN; n];
    for i in r3.clone() {
        lambda[i] = dp[i] + params.beta * p[i] * m[i] - params.delta1 * e[i];
    }
    Ok(SocialRecovery { p, m, lambda, valid: r3 })
}

/// Invert `r = v * s / (k + s)` for `s`, requiring `0 < r < v`.
fn invert_mm(equation: usize, time: f64, r: f64, v: f64, k: f64) -> Result<f64, FlatError> {
    if !(r > 0.0 && r < v) || v - r < SINGULAR_TOL {
        return Err(FlatError::Singularity {
            equation,
            time,
            reason: format!("Michaelis-Menten residual {r:e} outside (0, {v})"),
        });
    }
    Ok(r * k / (v - r))
}

/// Equations are numbered by the state they differentiate:
/// `1 = M_P, 2 = P_0, 3 = P_1, 4 = P_2, 5 = C, 6 = C_N`.
pub fn recover_circadian(cn: &[f64], h: f64, t0: f64, p: &CircadianParams) -> Result<CircadianRecovery, FlatError> {
    need(cn.len(), 6)?;
    let n = cn.len();
    let time = |i: usize| t0 + i as f64 * h;
    let mm = |v: f64, s: f64, k: f64| v * s / (k + s);
    let nan = || vec![f64::NAN; n];

    let (dcn, r6) = central_derivative(cn, h, 0..n);
    let mut c = nan();
    for i in r6.clone() {
        c[i] = if p.readings.nuclear_decay_uses_cn {
            guard(6, time(i), p.k_1, "k_1")?;
            (dcn[i] + (p.k_2 + p.k_dn) * cn[i]) / p.k_1
        } else {
            guard(6, time(i), p.k_1 - p.k_dc, "k_1 - k_dc")?;
            (dcn[i] + p.k_2 * cn[i]) / (p.k_1 - p.k_dc)
        };
    }

    let (dc, r5) = central_derivative(&c, h, r6);
    let mut p2 = nan();
    for i in r5.clone() {
        guard(5, time(i), p.k_3, "k_3")?;
        let radicand = (dc[i] + (p.k_4 + p.k_1 + p.k_dc) * c[i] - p.k_2 * cn[i]) / p.k_3;
        if radicand < 0.0 {
            return Err(FlatError::Singularity {
                equation: 5,
                time: time(i),
                reason: format!("negative radicand {radicand:e}"),
            });
        }
        p2[i] = radicand.sqrt();
    }

    let (dp2, r4) = central_derivative(&p2, h, r5);
    let mut p1 = nan();
    for i in r4.clone() {
        let r = dp2[i] + mm(p.V_4P, p2[i], p.K_4P) + p.k_3 * p2[i] * p2[i] - p.k_4 * c[i]
            + mm(p.v_dp, p2[i], p.K_dp)
            + p.k_d * p2[i];
        p1[i] = invert_mm(4, time(i), r, p.V_3P, p.K_3P)?;
    }

    let (dp1, r3) = central_derivative(&p1, h, r4);
    let mut p0 = nan();
    for i in r3.clone() {
        let base = dp1[i] + mm(p.V_2P, p1[i], p.K_2P) - mm(p.V_4P, p2[i], p.K_4P) + p.k_d * p1[i];
        p0[i] = if p.readings.p1_sink_uses_p0 {
            let coef = p.V_3P / (p.K_3P + p1[i]);
            let prev = if i > r3.start { Some(p0[i - 1]) } else { None };
            solve_printed_p0(time(i), coef, base, p.V_1P, p.K_1P, prev)?
        } else {
            invert_mm(3, time(i), base + mm(p.V_3P, p1[i], p.K_3P), p.V_1P, p.K_1P)?
        };
    }

    let (dp0, r2) = central_derivative(&p0, h, r3);
    let mut mp = nan();
    for i in r2.clone() {
        guard(2, time(i), p.k_sp, "k_sp")?;
        mp[i] = (dp0[i] + mm(p.V_1P, p0[i], p.K_1P) - mm(p.V_2P, p1[i], p.K_2P) + p.k_d * p0[i]) / p.k_sp;
    }

    let (dmp, r1) = central_derivative(&mp, h, r2);
    let mut v_sp = nan();
    for i in r1.clone() {
        let rep = p.repression(cn[i]);
        guard(1, time(i), rep, "repression factor")?;
        v_sp[i] = (dmp[i] + mm(p.v_mp, mp[i], p.K_mp) + p.k_d * mp[i]) / rep;
    }

    Ok(CircadianRecovery { c, p2, p1, p0, mp, v_sp, valid: r1 })
}

/// Nonnegative root of `c x^2 + (c K + R - V) x + R K = 0`: the one nearest
/// `prev`, or the largest when there is no previous sample.
fn solve_printed_p0(time: f64, c: f64, r: f64, v: f64, k: f64, prev: Option<f64>) -> Result<f64, FlatError> {
    let b = c * k + r - v;
    let q = r * k;
    let roots: Vec<f64> = if c.abs() < SINGULAR_TOL {
        if b.abs() < SINGULAR_TOL { vec![] } else { vec![-q / b] }
    } else {
        let disc = b * b - 4.0 * c * q;
        if disc < 0.0 {
            vec![]
        } else {
            let s = disc.sqrt();
            vec![(-b - s) / (2.0 * c), (-b + s) / (2.0 * c)]
        }
    };
    roots
        .into_iter()
        .filter(|x| *x >= 0.0 && x.is_finite())
        .min_by(|a, b| match prev {
            Some(p) => (a - p).abs().total_cmp(&(b - p).abs()),
            None => b.total_cmp(a),
        })
        .ok_or_else(|| FlatError::Singularity { equation: 3, time, reason: "no nonnegative P_0 root".into() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flat::ode::{simulate_ode, OdeModel};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-12)
    }

    #[test]
    fn constant_e_gives_closed_form_m() {
        let params = SocialParams { lambda: 0.0, beta: 1.0, delta1: 0.4, delta2: 0.5, delta3: 0.2 };
        let c = 0.7;
        let rec = recover_social(&vec![c; 30], 0.1, 0.0, &params).unwrap();
        let expect = 0.4 * c / (0.5 * c + 0.2);
        for i in 2..28 {
            assert!((rec.m[i] - expect).abs() < 1e-12);
        }
        assert_eq!(rec.valid, 6..24);
    }

    #[test]
    fn zero_m_is_singular_in_equation_two() {
        let params = SocialParams { lambda: 0.0, beta: 1.0, delta1: 0.0, delta2: 0.5, delta3: 0.2 };
        match recover_social(&vec![0.0; 30], 0.1, 0.0, &params) {
            Err(FlatError::Singularity { equation: 2, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn social_round_trip() {
        let model = OdeModel::default_social();
        let traj = simulate_ode(&model).unwrap();
        let params = SocialParams::from_map(&model.parameters).unwrap();
        let rec = recover_social(&traj.column("E").unwrap(), model.step, 0.0, &params).unwrap();
        let (p, m) = (traj.column("P").unwrap(), traj.column("M").unwrap());
        for i in rec.valid.clone() {
            assert!(rel(rec.m[i], m[i]) < 1e-6, "M at {i}");
            assert!(rel(rec.p[i], p[i]) < 1e-6, "P at {i}");
            assert!(rel(rec.lambda[i], params.lambda) < 1e-6, "Lambda at {i}");
        }
    }

    #[test]
    fn circadian_round_trip() {
        let model = OdeModel::default_circadian();
        let traj = simulate_ode(&model).unwrap();
        let params = CircadianParams::from_map(&model.parameters, model.readings).unwrap();
        let rec = recover_circadian(&traj.column("C_N").unwrap(), model.step, 0.0, &params).unwrap();
        let cols: Vec<(&Vec<f64>, Vec<f64>)> = vec![
            (&rec.c, traj.column("C").unwrap()),
            (&rec.p2, traj.column("P_2").unwrap()),
            (&rec.p1, traj.column("P_1").unwrap()),
            (&rec.p0, traj.column("P_0").unwrap()),
            (&rec.mp, traj.column("M_P").unwrap()),
        ];
        for i in rec.valid.clone() {
            for (k, (got, want)) in cols.iter().enumerate() {
                assert!(rel(got[i], want[i]) < 1e-3, "column {k} at {i}: {} vs {}", got[i], want[i]);
            }
            assert!(rel(rec.v_sp[i], params.v_sp) < 1e-3, "v_sp at {i}: {}", rec.v_sp[i]);
        }
    }

    #[test]
    fn printed_reading_round_trip() {
        let mut model = OdeModel::default_circadian();
        model.readings.p1_sink_uses_p0 = true;
        model.horizon = 24.0;
        let traj = simulate_ode(&model).unwrap();
        let params = CircadianParams::from_map(&model.parameters, model.readings).unwrap();
        let rec = recover_circadian(&traj.column("C_N").unwrap(), model.step, 0.0, &params).unwrap();
        let p0 = traj.column("P_0").unwrap();
        for i in rec.valid.clone() {
            assert!(rel(rec.p0[i], p0[i]) < 1e-3, "P_0 at {i}: {} vs {}", rec.p0[i], p0[i]);
        }
    }

    #[test]
    fn negative_radicand_names_equation_five() {
        let model = OdeModel::default_circadian();
        let params = CircadianParams::from_map(&model.parameters, model.readings).unwrap();
        let cn: Vec<f64> = (0..40).map(|i| 5.0 - 0.1 * i as f64).collect();
        match recover_circadian(&cn, 0.01, 0.0, &params) {
            Err(FlatError::Singularity { equation: 5, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn too_few_samples() {
        let params = SocialParams { lambda: 0.0, beta: 1.0, delta1: 0.4, delta2: 0.5, delta3: 0.2 };
        assert!(matches!(recover_social(&[1.0; 5], 0.1, 0.0, &params), Err(FlatError::TooFewSamples { .. })));
    }
}
