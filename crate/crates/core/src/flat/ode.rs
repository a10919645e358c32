//! Fixed-step RK4 simulation of the social-movement and circadian models.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::FlatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdeKind {
    /// Potential members `P`, members `M`, ex-members `E`; input `Lambda`.
    Social,
    /// `M_P, P_0, P_1, P_2, C, C_N`; input `v_sp`.
    Circadian,
}

/// Switches between the printed and the dimensionally consistent reading of
/// two circadian terms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CircadianReadings {
    /// Use `V_3P * P_0 / (K_3P + P_1)` in the `P_1` equation instead of
    /// `V_3P * P_1 / (K_3P + P_1)`.
    pub p1_sink_uses_p0: bool,
    /// Use `-k_dn * C_N` as the last term of the `C_N` equation instead of
    /// `-k_dc * C`.
    pub nuclear_decay_uses_cn: bool,
}

pub const SOCIAL_PARAMS: [&str; 5] = ["Lambda", "beta", "delta1", "delta2", "delta3"];
pub const SOCIAL_STATES: [&str; 3] = ["P", "M", "E"];

pub const CIRCADIAN_PARAMS: [&str; 22] = [
    "v_sp", "v_mp", "K_mp", "k_sp", "V_1P", "K_1P", "V_2P", "K_2P", "V_3P", "K_3P", "V_4P", "K_4P", "k_d", "k_3",
    "k_4", "v_dp", "K_dp", "k_1", "k_2", "k_dc", "K_IP", "n",
];
pub const CIRCADIAN_STATES: [&str; 6] = ["M_P", "P_0", "P_1", "P_2", "C", "C_N"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeModel {
    pub model: OdeKind,
    pub parameters: BTreeMap<String, f64>,
    pub initial_state: Vec<f64>,
    pub horizon: f64,
    pub step: f64,
    #[serde(default)]
    pub readings: CircadianReadings,
}

/// Social-movement parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocialParams {
    pub lambda: f64,
    pub beta: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
}

impl SocialParams {
    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self, FlatError> {
        let get = |name: &str| lookup(map, "social", name);
        let p = Self {
            lambda: get("Lambda")?,
            beta: get("beta")?,
            delta1: get("delta1")?,
            delta2: get("delta2")?,
            delta3: get("delta3")?,
        };
        for (name, v) in SOCIAL_PARAMS.iter().zip([p.lambda, p.beta, p.delta1, p.delta2, p.delta3]) {
            if v < 0.0 {
                return Err(FlatError::InvalidModel { model: "social", reason: format!("{name} must be nonnegative") });
            }
        }
        Ok(p)
    }

    /// `(dP, dM, dE)` for input `lambda`.
    pub fn field(&self, x: &[f64], lambda: f64) -> [f64; 3] {
        let (p, m, e) = (x[0], x[1], x[2]);
        [
            lambda - self.beta * p * m + self.delta1 * e,
            self.beta * p * m - self.delta2 * m * e - self.delta3 * m,
            self.delta2 * m * e + self.delta3 * m - self.delta1 * e,
        ]
    }
}

/// Circadian parameters, named after the model's constants.
#[derive(Debug, Clone, Copy, PartialEq)]
#[allow(non_snake_case)]
pub struct CircadianParams {
    pub v_sp: f64,
    pub v_mp: f64,
    pub K_mp: f64,
    pub k_sp: f64,
    pub V_1P: f64,
    pub K_1P: f64,
    pub V_2P: f64,
    pub K_2P: f64,
    pub V_3P: f64,
    pub K_3P: f64,
    pub V_4P: f64,
    pub K_4P: f64,
    pub k_d: f64,
    pub k_3: f64,
    pub k_4: f64,
    pub v_dp: f64,
    pub K_dp: f64,
    pub k_1: f64,
    pub k_2: f64,
    pub k_dc: f64,
    pub k_dn: f64,
    pub K_IP: f64,
    pub n: f64,
    pub readings: CircadianReadings,
}

impl CircadianParams {
    pub fn from_map(map: &BTreeMap<String, f64>, readings: CircadianReadings) -> Result<Self, FlatError> {
        let get = |name: &str| lookup(map, "circadian", name);
        let p = Self {
            v_sp: get("v_sp")?,
            v_mp: get("v_mp")?,
            K_mp: get("K_mp")?,
            k_sp: get("k_sp")?,
            V_1P: get("V_1P")?,
            K_1P: get("K_1P")?,
            V_2P: get("V_2P")?,
            K_2P: get("K_2P")?,
            V_3P: get("V_3P")?,
            K_3P: get("K_3P")?,
            V_4P: get("V_4P")?,
            K_4P: get("K_4P")?,
            k_d: get("k_d")?,
            k_3: get("k_3")?,
            k_4: get("k_4")?,
            v_dp: get("v_dp")?,
            K_dp: get("K_dp")?,
            k_1: get("k_1")?,
            k_2: get("k_2")?,
            k_dc: get("k_dc")?,
            k_dn: if readings.nuclear_decay_uses_cn { get("k_dn")? } else { map.get("k_dn").copied().unwrap_or(0.0) },
            K_IP: get("K_IP")?,
            n: get("n")?,
            readings,
        };
        if let Some((name, _)) = map.iter().find(|(_, &v)| !(v.is_finite() && v >= 0.0)) {
            return Err(FlatError::InvalidModel { model: "circadian", reason: format!("{name} must be nonnegative") });
        }
        if p.K_IP <= 0.0 {
            return Err(FlatError::InvalidModel { model: "circadian", reason: "K_IP must be positive".into() });
        }
        Ok(p)
    }

    /// Repression factor `K_IP^n / (K_IP^n + C_N^n)`.
    pub fn repression(&self, cn: f64) -> f64 {
        let k = self.K_IP.powf(self.n);
        k / (k + cn.max(0.0).powf(self.n))
    }

    /// Time derivative of `(M_P, P_0, P_1, P_2, C, C_N)` for input `v_sp`.
    pub fn field(&self, x: &[f64], v_sp: f64) -> [f64; 6] {
        let (mp, p0, p1, p2, c, cn) = (x[0], x[1], x[2], x[3], x[4], x[5]);
        let mm = |v: f64, s: f64, k: f64| v * s / (k + s);
        let p1_sink = if self.readings.p1_sink_uses_p0 {
            self.V_3P * p0 / (self.K_3P + p1)
        } else {
            mm(self.V_3P, p1, self.K_3P)
        };
        let nuclear_loss = if self.readings.nuclear_decay_uses_cn { self.k_dn * cn } else { self.k_dc * c };
        [
            v_sp * self.repression(cn) - mm(self.v_mp, mp, self.K_mp) - self.k_d * mp,
            self.k_sp * mp - mm(self.V_1P, p0, self.K_1P) + mm(self.V_2P, p1, self.K_2P) - self.k_d * p0,
            mm(self.V_1P, p0, self.K_1P) - mm(self.V_2P, p1, self.K_2P) - p1_sink + mm(self.V_4P, p2, self.K_4P)
                - self.k_d * p1,
            mm(self.V_3P, p1, self.K_3P) - mm(self.V_4P, p2, self.K_4P) - self.k_3 * p2 * p2 + self.k_4 * c
                - mm(self.v_dp, p2, self.K_dp)
                - self.k_d * p2,
            self.k_3 * p2 * p2 - self.k_4 * c - self.k_1 * c + self.k_2 * cn - self.k_dc * c,
            self.k_1 * c - self.k_2 * cn - nuclear_loss,
        ]
    }
}

fn lookup(map: &BTreeMap<String, f64>, model: &'static str, name: &str) -> Result<f64, FlatError> {
    let v = *map.get(name).ok_or_else(|| FlatError::MissingParameter { model, name: name.to_string() })?;
    if !v.is_finite() {
        return Err(FlatError::InvalidModel { model, reason: format!("{name} is not finite") });
    }
    Ok(v)
}

impl OdeModel {
    /// Non-authoritative oscillatory circadian parameter set used by the
    /// shipped example model.
    pub fn default_circadian() -> Self {
        let parameters = [
            ("v_sp", 1.1),
            ("v_mp", 1.0),
            ("K_mp", 0.2),
            ("k_sp", 0.9),
            ("V_1P", 8.0),
            ("K_1P", 2.0),
            ("V_2P", 1.0),
            ("K_2P", 2.0),
            ("V_3P", 8.0),
            ("K_3P", 2.0),
            ("V_4P", 1.0),
            ("K_4P", 2.0),
            ("k_d", 0.01),
            ("k_3", 1.2),
            ("k_4", 0.6),
            ("v_dp", 2.2),
            ("K_dp", 0.2),
            ("k_1", 0.6),
            ("k_2", 0.2),
            ("k_dc", 0.01),
            ("K_IP", 1.0),
            ("n", 4.0),
        ];
        Self {
            model: OdeKind::Circadian,
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            initial_state: vec![0.5, 0.5, 0.5, 0.5, 0.5, 0.5],
            horizon: 96.0,
            step: 0.01,
            readings: CircadianReadings::default(),
        }
    }

    pub fn default_social() -> Self {
        let parameters = [("Lambda", 0.05), ("beta", 2.0), ("delta1", 0.3), ("delta2", 0.5), ("delta3", 0.2)];
        Self {
            model: OdeKind::Social,
            parameters: parameters.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            initial_state: vec![0.8, 0.15, 0.05],
            horizon: 20.0,
            step: 0.005,
            readings: CircadianReadings::default(),
        }
    }

    pub fn state_names(&self) -> &'static [&'static str] {
        match self.model {
            OdeKind::Social => &SOCIAL_STATES,
            OdeKind::Circadian => &CIRCADIAN_STATES,
        }
    }

    /// Name of the flat output column.
    pub fn flat_output(&self) -> &'static str {
        match self.model {
            OdeKind::Social => "E",
            OdeKind::Circadian => "C_N",
        }
    }

    fn name(&self) -> &'static str {
        match self.model {
            OdeKind::Social => "social",
            OdeKind::Circadian => "circadian",
        }
    }

    pub fn validate(&self) -> Result<(), FlatError> {
        let model = self.name();
        if self.initial_state.len() != self.state_names().len() {
            return Err(FlatError::InvalidModel {
                model,
                reason: format!("initial state has {} entries, expected {}", self.initial_state.len(), self.state_names().len()),
            });
        }
        if !(self.step > 0.0 && self.horizon > 0.0 && self.step < self.horizon) {
            return Err(FlatError::InvalidModel { model, reason: "need 0 < step < horizon".into() });
        }
        if self.initial_state.iter().any(|v| !v.is_finite()) {
            return Err(FlatError::InvalidModel { model, reason: "initial state must be finite".into() });
        }
        match self.model {
            OdeKind::Social => SocialParams::from_map(&self.parameters).map(|_| ()),
            OdeKind::Circadian => CircadianParams::from_map(&self.parameters, self.readings).map(|_| ()),
        }
    }
}

/// Uniformly sampled trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.names.iter().position(|n| n == name)?;
        Some(self.states.iter().map(|row| row[j]).collect())
    }

    /// Sample spacing, from the first two samples.
    pub fn step(&self) -> Option<f64> {
        (self.times.len() >= 2).then(|| self.times[1] - self.times[0])
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), FlatError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header = vec!["time".to_string()];
        header.extend(self.names.iter().cloned());
        w.write_record(&header).map_err(|e| FlatError::Csv(e.to_string()))?;
        for (t, row) in self.times.iter().zip(&self.states) {
            let mut rec = vec![format!("{t}")];
            rec.extend(row.iter().map(|v| format!("{v}")));
            w.write_record(&rec).map_err(|e| FlatError::Csv(e.to_string()))?;
        }
        w.flush().map_err(|e| FlatError::Csv(e.to_string()))
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, FlatError> {
        let mut r = csv::Reader::from_reader(input);
        let headers = r.headers().map_err(|e| FlatError::Csv(e.to_string()))?.clone();
        if headers.get(0) != Some("time") {
            return Err(FlatError::Csv("first column must be `time`".into()));
        }
        let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut times = Vec::new();
        let mut states = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec.map_err(|e| FlatError::Csv(e.to_string()))?;
            let parsed: Result<Vec<f64>, _> = rec.iter().map(|f| f.trim().parse::<f64>()).collect();
            let parsed = parsed.map_err(|e| FlatError::Csv(format!("row {}: {e}", line + 2)))?;
            times.push(parsed[0]);
            states.push(parsed[1..].to_vec());
        }
        Ok(Self { names, times, states })
    }
}

/// Classic fourth-order Runge-Kutta on a fixed grid.
pub fn rk4<F>(field: F, x0: &[f64], h: f64, steps: usize, model: &'static str) -> Result<Vec<Vec<f64>>, FlatError>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut out = Vec::with_capacity(steps + 1);
    out.push(x0.to_vec());
    let mut x = x0.to_vec();
    let axpy = |x: &[f64], k: &[f64], a: f64| x.iter().zip(k).map(|(xi, ki)| xi + a * ki).collect::<Vec<_>>();
    for step in 1..=steps {
        let k1 = field(&x);
        let k2 = field(&axpy(&x, &k1, h / 2.0));
        let k3 = field(&axpy(&x, &k2, h / 2.0));
        let k4 = field(&axpy(&x, &k3, h));
        for i in 0..x.len() {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(FlatError::BlowUp { model, time: step as f64 * h });
        }
        out.push(x.clone());
    }
    Ok(out)
}

pub fn simulate_ode(model: &OdeModel) -> Result<Trajectory, FlatError> {
    model.validate()?;
    let steps = (model.horizon / model.step).round() as usize;
    let h = model.step;
    let states = match model.model {
        OdeKind::Social => {
            let p = SocialParams::from_map(&model.parameters)?;
            rk4(|x| p.field(x, p.lambda).to_vec(), &model.initial_state, h, steps, "social")?
        }
        OdeKind::Circadian => {
            let p = CircadianParams::from_map(&model.parameters, model.readings)?;
            rk4(|x| p.field(x, p.v_sp).to_vec(), &model.initial_state, h, steps, "circadian")?
        }
    };
    Ok(Trajectory {
        names: model.state_names().iter().map(|s| s.to_string()).collect(),
        times: (0..=steps).map(|i| i as f64 * h).collect(),
        states,
    })
}
