//! Benchmark problems and the registry the CLI selects them from.

use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use serde::Serialize;

use crate::domain::BoundedSdeModel;
use crate::error::{Result, SdeError};

/// `dX = -beta^2 X (1 - X^2) dt + beta (1 - X^2) dW` on `(-1, 1)`.
pub fn example1_model(beta: f64) -> BoundedSdeModel {
    BoundedSdeModel::new(
        format!("exact1(beta={beta})"),
        vec![-1.0],
        vec![1.0],
        move |y, _| -beta * beta * y[0] * (1.0 - y[0] * y[0]),
        move |_, _| beta,
    )
    .expect("static bounds")
    .with_diffusion_derivative(|_, _| 0.0)
}

/// Closed-form solution of [`example1_model`] given `W(t) = w`.
pub fn example1_exact(beta: f64, x0: f64, w: f64) -> f64 {
    // Divide through by the dominant exponential so large |w| cannot overflow.
    let (a, b) = (1.0 + x0, 1.0 - x0);
    if w >= 0.0 {
        let e = (-2.0 * beta * w).exp();
        (a - b * e) / (a + b * e)
    } else {
        let e = (2.0 * beta * w).exp();
        (a * e - b) / (a * e + b)
    }
}

/// Half-width of the window around 0 and 1 where the trigonometric noise
/// factor switches to its series expansion.
const TRIG_SERIES_WINDOW: f64 = 1e-4;

/// `sin(pi x) / x` times `1 / (1 - x)`, expanded to fourth order around 0.
fn trig_factor_series(z: f64) -> (f64, f64) {
    let p3 = PI.powi(3) / 6.0;
    let p5 = PI.powi(5) / 120.0;
    let c = [PI, PI, PI - p3, PI - p3, PI - p3 + p5];
    let value = c[0] + z * (c[1] + z * (c[2] + z * (c[3] + z * c[4])));
    let deriv = c[1] + z * (2.0 * c[2] + z * (3.0 * c[3] + z * 4.0 * c[4]));
    (value, deriv)
}

/// `gbar(x) = sin(pi x) / (x (1 - x))` and its derivative, continuous at both ends.
pub fn trig_factor(x: f64) -> (f64, f64) {
    if x.abs() < TRIG_SERIES_WINDOW {
        trig_factor_series(x)
    } else if (1.0 - x).abs() < TRIG_SERIES_WINDOW {
        // gbar is symmetric about 1/2
        let (value, deriv) = trig_factor_series(1.0 - x);
        (value, -deriv)
    } else {
        let q = x * (1.0 - x);
        let (s, c) = (PI * x).sin_cos();
        (s / q, (PI * c * q - s * (1.0 - 2.0 * x)) / (q * q))
    }
}

/// `dX = X (1 - X) dt + sin(pi X) dW` on `(0, 1)`.
pub fn example2_model() -> BoundedSdeModel {
    BoundedSdeModel::new(
        "trig2",
        vec![0.0],
        vec![1.0],
        |y, _| y[0] * (1.0 - y[0]),
        |y, _| trig_factor(y[0]).0,
    )
    .expect("static bounds")
    .with_diffusion_derivative(|y, _| trig_factor(y[0]).1)
}

/// Reduced SIS model `dI = (eta I - beta I^2) dt + sigma (N - I) I dW` on `(0, N)`.
pub fn example3_model(eta: f64, beta: f64, sigma: f64, population: f64) -> Result<BoundedSdeModel> {
    Ok(BoundedSdeModel::new(
        format!("sis3(eta={eta},beta={beta},sigma={sigma},N={population})"),
        vec![0.0],
        vec![population],
        move |y, _| eta * y[0] - beta * y[0] * y[0],
        move |_, _| sigma,
    )?
    .with_diffusion_derivative(|_, _| 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NoiseScaling {
    /// One unscaled Wiener process per node.
    PerNode,
    /// Increments scaled by `1 / sqrt(dx)`, the finite-difference analogue of
    /// space-time white noise.
    WhiteInSpace,
}

/// Finite-difference grid for the Nagumo equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NagumoDiscretization {
    pub nodes: usize,
    pub x_min: f64,
    pub x_max: f64,
    pub nu: f64,
    pub noise_scaling: NoiseScaling,
}

impl Default for NagumoDiscretization {
    fn default() -> Self {
        Self {
            nodes: 128,
            x_min: 0.0,
            x_max: 20.0,
            nu: 0.001,
            noise_scaling: NoiseScaling::PerNode,
        }
    }
}

impl NagumoDiscretization {
    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / (self.nodes - 1) as f64
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.nodes).map(|k| self.x_min + k as f64 * self.dx()).collect()
    }

    /// Travelling-front profile `(1 + exp(-(2 - x) / sqrt 2))^-1` at the nodes.
    pub fn initial_condition(&self) -> Vec<f64> {
        self.positions()
            .into_iter()
            .map(|x| 1.0 / (1.0 + (-(2.0 - x) / std::f64::consts::SQRT_2).exp()))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.nodes < 3 || !(self.x_max > self.x_min) || !(self.nu >= 0.0) {
            return Err(SdeError::InvalidModel(format!(
                "Nagumo grid needs nodes >= 3, x_max > x_min and nu >= 0, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Semi-discrete Nagumo system on `(-1/2, 1)^nodes` with Neumann ends
/// (mirrored ghost nodes) and noise `2 (1 - X_i) (X_i + 1/2) dW_i`.
pub fn example4_model(disc: NagumoDiscretization) -> Result<BoundedSdeModel> {
    disc.validate()?;
    let n = disc.nodes;
    let coef = disc.nu / (disc.dx() * disc.dx());
    let noise = match disc.noise_scaling {
        NoiseScaling::PerNode => 2.0,
        NoiseScaling::WhiteInSpace => 2.0 / disc.dx().sqrt(),
    };
    let model = BoundedSdeModel::new(
        format!("nagumo4(nodes={n})"),
        vec![-0.5; n],
        vec![1.0; n],
        move |y, i| {
            let left = if i == 0 { y[1] } else { y[i - 1] };
            let right = if i == n - 1 { y[n - 2] } else { y[i + 1] };
            let yi = y[i];
            coef * (left - 2.0 * yi + right) + yi * (1.0 - yi) * (yi + 0.5)
        },
        move |_, _| noise,
    )?;
    Ok(model.with_diffusion_derivative(|_, _| 0.0))
}

/// Closed-form path map for models that have one: `(y0, t, W(t)) -> X(t)`.
pub type ExactSolution = Arc<dyn Fn(&[f64], f64, &[f64]) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelName {
    Exact1,
    Trig2,
    Sis3a,
    Sis3b,
    Nagumo4,
}

impl ModelName {
    pub const ALL: [ModelName; 5] = [
        ModelName::Exact1,
        ModelName::Trig2,
        ModelName::Sis3a,
        ModelName::Sis3b,
        ModelName::Nagumo4,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Exact1 => "exact1",
            ModelName::Trig2 => "trig2",
            ModelName::Sis3a => "sis3a",
            ModelName::Sis3b => "sis3b",
            ModelName::Nagumo4 => "nagumo4",
        }
    }

    pub fn names() -> String {
        ModelName::ALL.iter().map(|m| m.as_str()).collect::<Vec<_>>().join(", ")
    }
}

impl std::fmt::Display for ModelName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelName {
    type Err = SdeError;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        ModelName::ALL
            .into_iter()
            .find(|m| m.as_str() == key)
            .ok_or_else(|| SdeError::InvalidConfig(format!("unknown model `{s}`; available: {}", ModelName::names())))
    }
}

/// A model together with the experiment defaults it is benchmarked with.
#[derive(Clone)]
pub struct ModelInstance {
    pub name: ModelName,
    pub model: BoundedSdeModel,
    pub y0: Vec<f64>,
    pub t_final: f64,
    pub realizations: usize,
    pub exact: Option<ExactSolution>,
}

impl std::fmt::Debug for ModelInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ModelInstance")
            .field("name", &self.name)
            .field("model", &self.model)
            .field("t_final", &self.t_final)
            .field("realizations", &self.realizations)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

pub const EXAMPLE1_BETA: f64 = 2.0;
pub const EXAMPLE1_X0: f64 = 0.9;

impl ModelInstance {
    pub fn get(name: ModelName) -> Self {
        match name {
            ModelName::Exact1 => {
                let beta = EXAMPLE1_BETA;
                let exact: ExactSolution =
                    Arc::new(move |y0: &[f64], _t: f64, w: &[f64]| vec![example1_exact(beta, y0[0], w[0])]);
                Self {
                    name,
                    model: example1_model(beta),
                    y0: vec![EXAMPLE1_X0],
                    t_final: 4.0,
                    realizations: 2000,
                    exact: Some(exact),
                }
            }
            ModelName::Trig2 => Self {
                name,
                model: example2_model(),
                y0: vec![0.95],
                t_final: 1.0,
                realizations: 2000,
                exact: None,
            },
            ModelName::Sis3a => Self {
                name,
                model: example3_model(8.0, 1.0, 0.1, 10.0).expect("static parameters"),
                y0: vec![9.99],
                t_final: 4.0,
                realizations: 2000,
                exact: None,
            },
            ModelName::Sis3b => Self {
                name,
                model: example3_model(1.0, 1.0, 2.0, 1.0).expect("static parameters"),
                y0: vec![0.95],
                t_final: 4.0,
                realizations: 2000,
                exact: None,
            },
            ModelName::Nagumo4 => {
                let disc = NagumoDiscretization::default();
                Self {
                    name,
                    model: example4_model(disc).expect("default grid"),
                    y0: disc.initial_condition(),
                    t_final: 1.0,
                    realizations: 1000,
                    exact: None,
                }
            }
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        Ok(Self::get(name.parse()?))
    }
}
