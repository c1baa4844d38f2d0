//! Shipped models, addressable by id from configs and the CLI.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{scalar, GrowthConstants, InitialSegment, JumpPart, MarkLaw, NeutralModel};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: &'static str,
    pub default: f64,
    pub about: &'static str,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelInfo {
    pub id: &'static str,
    pub summary: &'static str,
    /// "brownian", "jump" or "none".
    pub noise: &'static str,
    pub params: &'static [ParamSpec],
    pub tau: f64,
    pub horizon: f64,
}

const fn param(name: &'static str, default: f64, about: &'static str) -> ParamSpec {
    ParamSpec {
        name,
        default,
        about,
    }
}

static MODELS: &[ModelInfo] = &[
    ModelInfo {
        id: "paper-eq-1.1",
        summary: "G(y) = y^2, b(x,y) = a x + b y^3, sigma(x,y) = c y^2",
        noise: "brownian",
        params: &[
            param("a", -2.0, "linear drift rate"),
            param("b", 0.1, "cubic delay drift coefficient"),
            param("c", 2.0, "quadratic delay diffusion coefficient"),
            param("xi", 0.2, "constant initial segment value"),
        ],
        tau: 1.0,
        horizon: 2.0,
    },
    ModelInfo {
        id: "remark-1.1",
        summary: "G(y) = y^2, b(x,y) = sigma(x,y) = a x + y^3",
        noise: "brownian",
        params: &[
            param("a", -2.0, "linear rate shared by drift and diffusion"),
            param("xi", 0.1, "constant initial segment value"),
        ],
        tau: 1.0,
        horizon: 2.0,
    },
    ModelInfo {
        id: "jump-remark-1.2",
        summary: "G(y) = k y^2, b(x,y) = a x + b y^3, g(x,y,u) = (x + y^q) u, uniform marks",
        noise: "jump",
        params: &[
            param("k", 0.1, "neutral coefficient"),
            param("a", -2.0, "linear drift rate"),
            param("b", 0.1, "cubic delay drift coefficient"),
            param("q", 2.0, "integer power of the delayed state in g"),
            param("intensity", 2.0, "total jump intensity"),
            param("mark_low", -1.0, "lower end of the uniform mark law"),
            param("mark_high", 1.0, "upper end of the uniform mark law"),
            param("xi", 0.1, "constant initial segment value"),
        ],
        tau: 1.0,
        horizon: 2.0,
    },
    ModelInfo {
        id: "gbm",
        summary: "geometric Brownian motion, b(x) = mu x, sigma(x) = s x, no delay terms",
        noise: "brownian",
        params: &[
            param("mu", -1.0, "drift rate"),
            param("sigma", 0.5, "volatility"),
            param("x0", 1.0, "initial value"),
        ],
        tau: 1.0,
        horizon: 1.0,
    },
    ModelInfo {
        id: "additive",
        summary: "constant coefficients, b = beta, sigma = s, G = 0",
        noise: "brownian",
        params: &[
            param("beta", 1.0, "constant drift"),
            param("sigma", 0.5, "constant diffusion"),
            param("x0", 0.0, "initial value"),
        ],
        tau: 1.0,
        horizon: 1.0,
    },
    ModelInfo {
        id: "neutral-deterministic",
        summary: "G(y) = k y^2 with no drift and no noise",
        noise: "none",
        params: &[
            param("k", 1.0, "neutral coefficient"),
            param("xi", 0.1, "constant initial segment value"),
        ],
        tau: 1.0,
        horizon: 3.0,
    },
];

pub fn list_models() -> &'static [ModelInfo] {
    MODELS
}

pub fn find_model(id: &str) -> Result<&'static ModelInfo> {
    MODELS
        .iter()
        .find(|m| m.id == id)
        .ok_or_else(|| Error::UnknownModel(id.to_string()))
}

/// Human-readable listing, one model per line followed by its parameters.
pub fn describe_models() -> String {
    let mut out = String::new();
    for m in MODELS {
        let _ = writeln!(out, "{}  [{}]  {}", m.id, m.noise, m.summary);
        for p in m.params {
            let _ = writeln!(out, "    {} = {}  ({})", p.name, p.default, p.about);
        }
    }
    out
}

impl ModelInfo {
    /// Defaults overlaid with `overrides`; unknown names are rejected.
    pub fn resolve(&self, overrides: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
        let mut out: BTreeMap<String, f64> = self
            .params
            .iter()
            .map(|p| (p.name.to_string(), p.default))
            .collect();
        for (k, &v) in overrides {
            match out.get_mut(k) {
                Some(slot) if v.is_finite() => *slot = v,
                Some(_) => {
                    return Err(Error::InvalidModel(format!(
                        "{}: parameter {k} must be finite",
                        self.id
                    )))
                }
                None => {
                    return Err(Error::InvalidModel(format!(
                        "{}: unknown parameter {k}",
                        self.id
                    )))
                }
            }
        }
        Ok(out)
    }

    /// Value the default constant segment takes.
    pub fn segment_level(&self, params: &BTreeMap<String, f64>) -> f64 {
        params
            .get("xi")
            .or_else(|| params.get("x0"))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Builds model `id` with parameter overrides applied.
pub fn build_model(id: &str, overrides: &BTreeMap<String, f64>) -> Result<NeutralModel> {
    let info = find_model(id)?;
    let p = info.resolve(overrides)?;
    let get = |k: &str| p[k];
    let model = NeutralModel::new(id, 1)?;
    match id {
        "paper-eq-1.1" => {
            let (a, b, c) = (get("a"), get("b"), get("c"));
            model
                .with_neutral(scalar::neutral(|y| y * y))
                .with_drift(scalar::drift(move |x, y| a * x + b * y * y * y))
                .with_diffusion(1, scalar::diffusion(move |_, y| c * y * y))?
                .with_growth(GrowthConstants {
                    l: 1f64.max(a.abs()).max(1.5 * b.abs() + c.abs()),
                    q: 2.0,
                    l0: 0.0,
                    r: 1.0,
                })
        }
        "remark-1.1" => {
            let a = get("a");
            let f = move |x: f64, y: f64| a * x + y * y * y;
            model
                .with_neutral(scalar::neutral(|y| y * y))
                .with_drift(scalar::drift(f))
                .with_diffusion(1, scalar::diffusion(f))?
                .with_growth(GrowthConstants {
                    l: 1f64.max(2.0 * a.abs()).max(3.0),
                    q: 2.0,
                    l0: 0.0,
                    r: 1.0,
                })
        }
        "jump-remark-1.2" => {
            let (k, a, b) = (get("k"), get("a"), get("b"));
            let q = get("q");
            if q < 1.0 || q.fract() != 0.0 || q > 16.0 {
                return Err(Error::InvalidModel(format!(
                    "jump-remark-1.2: q must be an integer in [1, 16], got {q}"
                )));
            }
            let qi = q as i32;
            let intensity = get("intensity");
            if intensity < 0.0 {
                return Err(Error::InvalidModel(
                    "jump-remark-1.2: intensity must be non-negative".into(),
                ));
            }
            let marks = MarkLaw::Uniform {
                low: get("mark_low"),
                high: get("mark_high"),
            };
            let mean_mark = intensity * marks.mean();
            let jumps = JumpPart {
                coefficient: scalar::jump(move |x, y, u| (x + y.powi(qi)) * u),
                compensator: scalar::drift(move |x, y| (x + y.powi(qi)) * mean_mark),
                total_intensity: intensity,
                marks,
            };
            let cubic = 1.5 * b.abs();
            model
                .with_neutral(scalar::neutral(move |y| k * y * y))
                .with_drift(scalar::drift(move |x, y| a * x + b * y * y * y))
                .with_jumps(jumps)?
                .with_growth(GrowthConstants {
                    l: 1f64.max(k.abs()).max(a.abs()).max(cubic),
                    q: q.max(2.0),
                    l0: q,
                    r: 1.0,
                })
        }
        "gbm" => {
            let (mu, sigma) = (get("mu"), get("sigma"));
            model
                .with_drift(scalar::drift(move |x, _| mu * x))
                .with_diffusion(1, scalar::diffusion(move |x, _| sigma * x))?
                .with_growth(GrowthConstants {
                    l: 1f64.max(mu.abs() + sigma.abs()),
                    q: 1.0,
                    l0: 0.0,
                    r: 1.0,
                })
        }
        "additive" => {
            let (beta, sigma) = (get("beta"), get("sigma"));
            model
                .with_drift(scalar::drift(move |_, _| beta))
                .with_diffusion(1, scalar::diffusion(move |_, _| sigma))
        }
        "neutral-deterministic" => {
            let k = get("k");
            model
                .with_neutral(scalar::neutral(move |y| k * y * y))
                .with_growth(GrowthConstants {
                    l: 1f64.max(k.abs()),
                    q: 2.0,
                    l0: 0.0,
                    r: 1.0,
                })
        }
        _ => unreachable!("every registered id has a builder"),
    }
}

/// The model's default initial segment: constant at its `xi` (or `x0`).
pub fn default_segment(
    id: &str,
    overrides: &BTreeMap<String, f64>,
    tau: f64,
) -> Result<InitialSegment> {
    let info = find_model(id)?;
    let p = info.resolve(overrides)?;
    InitialSegment::constant(vec![info.segment_level(&p)], tau)
}
