//! Byzantine behaviour generators.
//!
//! The attacker is omniscient about the current round only: it sees the
//! honest momenta submitted this round (and, for bit-flip failures, the true
//! momenta of the faulty workers themselves) and nothing else.
//!
//! ALIE and FoE follow their original constructions:
//! ALIE submits the per-coordinate honest mean shifted by `z` standard
//! deviations, `z = Φ⁻¹((m - s) / m)` with `s = ⌊m/2 + 1⌋ - byz_count`
//! supporters; FoE submits `-ε` times the honest mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vecmath::{self, ParamVector, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackKind {
    None,
    Bitflip,
    Alie,
    Foe,
    Gauss,
}

impl AttackKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AttackKind::None => "none",
            AttackKind::Bitflip => "bitflip",
            AttackKind::Alie => "alie",
            AttackKind::Foe => "foe",
            AttackKind::Gauss => "gauss",
        }
    }
}

impl std::str::FromStr for AttackKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown attack.kind '{s}'")))
    }
}

fn default_bitflip() -> f64 {
    -10.0
}
fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub kind: AttackKind,
    #[serde(default = "default_bitflip")]
    pub bitflip_factor: f64,
    #[serde(default = "default_one")]
    pub foe_eps: f64,
    #[serde(default = "default_one")]
    pub gauss_scale: f64,
}

impl AttackSpec {
    pub fn new(kind: AttackKind) -> Self {
        Self {
            kind,
            bitflip_factor: default_bitflip(),
            foe_eps: default_one(),
            gauss_scale: default_one(),
        }
    }

    /// Whether Byzantine workers need their own true momentum this round.
    pub fn needs_own_momentum(&self) -> bool {
        matches!(self.kind, AttackKind::Bitflip | AttackKind::None)
    }
}

impl Default for AttackSpec {
    fn default() -> Self {
        Self::new(AttackKind::None)
    }
}

/// Number of Byzantine workers for `m` workers at fraction `delta`.
pub fn byzantine_count(m: usize, delta: f64) -> Result<usize> {
    if !(0.0..0.5).contains(&delta) {
        return Err(Error::invalid("delta must be in [0, 0.5)"));
    }
    Ok((delta * m as f64 + 1e-9).floor() as usize)
}

/// Indices of the Byzantine workers: the last `⌊δm⌋` of `0..m`.
pub fn byzantine_slots(m: usize, delta: f64) -> Result<Vec<usize>> {
    let b = byzantine_count(m, delta)?;
    Ok((m - b..m).collect())
}

/// `erf` from the everywhere-positive series
/// `erf(x) = 2/√π · e^{-x²} · Σ 2ⁿ x^{2n+1} / (1·3·…·(2n+1))`.
pub fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x > 6.0 {
        return 1.0;
    }
    let x2 = x * x;
    let mut term = x;
    let mut sum = x;
    let mut n = 0.0;
    loop {
        n += 1.0;
        term *= 2.0 * x2 / (2.0 * n + 1.0);
        sum += term;
        if term <= sum * 1e-17 {
            break;
        }
    }
    (2.0 / std::f64::consts::PI.sqrt()) * (-x2).exp() * sum
}

pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// `Φ⁻¹(p)` by bisection on [`normal_cdf`], to an interval width of 1e-12.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid("quantile level must be in (0, 1)"));
    }
    let (mut lo, mut hi) = (-10.0, 10.0);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// The ALIE shift multiplier for `m` workers of which `byz_count` collude.
pub fn alie_z(m: usize, byz_count: usize) -> Result<f64> {
    let supporters = (m / 2 + 1).saturating_sub(byz_count).max(1);
    let p = (m - supporters.min(m - 1)) as f64 / m as f64;
    normal_quantile(p)
}

/// Per-coordinate population mean and standard deviation.
pub fn coordinate_stats(vs: &[ParamVector]) -> Result<(ParamVector, ParamVector)> {
    let mu = vecmath::mean(vs)?;
    let n = vs.len() as f64;
    let d = mu.dim();
    let mut var = vec![0.0; d];
    for v in vs {
        for ((acc, x), m) in var.iter_mut().zip(v.as_slice()).zip(mu.as_slice()) {
            *acc += (x - m) * (x - m);
        }
    }
    let std = ParamVector::new(var.into_iter().map(|s| (s / n).sqrt()).collect())?;
    Ok((mu, std))
}

/// Vectors submitted by the `byz_count` Byzantine workers this round.
///
/// `honest` holds this round's honest momenta; `own` holds the Byzantine
/// workers' own true momenta and is only read by `bitflip` (and `none`,
/// where faulty workers behave honestly).
pub fn apply_attack(
    spec: &AttackSpec,
    honest: &[ParamVector],
    own: &[ParamVector],
    byz_count: usize,
    stream: &RngStream,
) -> Result<Vec<ParamVector>> {
    if byz_count == 0 {
        return Ok(Vec::new());
    }
    match spec.kind {
        AttackKind::None | AttackKind::Bitflip => {
            if own.len() != byz_count {
                return Err(Error::invalid(format!(
                    "{} attack needs {byz_count} true momenta, got {}",
                    spec.kind.as_str(),
                    own.len()
                )));
            }
            if spec.kind == AttackKind::None {
                return Ok(own.to_vec());
            }
            own.iter().map(|u| u.scale(spec.bitflip_factor)).collect()
        }
        AttackKind::Alie => {
            let (mu, sd) = coordinate_stats(honest)?;
            let z = alie_z(honest.len() + byz_count, byz_count)?;
            let v = mu.axpy(-z, &sd)?;
            Ok(vec![v; byz_count])
        }
        AttackKind::Foe => {
            let v = vecmath::mean(honest)?.scale(-spec.foe_eps)?;
            Ok(vec![v; byz_count])
        }
        AttackKind::Gauss => {
            let d = match (honest.first(), own.first()) {
                (Some(h), _) => h.dim(),
                (None, Some(o)) => o.dim(),
                (None, None) => return Err(Error::Empty("gauss attack needs a dimension reference")),
            };
            (0..byz_count)
                .map(|k| {
                    let mut s = stream.fork(k as u64);
                    vecmath::gaussian_draw(&mut s, d).scale(spec.gauss_scale)
                })
                .collect()
        }
    }
}
