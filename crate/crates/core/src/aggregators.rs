//! Server-side aggregation rules and an empirical robustness estimator.

use serde::{Deserialize, Serialize};

use crate::attacks::{self, AttackSpec};
use crate::error::{Error, Result};
use crate::vecmath::{self, ParamVector, RngStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggregatorKind {
    Mean,
    Krum,
    Geomed,
    Cm,
    Cc,
}

impl AggregatorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AggregatorKind::Mean => "mean",
            AggregatorKind::Krum => "krum",
            AggregatorKind::Geomed => "geomed",
            AggregatorKind::Cm => "cm",
            AggregatorKind::Cc => "cc",
        }
    }
}

impl std::str::FromStr for AggregatorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown aggregator.kind '{s}'")))
    }
}

fn default_radius() -> f64 {
    0.1
}
fn default_cc_iters() -> usize {
    1
}
fn default_tol() -> f64 {
    1e-8
}
fn default_max_iters() -> usize {
    1000
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AggregatorConfig {
    pub kind: AggregatorKind,
    /// Assumed Byzantine count for Krum; `None` means `⌈δm⌉`.
    #[serde(default)]
    pub krum_f: Option<usize>,
    #[serde(default = "default_radius")]
    pub cc_radius: f64,
    #[serde(default = "default_cc_iters")]
    pub cc_iters: usize,
    #[serde(default = "default_tol")]
    pub weiszfeld_tol: f64,
    #[serde(default = "default_max_iters")]
    pub weiszfeld_max_iters: usize,
    #[serde(default = "default_true")]
    pub cc_warm_start: bool,
}

impl AggregatorConfig {
    pub fn new(kind: AggregatorKind) -> Self {
        Self {
            kind,
            krum_f: None,
            cc_radius: default_radius(),
            cc_iters: default_cc_iters(),
            weiszfeld_tol: default_tol(),
            weiszfeld_max_iters: default_max_iters(),
            cc_warm_start: true,
        }
    }

    pub fn validate(&self, m: usize) -> Result<()> {
        if !(self.cc_radius > 0.0) {
            return Err(Error::Config("aggregator.cc_radius must be > 0".into()));
        }
        if self.cc_iters == 0 {
            return Err(Error::Config("aggregator.cc_iters must be >= 1".into()));
        }
        if !(self.weiszfeld_tol > 0.0) {
            return Err(Error::Config("aggregator.weiszfeld_tol must be > 0".into()));
        }
        if self.kind == AggregatorKind::Krum {
            if let Some(f) = self.krum_f {
                if f + 3 > m {
                    return Err(Error::Config(format!("aggregator.krum_f must be <= m - 3 (m = {m})")));
                }
            }
        }
        Ok(())
    }

    /// Krum's `f` for `m` workers at Byzantine fraction `delta`.
    pub fn krum_f_for(&self, m: usize, delta: f64) -> usize {
        self.krum_f
            .unwrap_or_else(|| (delta * m as f64 - 1e-9).ceil().max(0.0) as usize)
    }

    /// Aggregates `xs`. `center` seeds centered clipping (zero when absent).
    pub fn aggregate(&self, xs: &[ParamVector], krum_f: usize, center: Option<&ParamVector>) -> Result<ParamVector> {
        match self.kind {
            AggregatorKind::Mean => aggregate_mean(xs),
            AggregatorKind::Krum => aggregate_krum(xs, krum_f),
            AggregatorKind::Geomed => {
                Ok(aggregate_geomed(xs, self.weiszfeld_tol, self.weiszfeld_max_iters)?.point)
            }
            AggregatorKind::Cm => aggregate_cm(xs),
            AggregatorKind::Cc => {
                let zero;
                let c = match center {
                    Some(c) => c,
                    None => {
                        zero = ParamVector::zeros(xs.first().ok_or(Error::Empty("aggregator inputs"))?.dim());
                        &zero
                    }
                };
                aggregate_cc(xs, self.cc_radius, self.cc_iters, c)
            }
        }
    }
}

/// Aggregate plus the honest-mean oracle, when the honest set is known.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationOutcome {
    pub aggregate: ParamVector,
    pub honest_mean: Option<ParamVector>,
    pub error_sq: Option<f64>,
}

impl AggregationOutcome {
    pub fn with_oracle(aggregate: ParamVector, honest: &[ParamVector]) -> Result<Self> {
        let honest_mean = vecmath::mean(honest)?;
        let error_sq = aggregate.dist_sq(&honest_mean)?;
        Ok(Self { aggregate, honest_mean: Some(honest_mean), error_sq: Some(error_sq) })
    }
}

pub fn aggregate_mean(xs: &[ParamVector]) -> Result<ParamVector> {
    vecmath::mean(xs)
}

pub fn aggregate_cm(xs: &[ParamVector]) -> Result<ParamVector> {
    vecmath::coordinate_median(xs)
}

/// Krum scores: for each input, the sum of squared distances to its
/// `m - f - 2` nearest other inputs.
pub fn krum_scores(xs: &[ParamVector], f: usize) -> Result<Vec<f64>> {
    let m = xs.len();
    if m < f + 3 {
        return Err(Error::KrumTooFewInputs { m, f });
    }
    let k = m - f - 2;
    let mut d2 = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in i + 1..m {
            let d = xs[i].dist_sq(&xs[j])?;
            d2[i][j] = d;
            d2[j][i] = d;
        }
    }
    Ok((0..m)
        .map(|i| {
            let mut row: Vec<f64> = (0..m).filter(|&j| j != i).map(|j| d2[i][j]).collect();
            row.sort_by(f64::total_cmp);
            row[..k].iter().sum()
        })
        .collect())
}

/// Index selected by Krum; ties go to the lowest index.
pub fn krum_select(xs: &[ParamVector], f: usize) -> Result<usize> {
    let scores = krum_scores(xs, f)?;
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s < scores[best] {
            best = i;
        }
    }
    Ok(best)
}

pub fn aggregate_krum(xs: &[ParamVector], f: usize) -> Result<ParamVector> {
    Ok(xs[krum_select(xs, f)?].clone())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeomedResult {
    pub point: ParamVector,
    pub iterations: usize,
    pub converged: bool,
    /// `Σ‖v - xᵢ‖` at the start point and after every iteration.
    pub objective: Vec<f64>,
}

const COINCIDE: f64 = 1e-12;

pub fn sum_of_distances(v: &ParamVector, xs: &[ParamVector]) -> Result<f64> {
    xs.iter().map(|x| Ok(v.dist_sq(x)?.sqrt())).sum()
}

/// Whether input `j` satisfies the optimality condition of the geometric
/// median: the pull of all other points has norm at most the multiplicity of
/// `xs[j]`.
fn vertex_is_optimal(xs: &[ParamVector], j: usize) -> Result<bool> {
    let d = xs[j].dim();
    let mut pull = vec![0.0; d];
    let mut multiplicity = 0.0;
    for x in xs {
        let diff = x.sub(&xs[j])?;
        let n = vecmath::l2_norm(&diff);
        if n <= COINCIDE {
            multiplicity += 1.0;
            continue;
        }
        for (p, v) in pull.iter_mut().zip(diff.as_slice()) {
            *p += v / n;
        }
    }
    Ok(pull.iter().map(|p| p * p).sum::<f64>().sqrt() <= multiplicity)
}

/// Geometric median by Weiszfeld iteration, started at the mean.
///
/// An input point that satisfies the vertex optimality condition is returned
/// directly. If an iterate lands on a non-optimal input point it is nudged by
/// 1e-10 along the all-ones direction.
pub fn aggregate_geomed(xs: &[ParamVector], tol: f64, max_iters: usize) -> Result<GeomedResult> {
    let mut v = vecmath::mean(xs)?;
    let d = v.dim();
    let mut objective = vec![sum_of_distances(&v, xs)?];
    for j in 0..xs.len() {
        if vertex_is_optimal(xs, j)? {
            let point = xs[j].clone();
            objective.push(sum_of_distances(&point, xs)?);
            return Ok(GeomedResult { point, iterations: 0, converged: true, objective });
        }
    }
    let nudge = ParamVector::filled(d, 1e-10 / (d as f64).sqrt())?;
    for it in 1..=max_iters {
        if let Some(j) = xs.iter().position(|x| x.dist_sq(&v).map(|s| s.sqrt() <= COINCIDE).unwrap_or(false)) {
            if vertex_is_optimal(xs, j)? {
                return Ok(GeomedResult { point: xs[j].clone(), iterations: it, converged: true, objective });
            }
            v = v.add(&nudge)?;
        }
        let mut num = vec![0.0; d];
        let mut den = 0.0;
        for x in xs {
            let w = 1.0 / x.dist_sq(&v)?.sqrt().max(COINCIDE);
            den += w;
            for (n, xi) in num.iter_mut().zip(x.as_slice()) {
                *n += w * xi;
            }
        }
        let next = ParamVector::new(num.into_iter().map(|n| n / den).collect())?;
        let step = next.dist_sq(&v)?.sqrt();
        v = next;
        objective.push(sum_of_distances(&v, xs)?);
        if step < tol {
            return Ok(GeomedResult { point: v, iterations: it, converged: true, objective });
        }
    }
    Ok(GeomedResult { point: v, iterations: max_iters, converged: false, objective })
}

/// Centered clipping: `iters` steps of
/// `v ← v + (1/m) Σ (xᵢ - v) · min(1, τ / ‖xᵢ - v‖)` from `center`.
pub fn aggregate_cc(xs: &[ParamVector], radius: f64, iters: usize, center: &ParamVector) -> Result<ParamVector> {
    if !(radius > 0.0) {
        return Err(Error::invalid("clipping radius must be > 0"));
    }
    if iters == 0 {
        return Err(Error::invalid("clipping iterations must be >= 1"));
    }
    if xs.is_empty() {
        return Err(Error::Empty("aggregator inputs"));
    }
    let m = xs.len() as f64;
    let mut v = center.clone();
    for _ in 0..iters {
        let mut step = vec![0.0; v.dim()];
        for x in xs {
            let diff = x.sub(&v)?;
            let n = vecmath::l2_norm(&diff);
            if n == 0.0 {
                continue;
            }
            let w = (radius / n).min(1.0) / m;
            for (s, dv) in step.iter_mut().zip(diff.as_slice()) {
                *s += w * dv;
            }
        }
        v = v.add(&ParamVector::new(step)?)?;
    }
    Ok(v)
}

/// Monte-Carlo setup for [`estimate_robustness`].
#[derive(Debug, Clone)]
pub struct RobustnessProbe {
    pub m: usize,
    pub delta: f64,
    /// Pairwise deviation scale: honest vectors satisfy `E‖xₖ - xₖ'‖² = ρ²`.
    pub rho: f64,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustnessEstimate {
    pub mean_error_sq: f64,
    /// `E‖e‖² / (δρ²)`: an empirical diagnostic, not a certified constant.
    pub c_hat: f64,
}

/// Empirical `E‖e‖²` of `agg` against an attack.
///
/// Honest vectors are i.i.d. `N(0, ρ²/(2d) I)`; the Byzantine slots are filled
/// by `attack` (bit-flip and `none` use fresh honest-distributed vectors as
/// the faulty workers' true values). Centered clipping starts at the origin,
/// which is where a warm start sits when the previous aggregate was accurate.
pub fn estimate_robustness(agg: &AggregatorConfig, attack: &AttackSpec, probe: &RobustnessProbe) -> Result<RobustnessEstimate> {
    let RobustnessProbe { m, delta, rho, dim, trials, seed } = *probe;
    if trials == 0 {
        return Err(Error::invalid("trials must be >= 1"));
    }
    let byz = attacks::byzantine_count(m, delta)?;
    let honest_n = m - byz;
    let krum_f = agg.krum_f_for(m, delta);
    agg.validate(m)?;
    let sd = rho / (2.0 * dim as f64).sqrt();
    let mut total = 0.0;
    for trial in 0..trials {
        let mut stream = RngStream::with_tag(seed, 0, trial as u64, 0x0B05);
        let draw = |s: &mut RngStream| vecmath::gaussian_draw(s, dim).scale(sd);
        let honest: Vec<ParamVector> = (0..honest_n).map(|_| draw(&mut stream)).collect::<Result<_>>()?;
        let own: Vec<ParamVector> = if attack.needs_own_momentum() {
            (0..byz).map(|_| draw(&mut stream)).collect::<Result<_>>()?
        } else {
            Vec::new()
        };
        let byz_vecs = attacks::apply_attack(attack, &honest, &own, byz, &stream.fork(1))?;
        let mut all = honest.clone();
        all.extend(byz_vecs);
        let out = agg.aggregate(&all, krum_f, None)?;
        total += AggregationOutcome::with_oracle(out, &honest)?.error_sq.unwrap_or(0.0);
    }
    let mean_error_sq = total / trials as f64;
    let denom = delta * rho * rho;
    let c_hat = if denom > 0.0 {
        mean_error_sq / denom
    } else if mean_error_sq == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(RobustnessEstimate { mean_error_sq, c_hat })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attacks::AttackKind;
    use proptest::prelude::*;

    fn pv(x: &[f64]) -> ParamVector {
        ParamVector::new(x.to_vec()).unwrap()
    }

    fn close(a: &ParamVector, b: &ParamVector, tol: f64) -> bool {
        a.dist_sq(b).unwrap().sqrt() <= tol
    }

    #[test]
    fn mean_examples() {
        assert_eq!(aggregate_mean(&[pv(&[1.0, 1.0]), pv(&[3.0, 3.0])]).unwrap(), pv(&[2.0, 2.0]));
        assert_eq!(aggregate_mean(&[pv(&[4.0])]).unwrap(), pv(&[4.0]));
        for m in [3.0, 3e6] {
            let out = aggregate_mean(&[pv(&[0.0]), pv(&[0.0]), pv(&[m])]).unwrap();
            assert!((out.get(0) - m / 3.0).abs() < 1e-9 * m);
        }
        assert!(aggregate_mean(&[]).is_err());
    }

    #[test]
    fn krum_examples() {
        let xs = [pv(&[0.0]), pv(&[0.1]), pv(&[0.2]), pv(&[10.0])];
        let scores = krum_scores(&xs, 1).unwrap();
        let want = [0.01, 0.01, 0.01, 96.04];
        for (s, w) in scores.iter().zip(want) {
            assert!((s - w).abs() < 1e-12);
        }
        assert_eq!(krum_select(&xs, 1).unwrap(), 0);
        let same = vec![pv(&[2.0, 3.0]); 5];
        assert_eq!(aggregate_krum(&same, 2).unwrap(), pv(&[2.0, 3.0]));
        assert_eq!(aggregate_krum(&xs, 2), Err(Error::KrumTooFewInputs { m: 4, f: 2 }));
    }

    #[test]
    fn geomed_examples() {
        let same = vec![pv(&[1.5, -2.0]); 4];
        assert_eq!(aggregate_geomed(&same, 1e-10, 100).unwrap().point, pv(&[1.5, -2.0]));
        let line = [pv(&[-1.0, 0.0]), pv(&[0.0, 0.0]), pv(&[1.0, 0.0])];
        assert!(close(&aggregate_geomed(&line, 1e-10, 100).unwrap().point, &pv(&[0.0, 0.0]), 1e-9));
    }

    #[test]
    fn geomed_flags_non_convergence() {
        let xs = [pv(&[0.0, 0.0]), pv(&[4.0, 0.0]), pv(&[0.0, 3.0]), pv(&[5.0, 5.0])];
        let r = aggregate_geomed(&xs, 1e-300, 3).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn cc_examples() {
        let xs = [pv(&[0.0]), pv(&[0.05]), pv(&[10.0])];
        let out = aggregate_cc(&xs, 0.1, 1, &pv(&[0.0])).unwrap();
        assert!((out.get(0) - 0.05).abs() < 1e-15);
        let near = [pv(&[0.01, 0.0]), pv(&[0.0, -0.02]), pv(&[0.03, 0.03])];
        let out = aggregate_cc(&near, 0.1, 1, &pv(&[0.0, 0.0])).unwrap();
        assert!(close(&out, &aggregate_mean(&near).unwrap(), 1e-15));
        for big in [1e3, 1e9] {
            let out = aggregate_cc(&[pv(&[0.0]), pv(&[big])], 0.1, 1, &pv(&[0.0])).unwrap();
            assert!(out.get(0).abs() <= 0.1 + 1e-15);
        }
    }

    #[test]
    fn robustness_estimator_examples() {
        let probe = RobustnessProbe { m: 8, delta: 0.0, rho: 0.0, dim: 4, trials: 20, seed: 1 };
        for kind in [AggregatorKind::Krum, AggregatorKind::Geomed, AggregatorKind::Cm, AggregatorKind::Cc] {
            let r = estimate_robustness(&AggregatorConfig::new(kind), &AttackSpec::new(AttackKind::Gauss), &probe).unwrap();
            assert!(r.mean_error_sq <= 1e-12);
            assert_eq!(r.c_hat, 0.0);
        }
        let probe = RobustnessProbe { m: 8, delta: 0.125, rho: 1.0, dim: 4, trials: 200, seed: 2 };
        let err = |scale: f64| {
            let atk = AttackSpec { gauss_scale: scale, ..AttackSpec::new(AttackKind::Gauss) };
            estimate_robustness(&AggregatorConfig::new(AggregatorKind::Mean), &atk, &probe).unwrap().mean_error_sq
        };
        let ratio = err(1e4) / err(1e3);
        assert!((ratio - 100.0).abs() < 5.0, "ratio {ratio}");
        let bad = RobustnessProbe { delta: 0.5, ..probe };
        assert!(estimate_robustness(&AggregatorConfig::new(AggregatorKind::Cm), &AttackSpec::default(), &bad).is_err());
    }

    fn instance(m: usize, d: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
        prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), m)
    }

    fn all_kinds() -> [AggregatorConfig; 5] {
        let mut geo = AggregatorConfig::new(AggregatorKind::Geomed);
        geo.weiszfeld_tol = 1e-12;
        geo.weiszfeld_max_iters = 20_000;
        [
            AggregatorConfig::new(AggregatorKind::Mean),
            AggregatorConfig::new(AggregatorKind::Krum),
            geo,
            AggregatorConfig::new(AggregatorKind::Cm),
            AggregatorConfig::new(AggregatorKind::Cc),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn permutation_invariance(xs in instance(6, 3), rot in 1usize..6) {
            let vs: Vec<_> = xs.iter().map(|x| pv(x)).collect();
            let mut perm = vs.clone();
            perm.rotate_left(rot);
            perm.swap(0, 3);
            let center = pv(&[0.2, -0.1, 0.3]);
            for cfg in all_kinds() {
                let a = cfg.aggregate(&vs, 1, Some(&center)).unwrap();
                let b = cfg.aggregate(&perm, 1, Some(&center)).unwrap();
                prop_assert!(close(&a, &b, 1e-6), "{:?}", cfg.kind);
            }
        }

        #[test]
        fn translation_and_scaling(xs in instance(5, 2), t in prop::collection::vec(-3.0f64..3.0, 2), c in 0.1f64..10.0) {
            let vs: Vec<_> = xs.iter().map(|x| pv(x)).collect();
            let tv = pv(&t);
            let shifted: Vec<_> = vs.iter().map(|v| v.add(&tv).unwrap()).collect();
            let scaled: Vec<_> = vs.iter().map(|v| v.scale(c).unwrap()).collect();
            let center = pv(&[0.5, 0.5]);
            for cfg in all_kinds() {
                let base = cfg.aggregate(&vs, 1, Some(&center)).unwrap();
                let moved = cfg.aggregate(&shifted, 1, Some(&center.add(&tv).unwrap())).unwrap();
                prop_assert!(close(&moved, &base.add(&tv).unwrap(), 1e-6), "translation {:?}", cfg.kind);
                let mut sc = cfg.clone();
                sc.cc_radius *= c;
                let s = sc.aggregate(&scaled, 1, Some(&center.scale(c).unwrap())).unwrap();
                prop_assert!(close(&s, &base.scale(c).unwrap(), 1e-6 * c.max(1.0)), "scaling {:?}", cfg.kind);
            }
            let k0 = krum_select(&vs, 1).unwrap();
            let ks: Vec<_> = vs.iter().map(|v| v.add(&tv).unwrap()).collect();
            prop_assert_eq!(krum_select(&ks, 1).unwrap(), k0);
        }

        #[test]
        fn idempotent_on_identical_inputs(v in prop::collection::vec(-5.0f64..5.0, 3), m in 4usize..9) {
            let v = pv(&v);
            let vs = vec![v.clone(); m];
            for cfg in all_kinds() {
                let out = cfg.aggregate(&vs, 1, Some(&v)).unwrap();
                prop_assert!(close(&out, &v, 1e-9));
            }
        }

        #[test]
        fn weiszfeld_objective_non_increasing(xs in instance(5, 3)) {
            let vs: Vec<_> = xs.iter().map(|x| pv(x)).collect();
            let r = aggregate_geomed(&vs, 1e-12, 500).unwrap();
            for w in r.objective.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12);
            }
        }
    }
}
