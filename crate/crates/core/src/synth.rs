//! Synthetic company panel with a planted nonlinear rating function.
//!
//! Every company draws from its own ChaCha stream, so its trajectory does
//! not depend on how many other companies are generated. Target
//! coefficients come from a separate stream and are normalized on a fixed
//! calibration panel.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{DataTable, FeatureKind, FeatureSchema, Row, TargetSpec, TargetValue, Value};
use crate::error::{Error, Result};
use crate::metrics::r2;

pub const ESG_TARGET: &str = "esg_score";
pub const E_TARGET: &str = "e_score";
pub const S_TARGET: &str = "s_score";
pub const G_TARGET: &str = "g_score";
pub const CONTROVERSY_TARGET: &str = "controversy";
pub const CONTINUOUS_TARGETS: [&str; 4] = [ESG_TARGET, E_TARGET, S_TARGET, G_TARGET];
pub const INDUSTRY_FEATURE: &str = "industry";
pub const FIRST_YEAR: i32 = 2002;
pub const LAST_YEAR: i32 = 2019;

const CALIBRATION_COMPANIES: usize = 2000;
const CALIBRATION_STREAM: u64 = 1 << 40;
const FRESH_STREAM: u64 = 1 << 41;
const SCORE_CENTER: f64 = 50.0;
const CONTROVERSY_CUT: f64 = 58.0;
const CONTROVERSY_TEMPERATURE: f64 = 6.0;

/// Categorical features in emission order (extra ones are pure noise).
const CATEGORICAL_NAMES: [&str; 8] = [
    "industry",
    "country",
    "exchange",
    "auditor",
    "size_band",
    "segment",
    "legal_form",
    "region_code",
];
const AUDITORS: usize = 150;
const REGION_CODES: usize = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticConfig {
    pub n_companies: usize,
    pub min_years: usize,
    pub max_years: usize,
    pub n_numerical: usize,
    pub n_categorical: usize,
    pub n_industries: usize,
    pub n_countries: usize,
    /// Score-unit sd of the noiseless signal of the ESG, E and S targets.
    pub signal_sd: f64,
    /// G-like signal sd as a fraction of `signal_sd`.
    pub governance_signal_ratio: f64,
    pub noise_sd: f64,
    pub zero_mass_fraction: f64,
    pub missing_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_companies: 800,
            min_years: 5,
            max_years: 5,
            n_numerical: 40,
            n_categorical: 8,
            n_industries: 10,
            n_countries: 20,
            signal_sd: 16.0,
            governance_signal_ratio: 0.45,
            noise_sd: 10.0,
            zero_mass_fraction: 0.228,
            missing_fraction: 0.05,
            seed: 42,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("invalid synthetic config: {m}")));
        if self.n_companies == 0 || self.n_numerical == 0 || self.n_categorical == 0 {
            return bad("company, numerical and categorical counts must be >= 1".into());
        }
        if self.n_industries == 0 || self.n_countries == 0 {
            return bad("industry and country counts must be >= 1".into());
        }
        let span = (LAST_YEAR - FIRST_YEAR + 1) as usize;
        if self.min_years == 0 || self.min_years > self.max_years || self.max_years > span {
            return bad(format!("years per company must satisfy 1 <= min <= max <= {span}"));
        }
        if !(0.0..1.0).contains(&self.zero_mass_fraction) {
            return bad("zero_mass_fraction must be in [0, 1)".into());
        }
        if !(0.0..1.0).contains(&self.missing_fraction) {
            return bad("missing_fraction must be in [0, 1)".into());
        }
        if !(self.noise_sd >= 0.0 && self.signal_sd >= 0.0 && self.governance_signal_ratio >= 0.0) {
            return bad("noise and signal scales must be >= 0".into());
        }
        Ok(())
    }

    pub fn numerical_names(&self) -> Vec<String> {
        (0..self.n_numerical).map(|j| format!("x{j:02}")).collect()
    }

    pub fn categorical_names(&self) -> Vec<String> {
        (0..self.n_categorical)
            .map(|k| match CATEGORICAL_NAMES.get(k) {
                Some(n) => n.to_string(),
                None => format!("cat_{k:02}"),
            })
            .collect()
    }

    pub fn schema(&self) -> Result<FeatureSchema> {
        let mut features: Vec<(String, FeatureKind)> = self
            .numerical_names()
            .into_iter()
            .map(|n| (n, FeatureKind::Numerical))
            .collect();
        features.extend(
            self.categorical_names()
                .into_iter()
                .map(|n| (n, FeatureKind::Categorical)),
        );
        let mut targets: Vec<(String, TargetSpec)> = CONTINUOUS_TARGETS
            .iter()
            .map(|t| (t.to_string(), TargetSpec::score()))
            .collect();
        targets.push((
            CONTROVERSY_TARGET.into(),
            TargetSpec::Categorical {
                classes: vec!["no".into(), "yes".into()],
            },
        ));
        FeatureSchema::new(features, targets)
    }

    /// Latent features the rating functions may use; the last numerical
    /// column is an exact affine copy of `x01` when there are at least three.
    fn signal_features(&self) -> usize {
        if self.n_numerical >= 3 {
            self.n_numerical - 1
        } else {
            self.n_numerical
        }
    }
}

/// Latent state of one observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentRow {
    pub industry: usize,
    pub country: usize,
    pub z: Vec<f64>,
}

/// `score = intercept + base(industry, country) + linear + products +
/// thresholds + squares + industry-specific slope`, before noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetFunction {
    pub intercept: f64,
    pub industry_effects: Vec<f64>,
    pub country_effects: Vec<f64>,
    pub linear: Vec<(usize, f64)>,
    pub products: Vec<(usize, usize, f64)>,
    /// `(feature, tau, coef)`: adds `coef` when `z > tau`.
    pub thresholds: Vec<(usize, f64, f64)>,
    /// `(feature, coef)`: adds `coef * (z^2 - 1)`.
    pub squares: Vec<(usize, f64)>,
    pub slope_feature: usize,
    pub industry_slopes: Vec<f64>,
}

/// Share of signal variance per component group.
const SHARES: [f64; 6] = [0.12, 0.18, 0.20, 0.20, 0.20, 0.10];

impl TargetFunction {
    fn components(&self, row: &LatentRow) -> [f64; 6] {
        let z = &row.z;
        [
            self.industry_effects[row.industry] + self.country_effects[row.country],
            self.linear.iter().map(|&(j, c)| c * z[j]).sum(),
            self.products.iter().map(|&(i, j, c)| c * z[i] * z[j]).sum(),
            self.thresholds
                .iter()
                .map(|&(j, tau, c)| if z[j] > tau { c } else { 0.0 })
                .sum(),
            self.squares.iter().map(|&(j, c)| c * (z[j] * z[j] - 1.0)).sum(),
            self.industry_slopes[row.industry] * z[self.slope_feature],
        ]
    }

    /// Noiseless, unclamped score.
    pub fn raw(&self, row: &LatentRow) -> f64 {
        self.intercept + self.components(row).iter().sum::<f64>()
    }

    fn draw(rng: &mut ChaCha8Rng, config: &SyntheticConfig) -> Self {
        let m = config.signal_features();
        let mut normal = || -> f64 { StandardNormal.sample(rng) };
        let industry_effects = (0..config.n_industries).map(|_| normal()).collect();
        let country_effects = (0..config.n_countries).map(|_| normal()).collect();
        let coef = |rng: &mut ChaCha8Rng| -> f64 {
            let c: f64 = StandardNormal.sample(rng);
            c.signum() * (0.5 + c.abs())
        };
        let linear = (0..6).map(|_| (rng.random_range(0..m), coef(rng))).collect();
        let products = (0..4)
            .map(|_| {
                let i = rng.random_range(0..m);
                let j = if m > 1 { (i + rng.random_range(1..m)) % m } else { i };
                (i, j, coef(rng))
            })
            .collect();
        let thresholds = (0..5)
            .map(|_| (rng.random_range(0..m), rng.random_range(-0.8..0.8), coef(rng)))
            .collect();
        let squares = (0..3).map(|_| (rng.random_range(0..m), coef(rng))).collect();
        let slope_feature = rng.random_range(0..m);
        let industry_slopes = (0..config.n_industries).map(|_| StandardNormal.sample(rng)).collect();
        TargetFunction {
            intercept: 0.0,
            industry_effects,
            country_effects,
            linear,
            products,
            thresholds,
            squares,
            slope_feature,
            industry_slopes,
        }
    }

    /// Rescales each component group to its variance share of `signal_sd^2`
    /// on `rows`, then centers the score at 50.
    fn normalize(&mut self, rows: &[LatentRow], signal_sd: f64) {
        let n = rows.len() as f64;
        let comps: Vec<[f64; 6]> = rows.iter().map(|r| self.components(r)).collect();
        let mut factors = [0.0; 6];
        for (k, factor) in factors.iter_mut().enumerate() {
            let mean = comps.iter().map(|c| c[k]).sum::<f64>() / n;
            let var = comps.iter().map(|c| (c[k] - mean).powi(2)).sum::<f64>() / n;
            *factor = if var > 0.0 {
                signal_sd * SHARES[k].sqrt() / var.sqrt()
            } else {
                0.0
            };
        }
        let scale = |v: &mut [f64], f: f64| v.iter_mut().for_each(|x| *x *= f);
        scale(&mut self.industry_effects, factors[0]);
        scale(&mut self.country_effects, factors[0]);
        self.linear.iter_mut().for_each(|t| t.1 *= factors[1]);
        self.products.iter_mut().for_each(|t| t.2 *= factors[2]);
        self.thresholds.iter_mut().for_each(|t| t.2 *= factors[3]);
        self.squares.iter_mut().for_each(|t| t.1 *= factors[4]);
        scale(&mut self.industry_slopes, factors[5]);
        let mean = rows.iter().map(|r| self.raw(r)).sum::<f64>() / n;
        self.intercept = SCORE_CENTER - mean;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub config: SyntheticConfig,
    pub functions: BTreeMap<String, TargetFunction>,
    /// Noisy E-like scores at or below this value were set to 0.
    pub e_floor_threshold: f64,
    /// R² of the noiseless function against noisy targets on a fresh panel.
    pub bayes_r2: BTreeMap<String, f64>,
}

impl GroundTruth {
    /// Noiseless score in `[0, 100]`, including the E-like floor.
    pub fn noiseless(&self, target: &str, row: &LatentRow) -> Result<f64> {
        let f = self
            .functions
            .get(target)
            .ok_or_else(|| Error::Config(format!("no ground truth for target {target:?}")))?;
        let raw = f.raw(row);
        if target == E_TARGET && raw <= self.e_floor_threshold {
            return Ok(0.0);
        }
        Ok(raw.clamp(0.0, 100.0))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Generated table plus the latent state behind every row.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticData {
    pub table: DataTable,
    pub truth: GroundTruth,
    pub latent: Vec<LatentRow>,
}

/// One company's rows before targets are attached.
struct CompanyDraw {
    company: String,
    years: Vec<i32>,
    latent: Vec<LatentRow>,
    features: Vec<Vec<Value>>,
    /// Standard-normal draws for the four continuous targets, per row.
    noise: Vec<[f64; 4]>,
    /// Uniform draw deciding the binary target, per row.
    coin: Vec<f64>,
}

/// Industry-level mean shift of every latent feature.
fn industry_profiles(rng: &mut ChaCha8Rng, config: &SyntheticConfig) -> Vec<Vec<f64>> {
    let shift = Normal::new(0.0, 0.5).expect("valid sd");
    (0..config.n_industries)
        .map(|_| (0..config.n_numerical).map(|_| shift.sample(rng)).collect())
        .collect()
}

/// Observed-unit transforms `(log_scale, scale, location)` per feature.
fn feature_units(rng: &mut ChaCha8Rng, config: &SyntheticConfig) -> Vec<(bool, f64, f64)> {
    (0..config.n_numerical)
        .map(|j| (j % 4 == 0, rng.random_range(0.5..5.0), 10.0 * gauss(rng)))
        .collect()
}

struct Shared {
    profiles: Vec<Vec<f64>>,
    units: Vec<(bool, f64, f64)>,
}

fn company_id(index: usize, width: usize) -> String {
    format!("C{index:0width$}")
}

fn draw_company(config: &SyntheticConfig, shared: &Shared, stream: u64, id: String) -> CompanyDraw {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(stream);
    let industry = rng.random_range(0..config.n_industries);
    let country = rng.random_range(0..config.n_countries);
    let n_years = rng.random_range(config.min_years..=config.max_years);
    let latest_start = LAST_YEAR - n_years as i32 + 1;
    let start = rng.random_range(FIRST_YEAR..=latest_start);
    let base: Vec<f64> = shared.profiles[industry].iter().map(|m| m + gauss(&mut rng)).collect();
    let drift: Vec<f64> = (0..config.n_numerical).map(|_| 0.3 * gauss(&mut rng)).collect();
    let auditor = rng.random_range(0..AUDITORS);
    let segment = rng.random_range(0..6);
    let legal_form = rng.random_range(0..3);
    // Skewed so that the tail codes are rare.
    let u: f64 = rng.random();
    let region = ((REGION_CODES as f64) * u * u * u) as usize;
    let extra: Vec<usize> = (8..config.n_categorical.max(8))
        .map(|_| rng.random_range(0..5))
        .collect();

    let mut out = CompanyDraw {
        company: id,
        years: Vec::new(),
        latent: Vec::new(),
        features: Vec::new(),
        noise: Vec::new(),
        coin: Vec::new(),
    };
    for t in 0..n_years {
        let progress = if n_years > 1 {
            t as f64 / (n_years - 1) as f64
        } else {
            0.0
        };
        let z: Vec<f64> = (0..config.n_numerical)
            .map(|j| base[j] + drift[j] * progress + 0.4 * gauss(&mut rng))
            .collect();
        let mut values: Vec<Value> = z
            .iter()
            .zip(&shared.units)
            .map(|(&v, &(log, scale, loc))| Value::Num(if log { (v).exp() } else { scale * v + loc }))
            .collect();
        if config.n_numerical >= 3 {
            let copy = match values[1] {
                Value::Num(v) => 3.0 * v + 2.0,
                _ => unreachable!("fresh values are present"),
            };
            values[config.n_numerical - 1] = Value::Num(copy);
        }
        let size = z[0];
        let size_band = match size {
            s if s < -1.0 => "S",
            s if s < 0.0 => "M",
            s if s < 1.0 => "L",
            _ => "XL",
        };
        for (k, name) in config.categorical_names().iter().enumerate() {
            let token = match name.as_str() {
                "industry" => format!("IND{:02}", industry + 1),
                "country" => format!("CTY{:02}", country + 1),
                "exchange" => format!("EX{}", country % 4 + 1),
                "auditor" => format!("AUD{:03}", auditor + 1),
                "size_band" => size_band.to_string(),
                "segment" => format!("SEG{}", segment + 1),
                "legal_form" => ["PLC", "AG", "INC"][legal_form].to_string(),
                "region_code" => format!("R{:02}", region + 1),
                _ => format!("V{}", extra[k - 8] + 1),
            };
            values.push(Value::Cat(token));
        }
        let noise = [(); 4].map(|_| StandardNormal.sample(&mut rng));
        let coin = rng.random();
        for v in values.iter_mut() {
            if rng.random::<f64>() < config.missing_fraction {
                *v = Value::Missing;
            }
        }
        out.years.push(start + t as i32);
        out.latent.push(LatentRow { industry, country, z });
        out.features.push(values);
        out.noise.push(noise);
        out.coin.push(coin);
    }
    out
}

fn gauss(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// Draws coefficients (stream 0) and normalizes them on the calibration
/// panel.
fn draw_truth(config: &SyntheticConfig, shared: &Shared) -> BTreeMap<String, TargetFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0);
    let _ = industry_profiles(&mut rng, config);
    let _ = feature_units(&mut rng, config);
    let calibration: Vec<LatentRow> = (0..CALIBRATION_COMPANIES)
        .flat_map(|i| draw_company(config, shared, CALIBRATION_STREAM + i as u64, String::new()).latent)
        .collect();
    let mut out = BTreeMap::new();
    for name in CONTINUOUS_TARGETS.iter().chain([&CONTROVERSY_TARGET]) {
        let mut f = TargetFunction::draw(&mut rng, config);
        let sd = if *name == G_TARGET {
            config.signal_sd * config.governance_signal_ratio
        } else {
            config.signal_sd
        };
        f.normalize(&calibration, sd);
        out.insert(name.to_string(), f);
    }
    out
}

fn shared_state(config: &SyntheticConfig) -> Shared {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(0);
    Shared {
        profiles: industry_profiles(&mut rng, config),
        units: feature_units(&mut rng, config),
    }
}

/// Noisy continuous scores (before the E floor) and binary labels.
fn noisy_targets(
    functions: &BTreeMap<String, TargetFunction>,
    config: &SyntheticConfig,
    latent: &LatentRow,
    noise: &[f64; 4],
    coin: f64,
) -> ([f64; 4], bool) {
    let mut scores = [0.0; 4];
    for (k, name) in CONTINUOUS_TARGETS.iter().enumerate() {
        scores[k] = functions[*name].raw(latent) + config.noise_sd * noise[k];
    }
    let p = sigmoid((functions[CONTROVERSY_TARGET].raw(latent) - CONTROVERSY_CUT) / CONTROVERSY_TEMPERATURE);
    (scores, coin < p)
}

/// Smallest value such that `fraction` of `values` lie at or below it.
fn floor_threshold(values: &[f64], fraction: f64) -> f64 {
    let k = (fraction * values.len() as f64).round() as usize;
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted[k - 1]
}

fn apply_floor(score: f64, threshold: f64) -> f64 {
    if score <= threshold {
        0.0
    } else {
        score.clamp(0.0, 100.0)
    }
}

/// Generates the panel and its ground truth.
pub fn generate(config: &SyntheticConfig) -> Result<SyntheticData> {
    config.validate()?;
    let shared = shared_state(config);
    let functions = draw_truth(config, &shared);
    let width = config.n_companies.to_string().len().max(4);
    let companies: Vec<CompanyDraw> = (0..config.n_companies)
        .map(|i| draw_company(config, &shared, i as u64 + 1, company_id(i + 1, width)))
        .collect();

    let mut noisy = Vec::new();
    for c in &companies {
        for ((latent, noise), &coin) in c.latent.iter().zip(&c.noise).zip(&c.coin) {
            noisy.push(noisy_targets(&functions, config, latent, noise, coin));
        }
    }
    let e_scores: Vec<f64> = noisy.iter().map(|(s, _)| s[1]).collect();
    let threshold = floor_threshold(&e_scores, config.zero_mass_fraction);

    let mut rows = Vec::with_capacity(noisy.len());
    let mut latent_rows = Vec::with_capacity(noisy.len());
    let mut noisy = noisy.into_iter();
    for c in companies {
        for ((year, latent), features) in c.years.into_iter().zip(c.latent).zip(c.features) {
            let (scores, flag) = noisy.next().expect("one target draw per row");
            let mut targets: Vec<TargetValue> = scores
                .iter()
                .enumerate()
                .map(|(k, &s)| {
                    TargetValue::Num(if k == 1 {
                        apply_floor(s, threshold)
                    } else {
                        s.clamp(0.0, 100.0)
                    })
                })
                .collect();
            targets.push(TargetValue::Label(if flag { "yes" } else { "no" }.into()));
            rows.push(Row {
                company: c.company.clone(),
                year,
                features,
                targets,
            });
            latent_rows.push(latent);
        }
    }
    let table = DataTable::new(config.schema()?, rows)?;
    let mut truth = GroundTruth {
        config: config.clone(),
        functions,
        e_floor_threshold: threshold,
        bayes_r2: BTreeMap::new(),
    };
    truth.bayes_r2 = bayes_r2_with(&truth, &shared)?;
    Ok(SyntheticData {
        table,
        truth,
        latent: latent_rows,
    })
}

fn bayes_r2_with(truth: &GroundTruth, shared: &Shared) -> Result<BTreeMap<String, f64>> {
    let config = &truth.config;
    let n = config.n_companies.max(CALIBRATION_COMPANIES);
    let mut clean: Vec<Vec<f64>> = vec![Vec::new(); 4];
    let mut noisy: Vec<Vec<f64>> = vec![Vec::new(); 4];
    for i in 0..n {
        let c = draw_company(config, shared, FRESH_STREAM + i as u64, String::new());
        for ((latent, noise), &coin) in c.latent.iter().zip(&c.noise).zip(&c.coin) {
            let (scores, _) = noisy_targets(&truth.functions, config, latent, noise, coin);
            for (k, name) in CONTINUOUS_TARGETS.iter().enumerate() {
                clean[k].push(truth.noiseless(name, latent)?);
                noisy[k].push(if k == 1 {
                    apply_floor(scores[k], truth.e_floor_threshold)
                } else {
                    scores[k].clamp(0.0, 100.0)
                });
            }
        }
    }
    CONTINUOUS_TARGETS
        .iter()
        .enumerate()
        .map(|(k, name)| Ok((name.to_string(), r2(&noisy[k], &clean[k])?)))
        .collect()
}

/// Ceiling R² per continuous target on a fresh panel.
pub fn bayes_r2(config: &SyntheticConfig) -> Result<BTreeMap<String, f64>> {
    Ok(generate(config)?.truth.bayes_r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticConfig {
        SyntheticConfig {
            n_companies: 60,
            n_numerical: 6,
            ..SyntheticConfig::default()
        }
    }

    #[test]
    fn shape_and_industry_persistence() {
        let data = generate(&small()).unwrap();
        assert_eq!(data.table.len(), 300);
        let col = data.table.schema().feature_index(INDUSTRY_FEATURE).unwrap();
        let mut seen: BTreeMap<&str, usize> = BTreeMap::new();
        for (row, latent) in data.table.rows().iter().zip(&data.latent) {
            assert_eq!(*seen.entry(&row.company).or_insert(latent.industry), latent.industry);
            if let Value::Cat(t) = &row.features[col] {
                assert_eq!(t, &format!("IND{:02}", latent.industry + 1));
            }
        }
    }

    #[test]
    fn company_streams_are_independent() {
        let a = generate(&small()).unwrap();
        let b = generate(&SyntheticConfig {
            n_companies: 30,
            ..small()
        })
        .unwrap();
        let n = b.table.len();
        assert_eq!(&a.latent[..n], &b.latent[..]);
        for (ra, rb) in a.table.rows()[..n].iter().zip(b.table.rows()) {
            assert_eq!(ra.features, rb.features);
        }
    }

    #[test]
    fn noiseless_limit() {
        let cfg = SyntheticConfig {
            noise_sd: 0.0,
            ..small()
        };
        let data = generate(&cfg).unwrap();
        for name in CONTINUOUS_TARGETS {
            let y = data.table.continuous_target(name).unwrap();
            for (v, latent) in y.iter().zip(&data.latent) {
                assert_eq!(*v, data.truth.noiseless(name, latent).unwrap());
            }
            assert!((data.truth.bayes_r2[name] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_and_range() {
        let data = generate(&small()).unwrap();
        let e = data.table.continuous_target(E_TARGET).unwrap();
        let zeros = e.iter().filter(|&&v| v == 0.0).count() as f64 / e.len() as f64;
        assert!((zeros - 0.228).abs() < 0.02, "zero share {zeros}");
        for name in CONTINUOUS_TARGETS {
            assert!(data
                .table
                .continuous_target(name)
                .unwrap()
                .iter()
                .all(|v| (0.0..=100.0).contains(v)));
        }
    }

    #[test]
    fn governance_is_harder() {
        let b = generate(&small()).unwrap().truth.bayes_r2;
        assert!(b[G_TARGET] < b[ESG_TARGET]);
    }
}
