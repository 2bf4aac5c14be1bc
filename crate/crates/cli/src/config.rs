use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chrono::{Datelike, NaiveDate};
use serde::Deserialize;

use reserve_insure::io::{fit_monthly, read_prices_file, read_wind_file, DayPrices};
use reserve_insure::network::NetworkCase;
use reserve_insure::scenario::{synthetic_input, PenaltySpec, StudyConfig, StudyInput};
use reserve_insure::{Error, FittedModel, RenewableModel, Result, StorageParams};

/// Settings shared by every subcommand. Loaded from `--config` (JSON);
/// command-line flags override individual fields. Relative paths are
/// resolved against the config file's directory.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub scenarios: Option<usize>,
    pub out: Option<PathBuf>,
    pub svg: Option<bool>,
    pub prices: Option<PathBuf>,
    pub wind: Option<PathBuf>,
    pub model: Option<PathBuf>,
    pub case: Option<PathBuf>,
    /// Slots per day in price files (default 24).
    pub slots: Option<usize>,
    /// Month whose wind model applies to undated price files.
    pub month: Option<u32>,
    pub months: Option<Vec<u32>>,
    pub storage: Option<StorageParams>,
    pub penalty: Option<PenaltySpec>,
    pub wind_capacity: Option<f64>,
    pub peak_residual_mw: Option<f64>,
    pub clip_samples: Option<bool>,
    /// Reserve price for `classify` (default: the day's arbitrage peak price).
    pub pi: Option<f64>,
    /// Reserve price paid in `twoway` (default 0).
    pub pi_r: Option<f64>,
    /// Number of π_e points in the `twoway` sweep.
    pub pi_e_steps: Option<usize>,
    /// Slot for `twoway` (default: the peak-price slot).
    pub slot: Option<usize>,
    /// Reserve held during the `twoway` sweep (MWh).
    pub reserve: Option<f64>,
    /// λ/λ_p used by `network` and `matrix`.
    pub lambda_ratio: Option<f64>,
    pub line_scale: Option<f64>,
    /// Use a generated year of prices and wind instead of files.
    pub synthetic_year: Option<i32>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Data(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.out, &mut cfg.prices, &mut cfg.wind, &mut cfg.model, &mut cfg.case]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn storage(&self) -> StorageParams {
        self.storage.clone().unwrap_or_else(|| StorageParams::ideal(12.0, 7.0))
    }

    pub fn penalty(&self) -> PenaltySpec {
        self.penalty.unwrap_or_default()
    }

    fn existing(path: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
        let p = path
            .clone()
            .ok_or_else(|| Error::Argument(format!("no {what} given (use --{what} or the config)")))?;
        if !p.exists() {
            return Err(Error::Data(format!("{what} file {} does not exist", p.display())));
        }
        Ok(p)
    }

    pub fn price_days(&self) -> Result<Vec<DayPrices>> {
        let p = Self::existing(&self.prices, "prices")?;
        read_prices_file(&p, self.slots.unwrap_or(24))
    }

    pub fn wind_path(&self) -> Result<PathBuf> {
        Self::existing(&self.wind, "wind")
    }

    pub fn models(&self) -> Result<ModelSet> {
        if let Some(p) = &self.model {
            let p = Self::existing(&Some(p.clone()), "model")?;
            let text = std::fs::read_to_string(&p)?;
            return ModelSet::from_json(&text)
                .map_err(|e| Error::Data(format!("model {}: {e}", p.display())));
        }
        if self.wind.is_some() {
            let data = read_wind_file(&self.wind_path()?)?;
            let fitted = fit_monthly(&data, self.wind_capacity)?;
            return Ok(ModelSet::Monthly(
                fitted.into_iter().map(|(m, f)| (m, f.model)).collect(),
            ));
        }
        Err(Error::Argument("no renewable model given (use --model or --wind)".into()))
    }

    pub fn case(&self) -> Result<NetworkCase> {
        let case = match &self.case {
            Some(p) => {
                let p = Self::existing(&Some(p.clone()), "case")?;
                NetworkCase::from_json(&std::fs::read_to_string(p)?)?
            }
            None => NetworkCase::ieee14_modified(),
        };
        let mut case = match self.line_scale {
            Some(f) => case.with_line_scale(f),
            None => case,
        };
        if let (Some(r), Some(w)) = (self.lambda_ratio, case.wind.as_mut()) {
            w.lambda_ratio = r;
        }
        Ok(case)
    }

    pub fn lambda_ratio(&self, case: &NetworkCase) -> f64 {
        self.lambda_ratio
            .or_else(|| case.wind.as_ref().map(|w| w.lambda_ratio))
            .unwrap_or(0.4)
    }

    pub fn study(&self) -> Result<(StudyConfig, StudyInput)> {
        let mut sc = StudyConfig::new(self.storage());
        sc.seed = self.seed();
        if let Some(n) = self.scenarios {
            sc.n_scenarios = n;
        }
        sc.penalty = self.penalty();
        sc.months = self.months.clone();
        sc.prices = self.prices.clone();
        sc.wind = self.wind.clone();
        sc.wind_capacity = self.wind_capacity;
        if let Some(r) = self.peak_residual_mw {
            sc.peak_residual_mw = r;
        }
        if let Some(c) = self.clip_samples {
            sc.clip_samples = c;
        }
        let input = match self.synthetic_year {
            Some(year) => synthetic_input(year, self.seed(), self.wind_capacity.unwrap_or(40.0))?,
            None => {
                let days = self.price_days()?;
                let models = match self.models()? {
                    ModelSet::Single(m) => (1..=12).map(|k| (k, m.clone())).collect(),
                    ModelSet::Monthly(ms) => ms,
                };
                StudyInput { days, models }
            }
        };
        Ok((sc, input))
    }
}

/// Renewable models as read from a model file or fitted from wind data.
#[derive(Debug, Clone)]
pub enum ModelSet {
    Single(RenewableModel),
    Monthly(BTreeMap<u32, RenewableModel>),
}

impl ModelSet {
    /// Accepts a single model (`{"slots": …, "capacity": …}`) or a map from
    /// month to model, where each model may be wrapped as `fit` writes it.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(text)?;
        let set = if v.get("slots").is_some() {
            ModelSet::Single(serde_json::from_value(v)?)
        } else {
            let obj = v
                .as_object()
                .ok_or_else(|| Error::Data("expected a JSON object".into()))?;
            let mut ms = BTreeMap::new();
            for (k, m) in obj {
                let month: u32 = k
                    .parse()
                    .map_err(|_| Error::Data(format!("month key '{k}' is not a number")))?;
                let model: RenewableModel = if m.get("model").is_some() {
                    serde_json::from_value::<FittedModel>(m.clone())?.model
                } else {
                    serde_json::from_value(m.clone())?
                };
                ms.insert(month, model);
            }
            ModelSet::Monthly(ms)
        };
        match &set {
            ModelSet::Single(m) => m.validate()?,
            ModelSet::Monthly(ms) => {
                for m in ms.values() {
                    m.validate()?;
                }
            }
        }
        Ok(set)
    }

    /// Model for a price day: by the day's month, else `month`, else the
    /// only model available.
    pub fn for_day(&self, date: Option<NaiveDate>, month: Option<u32>) -> Result<&RenewableModel> {
        match self {
            ModelSet::Single(m) => Ok(m),
            ModelSet::Monthly(ms) => {
                let key = date.map(|d| d.month()).or(month);
                match key {
                    Some(k) => ms
                        .get(&k)
                        .ok_or_else(|| Error::Data(format!("no renewable model for month {k}"))),
                    None if ms.len() == 1 => Ok(ms.values().next().unwrap()),
                    None => Err(Error::Argument(
                        "price file has no dates and several monthly models; pass --month".into(),
                    )),
                }
            }
        }
    }
}
