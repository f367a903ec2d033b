use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use pinyin_gender::neural::{LossSwitches, TokenizerMode, TrainConfig};
use pinyin_gender::{Error, Result};

pub const KNOWN_KEYS: &[&str] = &[
    "seed",
    "dim",
    "max_len",
    "batch_size",
    "learning_rate",
    "beta1",
    "beta2",
    "epsilon",
    "epochs",
    "tokenizer",
    "detach_teacher",
    "min_count",
    "use_pre",
    "use_name",
    "use_feature",
    "use_response",
    "lexicon",
    "data",
    "val",
    "test",
    "checkpoint",
    "predictions",
    "trace",
];

/// Parsed `key = value` file.
#[derive(Debug, Clone, Default)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!(
                    "line {}: expected `key = value`, got {line:?}",
                    i + 1
                )));
            };
            let key = key.trim();
            if !KNOWN_KEYS.contains(&key) {
                return Err(Error::Config(format!(
                    "line {}: unknown key {key:?}",
                    i + 1
                )));
            }
            if values
                .insert(key.to_string(), value.trim().to_string())
                .is_some()
            {
                return Err(Error::Config(format!(
                    "line {}: duplicate key {key:?}",
                    i + 1
                )));
            }
        }
        Ok(Self { values })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Config(format!("bad value {v:?} for {key}"))),
        }
    }

    pub fn path(&self, key: &str) -> Option<PathBuf> {
        self.values.get(key).map(PathBuf::from)
    }
}

/// Training options given on the command line; `None` defers to the file.
#[derive(Debug, Clone, Default)]
pub struct TrainOverrides {
    pub seed: Option<u64>,
    pub dim: Option<usize>,
    pub max_len: Option<usize>,
    pub batch_size: Option<usize>,
    pub learning_rate: Option<f64>,
    pub epochs: Option<usize>,
    pub tokenizer: Option<TokenizerMode>,
    pub min_count: Option<usize>,
    pub joint_teacher: bool,
    pub no_pre: bool,
    pub no_name: bool,
    pub no_feature: bool,
    pub no_response: bool,
}

/// Defaults, then the config file, then command-line flags.
pub fn resolve_train_config(file: &ConfigFile, flags: &TrainOverrides) -> Result<TrainConfig> {
    let d = TrainConfig::default();
    let pick = |flag: Option<usize>, key: &str, default: usize| -> Result<usize> {
        Ok(flag.or(file.get(key)?).unwrap_or(default))
    };
    let pickf = |key: &str, default: f64| -> Result<f64> { Ok(file.get(key)?.unwrap_or(default)) };
    let switch = |off: bool, key: &str| -> Result<bool> {
        Ok(!off && file.get::<bool>(key)?.unwrap_or(true))
    };
    let config = TrainConfig {
        dim: pick(flags.dim, "dim", d.dim)?,
        max_len: pick(flags.max_len, "max_len", d.max_len)?,
        batch_size: pick(flags.batch_size, "batch_size", d.batch_size)?,
        learning_rate: flags
            .learning_rate
            .map_or_else(|| pickf("learning_rate", d.learning_rate), Ok)?,
        beta1: pickf("beta1", d.beta1)?,
        beta2: pickf("beta2", d.beta2)?,
        epsilon: pickf("epsilon", d.epsilon)?,
        epochs: pick(flags.epochs, "epochs", d.epochs)?,
        seed: flags.seed.or(file.get("seed")?).unwrap_or(d.seed),
        switches: LossSwitches {
            pre: switch(flags.no_pre, "use_pre")?,
            name: switch(flags.no_name, "use_name")?,
            feature: switch(flags.no_feature, "use_feature")?,
            response: switch(flags.no_response, "use_response")?,
        },
        tokenizer: match flags.tokenizer {
            Some(t) => t,
            None => file.get("tokenizer")?.unwrap_or(d.tokenizer),
        },
        detach_teacher: !flags.joint_teacher
            && file
                .get::<bool>("detach_teacher")?
                .unwrap_or(d.detach_teacher),
        min_count: pick(flags.min_count, "min_count", d.min_count)?,
        track_train_accuracy: false,
    };
    config.validate()?;
    Ok(config)
}

/// One line that reproduces the run.
pub fn banner(command: &str, config: &TrainConfig, extra: &[(&str, String)]) -> String {
    let s = config.switches;
    let mut parts = vec![
        format!("seed={}", config.seed),
        format!("dim={}", config.dim),
        format!("max_len={}", config.max_len),
        format!("batch_size={}", config.batch_size),
        format!("learning_rate={}", config.learning_rate),
        format!("beta1={}", config.beta1),
        format!("beta2={}", config.beta2),
        format!("epsilon={}", config.epsilon),
        format!("epochs={}", config.epochs),
        format!("tokenizer={}", config.tokenizer),
        format!("detach_teacher={}", config.detach_teacher),
        format!("min_count={}", config.min_count),
        format!("use_pre={}", s.pre),
        format!("use_name={}", s.name),
        format!("use_feature={}", s.feature),
        format!("use_response={}", s.response),
    ];
    parts.extend(extra.iter().map(|(k, v)| format!("{k}={v}")));
    format!("# {command}: {}", parts.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_then_flags() {
        let file = ConfigFile::parse("# run\ndim = 16\nepochs=3\nuse_response = false\n").unwrap();
        let c = resolve_train_config(&file, &TrainOverrides::default()).unwrap();
        assert_eq!((c.dim, c.epochs), (16, 3));
        assert!(!c.switches.response && c.switches.feature);
        let flags = TrainOverrides {
            dim: Some(8),
            no_pre: true,
            ..Default::default()
        };
        let c = resolve_train_config(&file, &flags).unwrap();
        assert_eq!(c.dim, 8);
        assert!(!c.switches.pre);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        assert!(ConfigFile::parse("colour = red").is_err());
        assert!(ConfigFile::parse("dim 16").is_err());
        assert!(ConfigFile::parse("dim = 1\ndim = 2").is_err());
        let file = ConfigFile::parse("dim = many").unwrap();
        assert!(resolve_train_config(&file, &TrainOverrides::default()).is_err());
    }
}
